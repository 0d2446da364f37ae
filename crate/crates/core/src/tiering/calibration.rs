//! Closed-form sampling calibration.
//!
//! A strided sampler with period `P` over a warm-up of `W` records takes
//! about `W / P` samples; `hot_fraction` of them land in a hot set of `K`
//! equally likely pages. The expected number of distinct hot pages seen
//! after `s` such draws is the coupon-collector count `K (1 - (1 - 1/K)^s)`.

use crate::error::{Error, Result};

/// Expected distinct pages after `samples` uniform draws over `k` pages.
pub fn expected_distinct(k: u64, samples: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let k = k as f64;
    k * -(samples * (-1.0 / k).ln_1p()).exp_m1()
}

/// Expected fraction of the hot set a sampler with `period` discovers.
pub fn expected_pebs_coverage(warmup_len: u64, period: u64, k: u64, hot_fraction: f64) -> f64 {
    if k == 0 || period == 0 {
        return 0.0;
    }
    let samples = warmup_len as f64 / period as f64;
    expected_distinct(k, samples * hot_fraction) / k as f64
}

/// Sampling period whose expected hot-set coverage is `target_coverage`.
pub fn calibrate_pebs_period(warmup_len: u64, k: u64, hot_fraction: f64, target_coverage: f64) -> Result<u64> {
    if !(target_coverage > 0.0 && target_coverage < 1.0) || k == 0 || hot_fraction <= 0.0 {
        return Err(Error::Config(format!(
            "cannot calibrate for coverage {target_coverage} over {k} pages"
        )));
    }
    let hot_samples = (-target_coverage).ln_1p() / (-1.0 / k as f64).ln_1p();
    let samples = hot_samples / hot_fraction;
    Ok(((warmup_len as f64 / samples).round() as u64).max(1))
}
