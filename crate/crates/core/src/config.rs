//! Flat `key = value` configuration files.
//!
//! ```text
//! # comment
//! [workload]
//! kind = mmap-bench
//! seed = 42
//!
//! [telemetry]
//! pebs.period = 5692
//! ```
//!
//! Keys are namespaced by their section. Unknown or repeated keys are
//! errors. Any key left out keeps its default; for DLRM workloads the
//! defaults come from the bundled `configs/dlrm_desk.conf`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use crate::codec::Encoding;
use crate::error::{Error, Result};
use crate::telemetry::{NbParams, PebsMode, PebsParams};
use crate::tiering::{ExperimentConfig, HmuParams, TrackerKind};
use crate::workload::{DlrmConfig, MmapBenchConfig, WorkloadConfig};

pub const DLRM_DESK: &str = include_str!("../configs/dlrm_desk.conf");
pub const MMAP_BENCH_DESK: &str = include_str!("../configs/mmap_bench_desk.conf");
pub const MMAP_BENCH_FULL: &str = include_str!("../configs/mmap_bench_full.conf");

/// Everything a config file can set.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub encoding: Encoding,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::parse(text)?;
        let cfg = build(&mut raw)?;
        raw.finish()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Canonical text with every key spelled out; parses back to `self`.
    pub fn to_text(&self) -> String {
        let e = &self.experiment;
        let mut s = String::new();
        let w = &mut s;
        let _ = writeln!(w, "[workload]");
        let _ = writeln!(w, "kind = {}", e.workload.name());
        let _ = writeln!(w, "seed = {}", e.workload.seed());
        let _ = writeln!(w, "page_size = {}", e.workload.page_size());
        match &e.workload {
            WorkloadConfig::MmapBench(m) => {
                let _ = writeln!(w, "tick_ns = {}", m.tick_ns);
                let _ = writeln!(w, "\n[mmap_bench]");
                let _ = writeln!(w, "total_bytes = {}", m.total_bytes);
                let _ = writeln!(w, "hot_bytes = {}", m.hot_bytes);
                let _ = writeln!(w, "hot_access_fraction = {:?}", m.hot_access_fraction);
                let _ = writeln!(w, "n_accesses = {}", m.n_accesses);
            }
            WorkloadConfig::Dlrm(d) => {
                let _ = writeln!(w, "tick_ns = {}", d.tick_ns);
                let _ = writeln!(w, "\n[dlrm]");
                let _ = writeln!(w, "num_rows = {}", d.num_rows);
                let _ = writeln!(w, "row_bytes = {}", d.row_bytes);
                let _ = writeln!(w, "batches = {}", d.batches);
                let _ = writeln!(w, "lookups_per_batch = {}", d.lookups_per_batch);
                let _ = writeln!(w, "zipf_exponent = {:?}", d.zipf_exponent);
                let _ = writeln!(w, "profile_batches = {}", d.profile_batches);
            }
        }
        let t = &e.telemetry;
        let _ = writeln!(w, "\n[telemetry]");
        let _ = writeln!(w, "tracker = {}", e.tracker);
        let _ = writeln!(w, "hmu.counter_max = {}", t.hmu.ceiling);
        if let Some(r) = &t.hmu.range {
            let _ = writeln!(w, "hmu.range_lo = {:#x}", r.start);
            let _ = writeln!(w, "hmu.range_hi = {:#x}", r.end);
        }
        let _ = writeln!(w, "pebs.period = {}", t.pebs.period);
        let _ = writeln!(w, "pebs.phase = {}", t.pebs.phase);
        match t.pebs.mode {
            PebsMode::Strided => {
                let _ = writeln!(w, "pebs.mode = strided");
            }
            PebsMode::Random { seed } => {
                let _ = writeln!(w, "pebs.mode = random");
                let _ = writeln!(w, "pebs.seed = {seed}");
            }
        }
        let _ = writeln!(w, "nb.scan_period = {}", t.nb.scan_period);
        let _ = writeln!(w, "nb.scan_window_pages = {}", t.nb.scan_window_pages);
        let _ = writeln!(w, "nb.scan_start_page = {}", t.nb.scan_start_page);
        let _ = writeln!(w, "nb.iterations = {}", t.nb.iterations);

        let _ = writeln!(w, "\n[tiering]");
        match e.k_budget {
            Some(k) => {
                let _ = writeln!(w, "k_budget = {k}");
            }
            None => {
                let _ = writeln!(w, "k_budget = auto");
            }
        }
        let _ = writeln!(w, "warmup_fraction = {:?}", e.warmup_fraction);
        let _ = writeln!(w, "include_migration = {}", e.include_migration);
        let _ = writeln!(w, "allow_empty = {}", e.allow_empty);
        let _ = writeln!(w, "migration_cost_ns = {}", e.migration_cost_ns);
        let baselines: Vec<_> = e.baselines.iter().map(|b| b.name()).collect();
        let _ = writeln!(w, "baselines = {}", baselines.join(", "));

        let tc = &e.tiers;
        let _ = writeln!(w, "\n[tiers]");
        match tc.host_capacity_pages {
            Some(c) => {
                let _ = writeln!(w, "host.capacity_pages = {c}");
            }
            None => {
                let _ = writeln!(w, "host.capacity_pages = auto");
            }
        }
        let _ = writeln!(w, "host.read_latency_ns = {}", tc.host_read_latency_ns);
        let _ = writeln!(w, "host.write_latency_ns = {}", tc.host_write_latency_ns);
        let _ = writeln!(w, "cxl.capacity_pages = {}", tc.cxl_capacity_pages);
        let _ = writeln!(w, "cxl.read_latency_ns = {}", tc.cxl_read_latency_ns);
        let _ = writeln!(w, "cxl.write_latency_ns = {}", tc.cxl_write_latency_ns);

        let _ = writeln!(w, "\n[output]");
        let _ = writeln!(w, "encoding = {}", self.encoding.name());
        s
    }
}

/// Defaults for the desk-scale DLRM workload, read from the bundled file.
pub fn dlrm_desk_defaults() -> DlrmConfig {
    static DEFAULTS: OnceLock<DlrmConfig> = OnceLock::new();
    DEFAULTS
        .get_or_init(|| {
            let mut raw = RawConfig::parse(DLRM_DESK).expect("bundled DLRM config parses");
            let (seed, page_size, tick) = workload_common(&mut raw).expect("bundled DLRM config");
            dlrm_from(&mut raw, None, seed, page_size, tick).expect("bundled DLRM config is complete")
        })
        .clone()
}

struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = match line.find('#') {
                Some(pos) => &line[..pos],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {lineno}: unterminated section header")))?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {lineno}: expected `key = value`")))?;
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            if entries.insert(key.clone(), (v.trim().to_string(), lineno)).is_some() {
                return Err(Error::Config(format!("line {lineno}: duplicate key {key}")));
            }
        }
        Ok(Self { entries })
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn take_parsed<T>(&mut self, key: &str, parse: impl FnOnce(&str) -> Option<T>) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => parse(&v)
                .map(Some)
                .ok_or_else(|| Error::Config(format!("line {line}: invalid value {v:?} for {key}"))),
        }
    }

    fn u64(&mut self, key: &str) -> Result<Option<u64>> {
        self.take_parsed(key, parse_u64)
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.take_parsed(key, |v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
    }

    fn bool(&mut self, key: &str) -> Result<Option<bool>> {
        self.take_parsed(key, |v| match v {
            "true" | "yes" | "1" => Some(true),
            "false" | "no" | "0" => Some(false),
            _ => None,
        })
    }

    fn string(&mut self, key: &str) -> Option<String> {
        self.take(key).map(|(v, _)| v)
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((k, (_, line))) => Err(Error::Config(format!("line {line}: unknown key {k}"))),
        }
    }
}

fn parse_u64(v: &str) -> Option<u64> {
    let v = v.replace('_', "");
    match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => v.parse().ok(),
    }
}

fn workload_common(raw: &mut RawConfig) -> Result<(Option<u64>, Option<u64>, Option<u64>)> {
    Ok((
        raw.u64("workload.seed")?,
        raw.u64("workload.page_size")?,
        raw.u64("workload.tick_ns")?,
    ))
}

fn dlrm_from(
    raw: &mut RawConfig,
    base: Option<DlrmConfig>,
    seed: Option<u64>,
    page_size: Option<u64>,
    tick: Option<u64>,
) -> Result<DlrmConfig> {
    let complete = base.is_none();
    let need = |v: Option<u64>, key: &str, b: Option<u64>| -> Result<u64> {
        v.or(b)
            .ok_or_else(|| Error::Config(format!("missing {key} in base DLRM config")))
    };
    let b = base.as_ref();
    let cfg = DlrmConfig {
        num_rows: need(raw.u64("dlrm.num_rows")?, "dlrm.num_rows", b.map(|b| b.num_rows))?,
        row_bytes: need(raw.u64("dlrm.row_bytes")?, "dlrm.row_bytes", b.map(|b| b.row_bytes))?,
        batches: need(raw.u64("dlrm.batches")?, "dlrm.batches", b.map(|b| b.batches))?,
        lookups_per_batch: need(
            raw.u64("dlrm.lookups_per_batch")?,
            "dlrm.lookups_per_batch",
            b.map(|b| b.lookups_per_batch),
        )?,
        zipf_exponent: raw
            .f64("dlrm.zipf_exponent")?
            .or(b.map(|b| b.zipf_exponent))
            .ok_or_else(|| Error::Config("missing dlrm.zipf_exponent in base DLRM config".into()))?,
        profile_batches: need(
            raw.u64("dlrm.profile_batches")?,
            "dlrm.profile_batches",
            b.map(|b| b.profile_batches),
        )?,
        seed: need(seed, "workload.seed", b.map(|b| b.seed))?,
        page_size: need(page_size, "workload.page_size", b.map(|b| b.page_size))?,
        tick_ns: need(tick, "workload.tick_ns", b.map(|b| b.tick_ns))?,
    };
    let _ = complete;
    Ok(cfg)
}

fn build(raw: &mut RawConfig) -> Result<RunConfig> {
    let kind = raw.string("workload.kind").unwrap_or_else(|| "mmap-bench".into());
    let (seed, page_size, tick) = workload_common(raw)?;
    let workload = match kind.as_str() {
        "mmap-bench" => {
            let d = MmapBenchConfig::default();
            WorkloadConfig::MmapBench(MmapBenchConfig {
                total_bytes: raw.u64("mmap_bench.total_bytes")?.unwrap_or(d.total_bytes),
                hot_bytes: raw.u64("mmap_bench.hot_bytes")?.unwrap_or(d.hot_bytes),
                hot_access_fraction: raw
                    .f64("mmap_bench.hot_access_fraction")?
                    .unwrap_or(d.hot_access_fraction),
                n_accesses: raw.u64("mmap_bench.n_accesses")?.unwrap_or(d.n_accesses),
                seed: seed.unwrap_or(d.seed),
                page_size: page_size.unwrap_or(d.page_size),
                tick_ns: tick.unwrap_or(d.tick_ns),
            })
        }
        "dlrm" => WorkloadConfig::Dlrm(dlrm_from(raw, Some(dlrm_desk_defaults()), seed, page_size, tick)?),
        other => {
            return Err(Error::Config(format!(
                "unknown workload kind {other:?} (mmap-bench|dlrm)"
            )))
        }
    };
    let tracker = match raw.string("telemetry.tracker") {
        Some(t) => TrackerKind::parse(&t)?,
        None => TrackerKind::Hmu,
    };
    let mut e = ExperimentConfig::new(workload, tracker);

    let mut hmu = HmuParams::default();
    if let Some(c) = raw.u64("telemetry.hmu.counter_max")? {
        hmu.ceiling = c;
    }
    match (raw.u64("telemetry.hmu.range_lo")?, raw.u64("telemetry.hmu.range_hi")?) {
        (None, None) => {}
        (Some(lo), Some(hi)) if lo < hi => hmu.range = Some(lo..hi),
        _ => {
            return Err(Error::Config(
                "hmu.range_lo and hmu.range_hi must both be set with lo < hi".into(),
            ))
        }
    }
    e.telemetry.hmu = hmu;

    let mut pebs: PebsParams = e.telemetry.pebs;
    if let Some(p) = raw.u64("telemetry.pebs.period")? {
        pebs.period = p;
    }
    if let Some(p) = raw.u64("telemetry.pebs.phase")? {
        pebs.phase = p;
    }
    let pebs_seed = raw.u64("telemetry.pebs.seed")?;
    match raw.string("telemetry.pebs.mode").as_deref() {
        None | Some("strided") => {
            if pebs_seed.is_some() {
                return Err(Error::Config("pebs.seed only applies to pebs.mode = random".into()));
            }
        }
        Some("random") => {
            pebs.mode = PebsMode::Random {
                seed: pebs_seed.unwrap_or(0),
            }
        }
        Some(m) => return Err(Error::Config(format!("unknown pebs.mode {m:?} (strided|random)"))),
    }
    e.telemetry.pebs = pebs;

    let mut nb: NbParams = e.telemetry.nb;
    if let Some(v) = raw.u64("telemetry.nb.scan_period")? {
        nb.scan_period = v;
    }
    if let Some(v) = raw.u64("telemetry.nb.scan_window_pages")? {
        nb.scan_window_pages = v;
    }
    if let Some(v) = raw.u64("telemetry.nb.scan_start_page")? {
        nb.scan_start_page = v;
    }
    if let Some(v) = raw.u64("telemetry.nb.iterations")? {
        nb.iterations = v;
    }
    e.telemetry.nb = nb;

    match raw.string("tiering.k_budget").as_deref() {
        None | Some("auto") => {}
        Some(v) => {
            e.k_budget =
                Some(parse_u64(v).ok_or_else(|| Error::Config(format!("invalid value {v:?} for tiering.k_budget")))?)
        }
    }
    if let Some(v) = raw.f64("tiering.warmup_fraction")? {
        e.warmup_fraction = v;
    }
    if let Some(v) = raw.bool("tiering.include_migration")? {
        e.include_migration = v;
    }
    if let Some(v) = raw.bool("tiering.allow_empty")? {
        e.allow_empty = v;
    }
    if let Some(v) = raw.u64("tiering.migration_cost_ns")? {
        e.migration_cost_ns = v;
    }
    if let Some(v) = raw.string("tiering.baselines") {
        e.baselines = parse_baselines(&v)?;
    }

    match raw.string("tiers.host.capacity_pages").as_deref() {
        None | Some("auto") => {}
        Some(v) => {
            e.tiers.host_capacity_pages = Some(
                parse_u64(v)
                    .ok_or_else(|| Error::Config(format!("invalid value {v:?} for tiers.host.capacity_pages")))?,
            )
        }
    }
    if let Some(v) = raw.u64("tiers.host.read_latency_ns")? {
        e.tiers.host_read_latency_ns = v;
    }
    if let Some(v) = raw.u64("tiers.host.write_latency_ns")? {
        e.tiers.host_write_latency_ns = v;
    }
    if let Some(v) = raw.u64("tiers.cxl.capacity_pages")? {
        e.tiers.cxl_capacity_pages = v;
    }
    if let Some(v) = raw.u64("tiers.cxl.read_latency_ns")? {
        e.tiers.cxl_read_latency_ns = v;
    }
    if let Some(v) = raw.u64("tiers.cxl.write_latency_ns")? {
        e.tiers.cxl_write_latency_ns = v;
    }

    let encoding = match raw.string("output.encoding") {
        Some(v) => Encoding::parse(&v)?,
        None => Encoding::Raw16,
    };
    Ok(RunConfig {
        experiment: e,
        encoding,
    })
}

/// Comma-separated tracker names; `none` alone or an empty list means no
/// baselines only when written as an empty string.
pub fn parse_baselines(v: &str) -> Result<Vec<TrackerKind>> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let k = TrackerKind::parse(part)?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(
            c.experiment.workload,
            WorkloadConfig::MmapBench(MmapBenchConfig::default())
        );
        assert_eq!(c.experiment.tracker, TrackerKind::Hmu);
        assert_eq!(c.encoding, Encoding::Raw16);
    }

    #[test]
    fn bundled_configs_parse() {
        for text in [DLRM_DESK, MMAP_BENCH_DESK, MMAP_BENCH_FULL] {
            RunConfig::parse(text).unwrap().experiment.validate().unwrap();
        }
    }

    #[test]
    fn canonical_text_round_trips() {
        for text in [DLRM_DESK, MMAP_BENCH_DESK, MMAP_BENCH_FULL] {
            let c = RunConfig::parse(text).unwrap();
            assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
        }
        let mut c = RunConfig::parse(MMAP_BENCH_DESK).unwrap();
        c.experiment.k_budget = Some(7);
        c.experiment.tiers.host_capacity_pages = Some(99);
        c.experiment.telemetry.pebs.mode = PebsMode::Random { seed: 5 };
        c.experiment.telemetry.hmu.range = Some(0x1000..0x8000);
        c.encoding = Encoding::Varlen;
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn comments_sections_and_hex() {
        let c = RunConfig::parse(
            "# top\n[workload]\nkind = mmap-bench # trailing\nseed = 0x10\n[mmap_bench]\nn_accesses = 1_000\n",
        )
        .unwrap();
        assert_eq!(c.experiment.workload.seed(), 16);
        match c.experiment.workload {
            WorkloadConfig::MmapBench(m) => assert_eq!(m.n_accesses, 1000),
            _ => panic!(),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let err = RunConfig::parse("[tiering]\nk_bugdet = 3\n").unwrap_err();
        assert!(err.to_string().contains("tiering.k_bugdet"));
    }

    #[test]
    fn duplicate_key_rejected() {
        assert!(RunConfig::parse("[workload]\nseed = 1\nseed = 2\n").is_err());
    }

    #[test]
    fn bad_values_rejected() {
        assert!(RunConfig::parse("[workload]\nseed = abc\n").is_err());
        assert!(RunConfig::parse("[workload]\nkind = spark\n").is_err());
        assert!(RunConfig::parse("[telemetry]\ntracker = lru\n").is_err());
        assert!(RunConfig::parse("no equals sign\n").is_err());
        assert!(RunConfig::parse("[telemetry]\nhmu.range_lo = 5\n").is_err());
    }

    #[test]
    fn dlrm_overrides_keep_bundled_defaults() {
        let c = RunConfig::parse("[workload]\nkind = dlrm\n[dlrm]\nbatches = 3\n").unwrap();
        match c.experiment.workload {
            WorkloadConfig::Dlrm(d) => {
                assert_eq!(d.batches, 3);
                assert_eq!(d.zipf_exponent, dlrm_desk_defaults().zipf_exponent);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn baselines_list() {
        assert_eq!(
            parse_baselines("none, hmu,hmu").unwrap(),
            vec![TrackerKind::None, TrackerKind::Hmu]
        );
        assert!(parse_baselines("").unwrap().is_empty());
    }
}
