//! Command-line front end: `gen`, `track`, `tier` and `compare`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::address_space::{PageTable, TierId, TierSpec};
use crate::codec::{decode_log, Encoding, LogWriter};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::perf::hotness_cdf;
use crate::report::{error_json, render_report, ReportSummary, RunManifest};
use crate::telemetry::{HmuTracker, HotnessReport, HotnessTracker, NbScanner, PebsMode, PebsSampler};
use crate::tiering::{compare, CompareEntry, Experiment, TrackerKind};

#[derive(Debug, Parser)]
#[command(name = "memtier", version, about = "Trace-driven memory tiering telemetry simulator")]
pub struct Cli {
    /// Overrides the workload seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the page size in bytes.
    #[arg(long, global = true)]
    pub page_size: Option<u64>,
    /// Config file (`key = value` sections). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output path: the trace for `gen`, a directory for `track`, a file
    /// for `tier` and `compare` (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a workload trace and write it as a binary log.
    Gen(GenArgs),
    /// Run a hotness tracker over a trace file.
    Track(TrackArgs),
    /// Profile, promote and measure one tracker against baselines.
    Tier(TierArgs),
    /// Tabulate several experiment reports against a baseline.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// raw16 or varlen; overrides `[output] encoding`.
    #[arg(long)]
    pub encoding: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Trace file written by `gen`.
    pub trace: PathBuf,
    /// hmu, pebs or nb.
    #[arg(long, default_value = "hmu")]
    pub tracker: String,
    #[arg(long)]
    pub pebs_period: Option<u64>,
    #[arg(long)]
    pub pebs_phase: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TierArgs {
    /// Tracker that drives promotion.
    #[arg(long)]
    pub tracker: Option<String>,
    /// Baseline tracker; repeat or comma-separate for several.
    #[arg(long = "baseline", value_delimiter = ',')]
    pub baselines: Vec<String>,
    /// Promotion budget in pages; defaults to the ground-truth hot-set size.
    #[arg(long)]
    pub k: Option<u64>,
    /// Fold migration cost into the measured time.
    #[arg(long)]
    pub include_migration: bool,
    /// Report zeros instead of failing on an empty measurement segment.
    #[arg(long)]
    pub allow_empty: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// JSON reports written by `tier`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// Tracker name whose time is the speedup denominator's numerator.
    #[arg(long)]
    pub baseline: String,
}

/// Parses arguments, runs the command and returns the exit status.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let json_errors = matches!(cli.command, Command::Tier(_));
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            if json_errors {
                eprintln!("{}", error_json(&e));
            } else {
                eprintln!("memtier: {e}");
            }
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(cli, a),
        Command::Track(a) => cmd_track(cli, a),
        Command::Tier(a) => cmd_tier(cli, a),
        Command::Compare(a) => cmd_compare(cli, a),
    }
}

/// Config file plus the global overrides.
pub fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::parse("")?,
    };
    if let Some(s) = cli.seed {
        cfg.experiment.workload.set_seed(s);
    }
    if let Some(p) = cli.page_size {
        cfg.experiment.workload.set_page_size(p);
    }
    cfg.experiment.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Writes `text` to `--out`, or stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p.display().to_string(), e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn cmd_gen(cli: &Cli, a: &GenArgs) -> Result<()> {
    let mut cfg = load_config(cli)?;
    if let Some(e) = &a.encoding {
        cfg.encoding = Encoding::parse(e)?;
    }
    let w = &cfg.experiment.workload;
    let page_size = crate::trace::PageSize::new(w.page_size())?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("trace.mrl"));
    let (stream, gt) = w.generate()?;
    let n = stream.len() as u64;
    let path = out.display().to_string();
    let mut writer = LogWriter::new(create(&out)?, page_size, cfg.encoding, n)?;
    for r in stream {
        writer.push(&r)?;
    }
    let (_, bytes) = writer.finish().map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path.clone(), source),
        other => other,
    })?;
    let footprint = gt.k() * page_size.bytes();
    println!(
        "workload={} K={} footprint_bytes={} records={} encoding={} bytes={} out={}",
        w.name(),
        gt.k(),
        footprint,
        n,
        cfg.encoding.name(),
        bytes,
        out.display()
    );
    Ok(())
}

fn cmd_track(cli: &Cli, a: &TrackArgs) -> Result<()> {
    let mut cfg = load_config(cli)?;
    let bytes = std::fs::read(&a.trace).map_err(|e| Error::io(a.trace.display().to_string(), e))?;
    let (header, records) = decode_log(&bytes)?;
    let page_size = crate::trace::PageSize::new(u64::from(header.page_size))?;

    let t = &mut cfg.experiment.telemetry;
    if let Some(p) = a.pebs_period {
        t.pebs.period = p;
        if a.pebs_phase.is_none() && t.pebs.phase >= p {
            t.pebs.phase = 0;
        }
    }
    if let Some(p) = a.pebs_phase {
        t.pebs.phase = p;
    }
    let kind = TrackerKind::parse(&a.tracker)?;

    // The trace is taken under an identity mapping of every frame it names.
    let pages = records
        .iter()
        .map(|r| page_size.page_of(r.phys_addr).0 + 1)
        .max()
        .unwrap_or(0);
    let mut pt = PageTable::new(page_size, TierSpec::host_dram(0), TierSpec::cxl_mem(pages.max(1)))?;
    let range = pt.alloc(pages, TierId::CxlMem)?;

    let report: HotnessReport = match kind {
        TrackerKind::Hmu => {
            let mut h = HmuTracker::new(page_size).with_ceiling(t.hmu.ceiling);
            if let Some(r) = &t.hmu.range {
                h = h.with_range(r.clone());
            }
            h.observe_all(&records);
            h.report()
        }
        TrackerKind::Pebs => {
            let mut s = PebsSampler::new(t.pebs)?;
            s.observe_all(0, &records, &pt)?;
            s.report()
        }
        TrackerKind::Nb => {
            let mut nb = NbScanner::new(t.nb, range)?;
            nb.step(&records, &pt);
            nb.report()
        }
        other => {
            return Err(Error::Config(format!(
                "track needs a tracker (hmu|pebs|nb), not {other}"
            )))
        }
    };

    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let report_path = dir.join("report.csv");
    let mut f = create(&report_path)?;
    report
        .write_csv(&mut f)
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(report_path.display().to_string(), e))?;
    let cdf_path = dir.join("cdf.csv");
    if report.total_observed > 0 {
        let cdf = hotness_cdf(&report)?;
        let mut f = create(&cdf_path)?;
        cdf.write_csv(&mut f)
            .and_then(|_| f.flush())
            .map_err(|e| Error::io(cdf_path.display().to_string(), e))?;
    }
    let mode = match (kind, t.pebs.mode) {
        (TrackerKind::Pebs, PebsMode::Strided) => format!(" period={} phase={}", t.pebs.period, t.pebs.phase),
        (TrackerKind::Pebs, PebsMode::Random { seed }) => format!(" period={} seed={seed}", t.pebs.period),
        _ => String::new(),
    };
    println!(
        "tracker={kind}{mode} records={} pages={} total_observed={}",
        records.len(),
        report.len(),
        report.total_observed
    );
    Ok(())
}

fn cmd_tier(cli: &Cli, a: &TierArgs) -> Result<()> {
    let mut cfg = load_config(cli)?;
    let e = &mut cfg.experiment;
    if let Some(t) = &a.tracker {
        e.tracker = TrackerKind::parse(t)?;
    }
    if !a.baselines.is_empty() {
        e.baselines = crate::config::parse_baselines(&a.baselines.join(","))?;
    }
    if a.k.is_some() {
        e.k_budget = a.k;
    }
    e.include_migration |= a.include_migration;
    e.allow_empty |= a.allow_empty;

    let exp = Experiment::prepare(&cfg.experiment)?;
    let (main, baselines) = exp.run_with_baselines()?;
    let manifest = RunManifest::new(&cfg, exp.fingerprint());
    emit(cli.out.as_deref(), &render_report(&manifest, &main, &baselines))
}

fn cmd_compare(cli: &Cli, a: &CompareArgs) -> Result<()> {
    let entries = a
        .reports
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p.display().to_string(), e))?;
            ReportSummary::parse(&text)
                .map(CompareEntry::from)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    let table = compare(&entries, &a.baseline)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf).map_err(|e| Error::io("<table>", e))?;
    emit(cli.out.as_deref(), &String::from_utf8(buf).expect("CSV is UTF-8"))
}
