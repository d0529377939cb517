//! `tqec`: run tracking-QEC Monte Carlo sweeps and post-process their output.
//!
//! Exit status is 0 on success, 1 for usage errors (bad or inconsistent
//! flags) and 2 for runtime failures such as I/O or malformed input.

mod parse;
mod plot;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tracking_qec::decoder::{table_for, CodeKind};
use tracking_qec::harness::{read_results_csv, PointSink};
use tracking_qec::resources::{resource_table, to_json, write_csv};
use tracking_qec::{
    find_threshold, sweep, CsvSink, ExperimentTemplate, PointEstimate, ProtocolKind, Quadrature,
    RunManifest, SweepConfig, ThresholdEstimate,
};

#[derive(Parser, Debug)]
#[command(
    name = "tqec",
    version,
    about = "Tracking QEC for GKP qubits under the concatenated C4/C6 code"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep failure probability over noise strength and concatenation level.
    Run(RunArgs),
    /// Locate the threshold in a results CSV.
    Threshold(ThresholdArgs),
    /// Print physical-qubit budgets of both schedules.
    Resources(ResourceArgs),
    /// Render results CSVs as an SVG plot.
    Plot(PlotArgs),
    /// Print the C4 and C6 codeword tables as JSON.
    Tables(TablesArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Protocol {
    Conventional,
    Tracking,
}

impl From<Protocol> for ProtocolKind {
    fn from(p: Protocol) -> Self {
        match p {
            Protocol::Conventional => ProtocolKind::Conventional,
            Protocol::Tracking => ProtocolKind::Tracking,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum QuadArg {
    Q,
    P,
    Both,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, value_enum)]
    protocol: Protocol,
    /// Use deviation-weighted likelihoods.
    #[arg(long, value_enum, default_value = "off")]
    analog: Switch,
    #[arg(long, default_value_t = 2)]
    cycles: u32,
    /// `1,2,3` or `1..5`.
    #[arg(long, default_value = "1,2,3")]
    levels: String,
    /// Inclusive grid `A:B:STEP` of summed per-cycle standard deviations.
    #[arg(long)]
    sigma_total: String,
    /// Trials per grid point.
    #[arg(long)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; reruns resume into an existing results.csv.
    #[arg(long, env = "TQEC_OUT_DIR", default_value = "tqec-out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "q")]
    quadrature: QuadArg,
    /// Stop a point early once this many failures are seen.
    #[arg(long)]
    max_failures: Option<u64>,
    /// Ancilla standard deviation in q for single-qubit QEC.
    #[arg(long, default_value_t = 0.0)]
    sigma_ancilla_q: f64,
    /// Ancilla standard deviation in p for single-qubit QEC.
    #[arg(long, default_value_t = 0.0)]
    sigma_ancilla_p: f64,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Where to write the JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct ResourceArgs {
    #[arg(long, default_value_t = 2)]
    cycles: u32,
    #[arg(long, default_value = "1..5")]
    levels: String,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Results CSV; repeat to overlay several runs.
    #[arg(long = "in", required = true)]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Threshold report JSON to mark; repeatable.
    #[arg(long)]
    report: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct TablesArgs {
    #[arg(long, value_enum, default_value = "q")]
    quadrature: QuadArg,
}

/// A flag-level error, reported with exit status 1.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(flag: &str, msg: impl std::fmt::Display) -> anyhow::Error {
    Usage(format!("{flag}: {msg}")).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Threshold(a) => cmd_threshold(a),
        Command::Resources(a) => cmd_resources(a),
        Command::Plot(a) => cmd_plot(a),
        Command::Tables(a) => cmd_tables(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            eprintln!("\nFor more information, try '--help'.");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Forwards to a CSV sink and reports each finished point on stderr.
struct Progress {
    inner: CsvSink,
    total: usize,
    done: usize,
}

impl PointSink for Progress {
    fn existing(&mut self) -> tracking_qec::Result<Vec<PointEstimate>> {
        let rows = self.inner.existing()?;
        if !rows.is_empty() {
            eprintln!(
                "resuming {}: {} rows present",
                self.inner.path().display(),
                rows.len()
            );
        }
        Ok(rows)
    }

    fn record(&mut self, p: &PointEstimate) -> tracking_qec::Result<()> {
        self.inner.record(p)?;
        self.done += 1;
        eprintln!(
            "[{}/{}] level {} sigma {} -> {}/{}",
            self.done, self.total, p.level, p.sigma_total, p.failures, p.trials
        );
        Ok(())
    }
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let levels = parse::levels(&a.levels).map_err(|e| usage("--levels", e))?;
    let grid = parse::sigma_grid(&a.sigma_total).map_err(|e| usage("--sigma-total", e))?;
    if a.trials == 0 {
        return Err(usage("--trials", "must be at least 1"));
    }
    let kind = ProtocolKind::from(a.protocol);
    match kind {
        ProtocolKind::Tracking if a.cycles < 2 => {
            return Err(usage(
                "--cycles",
                "the tracking protocol needs at least 2 cycles",
            ))
        }
        _ if a.cycles == 0 => return Err(usage("--cycles", "must be at least 1")),
        _ => {}
    }
    for (flag, v) in [
        ("--sigma-ancilla-q", a.sigma_ancilla_q),
        ("--sigma-ancilla-p", a.sigma_ancilla_p),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(usage(flag, "must be a non-negative number"));
        }
    }
    if a.max_failures == Some(0) {
        return Err(usage("--max-failures", "must be at least 1"));
    }
    let quads = match a.quadrature {
        QuadArg::Q => vec![Quadrature::Q],
        QuadArg::P => vec![Quadrature::P],
        QuadArg::Both => vec![Quadrature::Q, Quadrature::P],
    };

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let started_at = chrono::Utc::now().to_rfc3339();
    let clock = Instant::now();
    let mut files = Vec::new();
    let mut configs = Vec::new();
    let mut all_rows = Vec::new();
    for (i, &quadrature) in quads.iter().enumerate() {
        let template = ExperimentTemplate {
            kind,
            analog: a.analog == Switch::On,
            cycles: a.cycles,
            quadrature,
            sigma_ancilla_q: a.sigma_ancilla_q,
            sigma_ancilla_p: a.sigma_ancilla_p,
        };
        let cfg = SweepConfig {
            template,
            sigma_total_grid: grid.clone(),
            levels: levels.clone(),
            trials_per_point: a.trials,
            master_seed: a.seed,
            max_failures_stop: a.max_failures,
        };
        let name = if i == 0 {
            "results.csv"
        } else {
            "results_p.csv"
        };
        let mut sink = Progress {
            inner: CsvSink::new(a.out.join(name)),
            total: grid.len() * levels.len(),
            done: 0,
        };
        let rows = sweep(&cfg, &mut sink)
            .with_context(|| format!("sweep into {}", a.out.join(name).display()))?;
        files.push(name.to_string());
        configs.push(cfg);
        all_rows.push((quadrature, rows));
    }

    let manifest = RunManifest {
        config: configs.swap_remove(0),
        quadratures: quads,
        output_dir: a.out.display().to_string(),
        files,
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        wall_seconds: clock.elapsed().as_secs_f64(),
        points: all_rows.iter().map(|(_, r)| r.len()).sum(),
    };
    let path = a.out.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;

    let mut out = std::io::stdout().lock();
    for (q, rows) in &all_rows {
        if all_rows.len() > 1 {
            writeln!(
                out,
                "quadrature {}",
                if *q == Quadrature::Q { "q" } else { "p" }
            )?;
        }
        print_summary(&mut out, rows)?;
    }
    Ok(())
}

fn print_summary(out: &mut impl Write, rows: &[PointEstimate]) -> Result<()> {
    writeln!(
        out,
        "{:<13} {:<7} {:>6} {:>5} {:>11} {:>10} {:>9} {:>11}  {:<25}",
        "protocol",
        "analog",
        "cycles",
        "level",
        "sigma_total",
        "trials",
        "failures",
        "p_fail",
        "95% CI"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:<13} {:<7} {:>6} {:>5} {:>11} {:>10} {:>9} {:>11.4e}  [{:.4e}, {:.4e}]",
            r.protocol.as_str(),
            if r.analog { "on" } else { "off" },
            r.cycles,
            r.level,
            r.sigma_total,
            r.trials,
            r.failures,
            r.p_fail,
            r.ci_low,
            r.ci_high
        )?;
    }
    Ok(())
}

fn read_rows(path: &Path) -> Result<Vec<PointEstimate>> {
    read_results_csv(path).with_context(|| format!("reading {}", path.display()))
}

fn cmd_threshold(a: ThresholdArgs) -> Result<()> {
    let rows = read_rows(&a.input)?;
    let t = find_threshold(&rows).with_context(|| format!("threshold of {}", a.input.display()))?;
    if let Some(out) = &a.out {
        fs::write(out, serde_json::to_string_pretty(&t)? + "\n")
            .with_context(|| format!("writing {}", out.display()))?;
    }
    for c in &t.crossings {
        println!(
            "levels {}/{} cross at {:.4}",
            c.level_a, c.level_b, c.sigma_cross
        );
    }
    println!("sigma_star = {:.4} ± {:.4}", t.sigma_star, t.spread);
    Ok(())
}

fn cmd_resources(a: ResourceArgs) -> Result<()> {
    let levels = parse::levels(&a.levels).map_err(|e| usage("--levels", e))?;
    if a.cycles < 2 {
        return Err(usage(
            "--cycles",
            "the tracking schedule needs at least 2 cycles",
        ));
    }
    let rows = resource_table(a.cycles, &levels)?;
    let text = match a.format {
        Format::Json => to_json(&rows)? + "\n",
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf)?;
            String::from_utf8(buf)?
        }
        Format::Table => {
            let mut s = format!(
                "{:>3} {:>3} {:>16} {:>16} {:>16} {:>7}\n",
                "n", "l", "conventional", "tracking", "saved", "rate %"
            );
            for r in &rows {
                s += &format!(
                    "{:>3} {:>3} {:>16} {:>16} {:>16} {:>7}\n",
                    r.cycles, r.level, r.r_conventional, r.r_tracking, r.saved, r.rate_percent
                );
            }
            s
        }
    };
    match &a.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_plot(a: PlotArgs) -> Result<()> {
    let mut rows = Vec::new();
    for p in &a.input {
        rows.extend(read_rows(p)?);
    }
    if rows.is_empty() {
        bail!("no rows in input");
    }
    let mut markers = Vec::new();
    for p in &a.report {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let t: ThresholdEstimate =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        let label = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        markers.push(plot::Marker::from_threshold(&t, &label));
    }
    let svg = plot::render(&rows, &markers).map_err(anyhow::Error::msg)?;
    fs::write(&a.out, svg).with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "{} series -> {}",
        plot::series_count(&rows),
        a.out.display()
    );
    Ok(())
}

fn cmd_tables(a: TablesArgs) -> Result<()> {
    let quads = match a.quadrature {
        QuadArg::Q => vec![Quadrature::Q],
        QuadArg::P => vec![Quadrature::P],
        QuadArg::Both => vec![Quadrature::Q, Quadrature::P],
    };
    let mut records = Vec::new();
    for q in quads {
        for code in [CodeKind::C4, CodeKind::C6] {
            records.extend(table_for(code, q).to_records());
        }
    }
    println!("{}", serde_json::to_string_pretty(&records)?);
    Ok(())
}
