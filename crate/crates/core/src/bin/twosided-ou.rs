use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use twosided_ou::forward::{solve_forward, SegmentFunction};
use twosided_ou::fundamental::FundamentalSolution;
use twosided_ou::grid::{align, steps_per_unit};
use twosided_ou::harness::acceptance::{run_with, Profile, SuiteOptions};
use twosided_ou::harness::config::{ConfigOverrides, Emit, RunConfig};
use twosided_ou::harness::output::{write_csv, write_json, RunHeader};
use twosided_ou::harness::simulate::simulate;
use twosided_ou::harness::window::{fundamental_for, plan_left_extent};
use twosided_ou::left_tail::{construct_left, LeftTailParams};
use twosided_ou::measure_change::{mc_batch, paired_samples, Functional, McParams, ShiftQuery};
use twosided_ou::path_sampler::sample_w;
use twosided_ou::SampleKind;

#[derive(Parser)]
#[command(name = "twosided-ou", version = twosided_ou::VERSION)]
#[command(about = "Two-sided Ornstein-Uhlenbeck type processes with delay or anticipation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-sided Brownian path: CSV (t, W).
    Sample(Common),
    /// Fundamental solution table: CSV (s, r).
    RTable {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10.0)]
        s_max: f64,
    },
    /// Method of steps from an initial segment: CSV (t, X).
    Forward {
        #[command(flatten)]
        common: Common,
        /// zero | const:<c> | <file.csv> with the segment values on [-1, 0]
        #[arg(long, default_value = "zero")]
        segment: String,
    },
    /// Bounded solution on (-inf, 0]: CSV (t, X, q).
    LeftTail(Common),
    /// Delay or anticipating process: CSV (t, W, X, A) or JSON.
    Simulate(Common),
    /// Paired Monte Carlo check of the shift density: JSON report.
    VerifyDensity {
        #[command(flatten)]
        common: Common,
        /// Also write per-sample (lhs, rhs) pairs to this CSV file.
        #[arg(long)]
        pairs_csv: Option<PathBuf>,
    },
    /// Acceptance suite: JSON report, exit status 0 iff every criterion passes.
    Accept {
        #[arg(long, default_value_t = 20_240_601)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
        /// Module tags or criterion numbers, comma separated.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, default_value = "full")]
        profile: Profile,
        /// Drop the density from the identity criteria (they should then fail).
        #[arg(long)]
        corrupt_density: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Flags shared by the computing subcommands; unset flags fall back to the
/// config file, then to the defaults.
#[derive(Args, Clone, Default)]
struct Common {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Drift coefficient a, in (-1, 0).
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Grid step, 1/n for an integer n.
    #[arg(long)]
    dt: Option<f64>,
    /// Truncation tolerance of the left-tail series.
    #[arg(long)]
    tol: Option<f64>,
    /// Minimum depth of the iterated-integral series.
    #[arg(long)]
    k_f: Option<usize>,
    /// Left end of the output window.
    #[arg(long, allow_hyphen_values = true)]
    t_left: Option<f64>,
    /// Right end of the output window.
    #[arg(long, alias = "t-right", allow_hyphen_values = true)]
    t_end: Option<f64>,
    /// Base seed; every sample derives its own stream from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long)]
    n: Option<usize>,
    /// Mean of the Gaussian law of W_0.
    #[arg(long, allow_hyphen_values = true)]
    mean: Option<f64>,
    /// Standard deviation of the Gaussian law of W_0.
    #[arg(long)]
    stddev: Option<f64>,
    /// bm | delay | anticipation
    #[arg(long)]
    kind: Option<SampleKind>,
    /// Time shift of density runs.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    /// f1 | f2 | f3
    #[arg(long)]
    functional: Option<twosided_ou::FunctionalKind>,
    /// Worker threads; defaults to $TWOSIDED_OU_WORKERS or 1.
    #[arg(long)]
    workers: Option<usize>,
    /// csv | json
    #[arg(long)]
    emit: Option<Emit>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let file = match &self.config {
            Some(p) => Some(ConfigOverrides::from_json_file(p)?),
            None => None,
        };
        let flags = ConfigOverrides {
            a: self.a,
            dt: self.dt,
            tol: self.tol,
            k_f: self.k_f,
            t_left: self.t_left,
            t_end: self.t_end,
            seed: self.seed,
            n: self.n,
            mean: self.mean,
            stddev: self.stddev,
            kind: self.kind,
            t: self.t,
            functional: self.functional,
            workers: self.workers,
            emit: self.emit,
            shifts: None,
        };
        Ok(RunConfig::resolve(file.as_ref(), &flags)?)
    }
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_sample(c: &Common) -> anyhow::Result<()> {
    let cfg = c.resolve()?;
    let w = sample_w(cfg.t_left, cfg.t_end, cfg.dt, &cfg.measure()?, cfg.seed)?;
    let header = RunHeader::new("sample", &cfg, json!({ "w0": w.value(0.0)? }));
    let rows = w.times().zip(w.values()).map(|(t, v)| vec![t, v]);
    write_csv(output(c.out.as_deref())?, &header, &["t", "w"], rows)
}

fn cmd_r_table(c: &Common, s_max: f64) -> anyhow::Result<()> {
    let cfg = c.resolve()?;
    let n = steps_per_unit(cfg.dt)?;
    let end = align(s_max, n)?;
    if end < 0 {
        bail!("s_max must be >= 0");
    }
    let intervals =
        ((s_max.ceil() as usize) + 1).max(twosided_ou::fundamental::DEFAULT_MAX_INTERVAL);
    let fs = FundamentalSolution::build(cfg.a, intervals)?;
    let header = RunHeader::new(
        "r-table",
        &cfg,
        json!({ "s_max": s_max, "max_interval": fs.max_interval(), "decay": fs.decay() }),
    );
    let rows = (0..=end).map(|i| {
        let s = i as f64 / n as f64;
        vec![s, fs.eval(s)]
    });
    write_csv(output(c.out.as_deref())?, &header, &["s", "r"], rows)
}

fn read_segment(source: &str, n: u32) -> anyhow::Result<SegmentFunction> {
    if source == "zero" {
        return Ok(SegmentFunction::zero(n)?);
    }
    if let Some(c) = source.strip_prefix("const:") {
        let c: f64 = c
            .parse()
            .with_context(|| format!("bad constant in '{source}'"))?;
        return Ok(SegmentFunction::constant(n, c)?);
    }
    // one value per row, last column, header rows skipped
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(source)
        .with_context(|| format!("reading segment file {source}"))?;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        if let Some(v) = record
            .iter()
            .next_back()
            .and_then(|f| f.trim().parse::<f64>().ok())
        {
            values.push(v);
        }
    }
    Ok(SegmentFunction::new(n, values)?)
}

fn cmd_forward(c: &Common, segment: &str) -> anyhow::Result<()> {
    let cfg = c.resolve()?;
    let n = steps_per_unit(cfg.dt)?;
    let f = read_segment(segment, n)?;
    let w = sample_w(-1.0, cfg.t_end, cfg.dt, &cfg.measure()?, cfg.seed)?;
    let x = solve_forward(&f, &w, cfg.a, cfg.t_end)?;
    let header = RunHeader::new("forward", &cfg, json!({ "segment": segment }));
    let rows = x.times().zip(x.values()).map(|(t, v)| vec![t, v]);
    write_csv(output(c.out.as_deref())?, &header, &["t", "x"], rows)
}

fn cmd_left_tail(c: &Common) -> anyhow::Result<()> {
    let cfg = c.resolve()?;
    let t_left = cfg.t_left.min(-1.0);
    let fs = fundamental_for(cfg.a, cfg.tol, -t_left)?;
    let extent = plan_left_extent(&fs, cfg.tol, cfg.k_f, -t_left)?;
    let w = sample_w(-extent, 1.0, cfg.dt, &cfg.measure()?, cfg.seed)?;
    let params = LeftTailParams {
        k_f: cfg.k_f,
        ..LeftTailParams::new(cfg.tol, t_left)
    };
    let left = construct_left(&w, &fs, &params)?;
    let residual = if t_left <= -2.0 {
        Some(twosided_ou::residual::delay_residual_full(
            &left.x_left,
            &w,
            cfg.a,
            0.0,
            t_left + 1.0,
            0.0,
        )?)
    } else {
        None
    };
    let meta = json!({
        "driver_window": [-extent, 1.0],
        "k_f": left.k_f,
        "k_q": left.k_q,
        "tail_bound": left.tail_bound,
        "diagnostics": left.diagnostics,
        "residual": residual,
    });
    let header = RunHeader::new("left-tail", &cfg, meta);
    let out = output(c.out.as_deref())?;
    match cfg.emit {
        Emit::Csv => {
            let rows = left
                .x_left
                .times()
                .zip(left.x_left.values())
                .zip(left.q.values())
                .map(|((t, x), q)| vec![t, x, q]);
            write_csv(out, &header, &["t", "x", "q"], rows)
        }
        Emit::Json => write_json(
            out,
            &header,
            &json!({ "t": left.x_left.times().collect::<Vec<_>>(), "x": left.x_left.values(), "q": left.q.values() }),
        ),
    }
}

fn cmd_simulate(c: &Common) -> anyhow::Result<()> {
    let cfg = c.resolve()?;
    let sim = simulate(&cfg)?;
    let header = RunHeader::new("simulate", &cfg, serde_json::to_value(&sim)?);
    let out = output(c.out.as_deref())?;
    let (ts, ws, xs, a) = (sim.times(), sim.w.values(), sim.x.values(), sim.a_values());
    match cfg.emit {
        Emit::Csv => {
            let rows = (0..ts.len()).map(|i| vec![ts[i], ws[i], xs[i], a[i]]);
            write_csv(out, &header, &["t", "w", "x", "a"], rows)
        }
        Emit::Json => write_json(out, &header, &json!({ "t": ts, "w": ws, "x": xs, "a": a })),
    }
}

fn cmd_verify_density(c: &Common, pairs_csv: Option<&Path>) -> anyhow::Result<()> {
    let cfg = c.resolve()?;
    let params = McParams {
        a: cfg.a,
        dt: cfg.dt,
        tol: cfg.tol,
        k_f: cfg.k_f,
        measure: cfg.measure()?,
        bias_allowance: if cfg.kind == SampleKind::Bm {
            0.0
        } else {
            5e-3
        },
        workers: cfg.workers,
    };
    let query = ShiftQuery {
        functional: Functional::new(cfg.functional),
        t: cfg.t,
        corrected: true,
    };
    let report = mc_batch(cfg.kind, &[query], cfg.n, cfg.seed, &params)?.remove(0);
    let header = RunHeader::new("verify-density", &cfg, json!({ "query": query }));
    if let Some(path) = pairs_csv {
        let pairs = paired_samples(cfg.kind, &[query], cfg.n, cfg.seed, &params)?;
        let rows = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| vec![i as f64, p[0].0, p[0].1]);
        write_csv(
            output(Some(path))?,
            &header,
            &["sample", "lhs", "rhs"],
            rows,
        )?;
    }
    write_json(output(c.out.as_deref())?, &header, &report)
}

fn cmd_accept(
    seed: u64,
    workers: Option<usize>,
    filter: Option<String>,
    profile: Profile,
    corrupt_density: bool,
    out: Option<&Path>,
) -> anyhow::Result<bool> {
    let opts = SuiteOptions {
        seed,
        workers: workers.unwrap_or_else(twosided_ou::harness::config::default_workers),
        filter,
        profile,
        corrupt_density,
    };
    let report = run_with(&opts, |c| {
        eprintln!(
            "criterion {:>2} [{}] {}: {} ({:.1} s)",
            c.id,
            c.module,
            if c.pass { "PASS" } else { "FAIL" },
            c.title,
            c.elapsed.as_secs_f64()
        );
    });
    let mut w = output(out)?;
    writeln!(w, "{}", report.to_json())?;
    w.flush()?;
    Ok(report.all_pass)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Sample(c) => cmd_sample(&c)?,
        Command::RTable { common, s_max } => cmd_r_table(&common, s_max)?,
        Command::Forward { common, segment } => cmd_forward(&common, &segment)?,
        Command::LeftTail(c) => cmd_left_tail(&c)?,
        Command::Simulate(c) => cmd_simulate(&c)?,
        Command::VerifyDensity { common, pairs_csv } => {
            cmd_verify_density(&common, pairs_csv.as_deref())?
        }
        Command::Accept {
            seed,
            workers,
            filter,
            profile,
            corrupt_density,
            out,
        } => {
            return cmd_accept(
                seed,
                workers,
                filter,
                profile,
                corrupt_density,
                out.as_deref(),
            )
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
