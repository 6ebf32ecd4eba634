//! Command-line front end: `region`, `exponent`, `simulate` and `verify`.

pub mod config;
pub mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bounds::{best_exponent, rate_region, SourceClass};
use crate::codec::{
    build_code, cross, exact_errors, monte_carlo_error, monte_carlo_sup_max, DecodeRule, Decoder, McEstimate,
};
use crate::delaysource::{dummy_delay_set, DelaySpec};
use crate::error::{Error, Result};
use crate::verify::{run_suite, Status, SuiteOptions};
use output::{Cell, Format, Table};

/// Blocklengths up to this are evaluated exactly rather than sampled.
pub const EXACT_MAX_N: usize = 4;

#[derive(Parser, Debug)]
#[command(
    name = "asyncsw",
    version,
    about = "Asynchronous Slepian-Wolf rate regions, exponents and codec simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Region thresholds and a sampled boundary.
    Region(RegionArgs),
    /// Error exponents over a set of rate pairs.
    Exponent(ExponentArgs),
    /// Decoding error of a random binning code, exact or sampled.
    Simulate(SimulateArgs),
    /// Numerical checks of the identities and bounds behind the library.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Source-class JSON file.
    #[arg(long)]
    pub source: PathBuf,
    #[command(flatten)]
    pub delay: DelayArgs,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// At most one delay description; no flag means no delay.
#[derive(Args, Debug, Clone)]
#[group(id = "delay", multiple = false)]
pub struct DelayArgs {
    /// Delays up to `floor(ratio * n)` in magnitude.
    #[arg(long)]
    pub delay_ratio: Option<f64>,
    /// Delays up to a constant in magnitude.
    #[arg(long)]
    pub delay_bound: Option<u64>,
    /// JSON array of `[lo, hi]` pairs, one per blocklength starting at 1.
    #[arg(long)]
    pub delay_seq: Option<PathBuf>,
}

impl DelayArgs {
    pub fn spec(&self) -> Result<DelaySpec> {
        if let Some(a) = self.delay_ratio {
            DelaySpec::linear_ratio(a)
        } else if let Some(c) = self.delay_bound {
            Ok(DelaySpec::constant_bound(c))
        } else if let Some(p) = &self.delay_seq {
            config::load_delay_sequence(p)
        } else {
            Ok(DelaySpec::constant_bound(0))
        }
    }
}

#[derive(Args, Debug)]
pub struct RegionArgs {
    #[command(flatten)]
    pub common: Common,
    /// Delay ratios to tabulate instead of the one implied by the delay flags.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Vec<f64>,
    /// Boundary points per delay ratio.
    #[arg(long, default_value_t = 41)]
    pub points: usize,
    /// Length of the unbounded boundary edges past the corners.
    #[arg(long, default_value_t = 1.0)]
    pub extent: f64,
}

#[derive(Args, Debug)]
pub struct ExponentArgs {
    #[command(flatten)]
    pub common: Common,
    /// A rate pair `R1,R2`; repeatable.
    #[arg(long, value_parser = parse_rate_pair)]
    pub rates: Vec<(f64, f64)>,
    /// Equal-rate sweep `FROM,TO,POINTS` along `R1 = R2`.
    #[arg(long, value_parser = parse_sweep)]
    pub sweep: Option<(f64, f64, usize)>,
    /// Delay ratios to evaluate instead of the one implied by the delay flags.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Vec<f64>,
    /// Number of rho grid points on [0, 1].
    #[arg(long, default_value_t = 101)]
    pub rho_grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecoderKind {
    /// Mixture over the class and the true delay set.
    Mixed,
    /// The true source and delay.
    Oracle,
    /// Mixture over the class and delays up to `ceil(sqrt n)`.
    Dummy,
}

impl DecoderKind {
    fn name(self) -> &'static str {
        match self {
            DecoderKind::Mixed => "mixed",
            DecoderKind::Oracle => "oracle",
            DecoderKind::Dummy => "dummy",
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Rate pair `R1,R2`.
    #[arg(long, value_parser = parse_rate_pair)]
    pub rates: (f64, f64),
    /// Blocklengths.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    /// Monte Carlo trials per member and delay.
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Seeds for code construction and sampling.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub seed: Vec<u64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mixed")]
    pub decoders: Vec<DecoderKind>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Blocklengths for the n-type checks; `alpha .. 4 alpha` when absent.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Vec<u64>,
    /// Number of rho grid points for the exponent checks.
    #[arg(long, default_value_t = 101)]
    pub rho_grid: usize,
    /// Seed for random joints and codes.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Random joints added to the class members.
    #[arg(long, default_value_t = 20)]
    pub random: usize,
}

fn parse_reals(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect()
}

fn parse_rate_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    match parse_reals(s)?.as_slice() {
        &[a, b] => Ok((a, b)),
        _ => Err("expected R1,R2".into()),
    }
}

fn parse_sweep(s: &str) -> std::result::Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected FROM,TO,POINTS".into());
    }
    let from = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let to = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let points = parts[2].trim().parse::<usize>().map_err(|e| e.to_string())?;
    if points < 1 {
        return Err("POINTS must be at least 1".into());
    }
    Ok((from, to, points))
}

fn check_rate(r: f64) -> Result<()> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::Config(format!("rate {r} must be finite and non-negative")));
    }
    Ok(())
}

fn check_delta(d: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Config(format!("delay ratio {d} not in [0, 1]")));
    }
    Ok(())
}

fn check_rho_grid(k: usize) -> Result<()> {
    if k < 11 {
        return Err(Error::Config(format!("rho grid {k} has fewer than 11 points")));
    }
    Ok(())
}

/// What a finished command reports back to `main`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    /// False when a requested verification failed.
    pub ok: bool,
    /// One line per check for the terminal, when the table goes to a file.
    pub summary: Vec<String>,
}

/// Validate, compute and write the output of one command.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let (common, outcome) = match &cli.command {
        Command::Region(a) => (&a.common, region(a)?),
        Command::Exponent(a) => (&a.common, exponent(a)?),
        Command::Simulate(a) => (&a.common, simulate(a)?),
        Command::Verify(a) => (&a.common, verify(a)?),
    };
    match &common.out {
        Some(path) => {
            let f = File::create(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(f);
            outcome.table.write(&mut w, common.format)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            outcome.table.write(&mut w, common.format)?;
            w.flush()?;
        }
    }
    Ok(outcome)
}

fn load(common: &Common) -> Result<(SourceClass, DelaySpec)> {
    let class = config::load_source_class(&common.source)?;
    let spec = common.delay.spec()?;
    Ok((class, spec))
}

fn deltas(given: &[f64], spec: &DelaySpec) -> Result<Vec<f64>> {
    let v = if given.is_empty() {
        vec![spec.limit_ratio()]
    } else {
        given.to_vec()
    };
    v.iter().try_for_each(|&d| check_delta(d))?;
    Ok(v)
}

pub fn region(a: &RegionArgs) -> Result<Outcome> {
    let (class, spec) = load(&a.common)?;
    let ds = deltas(&a.sweep, &spec)?;
    if !(a.extent.is_finite() && a.extent >= 0.0) {
        return Err(Error::Config(format!("extent {} must be non-negative", a.extent)));
    }
    let mut t = Table::new(&["delta", "r1_star", "r2_star", "r3_star", "point", "r1", "r2"]);
    for d in ds {
        let r = rate_region(&class, d)?;
        for (k, (x, y)) in r.polyline(a.points, a.extent).into_iter().enumerate() {
            t.push(vec![
                d.into(),
                r.r1_star.into(),
                r.r2_star.into(),
                r.r3_star.into(),
                k.into(),
                x.into(),
                y.into(),
            ]);
        }
    }
    Ok(Outcome {
        table: t,
        ok: true,
        summary: Vec::new(),
    })
}

pub fn exponent(a: &ExponentArgs) -> Result<Outcome> {
    let (class, spec) = load(&a.common)?;
    let ds = deltas(&a.deltas, &spec)?;
    check_rho_grid(a.rho_grid)?;
    let mut pairs = a.rates.clone();
    if let Some((from, to, points)) = a.sweep {
        for k in 0..points {
            let r = if points == 1 {
                from
            } else {
                from + (to - from) * k as f64 / (points - 1) as f64
            };
            pairs.push((r, r));
        }
    }
    if pairs.is_empty() {
        return Err(Error::Config("give --rates or --sweep".into()));
    }
    for &(r1, r2) in &pairs {
        check_rate(r1)?;
        check_rate(r2)?;
    }
    let mut t = Table::new(&[
        "r1", "r2", "delta", "exponent", "binding", "rho_1", "rho_2", "rho_3", "f_1", "f_2", "f_3",
    ]);
    for d in ds {
        for &(r1, r2) in &pairs {
            let e = best_exponent(r1, r2, class.members(), d, a.rho_grid)?;
            let p = &e.per_event;
            t.push(vec![
                r1.into(),
                r2.into(),
                d.into(),
                e.value.into(),
                e.binding.index().into(),
                p[0].rho.into(),
                p[1].rho.into(),
                p[2].rho.into(),
                p[0].value.into(),
                p[1].value.into(),
                p[2].value.into(),
            ]);
        }
    }
    Ok(Outcome {
        table: t,
        ok: true,
        summary: Vec::new(),
    })
}

pub const SIMULATE_COLUMNS: [&str; 12] = [
    "decoder",
    "seed",
    "n",
    "member",
    "d",
    "mode",
    "exact",
    "mc_estimate",
    "mc_lo",
    "mc_hi",
    "mc_errors",
    "trials",
];

fn sim_row(
    kind: DecoderKind,
    seed: u64,
    n: usize,
    member: Cell,
    d: Cell,
    exact: Option<f64>,
    mc: Option<&McEstimate>,
) -> Vec<Cell> {
    vec![
        kind.name().into(),
        seed.into(),
        n.into(),
        member,
        d,
        if exact.is_some() { "exact" } else { "mc" }.into(),
        exact.into(),
        mc.map(|m| m.estimate).into(),
        mc.map(|m| m.lo).into(),
        mc.map(|m| m.hi).into(),
        mc.map(|m| m.errors).into(),
        mc.map(|m| m.trials).into(),
    ]
}

pub fn simulate(a: &SimulateArgs) -> Result<Outcome> {
    let (class, spec) = load(&a.common)?;
    let (r1, r2) = a.rates;
    check_rate(r1)?;
    check_rate(r2)?;
    if a.n_list.contains(&0) {
        return Err(Error::Config("blocklengths must be positive".into()));
    }
    if a.trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    let mut kinds = a.decoders.clone();
    kinds.dedup();
    let mut t = Table::new(&SIMULATE_COLUMNS);
    for &seed in &a.seed {
        for &n in &a.n_list {
            let delays = spec.delay_set(n);
            let code = build_code(n, class.rows(), class.cols(), r1, r2, seed)?;
            let sources = cross(class.members(), &delays);
            let exact = n <= EXACT_MAX_N;
            for &kind in &kinds {
                let mut rows: Vec<(f64, Option<McEstimate>)> = Vec::with_capacity(sources.len());
                match kind {
                    DecoderKind::Mixed | DecoderKind::Dummy => {
                        let hyp = if kind == DecoderKind::Mixed {
                            delays.clone()
                        } else {
                            dummy_delay_set(n)
                        };
                        let rule = DecodeRule::mixed(&class, n, hyp)?;
                        let mut dec = Decoder::new(&code, &rule)?;
                        if exact {
                            rows.extend(exact_errors(&dec, &sources)?.into_iter().map(|e| (e, None)));
                        } else {
                            let s = monte_carlo_sup_max(&mut dec, &class, &delays, a.trials, seed)?;
                            rows.extend(s.per_source.iter().map(|(_, _, m)| (m.estimate, Some(*m))));
                        }
                    }
                    DecoderKind::Oracle => {
                        for (k, (m, d)) in sources.iter().enumerate() {
                            let rule = DecodeRule::Oracle {
                                source: m.clone(),
                                d: *d,
                            };
                            let mut dec = Decoder::new(&code, &rule)?;
                            if exact {
                                rows.push((exact_errors(&dec, &[(m.clone(), *d)])?[0], None));
                            } else {
                                let e = monte_carlo_error(&mut dec, m, *d, a.trials, seed, k as u64)?;
                                rows.push((e.estimate, Some(e)));
                            }
                        }
                    }
                }
                let mut worst = 0;
                for (k, (v, mc)) in rows.iter().enumerate() {
                    if *v > rows[worst].0 {
                        worst = k;
                    }
                    let (mi, d) = (k / delays.len(), delays[k % delays.len()]);
                    let ex = if exact { Some(*v) } else { None };
                    t.push(sim_row(kind, seed, n, mi.into(), d.into(), ex, mc.as_ref()));
                }
                let (v, mc) = &rows[worst];
                let ex = if exact { Some(*v) } else { None };
                t.push(sim_row(
                    kind,
                    seed,
                    n,
                    "sup-max".into(),
                    "sup-max".into(),
                    ex,
                    mc.as_ref(),
                ));
            }
        }
    }
    Ok(Outcome {
        table: t,
        ok: true,
        summary: Vec::new(),
    })
}

pub fn verify(a: &VerifyArgs) -> Result<Outcome> {
    let (class, spec) = load(&a.common)?;
    check_rho_grid(a.rho_grid)?;
    let opts = SuiteOptions {
        random_joints: a.random,
        seed: a.seed,
        type_ns: a.n_list.clone(),
        delta_ratio: spec.limit_ratio(),
        resolution: a.rho_grid,
        universality_seeds: vec![a.seed],
        ..SuiteOptions::default()
    };
    let reports = run_suite(&class, &opts)?;
    let mut t = Table::new(&["check", "status", "worst", "cases", "detail"]);
    let mut summary = Vec::new();
    for r in &reports {
        summary.push(format!(
            "{:<28} {:<12} worst {}",
            r.name,
            r.status.to_string(),
            output::format_real(r.worst)
        ));
        t.push(vec![
            r.name.clone().into(),
            r.status.to_string().into(),
            r.worst.into(),
            r.cases.into(),
            r.detail.clone().into(),
        ]);
    }
    Ok(Outcome {
        table: t,
        ok: reports.iter().all(|r| r.status != Status::Fail),
        summary,
    })
}
