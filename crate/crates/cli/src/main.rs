//! `wallsim`: simulation, exact verification, kernels and asymptotic diagnostics.
//!
//! Exit codes: 0 success, 1 other failure (I/O), 2 invalid argument,
//! 3 numerical failure, 4 verification failure.

mod config;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{Command, ExperimentConfig, Format, QValue};
use num_traits::{Signed, Zero};
use output::{csv_document, emit, json_document, Header};
use rayon::prelude::*;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use wallsim_core::asymptotics::*;
use wallsim_core::compare::*;
use wallsim_core::correlation::*;
use wallsim_core::dynamics::*;
use wallsim_core::kernels::*;
use wallsim_core::lattice::{enumerate_states, parts_on_level, InterlacingState};
use wallsim_core::projection::*;
use wallsim_core::{Rational, Scalar};

#[derive(Parser, Debug)]
#[command(name = "wallsim", version, about = "Interlacing particles with a partially reflecting wall")]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, env = "WALLSIM_THREADS", global = true)]
    threads: Option<usize>,
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum WallTime {
    Half,
    Integer,
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// TOML or JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Decimal or exact ratio, e.g. 0.5 or 1/3.
    #[arg(long, value_parser = QValue::parse, global = true)]
    q: Option<QValue>,
    #[arg(long = "K", alias = "levels", global = true)]
    levels: Option<usize>,
    #[arg(long, global = true)]
    steps: Option<u64>,
    #[arg(long, global = true)]
    replicas: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Which configuration the odd-level wall particle starts its right jump from.
    #[arg(long, value_enum, global = true)]
    odd_wall_time: Option<WallTime>,
    #[arg(long, global = true)]
    radius: Option<f64>,
    #[arg(long, value_enum, global = true)]
    contour_shape: Option<ShapeArg>,
    #[arg(long, global = true)]
    contour_tol: Option<f64>,
    #[arg(long, global = true)]
    quad_nodes: Option<usize>,
    #[arg(long, global = true)]
    quad_tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum ShapeArg {
    Centered,
    Saddle,
    Auto,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run the dynamics and write trajectories as JSONL.
    Simulate(SimulateArgs),
    /// Exact identity checks.
    Verify {
        #[command(subcommand)]
        which: VerifyCmd,
    },
    /// Evaluate K_T on a set of points.
    Kernel(KernelArgs),
    /// Monte Carlo ensembles against exact laws.
    Compare(CompareArgs),
    /// Convergence tables toward the Pearcey and discrete Jacobi limits.
    Asymptotics {
        #[command(subcommand)]
        which: AsymCmd,
    },
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "integer")]
    record: RecordArg,
    /// JSON draw table replacing the random stream (needs --start).
    #[arg(long, requires = "start")]
    draws: Option<PathBuf>,
    /// JSON start state, used with --draws.
    #[arg(long)]
    start: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum RecordArg {
    Half,
    Integer,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum VerifyCmd {
    /// The four summation identities on the full parameter grid.
    Keyidentity {
        #[arg(long, conflicts_with = "all")]
        id: Option<u8>,
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = 8)]
        bound: u32,
    },
    /// L Q = S L on truncated state spaces.
    Intertwining {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long = "M", default_value_t = 5)]
        cap: u32,
        /// Rows whose entries carry more truncation error than this are inconclusive.
        #[arg(long, default_value_t = 1e-8)]
        tail_tol: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Σ_{λ≺μ} s_{k-1}(λ) = s_k(μ).
    Branching {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 6)]
        cap: u32,
    },
    /// P_k against the Jacobi determinant kernel.
    Psame {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 6)]
        cap: u32,
        /// Allowed gap between closed-form and quadrature determinants.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Marginal of S_k over z' equals P_k.
    Sp {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 4)]
        cap: u32,
    },
}

#[derive(Args, Debug, Serialize)]
struct KernelArgs {
    #[arg(long = "T")]
    time: u32,
    /// Points as "(s,k);(t,m);…".
    #[arg(long)]
    points: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum CompareWhat {
    Marginal,
    Transition,
    Correlation,
}

#[derive(Args, Debug, Serialize)]
struct CompareArgs {
    #[arg(long, value_enum)]
    what: CompareWhat,
    /// Largest part in the exact laws.
    #[arg(long, default_value_t = 30)]
    cap: u32,
    /// Cells expecting fewer counts are pooled.
    #[arg(long, default_value_t = 5.0)]
    min_expected: f64,
    #[arg(long, default_value_t = 3.0)]
    sigma: f64,
    #[arg(long, default_value_t = 4.0)]
    z_max: f64,
    #[arg(long, default_value_t = 0.01)]
    tv_max: f64,
    /// Correlation window: positions 0..=s-max on levels 1..=K.
    #[arg(long, default_value_t = 5)]
    s_max: u32,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum AsymCmd {
    /// Points as "ν,η,a;…" with a = 0.5 or -0.5.
    Pearcey {
        #[arg(long)]
        points: String,
        #[arg(long = "N", value_delimiter = ',', default_value = "50,100,200")]
        ns: Vec<u32>,
    },
    /// Points as "s,r_offset,a;…" at T = tN, r = lN + r_offset.
    Jacobi {
        #[arg(long)]
        points: String,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        l: f64,
        #[arg(long = "N", value_delimiter = ',', default_value = "50,100,200")]
        ns: Vec<u32>,
    },
}

enum Failure {
    Invalid(Vec<String>),
    Core(wallsim_core::Error),
    Verification(String),
    Io(std::io::Error),
}

impl From<wallsim_core::Error> for Failure {
    fn from(e: wallsim_core::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Invalid(vec![msg.into()]))
}

impl Common {
    fn effective(&self) -> Result<ExperimentConfig, Failure> {
        let file = match &self.config {
            Some(p) => ExperimentConfig::from_file(p).map_err(Failure::Invalid)?,
            None => ExperimentConfig::default(),
        };
        let mut contour = None;
        if self.radius.is_some() || self.contour_shape.is_some() || self.contour_tol.is_some() {
            let mut c = file.contour.unwrap_or_default();
            if let Some(r) = self.radius {
                c.radius = r;
                c.shape = ContourShape::Centered;
            }
            if let Some(s) = self.contour_shape {
                c.shape = match s {
                    ShapeArg::Centered => ContourShape::Centered,
                    ShapeArg::Saddle => ContourShape::Saddle,
                    ShapeArg::Auto => ContourShape::Auto,
                };
            }
            if let Some(t) = self.contour_tol {
                c.tol = t;
            }
            contour = Some(c);
        }
        let mut quadrature = None;
        if self.quad_nodes.is_some() || self.quad_tol.is_some() {
            let mut q = file.quadrature.unwrap_or_default();
            q.nodes = self.quad_nodes.unwrap_or(q.nodes);
            q.tol = self.quad_tol.unwrap_or(q.tol);
            quadrature = Some(q);
        }
        let flags = ExperimentConfig {
            command: None,
            q: self.q.clone(),
            levels: self.levels,
            steps: self.steps,
            replicas: self.replicas,
            seed: self.seed,
            odd_wall_uses_half_time: self.odd_wall_time.map(|w| w == WallTime::Half),
            quadrature,
            contour,
            pearcey: None,
            output: self.out.clone(),
            format: self.format,
        };
        Ok(file.overridden_by(flags))
    }
}

/// Effective config plus subcommand arguments; the output path is left out so that
/// identical runs written to different places carry the same hash.
fn header<A: Serialize>(name: &str, cfg: &ExperimentConfig, args: &A) -> Header {
    let mut hashed = cfg.clone();
    hashed.output = None;
    let effective = serde_json::json!({ "command": name, "args": args, "config": hashed });
    Header::new(name, effective, cfg.seed())
}

fn pick_format(cfg: &ExperimentConfig, allowed: &[Format], default: Format) -> Result<Format, Failure> {
    let f = cfg.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        invalid(format!("format {f:?} is not available here; choose one of {allowed:?}").to_lowercase())
    }
}

fn q_list(cfg: &ExperimentConfig, defaults: &[(i64, i64)]) -> Result<Vec<(String, Rational)>, Failure> {
    match &cfg.q {
        Some(q) => {
            let r = q.exact().map_err(|e| Failure::Invalid(vec![e]))?;
            Ok(vec![(r.to_string(), r)])
        }
        None => Ok(defaults.iter().map(|&(a, b)| (format!("{a}/{b}"), wallsim_core::rational(a, b))).collect()),
    }
}

#[derive(Serialize)]
struct Check {
    name: String,
    q: String,
    cases: usize,
    max_residual: String,
    max_residual_f64: f64,
    passed: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    passed: bool,
    checks: Vec<Check>,
}

fn exact_check(name: String, q: &str, cases: usize, residual: &Rational) -> Check {
    Check {
        name,
        q: q.to_string(),
        cases,
        max_residual: residual.to_string(),
        max_residual_f64: residual.to_f64(),
        passed: residual.is_zero(),
    }
}

fn levels_or(k: Option<usize>, lo: usize, hi: usize) -> Vec<usize> {
    k.map_or_else(|| (lo..=hi).collect(), |k| vec![k])
}

fn verify(common: &Common, which: &VerifyCmd) -> Result<(), Failure> {
    let cfg = common.effective()?;
    cfg.validate(Command::Verify, false).map_err(Failure::Invalid)?;
    pick_format(&cfg, &[Format::Json], Format::Json)?;
    let mut checks = Vec::new();
    let name = match which {
        VerifyCmd::Keyidentity { id, all: _, bound } => {
            let ids: Vec<u8> = id.map_or_else(|| vec![1, 2, 3, 4], |i| vec![i]);
            for (label, q) in q_list(&cfg, &[(1, 4), (1, 3), (1, 2), (2, 3)])? {
                for &i in &ids {
                    let grid = KeyIdentity::grid(i, *bound)?;
                    let residuals: Vec<Rational> =
                        grid.par_iter().map(|c| keyidentity_check(c, &q)).collect::<Result<_, _>>()?;
                    let worst = residuals.into_iter().fold(Rational::zero(), |a, b| if b > a { b } else { a });
                    checks.push(exact_check(format!("identity {i}"), &label, grid.len(), &worst));
                }
            }
            "verify keyidentity"
        }
        VerifyCmd::Intertwining { k, cap, tail_tol, tol } => {
            for (label, q) in q_list(&cfg, &[(1, 2)])? {
                for k in levels_or(*k, 2, 4) {
                    let rep = intertwining_check(k, *cap, &q, *tail_tol)?;
                    let c = &rep.comparison;
                    checks.push(Check {
                        name: format!("intertwining k={k} M={cap} ({}/{} conclusive rows)", c.conclusive_rows, c.total_rows),
                        q: label.clone(),
                        cases: c.conclusive_rows,
                        max_residual: c.max_residual.to_string(),
                        max_residual_f64: c.max_residual,
                        passed: c.max_residual <= *tol && c.conclusive_rows > 0,
                    });
                }
            }
            "verify intertwining"
        }
        VerifyCmd::Branching { k, cap } => {
            for k in levels_or(*k, 2, 6) {
                let states = enumerate_states(k, *cap);
                let worst = states
                    .iter()
                    .map(|mu| branching_check(k, mu, *cap))
                    .collect::<Result<Vec<_>, _>>()?
                    .into_iter()
                    .fold(Rational::zero(), |a, b| if b > a { b } else { a });
                checks.push(exact_check(format!("branching k={k}"), "-", states.len(), &worst));
            }
            "verify branching"
        }
        VerifyCmd::Psame { k, cap, tol } => {
            let quad = cfg.quadrature();
            for (label, q) in q_list(&cfg, &[(1, 5), (1, 2), (4, 5)])? {
                let qf = q.to_f64();
                for k in levels_or(*k, 1, 5) {
                    let a = JacobiParam::for_level(k);
                    let gram = GramTable::quadrature(a, qf, *cap as usize + parts_on_level(k), &quad)?;
                    let states = enumerate_states(k, *cap);
                    let rows: Vec<(Rational, f64)> = states
                        .par_iter()
                        .map(|lam| {
                            let mut exact = Rational::zero();
                            let mut quad_gap: f64 = 0.0;
                            for mu in &states {
                                let p: Rational = p_kernel(k, lam, mu, &q)?;
                                let t: Rational = t_kernel_with(k, lam, mu, |s, t| Ok(inner_product_closed(s, t, a, &q)))?;
                                let d = (p - &t).abs();
                                if d > exact {
                                    exact = d;
                                }
                                let tq = t_kernel_with(k, lam, mu, |s, t| gram.get(s, t))?;
                                quad_gap = quad_gap.max((t.to_f64() - tq).abs());
                            }
                            Ok((exact, quad_gap))
                        })
                        .collect::<Result<_, wallsim_core::Error>>()?;
                    let pairs = states.len() * states.len();
                    let worst = rows.iter().map(|r| r.0.clone()).fold(Rational::zero(), |a, b| if b > a { b } else { a });
                    let gap = rows.iter().map(|r| r.1).fold(0.0, f64::max);
                    checks.push(exact_check(format!("P = T closed, k={k}"), &label, pairs, &worst));
                    checks.push(Check {
                        name: format!("T closed vs quadrature, k={k}"),
                        q: label.clone(),
                        cases: pairs,
                        max_residual: format!("{gap:e}"),
                        max_residual_f64: gap,
                        passed: gap <= *tol,
                    });
                }
            }
            "verify psame"
        }
        VerifyCmd::Sp { k, cap } => {
            for (label, q) in q_list(&cfg, &[(1, 5), (1, 2), (4, 5)])? {
                for k in levels_or(*k, 1, 4) {
                    let r = sp_check(k, *cap, &q);
                    checks.push(exact_check(format!("marginal of S equals P, k={k}"), &label, enumerate_states(k, *cap).len(), &r));
                }
            }
            "verify sp"
        }
    };
    let passed = checks.iter().all(|c| c.passed);
    let report = VerifyReport { passed, checks };
    emit(cfg.output.as_deref(), &json_document(&header(name, &cfg, which), &report))?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification(format!("{name}: at least one residual exceeds its tolerance")))
    }
}

#[derive(Serialize)]
struct StateLine<'a> {
    replica: u64,
    #[serde(flatten)]
    state: &'a InterlacingState,
}

fn simulate(common: &Common, args: &SimulateArgs) -> Result<(), Failure> {
    let cfg = common.effective()?;
    pick_format(&cfg, &[Format::Jsonl], Format::Jsonl)?;
    let head = header("simulate", &cfg, args);
    let mut out = serde_json::to_vec(&serde_json::json!({ "header": head })).expect("json");
    out.push(b'\n');
    if let Some(draws) = &args.draws {
        cfg.validate(Command::Simulate, false).map_err(Failure::Invalid)?;
        let table = DrawTable::from_json(&std::fs::read_to_string(draws)?)?;
        let start_path = args.start.as_ref().expect("clap enforces --start");
        let start: InterlacingState = serde_json::from_str(&std::fs::read_to_string(start_path)?)
            .map_err(|e| Failure::Invalid(vec![format!("start state: {e}")]))?;
        let start = InterlacingState::new(start.t_half, start.levels)?;
        let rule = cfg.run_config().rule();
        let mut draws = table;
        let mut x = start;
        let mut lines = vec![x.clone()];
        for _ in 0..cfg.steps.unwrap_or(1) {
            let h = left_half_step(&x, &mut draws)?;
            let y = right_half_step(&x, &h, &mut draws, rule)?;
            if args.record == RecordArg::Half {
                lines.push(h);
            }
            lines.push(y.clone());
            x = y;
        }
        for s in &lines {
            out.extend(serde_json::to_vec(&StateLine { replica: 0, state: s }).expect("json"));
            out.push(b'\n');
        }
    } else {
        cfg.validate(Command::Simulate, true).map_err(Failure::Invalid)?;
        let run = cfg.run_config();
        run.validate().map_err(Failure::Invalid)?;
        let record = match args.record {
            RecordArg::Half => Record::Half,
            RecordArg::Integer => Record::Integer,
        };
        let chunks: Vec<Vec<u8>> = (0..run.replicas)
            .into_par_iter()
            .map(|rep| {
                let mut buf = Vec::new();
                for s in run_trajectory(&run, rep, record)? {
                    buf.extend(serde_json::to_vec(&StateLine { replica: rep, state: &s }).expect("json"));
                    buf.push(b'\n');
                }
                Ok(buf)
            })
            .collect::<Result<_, wallsim_core::Error>>()?;
        for c in chunks {
            out.extend(c);
        }
    }
    emit(cfg.output.as_deref(), &out)?;
    Ok(())
}

#[derive(Serialize)]
struct KernelEntry {
    i: usize,
    j: usize,
    p: String,
    p2: String,
    re: f64,
    im: f64,
    err_est: f64,
}

fn kernel(common: &Common, args: &KernelArgs) -> Result<(), Failure> {
    let cfg = common.effective()?;
    cfg.validate(Command::Kernel, false).map_err(Failure::Invalid)?;
    let fmt = pick_format(&cfg, &[Format::Json, Format::Csv], Format::Json)?;
    let q = cfg.q_value(0.5);
    let spec = cfg.contour();
    let points = SpacePoint::parse_list(&args.points)?;
    if points.is_empty() {
        return invalid("no points given");
    }
    let mut entries = Vec::new();
    for (i, a) in points.iter().enumerate() {
        for (j, b) in points.iter().enumerate() {
            let v = correlation_kernel(args.time, *a, *b, q, &spec)?;
            entries.push(KernelEntry { i, j, p: a.to_string(), p2: b.to_string(), re: v.re, im: v.im, err_est: v.err_est });
        }
    }
    let head = header("kernel", &cfg, args);
    let bytes = match fmt {
        Format::Csv => csv_document(&head, &entries)?,
        _ => {
            let det = correlation_det(args.time, &points, q, &spec).ok();
            json_document(&head, &serde_json::json!({ "T": args.time, "q": q, "entries": entries, "det": det }))
        }
    };
    emit(cfg.output.as_deref(), &bytes)?;
    Ok(())
}

fn compare(common: &Common, args: &CompareArgs) -> Result<(), Failure> {
    let cfg = common.effective()?;
    cfg.validate(Command::Compare, true).map_err(Failure::Invalid)?;
    pick_format(&cfg, &[Format::Json], Format::Json)?;
    let run = cfg.run_config();
    run.validate().map_err(Failure::Invalid)?;
    let head = header("compare", &cfg, args);
    let (report, passed) = match args.what {
        CompareWhat::Marginal | CompareWhat::Transition => {
            let ens = TransitionEnsemble::simulate(&run)?;
            let mut reports = Vec::new();
            let mut ok = true;
            for k in 1..=run.levels {
                for n in 1..=run.steps as u32 {
                    if args.what == CompareWhat::Marginal {
                        let m = marginal_report(&ens, k, n, run.q, args.cap, args.min_expected)?;
                        ok &= m.comparison.max_abs_z <= args.z_max && m.total_variation <= args.tv_max;
                        reports.push(serde_json::to_value(m).expect("json"));
                    } else {
                        let t = transition_report(&ens, k, n, run.q, args.cap, args.min_expected, args.sigma)?;
                        ok &= t.comparison.family.passes();
                        reports.push(serde_json::to_value(t).expect("json"));
                    }
                }
            }
            (serde_json::json!({ "passed": ok, "reports": reports }), ok)
        }
        CompareWhat::Correlation => {
            let window = Window::new(args.s_max, run.levels)?;
            let cal = calibrate_convention(run.q, &cfg.contour())?;
            let ens = OccupationEnsemble::simulate(&run, window, cal.chosen)?;
            let points = grid_points(args.s_max, run.levels);
            let rep = correlation_grid_report(&ens, run.q, run.steps as u32, &points, &cfg.contour(), args.sigma)?;
            let ok = rep.family.passes();
            (serde_json::json!({ "passed": ok, "calibration": cal, "report": rep }), ok)
        }
    };
    emit(cfg.output.as_deref(), &json_document(&head, &report))?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification("compare: ensemble disagrees with the exact law".into()))
    }
}

fn parse_triples(text: &str) -> Result<Vec<[f64; 3]>, Failure> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|chunk| {
            let v: Vec<f64> = chunk
                .trim_matches(|c| c == '(' || c == ')')
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| Failure::Invalid(vec![format!("bad point `{chunk}`")]))?;
            match v.as_slice() {
                [a, b, c] => Ok([*a, *b, *c]),
                _ => invalid(format!("point `{chunk}` needs three comma-separated numbers")),
            }
        })
        .collect()
}

fn asymptotics(common: &Common, which: &AsymCmd) -> Result<(), Failure> {
    let cfg = common.effective()?;
    cfg.validate(Command::Asymptotics, false).map_err(Failure::Invalid)?;
    let fmt = pick_format(&cfg, &[Format::Csv, Format::Json], Format::Csv)?;
    let q = cfg.q_value(0.5);
    let contour = cfg.contour.unwrap_or_else(ContourSpec::large_t);
    let (name, rows) = match which {
        AsymCmd::Pearcey { points, ns } => {
            let pts = parse_triples(points)?
                .into_iter()
                .map(|[nu, eta, a]| Ok(ChartPoint { point: PearceyPoint::new(nu, eta)?, a: JacobiParam::from_value(a)? }))
                .collect::<Result<Vec<_>, wallsim_core::Error>>()?;
            ("asymptotics pearcey", convergence_diagnostic_pearcey(&pts, q, ns, &contour, &cfg.pearcey())?)
        }
        AsymCmd::Jacobi { points, t, l, ns } => {
            let pts = parse_triples(points)?
                .into_iter()
                .map(|[s, r, a]| {
                    if s < 0.0 || s.fract() != 0.0 || r.fract() != 0.0 {
                        return Err(wallsim_core::Error::InvalidArgument(format!("s and r_offset must be integers, s >= 0; got {s}, {r}")));
                    }
                    Ok(JacobiPoint { s: s as u32, r_offset: r as i64, a: JacobiParam::from_value(a)? })
                })
                .collect::<Result<Vec<_>, wallsim_core::Error>>()?;
            ("asymptotics jacobi", convergence_diagnostic_jacobi(&pts, *t, *l, q, ns, &contour, &cfg.quadrature())?)
        }
    };
    let head = header(name, &cfg, which);
    let bytes = match fmt {
        Format::Csv => csv_document(&head, &rows)?,
        _ => json_document(&head, &rows),
    };
    emit(cfg.output.as_deref(), &bytes)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: cannot start {n} worker threads");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Cmd::Simulate(a) => simulate(&cli.common, a),
        Cmd::Verify { which } => verify(&cli.common, which),
        Cmd::Kernel(a) => kernel(&cli.common, a),
        Cmd::Compare(a) => compare(&cli.common, a),
        Cmd::Asymptotics { which } => asymptotics(&cli.common, which),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(errs)) => {
            for e in errs {
                eprintln!("invalid argument: {e}");
            }
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("{e}");
            ExitCode::from(match e {
                wallsim_core::Error::InvalidArgument(_) => 2,
                wallsim_core::Error::NumericalFailure(_) => 3,
                wallsim_core::Error::Inconclusive(_) => 4,
            })
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(4)
        }
        Err(Failure::Io(e)) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(1)
        }
    }
}
