//! Command line front end, configuration and file formats for
//! `hardy-kernels-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod config;
pub mod error;
pub mod format;
pub mod suites;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hardy_kernels_core::audit::{AuditReport, TableSettings, Verdict};
use hardy_kernels_core::duhamel::{default_kernel_mesh, perturbed_kernel_1d, SolveMethod};
use hardy_kernels_core::grid::log_space;
use hardy_kernels_core::hardy::kappa_star;
use hardy_kernels_core::spectral::{decay_exponent_fits, default_ground_state_grid, ground_state_solve};
use hardy_kernels_core::table::KernelTable;
use hardy_kernels_core::{LevyKind, LevyModel, RadialGrid};
use serde_json::json;

pub use config::{load_config, RunConfig};
pub use error::{CliError, Result};
use suites::{run_suite, Suite, SuiteSettings};

#[derive(Debug, Parser)]
#[command(name = "hardy-kernels", version, about = "Heat kernels and ground states of nonlocal Schrödinger operators with a Hardy potential")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Converts between the coupling κ and the exponent δ.
    Map(Common),
    /// Tabulates the free heat kernel p_t(r).
    Kernel {
        #[command(flatten)]
        common: Common,
        /// A single time instead of a log-spaced time grid up to T.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Tabulates the perturbed kernel p̃_t(x, y) in d = 1.
    Perturb(Common),
    /// Solves for the ground state of ψ(D) - κ|x|^{-α}.
    Solve(Common),
    /// Runs a named audit suite and writes the reports as a JSON array.
    Audit {
        #[command(flatten)]
        common: Common,
        /// all, kernels, duhamel, spectral or envelopes.
        #[arg(long)]
        suite: Option<String>,
    },
    /// Summarizes a JSON audit report.
    Report {
        input: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Stable,
    Relativistic,
    Tempered,
    Layered,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// JSON run configuration or bare model specification.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// Mass of the relativistic model.
    #[arg(long)]
    m: Option<f64>,
    /// Tempering rate and exponent.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Decay exponent of the layered model.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Number of radii.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    /// Number of times.
    #[arg(long = "times")]
    times: Option<usize>,
    /// Time horizon.
    #[arg(long = "T")]
    t_max: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    n_terms: Option<usize>,
    /// Time steps of the Duhamel solver.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Lift the N ≤ 2048 and T ≤ 4 guards.
    #[arg(long)]
    unsafe_large: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl Common {
    fn model_given(&self) -> bool {
        self.d.is_some() || self.alpha.is_some() || self.kind.is_some()
    }

    fn kind(&self, fallback: Option<LevyKind>) -> Result<LevyKind> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| CliError::Config(format!("--{name} is required for this model")));
        Ok(match self.kind {
            None => fallback.unwrap_or(LevyKind::Stable),
            Some(KindArg::Stable) => LevyKind::Stable,
            Some(KindArg::Relativistic) => LevyKind::Relativistic { m: self.m.unwrap_or(1.0) },
            Some(KindArg::Tempered) => LevyKind::Tempered { lambda: need(self.lambda, "lambda")?, beta: need(self.beta, "beta")? },
            Some(KindArg::Layered) => LevyKind::Layered { gamma: need(self.gamma, "gamma")?, r_cut: 1.0 },
        })
    }

    /// The configuration file (if any) with command-line overrides applied.
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(CliError::io(p))?;
                config::parse_config(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => {
                let d = self.d.ok_or_else(|| CliError::Config("give --config or --d and --alpha".into()))?;
                let alpha = self.alpha.ok_or_else(|| CliError::Config("give --config or --d and --alpha".into()))?;
                RunConfig::for_model(LevyModel::new(d, alpha, self.kind(None)?)?)
            }
        };
        if self.config.is_some() && self.model_given() {
            let d = self.d.unwrap_or(cfg.model.d());
            let alpha = self.alpha.unwrap_or(cfg.model.alpha());
            cfg.model = LevyModel::new(d, alpha, self.kind(Some(cfg.model.kind()))?)?;
        }
        if self.kappa.is_some() || self.delta.is_some() {
            cfg.kappa = self.kappa;
            cfg.delta = self.delta;
        }
        let g = &mut cfg.grid;
        g.n = self.n.or(g.n);
        g.r_min = self.r_min.or(g.r_min);
        g.r_max = self.r_max.or(g.r_max);
        g.m = self.times.unwrap_or(g.m);
        g.t_max = self.t_max.unwrap_or(g.t_max);
        let q = &mut cfg.quadrature;
        q.tol = self.tol.unwrap_or(q.tol);
        q.n_terms = self.n_terms.unwrap_or(q.n_terms);
        q.nodes = self.nodes.unwrap_or(q.nodes);
        cfg.output.out = self.out.clone().or(cfg.output.out);
        cfg.output.csv = self.csv.clone().or(cfg.output.csv);
        cfg.workers = self.workers.or(cfg.workers);
        cfg.unsafe_large |= self.unsafe_large;
        cfg.validate()
    }
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn map(common: &Common) -> Result<()> {
    let cfg = common.resolve()?;
    let c = cfg.coupling()?;
    print_json(&json!({
        "d": c.d,
        "alpha": c.alpha,
        "kappa": c.kappa,
        "delta": c.delta,
        "kappa_star": kappa_star(c.d, c.alpha)?,
    }));
    Ok(())
}

fn save(table: &KernelTable, cfg: &RunConfig) -> Result<()> {
    if let Some(p) = &cfg.output.out {
        format::write_table(table, p)?;
    }
    if let Some(p) = &cfg.output.csv {
        format::write_csv(table, p)?;
    }
    print_json(&json!({
        "kind": table.kind,
        "radii": table.radii.len(),
        "times": table.times.len(),
        "columns": table.columns,
        "out": cfg.output.out,
        "csv": cfg.output.csv,
    }));
    Ok(())
}

fn kernel(common: &Common, t: Option<f64>) -> Result<()> {
    let cfg = common.resolve()?;
    let g = &cfg.grid;
    let times = match t {
        Some(t) if t > 0.0 && (t <= config::MAX_HORIZON || cfg.unsafe_large) => vec![t],
        Some(t) => return Err(CliError::Config(format!("t = {t} must lie in (0, {}]", config::MAX_HORIZON))),
        None => log_space(g.t_max / 100.0, g.t_max, g.m),
    };
    let grid = RadialGrid::log(g.r_min.unwrap_or(1e-3), g.r_max.unwrap_or(1e2), g.n.unwrap_or(256), times)?;
    let key = json!({"command": "kernel", "model": cfg.model, "grid": grid});
    let table = cache::cached_table(&key, || Ok(KernelTable::heat(&cfg.model, &grid)?))?;
    save(&table, &cfg)
}

fn perturb(common: &Common) -> Result<()> {
    let cfg = common.resolve()?;
    let c = cfg.coupling()?;
    let n = cfg.grid.n.unwrap_or(96);
    let radii = match (cfg.grid.r_min, cfg.grid.r_max) {
        (None, None) => default_kernel_mesh(n).nodes,
        (a, b) => log_space(a.unwrap_or(1e-3), b.unwrap_or(10.0), n),
    };
    let q = &cfg.quadrature;
    let method = SolveMethod::Series { tol: q.tol, max_terms: q.n_terms };
    let key = json!({"command": "perturb", "model": cfg.model, "coupling": c, "radii": radii, "T": cfg.grid.t_max, "steps": q.nodes, "tol": q.tol, "n_terms": q.n_terms});
    let table = cache::cached_table(&key, || {
        let p = perturbed_kernel_1d(&cfg.model, &c, &radii, cfg.grid.t_max, q.nodes, method)?;
        Ok(KernelTable::from_perturbed(&p))
    })?;
    save(&table, &cfg)
}

fn solve(common: &Common) -> Result<()> {
    let cfg = common.resolve()?;
    let c = cfg.coupling()?;
    let grid = match (cfg.grid.r_min, cfg.grid.r_max) {
        (None, None) => default_ground_state_grid(cfg.grid.n.unwrap_or(512))?,
        (a, b) => RadialGrid::log(a.unwrap_or(1e-6), b.unwrap_or(60.0), cfg.grid.n.unwrap_or(512), vec![0.5])?,
    };
    let gs = ground_state_solve(&cfg.model, &c, &grid, cfg.quadrature.tol)?;
    let fits = decay_exponent_fits(&gs).ok();
    let file = format::GroundStateFile::new(&gs, fits);
    if let Some(p) = &cfg.output.out {
        format::write_json(&file, p)?;
    }
    print_json(&json!({
        "E": gs.energy,
        "lambda_star": gs.lambda_star,
        "E_shifted": gs.shifted_energy(),
        "fits": file.fits,
        "out": cfg.output.out,
    }));
    Ok(())
}

fn summarize(reports: &[AuditReport]) -> usize {
    let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4e}"));
    for r in reports {
        let verdict = match r.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        };
        println!("{verdict:<13} {:<24} c_lower={:<11} c_upper={:<11} {}", r.estimate_id, show(r.c_lower), show(r.c_upper), r.grid);
    }
    reports.iter().filter(|r| r.verdict == Verdict::Fail).count()
}

fn audit(common: &Common, suite: Option<&str>) -> Result<()> {
    let have_model = common.config.is_some() || common.model_given();
    let cfg = if have_model { Some(common.resolve()?) } else { None };
    let name = suite.map(str::to_string).or_else(|| cfg.as_ref().and_then(|c| c.suite.clone())).unwrap_or_else(|| "all".into());
    let suite: Suite = name.parse().map_err(CliError::Config)?;
    let mut settings = SuiteSettings::default();
    let nodes = common.nodes.or(cfg.as_ref().map(|c| c.quadrature.nodes)).unwrap_or(settings.tables.steps);
    let n = common.n.or(cfg.as_ref().and_then(|c| c.grid.n));
    if let Some(n) = n {
        settings.radii = n;
        settings.tables = TableSettings { n, steps: nodes };
    } else {
        settings.tables.steps = nodes;
    }
    settings.horizon = common.t_max.or(cfg.as_ref().map(|c| c.grid.t_max)).unwrap_or(1.0);
    if let Some(c) = &cfg {
        settings.models = vec![c.model.clone()];
        settings.kappa = c.kappa;
    }
    let workers = common.workers.or(cfg.as_ref().and_then(|c| c.workers));
    let reports = run_suite(suite, &settings, workers)?;
    if let Some(p) = common.out.as_ref().or(cfg.as_ref().and_then(|c| c.output.out.as_ref())) {
        format::write_report(&reports, p)?;
    }
    match summarize(&reports) {
        0 => Ok(()),
        k => Err(CliError::AuditFailed(k)),
    }
}

fn report(input: &std::path::Path) -> Result<()> {
    let reports = format::read_report(input)?;
    match summarize(&reports) {
        0 => Ok(()),
        k => Err(CliError::AuditFailed(k)),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Map(c) => map(c),
        Command::Kernel { common, t } => kernel(common, *t),
        Command::Perturb(c) => perturb(c),
        Command::Solve(c) => solve(c),
        Command::Audit { common, suite } => audit(common, suite.as_deref()),
        Command::Report { input } => report(input),
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 for usage, configuration, domain and
/// I/O errors, 2 for numerical failures, 3 when an audit fails.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("hardy-kernels: {e}");
            e.exit_code()
        }
    }
}
