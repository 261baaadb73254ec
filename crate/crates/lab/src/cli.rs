//! The `stasep` command line: distribution tables, simulations and validation suites.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage error, 3 runtime or model error.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use stasep_core::airy_edge::{a0_constant_with, edge_moments, f_gue_with, f_w_table_with, g_scaling_with, EdgeConfig};
use stasep_core::error::Error as CoreError;
use stasep_core::lpp_sim::{last_passage, sample_weights, LppConfig};
use stasep_core::painleve_oracle::{default_solution, f0_moments, f_gue_painleve, g_br, PainleveSolution};
use stasep_core::tasep_sim::FwEngine;

use crate::config::{self, LppFile, TasepFile};
use crate::criteria::fw_comparison_with;
use crate::io::{RunManifest, Table};
use crate::parallel::map_chunks;
use crate::suites::{self, Budget, Check};
use crate::LabError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "stasep", version, about = "Stationary TASEP limit laws: tables, simulations, checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate F_GUE, F_w, g, g_sc or compute a_0.
    Distribution(DistributionArgs),
    /// Run the TASEP or LPP simulator from a config file.
    Simulate(SimulateArgs),
    /// Run the named identity suites and print a pass/fail matrix.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Fgue,
    Fw,
    G,
    Gsc,
    A0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Fredholm,
    Painleve,
    Both,
}

#[derive(Debug, clap::Args)]
pub struct DistributionArgs {
    #[arg(long, value_enum)]
    pub which: Which,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub w: f64,
    /// Grid start; for `gsc` the grid is in w.
    #[arg(long, default_value_t = -8.0, allow_hyphen_values = true)]
    pub s_min: f64,
    #[arg(long, default_value_t = 6.0, allow_hyphen_values = true)]
    pub s_max: f64,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub s_step: f64,
    /// Minimum Gauss–Legendre order of the Fredholm discretisation.
    #[arg(long)]
    pub quad_order: Option<usize>,
    #[arg(long, value_enum, default_value_t = Method::Fredholm)]
    pub method: Method,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Tasep,
    Lpp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Direct,
    Lpp,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    /// TOML run file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the replica count of the run file.
    #[arg(long)]
    pub replicas: Option<u64>,
    /// Overrides the master seed of the run file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TASEP only: the w of F_w.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub w: f64,
    /// TASEP only: how h_t(j) is sampled.
    #[arg(long, value_enum, default_value_t = Engine::Lpp)]
    pub engine: Engine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Identities,
    FiniteSize,
    EdgeConvergence,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BudgetArg {
    Fast,
    Full,
}

#[derive(Debug, clap::Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    #[arg(long, value_enum, default_value_t = BudgetArg::Fast)]
    pub budget: BudgetArg,
}

/// Why a command stopped; maps onto the exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Validation(String),
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Distribution(a) => distribution(&a, &args),
        Command::Simulate(a) => simulate(&a, &args),
        Command::Validate(a) => validate(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("usage error: {m}"),
                Failure::Validation(m) => eprintln!("validation failed: {m}"),
                Failure::Runtime(m) => eprintln!("error: {m}"),
            }
            f.code()
        }
    }
}

fn grid(a: &DistributionArgs) -> Outcome<Vec<f64>> {
    let (lo, hi, h) = (a.s_min, a.s_max, a.s_step);
    if !(lo.is_finite() && hi.is_finite() && h.is_finite()) || !(hi > lo) || !(h > 0.0) {
        return Err(Failure::Usage(format!("need s-min < s-max and s-step > 0, got [{lo}, {hi}] step {h}")));
    }
    let n = ((hi - lo) / h + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return Err(Failure::Usage(format!("{} grid points is too many", n + 1)));
    }
    Ok((0..=n).map(|k| lo + h * k as f64).collect())
}

/// ∂_s of `f` by the 5-point stencil at step 1e-2.
fn derivative(f: &dyn Fn(f64) -> Result<f64, CoreError>, s: f64) -> Result<f64, CoreError> {
    let h = 1e-2;
    let v: Vec<f64> = [-2.0, -1.0, 1.0, 2.0].iter().map(|k| f(s + h * k)).collect::<Result<_, _>>()?;
    Ok((v[0] - 8.0 * v[1] + 8.0 * v[2] - v[3]) / (12.0 * h))
}

/// One tabulated column pair; `density` is absent for g and g_sc.
struct Column {
    values: Vec<f64>,
    density: Option<Vec<f64>>,
}

fn fredholm_column(which: Which, w: f64, grid: &[f64], cfg: &EdgeConfig) -> Result<Column, CoreError> {
    match which {
        Which::Fgue => {
            let f = |s: f64| f_gue_with(s, cfg);
            Ok(Column {
                values: grid.iter().map(|&s| f(s)).collect::<Result<_, _>>()?,
                density: Some(grid.iter().map(|&s| derivative(&f, s)).collect::<Result<_, _>>()?),
            })
        }
        Which::Fw => {
            let t = f_w_table_with(w, grid, cfg)?;
            Ok(Column { values: t.cdf, density: t.density })
        }
        Which::G => Ok(Column { values: grid.iter().map(|&s| g_scaling_with(s, w, cfg)).collect::<Result<_, _>>()?, density: None }),
        Which::Gsc => Ok(Column { values: grid.iter().map(|&x| edge_moments(x, cfg).map(|m| m.second)).collect::<Result<_, _>>()?, density: None }),
        Which::A0 => unreachable!("a0 is a scalar"),
    }
}

fn painleve_column(which: Which, w: f64, grid: &[f64], sol: &PainleveSolution) -> Result<Column, CoreError> {
    let w2 = w * w;
    match which {
        Which::Fgue => {
            let f = |s: f64| f_gue_painleve(sol, s);
            Ok(Column {
                values: grid.iter().map(|&s| f(s)).collect::<Result<_, _>>()?,
                density: Some(grid.iter().map(|&s| derivative(&f, s)).collect::<Result<_, _>>()?),
            })
        }
        Which::Fw => {
            let h = |s: f64| Ok(f_gue_painleve(sol, s + w2)? * g_br(sol, s + w2, w.abs())?);
            let cdf = |s: f64| derivative(&h, s);
            Ok(Column {
                values: grid.iter().map(|&s| cdf(s)).collect::<Result<_, _>>()?,
                density: Some(grid.iter().map(|&s| derivative(&cdf, s)).collect::<Result<_, _>>()?),
            })
        }
        Which::G => Ok(Column { values: grid.iter().map(|&s| g_br(sol, s, w.abs())).collect::<Result<_, _>>()?, density: None }),
        Which::Gsc => Ok(Column {
            values: grid.iter().map(|&x| f0_moments(sol, x).map(|(m, v)| v + m * m)).collect::<Result<_, _>>()?,
            density: None,
        }),
        Which::A0 => unreachable!("a0 is a scalar"),
    }
}

fn write_column(path: &Path, axis: &str, grid: &[f64], col: &Column) -> Result<(), LabError> {
    let name = if axis == "w" { "g_sc" } else if col.density.is_some() { "cdf" } else { "g" };
    let mut t = match &col.density {
        Some(_) => Table::new(&[axis, name, "density"]),
        None => Table::new(&[axis, name]),
    };
    for (k, &s) in grid.iter().enumerate() {
        let mut row = vec![s, col.values[k]];
        if let Some(d) = &col.density {
            row.push(d[k]);
        }
        t.push(row);
    }
    t.write(path)
}

fn with_suffix(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "table".into());
    out.with_file_name(format!("{stem}.{suffix}.csv"))
}

fn which_name(w: Which) -> &'static str {
    match w {
        Which::Fgue => "fgue",
        Which::Fw => "fw",
        Which::G => "g",
        Which::Gsc => "gsc",
        Which::A0 => "a0",
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Fredholm => "fredholm",
        Method::Painleve => "painleve",
        Method::Both => "both",
    }
}

fn distribution(a: &DistributionArgs, argv: &[String]) -> Outcome<()> {
    let mut cfg = EdgeConfig::default();
    if let Some(q) = a.quad_order {
        if q < 8 {
            return Err(Failure::Usage(format!("quad-order must be at least 8, got {q}")));
        }
        cfg.min_order = q;
    }
    if !a.w.is_finite() {
        return Err(Failure::Usage("w must be finite".into()));
    }
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", which_name(a.which))));
    let config = json!({
        "which": which_name(a.which),
        "w": a.w,
        "s_min": a.s_min,
        "s_max": a.s_max,
        "s_step": a.s_step,
        "quad_min_order": cfg.min_order,
        "quad_density": cfg.density,
        "quad_edge": cfg.edge,
        "method": method_name(a.method),
    });
    let mut manifest = RunManifest::start(argv.to_vec(), config, None);

    if a.which == Which::A0 {
        if a.method != Method::Fredholm {
            return Err(Failure::Usage("a0 is computed from the Fredholm g_sc only".into()));
        }
        let r = a0_constant_with(&cfg)?;
        let mut t = Table::new(&["w", "g_sc"]);
        for (w, g) in r.w_grid.iter().zip(&r.g_sc) {
            t.push(vec![*w, *g]);
        }
        t.write(&out)?;
        manifest.record(&out)?;
        println!("a0 = {:.6}", r.a0);
        println!("integral of w^2 g_sc'' over [-3, 3] = {:.6}", r.integral);
        println!("tail estimate beyond |w| = 3: {:.3e}", r.tail_estimate);
        let m = manifest.finish(&out)?;
        println!("wrote {} and {}", out.display(), m.display());
        return Ok(());
    }

    let grid = grid(a)?;
    let axis = if a.which == Which::Gsc { "w" } else { "s" };
    let fred = || fredholm_column(a.which, a.w, &grid, &cfg);
    let pain = || -> Result<Column, CoreError> {
        let sol = default_solution()?;
        painleve_column(a.which, a.w, &grid, &sol)
    };
    match a.method {
        Method::Fredholm | Method::Painleve => {
            let col = if a.method == Method::Fredholm { fred()? } else { pain()? };
            write_column(&out, axis, &grid, &col)?;
            manifest.record(&out)?;
        }
        Method::Both => {
            let (f, p) = (fred()?, pain()?);
            let (fo, po) = (with_suffix(&out, "fredholm"), with_suffix(&out, "painleve"));
            write_column(&fo, axis, &grid, &f)?;
            write_column(&po, axis, &grid, &p)?;
            let mut t = Table::new(&[axis, "fredholm", "painleve", "diff"]);
            let mut worst: f64 = 0.0;
            for k in 0..grid.len() {
                let d = f.values[k] - p.values[k];
                worst = worst.max(d.abs());
                t.push(vec![grid[k], f.values[k], p.values[k], d]);
            }
            t.write(&out)?;
            manifest.record(&out)?;
            manifest.record(&fo)?;
            manifest.record(&po)?;
            println!("max |diff| = {worst:.3e}");
        }
    }
    if a.which == Which::Fw {
        if a.method != Method::Painleve {
            println!("mean of F_w (Fredholm) = {:.3e}", edge_moments(a.w, &cfg)?.mean);
        }
        if a.method != Method::Fredholm && a.w.abs() <= 1.5 {
            println!("mean of F_w (Painleve) = {:.3e}", f0_moments(&default_solution()?, a.w)?.0);
        }
    }
    let m = manifest.finish(&out)?;
    println!("wrote {} and {}", out.display(), m.display());
    Ok(())
}

fn simulate(a: &SimulateArgs, argv: &[String]) -> Outcome<()> {
    match a.model {
        Model::Tasep => simulate_tasep(a, argv),
        Model::Lpp => simulate_lpp(a, argv),
    }
}

fn simulate_tasep(a: &SimulateArgs, argv: &[String]) -> Outcome<()> {
    let mut file: TasepFile = config::load(&a.config).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(r) = a.replicas {
        file.replicas = r;
    }
    if let Some(s) = a.seed {
        file.master_seed = s;
    }
    let cfg = file.to_config()?;
    let engine = match a.engine {
        Engine::Direct => FwEngine::Direct,
        Engine::Lpp => FwEngine::LastPassage,
    };
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("tasep_fw.csv"));
    let config = json!({
        "model": "tasep",
        "run": serde_json::to_value(&file).map_err(LabError::from)?,
        "w": a.w,
        "engine": match a.engine { Engine::Direct => "direct", Engine::Lpp => "lpp" },
    });
    let mut manifest = RunManifest::start(argv.to_vec(), config, Some(file.master_seed));
    let (cmp, fw) = fw_comparison_with(&cfg, a.w, engine)?;
    let limit = f_w_table_with(a.w, &fw.table.grid, &EdgeConfig::default())?;
    let mut t = Table::new(&["s", "cdf", "se", "limit"]);
    for k in 0..fw.table.grid.len() {
        t.push(vec![fw.table.grid[k], fw.table.cdf[k], fw.se[k], limit.cdf[k]]);
    }
    t.write(&out)?;
    manifest.record(&out)?;
    let summary = with_suffix(&out, "ks");
    let mut s = Table::new(&["w", "replicas", "ks_sup", "ks_at", "ks_midpoint", "lattice_step", "mean", "mean_se"]);
    s.push(vec![a.w, cmp.replicas as f64, cmp.ks.sup, cmp.ks.at, cmp.ks.midpoint, cmp.ks.lattice_step, cmp.mean, cmp.mean_se]);
    s.write(&summary)?;
    manifest.record(&summary)?;
    println!("site {} at t = {}, {} replicas", fw.event.site, cfg.t_max, cfg.replicas);
    println!(
        "KS sup {:.4} at s = {:.3}; at lattice midpoints {:.4}; lattice step in s {:.3}",
        cmp.ks.sup, cmp.ks.at, cmp.ks.midpoint, cmp.ks.lattice_step
    );
    println!("sample mean of s {:.4} ± {:.4}", cmp.mean, cmp.mean_se);
    let m = manifest.finish(&out)?;
    println!("wrote {}, {} and {}", out.display(), summary.display(), m.display());
    Ok(())
}

/// Per-chunk sums behind the increment report.
#[derive(Debug, Clone, Default)]
struct IncrementSums {
    h: (f64, f64, f64),
    v: (f64, f64, f64),
}

fn simulate_lpp(a: &SimulateArgs, argv: &[String]) -> Outcome<()> {
    let mut file: LppFile = config::load(&a.config).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(r) = a.replicas {
        file.replicas = r;
    }
    if let Some(s) = a.seed {
        file.master_seed = s;
    }
    if file.replicas < 2 {
        return Err(Failure::Runtime("need at least two replicas".into()));
    }
    let cfg = LppConfig { m: file.m, n: file.n, model: file.model.into(), master_seed: file.master_seed, replicas: file.replicas };
    cfg.model.validate()?;
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("lpp_g.csv"));
    let config = json!({ "model": "lpp", "run": serde_json::to_value(&file).map_err(LabError::from)? });
    let mut manifest = RunManifest::start(argv.to_vec(), config, Some(file.master_seed));
    let (m, n) = (cfg.m, cfg.n);
    let parts = map_chunks(0..cfg.replicas, 256, |range| {
        let mut g = Vec::with_capacity((range.end - range.start) as usize);
        let mut inc = IncrementSums::default();
        for r in range {
            let grid = last_passage(&sample_weights(&cfg, r)?);
            g.push(grid.get(m, n));
            for i in 1..=m {
                let x = grid.get(i, n) - grid.get(i - 1, n);
                inc.h = (inc.h.0 + 1.0, inc.h.1 + x, inc.h.2 + x * x);
            }
            for j in 1..=n {
                let x = grid.get(m, j) - grid.get(m, j - 1);
                inc.v = (inc.v.0 + 1.0, inc.v.1 + x, inc.v.2 + x * x);
            }
        }
        Ok(vec![(g, inc)])
    })?;
    let mut g = Vec::with_capacity(cfg.replicas as usize);
    let mut inc = IncrementSums::default();
    for (gs, s) in parts {
        g.extend(gs);
        inc.h = (inc.h.0 + s.h.0, inc.h.1 + s.h.1, inc.h.2 + s.h.2);
        inc.v = (inc.v.0 + s.v.0, inc.v.1 + s.v.1, inc.v.2 + s.v.2);
    }
    let mut sorted = g.clone();
    sorted.sort_by(|x, y| x.total_cmp(y));
    let nr = sorted.len() as f64;
    let mean = g.iter().sum::<f64>() / nr;
    let var = g.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nr - 1.0);
    let mut t = Table::new(&["quantile", "g"]);
    for k in 0..=100 {
        let q = k as f64 / 100.0;
        let idx = ((nr - 1.0) * q).round() as usize;
        t.push(vec![q, sorted[idx]]);
    }
    t.write(&out)?;
    manifest.record(&out)?;
    let incr = with_suffix(&out, "increments");
    let mut it = Table::new(&["axis", "count", "mean", "variance", "var_over_mean_sq"]);
    for (axis, (c, s1, s2)) in [(0.0, inc.h), (1.0, inc.v)] {
        if c > 0.0 {
            let mu = s1 / c;
            let v = s2 / c - mu * mu;
            it.push(vec![axis, c, mu, v, v / (mu * mu)]);
            let name = if axis == 0.0 { "G(i,n) - G(i-1,n)" } else { "G(m,j) - G(m,j-1)" };
            println!("{name}: mean {mu:.5}, variance {v:.5}, variance/mean^2 {:.4}", v / (mu * mu));
        }
    }
    it.write(&incr)?;
    manifest.record(&incr)?;
    println!("G({m},{n}) over {} replicas: mean {mean:.4}, variance {var:.4}", cfg.replicas);
    let mf = manifest.finish(&out)?;
    println!("wrote {}, {} and {}", out.display(), incr.display(), mf.display());
    Ok(())
}

fn print_matrix(title: &str, checks: &[Check]) -> bool {
    println!("[{title}]");
    for c in checks {
        println!("  {}", c.line());
    }
    checks.iter().all(|c| c.passed)
}

fn validate(a: &ValidateArgs) -> Outcome<()> {
    let budget = match a.budget {
        BudgetArg::Fast => Budget::Fast,
        BudgetArg::Full => Budget::Full,
    };
    let want = |s: Suite| a.suite == s || a.suite == Suite::All;
    let mut failed = Vec::new();
    if want(Suite::Identities) {
        let t0 = std::time::Instant::now();
        let checks = suites::identities()?;
        if !print_matrix("identities", &checks) {
            failed.extend(checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()));
        }
        println!("  ({:.1} s)", t0.elapsed().as_secs_f64());
    }
    if want(Suite::FiniteSize) {
        let (checks, _) = suites::finite_size_checks(budget)?;
        if !print_matrix("finite-size", &checks) {
            failed.extend(checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()));
        }
    }
    if want(Suite::EdgeConvergence) {
        let (checks, e) = suites::edge_convergence_checks()?;
        for (k, n) in e.sizes.iter().enumerate() {
            println!("  N = {n:>5}: |F_N - F| = {:.3e}, |G_N - G| = {:.3e}", e.f_error[k], e.g_error[k]);
        }
        if !print_matrix("edge-convergence", &checks) {
            failed.extend(checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(failed.join("; ")))
    }
}
