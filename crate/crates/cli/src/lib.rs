//! Batch front-end: one subcommand per solver capability, each reading a JSON
//! run config and writing CSV/JSON artifacts into an output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use qpresponse::bifurcation::{even_order_probe, solve_bifurcation, sweep_curve};
use qpresponse::dynamics::{attraction_check_with, AttractionSettings, IntegratorSettings};
use qpresponse::fmt::float;
use qpresponse::freq::{bryuno_from_table, DivisorTable};
use qpresponse::model::{classify_zeros, ProblemConfig};
use qpresponse::series::{convergence_diagnostic, expand};
use qpresponse::solver::solve_range;
use qpresponse::trees::{counting_sweep_with, SUPPORT_FACTOR};
use qpresponse::{Error, MultiIndex, ProbeGrid, Problem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Bryuno,
    Solve,
    Sweep,
    Series,
    Trees,
    Simulate,
    Probe,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bryuno => "bryuno",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Series => "series",
            Command::Trees => "trees",
            Command::Simulate => "simulate",
            Command::Probe => "probe",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub bryuno: BryunoConfig,
    #[serde(default)]
    pub solve: Option<SolveConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub series: Option<SeriesConfig>,
    #[serde(default)]
    pub trees: TreesConfig,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub probe: Option<ProbeConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BryunoConfig {
    pub n_max: usize,
}

impl Default for BryunoConfig {
    fn default() -> Self {
        BryunoConfig { n_max: 6 }
    }
}

/// With `c` set the range equation is solved at that average; otherwise c
/// solves the bifurcation equation near `c0` (default: the first odd zero).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub eps: f64,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub c0: Option<f64>,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub eps_grid: Vec<f64>,
    #[serde(default)]
    pub c0: Option<f64>,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub c: f64,
    pub max_order: usize,
    /// Defaults to the problem's truncation.
    #[serde(default)]
    pub trunc: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreesConfig {
    pub k_max: usize,
    /// End-node modes; defaults to ±e_i.
    pub support: Option<Vec<Vec<i32>>>,
    /// Defaults to deg g.
    pub max_branch: Option<usize>,
    /// Scale rule n = min{n : |x| > factor·α_n}.
    pub scale_factor: f64,
}

impl Default for TreesConfig {
    fn default() -> Self {
        TreesConfig {
            k_max: 5,
            support: None,
            max_branch: None,
            scale_factor: SUPPORT_FACTOR,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub eps: f64,
    #[serde(default)]
    pub c0: Option<f64>,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default)]
    pub delta: f64,
    pub t_end: f64,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default = "default_tube")]
    pub tol: f64,
    #[serde(default = "default_window")]
    pub window_start: f64,
    /// Keep every stride-th sample in the CSV.
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub integrator: IntegratorSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub eps_list: Vec<f64>,
    #[serde(default)]
    pub c0: Option<f64>,
    /// Grid c0 + ε·u over this many equally spaced u ∈ [−1, 1].
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_half_width() -> f64 {
    0.1
}
fn default_tube() -> f64 {
    1e-4
}
fn default_window() -> f64 {
    0.5
}
fn default_stride() -> usize {
    1
}
fn default_points() -> usize {
    41
}

/// Error reported as `{"error": kind, "message": …}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CliError {
    pub error: String,
    pub message: String,
}

impl CliError {
    fn new(kind: &str, message: impl Into<String>) -> Self {
        CliError {
            error: kind.into(),
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error serializes")
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::InvalidFrequency(_) => "invalid_frequency",
            Error::ZeroDivisor { .. } => "zero_divisor",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::ZeroIndex => "zero_index",
            Error::UnknownName(_) => "unknown_name",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::SymmetryViolation(_) => "symmetry_violation",
            Error::Precondition(_) => "precondition",
            Error::VanishingDenominator { .. } => "vanishing_denominator",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Divergence { .. } => "divergence",
            Error::NoSignChange { .. } => "no_sign_change",
            Error::DivisorTooSmall { .. } => "divisor_too_small",
            Error::DepthExceeded { .. } => "depth_exceeded",
            Error::StepRejected { .. } => "step_rejected",
            Error::Blowup { .. } => "blowup",
            Error::Parse(_) => "parse",
        };
        CliError::new(kind, e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::new("config", e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::new("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<String>,
}

impl Writer {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::new("io", format!("{}: {e}", dir.display())))?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::new("io", e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> CliResult<&'a T> {
    s.as_ref()
        .ok_or_else(|| CliError::new("config", format!("missing \"{name}\" section")))
}

/// The given anchor, or the first zero of g − f0 of odd order.
fn anchor(p: &Problem, c0: Option<f64>) -> CliResult<f64> {
    if let Some(c) = c0 {
        return Ok(c);
    }
    classify_zeros(&p.g, p.f0())?
        .zeros
        .iter()
        .find(|z| z.is_odd())
        .map(|z| z.c0 + 0.0)
        .ok_or_else(|| CliError::new("precondition", "g - f0 has no zero of odd order; set c0"))
}

/// Same as [`anchor`] but any order is accepted.
fn any_zero(p: &Problem, c0: Option<f64>) -> CliResult<f64> {
    if let Some(c) = c0 {
        return Ok(c);
    }
    classify_zeros(&p.g, p.f0())?
        .zeros
        .first()
        .map(|z| z.c0 + 0.0)
        .ok_or_else(|| CliError::new("precondition", "g - f0 has no real zero; set c0"))
}

/// Runs one subcommand with artifacts written to `out` and returns the
/// one-line summary.
pub fn run(cmd: Command, cfg: &RunConfig, out: &Path) -> CliResult<Value> {
    let p = cfg.problem.build()?;
    let mut w = Writer::new(out)?;
    let mut summary = match cmd {
        Command::Bryuno => bryuno(&p, cfg, &mut w)?,
        Command::Solve => solve(&p, section(&cfg.solve, "solve")?, &mut w)?,
        Command::Sweep => sweep(&p, section(&cfg.sweep, "sweep")?, &mut w)?,
        Command::Series => series(&p, section(&cfg.series, "series")?, &mut w)?,
        Command::Trees => trees(&p, &cfg.trees, &mut w)?,
        Command::Simulate => simulate(&p, section(&cfg.simulate, "simulate")?, &mut w)?,
        Command::Probe => probe(&p, section(&cfg.probe, "probe")?, &mut w)?,
    };
    summary["command"] = json!(cmd.name());
    summary["files"] = json!(w.files);
    Ok(summary)
}

fn bryuno(p: &Problem, cfg: &RunConfig, w: &mut Writer) -> CliResult<Value> {
    let n = cfg.bryuno.n_max;
    let table = DivisorTable::compute(&p.omega, n)?;
    w.write("divisors.csv", &table.to_csv())?;
    let mut csv = String::from("n,alpha,partial_sum\n");
    for e in &table.entries {
        let b = bryuno_from_table(&table, e.n);
        csv += &format!("{},{},{}\n", e.n, float(e.alpha), float(b.sum));
    }
    w.write("bryuno.csv", &csv)?;
    let b = bryuno_from_table(&table, n);
    Ok(
        json!({ "n_max": n, "rows": table.entries.len(), "bryuno": b.sum, "last_increment": b.last_increment }),
    )
}

fn solve(p: &Problem, cfg: &SolveConfig, w: &mut Writer) -> CliResult<Value> {
    let c = match cfg.c {
        Some(c) => c,
        None => {
            let c0 = anchor(p, cfg.c0)?;
            solve_bifurcation(
                p,
                cfg.eps,
                c0,
                cfg.half_width,
                p.settings.gamma_tol.min(1e-12),
            )?
        }
    };
    let sol = solve_range(p, cfg.eps, c, None)?;
    w.write("solution.csv", &sol.x.to_csv())?;
    let s = sol.summary();
    w.json("solution.json", &s)?;
    Ok(json!({ "eps": s.eps, "c": s.c, "residual": s.residual, "iterations": s.iterations }))
}

fn sweep(p: &Problem, cfg: &SweepConfig, w: &mut Writer) -> CliResult<Value> {
    let c0 = anchor(p, cfg.c0)?;
    let curve = sweep_curve(p, &cfg.eps_grid, c0, cfg.half_width)?;
    w.write("curve.csv", &curve.to_csv())?;
    w.json("curve.json", &curve)?;
    Ok(
        json!({ "points": curve.points.len(), "c0": c0, "order": curve.order, "failure": curve.failure }),
    )
}

fn series(p: &Problem, cfg: &SeriesConfig, w: &mut Writer) -> CliResult<Value> {
    let trunc = cfg.trunc.unwrap_or(p.trunc);
    let s = expand(p, cfg.c, cfg.max_order, trunc)?;
    for (i, x) in s.orders.iter().enumerate() {
        w.write(&format!("series_order_{}.csv", i + 1), &x.to_csv())?;
    }
    let radius = if cfg.max_order >= 3 {
        Some(convergence_diagnostic(&s)?)
    } else {
        None
    };
    let meta = json!({
        "c": s.c,
        "max_order": s.max_order,
        "trunc": s.trunc,
        "amplified": s.amplified,
        "orders": s.metadata(p),
        "root_test": radius,
    });
    w.json("series.json", &meta)?;
    Ok(json!({ "max_order": s.max_order, "amplified": s.amplified }))
}

fn trees(p: &Problem, cfg: &TreesConfig, w: &mut Writer) -> CliResult<Value> {
    let d = p.dim();
    let support: Vec<MultiIndex> = match &cfg.support {
        Some(list) => list.iter().map(|v| MultiIndex::new(v.clone())).collect(),
        None => (0..d)
            .flat_map(|i| {
                let mut e = vec![0; d];
                e[i] = 1;
                let minus: Vec<i32> = e.iter().map(|v| -v).collect();
                [MultiIndex::new(e), MultiIndex::new(minus)]
            })
            .collect(),
    };
    let branch = cfg.max_branch.unwrap_or(p.g.degree());
    let rep = counting_sweep_with(&p.omega, &support, cfg.k_max, branch, cfg.scale_factor)?;
    w.write("trees.csv", &rep.to_csv())?;
    w.write("trees.txt", &rep.to_text())?;
    let counts = json!({
        "k_max": cfg.k_max,
        "max_branch": branch,
        "scale_factor": cfg.scale_factor,
        "trees": rep.trees_checked,
        "renormalised": rep.renormalised,
        "line_bound_violations": rep.line_bound_violations,
        "self_energy_clusters": rep.clusters_checked,
        "cluster_mass_violations": rep.mass_bound_violations,
    });
    w.json("trees.json", &counts)?;
    Ok(counts)
}

fn simulate(p: &Problem, cfg: &SimulateConfig, w: &mut Writer) -> CliResult<Value> {
    let c0 = anchor(p, cfg.c0)?;
    let c = solve_bifurcation(p, cfg.eps, c0, cfg.half_width, 1e-13)?;
    let sol = solve_range(p, cfg.eps, c, None)?;
    let s = AttractionSettings {
        h: cfg.h,
        tol: cfg.tol,
        window_start: cfg.window_start,
        integrator: cfg.integrator.clone(),
    };
    let (rep, traj) = attraction_check_with(p, cfg.eps, &sol, cfg.delta, cfg.t_end, &s)?;
    w.write("trajectory.csv", &traj.to_csv(cfg.stride))?;
    w.json("attraction.json", &rep)?;
    Ok(json!({ "c": c, "sup_discrepancy": rep.sup_discrepancy, "converged": rep.converged }))
}

fn probe(p: &Problem, cfg: &ProbeConfig, w: &mut Writer) -> CliResult<Value> {
    let c0 = any_zero(p, cfg.c0)?;
    let rep = even_order_probe(p, &cfg.eps_list, &ProbeGrid::scaled(c0, cfg.points))?;
    w.write("probe.csv", &rep.to_csv())?;
    w.json("probe.json", &rep)?;
    Ok(
        json!({ "c0": c0, "sign": rep.sign, "fitted_exponent": rep.fitted_exponent, "nonexistence": rep.claims_nonexistence() }),
    )
}
