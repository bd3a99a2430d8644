use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use tubearc::analysis::{
    density_profile_at, density_surface, state_label, trig_terms, Parity, TableRow, PARITY_THRESHOLD, PEAK_PROMINENCE,
};
use tubearc::assembly::{Arrangement, MAX_RELATIVE_DEFECT};
use tubearc::basis::BasisKind;
use tubearc::geometry::TubeGeometry;
use tubearc::linalg::MAX_CONDITION;
use tubearc::solver::{straight_tube_levels, Problem, Solution, CLUSTER_TOLERANCE};

use crate::config::{Plan, RunConfig};
use crate::error::CliError;
use crate::output::{csv_bytes, json_bytes, write_atomic};

pub const MANIFEST_VERSION: u32 = 1;

/// Files written by one command, relative to its output directory.
#[derive(Debug, Clone)]
pub struct Written {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

impl Written {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

fn s0_of(g: &TubeGeometry) -> Option<f64> {
    (!g.is_straight()).then(|| g.s0())
}

pub fn solve_plan(plan: &Plan) -> Result<Vec<Solution>, CliError> {
    plan.problems.iter().map(|p| p.solve().map_err(CliError::from)).collect()
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    manifest_version: u32,
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    rng: &'static str,
    config: &'a RunConfig,
    constants: Constants,
    files: &'a [String],
}

#[derive(Debug, Serialize)]
struct Constants {
    hbar2_over_2me_ev_nm2: f64,
    parity_threshold: f64,
    peak_prominence: f64,
    degeneracy_tolerance: f64,
    max_overlap_condition: f64,
    max_relative_hermiticity_defect: f64,
}

fn write_outputs(
    out: &Path,
    command: &str,
    config: &RunConfig,
    mut files: Vec<(String, Vec<u8>)>,
) -> Result<Written, CliError> {
    files.sort_by(|a, b| a.0.cmp(&b.0));
    let mut names: Vec<String> = files.iter().map(|f| f.0.clone()).collect();
    names.push("manifest.json".into());
    let manifest = Manifest {
        manifest_version: MANIFEST_VERSION,
        tool: "tubearc",
        version: env!("CARGO_PKG_VERSION"),
        command,
        rng: "none",
        config,
        constants: Constants {
            hbar2_over_2me_ev_nm2: config.geometry.hbar2_over_2me,
            parity_threshold: PARITY_THRESHOLD,
            peak_prominence: PEAK_PROMINENCE,
            degeneracy_tolerance: CLUSTER_TOLERANCE,
            max_overlap_condition: MAX_CONDITION,
            max_relative_hermiticity_defect: MAX_RELATIVE_DEFECT,
        },
        files: &names,
    };
    files.push(("manifest.json".into(), json_bytes(&manifest)));
    for (name, bytes) in &files {
        write_atomic(&out.join(name), bytes)?;
    }
    Ok(Written { dir: out.to_path_buf(), files: names })
}

#[derive(Debug, Serialize)]
pub struct SpectrumFile {
    pub name: String,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub case: usize,
    pub kappa0: f64,
    pub s0: Option<f64>,
    pub basis: BasisRecord,
    pub eigenvalues: Vec<f64>,
    pub states: Vec<StateRecord>,
    pub diagnostics: Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic: Option<Vec<AnalyticLevel>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeRecord>,
}

#[derive(Debug, Serialize)]
pub struct BasisRecord {
    pub max_m: u32,
    pub max_n: u32,
    pub kind: BasisKind,
    pub size: usize,
}

#[derive(Debug, Serialize)]
pub struct StateRecord {
    pub index: usize,
    pub energy: f64,
    pub parity: Parity,
    pub parity_score: f64,
    pub residual: f64,
    pub label: String,
}

#[derive(Debug, Serialize)]
pub struct Diagnostics {
    pub overlap_residual: f64,
    pub overlap_condition: f64,
    pub hermiticity_defect: f64,
    pub eigen_asymmetry: f64,
    pub max_residual: f64,
    pub theta_nodes: usize,
    pub s_nodes: usize,
    pub s_panels: usize,
}

#[derive(Debug, Serialize)]
pub struct AnalyticLevel {
    pub m: i32,
    pub n: u32,
    pub exact: f64,
    pub computed: f64,
    pub difference: f64,
}

#[derive(Debug, Serialize)]
pub struct LatticeRecord {
    pub arrangement: Arrangement,
    pub strength: f64,
    pub per_ring: usize,
    pub rings: usize,
    pub sites: usize,
}

pub fn run_record(case: usize, sol: &Solution) -> RunRecord {
    let g = &sol.problem.geometry;
    let spec = &sol.spec;
    let ham = &sol.hamiltonian;
    let eigenvalues = sol.spectrum.eigenvalues.clone();
    let states = (0..eigenvalues.len())
        .map(|k| {
            let terms = trig_terms(&sol.state(k).expect("in range"), spec, 0.0);
            StateRecord {
                index: k,
                energy: eigenvalues[k],
                parity: sol.parities[k].parity,
                parity_score: sol.parities[k].score,
                residual: sol.spectrum.residuals[k],
                label: state_label(&terms),
            }
        })
        .collect();
    let analytic = (g.is_straight() && sol.problem.lattice.is_none()).then(|| {
        straight_tube_levels(g, spec)
            .into_iter()
            .zip(&eigenvalues)
            .map(|((m, n, exact), &computed)| AnalyticLevel { m, n, exact, computed, difference: computed - exact })
            .collect()
    });
    let lattice = sol.problem.lattice.as_ref().map(|l| LatticeRecord {
        arrangement: l.arrangement(),
        strength: l.strength(),
        per_ring: l.per_ring(),
        rings: l.rings(),
        sites: l.len(),
    });
    RunRecord {
        case,
        kappa0: g.kappa0(),
        s0: s0_of(g),
        basis: BasisRecord { max_m: spec.max_m(), max_n: spec.max_n(), kind: ham.kind, size: spec.size() },
        eigenvalues,
        states,
        diagnostics: Diagnostics {
            overlap_residual: ham.basis.residual(),
            overlap_condition: ham.overlap.condition_number(),
            hermiticity_defect: ham.asymmetry,
            eigen_asymmetry: sol.spectrum.asymmetry,
            max_residual: sol.spectrum.residuals.iter().copied().fold(0.0, f64::max),
            theta_nodes: sol.grid.n_theta(),
            s_nodes: sol.grid.n_s(),
            s_panels: sol.grid.panel_count(),
        },
        analytic,
        lattice,
    }
}

#[derive(Debug, Serialize)]
struct CoefficientRow {
    case: usize,
    state: usize,
    energy: f64,
    j: usize,
    m: i32,
    n: u32,
    re: f64,
    im: f64,
}

fn energy_table(config: &RunConfig, solutions: &[Solution]) -> String {
    let mut out = String::new();
    let k = config.outputs.states;
    let _ = write!(out, "{:<6} {:<7}", "kappa0", "s0");
    for i in 0..k {
        let _ = write!(out, " {:>12}", format!("e{i} (meV)"));
    }
    out.push('\n');
    for sol in solutions {
        let g = &sol.problem.geometry;
        let s0 = s0_of(g).map(|s| format!("{s:.2}")).unwrap_or_else(|| "-----".into());
        let _ = write!(out, "{:<6.2} {:<7}", g.kappa0(), s0);
        for e in sol.eigenvalues().iter().take(k) {
            let _ = write!(out, " {e:>12.4}");
        }
        out.push('\n');
    }
    out
}

pub fn table_rows(solutions: &[Solution], state: usize, threshold: f64) -> Vec<TableRow> {
    solutions
        .iter()
        .map(|sol| {
            let g = &sol.problem.geometry;
            TableRow {
                kappa0: g.kappa0(),
                s0: s0_of(g),
                length: g.length(),
                energy: sol.eigenvalues()[state],
                terms: trig_terms(&sol.state(state).expect("validated"), &sol.spec, threshold),
            }
        })
        .collect()
}

pub fn render_tables(config: &RunConfig, solutions: &[Solution]) -> String {
    let mut out = String::new();
    if !config.name.is_empty() {
        let _ = writeln!(out, "# {}", config.name);
    }
    let _ = writeln!(out, "lowest eigenvalues");
    out.push_str(&energy_table(config, solutions));
    for &k in &config.outputs.table_states {
        let _ = writeln!(out, "\nstate {k}");
        out.push_str(&tubearc::analysis::format_state_table(&table_rows(solutions, k, config.outputs.table_threshold)));
    }
    out
}

pub struct SolveOutcome {
    pub solutions: Vec<Solution>,
    pub written: Written,
}

/// Solves every case and writes `spectrum.json`, `states.csv`, `table.txt`, `manifest.json`.
pub fn cmd_solve(config: &RunConfig, out: &Path) -> Result<SolveOutcome, CliError> {
    let plan = config.plan()?;
    let solutions = solve_plan(&plan)?;
    let spectrum = SpectrumFile {
        name: config.name.clone(),
        runs: solutions.iter().enumerate().map(|(i, s)| run_record(i, s)).collect(),
    };
    let mut rows = Vec::new();
    for (case, sol) in solutions.iter().enumerate() {
        for state in 0..sol.spectrum.len() {
            let c = sol.state(state)?;
            for b in sol.spec.indices() {
                let z = c[b.j - 1];
                rows.push(CoefficientRow {
                    case,
                    state,
                    energy: sol.eigenvalues()[state],
                    j: b.j,
                    m: b.m,
                    n: b.n,
                    re: z.re,
                    im: z.im,
                });
            }
        }
    }
    let files = vec![
        ("spectrum.json".to_string(), json_bytes(&spectrum)),
        ("states.csv".to_string(), csv_bytes(&rows)?),
        ("table.txt".to_string(), render_tables(config, &solutions).into_bytes()),
    ];
    let written = write_outputs(out, "solve", config, files)?;
    Ok(SolveOutcome { solutions, written })
}

/// Overrides applied on top of the config's density block.
#[derive(Debug, Clone, Copy, Default)]
pub struct DensityRequest {
    pub state: Option<usize>,
    pub theta: Option<f64>,
    pub surface: bool,
}

impl DensityRequest {
    pub fn apply(&self, config: &RunConfig) -> RunConfig {
        let mut c = config.clone();
        if let Some(k) = self.state {
            c.outputs.density.state = k;
        }
        if self.surface {
            c.outputs.density.theta = None;
        } else if let Some(t) = self.theta {
            c.outputs.density.theta = Some(t);
        }
        c
    }
}

#[derive(Debug, Serialize)]
struct ProfileRow {
    case: usize,
    s: f64,
    density: f64,
}

#[derive(Debug, Serialize)]
struct SurfaceRow {
    case: usize,
    theta: f64,
    s: f64,
    density: f64,
}

/// Writes `density.csv`: `(case, s, density)` at a fixed angle, or
/// `(case, theta, s, density)` over the whole surface.
pub fn cmd_density(config: &RunConfig, request: DensityRequest, out: &Path) -> Result<Written, CliError> {
    let config = request.apply(config);
    let plan = config.plan()?;
    let d = config.outputs.density;
    let size = plan.problems[0].basis()?.size();
    if d.state >= size {
        return Err(CliError::BadState { index: d.state, len: size });
    }
    let solutions = solve_plan(&plan)?;
    let bytes = match d.theta {
        Some(theta) => {
            let mut rows = Vec::new();
            for (case, sol) in solutions.iter().enumerate() {
                let c = sol.state(d.state)?;
                for (s, density) in density_profile_at(&c, &sol.spec, theta, d.samples) {
                    rows.push(ProfileRow { case, s, density });
                }
            }
            csv_bytes(&rows)?
        }
        None => {
            let mut rows = Vec::new();
            for (case, sol) in solutions.iter().enumerate() {
                let c = sol.state(d.state)?;
                for (theta, s, density) in density_surface(&c, &sol.spec, d.surface_theta, d.surface_s) {
                    rows.push(SurfaceRow { case, theta, s, density });
                }
            }
            csv_bytes(&rows)?
        }
    };
    write_outputs(out, "density", &config, vec![("density.csv".into(), bytes)])
}

#[derive(Debug, Serialize)]
struct SiteRow {
    case: usize,
    j: usize,
    k: usize,
    theta: f64,
    s: f64,
    x: f64,
    y: f64,
    z: f64,
}

/// Writes `sites.csv` with each site's surface coordinates and 3-space position.
pub fn cmd_sites(config: &RunConfig, out: &Path) -> Result<Written, CliError> {
    let plan = config.plan()?;
    let mut rows = Vec::new();
    for (case, p) in plan.problems.iter().enumerate() {
        let lattice = p.lattice.as_ref().ok_or_else(|| CliError::Config("sites needs a lattice block".into()))?;
        for site in lattice.sites() {
            let [x, y, z] = p.geometry.embed(tubearc::geometry::SurfacePoint::new(site.theta, site.s));
            rows.push(SiteRow { case, j: site.index, k: site.ring, theta: site.theta, s: site.s, x, y, z });
        }
    }
    write_outputs(out, "sites", config, vec![("sites.csv".into(), csv_bytes(&rows)?)])
}

#[derive(Debug, Serialize)]
pub struct ConvergenceFile {
    pub name: String,
    pub runs: Vec<ConvergenceRun>,
}

#[derive(Debug, Serialize)]
pub struct ConvergenceRun {
    pub case: usize,
    pub kappa0: f64,
    pub s0: Option<f64>,
    pub basis_rows: Vec<BasisRow>,
    pub quadrature_rows: Vec<QuadratureRow>,
    /// Ground energy never rises as the basis grows.
    pub ground_monotone: bool,
}

#[derive(Debug, Serialize)]
pub struct BasisRow {
    pub max_m: u32,
    pub max_n: u32,
    pub eigenvalues: Vec<f64>,
    /// Every listed eigenvalue equals the largest basis's to 5 significant digits.
    pub five_digit_stable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic: Option<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct QuadratureRow {
    pub n_theta: usize,
    pub points_per_panel: usize,
    pub eigenvalues: Vec<f64>,
    /// Largest change against the previous row over the whole spectrum.
    pub max_change: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ConvergenceCsvRow {
    case: usize,
    sweep: &'static str,
    max_m: u32,
    max_n: u32,
    n_theta: usize,
    points_per_panel: usize,
    e0: Option<f64>,
    e1: Option<f64>,
    e2: Option<f64>,
    e3: Option<f64>,
    flag: bool,
}

/// True when `a` and `b` round to the same `digits` significant figures.
pub fn agree_to_digits(a: f64, b: f64, digits: i32) -> bool {
    let scale = b.abs().max(f64::MIN_POSITIVE);
    let unit = 10f64.powi(scale.log10().floor() as i32 - digits + 1);
    (a - b).abs() < 0.5 * unit
}

pub fn convergence_runs(config: &RunConfig) -> Result<Vec<ConvergenceRun>, CliError> {
    let plan = config.plan()?;
    let bases = &config.outputs.convergence.bases;
    if bases.is_empty() {
        return Err(CliError::Config("outputs.convergence.bases is empty".into()));
    }
    let listed = config.outputs.states;
    let mut runs = Vec::new();
    for (case, base) in plan.problems.iter().enumerate() {
        let mut spectra = Vec::new();
        for &[m, n] in bases {
            let p = Problem { max_m: m, max_n: n, ..base.clone() };
            let sol = p.solve()?;
            let analytic = (p.geometry.is_straight() && p.lattice.is_none())
                .then(|| straight_tube_levels(&p.geometry, &sol.spec).iter().take(listed).map(|l| l.2).collect());
            spectra.push((m, n, sol.eigenvalues().iter().take(listed).copied().collect::<Vec<f64>>(), analytic));
        }
        let reference = spectra.last().map(|s| s.2.clone()).unwrap_or_default();
        let ground_monotone = spectra.windows(2).all(|w| w[1].2[0] <= w[0].2[0] + 1e-9);
        let basis_rows = spectra
            .into_iter()
            .map(|(m, n, e, analytic)| BasisRow {
                max_m: m,
                max_n: n,
                five_digit_stable: e.iter().zip(&reference).all(|(a, b)| agree_to_digits(*a, *b, 5))
                    && e.len() == reference.len(),
                eigenvalues: e,
                analytic,
            })
            .collect();
        let mut quadrature_rows: Vec<QuadratureRow> = Vec::new();
        let mut q = base.quadrature;
        let mut previous: Option<Vec<f64>> = None;
        for _ in 0..=config.outputs.convergence.refinements {
            let sol = base.clone().with_quadrature(q).solve()?;
            let all = sol.eigenvalues().to_vec();
            let max_change =
                previous.as_ref().map(|p| p.iter().zip(&all).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            quadrature_rows.push(QuadratureRow {
                n_theta: q.n_theta,
                points_per_panel: q.points_per_panel,
                eigenvalues: all.iter().take(listed).copied().collect(),
                max_change,
            });
            previous = Some(all);
            q = q.refined();
        }
        runs.push(ConvergenceRun {
            case,
            kappa0: base.geometry.kappa0(),
            s0: s0_of(&base.geometry),
            basis_rows,
            quadrature_rows,
            ground_monotone,
        });
    }
    Ok(runs)
}

/// Writes `convergence.json` and `convergence.csv`.
pub fn cmd_convergence(config: &RunConfig, out: &Path) -> Result<(Vec<ConvergenceRun>, Written), CliError> {
    let runs = convergence_runs(config)?;
    let mut rows = Vec::new();
    let pick = |e: &[f64], i: usize| e.get(i).copied();
    for run in &runs {
        for b in &run.basis_rows {
            rows.push(ConvergenceCsvRow {
                case: run.case,
                sweep: "basis",
                max_m: b.max_m,
                max_n: b.max_n,
                n_theta: config.quadrature.n_theta,
                points_per_panel: config.quadrature.points_per_panel,
                e0: pick(&b.eigenvalues, 0),
                e1: pick(&b.eigenvalues, 1),
                e2: pick(&b.eigenvalues, 2),
                e3: pick(&b.eigenvalues, 3),
                flag: b.five_digit_stable,
            });
        }
        for q in &run.quadrature_rows {
            rows.push(ConvergenceCsvRow {
                case: run.case,
                sweep: "quadrature",
                max_m: config.basis.max_m,
                max_n: config.basis.max_n,
                n_theta: q.n_theta,
                points_per_panel: q.points_per_panel,
                e0: pick(&q.eigenvalues, 0),
                e1: pick(&q.eigenvalues, 1),
                e2: pick(&q.eigenvalues, 2),
                e3: pick(&q.eigenvalues, 3),
                flag: q.max_change.is_none_or(|c| c < 1e-6),
            });
        }
    }
    let file = ConvergenceFile { name: config.name.clone(), runs };
    let written = write_outputs(
        out,
        "convergence",
        config,
        vec![("convergence.json".into(), json_bytes(&file)), ("convergence.csv".into(), csv_bytes(&rows)?)],
    )?;
    Ok((file.runs, written))
}
