//! Runs the configured methods against a reference solve.

use std::time::{Duration, Instant};

use mscat_core::geometry::{closest_pair, ClosestPair, Scene};
use mscat_core::kirchhoff::{solve_preconditioned_timed, KirchhoffOperator, PreconditionedSettings};
use mscat_core::krylov::{pade_accelerate, Directions, IterateOrthodir};
use mscat_core::multiscatter::{MultiDensity, ScatteringProblem};
use mscat_core::rate::{empirical_rate, predicted_reflections, r2_2d, OrbitGeometry};
use mscat_core::{Error, C64};
use serde::Serialize;

use crate::config::{Method, ScenarioConfig};
use crate::error::CliError;

/// One row of a convergence history.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Row {
    /// Applications of `T` (Neumann, Padé, plain Krylov) or preconditioned iterations.
    pub index: usize,
    pub log10_error: f64,
    /// Solver time up to this row, excluding error evaluation.
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct History {
    /// File stem of the CSV, e.g. `krylov_stable` or `krylov_kirchhoff_N12`.
    pub label: String,
    pub method: Method,
    pub rows: Vec<Row>,
    /// Set when the method stopped early (e.g. an ORTHODIR breakdown).
    pub note: Option<String>,
    pub seconds: f64,
}

impl History {
    fn new(label: impl Into<String>, method: Method) -> Self {
        Self { label: label.into(), method, rows: Vec::new(), note: None, seconds: 0.0 }
    }

    fn push(&mut self, index: usize, relative_error: f64, wall: f64) {
        self.rows.push(Row { index, log10_error: relative_error.log10(), wall_seconds: wall });
    }

    /// Relative error of the last row.
    pub fn final_error(&self) -> Option<f64> {
        self.rows.last().map(|r| 10f64.powf(r.log10_error))
    }

    /// Relative error at `index`, if that row exists.
    pub fn error_at(&self, index: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.index == index).map(|r| 10f64.powf(r.log10_error))
    }

    /// First index whose error is at most `tol`.
    pub fn first_below(&self, tol: f64) -> Option<usize> {
        self.rows.iter().find(|r| r.log10_error <= tol.log10()).map(|r| r.index)
    }
}

/// Closed-form rate data of a two-obstacle scene.
#[derive(Clone, Debug, Serialize)]
pub struct RatePrediction {
    pub distance: f64,
    pub a1: [f64; 2],
    pub a2: [f64; 2],
    pub r2: [f64; 2],
    pub r2_modulus: f64,
    pub predicted_reflections: f64,
}

pub fn predict_rate(scene: &Scene, tol: f64) -> Result<RatePrediction, CliError> {
    let ClosestPair { a1, a2, distance, .. } = closest_pair(scene)?;
    let r2 = r2_2d(&OrbitGeometry::from_scene(scene)?)?;
    Ok(RatePrediction {
        distance,
        a1: [a1.x, a1.y],
        a2: [a2.x, a2.y],
        r2: [r2.re, r2.im],
        r2_modulus: r2.norm(),
        predicted_reflections: predicted_reflections(r2.norm(), tol),
    })
}

/// Node count per obstacle from `nodes` or `points_per_wavelength`.
pub fn node_counts(config: &ScenarioConfig, scene: &Scene) -> Result<Vec<usize>, CliError> {
    match (&config.nodes, config.points_per_wavelength) {
        (Some(n), _) => Ok(n.clone()),
        (None, Some(ppw)) => Ok(scene
            .obstacles
            .iter()
            .map(|c| mscat_core::cfie::nodes_for_density(c, scene.wavenumber, ppw))
            .collect()),
        (None, None) => Err(CliError::Config("no discretization given".into())),
    }
}

/// Assembled problem and reference solution of one scenario.
pub struct Setup {
    pub config: ScenarioConfig,
    pub scene: Scene,
    pub problem: ScatteringProblem,
    pub reference: MultiDensity,
    pub assembly_seconds: f64,
    pub reference_seconds: f64,
}

impl Setup {
    pub fn new(config: &ScenarioConfig) -> Result<Self, CliError> {
        let scene = config.scene()?;
        let nodes = node_counts(config, &scene)?;
        // Guard before assembly so oversized scenes fail fast.
        mscat_core::multiscatter::check_direct_solve_size(nodes.iter().sum())?;
        let t0 = Instant::now();
        let problem = ScatteringProblem::new(scene.clone(), &nodes)?;
        let assembly_seconds = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let reference = problem.reference_solve()?;
        let reference_seconds = t1.elapsed().as_secs_f64();
        Ok(Self { config: config.clone(), scene, problem, reference, assembly_seconds, reference_seconds })
    }

    fn error_of(&self, values: &[C64]) -> f64 {
        self.problem.relative_error(&self.reference.with_values(values.to_vec()), &self.reference)
    }
}

/// Neumann iterates shared by the Neumann and Padé histories.
struct Iterates {
    partial_sums: Vec<Vec<C64>>,
    /// Solver time after each iterate.
    times: Vec<f64>,
}

fn neumann_iterates(setup: &Setup, count: usize) -> Iterates {
    let p = &setup.problem;
    let mut compute = Duration::ZERO;
    let t = Instant::now();
    let mut eta = p.initial_iterate();
    let mut sum = eta.clone();
    compute += t.elapsed();
    let mut partial_sums = vec![sum.values.clone()];
    let mut times = vec![compute.as_secs_f64()];
    for _ in 0..count {
        let t = Instant::now();
        eta = p.apply_t(&eta);
        sum.axpy(C64::new(1.0, 0.0), &eta);
        compute += t.elapsed();
        partial_sums.push(sum.values.clone());
        times.push(compute.as_secs_f64());
    }
    Iterates { partial_sums, times }
}

fn neumann_history(setup: &Setup, it: &Iterates) -> History {
    let mut h = History::new(Method::Neumann.name(), Method::Neumann);
    for (m, (s, t)) in it.partial_sums.iter().zip(&it.times).enumerate() {
        h.push(m, setup.error_of(s), *t);
    }
    h.seconds = *it.times.last().unwrap_or(&0.0);
    h
}

fn pade_history(setup: &Setup, it: &Iterates) -> Result<History, CliError> {
    let mut h = History::new(Method::Pade.name(), Method::Pade);
    let mut frozen = 0;
    for m in 0..it.partial_sums.len() {
        let t = Instant::now();
        let res = pade_accelerate(&it.partial_sums[..=m], m / 2)?;
        let wall = it.times[m] + t.elapsed().as_secs_f64();
        frozen = frozen.max(res.frozen);
        h.push(m, setup.error_of(&res.values), wall);
        h.seconds = wall;
    }
    if frozen > 0 {
        h.note = Some(format!("up to {frozen} components froze in the epsilon table"));
    }
    Ok(h)
}

fn krylov_history(setup: &Setup, method: Method) -> Result<History, CliError> {
    let mode = match method {
        Method::KrylovStable => Directions::Stable,
        _ => Directions::Binomial,
    };
    let p = &setup.problem;
    let mut h = History::new(method.name(), method);
    h.push(0, 1.0, 0.0);
    let start = Instant::now();
    let mut excluded = Duration::ZERO;
    let g = p.initial_iterate().values;
    let mut solver = IterateOrthodir::new(g, &p.weights, |v: &[C64]| Ok(p.apply_t_flat(v)), mode);
    let outcome = solver.run(0.0, setup.config.krylov_iterations, |_, mu, apps| {
        let wall = (start.elapsed() - excluded).as_secs_f64();
        let t = Instant::now();
        h.push(apps, setup.error_of(mu), wall);
        excluded += t.elapsed();
        false
    });
    h.seconds = (start.elapsed() - excluded).as_secs_f64();
    match outcome {
        Ok(_) => Ok(h),
        // Breakdown means the residual vanished to rounding; keep what was reached.
        Err(e @ Error::Breakdown { .. }) => {
            h.note = Some(e.to_string());
            Ok(h)
        }
        Err(e) => Err(e.into()),
    }
}

/// Phase depth that `N` terms and `iterations` preconditioned steps can reach.
pub fn kirchhoff_depth(terms: usize, rhs_terms: usize, iterations: usize) -> usize {
    (terms + 1) * (iterations + 1) + rhs_terms + 8
}

fn kirchhoff_histories(setup: &Setup) -> Result<Vec<History>, CliError> {
    let cfg = &setup.config;
    let depth = cfg
        .kirchhoff_terms
        .iter()
        .map(|&n| kirchhoff_depth(n, cfg.rhs_terms(n), cfg.kirchhoff_iterations))
        .max()
        .unwrap_or(0);
    let t = Instant::now();
    let mut kop = KirchhoffOperator::new(&setup.problem, depth)?;
    let setup_seconds = t.elapsed().as_secs_f64();
    let mut out = Vec::new();
    for &n in &cfg.kirchhoff_terms {
        let mut h = History::new(format!("{}_N{n}", Method::KrylovKirchhoff.name()), Method::KrylovKirchhoff);
        h.push(0, 1.0, 0.0);
        let settings = PreconditionedSettings {
            terms: n,
            rhs_terms: cfg.rhs_terms(n),
            tol: 0.0,
            max_iter: cfg.kirchhoff_iterations,
            use_kirchhoff: true,
        };
        let start = Instant::now();
        // Phase tracing is shared across truncations; charge it to each.
        let offset = setup_seconds;
        let run = solve_preconditioned_timed(&setup.problem, &mut kop, settings, Some(&setup.reference), || {
            offset + start.elapsed().as_secs_f64()
        });
        match run {
            Ok(run) => {
                for step in &run.history {
                    h.push(step.iteration, step.relative_error.unwrap_or(f64::NAN), step.clock);
                }
                h.seconds = run.history.last().map_or(offset, |s| s.clock);
            }
            Err(e @ Error::Breakdown { .. }) => h.note = Some(e.to_string()),
            Err(e) => return Err(e.into()),
        }
        out.push(h);
    }
    Ok(out)
}

/// Runs `methods` in order and returns one history per output file.
pub fn run_methods(
    setup: &Setup,
    methods: &[Method],
    mut progress: impl FnMut(&History),
) -> Result<Vec<History>, CliError> {
    let mut iterates: Option<Iterates> = None;
    let mut out = Vec::new();
    for &m in methods {
        let produced = match m {
            Method::Neumann | Method::Pade => {
                let it = iterates.get_or_insert_with(|| neumann_iterates(setup, setup.config.max_reflections));
                if m == Method::Neumann {
                    vec![neumann_history(setup, it)]
                } else {
                    vec![pade_history(setup, it)?]
                }
            }
            Method::KrylovBinomial | Method::KrylovStable => vec![krylov_history(setup, m)?],
            Method::KrylovKirchhoff => kirchhoff_histories(setup)?,
        };
        for h in produced {
            progress(&h);
            out.push(h);
        }
    }
    Ok(out)
}

/// Closed-form and fitted rates of a scenario.
#[derive(Clone, Debug, Serialize)]
pub struct RateReport {
    pub scenario: String,
    pub prediction: RatePrediction,
    pub window: [usize; 2],
    pub empirical_modulus: f64,
    pub empirical_ratio: [f64; 2],
    /// `|empirical − |R₂|| / |R₂|`.
    pub relative_deviation: f64,
}

pub fn rate_report(config: &ScenarioConfig) -> Result<RateReport, CliError> {
    let scene = config.scene()?;
    let prediction = predict_rate(&scene, config.tol)?;
    let nodes = node_counts(config, &scene)?;
    let problem = ScatteringProblem::new(scene, &nodes)?;
    let [lo, hi] = config.rate_window;
    let seq = problem.iterates(hi + 2);
    let values: Vec<&[C64]> = seq.iterates.iter().map(|m| m.values.as_slice()).collect();
    let fit = empirical_rate(&values, &problem.weights, lo, hi)?;
    Ok(RateReport {
        scenario: config.name.clone(),
        window: config.rate_window,
        empirical_modulus: fit.modulus,
        empirical_ratio: [fit.ratio.re, fit.ratio.im],
        relative_deviation: (fit.modulus - prediction.r2_modulus).abs() / prediction.r2_modulus,
        prediction,
    })
}

/// Geometric checks of a scenario; violations are listed, not raised.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub scenario: String,
    pub convex: Vec<bool>,
    pub disjoint: bool,
    pub no_occlusion: Option<bool>,
    pub prediction: Option<RatePrediction>,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate(config: &ScenarioConfig) -> ValidationReport {
    let curves = config.curves();
    let convex: Vec<bool> = curves.iter().map(|c| c.is_convex()).collect();
    let mut violations = Vec::new();
    for (i, c) in convex.iter().enumerate() {
        if !c {
            violations.push(format!("obstacle {i} is not convex"));
        }
    }
    let scene = match Scene::new(curves, config.direction(), config.wavenumber) {
        Ok(s) => Some(s),
        Err(e) => {
            violations.push(e.to_string());
            None
        }
    };
    let no_occlusion = scene.as_ref().map(Scene::no_occlusion);
    if no_occlusion == Some(false) {
        violations.push("occlusion: no ray along the incidence direction passes between the obstacles".into());
    }
    let prediction = match &scene {
        Some(s) if s.obstacles.len() == 2 && convex.iter().all(|c| *c) => match predict_rate(s, config.tol) {
            Ok(p) => Some(p),
            Err(e) => {
                violations.push(format!("rate prediction failed: {e}"));
                None
            }
        },
        _ => None,
    };
    ValidationReport {
        scenario: config.name.clone(),
        convex,
        disjoint: scene.is_some(),
        no_occlusion,
        prediction,
        violations,
    }
}
