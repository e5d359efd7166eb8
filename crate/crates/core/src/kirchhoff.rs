//! Kirchhoff beam operator and the Kirchhoff-preconditioned multiple
//! scattering system.
//!
//! A beam of depth `ℓ` is a density `e^{ikφ^ℓ_j(x)} μ_j(x)` on both obstacles,
//! where `φ^ℓ_j` is the geometrical-optics phase of the `ℓ`-th reflection and
//! `μ` is a slowly varying amplitude. The Kirchhoff operator maps a beam of
//! depth `ℓ` on `j'` to one of depth `ℓ + 1` on `j`:
//!
//! ```text
//! B_j(x) = A_j'(y) F(x, y) (∂²_s ψ(y))^{−1/2},   F(x, y) = (x − y)·ν(x) / |x − y|^{3/2}
//! ```
//!
//! with `y` the stationary point of `ψ(y) = φ^ℓ_j'(y) + |x − y|` (the last bounce
//! of the ray chain ending at `x`), on illuminated nodes whose segment `[x, y]`
//! meets `∂Ω_j` only at `x`, and zero elsewhere.
//!
//! The preconditioned system is
//!
//! ```text
//! A_{K,N} η = η − Σ_{ℓ=0}^{N} K^ℓ (T − K) η = Σ_{ℓ=0}^{M} K^ℓ g.
//! ```
//!
//! ORTHODIR iterates for it are sums of beams; `T` is applied beam by beam on
//! the grid and relabeled with the phase of the next depth, which is exact, and
//! inner products use grid evaluations.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cfie::ObstacleGrid;
use crate::geometry::Vec2;
use crate::go_phase::{visible, PhaseBook, Region};
use crate::krylov::{orthodir, weighted_inner, KrylovSpace, StepRecord};
use crate::multiscatter::{MultiDensity, ScatteringProblem};
use crate::{Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

/// Points of the periodic Lagrange stencil used to read amplitudes at
/// stationary points.
const STENCIL: usize = 6;

/// Beams whose weighted norm falls below this fraction of the largest beam are dropped.
pub const DEFAULT_DROP_TOL: f64 = 1e-17;

/// Amplitude read-out at one target node: `B = Σ w_s μ[stencil_s]`.
#[derive(Clone, Copy, Debug)]
struct Transfer {
    stencil: [usize; STENCIL],
    weights: [f64; STENCIL],
}

/// Node-wise transfers from depth `ℓ` to depth `ℓ + 1`, per target obstacle.
#[derive(Clone, Debug)]
struct LevelTransfer {
    targets: [Vec<Option<Transfer>>; 2],
    /// Illuminated nodes dropped by the visibility test.
    hidden: usize,
}

/// Periodic Lagrange weights for parameter `t` on a uniform grid of `n` nodes.
fn lagrange_stencil(t: f64, n: usize) -> ([usize; STENCIL], [f64; STENCIL]) {
    let h = crate::math::TAU / n as f64;
    let u = crate::math::wrap_angle(t) / h;
    let base = u.floor();
    let s = u - base;
    let first = STENCIL as i64 / 2 - 1;
    let mut idx = [0usize; STENCIL];
    let mut w = [0.0; STENCIL];
    for m in 0..STENCIL {
        let om = m as i64 - first;
        idx[m] = (base as i64 + om).rem_euclid(n as i64) as usize;
        let mut num = 1.0;
        let mut den = 1.0;
        for l in 0..STENCIL {
            if l != m {
                let ol = l as i64 - first;
                num *= s - ol as f64;
                den *= (om - ol) as f64;
            }
        }
        w[m] = num / den;
    }
    (idx, w)
}

/// A single beam on one obstacle, for inspection and dumps.
#[derive(Clone, Debug)]
pub struct Beam {
    pub depth: usize,
    pub obstacle: usize,
    pub phase: Vec<f64>,
    pub amplitude: Vec<C64>,
    pub mask: Vec<bool>,
}

/// `Σ_ℓ e^{ikφ^ℓ} μ_ℓ`, stored as the amplitudes `μ_ℓ` indexed by depth.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamSum {
    pub amplitudes: Vec<MultiDensity>,
}

impl BeamSum {
    pub fn empty() -> Self {
        Self { amplitudes: Vec::new() }
    }

    pub fn single(depth: usize, amplitude: MultiDensity) -> Self {
        let zero = MultiDensity::zeros(&sizes(&amplitude));
        let mut amplitudes = vec![zero; depth];
        amplitudes.push(amplitude);
        Self { amplitudes }
    }

    /// One past the deepest stored level.
    pub fn depth_bound(&self) -> usize {
        self.amplitudes.len()
    }

    /// Depths with a nonzero amplitude.
    pub fn beam_count(&self) -> usize {
        self.amplitudes.iter().filter(|a| a.values.iter().any(|v| *v != C64::new(0.0, 0.0))).count()
    }

    /// `self ← self + a x`.
    pub fn axpy(&mut self, a: C64, x: &BeamSum) {
        if let Some(first) = x.amplitudes.first() {
            while self.amplitudes.len() < x.amplitudes.len() {
                self.amplitudes.push(MultiDensity::zeros(&sizes(first)));
            }
        }
        for (y, xl) in self.amplitudes.iter_mut().zip(&x.amplitudes) {
            y.axpy(a, xl);
        }
    }

    fn add_at(&mut self, depth: usize, a: C64, mu: &MultiDensity) {
        while self.amplitudes.len() <= depth {
            self.amplitudes.push(MultiDensity::zeros(&sizes(mu)));
        }
        self.amplitudes[depth].axpy(a, mu);
    }

    /// Removes levels whose weighted norm is below `tol` times the largest one.
    fn prune(&mut self, weights: &[f64], tol: f64) {
        let norms: Vec<f64> = self
            .amplitudes
            .iter()
            .map(|a| weights.iter().zip(&a.values).map(|(w, v)| w * v.norm_sqr()).sum::<f64>().sqrt())
            .collect();
        let max = norms.iter().cloned().fold(0.0, f64::max);
        for (a, n) in self.amplitudes.iter_mut().zip(&norms) {
            if *n <= tol * max {
                a.values.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            }
        }
        while self.amplitudes.last().is_some_and(|a| a.values.iter().all(|v| *v == C64::new(0.0, 0.0))) {
            self.amplitudes.pop();
        }
    }
}

fn sizes(m: &MultiDensity) -> Vec<usize> {
    m.offsets.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Phase book, transfers and phase factors `e^{ikφ^ℓ}` for one scene,
/// extended on demand up to `max_depth`.
#[derive(Clone, Debug)]
pub struct KirchhoffOperator {
    grids: Vec<ObstacleGrid>,
    direction: Vec2,
    wavenumber: f64,
    pub book: PhaseBook,
    levels: Vec<LevelTransfer>,
    factors: Vec<Vec<C64>>,
    pub max_depth: usize,
}

impl KirchhoffOperator {
    pub fn new(problem: &ScatteringProblem, max_depth: usize) -> Result<Self> {
        let direction = problem.scene.direction;
        let book = PhaseBook::build(&problem.grids, direction, 1)?;
        let mut op = Self {
            grids: problem.grids.clone(),
            direction,
            wavenumber: problem.scene.wavenumber,
            book,
            levels: Vec::new(),
            factors: Vec::new(),
            max_depth,
        };
        op.ensure_depth(1)?;
        Ok(op)
    }

    /// Makes phases available for depths `0 ..= depth`.
    pub fn ensure_depth(&mut self, depth: usize) -> Result<()> {
        if depth > self.max_depth {
            return Err(Error::PhaseDepth { required: depth, available: self.max_depth });
        }
        if self.book.max_depth() < depth {
            // Extend in chunks so repeated requests do not retrace one level at a time.
            let target = (depth + 8).min(self.max_depth).max(depth);
            self.book.extend(&self.grids, self.direction, target)?;
        }
        while self.factors.len() <= depth {
            let q = self.factors.len();
            let mut f = Vec::new();
            for j in 0..2 {
                let field = self.book.field(q, j)?;
                f.extend(field.phase.iter().map(|p| C64::new(0.0, self.wavenumber * p).exp()));
            }
            self.factors.push(f);
        }
        while self.levels.len() < depth {
            let l = self.levels.len();
            let level = self.build_level(l)?;
            self.levels.push(level);
        }
        Ok(())
    }

    fn build_level(&self, l: usize) -> Result<LevelTransfer> {
        let mut targets: [Vec<Option<Transfer>>; 2] = [Vec::new(), Vec::new()];
        let mut hidden = 0;
        for j in 0..2 {
            let field = self.book.field(l + 1, j)?;
            let grid = &self.grids[j];
            let source = &self.grids[1 - j];
            let out = &mut targets[j];
            for i in 0..grid.len() {
                let ray = match (&field.rays[i], field.region[i]) {
                    (Some(ray), Region::Illuminated) => ray,
                    _ => {
                        out.push(None);
                        continue;
                    }
                };
                let x = grid.points[i];
                let y = source.curve.position(ray.source_param);
                if !visible(&grid.curve, x, y) {
                    hidden += 1;
                    out.push(None);
                    continue;
                }
                let psi = ray.phase_second_derivative;
                if !(psi > 0.0) {
                    return Err(Error::Geometry(format!(
                        "combined phase curvature {psi} at node {i} of depth {}",
                        l + 1
                    )));
                }
                let factor = ray.incoming.dot(grid.normals[i]) / (ray.leg_length.sqrt() * psi.sqrt());
                let (stencil, mut weights) = lagrange_stencil(ray.source_param, source.len());
                for w in &mut weights {
                    *w *= factor;
                }
                out.push(Some(Transfer { stencil, weights }));
            }
        }
        Ok(LevelTransfer { targets, hidden })
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn grids(&self) -> &[ObstacleGrid] {
        &self.grids
    }

    /// Illuminated nodes excluded by the visibility test at the transfer into `depth`.
    pub fn hidden_nodes(&self, depth: usize) -> usize {
        depth.checked_sub(1).and_then(|l| self.levels.get(l)).map_or(0, |l| l.hidden)
    }

    /// Kirchhoff transfer of an amplitude of depth `l` to depth `l + 1`.
    pub fn apply_level(&mut self, l: usize, mu: &MultiDensity) -> Result<MultiDensity> {
        self.ensure_depth(l + 1)?;
        let level = &self.levels[l];
        let mut out = MultiDensity::zeros(&sizes(mu));
        for j in 0..2 {
            let src = mu.part(1 - j);
            let dst = out.part_mut(j);
            for (d, t) in dst.iter_mut().zip(&level.targets[j]) {
                if let Some(t) = t {
                    let mut acc = C64::new(0.0, 0.0);
                    for (s, w) in t.stencil.iter().zip(&t.weights) {
                        acc += src[*s] * *w;
                    }
                    *d = acc;
                }
            }
        }
        Ok(out)
    }

    /// `K` applied beam by beam.
    pub fn apply(&mut self, sum: &BeamSum) -> Result<BeamSum> {
        let mut out = BeamSum::empty();
        for (l, mu) in sum.amplitudes.iter().enumerate() {
            if mu.values.iter().all(|v| *v == C64::new(0.0, 0.0)) {
                continue;
            }
            let next = self.apply_level(l, mu)?;
            out.add_at(l + 1, C64::new(1.0, 0.0), &next);
        }
        Ok(out)
    }

    /// Grid values `e^{ikφ^l} μ` of one level.
    pub fn evaluate_level(&mut self, l: usize, mu: &MultiDensity) -> Result<MultiDensity> {
        self.ensure_depth(l)?;
        let f = &self.factors[l];
        Ok(mu.with_values(mu.values.iter().zip(f).map(|(m, e)| m * e).collect()))
    }

    /// Amplitude `e^{−ikφ^l} η` of a grid density relabeled at depth `l`.
    pub fn relabel(&mut self, l: usize, eta: &MultiDensity) -> Result<MultiDensity> {
        self.ensure_depth(l)?;
        let f = &self.factors[l];
        Ok(eta.with_values(eta.values.iter().zip(f).map(|(v, e)| v * e.conj()).collect()))
    }

    /// `Σ_ℓ e^{ikφ^ℓ} μ_ℓ` on the grid.
    pub fn evaluate(&mut self, sum: &BeamSum, like: &MultiDensity) -> Result<MultiDensity> {
        let mut out = MultiDensity::zeros(&sizes(like));
        for (l, mu) in sum.amplitudes.iter().enumerate() {
            self.ensure_depth(l)?;
            for ((o, m), e) in out.values.iter_mut().zip(&mu.values).zip(&self.factors[l]) {
                *o += m * e;
            }
        }
        Ok(out)
    }

    /// Phase, amplitude and mask of one beam of a sum.
    pub fn beam(&mut self, sum: &BeamSum, depth: usize, obstacle: usize) -> Result<Beam> {
        self.ensure_depth(depth)?;
        let field = self.book.field(depth, obstacle)?;
        let mask = if depth == 0 {
            field.region.iter().map(|r| *r == Region::Illuminated).collect()
        } else {
            self.levels[depth - 1].targets[obstacle].iter().map(|t| t.is_some()).collect()
        };
        let amplitude = sum
            .amplitudes
            .get(depth)
            .map(|a| a.part(obstacle).to_vec())
            .unwrap_or_else(|| vec![C64::new(0.0, 0.0); field.len()]);
        Ok(Beam { depth, obstacle, phase: field.phase.clone(), amplitude, mask })
    }
}

/// Krylov space of beam sums for `A_{K,N}`.
pub struct PreconditionedSpace<'a> {
    pub problem: &'a ScatteringProblem,
    pub kirchhoff: &'a mut KirchhoffOperator,
    /// `N`.
    pub terms: usize,
    /// `false` replaces `K` by zero, leaving `I − T`.
    pub use_kirchhoff: bool,
    pub drop_tol: f64,
    /// Applications of `T` to single beams so far.
    pub t_applications: usize,
    /// `t_applications` after each operator application.
    pub cost_log: Vec<usize>,
}

impl<'a> PreconditionedSpace<'a> {
    pub fn new(problem: &'a ScatteringProblem, kirchhoff: &'a mut KirchhoffOperator, terms: usize) -> Self {
        Self { problem, kirchhoff, terms, use_kirchhoff: true, drop_tol: DEFAULT_DROP_TOL, t_applications: 0, cost_log: Vec::new() }
    }

    fn grid(&self, sum: &BeamSum) -> MultiDensity {
        let like = self.problem.zeros();
        // Depths of stored sums are always available.
        let mut out = like.clone();
        for (l, mu) in sum.amplitudes.iter().enumerate() {
            let f = &self.kirchhoff.factors[l];
            for ((o, m), e) in out.values.iter_mut().zip(&mu.values).zip(f) {
                *o += m * e;
            }
        }
        out
    }

    /// `Σ_{ℓ=0}^{M} K^ℓ g` with `g` the single-obstacle solutions at depth 0.
    pub fn rhs(&mut self, m: usize) -> Result<BeamSum> {
        let g = self.problem.initial_iterate();
        let g0 = self.kirchhoff.relabel(0, &g)?;
        let mut total = BeamSum::single(0, g0);
        if !self.use_kirchhoff {
            return Ok(total);
        }
        let mut term = total.clone();
        for _ in 0..m {
            term = self.kirchhoff.apply(&term)?;
            total.axpy(C64::new(1.0, 0.0), &term);
        }
        Ok(total)
    }

    /// `T` applied beam by beam, each result relabeled one depth deeper.
    pub fn apply_t(&mut self, sum: &BeamSum) -> Result<BeamSum> {
        let mut out = BeamSum::empty();
        for (l, mu) in sum.amplitudes.iter().enumerate() {
            if mu.values.iter().all(|v| *v == C64::new(0.0, 0.0)) {
                continue;
            }
            let grid = self.kirchhoff.evaluate_level(l, mu)?;
            let t = self.problem.apply_t(&grid);
            self.t_applications += 1;
            let relabeled = self.kirchhoff.relabel(l + 1, &t)?;
            out.add_at(l + 1, C64::new(1.0, 0.0), &relabeled);
        }
        Ok(out)
    }
}

impl<'a> KrylovSpace for PreconditionedSpace<'a> {
    type Vector = BeamSum;

    fn apply(&mut self, p: &BeamSum) -> Result<BeamSum> {
        let mut diff = self.apply_t(p)?;
        let mut out = p.clone();
        out.axpy(C64::new(-1.0, 0.0), &diff);
        if self.use_kirchhoff {
            let kp = self.kirchhoff.apply(p)?;
            // The ℓ = 0 term: T p − K p.
            out.axpy(C64::new(1.0, 0.0), &kp);
            diff.axpy(C64::new(-1.0, 0.0), &kp);
            for _ in 0..self.terms {
                diff = self.kirchhoff.apply(&diff)?;
                out.axpy(C64::new(-1.0, 0.0), &diff);
            }
        }
        out.prune(&self.problem.weights, self.drop_tol);
        self.cost_log.push(self.t_applications);
        Ok(out)
    }

    fn inner(&self, u: &BeamSum, v: &BeamSum) -> C64 {
        weighted_inner(&self.problem.weights, &self.grid(u).values, &self.grid(v).values)
    }

    fn axpy(&self, y: &mut BeamSum, a: C64, x: &BeamSum) {
        y.axpy(a, x);
    }

    fn zero_like(&self, _v: &BeamSum) -> BeamSum {
        BeamSum::empty()
    }
}

/// One iteration of a preconditioned solve.
#[derive(Clone, Debug)]
pub struct PreconditionedStep {
    pub iteration: usize,
    pub relative_residual: f64,
    /// Relative weighted L² error against the reference, if one was given.
    pub relative_error: Option<f64>,
    /// Beams in the iterate.
    pub beams: usize,
    /// Cumulative single-beam applications of `T`.
    pub t_applications: usize,
    /// Caller clock reading when the step finished.
    pub clock: f64,
}

#[derive(Clone, Debug)]
pub struct PreconditionedRun {
    pub solution: MultiDensity,
    pub history: Vec<PreconditionedStep>,
    pub converged: bool,
}

/// Settings of a preconditioned solve.
#[derive(Clone, Copy, Debug)]
pub struct PreconditionedSettings {
    /// `N`, the number of Kirchhoff powers in the operator.
    pub terms: usize,
    /// `M`, the number of Kirchhoff powers in the right-hand side.
    pub rhs_terms: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub use_kirchhoff: bool,
}

/// ORTHODIR on `A_{K,N} η = Σ_{ℓ≤M} K^ℓ g`.
pub fn solve_preconditioned(
    problem: &ScatteringProblem,
    kirchhoff: &mut KirchhoffOperator,
    settings: PreconditionedSettings,
    reference: Option<&MultiDensity>,
) -> Result<PreconditionedRun> {
    solve_preconditioned_timed(problem, kirchhoff, settings, reference, || 0.0)
}

/// [`solve_preconditioned`] that reads `clock` after every iteration.
pub fn solve_preconditioned_timed(
    problem: &ScatteringProblem,
    kirchhoff: &mut KirchhoffOperator,
    settings: PreconditionedSettings,
    reference: Option<&MultiDensity>,
    mut clock: impl FnMut() -> f64,
) -> Result<PreconditionedRun> {
    let mut space = PreconditionedSpace::new(problem, kirchhoff, settings.terms);
    space.use_kirchhoff = settings.use_kirchhoff;
    let rhs = space.rhs(settings.rhs_terms)?;
    let mut snapshots: Vec<(BeamSum, f64)> = Vec::new();
    let result = orthodir(&mut space, &rhs, settings.tol, settings.max_iter, |_, mu: &BeamSum| {
        snapshots.push((mu.clone(), clock()));
        false
    })?;
    let cost_log = space.cost_log.clone();
    let zero = problem.zeros();
    let mut history = Vec::with_capacity(result.steps.len());
    for (StepRecord { j, relative_residual, .. }, (snap, time)) in result.steps.iter().zip(&snapshots) {
        let relative_error = match reference {
            Some(r) => Some(problem.relative_error(&kirchhoff.evaluate(snap, &zero)?, r)),
            None => None,
        };
        history.push(PreconditionedStep {
            iteration: j + 1,
            relative_residual: *relative_residual,
            relative_error,
            beams: snap.beam_count(),
            // Step j has used j + 1 operator applications.
            t_applications: cost_log.get(*j).copied().unwrap_or(0),
            clock: *time,
        });
    }
    let solution = kirchhoff.evaluate(&result.solution, &zero)?;
    Ok(PreconditionedRun { solution, history, converged: result.converged })
}

/// Sup norms `‖K^ℓ g‖∞` for `ℓ = 0 ..= count` and the fitted one-step ratio
/// over `ℓ ∈ [lo, hi]`.
#[derive(Clone, Debug)]
pub struct DecayFit {
    pub sup_norms: Vec<f64>,
    /// Least-squares ratio per application of `K`.
    pub ratio: f64,
    /// Ratio per two applications (one round trip), comparable with `|R₂|`.
    pub round_trip_ratio: f64,
}

pub fn kirchhoff_decay(
    problem: &ScatteringProblem,
    kirchhoff: &mut KirchhoffOperator,
    lo: usize,
    hi: usize,
) -> Result<DecayFit> {
    if lo >= hi {
        return Err(Error::Precondition(format!("decay window [{lo}, {hi}] is empty")));
    }
    let g = kirchhoff.relabel(0, &problem.initial_iterate())?;
    let mut term = BeamSum::single(0, g);
    let sup = |s: &BeamSum| {
        s.amplitudes.iter().flat_map(|a| a.values.iter()).map(|v| v.norm()).fold(0.0, f64::max)
    };
    let mut sup_norms = vec![sup(&term)];
    for _ in 0..hi {
        term = kirchhoff.apply(&term)?;
        sup_norms.push(sup(&term));
    }
    let pts: Vec<(f64, f64)> = (lo..=hi)
        .filter(|&l| sup_norms[l] > 0.0)
        .map(|l| (l as f64, sup_norms[l].ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Precondition("Kirchhoff powers vanish inside the decay window".into()));
    }
    let np = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / np;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / np;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let ratio = (sxy / sxx).exp();
    Ok(DecayFit { sup_norms, ratio, round_trip_ratio: ratio * ratio })
}

/// Sum of Neumann iterates written as beams: `η^m` relabeled at depth `m`.
pub fn neumann_beams(
    problem: &ScatteringProblem,
    kirchhoff: &mut KirchhoffOperator,
    reflections: usize,
) -> Result<BeamSum> {
    let mut eta = problem.initial_iterate();
    let mut sum = BeamSum::empty();
    for m in 0..=reflections {
        let mu = kirchhoff.relabel(m, &eta)?;
        sum.add_at(m, C64::new(1.0, 0.0), &mu);
        if m < reflections {
            eta = problem.apply_t(&eta);
        }
    }
    Ok(sum)
}
