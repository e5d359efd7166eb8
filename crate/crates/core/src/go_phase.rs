//! Geometrical-optics phases of the multiply reflected fields on two convex
//! obstacles.
//!
//! The field of depth `q` on obstacle `j` is carried by rays that left the
//! incident plane wave at `X_0`, bounced alternately between the two obstacles
//! at `X_0, …, X_{q−1}` and arrive at `X_q = x ∈ ∂Ω_j`. Its phase is the optical
//! path length `φ(x) = α·X_0 + Σ_r |X_{r+1} − X_r|`. A node is illuminated when
//! such a chain exists with every bounce obeying the law of reflection, every
//! ray leaving a surface outward and arriving from outside, and `X_0` lit by the
//! incident wave.
//!
//! Chains are found by Newton's method on the path length as a function of the
//! bounce parameters `τ_0, …, τ_{q−1}` (its Hessian is tridiagonal), seeded by
//! forward shooting from the previous depth and by continuation along the grid.

use alloc::vec;
use alloc::vec::Vec;

use crate::cfie::ObstacleGrid;
use crate::geometry::{segment_hits_curve_before_end, Curve, CurvePoint, Vec2};
use crate::math::{angle_diff, wrap_angle, TAU};
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Newton iteration cap for chain solves.
const NEWTON_ITERATIONS: usize = 50;
/// Largest accepted parameter update per Newton step.
const MAX_STEP: f64 = 0.3;
/// Accepted stationarity residual, relative to the curve speed.
const STATIONARITY_TOL: f64 = 1e-11;
/// Samples of the ray–curve intersection scan.
const SCAN_SAMPLES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Illuminated,
    Shadow,
    /// Within one grid cell of a shadow boundary point.
    ShadowBoundaryAdjacent,
}

impl Region {
    pub fn label(self) -> &'static str {
        match self {
            Region::Illuminated => "IL",
            Region::Shadow => "SR",
            Region::ShadowBoundaryAdjacent => "SB",
        }
    }
}

/// Ray data of an illuminated node of a field with depth `q ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeRay {
    /// Parameter of `X_0` (on the path's first obstacle).
    pub launch_param: f64,
    /// Parameter of the last bounce `X_{q−1}` on the other obstacle.
    pub source_param: f64,
    /// Unit direction of the arriving ray `(x − X_{q−1})/|x − X_{q−1}|`.
    pub incoming: Vec2,
    /// `|x − X_{q−1}|`.
    pub leg_length: f64,
    /// Second arc-length derivative at `X_{q−1}` of `y ↦ φ^{q−1}(y) + |x − y|`.
    pub phase_second_derivative: f64,
    /// Wavefront curvature of the arriving ray field at `x`.
    pub arrival_curvature: f64,
    /// Largest specular-law residual along the chain.
    pub specular_residual: f64,
}

/// Phase, region labels and ray data of one depth on one obstacle.
#[derive(Clone, Debug)]
pub struct PhaseField {
    pub depth: usize,
    pub obstacle: usize,
    /// Obstacle carrying `X_0` (the path label of the field).
    pub launch_obstacle: usize,
    pub params: Vec<f64>,
    pub phase: Vec<f64>,
    pub region: Vec<Region>,
    /// `Some` exactly at nodes where a valid chain exists (depth ≥ 1).
    pub rays: Vec<Option<NodeRay>>,
    /// Parameters of the shadow boundary points.
    pub shadow_boundaries: Vec<f64>,
}

impl PhaseField {
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn illuminated_count(&self) -> usize {
        self.region.iter().filter(|r| **r == Region::Illuminated).count()
    }
}

/// Bounce parameters `τ_0 … τ_{q−1}` of valid chains, per node.
#[derive(Clone, Debug)]
pub struct ChainStore {
    pub chains: Vec<Option<Vec<f64>>>,
}

/// Inputs shared by all chain computations of a scene.
#[derive(Clone, Copy, Debug)]
pub struct ChainContext<'a> {
    pub curves: [&'a Curve; 2],
    pub direction: Vec2,
}

impl<'a> ChainContext<'a> {
    /// Obstacle of `X_r` in a depth-`q` chain ending on `target`.
    pub fn obstacle_of(&self, q: usize, r: usize, target: usize) -> usize {
        if (q - r).is_multiple_of(2) {
            target
        } else {
            1 - target
        }
    }
}

/// Geometry of a chain evaluated at given parameters.
#[derive(Clone, Debug)]
pub struct ChainEval {
    /// `X_0 … X_q` (the last one is `x`).
    pub points: Vec<CurvePoint>,
    pub normals: Vec<Vec2>,
    /// `u_{−1} = α, u_0, …, u_{q−1}`, stored at index `r + 1`.
    pub directions: Vec<Vec2>,
    /// `ρ_r = |X_{r+1} − X_r|`.
    pub lengths: Vec<f64>,
    pub phase: f64,
}

impl ChainEval {
    fn dir_before(&self, r: usize) -> Vec2 {
        self.directions[r]
    }

    fn dir_after(&self, r: usize) -> Vec2 {
        self.directions[r + 1]
    }

    /// Conditions for a physical ray path: lit start, outward departures,
    /// arrivals from outside.
    pub fn is_valid(&self, direction: Vec2) -> bool {
        let q = self.lengths.len();
        if direction.dot(self.normals[0]) >= 0.0 {
            return false;
        }
        for r in 0..q {
            if self.dir_after(r).dot(self.normals[r]) <= 0.0 {
                return false;
            }
            if self.dir_after(r).dot(self.normals[r + 1]) >= 0.0 {
                return false;
            }
        }
        true
    }

    /// Largest `|(u_{r−1} − u_r)·t_r|` over the bounces.
    pub fn specular_residual(&self) -> f64 {
        let q = self.lengths.len();
        (0..q)
            .map(|r| (self.dir_before(r) - self.dir_after(r)).dot(self.points[r].tangent()).abs())
            .fold(0.0, f64::max)
    }

    /// Wavefront curvatures: the value arriving at `X_{q−1}` (before reflecting
    /// there) and the value arriving at `x`.
    pub fn wavefront_curvatures(&self) -> (f64, f64) {
        let q = self.lengths.len();
        let mut c = 0.0;
        let mut before_last = 0.0;
        for r in 0..q {
            if r == q - 1 {
                before_last = c;
            }
            let cos = self.dir_after(r).dot(self.normals[r]);
            c += 2.0 * self.points[r].curvature() / cos;
            c /= 1.0 + c * self.lengths[r];
        }
        (before_last, c)
    }

    /// `cos²θ (c + 1/ρ) + 2κ cosθ` at `X_{q−1}`.
    pub fn phase_second_derivative(&self) -> f64 {
        let q = self.lengths.len();
        let (c_in, _) = self.wavefront_curvatures();
        let cos = self.dir_after(q - 1).dot(self.normals[q - 1]);
        cos * cos * (c_in + 1.0 / self.lengths[q - 1]) + 2.0 * self.points[q - 1].curvature() * cos
    }
}

/// Evaluates the chain with bounce parameters `taus` ending at parameter `x_param` on `target`.
pub fn evaluate_chain(ctx: &ChainContext, target: usize, taus: &[f64], x_param: f64) -> ChainEval {
    let q = taus.len();
    let mut points = Vec::with_capacity(q + 1);
    for (r, &t) in taus.iter().enumerate() {
        points.push(ctx.curves[ctx.obstacle_of(q, r, target)].eval(t));
    }
    points.push(ctx.curves[target].eval(x_param));
    let normals: Vec<Vec2> = points.iter().map(|p| p.normal()).collect();
    let mut directions = Vec::with_capacity(q + 1);
    directions.push(ctx.direction);
    let mut lengths = Vec::with_capacity(q);
    let mut phase = ctx.direction.dot(points[0].pos);
    for r in 0..q {
        let d = points[r + 1].pos - points[r].pos;
        let len = d.norm();
        lengths.push(len);
        directions.push(d * (1.0 / len));
        phase += len;
    }
    ChainEval { points, normals, directions, lengths, phase }
}

/// Phase of an explicit polygonal chain `α·X_0 + Σ |X_{r+1} − X_r|`.
pub fn chain_phase(direction: Vec2, points: &[Vec2]) -> f64 {
    let mut phase = direction.dot(points[0]);
    for w in points.windows(2) {
        phase += (w[1] - w[0]).norm();
    }
    phase
}

/// Solves a tridiagonal system with partial pivoting; `None` if singular.
fn solve_tridiagonal(mut dl: Vec<f64>, mut d: Vec<f64>, mut du: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Some(b);
    }
    // dl doubles as storage for the second superdiagonal created by pivoting.
    let mut du2 = vec![0.0; n];
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                return None;
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
        dl[i] = 0.0;
    }
    if d[n - 1] == 0.0 {
        return None;
    }
    b[n - 1] /= d[n - 1];
    if n > 1 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
    if b.iter().all(|v| v.is_finite()) {
        Some(b)
    } else {
        None
    }
}

/// Newton's method for a stationary chain ending at `x_param`, from `init`.
pub fn solve_chain(ctx: &ChainContext, target: usize, x_param: f64, init: &[f64]) -> Option<Vec<f64>> {
    let q = init.len();
    if q == 0 {
        return Some(Vec::new());
    }
    let mut taus = init.to_vec();
    for _ in 0..NEWTON_ITERATIONS {
        let ev = evaluate_chain(ctx, target, &taus, x_param);
        let mut grad = vec![0.0; q];
        let mut diag = vec![0.0; q];
        let mut off = vec![0.0; q.saturating_sub(1)];
        let mut scale: f64 = 0.0;
        for r in 0..q {
            let p = &ev.points[r];
            let (u_prev, u_next) = (ev.dir_before(r), ev.dir_after(r));
            let sp2 = p.d1.norm_sqr();
            scale = scale.max(sp2.sqrt());
            grad[r] = (u_prev - u_next).dot(p.d1);
            let mut h = (u_prev - u_next).dot(p.d2);
            if r >= 1 {
                h += (sp2 - u_prev.dot(p.d1).powi(2)) / ev.lengths[r - 1];
            }
            h += (sp2 - u_next.dot(p.d1).powi(2)) / ev.lengths[r];
            diag[r] = h;
            if r + 1 < q {
                let pn = ev.points[r + 1].d1;
                let proj = pn - u_next * u_next.dot(pn);
                off[r] = -p.d1.dot(proj) / ev.lengths[r];
            }
        }
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax <= 1e-14 * scale {
            return Some(taus.into_iter().map(wrap_angle).collect());
        }
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        let step = solve_tridiagonal(off.clone(), diag, off, rhs)?;
        let smax = step.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let damp = if smax > MAX_STEP { MAX_STEP / smax } else { 1.0 };
        for (t, s) in taus.iter_mut().zip(&step) {
            *t += damp * s;
        }
        if smax * damp < 1e-15 {
            let ev = evaluate_chain(ctx, target, &taus, x_param);
            return (ev.specular_residual() <= STATIONARITY_TOL).then(|| taus.into_iter().map(wrap_angle).collect());
        }
    }
    let ev = evaluate_chain(ctx, target, &taus, x_param);
    (ev.specular_residual() <= STATIONARITY_TOL).then(|| taus.into_iter().map(wrap_angle).collect())
}

/// Depth-0 field: `φ = α·x`, lit where `α·ν < 0`.
pub fn phase_zero(grid: &ObstacleGrid, obstacle: usize, direction: Vec2) -> PhaseField {
    let n = grid.len();
    let curve = &grid.curve;
    let lit: Vec<bool> = grid.normals.iter().map(|nu| direction.dot(*nu) < 0.0).collect();
    let mut boundaries = Vec::new();
    for i in 0..n {
        let ip = (i + 1) % n;
        if lit[i] != lit[ip] {
            let f = |t: f64| direction.dot(curve.normal(t));
            let (mut lo, mut hi) = (grid.params[i], grid.params[i] + grid.step());
            let flo = f(lo);
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if (f(mid) < 0.0) == (flo < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            boundaries.push(wrap_angle(0.5 * (lo + hi)));
        }
    }
    let region = label_regions(&grid.params, &lit, &boundaries, grid.step());
    PhaseField {
        depth: 0,
        obstacle,
        launch_obstacle: obstacle,
        params: grid.params.clone(),
        phase: grid.points.iter().map(|x| direction.dot(*x)).collect(),
        region,
        rays: vec![None; n],
        shadow_boundaries: boundaries,
    }
}

fn label_regions(params: &[f64], lit: &[bool], boundaries: &[f64], h: f64) -> Vec<Region> {
    params
        .iter()
        .zip(lit)
        .map(|(&t, &l)| {
            if boundaries.iter().any(|&b| angle_diff(b, t).abs() < h) {
                Region::ShadowBoundaryAdjacent
            } else if l {
                Region::Illuminated
            } else {
                Region::Shadow
            }
        })
        .collect()
}

/// First entry point of the ray `y + s·o`, `s > 0`, into `curve`.
pub fn ray_entry(curve: &Curve, y: Vec2, o: Vec2) -> Option<f64> {
    let f = |t: f64| o.cross(curve.position(t) - y);
    let mut best: Option<(f64, f64)> = None;
    let mut t_prev = 0.0;
    let mut f_prev = f(0.0);
    for i in 1..=SCAN_SAMPLES {
        let t = TAU * i as f64 / SCAN_SAMPLES as f64;
        let fv = f(t);
        if (f_prev < 0.0) != (fv < 0.0) {
            let (mut lo, mut hi) = (t_prev, t);
            let flo = f_prev;
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if (f(mid) < 0.0) == (flo < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            let p = curve.eval(root);
            let s = o.dot(p.pos - y);
            if s > 1e-12 && o.dot(p.normal()) < 0.0 && best.is_none_or(|(bs, _)| s < bs) {
                best = Some((s, root));
            }
        }
        t_prev = t;
        f_prev = fv;
    }
    best.map(|(_, t)| wrap_angle(t))
}

/// The phase field of depth `prev.depth + 1` on the other obstacle, with its chains.
pub fn propagate_phase(
    ctx: &ChainContext,
    target_grid: &ObstacleGrid,
    source_grid: &ObstacleGrid,
    prev: &PhaseField,
    prev_chains: &ChainStore,
) -> Result<(PhaseField, ChainStore)> {
    let q = prev.depth + 1;
    let target = 1 - prev.obstacle;
    let n = target_grid.len();
    let h = target_grid.step();
    let target_curve = ctx.curves[target];

    // Forward shooting: launch chains and landing parameters.
    let m = source_grid.len();
    let mut launches: Vec<Option<(Vec<f64>, f64)>> = vec![None; m];
    for i in 0..m {
        let Some(chain) = &prev_chains.chains[i] else { continue };
        let incoming = if prev.depth == 0 {
            ctx.direction
        } else {
            match &prev.rays[i] {
                Some(ray) => ray.incoming,
                None => continue,
            }
        };
        let nu = source_grid.normals[i];
        let out = incoming.reflect(nu);
        if out.dot(nu) <= 0.0 {
            continue;
        }
        if let Some(s) = ray_entry(target_curve, source_grid.points[i], out) {
            let mut full = chain.clone();
            full.push(source_grid.params[i]);
            launches[i] = Some((full, s));
        }
    }

    let mut chains: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut attempted = vec![false; n];
    let accept = |taus: Vec<f64>, t: f64| -> Option<Vec<f64>> {
        let ev = evaluate_chain(ctx, target, &taus, t);
        ev.is_valid(ctx.direction).then_some(taus)
    };
    for i in 0..m {
        let ip = (i + 1) % m;
        let (Some((ca, sa)), Some((cb, sb))) = (&launches[i], &launches[ip]) else { continue };
        let span = angle_diff(*sa, *sb);
        if span.abs() >= core::f64::consts::PI || span == 0.0 {
            continue;
        }
        for (node, &t) in target_grid.params.iter().enumerate() {
            if chains[node].is_some() {
                continue;
            }
            let w = angle_diff(*sa, t) / span;
            if !(0.0..=1.0).contains(&w) {
                continue;
            }
            attempted[node] = true;
            let guess: Vec<f64> = ca.iter().zip(cb).map(|(a, b)| a + w * angle_diff(*a, *b)).collect();
            if let Some(taus) = solve_chain(ctx, target, t, &guess) {
                chains[node] = accept(taus, t);
            }
        }
    }

    // Continuation to neighbours of solved nodes.
    let mut changed = true;
    while changed {
        changed = false;
        for node in 0..n {
            if chains[node].is_some() {
                continue;
            }
            for nb in [(node + n - 1) % n, (node + 1) % n] {
                let Some(seed) = chains[nb].clone() else { continue };
                let t = target_grid.params[node];
                if let Some(taus) = solve_chain(ctx, target, t, &seed).and_then(|c| accept(c, t)) {
                    chains[node] = Some(taus);
                    changed = true;
                    break;
                }
            }
        }
    }
    if let Some(node) = (0..n).find(|&i| attempted[i] && chains[i].is_none() && {
        // A bracketed node whose neighbours are both lit must itself be lit.
        chains[(i + n - 1) % n].is_some() && chains[(i + 1) % n].is_some()
    }) {
        return Err(Error::NotConverged {
            what: alloc::format!(
                "reflection chain of depth {q} at node {node} (t = {}) on obstacle {target}",
                target_grid.params[node]
            ),
            iterations: NEWTON_ITERATIONS,
        });
    }

    // Shadow boundaries by bisection on chain validity.
    let lit: Vec<bool> = chains.iter().map(|c| c.is_some()).collect();
    let mut boundaries: Vec<(f64, f64, f64)> = Vec::new(); // (param, phase, dφ/dt)
    for i in 0..n {
        let ip = (i + 1) % n;
        if lit[i] == lit[ip] {
            continue;
        }
        let (lit_node, dark_node) = if lit[i] { (i, ip) } else { (ip, i) };
        let t_lit = target_grid.params[lit_node];
        let dt = angle_diff(t_lit, target_grid.params[dark_node]);
        let mut good = chains[lit_node].clone().expect("lit node has a chain");
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while (hi - lo) * dt.abs() > 1e-12 {
            let mid = 0.5 * (lo + hi);
            let t = t_lit + mid * dt;
            match solve_chain(ctx, target, t, &good).and_then(|c| accept(c, t)) {
                Some(c) => {
                    good = c;
                    lo = mid;
                }
                None => hi = mid,
            }
        }
        let t_sb = wrap_angle(t_lit + lo * dt);
        let ev = evaluate_chain(ctx, target, &good, t_sb);
        let slope = ev.directions[q].dot(ev.points[q].d1);
        boundaries.push((t_sb, ev.phase, slope));
    }

    // Phases and ray data.
    let mut phase = vec![0.0; n];
    let mut rays = vec![None; n];
    for node in 0..n {
        if let Some(taus) = &chains[node] {
            let t = target_grid.params[node];
            let ev = evaluate_chain(ctx, target, taus, t);
            let (_, arrival) = ev.wavefront_curvatures();
            let psi = ev.phase_second_derivative();
            if !(psi > 0.0) {
                return Err(Error::Geometry(alloc::format!(
                    "non-positive combined phase curvature {psi} at node {node} of depth {q}"
                )));
            }
            phase[node] = ev.phase;
            rays[node] = Some(NodeRay {
                launch_param: taus[0],
                source_param: taus[q - 1],
                incoming: ev.directions[q],
                leg_length: ev.lengths[q - 1],
                phase_second_derivative: psi,
                arrival_curvature: arrival,
                specular_residual: ev.specular_residual(),
            });
        }
    }
    extend_into_shadow(&target_grid.params, &lit, &boundaries, &mut phase);
    let sb_params: Vec<f64> = boundaries.iter().map(|b| b.0).collect();
    let region = label_regions(&target_grid.params, &lit, &sb_params, h);
    Ok((
        PhaseField {
            depth: q,
            obstacle: target,
            launch_obstacle: if q.is_multiple_of(2) { target } else { 1 - target },
            params: target_grid.params.clone(),
            phase,
            region,
            rays,
            shadow_boundaries: sb_params,
        },
        ChainStore { chains },
    ))
}

/// Fills shadow-region phases with the cubic Hermite interpolant between the
/// values and slopes at the enclosing shadow boundary points.
fn extend_into_shadow(params: &[f64], lit: &[bool], boundaries: &[(f64, f64, f64)], phase: &mut [f64]) {
    let n = params.len();
    if boundaries.is_empty() {
        return;
    }
    for i in 0..n {
        if lit[i] {
            continue;
        }
        let t = params[i];
        // Boundary before t (largest signed offset ≤ 0) and after t.
        let mut before: Option<(f64, &(f64, f64, f64))> = None;
        let mut after: Option<(f64, &(f64, f64, f64))> = None;
        for b in boundaries {
            let back = wrap_angle(t - b.0);
            let ahead = wrap_angle(b.0 - t);
            if before.is_none_or(|(d, _)| back < d) {
                before = Some((back, b));
            }
            if after.is_none_or(|(d, _)| ahead < d) {
                after = Some((ahead, b));
            }
        }
        let (Some((da, a)), Some((db, b))) = (before, after) else { continue };
        let len = da + db;
        if len <= 0.0 {
            phase[i] = a.1;
            continue;
        }
        let s = da / len;
        let (h00, h10, h01, h11) = (
            2.0 * s * s * s - 3.0 * s * s + 1.0,
            s * s * s - 2.0 * s * s + s,
            -2.0 * s * s * s + 3.0 * s * s,
            s * s * s - s * s,
        );
        phase[i] = h00 * a.1 + h10 * len * a.2 + h01 * b.1 + h11 * len * b.2;
    }
}

/// Phase fields of all depths `0 ..= max_depth` on both obstacles.
#[derive(Clone, Debug)]
pub struct PhaseBook {
    /// `fields[q][j]`.
    pub fields: Vec<[PhaseField; 2]>,
    /// Chains of the deepest level, kept for extending the book.
    last_chains: [ChainStore; 2],
}

impl PhaseBook {
    pub fn build(grids: &[ObstacleGrid], direction: Vec2, max_depth: usize) -> Result<Self> {
        if grids.len() != 2 {
            return Err(Error::Precondition(alloc::format!(
                "phase tracing needs exactly two obstacles, got {}",
                grids.len()
            )));
        }
        for (j, g) in grids.iter().enumerate() {
            if !g.curve.is_convex() {
                return Err(Error::Geometry(alloc::format!("obstacle {j} is not convex")));
            }
        }
        let f0 = [phase_zero(&grids[0], 0, direction), phase_zero(&grids[1], 1, direction)];
        let chains0 = [zero_chains(&grids[0], direction), zero_chains(&grids[1], direction)];
        let mut book = Self { fields: vec![f0], last_chains: chains0 };
        book.extend(grids, direction, max_depth)?;
        Ok(book)
    }

    pub fn max_depth(&self) -> usize {
        self.fields.len() - 1
    }

    /// Adds depths up to `max_depth`.
    pub fn extend(&mut self, grids: &[ObstacleGrid], direction: Vec2, max_depth: usize) -> Result<()> {
        let ctx = ChainContext { curves: [&grids[0].curve, &grids[1].curve], direction };
        while self.max_depth() < max_depth {
            let prev = self.fields.last().expect("depth 0 present");
            // Field on obstacle j at the next depth comes from obstacle 1 − j.
            let (f_on_1, c_on_1) = propagate_phase(&ctx, &grids[1], &grids[0], &prev[0], &self.last_chains[0])?;
            let (f_on_0, c_on_0) = propagate_phase(&ctx, &grids[0], &grids[1], &prev[1], &self.last_chains[1])?;
            self.fields.push([f_on_0, f_on_1]);
            self.last_chains = [c_on_0, c_on_1];
        }
        Ok(())
    }

    pub fn field(&self, depth: usize, obstacle: usize) -> Result<&PhaseField> {
        self.fields
            .get(depth)
            .map(|f| &f[obstacle])
            .ok_or(Error::PhaseDepth { required: depth, available: self.max_depth() })
    }
}

fn zero_chains(grid: &ObstacleGrid, direction: Vec2) -> ChainStore {
    ChainStore { chains: grid.normals.iter().map(|nu| (direction.dot(*nu) < 0.0).then(Vec::new)).collect() }
}

/// `∂²_s (φ^{q−1}(y(s)) + |x − y(s)|)` at the stationary point for node `i`
/// of a field of depth `q ≥ 1`.
pub fn combined_phase_second_derivative(field: &PhaseField, i: usize) -> Result<f64> {
    match &field.rays[i] {
        Some(ray) => Ok(ray.phase_second_derivative),
        None => Err(Error::Precondition(alloc::format!(
            "node {i} of the depth-{} field is not illuminated",
            field.depth
        ))),
    }
}

/// Whether the segment `[x, y]` meets `curve` only at `x`.
pub fn visible(curve: &Curve, x: Vec2, y: Vec2) -> bool {
    !segment_hits_curve_before_end(curve, y, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn grids(c0: Curve, c1: Curve, n: usize) -> Vec<ObstacleGrid> {
        vec![ObstacleGrid::new(c0, n).unwrap(), ObstacleGrid::new(c1, n).unwrap()]
    }

    fn paper_circles(n: usize) -> Vec<ObstacleGrid> {
        grids(
            Curve::circle(Vec2::new(0.0, 0.0), 1.0),
            Curve::circle(Vec2::new(0.9625, -2.6444), 1.5),
            n,
        )
    }

    #[test]
    fn incident_field_on_circle() {
        let g = ObstacleGrid::new(Curve::circle(Vec2::default(), 1.0), 64).unwrap();
        let f = phase_zero(&g, 0, Vec2::new(1.0, 0.0));
        let mut sb = f.shadow_boundaries.clone();
        sb.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(sb.len(), 2);
        assert!((sb[0] - PI / 2.0).abs() < 1e-12);
        assert!((sb[1] - 1.5 * PI).abs() < 1e-12);
        assert!((f.phase[32] + 1.0).abs() < 1e-15);
        assert_eq!(f.region[32], Region::Illuminated);
        assert_eq!(f.region[0], Region::Shadow);
    }

    #[test]
    fn incident_shadow_boundaries_on_ellipse() {
        let e = Curve::ellipse(Vec2::default(), 2.0, 1.0);
        let g = ObstacleGrid::new(e.clone(), 64).unwrap();
        let alpha = Vec2::new(1.0, 0.0);
        let f = phase_zero(&g, 0, alpha);
        // Brute-force sign scan of α·ν.
        let samples = 100_000;
        let mut roots = Vec::new();
        for i in 0..samples {
            let (a, b) = (TAU * i as f64 / samples as f64, TAU * (i + 1) as f64 / samples as f64);
            if (alpha.dot(e.normal(a)) < 0.0) != (alpha.dot(e.normal(b)) < 0.0) {
                roots.push(0.5 * (a + b));
            }
        }
        assert_eq!(roots.len(), 2);
        for r in roots {
            assert!(f.shadow_boundaries.iter().any(|s| angle_diff(*s, r).abs() < 1e-4));
        }
    }

    #[test]
    fn axial_chain_phases() {
        let c0 = Curve::circle(Vec2::new(0.0, 0.0), 1.0);
        let c1 = Curve::circle(Vec2::new(3.0, 0.0), 1.0);
        let alpha = Vec2::new(1.0, 0.0);
        let ctx = ChainContext { curves: [&c0, &c1], direction: alpha };
        // Depth 1 at (2, 0) on obstacle 1: X_0 = (1, 0) on obstacle 0.
        let taus = solve_chain(&ctx, 1, PI, &[0.05]).unwrap();
        let ev = evaluate_chain(&ctx, 1, &taus, PI);
        assert!(angle_diff(taus[0], 0.0).abs() < 1e-12);
        assert!((ev.phase - 2.0).abs() < 1e-12);
        assert!(!ev.is_valid(alpha), "the axial point (1, 0) faces away from α");
        // Depth 2 back at (1, 0): one more unit of path.
        let taus = solve_chain(&ctx, 0, 0.0, &[0.02, PI - 0.03]).unwrap();
        let ev = evaluate_chain(&ctx, 0, &taus, 0.0);
        assert!((ev.phase - 3.0).abs() < 1e-12);
        assert!((chain_phase(alpha, &[Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(1.0, 0.0)]) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn tridiagonal_solver_with_pivoting() {
        // [[0, 1, 0], [2, 1, 1], [0, 3, 4]] x = b
        let dl = vec![2.0, 3.0];
        let d = vec![0.0, 1.0, 4.0];
        let du = vec![1.0, 1.0];
        let x_true = [1.0, -2.0, 0.5];
        let b = vec![x_true[1], 2.0 * x_true[0] + x_true[1] + x_true[2], 3.0 * x_true[1] + 4.0 * x_true[2]];
        let x = solve_tridiagonal(dl, d, du, b).unwrap();
        for (a, b) in x.iter().zip(x_true) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn first_reflection_matches_fermat_search() {
        let g = paper_circles(200);
        let alpha = Vec2::new(1.0, 0.0);
        let book = PhaseBook::build(&g, alpha, 1).unwrap();
        let field = book.field(1, 1).unwrap();
        assert!(field.illuminated_count() > 5);
        assert_eq!(field.shadow_boundaries.len(), 2);
        let c0 = &g[0].curve;
        let lit_count = field.rays.iter().filter(|r| r.is_some()).count();
        assert!(lit_count > 0);
        for (i, ray) in field.rays.iter().enumerate() {
            let Some(ray) = ray else { continue };
            let x = g[1].points[i];
            // Stationary value of α·y + |x − y| over lit y: dense scan then golden refinement.
            let f = |t: f64| alpha.dot(c0.position(t)) + (x - c0.position(t)).norm();
            let samples = 10_000;
            let mut best_t = ray.source_param;
            let mut best_err = f64::INFINITY;
            for s in 0..samples {
                let t = TAU * s as f64 / samples as f64;
                let d = (f(t + 1e-7) - f(t - 1e-7)).abs();
                if angle_diff(t, ray.source_param).abs() < 0.05 && d < best_err {
                    best_err = d;
                    best_t = t;
                }
            }
            // Refine the stationary point by bisection on the derivative.
            let df = |t: f64| {
                let p = c0.eval(t);
                let u = (x - p.pos).normalized();
                (alpha - u).dot(p.d1)
            };
            let (mut lo, mut hi) = (best_t - 1e-3, best_t + 1e-3);
            assert!(df(lo) * df(hi) <= 0.0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if (df(mid) < 0.0) == (df(lo) < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!((f(0.5 * (lo + hi)) - field.phase[i]).abs() < 1e-8);
            assert!(ray.specular_residual < 1e-10);
        }
    }

    #[test]
    fn second_derivative_matches_finite_differences() {
        let g = paper_circles(160);
        let alpha = Vec2::new(1.0, 0.0);
        let ctx = ChainContext { curves: [&g[0].curve, &g[1].curve], direction: alpha };
        let mut fields = [phase_zero(&g[0], 0, alpha), phase_zero(&g[1], 1, alpha)];
        let mut chains = [zero_chains(&g[0], alpha), zero_chains(&g[1], alpha)];
        for depth in 1..=3 {
            let (f1, c1) = propagate_phase(&ctx, &g[1], &g[0], &fields[0], &chains[0]).unwrap();
            let (f0, c0) = propagate_phase(&ctx, &g[0], &g[1], &fields[1], &chains[1]).unwrap();
            let next_fields = [f0, f1];
            let next_chains = [c0, c1];
            for j in 0..2 {
                let src = 1 - j;
                let curve = ctx.curves[src];
                let field = &next_fields[j];
                for (i, ray) in field.rays.iter().enumerate().step_by(5) {
                    let Some(ray) = ray else { continue };
                    let x = g[j].points[i];
                    let full = next_chains[j].chains[i].as_ref().unwrap();
                    let prefix = &full[..depth - 1];
                    // φ^{q−1}(y(τ)) by re-solving the shorter chain near its known solution.
                    let total = |tau: f64| -> f64 {
                        let prev_phase = if depth == 1 {
                            alpha.dot(curve.position(tau))
                        } else {
                            let taus = solve_chain(&ctx, src, tau, prefix).unwrap();
                            evaluate_chain(&ctx, src, &taus, tau).phase
                        };
                        prev_phase + (x - curve.position(tau)).norm()
                    };
                    let t0 = ray.source_param;
                    let ds = 1e-4;
                    let dt = ds / curve.eval(t0).speed();
                    let fd = (total(t0 + dt) - 2.0 * total(t0) + total(t0 - dt)) / (ds * ds);
                    let want = ray.phase_second_derivative;
                    assert!(
                        (fd - want).abs() < 1e-6 * (1.0 + want.abs()),
                        "depth {depth} obstacle {j} node {i}: {fd} vs {want}"
                    );
                    assert!(want > 0.0);
                }
            }
            fields = next_fields;
            chains = next_chains;
        }
    }

    /// Fields and chains of depths `1 ..= depth`, keeping every chain store.
    fn trace(g: &[ObstacleGrid], alpha: Vec2, depth: usize) -> Vec<([PhaseField; 2], [ChainStore; 2])> {
        let ctx = ChainContext { curves: [&g[0].curve, &g[1].curve], direction: alpha };
        let mut out = vec![(
            [phase_zero(&g[0], 0, alpha), phase_zero(&g[1], 1, alpha)],
            [zero_chains(&g[0], alpha), zero_chains(&g[1], alpha)],
        )];
        for _ in 0..depth {
            let (f, c) = out.last().unwrap();
            let (f1, c1) = propagate_phase(&ctx, &g[1], &g[0], &f[0], &c[0]).unwrap();
            let (f0, c0) = propagate_phase(&ctx, &g[0], &g[1], &f[1], &c[1]).unwrap();
            out.push(([f0, f1], [c0, c1]));
        }
        out
    }

    #[test]
    fn phase_increment_on_the_periodic_orbit_tends_to_twice_the_gap() {
        let g = paper_circles(400);
        let alpha = Vec2::new(1.0, 0.0);
        let levels = trace(&g, alpha, 16);
        let ctx = ChainContext { curves: [&g[0].curve, &g[1].curve], direction: alpha };
        let cp = crate::geometry::closest_pair_curves(&g[0].curve, &g[1].curve).unwrap();
        for (j, t_orbit) in [(0, cp.t1), (1, cp.t2)] {
            let node = (0..g[j].len())
                .min_by(|&a, &b| {
                    let da = angle_diff(g[j].params[a], t_orbit).abs();
                    da.partial_cmp(&angle_diff(g[j].params[b], t_orbit).abs()).unwrap()
                })
                .unwrap();
            let phase_at_orbit: Vec<f64> = levels
                .iter()
                .skip(1)
                .map(|(_, c)| {
                    let seed = c[j].chains[node].as_ref().expect("orbit point is lit");
                    let taus = solve_chain(&ctx, j, t_orbit, seed).unwrap();
                    evaluate_chain(&ctx, j, &taus, t_orbit).phase
                })
                .collect();
            let deviation: Vec<f64> =
                phase_at_orbit.windows(3).map(|w| (w[2] - w[0] - 2.0 * cp.distance).abs()).collect();
            // deviation[m − 1] compares depths m and m + 2.
            for m in 4..deviation.len() {
                assert!(deviation[m] < deviation[m - 2], "obstacle {j}: not decreasing at m = {}", m + 1);
            }
            assert!(deviation[13] < 1e-8, "obstacle {j}: {:e} at m = 14", deviation[13]);
        }
    }

    #[test]
    fn fields_are_consistent_and_arcs_shrink() {
        let g = paper_circles(400);
        let alpha = Vec2::new(1.0, 0.0);
        let levels = trace(&g, alpha, 12);
        let mut previous_arc = [f64::INFINITY; 2];
        for (q, (fields, _)) in levels.iter().enumerate().skip(1) {
            for (j, f) in fields.iter().enumerate() {
                assert_eq!(f.shadow_boundaries.len(), 2, "depth {q} obstacle {j}");
                for (i, ray) in f.rays.iter().enumerate() {
                    let arrival = g[j].normals[i].dot(f.rays[i].map_or(Vec2::default(), |r| r.incoming));
                    match ray {
                        Some(ray) => {
                            assert!(ray.specular_residual < 1e-10);
                            assert!(arrival < 0.0);
                            assert!(ray.phase_second_derivative > 0.0);
                        }
                        None => assert!(!(f.region[i] == Region::Illuminated)),
                    }
                }
                // Length of the lit arc between the two shadow boundaries.
                let (a, b) = (f.shadow_boundaries[0], f.shadow_boundaries[1]);
                let mid = a + 0.5 * wrap_angle(b - a);
                let lit_forward = f.rays[(0..f.len())
                    .min_by(|&x, &y| {
                        angle_diff(f.params[x], mid).abs().partial_cmp(&angle_diff(f.params[y], mid).abs()).unwrap()
                    })
                    .unwrap()]
                .is_some();
                let arc = if lit_forward { wrap_angle(b - a) } else { TAU - wrap_angle(b - a) };
                if q >= 2 {
                    assert!(arc <= previous_arc[j] + 1e-9, "depth {q} obstacle {j}: {arc} > {}", previous_arc[j]);
                }
                previous_arc[j] = arc;
            }
        }
    }

    #[test]
    fn second_derivative_scales_inversely_with_size() {
        let alpha = Vec2::new(1.0, 0.0);
        let small = paper_circles(160);
        let big = grids(
            Curve::circle(Vec2::new(0.0, 0.0), 2.0),
            Curve::circle(Vec2::new(2.0 * 0.9625, -2.0 * 2.6444), 3.0),
            160,
        );
        let a = PhaseBook::build(&small, alpha, 2).unwrap();
        let b = PhaseBook::build(&big, alpha, 2).unwrap();
        for q in 1..=2 {
            for j in 0..2 {
                let (fa, fb) = (a.field(q, j).unwrap(), b.field(q, j).unwrap());
                for i in 0..fa.len() {
                    if let (Some(ra), Some(rb)) = (fa.rays[i], fb.rays[i]) {
                        assert!((rb.phase_second_derivative - 0.5 * ra.phase_second_derivative).abs() < 1e-10);
                        assert!((fb.phase[i] - 2.0 * fa.phase[i]).abs() < 1e-10);
                    }
                }
            }
        }
    }
}
