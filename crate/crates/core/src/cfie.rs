//! Nyström discretization of the combined field integral equation for the
//! normal derivative `η = ∂u/∂ν` of the total field on a sound-soft boundary:
//!
//! ```text
//! η(x) − ∫_∂Ω (∂_ν(x) + ik) G(x, y) η(y) ds(y) = f(x),   G = −(i/2) H_0^(1)(k|x − y|)
//! f(x) = 2 (∂_ν + ik) exp(ik α·x)
//! ```
//!
//! The self interaction uses the logarithmic product quadrature of Kress
//! (the kernel is split as `L₁ ln(4 sin²((t−τ)/2)) + L₂`); interactions between
//! distinct obstacles are smooth and use the trapezoid rule.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::geometry::{Curve, Vec2};
use crate::linalg::{LuFactors, Matrix};
use crate::math::{EULER_GAMMA, TAU};
use crate::special::hankel1_01;
use crate::{Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

/// Minimum number of nodes per obstacle.
pub const MIN_NODES: usize = 16;

/// Equispaced Nyström nodes `t_j = 2πj/n` on one obstacle.
#[derive(Clone, Debug)]
pub struct ObstacleGrid {
    pub curve: Curve,
    pub params: Vec<f64>,
    pub points: Vec<Vec2>,
    pub normals: Vec<Vec2>,
    /// `|γ'(t_j)|`.
    pub speed: Vec<f64>,
    pub curvature: Vec<f64>,
    /// Arc-length trapezoid weights `2π|γ'(t_j)|/n`.
    pub weights: Vec<f64>,
}

impl ObstacleGrid {
    pub fn new(curve: Curve, n: usize) -> Result<Self> {
        if n < MIN_NODES || !n.is_multiple_of(2) {
            return Err(Error::Precondition(alloc::format!(
                "node count must be even and at least {MIN_NODES}, got {n}"
            )));
        }
        let h = TAU / n as f64;
        let mut g = Self {
            curve,
            params: Vec::with_capacity(n),
            points: Vec::with_capacity(n),
            normals: Vec::with_capacity(n),
            speed: Vec::with_capacity(n),
            curvature: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
        };
        for j in 0..n {
            let t = h * j as f64;
            let p = g.curve.eval(t);
            g.params.push(t);
            g.points.push(p.pos);
            g.normals.push(p.normal());
            g.speed.push(p.speed());
            g.curvature.push(p.curvature());
            g.weights.push(h * p.speed());
        }
        Ok(g)
    }

    /// Grid with at least `ppw` points per wavelength along the boundary.
    pub fn with_density(curve: Curve, wavenumber: f64, ppw: f64) -> Result<Self> {
        let n = nodes_for_density(&curve, wavenumber, ppw);
        Self::new(curve, n)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn step(&self) -> f64 {
        TAU / self.len() as f64
    }
}

/// Smallest even node count giving `ppw` points per wavelength `2π/k` along the perimeter.
pub fn nodes_for_density(curve: &Curve, wavenumber: f64, ppw: f64) -> usize {
    let wavelengths = wavenumber * curve.perimeter() / TAU;
    let n = (ppw * wavelengths).ceil() as usize;
    let n = n + (n & 1);
    n.max(MIN_NODES)
}

/// `(∂_ν(x) + ik) G(x, y)`, i.e. `(k/2) H_0(kr) + (ik/2) H_1(kr) (x − y)·ν(x)/r`
/// (without the source arc-length factor).
pub fn combined_kernel(k: f64, x: Vec2, nx: Vec2, y: Vec2) -> Result<C64> {
    let d = x - y;
    let r = d.norm();
    let (h0, h1) = hankel1_01(k * r)?;
    Ok(h0 * (0.5 * k) + h1 * C64::new(0.0, 0.5 * k * d.dot(nx) / r))
}

/// Right-hand side `f(x) = 2ik(α·ν(x) + 1) exp(ik α·x)`.
pub fn incident_rhs(grid: &ObstacleGrid, k: f64, direction: Vec2) -> Vec<C64> {
    grid.points
        .iter()
        .zip(&grid.normals)
        .map(|(x, nu)| {
            let phase = C64::new(0.0, k * direction.dot(*x)).exp();
            phase * C64::new(0.0, 2.0 * k * (direction.dot(*nu) + 1.0))
        })
        .collect()
}

/// Weights `R_j` of the logarithmic quadrature
/// `∫ ln(4 sin²((t_i − τ)/2)) φ(τ) dτ ≈ Σ_j R_{|i−j|} φ(t_j)`.
pub fn log_weights(n: usize) -> Vec<f64> {
    let half = n / 2;
    let nf = half as f64;
    (0..n)
        .map(|d| {
            let s = TAU * d as f64 / n as f64;
            let mut acc = 0.0;
            for m in 1..half {
                acc += (m as f64 * s).cos() / m as f64;
            }
            -(TAU / nf) * acc - PI / (nf * nf) * (nf * s).cos()
        })
        .collect()
}

/// `I − D`, the discretized self-interaction operator of one obstacle.
pub fn assemble_self(grid: &ObstacleGrid, k: f64) -> Result<Matrix> {
    let n = grid.len();
    let h = grid.step();
    let r = log_weights(n);
    let mut a = Matrix::identity(n);
    for i in 0..n {
        let (x, nx) = (grid.points[i], grid.normals[i]);
        for j in 0..n {
            let sp = grid.speed[j];
            let entry = if i == j {
                let l1 = C64::new(0.0, k / TAU * sp);
                let l2 = C64::new(
                    0.5 * k * sp + grid.curvature[i] * sp / TAU,
                    0.5 * k * sp * (2.0 / PI) * (EULER_GAMMA + (0.5 * k * sp).ln()),
                );
                l1 * r[0] + l2 * h
            } else {
                let y = grid.points[j];
                let d = x - y;
                let dist = d.norm();
                let (h0, h1) = hankel1_01(k * dist)?;
                let cos_term = d.dot(nx) / dist;
                let full = (h0 * (0.5 * k) + h1 * C64::new(0.0, 0.5 * k * cos_term)) * sp;
                let l1 = C64::new(-k / TAU * h1.re * cos_term, k / TAU * h0.re) * sp;
                let dt = grid.params[i] - grid.params[j];
                let s = (0.5 * dt).sin();
                let log = (4.0 * s * s).ln();
                let l2 = full - l1 * log;
                l1 * r[(i + n - j) % n] + l2 * h
            };
            a[(i, j)] -= entry;
        }
    }
    Ok(a)
}

/// Smooth interaction block: field of a density on `source` evaluated at the
/// nodes of `target`, `(S η)_i = Σ_j (2π/n) L(x_i, y_j) |γ'(τ_j)| η_j`.
pub fn assemble_coupling(target: &ObstacleGrid, source: &ObstacleGrid, k: f64) -> Result<Matrix> {
    let h = source.step();
    let mut m = Matrix::zeros(target.len(), source.len());
    for i in 0..target.len() {
        let (x, nx) = (target.points[i], target.normals[i]);
        for j in 0..source.len() {
            m[(i, j)] = combined_kernel(k, x, nx, source.points[j])? * (h * source.speed[j]);
        }
    }
    Ok(m)
}

/// Self-interaction operator of one obstacle with its LU factors.
#[derive(Clone, Debug)]
pub struct SelfBlock {
    pub matrix: Matrix,
    lu: LuFactors,
}

impl SelfBlock {
    pub fn new(grid: &ObstacleGrid, k: f64, label: &str) -> Result<Self> {
        let matrix = assemble_self(grid, k)?;
        let lu = LuFactors::factor(matrix.clone(), label)?;
        Ok(Self { matrix, lu })
    }

    /// `(I − D)^{-1} b` with one step of iterative refinement.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        self.lu.solve_refined(&self.matrix, b, 1)
    }
}

/// Solves the single-obstacle problem for plane-wave incidence.
pub fn solve_single(grid: &ObstacleGrid, k: f64, direction: Vec2) -> Result<Vec<C64>> {
    let block = SelfBlock::new(grid, k, "single obstacle")?;
    Ok(block.solve(&incident_rhs(grid, k, direction)))
}
