//! ORTHODIR for operator equations `A μ = g` with `A = I − T`.
//!
//! Three ways of producing the search directions are provided:
//!
//! * [`orthodir`]: the textbook iteration applying `A` directly, generic over a
//!   [`KrylovSpace`];
//! * [`IterateOrthodir`] with [`Directions::Stable`]: every direction is kept as
//!   explicit coefficients `p⁽ʲ⁾ = Σ γ_ij ηⁱ` over the stored iterates
//!   `ηⁱ = Tⁱ g`, updated by identification;
//! * [`IterateOrthodir`] with [`Directions::Binomial`]: directions expanded over
//!   `(I − T)ⁿ g = Σ_ℓ C(n, ℓ)(−1)^ℓ η^ℓ`, which cancels catastrophically when
//!   `T` has eigenvalues near 1.
//!
//! [`pade_accelerate`] is the componentwise Wynn epsilon algorithm.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Vector space with an inner product and a linear operator `A`.
pub trait KrylovSpace {
    type Vector: Clone;

    fn apply(&mut self, v: &Self::Vector) -> Result<Self::Vector>;

    /// `⟨u, v⟩`, linear in `u`, conjugate-linear in `v`.
    fn inner(&self, u: &Self::Vector, v: &Self::Vector) -> C64;

    /// `y ← y + a x`.
    fn axpy(&self, y: &mut Self::Vector, a: C64, x: &Self::Vector);

    fn zero_like(&self, v: &Self::Vector) -> Self::Vector;

    fn norm(&self, v: &Self::Vector) -> f64 {
        self.inner(v, v).re.max(0.0).sqrt()
    }
}

/// Weighted inner product `⟨u, v⟩ = Σ w_i u_i conj(v_i)`.
pub fn weighted_inner(w: &[f64], u: &[C64], v: &[C64]) -> C64 {
    w.iter().zip(u).zip(v).map(|((w, a), b)| a * b.conj() * *w).sum()
}

pub fn weighted_norm(w: &[f64], u: &[C64]) -> f64 {
    w.iter().zip(u).map(|(w, a)| w * a.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy_slice(y: &mut [C64], a: C64, x: &[C64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}

/// `C^n` with a weighted inner product and an operator given by a closure.
pub struct WeightedSpace<'w, F> {
    pub weights: &'w [f64],
    pub op: F,
}

impl<'w, F> KrylovSpace for WeightedSpace<'w, F>
where
    F: FnMut(&[C64]) -> Result<Vec<C64>>,
{
    type Vector = Vec<C64>;

    fn apply(&mut self, v: &Vec<C64>) -> Result<Vec<C64>> {
        (self.op)(v)
    }

    fn inner(&self, u: &Vec<C64>, v: &Vec<C64>) -> C64 {
        weighted_inner(self.weights, u, v)
    }

    fn axpy(&self, y: &mut Vec<C64>, a: C64, x: &Vec<C64>) {
        axpy_slice(y, a, x);
    }

    fn zero_like(&self, v: &Vec<C64>) -> Vec<C64> {
        vec![ZERO; v.len()]
    }
}

/// One completed ORTHODIR step `j`, i.e. the update to `μ⁽ʲ⁺¹⁾`.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub j: usize,
    pub alpha: C64,
    /// `‖r⁽ʲ⁺¹⁾‖ / ‖g‖`.
    pub relative_residual: f64,
}

/// Outcome of an ORTHODIR run.
#[derive(Clone, Debug)]
pub struct OrthodirResult<V> {
    pub solution: V,
    pub steps: Vec<StepRecord>,
    pub converged: bool,
}

/// Classical ORTHODIR from `μ⁽⁰⁾ = 0`. `observe(j, μ⁽ʲ⁺¹⁾)` is called after each
/// step; returning `true` stops the iteration early.
pub fn orthodir<S: KrylovSpace>(
    space: &mut S,
    g: &S::Vector,
    tol: f64,
    max_iter: usize,
    mut observe: impl FnMut(usize, &S::Vector) -> bool,
) -> Result<OrthodirResult<S::Vector>> {
    let g_norm = space.norm(g);
    let mut mu = space.zero_like(g);
    let mut steps = Vec::new();
    if g_norm == 0.0 {
        return Ok(OrthodirResult { solution: mu, steps, converged: true });
    }
    let mut r = g.clone();
    let mut p: Vec<S::Vector> = vec![g.clone()];
    let mut ap: Vec<S::Vector> = vec![space.apply(g)?];
    let mut ap_sq: Vec<f64> = Vec::new();
    for j in 0..max_iter {
        let denom = space.inner(&ap[j], &ap[j]).re;
        if !(denom > 0.0) {
            return Err(Error::Breakdown { iteration: j });
        }
        ap_sq.push(denom);
        let alpha = space.inner(&r, &ap[j]) / denom;
        space.axpy(&mut mu, alpha, &p[j]);
        space.axpy(&mut r, -alpha, &ap[j]);
        let rel = space.norm(&r) / g_norm;
        steps.push(StepRecord { j, alpha, relative_residual: rel });
        let stop = observe(j, &mu);
        if rel < tol {
            return Ok(OrthodirResult { solution: mu, steps, converged: true });
        }
        if stop || j + 1 == max_iter {
            break;
        }
        let a2p = space.apply(&ap[j])?;
        let mut next_p = ap[j].clone();
        let mut next_ap = a2p.clone();
        for i in 0..=j {
            let beta = -space.inner(&a2p, &ap[i]) / ap_sq[i];
            space.axpy(&mut next_p, beta, &p[i]);
            space.axpy(&mut next_ap, beta, &ap[i]);
        }
        p.push(next_p);
        ap.push(next_ap);
    }
    Ok(OrthodirResult { solution: mu, steps, converged: false })
}

/// `(I − T)ⁿ g = Σ_ℓ C(n, ℓ)(−1)^ℓ η^ℓ` from stored iterates `η^ℓ = T^ℓ g`.
pub fn binomial_power(iterates: &[Vec<C64>], n: usize) -> Result<Vec<C64>> {
    if iterates.len() <= n {
        return Err(Error::Precondition(alloc::format!(
            "binomial power {n} needs iterates up to η^{n}, have {}",
            iterates.len()
        )));
    }
    let mut out = vec![ZERO; iterates[0].len()];
    let mut c = 1.0f64;
    for l in 0..=n {
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        axpy_slice(&mut out, C64::new(sign * c, 0.0), &iterates[l]);
        c = c * (n - l) as f64 / (l + 1) as f64;
    }
    Ok(out)
}

/// How directions are expanded over the stored iterates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Directions {
    /// `p⁽ʲ⁾ = Σ_i γ_ij ηⁱ`.
    Stable,
    /// `p⁽ʲ⁾ = Σ_n c_nj (I − T)ⁿ g` with binomially expanded powers.
    Binomial,
}

/// ORTHODIR for `(I − T) μ = g` that only ever applies `T` to produce the next
/// iterate `η^{m+1} = T η^m`; one application per step.
pub struct IterateOrthodir<'w, F> {
    weights: &'w [f64],
    next_iterate: F,
    mode: Directions,
    /// `η⁰ … η^m`.
    pub iterates: Vec<Vec<C64>>,
    /// Binomial powers `(I − T)ⁿ g`, cached as they become available.
    powers: Vec<Vec<C64>>,
    /// Column `j` holds the expansion coefficients of `p⁽ʲ⁾`
    /// (over iterates for the stable mode, over powers for the binomial mode).
    pub coefficients: Vec<Vec<C64>>,
    /// `β_ij` stored by column `j`.
    pub betas: Vec<Vec<C64>>,
    pub alphas: Vec<C64>,
    p: Vec<Vec<C64>>,
    ap: Vec<Vec<C64>>,
    ap_sq: Vec<f64>,
    mu: Vec<C64>,
    r: Vec<C64>,
    g_norm: f64,
}

impl<'w, F> IterateOrthodir<'w, F>
where
    F: FnMut(&[C64]) -> Result<Vec<C64>>,
{
    pub fn new(g: Vec<C64>, weights: &'w [f64], next_iterate: F, mode: Directions) -> Self {
        let g_norm = weighted_norm(weights, &g);
        let n = g.len();
        Self {
            weights,
            next_iterate,
            mode,
            iterates: vec![g.clone()],
            powers: Vec::new(),
            coefficients: vec![vec![C64::new(1.0, 0.0)]],
            betas: Vec::new(),
            alphas: Vec::new(),
            p: Vec::new(),
            ap: Vec::new(),
            ap_sq: Vec::new(),
            mu: vec![ZERO; n],
            r: g,
            g_norm,
        }
    }

    /// Number of applications of `T` performed so far.
    pub fn applications(&self) -> usize {
        self.iterates.len() - 1
    }

    pub fn solution(&self) -> &[C64] {
        &self.mu
    }

    pub fn direction(&self, j: usize) -> &[C64] {
        &self.p[j]
    }

    pub fn relative_residual(&self) -> f64 {
        weighted_norm(self.weights, &self.r) / self.g_norm
    }

    fn ensure_iterates(&mut self, upto: usize) -> Result<()> {
        while self.iterates.len() <= upto {
            let next = (self.next_iterate)(self.iterates.last().expect("iterates start with g"))?;
            self.iterates.push(next);
        }
        if self.mode == Directions::Binomial {
            while self.powers.len() <= upto {
                let n = self.powers.len();
                self.powers.push(binomial_power(&self.iterates, n)?);
            }
        }
        Ok(())
    }

    /// `Aˢ p⁽ʲ⁾` assembled from the expansion coefficients, `s ∈ {0, 1, 2}`.
    fn assemble(&self, coeffs: &[C64], shift: usize) -> Vec<C64> {
        let mut out = vec![ZERO; self.iterates[0].len()];
        match self.mode {
            Directions::Stable => {
                // (I − T)ˢ ηⁱ = Σ_q C(s, q)(−1)^q η^{i+q}
                let row: &[f64] = match shift {
                    0 => &[1.0],
                    1 => &[1.0, -1.0],
                    _ => &[1.0, -2.0, 1.0],
                };
                for (i, &c) in coeffs.iter().enumerate() {
                    if c == ZERO {
                        continue;
                    }
                    for (q, &b) in row.iter().enumerate() {
                        axpy_slice(&mut out, c * b, &self.iterates[i + q]);
                    }
                }
            }
            Directions::Binomial => {
                for (n, &c) in coeffs.iter().enumerate() {
                    if c != ZERO {
                        axpy_slice(&mut out, c, &self.powers[n + shift]);
                    }
                }
            }
        }
        out
    }

    /// Performs step `j` (producing `μ⁽ʲ⁺¹⁾`) and prepares `p⁽ʲ⁺¹⁾`.
    pub fn step(&mut self) -> Result<StepRecord> {
        let j = self.alphas.len();
        self.ensure_iterates(j + 1)?;
        if self.p.len() == j {
            let c = self.coefficients[j].clone();
            self.p.push(self.assemble(&c, 0));
            self.ap.push(self.assemble(&c, 1));
        }
        let denom = weighted_inner(self.weights, &self.ap[j], &self.ap[j]).re;
        if !(denom > 0.0) {
            return Err(Error::Breakdown { iteration: j });
        }
        self.ap_sq.push(denom);
        let alpha = weighted_inner(self.weights, &self.r, &self.ap[j]) / denom;
        axpy_slice(&mut self.mu, alpha, &self.p[j]);
        axpy_slice(&mut self.r, -alpha, &self.ap[j]);
        self.alphas.push(alpha);
        Ok(StepRecord { j, alpha, relative_residual: self.relative_residual() })
    }

    /// Computes `β_ij` and the coefficients of `p⁽ʲ⁺¹⁾`; needs `η^{j+2}`.
    pub fn next_direction(&mut self) -> Result<()> {
        let j = self.alphas.len() - 1;
        self.ensure_iterates(j + 2)?;
        let cj = self.coefficients[j].clone();
        let a2p = self.assemble(&cj, 2);
        let betas: Vec<C64> = (0..=j)
            .map(|i| -weighted_inner(self.weights, &a2p, &self.ap[i]) / self.ap_sq[i])
            .collect();
        // A p⁽ʲ⁾ shifts the expansion by one index: for iterates
        // γ_{i,j+1} = γ_ij − γ_{i−1,j} + Σ_ℓ β_ℓj γ_iℓ, for powers c_{n,j+1} = c_{n−1,j} + Σ_ℓ β_ℓj c_nℓ.
        let mut next = vec![ZERO; j + 2];
        for (i, &c) in cj.iter().enumerate() {
            match self.mode {
                Directions::Stable => {
                    next[i] += c;
                    next[i + 1] -= c;
                }
                Directions::Binomial => next[i + 1] += c,
            }
        }
        for (l, &b) in betas.iter().enumerate() {
            for (i, &c) in self.coefficients[l].iter().enumerate() {
                next[i] += b * c;
            }
        }
        self.betas.push(betas);
        self.coefficients.push(next.clone());
        self.p.push(self.assemble(&next, 0));
        self.ap.push(self.assemble(&next, 1));
        Ok(())
    }

    /// Runs until the residual drops below `tol` or `max_iter` steps were taken.
    /// `observe(j, μ⁽ʲ⁺¹⁾, applications)` may stop the run by returning `true`.
    pub fn run(
        &mut self,
        tol: f64,
        max_iter: usize,
        mut observe: impl FnMut(usize, &[C64], usize) -> bool,
    ) -> Result<Vec<StepRecord>> {
        let mut steps = Vec::new();
        if self.g_norm == 0.0 {
            return Ok(steps);
        }
        for j in 0..max_iter {
            let rec = self.step()?;
            let rel = rec.relative_residual;
            steps.push(rec);
            if observe(j, &self.mu, self.applications()) || rel < tol || j + 1 == max_iter {
                break;
            }
            self.next_direction()?;
        }
        Ok(steps)
    }
}

/// Result of componentwise epsilon extrapolation.
#[derive(Clone, Debug)]
pub struct PadeResult {
    pub values: Vec<C64>,
    /// Components where a vanishing table difference froze the extrapolation.
    pub frozen: usize,
}

/// Wynn's epsilon algorithm on each component of the partial sums
/// `S_0 … S_{L−1}`; returns `ε_{2r}^{(L−1−2r)}` for `r = order`.
pub fn pade_accelerate(partial_sums: &[Vec<C64>], order: usize) -> Result<PadeResult> {
    let len = partial_sums.len();
    if len < 2 * order + 1 {
        return Err(Error::Precondition(alloc::format!(
            "epsilon extrapolation of order {order} needs {} partial sums, got {len}",
            2 * order + 1
        )));
    }
    let dim = partial_sums[0].len();
    let mut values = Vec::with_capacity(dim);
    let mut frozen = 0;
    let mut prev = vec![ZERO; len + 1];
    let mut cur = vec![ZERO; len];
    let mut next = vec![ZERO; len];
    for c in 0..dim {
        // prev = column −1 (zeros), cur = column 0.
        for x in prev.iter_mut() {
            *x = ZERO;
        }
        for (n, s) in partial_sums.iter().enumerate() {
            cur[n] = s[c];
        }
        let mut best = cur[len - 1];
        let mut rows = len;
        let mut ok = true;
        for col in 1..=2 * order {
            for n in 0..rows - 1 {
                let diff = cur[n + 1] - cur[n];
                let scale = cur[n + 1].norm().max(cur[n].norm());
                if diff.norm() <= 1e-15 * scale || diff == ZERO {
                    ok = false;
                    break;
                }
                next[n] = prev[n + 1] + diff.inv();
            }
            if !ok {
                break;
            }
            rows -= 1;
            core::mem::swap(&mut prev, &mut cur);
            core::mem::swap(&mut cur, &mut next);
            if col % 2 == 0 {
                best = cur[rows - 1];
            }
        }
        if !ok {
            frozen += 1;
        }
        values.push(best);
    }
    Ok(PadeResult { values, frozen })
}
