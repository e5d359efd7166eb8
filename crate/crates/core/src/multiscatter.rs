//! The coupled system for several obstacles and its multiple-scattering
//! (Neumann) solution.
//!
//! With self operators `I − S_jj` and couplings `S_jj'` the coupled system
//! `(I − S) η = f` is rewritten as `(I − T) η = g` where
//! `T_jj' = (I − S_jj)⁻¹ S_jj'` (zero diagonal) and `g_j = (I − S_jj)⁻¹ f_j`.
//! The iterates `ηᵐ = T ηᵐ⁻¹`, `η⁰ = g`, account for `m` reflections between
//! obstacles and sum to `η`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cfie::{assemble_coupling, incident_rhs, nodes_for_density, ObstacleGrid, SelfBlock};
use crate::geometry::Scene;
use crate::krylov::{weighted_inner, weighted_norm};
use crate::linalg::{LuFactors, Matrix};
use crate::{Error, Result, C64};

/// Largest total unknown count accepted by [`ScatteringProblem::reference_solve`].
pub const DIRECT_SOLVE_LIMIT: usize = 12_000;

/// Densities on all obstacles, stored contiguously obstacle after obstacle.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiDensity {
    pub offsets: Vec<usize>,
    pub values: Vec<C64>,
}

impl MultiDensity {
    pub fn zeros(sizes: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        offsets.push(0);
        for s in sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        let total = *offsets.last().unwrap();
        Self { offsets, values: vec![C64::new(0.0, 0.0); total] }
    }

    pub fn from_parts(parts: &[Vec<C64>]) -> Self {
        let sizes: Vec<usize> = parts.iter().map(|p| p.len()).collect();
        let mut out = Self::zeros(&sizes);
        for (j, p) in parts.iter().enumerate() {
            out.part_mut(j).copy_from_slice(p);
        }
        out
    }

    pub fn with_values(&self, values: Vec<C64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        Self { offsets: self.offsets.clone(), values }
    }

    pub fn obstacles(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn part(&self, j: usize) -> &[C64] {
        &self.values[self.offsets[j]..self.offsets[j + 1]]
    }

    pub fn part_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.values[self.offsets[j]..self.offsets[j + 1]]
    }

    /// `self ← self + a x`.
    pub fn axpy(&mut self, a: C64, x: &MultiDensity) {
        for (y, x) in self.values.iter_mut().zip(&x.values) {
            *y += a * x;
        }
    }
}

/// Stored iterates `η⁰ … η^M` with their weighted norms.
#[derive(Clone, Debug, Default)]
pub struct IterateSequence {
    pub iterates: Vec<MultiDensity>,
    pub norms: Vec<f64>,
}

impl IterateSequence {
    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }
}

/// Discretized multiple-scattering problem with cached self-block factors.
#[derive(Clone, Debug)]
pub struct ScatteringProblem {
    pub scene: Scene,
    pub grids: Vec<ObstacleGrid>,
    pub blocks: Vec<SelfBlock>,
    /// `couplings[j][j']` maps densities on `j'` to fields on `j` (`None` on the diagonal).
    pub couplings: Vec<Vec<Option<Matrix>>>,
    /// `f_j`.
    pub rhs: Vec<Vec<C64>>,
    /// Arc-length quadrature weights of all nodes, matching [`MultiDensity`] layout.
    pub weights: Vec<f64>,
}

impl ScatteringProblem {
    /// Discretizes `scene` with `nodes[j]` points on obstacle `j`.
    pub fn new(scene: Scene, nodes: &[usize]) -> Result<Self> {
        if nodes.len() != scene.obstacles.len() {
            return Err(Error::Precondition(format!(
                "{} node counts given for {} obstacles",
                nodes.len(),
                scene.obstacles.len()
            )));
        }
        let k = scene.wavenumber;
        let grids = scene
            .obstacles
            .iter()
            .zip(nodes)
            .map(|(c, &n)| ObstacleGrid::new(c.clone(), n))
            .collect::<Result<Vec<_>>>()?;
        let blocks = grids
            .iter()
            .enumerate()
            .map(|(j, g)| SelfBlock::new(g, k, &format!("self block {j}")))
            .collect::<Result<Vec<_>>>()?;
        let mut couplings = Vec::with_capacity(grids.len());
        for (j, target) in grids.iter().enumerate() {
            let mut row = Vec::with_capacity(grids.len());
            for (jp, source) in grids.iter().enumerate() {
                row.push(if j == jp { None } else { Some(assemble_coupling(target, source, k)?) });
            }
            couplings.push(row);
        }
        let rhs = grids.iter().map(|g| incident_rhs(g, k, scene.direction)).collect();
        let weights = grids.iter().flat_map(|g| g.weights.iter().copied()).collect();
        Ok(Self { scene, grids, blocks, couplings, rhs, weights })
    }

    /// Discretizes with `ppw` points per wavelength on every obstacle.
    pub fn with_density(scene: Scene, ppw: f64) -> Result<Self> {
        let nodes: Vec<usize> =
            scene.obstacles.iter().map(|c| nodes_for_density(c, scene.wavenumber, ppw)).collect();
        Self::new(scene, &nodes)
    }

    pub fn node_counts(&self) -> Vec<usize> {
        self.grids.iter().map(|g| g.len()).collect()
    }

    pub fn unknowns(&self) -> usize {
        self.weights.len()
    }

    pub fn zeros(&self) -> MultiDensity {
        MultiDensity::zeros(&self.node_counts())
    }

    pub fn inner(&self, u: &MultiDensity, v: &MultiDensity) -> C64 {
        weighted_inner(&self.weights, &u.values, &v.values)
    }

    pub fn norm(&self, u: &MultiDensity) -> f64 {
        weighted_norm(&self.weights, &u.values)
    }

    /// `‖u − v‖ / ‖v‖` in the weighted norm.
    pub fn relative_error(&self, u: &MultiDensity, reference: &MultiDensity) -> f64 {
        let diff: Vec<C64> = u.values.iter().zip(&reference.values).map(|(a, b)| a - b).collect();
        weighted_norm(&self.weights, &diff) / self.norm(reference)
    }

    /// `g_j = (I − S_jj)⁻¹ f_j`.
    pub fn initial_iterate(&self) -> MultiDensity {
        let parts: Vec<Vec<C64>> = self.blocks.iter().zip(&self.rhs).map(|(b, f)| b.solve(f)).collect();
        MultiDensity::from_parts(&parts)
    }

    /// `(T η)_j = (I − S_jj)⁻¹ Σ_{j' ≠ j} S_jj' η_j'`.
    pub fn apply_t(&self, eta: &MultiDensity) -> MultiDensity {
        let mut out = self.zeros();
        for j in 0..self.grids.len() {
            let mut acc = vec![C64::new(0.0, 0.0); self.grids[j].len()];
            for (jp, coupling) in self.couplings[j].iter().enumerate() {
                if let Some(m) = coupling {
                    m.matvec_acc(eta.part(jp), C64::new(1.0, 0.0), &mut acc);
                }
            }
            out.part_mut(j).copy_from_slice(&self.blocks[j].solve(&acc));
        }
        out
    }

    /// `T` on the flat value layout.
    pub fn apply_t_flat(&self, values: &[C64]) -> Vec<C64> {
        let eta = self.zeros().with_values(values.to_vec());
        self.apply_t(&eta).values
    }

    /// `η⁰ … η^count` (`count` applications of `T`).
    pub fn iterates(&self, count: usize) -> IterateSequence {
        let mut seq = IterateSequence::default();
        let mut cur = self.initial_iterate();
        for m in 0..=count {
            seq.norms.push(self.norm(&cur));
            let next = if m < count { Some(self.apply_t(&cur)) } else { None };
            seq.iterates.push(cur);
            match next {
                Some(n) => cur = n,
                None => break,
            }
        }
        seq
    }

    /// `Σ_{m=0}^{M} ηᵐ` and the iterate sequence.
    pub fn neumann_sum(&self, reflections: usize) -> (MultiDensity, IterateSequence) {
        let seq = self.iterates(reflections);
        (partial_sums(&seq).pop().expect("at least one iterate"), seq)
    }

    /// The block operator `(I − S)` applied to `η`.
    pub fn apply_full(&self, eta: &MultiDensity) -> MultiDensity {
        let mut out = self.zeros();
        for j in 0..self.grids.len() {
            let mut acc = self.blocks[j].matrix.matvec(eta.part(j));
            for (jp, coupling) in self.couplings[j].iter().enumerate() {
                if let Some(m) = coupling {
                    m.matvec_acc(eta.part(jp), C64::new(-1.0, 0.0), &mut acc);
                }
            }
            out.part_mut(j).copy_from_slice(&acc);
        }
        out
    }

    /// The full right-hand side `f`.
    pub fn full_rhs(&self) -> MultiDensity {
        MultiDensity::from_parts(&self.rhs)
    }

    /// Dense direct solve of the coupled block system.
    pub fn reference_solve(&self) -> Result<MultiDensity> {
        let total = self.unknowns();
        check_direct_solve_size(total)?;
        let layout = self.zeros();
        let mut a = Matrix::zeros(total, total);
        for j in 0..self.grids.len() {
            let r0 = layout.offsets[j];
            let nj = self.grids[j].len();
            for jp in 0..self.grids.len() {
                let c0 = layout.offsets[jp];
                let njp = self.grids[jp].len();
                for i in 0..nj {
                    for l in 0..njp {
                        a[(r0 + i, c0 + l)] = match &self.couplings[j][jp] {
                            None => self.blocks[j].matrix[(i, l)],
                            Some(m) => -m[(i, l)],
                        };
                    }
                }
            }
        }
        let f = self.full_rhs();
        let lu = LuFactors::factor(a.clone(), "coupled system")?;
        Ok(layout.with_values(lu.solve_refined(&a, &f.values, 2)))
    }
}

/// Fails when `unknowns` exceeds [`DIRECT_SOLVE_LIMIT`].
pub fn check_direct_solve_size(unknowns: usize) -> Result<()> {
    if unknowns > DIRECT_SOLVE_LIMIT {
        return Err(Error::ResourceGuard { unknowns, limit: DIRECT_SOLVE_LIMIT });
    }
    Ok(())
}

/// Running sums `Σ_{m=0}^{M} ηᵐ` for `M = 0 … len − 1`.
pub fn partial_sums(seq: &IterateSequence) -> Vec<MultiDensity> {
    let mut out: Vec<MultiDensity> = Vec::with_capacity(seq.len());
    for eta in &seq.iterates {
        let next = match out.last() {
            Some(prev) => {
                let mut s = prev.clone();
                s.axpy(C64::new(1.0, 0.0), eta);
                s
            }
            None => eta.clone(),
        };
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Curve, Vec2};

    fn two_circles(dx: f64, k: f64) -> Scene {
        Scene::new(
            vec![Curve::circle(Vec2::new(0.0, 0.0), 1.0), Curve::circle(Vec2::new(dx, 0.5 * dx), 1.0)],
            Vec2::new(0.6, 0.8),
            k,
        )
        .unwrap()
    }

    #[test]
    fn single_obstacle_has_zero_iteration_operator() {
        let scene = Scene::new(vec![Curve::circle(Vec2::default(), 1.0)], Vec2::new(1.0, 0.0), 3.0).unwrap();
        let p = ScatteringProblem::new(scene, &[64]).unwrap();
        let g = p.initial_iterate();
        assert!(p.apply_t(&g).values.iter().all(|v| v.norm() == 0.0));
        let r = p.reference_solve().unwrap();
        assert!(p.relative_error(&g, &r) < 1e-13);
    }

    #[test]
    fn neumann_series_converges_to_reference() {
        let p = ScatteringProblem::new(two_circles(4.0, 3.0), &[64, 64]).unwrap();
        let reference = p.reference_solve().unwrap();
        let residual = p.apply_full(&reference);
        let f = p.full_rhs();
        assert!(p.relative_error(&residual, &f) < 1e-12);
        let (sum, seq) = p.neumann_sum(60);
        assert_eq!(seq.len(), 61);
        assert!(p.relative_error(&sum, &reference) < 1e-10);
    }

    #[test]
    fn apply_t_is_linear() {
        let p = ScatteringProblem::new(two_circles(3.0, 2.0), &[32, 32]).unwrap();
        let u = p.initial_iterate();
        let v = p.apply_t(&u);
        let (a, b) = (C64::new(0.3, -1.2), C64::new(-2.0, 0.5));
        let mut comb = p.zeros();
        comb.axpy(a, &u);
        comb.axpy(b, &v);
        let lhs = p.apply_t(&comb);
        let mut rhs = p.zeros();
        rhs.axpy(a, &p.apply_t(&u));
        rhs.axpy(b, &p.apply_t(&v));
        assert!(p.relative_error(&lhs, &rhs) < 1e-13);
    }

    #[test]
    fn reference_guard() {
        assert!(check_direct_solve_size(DIRECT_SOLVE_LIMIT).is_ok());
        assert!(matches!(
            check_direct_solve_size(DIRECT_SOLVE_LIMIT + 2),
            Err(Error::ResourceGuard { unknowns: 12_002, .. })
        ));
    }
}
