//! Convergence rate of the multiple-scattering series.
//!
//! For two convex obstacles at distance `d` with curvatures `κ₁, κ₂` at the
//! closest points, the iterates eventually satisfy `η^{m+2} ≈ R₂ ηᵐ` with
//!
//! ```text
//! R₂ = e^{2ikd} / ( √((1+dκ₁)(1+dκ₂)) · [1 + √(1 − 1/((1+dκ₁)(1+dκ₂)))] )
//! ```
//!
//! in two dimensions; the three-dimensional analogue replaces the products by
//! determinants of 2×2 curvature matrices.

use crate::geometry::{closest_pair, curvature_at, Scene};
use crate::{Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

/// Closest-point geometry of the 2-periodic orbit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitGeometry {
    pub distance: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub wavenumber: f64,
}

impl OrbitGeometry {
    pub fn from_scene(scene: &Scene) -> Result<Self> {
        let cp = closest_pair(scene)?;
        Ok(Self {
            distance: cp.distance,
            kappa1: curvature_at(&scene.obstacles[0], cp.t1),
            kappa2: curvature_at(&scene.obstacles[1], cp.t2),
            wavenumber: scene.wavenumber,
        })
    }
}

fn orbit_phase(k: f64, d: f64) -> C64 {
    C64::new(0.0, 2.0 * k * d).exp()
}

/// `R₂` for a planar configuration.
pub fn r2_2d(geom: &OrbitGeometry) -> Result<C64> {
    let d = geom.distance;
    if !(d > 0.0) {
        return Err(Error::Domain { what: "orbit distance", value: d });
    }
    if geom.kappa1 < 0.0 || geom.kappa2 < 0.0 {
        return Err(Error::Domain { what: "curvature", value: geom.kappa1.min(geom.kappa2) });
    }
    let p = (1.0 + d * geom.kappa1) * (1.0 + d * geom.kappa2);
    let denom = p.sqrt() * (1.0 + (1.0 - 1.0 / p).sqrt());
    Ok(orbit_phase(geom.wavenumber, d) / denom)
}

/// Real 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn diag(a: f64, b: f64) -> Self {
        Mat2([[a, 0.0], [0.0, b]])
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2([[c, -s], [s, c]])
    }

    pub fn det(&self) -> f64 {
        let m = self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2([[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]])
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let a = self.0;
        Mat2([[s * a[0][0], s * a[0][1]], [s * a[1][0], s * a[1][1]]])
    }

    pub fn inverse(&self) -> Result<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Domain { what: "singular 2x2 matrix determinant", value: det });
        }
        let a = self.0;
        Ok(Mat2([[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]]).scale(1.0 / det))
    }

    /// Principal square root for matrices with positive real eigenvalues:
    /// `√A = (A + sI)/t` with `s = √det A`, `t = √(tr A + 2s)`.
    pub fn sqrt(&self) -> Result<Mat2> {
        let det = self.det();
        let tr = self.trace();
        let disc = tr * tr - 4.0 * det;
        if !(det > 0.0) || !(tr > 0.0) || disc < -1e-12 * tr * tr {
            return Err(Error::Domain { what: "matrix square root outside principal branch", value: det });
        }
        let s = det.sqrt();
        let t = (tr + 2.0 * s).sqrt();
        Ok(self.add(&Mat2::IDENTITY.scale(s)).scale(1.0 / t))
    }
}

/// Closest-point geometry of two surfaces in three dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitGeometry3d {
    pub distance: f64,
    /// Principal curvature matrices at the closest points.
    pub kappa1: Mat2,
    pub kappa2: Mat2,
    /// Rotation relating the principal frames.
    pub rotation: Mat2,
    pub wavenumber: f64,
}

/// `R₂` for a three-dimensional configuration.
pub fn r2_3d(geom: &OrbitGeometry3d) -> Result<C64> {
    let d = geom.distance;
    if !(d > 0.0) {
        return Err(Error::Domain { what: "orbit distance", value: d });
    }
    let t = geom.rotation;
    let tt = Mat2([[t.0[0][0], t.0[1][0]], [t.0[0][1], t.0[1][1]]]);
    if (t.mul(&tt).add(&Mat2::IDENTITY.scale(-1.0))).0.iter().flatten().any(|v| v.abs() > 1e-12) {
        return Err(Error::Precondition("rotation matrix is not orthogonal".into()));
    }
    let a1 = Mat2::IDENTITY.add(&geom.kappa1.scale(d));
    let a2 = Mat2::IDENTITY.add(&geom.kappa2.scale(d));
    let prod_det = a1.mul(&a2).det();
    if !(prod_det > 0.0) {
        return Err(Error::Domain { what: "curvature product determinant", value: prod_det });
    }
    let m = t.mul(&a1).mul(&t.inverse()?).mul(&a2);
    let inner = Mat2::IDENTITY.add(&m.inverse()?.scale(-1.0));
    let bracket = Mat2::IDENTITY.add(&inner.sqrt()?).det();
    Ok(orbit_phase(geom.wavenumber, d) / (prod_det.sqrt() * bracket))
}

/// Number of reflections for the Neumann series to gain `tol`, `2 ln(tol) / ln|R₂|`.
pub fn predicted_reflections(r2_modulus: f64, tol: f64) -> f64 {
    2.0 * tol.ln() / r2_modulus.ln()
}

/// Rate fitted from an iterate sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmpiricalRate {
    /// Geometric mean of `‖η^{m+2}‖ / ‖ηᵐ‖` over the window.
    pub modulus: f64,
    /// Weighted least-squares `ℛ` in `η^{m+2} ≈ ℛ ηᵐ`.
    pub ratio: C64,
}

/// Two-step rate of `iterates` over `m ∈ [m_lo, m_hi]` in the inner product with weights `w`.
pub fn empirical_rate<V: AsRef<[C64]>>(
    iterates: &[V],
    weights: &[f64],
    m_lo: usize,
    m_hi: usize,
) -> Result<EmpiricalRate> {
    if m_hi < m_lo + 4 {
        return Err(Error::Precondition(alloc::format!("rate window [{m_lo}, {m_hi}] shorter than 4")));
    }
    if iterates.len() < m_hi + 3 {
        return Err(Error::Precondition(alloc::format!(
            "rate window up to {m_hi} needs {} iterates, have {}",
            m_hi + 3,
            iterates.len()
        )));
    }
    let inner = |u: &[C64], v: &[C64]| -> C64 {
        weights.iter().zip(u).zip(v).map(|((w, a), b)| a * b.conj() * *w).sum()
    };
    let mut log_sum = 0.0;
    let mut num = C64::new(0.0, 0.0);
    let mut den = 0.0;
    for m in m_lo..=m_hi {
        let (a, b) = (iterates[m].as_ref(), iterates[m + 2].as_ref());
        let na = inner(a, a).re;
        let nb = inner(b, b).re;
        if !(na > 0.0) || !(nb > 0.0) {
            return Err(Error::Domain { what: "vanishing iterate norm at index", value: m as f64 });
        }
        log_sum += 0.5 * (nb / na).ln();
        let w = 1.0 / na;
        num += inner(b, a) * w;
        den += na * w;
    }
    let count = (m_hi - m_lo + 1) as f64;
    Ok(EmpiricalRate { modulus: (log_sum / count).exp(), ratio: num / den })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Curve, Vec2};
    use alloc::vec;
    use alloc::vec::Vec;

    fn geom(d: f64, k1: f64, k2: f64) -> OrbitGeometry {
        OrbitGeometry { distance: d, kappa1: k1, kappa2: k2, wavenumber: 3.0 }
    }

    #[test]
    fn unit_curvatures_at_unit_distance() {
        let r = r2_2d(&geom(1.0, 1.0, 1.0)).unwrap();
        assert!((r.norm() - 1.0 / (2.0 + 3f64.sqrt())).abs() < 1e-15);
        assert!((r.norm() - 0.267949).abs() < 1e-6);
    }

    #[test]
    fn modulus_limits() {
        assert!((r2_2d(&geom(1e-12, 1.0, 2.0)).unwrap().norm() - 1.0).abs() < 1e-5);
        let ratio = r2_2d(&geom(100.0, 1.0, 1.0)).unwrap().norm() / r2_2d(&geom(200.0, 1.0, 1.0)).unwrap().norm();
        assert!((ratio - 2.0).abs() < 0.04);
        assert!(r2_2d(&geom(0.0, 1.0, 1.0)).is_err());
        let mut prev = 1.0;
        for i in 1..100 {
            let m = r2_2d(&geom(0.05 * i as f64, 0.7, 0.2)).unwrap().norm();
            assert!(m < prev && m < 1.0);
            prev = m;
        }
    }

    #[test]
    fn paper_circles_rate() {
        let scene = Scene::new(
            vec![Curve::circle(Vec2::new(0.0, 0.0), 1.0), Curve::circle(Vec2::new(0.9625, -2.6444), 1.5)],
            Vec2::new(1.0, 0.0),
            200.0,
        )
        .unwrap();
        let g = OrbitGeometry::from_scene(&scene).unwrap();
        assert!((g.kappa1 - 1.0).abs() < 1e-12 && (g.kappa2 - 2.0 / 3.0).abs() < 1e-12);
        let r = r2_2d(&g).unwrap().norm();
        let n = predicted_reflections(r, 1e-12);
        assert!((n - 77.0).abs() < 0.25 * 77.0, "{n}");
    }

    #[test]
    fn spheres_reduce_to_squared_bracket() {
        let g = OrbitGeometry3d {
            distance: 1.0,
            kappa1: Mat2::IDENTITY,
            kappa2: Mat2::IDENTITY,
            rotation: Mat2::IDENTITY,
            wavenumber: 2.0,
        };
        let r = r2_3d(&g).unwrap();
        let want = 1.0 / (4.0 * (1.0 + 3f64.sqrt() / 2.0).powi(2));
        assert!((r.norm() - want).abs() < 1e-14);
        assert!((r.arg() - C64::new(0.0, 4.0).exp().arg()).abs() < 1e-12);
    }

    #[test]
    fn diagonal_3d_factorizes() {
        let d = 0.7;
        let (a, b, c, e) = (0.5, 2.0, 1.0, 0.3);
        let g = OrbitGeometry3d {
            distance: d,
            kappa1: Mat2::diag(a, b),
            kappa2: Mat2::diag(c, e),
            rotation: Mat2::IDENTITY,
            wavenumber: 1.0,
        };
        let r = r2_3d(&g).unwrap().norm();
        let x = r2_2d(&OrbitGeometry { distance: d, kappa1: a, kappa2: c, wavenumber: 1.0 }).unwrap().norm();
        let y = r2_2d(&OrbitGeometry { distance: d, kappa1: b, kappa2: e, wavenumber: 1.0 }).unwrap().norm();
        assert!((r - x * y).abs() < 1e-14);
        let rotated = OrbitGeometry3d { rotation: Mat2::rotation(0.4), ..g };
        let rr = r2_3d(&rotated).unwrap().norm();
        assert!(rr > 0.0 && rr < 1.0);
        assert!(r2_3d(&OrbitGeometry3d { distance: 1e-12, ..rotated }).unwrap().norm() > 0.99999);
    }

    #[test]
    fn matrix_sqrt_squares_back() {
        let m = Mat2([[2.0, 0.5], [0.3, 1.0]]);
        let s = m.sqrt().unwrap();
        let back = s.mul(&s);
        for i in 0..2 {
            for j in 0..2 {
                assert!((back.0[i][j] - m.0[i][j]).abs() < 1e-14);
            }
        }
        assert!(Mat2::diag(-1.0, 2.0).sqrt().is_err());
    }

    #[test]
    fn geometric_sequence_gives_two_step_ratio() {
        let z = C64::new(0.3, 0.2);
        let v = [C64::new(1.0, -0.5), C64::new(0.2, 2.0), C64::new(-1.0, 0.0)];
        let w = vec![0.5, 1.0, 2.0];
        let mut iterates: Vec<Vec<C64>> = Vec::new();
        let mut zm = C64::new(1.0, 0.0);
        for _ in 0..30 {
            iterates.push(v.iter().map(|x| x * zm).collect());
            zm *= z;
        }
        let fit = empirical_rate(&iterates, &w, 5, 20).unwrap();
        assert!((fit.ratio - z * z).norm() < 1e-12);
        assert!((fit.modulus - z.norm_sqr()).abs() < 1e-12);
        assert!(empirical_rate(&iterates, &w, 5, 8).is_err());
        assert!(empirical_rate(&iterates, &w, 20, 28).is_err());
    }
}
