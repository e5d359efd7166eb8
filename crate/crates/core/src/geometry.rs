//! Smooth closed boundary curves and scenes of disjoint obstacles.
//!
//! Every curve is parametrized counterclockwise over `t ∈ [0, 2π)`, so the
//! exterior normal is the tangent rotated clockwise and the signed curvature
//! of a convex obstacle is positive. Derivatives are analytic.

use alloc::format;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::math::{wrap_angle, TAU};
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sqr(self) -> f64 {
        self.dot(self)
    }

    pub fn normalized(self) -> Vec2 {
        self * (1.0 / self.norm())
    }

    /// Rotation by -90°; for a counterclockwise tangent this is the exterior normal.
    pub fn rot_cw(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    /// Rotation by +90°.
    pub fn rot_ccw(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// Mirror image of a direction about the line with unit normal `n`.
    pub fn reflect(self, n: Vec2) -> Vec2 {
        self - n * (2.0 * self.dot(n))
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Position and the first two parameter derivatives at one curve point.
#[derive(Clone, Copy, Debug)]
pub struct CurvePoint {
    pub pos: Vec2,
    pub d1: Vec2,
    pub d2: Vec2,
}

impl CurvePoint {
    /// Arc-length element `|γ'(t)|`.
    pub fn speed(&self) -> f64 {
        self.d1.norm()
    }

    pub fn tangent(&self) -> Vec2 {
        self.d1.normalized()
    }

    pub fn normal(&self) -> Vec2 {
        self.d1.rot_cw().normalized()
    }

    pub fn curvature(&self) -> f64 {
        self.d1.cross(self.d2) / self.d1.norm().powi(3)
    }
}

/// Trigonometric-polynomial curve
/// `γ(t) = c + Σ_{m≥1} (a_m cos mt + b_m sin mt)` per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCurve {
    pub center: Vec2,
    /// `(a_m, b_m)` pairs of the x-coordinate, starting at `m = 1`.
    pub x_coeffs: Vec<(f64, f64)>,
    /// `(a_m, b_m)` pairs of the y-coordinate, starting at `m = 1`.
    pub y_coeffs: Vec<(f64, f64)>,
}

/// A smooth closed boundary curve.
#[derive(Clone, Debug, PartialEq)]
pub enum Curve {
    Circle {
        center: Vec2,
        radius: f64,
    },
    /// Ellipse with semi-axes along the rotated x and y directions.
    Ellipse {
        center: Vec2,
        semi_x: f64,
        semi_y: f64,
        rotation: f64,
    },
    Fourier(FourierCurve),
}

impl Curve {
    pub fn circle(center: Vec2, radius: f64) -> Self {
        Curve::Circle { center, radius }
    }

    pub fn ellipse(center: Vec2, semi_x: f64, semi_y: f64) -> Self {
        Curve::Ellipse { center, semi_x, semi_y, rotation: 0.0 }
    }

    pub fn eval(&self, t: f64) -> CurvePoint {
        match self {
            Curve::Circle { center, radius } => {
                let (s, c) = t.sin_cos();
                CurvePoint {
                    pos: *center + Vec2::new(c, s) * *radius,
                    d1: Vec2::new(-s, c) * *radius,
                    d2: Vec2::new(-c, -s) * *radius,
                }
            }
            Curve::Ellipse { center, semi_x, semi_y, rotation } => {
                let (s, c) = t.sin_cos();
                let (rs, rc) = rotation.sin_cos();
                let rot = |v: Vec2| Vec2::new(rc * v.x - rs * v.y, rs * v.x + rc * v.y);
                CurvePoint {
                    pos: *center + rot(Vec2::new(semi_x * c, semi_y * s)),
                    d1: rot(Vec2::new(-semi_x * s, semi_y * c)),
                    d2: rot(Vec2::new(-semi_x * c, -semi_y * s)),
                }
            }
            Curve::Fourier(fc) => {
                let mut p = CurvePoint { pos: fc.center, d1: Vec2::default(), d2: Vec2::default() };
                let terms = fc.x_coeffs.len().max(fc.y_coeffs.len());
                for m in 1..=terms {
                    let mf = m as f64;
                    let (s, c) = (mf * t).sin_cos();
                    let (ax, bx) = fc.x_coeffs.get(m - 1).copied().unwrap_or((0.0, 0.0));
                    let (ay, by) = fc.y_coeffs.get(m - 1).copied().unwrap_or((0.0, 0.0));
                    p.pos += Vec2::new(ax * c + bx * s, ay * c + by * s);
                    p.d1 += Vec2::new(-ax * s + bx * c, -ay * s + by * c) * mf;
                    p.d2 += Vec2::new(-ax * c - bx * s, -ay * c - by * s) * (mf * mf);
                }
                p
            }
        }
    }

    pub fn position(&self, t: f64) -> Vec2 {
        self.eval(t).pos
    }

    pub fn normal(&self, t: f64) -> Vec2 {
        self.eval(t).normal()
    }

    pub fn centroid_hint(&self) -> Vec2 {
        match self {
            Curve::Circle { center, .. } | Curve::Ellipse { center, .. } => *center,
            Curve::Fourier(fc) => fc.center,
        }
    }

    /// Arc length by the trapezoid rule (spectrally accurate for smooth periodic curves).
    pub fn perimeter(&self) -> f64 {
        let n = 1024;
        let h = TAU / n as f64;
        (0..n).map(|i| self.eval(i as f64 * h).speed()).sum::<f64>() * h
    }

    /// Signed enclosed area; positive for counterclockwise curves.
    pub fn signed_area(&self) -> f64 {
        let n = 1024;
        let h = TAU / n as f64;
        0.5 * (0..n)
            .map(|i| {
                let p = self.eval(i as f64 * h);
                p.pos.cross(p.d1)
            })
            .sum::<f64>()
            * h
    }

    /// Checks orientation, regularity and strict convexity on a sample of 1024 points.
    pub fn is_convex(&self) -> bool {
        if self.signed_area() <= 0.0 {
            return false;
        }
        let n = 1024;
        (0..n).all(|i| {
            let p = self.eval(TAU * i as f64 / n as f64);
            p.speed() > 0.0 && p.curvature() > 0.0
        })
    }

    /// Whether `p` lies strictly inside a convex curve.
    pub fn contains(&self, p: Vec2) -> bool {
        let n = 512;
        (0..n).all(|i| {
            let c = self.eval(TAU * i as f64 / n as f64);
            (p - c.pos).dot(c.normal()) < 0.0
        })
    }

    /// Support function `max_t dir·γ(t)` sampled densely and refined.
    pub fn support(&self, dir: Vec2) -> f64 {
        let n = 512;
        let (mut best_t, mut best) = (0.0, f64::NEG_INFINITY);
        for i in 0..n {
            let t = TAU * i as f64 / n as f64;
            let v = dir.dot(self.position(t));
            if v > best {
                best = v;
                best_t = t;
            }
        }
        // Newton on d/dt (dir·γ) = 0.
        let mut t = best_t;
        for _ in 0..30 {
            let p = self.eval(t);
            let g = dir.dot(p.d1);
            let h = dir.dot(p.d2);
            if h >= 0.0 {
                break;
            }
            let step = g / h;
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        best.max(dir.dot(self.position(t)))
    }
}

/// Signed curvature at parameter `t` (positive for convex counterclockwise curves).
pub fn curvature_at(curve: &Curve, t: f64) -> f64 {
    curve.eval(t).curvature()
}

/// An ordered set of obstacles lit by the plane wave `exp(ik α·x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub obstacles: Vec<Curve>,
    pub direction: Vec2,
    pub wavenumber: f64,
}

impl Scene {
    pub fn new(obstacles: Vec<Curve>, direction: Vec2, wavenumber: f64) -> Result<Self> {
        if obstacles.is_empty() {
            return Err(Error::Precondition("scene needs at least one obstacle".into()));
        }
        if (direction.norm() - 1.0).abs() > 1e-14 {
            return Err(Error::Precondition(format!(
                "incidence direction must be a unit vector, |α| = {}",
                direction.norm()
            )));
        }
        if !(wavenumber > 0.0) {
            return Err(Error::Domain { what: "wavenumber", value: wavenumber });
        }
        for (i, c) in obstacles.iter().enumerate() {
            if c.signed_area() <= 0.0 {
                return Err(Error::Geometry(format!("obstacle {i} is not counterclockwise")));
            }
        }
        for i in 0..obstacles.len() {
            for j in i + 1..obstacles.len() {
                if min_distance_scan(&obstacles[i], &obstacles[j]) <= 0.0
                    || obstacles[i].contains(obstacles[j].position(0.0))
                    || obstacles[j].contains(obstacles[i].position(0.0))
                {
                    return Err(Error::Geometry(format!("obstacles {i} and {j} overlap")));
                }
            }
        }
        Ok(Self { obstacles, direction, wavenumber })
    }

    /// No-occlusion check: some line with direction α separates the two obstacles,
    /// i.e. their projections onto α⊥ are disjoint.
    pub fn no_occlusion(&self) -> bool {
        if self.obstacles.len() != 2 {
            return self.obstacles.len() == 1;
        }
        let perp = self.direction.rot_ccw();
        let (a, b) = (&self.obstacles[0], &self.obstacles[1]);
        let (a_hi, a_lo) = (a.support(perp), -a.support(-perp));
        let (b_hi, b_lo) = (b.support(perp), -b.support(-perp));
        a_hi < b_lo || b_hi < a_lo
    }
}

fn min_distance_scan(a: &Curve, b: &Curve) -> f64 {
    let n = 256;
    let pa: Vec<Vec2> = (0..n).map(|i| a.position(TAU * i as f64 / n as f64)).collect();
    let pb: Vec<Vec2> = (0..n).map(|i| b.position(TAU * i as f64 / n as f64)).collect();
    // Crossing test: any sample of b inside a (or vice versa) means overlap.
    if pb.iter().any(|&p| a.contains(p)) || pa.iter().any(|&p| b.contains(p)) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for p in &pa {
        for q in &pb {
            best = best.min((*p - *q).norm());
        }
    }
    best
}

/// Closest points `a₁ ∈ ∂Ω₁`, `a₂ ∈ ∂Ω₂` and their distance `d`.
#[derive(Clone, Copy, Debug)]
pub struct ClosestPair {
    pub t1: f64,
    pub t2: f64,
    pub a1: Vec2,
    pub a2: Vec2,
    pub distance: f64,
}

/// Minimizes `|γ₁(s) − γ₂(t)|` by damped Newton from the best of a 64×64 parameter scan.
pub fn closest_pair(scene: &Scene) -> Result<ClosestPair> {
    if scene.obstacles.len() != 2 {
        return Err(Error::Precondition(format!(
            "closest_pair needs exactly two obstacles, got {}",
            scene.obstacles.len()
        )));
    }
    closest_pair_curves(&scene.obstacles[0], &scene.obstacles[1])
}

pub fn closest_pair_curves(c1: &Curve, c2: &Curve) -> Result<ClosestPair> {
    if !c1.is_convex() || !c2.is_convex() {
        return Err(Error::Geometry("closest_pair requires convex obstacles".into()));
    }
    if min_distance_scan(c1, c2) <= 0.0 {
        return Err(Error::Precondition("obstacles overlap".into()));
    }
    let grid = 64;
    let (mut s, mut t, mut best) = (0.0, 0.0, f64::INFINITY);
    for i in 0..grid {
        let si = TAU * i as f64 / grid as f64;
        let p = c1.position(si);
        for j in 0..grid {
            let tj = TAU * j as f64 / grid as f64;
            let d = (p - c2.position(tj)).norm_sqr();
            if d < best {
                best = d;
                s = si;
                t = tj;
            }
        }
    }
    let objective = |s: f64, t: f64| 0.5 * (c1.position(s) - c2.position(t)).norm_sqr();
    let gradient = |s: f64, t: f64| {
        let (p, q) = (c1.eval(s), c2.eval(t));
        let r = p.pos - q.pos;
        r.dot(p.d1).hypot(r.dot(q.d1))
    };
    let mut converged = false;
    for _ in 0..100 {
        let p = c1.eval(s);
        let q = c2.eval(t);
        let r = p.pos - q.pos;
        let gs = r.dot(p.d1);
        let gt = -r.dot(q.d1);
        let scale = r.norm() * (p.speed() + q.speed()) + f64::MIN_POSITIVE;
        if gs.hypot(gt) <= 4.0 * f64::EPSILON * scale {
            converged = true;
            break;
        }
        let hss = p.d1.norm_sqr() + r.dot(p.d2);
        let htt = q.d1.norm_sqr() - r.dot(q.d2);
        let hst = -p.d1.dot(q.d1);
        let det = hss * htt - hst * hst;
        let (mut ds, mut dt) = if det > 0.0 && hss > 0.0 {
            (-(htt * gs - hst * gt) / det, -(hss * gt - hst * gs) / det)
        } else {
            (-gs / p.d1.norm_sqr(), -gt / q.d1.norm_sqr())
        };
        let f0 = objective(s, t);
        let g0 = gs.hypot(gt);
        let mut lambda = 1.0;
        loop {
            let (s1, t1) = (s + lambda * ds, t + lambda * dt);
            // Near the minimum the objective is flat to rounding; the gradient still decides.
            if objective(s1, t1) < f0 || gradient(s1, t1) < g0 || lambda < 1e-6 {
                break;
            }
            lambda *= 0.5;
        }
        ds *= lambda;
        dt *= lambda;
        s += ds;
        t += dt;
        if ds.abs() + dt.abs() < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged { what: "closest_pair Newton".into(), iterations: 100 });
    }
    let (s, t) = (wrap_angle(s), wrap_angle(t));
    let (a1, a2) = (c1.position(s), c2.position(t));
    Ok(ClosestPair { t1: s, t2: t, a1, a2, distance: (a1 - a2).norm() })
}

/// Uniform parameter samples `t_i = 2πi/n`.
pub fn uniform_params(n: usize) -> Vec<f64> {
    (0..n).map(|i| TAU * i as f64 / n as f64).collect()
}

/// Whether the closed segment `[a, b]` meets the curve anywhere other than at
/// `b` itself. Uses sign-change bracketing of the line equation over 256
/// parameter samples and bisection.
pub fn segment_hits_curve_before_end(curve: &Curve, a: Vec2, b: Vec2) -> bool {
    let dir = b - a;
    let len2 = dir.norm_sqr();
    if len2 == 0.0 {
        return false;
    }
    let n = 256;
    let f = |t: f64| dir.cross(curve.position(t) - a);
    let mut t_prev = 0.0;
    let mut f_prev = f(0.0);
    for i in 1..=n {
        let t = TAU * i as f64 / n as f64;
        let fv = f(t);
        if f_prev == 0.0 || f_prev.signum() != fv.signum() {
            let (mut lo, mut hi, mut flo) = (t_prev, t, f_prev);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if (fm < 0.0) == (flo < 0.0) && fm != 0.0 {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let p = curve.position(0.5 * (lo + hi));
            let along = (p - a).dot(dir) / len2;
            let scale = len2.sqrt();
            // Intersections strictly before the end point count as hits.
            if along >= 0.0 && (1.0 - along) * scale > 1e-9 * (1.0 + scale) {
                return true;
            }
        }
        t_prev = t;
        f_prev = fv;
    }
    false
}
