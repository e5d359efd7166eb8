//! ORTHODIR driven only by iterates `η^{m+1} = T η^m` against ORTHODIR applied
//! to `I − T` directly, on random normal operators.

use mscat_core::krylov::{orthodir, Directions, IterateOrthodir, WeightedSpace};
use mscat_core::linalg::Matrix;
use mscat_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// `Q D Qᴴ` with `Q` unitary and `max |D_ii| = radius`.
fn normal_operator(n: usize, radius: f64, rng: &mut ChaCha8Rng) -> Matrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = random_vec(n, rng);
        for q in &cols {
            let c: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(q) {
                *x -= c * y;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    let mut d: Vec<C64> = (0..n)
        .map(|_| C64::from_polar(radius * rng.gen_range(0.0f64..1.0).sqrt(), rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    d[0] = C64::from_polar(radius, rng.gen_range(0.0..std::f64::consts::TAU));
    Matrix::from_fn(n, n, |i, j| (0..n).map(|l| cols[l][i] * d[l] * cols[l][j].conj()).sum())
}

struct Trace {
    iterates: Vec<Vec<C64>>,
    residuals: Vec<f64>,
}

fn direct(t: &Matrix, g: &[C64], steps: usize) -> Trace {
    let n = g.len();
    let w = vec![1.0; n];
    let mut iterates = Vec::new();
    let mut space = WeightedSpace {
        weights: &w,
        op: |v: &[C64]| {
            let tv = t.matvec(v);
            Ok(v.iter().zip(&tv).map(|(a, b)| a - b).collect::<Vec<_>>())
        },
    };
    let res = orthodir(&mut space, &g.to_vec(), 0.0, steps, |_, mu: &Vec<C64>| {
        iterates.push(mu.clone());
        false
    })
    .unwrap();
    Trace { iterates, residuals: res.steps.iter().map(|s| s.relative_residual).collect() }
}

fn from_iterates(t: &Matrix, g: &[C64], steps: usize) -> Trace {
    let w = vec![1.0; g.len()];
    let mut iterates = Vec::new();
    let mut solver = IterateOrthodir::new(g.to_vec(), &w, |v: &[C64]| Ok(t.matvec(v)), Directions::Stable);
    let recs = solver
        .run(0.0, steps, |_, mu, _| {
            iterates.push(mu.to_vec());
            false
        })
        .unwrap();
    Trace { iterates, residuals: recs.iter().map(|s| s.relative_residual).collect() }
}

fn max_rel_diff(a: &[C64], b: &[C64]) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

fn check(radius: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 50;
    let t = normal_operator(n, radius, &mut rng);
    let g = random_vec(n, &mut rng);
    let steps = 20;
    let a = direct(&t, &g, steps);
    let b = from_iterates(&t, &g, steps);
    assert_eq!(a.iterates.len(), steps);
    assert_eq!(b.iterates.len(), steps);
    for (j, (x, y)) in b.iterates.iter().zip(&a.iterates).enumerate() {
        let d = max_rel_diff(x, y);
        assert!(d < 1e-12, "radius {radius}, seed {seed}, iteration {j}: {d:e}");
    }
    for r in [&a.residuals, &b.residuals] {
        for w in r.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "residual rose: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn radius_one_half() {
    for seed in 0..4 {
        check(0.5, seed);
    }
}

#[test]
fn radius_nine_tenths() {
    for seed in 0..4 {
        check(0.9, seed);
    }
}

#[test]
fn operator_has_requested_radius() {
    // The power method on a normal operator converges to the dominant modulus.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = normal_operator(50, 0.9, &mut rng);
    let mut v = random_vec(50, &mut rng);
    let mut rho = 0.0;
    for _ in 0..400 {
        let w = t.matvec(&v);
        let nw = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        rho = nw / nv;
        v = w.into_iter().map(|z| z / nw).collect();
    }
    assert!((rho - 0.9).abs() < 1e-3, "{rho}");
}
