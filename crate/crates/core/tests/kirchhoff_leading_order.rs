//! The Kirchhoff operator reproduces the slow envelope of the first reflection
//! to leading order: the relative error on interior illuminated nodes falls like `1/k`.

use std::f64::consts::{PI, TAU};

use mscat_core::geometry::{Curve, Scene, Vec2};
use mscat_core::go_phase::Region;
use mscat_core::kirchhoff::KirchhoffOperator;
use mscat_core::multiscatter::ScatteringProblem;
use mscat_core::C64;

fn scene(k: f64) -> Scene {
    Scene::new(
        vec![Curve::circle(Vec2::new(0.0, 0.0), 1.0), Curve::circle(Vec2::new(0.9625, -2.6444), 1.5)],
        Vec2::new(1.0, 0.0),
        k,
    )
    .unwrap()
}

fn angular_gap(x: f64, y: f64) -> f64 {
    let z = (x - y).rem_euclid(TAU);
    if z > PI {
        TAU - z
    } else {
        z
    }
}

/// Relative L² error per obstacle of `K` applied to the Kirchhoff current
/// `2ik α·ν` against the relabeled `T g`, over nodes at least a quarter of the
/// lit arc from its shadow boundaries and fed by non-grazing source points.
fn interior_errors(k: f64) -> [f64; 2] {
    let p = ScatteringProblem::with_density(scene(k), 10.0).unwrap();
    let mut kop = KirchhoffOperator::new(&p, 4).unwrap();
    let alpha = p.scene.direction;
    let exact = kop.relabel(1, &p.apply_t(&p.initial_iterate())).unwrap();
    let mut current = p.zeros();
    for j in 0..2 {
        let lit = kop.book.field(0, j).unwrap().region.clone();
        for (i, nu) in p.grids[j].normals.iter().enumerate() {
            if lit[i] == Region::Illuminated {
                current.part_mut(j)[i] = C64::new(0.0, 2.0 * k * alpha.dot(*nu));
            }
        }
    }
    let approx = kop.apply_level(0, &current).unwrap();
    let mut out = [0.0; 2];
    for (j, slot) in out.iter_mut().enumerate() {
        let field = kop.book.field(1, j).unwrap();
        let sb = &field.shadow_boundaries;
        assert_eq!(sb.len(), 2, "obstacle {j} has {} shadow boundaries", sb.len());
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..field.len() {
            if approx.part(j)[i].norm() == 0.0 {
                continue;
            }
            let t = field.params[i];
            let arc = angular_gap(sb[0], sb[1]);
            if angular_gap(t, sb[0]).min(angular_gap(t, sb[1])) < 0.25 * arc {
                continue;
            }
            let ray = field.rays[i].unwrap();
            if -alpha.dot(p.grids[1 - j].curve.normal(ray.source_param)) < 0.5 {
                continue;
            }
            num += (approx.part(j)[i] - exact.part(j)[i]).norm_sqr();
            den += exact.part(j)[i].norm_sqr();
        }
        assert!(den > 0.0);
        *slot = (num / den).sqrt();
    }
    out
}

#[test]
fn error_decays_like_inverse_wavenumber() {
    let coarse = interior_errors(50.0);
    let fine = interior_errors(100.0);
    for j in 0..2 {
        let ratio = coarse[j] / fine[j];
        assert!(coarse[j] < 0.1, "obstacle {j}: {:e}", coarse[j]);
        assert!((1.6..=2.5).contains(&ratio), "obstacle {j}: {:e} -> {:e}, ratio {ratio}", coarse[j], fine[j]);
    }
}
