//! Angle helpers and constants.

use core::f64::consts::PI;

pub(crate) const TAU: f64 = 2.0 * PI;

/// Euler–Mascheroni constant.
pub(crate) const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Maps an angle into `[0, 2π)`.
pub(crate) fn wrap_angle(t: f64) -> f64 {
    let r = t % TAU;
    if r < 0.0 {
        r + TAU
    } else if r >= TAU {
        r - TAU
    } else {
        r
    }
}

/// Signed difference `b - a` folded into `(-π, π]`.
pub(crate) fn angle_diff(a: f64, b: f64) -> f64 {
    let mut d = (b - a) % TAU;
    if d > PI {
        d -= TAU;
    } else if d <= -PI {
        d += TAU;
    }
    d
}
