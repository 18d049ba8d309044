//! Angle arithmetic on the circle. Canonical range is (−π, π].

use std::f64::consts::{PI, TAU};

/// Reduces an angle to (−π, π].
#[inline]
pub fn wrap(x: f64) -> f64 {
    if x > -PI && x <= PI {
        return x;
    }
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Distance on the circle between two angles, in [0, π].
#[inline]
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap(a - b).abs()
}

#[inline]
pub fn deg(x: f64) -> f64 {
    x.to_radians()
}

/// Circular mean of a set of angles together with the mean resultant length.
///
/// Returns `None` when the resultant length is below 1e-12, where the mean
/// direction is numerically meaningless.
pub fn circular_mean<I: IntoIterator<Item = f64>>(angles: I) -> Option<(f64, f64)> {
    let mut c = crate::sum::Neumaier::default();
    let mut s = crate::sum::Neumaier::default();
    let mut n = 0usize;
    for a in angles {
        c.add(a.cos());
        s.add(a.sin());
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let (c, s) = (c.sum() / n as f64, s.sum() / n as f64);
    let r = c.hypot(s);
    if r < 1e-12 {
        return None;
    }
    Some((wrap(s.atan2(c)), r))
}
