//! Finite unions of open arcs on the circle.
//!
//! Stored as sorted, disjoint open intervals of `[−π, π]`; an arc through
//! the cut at ±π is kept as two intervals touching −π and π. Endpoints are
//! measure-zero and not tracked, so complements are taken up to endpoints.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::angle::wrap;

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ArcSet {
    intervals: Vec<(f64, f64)>,
}

impl ArcSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self {
            intervals: vec![(-PI, PI)],
        }
    }

    /// The open arc running counter-clockwise from `start` through `length` radians.
    pub fn from_start(start: f64, length: f64) -> Self {
        if length >= TAU {
            return Self::full();
        }
        if !(length > 0.0) {
            return Self::empty();
        }
        let lo = wrap(start);
        let hi = lo + length;
        let mut out = Vec::with_capacity(2);
        if hi <= PI {
            out.push((lo, hi));
        } else {
            out.push((-PI, hi - TAU));
            if lo < PI {
                out.push((lo, PI));
            }
        }
        Self { intervals: out }
    }

    /// The open arc counter-clockwise from `start` to `end`.
    pub fn from_endpoints(start: f64, end: f64) -> Self {
        let length = (end - start).rem_euclid(TAU);
        Self::from_start(start, length)
    }

    /// `(center − half_width, center + half_width)`.
    pub fn around(center: f64, half_width: f64) -> Self {
        Self::from_start(center - half_width, 2.0 * half_width)
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.intervals == [(-PI, PI)]
    }

    /// Sorted disjoint intervals of `[−π, π]`.
    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        let x = wrap(x);
        if x == PI {
            let first = self.intervals.first().is_some_and(|i| i.0 == -PI);
            let last = self.intervals.last().is_some_and(|i| i.1 == PI);
            return first && last;
        }
        self.intervals.iter().any(|&(a, b)| a < x && x < b)
    }

    pub fn intersect(&self, other: &ArcSet) -> ArcSet {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if lo < hi {
                out.push((lo, hi));
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        ArcSet { intervals: out }
    }

    pub fn union(&self, other: &ArcSet) -> ArcSet {
        let mut all: Vec<(f64, f64)> = self.intervals.iter().chain(&other.intervals).copied().collect();
        all.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(all.len());
        for (lo, hi) in all {
            match out.last_mut() {
                // overlapping open intervals merge; touching ones stay apart
                Some(last) if lo < last.1 => last.1 = last.1.max(hi),
                _ => out.push((lo, hi)),
            }
        }
        ArcSet { intervals: out }
    }

    /// The complement, up to endpoints.
    pub fn complement(&self) -> ArcSet {
        let mut out = Vec::new();
        let mut cursor = -PI;
        for &(a, b) in &self.intervals {
            if a > cursor {
                out.push((cursor, a));
            }
            cursor = b;
        }
        if cursor < PI {
            out.push((cursor, PI));
        }
        ArcSet { intervals: out }
    }

    /// `{ψ − θ : ψ ∈ self, θ ∈ other}`.
    pub fn minkowski_difference(&self, other: &ArcSet) -> ArcSet {
        let mut out = ArcSet::empty();
        for &(p1, p2) in &self.intervals {
            for &(q1, q2) in &other.intervals {
                out = out.union(&ArcSet::from_start(p1 - q2, (p2 - p1) + (q2 - q1)));
                if out.is_full() {
                    return out;
                }
            }
        }
        out
    }

    /// A point of the set, the midpoint of its longest interval (joined
    /// across the cut if the set wraps).
    pub fn representative(&self) -> Option<f64> {
        let n = self.intervals.len();
        if n == 0 {
            return None;
        }
        let mut best = (self.intervals[0].1 - self.intervals[0].0, 0.5 * (self.intervals[0].0 + self.intervals[0].1));
        for &(a, b) in &self.intervals[1..] {
            if b - a > best.0 {
                best = (b - a, 0.5 * (a + b));
            }
        }
        if n >= 2 && self.intervals[0].0 == -PI && self.intervals[n - 1].1 == PI {
            let (lo, hi) = (self.intervals[n - 1].0, self.intervals[0].1 + TAU);
            if hi - lo > best.0 {
                best = (hi - lo, wrap(0.5 * (lo + hi)));
            }
        }
        Some(best.1)
    }

    /// Same set up to `tol` in every endpoint.
    pub fn approx_eq(&self, other: &ArcSet, tol: f64) -> bool {
        self.intervals.len() == other.intervals.len()
            && self
                .intervals
                .iter()
                .zip(&other.intervals)
                .all(|(a, b)| (a.0 - b.0).abs() <= tol && (a.1 - b.1).abs() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::deg;
    use proptest::prelude::*;

    #[test]
    fn full_circle_is_identity_for_intersection() {
        let x = ArcSet::from_endpoints(deg(100.0), deg(-120.0));
        assert_eq!(ArcSet::full().intersect(&x), x);
        assert_eq!(x.intersect(&ArcSet::full()), x);
    }

    #[test]
    fn plain_interval_intersection() {
        let a = ArcSet::from_endpoints(deg(10.0), deg(30.0));
        let b = ArcSet::from_endpoints(deg(20.0), deg(40.0));
        assert!(a.intersect(&b).approx_eq(&ArcSet::from_endpoints(deg(20.0), deg(30.0)), 1e-12));
    }

    #[test]
    fn wraparound_intersection() {
        let a = ArcSet::from_endpoints(deg(170.0), deg(-170.0));
        let b = ArcSet::from_endpoints(deg(175.0), deg(-175.0));
        let c = a.intersect(&b);
        assert!(c.approx_eq(&b, 1e-12));
        assert!((c.measure() - deg(10.0)).abs() < 1e-12);
        assert!(c.contains(PI) && c.contains(-PI));
        assert!(!c.contains(deg(170.0)));
        assert!((wrap(c.representative().unwrap()).abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn complement_and_measure() {
        let a = ArcSet::around(0.3, 0.5);
        let c = a.complement();
        assert!((a.measure() + c.measure() - TAU).abs() < 1e-12);
        assert!(a.intersect(&c).is_empty());
        assert!(ArcSet::full().complement().is_empty());
        assert!(ArcSet::empty().complement().is_full());
    }

    #[test]
    fn minkowski_difference_of_arcs() {
        let psi = ArcSet::around(deg(90.0), 0.1);
        let theta = ArcSet::around(0.0, 0.1);
        let d = psi.minkowski_difference(&theta);
        assert!(d.approx_eq(&ArcSet::around(deg(90.0), 0.2), 1e-12));
        let wide = ArcSet::around(0.0, 2.0).minkowski_difference(&ArcSet::around(1.0, 1.5));
        assert!(wide.is_full());
    }

    fn arc_strategy() -> impl Strategy<Value = ArcSet> {
        prop::collection::vec((-PI..PI, 0.01..3.0f64), 0..4).prop_map(|arcs| {
            arcs.into_iter().fold(ArcSet::empty(), |acc, (s, l)| acc.union(&ArcSet::from_start(s, l)))
        })
    }

    proptest! {
        #[test]
        fn intersection_is_commutative_and_associative(a in arc_strategy(), b in arc_strategy(), c in arc_strategy()) {
            prop_assert!(a.intersect(&b).approx_eq(&b.intersect(&a), 1e-12));
            prop_assert!(a.intersect(&b).intersect(&c).approx_eq(&a.intersect(&b.intersect(&c)), 1e-12));
        }

        #[test]
        fn intervals_stay_normalized(a in arc_strategy(), b in arc_strategy()) {
            for set in [a.intersect(&b), a.union(&b), a.complement(), a.minkowski_difference(&b)] {
                let iv = set.intervals();
                prop_assert!(iv.iter().all(|&(lo, hi)| -PI <= lo && lo < hi && hi <= PI));
                prop_assert!(iv.windows(2).all(|w| w[0].1 <= w[1].0));
                prop_assert!(set.measure() <= TAU + 1e-12);
            }
        }

        #[test]
        fn membership_matches_set_algebra(a in arc_strategy(), b in arc_strategy(), x in -PI..PI) {
            let near_edge = a.intervals().iter().chain(b.intervals()).any(|&(lo, hi)| (x - lo).abs() < 1e-9 || (x - hi).abs() < 1e-9);
            prop_assume!(!near_edge);
            prop_assert_eq!(a.intersect(&b).contains(x), a.contains(x) && b.contains(x));
            prop_assert_eq!(a.union(&b).contains(x), a.contains(x) || b.contains(x));
            prop_assert_eq!(a.complement().contains(x), !a.contains(x));
        }

        #[test]
        fn difference_contains_pairwise_differences(a in arc_strategy(), b in arc_strategy(), u in 0.0..1.0f64, v in 0.0..1.0f64) {
            prop_assume!(!a.is_empty() && !b.is_empty());
            let pick = |s: &ArcSet, t: f64| { let (lo, hi) = s.intervals()[0]; lo + (hi - lo) * (0.05 + 0.9 * t) };
            let (psi, theta) = (pick(&a, u), pick(&b, v));
            prop_assert!(a.minkowski_difference(&b).contains(psi - theta));
        }
    }
}
