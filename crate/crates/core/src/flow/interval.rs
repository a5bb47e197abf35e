//! Closed intervals of `f64` with outward rounding.
//!
//! Every operation returns an interval containing the exact real result.
//! Results that are exact in floating point (checked with error-free
//! transformations) are not widened; inexact ones are pushed out by
//! `max(eps·|r|, one ulp)`. Library transcendentals are always widened.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

pub type IntervalBox = Vec<Interval>;

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

fn down(r: f64, exact: bool, eps: f64) -> f64 {
    if exact {
        r
    } else {
        (r - eps * r.abs()).next_down()
    }
}

fn up(r: f64, exact: bool, eps: f64) -> f64 {
    if exact {
        r
    } else {
        (r + eps * r.abs()).next_up()
    }
}

/// `a + b` and whether the rounded sum is exact.
fn sum_exact(a: f64, b: f64) -> (f64, bool) {
    let s = a + b;
    if !s.is_finite() {
        return (s, false);
    }
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err == 0.0)
}

fn prod_exact(a: f64, b: f64) -> (f64, bool) {
    let p = a * b;
    if !p.is_finite() {
        return (p, false);
    }
    (p, a.mul_add(b, -p) == 0.0 && (p != 0.0 || a == 0.0 || b == 0.0))
}

fn transcendental_down(r: f64, eps: f64) -> f64 {
    (r - eps * r.abs()).next_down().next_down()
}

fn transcendental_up(r: f64, eps: f64) -> f64 {
    (r + eps * r.abs()).next_up().next_up()
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Interval {
        Interval { lo: x, hi: x }
    }

    /// Enclosure of a constant known only to floating-point accuracy.
    pub fn around(x: f64) -> Interval {
        Interval {
            lo: x.next_down(),
            hi: x.next_up(),
        }
    }

    pub fn ln2() -> Interval {
        Interval::around(LN_2)
    }

    pub fn pi() -> Interval {
        Interval::around(PI)
    }

    pub fn entire() -> Interval {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo).next_up()
    }

    /// Approximate midpoint, guaranteed to lie in the interval.
    pub fn mid(&self) -> f64 {
        let m = 0.5 * self.lo + 0.5 * self.hi;
        m.clamp(self.lo, self.hi)
    }

    /// Upper bound on `|x|` over the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn add(&self, o: &Interval, eps: f64) -> Interval {
        let (l, el) = sum_exact(self.lo, o.lo);
        let (h, eh) = sum_exact(self.hi, o.hi);
        Interval {
            lo: down(l, el, eps),
            hi: up(h, eh, eps),
        }
    }

    pub fn sub(&self, o: &Interval, eps: f64) -> Interval {
        self.add(&o.neg(), eps)
    }

    pub fn mul(&self, o: &Interval, eps: f64) -> Interval {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in [self.lo, self.hi] {
            for b in [o.lo, o.hi] {
                let (p, e) = prod_exact(a, b);
                let (p, e) = if p.is_nan() { (0.0, true) } else { (p, e) };
                lo = lo.min(down(p, e, eps));
                hi = hi.max(up(p, e, eps));
            }
        }
        Interval { lo, hi }
    }

    pub fn scale(&self, c: f64, eps: f64) -> Interval {
        self.mul(&Interval::point(c), eps)
    }

    pub fn exp(&self, eps: f64) -> Interval {
        let lo = if self.lo == 0.0 {
            1.0
        } else {
            transcendental_down(self.lo.exp(), eps).max(0.0)
        };
        let hi = if self.hi == 0.0 {
            1.0
        } else {
            transcendental_up(self.hi.exp(), eps)
        };
        Interval { lo, hi }
    }

    pub fn sin(&self, eps: f64) -> Interval {
        self.periodic(eps, f64::sin, FRAC_PI_2)
    }

    pub fn cos(&self, eps: f64) -> Interval {
        self.periodic(eps, f64::cos, 0.0)
    }

    /// Range of a 2π-periodic unit-amplitude function with maxima at
    /// `peak + 2kπ` and minima at `peak + π + 2kπ`.
    fn periodic(&self, eps: f64, f: fn(f64) -> f64, peak: f64) -> Interval {
        if !self.is_finite() || self.hi - self.lo >= 2.0 * PI {
            return Interval::new(-1.0, 1.0);
        }
        let a = f(self.lo);
        let b = f(self.hi);
        let mut lo = transcendental_down(a.min(b), eps);
        let mut hi = transcendental_up(a.max(b), eps);
        // Slack keeps the extremum test conservative against the rounding of
        // the critical points themselves.
        let slack = 1e-12 * (1.0 + self.mag());
        let hits = |c: f64| {
            let k = ((self.lo - slack - c) / (2.0 * PI)).ceil();
            c + 2.0 * PI * k <= self.hi + slack
        };
        if hits(peak) {
            hi = 1.0;
        }
        if hits(peak + PI) {
            lo = -1.0;
        }
        Interval::new(lo.max(-1.0), hi.min(1.0))
    }
}

/// Componentwise hull.
pub fn box_hull(a: &[Interval], b: &[Interval]) -> IntervalBox {
    a.iter().zip(b).map(|(x, y)| x.hull(y)).collect()
}

pub fn box_subset(a: &[Interval], b: &[Interval]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.subset_of(y))
}

pub fn box_intersect(a: &[Interval], b: &[Interval]) -> Option<IntervalBox> {
    a.iter().zip(b).map(|(x, y)| x.intersect(y)).collect()
}

pub fn box_from_bounds(bounds: &[(f64, f64)]) -> IntervalBox {
    bounds.iter().map(|&(l, h)| Interval::new(l, h)).collect()
}

pub fn box_max_width(b: &[Interval]) -> f64 {
    b.iter().map(Interval::width).fold(0.0, f64::max)
}
