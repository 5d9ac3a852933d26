//! Interval arithmetic and the box abstract domain.
//!
//! Endpoint computations are rounded outward: each operation recovers the
//! exact rounding error of the floating-point result (two-sum or fused
//! multiply-add) and steps one ulp outward only when the stored endpoint
//! could sit on the wrong side of the real value. Transcendental functions
//! have no error-free transformation, so their endpoints are always widened
//! by one ulp.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[inline]
fn down(x: f64) -> f64 {
    x.next_down()
}

#[inline]
fn up(x: f64) -> f64 {
    x.next_up()
}

/// Lower and upper enclosures of `a + b`.
#[inline]
fn add_round(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    if !s.is_finite() {
        return (s, s);
    }
    // two-sum: err is exactly (a + b) - s
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    if err > 0.0 {
        (s, up(s))
    } else if err < 0.0 {
        (down(s), s)
    } else {
        (s, s)
    }
}

#[inline]
fn mul_round(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    if !p.is_finite() {
        return (p, p);
    }
    let err = a.mul_add(b, -p);
    if err > 0.0 {
        (p, up(p))
    } else if err < 0.0 {
        (down(p), p)
    } else {
        (p, p)
    }
}

#[inline]
fn div_round(a: f64, b: f64) -> (f64, f64) {
    let q = a / b;
    if !q.is_finite() {
        return (q, q);
    }
    // a - q*b is exact under fma; the true quotient exceeds q iff it has the sign of b
    let rem = (-q).mul_add(b, a);
    let above = (rem > 0.0) == (b > 0.0);
    if rem == 0.0 {
        (q, q)
    } else if above {
        (q, up(q))
    } else {
        (down(q), q)
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::BadInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Builds an interval from unordered endpoints.
    pub fn hull_of(a: f64, b: f64) -> Self {
        Interval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        let m = 0.5 * (self.lo + self.hi);
        if m.is_finite() {
            m
        } else {
            0.5 * self.lo + 0.5 * self.hi
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersection(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: add_round(self.lo, other.lo).0,
            hi: add_round(self.hi, other.hi).1,
        }
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        self.add(&other.neg())
    }

    pub fn add_scalar(&self, c: f64) -> Interval {
        self.add(&Interval::point(c))
    }

    /// Product, taking the extremes of the four endpoint products.
    pub fn mul(&self, other: &Interval) -> Interval {
        let cands = [
            mul_round(self.lo, other.lo),
            mul_round(self.lo, other.hi),
            mul_round(self.hi, other.lo),
            mul_round(self.hi, other.hi),
        ];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (l, h) in cands {
            lo = lo.min(l);
            hi = hi.max(h);
        }
        // 0 * inf style NaNs never arise from finite inputs
        Interval { lo, hi }
    }

    pub fn scale(&self, c: f64) -> Interval {
        self.mul(&Interval::point(c))
    }

    /// `x^2`, tighter than `x * x` when the interval straddles zero.
    pub fn sqr(&self) -> Interval {
        let (l2, h2) = (mul_round(self.lo, self.lo), mul_round(self.hi, self.hi));
        if self.lo >= 0.0 {
            Interval { lo: l2.0, hi: h2.1 }
        } else if self.hi <= 0.0 {
            Interval { lo: h2.0, hi: l2.1 }
        } else {
            Interval {
                lo: 0.0,
                hi: l2.1.max(h2.1),
            }
        }
    }

    /// Quotient; the divisor must not contain zero.
    pub fn div(&self, other: &Interval) -> Result<Interval> {
        if other.contains(0.0) {
            return Err(Error::BadInterval {
                lo: other.lo,
                hi: other.hi,
            });
        }
        let cands = [
            div_round(self.lo, other.lo),
            div_round(self.lo, other.hi),
            div_round(self.hi, other.lo),
            div_round(self.hi, other.hi),
        ];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (l, h) in cands {
            lo = lo.min(l);
            hi = hi.max(h);
        }
        Ok(Interval { lo, hi })
    }

    pub fn sin(&self) -> Interval {
        trig_enclosure(self, f64::sin, std::f64::consts::FRAC_PI_2)
    }

    pub fn cos(&self) -> Interval {
        trig_enclosure(self, f64::cos, 0.0)
    }

    /// Meet with `[lo, hi]`, the interval image of `x.clamp(lo, hi)`.
    pub fn clamp(&self, lo: f64, hi: f64) -> Interval {
        Interval {
            lo: self.lo.clamp(lo, hi),
            hi: self.hi.clamp(lo, hi),
        }
    }

    /// Image under `max(x, 0)`.
    pub fn relu(&self) -> Interval {
        Interval {
            lo: self.lo.max(0.0),
            hi: self.hi.max(0.0),
        }
    }

    /// Widens both endpoints by one ulp.
    pub fn widen_ulp(&self) -> Interval {
        Interval {
            lo: down(self.lo),
            hi: up(self.hi),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Enclosure of a 2π-periodic function whose maximum sits at `peak + 2kπ`
/// and minimum at `peak + π + 2kπ`.
fn trig_enclosure(x: &Interval, f: fn(f64) -> f64, peak: f64) -> Interval {
    use std::f64::consts::{PI, TAU};

    let eval = |v: f64| -> (f64, f64) {
        let y = f(v);
        // the only exactly known values at a floating-point argument
        if v == 0.0 {
            (y, y)
        } else {
            (down(y).max(-1.0), up(y).min(1.0))
        }
    };
    if !(x.lo.is_finite() && x.hi.is_finite()) || x.width() >= TAU {
        return Interval { lo: -1.0, hi: 1.0 };
    }
    let (a_lo, a_hi) = eval(x.lo);
    let (b_lo, b_hi) = eval(x.hi);
    let mut lo = a_lo.min(b_lo);
    let mut hi = a_hi.max(b_hi);

    // Critical points are located with a small slack so that rounding in
    // the period arithmetic can only add an extremum, never drop one.
    const SLACK: f64 = 1e-9;
    let hits = |centre: f64| -> bool {
        let k = ((x.lo - SLACK - centre) / TAU).ceil();
        centre + k * TAU <= x.hi + SLACK
    };
    if hits(peak) {
        hi = 1.0;
    }
    if hits(peak + PI) {
        lo = -1.0;
    }
    Interval { lo, hi }
}

/// An axis-aligned box `[l1,u1] x ... x [ln,un]`, the abstract state.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperBox {
    dims: Vec<Interval>,
}

impl HyperBox {
    pub fn new(dims: Vec<Interval>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::dims(1, 0));
        }
        Ok(HyperBox { dims })
    }

    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        let dims = bounds
            .iter()
            .map(|&(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        HyperBox::new(dims)
    }

    /// Degenerate box holding a single point.
    pub fn point(p: &[f64]) -> Result<Self> {
        HyperBox::new(p.iter().map(|&x| Interval::point(x)).collect())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    #[inline]
    pub fn intervals(&self) -> &[Interval] {
        &self.dims
    }

    #[inline]
    pub fn interval(&self, i: usize) -> Interval {
        self.dims[i]
    }

    pub fn lower(&self) -> Vec<f64> {
        self.dims.iter().map(Interval::lo).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.dims.iter().map(Interval::hi).collect()
    }

    pub fn centre(&self) -> Vec<f64> {
        self.dims.iter().map(Interval::mid).collect()
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got == self.dim() {
            Ok(())
        } else {
            Err(Error::dims(self.dim(), got))
        }
    }

    pub fn contains(&self, p: &[f64]) -> Result<bool> {
        self.check_dim(p.len())?;
        Ok(self.dims.iter().zip(p).all(|(iv, &x)| iv.contains(x)))
    }

    pub fn contains_box(&self, other: &HyperBox) -> Result<bool> {
        self.check_dim(other.dim())?;
        Ok(self
            .dims
            .iter()
            .zip(&other.dims)
            .all(|(a, b)| a.contains_interval(b)))
    }

    /// Closed intersection test: shared boundaries count.
    pub fn intersects(&self, other: &HyperBox) -> Result<bool> {
        self.check_dim(other.dim())?;
        Ok(self.intersects_unchecked(other))
    }

    pub(crate) fn intersects_unchecked(&self, other: &HyperBox) -> bool {
        self.dims
            .iter()
            .zip(&other.dims)
            .all(|(a, b)| a.intersects(b))
    }

    pub fn intersection(&self, other: &HyperBox) -> Result<Option<HyperBox>> {
        self.check_dim(other.dim())?;
        let mut dims = Vec::with_capacity(self.dim());
        for (a, b) in self.dims.iter().zip(&other.dims) {
            match a.intersection(b) {
                Some(iv) => dims.push(iv),
                None => return Ok(None),
            }
        }
        Ok(Some(HyperBox { dims }))
    }

    /// True when the intersection has positive extent in every dimension in
    /// which `self` has positive extent, i.e. it is not a shared face.
    pub fn overlaps_interior(&self, other: &HyperBox) -> bool {
        self.dims.iter().zip(&other.dims).all(|(a, b)| {
            if a.width() > 0.0 {
                a.lo.max(b.lo) < a.hi.min(b.hi)
            } else {
                b.contains(a.lo)
            }
        })
    }

    pub fn hull(&self, other: &HyperBox) -> Result<HyperBox> {
        self.check_dim(other.dim())?;
        Ok(HyperBox {
            dims: self
                .dims
                .iter()
                .zip(&other.dims)
                .map(|(a, b)| a.hull(b))
                .collect(),
        })
    }

    pub fn volume(&self) -> f64 {
        self.dims.iter().map(Interval::width).product()
    }

    pub fn max_width(&self) -> f64 {
        self.dims.iter().map(Interval::width).fold(0.0, f64::max)
    }

    pub fn widths(&self) -> Vec<f64> {
        self.dims.iter().map(Interval::width).collect()
    }

    /// Splits at the midpoint of the widest dimension (lowest index on ties).
    pub fn split(&self) -> Result<(HyperBox, HyperBox)> {
        let mut best = 0;
        let mut best_w = self.dims[0].width();
        for (i, iv) in self.dims.iter().enumerate().skip(1) {
            if iv.width() > best_w {
                best = i;
                best_w = iv.width();
            }
        }
        if best_w <= 0.0 {
            return Err(Error::CannotSplit);
        }
        let iv = self.dims[best];
        let mid = iv.mid();
        let mut left = self.clone();
        let mut right = self.clone();
        left.dims[best] = Interval { lo: iv.lo, hi: mid };
        right.dims[best] = Interval { lo: mid, hi: iv.hi };
        Ok((left, right))
    }

    /// Closure of `self \ other` as interior-disjoint boxes (at most `2n`).
    pub fn subtract(&self, other: &HyperBox) -> Result<Vec<HyperBox>> {
        self.check_dim(other.dim())?;
        if !self.overlaps_interior(other) {
            return Ok(vec![self.clone()]);
        }
        let mut rest = self.clone();
        let mut out = Vec::new();
        for d in 0..self.dim() {
            let r = rest.dims[d];
            let o = other.dims[d];
            if r.lo < o.lo {
                let mut piece = rest.clone();
                piece.dims[d] = Interval { lo: r.lo, hi: o.lo };
                out.push(piece);
                rest.dims[d].lo = o.lo;
            }
            if rest.dims[d].hi > o.hi {
                let mut piece = rest.clone();
                piece.dims[d] = Interval {
                    lo: o.hi,
                    hi: rest.dims[d].hi,
                };
                out.push(piece);
                rest.dims[d].hi = o.hi;
            }
        }
        Ok(out)
    }

    /// Bit pattern of all endpoints; equal keys mean bitwise-equal boxes.
    pub fn key(&self) -> Vec<u64> {
        self.dims
            .iter()
            .flat_map(|iv| [iv.lo.to_bits(), iv.hi.to_bits()])
            .collect()
    }
}

impl fmt::Display for HyperBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, iv) in self.dims.iter().enumerate() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}

impl Serialize for HyperBox {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.dims.iter().map(|iv| [iv.lo, iv.hi]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HyperBox {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        let bounds: Vec<(f64, f64)> = pairs.into_iter().map(|[l, h]| (l, h)).collect();
        HyperBox::from_bounds(&bounds).map_err(serde::de::Error::custom)
    }
}
