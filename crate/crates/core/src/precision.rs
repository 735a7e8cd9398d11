//! Working-precision settings and a small real-number abstraction shared by
//! the double-precision fast path and the multiprecision fallback.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use astro_float::{BigFloat, Consts, RoundingMode, Sign, WORD_BIT_SIZE};

use crate::error::{Error, Result};
use crate::quad::GaussRule;

pub const DOUBLE_BITS: u32 = 53;
pub const MAX_BITS: u32 = 512;

/// Order of the short rule used between consecutive abscissae when an
/// integral is accumulated along a sorted grid.
pub const GAP_ORDER: usize = 8;

/// Numerical settings threaded through every kernel.
#[derive(Clone, Debug)]
pub struct PrecisionContext {
    work_precision: u32,
    quad_panels: usize,
    quad_order: usize,
    rule: Arc<GaussRule>,
    gap_rule: Arc<GaussRule>,
}

impl PrecisionContext {
    pub fn new(work_precision: u32, quad_panels: usize, quad_order: usize) -> Result<Self> {
        if !(DOUBLE_BITS..=MAX_BITS).contains(&work_precision) {
            return Err(Error::Precondition(format!(
                "work precision {work_precision} outside [{DOUBLE_BITS}, {MAX_BITS}]"
            )));
        }
        if quad_panels == 0 || quad_order < 2 {
            return Err(Error::Precondition(
                "quadrature needs at least one panel and order >= 2".into(),
            ));
        }
        Ok(Self {
            work_precision,
            quad_panels,
            quad_order,
            rule: Arc::new(GaussRule::new(quad_order)?),
            gap_rule: Arc::new(GaussRule::new(GAP_ORDER)?),
        })
    }

    pub fn with_precision(work_precision: u32) -> Result<Self> {
        Self::new(work_precision, 4, 16)
    }

    pub fn work_precision(&self) -> u32 {
        self.work_precision
    }

    pub fn quad_panels(&self) -> usize {
        self.quad_panels
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn rule(&self) -> &GaussRule {
        &self.rule
    }

    pub fn gap_rule(&self) -> &GaussRule {
        &self.gap_rule
    }

    pub fn is_double(&self) -> bool {
        self.work_precision <= DOUBLE_BITS
    }

    /// Unit roundoff of the working precision.
    pub fn unit_roundoff(&self) -> f64 {
        ldexp(1.0, -(self.work_precision as i32))
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self::with_precision(DOUBLE_BITS).expect("default context is valid")
    }
}

/// Arithmetic needed by the generic polynomial kernels.
pub trait Real:
    Clone
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A value of the same precision as `self`.
    fn lift(&self, x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    fn unit_roundoff(&self) -> f64;
}

impl Real for f64 {
    fn lift(&self, x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn unit_roundoff(&self) -> f64 {
        f64::EPSILON / 2.0
    }
}

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

/// Binary floating-point number with a fixed mantissa length.
#[derive(Clone)]
pub struct MpReal {
    v: BigFloat,
    prec: usize,
}

impl MpReal {
    pub fn from_f64(x: f64, prec: usize) -> Self {
        Self {
            v: BigFloat::from_f64(x, prec),
            prec,
        }
    }

    pub fn from_i64(x: i64, prec: usize) -> Self {
        Self {
            v: BigFloat::from_i64(x, prec),
            prec,
        }
    }

    pub fn precision(&self) -> usize {
        self.prec
    }

    pub fn pi(prec: usize) -> Self {
        let v = CONSTS.with(|c| c.borrow_mut().pi(prec, RM));
        Self { v, prec }
    }

    pub fn cos(&self) -> Self {
        let v = CONSTS.with(|c| self.v.cos(self.prec, RM, &mut c.borrow_mut()));
        Self { v, prec: self.prec }
    }

    pub fn sin(&self) -> Self {
        let v = CONSTS.with(|c| self.v.sin(self.prec, RM, &mut c.borrow_mut()));
        Self { v, prec: self.prec }
    }

    pub fn sqrt(&self) -> Self {
        Self {
            v: self.v.sqrt(self.prec, RM),
            prec: self.prec,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    fn wrap(&self, other: &Self, v: BigFloat) -> Self {
        Self {
            v,
            prec: self.prec.max(other.prec),
        }
    }
}

impl fmt::Debug for MpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MpReal({:e} @ {} bits)", self.to_f64(), self.prec)
    }
}

impl Add for MpReal {
    type Output = MpReal;
    fn add(self, o: MpReal) -> MpReal {
        let p = self.prec.max(o.prec);
        let v = self.v.add(&o.v, p, RM);
        self.wrap(&o, v)
    }
}

impl Sub for MpReal {
    type Output = MpReal;
    fn sub(self, o: MpReal) -> MpReal {
        let p = self.prec.max(o.prec);
        let v = self.v.sub(&o.v, p, RM);
        self.wrap(&o, v)
    }
}

impl Mul for MpReal {
    type Output = MpReal;
    fn mul(self, o: MpReal) -> MpReal {
        let p = self.prec.max(o.prec);
        let v = self.v.mul(&o.v, p, RM);
        self.wrap(&o, v)
    }
}

impl Div for MpReal {
    type Output = MpReal;
    fn div(self, o: MpReal) -> MpReal {
        let p = self.prec.max(o.prec);
        let v = self.v.div(&o.v, p, RM);
        self.wrap(&o, v)
    }
}

impl Neg for MpReal {
    type Output = MpReal;
    fn neg(self) -> MpReal {
        Self {
            v: self.v.neg(),
            prec: self.prec,
        }
    }
}

impl PartialEq for MpReal {
    fn eq(&self, o: &Self) -> bool {
        self.partial_cmp(o) == Some(Ordering::Equal)
    }
}

impl PartialOrd for MpReal {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        self.v.cmp(&o.v).map(|c| c.cmp(&0))
    }
}

impl Real for MpReal {
    fn lift(&self, x: f64) -> Self {
        MpReal::from_f64(x, self.prec)
    }

    fn to_f64(&self) -> f64 {
        if self.v.is_zero() {
            return 0.0;
        }
        if self.v.is_nan() {
            return f64::NAN;
        }
        if self.v.is_inf() {
            return if self.v.is_inf_neg() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            };
        }
        let (m, _, sign, e, _) = match self.v.as_raw_parts() {
            Some(parts) => parts,
            None => return f64::NAN,
        };
        // Mantissa words are little-endian and normalised so the top bit is set.
        let top = *m.last().expect("nonempty mantissa") as f64;
        let next = if m.len() > 1 { m[m.len() - 2] as f64 } else { 0.0 };
        let w = WORD_BIT_SIZE as i32;
        let mant = top + ldexp(next, -w);
        let v = ldexp(mant, e - w);
        if sign == Sign::Neg {
            -v
        } else {
            v
        }
    }

    fn abs(&self) -> Self {
        if self.v.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn unit_roundoff(&self) -> f64 {
        ldexp(1.0, -(self.prec as i32))
    }
}

/// `x * 2^e` without intermediate underflow or overflow of the scale factor.
pub fn ldexp(mut x: f64, mut e: i32) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mp_roundtrip() {
        for x in [1.0, -0.3, 1e-300, 7.25e200, 5e-7] {
            let y = MpReal::from_f64(x, 256).to_f64();
            assert_eq!(x, y);
        }
        assert_eq!(MpReal::from_f64(0.0, 128).to_f64(), 0.0);
    }

    #[test]
    fn mp_cos_small_angle() {
        let t = MpReal::from_f64(1e-3, 256);
        let one = t.lift(1.0);
        let u = (one - t.cos()).to_f64();
        assert!((u - 4.999999583333347e-7).abs() < 1e-22);
    }

    #[test]
    fn mp_ordering_and_ops() {
        let a = MpReal::from_i64(3, 128);
        let b = MpReal::from_i64(4, 128);
        assert!(a < b);
        assert_eq!((a.clone() * b.clone()).to_f64(), 12.0);
        assert_eq!((b / a).to_f64(), 4.0 / 3.0);
        let pi = MpReal::pi(200).to_f64();
        assert_eq!(pi, std::f64::consts::PI);
    }

    #[test]
    fn context_bounds() {
        assert!(PrecisionContext::with_precision(52).is_err());
        assert!(PrecisionContext::with_precision(513).is_err());
        assert!(PrecisionContext::new(53, 0, 16).is_err());
        let ctx = PrecisionContext::default();
        assert!(ctx.is_double());
        assert_eq!(ctx.unit_roundoff(), f64::EPSILON / 2.0);
    }
}
