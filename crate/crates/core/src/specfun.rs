//! Normalised Gegenbauer polynomials P_{ℓ,d} (with P_{ℓ,d}(1) = 1), their
//! derivatives at the pole, Taylor remainders about s = 1 and the
//! Laplace–Heine main term.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::precision::{MpReal, PrecisionContext, Real, DOUBLE_BITS};

/// Spherical dimension parameter and polynomial degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Degree {
    pub d: usize,
    pub ell: usize,
}

impl Degree {
    pub fn new(d: usize, ell: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self { d, ell })
    }

    /// Eigenvalue of -Δ on degree-ℓ harmonics: ℓ(ℓ+d-2).
    pub fn eigenvalue(&self) -> f64 {
        eigenvalue(self.d, self.ell)
    }
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(domain(format!("dimension d = {d} must be at least 2")));
    }
    Ok(())
}

pub fn eigenvalue(d: usize, ell: usize) -> f64 {
    let l = ell as f64;
    l * (l + d as f64 - 2.0)
}

/// Γ(m/2) for m ≥ 1.
pub fn gamma_half(m: usize) -> f64 {
    assert!(m >= 1, "gamma_half needs a positive argument");
    let mut x = if m % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut k = if m % 2 == 0 { 2 } else { 1 };
    while k < m {
        x *= k as f64 / 2.0;
        k += 2;
    }
    x
}

/// Evaluates P_{ℓ,d}(s) at the context's working precision.
pub fn legendre_eval(ctx: &PrecisionContext, deg: Degree, s: f64) -> Result<f64> {
    let s = clamp_unit(s)?;
    if ctx.is_double() {
        Ok(legendre_value(deg.d, deg.ell, s))
    } else {
        let x = MpReal::from_f64(s, ctx.work_precision() as usize);
        Ok(legendre_generic(deg.d, deg.ell, &x).to_f64())
    }
}

fn clamp_unit(s: f64) -> Result<f64> {
    if !s.is_finite() || s.abs() > 1.0 + 1e-12 {
        return Err(domain(format!("argument {s} outside [-1, 1]")));
    }
    Ok(s.clamp(-1.0, 1.0))
}

/// Double-precision P_{ℓ,d}(s). d = 2 uses cos(ℓ arccos s).
pub fn legendre_value(d: usize, ell: usize, s: f64) -> f64 {
    if d == 2 {
        return (ell as f64 * s.clamp(-1.0, 1.0).acos()).cos();
    }
    legendre_generic(d, ell, &s)
}

/// Three-term recurrence for the normalised polynomials:
/// (k+d-2) p_{k+1} = (2k+d-2) s p_k - k p_{k-1}, with p_0 = 1, p_1 = s.
pub fn legendre_generic<T: Real>(d: usize, ell: usize, s: &T) -> T {
    let mut prev = s.lift(1.0);
    if ell == 0 {
        return prev;
    }
    let mut cur = s.clone();
    for k in 1..ell {
        let next = if d == 2 {
            s.lift(2.0) * s.clone() * cur.clone() - prev
        } else {
            let a = s.lift((2 * k + d - 2) as f64);
            let b = s.lift(k as f64);
            let c = s.lift((k + d - 2) as f64);
            (a * s.clone() * cur.clone() - b * prev) / c
        };
        prev = cur;
        cur = next;
    }
    cur
}

/// P_{0,d}(s), …, P_{L,d}(s) in one pass.
pub fn legendre_all(d: usize, band_limit: usize, s: f64) -> Vec<f64> {
    let s = s.clamp(-1.0, 1.0);
    let mut out = Vec::with_capacity(band_limit + 1);
    if d == 2 {
        let theta = s.acos();
        out.extend((0..=band_limit).map(|k| (k as f64 * theta).cos()));
        return out;
    }
    out.push(1.0);
    if band_limit == 0 {
        return out;
    }
    out.push(s);
    for k in 1..band_limit {
        let kf = k as f64;
        let df = d as f64;
        let next = ((2.0 * kf + df - 2.0) * s * out[k] - kf * out[k - 1]) / (kf + df - 2.0);
        out.push(next);
    }
    out
}

/// Like [`legendre_all`] but from the polar angle, which avoids the
/// arccos round trip for d = 2.
pub fn legendre_all_theta(d: usize, band_limit: usize, theta: f64) -> Vec<f64> {
    if d == 2 {
        return (0..=band_limit).map(|k| (k as f64 * theta).cos()).collect();
    }
    legendre_all(d, band_limit, theta.cos())
}

/// Ratio of consecutive derivatives at the pole:
/// P^{(k+1)}(1) / P^{(k)}(1) = (ℓ-k)(ℓ+k+d-2)/(2k+d-1).
fn deriv_ratio(d: usize, ell: usize, k: usize) -> f64 {
    let num = (ell - k) as f64 * (ell + k + d - 2) as f64;
    num / (2 * k + d - 1) as f64
}

/// k-th derivative of P_{ℓ,d} at s = 1, accumulated as a product of
/// the consecutive-derivative ratios.
pub fn legendre_deriv_at_one(deg: Degree, k: usize) -> Result<f64> {
    check_dim(deg.d)?;
    if k > deg.ell {
        return Ok(0.0);
    }
    let mut v = 1.0;
    for j in 0..k {
        v *= deriv_ratio(deg.d, deg.ell, j);
        if !v.is_finite() {
            return Err(Error::Overflow(format!(
                "P^({k})(1) for d = {}, ℓ = {} exceeds the double range",
                deg.d, deg.ell
            )));
        }
    }
    Ok(v)
}

/// Ratio c_{k+1}/c_k of the Taylor coefficients about s = 1 in the
/// variable u = 1 - s, c_k = (-1)^k P^{(k)}(1)/k!.
pub(crate) fn taylor_ratio(d: usize, ell: usize, k: usize) -> (f64, f64) {
    let num = (ell - k) as f64 * (ell + k + d - 2) as f64;
    let den = (2 * k + d - 1) as f64 * (k + 1) as f64;
    (-num, den)
}

/// c_k = (-1)^k P^{(k)}(1)/k!.
pub fn taylor_coefficient(d: usize, ell: usize, k: usize) -> Result<f64> {
    check_dim(d)?;
    if k > ell {
        return Ok(0.0);
    }
    let mut c = 1.0;
    for j in 0..k {
        let (num, den) = taylor_ratio(d, ell, j);
        c *= num / den;
        if !c.is_finite() {
            return Err(Error::Overflow(format!(
                "Taylor coefficient c_{k} for d = {d}, ℓ = {ell}"
            )));
        }
    }
    Ok(c)
}

/// A computed value together with an estimate of its absolute error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_err: f64,
}

/// R_n(s) = P(s) - Σ_{k≤n} c_k (1-s)^k.
pub fn legendre_taylor_remainder(ctx: &PrecisionContext, deg: Degree, n: usize, s: f64) -> Result<f64> {
    check_dim(deg.d)?;
    let s = clamp_unit(s)?;
    Ok(remainder_at(ctx.work_precision(), deg.d, deg.ell, n, 1.0 - s, None).value)
}

/// Remainder as a function of u = 1 - s (and optionally the angle θ with
/// u = 2 sin²(θ/2)), evaluated at `bits` of precision.
pub(crate) fn remainder_at(bits: u32, d: usize, ell: usize, n: usize, u: f64, theta: Option<f64>) -> Estimate {
    remainder_cached(bits, d, ell, n, u, theta, &mut None)
}

/// As [`remainder_at`], reusing a double-precision P_{ℓ,d}(1-u) across
/// calls at the same point.
pub(crate) fn remainder_cached(
    bits: u32,
    d: usize,
    ell: usize,
    n: usize,
    u: f64,
    theta: Option<f64>,
    p_cache: &mut Option<f64>,
) -> Estimate {
    if n >= ell || u == 0.0 {
        return Estimate { value: 0.0, abs_err: 0.0 };
    }
    if bits <= DOUBLE_BITS {
        let (value, abs_err) = remainder_kernel(d, ell, n, &u, || {
            *p_cache.get_or_insert_with(|| match (d, theta) {
                (2, Some(t)) => (ell as f64 * t).cos(),
                _ => legendre_value(d, ell, 1.0 - u),
            })
        });
        return Estimate { value, abs_err };
    }
    let prec = bits as usize;
    let um = MpReal::from_f64(u, prec);
    let (v, err) = remainder_kernel(d, ell, n, &um, || {
        let s = um.lift(1.0) - um.clone();
        legendre_generic(d, ell, &s)
    });
    let value = v.to_f64();
    Estimate {
        value,
        abs_err: err + value.abs() * f64::EPSILON / 2.0,
    }
}

/// Tail sum Σ_{k>n} c_k u^k when ℓ²u ≤ 1/4, otherwise direct subtraction
/// of the Taylor polynomial from P. Returns the value and an absolute
/// error estimate.
fn remainder_kernel<T: Real, F: FnOnce() -> T>(d: usize, ell: usize, n: usize, u: &T, legendre: F) -> (T, f64) {
    let eps = u.unit_roundoff();
    let uf = u.to_f64();
    let lf = ell as f64;
    let step = |term: T, k: usize| {
        let (num, den) = taylor_ratio(d, ell, k);
        term * u.lift(num) / u.lift(den) * u.clone()
    };
    if lf * lf * uf <= 0.25 {
        let mut term = u.lift(1.0);
        for k in 0..=n {
            term = step(term, k);
        }
        let mut sum = term.clone();
        let mut mag = term.abs().to_f64();
        let mut count = 1.0;
        for k in n + 1..ell {
            term = step(term, k);
            let tf = term.abs().to_f64();
            sum = sum + term.clone();
            mag += tf;
            count += 1.0;
            if tf <= 0.1 * eps * sum.abs().to_f64() {
                break;
            }
        }
        (sum, 4.0 * count * eps * mag)
    } else {
        let p = legendre();
        let mut term = u.lift(1.0);
        let mut poly = term.clone();
        let mut mag = 1.0;
        for k in 0..n {
            term = step(term, k);
            mag += term.abs().to_f64();
            poly = poly + term.clone();
        }
        let r = p - poly;
        let err = eps * ((lf + 1.0) * (lf + 1.0) + (n as f64 + 2.0) * mag);
        (r, err)
    }
}

/// Laplace–Heine main term of P_{ℓ,d}(cos θ) and whether θ lies in the
/// window [1/ℓ, π/4] where the expansion is uniform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Asymptotic {
    pub value: f64,
    pub in_window: bool,
}

/// K_d π^{-1/2} ℓ^{-(d-2)/2} sin^{-(d-2)/2}θ cos((ℓ+(d-2)/2)θ - (d-2)π/4)
/// with K_d = Γ((d-1)/2) 2^{(d-2)/2}.
pub fn legendre_asymptotic(deg: Degree, theta: f64) -> Result<Asymptotic> {
    let Degree { d, ell } = deg;
    if d < 3 {
        return Err(domain("the Laplace–Heine term is defined for d ≥ 3"));
    }
    if ell == 0 {
        return Err(domain("the Laplace–Heine term needs ℓ ≥ 1"));
    }
    if !(theta > 0.0 && theta < PI) {
        return Err(domain(format!("angle {theta} outside (0, π)")));
    }
    let h = (d as f64 - 2.0) / 2.0;
    let lf = ell as f64;
    let k_d = gamma_half(d - 1) * 2f64.powf(h);
    let amp = k_d / PI.sqrt() * (lf * theta.sin()).powf(-h);
    let value = amp * ((lf + h) * theta - h * PI / 2.0).cos();
    let in_window = theta >= 1.0 / lf && theta <= PI / 4.0;
    Ok(Asymptotic { value, in_window })
}

/// Dimension of the space of degree-ℓ spherical harmonics on S^{d-1}:
/// C(ℓ+d-1, d-1) - C(ℓ+d-3, d-1). Saturates at u128::MAX.
pub fn harmonic_dim(deg: Degree) -> u128 {
    let Degree { d, ell } = deg;
    let top = binomial(ell + d - 1, d - 1);
    let low = if ell >= 2 { binomial(ell + d - 3, d - 1) } else { 0 };
    top.saturating_sub(low)
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k {
        // c * (n-k+i) is divisible by i at every step.
        c = match c.checked_mul((n - k + i) as u128) {
            Some(v) => v / i as u128,
            None => return u128::MAX,
        };
    }
    c
}
