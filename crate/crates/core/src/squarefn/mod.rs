//! Square functions built from cap averages: per-degree profiles, the
//! coefficient-side norm, companion functions and the pointwise route.

mod grid;
mod pointwise;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::field::ZonalField;
use crate::multipliers::{build_multiplier, MultiplierKind, MAX_ESCALATIONS};
use crate::precision::{PrecisionContext, DOUBLE_BITS};
use crate::specfun::{check_dim, taylor_coefficient};

pub(crate) use grid::{cap_columns, DyadicGrid};
pub use pointwise::{square_norm_by_closure, square_pointwise, PointwiseSquare};

/// Target relative error for profile integrals; larger estimates trigger a
/// recomputation with doubled precision.
pub const PROFILE_TOLERANCE: f64 = 1e-8;

/// Cap radius below which the t-integral is replaced by its leading term,
/// relative to 1/ℓ.
const TAIL_SCALE: f64 = 1e-5;

/// Which of the two degree profiles applies to a smoothness index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    /// ∫ |M^{(n)}_{ℓ,t}|² t^{-2α-1} dt for 2n < α < 2n+2
    Remainder,
    /// ∫ |N^{(n)}_{ℓ,t}|² t^{-4n-1} dt for α = 2n
    Endpoint,
}

/// Splits α into the Taylor order n = ⌊α/2⌋ and the profile family.
pub fn classify_alpha(alpha: f64) -> Result<(usize, ProfileKind)> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(domain(format!("smoothness α = {alpha} must be positive")));
    }
    let n = (alpha / 2.0).floor() as usize;
    if alpha == 2.0 * n as f64 {
        Ok((n, ProfileKind::Endpoint))
    } else {
        Ok((n, ProfileKind::Remainder))
    }
}

/// Profile value with its estimated relative error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileValue {
    pub value: f64,
    pub rel_err: f64,
    pub bits: u32,
}

/// I_{α,n}(ℓ) = ∫_0^π |M^{(n)}_{ℓ,t}|² t^{-2α-1} dt.
#[allow(non_snake_case)]
pub fn profile_I(ctx: &PrecisionContext, d: usize, ell: usize, alpha: f64, n: usize) -> Result<f64> {
    Ok(profile_remainder(ctx, d, ell, alpha, n)?.value)
}

/// J_n(ℓ) = ∫_0^π |N^{(n)}_{ℓ,t}|² t^{-4n-1} dt.
#[allow(non_snake_case)]
pub fn profile_J(ctx: &PrecisionContext, d: usize, ell: usize, n: usize) -> Result<f64> {
    Ok(profile_endpoint(ctx, d, ell, n)?.value)
}

/// Profile for a smoothness index, choosing I or J.
pub fn profile_value(ctx: &PrecisionContext, d: usize, ell: usize, alpha: f64) -> Result<ProfileValue> {
    match classify_alpha(alpha)? {
        (n, ProfileKind::Remainder) => profile_remainder(ctx, d, ell, alpha, n),
        (n, ProfileKind::Endpoint) => profile_endpoint(ctx, d, ell, n),
    }
}

/// Degrees on which the profile vanishes identically: the Taylor
/// polynomial of order n reproduces P_{ℓ,d} exactly when ℓ ≤ n, and the
/// endpoint multiplier needs ℓ ≥ n.
pub fn profile_vanishes(ell: usize, alpha: f64) -> Result<bool> {
    Ok(match classify_alpha(alpha)? {
        (n, ProfileKind::Remainder) => ell <= n,
        (n, ProfileKind::Endpoint) => ell < n || ell == 0,
    })
}

pub(crate) fn profile_remainder(ctx: &PrecisionContext, d: usize, ell: usize, alpha: f64, n: usize) -> Result<ProfileValue> {
    check_dim(d)?;
    let lo = 2.0 * n as f64;
    if !(alpha > lo) {
        return Err(domain(format!("α = {alpha} must exceed 2n = {lo}")));
    }
    if alpha >= lo + 2.0 {
        return Err(domain(format!(
            "α = {alpha} ≥ 2(n+1): the t-integral diverges at 0 for order n = {n}"
        )));
    }
    let bits = ctx.work_precision();
    if ell <= n {
        return Ok(ProfileValue { value: 0.0, rel_err: 0.0, bits });
    }
    let c_next = taylor_coefficient(d, ell, n + 1)?;
    let df = d as f64;
    let lead = c_next * (df - 1.0) / ((2.0 * n as f64 + df + 1.0) * 2f64.powi(n as i32 + 1));
    let gamma = 4.0 * (n as f64 + 1.0) - 2.0 * alpha;
    let grid = DyadicGrid::new(ctx, ell, TAIL_SCALE / ell as f64);
    escalate(bits, |b| {
        let cols = cap_columns(ctx, d, ell, &[n], &[], &grid.nodes, b);
        weighted_square(&grid, &cols.remainders[0], &cols.errors[0], alpha, lead, gamma)
    })
}

pub(crate) fn profile_endpoint(ctx: &PrecisionContext, d: usize, ell: usize, n: usize) -> Result<ProfileValue> {
    check_dim(d)?;
    if n == 0 {
        return Err(domain("the endpoint profile needs n ≥ 1"));
    }
    let bits = ctx.work_precision();
    if ell < n || ell == 0 {
        return Ok(ProfileValue { value: 0.0, rel_err: 0.0, bits });
    }
    let alpha = 2.0 * n as f64;
    let cn = taylor_coefficient(d, ell, n)?;
    let c1 = taylor_coefficient(d, ell, 1)?;
    let c_next = taylor_coefficient(d, ell, n + 1)?;
    let df = d as f64;
    let nf = n as f64;
    let lead = (c_next * (df - 1.0) / (2.0 * nf + df + 1.0)
        - cn * c1 * (df - 1.0) * (df - 1.0) / ((2.0 * nf + df - 1.0) * (df + 1.0)))
        / 2f64.powi(n as i32 + 1);
    let grid = DyadicGrid::new(ctx, ell, TAIL_SCALE / ell as f64);
    escalate(bits, |b| {
        let cols = cap_columns(ctx, d, ell, &[n, 0], &[n], &grid.nodes, b);
        let (mn, m0, mu) = (&cols.remainders[0], &cols.remainders[1], &cols.moments[0]);
        let vals: Vec<f64> = (0..grid.nodes.len()).map(|i| mn[i] - cn * mu[i] * m0[i]).collect();
        let errs: Vec<f64> = (0..grid.nodes.len())
            .map(|i| cols.errors[0][i] + (cn * mu[i]).abs() * cols.errors[1][i])
            .collect();
        weighted_square(&grid, &vals, &errs, alpha, lead, 4.0)
    })
}

fn escalate<F: FnMut(u32) -> (f64, f64)>(start: u32, mut run: F) -> Result<ProfileValue> {
    let mut bits = start.max(DOUBLE_BITS);
    for attempt in 0..=MAX_ESCALATIONS {
        let (value, rel_err) = run(bits);
        if !value.is_finite() {
            return Err(Error::Overflow("profile integral is not finite".into()));
        }
        if rel_err <= PROFILE_TOLERANCE || attempt == MAX_ESCALATIONS {
            return Ok(ProfileValue { value, rel_err, bits });
        }
        bits *= 2;
    }
    unreachable!("the loop returns on its last attempt")
}

/// Σ w_i v_i² t_i^{-2α-1} plus the analytic contribution of (0, t_min)
/// where v(t) ≈ lead t^{2n+2}. Returns the value and its estimated
/// relative error from the pointwise error bounds.
fn weighted_square(grid: &DyadicGrid, vals: &[f64], errs: &[f64], alpha: f64, lead: f64, gamma: f64) -> (f64, f64) {
    let mut acc = crate::quad::KahanSum::default();
    let mut err = 0.0;
    for ((&t, &w), (&v, &e)) in grid.nodes.iter().zip(&grid.weights).zip(vals.iter().zip(errs)) {
        let scale = t.powf(-alpha - 0.5);
        let x = v * scale;
        acc.add(w * x * x);
        err += w * 2.0 * x.abs() * e * scale;
    }
    let tail = lead * lead * grid.t_min.powf(gamma) / gamma;
    acc.add(tail);
    let value = acc.value();
    (value, err / value + 1e-15)
}

/// One profile entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub ell: usize,
    pub value: f64,
    /// value / ℓ^{2α}
    pub ratio: f64,
    pub rel_err: f64,
}

/// Profile values of one (d, α) over a set of degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareProfile {
    pub d: usize,
    pub alpha: f64,
    pub n: usize,
    pub kind: ProfileKind,
    pub entries: Vec<ProfileEntry>,
}

impl SquareProfile {
    pub fn compute(ctx: &PrecisionContext, d: usize, alpha: f64, ells: &[usize]) -> Result<Self> {
        check_dim(d)?;
        let (n, kind) = classify_alpha(alpha)?;
        let entries: Vec<Result<ProfileEntry>> = ells
            .par_iter()
            .map(|&ell| {
                let p = profile_value(ctx, d, ell, alpha).map_err(|e| e.at_degree(ell))?;
                let ratio = if ell == 0 { 0.0 } else { p.value / (ell as f64).powf(2.0 * alpha) };
                Ok(ProfileEntry { ell, value: p.value, ratio, rel_err: p.rel_err })
            })
            .collect();
        let entries = entries.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(Self { d, alpha, n, kind, entries })
    }

    pub fn value_at(&self, ell: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.ell == ell).map(|e| e.value)
    }

    pub fn to_csv(&self, header: &str) -> String {
        let mut out = String::from(header);
        out.push_str("ell,value,ratio\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{},{}", e.ell, crate::io::sci(e.value), crate::io::sci(e.ratio));
        }
        out
    }

    /// Two columns (log ℓ, log value) for degrees with a positive value.
    pub fn plot_data(&self, header: &str) -> String {
        let mut out = String::from(header);
        out.push_str("log_ell,log_value\n");
        for e in self.entries.iter().filter(|e| e.ell > 0 && e.value > 0.0) {
            let _ = writeln!(out, "{},{}", crate::io::sci((e.ell as f64).ln()), crate::io::sci(e.value.ln()));
        }
        out
    }
}

/// g_k = T_k((-Δ)^k f) for k = 1..=n, n = ⌊α/2⌋.
pub fn companion_functions(f: &ZonalField, alpha: f64) -> Result<Vec<ZonalField>> {
    let (n, _) = classify_alpha(alpha)?;
    let ctx = PrecisionContext::default();
    (1..=n)
        .map(|k| {
            let t = build_multiplier(&ctx, f.d, &MultiplierKind::IsomorphismT { k }, f.band_limit())?;
            f.laplace_power(k).apply(&t)
        })
        .collect()
}

/// Profiles at degrees 1..=L for the coefficient-side norm.
pub fn degree_profiles(ctx: &PrecisionContext, d: usize, alpha: f64, band_limit: usize) -> Result<SquareProfile> {
    let ells: Vec<usize> = (1..=band_limit).collect();
    SquareProfile::compute(ctx, d, alpha, &ells)
}

/// ‖S_α f‖ from the coefficients: (Σ_{ℓ≥1} a_ℓ² profile(ℓ))^{1/2}.
pub fn square_norm(ctx: &PrecisionContext, f: &ZonalField, alpha: f64) -> Result<f64> {
    let prof = degree_profiles(ctx, f.d, alpha, f.band_limit())?;
    square_norm_with(f, &prof)
}

/// Coefficient-side norm from precomputed profiles.
pub fn square_norm_with(f: &ZonalField, prof: &SquareProfile) -> Result<f64> {
    if prof.d != f.d {
        return Err(Error::DimensionMismatch("profile and field dimensions differ".into()));
    }
    let mut s = 0.0;
    for (ell, a) in f.coeffs().iter().enumerate().skip(1) {
        if *a == 0.0 {
            continue;
        }
        let v = prof
            .value_at(ell)
            .ok_or_else(|| Error::DimensionMismatch(format!("no profile value at degree {ell}")))?;
        s += a * a * v;
    }
    Ok(s.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_classification() {
        assert_eq!(classify_alpha(0.5).unwrap(), (0, ProfileKind::Remainder));
        assert_eq!(classify_alpha(2.0).unwrap(), (1, ProfileKind::Endpoint));
        assert_eq!(classify_alpha(3.0).unwrap(), (1, ProfileKind::Remainder));
        assert_eq!(classify_alpha(4.0).unwrap(), (2, ProfileKind::Endpoint));
        assert!(classify_alpha(0.0).is_err());
    }

    #[test]
    fn integrability_is_enforced() {
        let ctx = PrecisionContext::default();
        assert!(profile_I(&ctx, 3, 4, 2.0, 0).is_err());
        assert!(profile_I(&ctx, 3, 4, 1.0, 1).is_err());
        assert!(profile_J(&ctx, 3, 4, 0).is_err());
    }

    #[test]
    fn vanishing_degrees() {
        let ctx = PrecisionContext::default();
        assert_eq!(profile_I(&ctx, 3, 1, 3.0, 1).unwrap(), 0.0);
        assert!(profile_I(&ctx, 3, 2, 3.0, 1).unwrap() > 0.0);
        assert_eq!(profile_J(&ctx, 3, 1, 2).unwrap(), 0.0);
        assert!(profile_J(&ctx, 3, 2, 2).unwrap() > 0.0);
        assert!(profile_vanishes(1, 3.0).unwrap());
        assert!(!profile_vanishes(2, 3.0).unwrap());
    }

    #[test]
    fn degenerate_alpha_stays_finite() {
        let ctx = PrecisionContext::default();
        for n in 0..2 {
            let lo = profile_I(&ctx, 3, 5, 2.0 * n as f64 + 1e-6, n).unwrap();
            let hi = profile_I(&ctx, 3, 5, 2.0 * n as f64 + 2.0 - 1e-6, n).unwrap();
            assert!(lo.is_finite() && lo > 0.0);
            assert!(hi.is_finite() && hi > 0.0);
        }
    }

    #[test]
    fn companions_for_single_degree() {
        let f = ZonalField::single_degree(3, 6, 4, 2.0).unwrap();
        let g = companion_functions(&f, 3.0).unwrap();
        assert_eq!(g.len(), 1);
        // β_1 = -1/4 on S², eigenvalue 20.
        assert!((g[0].coeffs()[4] - (-0.25 * 20.0 * 2.0)).abs() < 1e-13);
        assert!(companion_functions(&f, 1.5).unwrap().is_empty());
    }
}
