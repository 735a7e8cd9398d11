//! Zonal multipliers: cap averages, Taylor-remainder averages, the mixed
//! multipliers of the endpoint case, the isomorphisms T_k and Poisson
//! damping, plus the per-degree tables built from them.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capgeom::{cap_moment, check_radius, panel_count, weighted_integral_between};
use crate::error::{domain, Error, Result};
use crate::precision::{PrecisionContext, DOUBLE_BITS};
use crate::quad::KahanSum;
use crate::specfun::{
    check_dim, eigenvalue, legendre_generic, legendre_value, remainder_at, taylor_coefficient,
    taylor_ratio,
};
use crate::precision::MpReal;
use crate::precision::Real;

/// Estimated relative error above which remainder integrals are redone at
/// twice the precision.
pub const ESCALATION_TOLERANCE: f64 = 1e-8;
pub const MAX_ESCALATIONS: u32 = 4;

/// m_{ℓ,t}: the cap average of P_{ℓ,d}(ξ·η) over a cap of radius t.
pub fn avg_multiplier(ctx: &PrecisionContext, d: usize, ell: usize, t: f64) -> Result<f64> {
    check_dim(d)?;
    check_radius(t)?;
    if ell == 0 {
        return Ok(1.0);
    }
    let panels = panel_count(ctx, Some(ell), t);
    let c = 1.0 / crate::capgeom::cap_weight_integral(ctx, d, t);
    let integral = if ctx.is_double() {
        weighted_integral_between(ctx, d, 0.0, t, panels, |p| match d {
            2 => (ell as f64 * p.theta).cos(),
            _ => legendre_value(d, ell, p.s),
        })
    } else {
        let prec = ctx.work_precision() as usize;
        weighted_integral_between(ctx, d, 0.0, t, panels, |p| {
            let u = MpReal::from_f64(p.u, prec);
            let s = u.lift(1.0) - u;
            legendre_generic(d, ell, &s).to_f64()
        })
    };
    Ok(c * integral)
}

/// Result of a remainder integral with the precision that produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplierEstimate {
    pub value: f64,
    pub rel_err: f64,
    pub bits: u32,
}

/// ∫_0^t R_n(cos θ) sin^{d-2}θ dθ at a given precision, with the absolute
/// error contributed by the pointwise remainders.
fn remainder_integral(ctx: &PrecisionContext, d: usize, ell: usize, n: usize, t: f64, bits: u32) -> (f64, f64) {
    let panels = panel_count(ctx, Some(ell), t);
    let mut err = 0.0;
    let mut mag = 0.0;
    let mut acc = KahanSum::default();
    ctx.rule().for_each_node(0.0, t, panels, |theta, w| {
        let p = crate::capgeom::CapPoint::new(d, theta);
        let r = remainder_at(bits, d, ell, n, p.u, Some(p.theta));
        let ww = w * p.weight;
        acc.add(ww * r.value);
        err += ww * r.abs_err;
        mag += (ww * r.value).abs();
    });
    (acc.value(), err + mag * f64::EPSILON)
}

/// M^{(n)}_{ℓ,t}: cap average of the Taylor remainder R_n, with automatic
/// precision escalation.
pub fn taylor_multiplier_estimate(ctx: &PrecisionContext, d: usize, ell: usize, t: f64, n: usize) -> Result<MultiplierEstimate> {
    taylor_multiplier_with_tolerance(ctx, d, ell, t, n, ESCALATION_TOLERANCE)
}

pub(crate) fn taylor_multiplier_with_tolerance(
    ctx: &PrecisionContext,
    d: usize,
    ell: usize,
    t: f64,
    n: usize,
    tol: f64,
) -> Result<MultiplierEstimate> {
    check_dim(d)?;
    check_radius(t)?;
    let mut bits = ctx.work_precision().max(DOUBLE_BITS);
    if n >= ell {
        return Ok(MultiplierEstimate { value: 0.0, rel_err: 0.0, bits });
    }
    let c = 1.0 / crate::capgeom::cap_weight_integral(ctx, d, t);
    let mut attempt = 0;
    loop {
        let (f, err) = remainder_integral(ctx, d, ell, n, t, bits);
        let rel_err = if f == 0.0 { f64::INFINITY } else { err / f.abs() };
        if rel_err <= tol || attempt == MAX_ESCALATIONS {
            return Ok(MultiplierEstimate { value: c * f, rel_err, bits });
        }
        attempt += 1;
        bits *= 2;
    }
}

pub fn taylor_multiplier(ctx: &PrecisionContext, d: usize, ell: usize, t: f64, n: usize) -> Result<f64> {
    Ok(taylor_multiplier_estimate(ctx, d, ell, t, n)?.value)
}

/// N^{(n)}_{ℓ,t} = M^{(n-1)} - c_n μ_n m, written as M^{(n)} - c_n μ_n M^{(0)}
/// so that no O(1) quantities cancel.
pub fn mixed_multiplier(ctx: &PrecisionContext, d: usize, ell: usize, t: f64, n: usize) -> Result<f64> {
    check_dim(d)?;
    check_radius(t)?;
    if n == 0 {
        return Err(domain("mixed multipliers need n ≥ 1"));
    }
    if ell == 0 {
        return Ok(0.0);
    }
    let mn = taylor_multiplier(ctx, d, ell, t, n)?;
    let m0 = taylor_multiplier(ctx, d, ell, t, 0)?;
    let cn = taylor_coefficient(d, ell, n)?;
    let mu = cap_moment(ctx, d, t, n)? / 2f64.powi(n as i32);
    Ok(mn - cn * mu * m0)
}

/// c_{k,ℓ} = (-1)^k P^{(k)}_{ℓ,d}(1)/k!.
pub fn taylor_coeff(d: usize, ell: usize, k: usize) -> Result<f64> {
    taylor_coefficient(d, ell, k)
}

/// β_{k,ℓ} = c_{k,ℓ} / (2^k (ℓ(ℓ+d-2))^k), the multiplier of T_k.
pub fn t_k_multiplier(d: usize, ell: usize, k: usize) -> Result<f64> {
    check_dim(d)?;
    if ell == 0 {
        return Err(domain("T_k is not defined on constants (ℓ = 0)"));
    }
    if k > ell {
        return Ok(0.0);
    }
    let lam = 2.0 * eigenvalue(d, ell);
    let mut b = 1.0;
    for j in 0..k {
        let (num, den) = taylor_ratio(d, ell, j);
        b *= num / den / lam;
    }
    Ok(b)
}

/// r^ℓ.
pub fn poisson_multiplier(ell: usize, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(domain(format!("Poisson parameter {r} outside (0, 1)")));
    }
    Ok(r.powi(ell as i32))
}

/// Which family a multiplier table belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiplierKind {
    CapAverage { t: f64 },
    TaylorRemainder { t: f64, n: usize },
    Mixed { t: f64, n: usize },
    IsomorphismT { k: usize },
    Poisson { r: f64 },
    Identity,
    Custom,
}

impl MultiplierKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::CapAverage { .. } => "cap_average",
            Self::TaylorRemainder { .. } => "taylor_remainder",
            Self::Mixed { .. } => "mixed",
            Self::IsomorphismT { .. } => "isomorphism_t",
            Self::Poisson { .. } => "poisson",
            Self::Identity => "identity",
            Self::Custom => "custom",
        }
    }

    /// Value of the multiplier at one degree.
    pub fn at_degree(&self, ctx: &PrecisionContext, d: usize, ell: usize) -> Result<f64> {
        match *self {
            Self::CapAverage { t } => avg_multiplier(ctx, d, ell, t),
            Self::TaylorRemainder { t, n } => taylor_multiplier(ctx, d, ell, t, n),
            Self::Mixed { t, n } => mixed_multiplier(ctx, d, ell, t, n),
            Self::IsomorphismT { k } if ell == 0 => {
                check_dim(d)?;
                let _ = k;
                Ok(0.0)
            }
            Self::IsomorphismT { k } => t_k_multiplier(d, ell, k),
            Self::Poisson { r } => poisson_multiplier(ell, r),
            Self::Identity => Ok(1.0),
            Self::Custom => Err(Error::Precondition(
                "custom multipliers are built from explicit values".into(),
            )),
        }
    }
}

/// A zonal multiplier tabulated on degrees 0..=L.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZonalMultiplier {
    pub descriptor: MultiplierKind,
    pub d: usize,
    values: Vec<f64>,
}

impl ZonalMultiplier {
    pub fn custom(d: usize, values: Vec<f64>) -> Result<Self> {
        check_dim(d)?;
        if values.is_empty() {
            return Err(Error::Precondition("a multiplier needs at least one degree".into()));
        }
        if let Some(ell) = values.iter().position(|v| !v.is_finite()) {
            return Err(domain("non-finite multiplier value").at_degree(ell));
        }
        Ok(Self { descriptor: MultiplierKind::Custom, d, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn band_limit(&self) -> usize {
        self.values.len() - 1
    }

    pub fn at(&self, ell: usize) -> f64 {
        self.values[ell]
    }

    pub fn to_csv(&self, header: &str) -> String {
        let mut out = String::from(header);
        out.push_str("ell,value\n");
        for (ell, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{ell},{}", crate::io::sci(*v));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "descriptor": self.descriptor,
            "d": self.d,
            "L": self.band_limit(),
            "values": self.values,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            descriptor: MultiplierKind,
            d: usize,
            #[serde(rename = "L")]
            band_limit: usize,
            values: Vec<f64>,
        }
        let raw: Raw = serde_json::from_value(v.clone())?;
        if raw.values.len() != raw.band_limit + 1 {
            return Err(Error::DimensionMismatch("values length disagrees with L".into()));
        }
        let mut m = Self::custom(raw.d, raw.values)?;
        m.descriptor = raw.descriptor;
        Ok(m)
    }
}

/// Tabulates a multiplier family on 0..=L. Degrees are independent and are
/// evaluated in parallel; the first failing degree is reported.
pub fn build_multiplier(ctx: &PrecisionContext, d: usize, kind: &MultiplierKind, band_limit: usize) -> Result<ZonalMultiplier> {
    check_dim(d)?;
    let values: Vec<Result<f64>> = (0..=band_limit)
        .into_par_iter()
        .map(|ell| kind.at_degree(ctx, d, ell).map_err(|e| e.at_degree(ell)))
        .collect();
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(ZonalMultiplier { descriptor: kind.clone(), d, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn degree_one_cap_average() {
        let ctx = PrecisionContext::default();
        for &t in &[1e-3, 0.3, 1.0, 2.5, PI] {
            let m = avg_multiplier(&ctx, 3, 1, t).unwrap();
            assert!((m - (1.0 + t.cos()) / 2.0).abs() < 1e-12);
        }
        // d = 2: sin(ℓt)/(ℓt).
        let m = avg_multiplier(&ctx, 2, 5, 0.4).unwrap();
        assert!((m - (2.0f64).sin() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn constants_are_fixed() {
        let ctx = PrecisionContext::default();
        assert_eq!(avg_multiplier(&ctx, 4, 0, 0.2).unwrap(), 1.0);
        assert_eq!(taylor_multiplier(&ctx, 4, 0, 0.2, 0).unwrap(), 0.0);
        assert_eq!(mixed_multiplier(&ctx, 4, 0, 0.2, 1).unwrap(), 0.0);
    }

    #[test]
    fn first_remainder_is_average_minus_one() {
        let ctx = PrecisionContext::default();
        for (d, ell, t) in [(3, 7, 0.5), (5, 30, 0.05), (2, 12, 2.0)] {
            let m = avg_multiplier(&ctx, d, ell, t).unwrap();
            let r = taylor_multiplier(&ctx, d, ell, t, 0).unwrap();
            assert!((r - (m - 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn remainder_is_zero_when_polynomial_is_exact() {
        let ctx = PrecisionContext::default();
        assert_eq!(taylor_multiplier(&ctx, 3, 2, 0.4, 2).unwrap(), 0.0);
        assert_eq!(taylor_multiplier(&ctx, 3, 1, 0.4, 1).unwrap(), 0.0);
    }

    #[test]
    fn t1_multiplier_is_constant() {
        for ell in 1..50 {
            assert!((t_k_multiplier(3, ell, 1).unwrap() + 0.25).abs() < 1e-15);
            assert!((t_k_multiplier(2, ell, 1).unwrap() + 0.5).abs() < 1e-15);
        }
        assert!(t_k_multiplier(3, 0, 1).is_err());
        assert_eq!(t_k_multiplier(3, 1, 2).unwrap(), 0.0);
    }

    #[test]
    fn poisson() {
        assert_eq!(poisson_multiplier(3, 0.5).unwrap(), 0.125);
        assert!(poisson_multiplier(3, 1.0).is_err());
    }

    #[test]
    fn escalation_is_triggered_by_tight_tolerance() {
        let ctx = PrecisionContext::default();
        let lo = taylor_multiplier_estimate(&ctx, 3, 40, 0.3, 1).unwrap();
        assert_eq!(lo.bits, 53);
        let hi = taylor_multiplier_with_tolerance(&ctx, 3, 40, 0.3, 1, 1e-20).unwrap();
        assert!(hi.bits > 53);
        assert!((lo.value - hi.value).abs() < 1e-12 * hi.value.abs());
    }

    #[test]
    fn table_and_json_roundtrip() {
        let ctx = PrecisionContext::default();
        let m = build_multiplier(&ctx, 3, &MultiplierKind::CapAverage { t: 0.3 }, 6).unwrap();
        assert_eq!(m.band_limit(), 6);
        assert_eq!(m.at(0), 1.0);
        assert!(m.values().iter().all(|v| v.abs() <= 1.0 + 1e-12));
        let back = ZonalMultiplier::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let csv = m.to_csv("");
        assert_eq!(csv.lines().count(), 8);
        assert!(csv.starts_with("ell,value\n0,1.0000000000000000e0"));
    }

    #[test]
    fn failing_degree_is_reported() {
        let ctx = PrecisionContext::default();
        let err = build_multiplier(&ctx, 3, &MultiplierKind::Mixed { t: 0.3, n: 0 }, 4).unwrap_err();
        assert!(matches!(err, Error::AtDegree { ell: 0, .. }), "{err}");
    }
}
