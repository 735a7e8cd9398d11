//! Band-limited zonal functions stored by their coefficients in the
//! L²-normalised zonal harmonic basis.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::capgeom::sphere_area;
use crate::error::{domain, Error, Result};
use crate::multipliers::ZonalMultiplier;
use crate::precision::PrecisionContext;
use crate::specfun::{check_dim, eigenvalue, harmonic_dim, legendre_all_theta, Degree};

/// f = Σ_ℓ a_ℓ Z_ℓ with Z_ℓ(θ) = w_ℓ P_{ℓ,d}(cos θ) of unit L² norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZonalField {
    pub d: usize,
    coeffs: Vec<f64>,
}

/// L² normalisation of the zonal harmonic: sqrt(ν(ℓ) / |S^{d-1}|).
pub fn zonal_weight(d: usize, ell: usize) -> f64 {
    let nu = harmonic_dim(Degree { d, ell }) as f64;
    (nu / sphere_area(d - 1)).sqrt()
}

impl ZonalField {
    pub fn new(d: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_dim(d)?;
        if coeffs.is_empty() {
            return Err(Error::Precondition("a field needs at least the constant term".into()));
        }
        if let Some(ell) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(domain("non-finite coefficient").at_degree(ell));
        }
        Ok(Self { d, coeffs })
    }

    /// a Z_ℓ, padded with zeros up to `band_limit`.
    pub fn single_degree(d: usize, band_limit: usize, ell: usize, a: f64) -> Result<Self> {
        if ell > band_limit {
            return Err(Error::Precondition(format!("degree {ell} above band limit {band_limit}")));
        }
        let mut c = vec![0.0; band_limit + 1];
        c[ell] = a;
        Self::new(d, c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn band_limit(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// (Σ (1 + sqrt(ℓ(ℓ+d-2)))^{2α} a_ℓ²)^{1/2}.
    pub fn sobolev_norm(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(ell, a)| (1.0 + eigenvalue(self.d, ell).sqrt()).powf(2.0 * alpha) * a * a)
            .sum();
        Ok(s.sqrt())
    }

    /// (Σ_{ℓ≥1} (ℓ(ℓ+d-2))^α a_ℓ²)^{1/2}.
    pub fn homogeneous_sobolev_norm(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(ell, a)| eigenvalue(self.d, ell).powf(alpha) * a * a)
            .sum();
        Ok(s.sqrt())
    }

    pub fn scale(&self, c: f64) -> ZonalField {
        ZonalField {
            d: self.d,
            coeffs: self.coeffs.iter().map(|a| c * a).collect(),
        }
    }

    /// Coefficients of (-Δ)^k f.
    pub fn laplace_power(&self, k: usize) -> ZonalField {
        ZonalField {
            d: self.d,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(ell, a)| eigenvalue(self.d, ell).powi(k as i32) * a)
                .collect(),
        }
    }

    pub fn apply(&self, m: &ZonalMultiplier) -> Result<ZonalField> {
        apply_zonal_multiplier(self, m)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "d": self.d, "L": self.band_limit(), "coeffs": self.coeffs })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            d: usize,
            #[serde(rename = "L")]
            band_limit: Option<usize>,
            coeffs: Vec<f64>,
        }
        let raw: Raw = serde_json::from_value(v.clone())?;
        if let Some(l) = raw.band_limit {
            if l + 1 != raw.coeffs.len() {
                return Err(Error::DimensionMismatch("coefficient count disagrees with L".into()));
            }
        }
        Self::new(raw.d, raw.coeffs)
    }

    pub fn to_csv(&self, header: &str) -> String {
        let mut out = String::from(header);
        out.push_str("ell,coeff\n");
        for (ell, a) in self.coeffs.iter().enumerate() {
            let _ = writeln!(out, "{ell},{}", crate::io::sci(*a));
        }
        out
    }

    pub fn from_csv(d: usize, text: &str) -> Result<Self> {
        let mut coeffs = Vec::new();
        for (i, row) in crate::io::parse_csv_rows(text).iter().enumerate() {
            let bad = || Error::Config(format!("malformed field row {}", i + 1));
            let ell: usize = row.first().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
            let a: f64 = row.get(1).and_then(|x| x.parse().ok()).ok_or_else(bad)?;
            if ell != coeffs.len() {
                return Err(Error::Config(format!("degrees must be consecutive from 0; found {ell}")));
            }
            coeffs.push(a);
        }
        Self::new(d, coeffs)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(domain(format!("smoothness α = {alpha} must be positive")));
    }
    Ok(())
}

/// Multiplies coefficient ℓ by m(ℓ).
pub fn apply_zonal_multiplier(f: &ZonalField, m: &ZonalMultiplier) -> Result<ZonalField> {
    if f.d != m.d {
        return Err(Error::DimensionMismatch(format!("field d = {}, multiplier d = {}", f.d, m.d)));
    }
    if m.band_limit() < f.band_limit() {
        return Err(Error::DimensionMismatch(format!(
            "multiplier covers ℓ ≤ {} but the field reaches {}",
            m.band_limit(),
            f.band_limit()
        )));
    }
    Ok(ZonalField {
        d: f.d,
        coeffs: f.coeffs.iter().zip(m.values()).map(|(a, v)| a * v).collect(),
    })
}

pub fn laplace_power(f: &ZonalField, k: usize) -> ZonalField {
    f.laplace_power(k)
}

/// f at polar angle θ from the pole.
pub fn evaluate(_ctx: &PrecisionContext, f: &ZonalField, theta: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(domain(format!("polar angle {theta} outside [0, π]")));
    }
    Ok(evaluate_unchecked(f, theta))
}

pub(crate) fn evaluate_unchecked(f: &ZonalField, theta: f64) -> f64 {
    let p = legendre_all_theta(f.d, f.band_limit(), theta);
    f.coeffs
        .iter()
        .enumerate()
        .map(|(ell, a)| a * zonal_weight(f.d, ell) * p[ell])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multipliers::{build_multiplier, MultiplierKind};

    #[test]
    fn parseval() {
        let ctx = PrecisionContext::default();
        for d in [2, 3, 5] {
            let f = ZonalField::new(d, vec![0.3, -1.0, 0.5, 0.0, 0.25, -0.125]).unwrap();
            let rule = ctx.rule();
            let mass = sphere_area(d - 2)
                * rule.integrate(0.0, PI, 16, |th| {
                    let v = evaluate(&ctx, &f, th).unwrap();
                    v * v * th.sin().powi(d as i32 - 2)
                });
            assert!((mass - f.l2_norm().powi(2)).abs() < 1e-12, "d = {d}");
        }
    }

    #[test]
    fn norms() {
        let f = ZonalField::new(3, vec![2.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(f.l2_norm(), 6f64.sqrt());
        // eigenvalues 2 and 12.
        let h = f.homogeneous_sobolev_norm(1.0).unwrap();
        assert!((h - 14f64.sqrt()).abs() < 1e-14);
        let s = f.sobolev_norm(0.5).unwrap();
        let expect = 4.0 + (1.0 + 2f64.sqrt()) + (1.0 + 12f64.sqrt());
        assert!((s - expect.sqrt()).abs() < 1e-14);
        assert!(f.sobolev_norm(0.0).is_err());
    }

    #[test]
    fn multiplier_application_checks_shape() {
        let ctx = PrecisionContext::default();
        let f = ZonalField::new(3, vec![1.0; 5]).unwrap();
        let short = build_multiplier(&ctx, 3, &MultiplierKind::Identity, 3).unwrap();
        assert!(matches!(apply_zonal_multiplier(&f, &short), Err(Error::DimensionMismatch(_))));
        let other = build_multiplier(&ctx, 4, &MultiplierKind::Identity, 6).unwrap();
        assert!(apply_zonal_multiplier(&f, &other).is_err());
        let id = build_multiplier(&ctx, 3, &MultiplierKind::Identity, 8).unwrap();
        assert_eq!(apply_zonal_multiplier(&f, &id).unwrap(), f);
    }

    #[test]
    fn serialization_roundtrip() {
        let f = ZonalField::new(4, vec![0.1, -2.5e-9, 3.0]).unwrap();
        assert_eq!(ZonalField::from_json(&f.to_json()).unwrap(), f);
        assert_eq!(ZonalField::from_csv(4, &f.to_csv("# x: y\n")).unwrap(), f);
        assert!(ZonalField::from_csv(4, "ell,coeff\n1,2.0\n").is_err());
    }

    #[test]
    fn cap_average_at_an_off_pole_point() {
        // On the circle the cap around angle φ is the arc [φ - t, φ + t].
        let ctx = PrecisionContext::default();
        let (ell, t, phi) = (6usize, 0.35, 1.1);
        let f = ZonalField::single_degree(2, ell, ell, 1.0).unwrap();
        let m = build_multiplier(&ctx, 2, &MultiplierKind::CapAverage { t }, ell).unwrap();
        let af = evaluate(&ctx, &f.apply(&m).unwrap(), phi).unwrap();
        let direct = ctx.rule().integrate(phi - t, phi + t, 8, |x| evaluate_unchecked(&f, x.abs())) / (2.0 * t);
        assert!((af - direct).abs() < 1e-13);
    }
}
