//! Spherical caps: measures, normalising constants, moments and the
//! polar-angle quadrature behind every cap average.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::precision::PrecisionContext;
use crate::quad::KahanSum;
use crate::specfun::{check_dim, gamma_half};

/// Surface area of the unit sphere S^m ⊂ R^{m+1}.
pub fn sphere_area(m: usize) -> f64 {
    2.0 * PI.powf((m + 1) as f64 / 2.0) / gamma_half(m + 1)
}

/// A quadrature abscissa expressed in all the coordinates the integrands use.
#[derive(Clone, Copy, Debug)]
pub struct CapPoint {
    pub theta: f64,
    /// cos θ
    pub s: f64,
    /// 1 - cos θ = 2 sin²(θ/2), computed without cancellation
    pub u: f64,
    /// sin^{d-2} θ
    pub weight: f64,
}

impl CapPoint {
    pub fn new(d: usize, theta: f64) -> Self {
        let h = (0.5 * theta).sin();
        Self {
            theta,
            s: theta.cos(),
            u: 2.0 * h * h,
            weight: theta.sin().powi(d as i32 - 2),
        }
    }
}

pub(crate) fn check_radius(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= PI) {
        return Err(domain(format!("cap radius {t} outside (0, π]")));
    }
    Ok(())
}

/// Panel count for an integrand of polynomial degree `ell` in cos θ over
/// [0, t]: enough to resolve the oscillation, never fewer than the
/// context's base count.
pub fn panel_count(ctx: &PrecisionContext, ell_hint: Option<usize>, t: f64) -> usize {
    let base = ctx.quad_panels();
    match ell_hint {
        Some(ell) => base.max((2.0 * ell as f64 * t / PI).ceil() as usize + 4),
        None => base,
    }
}

/// ∫_a^b g(θ) sin^{d-2}θ dθ with g given on quadrature points.
pub fn weighted_integral_between<F: FnMut(&CapPoint) -> f64>(
    ctx: &PrecisionContext,
    d: usize,
    a: f64,
    b: f64,
    panels: usize,
    mut g: F,
) -> f64 {
    let mut acc = KahanSum::default();
    ctx.rule().for_each_node(a, b, panels, |theta, w| {
        let p = CapPoint::new(d, theta);
        acc.add(w * p.weight * g(&p));
    });
    acc.value()
}

/// ∫_0^t g(cos θ) sin^{d-2}θ dθ.
pub fn weighted_integral<F: Fn(f64) -> f64>(
    ctx: &PrecisionContext,
    d: usize,
    t: f64,
    ell_hint: Option<usize>,
    g: F,
) -> Result<f64> {
    check_dim(d)?;
    check_radius(t)?;
    let panels = panel_count(ctx, ell_hint, t);
    Ok(weighted_integral_between(ctx, d, 0.0, t, panels, |p| g(p.s)))
}

/// ∫_0^t sin^{d-2}θ dθ.
pub(crate) fn cap_weight_integral(ctx: &PrecisionContext, d: usize, t: f64) -> f64 {
    if d == 2 {
        return t;
    }
    weighted_integral_between(ctx, d, 0.0, t, ctx.quad_panels(), |_| 1.0)
}

/// Surface measure of a geodesic cap of radius t on S^{d-1}.
pub fn cap_measure(ctx: &PrecisionContext, d: usize, t: f64) -> Result<f64> {
    check_dim(d)?;
    check_radius(t)?;
    Ok(sphere_area(d - 2) * cap_weight_integral(ctx, d, t))
}

/// C_{t,d} = 1 / ∫_0^t sin^{d-2}θ dθ, the factor turning the polar
/// integral into a cap average.
pub fn cap_norm_const(ctx: &PrecisionContext, d: usize, t: f64) -> Result<f64> {
    check_dim(d)?;
    check_radius(t)?;
    Ok(1.0 / cap_weight_integral(ctx, d, t))
}

/// Cap average of (2 - 2cos θ)^k = |ξ-η|^{2k}.
pub fn cap_moment(ctx: &PrecisionContext, d: usize, t: f64, k: usize) -> Result<f64> {
    check_dim(d)?;
    check_radius(t)?;
    let c = 1.0 / cap_weight_integral(ctx, d, t);
    let panels = ctx.quad_panels();
    let m = weighted_integral_between(ctx, d, 0.0, t, panels, |p| (2.0 * p.u).powi(k as i32));
    Ok(c * m)
}

/// Cap quantities bundled for one (d, t).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapGeometry {
    pub d: usize,
    pub t: f64,
    pub cap_measure: f64,
    pub norm_const: f64,
}

impl CapGeometry {
    pub fn new(ctx: &PrecisionContext, d: usize, t: f64) -> Result<Self> {
        check_dim(d)?;
        check_radius(t)?;
        let w = cap_weight_integral(ctx, d, t);
        Ok(Self {
            d,
            t,
            cap_measure: sphere_area(d - 2) * w,
            norm_const: 1.0 / w,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert_eq!(sphere_area(0), 2.0);
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn cap_measure_closed_forms() {
        let ctx = PrecisionContext::default();
        let t = 0.7;
        assert!((cap_measure(&ctx, 2, t).unwrap() - 2.0 * t).abs() < 1e-15);
        let m3 = cap_measure(&ctx, 3, t).unwrap();
        assert!((m3 - 2.0 * PI * (1.0 - t.cos())).abs() < 1e-14);
        // Whole sphere.
        let full = cap_measure(&ctx, 5, PI).unwrap();
        assert!((full - sphere_area(4)).abs() < 1e-12 * full);
    }

    #[test]
    fn normalisation_closure() {
        let ctx = PrecisionContext::default();
        for d in 2..7 {
            for &t in &[1e-4, 0.1, 1.0, 3.0] {
                let c = cap_norm_const(&ctx, d, t).unwrap();
                let one = c * weighted_integral(&ctx, d, t, None, |_| 1.0).unwrap();
                assert!((one - 1.0).abs() < 1e-12);
                let g = CapGeometry::new(&ctx, d, t).unwrap();
                assert!((g.norm_const * g.cap_measure - sphere_area(d - 2)).abs() < 1e-12 * sphere_area(d - 2));
            }
        }
    }

    #[test]
    fn moments_for_d3() {
        // d = 3: average of (2u)^k over the cap is (2(1 - cos t))^k / (k+1).
        let ctx = PrecisionContext::default();
        for &t in &[1e-3f64, 0.5, 2.0] {
            let u = 2.0 * (0.5 * t).sin().powi(2);
            for k in 0..5 {
                let m = cap_moment(&ctx, 3, t, k).unwrap();
                let expect = (2.0 * u).powi(k as i32) / (k as f64 + 1.0);
                assert!((m - expect).abs() < 1e-12 * expect, "t = {t}, k = {k}");
            }
        }
    }

    #[test]
    fn radius_validation() {
        let ctx = PrecisionContext::default();
        assert!(cap_measure(&ctx, 3, 0.0).is_err());
        assert!(cap_measure(&ctx, 3, 4.0).is_err());
        assert!(cap_norm_const(&ctx, 1, 0.5).is_err());
    }
}
