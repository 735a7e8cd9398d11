//! The square function evaluated from its definition: cap averages and
//! companion functions at a point, integrated over the cap radius.

use std::f64::consts::PI;

use super::{classify_alpha, companion_functions, DyadicGrid, ProfileKind};
use crate::capgeom::{cap_moment, sphere_area};
use crate::error::{domain, Result};
use crate::field::{zonal_weight, ZonalField};
use crate::multipliers::avg_multiplier;
use crate::precision::PrecisionContext;
use crate::specfun::legendre_all_theta;

/// Smallest cap radius is this over the band limit; below it the integral
/// is extrapolated from the last dyadic panel.
const POINTWISE_TAIL_SCALE: f64 = 1e-3;

/// Precomputed cap data for evaluating S_α f at many points.
pub struct PointwiseSquare {
    f: ZonalField,
    alpha: f64,
    n: usize,
    endpoint: bool,
    companions: Vec<ZonalField>,
    grid: DyadicGrid,
    /// m_{ℓ,t_i} for ℓ = 0..=L, row per node.
    averages: Vec<Vec<f64>>,
    /// |ξ-η|^{2k} cap averages for k = 1..=n, row per node.
    moments: Vec<Vec<f64>>,
    gamma: f64,
}

impl PointwiseSquare {
    pub fn new(ctx: &PrecisionContext, f: &ZonalField, alpha: f64) -> Result<Self> {
        let (n, kind) = classify_alpha(alpha)?;
        let band = f.band_limit();
        let companions = companion_functions(f, alpha)?;
        let grid = DyadicGrid::new(ctx, band, POINTWISE_TAIL_SCALE / band.max(1) as f64);
        let mut averages = Vec::with_capacity(grid.nodes.len());
        let mut moments = Vec::with_capacity(grid.nodes.len());
        for &t in &grid.nodes {
            let row = (0..=band)
                .map(|ell| avg_multiplier(ctx, f.d, ell, t))
                .collect::<Result<Vec<f64>>>()?;
            averages.push(row);
            let mrow = (1..=n)
                .map(|k| cap_moment(ctx, f.d, t, k))
                .collect::<Result<Vec<f64>>>()?;
            moments.push(mrow);
        }
        let endpoint = kind == ProfileKind::Endpoint;
        let gamma = if endpoint { 4.0 } else { 4.0 * (n as f64 + 1.0) - 2.0 * alpha };
        Ok(Self {
            f: f.clone(),
            alpha,
            n,
            endpoint,
            companions,
            grid,
            averages,
            moments,
            gamma,
        })
    }

    /// S_α f at polar angle θ.
    pub fn at(&self, theta: f64) -> Result<f64> {
        if !(0.0..=PI).contains(&theta) {
            return Err(domain(format!("polar angle {theta} outside [0, π]")));
        }
        let d = self.f.d;
        let band = self.f.band_limit();
        let p = legendre_all_theta(d, band, theta);
        // Basis values w_ℓ P_ℓ(cos θ) times the coefficients of f and g_n.
        let zf: Vec<f64> = (0..=band)
            .map(|ell| self.f.coeffs()[ell] * zonal_weight(d, ell) * p[ell])
            .collect();
        let f0: f64 = zf.iter().sum();
        let gvals: Vec<f64> = self
            .companions
            .iter()
            .map(|g| (0..=band).map(|ell| g.coeffs()[ell] * zonal_weight(d, ell) * p[ell]).sum())
            .collect();
        let zg: Vec<f64> = match (self.endpoint, self.companions.last()) {
            (true, Some(g)) => (0..=band).map(|ell| g.coeffs()[ell] * zonal_weight(d, ell) * p[ell]).collect(),
            _ => Vec::new(),
        };
        let plain = if self.endpoint { self.n - 1 } else { self.n };

        let delta = |i: usize| {
            let m = &self.averages[i];
            let af: f64 = zf.iter().zip(m).map(|(z, v)| z * v).sum();
            let mut r = af - f0;
            for k in 0..plain {
                r -= gvals[k] * self.moments[i][k];
            }
            if self.endpoint {
                let ag: f64 = zg.iter().zip(m).map(|(z, v)| z * v).sum();
                r -= ag * self.moments[i][self.n - 1];
            }
            r
        };

        let mut total = 0.0;
        let mut first_panel = 0.0;
        let (s0, s1) = (self.grid.panel_starts[0], self.grid.panel_starts[1]);
        for i in 0..self.grid.nodes.len() {
            let t = self.grid.nodes[i];
            let v = delta(i) * t.powf(-self.alpha - 0.5);
            let c = self.grid.weights[i] * v * v;
            total += c;
            if (s0..s1).contains(&i) {
                first_panel += c;
            }
        }
        // The integrand behaves like t^{γ-1} near 0, so the missing piece is
        // the first panel scaled by the geometric sum of 2^{-γ}.
        total += first_panel / (2f64.powf(self.gamma) - 1.0);
        Ok(total.sqrt())
    }
}

/// S_α f(ξ) at the point with polar angle θ.
pub fn square_pointwise(ctx: &PrecisionContext, f: &ZonalField, alpha: f64, theta: f64) -> Result<f64> {
    PointwiseSquare::new(ctx, f, alpha)?.at(theta)
}

/// ‖S_α f‖_{L²} by integrating the pointwise square function over the sphere.
pub fn square_norm_by_closure(ctx: &PrecisionContext, f: &ZonalField, alpha: f64) -> Result<f64> {
    let sq = PointwiseSquare::new(ctx, f, alpha)?;
    let d = f.d;
    let panels = ctx.quad_panels().max(f.band_limit() + d);
    let mut acc = 0.0;
    let mut failure = None;
    ctx.rule().for_each_node(0.0, PI, panels, |theta, w| match sq.at(theta) {
        Ok(s) => acc += w * s * s * theta.sin().powi(d as i32 - 2),
        Err(e) => failure = Some(e),
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((sphere_area(d - 2) * acc).sqrt())
}
