//! Sorted quadrature grids in the cap radius t and integrals accumulated
//! along them.

use std::f64::consts::PI;

use crate::capgeom::CapPoint;
use crate::precision::PrecisionContext;
use crate::quad::KahanSum;
use crate::specfun::{remainder_cached, Estimate};

/// Composite Gauss nodes on (t_min, π] built from dyadic panels
/// [π2^{-(j+1)}, π2^{-j}], each split further to resolve oscillation of
/// frequency `ell`. Nodes are increasing.
#[derive(Clone, Debug)]
pub(crate) struct DyadicGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Index of the first node of each dyadic panel, smallest panel first,
    /// with a final entry equal to `nodes.len()`.
    pub panel_starts: Vec<usize>,
    pub t_min: f64,
}

impl DyadicGrid {
    pub fn new(ctx: &PrecisionContext, ell: usize, t_min_target: f64) -> Self {
        let levels = (PI / t_min_target).log2().ceil().max(1.0) as i32;
        let t_min = PI * 2f64.powi(-levels);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut panel_starts = Vec::new();
        for j in (0..levels).rev() {
            let a = PI * 2f64.powi(-(j + 1));
            let b = 2.0 * a;
            let sub = (2.0 * ell as f64 * (b - a) / PI).ceil() as usize + 1;
            panel_starts.push(nodes.len());
            ctx.rule().for_each_node(a, b, sub, |x, w| {
                nodes.push(x);
                weights.push(w);
            });
        }
        panel_starts.push(nodes.len());
        Self { nodes, weights, panel_starts, t_min }
    }
}

/// Cap averages evaluated at every node of a sorted grid.
#[derive(Clone, Debug, Default)]
pub(crate) struct CapColumns {
    /// M^{(n)}(t_i) for each requested order.
    pub remainders: Vec<Vec<f64>>,
    /// Absolute error estimates matching `remainders`.
    pub errors: Vec<Vec<f64>>,
    /// μ_k(t_i) = cap average of (1 - cos θ)^k for each requested k.
    pub moments: Vec<Vec<f64>>,
}

/// Integrates from 0 to each node in turn so every θ abscissa is visited
/// once, whatever the number of nodes.
pub(crate) fn cap_columns(
    ctx: &PrecisionContext,
    d: usize,
    ell: usize,
    orders: &[usize],
    moment_orders: &[usize],
    t: &[f64],
    bits: u32,
) -> CapColumns {
    let no = orders.len();
    let nm = moment_orders.len();
    let mut w0 = KahanSum::default();
    let mut f = vec![KahanSum::default(); no];
    let mut e = vec![0.0; no];
    let mut g = vec![KahanSum::default(); nm];
    let mut out = CapColumns {
        remainders: vec![Vec::with_capacity(t.len()); no],
        errors: vec![Vec::with_capacity(t.len()); no],
        moments: vec![Vec::with_capacity(t.len()); nm],
    };
    let mut prev = 0.0;
    for &ti in t {
        let sub = ((2.0 * ell as f64 * (ti - prev) / PI).ceil() as usize).max(1);
        ctx.gap_rule().for_each_node(prev, ti, sub, |theta, w| {
            let p = CapPoint::new(d, theta);
            let ww = w * p.weight;
            w0.add(ww);
            let mut cache = None;
            for (i, &n) in orders.iter().enumerate() {
                let Estimate { value, abs_err } =
                    remainder_cached(bits, d, ell, n, p.u, Some(theta), &mut cache);
                f[i].add(ww * value);
                e[i] += ww * abs_err;
            }
            for (i, &k) in moment_orders.iter().enumerate() {
                g[i].add(ww * p.u.powi(k as i32));
            }
        });
        prev = ti;
        let c = 1.0 / w0.value();
        for i in 0..no {
            let m = c * f[i].value();
            out.remainders[i].push(m);
            out.errors[i].push(c * e[i] + m.abs() * f64::EPSILON);
        }
        for i in 0..nm {
            out.moments[i].push(c * g[i].value());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multipliers::taylor_multiplier;

    #[test]
    fn grid_is_sorted_and_covers_range() {
        let ctx = PrecisionContext::default();
        let g = DyadicGrid::new(&ctx, 20, 1e-4);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(g.t_min <= 1e-4 && g.t_min > 5e-5);
        let total: f64 = g.weights.iter().sum();
        assert!((total - (PI - g.t_min)).abs() < 1e-13);
        assert_eq!(*g.panel_starts.last().unwrap(), g.nodes.len());
    }

    #[test]
    fn accumulated_integrals_match_direct_ones() {
        let ctx = PrecisionContext::default();
        for (d, ell, n) in [(3, 25, 1), (2, 9, 0), (4, 16, 2)] {
            let t = [1e-3, 0.02, 0.4, 0.41, 1.7, 3.0];
            let cols = cap_columns(&ctx, d, ell, &[n], &[1], &t, 53);
            for (i, &ti) in t.iter().enumerate() {
                let direct = taylor_multiplier(&ctx, d, ell, ti, n).unwrap();
                let got = cols.remainders[0][i];
                assert!((got - direct).abs() <= 1e-11 * direct.abs(), "{d} {ell} {n} {ti}: {got} vs {direct}");
                let mu = crate::capgeom::cap_moment(&ctx, d, ti, 1).unwrap() / 2.0;
                assert!((cols.moments[0][i] - mu).abs() <= 1e-12 * mu);
            }
        }
    }
}
