//! Gauss–Legendre rules and composite panel integration.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Result<Self> {
        let n = NonZeroUsize::new(order)
            .filter(|n| n.get() >= 2)
            .ok_or_else(|| Error::Precondition("Gauss order must be at least 2".into()))?;
        let rule = GaussLegendre::new(n);
        let (mut nodes, mut weights): (Vec<f64>, Vec<f64>) =
            rule.iter().map(|(x, w)| (*x, *w)).unzip();
        // Ascending order keeps mapped abscissae sorted inside a panel.
        let mut idx: Vec<usize> = (0..nodes.len()).collect();
        idx.sort_by(|&a, &b| nodes[a].total_cmp(&nodes[b]));
        nodes = idx.iter().map(|&i| nodes[i]).collect();
        weights = idx.iter().map(|&i| weights[i]).collect();
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Calls `visit(x, w)` for every abscissa of the rule mapped to `[a, b]`
    /// split into `panels` equal panels, in increasing `x`.
    pub fn for_each_node<F: FnMut(f64, f64)>(&self, a: f64, b: f64, panels: usize, mut visit: F) {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + h * p as f64;
            let half = 0.5 * h;
            let mid = lo + half;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                visit(mid + half * x, half * w);
            }
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let mut acc = KahanSum::default();
        self.for_each_node(a, b, panels, |x, w| acc.add(w * f(x)));
        acc.value()
    }
}

/// Neumaier's compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_sorted_and_exact_on_polynomials() {
        let rule = GaussRule::new(8).unwrap();
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
        // Exact for degree 15.
        let v = rule.integrate(0.0, 2.0, 1, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-10);
    }

    #[test]
    fn composite_rule_on_oscillatory_integrand() {
        let rule = GaussRule::new(16).unwrap();
        let v = rule.integrate(0.0, 3.0, 40, |x| (50.0 * x).cos());
        assert!((v - (150.0f64).sin() / 50.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_degenerate_order() {
        assert!(GaussRule::new(1).is_err());
        assert!(GaussRule::new(0).is_err());
    }

    #[test]
    fn compensated_sum() {
        let mut s = KahanSum::default();
        s.add(1.0);
        s.add(1e-17);
        s.add(-1.0);
        assert!((s.value() - 1e-17).abs() < 1e-30);
    }
}
