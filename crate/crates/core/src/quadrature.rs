//! Composite Gauss–Legendre rules.

use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;

/// Nodes and weights of a one-dimensional quadrature rule.
#[derive(Clone, Debug, Default)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Composite rule with `n` Gauss–Legendre points on each panel
/// `[breaks[k], breaks[k+1]]`.
pub fn composite(breaks: &[f64], n: usize) -> Rule {
    let n = NonZeroUsize::new(n).expect("at least one node per panel");
    let base = GaussLegendre::new(n);
    let pairs = base.as_node_weight_pairs();
    let mut rule = Rule::default();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        for &(x, wt) in pairs {
            rule.nodes.push(mid + half * x);
            rule.weights.push(half * wt);
        }
    }
    rule
}

/// Uniform panels of width at most `h` covering `[a, b]`.
pub fn uniform_breaks(a: f64, b: f64, h: f64) -> Vec<f64> {
    let panels = ((b - a) / h).ceil().max(1.0) as usize;
    (0..=panels)
        .map(|k| a + (b - a) * k as f64 / panels as f64)
        .collect()
}

/// Panels on `[0, b]` refined geometrically toward 0: `levels` panels with
/// ratio `q` inside `[0, h]`, then uniform panels of width at most `h`.
pub fn graded_breaks(b: f64, h: f64, levels: usize, q: f64) -> Vec<f64> {
    let h = h.min(b);
    let mut breaks = vec![0.0];
    for l in (1..=levels).rev() {
        breaks.push(h * q.powi(l as i32));
    }
    breaks.extend(uniform_breaks(h, b, h));
    breaks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_oscillatory_function() {
        let rule = composite(&uniform_breaks(0.0, std::f64::consts::PI, 0.5), 20);
        let got = rule.integrate(|x| (40.0 * x).cos() * x);
        // ∫_0^π x cos(40x) dx = (cos(40π) - 1)/1600 = 0
        assert!(got.abs() < 1e-13, "{got}");
    }

    #[test]
    fn graded_rule_handles_sqrt_endpoint() {
        let rule = composite(&graded_breaks(1.0, 0.25, 30, 0.3), 12);
        let got = rule.integrate(f64::sqrt);
        assert!((got - 2.0 / 3.0).abs() < 1e-13, "{got}");
    }
}
