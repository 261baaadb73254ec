use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{param, Result};

/// Where the nodes of a rule live.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Reference,
    Interval { a: f64, b: f64 },
    /// `x = u + L (1+ξ)/(1−ξ)`.
    HalfLine { u: f64, scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
    pub domain: Domain,
}

/// Gauss–Legendre rule on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(order: usize) -> Result<QuadratureRule> {
    if !(2..=512).contains(&order) {
        return param("gauss_legendre order must lie in 2..=512");
    }
    let n = order;
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess for the (i+1)-th largest root.
        let theta = PI * (4.0 * i as f64 + 3.0) / (4.0 * nf + 2.0);
        let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * libm::cos(theta);
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights, order: n, domain: Domain::Reference })
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

impl QuadratureRule {
    /// Affine image on [a, b].
    pub fn on_interval(&self, a: f64, b: f64) -> QuadratureRule {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        QuadratureRule {
            nodes: self.nodes.iter().map(|&t| c + h * t).collect(),
            weights: self.weights.iter().map(|&w| h * w).collect(),
            order: self.order,
            domain: Domain::Interval { a, b },
        }
    }

    /// Image under the rational map of [-1,1] onto [u, ∞).
    pub fn on_half_line(&self, u: f64, scale: f64) -> QuadratureRule {
        let mut nodes = Vec::with_capacity(self.order);
        let mut weights = Vec::with_capacity(self.order);
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            let den = 1.0 - t;
            nodes.push(u + scale * (1.0 + t) / den);
            weights.push(w * 2.0 * scale / (den * den));
        }
        QuadratureRule { nodes, weights, order: self.order, domain: Domain::HalfLine { u, scale } }
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Composite Gauss–Legendre over `[a, b]` split into `panels` pieces.
pub fn composite(a: f64, b: f64, panels: usize, rule: &QuadratureRule, mut f: impl FnMut(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let c = lo + 0.5 * h;
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            acc += 0.5 * h * w * f(c + 0.5 * h * t);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_rule() {
        let r = gauss_legendre(2).unwrap();
        let s = 1.0 / libm::sqrt(3.0);
        assert!((r.nodes[0] + s).abs() < 1e-15 && (r.nodes[1] - s).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exactness_on_monomials() {
        for &n in &[2usize, 4, 8, 16, 32, 64, 128, 256] {
            let r = gauss_legendre(n).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            assert!(r.nodes.windows(2).all(|p| p[0] < p[1]));
            for k in 0..2 * n {
                let got = r.integrate(|x| libm::pow(x, k as f64));
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let scale = exact.abs().max(1e-300);
                let err = if exact == 0.0 { got.abs() } else { (got - exact).abs() / scale };
                assert!(err <= 1e-13, "n={n} k={k} err={err:e}");
            }
        }
    }

    #[test]
    fn odd_symmetry_and_normalisation() {
        let r = gauss_legendre(40).unwrap();
        assert!(r.integrate(|x| libm::pow(x, 79.0)).abs() < 1e-13);
        for n in [3usize, 17, 100, 512] {
            let r = gauss_legendre(n).unwrap();
            assert!((r.integrate(|_| 1.0) - 2.0).abs() < 1e-13);
        }
        assert!(gauss_legendre(1).is_err() && gauss_legendre(513).is_err());
    }

    #[test]
    fn half_line_map() {
        let r = gauss_legendre(64).unwrap().on_half_line(1.0, 2.0);
        let v = r.integrate(|x| libm::exp(-x));
        assert!((v - libm::exp(-1.0)).abs() < 1e-13);
    }
}
