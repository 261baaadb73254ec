use alloc::vec::Vec;

use crate::error::{param, Error, Result};

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Generalized Laguerre polynomial L_n^{(α)}(x) by the three-term recurrence,
/// carried with a running exponent so that large n does not overflow early.
pub fn laguerre_poly(n: usize, alpha: usize, x: f64) -> Result<f64> {
    if n > 2000 || alpha > 2000 {
        return param("laguerre_poly supports n, alpha ≤ 2000");
    }
    if !(x >= 0.0) || !x.is_finite() {
        return param("laguerre_poly requires finite x ≥ 0");
    }
    let a = alpha as f64;
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut log_scale = 0.0;
    for k in 0..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > 1e200 {
            prev *= 1e-200;
            cur *= 1e-200;
            log_scale += 200.0 * core::f64::consts::LN_10;
        }
    }
    let v = cur * libm::exp(log_scale);
    if !v.is_finite() {
        return Err(Error::Evaluation(alloc::format!(
            "L_{n}^({alpha})({x}) overflows double precision (log10 magnitude ≈ {:.1})",
            (libm::log(cur.abs()) + log_scale) / core::f64::consts::LN_10
        )));
    }
    Ok(v)
}

/// Orthonormal Laguerre functions p_j(x) = √(j!/Γ(j+α+1)) L_j^{(α)}(x) x^{α/2} e^{−x/2}
/// on (0, ∞), evaluated by the normalized recurrence in scaled form.
#[derive(Debug, Clone, Copy)]
pub struct LaguerreFunctions {
    pub alpha: f64,
}

impl LaguerreFunctions {
    pub fn new(alpha: f64) -> Self {
        Self { alpha }
    }

    /// Scaled values: returns (v_j, s_j) with p_j = v_j · e^{s_j}, j = 0..=n.
    fn scaled(&self, n: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
        let a = self.alpha;
        let mut vals = Vec::with_capacity(n + 1);
        let mut logs = Vec::with_capacity(n + 1);
        if x <= 0.0 {
            // Only α = 0 survives at the origin: p_j(0) = 1.
            let v = if a == 0.0 { 1.0 } else { 0.0 };
            for _ in 0..=n {
                vals.push(v);
                logs.push(0.0);
            }
            return (vals, logs);
        }
        let mut s = 0.5 * a * libm::log(x) - 0.5 * x - 0.5 * ln_gamma(a + 1.0);
        let (mut prev, mut cur) = (0.0, 1.0);
        vals.push(cur);
        logs.push(s);
        for j in 0..n {
            let jf = j as f64;
            let next = ((2.0 * jf + 1.0 + a - x) * cur - libm::sqrt(jf * (jf + a)) * prev)
                / libm::sqrt((jf + 1.0) * (jf + 1.0 + a));
            prev = cur;
            cur = next;
            let m = cur.abs().max(prev.abs());
            if m > 1e150 || (m < 1e-150 && m > 0.0) {
                let l = libm::log(m);
                s += l;
                cur /= m;
                prev /= m;
            }
            vals.push(cur);
            logs.push(s);
        }
        (vals, logs)
    }

    /// p_0(x), …, p_n(x).
    pub fn values(&self, n: usize, x: f64) -> Vec<f64> {
        let (v, s) = self.scaled(n, x);
        v.iter().zip(&s).map(|(&v, &s)| if v == 0.0 { 0.0 } else { v * libm::exp(s) }).collect()
    }

    /// (ln|p_n(x)|, sign) for large-n edge work.
    pub fn log_value(&self, n: usize, x: f64) -> (f64, f64) {
        let (v, s) = self.scaled(n, x);
        let last = v[n];
        if last == 0.0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        (libm::log(last.abs()) + s[n], last.signum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gauss_legendre;

    #[test]
    fn low_degree_closed_forms() {
        for &a in &[0usize, 1, 5] {
            for &x in &[0.0, 0.7, 12.0] {
                assert_eq!(laguerre_poly(0, a, x).unwrap(), 1.0);
                let l1 = laguerre_poly(1, a, x).unwrap();
                assert!((l1 - (1.0 + a as f64 - x)).abs() < 1e-14);
            }
        }
        let x = 2.5;
        let l2 = laguerre_poly(2, 0, x).unwrap();
        assert!((l2 - (x * x / 2.0 - 2.0 * x + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn orthogonality_weighted() {
        let rule = gauss_legendre(96).unwrap().on_half_line(0.0, 8.0);
        let v = rule.integrate(|x| x * libm::exp(-x) * laguerre_poly(2, 1, x).unwrap() * laguerre_poly(3, 1, x).unwrap());
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn orthonormal_functions() {
        let rule = gauss_legendre(128).unwrap().on_half_line(0.0, 10.0);
        for &a in &[0.0, 2.0, 4.0] {
            let lf = LaguerreFunctions::new(a);
            let tab: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| lf.values(8, x)).collect();
            for i in 0..=8 {
                for j in 0..=8 {
                    let g: f64 = rule.weights.iter().zip(&tab).map(|(&w, p)| w * p[i] * p[j]).sum();
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((g - e).abs() < 1e-9, "alpha={a} ({i},{j}) {g}");
                }
            }
        }
    }

    #[test]
    fn normalized_matches_polynomial() {
        let lf = LaguerreFunctions::new(3.0);
        let x = 7.3;
        let p = lf.values(10, x);
        for j in 0..=10 {
            let c = libm::exp(0.5 * (ln_gamma(j as f64 + 1.0) - ln_gamma(j as f64 + 4.0)));
            let direct = c * laguerre_poly(j, 3, x).unwrap() * libm::pow(x, 1.5) * libm::exp(-x / 2.0);
            assert!((p[j] - direct).abs() < 1e-13, "j={j}");
        }
    }

    #[test]
    fn large_degree_scaled() {
        // p_n stays bounded at the spectral edge for large n.
        let lf = LaguerreFunctions::new(0.0);
        let (l, _) = lf.log_value(4000, 16000.0);
        assert!(l.is_finite() && l < 0.0 && l > -10.0);
        // deep in the tail the value underflows but its logarithm is finite
        let (l2, _) = lf.log_value(100, 5000.0);
        assert!(l2 < -1000.0 && l2.is_finite());
    }
}
