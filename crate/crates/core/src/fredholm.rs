//! Nyström discretization of integral operators on a half-line.
//!
//! The operator K restricted to [u, ∞) is sampled on a quadrature rule as
//! the matrix √w_i K(x_i, x_j) √w_j, so symmetric kernels stay symmetric.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, QuadratureRule};

pub trait Kernel {
    fn eval(&self, x: f64, y: f64) -> f64;
    fn symmetric(&self) -> bool {
        false
    }
    /// Length over which the kernel decays away from its left endpoint.
    fn decay_scale(&self) -> f64 {
        4.0
    }
}

/// Kernel backed by a closure.
pub struct KernelFunction<F: Fn(f64, f64) -> f64> {
    pub f: F,
    pub symmetric: bool,
    pub decay_scale: f64,
}

impl<F: Fn(f64, f64) -> f64> KernelFunction<F> {
    pub fn new(f: F, symmetric: bool, decay_scale: f64) -> Self {
        Self { f, symmetric, decay_scale }
    }
}

impl<F: Fn(f64, f64) -> f64> Kernel for KernelFunction<F> {
    fn eval(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }
    fn symmetric(&self) -> bool {
        self.symmetric
    }
    fn decay_scale(&self) -> f64 {
        self.decay_scale
    }
}

#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    pub rule: QuadratureRule,
    pub sqrt_w: Vec<f64>,
    /// Row-major n×n.
    pub matrix: Vec<f64>,
    pub left_endpoint: f64,
}

/// Discretize on [u, ∞) with the kernel's decay scale.
pub fn discretize(kernel: &impl Kernel, u: f64, order: usize) -> Result<DiscretizedOperator> {
    let rule = gauss_legendre(order)?.on_half_line(u, kernel.decay_scale());
    discretize_on(kernel, rule)
}

/// Discretize on an arbitrary rule (nodes assumed to lie in the domain).
pub fn discretize_on(kernel: &impl Kernel, rule: QuadratureRule) -> Result<DiscretizedOperator> {
    let n = rule.order;
    let sqrt_w: Vec<f64> = rule.weights.iter().map(|w| libm::sqrt(*w)).collect();
    let mut matrix = vec![0.0; n * n];
    let sym = kernel.symmetric();
    for i in 0..n {
        let j0 = if sym { i } else { 0 };
        for j in j0..n {
            let k = kernel.eval(rule.nodes[i], rule.nodes[j]);
            if !k.is_finite() {
                return Err(Error::Evaluation(format!(
                    "kernel non-finite at node pair ({i}, {j}) = ({}, {})",
                    rule.nodes[i], rule.nodes[j]
                )));
            }
            let v = sqrt_w[i] * k * sqrt_w[j];
            matrix[i * n + j] = v;
            if sym {
                matrix[j * n + i] = v;
            }
        }
    }
    let left_endpoint = match rule.domain {
        crate::numerics::Domain::HalfLine { u, .. } => u,
        crate::numerics::Domain::Interval { a, .. } => a,
        crate::numerics::Domain::Reference => -1.0,
    };
    Ok(DiscretizedOperator { rule, sqrt_w, matrix, left_endpoint })
}

impl DiscretizedOperator {
    pub fn order(&self) -> usize {
        self.rule.order
    }

    /// Build from precomputed kernel values K(x_i, x_j) (row-major).
    pub fn from_kernel_values(rule: QuadratureRule, values: &[f64]) -> Self {
        let n = rule.order;
        let sqrt_w: Vec<f64> = rule.weights.iter().map(|w| libm::sqrt(*w)).collect();
        let mut matrix = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                matrix[i * n + j] = sqrt_w[i] * values[i * n + j] * sqrt_w[j];
            }
        }
        let left_endpoint = rule.nodes.first().copied().unwrap_or(0.0);
        DiscretizedOperator { rule, sqrt_w, matrix, left_endpoint }
    }

    /// LU factorization of I − matrix.
    pub fn factor(&self) -> Lu {
        let n = self.order();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = if i == j { 1.0 } else { 0.0 } - self.matrix[i * n + j];
            }
        }
        Lu::new(a, n)
    }

    pub fn trace(&self) -> f64 {
        (0..self.order()).map(|i| self.matrix[i * self.order() + i]).sum()
    }

    /// Power-iteration estimate of the spectral radius of the matrix.
    pub fn spectral_radius_estimate(&self, iterations: usize) -> f64 {
        let n = self.order();
        let mut v = vec![1.0 / libm::sqrt(n as f64); n];
        let mut lam = 0.0;
        for _ in 0..iterations {
            let mut nv = vec![0.0; n];
            for i in 0..n {
                nv[i] = (0..n).map(|j| self.matrix[i * n + j] * v[j]).sum();
            }
            let norm = libm::sqrt(nv.iter().map(|x| x * x).sum::<f64>());
            if norm == 0.0 {
                return 0.0;
            }
            lam = norm;
            for x in nv.iter_mut() {
                *x /= norm;
            }
            v = nv;
        }
        lam
    }

    /// Invertibility guardrail: the spectral radius must stay below one.
    pub fn check_guardrail(&self) -> Result<f64> {
        let r = self.spectral_radius_estimate(200);
        if r >= 1.0 {
            return Err(Error::Diagnostic(format!("spectral radius estimate {r} ≥ 1")));
        }
        Ok(r)
    }

    /// Eigenvalues of a symmetric matrix (cyclic Jacobi), a diagnostic path.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let n = self.order();
        let mut a = self.matrix.clone();
        for _sweep in 0..60 {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += a[p * n + q] * a[p * n + q];
                }
            }
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / libm::sqrt(t * t + 1.0);
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[i * n + i]).collect()
    }
}

/// det(I − matrix) via partially pivoted LU.
pub fn determinant(op: &DiscretizedOperator) -> f64 {
    op.factor().det()
}

/// Node values of (1 − K)^{-1} g given node values of g.
pub fn resolvent_solve(op: &DiscretizedOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    let lu = op.factor();
    lu.resolvent(op, rhs, false)
}

/// Which inner product `bilinear` forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    Plain,
    Kernel,
    Resolvent,
}

/// ⟨f, g⟩, ⟨f, K g⟩ or ⟨f, (1−K)^{-1} g⟩ by quadrature on the operator's nodes.
pub fn bilinear(op: &DiscretizedOperator, f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, pairing: Pairing) -> Result<f64> {
    let fv: Vec<f64> = op.rule.nodes.iter().map(|&x| f(x)).collect();
    let gv: Vec<f64> = op.rule.nodes.iter().map(|&x| g(x)).collect();
    bilinear_values(op, &fv, &gv, pairing)
}

pub fn bilinear_values(op: &DiscretizedOperator, f: &[f64], g: &[f64], pairing: Pairing) -> Result<f64> {
    let n = op.order();
    let w = &op.rule.weights;
    match pairing {
        Pairing::Plain => Ok((0..n).map(|i| w[i] * f[i] * g[i]).sum()),
        Pairing::Kernel => {
            let mut acc = 0.0;
            for i in 0..n {
                let row: f64 = (0..n).map(|j| op.matrix[i * n + j] * op.sqrt_w[j] * g[j]).sum();
                acc += op.sqrt_w[i] * f[i] * row;
            }
            Ok(acc)
        }
        Pairing::Resolvent => {
            let r = resolvent_solve(op, g)?;
            Ok((0..n).map(|i| w[i] * f[i] * r[i]).sum())
        }
    }
}

/// Dense LU with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    a: Vec<f64>,
    piv: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl Lu {
    pub fn new(mut a: Vec<f64>, n: usize) -> Self {
        let mut piv: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
                sign = -sign;
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] / d;
                a[i * n + k] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        a[i * n + j] -= l * a[k * n + j];
                    }
                }
            }
        }
        Lu { n, a, piv, sign, singular }
    }

    pub fn det(&self) -> f64 {
        if self.singular {
            return 0.0;
        }
        (0..self.n).fold(self.sign, |acc, i| acc * self.a[i * self.n + i])
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if self.singular {
            return Err(Error::Singular { det: 0.0 });
        }
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.a[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.a[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.a[i * n + i];
        }
        Ok(x)
    }

    /// Solve Aᵀ x = b.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        if self.singular {
            return Err(Error::Singular { det: 0.0 });
        }
        let n = self.n;
        // Aᵀ = Uᵀ Lᵀ Pᵀ... with P A = L U: Aᵀ Pᵀ = Uᵀ Lᵀ.
        let mut y = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.a[j * n + i] * y[j]).sum();
            y[i] = (y[i] - s) / self.a[i * n + i];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.a[j * n + i] * y[j]).sum();
            y[i] -= s;
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.piv.iter().enumerate() {
            x[p] = y[k];
        }
        Ok(x)
    }

    /// Node values of (1 − K)^{-1} g (or of (1 − K*)^{-1} g when `adjoint`).
    pub fn resolvent(&self, op: &DiscretizedOperator, g: &[f64], adjoint: bool) -> Result<Vec<f64>> {
        let det = self.det();
        if det.abs() < 1e-12 {
            return Err(Error::Singular { det });
        }
        let b: Vec<f64> = g.iter().zip(&op.sqrt_w).map(|(g, s)| g * s).collect();
        let y = if adjoint { self.solve_transpose(&b)? } else { self.solve(&b)? };
        Ok(y.iter().zip(&op.sqrt_w).map(|(y, s)| y / s).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rank_one(c: f64) -> KernelFunction<impl Fn(f64, f64) -> f64> {
        KernelFunction::new(move |x: f64, y: f64| c * libm::exp(-(x + y) / 2.0), true, 2.0)
    }

    #[test]
    fn zero_kernel() {
        let k = KernelFunction::new(|_, _| 0.0, true, 1.0);
        let op = discretize(&k, 0.0, 32).unwrap();
        assert!(op.matrix.iter().all(|&v| v == 0.0));
        assert_eq!(determinant(&op), 1.0);
        let rhs: Vec<f64> = (0..32).map(|i| i as f64).collect();
        let sol = resolvent_solve(&op, &rhs).unwrap();
        assert!(sol.iter().zip(&rhs).all(|(a, b)| (a - b).abs() <= 1e-14 * b.abs()));
    }

    #[test]
    fn separable_kernel_matrix() {
        let op = discretize(&rank_one(1.0), 0.0, 40).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                let fi = op.sqrt_w[i] * libm::exp(-op.rule.nodes[i] / 2.0);
                let fj = op.sqrt_w[j] * libm::exp(-op.rule.nodes[j] / 2.0);
                assert!((op.matrix[i * 40 + j] - fi * fj).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rank_one_determinants() {
        let d0 = determinant(&discretize(&rank_one(1.0), 0.0, 64).unwrap());
        assert!(d0.abs() < 1e-10);
        let d1 = determinant(&discretize(&rank_one(1.0), 1.0, 64).unwrap());
        assert!((d1 - (1.0 - libm::exp(-1.0))).abs() < 1e-10);
    }

    #[test]
    fn sherman_morrison() {
        let c = 0.6;
        let u = 0.5;
        let op = discretize(&rank_one(c), u, 64).unwrap();
        let rhs: Vec<f64> = op.rule.nodes.iter().map(|&x| 1.0 / (1.0 + x)).collect();
        let sol = resolvent_solve(&op, &rhs).unwrap();
        let f = |x: f64| libm::exp(-x / 2.0);
        let ff = libm::exp(-u);
        let frhs: f64 = op.rule.nodes.iter().zip(&op.rule.weights).map(|(&x, &w)| w * f(x) / (1.0 + x)).sum();
        for (i, &x) in op.rule.nodes.iter().enumerate() {
            let exact = rhs[i] + c * f(x) * frhs / (1.0 - c * ff);
            assert!((sol[i] - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn transpose_solve_matches() {
        let k = KernelFunction::new(|x: f64, y: f64| 0.3 * libm::exp(-x - 2.0 * y) * (1.0 + x * y), false, 2.0);
        let op = discretize(&k, 0.2, 24).unwrap();
        let lu = op.factor();
        let b: Vec<f64> = (0..24).map(|i| libm::sin(i as f64)).collect();
        let x = lu.solve_transpose(&b).unwrap();
        // check (I − M)ᵀ x = b
        for j in 0..24 {
            let v: f64 = (0..24).map(|i| (if i == j { 1.0 } else { 0.0 } - op.matrix[i * 24 + j]) * x[i]).sum();
            assert!((v - b[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn plain_pairings() {
        let k = KernelFunction::new(|_, _| 0.0, true, 2.0);
        let op = discretize(&k, 0.0, 64).unwrap();
        let e = |x: f64| libm::exp(-x / 2.0);
        assert!((bilinear(&op, e, e, Pairing::Plain).unwrap() - 1.0).abs() < 1e-12);
        let op2 = discretize(&k, 2.0, 64).unwrap();
        assert!((bilinear(&op2, e, e, Pairing::Plain).unwrap() - libm::exp(-2.0)).abs() < 1e-12);
        let p = |x: f64| libm::exp(-0.25 * x);
        let op3 = discretize(&KernelFunction::new(|_, _| 0.0, true, 8.0), 1.0, 64).unwrap();
        let v = bilinear(&op3, p, p, Pairing::Plain).unwrap();
        assert!((v - 2.0 * libm::exp(-0.5)).abs() < 1e-10);
    }

    #[test]
    fn jacobi_eigenvalues_of_rank_one() {
        let op = discretize(&rank_one(0.5), 0.0, 24).unwrap();
        let mut ev = op.symmetric_eigenvalues();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((ev[0] - op.trace()).abs() < 1e-12);
        assert!((ev[0] - 0.5).abs() < 1e-6);
        assert!(ev[1].abs() < 1e-12);
        assert!((op.check_guardrail().unwrap() - ev[0]).abs() < 1e-10);
    }
}
