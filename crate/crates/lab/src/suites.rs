//! Named check suites shared by `validate` and the acceptance harness.

use num_complex::Complex64;
use stasep_core::airy_edge::{limit_suite, EdgeParams};
use stasep_core::error::Result;
use stasep_core::laguerre_ensemble::{
    edge_convergence, k_md, one_minus_k_psi, stationary_cdf, z_ab, EdgeConvergence, EnsembleParams, FiniteSize, GForm,
    KernelRepresentation, LaguerreConfig, Side,
};
use stasep_core::lpp_sim::{empirical_cdf, passage_samples, WeightModel};
use stasep_core::numerics::{airy_identity_check, composite, contour_integral, gauss_legendre, pole_integrand, ContourPath, LaguerreFunctions};

use crate::parallel::map_chunks;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Fast,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value <= tolerance, detail: String::new() }
    }

    /// Passes when `value` lies in `[lo, hi]`; `tolerance` records `hi`.
    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), value, tolerance: hi, passed: value >= lo && value <= hi, detail: format!("range [{lo}, {hi}]") }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn line(&self) -> String {
        let mark = if self.passed { "pass" } else { "FAIL" };
        let extra = if self.detail.is_empty() { String::new() } else { format!("  ({})", self.detail) };
        format!("{mark}  {:<44} {:>12.4e}  tol {:.1e}{extra}", self.name, self.value, self.tolerance)
    }
}

fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

pub fn quadrature_exactness() -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut order = 2;
    while order <= 256 {
        let rule = gauss_legendre(order)?;
        for k in 0..2 * order {
            let exact = if k % 2 == 0 { 2.0 / (k + 1) as f64 } else { 0.0 };
            worst = worst.max((rule.integrate(|x| x.powi(k as i32)) - exact).abs());
        }
        order *= 2;
    }
    Ok(worst)
}

pub fn airy_identity() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &w in &[0.0f64, 0.25, 0.5, 1.0, 2.0] {
        for &beta in &[-1.0, 0.0, 1.0, 3.0] {
            let exact = (w * w * w / 3.0 - beta * w).exp();
            worst = worst.max(rel(airy_identity_check(w, beta)?, exact, 1.0));
        }
    }
    Ok(worst)
}

pub fn laguerre_orthonormality() -> Result<f64> {
    let gl = gauss_legendre(16)?;
    let mut worst: f64 = 0.0;
    for &alpha in &[0.0, 2.0, 4.0] {
        let lf = LaguerreFunctions::new(alpha);
        for j in 0..=8 {
            for k in 0..=8 {
                let v = composite(0.0, 80.0, 80, &gl, |x| {
                    let p = lf.values(8, x);
                    p[j] * p[k]
                });
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
    }
    Ok(worst)
}

const KERNEL_POINTS: [(f64, f64); 3] = [(2.0, 1.5), (0.5, 4.0), (6.0, 3.0)];

/// K_{m,−d}(x,y) from the contour form against K_{m,d}(y,x) from the polynomial form.
pub fn cp1() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &(m, d) in &[(4usize, 2i64), (3, 1), (5, 3)] {
        let p = EnsembleParams::new(m, d, 0.1, 0.1, 0.5)?;
        let q = EnsembleParams::new(m, -d, 0.1, 0.1, 0.5)?;
        let (kp, kq) = (k_md(&p, KernelRepresentation::Polynomial), k_md(&q, KernelRepresentation::Contour { order: 64 }));
        for &(x, y) in &KERNEL_POINTS {
            worst = worst.max(rel(kq.value(x, y)?, kp.value(y, x)?, 1e-3));
        }
    }
    Ok(worst)
}

/// Contour K_{m,d} against Σ_{j<m−d} p_j(x)p_j(y) (x/y)^d with p_j the order-2d Laguerre functions.
pub fn cp2() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &(m, d) in &[(2usize, 0i64), (3, 1), (5, 2)] {
        let p = EnsembleParams::new(m, d, 0.1, 0.1, 0.5)?;
        let kc = k_md(&p, KernelRepresentation::Contour { order: 64 });
        let lf = LaguerreFunctions::new(2.0 * d as f64);
        let n = m - d as usize;
        for &(x, y) in &KERNEL_POINTS {
            let (px, py) = (lf.values(n - 1, x), lf.values(n - 1, y));
            let proj: f64 = px.iter().zip(&py).map(|(a, b)| a * b).sum();
            worst = worst.max(rel(kc.value(x, y)?, proj * (x / y).powi(d as i32), 1e-3));
        }
    }
    Ok(worst)
}

pub fn contour_vs_polynomial() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &(m, d) in &[(2usize, 0i64), (3, 1), (5, 2), (3, -1)] {
        for &rho in &[0.3, 0.4, 0.5, 0.7] {
            let p = EnsembleParams::new(m, d, 0.1, 0.1, rho)?;
            let kp = k_md(&p, KernelRepresentation::Polynomial);
            // ρ = 0.7 places the inner circle close to the pole of the outer one
            let order = if rho > 0.6 { 256 } else { 64 };
            let kc = k_md(&p, KernelRepresentation::Contour { order });
            for &(x, y) in &KERNEL_POINTS {
                worst = worst.max(rel(kc.value(x, y)?, kp.value(x, y)?, 1e-3));
            }
        }
    }
    Ok(worst)
}

pub fn trace_defect() -> Result<f64> {
    let gl = gauss_legendre(16)?;
    let mut worst: f64 = 0.0;
    for &(m, d) in &[(4usize, 1i64), (3, 0), (5, 2), (4, -1)] {
        let k = k_md(&EnsembleParams::new(m, d, 0.1, 0.1, 0.5)?, KernelRepresentation::Polynomial);
        let mut err = None;
        let tr = composite(0.0, 80.0, 80, &gl, |x| k.value(x, x).unwrap_or_else(|e| {
            err.get_or_insert(e);
            0.0
        }));
        if let Some(e) = err {
            return Err(e);
        }
        worst = worst.max((tr - (m as i64 - d.abs()) as f64).abs());
    }
    Ok(worst)
}

/// ⟨ψ_a,(1−K)ψ_b⟩ by quadrature against the closed form, relative.
pub fn pairing() -> Result<f64> {
    let gl = gauss_legendre(16)?;
    let mut worst: f64 = 0.0;
    for &(a, b, m, d) in &[(0.2, 0.1, 4usize, 1i64), (0.3, 0.25, 3, 0), (0.1, 0.35, 5, -2)] {
        let p = EnsembleParams::new(m, d, a, b, 0.5)?;
        let top = 40.0 + 30.0 / (a + b);
        let panels = top as usize;
        let v = if d >= 0 {
            let g = one_minus_k_psi(&p, b, Side::Kernel)?;
            composite(0.0, top, panels, &gl, |x| (-a * x).exp() * g.eval(x))
        } else {
            let h = one_minus_k_psi(&p, a, Side::Adjoint)?;
            composite(0.0, top, panels, &gl, |x| (-b * x).exp() * h.eval(x))
        };
        worst = worst.max(rel(v, z_ab(a, b, m, d)?.value(), 0.0));
    }
    Ok(worst)
}

pub fn gab_forms() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &(m, d, a, b, u) in &[(3usize, 1i64, 0.3, -0.1, 4.0), (4, -1, 0.2, 0.1, 3.0), (3, 0, 0.25, 0.05, 5.0)] {
        let fs = FiniteSize::new(&EnsembleParams::new(m, d, a, b, 0.5)?, u, &LaguerreConfig::default())?;
        let (x, y) = (fs.g_ab(GForm::Regularized)?, fs.g_ab(GForm::RegularizedAlt)?);
        worst = worst.max((x - y).abs() / (1.0 + x.abs()));
    }
    Ok(worst)
}

pub fn s_representations() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &w in &[0.25, 0.5, 1.0] {
        for &s in &[-1.0, 1.0] {
            let suite = limit_suite(EdgeParams { w, s })?;
            worst = worst.max((suite.s_half_line() - suite.s_negative_quadrant()?).abs());
        }
    }
    Ok(worst)
}

pub fn residues() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &(w, s) in &[(1.0, 0.7), (0.5, -1.3), (2.0, 3.0)] {
        let path = ContourPath::circle(Complex64::new(w, 0.0), 0.5);
        for sign in [1.0, -1.0] {
            let v = contour_integral(pole_integrand(w, s, sign), path, 128)?;
            worst = worst.max((v - Complex64::new(-sign * s, 0.0)).norm());
        }
    }
    Ok(worst)
}

pub fn identities() -> Result<Vec<Check>> {
    Ok(vec![
        Check::at_most("quadrature exactness", quadrature_exactness()?, 1e-13),
        Check::at_most("Airy Laplace identity (relative)", airy_identity()?, 1e-8),
        Check::at_most("Laguerre orthonormality", laguerre_orthonormality()?, 1e-9),
        Check::at_most("K_{m,-d} = K_{m,d} transposed (relative)", cp1()?, 1e-8),
        Check::at_most("K_{m,d} = K^{(2d)}_{m-d} (x/y)^d (relative)", cp2()?, 1e-8),
        Check::at_most("contour vs polynomial kernel (relative)", contour_vs_polynomial()?, 1e-8),
        Check::at_most("trace K_{m,d} = m - |d|", trace_defect()?, 1e-8),
        Check::at_most("<psi_a,(1-K)psi_b> = Z_ab (relative)", pairing()?, 1e-8),
        Check::at_most("regularized G forms agree", gab_forms()?, 1e-8),
        Check::at_most("S_{w,s} two representations", s_representations()?, 1e-8),
        Check::at_most("pole integrals equal -s and s", residues()?, 1e-10),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSizeReport {
    pub grid: Vec<f64>,
    pub exact: Vec<f64>,
    pub mc: Vec<f64>,
    pub se: Vec<f64>,
    pub max_dev: f64,
    pub max_se: f64,
    pub replicas: u64,
}

/// stationary_cdf at (ρ, m, d) = (1/2, 3, 0) against Monte Carlo of G(3,3) with w(0,0) = 0.
pub fn finite_size(replicas: u64, seed: u64) -> Result<FiniteSizeReport> {
    let grid: Vec<f64> = (1..=30).map(|k| k as f64).collect();
    let exact = stationary_cdf(0.5, 3, 0, &grid)?.table.cdf;
    let model = WeightModel::AbExponentialZeroCorner { a: 0.0, b: 0.0 };
    let g = map_chunks(0..replicas, 4096, |r| passage_samples(3, 3, model, seed, r))?;
    let (mc, se) = empirical_cdf(&g, &grid);
    let max_dev = mc.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let max_se = se.iter().cloned().fold(0.0, f64::max);
    Ok(FiniteSizeReport { grid, exact, mc, se, max_dev, max_se, replicas })
}

pub fn finite_size_checks(budget: Budget) -> Result<(Vec<Check>, FiniteSizeReport)> {
    let replicas = match budget {
        Budget::Fast => 100_000,
        Budget::Full => 1_000_000,
    };
    let r = finite_size(replicas, 0x5eed_0005)?;
    let c = Check::at_most("max |F_MC - F| vs 3 max standard errors", r.max_dev, 3.0 * r.max_se).with_detail(format!("{} replicas", r.replicas));
    Ok((vec![c], r))
}

pub fn edge_convergence_checks() -> Result<(Vec<Check>, EdgeConvergence)> {
    let e = edge_convergence(0.5, 0.0, 0.0, &[250, 1000, 4000])?;
    let f = Check::within("F error exponent", e.f_exponent, -0.5, -0.2);
    let g = Check::within("G_0 error exponent", e.g_exponent, -0.5, -0.2);
    Ok((vec![f, g], e))
}
