//! Finite-size theory of the Laguerre line ensemble with boundary sources.
//!
//! K_{m,d} = L P_− R with L = T_+^{m+d} T_−^{−(m−d)} and R = L^{-1}. For
//! x, y > 0 only the regular parts of L and R enter and both are
//! convolution kernels in the shifted variable v = z + ρ − 1/2:
//!
//!   L(x,y) = L̃(x−y),  L̃(ξ) = (−1)^{m+d+1} e^{−ξ/2} L^{(1−2d)}_{m+d−1}(ξ),
//!   R(x,y) = R̃(y−x),  R̃ = L̃ with d ↦ −d,
//!
//! so that K(x,y) = ∫_0^∞ L̃(x+w) R̃(y+w) dw. With Rψ_b = Z(−b)ψ_b and
//! L*ψ_a = Z(a)^{-1}ψ_a every quantity below reduces to half-line integrals
//! of L̃ and R̃ on the nodes of a single discretization of [u, ∞).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::airy_edge::{f_gue, g_scaling, DistributionTable, Provenance, TableMeta};
use crate::error::{param, Error, Result};
use crate::fredholm::{DiscretizedOperator, Kernel, Lu};
use crate::numerics::{airy_ai, contour_integral, gauss_legendre, ln_gamma, ContourPath, Domain, LaguerreFunctions, QuadratureRule};

/// Largest Laguerre degree handled by the polynomial representation.
pub const MAX_POLY_DEGREE: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleParams {
    pub m: usize,
    pub d: i64,
    pub a: f64,
    pub b: f64,
    pub rho: f64,
}

impl EnsembleParams {
    pub fn new(m: usize, d: i64, a: f64, b: f64, rho: f64) -> Result<Self> {
        if m == 0 || d.unsigned_abs() as usize >= m {
            return param(format!("need |d| < m, got m = {m}, d = {d}"));
        }
        if !(a.abs() < 0.5 && b.abs() < 0.5) {
            return param(format!("boundary parameters must lie in (−1/2, 1/2), got a = {a}, b = {b}"));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return param(format!("density must lie in (0, 1), got {rho}"));
        }
        Ok(Self { m, d, a, b, rho })
    }

    /// a = 1/2 − ρ, b = −a: boundary rates 1 − ρ on the i-axis and ρ on the j-axis.
    pub fn stationary(rho: f64, m: usize, d: i64) -> Result<Self> {
        let a = 0.5 - rho;
        Self::new(m, d, a, -a, rho)
    }

    pub fn tau(&self) -> usize {
        2 * self.m + 1
    }

    pub fn site(&self) -> i64 {
        2 * self.d
    }

    /// Polynomial degree m − |d| of the underlying Laguerre kernel.
    pub fn degree(&self) -> usize {
        self.m - self.d.unsigned_abs() as usize
    }
}

/// A positive or negative number stored as sign · e^{ln_abs}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogScaled {
    pub ln_abs: f64,
    pub sign: f64,
}

impl LogScaled {
    pub fn value(&self) -> f64 {
        self.sign * libm::exp(self.ln_abs)
    }
}

fn ln_z(a: f64, m: usize, d: i64) -> f64 {
    let (big, small) = ((m as i64 + d) as f64, (m as i64 - d) as f64);
    big * libm::log(0.5 + a) - small * libm::log(0.5 - a)
}

/// Z(a) = (1/2+a)^{m+d} / (1/2−a)^{m−d}, the eigenvalue of R on ψ_{−a}.
pub fn z_factor(a: f64, m: usize, d: i64) -> Result<LogScaled> {
    if !(a.abs() < 0.5) {
        return param(format!("Z(a) needs |a| < 1/2, got {a}"));
    }
    Ok(LogScaled { ln_abs: ln_z(a, m, d), sign: 1.0 })
}

/// Z_{a,b} = ⟨ψ_a, (1 − K_{m,d}) ψ_b⟩ = Z(−b) / (Z(a) (a+b)).
pub fn z_ab(a: f64, b: f64, m: usize, d: i64) -> Result<LogScaled> {
    if !(a.abs() < 0.5 && b.abs() < 0.5) {
        return param(format!("Z_ab needs |a|, |b| < 1/2, got a = {a}, b = {b}"));
    }
    if a + b == 0.0 {
        return param("Z_ab diverges at a + b = 0; use the continued G_0 instead");
    }
    let l = ln_z(-b, m, d) - ln_z(a, m, d) - libm::log((a + b).abs());
    Ok(LogScaled { ln_abs: l, sign: (a + b).signum() })
}

/// (ln|e^{−x/2} L_k^{(α)}(x)|, sign) for x > 0 and any integer α with k ≥ −α.
fn scaled_laguerre(k: usize, alpha: i64, x: f64) -> (f64, f64) {
    if alpha >= 0 {
        let a = alpha as f64;
        let (lp, sg) = LaguerreFunctions::new(a).log_value(k, x);
        let norm = 0.5 * (ln_gamma(k as f64 + a + 1.0) - ln_gamma(k as f64 + 1.0));
        return (lp + norm - 0.5 * a * libm::log(x), sg);
    }
    // L_k^{(−j)}(x) = (−x)^j (k−j)!/k! L_{k−j}^{(j)}(x)
    let j = (-alpha) as usize;
    debug_assert!(k >= j);
    let (l, s) = scaled_laguerre(k - j, j as i64, x);
    let ln = l + j as f64 * libm::log(x) + ln_gamma((k - j) as f64 + 1.0) - ln_gamma(k as f64 + 1.0);
    (ln, if j % 2 == 0 { s } else { -s })
}

/// Regular part L̃(ξ) of L, ξ > 0, in the ρ-free variables.
pub fn regular_l(m: usize, d: i64, xi: f64) -> f64 {
    let big = (m as i64 + d) as usize;
    let (ln, s) = scaled_laguerre(big - 1, 1 - 2 * d, xi);
    let sign = if big % 2 == 1 { s } else { -s };
    if s == 0.0 {
        0.0
    } else {
        sign * libm::exp(ln)
    }
}

/// Regular part R̃(η) of R, η > 0.
pub fn regular_r(m: usize, d: i64, eta: f64) -> f64 {
    regular_l(m, -d, eta)
}

fn cpow(z: Complex64, k: i64) -> Complex64 {
    z.powi(k as i32)
}

/// L̃(ξ) from the contour integral around 1 − ρ, including e^{(1/2−ρ)ξ}.
pub fn regular_l_contour(m: usize, d: i64, rho: f64, xi: f64, order: usize) -> Result<f64> {
    let (n, big) = (m as i64 - d, m as i64 + d);
    let path = ContourPath::circle(Complex64::new(1.0 - rho, 0.0), 0.5 * (1.0 - rho));
    let v = contour_integral(
        |z| (-z * xi).exp() * cpow(z + rho, n) / cpow(Complex64::new(1.0 - rho, 0.0) - z, big),
        path,
        order,
    )?;
    Ok((v / Complex64::new(0.0, -2.0 * PI)).re * libm::exp((0.5 - rho) * xi))
}

/// R̃(η) from the contour integral around −ρ, including e^{−(1/2−ρ)η}.
pub fn regular_r_contour(m: usize, d: i64, rho: f64, eta: f64, order: usize) -> Result<f64> {
    let (n, big) = (m as i64 - d, m as i64 + d);
    let path = ContourPath::circle(Complex64::new(-rho, 0.0), 0.5 * rho);
    let v = contour_integral(
        |z| (z * eta).exp() * cpow(Complex64::new(1.0 - rho, 0.0) - z, big) / cpow(z + rho, n),
        path,
        order,
    )?;
    Ok((v / Complex64::new(0.0, 2.0 * PI)).re * libm::exp(-(0.5 - rho) * eta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelRepresentation {
    /// Laguerre kernel of degree m−|d| and order 2|d| with the (x/y)^d factor.
    Polynomial,
    /// Double contour integral over Γ_{1−ρ} × Γ_{−ρ}, with `order` nodes per circle.
    Contour { order: usize },
}

/// The regular part of K_{m,d} on (0, ∞)².
#[derive(Debug, Clone, Copy)]
pub struct LaguerreKernel {
    pub m: usize,
    pub d: i64,
    pub rho: f64,
    pub repr: KernelRepresentation,
}

pub fn k_md(params: &EnsembleParams, repr: KernelRepresentation) -> LaguerreKernel {
    LaguerreKernel { m: params.m, d: params.d, rho: params.rho, repr }
}

impl LaguerreKernel {
    pub fn value(&self, x: f64, y: f64) -> Result<f64> {
        if !(x > 0.0 && y > 0.0) {
            return param("K_{m,d}(x, y) is evaluated for x, y > 0 only");
        }
        match self.repr {
            KernelRepresentation::Polynomial => poly_kernel(self.m, self.d, x, y),
            KernelRepresentation::Contour { order } => contour_kernel(self.m, self.d, self.rho, x, y, order),
        }
    }
}

impl Kernel for LaguerreKernel {
    fn eval(&self, x: f64, y: f64) -> f64 {
        self.value(x, y).unwrap_or(f64::NAN)
    }
    fn symmetric(&self) -> bool {
        self.d == 0
    }
    fn decay_scale(&self) -> f64 {
        4.0 * self.m as f64
    }
}

fn similarity(d: i64, x: f64, y: f64) -> Result<f64> {
    let f = libm::exp(d as f64 * (libm::log(x) - libm::log(y)));
    if !f.is_finite() || f == 0.0 {
        return Err(Error::Evaluation(format!(
            "(x/y)^d out of range: d = {d}, ln(x/y) = {}",
            libm::log(x) - libm::log(y)
        )));
    }
    Ok(f)
}

/// K_{m,d}(x,y) = K_{m−d}^{(2d)}(x,y)(x/y)^d for d ≥ 0 and K_{m,−d}(x,y) = K_{m,d}(y,x).
fn poly_kernel(m: usize, d: i64, x: f64, y: f64) -> Result<f64> {
    if d < 0 {
        return poly_kernel(m, -d, y, x);
    }
    let n = m - d as usize;
    if n > MAX_POLY_DEGREE {
        return param(format!("polynomial representation limited to degree {MAX_POLY_DEGREE}"));
    }
    let lf = LaguerreFunctions::new(2.0 * d as f64);
    let (px, py) = (lf.values(n - 1, x), lf.values(n - 1, y));
    let k: f64 = px.iter().zip(&py).map(|(a, b)| a * b).sum();
    Ok(k * similarity(d, x, y)?)
}

/// e^{(1/2−ρ)(x−y)} (4π²)^{-1} ∮∮ e^{−z₁x+z₂y} (z₁+ρ)^n (1−ρ−z₁)^{−M} (1−ρ−z₂)^M (ρ+z₂)^{−n} / (z₁−z₂).
fn contour_kernel(m: usize, d: i64, rho: f64, x: f64, y: f64, order: usize) -> Result<f64> {
    let (n, big) = (m as i64 - d, m as i64 + d);
    let one = Complex64::new(1.0 - rho, 0.0);
    let outer = ContourPath::circle(Complex64::new(1.0 - rho, 0.0), 0.5 * (1.0 - rho));
    let inner = ContourPath::circle(Complex64::new(-rho, 0.0), 0.5 * rho);
    let mut err = None;
    let v = contour_integral(
        |z1| {
            let left = (-z1 * x).exp() * cpow(z1 + rho, n) / cpow(one - z1, big);
            let r = contour_integral(
                |z2| (z2 * y).exp() * cpow(one - z2, big) / cpow(z2 + rho, n) / (z1 - z2),
                inner,
                order,
            );
            match r {
                Ok(r) => left * r,
                Err(e) => {
                    err.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        },
        outer,
        order,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(v.re / (4.0 * PI * PI) * libm::exp((0.5 - rho) * (x - y)))
}

/// ∫_0^∞ f(x+η) e^{cη} dη by composite Gauss–Legendre up to `end`.
fn shifted_transform(f: impl Fn(f64) -> f64, c: f64, x: f64, end: f64, panel: f64) -> f64 {
    if end <= x {
        return 0.0;
    }
    let gl = gauss_legendre(12).expect("order in range");
    let panels = (libm::ceil((end - x) / panel) as usize).max(1);
    crate::numerics::quadrature::composite(0.0, end - x, panels, &gl, |eta| f(x + eta) * libm::exp(c * eta))
}

/// Laguerre edge location (√n + √(n+α))² and its fluctuation scale.
fn edge_and_scale(n: usize, alpha: f64) -> (f64, f64) {
    let (r1, r2) = (libm::sqrt(n as f64), libm::sqrt(n as f64 + alpha));
    let edge = (r1 + r2) * (r1 + r2);
    let scale = (r1 + r2) * libm::cbrt(1.0 / r1 + 1.0 / r2);
    (edge, scale)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaguerreConfig {
    /// Gauss–Legendre order per panel.
    pub panel_order: usize,
    /// Panels cover the edge plus this many fluctuation scales.
    pub edge_units: f64,
    /// Exponential tail length in units of 1/(1/2 − max(|a|,|b|)).
    pub tail_units: f64,
    /// Panel width below the edge.
    pub bulk_panel: f64,
}

impl Default for LaguerreConfig {
    fn default() -> Self {
        Self { panel_order: 10, edge_units: 12.0, tail_units: 36.0, bulk_panel: 2.0 }
    }
}

impl LaguerreConfig {
    pub fn refined(&self) -> Self {
        Self { panel_order: self.panel_order + 6, edge_units: self.edge_units + 4.0, tail_units: self.tail_units + 12.0, bulk_panel: 0.5 * self.bulk_panel }
    }
}

/// Upper truncation point of [u, ∞) for the given decay rate.
fn truncation(params: &EnsembleParams, u: f64, cfg: &LaguerreConfig) -> (f64, f64, f64) {
    let n = params.degree();
    let (edge, scale) = edge_and_scale(n, 2.0 * params.d.unsigned_abs() as f64);
    let rate = (0.5 - params.a.abs().max(params.b.abs())).max(0.02);
    let core_end = u.max(edge) + cfg.edge_units * scale;
    (core_end, core_end + cfg.tail_units / rate, scale)
}

fn half_line_rule(params: &EnsembleParams, u: f64, cfg: &LaguerreConfig) -> Result<QuadratureRule> {
    let n = params.degree();
    let (edge, scale) = edge_and_scale(n, 2.0 * params.d.unsigned_abs() as f64);
    let (core_end, end, _) = truncation(params, u, cfg);
    let width = if u >= edge - 3.0 * scale { scale } else { scale.min(cfg.bulk_panel) };
    let gl = gauss_legendre(cfg.panel_order)?;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut push = |lo: f64, hi: f64, panels: usize| {
        let h = (hi - lo) / panels as f64;
        for p in 0..panels {
            let r = gl.on_interval(lo + h * p as f64, lo + h * (p + 1) as f64);
            nodes.extend_from_slice(&r.nodes);
            weights.extend_from_slice(&r.weights);
        }
    };
    push(u, core_end, (libm::ceil((core_end - u) / width) as usize).max(1));
    let tail_width = scale.max(6.0);
    push(core_end, end, (libm::ceil((end - core_end) / tail_width) as usize).max(1));
    let order = nodes.len();
    Ok(QuadratureRule { nodes, weights, order, domain: Domain::Interval { a: u, b: end } })
}

/// Everything needed on [u, ∞) for one parameter set: nodes, kernel matrix,
/// LU of 1 − P_uKP_u and the node values of the boundary-source vectors.
#[derive(Debug, Clone)]
pub struct FiniteSize {
    pub params: EnsembleParams,
    pub u: f64,
    end: f64,
    rule: QuadratureRule,
    /// K(x_i, x_j), row-major.
    kvals: Vec<f64>,
    op: DiscretizedOperator,
    lu: Lu,
}

/// Node values of e^{−cx} and of the four half-line transforms.
#[derive(Debug, Clone)]
struct Sources {
    e_a: Vec<f64>,
    e_b: Vec<f64>,
    /// (Kψ_b)(x_i)
    k_psi_b: Vec<f64>,
    /// (K*ψ_a)(x_i)
    kt_psi_a: Vec<f64>,
    /// (K P_u ψ_b)(x_i)
    k_pu_b: Vec<f64>,
    /// (K* P_u ψ_a)(x_i)
    kt_pu_a: Vec<f64>,
}

impl FiniteSize {
    pub fn new(params: &EnsembleParams, u: f64, cfg: &LaguerreConfig) -> Result<Self> {
        if !(u > 0.0) || !u.is_finite() {
            return param(format!("u must be positive, got {u}"));
        }
        let rule = half_line_rule(params, u, cfg)?;
        let end = match rule.domain {
            Domain::Interval { b, .. } => b,
            _ => unreachable!(),
        };
        let kvals = kernel_matrix(params, &rule.nodes)?;
        let op = DiscretizedOperator::from_kernel_values(rule.clone(), &kvals);
        let lu = op.factor();
        Ok(Self { params: *params, u, end, rule, kvals, op, lu })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rule.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.rule.weights
    }

    /// F(u) = det(1 − P_u K_{m,d} P_u).
    pub fn determinant(&self) -> f64 {
        self.lu.det()
    }

    /// S_i = ∫_{x_i}^{end} f(ξ) e^{c(ξ − x_i)} dξ, accumulated from the right.
    fn tail_transform(&self, f: impl Fn(f64) -> f64, c: f64) -> Vec<f64> {
        let x = &self.rule.nodes;
        let n = x.len();
        let gl = gauss_legendre(8).expect("order in range");
        let mut out = vec![0.0; n];
        let mut acc = 0.0;
        for i in (0..n).rev() {
            let hi = if i + 1 < n { x[i + 1] } else { self.end };
            let seg = gl.on_interval(x[i], hi).integrate(|xi| f(xi) * libm::exp(c * (xi - x[i])));
            acc = seg + libm::exp(c * (hi - x[i])) * acc;
            out[i] = acc;
        }
        out
    }

    fn sources(&self) -> Result<Sources> {
        let p = &self.params;
        let (m, d, a, b) = (p.m, p.d, p.a, p.b);
        let x = &self.rule.nodes;
        let w = &self.rule.weights;
        let n = x.len();
        let za = z_factor(a, m, d)?.value();
        let zmb = z_factor(-b, m, d)?.value();
        let lt = self.tail_transform(|xi| regular_l(m, d, xi), b);
        let rt = self.tail_transform(|xi| regular_r(m, d, xi), a);
        let e_a: Vec<f64> = x.iter().map(|&x| libm::exp(-a * x)).collect();
        let e_b: Vec<f64> = x.iter().map(|&x| libm::exp(-b * x)).collect();
        let k_psi_b: Vec<f64> = lt.iter().map(|v| zmb * v).collect();
        let kt_psi_a: Vec<f64> = rt.iter().map(|v| v / za).collect();
        let mut k_pu_b = vec![0.0; n];
        let mut kt_pu_a = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                k_pu_b[i] += self.kvals[i * n + j] * w[j] * e_b[j];
                kt_pu_a[i] += self.kvals[j * n + i] * w[j] * e_a[j];
            }
        }
        let s = Sources { e_a, e_b, k_psi_b, kt_psi_a, k_pu_b, kt_pu_a };
        if [&s.k_psi_b, &s.kt_psi_a, &s.k_pu_b, &s.kt_pu_a].iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::Evaluation("boundary-source vectors overflow at these parameters".into()));
        }
        Ok(s)
    }

    /// Σ w_i f_i r_i with r = (1 − P_uKP_u)^{-1} g on the nodes. The solve is
    /// not guarded by the determinant: F(u) multiplies every use.
    fn resolvent_pair(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        let sw = &self.op.sqrt_w;
        let rhs: Vec<f64> = g.iter().zip(sw).map(|(g, s)| g * s).collect();
        let y = self.lu.solve(&rhs)?;
        Ok(f.iter().zip(sw).zip(&y).map(|((f, s), y)| f * s * y).sum())
    }

    fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        self.rule.weights.iter().zip(f).zip(g).map(|((w, f), g)| w * f * g).sum()
    }

    /// Node values of (1 − K)ψ_b and (1 − K)*ψ_a.
    pub fn boundary_vectors(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let s = self.sources()?;
        let g: Vec<f64> = s.e_b.iter().zip(&s.k_psi_b).map(|(e, k)| e - k).collect();
        let h: Vec<f64> = s.e_a.iter().zip(&s.kt_psi_a).map(|(e, k)| e - k).collect();
        Ok((g, h))
    }

    /// G^{a,b}(u) in the requested form.
    pub fn g_ab(&self, mode: GForm) -> Result<f64> {
        let p = &self.params;
        let (m, d, a, b, u) = (p.m, p.d, p.a, p.b, self.u);
        let s = self.sources()?;
        let g_b: Vec<f64> = s.e_b.iter().zip(&s.k_psi_b).map(|(e, k)| e - k).collect();
        let h_a: Vec<f64> = s.e_a.iter().zip(&s.kt_psi_a).map(|(e, k)| e - k).collect();
        // (a+b) Z_{a,b} = e^ℓ
        let ell = ln_z(-b, m, d) - ln_z(a, m, d);
        let c = a + b;
        match mode {
            GForm::Direct => {
                if !(c > 0.0) {
                    return param("the unregularized form needs a + b > 0");
                }
                let z = z_ab(a, b, m, d)?.value();
                Ok((1.0 - self.resolvent_pair(&h_a, &g_b)? / z) / c)
            }
            GForm::Regularized => {
                let first = regular_difference(ell, c, u, a, m, d);
                let second = self.dot(&s.e_a, &s.k_psi_b);
                let f_a: Vec<f64> = s.kt_pu_a.iter().zip(&s.kt_psi_a).map(|(p, k)| p - k).collect();
                let third = self.resolvent_pair(&f_a, &g_b)?;
                Ok((first + second - third) / libm::exp(ell))
            }
            GForm::RegularizedAlt => {
                let first = regular_difference(ell, c, u, a, m, d);
                let second = self.dot(&s.kt_psi_a, &s.e_b);
                let k_b: Vec<f64> = s.k_pu_b.iter().zip(&s.k_psi_b).map(|(p, k)| p - k).collect();
                let third = self.resolvent_pair(&h_a, &k_b)?;
                Ok((first + second - third) / libm::exp(ell))
            }
        }
    }

    /// det(1 − P_u K^{a,b}_{m,d} P_u) from the rank-one kernel itself.
    pub fn rank_one_determinant(&self) -> Result<f64> {
        let p = &self.params;
        let z = z_ab(p.a, p.b, p.m, p.d)?.value();
        let (g, h) = self.boundary_vectors()?;
        let n = g.len();
        let mut vals = self.kvals.clone();
        for i in 0..n {
            for j in 0..n {
                vals[i * n + j] += g[i] * h[j] / z;
            }
        }
        let op = DiscretizedOperator::from_kernel_values(self.rule.clone(), &vals);
        Ok(op.factor().det())
    }

    /// max over the nodes of |(K²)(x_i,x_j) − K(x_i,x_j)|, with the composition
    /// taken over [u, ∞) (exact projection only at u → 0).
    pub fn projection_defect(&self) -> f64 {
        let n = self.rule.order;
        let w = &self.rule.weights;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let k2: f64 = (0..n).map(|l| self.kvals[i * n + l] * w[l] * self.kvals[l * n + j]).sum();
                worst = worst.max((k2 - self.kvals[i * n + j]).abs());
            }
        }
        worst
    }
}

/// ⟨ψ_a, (1−K)ψ_b⟩ − ⟨ψ_a, P_uψ_b⟩ = (e^ℓ − e^{−(a+b)u})/(a+b), continued to a+b = 0.
fn regular_difference(ell: f64, c: f64, u: f64, a: f64, m: usize, d: i64) -> f64 {
    if c.abs() < 1e-12 {
        return u + (2.0 * a * d as f64 - m as f64) / (0.25 - a * a);
    }
    libm::exp(-c * u) * libm::expm1(ell + c * u) / c
}

fn kernel_matrix(params: &EnsembleParams, nodes: &[f64]) -> Result<Vec<f64>> {
    let n = nodes.len();
    let d = params.d.unsigned_abs() as usize;
    let deg = params.m - d;
    if deg > MAX_POLY_DEGREE {
        return param(format!("polynomial representation limited to degree {MAX_POLY_DEGREE}"));
    }
    let lf = LaguerreFunctions::new(2.0 * d as f64);
    let p: Vec<Vec<f64>> = nodes.iter().map(|&x| lf.values(deg - 1, x)).collect();
    let mut vals = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let k: f64 = p[i].iter().zip(&p[j]).map(|(a, b)| a * b).sum();
            vals[i * n + j] = k;
            vals[j * n + i] = k;
        }
    }
    if d > 0 {
        // K_{m,|d|}(x,y) = K^{sym}(x,y)(x/y)^{|d|}; negative d is the transpose.
        let sgn = params.d.signum();
        for i in 0..n {
            for j in 0..n {
                vals[i * n + j] *= similarity(sgn * d as i64, nodes[i], nodes[j])?;
            }
        }
    }
    Ok(vals)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GForm {
    /// 1 − Z_{a,b}^{-1}⟨(1−K)*ψ_a, (1−P_uKP_u)^{-1}(1−K)ψ_b⟩ over a+b; needs a+b > 0.
    Direct,
    /// Subtraction of ⟨ψ_a, P_u(1−K)ψ_b⟩.
    Regularized,
    /// Subtraction of ⟨ψ_a, (1−K)P_uψ_b⟩.
    RegularizedAlt,
}

pub fn f_u(params: &EnsembleParams, u: f64) -> Result<f64> {
    Ok(FiniteSize::new(params, u, &LaguerreConfig::default())?.determinant())
}

pub fn g_ab_u(params: &EnsembleParams, u: f64, mode: GForm) -> Result<f64> {
    FiniteSize::new(params, u, &LaguerreConfig::default())?.g_ab(mode)
}

/// G_0(u) for b = −a; the a ≥ 0 branch subtracts ⟨ψ_a, P_u(1−K)ψ_{−a}⟩, the
/// a < 0 branch ⟨ψ_a, (1−K)P_uψ_{−a}⟩.
pub fn g0_u(params: &EnsembleParams, u: f64) -> Result<f64> {
    g0_with(params, u, &LaguerreConfig::default())
}

pub fn g0_with(params: &EnsembleParams, u: f64, cfg: &LaguerreConfig) -> Result<f64> {
    if params.a + params.b != 0.0 {
        return param("G_0 needs b = −a");
    }
    let form = if params.a >= 0.0 { GForm::Regularized } else { GForm::RegularizedAlt };
    FiniteSize::new(params, u, cfg)?.g_ab(form)
}

/// Which of (1 − K)ψ_c and (1 − K)*ψ_c to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Kernel,
    Adjoint,
}

/// x ↦ ((1−K)ψ_c)(x) or ((1−K)*ψ_c)(x) on (0, ∞).
#[derive(Debug, Clone, Copy)]
pub struct OneMinusKPsi {
    m: usize,
    d: i64,
    c: f64,
    side: Side,
    z: f64,
    end: f64,
}

pub fn one_minus_k_psi(params: &EnsembleParams, c: f64, side: Side) -> Result<OneMinusKPsi> {
    let (m, d) = (params.m, params.d);
    let z = match side {
        Side::Kernel => z_factor(-c, m, d)?.value(),
        Side::Adjoint => 1.0 / z_factor(c, m, d)?.value(),
    };
    let probe = EnsembleParams { a: c, b: c, ..*params };
    let (_, end, _) = truncation(&probe, 0.0, &LaguerreConfig::default());
    Ok(OneMinusKPsi { m, d, c, side, z, end })
}

impl OneMinusKPsi {
    pub fn eval(&self, x: f64) -> f64 {
        let (m, d, c) = (self.m, self.d, self.c);
        let t = match self.side {
            Side::Kernel => shifted_transform(|xi| regular_l(m, d, xi), c, x, self.end.max(x + 40.0), 1.0),
            Side::Adjoint => shifted_transform(|xi| regular_r(m, d, xi), c, x, self.end.max(x + 40.0), 1.0),
        };
        libm::exp(-c * x) - self.z * t
    }
}

/// K^{a,b}_{m,d}(x,y) = K_{m,d}(x,y) + Z_{a,b}^{-1} ((1−K)ψ_b)(x) ((1−K)*ψ_a)(y).
#[derive(Debug, Clone, Copy)]
pub struct RankOneKernel {
    base: LaguerreKernel,
    g: OneMinusKPsi,
    h: OneMinusKPsi,
    z: f64,
}

pub fn rank_one_kernel(params: &EnsembleParams) -> Result<RankOneKernel> {
    if !(params.a > 0.0 && params.b > 0.0) {
        return param("the rank-one kernel is a probability kernel only for a, b > 0");
    }
    Ok(RankOneKernel {
        base: k_md(params, KernelRepresentation::Polynomial),
        g: one_minus_k_psi(params, params.b, Side::Kernel)?,
        h: one_minus_k_psi(params, params.a, Side::Adjoint)?,
        z: z_ab(params.a, params.b, params.m, params.d)?.value(),
    })
}

impl RankOneKernel {
    pub fn value(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.base.value(x, y)? + self.g.eval(x) * self.h.eval(y) / self.z)
    }

    /// One-point density of the line ensemble at height y.
    pub fn diagonal(&self, y: f64) -> Result<f64> {
        self.value(y, y)
    }
}

impl Kernel for RankOneKernel {
    fn eval(&self, x: f64, y: f64) -> f64 {
        self.value(x, y).unwrap_or(f64::NAN)
    }
}

/// ℙ₀(h_0(2d, 2m+1) ≤ u) = d/du[F(u) G_0(u)] on a grid.
#[derive(Debug, Clone)]
pub struct StationaryCdf {
    pub table: DistributionTable,
    pub rho: f64,
    pub m: usize,
    pub d: i64,
    /// F(u)G_0(u) at the grid points.
    pub product: Vec<f64>,
}

fn product_at(params: &EnsembleParams, u: f64, cfg: &LaguerreConfig) -> Result<f64> {
    let fs = FiniteSize::new(params, u, cfg)?;
    let f = fs.determinant();
    let form = if params.a >= 0.0 { GForm::Regularized } else { GForm::RegularizedAlt };
    Ok(f * fs.g_ab(form)?)
}

fn cdf_at(params: &EnsembleParams, u: f64, cfg: &LaguerreConfig) -> Result<f64> {
    let h = 0.05f64.min(u / 100.0);
    let v: Vec<f64> = [-2.0, -1.0, 1.0, 2.0].iter().map(|k| product_at(params, u + k * h, cfg)).collect::<Result<_>>()?;
    Ok((v[0] - 8.0 * v[1] + 8.0 * v[2] - v[3]) / (12.0 * h))
}

pub fn stationary_cdf(rho: f64, m: usize, d: i64, u_grid: &[f64]) -> Result<StationaryCdf> {
    let params = EnsembleParams::stationary(rho, m, d)?;
    if u_grid.is_empty() || u_grid[0] <= 0.0 || u_grid.windows(2).any(|p| !(p[1] > p[0])) {
        return param("u grid must be positive and strictly increasing");
    }
    let cfg = LaguerreConfig::default();
    let mut cdf = Vec::with_capacity(u_grid.len());
    let mut product = Vec::with_capacity(u_grid.len());
    for &u in u_grid {
        cdf.push(cdf_at(&params, u, &cfg)?);
        product.push(product_at(&params, u, &cfg)?);
    }
    if cdf.windows(2).any(|p| p[1] < p[0] - 1e-5) {
        return Err(Error::Diagnostic(format!("stationary cdf at (ρ, m, d) = ({rho}, {m}, {d}) not monotone; under-resolved")));
    }
    let table = DistributionTable {
        grid: u_grid.to_vec(),
        cdf,
        density: None,
        meta: TableMeta {
            provenance: Provenance::Fredholm,
            params: vec![("rho".into(), rho), ("m".into(), m as f64), ("d".into(), d as f64)],
        },
    };
    Ok(StationaryCdf { table, rho, m, d, product })
}

impl StationaryCdf {
    /// F(c₂)G₀(c₂) − F(c₁)G₀(c₁) between the first and last grid points.
    pub fn endpoint_difference(&self) -> f64 {
        self.product[self.product.len() - 1] - self.product[0]
    }

    /// ∫_{c₁}^{c₂} of the pointwise cdf by Gauss–Legendre, for comparison
    /// with `endpoint_difference` over the same interval.
    pub fn integrated(&self, c1: f64, c2: f64) -> Result<f64> {
        let params = EnsembleParams::stationary(self.rho, self.m, self.d)?;
        let cfg = LaguerreConfig::default();
        let gl = gauss_legendre(16)?;
        let panels = libm::ceil((c2 - c1) / 2.0).max(1.0) as usize;
        let h = (c2 - c1) / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            let r = gl.on_interval(c1 + h * p as f64, c1 + h * (p + 1) as f64);
            for (&u, &w) in r.nodes.iter().zip(&r.weights) {
                acc += w * cdf_at(&params, u, &cfg)?;
            }
        }
        Ok(acc)
    }

    pub fn product_at(&self, u: f64) -> Result<f64> {
        product_at(&EnsembleParams::stationary(self.rho, self.m, self.d)?, u, &LaguerreConfig::default())
    }
}

/// The large parameter of an edge-scaling map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleParameter {
    Time(f64),
    Size(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingMap {
    pub rho: f64,
    pub w: f64,
    pub s: f64,
    pub parameter: ScaleParameter,
    pub m: usize,
    pub d: i64,
    pub u: f64,
    pub alpha: i64,
    pub kappa: f64,
    pub chi: f64,
    /// χ^{-1/3}t^{1/3} for the time map, κN^{1/3} for the size map.
    pub scale: f64,
}

/// Nearest integer to target/2 among ⌊v⌋/2 rounded either way: the floored
/// value v is split into an integer half, choosing the candidate closest
/// to the unrounded target.
fn half_with_parity(target: f64) -> i64 {
    let k = libm::floor(target) as i64;
    if k.rem_euclid(2) == 0 {
        return k / 2;
    }
    let lo = (k - 1).div_euclid(2);
    let hi = lo + 1;
    if (target / 2.0 - lo as f64).abs() <= (hi as f64 - target / 2.0).abs() {
        lo
    } else {
        hi
    }
}

pub fn scaling_map(rho: f64, w: f64, s: f64, parameter: ScaleParameter) -> Result<ScalingMap> {
    if !(rho > 0.0 && rho < 1.0) {
        return param("density must lie in (0, 1)");
    }
    let chi = rho * (1.0 - rho);
    let kappa = 1.0 / (rho * libm::cbrt(1.0 - rho));
    let (m, d, u, scale) = match parameter {
        ScaleParameter::Time(t) => {
            if !(t >= 1.0) {
                return param("t must be at least 1");
            }
            let (c13, t13) = (libm::cbrt(chi), libm::cbrt(t));
            let two_m = (1.0 - 2.0 * chi) * t + 2.0 * w * (1.0 - 2.0 * rho) * c13 * t13 * t13 - s * c13 * c13 * t13;
            let two_d = (1.0 - 2.0 * rho) * t + 2.0 * w * c13 * t13 * t13;
            let u = libm::floor(t + s * t13 / c13);
            (half_with_parity(two_m), half_with_parity(two_d), u, t13 / c13)
        }
        ScaleParameter::Size(n) => {
            if n < 1 {
                return param("N must be at least 1");
            }
            let nf = n as f64;
            let (n13, r2) = (libm::cbrt(nf), rho * rho);
            let q = 1.0 - rho;
            let alpha = (1.0 - 2.0 * rho) / r2 * nf
                + 2.0 * w * libm::pow(q, 4.0 / 3.0) / r2 * n13 * n13
                + (8.0 / 3.0 * w * w * q + s * (1.0 - 2.0 * rho)) * libm::pow(q, 2.0 / 3.0) / r2 * n13;
            let u = nf / r2 + 2.0 * w * libm::cbrt(q) / r2 * n13 * n13 + (8.0 / 3.0 * w * w + s) * libm::pow(q, 2.0 / 3.0) / r2 * n13;
            let d = libm::round(alpha / 2.0) as i64;
            ((n as i64 + d).max(0), d, u, kappa * n13)
        }
    };
    if m <= d.abs() {
        return param(format!("derived (m, d) = ({m}, {d}) outside |d| < m"));
    }
    Ok(ScalingMap { rho, w, s, parameter, m: m as usize, d, u, alpha: 2 * d, kappa, chi, scale })
}

impl ScalingMap {
    pub fn params(&self) -> Result<EnsembleParams> {
        EnsembleParams::stationary(self.rho, self.m, self.d)
    }
}

/// How H_N and Ĥ_N are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HnRoute {
    /// Circle about the pole through the relevant real saddle point.
    Contour,
    /// Log-scaled Laguerre recurrence.
    Polynomial,
}

/// Real saddle of the I (`right = true`) or Ĩ integrand: n/(z+ρ) + M/(1−ρ−z) = ξ.
fn saddle(n: f64, big: f64, rho: f64, xi: f64, right: bool) -> f64 {
    let g = |z: f64| n / (z + rho) + big / (1.0 - rho - z);
    let zs = 1.0 / (1.0 + libm::sqrt(big / n)) - rho;
    if g(zs) >= xi {
        return zs;
    }
    let (mut lo, mut hi) = if right { (zs, 1.0 - rho) } else { (-rho, zs) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let above = g(mid) > xi;
        if above == right {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// ln of the I or Ĩ integrand; `hat` selects Ĩ.
fn log_integrand(z: Complex64, n: f64, big: f64, rho: f64, xi: f64, hat: bool) -> Complex64 {
    let one = Complex64::new(1.0 - rho, 0.0);
    if hat {
        z * xi + (one - z).ln() * big - (z + rho).ln() * n
    } else {
        -z * xi + (z + rho).ln() * n - (one - z).ln() * big
    }
}

/// I_{m,d}(ξ)/(−2πi) (or Ĩ_{m,d}(ξ)/(2πi) when `hat`) as sign·e^{ln}, by the saddle circle.
fn contour_i(m: usize, d: i64, rho: f64, xi: f64, hat: bool) -> Result<(f64, f64)> {
    let (n, big) = ((m as i64 - d) as f64, (m as i64 + d) as f64);
    let zs = saddle(n, big, rho, xi, !hat);
    let (center, radius) = if hat { (-rho, zs + rho) } else { (1.0 - rho, 1.0 - rho - zs) };
    let peak = log_integrand(Complex64::new(zs, 0.0), n, big, rho, xi, hat).re;
    let order = ((8.0 * (n + big + xi * radius)) as usize + 256).next_power_of_two();
    let v = contour_integral(
        |z| (log_integrand(z, n, big, rho, xi, hat) - peak).exp(),
        ContourPath::circle(Complex64::new(center, 0.0), radius),
        order,
    )?;
    let v = if hat { v / Complex64::new(0.0, 2.0 * PI) } else { v / Complex64::new(0.0, -2.0 * PI) };
    if v.re == 0.0 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    Ok((libm::log(v.re.abs()) + peak, v.re.signum()))
}

/// H_N(y) = Z(a) κN^{1/3} I(u + yκN^{1/3})/(−2πi), a = 1/2 − ρ.
pub fn h_n(map: &ScalingMap, y: f64, route: HnRoute) -> Result<f64> {
    let xi = map.u + y * map.scale;
    let a = 0.5 - map.rho;
    let lz = ln_z(a, map.m, map.d) + libm::log(map.scale);
    let (l, s) = match route {
        HnRoute::Contour => contour_i(map.m, map.d, map.rho, xi, false)?,
        HnRoute::Polynomial => {
            let v = regular_l(map.m, map.d, xi);
            (libm::log(v.abs()) - a * xi, v.signum())
        }
    };
    Ok(s * libm::exp(l + lz))
}

/// Ĥ_N(y) = Z(a)^{-1} κN^{1/3} Ĩ(u + yκN^{1/3})/(2πi). `via_symmetry` evaluates
/// Ĩ_{m,d}(·;ρ) as −I_{m,−d}(·;1−ρ).
pub fn h_hat_n(map: &ScalingMap, y: f64, via_symmetry: bool) -> Result<f64> {
    let xi = map.u + y * map.scale;
    let a = 0.5 - map.rho;
    let lz = -ln_z(a, map.m, map.d) + libm::log(map.scale);
    let (l, s) = if via_symmetry {
        contour_i(map.m, -map.d, 1.0 - map.rho, xi, false)?
    } else {
        contour_i(map.m, map.d, map.rho, xi, true)?
    };
    Ok(s * libm::exp(l + lz))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HnReport {
    pub y: Vec<f64>,
    pub h: Vec<f64>,
    pub h_hat: Vec<f64>,
    /// |H_N − φ_{w,s}| and |Ĥ_N − φ_{−w,s}| on the grid.
    pub error: Vec<f64>,
    pub error_hat: Vec<f64>,
    /// max of |H_N(y)| e^{y^{3/2}/3} over grid points with y ≥ 0.
    pub envelope: f64,
    /// max |Ĥ_N − Ĥ_N via (ρ, w) ↦ (1−ρ, −w)|.
    pub symmetry_gap: f64,
}

fn phi_ws(w: f64, s: f64, y: f64) -> Result<f64> {
    let q = w * w + s + y;
    Ok(airy_ai(q)? * libm::exp(w * q - w * w * w / 3.0))
}

pub fn h_n_diagnostics(rho: f64, w: f64, s: f64, n: usize, y_grid: &[f64]) -> Result<HnReport> {
    if n < 50 {
        return param("h_n_diagnostics needs N ≥ 50");
    }
    let map = scaling_map(rho, w, s, ScaleParameter::Size(n))?;
    let mut r = HnReport {
        y: y_grid.to_vec(),
        h: vec![],
        h_hat: vec![],
        error: vec![],
        error_hat: vec![],
        envelope: 0.0,
        symmetry_gap: 0.0,
    };
    for &y in y_grid {
        let h = h_n(&map, y, HnRoute::Contour)?;
        let hh = h_hat_n(&map, y, false)?;
        let hs = h_hat_n(&map, y, true)?;
        r.error.push((h - phi_ws(w, s, y)?).abs());
        r.error_hat.push((hh - phi_ws(-w, s, y)?).abs());
        r.symmetry_gap = r.symmetry_gap.max((hh - hs).abs());
        if y >= 0.0 {
            r.envelope = r.envelope.max(h.abs() * libm::exp(libm::pow(y, 1.5) / 3.0));
        }
        r.h.push(h);
        r.h_hat.push(hh);
    }
    Ok(r)
}

/// Errors of F and the rescaled G_0 against their edge limits.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeConvergence {
    pub sizes: Vec<usize>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub f_limit: f64,
    pub g_limit: f64,
    pub f_error: Vec<f64>,
    pub g_error: Vec<f64>,
    /// Least-squares slopes of log error against log N.
    pub f_exponent: f64,
    pub g_exponent: f64,
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn edge_convergence(rho: f64, w: f64, s: f64, sizes: &[usize]) -> Result<EdgeConvergence> {
    if sizes.len() < 2 {
        return param("need at least two sizes for a rate");
    }
    let q = s + w * w;
    let f_limit = f_gue(q)?;
    let g_limit = g_scaling(q, w.abs())?;
    let cfg = LaguerreConfig::default();
    let mut out = EdgeConvergence {
        sizes: sizes.to_vec(),
        f: vec![],
        g: vec![],
        f_limit,
        g_limit,
        f_error: vec![],
        g_error: vec![],
        f_exponent: 0.0,
        g_exponent: 0.0,
    };
    for &n in sizes {
        let map = scaling_map(rho, w, s, ScaleParameter::Size(n))?;
        let params = map.params()?;
        let fs = FiniteSize::new(&params, map.u, &cfg)?;
        let form = if params.a >= 0.0 { GForm::Regularized } else { GForm::RegularizedAlt };
        let f = fs.determinant();
        let g = fs.g_ab(form)? / map.scale;
        out.f_error.push((f - f_limit).abs());
        out.g_error.push((g - g_limit).abs());
        out.f.push(f);
        out.g.push(g);
    }
    let lx: Vec<f64> = sizes.iter().map(|&n| libm::log(n as f64)).collect();
    let lf: Vec<f64> = out.f_error.iter().map(|e| libm::log(*e)).collect();
    let lg: Vec<f64> = out.g_error.iter().map(|e| libm::log(*e)).collect();
    out.f_exponent = slope(&lx, &lf);
    out.g_exponent = slope(&lx, &lg);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::composite;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn z_factor_values() {
        assert!(close(z_factor(0.0, 2, 1).unwrap().value(), 0.25, 1e-15));
        assert!(close(z_factor(0.0, 7, 0).unwrap().value(), 1.0, 1e-15));
        assert!(close(z_factor(0.25, 3, 0).unwrap().value(), 27.0, 1e-13));
        assert!(z_factor(0.5, 3, 0).is_err());
        assert!(close(z_ab(0.25, 0.25, 1, 0).unwrap().value(), 2.0 / 9.0, 1e-14));
        let (x, y) = (z_ab(0.1, 0.3, 4, 0).unwrap(), z_ab(0.3, 0.1, 4, 0).unwrap());
        assert!(close(x.value(), y.value(), 1e-13));
        assert!(z_ab(0.2, -0.2, 3, 1).is_err());
    }

    #[test]
    fn regular_parts_match_contours() {
        for &(m, d) in &[(1usize, 0i64), (3, 1), (4, -2), (5, 2), (2, -1)] {
            for &rho in &[0.3, 0.5, 0.7] {
                for &xi in &[0.4, 2.0, 7.5] {
                    let l = regular_l(m, d, xi);
                    let lc = regular_l_contour(m, d, rho, xi, 256).unwrap();
                    assert!(close(l, lc, 1e-11), "L m={m} d={d} rho={rho} xi={xi}: {l} {lc}");
                    let r = regular_r(m, d, xi);
                    let rc = regular_r_contour(m, d, rho, xi, 256).unwrap();
                    assert!(close(r, rc, 1e-11), "R m={m} d={d} rho={rho} xi={xi}: {r} {rc}");
                }
            }
        }
    }

    #[test]
    fn single_mode_kernel() {
        let p = EnsembleParams::new(1, 0, 0.2, 0.2, 0.5).unwrap();
        let k = k_md(&p, KernelRepresentation::Polynomial);
        for &(x, y) in &[(0.3, 1.7), (2.0, 2.0), (5.0, 0.1)] {
            assert!(close(k.value(x, y).unwrap(), libm::exp(-(x + y) / 2.0), 1e-14));
        }
    }

    #[test]
    fn polynomial_and_contour_agree() {
        for &(m, d) in &[(2usize, 0i64), (3, 1), (5, 2), (3, -1)] {
            for &rho in &[0.3, 0.4, 0.5, 0.7] {
                let p = EnsembleParams::new(m, d, 0.1, 0.1, rho).unwrap();
                let kp = k_md(&p, KernelRepresentation::Polynomial);
                let kc = k_md(&p, KernelRepresentation::Contour { order: 64 });
                for &(x, y) in &[(2.0, 1.5), (0.5, 4.0), (6.0, 3.0)] {
                    let (a, b) = (kp.value(x, y).unwrap(), kc.value(x, y).unwrap());
                    assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-3), "m={m} d={d} rho={rho} ({x},{y}) {a} {b}");
                }
            }
        }
    }

    #[test]
    fn negative_d_is_the_transpose() {
        let p = EnsembleParams::new(4, 2, 0.1, 0.1, 0.5).unwrap();
        let q = EnsembleParams::new(4, -2, 0.1, 0.1, 0.5).unwrap();
        let (kp, kq) = (k_md(&p, KernelRepresentation::Polynomial), k_md(&q, KernelRepresentation::Contour { order: 64 }));
        let (x, y) = (1.3, 3.1);
        assert!(close(kq.value(x, y).unwrap(), kp.value(y, x).unwrap(), 1e-9));
        assert!((kq.value(x, y).unwrap() - kp.value(x, y).unwrap()).abs() > 1e-3);
    }

    #[test]
    fn trace_and_projection() {
        let p = EnsembleParams::new(4, 1, 0.1, 0.1, 0.5).unwrap();
        let k = k_md(&p, KernelRepresentation::Polynomial);
        let gl = gauss_legendre(16).unwrap();
        let tr = composite(0.0, 80.0, 80, &gl, |x| k.value(x, x).unwrap());
        assert!((tr - 3.0).abs() < 1e-8, "trace {tr}");
        // composition over (0, ∞): small u keeps the projection property up to e^{-u}-type terms
        let fs = FiniteSize::new(&p, 1e-9, &LaguerreConfig::default()).unwrap();
        assert!(fs.projection_defect() < 1e-6, "{}", fs.projection_defect());
    }

    fn convolution_oracle(m: usize, d: i64, c: f64, x: f64) -> f64 {
        // (1−K)ψ_c = Z(−c) L P_+ ψ_c; the singular part of L is (−1)^m δ when d = 0
        let z = z_factor(-c, m, d).unwrap().value();
        let delta = if d == 0 { if m % 2 == 0 { 1.0 } else { -1.0 } } else { 0.0 };
        let gl = gauss_legendre(16).unwrap();
        let conv = composite(0.0, x, 16, &gl, |w| regular_l(m, d, x - w) * libm::exp(-c * w));
        z * (delta * libm::exp(-c * x) + conv)
    }

    #[test]
    fn one_minus_k_psi_two_ways() {
        // m = 1, d = 0: (1−K)ψ_c = e^{−cx} − e^{−x/2}/(1/2 + c)
        let p = EnsembleParams::new(1, 0, 0.25, 0.25, 0.5).unwrap();
        let g = one_minus_k_psi(&p, 0.25, Side::Kernel).unwrap();
        for &x in &[0.2, 1.0, 3.0, 9.0] {
            let closed = libm::exp(-x / 4.0) - libm::exp(-x / 2.0) / 0.75;
            assert!((g.eval(x) - closed).abs() < 1e-12, "x={x}");
            assert!((convolution_oracle(1, 0, 0.25, x) - closed).abs() < 1e-12);
        }
        // for d < 0 the singular part of L carries derivatives of δ, so only d ≥ 0 here
        for &(m, d, c) in &[(3usize, 1i64, 0.2), (4, 0, -0.15), (3, 0, 0.0), (5, 2, 0.3)] {
            let p = EnsembleParams::new(m, d, c, c, 0.5).unwrap();
            let g = one_minus_k_psi(&p, c, Side::Kernel).unwrap();
            for &x in &[0.5, 2.0, 6.0] {
                let o = convolution_oracle(m, d, c, x);
                assert!((g.eval(x) - o).abs() < 1e-9 * (1.0 + o.abs()), "m={m} d={d} c={c} x={x}: {} {o}", g.eval(x));
            }
        }
    }

    #[test]
    fn boundary_vectors_follow_the_transpose() {
        for &(m, d, c) in &[(5usize, 2i64, 0.3), (4, 1, -0.2)] {
            let p = EnsembleParams::new(m, d, 0.1, 0.1, 0.5).unwrap();
            let q = EnsembleParams::new(m, -d, 0.1, 0.1, 0.5).unwrap();
            let h = one_minus_k_psi(&p, c, Side::Adjoint).unwrap();
            let g = one_minus_k_psi(&q, c, Side::Kernel).unwrap();
            for &x in &[0.5, 2.0, 7.0] {
                assert!(close(h.eval(x), g.eval(x), 1e-12));
            }
        }
    }

    #[test]
    fn one_minus_k_psi_is_square_integrable_uniformly() {
        let p = EnsembleParams::new(3, 1, 0.2, 0.2, 0.5).unwrap();
        let g = one_minus_k_psi(&p, 0.2, Side::Kernel).unwrap();
        let gl = gauss_legendre(16).unwrap();
        let norms: Vec<f64> = [0.1, 1.0, 10.0].iter().map(|&u| composite(u, u + 150.0, 150, &gl, |x| g.eval(x).powi(2))).collect();
        assert!(norms[0] >= norms[1] && norms[1] >= norms[2] && norms[0].is_finite());
    }

    #[test]
    fn z_is_the_pairing() {
        for &(a, b, m, d) in &[(0.2, 0.1, 4usize, 1i64), (0.3, 0.25, 3, 0), (0.1, 0.35, 5, -2)] {
            let p = EnsembleParams::new(m, d, a, b, 0.5).unwrap();
            // the side without singular parts: (1−K)ψ_b for d ≥ 0, (1−K)*ψ_a for d < 0
            let gl = gauss_legendre(16).unwrap();
            let top = 40.0 + 30.0 / (a + b);
            let pairing = if d >= 0 {
                let g = one_minus_k_psi(&p, b, Side::Kernel).unwrap();
                composite(0.0, top, top as usize, &gl, |x| libm::exp(-a * x) * g.eval(x))
            } else {
                let h = one_minus_k_psi(&p, a, Side::Adjoint).unwrap();
                composite(0.0, top, top as usize, &gl, |x| libm::exp(-b * x) * h.eval(x))
            };
            let z = z_ab(a, b, m, d).unwrap().value();
            assert!((pairing - z).abs() <= 1e-8 * z.abs(), "({a},{b},{m},{d}): {pairing} vs {z}");
            // with (1/4 − b²)^{−d} in place of (1/4 − b²)^{d}
            let flipped = z * libm::pow(0.25 - b * b, -2.0 * d as f64);
            assert!(d == 0 || (pairing - flipped).abs() > 0.1 * z.abs());
        }
    }

    #[test]
    fn f_closed_form_and_limits() {
        let p = EnsembleParams::new(1, 0, 0.1, 0.1, 0.5).unwrap();
        for &u in &[0.3, 1.0, 4.0] {
            assert!((f_u(&p, u).unwrap() - (1.0 - libm::exp(-u))).abs() < 1e-10);
        }
        // 1 − F(10(m−d)) is 1.7e-8 at (3, 0), so the empty-projection check uses 20(m−d)
        let p = EnsembleParams::new(3, 0, 0.1, 0.1, 0.5).unwrap();
        assert!(1.0 - f_u(&p, 30.0).unwrap() < 2e-8);
        assert!(f_u(&p, 60.0).unwrap() >= 1.0 - 1e-8);
        let p = EnsembleParams::new(5, 2, 0.1, 0.1, 0.5).unwrap();
        assert!(f_u(&p, 60.0).unwrap() >= 1.0 - 1e-8);
        let vals: Vec<f64> = (1..=12).map(|k| f_u(&p, k as f64 * 1.5).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn rank_one_factorization() {
        let p = EnsembleParams::new(3, 1, 0.2, 0.1, 0.5).unwrap();
        let fs = FiniteSize::new(&p, 4.0, &LaguerreConfig::default()).unwrap();
        let lhs = fs.rank_one_determinant().unwrap();
        let f = fs.determinant();
        for form in [GForm::Direct, GForm::Regularized, GForm::RegularizedAlt] {
            let g = fs.g_ab(form).unwrap();
            assert!((lhs - f * 0.3 * g).abs() < 1e-8, "{form:?}: {lhs} vs {}", f * 0.3 * g);
        }
    }

    #[test]
    fn regularized_forms_agree() {
        let p = EnsembleParams::new(3, 1, 0.3, -0.1, 0.5).unwrap();
        let fs = FiniteSize::new(&p, 4.0, &LaguerreConfig::default()).unwrap();
        let (x, y) = (fs.g_ab(GForm::Regularized).unwrap(), fs.g_ab(GForm::RegularizedAlt).unwrap());
        assert!((x - y).abs() < 1e-8 * (1.0 + x.abs()), "{x} {y}");
        let z = fs.g_ab(GForm::Direct).unwrap();
        assert!((x - z).abs() < 1e-8 * (1.0 + x.abs()));
    }

    #[test]
    fn continuation_to_b_equal_minus_a() {
        let a = 0.2;
        let base = EnsembleParams::stationary(0.3, 3, 1).unwrap();
        let g0 = g0_u(&base, 3.0).unwrap();
        let at = |eps: f64| g_ab_u(&EnsembleParams { b: -a + eps, ..base }, 3.0, GForm::Regularized).unwrap();
        let (g1, g2) = (at(1e-4), at(2e-4));
        assert!((g1 - g0).abs() < 1e-3);
        assert!((2.0 * g1 - g2 - g0).abs() < 1e-6, "{g0} {g1} {g2}");
        // both branches are valid continuations
        let fs = FiniteSize::new(&base, 3.0, &LaguerreConfig::default()).unwrap();
        let alt = fs.g_ab(GForm::RegularizedAlt).unwrap();
        assert!((alt - g0).abs() < 1e-8 * (1.0 + g0.abs()));
    }

    #[test]
    fn explicit_first_term() {
        assert_eq!(regular_difference(0.0, 0.0, 3.0, 0.0, 2, 5), -5.0);
    }

    #[test]
    fn rank_one_determinant_is_a_distribution() {
        let p = EnsembleParams::new(3, 0, 0.3, 0.3, 0.5).unwrap();
        let vals: Vec<f64> = (1..=16)
            .map(|k| FiniteSize::new(&p, k as f64, &LaguerreConfig::default()).unwrap().rank_one_determinant().unwrap())
            .collect();
        assert!(vals.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn stationary_cdf_is_consistent() {
        let grid: Vec<f64> = (1..=10).map(|k| 2.0 * k as f64).collect();
        let t = stationary_cdf(0.5, 3, 0, &grid).unwrap();
        t.table.validate(false).unwrap();
        assert!(t.table.cdf[0] >= 0.0 && *t.table.cdf.last().unwrap() <= 1.0 + 1e-9);
        let (c1, c2) = (2.0, 6.0);
        let diff = t.product_at(c2).unwrap() - t.product_at(c1).unwrap();
        assert!((t.integrated(c1, c2).unwrap() - diff).abs() < 1e-6);
    }

    #[test]
    fn scaling_map_examples() {
        let t = scaling_map(0.5, 0.0, 0.0, ScaleParameter::Time(1000.0)).unwrap();
        assert_eq!((t.m, t.d, t.u), (250, 0, 1000.0));
        assert!((t.chi - 0.25).abs() < 1e-15);
        assert!((t.kappa - libm::pow(2.0, 4.0 / 3.0)).abs() < 1e-12);
        let n = scaling_map(0.5, 0.0, 0.0, ScaleParameter::Size(1000)).unwrap();
        assert_eq!((n.alpha, n.m), (0, 1000));
        assert!((n.u - 4000.0).abs() < 1e-9);
        assert_eq!(half_with_parity(7.3), 4);
        assert_eq!(half_with_parity(-3.5), -2);
        assert!(scaling_map(0.5, 0.0, 0.0, ScaleParameter::Time(0.5)).is_err());
    }

    #[test]
    fn h_n_routes() {
        let map = scaling_map(0.4, 0.3, -0.5, ScaleParameter::Size(60)).unwrap();
        for &y in &[-1.0, 0.0, 2.0] {
            let (c, p) = (h_n(&map, y, HnRoute::Contour).unwrap(), h_n(&map, y, HnRoute::Polynomial).unwrap());
            assert!((c - p).abs() < 1e-9 * (1.0 + p.abs()), "y={y}: {c} {p}");
            let (h1, h2) = (h_hat_n(&map, y, false).unwrap(), h_hat_n(&map, y, true).unwrap());
            assert!((h1 - h2).abs() < 1e-6 * (1.0 + h1.abs()));
        }
    }

    #[test]
    fn h_n_approaches_airy() {
        let grid = [0.0, 1.0, 5.0];
        let r1 = h_n_diagnostics(0.5, 0.0, 0.0, 250, &grid).unwrap();
        let r2 = h_n_diagnostics(0.5, 0.0, 0.0, 1000, &grid).unwrap();
        for i in 0..grid.len() {
            assert!(r2.error[i] < r1.error[i] && r2.error_hat[i] < r1.error_hat[i]);
        }
        assert!(r1.error[1] < 2e-3 && r2.symmetry_gap < 1e-12);
        assert!(r2.envelope < 1.0);
    }
}
