//! Edge objects built from the Airy kernel: F_GUE, the scaling function
//! g(s, w), the Baik–Rains family F_w, its second moment g_sc and a_0.
//!
//! All Laplace-type integrals of Ai are taken on whichever side of the
//! peak of e^{wv}Ai(v) avoids cancellation, so that Φ and Ψ stay accurate
//! where e^{w³/3} is large compared to the quantities of interest.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{param, Error, Result};
use crate::fredholm::{DiscretizedOperator, Kernel, Lu};
use crate::numerics::airy::laplace_cutoff;
use crate::numerics::quadrature::composite;
use crate::numerics::{airy_pair, gauss_legendre, QuadratureRule};

/// Below this |w| the left Laplace integrals are obtained by subtraction
/// from e^{w³/3}; the loss is at most a factor e^{w|X|} there.
const W_LEFT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeParams {
    pub w: f64,
    pub s: f64,
}

/// Airy kernel shifted by `shift`: K(x,y) = ∫_0^∞ Ai(λ+x+s)Ai(λ+y+s) dλ.
#[derive(Debug, Clone, Copy)]
pub struct AiryKernel {
    shift: f64,
}

pub fn airy_kernel(s: f64) -> AiryKernel {
    AiryKernel { shift: s }
}

impl AiryKernel {
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// The defining λ-integral by composite Gauss–Legendre, kept as an oracle.
    pub fn integral_form(&self, x: f64, y: f64) -> f64 {
        let rule = gauss_legendre(16).expect("order in range");
        let lo = x.min(y) + self.shift;
        let top = if lo >= 16.0 { 8.0 } else { 16.0 - lo };
        let panels = (libm::ceil(top / 0.5) as usize).max(1);
        composite(0.0, top, panels, &rule, |l| airy_pair(l + x + self.shift).0 * airy_pair(l + y + self.shift).0)
    }
}

impl Kernel for AiryKernel {
    fn eval(&self, x: f64, y: f64) -> f64 {
        let (a, b) = (x + self.shift, y + self.shift);
        kernel_closed_form(a, airy_pair(a), b, airy_pair(b))
    }
    fn symmetric(&self) -> bool {
        true
    }
    fn decay_scale(&self) -> f64 {
        2.0
    }
}

/// Unshifted K_Ai(X, Y) from precomputed (Ai, Ai') at both points.
fn kernel_closed_form(x: f64, px: (f64, f64), y: f64, py: (f64, f64)) -> f64 {
    if (x - y).abs() < 1e-4 {
        return kernel_near_diagonal(x, y);
    }
    (px.0 * py.1 - px.1 * py.0) / (x - y)
}

/// Expansion about the midpoint m = (x+y)/2 in h = (x−y)/2; the h⁴ term is
/// below 1e-17 when |x−y| < 1e-4.
fn kernel_near_diagonal(x: f64, y: f64) -> f64 {
    let h = 0.5 * (x - y);
    let m = 0.5 * (x + y);
    let (a, b) = airy_pair(m);
    let d = b * b - m * a * a;
    d + h * h * (a * b / 3.0 + 2.0 / 3.0 * m * d)
}

/// Discretization controls shared by the Fredholm evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeConfig {
    /// Minimum Gauss–Legendre order on the truncated half-line.
    pub min_order: usize,
    /// Nodes per unit length of the truncated interval.
    pub density: f64,
    /// The interval [0, T] satisfies q + T ≥ `edge`, where Ai is below 1e-20.
    pub edge: f64,
}

impl Default for EdgeConfig {
    fn default() -> Self {
        EdgeConfig { min_order: 40, density: 3.0, edge: 16.0 }
    }
}

impl EdgeConfig {
    /// Same geometry with twice the nodes, for order-doubling checks.
    pub fn doubled(&self) -> Self {
        EdgeConfig { min_order: 2 * self.min_order, density: 2.0 * self.density, ..*self }
    }

    fn rule(&self, q: f64) -> Result<QuadratureRule> {
        let t = (self.edge - q).max(4.0);
        let n = (libm::ceil(self.density * t) as usize).max(self.min_order).min(512);
        Ok(gauss_legendre(n)?.on_interval(0.0, t))
    }
}

/// (1 − P_0 K_{Ai,q} P_0) discretized once, reused for F_GUE and g.
pub struct EdgePoint {
    q: f64,
    rule: QuadratureRule,
    op: DiscretizedOperator,
    lu: Lu,
    kvals: Vec<f64>,
}

impl EdgePoint {
    pub fn new(q: f64, cfg: &EdgeConfig) -> Result<Self> {
        if !q.is_finite() || q < -20.0 {
            return param("edge shift must be finite and ≥ -20");
        }
        let rule = cfg.rule(q)?;
        let n = rule.order;
        let pairs: Vec<(f64, f64)> = rule.nodes.iter().map(|&x| airy_pair(q + x)).collect();
        let mut kvals = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = kernel_closed_form(q + rule.nodes[i], pairs[i], q + rule.nodes[j], pairs[j]);
                kvals[i * n + j] = k;
                kvals[j * n + i] = k;
            }
        }
        let op = DiscretizedOperator::from_kernel_values(rule.clone(), &kvals);
        let lu = op.factor();
        Ok(EdgePoint { q, rule, op, lu, kvals })
    }

    pub fn shift(&self) -> f64 {
        self.q
    }

    /// det(1 − P_0 K_{Ai,q} P_0).
    pub fn determinant(&self) -> f64 {
        self.lu.det().clamp(0.0, 1.0)
    }

    /// Node values of (1 − K)^{-1} f without the singularity guard; callers
    /// multiply by the determinant, which absorbs the ill-conditioning.
    fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        let b: Vec<f64> = f.iter().zip(&self.op.sqrt_w).map(|(f, s)| f * s).collect();
        let y = self.lu.solve(&b)?;
        Ok(y.iter().zip(&self.op.sqrt_w).map(|(y, s)| y / s).collect())
    }

    /// g(q, w) in the form S + ⟨Φ, (1−K)^{-1}Ψ⟩, with the split of the
    /// constant part of Ψ at w = 0.
    pub fn g(&self, w: f64) -> Result<f64> {
        let w = w.abs();
        let q = self.q;
        let n = self.rule.order;
        let xi = &self.rule.nodes;
        let wt = &self.rule.weights;
        let gl = gauss_legendre(12)?;
        let e3 = libm::exp(-w * w * w / 3.0);

        let mut pts: Vec<f64> = Vec::with_capacity(n + 1);
        pts.push(q);
        pts.extend(xi.iter().map(|x| q + x));
        let lap = laplace_at(w, &pts, &gl);
        let s_half = (q - w * w) + e3 * (lap.d[0] - q * lap.c[0]);

        let ell: Vec<f64> = (0..n).map(|j| libm::exp(-w * pts[j + 1]) * lap.l[j + 1]).collect();
        let phi = hankel_apply(q, xi, wt, &ell);
        let psi: Vec<f64> = (0..n).map(|i| libm::exp(-w * xi[i]) * e3 * lap.l[i + 1]).collect();

        let inner = if w > 0.0 {
            let r = self.solve(&phi)?;
            (0..n).map(|i| wt[i] * r[i] * psi[i]).sum::<f64>()
        } else {
            // ⟨Φ, A(Ψ−1)⟩ + ⟨Φ, 1⟩ + ⟨Φ, (1−K)^{-1} K 1⟩
            let k1: Vec<f64> = (0..n).map(|i| (0..n).map(|j| self.kvals[i * n + j] * wt[j]).sum()).collect();
            let r = self.solve(&phi)?;
            let a: f64 = (0..n).map(|i| wt[i] * r[i] * (psi[i] - 1.0)).sum();
            let b: f64 = (0..n).map(|i| wt[i] * phi[i]).sum();
            let c: f64 = (0..n).map(|i| wt[i] * r[i] * k1[i]).sum();
            a + b + c
        };
        let g = s_half + inner;
        if !g.is_finite() {
            return Err(Error::Evaluation(alloc::format!("g non-finite at q = {q}, w = {w}")));
        }
        Ok(g)
    }
}

/// (A ℓ)(ξ_i) = Σ_j w_j Ai(q + ξ_i + ξ_j) ℓ_j.
fn hankel_apply(q: f64, xi: &[f64], wt: &[f64], ell: &[f64]) -> Vec<f64> {
    let n = xi.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        for j in i..n {
            let a = airy_pair(q + xi[i] + xi[j]).0;
            out[i] += wt[j] * a * ell[j];
            if j != i {
                out[j] += wt[i] * a * ell[i];
            }
        }
    }
    out
}

/// Laplace integrals of Ai at ascending points X:
/// c = ∫_X^∞ e^{wv}Ai, d = ∫_X^∞ v e^{wv}Ai, l = ∫_{-∞}^X e^{wv}Ai, m = ∫_{-∞}^X v e^{wv}Ai.
struct LaplaceValues {
    c: Vec<f64>,
    d: Vec<f64>,
    l: Vec<f64>,
    m: Vec<f64>,
}

fn gap_integrals(w: f64, lo: f64, hi: f64, gl: &QuadratureRule) -> (f64, f64) {
    if hi <= lo {
        return (0.0, 0.0);
    }
    let panels = (libm::ceil((hi - lo) / 0.5) as usize).max(1);
    let h = (hi - lo) / panels as f64;
    let (mut s0, mut s1) = (0.0, 0.0);
    for p in 0..panels {
        let c = lo + h * (p as f64 + 0.5);
        for (&t, &wt) in gl.nodes.iter().zip(&gl.weights) {
            let v = c + 0.5 * h * t;
            let f = 0.5 * h * wt * libm::exp(w * v) * airy_pair(v).0;
            s0 += f;
            s1 += v * f;
        }
    }
    (s0, s1)
}

/// Points need not be sorted; values are returned in input order.
fn laplace_at(w: f64, pts: &[f64], gl: &QuadratureRule) -> LaplaceValues {
    let n = pts.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pts[a].total_cmp(&pts[b]));
    let (mut c, mut d) = (vec![0.0; n], vec![0.0; n]);
    // Beyond the cutoff the integrand is negligible (and e^{wv} may overflow).
    let top = laplace_cutoff(w);
    let (mut a0, mut a1, mut hi) = (0.0, 0.0, top);
    for &k in order.iter().rev() {
        let (g0, g1) = gap_integrals(w, pts[k].min(hi), hi, gl);
        a0 += g0;
        a1 += g1;
        c[k] = a0;
        d[k] = a1;
        hi = pts[k].min(hi);
    }
    let total = libm::exp(w * w * w / 3.0);
    let mut l: Vec<f64> = c.iter().map(|c| total - c).collect();
    let mut m: Vec<f64> = d.iter().map(|d| w * w * total - d).collect();
    if w >= W_LEFT {
        let peak = w * w;
        let mut lo = pts[order[0]] - 40.0 / w - 2.0;
        let (mut b0, mut b1) = (0.0, 0.0);
        for &k in order.iter() {
            if pts[k] >= peak {
                break;
            }
            let (g0, g1) = gap_integrals(w, lo, pts[k], gl);
            b0 += g0;
            b1 += g1;
            l[k] = b0;
            m[k] = b1;
            lo = pts[k].max(lo);
        }
    }
    LaplaceValues { c, d, l, m }
}

pub fn f_gue(s: f64) -> Result<f64> {
    f_gue_with(s, &EdgeConfig::default())
}

pub fn f_gue_with(s: f64, cfg: &EdgeConfig) -> Result<f64> {
    Ok(EdgePoint::new(s, cfg)?.determinant())
}

/// The scaling function g(s, w), evaluated at |w|.
pub fn g_scaling(s: f64, w: f64) -> Result<f64> {
    g_scaling_with(s, w, &EdgeConfig::default())
}

pub fn g_scaling_with(s: f64, w: f64, cfg: &EdgeConfig) -> Result<f64> {
    if !s.is_finite() || !w.is_finite() {
        return param("g_scaling needs finite s and w");
    }
    EdgePoint::new(s, cfg)?.g(w)
}

/// F_GUE(s + w²) g(s + w², w), whose s-derivative is F_w(s).
pub fn edge_product(s: f64, w: f64, cfg: &EdgeConfig) -> Result<f64> {
    let q = s + w * w;
    if q < -20.0 {
        return Ok(0.0);
    }
    let p = EdgePoint::new(q, cfg)?;
    let det = p.determinant();
    if det < 1e-40 {
        return Ok(0.0);
    }
    Ok(det * p.g(w)?)
}

/// The representation on [s, ∞) with Φ̃_s, Ψ̃_w and ρ̃_s, discretized on a
/// mapped half-line rule instead of a truncated interval.
pub fn g_alt_repr(s: f64, w: f64) -> Result<f64> {
    if !(w >= 0.0) || !s.is_finite() {
        return param("g_alt_repr needs w ≥ 0 and finite s");
    }
    let rule = gauss_legendre(112)?.on_half_line(0.0, 3.0);
    let n = rule.order;
    let xi = &rule.nodes;
    let wt = &rule.weights;
    let gl = gauss_legendre(12)?;
    let mut pts: Vec<f64> = Vec::with_capacity(n + 1);
    pts.push(s);
    pts.extend(xi.iter().map(|x| s + x));
    let lap = laplace_at(w, &pts, &gl);

    let pairs: Vec<(f64, f64)> = pts[1..].iter().map(|&x| airy_pair(x)).collect();
    let mut kvals = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let k = kernel_closed_form(pts[i + 1], pairs[i], pts[j + 1], pairs[j]);
            kvals[i * n + j] = k;
            kvals[j * n + i] = k;
        }
    }
    let op = DiscretizedOperator::from_kernel_values(rule.clone(), &kvals);
    let lu = op.factor();

    let damp: Vec<f64> = (0..n).map(|j| libm::exp(-w * xi[j]) * lap.l[j + 1]).collect();
    let phi = hankel_apply(s, xi, wt, &damp);
    let psi: Vec<f64> = (0..n).map(|i| libm::exp(-w * pts[i + 1]) * lap.l[i + 1]).collect();
    let b: Vec<f64> = phi.iter().zip(&op.sqrt_w).map(|(f, r)| f * r).collect();
    let y = lu.solve(&b)?;
    let inner: f64 = (0..n).map(|i| wt[i] * y[i] / op.sqrt_w[i] * psi[i]).sum();
    let first = s * lap.l[0] - lap.m[0];
    let g = libm::exp(-w * w * w / 3.0) * (first + inner);
    if !g.is_finite() {
        return Err(Error::Evaluation(alloc::format!("g_alt_repr non-finite at s = {s}, w = {w}")));
    }
    Ok(g)
}

/// Pointwise handles on the auxiliary functions φ, S, Φ, Ψ, Φ̂, Ψ̂ at (w, s),
/// with q = w² + s the shift of the Airy kernel they pair with.
#[derive(Debug, Clone, Copy)]
pub struct LimitFunctionSet {
    pub w: f64,
    pub s: f64,
}

pub fn limit_suite(params: EdgeParams) -> Result<LimitFunctionSet> {
    if !(params.w >= 0.0) || !params.s.is_finite() {
        return param("limit_suite needs w ≥ 0 and finite s");
    }
    Ok(LimitFunctionSet { w: params.w, s: params.s })
}

impl LimitFunctionSet {
    pub fn shift(&self) -> f64 {
        self.w * self.w + self.s
    }

    fn e3(&self) -> f64 {
        libm::exp(-self.w * self.w * self.w / 3.0)
    }

    pub fn phi(&self, z: f64) -> f64 {
        let v = self.shift() + z;
        airy_pair(v).0 * libm::exp(self.w * v) * self.e3()
    }

    /// s + ∫∫_{ℝ₊²} φ(x+y).
    pub fn s_half_line(&self) -> f64 {
        let gl = gauss_legendre(12).expect("order in range");
        let q = self.shift();
        let lap = laplace_at(self.w, &[q], &gl);
        self.s + self.e3() * (lap.d[0] - q * lap.c[0])
    }

    /// ∫∫_{ℝ₋²} φ(x+y) = ∫_{-∞}^0 |v| φ(v) dv, for w > 0.
    pub fn s_negative_quadrant(&self) -> Result<f64> {
        if !(self.w > 0.0) {
            return param("the negative-quadrant form needs w > 0");
        }
        let gl = gauss_legendre(12)?;
        let lo = -40.0 / self.w - 30.0;
        let panels = (libm::ceil(-lo / 0.25) as usize).max(1);
        Ok(composite(lo, 0.0, panels, &gl, |v| -v * self.phi(v)))
    }

    /// ∫_{ℝ₊} φ(x+y) dx.
    pub fn right_integral(&self, y: f64) -> f64 {
        let gl = gauss_legendre(12).expect("order in range");
        let lap = laplace_right_only(self.w, self.shift() + y, &gl);
        self.e3() * lap
    }

    /// ∫_{ℝ₋} φ(x+y) dx by direct quadrature, for w > 0.
    pub fn left_integral(&self, y: f64) -> Result<f64> {
        if !(self.w > 0.0) {
            return param("the left integral converges only for w > 0");
        }
        let gl = gauss_legendre(12)?;
        let lo = -40.0 / self.w - 30.0;
        let panels = (libm::ceil(-lo / 0.25) as usize).max(1);
        Ok(composite(lo, 0.0, panels, &gl, |x| self.phi(x + y)))
    }

    /// Ψ_{w,s}(ξ) = e^{-wξ}(1 − ∫_{ℝ₊} φ(x+ξ) dx).
    pub fn big_psi(&self, xi: f64) -> f64 {
        let gl = gauss_legendre(12).expect("order in range");
        let lap = laplace_at(self.w, &[self.shift() + xi], &gl);
        libm::exp(-self.w * xi) * self.e3() * lap.l[0]
    }

    /// Φ_{w,s}(ξ) by quadrature in y.
    pub fn big_phi(&self, xi: f64) -> f64 {
        let q = self.shift();
        let top = (16.0 - q - xi).max(4.0);
        let panels = (libm::ceil(top / 0.5) as usize).max(1);
        let gl = gauss_legendre(12).expect("order in range");
        let h = top / panels as f64;
        let mut ys = Vec::new();
        let mut ws = Vec::new();
        for p in 0..panels {
            let c = h * (p as f64 + 0.5);
            for (&t, &wt) in gl.nodes.iter().zip(&gl.weights) {
                ys.push(c + 0.5 * h * t);
                ws.push(0.5 * h * wt);
            }
        }
        let pts: Vec<f64> = ys.iter().map(|y| q + y).collect();
        let lap = laplace_at(self.w, &pts, &gl);
        (0..ys.len())
            .map(|k| ws[k] * airy_pair(q + xi + ys[k]).0 * libm::exp(-self.w * pts[k]) * lap.l[k])
            .sum()
    }

    /// Φ̂_{w,q}(x) = e^{wq} ∫_{ℝ₋} e^{wz} K_{Ai,q}(z, x) dz, for w > 0.
    pub fn phi_hat(&self, x: f64) -> Result<f64> {
        if !(self.w > 0.0) {
            return param("Φ̂ needs w > 0");
        }
        let q = self.shift();
        let k = airy_kernel(q);
        let gl = gauss_legendre(12)?;
        let lo = -40.0 / self.w - 10.0;
        let panels = (libm::ceil(-lo / 0.25) as usize).max(1);
        let v = composite(lo, 0.0, panels, &gl, |z| libm::exp(self.w * z) * k.eval(z, x));
        Ok(libm::exp(self.w * q) * v)
    }

    /// Ψ̂_{w,q}(y) = ∫_{ℝ₋} e^{wz} Ai(y + z + q) dz, for w > 0.
    pub fn psi_hat(&self, y: f64) -> Result<f64> {
        if !(self.w > 0.0) {
            return param("Ψ̂ needs w > 0");
        }
        let q = self.shift();
        let gl = gauss_legendre(12)?;
        let lo = -40.0 / self.w - 10.0;
        let panels = (libm::ceil(-lo / 0.25) as usize).max(1);
        Ok(composite(lo, 0.0, panels, &gl, |z| libm::exp(self.w * z) * airy_pair(y + z + q).0))
    }

    pub fn kernel(&self) -> AiryKernel {
        airy_kernel(self.shift())
    }
}

fn laplace_right_only(w: f64, x: f64, gl: &QuadratureRule) -> f64 {
    let top = laplace_cutoff(w).max(x + 1.0);
    gap_integrals(w, x, top, gl).0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Fredholm,
    Painleve,
    Empirical,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Fredholm => "fredholm",
            Provenance::Painleve => "painleve",
            Provenance::Empirical => "empirical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableMeta {
    pub provenance: Provenance,
    pub params: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTable {
    pub grid: Vec<f64>,
    pub cdf: Vec<f64>,
    pub density: Option<Vec<f64>>,
    pub meta: TableMeta,
}

impl DistributionTable {
    /// Checks the table invariants; `tails` also requires the first value
    /// ≤ 1e-4 and the last ≥ 1 − 1e-4.
    pub fn validate(&self, tails: bool) -> Result<()> {
        let n = self.grid.len();
        if n < 2 || self.cdf.len() != n {
            return param("table needs at least two points and matching lengths");
        }
        if self.grid.windows(2).any(|p| !(p[1] > p[0])) {
            return param("grid must be strictly increasing");
        }
        if self.cdf.iter().any(|c| !(-1e-6..=1.0 + 1e-6).contains(c)) {
            return Err(Error::Diagnostic("cdf outside [0, 1]".into()));
        }
        if self.cdf.windows(2).any(|p| p[1] < p[0] - 1e-6) {
            return Err(Error::Diagnostic("cdf decreases by more than 1e-6".into()));
        }
        if tails && (self.cdf[0] > 1e-4 || self.cdf[n - 1] < 1.0 - 1e-4) {
            return Err(Error::Diagnostic("cdf tails not resolved on the grid".into()));
        }
        if let Some(d) = &self.density {
            if d.len() != n || d.iter().any(|v| *v < -1e-6) {
                return Err(Error::Diagnostic("density negative or misaligned".into()));
            }
            for k in 1..n {
                let inc = 0.5 * (d[k] + d[k - 1]) * (self.grid[k] - self.grid[k - 1]);
                if (inc - (self.cdf[k] - self.cdf[k - 1])).abs() > 1e-4 {
                    return Err(Error::Diagnostic("density does not integrate to the cdf increments".into()));
                }
            }
        }
        Ok(())
    }

    /// (mass, mean, variance) of the tabulated density by Simpson or trapezoid.
    pub fn moments(&self) -> Result<(f64, f64, f64)> {
        let d = self.density.as_ref().ok_or_else(|| Error::Parameter("table has no density".into()))?;
        let integrate = |f: &dyn Fn(usize) -> f64| -> f64 {
            let n = self.grid.len();
            let h = self.grid[1] - self.grid[0];
            let uniform = self.grid.windows(2).all(|p| ((p[1] - p[0]) - h).abs() < 1e-9 * h.abs().max(1.0));
            if uniform && n % 2 == 1 {
                let mut acc = f(0) + f(n - 1);
                for k in 1..n - 1 {
                    acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k);
                }
                acc * h / 3.0
            } else {
                (1..n).map(|k| 0.5 * (f(k) + f(k - 1)) * (self.grid[k] - self.grid[k - 1])).sum()
            }
        };
        let mass = integrate(&|k| d[k]);
        let mean = integrate(&|k| self.grid[k] * d[k]);
        let second = integrate(&|k| self.grid[k] * self.grid[k] * d[k]);
        Ok((mass, mean, second - mean * mean))
    }
}

/// F_w on `grid` by 5-point differentiation of F_GUE(s+w²)g(s+w²,w), with step 1e-2.
pub fn f_w_table(w: f64, grid: &[f64]) -> Result<DistributionTable> {
    f_w_table_with(w, grid, &EdgeConfig::default())
}

pub fn f_w_table_with(w: f64, grid: &[f64], cfg: &EdgeConfig) -> Result<DistributionTable> {
    if grid.len() < 2 || grid.windows(2).any(|p| !(p[1] > p[0])) {
        return param("grid must be strictly increasing with at least two points");
    }
    let w = w.abs();
    let h = 1e-2;
    let mut cdf = Vec::with_capacity(grid.len());
    let mut density = Vec::with_capacity(grid.len());
    for &s in grid {
        let v: Vec<f64> = (-2..=2).map(|k| edge_product(s + h * k as f64, w, cfg)).collect::<Result<_>>()?;
        cdf.push((v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) / (12.0 * h));
        density.push((-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) / (12.0 * h * h));
    }
    if cdf.windows(2).any(|p| p[1] < p[0] - 1e-6) {
        return Err(Error::Diagnostic(alloc::format!("F_w for w = {w} not monotone; quadrature under-resolved")));
    }
    let table = DistributionTable {
        grid: grid.to_vec(),
        cdf,
        density: Some(density),
        meta: TableMeta { provenance: Provenance::Fredholm, params: vec![("w".into(), w)] },
    };
    Ok(table)
}

/// Mean and second moment of F_w from integrals of H(s) = F_GUE(s+w²)g(s+w²,w):
/// with R = s − H, mean = R(B) and ∫s²dF_w = 2[∫_A^0 H + B R(B) − ∫_0^B R].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeMoments {
    pub mean: f64,
    pub second: f64,
    /// |H(A)| + |1 − F_w(B)|-type remainder at the integration limits.
    pub truncation: f64,
}

pub fn edge_moments(w: f64, cfg: &EdgeConfig) -> Result<EdgeMoments> {
    let w = w.abs();
    let (a, b) = (-10.0 - 2.5 * w, 9.0 + 2.5 * w);
    let gl = gauss_legendre(10)?;
    let mut err = None;
    let mut h = |s: f64| match edge_product(s, w, cfg) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    };
    let panels_left = libm::ceil(-a) as usize;
    let left = composite(a, 0.0, panels_left, &gl, &mut h);
    let panels_right = libm::ceil(b) as usize;
    let right = composite(0.0, b, panels_right, &gl, |s| s - h(s));
    let rb = b - h(b);
    let ha = h(a);
    let rb_next = (b + 0.5) - h(b + 0.5);
    if let Some(e) = err {
        return Err(e);
    }
    Ok(EdgeMoments { mean: rb, second: 2.0 * (left + b * rb - right), truncation: ha.abs() + (rb_next - rb).abs() })
}

/// ∫ s² dF_w(s).
pub fn g_sc(w: f64) -> Result<f64> {
    Ok(edge_moments(w, &EdgeConfig::default())?.second)
}

#[derive(Debug, Clone, PartialEq)]
pub struct A0Report {
    pub a0: f64,
    /// ∫_{-3}^{3} w² g''_sc dw.
    pub integral: f64,
    /// Estimated contribution of |w| > 3.
    pub tail_estimate: f64,
    pub w_grid: Vec<f64>,
    pub g_sc: Vec<f64>,
}

/// a_0 = sqrt(2∫ w² g''_sc dw), with g''_sc by centered second differences
/// at spacing 0.1 on [0, 3] and evenness on the negative side.
pub fn a0_constant() -> Result<A0Report> {
    a0_constant_with(&EdgeConfig::default())
}

pub fn a0_constant_with(cfg: &EdgeConfig) -> Result<A0Report> {
    let h = 0.1;
    let steps = 30;
    let w_grid: Vec<f64> = (0..=steps + 1).map(|k| h * k as f64).collect();
    let g: Vec<f64> = w_grid.iter().map(|&w| edge_moments(w, cfg).map(|m| m.second)).collect::<Result<_>>()?;
    let second = |k: usize| -> f64 {
        let gm = if k == 0 { g[1] } else { g[k - 1] };
        (g[k + 1] - 2.0 * g[k] + gm) / (h * h)
    };
    // Simpson on [0, 3] for w² g''.
    let f = |k: usize| w_grid[k] * w_grid[k] * second(k);
    let mut half = f(0) + f(steps);
    for k in 1..steps {
        half += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k);
    }
    half *= h / 3.0;
    let integral = 2.0 * half;
    // Beyond |w| = 3 the second differences decay; model the remainder as
    // exponential with the rate seen over the last unit of w.
    let (g2, g3) = (second(steps - 10).abs(), second(steps).abs());
    let tail_estimate = if g3 > 0.0 && g2 > g3 {
        let rate = libm::log(g2 / g3);
        let w = 3.0;
        // 2∫_3^∞ w² c e^{-rate(w-3)} dw
        2.0 * g3 * (w * w / rate + 2.0 * w / (rate * rate) + 2.0 / (rate * rate * rate))
    } else {
        f64::INFINITY
    };
    if !(tail_estimate <= 0.01 * integral.abs()) {
        return Err(Error::Diagnostic(alloc::format!(
            "w-range [-3, 3] insufficient for a_0: tail estimate {tail_estimate:e} vs integral {integral:e}"
        )));
    }
    let a0 = libm::sqrt(2.0 * integral);
    Ok(A0Report { a0, integral, tail_estimate, w_grid: w_grid[..=steps].to_vec(), g_sc: g[..=steps].to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    extern crate std;
    use std::println;

    #[test]
    fn kernel_symmetric_and_matches_integral() {
        let k = airy_kernel(0.0);
        for &(x, y) in &[(0.0, 0.0), (0.3, 1.7), (-2.0, 0.5), (1.0, 1.00001), (-4.0, -3.5)] {
            assert_eq!(k.eval(x, y), k.eval(y, x));
            let a = k.eval(x, y);
            let b = k.integral_form(x, y);
            assert!((a - b).abs() < 1e-9, "({x},{y}): {a} vs {b}");
        }
        assert!(k.eval(15.0, 15.0) < 1e-12);
    }

    #[test]
    fn diagonal_series_continuous() {
        for &x in &[-5.0, -1.0, 0.0, 2.0, 6.0] {
            let y = x + 2e-3;
            let (px, py) = (airy_pair(x), airy_pair(y));
            let a = kernel_near_diagonal(x, y);
            let b = (px.0 * py.1 - px.1 * py.0) / (x - y);
            assert!((a - b).abs() < 1e-11, "{x}: {a} vs {b}");
        }
    }

    #[test]
    fn f_gue_values() {
        // Tracy–Widom GUE reference values (Painlevé II tables).
        let f0 = f_gue(0.0).unwrap();
        assert!((f0 - 0.969_372_828_355_3).abs() < 1e-9, "{f0}");
        assert!(f_gue(6.0).unwrap() >= 1.0 - 1e-6);
        assert!(f_gue(-8.0).unwrap() <= 1e-4);
        for &s in &[-8.0, -4.0, -2.0, 0.0, 3.0] {
            let a = f_gue(s).unwrap();
            let b = f_gue_with(s, &EdgeConfig::default().doubled()).unwrap();
            assert!((a - b).abs() <= 1e-9, "order doubling at {s}: {a} vs {b}");
        }
    }

    #[test]
    fn g_representations_agree() {
        for &s in &[-4.0, -2.0, 0.0, 2.0, 4.0] {
            for &w in &[0.0, 0.25, 0.5, 1.0] {
                let a = g_scaling(s, w).unwrap();
                let b = g_alt_repr(s, w).unwrap();
                println!("g({s},{w}) = {a} / {b}");
                assert!((a - b).abs() < 1e-7, "({s},{w}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn g_even_in_w() {
        assert_eq!(g_scaling(0.7, 0.6).unwrap(), g_scaling(0.7, -0.6).unwrap());
    }

    #[test]
    fn g_order_doubling() {
        for &(s, w) in &[(-4.0, 0.0), (0.0, 0.5), (-6.0, 2.0), (1.0, 3.0)] {
            let a = g_scaling(s, w).unwrap();
            let b = g_scaling_with(s, w, &EdgeConfig::default().doubled()).unwrap();
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "({s},{w}): {a} vs {b}");
        }
    }

    #[test]
    fn suite_identities() {
        for &w in &[0.25, 0.5, 1.0] {
            let suite = limit_suite(EdgeParams { w, s: 1.0 }).unwrap();
            let a = suite.s_half_line();
            let b = suite.s_negative_quadrant().unwrap();
            assert!((a - b).abs() < 1e-8, "S at w = {w}: {a} vs {b}");
        }
        let suite = limit_suite(EdgeParams { w: 0.5, s: -1.0 }).unwrap();
        for &y in &[0.0, 1.0, 3.0] {
            let a = 1.0 - suite.right_integral(y);
            let b = suite.left_integral(y).unwrap();
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        let z = limit_suite(EdgeParams { w: 0.0, s: 0.4 }).unwrap();
        assert!((z.phi(0.3) - airy_pair(0.7).0).abs() < 1e-15);
        // Φ̂ and Ψ̂ are rescalings of Φ and Ψ.
        let q = suite.shift();
        for &x in &[0.0, 0.8, 2.5] {
            let a = suite.phi_hat(x).unwrap();
            let b = libm::exp(0.5 * q) * suite.big_phi(x);
            assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "Φ̂({x}): {a} vs {b}");
            let c = suite.psi_hat(x).unwrap();
            let d = libm::exp(-0.5 * q + 0.125 / 3.0) * suite.big_psi(x);
            assert!((c - d).abs() < 1e-8 * c.abs().max(1.0), "Ψ̂({x}): {c} vs {d}");
        }
    }

    #[test]
    fn psi_zero_minus_one_square_integrable() {
        let suite = limit_suite(EdgeParams { w: 0.0, s: -1.0 }).unwrap();
        let tail: f64 = (0..40).map(|k| (suite.big_psi(14.0 + 0.5 * k as f64) - 1.0).powi(2) * 0.5).sum();
        assert!(tail < 1e-20, "{tail}");
    }
}
