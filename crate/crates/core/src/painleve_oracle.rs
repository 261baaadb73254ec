//! Hastings–McLeod solution of q'' = 2q³ + sq (negative branch), the
//! Baik–Rains functions a(s,w), b(s,w), g_BR, and the Painlevé form of F_GUE.
//!
//! q is computed as a boundary-value problem with Numerov's scheme and Newton
//! iteration, at steps h and h/2, and Richardson-extrapolated.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{param, Error, Result};
use crate::numerics::{airy_laplace_tail, airy_pair};

const BASE_STEP: f64 = 1.0 / 128.0;

#[derive(Debug, Clone)]
pub struct PainleveSolution {
    pub s_min: f64,
    pub s_max: f64,
    pub h: f64,
    pub q: Vec<f64>,
    pub q_prime: Vec<f64>,
    /// ∫_s^∞ q, ∫_s^∞ q², ∫_s^∞ x q² on the grid.
    int_q: Vec<f64>,
    int_q2: Vec<f64>,
    int_xq2: Vec<f64>,
    /// max |q_h − q_{h/2}| / 15, the Richardson error estimate.
    pub refinement_error: f64,
}

/// Right-hand side of Painlevé II.
fn rhs(s: f64, q: f64) -> f64 {
    2.0 * q * q * q + s * q
}

/// Negative Hastings–McLeod asymptotics as s → −∞.
fn left_asymptotic(s: f64) -> f64 {
    let s3 = s * s * s;
    -libm::sqrt(-s / 2.0) * (1.0 + 1.0 / (8.0 * s3) - 73.0 / (128.0 * s3 * s3) + 10657.0 / (1024.0 * s3 * s3 * s3))
}

pub fn hastings_mcleod(s_min: f64, s_max: f64, tol: f64) -> Result<PainleveSolution> {
    if !(-12.0..=-6.0).contains(&s_min) || !(6.0..=10.0).contains(&s_max) {
        return param("hastings_mcleod needs s_min ∈ [-12, -6] and s_max ∈ [6, 10]");
    }
    if !(tol >= 1e-12) {
        return param("tolerance must be ≥ 1e-12");
    }
    let n = libm::round((s_max - s_min) / BASE_STEP) as usize;
    let coarse = numerov_bvp(s_min, s_max, n, tol)?;
    let fine = numerov_bvp(s_min, s_max, 2 * n, tol)?;
    let mut q = vec![0.0; n + 1];
    let mut err: f64 = 0.0;
    for k in 0..=n {
        let (c, f) = (coarse[k], fine[2 * k]);
        q[k] = f + (f - c) / 15.0;
        err = err.max((f - c).abs() / 15.0);
    }
    if err > 1e-8 {
        return Err(Error::Evaluation(alloc::format!("Painlevé refinement estimate {err:e} exceeds 1e-8")));
    }
    let h = (s_max - s_min) / n as f64;
    let q_prime = sixth_order_derivative(&q, h);
    let grid: Vec<f64> = (0..=n).map(|k| s_min + h * k as f64).collect();
    if q.iter().any(|&v| !(v < 0.0)) {
        return Err(Error::Evaluation("Hastings–McLeod sign condition q < 0 violated".into()));
    }

    // Tails beyond s_max use q = −Ai up to O(Ai³).
    let (ai, aip) = airy_pair(s_max);
    let tail_q = -airy_laplace_tail(0.0, s_max);
    let tail_q2 = aip * aip - s_max * ai * ai;
    let tail_xq2 = -(s_max * s_max * ai * ai - s_max * aip * aip + ai * aip) / 3.0;
    let f_q: Vec<f64> = q.clone();
    let d_q: Vec<f64> = q_prime.clone();
    let f2: Vec<f64> = q.iter().map(|v| v * v).collect();
    let d2: Vec<f64> = (0..=n).map(|k| 2.0 * q[k] * q_prime[k]).collect();
    let fx: Vec<f64> = (0..=n).map(|k| grid[k] * f2[k]).collect();
    let dx: Vec<f64> = (0..=n).map(|k| f2[k] + grid[k] * d2[k]).collect();
    let int_q = cumulative_from_right(&f_q, &d_q, h, tail_q);
    let int_q2 = cumulative_from_right(&f2, &d2, h, tail_q2);
    let int_xq2 = cumulative_from_right(&fx, &dx, h, tail_xq2);
    Ok(PainleveSolution { s_min, s_max, h, q, q_prime, int_q, int_q2, int_xq2, refinement_error: err })
}

/// Hermite-corrected trapezoid, accumulated from the right end with a given tail.
fn cumulative_from_right(f: &[f64], df: &[f64], h: f64, tail: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    out[n - 1] = tail;
    for k in (0..n - 1).rev() {
        out[k] = out[k + 1] + 0.5 * h * (f[k] + f[k + 1]) + h * h / 12.0 * (df[k] - df[k + 1]);
    }
    out
}

fn cumulative_from_left(f: &[f64], df: &[f64], h: f64, start: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    out[0] = start;
    for k in 1..n {
        out[k] = out[k - 1] + 0.5 * h * (f[k] + f[k - 1]) + h * h / 12.0 * (df[k - 1] - df[k]);
    }
    out
}

fn sixth_order_derivative(q: &[f64], h: f64) -> Vec<f64> {
    let n = q.len();
    let mut d = vec![0.0; n];
    const C: [f64; 3] = [45.0 / 60.0, -9.0 / 60.0, 1.0 / 60.0];
    // One-sided 7-point stencils at the ends.
    const F: [f64; 7] = [-147.0 / 60.0, 6.0, -15.0 / 2.0, 20.0 / 3.0, -15.0 / 4.0, 6.0 / 5.0, -1.0 / 6.0];
    const G: [f64; 7] = [-1.0 / 6.0, -77.0 / 60.0, 5.0 / 2.0, -5.0 / 3.0, 5.0 / 6.0, -1.0 / 4.0, 1.0 / 30.0];
    const H: [f64; 7] = [1.0 / 30.0, -2.0 / 5.0, -7.0 / 12.0, 4.0 / 3.0, -1.0 / 2.0, 2.0 / 15.0, -1.0 / 60.0];
    for k in 3..n - 3 {
        d[k] = (C[0] * (q[k + 1] - q[k - 1]) + C[1] * (q[k + 2] - q[k - 2]) + C[2] * (q[k + 3] - q[k - 3])) / h;
    }
    for (k, st) in [(0usize, &F), (1, &G), (2, &H)] {
        d[k] = (0..7).map(|i| st[i] * q[i]).sum::<f64>() / h;
        d[n - 1 - k] = -(0..7).map(|i| st[i] * q[n - 1 - i]).sum::<f64>() / h;
    }
    d
}

/// Backward RK4 from s_max with q = −Ai until the unstable direction takes over.
fn shooting_guess(s_min: f64, s_max: f64, n: usize) -> Vec<f64> {
    let h = (s_max - s_min) / n as f64;
    let mut guess: Vec<f64> = (0..=n).map(|k| left_asymptotic((s_min + h * k as f64).min(-1.0))).collect();
    let (ai, aip) = airy_pair(s_max);
    let (mut q, mut p) = (-ai, -aip);
    guess[n] = q;
    let f = |s: f64, q: f64, p: f64| (p, rhs(s, q));
    let mut k = n;
    let blend_lo = -6.0;
    let blend_hi = -3.0;
    while k > 0 {
        let s = s_min + h * k as f64;
        let dh = -h;
        let (k1q, k1p) = f(s, q, p);
        let (k2q, k2p) = f(s + 0.5 * dh, q + 0.5 * dh * k1q, p + 0.5 * dh * k1p);
        let (k3q, k3p) = f(s + 0.5 * dh, q + 0.5 * dh * k2q, p + 0.5 * dh * k2p);
        let (k4q, k4p) = f(s + dh, q + dh * k3q, p + dh * k3p);
        q += dh / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        p += dh / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        k -= 1;
        let s = s_min + h * k as f64;
        if !q.is_finite() || q > 0.0 || q < -10.0 || s < blend_lo {
            break;
        }
        guess[k] = if s < blend_hi {
            let t = (s - blend_lo) / (blend_hi - blend_lo);
            t * q + (1.0 - t) * left_asymptotic(s)
        } else {
            q
        };
    }
    guess
}

/// Numerov discretization with Dirichlet data from both asymptotic regimes,
/// solved by damped Newton with a tridiagonal Jacobian.
fn numerov_bvp(s_min: f64, s_max: f64, n: usize, tol: f64) -> Result<Vec<f64>> {
    let h = (s_max - s_min) / n as f64;
    let h2 = h * h / 12.0;
    let s: Vec<f64> = (0..=n).map(|k| s_min + h * k as f64).collect();
    let mut q = shooting_guess(s_min, s_max, n);
    q[0] = left_asymptotic(s_min);
    q[n] = -airy_pair(s_max).0;
    let m = n - 1;
    let (mut lower, mut diag, mut upper, mut r) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    for _iter in 0..60 {
        let f: Vec<f64> = (0..=n).map(|k| rhs(s[k], q[k])).collect();
        let fq: Vec<f64> = (0..=n).map(|k| 6.0 * q[k] * q[k] + s[k]).collect();
        let mut rmax: f64 = 0.0;
        for i in 0..m {
            let k = i + 1;
            r[i] = q[k + 1] - 2.0 * q[k] + q[k - 1] - h2 * (f[k + 1] + 10.0 * f[k] + f[k - 1]);
            rmax = rmax.max(r[i].abs());
            diag[i] = -2.0 - 10.0 * h2 * fq[k];
            lower[i] = 1.0 - h2 * fq[k - 1];
            upper[i] = 1.0 - h2 * fq[k + 1];
        }
        let delta = thomas(&lower, &diag, &upper, &r);
        let dmax = delta.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        let damp = if dmax > 0.5 { 0.5 / dmax } else { 1.0 };
        for i in 0..m {
            q[i + 1] -= damp * delta[i];
        }
        if dmax < tol && rmax < 1e-13 {
            return Ok(q);
        }
    }
    Err(Error::Evaluation("Newton iteration for Painlevé II did not converge".into()))
}

fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let den = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / den;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

impl PainleveSolution {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn s_at(&self, k: usize) -> f64 {
        self.s_min + self.h * k as f64
    }

    fn locate(&self, s: f64) -> Result<(usize, f64)> {
        if !(s >= self.s_min - 1e-12 && s <= self.s_max + 1e-12) {
            return param("s outside the Painlevé solution range");
        }
        let x = (s - self.s_min) / self.h;
        let k = (libm::floor(x) as usize).min(self.len() - 2);
        Ok((k, x - k as f64))
    }

    /// (q, q') at s by quintic Hermite interpolation using q'' = 2q³ + sq.
    pub fn eval(&self, s: f64) -> Result<(f64, f64)> {
        let (k, t) = self.locate(s)?;
        let h = self.h;
        let (s0, s1) = (self.s_at(k), self.s_at(k + 1));
        let (y0, y1) = (self.q[k], self.q[k + 1]);
        let (d0, d1) = (self.q_prime[k] * h, self.q_prime[k + 1] * h);
        let (c0, c1) = (rhs(s0, y0) * h * h, rhs(s1, y1) * h * h);
        // Quintic Hermite basis on [0, 1].
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let g0 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let g1 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let g2 = 0.5 * (t3 - 2.0 * t4 + t5);
        let dh0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
        let dh1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
        let dh2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
        let dg0 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
        let dg1 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
        let dg2 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
        let q = y0 * h0 + d0 * h1 + c0 * h2 + y1 * g0 + d1 * g1 + c1 * g2;
        let dq = (y0 * dh0 + d0 * dh1 + c0 * dh2 + y1 * dg0 + d1 * dg1 + c1 * dg2) / h;
        Ok((q, dq))
    }

    /// Max |q'' − 2q³ − sq| with q'' from fourth-order central differences.
    pub fn residual(&self) -> f64 {
        let h = self.h;
        let q = &self.q;
        (2..self.len() - 2)
            .map(|k| {
                let d2 = (-q[k + 2] + 16.0 * q[k + 1] - 30.0 * q[k] + 16.0 * q[k - 1] - q[k - 2]) / (12.0 * h * h);
                (d2 - rhs(self.s_at(k), q[k])).abs()
            })
            .fold(0.0, f64::max)
    }

    /// ∫_s^∞ q, ∫_s^∞ q², ∫_s^∞ x q² by Hermite interpolation of the cumulative tables.
    fn tail_integrals(&self, s: f64) -> Result<(f64, f64, f64)> {
        let (k, t) = self.locate(s)?;
        let (q, _) = self.eval(s)?;
        let x = self.s_at(k);
        let dx = s - x;
        let _ = t;
        // ∫_x^s f ≈ Hermite-corrected trapezoid between the grid point and s.
        let (q0, p0) = (self.q[k], self.q_prime[k]);
        let (_, p) = self.eval(s)?;
        let seg = |f0: f64, f1: f64, d0: f64, d1: f64| 0.5 * dx * (f0 + f1) + dx * dx / 12.0 * (d0 - d1);
        let i1 = seg(q0, q, p0, p);
        let i2 = seg(q0 * q0, q * q, 2.0 * q0 * p0, 2.0 * q * p);
        let i3 = seg(x * q0 * q0, s * q * q, q0 * q0 + 2.0 * x * q0 * p0, q * q + 2.0 * s * q * p);
        Ok((self.int_q[k] - i1, self.int_q2[k] - i2, self.int_xq2[k] - i3))
    }

    pub fn int_q_tail(&self, s: f64) -> Result<f64> {
        Ok(self.tail_integrals(s)?.0)
    }
}

/// Default solution on [-12, 10].
pub fn default_solution() -> Result<PainleveSolution> {
    hastings_mcleod(-12.0, 10.0, 1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrState {
    pub a: f64,
    pub b: f64,
}

/// Integrate the w-direction system at fixed s from (a, b)(s, 0).
fn propagate_w(q: f64, qp: f64, s: f64, w: f64, a0: f64) -> (f64, f64) {
    if w == 0.0 {
        return (a0, -a0);
    }
    let steps = (libm::ceil(w.abs() / 2e-3) as usize).max(4);
    let dw = w / steps as f64;
    let f = |w: f64, a: f64, b: f64| (q * q * a - (qp + w * q) * b, (qp - w * q) * a + (w * w - s - q * q) * b);
    let (mut a, mut b) = (a0, -a0);
    let mut x = 0.0;
    for _ in 0..steps {
        let (k1a, k1b) = f(x, a, b);
        let (k2a, k2b) = f(x + 0.5 * dw, a + 0.5 * dw * k1a, b + 0.5 * dw * k1b);
        let (k3a, k3b) = f(x + 0.5 * dw, a + 0.5 * dw * k2a, b + 0.5 * dw * k2b);
        let (k4a, k4b) = f(x + dw, a + dw * k3a, b + dw * k3b);
        a += dw / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        b += dw / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        x += dw;
    }
    (a, b)
}

pub fn br_functions(sol: &PainleveSolution, s: f64, w: f64) -> Result<BrState> {
    if !(w.abs() <= 2.0) {
        return param("br_functions needs |w| ≤ 2");
    }
    let (q, qp) = sol.eval(s)?;
    let a0 = libm::exp(sol.int_q_tail(s)?);
    let (a, b) = propagate_w(q, qp, s, w, a0);
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Evaluation("Baik–Rains ODE produced a non-finite value".into()));
    }
    Ok(BrState { a, b })
}

/// (a, b) at (s, w) reached along the other path: first in w at `s_anchor`,
/// then in s by the s-direction system at fixed w.
pub fn br_functions_via_s(sol: &PainleveSolution, s_anchor: f64, s: f64, w: f64) -> Result<BrState> {
    let BrState { a, b } = br_functions(sol, s_anchor, w)?;
    let steps = (libm::ceil((s - s_anchor).abs() / 2e-3) as usize).max(4);
    let ds = (s - s_anchor) / steps as f64;
    let f = |x: f64, a: f64, b: f64| -> Result<(f64, f64)> {
        let (q, _) = sol.eval(x)?;
        Ok((q * b, q * a - w * b))
    };
    let (mut a, mut b, mut x) = (a, b, s_anchor);
    for _ in 0..steps {
        let (k1a, k1b) = f(x, a, b)?;
        let (k2a, k2b) = f(x + 0.5 * ds, a + 0.5 * ds * k1a, b + 0.5 * ds * k1b)?;
        let (k3a, k3b) = f(x + 0.5 * ds, a + 0.5 * ds * k2a, b + 0.5 * ds * k2b)?;
        let (k4a, k4b) = f(x + ds, a + ds * k3a, b + ds * k3b)?;
        a += ds / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        b += ds / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        x += ds;
    }
    Ok(BrState { a, b })
}

/// g_BR(·, w) on the solution grid from s₀ = −10, with its derivative a(s,w)a(s,−w).
#[derive(Debug, Clone)]
pub struct BrCurve {
    pub w: f64,
    first: usize,
    h: f64,
    s0: f64,
    g: Vec<f64>,
    dg: Vec<f64>,
    pub tail_estimate: f64,
}

const BR_LOWER: f64 = -10.0;

pub fn br_curve(sol: &PainleveSolution, w: f64) -> Result<BrCurve> {
    br_curve_upto(sol, w, sol.s_max)
}

fn br_curve_upto(sol: &PainleveSolution, w: f64, s_top: f64) -> Result<BrCurve> {
    let w = w.abs();
    if w > 2.0 {
        return param("g_br needs |w| ≤ 2");
    }
    let first = libm::ceil((BR_LOWER - sol.s_min) / sol.h - 1e-9) as usize;
    let last = ((libm::ceil((s_top - sol.s_min) / sol.h - 1e-9) as usize) + 1).min(sol.len() - 1);
    let mut f = Vec::with_capacity(last - first + 1);
    let mut df = Vec::with_capacity(last - first + 1);
    for k in first..=last {
        let s = sol.s_at(k);
        let (q, qp) = (sol.q[k], sol.q_prime[k]);
        let a0 = libm::exp(sol.int_q[k]);
        let (ap, bp) = propagate_w(q, qp, s, w, a0);
        let (am, bm) = propagate_w(q, qp, s, -w, a0);
        f.push(ap * am);
        df.push(q * (bp * am + ap * bm));
    }
    // Below s₀ the integrand decays like exp(−c|s|^{3/2}); use its local log-slope.
    let slope = df[0] / f[0];
    let tail_estimate = if slope > 0.0 { f[0] / slope } else { f64::INFINITY };
    if !(tail_estimate < 1e-9) {
        return Err(Error::Evaluation(alloc::format!("g_BR lower tail estimate {tail_estimate:e} too large")));
    }
    let g = cumulative_from_left(&f, &df, sol.h, tail_estimate);
    Ok(BrCurve { w, first, h: sol.h, s0: sol.s_at(first), g, dg: f, tail_estimate })
}

impl BrCurve {
    /// g_BR(s, w) by cubic Hermite interpolation (g' = a(s,w)a(s,−w)).
    pub fn value(&self, s: f64) -> Result<f64> {
        let x = (s - self.s0) / self.h;
        if !(x >= -1e-9 && x <= (self.g.len() - 1) as f64 + 1e-9) {
            return param("s outside the g_BR curve");
        }
        let k = (libm::floor(x).max(0.0) as usize).min(self.g.len() - 2);
        let t = x - k as f64;
        let h = self.h;
        let (y0, y1, d0, d1) = (self.g[k], self.g[k + 1], self.dg[k] * h, self.dg[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        Ok(y0 * (2.0 * t3 - 3.0 * t2 + 1.0) + d0 * (t3 - 2.0 * t2 + t) + y1 * (-2.0 * t3 + 3.0 * t2) + d1 * (t3 - t2))
    }

    pub fn derivative_at_grid(&self, k: usize) -> f64 {
        self.dg[k]
    }

    pub fn grid_start(&self) -> usize {
        self.first
    }
}

pub fn g_br(sol: &PainleveSolution, s: f64, w: f64) -> Result<f64> {
    br_curve_upto(sol, w, s)?.value(s)
}

/// exp(−∫_s^∞ (x−s) q(x)² dx).
pub fn f_gue_painleve(sol: &PainleveSolution, s: f64) -> Result<f64> {
    let (_, i2, i3) = sol.tail_integrals(s)?;
    Ok(libm::exp(-(i3 - s * i2)))
}

/// (mean, variance) of ∂_s[F_GUE(s+w²)g_BR(s+w²,w)] by the by-parts moment
/// formulas on the solution grid.
pub fn f0_moments(sol: &PainleveSolution, w: f64) -> Result<(f64, f64)> {
    let w = w.abs();
    if w > 1.5 {
        return param("f0_moments needs |w| ≤ 1.5");
    }
    let curve = br_curve(sol, w)?;
    let ww = w * w;
    // H as a function of s on the shifted grid s_k = x_k − w².
    let n = curve.g.len();
    let mut hv = Vec::with_capacity(n);
    let mut dh = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n);
    for i in 0..n {
        let k = curve.first + i;
        let x = sol.s_at(k);
        let f = libm::exp(-(sol.int_xq2[k] - x * sol.int_q2[k]));
        hv.push(f * curve.g[i]);
        dh.push(f * (sol.int_q2[k] * curve.g[i] + curve.dg[i]));
        xs.push(x - ww);
    }
    let b = sol.s_max - ww - 0.25;
    let r: Vec<f64> = (0..n).map(|i| xs[i] - hv[i]).collect();
    let dr: Vec<f64> = (0..n).map(|i| 1.0 - dh[i]).collect();
    let int_h = cumulative_from_left(&hv, &dh, sol.h, 0.0);
    let int_r = cumulative_from_left(&r, &dr, sol.h, 0.0);
    let interp = |vals: &[f64], ders: &[f64], s: f64| -> f64 {
        let x = (s - xs[0]) / sol.h;
        let k = (libm::floor(x) as usize).min(n - 2);
        let t = x - k as f64;
        let (y0, y1, d0, d1) = (vals[k], vals[k + 1], ders[k] * sol.h, ders[k + 1] * sol.h);
        let t2 = t * t;
        let t3 = t2 * t;
        y0 * (2.0 * t3 - 3.0 * t2 + 1.0) + d0 * (t3 - 2.0 * t2 + t) + y1 * (-2.0 * t3 + 3.0 * t2) + d1 * (t3 - t2)
    };
    // ∫_{xs0}^{s} H via the cumulative table plus the integral of the cubic piece.
    let cum = |vals: &[f64], ders: &[f64], table: &[f64], s: f64| -> f64 {
        let x = (s - xs[0]) / sol.h;
        let k = (libm::floor(x) as usize).min(n - 2);
        let dx = s - xs[k];
        let v = interp(vals, ders, s);
        // derivative at s approximated by differentiating the cubic
        let eps = 1e-6;
        let dv = (interp(vals, ders, s + eps) - interp(vals, ders, s - eps)) / (2.0 * eps);
        table[k] + 0.5 * dx * (vals[k] + v) + dx * dx / 12.0 * (ders[k] - dv)
    };
    let rb = interp(&r, &dr, b);
    let h_left = cum(&hv, &dh, &int_h, 0.0);
    let r_right = cum(&r, &dr, &int_r, b) - cum(&r, &dr, &int_r, 0.0);
    let second = 2.0 * (h_left + curve.tail_estimate + b * rb - r_right);
    Ok((rb, second - rb * rb))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sol() -> PainleveSolution {
        default_solution().unwrap()
    }

    #[test]
    fn asymptotic_regimes_and_sign() {
        let p = sol();
        assert!(p.q.iter().all(|&q| q < 0.0));
        let (q8, _) = p.eval(8.0).unwrap();
        assert!((q8 + airy_pair(8.0).0).abs() < 1e-8);
        for k in 0..p.len() {
            let s = p.s_at(k);
            if s >= 6.0 {
                assert!((p.q[k] + airy_pair(s).0).abs() <= 1e-6);
            }
            if s <= -8.0 {
                let r = libm::sqrt(-s / 2.0);
                assert!((p.q[k] + r).abs() / r <= 0.02);
            }
        }
        let (qm10, _) = p.eval(-10.0).unwrap();
        assert!((qm10 + libm::sqrt(5.0)).abs() / libm::sqrt(5.0) < 0.02);
        assert!(p.residual() < 1e-8, "{}", p.residual());
        assert!(p.refinement_error < 1e-9, "{}", p.refinement_error);
    }

    #[test]
    fn known_hastings_mcleod_values() {
        // q(0) and q'(0) of the Hastings–McLeod solution (negated standard branch).
        let (q0, p0) = sol().eval(0.0).unwrap();
        assert!((q0 + 0.367_061_551_548_078).abs() < 1e-9, "{q0}");
        assert!((p0 - 0.295_372_105_447_550).abs() < 1e-8, "{p0}");
    }

    #[test]
    fn step_halving_self_check() {
        let a = hastings_mcleod(-12.0, 10.0, 1e-12).unwrap();
        let b = hastings_mcleod(-11.0, 9.0, 1e-12).unwrap();
        assert!((a.eval(0.0).unwrap().0 - b.eval(0.0).unwrap().0).abs() < 1e-8);
    }

    #[test]
    fn br_initial_data() {
        let p = sol();
        let st = br_functions(&p, 4.0, 0.0).unwrap();
        assert_eq!(st.a, -st.b);
        assert!(st.a < 1.0 && st.a > 0.999);
        let far = br_functions(&p, 9.5, 0.0).unwrap();
        assert!((far.a - 1.0).abs() < 1e-9);
    }

    #[test]
    fn path_independence() {
        let p = sol();
        let direct = br_functions(&p, 0.0, 0.5).unwrap();
        let other = br_functions_via_s(&p, 2.0, 0.0, 0.5).unwrap();
        assert!((direct.a - other.a).abs() < 1e-7, "{direct:?} {other:?}");
        assert!((direct.b - other.b).abs() < 1e-7, "{direct:?} {other:?}");
    }

    #[test]
    fn g_br_derivative_and_symmetry() {
        let p = sol();
        let (s, w) = (0.3, 0.7);
        let h = 1e-3;
        let fd = (g_br(&p, s + h, w).unwrap() - g_br(&p, s - h, w).unwrap()) / (2.0 * h);
        let ap = br_functions(&p, s, w).unwrap().a;
        let am = br_functions(&p, s, -w).unwrap().a;
        assert!((fd - ap * am).abs() < 1e-7, "{fd} vs {}", ap * am);
        assert_eq!(g_br(&p, s, w).unwrap(), g_br(&p, s, -w).unwrap());
    }

    #[test]
    fn f_gue_tails_and_moments() {
        let p = sol();
        assert!(f_gue_painleve(&p, 6.0).unwrap() >= 1.0 - 1e-7);
        assert!(f_gue_painleve(&p, -8.0).unwrap() <= 1e-4);
        let (m0, v0) = f0_moments(&p, 0.0).unwrap();
        assert!(m0.abs() < 1e-3, "{m0}");
        let (m5, _) = f0_moments(&p, 0.5).unwrap();
        assert!(m5.abs() < 1e-3, "{m5}");
        assert!(v0 > 1.0 && v0 < 1.3, "{v0}");
    }
}
