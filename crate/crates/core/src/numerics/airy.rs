//! Airy function Ai and its derivative on the real line.
//!
//! Three regimes: the Maclaurin series near the origin, the Poincaré
//! expansions for |x| ≥ 12, and in between the defining contour integral
//! taken along straight rays through the saddle points, where the
//! integrand is non-oscillatory to leading order and Gauss–Legendre
//! converges geometrically. The contour values seed a table of (Ai, Ai')
//! at spacing 1/8, from which intermediate points are reached by the Taylor
//! series generated by Ai'' = x Ai.

use core::f64::consts::{FRAC_PI_4, PI};
use alloc::vec::Vec;
use num_complex::Complex64;
use once_cell::race::OnceBox;

use super::quadrature::{gauss_legendre, QuadratureRule};
use crate::error::{param, Result};

const AI0: f64 = 0.355_028_053_887_817_239_26;
const AIP0: f64 = -0.258_819_403_792_806_798_40;
const SERIES_MAX: f64 = 2.0;
const ASYMPTOTIC_MIN: f64 = 12.0;

/// Ai(x) for x in [-20, 200].
pub fn airy_ai(x: f64) -> Result<f64> {
    check_range(x)?;
    Ok(airy_pair(x).0)
}

/// Ai'(x) for x in [-20, 200].
pub fn airy_ai_prime(x: f64) -> Result<f64> {
    check_range(x)?;
    Ok(airy_pair(x).1)
}

fn check_range(x: f64) -> Result<()> {
    if !(-20.0..=200.0).contains(&x) {
        return param("airy argument outside [-20, 200]");
    }
    Ok(())
}

/// (Ai(x), Ai'(x)) without range checking; used internally on node sets.
/// Beyond x = 200 both underflow and zero is returned.
pub fn airy_pair(x: f64) -> (f64, f64) {
    if x.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    if x > 200.0 {
        return (0.0, 0.0);
    }
    if x.abs() <= SERIES_MAX {
        maclaurin(x)
    } else if x >= ASYMPTOTIC_MIN {
        asymptotic_pos(x)
    } else if x <= -ASYMPTOTIC_MIN {
        asymptotic_neg(x)
    } else {
        taylor_from_table(x)
    }
}

/// Contour-integral branch, bypassing the Taylor table.
pub(crate) fn airy_pair_contour(x: f64) -> (f64, f64) {
    if x > 0.0 {
        contour_pos(x)
    } else {
        contour_neg(x)
    }
}

const TABLE_STEP: f64 = 0.125;

struct Table {
    values: Vec<(f64, f64)>,
}

fn table() -> &'static Table {
    static TABLE: OnceBox<Table> = OnceBox::new();
    TABLE.get_or_init(|| {
        let count = (2.0 * ASYMPTOTIC_MIN / TABLE_STEP) as usize + 1;
        let values = (0..count)
            .map(|i| {
                let x = -ASYMPTOTIC_MIN + TABLE_STEP * i as f64;
                if x.abs() <= SERIES_MAX { maclaurin(x) } else { airy_pair_contour(x) }
            })
            .collect();
        alloc::boxed::Box::new(Table { values })
    })
}

fn taylor_from_table(x: f64) -> (f64, f64) {
    let t = table();
    let i = libm::round((x + ASYMPTOTIC_MIN) / TABLE_STEP) as usize;
    let x0 = -ASYMPTOTIC_MIN + TABLE_STEP * i as f64;
    let h = x - x0;
    let (y0, y1) = t.values[i];
    // c_{k+2} = (x0 c_k + c_{k-1}) / ((k+1)(k+2))
    let (mut cm1, mut c0, mut c1) = (0.0, y0, y1);
    let (mut val, mut der) = (y0 + y1 * h, y1);
    let mut hk = h;
    for k in 0..24 {
        let kf = k as f64;
        let c2 = (x0 * c0 + cm1) / ((kf + 1.0) * (kf + 2.0));
        der += (kf + 2.0) * c2 * hk;
        hk *= h;
        val += c2 * hk;
        cm1 = c0;
        c0 = c1;
        c1 = c2;
    }
    (val, der)
}

pub(crate) fn maclaurin(x: f64) -> (f64, f64) {
    let x3 = x * x * x;
    // f = Σ a_k x^{3k}, g = Σ b_k x^{3k+1}; Ai = Ai(0) f + Ai'(0) g.
    let (mut f, mut g) = (1.0, x);
    let (mut tf, mut tg) = (1.0, x);
    let (mut df, mut dg) = (0.0, 1.0);
    let (mut tdf, mut tdg) = (x * x / 2.0, 1.0);
    df += tdf;
    for k in 0..80 {
        let k3 = 3.0 * k as f64;
        tf *= x3 / ((k3 + 2.0) * (k3 + 3.0));
        tg *= x3 / ((k3 + 3.0) * (k3 + 4.0));
        tdg *= x3 / ((k3 + 1.0) * (k3 + 3.0));
        if k >= 1 {
            tdf *= x3 / (k3 * (k3 + 2.0));
            df += tdf;
        }
        f += tf;
        g += tg;
        dg += tdg;
        if tf.abs() < 1e-18 * f.abs() && tg.abs() <= 1e-18 * g.abs().max(1e-300) && k > 2 {
            break;
        }
    }
    (AI0 * f + AIP0 * g, AI0 * df + AIP0 * dg)
}

fn u_coeffs() -> [f64; 40] {
    let mut u = [0.0; 40];
    u[0] = 1.0;
    for k in 1..40 {
        let kf = k as f64;
        u[k] = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
    }
    u
}

fn v_from_u(u: &[f64; 40]) -> [f64; 40] {
    let mut v = [0.0; 40];
    v[0] = 1.0;
    for k in 1..40 {
        let kf = k as f64;
        v[k] = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u[k];
    }
    v
}

pub(crate) fn asymptotic_pos(x: f64) -> (f64, f64) {
    let u = u_coeffs();
    let v = v_from_u(&u);
    let zeta = 2.0 / 3.0 * x * libm::sqrt(x);
    let (mut su, mut sv) = (0.0, 0.0);
    let mut p = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..40 {
        let tu = u[k] * p;
        if tu.abs() > last {
            break;
        }
        last = tu.abs();
        su += tu;
        sv += v[k] * p;
        if tu.abs() < 1e-17 * su.abs() {
            break;
        }
        p *= -1.0 / zeta;
    }
    let e = libm::exp(-zeta);
    let q = libm::sqrt(libm::sqrt(x));
    let c = 0.5 / libm::sqrt(PI);
    (c * e * su / q, -c * e * q * sv)
}

pub(crate) fn asymptotic_neg(x: f64) -> (f64, f64) {
    let u = u_coeffs();
    let v = v_from_u(&u);
    let ax = -x;
    let zeta = 2.0 / 3.0 * ax * libm::sqrt(ax);
    // Even/odd partial sums with alternating signs.
    let (mut pe, mut po, mut qe, mut qo) = (0.0, 0.0, 0.0, 0.0);
    let mut zk = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..40 {
        let tu = u[k] * zk;
        if tu.abs() > last {
            break;
        }
        last = tu.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            pe += sign * tu;
            qe += sign * v[k] * zk;
        } else {
            po += sign * tu;
            qo += sign * v[k] * zk;
        }
        if tu.abs() < 1e-17 {
            break;
        }
        zk /= zeta;
    }
    let th = zeta - FRAC_PI_4;
    let (s, c) = (libm::sin(th), libm::cos(th));
    let q = libm::sqrt(libm::sqrt(ax));
    let rp = 1.0 / libm::sqrt(PI);
    let ai = rp / q * (c * pe + s * po);
    let aip = rp * q * (s * qe - c * qo);
    (ai, aip)
}

struct Rules {
    ray: QuadratureRule,
    seg: QuadratureRule,
}

fn rules() -> &'static Rules {
    static RULES: OnceBox<Rules> = OnceBox::new();
    RULES.get_or_init(|| {
        alloc::boxed::Box::new(Rules {
            ray: gauss_legendre(128).expect("order in range"),
            seg: gauss_legendre(96).expect("order in range"),
        })
    })
}

/// Largest r with decay exponent c2 r² + r³/3 ≤ 42.
fn ray_cutoff(c2: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..80 {
        let m = 0.5 * (lo + hi);
        if c2 * m * m + m * m * m / 3.0 > 42.0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    hi
}

fn contour_pos(x: f64) -> (f64, f64) {
    let r = rules();
    let sx = libm::sqrt(x);
    let zeta = 2.0 / 3.0 * x * sx;
    let dir = Complex64::from_polar(1.0, PI / 3.0);
    let d2 = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
    let big_r = ray_cutoff(0.5 * sx);
    let (mut i0, mut i1) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for (&t, &w) in r.ray.nodes.iter().zip(&r.ray.weights) {
        let rr = 0.5 * big_r * (t + 1.0);
        let wt = 0.5 * big_r * w;
        let e = (d2 * (sx * rr * rr) - rr * rr * rr / 3.0).exp() * wt;
        let z = dir * rr + sx;
        i0 += e;
        i1 -= z * e;
    }
    let scale = libm::exp(-zeta) / PI;
    ((dir * i0).im * scale, (dir * i1).im * scale)
}

fn contour_neg(x: f64) -> (f64, f64) {
    let r = rules();
    let a = libm::sqrt(-x);
    let (mut s0, mut s1) = (0.0, 0.0);
    for (&t, &w) in r.seg.nodes.iter().zip(&r.seg.weights) {
        let tt = 0.5 * a * (t + 1.0);
        let wt = 0.5 * a * w;
        let th = a * a * tt - tt * tt * tt / 3.0;
        s0 += wt * libm::cos(th);
        s1 += wt * tt * libm::sin(th);
    }
    let dir = Complex64::from_polar(1.0, FRAC_PI_4);
    let d3 = Complex64::from_polar(1.0, 3.0 * FRAC_PI_4);
    let big_r = ray_cutoff(a);
    let (mut i0, mut i1) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for (&t, &w) in r.ray.nodes.iter().zip(&r.ray.weights) {
        let rr = 0.5 * big_r * (t + 1.0);
        let wt = 0.5 * big_r * w;
        let e = (d3 * (rr * rr * rr / 3.0) - a * rr * rr).exp() * wt;
        let z = dir * rr + Complex64::new(0.0, a);
        i0 += e;
        i1 -= z * e;
    }
    let ph = Complex64::from_polar(1.0, 2.0 * a * a * a / 3.0) * dir;
    ((s0 + (ph * i0).im) / PI, (s1 + (ph * i1).im) / PI)
}

/// Point where log(e^{wv} Ai(v)) has dropped 42 below its maximum, w ≥ 0.
pub(crate) fn laplace_cutoff(w: f64) -> f64 {
    let peak = w * w * w / 3.0;
    let h = |v: f64| w * v - 2.0 / 3.0 * v * libm::sqrt(v) - 0.25 * libm::log(v) - peak + 42.0;
    let mut lo = (w * w).max(1.0);
    let mut hi = lo + 10.0;
    while h(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let m = 0.5 * (lo + hi);
        if h(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    hi
}

/// ∫_X^∞ e^{wv} Ai(v) dv for real w (w < 0 allowed when X is finite).
pub fn airy_laplace_tail(w: f64, x: f64) -> f64 {
    let top = laplace_cutoff(w.max(0.0)).max(x);
    let rule = gauss_legendre(12).expect("order in range");
    let panels = (libm::ceil((top - x) / 0.5) as usize).max(1);
    super::quadrature::composite(x, top, panels, &rule, |v| libm::exp(w * v) * airy_pair(v).0)
}

/// ∫_{-∞}^X Ai(v) dv via repeated integration by parts of Ai = Ai''/v, valid for X ≤ -10.
fn left_integral_w0(x: f64) -> f64 {
    let (ai, aip) = airy_pair(x);
    // ∫Ai/v^k = Ai'/v^{k+1} + (k+1) Ai/v^{k+2} + (k+1)(k+2) ∫Ai/v^{k+3}
    let mut total = 0.0;
    let mut coef = 1.0;
    let mut k = 0.0;
    for _ in 0..12 {
        let t = coef * (aip / libm::pow(x, k + 1.0) + (k + 1.0) * ai / libm::pow(x, k + 2.0));
        total += t;
        if t.abs() < 1e-18 {
            break;
        }
        coef *= (k + 1.0) * (k + 2.0);
        k += 3.0;
    }
    total
}

/// Numerical value of ∫_ℝ e^{wy} Ai(β+y) dy, which equals e^{w³/3 − βw}.
pub fn airy_identity_check(w: f64, beta: f64) -> Result<f64> {
    if w < 0.0 || !w.is_finite() || !beta.is_finite() {
        return param("airy_identity_check requires w ≥ 0");
    }
    let rule = gauss_legendre(12).expect("order in range");
    let split = -15.0;
    let right = airy_laplace_tail(w, split);
    let left = if w == 0.0 {
        left_integral_w0(split)
    } else {
        let lo = split - 40.0 / w;
        let panels = (libm::ceil((split - lo) / 0.25) as usize).max(1);
        super::quadrature::composite(lo, split, panels, &rule, |v| libm::exp(w * v) * airy_pair(v).0)
    };
    Ok(libm::exp(-w * beta) * (left + right))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn maclaurin_50(x: f64) -> f64 {
        // Plain 50-term Maclaurin oracle.
        let x3 = x * x * x;
        let (mut f, mut g, mut tf, mut tg) = (1.0, x, 1.0, x);
        for k in 0..50 {
            let k3 = 3.0 * k as f64;
            tf *= x3 / ((k3 + 2.0) * (k3 + 3.0));
            tg *= x3 / ((k3 + 3.0) * (k3 + 4.0));
            f += tf;
            g += tg;
        }
        AI0 * f + AIP0 * g
    }

    #[test]
    fn value_at_origin() {
        assert!((airy_ai(0.0).unwrap() - 0.355_028_053_887_817_2).abs() < 1e-15);
        assert!((airy_ai(0.0).unwrap() - maclaurin_50(0.0)).abs() < 1e-16);
        assert!((airy_ai_prime(0.0).unwrap() + 0.258_819_403_792_806_8).abs() < 1e-15);
    }

    #[test]
    fn known_values() {
        // Reference values (DLMF tables).
        let table = [
            (1.0, 0.135_292_416_312_881_4, -0.159_147_441_296_793_2),
            (-1.0, 0.535_560_883_292_352_1, -0.010_160_567_116_645_21),
            (5.0, 1.083_444_281_360_744_3e-4, -2.474_138_908_684_624e-4),
            (-5.0, 0.350_761_009_024_114_3, 0.327_192_818_554_443_4),
            (10.0, 1.104_753_255_289_868_6e-10, -3.520_633_676_738_924e-10),
            (-10.0, 0.040_241_238_486_443_19, 0.996_265_044_132_790_1),
        ];
        for &(x, ai, aip) in &table {
            let (a, d) = airy_pair(x);
            assert!((a - ai).abs() <= 1e-13 * ai.abs().max(1e-3), "Ai({x}) = {a:e} vs {ai:e}");
            assert!((d - aip).abs() <= 1e-12 * aip.abs().max(1e-3), "Ai'({x}) = {d:e} vs {aip:e}");
        }
    }

    #[test]
    fn branches_agree_at_seams() {
        for &x in &[-4.0, -3.0, -2.5, 2.5, 3.0] {
            let m = maclaurin(x);
            let c = if x > 0.0 { contour_pos(x) } else { contour_neg(x) };
            assert!((m.0 - c.0).abs() < 1e-13 && (m.1 - c.1).abs() < 1e-12, "x={x}");
        }
        for &x in &[7.0, 9.0, 12.0] {
            let a = asymptotic_pos(x);
            let c = contour_pos(x);
            assert!((a.0 - c.0).abs() <= 1e-12 * c.0.abs(), "x={x} {} {}", a.0, c.0);
            assert!((a.1 - c.1).abs() <= 1e-12 * c.1.abs(), "x={x}");
        }
        for &x in &[-7.0, -9.0, -12.0] {
            let a = asymptotic_neg(x);
            let c = contour_neg(x);
            assert!((a.0 - c.0).abs() < 1e-12 && (a.1 - c.1).abs() < 1e-11, "x={x} {:?} {:?}", a, c);
        }
    }

    #[test]
    fn taylor_table_matches_contour() {
        for i in 0..400 {
            let x = 2.0 + 10.0 * (i as f64 + 0.37) / 400.0;
            for x in [x, -x] {
                let (a, b) = airy_pair(x);
                let (c, d) = airy_pair_contour(x);
                let scale = c.abs().max(d.abs());
                assert!((a - c).abs() <= 2e-13 * scale, "Ai at {x}: {a} vs {c}");
                assert!((b - d).abs() <= 2e-13 * scale, "Ai' at {x}: {b} vs {d}");
            }
        }
    }

    #[test]
    fn superexponential_decay() {
        let v = airy_ai(30.0).unwrap();
        assert!(v > 0.0 && v < 1e-40);
        assert!(airy_ai(-20.5).is_err() && airy_ai(201.0).is_err());
    }

    #[test]
    fn ode_residual() {
        let h = 1e-3;
        let mut x = -10.0;
        while x <= 5.0 + 1e-9 {
            let f = |t: f64| airy_pair(t).0;
            let d2 = (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h * h);
            assert!((d2 - x * f(x)).abs() < 1e-6, "x={x}");
            x += 0.5;
        }
    }

    #[test]
    fn wronskian_derivative_consistency() {
        // Ai' matches a centred difference of Ai.
        for &x in &[-11.0, -6.3, -1.7, 0.4, 3.3, 8.8, 14.0] {
            let h = 1e-4;
            let fd = (airy_pair(x + h).0 - airy_pair(x - h).0) / (2.0 * h);
            assert!((fd - airy_pair(x).1).abs() < 1e-7 * (1.0 + airy_pair(x).1.abs()));
        }
    }

    #[test]
    fn identity_airy3() {
        for &w in &[0.0, 0.25, 0.5, 1.0, 2.0] {
            for &b in &[-1.0, 0.0, 1.0, 3.0] {
                let got = airy_identity_check(w, b).unwrap();
                let exact = libm::exp(w * w * w / 3.0 - b * w);
                assert!((got - exact).abs() < 1e-8 * exact.max(1.0), "w={w} b={b} got={got} exact={exact}");
            }
        }
        assert!((airy_identity_check(1.0, 0.0).unwrap() - 1.395_612_425_086_089_5).abs() < 1e-9);
    }
}
