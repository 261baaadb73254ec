use alloc::format;
use core::f64::consts::PI;
use num_complex::Complex64;

use super::quadrature::gauss_legendre;
use crate::error::{Error, Result};

/// Integration paths in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContourPath {
    /// Circle `center + radius e^{iθ}`.
    Circle { center: Complex64, radius: f64, anticlockwise: bool },
    /// Line `re + i ℝ`, traversed upward; `scale` sets the node spread.
    VerticalLine { re: f64, scale: f64 },
    /// Two rays from `apex` to `∞ e^{±i half_angle}`, traversed from
    /// the lower ray to the upper one.
    Wedge { apex: f64, half_angle: f64, scale: f64 },
}

impl ContourPath {
    pub fn circle(center: Complex64, radius: f64) -> Self {
        ContourPath::Circle { center, radius, anticlockwise: true }
    }

    /// Airy-type wedge with opening π/3 on either side of the real axis.
    pub fn airy_wedge(apex: f64) -> Self {
        ContourPath::Wedge { apex, half_angle: PI / 3.0, scale: 2.0 }
    }
}

fn checked(v: Complex64, z: Complex64) -> Result<Complex64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation(format!("non-finite integrand at z = {} + {}i", z.re, z.im)))
    }
}

/// Quadrature value of `∮ f dz` along `path` with `order` nodes.
pub fn contour_integral(mut f: impl FnMut(Complex64) -> Complex64, path: ContourPath, order: usize) -> Result<Complex64> {
    if order < 16 {
        return Err(Error::Parameter("contour order must be at least 16".into()));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    match path {
        ContourPath::Circle { center, radius, anticlockwise } => {
            let h = 2.0 * PI / order as f64;
            for k in 0..order {
                let e = Complex64::from_polar(1.0, h * k as f64);
                let z = center + e * radius;
                let dz = Complex64::new(0.0, radius) * e * h;
                acc += checked(f(z), z)? * dz;
            }
            if !anticlockwise {
                acc = -acc;
            }
        }
        ContourPath::VerticalLine { re, scale } => {
            let rule = gauss_legendre(order.min(512))?.on_half_line(0.0, scale);
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                for sgn in [1.0, -1.0] {
                    let z = Complex64::new(re, sgn * t);
                    acc += checked(f(z), z)? * Complex64::new(0.0, w);
                }
            }
        }
        ContourPath::Wedge { apex, half_angle, scale } => {
            let rule = gauss_legendre(order.min(512))?.on_half_line(0.0, scale);
            let up = Complex64::from_polar(1.0, half_angle);
            let down = up.conj();
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                let zu = up * t + apex;
                let zd = down * t + apex;
                acc += checked(f(zu), zu)? * up * w;
                acc -= checked(f(zd), zd)? * down * w;
            }
        }
    }
    Ok(acc)
}

/// e^{±(ξ³/3 − w³/3 + (w − ξ)(w² + s))} / (2πi (ξ − w)²), whose integral on
/// a small anticlockwise circle around ξ = w is ∓s.
pub fn pole_integrand(w: f64, s: f64, sign: f64) -> impl Fn(Complex64) -> Complex64 {
    move |xi: Complex64| {
        let wc = Complex64::new(w, 0.0);
        let e = (xi * xi * xi / 3.0 - w * w * w / 3.0 + (wc - xi) * (w * w + s)) * sign;
        e.exp() / ((xi - wc) * (xi - wc) * Complex64::new(0.0, 2.0 * PI))
    }
}
