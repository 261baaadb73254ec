//! Directed last-passage percolation with boundary sources.
//!
//! Weights live on {0..m}×{0..n}; G(i,j) is the maximal up/right passage
//! time from (0,0). The growth picture and its RSK line ensemble are
//! generated from the same weights, so every route can be cross-checked
//! on one sample.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{param, Error, Result};
use crate::rng::ReplicaRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightModel {
    /// ζ± geometric, w(i,0) ~ Exp(1−ρ), w(0,j) ~ Exp(ρ), w(0,0) = 0, and the
    /// first ζ₊ (resp. ζ₋) boundary weights set to zero.
    StationaryZeta { rho: f64 },
    /// w(i,0) ~ Exp(1/2+a), w(0,j) ~ Exp(1/2+b), w(0,0) ~ Exp(a+b), interior Exp(1).
    /// This is the assignment the kernel K^{a,b}_{m,d} at site 2d describes.
    AbExponential { a: f64, b: f64 },
    /// As `AbExponential` with w(0,0) = 0; admits a + b = 0.
    AbExponentialZeroCorner { a: f64, b: f64 },
    /// Interior Geom(q), w(i,0) ~ Geom(α√q), w(0,j) ~ Geom(β√q), corner Geom(αβ).
    Geometric { q: f64, alpha: f64, beta: f64 },
}

impl WeightModel {
    pub fn validate(&self) -> Result<()> {
        let open = |x: f64| x > 0.0 && x < 1.0;
        match *self {
            WeightModel::StationaryZeta { rho } if !open(rho) => param(format!("density must lie in (0, 1), got {rho}")),
            WeightModel::AbExponential { a, b } if !(a > -0.5 && b > -0.5 && a + b > 0.0) => {
                param(format!("need a, b > −1/2 and a + b > 0, got a = {a}, b = {b}"))
            }
            WeightModel::AbExponentialZeroCorner { a, b } if !(a > -0.5 && b > -0.5) => {
                param(format!("need a, b > −1/2, got a = {a}, b = {b}"))
            }
            WeightModel::Geometric { q, alpha, beta } => {
                let s = libm::sqrt(q);
                if open(q) && alpha > 0.0 && beta > 0.0 && alpha * beta < 1.0 && alpha * s < 1.0 && beta * s < 1.0 {
                    Ok(())
                } else {
                    param(format!("geometric model needs 0 < q, αβ, α√q, β√q < 1, got q = {q}, α = {alpha}, β = {beta}"))
                }
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LppConfig {
    pub m: usize,
    pub n: usize,
    pub model: WeightModel,
    pub master_seed: u64,
    pub replicas: u64,
}

/// Boundary offsets of the stationary model: ζ₊ + 1 is the first particle
/// right of 0, −ζ₋ the first hole left of 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Zeta {
    pub plus: usize,
    pub minus: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LppWeights {
    pub m: usize,
    pub n: usize,
    values: Vec<f64>,
    pub zeta: Option<Zeta>,
}

impl LppWeights {
    pub fn from_fn(m: usize, n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity((m + 1) * (n + 1));
        for i in 0..=m {
            for j in 0..=n {
                values.push(f(i, j));
            }
        }
        Self { m, n, values, zeta: None }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * (self.n + 1) + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * (self.n + 1) + j] = v;
    }

    /// The weights with the first ζ₊ row-boundary and ζ₋ column-boundary entries zeroed.
    pub fn masked(&self, zeta: Zeta) -> Self {
        let mut out = self.clone();
        for i in 1..=zeta.plus.min(self.m) {
            out.set(i, 0, 0.0);
        }
        for j in 1..=zeta.minus.min(self.n) {
            out.set(0, j, 0.0);
        }
        out.zeta = Some(zeta);
        out
    }
}

pub fn sample_zeta(rho: f64, rng: &mut ReplicaRng) -> Zeta {
    // ℚ(ζ₋ = k) = (1−ρ)ρ^k, ℚ(ζ₊ = k) = ρ(1−ρ)^k
    let minus = rng.geometric(rho) as usize;
    let plus = rng.geometric(1.0 - rho) as usize;
    Zeta { plus, minus }
}

/// Unmasked weights of `model` (ζ not applied).
pub fn sample_raw(m: usize, n: usize, model: WeightModel, rng: &mut ReplicaRng) -> LppWeights {
    let (row, col, corner): (f64, f64, Option<f64>) = match model {
        WeightModel::StationaryZeta { rho } => (1.0 - rho, rho, None),
        WeightModel::AbExponential { a, b } => (0.5 + a, 0.5 + b, Some(a + b)),
        WeightModel::AbExponentialZeroCorner { a, b } => (0.5 + a, 0.5 + b, None),
        WeightModel::Geometric { q, alpha, beta } => {
            let s = libm::sqrt(q);
            return LppWeights::from_fn(m, n, |i, j| {
                let p = match (i, j) {
                    (0, 0) => alpha * beta,
                    (_, 0) => alpha * s,
                    (0, _) => beta * s,
                    _ => q,
                };
                rng.geometric(p) as f64
            });
        }
    };
    LppWeights::from_fn(m, n, |i, j| match (i, j) {
        (0, 0) => corner.map_or(0.0, |r| rng.exp(r)),
        (_, 0) => rng.exp(row),
        (0, _) => rng.exp(col),
        _ => rng.exp(1.0),
    })
}

/// Weights of replica `replica`; the stationary model comes back masked by its ζ.
pub fn sample_weights(config: &LppConfig, replica: u64) -> Result<LppWeights> {
    config.model.validate()?;
    let mut rng = ReplicaRng::new(config.master_seed, replica);
    Ok(sample_with(config.m, config.n, config.model, &mut rng))
}

fn sample_with(m: usize, n: usize, model: WeightModel, rng: &mut ReplicaRng) -> LppWeights {
    match model {
        WeightModel::StationaryZeta { rho } => {
            let zeta = sample_zeta(rho, rng);
            sample_raw(m, n, model, rng).masked(zeta)
        }
        _ => sample_raw(m, n, model, rng),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LppGrid {
    pub m: usize,
    pub n: usize,
    g: Vec<f64>,
}

impl LppGrid {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.g[i * (self.n + 1) + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.g
    }
}

pub fn last_passage(w: &LppWeights) -> LppGrid {
    let (m, n) = (w.m, w.n);
    let stride = n + 1;
    let mut g = vec![0.0f64; (m + 1) * stride];
    for i in 0..=m {
        for j in 0..=n {
            let prev = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => g[j - 1],
                (_, 0) => g[(i - 1) * stride],
                _ => g[(i - 1) * stride + j].max(g[i * stride + j - 1]),
            };
            g[i * stride + j] = prev + w.get(i, j);
        }
    }
    LppGrid { m, n, g }
}

/// Grid point read by the height h̃(j, τ), or `None` outside |j| < τ.
fn height_index(j: i64, tau: usize) -> Option<(usize, usize)> {
    let t = tau as i64;
    if j.abs() >= t {
        return None;
    }
    let shift = if (t + j).rem_euclid(2) == 1 { 1 } else { 2 };
    Some((((t - shift + j) / 2) as usize, ((t - shift - j) / 2) as usize))
}

/// h̃(j, τ) for j = −τ..=τ (index j + τ).
pub fn height_from_g(grid: &LppGrid, tau: usize) -> Result<Vec<f64>> {
    if tau == 0 {
        return param("τ must be at least 1");
    }
    let t = tau as i64;
    (-t..=t)
        .map(|j| match height_index(j, tau) {
            None => Ok(0.0),
            Some((a, b)) if a <= grid.m && b <= grid.n => Ok(grid.get(a, b)),
            Some((a, b)) => Err(Error::Parameter(format!("h̃({j}, {tau}) needs G({a}, {b}) outside the {}×{} grid", grid.m, grid.n))),
        })
        .collect()
}

/// Lines h_ℓ(j, τ), ℓ = 0, −1, …; `lines[k][j + τ]` holds h_{−k}(j, τ).
#[derive(Debug, Clone, PartialEq)]
pub struct LineEnsemble {
    pub tau: usize,
    pub lines: Vec<Vec<f64>>,
}

impl LineEnsemble {
    pub fn at(&self, line: usize, j: i64) -> f64 {
        let t = self.tau as i64;
        if j.abs() > t || line >= self.lines.len() {
            return 0.0;
        }
        self.lines[line][(j + t) as usize]
    }

    /// Strictly positive heights at site j, top line first.
    pub fn points(&self, j: i64) -> Vec<f64> {
        self.lines.iter().map(|l| l[(j + self.tau as i64) as usize]).filter(|&h| h > 0.0).collect()
    }

    pub fn point_count(&self) -> usize {
        let t = self.tau as i64;
        (-t..=t).map(|j| self.points(j).len()).sum()
    }

    /// Pinning at ±τ and interlacing of neighbouring columns.
    pub fn is_admissible(&self) -> bool {
        let t = self.tau as i64;
        let col = |j: i64| -> Vec<f64> { self.lines.iter().map(|l| l[(j + t) as usize]).collect() };
        if self.lines.iter().any(|l| l[0] != 0.0 || l[2 * self.tau] != 0.0) {
            return false;
        }
        for j in -t..t {
            let (x, y) = (col(j), col(j + 1));
            // j + τ even: x ≺ y, else x ≻ y
            let (lo, hi) = if (j + t).rem_euclid(2) == 0 { (&x, &y) } else { (&y, &x) };
            if !precedes(lo, hi) {
                return false;
            }
        }
        true
    }
}

/// x ≺ y with index 0 the top line: x₀ ≤ y₀ and x_k ≤ y_k ≤ x_{k−1}.
fn precedes(x: &[f64], y: &[f64]) -> bool {
    (0..x.len()).all(|k| x[k] <= y[k] && (k == 0 || y[k] <= x[k - 1]))
}

/// Number of positive points at time τ under strictly positive weights.
pub fn point_count_formula(tau: usize) -> usize {
    let t = tau as i64;
    (0..=(2 * t - 1) / 4).map(|j| (2 * t - 4 * j - 1) as usize).sum()
}

/// Lines from the growth rule and its RSK extension; line 0 alone is the growth process.
pub fn rsk_lines(w: &LppWeights, tau: usize) -> Result<LineEnsemble> {
    if tau == 0 || tau > 25 {
        return param(format!("rsk_lines supports 1 ≤ τ ≤ 25, got {tau}"));
    }
    if w.m + 1 < tau || w.n + 1 < tau {
        return param(format!("τ = {tau} needs a {}×{} weight grid", tau - 1, tau - 1));
    }
    let width = 2 * tau + 1;
    let depth = (tau + 1) / 2 + 1;
    let mut cur = vec![vec![0.0; width]; depth];
    let off = tau as i64;
    let idx = |j: i64| (j + off) as usize;
    for t in 0..tau as i64 {
        let mut next = cur.clone();
        for j in -t..=t {
            if (j + t).rem_euclid(2) != 0 {
                continue;
            }
            let get = |line: &Vec<f64>, k: i64| if k.abs() > off { 0.0 } else { line[idx(k)] };
            let w_ij = w.get(((t + j) / 2) as usize, ((t - j) / 2) as usize);
            next[0][idx(j)] = get(&cur[0], j - 1).max(get(&cur[0], j + 1)) + w_ij;
            for l in 1..depth {
                let above = &cur[l - 1];
                let overlap = get(above, j - 1).min(get(above, j + 1)) - get(above, j);
                next[l][idx(j)] = get(&cur[l], j - 1).max(get(&cur[l], j + 1)) + overlap;
            }
        }
        cur = next;
    }
    if cur[depth - 1].iter().any(|&h| h != 0.0) {
        return Err(Error::Diagnostic("RSK overflowed the allotted number of lines".into()));
    }
    cur.truncate(depth - 1);
    Ok(LineEnsemble { tau, lines: cur })
}

/// Mean and standard error of an indicator estimate.
fn binomial(hits: u64, total: u64) -> (f64, f64) {
    let p = hits as f64 / total as f64;
    (p, libm::sqrt(p * (1.0 - p) / total as f64))
}

/// Samples of G(m,n) under the given model for replicas in `range`.
pub fn passage_samples(m: usize, n: usize, model: WeightModel, master_seed: u64, range: Range<u64>) -> Result<Vec<f64>> {
    model.validate()?;
    Ok(range
        .map(|r| {
            let mut rng = ReplicaRng::new(master_seed, r);
            last_passage(&sample_with(m, n, model, &mut rng)).get(m, n)
        })
        .collect())
}

/// Empirical CDF of `samples` on `grid` with binomial standard errors.
pub fn empirical_cdf(samples: &[f64], grid: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let total = sorted.len() as u64;
    grid.iter()
        .map(|&t| binomial(sorted.partition_point(|&x| x <= t) as u64, total))
        .unzip()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    pub t_grid: Vec<f64>,
    pub lpp_cdf: Vec<f64>,
    pub tasep_cdf: Vec<f64>,
    pub lpp_se: Vec<f64>,
    pub tasep_se: Vec<f64>,
    pub max_gap: f64,
    /// max over the grid of |gap| / combined standard error.
    pub max_z: f64,
}

impl CouplingReport {
    pub fn from_samples(lpp: &[f64], tasep_hitting: &[f64], t_grid: &[f64]) -> Self {
        let (lc, ls) = empirical_cdf(lpp, t_grid);
        let (tc, ts) = empirical_cdf(tasep_hitting, t_grid);
        let mut max_gap: f64 = 0.0;
        let mut max_z: f64 = 0.0;
        for k in 0..t_grid.len() {
            let gap = (lc[k] - tc[k]).abs();
            let se = libm::sqrt(ls[k] * ls[k] + ts[k] * ts[k]);
            max_gap = max_gap.max(gap);
            if se > 0.0 {
                max_z = max_z.max(gap / se);
            } else if gap > 0.0 {
                max_z = f64::INFINITY;
            }
        }
        Self { t_grid: t_grid.to_vec(), lpp_cdf: lc, tasep_cdf: tc, lpp_se: ls, tasep_se: ts, max_gap, max_z }
    }
}

/// ℚ(G(m,n) ≤ t) against ℙ(m+n ≤ h_t(m−n)) on a t-grid. The TASEP side
/// records, per replica, the first time h_t(m−n) reaches m+n.
pub fn coupling_check(rho: f64, m: usize, n: usize, replicas: u64, master_seed: u64, t_grid: &[f64]) -> Result<CouplingReport> {
    if m + n > 200 {
        return param("coupling_check needs m + n ≤ 200");
    }
    let lpp = passage_samples(m, n, WeightModel::StationaryZeta { rho }, master_seed, 0..replicas)?;
    let t_max = t_grid.iter().cloned().fold(0.0, f64::max);
    let tasep = crate::tasep_sim::height_hitting_times(rho, m as i64 - n as i64, (m + n) as i64, t_max, master_seed ^ 0x9e37_79b9_7f4a_7c15, 0..replicas)?;
    Ok(CouplingReport::from_samples(&lpp, &tasep, t_grid))
}

/// ℙ(X + Y ≥ u) for X ~ Gamma(k₁, λ₁), Y ~ Gamma(k₂, λ₂) independent.
pub fn gamma_sum_tail(k1: usize, l1: f64, k2: usize, l2: f64, u: f64) -> f64 {
    let tail = |k: usize, l: f64, x: f64| -> f64 {
        if k == 0 {
            return if x <= 0.0 { 1.0 } else { 0.0 };
        }
        if x <= 0.0 {
            return 1.0;
        }
        let mut term = 1.0;
        let mut acc = 1.0;
        for r in 1..k {
            term *= l * x / r as f64;
            acc += term;
        }
        libm::exp(-l * x) * acc
    };
    if k1 == 0 {
        return tail(k2, l2, u);
    }
    if k2 == 0 {
        return tail(k1, l1, u);
    }
    // ℙ(X ≥ u) + ∫_0^u f_X(x) ℙ(Y ≥ u − x) dx
    let ln_norm = k1 as f64 * libm::log(l1) - libm::lgamma(k1 as f64);
    let dens = |x: f64| if x <= 0.0 { 0.0 } else { libm::exp(ln_norm + (k1 as f64 - 1.0) * libm::log(x) - l1 * x) };
    let gl = crate::numerics::gauss_legendre(24).expect("order in range");
    let panels = (libm::ceil(u) as usize).max(1);
    let conv = crate::numerics::quadrature::composite(0.0, u, panels, &gl, |x| dens(x) * tail(k2, l2, u - x));
    tail(k1, l1, u) + conv
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZetaBoundRow {
    pub zeta: Zeta,
    pub u: f64,
    /// ℚ(|G^ζ − G⁰| ≥ u | ζ) with its standard error.
    pub empirical: f64,
    pub se: f64,
    /// ζ₊e^{−u/(1−ρ)} + ζ₋e^{−u/ρ}.
    pub bound: f64,
    /// ℚ(Σ_{i≤ζ₊} w(i,0) + Σ_{j≤ζ₋} w(0,j) ≥ u), the quantity the argument actually bounds.
    pub sum_tail: f64,
    /// Every sampled instance had G⁰ − G^ζ ≥ 0.
    pub ordered: bool,
}

impl ZetaBoundRow {
    pub fn within_bound(&self) -> bool {
        self.empirical <= self.bound + 3.0 * self.se
    }
    pub fn within_sum_tail(&self) -> bool {
        self.empirical <= self.sum_tail + 3.0 * self.se
    }
}

/// Conditional exceedances of |G^ζ − G⁰| at fixed ζ values, raw weights shared.
pub fn zeta_bound_check(rho: f64, m: usize, n: usize, zetas: &[Zeta], u_grid: &[f64], replicas: u64, master_seed: u64) -> Result<Vec<ZetaBoundRow>> {
    let model = WeightModel::StationaryZeta { rho };
    model.validate()?;
    let mut rows = Vec::new();
    for (zi, &zeta) in zetas.iter().enumerate() {
        let mut hits = vec![0u64; u_grid.len()];
        let mut ordered = true;
        for r in 0..replicas {
            let mut rng = ReplicaRng::new(master_seed.wrapping_add(zi as u64), r);
            let raw = sample_raw(m, n, model, &mut rng);
            let g0 = last_passage(&raw).get(m, n);
            let gz = last_passage(&raw.masked(zeta)).get(m, n);
            ordered &= g0 - gz >= 0.0;
            for (k, &u) in u_grid.iter().enumerate() {
                if (gz - g0).abs() >= u {
                    hits[k] += 1;
                }
            }
        }
        for (k, &u) in u_grid.iter().enumerate() {
            let (p, se) = binomial(hits[k], replicas);
            rows.push(ZetaBoundRow {
                zeta,
                u,
                empirical: p,
                se,
                bound: zeta.plus as f64 * libm::exp(-u / (1.0 - rho)) + zeta.minus as f64 * libm::exp(-u / rho),
                sum_tail: gamma_sum_tail(zeta.plus.min(m), 1.0 - rho, zeta.minus.min(n), rho, u),
                ordered,
            });
        }
    }
    Ok(rows)
}

/// Histogram of the positive points h_ℓ(j, τ) at one site, per unit length and replica.
#[derive(Debug, Clone, PartialEq)]
pub struct PointDensity {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub se: Vec<f64>,
    /// Mean number of positive points at the site (all heights, not only those in range).
    pub mean_count: f64,
    pub replicas: u64,
}

/// One-point density at site 2d, τ = 2m+1, for replicas in `range`.
pub fn point_density(m: usize, d: i64, model: WeightModel, bins: usize, top: f64, master_seed: u64, range: Range<u64>) -> Result<PointDensity> {
    model.validate()?;
    let tau = 2 * m + 1;
    if tau > 15 {
        return param("point_density needs τ = 2m+1 ≤ 15");
    }
    if d.unsigned_abs() as usize >= m + 1 {
        return param("site 2d outside the ensemble");
    }
    let width = top / bins as f64;
    let mut sum = vec![0.0; bins];
    let mut sq = vec![0.0; bins];
    let mut count = 0usize;
    let replicas = range.end - range.start;
    let mut per = vec![0u32; bins];
    for r in range {
        let mut rng = ReplicaRng::new(master_seed, r);
        let w = sample_with(tau - 1, tau - 1, model, &mut rng);
        let lines = rsk_lines(&w, tau)?;
        per.iter_mut().for_each(|c| *c = 0);
        let pts = lines.points(2 * d);
        count += pts.len();
        for y in pts {
            if y > 0.0 && y <= top {
                let b = (libm::ceil(y / width) as usize).clamp(1, bins) - 1;
                per[b] += 1;
            }
        }
        for b in 0..bins {
            let c = per[b] as f64;
            sum[b] += c;
            sq[b] += c * c;
        }
    }
    let nr = replicas as f64;
    let density = sum.iter().map(|s| s / nr / width).collect();
    let se = sum.iter().zip(&sq).map(|(s, q)| libm::sqrt((q / nr - (s / nr) * (s / nr)).max(0.0) / nr) / width).collect();
    Ok(PointDensity {
        edges: (0..=bins).map(|k| k as f64 * width).collect(),
        density,
        se,
        mean_count: count as f64 / nr,
        replicas,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityReport {
    pub empirical: PointDensity,
    /// Bin averages of K^{a,b}_{m,d}(y,y).
    pub kernel: Vec<f64>,
    /// |empirical − kernel| / se per bin.
    pub z: Vec<f64>,
    pub chi2_per_bin: f64,
}

impl DensityReport {
    pub fn max_z(&self) -> f64 {
        self.z.iter().cloned().fold(0.0, f64::max)
    }
}

/// Bin averages of the kernel diagonal by Gauss–Legendre on each bin.
pub fn kernel_bin_averages(params: &crate::laguerre_ensemble::EnsembleParams, edges: &[f64]) -> Result<Vec<f64>> {
    let k = crate::laguerre_ensemble::rank_one_kernel(params)?;
    let gl = crate::numerics::gauss_legendre(12)?;
    edges
        .windows(2)
        .map(|e| {
            let r = gl.on_interval(e[0], e[1]);
            let mut acc = 0.0;
            for (&y, &w) in r.nodes.iter().zip(&r.weights) {
                acc += w * k.diagonal(y)?;
            }
            Ok(acc / (e[1] - e[0]))
        })
        .collect()
}

pub fn compare_density(empirical: PointDensity, kernel: Vec<f64>) -> DensityReport {
    let z: Vec<f64> = empirical
        .density
        .iter()
        .zip(&empirical.se)
        .zip(&kernel)
        .map(|((e, s), k)| if *s > 0.0 { (e - k).abs() / s } else { f64::INFINITY })
        .collect();
    let chi2_per_bin = z.iter().map(|z| z * z).sum::<f64>() / z.len() as f64;
    DensityReport { empirical, kernel, z, chi2_per_bin }
}

/// MC histogram of the ab-exponential line ensemble against the kernel diagonal.
pub fn density_vs_kernel(params: &crate::laguerre_ensemble::EnsembleParams, replicas: u64, master_seed: u64, bins: usize, top: f64) -> Result<DensityReport> {
    if !(params.a > 0.0 && params.a < 0.5 && params.b > 0.0 && params.b < 0.5) {
        return param("density_vs_kernel needs a, b ∈ (0, 1/2)");
    }
    let model = WeightModel::AbExponential { a: params.a, b: params.b };
    let emp = point_density(params.m, params.d, model, bins, top, master_seed, 0..replicas)?;
    let kernel = kernel_bin_averages(params, &emp.edges)?;
    Ok(compare_density(emp, kernel))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_weights(m: usize, n: usize, seed: u64) -> LppWeights {
        let mut rng = ReplicaRng::new(seed, 0);
        LppWeights::from_fn(m, n, |_, _| rng.exp(1.0))
    }

    fn brute_force(w: &LppWeights, i: usize, j: usize) -> f64 {
        fn go(w: &LppWeights, a: usize, b: usize, i: usize, j: usize) -> f64 {
            let here = w.get(a, b);
            if a == i && b == j {
                return here;
            }
            let mut best = f64::NEG_INFINITY;
            if a < i {
                best = best.max(go(w, a + 1, b, i, j));
            }
            if b < j {
                best = best.max(go(w, a, b + 1, i, j));
            }
            here + best
        }
        go(w, 0, 0, i, j)
    }

    #[test]
    fn dp_equals_enumeration() {
        for seed in 0..100 {
            let (m, n) = (1 + seed as usize % 4, 1 + (seed as usize / 4) % 4);
            let w = random_weights(m, n, seed);
            let g = last_passage(&w);
            for i in 0..=m {
                for j in 0..=n {
                    assert!((g.get(i, j) - brute_force(&w, i, j)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn trivial_grids() {
        let w = LppWeights::from_fn(0, 0, |_, _| 0.0);
        assert_eq!(last_passage(&w).get(0, 0), 0.0);
        let w = random_weights(5, 2, 7);
        let row: f64 = (0..=5).map(|i| w.get(i, 0)).sum();
        assert!((last_passage(&w).get(5, 0) - row).abs() < 1e-12);
    }

    #[test]
    fn height_parity_cases() {
        let w = random_weights(4, 4, 3);
        let g = last_passage(&w);
        let h = height_from_g(&g, 3).unwrap();
        assert_eq!(h[3], g.get(1, 1));
        assert_eq!((h[0], h[6]), (0.0, 0.0));
        assert_eq!(h[2], g.get(0, 1));
        assert!(height_from_g(&g, 12).is_err());
    }

    #[test]
    fn growth_replay_matches_heights() {
        for seed in 0..20 {
            let w = random_weights(9, 9, 100 + seed);
            let g = last_passage(&w);
            for tau in 1..=10 {
                let lines = rsk_lines(&w, tau).unwrap();
                let h = height_from_g(&g, tau).unwrap();
                for (a, b) in lines.lines[0].iter().zip(&h) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
        let mut rng = ReplicaRng::new(5, 5);
        let w = LppWeights::from_fn(8, 8, |_, _| rng.geometric(0.6) as f64);
        let g = last_passage(&w);
        for tau in 1..=9 {
            assert_eq!(rsk_lines(&w, tau).unwrap().lines[0], height_from_g(&g, tau).unwrap());
        }
    }

    /// Greene: the sum of the top k lines is the largest weight of a union of k chains.
    fn k_chain_max(w: &LppWeights, rows: usize, cols: usize, k: usize) -> f64 {
        let cells: Vec<(usize, usize)> = (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).collect();
        let mut best: f64 = 0.0;
        for mask in 0u32..(1 << cells.len()) {
            let chosen: Vec<(usize, usize)> = (0..cells.len()).filter(|b| mask >> b & 1 == 1).map(|b| cells[b]).collect();
            // longest antichain: strictly increasing i with strictly decreasing j
            let mut longest = vec![1usize; chosen.len()];
            for x in 0..chosen.len() {
                for y in 0..x {
                    if chosen[y].0 < chosen[x].0 && chosen[y].1 > chosen[x].1 {
                        longest[x] = longest[x].max(longest[y] + 1);
                    }
                }
            }
            if longest.iter().all(|&l| l <= k) {
                best = best.max(chosen.iter().map(|&(i, j)| w.get(i, j)).sum());
            }
        }
        best
    }

    #[test]
    fn lower_lines_follow_greene() {
        for seed in 0..6 {
            let w = random_weights(4, 4, 900 + seed);
            for tau in [4usize, 5] {
                let lines = rsk_lines(&w, tau).unwrap();
                for j in -(tau as i64 - 1)..(tau as i64) {
                    if (j + tau as i64).rem_euclid(2) != 1 {
                        continue;
                    }
                    let (rows, cols) = (((tau as i64 + 1 + j) / 2) as usize, ((tau as i64 + 1 - j) / 2) as usize);
                    let mut acc = 0.0;
                    for k in 1..=rows.min(cols) {
                        acc += lines.at(k - 1, j);
                        assert!((acc - k_chain_max(&w, rows, cols, k)).abs() < 1e-10, "τ={tau} j={j} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn in_place_lower_line_rule_breaks_interlacing() {
        // h_{ℓ−1}(j,τ+1) = h_{ℓ−1}(j,τ) − h_ℓ(j,τ) + min(h_ℓ(j±1,τ)), without the max over neighbours
        let w = random_weights(6, 6, 42);
        let tau = 7;
        let off = tau as i64;
        let mut cur = vec![vec![0.0; 2 * tau + 1]; 5];
        for t in 0..tau as i64 {
            let mut next = cur.clone();
            for j in -t..=t {
                if (j + t).rem_euclid(2) != 0 {
                    continue;
                }
                let at = |l: &Vec<f64>, k: i64| if k.abs() > off { 0.0 } else { l[(k + off) as usize] };
                next[0][(j + off) as usize] = at(&cur[0], j - 1).max(at(&cur[0], j + 1)) + w.get(((t + j) / 2) as usize, ((t - j) / 2) as usize);
                for l in 1..5 {
                    next[l][(j + off) as usize] = at(&cur[l], j) - at(&cur[l - 1], j) + at(&cur[l - 1], j - 1).min(at(&cur[l - 1], j + 1));
                }
            }
            cur = next;
        }
        cur.truncate(4);
        let in_place = LineEnsemble { tau, lines: cur };
        assert!(!in_place.is_admissible());
        assert!(rsk_lines(&w, tau).unwrap().is_admissible());
    }

    #[test]
    fn ensembles_are_admissible_with_full_count() {
        for seed in 0..50 {
            let mut rng = ReplicaRng::new(77, seed);
            let w = sample_raw(8, 8, WeightModel::AbExponential { a: 0.3, b: 0.2 }, &mut rng);
            for tau in [1usize, 2, 5, 7, 9] {
                let e = rsk_lines(&w, tau).unwrap();
                assert!(e.is_admissible(), "seed {seed} τ {tau}");
                assert_eq!(e.point_count(), point_count_formula(tau));
            }
        }
        assert_eq!(point_count_formula(7), 28);
        let w = random_weights(0, 0, 1);
        let e = rsk_lines(&w, 1).unwrap();
        assert_eq!(e.lines.len(), 1);
        assert_eq!(e.at(0, 0), w.get(0, 0));
    }

    #[test]
    fn weight_models() {
        let cfg = LppConfig { m: 30, n: 30, model: WeightModel::StationaryZeta { rho: 0.4 }, master_seed: 1, replicas: 1 };
        for r in 0..20 {
            assert_eq!(sample_weights(&cfg, r).unwrap().get(0, 0), 0.0);
        }
        assert_eq!(sample_weights(&cfg, 3).unwrap(), sample_weights(&cfg, 3).unwrap());
        let mut rng = ReplicaRng::new(2, 0);
        let (mut row, mut col, mut inner) = (0.0, 0.0, 0.0);
        let reps = 4000;
        for _ in 0..reps {
            let w = sample_raw(1, 1, WeightModel::AbExponential { a: 0.0, b: 0.0 }, &mut rng);
            row += w.get(1, 0);
            col += w.get(0, 1);
            inner += w.get(1, 1);
        }
        let se = 2.0 / libm::sqrt(reps as f64);
        assert!((row / reps as f64 - 2.0).abs() < 3.0 * se);
        assert!((col / reps as f64 - 2.0).abs() < 3.0 * se);
        assert!((inner / reps as f64 - 1.0).abs() < 1.5 * se);
        let mut total = 0.0;
        for _ in 0..reps {
            total += sample_raw(1, 1, WeightModel::Geometric { q: 0.5, alpha: 0.5, beta: 0.5 }, &mut rng).get(1, 1);
        }
        // mean q/(1−q) = 1, variance q/(1−q)² = 2
        assert!((total / reps as f64 - 1.0).abs() < 3.0 * libm::sqrt(2.0 / reps as f64));
        assert!(WeightModel::Geometric { q: 0.9, alpha: 1.2, beta: 0.5 }.validate().is_err());
        assert!(WeightModel::StationaryZeta { rho: 1.0 }.validate().is_err());
    }

    #[test]
    fn zeta_is_geometric() {
        let mut rng = ReplicaRng::new(11, 0);
        let reps = 20000;
        let rho = 0.3;
        let mut c = [[0u32; 3]; 2];
        for _ in 0..reps {
            let z = sample_zeta(rho, &mut rng);
            if z.minus < 3 {
                c[0][z.minus] += 1;
            }
            if z.plus < 3 {
                c[1][z.plus] += 1;
            }
        }
        for k in 0..3 {
            let pm = (1.0 - rho) * libm::pow(rho, k as f64);
            let pp = rho * libm::pow(1.0 - rho, k as f64);
            for (p, obs) in [(pm, c[0][k]), (pp, c[1][k])] {
                let se = libm::sqrt(p * (1.0 - p) / reps as f64);
                assert!((obs as f64 / reps as f64 - p).abs() < 3.5 * se);
            }
        }
    }

    #[test]
    fn single_step_passage_time() {
        // G(1,0) = 0 when ζ₊ ≥ 1, else Exp(1−ρ)
        let rho = 0.5;
        let s = passage_samples(1, 0, WeightModel::StationaryZeta { rho }, 3, 0..20000).unwrap();
        let grid = [0.5, 1.0, 2.0, 4.0];
        let (cdf, se) = empirical_cdf(&s, &grid);
        for k in 0..grid.len() {
            let exact = (1.0 - rho) + rho * (1.0 - libm::exp(-(1.0 - rho) * grid[k]));
            assert!((cdf[k] - exact).abs() < 3.5 * se[k]);
        }
    }

    #[test]
    fn zeta_zero_changes_nothing() {
        let rows = zeta_bound_check(0.5, 3, 3, &[Zeta { plus: 0, minus: 0 }], &[1e-300], 200, 9).unwrap();
        assert_eq!(rows[0].empirical, 0.0);
        assert!(rows[0].ordered);
        let r = zeta_bound_check(0.5, 3, 3, &[Zeta { plus: 1, minus: 0 }], &[2.0], 2000, 9).unwrap();
        assert!((r[0].bound - libm::exp(-4.0)).abs() < 1e-15);
        assert!(r[0].ordered && r[0].within_sum_tail());
    }

    #[test]
    fn gamma_tail_closed_forms() {
        assert!((gamma_sum_tail(1, 0.5, 0, 0.5, 2.0) - libm::exp(-1.0)).abs() < 1e-14);
        // Gamma(2, 1/2) tail at u: e^{−u/2}(1 + u/2)
        let g = gamma_sum_tail(1, 0.5, 1, 0.5, 3.0);
        assert!((g - libm::exp(-1.5) * 2.5).abs() < 1e-12);
        // distinct rates: (λ₂e^{−λ₁u} − λ₁e^{−λ₂u})/(λ₂ − λ₁)
        let (l1, l2, u) = (0.7, 0.3, 2.5);
        let exact = (l2 * libm::exp(-l1 * u) - l1 * libm::exp(-l2 * u)) / (l2 - l1);
        assert!((gamma_sum_tail(1, l1, 1, l2, u) - exact).abs() < 1e-12);
    }

    #[test]
    fn dense_histogram_counts_points() {
        let model = WeightModel::AbExponential { a: 0.3, b: 0.3 };
        let d = point_density(3, 0, model, 40, 12.0, 5, 0..500).unwrap();
        assert_eq!(d.mean_count, 4.0);
        let inside: f64 = d.density.iter().map(|x| x * 0.3).sum();
        assert!(inside <= 4.0 + 1e-12);
    }
}
