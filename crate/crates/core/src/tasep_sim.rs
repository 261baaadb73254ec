//! Continuous-time TASEP started from Bernoulli product measure.
//!
//! The lattice is the window −M..=M with frozen ends: the particle on M
//! never leaves and nothing enters at −M. Events are drawn with total rate
//! equal to the number of mobile particles, and a uniformly chosen mobile
//! particle jumps. Sites are 0 (hole), 1 (particle) or 2 (second-class
//! particle).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::airy_edge::{DistributionTable, Provenance, TableMeta};
use crate::error::{param, Error, Result};
use crate::lpp_sim::{last_passage, sample_raw, sample_zeta, WeightModel};
use crate::rng::ReplicaRng;

#[derive(Debug, Clone, PartialEq)]
pub struct TasepConfig {
    pub rho: f64,
    pub t_max: f64,
    pub window_halfwidth: usize,
    pub replicas: u64,
    pub master_seed: u64,
    pub observation_sites: Vec<i64>,
}

/// Smallest admissible half-width: max|site| + ⌈3t⌉.
pub fn light_cone_margin(t_max: f64, sites: &[i64]) -> usize {
    sites.iter().map(|j| j.unsigned_abs() as usize).max().unwrap_or(0) + libm::ceil(3.0 * t_max) as usize
}

impl TasepConfig {
    /// A config whose window is the light-cone margin plus 16 sites, enough
    /// that the boundary check essentially never fires even at small t.
    pub fn with_margin(rho: f64, t_max: f64, observation_sites: Vec<i64>, replicas: u64, master_seed: u64) -> Self {
        let window_halfwidth = light_cone_margin(t_max, &observation_sites) + 16;
        Self { rho, t_max, window_halfwidth, replicas, master_seed, observation_sites }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return param(format!("density must lie in (0, 1), got {}", self.rho));
        }
        if !(self.t_max >= 0.0) || !self.t_max.is_finite() {
            return param(format!("t_max must be finite and ≥ 0, got {}", self.t_max));
        }
        let need = light_cone_margin(self.t_max, &self.observation_sites);
        if self.window_halfwidth < need {
            return param(format!("window half-width {} below the light-cone margin {need}", self.window_halfwidth));
        }
        Ok(())
    }
}

/// The set of sites k whose pair (k, k+1) can jump, with O(1) insert/remove.
#[derive(Debug, Clone)]
struct MobileSet {
    items: Vec<u32>,
    slot: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl MobileSet {
    fn new(len: usize) -> Self {
        Self { items: Vec::new(), slot: vec![ABSENT; len] }
    }

    #[inline]
    fn set(&mut self, k: usize, on: bool) {
        let present = self.slot[k] != ABSENT;
        if on && !present {
            self.slot[k] = self.items.len() as u32;
            self.items.push(k as u32);
        } else if !on && present {
            let s = self.slot[k] as usize;
            let last = self.items.pop().expect("nonempty");
            if last as usize != k {
                self.items[s] = last;
                self.slot[last as usize] = s as u32;
            }
            self.slot[k] = ABSENT;
        }
    }
}

#[inline]
fn can_jump(a: u8, b: u8) -> bool {
    // particle onto hole or second-class, second-class onto hole
    matches!((a, b), (1, 0) | (1, 2) | (2, 0))
}

#[derive(Debug, Clone)]
pub struct TasepState {
    pub halfwidth: usize,
    pub time: f64,
    pub replica: u64,
    occ: Vec<u8>,
    initial: Vec<u8>,
    crossings: Vec<u32>,
    mobile: MobileSet,
    rng: ReplicaRng,
    t_limit: f64,
}

fn build_state(occ: Vec<u8>, halfwidth: usize, replica: u64, rng: ReplicaRng, t_limit: f64) -> TasepState {
    let len = occ.len();
    let mut mobile = MobileSet::new(len);
    for k in 0..len - 1 {
        if can_jump(occ[k], occ[k + 1]) {
            mobile.set(k, true);
        }
    }
    TasepState { halfwidth, time: 0.0, replica, initial: occ.clone(), occ, crossings: vec![0; len], mobile, rng, t_limit }
}

/// i.i.d. Bernoulli(ρ) occupations over the window of `replica`.
pub fn init_bernoulli(config: &TasepConfig, replica: u64) -> Result<TasepState> {
    config.validate()?;
    let len = 2 * config.window_halfwidth + 1;
    let mut rng = ReplicaRng::new(config.master_seed, replica);
    let occ: Vec<u8> = (0..len).map(|_| rng.bernoulli(config.rho) as u8).collect();
    Ok(build_state(occ, config.window_halfwidth, replica, rng, config.t_max))
}

/// A state from explicit occupations over −M..=M (values 0, 1, 2).
pub fn init_from(occ: Vec<u8>, seed: u64, replica: u64, t_limit: f64) -> Result<TasepState> {
    if occ.len() % 2 == 0 || occ.iter().any(|&v| v > 2) {
        return param("occupations need odd length and values in {0, 1, 2}");
    }
    let m = occ.len() / 2;
    Ok(build_state(occ, m, replica, ReplicaRng::new(seed, replica), t_limit))
}

impl TasepState {
    #[inline]
    fn idx(&self, j: i64) -> usize {
        (j + self.halfwidth as i64) as usize
    }

    pub fn occupation(&self, j: i64) -> u8 {
        self.occ[self.idx(j)]
    }

    pub fn initial_occupation(&self, j: i64) -> u8 {
        self.initial[self.idx(j)]
    }

    /// Particles that crossed the bond (j, j+1).
    pub fn current(&self, j: i64) -> u32 {
        self.crossings[self.idx(j)]
    }

    /// Number of sites in the window.
    pub fn len(&self) -> usize {
        self.occ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occ.is_empty()
    }

    /// Advance to time `t`, or stop early at the first event after which
    /// `stop` holds and return its time.
    pub fn run_until(&mut self, t: f64, mut stop: impl FnMut(&Self, usize) -> bool) -> Option<f64> {
        while !self.mobile.items.is_empty() {
            let rate = self.mobile.items.len() as f64;
            let dt = self.rng.exp(rate);
            if self.time + dt > t {
                self.time = t;
                return None;
            }
            self.time += dt;
            let k = self.mobile.items[self.rng.below(self.mobile.items.len())] as usize;
            self.occ.swap(k, k + 1);
            self.crossings[k] += 1;
            for p in k.saturating_sub(1)..=k + 1 {
                if p + 1 < self.occ.len() {
                    self.mobile.set(p, can_jump(self.occ[p], self.occ[p + 1]));
                }
            }
            if stop(self, k) {
                return Some(self.time);
            }
        }
        self.time = t;
        None
    }

    /// Checks that the boundary discrepancy fronts stay clear of `sites`.
    ///
    /// A frozen end differs from the infinite system only through a
    /// discrepancy that advances one site per ring of the bond it sits on,
    /// so each front is dominated by a rate-1 Poisson counter over the run.
    fn check_light_cone(&mut self, t: f64, sites: &[i64]) -> Result<()> {
        let reach = self.halfwidth - sites.iter().map(|j| j.unsigned_abs() as usize).max().unwrap_or(0);
        for side in ["left", "right"] {
            let (mut clock, mut steps) = (0.0, 0usize);
            loop {
                clock += self.rng.exp(1.0);
                if clock > t {
                    break;
                }
                steps += 1;
                if steps >= reach {
                    return Err(Error::LightCone(format!("{side} boundary front reached an observation site in replica {}", self.replica)));
                }
            }
        }
        Ok(())
    }
}

/// Occupations and bond currents at t_max for one replica.
#[derive(Debug, Clone)]
pub struct TasepTrajectory {
    pub halfwidth: usize,
    pub t_max: f64,
    pub replica: u64,
    pub occupations: Vec<u8>,
    pub initial: Vec<u8>,
    pub crossings: Vec<u32>,
}

impl TasepTrajectory {
    fn idx(&self, j: i64) -> usize {
        (j + self.halfwidth as i64) as usize
    }

    pub fn occupation(&self, j: i64) -> u8 {
        self.occupations[self.idx(j)]
    }

    pub fn current(&self, j: i64) -> u32 {
        self.crossings[self.idx(j)]
    }

    /// h_t(j) with the count through bond (0, 1) as origin.
    pub fn height(&self, j: i64) -> i64 {
        self.height_from(0, j)
    }

    /// h_0(j).
    pub fn initial_height(&self, j: i64) -> i64 {
        walk(&self.initial, self.halfwidth, 0, j)
    }

    /// Height at k + j seen from origin k: 2N_t(k) + Σ_{i=k+1}^{k+j}(1 − 2η_i(t)).
    pub fn height_from(&self, k: i64, j: i64) -> i64 {
        2 * self.current(k) as i64 + walk(&self.occupations, self.halfwidth, k, j)
    }
}

fn walk(occ: &[u8], m: usize, k: i64, j: i64) -> i64 {
    let at = |i: i64| 1 - 2 * occ[(i + m as i64) as usize] as i64;
    if j >= 0 {
        (k + 1..=k + j).map(at).sum()
    } else {
        -(k + j + 1..=k).map(at).sum::<i64>()
    }
}

pub fn evolve(mut state: TasepState, t_max: f64, observation_sites: &[i64]) -> Result<TasepTrajectory> {
    if t_max > state.t_limit + 1e-12 {
        return param(format!("t_max {t_max} beyond the {} the window was sized for", state.t_limit));
    }
    state.run_until(t_max, |_, _| false);
    state.check_light_cone(t_max, observation_sites)?;
    Ok(TasepTrajectory {
        halfwidth: state.halfwidth,
        t_max,
        replica: state.replica,
        occupations: state.occ,
        initial: state.initial,
        crossings: state.crossings,
    })
}

pub fn run_replica(config: &TasepConfig, replica: u64) -> Result<TasepTrajectory> {
    evolve(init_bernoulli(config, replica)?, config.t_max, &config.observation_sites)
}

/// First times at which h_t(j) ≥ level, +∞ if not reached by t_max.
pub fn height_hitting_times(rho: f64, j: i64, level: i64, t_max: f64, master_seed: u64, range: Range<u64>) -> Result<Vec<f64>> {
    let config = TasepConfig::with_margin(rho, t_max, vec![j], 1, master_seed);
    range
        .map(|r| {
            let mut state = init_bernoulli(&config, r)?;
            let h0 = walk(&state.initial, state.halfwidth, 0, j);
            // h_t(j) = h_0(j) + 2N_t(j)
            let need = level - h0;
            let hit = if need <= 0 {
                Some(0.0)
            } else {
                let bond = state.idx(j);
                let target = ((need + 1) / 2) as u32;
                state.run_until(t_max, |s, k| k == bond && s.crossings[bond] >= target)
            };
            state.check_light_cone(t_max, &[j])?;
            Ok(hit.unwrap_or(f64::INFINITY))
        })
        .collect()
}

/// Site and threshold of the event defining F_w(s, t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwEvent {
    pub site: i64,
    /// (1−2χ)t + 2w(1−2ρ)χ^{1/3}t^{2/3}
    pub center: f64,
    /// 2χ^{2/3}t^{1/3}: h_t = 2N_t, and it is N_t that fluctuates on χ^{2/3}t^{1/3}.
    pub scale: f64,
}

impl FwEvent {
    pub fn new(rho: f64, w: f64, t: f64) -> Self {
        let chi = rho * (1.0 - rho);
        let (c13, t13) = (libm::cbrt(chi), libm::cbrt(t));
        let site = libm::floor((1.0 - 2.0 * rho) * t + 2.0 * w * c13 * t13 * t13) as i64;
        let center = (1.0 - 2.0 * chi) * t + 2.0 * w * (1.0 - 2.0 * rho) * c13 * t13 * t13;
        Self { site, center, scale: 2.0 * c13 * c13 * t13 }
    }

    pub fn threshold(&self, s: f64) -> f64 {
        self.center - s * self.scale
    }

    /// The s at which the threshold equals height h.
    pub fn s_of(&self, h: f64) -> f64 {
        (self.center - h) / self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FwEngine {
    /// Simulate the exclusion process and read h_t(j).
    Direct,
    /// Read h_t(j) = max{m+n : m−n = j, G(m,n) ≤ t} off one stationary LPP grid,
    /// which has the law of h_t(j) by the LPP–TASEP coupling.
    LastPassage,
}

/// Height samples h_t(j) at the F_w site. Values below the LPP cone are
/// reported as `i64::MIN`; values above `cap` as `cap`.
pub fn height_samples(config: &TasepConfig, event: &FwEvent, engine: FwEngine, cap: i64, range: Range<u64>) -> Result<Vec<i64>> {
    let j = event.site;
    match engine {
        FwEngine::Direct => {
            let cfg = TasepConfig { observation_sites: vec![j], ..config.clone() };
            cfg.validate()?;
            range.map(|r| run_replica(&cfg, r).map(|tr| tr.height(j).min(cap))).collect()
        }
        FwEngine::LastPassage => {
            if cap < j.abs() {
                return param("height cap below the LPP cone");
            }
            let n_max = ((cap - j.abs()) / 2) as usize + 1;
            let (m_max, nn) = if j >= 0 { (n_max + j as usize, n_max) } else { (n_max, n_max + (-j) as usize) };
            let model = WeightModel::StationaryZeta { rho: config.rho };
            model.validate()?;
            Ok(range
                .map(|r| {
                    let mut rng = ReplicaRng::new(config.master_seed, r);
                    let zeta = sample_zeta(config.rho, &mut rng);
                    let g = last_passage(&sample_raw(m_max, nn, model, &mut rng).masked(zeta));
                    let mut h = i64::MIN;
                    for n in 0..=n_max {
                        let (a, b) = if j >= 0 { (n + j as usize, n) } else { (n, n + (-j) as usize) };
                        if a > m_max || b > nn || g.get(a, b) > config.t_max {
                            break;
                        }
                        h = (a + b) as i64;
                    }
                    h.min(cap)
                })
                .collect())
        }
    }
}

/// Empirical F_w(s, t) with binomial standard errors and the raw heights.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalFw {
    pub table: DistributionTable,
    pub se: Vec<f64>,
    pub event: FwEvent,
    pub heights: Vec<i64>,
}

pub fn empirical_fw(config: &TasepConfig, w: f64, s_grid: &[f64], engine: FwEngine) -> Result<EmpiricalFw> {
    let heights = fw_heights(config, w, s_grid, engine, 0..config.replicas)?;
    fw_from_heights(config, w, s_grid, heights)
}

/// The height cap and samples behind `empirical_fw`, for replicas in `range`.
pub fn fw_heights(config: &TasepConfig, w: f64, s_grid: &[f64], engine: FwEngine, range: Range<u64>) -> Result<Vec<i64>> {
    if config.replicas < 1000 {
        return param("empirical_fw needs at least 10³ replicas");
    }
    if s_grid.is_empty() {
        return param("empty s grid");
    }
    let event = FwEvent::new(config.rho, w, config.t_max);
    let lowest = s_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let highest = s_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if engine == FwEngine::LastPassage && event.threshold(highest) <= event.site.abs() as f64 {
        return param("F_w thresholds reach below the LPP cone; use the direct engine");
    }
    let cap = libm::ceil(event.threshold(lowest)) as i64 + 2;
    height_samples(config, &event, engine, cap, range)
}

pub fn fw_from_heights(config: &TasepConfig, w: f64, s_grid: &[f64], heights: Vec<i64>) -> Result<EmpiricalFw> {
    let event = FwEvent::new(config.rho, w, config.t_max);
    let total = heights.len() as f64;
    let mut cdf = Vec::with_capacity(s_grid.len());
    let mut se = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let thr = event.threshold(s);
        let p = heights.iter().filter(|&&h| h != i64::MIN && h as f64 >= thr).count() as f64 / total;
        cdf.push(p);
        se.push(libm::sqrt(p * (1.0 - p) / total));
    }
    let table = DistributionTable {
        grid: s_grid.to_vec(),
        cdf,
        density: None,
        meta: TableMeta {
            provenance: Provenance::Empirical,
            params: vec![("rho".into(), config.rho), ("w".into(), w), ("t".into(), config.t_max), ("replicas".into(), total)],
        },
    };
    Ok(EmpiricalFw { table, se, event, heights })
}

impl EmpiricalFw {
    /// Jump locations of the empirical F_w in s, restricted to [lo, hi].
    pub fn jump_points(&self, lo: f64, hi: f64) -> Vec<f64> {
        let parity = self.event.site.rem_euclid(2);
        let h_hi = libm::floor(self.event.threshold(lo)) as i64;
        let h_lo = libm::ceil(self.event.threshold(hi)) as i64;
        let mut out: Vec<f64> = (h_lo..=h_hi).filter(|h| h.rem_euclid(2) == parity).map(|h| self.event.s_of(h as f64)).collect();
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }

    /// ℙ̂(h ≥ threshold(s)) at arbitrary s.
    pub fn value(&self, s: f64) -> f64 {
        let thr = self.event.threshold(s);
        self.heights.iter().filter(|&&h| h != i64::MIN && h as f64 >= thr).count() as f64 / self.heights.len() as f64
    }

    /// sup_s |F̂(s) − F(s)| over [lo, hi]: at each jump both one-sided limits are compared.
    pub fn ks_distance(&self, lo: f64, hi: f64, limit: impl Fn(f64) -> Result<f64>) -> Result<KsReport> {
        let jumps = self.jump_points(lo, hi);
        if jumps.len() < 2 {
            return param("too few lattice points in the KS window");
        }
        let mut sup: f64 = 0.0;
        let mut at = jumps[0];
        let mut mid: f64 = 0.0;
        let eps = 1e-9;
        for (k, &s) in jumps.iter().enumerate() {
            let f = limit(s)?;
            let (left, right) = (self.value(s - eps), self.value(s + eps));
            let d = (left - f).abs().max((right - f).abs());
            if d > sup {
                sup = d;
                at = s;
            }
            if k + 1 < jumps.len() {
                let c = 0.5 * (s + jumps[k + 1]);
                mid = mid.max((self.value(c) - limit(c)?).abs());
            }
        }
        Ok(KsReport { sup, at, midpoint: mid, lattice_step: jumps[1] - jumps[0] })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsReport {
    /// sup over s of |F̂ − F|.
    pub sup: f64,
    pub at: f64,
    /// max of |F̂ − F| at midpoints between jumps.
    pub midpoint: f64,
    /// Spacing of the jumps of F̂ in s.
    pub lattice_step: f64,
}

/// Replica-level sums behind a two-point estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointSample {
    /// (1/K)Σ_k (η_k(0) − ρ)(η_{k+j}(t) − ρ) per offset.
    pub s: Vec<f64>,
    /// (1/K)Σ_k (h_t^{(k)}(j) − E h_t(j))² per offset.
    pub height_var: Vec<f64>,
    pub origins: usize,
}

/// Offsets j ∈ [j_lo, j_hi] and every origin whose offsets stay inside the light-cone margin.
pub fn two_point_sample(config: &TasepConfig, j_lo: i64, j_hi: i64, replica: u64) -> Result<TwoPointSample> {
    if j_lo > j_hi {
        return param("empty offset range");
    }
    let cfg = TasepConfig { observation_sites: vec![j_lo, j_hi], ..config.clone() };
    cfg.validate()?;
    let tr = run_replica(&TasepConfig { observation_sites: vec![], ..cfg.clone() }, replica)?;
    let (rho, t) = (config.rho, config.t_max);
    let chi = rho * (1.0 - rho);
    let safe = (config.window_halfwidth - libm::ceil(3.0 * t) as usize) as i64;
    let (k_lo, k_hi) = (-safe - j_lo.min(0), safe - j_hi.max(0));
    if k_lo > k_hi {
        return param("window too small for any origin");
    }
    let nj = (j_hi - j_lo + 1) as usize;
    let mut s = vec![0.0; nj];
    let mut hv = vec![0.0; nj];
    let m = tr.halfwidth as i64;
    // prefix sums of 1 − 2η(t)
    let mut prefix = vec![0i64; tr.occupations.len() + 1];
    for (i, &o) in tr.occupations.iter().enumerate() {
        prefix[i + 1] = prefix[i] + 1 - 2 * o as i64;
    }
    let p = |x: i64| prefix[(x + m + 1) as usize];
    for k in k_lo..=k_hi {
        let e0 = tr.initial[(k + m) as usize] as f64 - rho;
        let base = 2 * tr.current(k) as i64 - p(k);
        for (c, j) in (j_lo..=j_hi).enumerate() {
            s[c] += e0 * (tr.occupations[(k + j + m) as usize] as f64 - rho);
            let h = (base + p(k + j)) as f64;
            let mean = 2.0 * chi * t + (1.0 - 2.0 * rho) * j as f64;
            hv[c] += (h - mean) * (h - mean);
        }
    }
    let origins = (k_hi - k_lo + 1) as usize;
    s.iter_mut().chain(hv.iter_mut()).for_each(|v| *v /= origins as f64);
    Ok(TwoPointSample { s, height_var: hv, origins })
}

/// Mean and standard error over replicas of a scalar per-replica statistic.
fn mean_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, libm::sqrt(var / n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointEstimate {
    pub rho: f64,
    pub t: f64,
    pub offsets: Vec<i64>,
    pub s: Vec<f64>,
    pub se: Vec<f64>,
    /// Σ_j S(j,t); target χ.
    pub sum: (f64, f64),
    /// χ^{-1}Σ_j j S(j,t); target (1−2ρ)t.
    pub first_moment: (f64, f64),
    /// σ(t)² = χ^{-1}Σ j² S − ((1−2ρ)t)².
    pub sigma2: (f64, f64),
    /// S(j,t) from ΔVar h/8 at interior offsets (index c ↔ offsets[c+1]).
    pub s_from_heights: Vec<f64>,
    pub s_from_heights_se: Vec<f64>,
    pub replicas: u64,
    pub origins: usize,
}

impl TwoPointEstimate {
    pub fn from_samples(rho: f64, t: f64, j_lo: i64, samples: &[TwoPointSample]) -> Result<Self> {
        if samples.len() < 2 {
            return param("need at least two replicas for error bars");
        }
        let chi = rho * (1.0 - rho);
        let nj = samples[0].s.len();
        let offsets: Vec<i64> = (0..nj as i64).map(|c| j_lo + c).collect();
        let (mut s, mut se) = (vec![0.0; nj], vec![0.0; nj]);
        for c in 0..nj {
            (s[c], se[c]) = mean_se(samples.iter().map(|x| x.s[c]));
        }
        let offs = &offsets;
        let moment = |p: i32| mean_se(samples.iter().map(move |x| (0..nj).map(|c| libm::pow(offs[c] as f64, p as f64) * x.s[c]).sum::<f64>()));
        let sum = moment(0);
        let (m1, m1e) = moment(1);
        let (m2, m2e) = moment(2);
        let drift = (1.0 - 2.0 * rho) * t;
        let (mut sh, mut she) = (vec![], vec![]);
        for c in 1..nj.saturating_sub(1) {
            let (v, e) = mean_se(samples.iter().map(|x| (x.height_var[c + 1] + x.height_var[c - 1] - 2.0 * x.height_var[c]) / 8.0));
            sh.push(v);
            she.push(e);
        }
        Ok(Self {
            rho,
            t,
            offsets: offsets.clone(),
            s,
            se,
            sum,
            first_moment: (m1 / chi, m1e / chi),
            sigma2: (m2 / chi - drift * drift, m2e / chi),
            s_from_heights: sh,
            s_from_heights_se: she,
            replicas: samples.len() as u64,
            origins: samples[0].origins,
        })
    }

    /// Indices where S(j,t) < −3·stderr.
    pub fn positivity_violations(&self) -> Vec<i64> {
        (0..self.s.len()).filter(|&c| self.s[c] < -3.0 * self.se[c]).map(|c| self.offsets[c]).collect()
    }
}

/// Offsets centred on the drift (1−2ρ)t, covering `units` scaling widths 2χ^{1/3}t^{2/3}.
pub fn default_offsets(rho: f64, t: f64, units: f64) -> (i64, i64) {
    let chi = rho * (1.0 - rho);
    let c = (1.0 - 2.0 * rho) * t;
    let half = units * 2.0 * libm::cbrt(chi) * libm::pow(t, 2.0 / 3.0);
    (libm::floor(c - half) as i64, libm::ceil(c + half) as i64)
}

pub fn two_point(config: &TasepConfig, j_lo: i64, j_hi: i64) -> Result<TwoPointEstimate> {
    let samples: Vec<TwoPointSample> = (0..config.replicas).map(|r| two_point_sample(config, j_lo, j_hi, r)).collect::<Result<_>>()?;
    TwoPointEstimate::from_samples(config.rho, config.t_max, j_lo, &samples)
}

/// Displacements X_t of a second-class particle started at 0, for replicas in `range`.
pub fn second_class_displacements(rho: f64, t: f64, master_seed: u64, range: Range<u64>) -> Result<Vec<i64>> {
    if !(rho > 0.0 && rho < 1.0) {
        return param("density must lie in (0, 1)");
    }
    let m = light_cone_margin(t, &[0]) + libm::ceil(2.0 * t) as usize;
    range
        .map(|r| {
            let mut rng = ReplicaRng::new(master_seed, r);
            let mut occ: Vec<u8> = (0..2 * m + 1).map(|_| rng.bernoulli(rho) as u8).collect();
            occ[m] = 2;
            let mut state = build_state(occ, m, r, rng, t);
            let mut pos = m;
            state.run_until(t, |s, k| {
                if s.occ[k + 1] == 2 {
                    pos = k + 1;
                } else if s.occ[k] == 2 {
                    pos = k;
                }
                false
            });
            let x = pos as i64 - m as i64;
            state.check_light_cone(t, &[x.min(0) - 1, x.max(0) + 1])?;
            Ok(x)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaReport {
    pub t: Vec<f64>,
    pub sigma: Vec<f64>,
    pub se: Vec<f64>,
    /// Least-squares slope of log σ against log t with its standard error.
    pub slope: f64,
    pub slope_se: f64,
    /// σ(t)/(χ^{1/3}t^{2/3}) at the largest t.
    pub prefactor: f64,
    pub method: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaMethod {
    /// χ^{-1}Σ j²S(j,t) − ((1−2ρ)t)² from the multi-origin two-point estimator.
    TwoPoint,
    /// Var X_t of a second-class particle, whose law is χ^{-1}S(·,t).
    SecondClass,
}

/// σ(t) at each time, using `config.rho`, `config.replicas` and `config.master_seed`.
pub fn sigma_scaling(config: &TasepConfig, t_list: &[f64], method: SigmaMethod) -> Result<SigmaReport> {
    if t_list.len() < 2 {
        return param("a slope needs at least two times");
    }
    let rho = config.rho;
    let mut sigma = Vec::new();
    let mut se = Vec::new();
    for (i, &t) in t_list.iter().enumerate() {
        let seed = config.master_seed.wrapping_add(i as u64);
        let (v, ve) = match method {
            SigmaMethod::SecondClass => {
                let xs = second_class_displacements(rho, t, seed, 0..config.replicas)?;
                let drift = (1.0 - 2.0 * rho) * t;
                mean_se(xs.iter().map(|&x| (x as f64 - drift) * (x as f64 - drift)))
            }
            SigmaMethod::TwoPoint => {
                let (lo, hi) = default_offsets(rho, t, 4.0);
                let window_halfwidth = light_cone_margin(t, &[lo, hi]) + 8 * (hi - lo) as usize;
                let cfg = TasepConfig { t_max: t, window_halfwidth, master_seed: seed, observation_sites: vec![], ..config.clone() };
                two_point(&cfg, lo, hi)?.sigma2
            }
        };
        if !(v > 0.0) {
            return Err(Error::Diagnostic(format!("σ² estimate {v} at t = {t} not positive")));
        }
        sigma.push(libm::sqrt(v));
        se.push(ve / (2.0 * libm::sqrt(v)));
    }
    let name = match method {
        SigmaMethod::TwoPoint => "two-point",
        SigmaMethod::SecondClass => "second-class",
    };
    sigma_report(rho, t_list, sigma, se, name)
}

pub fn sigma_report(rho: f64, t_list: &[f64], sigma: Vec<f64>, se: Vec<f64>, method: &str) -> Result<SigmaReport> {
    if t_list.len() < 2 {
        return param("a slope needs at least two times");
    }
    let lt: Vec<f64> = t_list.iter().map(|t| libm::log(*t)).collect();
    let ls: Vec<f64> = sigma.iter().map(|s| libm::log(*s)).collect();
    let wts: Vec<f64> = sigma.iter().zip(&se).map(|(s, e)| if *e > 0.0 { (s / e) * (s / e) } else { 1.0 }).collect();
    let sw: f64 = wts.iter().sum();
    let mx = lt.iter().zip(&wts).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ls.iter().zip(&wts).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = lt.iter().zip(&wts).map(|(x, w)| w * (x - mx) * (x - mx)).sum();
    let sxy: f64 = lt.iter().zip(&ls).zip(&wts).map(|((x, y), w)| w * (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Diagnostic("times do not span a range; slope undefined".into()));
    }
    let slope = sxy / sxx;
    let slope_se = libm::sqrt(1.0 / sxx);
    let last = t_list.len() - 1;
    let chi = rho * (1.0 - rho);
    let prefactor = sigma[last] / (libm::cbrt(chi) * libm::pow(t_list[last], 2.0 / 3.0));
    if !slope_se.is_finite() || slope_se > 0.5 {
        return Err(Error::Diagnostic(format!("error bars too large for a slope fit (slope se {slope_se})")));
    }
    Ok(SigmaReport { t: t_list.to_vec(), sigma, se, slope, slope_se, prefactor, method: method.into() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_checks() {
        let mut c = TasepConfig::with_margin(0.5, 10.0, vec![0, 5], 10, 1);
        assert_eq!(c.window_halfwidth, 51);
        c.validate().unwrap();
        c.window_halfwidth = 34;
        assert!(c.validate().is_err());
        let c = TasepConfig::with_margin(1.0, 10.0, vec![0], 10, 1);
        assert!(init_bernoulli(&c, 0).is_err());
    }

    #[test]
    fn bernoulli_initial_data() {
        let c = TasepConfig { rho: 0.5, t_max: 0.0, window_halfwidth: 5000, replicas: 1, master_seed: 4, observation_sites: vec![] };
        let s = init_bernoulli(&c, 0).unwrap();
        let dens = (0..s.len()).filter(|&i| s.occ[i] == 1).count() as f64 / s.len() as f64;
        assert!((dens - 0.5).abs() < 3.0 * 0.005);
        let s2 = init_bernoulli(&c, 0).unwrap();
        assert_eq!(s.occ, s2.occ);
    }

    #[test]
    fn free_particle_moves_at_rate_one() {
        let t = 20.0;
        let reps = 2000;
        let mut total = 0.0;
        for r in 0..reps {
            let m = 100;
            let mut occ = vec![0u8; 2 * m + 1];
            occ[m] = 1;
            let tr = evolve(init_from(occ, 8, r, t).unwrap(), t, &[0]).unwrap();
            let pos = tr.occupations.iter().position(|&o| o == 1).unwrap() as f64 - m as f64;
            total += pos;
        }
        let mean = total / reps as f64;
        assert!((mean - t).abs() < 3.0 * libm::sqrt(t / reps as f64));
    }

    #[test]
    fn blocked_lattice_has_no_events() {
        let tr = evolve(init_from(vec![1u8; 41], 1, 0, 5.0).unwrap(), 5.0, &[0]).unwrap();
        assert!(tr.crossings.iter().all(|&c| c == 0));
    }

    #[test]
    fn height_identities_hold_exactly() {
        let c = TasepConfig::with_margin(0.4, 15.0, vec![-10, 10], 1, 3);
        for r in 0..10 {
            let tr = run_replica(&c, r).unwrap();
            for j in -10..10 {
                assert_eq!(tr.height(j + 1) - tr.height(j), 1 - 2 * tr.occupation(j + 1) as i64);
                assert_eq!(tr.height(j) - tr.initial_height(j), 2 * tr.current(j) as i64);
            }
        }
    }

    #[test]
    fn mean_height_growth() {
        let c = TasepConfig::with_margin(0.5, 100.0, vec![0], 400, 12);
        let h: Vec<f64> = (0..c.replicas).map(|r| run_replica(&c, r).unwrap().height(0) as f64).collect();
        let (m, se) = mean_se(h.iter().cloned());
        assert!((m - 50.0).abs() < 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn stationarity_of_occupations() {
        let c = TasepConfig::with_margin(0.3, 20.0, vec![-40, 40], 300, 5);
        let mut counts = [0u32; 20];
        for r in 0..c.replicas {
            let tr = run_replica(&c, r).unwrap();
            for (i, j) in (-40..40).step_by(4).enumerate() {
                counts[i] += tr.occupation(j) as u32;
            }
        }
        let se = libm::sqrt(0.21 / 300.0);
        for k in counts {
            assert!((k as f64 / 300.0 - 0.3).abs() < 3.5 * se);
        }
    }

    #[test]
    fn engines_agree_at_small_time() {
        let t = 12.0;
        let c = TasepConfig::with_margin(0.5, t, vec![0, 3], 4000, 21);
        let grid: Vec<f64> = (-8..=8).map(|k| k as f64 * 0.25).collect();
        let a = empirical_fw(&c, 0.0, &grid, FwEngine::Direct).unwrap();
        let b = empirical_fw(&TasepConfig { master_seed: 22, ..c.clone() }, 0.0, &grid, FwEngine::LastPassage).unwrap();
        for k in 0..grid.len() {
            let se = libm::sqrt(a.se[k] * a.se[k] + b.se[k] * b.se[k]);
            assert!((a.table.cdf[k] - b.table.cdf[k]).abs() <= 3.5 * se.max(1e-3), "s={}", grid[k]);
        }
    }

    #[test]
    fn fw_event_geometry() {
        let e = FwEvent::new(0.5, 0.0, 1000.0);
        assert_eq!(e.site, 0);
        assert!((e.center - 500.0).abs() < 1e-12);
        assert!((e.scale - 2.0 * libm::pow(0.25, 2.0 / 3.0) * 10.0).abs() < 1e-12);
        assert!((e.threshold(1.0) - (500.0 - e.scale)).abs() < 1e-12);
        assert!((e.s_of(e.threshold(0.7)) - 0.7).abs() < 1e-12);
        let e = FwEvent::new(0.5, 1.0, 1000.0);
        assert_eq!(e.site, 125);
        assert!(empirical_fw(&TasepConfig::with_margin(0.5, 10.0, vec![0], 10, 1), 0.0, &[0.0], FwEngine::LastPassage).is_err());
    }

    #[test]
    fn sum_rules_small() {
        let t = 20.0;
        let rho = 0.3;
        let (lo, hi) = default_offsets(rho, t, 3.0);
        let j_max = lo.abs().max(hi.abs());
        let c = TasepConfig { rho, t_max: t, window_halfwidth: 61 + j_max as usize + 200, replicas: 60, master_seed: 17, observation_sites: vec![] };
        let est = two_point(&c, lo, hi).unwrap();
        let chi = rho * (1.0 - rho);
        assert!((est.sum.0 - chi).abs() < 3.0 * est.sum.1 + 1e-3, "{:?}", est.sum);
        assert!((est.first_moment.0 - (1.0 - 2.0 * rho) * t).abs() < 3.0 * est.first_moment.1, "{:?}", est.first_moment);
        assert!(est.sigma2.0 > 0.0);
    }

    #[test]
    fn second_class_drift() {
        let (rho, t) = (0.3, 20.0);
        let xs = second_class_displacements(rho, t, 9, 0..2000).unwrap();
        let (m, se) = mean_se(xs.iter().map(|&x| x as f64));
        assert!((m - (1.0 - 2.0 * rho) * t).abs() < 3.0 * se);
    }

    #[test]
    fn sigma_needs_two_times() {
        let c = TasepConfig::with_margin(0.5, 10.0, vec![], 10, 1);
        assert!(sigma_scaling(&c, &[10.0], SigmaMethod::SecondClass).is_err());
        assert!(sigma_report(0.5, &[10.0, 10.0], vec![3.0, 3.0], vec![0.1, 0.1], "x").is_err());
    }

    #[test]
    fn sigma_methods_agree() {
        let (rho, t) = (0.5, 10.0);
        let xs = second_class_displacements(rho, t, 31, 0..4000).unwrap();
        let (v1, e1) = mean_se(xs.iter().map(|&x| (x * x) as f64));
        let (lo, hi) = default_offsets(rho, t, 3.0);
        let c = TasepConfig { rho, t_max: t, window_halfwidth: 30 + 400, replicas: 200, master_seed: 32, observation_sites: vec![] };
        let (v2, e2) = two_point(&c, lo, hi).unwrap().sigma2;
        assert!((v1 - v2).abs() < 3.5 * libm::sqrt(e1 * e1 + e2 * e2), "{v1}±{e1} vs {v2}±{e2}");
    }
}
