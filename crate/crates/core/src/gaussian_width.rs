//! Gaussian width of the gradient set `{∇T_k(y)/N : y ∈ {0,1}^Ω}`.
//!
//! Lower estimates come from maximising `⟨∇T_k(y)/N, Z⟩` over binary `y` by
//! local search (so they are lower estimates only up to search quality). Upper
//! estimates are Monte Carlo averages of quantities that dominate the supremum
//! pointwise, or the deterministic bound from a small convex hull.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::ap_count::{count_mask, fft_t3_values, for_each_ap, gradient_values, nu_counts, ComplexSpectrum};
use crate::domain::{is_prime, AmbientKind, AmbientSet, Params};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GWMethod {
    Trivial,
    Fourier3,
    Fourier4,
    CRTHull,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GWEstimate {
    pub n: usize,
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    pub method: GWMethod,
    pub samples: usize,
    /// Standard error of whichever side was estimated by sampling.
    pub stderr: f64,
    /// `‖ν‖₂ / (N√(2π))`, exact.
    pub trivial_lower: f64,
    /// `Σν / (N√(2π))`, exact.
    pub trivial_upper: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hull: Option<CrtHull>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub seed: u64,
    /// Random starts in addition to the sign-of-Z start.
    pub random_starts: usize,
    /// Evaluate only `y ≡ 1` (and `y ≡ 0`), no search.
    pub fixed_all_ones: bool,
    /// Each sample is the mean over the pair `(Z, −Z)`.
    pub antithetic: bool,
    pub control_variate: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            seed: rng::DEFAULT_SEED,
            random_starts: 5,
            fixed_all_ones: false,
            antithetic: true,
            control_variate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchDiagnostics {
    /// Every accepted flip strictly increased the objective.
    pub monotone: bool,
    /// Fraction of samples where at least two starts reached the best value.
    pub restart_agreement: f64,
    pub mean_flips: f64,
    /// Plain sample mean of the best values found, without the control variate.
    pub raw_mean: f64,
    pub raw_stderr: f64,
}

fn sqrt_2pi() -> f64 {
    (2.0 * std::f64::consts::PI).sqrt()
}

/// `(‖ν‖₂, Σν) / (N√(2π))`.
pub fn trivial_bounds(ambient: &AmbientSet, k: usize) -> (f64, f64) {
    let nu = nu_counts(ambient, k);
    let n = ambient.n as f64;
    let l2 = nu.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
    let l1 = nu.iter().map(|&v| v as f64).sum::<f64>();
    (l2 / (n * sqrt_2pi()), l1 / (n * sqrt_2pi()))
}

pub(crate) fn gaussian_vector(seed: u64, index: u64, n: usize) -> Vec<f64> {
    let mut g = rng::stream(seed, index);
    (0..n).map(|_| g.sample(StandardNormal)).collect()
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// `N·Φ(y) = ⟨∇T_k(y), Z⟩` for binary `y`.
pub fn gradient_objective(ambient: &AmbientSet, k: usize, y: &[bool], z: &[f64]) -> f64 {
    let v: Vec<f64> = y.iter().map(|&b| b as u8 as f64).collect();
    gradient_values(ambient, &v, k).iter().zip(z).map(|(g, z)| g * z).sum()
}

/// Local-search state for `k = 3` on `[N]` or `Z/NZ` with `N` odd, where the
/// only degenerate progressions are the trivial ones. `d[a]` is the change
/// of `N·Φ` when `y_a` goes from 0 to 1; a flip of `e` moves `d` only along
/// progressions through `e`, so updates cost O(N).
struct ThreeApEngine<'a> {
    ambient: AmbientSet,
    z: &'a [f64],
    y: Vec<bool>,
    d: Vec<f64>,
    value: f64,
}

impl<'a> ThreeApEngine<'a> {
    fn new(ambient: AmbientSet, z: &'a [f64]) -> Self {
        ThreeApEngine {
            ambient,
            z,
            y: vec![false; ambient.n],
            d: z.iter().map(|&v| 3.0 * v).collect(),
            value: 0.0,
        }
    }

    fn supported(ambient: &AmbientSet, k: usize) -> bool {
        k == 3 && (ambient.kind == AmbientKind::Interval || ambient.n % 2 == 1)
    }

    /// Calls `visit(u, v)` for the two other terms of every nondegenerate
    /// 3-AP through `e`.
    fn through(&self, e: usize, mut visit: impl FnMut(usize, usize)) {
        let n = self.ambient.n as i64;
        let e = e as i64;
        match self.ambient.kind {
            AmbientKind::Interval => {
                for b in 1..=(n - 1) / 2 {
                    // e first, middle, last; both signs of b
                    for s in [b, -b] {
                        if (0..n).contains(&(e + 2 * s)) {
                            visit((e + s) as usize, (e + 2 * s) as usize);
                        }
                        if (0..n).contains(&(e - s)) && (0..n).contains(&(e + s)) {
                            visit((e - s) as usize, (e + s) as usize);
                        }
                        if (0..n).contains(&(e - 2 * s)) {
                            visit((e - 2 * s) as usize, (e - s) as usize);
                        }
                    }
                }
            }
            AmbientKind::Cyclic => {
                // e ± b, e ± 2b stepped without division
                let n = n as usize;
                let e = e as usize;
                let (mut p1, mut p2, mut m1, mut m2) = (e, e, e, e);
                for _ in 1..n {
                    p1 = if p1 + 1 == n { 0 } else { p1 + 1 };
                    p2 = if p2 + 2 >= n { p2 + 2 - n } else { p2 + 2 };
                    m1 = if m1 == 0 { n - 1 } else { m1 - 1 };
                    m2 = if m2 >= 2 { m2 - 2 } else { m2 + n - 2 };
                    visit(p1, p2);
                    visit(m1, p1);
                    visit(m2, m1);
                }
            }
        }
    }

    fn flip(&mut self, e: usize) {
        let gain = if self.y[e] { -self.d[e] } else { self.d[e] };
        let sigma = if self.y[e] { -1.0 } else { 1.0 };
        self.value += gain;
        self.y[e] = !self.y[e];
        let z = self.z;
        let mut d = std::mem::take(&mut self.d);
        self.through(e, |u, v| {
            d[u] += sigma * z[v];
            d[v] += sigma * z[u];
        });
        self.d = d;
    }

    fn gain(&self, a: usize) -> f64 {
        if self.y[a] {
            -self.d[a]
        } else {
            self.d[a]
        }
    }
}

struct SearchOutcome {
    value: f64,
    flips: usize,
    monotone: bool,
}

/// Best-improvement ascent from `start`.
fn search_three(ambient: &AmbientSet, z: &[f64], start: &[bool]) -> SearchOutcome {
    let mut eng = ThreeApEngine::new(*ambient, z);
    for (a, &b) in start.iter().enumerate() {
        if b {
            eng.flip(a);
        }
    }
    let scale = z.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
    let mut flips = 0;
    let mut monotone = true;
    loop {
        let (best, gain) = (0..ambient.n)
            .map(|a| (a, eng.gain(a)))
            .fold((usize::MAX, 0.0), |acc, (a, g)| if g > acc.1 { (a, g) } else { acc });
        if best == usize::MAX || gain <= 1e-12 * scale {
            break;
        }
        let before = eng.value;
        eng.flip(best);
        monotone &= eng.value > before;
        flips += 1;
    }
    SearchOutcome {
        value: eng.value,
        flips,
        monotone,
    }
}

/// Exact change of `N·Φ` when `y_a` goes 0 → 1, any `k`, any ambient.
fn generic_delta(ambient: &AmbientSet, k: usize, y: &[bool], z: &[f64], a: usize) -> f64 {
    let n = ambient.n as i64;
    let mut total = 0.0;
    let mut terms = vec![0usize; k];
    let contribution = |terms: &[usize]| -> f64 {
        let eval = |ya: bool| -> f64 {
            let yv = |x: usize| if x == a { ya } else { y[x] };
            (0..k)
                .map(|i| {
                    if (0..k).filter(|&j| j != i).all(|j| yv(terms[j])) {
                        z[terms[i]]
                    } else {
                        0.0
                    }
                })
                .sum()
        };
        eval(true) - eval(false)
    };
    let brange: Vec<i64> = match ambient.kind {
        AmbientKind::Interval => {
            let m = (n - 1) / (k as i64 - 1);
            (-m..=m).collect()
        }
        AmbientKind::Cyclic => (0..n).collect(),
    };
    for i in 0..k as i64 {
        for &b in &brange {
            let x0 = a as i64 - i * b;
            let mut ok = true;
            for (j, t) in terms.iter_mut().enumerate() {
                let x = x0 + j as i64 * b;
                match ambient.kind {
                    AmbientKind::Interval => {
                        if !(0..n).contains(&x) {
                            ok = false;
                            break;
                        }
                        *t = x as usize;
                    }
                    AmbientKind::Cyclic => *t = x.rem_euclid(n) as usize,
                }
            }
            // count each progression once: skip if `a` already sits earlier
            if !ok || terms[..i as usize].contains(&a) {
                continue;
            }
            total += contribution(&terms);
        }
    }
    total
}

fn search_generic(ambient: &AmbientSet, k: usize, z: &[f64], start: &[bool]) -> SearchOutcome {
    let mut y = start.to_vec();
    let mut value = gradient_objective(ambient, k, &y, z);
    let scale = z.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
    let mut flips = 0;
    let mut monotone = true;
    loop {
        let mut improved = false;
        for a in 0..ambient.n {
            let d = generic_delta(ambient, k, &y, z, a);
            let gain = if y[a] { -d } else { d };
            if gain > 1e-12 * scale {
                let before = value;
                y[a] = !y[a];
                value += gain;
                monotone &= value > before;
                flips += 1;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    SearchOutcome { value, flips, monotone }
}

/// `max_y ⟨∇T_k(y), Z⟩` over all `2^N` binary `y` in Gray-code order.
pub fn exact_sup(ambient: &AmbientSet, k: usize, z: &[f64]) -> Result<f64> {
    let n = ambient.n;
    if n > 26 {
        return Err(Error::Budget(format!("exact supremum supports N ≤ 26, got {n}")));
    }
    let mut best = 0.0f64;
    if ThreeApEngine::supported(ambient, k) {
        let mut eng = ThreeApEngine::new(*ambient, z);
        for i in 1u64..1 << n {
            eng.flip(i.trailing_zeros() as usize);
            best = best.max(eng.value);
        }
    } else {
        let mut y = vec![false; n];
        let mut value = 0.0;
        for i in 1u64..1 << n {
            let a = i.trailing_zeros() as usize;
            let d = generic_delta(ambient, k, &y, z, a);
            value += if y[a] { -d } else { d };
            y[a] = !y[a];
            best = best.max(value);
        }
    }
    Ok(best)
}

struct SampleResult {
    best: f64,
    /// `max(⟨ν, Z⟩, 0)`, the value of the better constant `y`.
    baseline: f64,
    flips: usize,
    monotone: bool,
    agree: bool,
}

/// Best local optimum over the structured and random starts, plus `y ≡ 0, 1`.
fn best_for_sample(ambient: &AmbientSet, k: usize, z: &[f64], cfg: &SearchConfig, index: u64) -> SampleResult {
    let n = ambient.n;
    let ones = vec![true; n];
    let baseline = gradient_objective_fast(ambient, k, &ones, z).max(0.0);
    if cfg.fixed_all_ones {
        return SampleResult {
            best: baseline,
            baseline,
            flips: 0,
            monotone: true,
            agree: false,
        };
    }
    let mut starts: Vec<Vec<bool>> = vec![z.iter().map(|&v| v > 0.0).collect()];
    let mut g = rng::stream(cfg.seed ^ 0x9e37_79b9_7f4a_7c15, index);
    for _ in 0..cfg.random_starts {
        starts.push((0..n).map(|_| g.random_bool(0.5)).collect());
    }
    let fast = ThreeApEngine::supported(ambient, k);
    let outcomes: Vec<SearchOutcome> = starts
        .iter()
        .map(|s| {
            if fast {
                search_three(ambient, z, s)
            } else {
                search_generic(ambient, k, z, s)
            }
        })
        .collect();
    let best = outcomes.iter().map(|o| o.value).fold(baseline, f64::max);
    let tol = 1e-9 * best.abs().max(1.0);
    SampleResult {
        best,
        baseline,
        flips: outcomes.iter().map(|o| o.flips).sum(),
        monotone: outcomes.iter().all(|o| o.monotone),
        agree: outcomes.iter().filter(|o| (o.value - best).abs() <= tol).count() >= 2,
    }
}

fn gradient_objective_fast(ambient: &AmbientSet, k: usize, y: &[bool], z: &[f64]) -> f64 {
    if y.iter().all(|&b| b) {
        // ∇T_k(1) = ν
        nu_counts(ambient, k).iter().zip(z).map(|(&v, z)| v as f64 * z).sum()
    } else {
        gradient_objective(ambient, k, y, z)
    }
}

/// Monte Carlo lower estimate of `GW(T_k/N)`.
///
/// With `control_variate` each sample subtracts the constant-`y` value and
/// adds back its exact mean `‖ν‖₂/(N√(2π))`; the estimate stays unbiased for
/// the same search and loses the `|ΣZ|` fluctuation that otherwise dominates.
pub fn gw_lower_montecarlo(ambient: &AmbientSet, k: usize, samples: usize, cfg: &SearchConfig) -> Result<GWEstimate> {
    if samples == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    if k < 3 {
        return Err(Error::domain(format!("k must be at least 3, got {k}")));
    }
    let n = ambient.n;
    let results: Vec<SampleResult> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let z = gaussian_vector(cfg.seed, i, n);
            let r = best_for_sample(ambient, k, &z, cfg, i);
            if !cfg.antithetic {
                return r;
            }
            let minus: Vec<f64> = z.iter().map(|v| -v).collect();
            let s = best_for_sample(ambient, k, &minus, cfg, i + (1 << 40));
            SampleResult {
                best: 0.5 * (r.best + s.best),
                baseline: 0.5 * (r.baseline + s.baseline),
                flips: r.flips + s.flips,
                monotone: r.monotone && s.monotone,
                agree: r.agree && s.agree,
            }
        })
        .collect();
    let (tl, tu) = trivial_bounds(ambient, k);
    let nf = n as f64;
    let raw: Vec<f64> = results.iter().map(|r| r.best / nf).collect();
    let (raw_mean, raw_stderr) = mean_and_stderr(&raw);
    let (mean, stderr) = if cfg.control_variate {
        let adjusted: Vec<f64> = results.iter().map(|r| (r.best - r.baseline) / nf + tl).collect();
        mean_and_stderr(&adjusted)
    } else {
        (raw_mean, raw_stderr)
    };
    Ok(GWEstimate {
        n,
        k,
        lower: mean,
        upper: tu,
        method: GWMethod::Trivial,
        samples,
        stderr,
        trivial_lower: tl,
        trivial_upper: tu,
        search: Some(SearchDiagnostics {
            monotone: results.iter().all(|r| r.monotone),
            restart_agreement: results.iter().filter(|r| r.agree).count() as f64 / samples as f64,
            mean_flips: results.iter().map(|r| r.flips as f64).sum::<f64>() / samples as f64,
            raw_mean,
            raw_stderr,
        }),
        hull: None,
    })
}

fn require_odd_cyclic(ambient: &AmbientSet) -> Result<()> {
    if !ambient.is_cyclic() {
        return Err(Error::domain("Fourier bounds need a cyclic ambient"));
    }
    if ambient.n.is_multiple_of(2) {
        return Err(Error::domain(format!("N = {} is even: r ↦ −2r is not a bijection", ambient.n)));
    }
    Ok(())
}

/// `3N · E max_r |ĝ(r)|`, an upper bound on `GW(T_3/N)` (odd `N`).
pub fn gw_upper_fourier3(ambient: &AmbientSet, samples: usize, seed: u64) -> Result<GWEstimate> {
    require_odd_cyclic(ambient)?;
    if samples == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    let n = ambient.n;
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| 3.0 * n as f64 * ComplexSpectrum::of(&gaussian_vector(seed, i, n)).sup_norm())
        .collect();
    let (mean, stderr) = mean_and_stderr(&values);
    let (tl, tu) = trivial_bounds(ambient, 3);
    Ok(GWEstimate {
        n,
        k: 3,
        lower: tl,
        upper: mean,
        method: GWMethod::Fourier3,
        samples,
        stderr,
        trivial_lower: tl,
        trivial_upper: tu,
        search: None,
        hull: None,
    })
}

/// `‖(Δ_s h)^‖_∞` for every shift `s`, with `Δ_s h(x) = h(x) h(x+s)`.
pub fn delta_sup_norms(h: &[f64]) -> Vec<f64> {
    let n = h.len();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    (0..n)
        .map(|s| {
            for (x, c) in buf.iter_mut().enumerate() {
                *c = Complex64::new(h[x] * h[(x + s) % n], 0.0);
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            buf.iter().map(|c| c.norm()).fold(0.0, f64::max) / n as f64
        })
        .collect()
}

/// Fraction of shifts `s` with `‖(Δ_s h)^‖_∞ > C √(log N / N)`.
pub fn delta_tail_fraction(h: &[f64], c: f64) -> f64 {
    let n = h.len() as f64;
    let cut = c * (n.ln() / n).sqrt();
    let sups = delta_sup_norms(h);
    sups.iter().filter(|&&s| s > cut).count() as f64 / n
}

/// `4N · E √((1/N) Σ_s ‖(Δ_s h)^‖_∞)`, the 4-AP Fourier bound.
pub fn gw_upper_fourier4(ambient: &AmbientSet, samples: usize, seed: u64) -> Result<GWEstimate> {
    if !ambient.is_cyclic() {
        return Err(Error::domain("Fourier bounds need a cyclic ambient"));
    }
    if samples == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    let n = ambient.n;
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let sups = delta_sup_norms(&gaussian_vector(seed, i, n));
            4.0 * n as f64 * (sups.iter().sum::<f64>() / n as f64).sqrt()
        })
        .collect();
    let (mean, stderr) = mean_and_stderr(&values);
    let (tl, tu) = trivial_bounds(ambient, 4);
    Ok(GWEstimate {
        n,
        k: 4,
        lower: tl,
        upper: mean,
        method: GWMethod::Fourier4,
        samples,
        stderr,
        trivial_lower: tl,
        trivial_upper: tu,
        search: None,
        hull: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrtHull {
    pub n: u64,
    pub k: usize,
    pub primes: Vec<u64>,
    pub log_v: f64,
    /// `1 + q_1⋯q_{k−1}/N`
    pub vertex_bound: f64,
    pub constant: f64,
    pub bound: f64,
}

/// Multiplier in `GW(S) ≤ C·B·√(N log|S|)` for `S ⊂ [−B, B]^N`: the
/// union-bound cutoff `10√(N log|S|)` plus a tail integral below `√(N log|S|)`.
pub const SMALL_SET_CONSTANT: f64 = 11.0;

fn int_root_floor(n: u64, e: u32) -> u64 {
    let mut r = (n as f64).powf(1.0 / e as f64) as u64;
    while r > 0 && r.checked_pow(e).is_none_or(|v| v > n) {
        r -= 1;
    }
    while (r + 1).checked_pow(e).is_some_and(|v| v <= n) {
        r += 1;
    }
    r
}

/// `k−1` distinct primes in `[(n/2)^{1/(k−1)}, n^{1/(k−1)}]`, scanning down.
pub fn crt_primes(n: u64, k: usize) -> Result<Vec<u64>> {
    let e = (k - 1) as u32;
    let hi = int_root_floor(n, e);
    let mut primes = Vec::new();
    let mut q = hi;
    // q^{k−1} ≥ n/2 ⇔ 2 q^{k−1} ≥ n
    while q >= 2 && q.checked_pow(e).is_none_or(|v| 2 * v as u128 >= n as u128) {
        if is_prime(q) && q > (k - 1) as u64 {
            primes.push(q);
            if primes.len() == k - 1 {
                primes.reverse();
                return Ok(primes);
            }
        }
        q -= 1;
    }
    Err(Error::domain(format!(
        "fewer than {} primes in [(n/2)^(1/{e}), n^(1/{e})] for n = {n}",
        k - 1
    )))
}

/// The convex-hull bound `C·k·B·√(N log|V|)` on `GW(T_k/N)`.
pub fn crt_hull_bound(n: u64, k: usize) -> Result<CrtHull> {
    if k < 3 {
        return Err(Error::domain(format!("k must be at least 3, got {k}")));
    }
    let primes = crt_primes(n, k)?;
    let product: f64 = primes.iter().map(|&q| q as f64).product();
    let log_v = product.ln() + primes.iter().map(|&q| (n as f64 / q as f64 + 1.0) * 2f64.ln()).sum::<f64>();
    let vertex_bound = 1.0 + product / n as f64;
    let bound = SMALL_SET_CONSTANT * k as f64 * vertex_bound * (n as f64 * log_v).sqrt();
    Ok(CrtHull {
        n,
        k,
        primes,
        log_v,
        vertex_bound,
        constant: SMALL_SET_CONSTANT,
        bound,
    })
}

/// The hull bound packaged as an estimate on `[N]`; deterministic, so `stderr = 0`.
pub fn gw_upper_crt(n: usize, k: usize) -> Result<GWEstimate> {
    let hull = crt_hull_bound(n as u64, k)?;
    let (tl, tu) = if n <= 1 << 20 {
        trivial_bounds(&AmbientSet::interval(n), k)
    } else {
        // Σν = k T_k([N]) and ‖ν‖₂ ≥ Σν/√N
        let nf = n as f64;
        let (d, r) = ((k - 1) as f64, ((n - 1) % (k - 1) + 1) as f64);
        let sum = k as f64 * ((nf * nf - r * r) / d + r);
        (sum / (nf.sqrt() * nf * sqrt_2pi()), sum / (nf * sqrt_2pi()))
    };
    Ok(GWEstimate {
        n,
        k,
        lower: tl,
        upper: hull.bound,
        method: GWMethod::CRTHull,
        samples: 0,
        stderr: 0.0,
        trivial_lower: tl,
        trivial_upper: tu,
        search: None,
        hull: Some(hull),
    })
}

fn mod_inverse(a: u64, m: u64) -> u64 {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    old_s.rem_euclid(m as i128) as u64
}

/// The vertex `v_{r;f}(a) = (Q/N) Σ_b Π_{i=1}^{k−1} f_{r_i + q_iZ}(a + ib)` on
/// `[N]` (indices `0..N` stand for `1..=N`), enumerating only the `b` in the
/// residue class forced by the Chinese remainder theorem.
pub fn crt_vertex(n: u64, k: usize, primes: &[u64], f: &[bool], residues: &[u64]) -> Vec<f64> {
    let q: u128 = primes.iter().map(|&p| p as u128).product();
    // b ≡ Σ_i c_i(a) M_i y_i (mod Q) with c_i(a) = (r_i − a)·i⁻¹ mod q_i
    let crt_coeff: Vec<u128> = primes
        .iter()
        .map(|&p| {
            let m = q / p as u128;
            m * mod_inverse((m % p as u128) as u64, p) as u128
        })
        .collect();
    let inv_i: Vec<u64> = primes.iter().enumerate().map(|(i, &p)| mod_inverse((i as u64 + 1) % p, p)).collect();
    let scale = q as f64 / n as f64;
    let span = (k - 1) as i64;
    (1..=n as i64)
        .map(|a| {
            let mut beta: u128 = 0;
            for (i, &p) in primes.iter().enumerate() {
                let c = ((residues[i] as i64 - a).rem_euclid(p as i64) as u128 * inv_i[i] as u128) % p as u128;
                beta = (beta + c * crt_coeff[i]) % q;
            }
            let lo = (1 - a).div_euclid(span) + if (1 - a).rem_euclid(span) != 0 { 1 } else { 0 };
            let hi = (n as i64 - a).div_euclid(span);
            let qi = q as i64;
            let mut b = lo + (beta as i64 - lo).rem_euclid(qi);
            let mut count = 0u64;
            while b <= hi {
                if (1..k as i64).all(|i| f[(a + i * b - 1) as usize]) {
                    count += 1;
                }
                b += qi;
            }
            scale * count as f64
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexCheck {
    pub draws: usize,
    pub max_abs: f64,
    pub vertex_bound: f64,
}

/// Largest `|v_{r;f}(a)|` over random `(f, r)` draws; the first draw uses `f ≡ 1`.
pub fn crt_vertex_check(n: u64, k: usize, draws: usize, seed: u64) -> Result<VertexCheck> {
    let hull = crt_hull_bound(n, k)?;
    let max_abs = (0..draws as u64)
        .into_par_iter()
        .map(|d| {
            let mut g = rng::stream(seed, d);
            let f: Vec<bool> = (0..n).map(|_| d == 0 || g.random_bool(0.5)).collect();
            let r: Vec<u64> = hull.primes.iter().map(|&p| g.random_range(0..p)).collect();
            crt_vertex(n, k, &hull.primes, &f, &r).into_iter().fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(VertexCheck {
        draws,
        max_abs,
        vertex_bound: hull.vertex_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionEstimate {
    pub n: usize,
    pub samples: usize,
    /// Mean of `⟨∇T_3(y)/N, h⟩` with `y` a randomised rounding of the witness.
    pub mean: f64,
    pub stderr: f64,
    /// Same for the unrounded cosine witness.
    pub mean_continuous: f64,
    /// Rounded pairing against `h − mean(h)`. The witness frequency depends
    /// on `h` only through `ĥ(r)`, `r ≠ 0`, which is independent of `ĥ(0)`,
    /// so this has the same expectation with the constant mode removed.
    pub mean_centered: f64,
    pub stderr_centered: f64,
}

/// The cosine witness `f(a) = (1 + cos(2πsa/N))/2` with `s ∈ (0, N/4)`
/// maximising `Re ĥ(2s)`.
pub fn cosine_witness(h: &[f64]) -> (usize, Vec<f64>) {
    let n = h.len();
    let spec = ComplexSpectrum::of(h);
    let s = (1..n.div_ceil(4))
        .max_by(|&a, &b| spec.at(2 * a as i64).re.total_cmp(&spec.at(2 * b as i64).re))
        .unwrap_or(1);
    let f = (0..n)
        .map(|a| 0.5 * (1.0 + (2.0 * std::f64::consts::PI * (s * a % n) as f64 / n as f64).cos()))
        .collect();
    (s, f)
}

/// `⟨∇T_3(f), h⟩ / N = (T_3(h,f,f) + T_3(f,h,f) + T_3(f,f,h)) / N`, via FFT.
pub fn three_ap_pairing(f: &[f64], h: &[f64]) -> f64 {
    let n = f.len() as f64;
    (fft_t3_values(h, f, f) + fft_t3_values(f, h, f) + fft_t3_values(f, f, h)) / n
}

/// Lower-bound witness for `GW(T_3/N)` on odd `Z/NZ`.
pub fn gw_lower_3ap_construction(ambient: &AmbientSet, samples: usize, seed: u64) -> Result<ConstructionEstimate> {
    require_odd_cyclic(ambient)?;
    if samples == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    let n = ambient.n;
    let pairs: Vec<(f64, f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let h = gaussian_vector(seed, i, n);
            let (_, f) = cosine_witness(&h);
            let mut g = rng::stream(seed ^ 0x5851_f42d_4c95_7f2d, i);
            let y: Vec<f64> = f.iter().map(|&p| g.random_bool(p.clamp(0.0, 1.0)) as u8 as f64).collect();
            let m = h.iter().sum::<f64>() / n as f64;
            let hc: Vec<f64> = h.iter().map(|v| v - m).collect();
            (three_ap_pairing(&y, &h), three_ap_pairing(&f, &h), three_ap_pairing(&y, &hc))
        })
        .collect();
    let rounded: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let (mean, stderr) = mean_and_stderr(&rounded);
    let centered: Vec<f64> = pairs.iter().map(|p| p.2).collect();
    let (mean_centered, stderr_centered) = mean_and_stderr(&centered);
    Ok(ConstructionEstimate {
        n,
        samples,
        mean,
        stderr,
        mean_continuous: pairs.iter().map(|p| p.1).sum::<f64>() / samples as f64,
        mean_centered,
        stderr_centered,
    })
}

/// Exact expectation of the rounded pairing: the multilinear part is
/// preserved, and each trivial progression turns `f_a²` into `f_a`.
pub fn expected_rounded_pairing(f: &[f64], h: &[f64]) -> f64 {
    let n = f.len() as f64;
    three_ap_pairing(f, h) + 3.0 * f.iter().zip(h).map(|(f, h)| h * f * (1.0 - f)).sum::<f64>() / n
}

/// `max_a ν_a / N`, an upper bound on `DLip(T_k/N)`.
pub fn dlip_upper(ambient: &AmbientSet, k: usize) -> f64 {
    if ambient.is_cyclic() {
        // ν ≡ kN on the group
        return k as f64;
    }
    nu_counts(ambient, k).into_iter().max().unwrap_or(0) as f64 / ambient.n as f64
}

/// `DLip(T_k/N)` by visiting every `y ∈ {0,1}^N` (`N ≤ 20`).
pub fn dlip_exhaustive(ambient: &AmbientSet, k: usize) -> Result<f64> {
    let n = ambient.n;
    if n > 20 {
        return Err(Error::Budget(format!("exhaustive DLip supports N ≤ 20, got {n}")));
    }
    let mut best = 0u64;
    for mask in 0u64..1 << n {
        for a in 0..n {
            if mask >> a & 1 == 0 {
                let d = count_mask(ambient, mask | 1 << a, k) - count_mask(ambient, mask, k);
                best = best.max(d);
            }
        }
    }
    Ok(best as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EldanTerms {
    pub n: usize,
    pub epsilon: f64,
    pub dlip: f64,
    pub gw: f64,
    #[serde(rename = "L")]
    pub l: f64,
    /// `6 L (log N)^{1/6} N^{−1/3}`
    pub upper_correction: f64,
    /// `2 DLip² / (N ε²)`
    pub lower_correction: f64,
    /// `lower_correction ≤ 1/2`: the lower bound of the LDP applies.
    pub lower_bound_applies: bool,
    /// `upper_correction < 1`.
    pub upper_bound_nontrivial: bool,
    /// `ε / (δ p^k)`; must be small for the threshold shift to be negligible.
    pub epsilon_over_delta_pk: f64,
}

/// Error terms of the Gaussian-width LDP for `F = T_k/N`, with
/// `ε = N^{−1/3} (log N)^{11/12} GW^{1/3}`.
pub fn eldan_terms(ambient: &AmbientSet, params: &Params, gw: f64) -> Result<EldanTerms> {
    if !(gw > 0.0) {
        return Err(Error::domain("Gaussian width must be positive"));
    }
    if !(params.p > 0.0 && params.p < 1.0) {
        return Err(Error::domain("p must lie in (0,1)"));
    }
    let n = ambient.n as f64;
    let log_n = n.ln();
    let dlip = dlip_upper(ambient, params.k);
    let epsilon = n.powf(-1.0 / 3.0) * log_n.powf(11.0 / 12.0) * gw.cbrt();
    let lp = (params.p * (1.0 - params.p)).ln().abs();
    let l = (2.0 * dlip + dlip / (epsilon * n.sqrt()) + lp).powf(2.0 / 3.0) * (gw + dlip * dlip / epsilon).cbrt() / epsilon;
    let upper_correction = 6.0 * l * log_n.powf(1.0 / 6.0) * n.powf(-1.0 / 3.0);
    let lower_correction = 2.0 * dlip * dlip / (n * epsilon * epsilon);
    Ok(EldanTerms {
        n: ambient.n,
        epsilon,
        dlip,
        gw,
        l,
        upper_correction,
        lower_correction,
        lower_bound_applies: lower_correction <= 0.5,
        upper_bound_nontrivial: upper_correction < 1.0,
        epsilon_over_delta_pk: epsilon / (params.delta * params.p.powi(params.k as i32)),
    })
}

/// Sum of `⟨∇T_k(y), Z⟩` over every progression, visiting each once; used to
/// cross-check the incremental engine.
pub fn objective_by_enumeration(ambient: &AmbientSet, k: usize, y: &[bool], z: &[f64]) -> f64 {
    let mut total = 0.0;
    for_each_ap(ambient, k, |t| {
        for i in 0..k {
            if (0..k).filter(|&j| j != i).all(|j| y[t[j]]) {
                total += z[t[i]];
            }
        }
    });
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn engine_tracks_exact_objective() {
        for amb in [AmbientSet::interval(40), AmbientSet::cyclic(41)] {
            let z = gaussian_vector(3, 0, amb.n);
            let mut g = rng::stream(4, 0);
            let start: Vec<bool> = (0..amb.n).map(|_| g.random_bool(0.5)).collect();
            let mut eng = ThreeApEngine::new(amb, &z);
            for (a, &b) in start.iter().enumerate() {
                if b {
                    eng.flip(a);
                }
            }
            let exact = objective_by_enumeration(&amb, 3, &eng.y, &z);
            assert!((eng.value - exact).abs() < 1e-9 * exact.abs().max(1.0));
            for a in 0..amb.n {
                let d = generic_delta(&amb, 3, &eng.y, &z, a);
                assert!((eng.d[a] - d).abs() < 1e-9, "a={a}");
            }
        }
    }

    #[test]
    fn generic_delta_matches_recount_even_cyclic() {
        let amb = AmbientSet::cyclic(12);
        let z = gaussian_vector(9, 1, 12);
        let y: Vec<bool> = (0..12).map(|i| i % 3 != 0).collect();
        for k in 3..=4 {
            for a in 0..12 {
                let mut y1 = y.clone();
                y1[a] = true;
                let mut y0 = y.clone();
                y0[a] = false;
                let d = objective_by_enumeration(&amb, k, &y1, &z) - objective_by_enumeration(&amb, k, &y0, &z);
                assert!((generic_delta(&amb, k, &y, &z, a) - d).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_gaussian_gives_zero() {
        let amb = AmbientSet::cyclic(15);
        let z = vec![0.0; 15];
        let r = best_for_sample(&amb, 3, &z, &SearchConfig::default(), 0);
        assert_eq!(r.best, 0.0);
    }

    #[test]
    fn delta_spectrum_is_flat() {
        let mut d = vec![0.0; 31];
        d[0] = 1.0;
        assert!((ComplexSpectrum::of(&d).sup_norm() - 1.0 / 31.0).abs() < 1e-15);
        let sups = delta_sup_norms(&d);
        assert!(sups[1..].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn crt_prime_window() {
        assert!(crt_primes(100, 3).is_err());
        let p = crt_primes(10_000, 3).unwrap();
        assert_eq!(p, vec![89, 97]);
        let p = crt_primes(1_000_000, 4).unwrap();
        assert!(p.iter().all(|&q| q * q * q <= 1_000_000 && 2 * q * q * q >= 1_000_000));
    }

    #[test]
    fn crt_vertex_matches_direct_sum() {
        let (n, k) = (2000u64, 3usize);
        let primes = crt_primes(n, k).unwrap();
        let q: u64 = primes.iter().product();
        let mut g = rng::stream(8, 0);
        let f: Vec<bool> = (0..n).map(|_| g.random_bool(0.7)).collect();
        let r: Vec<u64> = primes.iter().map(|&p| g.random_range(0..p)).collect();
        let v = crt_vertex(n, k, &primes, &f, &r);
        for a in 1..=n as i64 {
            let mut count = 0;
            for b in -(n as i64)..=n as i64 {
                let ok = (1..k as i64).all(|i| {
                    let x = a + i * b;
                    x >= 1
                        && x <= n as i64
                        && x.rem_euclid(primes[i as usize - 1] as i64) == r[i as usize - 1] as i64
                        && f[(x - 1) as usize]
                });
                count += ok as u64;
            }
            let direct = q as f64 / n as f64 * count as f64;
            assert!((v[(a - 1) as usize] - direct).abs() < 1e-12, "a={a}");
        }
    }

    #[test]
    fn dlip_cyclic_is_k() {
        assert_eq!(dlip_upper(&AmbientSet::cyclic(9), 3), 3.0);
        let amb = AmbientSet::interval(10);
        assert!(dlip_exhaustive(&amb, 3).unwrap() <= dlip_upper(&amb, 3));
    }

    #[test]
    fn fourier_rejects_even() {
        assert!(gw_upper_fourier3(&AmbientSet::cyclic(64), 2, 1).is_err());
        assert!(gw_lower_3ap_construction(&AmbientSet::cyclic(64), 2, 1).is_err());
    }

    #[test]
    fn witness_pre_rounding_identity() {
        let n = 101;
        let h = gaussian_vector(5, 0, n);
        let (s, f) = cosine_witness(&h);
        let spec = ComplexSpectrum::of(&h);
        let t_fhf = fft_t3_values(&f, &h, &f) / (n * n) as f64;
        let expected = 0.25 * spec.at(0).re + 0.125 * spec.at(2 * s as i64).re;
        assert!((t_fhf - expected).abs() < 1e-12);
    }
}
