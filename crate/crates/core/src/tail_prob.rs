//! Upper-tail probabilities `P(T_k(Ω_p) ≥ (1+δ) E T_k(Ω_p))`.
//!
//! Exact values come from a Gray-code sweep over all subsets (`N ≤ 24`);
//! Monte Carlo estimates sample the random set directly or under a product
//! Bernoulli tilt with exact likelihood ratios.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ap_count::{count_mask, count_tk_set, for_each_ap};
use crate::domain::{compensated_sum, relative_entropy, AmbientKind, AmbientSet, Params};
use crate::error::{Error, Result};
use crate::extremal::interval_tk;
use crate::rng;
use crate::variational::{gamma_k_f64, regime_indicator, solve_variational, SolverConfig};

pub const EXACT_MAX_N: usize = 24;
const CHUNK: u64 = 1 << 14;
pub const TILT_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailMethod {
    Exact,
    MonteCarlo,
    Tilted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltDiagnostics {
    /// `(Σw)² / Σw²` over all samples.
    pub effective_sample_size: f64,
    pub mean_log_weight: f64,
    pub mean_log_weight_stderr: f64,
    /// `−Σ_a I_p(q_a)`, the exact mean of the log weight under the tilt.
    pub expected_log_weight: f64,
    pub clamped_entries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub ambient: AmbientSet,
    pub params: Params,
    /// `E T_k(Ω_p) = p^k (T_k(Ω) − N) + pN`.
    pub expectation: f64,
    pub threshold: f64,
    pub prob: f64,
    pub log_prob: f64,
    pub method: TailMethod,
    pub samples: u64,
    pub stderr: f64,
    pub stderr_log: f64,
    /// Exact only: the number of subsets at or above the threshold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exceed_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tilt: Option<TiltDiagnostics>,
    pub warnings: Vec<String>,
}

/// `E T_k(Ω_p) = Σ_{(a,b)} p^{#distinct terms}`. On `[N]` only the `N`
/// trivial pairs repeat terms; on `Z/NZ` a step of order `m < k` gives `m`.
pub fn expected_count(ambient: &AmbientSet, params: &Params) -> f64 {
    let (k, p) = (params.k, params.p);
    let n = ambient.n;
    match ambient.kind {
        AmbientKind::Interval => {
            let total = ambient.total_count(k) as f64;
            p.powi(k as i32) * (total - n as f64) + p * n as f64
        }
        AmbientKind::Cyclic => {
            let per_step = compensated_sum((0..n).map(|b| p.powi((n / gcd(b, n)).min(k) as i32)));
            per_step * n as f64
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `(1+δ) E T_k(Ω_p)`.
pub fn tail_threshold(ambient: &AmbientSet, params: &Params) -> f64 {
    (1.0 + params.delta) * expected_count(ambient, params)
}

/// `T ≥ threshold` for an integer count, tolerant of rounding in the threshold.
fn meets(t: u64, threshold: f64) -> bool {
    t as f64 >= threshold - 1e-9 * threshold.abs().max(1.0)
}

/// Joint histogram of `(|S|, T_k(S))` over all `S ⊆ Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    pub ambient: AmbientSet,
    pub k: usize,
    pub total: u64,
    hist: Vec<u64>,
}

impl ExactDistribution {
    fn row(&self) -> usize {
        self.total as usize + 1
    }

    pub fn count(&self, size: usize, t: u64) -> u64 {
        self.hist[size * self.row() + t as usize]
    }

    /// Number of subsets with `T ≥ threshold`.
    pub fn count_at_least(&self, threshold: f64) -> u64 {
        let row = self.row();
        (0..=self.ambient.n)
            .map(|s| (0..row as u64).filter(|&t| meets(t, threshold)).map(|t| self.hist[s * row + t as usize]).sum::<u64>())
            .sum()
    }

    /// `P(T_k(Ω_p) ≥ threshold)`.
    pub fn tail(&self, p: f64, threshold: f64) -> f64 {
        let row = self.row();
        let n = self.ambient.n;
        compensated_sum((0..=n).map(|s| {
            let c: u64 = (0..row as u64).filter(|&t| meets(t, threshold)).map(|t| self.hist[s * row + t as usize]).sum();
            if c == 0 {
                0.0
            } else {
                c as f64 * p.powi(s as i32) * (1.0 - p).powi((n - s) as i32)
            }
        }))
        .min(1.0)
    }
}

/// For each element, the distinct progression supports through it with the
/// number of `(a, b)` pairs producing each.
fn supports_through(ambient: &AmbientSet, k: usize) -> Vec<Vec<(u64, u64)>> {
    let mut all: std::collections::BTreeMap<u64, u64> = Default::default();
    for_each_ap(ambient, k, |t| {
        let m = t.iter().fold(0u64, |m, &x| m | 1 << x);
        *all.entry(m).or_default() += 1;
    });
    let mut by = vec![Vec::new(); ambient.n];
    for (m, c) in all {
        for (e, list) in by.iter_mut().enumerate() {
            if m >> e & 1 == 1 {
                list.push((m, c));
            }
        }
    }
    by
}

/// Sweeps all `2^N` subsets in Gray-code order, sharded; each shard starts
/// from a direct count and then updates `T` by one element per step.
pub fn exact_distribution(ambient: &AmbientSet, k: usize) -> Result<ExactDistribution> {
    let n = ambient.n;
    if n > EXACT_MAX_N {
        return Err(Error::Budget(format!("exact sweep supports N ≤ {EXACT_MAX_N}, got {n}")));
    }
    let total = ambient.total_count(k);
    let row = total as usize + 1;
    let through = supports_through(ambient, k);
    let space = 1u64 << n;
    let shards = space.min(64);
    let per = space / shards;
    let parts: Vec<Vec<u64>> = (0..shards)
        .into_par_iter()
        .map(|sh| {
            let mut hist = vec![0u64; (n + 1) * row];
            let lo = sh * per;
            let mut mask = lo ^ (lo >> 1);
            let mut t = count_mask(ambient, mask, k);
            hist[mask.count_ones() as usize * row + t as usize] += 1;
            for i in lo + 1..lo + per {
                let e = i.trailing_zeros() as usize;
                let bit = 1u64 << e;
                let with = mask | bit;
                let d: u64 = through[e].iter().filter(|&&(m, _)| m & with == m).map(|&(_, c)| c).sum();
                if mask & bit == 0 {
                    t += d;
                } else {
                    t -= d;
                }
                mask ^= bit;
                hist[mask.count_ones() as usize * row + t as usize] += 1;
            }
            hist
        })
        .collect();
    let mut hist = vec![0u64; (n + 1) * row];
    for part in parts {
        for (h, v) in hist.iter_mut().zip(part) {
            *h += v;
        }
    }
    Ok(ExactDistribution {
        ambient: *ambient,
        k,
        total,
        hist,
    })
}

/// Exact tail probability by full enumeration.
pub fn tail_exact(ambient: &AmbientSet, params: &Params) -> Result<TailReport> {
    let dist = exact_distribution(ambient, params.k)?;
    Ok(exact_report(&dist, params))
}

pub fn exact_report(dist: &ExactDistribution, params: &Params) -> TailReport {
    let ambient = dist.ambient;
    let threshold = tail_threshold(&ambient, params);
    let prob = dist.tail(params.p, threshold);
    TailReport {
        ambient,
        params: *params,
        expectation: expected_count(&ambient, params),
        threshold,
        prob,
        log_prob: prob.ln(),
        method: TailMethod::Exact,
        samples: 1 << ambient.n,
        stderr: 0.0,
        stderr_log: 0.0,
        exceed_count: Some(dist.count_at_least(threshold)),
        tilt: None,
        warnings: Vec::new(),
    }
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: u64,
    hit_w: f64,
    hit_w2: f64,
    w: f64,
    w2: f64,
    logw: f64,
    logw2: f64,
}

impl Moments {
    fn merge(mut self, o: Moments) -> Moments {
        self.n += o.n;
        self.hit_w += o.hit_w;
        self.hit_w2 += o.hit_w2;
        self.w += o.w;
        self.w2 += o.w2;
        self.logw += o.logw;
        self.logw2 += o.logw2;
        self
    }
}

fn count_sample(ambient: &AmbientSet, x: &[bool], k: usize, scratch: &mut Vec<usize>) -> u64 {
    if ambient.n <= 64 {
        let mask = x.iter().enumerate().fold(0u64, |m, (i, &b)| m | (b as u64) << i);
        count_mask(ambient, mask, k)
    } else {
        scratch.clear();
        scratch.extend(x.iter().enumerate().filter(|p| *p.1).map(|p| p.0));
        count_tk_set(ambient, scratch, k).expect("indices are in range")
    }
}

/// Samples `x_a = [u_a < q_a]` from one uniform per element, so that a tilt
/// equal to `p` reproduces plain sampling draw for draw.
fn sample_moments(ambient: &AmbientSet, params: &Params, q: &[f64], samples: u64, seed: u64) -> Moments {
    let threshold = tail_threshold(ambient, params);
    let p = params.p;
    // log-weight contributions for x_a = 1 and x_a = 0
    let lw: Vec<(f64, f64)> = q
        .iter()
        .map(|&qa| {
            let one = if qa == p { 0.0 } else { (p / qa).ln() };
            let zero = if qa == p { 0.0 } else { ((1.0 - p) / (1.0 - qa)).ln() };
            (one, zero)
        })
        .collect();
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut g = rng::stream(seed, c);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut x = vec![false; ambient.n];
            let mut scratch = Vec::new();
            let mut m = Moments::default();
            for _ in 0..count {
                let mut logw = 0.0;
                for (a, xa) in x.iter_mut().enumerate() {
                    *xa = g.random::<f64>() < q[a];
                    logw += if *xa { lw[a].0 } else { lw[a].1 };
                }
                let w = logw.exp();
                let t = count_sample(ambient, &x, params.k, &mut scratch);
                m.n += 1;
                if meets(t, threshold) {
                    m.hit_w += w;
                    m.hit_w2 += w * w;
                }
                m.w += w;
                m.w2 += w * w;
                m.logw += logw;
                m.logw2 += logw * logw;
            }
            m
        })
        .collect();
    parts.into_iter().fold(Moments::default(), Moments::merge)
}

fn mc_report(ambient: &AmbientSet, params: &Params, m: &Moments, method: TailMethod) -> TailReport {
    let n = m.n as f64;
    let prob = m.hit_w / n;
    // population variance, so that a tilt equal to p matches the binomial formula
    let var = (m.hit_w2 / n - prob * prob).max(0.0);
    let stderr = (var / n).sqrt();
    TailReport {
        ambient: *ambient,
        params: *params,
        expectation: expected_count(ambient, params),
        threshold: tail_threshold(ambient, params),
        prob,
        log_prob: prob.ln(),
        method,
        samples: m.n,
        stderr,
        stderr_log: if prob > 0.0 { stderr / prob } else { f64::INFINITY },
        exceed_count: None,
        tilt: None,
        warnings: Vec::new(),
    }
}

/// Plain Monte Carlo estimate with binomial standard error.
pub fn tail_montecarlo(ambient: &AmbientSet, params: &Params, samples: u64, seed: u64) -> Result<TailReport> {
    if samples == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    let q = vec![params.p; ambient.n];
    let m = sample_moments(ambient, params, &q, samples, seed);
    Ok(mc_report(ambient, params, &m, TailMethod::MonteCarlo))
}

/// Importance-sampling estimate under independent Bernoulli(`tilt[a]`).
pub fn tail_tilted(ambient: &AmbientSet, params: &Params, tilt: &[f64], samples: u64, seed: u64) -> Result<TailReport> {
    if samples == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    if tilt.len() != ambient.n {
        return Err(Error::domain(format!("tilt has {} entries, ambient has {}", tilt.len(), ambient.n)));
    }
    if !(params.p > 0.0 && params.p < 1.0) {
        return Err(Error::domain("tilted sampling needs p in (0,1)"));
    }
    if tilt.iter().any(|q| !q.is_finite()) {
        return Err(Error::domain("tilt entries must be finite"));
    }
    let mut clamped = 0;
    let q: Vec<f64> = tilt
        .iter()
        .map(|&v| {
            let c = v.clamp(TILT_CLAMP, 1.0 - TILT_CLAMP);
            clamped += (c != v) as usize;
            c
        })
        .collect();
    let m = sample_moments(ambient, params, &q, samples, seed);
    let mut report = mc_report(ambient, params, &m, TailMethod::Tilted);
    if clamped > 0 {
        report
            .warnings
            .push(format!("{clamped} tilt entries clamped to [{TILT_CLAMP:e}, 1 − {TILT_CLAMP:e}]"));
    }
    let n = m.n as f64;
    let mean_log = m.logw / n;
    let var_log = (m.logw2 / n - mean_log * mean_log).max(0.0);
    let expected_log_weight = -compensated_sum(q.iter().map(|&qa| relative_entropy(qa, params.p).unwrap_or(f64::NAN)));
    report.tilt = Some(TiltDiagnostics {
        effective_sample_size: if m.w2 > 0.0 { m.w * m.w / m.w2 } else { 0.0 },
        mean_log_weight: mean_log,
        mean_log_weight_stderr: (var_log / n).sqrt(),
        expected_log_weight,
        clamped_entries: clamped,
    });
    Ok(report)
}

/// The variational optimiser for the exact-expectation threshold, used as a
/// default tilt.
pub fn default_tilt(ambient: &AmbientSet, params: &Params, seed: u64) -> Result<Vec<f64>> {
    let pk_total = params.p.powi(params.k as i32) * ambient.total_count(params.k) as f64;
    let delta = tail_threshold(ambient, params) / pk_total - 1.0;
    let shifted = Params::new(params.k, params.p, delta.max(0.0))?;
    let cfg = SolverConfig {
        seed,
        ..SolverConfig::default()
    };
    Ok(solve_variational(ambient, &shifted, &cfg)?.f.into_values())
}

/// `P ≥ p^m` where `m` is the shortest interval whose own count reaches the
/// threshold: containing it forces the event.
pub fn interval_forcing_lower_bound(ambient: &AmbientSet, params: &Params) -> f64 {
    let threshold = tail_threshold(ambient, params);
    let k = params.k as u64;
    match (0..=ambient.n).find(|&m| meets(interval_tk(m as u64, k), threshold)) {
        Some(m) => params.p.powi(m as i32),
        None => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateComparison {
    pub diagnostic: bool,
    pub neg_log_prob: f64,
    pub infinite: bool,
    pub regime_indicator: f64,
    /// `√δ p^{k/2} N log(1/p)`
    pub macro_normalizer: f64,
    /// `None` when the normaliser vanishes (`δ = 0`) or the probability is 0.
    pub macro_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub macro_target: Option<f64>,
    /// `δ² N p`
    pub micro_normalizer: f64,
    pub micro_ratio: Option<f64>,
    pub micro_target: f64,
}

/// Normalised `−log P` against both asymptotic rates. Never a pass/fail.
fn finite_ratio(a: f64, b: f64) -> Option<f64> {
    let r = a / b;
    r.is_finite().then_some(r)
}

pub fn rate_comparison(ambient: &AmbientSet, params: &Params, tail: &TailReport) -> RateComparison {
    let (p, d, k) = (params.p, params.delta, params.k);
    let n = ambient.n as f64;
    let infinite = !(tail.prob > 0.0);
    let neg_log_prob = if infinite { f64::INFINITY } else { -tail.prob.ln() };
    let macro_normalizer = d.sqrt() * p.powf(k as f64 / 2.0) * n * (1.0 / p).ln();
    let micro_normalizer = d * d * n * p;
    let (macro_target, micro_target) = if ambient.is_cyclic() {
        let m = ambient.prime.then(|| ((k - 1) as f64).sqrt());
        (m, 1.0 / (2.0 * (k * k) as f64))
    } else {
        (Some(1.0), 1.0 / (2.0 * gamma_k_f64(k)))
    };
    RateComparison {
        diagnostic: true,
        neg_log_prob,
        infinite,
        regime_indicator: regime_indicator(params),
        macro_normalizer,
        macro_ratio: finite_ratio(neg_log_prob, macro_normalizer),
        macro_target,
        micro_normalizer,
        micro_ratio: finite_ratio(neg_log_prob, micro_normalizer),
        micro_target,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub prob: f64,
    pub log_prob: f64,
    pub macro_ratio: Option<f64>,
    pub micro_ratio: Option<f64>,
}

/// Exact tail over a δ grid from a single enumeration.
pub fn tail_sweep(ambient: &AmbientSet, k: usize, p: f64, deltas: &[f64]) -> Result<Vec<SweepRow>> {
    let dist = exact_distribution(ambient, k)?;
    deltas
        .iter()
        .map(|&delta| {
            let params = Params::new(k, p, delta)?;
            let report = exact_report(&dist, &params);
            let cmp = rate_comparison(ambient, &params, &report);
            Ok(SweepRow {
                delta,
                prob: report.prob,
                log_prob: report.log_prob,
                macro_ratio: cmp.macro_ratio,
                micro_ratio: cmp.micro_ratio,
            })
        })
        .collect()
}
