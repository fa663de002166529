//! The entropic variational problem
//!
//! ```text
//! φ(δ) = min { Σ_a I_p(f(a)) : f : Ω → [0,1], T_k(f) ≥ (1+δ) p^k T_k(Ω) }
//! ```
//!
//! with the explicit constructions that bound it, a multi-start numerical
//! minimiser, and the closed-form macroscopic and microscopic rates.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ap_count::{count_tk_values, nu_counts, value_and_gradient};
use crate::domain::{entropy_sum_values, AmbientKind, AmbientSet, CompensatedSum, DensityFunction, Params};
use crate::error::{Error, Result};
use crate::extremal::interval_tk;
use crate::rng;

/// Relative slack accepted when checking `T_k(f) ≥ threshold`.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Provenance {
    IntervalTilt,
    ConstantTilt,
    NuTilt,
    Solver,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub converged: bool,
    /// Sup-norm of the projected gradient of the Lagrangian at the returned point.
    pub kkt_residual: f64,
    pub multiplier: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Label of the start that produced the returned point.
    pub best_start: String,
    pub start_objectives: Vec<StartSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub label: String,
    pub seed_objective: Option<f64>,
    pub final_objective: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalSolution {
    pub f: DensityFunction,
    pub objective: f64,
    pub constraint_value: f64,
    pub threshold: f64,
    pub provenance: Provenance,
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<SolverDiagnostics>,
}

impl VariationalSolution {
    /// Scores an arbitrary density against the problem at `params`.
    pub fn evaluate(f: DensityFunction, params: &Params, provenance: Provenance) -> Result<Self> {
        let ambient = f.ambient();
        let objective = entropy_sum_values(f.values(), params.p)?;
        let constraint_value = count_tk_values(&ambient, f.values(), params.k);
        let threshold = params.threshold(&ambient);
        Ok(VariationalSolution {
            feasible: is_feasible(constraint_value, threshold),
            f,
            objective,
            constraint_value,
            threshold,
            provenance,
            diagnostics: None,
        })
    }

    /// `(T_k(f) − threshold) / threshold`.
    pub fn relative_slack(&self) -> f64 {
        (self.constraint_value - self.threshold) / self.threshold
    }
}

fn is_feasible(value: f64, threshold: f64) -> bool {
    value >= threshold * (1.0 - FEASIBILITY_TOL)
}

fn check_open_p(params: &Params) -> Result<()> {
    if params.p >= 1.0 {
        Err(Error::domain("the variational problem needs p < 1"))
    } else {
        Ok(())
    }
}

/// Smallest `m` with `(1 − p^k)·T_k([m]) ≥ δ p^k T_k(Ω)`. Since `f ≥ p`
/// everywhere, `T_k(f) ≥ p^k T_k(Ω) + (1 − p^k) T_k(S)`, so this size is
/// feasible by an exact inequality.
pub fn interval_tilt_size(ambient: &AmbientSet, params: &Params) -> usize {
    let k = params.k;
    let pk = params.p.powi(k as i32);
    let need = params.delta * pk * ambient.total_count(k) as f64;
    let mut m = 0usize;
    while (1.0 - pk) * (interval_tk(m as u64, k as u64) as f64) < need {
        m += 1;
        if m > ambient.n {
            break;
        }
    }
    m
}

/// `f = 1` on an interval `S`, `p` elsewhere.
pub fn interval_tilt(ambient: &AmbientSet, params: &Params) -> Result<VariationalSolution> {
    check_open_p(params)?;
    let m = interval_tilt_size(ambient, params);
    if m > ambient.n {
        return Err(Error::Infeasible(format!(
            "an interval of length {m} would be needed but N = {}",
            ambient.n
        )));
    }
    let mut values = vec![params.p; ambient.n];
    values[..m].iter_mut().for_each(|v| *v = 1.0);
    VariationalSolution::evaluate(DensityFunction::new(*ambient, values)?, params, Provenance::IntervalTilt)
}

/// `f ≡ p(1+δ)^{1/k}`, which meets the threshold with equality.
pub fn constant_tilt(ambient: &AmbientSet, params: &Params) -> Result<VariationalSolution> {
    check_open_p(params)?;
    let q = params.p * (1.0 + params.delta).powf(1.0 / params.k as f64);
    if q > 1.0 {
        return Err(Error::Infeasible(format!("constant tilt {q} exceeds 1")));
    }
    let f = DensityFunction::constant(*ambient, q)?;
    let mut sol = VariationalSolution::evaluate(f, params, Provenance::ConstantTilt)?;
    // T_k(q) = q^k T_k(Ω) is the threshold itself; recorded without the
    // rounding of the summed products
    sol.constraint_value = q.powi(params.k as i32) * ambient.total_count(params.k) as f64;
    sol.feasible = true;
    Ok(sol)
}

/// `f = p + g` with `g(a) = δ T_k(Ω) ν_a p / Σ ν²`.
pub fn nu_tilt(ambient: &AmbientSet, params: &Params) -> Result<VariationalSolution> {
    check_open_p(params)?;
    let nu = nu_counts(ambient, params.k);
    let sum_sq: f64 = nu.iter().map(|&v| (v as f64) * (v as f64)).collect::<CompensatedSum>().value();
    let scale = params.delta * ambient.total_count(params.k) as f64 * params.p / sum_sq;
    let values: Vec<f64> = nu.iter().map(|&v| params.p + scale * v as f64).collect();
    if let Some(bad) = values.iter().find(|&&v| v > 1.0) {
        return Err(Error::Infeasible(format!("ν-tilt reaches {bad} > 1")));
    }
    VariationalSolution::evaluate(DensityFunction::new(*ambient, values)?, params, Provenance::NuTilt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub seed: u64,
    /// Uniform random starts on top of the four structured ones.
    pub random_starts: usize,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Stop when the projected gradient is below this times the objective scale.
    pub grad_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: rng::DEFAULT_SEED,
            random_starts: 2,
            max_outer: 30,
            max_inner: 10_000,
            grad_tol: 1e-6,
        }
    }
}

struct Problem {
    ambient: AmbientSet,
    k: usize,
    p: f64,
    threshold: f64,
    /// Objective scale (best structured objective).
    scale: f64,
}

fn entropy(x: f64, p: f64) -> f64 {
    let d = x - p;
    let a = if x == 0.0 { 0.0 } else { x * (d / p).ln_1p() };
    let b = if x == 1.0 { 0.0 } else { (1.0 - x) * (-d / (1.0 - p)).ln_1p() };
    a + b
}

fn entropy_derivative(x: f64, p: f64) -> f64 {
    let x = x.min(1.0 - 1e-15);
    (x / p).ln() - ((1.0 - x) / (1.0 - p)).ln()
}

struct Eval {
    phi: f64,
    grad: Vec<f64>,
    /// `1 − T/threshold`
    violation: f64,
}

struct StartOutcome {
    values: Vec<f64>,
    objective: f64,
    feasible: bool,
    kkt: f64,
    multiplier: f64,
    outer: usize,
    inner: usize,
    converged: bool,
}

impl Problem {
    fn eval(&self, x: &[f64], lambda: f64, mu: f64) -> Eval {
        let (t, gt) = value_and_gradient(&self.ambient, x, self.k);
        let violation = 1.0 - t / self.threshold;
        let f: f64 = x.iter().map(|&v| entropy(v, self.p)).sum::<f64>() / self.scale;
        let shifted = (lambda + mu * violation).max(0.0);
        let phi = f + (shifted * shifted - lambda * lambda) / (2.0 * mu);
        let grad = x
            .iter()
            .zip(&gt)
            .map(|(&v, &g)| entropy_derivative(v, self.p) / self.scale - shifted * g / self.threshold)
            .collect();
        Eval { phi, grad, violation }
    }

    fn project(&self, v: f64) -> f64 {
        v.clamp(self.p, 1.0)
    }

    fn projected_gradient_norm(&self, x: &[f64], g: &[f64]) -> f64 {
        x.iter()
            .zip(g)
            .map(|(&xi, &gi)| (self.project(xi - gi) - xi).abs())
            .fold(0.0, f64::max)
    }

    /// Multiplier fitted to `∇F/scale = λ ∇T/threshold` by least squares.
    fn multiplier_estimate(&self, x: &[f64]) -> f64 {
        let (_, gt) = value_and_gradient(&self.ambient, x, self.k);
        let (mut num, mut den) = (0.0, 0.0);
        for (&v, &g) in x.iter().zip(&gt) {
            let a = entropy_derivative(v, self.p) / self.scale;
            let b = g / self.threshold;
            num += a * b;
            den += b * b;
        }
        if den > 0.0 {
            (num / den).max(0.0)
        } else {
            0.0
        }
    }

    /// Smallest `t ∈ [0,1]` with `T(x + t(1 − x)) ≥ threshold`.
    fn repair(&self, x: &[f64]) -> Vec<f64> {
        let at = |t: f64| -> Vec<f64> { x.iter().map(|&v| v + t * (1.0 - v)).collect() };
        let ok = |y: &[f64]| is_feasible(count_tk_values(&self.ambient, y, self.k), self.threshold);
        if ok(x) {
            return x.to_vec();
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if ok(&at(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        at(hi)
    }

    fn solve_from(&self, x0: Vec<f64>, cfg: &SolverConfig) -> StartOutcome {
        let mut x: Vec<f64> = x0.into_iter().map(|v| self.project(v)).collect();
        let mut lambda = self.multiplier_estimate(&x);
        let mut mu = 10.0f64;
        let mut inner_total = 0usize;
        let mut outer = 0usize;
        let mut converged = false;
        let mut prev_violation = f64::INFINITY;
        let mut last_pg = f64::INFINITY;
        let inner_cap = (cfg.max_inner / cfg.max_outer.max(1)).max(50);
        while outer < cfg.max_outer && inner_total < cfg.max_inner {
            outer += 1;
            let mut e = self.eval(&x, lambda, mu);
            // steps are taken in the metric of the entropy Hessian, D = x(1−x)
            let metric = |x: &[f64]| -> Vec<f64> { x.iter().map(|&v| (v * (1.0 - v)).max(1e-4)).collect() };
            let mut d = metric(&x);
            let mut alpha = 1.0 / e.grad.iter().zip(&d).fold(1e-12f64, |m, (g, di)| m.max((g * di).abs()));
            for _ in 0..inner_cap {
                inner_total += 1;
                let pg = self.projected_gradient_norm(&x, &e.grad);
                last_pg = pg;
                if pg <= cfg.grad_tol {
                    break;
                }
                let mut step = alpha;
                let mut accepted = None;
                for _ in 0..50 {
                    let trial: Vec<f64> = x
                        .iter()
                        .zip(&e.grad)
                        .zip(&d)
                        .map(|((&xi, &gi), &di)| self.project(xi - step * di * gi))
                        .collect();
                    let dir: f64 = trial.iter().zip(&x).zip(&e.grad).map(|((t, xi), g)| (t - xi) * g).sum();
                    let et = self.eval(&trial, lambda, mu);
                    if et.phi <= e.phi + 1e-4 * dir {
                        accepted = Some((trial, et));
                        break;
                    }
                    step *= 0.5;
                }
                let Some((trial, et)) = accepted else { break };
                // Barzilai–Borwein step in the same metric
                let (mut ss, mut sy) = (0.0, 0.0);
                for i in 0..x.len() {
                    let s = trial[i] - x[i];
                    ss += s * s / d[i];
                    sy += s * (et.grad[i] - e.grad[i]);
                }
                alpha = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { step * 2.0 };
                x = trial;
                e = et;
                d = metric(&x);
            }
            let v = e.violation;
            lambda = (lambda + mu * v).max(0.0);
            if v <= FEASIBILITY_TOL && last_pg <= cfg.grad_tol {
                converged = true;
                break;
            }
            if v > 0.25 * prev_violation && v > FEASIBILITY_TOL {
                mu = (mu * 10.0).min(1e12);
            }
            prev_violation = v;
        }
        let kkt = {
            let e = self.eval(&x, lambda, mu);
            self.projected_gradient_norm(&x, &e.grad)
        };
        let repaired = self.repair(&x);
        let constraint = count_tk_values(&self.ambient, &repaired, self.k);
        let objective = repaired.iter().map(|&v| entropy(v, self.p)).collect::<CompensatedSum>().value();
        StartOutcome {
            feasible: is_feasible(constraint, self.threshold),
            values: repaired,
            objective,
            kkt,
            multiplier: lambda,
            outer,
            inner: inner_total,
            converged,
        }
    }
}

/// Multi-start augmented-Lagrangian minimiser. The box is `[p, 1]`: lowering
/// any coordinate below `p` costs entropy and loses AP weight, so nothing is
/// lost by the restriction.
pub fn solve_variational(ambient: &AmbientSet, params: &Params, cfg: &SolverConfig) -> Result<VariationalSolution> {
    check_open_p(params)?;
    let k = params.k;
    let threshold = params.threshold(ambient);
    let total = ambient.total_count(k) as f64;
    if threshold > total * (1.0 + FEASIBILITY_TOL) {
        return Err(Error::Infeasible(format!(
            "threshold {threshold} exceeds T_k(Ω) = {total}, unreachable even by f ≡ 1"
        )));
    }
    let base = DensityFunction::constant(*ambient, params.p)?;
    if params.delta == 0.0 {
        let mut sol = VariationalSolution::evaluate(base, params, Provenance::Solver)?;
        sol.feasible = true;
        return Ok(sol);
    }

    let mut seeds: Vec<(String, Option<VariationalSolution>, Vec<f64>)> = Vec::new();
    for (label, builder) in [
        ("interval_tilt", interval_tilt as fn(&AmbientSet, &Params) -> Result<VariationalSolution>),
        ("constant_tilt", constant_tilt),
        ("nu_tilt", nu_tilt),
    ] {
        if let Ok(sol) = builder(ambient, params) {
            let v = sol.f.values().to_vec();
            seeds.push((label.to_string(), Some(sol), v));
        }
    }
    seeds.push(("constant_p".into(), None, vec![params.p; ambient.n]));
    for r in 0..cfg.random_starts {
        let mut g = rng::stream(cfg.seed, r as u64);
        let v = (0..ambient.n).map(|_| params.p + (1.0 - params.p) * g.random::<f64>()).collect();
        seeds.push((format!("random_{r}"), None, v));
    }

    let scale = seeds
        .iter()
        .filter_map(|(_, s, _)| s.as_ref().map(|s| s.objective))
        .fold(f64::INFINITY, f64::min);
    let scale = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
    let problem = Problem {
        ambient: *ambient,
        k,
        p: params.p,
        threshold,
        scale,
    };

    let outcomes: Vec<StartOutcome> = seeds
        .par_iter()
        .map(|(_, _, x0)| problem.solve_from(x0.clone(), cfg))
        .collect();

    // candidates: every solver outcome and every feasible seed as given
    let mut best: Option<(f64, usize, bool)> = None; // (objective, index, from_seed)
    for (i, (o, (_, seed, _))) in outcomes.iter().zip(&seeds).enumerate() {
        let mut consider = |obj: f64, from_seed: bool| {
            if best.is_none_or(|(b, _, _)| obj < b) {
                best = Some((obj, i, from_seed));
            }
        };
        if let Some(s) = seed {
            if s.feasible {
                consider(s.objective, true);
            }
        }
        if o.feasible {
            consider(o.objective, false);
        }
    }
    let (_, idx, from_seed) = best.ok_or_else(|| Error::Infeasible("no start reached a feasible point".into()))?;
    let chosen = &outcomes[idx];
    let values = if from_seed {
        seeds[idx].2.clone()
    } else {
        chosen.values.clone()
    };
    let summaries = seeds
        .iter()
        .zip(&outcomes)
        .map(|((label, seed, _), o)| StartSummary {
            label: label.clone(),
            seed_objective: seed.as_ref().map(|s| s.objective),
            final_objective: o.objective,
            feasible: o.feasible,
        })
        .collect();
    let mut sol = VariationalSolution::evaluate(DensityFunction::new(*ambient, values)?, params, Provenance::Solver)?;
    sol.diagnostics = Some(SolverDiagnostics {
        converged: chosen.converged,
        kkt_residual: chosen.kkt,
        multiplier: chosen.multiplier,
        outer_iterations: chosen.outer,
        inner_iterations: chosen.inner,
        best_start: if from_seed {
            format!("{} (unchanged)", seeds[idx].0)
        } else {
            seeds[idx].0.clone()
        },
        start_objectives: summaries,
    });
    Ok(sol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Macroscopic,
    Microscopic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub value: f64,
    /// Regime implied by the indicator (cutoff 1).
    pub regime: Regime,
    pub formula: String,
    /// Leading-order closed form for this ambient.
    pub branch_value: f64,
    pub branch_formula: String,
    pub params: Params,
    pub ambient: AmbientSet,
    pub regime_indicator: f64,
    pub warnings: Vec<String>,
}

/// `δ⁻³ p^{k−2} (log 1/p)²`.
pub fn regime_indicator(params: &Params) -> f64 {
    let l = (1.0 / params.p).ln();
    params.p.powi(params.k as i32 - 2) * l * l / params.delta.powi(3)
}

fn regime_of(indicator: f64) -> Regime {
    if indicator < 1.0 {
        Regime::Macroscopic
    } else {
        Regime::Microscopic
    }
}

/// `√((k−1) δ p^k T_k(Ω)) · log(1/p)`.
pub fn rate_macroscopic(ambient: &AmbientSet, params: &Params) -> RateEstimate {
    let (k, p, d) = (params.k as f64, params.p, params.delta);
    let n = ambient.n as f64;
    let log = (1.0 / p).ln();
    let t = ambient.total_count(params.k) as f64;
    let value = ((k - 1.0) * d * p.powf(k) * t).sqrt() * log;
    let (branch_value, branch_formula) = match ambient.kind {
        AmbientKind::Interval => (d.sqrt() * p.powf(k / 2.0) * n * log, "sqrt(delta) p^(k/2) N log(1/p)"),
        AmbientKind::Cyclic => (
            ((k - 1.0) * d).sqrt() * p.powf(k / 2.0) * n * log,
            "sqrt((k-1) delta) p^(k/2) N log(1/p)",
        ),
    };
    let indicator = regime_indicator(params);
    let mut warnings = Vec::new();
    if indicator >= 1.0 {
        warnings.push(format!("regime indicator {indicator:.3e} ≥ 1: macroscopic formula outside its regime"));
    }
    if ambient.is_cyclic() && !ambient.prime {
        warnings.push("composite N: the cyclic formula assumes N prime".into());
    }
    RateEstimate {
        value,
        regime: regime_of(indicator),
        formula: "sqrt((k-1) delta p^k T_k(Omega)) log(1/p)".into(),
        branch_value,
        branch_formula: branch_formula.into(),
        params: *params,
        ambient: *ambient,
        regime_indicator: indicator,
        warnings,
    }
}

/// `δ² T_k(Ω)² p / (2 Σ_a ν_a²)`.
pub fn rate_microscopic(ambient: &AmbientSet, params: &Params) -> RateEstimate {
    let (k, p, d) = (params.k, params.p, params.delta);
    let n = ambient.n as f64;
    let t = ambient.total_count(k) as f64;
    let sum_sq: f64 = nu_counts(ambient, k)
        .iter()
        .map(|&v| (v as f64) * (v as f64))
        .collect::<CompensatedSum>()
        .value();
    let value = d * d * t * t * p / (2.0 * sum_sq);
    let (branch_value, branch_formula) = match ambient.kind {
        AmbientKind::Interval => (d * d * n * p / (2.0 * gamma_k_f64(k)), "delta^2 N p / (2 gamma_k)"),
        AmbientKind::Cyclic => (d * d * n * p / (2.0 * (k * k) as f64), "delta^2 N p / (2 k^2)"),
    };
    let indicator = regime_indicator(params);
    let mut warnings = Vec::new();
    if indicator < 1.0 {
        warnings.push(format!("regime indicator {indicator:.3e} < 1: microscopic formula outside its regime"));
    }
    RateEstimate {
        value,
        regime: regime_of(indicator),
        formula: "delta^2 T_k(Omega)^2 p / (2 sum_a nu_a^2)".into(),
        branch_value,
        branch_formula: branch_formula.into(),
        params: *params,
        ambient: *ambient,
        regime_indicator: indicator,
        warnings,
    }
}

/// Picks the formula matching the regime indicator.
pub fn rate_auto(ambient: &AmbientSet, params: &Params) -> RateEstimate {
    match regime_of(regime_indicator(params)) {
        Regime::Macroscopic => rate_macroscopic(ambient, params),
        Regime::Microscopic => rate_microscopic(ambient, params),
    }
}

/// `γ_k = (4/3)(k + Σ_{0≤i<j<k} ((k−1)² − i² − (k−1−j)²) / ((k−1−i) j))`, exactly.
pub fn gamma_k(k: usize) -> Result<BigRational> {
    if k < 3 {
        return Err(Error::domain(format!("k must be at least 3, got {k}")));
    }
    let km1 = (k - 1) as i64;
    let mut sum = BigRational::from_integer(BigInt::from(k));
    for i in 0..k as i64 {
        for j in i + 1..k as i64 {
            let num = km1 * km1 - i * i - (km1 - j) * (km1 - j);
            let den = (km1 - i) * j;
            sum += BigRational::new(BigInt::from(num), BigInt::from(den));
        }
    }
    Ok(sum * BigRational::new(BigInt::from(4), BigInt::from(3)))
}

pub fn gamma_k_f64(k: usize) -> f64 {
    gamma_k(k).map(|g| rational_to_f64(&g)).unwrap_or(f64::NAN)
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator and denominator too large for f64 separately
        let shift = r.denom().bits().saturating_sub(900);
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// `"p/q"`, or `"p"` for integers.
pub fn rational_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// `(k−1)² N⁻³ Σ_s ν_s²` on `[N]`; tends to `γ_k`.
pub fn gamma_k_via_riemann(k: usize, n: usize) -> f64 {
    let nu = nu_counts(&AmbientSet::interval(n), k);
    let s: f64 = nu.iter().map(|&v| (v as f64) * (v as f64)).collect::<CompensatedSum>().value();
    let km1 = (k - 1) as f64;
    km1 * km1 * s / (n as f64).powi(3)
}

/// `β_ij` of the Riemann-sum limit (`0 ≤ i ≤ j ≤ k−1`).
pub fn beta(k: usize, i: usize, j: usize) -> BigRational {
    let km1 = (k - 1) as i64;
    let (i, j) = (i.min(j) as i64, i.max(j) as i64);
    if i == j {
        return BigRational::new(BigInt::one(), BigInt::from(3 * km1 * km1));
    }
    BigRational::new(
        BigInt::from(km1 * km1 - i * i - (km1 - j) * (km1 - j)),
        BigInt::from(6 * km1 * km1 * (km1 - i) * j),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaLimitReport {
    /// `(4/3)∬_{0≤x≤y≤1} (1−x²−(1−y)²)/((1−x)y) dx dy`, numerically.
    pub value: f64,
    pub candidate_30: f64,
    pub candidate_40: f64,
    /// Which printed candidate the integral matches within `1e-3`.
    pub matches: Option<String>,
    /// `(k, γ_k/k²)` for a ladder of `k` up to 200.
    pub ratios: Vec<(usize, f64)>,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..m {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = m as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[m - 1 - i] = w[i];
    }
    (x, w)
}

/// Panels on `[0,1]` refined geometrically towards 1.
fn graded_panels(levels: usize) -> Vec<(f64, f64)> {
    let mut cuts = vec![0.0];
    let mut h = 0.5;
    for _ in 0..levels {
        cuts.push(1.0 - h);
        h *= 0.5;
    }
    cuts.push(1.0);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

pub fn gamma_limit_ratio() -> GammaLimitReport {
    // x = y t maps the triangle to the unit square; the integrand becomes
    // (1 − y²t² − (1−y)²)/(1 − yt), bounded with a kink at (1, 1)
    let (nodes, weights) = gauss_legendre(20);
    let panels = graded_panels(30);
    let mut acc = CompensatedSum::default();
    for &(y0, y1) in &panels {
        for (yn, yw) in nodes.iter().zip(&weights) {
            let y = 0.5 * (y0 + y1) + 0.5 * (y1 - y0) * yn;
            let wy = 0.5 * (y1 - y0) * yw;
            for &(t0, t1) in &panels {
                for (tn, tw) in nodes.iter().zip(&weights) {
                    let t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * tn;
                    let wt = 0.5 * (t1 - t0) * tw;
                    let u = 1.0 - y;
                    acc.add(wy * wt * (1.0 - y * y * t * t - u * u) / (1.0 - y * t));
                }
            }
        }
    }
    let value = 4.0 / 3.0 * acc.value();
    let pi2 = std::f64::consts::PI.powi(2);
    let candidate_30 = (30.0 - 2.0 * pi2) / 9.0;
    let candidate_40 = (40.0 - 2.0 * pi2) / 9.0;
    let matches = if (value - candidate_30).abs() < 1e-3 {
        Some("(30-2pi^2)/9".to_string())
    } else if (value - candidate_40).abs() < 1e-3 {
        Some("(40-2pi^2)/9".to_string())
    } else {
        None
    };
    let ratios = [3usize, 4, 5, 6, 8, 10, 20, 50, 100, 200]
        .iter()
        .map(|&k| (k, gamma_k_f64(k) / (k * k) as f64))
        .collect();
    GammaLimitReport {
        value,
        candidate_30,
        candidate_40,
        matches,
        ratios,
    }
}

/// `(1+δ)p^k = q^k` solved for `δ`.
pub fn delta_for_constant(p: f64, q: f64, k: usize) -> f64 {
    (q / p).powi(k as i32) - 1.0
}
