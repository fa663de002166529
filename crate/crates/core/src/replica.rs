//! Replica symmetry on `Z/NZ`: when `(q^{k/2}, I_p(q))` lies on the convex
//! minorant of `J(x) = I_p(x^{2/k})`, the constant `q` is the unique optimiser
//! and the rate is `N·I_p(q)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ap_count::count_tk_density;
use crate::domain::{relative_entropy, relative_entropy_derivative, DensityFunction};
use crate::error::{Error, Result};
use crate::variational::delta_for_constant;

pub const MINORANT_TOL: f64 = 1e-9;
pub const DEFAULT_GRID: usize = 2048;
const GRID_CAP: usize = 1 << 20;

/// `J(x) = I_p(x^{2/k})`.
pub fn j_value(p: f64, k: usize, x: f64) -> f64 {
    relative_entropy(x.powf(2.0 / k as f64).min(1.0), p).expect("p checked by callers")
}

/// `J'(x)` on `(0, 1)`.
pub fn j_derivative(p: f64, k: usize, x: f64) -> f64 {
    let e = 2.0 / k as f64;
    relative_entropy_derivative(x.powf(e), p) * e * x.powf(e - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaVerdict {
    pub p: f64,
    pub q: f64,
    pub k: usize,
    /// `q^{k/2}`
    pub x0: f64,
    pub j_at_x0: f64,
    pub minorant_at_x0: f64,
    pub on_minorant: bool,
    pub minorant_gap: f64,
    /// Least `J(x) − ℓ(x)` over the grid for the tangent `ℓ` at `x0`.
    pub tangent_slack: f64,
    pub hull_convex: bool,
    pub hull_below: bool,
    pub grid_points: usize,
    /// `I_p(q)`, the rate per element, when the condition holds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_per_element: Option<f64>,
}

/// Chebyshev–Lobatto points on `[0, 1]`, plus `x0` and a geometric cluster
/// around it.
fn grid(m: usize, x0: f64) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..=m)
        .map(|i| 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / m as f64).cos()))
        .collect();
    xs.push(x0);
    let mut h = 1.0 / m as f64;
    while h > 1e-9 {
        for x in [x0 - h, x0 + h] {
            if (0.0..=1.0).contains(&x) {
                xs.push(x);
            }
        }
        h *= 0.5;
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Lower convex hull of points sorted by abscissa.
pub fn lower_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &pt in points {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= 0.0 {
            hull.pop();
        }
        hull.push(pt);
    }
    hull
}

/// Piecewise-linear evaluation of a hull at `x`.
pub fn hull_eval(hull: &[(f64, f64)], x: f64) -> f64 {
    let i = hull.partition_point(|h| h.0 < x);
    if i == 0 {
        return hull[0].1;
    }
    if i == hull.len() {
        return hull[hull.len() - 1].1;
    }
    let (a, b) = (hull[i - 1], hull[i]);
    if b.0 == x {
        return b.1;
    }
    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
}

struct HullEval {
    gap: f64,
    minorant: f64,
    convex: bool,
    below: bool,
    tangent_slack: f64,
    points: usize,
}

fn evaluate(p: f64, k: usize, x0: f64, m: usize) -> HullEval {
    let xs = grid(m, x0);
    let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, j_value(p, k, x))).collect();
    let hull = lower_hull(&pts);
    let jx0 = j_value(p, k, x0);
    let minorant = hull_eval(&hull, x0);
    let values: Vec<f64> = xs.iter().map(|&x| hull_eval(&hull, x)).collect();
    let below = values.iter().zip(&pts).all(|(h, pt)| *h <= pt.1 + 1e-12);
    // slopes of consecutive chords must not decrease
    let convex = values.windows(3).zip(xs.windows(3)).all(|(v, x)| {
        let s1 = (v[1] - v[0]) / (x[1] - x[0]);
        let s2 = (v[2] - v[1]) / (x[2] - x[1]);
        (s2 - s1) * (x[2] - x[0]) >= -1e-12
    });
    let slope = if x0 > 0.0 && x0 < 1.0 { j_derivative(p, k, x0) } else { 0.0 };
    let tangent_slack = pts
        .iter()
        .map(|&(x, j)| j - (jx0 + slope * (x - x0)))
        .fold(f64::INFINITY, f64::min);
    HullEval {
        gap: jx0 - minorant,
        minorant,
        convex,
        below,
        tangent_slack,
        points: xs.len(),
    }
}

/// Whether `(q^{k/2}, I_p(q))` lies on the convex minorant of `J`, doubling
/// the grid until the gap settles.
pub fn convex_minorant_check(p: f64, q: f64, k: usize, grid_size: usize) -> Result<ReplicaVerdict> {
    if !(p > 0.0 && p < 1.0 && q < 1.0) {
        return Err(Error::domain(format!("need 0 < p ≤ q < 1, got p = {p}, q = {q}")));
    }
    if p > q {
        return Err(Error::domain(format!("p = {p} exceeds q = {q}")));
    }
    if k < 3 {
        return Err(Error::domain(format!("k must be at least 3, got {k}")));
    }
    let x0 = q.powf(k as f64 / 2.0);
    let mut m = grid_size.max(16);
    let mut prev = evaluate(p, k, x0, m);
    loop {
        if m * 2 > GRID_CAP {
            return Err(Error::Budget(format!("convex minorant did not settle by {GRID_CAP} grid points")));
        }
        m *= 2;
        let next = evaluate(p, k, x0, m);
        let settled = (next.gap - prev.gap).abs() <= 1e-11;
        prev = next;
        if settled {
            break;
        }
    }
    let on = prev.gap <= MINORANT_TOL;
    Ok(ReplicaVerdict {
        p,
        q,
        k,
        x0,
        j_at_x0: j_value(p, k, x0),
        minorant_at_x0: prev.minorant,
        on_minorant: on,
        minorant_gap: prev.gap,
        tangent_slack: prev.tangent_slack,
        hull_convex: prev.convex,
        hull_below: prev.below,
        grid_points: prev.points,
        phi_per_element: on.then(|| relative_entropy(q, p).expect("p in (0,1)")),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PhiOutcome {
    Value(f64),
    NotCertified(ReplicaVerdict),
}

/// `φ = N·I_p(q)` when the minorant condition certifies it.
pub fn phi_replica(p: f64, q: f64, k: usize, n: usize) -> Result<PhiOutcome> {
    let v = convex_minorant_check(p, q, k, DEFAULT_GRID)?;
    Ok(if v.on_minorant {
        PhiOutcome::Value(n as f64 * relative_entropy(q, p)?)
    } else {
        PhiOutcome::NotCertified(v)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantCertificate {
    pub delta: f64,
    pub objective: f64,
    /// `T_k(q·1)` counted on the group.
    pub constraint_value: f64,
    /// `(1+δ) p^k N²`
    pub threshold: f64,
    pub relative_gap: f64,
}

/// The constant `q` on `Z/NZ` at `δ = (q/p)^k − 1`.
pub fn constant_certificate(p: f64, q: f64, k: usize, n: usize) -> Result<ConstantCertificate> {
    let amb = crate::domain::AmbientSet::new(crate::domain::AmbientKind::Cyclic, n)?;
    let f = DensityFunction::constant(amb, q)?;
    let delta = delta_for_constant(p, q, k);
    let constraint_value = count_tk_density(&f, k);
    let threshold = (1.0 + delta) * p.powi(k as i32) * (n * n) as f64;
    Ok(ConstantCertificate {
        delta,
        objective: crate::domain::entropy_sum(&f, p)?,
        constraint_value,
        threshold,
        relative_gap: (constraint_value - threshold) / threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub q: f64,
    pub on_minorant: bool,
    pub gap: f64,
    pub hull_convex: bool,
    pub hull_below: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub last_passing: f64,
    pub first_failing: f64,
}

/// Verdicts on `count` evenly spaced `q ∈ [p, 1)`.
pub fn scan(p: f64, k: usize, count: usize) -> Result<Vec<ScanRow>> {
    let qs: Vec<f64> = (0..count).map(|i| p + (1.0 - p) * i as f64 / count as f64).collect();
    qs.par_iter()
        .map(|&q| {
            let v = convex_minorant_check(p, q, k, DEFAULT_GRID)?;
            Ok(ScanRow {
                q,
                on_minorant: v.on_minorant,
                gap: v.minorant_gap,
                hull_convex: v.hull_convex,
                hull_below: v.hull_below,
            })
        })
        .collect()
}

/// Bisects every pass/fail change in a scan down to `tol`.
pub fn boundaries(p: f64, k: usize, rows: &[ScanRow], tol: f64) -> Result<Vec<Boundary>> {
    let mut out = Vec::new();
    for w in rows.windows(2) {
        if w[0].on_minorant == w[1].on_minorant {
            continue;
        }
        let (mut a, mut b) = (w[0].q, w[1].q);
        let a_passes = w[0].on_minorant;
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if convex_minorant_check(p, mid, k, DEFAULT_GRID)?.on_minorant == a_passes {
                a = mid;
            } else {
                b = mid;
            }
        }
        out.push(if a_passes {
            Boundary {
                last_passing: a,
                first_failing: b,
            }
        } else {
            Boundary {
                last_passing: b,
                first_failing: a,
            }
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderResult {
    pub holds: bool,
    /// `T_k(f)`
    pub lhs: f64,
    /// `(Σ_a f(a)^{k/2})²`
    pub rhs: f64,
    /// `(rhs − lhs) / rhs`
    pub slack: f64,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `T_k(f) ≤ (Σ f^{k/2})²` for nonnegative `f` on `Z/NZ`. Valid for prime
/// `N`, for even `k` on any `N`, and for odd `k` with `gcd(k−1, N) = 1`.
pub fn holder_check(f: &DensityFunction, k: usize) -> Result<HolderResult> {
    let amb = f.ambient();
    if !amb.is_cyclic() {
        return Err(Error::domain("the inequality is stated on Z/NZ"));
    }
    if !(amb.prime || k.is_multiple_of(2) || gcd(k - 1, amb.n) == 1) {
        return Err(Error::domain(format!(
            "N = {} is not prime and gcd(k−1, N) ≠ 1 for odd k = {k}",
            amb.n
        )));
    }
    if f.values().iter().any(|&v| v < 0.0) {
        return Err(Error::domain("f must be nonnegative"));
    }
    let lhs = count_tk_density(f, k);
    let rhs = f.values().iter().map(|v| v.powf(k as f64 / 2.0)).sum::<f64>().powi(2);
    let slack = if rhs > 0.0 { (rhs - lhs) / rhs } else { 0.0 };
    Ok(HolderResult {
        holds: lhs <= rhs * (1.0 + 1e-12) + 1e-300,
        lhs,
        rhs,
        slack,
    })
}
