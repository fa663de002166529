//! Shared domain types: the ambient set Ω, density functions on it, the
//! parameter bundle `(k, p, δ)` and the Bernoulli relative entropy `I_p`.
//!
//! Elements of Ω are addressed by a zero-based index `0..n`. For the integer
//! interval `[N] = {1, …, N}` index `i` stands for the integer `i + 1`; AP
//! counts are translation invariant so all arithmetic happens on indices.
//! For `Z/NZ` the index is the residue itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmbientKind {
    /// `[N] ⊂ Z`, evaluation outside the interval is zero.
    #[serde(rename = "interval")]
    Interval,
    /// `Z/NZ`, indices wrap around.
    #[serde(rename = "cyclic")]
    Cyclic,
}

impl std::fmt::Display for AmbientKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AmbientKind::Interval => f.write_str("interval"),
            AmbientKind::Cyclic => f.write_str("cyclic"),
        }
    }
}

impl std::str::FromStr for AmbientKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interval" => Ok(AmbientKind::Interval),
            "cyclic" => Ok(AmbientKind::Cyclic),
            other => Err(Error::domain(format!("unknown ambient kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AmbientSet {
    pub kind: AmbientKind,
    pub n: usize,
    pub prime: bool,
}

impl AmbientSet {
    pub fn new(kind: AmbientKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("ambient size must be at least 1"));
        }
        Ok(AmbientSet {
            kind,
            n,
            prime: is_prime(n as u64),
        })
    }

    /// `[n]`. Panics on `n == 0`.
    pub fn interval(n: usize) -> Self {
        Self::new(AmbientKind::Interval, n).expect("interval size must be positive")
    }

    /// `Z/nZ`. Panics on `n == 0`.
    pub fn cyclic(n: usize) -> Self {
        Self::new(AmbientKind::Cyclic, n).expect("cyclic group order must be positive")
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_cyclic(&self) -> bool {
        self.kind == AmbientKind::Cyclic
    }

    /// Maps an integer element to its index, `None` for an interval element
    /// outside `[1, N]`.
    pub fn index_of(&self, element: i64) -> Option<usize> {
        match self.kind {
            AmbientKind::Interval => {
                if element >= 1 && element <= self.n as i64 {
                    Some((element - 1) as usize)
                } else {
                    None
                }
            }
            AmbientKind::Cyclic => Some(element.rem_euclid(self.n as i64) as usize),
        }
    }

    pub fn element_of(&self, index: usize) -> i64 {
        match self.kind {
            AmbientKind::Interval => index as i64 + 1,
            AmbientKind::Cyclic => index as i64,
        }
    }

    /// `T_k(Ω)` in closed form: `T_k([N])` for the interval, `N²` for `Z/NZ`.
    pub fn total_count(&self, k: usize) -> u64 {
        match self.kind {
            AmbientKind::Interval => crate::extremal::interval_tk(self.n as u64, k as u64),
            AmbientKind::Cyclic => (self.n as u64) * (self.n as u64),
        }
    }
}

/// Deterministic trial division.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) || n.is_multiple_of(3) {
        return false;
    }
    let mut d = 5u64;
    while d * d <= n {
        if n.is_multiple_of(d) || n.is_multiple_of(d + 2) {
            return false;
        }
        d += 6;
    }
    true
}

/// A map `Ω → [0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityFunction {
    ambient: AmbientSet,
    values: Vec<f64>,
}

impl DensityFunction {
    pub fn new(ambient: AmbientSet, values: Vec<f64>) -> Result<Self> {
        if values.len() != ambient.n {
            return Err(Error::domain(format!(
                "density has {} values, ambient has {} elements",
                values.len(),
                ambient.n
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::domain(format!("value {v} at index {i} lies outside [0,1]")));
        }
        Ok(DensityFunction { ambient, values })
    }

    pub fn constant(ambient: AmbientSet, c: f64) -> Result<Self> {
        Self::new(ambient, vec![c; ambient.n])
    }

    /// Indicator of a set of indices.
    pub fn indicator(ambient: AmbientSet, members: &[usize]) -> Result<Self> {
        let mut values = vec![0.0; ambient.n];
        for &i in members {
            if i >= ambient.n {
                return Err(Error::domain(format!("index {i} outside ambient of size {}", ambient.n)));
            }
            values[i] = 1.0;
        }
        Ok(DensityFunction { ambient, values })
    }

    pub fn ambient(&self) -> AmbientSet {
        self.ambient
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Evaluates at an integer element; zero outside `[N]` for the interval.
    pub fn eval(&self, element: i64) -> f64 {
        self.ambient.index_of(element).map_or(0.0, |i| self.values[i])
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Indices where the function equals one.
    pub fn support_of_ones(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 1.0)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct DensityWire {
    kind: AmbientKind,
    n: usize,
    values: Vec<f64>,
}

impl Serialize for DensityFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DensityWire {
            kind: self.ambient.kind,
            n: self.ambient.n,
            values: self.values.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = DensityWire::deserialize(d)?;
        let ambient = AmbientSet::new(wire.kind, wire.n).map_err(serde::de::Error::custom)?;
        DensityFunction::new(ambient, wire.values).map_err(serde::de::Error::custom)
    }
}

/// The parameter bundle `(k, p, δ)`.
///
/// `p = 1` is accepted so the degenerate tail case can be expressed; every
/// entropy-based operation rejects it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub k: usize,
    pub p: f64,
    pub delta: f64,
}

impl Params {
    pub fn new(k: usize, p: f64, delta: f64) -> Result<Self> {
        if k < 3 {
            return Err(Error::domain(format!("k must be at least 3, got {k}")));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::domain(format!("p must lie in (0,1], got {p}")));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::domain(format!("delta must be a finite nonnegative real, got {delta}")));
        }
        Ok(Params { k, p, delta })
    }

    /// `(1+δ) p^k T_k(Ω)`.
    pub fn threshold(&self, ambient: &AmbientSet) -> f64 {
        (1.0 + self.delta) * self.p.powi(self.k as i32) * ambient.total_count(self.k) as f64
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("p must lie in (0,1), got {p}")))
    }
}

/// `x log(1 + d/y)` with `0·log 0 = 0`; `d = x − y` is passed in so that
/// both halves of `I_p` share one rounding of `x − p`.
fn xlog_shift(x: f64, d: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (d / y).ln_1p()
    }
}

/// `I_p(x) = x log(x/p) + (1−x) log((1−x)/(1−p))` with `0·log 0 = 0`.
pub fn relative_entropy(x: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("x must lie in [0,1], got {x}")));
    }
    let d = x - p;
    let v = xlog_shift(x, d, p) + xlog_shift(1.0 - x, -d, 1.0 - p);
    Ok(v.max(0.0))
}

/// `I_p'(x) = log(x(1−p) / (p(1−x)))`; infinite at the endpoints.
pub fn relative_entropy_derivative(x: f64, p: f64) -> f64 {
    (x / p).ln() - ((1.0 - x) / (1.0 - p)).ln()
}

/// `Σ_a I_p(f(a))`, compensated.
pub fn entropy_sum(f: &DensityFunction, p: f64) -> Result<f64> {
    entropy_sum_values(f.values(), p)
}

pub(crate) fn entropy_sum_values(values: &[f64], p: f64) -> Result<f64> {
    let mut acc = CompensatedSum::default();
    for &x in values {
        acc.add(relative_entropy(x, p)?);
    }
    Ok(acc.value())
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}
