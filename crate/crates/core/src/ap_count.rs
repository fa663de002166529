//! Exact k-AP functionals on `[N]` and `Z/NZ`.
//!
//! `T_k` counts ordered pairs `(a, b)` with every term `a + jb` inside Ω, so
//! nontrivial progressions are counted twice and trivial ones (`b = 0`) once.
//! Everything here is exact enumeration except [`fft_t3`], which goes through
//! the discrete Fourier transform.

use num_traits::Zero;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::domain::{AmbientKind, AmbientSet, CompensatedSum, DensityFunction};
use crate::error::{Error, Result};

/// Calls `visit` with the `k` term indices of every admissible pair `(a, b)`.
pub fn for_each_ap(ambient: &AmbientSet, k: usize, mut visit: impl FnMut(&[usize])) {
    let n = ambient.n;
    let mut terms = vec![0usize; k];
    match ambient.kind {
        AmbientKind::Interval => {
            if k <= 1 {
                for a in 0..n {
                    terms.iter_mut().for_each(|t| *t = a);
                    visit(&terms);
                }
                return;
            }
            let span = (k - 1) as i64;
            let bmax = (n as i64 - 1) / span;
            for b in -bmax..=bmax {
                // a and a + (k-1)b both in [0, n)
                let lo = 0i64.max(-span * b);
                let hi = (n as i64).min(n as i64 - span * b);
                for a in lo..hi {
                    for (j, t) in terms.iter_mut().enumerate() {
                        *t = (a + j as i64 * b) as usize;
                    }
                    visit(&terms);
                }
            }
        }
        AmbientKind::Cyclic => {
            for b in 0..n {
                for a in 0..n {
                    let mut t = a;
                    for slot in terms.iter_mut() {
                        *slot = t;
                        t += b;
                        if t >= n {
                            t -= n;
                        }
                    }
                    visit(&terms);
                }
            }
        }
    }
}

/// Number of admissible pairs `(a, b)`, i.e. `T_k(Ω)`, by enumeration.
pub fn count_pairs(ambient: &AmbientSet, k: usize) -> u64 {
    let mut c = 0u64;
    for_each_ap(ambient, k, |_| c += 1);
    c
}

fn membership(ambient: &AmbientSet, members: &[usize]) -> Result<Vec<bool>> {
    let mut inside = vec![false; ambient.n];
    for &i in members {
        if i >= ambient.n {
            return Err(Error::domain(format!(
                "index {i} outside ambient of size {}",
                ambient.n
            )));
        }
        inside[i] = true;
    }
    Ok(inside)
}

fn pack_bits(inside: &[bool]) -> Vec<u64> {
    let mut words = vec![0u64; inside.len().div_ceil(64).max(1)];
    for (i, &b) in inside.iter().enumerate() {
        if b {
            words[i / 64] |= 1u64 << (i % 64);
        }
    }
    words
}

/// `out` bit `i` = `src` bit `i + s`, `out` has `out_words` words.
fn shifted(src: &[u64], s: usize, out: &mut [u64]) {
    let ws = s / 64;
    let bs = s % 64;
    for (i, o) in out.iter_mut().enumerate() {
        let lo = src.get(i + ws).copied().unwrap_or(0);
        let hi = src.get(i + ws + 1).copied().unwrap_or(0);
        *o = if bs == 0 { lo } else { (lo >> bs) | (hi << (64 - bs)) };
    }
}

fn popcount(words: &[u64]) -> u64 {
    words.iter().map(|w| w.count_ones() as u64).sum()
}

/// Bit-parallel `T_k` of an indicator: shifted copies are ANDed per step `b`.
fn count_bits(ambient: &AmbientSet, inside: &[bool], k: usize) -> u64 {
    let n = ambient.n;
    let words = pack_bits(inside);
    let nw = words.len();
    let mut acc = vec![0u64; nw];
    let mut tmp = vec![0u64; nw];
    match ambient.kind {
        AmbientKind::Interval => {
            let mut total = popcount(&words);
            let bmax = (n - 1) / (k - 1);
            for b in 1..=bmax {
                acc.copy_from_slice(&words);
                for j in 1..k {
                    shifted(&words, j * b, &mut tmp);
                    acc.iter_mut().zip(&tmp).for_each(|(a, t)| *a &= t);
                }
                total += 2 * popcount(&acc);
            }
            total
        }
        AmbientKind::Cyclic => {
            // doubled string so that a rotation is a plain shift
            let doubled: Vec<bool> = inside.iter().chain(inside.iter()).copied().collect();
            let dwords = pack_bits(&doubled);
            let last_mask = if n.is_multiple_of(64) { !0u64 } else { (1u64 << (n % 64)) - 1 };
            let mut total = 0u64;
            for b in 0..n {
                acc.copy_from_slice(&words);
                for j in 1..k {
                    shifted(&dwords, (j * b) % n, &mut tmp);
                    acc.iter_mut().zip(&tmp).for_each(|(a, t)| *a &= t);
                }
                acc[nw - 1] &= last_mask;
                total += popcount(&acc);
            }
            total
        }
    }
}

/// `T_k(A)` for a set of indices.
pub fn count_tk_set(ambient: &AmbientSet, members: &[usize], k: usize) -> Result<u64> {
    check_k(k)?;
    let inside = membership(ambient, members)?;
    Ok(count_bits(ambient, &inside, k))
}

/// `T_k` of a set packed in a single word (`n ≤ 64`).
pub fn count_mask(ambient: &AmbientSet, mask: u64, k: usize) -> u64 {
    let n = ambient.n;
    debug_assert!(n <= 64 && k >= 2);
    match ambient.kind {
        AmbientKind::Interval => {
            let mut total = mask.count_ones() as u64;
            let bmax = (n - 1) / (k - 1);
            for b in 1..=bmax {
                let mut acc = mask;
                for j in 1..k {
                    acc &= mask >> (j * b);
                }
                total += 2 * acc.count_ones() as u64;
            }
            total
        }
        AmbientKind::Cyclic => {
            let full = if n == 64 { !0u64 } else { (1u64 << n) - 1 };
            let rot = |s: usize| -> u64 {
                if s == 0 {
                    mask
                } else {
                    ((mask >> s) | (mask << (n - s))) & full
                }
            };
            let mut total = 0u64;
            for b in 0..n {
                let mut acc = mask;
                for j in 1..k {
                    acc &= rot((j * b) % n);
                }
                total += acc.count_ones() as u64;
            }
            total
        }
    }
}

/// Asymmetric count `T_k(A_1, …, A_k)`: pairs with `a + (i−1)b ∈ A_i`.
pub fn count_tk_sets(ambient: &AmbientSet, sets: &[&[usize]]) -> Result<u64> {
    let inside: Vec<Vec<bool>> = sets
        .iter()
        .map(|s| membership(ambient, s))
        .collect::<Result<_>>()?;
    let mut c = 0u64;
    for_each_ap(ambient, sets.len(), |t| {
        if t.iter().zip(&inside).all(|(&i, m)| m[i]) {
            c += 1;
        }
    });
    Ok(c)
}

fn check_k(k: usize) -> Result<()> {
    if k < 3 {
        Err(Error::domain(format!("k must be at least 3, got {k}")))
    } else {
        Ok(())
    }
}

/// Multilinear form on raw value slices, one slice per slot.
pub fn multilinear_values(ambient: &AmbientSet, slots: &[&[f64]]) -> f64 {
    let mut acc = CompensatedSum::default();
    for_each_ap(ambient, slots.len(), |t| {
        let mut prod = 1.0;
        for (s, &i) in slots.iter().zip(t) {
            prod *= s[i];
            if prod == 0.0 {
                return;
            }
        }
        acc.add(prod);
    });
    acc.value()
}

/// `T_k(f) = Σ_{a,b} f(a) f(a+b) ⋯ f(a+(k−1)b)`.
pub fn count_tk_density(f: &DensityFunction, k: usize) -> f64 {
    let slots = vec![f.values(); k];
    multilinear_values(&f.ambient(), &slots)
}

/// Same as [`count_tk_density`] on an unchecked value vector (entries may
/// leave [0,1]; used by the solver and the Gaussian-width code).
pub fn count_tk_values(ambient: &AmbientSet, values: &[f64], k: usize) -> f64 {
    let slots = vec![values; k];
    multilinear_values(ambient, &slots)
}

/// `T_k(f_0, …, f_{k−1})`.
pub fn count_tk_multilinear(fs: &[&DensityFunction]) -> Result<f64> {
    let first = fs
        .first()
        .ok_or_else(|| Error::domain("multilinear form needs at least one slot"))?;
    let ambient = first.ambient();
    if let Some(bad) = fs.iter().find(|f| f.ambient() != ambient) {
        return Err(Error::Mismatch(format!(
            "slot on {:?} while first slot lives on {:?}",
            bad.ambient(),
            ambient
        )));
    }
    let slots: Vec<&[f64]> = fs.iter().map(|f| f.values()).collect();
    Ok(multilinear_values(&ambient, &slots))
}

/// `(∇T_k(f))(a) = Σ_b Σ_i Π_{j≠i} f(a + (j−i)b)`.
pub fn gradient_tk(f: &DensityFunction, k: usize) -> Vec<f64> {
    gradient_values(&f.ambient(), f.values(), k)
}

pub(crate) fn gradient_values(ambient: &AmbientSet, values: &[f64], k: usize) -> Vec<f64> {
    value_and_gradient(ambient, values, k).1
}

/// `T_k(f)` together with `∇T_k(f)` in one pass.
pub(crate) fn value_and_gradient(ambient: &AmbientSet, values: &[f64], k: usize) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; ambient.n];
    let mut prefix = vec![1.0; k + 1];
    let mut suffix = vec![1.0; k + 1];
    let mut total = CompensatedSum::default();
    for_each_ap(ambient, k, |t| {
        for j in 0..k {
            prefix[j + 1] = prefix[j] * values[t[j]];
        }
        for j in (0..k).rev() {
            suffix[j] = suffix[j + 1] * values[t[j]];
        }
        total.add(prefix[k]);
        for i in 0..k {
            grad[t[i]] += prefix[i] * suffix[i + 1];
        }
    });
    (total.value(), grad)
}

/// Discrete partials `T_k(y|_{a=1}) − T_k(y|_{a=0})` for a `{0,1}`-valued `y`.
pub fn discrete_gradient_tk(y: &DensityFunction, k: usize) -> Result<Vec<f64>> {
    if !y.is_binary() {
        return Err(Error::domain("discrete gradient needs a {0,1}-valued input"));
    }
    Ok(discrete_gradient_values(&y.ambient(), y.values(), k))
}

pub(crate) fn discrete_gradient_values(ambient: &AmbientSet, values: &[f64], k: usize) -> Vec<f64> {
    let mut grad = vec![0.0; ambient.n];
    let mut distinct: Vec<usize> = Vec::with_capacity(k);
    for_each_ap(ambient, k, |t| {
        distinct.clear();
        for &e in t {
            if !distinct.contains(&e) {
                distinct.push(e);
            }
        }
        for &e in &distinct {
            let prod: f64 = t.iter().filter(|&&x| x != e).map(|&x| values[x]).product();
            grad[e] += prod;
        }
    });
    grad
}

/// `ν_a`: number of triples `(x, y, j)` with `x + jy = a` and the whole
/// progression inside Ω. Exact: for each position `j` the admissible steps
/// form an integer range whose length is counted directly.
pub fn nu_counts(ambient: &AmbientSet, k: usize) -> Vec<u64> {
    let n = ambient.n;
    match ambient.kind {
        AmbientKind::Cyclic => vec![(k * n) as u64; n],
        AmbientKind::Interval => (1..=n as i64)
            .map(|s| (0..k).map(|j| steps_through(n as i64, k as i64, s, j as i64)).sum())
            .collect(),
    }
}

/// Number of `b ∈ Z` with every term `s + (i − j) b`, `0 ≤ i < k`, in `[1, n]`.
fn steps_through(n: i64, k: i64, s: i64, j: i64) -> u64 {
    let mut lo = i64::MIN;
    let mut hi = i64::MAX;
    // only the extreme terms i = 0 and i = k−1 constrain b
    for c in [-j, k - 1 - j] {
        if c == 0 {
            continue;
        }
        let (a, bnd) = (1 - s, n - s);
        let (l, h) = if c > 0 {
            (div_ceil(a, c), div_floor(bnd, c))
        } else {
            (div_ceil(bnd, c), div_floor(a, c))
        };
        lo = lo.max(l);
        hi = hi.min(h);
    }
    if hi < lo {
        0
    } else {
        (hi - lo + 1) as u64
    }
}

fn div_floor(a: i64, b: i64) -> i64 {
    a.div_euclid(b) - if b < 0 && a.rem_euclid(b) != 0 { 1 } else { 0 }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -div_floor(-a, b)
}

/// `ν_a` by enumerating every admissible progression (O(N²k)).
pub fn nu_counts_enumerated(ambient: &AmbientSet, k: usize) -> Vec<u64> {
    let mut nu = vec![0u64; ambient.n];
    for_each_ap(ambient, k, |t| t.iter().for_each(|&i| nu[i] += 1));
    nu
}

/// How the mixed brackets in the closed `ν_{s,j}` display are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BracketReading {
    /// Every bracket is a floor.
    FloorEverywhere,
    /// The two mixed brackets are rounded to nearest.
    RoundMixed,
}

/// Closed-form `ν_{s,j}` for `[N]` (`s` one-based), with `⌊x/0⌋ = +∞` inside `min`.
pub fn nu_sj_closed_form(n: u64, k: u64, s: u64, j: u64, reading: BracketReading) -> u64 {
    let q = |num: u64, den: u64, round: bool| -> u64 {
        if den == 0 {
            u64::MAX
        } else if round {
            (num + den / 2) / den
        } else {
            num / den
        }
    };
    let mixed = reading == BracketReading::RoundMixed;
    let left = q(s - 1, j, false).min(q(n - s, k - 1 - j, false));
    let right = q(s - 1, k - 1 - j, mixed).min(q(n - s, j, mixed));
    left + right + 1
}

/// Positions where the two readings of the closed formula disagree, and
/// positions where the floor reading differs from the exact count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NuCrossCheck {
    pub readings_disagree: Vec<usize>,
    pub floor_mismatches: Vec<usize>,
}

pub fn nu_cross_check(n: usize, k: usize) -> NuCrossCheck {
    let exact = nu_counts(&AmbientSet::interval(n), k);
    let mut readings_disagree = Vec::new();
    let mut floor_mismatches = Vec::new();
    for s in 1..=n as u64 {
        let (mut floor, mut round) = (0u64, 0u64);
        for j in 0..k as u64 {
            floor += nu_sj_closed_form(n as u64, k as u64, s, j, BracketReading::FloorEverywhere);
            round += nu_sj_closed_form(n as u64, k as u64, s, j, BracketReading::RoundMixed);
        }
        let idx = (s - 1) as usize;
        if floor != round {
            readings_disagree.push(idx);
        }
        if floor != exact[idx] {
            floor_mismatches.push(idx);
        }
    }
    NuCrossCheck {
        readings_disagree,
        floor_mismatches,
    }
}

/// Exact counts plus per-element incidences, restricted to progressions
/// lying entirely inside the given set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct APCountReport {
    pub t_k: u64,
    pub nu: Vec<u64>,
    pub ambient: AmbientSet,
    pub k: usize,
}

pub fn ap_report(ambient: &AmbientSet, members: &[usize], k: usize) -> Result<APCountReport> {
    check_k(k)?;
    let inside = membership(ambient, members)?;
    let mut nu = vec![0u64; ambient.n];
    let mut t_k = 0u64;
    for_each_ap(ambient, k, |t| {
        if t.iter().all(|&i| inside[i]) {
            t_k += 1;
            t.iter().for_each(|&i| nu[i] += 1);
        }
    });
    Ok(APCountReport {
        t_k,
        nu,
        ambient: *ambient,
        k,
    })
}

/// `f̂(r) = (1/N) Σ_a f(a) ω^{−ar}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    pub coefficients: Vec<Complex64>,
}

impl ComplexSpectrum {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        ComplexSpectrum { coefficients: buf }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `f̂(r)` with `r` taken mod `N`.
    pub fn at(&self, r: i64) -> Complex64 {
        let n = self.coefficients.len() as i64;
        self.coefficients[r.rem_euclid(n) as usize]
    }

    pub fn sup_norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Relative Parseval defect `|Σ|f̂|² − (1/N)Σ|f|²| / ((1/N)Σ|f|²)`.
    pub fn parseval_defect(&self, values: &[f64]) -> f64 {
        let n = values.len() as f64;
        let spec: f64 = self.coefficients.iter().map(|c| c.norm_sqr()).sum();
        let direct: f64 = values.iter().map(|v| v * v).sum::<f64>() / n;
        if direct == 0.0 {
            spec
        } else {
            (spec - direct).abs() / direct
        }
    }
}

/// `T_3(f, g, h)` on `Z/NZ` via `T_3/N² = Σ_r f̂(r) ĝ(−2r) ĥ(r)`, O(N log N).
pub fn fft_t3(f: &DensityFunction, g: &DensityFunction, h: &DensityFunction) -> Result<f64> {
    let ambient = f.ambient();
    if g.ambient() != ambient || h.ambient() != ambient {
        return Err(Error::Mismatch("fft_t3 needs all three functions on one group".into()));
    }
    if !ambient.is_cyclic() {
        return Err(Error::domain("fft_t3 needs a cyclic ambient"));
    }
    Ok(fft_t3_values(f.values(), g.values(), h.values()))
}

pub(crate) fn fft_t3_values(f: &[f64], g: &[f64], h: &[f64]) -> f64 {
    let n = f.len();
    let fs = ComplexSpectrum::of(f);
    let gs = ComplexSpectrum::of(g);
    let hs = ComplexSpectrum::of(h);
    let mut acc = Complex64::zero();
    for r in 0..n {
        acc += fs.coefficients[r] * gs.at(-2 * r as i64) * hs.coefficients[r];
    }
    acc.re * (n as f64) * (n as f64)
}

/// `T_k` of a finite set of integers, counted in `Z`.
pub fn count_tk_integers(set: &[i64], k: usize) -> Result<u64> {
    check_k(k)?;
    if set.is_empty() {
        return Ok(0);
    }
    let min = *set.iter().min().unwrap();
    let max = *set.iter().max().unwrap();
    let span = (max - min + 1) as usize;
    let members: Vec<usize> = set.iter().map(|&x| (x - min) as usize).collect();
    count_tk_set(&AmbientSet::interval(span), &members, k)
}

/// Compares `T_k(Ã)` in `Z` with `T_k` of its image in `Z/NZ`, for
/// `Ã ⊂ (−N/4, N/4)`.
pub fn rectify_check(a_tilde: &[i64], n: usize, k: usize) -> Result<bool> {
    let quarter = n as f64 / 4.0;
    if let Some(bad) = a_tilde.iter().find(|&&x| (x as f64) <= -quarter || (x as f64) >= quarter) {
        return Err(Error::domain(format!("element {bad} outside (−N/4, N/4) for N = {n}")));
    }
    let cyclic = AmbientSet::cyclic(n);
    let mut image: Vec<usize> = a_tilde
        .iter()
        .map(|&x| cyclic.index_of(x).expect("cyclic index"))
        .collect();
    image.sort_unstable();
    image.dedup();
    let mut dedup = a_tilde.to_vec();
    dedup.sort_unstable();
    dedup.dedup();
    Ok(count_tk_integers(&dedup, k)? == count_tk_set(&cyclic, &image, k)?)
}

/// `E(l·A, l'·B) = #{(a, a', b, b') : a + b = a' + b'}` over the dilates.
pub fn additive_energy(n: usize, a: &[usize], b: &[usize], l: usize, l2: usize) -> u64 {
    let dilate = |s: &[usize], m: usize| -> Vec<usize> {
        let mut d: Vec<usize> = s.iter().map(|&x| (x * m) % n).collect();
        d.sort_unstable();
        d.dedup();
        d
    };
    let da = dilate(a, l);
    let db = dilate(b, l2);
    let mut reps = vec![0u64; n];
    for &x in &da {
        for &y in &db {
            reps[(x + y) % n] += 1;
        }
    }
    reps.iter().map(|r| r * r).sum()
}

/// `Σ_{a,b} f(a + xb) f(a + yb)` over pairs with both terms in Ω.
pub fn double_sum(f: &DensityFunction, x: i64, y: i64) -> Result<f64> {
    if x == y {
        return Err(Error::domain("double sum needs distinct positions"));
    }
    let ambient = f.ambient();
    let n = ambient.n as i64;
    let v = f.values();
    let mut acc = CompensatedSum::default();
    match ambient.kind {
        AmbientKind::Cyclic => {
            for a in 0..n {
                for b in 0..n {
                    let c = (a + x * b).rem_euclid(n) as usize;
                    let d = (a + y * b).rem_euclid(n) as usize;
                    acc.add(v[c] * v[d]);
                }
            }
        }
        AmbientKind::Interval => {
            // fix the first term c = a + xb; then d = c + (y−x)b must be in range
            let step = y - x;
            for c in 0..n {
                for b in -n..=n {
                    let d = c + step * b;
                    if (0..n).contains(&d) {
                        acc.add(v[c as usize] * v[d as usize]);
                    }
                }
            }
        }
    }
    Ok(acc.value())
}
