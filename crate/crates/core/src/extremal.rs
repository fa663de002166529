//! Maximising `T_k` over sets of a given size.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ap_count::count_mask;
use crate::domain::{AmbientKind, AmbientSet};
use crate::error::{Error, Result};

/// Default cap on the number of leaves visited by [`max_tk_bruteforce`].
pub const DEFAULT_LEAF_BUDGET: u64 = 2_000_000_000;

/// `T_k([n]) = (n² − r²)/(k−1) + r` with `r ≡ n (mod k−1)`, `r ∈ {1,…,k−1}`.
pub fn interval_tk(n: u64, k: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let d = k - 1;
    let r = (n - 1) % d + 1;
    (n * n - r * r) / d + r
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremalRecord {
    pub n: usize,
    pub k: usize,
    pub ambient: AmbientSet,
    pub max_tk: u64,
    /// Elements of the lexicographically smallest maximiser.
    pub witness: Vec<i64>,
    pub interval_tk: u64,
}

pub fn binomial(n: u64, r: u64) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Exact `max{T_k(A) : A ⊂ Ω, |A| = n}` by exhaustive search (`N ≤ 64`).
pub fn max_tk_bruteforce(ambient: &AmbientSet, n: usize, k: usize) -> Result<ExtremalRecord> {
    max_tk_bruteforce_with_budget(ambient, n, k, DEFAULT_LEAF_BUDGET)
}

pub fn max_tk_bruteforce_with_budget(
    ambient: &AmbientSet,
    n: usize,
    k: usize,
    budget: u64,
) -> Result<ExtremalRecord> {
    if k < 3 {
        return Err(Error::domain(format!("k must be at least 3, got {k}")));
    }
    let big_n = ambient.n;
    if n > big_n {
        return Err(Error::domain(format!("set size {n} exceeds ambient size {big_n}")));
    }
    if big_n > 64 {
        return Err(Error::Budget(format!("exhaustive search supports N ≤ 64, got {big_n}")));
    }
    let record = |max_tk: u64, mask: u64| ExtremalRecord {
        n,
        k,
        ambient: *ambient,
        max_tk,
        witness: (0..big_n)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| ambient.element_of(i))
            .collect(),
        interval_tk: interval_tk(n as u64, k as u64),
    };
    if n == 0 {
        return Ok(record(0, 0));
    }
    // both ambients are translation invariant, so the smallest element can be
    // pinned at index 0; this also keeps the lexicographically first maximiser
    let leaves = binomial(big_n as u64 - 1, n as u64 - 1);
    if leaves > budget {
        return Err(Error::Budget(format!(
            "C({}, {}) = {leaves} subsets exceeds budget {budget}",
            big_n - 1,
            n - 1
        )));
    }
    if n == 1 {
        return Ok(record(1, 1));
    }
    let search = Search {
        ambient: *ambient,
        n,
        k,
    };
    // shard on the second element; merge by max with lex tiebreak
    let best = (1..=big_n - (n - 1))
        .into_par_iter()
        .map(|second| search.shard(second))
        .reduce(
            || (0u64, u64::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && lex_less(b.1, a.1)) {
                    b
                } else {
                    a
                }
            },
        );
    Ok(record(best.0, best.1))
}

/// Lex order of the sorted element lists of two masks.
fn lex_less(a: u64, b: u64) -> bool {
    if b == u64::MAX {
        return true;
    }
    if a == u64::MAX {
        return false;
    }
    let diff = a ^ b;
    if diff == 0 {
        return false;
    }
    // the first differing element belongs to the lex-smaller list
    let low = diff.trailing_zeros();
    a >> low & 1 == 1
}

struct Search {
    ambient: AmbientSet,
    n: usize,
    k: usize,
}

impl Search {
    /// Best `(T, mask)` over sets `{0, second, …}`.
    fn shard(&self, second: usize) -> (u64, u64) {
        let mask = 1u64 | 1u64 << second;
        let mut best = (0u64, u64::MAX);
        match self.ambient.kind {
            AmbientKind::Interval => {
                // {0, second} has exactly its two trivial pairs
                self.dfs_interval(mask, 2, 2, second, &mut best);
            }
            AmbientKind::Cyclic => self.dfs_cyclic(mask, 2, second, &mut best),
        }
        best
    }

    /// Bit-sliced counters: bit `x` of slice `l` is bit `l` of
    /// `c(x) = #{b ≥ 1 : x − jb ∈ mask for j = 1..k−1}`, for every `x > last`.
    #[inline]
    fn slices(&self, mask: u64, last: usize) -> (u64, [u64; 6]) {
        let big_n = self.ambient.n;
        let full = if big_n == 64 { !0u64 } else { (1u64 << big_n) - 1 };
        let cand = full & !((1u64 << (last + 1)) - 1);
        let mut slices = [0u64; 6];
        for b in 1..=(big_n - 1) / (self.k - 1) {
            let mut v = cand;
            for j in 1..self.k {
                v &= mask << (j * b);
            }
            let mut carry = v;
            for s in slices.iter_mut() {
                if carry == 0 {
                    break;
                }
                let t = *s & carry;
                *s ^= carry;
                carry = t;
            }
        }
        (cand, slices)
    }

    fn dfs_interval(&self, mask: u64, t: u64, size: usize, last: usize, best: &mut (u64, u64)) {
        let big_n = self.ambient.n;
        let remaining = self.n - size;
        if remaining == 0 {
            if t > best.0 || (t == best.0 && lex_less(mask, best.1)) {
                *best = (t, mask);
            }
            return;
        }
        let (cand, slices) = self.slices(mask, last);
        if remaining == 1 {
            // the best leaf under this node: largest c, smallest x on ties
            let mut alive = cand;
            let mut c = 0u64;
            for l in (0..slices.len()).rev() {
                let hit = alive & slices[l];
                if hit != 0 {
                    alive = hit;
                    c |= 1 << l;
                }
            }
            let x = alive.trailing_zeros() as usize;
            let t2 = t + 1 + 2 * c;
            let m2 = mask | 1u64 << x;
            if t2 > best.0 || (t2 == best.0 && lex_less(m2, best.1)) {
                *best = (t2, m2);
            }
            return;
        }
        for x in last + 1..=big_n - remaining {
            let c: u64 = slices
                .iter()
                .enumerate()
                .map(|(l, s)| (s >> x & 1) << l)
                .sum();
            self.dfs_interval(mask | 1u64 << x, t + 1 + 2 * c, size + 1, x, best);
        }
    }

    fn dfs_cyclic(&self, mask: u64, size: usize, last: usize, best: &mut (u64, u64)) {
        let big_n = self.ambient.n;
        let remaining = self.n - size;
        if remaining == 0 {
            let t = count_mask(&self.ambient, mask, self.k);
            if t > best.0 || (t == best.0 && lex_less(mask, best.1)) {
                *best = (t, mask);
            }
            return;
        }
        for x in last + 1..=big_n - remaining {
            self.dfs_cyclic(mask | 1u64 << x, size + 1, x, best);
        }
    }
}

/// `k·s·(n+s)`: the most `T_k` can grow when `s` elements join an `n`-set.
pub fn stability_bound(n: u64, s: u64, k: u64) -> u64 {
    k * s * (n + s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    /// Inverts the interval formula; exact whenever intervals are extremal.
    IntervalInversion,
    /// Exhaustive search over subsets of each size.
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinSetResult {
    pub m: usize,
    pub mode: BudgetMode,
}

/// `min{|S| : T_k(S) ≥ budget}`.
pub fn min_set_for_ap_budget(ambient: &AmbientSet, k: usize, budget: f64, mode: BudgetMode) -> Result<MinSetResult> {
    let total = ambient.total_count(k) as f64;
    if !(0.0..=total).contains(&budget) {
        return Err(Error::domain(format!("budget {budget} outside [0, T_k(Ω) = {total}]")));
    }
    let n = ambient.n;
    let m = match mode {
        BudgetMode::IntervalInversion => {
            let mut m = 0usize;
            while (interval_tk(m as u64, k as u64) as f64) < budget {
                m += 1;
            }
            // on a composite cyclic group the interval of length m may not be
            // realisable; the whole group always is
            m.min(n)
        }
        BudgetMode::BruteForce => {
            let mut m = 0usize;
            loop {
                let best = max_tk_bruteforce(ambient, m, k)?.max_tk;
                if best as f64 >= budget {
                    break m;
                }
                m += 1;
            }
        }
    };
    Ok(MinSetResult { m, mode })
}

/// `max_tk` for every `n` in `1..=n_max`; the record carries interval values
/// so callers can see where intervals stop being extremal.
pub fn extremal_sweep(ambient: &AmbientSet, k: usize, n_max: usize) -> Result<Vec<ExtremalRecord>> {
    (1..=n_max).map(|n| max_tk_bruteforce(ambient, n, k)).collect()
}

/// Smallest `n` at which the brute-force maximum beats the interval, if any.
pub fn cyclic_threshold(records: &[ExtremalRecord]) -> Option<usize> {
    records.iter().find(|r| r.max_tk > r.interval_tk).map(|r| r.n)
}

/// `N₂·Z/NZ` as indices in `Z/(N₁N₂)Z`: a subgroup of size `N₁`.
pub fn subgroup_set(n1: usize, n2: usize) -> Vec<usize> {
    (0..n1).map(|i| i * n2).collect()
}
