use aptail::ap_count::count_tk_set;
use aptail::extremal::*;
use aptail::AmbientSet;
use proptest::prelude::*;

#[test]
fn integers_via_a_wide_interval() {
    let r = max_tk_bruteforce(&AmbientSet::interval(12), 6, 3).unwrap();
    assert_eq!(r.max_tk, interval_tk(6, 3));
    assert_eq!(r.max_tk, 18);
}

#[test]
fn prime_group_small_set() {
    let r = max_tk_bruteforce(&AmbientSet::cyclic(13), 5, 3).unwrap();
    assert_eq!(r.max_tk, 13);
    assert_eq!(count_tk_set(&AmbientSet::cyclic(13), &r.witness.iter().map(|&e| e as usize).collect::<Vec<_>>(), 3).unwrap(), 13);
}

#[test]
fn singleton_and_empty() {
    assert_eq!(max_tk_bruteforce(&AmbientSet::cyclic(7), 1, 4).unwrap().max_tk, 1);
    assert_eq!(interval_tk(0, 3), 0);
}

#[test]
fn stability_examples() {
    assert_eq!(stability_bound(5, 0, 3), 0);
    assert_eq!(stability_bound(5, 1, 3), 18);
    assert_eq!(stability_bound(4, 2, 4), 48);
    let amb = AmbientSet::interval(12);
    let m6 = max_tk_bruteforce(&amb, 6, 3).unwrap().max_tk;
    let m5 = max_tk_bruteforce(&amb, 5, 3).unwrap().max_tk;
    assert!(m6 - m5 <= 18);
}

#[test]
fn budget_inversion() {
    let amb = AmbientSet::interval(20);
    let inv = min_set_for_ap_budget(&amb, 3, 5.0, BudgetMode::IntervalInversion).unwrap();
    assert_eq!(inv.m, 3);
    assert_eq!(min_set_for_ap_budget(&amb, 3, 0.0, BudgetMode::IntervalInversion).unwrap().m, 0);
    let small = AmbientSet::interval(10);
    for budget in [1.0, 5.0, 13.0, 30.0] {
        let a = min_set_for_ap_budget(&small, 3, budget, BudgetMode::IntervalInversion).unwrap();
        let b = min_set_for_ap_budget(&small, 3, budget, BudgetMode::BruteForce).unwrap();
        assert_eq!(a.m, b.m, "budget {budget}");
    }
}

#[test]
fn subgroup_beats_interval_on_composite_group() {
    // Z/35 contains a subgroup of size 7, which is a full AP-rich set
    let amb = AmbientSet::cyclic(35);
    let sub = subgroup_set(7, 5);
    assert_eq!(count_tk_set(&amb, &sub, 3).unwrap(), 49);
    assert!(49 > interval_tk(7, 3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn maximum_dominates_interval(n_amb in 4usize..16, cyc in any::<bool>(), k in 3usize..5, n in 1usize..6) {
        prop_assume!(n <= n_amb);
        let amb = if cyc { AmbientSet::cyclic(n_amb) } else { AmbientSet::interval(n_amb) };
        let r = max_tk_bruteforce(&amb, n, k).unwrap();
        prop_assert!(r.max_tk >= r.interval_tk || (cyc && n_amb < n));
        let witness: Vec<usize> = r.witness.iter().map(|&e| amb.index_of(e).unwrap()).collect();
        prop_assert_eq!(witness.len(), n);
        prop_assert_eq!(count_tk_set(&amb, &witness, k).unwrap(), r.max_tk);
    }

    #[test]
    fn interval_bounds(n in 1u64..10_000, k in 3u64..9) {
        let t = interval_tk(n, k);
        prop_assert!((k - 1) * t >= n * n);
        prop_assert!(4 * (k - 1) * t <= 4 * n * n + (k - 1) * (k - 1));
    }
}
