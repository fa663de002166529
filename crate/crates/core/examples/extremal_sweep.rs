//! Brute-force maxima of T_k over n-sets against the interval value.
//!
//! cargo run --example extremal_sweep

use aptail::extremal::{cyclic_threshold, extremal_sweep, max_tk_bruteforce, subgroup_set};
use aptail::ap_count::count_tk_set;
use aptail::AmbientSet;

fn main() -> aptail::Result<()> {
    println!("n  max  interval  (k=3, ambient [3n])");
    for n in 1..=8 {
        let r = max_tk_bruteforce(&AmbientSet::interval(3 * n), n, 3)?;
        println!("{n:>2} {:>4} {:>9}", r.max_tk, r.interval_tk);
    }

    // composite groups: a subgroup eventually beats every interval
    let amb = AmbientSet::cyclic(15);
    let records = extremal_sweep(&amb, 3, 7)?;
    println!("Z/15, k=3: first size where intervals lose = {:?}", cyclic_threshold(&records));
    let sub = subgroup_set(5, 3);
    println!("subgroup {:?} has T_3 = {}", sub, count_tk_set(&amb, &sub, 3)?);
    Ok(())
}
