//! Error terms of the Gaussian-width large deviation bound along a sweep.
//!
//! cargo run --example eldan_plumbing

use aptail::gaussian_width::eldan_terms;
use aptail::{AmbientSet, Params};

fn main() -> aptail::Result<()> {
    let k = 3usize;
    println!(" log2 N   epsilon      L       upper_corr  lower_corr  gate");
    for e in (10..=60).step_by(5) {
        let n = 2f64.powi(e);
        let p = n.powf(-1.0 / (6.0 * (k * (k - 1)) as f64));
        let gw = n.powf(1.0 - 1.0 / (2.0 * (k as f64 - 1.0)));
        let t = eldan_terms(&AmbientSet::cyclic(1 << e.min(62)), &Params::new(k, p, 1.0)?, gw)?;
        println!(
            "{e:>6} {:>10.3e} {:>10.3e} {:>10.4} {:>11.3e} {:>5}",
            t.epsilon, t.l, t.upper_correction, t.lower_correction, t.lower_bound_applies
        );
    }
    Ok(())
}
