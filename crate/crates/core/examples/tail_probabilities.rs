//! Exact upper-tail probabilities and two Monte Carlo estimators.
//!
//! cargo run --release --example tail_probabilities

use aptail::tail_prob::{default_tilt, rate_comparison, tail_exact, tail_montecarlo, tail_sweep, tail_tilted};
use aptail::{AmbientSet, Params};

fn main() -> aptail::Result<()> {
    let amb = AmbientSet::cyclic(16);
    let params = Params::new(3, 0.5, 2.0)?;
    let exact = tail_exact(&amb, &params)?;
    let plain = tail_montecarlo(&amb, &params, 200_000, 1)?;
    let tilt = default_tilt(&amb, &params, 1)?;
    let tilted = tail_tilted(&amb, &params, &tilt, 200_000, 1)?;
    println!("exact   {:.5e}", exact.prob);
    println!("plain   {:.5e} ± {:.1e}", plain.prob, plain.stderr);
    println!("tilted  {:.5e} ± {:.1e}", tilted.prob, tilted.stderr);

    let cmp = rate_comparison(&amb, &params, &exact);
    println!("-log P / macro normaliser = {:?} (target {:?})", cmp.macro_ratio, cmp.macro_target);

    println!("delta   P(T >= (1+delta) E T)");
    for row in tail_sweep(&AmbientSet::interval(20), 3, 0.3, &[0.0, 0.5, 1.0, 2.0, 4.0])? {
        println!("{:<7} {:.4e}", row.delta, row.prob);
    }
    Ok(())
}
