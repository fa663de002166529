//! Lower and upper estimates for the Gaussian width of the gradient set.
//!
//! cargo run --release --example gaussian_width

use aptail::gaussian_width::{
    crt_vertex_check, gw_lower_3ap_construction, gw_lower_montecarlo, gw_upper_crt, gw_upper_fourier3,
    gw_upper_fourier4, trivial_bounds, SearchConfig,
};
use aptail::AmbientSet;

fn main() -> aptail::Result<()> {
    let cfg = SearchConfig::default();
    println!("    N   trivial_lo  search_lo  construction  fourier3_up  trivial_up");
    for n in [65usize, 129, 257, 513] {
        let amb = AmbientSet::cyclic(n);
        let (tl, tu) = trivial_bounds(&amb, 3);
        let lo = gw_lower_montecarlo(&amb, 3, 8, &cfg)?;
        let c = gw_lower_3ap_construction(&amb, 8, cfg.seed)?;
        let up = gw_upper_fourier3(&amb, 8, cfg.seed)?;
        println!("{n:>5} {tl:>12.1} {:>10.1} {:>13.1} {:>12.1} {tu:>11.1}", lo.lower, c.mean_centered, up.upper);
    }

    let f4 = gw_upper_fourier4(&AmbientSet::cyclic(256), 8, cfg.seed)?;
    println!("k=4, N=256: fourier upper {:.1}", f4.upper);

    for k in [3, 4] {
        let est = gw_upper_crt(10_000_000, k)?;
        let hull = est.hull.expect("hull data");
        println!("CRT k={k}, N=1e7: primes {:?}, bound {:.3e}", hull.primes, hull.bound);
    }
    let v = crt_vertex_check(10_000, 3, 200, cfg.seed)?;
    println!("vertex sup over 200 draws: {:.3} (bound {:.3})", v.max_abs, v.vertex_bound);
    Ok(())
}
