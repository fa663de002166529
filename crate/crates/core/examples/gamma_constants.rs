//! The microscopic constants gamma_k and their large-k behaviour.
//!
//! cargo run --example gamma_constants

use aptail::variational::{gamma_k, gamma_k_via_riemann, gamma_limit_ratio, rational_string};

fn main() -> aptail::Result<()> {
    for k in 3..=7 {
        let g = gamma_k(k)?;
        println!("gamma_{k} = {:<12} riemann(N=1e5) = {:.8}", rational_string(&g), gamma_k_via_riemann(k, 100_000));
    }
    let r = gamma_limit_ratio();
    println!("lim gamma_k/k^2 = {:.6} (matches {:?})", r.value, r.matches);
    for (k, ratio) in r.ratios {
        println!("  k={k:<4} gamma_k/k^2 = {ratio:.6}");
    }
    Ok(())
}
