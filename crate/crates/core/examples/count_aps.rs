//! Counting k-APs: sets, densities, incidences and the FFT path.
//!
//! cargo run --example count_aps

use aptail::ap_count::{ap_report, count_tk_density, fft_t3, gradient_tk, nu_counts};
use aptail::extremal::interval_tk;
use aptail::{AmbientSet, DensityFunction};

fn main() -> aptail::Result<()> {
    let interval = AmbientSet::interval(10);
    let evens: Vec<usize> = (0..10).step_by(2).collect();
    let r = ap_report(&interval, &evens, 3)?;
    println!("T_3(evens in [10]) = {}, incidences {:?}", r.t_k, r.nu);
    println!("T_3([5]) closed form = {}", interval_tk(5, 3));

    let group = AmbientSet::cyclic(101);
    let f = DensityFunction::new(group, (0..101).map(|a| 0.5 + 0.4 * (a as f64 / 7.0).sin()).collect())?;
    let direct = count_tk_density(&f, 3);
    let fourier = fft_t3(&f, &f, &f)?;
    println!("T_3(f) on Z/101: direct {direct:.6}, fourier {fourier:.6}");

    let g = gradient_tk(&f, 3);
    println!("grad T_3(f)[0..4] = {:?}", &g[..4]);

    let nu = nu_counts(&AmbientSet::interval(12), 4);
    println!("nu for k=4 on [12]: {nu:?}");
    Ok(())
}
