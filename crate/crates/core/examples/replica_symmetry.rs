//! Where the constant density is optimal: the convex-minorant test.
//!
//! cargo run --example replica_symmetry

use aptail::replica::{boundaries, holder_check, phi_replica, scan, PhiOutcome};
use aptail::{AmbientSet, DensityFunction};

fn main() -> aptail::Result<()> {
    for (p, k) in [(0.3, 3), (0.3, 6)] {
        let rows = scan(p, k, 60)?;
        let passing = rows.iter().filter(|r| r.on_minorant).count();
        println!("p={p} k={k}: {passing}/{} scanned q pass", rows.len());
        for b in boundaries(p, k, &rows, 1e-6)? {
            println!("  boundary between {:.6} and {:.6}", b.last_passing, b.first_failing);
        }
    }
    match phi_replica(0.3, 0.6, 3, 100)? {
        PhiOutcome::Value(v) => println!("phi(p=0.3, q=0.6, N=100) = {v:.4}"),
        PhiOutcome::NotCertified(v) => println!("not certified, gap {:.3e}", v.minorant_gap),
    }
    let f = DensityFunction::indicator(AmbientSet::cyclic(31), &[0, 1, 2, 3, 10])?;
    let h = holder_check(&f, 3)?;
    println!("T_3(f) = {} <= {} (slack {:.3})", h.lhs, h.rhs, h.slack);
    Ok(())
}
