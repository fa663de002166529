//! Constructions versus the numerical solver, and the closed-form rates.
//!
//! cargo run --example variational_solve

use aptail::variational::{constant_tilt, interval_tilt, nu_tilt, rate_auto, solve_variational, SolverConfig};
use aptail::{AmbientSet, Params};

fn main() -> aptail::Result<()> {
    for (amb, params) in [
        (AmbientSet::interval(80), Params::new(3, 0.1, 1.0)?),
        (AmbientSet::cyclic(79), Params::new(3, 0.05, 0.01)?),
    ] {
        println!("{} N={} k={} p={} delta={}", amb.kind, amb.n, params.k, params.p, params.delta);
        for (name, sol) in [
            ("interval", interval_tilt(&amb, &params)),
            ("constant", constant_tilt(&amb, &params)),
            ("nu", nu_tilt(&amb, &params)),
        ] {
            match sol {
                Ok(s) => println!("  {name:<9} objective {:.5}", s.objective),
                Err(e) => println!("  {name:<9} {e}"),
            }
        }
        let sol = solve_variational(&amb, &params, &SolverConfig::default())?;
        let diag = sol.diagnostics.as_ref().expect("solver diagnostics");
        println!("  solver    objective {:.5} (from {}, kkt {:.1e})", sol.objective, diag.best_start, diag.kkt_residual);
        let rate = rate_auto(&amb, &params);
        println!("  {:?} rate {:.5} = {}", rate.regime, rate.value, rate.formula);
    }
    Ok(())
}
