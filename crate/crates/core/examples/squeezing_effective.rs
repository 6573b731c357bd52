//! Squeezed vacuum from the effective two-photon generator: minimum
//! quadrature variance against r = 2χt next to e^{-2r}/4.

use cqed::scenario::{builtin, run_scenario, RunOptions};

fn main() -> cqed::Result<()> {
    let out = run_scenario(&builtin("fig3-effective")?, &RunOptions::default())?;
    println!("{:>6} {:>12} {:>12} {:>9}", "r", "var_x_min", "e^-2r/4", "degree%");
    for row in out.rows.iter().step_by(5) {
        println!("{:>6.3} {:>12.8} {:>12.8} {:>9.3}", row.r, row.var_x_min, (-2.0 * row.r).exp() / 4.0, row.squeezing_degree);
    }
    Ok(())
}
