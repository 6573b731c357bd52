//! Write two runs to CSV and compare a column (CLI: `cqed compare`).

use cqed::scenario::{builtin, compare_runs, run_scenario, RunOptions};

fn main() -> cqed::Result<()> {
    let dir = std::env::temp_dir();
    let a = dir.join("cqed-fig3-analytic.csv");
    let b = dir.join("cqed-fig3-effective.csv");
    run_scenario(&builtin("fig3-analytic")?, &RunOptions::default())?.write_csv(&a)?;
    run_scenario(&builtin("fig3-effective")?, &RunOptions::default())?.write_csv(&b)?;
    println!("{}", compare_runs(&a, &b, "var_x_min", 5e-3)?);
    Ok(())
}
