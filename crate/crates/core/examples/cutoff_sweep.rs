//! Truncation study: rerun the effective squeezer at several cutoffs.

use cqed::scenario::{builtin, convergence_sweep, DEFAULT_SWEEP_TOL};

fn main() -> cqed::Result<()> {
    let rep = convergence_sweep(&builtin("fig3-effective")?, &[4, 20, 25, 30, 40, 60], DEFAULT_SWEEP_TOL)?;
    println!("{rep}");
    Ok(())
}
