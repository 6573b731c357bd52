//! Atom-conditioned squeezing: with the atom in (|g> + |e>)/√2 the field
//! becomes a superposition of oppositely squeezed states and its reduced
//! purity drops below one.

use cqed::observables::field_purity;
use cqed::scenario::{builtin, run_scenario, RunOptions};

fn main() -> cqed::Result<()> {
    let out = run_scenario(&builtin("sss")?, &RunOptions::default())?;
    let tr = out.trajectory.as_ref().expect("propagated run");
    for (row, s) in out.rows.iter().zip(&tr.samples).step_by(8) {
        println!(
            "r = {:.2}  field purity {:.6}  n_a {:.6}  P(e) {:.6}",
            row.r,
            field_purity(&s.state)?,
            row.n_a,
            row.pop_e
        );
    }
    Ok(())
}
