//! Numerically average a laser-frame Hamiltonian to second order and set the
//! result against the closed-form couplings (CLI: `cqed derive-effective`).

use cqed::scenario::{builtin, derive_effective_report};

fn main() -> cqed::Result<()> {
    for name in ["dispersive-jc", "pdc-intermediate", "pdc-strong"] {
        println!("{}\n", derive_effective_report(&builtin(name)?)?);
    }
    Ok(())
}
