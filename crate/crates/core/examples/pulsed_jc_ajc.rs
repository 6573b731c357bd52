//! Alternating anti-Jaynes-Cummings and Jaynes-Cummings pulses ladder the
//! state |g,0> -> |e,1> -> |g,2>.

use cqed::scenario::{builtin, run_scenario, RunOptions};

fn main() -> cqed::Result<()> {
    let out = run_scenario(&builtin("pulsed-jc-ajc")?, &RunOptions::default())?;
    let tr = out.trajectory.as_ref().expect("propagated run");
    for s in &tr.samples {
        println!(
            "t = {:.4}  P(g,0) = {:.6}  P(e,1) = {:.6}  P(g,2) = {:.6}",
            s.time,
            s.state.population(&[0, 0])?,
            s.state.population(&[1, 1])?,
            s.state.population(&[2, 0])?
        );
    }
    Ok(())
}
