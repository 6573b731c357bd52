//! The two-drive atom-cavity model in the interaction picture, propagated
//! until r = 1. Pass a cutoff to trade accuracy for speed (default 30).

use cqed::scenario::{builtin, run_scenario, RunOptions};

fn main() -> cqed::Result<()> {
    let cutoff = std::env::args().nth(1).map_or(30, |s| s.parse().expect("cutoff must be an integer"));
    let mut cfg = builtin("fig3-full")?;
    cfg.scenario.cutoff_a = cutoff;
    cfg.integrator.dt = Some(5e-5);
    cfg.integrator.points = 11;
    let out = run_scenario(&cfg, &RunOptions::default())?;
    for row in &out.rows {
        println!("r = {:.2}  var = {:.6}  degree = {:.3}%  P(e) = {:.2e}", row.r, row.var_x_min, row.squeezing_degree, row.pop_e);
    }
    println!("{}", out.summary());
    Ok(())
}
