//! Classify single-drive parameter sets into the weak, intermediate and
//! strong amplification regimes and show the margins behind each verdict.

use cqed::model::{classify_regime, SystemParams, Thresholds};

fn main() {
    let th = Thresholds::default();
    for (delta, omega) in [(40.0, 4.0), (30.0, 10.0), (10.0, 100.0), (10.0, 10.0)] {
        let p = SystemParams { lambda_b: 1.0, delta_a: delta, delta_b: -delta, omega1_mag: omega, ..Default::default() };
        match classify_regime(&p, &th) {
            Ok(r) => {
                println!("δ = {delta}, |Ω1| = {omega}: {}", r.tag.name());
                for m in &r.margins {
                    println!("    {m}");
                }
            }
            Err(e) => println!("δ = {delta}, |Ω1| = {omega}: {e}"),
        }
    }
}
