//! Closed-form effective couplings: two-mode down- and up-conversion and
//! single-mode squeezing.

use cqed::effective::{pdc_coupling, puc_coupling, squeeze_coupling, Branch};
use cqed::model::{RegimeTag, SystemParams, Thresholds};

fn main() -> cqed::Result<()> {
    let th = Thresholds::default();
    let two_mode = |da: f64, db: f64, om: f64| SystemParams {
        lambda_b: 1.0,
        delta_a: da,
        delta_b: db,
        omega1_mag: om,
        ..Default::default()
    };

    for (p, regime) in [
        (two_mode(40.0, -40.0, 4.0), RegimeTag::Weak),
        (two_mode(30.0, -30.0, 10.0), RegimeTag::Intermediate),
        (two_mode(10.0, -10.0, 100.0), RegimeTag::Strong),
    ] {
        for b in [Branch::Plus, Branch::Minus] {
            let c = pdc_coupling(&p, b, regime, &th)?;
            println!(
                "PDC {:<12} {:<5} Λ = {:+.6}  compensating δ1 = {:+.6}",
                regime.name(),
                b.name(),
                c.coupling.re,
                c.required_detuning.unwrap()
            );
        }
    }

    let c = puc_coupling(&two_mode(8.0, 12.0, 10.0), Branch::Plus, RegimeTag::Intermediate, &th)?;
    println!("PUC intermediate plus  Σ = {:.6}  Φ = {:.6}", c.coupling.re, c.residual_phase);

    let fig3 = SystemParams { omega1_mag: 400.0, omega2_mag: 20.0, delta2: -800.0, delta_a: 0.025, ..Default::default() };
    for b in [Branch::Down, Branch::Up] {
        let c = squeeze_coupling(&fig3, b, &th)?;
        println!("squeeze {:<5} coupling {:+.6}  resonant δa = {:+.6}", b.name(), c.coupling.re, c.required_detuning.unwrap());
    }
    Ok(())
}
