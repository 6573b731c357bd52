//! The same dynamics in the lab frame and the interaction picture: photon
//! number and the minimum quadrature variance agree, fixed-angle readouts
//! are refused across frames.

use cqed::dynamics::{check_comparable, evolve_schrodinger, Frame, IntegratorConfig, Observable};
use cqed::fock_algebra::{Factor, HilbertSpace, Level, State, C64};
use cqed::model::{build_interaction_picture, build_lab_hamiltonian, SystemParams};
use cqed::observables::{min_quadrature_variance, photon_number};

fn main() -> cqed::Result<()> {
    let space = HilbertSpace::new(vec![Factor::Mode(6), Factor::Atom])?;
    let p = SystemParams { omega0: 50.0, delta_a: 1.0, omega1_mag: 0.8, delta1: 0.5, ..Default::default() };
    let psi = State::product(&[State::coherent(6, C64::new(0.4, 0.1))?, State::atom(Level::Ground)])?;
    let cfg = IntegratorConfig::default().with_dt(1e-4).with_grid(IntegratorConfig::uniform_grid(3.0, 4));
    let lab = evolve_schrodinger(&build_lab_hamiltonian(&p, &space)?, &psi, &cfg, Frame::Lab)?;
    let ip = evolve_schrodinger(&build_interaction_picture(&p, &space)?, &psi, &cfg, Frame::InteractionPicture)?;

    check_comparable(&lab, &ip, &[Observable::PhotonNumber(0), Observable::MinQuadratureVariance(0)])?;
    for (x, y) in lab.samples.iter().zip(&ip.samples) {
        println!(
            "t = {:.1}  n_a lab {:.10} ip {:.10}  var_min lab {:.10} ip {:.10}",
            x.time,
            photon_number(&x.state, 0)?,
            photon_number(&y.state, 0)?,
            min_quadrature_variance(&x.state, 0)?.var_min,
            min_quadrature_variance(&y.state, 0)?.var_min
        );
    }
    let fixed = Observable::QuadratureVariance { mode: 0, theta: 0.0 };
    if let Err(e) = check_comparable(&lab, &ip, &[fixed]) {
        println!("{e}");
    }
    Ok(())
}
