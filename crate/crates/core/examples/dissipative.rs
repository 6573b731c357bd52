//! Master-equation run with cavity and atomic decay, printing the
//! density-matrix diagnostics that every sample carries.

use cqed::dynamics::{evolve_lindblad, Frame, IntegratorConfig};
use cqed::fock_algebra::{Factor, HilbertSpace, State};
use cqed::model::{build_interaction_picture, SystemParams};
use cqed::observables::{min_quadrature_variance, purity};

fn main() -> cqed::Result<()> {
    let space = HilbertSpace::new(vec![Factor::Mode(12), Factor::Atom])?;
    let p = SystemParams { delta_a: 2.0, omega1_mag: 1.0, ..Default::default() };
    let h = build_interaction_picture(&p, &space)?;
    let rho0 = State::basis(&space, &[3, 0])?;
    let cfg = IntegratorConfig::default().with_dt(1e-3).with_grid(IntegratorConfig::uniform_grid(10.0, 11));
    let tr = evolve_lindblad(&h, &rho0, 0.2, 0.05, &cfg, Frame::InteractionPicture)?;
    for s in &tr.samples {
        let d = s.diagnostics;
        println!(
            "t = {:>4.1}  n_a = {:.5}  purity = {:.5}  var_min = {:.5}  trace err {:.1e}  herm {:.1e}  min eig {}",
            s.time,
            cqed::observables::photon_number(&s.state, 0)?,
            purity(&s.state),
            min_quadrature_variance(&s.state, 0)?.var_min,
            d.norm_error,
            d.hermiticity_error,
            d.min_eigenvalue.map_or("-".into(), |e| format!("{e:.1e}"))
        );
    }
    Ok(())
}
