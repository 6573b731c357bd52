//! Ladder operators, product states and reduced states in a truncated space.

use cqed::fock_algebra::{annihilation, embed, expectation, partial_trace, Factor, HilbertSpace, Level, State, C64};
use cqed::observables::{min_quadrature_variance, photon_number, purity};

fn main() -> cqed::Result<()> {
    let space = HilbertSpace::new(vec![Factor::Mode(12), Factor::Mode(4), Factor::Atom])?;
    println!("total dimension {}", space.total_dim());

    let alpha = C64::new(0.8, 0.3);
    let psi = State::product(&[State::coherent(12, alpha)?, State::fock(4, 1)?, State::atom(Level::Excited)])?;
    let a = embed(&annihilation(12)?, 0, &space)?;
    println!("<a> = {:.6} (alpha = {alpha})", expectation(&psi, &a)?);
    println!("<n_a> = {:.6}, <n_b> = {:.6}", photon_number(&psi, 0)?, photon_number(&psi, 1)?);

    let q = min_quadrature_variance(&psi, 0)?;
    println!("coherent state: min variance {:.6}, degree {:.3}%", q.var_min, q.squeezing_degree);

    let field = partial_trace(&psi, &[0, 1])?;
    println!("field purity {:.6}", purity(&field));
    Ok(())
}
