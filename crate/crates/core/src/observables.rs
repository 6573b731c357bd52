//! Field and atom readouts: quadrature statistics, squeezing degree, photon
//! numbers, populations, purity, fidelity and truncation diagnostics.
//!
//! Quadratures follow `X_θ = (a e^{−iθ} + a† e^{iθ}) / 2`, so the vacuum
//! variance is `1/4` and the squeezing degree is `100 (1 − var / 0.25)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock_algebra::{hermitian_eigenvalues, partial_trace, Factor, Level, State, StateKind, C64};

pub const VACUUM_VARIANCE: f64 = 0.25;

fn mode_slot(state: &State, mode: usize) -> Result<usize> {
    state
        .space()
        .mode_slot(mode)
        .ok_or_else(|| Error::SpaceMismatch(format!("mode {mode} is absent from the state")))
}

/// First and second moments of one mode: `<a>`, `<a²>`, `<a†a>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeMoments {
    pub a: C64,
    pub a2: C64,
    pub n: f64,
}

pub fn mode_moments(state: &State, mode: usize) -> Result<ModeMoments> {
    let slot = mode_slot(state, mode)?;
    let reduced = partial_trace(state, &[slot])?;
    let rho = reduced.density_matrix();
    let dim = rho.nrows();
    // Tr(ρ a) = Σ √n ρ[n, n−1], Tr(ρ a²) = Σ √(n(n−1)) ρ[n, n−2]
    let mut a = C64::new(0.0, 0.0);
    let mut a2 = C64::new(0.0, 0.0);
    let mut n = 0.0;
    for k in 1..dim {
        a += rho[(k, k - 1)] * (k as f64).sqrt();
        n += k as f64 * rho[(k, k)].re;
        if k >= 2 {
            a2 += rho[(k, k - 2)] * ((k * (k - 1)) as f64).sqrt();
        }
    }
    Ok(ModeMoments { a, a2, n })
}

impl ModeMoments {
    /// `var(θ) = A + B cos 2θ + C sin 2θ`.
    fn fourier(&self) -> (f64, f64, f64) {
        let nn = self.n - self.a.norm_sqr();
        let c2 = self.a2 - self.a * self.a;
        ((2.0 * nn + 1.0) / 4.0, c2.re / 2.0, c2.im / 2.0)
    }

    pub fn variance_at(&self, theta: f64) -> f64 {
        let (a, b, c) = self.fourier();
        a + b * (2.0 * theta).cos() + c * (2.0 * theta).sin()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureResult {
    /// Angle of minimal variance in `[0, π)`.
    pub theta_min: f64,
    pub var_min: f64,
    pub squeezing_degree: f64,
    moments: ModeMoments,
}

impl QuadratureResult {
    pub fn var_at(&self, theta: f64) -> f64 {
        self.moments.variance_at(theta)
    }

    pub fn moments(&self) -> ModeMoments {
        self.moments
    }
}

pub fn squeezing_degree(var: f64) -> f64 {
    100.0 * (1.0 - var / VACUUM_VARIANCE)
}

pub fn quadrature_variance(state: &State, mode: usize, theta: f64) -> Result<f64> {
    Ok(mode_moments(state, mode)?.variance_at(theta))
}

/// Closed-form minimum over θ of the quadrature variance.
pub fn min_quadrature_variance(state: &State, mode: usize) -> Result<QuadratureResult> {
    Ok(min_from_moments(mode_moments(state, mode)?))
}

pub fn min_from_moments(moments: ModeMoments) -> QuadratureResult {
    let (a, b, c) = moments.fourier();
    let amp = b.hypot(c);
    let var_min = a - amp;
    let theta_min = if amp == 0.0 {
        0.0
    } else {
        ((c.atan2(b) + PI) / 2.0).rem_euclid(PI)
    };
    QuadratureResult { theta_min, var_min, squeezing_degree: squeezing_degree(var_min), moments }
}

pub fn photon_number(state: &State, mode: usize) -> Result<f64> {
    Ok(mode_moments(state, mode)?.n)
}

/// Probability of every product basis state, in flat-index order.
pub fn populations(state: &State) -> Vec<f64> {
    state.populations()
}

/// Excited-state population of the atom.
pub fn excited_population(state: &State) -> Result<f64> {
    let slot = state
        .space()
        .atom_slot()
        .ok_or_else(|| Error::SpaceMismatch("the atom is absent from the state".into()))?;
    let r = partial_trace(state, &[slot])?;
    r.population(&[Level::Excited.index()])
}

/// `Tr ρ²` of the whole state.
pub fn purity(state: &State) -> f64 {
    match state.kind() {
        StateKind::Pure(v) => v.norm_squared().powi(2),
        StateKind::Mixed(r) => r.iter().map(|z| z.norm_sqr()).sum(),
    }
}

/// Purity of the reduced state on `keep`.
pub fn reduced_purity(state: &State, keep: &[usize]) -> Result<f64> {
    Ok(purity(&partial_trace(state, keep)?))
}

/// Purity of the field (every mode factor, atom traced out).
pub fn field_purity(state: &State) -> Result<f64> {
    let modes: Vec<usize> = state
        .space()
        .factors()
        .iter()
        .enumerate()
        .filter(|(_, f)| matches!(f, Factor::Mode(_)))
        .map(|(i, _)| i)
        .collect();
    if modes.len() == state.space().factors().len() {
        return Ok(purity(state));
    }
    reduced_purity(state, &modes)
}

fn hermitian_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let d = eig.eigenvalues.map(|x| C64::new(x.max(0.0).sqrt(), 0.0));
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&d) * v.adjoint()
}

/// `|<ψ|φ>|²` for pure pairs, `<ψ|ρ|ψ>` for pure-mixed, Uhlmann fidelity otherwise.
pub fn fidelity(a: &State, b: &State) -> Result<f64> {
    if a.space() != b.space() {
        return Err(Error::SpaceMismatch("fidelity between different spaces".into()));
    }
    Ok(match (a.kind(), b.kind()) {
        (StateKind::Pure(x), StateKind::Pure(y)) => x.dotc(y).norm_sqr(),
        (StateKind::Pure(x), StateKind::Mixed(r)) | (StateKind::Mixed(r), StateKind::Pure(x)) => {
            x.dotc(&(r * x)).re
        }
        (StateKind::Mixed(r), StateKind::Mixed(s)) => {
            let sr = hermitian_sqrt(r);
            let inner = &sr * s * &sr;
            let tr: f64 = hermitian_eigenvalues(&inner).iter().map(|x| x.max(0.0).sqrt()).sum();
            tr * tr
        }
    })
}

/// Population in the top `k` Fock levels of `mode`.
pub fn truncation_tail(state: &State, mode: usize, k: usize) -> Result<f64> {
    let slot = mode_slot(state, mode)?;
    let dim = state.space().factor_dim(slot);
    if k >= dim {
        return Err(Error::InvalidIndex(format!("tail of {k} levels on cutoff {dim}")));
    }
    let r = partial_trace(state, &[slot])?;
    Ok((dim - k..dim).map(|n| r.population(&[n]).unwrap_or(0.0)).sum())
}

/// Largest tail weight over every mode of the state.
pub fn max_tail_weight(state: &State, k: usize) -> f64 {
    (0..state.space().mode_count())
        .filter_map(|m| truncation_tail(state, m, k).ok())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_algebra::HilbertSpace;
    use nalgebra::DVector;
    use proptest::prelude::*;

    /// Squeezed vacuum `S(r e^{iφ})|0>` from its Fock expansion.
    fn squeezed_vacuum(dim: usize, r: f64, phi: f64) -> State {
        let mut v = DVector::zeros(dim);
        let t = r.tanh();
        let mut amp = 1.0 / r.cosh().sqrt();
        for m in 0..dim / 2 + 1 {
            let n = 2 * m;
            if n >= dim {
                break;
            }
            if m > 0 {
                amp *= -t * ((2 * m - 1) as f64 / (2 * m) as f64).sqrt();
            }
            v[n] = C64::from_polar(amp, phi * m as f64);
        }
        let norm = v.norm();
        State::pure(HilbertSpace::mode(dim).unwrap(), v / C64::new(norm, 0.0)).unwrap()
    }

    #[test]
    fn vacuum_quadratures() {
        let vac = State::vacuum(8).unwrap();
        for th in [0.0, 0.4, 1.3, 2.9] {
            assert!((quadrature_variance(&vac, 0, th).unwrap() - 0.25).abs() < 1e-15);
        }
        let q = min_quadrature_variance(&vac, 0).unwrap();
        assert_eq!(q.var_min, 0.25);
        assert_eq!(q.squeezing_degree, 0.0);
    }

    #[test]
    fn coherent_state_is_minimum_uncertainty() {
        let alpha = C64::new(1.2, 0.5);
        let s = State::coherent(40, alpha).unwrap();
        for th in [0.0, 0.8, 2.0] {
            assert!((quadrature_variance(&s, 0, th).unwrap() - 0.25).abs() < 1e-9);
        }
    }

    #[test]
    fn squeezed_vacuum_readout() {
        let s = squeezed_vacuum(140, 1.0, 0.0);
        let q = min_quadrature_variance(&s, 0).unwrap();
        let expect = (-2.0f64).exp() / 4.0;
        assert!((q.var_min - expect).abs() < 1e-10, "{} vs {expect}", q.var_min);
        assert!((q.squeezing_degree - 100.0 * (1.0 - (-2.0f64).exp())).abs() < 1e-8);
        // real negative <a²>: squeezed along X
        assert!(q.theta_min.abs() < 1e-9 || (q.theta_min - PI).abs() < 1e-9);
    }

    #[test]
    fn minimisation_covariant_under_phase_rotation() {
        let s = squeezed_vacuum(60, 0.7, 0.0);
        let rot = squeezed_vacuum(60, 0.7, 1.1);
        let q0 = min_quadrature_variance(&s, 0).unwrap();
        let q1 = min_quadrature_variance(&rot, 0).unwrap();
        assert!((q0.var_min - q1.var_min).abs() < 1e-12);
        assert!((q0.theta_min - q1.theta_min).abs() > 0.1);
    }

    #[test]
    fn photon_numbers_purity_fidelity() {
        assert!((photon_number(&State::fock(5, 2).unwrap(), 0).unwrap() - 2.0).abs() < 1e-15);

        let space = HilbertSpace::new(vec![Factor::Mode(2), Factor::Atom]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = DVector::zeros(4);
        v[space.basis_index(&[0, 1]).unwrap()] = C64::new(s, 0.0);
        v[space.basis_index(&[1, 0]).unwrap()] = C64::new(s, 0.0);
        let bell = State::pure(space, v).unwrap();
        assert!((field_purity(&bell).unwrap() - 0.5).abs() < 1e-15);
        assert!((purity(&bell) - 1.0).abs() < 1e-15);
        assert!((fidelity(&bell, &bell).unwrap() - 1.0).abs() < 1e-15);
        assert!((fidelity(&bell, &bell.to_mixed()).unwrap() - 1.0).abs() < 1e-15);
        assert!((fidelity(&bell.to_mixed(), &bell.to_mixed()).unwrap() - 1.0).abs() < 1e-7);
        assert!((excited_population(&bell).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tail_weights() {
        assert_eq!(truncation_tail(&State::vacuum(10).unwrap(), 0, 3).unwrap(), 0.0);
        assert!((truncation_tail(&State::fock(10, 9).unwrap(), 0, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!(truncation_tail(&State::vacuum(4).unwrap(), 0, 4).is_err());
    }

    /// Independent oracle: P(2m) = tanh^{2m} r (2m)! / (2^m m!)² / cosh r,
    /// renormalised on the truncated space.
    fn squeezed_tail_oracle(r: f64, cutoff: usize, k: usize) -> f64 {
        let p = |n: usize| -> f64 {
            if n % 2 == 1 {
                return 0.0;
            }
            let m = n / 2;
            let mut log = (2 * m) as f64 * r.tanh().ln() - r.cosh().ln();
            for j in 1..=2 * m {
                log += (j as f64).ln();
            }
            for j in 1..=m {
                log -= 2.0 * ((2 * j) as f64).ln();
            }
            log.exp()
        };
        let total: f64 = (0..cutoff).map(p).sum();
        (cutoff - k..cutoff).map(p).sum::<f64>() / total
    }

    #[test]
    fn squeezed_vacuum_tail_matches_fock_distribution() {
        let s = squeezed_vacuum(30, 1.0, 0.0);
        let tail = truncation_tail(&s, 0, 5).unwrap();
        let oracle = squeezed_tail_oracle(1.0, 30, 5);
        assert!((tail - oracle).abs() < 1e-15);
        // frozen from the oracle: r = 1 still leaves ~1.3e-4 in levels 25..29
        assert!((oracle - 1.317_23e-4).abs() < 1e-8, "{oracle:e}");
    }

    /// `<X²> − <X>²` from an explicit quadrature matrix.
    /// The state is padded by two empty levels so the truncated `a a†` is exact on it.
    fn direct_variance(s: &State, theta: f64) -> f64 {
        let StateKind::Pure(v) = s.kind() else { unreachable!() };
        let dim = v.len() + 2;
        let padded = DVector::from_fn(dim, |i, _| if i < v.len() { v[i] } else { C64::new(0.0, 0.0) });
        let s = &State::pure(HilbertSpace::mode(dim).unwrap(), padded).unwrap();
        let a = crate::fock_algebra::annihilation(dim).unwrap();
        let x = &a.scale(C64::from_polar(0.5, -theta)) + &a.dagger().scale(C64::from_polar(0.5, theta));
        let m1 = crate::fock_algebra::expectation(s, &x).unwrap().re;
        let m2 = crate::fock_algebra::expectation(s, &(&x * &x)).unwrap().re;
        m2 - m1 * m1
    }

    /// 721-point grid followed by golden-section refinement of the best cell.
    fn grid_minimum(s: &State) -> (f64, f64) {
        let h = PI / 720.0;
        let best = (0..721)
            .map(|i| (h * i as f64, direct_variance(s, h * i as f64)))
            .fold((0.0, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
        let (mut lo, mut hi) = (best.0 - h, best.0 + h);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        while hi - lo > 1e-9 {
            let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
            if direct_variance(s, x1) < direct_variance(s, x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        let th = 0.5 * (lo + hi);
        (th, direct_variance(s, th))
    }

    fn arb_state() -> impl Strategy<Value = State> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12).prop_map(|v| {
            let mut psi = DVector::from_iterator(12, v.into_iter().map(|(r, i)| C64::new(r, i)));
            // bias toward low photon numbers so moments stay meaningful
            for n in 0..12 {
                psi[n] *= C64::new((-0.6 * n as f64).exp(), 0.0);
            }
            let norm = psi.norm().max(1e-6);
            State::pure(HilbertSpace::mode(12).unwrap(), psi / C64::new(norm, 0.0)).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn closed_form_minimum_matches_grid(s in arb_state()) {
            let q = min_quadrature_variance(&s, 0).unwrap();
            let (th_grid, var_grid) = grid_minimum(&s);
            prop_assert!(q.var_min <= var_grid + 1e-12);
            prop_assert!((var_grid - q.var_min).abs() < 1e-9, "{} vs {}", var_grid, q.var_min);
            prop_assert!((q.var_at(q.theta_min) - q.var_min).abs() < 1e-12);
            prop_assert!((direct_variance(&s, th_grid) - q.var_at(th_grid)).abs() < 1e-12);
            prop_assert!((0.0..PI).contains(&q.theta_min));
        }

        #[test]
        fn uncertainty_relation(s in arb_state(), th in 0.0f64..PI) {
            let m = mode_moments(&s, 0).unwrap();
            // truncation can only lower <[a, a†]>, so test on states far from the cutoff
            let tail = truncation_tail(&s, 0, 4).unwrap();
            prop_assume!(tail < 1e-3);
            prop_assert!(m.variance_at(th) + m.variance_at(th + PI / 2.0) >= 0.5 - 4.0 * 11.0 * tail);
        }
    }
}
