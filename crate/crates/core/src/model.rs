//! The driven two-level atom coupled to one or two cavity modes, written in
//! the lab frame, the interaction picture and the dressed laser frame.
//!
//! Every frame is returned as a [`HarmonicHamiltonian`]: a list of static
//! operators with complex amplitudes and real oscillation frequencies,
//! `H(t) = Σ c h e^{iωt} (+ h.c.)`. All quantities are in units of `λ_a`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;

use crate::error::{Error, Margin, Result};
use crate::fock_algebra::{
    annihilation, atomic_projector, embed, number, HilbertSpace, Level, Operator, C64,
};

/// Physical parameters of the driven atom-cavity system.
///
/// Detunings are stored directly (`δ_x = ω0 − ω_x`) so that resonance
/// conditions such as `δ1 = 0` are exact; the bare frequencies are derived.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemParams {
    pub omega0: f64,
    pub delta_a: f64,
    pub delta_b: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub omega1_mag: f64,
    pub phi1: f64,
    pub omega2_mag: f64,
    pub phi2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub gamma_f: f64,
    pub gamma_a: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            omega0: 0.0,
            delta_a: 0.0,
            delta_b: 0.0,
            lambda_a: 1.0,
            lambda_b: 0.0,
            omega1_mag: 0.0,
            phi1: 0.0,
            omega2_mag: 0.0,
            phi2: 0.0,
            delta1: 0.0,
            delta2: 0.0,
            gamma_f: 0.0,
            gamma_a: 0.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("omega0", self.omega0),
            ("delta_a", self.delta_a),
            ("delta_b", self.delta_b),
            ("lambda_a", self.lambda_a),
            ("lambda_b", self.lambda_b),
            ("omega1_mag", self.omega1_mag),
            ("phi1", self.phi1),
            ("omega2_mag", self.omega2_mag),
            ("phi2", self.phi2),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("gamma_f", self.gamma_f),
            ("gamma_a", self.gamma_a),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(Error::Configuration(format!("{name} is not finite")));
            }
        }
        let nonneg = [
            ("lambda_a", self.lambda_a),
            ("lambda_b", self.lambda_b),
            ("omega1_mag", self.omega1_mag),
            ("omega2_mag", self.omega2_mag),
            ("gamma_f", self.gamma_f),
            ("gamma_a", self.gamma_a),
        ];
        for (name, v) in nonneg {
            if v < 0.0 {
                return Err(Error::Configuration(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn omega_a(&self) -> f64 {
        self.omega0 - self.delta_a
    }

    pub fn omega_b(&self) -> f64 {
        self.omega0 - self.delta_b
    }

    pub fn omega1(&self) -> f64 {
        self.omega0 - self.delta1
    }

    pub fn omega2(&self) -> f64 {
        self.omega0 - self.delta2
    }

    /// Complex drive amplitude `Ω1 = |Ω1| e^{iφ1}`.
    pub fn drive1(&self) -> C64 {
        C64::from_polar(self.omega1_mag, self.phi1)
    }

    pub fn drive2(&self) -> C64 {
        C64::from_polar(self.omega2_mag, self.phi2)
    }

    /// `λ̃_a = λ_a e^{−iφ1}`.
    pub fn lambda_tilde_a(&self) -> C64 {
        C64::from_polar(self.lambda_a, -self.phi1)
    }

    pub fn lambda_tilde_b(&self) -> C64 {
        C64::from_polar(self.lambda_b, -self.phi1)
    }

    /// `Ω̃2 = Ω2 e^{−iφ1} / 2`.
    pub fn omega2_tilde(&self) -> C64 {
        self.drive2() * C64::from_polar(0.5, -self.phi1)
    }

    /// Two-photon coupling `χ = |λ̃_a|² / (4|Ω2|)`, when a second drive exists.
    pub fn chi(&self) -> Option<f64> {
        (self.omega2_mag > 0.0).then(|| self.lambda_a * self.lambda_a / (4.0 * self.omega2_mag))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicTerm {
    pub op: Operator,
    pub amplitude: C64,
    pub frequency: f64,
}

/// `H(t) = Σ_k c_k h_k e^{iω_k t}`, plus `Σ_k conj(c_k) h_k† e^{−iω_k t}` when
/// `hermitian_closure` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicHamiltonian {
    space: HilbertSpace,
    terms: Vec<HarmonicTerm>,
    hermitian_closure: bool,
}

impl HarmonicHamiltonian {
    pub fn new(space: HilbertSpace, hermitian_closure: bool) -> Self {
        Self { space, terms: Vec::new(), hermitian_closure }
    }

    pub fn push(&mut self, op: Operator, amplitude: C64, frequency: f64) -> Result<()> {
        if op.space() != &self.space {
            return Err(Error::SpaceMismatch(format!(
                "term on {:?} pushed into {:?}",
                op.space().factors(),
                self.space.factors()
            )));
        }
        if !frequency.is_finite() || !amplitude.re.is_finite() || !amplitude.im.is_finite() {
            return Err(Error::Configuration("term amplitude and frequency must be finite".into()));
        }
        self.terms.push(HarmonicTerm { op, amplitude, frequency });
        Ok(())
    }

    /// Adds a static Hermitian operator so that it appears exactly once in `H(t)`.
    pub fn push_static_hermitian(&mut self, op: Operator) -> Result<()> {
        let amp = if self.hermitian_closure { 0.5 } else { 1.0 };
        self.push(op, C64::new(amp, 0.0), 0.0)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn terms(&self) -> &[HarmonicTerm] {
        &self.terms
    }

    pub fn hermitian_closure(&self) -> bool {
        self.hermitian_closure
    }

    /// Each oscillating component `(A_j, ω_j)` with the conjugates spelled out.
    pub fn components(&self) -> Vec<(Operator, f64)> {
        let mut out = Vec::with_capacity(self.terms.len() * 2);
        for t in &self.terms {
            let a = t.op.scale(t.amplitude);
            if self.hermitian_closure {
                out.push((a.dagger(), -t.frequency));
            }
            out.push((a, t.frequency));
        }
        out
    }

    pub fn evaluate(&self, t: f64) -> Operator {
        let d = self.space.total_dim();
        let mut m = DMatrix::zeros(d, d);
        for (op, w) in self.components() {
            m += op.matrix() * C64::from_polar(1.0, w * t);
        }
        Operator::new(self.space.clone(), m).expect("dimension preserved")
    }

    pub fn max_frequency(&self) -> f64 {
        self.terms.iter().map(|t| t.frequency.abs()).fold(0.0, f64::max)
    }
}

/// A generator `H(t) = Σ_j f_j(t) P_j` over fixed operators `P_j`.
///
/// `segment_mid` is the midpoint of the integration segment containing `t`;
/// piecewise generators use it to pick their window so that stage evaluations
/// on a segment boundary never see the neighbouring window.
pub trait TimeDependentHamiltonian: Sync {
    fn space(&self) -> &HilbertSpace;
    fn parts(&self) -> Vec<Operator>;
    fn coefficients(&self, t: f64, segment_mid: f64, out: &mut [C64]);
    /// Times where the generator switches discontinuously.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    /// Fastest explicit oscillation frequency.
    fn max_frequency(&self) -> f64;
    /// Upper bound on `‖H(t)‖₂`, used to pick default step sizes.
    fn norm_bound(&self) -> f64 {
        self.parts().iter().map(spectral_bound).sum()
    }

    fn evaluate(&self, t: f64) -> Operator {
        let parts = self.parts();
        let mut c = vec![C64::new(0.0, 0.0); parts.len()];
        self.coefficients(t, t, &mut c);
        let d = self.space().total_dim();
        let mut m = DMatrix::zeros(d, d);
        for (p, ci) in parts.iter().zip(&c) {
            m += p.matrix() * *ci;
        }
        Operator::new(self.space().clone(), m).expect("dimension preserved")
    }
}

/// `‖P‖₂ ≤ √(‖P‖₁ ‖P‖∞)`.
fn spectral_bound(p: &Operator) -> f64 {
    let m = p.matrix();
    let col = m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let row = m.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    (col * row).sqrt()
}

impl TimeDependentHamiltonian for HarmonicHamiltonian {
    fn space(&self) -> &HilbertSpace {
        &self.space
    }

    fn parts(&self) -> Vec<Operator> {
        self.components().into_iter().map(|(op, _)| op).collect()
    }

    fn coefficients(&self, t: f64, _segment_mid: f64, out: &mut [C64]) {
        let mut k = 0;
        for term in &self.terms {
            if self.hermitian_closure {
                out[k] = C64::from_polar(1.0, -term.frequency * t);
                k += 1;
            }
            out[k] = C64::from_polar(1.0, term.frequency * t);
            k += 1;
        }
    }

    fn max_frequency(&self) -> f64 {
        HarmonicHamiltonian::max_frequency(self)
    }

    fn evaluate(&self, t: f64) -> Operator {
        HarmonicHamiltonian::evaluate(self, t)
    }
}

/// Embedded operators for the factors present in a scenario space.
pub(crate) struct Ladder {
    pub a: Option<Operator>,
    pub b: Option<Operator>,
    /// σ_eg = |e><g|
    pub sigma_eg: Option<Operator>,
}

impl Ladder {
    pub fn new(space: &HilbertSpace) -> Result<Self> {
        let mode = |k: usize| -> Result<Option<Operator>> {
            match space.mode_slot(k) {
                Some(slot) => {
                    let dim = space.factor_dim(slot);
                    Ok(Some(embed(&annihilation(dim)?, slot, space)?))
                }
                None => Ok(None),
            }
        };
        let sigma_eg = match space.atom_slot() {
            Some(slot) => {
                Some(embed(&atomic_projector(Level::Ground, Level::Excited), slot, space)?)
            }
            None => None,
        };
        Ok(Self { a: mode(0)?, b: mode(1)?, sigma_eg })
    }

    pub fn a(&self) -> Result<&Operator> {
        self.a.as_ref().ok_or_else(|| Error::SpaceMismatch("mode a is absent from the space".into()))
    }

    pub fn b(&self) -> Result<&Operator> {
        self.b.as_ref().ok_or_else(|| Error::SpaceMismatch("mode b is absent from the space".into()))
    }

    pub fn sigma_eg(&self) -> Result<&Operator> {
        self.sigma_eg
            .as_ref()
            .ok_or_else(|| Error::SpaceMismatch("the atom is absent from the space".into()))
    }
}

fn number_embedded(space: &HilbertSpace, k: usize) -> Result<Option<Operator>> {
    match space.mode_slot(k) {
        Some(slot) => Ok(Some(embed(&number(space.factor_dim(slot))?, slot, space)?)),
        None => Ok(None),
    }
}

fn atomic_inversion(space: &HilbertSpace) -> Result<Operator> {
    let slot = space
        .atom_slot()
        .ok_or_else(|| Error::SpaceMismatch("the atom is absent from the space".into()))?;
    let sz = &atomic_projector(Level::Excited, Level::Excited)
        - &atomic_projector(Level::Ground, Level::Ground);
    embed(&sz, slot, space)
}

fn require_b_if_coupled(params: &SystemParams, space: &HilbertSpace) -> Result<()> {
    if params.lambda_b != 0.0 && space.mode_slot(1).is_none() {
        return Err(Error::SpaceMismatch("λ_b ≠ 0 but mode b is absent from the space".into()));
    }
    Ok(())
}

/// Full lab-frame Hamiltonian `H0 + V(t)` with the drives kept explicit.
pub fn build_lab_hamiltonian(params: &SystemParams, space: &HilbertSpace) -> Result<HarmonicHamiltonian> {
    params.validate()?;
    require_b_if_coupled(params, space)?;
    let ops = Ladder::new(space)?;
    let seg = ops.sigma_eg()?.clone();
    let a = ops.a()?;

    let mut h0 = number_embedded(space, 0)?.expect("mode a present").scale(params.omega_a().into());
    if let Some(nb) = number_embedded(space, 1)? {
        h0 = &h0 + &nb.scale(params.omega_b().into());
    }
    h0 = &h0 + &atomic_inversion(space)?.scale((params.omega0 / 2.0).into());

    let mut h = HarmonicHamiltonian::new(space.clone(), true);
    h.push_static_hermitian(h0)?;
    h.push(a * &seg, params.lambda_a.into(), 0.0)?;
    if params.lambda_b != 0.0 {
        h.push(ops.b()? * &seg, params.lambda_b.into(), 0.0)?;
    }
    if params.omega1_mag != 0.0 {
        h.push(seg.clone(), params.drive1(), -params.omega1())?;
    }
    if params.omega2_mag != 0.0 {
        h.push(seg, params.drive2(), -params.omega2())?;
    }
    Ok(h)
}

/// Interaction-picture coupling: every term oscillates at its detuning.
pub fn build_interaction_picture(
    params: &SystemParams,
    space: &HilbertSpace,
) -> Result<HarmonicHamiltonian> {
    params.validate()?;
    require_b_if_coupled(params, space)?;
    let ops = Ladder::new(space)?;
    let seg = ops.sigma_eg()?.clone();
    let mut h = HarmonicHamiltonian::new(space.clone(), true);
    if params.lambda_a != 0.0 {
        h.push(ops.a()? * &seg, params.lambda_a.into(), params.delta_a)?;
    }
    if params.lambda_b != 0.0 {
        h.push(ops.b()? * &seg, params.lambda_b.into(), params.delta_b)?;
    }
    if params.omega1_mag != 0.0 {
        h.push(seg.clone(), params.drive1(), params.delta1)?;
    }
    if params.omega2_mag != 0.0 {
        h.push(seg, params.drive2(), params.delta2)?;
    }
    Ok(h)
}

/// Dressed atomic states `|±> = (e^{iφ1}|e> ± |g>)/√2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dressed {
    Plus,
    Minus,
}

/// `|to><from|` in the dressed basis, written in the bare `{|g>, |e>}` basis.
pub fn dressed_projector(from: Dressed, to: Dressed, phi1: f64) -> Operator {
    let ket = |d: Dressed| {
        let s = match d {
            Dressed::Plus => 1.0,
            Dressed::Minus => -1.0,
        };
        [C64::new(s * FRAC_1_SQRT_2, 0.0), C64::from_polar(FRAC_1_SQRT_2, phi1)]
    };
    let (k, b) = (ket(to), ket(from));
    let m = DMatrix::from_fn(2, 2, |i, j| k[i] * b[j].conj());
    Operator::new(HilbertSpace::atom(), m).expect("2x2")
}

pub const DEFAULT_MUCH_GREATER: f64 = 10.0;
pub const DEFAULT_SIMILAR: f64 = 3.0;

/// Numerical meaning of the `≫` and `∼` relations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    /// `x ≫ y` holds when `x / y ≥ much_greater`.
    pub much_greater: f64,
    /// `x ∼ y` holds when the two agree within this factor.
    pub similar: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { much_greater: DEFAULT_MUCH_GREATER, similar: DEFAULT_SIMILAR }
    }
}

fn ratio(x: f64, y: f64) -> f64 {
    if y == 0.0 {
        if x == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        x / y
    }
}

impl Thresholds {
    fn much(&self, label: &str, big: f64, small: f64) -> Margin {
        Margin::new(label, ratio(big.abs(), small.abs()), self.much_greater)
    }

    /// Reported as `similar * min/max`, passing at ≥ 1.
    fn sim(&self, label: &str, x: f64, y: f64) -> Margin {
        let (lo, hi) = if x.abs() <= y.abs() { (x.abs(), y.abs()) } else { (y.abs(), x.abs()) };
        Margin::new(label, self.similar * ratio(lo, hi), 1.0)
    }

    /// `x ≳ y`: not smaller than `y` by more than the similarity factor.
    fn at_least(&self, label: &str, x: f64, y: f64) -> Margin {
        Margin::new(label, self.similar * ratio(x.abs(), y.abs()), 1.0)
    }
}

/// Build the dressed laser-frame Hamiltonian for a single drive.
pub fn build_laser_frame(
    params: &SystemParams,
    space: &HilbertSpace,
    thresholds: &Thresholds,
) -> Result<HarmonicHamiltonian> {
    params.validate()?;
    require_b_if_coupled(params, space)?;
    if params.omega2_mag != 0.0 {
        return Err(Error::Configuration("the laser frame assumes a single drive (Ω2 = 0)".into()));
    }
    let has_b = space.mode_slot(1).is_some() && params.lambda_b != 0.0;
    let mut margins = vec![
        thresholds.much("|Ω1| ≫ δ1", params.omega1_mag, params.delta1),
        thresholds.much("|δa| ≫ δ1", params.delta_a, params.delta1),
    ];
    if has_b {
        margins.push(thresholds.much("|δb| ≫ δ1", params.delta_b, params.delta1));
    }
    if margins.iter().any(|m| !m.passed()) {
        return Err(Error::RegimeValidity(margins));
    }

    let ops = Ladder::new(space)?;
    let slot = space.atom_slot().ok_or_else(|| Error::SpaceMismatch("the atom is absent".into()))?;
    let lift = |d_from, d_to| embed(&dressed_projector(d_from, d_to, params.phi1), slot, space);
    let spp = lift(Dressed::Plus, Dressed::Plus)?;
    let smm = lift(Dressed::Minus, Dressed::Minus)?;
    let sz_dressed = &spp - &smm;
    let s_pm = lift(Dressed::Minus, Dressed::Plus)?; // σ_{+-} = |+><-|
    let s_mp = lift(Dressed::Plus, Dressed::Minus)?;
    let two_omega = 2.0 * params.omega1_mag;

    let mut h = HarmonicHamiltonian::new(space.clone(), true);
    let mut modes = vec![(ops.a()?, params.lambda_tilde_a(), params.delta_a)];
    if has_b {
        modes.push((ops.b()?, params.lambda_tilde_b(), params.delta_b));
    }
    for (mode, lt, delta) in modes {
        let base = delta - params.delta1;
        let half = lt * 0.5;
        h.push(mode * &sz_dressed, half, base)?;
        h.push(mode * &s_pm, -half, base + two_omega)?;
        h.push(mode * &s_mp, half, base - two_omega)?;
    }
    Ok(h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegimeTag {
    Weak,
    Intermediate,
    Strong,
}

impl RegimeTag {
    pub fn name(self) -> &'static str {
        match self {
            RegimeTag::Weak => "weak",
            RegimeTag::Intermediate => "intermediate",
            RegimeTag::Strong => "strong",
        }
    }
}

impl std::str::FromStr for RegimeTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "weak" | "w" => Ok(RegimeTag::Weak),
            "intermediate" | "i" => Ok(RegimeTag::Intermediate),
            "strong" | "s" => Ok(RegimeTag::Strong),
            other => Err(Error::Parse(format!("unknown regime `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Regime {
    pub tag: RegimeTag,
    pub margins: Vec<Margin>,
}

/// Every inequality a regime asserts, evaluated on `params`.
///
/// Mode b enters only when it is coupled (`λ_b > 0`).
pub fn regime_margins(params: &SystemParams, tag: RegimeTag, th: &Thresholds) -> Vec<Margin> {
    let has_b = params.lambda_b > 0.0;
    let om = params.omega1_mag;
    let (da, db) = (params.delta_a, params.delta_b);
    let lam_max = params.lambda_a.max(if has_b { params.lambda_b } else { 0.0 });
    let d_min = if has_b { da.abs().min(db.abs()) } else { da.abs() };
    let d_max = if has_b { da.abs().max(db.abs()) } else { da.abs() };

    let mut m = Vec::new();
    match tag {
        RegimeTag::Weak => {
            m.push(th.much("min|δ| ≫ |Ω1|", d_min, om));
            m.push(th.at_least("|Ω1| ≳ |λ̃|", om, lam_max));
            if has_b {
                m.push(th.sim("|δa| ∼ |δb|", da, db));
                m.push(th.sim("|λ̃a| ∼ |λ̃b|", params.lambda_a, params.lambda_b));
            }
        }
        RegimeTag::Intermediate => {
            m.push(th.sim("|Ω1| ∼ |δa|", om, da));
            if has_b {
                m.push(th.sim("|Ω1| ∼ |δb|", om, db));
                m.push(th.sim("|δa| ∼ |δb|", da, db));
                m.push(th.sim("|λ̃a| ∼ |λ̃b|", params.lambda_a, params.lambda_b));
            }
            m.push(th.much("min(|Ω1|,|δ|) ≫ |λ̃|", om.min(d_min), lam_max));
        }
        RegimeTag::Strong => {
            m.push(th.much("|Ω1| ≫ max|δ|", om, d_max));
            m.push(th.much("min|δ| ≫ |λ̃|", d_min, lam_max));
            if has_b {
                m.push(th.sim("|δa| ∼ |δb|", da, db));
                m.push(th.sim("|λ̃a| ∼ |λ̃b|", params.lambda_a, params.lambda_b));
            }
        }
    }
    let mut modes = vec![("a", da, params.lambda_a)];
    if has_b {
        modes.push(("b", db, params.lambda_b));
    }
    for (name, d, lam) in modes {
        let lo = (2.0 * om - (d - params.delta1)).abs().min((2.0 * om + (d - params.delta1)).abs());
        m.push(th.much(&format!("|2Ω1 ± (δ{name} − δ1)| ≫ |λ̃{name}|"), lo, lam));
    }
    m
}

/// Assign the amplification regime whose inequality chain holds.
pub fn classify_regime(params: &SystemParams, th: &Thresholds) -> Result<Regime> {
    params.validate()?;
    if params.omega2_mag != 0.0 {
        return Err(Error::Configuration("regimes are defined for a single drive (Ω2 = 0)".into()));
    }
    let mut all = Vec::new();
    for tag in [RegimeTag::Strong, RegimeTag::Intermediate, RegimeTag::Weak] {
        let margins = regime_margins(params, tag, th);
        if margins.iter().all(Margin::passed) {
            return Ok(Regime { tag, margins });
        }
        all.extend(margins.into_iter().map(|mut m| {
            m.label = format!("{}: {}", tag.name(), m.label);
            m
        }));
    }
    Err(Error::Unclassifiable(all))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_algebra::{max_abs_diff, Factor};
    use proptest::prelude::*;

    fn mode_atom(n: usize) -> HilbertSpace {
        HilbertSpace::new(vec![Factor::Mode(n), Factor::Atom]).unwrap()
    }

    fn fig3() -> SystemParams {
        SystemParams {
            omega0: 1e5,
            delta_a: 0.025,
            lambda_a: 1.0,
            omega1_mag: 400.0,
            omega2_mag: 20.0,
            delta2: -800.0,
            ..Default::default()
        }
    }

    #[test]
    fn lab_frame_term_bookkeeping() {
        let p = SystemParams {
            omega0: 50.0,
            delta_a: 1.0,
            omega1_mag: 2.0,
            delta1: 0.5,
            ..Default::default()
        };
        let space = mode_atom(4);
        let h = build_lab_hamiltonian(&p, &space).unwrap();
        // static H0, the a-coupling and one drive
        assert_eq!(h.terms().len(), 3);
        assert!(h.evaluate(0.37).is_hermitian(1e-12));
    }

    #[test]
    fn lab_frame_atomic_energy() {
        let p = SystemParams { omega0: 1e5, ..Default::default() };
        let space = mode_atom(3);
        let h = build_lab_hamiltonian(&p, &space).unwrap().evaluate(0.0);
        let e0 = space.basis_index(&[0, 1]).unwrap();
        assert!((h.get(e0, e0) - C64::new(5e4, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn lab_frame_requires_present_modes() {
        let p = SystemParams { lambda_b: 1.0, ..Default::default() };
        assert!(matches!(
            build_lab_hamiltonian(&p, &mode_atom(3)),
            Err(Error::SpaceMismatch(_))
        ));
        assert!(build_interaction_picture(&SystemParams::default(), &HilbertSpace::mode(3).unwrap()).is_err());
    }

    #[test]
    fn interaction_picture_structure() {
        let p = fig3();
        let h = build_interaction_picture(&p, &mode_atom(5)).unwrap();
        let drive = h.terms().iter().find(|t| t.amplitude == C64::new(400.0, 0.0)).unwrap();
        assert_eq!(drive.frequency, 0.0);
        assert_eq!(h.max_frequency(), 800.0);
        let atom = 1;
        for t in h.terms() {
            let m = t.op.matrix();
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    let (ai, aj) = (i % 2, j % 2);
                    if m[(i, j)] != C64::new(0.0, 0.0) {
                        assert!(ai == atom && aj == 0, "entry above the σ_eg block");
                    }
                }
            }
        }
        assert!(h.evaluate(1.234).is_hermitian(1e-12));
    }

    #[test]
    fn dressed_inversion_at_zero_phase() {
        let sz = &dressed_projector(Dressed::Plus, Dressed::Plus, 0.0)
            - &dressed_projector(Dressed::Minus, Dressed::Minus, 0.0);
        let sx = &atomic_projector(Level::Ground, Level::Excited)
            + &atomic_projector(Level::Excited, Level::Ground);
        assert!(max_abs_diff(sz.matrix(), sx.matrix()) < 1e-15);
    }

    #[test]
    fn drive_is_diagonal_in_dressed_basis() {
        let phi = 0.7;
        let p = SystemParams { omega1_mag: 3.0, phi1: phi, ..Default::default() };
        let drive = &atomic_projector(Level::Ground, Level::Excited).scale(p.drive1());
        let drive = drive + &drive.dagger();
        let sz = &dressed_projector(Dressed::Plus, Dressed::Plus, phi)
            - &dressed_projector(Dressed::Minus, Dressed::Minus, phi);
        assert!(max_abs_diff(drive.matrix(), sz.scale(3.0.into()).matrix()) < 1e-14);
    }

    #[test]
    fn laser_frame_frequencies() {
        let p = SystemParams {
            delta_a: 30.0,
            omega1_mag: 10.0,
            delta1: 0.1,
            ..Default::default()
        };
        let h = build_laser_frame(&p, &mode_atom(3), &Thresholds::default()).unwrap();
        let mut f: Vec<f64> = h.terms().iter().map(|t| t.frequency).collect();
        f.sort_by(|a, b| a.total_cmp(b));
        let base = 30.0 - 0.1;
        let expect = [base - 20.0, base, base + 20.0];
        for (x, y) in f.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn laser_frame_rejects_large_delta1() {
        let p = SystemParams { delta_a: 30.0, omega1_mag: 10.0, delta1: 5.0, ..Default::default() };
        match build_laser_frame(&p, &mode_atom(3), &Thresholds::default()) {
            Err(Error::RegimeValidity(m)) => assert!(m.iter().any(|m| !m.passed())),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn regime_examples() {
        let th = Thresholds::default();
        let strong = SystemParams { omega1_mag: 400.0, delta_a: 20.0, ..Default::default() };
        assert_eq!(classify_regime(&strong, &th).unwrap().tag, RegimeTag::Strong);

        let inter = SystemParams {
            omega1_mag: 10.0,
            delta_a: 30.0,
            delta_b: 30.0,
            lambda_b: 1.0,
            ..Default::default()
        };
        assert_eq!(classify_regime(&inter, &th).unwrap().tag, RegimeTag::Intermediate);

        let weak = SystemParams { omega1_mag: 2.0, delta_a: 100.0, ..Default::default() };
        assert_eq!(classify_regime(&weak, &th).unwrap().tag, RegimeTag::Weak);

        let none = SystemParams { omega1_mag: 50.0, delta_a: 5.0, ..Default::default() };
        assert!(matches!(classify_regime(&none, &th), Err(Error::Unclassifiable(_))));
    }

    #[test]
    fn regime_margins_reported() {
        let p = SystemParams { omega1_mag: 400.0, delta_a: 20.0, ..Default::default() };
        let r = classify_regime(&p, &Thresholds::default()).unwrap();
        let m = r.margins.iter().find(|m| m.label.starts_with("|Ω1| ≫")).unwrap();
        assert!((m.ratio - 20.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn classification_is_scale_invariant(
            om in 0.5f64..500.0, da in 0.5f64..500.0, scale in 1e-3f64..1e3
        ) {
            let th = Thresholds::default();
            let p = SystemParams { omega1_mag: om, delta_a: da, ..Default::default() };
            let q = SystemParams {
                omega1_mag: om * scale,
                delta_a: da * scale,
                lambda_a: scale,
                ..Default::default()
            };
            let a = classify_regime(&p, &th).ok().map(|r| r.tag);
            let b = classify_regime(&q, &th).ok().map(|r| r.tag);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn evaluated_hamiltonians_are_hermitian(t in -50.0f64..50.0, phi in 0.0f64..6.28) {
            let p = SystemParams {
                omega0: 40.0,
                delta_a: 1.5,
                delta_b: -2.0,
                lambda_b: 0.7,
                omega1_mag: 3.0,
                phi1: phi,
                omega2_mag: 1.1,
                phi2: 0.3,
                delta1: 0.2,
                delta2: -6.0,
                ..Default::default()
            };
            let space = HilbertSpace::new(vec![Factor::Mode(3), Factor::Mode(3), Factor::Atom]).unwrap();
            prop_assert!(build_lab_hamiltonian(&p, &space).unwrap().evaluate(t).is_hermitian(1e-12));
            prop_assert!(build_interaction_picture(&p, &space).unwrap().evaluate(t).is_hermitian(1e-12));
            let single = SystemParams { omega2_mag: 0.0, delta1: 0.0, ..p };
            let lf = build_laser_frame(&single, &space, &Thresholds::default()).unwrap();
            prop_assert!(lf.evaluate(t).is_hermitian(1e-12));
        }
    }
}
