//! Engineered effective Hamiltonians and their closed-form couplings.
//!
//! Covers two-mode down-conversion (`Λ ab + h.c.`), up-conversion
//! (`Σ ab† e^{iΦt} + h.c.`), single-mode squeezing, the atom-conditioned
//! squeezing generator, anti-Jaynes-Cummings and its pulsed alternation with
//! Jaynes-Cummings, plus a numerical second-order time-averaging extractor.

use crate::error::{Error, Margin, Result};
use crate::fock_algebra::{embed, number, atomic_projector, HilbertSpace, Level, Operator, C64};
use crate::model::{
    regime_margins, HarmonicHamiltonian, Ladder, RegimeTag, SystemParams, Thresholds,
    TimeDependentHamiltonian,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CouplingKind {
    Pdc,
    Puc,
    Squeeze,
}

impl CouplingKind {
    pub fn name(self) -> &'static str {
        match self {
            CouplingKind::Pdc => "pdc",
            CouplingKind::Puc => "puc",
            CouplingKind::Squeeze => "squeeze",
        }
    }
}

impl std::str::FromStr for CouplingKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pdc" => Ok(CouplingKind::Pdc),
            "puc" => Ok(CouplingKind::Puc),
            "squeeze" | "squeezing" => Ok(CouplingKind::Squeeze),
            other => Err(Error::Parse(format!("unknown coupling kind `{other}`"))),
        }
    }
}

/// Prepared atomic branch: dressed `|±>` for PDC/PUC, `|↑>`/`|↓>` for squeezing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
    Up,
    Down,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus | Branch::Up => 1.0,
            Branch::Minus | Branch::Down => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
            Branch::Up => "up",
            Branch::Down => "down",
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plus" | "+" => Ok(Branch::Plus),
            "minus" | "-" => Ok(Branch::Minus),
            "up" | "↑" => Ok(Branch::Up),
            "down" | "↓" => Ok(Branch::Down),
            other => Err(Error::Parse(format!("unknown branch `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveCoupling {
    pub kind: CouplingKind,
    pub branch: Branch,
    /// Absent for squeezing, which has a single hierarchy.
    pub regime: Option<RegimeTag>,
    /// `Λ`, `Σ`, or the full `a²` amplitude `∓χ e^{−2iφ1}`.
    pub coupling: C64,
    /// `Φ` for up-conversion, zero otherwise.
    pub residual_phase: f64,
    /// `δ1` for down-conversion, `δa` for squeezing.
    pub required_detuning: Option<f64>,
}

const EQUALITY_TOL: f64 = 1e-9;

fn approx_eq(x: f64, y: f64) -> bool {
    (x - y).abs() <= EQUALITY_TOL * x.abs().max(y.abs()).max(1.0)
}

fn check_branch(kind: CouplingKind, branch: Branch) -> Result<()> {
    let ok = match kind {
        CouplingKind::Pdc | CouplingKind::Puc => matches!(branch, Branch::Plus | Branch::Minus),
        CouplingKind::Squeeze => matches!(branch, Branch::Up | Branch::Down),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Configuration(format!("branch `{}` does not apply to {}", branch.name(), kind.name())))
    }
}

fn nonsingular(den: f64, what: &str) -> Result<f64> {
    if den.abs() <= EQUALITY_TOL {
        Err(Error::SingularCoupling(format!("{what} vanishes")))
    } else {
        Ok(den)
    }
}

fn validate_margins(margins: Vec<Margin>) -> Result<()> {
    if margins.iter().all(Margin::passed) {
        Ok(())
    } else {
        Err(Error::RegimeValidity(margins))
    }
}

/// Down-conversion coupling `Λ±` and the compensating drive detuning `δ1`.
///
/// Requires `δa = −δb = δ > 0` and the chosen regime's inequality chain.
pub fn pdc_coupling(
    params: &SystemParams,
    branch: Branch,
    regime: RegimeTag,
    thresholds: &Thresholds,
) -> Result<EffectiveCoupling> {
    params.validate()?;
    check_branch(CouplingKind::Pdc, branch)?;
    let delta = params.delta_a;
    if !(delta > 0.0 && approx_eq(params.delta_b, -delta)) {
        return Err(Error::Configuration(format!(
            "down-conversion needs δa = −δb > 0, got δa = {}, δb = {}",
            params.delta_a, params.delta_b
        )));
    }
    if params.lambda_b <= 0.0 {
        return Err(Error::Configuration("down-conversion needs λb > 0".into()));
    }
    let om = params.omega1_mag;
    if regime == RegimeTag::Intermediate && approx_eq(om, delta) {
        return Err(Error::SingularCoupling("|Ω1| = |δ| in the intermediate regime".into()));
    }
    validate_margins(regime_margins(params, regime, thresholds))?;

    let s = branch.sign();
    let ll = params.lambda_tilde_a() * params.lambda_tilde_b();
    let sum_sq = params.lambda_a.powi(2) + params.lambda_b.powi(2);
    let d2 = delta * delta;
    let (coupling, delta1) = match regime {
        RegimeTag::Weak => (ll * (s * om / d2), s * sum_sq * om / d2),
        RegimeTag::Intermediate => {
            let den = nonsingular(d2 - 4.0 * om * om, "δ² − 4|Ω1|²")?;
            (ll * (s * om / den), -s * sum_sq * om / den)
        }
        RegimeTag::Strong => {
            let den = nonsingular(4.0 * om, "4|Ω1|")?;
            (ll * (-s / den), s * sum_sq / den)
        }
    };
    Ok(EffectiveCoupling {
        kind: CouplingKind::Pdc,
        branch,
        regime: Some(regime),
        coupling,
        residual_phase: 0.0,
        required_detuning: Some(delta1),
    })
}

/// Residual phase `Φ±` of the up-conversion coupling.
pub fn puc_phase(params: &SystemParams, branch: Branch) -> Result<f64> {
    let om = params.omega1_mag;
    let den_a = nonsingular(4.0 * om * om - params.delta_a.powi(2), "4|Ω1|² − δa²")?;
    let den_b = nonsingular(4.0 * om * om - params.delta_b.powi(2), "4|Ω1|² − δb²")?;
    let bracket = params.lambda_b.powi(2) / den_b - params.lambda_a.powi(2) / den_a;
    Ok(branch.sign() * om * bracket + params.delta_a - params.delta_b)
}

/// Up-conversion coupling `Σ±` with its residual phase `Φ±`.
pub fn puc_coupling(
    params: &SystemParams,
    branch: Branch,
    regime: RegimeTag,
    thresholds: &Thresholds,
) -> Result<EffectiveCoupling> {
    params.validate()?;
    check_branch(CouplingKind::Puc, branch)?;
    if params.lambda_b <= 0.0 {
        return Err(Error::Configuration("up-conversion needs λb > 0".into()));
    }
    let similar = Margin::new(
        "|δa| ∼ |δb|",
        thresholds.similar * params.delta_a.abs().min(params.delta_b.abs())
            / params.delta_a.abs().max(params.delta_b.abs()).max(f64::MIN_POSITIVE),
        1.0,
    );
    validate_margins(vec![similar])?;

    let s = branch.sign();
    let om = params.omega1_mag;
    let (da, db) = (params.delta_a, params.delta_b);
    let ll = params.lambda_tilde_a() * params.lambda_tilde_b().conj();
    let coupling = match regime {
        RegimeTag::Weak => ll * ((da - db) / nonsingular(2.0 * da * db, "δa δb")?),
        RegimeTag::Intermediate => ll * (s * om / nonsingular(4.0 * om * om - da * db, "4|Ω1|² − δa δb")?),
        RegimeTag::Strong => ll * (s / nonsingular(4.0 * om, "4|Ω1|")?),
    };
    Ok(EffectiveCoupling {
        kind: CouplingKind::Puc,
        branch,
        regime: Some(regime),
        coupling,
        residual_phase: puc_phase(params, branch)?,
        required_detuning: None,
    })
}

/// Single-mode squeezing `∓χ(e^{−2iφ1} a² + h.c.)` from the two-drive setup.
///
/// The returned `required_detuning` is the `δa` that cancels the `2χ a†a`
/// shift of the second-order generator: `δa = ∓2χ`.
pub fn squeeze_coupling(
    params: &SystemParams,
    branch: Branch,
    thresholds: &Thresholds,
) -> Result<EffectiveCoupling> {
    params.validate()?;
    check_branch(CouplingKind::Squeeze, branch)?;
    let chi = params
        .chi()
        .ok_or_else(|| Error::Configuration("squeezing needs a second drive (|Ω2| > 0)".into()))?;
    if params.delta1 != 0.0 {
        return Err(Error::Configuration(format!("squeezing needs δ1 = 0, got {}", params.delta1)));
    }
    if params.delta2 >= 0.0 {
        return Err(Error::Configuration(format!(
            "squeezing needs δ2 < 0, got {} (did you mean {}?)",
            params.delta2, -params.delta2
        )));
    }
    if !approx_eq(params.omega1_mag, -params.delta2 / 2.0) {
        return Err(Error::Configuration(format!(
            "squeezing needs |Ω1| = −δ2/2, got |Ω1| = {}, δ2 = {}",
            params.omega1_mag, params.delta2
        )));
    }
    let much = |label: &str, big: f64, small: f64| {
        let r = if small == 0.0 { f64::INFINITY } else { big.abs() / small.abs() };
        Margin::new(label, r, thresholds.much_greater)
    };
    validate_margins(vec![
        much("|Ω1| ≫ |λ̃a|", params.omega1_mag, params.lambda_a),
        much("|Ω1| ≫ |Ω2|", params.omega1_mag, params.omega2_mag),
        much("|Ω1| ≫ |δa|", params.omega1_mag, params.delta_a),
        much("|Ω2| ≫ |δa|", params.omega2_mag, params.delta_a),
    ])?;

    let s = branch.sign();
    Ok(EffectiveCoupling {
        kind: CouplingKind::Squeeze,
        branch,
        regime: None,
        coupling: C64::from_polar(-s * chi, -2.0 * params.phi1),
        residual_phase: 0.0,
        required_detuning: Some(-s * 2.0 * chi),
    })
}

/// Field-only effective generator; any atom factor is a spectator.
pub fn build_effective_hamiltonian(
    coupling: &EffectiveCoupling,
    space: &HilbertSpace,
) -> Result<HarmonicHamiltonian> {
    let ops = Ladder::new(space)?;
    let mut h = HarmonicHamiltonian::new(space.clone(), true);
    match coupling.kind {
        CouplingKind::Pdc => h.push(ops.a()? * ops.b()?, coupling.coupling, 0.0)?,
        CouplingKind::Puc => h.push(
            ops.a()? * &ops.b()?.dagger(),
            coupling.coupling,
            coupling.residual_phase,
        )?,
        CouplingKind::Squeeze => {
            let a = ops.a()?;
            h.push(a * a, coupling.coupling, 0.0)?
        }
    }
    Ok(h)
}

fn atom_slot(space: &HilbertSpace) -> Result<usize> {
    space.atom_slot().ok_or_else(|| Error::SpaceMismatch("the atom is absent from the space".into()))
}

/// Atom-conditioned squeezing `−χ[2a†a + a² + a†²](σee − σgg)`.
pub fn build_sss_hamiltonian(params: &SystemParams, space: &HilbertSpace) -> Result<HarmonicHamiltonian> {
    params.validate()?;
    for (name, v) in [("δa", params.delta_a), ("φ1", params.phi1), ("φ2", params.phi2)] {
        if v != 0.0 {
            return Err(Error::Configuration(format!("the conditional squeezer needs {name} = 0, got {v}")));
        }
    }
    let chi = params
        .chi()
        .ok_or_else(|| Error::Configuration("the conditional squeezer needs |Ω2| > 0".into()))?;
    let slot = atom_slot(space)?;
    let a_slot = space
        .mode_slot(0)
        .ok_or_else(|| Error::SpaceMismatch("mode a is absent from the space".into()))?;
    let ops = Ladder::new(space)?;
    let a = ops.a()?;
    let n = embed(&number(space.factor_dim(a_slot))?, a_slot, space)?;
    let ad = a.dagger();
    let field = &(&n.scale(2.0.into()) + &(a * a)) + &(&ad * &ad);
    let sz = &atomic_projector(Level::Excited, Level::Excited)
        - &atomic_projector(Level::Ground, Level::Ground);
    let op = (&field * &embed(&sz, slot, space)?).scale((-chi).into());
    let mut h = HarmonicHamiltonian::new(space.clone(), true);
    h.push_static_hermitian(op)?;
    Ok(h)
}

fn ajc_margins(params: &SystemParams, thresholds: &Thresholds) -> Vec<Margin> {
    let flag = |label: String, ok: bool| Margin::new(label, if ok { 1.0 } else { 0.0 }, 1.0);
    let r = if params.lambda_a == 0.0 {
        f64::INFINITY
    } else {
        params.omega2_mag / params.lambda_a
    };
    vec![
        flag(format!("φ1 = 0 (got {})", params.phi1), params.phi1 == 0.0),
        flag(format!("φ2 = 0 (got {})", params.phi2), params.phi2 == 0.0),
        flag(
            format!("δa = −|Ω2| (got δa = {}, |Ω2| = {})", params.delta_a, params.omega2_mag),
            approx_eq(params.delta_a, -params.omega2_mag),
        ),
        Margin::new("|Ω2| ≫ |λ̃a|", r, thresholds.much_greater),
    ]
}

fn jc_pair(params: &SystemParams, space: &HilbertSpace) -> Result<(Operator, Operator)> {
    let ops = Ladder::new(space)?;
    let a = ops.a()?;
    let seg = ops.sigma_eg()?;
    let lt = params.lambda_tilde_a();
    let ajc = (a * &seg.dagger()).scale(lt);
    let jc = (a * seg).scale(lt);
    Ok((&ajc + &ajc.dagger(), &jc + &jc.dagger()))
}

/// Anti-Jaynes-Cummings `λ̃a a σge + h.c.`.
pub fn build_ajc_hamiltonian(
    params: &SystemParams,
    space: &HilbertSpace,
    thresholds: &Thresholds,
) -> Result<HarmonicHamiltonian> {
    params.validate()?;
    validate_margins(ajc_margins(params, thresholds))?;
    let (ajc, _) = jc_pair(params, space)?;
    let mut h = HarmonicHamiltonian::new(space.clone(), true);
    h.push_static_hermitian(ajc)?;
    Ok(h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    Jc,
    Ajc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseWindow {
    pub start: f64,
    pub end: f64,
    pub which: Window,
}

/// Alternating pulses: AJC on `[2nτ, (2n+1)τ)`, JC on `[(2n+1)τ, (2n+2)τ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSchedule {
    pub tau: f64,
    pub n_cycles: usize,
}

impl PulseSchedule {
    pub fn new(tau: f64, n_cycles: usize) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Configuration(format!("pulse duration must be positive, got {tau}")));
        }
        Ok(Self { tau, n_cycles })
    }

    pub fn end(&self) -> f64 {
        2.0 * self.n_cycles as f64 * self.tau
    }

    pub fn windows(&self) -> Vec<PulseWindow> {
        (0..2 * self.n_cycles)
            .map(|k| PulseWindow {
                start: k as f64 * self.tau,
                end: (k + 1) as f64 * self.tau,
                which: if k % 2 == 0 { Window::Ajc } else { Window::Jc },
            })
            .collect()
    }

    /// Active window at `t`, `None` outside the schedule.
    pub fn window_at(&self, t: f64) -> Option<Window> {
        if t < 0.0 || t >= self.end() {
            return None;
        }
        let k = (t / self.tau).floor() as usize;
        Some(if k % 2 == 0 { Window::Ajc } else { Window::Jc })
    }
}

/// Piecewise-static JC/AJC alternation.
#[derive(Clone, Debug)]
pub struct PulsedJcAjc {
    space: HilbertSpace,
    schedule: PulseSchedule,
    ajc: Operator,
    jc: Operator,
}

impl PulsedJcAjc {
    pub fn schedule(&self) -> &PulseSchedule {
        &self.schedule
    }
}

pub fn build_pulsed_jc_ajc(
    params: &SystemParams,
    schedule: PulseSchedule,
    space: &HilbertSpace,
    thresholds: &Thresholds,
) -> Result<PulsedJcAjc> {
    params.validate()?;
    PulseSchedule::new(schedule.tau, schedule.n_cycles)?;
    validate_margins(ajc_margins(params, thresholds))?;
    let (ajc, jc) = jc_pair(params, space)?;
    Ok(PulsedJcAjc { space: space.clone(), schedule, ajc, jc })
}

impl TimeDependentHamiltonian for PulsedJcAjc {
    fn space(&self) -> &HilbertSpace {
        &self.space
    }

    fn parts(&self) -> Vec<Operator> {
        vec![self.ajc.clone(), self.jc.clone()]
    }

    fn coefficients(&self, _t: f64, segment_mid: f64, out: &mut [C64]) {
        let (one, zero) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        let (x, y) = match self.schedule.window_at(segment_mid) {
            Some(Window::Ajc) => (one, zero),
            Some(Window::Jc) => (zero, one),
            None => (zero, zero),
        };
        out[0] = x;
        out[1] = y;
    }

    fn breakpoints(&self) -> Vec<f64> {
        (1..=2 * self.schedule.n_cycles).map(|k| k as f64 * self.schedule.tau).collect()
    }

    fn max_frequency(&self) -> f64 {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeriveOptions {
    /// Averaging span; pair sums below `10 / window` count as unresolved.
    pub window: f64,
    /// Sample count for the residue estimate.
    pub samples: usize,
    pub resonance_tol: f64,
    /// Keep static components as first-order terms instead of rejecting them.
    pub allow_static: bool,
}

impl Default for DeriveOptions {
    fn default() -> Self {
        Self { window: 200.0, samples: 200, resonance_tol: 1e-9, allow_static: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveGenerator {
    pub operator: Operator,
    /// Largest Frobenius norm of the discarded oscillating part over the samples.
    pub residue: f64,
}

/// Static part of `−i V(t) ∫₀ᵗ V(t′) dt′` for a harmonic `V`.
///
/// With `V = Σ_j A_j e^{iω_j t}` the time average keeps `−Σ A_j A_l / ω_l`
/// over pairs with `ω_j + ω_l = 0`; the result is symmetrised.
pub fn derive_effective_numeric(h: &HarmonicHamiltonian, opts: &DeriveOptions) -> Result<EffectiveGenerator> {
    if !(opts.window > 0.0) || opts.samples == 0 {
        return Err(Error::Configuration("averaging window and sample count must be positive".into()));
    }
    let comps = h.components();
    let space = h.space().clone();
    let d = space.total_dim();
    let zero = || nalgebra::DMatrix::<C64>::zeros(d, d);
    let resolvable = 10.0 / opts.window;

    let mut first = zero();
    let mut dynamic: Vec<(&Operator, f64)> = Vec::new();
    for (op, w) in &comps {
        if w.abs() <= opts.resonance_tol {
            if !opts.allow_static {
                return Err(Error::Configuration(
                    "static component in the input; set allow_static to keep it at first order".into(),
                ));
            }
            first += op.matrix();
        } else if w.abs() < resolvable {
            return Err(Error::AmbiguousResonance { sum: *w });
        } else {
            dynamic.push((op, *w));
        }
    }

    let mut resonant = zero();
    // oscillating pieces: (matrix, frequency)
    let mut oscillating: Vec<(nalgebra::DMatrix<C64>, f64)> = Vec::new();
    for (aj, wj) in &dynamic {
        let mut drift = zero();
        for (al, wl) in &dynamic {
            let prod = aj.matrix() * al.matrix() * C64::new(1.0 / wl, 0.0);
            drift += &prod;
            let sum = wj + wl;
            if sum.abs() <= opts.resonance_tol {
                resonant -= &prod;
            } else if sum.abs() < resolvable {
                return Err(Error::AmbiguousResonance { sum });
            } else {
                oscillating.push((-prod, sum));
            }
        }
        oscillating.push((drift, *wj));
    }

    let total = first + resonant;
    let herm = (&total + total.adjoint()) * C64::new(0.5, 0.0);
    let operator = Operator::new(space, herm)?;

    let mut residue: f64 = 0.0;
    for k in 0..opts.samples {
        let t = opts.window * (k as f64 + 0.5) / opts.samples as f64;
        let mut m = zero();
        for (p, w) in &oscillating {
            m += p * C64::from_polar(1.0, w * t);
        }
        residue = residue.max(m.norm());
    }
    Ok(EffectiveGenerator { operator, residue })
}
