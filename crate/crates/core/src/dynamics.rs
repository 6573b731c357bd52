//! Pure-state and Lindblad propagation under time-dependent generators.
//!
//! Both equations share one Runge-Kutta driver: fixed-step RK4 or adaptive
//! Dormand-Prince 5(4). Integration is split into segments at every output
//! time and every generator breakpoint, so piecewise schedules never smear a
//! switch across a step. The generator parts are compiled once into sparse
//! row storage; the dense `Operator` API is untouched.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fock_algebra::{
    annihilation, atomic_projector, embed, HilbertSpace, Level, Operator, State, StateKind, C64,
};
use crate::model::TimeDependentHamiltonian;
use crate::observables::max_tail_weight;
use crate::sparse::{from_row_major, to_row_major, Csr, SharedPattern};

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub const NORM_DRIFT_BOUND: f64 = 1e-6;
pub const TRACE_DRIFT_BOUND: f64 = 1e-8;
pub const HERMITICITY_BOUND: f64 = 1e-8;
pub const POSITIVITY_BOUND: f64 = 1e-6;
pub const MAX_EIGEN_CHECKS: usize = 50;
const MIN_STEPS_PER_CYCLE: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Adaptive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for RK4, initial step for the adaptive method.
    /// `None` picks `2π / (20 f_max)`.
    pub dt: Option<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub dt_max: Option<f64>,
    /// Output times; the initial state sits at `t_grid[0]`.
    pub t_grid: Vec<f64>,
    pub renormalize: bool,
    /// Accept steps coarser than 20 per fastest cycle (recorded as a warning).
    pub allow_coarse: bool,
    /// Top Fock levels summed by the tail-weight diagnostic.
    pub tail_levels: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            dt: None,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            dt_max: None,
            t_grid: vec![0.0, 1.0],
            renormalize: false,
            allow_coarse: false,
            tail_levels: 2,
        }
    }
}

impl IntegratorConfig {
    pub fn uniform_grid(t_end: f64, points: usize) -> Vec<f64> {
        let n = points.max(2) - 1;
        (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
    }

    pub fn with_grid(mut self, t_grid: Vec<f64>) -> Self {
        self.t_grid = t_grid;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.t_grid.is_empty() {
            return Err(Error::Configuration("output grid is empty".into()));
        }
        if self.t_grid.iter().any(|t| !t.is_finite()) || self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Configuration("output times must be finite and strictly increasing".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::Configuration(format!("dt must be positive, got {dt}")));
            }
        }
        if self.method == Method::Adaptive && !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Configuration("adaptive tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Frame a trajectory is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Frame {
    Lab,
    InteractionPicture,
    /// Dressed by the first drive.
    LaserFrame,
    /// Dressed by both drives.
    DoubleDressed,
    /// Frame of an engineered effective generator.
    Effective,
}

impl Frame {
    pub fn name(self) -> &'static str {
        match self {
            Frame::Lab => "lab",
            Frame::InteractionPicture => "interaction-picture",
            Frame::LaserFrame => "laser-frame",
            Frame::DoubleDressed => "double-dressed",
            Frame::Effective => "effective",
        }
    }
}

/// Observables a comparison may request.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Observable {
    PhotonNumber(usize),
    MinQuadratureVariance(usize),
    QuadratureVariance { mode: usize, theta: f64 },
    Purity,
    FieldPurity,
    ExcitedPopulation,
    TailWeight,
}

impl Observable {
    /// True when every frame used here leaves the observable unchanged.
    ///
    /// The frames differ by atomic rotations and by mode phase rotations,
    /// which preserve photon numbers, the minimum over angles, and purities.
    pub fn frame_insensitive(self) -> bool {
        matches!(
            self,
            Observable::PhotonNumber(_)
                | Observable::MinQuadratureVariance(_)
                | Observable::Purity
                | Observable::FieldPurity
                | Observable::TailWeight
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    /// `|‖ψ‖² − 1|` or `|Tr ρ − 1|`.
    pub norm_error: f64,
    pub hermiticity_error: f64,
    /// Smallest eigenvalue of `ρ`, evaluated on at most 50 samples.
    pub min_eigenvalue: Option<f64>,
    pub tail_weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub state: State,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub frame: Frame,
    pub samples: Vec<Sample>,
    pub warnings: Vec<String>,
    /// Step size actually used (initial step for adaptive runs).
    pub dt: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("a trajectory has at least one sample")
    }

    pub fn max_norm_error(&self) -> f64 {
        self.samples.iter().map(|s| s.diagnostics.norm_error).fold(0.0, f64::max)
    }
}

/// Re-tag a trajectory with the frame its states live in.
pub fn align_frames(mut traj: Trajectory, frame: Frame) -> Trajectory {
    traj.frame = frame;
    traj
}

/// Reject comparisons that would read frame-sensitive data across frames.
pub fn check_comparable(a: &Trajectory, b: &Trajectory, observables: &[Observable]) -> Result<()> {
    if a.frame == b.frame {
        return Ok(());
    }
    match observables.iter().find(|o| !o.frame_insensitive()) {
        None => Ok(()),
        Some(o) => Err(Error::FrameMismatch(format!(
            "{o:?} differs between the {} and {} frames",
            a.frame.name(),
            b.frame.name()
        ))),
    }
}

/// Default step `2π / (20 f_max)` with `f_max = max(max|ω|, ‖H‖ bound)`.
pub fn default_dt(h: &dyn TimeDependentHamiltonian) -> f64 {
    let f = h.max_frequency().max(h.norm_bound());
    if f > 0.0 {
        2.0 * PI / (MIN_STEPS_PER_CYCLE * f)
    } else {
        0.1
    }
}

/// Right-hand side over a flat complex buffer.
trait System {
    fn dim(&self) -> usize;
    fn rhs(&mut self, t: f64, mid: f64, y: &[C64], out: &mut [C64]);
}

struct PureSystem<'a> {
    h: &'a dyn TimeDependentHamiltonian,
    parts: Vec<Csr>,
    coeffs: Vec<C64>,
}

impl<'a> PureSystem<'a> {
    fn new(h: &'a dyn TimeDependentHamiltonian) -> Self {
        let parts: Vec<Csr> = h.parts().iter().map(|p| Csr::from_dense(p.matrix())).collect();
        let coeffs = vec![ZERO; parts.len()];
        Self { h, parts, coeffs }
    }
}

impl System for PureSystem<'_> {
    fn dim(&self) -> usize {
        self.h.space().total_dim()
    }

    fn rhs(&mut self, t: f64, mid: f64, y: &[C64], out: &mut [C64]) {
        self.h.coefficients(t, mid, &mut self.coeffs);
        out.iter_mut().for_each(|o| *o = ZERO);
        for (p, c) in self.parts.iter().zip(&self.coeffs) {
            if *c != ZERO {
                p.mul_vec_acc(-I * c, y, out);
            }
        }
    }
}

/// `ρ̇ = −i(H_eff ρ − ρ H_eff†) + Σ L ρ L†` with `H_eff = H − (i/2) Σ L†L`.
struct LindbladSystem<'a> {
    h: &'a dyn TimeDependentHamiltonian,
    pattern: SharedPattern,
    heff: Csr,
    coeffs: Vec<C64>,
    jumps: Vec<(Csr, Csr)>,
    scratch: Vec<C64>,
    n: usize,
}

impl<'a> LindbladSystem<'a> {
    fn new(h: &'a dyn TimeDependentHamiltonian, jumps: &[Operator]) -> Self {
        let n = h.space().total_dim();
        let parts = h.parts();
        let mut damping = DMatrix::<C64>::zeros(n, n);
        for l in jumps {
            damping += l.matrix().adjoint() * l.matrix();
        }
        damping *= C64::new(0.0, -0.5);
        let mut mats: Vec<&DMatrix<C64>> = parts.iter().map(|p| p.matrix()).collect();
        mats.push(&damping);
        let pattern = SharedPattern::compile(n, &mats);
        let heff = pattern.empty_csr();
        let coeffs = vec![ZERO; parts.len() + 1];
        let jumps = jumps
            .iter()
            .map(|l| {
                let c = Csr::from_dense(l.matrix());
                let cd = c.adjoint();
                (c, cd)
            })
            .collect();
        Self { h, pattern, heff, coeffs, jumps, scratch: vec![ZERO; n * n], n }
    }
}

impl System for LindbladSystem<'_> {
    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn rhs(&mut self, t: f64, mid: f64, y: &[C64], out: &mut [C64]) {
        let n = self.n;
        let k = self.coeffs.len() - 1;
        self.h.coefficients(t, mid, &mut self.coeffs[..k]);
        self.coeffs[k] = C64::new(1.0, 0.0);
        self.pattern.combine(&self.coeffs, &mut self.heff);

        let x = &mut self.scratch;
        x.iter_mut().for_each(|v| *v = ZERO);
        self.heff.mul_left_acc(-I, y, x);
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = x[i * n + j] + x[j * n + i].conj();
            }
        }
        for (l, ld) in &self.jumps {
            x.iter_mut().for_each(|v| *v = ZERO);
            l.mul_left_acc(C64::new(1.0, 0.0), y, x);
            ld.mul_right_acc(C64::new(1.0, 0.0), x, out);
        }
    }
}

/// Symmetrise a row-major `n×n` matrix in place.
fn hermitize(y: &mut [C64], n: usize) {
    for i in 0..n {
        y[i * n + i].im = 0.0;
        for j in i + 1..n {
            let avg = (y[i * n + j] + y[j * n + i].conj()) * 0.5;
            y[i * n + j] = avg;
            y[j * n + i] = avg.conj();
        }
    }
}

fn axpy_into(out: &mut [C64], y: &[C64], terms: &[(f64, &[C64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = y[i];
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        *o = acc;
    }
}

struct Driver {
    k: Vec<Vec<C64>>,
    tmp: Vec<C64>,
    y5: Vec<C64>,
    steps: usize,
}

impl Driver {
    fn new(dim: usize, stages: usize) -> Self {
        Self { k: vec![vec![ZERO; dim]; stages], tmp: vec![ZERO; dim], y5: vec![ZERO; dim], steps: 0 }
    }

    fn rk4_step(&mut self, sys: &mut dyn System, t: f64, dt: f64, mid: f64, y: &mut [C64]) {
        let (k, tmp) = (&mut self.k, &mut self.tmp);
        sys.rhs(t, mid, y, &mut k[0]);
        axpy_into(tmp, y, &[(dt / 2.0, &k[0])]);
        sys.rhs(t + dt / 2.0, mid, tmp, &mut k[1]);
        axpy_into(tmp, y, &[(dt / 2.0, &k[1])]);
        sys.rhs(t + dt / 2.0, mid, tmp, &mut k[2]);
        axpy_into(tmp, y, &[(dt, &k[2])]);
        sys.rhs(t + dt, mid, tmp, &mut k[3]);
        for i in 0..y.len() {
            y[i] += (k[0][i] + (k[1][i] + k[2][i]) * 2.0 + k[3][i]) * (dt / 6.0);
        }
        self.steps += 1;
    }

    /// One Dormand-Prince attempt; returns the scaled error norm.
    /// On acceptance `y5` holds the fifth-order solution.
    fn dopri_attempt(
        &mut self,
        sys: &mut dyn System,
        t: f64,
        dt: f64,
        mid: f64,
        y: &[C64],
        rtol: f64,
        atol: f64,
    ) -> f64 {
        const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
        const A: [&[f64]; 7] = [
            &[],
            &[0.2],
            &[3.0 / 40.0, 9.0 / 40.0],
            &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
            &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
            &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
            &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
        ];
        const E: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        for s in 0..7 {
            if s == 0 {
                self.tmp.copy_from_slice(y);
            } else {
                for i in 0..y.len() {
                    let mut acc = y[i];
                    for (j, a) in A[s].iter().enumerate() {
                        if *a != 0.0 {
                            acc += self.k[j][i] * (dt * a);
                        }
                    }
                    self.tmp[i] = acc;
                }
            }
            if s == 6 {
                self.y5.copy_from_slice(&self.tmp);
            }
            sys.rhs(t + C[s] * dt, mid, &self.tmp, &mut self.k[s]);
        }
        let mut err2 = 0.0;
        for i in 0..y.len() {
            let mut e = ZERO;
            for (j, ej) in E.iter().enumerate() {
                if *ej != 0.0 {
                    e += self.k[j][i] * (dt * ej);
                }
            }
            let scale = atol + rtol * y[i].norm().max(self.y5[i].norm());
            err2 += (e.norm() / scale).powi(2);
        }
        (err2 / y.len() as f64).sqrt()
    }
}

struct Plan {
    dt: f64,
    warnings: Vec<String>,
}

fn plan(h: &dyn TimeDependentHamiltonian, cfg: &IntegratorConfig) -> Result<Plan> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    let dt = cfg.dt.unwrap_or_else(|| default_dt(h));
    let w = h.max_frequency();
    if w > 0.0 && cfg.method == Method::Rk4 {
        let per_cycle = 2.0 * PI / (w * dt);
        if per_cycle < MIN_STEPS_PER_CYCLE {
            let msg = format!(
                "dt = {dt:e} gives {per_cycle:.1} steps per cycle of the fastest frequency {w} (need {MIN_STEPS_PER_CYCLE})"
            );
            if !cfg.allow_coarse {
                return Err(Error::Configuration(msg));
            }
            warnings.push(msg);
        }
    }
    Ok(Plan { dt, warnings })
}

/// Segment boundaries: output times plus breakpoints strictly inside the span.
fn stops(h: &dyn TimeDependentHamiltonian, grid: &[f64]) -> Vec<(f64, bool)> {
    let (t0, t1) = (grid[0], *grid.last().unwrap());
    let mut s: Vec<(f64, bool)> = grid.iter().map(|&t| (t, true)).collect();
    for b in h.breakpoints() {
        if b > t0 && b < t1 && !grid.iter().any(|&g| (g - b).abs() <= 1e-12 * b.abs().max(1.0)) {
            s.push((b, false));
        }
    }
    s.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    s
}

fn nonfinite(y: &[C64]) -> bool {
    y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
}

/// Integrate `y` across all segments, calling `emit` at every output time.
fn integrate(
    sys: &mut dyn System,
    h: &dyn TimeDependentHamiltonian,
    cfg: &IntegratorConfig,
    dt: f64,
    y: &mut Vec<C64>,
    hermitian_n: Option<usize>,
    mut emit: impl FnMut(f64, &mut Vec<C64>) -> Result<()>,
) -> Result<usize> {
    let stops = stops(h, &cfg.t_grid);
    let stages = if cfg.method == Method::Rk4 { 4 } else { 7 };
    let mut drv = Driver::new(sys.dim(), stages);
    emit(stops[0].0, y)?;
    let mut h_adapt = dt.min(cfg.dt_max.unwrap_or(f64::INFINITY));
    for w in stops.windows(2) {
        let (ta, tb) = (w[0].0, w[1].0);
        let mid = 0.5 * (ta + tb);
        match cfg.method {
            Method::Rk4 => {
                let n = ((tb - ta) / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
                let step = (tb - ta) / n as f64;
                for k in 0..n {
                    drv.rk4_step(sys, ta + k as f64 * step, step, mid, y);
                    if let Some(n) = hermitian_n {
                        hermitize(y, n);
                    }
                }
            }
            Method::Adaptive => {
                let mut t = ta;
                let dt_max = cfg.dt_max.unwrap_or(f64::INFINITY);
                while t < tb {
                    let mut step = h_adapt.min(tb - t).min(dt_max);
                    let last = t + step >= tb * (1.0 - 1e-15);
                    if last {
                        step = tb - t;
                    }
                    let err = drv.dopri_attempt(sys, t, step, mid, y, cfg.rel_tol, cfg.abs_tol);
                    if !err.is_finite() {
                        return Err(Error::Numerical { time: t, reason: "adaptive error estimate is not finite".into() });
                    }
                    let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    if err <= 1.0 {
                        y.copy_from_slice(&drv.y5);
                        if let Some(n) = hermitian_n {
                            hermitize(y, n);
                        }
                        t = if last { tb } else { t + step };
                        drv.steps += 1;
                        if !last || factor < 1.0 {
                            h_adapt = step * factor;
                        }
                    } else {
                        h_adapt = step * factor.min(1.0);
                        if h_adapt < 1e-14 * tb.abs().max(1.0) {
                            return Err(Error::Numerical { time: t, reason: "adaptive step underflow".into() });
                        }
                    }
                }
            }
        }
        if nonfinite(y) {
            return Err(Error::Numerical { time: tb, reason: "state became non-finite".into() });
        }
        if w[1].1 {
            emit(tb, y)?;
        }
    }
    Ok(drv.steps)
}

/// Solve `dψ/dt = −i H(t) ψ` and sample at `cfg.t_grid`.
pub fn evolve_schrodinger(
    h: &dyn TimeDependentHamiltonian,
    psi0: &State,
    cfg: &IntegratorConfig,
    frame: Frame,
) -> Result<Trajectory> {
    let StateKind::Pure(v0) = psi0.kind() else {
        return Err(Error::Configuration("Schrödinger evolution needs a pure state".into()));
    };
    if psi0.space() != h.space() {
        return Err(Error::SpaceMismatch("initial state and Hamiltonian live on different spaces".into()));
    }
    let Plan { dt, warnings } = plan(h, cfg)?;
    let space = h.space().clone();
    let norm0 = v0.norm_squared();
    let mut sys = PureSystem::new(h);
    let mut y: Vec<C64> = v0.iter().copied().collect();
    let mut samples = Vec::with_capacity(cfg.t_grid.len());
    let mut worst: f64 = 0.0;
    let steps = integrate(&mut sys, h, cfg, dt, &mut y, None, |t, y| {
        let norm2: f64 = y.iter().map(|z| z.norm_sqr()).sum();
        let drift = (norm2 - norm0).abs();
        worst = worst.max(drift);
        if cfg.renormalize && norm2 > 0.0 {
            let s = (norm0 / norm2).sqrt();
            y.iter_mut().for_each(|z| *z *= s);
        }
        let state = State::pure(space.clone(), DVector::from_column_slice(y))?;
        let tail_weight = max_tail_weight(&state, cfg.tail_levels);
        samples.push(Sample {
            time: t,
            state,
            diagnostics: Diagnostics { norm_error: drift, hermiticity_error: 0.0, min_eigenvalue: None, tail_weight },
        });
        Ok(())
    })?;
    if worst > NORM_DRIFT_BOUND && !cfg.renormalize {
        return Err(Error::Accuracy {
            drift: worst,
            bound: NORM_DRIFT_BOUND,
            suggested_dt: 0.8 * dt * (NORM_DRIFT_BOUND / worst).powf(0.2),
        });
    }
    Ok(Trajectory { frame, samples, warnings, dt, steps })
}

/// Collapse operators `√Γf a` and `√Γa σ−` on mode a and the atom.
pub fn collapse_operators(space: &HilbertSpace, gamma_f: f64, gamma_a: f64) -> Result<Vec<Operator>> {
    if gamma_f < 0.0 || gamma_a < 0.0 || !gamma_f.is_finite() || !gamma_a.is_finite() {
        return Err(Error::Configuration("decay rates must be finite and non-negative".into()));
    }
    let mut out = Vec::new();
    if gamma_f > 0.0 {
        let slot = space
            .mode_slot(0)
            .ok_or_else(|| Error::SpaceMismatch("field decay needs mode a".into()))?;
        out.push(embed(&annihilation(space.factor_dim(slot))?, slot, space)?.scale(gamma_f.sqrt().into()));
    }
    if gamma_a > 0.0 {
        let slot = space
            .atom_slot()
            .ok_or_else(|| Error::SpaceMismatch("atomic decay needs the atom".into()))?;
        let lower = atomic_projector(Level::Excited, Level::Ground);
        out.push(embed(&lower, slot, space)?.scale(gamma_a.sqrt().into()));
    }
    Ok(out)
}

/// Solve the zero-temperature master equation with field and atomic decay.
pub fn evolve_lindblad(
    h: &dyn TimeDependentHamiltonian,
    rho0: &State,
    gamma_f: f64,
    gamma_a: f64,
    cfg: &IntegratorConfig,
    frame: Frame,
) -> Result<Trajectory> {
    if rho0.space() != h.space() {
        return Err(Error::SpaceMismatch("initial state and Hamiltonian live on different spaces".into()));
    }
    let jumps = collapse_operators(h.space(), gamma_f, gamma_a)?;
    let Plan { dt, warnings } = plan(h, cfg)?;
    let space = h.space().clone();
    let n = space.total_dim();
    let rho = rho0.density_matrix();
    let trace0 = rho.trace().re;
    let mut sys = LindbladSystem::new(h, &jumps);
    let mut y = to_row_major(&rho);

    let count = cfg.t_grid.len();
    let eigen_stride = count.div_ceil(MAX_EIGEN_CHECKS).max(1);
    let mut samples = Vec::with_capacity(count);
    let steps = integrate(&mut sys, h, cfg, dt, &mut y, Some(n), |t, y| {
        let idx = samples.len();
        let m = from_row_major(n, y);
        let state = State::mixed(space.clone(), m)?;
        let norm_error = (state.trace() - trace0).abs();
        let hermiticity_error = state.hermiticity_error();
        let check_eig = idx % eigen_stride == 0 || idx + 1 == count;
        let min_eigenvalue = check_eig.then(|| state.min_eigenvalue());
        let fail = |reason: String| Err(Error::Numerical { time: t, reason });
        if norm_error > TRACE_DRIFT_BOUND {
            return fail(format!("trace drift {norm_error:e} exceeds {TRACE_DRIFT_BOUND:e}"));
        }
        if hermiticity_error > HERMITICITY_BOUND {
            return fail(format!("Hermiticity error {hermiticity_error:e} exceeds {HERMITICITY_BOUND:e}"));
        }
        if let Some(e) = min_eigenvalue {
            if e < -POSITIVITY_BOUND {
                return fail(format!("eigenvalue {e:e} below −{POSITIVITY_BOUND:e}"));
            }
        }
        let tail_weight = max_tail_weight(&state, cfg.tail_levels);
        samples.push(Sample {
            time: t,
            state,
            diagnostics: Diagnostics { norm_error, hermiticity_error, min_eigenvalue, tail_weight },
        });
        Ok(())
    })?;
    Ok(Trajectory { frame, samples, warnings, dt, steps })
}
