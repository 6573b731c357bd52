//! Config-driven runs: TOML scenarios, CSV emission, run comparison,
//! cutoff sweeps and the effective-generator report.
//!
//! A config has the sections `[scenario]`, `[system]`, `[initial]`,
//! `[integrator]`, `[schedule]` and `[output]`. Only `[scenario]` is
//! mandatory. All rates and frequencies are in units of `λa`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DVector;
use serde::Deserialize;

use crate::dynamics::{evolve_lindblad, evolve_schrodinger, Frame, IntegratorConfig, Method, Trajectory};
use crate::effective::{
    build_ajc_hamiltonian, build_effective_hamiltonian, build_pulsed_jc_ajc, build_sss_hamiltonian,
    derive_effective_numeric, pdc_coupling, puc_coupling, squeeze_coupling, Branch, CouplingKind, DeriveOptions,
    EffectiveCoupling, PulseSchedule,
};
use crate::error::{Error, Margin, Result};
use crate::fock_algebra::{Factor, HilbertSpace, Level, Operator, State, C64};
use crate::model::{
    build_interaction_picture, build_lab_hamiltonian, build_laser_frame, classify_regime, RegimeTag, SystemParams,
    Thresholds, TimeDependentHamiltonian,
};
use crate::observables::{
    excited_population, min_from_moments, min_quadrature_variance, photon_number, purity, ModeMoments,
};

/// Exact CSV header of every run.
pub const CSV_COLUMNS: [&str; 11] = [
    "time",
    "r",
    "var_x_min",
    "theta_min",
    "squeezing_degree",
    "n_a",
    "n_b",
    "pop_e",
    "purity",
    "trace_error",
    "tail_weight",
];

/// Physical value of `λa` in s⁻¹, echoed for unit reconstruction only.
pub const LAMBDA_A_SI: f64 = 3e5;

pub const DEFAULT_SWEEP_TOL: f64 = 1e-5;

const BUILTIN: &[(&str, &str)] = &[
    ("fig3-effective", include_str!("../scenarios/fig3-effective.toml")),
    ("fig3-analytic", include_str!("../scenarios/fig3-analytic.toml")),
    ("fig3-full", include_str!("../scenarios/fig3-full.toml")),
    ("fig3-full-printed", include_str!("../scenarios/fig3-full-printed.toml")),
    ("fig3-dissipative", include_str!("../scenarios/fig3-dissipative.toml")),
    ("pdc-weak", include_str!("../scenarios/pdc-weak.toml")),
    ("pdc-intermediate", include_str!("../scenarios/pdc-intermediate.toml")),
    ("pdc-strong", include_str!("../scenarios/pdc-strong.toml")),
    ("puc-intermediate", include_str!("../scenarios/puc-intermediate.toml")),
    ("ajc", include_str!("../scenarios/ajc.toml")),
    ("pulsed-jc-ajc", include_str!("../scenarios/pulsed-jc-ajc.toml")),
    ("sss", include_str!("../scenarios/sss.toml")),
    ("dispersive-jc", include_str!("../scenarios/dispersive-jc.toml")),
];

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    pub schedule: Option<ScheduleSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// full | lab | laser-frame | effective | sss | ajc | pulsed-jc-ajc | analytic-squeeze
    pub model: String,
    /// pdc | puc | squeeze, for `effective` and `analytic-squeeze`.
    pub kind: Option<String>,
    pub branch: Option<String>,
    pub regime: Option<String>,
    pub cutoff_a: usize,
    pub cutoff_b: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub omega0: f64,
    pub delta_a: f64,
    pub delta_b: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub omega1: f64,
    pub phi1: f64,
    pub omega2: f64,
    pub phi2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub gamma_f: f64,
    pub gamma_a: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        let p = SystemParams::default();
        Self {
            omega0: p.omega0,
            delta_a: p.delta_a,
            delta_b: p.delta_b,
            lambda_a: p.lambda_a,
            lambda_b: p.lambda_b,
            omega1: p.omega1_mag,
            phi1: p.phi1,
            omega2: p.omega2_mag,
            phi2: p.phi2,
            delta1: p.delta1,
            delta2: p.delta2,
            gamma_f: p.gamma_f,
            gamma_a: p.gamma_a,
        }
    }
}

impl SystemSection {
    pub fn params(&self) -> SystemParams {
        SystemParams {
            omega0: self.omega0,
            delta_a: self.delta_a,
            delta_b: self.delta_b,
            lambda_a: self.lambda_a,
            lambda_b: self.lambda_b,
            omega1_mag: self.omega1,
            phi1: self.phi1,
            omega2_mag: self.omega2,
            phi2: self.phi2,
            delta1: self.delta1,
            delta2: self.delta2,
            gamma_f: self.gamma_f,
            gamma_a: self.gamma_a,
        }
    }
}

/// Product initial state. Modes take `vacuum`, `fock <n>` or
/// `coherent <re> [<im>]`; the atom takes `g`, `e`, `plus` or `minus`
/// (`(|g> ± |e>)/√2`).
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub mode_a: String,
    pub mode_b: String,
    pub atom: String,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { mode_a: "vacuum".into(), mode_b: "vacuum".into(), atom: "g".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    /// rk4 | adaptive
    pub method: String,
    pub dt: Option<f64>,
    pub t_end: f64,
    /// Output points including `t = 0`.
    pub points: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub dt_max: Option<f64>,
    pub allow_coarse: bool,
    pub renormalize: bool,
    pub tail_levels: usize,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        Self {
            method: "rk4".into(),
            dt: None,
            t_end: 1.0,
            points: 11,
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
            dt_max: None,
            allow_coarse: false,
            renormalize: false,
            tail_levels: d.tail_levels,
        }
    }
}

impl IntegratorSection {
    pub fn config(&self) -> Result<IntegratorConfig> {
        let method = match self.method.to_ascii_lowercase().as_str() {
            "rk4" => Method::Rk4,
            "adaptive" | "dopri5" => Method::Adaptive,
            other => return Err(Error::Configuration(format!("unknown integrator `{other}`"))),
        };
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::Configuration(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.points < 2 {
            return Err(Error::Configuration("at least two output points are needed".into()));
        }
        Ok(IntegratorConfig {
            method,
            dt: self.dt,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            dt_max: self.dt_max,
            t_grid: IntegratorConfig::uniform_grid(self.t_end, self.points),
            renormalize: self.renormalize,
            allow_coarse: self.allow_coarse,
            tail_levels: self.tail_levels,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub tau: f64,
    pub n_cycles: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    /// Interaction picture of the full model.
    Full,
    Lab,
    LaserFrame,
    Effective,
    Sss,
    Ajc,
    PulsedJcAjc,
    /// Closed-form squeezed vacuum, no propagation.
    AnalyticSqueeze,
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "full" | "full-interaction-picture" | "interaction-picture" => ModelKind::Full,
            "lab" => ModelKind::Lab,
            "laser-frame" => ModelKind::LaserFrame,
            "effective" => ModelKind::Effective,
            "sss" => ModelKind::Sss,
            "ajc" => ModelKind::Ajc,
            "pulsed-jc-ajc" => ModelKind::PulsedJcAjc,
            "analytic-squeeze" | "analytic" => ModelKind::AnalyticSqueeze,
            other => return Err(Error::Configuration(format!("unknown model `{other}`"))),
        })
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config file; a bare built-in name also resolves.
    pub fn load(path_or_name: &str) -> Result<Self> {
        let path = Path::new(path_or_name);
        if path.exists() {
            return Self::from_toml(&std::fs::read_to_string(path)?);
        }
        match builtin(path_or_name) {
            Ok(cfg) => Ok(cfg),
            Err(_) => Err(Error::Configuration(format!(
                "`{path_or_name}` is neither a readable file nor a built-in scenario"
            ))),
        }
    }

    pub fn model(&self) -> Result<ModelKind> {
        self.scenario.model.parse()
    }

    pub fn params(&self) -> SystemParams {
        self.system.params()
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.model()?;
        self.params().validate()?;
        self.integrator.config()?;
        if self.scenario.cutoff_a < 2 || self.scenario.cutoff_b.is_some_and(|n| n < 2) {
            return Err(Error::Configuration("mode cutoffs must be at least 2".into()));
        }
        let needs_kind = matches!(model, ModelKind::Effective | ModelKind::AnalyticSqueeze);
        if needs_kind != self.scenario.kind.is_some() {
            return Err(Error::Configuration(if needs_kind {
                "effective and analytic models need `kind`".into()
            } else {
                "`kind` applies only to effective and analytic models".into()
            }));
        }
        if model == ModelKind::PulsedJcAjc && self.schedule.is_none() {
            return Err(Error::Configuration("pulsed-jc-ajc needs a [schedule] section".into()));
        }
        let space = self.space()?;
        self.initial_state(&space)?;
        Ok(())
    }

    fn coupling_kind(&self) -> Result<Option<CouplingKind>> {
        self.scenario.kind.as_deref().map(str::parse).transpose().map_err(as_config)
    }

    fn branch(&self, kind: CouplingKind) -> Result<Branch> {
        match &self.scenario.branch {
            Some(b) => b.parse().map_err(as_config),
            None if kind == CouplingKind::Squeeze => Ok(Branch::Down),
            None => Ok(Branch::Plus),
        }
    }

    fn has_atom(&self) -> bool {
        !matches!(self.model(), Ok(ModelKind::Effective | ModelKind::AnalyticSqueeze))
    }

    /// Mode a, optional mode b, then the atom when the model carries one.
    pub fn space(&self) -> Result<HilbertSpace> {
        let mut f = vec![Factor::Mode(self.scenario.cutoff_a)];
        if let Some(nb) = self.scenario.cutoff_b {
            f.push(Factor::Mode(nb));
        }
        if self.has_atom() {
            f.push(Factor::Atom);
        }
        HilbertSpace::new(f)
    }

    pub fn initial_state(&self, space: &HilbertSpace) -> Result<State> {
        let mut parts = Vec::new();
        let mut specs = vec![&self.initial.mode_a];
        if self.scenario.cutoff_b.is_some() {
            specs.push(&self.initial.mode_b);
        }
        for (k, spec) in specs.into_iter().enumerate() {
            let slot = space.mode_slot(k).expect("mode slots follow the config");
            parts.push(parse_mode_state(spec, space.factor_dim(slot))?);
        }
        if space.atom_slot().is_some() {
            parts.push(parse_atom_state(&self.initial.atom)?);
        }
        State::product(&parts)
    }

    fn with_cutoff(&self, n: usize) -> Self {
        let mut c = self.clone();
        c.scenario.cutoff_a = n;
        if c.scenario.cutoff_b.is_some() {
            c.scenario.cutoff_b = Some(n);
        }
        c
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Parse(m) => Error::Configuration(m),
        other => other,
    }
}

fn parse_mode_state(spec: &str, dim: usize) -> Result<State> {
    let words: Vec<&str> = spec.split_whitespace().collect();
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|_| Error::Configuration(format!("bad number `{s}` in `{spec}`")))
    };
    match words.as_slice() {
        ["vacuum"] => State::vacuum(dim),
        ["fock", n] => {
            let n: usize = n.parse().map_err(|_| Error::Configuration(format!("bad Fock index in `{spec}`")))?;
            State::fock(dim, n).map_err(|e| Error::Configuration(e.to_string()))
        }
        ["coherent", re] => State::coherent(dim, C64::new(num(re)?, 0.0)),
        ["coherent", re, im] => State::coherent(dim, C64::new(num(re)?, num(im)?)),
        _ => Err(Error::Configuration(format!("unknown mode state `{spec}`"))),
    }
}

fn parse_atom_state(spec: &str) -> Result<State> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let amps = match spec.to_ascii_lowercase().as_str() {
        "g" | "ground" => return Ok(State::atom(Level::Ground)),
        "e" | "excited" => return Ok(State::atom(Level::Excited)),
        "plus" => [r, r],
        "minus" => [r, -r],
        other => return Err(Error::Configuration(format!("unknown atom state `{other}`"))),
    };
    State::pure(HilbertSpace::atom(), DVector::from_iterator(2, amps.iter().map(|&x| C64::new(x, 0.0))))
}

pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|(n, _)| *n).collect()
}

pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    let (_, text) = BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Configuration(format!("no built-in scenario `{name}`")))?;
    ScenarioConfig::from_toml(text)
}

/// Name and one-line description of every built-in scenario.
pub fn list_scenarios() -> Vec<(String, String)> {
    BUILTIN
        .iter()
        .map(|(name, _)| {
            let d = builtin(name).map(|c| c.scenario.description).unwrap_or_default();
            (name.to_string(), d)
        })
        .collect()
}

/// Gates relaxed far enough that no `≫`/`∼` margin can fail.
fn permissive() -> Thresholds {
    Thresholds { much_greater: 0.0, similar: 1e300 }
}

enum Prepared {
    Dynamic { h: Box<dyn TimeDependentHamiltonian>, frame: Frame },
    Analytic { coupling: EffectiveCoupling },
}

struct Built {
    prepared: Prepared,
    chi: Option<f64>,
    warnings: Vec<String>,
}

fn prepare(cfg: &ScenarioConfig, th: &Thresholds) -> Result<Built> {
    let p = cfg.params();
    let space = cfg.space()?;
    let mut warnings = Vec::new();
    // r = 2χt only means something for the squeezing models
    let mut chi = p.chi().filter(|_| matches!(cfg.model(), Ok(ModelKind::Full | ModelKind::Lab | ModelKind::Sss)));
    let dynamic = |h: Box<dyn TimeDependentHamiltonian>, frame| Prepared::Dynamic { h, frame };
    let prepared = match cfg.model()? {
        m @ (ModelKind::Full | ModelKind::Lab) => {
            if p.omega2_mag > 0.0 {
                let c = squeeze_coupling(&p, Branch::Down, th)?;
                let want = c.required_detuning.expect("squeezing fixes δa");
                if (p.delta_a - want).abs() > 1e-12 * want.abs() {
                    warnings.push(format!(
                        "δa = {} is off the two-photon resonance δa = {want} of the |g> branch",
                        p.delta_a
                    ));
                }
            }
            if m == ModelKind::Full {
                dynamic(Box::new(build_interaction_picture(&p, &space)?), Frame::InteractionPicture)
            } else {
                dynamic(Box::new(build_lab_hamiltonian(&p, &space)?), Frame::Lab)
            }
        }
        ModelKind::LaserFrame => dynamic(Box::new(build_laser_frame(&p, &space, th)?), Frame::LaserFrame),
        ModelKind::Effective | ModelKind::AnalyticSqueeze => {
            let kind = cfg.coupling_kind()?.expect("validated");
            let c = effective_coupling(cfg, &p, kind, th)?;
            chi = (kind == CouplingKind::Squeeze).then(|| c.coupling.norm());
            if cfg.model()? == ModelKind::AnalyticSqueeze {
                if kind != CouplingKind::Squeeze {
                    return Err(Error::Configuration("the analytic model covers squeezing only".into()));
                }
                Prepared::Analytic { coupling: c }
            } else {
                dynamic(Box::new(build_effective_hamiltonian(&c, &space)?), Frame::Effective)
            }
        }
        ModelKind::Sss => dynamic(Box::new(build_sss_hamiltonian(&p, &space)?), Frame::Effective),
        ModelKind::Ajc => dynamic(Box::new(build_ajc_hamiltonian(&p, &space, th)?), Frame::Effective),
        ModelKind::PulsedJcAjc => {
            let s = cfg.schedule.expect("validated");
            let sched = PulseSchedule::new(s.tau, s.n_cycles)?;
            dynamic(Box::new(build_pulsed_jc_ajc(&p, sched, &space, th)?), Frame::Effective)
        }
    };
    Ok(Built { prepared, chi, warnings })
}

fn effective_coupling(
    cfg: &ScenarioConfig,
    p: &SystemParams,
    kind: CouplingKind,
    th: &Thresholds,
) -> Result<EffectiveCoupling> {
    let branch = cfg.branch(kind)?;
    let regime = || -> Result<RegimeTag> {
        match &cfg.scenario.regime {
            Some(r) => r.parse().map_err(as_config),
            None => Ok(classify_regime(p, th)?.tag),
        }
    };
    match kind {
        CouplingKind::Pdc => pdc_coupling(p, branch, regime()?, th),
        CouplingKind::Puc => puc_coupling(p, branch, regime()?, th),
        CouplingKind::Squeeze => squeeze_coupling(p, branch, th),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOptions {
    /// Downgrade regime-validity failures to header annotations.
    pub force: bool,
}

/// One CSV row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Row {
    pub time: f64,
    pub r: f64,
    pub var_x_min: f64,
    pub theta_min: f64,
    pub squeezing_degree: f64,
    pub n_a: f64,
    pub n_b: f64,
    pub pop_e: f64,
    pub purity: f64,
    pub trace_error: f64,
    pub tail_weight: f64,
}

impl Row {
    fn fields(&self) -> [f64; 11] {
        [
            self.time,
            self.r,
            self.var_x_min,
            self.theta_min,
            self.squeezing_degree,
            self.n_a,
            self.n_b,
            self.pop_e,
            self.purity,
            self.trace_error,
            self.tail_weight,
        ]
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub name: String,
    pub rows: Vec<Row>,
    pub warnings: Vec<String>,
    /// Margins that failed and were overridden by `force`.
    pub forced: Vec<Margin>,
    pub chi: Option<f64>,
    /// `None` for closed-form runs.
    pub trajectory: Option<Trajectory>,
}

impl RunOutput {
    pub fn last(&self) -> &Row {
        self.rows.last().expect("runs have at least two rows")
    }

    /// Row whose time is closest to `t`.
    pub fn row_at(&self, t: f64) -> &Row {
        self.rows
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            .expect("runs have rows")
    }

    pub fn summary(&self) -> String {
        let last = self.last();
        let mut s = format!(
            "{}: t = {}, r = {:.6}, var_x_min = {:.8}, degree = {:.4}%, n_a = {:.6}, purity = {:.6}",
            self.name, last.time, last.r, last.var_x_min, last.squeezing_degree, last.n_a, last.purity
        );
        let worst = |f: fn(&Row) -> f64| self.rows.iter().map(f).fold(0.0, f64::max);
        s += &format!(
            "\n  max trace/norm error {:.3e}, max tail weight {:.3e}",
            worst(|r| r.trace_error),
            worst(|r| r.tail_weight)
        );
        if let Some(tr) = &self.trajectory {
            s += &format!(", dt {:.3e}, {} steps", tr.dt, tr.steps);
        }
        for w in &self.warnings {
            s += &format!("\n  warning: {w}");
        }
        for m in &self.forced {
            s += &format!("\n  forced past: {m}");
        }
        s
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = String::new();
        for m in &self.forced {
            buf += &format!("# forced: {m}\n");
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS)?;
        for row in &self.rows {
            w.write_record(row.fields().iter().map(|x| x.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        buf += &String::from_utf8(bytes).expect("CSV output is UTF-8");
        Ok(buf)
    }

    /// Write via a sibling temporary file and rename, so readers never see
    /// a partial CSV.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let text = self.to_csv_string()?;
        let file = path.file_name().ok_or_else(|| Error::Configuration("output path has no file name".into()))?;
        let tmp = path.with_file_name(format!(".{}.partial", file.to_string_lossy()));
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

/// Build, propagate and tabulate one scenario.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunOutput> {
    cfg.validate()?;
    let (built, forced) = match prepare(cfg, &Thresholds::default()) {
        Ok(b) => (b, Vec::new()),
        Err(Error::RegimeValidity(m)) if opts.force => {
            let failed = m.into_iter().filter(|x| !x.passed()).collect();
            (prepare(cfg, &permissive())?, failed)
        }
        Err(e) => return Err(e),
    };
    let Built { prepared, chi, mut warnings } = built;
    let int = cfg.integrator.config()?;
    let r_of = |t: f64| chi.map_or(f64::NAN, |c| 2.0 * c * t);
    let (rows, trajectory) = match prepared {
        Prepared::Analytic { coupling } => {
            (int.t_grid.iter().map(|&t| analytic_row(&coupling, t, r_of(t))).collect(), None)
        }
        Prepared::Dynamic { h, frame } => {
            let space = cfg.space()?;
            let psi0 = cfg.initial_state(&space)?;
            let p = cfg.params();
            let tr = if p.gamma_f > 0.0 || p.gamma_a > 0.0 {
                evolve_lindblad(h.as_ref(), &psi0, p.gamma_f, p.gamma_a, &int, frame)?
            } else {
                evolve_schrodinger(h.as_ref(), &psi0, &int, frame)?
            };
            warnings.extend(tr.warnings.iter().cloned());
            let rows = tr
                .samples
                .iter()
                .map(|s| {
                    let q = min_quadrature_variance(&s.state, 0)?;
                    Ok(Row {
                        time: s.time,
                        r: r_of(s.time),
                        var_x_min: q.var_min,
                        theta_min: q.theta_min,
                        squeezing_degree: q.squeezing_degree,
                        n_a: q.moments().n,
                        n_b: if space.mode_slot(1).is_some() { photon_number(&s.state, 1)? } else { f64::NAN },
                        pop_e: if space.atom_slot().is_some() { excited_population(&s.state)? } else { f64::NAN },
                        purity: purity(&s.state),
                        trace_error: s.diagnostics.norm_error,
                        tail_weight: s.diagnostics.tail_weight,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (rows, Some(tr))
        }
    };
    Ok(RunOutput { name: cfg.scenario.name.clone(), rows, warnings, forced, chi, trajectory })
}

/// Squeezed vacuum under `H = c a² + c* a†²` from the vacuum:
/// `a(t) = a cosh 2|c|t − i e^{−i arg c} a† sinh 2|c|t`.
fn analytic_row(coupling: &EffectiveCoupling, t: f64, r: f64) -> Row {
    let c = coupling.coupling;
    let x = 2.0 * c.norm() * t;
    let (sh, ch) = (x.sinh(), x.cosh());
    let a2 = C64::new(0.0, -1.0) * C64::from_polar(1.0, -c.arg()) * (sh * ch);
    let q = min_from_moments(ModeMoments { a: C64::new(0.0, 0.0), a2, n: sh * sh });
    Row {
        time: t,
        r,
        var_x_min: q.var_min,
        theta_min: q.theta_min,
        squeezing_degree: q.squeezing_degree,
        n_a: sh * sh,
        n_b: f64::NAN,
        pop_e: f64::NAN,
        purity: 1.0,
        trace_error: 0.0,
        tail_weight: 0.0,
    }
}

/// Columns of a CSV written by [`RunOutput::write_csv`].
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut columns = vec![Vec::new(); headers.len()];
        for rec in rdr.records() {
            let rec = rec?;
            for (k, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("non-numeric value `{field}` in column `{}`", headers[k])))?;
                columns[k].push(v);
            }
        }
        Ok(Self { headers, columns })
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|k| self.columns[k].as_slice())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareReport {
    pub column: String,
    /// `r` when both runs define it, otherwise `time`.
    pub axis: String,
    pub points: usize,
    /// True when `b` was linearly interpolated onto the grid of `a`.
    pub resampled: bool,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub max_rel: f64,
    pub mean_rel: f64,
    /// Axis value and relative deviation at the last compared point.
    pub end_axis: f64,
    pub end_rel: f64,
    pub tol: f64,
    pub passed: bool,
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "column {} over {} ({} points{})", self.column, self.axis, self.points, if self.resampled { ", b resampled" } else { "" })?;
        writeln!(f, "  max abs {:.6e}, mean abs {:.6e}", self.max_abs, self.mean_abs)?;
        writeln!(f, "  max rel {:.6e}, mean rel {:.6e}", self.max_rel, self.mean_rel)?;
        writeln!(f, "  at {} = {}: rel {:.6e}", self.axis, self.end_axis, self.end_rel)?;
        write!(f, "  tolerance {:e}: {}", self.tol, if self.passed { "PASS" } else { "FAIL" })
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&v| v < x);
    if k == 0 {
        return ys[0];
    }
    if k == xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    if x1 == x0 {
        return ys[k];
    }
    ys[k - 1] + (ys[k] - ys[k - 1]) * (x - x0) / (x1 - x0)
}

/// Deviation of `b` from `a` in `column`, over `r ∈ [0, 1]` when both runs
/// carry `r`, else over the whole time span. Passes when the maximum
/// relative deviation is within `tol`.
pub fn compare_tables(a: &Table, b: &Table, column: &str, tol: f64) -> Result<CompareReport> {
    let (ya, yb) = (a.column(column)?, b.column(column)?);
    let finite_r = |t: &Table| t.column("r").map(|r| !r.is_empty() && r.iter().all(|x| x.is_finite())).unwrap_or(false);
    let axis = if finite_r(a) && finite_r(b) { "r" } else { "time" };
    let (xa, xb) = (a.column(axis)?, b.column(axis)?);
    if xa.is_empty() || xb.is_empty() {
        return Err(Error::DisjointGrids("a run has no rows".into()));
    }
    let in_window = |x: f64| axis == "time" || (-1e-9..=1.0 + 1e-9).contains(&x);
    let same = xa.len() == xb.len() && xa.iter().zip(xb).all(|(p, q)| (p - q).abs() <= 1e-9 * p.abs().max(1.0));
    let (lo, hi) = (xb[0], xb[xb.len() - 1]);
    let mut pairs = Vec::new();
    for (k, &x) in xa.iter().enumerate() {
        if !in_window(x) {
            continue;
        }
        if same {
            pairs.push((x, ya[k], yb[k]));
        } else if x >= lo - 1e-9 * lo.abs().max(1.0) && x <= hi + 1e-9 * hi.abs().max(1.0) {
            pairs.push((x, ya[k], interp(xb, yb, x)));
        }
    }
    if pairs.is_empty() {
        return Err(Error::DisjointGrids(format!(
            "no overlap on `{axis}`: a spans [{}, {}], b spans [{lo}, {hi}]",
            xa[0],
            xa[xa.len() - 1]
        )));
    }
    let abs: Vec<f64> = pairs.iter().map(|(_, p, q)| (p - q).abs()).collect();
    let rel: Vec<f64> = pairs.iter().filter(|(_, p, _)| p.abs() > 1e-12).map(|(_, p, q)| (p - q).abs() / p.abs()).collect();
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let (end_axis, pe, qe) = *pairs.last().unwrap();
    let end_rel = if pe.abs() > 1e-12 { (pe - qe).abs() / pe.abs() } else { (pe - qe).abs() };
    let max_rel = max(&rel);
    Ok(CompareReport {
        column: column.to_string(),
        axis: axis.to_string(),
        points: pairs.len(),
        resampled: !same,
        max_abs: max(&abs),
        mean_abs: mean(&abs),
        max_rel,
        mean_rel: mean(&rel),
        end_axis,
        end_rel,
        tol,
        passed: max_rel <= tol,
    })
}

pub fn compare_runs(a: &Path, b: &Path, column: &str, tol: f64) -> Result<CompareReport> {
    compare_tables(&Table::read(a)?, &Table::read(b)?, column, tol)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepEntry {
    pub cutoff: usize,
    pub var_x_min: f64,
    pub squeezing_degree: f64,
    pub n_a: f64,
    pub tail_weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    /// `|Δ var_x_min|` between successive cutoffs.
    pub changes: Vec<f64>,
    pub tol: f64,
    /// The last change is below `tol`.
    pub converged: bool,
}

impl fmt::Display for SweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cutoff  var_x_min           degree%     n_a         tail        change")?;
        for (k, e) in self.entries.iter().enumerate() {
            let change = if k == 0 { "-".to_string() } else { format!("{:.3e}", self.changes[k - 1]) };
            let flag = if k > 0 && self.changes[k - 1] >= self.tol { "  unconverged" } else { "" };
            writeln!(
                f,
                "{:<7} {:<19.12} {:<11.6} {:<11.6} {:<11.3e} {change}{flag}",
                e.cutoff, e.var_x_min, e.squeezing_degree, e.n_a, e.tail_weight
            )?;
        }
        write!(f, "tolerance {:e}: {}", self.tol, if self.converged { "converged" } else { "NOT converged" })
    }
}

/// Re-run a scenario at each cutoff (all modes) and compare endpoints.
pub fn convergence_sweep(cfg: &ScenarioConfig, cutoffs: &[usize], tol: f64) -> Result<SweepReport> {
    if cutoffs.len() < 2 {
        return Err(Error::Configuration("a sweep needs at least two cutoffs".into()));
    }
    let outputs: Vec<Result<RunOutput>> = std::thread::scope(|s| {
        let handles: Vec<_> = cutoffs
            .iter()
            .map(|&n| {
                let c = cfg.with_cutoff(n);
                s.spawn(move || run_scenario(&c, &RunOptions::default()))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut entries = Vec::new();
    for (out, &n) in outputs.into_iter().zip(cutoffs) {
        let out = out?;
        let last = *out.last();
        if !last.var_x_min.is_finite() {
            return Err(Error::Numerical { time: last.time, reason: format!("cutoff {n} produced a non-finite variance") });
        }
        entries.push(SweepEntry {
            cutoff: n,
            var_x_min: last.var_x_min,
            squeezing_degree: last.squeezing_degree,
            n_a: last.n_a,
            tail_weight: out.rows.iter().map(|r| r.tail_weight).fold(0.0, f64::max),
        });
    }
    let changes: Vec<f64> = entries.windows(2).map(|w| (w[1].var_x_min - w[0].var_x_min).abs()).collect();
    let converged = *changes.last().unwrap() < tol;
    Ok(SweepReport { entries, changes, tol, converged })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeriveLine {
    pub label: String,
    pub numeric: C64,
    pub predicted: C64,
}

impl DeriveLine {
    pub fn deviation_pct(&self) -> f64 {
        100.0 * (self.numeric - self.predicted).norm() / self.predicted.norm()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeriveReport {
    pub name: String,
    pub lines: Vec<DeriveLine>,
    pub residue: f64,
    pub generator: Operator,
}

impl fmt::Display for DeriveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: second-order static generator (units of λa = {LAMBDA_A_SI:e} s⁻¹)", self.name)?;
        for l in &self.lines {
            writeln!(
                f,
                "  {:<28} numeric {:+.6e}{:+.6e}i  closed form {:+.6e}{:+.6e}i  deviation {:.3}%",
                l.label,
                l.numeric.re,
                l.numeric.im,
                l.predicted.re,
                l.predicted.im,
                l.deviation_pct()
            )?;
        }
        write!(f, "  oscillating residue (max Frobenius norm) {:.3e}", self.residue)
    }
}

/// Levels kept per mode when extracting generators; only the lowest
/// Fock sectors are compared.
const DERIVE_CUTOFF: usize = 3;

/// Dressed ket `(e^{iφ1}|e> ± |g>)/√2` times the given mode levels.
fn dressed_ket(space: &HilbertSpace, modes: &[usize], plus: bool, phi1: f64) -> DVector<C64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = DVector::zeros(space.total_dim());
    let idx = |atom: usize| {
        let mut l = modes.to_vec();
        l.push(atom);
        space.basis_index(&l).expect("levels within the derive cutoff")
    };
    v[idx(1)] = C64::from_polar(r, phi1);
    v[idx(0)] = C64::new(if plus { r } else { -r }, 0.0);
    v
}

/// Numerically average a single-drive scenario to second order and set the
/// result against the closed-form couplings.
pub fn derive_effective_report(cfg: &ScenarioConfig) -> Result<DeriveReport> {
    let p = cfg.params();
    p.validate()?;
    if p.omega2_mag != 0.0 {
        return Err(Error::Configuration("derive-effective needs a single drive (Ω2 = 0)".into()));
    }
    let th = Thresholds::default();
    let two_modes = cfg.scenario.cutoff_b.is_some();
    let mut factors = vec![Factor::Mode(DERIVE_CUTOFF)];
    if two_modes {
        factors.push(Factor::Mode(DERIVE_CUTOFF));
    }
    factors.push(Factor::Atom);
    let space = HilbertSpace::new(factors)?;
    let opts = DeriveOptions::default();

    if p.omega1_mag == 0.0 {
        // undriven dispersive coupling: Stark shift of |e,0>
        let h = build_interaction_picture(&p, &space)?;
        let gen = derive_effective_numeric(&h, &opts)?;
        let mut levels = vec![0; space.mode_count()];
        levels.push(1);
        let e0 = space.basis_index(&levels)?;
        let mut predicted = p.lambda_a * p.lambda_a / nonzero(p.delta_a, "δa")?;
        if two_modes && p.lambda_b != 0.0 {
            predicted += p.lambda_b * p.lambda_b / nonzero(p.delta_b, "δb")?;
        }
        let lines = vec![DeriveLine {
            label: "<e,0|H_eff|e,0>".into(),
            numeric: gen.operator.get(e0, e0),
            predicted: predicted.into(),
        }];
        return Ok(DeriveReport { name: cfg.scenario.name.clone(), lines, residue: gen.residue, generator: gen.operator });
    }

    if !two_modes {
        return Err(Error::Configuration("driven derive-effective needs both modes (set cutoff_b)".into()));
    }
    let h = build_laser_frame(&p, &space, &th)?;
    let gen = derive_effective_numeric(&h, &opts)?;
    let kind = match cfg.coupling_kind()? {
        Some(k) => k,
        None if (p.delta_b + p.delta_a).abs() <= 1e-12 * p.delta_a.abs() => CouplingKind::Pdc,
        None => CouplingKind::Puc,
    };
    let regime = match &cfg.scenario.regime {
        Some(r) => r.parse().map_err(as_config)?,
        None => classify_regime(&p, &th)?.tag,
    };
    let mut lines = Vec::new();
    for (branch, plus) in [(Branch::Plus, true), (Branch::Minus, false)] {
        let (label, bra, ket, predicted) = match kind {
            CouplingKind::Pdc => (
                format!("Λ{} ({}) <0,0|H|1,1>", if plus { "+" } else { "−" }, regime.name()),
                [0, 0],
                [1, 1],
                pdc_coupling(&p, branch, regime, &th)?.coupling,
            ),
            CouplingKind::Puc => (
                format!("Σ{} ({}) <1,0|H|0,1>", if plus { "+" } else { "−" }, regime.name()),
                [1, 0],
                [0, 1],
                puc_coupling(&p, branch, regime, &th)?.coupling,
            ),
            CouplingKind::Squeeze => {
                return Err(Error::Configuration("squeezing needs two drives; derive-effective covers PDC and PUC".into()))
            }
        };
        let b = dressed_ket(&space, &bra, plus, p.phi1);
        let k = dressed_ket(&space, &ket, plus, p.phi1);
        let numeric = b.dotc(&gen.operator.apply(&k));
        lines.push(DeriveLine { label, numeric, predicted });
    }
    Ok(DeriveReport { name: cfg.scenario.name.clone(), lines, residue: gen.residue, generator: gen.operator })
}

fn nonzero(x: f64, name: &str) -> Result<f64> {
    if x == 0.0 {
        Err(Error::SingularCoupling(format!("{name} = 0")))
    } else {
        Ok(x)
    }
}

/// Exit code for an error: 1 config/parse, 2 regime validity, 3 numerical.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::RegimeValidity(_) | Error::Unclassifiable(_) | Error::SingularCoupling(_) => 2,
        Error::Numerical { .. } | Error::Accuracy { .. } | Error::AmbiguousResonance { .. } => 3,
        _ => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast(name: &str) -> ScenarioConfig {
        builtin(name).unwrap()
    }

    #[test]
    fn every_builtin_parses() {
        for name in builtin_names() {
            let cfg = builtin(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.scenario.name, name);
            assert!(!cfg.scenario.description.is_empty());
        }
        assert_eq!(list_scenarios().len(), BUILTIN.len());
    }

    #[test]
    fn unknown_keys_and_models_are_rejected() {
        let bad = "[scenario]\nname = \"x\"\nmodel = \"ajc\"\ncutoff_a = 3\nbogus = 1\n";
        assert!(matches!(ScenarioConfig::from_toml(bad), Err(Error::Parse(_))));
        let bad = "[scenario]\nname = \"x\"\nmodel = \"warp\"\ncutoff_a = 3\n";
        assert!(matches!(ScenarioConfig::from_toml(bad), Err(Error::Configuration(_))));
        let bad = "[scenario]\nname = \"x\"\nmodel = \"ajc\"\ncutoff_a = 3\n[initial]\nmode_a = \"fock 7\"\n";
        assert!(matches!(ScenarioConfig::from_toml(bad), Err(Error::Configuration(_))));
    }

    #[test]
    fn csv_header_is_exact() {
        let mut cfg = fast("fig3-analytic");
        cfg.integrator.points = 3;
        let out = run_scenario(&cfg, &RunOptions::default()).unwrap();
        let text = out.to_csv_string().unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "time,r,var_x_min,theta_min,squeezing_degree,n_a,n_b,pop_e,purity,trace_error,tail_weight"
        );
        let t = Table::parse(&text).unwrap();
        assert_eq!(t.columns[0].len(), 3);
        assert!(t.column("n_b").unwrap().iter().all(|x| x.is_nan()));
    }

    #[test]
    fn analytic_squeeze_matches_law() {
        let out = run_scenario(&fast("fig3-analytic"), &RunOptions::default()).unwrap();
        for row in &out.rows {
            assert!((row.var_x_min - (-2.0 * row.r).exp() / 4.0).abs() < 1e-14);
        }
        assert!((out.last().r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regime_violation_and_force() {
        let mut cfg = fast("ajc");
        cfg.system.omega2 = 5.0;
        cfg.system.delta_a = -5.0;
        let err = run_scenario(&cfg, &RunOptions::default()).unwrap_err();
        assert_eq!(exit_code(&err), 2);
        let out = run_scenario(&cfg, &RunOptions { force: true }).unwrap();
        assert_eq!(out.forced.len(), 1);
        assert!(out.to_csv_string().unwrap().starts_with("# forced: |Ω2| ≫ |λ̃a|"));
    }

    #[test]
    fn positive_delta2_is_a_config_error() {
        let mut cfg = fast("fig3-full");
        cfg.system.delta2 = 800.0;
        let err = run_scenario(&cfg, &RunOptions::default()).unwrap_err();
        assert_eq!(exit_code(&err), 1);
        assert!(err.to_string().contains("-800"));
    }

    #[test]
    fn compare_identical_and_errors() {
        let out = run_scenario(&fast("fig3-analytic"), &RunOptions::default()).unwrap();
        let t = Table::parse(&out.to_csv_string().unwrap()).unwrap();
        let rep = compare_tables(&t, &t, "var_x_min", 0.0).unwrap();
        assert_eq!(rep.max_abs, 0.0);
        assert!(rep.passed && !rep.resampled);
        assert!(matches!(compare_tables(&t, &t, "nope", 0.1), Err(Error::MissingColumn(_))));

        let shifted = Table {
            headers: vec!["time".into(), "x".into()],
            columns: vec![vec![100.0, 101.0], vec![1.0, 2.0]],
        };
        let base = Table { headers: shifted.headers.clone(), columns: vec![vec![0.0, 1.0], vec![1.0, 2.0]] };
        assert!(matches!(compare_tables(&base, &shifted, "x", 0.1), Err(Error::DisjointGrids(_))));

        let fine = Table { headers: base.headers.clone(), columns: vec![vec![0.0, 0.5, 1.0], vec![1.0, 1.5, 2.0]] };
        let rep = compare_tables(&fine, &base, "x", 1e-12).unwrap();
        assert!(rep.resampled && rep.passed);
    }

    #[test]
    fn sweep_flags_starved_cutoff_and_needs_two() {
        let cfg = fast("fig3-effective");
        assert!(matches!(convergence_sweep(&cfg, &[30], 1e-5), Err(Error::Configuration(_))));
        let rep = convergence_sweep(&cfg, &[4, 30], DEFAULT_SWEEP_TOL).unwrap();
        assert!(rep.changes[0] > 1e-3);
        assert!(!rep.converged);
        assert!(rep.to_string().contains("unconverged"));
    }

    #[test]
    fn puc_single_photon_converges_at_three() {
        let cfg = fast("puc-intermediate");
        let rep = convergence_sweep(&cfg, &[3, 5], DEFAULT_SWEEP_TOL).unwrap();
        assert!(rep.converged, "{rep}");
        assert!(rep.changes[0] < 1e-12);
    }

    #[test]
    fn runs_are_bit_identical() {
        let cfg = fast("ajc");
        let a = run_scenario(&cfg, &RunOptions::default()).unwrap().to_csv_string().unwrap();
        let b = run_scenario(&cfg, &RunOptions::default()).unwrap().to_csv_string().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn derive_report_matches_witnesses() {
        let rep = derive_effective_report(&fast("dispersive-jc")).unwrap();
        assert!(rep.lines[0].deviation_pct() < 2.0, "{rep}");
        let rep = derive_effective_report(&fast("pdc-intermediate")).unwrap();
        assert!((rep.lines[0].predicted.re - 0.02).abs() < 1e-15);
        for l in &rep.lines {
            assert!(l.deviation_pct() < 5.0, "{rep}");
        }
        assert!(matches!(derive_effective_report(&fast("fig3-full")), Err(Error::Configuration(_))));
    }
}
