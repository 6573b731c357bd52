//! Truncated Fock-space and two-level operator algebra.
//!
//! Composite spaces are ordered tensor products of factors. The Kronecker
//! convention is fixed throughout the crate: factor 0 is the most significant
//! index, so a basis state `|i0, i1, .., ik>` has flat index
//! `((i0 * d1 + i1) * d2 + ..) * dk + ik`. Scenario spaces always list mode
//! `a` first, then mode `b` when present, then the atom.
//!
//! Atomic levels are indexed `|g> = 0`, `|e> = 1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Factor {
    /// Bosonic mode truncated to `|0>..|dim-1>`.
    Mode(usize),
    /// Two-level atom with basis `|g>, |e>`.
    Atom,
}

impl Factor {
    pub fn dim(self) -> usize {
        match self {
            Factor::Mode(n) => n,
            Factor::Atom => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    factors: Vec<Factor>,
    total_dim: usize,
}

impl HilbertSpace {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidIndex("a space needs at least one factor".into()));
        }
        for f in &factors {
            if let Factor::Mode(n) = *f {
                if n < 2 {
                    return Err(Error::InvalidDimension(n));
                }
            }
        }
        let total_dim = factors.iter().map(|f| f.dim()).product();
        Ok(Self { factors, total_dim })
    }

    pub fn mode(dim: usize) -> Result<Self> {
        Self::new(vec![Factor::Mode(dim)])
    }

    pub fn atom() -> Self {
        Self { factors: vec![Factor::Atom], total_dim: 2 }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn factor_dim(&self, slot: usize) -> usize {
        self.factors[slot].dim()
    }

    /// Slot of the `k`-th bosonic mode (0 = mode a, 1 = mode b).
    pub fn mode_slot(&self, k: usize) -> Option<usize> {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, f)| matches!(f, Factor::Mode(_)))
            .nth(k)
            .map(|(i, _)| i)
    }

    pub fn atom_slot(&self) -> Option<usize> {
        self.factors.iter().position(|f| *f == Factor::Atom)
    }

    pub fn mode_count(&self) -> usize {
        self.factors.iter().filter(|f| matches!(f, Factor::Mode(_))).count()
    }

    /// Flat index of a product basis state.
    pub fn basis_index(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.factors.len() {
            return Err(Error::InvalidIndex(format!(
                "expected {} levels, got {}",
                self.factors.len(),
                levels.len()
            )));
        }
        let mut idx = 0;
        for (f, &l) in self.factors.iter().zip(levels) {
            if l >= f.dim() {
                return Err(Error::InvalidIndex(format!("level {l} outside {f:?}")));
            }
            idx = idx * f.dim() + l;
        }
        Ok(idx)
    }

    /// Inverse of [`basis_index`](Self::basis_index).
    pub fn levels_of(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, f) in self.factors.iter().enumerate().rev() {
            out[slot] = index % f.dim();
            index /= f.dim();
        }
        out
    }

    fn sub(&self, keep: &[usize]) -> Result<HilbertSpace> {
        HilbertSpace::new(keep.iter().map(|&k| self.factors[k]).collect())
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.factors.len()];
        for k in (0..self.factors.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.factors[k + 1].dim();
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Ground,
    Excited,
}

impl Level {
    pub fn index(self) -> usize {
        match self {
            Level::Ground => 0,
            Level::Excited => 1,
        }
    }
}

/// Dense operator tagged with the space it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: DMatrix<C64>,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: DMatrix<C64>) -> Result<Self> {
        let d = space.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::SpaceMismatch(format!(
                "matrix is {}x{}, space has dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let d = space.total_dim();
        Self { space: space.clone(), matrix: DMatrix::zeros(d, d) }
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let d = space.total_dim();
        Self { space: space.clone(), matrix: DMatrix::identity(d, d) }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn dagger(&self) -> Operator {
        Self { space: self.space.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, c: C64) -> Operator {
        Self { space: self.space.clone(), matrix: &self.matrix * c }
    }

    fn check_same(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch(format!(
                "{:?} vs {:?}",
                self.space.factors, other.space.factors
            )));
        }
        Ok(())
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Operator> {
        self.check_same(other)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix * &other.matrix })
    }

    pub fn try_add(&self, other: &Operator) -> Result<Operator> {
        self.check_same(other)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix + &other.matrix })
    }

    pub fn try_sub(&self, other: &Operator) -> Result<Operator> {
        self.check_same(other)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix - &other.matrix })
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.try_mul(other)?.try_sub(&other.try_mul(self)?)
    }

    /// Tensor product `self ⊗ other`; factors of `other` follow those of `self`.
    pub fn kron(&self, other: &Operator) -> Operator {
        let mut factors = self.space.factors.clone();
        factors.extend_from_slice(&other.space.factors);
        let space = HilbertSpace::new(factors).expect("factors already validated");
        Self { space, matrix: self.matrix.kronecker(&other.matrix) }
    }

    pub fn apply(&self, psi: &DVector<C64>) -> DVector<C64> {
        &self.matrix * psi
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.matrix.iter().all(|z| z.norm() <= tol)
    }

    /// Real eigenvalues of a Hermitian operator in ascending order.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }
}

macro_rules! forward_op {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl std::ops::$trait<&Operator> for &Operator {
            type Output = Operator;
            fn $method(self, rhs: &Operator) -> Operator {
                self.$checked(rhs).expect("operators on different spaces")
            }
        }
    };
}

forward_op!(Mul, mul, try_mul);
forward_op!(Add, add, try_add);
forward_op!(Sub, sub, try_sub);

pub(crate) fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Bosonic annihilation operator with `<n-1|a|n> = sqrt(n)`.
pub fn annihilation(dim: usize) -> Result<Operator> {
    let space = HilbertSpace::mode(dim)?;
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Operator::new(space, m)
}

pub fn creation(dim: usize) -> Result<Operator> {
    Ok(annihilation(dim)?.dagger())
}

pub fn number(dim: usize) -> Result<Operator> {
    let space = HilbertSpace::mode(dim)?;
    let m = DMatrix::from_diagonal(&DVector::from_fn(dim, |n, _| C64::new(n as f64, 0.0)));
    Operator::new(space, m)
}

/// `|to><from|` on the two-level atom; `atomic_projector(Ground, Excited)` is σ_eg.
pub fn atomic_projector(from: Level, to: Level) -> Operator {
    let mut m = DMatrix::zeros(2, 2);
    m[(to.index(), from.index())] = ONE;
    Operator { space: HilbertSpace::atom(), matrix: m }
}

/// Lift a single-factor operator into `space` at `slot`, identity elsewhere.
pub fn embed(op: &Operator, slot: usize, space: &HilbertSpace) -> Result<Operator> {
    if slot >= space.factors.len() {
        return Err(Error::InvalidIndex(format!("slot {slot} outside {:?}", space.factors)));
    }
    if op.space.factors.len() != 1 || op.space.factors[0] != space.factors[slot] {
        return Err(Error::SpaceMismatch(format!(
            "operator on {:?} cannot sit in slot {slot} ({:?})",
            op.space.factors, space.factors[slot]
        )));
    }
    let left: usize = space.factors[..slot].iter().map(|f| f.dim()).product();
    let right: usize = space.factors[slot + 1..].iter().map(|f| f.dim()).product();
    let m = DMatrix::<C64>::identity(left, left)
        .kronecker(&op.matrix)
        .kronecker(&DMatrix::identity(right, right));
    Operator::new(space.clone(), m)
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateKind {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    space: HilbertSpace,
    kind: StateKind,
}

impl State {
    pub fn pure(space: HilbertSpace, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::SpaceMismatch(format!(
                "{} amplitudes for dimension {}",
                amplitudes.len(),
                space.total_dim()
            )));
        }
        Ok(Self { space, kind: StateKind::Pure(amplitudes) })
    }

    pub fn mixed(space: HilbertSpace, rho: DMatrix<C64>) -> Result<Self> {
        let d = space.total_dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::SpaceMismatch(format!(
                "density matrix {}x{} for dimension {d}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        Ok(Self { space, kind: StateKind::Mixed(rho) })
    }

    pub fn basis(space: &HilbertSpace, levels: &[usize]) -> Result<Self> {
        let idx = space.basis_index(levels)?;
        let mut v = DVector::zeros(space.total_dim());
        v[idx] = ONE;
        Self::pure(space.clone(), v)
    }

    pub fn fock(dim: usize, n: usize) -> Result<Self> {
        Self::basis(&HilbertSpace::mode(dim)?, &[n])
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::fock(dim, 0)
    }

    pub fn atom(level: Level) -> Self {
        Self::basis(&HilbertSpace::atom(), &[level.index()]).expect("atomic level in range")
    }

    /// Coherent state from its Fock series, renormalised on the truncated space.
    pub fn coherent(dim: usize, alpha: C64) -> Result<Self> {
        let space = HilbertSpace::mode(dim)?;
        let mut v = DVector::zeros(dim);
        let mut amp = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..dim {
            if n > 0 {
                amp = amp * alpha / (n as f64).sqrt();
            }
            v[n] = amp;
        }
        let norm = v.norm();
        Self::pure(space, v / C64::new(norm, 0.0))
    }

    /// Tensor product of states in factor order; pure if every part is pure.
    pub fn product(parts: &[State]) -> Result<Self> {
        let (first, rest) = parts
            .split_first()
            .ok_or_else(|| Error::InvalidIndex("empty product".into()))?;
        let mut acc = first.clone();
        for p in rest {
            let mut factors = acc.space.factors.clone();
            factors.extend_from_slice(&p.space.factors);
            let space = HilbertSpace::new(factors)?;
            acc = match (&acc.kind, &p.kind) {
                (StateKind::Pure(x), StateKind::Pure(y)) => State::pure(space, x.kronecker(y))?,
                _ => State::mixed(space, acc.density_matrix().kronecker(&p.density_matrix()))?,
            };
        }
        Ok(acc)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn kind(&self) -> &StateKind {
        &self.kind
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.kind, StateKind::Pure(_))
    }

    pub fn density_matrix(&self) -> DMatrix<C64> {
        match &self.kind {
            StateKind::Pure(v) => v * v.adjoint(),
            StateKind::Mixed(r) => r.clone(),
        }
    }

    pub fn to_mixed(&self) -> State {
        State { space: self.space.clone(), kind: StateKind::Mixed(self.density_matrix()) }
    }

    /// `<psi|psi>` for pure states, `Tr rho` for mixed ones.
    pub fn trace(&self) -> f64 {
        match &self.kind {
            StateKind::Pure(v) => v.norm_squared(),
            StateKind::Mixed(r) => r.trace().re,
        }
    }

    pub fn hermiticity_error(&self) -> f64 {
        match &self.kind {
            StateKind::Pure(_) => 0.0,
            StateKind::Mixed(r) => max_abs_diff(r, &r.adjoint()),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match &self.kind {
            StateKind::Pure(_) => 0.0,
            StateKind::Mixed(r) => hermitian_eigenvalues(r).first().copied().unwrap_or(0.0),
        }
    }

    /// Probability of each product basis state.
    pub fn populations(&self) -> Vec<f64> {
        match &self.kind {
            StateKind::Pure(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            StateKind::Mixed(r) => (0..r.nrows()).map(|i| r[(i, i)].re).collect(),
        }
    }

    pub fn amplitude(&self, levels: &[usize]) -> Result<C64> {
        let idx = self.space.basis_index(levels)?;
        match &self.kind {
            StateKind::Pure(v) => Ok(v[idx]),
            StateKind::Mixed(_) => Err(Error::SpaceMismatch("amplitude of a mixed state".into())),
        }
    }

    /// Probability of a product basis state.
    pub fn population(&self, levels: &[usize]) -> Result<f64> {
        let idx = self.space.basis_index(levels)?;
        Ok(match &self.kind {
            StateKind::Pure(v) => v[idx].norm_sqr(),
            StateKind::Mixed(r) => r[(idx, idx)].re,
        })
    }
}

/// `<psi|A|psi>` or `Tr(rho A)`.
pub fn expectation(state: &State, op: &Operator) -> Result<C64> {
    if state.space != op.space {
        return Err(Error::SpaceMismatch(format!(
            "state on {:?}, operator on {:?}",
            state.space.factors, op.space.factors
        )));
    }
    Ok(match &state.kind {
        StateKind::Pure(v) => v.dotc(&(&op.matrix * v)),
        StateKind::Mixed(r) => {
            let d = r.nrows();
            let mut acc = ZERO;
            for i in 0..d {
                for k in 0..d {
                    acc += r[(i, k)] * op.matrix[(k, i)];
                }
            }
            acc
        }
    })
}

/// Reduced density matrix on the factors listed in `keep` (kept in the given order).
pub fn partial_trace(state: &State, keep: &[usize]) -> Result<State> {
    let space = &state.space;
    let nf = space.factors.len();
    if keep.is_empty() {
        return Err(Error::InvalidIndex("partial trace must keep at least one factor".into()));
    }
    for (i, &k) in keep.iter().enumerate() {
        if k >= nf || keep[..i].contains(&k) {
            return Err(Error::InvalidIndex(format!("bad keep list {keep:?} for {nf} factors")));
        }
    }
    let traced: Vec<usize> = (0..nf).filter(|k| !keep.contains(k)).collect();
    let kept_space = space.sub(keep)?;
    let traced_space = if traced.is_empty() { None } else { Some(space.sub(&traced)?) };
    let strides = space.strides();

    let offset = |kept_idx: usize, traced_idx: usize| -> usize {
        let kl = kept_space.levels_of(kept_idx);
        let mut flat = 0;
        for (j, &slot) in keep.iter().enumerate() {
            flat += kl[j] * strides[slot];
        }
        if let Some(ts) = &traced_space {
            let tl = ts.levels_of(traced_idx);
            for (j, &slot) in traced.iter().enumerate() {
                flat += tl[j] * strides[slot];
            }
        }
        flat
    };

    let dk = kept_space.total_dim();
    let dt = traced_space.as_ref().map_or(1, |s| s.total_dim());
    let index: Vec<Vec<usize>> = (0..dk).map(|i| (0..dt).map(|t| offset(i, t)).collect()).collect();
    let mut out = DMatrix::zeros(dk, dk);
    match &state.kind {
        StateKind::Pure(v) => {
            for i in 0..dk {
                for j in 0..dk {
                    let mut acc = ZERO;
                    for t in 0..dt {
                        acc += v[index[i][t]] * v[index[j][t]].conj();
                    }
                    out[(i, j)] = acc;
                }
            }
        }
        StateKind::Mixed(r) => {
            for i in 0..dk {
                for j in 0..dk {
                    let mut acc = ZERO;
                    for t in 0..dt {
                        acc += r[(index[i][t], index[j][t])];
                    }
                    out[(i, j)] = acc;
                }
            }
        }
    }
    State::mixed(kept_space, out)
}
