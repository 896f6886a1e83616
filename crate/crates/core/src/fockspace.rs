//! Composite Hilbert space of two three-level emitters, each coupled to one
//! truncated cavity mode.
//!
//! Basis ordering is lexicographic in `(q_A, p_A, q_B, p_B)` with `q_A`
//! slowest, levels ordered `Up < Down < Excited` and photon numbers
//! `0..=n_max`. Equivalently `index = arm_index(A) * arm_dim + arm_index(B)`
//! with `arm_index = level * (n_max + 1) + photons`, so a two-arm operator
//! `X_A ⊗ Y_B` is the Kronecker product `X ⊗ Y` of per-arm matrices.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Emitter level. `Up` is logical |0⟩, `Down` is logical |1⟩; only the
/// `Down ↔ Excited` transition couples to the cavity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Level {
    Up,
    Down,
    Excited,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Up, Level::Down, Level::Excited];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Level> {
        Level::ALL.get(i).copied()
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Up => "↑",
            Level::Down => "↓",
            Level::Excited => "e",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arm {
    A,
    B,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::A, Arm::B];

    pub fn other(self) -> Arm {
        match self {
            Arm::A => Arm::B,
            Arm::B => Arm::A,
        }
    }
}

/// `|q_A, p_A; q_B, p_B⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisLabel {
    pub q_a: Level,
    pub p_a: usize,
    pub q_b: Level,
    pub p_b: usize,
}

impl BasisLabel {
    pub fn new(q_a: Level, p_a: usize, q_b: Level, p_b: usize) -> Self {
        BasisLabel { q_a, p_a, q_b, p_b }
    }

    pub fn arm(&self, arm: Arm) -> (Level, usize) {
        match arm {
            Arm::A => (self.q_a, self.p_a),
            Arm::B => (self.q_b, self.p_b),
        }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{};{},{}⟩", self.q_a, self.p_a, self.q_b, self.p_b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    /// Photon-number cutoff per cavity.
    pub n_max: usize,
    /// Largest tolerated weight on states whose dynamics the cutoff truncates.
    pub leak_tolerance: f64,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig { n_max: 1, leak_tolerance: 1e-10 }
    }
}

impl SpaceConfig {
    pub fn with_n_max(n_max: usize) -> Self {
        SpaceConfig { n_max, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockSpace {
    config: SpaceConfig,
}

impl FockSpace {
    pub fn new(config: SpaceConfig) -> Result<Self> {
        if config.n_max < 1 {
            return Err(Error::invalid("n_max must be at least 1"));
        }
        if !(config.leak_tolerance > 0.0) {
            return Err(Error::invalid("leak_tolerance must be positive"));
        }
        Ok(FockSpace { config })
    }

    pub fn config(&self) -> SpaceConfig {
        self.config
    }

    pub fn n_max(&self) -> usize {
        self.config.n_max
    }

    pub fn photon_levels(&self) -> usize {
        self.config.n_max + 1
    }

    /// Dimension of one emitter ⊗ cavity factor.
    pub fn arm_dim(&self) -> usize {
        3 * self.photon_levels()
    }

    pub fn dim(&self) -> usize {
        self.arm_dim() * self.arm_dim()
    }

    pub fn arm_index(&self, level: Level, photons: usize) -> usize {
        debug_assert!(photons <= self.config.n_max);
        level.index() * self.photon_levels() + photons
    }

    pub fn arm_label(&self, i: usize) -> (Level, usize) {
        let levels = self.photon_levels();
        (Level::from_index(i / levels).expect("arm index in range"), i % levels)
    }

    pub fn index(&self, label: &BasisLabel) -> Result<usize> {
        if label.p_a > self.config.n_max || label.p_b > self.config.n_max {
            return Err(Error::invalid(format!("{label} exceeds the photon cutoff {}", self.config.n_max)));
        }
        Ok(self.arm_index(label.q_a, label.p_a) * self.arm_dim() + self.arm_index(label.q_b, label.p_b))
    }

    pub fn label(&self, index: usize) -> BasisLabel {
        assert!(index < self.dim(), "basis index {index} out of range");
        let (q_a, p_a) = self.arm_label(index / self.arm_dim());
        let (q_b, p_b) = self.arm_label(index % self.arm_dim());
        BasisLabel { q_a, p_a, q_b, p_b }
    }

    pub fn labels(&self) -> impl Iterator<Item = BasisLabel> + '_ {
        (0..self.dim()).map(move |i| self.label(i))
    }

    pub fn arm_identity(&self) -> DMatrix<C64> {
        DMatrix::identity(self.arm_dim(), self.arm_dim())
    }

    /// Truncated bosonic lowering operator on one arm's cavity.
    pub fn arm_annihilation(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.arm_dim(), self.arm_dim());
        for level in Level::ALL {
            for n in 1..=self.config.n_max {
                let from = self.arm_index(level, n);
                let to = self.arm_index(level, n - 1);
                m[(to, from)] = C64::new((n as f64).sqrt(), 0.0);
            }
        }
        m
    }

    /// `|to⟩⟨from|` on one emitter, identity on its cavity.
    pub fn arm_transition(&self, from: Level, to: Level) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.arm_dim(), self.arm_dim());
        for n in 0..=self.config.n_max {
            m[(self.arm_index(to, n), self.arm_index(from, n))] = ONE;
        }
        m
    }

    /// Lifts a single-emitter 3 × 3 matrix (basis `Up, Down, Excited`) to the arm factor.
    pub fn arm_matter_operator(&self, matter: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(matter.shape(), (3, 3));
        matter.kronecker(&DMatrix::identity(self.photon_levels(), self.photon_levels()))
    }

    /// Places a per-arm operator on `arm`, identity on the other arm.
    pub fn embed(&self, arm: Arm, local: &DMatrix<C64>) -> Operator {
        assert_eq!(local.shape(), (self.arm_dim(), self.arm_dim()));
        let id = self.arm_identity();
        Operator::new(match arm {
            Arm::A => local.kronecker(&id),
            Arm::B => id.kronecker(local),
        })
    }

    pub fn identity(&self) -> Operator {
        Operator::new(DMatrix::identity(self.dim(), self.dim()))
    }

    pub fn annihilation(&self, arm: Arm) -> Operator {
        self.embed(arm, &self.arm_annihilation())
    }

    pub fn creation(&self, arm: Arm) -> Operator {
        self.annihilation(arm).adjoint()
    }

    pub fn number(&self, arm: Arm) -> Operator {
        let c = self.arm_annihilation();
        self.embed(arm, &(c.adjoint() * &c))
    }

    pub fn transition(&self, arm: Arm, from: Level, to: Level) -> Operator {
        self.embed(arm, &self.arm_transition(from, to))
    }

    pub fn basis_state(&self, label: &BasisLabel) -> Result<PureState> {
        let mut amps = DVector::zeros(self.dim());
        amps[self.index(label)?] = ONE;
        Ok(PureState::new(amps))
    }

    /// Product of two emitter states (amplitudes on `Up, Down, Excited`)
    /// with both cavities in vacuum.
    pub fn product_vacuum_state(&self, matter_a: [C64; 3], matter_b: [C64; 3]) -> PureState {
        let mut amps = DVector::zeros(self.dim());
        for qa in Level::ALL {
            for qb in Level::ALL {
                let label = BasisLabel::new(qa, 0, qb, 0);
                amps[self.index(&label).unwrap()] = matter_a[qa.index()] * matter_b[qb.index()];
            }
        }
        PureState::new(amps)
    }

    /// Partial trace over both cavities, leaving the 9 × 9 two-emitter
    /// density matrix (basis `q_A * 3 + q_B`).
    pub fn trace_cavities(&self, rho: &DensityMatrix) -> DensityMatrix {
        assert_eq!(rho.dim(), self.dim());
        let m = rho.matrix();
        let levels = self.photon_levels();
        let mut out = DMatrix::zeros(9, 9);
        for qa in 0..3 {
            for qb in 0..3 {
                for ra in 0..3 {
                    for rb in 0..3 {
                        let mut acc = ZERO;
                        for pa in 0..levels {
                            for pb in 0..levels {
                                let i = (qa * levels + pa) * self.arm_dim() + qb * levels + pb;
                                let j = (ra * levels + pa) * self.arm_dim() + rb * levels + pb;
                                acc += m[(i, j)];
                            }
                        }
                        out[(qa * 3 + qb, ra * 3 + rb)] = acc;
                    }
                }
            }
        }
        DensityMatrix::new(out)
    }

    /// `rho_matter ⊗ |0,0⟩⟨0,0|` on the full space.
    pub fn embed_vacuum(&self, matter: &DensityMatrix) -> DensityMatrix {
        assert_eq!(matter.dim(), 9);
        let levels = self.photon_levels();
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for a in 0..9 {
            for b in 0..9 {
                let i = (a / 3) * levels * self.arm_dim() + (a % 3) * levels;
                let j = (b / 3) * levels * self.arm_dim() + (b % 3) * levels;
                out[(i, j)] = matter.matrix()[(a, b)];
            }
        }
        DensityMatrix::new(out)
    }

    /// Total population on basis states with at least one photon in either cavity.
    pub fn photon_weight(&self, rho: &DensityMatrix) -> f64 {
        self.labels()
            .enumerate()
            .filter(|(_, l)| l.p_a > 0 || l.p_b > 0)
            .map(|(i, _)| rho.matrix()[(i, i)].re)
            .sum()
    }

    /// Total population on basis states with either cavity at the cutoff.
    pub fn cutoff_weight(&self, rho: &DensityMatrix) -> f64 {
        let n = self.config.n_max;
        self.labels()
            .enumerate()
            .filter(|(_, l)| l.p_a == n || l.p_b == n)
            .map(|(i, _)| rho.matrix()[(i, i)].re)
            .sum()
    }

    pub fn state_record(&self, state: &PureState) -> Result<StateRecord> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: state.dim() });
        }
        Ok(StateRecord {
            config: self.config,
            amplitudes: state.amplitudes().iter().map(|z| (z.re, z.im)).collect(),
        })
    }
}

/// Restricts a 9 × 9 two-emitter density matrix to the qubit subspace
/// `{Up, Down}²` (basis `|q_A q_B⟩`, `Up = 0`). Returns the 4 × 4 block and
/// the population left outside it.
pub fn qubit_block(matter: &DensityMatrix) -> (DensityMatrix, f64) {
    assert_eq!(matter.dim(), 9);
    let map = [0usize, 1, 3, 4];
    let block = DMatrix::from_fn(4, 4, |i, j| matter.matrix()[(map[i], map[j])]);
    let inside: f64 = (0..4).map(|i| block[(i, i)].re).sum();
    (DensityMatrix::new(block), matter.trace() - inside)
}

/// Dense linear operator on the composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    matrix: DMatrix<C64>,
}

impl Operator {
    pub fn new(matrix: DMatrix<C64>) -> Self {
        assert!(matrix.is_square(), "operators are square");
        Operator { matrix }
    }

    pub fn zeros(dim: usize) -> Self {
        Operator::new(DMatrix::zeros(dim, dim))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Operator {
        Operator::new(self.matrix.adjoint())
    }

    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: state.dim() });
        }
        Ok(PureState::new(&self.matrix * state.amplitudes()))
    }

    /// `self · other` (apply `other` first).
    pub fn compose(&self, other: &Operator) -> Result<Operator> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(Operator::new(&self.matrix * &other.matrix))
    }

    /// `A ρ A†`.
    pub fn conjugate(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: rho.dim() });
        }
        Ok(DensityMatrix::new(&self.matrix * rho.matrix() * self.matrix.adjoint()))
    }

    pub fn scaled(&self, factor: C64) -> Operator {
        Operator::new(&self.matrix * factor)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        crate::linalg::max_abs_diff(&self.matrix, &self.matrix.adjoint()) <= tol
    }

    /// Operator norm bound used to detect identically-zero channels.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator::new(&self.matrix + &rhs.matrix)
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator::new(&self.matrix - &rhs.matrix)
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator::new(&self.matrix * &rhs.matrix)
    }
}

/// Amplitude vector, possibly unnormalized (conditional states carry their
/// probability in the norm).
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: DVector<C64>,
}

impl PureState {
    pub fn new(amplitudes: DVector<C64>) -> Self {
        PureState { amplitudes }
    }

    pub fn zeros(dim: usize) -> Self {
        PureState::new(DVector::zeros(dim))
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() < 1e-12
    }

    pub fn normalized(&self) -> Result<PureState> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(PureState::new(&self.amplitudes / C64::new(n, 0.0)))
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn scaled(&self, factor: C64) -> PureState {
        PureState::new(&self.amplitudes * factor)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::new(&self.amplitudes * self.amplitudes.adjoint())
    }

    pub fn from_record(record: &StateRecord) -> Result<(FockSpace, PureState)> {
        let space = FockSpace::new(record.config)?;
        if record.amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: record.amplitudes.len() });
        }
        let amps = DVector::from_iterator(space.dim(), record.amplitudes.iter().map(|&(re, im)| C64::new(re, im)));
        Ok((space, PureState::new(amps)))
    }
}

impl std::ops::Add for &PureState {
    type Output = PureState;
    fn add(self, rhs: &PureState) -> PureState {
        PureState::new(&self.amplitudes + &rhs.amplitudes)
    }
}

/// Self-describing JSON form of a state: `(re, im)` pairs in basis order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub config: SpaceConfig,
    pub amplitudes: Vec<(f64, f64)>,
}

/// Density operator; trace may be below one for conditional (unnormalized) states.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<C64>) -> Self {
        assert!(matrix.is_square(), "density matrices are square");
        DensityMatrix { matrix }
    }

    pub fn zeros(dim: usize) -> Self {
        DensityMatrix::new(DMatrix::zeros(dim, dim))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn normalized(&self) -> Result<DensityMatrix> {
        let t = self.trace();
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(DensityMatrix::new(&self.matrix / C64::new(t, 0.0)))
    }

    pub fn scaled(&self, factor: f64) -> DensityMatrix {
        DensityMatrix::new(&self.matrix * C64::new(factor, 0.0))
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn overlap(&self, psi: &DVector<C64>) -> f64 {
        assert_eq!(psi.len(), self.dim());
        psi.dotc(&(&self.matrix * psi)).re
    }

    pub fn expectation(&self, op: &Operator) -> C64 {
        (&self.matrix * op.matrix()).trace()
    }

    /// Hermitian part `(ρ + ρ†)/2`, which removes round-off asymmetry.
    pub fn hermitian_part(&self) -> DensityMatrix {
        DensityMatrix::new((&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0))
    }

    /// Weighted pure-state ensemble `ρ = Σ w_k |ψ_k⟩⟨ψ_k|` from the spectral
    /// decomposition; eigenvalues at or below `cutoff` are dropped.
    pub fn ensemble(&self, cutoff: f64) -> Vec<(f64, PureState)> {
        let eig = SymmetricEigen::new(self.hermitian_part().matrix);
        let mut out: Vec<(f64, PureState)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > cutoff)
            .map(|(k, &w)| (w, PureState::new(eig.eigenvectors.column(k).into_owned())))
            .collect();
        out.sort_by(|a, b| b.0.total_cmp(&a.0));
        out
    }
}

impl std::ops::Add for &DensityMatrix {
    type Output = DensityMatrix;
    fn add(self, rhs: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::new(&self.matrix + &rhs.matrix)
    }
}

impl std::ops::Sub for &DensityMatrix {
    type Output = DensityMatrix;
    fn sub(self, rhs: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::new(&self.matrix - &rhs.matrix)
    }
}

impl From<&PureState> for DensityMatrix {
    fn from(psi: &PureState) -> Self {
        psi.density()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n_max: usize) -> FockSpace {
        FockSpace::new(SpaceConfig::with_n_max(n_max)).unwrap()
    }

    fn ket(s: &FockSpace, qa: Level, pa: usize, qb: Level, pb: usize) -> PureState {
        s.basis_state(&BasisLabel::new(qa, pa, qb, pb)).unwrap()
    }

    fn close(a: &PureState, b: &PureState) -> bool {
        (a.amplitudes() - b.amplitudes()).iter().all(|z| z.norm() < 1e-14)
    }

    #[test]
    fn dimensions() {
        assert_eq!(space(1).dim(), 36);
        assert_eq!(space(2).dim(), 81);
        assert!(FockSpace::new(SpaceConfig::with_n_max(0)).is_err());
        let bad = SpaceConfig { n_max: 1, leak_tolerance: 0.0 };
        assert!(FockSpace::new(bad).is_err());
    }

    #[test]
    fn first_label_is_all_up_vacuum() {
        let s = space(1);
        assert_eq!(s.index(&BasisLabel::new(Level::Up, 0, Level::Up, 0)).unwrap(), 0);
        assert_eq!(s.label(1), BasisLabel::new(Level::Up, 0, Level::Up, 1));
        assert_eq!(s.label(s.arm_dim()), BasisLabel::new(Level::Up, 1, Level::Up, 0));
        assert!(s.index(&BasisLabel::new(Level::Up, 2, Level::Up, 0)).is_err());
    }

    #[test]
    fn index_bijection() {
        for n in 1..=3 {
            let s = space(n);
            for i in 0..s.dim() {
                assert_eq!(s.index(&s.label(i)).unwrap(), i);
            }
        }
    }

    #[test]
    fn lowering_action() {
        let s = space(1);
        let c_a = s.annihilation(Arm::A);
        let out = c_a.apply(&ket(&s, Level::Down, 1, Level::Up, 0)).unwrap();
        assert!(close(&out, &ket(&s, Level::Down, 0, Level::Up, 0)));
        let vac = c_a.apply(&ket(&s, Level::Down, 0, Level::Up, 0)).unwrap();
        assert_eq!(vac.norm(), 0.0);
        for arm in Arm::BOTH {
            let one = match arm {
                Arm::A => ket(&s, Level::Up, 1, Level::Up, 0),
                Arm::B => ket(&s, Level::Up, 0, Level::Up, 1),
            };
            let n = s.number(arm).apply(&one).unwrap();
            assert!((one.inner(&n).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn creation_is_exact_adjoint() {
        let s = space(2);
        for arm in Arm::BOTH {
            let c = s.annihilation(arm);
            let cd = s.creation(arm);
            assert_eq!(cd.matrix(), &c.matrix().adjoint());
        }
    }

    #[test]
    fn commutator_is_identity_below_cutoff() {
        for n_max in [1, 2, 3] {
            let s = space(n_max);
            for arm in Arm::BOTH {
                let c = s.annihilation(arm);
                let cd = s.creation(arm);
                let comm = &(&c * &cd) - &(&cd * &c);
                for (i, label) in s.labels().enumerate() {
                    let (_, p) = label.arm(arm);
                    let diag = comm.matrix()[(i, i)];
                    if p < n_max {
                        assert!((diag - C64::new(1.0, 0.0)).norm() < 1e-12);
                    } else {
                        assert!((diag - C64::new(-(n_max as f64), 0.0)).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn transitions() {
        let s = space(1);
        let lower_a = s.transition(Arm::A, Level::Excited, Level::Down);
        let out = lower_a.apply(&ket(&s, Level::Excited, 0, Level::Up, 0)).unwrap();
        assert!(close(&out, &ket(&s, Level::Down, 0, Level::Up, 0)));
        assert_eq!(lower_a.apply(&ket(&s, Level::Up, 0, Level::Up, 0)).unwrap().norm(), 0.0);
        let raise_b = s.transition(Arm::B, Level::Down, Level::Excited);
        let out = raise_b.apply(&ket(&s, Level::Up, 0, Level::Down, 0)).unwrap();
        assert!(close(&out, &ket(&s, Level::Up, 0, Level::Excited, 0)));
    }

    #[test]
    fn apply_and_inner_basics() {
        let s = space(1);
        let psi = PureState::new(DVector::from_fn(s.dim(), |i, _| C64::new(i as f64, 1.0 - i as f64 * 0.1)));
        assert_eq!(s.identity().apply(&psi).unwrap(), psi);
        let ip = psi.inner(&psi).unwrap();
        assert!((ip.re - psi.norm_sqr()).abs() < 1e-9 && ip.im.abs() < 1e-12);
        let short = PureState::zeros(4);
        assert!(matches!(s.identity().apply(&short), Err(Error::DimensionMismatch { .. })));
        assert!(psi.inner(&short).is_err());
    }

    #[test]
    fn symmetric_single_photon_under_beam_splitter_modes() {
        // c± = (c_A ± c_B)/√2 on (|↓,1;↓,0⟩ + |↓,0;↓,1⟩)/√2.
        let s = space(1);
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let sym = (&ket(&s, Level::Down, 1, Level::Down, 0) + &ket(&s, Level::Down, 0, Level::Down, 1)).scaled(h);
        let plus = (&s.annihilation(Arm::A) + &s.annihilation(Arm::B)).scaled(h);
        let minus = (&s.annihilation(Arm::A) - &s.annihilation(Arm::B)).scaled(h);
        let out_plus = plus.apply(&sym).unwrap();
        let out_minus = minus.apply(&sym).unwrap();
        // Brute force: the two one-photon terms each lower to |↓,0;↓,0⟩ with weight 1/2.
        let target = ket(&s, Level::Down, 0, Level::Down, 0);
        assert!((out_plus.inner(&target).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((out_plus.norm() - 1.0).abs() < 1e-14);
        assert!(out_minus.norm() < 1e-15);
    }

    #[test]
    fn cavity_trace_and_vacuum_embedding_round_trip() {
        let s = space(2);
        let plus = [C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)];
        let other = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let rho = s.product_vacuum_state(plus, other).density();
        let matter = s.trace_cavities(&rho);
        assert!((matter.trace() - 1.0).abs() < 1e-14);
        let back = s.embed_vacuum(&matter);
        assert!(crate::linalg::max_abs_diff(back.matrix(), rho.matrix()) < 1e-15);
        let (qubits, outside) = qubit_block(&matter);
        assert!(outside.abs() < 1e-15);
        assert!((qubits.trace() - 1.0).abs() < 1e-14);
        assert_eq!(s.photon_weight(&rho), 0.0);
    }

    #[test]
    fn ensemble_reconstructs_density() {
        let s = space(1);
        let a = ket(&s, Level::Up, 0, Level::Down, 0);
        let b = (&ket(&s, Level::Down, 0, Level::Up, 0) + &ket(&s, Level::Up, 0, Level::Down, 0))
            .scaled(C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        let rho = &a.density().scaled(0.25) + &b.density().scaled(0.75);
        let ens = rho.ensemble(1e-14);
        assert_eq!(ens.len(), 2);
        let mut rebuilt = DensityMatrix::zeros(s.dim());
        for (w, psi) in &ens {
            rebuilt = &rebuilt + &psi.density().scaled(*w);
        }
        assert!(crate::linalg::max_abs_diff(rebuilt.matrix(), rho.matrix()) < 1e-12);
    }

    #[test]
    fn state_record_json_round_trip() {
        let s = space(1);
        let psi = ket(&s, Level::Excited, 0, Level::Up, 0).scaled(C64::new(0.0, 1.0));
        let json = serde_json::to_string(&s.state_record(&psi).unwrap()).unwrap();
        assert!(json.contains("\"n_max\":1"));
        let record: StateRecord = serde_json::from_str(&json).unwrap();
        let (space_back, psi_back) = PureState::from_record(&record).unwrap();
        assert_eq!(space_back, s);
        assert_eq!(psi_back, psi);
    }
}
