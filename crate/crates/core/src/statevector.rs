//! Dense statevector register.
//!
//! Qubit 0 is the least-significant bit of the amplitude index. Measured
//! qubits stay in the register, collapsed onto their recorded outcome, so
//! node indices never shift while a pattern executes.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Scalar field for every amplitude and matrix entry.
pub type Complex = Complex64;

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 24;

/// Norm drift allowed after accumulated arithmetic.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Probability below which a forced branch counts as impossible.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-12;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("register needs at least one qubit")]
    Empty,
    #[error("register of {0} qubits exceeds the {MAX_QUBITS}-qubit limit")]
    TooLarge(usize),
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit register")]
    OutOfRange { qubit: usize, num_qubits: usize },
    #[error("input state for qubit {qubit} has norm {norm}, expected 1")]
    NotNormalized { qubit: usize, norm: f64 },
    #[error("amplitude vector has norm {0}, expected 1")]
    VectorNotNormalized(f64),
    #[error("amplitude vector length {len} is not 2^{num_qubits}")]
    LengthMismatch { len: usize, num_qubits: usize },
    #[error("non-finite amplitude or angle")]
    NonFinite,
    #[error("qubit {0} has already been measured")]
    AlreadyMeasured(usize),
    #[error("gate {gate} acts on {expected} qubit(s), got {got} target(s)")]
    Arity {
        gate: String,
        expected: usize,
        got: usize,
    },
    #[error("duplicate target qubit {0}")]
    DuplicateTarget(usize),
    #[error("cannot force outcome {bit} on qubit {qubit}: branch probability {probability:e}")]
    ImpossibleBranch {
        qubit: usize,
        bit: u8,
        probability: f64,
    },
    #[error("cannot mark qubit {qubit} collapsed to {bit}: opposite amplitudes are non-zero")]
    NotCollapsed { qubit: usize, bit: u8 },
    #[error("registers differ in shape: {0}")]
    ShapeMismatch(String),
}

/// A normalized single-qubit state `zero|0> + one|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qubit {
    pub zero: Complex,
    pub one: Complex,
}

impl Qubit {
    pub fn new(zero: Complex, one: Complex) -> Self {
        Self { zero, one }
    }

    pub fn zero() -> Self {
        Self::new(ONE, ZERO)
    }

    pub fn one() -> Self {
        Self::new(ZERO, ONE)
    }

    pub fn plus() -> Self {
        let a = Complex::new(FRAC_1_SQRT_2, 0.0);
        Self::new(a, a)
    }

    pub fn minus() -> Self {
        let a = Complex::new(FRAC_1_SQRT_2, 0.0);
        Self::new(a, -a)
    }

    pub fn norm(&self) -> f64 {
        (self.zero.norm_sqr() + self.one.norm_sqr()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.zero.is_finite() && self.one.is_finite()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self::new(self.zero / n, self.one / n)
    }

    pub fn to_vector(&self) -> [Complex; 2] {
        [self.zero, self.one]
    }

    /// Applies a 2x2 matrix to this state.
    pub fn transformed(&self, m: &Matrix2<Complex>) -> Self {
        Self::new(
            m[(0, 0)] * self.zero + m[(0, 1)] * self.one,
            m[(1, 0)] * self.zero + m[(1, 1)] * self.one,
        )
    }
}

/// The gate set used by cluster-state computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H,
    X,
    Z,
    /// `cos(a/2) I - i sin(a/2) Z`, i.e. `diag(e^{-ia/2}, e^{ia/2})`.
    Zrot(f64),
    /// `cos(b/2) I - i sin(b/2) X`.
    Xrot(f64),
    /// Controlled-phase, `diag(1, 1, 1, -1)`.
    Cz,
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::H => write!(f, "H"),
            Gate::X => write!(f, "X"),
            Gate::Z => write!(f, "Z"),
            Gate::Zrot(a) => write!(f, "Zrot({a})"),
            Gate::Xrot(b) => write!(f, "Xrot({b})"),
            Gate::Cz => write!(f, "CZ"),
        }
    }
}

impl Gate {
    pub fn arity(&self) -> usize {
        match self {
            Gate::Cz => 2,
            _ => 1,
        }
    }

    /// The 2x2 matrix of a single-qubit gate, `None` for `Cz`.
    pub fn matrix2(&self) -> Option<Matrix2<Complex>> {
        let m = match *self {
            Gate::H => {
                let h = Complex::new(FRAC_1_SQRT_2, 0.0);
                Matrix2::new(h, h, h, -h)
            }
            Gate::X => Matrix2::new(ZERO, ONE, ONE, ZERO),
            Gate::Z => Matrix2::new(ONE, ZERO, ZERO, -ONE),
            Gate::Zrot(a) => Matrix2::new(
                Complex::from_polar(1.0, -a / 2.0),
                ZERO,
                ZERO,
                Complex::from_polar(1.0, a / 2.0),
            ),
            Gate::Xrot(b) => {
                let c = Complex::new((b / 2.0).cos(), 0.0);
                let s = Complex::new(0.0, -(b / 2.0).sin());
                Matrix2::new(c, s, s, c)
            }
            Gate::Cz => return None,
        };
        Some(m)
    }

    /// Dense matrix of the gate. For `Cz` the local index is `b0 + 2 b1`,
    /// with `b0` the bit of the first target.
    pub fn matrix(&self) -> DMatrix<Complex> {
        match self.matrix2() {
            Some(m) => DMatrix::from_fn(2, 2, |r, c| m[(r, c)]),
            None => DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, ONE, ONE, -ONE])),
        }
    }
}

/// How `measure_z` picks its outcome.
pub enum MeasurePolicy<'a> {
    /// Draw from the Born distribution with the run's generator.
    Sample(&'a mut ChaCha8Rng),
    /// Post-select the given outcome.
    Forced(bool),
}

/// Outcome of a global-phase-insensitive comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseComparison {
    pub equal: bool,
    pub fidelity: f64,
    /// Raw `<a|b>`; its argument is the relative global phase.
    pub overlap: Complex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex>,
    collapsed: Vec<Option<bool>>,
}

impl StateVector {
    /// Tensor product of the given inputs with `|+>` on every other qubit.
    pub fn init_register(
        num_qubits: usize,
        inputs: &BTreeMap<usize, Qubit>,
    ) -> Result<Self, StateError> {
        check_size(num_qubits)?;
        let mut locals = vec![Qubit::plus(); num_qubits];
        for (&qubit, state) in inputs {
            if qubit >= num_qubits {
                return Err(StateError::OutOfRange { qubit, num_qubits });
            }
            if !state.is_finite() {
                return Err(StateError::NonFinite);
            }
            let norm = state.norm();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(StateError::NotNormalized { qubit, norm });
            }
            locals[qubit] = *state;
        }
        let amplitudes = (0..1usize << num_qubits)
            .map(|idx| {
                locals.iter().enumerate().fold(ONE, |acc, (q, s)| {
                    acc * if idx >> q & 1 == 1 { s.one } else { s.zero }
                })
            })
            .collect();
        Ok(Self {
            num_qubits,
            amplitudes,
            collapsed: vec![None; num_qubits],
        })
    }

    /// Wraps a raw amplitude vector; no qubit is marked measured.
    pub fn from_amplitudes(
        num_qubits: usize,
        amplitudes: Vec<Complex>,
    ) -> Result<Self, StateError> {
        check_size(num_qubits)?;
        if amplitudes.len() != 1 << num_qubits {
            return Err(StateError::LengthMismatch {
                len: amplitudes.len(),
                num_qubits,
            });
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(StateError::NonFinite);
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(StateError::VectorNotNormalized(norm));
        }
        Ok(Self {
            num_qubits,
            amplitudes,
            collapsed: vec![None; num_qubits],
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Recorded collapse value of a measured qubit.
    pub fn collapsed(&self, qubit: usize) -> Option<bool> {
        self.collapsed.get(qubit).copied().flatten()
    }

    pub fn is_measured(&self, qubit: usize) -> bool {
        self.collapsed(qubit).is_some()
    }

    /// Flags a qubit as measured without projecting. Fails unless the state
    /// already has zero weight on the opposite bit value.
    pub fn mark_collapsed(&mut self, qubit: usize, bit: bool) -> Result<(), StateError> {
        self.check_qubit(qubit)?;
        if self.is_measured(qubit) {
            return Err(StateError::AlreadyMeasured(qubit));
        }
        let opposite_nonzero = self
            .amplitudes
            .iter()
            .enumerate()
            .any(|(idx, a)| (idx >> qubit & 1 == 1) != bit && *a != ZERO);
        if opposite_nonzero {
            return Err(StateError::NotCollapsed {
                qubit,
                bit: bit as u8,
            });
        }
        self.collapsed[qubit] = Some(bit);
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: Gate, targets: &[usize]) -> Result<(), StateError> {
        if targets.len() != gate.arity() {
            return Err(StateError::Arity {
                gate: gate.to_string(),
                expected: gate.arity(),
                got: targets.len(),
            });
        }
        for (i, &t) in targets.iter().enumerate() {
            self.check_qubit(t)?;
            if self.is_measured(t) {
                return Err(StateError::AlreadyMeasured(t));
            }
            if targets[..i].contains(&t) {
                return Err(StateError::DuplicateTarget(t));
            }
        }
        match gate.matrix2() {
            Some(m) => {
                if !m.iter().all(|z| z.is_finite()) {
                    return Err(StateError::NonFinite);
                }
                self.apply_single(&m, targets[0]);
            }
            None => self.apply_cz(targets[0], targets[1]),
        }
        Ok(())
    }

    fn apply_single(&mut self, m: &Matrix2<Complex>, qubit: usize) {
        let mask = 1usize << qubit;
        for i0 in 0..self.amplitudes.len() {
            if i0 & mask != 0 {
                continue;
            }
            let i1 = i0 | mask;
            let (a0, a1) = (self.amplitudes[i0], self.amplitudes[i1]);
            self.amplitudes[i0] = m[(0, 0)] * a0 + m[(0, 1)] * a1;
            self.amplitudes[i1] = m[(1, 0)] * a0 + m[(1, 1)] * a1;
        }
    }

    fn apply_cz(&mut self, a: usize, b: usize) {
        let mask = (1usize << a) | (1usize << b);
        for (idx, amp) in self.amplitudes.iter_mut().enumerate() {
            if idx & mask == mask {
                *amp = -*amp;
            }
        }
    }

    /// Probability of reading `bit` on `qubit`.
    pub fn probability(&self, qubit: usize, bit: bool) -> Result<f64, StateError> {
        self.check_qubit(qubit)?;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(idx, _)| (idx >> qubit & 1 == 1) == bit)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Computational-basis measurement. Returns the outcome and its
    /// pre-collapse probability; the register is projected and renormalized.
    pub fn measure_z(
        &mut self,
        qubit: usize,
        policy: MeasurePolicy<'_>,
    ) -> Result<(bool, f64), StateError> {
        self.check_qubit(qubit)?;
        if self.is_measured(qubit) {
            return Err(StateError::AlreadyMeasured(qubit));
        }
        let p1 = self.probability(qubit, true)?;
        let p0 = self.probability(qubit, false)?;
        let bit = match policy {
            MeasurePolicy::Forced(bit) => bit,
            MeasurePolicy::Sample(rng) => rng.random::<f64>() * (p0 + p1) >= p0,
        };
        let p = if bit { p1 } else { p0 };
        if p <= MIN_BRANCH_PROBABILITY {
            return Err(StateError::ImpossibleBranch {
                qubit,
                bit: bit as u8,
                probability: p,
            });
        }
        let scale = 1.0 / p.sqrt();
        for (idx, amp) in self.amplitudes.iter_mut().enumerate() {
            if (idx >> qubit & 1 == 1) == bit {
                *amp *= scale;
            } else {
                *amp = ZERO;
            }
        }
        self.collapsed[qubit] = Some(bit);
        Ok((bit, p / (p0 + p1)))
    }

    /// `<self|other>` over the full register.
    pub fn inner(&self, other: &StateVector) -> Result<Complex, StateError> {
        if self.num_qubits != other.num_qubits {
            return Err(StateError::ShapeMismatch(format!(
                "{} vs {} qubits",
                self.num_qubits, other.num_qubits
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// True iff `|<a|b>|^2 >= 1 - tol`.
    pub fn equal_up_to_global_phase(
        &self,
        other: &StateVector,
        tol: f64,
    ) -> Result<PhaseComparison, StateError> {
        let measured =
            |s: &StateVector| s.collapsed.iter().map(Option::is_some).collect::<Vec<_>>();
        if self.num_qubits == other.num_qubits && measured(self) != measured(other) {
            return Err(StateError::ShapeMismatch(
                "measured-qubit sets differ".into(),
            ));
        }
        let overlap = self.inner(other)?;
        let fidelity = overlap.norm_sqr();
        Ok(PhaseComparison {
            equal: fidelity >= 1.0 - tol,
            fidelity,
            overlap,
        })
    }

    fn check_qubit(&self, qubit: usize) -> Result<(), StateError> {
        if qubit >= self.num_qubits {
            return Err(StateError::OutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }
}

fn check_size(num_qubits: usize) -> Result<(), StateError> {
    match num_qubits {
        0 => Err(StateError::Empty),
        n if n > MAX_QUBITS => Err(StateError::TooLarge(n)),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: Complex, b: Complex) -> bool {
        (a - b).norm() < 1e-12
    }

    fn single(q: Qubit) -> StateVector {
        StateVector::init_register(1, &BTreeMap::from([(0, q)])).unwrap()
    }

    #[test]
    fn init_basis_state() {
        let s = single(Qubit::zero());
        assert_eq!(s.amplitudes(), &[ONE, ZERO]);
    }

    #[test]
    fn init_all_plus() {
        let s = StateVector::init_register(2, &BTreeMap::new()).unwrap();
        assert!(s
            .amplitudes()
            .iter()
            .all(|a| close(*a, Complex::new(0.5, 0.0))));
    }

    #[test]
    fn init_is_little_endian() {
        let s = StateVector::init_register(2, &BTreeMap::from([(0, Qubit::zero())])).unwrap();
        let h = Complex::new(FRAC_1_SQRT_2, 0.0);
        let want = [h, ZERO, h, ZERO];
        for (a, b) in s.amplitudes().iter().zip(want) {
            assert!(close(*a, b));
        }
    }

    #[test]
    fn init_rejects_bad_inputs() {
        let bad = Qubit::new(ONE, ONE);
        assert!(matches!(
            StateVector::init_register(1, &BTreeMap::from([(0, bad)])),
            Err(StateError::NotNormalized { qubit: 0, .. })
        ));
        assert!(matches!(
            StateVector::init_register(1, &BTreeMap::from([(3, Qubit::zero())])),
            Err(StateError::OutOfRange { qubit: 3, .. })
        ));
        assert_eq!(
            StateVector::init_register(0, &BTreeMap::new()),
            Err(StateError::Empty)
        );
        assert_eq!(
            StateVector::init_register(25, &BTreeMap::new()),
            Err(StateError::TooLarge(25))
        );
    }

    #[test]
    fn hadamard_on_zero_gives_plus() {
        let mut s = single(Qubit::zero());
        s.apply_gate(Gate::H, &[0]).unwrap();
        assert!(
            s.equal_up_to_global_phase(&single(Qubit::plus()), 0.0)
                .unwrap()
                .fidelity
                > 1.0 - 1e-12
        );
        assert!(close(s.amplitudes()[0], Complex::new(FRAC_1_SQRT_2, 0.0)));
        assert!(close(s.amplitudes()[1], Complex::new(FRAC_1_SQRT_2, 0.0)));
    }

    #[test]
    fn zrot_pi_is_minus_i_z() {
        let psi = Qubit::new(Complex::new(0.6, 0.0), Complex::new(0.0, 0.8));
        let mut s = single(psi);
        s.apply_gate(Gate::Zrot(PI), &[0]).unwrap();
        let i = Complex::new(0.0, 1.0);
        assert!(close(s.amplitudes()[0], -i * psi.zero));
        assert!(close(s.amplitudes()[1], i * psi.one));
    }

    #[test]
    fn cz_on_plus_plus() {
        let mut s = StateVector::init_register(2, &BTreeMap::new()).unwrap();
        s.apply_gate(Gate::Cz, &[0, 1]).unwrap();
        let h = Complex::new(0.5, 0.0);
        let want = [h, h, h, -h];
        for (a, b) in s.amplitudes().iter().zip(want) {
            assert!(close(*a, b));
        }
    }

    #[test]
    fn gate_errors() {
        let mut s = StateVector::init_register(2, &BTreeMap::new()).unwrap();
        assert!(matches!(
            s.apply_gate(Gate::Cz, &[0]),
            Err(StateError::Arity { .. })
        ));
        assert!(matches!(
            s.apply_gate(Gate::H, &[0, 1]),
            Err(StateError::Arity { .. })
        ));
        assert_eq!(
            s.apply_gate(Gate::Cz, &[1, 1]),
            Err(StateError::DuplicateTarget(1))
        );
        assert!(matches!(
            s.apply_gate(Gate::H, &[2]),
            Err(StateError::OutOfRange { .. })
        ));
        s.measure_z(0, MeasurePolicy::Forced(false)).unwrap();
        assert_eq!(
            s.apply_gate(Gate::H, &[0]),
            Err(StateError::AlreadyMeasured(0))
        );
        assert_eq!(
            s.apply_gate(Gate::Cz, &[1, 0]),
            Err(StateError::AlreadyMeasured(0))
        );
    }

    #[test]
    fn forced_measurements() {
        let mut s = single(Qubit::zero());
        assert_eq!(
            s.measure_z(0, MeasurePolicy::Forced(false)).unwrap(),
            (false, 1.0)
        );
        assert_eq!(s.amplitudes(), &[ONE, ZERO]);
        assert_eq!(s.collapsed(0), Some(false));

        let mut s = single(Qubit::plus());
        let (bit, p) = s.measure_z(0, MeasurePolicy::Forced(true)).unwrap();
        assert!(bit);
        assert!((p - 0.5).abs() < 1e-12);
        assert!(close(s.amplitudes()[1], ONE));
        assert_eq!(s.amplitudes()[0], ZERO);
    }

    #[test]
    fn measurement_errors() {
        let mut s = single(Qubit::zero());
        assert!(matches!(
            s.clone().measure_z(0, MeasurePolicy::Forced(true)),
            Err(StateError::ImpossibleBranch {
                qubit: 0,
                bit: 1,
                ..
            })
        ));
        s.measure_z(0, MeasurePolicy::Forced(false)).unwrap();
        assert_eq!(
            s.measure_z(0, MeasurePolicy::Forced(false)),
            Err(StateError::AlreadyMeasured(0))
        );
    }

    #[test]
    fn branch_probabilities_complete() {
        let psi = Qubit::new(Complex::new(0.6, 0.0), Complex::new(0.0, 0.8));
        let total: f64 = [false, true]
            .iter()
            .map(|&b| {
                single(psi)
                    .measure_z(0, MeasurePolicy::Forced(b))
                    .unwrap()
                    .1
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_seeded() {
        use rand::SeedableRng;
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..6)
                .map(|q| {
                    let mut s = StateVector::init_register(6, &BTreeMap::new()).unwrap();
                    s.measure_z(q, MeasurePolicy::Sample(&mut rng)).unwrap().0
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
    }

    #[test]
    fn phase_comparisons() {
        let psi = Qubit::new(Complex::new(0.6, 0.0), Complex::new(0.0, 0.8));
        let neg = Qubit::new(-psi.zero, -psi.one);
        let c = single(psi)
            .equal_up_to_global_phase(&single(neg), 1e-9)
            .unwrap();
        assert!(c.equal);
        assert!((c.fidelity - 1.0).abs() < 1e-12);
        assert!(close(c.overlap, -ONE));

        let c = single(Qubit::zero())
            .equal_up_to_global_phase(&single(Qubit::one()), 1e-9)
            .unwrap();
        assert!(!c.equal);
        assert_eq!(c.fidelity, 0.0);

        let c = single(Qubit::plus())
            .equal_up_to_global_phase(&single(Qubit::zero()), 1e-9)
            .unwrap();
        assert!(!c.equal);
        assert!((c.fidelity - 0.5).abs() < 1e-12);

        let two = StateVector::init_register(2, &BTreeMap::new()).unwrap();
        assert!(matches!(
            single(Qubit::zero()).equal_up_to_global_phase(&two, 1e-9),
            Err(StateError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn mark_collapsed_checks_support() {
        let mut s = single(Qubit::one());
        assert!(matches!(
            s.clone().mark_collapsed(0, false),
            Err(StateError::NotCollapsed { .. })
        ));
        s.mark_collapsed(0, true).unwrap();
        assert!(s.is_measured(0));
    }

    #[test]
    fn cz_matrix_is_diagonal() {
        let m = Gate::Cz.matrix();
        assert_eq!(m.shape(), (4, 4));
        assert_eq!(m[(3, 3)], -ONE);
        assert_eq!(m[(0, 0)], ONE);
    }
}
