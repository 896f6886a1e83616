//! Dense state vectors over labelled qubits, used to check the graph-level
//! bookkeeping against a literal simulation of the physical operations.
//!
//! Qubits are kept sorted by label; the qubit at position `j` is bit `j`
//! of the amplitude index, with bit value 0 for `|↑⟩` and 1 for `|↓⟩`.

use crate::error::{Error, Result};
use crate::C64;

use super::clifford::Clifford;
use super::{EoOutcome, PhysicalOp, XResult};

/// Largest register the dense verifier will build.
pub const MAX_DENSE_QUBITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseQubitState {
    qubits: Vec<usize>,
    amps: Vec<C64>,
}

impl DenseQubitState {
    /// The zero-qubit state (the scalar 1).
    pub fn empty() -> Self {
        DenseQubitState { qubits: Vec::new(), amps: vec![C64::new(1.0, 0.0)] }
    }

    pub fn plus(qubit: usize) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        DenseQubitState { qubits: vec![qubit], amps: vec![C64::new(h, 0.0); 2] }
    }

    /// Builds a state from amplitudes indexed as described in the module docs.
    pub fn from_amplitudes(qubits: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        let mut sorted = qubits.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted != qubits {
            return Err(Error::graph("qubit labels must be strictly increasing"));
        }
        check_size(qubits.len())?;
        if amps.len() != 1 << qubits.len() {
            return Err(Error::DimensionMismatch { expected: 1 << qubits.len(), found: amps.len() });
        }
        Ok(DenseQubitState { qubits, amps })
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n < 1e-12 {
            return Err(Error::ZeroNorm);
        }
        self.amps.iter_mut().for_each(|a| *a /= n);
        Ok(())
    }

    fn position(&self, qubit: usize) -> Result<usize> {
        self.qubits.binary_search(&qubit).map_err(|_| Error::graph(format!("qubit {qubit} not in register")))
    }

    /// Tensor product with a register on disjoint labels.
    pub fn adjoin(&self, other: &DenseQubitState) -> Result<Self> {
        if let Some(q) = other.qubits.iter().find(|q| self.qubits.contains(q)) {
            return Err(Error::graph(format!("qubit {q} already present")));
        }
        let mut qubits: Vec<usize> = self.qubits.iter().chain(&other.qubits).copied().collect();
        qubits.sort_unstable();
        check_size(qubits.len())?;
        let mine: Vec<usize> = self.qubits.iter().map(|q| qubits.binary_search(q).unwrap()).collect();
        let theirs: Vec<usize> = other.qubits.iter().map(|q| qubits.binary_search(q).unwrap()).collect();
        let amps = (0..1usize << qubits.len())
            .map(|idx| self.amps[gather(idx, &mine)] * other.amps[gather(idx, &theirs)])
            .collect();
        Ok(DenseQubitState { qubits, amps })
    }

    pub fn apply_1q(&mut self, qubit: usize, m: &[[C64; 2]; 2]) -> Result<()> {
        let bit = 1 << self.position(qubit)?;
        for idx in 0..self.amps.len() {
            if idx & bit == 0 {
                let (a0, a1) = (self.amps[idx], self.amps[idx | bit]);
                self.amps[idx] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[idx | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    pub fn apply_clifford(&mut self, qubit: usize, g: Clifford) -> Result<()> {
        self.apply_1q(qubit, &g.matrix())
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) -> Result<()> {
        let mask = (1 << self.position(a)?) | (1 << self.position(b)?);
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            if idx & mask == mask {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    /// Applies a two-qubit matrix in the basis `2·bit(a) + bit(b)`.
    pub fn apply_2q(&mut self, a: usize, b: usize, m: &[[C64; 4]; 4]) -> Result<()> {
        if a == b {
            return Err(Error::graph("two-qubit gate needs distinct qubits"));
        }
        let (ba, bb) = (1 << self.position(a)?, 1 << self.position(b)?);
        for idx in 0..self.amps.len() {
            if idx & (ba | bb) == 0 {
                let slots = [idx, idx | bb, idx | ba, idx | ba | bb];
                let v: Vec<C64> = slots.iter().map(|&s| self.amps[s]).collect();
                for (r, &s) in slots.iter().enumerate() {
                    self.amps[s] = (0..4).map(|k| m[r][k] * v[k]).sum();
                }
            }
        }
        Ok(())
    }

    /// Projects `qubit` onto `⟨bra|`, removes it from the register and renormalises.
    /// Returns the probability of the outcome.
    pub fn project_out(&mut self, qubit: usize, bra: [C64; 2]) -> Result<f64> {
        let pos = self.position(qubit)?;
        let bit = 1 << pos;
        let low = bit - 1;
        let amps: Vec<C64> = (0..self.amps.len() / 2)
            .map(|r| {
                let base = (r & low) | ((r & !low) << 1);
                bra[0] * self.amps[base] + bra[1] * self.amps[base | bit]
            })
            .collect();
        let before = self.norm().powi(2);
        self.qubits.remove(pos);
        self.amps = amps;
        let prob = self.norm().powi(2) / before;
        self.normalize()?;
        Ok(prob)
    }

    /// `|⟨self|other⟩|` for normalised registers on the same labels.
    pub fn overlap(&self, other: &DenseQubitState) -> Result<f64> {
        if self.qubits != other.qubits {
            return Err(Error::graph(format!(
                "registers differ: {:?} vs {:?}",
                self.qubits, other.qubits
            )));
        }
        let ip: C64 = self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum();
        Ok(ip.norm() / (self.norm() * other.norm()))
    }

    /// Expectation of `X_v Π_{u∈N} Z_u`.
    pub fn stabilizer_expectation(&self, v: usize, neighbours: &[usize]) -> Result<f64> {
        let mut t = self.clone();
        t.apply_clifford(v, Clifford::x())?;
        for &u in neighbours {
            t.apply_clifford(u, Clifford::z())?;
        }
        let ip: C64 = self.amps.iter().zip(&t.amps).map(|(a, b)| a.conj() * b).sum();
        Ok(ip.re / self.norm().powi(2))
    }

    /// Applies one physical operation literally. Measurement and herald
    /// results are taken from the operation; a branch of zero probability
    /// is reported as [`Error::ZeroNorm`].
    ///
    /// A failed EO is a no-op here: its participants are always followed by
    /// Z measurements, which absorb the failure Kraus operators.
    pub fn apply_op(&mut self, op: &PhysicalOp) -> Result<()> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        match *op {
            PhysicalOp::Prepare { qubit } => *self = self.adjoin(&DenseQubitState::plus(qubit))?,
            PhysicalOp::Local { qubit, gate } => self.apply_clifford(qubit, gate)?,
            PhysicalOp::Eo { a, b, outcome } => {
                if let EoOutcome::Success { sign } = outcome {
                    let s = C64::new(f64::from(sign), 0.0);
                    let mut k = [[zero; 4]; 4];
                    // |↑↓⟩ → |↓↑⟩ and |↓↑⟩ → s|↑↓⟩, with a in the high slot.
                    k[2][1] = one;
                    k[1][2] = s;
                    self.apply_2q(a, b, &k)?;
                    self.normalize()?;
                }
            }
            PhysicalOp::MeasureZ { qubit, result } => {
                let bra = if result == 0 { [one, zero] } else { [zero, one] };
                self.project_out(qubit, bra)?;
            }
            PhysicalOp::MeasureX { qubit, result } => {
                let sgn = match result {
                    XResult::Plus => h,
                    XResult::Minus => -h,
                };
                self.project_out(qubit, [C64::new(h, 0.0), C64::new(sgn, 0.0)])?;
            }
        }
        Ok(())
    }

    pub fn run(&mut self, ops: &[PhysicalOp]) -> Result<()> {
        ops.iter().try_for_each(|op| self.apply_op(op))
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_DENSE_QUBITS {
        Err(Error::TooManyQubits { n, max: MAX_DENSE_QUBITS })
    } else {
        Ok(())
    }
}

fn gather(idx: usize, positions: &[usize]) -> usize {
    positions.iter().enumerate().fold(0, |acc, (j, &p)| acc | (((idx >> p) & 1) << j))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjoin_interleaves_labels() {
        let a = DenseQubitState::from_amplitudes(vec![1], vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let b = DenseQubitState::from_amplitudes(vec![0, 2], {
            let mut v = vec![C64::new(0.0, 0.0); 4];
            v[3] = C64::new(1.0, 0.0);
            v
        })
        .unwrap();
        let ab = a.adjoin(&b).unwrap();
        assert_eq!(ab.qubits(), &[0, 1, 2]);
        // q0 = 1, q1 = 0, q2 = 1 → index 0b101.
        assert!((ab.amplitudes()[5].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_probability() {
        let mut s = DenseQubitState::plus(3).adjoin(&DenseQubitState::plus(5)).unwrap();
        s.apply_cz(3, 5).unwrap();
        let p = s.project_out(3, [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        // Remaining qubit is |−⟩.
        assert!((s.amplitudes()[0].re + s.amplitudes()[1].re).abs() < 1e-12);
    }

    #[test]
    fn size_cap() {
        let mut s = DenseQubitState::empty();
        for q in 0..MAX_DENSE_QUBITS {
            s = s.adjoin(&DenseQubitState::plus(q)).unwrap();
        }
        assert!(matches!(
            s.adjoin(&DenseQubitState::plus(99)),
            Err(Error::TooManyQubits { .. })
        ));
    }
}
