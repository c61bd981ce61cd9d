use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use super::matrix::{tensor_product, ComplexMatrix};
use crate::error::{Error, Result};

/// Single-qubit Pauli letter. Discriminants are the canonical base-4 digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_digit(d: usize) -> Option<Self> {
        Self::ALL.get(d).copied()
    }

    pub fn digit(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let data = match self {
            Pauli::I => vec![one, z, z, one],
            Pauli::X => vec![z, one, one, z],
            Pauli::Y => vec![z, -i, i, z],
            Pauli::Z => vec![one, z, z, -one],
        };
        ComplexMatrix::from_vec(2, 2, data).expect("2x2")
    }
}

/// A word over {I, X, Y, Z}, qubit 1 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidParameter("empty Pauli string".into()));
        }
        Ok(Self { letters })
    }

    /// Inverse of [`PauliString::index`].
    pub fn from_index(index: usize, n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || index >= super::n_paulis(n_qubits) {
            return Err(Error::InvalidParameter(format!(
                "Pauli index {index} out of range for {n_qubits} qubits"
            )));
        }
        let letters = (0..n_qubits)
            .map(|k| {
                let shift = 2 * (n_qubits - 1 - k);
                Pauli::from_digit((index >> shift) & 3).expect("digit < 4")
            })
            .collect();
        Ok(Self { letters })
    }

    /// All 4^n strings in canonical order.
    pub fn all(n_qubits: usize) -> Vec<PauliString> {
        (0..super::n_paulis(n_qubits))
            .map(|t| Self::from_index(t, n_qubits).expect("in range"))
            .collect()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    /// Base-4 index, qubit 1 most significant, I<X<Y<Z.
    pub fn index(&self) -> usize {
        self.letters.iter().fold(0, |acc, p| acc * 4 + p.digit())
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// Dense 2^n x 2^n matrix.
    pub fn matrix(&self) -> ComplexMatrix {
        let factors: Vec<ComplexMatrix> = self.letters.iter().map(|p| p.matrix()).collect();
        tensor_product(&factors).expect("nonempty square factors")
    }

    /// Monomial form: the operator maps |c⟩ to phase(c)·|c ⊕ x_mask⟩.
    pub fn mask(&self) -> PauliMask {
        let n = self.letters.len();
        let mut x_mask = 0usize;
        let mut z_mask = 0usize;
        let mut n_y = 0u32;
        for (k, p) in self.letters.iter().enumerate() {
            let bit = 1usize << (n - 1 - k);
            match p {
                Pauli::I => {}
                Pauli::X => x_mask |= bit,
                Pauli::Y => {
                    x_mask |= bit;
                    z_mask |= bit;
                    n_y += 1;
                }
                Pauli::Z => z_mask |= bit,
            }
        }
        PauliMask {
            x_mask,
            z_mask,
            y_phase: i_power(n_y),
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|ch| match ch {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::InvalidParameter(format!(
                    "bad Pauli letter {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(letters)
    }
}

fn i_power(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Sparse description of a Pauli string: exactly one nonzero per column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliMask {
    pub x_mask: usize,
    pub z_mask: usize,
    pub y_phase: Complex64,
}

impl PauliMask {
    /// Entry P[c ⊕ x_mask, c].
    #[inline]
    pub fn phase(&self, col: usize) -> Complex64 {
        if (col & self.z_mask).count_ones().is_multiple_of(2) {
            self.y_phase
        } else {
            -self.y_phase
        }
    }

    /// Tr(P·m) in O(dim).
    pub fn trace_with(&self, m: &ComplexMatrix) -> Complex64 {
        (0..m.rows())
            .map(|c| self.phase(c) * m.get(c, c ^ self.x_mask))
            .sum()
    }

    /// m += coeff · P
    pub fn accumulate(&self, m: &mut ComplexMatrix, coeff: f64) {
        for c in 0..m.cols() {
            m.add_at(c ^ self.x_mask, c, self.phase(c) * coeff);
        }
    }
}

/// Matrix of the Pauli string with the given canonical index.
pub fn pauli_matrix(index: usize, n_qubits: usize) -> Result<ComplexMatrix> {
    Ok(PauliString::from_index(index, n_qubits)?.matrix())
}
