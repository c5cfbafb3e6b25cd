//! Computational basis |n2 e2 e1 n1> of the two-donor register and the
//! single-spin operators acting on it.
//!
//! Index layout: `index = 8 n2 + 4 e2 + 2 e1 + n1`. Bit value 0 means the spin
//! points along the permanent field, which is the +1/2 eigenvalue of the
//! corresponding z operator.

use std::fmt;

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DIM: usize = 16;

pub type Matrix16 = SMatrix<Complex64, DIM, DIM>;
pub type Vector16 = SVector<Complex64, DIM>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spin {
    N1,
    E1,
    E2,
    N2,
}

impl Spin {
    pub const ALL: [Spin; 4] = [Spin::N1, Spin::E1, Spin::E2, Spin::N2];

    /// Bit position of this spin in a [`BasisIndex`].
    pub fn bit(self) -> u8 {
        match self {
            Spin::N1 => 0,
            Spin::E1 => 1,
            Spin::E2 => 2,
            Spin::N2 => 3,
        }
    }

    pub fn mask(self) -> usize {
        1 << self.bit()
    }

    pub fn is_electron(self) -> bool {
        matches!(self, Spin::E1 | Spin::E2)
    }

    /// 1 or 2.
    pub fn atom(self) -> u8 {
        match self {
            Spin::N1 | Spin::E1 => 1,
            Spin::E2 | Spin::N2 => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct BasisIndex(u8);

impl BasisIndex {
    pub fn new(index: usize) -> Result<Self> {
        if index < DIM {
            Ok(Self(index as u8))
        } else {
            Err(Error::InvalidArgument(format!(
                "basis index {index} outside 0..{DIM}"
            )))
        }
    }

    /// Builds |n2 e2 e1 n1> from its four bits.
    pub fn from_bits(n2: u8, e2: u8, e1: u8, n1: u8) -> Self {
        Self(((n2 & 1) << 3) | ((e2 & 1) << 2) | ((e1 & 1) << 1) | (n1 & 1))
    }

    pub fn index(self) -> usize {
        usize::from(self.0)
    }

    pub fn bit(self, spin: Spin) -> u8 {
        (self.0 >> spin.bit()) & 1
    }

    pub fn flipped(self, spin: Spin) -> Self {
        Self(self.0 ^ (1 << spin.bit()))
    }

    /// z projection (+1/2 for bit 0, -1/2 for bit 1) of one spin.
    pub fn projection(self, spin: Spin) -> f64 {
        0.5 - f64::from(self.bit(spin))
    }

    /// Total z projection S1z + S2z + I1z + I2z.
    pub fn total_projection(self) -> f64 {
        Spin::ALL.iter().map(|&s| self.projection(s)).sum()
    }

    /// The single spin in which `self` and `other` differ, if exactly one.
    pub fn single_flip(self, other: Self) -> Option<Spin> {
        let diff = self.0 ^ other.0;
        Spin::ALL.into_iter().find(|s| diff == 1 << s.bit())
    }

    pub fn all() -> impl Iterator<Item = BasisIndex> {
        (0..DIM as u8).map(BasisIndex)
    }
}

impl TryFrom<usize> for BasisIndex {
    type Error = Error;
    fn try_from(value: usize) -> Result<Self> {
        Self::new(value)
    }
}

impl From<BasisIndex> for usize {
    fn from(b: BasisIndex) -> usize {
        b.index()
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "|{}{}{}{}>",
            self.bit(Spin::N2),
            self.bit(Spin::E2),
            self.bit(Spin::E1),
            self.bit(Spin::N1)
        )
    }
}

/// z component of `spin`.
pub fn sz(spin: Spin) -> Matrix16 {
    let mut m = Matrix16::zeros();
    for b in BasisIndex::all() {
        m[(b.index(), b.index())] = Complex64::new(b.projection(spin), 0.0);
    }
    m
}

/// Lowering operator of `spin`: maps bit 0 (+1/2) to bit 1 (-1/2).
pub fn lowering(spin: Spin) -> Matrix16 {
    let mut m = Matrix16::zeros();
    for b in BasisIndex::all().filter(|b| b.bit(spin) == 0) {
        m[(b.flipped(spin).index(), b.index())] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn raising(spin: Spin) -> Matrix16 {
    lowering(spin).transpose()
}

/// s_a . s_b = sz_a sz_b + (s+_a s-_b + s-_a s+_b) / 2.
pub fn spin_dot(a: Spin, b: Spin) -> Matrix16 {
    sz(a) * sz(b) + (raising(a) * lowering(b) + lowering(a) * raising(b)) * Complex64::new(0.5, 0.0)
}

/// Diagonal of the rotating-frame generator Fz = S1z + S2z + I1z + I2z.
pub fn total_projection_diagonal() -> [f64; DIM] {
    let mut d = [0.0; DIM];
    for b in BasisIndex::all() {
        d[b.index()] = b.total_projection();
    }
    d
}

/// Unit vector |b>.
pub fn ket(b: BasisIndex) -> Vector16 {
    let mut v = Vector16::zeros();
    v[b.index()] = Complex64::new(1.0, 0.0);
    v
}
