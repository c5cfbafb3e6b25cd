//! Static Hamiltonian of the register, its exact labeled spectrum and the
//! closed-form second-order perturbative eigenvalues.

use nalgebra::SVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{self, BasisIndex, Matrix16, Spin, Vector16, DIM};
use crate::error::{Error, Result};
use crate::linalg;
use crate::params::{effective_params, hz, DeviceGeometry, EffectiveParams, PhysicalConstants};

/// Default guard band around the E10/E12 exchange point, |A/2 - gamma_e dB|.
pub const SWAP_GUARD: f64 = 2.0 * std::f64::consts::PI * 1.0e6;

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMatrix(Matrix16);

impl HamiltonianMatrix {
    pub fn from_matrix(m: Matrix16) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix16 {
        &self.0
    }

    pub fn element(&self, row: BasisIndex, col: BasisIndex) -> Complex64 {
        self.0[(row.index(), col.index())]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        linalg::hermiticity_defect(&self.0) <= tol
    }
}

/// H0 = gamma_e (B1 S1z + B2 S2z) - gamma_n (B1 I1z + B2 I2z)
///      + A (S1.I1 + S2.I2) + J S1.S2
pub fn build_h0(p: &EffectiveParams) -> HamiltonianMatrix {
    let c = |x: f64| Complex64::new(x, 0.0);
    let m = basis::sz(Spin::E1) * c(p.gamma_e * p.b1)
        + basis::sz(Spin::E2) * c(p.gamma_e * p.b2)
        - basis::sz(Spin::N1) * c(p.gamma_n * p.b1)
        - basis::sz(Spin::N2) * c(p.gamma_n * p.b2)
        + (basis::spin_dot(Spin::E1, Spin::N1) + basis::spin_dot(Spin::E2, Spin::N2))
            * c(p.hyperfine_a)
        + basis::spin_dot(Spin::E1, Spin::E2) * c(p.exchange_j);
    HamiltonianMatrix(m)
}

/// Exact eigenpairs labeled by the basis state that dominates each eigenvector.
#[derive(Clone, Debug)]
pub struct Spectrum {
    energies: [f64; DIM],
    /// Column k is the eigenvector labeled by basis state k, phased so that
    /// its dominant component is real and positive.
    eigenvectors: Matrix16,
    weights: [f64; DIM],
}

impl Spectrum {
    pub fn energy(&self, b: BasisIndex) -> f64 {
        self.energies[b.index()]
    }

    pub fn energies(&self) -> &[f64; DIM] {
        &self.energies
    }

    pub fn eigenvectors(&self) -> &Matrix16 {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, b: BasisIndex) -> Vector16 {
        self.eigenvectors.column(b.index()).into_owned()
    }

    /// Weight |<b|v_b>|^2 of the labeling component of each eigenvector.
    pub fn dominant_weights(&self) -> &[f64; DIM] {
        &self.weights
    }

    pub fn min_dominant_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// E_q - E_p, signed.
    pub fn transition_frequency(&self, p: BasisIndex, q: BasisIndex) -> f64 {
        self.energy(q) - self.energy(p)
    }
}

pub fn transition_frequency(spec: &Spectrum, p: BasisIndex, q: BasisIndex) -> f64 {
    spec.transition_frequency(p, q)
}

pub fn exact_spectrum(h: &HamiltonianMatrix) -> Result<Spectrum> {
    let eig = linalg::hermitian_eigen(h.matrix())?;
    let mut owner: [Option<usize>; DIM] = [None; DIM];
    let mut claims = [0usize; DIM];
    let mut weights = [0.0; DIM];
    let mut min_weight = f64::INFINITY;
    for k in 0..DIM {
        let col = eig.vectors.column(k);
        let (label, w) = col
            .iter()
            .map(|z| z.norm_sqr())
            .enumerate()
            .fold((0, -1.0), |best, (i, w)| if w > best.1 { (i, w) } else { best });
        claims[label] += 1;
        owner[label] = Some(k);
        weights[label] = w;
        min_weight = min_weight.min(w);
    }
    if let Some(label) = claims.iter().position(|&c| c != 1) {
        let label = claims
            .iter()
            .position(|&c| c > 1)
            .unwrap_or(label);
        return Err(Error::Labeling {
            label,
            count: claims[label],
            min_weight,
        });
    }
    let mut energies = [0.0; DIM];
    let mut vectors = Matrix16::zeros();
    for label in 0..DIM {
        let k = owner[label].expect("labels form a permutation");
        energies[label] = eig.values[k];
        let col = eig.vectors.column(k);
        let lead = col[label];
        let phase = if lead.norm() > 0.0 {
            lead.conj() / lead.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        vectors.set_column(label, &(col * phase));
    }
    Ok(Spectrum {
        energies,
        eigenvectors: vectors,
        weights,
    })
}

/// Second-order perturbative eigenvalues E_i = E_i^(0) + E_i^(2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbativeSpectrum {
    pub zeroth: [f64; DIM],
    pub second: [f64; DIM],
    /// A/2 > gamma_e dB: the E10 and E12 expressions trade places.
    pub swapped: bool,
    /// A/2 - gamma_e dB, rad/s.
    pub swap_margin: f64,
}

impl PerturbativeSpectrum {
    pub fn energies(&self) -> [f64; DIM] {
        let mut e = [0.0; DIM];
        for (i, v) in e.iter_mut().enumerate() {
            *v = self.zeroth[i] + self.second[i];
        }
        if self.swapped {
            e.swap(10, 12);
        }
        e
    }

    pub fn energy(&self, b: BasisIndex) -> f64 {
        self.energies()[b.index()]
    }

    /// Zeroth-order energy with the same E10/E12 convention as [`Self::energies`].
    pub fn zeroth_energy(&self, b: BasisIndex) -> f64 {
        let i = match (self.swapped, b.index()) {
            (true, 10) => 12,
            (true, 12) => 10,
            (_, i) => i,
        };
        self.zeroth[i]
    }

    /// Fails when |A/2 - gamma_e dB| is inside `guard` (rad/s).
    pub fn check_swap_guard(&self, guard: f64) -> Result<()> {
        if self.swap_margin.abs() < guard {
            Err(Error::SwapBoundary {
                margin_hz: self.swap_margin.abs() / hz(1.0),
                guard_hz: guard / hz(1.0),
            })
        } else {
            Ok(())
        }
    }
}

pub fn perturbative_spectrum(p: &EffectiveParams) -> PerturbativeSpectrum {
    let b = p.mean_field();
    let db = p.half_split();
    let (ge, gn, a, j) = (p.gamma_e, p.gamma_n, p.hyperfine_a, p.exchange_j);
    let zeeman = ge * db;
    let j2 = j * j / 4.0;
    let root = (zeeman * zeeman + j2).sqrt();
    let root_plus = ((zeeman + a / 2.0).powi(2) + j2).sqrt();
    let root_minus = ((zeeman - a / 2.0).powi(2) + j2).sqrt();

    let mut e0 = [0.0; DIM];
    e0[0] = (ge - gn) * b + a / 2.0 + j / 4.0;
    e0[1] = ge * b - gn * db + j / 4.0;
    e0[2] = -gn * b - j / 4.0 + root;
    e0[3] = -gn * db - j / 4.0 + root_plus;
    e0[4] = -gn * b - j / 4.0 - root;
    e0[5] = -gn * db - j / 4.0 - root_plus;
    e0[6] = -(ge + gn) * b - a / 2.0 + j / 4.0;
    e0[7] = -ge * b - gn * db + j / 4.0;
    e0[8] = ge * b + gn * db + j / 4.0;
    e0[9] = (ge + gn) * b - a / 2.0 + j / 4.0;
    e0[10] = gn * db - j / 4.0 + root_minus;
    e0[11] = gn * b - j / 4.0 + root;
    e0[12] = gn * db - j / 4.0 - root_minus;
    e0[13] = gn * b - j / 4.0 - root;
    e0[14] = -ge * b + gn * db + j / 4.0;
    e0[15] = (-ge + gn) * b + a / 2.0 + j / 4.0;

    let q = a * a / 4.0;
    let mut e2 = [0.0; DIM];
    e2[1] = q / (e0[1] - e0[2]);
    e2[2] = -e2[1];
    e2[4] = q / (e0[4] - e0[8]);
    e2[8] = -e2[4];
    e2[5] = q * (1.0 / (e0[5] - e0[6]) + 1.0 / (e0[5] - e0[9]));
    e2[6] = q * (1.0 / (e0[6] - e0[5]) + 1.0 / (e0[6] - e0[10]));
    e2[7] = q / (e0[7] - e0[11]);
    e2[11] = -e2[7];
    e2[9] = q * (1.0 / (e0[9] - e0[5]) + 1.0 / (e0[9] - e0[10]));
    e2[10] = q * (1.0 / (e0[10] - e0[6]) + 1.0 / (e0[10] - e0[9]));
    e2[13] = q / (e0[13] - e0[14]);
    e2[14] = -e2[13];

    let swap_margin = a / 2.0 - zeeman;
    PerturbativeSpectrum {
        zeroth: e0,
        second: e2,
        swapped: swap_margin > 0.0,
        swap_margin,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallParams {
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub xi: f64,
}

/// epsilon = J / (2 gamma_e (B2 - B1)), epsilon' = J / |2 gamma_e (B2 - B1) - A|,
/// xi = A / (2 gamma_e b).
pub fn small_params(p: &EffectiveParams) -> Result<SmallParams> {
    let split = 2.0 * p.gamma_e * (p.b2 - p.b1);
    let scale = p.gamma_e * p.mean_field().abs();
    if split.abs() <= 1e-12 * scale {
        return Err(Error::Pole("epsilon: B2 == B1"));
    }
    let shifted = split - p.hyperfine_a;
    if shifted.abs() <= 1e-12 * scale {
        return Err(Error::Pole("epsilon': 2 gamma_e (B2 - B1) == A"));
    }
    if scale == 0.0 {
        return Err(Error::Pole("xi: b == 0"));
    }
    Ok(SmallParams {
        epsilon: p.exchange_j / split,
        epsilon_prime: p.exchange_j / shifted.abs(),
        xi: p.hyperfine_a / (2.0 * p.gamma_e * p.mean_field()),
    })
}

/// Eigenvalues straight from the solver, unlabeled and ascending.
pub fn sorted_eigenvalues(h: &HamiltonianMatrix) -> Result<SVector<f64, DIM>> {
    let mut v = linalg::hermitian_eigen(h.matrix())?.values;
    v.as_mut_slice().sort_by(f64::total_cmp);
    Ok(v)
}

/// Parameters, Hamiltonian and exact spectrum of one chain, built together.
#[derive(Clone, Debug)]
pub struct Register {
    pub params: EffectiveParams,
    pub hamiltonian: HamiltonianMatrix,
    pub spectrum: Spectrum,
}

impl Register {
    pub fn new(params: EffectiveParams) -> Result<Self> {
        let hamiltonian = build_h0(&params);
        let spectrum = exact_spectrum(&hamiltonian)?;
        Ok(Self {
            params,
            hamiltonian,
            spectrum,
        })
    }

    pub fn from_geometry(geometry: &DeviceGeometry, constants: &PhysicalConstants) -> Result<Self> {
        Self::new(effective_params(geometry, constants)?)
    }
}
