//! Time evolution of the register: rectangular pulses through the rotating
//! frame, instantaneous electron relaxation, and a lab-frame reference
//! integrator.

use nalgebra::SMatrix;
use num_complex::Complex64;

use crate::basis::{self, BasisIndex, Matrix16, Spin, Vector16, DIM};
use crate::error::{Error, Result};
use crate::linalg;
use crate::params::EffectiveParams;
use crate::pulse::{drive_operator, PulseSpec};
use crate::spectrum::{build_h0, HamiltonianMatrix};

/// Tolerance on norm, trace and positivity of states.
pub const STATE_TOLERANCE: f64 = 1e-9;

/// Largest dt * max|H| accepted by [`integrate_lab_frame`].
pub const MAX_STEP_RATIO: f64 = 0.05;

pub type Matrix4 = SMatrix<Complex64, 4, 4>;

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState(Vector16);

impl QuantumState {
    pub fn new(amplitudes: Vector16) -> Result<Self> {
        let n = amplitudes.norm();
        if !n.is_finite() || (n - 1.0).abs() > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("norm {n} differs from 1")));
        }
        Ok(Self(amplitudes))
    }

    /// Normalizes `amplitudes`; fails only for a zero or non-finite vector.
    pub fn normalized(amplitudes: Vector16) -> Result<Self> {
        let n = amplitudes.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self(amplitudes / Complex64::new(n, 0.0)))
    }

    pub fn basis(b: BasisIndex) -> Self {
        Self(basis::ket(b))
    }

    pub fn amplitudes(&self) -> &Vector16 {
        &self.0
    }

    pub fn amplitude(&self, b: BasisIndex) -> Complex64 {
        self.0[b.index()]
    }

    pub fn population(&self, b: BasisIndex) -> f64 {
        self.0[b.index()].norm_sqr()
    }

    pub fn populations(&self) -> [f64; DIM] {
        std::array::from_fn(|i| self.0[i].norm_sqr())
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn to_density(&self) -> DensityState {
        DensityState(self.0 * self.0.adjoint())
    }

    fn transformed(&self, u: &Matrix16) -> Self {
        Self(u * self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityState(Matrix16);

impl DensityState {
    pub fn new(rho: Matrix16) -> Result<Self> {
        let herm = linalg::hermiticity_defect(&rho);
        if herm.is_nan() || herm > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm:.2e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > STATE_TOLERANCE || tr.im.abs() > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let sym = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        let min = linalg::hermitian_eigen(&sym)?.values.min();
        if min < -STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.2e}")));
        }
        Ok(Self(rho))
    }

    pub fn basis(b: BasisIndex) -> Self {
        QuantumState::basis(b).to_density()
    }

    pub fn matrix(&self) -> &Matrix16 {
        &self.0
    }

    pub fn population(&self, b: BasisIndex) -> f64 {
        self.0[(b.index(), b.index())].re
    }

    pub fn populations(&self) -> [f64; DIM] {
        std::array::from_fn(|i| self.0[(i, i)].re)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Reduced state of the nuclei, indexed by 2 n2 + n1.
    pub fn nuclear_reduced(&self) -> Matrix4 {
        let mut out = Matrix4::zeros();
        let full = |nuc: usize, el: usize| ((nuc >> 1) << 3) | (el << 1) | (nuc & 1);
        for a in 0..4 {
            for b in 0..4 {
                out[(a, b)] = (0..4).map(|el| self.0[(full(a, el), full(b, el))]).sum();
            }
        }
        out
    }

    fn transformed(&self, u: &Matrix16) -> Self {
        Self(u * self.0 * u.adjoint())
    }
}

/// States a unitary can act on.
pub trait Evolvable: Sized {
    fn apply_unitary(&self, u: &Matrix16) -> Self;
}

impl Evolvable for QuantumState {
    fn apply_unitary(&self, u: &Matrix16) -> Self {
        self.transformed(u)
    }
}

impl Evolvable for DensityState {
    fn apply_unitary(&self, u: &Matrix16) -> Self {
        self.transformed(u)
    }
}

/// Time-independent Hamiltonian in the frame rotating with the carrier:
/// H0 + nu Fz + B1 (V e^{-i phi} + h.c.).
pub fn rotating_hamiltonian(h0: &HamiltonianMatrix, pulse: &PulseSpec) -> HamiltonianMatrix {
    let mut m = *h0.matrix();
    for (i, fz) in basis::total_projection_diagonal().iter().enumerate() {
        m[(i, i)] += Complex64::new(pulse.nu * fz, 0.0);
    }
    let v = drive_matrix(pulse) * Complex64::from_polar(1.0, -pulse.phi);
    HamiltonianMatrix::from_matrix(m + v + v.adjoint())
}

/// omega_e/2 (S1- + S2-) - omega_n/2 (I1- + I2-).
fn drive_matrix(pulse: &PulseSpec) -> Matrix16 {
    if pulse.b1_amplitude > 0.0 {
        drive_operator(pulse.omega_e / pulse.b1_amplitude, pulse.omega_n / pulse.b1_amplitude)
            * Complex64::new(pulse.b1_amplitude, 0.0)
    } else {
        drive_operator(0.0, 0.0)
    }
}

/// Lab-frame evolution operator of one pulse.
#[derive(Clone, Debug, PartialEq)]
pub struct Propagator(Matrix16);

impl Propagator {
    /// exp(+i nu tau Fz) exp(-i H_rot tau).
    pub fn for_pulse(h0: &HamiltonianMatrix, pulse: &PulseSpec) -> Result<Self> {
        pulse.validate()?;
        let hr = rotating_hamiltonian(h0, pulse);
        let mut u = linalg::unitary_step(hr.matrix(), pulse.tau)?;
        for (i, fz) in basis::total_projection_diagonal().iter().enumerate() {
            let phase = Complex64::from_polar(1.0, pulse.nu * pulse.tau * fz);
            for j in 0..DIM {
                u[(i, j)] *= phase;
            }
        }
        Ok(Self(u))
    }

    pub fn matrix(&self) -> &Matrix16 {
        &self.0
    }

    pub fn apply<S: Evolvable>(&self, state: &S) -> S {
        state.apply_unitary(&self.0)
    }

    /// |<q|U|p>|^2.
    pub fn transition_probability(&self, p: BasisIndex, q: BasisIndex) -> f64 {
        self.0[(q.index(), p.index())].norm_sqr()
    }
}

pub fn evolve_pulse<S: Evolvable>(state: &S, h0: &HamiltonianMatrix, pulse: &PulseSpec) -> Result<S> {
    Ok(Propagator::for_pulse(h0, pulse)?.apply(state))
}

/// Kraus pair of the full amplitude-damping channel of one electron onto |1>.
fn relaxation_kraus(spin: Spin) -> (Matrix16, Matrix16) {
    let mut keep = Matrix16::zeros();
    let mut decay = Matrix16::zeros();
    for b in BasisIndex::all() {
        if b.bit(spin) == 1 {
            keep[(b.index(), b.index())] = Complex64::new(1.0, 0.0);
        } else {
            decay[(b.flipped(spin).index(), b.index())] = Complex64::new(1.0, 0.0);
        }
    }
    (keep, decay)
}

/// Both electrons relax completely to |1>; nuclear spins are untouched.
pub fn relax_electrons(rho: &DensityState) -> DensityState {
    let mut m = rho.0;
    for spin in [Spin::E1, Spin::E2] {
        let (k0, k1) = relaxation_kraus(spin);
        m = k0 * m * k0.adjoint() + k1 * m * k1.adjoint();
    }
    DensityState(m)
}

/// Adjoint (Heisenberg-picture) action of [`relax_electrons`] on an observable.
pub fn relax_electrons_adjoint(observable: &Matrix16) -> Matrix16 {
    let mut m = *observable;
    for spin in [Spin::E2, Spin::E1] {
        let (k0, k1) = relaxation_kraus(spin);
        m = k0.adjoint() * m * k0 + k1.adjoint() * m * k1;
    }
    m
}

/// Integrates i d/dt psi = (H0 + V(t)) psi over one pulse with classical RK4,
/// where V(t) = B1 (V e^{-i(nu t + phi)} + h.c.).
pub fn integrate_lab_frame(
    state: &QuantumState,
    params: &EffectiveParams,
    pulse: &PulseSpec,
    dt: f64,
) -> Result<QuantumState> {
    pulse.validate()?;
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let h0 = *build_h0(params).matrix();
    let v = drive_matrix(pulse);
    let vd = v.adjoint();
    let scale = (linalg::max_abs_entry(&h0) + linalg::max_abs_entry(&v)).max(pulse.nu.abs());
    let ratio = dt * scale;
    if ratio > MAX_STEP_RATIO {
        return Err(Error::StepSize {
            ratio,
            limit: MAX_STEP_RATIO,
        });
    }
    let steps = (pulse.tau / dt).ceil().max(1.0) as u64;
    let h = pulse.tau / steps as f64;
    let minus_i = Complex64::new(0.0, -1.0);
    let rhs = |t: f64, psi: &Vector16| -> Vector16 {
        let phase = Complex64::from_polar(1.0, -(pulse.nu * t + pulse.phi));
        let h = h0 + v * phase + vd * phase.conj();
        h * psi * minus_i
    };
    let mut psi = *state.amplitudes();
    let half = Complex64::new(h / 2.0, 0.0);
    let full = Complex64::new(h, 0.0);
    let sixth = Complex64::new(h / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    for n in 0..steps {
        let t = n as f64 * h;
        let k1 = rhs(t, &psi);
        let k2 = rhs(t + h / 2.0, &(psi + k1 * half));
        let k3 = rhs(t + h / 2.0, &(psi + k2 * half));
        let k4 = rhs(t + h, &(psi + k3 * full));
        psi += (k1 + k2 * two + k3 * two + k4) * sixth;
    }
    Ok(QuantumState(psi))
}
