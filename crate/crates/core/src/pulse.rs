//! Rectangular-pulse design for the register's CNOT gates and the analytic
//! error estimators that go with it.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{self, BasisIndex, Matrix16, Spin};
use crate::error::{Error, Result};
use crate::exchange::ExchangeModel;
use crate::spectrum::{small_params, Register, Spectrum};

/// Default 2piK index for electron pulses.
pub const DEFAULT_K_ELECTRON: u32 = 1;
/// Default 2piK index for nuclear pulses, inside the window of valid K_n.
pub const DEFAULT_K_NUCLEAR: u32 = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Electron,
    Nuclear,
}

impl Species {
    pub fn default_k(self) -> u32 {
        match self {
            Species::Electron => DEFAULT_K_ELECTRON,
            Species::Nuclear => DEFAULT_K_NUCLEAR,
        }
    }
}

/// The CNOT gates used by the initialization protocol plus the
/// electron-electron gate. Every gate flips its target spin by driving a
/// transition p -> q with q one bit lower (spin +1/2 -> -1/2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gate {
    /// CN_{n1,e1}: flips electron 1 when nucleus 1 is |1>.
    #[serde(rename = "a")]
    A,
    /// CN_{e1,n1}: flips nucleus 1 when electron 1 is |1>.
    #[serde(rename = "b")]
    B,
    /// CN_{n2,e2}.
    #[serde(rename = "c")]
    C,
    /// CN_{e2,n2}.
    #[serde(rename = "d")]
    D,
    /// CN_{e2,e1}: flips electron 1 when electron 2 is |1>, both nuclei |1>.
    #[serde(rename = "ee")]
    Ee,
}

impl Gate {
    pub const ALL: [Gate; 5] = [Gate::A, Gate::B, Gate::C, Gate::D, Gate::Ee];

    /// Protocol order of the initialization gates.
    pub const INITIALIZATION: [Gate; 4] = [Gate::A, Gate::B, Gate::C, Gate::D];

    pub fn label(self) -> &'static str {
        match self {
            Gate::A => "a",
            Gate::B => "b",
            Gate::C => "c",
            Gate::D => "d",
            Gate::Ee => "ee",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gate::A => "CN_n1e1",
            Gate::B => "CN_e1n1",
            Gate::C => "CN_n2e2",
            Gate::D => "CN_e2n2",
            Gate::Ee => "CN_e2e1",
        }
    }

    fn indices(self) -> ((usize, usize), (usize, usize)) {
        match self {
            Gate::A => ((13, 15), (12, 14)),
            Gate::B => ((14, 15), (12, 13)),
            Gate::C => ((11, 15), (3, 7)),
            Gate::D => ((7, 15), (3, 11)),
            Gate::Ee => ((13, 15), (9, 11)),
        }
    }

    pub fn resonant_pair(self) -> (BasisIndex, BasisIndex) {
        let ((p, q), _) = self.indices();
        (idx(p), idx(q))
    }

    pub fn suppressed_pair(self) -> (BasisIndex, BasisIndex) {
        let (_, (p, q)) = self.indices();
        (idx(p), idx(q))
    }

    pub fn target(self) -> Spin {
        let (p, q) = self.resonant_pair();
        p.single_flip(q).expect("gate pairs differ in one bit")
    }

    pub fn species(self) -> Species {
        if self.target().is_electron() {
            Species::Electron
        } else {
            Species::Nuclear
        }
    }
}

fn idx(i: usize) -> BasisIndex {
    BasisIndex::new(i).expect("gate table indices are in range")
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Gate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Gate::ALL
            .into_iter()
            .find(|g| g.label().eq_ignore_ascii_case(s) || g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown gate '{s}' (expected a, b, c, d or ee)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSpec {
    pub gate: Gate,
    pub resonant_pair: (BasisIndex, BasisIndex),
    pub suppressed_pair: (BasisIndex, BasisIndex),
    pub k: u32,
    pub species: Species,
}

impl GateSpec {
    pub fn new(gate: Gate, k: u32) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidArgument(format!("K must be at least 1, got {k}")));
        }
        let spec = Self {
            gate,
            resonant_pair: gate.resonant_pair(),
            suppressed_pair: gate.suppressed_pair(),
            k,
            species: gate.species(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_default_k(gate: Gate) -> Self {
        Self::new(gate, gate.species().default_k()).expect("default K is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let (p, q) = self.resonant_pair;
        let (pp, qq) = self.suppressed_pair;
        let flip = p.single_flip(q);
        if flip.is_none() {
            return Err(Error::InvalidArgument(format!("{p} and {q} differ in more than one spin")));
        }
        if pp.single_flip(qq) != flip {
            return Err(Error::InvalidArgument(
                "suppressed pair must flip the same spin as the resonant pair".into(),
            ));
        }
        if (p, q) == (pp, qq) {
            return Err(Error::InvalidArgument("suppressed pair equals resonant pair".into()));
        }
        Ok(())
    }

    pub fn target(&self) -> Spin {
        self.resonant_pair
            .0
            .single_flip(self.resonant_pair.1)
            .expect("validated")
    }
}

/// A rectangular pulse of circularly polarized field B1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Carrier frequency, signed, rad/s.
    pub nu: f64,
    pub phi: f64,
    /// Rotating-field amplitude, T.
    pub b1_amplitude: f64,
    /// gamma_e * B1, rad/s.
    pub omega_e: f64,
    /// gamma_n * B1, rad/s.
    pub omega_n: f64,
    /// Rabi frequency of the driven transition (dressed by the static
    /// couplings), rad/s.
    pub rabi: f64,
    /// Detuning of the suppressed transition at design time, rad/s.
    pub detuning: f64,
    /// Duration, s.
    pub tau: f64,
}

impl PulseSpec {
    /// Pulse with amplitude B1 (T) for the given gyromagnetic ratios.
    pub fn new(nu: f64, b1_amplitude: f64, gamma_e: f64, gamma_n: f64, tau: f64) -> Self {
        Self {
            nu,
            phi: 0.0,
            b1_amplitude,
            omega_e: gamma_e * b1_amplitude,
            omega_n: gamma_n * b1_amplitude,
            rabi: 0.0,
            detuning: 0.0,
            tau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.nu, self.phi, self.b1_amplitude, self.omega_e, self.omega_n, self.tau]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.tau <= 0.0 || self.b1_amplitude < 0.0 {
            return Err(Error::InvalidArgument(format!("invalid pulse {self:?}")));
        }
        Ok(())
    }
}

/// Coefficient of e^{-i(nu t + phi)} in the drive per unit B1 amplitude,
/// gamma_e/2 (S1- + S2-) - gamma_n/2 (I1- + I2-).
pub fn drive_operator(gamma_e: f64, gamma_n: f64) -> Matrix16 {
    let e = basis::lowering(Spin::E1) + basis::lowering(Spin::E2);
    let n = basis::lowering(Spin::N1) + basis::lowering(Spin::N2);
    e * Complex64::new(gamma_e / 2.0, 0.0) - n * Complex64::new(gamma_n / 2.0, 0.0)
}

/// Transition probability after a pulse of duration pi/omega at detuning delta:
/// R = (omega/lambda)^2 sin^2(pi lambda / (2 omega)), lambda = sqrt(omega^2 + delta^2).
pub fn rabi_probability(omega: f64, delta: f64) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    let lambda = omega.hypot(delta);
    let s = (PI * lambda / (2.0 * omega)).sin();
    ((omega / lambda).powi(2) * s * s).clamp(0.0, 1.0)
}

/// Rabi frequency that makes a transition detuned by `delta` complete K full
/// rotations during the pi-pulse: |delta| / sqrt(4K^2 - 1).
pub fn two_pi_k_omega(delta: f64, k: u32) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidArgument(format!("K must be at least 1, got {k}")));
    }
    if delta == 0.0 {
        return Err(Error::Pole("2piK condition at zero detuning"));
    }
    let k = f64::from(k);
    Ok(delta.abs() / (4.0 * k * k - 1.0).sqrt())
}

/// pi-pulse duration.
pub fn pulse_duration(omega: f64) -> f64 {
    PI / omega
}

/// mu = omega / (2 |delta_omega|).
pub fn nonresonant_mu(omega: f64, delta_omega: f64) -> Result<f64> {
    if delta_omega == 0.0 {
        return Err(Error::Pole("mu at zero off-resonance detuning"));
    }
    Ok(omega / (2.0 * delta_omega.abs()))
}

/// P = 1 - R + epsilon^2 + mu^2.
pub fn error_estimate(r: f64, epsilon: f64, mu: f64) -> f64 {
    1.0 - r + epsilon * epsilon + mu * mu
}

/// Matrix element of the unit-amplitude drive between two exact eigenstates.
pub fn dressed_coupling(spectrum: &Spectrum, gamma_e: f64, gamma_n: f64, p: BasisIndex, q: BasisIndex) -> Complex64 {
    let v = drive_operator(gamma_e, gamma_n);
    let bra = spectrum.eigenvector(q).adjoint();
    (bra * v * spectrum.eigenvector(p))[(0, 0)]
}

/// Designs the pulse for `gate` on the ideal chain.
///
/// The carrier sits on the exact resonant transition, the Rabi frequency
/// satisfies the 2piK condition for the suppressed transition and B1 is chosen
/// so that the drive's matrix element between the two exact eigenstates gives
/// that Rabi frequency.
pub fn design_gate(ideal: &Register, gate: &GateSpec) -> Result<PulseSpec> {
    gate.validate()?;
    let spec = &ideal.spectrum;
    let (p, q) = gate.resonant_pair;
    let (pp, qq) = gate.suppressed_pair;
    let nu = spec.transition_frequency(p, q);
    let detuning = spec.transition_frequency(pp, qq) - nu;
    let rabi = two_pi_k_omega(detuning, gate.k)?;
    let (ge, gn) = (ideal.params.gamma_e, ideal.params.gamma_n);
    let coupling = dressed_coupling(spec, ge, gn, p, q).norm();
    if coupling == 0.0 {
        return Err(Error::Pole("drive does not couple the resonant pair"));
    }
    let b1 = rabi / (2.0 * coupling);
    let tau = pulse_duration(rabi);
    Ok(PulseSpec {
        rabi,
        detuning,
        ..PulseSpec::new(nu, b1, ge, gn, tau)
    })
}

/// Resonant transition frequency in `actual` minus the designed carrier.
pub fn detuning_in(actual: &Spectrum, gate: &GateSpec, pulse: &PulseSpec) -> f64 {
    let (p, q) = gate.resonant_pair;
    actual.transition_frequency(p, q) - pulse.nu
}

/// Unwanted detuning of the resonant transition caused by displacing the
/// donors from the ideal geometry the pulse was designed for.
pub fn displacement_detuning(ideal: &Register, actual: &Register, gate: &GateSpec) -> Result<f64> {
    let pulse = design_gate(ideal, gate)?;
    Ok(detuning_in(&actual.spectrum, gate, &pulse))
}

/// Detuning of the single-flip transition closest to the carrier among those
/// that share a level with the resonant pair (the resonant pair excluded).
pub fn nearest_offresonant(spectrum: &Spectrum, gate: &GateSpec, nu: f64) -> (BasisIndex, BasisIndex, f64) {
    let (p, q) = gate.resonant_pair;
    let mut best: Option<(BasisIndex, BasisIndex, f64)> = None;
    for level in [p, q] {
        for spin in Spin::ALL {
            let other = level.flipped(spin);
            let (lo, hi) = if level.bit(spin) == 0 { (level, other) } else { (other, level) };
            if (lo, hi) == (p, q) {
                continue;
            }
            let d = spectrum.transition_frequency(lo, hi) - nu;
            if best.is_none_or(|b| d.abs() < b.2.abs()) {
                best = Some((lo, hi, d));
            }
        }
    }
    best.expect("each level has three other single-flip neighbours")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    /// Unwanted detuning of the resonant transition, rad/s.
    pub detuning: f64,
    pub rabi_probability: f64,
    pub epsilon: f64,
    pub mu: f64,
    /// Detuning of the nearest off-resonant transition, rad/s.
    pub offresonant_detuning: f64,
    pub total: f64,
}

/// Analytic single-pulse error 1 - R(Omega, Delta') + epsilon^2 + mu^2 for a
/// pulse designed on `ideal` and applied to `actual`.
pub fn estimate_gate_error(ideal: &Register, actual: &Register, gate: &GateSpec) -> Result<ErrorEstimate> {
    let pulse = design_gate(ideal, gate)?;
    let detuning = detuning_in(&actual.spectrum, gate, &pulse);
    let r = rabi_probability(pulse.rabi, detuning);
    let epsilon = small_params(&actual.params)?.epsilon;
    let (_, _, dw) = nearest_offresonant(&actual.spectrum, gate, pulse.nu);
    let mu = nonresonant_mu(pulse.rabi, dw)?;
    Ok(ErrorEstimate {
        detuning,
        rabi_probability: r,
        epsilon,
        mu,
        offresonant_detuning: dw,
        total: error_estimate(r, epsilon, mu),
    })
}

/// Range of K_n for the nuclear gate (b) that keeps both error sources small.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnWindow {
    /// Smallest K_n with mu <= 1 against the second nuclear spin's transition.
    pub k_min: u64,
    /// Largest K_n whose Rabi frequency still exceeds the displacement detuning.
    pub k_max: u64,
}

/// Solves |delta| / sqrt(4K^2 - 1) = omega for continuous K.
fn k_for_rabi(delta: f64, omega: f64) -> f64 {
    let x = delta / omega;
    (x * x + 1.0).sqrt() / 2.0
}

pub fn kn_window(ideal: &Spectrum, displaced: &Spectrum) -> Result<KnWindow> {
    let gate = Gate::B;
    let (p, q) = gate.resonant_pair();
    let (pp, qq) = gate.suppressed_pair();
    let nu = ideal.transition_frequency(p, q);
    let delta = ideal.transition_frequency(pp, qq) - nu;
    // flip of the second nucleus with both electrons in |1>: |0110> -> |1110>
    let dw = ideal.transition_frequency(idx(6), idx(14)) - nu;
    let shifted = displaced.transition_frequency(p, q) - nu;
    if dw == 0.0 || shifted == 0.0 {
        return Err(Error::Pole("K_n window with a vanishing detuning"));
    }
    Ok(KnWindow {
        k_min: k_for_rabi(delta, 2.0 * dw.abs()).ceil() as u64,
        k_max: k_for_rabi(delta, shifted.abs()).floor() as u64,
    })
}

/// Analytic estimate for an interior electron of a longer chain displaced by
/// one site with both neighbours at their nominal spacing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteriorEstimate {
    /// Shift of the electron's transition frequency, rad/s.
    pub detuning: f64,
    /// Designed Rabi frequency J0/sqrt(3) (K' = 1), rad/s.
    pub rabi: f64,
    /// Change of the Rabi frequency that a J-calibrated pulse would need, rad/s.
    pub rabi_shift: f64,
}

pub fn interior_qubit_estimate(m: i32, model: &ExchangeModel) -> Result<InteriorEstimate> {
    if m.abs() != 1 {
        return Err(Error::InvalidArgument(format!(
            "interior estimate is defined for |m| = 1, got {m}"
        )));
    }
    let j0 = model.j0();
    let sqrt3 = 3f64.sqrt();
    Ok(InteriorEstimate {
        detuning: 0.5 * (model.j_at_shift(1.0) + model.j_at_shift(-1.0)) - j0,
        rabi: j0 / sqrt3,
        rabi_shift: model.delta_j(m)? / sqrt3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{hz, to_hz, DeviceGeometry, PhysicalConstants};
    use proptest::prelude::*;

    fn register(m1: i32, m2: i32) -> Register {
        Register::from_geometry(
            &DeviceGeometry::default().with_displacements(m1, m2),
            &PhysicalConstants::default(),
        )
        .unwrap()
    }

    fn mhz(w: f64) -> f64 {
        to_hz(w) / 1e6
    }

    #[test]
    fn rabi_formula_points() {
        assert_eq!(rabi_probability(1.0, 0.0), 1.0);
        assert!(rabi_probability(1.0, 3f64.sqrt()) < 1e-12);
        let r = rabi_probability(hz(67.82e6), hz(2.466e6));
        // direct evaluation, independent of the implementation
        let (o, d) = (67.82f64, 2.466f64);
        let l = (o * o + d * d).sqrt();
        let expect = (o / l).powi(2) * (PI * l / (2.0 * o)).sin().powi(2);
        assert!((r - expect).abs() < 1e-14);
        assert!(((1.0 - r) / 1.32e-3 - 1.0).abs() < 0.01, "{}", 1.0 - r);
    }

    #[test]
    fn two_pi_k_points() {
        let d = hz(-117.47e6);
        assert!((mhz(two_pi_k_omega(d, 1).unwrap()) - 67.82).abs() < 0.005);
        let khz = to_hz(two_pi_k_omega(d, 700).unwrap()) / 1e3;
        assert!((khz - 83.9).abs() < 0.05, "{khz}");
        let big = two_pi_k_omega(d, 1_000_000).unwrap();
        assert!((big / (d.abs() / 2e6) - 1.0).abs() < 1e-12);
        assert!(two_pi_k_omega(d, 0).is_err());
        assert!(matches!(two_pi_k_omega(0.0, 1), Err(Error::Pole(_))));
    }

    #[test]
    fn durations() {
        assert!((pulse_duration(hz(67.82e6)) * 1e9 - 7.372).abs() < 0.001);
        assert!((pulse_duration(hz(5.9e3)) * 1e6 - 84.75).abs() < 0.01);
        let w = 1.2345e6;
        assert!((pulse_duration(w) * w - PI).abs() < 1e-15);
    }

    #[test]
    fn mu_points() {
        assert!((nonresonant_mu(hz(161.92e3), hz(80.96e3)).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(nonresonant_mu(0.0, 1.0).unwrap(), 0.0);
        assert!(nonresonant_mu(1.0, 0.0).is_err());
        assert_eq!(error_estimate(1.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn gate_a_design() {
        let ideal = register(0, 0);
        let pulse = design_gate(&ideal, &GateSpec::new(Gate::A, 1).unwrap()).unwrap();
        assert!((to_hz(pulse.nu) / 1e9 + 92.35).abs() < 0.01, "{}", to_hz(pulse.nu));
        assert!((mhz(pulse.detuning) + 117.47).abs() < 0.02, "{}", mhz(pulse.detuning));
        assert!((mhz(pulse.rabi) - 67.82).abs() < 0.02);
        assert!((pulse.tau * pulse.rabi - PI).abs() < 1e-12);
        assert_eq!(pulse.omega_n / pulse.omega_e, ideal.params.gamma_n / ideal.params.gamma_e);
        // dressing barely matters for the electron flip
        assert!((pulse.omega_e / pulse.rabi - 1.0).abs() < 1e-2);
        assert_eq!(pulse.phi, 0.0);
        pulse.validate().unwrap();
    }

    #[test]
    fn gate_b_design() {
        let ideal = register(0, 0);
        let a = design_gate(&ideal, &GateSpec::new(Gate::A, 1).unwrap()).unwrap();
        let b = design_gate(&ideal, &GateSpec::new(Gate::B, 2000).unwrap()).unwrap();
        // exact carrier; the zeroth-order approximation for E14 gives 115.655 MHz
        assert!((mhz(b.nu) - 115.692).abs() < 0.001, "{}", mhz(b.nu));
        assert!((b.detuning / a.detuning - 1.0).abs() < 1e-3);
        // hyperfine mixing with the electron roughly doubles the nuclear
        // matrix element, so the bare gamma_n B1 is about half the Rabi frequency
        let ratio = b.omega_n / b.rabi;
        assert!((0.45..0.55).contains(&ratio), "{ratio}");
    }

    #[test]
    fn ee_design_detuned_by_j() {
        let ideal = register(0, 0);
        let pulse = design_gate(&ideal, &GateSpec::new(Gate::Ee, 1).unwrap()).unwrap();
        let j = ideal.params.exchange_j;
        assert!((pulse.detuning.abs() / j - 1.0).abs() < 0.02, "{}", pulse.detuning / j);
        assert!((pulse.rabi / j - 0.577).abs() < 0.012);
    }

    #[test]
    fn suppressed_transition_completes_full_rotations() {
        let ideal = register(0, 0);
        for gate in Gate::ALL {
            let gs = GateSpec::with_default_k(gate);
            let pulse = design_gate(&ideal, &gs).unwrap();
            assert!(rabi_probability(pulse.rabi, pulse.detuning) < 1e-10, "{gate}");
            assert_eq!(rabi_probability(pulse.rabi, 0.0), 1.0);
        }
    }

    #[test]
    fn gate_table() {
        for gate in Gate::ALL {
            GateSpec::with_default_k(gate).validate().unwrap();
            assert_eq!(gate.label().parse::<Gate>().unwrap(), gate);
            assert_eq!(gate.name().parse::<Gate>().unwrap(), gate);
        }
        assert_eq!(Gate::A.target(), Spin::E1);
        assert_eq!(Gate::B.target(), Spin::N1);
        assert_eq!(Gate::C.target(), Spin::E2);
        assert_eq!(Gate::D.target(), Spin::N2);
        assert_eq!(Gate::B.species(), Species::Nuclear);
        assert!("x".parse::<Gate>().is_err());
        assert!(GateSpec::new(Gate::A, 0).is_err());
        let mut bad = GateSpec::with_default_k(Gate::A);
        bad.suppressed_pair = bad.resonant_pair;
        assert!(bad.validate().is_err());
        bad.suppressed_pair = (idx(12), idx(13));
        assert!(bad.validate().is_err());
    }

    #[test]
    fn displacement_detunings() {
        let ideal = register(0, 0);
        let a = GateSpec::new(Gate::A, 1).unwrap();
        let b = GateSpec::new(Gate::B, 2000).unwrap();
        let minus = displacement_detuning(&ideal, &register(-1, 0), &a).unwrap();
        let plus = displacement_detuning(&ideal, &register(1, 0), &a).unwrap();
        assert!((mhz(minus) - 2.466).abs() < 0.05, "{}", mhz(minus));
        assert!((mhz(plus) + 2.30).abs() < 0.02, "{}", mhz(plus));
        assert!(plus.abs() < minus.abs());
        let nb = displacement_detuning(&ideal, &register(-1, 0), &b).unwrap();
        assert!((to_hz(nb) / 1e3 + 1.72).abs() < 0.05, "{}", to_hz(nb));
        for gate in Gate::ALL {
            let d = displacement_detuning(&ideal, &ideal, &GateSpec::with_default_k(gate)).unwrap();
            assert!(d.abs() < hz(1.0));
        }
    }

    #[test]
    fn k_window() {
        let ideal = register(0, 0);
        let w = kn_window(&ideal.spectrum, &register(-1, 0).spectrum).unwrap();
        assert!(w.k_min.abs_diff(363) <= 1, "{w:?}");
        assert!(w.k_max.abs_diff(34_148) <= 50, "{w:?}");
        // a steeper gradient separates the nuclear transitions further
        let steep = DeviceGeometry {
            gradient: 2.6e5,
            half_split: 2.0 * DeviceGeometry::default().half_split,
            ..DeviceGeometry::default()
        };
        let c = PhysicalConstants::default();
        let ideal2 = Register::from_geometry(&steep, &c).unwrap();
        let disp2 = Register::from_geometry(&steep.with_displacements(-1, 0), &c).unwrap();
        let w2 = kn_window(&ideal2.spectrum, &disp2.spectrum).unwrap();
        assert!(w2.k_min < w.k_min);
    }

    #[test]
    fn interior_estimates() {
        let model = ExchangeModel::new(PhysicalConstants::default(), 47);
        let j0 = model.j0();
        for m in [-1, 1] {
            let e = interior_qubit_estimate(m, &model).unwrap();
            assert!((e.detuning / j0 - 0.086).abs() < 0.005, "{}", e.detuning / j0);
            assert!((e.rabi / j0 - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
        let e = interior_qubit_estimate(-1, &model).unwrap();
        assert!((e.rabi_shift / e.rabi + 0.337).abs() < 0.005);
        assert!(interior_qubit_estimate(2, &model).is_err());
    }

    #[test]
    fn gate_a_estimate_near_minus_one() {
        let ideal = register(0, 0);
        let est = estimate_gate_error(&ideal, &register(-1, 0), &GateSpec::new(Gate::A, 1).unwrap()).unwrap();
        assert!(((1.0 - est.rabi_probability) / 1.32e-3 - 1.0).abs() < 0.05);
        assert!(est.total > 1.0 - est.rabi_probability);
    }

    proptest! {
        #[test]
        fn rabi_even_in_detuning(o in 1e3f64..1e9, d in -1e9f64..1e9) {
            prop_assert_eq!(rabi_probability(o, d), rabi_probability(o, -d));
            let r = rabi_probability(o, d);
            prop_assert!((0.0..=1.0).contains(&r));
        }

        #[test]
        fn two_pi_k_zeroes_rabi(k in 1u32..=100, d in prop_oneof![-1e10f64..-1.0, 1.0f64..1e10]) {
            let o = two_pi_k_omega(d, k).unwrap();
            prop_assert!(rabi_probability(o, d) < 1e-10);
        }
    }
}
