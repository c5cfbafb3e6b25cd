//! Cross-module invariants checked on random inputs.

use donorchain::basis::{BasisIndex, Matrix16};
use donorchain::ensemble::{ensemble_init, DisplacementLaw, EnsembleConfig};
use donorchain::params::{effective_params, to_hz, DeviceGeometry, PhysicalConstants, MAX_DISPLACEMENT};
use donorchain::protocols::{gate_outcome, DesignedGate};
use donorchain::pulse::{design_gate, displacement_detuning, rabi_probability, Gate, GateSpec};
use donorchain::spectrum::{exact_spectrum, HamiltonianMatrix, Register};
use donorchain::Execution;
use num_complex::Complex64;
use proptest::prelude::*;

fn constants() -> PhysicalConstants {
    PhysicalConstants::default()
}

fn register(m1: i32, m2: i32) -> Register {
    Register::from_geometry(&DeviceGeometry::default().with_displacements(m1, m2), &constants()).unwrap()
}

fn displacement() -> impl Strategy<Value = i32> {
    -MAX_DISPLACEMENT..=MAX_DISPLACEMENT
}

#[test]
fn gradient_step_matches_nominal_split() {
    let g = DeviceGeometry::default();
    let p = effective_params(&g, &constants()).unwrap();
    let per_site = (p.b2 - p.b1) / f64::from(g.n0);
    assert!((per_site / g.field_step(&constants()) - 1.0).abs() < 1e-3);
}

#[test]
fn displacement_detuning_vanishes_without_displacement() {
    let ideal = register(0, 0);
    for gate in Gate::ALL {
        let d = displacement_detuning(&ideal, &ideal, &GateSpec::with_default_k(gate)).unwrap();
        assert!(to_hz(d).abs() < 1.0, "{gate}: {d}");
    }
}

#[test]
fn negative_displacement_detunes_electron_gate_more() {
    let ideal = register(0, 0);
    let a = GateSpec::new(Gate::A, 1).unwrap();
    let minus = displacement_detuning(&ideal, &register(-1, 0), &a).unwrap();
    let plus = displacement_detuning(&ideal, &register(1, 0), &a).unwrap();
    assert!(plus.abs() < minus.abs(), "{plus} vs {minus}");
}

#[test]
fn designed_pulses_meet_their_own_conditions() {
    let ideal = register(0, 0);
    for gate in Gate::ALL {
        let spec = GateSpec::with_default_k(gate);
        let pulse = design_gate(&ideal, &spec).unwrap();
        assert!((rabi_probability(pulse.rabi, 0.0) - 1.0).abs() < 1e-12);
        assert!(rabi_probability(pulse.rabi, pulse.detuning) < 1e-10, "{gate}");
        assert!(pulse.tau > 0.0);
        let ratio = pulse.omega_n / pulse.omega_e;
        let want = constants().gamma_n / constants().gamma_e;
        assert!((ratio / want - 1.0).abs() < 1e-12);
    }
}

#[test]
fn frame_consistency_at_nominal_positions() {
    let ideal = register(0, 0);
    for gate in Gate::ALL {
        let designed = DesignedGate::new(&ideal, gate, GateSpec::with_default_k(gate).k).unwrap();
        let out = gate_outcome(&designed, &ideal).unwrap();
        assert!(out.qubit_error <= 5e-3, "{gate}: {}", out.qubit_error);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn effective_params_are_deterministic(m1 in displacement(), m2 in displacement()) {
        let g = DeviceGeometry::default().with_displacements(m1, m2);
        let a = effective_params(&g, &constants()).unwrap();
        let b = effective_params(&g, &constants()).unwrap();
        prop_assert_eq!(a.b1.to_bits(), b.b1.to_bits());
        prop_assert_eq!(a.b2.to_bits(), b.b2.to_bits());
        prop_assert_eq!(a.exchange_j.to_bits(), b.exchange_j.to_bits());
    }

    #[test]
    fn common_shift_keeps_exchange_and_split(m in -2i32..=2, c in -2i32..=2) {
        let g = DeviceGeometry::default();
        let a = effective_params(&g.with_displacements(m, 0), &constants()).unwrap();
        let b = effective_params(&g.with_displacements(m + c, c), &constants()).unwrap();
        prop_assert_eq!(a.exchange_j, b.exchange_j);
        prop_assert!(((a.b2 - a.b1) - (b.b2 - b.b1)).abs() < 1e-15);
        let shift = f64::from(c) * g.field_step(&constants());
        prop_assert!((b.b1 - a.b1 - shift).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_sum_to_trace(m1 in displacement(), m2 in displacement()) {
        let reg = register(m1, m2);
        let sum: f64 = reg.spectrum.energies().iter().sum();
        let trace = reg.hamiltonian.trace();
        prop_assert!((sum - trace).abs() <= 1e-9 * reg.hamiltonian.norm());
    }

    #[test]
    fn labels_ignore_global_phases(m1 in displacement(), phases in proptest::array::uniform16(0.0f64..std::f64::consts::TAU)) {
        let reg = register(m1, 0);
        let v = reg.spectrum.eigenvectors();
        let rotated = Matrix16::from_fn(|i, j| v[(i, j)] * Complex64::from_polar(1.0, phases[j]));
        // rebuild a Hamiltonian with the same spectrum from the rotated eigenvectors
        let d = Matrix16::from_diagonal(&donorchain::basis::Vector16::from_fn(|i, _| {
            Complex64::new(reg.spectrum.energies()[i], 0.0)
        }));
        let h = HamiltonianMatrix::from_matrix(rotated * d * rotated.adjoint());
        let again = exact_spectrum(&h).unwrap();
        for k in BasisIndex::all() {
            let rel = (again.energy(k) - reg.spectrum.energy(k)).abs() / reg.hamiltonian.norm();
            prop_assert!(rel < 1e-12, "{k}: {rel}");
        }
    }

    #[test]
    fn ensemble_errors_are_probabilities(seed in any::<u64>(), law in 0usize..3, kn in 400u32..20_000) {
        let config = EnsembleConfig {
            chains: 64,
            realizations: 2,
            seed,
            k_n: kn,
            distribution: DisplacementLaw::ALL[law].distribution(),
            ..EnsembleConfig::default()
        };
        let r = ensemble_init(&config, Execution::Parallel).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.mean));
        for m in &r.realization_means {
            prop_assert!((0.0..=1.0).contains(m));
        }
        let s = ensemble_init(&config, Execution::Sequential).unwrap();
        prop_assert_eq!(r, s);
    }
}
