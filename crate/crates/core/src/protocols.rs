//! Gate sequences on possibly displaced chains: the four-pulse nuclear
//! initialization, single-gate displacement sweeps and the electron-electron
//! CNOT. Pulses are always designed for the ideal geometry.

use serde::{Deserialize, Serialize};

use crate::basis::BasisIndex;
use crate::dynamics::{relax_electrons, DensityState, Propagator, QuantumState};
use crate::error::{Error, Result};
use crate::params::{DeviceGeometry, PhysicalConstants, MAX_DISPLACEMENT};
use crate::pulse::{design_gate, estimate_gate_error, Gate, GateSpec, PulseSpec};
use crate::spectrum::Register;

/// Basis states the initialization acts on: both electrons in |1>, nuclei arbitrary.
pub const INITIAL_SUBSPACE: [usize; 4] = [6, 7, 14, 15];

/// Fully polarized target |1111>.
pub const TARGET_STATE: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignedGate {
    pub spec: GateSpec,
    pub pulse: PulseSpec,
}

impl DesignedGate {
    pub fn new(ideal: &Register, gate: Gate, k: u32) -> Result<Self> {
        let spec = GateSpec::new(gate, k)?;
        Ok(Self {
            pulse: design_gate(ideal, &spec)?,
            spec,
        })
    }

    pub fn propagator(&self, actual: &Register) -> Result<Propagator> {
        Propagator::for_pulse(&actual.hamiltonian, &self.pulse)
    }
}

/// The four initialization pulses (a), (b), (c), (d) designed for `ideal`.
pub fn design_initialization(ideal: &Register, k_e: u32, k_n: u32) -> Result<[DesignedGate; 4]> {
    let k = |g: Gate| match g.species() {
        crate::pulse::Species::Electron => k_e,
        crate::pulse::Species::Nuclear => k_n,
    };
    let mut out = Vec::with_capacity(4);
    for gate in Gate::INITIALIZATION {
        out.push(DesignedGate::new(ideal, gate, k(gate))?);
    }
    Ok(out.try_into().expect("four gates"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    Pulse(Gate),
    Relax,
}

/// (a), (b), relax, (c), (d), relax.
pub const INITIALIZATION_SEQUENCE: [Step; 6] = [
    Step::Pulse(Gate::A),
    Step::Pulse(Gate::B),
    Step::Relax,
    Step::Pulse(Gate::C),
    Step::Pulse(Gate::D),
    Step::Relax,
];

#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub geometry: DeviceGeometry,
    pub pulses: [DesignedGate; 4],
    /// State after each entry of [`INITIALIZATION_SEQUENCE`].
    pub states: Vec<DensityState>,
    /// |<q|U|p>|^2 of each pulse's resonant transition in the actual chain.
    pub fidelities: [f64; 4],
    /// 1 - population of |1111>.
    pub error: f64,
}

/// Propagators of the four pulses in one actual chain.
pub fn initialization_propagators(pulses: &[DesignedGate; 4], actual: &Register) -> Result<[Propagator; 4]> {
    let mut out = Vec::with_capacity(4);
    for g in pulses {
        out.push(g.propagator(actual)?);
    }
    Ok(out.try_into().expect("four propagators"))
}

pub fn run_initialization(
    geometry: &DeviceGeometry,
    constants: &PhysicalConstants,
    k_e: u32,
    k_n: u32,
    initial: &DensityState,
) -> Result<ProtocolRun> {
    let ideal = Register::from_geometry(&geometry.ideal(), constants)?;
    let actual = Register::from_geometry(geometry, constants)?;
    let pulses = design_initialization(&ideal, k_e, k_n)?;
    let props = initialization_propagators(&pulses, &actual)?;
    let mut fidelities = [0.0; 4];
    for (i, (g, u)) in pulses.iter().zip(&props).enumerate() {
        let (p, q) = g.spec.resonant_pair;
        fidelities[i] = u.transition_probability(p, q);
    }
    let mut rho = initial.clone();
    let mut states = Vec::with_capacity(INITIALIZATION_SEQUENCE.len());
    for step in INITIALIZATION_SEQUENCE {
        rho = match step {
            Step::Pulse(gate) => {
                let i = Gate::INITIALIZATION
                    .iter()
                    .position(|&g| g == gate)
                    .expect("initialization gate");
                props[i].apply(&rho)
            }
            Step::Relax => relax_electrons(&rho),
        };
        states.push(rho.clone());
    }
    let target = BasisIndex::new(TARGET_STATE)?;
    Ok(ProtocolRun {
        geometry: *geometry,
        pulses,
        states,
        fidelities,
        error: (1.0 - rho.population(target)).clamp(0.0, 1.0),
    })
}

/// Which donor a sweep displaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Atom {
    First,
    Second,
}

impl Atom {
    pub fn geometry(self, base: &DeviceGeometry, m: i32) -> DeviceGeometry {
        match self {
            Atom::First => base.with_displacements(m, 0),
            Atom::Second => base.with_displacements(0, m),
        }
    }
}

/// Outcome of one pulse applied to its resonant initial state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOutcome {
    /// 1 - population of the target basis state q.
    pub state_error: f64,
    /// 1 - probability that the target spin ends in q's value.
    pub qubit_error: f64,
}

pub fn gate_outcome(gate: &DesignedGate, actual: &Register) -> Result<GateOutcome> {
    let (p, q) = gate.spec.resonant_pair;
    let out = gate.propagator(actual)?.apply(&QuantumState::basis(p));
    let spin = gate.spec.target();
    let want = q.bit(spin);
    let agree: f64 = BasisIndex::all()
        .filter(|k| k.bit(spin) == want)
        .map(|k| out.population(k))
        .sum();
    Ok(GateOutcome {
        state_error: (1.0 - out.population(q)).clamp(0.0, 1.0),
        qubit_error: (1.0 - agree).clamp(0.0, 1.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gate: Gate,
    pub atom: Atom,
    pub m: i32,
    pub k: u32,
    pub state_error: f64,
    pub qubit_error: f64,
    /// 1 - R + epsilon^2 + mu^2.
    pub estimate: f64,
}

/// Single-gate error against the displacement `m` of one atom for each K.
/// Rows are ordered by K, then m.
pub fn sweep_gate_error(
    gate: Gate,
    atom: Atom,
    m_values: &[i32],
    k_values: &[u32],
    base: &DeviceGeometry,
    constants: &PhysicalConstants,
) -> Result<Vec<SweepRow>> {
    for &m in m_values {
        if m.abs() > MAX_DISPLACEMENT {
            return Err(Error::InvalidArgument(format!("displacement {m} outside -4..4")));
        }
    }
    let ideal = Register::from_geometry(&base.ideal(), constants)?;
    let actual: Vec<Register> = m_values
        .iter()
        .map(|&m| Register::from_geometry(&atom.geometry(&base.ideal(), m), constants))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(m_values.len() * k_values.len());
    for &k in k_values {
        let designed = DesignedGate::new(&ideal, gate, k)?;
        for (&m, reg) in m_values.iter().zip(&actual) {
            let outcome = gate_outcome(&designed, reg)?;
            let estimate = estimate_gate_error(&ideal, reg, &designed.spec)?.total;
            rows.push(SweepRow {
                gate,
                atom,
                m,
                k,
                state_error: outcome.state_error,
                qubit_error: outcome.qubit_error,
                estimate,
            });
        }
    }
    Ok(rows)
}

/// Error of a gate acting on atom 1 while atom 2 is displaced.
pub fn sweep_neighbor_displacement(
    gate: Gate,
    m_values: &[i32],
    k: u32,
    base: &DeviceGeometry,
    constants: &PhysicalConstants,
) -> Result<Vec<SweepRow>> {
    sweep_gate_error(gate, Atom::Second, m_values, &[k], base, constants)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EeCnotRun {
    pub geometry: DeviceGeometry,
    pub gate: DesignedGate,
    pub outcome: GateOutcome,
}

impl EeCnotRun {
    pub fn error(&self) -> f64 {
        self.outcome.state_error
    }
}

/// Electron-electron CNOT designed for the ideal chain, applied to `geometry`.
pub fn run_ee_cnot(geometry: &DeviceGeometry, constants: &PhysicalConstants, k: u32) -> Result<EeCnotRun> {
    let ideal = Register::from_geometry(&geometry.ideal(), constants)?;
    let actual = Register::from_geometry(geometry, constants)?;
    let gate = DesignedGate::new(&ideal, Gate::Ee, k)?;
    Ok(EeCnotRun {
        geometry: *geometry,
        gate,
        outcome: gate_outcome(&gate, &actual)?,
    })
}

pub fn all_displacements() -> Vec<i32> {
    (-MAX_DISPLACEMENT..=MAX_DISPLACEMENT).collect()
}
