//! Monte-Carlo initialization experiment on an ensemble of independent,
//! randomly displaced chains.
//!
//! Each chain draws its displacements and initial state from its own ChaCha8
//! stream selected by (realization, chain), so results do not depend on the
//! evaluation order or the thread count. All displacement laws consume the
//! same draws, which keeps their comparison free of sampling noise in the
//! initial states.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::SVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::basis::{Matrix16, Vector16};
use crate::dynamics::{relax_electrons_adjoint, DensityState, Matrix4, QuantumState};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::params::{DeviceGeometry, PhysicalConstants, MAX_DISPLACEMENT};
use crate::protocols::{design_initialization, initialization_propagators, DesignedGate, INITIAL_SUBSPACE, TARGET_STATE};
use crate::spectrum::Register;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DisplacementLaw {
    /// Perfect sample.
    #[serde(rename = "none")]
    None,
    /// r_m = (1/2)^(|m|+1).
    A,
    /// r_m = (1/2)^(|m|+2).
    B,
}

impl DisplacementLaw {
    pub const ALL: [DisplacementLaw; 3] = [DisplacementLaw::None, DisplacementLaw::A, DisplacementLaw::B];

    pub fn label(self) -> &'static str {
        match self {
            DisplacementLaw::None => "none",
            DisplacementLaw::A => "A",
            DisplacementLaw::B => "B",
        }
    }

    pub fn distribution(self) -> DisplacementDistribution {
        let table = |shift: i32| std::array::from_fn(|i| 0.5f64.powi(i as i32 + 1 + shift));
        let r = match self {
            DisplacementLaw::None => [0.0; 4],
            DisplacementLaw::A => table(1),
            DisplacementLaw::B => table(2),
        };
        DisplacementDistribution { r }
    }
}

impl fmt::Display for DisplacementLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DisplacementLaw {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        DisplacementLaw::ALL
            .into_iter()
            .find(|l| l.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown law '{s}' (expected A, B or none)")))
    }
}

/// Probabilities r_m of a displacement of magnitude |m| = 1..4; the sign is
/// uniform and the chain stays in place with probability 1 - sum r_m.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplacementDistribution {
    pub r: [f64; MAX_DISPLACEMENT as usize],
}

impl DisplacementDistribution {
    pub fn new(r: [f64; MAX_DISPLACEMENT as usize]) -> Result<Self> {
        let d = Self { r };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidArgument(format!("negative displacement probability in {:?}", self.r)));
        }
        let total: f64 = self.r.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!("displacement probabilities sum to {total} > 1")));
        }
        Ok(())
    }

    pub fn stay_probability(&self) -> f64 {
        1.0 - self.r.iter().sum::<f64>()
    }

    /// Maps a uniform draw `u` in [0, 1) and a sign to a displacement.
    pub fn displacement(&self, u: f64, negative: bool) -> i32 {
        let mut acc = self.stay_probability();
        if u < acc {
            return 0;
        }
        let mut magnitude = MAX_DISPLACEMENT;
        for (i, p) in self.r.iter().enumerate() {
            acc += p;
            if u < acc {
                magnitude = i as i32 + 1;
                break;
            }
        }
        if negative {
            -magnitude
        } else {
            magnitude
        }
    }

    /// Signed displacements with nonzero probability.
    pub fn support(&self) -> Vec<i32> {
        let mut out = vec![0];
        for (i, &p) in self.r.iter().enumerate() {
            if p > 0.0 {
                out.push(-(i as i32 + 1));
                out.push(i as i32 + 1);
            }
        }
        out.sort_unstable();
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub chains: usize,
    pub realizations: usize,
    pub distribution: DisplacementDistribution,
    pub k_e: u32,
    pub k_n: u32,
    pub seed: u64,
    pub geometry: DeviceGeometry,
    pub constants: PhysicalConstants,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            chains: 2000,
            realizations: 8,
            distribution: DisplacementLaw::A.distribution(),
            k_e: 1,
            k_n: 2000,
            seed: 0,
            geometry: DeviceGeometry::default(),
            constants: PhysicalConstants::default(),
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.realizations == 0 {
            return Err(Error::InvalidArgument("chains and realizations must be positive".into()));
        }
        if self.chains > u32::MAX as usize || self.realizations > u32::MAX as usize {
            return Err(Error::InvalidArgument("chains and realizations must fit in 32 bits".into()));
        }
        self.distribution.validate()?;
        self.geometry.ideal().validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub config: EnsembleConfig,
    pub mean: f64,
    /// Standard error of the mean across realizations (zero for one realization).
    pub stderr: f64,
    pub realization_means: Vec<f64>,
}

/// Random draws of one chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainDraw {
    pub uniforms: [f64; 2],
    pub negative: [bool; 2],
    /// Amplitudes on |0110>, |0111>, |1110>, |1111>, normalized.
    pub amplitudes: SVector<Complex64, 4>,
}

impl ChainDraw {
    pub fn sample(seed: u64, realization: usize, chain: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((realization as u64) << 32) | chain as u64);
        let uniforms = [rng.random::<f64>(), rng.random::<f64>()];
        let negative = [rng.random::<bool>(), rng.random::<bool>()];
        let mut amplitudes = SVector::<Complex64, 4>::from_fn(|_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let n = amplitudes.norm();
        amplitudes /= Complex64::new(n, 0.0);
        Self {
            uniforms,
            negative,
            amplitudes,
        }
    }

    pub fn displacements(&self, d: &DisplacementDistribution) -> (i32, i32) {
        (
            d.displacement(self.uniforms[0], self.negative[0]),
            d.displacement(self.uniforms[1], self.negative[1]),
        )
    }

    pub fn initial_state(&self) -> QuantumState {
        let mut v = Vector16::zeros();
        for (k, &i) in INITIAL_SUBSPACE.iter().enumerate() {
            v[i] = self.amplitudes[k];
        }
        QuantumState::normalized(v).expect("nonzero Gaussian draw")
    }
}

/// Survival observable of the whole protocol restricted to the initial
/// subspace: the chain's error is 1 - c^dagger M c.
pub fn survival_observable(pulses: &[DesignedGate; 4], actual: &Register) -> Result<Matrix4> {
    let u = initialization_propagators(pulses, actual)?;
    let mut x = Matrix16::zeros();
    x[(TARGET_STATE, TARGET_STATE)] = Complex64::new(1.0, 0.0);
    let conj = |x: &Matrix16, i: usize| u[i].matrix().adjoint() * x * u[i].matrix();
    x = relax_electrons_adjoint(&x);
    x = conj(&x, 3);
    x = conj(&x, 2);
    x = relax_electrons_adjoint(&x);
    x = conj(&x, 1);
    x = conj(&x, 0);
    Ok(Matrix4::from_fn(|a, b| x[(INITIAL_SUBSPACE[a], INITIAL_SUBSPACE[b])]))
}

/// Survival observables for every displacement pair the distribution can produce.
pub struct ObservableTable {
    table: BTreeMap<(i32, i32), Matrix4>,
}

impl ObservableTable {
    pub fn build(config: &EnsembleConfig, execution: Execution) -> Result<Self> {
        let ideal = Register::from_geometry(&config.geometry.ideal(), &config.constants)?;
        let pulses = design_initialization(&ideal, config.k_e, config.k_n)?;
        let support = config.distribution.support();
        let pairs: Vec<(i32, i32)> = support
            .iter()
            .flat_map(|&a| support.iter().map(move |&b| (a, b)))
            .collect();
        let built = execution.map(pairs.len(), |i| {
            let (m1, m2) = pairs[i];
            let g = config.geometry.ideal().with_displacements(m1, m2);
            Register::from_geometry(&g, &config.constants).and_then(|r| survival_observable(&pulses, &r))
        });
        let mut table = BTreeMap::new();
        for (pair, m) in pairs.into_iter().zip(built) {
            table.insert(pair, m?);
        }
        Ok(Self { table })
    }

    pub fn chain_error(&self, draw: &ChainDraw, d: &DisplacementDistribution) -> f64 {
        let m = &self.table[&draw.displacements(d)];
        let c = &draw.amplitudes;
        let survival = (c.adjoint() * m * c)[(0, 0)].re;
        (1.0 - survival).clamp(0.0, 1.0)
    }
}

pub fn ensemble_init(config: &EnsembleConfig, execution: Execution) -> Result<EnsembleResult> {
    config.validate()?;
    let table = ObservableTable::build(config, execution)?;
    let n = config.chains;
    let errors = execution.map(config.realizations * n, |i| {
        let draw = ChainDraw::sample(config.seed, i / n, i % n);
        table.chain_error(&draw, &config.distribution)
    });
    let realization_means: Vec<f64> = errors
        .chunks(n)
        .map(|c| c.iter().sum::<f64>() / n as f64)
        .collect();
    let r = realization_means.len() as f64;
    let mean = realization_means.iter().sum::<f64>() / r;
    let stderr = if realization_means.len() > 1 {
        let var = realization_means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
        (var / r).sqrt()
    } else {
        0.0
    };
    Ok(EnsembleResult {
        config: *config,
        mean,
        stderr,
        realization_means,
    })
}

/// One ensemble run per (K_n, law), ordered by K_n then law.
pub fn ensemble_sweep(
    base: &EnsembleConfig,
    k_n_values: &[u32],
    laws: &[DisplacementLaw],
    execution: Execution,
) -> Result<Vec<(DisplacementLaw, EnsembleResult)>> {
    let mut out = Vec::with_capacity(k_n_values.len() * laws.len());
    for &k_n in k_n_values {
        for &law in laws {
            let config = EnsembleConfig {
                k_n,
                distribution: law.distribution(),
                ..*base
            };
            out.push((law, ensemble_init(&config, execution)?));
        }
    }
    Ok(out)
}

/// Density matrix of a chain's initial state, for running it in isolation.
pub fn initial_density(draw: &ChainDraw) -> DensityState {
    draw.initial_state().to_density()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::run_initialization;

    #[test]
    fn law_tables() {
        let a = DisplacementLaw::A.distribution();
        assert_eq!(a.r, [0.25, 0.125, 0.0625, 0.03125]);
        assert!((a.stay_probability() - 0.53125).abs() < 1e-15);
        assert_eq!(DisplacementLaw::B.distribution().r[0], 0.125);
        assert_eq!(DisplacementLaw::None.distribution().support(), vec![0]);
        assert_eq!(a.support(), vec![-4, -3, -2, -1, 0, 1, 2, 3, 4]);
        assert!(DisplacementDistribution::new([0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(DisplacementDistribution::new([-0.1, 0.0, 0.0, 0.0]).is_err());
        assert_eq!("b".parse::<DisplacementLaw>().unwrap(), DisplacementLaw::B);
    }

    #[test]
    fn inverse_cdf() {
        let a = DisplacementLaw::A.distribution();
        assert_eq!(a.displacement(0.0, true), 0);
        assert_eq!(a.displacement(0.531, false), 0);
        assert_eq!(a.displacement(0.532, true), -1);
        assert_eq!(a.displacement(0.78, false), 1);
        assert_eq!(a.displacement(0.79, false), 2);
        assert_eq!(a.displacement(0.999_999, false), 4);
        // empirical frequencies
        let mut counts = [0usize; 5];
        for chain in 0..20_000 {
            let d = ChainDraw::sample(3, 0, chain);
            counts[d.displacements(&a).0.unsigned_abs() as usize] += 1;
        }
        let f0 = counts[0] as f64 / 20_000.0;
        assert!((f0 - 0.53125).abs() < 0.015, "{f0}");
    }

    #[test]
    fn draws_are_normalized_and_reproducible() {
        let a = ChainDraw::sample(7, 2, 11);
        let b = ChainDraw::sample(7, 2, 11);
        assert_eq!(a, b);
        assert!((a.amplitudes.norm() - 1.0).abs() < 1e-14);
        assert_ne!(a, ChainDraw::sample(7, 2, 12));
        assert_ne!(a, ChainDraw::sample(7, 3, 11));
    }

    #[test]
    fn chain_matches_isolated_protocol_run() {
        let config = EnsembleConfig {
            chains: 4,
            realizations: 1,
            seed: 5,
            ..EnsembleConfig::default()
        };
        let table = ObservableTable::build(&config, Execution::Sequential).unwrap();
        let mut direct = 0.0;
        for chain in 0..40 {
            let draw = ChainDraw::sample(config.seed, 0, chain);
            let (m1, m2) = draw.displacements(&config.distribution);
            let g = config.geometry.with_displacements(m1, m2);
            let run = run_initialization(&g, &config.constants, config.k_e, config.k_n, &initial_density(&draw)).unwrap();
            let fast = table.chain_error(&draw, &config.distribution);
            assert!((run.error - fast).abs() < 1e-10, "chain {chain}");
            if chain < 4 {
                direct += run.error / 4.0;
            }
        }
        let result = ensemble_init(&config, Execution::Sequential).unwrap();
        assert!((result.mean - direct).abs() < 1e-10);
        assert_eq!(result.stderr, 0.0);
    }

    #[test]
    fn thread_independent() {
        let config = EnsembleConfig {
            chains: 300,
            realizations: 3,
            seed: 11,
            ..EnsembleConfig::default()
        };
        let seq = ensemble_init(&config, Execution::Sequential).unwrap();
        let par = ensemble_init(&config, Execution::Parallel).unwrap();
        assert_eq!(seq, par);
        assert!((0.0..=1.0).contains(&seq.mean));
    }

    #[test]
    fn rejects_bad_config() {
        let mut config = EnsembleConfig {
            chains: 0,
            ..EnsembleConfig::default()
        };
        assert!(ensemble_init(&config, Execution::Sequential).is_err());
        config.chains = 1;
        config.distribution.r = [0.9, 0.9, 0.0, 0.0];
        assert!(ensemble_init(&config, Execution::Sequential).is_err());
    }
}
