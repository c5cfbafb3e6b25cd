//! Command-line driver behind the `donorchain` binary.
//!
//! Settings resolve as built-in defaults, then a TOML file given by
//! `--config`, then command-line flags. Tables go out as CSV, reports as a
//! single JSON document; both echo the resolved settings.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::basis::BasisIndex;
use crate::ensemble::{ensemble_sweep, DisplacementLaw, EnsembleConfig};
use crate::error::Error;
use crate::exchange::{self, ExchangeModel};
use crate::exec::Execution;
use crate::params::{effective_params, to_hz, DeviceGeometry, PhysicalConstants};
use crate::protocols::{all_displacements, run_ee_cnot, sweep_gate_error, Atom, DesignedGate};
use crate::pulse::{interior_qubit_estimate, kn_window, two_pi_k_omega, Gate, Species};
use crate::spectrum::{perturbative_spectrum, small_params, Register, SWAP_GUARD};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DONORCHAIN_OUT_DIR";

/// Deviation between perturbative and exact energies above which a row is flagged, Hz.
pub const DEVIATION_FLAG_HZ: f64 = 100.0;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDITY: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "donorchain", version, about = "Pulse design and displacement errors for a two-donor spin register")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// TOML file with settings; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Nominal separation in lattice sites.
    #[arg(long = "N0", global = true)]
    pub n0: Option<u32>,
    /// Field gradient along the chain, T/m.
    #[arg(long = "gradient-T-per-m", global = true)]
    pub gradient: Option<f64>,
    /// Mean permanent field, T.
    #[arg(long = "b-tesla", global = true)]
    pub b_tesla: Option<f64>,
    /// Displacement of atom 1 in lattice sites.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub m1: Option<i32>,
    /// Displacement of atom 2 in lattice sites.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub m2: Option<i32>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (default: stdout, or $DONORCHAIN_OUT_DIR/<command>.<ext>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Exchange constant against separation.
    Jtable {
        n_min: u32,
        n_max: u32,
    },
    /// Exact and perturbative energies of the 16 levels.
    Spectrum,
    /// Pulse parameters of one gate.
    Design {
        #[arg(long)]
        gate: Option<String>,
        #[arg(long = "K")]
        k: Option<u32>,
    },
    /// Single-gate error against displacement for several K.
    Sweep {
        #[arg(long)]
        gate: Option<String>,
        #[arg(long = "K", value_delimiter = ',')]
        k: Vec<u32>,
        /// Which atom to displace.
        #[arg(long, value_enum)]
        atom: Option<AtomArg>,
    },
    /// Initialization protocol on an ensemble of displaced chains.
    Ensemble {
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        realizations: Option<usize>,
        /// Displacement laws, any of A, B, none.
        #[arg(long, value_delimiter = ',')]
        law: Vec<String>,
        #[arg(long = "Kn", value_delimiter = ',')]
        kn: Vec<u32>,
        /// K for the electron pulses.
        #[arg(long = "K")]
        k: Option<u32>,
    },
    /// Electron-electron CNOT error against displacement of atom 1.
    EeCnot {
        #[arg(long = "K")]
        k: Option<u32>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Jtable { .. } => "jtable",
            Command::Spectrum => "spectrum",
            Command::Design { .. } => "design",
            Command::Sweep { .. } => "sweep",
            Command::Ensemble { .. } => "ensemble",
            Command::EeCnot { .. } => "ee-cnot",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomArg {
    First,
    Second,
}

/// Settings accepted from a TOML file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n0: Option<u32>,
    pub gradient_t_per_m: Option<f64>,
    pub b_tesla: Option<f64>,
    pub m1: Option<i32>,
    pub m2: Option<i32>,
    pub gate: Option<String>,
    pub k: Option<Vec<u32>>,
    pub kn: Option<Vec<u32>>,
    pub chains: Option<usize>,
    pub realizations: Option<usize>,
    pub law: Option<Vec<String>>,
    pub atom: Option<AtomArg>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Fully resolved settings of one invocation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub geometry: DeviceGeometry,
    pub gate: Option<Gate>,
    pub k: Vec<u32>,
    pub kn: Vec<u32>,
    pub chains: usize,
    pub realizations: usize,
    pub laws: Vec<DisplacementLaw>,
    pub atom: Atom,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Model(Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Model(e) if e.is_validity() => EXIT_VALIDITY,
            CliError::Model(Error::InvalidArgument(_) | Error::Geometry(_)) => EXIT_USAGE,
            CliError::Model(_) | CliError::Io(_) => EXIT_INTERNAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "usage error: {s}"),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Io(s) => write!(f, "i/o error: {s}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Model(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_gate(s: &str) -> CliResult<Gate> {
    s.parse().map_err(|e: Error| CliError::Usage(e.to_string()))
}

fn parse_laws(v: &[String]) -> CliResult<Vec<DisplacementLaw>> {
    v.iter()
        .map(|s| s.parse().map_err(|e: Error| CliError::Usage(e.to_string())))
        .collect()
}

pub fn load_file_config(path: &Path) -> CliResult<FileConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Applies defaults, then the file, then the flags.
pub fn resolve(cli: &Cli, file: &FileConfig) -> CliResult<RunConfig> {
    let c = &cli.common;
    let constants = PhysicalConstants::default();
    let mut geometry = DeviceGeometry::default();
    let n0 = c.n0.or(file.n0);
    let gradient = c.gradient.or(file.gradient_t_per_m);
    if let Some(n0) = n0 {
        geometry.n0 = n0;
    }
    if let Some(g) = gradient {
        geometry.gradient = g;
    }
    if n0.is_some() || gradient.is_some() {
        // the nominal split follows the gradient across the nominal spacing
        geometry.half_split = 0.5 * geometry.gradient * f64::from(geometry.n0) * constants.lattice_step;
    }
    if let Some(b) = c.b_tesla.or(file.b_tesla) {
        geometry.mean_field = b;
    }
    geometry.m1 = c.m1.or(file.m1).unwrap_or(0);
    geometry.m2 = c.m2.or(file.m2).unwrap_or(0);

    let file_gate = file.gate.as_deref().map(parse_gate).transpose()?;
    let (cmd_gate, cmd_k): (Option<Gate>, Vec<u32>) = match &cli.command {
        Command::Design { gate, k } => (gate.as_deref().map(parse_gate).transpose()?, k.iter().copied().collect()),
        Command::Sweep { gate, k, .. } => (gate.as_deref().map(parse_gate).transpose()?, k.clone()),
        Command::Ensemble { k, .. } | Command::EeCnot { k } => (None, k.iter().copied().collect()),
        _ => (None, Vec::new()),
    };
    let gate = cmd_gate.or(file_gate);
    let pick = |flag: Vec<u32>, from_file: &Option<Vec<u32>>| {
        if !flag.is_empty() {
            Some(flag)
        } else {
            from_file.clone()
        }
    };
    let k_default = |g: Option<Gate>| -> Vec<u32> {
        match (&cli.command, g.map(Gate::species)) {
            (Command::Sweep { .. }, Some(Species::Nuclear)) => vec![700, 2000, 5000, 10000],
            (Command::Sweep { .. }, _) => vec![1, 2, 3, 4],
            (_, Some(s)) => vec![s.default_k()],
            (_, None) => vec![1],
        }
    };
    let k = pick(cmd_k, &file.k).unwrap_or_else(|| k_default(gate));
    let (chains_flag, realizations_flag, law_flag, kn_flag) = match &cli.command {
        Command::Ensemble {
            chains,
            realizations,
            law,
            kn,
            ..
        } => (*chains, *realizations, law.clone(), kn.clone()),
        _ => (None, None, Vec::new(), Vec::new()),
    };
    let kn = pick(kn_flag, &file.kn).unwrap_or_else(|| vec![700, 2000, 5000, 10000]);
    let laws = if !law_flag.is_empty() {
        parse_laws(&law_flag)?
    } else if let Some(l) = &file.law {
        parse_laws(l)?
    } else {
        DisplacementLaw::ALL.to_vec()
    };
    let atom_flag = match &cli.command {
        Command::Sweep { atom, .. } => *atom,
        _ => None,
    };
    let atom = match atom_flag.or(file.atom).unwrap_or(AtomArg::First) {
        AtomArg::First => Atom::First,
        AtomArg::Second => Atom::Second,
    };
    let format = c.format.or(file.format).unwrap_or(match cli.command {
        Command::Jtable { .. } | Command::Sweep { .. } | Command::Ensemble { .. } | Command::EeCnot { .. } => Format::Csv,
        Command::Spectrum | Command::Design { .. } => Format::Json,
    });
    let run = RunConfig {
        command: cli.command.name().to_string(),
        geometry,
        gate,
        k,
        kn,
        chains: chains_flag.or(file.chains).unwrap_or(2000),
        realizations: realizations_flag.or(file.realizations).unwrap_or(8),
        laws,
        atom,
        seed: c.seed.or(file.seed).unwrap_or(0),
        threads: c.threads.or(file.threads),
        out: c.out.clone().or_else(|| file.out.clone()),
        format,
    };
    if run.k.contains(&0) || run.kn.contains(&0) {
        return Err(CliError::Usage("K values must be at least 1".into()));
    }
    if run.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    Ok(run)
}

fn mhz(w: f64) -> f64 {
    to_hz(w) / 1e6
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    version: &'static str,
    config: &'a RunConfig,
    result: T,
}

fn json_bytes<T: Serialize>(run: &RunConfig, result: T) -> CliResult<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(&Report {
        version: env!("CARGO_PKG_VERSION"),
        config: run,
        result,
    })?;
    v.push(b'\n');
    Ok(v)
}

/// Output of one command: the bytes to write and whether a validity guard fired.
pub struct Output {
    pub bytes: Vec<u8>,
    pub guard_fired: Option<String>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct JRow {
    #[serde(rename = "N")]
    pub n: u32,
    pub a_nm: f64,
    #[serde(rename = "J_MHz")]
    pub j_mhz: f64,
}

pub fn jtable_rows(n_min: u32, n_max: u32, constants: &PhysicalConstants) -> CliResult<Vec<JRow>> {
    if n_min == 0 || n_min > n_max {
        return Err(CliError::Usage(format!("need 1 <= N_min <= N_max, got {n_min}..{n_max}")));
    }
    Ok((n_min..=n_max)
        .map(|n| JRow {
            n,
            a_nm: f64::from(n) * constants.lattice_step * 1e9,
            j_mhz: mhz(exchange::j_for_sites(n, constants)),
        })
        .collect())
}

#[derive(Serialize)]
struct SpectrumRow {
    index: usize,
    state: String,
    #[serde(rename = "E_exact_MHz")]
    exact_mhz: f64,
    #[serde(rename = "E_perturbative_MHz")]
    perturbative_mhz: f64,
    deviation_hz: f64,
    flagged: bool,
    #[serde(rename = "J_MHz")]
    j_mhz: f64,
}

#[derive(Serialize)]
struct SpectrumReport {
    #[serde(rename = "B1_T")]
    b1: f64,
    #[serde(rename = "B2_T")]
    b2: f64,
    #[serde(rename = "J_MHz")]
    j_mhz: f64,
    epsilon: f64,
    epsilon_prime: f64,
    xi: f64,
    swap_margin_mhz: f64,
    swap_guard_ok: bool,
    max_deviation_hz: f64,
    levels: Vec<SpectrumRow>,
}

fn cmd_spectrum(run: &RunConfig, constants: &PhysicalConstants) -> CliResult<Output> {
    let params = effective_params(&run.geometry, constants)?;
    let reg = Register::new(params)?;
    let pert = perturbative_spectrum(&params);
    let small = small_params(&params)?;
    let j = mhz(params.exchange_j);
    let levels: Vec<SpectrumRow> = BasisIndex::all()
        .map(|b| {
            let exact = reg.spectrum.energy(b);
            let p = pert.energy(b);
            let dev = to_hz(p - exact).abs();
            SpectrumRow {
                index: b.index(),
                state: b.to_string(),
                exact_mhz: mhz(exact),
                perturbative_mhz: mhz(p),
                deviation_hz: dev,
                flagged: dev > DEVIATION_FLAG_HZ,
                j_mhz: j,
            }
        })
        .collect();
    let guard = pert.check_swap_guard(SWAP_GUARD);
    let guard_fired = guard.as_ref().err().map(|e| e.to_string());
    let report = SpectrumReport {
        b1: params.b1,
        b2: params.b2,
        j_mhz: j,
        epsilon: small.epsilon,
        epsilon_prime: small.epsilon_prime,
        xi: small.xi,
        swap_margin_mhz: mhz(pert.swap_margin),
        swap_guard_ok: guard.is_ok(),
        max_deviation_hz: levels.iter().map(|r| r.deviation_hz).fold(0.0, f64::max),
        levels,
    };
    let bytes = match run.format {
        Format::Csv => csv_bytes(&report.levels)?,
        Format::Json => json_bytes(run, &report)?,
    };
    Ok(Output { bytes, guard_fired })
}

#[derive(Serialize)]
struct DesignRow {
    gate: Gate,
    name: &'static str,
    species: Species,
    #[serde(rename = "K")]
    k: u32,
    #[serde(rename = "nu_MHz")]
    nu_mhz: f64,
    #[serde(rename = "detuning_MHz")]
    detuning_mhz: f64,
    #[serde(rename = "rabi_MHz")]
    rabi_mhz: f64,
    #[serde(rename = "omega_e_MHz")]
    omega_e_mhz: f64,
    #[serde(rename = "omega_n_MHz")]
    omega_n_mhz: f64,
    #[serde(rename = "displacement_detuning_MHz")]
    displacement_detuning_mhz: f64,
    #[serde(rename = "B1_T")]
    b1: f64,
    tau_s: f64,
}

fn cmd_design(run: &RunConfig, constants: &PhysicalConstants) -> CliResult<Output> {
    let gate = run.gate.unwrap_or(Gate::A);
    let ideal = Register::from_geometry(&run.geometry.ideal(), constants)?;
    let actual = Register::from_geometry(&run.geometry, constants)?;
    let rows: Vec<DesignRow> = run
        .k
        .iter()
        .map(|&k| {
            let d = DesignedGate::new(&ideal, gate, k)?;
            let p = d.pulse;
            Ok(DesignRow {
                gate,
                name: gate.name(),
                species: gate.species(),
                k,
                nu_mhz: mhz(p.nu),
                detuning_mhz: mhz(p.detuning),
                rabi_mhz: mhz(p.rabi),
                omega_e_mhz: mhz(p.omega_e),
                omega_n_mhz: mhz(p.omega_n),
                displacement_detuning_mhz: mhz(crate::pulse::detuning_in(&actual.spectrum, &d.spec, &p)),
                b1: p.b1_amplitude,
                tau_s: p.tau,
            })
        })
        .collect::<crate::Result<_>>()?;
    let bytes = match run.format {
        Format::Csv => csv_bytes(&rows)?,
        Format::Json => {
            let one_site = Register::from_geometry(&run.geometry.ideal().with_displacements(-1, 0), constants)?;
            let window = kn_window(&ideal.spectrum, &one_site.spectrum)?;
            #[derive(Serialize)]
            struct DesignReport {
                pulses: Vec<DesignRow>,
                kn_window: crate::pulse::KnWindow,
            }
            json_bytes(run, DesignReport { pulses: rows, kn_window: window })?
        }
    };
    Ok(Output { bytes, guard_fired: None })
}

#[derive(Serialize)]
struct SweepCsvRow {
    gate: Gate,
    atom: Atom,
    m: i32,
    #[serde(rename = "K")]
    k: u32,
    state_error: f64,
    qubit_error: f64,
    estimate: f64,
}

fn cmd_sweep(run: &RunConfig, constants: &PhysicalConstants) -> CliResult<Output> {
    let gate = run.gate.unwrap_or(Gate::A);
    let base = run.geometry.ideal();
    let rows: Vec<SweepCsvRow> = sweep_gate_error(gate, run.atom, &all_displacements(), &run.k, &base, constants)?
        .into_iter()
        .map(|r| SweepCsvRow {
            gate: r.gate,
            atom: r.atom,
            m: r.m,
            k: r.k,
            state_error: r.state_error,
            qubit_error: r.qubit_error,
            estimate: r.estimate,
        })
        .collect();
    let bytes = match run.format {
        Format::Csv => csv_bytes(&rows)?,
        Format::Json => json_bytes(run, &rows)?,
    };
    Ok(Output { bytes, guard_fired: None })
}

#[derive(Serialize)]
struct EnsembleRow {
    #[serde(rename = "K_n")]
    k_n: u32,
    law: DisplacementLaw,
    #[serde(rename = "Omega2_kHz")]
    omega2_khz: f64,
    #[serde(rename = "mean_P")]
    mean_p: f64,
    stderr: f64,
    chains: usize,
    realizations: usize,
    seed: u64,
}

#[derive(Serialize)]
struct EnsembleReportRow {
    #[serde(flatten)]
    row: EnsembleRow,
    realization_means: Vec<f64>,
}

fn cmd_ensemble(run: &RunConfig, constants: &PhysicalConstants) -> CliResult<Output> {
    let base = EnsembleConfig {
        chains: run.chains,
        realizations: run.realizations,
        k_e: run.k.first().copied().unwrap_or(1),
        seed: run.seed,
        geometry: run.geometry.ideal(),
        constants: *constants,
        ..EnsembleConfig::default()
    };
    let ideal = Register::from_geometry(&base.geometry, constants)?;
    let delta = {
        let (pp, qq) = Gate::B.suppressed_pair();
        let (p, q) = Gate::B.resonant_pair();
        ideal.spectrum.transition_frequency(pp, qq) - ideal.spectrum.transition_frequency(p, q)
    };
    let results = ensemble_sweep(&base, &run.kn, &run.laws, Execution::Parallel)?;
    let rows = results
        .into_iter()
        .map(|(law, r)| {
            Ok(EnsembleReportRow {
                row: EnsembleRow {
                    k_n: r.config.k_n,
                    law,
                    omega2_khz: to_hz(two_pi_k_omega(delta, r.config.k_n)?) / 1e3,
                    mean_p: r.mean,
                    stderr: r.stderr,
                    chains: r.config.chains,
                    realizations: r.config.realizations,
                    seed: r.config.seed,
                },
                realization_means: r.realization_means,
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let bytes = match run.format {
        Format::Csv => csv_bytes(&rows.iter().map(|r| &r.row).collect::<Vec<_>>())?,
        Format::Json => json_bytes(run, &rows)?,
    };
    Ok(Output { bytes, guard_fired: None })
}

#[derive(Serialize)]
struct EeRow {
    m: i32,
    #[serde(rename = "K")]
    k: u32,
    #[serde(rename = "P_e")]
    p_e: f64,
    qubit_error: f64,
}

fn cmd_ee_cnot(run: &RunConfig, constants: &PhysicalConstants) -> CliResult<Output> {
    let k = run.k.first().copied().unwrap_or(1);
    let base = run.geometry.ideal();
    let rows: Vec<EeRow> = all_displacements()
        .into_iter()
        .map(|m| {
            let r = run_ee_cnot(&base.with_displacements(m, 0), constants, k)?;
            Ok(EeRow {
                m,
                k,
                p_e: r.outcome.state_error,
                qubit_error: r.outcome.qubit_error,
            })
        })
        .collect::<crate::Result<_>>()?;
    let bytes = match run.format {
        Format::Csv => csv_bytes(&rows)?,
        Format::Json => {
            let model = ExchangeModel::new(*constants, base.n0);
            let j0 = model.j0();
            let est = interior_qubit_estimate(-1, &model)?;
            #[derive(Serialize)]
            struct EeReport {
                rows: Vec<EeRow>,
                #[serde(rename = "J0_MHz")]
                j0_mhz: f64,
                interior_detuning_over_j0: f64,
                interior_rabi_over_j0: f64,
                interior_rabi_shift_over_rabi_m_minus_1: f64,
            }
            json_bytes(
                run,
                EeReport {
                    rows,
                    j0_mhz: mhz(j0),
                    interior_detuning_over_j0: est.detuning / j0,
                    interior_rabi_over_j0: est.rabi / j0,
                    interior_rabi_shift_over_rabi_m_minus_1: est.rabi_shift / est.rabi,
                },
            )?
        }
    };
    Ok(Output { bytes, guard_fired: None })
}

/// Runs one resolved command and returns its output.
pub fn execute(cli: &Cli, run: &RunConfig) -> CliResult<Output> {
    let constants = PhysicalConstants::default();
    match &cli.command {
        Command::Jtable { n_min, n_max } => {
            let rows = jtable_rows(*n_min, *n_max, &constants)?;
            let bytes = match run.format {
                Format::Csv => csv_bytes(&rows)?,
                Format::Json => json_bytes(run, &rows)?,
            };
            Ok(Output { bytes, guard_fired: None })
        }
        Command::Spectrum => cmd_spectrum(run, &constants),
        Command::Design { .. } => cmd_design(run, &constants),
        Command::Sweep { .. } => cmd_sweep(run, &constants),
        Command::Ensemble { .. } => cmd_ensemble(run, &constants),
        Command::EeCnot { .. } => cmd_ee_cnot(run, &constants),
    }
}

fn output_path(run: &RunConfig) -> Option<PathBuf> {
    run.out.clone().or_else(|| {
        std::env::var_os(OUT_DIR_ENV).map(|dir| PathBuf::from(dir).join(format!("{}.{}", run.command, run.format.extension())))
    })
}

fn run_with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Io(e.to_string()))?;
        return Ok(pool.install(f));
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(f())
}

fn run_cli(cli: &Cli) -> CliResult<Option<String>> {
    let file = match &cli.common.config {
        Some(p) => load_file_config(p)?,
        None => FileConfig::default(),
    };
    let run = resolve(cli, &file)?;
    eprintln!("# resolved config: {}", serde_json::to_string(&run)?);
    let out = run_with_pool(run.threads, || execute(cli, &run))??;
    match output_path(&run) {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(&path, &out.bytes)?;
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(&out.bytes)?;
            stdout.flush()?;
        }
    }
    Ok(out.guard_fired)
}

/// Parses the process arguments, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run_cli(&cli) {
        Ok(None) => EXIT_OK,
        Ok(Some(guard)) => {
            eprintln!("validity guard: {guard}");
            EXIT_VALIDITY
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("donorchain").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let cli = parse(&["sweep", "--gate", "b", "--m1", "-1"]);
        let run = resolve(&cli, &FileConfig::default()).unwrap();
        assert_eq!(run.gate, Some(Gate::B));
        assert_eq!(run.k, vec![700, 2000, 5000, 10000]);
        assert_eq!(run.geometry.m1, -1);
        assert_eq!(run.geometry, DeviceGeometry::default().with_displacements(-1, 0));

        let file: FileConfig = toml::from_str("gate = \"a\"\nk = [3]\nseed = 9\nm1 = 2").unwrap();
        let run = resolve(&cli, &file).unwrap();
        assert_eq!(run.gate, Some(Gate::B));
        assert_eq!(run.k, vec![3]);
        assert_eq!(run.seed, 9);
        assert_eq!(run.geometry.m1, -1);
    }

    #[test]
    fn unknown_config_keys_rejected() {
        assert!(toml::from_str::<FileConfig>("gates = \"a\"").is_err());
    }

    #[test]
    fn gradient_override_moves_split() {
        let run = resolve(&parse(&["spectrum", "--gradient-T-per-m", "2.6e5"]), &FileConfig::default()).unwrap();
        let d = DeviceGeometry::default();
        assert!((run.geometry.half_split / d.half_split - 2.0).abs() < 2e-3);
    }

    #[test]
    fn jtable_rows_and_range() {
        let rows = jtable_rows(40, 51, &PhysicalConstants::default()).unwrap();
        assert_eq!(rows.len(), 12);
        assert!((rows[7].j_mhz - 1.97).abs() < 0.02);
        assert_eq!(jtable_rows(47, 47, &PhysicalConstants::default()).unwrap().len(), 1);
        assert!(matches!(jtable_rows(5, 4, &PhysicalConstants::default()), Err(CliError::Usage(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::Model(Error::Pole("x")).exit_code(), EXIT_VALIDITY);
        assert_eq!(CliError::Model(Error::Geometry("x".into())).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::Model(Error::Numerical("x".into())).exit_code(), EXIT_INTERNAL);
    }
}
