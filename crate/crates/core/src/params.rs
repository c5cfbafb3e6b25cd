//! Physical constants, device geometry and the effective Hamiltonian
//! parameters of a (possibly displaced) two-donor chain.
//!
//! Every frequency in this crate is an angular frequency in rad/s. Divide by
//! [`TWO_PI`] to obtain Hz; the reporting layers always do.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Largest |m| (in lattice sites) a donor may be displaced by.
pub const MAX_DISPLACEMENT: i32 = 4;

/// Converts a frequency in Hz to rad/s.
#[inline]
pub fn hz(f: f64) -> f64 {
    TWO_PI * f
}

/// Converts an angular frequency in rad/s to Hz.
#[inline]
pub fn to_hz(w: f64) -> f64 {
    w / TWO_PI
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Electron gyromagnetic ratio, rad s^-1 T^-1.
    pub gamma_e: f64,
    /// Magnitude of the 31P nuclear gyromagnetic ratio, rad s^-1 T^-1.
    pub gamma_n: f64,
    /// Contact hyperfine constant A, rad/s.
    pub hyperfine_a: f64,
    /// Lattice step a0 along the chain, m.
    pub lattice_step: f64,
    /// Effective donor Bohr radius, m.
    pub bohr_radius: f64,
    /// Dielectric constant of silicon.
    pub kappa: f64,
    /// e^2 / (4 pi eps0), J m.
    pub coulomb_prefactor: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            gamma_e: hz(28.025e9),
            gamma_n: hz(17.25144e6),
            hyperfine_a: hz(117.53e6),
            lattice_step: 7.68e-10,
            bohr_radius: 33.14e-10,
            kappa: 11.9,
            coulomb_prefactor: 2.307_077_552e-28,
            hbar: 1.054_571_817e-34,
        }
    }
}

/// Free-electron Bohr radius, m.
pub const FREE_BOHR_RADIUS: f64 = 0.5292e-10;
/// Conduction-band effective mass of silicon in units of the electron mass.
pub const EFFECTIVE_MASS_RATIO: f64 = 0.19;

impl PhysicalConstants {
    /// Hydrogenic estimate kappa * (M / M*) * a_B^0 of the donor Bohr radius.
    pub fn hydrogenic_bohr_radius(&self) -> f64 {
        self.kappa / EFFECTIVE_MASS_RATIO * FREE_BOHR_RADIUS
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gamma_e", self.gamma_e),
            ("gamma_n", self.gamma_n),
            ("hyperfine_a", self.hyperfine_a),
            ("lattice_step", self.lattice_step),
            ("bohr_radius", self.bohr_radius),
            ("kappa", self.kappa),
            ("coulomb_prefactor", self.coulomb_prefactor),
            ("hbar", self.hbar),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "constant {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Placement of the two donors in the field gradient.
///
/// Atom 1 sits nominally at x = 0 and atom 2 at x = N0 a0, with the permanent
/// field increasing along +x. Displacements `m1`, `m2` are counted in lattice
/// sites along +x, so `m1 = -1` lengthens the chain to N0 + 1 sites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceGeometry {
    pub n0: u32,
    /// Field gradient along the chain, T/m.
    pub gradient: f64,
    /// Mean permanent field b = (B1 + B2) / 2 of the undisplaced chain, T.
    pub mean_field: f64,
    /// Half field difference (B2 - B1) / 2 of the undisplaced chain, T.
    pub half_split: f64,
    pub m1: i32,
    pub m2: i32,
}

impl Default for DeviceGeometry {
    fn default() -> Self {
        Self {
            n0: 47,
            gradient: 1.3e5,
            mean_field: 3.3,
            // gamma_e dB / 2pi = 65.76 MHz
            half_split: 65.76e6 / 28.025e9,
            m1: 0,
            m2: 0,
        }
    }
}

impl DeviceGeometry {
    pub fn with_displacements(self, m1: i32, m2: i32) -> Self {
        Self { m1, m2, ..self }
    }

    /// The same device with both donors on their prescribed sites.
    pub fn ideal(self) -> Self {
        self.with_displacements(0, 0)
    }

    pub fn is_ideal(&self) -> bool {
        self.m1 == 0 && self.m2 == 0
    }

    /// Separation N = N0 - m1 + m2 in lattice sites.
    pub fn separation_sites(&self) -> i64 {
        i64::from(self.n0) - i64::from(self.m1) + i64::from(self.m2)
    }

    /// Field step per lattice site, gradient * a0.
    pub fn field_step(&self, constants: &PhysicalConstants) -> f64 {
        self.gradient * constants.lattice_step
    }

    pub fn validate(&self) -> Result<()> {
        if self.n0 == 0 {
            return Err(Error::Geometry("N0 must be at least 1".into()));
        }
        for (name, m) in [("m1", self.m1), ("m2", self.m2)] {
            if m.abs() > MAX_DISPLACEMENT {
                return Err(Error::Geometry(format!(
                    "|{name}| = {} exceeds {MAX_DISPLACEMENT} lattice sites",
                    m.abs()
                )));
            }
        }
        if self.separation_sites() < 1 {
            return Err(Error::Geometry(format!(
                "N0 - m1 + m2 = {} < 1: donors coincide or cross",
                self.separation_sites()
            )));
        }
        for (name, v) in [
            ("gradient", self.gradient),
            ("mean_field", self.mean_field),
            ("half_split", self.half_split),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Geometry(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Parameters of the static Hamiltonian for one chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    /// Field at atom 1, T.
    pub b1: f64,
    /// Field at atom 2, T.
    pub b2: f64,
    pub gamma_e: f64,
    pub gamma_n: f64,
    /// Hyperfine constant A, rad/s.
    pub hyperfine_a: f64,
    /// Exchange constant J, rad/s.
    pub exchange_j: f64,
    pub separation_sites: i64,
}

impl EffectiveParams {
    /// b = (B1 + B2) / 2.
    pub fn mean_field(&self) -> f64 {
        0.5 * (self.b1 + self.b2)
    }

    /// dB = (B2 - B1) / 2.
    pub fn half_split(&self) -> f64 {
        0.5 * (self.b2 - self.b1)
    }

    /// Uniformly rescales every frequency scale of the Hamiltonian.
    ///
    /// Fields are left untouched and the gyromagnetic ratios absorb the
    /// factor, so all dimensionless ratios of the model are preserved.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            gamma_e: self.gamma_e * factor,
            gamma_n: self.gamma_n * factor,
            hyperfine_a: self.hyperfine_a * factor,
            exchange_j: self.exchange_j * factor,
            ..*self
        }
    }
}

/// Derives fields and couplings for the given (possibly displaced) geometry.
pub fn effective_params(
    geometry: &DeviceGeometry,
    constants: &PhysicalConstants,
) -> Result<EffectiveParams> {
    constants.validate()?;
    geometry.validate()?;
    let step = geometry.field_step(constants);
    let b1 = geometry.mean_field - geometry.half_split + f64::from(geometry.m1) * step;
    let b2 = geometry.mean_field + geometry.half_split + f64::from(geometry.m2) * step;
    let n = geometry.separation_sites();
    Ok(EffectiveParams {
        b1,
        b2,
        gamma_e: constants.gamma_e,
        gamma_n: constants.gamma_n,
        hyperfine_a: constants.hyperfine_a,
        exchange_j: exchange::j_for_sites(n as u32, constants),
        separation_sites: n,
    })
}
