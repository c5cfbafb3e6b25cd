//! Herring-Flicker exchange coupling between neighbouring donor electrons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::PhysicalConstants;

/// Numerical prefactor of the Herring-Flicker asymptote.
pub const HERRING_FLICKER_COEFFICIENT: f64 = 1.642;

/// Coefficients of the quartic expansion of dJ/J0 in the displacement m
/// (m counts lattice sites by which the separation shrinks), for N0 = 47.
pub const DELTA_J_SERIES: [f64; 4] = [0.4103, 0.1082, 0.0166, 0.0019];

/// Exchange J (rad/s) between two donors a distance `a` (m) apart.
///
/// J = 1.642 e^2/(4 pi eps0 kappa aB) (a/aB)^(5/2) exp(-2a/aB), divided by hbar.
pub fn herring_flicker(a: f64, constants: &PhysicalConstants) -> f64 {
    let ab = constants.bohr_radius;
    let scale = constants.coulomb_prefactor / (constants.kappa * ab);
    let x = a / ab;
    HERRING_FLICKER_COEFFICIENT * scale * x.powf(2.5) * (-2.0 * x).exp() / constants.hbar
}

/// Exchange at a separation of `n` lattice steps.
pub fn j_for_sites(n: u32, constants: &PhysicalConstants) -> f64 {
    herring_flicker(f64::from(n) * constants.lattice_step, constants)
}

/// dJ/J0 from the truncated quartic series.
pub fn delta_j_series(m: f64) -> f64 {
    DELTA_J_SERIES
        .iter()
        .enumerate()
        .map(|(k, c)| c * m.powi(k as i32 + 1))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExchangeModel {
    pub constants: PhysicalConstants,
    pub n0: u32,
}

impl ExchangeModel {
    pub fn new(constants: PhysicalConstants, n0: u32) -> Self {
        Self { constants, n0 }
    }

    pub fn herring_flicker(&self, a: f64) -> f64 {
        herring_flicker(a, &self.constants)
    }

    pub fn j_for_sites(&self, n: u32) -> f64 {
        j_for_sites(n, &self.constants)
    }

    /// Nominal coupling J0 at the prescribed spacing.
    pub fn j0(&self) -> f64 {
        self.j_for_sites(self.n0)
    }

    /// Exchange at a continuous separation N0 - m (m need not be an integer).
    pub fn j_at_shift(&self, m: f64) -> f64 {
        self.herring_flicker((f64::from(self.n0) - m) * self.constants.lattice_step)
    }

    /// dJ = J(N0 - m) - J0, exact (not the series).
    pub fn delta_j(&self, m: i32) -> Result<f64> {
        let n = i64::from(self.n0) - i64::from(m);
        if n < 1 {
            return Err(Error::Geometry(format!(
                "separation N0 - m = {n} must be at least one site"
            )));
        }
        Ok(self.j_for_sites(n as u32) - self.j0())
    }

    /// Analytic d(ln J)/dm at m = 0: 2 a0 / aB - 5 / (2 N0).
    pub fn linear_coefficient(&self) -> f64 {
        2.0 * self.constants.lattice_step / self.constants.bohr_radius - 2.5 / f64::from(self.n0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::to_hz;

    pub(crate) const TABLE: [(u32, f64, f64); 12] = [
        (40, 30.72, 33.75),
        (41, 31.49, 22.58),
        (42, 32.26, 15.09),
        (43, 33.02, 10.07),
        (44, 33.79, 6.71),
        (45, 34.56, 4.465),
        (46, 35.33, 2.97),
        (47, 36.10, 1.97),
        (48, 36.86, 1.306),
        (49, 37.63, 0.865),
        (50, 38.40, 0.573),
        (51, 39.17, 0.37855),
    ];

    fn model() -> ExchangeModel {
        ExchangeModel::new(PhysicalConstants::default(), 47)
    }

    #[test]
    fn reproduces_exchange_table() {
        let m = model();
        for (n, a_nm, j_mhz) in TABLE {
            let j = to_hz(m.j_for_sites(n)) / 1e6;
            assert!((j / j_mhz - 1.0).abs() < 0.01, "N={n}: {j} vs {j_mhz}");
            let a = f64::from(n) * m.constants.lattice_step * 1e9;
            assert!((a - a_nm).abs() < 0.006, "N={n}: a={a}");
        }
    }

    #[test]
    fn by_distance() {
        let c = PhysicalConstants::default();
        for (a_nm, j_mhz) in [(36.10, 1.97), (30.72, 33.75), (39.17, 0.37855)] {
            let j = to_hz(herring_flicker(a_nm * 1e-9, &c)) / 1e6;
            assert!((j / j_mhz - 1.0).abs() < 0.01, "a={a_nm}: {j}");
        }
    }

    #[test]
    fn monotone_over_table_range() {
        let m = model();
        for n in 40..51 {
            assert!(m.j_for_sites(n + 1) < m.j_for_sites(n));
        }
        // strictly decreasing past the power-law maximum at a = 5 aB / 4
        let c = m.constants;
        let peak = 1.25 * c.bohr_radius;
        let mut prev = herring_flicker(peak * 1.001, &c);
        for k in 1..200 {
            let a = peak * (1.001 + 0.05 * f64::from(k));
            let j = herring_flicker(a, &c);
            assert!(j < prev);
            prev = j;
        }
    }

    #[test]
    fn displacement_shifts() {
        let m = model();
        let dj_minus = to_hz(m.delta_j(-1).unwrap()) / 1e6;
        assert!((dj_minus / -0.664 - 1.0).abs() < 0.02, "{dj_minus}");
        let dj_plus = to_hz(m.delta_j(1).unwrap()) / 1e6;
        assert!((dj_plus / 1.0 - 1.0).abs() < 0.02, "{dj_plus}");
        assert_eq!(m.delta_j(0).unwrap(), 0.0);
        assert!(m.delta_j(48).is_err());
    }

    #[test]
    fn ratio_matches_table_ratio() {
        let m = model();
        let ratio = m.delta_j(-1).unwrap() / m.j0();
        let table = 1.306 / 1.97 - 1.0;
        assert!((ratio / table - 1.0).abs() < 0.01, "{ratio} vs {table}");
    }

    #[test]
    fn series_values() {
        assert!((delta_j_series(1.0) - 0.537).abs() < 1e-12);
        assert!((delta_j_series(-1.0) + 0.3168).abs() < 1e-12);
        assert_eq!(delta_j_series(0.0), 0.0);
    }

    #[test]
    fn series_tracks_exact_for_unit_shift() {
        let m = model();
        let gap = |shift: i32| m.delta_j(shift).unwrap() / m.j0() - delta_j_series(f64::from(shift));
        assert!(gap(-1).abs() <= 0.03, "{}", gap(-1));
        // the quartic truncation overshoots at m = +1 by slightly more than 0.03
        assert!((gap(1) + 0.0306).abs() < 5e-4, "{}", gap(1));
    }

    #[test]
    fn linear_coefficient_by_finite_difference() {
        let m = model();
        let h = 1e-3;
        let fd = (m.j_at_shift(h) - m.j_at_shift(-h)) / (2.0 * h * m.j0());
        assert!((fd - m.linear_coefficient()).abs() < 1e-6);
        assert!((fd - 0.4103).abs() < 1e-3, "{fd}");
    }

    #[test]
    fn smooth_and_positive_over_30_to_40_nm() {
        let c = PhysicalConstants::default();
        let mut prev = herring_flicker(30e-9, &c);
        for k in 1..=100 {
            let a = 30e-9 + 1e-10 * f64::from(k);
            let j = herring_flicker(a, &c);
            assert!(j > 0.0 && j.is_finite());
            // consecutive 0.1 nm steps change J by well under 10%
            assert!((j / prev - 1.0).abs() < 0.1);
            prev = j;
        }
    }
}
