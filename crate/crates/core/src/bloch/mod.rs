//! TE/TM Bloch modes of a two-layer periodic stack.
//!
//! The stack alternates a high-index layer (thickness `d_h`, index n_h(ω))
//! and a low-index layer (thickness `d_l`, constant n_l, air by default).
//! The period starts at the left face of the high-index layer.
//!
//! Field conventions: the TE scalar is E_y; the TM scalar is H_y, from
//! which E = (−iH_y'/(k₀ε), 0, −k_ρH_y/(k₀ε)). Modes are normalized so that
//! (1/L)∫ε|E|² dz = 1/2.

mod dispersion;
mod profile;

pub use dispersion::{dispersion_residual, solve_bands, solve_count, BandSolver, RootSet};
pub(crate) use dispersion::{normal_half_trace, normal_incidence_extrema};
pub use profile::{fourier_coefficients, fourier_tail, mode_profile, FourierCoefficients, LayerField, ModeProfile, ModeWeights};

use serde::{Deserialize, Serialize};

use crate::constants::HBAR_C;
use crate::error::{Error, Result};
use crate::materials::IndexModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    #[serde(rename = "TE")]
    Te,
    #[serde(rename = "TM")]
    Tm,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::Te, Polarization::Tm];

    pub fn label(self) -> &'static str {
        match self {
            Polarization::Te => "TE",
            Polarization::Tm => "TM",
        }
    }
}

impl std::str::FromStr for Polarization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "TE" => Ok(Polarization::Te),
            "TM" => Ok(Polarization::Tm),
            other => Err(Error::InvalidInput(format!("unknown polarization `{other}`"))),
        }
    }
}

/// Crystal geometry, lengths in nm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stack1D {
    pub d_h: f64,
    pub d_l: f64,
    pub high: IndexModel,
    #[serde(default = "one")]
    pub n_low: f64,
}

fn one() -> f64 {
    1.0
}

impl Stack1D {
    /// High-index layer against air.
    pub fn new(d_h: f64, d_l: f64, high: IndexModel) -> Result<Self> {
        Self::with_low_index(d_h, d_l, high, 1.0)
    }

    pub fn with_low_index(d_h: f64, d_l: f64, high: IndexModel, n_low: f64) -> Result<Self> {
        let s = Stack1D {
            d_h,
            d_l,
            high,
            n_low,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_h.is_finite() && self.d_l.is_finite() && self.d_h > 0.0 && self.d_l > 0.0) {
            return Err(Error::InvalidInput(format!(
                "layer thicknesses must be positive (d_h={}, d_l={})",
                self.d_h, self.d_l
            )));
        }
        if !(self.n_low.is_finite() && self.n_low > 0.0) {
            return Err(Error::InvalidInput(format!("n_low must be > 0, got {}", self.n_low)));
        }
        self.high.validate()
    }

    pub fn period(&self) -> f64 {
        self.d_h + self.d_l
    }

    /// Reciprocal basis b_z = 2π/L, nm⁻¹.
    pub fn reciprocal(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period()
    }

    /// G_m = m·b_z.
    pub fn g(&self, m: i64) -> f64 {
        m as f64 * self.reciprocal()
    }

    /// Edge of the first Brillouin zone, π/L.
    pub fn zone_edge(&self) -> f64 {
        std::f64::consts::PI / self.period()
    }

    /// Same stack with both thicknesses multiplied by `s`.
    pub fn scaled_geometry(&self, s: f64) -> Result<Self> {
        Self::with_low_index(self.d_h * s, self.d_l * s, self.high.clone(), self.n_low)
    }

    /// Empty-lattice estimate of the band count below `omega_max` at k_ρ = 0.
    pub fn band_count_estimate(&self, omega_max: f64) -> f64 {
        let n_h = self.high.eval_unchecked(omega_max.max(1e-12));
        let opl = n_h * self.d_h + self.n_low * self.d_l;
        omega_max * opl / (std::f64::consts::PI * HBAR_C)
    }
}

/// Transverse wavenumber k_ρ ≥ 0 and Bloch wavenumber k_z in the first zone, nm⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KPoint {
    pub k_rho: f64,
    pub k_z: f64,
    pub pol: Polarization,
}

impl KPoint {
    pub fn new(k_rho: f64, k_z: f64, pol: Polarization) -> Self {
        KPoint { k_rho, k_z, pol }
    }

    pub fn validate(&self, stack: &Stack1D) -> Result<()> {
        if !(self.k_rho.is_finite() && self.k_z.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite k-point {self:?}")));
        }
        if self.k_rho < 0.0 {
            return Err(Error::InvalidInput(format!("k_rho must be >= 0, got {}", self.k_rho)));
        }
        if self.k_z.abs() > stack.zone_edge() + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "k_z = {} lies outside the first zone (|k_z| <= {})",
                self.k_z,
                stack.zone_edge()
            )));
        }
        Ok(())
    }
}

/// One Bloch band at a k-point, with its Fourier amplitudes.
#[derive(Debug, Clone)]
pub struct BlochBand {
    pub kpoint: KPoint,
    /// 1-based, ordered by ω.
    pub band: usize,
    pub omega_ev: f64,
    pub coefficients: FourierCoefficients,
}

/// Solves every band of `kpoint` below `omega_max` together with its Fourier amplitudes.
pub fn bloch_bands(kpoint: KPoint, stack: &Stack1D, omega_max: f64, m_max: usize) -> Result<Vec<BlochBand>> {
    let omegas = solve_bands(kpoint, stack, omega_max)?;
    omegas
        .into_iter()
        .enumerate()
        .map(|(i, w)| {
            let profile = mode_profile(w, kpoint, stack)?;
            let coefficients = fourier_coefficients(&profile, m_max)?;
            Ok(BlochBand {
                kpoint,
                band: i + 1,
                omega_ev: w,
                coefficients,
            })
        })
        .collect()
}
