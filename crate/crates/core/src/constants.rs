//! Physical constants and unit conversions.
//!
//! Energies are carried in eV and lengths in nm. Wavenumbers are nm⁻¹ and a
//! photon energy converts to a vacuum wavenumber through `HBAR_C`.

/// ħc in eV·nm.
pub const HBAR_C: f64 = 197.326_980_4;

/// Fine-structure constant.
pub const ALPHA: f64 = 7.297_352_569_3e-3;

/// Vacuum wavenumber (nm⁻¹) of a photon with energy `omega_ev`.
#[inline]
pub fn ev_to_inv_nm(omega_ev: f64) -> f64 {
    omega_ev / HBAR_C
}

/// Photon energy (eV) of a vacuum wavenumber `k` (nm⁻¹).
#[inline]
pub fn inv_nm_to_ev(k: f64) -> f64 {
    k * HBAR_C
}

/// Vacuum electromagnetic mass with an energy cutoff, (4α/3π)Λ, in eV.
#[inline]
pub fn vacuum_mass(lambda_ev: f64) -> f64 {
    4.0 * ALPHA / (3.0 * std::f64::consts::PI) * lambda_ev
}
