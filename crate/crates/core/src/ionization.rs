//! Ionization-energy shifts of hydrogen and the alkali atoms inside the crystal.
//!
//! The mass correction of an electron moving along Θ is A + B·cos²Θ. A bound
//! valence electron in |l, m_l⟩ sees the angular average of that form, while
//! the ionized electron escapes along the direction of smallest correction.
//! The ionization energy changes by the difference of the two.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qed_mass::MassCoefficients;

/// Bundled vacuum ionization energies, `symbol,E_ion_vacuum_ev`.
pub const ATOMS_CSV: &str = include_str!("../data/atoms.csv");

/// Header of the ionization report CSV.
pub const REPORT_HEADER: &str = "symbol,E_ion_vacuum_ev,dE_ion_ev,E_ion_pc_ev,flag";

/// Above this fraction of E_ion the shift is outside the perturbative regime.
pub const PERTURBATIVE_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitalState {
    pub l: u32,
    pub m_l: i32,
}

impl OrbitalState {
    pub const S: OrbitalState = OrbitalState { l: 0, m_l: 0 };

    pub fn new(l: u32, m_l: i32) -> Result<Self> {
        if m_l.unsigned_abs() > l {
            return Err(Error::InvalidInput(format!("|m_l| must not exceed l (l={l}, m_l={m_l})")));
        }
        Ok(OrbitalState { l, m_l })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub symbol: String,
    pub e_ion_ev: f64,
    #[serde(default = "s_state")]
    pub valence: OrbitalState,
}

fn s_state() -> OrbitalState {
    OrbitalState::S
}

impl AtomRecord {
    pub fn new(symbol: impl Into<String>, e_ion_ev: f64) -> Result<Self> {
        let symbol = symbol.into();
        if !(e_ion_ev.is_finite() && e_ion_ev > 0.0) {
            return Err(Error::InvalidInput(format!("E_ion of {symbol} must be > 0, got {e_ion_ev}")));
        }
        Ok(AtomRecord {
            symbol,
            e_ion_ev,
            valence: OrbitalState::S,
        })
    }
}

/// Parses a `symbol,E_ion_vacuum_ev` CSV with a header line.
pub fn parse_atoms(text: &str, origin: &str) -> Result<Vec<AtomRecord>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse {
        path: origin.into(),
        msg: "empty atom table".into(),
    })?;
    if header.trim() != "symbol,E_ion_vacuum_ev" {
        return Err(Error::Parse {
            path: origin.into(),
            msg: format!("expected header `symbol,E_ion_vacuum_ev`, got `{header}`"),
        });
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::Parse {
                path: origin.into(),
                msg: format!("line {}: `{line}`", i + 2),
            };
            let (sym, e) = line.split_once(',').ok_or_else(bad)?;
            let e: f64 = e.trim().parse().map_err(|_| bad())?;
            AtomRecord::new(sym.trim(), e)
        })
        .collect()
}

/// H, Li, Na, K, Rb, Cs, Fr.
pub fn bundled_atoms() -> Vec<AtomRecord> {
    parse_atoms(ATOMS_CSV, "atoms.csv").expect("bundled atom table is valid")
}

/// Looks up bundled atoms by symbol, preserving the requested order.
pub fn select_atoms(symbols: &[String]) -> Result<Vec<AtomRecord>> {
    let all = bundled_atoms();
    symbols
        .iter()
        .map(|s| {
            all.iter()
                .find(|a| a.symbol == *s)
                .cloned()
                .ok_or_else(|| Error::InvalidInput(format!("unknown atom `{s}`")))
        })
        .collect()
}

/// ⟨l, m_l| cos²Θ |l, m_l⟩.
pub fn angular_average(state: OrbitalState) -> f64 {
    let l = state.l as f64;
    let m2 = (state.m_l as f64).powi(2);
    if state.l == 0 {
        return 1.0 / 3.0;
    }
    ((l + 1.0).powi(2) - m2) / ((2.0 * l + 1.0) * (2.0 * l + 3.0)) + (l * l - m2) / ((2.0 * l - 1.0) * (2.0 * l + 1.0))
}

/// A + B·⟨cos²Θ⟩.
pub fn delta_m_state(coeffs: &MassCoefficients, state: OrbitalState) -> f64 {
    coeffs.a_ev + coeffs.b_ev * angular_average(state)
}

/// Smallest δm over directions and the polar angle where it occurs (π/2 when B = 0).
pub fn delta_m_min(coeffs: &MassCoefficients) -> (f64, f64) {
    if coeffs.b_ev < 0.0 {
        (coeffs.a_ev + coeffs.b_ev, 0.0)
    } else {
        (coeffs.a_ev, FRAC_PI_2)
    }
}

/// δE_ion = min_Θ δm − ⟨δm⟩_state. Depends on B only.
pub fn ionization_shift(coeffs: &MassCoefficients, state: OrbitalState) -> f64 {
    let b = coeffs.b_ev;
    b.min(0.0) - b * angular_average(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonizationReport {
    pub symbol: String,
    pub e_ion_vacuum_ev: f64,
    pub de_ion_ev: f64,
    pub e_ion_pc_ev: f64,
    /// Shift exceeds half the vacuum ionization energy.
    pub flag: bool,
}

/// Applies one shift to every atom.
pub fn shifted_table(atoms: &[AtomRecord], de_ev: f64) -> Result<Vec<IonizationReport>> {
    if atoms.is_empty() {
        return Err(Error::InvalidInput("atom list is empty".into()));
    }
    if de_ev > 0.0 {
        log::warn!("positive ionization shift {de_ev} eV for an s state");
    }
    atoms
        .iter()
        .map(|a| {
            let pc = a.e_ion_ev + de_ev;
            if !(pc > 0.0) {
                return Err(Error::Unphysical {
                    symbol: a.symbol.clone(),
                    value: pc,
                });
            }
            Ok(IonizationReport {
                symbol: a.symbol.clone(),
                e_ion_vacuum_ev: a.e_ion_ev,
                de_ion_ev: de_ev,
                e_ion_pc_ev: pc,
                flag: de_ev.abs() > PERTURBATIVE_FRACTION * a.e_ion_ev,
            })
        })
        .collect()
}

/// Per-atom reports together with the coefficients and Θ_min behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonizationTable {
    #[serde(rename = "A_ev")]
    pub a_ev: f64,
    #[serde(rename = "B_ev")]
    pub b_ev: f64,
    pub theta_min: f64,
    pub rows: Vec<IonizationReport>,
}

/// Shifts each atom by the correction of its own valence state.
pub fn ionization_table(coeffs: &MassCoefficients, atoms: &[AtomRecord]) -> Result<IonizationTable> {
    if atoms.is_empty() {
        return Err(Error::InvalidInput("atom list is empty".into()));
    }
    let mut rows = Vec::with_capacity(atoms.len());
    for a in atoms {
        let de = ionization_shift(coeffs, a.valence);
        rows.extend(shifted_table(std::slice::from_ref(a), de)?);
    }
    Ok(IonizationTable {
        a_ev: coeffs.a_ev,
        b_ev: coeffs.b_ev,
        theta_min: delta_m_min(coeffs).1,
        rows,
    })
}

impl IonizationTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.symbol, r.e_ion_vacuum_ev, r.de_ion_ev, r.e_ion_pc_ev, r.flag as u8
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab(a: f64, b: f64) -> MassCoefficients {
        MassCoefficients::from_ab(a, b)
    }

    #[test]
    fn s_state_average_is_one_third() {
        assert_eq!(angular_average(OrbitalState::S), 1.0 / 3.0);
    }

    #[test]
    fn invalid_state_rejected() {
        assert!(OrbitalState::new(1, 2).is_err());
        assert!(OrbitalState::new(2, -3).is_err());
        assert!(OrbitalState::new(2, -2).is_ok());
    }

    #[test]
    fn closure_over_m() {
        for l in 0..12u32 {
            let li = l as i32;
            let sum: f64 = (-li..=li).map(|m| angular_average(OrbitalState::new(l, m).unwrap())).sum();
            assert!((sum / (2 * l + 1) as f64 - 1.0 / 3.0).abs() < 1e-12, "l={l}");
        }
    }

    #[test]
    fn averages_in_unit_interval() {
        for l in 0..20u32 {
            for m in -(l as i32)..=(l as i32) {
                let c = angular_average(OrbitalState::new(l, m).unwrap());
                assert!((0.0..=1.0).contains(&c));
            }
        }
    }

    #[test]
    fn state_and_min_examples() {
        assert_eq!(delta_m_state(&ab(2.0, 3.0), OrbitalState::S), 3.0);
        assert_eq!(delta_m_state(&ab(1.7, 0.0), OrbitalState::new(3, 1).unwrap()), 1.7);
        assert_eq!(delta_m_min(&ab(1.0, -3.0)), (-2.0, 0.0));
        assert_eq!(delta_m_min(&ab(1.0, 3.0)), (1.0, FRAC_PI_2));
        assert_eq!(delta_m_min(&ab(0.4, 0.0)), (0.4, FRAC_PI_2));
        assert_eq!(ionization_shift(&ab(5.0, 0.0), OrbitalState::S), 0.0);
    }

    #[test]
    fn shift_matches_min_minus_state() {
        for &(a, b) in &[(0.3, -1.2), (-2.0, 0.7), (1.0, 0.0)] {
            let c = ab(a, b);
            let direct = delta_m_min(&c).0 - delta_m_state(&c, OrbitalState::S);
            assert!((ionization_shift(&c, OrbitalState::S) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn table_examples() {
        let h = AtomRecord::new("H", 13.598).unwrap();
        let cs = AtomRecord::new("Cs", 3.894).unwrap();
        let t = shifted_table(std::slice::from_ref(&h), -0.91).unwrap();
        assert!((t[0].e_ion_pc_ev - 12.688).abs() < 1e-9);
        assert!(!t[0].flag);
        let t = shifted_table(std::slice::from_ref(&cs), -1.32).unwrap();
        assert!((t[0].e_ion_pc_ev - 2.574).abs() < 1e-9);
        let t = shifted_table(&[h.clone(), cs.clone()], 0.0).unwrap();
        assert_eq!(t[0].e_ion_pc_ev, 13.598);
        assert_eq!(t[1].e_ion_pc_ev, 3.894);
        assert!(shifted_table(std::slice::from_ref(&cs), -2.5).unwrap()[0].flag);
        assert!(matches!(shifted_table(&[cs], -4.0), Err(Error::Unphysical { .. })));
        assert!(shifted_table(&[], -0.1).is_err());
    }

    #[test]
    fn bundled_atoms_loaded() {
        let atoms = bundled_atoms();
        let syms: Vec<&str> = atoms.iter().map(|a| a.symbol.as_str()).collect();
        assert_eq!(syms, ["H", "Li", "Na", "K", "Rb", "Cs", "Fr"]);
        assert_eq!(atoms[0].e_ion_ev, 13.598);
        assert!(atoms.iter().all(|a| a.valence == OrbitalState::S));
        assert!(select_atoms(&["Xx".into()]).is_err());
        assert_eq!(select_atoms(&["Cs".into(), "H".into()]).unwrap()[0].e_ion_ev, 3.894);
    }

    #[test]
    fn parse_rejects_bad_rows() {
        assert!(parse_atoms("symbol,E_ion_vacuum_ev\nH,abc\n", "t").is_err());
        assert!(parse_atoms("symbol,E_ion_vacuum_ev\nH,-1\n", "t").is_err());
        assert!(parse_atoms("sym,E\nH,1\n", "t").is_err());
    }

    #[test]
    fn csv_layout() {
        let t = ionization_table(&ab(0.5, -1.5), &[AtomRecord::new("H", 13.598).unwrap()]).unwrap();
        assert_eq!(t.theta_min, 0.0);
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(REPORT_HEADER));
        assert_eq!(lines.next(), Some("H,13.598,-1,12.598,0"));
    }
}
