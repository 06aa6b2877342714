//! Refractive-index models for the high-index layer.
//!
//! Three shapes are supported: a constant index, a two-term Sellmeier tail
//! `1 + C1/ω² + C2/ω⁴`, and a tabulated curve with shape-preserving cubic
//! interpolation and a power-law rolloff to 1 above a chosen energy.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Bundled HfO₂ refractive index, `omega_ev,n`.
pub const HFO2_INDEX_CSV: &str = include_str!("../data/hfo2_index.csv");

/// Default rolloff exponent.
pub const DEFAULT_ROLLOFF_EXPONENT: f64 = 2.0;

/// Monotone cubic (Fritsch–Carlson) interpolant through `(omega_ev, n)` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableSamples", into = "TableSamples")]
pub struct IndexTable {
    omega: Vec<f64>,
    value: Vec<f64>,
    slope: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TableSamples {
    omega_ev: Vec<f64>,
    n: Vec<f64>,
}

impl TryFrom<TableSamples> for IndexTable {
    type Error = Error;
    fn try_from(s: TableSamples) -> Result<Self> {
        if s.omega_ev.len() != s.n.len() {
            return Err(Error::InvalidInput(
                "table columns have different lengths".into(),
            ));
        }
        IndexTable::new(s.omega_ev.into_iter().zip(s.n).collect())
    }
}

impl From<IndexTable> for TableSamples {
    fn from(t: IndexTable) -> Self {
        TableSamples {
            omega_ev: t.omega,
            n: t.value,
        }
    }
}

impl IndexTable {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyTable);
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidInput(format!(
                    "table energies must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(w, n) in &samples {
            if !w.is_finite() || !n.is_finite() || n <= 0.0 || w < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "bad table sample ({w}, {n})"
                )));
            }
        }
        let (omega, value): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
        let slope = pchip_slopes(&omega, &value);
        Ok(IndexTable {
            omega,
            value,
            slope,
        })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.omega.iter().copied().zip(self.value.iter().copied())
    }

    pub fn first_energy(&self) -> f64 {
        self.omega[0]
    }

    pub fn last_energy(&self) -> f64 {
        *self.omega.last().expect("nonempty table")
    }

    pub fn max_value(&self) -> f64 {
        self.value.iter().copied().fold(f64::MIN, f64::max)
    }

    /// Interpolated value, constant outside the sampled range.
    pub fn eval(&self, w: f64) -> f64 {
        let n = self.omega.len();
        if w <= self.omega[0] {
            return self.value[0];
        }
        if w >= self.omega[n - 1] {
            return self.value[n - 1];
        }
        let k = self.omega.partition_point(|&x| x <= w) - 1;
        let h = self.omega[k + 1] - self.omega[k];
        let t = (w - self.omega[k]) / h;
        let (y0, y1) = (self.value[k], self.value[k + 1]);
        let (m0, m1) = (self.slope[k] * h, self.slope[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    /// Reads a two-column `omega_ev,n` CSV with a header line.
    pub fn parse_csv(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(Error::EmptyTable)?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() != 2 || cols[0] != "omega_ev" {
            return Err(Error::Parse {
                path: origin.into(),
                msg: format!("expected header `omega_ev,<value>`, got `{header}`"),
            });
        }
        let mut samples = Vec::new();
        for (i, line) in lines.enumerate() {
            let mut it = line.split(',').map(str::trim);
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| Error::Parse {
                    path: origin.into(),
                    msg: format!("line {}: `{line}`", i + 2),
                })
            };
            let w = parse(it.next())?;
            let n = parse(it.next())?;
            samples.push((w, n));
        }
        IndexTable::new(samples)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, &path.display().to_string())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega_ev,n\n");
        for (w, n) in self.samples() {
            out.push_str(&format!("{w},{n}\n"));
        }
        out
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 1 {
        return vec![0.0];
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        let (d0, d1) = (delta[k - 1], delta[k]);
        if d0 * d1 <= 0.0 {
            m[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    m[0] = pchip_end(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = pchip_end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

fn pchip_end(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Frequency-dependent refractive index n(ω), ω in eV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndexModel {
    Constant {
        n: f64,
    },
    /// `1 + c1/ω² + c2/ω⁴`, with c1 in eV² and c2 in eV⁴.
    SellmeierTail {
        c1: f64,
        c2: f64,
    },
    /// Table inside its range, constant below it, and
    /// `1 + (n(ω_r) − 1)(ω_r/ω)^p` above the rolloff energy ω_r.
    Tabulated {
        table: IndexTable,
        rolloff_ev: f64,
        exponent: f64,
    },
}

impl IndexModel {
    pub fn constant(n: f64) -> Result<Self> {
        let m = IndexModel::Constant { n };
        m.validate()?;
        Ok(m)
    }

    pub fn sellmeier(c1: f64, c2: f64) -> Result<Self> {
        let m = IndexModel::SellmeierTail { c1, c2 };
        m.validate()?;
        Ok(m)
    }

    pub fn tabulated(table: IndexTable, rolloff_ev: f64, exponent: f64) -> Result<Self> {
        let m = IndexModel::Tabulated {
            table,
            rolloff_ev,
            exponent,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            IndexModel::Constant { n } => {
                if !(n.is_finite() && *n > 0.0) {
                    return Err(Error::InvalidInput(format!("index must be > 0, got {n}")));
                }
            }
            IndexModel::SellmeierTail { c1, c2 } => {
                if !(c1.is_finite() && c2.is_finite() && *c1 >= 0.0 && *c2 >= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "Sellmeier coefficients must be finite and non-negative ({c1}, {c2})"
                    )));
                }
            }
            IndexModel::Tabulated {
                table,
                rolloff_ev,
                exponent,
            } => {
                if table.is_empty() {
                    return Err(Error::EmptyTable);
                }
                if !(rolloff_ev.is_finite() && *rolloff_ev > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "rolloff energy must be > 0, got {rolloff_ev}"
                    )));
                }
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "rolloff exponent must be > 0, got {exponent}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// n(ω). Fails for non-finite or negative ω, and where the model is
    /// singular (the Sellmeier pole at ω = 0).
    pub fn eval(&self, omega_ev: f64) -> Result<f64> {
        if !omega_ev.is_finite() || omega_ev < 0.0 {
            return Err(Error::InvalidInput(format!(
                "photon energy must be finite and >= 0, got {omega_ev}"
            )));
        }
        let n = self.eval_unchecked(omega_ev);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidInput(format!(
                "index is not finite at {omega_ev} eV"
            )));
        }
        Ok(n)
    }

    /// n(ω) without argument checks; used on hot paths with ω > 0.
    #[inline]
    pub fn eval_unchecked(&self, omega_ev: f64) -> f64 {
        match self {
            IndexModel::Constant { n } => *n,
            IndexModel::SellmeierTail { c1, c2 } => {
                if *c1 == 0.0 && *c2 == 0.0 {
                    return 1.0;
                }
                let k2 = omega_ev * omega_ev;
                1.0 + c1 / k2 + c2 / (k2 * k2)
            }
            IndexModel::Tabulated {
                table,
                rolloff_ev,
                exponent,
            } => {
                if omega_ev <= *rolloff_ev {
                    table.eval(omega_ev)
                } else {
                    let n_roll = table.eval(*rolloff_ev);
                    1.0 + (n_roll - 1.0) * (rolloff_ev / omega_ev).powf(*exponent)
                }
            }
        }
    }

    /// Whether n depends on ω.
    pub fn is_dispersive(&self) -> bool {
        match self {
            IndexModel::Constant { .. } => false,
            IndexModel::SellmeierTail { c1, c2 } => *c1 != 0.0 || *c2 != 0.0,
            IndexModel::Tabulated { .. } => true,
        }
    }

    /// Upper bound of n over `[omega_lo, ∞)` (ω_lo > 0 for Sellmeier).
    pub fn max_index_from(&self, omega_lo: f64) -> f64 {
        match self {
            IndexModel::Constant { n } => *n,
            IndexModel::SellmeierTail { .. } => self.eval_unchecked(omega_lo.max(1e-300)),
            IndexModel::Tabulated { table, .. } => {
                let n_lo = self.eval_unchecked(omega_lo);
                table
                    .samples()
                    .filter(|&(w, _)| w >= omega_lo)
                    .map(|(_, n)| n)
                    .fold(n_lo.max(1.0), f64::max)
            }
        }
    }

    /// Local Sellmeier coefficient C1 = (n(Λ) − 1)·Λ² matching the model's
    /// leading high-energy term at `lambda_ev`.
    pub fn tail_c1(&self, lambda_ev: f64) -> f64 {
        match self {
            IndexModel::Constant { .. } => 0.0,
            IndexModel::SellmeierTail { c1, .. } => *c1,
            IndexModel::Tabulated { .. } => {
                (self.eval_unchecked(lambda_ev) - 1.0).max(0.0) * lambda_ev * lambda_ev
            }
        }
    }

    /// The model with its deviation from vacuum scaled: n → 1 + s·(n − 1).
    pub fn scaled(&self, s: f64) -> Result<IndexModel> {
        let m = match self {
            IndexModel::Constant { n } => IndexModel::Constant {
                n: 1.0 + s * (n - 1.0),
            },
            IndexModel::SellmeierTail { c1, c2 } => IndexModel::SellmeierTail {
                c1: s * c1,
                c2: s * c2,
            },
            IndexModel::Tabulated {
                table,
                rolloff_ev,
                exponent,
            } => IndexModel::Tabulated {
                table: IndexTable::new(table.samples().map(|(w, n)| (w, 1.0 + s * (n - 1.0))).collect())?,
                rolloff_ev: *rolloff_ev,
                exponent: *exponent,
            },
        };
        m.validate()?;
        Ok(m)
    }
}

/// Nanoparticle-superlattice geometry: array period `a` and gap `g`, nm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetamaterialSpec {
    pub period_nm: f64,
    pub gap_nm: f64,
}

impl MetamaterialSpec {
    pub fn new(period_nm: f64, gap_nm: f64) -> Result<Self> {
        let s = MetamaterialSpec { period_nm, gap_nm };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, g) = (self.period_nm, self.gap_nm);
        if !(a.is_finite() && g.is_finite() && a > 0.0 && g > 0.0) {
            return Err(Error::InvalidInput(format!(
                "period and gap must be positive (a={a}, g={g})"
            )));
        }
        // a = g is the degenerate identity geometry; anything tighter is unphysical.
        if g > a {
            return Err(Error::InvalidInput(format!("gap {g} exceeds period {a}")));
        }
        Ok(())
    }

    /// Effective index sqrt((a/g)·ε_d).
    pub fn effective_index(&self, eps_d: f64) -> f64 {
        (self.period_nm / self.gap_nm * eps_d).sqrt()
    }
}

/// Builds the tabulated effective-medium index n_eff(ω) = sqrt((a/g)·ε_d(ω))
/// from a permittivity table `(omega_ev, eps_d)`.
pub fn build_effective_model(
    spec: &MetamaterialSpec,
    dielectric: &[(f64, f64)],
    rolloff_ev: f64,
    exponent: f64,
) -> Result<IndexModel> {
    spec.validate()?;
    if dielectric.is_empty() {
        return Err(Error::EmptyTable);
    }
    let mut samples = Vec::with_capacity(dielectric.len());
    for &(w, eps) in dielectric {
        if eps < 0.0 {
            return Err(Error::NegativePermittivity { omega_ev: w, eps });
        }
        samples.push((w, spec.effective_index(eps)));
    }
    IndexModel::tabulated(IndexTable::new(samples)?, rolloff_ev, exponent)
}

/// Permittivity samples ε = n² from the bundled HfO₂ index table.
pub fn hfo2_permittivity() -> Vec<(f64, f64)> {
    IndexTable::parse_csv(HFO2_INDEX_CSV, "hfo2_index.csv")
        .expect("bundled table is valid")
        .samples()
        .map(|(w, n)| (w, n * n))
        .collect()
}

/// Rolloff energy (eV) and exponent of the bundled metamaterial models.
pub const METAMATERIAL_ROLLOFF_EV: f64 = 12.0;
pub const METAMATERIAL_ROLLOFF_EXPONENT: f64 = 3.0;

/// Effective index of the Au/HfO₂ metamaterial for the given geometry, with
/// the bundled rolloff.
pub fn bundled_metamaterial(spec: &MetamaterialSpec) -> Result<IndexModel> {
    build_effective_model(
        spec,
        &hfo2_permittivity(),
        METAMATERIAL_ROLLOFF_EV,
        METAMATERIAL_ROLLOFF_EXPONENT,
    )
}

/// Flat average (1/(hi−lo))∫ n(ω) dω over [lo, hi], relative tolerance 1e-6.
pub fn mean_index_between(model: &IndexModel, lo: f64, hi: f64) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite() && hi > lo && lo >= 0.0) {
        return Err(Error::InvalidInput(format!("bad averaging range [{lo}, {hi}]")));
    }
    model.validate()?;
    let mut breaks = vec![lo];
    if let IndexModel::Tabulated {
        table, rolloff_ev, ..
    } = model
    {
        for (w, _) in table.samples().chain(std::iter::once((*rolloff_ev, 0.0))) {
            if w > lo && w < hi {
                breaks.push(w);
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
    }
    breaks.push(hi);
    let parts: Vec<f64> = breaks
        .windows(2)
        .map(|w| quad::adaptive(|x| model.eval_unchecked(x), w[0], w[1], 1e-9, 0.0))
        .collect();
    let mean = quad::pairwise_sum(&parts) / (hi - lo);
    if !mean.is_finite() {
        return Err(Error::InvalidInput(format!(
            "index is not integrable on [{lo}, {hi}]"
        )));
    }
    Ok(mean)
}

/// Flat average of n(ω) over [0, ω_max].
pub fn mean_index(model: &IndexModel, omega_max: f64) -> Result<f64> {
    if !(omega_max > 0.0) {
        return Err(Error::InvalidInput(format!("ω_max must be > 0, got {omega_max}")));
    }
    if let IndexModel::SellmeierTail { c1, c2 } = model {
        if *c1 != 0.0 || *c2 != 0.0 {
            return Err(Error::InvalidInput(
                "Sellmeier tail diverges at ω = 0; use mean_index_between".into(),
            ));
        }
    }
    mean_index_between(model, 0.0, omega_max)
}
