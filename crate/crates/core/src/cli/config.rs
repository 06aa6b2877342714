use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bloch::Stack1D;
use crate::error::{Error, Result};
use crate::materials::{
    bundled_metamaterial, IndexModel, IndexTable, MetamaterialSpec, DEFAULT_ROLLOFF_EXPONENT,
};
use crate::qed_mass::CutoffConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackSpec {
    pub d_h: f64,
    pub d_l: f64,
}

/// High-index layer material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IndexSpec {
    Constant {
        n: f64,
    },
    SellmeierTail {
        c1: f64,
        #[serde(default)]
        c2: f64,
    },
    /// Two-column `omega_ev,n` CSV; relative paths resolve against the config file.
    Table {
        path: PathBuf,
        rolloff_ev: f64,
        #[serde(default = "default_exponent")]
        exponent: f64,
    },
    /// Bundled Au/HfO₂ nanoparticle metamaterial with period `a` and gap `g`, nm.
    Metamaterial {
        a: f64,
        g: f64,
    },
}

fn default_exponent() -> f64 {
    DEFAULT_ROLLOFF_EXPONENT
}

/// Optional parameter grid; each present list replaces the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub a: Option<Vec<f64>>,
    pub g: Option<Vec<f64>>,
    pub d_h: Option<Vec<f64>>,
    pub d_l: Option<Vec<f64>>,
    /// Index-scale factors s in n → 1 + s·(n − 1).
    pub scale: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub stack: StackSpec,
    pub index: IndexSpec,
    #[serde(default = "unit_scale")]
    pub index_scale: f64,
    pub cutoff: CutoffConfig,
    #[serde(default = "all_atoms")]
    pub atoms: Vec<String>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub figure: Option<u8>,
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
    #[serde(default)]
    pub workers: Option<usize>,
}

fn unit_scale() -> f64 {
    1.0
}

fn all_atoms() -> Vec<String> {
    ["H", "Li", "Na", "K", "Rb", "Cs", "Fr"].map(String::from).to_vec()
}

/// One point of a run or sweep: everything that determines A and B.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSpec {
    pub stack: StackSpec,
    pub index: IndexSpec,
    pub index_scale: f64,
    pub cutoff: CutoffConfig,
}

impl RunConfig {
    /// Reads and validates a JSON config; table paths become absolute.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let IndexSpec::Table { path: p, .. } = &mut cfg.index {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if let IndexSpec::Table { path, .. } = &self.index {
            if !path.is_file() {
                return bad(format!("index table {} does not exist", path.display()));
            }
        }
        if let Some(f) = self.figure {
            if !(2..=4).contains(&f) {
                return bad(format!("figure must be 2, 3 or 4, got {f}"));
            }
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1".into());
        }
        if self.atoms.is_empty() {
            return bad("atom list is empty".into());
        }
        crate::ionization::select_atoms(&self.atoms).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(grid) = &self.sweep {
            let lists = [&grid.a, &grid.g, &grid.d_h, &grid.d_l, &grid.scale];
            if lists.iter().all(|l| l.is_none()) {
                return bad("sweep grid has no parameter lists".into());
            }
            if lists.iter().any(|l| l.as_ref().is_some_and(|v| v.is_empty())) {
                return bad("sweep grid lists must be nonempty".into());
            }
            if (grid.a.is_some() || grid.g.is_some()) && !matches!(self.index, IndexSpec::Metamaterial { .. }) {
                return bad("sweeping a or g requires a metamaterial index".into());
            }
        }
        for p in self.points() {
            p.stack().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn base_point(&self) -> PointSpec {
        PointSpec {
            stack: self.stack.clone(),
            index: self.index.clone(),
            index_scale: self.index_scale,
            cutoff: self.cutoff.clone(),
        }
    }

    /// Grid points in row-major order a, g, d_h, d_l, scale; the base point alone without a grid.
    pub fn points(&self) -> Vec<PointSpec> {
        let base = self.base_point();
        let Some(grid) = &self.sweep else {
            return vec![base];
        };
        let (a0, g0) = match &base.index {
            IndexSpec::Metamaterial { a, g } => (*a, *g),
            _ => (f64::NAN, f64::NAN),
        };
        let list = |l: &Option<Vec<f64>>, v: f64| l.clone().unwrap_or_else(|| vec![v]);
        let mut out = Vec::new();
        for &a in &list(&grid.a, a0) {
            for &g in &list(&grid.g, g0) {
                for &d_h in &list(&grid.d_h, base.stack.d_h) {
                    for &d_l in &list(&grid.d_l, base.stack.d_l) {
                        for &s in &list(&grid.scale, base.index_scale) {
                            let index = match &base.index {
                                IndexSpec::Metamaterial { .. } => IndexSpec::Metamaterial { a, g },
                                other => other.clone(),
                            };
                            out.push(PointSpec {
                                stack: StackSpec { d_h, d_l },
                                index,
                                index_scale: s,
                                cutoff: base.cutoff.clone(),
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

impl PointSpec {
    pub fn model(&self) -> Result<IndexModel> {
        let m = match &self.index {
            IndexSpec::Constant { n } => IndexModel::constant(*n)?,
            IndexSpec::SellmeierTail { c1, c2 } => IndexModel::sellmeier(*c1, *c2)?,
            IndexSpec::Table {
                path,
                rolloff_ev,
                exponent,
            } => IndexModel::tabulated(IndexTable::read_csv(path)?, *rolloff_ev, *exponent)?,
            IndexSpec::Metamaterial { a, g } => bundled_metamaterial(&MetamaterialSpec::new(*a, *g)?)?,
        };
        if self.index_scale == 1.0 {
            Ok(m)
        } else {
            m.scaled(self.index_scale)
        }
    }

    pub fn stack(&self) -> Result<Stack1D> {
        self.cutoff.validate()?;
        Stack1D::new(self.stack.d_h, self.stack.d_l, self.model()?)
    }
}
