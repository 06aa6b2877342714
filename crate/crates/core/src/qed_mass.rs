//! Photonic-crystal correction to the electron electromagnetic mass.
//!
//! The correction operator is δm = A + B·cos²Θ, Θ being the angle between
//! the electron momentum and the stack axis. Both coefficients are
//! Brillouin-zone integrals over Bloch modes below the energy cutoff Λ,
//! with the vacuum self-energy (same Λ) subtracted from A.
//!
//! Integration layout: k_z cells on [−π/L, π/L] split at the points where
//! the integrand is non-smooth; for every k_z node and polarization the
//! k_ρ integral is split where a band crosses Λ or where two bands merge.
//! Each cell uses Gauss–Legendre of order N; the result at 2N gives the
//! refinement estimate.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{mode_profile, normal_half_trace, normal_incidence_extrema, solve_count, BandSolver, KPoint,
    ModeWeights, Polarization, Stack1D};
use crate::constants::{vacuum_mass, ALPHA, HBAR_C};
use crate::error::{Error, Result};
use crate::materials::IndexModel;
use crate::quad::{pairwise_sum, GaussLegendre};

/// Default energy cutoff, eV.
pub const DEFAULT_LAMBDA_EV: f64 = 35.0;
/// Refinement delta above which a result is reported as not converged.
pub const CONVERGENCE_LIMIT: f64 = 0.05;
/// Number of energy shells in the diagnostics.
pub const SHELLS: usize = 8;

const KZ_GRADING_RATIO: f64 = 0.15;
const KZ_GRADING_LEVELS: usize = 8;
const KR_GRADING_RATIO: f64 = 3.0;
const FOLD_SPLIT_DEPTH: usize = 8;

/// Cutoff and quadrature settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffConfig {
    /// Energy cutoff Λ, eV.
    pub lambda_ev: f64,
    /// Gauss–Legendre order per k_ρ cell.
    #[serde(default = "default_order")]
    pub n_rho: usize,
    /// Gauss–Legendre order per k_z cell.
    #[serde(default = "default_order")]
    pub n_z: usize,
    /// Smallest G truncation |m| for Fourier sums.
    #[serde(default = "default_order")]
    pub m_max: usize,
    /// Optional cap on the number of bands per k-point.
    #[serde(default)]
    pub band_max: Option<usize>,
}

fn default_order() -> usize {
    8
}

impl Default for CutoffConfig {
    fn default() -> Self {
        CutoffConfig::new(DEFAULT_LAMBDA_EV)
    }
}

impl CutoffConfig {
    pub fn new(lambda_ev: f64) -> Self {
        CutoffConfig {
            lambda_ev,
            n_rho: 8,
            n_z: 8,
            m_max: 8,
            band_max: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_ev.is_finite() && self.lambda_ev > 0.0) {
            return Err(Error::InvalidInput(format!("Λ must be > 0, got {}", self.lambda_ev)));
        }
        if self.n_rho < 8 || self.n_z < 8 {
            return Err(Error::InvalidInput(format!(
                "quadrature orders must be >= 8 (n_rho={}, n_z={})",
                self.n_rho, self.n_z
            )));
        }
        if self.m_max < 1 {
            return Err(Error::InvalidInput("m_max must be >= 1".into()));
        }
        if self.band_max == Some(0) {
            return Err(Error::InvalidInput("band_max must be >= 1".into()));
        }
        Ok(())
    }

    /// Largest transverse wavenumber of any mode below Λ: max ω·n(ω)/ħc on (0, Λ].
    pub fn k_rho_max(&self, stack: &Stack1D) -> f64 {
        let lam = self.lambda_ev;
        let sampled = (1..=1024)
            .map(|i| {
                let w = lam * i as f64 / 1024.0;
                w * stack.high.eval_unchecked(w)
            })
            .fold(0.0, f64::max);
        let knots = match &stack.high {
            crate::materials::IndexModel::Tabulated { table, .. } => table
                .samples()
                .filter(|&(w, _)| w <= lam)
                .map(|(w, _)| w * stack.high.eval_unchecked(w))
                .fold(0.0, f64::max),
            _ => 0.0,
        };
        sampled.max(knots).max(lam * stack.n_low) / HBAR_C * 1.02
    }
}

/// Contribution of one energy shell [ω_lo, ω_hi) to A and B, vacuum part removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    pub omega_lo_ev: f64,
    pub omega_hi_ev: f64,
    pub a_ev: f64,
    pub b_ev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// (|ΔA| + |ΔB|)/(|A| + |B|) between orders N and 2N.
    pub refinement_delta: f64,
    pub converged: bool,
    /// A, B at order N.
    pub coarse_a_ev: f64,
    pub coarse_b_ev: f64,
    /// Richardson extrapolation assuming second-order convergence.
    pub richardson_a_ev: f64,
    pub richardson_b_ev: f64,
    pub shells: Vec<Shell>,
    /// Relative mismatch between the k_z > 0 and k_z < 0 halves of the zone.
    pub kz_symmetry: f64,
    pub solves: u64,
    pub cross_term_residual: Option<f64>,
}

/// A and B in eV, plus diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassCoefficients {
    #[serde(rename = "A_ev")]
    pub a_ev: f64,
    #[serde(rename = "B_ev")]
    pub b_ev: f64,
    pub tail_ev: f64,
    pub lambda_ev: f64,
    pub diagnostics: Diagnostics,
}

/// JSON report layout of a mass computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassReport {
    #[serde(rename = "A_ev")]
    pub a_ev: f64,
    #[serde(rename = "B_ev")]
    pub b_ev: f64,
    pub tail_ev: f64,
    pub lambda_ev: f64,
    pub refinement_delta: f64,
    pub shells: Vec<Shell>,
    pub converged: bool,
    pub cross_term_residual: Option<f64>,
    pub kz_symmetry: f64,
}

impl MassCoefficients {
    /// Coefficients given directly, e.g. for testing downstream algebra.
    pub fn from_ab(a_ev: f64, b_ev: f64) -> Self {
        MassCoefficients {
            a_ev,
            b_ev,
            tail_ev: 0.0,
            lambda_ev: 0.0,
            diagnostics: Diagnostics {
                refinement_delta: 0.0,
                converged: true,
                coarse_a_ev: a_ev,
                coarse_b_ev: b_ev,
                richardson_a_ev: a_ev,
                richardson_b_ev: b_ev,
                shells: Vec::new(),
                kz_symmetry: 0.0,
                solves: 0,
                cross_term_residual: None,
            },
        }
    }

    pub fn check_converged(&self) -> Result<()> {
        if self.diagnostics.converged {
            Ok(())
        } else {
            Err(Error::NotConverged {
                delta: self.diagnostics.refinement_delta,
                limit: CONVERGENCE_LIMIT,
            })
        }
    }

    pub fn report(&self) -> MassReport {
        MassReport {
            a_ev: self.a_ev,
            b_ev: self.b_ev,
            tail_ev: self.tail_ev,
            lambda_ev: self.lambda_ev,
            refinement_delta: self.diagnostics.refinement_delta,
            shells: self.diagnostics.shells.clone(),
            converged: self.diagnostics.converged,
            cross_term_residual: self.diagnostics.cross_term_residual,
            kz_symmetry: self.diagnostics.kz_symmetry,
        }
    }
}

/// Unit vector of the electron momentum: polar angle Θ to the stack axis, azimuth Φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectronDirection {
    pub theta: f64,
    pub phi: f64,
}

impl ElectronDirection {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(theta.is_finite() && phi.is_finite()) || !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidInput(format!("Θ must lie in [0, π], got {theta}")));
        }
        Ok(ElectronDirection { theta, phi })
    }

    fn unit(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

/// δm along `dir`: A + B·cos²Θ.
pub fn delta_m(coeffs: &MassCoefficients, dir: ElectronDirection) -> f64 {
    let c = dir.theta.cos();
    coeffs.a_ev + coeffs.b_ev * c * c
}

/// Order-of-magnitude estimate (α/π)·Λ·⟨n⟩².
pub fn estimate_mass_correction(mean_index: f64, lambda_ev: f64) -> Result<f64> {
    if !(mean_index.is_finite() && mean_index >= 1.0) {
        return Err(Error::InvalidInput(format!("⟨n⟩ must be >= 1, got {mean_index}")));
    }
    if !(lambda_ev.is_finite() && lambda_ev >= 0.0) {
        return Err(Error::InvalidInput(format!("Λ must be >= 0, got {lambda_ev}")));
    }
    Ok(ALPHA / PI * lambda_ev * mean_index * mean_index)
}

/// Analytic ω > Λ remainder, (2α/3π)·C1·d_h/((d_h + d_l)·Λ), eV.
pub fn he_tail(c1: f64, d_h: f64, d_l: f64, lambda_ev: f64) -> f64 {
    2.0 * ALPHA / (3.0 * PI) * c1 * d_h / ((d_h + d_l) * lambda_ev)
}

/// Sums over one k_z node: A and B weights per shell.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct ShellSums {
    a: [f64; SHELLS],
    b: [f64; SHELLS],
}

impl ShellSums {
    fn add_scaled(&mut self, other: &ShellSums, w: f64) {
        for i in 0..SHELLS {
            self.a[i] += w * other.a[i];
            self.b[i] += w * other.b[i];
        }
    }

    fn total(&self) -> (f64, f64) {
        (pairwise_sum(&self.a), pairwise_sum(&self.b))
    }
}

struct NodeData {
    k_rho: f64,
    count: usize,
    sums: ShellSums,
}

/// k_ρ integration at fixed (k_z, polarization).
struct Slice<'a> {
    stack: &'a Stack1D,
    solver: BandSolver<'a>,
    lambda: f64,
    band_max: Option<usize>,
    k_rho_max: f64,
    rule: &'a GaussLegendre,
}

impl Slice<'_> {
    fn node(&self, k_rho: f64) -> Result<NodeData> {
        let mut roots = self.solver.roots(k_rho)?.roots;
        if let Some(cap) = self.band_max {
            roots.truncate(cap);
        }
        let kp = KPoint::new(k_rho, self.solver.k_z(), self.solver.polarization());
        let mut sums = ShellSums::default();
        for &w in &roots {
            let profile = mode_profile(w, kp, self.stack)?;
            let weights = ModeWeights::of(&profile);
            let k0 = w / HBAR_C;
            let f = k_rho / (k0 * k0);
            let shell = ((w / self.lambda * SHELLS as f64) as usize).min(SHELLS - 1);
            sums.a[shell] += f * weights.w_a;
            sums.b[shell] += f * weights.w_b;
        }
        Ok(NodeData {
            k_rho,
            count: roots.len(),
            sums,
        })
    }

    fn count(&self, k_rho: f64) -> Result<usize> {
        let n = self.solver.roots(k_rho)?.roots.len();
        Ok(self.band_max.map_or(n, |cap| n.min(cap)))
    }

    fn breakpoints(&self) -> Result<Vec<f64>> {
        let top = self.k_rho_max;
        let mut pts = vec![0.0, top];
        pts.extend(self.solver.cutoff_crossings()?.into_iter().filter(|&k| k > 0.0 && k < top));
        pts.sort_by(f64::total_cmp);
        // geometric grading of the first cell toward the k_ρ ~ |k_z| peak
        let first = pts[1];
        let mut k = (0.25 * self.solver.k_z().abs()).max(1e-6 * top);
        while k < first / KR_GRADING_RATIO {
            pts.push(k);
            k *= KR_GRADING_RATIO;
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * top);
        Ok(pts)
    }

    fn integrate(&self) -> Result<ShellSums> {
        let pts = self.breakpoints()?;
        let mut total = ShellSums::default();
        for w in pts.windows(2) {
            let cell = self.cell(w[0], w[1], 0)?;
            total.add_scaled(&cell, 1.0);
        }
        Ok(total)
    }

    /// One k_ρ cell, split further where the band count changes inside it.
    fn cell(&self, a: f64, b: f64, depth: usize) -> Result<ShellSums> {
        let nodes: Vec<(f64, f64)> = self.rule.mapped(a, b).collect();
        let data: Vec<NodeData> = nodes.iter().map(|&(x, _)| self.node(x)).collect::<Result<_>>()?;
        let h = 1e-7 * (b - a);
        let mut seq = Vec::with_capacity(data.len() + 2);
        seq.push((a + h, self.count(a + h)?));
        seq.extend(data.iter().map(|d| (d.k_rho, d.count)));
        seq.push((b - h, self.count(b - h)?));
        let change = seq.windows(2).position(|p| p[0].1 != p[1].1);
        if let (Some(i), true) = (change, depth < FOLD_SPLIT_DEPTH) {
            let (mut lo, mut hi) = (seq[i].0, seq[i + 1].0);
            let c_lo = seq[i].1;
            while hi - lo > 1e-10 * hi.max(1e-12) {
                let mid = 0.5 * (lo + hi);
                if self.count(mid)? == c_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let split = 0.5 * (lo + hi);
            let mut left = self.cell(a, split, depth + 1)?;
            let right = self.cell(split, b, depth + 1)?;
            left.add_scaled(&right, 1.0);
            return Ok(left);
        }
        let mut out = ShellSums::default();
        for (d, &(_, w)) in data.iter().zip(&nodes) {
            out.add_scaled(&d.sums, w);
        }
        Ok(out)
    }
}

/// k_z cell edges on [−π/L, π/L].
fn kz_breakpoints(stack: &Stack1D, lambda: f64) -> Vec<f64> {
    let l = stack.period();
    let edge = stack.zone_edge();
    let mut pos = vec![0.0, edge];
    let mut add = |d: f64| {
        if d.abs() < 1.0 - 1e-12 {
            pos.push(d.acos() / l);
        }
    };
    for (_, d) in normal_incidence_extrema(stack, lambda) {
        add(d);
    }
    add(normal_half_trace(stack, lambda));
    pos.sort_by(f64::total_cmp);
    pos.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * edge);
    // grade the cell next to k_z = 0 (logarithmic light-cone singularity)
    let graded = crate::quad::graded_cells(0.0, pos[1], KZ_GRADING_RATIO, KZ_GRADING_LEVELS);
    pos.extend_from_slice(&graded[1..graded.len() - 1]);
    pos.sort_by(f64::total_cmp);
    let mut all: Vec<f64> = pos.iter().rev().filter(|&&k| k > 0.0).map(|k| -k).collect();
    all.extend(pos);
    all
}

struct Pass {
    a: f64,
    b: f64,
    shells: Vec<Shell>,
    symmetry: f64,
}

fn run_pass(stack: &Stack1D, cfg: &CutoffConfig, scale: usize) -> Result<Pass> {
    let lambda = cfg.lambda_ev;
    let rule_z = GaussLegendre::new(cfg.n_z * scale);
    let rule_r = GaussLegendre::new(cfg.n_rho * scale);
    let k_rho_max = cfg.k_rho_max(stack);
    let edges = kz_breakpoints(stack, lambda);
    let mut jobs = Vec::new();
    for w in edges.windows(2) {
        for (kz, wt) in rule_z.mapped(w[0], w[1]) {
            for pol in Polarization::BOTH {
                jobs.push((kz, wt, pol));
            }
        }
    }
    let results: Vec<ShellSums> = jobs
        .par_iter()
        .map(|&(kz, wt, pol)| {
            let slice = Slice {
                stack,
                solver: BandSolver::new(stack, pol, kz, lambda),
                lambda,
                band_max: cfg.band_max,
                k_rho_max,
                rule: &rule_r,
            };
            let mut s = ShellSums::default();
            s.add_scaled(&slice.integrate()?, wt);
            Ok(s)
        })
        .collect::<Result<_>>()?;

    let pref = ALPHA / PI * HBAR_C;
    let vac_shell = vacuum_mass(lambda) / SHELLS as f64;
    let shells: Vec<Shell> = (0..SHELLS)
        .map(|i| {
            let a: Vec<f64> = results.iter().map(|r| r.a[i]).collect();
            let b: Vec<f64> = results.iter().map(|r| r.b[i]).collect();
            Shell {
                omega_lo_ev: lambda * i as f64 / SHELLS as f64,
                omega_hi_ev: lambda * (i + 1) as f64 / SHELLS as f64,
                a_ev: pref * pairwise_sum(&a) - vac_shell,
                b_ev: pref * pairwise_sum(&b),
            }
        })
        .collect();
    let a = pairwise_sum(&shells.iter().map(|s| s.a_ev).collect::<Vec<_>>());
    let b = pairwise_sum(&shells.iter().map(|s| s.b_ev).collect::<Vec<_>>());

    // k_z > 0 against k_z < 0
    let half = |sign: f64| {
        let v: Vec<f64> = jobs
            .iter()
            .zip(&results)
            .filter(|((kz, _, _), _)| kz * sign > 0.0)
            .map(|(_, r)| r.total().0 + r.total().1.abs())
            .collect();
        pairwise_sum(&v)
    };
    let (p, n) = (half(1.0), half(-1.0));
    let symmetry = (p - n).abs() / p.abs().max(n.abs()).max(f64::MIN_POSITIVE);
    Ok(Pass { a, b, shells, symmetry })
}

/// A and B for `stack` below the cutoff Λ, with the high-energy tail added to A.
pub fn compute_ab(stack: &Stack1D, cfg: &CutoffConfig) -> Result<MassCoefficients> {
    stack.validate()?;
    cfg.validate()?;
    if let IndexModel::SellmeierTail { .. } = stack.high {
        if stack.high.is_dispersive() {
            return Err(Error::InvalidInput(
                "a 1 + c1/ω² + c2/ω⁴ index diverges as ω → 0 and puts infinitely many bands below Λ; \
                 use it only as a high-energy tail of a tabulated model"
                    .into(),
            ));
        }
    }
    check_band_count(stack, cfg)?;
    let solves0 = solve_count();
    let coarse = run_pass(stack, cfg, 1)?;
    let fine = run_pass(stack, cfg, 2)?;
    let tail = he_tail(stack.high.tail_c1(cfg.lambda_ev), stack.d_h, stack.d_l, cfg.lambda_ev);
    let floor = 1e-3 * vacuum_mass(cfg.lambda_ev);
    let delta = ((fine.a - coarse.a).abs() + (fine.b - coarse.b).abs()) / (fine.a.abs() + fine.b.abs()).max(floor);
    let rich = |f: f64, c: f64| f + (f - c) / 3.0;
    Ok(MassCoefficients {
        a_ev: fine.a + tail,
        b_ev: fine.b,
        tail_ev: tail,
        lambda_ev: cfg.lambda_ev,
        diagnostics: Diagnostics {
            refinement_delta: delta,
            converged: delta <= CONVERGENCE_LIMIT,
            coarse_a_ev: coarse.a + tail,
            coarse_b_ev: coarse.b,
            richardson_a_ev: rich(fine.a, coarse.a) + tail,
            richardson_b_ev: rich(fine.b, coarse.b),
            shells: fine.shells,
            kz_symmetry: fine.symmetry,
            solves: solve_count() - solves0,
            cross_term_residual: None,
        },
    })
}

/// Empty-lattice check that the band scan misses no band below Λ.
fn check_band_count(stack: &Stack1D, cfg: &CutoffConfig) -> Result<()> {
    if stack.high.is_dispersive() {
        return Ok(());
    }
    let kp = KPoint::new(0.0, 0.5 * stack.zone_edge(), Polarization::Te);
    let found = crate::bloch::solve_bands(kp, stack, cfg.lambda_ev)?.len() as f64;
    let est = stack.band_count_estimate(cfg.lambda_ev);
    if (found - est).abs() > 1.0 {
        return Err(Error::BandCount(format!("found {found} bands below Λ, empty-lattice estimate {est:.2}")));
    }
    Ok(())
}

/// Largest azimuthally integrated TE×TM cross term relative to the
/// diagonal terms, over the sampled (k_ρ, k_z) points, all band pairs and
/// |m| ≤ m_max. `azimuth_points` sets the φ grid.
pub fn cross_term_residual(
    stack: &Stack1D,
    cfg: &CutoffConfig,
    samples: &[(f64, f64)],
    dir: ElectronDirection,
    azimuth_points: usize,
) -> Result<f64> {
    let ip = dir.unit();
    let mut worst: f64 = 0.0;
    for &(kr, kz) in samples {
        let modes = |pol| -> Result<Vec<_>> {
            let kp = KPoint::new(kr, kz, pol);
            crate::bloch::solve_bands(kp, stack, cfg.lambda_ev)?
                .into_iter()
                .map(|w| {
                    let p = mode_profile(w, kp, stack)?;
                    Ok((w / HBAR_C, p))
                })
                .collect()
        };
        let te = modes(Polarization::Te)?;
        let tm = modes(Polarization::Tm)?;
        for (w1, p1) in &te {
            for (w2, p2) in &tm {
                for m in -(cfg.m_max as i64)..=cfg.m_max as i64 {
                    let k = kz + stack.g(m);
                    let kg = (k * k + kr * kr).sqrt();
                    let c1 = p1.coefficient(k);
                    let c2 = p2.coefficient(k);
                    // amplitudes along s = ŷ and p = (−K, 0, k_ρ)/|k| in the k_ρ ∥ x̂ frame
                    let e1 = c1[1];
                    let e2 = (-k * c2[0] + kr * c2[2]) / kg;
                    let (mut cross, mut diag) = (Vec::new(), Vec::new());
                    for j in 0..azimuth_points {
                        let phi = 2.0 * PI * j as f64 / azimuth_points as f64;
                        let (s, c) = phi.sin_cos();
                        let eps1 = [-s, c, 0.0];
                        let eps2 = [-k * c / kg, -k * s / kg, kr / kg];
                        let d1: f64 = (0..3).map(|i| ip[i] * eps1[i]).sum();
                        let d2: f64 = (0..3).map(|i| ip[i] * eps2[i]).sum();
                        cross.push(2.0 * (d1 * d2 * e1 * e2.conj()).re / (w1 * w2));
                        diag.push(d1 * d1 * e1.norm_sqr() / (w1 * w1) + d2 * d2 * e2.norm_sqr() / (w2 * w2));
                    }
                    let cr = pairwise_sum(&cross).abs();
                    let dg = pairwise_sum(&diag);
                    if dg > 1e-300 {
                        worst = worst.max(cr / dg);
                    }
                }
            }
        }
    }
    Ok(worst)
}
