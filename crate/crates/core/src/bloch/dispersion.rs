//! Dispersion relation of the two-layer stack and its root finding.
//!
//! The relation is cos(k_z L) = D(ω, k_ρ), with D the half-trace of the
//! one-period transfer matrix. Each layer enters through three real
//! functions of q² = (ωn/ħc)² − k_ρ²: cos(qd), sin(qd)/q and q·sin(qd),
//! continued to cosh/sinh when q² < 0. Evanescent layers are rescaled by
//! 1/cosh(κd) so that deep-evanescent cases keep full relative precision;
//! the rescaling is positive and never changes the sign of the residual.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::constants::HBAR_C;
use crate::error::{Error, Result};

use super::{KPoint, Polarization, Stack1D};

const BISECTION_STEPS: usize = 200;
/// Relative bracket width at which bisection stops.
pub(crate) const ROOT_REL_TOL: f64 = 1e-13;
/// Phase advance per scan step, rad.
const SCAN_PHASE_STEP: f64 = 0.2;
/// A local extremum of the scaled residual within this of zero is a double root.
const TOUCH_TOL: f64 = 1e-11;
/// Scaled residual at a converged bracket above which the sign change is a pole.
const POLE_TOL: f64 = 1e-3;
/// Relative step of the central difference used to polish tangential roots.
const VERTEX_STEP: f64 = 1e-6;

static SOLVES: AtomicU64 = AtomicU64::new(0);

/// Number of band scans (in ω or k_ρ) performed by this process so far.
pub fn solve_count() -> u64 {
    SOLVES.load(Ordering::Relaxed)
}

/// Per-layer transfer functions, each multiplied by `1/scale`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerResponse {
    pub c: f64,
    pub sq: f64,
    pub qs: f64,
    /// ln of the divided-out factor (0 for propagating layers).
    pub log_scale: f64,
}

impl LayerResponse {
    pub(crate) fn new(q2: f64, d: f64) -> Self {
        if q2 >= 0.0 {
            let q = q2.sqrt();
            let x = q * d;
            let (s, c) = x.sin_cos();
            let (sq, qs) = if x.abs() < 1e-3 {
                let x2 = x * x;
                (d * (1.0 - x2 / 6.0 + x2 * x2 / 120.0), q2 * d * (1.0 - x2 / 6.0))
            } else {
                (s / q, q * s)
            };
            LayerResponse {
                c,
                sq,
                qs,
                log_scale: 0.0,
            }
        } else {
            let kappa = (-q2).sqrt();
            let x = kappa * d;
            let t = x.tanh();
            let (sq, qs) = if x < 1e-3 {
                let x2 = x * x;
                (d * (1.0 - x2 / 3.0), -kappa * kappa * d * (1.0 - x2 / 3.0))
            } else {
                (t / kappa, -kappa * t)
            };
            let log_scale = x + (0.5 * (1.0 + (-2.0 * x).exp())).ln();
            LayerResponse {
                c: 1.0,
                sq,
                qs,
                log_scale,
            }
        }
    }
}

/// Everything the residual needs at one (ω, k_ρ): layer indices and responses.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Evaluated {
    pub h: LayerResponse,
    pub l: LayerResponse,
    pub p_h: f64,
    pub p_l: f64,
}

impl Evaluated {
    pub(crate) fn at(stack: &Stack1D, pol: Polarization, omega_ev: f64, k_rho: f64) -> Self {
        let k0 = omega_ev / HBAR_C;
        let n_h = stack.high.eval_unchecked(omega_ev);
        let n_l = stack.n_low;
        let kr2 = k_rho * k_rho;
        let h = LayerResponse::new(k0 * k0 * n_h * n_h - kr2, stack.d_h);
        let l = LayerResponse::new(k0 * k0 * n_l * n_l - kr2, stack.d_l);
        let (p_h, p_l) = match pol {
            Polarization::Te => (1.0, 1.0),
            Polarization::Tm => (n_h * n_h, n_l * n_l),
        };
        Evaluated { h, l, p_h, p_l }
    }

    /// Scaled half-trace D/(scale_h·scale_l).
    #[inline]
    pub(crate) fn half_trace_scaled(&self) -> f64 {
        let (h, l) = (&self.h, &self.l);
        let r = self.p_h / self.p_l;
        h.c * l.c - 0.5 * (r * h.sq * l.qs + h.qs * l.sq / r)
    }

    #[inline]
    pub(crate) fn log_scale(&self) -> f64 {
        self.h.log_scale + self.l.log_scale
    }

    /// Residual cos(k_z L) − D divided by the positive layer scales.
    #[inline]
    pub(crate) fn residual_scaled(&self, cos_kzl: f64) -> f64 {
        let ls = self.log_scale();
        let c = if ls == 0.0 { cos_kzl } else { cos_kzl * (-ls).exp() };
        c - self.half_trace_scaled()
    }
}

/// cos(k_z L) − [cos(k_h d_h)cos(k_l d_l) − ½(r + 1/r) sin(k_h d_h) sin(k_l d_l)],
/// with r = k_l/k_h (TE) or n_h²k_l/(n_l²k_h) (TM). Always real.
pub fn dispersion_residual(omega_ev: f64, kpoint: KPoint, stack: &Stack1D) -> Result<f64> {
    if !omega_ev.is_finite() || omega_ev < 0.0 {
        return Err(Error::InvalidInput(format!("ω must be finite and >= 0, got {omega_ev}")));
    }
    kpoint.validate(stack)?;
    let e = Evaluated::at(stack, kpoint.pol, omega_ev, kpoint.k_rho);
    let cos_kzl = (kpoint.k_z * stack.period()).cos();
    Ok(e.residual_scaled(cos_kzl) * e.log_scale().exp())
}

/// Half-trace at normal incidence (k_ρ = 0, identical for TE and TM).
pub(crate) fn normal_half_trace(stack: &Stack1D, omega_ev: f64) -> f64 {
    let e = Evaluated::at(stack, Polarization::Te, omega_ev, 0.0);
    e.half_trace_scaled() * e.log_scale().exp()
}

/// Roots of a scan, plus the number of tangential (double) roots found.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RootSet {
    pub roots: Vec<f64>,
    pub touches: usize,
}

/// Finds all roots of `f` on (x0, x1] by stepping with `step(x)`, bisecting
/// sign changes and refining local extrema that approach zero.
pub(crate) fn scan_roots<F, S>(mut f: F, x0: f64, x1: f64, mut step: S) -> Result<RootSet>
where
    F: FnMut(f64) -> f64,
    S: FnMut(f64) -> f64,
{
    let mut out = RootSet::default();
    if !(x1 > x0) {
        return Ok(out);
    }
    let mut xp = x0;
    let mut fp = f(x0);
    let mut prev2: Option<(f64, f64)> = None;
    // one step past x1 so that a dip just below x1 still has a right neighbour
    let mut x_end = f64::INFINITY;
    while xp < x_end {
        let dx = step(xp).max((x1 - x0) * 1e-9);
        let x = if xp < x1 { (xp + dx).min(x1) } else { xp + dx };
        if xp >= x1 {
            x_end = x;
        }
        let fx = f(x);
        if fx == 0.0 {
            out.roots.push(x);
            prev2 = None;
        } else if fp != 0.0 && fp.signum() != fx.signum() {
            out.roots.extend(bisect(&mut f, xp, x, fp, fx)?);
            prev2 = None;
        } else if let Some((xpp, fpp)) = prev2 {
            if fp != 0.0 && fpp.signum() == fp.signum() && fp.abs() < fpp.abs() && fp.abs() <= fx.abs() {
                refine_extremum(&mut f, (xpp, fpp), (xp, fp), (x, fx), &mut out)?;
            }
        }
        if fx != 0.0 && !(fp != 0.0 && fp.signum() != fx.signum()) {
            prev2 = Some((xp, fp));
        }
        xp = x;
        fp = fx;
    }
    out.roots.retain(|&r| r <= x1);
    out.roots.sort_by(f64::total_cmp);
    Ok(out)
}

fn refine_extremum<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: (f64, f64),
    b: (f64, f64),
    c: (f64, f64),
    out: &mut RootSet,
) -> Result<()> {
    let s = b.1.signum();
    // Parabola through the three samples: only chase extrema that may reach zero.
    let (x0, x1, x2) = (a.0, b.0, c.0);
    let (y0, y1, y2) = (s * a.1, s * b.1, s * c.1);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    // a sharp dip relative to its neighbours is always refined: close root
    // pairs make the parabola a poor model
    let sharp = y1 < 0.25 * y0.min(y2);
    if curv > 0.0 && !sharp {
        let slope_mid = d01 + curv * (x1 - x0);
        let vertex = y1 - slope_mid * slope_mid / (4.0 * curv);
        if vertex > 0.3 * y1 {
            return Ok(());
        }
    }
    // golden-section search for the minimum of s·f on [x0, x2]
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (x0, x2);
    let mut u = hi - g * (hi - lo);
    let mut v = lo + g * (hi - lo);
    let mut fu = s * f(u);
    let mut fv = s * f(v);
    for _ in 0..200 {
        if fu <= 0.0 || fv <= 0.0 || (hi - lo) <= 1e-14 * hi.abs().max(1e-300) {
            break;
        }
        if fu < fv {
            hi = v;
            v = u;
            fv = fu;
            u = hi - g * (hi - lo);
            fu = s * f(u);
        } else {
            lo = u;
            u = v;
            fu = fv;
            v = lo + g * (hi - lo);
            fv = s * f(v);
        }
    }
    let (xm, fm) = if fu < fv { (u, fu) } else { (v, fv) };
    if fm < -TOUCH_TOL {
        out.roots.extend(bisect(f, x0, xm, a.1, s * fm)?);
        out.roots.extend(bisect(f, xm, x2, s * fm, c.1)?);
    } else if fm <= TOUCH_TOL {
        let xm = polish_vertex(f, s, xm, x0, x2);
        out.roots.push(xm);
        out.roots.push(xm);
        out.touches += 1;
    }
    Ok(())
}

/// Sharpens a minimum of s·f by bisecting the sign of its central difference.
fn polish_vertex<F: FnMut(f64) -> f64>(f: &mut F, s: f64, xm: f64, x0: f64, x2: f64) -> f64 {
    let h = VERTEX_STEP * xm.abs();
    let mut slope = |x: f64| s * (f(x + h) - f(x - h));
    let (mut lo, mut hi) = ((xm - h).max(x0), (xm + h).min(x2));
    if !(slope(lo) < 0.0 && slope(hi) > 0.0) {
        return xm;
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn bisect<F: FnMut(f64) -> f64>(f: &mut F, mut lo: f64, mut hi: f64, mut flo: f64, mut fhi: f64) -> Result<Option<f64>> {
    let s_lo = flo.signum();
    let (lo0, hi0) = (lo, hi);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= ROOT_REL_TOL * mid.abs() || mid <= lo || mid >= hi {
            // a sign change through a pole leaves both ends large
            return Ok((flo.abs().min(fhi.abs()) <= POLE_TOL).then_some(mid));
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(Some(mid));
        }
        if fm.signum() == s_lo {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    Err(Error::RootNotConverged {
        lo: lo0,
        hi: hi0,
        steps: BISECTION_STEPS,
    })
}

/// Band solver at fixed (k_z, polarization) for frequencies up to `omega_max`.
#[derive(Debug, Clone)]
pub struct BandSolver<'a> {
    stack: &'a Stack1D,
    pol: Polarization,
    k_z: f64,
    cos_kzl: f64,
    omega_max: f64,
    /// Upper bound of n_h on (0, ω_max].
    n_sup: f64,
}

impl<'a> BandSolver<'a> {
    pub fn new(stack: &'a Stack1D, pol: Polarization, k_z: f64, omega_max: f64) -> Self {
        let n_sup = stack
            .high
            .max_index_from(omega_max * 1e-6)
            .max(stack.n_low)
            .max(sampled_max_index(stack, omega_max));
        BandSolver {
            stack,
            pol,
            k_z,
            cos_kzl: (k_z * stack.period()).cos(),
            omega_max,
            n_sup,
        }
    }

    pub fn polarization(&self) -> Polarization {
        self.pol
    }

    pub fn k_z(&self) -> f64 {
        self.k_z
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    /// Scaled residual at (ω, k_ρ); same sign as the true residual.
    #[inline]
    pub fn residual(&self, omega_ev: f64, k_rho: f64) -> f64 {
        Evaluated::at(self.stack, self.pol, omega_ev, k_rho).residual_scaled(self.cos_kzl)
    }

    fn omega_step(&self, omega: f64, k_rho: f64) -> f64 {
        let st = self.stack;
        let w = omega.max(self.omega_max * 1e-9);
        let k0 = w / HBAR_C;
        let n_h = st.high.eval_unchecked(w);
        let n_g = if st.high.is_dispersive() {
            let dw = 1e-6 * w;
            let n2 = st.high.eval_unchecked(w + dw);
            (n_h + w * (n2 - n_h) / dw).abs().max(n_h)
        } else {
            n_h
        };
        let rate = |n: f64, ng: f64, d: f64| {
            let q = (k0 * k0 * n * n - k_rho * k_rho).abs().sqrt();
            d * k0 * n * ng / (HBAR_C * q.max(1.0 / d))
        };
        let total = rate(n_h, n_g, st.d_h) + rate(st.n_low, st.n_low, st.d_l);
        (SCAN_PHASE_STEP / total).min(self.omega_max / 16.0)
    }

    /// All band frequencies in (0, ω_max] at transverse wavenumber `k_rho`.
    pub fn roots(&self, k_rho: f64) -> Result<RootSet> {
        SOLVES.fetch_add(1, Ordering::Relaxed);
        let floor = self.omega_max * 1e-10;
        let start = (HBAR_C * k_rho / self.n_sup * (1.0 - 1e-9)).max(floor);
        if start >= self.omega_max {
            return Ok(RootSet::default());
        }
        scan_roots(
            |w| self.residual(w, k_rho),
            start,
            self.omega_max,
            |w| self.omega_step(w, k_rho),
        )
    }

    /// Transverse wavenumbers where some band crosses ω_max, ascending.
    pub fn cutoff_crossings(&self) -> Result<Vec<f64>> {
        SOLVES.fetch_add(1, Ordering::Relaxed);
        let st = self.stack;
        let w = self.omega_max;
        let k0 = w / HBAR_C;
        let n_top = st.high.eval_unchecked(w).max(st.n_low);
        let top = k0 * n_top * (1.0 + 1e-12);
        let step = |kr: f64| {
            let rate = |n: f64, d: f64| {
                let q = (k0 * k0 * n * n - kr * kr).abs().sqrt();
                d * kr / q.max(1.0 / d)
            };
            let total = rate(st.high.eval_unchecked(w), st.d_h) + rate(st.n_low, st.d_l);
            (SCAN_PHASE_STEP / total.max(1e-300)).min(top / 32.0)
        };
        let set = scan_roots(|kr| self.residual(w, kr), 0.0, top, step)?;
        Ok(set.roots)
    }
}

fn sampled_max_index(stack: &Stack1D, omega_max: f64) -> f64 {
    (1..=256)
        .map(|i| stack.high.eval_unchecked(omega_max * i as f64 / 256.0))
        .fold(1.0, f64::max)
}

/// Band frequencies (eV) at `kpoint` in (0, ω_max], ascending. Degenerate
/// (tangential) roots appear twice.
pub fn solve_bands(kpoint: KPoint, stack: &Stack1D, omega_max: f64) -> Result<Vec<f64>> {
    if !(omega_max.is_finite() && omega_max > 0.0) {
        return Err(Error::InvalidInput(format!("ω_max must be > 0, got {omega_max}")));
    }
    kpoint.validate(stack)?;
    stack.validate()?;
    let solver = BandSolver::new(stack, kpoint.pol, kpoint.k_z, omega_max);
    Ok(solver.roots(kpoint.k_rho)?.roots)
}

/// Frequencies in (0, ω_max] where the normal-incidence half-trace has a
/// local extremum, with the extremal value.
pub(crate) fn normal_incidence_extrema(stack: &Stack1D, omega_max: f64) -> Vec<(f64, f64)> {
    let solver = BandSolver::new(stack, Polarization::Te, 0.0, omega_max);
    let mut out = Vec::new();
    let mut w_prev = omega_max * 1e-9;
    let mut d_prev = normal_half_trace(stack, w_prev);
    let mut slope_prev: f64 = 0.0;
    while w_prev < omega_max {
        let w = (w_prev + solver.omega_step(w_prev, 0.0)).min(omega_max);
        let d = normal_half_trace(stack, w);
        let slope = d - d_prev;
        if slope_prev != 0.0 && slope != 0.0 && slope.signum() != slope_prev.signum() {
            // extremum in the last two steps; golden-section on ±D
            let s = -slope_prev.signum();
            let (mut lo, mut hi) = (w_prev - (w - w_prev) * 2.0, w);
            lo = lo.max(omega_max * 1e-9);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..120 {
                let u = hi - g * (hi - lo);
                let v = lo + g * (hi - lo);
                if s * normal_half_trace(stack, u) < s * normal_half_trace(stack, v) {
                    hi = v;
                } else {
                    lo = u;
                }
                if hi - lo < 1e-13 * hi {
                    break;
                }
            }
            let wm = 0.5 * (lo + hi);
            out.push((wm, normal_half_trace(stack, wm)));
        }
        slope_prev = slope;
        w_prev = w;
        d_prev = d;
    }
    out
}
