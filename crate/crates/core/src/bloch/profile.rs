//! Piecewise plane-wave mode profiles and their Fourier coefficients.
//!
//! In each layer a field component is stored as
//! `C(s) = A·e^{iqs} + B·e^{iq(d−s)}`, with `s` measured from the layer's
//! left face. Both exponentials stay bounded for propagating (real q) and
//! evanescent (q = iκ) layers, so deep-evanescent modes do not overflow.

use num_complex::Complex64;

use crate::constants::HBAR_C;
use crate::error::{Error, Result};

use super::dispersion::{Evaluated, LayerResponse};
use super::{KPoint, Polarization, Stack1D};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
/// Scaled residual accepted as "on the band".
const ON_BAND_TOL: f64 = 1e-8;
/// Layers with κd above this switch the interface solve to the Dirichlet-to-Neumann form.
const DTN_THRESHOLD: f64 = 3.0;
/// Relative ω error tolerated on top of `ON_BAND_TOL`, for steep residuals.
const ON_BAND_REL_OMEGA: f64 = 1e-11;
/// Relative tail below which the Fourier expansion is considered complete.
pub const FOURIER_TAIL_TOL: f64 = 1e-6;
const FOURIER_M_CAP: usize = 1 << 20;

/// One layer of a mode: position, wavenumber and component amplitudes (x, y, z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerField {
    pub z0: f64,
    pub thickness: f64,
    /// Longitudinal wavenumber: real, or positive imaginary when evanescent.
    pub q: Complex64,
    pub eps: f64,
    /// `[A, B]` per Cartesian component.
    pub amplitudes: [[Complex64; 2]; 3],
}

impl LayerField {
    /// Field at local coordinate `s ∈ [0, d]`.
    pub fn field_local(&self, s: f64) -> [Complex64; 3] {
        let e1 = (I * self.q * s).exp();
        let e2 = (I * self.q * (self.thickness - s)).exp();
        self.amplitudes.map(|[a, b]| a * e1 + b * e2)
    }

    /// ∫₀^d |C|² ds for component `c`.
    pub fn component_norm(&self, c: usize) -> f64 {
        let [a, b] = self.amplitudes[c];
        let d = self.thickness;
        let q = self.q;
        let direct = (a.norm_sqr() + b.norm_sqr()) * ej(Complex64::new(0.0, 0.0), I * (q - q.conj()), d).re;
        let cross = a * b.conj() * ej(-I * q.conj() * d, I * (q + q.conj()), d);
        direct + 2.0 * cross.re
    }

    /// ∫₀^d C(s)·e^{−iK(z0+s)} ds for every component.
    pub fn transform(&self, k: f64) -> [Complex64; 3] {
        let d = self.thickness;
        let q = self.q;
        let phase = Complex64::new(0.0, -k * self.z0).exp();
        let ja = ej(Complex64::new(0.0, 0.0), I * (q - k), d);
        let jb = ej(I * q * d, -I * (q + k), d);
        self.amplitudes.map(|[a, b]| phase * (a * ja + b * jb))
    }
}

/// ∫₀^d exp(pre + lam·s) ds.
fn ej(pre: Complex64, lam: Complex64, d: f64) -> Complex64 {
    let x = lam * d;
    if x.norm() < 1e-4 {
        pre.exp() * d * (1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0)
    } else {
        ((pre + x).exp() - pre.exp()) / lam
    }
}

/// A normalized Bloch mode over one period `[0, L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeProfile {
    pub kpoint: KPoint,
    pub omega_ev: f64,
    pub period: f64,
    /// High-index layer first.
    pub layers: [LayerField; 2],
}

impl ModeProfile {
    /// E(z) for any z, using E(z + L) = e^{ik_z L} E(z).
    pub fn field_at(&self, z: f64) -> [Complex64; 3] {
        let cell = (z / self.period).floor();
        let local = z - cell * self.period;
        let bloch = Complex64::new(0.0, self.kpoint.k_z * cell * self.period).exp();
        let layer = if local < self.layers[1].z0 { &self.layers[0] } else { &self.layers[1] };
        let s = (local - layer.z0).clamp(0.0, layer.thickness);
        layer.field_local(s).map(|c| c * bloch)
    }

    /// (1/L)∫|E_c|² dz per component.
    pub fn component_norms(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for layer in &self.layers {
            for (c, o) in out.iter_mut().enumerate() {
                *o += layer.component_norm(c) / self.period;
            }
        }
        out
    }

    /// (1/L)∫|E|² dz.
    pub fn mean_square(&self) -> f64 {
        self.component_norms().iter().sum()
    }

    /// (1/L)∫ε|E|² dz; 1/2 for a normalized mode.
    pub fn energy_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.eps * (0..3).map(|c| l.component_norm(c)).sum::<f64>())
            .sum::<f64>()
            / self.period
    }

    /// Fourier amplitude at K = k_z + G: (1/L)∫₀^L E(z)e^{−iKz} dz.
    pub fn coefficient(&self, k: f64) -> [Complex64; 3] {
        let a = self.layers[0].transform(k);
        let b = self.layers[1].transform(k);
        [0, 1, 2].map(|c| (a[c] + b[c]) / self.period)
    }

    /// Field discontinuities (right minus left) at z = 0 (Bloch-adjusted) and z = d_h.
    pub fn jumps(&self) -> [[Complex64; 3]; 2] {
        let [h, l] = &self.layers;
        let back = Complex64::new(0.0, -self.kpoint.k_z * self.period).exp();
        let h0 = h.field_local(0.0);
        let h1 = h.field_local(h.thickness);
        let l0 = l.field_local(0.0);
        let l1 = l.field_local(l.thickness);
        [[0, 1, 2].map(|c| h0[c] - back * l1[c]), [0, 1, 2].map(|c| l0[c] - h1[c])]
    }

    fn scale(&mut self, s: Complex64) {
        for layer in &mut self.layers {
            for comp in &mut layer.amplitudes {
                comp[0] *= s;
                comp[1] *= s;
            }
        }
    }
}

fn complex_q(q2: f64) -> Complex64 {
    if q2 >= 0.0 {
        Complex64::new(q2.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-q2).sqrt())
    }
}

/// Scalar (a, β) from the value and reduced derivative u = ψ'/p at the left face.
fn scalar_from_slope(q: Complex64, d: f64, p: f64, psi: Complex64, u: Complex64) -> (Complex64, Complex64) {
    let min_q = 1e-9 / d;
    let q = if q.norm() < min_q { Complex64::new(min_q, 0.0) } else { q };
    let t = p * u / (I * q);
    let a = 0.5 * (psi + t);
    let b = 0.5 * (psi - t);
    (a, b * (-I * q * d).exp())
}

/// Scalar (a, β) of an evanescent layer from its two face values.
fn scalar_from_faces(kappa: f64, d: f64, psi_l: Complex64, psi_r: Complex64) -> (Complex64, Complex64) {
    let e = (-kappa * d).exp();
    let den = 1.0 - e * e;
    ((psi_l - e * psi_r) / den, (psi_r - e * psi_l) / den)
}

struct LayerSpec {
    z0: f64,
    d: f64,
    q: Complex64,
    p: f64,
    eps: f64,
    resp: LayerResponse,
}

impl LayerSpec {
    fn kappa_d(&self) -> f64 {
        self.q.im * self.d
    }

    /// Unscaled transfer matrix for (ψ, u).
    fn matrix(&self) -> [[f64; 2]; 2] {
        let s = self.resp.log_scale.exp();
        let (c, sq, qs) = (self.resp.c * s, self.resp.sq * s, self.resp.qs * s);
        [[c, self.p * sq], [-qs / self.p, c]]
    }

    /// Coefficients of u_L·den and u_R·den in terms of (ψ_L, ψ_R), and den.
    fn dtn(&self) -> ([f64; 2], [f64; 2], f64) {
        let inv_s = (-self.resp.log_scale).exp();
        let c = self.resp.c;
        ([-c, inv_s], [-inv_s, c], self.p * self.resp.sq)
    }
}

/// Normalized mode profile of the band at `omega_ev`.
fn on_band_tolerance(stack: &Stack1D, kpoint: KPoint, omega_ev: f64, cos_kzl: f64) -> f64 {
    let h = omega_ev * 1e-7;
    let f = |w: f64| Evaluated::at(stack, kpoint.pol, w, kpoint.k_rho).residual_scaled(cos_kzl);
    let slope = (f(omega_ev + h) - f(omega_ev - h)) / (2.0 * h);
    ON_BAND_TOL + slope.abs() * omega_ev * ON_BAND_REL_OMEGA
}

pub fn mode_profile(omega_ev: f64, kpoint: KPoint, stack: &Stack1D) -> Result<ModeProfile> {
    if !(omega_ev.is_finite() && omega_ev > 0.0) {
        return Err(Error::InvalidInput(format!("ω must be finite and > 0, got {omega_ev}")));
    }
    kpoint.validate(stack)?;
    let period = stack.period();
    let eval = Evaluated::at(stack, kpoint.pol, omega_ev, kpoint.k_rho);
    let cos_kzl = (kpoint.k_z * period).cos();
    let residual = eval.residual_scaled(cos_kzl);
    if !(residual.abs() <= on_band_tolerance(stack, kpoint, omega_ev, cos_kzl)) {
        return Err(Error::NotOnBand { omega_ev, residual });
    }
    let k0 = omega_ev / HBAR_C;
    let n_h = stack.high.eval(omega_ev)?;
    let n_l = stack.n_low;
    let kr2 = kpoint.k_rho * kpoint.k_rho;
    let h = LayerSpec {
        z0: 0.0,
        d: stack.d_h,
        q: complex_q(k0 * k0 * n_h * n_h - kr2),
        p: eval.p_h,
        eps: n_h * n_h,
        resp: eval.h,
    };
    let l = LayerSpec {
        z0: stack.d_h,
        d: stack.d_l,
        q: complex_q(k0 * k0 * n_l * n_l - kr2),
        p: eval.p_l,
        eps: n_l * n_l,
        resp: eval.l,
    };
    let lambda = Complex64::new(0.0, kpoint.k_z * period).exp();

    let scalars = if h.kappa_d() > DTN_THRESHOLD || l.kappa_d() > DTN_THRESHOLD {
        scalars_dtn(&h, &l, lambda, omega_ev)?
    } else {
        scalars_transfer(&h, &l, lambda, omega_ev)?
    };

    let build = |spec: &LayerSpec, (a, b): (Complex64, Complex64)| {
        let zero = Complex64::new(0.0, 0.0);
        let amplitudes = match kpoint.pol {
            Polarization::Te => [[zero, zero], [a, b], [zero, zero]],
            Polarization::Tm => {
                let f = 1.0 / (k0 * spec.eps);
                [
                    [spec.q * a * f, -spec.q * b * f],
                    [zero, zero],
                    [-kpoint.k_rho * a * f, -kpoint.k_rho * b * f],
                ]
            }
        };
        LayerField {
            z0: spec.z0,
            thickness: spec.d,
            q: spec.q,
            eps: spec.eps,
            amplitudes,
        }
    };
    let mut profile = ModeProfile {
        kpoint,
        omega_ev,
        period,
        layers: [build(&h, scalars.0), build(&l, scalars.1)],
    };
    let norm = profile.energy_norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::DegenerateMode { omega_ev });
    }
    let phase = scalars.2.conj() / scalars.2.norm();
    profile.scale(phase * (0.5 / norm).sqrt());
    Ok(profile)
}

type Scalars = ((Complex64, Complex64), (Complex64, Complex64), Complex64);

fn pick_null(r1: [Complex64; 2], r2: [Complex64; 2], scale: f64, omega_ev: f64) -> Result<[Complex64; 2]> {
    let n1 = r1[0].norm_sqr() + r1[1].norm_sqr();
    let n2 = r2[0].norm_sqr() + r2[1].norm_sqr();
    let r = if n1 >= n2 { r1 } else { r2 };
    if n1.max(n2).sqrt() <= 1e-12 * scale {
        return Err(Error::DegenerateMode { omega_ev });
    }
    Ok([-r[1], r[0]])
}

/// Interface values by propagating (ψ, u) across one period.
fn scalars_transfer(h: &LayerSpec, l: &LayerSpec, lambda: Complex64, omega_ev: f64) -> Result<Scalars> {
    let mh = h.matrix();
    let ml = l.matrix();
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = ml[i][0] * mh[0][j] + ml[i][1] * mh[1][j];
        }
    }
    let scale = m.iter().flatten().fold(1.0f64, |a, b| a.max(b.abs()));
    // rows of (M − λ)v = 0
    let r1 = [Complex64::new(m[0][0], 0.0) - lambda, Complex64::new(m[0][1], 0.0)];
    let r2 = [Complex64::new(m[1][0], 0.0), Complex64::new(m[1][1], 0.0) - lambda];
    let [psi0, u0] = pick_null(r1, r2, scale, omega_ev)?;
    let psi1 = mh[0][0] * psi0 + mh[0][1] * u0;
    let u1 = mh[1][0] * psi0 + mh[1][1] * u0;
    let sh = scalar_from_slope(h.q, h.d, h.p, psi0, u0);
    let sl = scalar_from_slope(l.q, l.d, l.p, psi1, u1);
    let anchor = if psi0.norm() >= psi1.norm() { psi0 } else { psi1 };
    let anchor = if anchor.norm() > 0.0 { anchor } else { Complex64::new(1.0, 0.0) };
    Ok((sh, sl, anchor))
}

/// Interface values from the Dirichlet-to-Neumann maps of both layers.
fn scalars_dtn(h: &LayerSpec, l: &LayerSpec, lambda: Complex64, omega_ev: f64) -> Result<Scalars> {
    // unknowns x = ψ(0), y = ψ(d_h); layer l runs from y to λx
    let (lh, rh, den_h) = h.dtn();
    let (ll, rl, den_l) = l.dtn();
    // u continuity at d_h: den_l·u_R^h·den_h = den_h·u_L^l·den_l
    let r1 = [
        den_l * rh[0] - den_h * ll[1] * lambda,
        Complex64::new(den_l * rh[1] - den_h * ll[0], 0.0),
    ];
    // u continuity at L: u_R^l = λ·u_L^h
    let r2 = [
        den_h * rl[1] * lambda - lambda * den_l * lh[0],
        den_h * rl[0] - lambda * den_l * lh[1],
    ];
    let scale = den_h.abs().max(den_l.abs());
    let [x, y] = pick_null(r1, r2, scale, omega_ev)?;
    let ev_h = h.kappa_d() > 1.0;
    let ev_l = l.kappa_d() > 1.0;
    let sh = if ev_h {
        scalar_from_faces(h.q.im, h.d, x, y)
    } else {
        // l is the strongly evanescent neighbour
        let u0 = (rl[0] * y + rl[1] * lambda * x) / (den_l * lambda);
        scalar_from_slope(h.q, h.d, h.p, x, u0)
    };
    let sl = if ev_l {
        scalar_from_faces(l.q.im, l.d, y, lambda * x)
    } else {
        let u1 = (rh[0] * x + rh[1] * y) / den_h;
        scalar_from_slope(l.q, l.d, l.p, y, u1)
    };
    let anchor = if x.norm() >= y.norm() { x } else { y };
    let anchor = if anchor.norm() > 0.0 { anchor } else { Complex64::new(1.0, 0.0) };
    Ok((sh, sl, anchor))
}

/// Fourier amplitudes E(G_m), |m| ≤ m_max, of a mode.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients {
    pub kpoint: KPoint,
    pub omega_ev: f64,
    pub period: f64,
    pub m_max: usize,
    coeffs: Vec<[Complex64; 3]>,
    /// (1/L)∫|E_c|² dz per component.
    pub component_totals: [f64; 3],
}

impl FourierCoefficients {
    pub fn get(&self, m: i64) -> Option<[Complex64; 3]> {
        let idx = m + self.m_max as i64;
        if idx < 0 {
            return None;
        }
        self.coeffs.get(idx as usize).copied()
    }

    /// (m, E(G_m)) in ascending m.
    pub fn iter(&self) -> impl Iterator<Item = (i64, [Complex64; 3])> + '_ {
        let off = self.m_max as i64;
        self.coeffs.iter().enumerate().map(move |(i, c)| (i as i64 - off, *c))
    }

    /// k_z + G_m.
    pub fn k_gz(&self, m: i64) -> f64 {
        self.kpoint.k_z + m as f64 * 2.0 * std::f64::consts::PI / self.period
    }

    /// Σ_{|m|≤m_max} |E(G_m)|².
    pub fn partial_sum(&self) -> f64 {
        let v: Vec<f64> = self.coeffs.iter().map(|c| c.iter().map(|x| x.norm_sqr()).sum()).collect();
        crate::quad::pairwise_sum(&v)
    }

    /// (1/L)∫|E|² dz.
    pub fn total(&self) -> f64 {
        self.component_totals.iter().sum()
    }

    /// Fraction of Σ|E|² carried by |m| > m_max.
    pub fn tail_fraction(&self) -> f64 {
        ((self.total() - self.partial_sum()) / self.total()).max(0.0)
    }

    /// |partial + tail − total| / total, with the tail from [`fourier_tail`].
    pub fn parseval_residual(&self, profile: &ModeProfile) -> f64 {
        let tail = fourier_tail(profile, self.m_max);
        ((self.partial_sum() + tail - self.total()) / self.total()).abs()
    }
}

fn trigamma_asymptotic(x: f64) -> f64 {
    let x2 = x * x;
    1.0 / x + 1.0 / (2.0 * x2) + 1.0 / (6.0 * x2 * x) - 1.0 / (30.0 * x2 * x2 * x)
}

fn coefficients_at(profile: &ModeProfile, m_max: usize) -> FourierCoefficients {
    let b = 2.0 * std::f64::consts::PI / profile.period;
    let kz = profile.kpoint.k_z;
    let coeffs = (-(m_max as i64)..=m_max as i64)
        .map(|m| profile.coefficient(kz + m as f64 * b))
        .collect();
    FourierCoefficients {
        kpoint: profile.kpoint,
        omega_ev: profile.omega_ev,
        period: profile.period,
        m_max,
        coeffs,
        component_totals: profile.component_norms(),
    }
}

/// Σ_{|m|>m_max}|E(G_m)|², summed explicitly to a far cutoff and extended
/// by the 1/K² asymptote of the field discontinuities.
pub fn fourier_tail(profile: &ModeProfile, m_max: usize) -> f64 {
    let b = 2.0 * std::f64::consts::PI / profile.period;
    let kz = profile.kpoint.k_z;
    let norm2 = |m: i64| -> f64 { profile.coefficient(kz + m as f64 * b).iter().map(|x| x.norm_sqr()).sum() };
    let far = (2 * m_max).max(4096) as i64;
    let near: Vec<f64> = (m_max as i64 + 1..=far).flat_map(|m| [norm2(m), norm2(-m)]).collect();
    crate::quad::pairwise_sum(&near) + jump_tail(profile, far as usize)
}

fn jump_sq(profile: &ModeProfile) -> f64 {
    profile.jumps().iter().flatten().map(|c| c.norm_sqr()).sum()
}

fn jump_tail(profile: &ModeProfile, m_max: usize) -> f64 {
    let b = 2.0 * std::f64::consts::PI / profile.period;
    let c = profile.kpoint.k_z / b;
    let m1 = m_max as f64 + 1.0;
    let inv_k2 = (trigamma_asymptotic(m1 + c) + trigamma_asymptotic(m1 - c)) / (b * b);
    jump_sq(profile) / (profile.period * profile.period) * inv_k2
}

/// Fourier amplitudes with |m| ≤ m_max, grown (doubling) until the
/// discarded part is below 1e-6 of Σ|E|².
pub fn fourier_coefficients(profile: &ModeProfile, m_max: usize) -> Result<FourierCoefficients> {
    if m_max < 1 {
        return Err(Error::InvalidInput("m_max must be >= 1".into()));
    }
    let mut m = m_max;
    loop {
        let fc = coefficients_at(profile, m);
        let tail = fc.tail_fraction();
        if tail < FOURIER_TAIL_TOL {
            return Ok(fc);
        }
        if m >= FOURIER_M_CAP {
            return Err(Error::NotConverged {
                delta: tail,
                limit: FOURIER_TAIL_TOL,
            });
        }
        // jump asymptote: tail ≈ 2J/(L²b²M); aim a little past the target
        let b = 2.0 * std::f64::consts::PI / profile.period;
        let period2 = profile.period * profile.period;
        let guess = 2.4 * jump_sq(profile) / (period2 * b * b * FOURIER_TAIL_TOL * fc.total());
        m = (guess.ceil() as usize).max(2 * m).min(FOURIER_M_CAP);
    }
}

/// Angular weights of one mode in the mass integrand: the coefficients of
/// 1/ω² multiplying the isotropic (A) and cos²Θ-type (B) parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeWeights {
    pub w_a: f64,
    pub w_b: f64,
}

impl ModeWeights {
    /// Weights of a normalized mode. TE modes carry all of Σ|E(G)|² in the
    /// s-polarized channel; TM modes are projected on the p-polarization
    /// vector of each plane wave k_ρx̂ + (k_z + G)ẑ.
    pub fn of(profile: &ModeProfile) -> ModeWeights {
        match profile.kpoint.pol {
            Polarization::Te => {
                let t = profile.component_norms()[1];
                ModeWeights { w_a: t, w_b: -t }
            }
            Polarization::Tm => tm_weights(profile),
        }
    }
}

fn tm_weights(profile: &ModeProfile) -> ModeWeights {
    let kz = profile.kpoint.k_z;
    let kr = profile.kpoint.k_rho;
    let b = 2.0 * std::f64::consts::PI / profile.period;
    let qmax = profile.layers.iter().map(|l| l.q.norm()).fold(0.0, f64::max);
    let k_cut = 4.0 * qmax + 4.0 * kr + 8.0 * b;
    let m_max = (k_cut / b).ceil() as i64 + 1;
    let mut wa = Vec::with_capacity(2 * m_max as usize + 1);
    let mut wb = Vec::with_capacity(2 * m_max as usize + 1);
    let mut ex = Vec::with_capacity(2 * m_max as usize + 1);
    for m in -m_max..=m_max {
        let k = kz + m as f64 * b;
        let [cx, _, cz] = profile.coefficient(k);
        let kg2 = k * k + kr * kr;
        ex.push(cx.norm_sqr());
        if kg2 == 0.0 {
            continue;
        }
        let p = (-k * cx + kr * cz).norm_sqr() / kg2;
        wa.push(p * k * k / kg2);
        wb.push(p * (2.0 * kr * kr - k * k) / kg2);
    }
    let tail = (profile.component_norms()[0] - crate::quad::pairwise_sum(&ex)).max(0.0);
    ModeWeights {
        w_a: crate::quad::pairwise_sum(&wa) + tail,
        w_b: crate::quad::pairwise_sum(&wb) - tail,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::solve_bands;
    use crate::materials::IndexModel;

    fn stack(n: f64, d_h: f64, d_l: f64) -> Stack1D {
        Stack1D::new(d_h, d_l, IndexModel::constant(n).unwrap()).unwrap()
    }

    fn modes(st: &Stack1D, kp: KPoint, w_max: f64) -> Vec<ModeProfile> {
        solve_bands(kp, st, w_max)
            .unwrap()
            .into_iter()
            .map(|w| mode_profile(w, kp, st).unwrap())
            .collect()
    }

    #[test]
    fn vacuum_mode_is_single_plane_wave() {
        let st = stack(1.0, 40.0, 60.0);
        for pol in Polarization::BOTH {
            let kp = KPoint::new(0.013, 0.21 * st.zone_edge(), pol);
            for p in modes(&st, kp, 15.0) {
                for z in [0.0, 13.0, 40.0, 77.7, 99.9, 250.0] {
                    let e2: f64 = p.field_at(z).iter().map(|c| c.norm_sqr()).sum();
                    assert!((e2 - 0.5).abs() < 1e-10, "{e2}");
                }
                let fc = fourier_coefficients(&p, 4).unwrap();
                let peak = fc.iter().map(|(_, c)| c.iter().map(|x| x.norm_sqr()).sum::<f64>()).fold(0.0, f64::max);
                assert!((peak - 0.5).abs() < 1e-12);
                assert!((fc.partial_sum() - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vacuum_forward_amplitudes() {
        let st = stack(1.0, 40.0, 60.0);
        let kp = KPoint::new(0.0, 0.3 * st.zone_edge(), Polarization::Te);
        let p = &modes(&st, kp, 3.0)[0];
        let [h, l] = p.layers;
        assert!(h.amplitudes[1][1].norm() < 1e-12 && l.amplitudes[1][1].norm() < 1e-12);
        assert!((h.amplitudes[1][0].norm() - l.amplitudes[1][0].norm()).abs() < 1e-12);
    }

    #[test]
    fn normalization_holds_for_evanescent_layers() {
        let st = stack(3.5, 50.0, 50.0);
        for pol in Polarization::BOTH {
            for kr in [0.0, 0.05, 0.15, 0.4] {
                let kp = KPoint::new(kr, 0.4 * st.zone_edge(), pol);
                for p in modes(&st, kp, 40.0) {
                    assert!((p.energy_norm() - 0.5).abs() < 1e-12);
                    for z in [0.0, 25.0, 50.0, 75.0] {
                        assert!(p.field_at(z).iter().all(|c| c.re.is_finite() && c.im.is_finite()));
                    }
                }
            }
        }
    }

    #[test]
    fn tangential_fields_continuous() {
        let st = stack(2.7, 35.0, 65.0);
        let kp = KPoint::new(0.09, 0.7 * st.zone_edge(), Polarization::Tm);
        for p in modes(&st, kp, 25.0) {
            let [j0, j1] = p.jumps();
            assert!(j0[0].norm() < 1e-9 && j1[0].norm() < 1e-9);
            // D_z = εE_z continuous
            let ez_h = p.layers[0].field_local(p.layers[0].thickness)[2] * p.layers[0].eps;
            let ez_l = p.layers[1].field_local(0.0)[2] * p.layers[1].eps;
            assert!((ez_h - ez_l).norm() < 1e-9 * ez_h.norm().max(1e-3));
        }
    }

    #[test]
    fn off_band_rejected() {
        let st = stack(2.0, 50.0, 50.0);
        let kp = KPoint::new(0.0, 0.01, Polarization::Te);
        assert!(matches!(mode_profile(1.2345, kp, &st), Err(Error::NotOnBand { .. })));
        assert!(fourier_coefficients(&modes(&st, kp, 5.0)[0], 0).is_err());
    }

    #[test]
    fn degenerate_zone_center_flagged() {
        let st = stack(1.0, 50.0, 50.0);
        let w = HBAR_C * st.reciprocal();
        let kp = KPoint::new(0.0, 0.0, Polarization::Te);
        assert!(matches!(mode_profile(w, kp, &st), Err(Error::DegenerateMode { .. })));
    }

    #[test]
    fn parseval_with_tail_estimate() {
        let st = stack(3.0, 50.0, 50.0);
        let kp = KPoint::new(0.07, 0.3 * st.zone_edge(), Polarization::Tm);
        for p in modes(&st, kp, 20.0) {
            let fc = fourier_coefficients(&p, 8).unwrap();
            assert!(fc.tail_fraction() < FOURIER_TAIL_TOL);
            assert!(fc.parseval_residual(&p) < 1e-8, "{}", fc.parseval_residual(&p));
        }
    }

    #[test]
    fn weights_vacuum_limit() {
        // n = 1: A-weights 1/2 (TE) and K²/(2k²) (TM); B-weights −1/2 and (2k_ρ²−K²)/(2k²)
        let st = stack(1.0, 50.0, 50.0);
        let kr = 0.02;
        let kz = 0.37 * st.zone_edge();
        for pol in Polarization::BOTH {
            let kp = KPoint::new(kr, kz, pol);
            for p in modes(&st, kp, 8.0) {
                let w = ModeWeights::of(&p);
                let k0 = p.omega_ev / HBAR_C;
                let kg = (k0 * k0 - kr * kr).sqrt();
                let (ea, eb) = match pol {
                    Polarization::Te => (0.5, -0.5),
                    Polarization::Tm => (0.5 * kg * kg / (k0 * k0), 0.5 * (2.0 * kr * kr - kg * kg) / (k0 * k0)),
                };
                assert!((w.w_a - ea).abs() < 1e-10 && (w.w_b - eb).abs() < 1e-10, "{w:?} {ea} {eb}");
            }
        }
    }
}
