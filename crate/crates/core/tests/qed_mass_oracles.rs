use pcion_core::bloch::Stack1D;
use pcion_core::constants::{vacuum_mass, ALPHA, HBAR_C};
use pcion_core::materials::{IndexModel, IndexTable};
use pcion_core::qed_mass::{compute_ab, he_tail, CutoffConfig};
use std::f64::consts::PI;

/// Plane-wave value of A at n = 1.5, Λ = 10 eV, from `plane_wave_oracle` below.
const HOMOGENEOUS_A_N15_L10: f64 = 1.548_546_310e-2;

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let dp = {
                    let (mut p0, mut p1) = (1.0, z);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    n as f64 * (z * p1 - p0) / (z * z - 1.0)
                };
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

/// δm(û) for a homogeneous medium of index n: plane waves below Λ, two
/// transverse polarization vectors each, |E|² = 1/(2n²), averaged over the
/// azimuth of k, minus the vacuum value. Returns (A, B) from û ∥ x̂ and û ∥ ẑ.
fn plane_wave_oracle(n: f64, lambda: f64) -> (f64, f64) {
    let kmax = n * lambda / HBAR_C;
    let (xt, wt) = gauss_legendre(96);
    let n_phi = 64;
    let e2 = 1.0 / (2.0 * n * n);
    let dm = |u: [f64; 3]| {
        let mut sum = 0.0;
        for (xi, wi) in xt.iter().zip(&wt) {
            let th = 0.5 * PI * (xi + 1.0);
            let (st, ct) = th.sin_cos();
            let mut proj = 0.0;
            for j in 0..n_phi {
                let ph = 2.0 * PI * j as f64 / n_phi as f64;
                let (sp, cp) = ph.sin_cos();
                let te = [-sp, cp, 0.0];
                let tm = [ct * cp, ct * sp, -st];
                let dot = |e: [f64; 3]| e[0] * u[0] + e[1] * u[1] + e[2] * u[2];
                proj += dot(te).powi(2) + dot(tm).powi(2);
            }
            proj /= n_phi as f64;
            // ∫₀^kmax dk of k_ρ dk_ρ dk_z / k₀² = k·sinθ · k dk dθ · n²/k²
            sum += 0.5 * PI * wi * st * n * n * kmax * 2.0 * e2 * proj;
        }
        ALPHA / PI * HBAR_C * sum - vacuum_mass(lambda)
    };
    let a = dm([1.0, 0.0, 0.0]);
    let b = dm([0.0, 0.0, 1.0]) - a;
    (a, b)
}

fn uniform(n: f64) -> Stack1D {
    Stack1D::with_low_index(50.0, 50.0, IndexModel::constant(n).unwrap(), n).unwrap()
}

#[test]
fn oracle_is_frozen() {
    let (a, b) = plane_wave_oracle(1.5, 10.0);
    assert!((a / HOMOGENEOUS_A_N15_L10 - 1.0).abs() < 1e-9, "{a:.10e}");
    assert!(b.abs() < 1e-12 * a.abs().max(1.0), "{b}");
    let (a1, _) = plane_wave_oracle(1.0, 10.0);
    assert!(a1.abs() < 1e-14);
}

#[test]
fn oracle_linear_in_cutoff_and_index() {
    let (a, _) = plane_wave_oracle(2.0, 5.0);
    assert!((a / plane_wave_oracle(2.0, 10.0).0 - 0.5).abs() < 1e-10);
    assert!((a / plane_wave_oracle(3.0, 5.0).0 - 0.5).abs() < 1e-10);
}

#[test]
fn uniform_medium_matches_oracle() {
    let lam = 5.0;
    let r = compute_ab(&uniform(1.5), &CutoffConfig::new(lam)).unwrap();
    let (a, _) = plane_wave_oracle(1.5, lam);
    assert!((r.a_ev / a - 1.0).abs() < 0.01, "A={} oracle={a}", r.a_ev);
    assert!(r.b_ev.abs() < 0.01 * a, "B={}", r.b_ev);
    assert!(r.diagnostics.converged);
    assert_eq!(r.tail_ev, 0.0);
}

#[test]
fn vacuum_cancels_at_small_cutoff() {
    let lam = 5.0;
    let st = Stack1D::new(50.0, 50.0, IndexModel::constant(1.0).unwrap()).unwrap();
    let r = compute_ab(&st, &CutoffConfig::new(lam)).unwrap();
    let scale = vacuum_mass(lam);
    assert!(r.a_ev.abs() < 1e-4 * scale && r.b_ev.abs() < 1e-4 * scale, "{} {}", r.a_ev, r.b_ev);
    let shell_vac = scale / r.diagnostics.shells.len() as f64;
    assert!(r.diagnostics.shells.iter().all(|s| s.a_ev.abs() < 0.1 * shell_vac));
}

#[test]
fn layered_stack_diagnostics() {
    let st = Stack1D::new(50.0, 50.0, IndexModel::constant(2.0).unwrap()).unwrap();
    let r = compute_ab(&st, &CutoffConfig::new(5.0)).unwrap();
    assert!(r.diagnostics.kz_symmetry < 1e-10, "{}", r.diagnostics.kz_symmetry);
    assert!(r.diagnostics.converged);
    assert!(r.diagnostics.solves > 0);
    let shell_a: f64 = r.diagnostics.shells.iter().map(|s| s.a_ev).sum();
    let shell_b: f64 = r.diagnostics.shells.iter().map(|s| s.b_ev).sum();
    assert!((shell_a + r.tail_ev - r.a_ev).abs() < 1e-12);
    assert!((shell_b - r.b_ev).abs() < 1e-12);
    // the crystal sits between vacuum and the uniform n = 2 medium
    let (a_bulk, _) = plane_wave_oracle(2.0, 5.0);
    assert!(r.a_ev > 0.0 && r.a_ev < a_bulk, "{} vs {a_bulk}", r.a_ev);
    assert!(r.b_ev < 0.0);
}

#[test]
fn tabulated_tail_added_to_a() {
    let table = IndexTable::new(vec![(0.5, 1.8), (2.0, 1.7), (4.0, 1.5)]).unwrap();
    let model = IndexModel::tabulated(table, 3.0, 2.0).unwrap();
    let c1 = (model.eval(5.0).unwrap() - 1.0) * 25.0;
    assert!(c1 > 0.0);
    let st = Stack1D::new(40.0, 60.0, model).unwrap();
    let r = compute_ab(&st, &CutoffConfig::new(5.0)).unwrap();
    assert!((r.tail_ev - he_tail(c1, 40.0, 60.0, 5.0)).abs() < 1e-15);
    assert!((r.diagnostics.coarse_a_ev - r.a_ev).abs() < 0.05 * r.a_ev.abs().max(1e-3));
}

#[test]
fn divergent_sellmeier_rejected() {
    let st = Stack1D::new(40.0, 60.0, IndexModel::sellmeier(2.0, 0.0).unwrap()).unwrap();
    assert!(compute_ab(&st, &CutoffConfig::new(5.0)).is_err());
}

#[test]
fn invalid_cutoff_rejected() {
    let st = uniform(1.5);
    assert!(compute_ab(&st, &CutoffConfig::new(-1.0)).is_err());
    let mut cfg = CutoffConfig::new(5.0);
    cfg.n_rho = 2;
    assert!(compute_ab(&st, &cfg).is_err());
}
