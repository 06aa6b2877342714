use std::fmt::Write as _;
use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::cache::{atomic_write, Cache, CacheEntry, CacheKey};
use super::config::{IndexSpec, PointSpec, RunConfig};
use crate::bloch::{solve_bands, solve_count, KPoint, Polarization, Stack1D};
use crate::error::{Error, Result};
use crate::ionization::{ionization_shift, ionization_table, select_atoms, OrbitalState};
use crate::qed_mass::{compute_ab, MassCoefficients};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_PARTIAL_SWEEP: i32 = 4;

/// Version line heading every cached and emitted band table.
pub const BANDS_HEADER: &str = "# pcion bands v1";
/// k_z samples of the emitted band structure on [0, π/L].
const BAND_SAMPLES: usize = 33;
/// Energy step of the emitted index curve, eV.
const INDEX_STEP_EV: f64 = 0.05;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::NotConverged { .. } => EXIT_CONVERGENCE,
        _ => EXIT_FAILURE,
    }
}

/// Machine-readable error document.
pub fn error_json(err: &Error) -> String {
    let kind = match err {
        Error::Config(_) => "config",
        Error::NotConverged { .. } => "convergence",
        Error::InvalidInput(_) => "invalid_input",
        Error::Io { .. } => "io",
        Error::Parse { .. } => "parse",
        Error::Unphysical { .. } => "unphysical",
        _ => "numerical",
    };
    json!({"error": {"kind": kind, "message": err.to_string(), "exit_code": exit_code(err)}}).to_string()
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub figure: Option<u8>,
    pub workers: Option<usize>,
    pub cache: Cache,
}

/// JSON-lines log with elapsed time on every record.
pub struct RunLog {
    file: Mutex<File>,
    start: Instant,
}

impl RunLog {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(RunLog {
            file: Mutex::new(file),
            start: Instant::now(),
        })
    }

    pub fn record(&self, stage: &str, mut fields: Value) {
        if let Value::Object(map) = &mut fields {
            map.insert("stage".into(), stage.into());
            map.insert("elapsed_s".into(), self.start.elapsed().as_secs_f64().into());
        }
        let mut f = self.file.lock().unwrap_or_else(|e| e.into_inner());
        let _ = writeln!(f, "{fields}");
    }
}

/// Mass coefficients and band table of one point, from cache or computed.
pub struct PointResult {
    pub mass: MassCoefficients,
    pub bands_csv: String,
    pub cache_hit: bool,
}

pub fn compute_point(point: &PointSpec, cache: &Cache, log: &RunLog) -> Result<PointResult> {
    let stack = point.stack()?;
    let key = CacheKey::new(&stack, &point.cutoff);
    if let Some(entry) = cache.load(&key) {
        log.record("cache", json!({"key": key.as_str(), "hit": true}));
        return Ok(PointResult {
            mass: entry.mass,
            bands_csv: entry.bands_csv,
            cache_hit: true,
        });
    }
    log.record("cache", json!({"key": key.as_str(), "hit": false}));
    let t = Instant::now();
    let mass = compute_ab(&stack, &point.cutoff)?;
    log.record(
        "mass",
        json!({"key": key.as_str(), "seconds": t.elapsed().as_secs_f64(), "solves": mass.diagnostics.solves,
               "A_ev": mass.a_ev, "B_ev": mass.b_ev, "refinement_delta": mass.diagnostics.refinement_delta}),
    );
    let bands_csv = bands_csv(&stack, point.cutoff.lambda_ev)?;
    let entry = CacheEntry { mass, bands_csv };
    cache.store(&key, &entry)?;
    Ok(PointResult {
        mass: entry.mass,
        bands_csv: entry.bands_csv,
        cache_hit: false,
    })
}

/// Bands at k_ρ = 0 (TE and TM coincide there) below Λ across half the zone.
pub fn bands_csv(stack: &Stack1D, lambda_ev: f64) -> Result<String> {
    let mut out = format!("{BANDS_HEADER}\nk_z_inv_nm,band,omega_ev\n");
    for i in 0..BAND_SAMPLES {
        let kz = stack.zone_edge() * i as f64 / (BAND_SAMPLES - 1) as f64;
        let omegas = solve_bands(KPoint::new(0.0, kz, Polarization::Te), stack, lambda_ev)?;
        for (b, w) in omegas.iter().enumerate() {
            let _ = writeln!(out, "{kz},{},{w}", b + 1);
        }
    }
    Ok(out)
}

fn index_csv(point: &PointSpec) -> Result<String> {
    let model = point.model()?;
    let mut out = String::from("omega_ev,n_h\n");
    let steps = (point.cutoff.lambda_ev / INDEX_STEP_EV).round() as usize;
    for i in 1..=steps {
        let w = i as f64 * INDEX_STEP_EV;
        let _ = writeln!(out, "{w},{}", model.eval(w)?);
    }
    Ok(out)
}

fn plot_script(figure: Option<u8>) -> String {
    let want = |f: u8| figure.is_none_or(|x| x == f);
    let mut s = String::from("set datafile separator ','\nset terminal pngcairo size 800,600\n");
    if want(2) {
        s.push_str(
            "set output 'fig2_index.png'\nset xlabel 'photon energy (eV)'\nset ylabel 'n_h'\n\
             plot 'index.csv' using 1:2 skip 1 with lines title 'n_h(omega)'\n",
        );
    }
    if want(3) || want(4) {
        s.push_str(
            "set output 'fig_ionization.png'\nset style data histograms\nset style fill solid\n\
             set ylabel 'ionization energy (eV)'\nset xlabel ''\n\
             plot 'ionization.csv' using 2:xtic(1) skip 1 title 'vacuum', '' using 4 skip 1 title 'photonic crystal'\n",
        );
    }
    if figure.is_none() {
        s.push_str(
            "set output 'bands.png'\nunset style\nset xlabel 'k_z (1/nm)'\nset ylabel 'omega (eV)'\n\
             plot 'bands.csv' using 1:3 skip 2 with points pt 7 ps 0.4 title 'k_rho = 0'\n",
        );
    }
    s
}

fn write(out: &Path, name: &str, text: &str) -> Result<()> {
    atomic_write(&out.join(name), text.as_bytes())
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn prepare(cfg: &RunConfig, opts: &RunOptions) -> Result<RunLog> {
    std::fs::create_dir_all(&opts.out).map_err(|e| Error::io(&opts.out, e))?;
    let log = RunLog::create(&opts.out.join("run.log"))?;
    log.record(
        "start",
        json!({"workers": opts.workers.or(cfg.workers), "cache_dir": opts.cache.root().display().to_string()}),
    );
    Ok(log)
}

/// Single-point pipeline. Outputs are written before a convergence failure is reported.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<MassCoefficients> {
    let log = prepare(cfg, opts)?;
    let solves0 = solve_count();
    let point = cfg.base_point();
    let atoms = select_atoms(&cfg.atoms)?;
    let res = pool(opts.workers.or(cfg.workers))?.install(|| compute_point(&point, &opts.cache, &log))?;
    let out = &opts.out;
    write(out, "index.csv", &index_csv(&point)?)?;
    write(out, "bands.csv", &res.bands_csv)?;
    let mut report = serde_json::to_string_pretty(&res.mass.report()).map_err(|e| Error::Config(e.to_string()))?;
    report.push('\n');
    write(out, "mass.json", &report)?;
    write(out, "ionization.csv", &ionization_table(&res.mass, &atoms)?.to_csv())?;
    write(out, "plot.gp", &plot_script(opts.figure.or(cfg.figure)))?;
    log.record("done", json!({"solves": solve_count() - solves0, "cache_hit": res.cache_hit}));
    res.mass.check_converged()?;
    Ok(res.mass)
}

/// Header of the sweep table.
pub const SWEEP_HEADER: &str = "a_nm,g_nm,d_h_nm,d_l_nm,scale,A_ev,B_ev,dE_ion_ev,status";

/// Outcome of a sweep: rows in grid order and how many failed.
pub struct SweepSummary {
    pub rows: usize,
    pub failed: usize,
}

/// Every grid point, concurrently; failures are flagged in their row.
pub fn sweep(cfg: &RunConfig, opts: &RunOptions) -> Result<SweepSummary> {
    if cfg.sweep.is_none() {
        return Err(Error::Config("sweep requires a `sweep` grid in the config".into()));
    }
    let log = prepare(cfg, opts)?;
    let solves0 = solve_count();
    let points = cfg.points();
    let results: Vec<Result<PointResult>> = pool(opts.workers.or(cfg.workers))?
        .install(|| points.par_iter().map(|p| compute_point(p, &opts.cache, &log)).collect());
    let mut csv = format!("{SWEEP_HEADER}\n");
    let mut failed = 0;
    for (p, r) in points.iter().zip(&results) {
        let (a, g) = match p.index {
            IndexSpec::Metamaterial { a, g } => (a.to_string(), g.to_string()),
            _ => (String::new(), String::new()),
        };
        let _ = write!(csv, "{a},{g},{},{},{},", p.stack.d_h, p.stack.d_l, p.index_scale);
        match r {
            Ok(res) => {
                let m = &res.mass;
                let status = if m.diagnostics.converged { "ok" } else { "not_converged" };
                if !m.diagnostics.converged {
                    failed += 1;
                }
                let de = ionization_shift(m, OrbitalState::S);
                let _ = writeln!(csv, "{},{},{de},{status}", m.a_ev, m.b_ev);
            }
            Err(e) => {
                failed += 1;
                log.record("point_failed", json!({"error": e.to_string()}));
                let msg = e.to_string().replace([',', '\n', '"'], " ");
                let _ = writeln!(csv, ",,,error: {msg}");
            }
        }
    }
    write(&opts.out, "sweep.csv", &csv)?;
    log.record("done", json!({"solves": solve_count() - solves0, "rows": points.len(), "failed": failed}));
    Ok(SweepSummary {
        rows: points.len(),
        failed,
    })
}
