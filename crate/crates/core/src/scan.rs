//! Reproducible parameter scans: the observation-time transition, sampling
//! formula head-to-heads, and noise sweeps.
//!
//! Every cell (one point of the axis product, one trial) derives its own seed
//! from the base seed and the cell's coordinates, so results are independent
//! of scheduling and partial runs: rerunning a scan with rows already on disk
//! recomputes only the missing cells.  Rows are sorted before writing; the
//! only column that varies between identical runs is `runtime_ms`.
//!
//! Cells run in parallel; set `RAYON_NUM_THREADS` to bound the worker count.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pswf::PswfBasis;
use crate::sampling::{prolate_interpolate, sinc_interpolate, BandWindow};
use crate::signal::{linspace, sample, LineSpectrum, NoiseKind, NoiseModel};
use crate::solver::{assemble_from_samples, solve, ObservationWindow, RankPolicy};

/// Value of the error columns when a cell's lines were not all recovered (or
/// the cell's method refused to run): a sentinel keeps the statistics honest
/// where a large number would poison them.
pub const UNRESOLVED: &str = "unresolved";

/// Oversampling factor (relative to the band Nyquist density) of the grids
/// the solver cells sample on.
const SOLVER_GRID_DENSITY: usize = 2;
/// Points of the reconstruction-error evaluation grid.
const EVAL_GRID_LEN: usize = 201;
/// Reconstruction error is measured on [-EVAL_SPAN_FRACTION*T, +...*T].
const EVAL_SPAN_FRACTION: f64 = 0.9;

/// Axes and bookkeeping for one scan.  Axis lists that an experiment does
/// not use stay empty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Which scan to run: "transition", "sampling", or "noise".
    pub experiment: String,
    /// Band half-width shared by every cell.
    pub w: f64,
    /// Observation half-length axis.
    #[serde(default)]
    pub t_values: Vec<f64>,
    /// Line-count axis.
    #[serde(default)]
    pub k_values: Vec<usize>,
    /// Gaussian noise level axis (noise scans; 0 means noiseless).
    #[serde(default)]
    pub sigma_values: Vec<f64>,
    /// Shot budget axis (noise scans).
    #[serde(default)]
    pub shot_values: Vec<u64>,
    /// Sample-count axis (sampling scans).
    #[serde(default)]
    pub n_values: Vec<usize>,
    /// Trials per cell.
    pub trials: usize,
    /// Base seed every cell seed is derived from.
    pub base_seed: u64,
    /// Where the table goes (the CLI may override).
    #[serde(default)]
    pub out: Option<String>,
}

impl ScanConfig {
    fn validate_common(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::domain("trials must be at least 1"));
        }
        if !self.w.is_finite() || self.w <= 0.0 {
            return Err(Error::domain(format!(
                "band half-width must be positive, got {}",
                self.w
            )));
        }
        Ok(())
    }

    fn require_axis<T>(&self, axis: &[T], name: &str) -> Result<()> {
        if axis.is_empty() {
            return Err(Error::domain(format!(
                "{} scan needs a non-empty {name} axis",
                self.experiment
            )));
        }
        Ok(())
    }
}

/// One row of the long-format table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub experiment: String,
    /// What produced the errors: "solver", "prolate", or "sinc".
    pub method: String,
    pub t: f64,
    pub k: Option<usize>,
    pub sigma: Option<f64>,
    pub shots: Option<u64>,
    pub n_samples: Option<usize>,
    pub trial: usize,
    /// The cell's derived seed (recorded so any row can be rerun alone).
    pub seed: u64,
    pub rank: Option<usize>,
    /// Max |recovered - true| over matched lines, or [`UNRESOLVED`] when any
    /// line went unmatched.
    pub max_error: String,
    /// Median over matched lines only (so partial recoveries stay visible),
    /// or [`UNRESOLVED`] when nothing matched.
    pub median_error: String,
    pub runtime_ms: f64,
}

impl ScanRow {
    /// Identity of the cell this row belongs to: the coordinates, never the
    /// outputs, so rows from a partial run are recognized on resume.
    pub fn cell_key(&self) -> String {
        format!(
            "{}|{}|t={}|k={:?}|sigma={:?}|shots={:?}|n={:?}|trial={}",
            self.experiment,
            self.method,
            self.t,
            self.k,
            self.sigma,
            self.shots,
            self.n_samples,
            self.trial
        )
    }

    /// The max-error column as a number, `None` when unresolved.
    pub fn max_error_value(&self) -> Option<f64> {
        self.max_error.parse().ok()
    }

    pub fn median_error_value(&self) -> Option<f64> {
        self.median_error.parse().ok()
    }
}

/// A finished scan: the resolved configuration and its sorted rows.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub config: ScanConfig,
    pub rows: Vec<ScanRow>,
}

impl ScanResult {
    /// Write the table as CSV and the configuration echo as a JSON sidecar
    /// (same path with the extension replaced by `config.json`).
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(Error::Io)?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(
            path.with_extension("config.json"),
        )?);
        serde_json::to_writer_pretty(&mut f, &self.config)?;
        use std::io::Write as _;
        writeln!(f)?;
        Ok(())
    }
}

/// Read rows written by [`ScanResult::write`], e.g. to resume a scan.
pub fn read_rows(path: impl AsRef<Path>) -> Result<Vec<ScanRow>> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

/// Dispatch on `config.experiment`.  `existing` rows (from an interrupted
/// run) are kept verbatim; only missing cells are computed.
pub fn run_scan(config: &ScanConfig, existing: &[ScanRow]) -> Result<ScanResult> {
    match config.experiment.as_str() {
        "transition" => scan_transition(config, existing),
        "sampling" => scan_sampling(config, existing),
        "noise" => scan_noise(config, existing),
        other => Err(Error::domain(format!(
            "unknown experiment {other:?}; expected transition, sampling, or noise"
        ))),
    }
}

/// Stable 64-bit FNV-1a hash; the per-cell seed must not depend on the
/// standard library's hasher, which is free to change between releases.
fn stable_hash(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn cell_seed(base_seed: u64, key: &str) -> u64 {
    stable_hash(&format!("{base_seed}|{key}"))
}

/// Greedy one-to-one nearest-neighbor assignment: candidate pairs ordered by
/// ascending distance, each truth and each estimate used at most once.
/// Returns, per truth frequency, the index of its matched estimate.
pub fn match_nearest(truth: &[f64], found: &[f64]) -> Vec<Option<usize>> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(truth.len() * found.len());
    for (i, tv) in truth.iter().enumerate() {
        for (j, fv) in found.iter().enumerate() {
            pairs.push(((tv - fv).abs(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut truth_used = vec![false; truth.len()];
    let mut found_used = vec![false; found.len()];
    let mut assignment = vec![None; truth.len()];
    for (_, i, j) in pairs {
        if !truth_used[i] && !found_used[j] {
            truth_used[i] = true;
            found_used[j] = true;
            assignment[i] = Some(j);
        }
    }
    assignment
}

/// The rank and error columns a finished cell reports.
struct CellOutput {
    rank: Option<usize>,
    max_error: String,
    median_error: String,
}

fn unresolved_output() -> CellOutput {
    CellOutput {
        rank: None,
        max_error: UNRESOLVED.to_string(),
        median_error: UNRESOLVED.to_string(),
    }
}

/// The error columns for a cell whose truth and estimates are both known.
fn error_cells(truth: &[f64], found: &[f64]) -> (String, String) {
    let assignment = match_nearest(truth, found);
    let mut matched: Vec<f64> = Vec::with_capacity(truth.len());
    let mut all_matched = true;
    for (i, a) in assignment.iter().enumerate() {
        match a {
            Some(j) => matched.push((truth[i] - found[*j]).abs()),
            None => all_matched = false,
        }
    }
    let max_error = if all_matched && !matched.is_empty() {
        let m = matched.iter().fold(0.0f64, |m, e| m.max(*e));
        m.to_string()
    } else {
        UNRESOLVED.to_string()
    };
    let median_error = if matched.is_empty() {
        UNRESOLVED.to_string()
    } else {
        matched.sort_by(f64::total_cmp);
        matched[matched.len() / 2].to_string()
    };
    (max_error, median_error)
}

/// Shared basis store so cells with the same window build it once.
struct BasisCache {
    map: Mutex<HashMap<(u64, usize), Arc<PswfBasis>>>,
}

impl BasisCache {
    fn new() -> Self {
        BasisCache {
            map: Mutex::new(HashMap::new()),
        }
    }

    fn get(&self, c: f64, len: usize) -> Result<Arc<PswfBasis>> {
        let key = (c.to_bits(), len);
        if let Some(b) = self.map.lock().expect("basis cache lock").get(&key) {
            return Ok(Arc::clone(b));
        }
        let built = Arc::new(PswfBasis::build(c, len)?);
        let mut map = self.map.lock().expect("basis cache lock");
        Ok(Arc::clone(map.entry(key).or_insert(built)))
    }
}

/// K lines at the midpoints of K equal subdivisions of [-w, w] (density
/// exactly K/(2w)), with per-trial random amplitudes: magnitude in
/// [0.5, 1.5], uniform phase.
fn trial_spectrum(k: usize, w: f64, rng: &mut ChaCha20Rng) -> Result<LineSpectrum> {
    let spacing = 2.0 * w / k as f64;
    LineSpectrum::new((0..k).map(|i| {
        let omega = -w + (i as f64 + 0.5) * spacing;
        let mag: f64 = rng.random_range(0.5..1.5);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        (omega, Complex64::from_polar(mag, phase))
    }))
}

/// Number of samples a solver cell uses: the correlation support [-2T, 2T]
/// at twice the band Nyquist density, plus guard points.
fn solver_grid_len(w: f64, t: f64) -> usize {
    let span = 4.0 * t;
    SOLVER_GRID_DENSITY * ((w * span / std::f64::consts::PI).ceil() as usize + 1) + 8
}

/// Sample a spectrum over [-2T, 2T] and solve; returns the detected rank and
/// the error columns against the true frequencies.
fn solver_cell(
    spec: &LineSpectrum,
    w: f64,
    t: f64,
    n: usize,
    noise: &NoiseModel,
    cache: &BasisCache,
) -> Result<CellOutput> {
    let window = ObservationWindow::new(0.0, w, t)?;
    let grid = linspace(-2.0 * t, 2.0 * t, n)?;
    let record = sample(spec, &grid, noise)?;
    let basis = cache.get(window.c(), window.default_basis_len())?;
    let problem = assemble_from_samples(&record, &window, &basis, None)?;
    let out = solve(&problem, RankPolicy::Auto { noise_floor: None })?;
    let truth: Vec<f64> = spec.lines().iter().map(|l| l.omega).collect();
    let (max_error, median_error) = error_cells(&truth, &out.omegas());
    Ok(CellOutput {
        rank: Some(out.rank()),
        max_error,
        median_error,
    })
}

/// A not-yet-computed row: coordinates filled in, outputs defaulted.
#[allow(clippy::too_many_arguments)]
fn skeleton(
    config: &ScanConfig,
    method: &str,
    t: f64,
    k: Option<usize>,
    sigma: Option<f64>,
    shots: Option<u64>,
    n_samples: Option<usize>,
    trial: usize,
) -> ScanRow {
    ScanRow {
        experiment: config.experiment.clone(),
        method: method.into(),
        t,
        k,
        sigma,
        shots,
        n_samples,
        trial,
        seed: 0,
        rank: None,
        max_error: String::new(),
        median_error: String::new(),
        runtime_ms: 0.0,
    }
}

/// Observation-time transition: equispaced spectra solved noiselessly across
/// a T x K grid.  A cell whose solve fails outright is recorded as
/// unresolved rather than aborting the scan.
pub fn scan_transition(config: &ScanConfig, existing: &[ScanRow]) -> Result<ScanResult> {
    config.validate_common()?;
    config.require_axis(&config.t_values, "t_values")?;
    config.require_axis(&config.k_values, "k_values")?;

    let mut cells = Vec::new();
    for &t in &config.t_values {
        for &k in &config.k_values {
            let n = solver_grid_len(config.w, t);
            for trial in 0..config.trials {
                cells.push((
                    skeleton(config, "solver", t, Some(k), None, None, Some(n), trial),
                    (t, k, n),
                ));
            }
        }
    }
    let cache = BasisCache::new();
    run_cells(config, existing, cells, |seed, (t, k, n)| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        trial_spectrum(k, config.w, &mut rng)
            .and_then(|spec| solver_cell(&spec, config.w, t, n, &NoiseModel::none(), &cache))
            .unwrap_or_else(|_| unresolved_output())
    })
}

/// Reconstruction-formula comparison: band-limited interpolation error from
/// n equispaced samples, prolate basis vs cardinal (sinc) series, as n
/// crosses the 2WT/pi threshold.  A method that refuses the sample budget
/// yields an unresolved row.
pub fn scan_sampling(config: &ScanConfig, existing: &[ScanRow]) -> Result<ScanResult> {
    config.validate_common()?;
    config.require_axis(&config.t_values, "t_values")?;
    config.require_axis(&config.n_values, "n_values")?;

    let mut cells = Vec::new();
    for &t in &config.t_values {
        for &n in &config.n_values {
            for method in ["prolate", "sinc"] {
                for trial in 0..config.trials {
                    cells.push((
                        skeleton(config, method, t, None, None, None, Some(n), trial),
                        (t, n, method, trial),
                    ));
                }
            }
        }
    }
    let cache = BasisCache::new();
    run_cells(config, existing, cells, |seed, (t, n, method, trial)| {
        let w = config.w;
        (|| -> Result<CellOutput> {
            let win = BandWindow::new(w, t)?;
            // Half-capacity line count: a comfortably representable signal.
            let k = ((win.c() / std::f64::consts::PI).floor() as usize).max(1);
            // One truth per (t, trial): the prolate and sinc rows, and every
            // n, reconstruct the same signal.  Its seed must therefore not
            // depend on n or the method, so it is re-derived here instead of
            // using the cell seed.
            let spectrum_seed = cell_seed(
                config.base_seed,
                &format!("sampling-truth|t={t}|trial={trial}"),
            );
            let mut rng = ChaCha20Rng::seed_from_u64(spectrum_seed);
            let spec = trial_spectrum(k, w, &mut rng)?;
            let _ = seed;
            let grid = linspace(-t, t, n)?;
            let record = sample(&spec, &grid, &NoiseModel::none())?;
            let eval = linspace(-EVAL_SPAN_FRACTION * t, EVAL_SPAN_FRACTION * t, EVAL_GRID_LEN)?;
            let reference: Vec<Complex64> = eval.iter().map(|&x| spec.eval(x)).collect();
            let scale = reference
                .iter()
                .fold(0.0f64, |m, v| m.max(v.norm()))
                .max(f64::MIN_POSITIVE);
            let recon: Vec<Complex64> = match method {
                "prolate" => {
                    let basis = cache.get(win.c(), win.required_samples() + 10)?;
                    let interp = prolate_interpolate(&record, &win, &basis)?;
                    eval.iter().map(|&x| interp.eval(x)).collect()
                }
                _ => {
                    let interp = sinc_interpolate(&record, &win)?;
                    eval.iter().map(|&x| interp.eval(x)).collect()
                }
            };
            let mut errs: Vec<f64> = recon
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).norm() / scale)
                .collect();
            errs.sort_by(f64::total_cmp);
            Ok(CellOutput {
                rank: None,
                max_error: errs.last().expect("non-empty eval grid").to_string(),
                median_error: errs[errs.len() / 2].to_string(),
            })
        })()
        .unwrap_or_else(|_| unresolved_output())
    })
}

/// Noise sweep: Gaussian sigma and/or shot-budget axes over a T x K grid.
/// sigma = 0 maps to the genuinely noiseless path, so those rows coincide
/// with a noiseless solve of the same seeded spectrum.
pub fn scan_noise(config: &ScanConfig, existing: &[ScanRow]) -> Result<ScanResult> {
    config.validate_common()?;
    config.require_axis(&config.t_values, "t_values")?;
    config.require_axis(&config.k_values, "k_values")?;
    if config.sigma_values.is_empty() && config.shot_values.is_empty() {
        return Err(Error::domain(
            "noise scan needs sigma_values or shot_values (or both)",
        ));
    }

    let mut cells = Vec::new();
    for &t in &config.t_values {
        for &k in &config.k_values {
            let n = solver_grid_len(config.w, t);
            for &sigma in &config.sigma_values {
                for trial in 0..config.trials {
                    cells.push((
                        skeleton(config, "solver", t, Some(k), Some(sigma), None, Some(n), trial),
                        (t, k, n, Some(sigma), None),
                    ));
                }
            }
            for &shots in &config.shot_values {
                for trial in 0..config.trials {
                    cells.push((
                        skeleton(config, "solver", t, Some(k), None, Some(shots), Some(n), trial),
                        (t, k, n, None, Some(shots)),
                    ));
                }
            }
        }
    }
    let cache = BasisCache::new();
    run_cells(config, existing, cells, |seed, (t, k, n, sigma, shots)| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (|| -> Result<CellOutput> {
            let mut spec = trial_spectrum(k, config.w, &mut rng)?;
            let kind = match (sigma, shots) {
                (Some(0.0), _) => NoiseKind::None,
                (Some(s), _) => NoiseKind::IidGaussian { sigma: s },
                (None, Some(m)) => {
                    // Shot readout estimates values in the unit disk.
                    let mass = spec.amplitude_mass().max(f64::MIN_POSITIVE);
                    spec = spec.scaled(Complex64::new(1.0 / mass, 0.0));
                    NoiseKind::Shot { shots: m }
                }
                (None, None) => unreachable!("cells carry sigma or shots"),
            };
            let noise = NoiseModel {
                kind,
                seed: rng.random(),
            };
            solver_cell(&spec, config.w, t, n, &noise, &cache)
        })()
        .unwrap_or_else(|_| unresolved_output())
    })
}

/// Shared cell driver: skip cells already present in `existing`, compute the
/// rest in parallel (each timed), merge, and sort by cell identity.
fn run_cells<C, F>(
    config: &ScanConfig,
    existing: &[ScanRow],
    cells: Vec<(ScanRow, C)>,
    compute: F,
) -> Result<ScanResult>
where
    C: Send,
    F: Fn(u64, C) -> CellOutput + Sync,
{
    let have: HashSet<String> = existing.iter().map(ScanRow::cell_key).collect();
    let mut rows: Vec<ScanRow> = existing.to_vec();
    let missing: Vec<(ScanRow, C)> = cells
        .into_iter()
        .filter(|(row, _)| !have.contains(&row.cell_key()))
        .collect();
    let computed: Vec<ScanRow> = missing
        .into_par_iter()
        .map(|(mut row, cell)| {
            let start = Instant::now();
            let seed = cell_seed(config.base_seed, &row.cell_key());
            let out = compute(seed, cell);
            row.seed = seed;
            row.rank = out.rank;
            row.max_error = out.max_error;
            row.median_error = out.median_error;
            row.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
            row
        })
        .collect();
    rows.extend(computed);
    rows.sort_by_key(ScanRow::cell_key);
    Ok(ScanResult {
        config: config.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn base_config(experiment: &str) -> ScanConfig {
        ScanConfig {
            experiment: experiment.into(),
            w: 3.0,
            t_values: vec![],
            k_values: vec![],
            sigma_values: vec![],
            shot_values: vec![],
            n_values: vec![],
            trials: 1,
            base_seed: 42,
            out: None,
        }
    }

    fn strip_runtime(rows: &[ScanRow]) -> Vec<ScanRow> {
        rows.iter()
            .map(|r| {
                let mut r = r.clone();
                r.runtime_ms = 0.0;
                r
            })
            .collect()
    }

    #[test]
    fn matching_is_one_to_one_and_nearest_first() {
        // Two estimates close to one truth: only one may claim it, the other
        // takes the remaining (far) truth so the miss shows up as error.
        let truth = [0.5, 5.0];
        let found = [0.45, 0.55];
        let m = match_nearest(&truth, &found);
        assert_eq!(m[0], Some(0));
        assert_eq!(m[1], Some(1));

        // One estimate, two truths: the closer truth wins, the other stays
        // unmatched.
        let m = match_nearest(&[0.0, 1.0], &[0.4]);
        assert_eq!(m[0], Some(0));
        assert_eq!(m[1], None);

        let (max_e, med_e) = error_cells(&[0.0, 1.0], &[0.4]);
        assert_eq!(max_e, UNRESOLVED);
        assert!((med_e.parse::<f64>().unwrap() - 0.4).abs() < 1e-15);

        // Empty estimate list: nothing matched at all.
        let (max_e, med_e) = error_cells(&[1.0], &[]);
        assert_eq!(max_e, UNRESOLVED);
        assert_eq!(med_e, UNRESOLVED);
    }

    #[test]
    fn single_line_resolves_at_every_observation_length() {
        let mut config = base_config("transition");
        config.t_values = vec![0.5, 1.0, 2.0, 4.0];
        config.k_values = vec![1];
        config.trials = 2;
        let result = run_scan(&config, &[]).unwrap();
        assert_eq!(result.rows.len(), 8);
        for row in &result.rows {
            let err = row
                .max_error_value()
                .unwrap_or_else(|| panic!("unresolved single line at t={}", row.t));
            assert!(
                err < 1e-5 * config.w,
                "single line at t={} err {err}",
                row.t
            );
            assert_eq!(row.rank, Some(1));
        }
    }

    #[test]
    fn transition_turns_on_near_the_critical_observation_length() {
        // Eight equispaced lines across [-4, 4]: unit density, so the jump
        // from useless to near-exact happens around t = pi.
        let mut config = base_config("transition");
        config.w = 4.0;
        config.t_values = vec![1.6, 2.6];
        config.k_values = vec![8];
        let result = run_scan(&config, &[]).unwrap();
        let err_at = |t: f64| {
            result
                .rows
                .iter()
                .find(|r| r.t == t)
                .unwrap()
                .max_error_value()
        };
        let short = err_at(1.6);
        assert!(
            short.is_none() || short.unwrap() > 1e-2,
            "t=1.6 should fail, got {short:?}"
        );
        let long = err_at(2.6).expect("t=2.6 should resolve");
        assert!(long < 1e-4, "t=2.6 err {long}");
    }

    #[test]
    fn transition_location_is_set_by_line_density_alone() {
        // Doubling both the line count and the band leaves the per-line
        // spacing unchanged, so the same observation lengths fail/succeed.
        // (The comparison needs K large enough for the threshold to bind:
        // very small pencils stay numerically benign below it.)
        let mut narrow = base_config("transition");
        narrow.w = 4.0;
        narrow.t_values = vec![1.8, 3.0];
        narrow.k_values = vec![8];
        let mut wide = narrow.clone();
        wide.w = 8.0;
        wide.k_values = vec![16];
        let pattern = |config: &ScanConfig| -> Vec<(f64, bool)> {
            run_scan(config, &[])
                .unwrap()
                .rows
                .iter()
                .map(|r| (r.t, r.max_error_value().map_or(false, |e| e < 1e-4)))
                .collect()
        };
        assert_eq!(pattern(&narrow), pattern(&wide));
    }

    #[test]
    fn prolate_reconstruction_beats_the_cardinal_series() {
        let mut config = base_config("sampling");
        config.w = 2.5;
        config.t_values = vec![4.0];
        let win = BandWindow::new(2.5, 4.0).unwrap();
        let req = win.required_samples();
        config.n_values = vec![req - 2, req + 2, req + 10, req + 18];
        let result = run_scan(&config, &[]).unwrap();
        let err = |method: &str, n: usize| {
            result
                .rows
                .iter()
                .find(|r| r.method == method && r.n_samples == Some(n))
                .unwrap()
                .max_error_value()
        };
        // Below the threshold count the prolate fit refuses outright.
        assert_eq!(err("prolate", req - 2), None);
        // Ten samples past the threshold: accurate, and far ahead of sinc.
        let prolate = err("prolate", req + 10).expect("prolate at req+10");
        let sinc = err("sinc", req + 10).expect("sinc at req+10");
        assert!(prolate <= 1e-4, "prolate rel err {prolate}");
        assert!(sinc >= 10.0 * prolate, "sinc {sinc} vs prolate {prolate}");
        // More samples keep helping (coarsely monotone).
        let p_early = err("prolate", req + 2).unwrap();
        let p_late = err("prolate", req + 18).unwrap();
        assert!(p_late <= p_early, "prolate {p_early} -> {p_late}");
    }

    #[test]
    fn noise_scan_errors_scale_with_sigma() {
        let mut config = base_config("noise");
        config.t_values = vec![1.3 * PI];
        config.k_values = vec![3];
        config.sigma_values = vec![1e-4, 1e-2];
        config.trials = 5;
        let result = run_scan(&config, &[]).unwrap();
        let median_of = |sigma: f64| {
            let mut errs: Vec<f64> = result
                .rows
                .iter()
                .filter(|r| r.sigma == Some(sigma))
                .filter_map(|r| r.max_error_value())
                .collect();
            assert!(errs.len() >= 3, "most cells at sigma={sigma} resolve");
            errs.sort_by(f64::total_cmp);
            errs[errs.len() / 2]
        };
        let low = median_of(1e-4);
        let high = median_of(1e-2);
        let ratio = high / low;
        assert!(
            (20.0..500.0).contains(&ratio),
            "expected ~100x error growth for 100x noise, got {ratio} ({low} -> {high})"
        );
    }

    #[test]
    fn sigma_zero_rows_reproduce_the_noiseless_pipeline() {
        let mut config = base_config("noise");
        config.t_values = vec![2.0];
        config.k_values = vec![3];
        config.sigma_values = vec![0.0];
        config.trials = 2;
        let result = run_scan(&config, &[]).unwrap();
        assert_eq!(result.rows.len(), 2);
        for row in &result.rows {
            // Recompute the cell by hand through the noiseless path and
            // compare the recorded strings exactly.
            let mut rng = ChaCha20Rng::seed_from_u64(row.seed);
            let spec = trial_spectrum(3, config.w, &mut rng).unwrap();
            let cache = BasisCache::new();
            let n = solver_grid_len(config.w, row.t);
            let out = solver_cell(&spec, config.w, row.t, n, &NoiseModel::none(), &cache).unwrap();
            assert_eq!(row.rank, out.rank);
            assert_eq!(row.max_error, out.max_error);
            assert_eq!(row.median_error, out.median_error);
        }

        // And the scan as a whole is bitwise reproducible.
        let again = run_scan(&config, &[]).unwrap();
        assert_eq!(strip_runtime(&result.rows), strip_runtime(&again.rows));
    }

    #[test]
    fn shot_noise_rows_use_normalized_spectra_and_resolve() {
        let mut config = base_config("noise");
        config.t_values = vec![1.5 * PI];
        config.k_values = vec![2];
        config.shot_values = vec![1_000_000];
        config.trials = 3;
        let result = run_scan(&config, &[]).unwrap();
        assert_eq!(result.rows.len(), 3);
        let resolved = result
            .rows
            .iter()
            .filter(|r| r.max_error_value().is_some_and(|e| e < 1e-2))
            .count();
        assert!(resolved >= 2, "only {resolved}/3 shot cells resolved");
    }

    #[test]
    fn scan_is_resumable_without_recomputing_kept_rows() {
        let mut config = base_config("transition");
        config.t_values = vec![1.0, 2.0];
        config.k_values = vec![1, 2];
        config.trials = 2;
        let full = run_scan(&config, &[]).unwrap();
        assert_eq!(full.rows.len(), 8);

        // Keep an arbitrary half of the rows and resume.
        let kept: Vec<ScanRow> = full.rows.iter().step_by(2).cloned().collect();
        let resumed = run_scan(&config, &kept).unwrap();
        assert_eq!(strip_runtime(&resumed.rows), strip_runtime(&full.rows));
        // Kept rows carry their original runtimes through verbatim: proof
        // they were not recomputed.
        for old in &kept {
            let found = resumed
                .rows
                .iter()
                .find(|r| r.cell_key() == old.cell_key())
                .unwrap();
            assert_eq!(found.runtime_ms, old.runtime_ms);
        }
    }

    #[test]
    fn tables_round_trip_through_csv() {
        let mut config = base_config("transition");
        config.t_values = vec![1.0];
        config.k_values = vec![1, 3];
        let result = run_scan(&config, &[]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        result.write(&path).unwrap();
        let back = read_rows(&path).unwrap();
        assert_eq!(back, result.rows);
        let echo: ScanConfig = serde_json::from_reader(
            std::fs::File::open(dir.path().join("rows.config.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(echo.k_values, config.k_values);
        assert_eq!(echo.base_seed, config.base_seed);
    }

    #[test]
    fn configs_are_validated() {
        let mut config = base_config("transition");
        assert!(run_scan(&config, &[]).is_err(), "empty axes");
        config.t_values = vec![1.0];
        config.k_values = vec![1];
        config.trials = 0;
        assert!(run_scan(&config, &[]).is_err(), "zero trials");
        config.trials = 1;
        config.w = -1.0;
        assert!(run_scan(&config, &[]).is_err(), "negative band");
        config.w = 3.0;
        config.experiment = "mystery".into();
        assert!(run_scan(&config, &[]).is_err(), "unknown experiment");
        let mut noise = base_config("noise");
        noise.t_values = vec![1.0];
        noise.k_values = vec![1];
        assert!(run_scan(&noise, &[]).is_err(), "noise scan without axes");
    }
}
