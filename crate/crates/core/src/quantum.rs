//! Small-Hamiltonian harness: exact time evolution of finite quantum systems,
//! the autocorrelation and observable signals they emit, shot-noise readout,
//! and the end-to-end pipeline that feeds those signals to the spectral
//! solver.
//!
//! Everything here evolves states through a cached exact eigendecomposition,
//! so the signals are numerically exact multi-exponentials; readout noise (a
//! finite shot budget per time point) is the only imperfection modeled.  The
//! resource an experiment pays is tracked as the total evolution time
//! `sum_j |t_j|` over every time the signal was queried.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;
use crate::pswf::PswfBasis;
use crate::quad::GaussLegendre;
use crate::signal::{linspace, sample, LineSpectrum, NoiseKind, NoiseModel};
use crate::solver::{
    assemble_from_lines, assemble_from_samples, solve, ObservationWindow, RankPolicy,
    RecoveredSpectrum,
};

/// Relative Frobenius tolerance for a matrix offered as a Hamiltonian.
const HAMILTONIAN_HERMITICITY_TOL: f64 = 1e-12;
/// Looser tolerance for observables, which often come from user files.
const OBSERVABLE_HERMITICITY_TOL: f64 = 1e-10;
/// Eigenvector Gram matrix must match the identity to this tolerance.
const MODE_ORTHONORMALITY_TOL: f64 = 1e-10;
/// States must be normalized to this tolerance.
const STATE_NORM_TOL: f64 = 1e-12;
/// Energies (or energy differences) closer than this relative spacing are
/// treated as one degenerate line when building a spectrum.
const DEGENERACY_REL_TOL: f64 = 1e-9;
/// Spectral lines carrying less than this fraction of the total amplitude
/// mass are dropped from derived spectra (they are exact zeros up to rounding).
const NEGLIGIBLE_WEIGHT_REL: f64 = 1e-15;
const MAX_RANDOM_DIM: usize = 2048;
const MAX_CHAIN_SITES: usize = 12;

/// A finite Hermitian Hamiltonian with its eigendecomposition cached.
///
/// `energies` are ascending; `modes` holds the matching orthonormal
/// eigenvectors as columns.  Every signal this module produces is computed
/// from the cache, so time evolution is exact to rounding.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    matrix: Array2<Complex64>,
    energies: Vec<f64>,
    modes: Array2<Complex64>,
    source: String,
}

/// Recipe for building a [`Hamiltonian`].
pub enum HamiltonianKind {
    /// Gaussian unitary ensemble draw scaled so the spectrum concentrates in
    /// roughly [-sqrt(2), sqrt(2)] regardless of dimension.
    Random { dim: usize, seed: u64 },
    /// Open spin-1/2 chain: J sum_i S_i . S_{i+1} + h sum_i S^z_i, with
    /// spin operators (eigenvalues +-1/2, not Pauli matrices).
    HeisenbergChain { n_sites: usize, j: f64, h: f64 },
    /// An explicit matrix, e.g. parsed from a file; `label` names its origin.
    Matrix {
        matrix: Array2<Complex64>,
        label: String,
    },
}

pub fn build_hamiltonian(kind: &HamiltonianKind) -> Result<Hamiltonian> {
    match kind {
        HamiltonianKind::Random { dim, seed } => {
            let d = *dim;
            if d == 0 || d > MAX_RANDOM_DIM {
                return Err(Error::domain(format!(
                    "random Hamiltonian dimension must be in 1..={MAX_RANDOM_DIM}, got {d}"
                )));
            }
            let mut rng = ChaCha20Rng::seed_from_u64(*seed);
            let mut a = Array2::<Complex64>::zeros((d, d));
            for i in 0..d {
                for j in 0..d {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    a[[i, j]] = Complex64::new(re, im);
                }
            }
            let scale = 2.0 * (d as f64).sqrt();
            let mut h = Array2::<Complex64>::zeros((d, d));
            for i in 0..d {
                for j in 0..d {
                    h[[i, j]] = (a[[i, j]] + a[[j, i]].conj()) / scale;
                }
            }
            Hamiltonian::from_matrix(h, format!("random(dim={d}, seed={seed})"))
        }
        HamiltonianKind::HeisenbergChain { n_sites, j, h } => {
            let n = *n_sites;
            if n == 0 || n > MAX_CHAIN_SITES {
                return Err(Error::domain(format!(
                    "chain length must be in 1..={MAX_CHAIN_SITES} sites, got {n}"
                )));
            }
            if !j.is_finite() || !h.is_finite() {
                return Err(Error::domain(format!(
                    "chain couplings must be finite, got J = {j}, h = {h}"
                )));
            }
            let dim = 1usize << n;
            let mut m = Array2::<Complex64>::zeros((dim, dim));
            let z = |state: usize, site: usize| -> f64 {
                if (state >> site) & 1 == 1 {
                    0.5
                } else {
                    -0.5
                }
            };
            for state in 0..dim {
                let mut diag = 0.0;
                for site in 0..n {
                    diag += h * z(state, site);
                }
                for site in 0..n.saturating_sub(1) {
                    diag += j * z(state, site) * z(state, site + 1);
                    // Flip-flop term (S^x S^x + S^y S^y) connects states whose
                    // bits differ on this bond, with amplitude J/2.
                    if (state >> site) & 1 != (state >> (site + 1)) & 1 {
                        let flipped = state ^ ((1 << site) | (1 << (site + 1)));
                        m[[flipped, state]] += Complex64::new(j / 2.0, 0.0);
                    }
                }
                m[[state, state]] += Complex64::new(diag, 0.0);
            }
            Hamiltonian::from_matrix(m, format!("heisenberg_chain(n={n}, J={j}, h={h})"))
        }
        HamiltonianKind::Matrix { matrix, label } => {
            Hamiltonian::from_matrix(matrix.clone(), label.clone())
        }
    }
}

impl Hamiltonian {
    /// Validate a matrix as Hermitian and cache its eigendecomposition.
    pub fn from_matrix(matrix: Array2<Complex64>, source: String) -> Result<Self> {
        let (r, cdim) = matrix.dim();
        if r != cdim || r == 0 {
            return Err(Error::domain(format!(
                "Hamiltonian must be square and non-empty, got {r} x {cdim}"
            )));
        }
        let mut norm2 = 0.0;
        let mut dev2 = 0.0;
        for i in 0..r {
            for j in 0..r {
                let v = matrix[[i, j]];
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::domain(format!(
                        "Hamiltonian entry ({i}, {j}) is not finite: {v}"
                    )));
                }
                norm2 += v.norm_sqr();
                dev2 += (v - matrix[[j, i]].conj()).norm_sqr();
            }
        }
        let deviation = dev2.sqrt() / norm2.sqrt().max(f64::MIN_POSITIVE);
        if deviation > HAMILTONIAN_HERMITICITY_TOL {
            return Err(Error::NonHermitian {
                deviation,
                context: format!("Hamiltonian from {source}"),
            });
        }
        let (energies, modes) = linalg::eigh(&matrix)?;
        // The decomposition is the engine behind every signal; refuse to
        // proceed if the solver returned a degraded mode set.
        let mut worst = 0.0f64;
        for k in 0..r {
            for l in k..r {
                let mut g = Complex64::ZERO;
                for i in 0..r {
                    g += modes[[i, k]].conj() * modes[[i, l]];
                }
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        if worst > MODE_ORTHONORMALITY_TOL {
            return Err(Error::Numeric(format!(
                "eigenmodes of {source} deviate from orthonormality by {worst:.3e}"
            )));
        }
        Ok(Hamiltonian {
            matrix,
            energies,
            modes,
            source,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    /// Eigenvalues, ascending.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Orthonormal eigenvectors, one per column, matching [`Self::energies`].
    pub fn modes(&self) -> &Array2<Complex64> {
        &self.modes
    }

    /// Where this Hamiltonian came from (recipe or file name).
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Centre frequency and half-bandwidth of a window containing the whole
    /// spectrum with the given relative margin (margin 1 hugs the extreme
    /// eigenvalues exactly).
    pub fn full_band(&self, margin: f64) -> Result<(f64, f64)> {
        if !margin.is_finite() || margin <= 0.0 {
            return Err(Error::domain(format!(
                "band margin must be finite and positive, got {margin}"
            )));
        }
        let lo = self.energies[0];
        let hi = *self.energies.last().expect("non-empty spectrum");
        let half = (hi - lo) / 2.0;
        let w = if half > 0.0 { margin * half } else { margin };
        Ok(((lo + hi) / 2.0, w))
    }
}

/// A pure state of a finite system, kept normalized.
#[derive(Debug, Clone)]
pub struct QuantumState {
    amplitudes: Array1<Complex64>,
}

impl QuantumState {
    /// Wrap amplitudes that are already unit-norm (to rounding).
    pub fn new(amplitudes: Array1<Complex64>) -> Result<Self> {
        let norm = validate_amplitudes(&amplitudes)?;
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::domain(format!(
                "state norm is {norm}, expected 1 within {STATE_NORM_TOL:.0e}; \
                 use QuantumState::normalized to rescale"
            )));
        }
        Ok(QuantumState { amplitudes })
    }

    /// Normalize arbitrary non-zero amplitudes into a state.
    pub fn normalized(mut amplitudes: Array1<Complex64>) -> Result<Self> {
        let norm = validate_amplitudes(&amplitudes)?;
        if norm < 1e-150 {
            return Err(Error::domain("cannot normalize a (near-)zero vector"));
        }
        amplitudes.mapv_inplace(|v| v / norm);
        Ok(QuantumState { amplitudes })
    }

    /// A reproducible random state: complex Gaussian amplitudes, normalized.
    pub fn random(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("state dimension must be at least 1"));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let amplitudes = Array1::from_iter((0..dim).map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        }));
        Self::normalized(amplitudes)
    }

    /// The computational basis state `index`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::domain(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amplitudes = Array1::zeros(dim);
        amplitudes[index] = Complex64::ONE;
        Self::new(amplitudes)
    }

    /// The state with equal overlap 1/dim on every eigenmode of `h`, so its
    /// autocorrelation carries every eigenvalue with the same weight.
    pub fn uniform_over_modes(h: &Hamiltonian) -> Result<Self> {
        let d = h.dim();
        let mut amplitudes = Array1::<Complex64>::zeros(d);
        for k in 0..d {
            for i in 0..d {
                amplitudes[i] += h.modes[[i, k]];
            }
        }
        Self::normalized(amplitudes)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amplitudes
    }
}

fn validate_amplitudes(amplitudes: &Array1<Complex64>) -> Result<f64> {
    if amplitudes.is_empty() {
        return Err(Error::domain("state must have at least one amplitude"));
    }
    let mut norm2 = 0.0;
    for v in amplitudes {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::domain(format!("non-finite amplitude {v}")));
        }
        norm2 += v.norm_sqr();
    }
    Ok(norm2.sqrt())
}

/// Overlaps of `state` with each eigenmode: c_k = <mode_k, state>.
fn mode_coefficients(h: &Hamiltonian, state: &QuantumState) -> Result<Array1<Complex64>> {
    if state.dim() != h.dim() {
        return Err(Error::domain(format!(
            "state dimension {} does not match Hamiltonian dimension {}",
            state.dim(),
            h.dim()
        )));
    }
    let d = h.dim();
    let mut c = Array1::<Complex64>::zeros(d);
    for k in 0..d {
        let mut acc = Complex64::ZERO;
        for i in 0..d {
            acc += h.modes[[i, k]].conj() * state.amplitudes[i];
        }
        c[k] = acc;
    }
    Ok(c)
}

/// Evolve `state` for time `t` under `h` (exactly, through the cached
/// eigendecomposition): Psi(t) = e^{-i H t} Psi.
pub fn evolve(h: &Hamiltonian, state: &QuantumState, t: f64) -> Result<QuantumState> {
    if !t.is_finite() {
        return Err(Error::domain(format!("evolution time must be finite, got {t}")));
    }
    let mut c = mode_coefficients(h, state)?;
    for (k, ck) in c.iter_mut().enumerate() {
        *ck *= Complex64::from_polar(1.0, -h.energies[k] * t);
    }
    let d = h.dim();
    let mut amplitudes = Array1::<Complex64>::zeros(d);
    for i in 0..d {
        let mut acc = Complex64::ZERO;
        for k in 0..d {
            acc += h.modes[[i, k]] * c[k];
        }
        amplitudes[i] = acc;
    }
    Ok(QuantumState { amplitudes })
}

/// Weight |<mode_k, state>|^2 of each eigenmode in `state`, in energy order.
pub fn autocorrelation_weights(h: &Hamiltonian, state: &QuantumState) -> Result<Vec<f64>> {
    let c = mode_coefficients(h, state)?;
    Ok(c.iter().map(|v| v.norm_sqr()).collect())
}

/// The survival amplitude S(t) = <Psi(t), Psi(0)> = sum_k w_k e^{+i E_k t}.
///
/// It is a unit-mass, positive-weight line spectrum: S(0) = 1, |S(t)| <= 1,
/// and S(-t) = conj(S(t)).
pub fn autocorrelation(h: &Hamiltonian, state: &QuantumState, t: f64) -> Result<Complex64> {
    if !t.is_finite() {
        return Err(Error::domain(format!("evolution time must be finite, got {t}")));
    }
    let weights = autocorrelation_weights(h, state)?;
    let mut s = Complex64::ZERO;
    for (k, w) in weights.iter().enumerate() {
        s += Complex64::from_polar(*w, h.energies[k] * t);
    }
    Ok(s)
}

/// The autocorrelation's line spectrum: weight |<mode_k, state>|^2 at
/// frequency E_k, with degenerate energies merged into one line and exact
/// zero-weight lines dropped.
pub fn autocorrelation_spectrum(h: &Hamiltonian, state: &QuantumState) -> Result<LineSpectrum> {
    let weights = autocorrelation_weights(h, state)?;
    let pairs: Vec<(f64, Complex64)> = h
        .energies
        .iter()
        .zip(&weights)
        .map(|(&e, &w)| (e, Complex64::new(w, 0.0)))
        .collect();
    merge_degenerate(pairs)
}

/// The expectation signal <Psi(t), O Psi(t)> of a Hermitian observable.
///
/// Computed directly from the evolved state; [`observable_spectrum`] gives
/// the same signal as an explicit line spectrum.
pub fn observable_signal(
    h: &Hamiltonian,
    state: &QuantumState,
    observable: &Array2<Complex64>,
    t: f64,
) -> Result<Complex64> {
    check_observable(h, observable)?;
    let evolved = evolve(h, state, t)?;
    let d = h.dim();
    let mut s = Complex64::ZERO;
    for i in 0..d {
        let mut row = Complex64::ZERO;
        for j in 0..d {
            row += observable[[i, j]] * evolved.amplitudes[j];
        }
        s += evolved.amplitudes[i].conj() * row;
    }
    Ok(s)
}

/// Line spectrum of the observable signal: amplitude
/// conj(c_k) <mode_k, O mode_l> c_l at frequency E_k - E_l, summed over
/// degenerate differences.  Lines at negligible relative weight are dropped.
///
/// Unlike the autocorrelation, amplitudes are genuinely complex; only the
/// total signal is constrained (it is real for Hermitian O, since the line
/// set is symmetric under (omega, alpha) -> (-omega, conj(alpha))).
pub fn observable_spectrum(
    h: &Hamiltonian,
    state: &QuantumState,
    observable: &Array2<Complex64>,
) -> Result<LineSpectrum> {
    check_observable(h, observable)?;
    let c = mode_coefficients(h, state)?;
    let d = h.dim();
    // m[[k, l]] = <mode_k, O mode_l>
    let mut m = Array2::<Complex64>::zeros((d, d));
    for k in 0..d {
        for l in 0..d {
            let mut acc = Complex64::ZERO;
            for i in 0..d {
                let mut row = Complex64::ZERO;
                for jj in 0..d {
                    row += observable[[i, jj]] * h.modes[[jj, l]];
                }
                acc += h.modes[[i, k]].conj() * row;
            }
            m[[k, l]] = acc;
        }
    }
    let mut pairs = Vec::with_capacity(d * d);
    for k in 0..d {
        for l in 0..d {
            let alpha = c[k].conj() * m[[k, l]] * c[l];
            pairs.push((h.energies[k] - h.energies[l], alpha));
        }
    }
    merge_degenerate(pairs)
}

fn check_observable(h: &Hamiltonian, observable: &Array2<Complex64>) -> Result<()> {
    let (r, cdim) = observable.dim();
    if r != h.dim() || cdim != h.dim() {
        return Err(Error::domain(format!(
            "observable is {r} x {cdim}, expected {d} x {d}",
            d = h.dim()
        )));
    }
    let mut norm2 = 0.0;
    let mut dev2 = 0.0;
    for i in 0..r {
        for j in 0..r {
            let v = observable[[i, j]];
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::domain(format!(
                    "observable entry ({i}, {j}) is not finite: {v}"
                )));
            }
            norm2 += v.norm_sqr();
            dev2 += (v - observable[[j, i]].conj()).norm_sqr();
        }
    }
    let deviation = dev2.sqrt() / norm2.sqrt().max(f64::MIN_POSITIVE);
    if deviation > OBSERVABLE_HERMITICITY_TOL {
        return Err(Error::NonHermitian {
            deviation,
            context: "observable".into(),
        });
    }
    Ok(())
}

/// Merge (frequency, amplitude) pairs whose frequencies agree to rounding
/// into single lines, dropping lines of negligible total weight.
fn merge_degenerate(mut pairs: Vec<(f64, Complex64)>) -> Result<LineSpectrum> {
    if pairs.is_empty() {
        return Ok(LineSpectrum::empty());
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let scale = pairs.iter().fold(1.0f64, |m, p| m.max(p.0.abs()));
    let tol = DEGENERACY_REL_TOL * scale;
    // (cluster anchor, amplitude sum, frequency sum, member count)
    let mut merged: Vec<(f64, Complex64, f64, usize)> = Vec::new();
    for (omega, alpha) in pairs {
        match merged.last_mut() {
            Some((anchor, acc, fsum, count)) if omega - *anchor <= tol => {
                *acc += alpha;
                *fsum += omega;
                *count += 1;
            }
            _ => merged.push((omega, alpha, omega, 1)),
        }
    }
    let mass: f64 = merged.iter().map(|(_, a, _, _)| a.norm()).sum();
    let floor = NEGLIGIBLE_WEIGHT_REL * mass;
    LineSpectrum::new(merged.into_iter().filter_map(|(_, alpha, fsum, count)| {
        (alpha.norm() > floor).then_some((fsum / count as f64, alpha))
    }))
}

/// A finite-shot readout budget: each requested signal value is estimated
/// from `shots` two-outcome experiments per quadrature.
#[derive(Debug, Clone, Copy)]
pub struct ShotModel {
    pub shots: u64,
    pub seed: u64,
}

impl ShotModel {
    pub fn new(shots: u64, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::domain("shot budget must be at least 1"));
        }
        Ok(ShotModel { shots, seed })
    }
}

/// Estimate a signal value from finite shots: the real and imaginary parts
/// are estimated independently, each as 2 Binomial(shots, (1 + x)/2)/shots - 1.
///
/// Requires |value| <= 1 (within rounding slack), as produced by interference
/// experiments; the estimate is unbiased with variance ~ 1/shots per
/// quadrature.  Same model, same value, same seed give the same estimate.
pub fn shot_estimate(value: Complex64, model: &ShotModel) -> Result<Complex64> {
    if model.shots == 0 {
        return Err(Error::domain("shot budget must be at least 1"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(model.seed);
    crate::signal::hadamard_shot(value, model.shots, &mut rng)
}

/// Configuration of the hybrid pipeline: the observation window, how many
/// samples to draw, and the readout model.
#[derive(Debug, Clone)]
pub struct QpdParams {
    /// Centre of the analysis band.
    pub omega0: f64,
    /// Half-bandwidth of the analysis band.
    pub w: f64,
    /// Half-length of the observation window.
    pub t: f64,
    /// Number of uniform samples across [-2T, 2T] for the finite-shot route;
    /// `None` picks twice the minimum density plus a margin.  Ignored by the
    /// perfect-readout route, which queries the signal on quadrature nodes.
    pub n_samples: Option<usize>,
    /// `None` models perfect readout; `Some` draws every sample through the
    /// finite-shot estimator.
    pub shots: Option<ShotModel>,
}

/// One eigenvalue of the simulated system together with its weight in the
/// prepared state's autocorrelation (degenerate energies merged).
#[derive(Debug, Clone, Copy)]
pub struct SpectralWeight {
    pub energy: f64,
    pub weight: f64,
}

/// Everything the hybrid pipeline produced, with the ground truth it was
/// simulated from.
pub struct QpdReport {
    /// Recipe or file the Hamiltonian came from.
    pub source: String,
    pub window: ObservationWindow,
    /// What the solver recovered from the signal alone.
    pub spectrum: RecoveredSpectrum,
    /// In-band eigenvalues (from the cached decomposition) with their
    /// autocorrelation weights; this is the ground truth for `spectrum`.
    pub true_lines: Vec<SpectralWeight>,
    /// Per true line: distance to the nearest recovered frequency, `None`
    /// when nothing was recovered.
    pub frequency_errors: Vec<Option<f64>>,
    /// Per true line: weight error of the nearest recovered line.
    pub weight_errors: Vec<Option<f64>>,
    /// How many times the signal was queried.
    pub n_signal_queries: usize,
    /// Total simulated evolution time sum_j |t_j| over those queries: the
    /// resource cost of the run.
    pub total_evolution_time: f64,
}

/// Run the full hybrid loop: simulate the autocorrelation of `state` under
/// `h`, read it out (perfectly or through shots), and hand the signal to the
/// spectral solver over the window in `params`.
pub fn qpd_pipeline(
    h: &Hamiltonian,
    state: &QuantumState,
    params: &QpdParams,
) -> Result<QpdReport> {
    let window = ObservationWindow::new(params.omega0, params.w, params.t)?;
    let full = autocorrelation_spectrum(h, state)?;
    let basis = Arc::new(PswfBasis::build(window.c(), window.default_basis_len())?);

    let (problem, n_signal_queries, total_evolution_time) = match &params.shots {
        None => {
            // Perfect readout: closed-form values straight into the Galerkin
            // quadrature.  The signal is queried at every pairwise node
            // difference T(x_i - x_j).
            let problem = assemble_from_lines(&full, &window, &basis, None)?;
            let glq = GaussLegendre::new(problem.quad_order());
            let mut time = 0.0;
            for &xi in &glq.nodes {
                for &xj in &glq.nodes {
                    time += window.t() * (xi - xj).abs();
                }
            }
            let q = glq.len();
            (problem, q * q, time)
        }
        Some(model) => {
            if model.shots == 0 {
                return Err(Error::domain("shot budget must be at least 1"));
            }
            let span = 2.0 * window.t();
            let min_samples = (2.0 * window.w() * span / PI).ceil() as usize + 1;
            let n = match params.n_samples {
                Some(n) => {
                    if n < min_samples {
                        return Err(Error::InsufficientSamples {
                            required: min_samples,
                            got: n,
                            context: "hybrid pipeline sampling grid".into(),
                        });
                    }
                    n
                }
                None => 2 * min_samples + 8,
            };
            let grid = linspace(-span, span, n)?;
            let noise = NoiseModel {
                kind: NoiseKind::Shot { shots: model.shots },
                seed: model.seed,
            };
            let record = sample(&full, &grid, &noise)?;
            let time: f64 = grid.iter().map(|t| t.abs()).sum();
            let problem = assemble_from_samples(&record, &window, &basis, None)?;
            (problem, n, time)
        }
    };

    let spectrum = solve(&problem, RankPolicy::Auto { noise_floor: None })?;

    let true_lines: Vec<SpectralWeight> = full
        .lines()
        .iter()
        .filter(|l| (l.omega - window.omega0()).abs() <= window.w())
        .map(|l| SpectralWeight {
            energy: l.omega,
            weight: l.alpha.re,
        })
        .collect();
    let frequency_errors = true_lines
        .iter()
        .map(|tl| {
            spectrum
                .lines()
                .iter()
                .map(|r| (r.omega - tl.energy).abs())
                .min_by(f64::total_cmp)
        })
        .collect();
    let weight_errors = true_lines
        .iter()
        .map(|tl| {
            spectrum
                .lines()
                .iter()
                .min_by(|a, b| {
                    (a.omega - tl.energy)
                        .abs()
                        .total_cmp(&(b.omega - tl.energy).abs())
                })
                .map(|r| (r.alpha - Complex64::new(tl.weight, 0.0)).norm())
        })
        .collect();

    Ok(QpdReport {
        source: h.source.clone(),
        window,
        spectrum,
        true_lines,
        frequency_errors,
        weight_errors,
        n_signal_queries,
        total_evolution_time,
    })
}
