//! Frequency extraction as a finite generalized eigenvalue problem.
//!
//! For a signal S(t) = sum_k alpha_k exp(i omega_k t) whose frequencies lie in
//! a band [omega0 - W, omega0 + W], convolving with a test function f supported
//! on [-T, T] gives -i d/dt (S * f) = omega (S * f) line by line.  Expanding f
//! in time-limited prolate modes and testing against the same family turns this
//! into a matrix pencil (A, B) of double-window Grams of the demodulated
//! signal.  The pencil eigenvalues sit at omega_k - omega0; the eigenvector for
//! one line describes a test function whose Fourier transform vanishes on all
//! the others, which is what makes the recovered frequencies admissible.
//!
//! The workflow is: [`assemble_from_lines`] or [`assemble_from_samples`] builds
//! a [`SpectralProblem`]; [`detect_dimension`] counts the singular values of B
//! above the noise; [`solve`] projects onto that subspace, solves the reduced
//! pencil, filters spurious eigenvalues, and reports a [`RecoveredSpectrum`].

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{s, Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::pswf::PswfBasis;
use crate::quad::GaussLegendre;
use crate::sampling::{prolate_interpolate, BandWindow, ProlateInterpolant};
use crate::signal::{LineSpectrum, SampleRecord};

/// Relative tolerance when matching `basis.c` against `window.c`.
const C_MATCH_REL_TOL: f64 = 1e-9;
/// Relative shortfall tolerated when checking that a record covers [-2T, 2T].
const COVERAGE_REL_SLACK: f64 = 1e-9;
/// Hermiticity tolerance (relative Frobenius) for autocorrelation assemblies.
const HERMITIAN_REL_TOL: f64 = 1e-12;
/// Most negative Gram eigenvalue allowed, relative to its largest.
const PSD_REL_TOL: f64 = 1e-10;
/// Singular values below this fraction of the largest do not count as signal.
const NOISELESS_RANK_TOL: f64 = 1e-10;
/// Multiplier on sigma sqrt(WT) bounding the noise-junk singular values when
/// no spectral cliff is visible.
const KNOWN_NOISE_KAPPA: f64 = 10.0;
/// Smallest consecutive singular-value ratio accepted as a signal/noise cliff.
const GAP_DECISIVE: f64 = 20.0;
/// Interpolation-truncation junk in sampled assemblies, per unit T * scale.
const ASSEMBLY_FLOOR_COEFF: f64 = 2e-4;
/// Baseline filter scale: imaginary part (as a fraction of W) and residual.
const CLEAN_FILTER_TOL: f64 = 1e-6;
/// Residual filter never loosens past this; junk eigenpairs of an over-ranked
/// pencil sit at residual O(1) while corrupted-but-real lines stay below.
const RESIDUAL_CAP: f64 = 0.5;
/// Multiplier taking the detection floor to the spurious-filter scale.
const FILTER_KAPPA: f64 = 10.0;
/// Reported frequencies must lie within this multiple of W from band center.
const BAND_SLACK: f64 = 1.1;
/// Eigenvalues closer than this fraction of W are merged as duplicates.
const DUPLICATE_REL_TOL: f64 = 1e-9;
/// Amplitude-recovery design condition number past which a warning is raised.
const ILL_CONDITION_LIMIT: f64 = 1e12;

/// The spectral window an analysis runs in: observation half-time `T` and the
/// frequency band `[omega0 - W, omega0 + W]` being interrogated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationWindow {
    omega0: f64,
    w: f64,
    t: f64,
}

impl ObservationWindow {
    pub fn new(omega0: f64, w: f64, t: f64) -> Result<Self> {
        if !omega0.is_finite() || !w.is_finite() || !t.is_finite() {
            return Err(Error::domain(
                "observation window parameters must be finite",
            ));
        }
        if w <= 0.0 || t <= 0.0 {
            return Err(Error::domain(
                "band half-width and observation half-time must be positive",
            ));
        }
        Ok(ObservationWindow { omega0, w, t })
    }

    /// Band center (rad / unit time).
    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Band half-width W.
    pub fn w(&self) -> f64 {
        self.w
    }

    /// Observation half-time T.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Bandwidth-time product c = W T of the window.
    pub fn c(&self) -> f64 {
        self.w * self.t
    }

    /// Line density (lines per unit frequency) resolvable in this window: T / pi.
    pub fn capacity(&self) -> f64 {
        self.t / PI
    }

    /// Default pencil size: the capacity count 2c/pi plus a buffer wide enough
    /// to carry the transition modes of the prolate spectrum.
    pub fn default_basis_len(&self) -> usize {
        (2.0 * self.c() / PI).ceil() as usize + 10
    }
}

/// How the derivative factor -i S0' entering the `A` Gram was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeSource {
    /// Differentiated in closed form (line-spectrum or model input).
    Analytic,
    /// Band-limited differentiation of a prolate fit of sampled data.
    Interpolated,
}

/// What is known about the per-sample noise level of the assembled problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseHint {
    Noiseless,
    /// Standard deviation (or an upper bound on it) of the sample noise.
    Known(f64),
    Unknown,
}

/// The assembled pencil: `A v = nu B v` with `nu = omega - omega0`.
///
/// With x, y in [-1, 1] scaled time (t = T x) and S0 the demodulated signal,
/// `B_mn = T * integral conj(psi_m(x)) S0(T(x-y)) psi_n(y) dy dx` and `A_mn`
/// carries `-i S0'` in place of `S0`, both evaluated by tensor Gauss-Legendre
/// quadrature at a fixed order (so re-assembly is bitwise reproducible).
pub struct SpectralProblem {
    a: Array2<Complex64>,
    b: Array2<Complex64>,
    window: ObservationWindow,
    basis: Arc<PswfBasis>,
    quad_order: usize,
    derivative_source: DerivativeSource,
    noise_hint: NoiseHint,
    assembly_floor: f64,
}

impl SpectralProblem {
    /// Derivative-weighted Gram (left side of the pencil).
    pub fn a(&self) -> &Array2<Complex64> {
        &self.a
    }

    /// Signal Gram (right side of the pencil).
    pub fn b(&self) -> &Array2<Complex64> {
        &self.b
    }

    pub fn window(&self) -> &ObservationWindow {
        &self.window
    }

    pub fn basis(&self) -> &Arc<PswfBasis> {
        &self.basis
    }

    pub fn n_basis(&self) -> usize {
        self.basis.len()
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn derivative_source(&self) -> DerivativeSource {
        self.derivative_source
    }

    pub fn noise_hint(&self) -> NoiseHint {
        self.noise_hint
    }

    /// Singular-value junk the assembly itself introduced into B, independent
    /// of sample noise: interpolation truncation for sampled input, zero for
    /// closed-form assemblies.  Rank detection never digs below this.
    pub fn assembly_floor(&self) -> f64 {
        self.assembly_floor
    }

    /// For autocorrelation signals (all amplitudes real and nonnegative) both
    /// Grams are Hermitian and B is positive semidefinite; this verifies both
    /// claims against the assembled matrices.
    fn check_autocorrelation_structure(&self) -> Result<()> {
        check_hermitian(&self.b, "signal Gram")?;
        check_hermitian(&self.a, "derivative Gram")?;
        let norm = frobenius(&self.b);
        if norm > 0.0 {
            let hermitized = self.b.mapv(|z| z) + self.b.t().mapv(|z| z.conj());
            let (evals, _) = linalg::eigh(&hermitized.mapv(|z| z * 0.5))?;
            let smax = evals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            let smin = evals.iter().fold(f64::INFINITY, |m, &v| m.min(v));
            if smin < -PSD_REL_TOL * smax {
                return Err(Error::Numeric(format!(
                    "signal Gram of an autocorrelation assembly has eigenvalue {smin:.3e} \
                     below the positive-semidefinite tolerance"
                )));
            }
        }
        Ok(())
    }
}

fn frobenius(m: &Array2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn check_hermitian(m: &Array2<Complex64>, context: &str) -> Result<()> {
    let norm = frobenius(m);
    if norm == 0.0 {
        return Ok(());
    }
    let mut dev = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            dev += (m[[i, j]] - m[[j, i]].conj()).norm_sqr();
        }
    }
    let dev = dev.sqrt() / norm;
    if dev > HERMITIAN_REL_TOL {
        return Err(Error::NonHermitian {
            deviation: dev,
            context: context.to_string(),
        });
    }
    Ok(())
}

fn check_basis(window: &ObservationWindow, basis: &PswfBasis) -> Result<()> {
    let want = window.c();
    let got = basis.c();
    if (got - want).abs() > C_MATCH_REL_TOL * want.max(1.0) {
        return Err(Error::BasisWindowMismatch {
            basis_c: got,
            window_c: want,
        });
    }
    Ok(())
}

fn resolve_quad_order(requested: Option<usize>, n_basis: usize) -> Result<usize> {
    match requested {
        None => Ok(4 * n_basis.max(1)),
        Some(q) if q < 2 * n_basis => Err(Error::domain(format!(
            "quadrature order {q} is below the minimum 2 * n_basis = {}",
            2 * n_basis
        ))),
        Some(q) => Ok(q),
    }
}

/// Shared Gram assembly: `s0` and `ds0` evaluate the demodulated signal and its
/// derivative on the convolution support [-2T, 2T].  Summation order is fixed.
fn assemble_grams(
    window: &ObservationWindow,
    basis: &PswfBasis,
    quad_order: usize,
    mut s0: impl FnMut(f64) -> Complex64,
    mut ds0: impl FnMut(f64) -> Complex64,
) -> Result<(Array2<Complex64>, Array2<Complex64>)> {
    let n = basis.len();
    let q = quad_order;
    let rule = GaussLegendre::new(q);
    let psi = basis.evaluate_matrix(&rule.nodes)?;
    let t = window.t();

    // Weighted mode table: wpsi[n][j] = w_j psi_n(x_j).
    let mut wpsi = Array2::<f64>::zeros((n, q));
    for m in 0..n {
        for j in 0..q {
            wpsi[[m, j]] = rule.weights[j] * psi[[m, j]];
        }
    }

    // Kernel tables over node pairs: the signal and -i times its derivative.
    let mut kb = Array2::<Complex64>::zeros((q, q));
    let mut ka = Array2::<Complex64>::zeros((q, q));
    for i in 0..q {
        for j in 0..q {
            let u = t * (rule.nodes[i] - rule.nodes[j]);
            kb[[i, j]] = s0(u);
            ka[[i, j]] = -Complex64::i() * ds0(u);
        }
    }

    // Two-stage contraction keeps the cost at O(n q^2 + n^2 q).
    let mut a = Array2::<Complex64>::zeros((n, n));
    let mut b = Array2::<Complex64>::zeros((n, n));
    let mut col_b = Array2::<Complex64>::zeros((n, q));
    let mut col_a = Array2::<Complex64>::zeros((n, q));
    for nn in 0..n {
        for i in 0..q {
            let mut sb = Complex64::ZERO;
            let mut sa = Complex64::ZERO;
            for j in 0..q {
                let weight = wpsi[[nn, j]];
                sb += kb[[i, j]] * weight;
                sa += ka[[i, j]] * weight;
            }
            col_b[[nn, i]] = sb;
            col_a[[nn, i]] = sa;
        }
    }
    for m in 0..n {
        for nn in 0..n {
            let mut sb = Complex64::ZERO;
            let mut sa = Complex64::ZERO;
            for i in 0..q {
                let weight = wpsi[[m, i]];
                sb += col_b[[nn, i]] * weight;
                sa += col_a[[nn, i]] * weight;
            }
            b[[m, nn]] = t * sb;
            a[[m, nn]] = t * sa;
        }
    }
    Ok((a, b))
}

fn is_autocorrelation(lines: &LineSpectrum) -> bool {
    let mass = lines.amplitude_mass();
    lines
        .lines()
        .iter()
        .all(|l| l.alpha.im.abs() <= 1e-13 * mass.max(1e-300) && l.alpha.re >= 0.0)
}

/// Assemble the pencil from a known line spectrum using closed-form
/// demodulation and differentiation.
pub fn assemble_from_lines(
    lines: &LineSpectrum,
    window: &ObservationWindow,
    basis: &Arc<PswfBasis>,
    quad_order: Option<usize>,
) -> Result<SpectralProblem> {
    check_basis(window, basis)?;
    let order = resolve_quad_order(quad_order, basis.len())?;
    let demod = lines.demodulated(window.omega0());
    let (a, b) = assemble_grams(
        window,
        basis,
        order,
        |u| demod.eval(u),
        |u| demod.eval_derivative(u),
    )?;
    let problem = SpectralProblem {
        a,
        b,
        window: *window,
        basis: Arc::clone(basis),
        quad_order: order,
        derivative_source: DerivativeSource::Analytic,
        noise_hint: NoiseHint::Noiseless,
        assembly_floor: 0.0,
    };
    if is_autocorrelation(lines) {
        problem.check_autocorrelation_structure()?;
    }
    Ok(problem)
}

/// Assemble the pencil from sampled data.
///
/// The record must cover the convolution support [-2T, 2T] on a uniform grid
/// no sparser than the band Nyquist spacing pi/W.  The demodulated samples are
/// fit by a prolate interpolant; the derivative comes from the record's
/// derivative channel when present, otherwise from band-limited
/// differentiation of the fit.
pub fn assemble_from_samples(
    record: &SampleRecord,
    window: &ObservationWindow,
    basis: &Arc<PswfBasis>,
    quad_order: Option<usize>,
) -> Result<SpectralProblem> {
    check_basis(window, basis)?;
    let order = resolve_quad_order(quad_order, basis.len())?;
    let half_span = 2.0 * window.t();
    if record.is_empty() {
        return Err(Error::InsufficientSamples {
            required: 2,
            got: 0,
            context: "pencil assembly".into(),
        });
    }
    let times = record.times();
    let t_first = times[0];
    let t_last = *times.last().expect("non-empty record");
    let slack = COVERAGE_REL_SLACK * half_span;
    if t_first > -half_span + slack || t_last < half_span - slack {
        return Err(Error::Coverage {
            half_span,
            t_first,
            t_last,
            context: "pencil assembly needs the full convolution support".into(),
        });
    }
    let t_rec = (-t_first).min(t_last);

    // Demodulate to the band center and fit on the record's own window; keep
    // only samples inside it so the fit stays an interpolation problem.
    let omega0 = window.omega0();
    let keep: Vec<usize> = (0..times.len())
        .filter(|&j| times[j].abs() <= t_rec * (1.0 + COVERAGE_REL_SLACK))
        .collect();
    let kept_times: Vec<f64> = keep.iter().map(|&j| times[j]).collect();
    let rotate = |t: f64, v: Complex64| v * (-Complex64::i() * omega0 * t).exp();
    let demod_values: Vec<Complex64> = keep
        .iter()
        .map(|&j| rotate(times[j], record.values()[j]))
        .collect();

    let win_rec = BandWindow::new(window.w(), t_rec)?;
    let n_rec = (2.0 * win_rec.c() / PI).ceil() as usize + 10;
    let basis_rec = Arc::new(PswfBasis::build(win_rec.c(), n_rec)?);

    let demod_record = SampleRecord::new(
        kept_times.clone(),
        demod_values,
        None,
        record.noise_meta().clone(),
    )?;
    let value_fit = prolate_interpolate(&demod_record, &win_rec, &basis_rec)?;

    let deriv_fit: Option<ProlateInterpolant> = match record.derivative_values() {
        Some(derivs) => {
            let demod_derivs: Vec<Complex64> = keep
                .iter()
                .map(|&j| {
                    let v = record.values()[j];
                    let d = derivs[j];
                    rotate(times[j], d - Complex64::i() * omega0 * v)
                })
                .collect();
            let deriv_record = SampleRecord::new(
                kept_times,
                demod_derivs,
                None,
                record.noise_meta().clone(),
            )?;
            Some(prolate_interpolate(&deriv_record, &win_rec, &basis_rec)?)
        }
        None => None,
    };

    let (a, b) = assemble_grams(
        window,
        basis,
        order,
        |u| value_fit.eval(u),
        |u| match &deriv_fit {
            Some(fit) => fit.eval(u),
            None => value_fit.eval_derivative(u),
        },
    )?;
    let noise_hint = match record.noise_sigma_bound() {
        Some(s) if s == 0.0 => NoiseHint::Noiseless,
        Some(s) => NoiseHint::Known(s),
        None => NoiseHint::Unknown,
    };
    // Interpolation truncation leaks a deterministic junk tail into B's
    // singular spectrum; it grows with the Gram mass T and the signal scale.
    let scale = record
        .values()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.norm()));
    Ok(SpectralProblem {
        a,
        b,
        window: *window,
        basis: Arc::clone(basis),
        quad_order: order,
        derivative_source: DerivativeSource::Interpolated,
        noise_hint,
        assembly_floor: ASSEMBLY_FLOOR_COEFF * window.t() * scale,
    })
}

/// Threshold on a singular-value cliff: when the tail of the spectrum is a
/// noise plateau, signal and plateau are separated by the largest consecutive
/// ratio.  Returns the geometric-mean threshold inside the widest gap, or 0.0
/// when no ratio is decisive (spectrum decays smoothly).
fn spectral_gap_floor(svals: &[f64]) -> f64 {
    let smax = svals.first().copied().unwrap_or(0.0);
    if smax <= 0.0 {
        return 0.0;
    }
    let tiny = 1e-14 * smax;
    let mut best_ratio = 0.0;
    let mut best_k = 0;
    for k in 1..svals.len() {
        let hi = svals[k - 1];
        if hi <= tiny {
            break;
        }
        let lo = svals[k].max(tiny);
        if hi / lo > best_ratio {
            best_ratio = hi / lo;
            best_k = k;
        }
    }
    if best_ratio >= GAP_DECISIVE {
        (svals[best_k - 1] * svals[best_k].max(tiny)).sqrt()
    } else {
        0.0
    }
}

/// The singular-value threshold separating signal from junk.
///
/// Three floors combine (largest wins): the relative numerical floor, the
/// assembly's own truncation floor, and the sample-noise response.  Noise
/// junk in B varies several-fold across noise realizations but always ends in
/// a plateau well below the signal block, so for noisy problems the primary
/// estimate is the realization's own signal/plateau cliff; when no cliff is
/// decisive, a known per-sample sigma falls back to the measured envelope
/// kappa sigma sqrt(WT) (junk grows about linearly in sigma, like sqrt(T) in
/// the observation time, and weakens with sampling density).  An explicit
/// `noise_floor` replaces the noise term but never digs below the assembly
/// floor.
fn detection_floor(
    problem: &SpectralProblem,
    noise_floor: Option<f64>,
    svals: &[f64],
) -> Result<f64> {
    let smax = svals.first().copied().unwrap_or(0.0);
    let base = (NOISELESS_RANK_TOL * smax).max(problem.assembly_floor());
    let noise = match noise_floor {
        Some(f) => {
            if !f.is_finite() || f < 0.0 {
                return Err(Error::domain(
                    "noise floor must be a nonnegative finite number",
                ));
            }
            f
        }
        None => match problem.noise_hint() {
            NoiseHint::Noiseless => 0.0,
            NoiseHint::Known(sigma) => {
                let gap = spectral_gap_floor(svals);
                if gap > 0.0 {
                    gap
                } else {
                    KNOWN_NOISE_KAPPA * sigma * problem.window().c().sqrt()
                }
            }
            NoiseHint::Unknown => spectral_gap_floor(svals),
        },
    };
    Ok(base.max(noise))
}

/// Count the singular values of B that stand above the noise.
///
/// `noise_floor`, when given, replaces the problem's own noise estimate;
/// either way the threshold never drops below the assembly floor or the
/// relative numerical floor.
pub fn detect_dimension(problem: &SpectralProblem, noise_floor: Option<f64>) -> Result<usize> {
    let svals = linalg::singular_values(problem.b())?;
    let tau = detection_floor(problem, noise_floor, &svals)?;
    Ok(svals.iter().filter(|s| **s > tau).count())
}

/// How [`solve`] decides the pencil dimension.
#[derive(Debug, Clone, Copy)]
pub enum RankPolicy {
    /// Use [`detect_dimension`], optionally with an explicit threshold.
    Auto { noise_floor: Option<f64> },
    /// Use exactly this rank.
    Fixed(usize),
}

/// Why an eigenvalue of the reduced pencil was not reported as a line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscardReason {
    /// Imaginary part too large for a real frequency.
    ImaginaryPart,
    /// Real part outside the interrogated band.
    OutOfBand,
    /// Pencil residual too large.
    LargeResidual,
}

impl std::fmt::Display for DiscardReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DiscardReason::ImaginaryPart => "imaginary part",
            DiscardReason::OutOfBand => "out of band",
            DiscardReason::LargeResidual => "large residual",
        };
        f.write_str(s)
    }
}

/// An eigenvalue removed by the spurious filter, kept for diagnostics.
#[derive(Debug, Clone)]
pub struct DiscardedEigenvalue {
    /// Band-absolute value omega0 + nu as it came out of the pencil.
    pub value: Complex64,
    pub residual: f64,
    pub reason: DiscardReason,
}

/// One recovered spectral line.
#[derive(Debug, Clone)]
pub struct RecoveredLine {
    /// Band-absolute frequency estimate.
    pub omega: f64,
    pub alpha: Complex64,
    /// Pencil residual |(A - nu B) v| / |B v| at the reported frequency.
    pub residual: f64,
    /// Test-function coefficients (unit norm) whose profile isolates this line.
    pub coeffs: Array1<Complex64>,
    /// True when near-duplicate eigenvalues were merged into this line.
    pub merged: bool,
}

/// Output of [`solve`]: the surviving lines plus detection diagnostics.
#[derive(Debug, Clone)]
pub struct RecoveredSpectrum {
    rank: usize,
    lines: Vec<RecoveredLine>,
    delta_eff_est: f64,
    discarded: Vec<DiscardedEigenvalue>,
}

impl RecoveredSpectrum {
    /// Detected pencil dimension (before the spurious filter).
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Surviving lines, sorted by frequency.
    pub fn lines(&self) -> &[RecoveredLine] {
        &self.lines
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.lines.iter().map(|l| l.omega).collect()
    }

    pub fn alphas(&self) -> Vec<Complex64> {
        self.lines.iter().map(|l| l.alpha).collect()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.lines.iter().map(|l| l.residual).collect()
    }

    /// Effective spectral density estimate rank / (2W).
    pub fn delta_eff_est(&self) -> f64 {
        self.delta_eff_est
    }

    pub fn discarded(&self) -> &[DiscardedEigenvalue] {
        &self.discarded
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn to_line_spectrum(&self) -> Result<LineSpectrum> {
        LineSpectrum::new(self.lines.iter().map(|l| (l.omega, l.alpha)))
    }
}

/// Solve the assembled pencil and report in-band real frequencies.
///
/// B is reduced to its leading singular subspace, the projected pencil is
/// solved as an ordinary eigenproblem, and eigenvalues with a visible
/// imaginary part, an out-of-band real part, or a large residual are moved to
/// the discard list.  Near-duplicate survivors are merged with their
/// amplitudes added.
pub fn solve(problem: &SpectralProblem, policy: RankPolicy) -> Result<RecoveredSpectrum> {
    let n = problem.n_basis();
    let w_band = problem.window().w();
    let (u, svals, _) = linalg::svd(problem.b())?;
    let sval_slice = svals.as_slice();
    let tau = detection_floor(
        problem,
        match policy {
            RankPolicy::Auto { noise_floor } => noise_floor,
            RankPolicy::Fixed(_) => None,
        },
        sval_slice,
    )?;
    let rank = match policy {
        RankPolicy::Fixed(r) => {
            if r > n {
                return Err(Error::domain(format!(
                    "requested rank {r} exceeds the basis size {n}"
                )));
            }
            r
        }
        RankPolicy::Auto { .. } => sval_slice.iter().filter(|s| **s > tau).count(),
    };
    if rank == 0 {
        return Ok(RecoveredSpectrum {
            rank: 0,
            lines: Vec::new(),
            delta_eff_est: 0.0,
            discarded: Vec::new(),
        });
    }

    let u_r = u.slice(s![.., ..rank]).to_owned();
    let u_r_h = u_r.t().mapv(|z| z.conj());
    let a_red = u_r_h.dot(&problem.a().dot(&u_r));
    let b_red = u_r_h.dot(&problem.b().dot(&u_r));
    let b_red_inv = linalg::inv(&b_red).map_err(|_| {
        Error::Linalg(format!(
            "reduced Gram is singular at rank {rank} (kept singular values span {:.3e} .. {:.3e})",
            svals[0],
            svals[rank - 1]
        ))
    })?;
    let (evals, evecs) = linalg::eig(&b_red_inv.dot(&a_red))?;

    // Spurious-eigenvalue filter scale: 1e-6 in exact arithmetic, widened to
    // the floor-to-signal ratio of the kept subspace when noise or assembly
    // junk is present, but never past the cap that separates corrupted-real
    // lines (residual well below 1) from over-rank junk (residual O(1)).
    let filter = if svals[rank - 1] > 0.0 {
        (FILTER_KAPPA * tau / svals[rank - 1]).clamp(CLEAN_FILTER_TOL, RESIDUAL_CAP)
    } else {
        RESIDUAL_CAP
    };

    let mut survivors: Vec<RecoveredLine> = Vec::new();
    let mut discarded: Vec<DiscardedEigenvalue> = Vec::new();
    for (idx, &ev) in evals.iter().enumerate() {
        let v = u_r.dot(&evecs.column(idx).to_owned());
        let nu = ev.re;
        let num = (problem.a() - &(problem.b() * Complex64::from(nu))).dot(&v);
        let den = problem.b().dot(&v);
        let den_norm = den.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let residual = if den_norm > 0.0 {
            num.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / den_norm
        } else {
            f64::INFINITY
        };
        let band_absolute = Complex64::new(problem.window().omega0() + ev.re, ev.im);
        let reason = if ev.im.abs() > filter * w_band {
            Some(DiscardReason::ImaginaryPart)
        } else if nu.abs() > BAND_SLACK * w_band {
            Some(DiscardReason::OutOfBand)
        } else if residual > filter {
            Some(DiscardReason::LargeResidual)
        } else {
            None
        };
        match reason {
            Some(reason) => discarded.push(DiscardedEigenvalue {
                value: band_absolute,
                residual,
                reason,
            }),
            None => {
                let alpha = line_amplitude(problem, &v, nu)?;
                survivors.push(RecoveredLine {
                    omega: problem.window().omega0() + nu,
                    alpha,
                    residual,
                    coeffs: v,
                    merged: false,
                });
            }
        }
    }

    survivors.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    let mut lines: Vec<RecoveredLine> = Vec::new();
    for line in survivors {
        match lines.last_mut() {
            Some(prev) if (line.omega - prev.omega).abs() <= DUPLICATE_REL_TOL * w_band => {
                prev.alpha += line.alpha;
                prev.residual = prev.residual.min(line.residual);
                prev.merged = true;
            }
            _ => lines.push(line),
        }
    }

    Ok(RecoveredSpectrum {
        rank,
        lines,
        delta_eff_est: rank as f64 / (2.0 * w_band),
        discarded,
    })
}

/// Amplitude of the line isolated by eigenvector `v` at demodulated frequency
/// `nu`: writing g = F(omega0 + nu) for the eigenvector profile, every other
/// line is annihilated and v^H B v = T alpha |g|^2.
fn line_amplitude(problem: &SpectralProblem, v: &Array1<Complex64>, nu: f64) -> Result<Complex64> {
    let profile = eigenvector_profile(problem, v)?;
    let g = profile.eval(problem.window().omega0() + nu)?;
    let denom = problem.window().t() * g.norm_sqr();
    let vbv = v
        .iter()
        .zip(problem.b().dot(v).iter())
        .map(|(vi, bvi)| vi.conj() * bvi)
        .sum::<Complex64>();
    let v_norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if denom <= 1e-24 * problem.window().t() * v_norm {
        return Ok(Complex64::ZERO);
    }
    Ok(vbv / denom)
}

/// Fourier transform of the test function encoded by coefficient vector `v`,
/// evaluated on the interrogated band.
pub struct EigenvectorProfile {
    basis: Arc<PswfBasis>,
    window: ObservationWindow,
    v: Array1<Complex64>,
}

impl EigenvectorProfile {
    /// F(omega) = sum_n v_n mu_n psi_n(-(omega - omega0) / W), the transform
    /// of sum_n v_n psi_n(t / T) restricted to [-T, T].  For the eigenvector
    /// of one recovered line, F vanishes at every other line.
    pub fn eval(&self, omega: f64) -> Result<Complex64> {
        let x = -(omega - self.window.omega0()) / self.window.w();
        let mut acc = Complex64::ZERO;
        for n in 0..self.basis.len() {
            let psi = self.basis.evaluate_extended(n, x)?;
            acc += self.v[n] * self.basis.mu(n)? * psi;
        }
        Ok(acc)
    }
}

pub fn eigenvector_profile(
    problem: &SpectralProblem,
    v: &Array1<Complex64>,
) -> Result<EigenvectorProfile> {
    if v.len() != problem.n_basis() {
        return Err(Error::domain(format!(
            "coefficient vector length {} does not match the basis size {}",
            v.len(),
            problem.n_basis()
        )));
    }
    Ok(EigenvectorProfile {
        basis: Arc::clone(problem.basis()),
        window: *problem.window(),
        v: v.clone(),
    })
}

/// Amplitudes refit from the raw record at fixed frequencies.
pub struct AmplitudeFit {
    pub alphas: Vec<Complex64>,
    /// Condition number of the exponential design matrix.
    pub condition: f64,
    /// Set when the condition number exceeds 1e12; the fit is still returned.
    pub ill_conditioned: bool,
}

/// Least-squares amplitudes for the model sum_k alpha_k exp(i omega_k t_j)
/// against the record's values.
pub fn recover_amplitudes(record: &SampleRecord, omegas: &[f64]) -> Result<AmplitudeFit> {
    if omegas.is_empty() {
        return Ok(AmplitudeFit {
            alphas: Vec::new(),
            condition: 1.0,
            ill_conditioned: false,
        });
    }
    if omegas.iter().any(|w| !w.is_finite()) {
        return Err(Error::domain("frequencies must be finite"));
    }
    let rows = record.len();
    let cols = omegas.len();
    if rows < cols {
        return Err(Error::InsufficientSamples {
            required: cols,
            got: rows,
            context: "amplitude recovery".into(),
        });
    }
    let mut design = Array2::<Complex64>::zeros((rows, cols));
    for (j, &t) in record.times().iter().enumerate() {
        for (k, &omega) in omegas.iter().enumerate() {
            design[[j, k]] = (Complex64::i() * omega * t).exp();
        }
    }
    let rhs = Array1::from_vec(record.values().to_vec());
    let fit = linalg::lstsq(&design, &rhs)?;
    let condition = match (fit.singular_values.first(), fit.singular_values.last()) {
        (Some(&smax), Some(&smin)) if smin > 0.0 => smax / smin,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    };
    Ok(AmplitudeFit {
        alphas: fit.solution.to_vec(),
        condition,
        ill_conditioned: condition > ILL_CONDITION_LIMIT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{linspace, sample, NoiseKind, NoiseModel};

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn basis_for(window: &ObservationWindow) -> Arc<PswfBasis> {
        Arc::new(PswfBasis::build(window.c(), window.default_basis_len()).unwrap())
    }

    /// Rank-factored Grams built directly from the generating lines via the
    /// Fourier self-reproduction identity, independent of the quadrature path:
    /// B = T V^H D_alpha V with V_{k,n} = mu_n psi_n(-(omega_k - omega0)/W).
    fn oracle_grams(
        lines: &LineSpectrum,
        window: &ObservationWindow,
        basis: &PswfBasis,
    ) -> (Array2<Complex64>, Array2<Complex64>) {
        let n = basis.len();
        let demod = lines.demodulated(window.omega0());
        let k = demod.len();
        let mut v = Array2::<Complex64>::zeros((k, n));
        for (ki, line) in demod.lines().iter().enumerate() {
            for nn in 0..n {
                let x = -line.omega / window.w();
                v[[ki, nn]] =
                    basis.mu(nn).unwrap() * c64(basis.evaluate_extended(nn, x).unwrap(), 0.0);
            }
        }
        let mut a = Array2::<Complex64>::zeros((n, n));
        let mut b = Array2::<Complex64>::zeros((n, n));
        for m in 0..n {
            for nn in 0..n {
                let mut sa = Complex64::ZERO;
                let mut sb = Complex64::ZERO;
                for (ki, line) in demod.lines().iter().enumerate() {
                    let term = v[[ki, m]].conj() * line.alpha * v[[ki, nn]];
                    sb += term;
                    sa += term * line.omega;
                }
                a[[m, nn]] = window.t() * sa;
                b[[m, nn]] = window.t() * sb;
            }
        }
        (a, b)
    }

    fn rel_frobenius_diff(x: &Array2<Complex64>, y: &Array2<Complex64>) -> f64 {
        let diff = x - y;
        frobenius(&diff) / frobenius(y).max(1e-300)
    }

    fn max_line_error(truth: &[f64], got: &[f64]) -> f64 {
        truth
            .iter()
            .map(|t| {
                got.iter()
                    .map(|g| (g - t).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn window_validation_and_derived_quantities() {
        assert!(ObservationWindow::new(0.0, 0.0, 1.0).is_err());
        assert!(ObservationWindow::new(0.0, 1.0, -1.0).is_err());
        assert!(ObservationWindow::new(f64::NAN, 1.0, 1.0).is_err());
        let win = ObservationWindow::new(2.0, 4.0, PI).unwrap();
        assert!((win.c() - 4.0 * PI).abs() < 1e-12);
        assert!((win.capacity() - 1.0).abs() < 1e-12);
        assert_eq!(win.default_basis_len(), 18);
    }

    #[test]
    fn assembly_preconditions_are_enforced() {
        let win = ObservationWindow::new(0.0, 2.0, 1.5).unwrap();
        let basis = basis_for(&win);
        let lines = LineSpectrum::new([(0.5, c64(1.0, 0.0))]).unwrap();
        let wrong = Arc::new(PswfBasis::build(win.c() * 2.0, 8).unwrap());
        assert!(matches!(
            assemble_from_lines(&lines, &win, &wrong, None),
            Err(Error::BasisWindowMismatch { .. })
        ));
        let too_low = basis.len() * 2 - 1;
        assert!(assemble_from_lines(&lines, &win, &basis, Some(too_low)).is_err());
        assert!(assemble_from_lines(&lines, &win, &basis, Some(basis.len() * 2)).is_ok());
    }

    #[test]
    fn quadrature_assembly_matches_rank_factored_oracle() {
        let cases: Vec<(f64, f64, f64, Vec<(f64, Complex64)>)> = vec![
            (0.0, 4.0, 2.0, vec![(1.0, c64(1.0, 0.0))]),
            (
                0.0,
                5.0,
                3.0,
                vec![(-3.0, c64(0.7, 0.2)), (1.0, c64(1.0, 0.0)), (4.0, c64(0.3, -0.5))],
            ),
            (
                10.0,
                2.5,
                6.0,
                vec![(8.2, c64(0.5, 0.5)), (10.0, c64(2.0, 0.0)), (11.9, c64(0.0, 1.0))],
            ),
            (
                -1.0,
                8.0,
                5.0,
                vec![
                    (-8.0, c64(0.4, 0.0)),
                    (-4.4, c64(0.2, 0.9)),
                    (-1.3, c64(1.5, 0.0)),
                    (2.8, c64(0.8, -0.1)),
                    (6.5, c64(0.1, 0.1)),
                ],
            ),
        ];
        for (omega0, w, t, line_list) in cases {
            let win = ObservationWindow::new(omega0, w, t).unwrap();
            let basis = basis_for(&win);
            let lines = LineSpectrum::new(line_list).unwrap();
            let problem = assemble_from_lines(&lines, &win, &basis, None).unwrap();
            let (a_oracle, b_oracle) = oracle_grams(&lines, &win, &basis);
            assert!(
                rel_frobenius_diff(problem.b(), &b_oracle) < 1e-8,
                "B mismatch at c={}",
                win.c()
            );
            assert!(
                rel_frobenius_diff(problem.a(), &a_oracle) < 1e-8,
                "A mismatch at c={}",
                win.c()
            );
        }
    }

    #[test]
    fn zero_signal_assembles_zero_and_reports_empty() {
        let win = ObservationWindow::new(0.0, 3.0, 2.0).unwrap();
        let basis = basis_for(&win);
        let lines = LineSpectrum::empty();
        let problem = assemble_from_lines(&lines, &win, &basis, None).unwrap();
        assert!(problem.a().iter().all(|z| z.norm() == 0.0));
        assert!(problem.b().iter().all(|z| z.norm() == 0.0));
        assert_eq!(detect_dimension(&problem, None).unwrap(), 0);
        let out = solve(&problem, RankPolicy::Auto { noise_floor: None }).unwrap();
        assert_eq!(out.rank(), 0);
        assert!(out.is_empty());
    }

    #[test]
    fn line_at_band_center_collapses_to_zero_eigenvalue() {
        let win = ObservationWindow::new(7.0, 2.0, 3.0).unwrap();
        let basis = basis_for(&win);
        let lines = LineSpectrum::new([(7.0, c64(1.0, 0.0))]).unwrap();
        let problem = assemble_from_lines(&lines, &win, &basis, None).unwrap();
        // The demodulated signal is constant, so the derivative Gram vanishes
        // identically and the only eigenvalue is exactly the band center.
        assert!(problem.a().iter().all(|z| z.norm() == 0.0));
        let out = solve(&problem, RankPolicy::Auto { noise_floor: None }).unwrap();
        assert_eq!(out.rank(), 1);
        assert_eq!(out.lines().len(), 1);
        assert!((out.lines()[0].omega - 7.0).abs() < 1e-10);
        assert!((out.lines()[0].alpha - c64(1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn noiseless_lines_are_recovered_to_tight_tolerance() {
        // Single line away from center.
        let win = ObservationWindow::new(0.0, 5.0, 3.0).unwrap();
        let basis = Arc::new(PswfBasis::build(win.c(), 12).unwrap());
        let lines = LineSpectrum::new([(2.0, c64(1.0, 0.0))]).unwrap();
        let problem = assemble_from_lines(&lines, &win, &basis, None).unwrap();
        let out = solve(&problem, RankPolicy::Auto { noise_floor: None }).unwrap();
        assert_eq!(out.lines().len(), 1);
        assert!((out.lines()[0].omega - 2.0).abs() < 1e-9);
        assert!((out.lines()[0].alpha - c64(1.0, 0.0)).norm() < 1e-8);

        // cos t = (e^{it} + e^{-it}) / 2.
        let win = ObservationWindow::new(0.0, 3.0, 5.0).unwrap();
        let basis = basis_for(&win);
        let lines =
            LineSpectrum::new([(-1.0, c64(0.5, 0.0)), (1.0, c64(0.5, 0.0))]).unwrap();
        let problem = assemble_from_lines(&lines, &win, &basis, None).unwrap();
        let out = solve(&problem, RankPolicy::Auto { noise_floor: None }).unwrap();
        assert_eq!(out.rank(), 2);
        assert_eq!(out.lines().len(), 2);
        assert!((out.lines()[0].omega + 1.0).abs() < 1e-8);
        assert!((out.lines()[1].omega - 1.0).abs() < 1e-8);
        assert!((out.lines()[0].alpha - c64(0.5, 0.0)).norm() < 1e-8);
        assert!((out.lines()[1].alpha - c64(0.5, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn autocorrelation_assembly_is_hermitian_and_psd() {
        let win = ObservationWindow::new(1.0, 4.0, 2.5).unwrap();
        let basis = basis_for(&win);
        let lines = LineSpectrum::new([
            (-2.0, c64(0.3, 0.0)),
            (0.5, c64(1.2, 0.0)),
            (3.9, c64(0.05, 0.0)),
        ])
        .unwrap();
        let problem = assemble_from_lines(&lines, &win, &basis, None).unwrap();
        check_hermitian(problem.b(), "test").unwrap();
        check_hermitian(problem.a(), "test").unwrap();
        let (evals, _) = linalg::eigh(problem.b()).unwrap();
        let smax = evals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(evals.iter().all(|&v| v >= -1e-10 * smax));

        // Complex amplitudes legitimately break Hermiticity; assembly must
        // still succeed.
        let skew = LineSpectrum::new([(0.5, c64(0.0, 1.0)), (2.0, c64(1.0, 0.0))]).unwrap();
        let problem = assemble_from_lines(&skew, &win, &basis, None).unwrap();
        assert!(check_hermitian(problem.b(), "test").is_err());
    }

    #[test]
    fn detection_counts_lines_not_basis_size() {
        let win = ObservationWindow::new(0.0, 4.0, 2.5).unwrap();
        let basis = Arc::new(PswfBasis::build(win.c(), 10).unwrap());
        let lines = LineSpectrum::new([
            (-2.4, c64(0.8, 0.1)),
            (0.3, c64(1.0, 0.0)),
            (2.8, c64(0.5, -0.3)),
        ])
        .unwrap();
        let problem = assemble_from_lines(&lines, &win, &basis, None).unwrap();
        assert_eq!(detect_dimension(&problem, None).unwrap(), 3);
        let svals = linalg::singular_values(problem.b()).unwrap();
        assert!(svals[3] / svals[0] < 1e-10);
    }

    #[test]
    fn shift_covariance_of_recovered_frequencies() {
        let true_omegas = [1.0, 2.2, 3.4];
        let lines = LineSpectrum::new(
            true_omegas
                .iter()
                .map(|&w| (w, c64(1.0, 0.3 * w))),
        )
        .unwrap();
        let mut all: Vec<Vec<f64>> = Vec::new();
        for omega0 in [2.0, 2.6] {
            let win = ObservationWindow::new(omega0, 3.0, 4.0).unwrap();
            let basis = basis_for(&win);
            let problem = assemble_from_lines(&lines, &win, &basis, None).unwrap();
            let out = solve(&problem, RankPolicy::Auto { noise_floor: None }).unwrap();
            assert_eq!(out.lines().len(), 3);
            all.push(out.omegas());
        }
        for (a, b) in all[0].iter().zip(all[1].iter()) {
            assert!((a - b).abs() < 1e-9 * 3.0, "shifted solve moved {a} to {b}");
        }
    }

    #[test]
    fn amplitude_scale_invariance_of_frequencies() {
        let win = ObservationWindow::new(0.0, 4.0, 3.0).unwrap();
        let basis = basis_for(&win);
        let base = LineSpectrum::new([(-1.5, c64(0.4, 0.0)), (0.7, c64(1.0, -0.2))]).unwrap();
        let scaled = base.scaled(c64(3.0, -2.0));
        let out1 = solve(
            &assemble_from_lines(&base, &win, &basis, None).unwrap(),
            RankPolicy::Auto { noise_floor: None },
        )
        .unwrap();
        let out2 = solve(
            &assemble_from_lines(&scaled, &win, &basis, None).unwrap(),
            RankPolicy::Auto { noise_floor: None },
        )
        .unwrap();
        assert_eq!(out1.lines().len(), out2.lines().len());
        for (a, b) in out1.omegas().iter().zip(out2.omegas().iter()) {
            assert!((a - b).abs() < 1e-10 * win.w());
        }
        // Amplitudes scale along.
        for (a, b) in out1.alphas().iter().zip(out2.alphas().iter()) {
            assert!((b - a * c64(3.0, -2.0)).norm() < 1e-7);
        }
    }

    #[test]
    fn eigenvector_profiles_annihilate_other_lines() {
        let true_omegas = [-3.2, -1.1, 0.4, 1.9, 3.6];
        let win = ObservationWindow::new(0.0, 4.0, 3.5).unwrap();
        let basis = basis_for(&win);
        let lines = LineSpectrum::new(
            true_omegas
                .iter()
                .enumerate()
                .map(|(i, &w)| (w, c64(1.0 + 0.2 * i as f64, 0.1 * i as f64))),
        )
        .unwrap();
        let problem = assemble_from_lines(&lines, &win, &basis, None).unwrap();
        let out = solve(&problem, RankPolicy::Auto { noise_floor: None }).unwrap();
        assert_eq!(out.lines().len(), true_omegas.len());
        for line in out.lines() {
            let profile = eigenvector_profile(&problem, &line.coeffs).unwrap();
            let own = profile.eval(line.omega).unwrap().norm();
            for &other in &true_omegas {
                if (other - line.omega).abs() < 1e-3 {
                    continue;
                }
                let leak = profile.eval(other).unwrap().norm();
                assert!(
                    leak < 1e-5 * own,
                    "profile at {other} leaks {leak:.3e} against {own:.3e}"
                );
            }
        }
    }

    /// Eight unit lines at unit spacing (one line per unit bandwidth) need
    /// T of about pi to resolve from measured data; at half that the kept
    /// subspace is swamped by the reconstruction floor.  Closed-form
    /// assemblies do not show this wall -- their only floor is machine
    /// epsilon -- so the check runs through sampled records.
    #[test]
    fn below_threshold_resolution_fails_as_expected() {
        let w_band = 4.0;
        let true_omegas: Vec<f64> = (0..8).map(|k| -w_band + (k as f64 + 0.5)).collect();
        let win = ObservationWindow::new(0.0, w_band, PI / 2.0).unwrap();
        let basis = basis_for(&win);
        let lines =
            LineSpectrum::new(true_omegas.iter().map(|&w| (w, c64(1.0, 0.0)))).unwrap();
        let span = 2.0 * win.t();
        let rec_win = BandWindow::new(w_band, span).unwrap();
        let grid = linspace(-span, span, rec_win.required_samples() + 12).unwrap();
        let record = sample(&lines, &grid, &NoiseModel::none()).unwrap();
        let problem = assemble_from_samples(&record, &win, &basis, None).unwrap();
        let out = solve(&problem, RankPolicy::Auto { noise_floor: None }).unwrap();
        let err = max_line_error(&true_omegas, &out.omegas());
        assert!(
            out.lines().len() != true_omegas.len() || err > 1e-2 * w_band,
            "below-threshold solve resolved {} lines to {err:.3e}",
            out.lines().len()
        );
    }

    /// Same spectrum past the accuracy transition: detection must report
    /// exactly the true line count (no reconstruction-junk ghosts) and the
    /// frequencies must come back at the interpolation floor.
    #[test]
    fn sample_route_counts_lines_past_threshold() {
        let w_band = 4.0;
        let true_omegas: Vec<f64> = (0..8).map(|k| -w_band + (k as f64 + 0.5)).collect();
        let win = ObservationWindow::new(0.0, w_band, 3.5).unwrap();
        let basis = basis_for(&win);
        let lines =
            LineSpectrum::new(true_omegas.iter().map(|&w| (w, c64(1.0, 0.0)))).unwrap();
        let span = 2.0 * win.t();
        let rec_win = BandWindow::new(w_band, span).unwrap();
        let grid = linspace(-span, span, rec_win.required_samples() + 12).unwrap();
        let record = sample(&lines, &grid, &NoiseModel::none()).unwrap();
        let problem = assemble_from_samples(&record, &win, &basis, None).unwrap();
        assert!(problem.assembly_floor() > 0.0);
        let out = solve(&problem, RankPolicy::Auto { noise_floor: None }).unwrap();
        assert_eq!(out.rank(), 8, "reconstruction junk leaked into the rank");
        assert_eq!(out.lines().len(), 8);
        let err = max_line_error(&true_omegas, &out.omegas());
        assert!(err < 1e-5 * w_band, "past-threshold error {err:.3e}");
        assert!((out.delta_eff_est() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sample_assembly_matches_line_assembly() {
        let win = ObservationWindow::new(0.0, 3.0, 1.5).unwrap();
        let basis = basis_for(&win);
        let lines = LineSpectrum::new([(-1.8, c64(0.7, 0.1)), (1.2, c64(1.0, 0.0))]).unwrap();
        let span = 2.0 * win.t();
        let rec_win = BandWindow::new(win.w(), span).unwrap();
        let grid = linspace(-span, span, rec_win.required_samples() + 12).unwrap();
        let record = sample(&lines, &grid, &NoiseModel::none()).unwrap();
        let from_samples = assemble_from_samples(&record, &win, &basis, None).unwrap();
        let from_lines = assemble_from_lines(&lines, &win, &basis, None).unwrap();
        assert_eq!(
            from_samples.derivative_source(),
            DerivativeSource::Interpolated
        );
        assert!(matches!(from_samples.noise_hint(), NoiseHint::Noiseless));
        assert!(rel_frobenius_diff(from_samples.b(), from_lines.b()) < 1e-4);
        assert!(rel_frobenius_diff(from_samples.a(), from_lines.a()) < 1e-4);

        let out = solve(&from_samples, RankPolicy::Auto { noise_floor: None }).unwrap();
        assert_eq!(out.lines().len(), 2);
        assert!((out.lines()[0].omega + 1.8).abs() < 1e-5 * win.w());
        assert!((out.lines()[1].omega - 1.2).abs() < 1e-5 * win.w());
    }

    #[test]
    fn sample_assembly_without_derivative_channel() {
        let win = ObservationWindow::new(0.0, 3.0, 1.5).unwrap();
        let basis = basis_for(&win);
        let lines = LineSpectrum::new([(-1.8, c64(0.7, 0.1)), (1.2, c64(1.0, 0.0))]).unwrap();
        let span = 2.0 * win.t();
        let rec_win = BandWindow::new(win.w(), span).unwrap();
        let grid = linspace(-span, span, rec_win.required_samples() + 12).unwrap();
        let full = sample(&lines, &grid, &NoiseModel::none()).unwrap();
        let stripped = SampleRecord::new(
            full.times().to_vec(),
            full.values().to_vec(),
            None,
            full.noise_meta().clone(),
        )
        .unwrap();
        let problem = assemble_from_samples(&stripped, &win, &basis, None).unwrap();
        let out = solve(&problem, RankPolicy::Auto { noise_floor: None }).unwrap();
        assert_eq!(out.lines().len(), 2);
        assert!((out.lines()[0].omega + 1.8).abs() < 1e-4 * win.w());
        assert!((out.lines()[1].omega - 1.2).abs() < 1e-4 * win.w());
    }

    #[test]
    fn sample_assembly_refuses_short_records() {
        let win = ObservationWindow::new(0.0, 3.0, 1.5).unwrap();
        let basis = basis_for(&win);
        let lines = LineSpectrum::new([(1.2, c64(1.0, 0.0))]).unwrap();
        // Covers only [-T, T], not the convolution support [-2T, 2T].
        let grid = linspace(-win.t(), win.t(), 40).unwrap();
        let record = sample(&lines, &grid, &NoiseModel::none()).unwrap();
        assert!(matches!(
            assemble_from_samples(&record, &win, &basis, None),
            Err(Error::Coverage { .. })
        ));
    }

    #[test]
    fn dimension_detection_under_noise_across_seeds() {
        let w_band = 3.0;
        let t_obs = PI;
        let win = ObservationWindow::new(0.0, w_band, t_obs).unwrap();
        let basis = basis_for(&win);
        let lines = LineSpectrum::new([
            (-2.0, c64(1.0, 0.0)),
            (0.0, c64(0.8, 0.4)),
            (2.0, c64(1.2, -0.3)),
        ])
        .unwrap();
        let span = 2.0 * t_obs;
        let rec_win = BandWindow::new(w_band, span).unwrap();
        let grid = linspace(-span, span, rec_win.required_samples() + 12).unwrap();
        let sigma = 1e-3;
        let mut hits = 0;
        let trials = 20;
        for seed in 0..trials {
            let noise = NoiseModel {
                kind: NoiseKind::IidGaussian { sigma },
                seed,
            };
            let record = sample(&lines, &grid, &noise).unwrap();
            let problem = assemble_from_samples(&record, &win, &basis, None).unwrap();
            assert!(matches!(problem.noise_hint(), NoiseHint::Known(_)));
            if detect_dimension(&problem, None).unwrap() == 3 {
                hits += 1;
            }
        }
        assert!(hits >= trials - 1, "detected rank 3 in only {hits}/{trials} trials");
    }

    /// With no stated noise level the threshold must be read off the singular
    /// spectrum itself: three strong lines, then a plateau of noise junk two
    /// decades down, gives a decisive cliff at k = 3.
    #[test]
    fn unknown_noise_rank_from_spectral_gap() {
        let w_band = 3.0;
        let win = ObservationWindow::new(0.0, w_band, PI).unwrap();
        let basis = basis_for(&win);
        let lines = LineSpectrum::new([
            (-2.0, c64(1.0, 0.0)),
            (0.0, c64(0.8, 0.4)),
            (2.0, c64(1.2, -0.3)),
        ])
        .unwrap();
        let span = 2.0 * PI;
        let rec_win = BandWindow::new(w_band, span).unwrap();
        let grid = linspace(-span, span, rec_win.required_samples() + 12).unwrap();
        for seed in [1, 7, 23, 40, 61, 85] {
            let noise = NoiseModel {
                kind: NoiseKind::IidGaussian { sigma: 1e-3 },
                seed,
            };
            let noisy = sample(&lines, &grid, &noise).unwrap();
            // Re-tag the record as having unknown noise statistics.
            let record = SampleRecord::new(
                noisy.times().to_vec(),
                noisy.values().to_vec(),
                None,
                crate::signal::NoiseMeta::Unknown,
            )
            .unwrap();
            let problem = assemble_from_samples(&record, &win, &basis, None).unwrap();
            assert!(matches!(problem.noise_hint(), NoiseHint::Unknown));
            let r = detect_dimension(&problem, None).unwrap();
            assert_eq!(r, 3, "seed {seed}: spectral-gap threshold detected rank {r}");
        }
    }

    #[test]
    fn amplitude_recovery_from_records() {
        // Exact frequency: consistent linear system, near-exact amplitude.
        let lines = LineSpectrum::new([(1.3, c64(0.9, -0.4))]).unwrap();
        let grid = linspace(-3.0, 3.0, 41).unwrap();
        let record = sample(&lines, &grid, &NoiseModel::none()).unwrap();
        let fit = recover_amplitudes(&record, &[1.3]).unwrap();
        assert!((fit.alphas[0] - c64(0.9, -0.4)).norm() < 1e-12);
        assert!(!fit.ill_conditioned);

        // Two close lines, noiseless.
        let lines =
            LineSpectrum::new([(1.0, c64(1.0, 0.0)), (1.35, c64(0.5, 0.2))]).unwrap();
        let record = sample(&lines, &grid, &NoiseModel::none()).unwrap();
        let fit = recover_amplitudes(&record, &[1.0, 1.35]).unwrap();
        assert!((fit.alphas[0] - c64(1.0, 0.0)).norm() < 1e-8);
        assert!((fit.alphas[1] - c64(0.5, 0.2)).norm() < 1e-8);

        // Nearly coincident columns must raise the condition warning but
        // still return.
        let fit = recover_amplitudes(&record, &[1.0, 1.0 + 1e-13]).unwrap();
        assert!(fit.ill_conditioned);
        assert_eq!(fit.alphas.len(), 2);

        // Too few samples.
        let tiny = SampleRecord::new(
            vec![0.0],
            vec![c64(1.0, 0.0)],
            None,
            crate::signal::NoiseMeta::Unknown,
        )
        .unwrap();
        assert!(recover_amplitudes(&tiny, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn amplitude_error_scales_linearly_with_noise() {
        let lines =
            LineSpectrum::new([(0.8, c64(1.0, 0.0)), (-1.4, c64(0.6, 0.3))]).unwrap();
        let grid = linspace(-4.0, 4.0, 65).unwrap();
        let sigmas = [1e-4, 1e-3, 1e-2];
        let mut medians = Vec::new();
        for (si, &sigma) in sigmas.iter().enumerate() {
            let mut errs = Vec::new();
            for seed in 0..11u64 {
                let noise = NoiseModel {
                    kind: NoiseKind::IidGaussian { sigma },
                    seed: 100 * si as u64 + seed,
                };
                let record = sample(&lines, &grid, &noise).unwrap();
                let fit = recover_amplitudes(&record, &[0.8, -1.4]).unwrap();
                let err = (fit.alphas[0] - c64(1.0, 0.0))
                    .norm()
                    .max((fit.alphas[1] - c64(0.6, 0.3)).norm());
                errs.push(err);
            }
            errs.sort_by(f64::total_cmp);
            medians.push(errs[errs.len() / 2]);
        }
        let slope = (medians[2] / medians[0]).log10() / 2.0;
        assert!(
            (slope - 1.0).abs() < 0.2,
            "noise scaling slope {slope:.3} (medians {medians:?})"
        );
    }

    #[test]
    fn fixed_rank_policy_bounds() {
        let win = ObservationWindow::new(0.0, 2.0, 1.0).unwrap();
        let basis = basis_for(&win);
        let lines = LineSpectrum::new([(0.5, c64(1.0, 0.0))]).unwrap();
        let problem = assemble_from_lines(&lines, &win, &basis, None).unwrap();
        assert!(solve(&problem, RankPolicy::Fixed(basis.len() + 1)).is_err());
        let out = solve(&problem, RankPolicy::Fixed(0)).unwrap();
        assert_eq!(out.rank(), 0);
        // Deliberately over-ranked: the junk directions must not create new
        // lines; they either fail the filters or collapse into the true line
        // as merged duplicates of negligible amplitude.
        let out = solve(&problem, RankPolicy::Fixed(4)).unwrap();
        assert_eq!(out.lines().len(), 1);
        assert!((out.lines()[0].omega - 0.5).abs() < 1e-8);
        assert!((out.lines()[0].alpha - c64(1.0, 0.0)).norm() < 1e-8);
        assert!(!out.discarded().is_empty() || out.lines()[0].merged);
    }
}
