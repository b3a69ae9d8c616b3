//! Line spectra S(t) = sum_k alpha_k e^{i omega_k t}, their exact
//! derivatives, sampling onto time grids, and additive noise models.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// One spectral line: frequency in rad/time and complex amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub omega: f64,
    pub alpha: Complex64,
}

/// A finite line spectrum, sorted by frequency. Exactly equal frequencies
/// are merged by amplitude addition at construction; near-duplicates are
/// kept as-is (they stress the solver intentionally).
#[derive(Debug, Clone, Default)]
pub struct LineSpectrum {
    lines: Vec<Line>,
}

impl LineSpectrum {
    pub fn new(lines: impl IntoIterator<Item = (f64, Complex64)>) -> Result<Self> {
        let mut raw: Vec<Line> = lines
            .into_iter()
            .map(|(omega, alpha)| Line { omega, alpha })
            .collect();
        for l in &raw {
            if !l.omega.is_finite() || !l.alpha.re.is_finite() || !l.alpha.im.is_finite() {
                return Err(Error::domain(format!(
                    "non-finite line (omega = {}, alpha = {})",
                    l.omega, l.alpha
                )));
            }
        }
        raw.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        let mut merged: Vec<Line> = Vec::with_capacity(raw.len());
        for l in raw {
            match merged.last_mut() {
                Some(prev) if prev.omega == l.omega => prev.alpha += l.alpha,
                _ => merged.push(l),
            }
        }
        Ok(LineSpectrum { lines: merged })
    }

    /// The zero signal.
    pub fn empty() -> Self {
        LineSpectrum { lines: Vec::new() }
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// S(t) = sum alpha_k e^{i omega_k t}, summed in stored (sorted) order.
    pub fn eval(&self, t: f64) -> Complex64 {
        let mut s = Complex64::ZERO;
        for l in &self.lines {
            let (sin, cos) = (l.omega * t).sin_cos();
            s += l.alpha * Complex64::new(cos, sin);
        }
        s
    }

    /// S'(t) = sum i omega_k alpha_k e^{i omega_k t}.
    pub fn eval_derivative(&self, t: f64) -> Complex64 {
        let mut s = Complex64::ZERO;
        for l in &self.lines {
            let (sin, cos) = (l.omega * t).sin_cos();
            s += Complex64::new(0.0, l.omega) * l.alpha * Complex64::new(cos, sin);
        }
        s
    }

    /// The spectrum of S(t) e^{-i omega0 t}: every frequency shifted down.
    pub fn demodulated(&self, omega0: f64) -> LineSpectrum {
        LineSpectrum {
            lines: self
                .lines
                .iter()
                .map(|l| Line {
                    omega: l.omega - omega0,
                    alpha: l.alpha,
                })
                .collect(),
        }
    }

    /// All amplitudes scaled by a common factor.
    pub fn scaled(&self, gamma: Complex64) -> LineSpectrum {
        LineSpectrum {
            lines: self
                .lines
                .iter()
                .map(|l| Line {
                    omega: l.omega,
                    alpha: gamma * l.alpha,
                })
                .collect(),
        }
    }

    /// Union of two spectra (amplitudes at exactly equal frequencies add).
    pub fn combined(&self, other: &LineSpectrum) -> LineSpectrum {
        LineSpectrum::new(
            self.lines
                .iter()
                .chain(&other.lines)
                .map(|l| (l.omega, l.alpha)),
        )
        .expect("lines already validated")
    }

    /// Sum of |alpha_k|, a convenient signal scale.
    pub fn amplitude_mass(&self) -> f64 {
        self.lines.iter().map(|l| l.alpha.norm()).sum()
    }
}

/// Additive noise applied to sampled values (never to the analytic signal).
///
/// `sigma` is the standard deviation of the real and imaginary parts
/// separately; `Growing` scales it as sigma * (1 + rate * |t|); `Shot`
/// models M-shot Hadamard-test estimation of a unit-disk value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    IidGaussian { sigma: f64 },
    Growing { sigma: f64, rate: f64 },
    Shot { shots: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(flatten)]
    pub kind: NoiseKind,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel {
            kind: NoiseKind::None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            NoiseKind::None => Ok(()),
            NoiseKind::IidGaussian { sigma } => {
                if sigma.is_finite() && sigma >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::domain(format!("sigma must be >= 0, got {sigma}")))
                }
            }
            NoiseKind::Growing { sigma, rate } => {
                if sigma.is_finite() && sigma >= 0.0 && rate.is_finite() && rate >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::domain(format!(
                        "growing noise needs sigma >= 0 and rate >= 0, got ({sigma}, {rate})"
                    )))
                }
            }
            NoiseKind::Shot { shots } => {
                if shots >= 1 {
                    Ok(())
                } else {
                    Err(Error::domain("shot count must be at least 1"))
                }
            }
        }
    }
}

/// Where a record's values came from, noise-wise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseMeta {
    /// Exact signal values.
    Clean,
    /// Perturbed by a known model (with its seed).
    Model(NoiseModel),
    /// Imported data of unknown provenance.
    Unknown,
}

/// Discrete samples of a signal on a strictly increasing time grid, with an
/// optional exact-derivative channel (populated only for noiseless sampling).
#[derive(Debug, Clone)]
pub struct SampleRecord {
    times: Vec<f64>,
    values: Vec<Complex64>,
    derivative_values: Option<Vec<Complex64>>,
    noise_meta: NoiseMeta,
}

impl SampleRecord {
    pub fn new(
        times: Vec<f64>,
        values: Vec<Complex64>,
        derivative_values: Option<Vec<Complex64>>,
        noise_meta: NoiseMeta,
    ) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::domain("sample record needs at least one point"));
        }
        if times.len() != values.len() {
            return Err(Error::domain(format!(
                "times ({}) and values ({}) lengths differ",
                times.len(),
                values.len()
            )));
        }
        if let Some(d) = &derivative_values {
            if d.len() != times.len() {
                return Err(Error::domain(
                    "derivative channel length differs from times",
                ));
            }
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::BadGrid(format!(
                    "times must strictly increase ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::BadGrid("times must be finite".into()));
        }
        Ok(SampleRecord {
            times,
            values,
            derivative_values,
            noise_meta,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn derivative_values(&self) -> Option<&[Complex64]> {
        self.derivative_values.as_deref()
    }

    pub fn noise_meta(&self) -> &NoiseMeta {
        &self.noise_meta
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Mean spacing if the grid is uniform to 1e-9 relative, else None.
    pub fn uniform_spacing(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let span = self.times[self.times.len() - 1] - self.times[0];
        let h = span / (self.times.len() - 1) as f64;
        for (j, w) in self.times.windows(2).enumerate() {
            let _ = j;
            if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs() {
                return None;
            }
        }
        Some(h)
    }

    /// A per-component noise standard-deviation bound implied by the noise
    /// metadata: None for unknown provenance.
    pub fn noise_sigma_bound(&self) -> Option<f64> {
        match &self.noise_meta {
            NoiseMeta::Clean => Some(0.0),
            NoiseMeta::Unknown => None,
            NoiseMeta::Model(m) => Some(match m.kind {
                NoiseKind::None => 0.0,
                NoiseKind::IidGaussian { sigma } => sigma,
                NoiseKind::Growing { sigma, rate } => {
                    let tmax = self
                        .times
                        .iter()
                        .fold(0.0f64, |a, &t| a.max(t.abs()));
                    sigma * (1.0 + rate * tmax)
                }
                NoiseKind::Shot { shots } => 1.0 / (shots as f64).sqrt(),
            }),
        }
    }
}

/// Sample a spectrum on a grid, applying the noise model pointwise in grid
/// order (two standard-normal or two binomial draws per point, real part
/// first). The derivative channel is populated only for noiseless sampling.
pub fn sample(spec: &LineSpectrum, grid: &[f64], noise: &NoiseModel) -> Result<SampleRecord> {
    noise.validate()?;
    if grid.is_empty() {
        return Err(Error::domain("sampling grid is empty"));
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::BadGrid(format!(
                "grid must strictly increase ({} then {})",
                w[0], w[1]
            )));
        }
    }
    let exact: Vec<Complex64> = grid.iter().map(|&t| spec.eval(t)).collect();
    match noise.kind {
        NoiseKind::None => {
            let deriv = grid.iter().map(|&t| spec.eval_derivative(t)).collect();
            SampleRecord::new(grid.to_vec(), exact, Some(deriv), NoiseMeta::Clean)
        }
        NoiseKind::IidGaussian { sigma } | NoiseKind::Growing { sigma, .. } if sigma == 0.0 => {
            // Zero-width noise: values identical to the exact ones, but the
            // record still carries the model tag and no derivative channel.
            SampleRecord::new(grid.to_vec(), exact, None, NoiseMeta::Model(*noise))
        }
        NoiseKind::IidGaussian { sigma } => {
            let mut rng = ChaCha20Rng::seed_from_u64(noise.seed);
            let values = exact
                .into_iter()
                .map(|v| v + gaussian_perturbation(sigma, &mut rng))
                .collect();
            SampleRecord::new(grid.to_vec(), values, None, NoiseMeta::Model(*noise))
        }
        NoiseKind::Growing { sigma, rate } => {
            let mut rng = ChaCha20Rng::seed_from_u64(noise.seed);
            let values = grid
                .iter()
                .zip(exact)
                .map(|(&t, v)| v + gaussian_perturbation(sigma * (1.0 + rate * t.abs()), &mut rng))
                .collect();
            SampleRecord::new(grid.to_vec(), values, None, NoiseMeta::Model(*noise))
        }
        NoiseKind::Shot { shots } => {
            let mut rng = ChaCha20Rng::seed_from_u64(noise.seed);
            let values = exact
                .into_iter()
                .map(|v| hadamard_shot(v, shots, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            SampleRecord::new(grid.to_vec(), values, None, NoiseMeta::Model(*noise))
        }
    }
}

fn gaussian_perturbation(sigma: f64, rng: &mut ChaCha20Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(sigma * re, sigma * im)
}

/// Hadamard-test estimate of a unit-disk value: real and imaginary parts
/// independently as 2 Binomial(M, (1+x)/2) / M - 1. Unbiased, variance
/// (1 - x^2) / M per quadrature.
pub(crate) fn hadamard_shot(
    value: Complex64,
    shots: u64,
    rng: &mut ChaCha20Rng,
) -> Result<Complex64> {
    if value.norm() > 1.0 + 1e-9 {
        return Err(Error::domain(format!(
            "shot model requires |value| <= 1, got |{value}| = {}",
            value.norm()
        )));
    }
    let m = shots as f64;
    let mut quadrature = |x: f64| -> Result<f64> {
        let p = ((1.0 + x) / 2.0).clamp(0.0, 1.0);
        let draw = Binomial::new(shots, p)
            .map_err(|e| Error::domain(format!("invalid binomial parameters: {e}")))?
            .sample(rng);
        Ok(2.0 * (draw as f64) / m - 1.0)
    };
    let re = quadrature(value.re)?;
    let im = quadrature(value.im)?;
    Ok(Complex64::new(re, im))
}

/// Inclusive uniform grid from a to b with n points.
pub fn linspace(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::domain(format!("need finite a < b, got [{a}, {b}]")));
    }
    if n < 2 {
        return Err(Error::domain("linspace needs at least 2 points"));
    }
    let h = (b - a) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
        .collect())
}

/// Symmetric grid at exact Nyquist spacing pi/w covering [-half_span,
/// half_span]: points j * (pi/w) for j = -J ..= J.
pub fn nyquist_grid(w: f64, half_span: f64) -> Result<Vec<f64>> {
    if !(w > 0.0) || !(half_span > 0.0) {
        return Err(Error::domain(
            "nyquist_grid needs positive bandwidth and span",
        ));
    }
    let h = std::f64::consts::PI / w;
    let j = (half_span / h - 1e-9).ceil().max(0.0) as i64;
    Ok((-j..=j).map(|k| k as f64 * h).collect())
}
