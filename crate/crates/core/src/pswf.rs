//! Prolate spheroidal wave functions (PSWFs) on [-1, 1].
//!
//! For a bandwidth parameter c = W*T the functions psi_n are the
//! eigenfunctions of the Sturm-Liouville operator
//! `L = -d/dx[(1 - x^2) d/dx] + c^2 x^2`,
//! which commutes with the sinc concentration kernel
//! K(x, y) = sin(c(x-y)) / (pi (x-y)). They are computed by expanding in
//! normalized Legendre polynomials, where L is symmetric tridiagonal when
//! split by parity, and diagonalizing the two parity blocks.
//!
//! Each mode carries three spectral quantities:
//! * `chi[n]`   - Sturm-Liouville eigenvalue (ascending),
//! * `lambda[n]`- concentration eigenvalue in (0, 1) (descending): the
//!   fraction of a band-limited psi_n's energy inside the interval,
//! * `mu[n]`    - Fourier self-reproduction constant:
//!   integral of psi_n(y) e^{i c x y} dy = mu_n psi_n(x), with
//!   |mu_n|^2 = 2 pi lambda_n / c and phase i^n (for psi_n(1) > 0).

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use ndarray::{Array2, ArrayView2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Slack accepted on |x| <= 1 checks before declaring a point out of range.
const X_RANGE_SLACK: f64 = 1e-12;

/// Relative size below which the trailing Legendre coefficients of a mode
/// must fall for the truncation to count as converged.
const TAIL_TOL: f64 = 1e-13;

/// Absolute slack for the descending-order check on concentration
/// eigenvalues: computed values tie within roundoff near 1 (pre-plunge) and
/// near the ~1e-31 quadrature floor (deep tail).
const LAMBDA_ORDER_SLACK: f64 = 5e-14;

#[derive(Debug, Clone)]
pub struct PswfBasis {
    c: f64,
    n_modes: usize,
    m_legendre: usize,
    /// (m_legendre, n_modes): column n holds the normalized-Legendre
    /// coefficients of psi_n; entries of the wrong parity are exactly zero.
    beta: Array2<f64>,
    chi: Vec<f64>,
    lambda: Vec<f64>,
    /// Empty when c == 0 (mu is undefined in the Legendre limit).
    mu: Vec<Complex64>,
    /// Quadrature rule of order 4*m_legendre used for the concentration
    /// eigenvalues and for kernel-based evaluation outside [-1, 1].
    quad: GaussLegendre,
    /// (n_modes, quad.len()): psi_n at the quadrature nodes.
    psi_quad: Array2<f64>,
}

impl PswfBasis {
    /// Default Legendre truncation: the coefficient ladder of mode n decays
    /// super-exponentially past index ~max(n, c), so twice the mode count
    /// plus a c-dependent floor is comfortably convergent.
    pub fn auto_truncation(c: f64, n_modes: usize) -> usize {
        (2 * n_modes).max((2.0 * c).ceil() as usize + 30)
    }

    pub fn build(c: f64, n_modes: usize) -> Result<Self> {
        Self::build_with_truncation(c, n_modes, None)
    }

    pub fn build_with_truncation(
        c: f64,
        n_modes: usize,
        m_legendre: Option<usize>,
    ) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::domain(format!(
                "bandwidth parameter c must be finite and >= 0, got {c}"
            )));
        }
        if n_modes == 0 {
            return Err(Error::domain("n_modes must be at least 1"));
        }
        let m = m_legendre.unwrap_or_else(|| Self::auto_truncation(c, n_modes));
        if m < n_modes + 4 {
            return Err(Error::domain(format!(
                "m_legendre = {m} leaves no room above n_modes = {n_modes}; need at least n_modes + 4"
            )));
        }

        let c2 = c * c;
        // Matrix elements of L in the normalized Legendre basis
        // Pbar_k = sqrt(k + 1/2) P_k. Only k <-> k and k <-> k+2 couple.
        let diag = |k: f64| k * (k + 1.0) + c2 * (2.0 * k * k + 2.0 * k - 1.0) / ((2.0 * k - 1.0) * (2.0 * k + 3.0));
        let offd = |k: f64| {
            c2 * (k + 1.0) * (k + 2.0) / ((2.0 * k + 3.0) * ((2.0 * k + 1.0) * (2.0 * k + 5.0)).sqrt())
        };

        let mut beta = Array2::<f64>::zeros((m, n_modes));
        let mut chi = vec![0.0; n_modes];

        for parity in 0..2usize {
            // Block over Legendre indices k = parity, parity+2, ...
            let block_len = (m - parity).div_ceil(2);
            let needed = if n_modes > parity {
                (n_modes - parity).div_ceil(2)
            } else {
                0
            };
            if needed == 0 {
                continue;
            }
            let mut block = Array2::<f64>::zeros((block_len, block_len));
            for j in 0..block_len {
                let k = (parity + 2 * j) as f64;
                block[[j, j]] = diag(k);
                if j + 1 < block_len {
                    let v = offd(k);
                    block[[j, j + 1]] = v;
                    block[[j + 1, j]] = v;
                }
            }
            let (vals, vecs) = block
                .eigh(UPLO::Lower)
                .map_err(|e| Error::Linalg(format!("parity-block eigendecomposition: {e}")))?;
            for j in 0..needed {
                let n = parity + 2 * j;
                chi[n] = vals[j];
                let col = vecs.column(j);
                let max_abs = col.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
                let tail = col[block_len - 1].abs().max(col[block_len - 2].abs()) / max_abs;
                if tail > TAIL_TOL {
                    return Err(Error::LegendreTail {
                        mode: n,
                        tail,
                        m_legendre: m,
                    });
                }
                // Sign convention psi_n(1) > 0; P_k(1) = 1 for every k.
                let at_one: f64 = col
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| v * ((parity + 2 * i) as f64 + 0.5).sqrt())
                    .sum();
                let sign = if at_one < 0.0 { -1.0 } else { 1.0 };
                for (i, &v) in col.iter().enumerate() {
                    beta[[parity + 2 * i, n]] = sign * v;
                }
            }
        }

        for n in 1..n_modes {
            if chi[n] <= chi[n - 1] {
                return Err(Error::Numeric(format!(
                    "Sturm-Liouville eigenvalues not strictly increasing at n = {n}"
                )));
            }
        }

        let quad = GaussLegendre::new(4 * m);
        let qlen = quad.len();
        let tab = normalized_legendre_table(m, &quad.nodes);
        let mut psi_quad = Array2::<f64>::zeros((n_modes, qlen));
        for n in 0..n_modes {
            let parity = n % 2;
            for i in 0..qlen {
                let mut s = 0.0;
                let mut k = parity;
                while k < m {
                    s += beta[[k, n]] * tab[[k, i]];
                    k += 2;
                }
                psi_quad[[n, i]] = s;
            }
        }

        // Concentration eigenvalues. The defining Rayleigh quotient with the
        // sinc kernel, integral psi_n(x) K(x-y) psi_n(y), is factored through
        // the Fourier operator:
        //     lambda_n = (c / 2 pi) * integral |g_n(x)|^2 dx,
        //     g_n(x) = integral psi_n(y) e^{i c x y} dy,
        // which is algebraically identical but has a positive integrand, so
        // small eigenvalues are not destroyed by cancellation.
        let mut lambda = vec![0.0; n_modes];
        if c > 0.0 {
            // Transposed copy so the inner accumulation runs over contiguous rows.
            let mut psi_t = Array2::<f64>::zeros((qlen, n_modes));
            for n in 0..n_modes {
                for j in 0..qlen {
                    psi_t[[j, n]] = psi_quad[[n, j]];
                }
            }
            let mut acc = vec![Complex64::ZERO; n_modes];
            for i in 0..qlen {
                let xi = quad.nodes[i];
                acc.fill(Complex64::ZERO);
                for j in 0..qlen {
                    let (s, co) = (c * xi * quad.nodes[j]).sin_cos();
                    let ph = Complex64::new(co, s) * quad.weights[j];
                    let row = psi_t.row(j);
                    for n in 0..n_modes {
                        acc[n] += ph * row[n];
                    }
                }
                for n in 0..n_modes {
                    lambda[n] += quad.weights[i] * acc[n].norm_sqr();
                }
            }
            let scale = c / (2.0 * PI);
            for l in lambda.iter_mut() {
                *l *= scale;
                // True eigenvalues are strictly below 1; shave off pure
                // roundoff overshoot but treat anything larger as a failure.
                if *l >= 1.0 {
                    if *l < 1.0 + 1e-12 {
                        *l = 1.0 - f64::EPSILON;
                    } else {
                        return Err(Error::Numeric(format!(
                            "concentration eigenvalue {l} exceeds 1"
                        )));
                    }
                }
            }
            // The true sequence decreases strictly, but computed values
            // saturate at both ends: pre-plunge eigenvalues tie at 1 - ulp,
            // and the deep tail sits at the quadrature roundoff floor
            // (~1e-31). Flag only increases that exceed roundoff slack.
            for n in 1..n_modes {
                if lambda[n] > lambda[n - 1] + LAMBDA_ORDER_SLACK {
                    return Err(Error::Numeric(format!(
                        "concentration eigenvalues not decreasing at n = {n}: {} -> {}",
                        lambda[n - 1],
                        lambda[n]
                    )));
                }
            }
        }

        let mu = if c > 0.0 {
            let unit = [
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.0, -1.0),
            ];
            lambda
                .iter()
                .enumerate()
                .map(|(n, &l)| unit[n % 4] * (2.0 * PI * l / c).sqrt())
                .collect()
        } else {
            Vec::new()
        };

        Ok(PswfBasis {
            c,
            n_modes,
            m_legendre: m,
            beta,
            chi,
            lambda,
            mu,
            quad,
            psi_quad,
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Number of retained modes.
    pub fn len(&self) -> usize {
        self.n_modes
    }

    pub fn is_empty(&self) -> bool {
        self.n_modes == 0
    }

    pub fn m_legendre(&self) -> usize {
        self.m_legendre
    }

    /// Sturm-Liouville eigenvalues, ascending.
    pub fn chi(&self) -> &[f64] {
        &self.chi
    }

    /// Concentration eigenvalues, descending in (0, 1).
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn concentration_eigenvalue(&self, n: usize) -> Result<f64> {
        self.check_index(n)?;
        Ok(self.lambda[n])
    }

    /// Fourier self-reproduction constant mu_n = i^n sqrt(2 pi lambda_n / c).
    /// Undefined at c = 0.
    pub fn mu(&self, n: usize) -> Result<Complex64> {
        self.check_index(n)?;
        if self.c == 0.0 {
            return Err(Error::domain(
                "mu is undefined at c = 0 (Legendre limit has no band)",
            ));
        }
        Ok(self.mu[n])
    }

    /// All mu constants; `None` at c = 0.
    pub fn mu_all(&self) -> Option<&[Complex64]> {
        if self.c == 0.0 {
            None
        } else {
            Some(&self.mu)
        }
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n >= self.n_modes {
            return Err(Error::domain(format!(
                "mode index {n} out of range (basis holds {} modes)",
                self.n_modes
            )));
        }
        Ok(())
    }

    fn check_x(&self, x: f64) -> Result<f64> {
        if !x.is_finite() || x.abs() > 1.0 + X_RANGE_SLACK {
            return Err(Error::domain(format!(
                "evaluation point {x} outside [-1, 1]"
            )));
        }
        Ok(x.clamp(-1.0, 1.0))
    }

    /// psi_n(x) for x in [-1, 1].
    pub fn evaluate(&self, n: usize, x: f64) -> Result<f64> {
        self.check_index(n)?;
        let x = self.check_x(x)?;
        let col = self.beta.column(n);
        // Legendre recurrence, accumulating the normalized series.
        let mut pm1 = 1.0; // P_0
        let mut p = x; // P_1
        let mut s = col[0] * std::f64::consts::FRAC_1_SQRT_2;
        if self.m_legendre > 1 {
            s += col[1] * (1.5f64).sqrt() * x;
        }
        for k in 1..(self.m_legendre - 1) {
            let kf = k as f64;
            let pnext = ((2.0 * kf + 1.0) * x * p - kf * pm1) / (kf + 1.0);
            pm1 = p;
            p = pnext;
            s += col[k + 1] * (kf + 1.5).sqrt() * pnext;
        }
        Ok(s)
    }

    /// d/dx psi_n(x) for x in [-1, 1].
    pub fn evaluate_derivative(&self, n: usize, x: f64) -> Result<f64> {
        self.check_index(n)?;
        let x = self.check_x(x)?;
        let col = self.beta.column(n);
        // Joint recurrence: P'_{k+1} = P'_{k-1} + (2k+1) P_k.
        let mut pm1 = 1.0;
        let mut p = x;
        let mut dm1 = 0.0; // P'_0
        let mut d = 1.0; // P'_1
        let mut s = 0.0;
        if self.m_legendre > 1 {
            s += col[1] * (1.5f64).sqrt();
        }
        for k in 1..(self.m_legendre - 1) {
            let kf = k as f64;
            let pnext = ((2.0 * kf + 1.0) * x * p - kf * pm1) / (kf + 1.0);
            let dnext = dm1 + (2.0 * kf + 1.0) * p;
            pm1 = p;
            p = pnext;
            dm1 = d;
            d = dnext;
            s += col[k + 1] * (kf + 1.5).sqrt() * dnext;
        }
        Ok(s)
    }

    /// psi_n at every x in `xs` (rows = modes, columns = points).
    pub fn evaluate_matrix(&self, xs: &[f64]) -> Result<Array2<f64>> {
        for &x in xs {
            self.check_x(x)?;
        }
        let tab = normalized_legendre_table(self.m_legendre, xs);
        Ok(self.contract_table(&tab))
    }

    /// d/dx psi_n at every x in `xs`.
    pub fn derivative_matrix(&self, xs: &[f64]) -> Result<Array2<f64>> {
        for &x in xs {
            self.check_x(x)?;
        }
        let tab = normalized_legendre_derivative_table(self.m_legendre, xs);
        Ok(self.contract_table(&tab))
    }

    fn contract_table(&self, tab: &Array2<f64>) -> Array2<f64> {
        let len = tab.shape()[1];
        let mut out = Array2::<f64>::zeros((self.n_modes, len));
        for n in 0..self.n_modes {
            let parity = n % 2;
            for i in 0..len {
                let mut s = 0.0;
                let mut k = parity;
                while k < self.m_legendre {
                    s += self.beta[[k, n]] * tab[[k, i]];
                    k += 2;
                }
                out[[n, i]] = s;
            }
        }
        out
    }

    /// Band-limited continuation of psi_n to any real x, via the kernel
    /// eigenrelation integral K(x, y) psi_n(y) dy = lambda_n psi_n(x), which
    /// holds for all x (not only inside the interval). Inside [-1, 1] the
    /// Legendre series is used directly.
    pub fn evaluate_extended(&self, n: usize, x: f64) -> Result<f64> {
        self.check_index(n)?;
        if x.abs() <= 1.0 + X_RANGE_SLACK {
            return self.evaluate(n, x);
        }
        if !x.is_finite() {
            return Err(Error::domain("evaluation point must be finite"));
        }
        if self.c == 0.0 {
            return Err(Error::domain(
                "continuation outside [-1, 1] is undefined at c = 0",
            ));
        }
        let l = self.lambda[n];
        let mut s = 0.0;
        for j in 0..self.quad.len() {
            s += self.quad.weights[j]
                * sinc_kernel(self.c, x - self.quad.nodes[j])
                * self.psi_quad[[n, j]];
        }
        Ok(s / l)
    }

    pub(crate) fn legendre_coeffs(&self) -> ArrayView2<'_, f64> {
        self.beta.view()
    }

    pub(crate) fn quadrature(&self) -> &GaussLegendre {
        &self.quad
    }

    pub(crate) fn psi_at_quadrature(&self) -> ArrayView2<'_, f64> {
        self.psi_quad.view()
    }
}

/// sin(c u) / (pi u), continued through u = 0.
pub(crate) fn sinc_kernel(c: f64, u: f64) -> f64 {
    if u.abs() < 1e-8 {
        let cu = c * u;
        c / PI * (1.0 - cu * cu / 6.0)
    } else {
        (c * u).sin() / (PI * u)
    }
}

/// Table of normalized Legendre polynomials sqrt(k + 1/2) P_k(x):
/// shape (m, xs.len()).
pub(crate) fn normalized_legendre_table(m: usize, xs: &[f64]) -> Array2<f64> {
    let mut tab = Array2::<f64>::zeros((m, xs.len()));
    for (i, &x) in xs.iter().enumerate() {
        tab[[0, i]] = std::f64::consts::FRAC_1_SQRT_2;
        if m > 1 {
            tab[[1, i]] = (1.5f64).sqrt() * x;
        }
        let mut pm1 = 1.0;
        let mut p = x;
        for k in 1..m.saturating_sub(1) {
            let kf = k as f64;
            let pnext = ((2.0 * kf + 1.0) * x * p - kf * pm1) / (kf + 1.0);
            pm1 = p;
            p = pnext;
            tab[[k + 1, i]] = (kf + 1.5).sqrt() * pnext;
        }
    }
    tab
}

/// Table of d/dx [sqrt(k + 1/2) P_k(x)]: shape (m, xs.len()).
pub(crate) fn normalized_legendre_derivative_table(m: usize, xs: &[f64]) -> Array2<f64> {
    let mut tab = Array2::<f64>::zeros((m, xs.len()));
    for (i, &x) in xs.iter().enumerate() {
        if m > 1 {
            tab[[1, i]] = (1.5f64).sqrt();
        }
        let mut pm1 = 1.0;
        let mut p = x;
        let mut dm1 = 0.0;
        let mut d = 1.0;
        for k in 1..m.saturating_sub(1) {
            let kf = k as f64;
            let pnext = ((2.0 * kf + 1.0) * x * p - kf * pm1) / (kf + 1.0);
            let dnext = dm1 + (2.0 * kf + 1.0) * p;
            pm1 = p;
            p = pnext;
            dm1 = d;
            d = dnext;
            tab[[k + 1, i]] = (kf + 1.5).sqrt() * dnext;
        }
    }
    tab
}
