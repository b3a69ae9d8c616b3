//! Gauss-Legendre quadrature on [-1, 1].
//!
//! Nodes are the roots of the Legendre polynomial P_n, found by Newton
//! iteration from the classical cosine initial guesses; weights are
//! 2 / ((1 - x^2) P_n'(x)^2). An n-point rule integrates polynomials of
//! degree <= 2n - 1 exactly, and converges super-algebraically for the
//! band-limited integrands used throughout this crate.

/// Legendre polynomial value and derivative at `x` via the three-term
/// recurrence (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}.
pub fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut pm1 = 1.0; // P_{k-1}
    let mut p = x; // P_k
    for k in 1..n {
        let kf = k as f64;
        let pnext = ((2.0 * kf + 1.0) * x * p - kf * pm1) / (kf + 1.0);
        pm1 = p;
        p = pnext;
    }
    // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1); nodes are interior so the
    // denominator stays safely away from zero where this is used.
    let d = (n as f64) * (x * p - pm1) / (x * x - 1.0);
    (p, d)
}

/// A Gauss-Legendre rule: `nodes` ascending in (-1, 1), matching `weights`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            // i = 0 is the largest root; guesses decrease towards zero.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut deriv = 0.0;
            for _ in 0..64 {
                let (p, d) = legendre_and_derivative(n, x);
                deriv = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-15 * x.abs().max(1.0) {
                    let (_, d) = legendre_and_derivative(n, x);
                    deriv = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            // The middle node is exactly zero by symmetry.
            let mid = n / 2;
            nodes[mid] = 0.0;
            let (_, d) = legendre_and_derivative(n, 0.0);
            weights[mid] = 2.0 / (d * d);
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate a scalar function over [-1, 1].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}
