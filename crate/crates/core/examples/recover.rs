//! End-to-end demo: synthesize a noisy three-line signal, sample it on a
//! uniform grid, and recover the lines from the samples.
//!
//! Run with `cargo run --example recover`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use prolate_core::pswf::PswfBasis;
use prolate_core::signal::{linspace, LineSpectrum, NoiseKind, NoiseModel};
use prolate_core::solver::{assemble_from_samples, solve, ObservationWindow, RankPolicy};

fn main() -> prolate_core::Result<()> {
    let truth = LineSpectrum::new([
        (-2.0, Complex64::new(1.0, 0.0)),
        (0.0, Complex64::new(0.8, 0.4)),
        (2.0, Complex64::new(1.2, -0.3)),
    ])?;
    let window = ObservationWindow::new(0.0, 3.0, PI)?;

    let sigma = 1e-3;
    let noise = NoiseModel {
        kind: NoiseKind::IidGaussian { sigma },
        seed: 7,
    };
    let span = 2.0 * window.t();
    let n = 2 * (2.0 * window.w() * span / PI).ceil() as usize + 8;
    let grid = linspace(-span, span, n)?;
    let record = prolate_core::signal::sample(&truth, &grid, &noise)?;

    let basis = Arc::new(PswfBasis::build(window.c(), window.default_basis_len())?);
    let problem = assemble_from_samples(&record, &window, &basis, None)?;
    let spectrum = solve(&problem, RankPolicy::Auto { noise_floor: None })?;

    println!(
        "samples: {n} on [-{span:.3}, {span:.3}], noise sigma {sigma:.1e}, rank {}",
        spectrum.rank()
    );
    for line in spectrum.lines() {
        let nearest = truth
            .lines()
            .iter()
            .min_by(|a, b| {
                (a.omega - line.omega)
                    .abs()
                    .total_cmp(&(b.omega - line.omega).abs())
            })
            .expect("non-empty truth");
        println!(
            "  omega {:+.6}  (true {:+.0}, err {:.2e})   alpha {:.4}{:+.4}i  residual {:.1e}",
            line.omega,
            nearest.omega,
            (line.omega - nearest.omega).abs(),
            line.alpha.re,
            line.alpha.im,
            line.residual
        );
    }
    for d in spectrum.discarded() {
        println!("  discarded {:+.4} ({:?})", d.value.re, d.reason);
    }
    Ok(())
}
