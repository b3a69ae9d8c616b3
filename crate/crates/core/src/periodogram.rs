//! FFT periodogram baseline: peak-picking with parabolic refinement.
//!
//! This is the contrast method, not the product: its resolution is pinned to
//! the reciprocal record length, so closely spaced lines merge into single
//! peaks that the prolate solver separates from the same data.  Reported
//! amplitudes carry the usual off-bin scalloping bias.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal::{LineSpectrum, SampleRecord};
use crate::solver::ObservationWindow;

/// Peaks below this fraction of the strongest bin are floor, not signal.
const REL_PEAK_FLOOR: f64 = 1e-12;
/// Parabolic offsets outside half a bin mean the local model failed; clamp.
const MAX_REFINE_OFFSET: f64 = 0.5;

/// Estimate a line spectrum by periodogram peak-picking over the record,
/// keeping the peaks inside the window's analysis band.
///
/// The record must lie on a uniform grid.  Each local maximum of the power
/// spectrum above a relative floor is refined by fitting a parabola through
/// the log-power of the peak bin and its two neighbors; the line amplitude is
/// read off the peak bin's Fourier coefficient rephased to the grid origin.
pub fn baseline_fft(record: &SampleRecord, window: &ObservationWindow) -> Result<LineSpectrum> {
    let n = record.len();
    if n < 4 {
        return Err(Error::InsufficientSamples {
            required: 4,
            got: n,
            context: "periodogram".into(),
        });
    }
    let dt = record
        .uniform_spacing()
        .ok_or_else(|| Error::BadGrid("periodogram needs a uniform sample grid".into()))?;
    let t0 = record.times()[0];

    let mut buffer: Vec<Complex64> = record.values().to_vec();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buffer);

    let power: Vec<f64> = buffer.iter().map(|x| x.norm_sqr()).collect();
    let p_max = power.iter().fold(0.0f64, |m, p| m.max(*p));
    if p_max <= 0.0 {
        return Ok(LineSpectrum::empty());
    }
    let floor = REL_PEAK_FLOOR * p_max;

    let bin = 2.0 * PI / (n as f64 * dt);
    let mut peaks: Vec<(f64, Complex64)> = Vec::new();
    for k in 0..n {
        let prev = power[(k + n - 1) % n];
        let next = power[(k + 1) % n];
        // Strict on the left, lax on the right: a flat-topped peak yields
        // exactly one representative.
        if power[k] <= floor || power[k] <= prev || power[k] < next {
            continue;
        }
        let offset = refine_offset(prev, power[k], next);
        let k_signed = if k <= n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        };
        let omega = (k_signed + offset) * bin;
        if (omega - window.omega0()).abs() > window.w() {
            continue;
        }
        let alpha = buffer[k] / n as f64 * Complex64::from_polar(1.0, -omega * t0);
        peaks.push((omega, alpha));
    }
    LineSpectrum::new(peaks)
}

/// Sub-bin peak offset from a parabola through three log-power values.
fn refine_offset(prev: f64, peak: f64, next: f64) -> f64 {
    // An isolated on-bin line leaves its neighbors at the rounding floor;
    // logs there would dwarf the fit, so report the bin itself.
    if prev <= REL_PEAK_FLOOR * peak || next <= REL_PEAK_FLOOR * peak {
        return 0.0;
    }
    let (lp, lc, ln) = (prev.ln(), peak.ln(), next.ln());
    let denom = lp - 2.0 * lc + ln;
    if denom >= 0.0 {
        return 0.0;
    }
    (0.5 * (lp - ln) / denom).clamp(-MAX_REFINE_OFFSET, MAX_REFINE_OFFSET)
}
