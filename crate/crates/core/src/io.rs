//! File formats: sample records and Hamiltonians as CSV, spectra and solver
//! reports as JSON.
//!
//! Floats are written in Rust's shortest round-trip decimal form, so
//! write-then-read reproduces values bit-identically.  A sample CSV carries
//! no noise metadata: records read back are tagged as carrying an unknown
//! noise level, and downstream rank detection falls back to locating the
//! noise floor in the data itself.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::QpdReport;
use crate::signal::{LineSpectrum, NoiseMeta, SampleRecord};
use crate::solver::{ObservationWindow, RecoveredSpectrum};

/// Write a sample record as CSV with columns `t,re,im` plus `dre,dim` when
/// the record carries a derivative channel.
pub fn write_samples_csv(path: impl AsRef<Path>, record: &SampleRecord) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    let with_derivative = record.derivative_values().is_some();
    if with_derivative {
        w.write_record(["t", "re", "im", "dre", "dim"])?;
    } else {
        w.write_record(["t", "re", "im"])?;
    }
    for (j, (&t, v)) in record.times().iter().zip(record.values()).enumerate() {
        if let Some(d) = record.derivative_values() {
            let d = d[j];
            w.write_record([
                t.to_string(),
                v.re.to_string(),
                v.im.to_string(),
                d.re.to_string(),
                d.im.to_string(),
            ])?;
        } else {
            w.write_record([t.to_string(), v.re.to_string(), v.im.to_string()])?;
        }
    }
    w.flush().map_err(Error::Io)?;
    Ok(())
}

/// Read a sample record written by [`write_samples_csv`] (or any CSV with a
/// `t,re,im[,dre,dim]` header).  The noise level is tagged unknown.
pub fn read_samples_csv(path: impl AsRef<Path>) -> Result<SampleRecord> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    let headers = r.headers()?.clone();
    let cols: Vec<&str> = headers.iter().map(str::trim).collect();
    let with_derivative = match cols.as_slice() {
        ["t", "re", "im"] => false,
        ["t", "re", "im", "dre", "dim"] => true,
        other => {
            return Err(Error::Parse(format!(
                "expected header t,re,im[,dre,dim], got {other:?}"
            )))
        }
    };
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut derivatives = Vec::new();
    for (idx, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| Error::Parse(format!("row {idx}: missing column {i}")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {idx}, column {i}: {e}")))
        };
        times.push(field(0)?);
        values.push(Complex64::new(field(1)?, field(2)?));
        if with_derivative {
            derivatives.push(Complex64::new(field(3)?, field(4)?));
        }
    }
    SampleRecord::new(
        times,
        values,
        with_derivative.then_some(derivatives),
        NoiseMeta::Unknown,
    )
}

#[derive(Serialize, Deserialize)]
struct LineDoc {
    omega: f64,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct SpectrumDoc {
    lines: Vec<LineDoc>,
}

/// Write a line spectrum as JSON: `{"lines": [{"omega", "re", "im"}]}`.
pub fn write_spectrum_json(path: impl AsRef<Path>, spec: &LineSpectrum) -> Result<()> {
    let doc = SpectrumDoc {
        lines: spec
            .lines()
            .iter()
            .map(|l| LineDoc {
                omega: l.omega,
                re: l.alpha.re,
                im: l.alpha.im,
            })
            .collect(),
    };
    write_json(path, &doc)
}

pub fn read_spectrum_json(path: impl AsRef<Path>) -> Result<LineSpectrum> {
    let doc: SpectrumDoc = read_json(path)?;
    LineSpectrum::new(
        doc.lines
            .into_iter()
            .map(|l| (l.omega, Complex64::new(l.re, l.im))),
    )
}

/// Write a complex matrix as CSV: row i holds the 2d reals
/// `re(M[i,0]), im(M[i,0]), re(M[i,1]), im(M[i,1]), ...`.
pub fn write_hamiltonian_csv(path: impl AsRef<Path>, matrix: &Array2<Complex64>) -> Result<()> {
    let (rows, cols) = matrix.dim();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path.as_ref())?;
    for i in 0..rows {
        let mut fields = Vec::with_capacity(2 * cols);
        for j in 0..cols {
            fields.push(matrix[[i, j]].re.to_string());
            fields.push(matrix[[i, j]].im.to_string());
        }
        w.write_record(&fields)?;
    }
    w.flush().map_err(Error::Io)?;
    Ok(())
}

/// Read a complex matrix written by [`write_hamiltonian_csv`]: d rows of 2d
/// reals.  Hermiticity is the caller's check (it belongs to the Hamiltonian
/// constructor, not the file format).
pub fn read_hamiltonian_csv(path: impl AsRef<Path>) -> Result<Array2<Complex64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path.as_ref())?;
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (idx, rec) in r.records().enumerate() {
        let rec = rec?;
        let fields: Vec<&str> = rec.iter().map(str::trim).filter(|f| !f.is_empty()).collect();
        if fields.is_empty() {
            continue;
        }
        if !fields.len().is_multiple_of(2) {
            return Err(Error::Parse(format!(
                "row {idx}: odd number of reals ({}); entries are re,im pairs",
                fields.len()
            )));
        }
        let mut row = Vec::with_capacity(fields.len() / 2);
        for pair in fields.chunks(2) {
            let re: f64 = pair[0]
                .parse()
                .map_err(|e| Error::Parse(format!("row {idx}: {e}")))?;
            let im: f64 = pair[1]
                .parse()
                .map_err(|e| Error::Parse(format!("row {idx}: {e}")))?;
            row.push(Complex64::new(re, im));
        }
        rows.push(row);
    }
    let d = rows.len();
    if d == 0 {
        return Err(Error::Parse("matrix file holds no rows".into()));
    }
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Parse(format!(
            "matrix must be square: {d} rows but row widths {:?}",
            rows.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    let mut m = Array2::<Complex64>::zeros((d, d));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            m[[i, j]] = v;
        }
    }
    Ok(m)
}

#[derive(Serialize, Deserialize)]
pub struct SolvedLineDoc {
    pub omega: f64,
    pub re: f64,
    pub im: f64,
    pub residual: f64,
}

#[derive(Serialize, Deserialize)]
pub struct DiscardedDoc {
    pub omega: f64,
    pub im: f64,
    pub residual: f64,
    pub reason: String,
}

/// JSON form of a solver run: recovered lines, what the spurious filter
/// removed, and the window bookkeeping.
#[derive(Serialize, Deserialize)]
pub struct SolutionDoc {
    pub rank: usize,
    pub lines: Vec<SolvedLineDoc>,
    pub discarded: Vec<DiscardedDoc>,
    pub delta_eff: f64,
    pub capacity_t_over_pi: f64,
}

impl SolutionDoc {
    pub fn new(spectrum: &RecoveredSpectrum, window: &ObservationWindow) -> Self {
        SolutionDoc {
            rank: spectrum.rank(),
            lines: spectrum
                .lines()
                .iter()
                .map(|l| SolvedLineDoc {
                    omega: l.omega,
                    re: l.alpha.re,
                    im: l.alpha.im,
                    residual: l.residual,
                })
                .collect(),
            discarded: spectrum
                .discarded()
                .iter()
                .map(|d| DiscardedDoc {
                    omega: d.value.re,
                    im: d.value.im,
                    residual: d.residual,
                    reason: d.reason.to_string(),
                })
                .collect(),
            delta_eff: spectrum.delta_eff_est(),
            capacity_t_over_pi: window.capacity(),
        }
    }
}

pub fn write_solution_json(
    path: impl AsRef<Path>,
    spectrum: &RecoveredSpectrum,
    window: &ObservationWindow,
) -> Result<()> {
    write_json(path, &SolutionDoc::new(spectrum, window))
}

pub fn read_solution_json(path: impl AsRef<Path>) -> Result<SolutionDoc> {
    read_json(path)
}

#[derive(Serialize, Deserialize)]
pub struct TrueLineDoc {
    pub energy: f64,
    pub weight: f64,
}

/// JSON form of a hybrid pipeline run: recovered lines next to the simulated
/// ground truth and the resource cost.
#[derive(Serialize, Deserialize)]
pub struct QpdReportDoc {
    pub source: String,
    pub omega0: f64,
    pub w: f64,
    pub t: f64,
    pub rank: usize,
    pub recovered: Vec<SolvedLineDoc>,
    pub true_lines: Vec<TrueLineDoc>,
    pub frequency_errors: Vec<Option<f64>>,
    pub weight_errors: Vec<Option<f64>>,
    pub n_signal_queries: usize,
    pub total_evolution_time: f64,
}

impl QpdReportDoc {
    pub fn new(report: &QpdReport) -> Self {
        QpdReportDoc {
            source: report.source.clone(),
            omega0: report.window.omega0(),
            w: report.window.w(),
            t: report.window.t(),
            rank: report.spectrum.rank(),
            recovered: report
                .spectrum
                .lines()
                .iter()
                .map(|l| SolvedLineDoc {
                    omega: l.omega,
                    re: l.alpha.re,
                    im: l.alpha.im,
                    residual: l.residual,
                })
                .collect(),
            true_lines: report
                .true_lines
                .iter()
                .map(|tl| TrueLineDoc {
                    energy: tl.energy,
                    weight: tl.weight,
                })
                .collect(),
            frequency_errors: report.frequency_errors.clone(),
            weight_errors: report.weight_errors.clone(),
            n_signal_queries: report.n_signal_queries,
            total_evolution_time: report.total_evolution_time,
        }
    }
}

pub fn write_qpd_report_json(path: impl AsRef<Path>, report: &QpdReport) -> Result<()> {
    write_json(path, &QpdReportDoc::new(report))
}

pub fn read_qpd_report_json(path: impl AsRef<Path>) -> Result<QpdReportDoc> {
    read_json(path)
}

fn write_json<T: Serialize>(path: impl AsRef<Path>, doc: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path.as_ref())?);
    serde_json::to_writer_pretty(&mut f, doc)?;
    f.write_all(b"\n").map_err(Error::Io)?;
    f.flush().map_err(Error::Io)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let f = BufReader::new(File::open(path.as_ref())?);
    Ok(serde_json::from_reader(f)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{build_hamiltonian, Hamiltonian, HamiltonianKind};
    use crate::signal::{linspace, sample, NoiseKind, NoiseModel};
    use std::io::Write as _;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn demo_record(noise: &NoiseModel) -> SampleRecord {
        let spec = LineSpectrum::new([(1.0, c64(0.31, -0.7)), (-0.4, c64(0.2, 0.05))]).unwrap();
        let grid = linspace(-4.0, 4.0, 33).unwrap();
        sample(&spec, &grid, noise).unwrap()
    }

    #[test]
    fn samples_round_trip_bit_identically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.csv");

        // Noiseless records carry the derivative channel.
        let record = demo_record(&NoiseModel::none());
        assert!(record.derivative_values().is_some());
        write_samples_csv(&path, &record).unwrap();
        let back = read_samples_csv(&path).unwrap();
        assert_eq!(record.times(), back.times());
        assert_eq!(record.values(), back.values());
        assert_eq!(record.derivative_values(), back.derivative_values());
        assert!(back.noise_sigma_bound().is_none(), "files carry no noise tag");

        // Noisy records have values only.
        let record = demo_record(&NoiseModel {
            kind: NoiseKind::IidGaussian { sigma: 1e-3 },
            seed: 5,
        });
        assert!(record.derivative_values().is_none());
        write_samples_csv(&path, &record).unwrap();
        let back = read_samples_csv(&path).unwrap();
        assert_eq!(record.values(), back.values());
        assert!(back.derivative_values().is_none());
    }

    #[test]
    fn samples_reader_rejects_malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");

        std::fs::write(&path, "time,value\n0,1\n").unwrap();
        assert!(matches!(read_samples_csv(&path), Err(Error::Parse(_))));

        std::fs::write(&path, "t,re,im\n0,1,oops\n").unwrap();
        assert!(matches!(read_samples_csv(&path), Err(Error::Parse(_))));

        // Decreasing times fail record validation.
        std::fs::write(&path, "t,re,im\n1,0,0\n0,0,0\n").unwrap();
        assert!(matches!(read_samples_csv(&path), Err(Error::BadGrid(_))));
    }

    #[test]
    fn spectrum_json_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spec.json");
        let spec = LineSpectrum::new([
            (-2.5, c64(1.0, 0.0)),
            (0.1234567890123456, c64(-0.25, 1e-17)),
        ])
        .unwrap();
        write_spectrum_json(&path, &spec).unwrap();
        let back = read_spectrum_json(&path).unwrap();
        assert_eq!(spec.lines().len(), back.lines().len());
        for (a, b) in spec.lines().iter().zip(back.lines()) {
            assert_eq!(a.omega, b.omega);
            assert_eq!(a.alpha, b.alpha);
        }
    }

    #[test]
    fn hamiltonian_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let h = build_hamiltonian(&HamiltonianKind::Random { dim: 6, seed: 17 }).unwrap();
        write_hamiltonian_csv(&path, h.matrix()).unwrap();
        let back = read_hamiltonian_csv(&path).unwrap();
        assert_eq!(h.matrix(), &back);
        // The round-tripped matrix still builds (Hermiticity preserved).
        Hamiltonian::from_matrix(back, "round trip".into()).unwrap();
    }

    #[test]
    fn hamiltonian_reader_rejects_bad_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");

        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "1,0,0,0").unwrap();
        writeln!(f, "0,0").unwrap();
        drop(f);
        assert!(matches!(read_hamiltonian_csv(&path), Err(Error::Parse(_))));

        std::fs::write(&path, "1,0,0\n").unwrap();
        assert!(matches!(read_hamiltonian_csv(&path), Err(Error::Parse(_))));

        std::fs::write(&path, "").unwrap();
        assert!(matches!(read_hamiltonian_csv(&path), Err(Error::Parse(_))));

        // A non-Hermitian file parses as a matrix but fails the constructor.
        std::fs::write(&path, "0,0,1,0\n0,0,0,0\n").unwrap();
        let m = read_hamiltonian_csv(&path).unwrap();
        assert!(matches!(
            Hamiltonian::from_matrix(m, "bad file".into()),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn solution_json_reflects_a_solve() {
        use crate::pswf::PswfBasis;
        use crate::solver::{assemble_from_lines, solve, RankPolicy};
        use std::sync::Arc;

        let spec = LineSpectrum::new([(0.5, c64(1.0, 0.0)), (-1.0, c64(0.5, 0.5))]).unwrap();
        let window = ObservationWindow::new(0.0, 2.0, 6.0).unwrap();
        let basis = Arc::new(PswfBasis::build(window.c(), window.default_basis_len()).unwrap());
        let problem = assemble_from_lines(&spec, &window, &basis, None).unwrap();
        let out = solve(&problem, RankPolicy::Auto { noise_floor: None }).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("solution.json");
        write_solution_json(&path, &out, &window).unwrap();
        let doc = read_solution_json(&path).unwrap();
        assert_eq!(doc.rank, out.rank());
        assert_eq!(doc.lines.len(), out.lines().len());
        for (a, b) in doc.lines.iter().zip(out.lines()) {
            assert_eq!(a.omega, b.omega);
            assert_eq!(a.residual, b.residual);
        }
        assert_eq!(doc.capacity_t_over_pi, window.capacity());
    }

    #[test]
    fn qpd_report_json_round_trips() {
        use crate::quantum::{qpd_pipeline, QpdParams, QuantumState};

        let h = build_hamiltonian(&HamiltonianKind::Random { dim: 4, seed: 1 }).unwrap();
        let psi = QuantumState::random(4, 2).unwrap();
        let (omega0, w) = h.full_band(1.2).unwrap();
        let report = qpd_pipeline(
            &h,
            &psi,
            &QpdParams {
                omega0,
                w,
                t: 6.0 * std::f64::consts::PI / w,
                n_samples: None,
                shots: None,
            },
        )
        .unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        write_qpd_report_json(&path, &report).unwrap();
        let doc = read_qpd_report_json(&path).unwrap();
        assert_eq!(doc.source, report.source);
        assert_eq!(doc.rank, report.spectrum.rank());
        assert_eq!(doc.true_lines.len(), report.true_lines.len());
        assert_eq!(doc.frequency_errors, report.frequency_errors);
        assert_eq!(doc.n_signal_queries, report.n_signal_queries);
    }
}
