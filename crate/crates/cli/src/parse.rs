//! Small string formats used by the command line: noise specs, Hamiltonian
//! and state recipes, and the CSV tables the subcommands emit.

use std::path::Path;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;

use prolate_core::io::read_hamiltonian_csv;
use prolate_core::pswf::PswfBasis;
use prolate_core::quantum::{Hamiltonian, HamiltonianKind, QuantumState};
use prolate_core::signal::{linspace, NoiseKind, NoiseModel};

/// Parse `none`, `gauss:SIGMA`, `growing:SIGMA:RATE`, or `shot:M`.
pub fn noise_model(text: &str, seed: u64) -> Result<NoiseModel> {
    let parts: Vec<&str> = text.split(':').collect();
    let kind = match parts.as_slice() {
        ["none"] => NoiseKind::None,
        ["gauss", sigma] => NoiseKind::IidGaussian {
            sigma: parse_f64(sigma, "gauss sigma")?,
        },
        ["growing", sigma, rate] => NoiseKind::Growing {
            sigma: parse_f64(sigma, "growing sigma")?,
            rate: parse_f64(rate, "growing rate")?,
        },
        ["shot", shots] => NoiseKind::Shot {
            shots: shots
                .parse()
                .with_context(|| format!("shot count '{shots}'"))?,
        },
        _ => bail!("unknown noise spec '{text}' (expected none, gauss:SIGMA, growing:SIGMA:RATE, or shot:M)"),
    };
    let model = NoiseModel { kind, seed };
    model.validate()?;
    Ok(model)
}

/// Parse `random:DIM:SEED`, `heis:N:J=..:h=..`, or `file:PATH`.  Seeds may
/// be written bare (`7`) or prefixed (`seed7`).
pub fn hamiltonian_kind(text: &str) -> Result<HamiltonianKind> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        ["random", dim, seed] => Ok(HamiltonianKind::Random {
            dim: dim.parse().with_context(|| format!("dimension '{dim}'"))?,
            seed: parse_seed(seed)?,
        }),
        ["heis", n, rest @ ..] => {
            let n_sites = n.parse().with_context(|| format!("site count '{n}'"))?;
            let mut j = None;
            let mut h = None;
            for token in rest {
                match token.split_once('=') {
                    Some(("J", v)) => j = Some(parse_f64(v, "J")?),
                    Some(("h", v)) => h = Some(parse_f64(v, "h")?),
                    _ => bail!("unknown heis parameter '{token}' (expected J=.. or h=..)"),
                }
            }
            Ok(HamiltonianKind::HeisenbergChain {
                n_sites,
                j: j.context("heis spec needs J=..")?,
                h: h.context("heis spec needs h=..")?,
            })
        }
        ["file", path @ ..] => {
            // Re-join so Windows-style or URL-ish paths with ':' survive.
            let path = path.join(":");
            let matrix = read_hamiltonian_csv(&path)
                .with_context(|| format!("reading Hamiltonian {path}"))?;
            Ok(HamiltonianKind::Matrix {
                matrix,
                label: path,
            })
        }
        _ => bail!(
            "unknown Hamiltonian spec '{text}' (expected random:DIM:SEED, heis:N:J=..:h=.., or file:PATH)"
        ),
    }
}

/// Parse `random:SEED`, `basis:INDEX`, or `uniform` against a Hamiltonian.
pub fn initial_state(text: &str, ham: &Hamiltonian) -> Result<QuantumState> {
    let parts: Vec<&str> = text.split(':').collect();
    let state = match parts.as_slice() {
        ["random", seed] => QuantumState::random(ham.dim(), parse_seed(seed)?)?,
        ["basis", index] => QuantumState::basis(
            ham.dim(),
            index.parse().with_context(|| format!("basis index '{index}'"))?,
        )?,
        ["uniform"] => QuantumState::uniform_over_modes(ham)?,
        _ => bail!("unknown state spec '{text}' (expected random:SEED, basis:INDEX, or uniform)"),
    };
    Ok(state)
}

fn parse_seed(text: &str) -> Result<u64> {
    let bare = text.strip_prefix("seed").unwrap_or(text);
    bare.parse().with_context(|| format!("seed '{text}'"))
}

fn parse_f64(text: &str, what: &str) -> Result<f64> {
    text.parse().with_context(|| format!("{what} '{text}'"))
}

/// Mode table as CSV: one row per mode with chi, lambda, then psi sampled on
/// a uniform grid over [-1, 1] (grid positions in the header).
pub fn dump_basis_csv(path: &Path, basis: &PswfBasis, grid_len: usize) -> Result<()> {
    let xs = linspace(-1.0, 1.0, grid_len)?;
    let mut header = vec!["n".to_string(), "chi".to_string(), "lambda".to_string()];
    header.extend(xs.iter().map(|x| format!("psi({x})")));
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(&header)?;
    for n in 0..basis.len() {
        let mut row = vec![
            n.to_string(),
            format!("{:.17e}", basis.chi()[n]),
            format!("{:.17e}", basis.lambda()[n]),
        ];
        for &x in &xs {
            row.push(format!("{:.17e}", basis.evaluate(n, x)?));
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Evaluation table as CSV: columns t, re, im.
pub fn write_eval_csv(path: &Path, grid: &[f64], values: &[Complex64]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["t", "re", "im"])?;
    for (t, v) in grid.iter().zip(values) {
        writer.write_record(&[format!("{t:.17e}"), format!("{:.17e}", v.re), format!("{:.17e}", v.im)])?;
    }
    writer.flush()?;
    Ok(())
}
