//! CSV and JSON writers. Numbers use Rust's shortest round-trip formatting
//! so output is byte-identical across runs.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fdrk_core::bayes::{Chain, RefinementTrace};

pub const SOLUTION_HEADER: [&str; 4] = ["x", "t", "u_numeric", "u_exact"];
pub const DIAGNOSTICS_HEADER: [&str; 4] = ["t", "tau_inf", "eta_inf", "E_inf"];
pub const SWEEP_HEADER: [&str; 3] = ["h", "true_err_inf", "K_hat"];
pub const TRACE_HEADER: [&str; 6] = ["iter", "event", "h_before", "h_after", "K_hat", "B"];
pub const DATA_HEADER: [&str; 3] = ["x", "y", "u_exact"];

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
}

/// Writes all rows at once, so a failed command leaves no partial file.
pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[S], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header.iter().map(|s| s.as_ref()))?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().context("csv buffer")?;
    write_bytes(path, &bytes)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    f.write_all(bytes)
        .with_context(|| format!("cannot write {}", path.display()))
}

pub fn chain_header(param_names: &[&str]) -> Vec<String> {
    let mut h = vec!["iter".to_string()];
    h.extend((1..=param_names.len()).map(|i| format!("theta_{i}")));
    h.extend(["logpost", "accepted", "h_used", "K_hat"].map(String::from));
    h
}

pub fn write_chain(path: &Path, chain: &Chain, param_names: &[&str]) -> Result<()> {
    let rows: Vec<Vec<String>> = (0..chain.len())
        .map(|i| {
            let mut r = vec![i.to_string()];
            r.extend(chain.samples[i].iter().map(|&x| num(x)));
            r.push(num(chain.log_post[i]));
            r.push((chain.accepted[i] as u8).to_string());
            r.push(num(chain.h_used[i]));
            r.push(num(chain.k_hat[i]));
            r
        })
        .collect();
    write_csv(path, &chain_header(param_names), &rows)
}

pub fn write_trace(path: &Path, trace: &RefinementTrace) -> Result<()> {
    let rows: Vec<Vec<String>> = trace
        .records
        .iter()
        .map(|r| {
            vec![
                r.iter.to_string(),
                r.event.name().to_string(),
                num(r.h_before),
                num(r.h_after),
                num(r.k_hat),
                num(r.bound),
            ]
        })
        .collect();
    write_csv(path, &TRACE_HEADER, &rows)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

pub fn join(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
