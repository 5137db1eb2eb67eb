//! On-disk formats.
//!
//! * samples: signed 16-bit little-endian ADC codes, no header
//! * beat records: `f64` little-endian, no header
//! * reports and sidecars: `key: value` lines
//! * tables: comma-separated with a header row
//! * sweep manifest: CSV `nu_hz,record_path,p_sig_watts`
//! * transfer function: CSV `freq_hz,gain_normalized` plus the
//!   un-normalized peak beat power in `calibration.txt`

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qrng_core::calibration::TransferFunction;
use qrng_core::simulator::GroundTruth;

use crate::error::{KitError, Result};

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    if !path.exists() {
        return Err(KitError::MissingArtifact(path.to_path_buf()));
    }
    fs::read(path).map_err(|e| KitError::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| KitError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(KitError::MissingArtifact(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| KitError::io(path, e))
}

pub fn write_samples(path: &Path, samples: &[i16]) -> Result<()> {
    let bytes: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
    write_bytes(path, &bytes)
}

pub fn read_samples(path: &Path) -> Result<Vec<i16>> {
    let bytes = read_bytes(path)?;
    if bytes.len() % 2 != 0 {
        return Err(KitError::format(path, "odd byte count in 16-bit sample file"));
    }
    Ok(bytes.chunks_exact(2).map(|b| i16::from_le_bytes([b[0], b[1]])).collect())
}

pub fn write_record(path: &Path, record: &[f64]) -> Result<()> {
    let bytes: Vec<u8> = record.iter().flat_map(|s| s.to_le_bytes()).collect();
    write_bytes(path, &bytes)
}

pub fn read_record(path: &Path) -> Result<Vec<f64>> {
    let bytes = read_bytes(path)?;
    if bytes.len() % 8 != 0 {
        return Err(KitError::format(path, "byte count is not a multiple of 8"));
    }
    Ok(bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk"))).collect())
}

/// Writes a CSV table; numbers use the shortest round-trip representation.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

/// Numeric CSV body; the header must match `header`.
pub fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    let found = lines.next().unwrap_or("");
    if found.split(',').map(str::trim).ne(header.iter().copied()) {
        return Err(KitError::format(path, format!("expected header {:?}", header.join(","))));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| KitError::format(path, format!("row {}: not a number", i + 2)))
        })
        .collect()
}

/// `key: value` pairs; later duplicates win.
pub fn parse_kv(text: &str) -> BTreeMap<String, String> {
    text.lines().filter_map(|l| l.split_once(':')).map(|(k, v)| (k.trim().to_string(), v.trim().to_string())).collect()
}

pub fn kv_f64(map: &BTreeMap<String, String>, key: &str, path: &Path) -> Result<f64> {
    map.get(key)
        .ok_or_else(|| KitError::format(path, format!("missing key {key}")))?
        .parse()
        .map_err(|_| KitError::format(path, format!("key {key} is not a number")))
}

pub fn truth_text(truth: &GroundTruth) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "total_variance: {}", truth.total_variance);
    let _ = writeln!(s, "conditional_variance: {}", truth.conditional_variance);
    let _ = writeln!(s, "excess_conditional_variance: {}", truth.excess_conditional_variance);
    let _ = writeln!(s, "vacuum_variance: {}", truth.vacuum_variance);
    let _ = writeln!(s, "excess_variance: {}", truth.excess_variance);
    let _ = writeln!(s, "classical_variance: {}", truth.classical_variance);
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub nu_hz: f64,
    pub record_path: PathBuf,
    pub p_sig_watts: f64,
}

pub const SWEEP_HEADER: &str = "nu_hz,record_path,p_sig_watts";

pub fn write_sweep_manifest(path: &Path, entries: &[SweepEntry]) -> Result<()> {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for e in entries {
        let _ = writeln!(out, "{},{},{}", e.nu_hz, e.record_path.display(), e.p_sig_watts);
    }
    write_bytes(path, out.as_bytes())
}

/// Manifest rows; record paths are resolved against the manifest's
/// directory.
pub fn read_sweep_manifest(path: &Path) -> Result<Vec<SweepEntry>> {
    let text = read_text(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(SWEEP_HEADER) {
        return Err(KitError::format(path, format!("expected header {SWEEP_HEADER:?}")));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let bad = || KitError::format(path, format!("row {}: expected nu_hz,record_path,p_sig_watts", i + 2));
            let mut cells = l.split(',').map(str::trim);
            let (nu, rec, p) = (cells.next(), cells.next(), cells.next());
            match (nu, rec, p, cells.next()) {
                (Some(nu), Some(rec), Some(p), None) => Ok(SweepEntry {
                    nu_hz: nu.parse().map_err(|_| bad())?,
                    record_path: base.join(rec),
                    p_sig_watts: p.parse().map_err(|_| bad())?,
                }),
                _ => Err(bad()),
            }
        })
        .collect()
}

pub const TF_HEADER: [&str; 2] = ["freq_hz", "gain_normalized"];

/// Writes `transfer_function.csv` and `calibration.txt` into `dir`.
pub fn write_transfer_function(dir: &Path, tf: &TransferFunction, photon_energy: f64, sample_rate: f64) -> Result<()> {
    write_csv(&dir.join("transfer_function.csv"), &TF_HEADER, tf.freqs.iter().zip(&tf.tf).map(|(f, g)| vec![*f, *g]))?;
    let peak = tf.beat_powers().into_iter().fold(0.0, f64::max);
    let text = format!(
        "p_sig_used: {}\npeak_beat_power: {}\nphoton_energy: {}\nsample_rate: {}\n",
        tf.p_sig_used, peak, photon_energy, sample_rate
    );
    write_bytes(&dir.join("calibration.txt"), text.as_bytes())
}

/// Reads what [`write_transfer_function`] wrote; returns the transfer
/// function, photon energy and sample rate.
pub fn read_transfer_function(dir: &Path) -> Result<(TransferFunction, f64, f64)> {
    let csv = dir.join("transfer_function.csv");
    let rows = read_csv(&csv, &TF_HEADER)?;
    let cal = dir.join("calibration.txt");
    let kv = parse_kv(&read_text(&cal)?);
    let peak = kv_f64(&kv, "peak_beat_power", &cal)?;
    let p_sig = kv_f64(&kv, "p_sig_used", &cal)?;
    let points = rows.iter().map(|r| (r[0], r[1] * peak)).collect();
    let tf = TransferFunction::from_powers(points, p_sig)?;
    Ok((tf, kv_f64(&kv, "photon_energy", &cal)?, kv_f64(&kv, "sample_rate", &cal)?))
}
