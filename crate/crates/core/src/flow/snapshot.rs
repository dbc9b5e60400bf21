use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::domain::{InitialCondition, MacroDomain};
use super::stepper::{FlowMode, MacroTrajectory, VelocityState};
use crate::io::sha256_bytes;
use crate::{Error, Result};

/// JSON sidecar describing a flat little-endian `f64` snapshot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub mode: FlowMode,
    pub domain: MacroDomain,
    pub initial_condition: InitialCondition,
    pub unknowns: usize,
    pub times: Vec<f64>,
    pub kinetic_energies: Vec<f64>,
    pub data_file: String,
    pub sha256: String,
}

/// Writes `<stem>.bin` and `<stem>.json` into `dir`; returns both paths.
pub fn write_snapshots(traj: &MacroTrajectory, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let unknowns = traj.domain.unknowns();
    let mut bytes = Vec::with_capacity(traj.states.len() * unknowns * 8);
    for s in &traj.states {
        for v in &s.psi {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let bin = dir.join(format!("{stem}.bin"));
    fs::write(&bin, &bytes).map_err(|e| Error::io(&bin, e))?;
    let header = SnapshotHeader {
        mode: traj.mode,
        domain: traj.domain,
        initial_condition: traj.initial_condition,
        unknowns,
        times: traj.states.iter().map(|s| s.time).collect(),
        kinetic_energies: traj.states.iter().map(|s| s.kinetic_energy).collect(),
        data_file: format!("{stem}.bin"),
        sha256: sha256_bytes(&bytes),
    };
    let json = dir.join(format!("{stem}.json"));
    crate::io::write_json(&json, &header)?;
    Ok((bin, json))
}

/// Reads a snapshot pair back, verifying size and checksum.
pub fn read_snapshots(header_path: &Path) -> Result<(SnapshotHeader, Vec<VelocityState>)> {
    let text = fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let header: SnapshotHeader =
        serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", header_path.display())))?;
    let bin = header_path.with_file_name(&header.data_file);
    let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    if sha256_bytes(&bytes) != header.sha256 {
        return Err(Error::InvalidInput(format!("{}: checksum mismatch", bin.display())));
    }
    let n = header.unknowns;
    if bytes.len() != header.times.len() * n * 8 {
        return Err(Error::InvalidInput(format!("{}: unexpected size", bin.display())));
    }
    let states = bytes
        .chunks_exact(n * 8)
        .zip(header.times.iter().zip(&header.kinetic_energies))
        .map(|(chunk, (&time, &kinetic_energy))| VelocityState {
            time,
            kinetic_energy,
            psi: chunk
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                .collect(),
        })
        .collect();
    Ok((header, states))
}
