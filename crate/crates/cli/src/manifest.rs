use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use crc::{Crc, CRC_64_XZ};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Serialize)]
pub struct InputChecksum {
    pub path: PathBuf,
    /// CRC-64/XZ of the file contents, hex.
    pub crc64: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub flags: Value,
    pub inputs: Vec<InputChecksum>,
    pub outputs: Vec<PathBuf>,
    pub snapshot_format_version: u8,
    pub tool_version: String,
    pub duration_secs: f64,
}

pub fn checksum(path: &Path) -> Result<InputChecksum> {
    let crc = Crc::<u64>::new(&CRC_64_XZ);
    let mut digest = crc.digest();
    let mut r = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = r.read(&mut buf)?;
        if n == 0 {
            break;
        }
        digest.update(&buf[..n]);
        bytes += n as u64;
    }
    Ok(InputChecksum {
        path: path.to_path_buf(),
        crc64: format!("{:016x}", digest.finalize()),
        bytes,
    })
}

/// Path of the manifest written next to `out`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub struct Recorder {
    start: Instant,
    subcommand: &'static str,
    flags: Value,
    inputs: Vec<InputChecksum>,
}

impl Recorder {
    pub fn new(subcommand: &'static str, flags: Value, inputs: &[&Path]) -> Result<Self> {
        Ok(Recorder {
            start: Instant::now(),
            subcommand,
            flags,
            inputs: inputs.iter().map(|p| checksum(p)).collect::<Result<_>>()?,
        })
    }

    pub fn finish(self, manifest_at: &Path, outputs: Vec<PathBuf>) -> Result<()> {
        let m = RunManifest {
            subcommand: self.subcommand.to_string(),
            flags: self.flags,
            inputs: self.inputs,
            outputs,
            snapshot_format_version: displace_core::SNAPSHOT_FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            duration_secs: self.start.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&m)?;
        std::fs::write(manifest_at, text + "\n").with_context(|| format!("writing {}", manifest_at.display()))
    }
}
