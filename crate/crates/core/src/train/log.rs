use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::fit::EpochLog;
use crate::error::{Error, Result};

/// One JSON object per epoch.
pub fn write_metrics(path: impl AsRef<Path>, logs: &[EpochLog]) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for log in logs {
        serde_json::to_writer(&mut w, log)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<EpochLog>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Two-column `epoch,lambda` CSV of the gate trajectory.
pub fn gate_csv(logs: &[EpochLog]) -> String {
    let mut s = String::from("epoch,lambda\n");
    for log in logs {
        if let Some(l) = log.lambda_emo {
            s.push_str(&format!("{},{}\n", log.epoch, l));
        }
    }
    s
}
