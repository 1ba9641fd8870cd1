use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{EMOTION_DIM, POSE_DIM};

/// One timestep: 33 joints × (x, y) and a 20-dim emotion embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub t: i64,
    pub pose: Vec<f64>,
    pub emotion: Vec<f64>,
}

impl FrameRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.pose.len() != POSE_DIM {
            return Err(format!(
                "frame t={}: pose has {} values, expected {POSE_DIM}",
                self.t,
                self.pose.len()
            ));
        }
        if self.emotion.len() != EMOTION_DIM {
            return Err(format!(
                "frame t={}: emotion has {} values, expected {EMOTION_DIM}",
                self.t,
                self.emotion.len()
            ));
        }
        if !self.pose.iter().chain(&self.emotion).all(|v| v.is_finite()) {
            return Err(format!("frame t={}: non-finite value", self.t));
        }
        Ok(())
    }
}

/// A contiguous feature track extracted from one video.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    pub source_id: String,
    pub frames: Vec<FrameRecord>,
}

impl SequenceDataset {
    /// Builds a dataset, sorting by `t` and checking that indices are
    /// contiguous and every frame is well formed.
    pub fn new(source_id: impl Into<String>, mut frames: Vec<FrameRecord>) -> Result<Self> {
        frames.sort_by_key(|f| f.t);
        for f in &frames {
            f.validate().map_err(Error::Contract)?;
        }
        for pair in frames.windows(2) {
            if pair[1].t == pair[0].t {
                return Err(Error::contract(format!("duplicate frame index t={}", pair[0].t)));
            }
            if pair[1].t != pair[0].t + 1 {
                return Err(Error::contract(format!(
                    "frame indices not contiguous: t={} followed by t={}",
                    pair[0].t, pair[1].t
                )));
            }
        }
        Ok(Self {
            source_id: source_id.into(),
            frames,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Reads a line-delimited JSON frame file.
///
/// Blank lines are skipped. Frames are sorted by `t`; duplicate or
/// non-contiguous indices are rejected.
pub fn load_frames(path: impl AsRef<Path>) -> Result<SequenceDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut frames = Vec::new();
    let mut line_of_t = std::collections::HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: FrameRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message: e.to_string(),
        })?;
        frame.validate().map_err(|message| Error::Schema {
            path: path.to_path_buf(),
            line: lineno,
            message,
        })?;
        if let Some(prev) = line_of_t.insert(frame.t, lineno) {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("duplicate frame index t={} (first seen on line {prev})", frame.t),
            });
        }
        frames.push(frame);
    }
    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    SequenceDataset::new(source_id, frames)
}

/// Writes one JSON object per frame. Numbers use the shortest decimal form
/// that parses back to the same `f64`, so load(save(d)) == d bitwise.
pub fn save_frames(path: impl AsRef<Path>, dataset: &SequenceDataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for f in &dataset.frames {
        serde_json::to_writer(&mut w, f)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(t: i64) -> FrameRecord {
        FrameRecord {
            t,
            pose: (0..POSE_DIM).map(|i| t as f64 + i as f64 * 0.01).collect(),
            emotion: vec![0.5; EMOTION_DIM],
        }
    }

    fn write_lines(lines: &[String]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn loads_and_sorts_frames() {
        let lines: Vec<String> = [2, 0, 1]
            .iter()
            .map(|&t| serde_json::to_string(&frame(t)).unwrap())
            .collect();
        let f = write_lines(&lines);
        let d = load_frames(f.path()).unwrap();
        assert_eq!(d.frames.iter().map(|f| f.t).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn short_pose_is_a_schema_error() {
        let mut bad = frame(0);
        bad.pose.pop();
        let f = write_lines(&[serde_json::to_string(&bad).unwrap()]);
        let err = load_frames(f.path()).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Schema { line: 1, .. }));
        assert!(msg.contains("expected 66"), "{msg}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write_lines(&[serde_json::to_string(&frame(0)).unwrap(), "{\"t\": 1, ".into()]);
        assert!(matches!(load_frames(f.path()).unwrap_err(), Error::Parse { line: 2, .. }));
    }

    #[test]
    fn duplicates_rejected() {
        let l = serde_json::to_string(&frame(4)).unwrap();
        let f = write_lines(&[l.clone(), l]);
        assert!(load_frames(f.path()).is_err());
    }

    #[test]
    fn gaps_rejected() {
        let f = write_lines(&[
            serde_json::to_string(&frame(0)).unwrap(),
            serde_json::to_string(&frame(2)).unwrap(),
        ]);
        assert!(load_frames(f.path()).is_err());
    }
}
