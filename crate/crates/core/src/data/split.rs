use serde::{Deserialize, Serialize};

use super::frames::SequenceDataset;
use crate::error::{Error, Result};

/// Fractions of each sequence assigned to train / val / test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.70,
            val: 0.15,
            test: 0.15,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|r| !r.is_finite() || *r < 0.0) || self.train <= 0.0 {
            return Err(Error::contract(format!("invalid split ratios {parts:?}")));
        }
        let total: f64 = parts.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::contract(format!("split ratios sum to {total}, expected 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }
}

impl std::str::FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitName::Train),
            "val" => Ok(SplitName::Val),
            "test" => Ok(SplitName::Test),
            other => Err(Error::contract(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Splits {
    pub train: Vec<SequenceDataset>,
    pub val: Vec<SequenceDataset>,
    pub test: Vec<SequenceDataset>,
}

impl Splits {
    pub fn get(&self, name: SplitName) -> &[SequenceDataset] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Val => &self.val,
            SplitName::Test => &self.test,
        }
    }
}

/// Cuts every sequence chronologically into train, val and test segments,
/// dropping `gap` frames before the val and test segments.
///
/// Segment boundaries sit at `round(train·N)` and `round((train+val)·N)`.
/// Empty segments are omitted. A segment shorter than `min_len` is kept but
/// logged, since it yields no windows.
pub fn split_dataset(
    datasets: &[SequenceDataset],
    ratios: SplitRatios,
    gap: usize,
    min_len: usize,
) -> Result<Splits> {
    ratios.validate()?;
    let mut out = Splits::default();
    for d in datasets {
        let n = d.len();
        let c1 = ((ratios.train * n as f64).round() as usize).min(n);
        let c2 = (((ratios.train + ratios.val) * n as f64).round() as usize).clamp(c1, n);
        let ranges = [
            (SplitName::Train, 0, c1),
            (SplitName::Val, (c1 + gap).min(c2), c2),
            (SplitName::Test, (c2 + gap).min(n), n),
        ];
        for (name, lo, hi) in ranges {
            if hi <= lo {
                continue;
            }
            let segment = if lo == 0 && hi == n {
                d.clone()
            } else {
                SequenceDataset {
                    source_id: format!("{}#{}", d.source_id, name.as_str()),
                    frames: d.frames[lo..hi].to_vec(),
                }
            };
            if segment.len() < min_len {
                log::warn!(
                    "{} segment of `{}` has {} frames (< {min_len}); it contributes no windows",
                    name.as_str(),
                    d.source_id,
                    segment.len()
                );
            }
            match name {
                SplitName::Train => out.train.push(segment),
                SplitName::Val => out.val.push(segment),
                SplitName::Test => out.test.push(segment),
            }
        }
    }
    Ok(out)
}
