//! Frame ingestion, normalization, windowing, splitting and synthetic data.

mod frames;
mod norm;
mod split;
mod synth;
mod window;

pub use frames::{load_frames, save_frames, FrameRecord, SequenceDataset};
pub use norm::{
    apply_norm, compute_norm_stats, compute_norm_stats_with_floor, invert_norm, NormStats, DEFAULT_STD_FLOOR,
};
pub use split::{split_dataset, SplitName, SplitRatios, Splits};
pub use synth::{synth_generate, synth_generate_with, SynthConfig, SynthMode};
pub use window::{make_windows, make_windows_all, window_count, WindowConfig, WindowSample};
