//! MUSDB-style dataset scanning, the vocal-silence track filter and
//! accompaniment construction.
//!
//! A track is a directory holding `mixture.wav`, `vocals.wav`, `bass.wav`,
//! `drums.wav` and `other.wav` at a common rate and length. The
//! accompaniment reference is the linear sum of bass, drums and other.

use std::path::{Path, PathBuf};

use devox_core::{mix_linear, AudioClip};

use crate::error::{Error, Result};
use crate::wav;

pub const MIXTURE_STEM: &str = "mixture";
pub const VOCAL_STEM: &str = "vocals";
pub const ACCOMPANIMENT_STEMS: [&str; 3] = ["bass", "drums", "other"];
pub const ALL_STEMS: [&str; 5] = ["mixture", "vocals", "bass", "drums", "other"];

/// One dataset track and the header facts gathered at scan time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackEntry {
    pub id: String,
    pub dir: PathBuf,
    pub sample_rate: u32,
    pub frames: u64,
}

impl TrackEntry {
    pub fn stem_path(&self, stem: &str) -> PathBuf {
        self.dir.join(format!("{stem}.wav"))
    }

    pub fn duration_seconds(&self) -> f64 {
        self.frames as f64 / self.sample_rate as f64
    }

    pub fn load_stem(&self, stem: &str) -> Result<AudioClip> {
        let path = self.stem_path(stem);
        if !path.exists() {
            return Err(Error::MissingStem { track: self.id.clone(), stem: stem.into() });
        }
        wav::read_wav(path)
    }
}

/// A track directory that could not be used, and why.
#[derive(Debug, Clone)]
pub struct SkippedTrack {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ScanOutcome {
    pub tracks: Vec<TrackEntry>,
    pub skipped: Vec<SkippedTrack>,
}

/// Scans a dataset root: every subdirectory with a readable, consistent
/// stem set becomes a track; the rest are reported, not fatal. Tracks come
/// back sorted by id.
pub fn scan_dataset(root: impl AsRef<Path>) -> Result<ScanOutcome> {
    let root = root.as_ref();
    let mut outcome = ScanOutcome::default();
    let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    for dir in dirs {
        let id = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        match inspect_track(&dir) {
            Ok((sample_rate, frames)) => outcome.tracks.push(TrackEntry {
                id,
                dir,
                sample_rate,
                frames,
            }),
            Err(err) => outcome.skipped.push(SkippedTrack { id, reason: err.to_string() }),
        }
    }
    outcome.tracks.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(outcome)
}

fn inspect_track(dir: &Path) -> Result<(u32, u64)> {
    let mut rate_frames: Option<(u32, u64)> = None;
    for stem in ALL_STEMS {
        let path = dir.join(format!("{stem}.wav"));
        if !path.exists() {
            return Err(Error::MissingStem {
                track: dir.display().to_string(),
                stem: stem.into(),
            });
        }
        let info = wav::read_info(&path)?;
        match rate_frames {
            None => rate_frames = Some((info.sample_rate, info.frames)),
            Some((rate, frames)) => {
                if info.sample_rate != rate || info.frames != frames {
                    return Err(Error::MalformedWav(format!(
                        "stem `{stem}` is {} frames at {} Hz, track is {frames} at {rate} Hz",
                        info.frames, info.sample_rate
                    )));
                }
            }
        }
    }
    Ok(rate_frames.expect("at least one stem"))
}

/// Silence definition for the vocal-activity filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SilenceParams {
    /// Analysis frame length in milliseconds.
    pub frame_ms: u32,
    /// Frames whose RMS falls below this dBFS level count as silent.
    pub threshold_db: f64,
}

impl Default for SilenceParams {
    fn default() -> Self {
        Self { frame_ms: 100, threshold_db: -60.0 }
    }
}

/// Fraction of analysis frames whose RMS (over all channels) falls below
/// the silence threshold. A trailing partial frame counts when it covers at
/// least half a frame.
pub fn silence_ratio(clip: &AudioClip, params: &SilenceParams) -> Result<f64> {
    if clip.frames() == 0 {
        return Err(devox_core::Error::EmptyInput.into());
    }
    let frame_len =
        ((params.frame_ms as u64 * clip.sample_rate() as u64) / 1000).max(1) as usize;
    let mut silent = 0usize;
    let mut total = 0usize;
    let mut start = 0usize;
    while start < clip.frames() {
        let end = (start + frame_len).min(clip.frames());
        let len = end - start;
        if len < frame_len && len * 2 < frame_len {
            break; // trailing fragment shorter than half a frame
        }
        let mut energy = 0.0f64;
        for c in 0..clip.channels() {
            for &v in &clip.channel(c)[start..end] {
                energy += v as f64 * v as f64;
            }
        }
        let mean_sq = energy / (clip.channels() * len) as f64;
        let is_silent = if mean_sq == 0.0 {
            true
        } else {
            10.0 * mean_sq.log10() < params.threshold_db
        };
        if is_silent {
            silent += 1;
        }
        total += 1;
        start += frame_len;
    }
    Ok(silent as f64 / total as f64)
}

#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub kept: Vec<TrackEntry>,
    /// Removed tracks with their measured silence ratio.
    pub removed: Vec<(TrackEntry, f64)>,
    /// Tracks whose vocal stem could not be read.
    pub failed: Vec<(TrackEntry, String)>,
    /// Ratios for the kept tracks, in order.
    pub kept_ratios: Vec<f64>,
}

/// Drops tracks whose vocal stem is silent for more than `max_silent` of
/// the song (strictly more; a ratio equal to the bound is kept).
pub fn filter_dataset(
    entries: &[TrackEntry],
    params: &SilenceParams,
    max_silent: f64,
) -> FilterOutcome {
    let mut outcome = FilterOutcome::default();
    for entry in entries {
        match entry.load_stem(VOCAL_STEM).and_then(|clip| silence_ratio(&clip, params)) {
            Ok(ratio) if ratio > max_silent => outcome.removed.push((entry.clone(), ratio)),
            Ok(ratio) => {
                outcome.kept.push(entry.clone());
                outcome.kept_ratios.push(ratio);
            }
            Err(err) => outcome.failed.push((entry.clone(), err.to_string())),
        }
    }
    outcome
}

/// Linear sum of the bass, drums and other stems.
pub fn build_accompaniment(entry: &TrackEntry) -> Result<AudioClip> {
    let clips = ACCOMPANIMENT_STEMS
        .iter()
        .map(|stem| entry.load_stem(stem))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&AudioClip> = clips.iter().collect();
    Ok(mix_linear(&refs)?)
}
