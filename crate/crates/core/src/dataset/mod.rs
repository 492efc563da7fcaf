//! Session manifests and the session-level commands behind the CLI.
//!
//! A session is a directory holding `manifest.toml` plus the files it names.
//! Paths in the manifest are relative to the session directory. Every command
//! writes under the manifest's `output_dir` (default `out/`).

mod commands;
mod fixtures;
mod stats;
mod validate;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use commands::{
    filter, frames, label, plotdata, pseudolabel, sync_events, sync_xcorr, FilterSummary, FramesSummary, LabelSummary,
    PseudolabelOptions, PseudolabelSummary,
};
pub use fixtures::{read_truth_objects, synth_scene, synth_session, SceneFixture, SessionFixture, TRUTH_FINGERPRINT};
pub use stats::{stats, CorpusStats, HandStats};
pub use validate::{validate, ValidationReport};

use crate::io::formats;
use crate::sync::{ClockMethod, ClockModel, FrameTimeline};
use crate::{Error, Hand, Result};

pub const MANIFEST_NAME: &str = "manifest.toml";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Clock model as stored in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockRecord {
    pub offset: f64,
    pub drift: f64,
    pub fit_residual_rms: f64,
    pub method: String,
    pub quality: f64,
}

impl From<&ClockModel> for ClockRecord {
    fn from(m: &ClockModel) -> Self {
        Self {
            offset: m.offset,
            drift: m.drift,
            fit_residual_rms: m.fit_residual_rms,
            method: m.method.to_string(),
            quality: m.quality,
        }
    }
}

impl ClockRecord {
    pub fn model(&self) -> Result<ClockModel> {
        let method: ClockMethod = self.method.parse()?;
        let m = ClockModel {
            offset: self.offset,
            drift: self.drift,
            fit_residual_rms: self.fit_residual_rms,
            method,
            quality: self.quality,
        };
        m.validate()?;
        Ok(m)
    }
}

fn default_output_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub session: String,
    #[serde(default)]
    pub tool_version: Option<String>,
    /// Fingerprint of the config used by the most recent command.
    #[serde(default)]
    pub config_fingerprint: Option<String>,
    #[serde(default)]
    pub timeline: Option<String>,
    #[serde(default)]
    pub events: Option<String>,
    #[serde(default)]
    pub poses: Option<String>,
    #[serde(default)]
    pub hands: Option<String>,
    #[serde(default)]
    pub proposals: Option<String>,
    #[serde(default)]
    pub flow_dir: Option<String>,
    #[serde(default)]
    pub depth_dir: Option<String>,
    #[serde(default)]
    pub mask_dir: Option<String>,
    #[serde(default)]
    pub truth_dir: Option<String>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    /// Sensor log per hand, keyed `left` / `right`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sensors: BTreeMap<String, String>,
    #[serde(default)]
    pub clock: Option<ClockRecord>,
}

impl Manifest {
    pub fn new(session: impl Into<String>) -> Self {
        Self {
            session: session.into(),
            tool_version: Some(TOOL_VERSION.into()),
            config_fingerprint: None,
            timeline: None,
            events: None,
            poses: None,
            hands: None,
            proposals: None,
            flow_dir: None,
            depth_dir: None,
            mask_dir: None,
            truth_dir: None,
            output_dir: default_output_dir(),
            sensors: BTreeMap::new(),
            clock: None,
        }
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| Error::Schema(format!("{}: {e}", origin.display())))?;
        for key in m.sensors.keys() {
            key.parse::<Hand>()
                .map_err(|_| Error::Schema(format!("{}: unknown sensor hand '{key}'", origin.display())))?;
        }
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }
}

/// Kinds of per-frame rasters, named `<dir>/<frame:08d>.fras`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterKind {
    Flow,
    Depth,
    Masks,
}

impl RasterKind {
    pub fn default_dir(self) -> &'static str {
        match self {
            RasterKind::Flow => "flow",
            RasterKind::Depth => "depth",
            RasterKind::Masks => "masks",
        }
    }
}

pub fn raster_name(frame: usize) -> String {
    format!("{frame:08}.fras")
}

/// An opened session directory.
#[derive(Debug, Clone)]
pub struct Session {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl Session {
    /// Opens a session from its directory or its manifest file.
    pub fn open(path: &Path) -> Result<Self> {
        let (dir, manifest_path) = if path.is_dir() {
            (path.to_path_buf(), path.join(MANIFEST_NAME))
        } else {
            (path.parent().map(Path::to_path_buf).unwrap_or_default(), path.to_path_buf())
        };
        let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest = Manifest::from_toml_str(&text, &manifest_path)?;
        Ok(Self { dir, manifest })
    }

    /// Opens the session in `dir`, or starts a new manifest there.
    pub fn open_or_create(dir: &Path) -> Result<Self> {
        if dir.join(MANIFEST_NAME).is_file() {
            return Self::open(dir);
        }
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let name = dir
            .canonicalize()
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "session".into());
        Ok(Self { dir: dir.to_path_buf(), manifest: Manifest::new(name) })
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.dir.join(MANIFEST_NAME)
    }

    pub fn save(&self) -> Result<()> {
        crate::io::write_atomic(&self.manifest_path(), self.manifest.to_toml().as_bytes())
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.dir.join(&self.manifest.output_dir)
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.output_dir().join(name)
    }

    fn require(&self, field: &Option<String>, what: &str) -> Result<PathBuf> {
        field
            .as_deref()
            .map(|p| self.path(p))
            .ok_or_else(|| Error::Schema(format!("{}: manifest lists no {what}", self.manifest_path().display())))
    }

    /// Sensor logs in hand order.
    pub fn sensors(&self) -> Result<Vec<(Hand, PathBuf)>> {
        let mut out: Vec<(Hand, PathBuf)> =
            self.manifest.sensors.iter().map(|(k, v)| Ok((k.parse()?, self.path(v)))).collect::<Result<_>>()?;
        out.sort_by_key(|(h, _)| *h);
        Ok(out)
    }

    pub fn timeline(&self) -> Result<FrameTimeline> {
        formats::read_timeline(&self.require(&self.manifest.timeline, "timeline")?)
    }

    pub fn raster_dir(&self, kind: RasterKind) -> Option<PathBuf> {
        let field = match kind {
            RasterKind::Flow => &self.manifest.flow_dir,
            RasterKind::Depth => &self.manifest.depth_dir,
            RasterKind::Masks => &self.manifest.mask_dir,
        };
        field.as_deref().map(|d| self.path(d))
    }

    pub fn raster_path(&self, kind: RasterKind, frame: usize) -> Result<PathBuf> {
        let dir = self.raster_dir(kind).ok_or_else(|| {
            Error::Schema(format!(
                "{}: manifest lists no {} directory",
                self.manifest_path().display(),
                kind.default_dir()
            ))
        })?;
        Ok(dir.join(raster_name(frame)))
    }

    pub fn clock(&self) -> Result<Option<ClockModel>> {
        self.manifest.clock.as_ref().map(ClockRecord::model).transpose()
    }

    fn stamp(&mut self, fingerprint: &str) {
        self.manifest.config_fingerprint = Some(fingerprint.to_string());
        self.manifest.tool_version = Some(TOOL_VERSION.into());
    }
}

/// Output file names.
pub mod outputs {
    use crate::Hand;

    pub fn consolidated(h: Hand) -> String {
        format!("consolidated_{h}.txt")
    }
    pub fn diagnostics(h: Hand) -> String {
        format!("diagnostics_{h}.txt")
    }
    pub fn states(h: Hand) -> String {
        format!("states_{h}.txt")
    }
    pub fn segments(h: Hand) -> String {
        format!("segments_{h}.txt")
    }
    pub fn frames(h: Hand) -> String {
        format!("frames_{h}.txt")
    }
    pub fn plot(h: Hand) -> String {
        format!("plot_{h}.txt")
    }
    pub fn pseudolabel_mask(frame: usize, h: Hand) -> String {
        format!("pseudolabels/{frame:08}_{h}.fras")
    }
    pub const LEDGER: &str = "pseudolabel_ledger.txt";
    pub const SCORES: &str = "pseudolabel_scores.txt";

    /// Truth files written by the generators, relative to the truth directory.
    pub fn truth_segments(h: Hand) -> String {
        format!("segments_{h}.txt")
    }
    pub fn truth_frames(h: Hand) -> String {
        format!("frames_{h}.txt")
    }
    pub fn truth_objects(h: Hand) -> String {
        format!("objects_{h}.txt")
    }
}

/// Session directories under `path`: the path itself when it holds a
/// manifest (or is one), otherwise every immediate subdirectory with a
/// manifest, sorted by name.
pub fn discover_sessions(path: &Path) -> Result<Vec<Session>> {
    if path.is_file() || path.join(MANIFEST_NAME).is_file() {
        return Ok(vec![Session::open(path)?]);
    }
    let entries = std::fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    let mut dirs: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| Error::io(path, e))?.path();
        if p.join(MANIFEST_NAME).is_file() {
            dirs.push(p);
        }
    }
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::Schema(format!("{}: no session manifests found", path.display())));
    }
    dirs.iter().map(|d| Session::open(d)).collect()
}
