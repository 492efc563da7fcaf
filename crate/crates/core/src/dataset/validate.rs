use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::fixtures::TRUTH_FINGERPRINT;
use super::{discover_sessions, outputs, RasterKind, Session};
use crate::io::formats;
use crate::io::raster::RasterHeader;
use crate::io::table::TextTable;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub sessions: usize,
    pub files_checked: usize,
    pub rasters_checked: usize,
    /// Config fingerprint shared by every output, if any output exists.
    pub fingerprint: Option<String>,
}

fn exists(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "referenced file is missing")))
    }
}

fn schema(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::Schema(format!("{}: {msg}", path.display()))
}

fn probe(path: &Path, channels: Option<usize>, is_f32: bool, dims: &mut Option<(usize, usize)>) -> Result<()> {
    exists(path)?;
    let h = RasterHeader::probe(path)?;
    if h.is_f32 != is_f32 {
        return Err(schema(path, format!("expected {} raster", if is_f32 { "f32" } else { "u8" })));
    }
    if let Some(c) = channels {
        if h.channels != c {
            return Err(schema(path, format!("expected {c} channels, found {}", h.channels)));
        }
    }
    match dims {
        Some(d) if *d != (h.width, h.height) => {
            Err(schema(path, format!("raster is {}x{}, session rasters are {}x{}", h.width, h.height, d.0, d.1)))
        }
        _ => {
            *dims = Some((h.width, h.height));
            Ok(())
        }
    }
}

struct Audit<'a> {
    report: &'a mut ValidationReport,
    fingerprints: &'a mut BTreeMap<String, PathBuf>,
}

impl Audit<'_> {
    fn fingerprint(&mut self, fp: String, path: &Path) {
        if fp != TRUTH_FINGERPRINT {
            self.fingerprints.entry(fp).or_insert_with(|| path.to_path_buf());
        }
    }

    fn session(&mut self, s: &Session) -> Result<()> {
        let m = &s.manifest;
        let mut n_frames: Option<usize> = None;
        for (_, path) in s.sensors()? {
            formats::read_sensor_log(&path, 100.0)?;
            self.report.files_checked += 1;
        }
        if let Some(rel) = &m.timeline {
            n_frames = Some(formats::read_timeline(&s.path(rel))?.len());
            self.report.files_checked += 1;
        }
        if let Some(rel) = &m.events {
            formats::read_events(&s.path(rel))?;
            self.report.files_checked += 1;
        }
        if let Some(c) = &m.clock {
            c.model().map_err(|e| schema(&s.manifest_path(), e))?;
        }

        let mut n_posed = None;
        if let Some(rel) = &m.poses {
            let path = s.path(rel);
            let n = formats::read_poses(&path)?.len();
            if let Some(nt) = n_frames.filter(|nt| *nt != n) {
                return Err(schema(&path, format!("{n} poses but the timeline has {nt} frames")));
            }
            n_posed = Some(n);
            self.report.files_checked += 1;
        }
        if let Some(rel) = &m.hands {
            let path = s.path(rel);
            for (f, _) in formats::read_hands(&path)? {
                if n_posed.is_some_and(|n| f >= n) {
                    return Err(schema(&path, format!("hand observation for frame {f} beyond the posed frames")));
                }
            }
            self.report.files_checked += 1;
        }
        let proposals = match &m.proposals {
            Some(rel) => {
                self.report.files_checked += 1;
                formats::read_proposals(&s.path(rel))?
            }
            None => BTreeMap::new(),
        };

        // rasters: flow for every frame but the last, depth for every frame,
        // masks for every frame with listed proposals
        let mut dims = None;
        let n = n_posed.or(n_frames).unwrap_or(0);
        if s.raster_dir(RasterKind::Flow).is_some() {
            for f in 0..n.saturating_sub(1) {
                probe(&s.raster_path(RasterKind::Flow, f)?, Some(2), true, &mut dims)?;
                self.report.rasters_checked += 1;
            }
        }
        if s.raster_dir(RasterKind::Depth).is_some() {
            for f in 0..n {
                probe(&s.raster_path(RasterKind::Depth, f)?, Some(1), true, &mut dims)?;
                self.report.rasters_checked += 1;
            }
        }
        if !proposals.is_empty() {
            for (f, labels) in &proposals {
                if *f >= n {
                    return Err(schema(&s.path(m.proposals.as_deref().unwrap_or("")), format!("frame {f} beyond {n}")));
                }
                probe(&s.raster_path(RasterKind::Masks, *f)?, Some(labels.len()), false, &mut dims)?;
                self.report.rasters_checked += 1;
            }
        }

        if let Some(truth) = &m.truth_dir {
            let dir = s.path(truth);
            if dir.is_dir() {
                self.text_dir(&dir, None)?;
            }
        }
        let out = s.output_dir();
        if out.is_dir() {
            self.text_dir(&out, n_frames)?;
            let masks = out.join("pseudolabels");
            if masks.is_dir() {
                for p in sorted_entries(&masks)? {
                    probe(&p, Some(1), false, &mut dims)?;
                    self.report.rasters_checked += 1;
                }
            }
            let ledger = out.join(outputs::LEDGER);
            if ledger.is_file() {
                let (rows, _) = formats::read_pseudolabel_ledger(&ledger)?;
                for r in rows.iter().filter(|r| r.mask_id.is_some()) {
                    exists(&out.join(outputs::pseudolabel_mask(r.frame, r.hand)))?;
                }
            }
        }
        if let Some(fp) = &m.config_fingerprint {
            self.fingerprint(fp.clone(), &s.manifest_path());
        }
        Ok(())
    }

    /// Parses every text file in `dir`, collecting fingerprints and checking
    /// frame-state files against the timeline length.
    fn text_dir(&mut self, dir: &Path, n_frames: Option<usize>) -> Result<()> {
        for p in sorted_entries(dir)? {
            if p.extension().is_none_or(|x| x != "txt") {
                continue;
            }
            let t = TextTable::read(&p)?;
            match t.meta.get("format").map(String::as_str) {
                Some("frame-states") => {
                    let fs = formats::read_frame_states(&p)?;
                    if let Some(n) = n_frames.filter(|n| *n != fs.states.len()) {
                        return Err(schema(
                            &p,
                            format!("{} frame states but the timeline has {n} frames", fs.states.len()),
                        ));
                    }
                }
                Some("consolidated") => drop(formats::read_consolidated(&p)?),
                Some("sample-states") => drop(formats::read_states(&p)?),
                Some("segments") => drop(formats::read_segments(&p)?),
                Some("pseudolabel-ledger") => drop(formats::read_pseudolabel_ledger(&p)?),
                _ => {}
            }
            if let Some(fp) = t.meta.get("fingerprint") {
                self.fingerprint(fp.clone(), &p);
            }
            self.report.files_checked += 1;
        }
        Ok(())
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v = Vec::new();
    for e in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = e.map_err(|e| Error::io(dir, e))?.path();
        if p.is_file() && !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')) {
            v.push(p);
        }
    }
    v.sort();
    Ok(v)
}

/// Audits one session (directory or manifest) or every session below a
/// corpus directory: referenced files exist and parse, raster headers and
/// sizes agree, frame counts are consistent, and every output carries the
/// same config fingerprint.
pub fn validate(path: &Path) -> Result<ValidationReport> {
    let sessions = discover_sessions(path)?;
    let mut report = ValidationReport { sessions: sessions.len(), ..Default::default() };
    let mut fingerprints = BTreeMap::new();
    {
        let mut audit = Audit { report: &mut report, fingerprints: &mut fingerprints };
        for s in &sessions {
            audit.session(s)?;
        }
    }
    if fingerprints.len() > 1 {
        let listing: Vec<String> = fingerprints.iter().map(|(fp, p)| format!("{fp} ({})", p.display())).collect();
        return Err(Error::Schema(format!("mixed config fingerprints: {}", listing.join(", "))));
    }
    report.fingerprint = fingerprints.into_keys().next();
    Ok(report)
}
