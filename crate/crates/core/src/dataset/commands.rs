use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{outputs, ClockRecord, RasterKind, Session};
use crate::exec::Execution;
use crate::geometry::{
    fundamental_from_poses, score_proposals, select_contacted_object, CameraModel, HandObservation, PseudolabelResult,
    SelectionStatus, Vec3,
};
use crate::io::formats::{self, LedgerRow};
use crate::io::raster::Raster;
use crate::io::table::TextWriter;
use crate::labeling::{demote_short_runs, label_samples, segment_runs, ContactState};
use crate::signal::{run_conditioning, CHANNELS, CHANNEL_NAMES};
use crate::sync::{fit_clock_from_events, fit_clock_xcorr, resample_states, ClockModel};
use crate::{Config, Error, Hand, Result};

/// Rejects an intermediate file produced under a different configuration.
fn check_fingerprint(path: &Path, found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::Config(format!(
            "{}: produced with config fingerprint {found}, current config is {expected}; rerun the upstream command",
            path.display()
        )));
    }
    Ok(())
}

fn manifest_entry(session: &Session, path: &Path) -> String {
    path.strip_prefix(&session.dir).unwrap_or(path).to_string_lossy().into_owned()
}

fn sensor_hands(session: &Session) -> Result<Vec<Hand>> {
    let hands: Vec<Hand> = session.sensors()?.into_iter().map(|(h, _)| h).collect();
    if hands.is_empty() {
        return Err(Error::Schema(format!("{}: manifest lists no sensor logs", session.manifest_path().display())));
    }
    Ok(hands)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterSummary {
    pub hand: Hand,
    pub samples: usize,
    pub excluded: usize,
    pub dead_channels: Vec<usize>,
    pub quiet: bool,
}

/// Conditions every sensor log of the session.
pub fn filter(session: &mut Session, cfg: &Config, exec: Execution) -> Result<Vec<FilterSummary>> {
    let fp = cfg.fingerprint();
    let params = cfg.conditioning();
    let mut out = Vec::new();
    for (hand, path) in session.sensors()? {
        let raw = formats::read_sensor_log(&path, cfg.nominal_rate_hz)?;
        if raw.hand != hand {
            return Err(Error::Schema(format!(
                "{}: log is for the {} hand, manifest says {hand}",
                path.display(),
                raw.hand
            )));
        }
        let c = run_conditioning(&raw, &params, exec)?;
        formats::write_consolidated(&session.output(&outputs::consolidated(hand)), hand, &c.signal, &fp)?;
        formats::write_diagnostics(&session.output(&outputs::diagnostics(hand)), hand, &c, &fp)?;
        out.push(FilterSummary {
            hand,
            samples: c.signal.len(),
            excluded: c.signal.excluded.iter().filter(|e| **e).count(),
            dead_channels: (0..CHANNELS).filter(|k| c.mask.dead[*k]).collect(),
            quiet: c.quiet,
        });
    }
    if out.is_empty() {
        return Err(Error::Schema(format!("{}: manifest lists no sensor logs", session.manifest_path().display())));
    }
    session.stamp(&fp);
    session.save()?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelSummary {
    pub hand: Hand,
    pub counts: BTreeMap<&'static str, usize>,
    pub segments: usize,
}

fn count_states(states: &[ContactState]) -> BTreeMap<&'static str, usize> {
    let mut m = BTreeMap::new();
    for s in states {
        *m.entry(s.token()).or_insert(0) += 1;
    }
    m
}

/// Dual-threshold states and segments from the consolidated signals.
pub fn label(session: &mut Session, cfg: &Config) -> Result<Vec<LabelSummary>> {
    let fp = cfg.fingerprint();
    let th = cfg.thresholds();
    let mut out = Vec::new();
    for hand in sensor_hands(session)? {
        let path = session.output(&outputs::consolidated(hand));
        let (_, sig, found) = formats::read_consolidated(&path)?;
        check_fingerprint(&path, &found, &fp)?;
        let raw = label_samples(&sig, &th)?;
        let states = demote_short_runs(&raw, &sig.t_device, th.min_segment)?;
        let segs = segment_runs(&raw, &sig.t_device, th.min_segment)?;
        formats::write_states(&session.output(&outputs::states(hand)), hand, &sig.t_device, &states, &fp)?;
        formats::write_segments(&session.output(&outputs::segments(hand)), hand, &segs, "device", &fp)?;
        out.push(LabelSummary { hand, counts: count_states(&states), segments: segs.len() });
    }
    session.stamp(&fp);
    session.save()?;
    Ok(out)
}

fn store_clock(session: &mut Session, cfg: &Config, model: &ClockModel) -> Result<()> {
    session.manifest.clock = Some(ClockRecord::from(model));
    session.stamp(&cfg.fingerprint());
    session.save()
}

/// Fits the clock from matched event pairs (the given file, else the manifest's).
pub fn sync_events(session: &mut Session, cfg: &Config, events: Option<&Path>) -> Result<ClockModel> {
    let path = match events {
        Some(p) => p.to_path_buf(),
        None => session.require(&session.manifest.events, "events file")?,
    };
    let (d, v) = formats::read_events(&path)?;
    let model = fit_clock_from_events(&d, &v, cfg.sync_residual_max_s)?;
    session.manifest.events = Some(manifest_entry(session, &path));
    store_clock(session, cfg, &model)?;
    Ok(model)
}

/// Fits the clock by cross-correlating one hand's consolidated force with a
/// per-frame proxy stored as a `n_frames x 1` single-channel f32 raster.
pub fn sync_xcorr(
    session: &mut Session,
    cfg: &Config,
    proxy: &Path,
    hand: Option<Hand>,
    exec: Execution,
) -> Result<ClockModel> {
    let hand = match hand {
        Some(h) => h,
        None => sensor_hands(session)?[0],
    };
    let timeline = session.timeline()?;
    let values = Raster::read(proxy)?.into_values()?;
    if values.len() != timeline.len() {
        return Err(Error::Schema(format!(
            "{}: proxy has {} values but the timeline has {} frames",
            proxy.display(),
            values.len(),
            timeline.len()
        )));
    }
    let path = session.output(&outputs::consolidated(hand));
    let (_, sig, found) = formats::read_consolidated(&path)?;
    check_fingerprint(&path, &found, &cfg.fingerprint())?;
    let proxy: Vec<f64> = values.iter().map(|v| f64::from(*v)).collect();
    let model = fit_clock_xcorr(&sig, &timeline.t_video, &proxy, &cfg.xcorr(), exec)?;
    store_clock(session, cfg, &model)?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramesSummary {
    pub hand: Hand,
    pub counts: BTreeMap<&'static str, usize>,
    pub frames: usize,
}

/// Resamples per-sample states onto the video timeline. Without a clock in
/// the manifest the clock is fitted from the events file first.
pub fn frames(session: &mut Session, cfg: &Config) -> Result<Vec<FramesSummary>> {
    let fp = cfg.fingerprint();
    let clock = match session.clock()? {
        Some(c) => c,
        None if session.manifest.events.is_some() => sync_events(session, cfg, None)?,
        None => {
            return Err(Error::CalibrationFailed(format!(
                "{}: no clock model and no events file; run sync first",
                session.manifest_path().display()
            )))
        }
    };
    let timeline = session.timeline()?;
    let mut out = Vec::new();
    for hand in sensor_hands(session)? {
        let path = session.output(&outputs::states(hand));
        let (t, states, found) = formats::read_states(&path)?;
        check_fingerprint(&path, &found, &fp)?;
        let per_frame = resample_states(&states, &t, &clock, &timeline)?;
        formats::write_frame_states(&session.output(&outputs::frames(hand)), hand, &timeline, &per_frame, &fp)?;
        out.push(FramesSummary { hand, counts: count_states(&per_frame), frames: per_frame.len() });
    }
    session.stamp(&fp);
    session.save()?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PseudolabelOptions {
    /// Treat every hand listed in the hand file as in contact on every frame.
    pub ignore_contact: bool,
    /// Frames whose rasters are held in memory at once.
    pub batch_frames: usize,
}

impl Default for PseudolabelOptions {
    fn default() -> Self {
        Self { ignore_contact: false, batch_frames: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PseudolabelSummary {
    pub frames: usize,
    /// (frame, hand) pairs in contact.
    pub contact_pairs: usize,
    pub accepted: usize,
    pub by_status: BTreeMap<&'static str, usize>,
}

struct FrameOutcome {
    /// (mask id, concept, mean, pixels) for every proposal scored on this frame.
    scores: Vec<(String, String, Option<f64>, usize)>,
    results: Vec<(Hand, PseudolabelResult)>,
    /// Accepted masks to write: (hand, width, height, pixels).
    masks: Vec<(Hand, usize, usize, Vec<bool>)>,
    degenerate: Option<f64>,
}

struct FrameInputs<'a> {
    session: &'a Session,
    cfg: &'a Config,
    cams: &'a [CameraModel],
    hands: &'a BTreeMap<(usize, Hand), HandObservation>,
    proposals: &'a BTreeMap<usize, Vec<(String, String)>>,
}

fn not_visible(hand: Hand) -> HandObservation {
    HandObservation { hand, centroid: Vec3::repeat(f64::NAN), visible: false }
}

fn process_frame(inp: &FrameInputs, f: usize, in_contact: &[Hand], exec: Execution) -> Result<FrameOutcome> {
    let gate = inp.cfg.gate();
    let mut out = FrameOutcome { scores: vec![], results: vec![], masks: vec![], degenerate: None };
    let all = |status| in_contact.iter().map(|h| (*h, PseudolabelResult::empty(status, vec![], gate))).collect();
    if f + 1 >= inp.cams.len() {
        out.results = all(SelectionStatus::NoNextFrame);
        return Ok(out);
    }
    let fmat = match fundamental_from_poses(&inp.cams[f], &inp.cams[f + 1], inp.cfg.t_min_m) {
        Ok(m) => m,
        Err(Error::DegenerateMotion { translation }) => {
            out.degenerate = Some(translation);
            out.results = all(SelectionStatus::DegenerateMotion);
            return Ok(out);
        }
        Err(e) => return Err(e),
    };
    let labels = inp.proposals.get(&f).map(Vec::as_slice).unwrap_or(&[]);
    if labels.is_empty() {
        out.results = all(SelectionStatus::NoProposals);
        return Ok(out);
    }
    let masks = Raster::read(&inp.session.raster_path(RasterKind::Masks, f)?)?.into_masks(labels)?;
    let flow = Raster::read(&inp.session.raster_path(RasterKind::Flow, f)?)?.into_flow()?;
    let depth = Raster::read(&inp.session.raster_path(RasterKind::Depth, f)?)?.into_depth()?;
    if depth.width != flow.width || depth.height != flow.height {
        return Err(Error::Structural(format!("frame {f}: depth and flow rasters differ in size")));
    }
    let scores = score_proposals(&fmat, &flow, &masks, inp.cfg.stride, inp.cfg.min_mask_pixels, exec)?;
    out.scores = scores
        .iter()
        .zip(&masks)
        .map(|(s, m)| (s.id.clone(), m.concept.clone(), s.score.map(|v| v.mean), s.score.map_or(0, |v| v.n_pixels)))
        .collect();
    for &hand in in_contact {
        let obs = inp.hands.get(&(f, hand)).copied().unwrap_or_else(|| not_visible(hand));
        let r = select_contacted_object(&masks, scores.clone(), &obs, &depth, &inp.cams[f], &gate)?;
        if let Some(id) = &r.selected {
            let m = masks.iter().find(|m| &m.id == id).expect("selected mask is a proposal");
            out.masks.push((hand, m.width, m.height, m.pixels.clone()));
        }
        out.results.push((hand, r));
    }
    Ok(out)
}

/// Per-frame contacted-object selection for every (frame, hand) in contact.
///
/// Rasters are only read for frames where some hand is in contact, in
/// batches of `batch_frames`. Frames without usable camera motion get the
/// `degenerate_motion` status; the command fails only when every candidate
/// frame is degenerate.
pub fn pseudolabel(
    session: &mut Session,
    cfg: &Config,
    opts: PseudolabelOptions,
    exec: Execution,
) -> Result<PseudolabelSummary> {
    let fp = cfg.fingerprint();
    let cams = formats::read_poses(&session.require(&session.manifest.poses, "poses file")?)?;
    let n = cams.len();
    let hand_rows = formats::read_hands(&session.require(&session.manifest.hands, "hand file")?)?;
    let proposals = match &session.manifest.proposals {
        Some(p) => formats::read_proposals(&session.path(p))?,
        None => BTreeMap::new(),
    };
    let mut hands: BTreeMap<(usize, Hand), HandObservation> = BTreeMap::new();
    for (f, obs) in hand_rows {
        if f >= n {
            return Err(Error::Schema(format!("hand observation for frame {f} beyond {n} posed frames")));
        }
        hands.insert((f, obs.hand), obs);
    }

    let mut contact: BTreeMap<Hand, Vec<bool>> = BTreeMap::new();
    if opts.ignore_contact {
        for (_, h) in hands.keys() {
            contact.insert(*h, vec![true; n]);
        }
    } else {
        for (hand, _) in session.sensors()? {
            let path = session.output(&outputs::frames(hand));
            let fs = formats::read_frame_states(&path)?;
            check_fingerprint(&path, &fs.fingerprint, &fp)?;
            if fs.states.len() != n {
                return Err(Error::Schema(format!(
                    "{}: {} frame states but {n} posed frames",
                    path.display(),
                    fs.states.len()
                )));
            }
            contact.insert(hand, fs.states.iter().map(|s| *s == ContactState::Contact).collect());
        }
        if contact.is_empty() {
            return Err(Error::Schema("no per-frame contact states; run frames or pass --ignore-contact".into()));
        }
    }

    let mask_dir = session.output_dir().join("pseudolabels");
    if mask_dir.is_dir() {
        // stale masks from an earlier run would survive otherwise
        for entry in std::fs::read_dir(&mask_dir).map_err(|e| Error::io(&mask_dir, e))? {
            let p = entry.map_err(|e| Error::io(&mask_dir, e))?.path();
            if p.extension().is_some_and(|x| x == "fras") {
                std::fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
            }
        }
    }

    let inputs = FrameInputs { session, cfg, cams: &cams, hands: &hands, proposals: &proposals };
    let all_hands: Vec<Hand> = contact.keys().copied().collect();
    let mut ledger: Vec<LedgerRow> = Vec::new();
    let mut scores = TextWriter::new("pseudolabel-scores", &[("fingerprint", fp.clone())]);
    scores.comment("columns: frame, mask_id, concept, mean_sampson|NA, n_pixels");
    let mut summary = PseudolabelSummary { frames: n, ..Default::default() };
    let (mut candidates, mut degenerate, mut largest_t) = (0usize, 0usize, 0.0f64);
    let batch = opts.batch_frames.max(1);
    let mut start = 0;
    while start < n {
        let end = (start + batch).min(n);
        let work: Vec<(usize, Vec<Hand>)> = (start..end)
            .map(|f| (f, all_hands.iter().copied().filter(|h| contact[h][f]).collect::<Vec<_>>()))
            .filter(|(_, hs)| !hs.is_empty())
            .collect();
        let results = exec.map_slice(&work, |(f, hs)| process_frame(&inputs, *f, hs, exec));
        let mut by_frame: BTreeMap<usize, FrameOutcome> = BTreeMap::new();
        for ((f, _), r) in work.iter().zip(results) {
            by_frame.insert(*f, r?);
        }
        for f in start..end {
            let outcome = by_frame.remove(&f);
            if let Some(o) = &outcome {
                if f + 1 < n {
                    candidates += 1;
                }
                if let Some(t) = o.degenerate {
                    degenerate += 1;
                    largest_t = largest_t.max(t);
                }
                for (id, concept, mean, px) in &o.scores {
                    let mean = mean.map_or_else(|| "NA".to_string(), |m| m.to_string());
                    scores.row([f.to_string(), id.clone(), concept.clone(), mean, px.to_string()]);
                }
                for (hand, w, h, px) in &o.masks {
                    let bytes = px.iter().map(|b| if *b { 255 } else { 0 }).collect();
                    Raster::u8(*w, *h, 1, bytes)?.write(&session.output(&outputs::pseudolabel_mask(f, *hand)))?;
                }
            }
            for &hand in &all_hands {
                let result = outcome
                    .as_ref()
                    .and_then(|o| o.results.iter().find(|(h, _)| *h == hand))
                    .map(|(_, r)| r.clone())
                    .unwrap_or_else(|| PseudolabelResult::empty(SelectionStatus::NotInContact, vec![], cfg.gate()));
                if result.status != SelectionStatus::NotInContact {
                    summary.contact_pairs += 1;
                }
                if result.status == SelectionStatus::Accepted {
                    summary.accepted += 1;
                }
                *summary.by_status.entry(result.status.as_str()).or_insert(0) += 1;
                ledger.push(LedgerRow { frame: f, hand, result });
            }
        }
        start = end;
    }
    if candidates > 0 && degenerate == candidates {
        return Err(Error::DegenerateMotion { translation: largest_t });
    }
    formats::write_pseudolabel_ledger(&session.output(outputs::LEDGER), &ledger, &fp)?;
    scores.write(&session.output(outputs::SCORES))?;
    session.stamp(&fp);
    session.save()?;
    Ok(summary)
}

/// Per-sample traces for plotting: raw channels, consolidated force with the
/// two thresholds in the header, exclusion flag and contact state.
pub fn plotdata(session: &mut Session, cfg: &Config, exec: Execution) -> Result<Vec<PathBuf>> {
    let fp = cfg.fingerprint();
    let th = cfg.thresholds();
    sensor_hands(session)?;
    let mut written = Vec::new();
    for (hand, path) in session.sensors()? {
        let raw = formats::read_sensor_log(&path, cfg.nominal_rate_hz)?;
        let c = run_conditioning(&raw, &cfg.conditioning(), exec)?;
        let states = demote_short_runs(&label_samples(&c.signal, &th)?, &c.signal.t_device, th.min_segment)?;
        let mut w = TextWriter::new(
            "plot-traces",
            &[
                ("hand", hand.to_string()),
                ("fingerprint", fp.clone()),
                ("c_threshold", th.c_threshold.to_string()),
                ("nc_threshold", th.nc_threshold.to_string()),
                ("adc_max", raw.adc_max.to_string()),
            ],
        );
        w.comment(&format!(
            "columns: t_device, {}, consolidated, excluded, state",
            CHANNEL_NAMES.map(|n| format!("raw_{n}")).join(", ")
        ));
        for (i, s) in raw.samples.iter().enumerate() {
            let mut row: Vec<String> = vec![s.t_device.to_string()];
            row.extend(s.channels.iter().map(|v| v.to_string()));
            row.push(c.signal.value[i].to_string());
            row.push(u8::from(c.signal.excluded[i]).to_string());
            row.push(states[i].token().to_string());
            w.row(row);
        }
        let out = session.output(&outputs::plot(hand));
        w.write(&out)?;
        written.push(out);
    }
    session.stamp(&fp);
    session.save()?;
    Ok(written)
}
