use std::path::Path;

use super::{outputs, RasterKind, Session};
use crate::exec::Execution;
use crate::io::formats;
use crate::io::raster::Raster;
use crate::io::table::TextWriter;
use crate::sync::FrameTimeline;
use crate::synth::{generate_session, Scene, SceneScript, SessionScript};
use crate::{Error, Hand, Result};

/// Fingerprint written into ground-truth files; they do not depend on a config.
pub const TRUTH_FINGERPRINT: &str = "truth";

const TIMELINE: &str = "timeline.txt";
const EVENTS: &str = "events.txt";
const TRUTH_DIR: &str = "truth";

#[derive(Debug, Clone, PartialEq)]
pub struct SessionFixture {
    pub hand: Hand,
    pub samples: usize,
    pub frames: usize,
    /// Contact share of the labeled ground-truth frames.
    pub frame_contact_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneFixture {
    pub hand: Hand,
    pub frames: usize,
    pub contacted_frames: usize,
}

/// Writes `new` unless the session already has a file at `field` with the
/// same content, in which case the existing one is kept.
fn reuse_or_write<T: PartialEq>(
    session: &Session,
    field: &Option<String>,
    what: &str,
    new: &T,
    read: impl Fn(&Path) -> Result<T>,
    write: impl Fn(&Path) -> Result<()>,
    default_name: &str,
) -> Result<String> {
    if let Some(rel) = field {
        let path = session.path(rel);
        if path.is_file() {
            if &read(&path)? != new {
                return Err(Error::Config(format!(
                    "{}: existing {what} disagrees with this script (different clock or span)",
                    path.display()
                )));
            }
            return Ok(rel.clone());
        }
    }
    write(&session.path(default_name))?;
    Ok(default_name.to_string())
}

/// Generates one glove's session into `dir`, adding it to the manifest.
/// A second hand can be added by running again with a script for the other
/// hand; its timeline and events must agree with the existing ones.
pub fn synth_session(dir: &Path, script: &SessionScript) -> Result<SessionFixture> {
    let g = generate_session(script)?;
    let mut session = Session::open_or_create(dir)?;
    let hand = script.hand;

    let log = format!("sensor_{hand}.log");
    formats::write_sensor_log(&session.path(&log), &g.session)?;
    session.manifest.sensors.insert(hand.to_string(), log);

    let timeline = reuse_or_write(
        &session,
        &session.manifest.timeline,
        "timeline",
        &g.timeline,
        formats::read_timeline,
        |p| formats::write_timeline(p, &g.timeline),
        TIMELINE,
    )?;
    session.manifest.timeline = Some(timeline);
    let events = reuse_or_write(
        &session,
        &session.manifest.events,
        "events file",
        &(g.events_device.clone(), g.events_video.clone()),
        formats::read_events,
        |p| formats::write_events(p, &g.events_device, &g.events_video),
        EVENTS,
    )?;
    session.manifest.events = Some(events);

    let truth = session.manifest.truth_dir.clone().unwrap_or_else(|| TRUTH_DIR.to_string());
    let truth_dir = session.path(&truth);
    formats::write_segments(
        &truth_dir.join(outputs::truth_segments(hand)),
        hand,
        &g.truth,
        "device",
        TRUTH_FINGERPRINT,
    )?;
    formats::write_frame_states(
        &truth_dir.join(outputs::truth_frames(hand)),
        hand,
        &g.timeline,
        &g.frame_truth,
        TRUTH_FINGERPRINT,
    )?;
    session.manifest.truth_dir = Some(truth);
    session.save()?;

    Ok(SessionFixture {
        hand,
        samples: g.session.len(),
        frames: g.timeline.len(),
        frame_contact_fraction: crate::labeling::contact_fraction(&g.frame_truth).unwrap_or(0.0),
    })
}

/// Renders a scene into `dir`: flow, depth and mask rasters per frame plus
/// poses, hand centroids, proposal labels and the contacted object per frame.
pub fn synth_scene(dir: &Path, script: &SceneScript, exec: Execution) -> Result<SceneFixture> {
    let scene = Scene::new(script.clone())?;
    let n = scene.n_frames();
    let mut session = Session::open_or_create(dir)?;
    let hand = script.hand;

    match &session.manifest.timeline {
        Some(rel) if session.path(rel).is_file() => {
            let tl = formats::read_timeline(&session.path(rel))?;
            if tl.len() != n {
                return Err(Error::Config(format!(
                    "{}: existing timeline has {} frames, scene has {n}",
                    session.path(rel).display(),
                    tl.len()
                )));
            }
        }
        _ => {
            formats::write_timeline(&session.path(TIMELINE), &FrameTimeline::uniform(n, script.fps, 0.0))?;
            session.manifest.timeline = Some(TIMELINE.into());
        }
    }

    for kind in [RasterKind::Flow, RasterKind::Depth, RasterKind::Masks] {
        let name = kind.default_dir().to_string();
        match kind {
            RasterKind::Flow => session.manifest.flow_dir = Some(name),
            RasterKind::Depth => session.manifest.depth_dir = Some(name),
            RasterKind::Masks => session.manifest.mask_dir = Some(name),
        }
    }

    let mut proposals: Vec<(usize, Vec<(String, String)>)> = Vec::new();
    const BATCH: usize = 8;
    let mut start = 0;
    while start < n {
        let end = (start + BATCH).min(n);
        let frames = exec.map_range(end - start, |k| scene.render(start + k, Execution::Sequential));
        for (k, frame) in frames.into_iter().enumerate() {
            let f = start + k;
            let frame = frame?;
            if let Some(flow) = &frame.flow {
                Raster::from_flow(flow).write(&session.raster_path(RasterKind::Flow, f)?)?;
            }
            Raster::from_depth(&frame.depth).write(&session.raster_path(RasterKind::Depth, f)?)?;
            if !frame.masks.is_empty() {
                let refs: Vec<_> = frame.masks.iter().collect();
                Raster::from_masks(script.width, script.height, &refs)
                    .write(&session.raster_path(RasterKind::Masks, f)?)?;
                proposals.push((f, frame.masks.iter().map(|m| (m.id.clone(), m.concept.clone())).collect()));
            }
        }
        start = end;
    }

    let cams: Vec<_> = (0..n).map(|f| scene.camera(f)).collect();
    formats::write_poses(&session.path("poses.txt"), &cams)?;
    let hands: Vec<_> = (0..n).map(|f| (f, scene.hand(f))).collect();
    formats::write_hands(&session.path("hands.txt"), &hands)?;
    formats::write_proposals(&session.path("proposals.txt"), &proposals)?;
    session.manifest.poses = Some("poses.txt".into());
    session.manifest.hands = Some("hands.txt".into());
    session.manifest.proposals = Some("proposals.txt".into());

    let truth = session.manifest.truth_dir.clone().unwrap_or_else(|| TRUTH_DIR.to_string());
    let mut w = TextWriter::new(
        "contacted-objects",
        &[("hand", hand.to_string()), ("fingerprint", TRUTH_FINGERPRINT.to_string())],
    );
    w.comment("columns: frame_index, mask_id|NONE");
    let mut contacted = 0;
    for f in 0..n {
        let id = scene.contacted(f);
        contacted += usize::from(id.is_some());
        w.row([f.to_string(), id.unwrap_or("NONE").to_string()]);
    }
    w.write(&session.path(&truth).join(outputs::truth_objects(hand)))?;
    session.manifest.truth_dir = Some(truth);
    session.save()?;
    Ok(SceneFixture { hand, frames: n, contacted_frames: contacted })
}

/// Ground-truth contacted object per frame as written by [`synth_scene`].
pub fn read_truth_objects(path: &Path) -> Result<Vec<Option<String>>> {
    let t = crate::io::table::TextTable::read(path)?;
    t.expect_format("contacted-objects")?;
    t.rows
        .iter()
        .enumerate()
        .map(|(k, (line, f))| {
            t.check_width(*line, f, 2)?;
            let idx: usize = t.field(*line, f, 0)?;
            if idx != k {
                return Err(t.err(*line, format!("frame index {idx} out of sequence (expected {k})")));
            }
            Ok((f[1] != "NONE").then(|| f[1].clone()))
        })
        .collect()
}
