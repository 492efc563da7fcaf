//! Readers and writers for every text format the pipeline exchanges.

use std::path::Path;

use super::table::{TextTable, TextWriter};
use crate::geometry::{CameraModel, HandObservation, Mat3, PseudolabelResult, Vec3};
use crate::labeling::{ContactSegment, ContactState};
use crate::signal::{Conditioned, ConsolidatedSignal, SensorSample, SensorSession, CHANNELS, CHANNEL_NAMES};
use crate::sync::FrameTimeline;
use crate::{Error, Hand, Result};

fn flag(b: bool) -> u8 {
    u8::from(b)
}

fn parse_flag(t: &TextTable, line: usize, fields: &[String], k: usize) -> Result<bool> {
    match fields.get(k).map(String::as_str) {
        Some("0") => Ok(false),
        Some("1") => Ok(true),
        other => Err(t.err(line, format!("expected 0 or 1, found {other:?}"))),
    }
}

fn fp(fingerprint: &str) -> (&'static str, String) {
    ("fingerprint", fingerprint.to_string())
}

// ---------------------------------------------------------------- sensor logs

pub fn write_sensor_log(path: &Path, session: &SensorSession) -> Result<()> {
    let mut w = TextWriter::new(
        "sensor-log",
        &[
            ("hand", session.hand.to_string()),
            ("adc_max", session.adc_max.to_string()),
            ("rate_hz", session.sample_rate_hz.to_string()),
        ],
    );
    w.comment("columns: t_device, thumb, index, middle, ring, pinky, palm");
    for s in &session.samples {
        let mut row = Vec::with_capacity(1 + CHANNELS);
        row.push(s.t_device);
        row.extend_from_slice(&s.channels);
        w.row(row);
    }
    w.write(path)
}

/// Reads a sensor log; `default_rate` applies when the header has no rate.
pub fn read_sensor_log(path: &Path, default_rate: f64) -> Result<SensorSession> {
    let t = TextTable::read(path)?;
    t.expect_format("sensor-log")?;
    let hand: Hand = t.meta::<String>("hand")?.parse()?;
    let adc_max: f64 = t.meta("adc_max")?;
    let rate = t.meta_opt::<f64>("rate_hz")?.unwrap_or(default_rate);
    let mut samples = Vec::with_capacity(t.rows.len());
    for (line, f) in &t.rows {
        t.check_width(*line, f, 1 + CHANNELS)?;
        let mut channels = [0.0; CHANNELS];
        for (c, slot) in channels.iter_mut().enumerate() {
            *slot = t.field(*line, f, c + 1)?;
        }
        samples.push(SensorSample { t_device: t.field(*line, f, 0)?, channels });
    }
    SensorSession::new(hand, rate, adc_max, samples).map_err(|e| match e {
        Error::NonFinite { index } => t.err(t.rows[index].0, "non-finite value"),
        Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
        other => other,
    })
}

// ---------------------------------------------------------- filter outputs

pub fn write_consolidated(path: &Path, hand: Hand, sig: &ConsolidatedSignal, fingerprint: &str) -> Result<()> {
    let mut w = TextWriter::new("consolidated", &[("hand", hand.to_string()), fp(fingerprint)]);
    w.comment("columns: t_device, value, excluded");
    for i in 0..sig.len() {
        w.row([sig.t_device[i].to_string(), sig.value[i].to_string(), flag(sig.excluded[i]).to_string()]);
    }
    w.write(path)
}

pub fn read_consolidated(path: &Path) -> Result<(Hand, ConsolidatedSignal, String)> {
    let t = TextTable::read(path)?;
    t.expect_format("consolidated")?;
    let hand: Hand = t.meta::<String>("hand")?.parse()?;
    let mut sig = ConsolidatedSignal { t_device: vec![], value: vec![], excluded: vec![] };
    for (line, f) in &t.rows {
        t.check_width(*line, f, 3)?;
        sig.t_device.push(t.field(*line, f, 0)?);
        let v: f64 = t.field(*line, f, 1)?;
        if !(v >= 0.0) {
            return Err(t.err(*line, format!("consolidated value {v} is negative or NaN")));
        }
        sig.value.push(v);
        sig.excluded.push(parse_flag(&t, *line, f, 2)?);
    }
    Ok((hand, sig, t.meta("fingerprint")?))
}

pub fn write_diagnostics(path: &Path, hand: Hand, c: &Conditioned, fingerprint: &str) -> Result<()> {
    let mut w = TextWriter::new(
        "diagnostics",
        &[
            ("hand", hand.to_string()),
            fp(fingerprint),
            ("period_s", c.period.to_string()),
            ("baseline_window", c.baseline_window.to_string()),
            ("rms_window", c.rms_window.to_string()),
            ("dropout_samples", c.dropout_samples.to_string()),
            ("quiet", flag(c.quiet).to_string()),
        ],
    );
    w.comment(
        "columns: channel, name, hampel_replaced, hampel_passes, raw_mean, raw_variance, baseline_min, baseline_max, \
         max_baseline_step, subtracted_mean, excluded_samples, scale, dead",
    );
    for (k, d) in c.diagnostics.iter().enumerate() {
        w.row([
            k.to_string(),
            CHANNEL_NAMES[k].to_string(),
            d.hampel_replaced.to_string(),
            d.hampel_passes.to_string(),
            d.raw_mean.to_string(),
            d.raw_variance.to_string(),
            d.baseline_min.to_string(),
            d.baseline_max.to_string(),
            d.max_baseline_step.to_string(),
            d.subtracted_mean.to_string(),
            d.excluded_samples.to_string(),
            d.scale.to_string(),
            flag(d.dead).to_string(),
        ]);
    }
    w.write(path)
}

// ------------------------------------------------------------- label outputs

pub fn write_states(path: &Path, hand: Hand, t: &[f64], states: &[ContactState], fingerprint: &str) -> Result<()> {
    let mut w = TextWriter::new("sample-states", &[("hand", hand.to_string()), fp(fingerprint)]);
    w.comment("columns: t_device, state");
    for (ti, s) in t.iter().zip(states) {
        w.row([ti.to_string(), s.token().to_string()]);
    }
    w.write(path)
}

pub fn read_states(path: &Path) -> Result<(Vec<f64>, Vec<ContactState>, String)> {
    let t = TextTable::read(path)?;
    t.expect_format("sample-states")?;
    let mut times = Vec::with_capacity(t.rows.len());
    let mut states = Vec::with_capacity(t.rows.len());
    for (line, f) in &t.rows {
        t.check_width(*line, f, 2)?;
        times.push(t.field(*line, f, 0)?);
        states.push(f[1].parse().map_err(|_| t.err(*line, format!("bad state '{}'", f[1])))?);
    }
    Ok((times, states, t.meta("fingerprint")?))
}

pub fn write_segments(path: &Path, hand: Hand, segs: &[ContactSegment], clock: &str, fingerprint: &str) -> Result<()> {
    let mut w =
        TextWriter::new("segments", &[("hand", hand.to_string()), ("clock", clock.to_string()), fp(fingerprint)]);
    w.comment("columns: start_t, end_t, state");
    for s in segs {
        w.row([s.start_t.to_string(), s.end_t.to_string(), s.state.token().to_string()]);
    }
    w.write(path)
}

pub fn read_segments(path: &Path) -> Result<Vec<ContactSegment>> {
    let t = TextTable::read(path)?;
    t.expect_format("segments")?;
    t.rows
        .iter()
        .map(|(line, f)| {
            t.check_width(*line, f, 3)?;
            Ok(ContactSegment {
                start_t: t.field(*line, f, 0)?,
                end_t: t.field(*line, f, 1)?,
                state: f[2].parse().map_err(|_| t.err(*line, format!("bad state '{}'", f[2])))?,
            })
        })
        .collect()
}

pub fn write_frame_states(
    path: &Path,
    hand: Hand,
    timeline: &FrameTimeline,
    states: &[ContactState],
    fingerprint: &str,
) -> Result<()> {
    let mut w = TextWriter::new("frame-states", &[("hand", hand.to_string()), fp(fingerprint)]);
    w.comment("columns: frame_index, t_video, state");
    for (f, (t, s)) in timeline.t_video.iter().zip(states).enumerate() {
        w.row([f.to_string(), t.to_string(), s.token().to_string()]);
    }
    w.write(path)
}

pub struct FrameStates {
    pub hand: Hand,
    pub t_video: Vec<f64>,
    pub states: Vec<ContactState>,
    pub fingerprint: String,
}

pub fn read_frame_states(path: &Path) -> Result<FrameStates> {
    let t = TextTable::read(path)?;
    t.expect_format("frame-states")?;
    let mut out = FrameStates {
        hand: t.meta::<String>("hand")?.parse()?,
        t_video: vec![],
        states: vec![],
        fingerprint: t.meta("fingerprint")?,
    };
    for (k, (line, f)) in t.rows.iter().enumerate() {
        t.check_width(*line, f, 3)?;
        let idx: usize = t.field(*line, f, 0)?;
        if idx != k {
            return Err(t.err(*line, format!("frame index {idx} out of sequence (expected {k})")));
        }
        out.t_video.push(t.field(*line, f, 1)?);
        out.states.push(f[2].parse().map_err(|_| t.err(*line, format!("bad state '{}'", f[2])))?);
    }
    Ok(out)
}

// -------------------------------------------------------- timeline & events

pub fn write_timeline(path: &Path, timeline: &FrameTimeline) -> Result<()> {
    let mut w = TextWriter::new("timeline", &[("fps", timeline.fps.to_string())]);
    w.comment("columns: frame_index, t_video");
    for (f, t) in timeline.t_video.iter().enumerate() {
        w.row([f.to_string(), t.to_string()]);
    }
    w.write(path)
}

pub fn read_timeline(path: &Path) -> Result<FrameTimeline> {
    let t = TextTable::read(path)?;
    t.expect_format("timeline")?;
    let fps: f64 = t.meta("fps")?;
    let mut tv = Vec::with_capacity(t.rows.len());
    for (k, (line, f)) in t.rows.iter().enumerate() {
        t.check_width(*line, f, 2)?;
        let idx: usize = t.field(*line, f, 0)?;
        if idx != k {
            return Err(t.err(*line, format!("frame index {idx} out of sequence (expected {k})")));
        }
        tv.push(t.field(*line, f, 1)?);
    }
    FrameTimeline::new(tv, fps).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

pub fn write_events(path: &Path, device: &[f64], video: &[f64]) -> Result<()> {
    let mut w = TextWriter::new("sync-events", &[]);
    w.comment("columns: t_device, t_video");
    for (d, v) in device.iter().zip(video) {
        w.row([d, v]);
    }
    w.write(path)
}

/// Two-column event pairs; the header line is optional for hand-written files.
pub fn read_events(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = TextTable::read(path)?;
    if t.meta.contains_key("format") {
        t.expect_format("sync-events")?;
    }
    let mut d = Vec::new();
    let mut v = Vec::new();
    for (line, f) in &t.rows {
        t.check_width(*line, f, 2)?;
        d.push(t.field(*line, f, 0)?);
        v.push(t.field(*line, f, 1)?);
    }
    Ok((d, v))
}

// ---------------------------------------------------------- scene metadata

pub fn write_poses(path: &Path, cams: &[CameraModel]) -> Result<()> {
    let mut w = TextWriter::new(
        "poses",
        &[
            ("pose", "world_from_camera".to_string()),
            ("pixels", "integer_centers_origin_top_left_x_right_y_down".to_string()),
        ],
    );
    w.comment("columns: frame_index, m00..m33 (row-major 4x4), fx, fy, cx, cy");
    for (f, c) in cams.iter().enumerate() {
        let mut row = vec![f.to_string()];
        for r in 0..3 {
            for k in 0..3 {
                row.push(c.rotation[(r, k)].to_string());
            }
            row.push(c.translation[r].to_string());
        }
        row.extend(["0", "0", "0", "1"].map(String::from));
        row.extend([c.fx, c.fy, c.cx, c.cy].map(|v| v.to_string()));
        w.row(row);
    }
    w.write(path)
}

pub fn read_poses(path: &Path) -> Result<Vec<CameraModel>> {
    let t = TextTable::read(path)?;
    t.expect_format("poses")?;
    let mut out = Vec::with_capacity(t.rows.len());
    for (k, (line, f)) in t.rows.iter().enumerate() {
        t.check_width(*line, f, 21)?;
        let idx: usize = t.field(*line, f, 0)?;
        if idx != k {
            return Err(t.err(*line, format!("frame index {idx} out of sequence (expected {k})")));
        }
        let m: Vec<f64> = (1..17).map(|j| t.field(*line, f, j)).collect::<Result<_>>()?;
        let rotation = Mat3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        let translation = Vec3::new(m[3], m[7], m[11]);
        let cam = CameraModel::new(
            t.field(*line, f, 17)?,
            t.field(*line, f, 18)?,
            t.field(*line, f, 19)?,
            t.field(*line, f, 20)?,
            rotation,
            translation,
        )
        .map_err(|e| t.err(*line, e.to_string()))?;
        out.push(cam);
    }
    Ok(out)
}

pub fn write_hands(path: &Path, rows: &[(usize, HandObservation)]) -> Result<()> {
    let mut w = TextWriter::new("hands", &[("frame", "world".to_string())]);
    w.comment("columns: frame_index, hand, x, y, z, visible");
    for (f, h) in rows {
        w.row([
            f.to_string(),
            h.hand.to_string(),
            h.centroid.x.to_string(),
            h.centroid.y.to_string(),
            h.centroid.z.to_string(),
            flag(h.visible).to_string(),
        ]);
    }
    w.write(path)
}

pub fn read_hands(path: &Path) -> Result<Vec<(usize, HandObservation)>> {
    let t = TextTable::read(path)?;
    t.expect_format("hands")?;
    t.rows
        .iter()
        .map(|(line, f)| {
            t.check_width(*line, f, 6)?;
            let centroid = Vec3::new(t.field(*line, f, 2)?, t.field(*line, f, 3)?, t.field(*line, f, 4)?);
            let visible = parse_flag(&t, *line, f, 5)?;
            if visible && !centroid.iter().all(|v| v.is_finite()) {
                return Err(t.err(*line, "visible hand with non-finite centroid"));
            }
            Ok((t.field(*line, f, 0)?, HandObservation { hand: f[1].parse()?, centroid, visible }))
        })
        .collect()
}

/// One row per (frame, mask channel): `frame_index, channel, mask_id, concept`.
pub fn write_proposals(path: &Path, rows: &[(usize, Vec<(String, String)>)]) -> Result<()> {
    let mut w = TextWriter::new("proposals", &[]);
    w.comment("columns: frame_index, channel, mask_id, concept");
    for (f, labels) in rows {
        for (c, (id, concept)) in labels.iter().enumerate() {
            w.row([f.to_string(), c.to_string(), id.clone(), concept.clone()]);
        }
    }
    w.write(path)
}

/// Labels per frame, ordered by mask channel.
pub fn read_proposals(path: &Path) -> Result<std::collections::BTreeMap<usize, Vec<(String, String)>>> {
    let t = TextTable::read(path)?;
    t.expect_format("proposals")?;
    let mut out: std::collections::BTreeMap<usize, Vec<(String, String)>> = Default::default();
    for (line, f) in &t.rows {
        t.check_width(*line, f, 4)?;
        let frame: usize = t.field(*line, f, 0)?;
        let channel: usize = t.field(*line, f, 1)?;
        let list = out.entry(frame).or_default();
        if channel != list.len() {
            return Err(t.err(*line, format!("mask channel {channel} out of sequence")));
        }
        list.push((f[2].clone(), f[3].clone()));
    }
    Ok(out)
}

// ------------------------------------------------------- pseudolabel ledger

pub struct LedgerRow {
    pub frame: usize,
    pub hand: Hand,
    pub result: PseudolabelResult,
}

pub fn write_pseudolabel_ledger(path: &Path, rows: &[LedgerRow], fingerprint: &str) -> Result<()> {
    let mut w = TextWriter::new("pseudolabel-ledger", &[fp(fingerprint)]);
    w.comment("columns: frame, hand, mask_id|NONE, score, gate_count, status");
    for r in rows {
        w.row([
            r.frame.to_string(),
            r.hand.to_string(),
            r.result.selected.clone().unwrap_or_else(|| "NONE".into()),
            r.result.candidate_score.map_or_else(|| "NA".to_string(), |s| s.to_string()),
            r.result.gate_count.to_string(),
            r.result.status.as_str().to_string(),
        ]);
    }
    w.write(path)
}

pub struct LedgerEntry {
    pub frame: usize,
    pub hand: Hand,
    pub mask_id: Option<String>,
    pub score: Option<f64>,
    pub gate_count: usize,
    pub status: String,
}

pub fn read_pseudolabel_ledger(path: &Path) -> Result<(Vec<LedgerEntry>, String)> {
    let t = TextTable::read(path)?;
    t.expect_format("pseudolabel-ledger")?;
    let rows = t
        .rows
        .iter()
        .map(|(line, f)| {
            t.check_width(*line, f, 6)?;
            Ok(LedgerEntry {
                frame: t.field(*line, f, 0)?,
                hand: f[1].parse()?,
                mask_id: (f[2] != "NONE").then(|| f[2].clone()),
                score: if f[3] == "NA" { None } else { Some(t.field(*line, f, 3)?) },
                gate_count: t.field(*line, f, 4)?,
                status: f[5].clone(),
            })
        })
        .collect::<Result<_>>()?;
    Ok((rows, t.meta("fingerprint")?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sensor_log_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.log");
        let samples = (0..5)
            .map(|i| SensorSample { t_device: i as f64 * 0.01, channels: std::array::from_fn(|c| (i * c) as f64) })
            .collect();
        let s = SensorSession::new(Hand::Right, 100.0, 1023.0, samples).unwrap();
        write_sensor_log(&p, &s).unwrap();
        assert_eq!(read_sensor_log(&p, 50.0).unwrap(), s);
    }

    #[test]
    fn sensor_log_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.log");
        std::fs::write(&p, "# format=sensor-log hand=left adc_max=10\n0, 1, 1, 1, 1, 1, 1\n0.01, 1, 1, x, 1, 1, 1\n")
            .unwrap();
        let err = read_sensor_log(&p, 100.0).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        std::fs::write(&p, "# format=sensor-log hand=left adc_max=10\n0, 1, 1, 1, 1, 1, 11\n").unwrap();
        assert!(matches!(read_sensor_log(&p, 100.0).unwrap_err(), Error::Schema(_)));
    }

    #[test]
    fn poses_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("poses.txt");
        let r = nalgebra::Rotation3::from_euler_angles(0.3, 0.01, -0.7).into_inner();
        let cams = vec![
            CameraModel::new(500.0, 501.0, 320.0, 240.5, r, Vec3::new(0.1, 0.2, 0.3)).unwrap(),
            CameraModel::new(500.0, 501.0, 320.0, 240.5, Mat3::identity(), Vec3::zeros()).unwrap(),
        ];
        write_poses(&p, &cams).unwrap();
        assert_eq!(read_poses(&p).unwrap(), cams);
    }

    #[test]
    fn events_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ev.txt");
        std::fs::write(&p, "0, 5\n10, 15.001\n").unwrap();
        assert_eq!(read_events(&p).unwrap(), (vec![0.0, 10.0], vec![5.0, 15.001]));
    }
}
