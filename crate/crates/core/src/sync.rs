//! Glove-clock to video-clock alignment and per-frame resampling.
//!
//! The clock model is affine: `t_video = t_device + offset + drift * t_device`.
//! Frames own the half-open interval `[t_frame, t_frame + 1/fps)`.

use std::fmt;
use std::str::FromStr;

use crate::exec::Execution;
use crate::labeling::ContactState;
use crate::signal::ConsolidatedSignal;
use crate::{Error, Result};

/// Largest accepted |drift|.
pub const MAX_DRIFT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockMethod {
    Events,
    CrossCorrelation,
}

impl ClockMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ClockMethod::Events => "events",
            ClockMethod::CrossCorrelation => "xcorr",
        }
    }
}

impl fmt::Display for ClockMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClockMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "events" => Ok(ClockMethod::Events),
            "xcorr" => Ok(ClockMethod::CrossCorrelation),
            other => Err(Error::Schema(format!("unknown clock method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockModel {
    pub offset: f64,
    pub drift: f64,
    pub fit_residual_rms: f64,
    pub method: ClockMethod,
    /// Peak normalized correlation for cross-correlation fits, 1 for event fits.
    pub quality: f64,
}

impl ClockModel {
    pub fn to_video(&self, t_device: f64) -> f64 {
        t_device + self.offset + self.drift * t_device
    }

    pub fn to_device(&self, t_video: f64) -> f64 {
        (t_video - self.offset) / (1.0 + self.drift)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.offset.is_finite() && self.drift.is_finite()) {
            return Err(Error::CalibrationFailed("clock parameters are not finite".into()));
        }
        if self.drift.abs() >= MAX_DRIFT {
            return Err(Error::CalibrationFailed(format!("|drift| {} exceeds {MAX_DRIFT}", self.drift)));
        }
        Ok(())
    }
}

/// Least-squares affine fit `t_video = a * t_device + b` over matched events.
pub fn fit_clock_from_events(device_events: &[f64], video_events: &[f64], residual_max: f64) -> Result<ClockModel> {
    if device_events.len() != video_events.len() {
        return Err(Error::Structural("event lists differ in length".into()));
    }
    let n = device_events.len();
    if n < 2 {
        return Err(Error::InsufficientCalibration { pairs: n });
    }
    let mx = device_events.iter().sum::<f64>() / n as f64;
    let my = video_events.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in device_events.iter().zip(video_events) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if !(sxx > 0.0) {
        return Err(Error::CalibrationFailed("device events do not span any time".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = device_events
        .iter()
        .zip(video_events)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let model = ClockModel {
        offset: intercept,
        drift: slope - 1.0,
        fit_residual_rms: (ss / n as f64).sqrt(),
        method: ClockMethod::Events,
        quality: 1.0,
    };
    model.validate()?;
    if model.fit_residual_rms > residual_max {
        return Err(Error::CalibrationFailed(format!(
            "event fit residual {:.3e} s exceeds {residual_max:.3e} s",
            model.fit_residual_rms
        )));
    }
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XcorrParams {
    pub search_s: f64,
    pub corr_min: f64,
    /// Minimum seconds of overlap for a lag to be scored.
    pub min_overlap_s: f64,
}

impl Default for XcorrParams {
    fn default() -> Self {
        Self { search_s: 10.0, corr_min: 0.5, min_overlap_s: 10.0 }
    }
}

fn pearson_at_lag(sig_t: &[f64], sig_v: &[f64], proxy_t: &[f64], proxy: &[f64], lag: f64, min_count: usize) -> f64 {
    let first = sig_t[0];
    let last = sig_t[sig_t.len() - 1];
    let (mut n, mut sp, mut sc, mut spp, mut scc, mut spc) = (0usize, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut j = 0usize;
    for (&tv, &p) in proxy_t.iter().zip(proxy) {
        let td = tv - lag;
        if td < first || td > last {
            continue;
        }
        while j + 1 < sig_t.len() && sig_t[j + 1] <= td {
            j += 1;
        }
        let c = if j + 1 < sig_t.len() {
            let w = (td - sig_t[j]) / (sig_t[j + 1] - sig_t[j]);
            sig_v[j] + w * (sig_v[j + 1] - sig_v[j])
        } else {
            sig_v[j]
        };
        n += 1;
        sp += p;
        sc += c;
        spp += p * p;
        scc += c * c;
        spc += p * c;
    }
    if n < min_count.max(2) {
        return f64::NAN;
    }
    let nf = n as f64;
    let cov = spc - sp * sc / nf;
    let vp = spp - sp * sp / nf;
    let vc = scc - sc * sc / nf;
    if vp <= 0.0 || vc <= 0.0 {
        return f64::NAN;
    }
    cov / (vp * vc).sqrt()
}

/// Offset search by normalized cross-correlation between the consolidated
/// force and a per-frame proxy on the video clock (`proxy_t` are frame times).
///
/// Lags are scanned at the device sample period and the peak is refined by a
/// parabola through its two neighbours. Drift is fixed at zero.
pub fn fit_clock_xcorr(
    consolidated: &ConsolidatedSignal,
    proxy_t: &[f64],
    proxy: &[f64],
    params: &XcorrParams,
    exec: Execution,
) -> Result<ClockModel> {
    if proxy_t.len() != proxy.len() {
        return Err(Error::Structural("proxy values and times differ in length".into()));
    }
    let sig_t = &consolidated.t_device;
    let span = |t: &[f64]| {
        if t.len() < 2 {
            0.0
        } else {
            t[t.len() - 1] - t[0]
        }
    };
    if span(sig_t) < 10.0 || span(proxy_t) < 10.0 {
        return Err(Error::CalibrationFailed("cross-correlation needs at least 10 s of both signals".into()));
    }
    let step = crate::stats::median_period(sig_t).unwrap_or(0.01);
    let frame_dt = crate::stats::median_period(proxy_t).unwrap_or(step);
    let min_count = (params.min_overlap_s / frame_dt).ceil() as usize;
    let half = (params.search_s / step).round() as i64;
    let lags: Vec<f64> = (-half..=half).map(|k| k as f64 * step).collect();
    let scores =
        exec.map_slice(&lags, |&lag| pearson_at_lag(sig_t, &consolidated.value, proxy_t, proxy, lag, min_count));
    let best = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(k, _)| k)
        .ok_or_else(|| Error::CalibrationFailed("no lag had enough overlap".into()))?;
    let peak = scores[best];
    if peak < params.corr_min {
        return Err(Error::CalibrationFailed(format!("peak correlation {peak:.3} below minimum {}", params.corr_min)));
    }
    let mut delta = 0.0;
    if best > 0 && best + 1 < scores.len() {
        let (ym, y0, yp) = (scores[best - 1], scores[best], scores[best + 1]);
        let denom = ym - 2.0 * y0 + yp;
        if ym.is_finite() && yp.is_finite() && denom < 0.0 {
            delta = (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5);
        }
    }
    let model = ClockModel {
        offset: lags[best] + delta * step,
        drift: 0.0,
        fit_residual_rms: step / 12f64.sqrt(),
        method: ClockMethod::CrossCorrelation,
        quality: peak,
    };
    model.validate()?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameTimeline {
    pub t_video: Vec<f64>,
    pub fps: f64,
}

impl FrameTimeline {
    pub fn new(t_video: Vec<f64>, fps: f64) -> Result<Self> {
        let tl = Self { t_video, fps };
        tl.validate()?;
        Ok(tl)
    }

    pub fn uniform(n_frames: usize, fps: f64, t0: f64) -> Self {
        Self { t_video: (0..n_frames).map(|f| t0 + f as f64 / fps).collect(), fps }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::Schema(format!("fps {} must be positive", self.fps)));
        }
        for (i, w) in self.t_video.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::Schema(format!("frame {}: timestamps must be strictly increasing", i + 1)));
            }
        }
        if self.t_video.iter().any(|t| !t.is_finite()) {
            return Err(Error::Schema("non-finite frame timestamp".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.t_video.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_video.is_empty()
    }

    /// End of frame `f`'s interval, clipped to the next frame's start.
    pub fn frame_end(&self, f: usize) -> f64 {
        let end = self.t_video[f] + 1.0 / self.fps;
        self.t_video.get(f + 1).map_or(end, |next| end.min(*next))
    }
}

/// Frame index of every device sample, `None` when it falls outside all frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMapping {
    pub frame_of: Vec<Option<usize>>,
}

impl SampleMapping {
    pub fn mapped(&self) -> usize {
        self.frame_of.iter().filter(|f| f.is_some()).count()
    }

    pub fn outside(&self) -> usize {
        self.frame_of.len() - self.mapped()
    }
}

pub fn map_samples(t_device: &[f64], clock: &ClockModel, timeline: &FrameTimeline) -> Result<SampleMapping> {
    clock.validate()?;
    timeline.validate()?;
    let tv = &timeline.t_video;
    let frame_of = t_device
        .iter()
        .map(|&td| {
            let t = clock.to_video(td);
            let idx = tv.partition_point(|&start| start <= t);
            if idx == 0 {
                return None;
            }
            let f = idx - 1;
            (t < timeline.frame_end(f)).then_some(f)
        })
        .collect();
    Ok(SampleMapping { frame_of })
}

/// Per-frame maximum of the samples mapped into each frame (`None` when empty).
pub fn resample_max(
    values: &[f64],
    t_device: &[f64],
    clock: &ClockModel,
    timeline: &FrameTimeline,
) -> Result<Vec<Option<f64>>> {
    if values.len() != t_device.len() {
        return Err(Error::Structural("values and timestamps differ in length".into()));
    }
    let mapping = map_samples(t_device, clock, timeline)?;
    let mut out: Vec<Option<f64>> = vec![None; timeline.len()];
    for (v, f) in values.iter().zip(&mapping.frame_of) {
        if let Some(f) = *f {
            out[f] = Some(out[f].map_or(*v, |m: f64| m.max(*v)));
        }
    }
    Ok(out)
}

/// Folds the states of one frame: any Excluded wins, otherwise the majority of
/// Contact vs NoContact, with ties (including none of either) Ambiguous.
/// An empty frame is Excluded.
pub fn reduce_states(states: impl IntoIterator<Item = ContactState>) -> ContactState {
    let (mut any, mut c, mut nc) = (false, 0usize, 0usize);
    for s in states {
        any = true;
        match s {
            ContactState::Excluded => return ContactState::Excluded,
            ContactState::Contact => c += 1,
            ContactState::NoContact => nc += 1,
            ContactState::Ambiguous => {}
        }
    }
    if !any {
        ContactState::Excluded
    } else if c > nc {
        ContactState::Contact
    } else if nc > c {
        ContactState::NoContact
    } else {
        ContactState::Ambiguous
    }
}

pub fn resample_states(
    states: &[ContactState],
    t_device: &[f64],
    clock: &ClockModel,
    timeline: &FrameTimeline,
) -> Result<Vec<ContactState>> {
    if states.len() != t_device.len() {
        return Err(Error::Structural("states and timestamps differ in length".into()));
    }
    let mapping = map_samples(t_device, clock, timeline)?;
    let mut buckets: Vec<Vec<ContactState>> = vec![Vec::new(); timeline.len()];
    for (s, f) in states.iter().zip(&mapping.frame_of) {
        if let Some(f) = *f {
            buckets[f].push(*s);
        }
    }
    Ok(buckets.into_iter().map(reduce_states).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ContactState::*;

    #[test]
    fn exact_slope_one() {
        let m = fit_clock_from_events(&[0.0, 10.0], &[5.0, 15.0], 0.01).unwrap();
        assert!((m.offset - 5.0).abs() < 1e-12);
        assert!(m.drift.abs() < 1e-12);
    }

    #[test]
    fn two_point_drift() {
        let m = fit_clock_from_events(&[0.0, 10.0], &[5.0, 15.001], 0.01).unwrap();
        // closed form: slope = (15.001 - 5) / 10
        assert!((m.drift - 1e-4).abs() < 1e-12);
        assert!((m.offset - 5.0).abs() < 1e-12);
        assert!(m.fit_residual_rms < 1e-12);
    }

    #[test]
    fn single_pair_is_insufficient() {
        assert!(matches!(
            fit_clock_from_events(&[1.0], &[2.0], 0.01),
            Err(Error::InsufficientCalibration { pairs: 1 })
        ));
    }

    #[test]
    fn noisy_events_fail_residual() {
        let d = [0.0, 10.0, 20.0, 30.0];
        let v = [0.0, 10.5, 19.5, 30.0];
        assert!(matches!(fit_clock_from_events(&d, &v, 0.01), Err(Error::CalibrationFailed(_))));
    }

    #[test]
    fn excessive_drift_rejected() {
        assert!(matches!(fit_clock_from_events(&[0.0, 10.0], &[0.0, 10.1], 1.0), Err(Error::CalibrationFailed(_))));
    }

    #[test]
    fn ten_samples_per_frame() {
        let t: Vec<f64> = (0..1000).map(|i| i as f64 * 0.01).collect();
        let tl = FrameTimeline::uniform(100, 10.0, 0.0);
        let clock =
            ClockModel { offset: 0.0, drift: 0.0, fit_residual_rms: 0.0, method: ClockMethod::Events, quality: 1.0 };
        let m = map_samples(&t, &clock, &tl).unwrap();
        let mut counts = vec![0; 100];
        for f in m.frame_of.iter().flatten() {
            counts[*f] += 1;
        }
        assert!(counts.iter().all(|c| *c == 10), "{counts:?}");
    }

    #[test]
    fn state_reducer() {
        assert_eq!(reduce_states([Contact, Contact, Contact, NoContact]), Contact);
        assert_eq!(reduce_states([Contact, NoContact]), Ambiguous);
        assert_eq!(reduce_states([Contact, Excluded, Contact]), Excluded);
        assert_eq!(reduce_states([Ambiguous, Ambiguous, NoContact]), NoContact);
        assert_eq!(reduce_states([]), Excluded);
    }

    #[test]
    fn dropout_frame_is_excluded() {
        let t: Vec<f64> = (0..100).filter(|i| !(29..51).contains(i)).map(|i| i as f64 * 0.01 + 0.005).collect();
        let states = vec![NoContact; t.len()];
        let clock =
            ClockModel { offset: 0.0, drift: 0.0, fit_residual_rms: 0.0, method: ClockMethod::Events, quality: 1.0 };
        let frames = resample_states(&states, &t, &clock, &FrameTimeline::uniform(10, 10.0, 0.0)).unwrap();
        assert_eq!(frames[3], Excluded);
        assert_eq!(frames[4], Excluded);
        assert_eq!(frames[2], NoContact);
        let maxes = resample_max(&vec![1.0; t.len()], &t, &clock, &FrameTimeline::uniform(10, 10.0, 0.0)).unwrap();
        assert_eq!(maxes[3], None);
        assert_eq!(maxes[5], Some(1.0));
    }
}
