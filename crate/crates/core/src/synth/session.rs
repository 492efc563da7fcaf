//! Synthetic glove sessions with exact contact ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::labeling::{ContactSegment, ContactState};
use crate::signal::{SensorSample, SensorSession, CHANNELS};
use crate::sync::{ClockMethod, ClockModel, FrameTimeline};
use crate::{Error, Hand, Result};

/// One scripted contact. Boundaries are the midpoints of the onset/offset
/// ramps; `amplitude` is a fraction of `adc_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactInterval {
    pub start: f64,
    pub end: f64,
    pub amplitude: f64,
}

/// Per-channel drift and response, all in fractions of `adc_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelScript {
    pub offset: f64,
    /// Linear drift per second.
    pub slope: f64,
    pub sin_amplitude: f64,
    pub sin_period_s: f64,
    pub sin_phase: f64,
    /// Multiplier on the contact amplitude.
    pub gain: f64,
    /// Flatlined sensor: reads `dead_level` for the whole session.
    pub dead: bool,
    pub dead_level: f64,
}

impl Default for ChannelScript {
    fn default() -> Self {
        Self {
            offset: 0.1,
            slope: 0.0,
            sin_amplitude: 0.0,
            sin_period_s: 300.0,
            sin_phase: 0.0,
            gain: 1.0,
            dead: false,
            dead_level: 0.3,
        }
    }
}

/// A gap in the sensor stream: samples in `[start, start + duration)` are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dropout {
    pub start: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionScript {
    pub hand: Hand,
    pub seed: u64,
    pub duration_s: f64,
    #[serde(default = "default_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "default_adc_max")]
    pub adc_max: f64,
    #[serde(default)]
    pub contacts: Vec<ContactInterval>,
    /// Exactly six entries when given; defaults otherwise.
    #[serde(default)]
    pub channels: Vec<ChannelScript>,
    /// Gaussian noise standard deviation, fraction of `adc_max`.
    #[serde(default)]
    pub noise_sigma: f64,
    /// Mean spikes per second per channel.
    #[serde(default)]
    pub spike_rate_hz: f64,
    #[serde(default = "default_ramp")]
    pub ramp_samples: usize,
    #[serde(default)]
    pub dropouts: Vec<Dropout>,
    /// Video clock: `t_video = t_device + clock_offset + clock_drift * t_device`.
    #[serde(default)]
    pub clock_offset: f64,
    #[serde(default)]
    pub clock_drift: f64,
    #[serde(default = "default_fps")]
    pub fps: f64,
    /// Synchronization taps recorded in both clocks.
    #[serde(default = "default_events")]
    pub sync_events: usize,
}

fn default_rate() -> f64 {
    100.0
}
fn default_adc_max() -> f64 {
    1023.0
}
fn default_ramp() -> usize {
    3
}
fn default_fps() -> f64 {
    30.0
}
fn default_events() -> usize {
    4
}

/// Knobs for [`SessionScript::randomized`]; also the `[random]` table of a
/// script file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomSession {
    pub hand: Hand,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub contact_fraction: f64,
    /// Mean contact + release cycle length.
    pub cycle_s: f64,
    pub noise_sigma: f64,
    pub spike_rate_hz: f64,
    /// Probability that one channel is flatlined.
    pub dead_channel_prob: f64,
    pub clock_offset: f64,
    pub clock_drift: f64,
    pub fps: f64,
}

impl Default for RandomSession {
    fn default() -> Self {
        Self {
            hand: Hand::Right,
            duration_s: 600.0,
            sample_rate_hz: 100.0,
            contact_fraction: 0.45,
            cycle_s: 10.0,
            noise_sigma: 0.02,
            spike_rate_hz: 0.05,
            dead_channel_prob: 0.0,
            clock_offset: 0.5,
            clock_drift: 2e-5,
            fps: 30.0,
        }
    }
}

/// Longest scripted contact.
const MAX_CONTACT_S: f64 = 20.0;

impl SessionScript {
    /// Parses a script file: either every field spelled out, or `seed` plus a
    /// `[random]` table of [`RandomSession`] knobs.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let err = |e: String| Error::Config(format!("session script: {e}"));
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| err(e.to_string()))?;
        let s: Self = match table.remove("random") {
            Some(random) => {
                let seed = table
                    .remove("seed")
                    .and_then(|v| v.as_integer())
                    .ok_or_else(|| err("missing integer 'seed'".into()))?;
                if let Some(key) = table.keys().next() {
                    return Err(err(format!("unexpected key '{key}' next to [random]")));
                }
                let p: RandomSession = random.try_into().map_err(|e: toml::de::Error| err(e.to_string()))?;
                let seed = u64::try_from(seed).map_err(|_| err("seed must be non-negative".into()))?;
                Self::randomized(seed, &p)
            }
            None => table.try_into().map_err(|e: toml::de::Error| err(e.to_string()))?,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("script serializes")
    }

    pub fn period(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn clock(&self) -> ClockModel {
        ClockModel {
            offset: self.clock_offset,
            drift: self.clock_drift,
            fit_residual_rms: 0.0,
            method: ClockMethod::Events,
            quality: 1.0,
        }
    }

    pub fn channel_scripts(&self) -> [ChannelScript; CHANNELS] {
        std::array::from_fn(|c| self.channels.get(c).copied().unwrap_or_default())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("session script: {m}")));
        if !(self.duration_s > 0.0 && self.sample_rate_hz > 0.0 && self.adc_max > 0.0 && self.fps > 0.0) {
            return bad("duration, rate, adc_max and fps must be positive".into());
        }
        if !self.channels.is_empty() && self.channels.len() != CHANNELS {
            return bad(format!("expected {CHANNELS} channel entries, found {}", self.channels.len()));
        }
        if self.noise_sigma < 0.0 || self.spike_rate_hz < 0.0 {
            return bad("noise and spike rate must be non-negative".into());
        }
        if self.clock_drift.abs() >= crate::sync::MAX_DRIFT {
            return bad("clock drift out of range".into());
        }
        let mut prev_end = f64::NEG_INFINITY;
        for c in &self.contacts {
            if !(c.start < c.end && c.start >= 0.0 && c.end <= self.duration_s) {
                return bad(format!("contact [{}, {}] not inside the session", c.start, c.end));
            }
            if c.start < prev_end {
                return bad("contacts overlap or are not ordered".into());
            }
            if !(c.amplitude > 0.0 && c.amplitude <= 1.0) {
                return bad(format!("contact amplitude {} not in (0, 1]", c.amplitude));
            }
            prev_end = c.end;
        }
        for d in &self.dropouts {
            if !(d.duration > 0.0 && d.start >= 0.0) {
                return bad("dropouts need a positive duration".into());
            }
        }
        Ok(())
    }

    /// Seeded script with contacts covering exactly `contact_fraction` of the
    /// session, alternating with releases of jittered length.
    pub fn randomized(seed: u64, p: &RandomSession) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = p.contact_fraction.clamp(0.0, 1.0);
        let n = ((p.duration_s / p.cycle_s).floor() as usize).max(1);
        let mut contacts_len: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        let mut gaps: Vec<f64> = (0..=n).map(|_| rng.random_range(0.5..1.5)).collect();
        let total_c: f64 = contacts_len.iter().sum();
        let total_g: f64 = gaps.iter().sum();
        contacts_len.iter_mut().for_each(|d| *d *= f * p.duration_s / total_c);
        gaps.iter_mut().for_each(|g| *g *= (1.0 - f) * p.duration_s / total_g);
        let mut contacts = Vec::with_capacity(n);
        let mut t = gaps[0];
        for k in 0..n {
            let d = contacts_len[k].min(MAX_CONTACT_S);
            if d > 0.0 {
                contacts.push(ContactInterval { start: t, end: t + d, amplitude: rng.random_range(0.35..0.65) });
            }
            t += contacts_len[k] + gaps[k + 1];
        }
        let dead = (rng.random::<f64>() < p.dead_channel_prob).then(|| rng.random_range(0..CHANNELS));
        let channels = (0..CHANNELS)
            .map(|c| ChannelScript {
                offset: rng.random_range(0.05..0.15),
                slope: rng.random_range(-1.0..1.0) * 0.05 / p.duration_s,
                sin_amplitude: rng.random_range(0.0..0.03),
                sin_period_s: rng.random_range(120.0..600.0),
                sin_phase: rng.random_range(0.0..std::f64::consts::TAU),
                gain: rng.random_range(0.7..1.0),
                dead: dead == Some(c),
                dead_level: rng.random_range(0.05..0.5),
            })
            .collect();
        Self {
            hand: p.hand,
            seed,
            duration_s: p.duration_s,
            sample_rate_hz: p.sample_rate_hz,
            adc_max: 1023.0,
            contacts,
            channels,
            noise_sigma: p.noise_sigma,
            spike_rate_hz: p.spike_rate_hz,
            ramp_samples: 3,
            dropouts: Vec::new(),
            clock_offset: p.clock_offset,
            clock_drift: p.clock_drift,
            fps: p.fps,
            sync_events: 4,
        }
    }

    /// Sum of scripted contact time over the duration.
    pub fn designed_contact_fraction(&self) -> f64 {
        self.contacts.iter().map(|c| c.end - c.start).sum::<f64>() / self.duration_s
    }

    fn in_dropout(&self, t: f64) -> bool {
        self.dropouts.iter().any(|d| t >= d.start && t < d.start + d.duration)
    }

    /// Contact envelope at `t` in `[0, 1]` times the interval amplitude.
    pub fn envelope(&self, t: f64) -> f64 {
        let ramp = self.ramp_samples as f64 * self.period();
        let mut v: f64 = 0.0;
        for c in &self.contacts {
            let w = if ramp > 0.0 {
                let rise = ((t - (c.start - ramp / 2.0)) / ramp).clamp(0.0, 1.0);
                let fall = (((c.end + ramp / 2.0) - t) / ramp).clamp(0.0, 1.0);
                rise.min(fall)
            } else if t >= c.start && t < c.end {
                1.0
            } else {
                0.0
            };
            v = v.max(w * c.amplitude);
        }
        v
    }

    pub fn is_contact(&self, t: f64) -> bool {
        self.contacts.iter().any(|c| t >= c.start && t < c.end)
    }

    /// Truth per frame of `timeline`, decided at the frame midpoint mapped to
    /// the device clock; Excluded outside `[t_first, t_last]` or in a dropout.
    pub fn frame_truth(&self, timeline: &FrameTimeline, t_first: f64, t_last: f64) -> Vec<ContactState> {
        let clock = self.clock();
        timeline
            .t_video
            .iter()
            .enumerate()
            .map(|(f, &tv)| {
                let td = clock.to_device(0.5 * (tv + timeline.frame_end(f)));
                if td < t_first || td > t_last || self.in_dropout(td) {
                    ContactState::Excluded
                } else if self.is_contact(td) {
                    ContactState::Contact
                } else {
                    ContactState::NoContact
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSession {
    pub session: SensorSession,
    /// Contact/NoContact segments tiling the sampled span on the device clock.
    pub truth: Vec<ContactSegment>,
    pub timeline: FrameTimeline,
    /// Per-frame truth, decided at the frame midpoint; Excluded outside the
    /// sampled span or inside a dropout.
    pub frame_truth: Vec<ContactState>,
    pub events_device: Vec<f64>,
    pub events_video: Vec<f64>,
}

fn truth_segments(script: &SessionScript, t_first: f64, t_last: f64) -> Vec<ContactSegment> {
    let mut out: Vec<ContactSegment> = Vec::new();
    let mut push = |start: f64, end: f64, state: ContactState| {
        let (start, end) = (start.max(t_first), end.min(t_last));
        if end > start {
            out.push(ContactSegment { start_t: start, end_t: end, state });
        }
    };
    let mut cursor = t_first;
    for c in &script.contacts {
        push(cursor, c.start, ContactState::NoContact);
        push(c.start, c.end, ContactState::Contact);
        cursor = cursor.max(c.end);
    }
    push(cursor, t_last, ContactState::NoContact);
    out
}

/// Renders a script into raw sensor samples plus ground truth.
pub fn generate_session(script: &SessionScript) -> Result<SyntheticSession> {
    script.validate()?;
    let dt = script.period();
    let n_total = (script.duration_s * script.sample_rate_hz).round() as usize + 1;
    let times: Vec<f64> = (0..n_total).map(|i| i as f64 * dt).filter(|t| !script.in_dropout(*t)).collect();
    if times.is_empty() {
        return Err(Error::Config("session script produces no samples".into()));
    }
    let adc = script.adc_max;
    let chans = script.channel_scripts();
    let noise = Normal::new(0.0, script.noise_sigma.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;

    let mut values: Vec<Vec<f64>> = Vec::with_capacity(CHANNELS);
    for (c, ch) in chans.iter().enumerate() {
        // an independent stream per channel keeps channels reproducible in isolation
        let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
        rng.set_stream(c as u64 + 1);
        if ch.dead {
            let level = (ch.dead_level * adc).round().clamp(0.0, adc);
            values.push(vec![level; times.len()]);
            continue;
        }
        let mut spikes = vec![false; times.len()];
        if script.spike_rate_hz > 0.0 {
            let gaps = Exp::new(script.spike_rate_hz).map_err(|e| Error::Config(e.to_string()))?;
            let mut t = gaps.sample(&mut rng);
            while t < script.duration_s {
                let i = times.partition_point(|x| *x < t);
                if i < times.len() {
                    spikes[i] = true;
                }
                t += gaps.sample(&mut rng);
            }
        }
        let v = times
            .iter()
            .zip(&spikes)
            .map(|(&t, &spike)| {
                let drift = ch.offset
                    + ch.slope * t
                    + ch.sin_amplitude * (std::f64::consts::TAU * t / ch.sin_period_s + ch.sin_phase).sin();
                let mut x = drift + ch.gain * script.envelope(t);
                if script.noise_sigma > 0.0 {
                    x += noise.sample(&mut rng);
                }
                if spike {
                    x += rng.random_range(0.5..=1.0);
                }
                (x * adc).round().clamp(0.0, adc)
            })
            .collect();
        values.push(v);
    }

    let samples: Vec<SensorSample> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| SensorSample { t_device: t, channels: std::array::from_fn(|c| values[c][i]) })
        .collect();
    let session = SensorSession::new(script.hand, script.sample_rate_hz, adc, samples)?;

    let (t_first, t_last) = (times[0], times[times.len() - 1]);
    let truth = truth_segments(script, t_first, t_last);

    let clock = script.clock();
    let v_first = clock.to_video(t_first);
    let n_frames = ((clock.to_video(t_last) - v_first) * script.fps).floor() as usize;
    let timeline = FrameTimeline::uniform(n_frames, script.fps, v_first);
    let frame_truth = script.frame_truth(&timeline, t_first, t_last);

    let k = script.sync_events;
    let events_device: Vec<f64> = (0..k).map(|j| t_first + (t_last - t_first) * (j as f64 + 0.5) / k as f64).collect();
    let events_video = events_device.iter().map(|&t| clock.to_video(t)).collect();

    Ok(SyntheticSession { session, truth, timeline, frame_truth, events_device, events_video })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain(contacts: Vec<ContactInterval>) -> SessionScript {
        SessionScript {
            hand: Hand::Left,
            seed: 7,
            duration_s: 20.0,
            sample_rate_hz: 100.0,
            adc_max: 1000.0,
            contacts,
            channels: Vec::new(),
            noise_sigma: 0.0,
            spike_rate_hz: 0.0,
            ramp_samples: 3,
            dropouts: Vec::new(),
            clock_offset: 0.0,
            clock_drift: 0.0,
            fps: 10.0,
            sync_events: 4,
        }
    }

    #[test]
    fn clean_plateau() {
        let s = plain(vec![ContactInterval { start: 5.0, end: 8.0, amplitude: 0.5 }]);
        let out = generate_session(&s).unwrap();
        let ch = out.session.channel(0);
        assert_eq!(ch[400], 100.0);
        assert!(ch[502..799].iter().all(|v| *v == 600.0));
        assert_eq!(ch[900], 100.0);
        // ramp is centered on the boundary
        assert_eq!(ch[500], 350.0);
        assert_eq!(out.truth.len(), 3);
        assert_eq!(out.truth[1], ContactSegment { start_t: 5.0, end_t: 8.0, state: ContactState::Contact });
    }

    #[test]
    fn deterministic() {
        let p = RandomSession { duration_s: 60.0, ..Default::default() };
        let a = generate_session(&SessionScript::randomized(3, &p)).unwrap();
        let b = generate_session(&SessionScript::randomized(3, &p)).unwrap();
        assert_eq!(a, b);
        let c = generate_session(&SessionScript::randomized(4, &p)).unwrap();
        assert_ne!(a.session, c.session);
    }

    #[test]
    fn randomized_hits_fraction() {
        let p = RandomSession::default();
        for seed in 0..5 {
            let s = SessionScript::randomized(seed, &p);
            assert!((s.designed_contact_fraction() - 0.45).abs() < 1e-9);
            let out = generate_session(&s).unwrap();
            let f = crate::labeling::contact_fraction(&out.frame_truth).unwrap();
            assert!((f - 0.45).abs() < 0.01, "{f}");
        }
    }

    #[test]
    fn dropouts_remove_samples() {
        let mut s = plain(vec![]);
        s.dropouts.push(Dropout { start: 10.0, duration: 1.0 });
        let out = generate_session(&s).unwrap();
        assert_eq!(out.session.len(), 2001 - 100);
        assert!(out.frame_truth[105] == ContactState::Excluded);
    }

    #[test]
    fn script_round_trips() {
        let s = SessionScript::randomized(1, &RandomSession { duration_s: 60.0, ..Default::default() });
        assert_eq!(SessionScript::from_toml_str(&s.to_toml()).unwrap(), s);
        assert!(SessionScript::from_toml_str("hand = \"left\"\nseed = 1\nduration_s = 5\nbogus = 1\n").is_err());
        let r = SessionScript::from_toml_str("seed = 9\n[random]\nduration_s = 60.0\nhand = \"left\"\n").unwrap();
        assert_eq!(
            r,
            SessionScript::randomized(9, &RandomSession { duration_s: 60.0, hand: Hand::Left, ..Default::default() })
        );
        assert!(SessionScript::from_toml_str("seed = 9\nfps = 3.0\n[random]\n").is_err());
    }
}
