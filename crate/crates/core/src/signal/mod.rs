//! Conditioning of raw piezoresistive glove streams.
//!
//! Stage order is fixed: Hampel → Gaussian → rolling baseline →
//! subtract-and-clip → exclusion mask → percentile normalization →
//! geometric mean. See [`run_conditioning`].

mod baseline;
mod consolidate;
mod exclusion;
mod hampel;
mod normalize;
mod pipeline;
mod smooth;

pub use baseline::{rolling_percentile_baseline, subtract_baseline_clip};
pub use consolidate::consolidate_geometric_mean;
pub use exclusion::{dilate, dropout_mask, exclusion_mask, rolling_rms};
pub use hampel::{hampel_filter, hampel_filter_report, hampel_pass, HampelOutput, HampelParams, MAD_SCALE};
pub use normalize::{percentile_normalize, Normalized};
pub use pipeline::{run_conditioning, ChannelDiagnostics, Conditioned, ConditioningParams};
pub use smooth::{gaussian_kernel, gaussian_smooth};

use crate::{Error, Hand, Result};

pub const CHANNELS: usize = 6;
pub const CHANNEL_NAMES: [&str; CHANNELS] = ["thumb", "index", "middle", "ring", "pinky", "palm"];

#[derive(Debug, Clone, PartialEq)]
pub struct SensorSample {
    /// Glove clock, seconds.
    pub t_device: f64,
    /// Raw ADC counts: thumb, index, middle, ring, pinky, palm.
    pub channels: [f64; CHANNELS],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorSession {
    pub hand: Hand,
    pub sample_rate_hz: f64,
    pub adc_max: f64,
    pub samples: Vec<SensorSample>,
}

impl SensorSession {
    pub fn new(hand: Hand, sample_rate_hz: f64, adc_max: f64, samples: Vec<SensorSample>) -> Result<Self> {
        let s = Self { hand, sample_rate_hz, adc_max, samples };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::Schema(format!("sample rate {} must be positive", self.sample_rate_hz)));
        }
        if !(self.adc_max > 0.0 && self.adc_max.is_finite()) {
            return Err(Error::Schema(format!("adc_max {} must be positive", self.adc_max)));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if !s.t_device.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
            if i > 0 && s.t_device <= self.samples[i - 1].t_device {
                return Err(Error::Schema(format!(
                    "sample {i}: timestamps must be strictly increasing ({} after {})",
                    s.t_device,
                    self.samples[i - 1].t_device
                )));
            }
            for (c, &v) in s.channels.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { index: i });
                }
                if v < 0.0 || v > self.adc_max {
                    return Err(Error::Schema(format!(
                        "sample {i} channel {c}: reading {v} outside [0, {}]",
                        self.adc_max
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t_device).collect()
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.channels[c]).collect()
    }

    /// Sample period measured from the stream, falling back to the nominal rate.
    pub fn period(&self) -> f64 {
        crate::stats::median_period(&self.times()).filter(|p| *p > 0.0).unwrap_or(1.0 / self.sample_rate_hz)
    }
}

/// Per-sample, per-channel exclusion flags. `true` means excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMask {
    pub excluded: [Vec<bool>; CHANNELS],
    pub dead: [bool; CHANNELS],
}

impl ChannelMask {
    pub fn len(&self) -> usize {
        self.excluded[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsolidatedSignal {
    pub t_device: Vec<f64>,
    pub value: Vec<f64>,
    pub excluded: Vec<bool>,
}

impl ConsolidatedSignal {
    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}
