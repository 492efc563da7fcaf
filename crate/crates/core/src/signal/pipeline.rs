use super::{
    consolidate_geometric_mean, dilate, dropout_mask, exclusion_mask, gaussian_smooth, hampel_filter_report,
    percentile_normalize, rolling_percentile_baseline, subtract_baseline_clip, ChannelMask, ConsolidatedSignal,
    HampelParams, SensorSession, CHANNELS,
};
use crate::exec::Execution;
use crate::{Error, Result};

/// Conditioning parameters. Windows are in seconds and converted with the
/// session's measured median sample period; thresholds on raw counts are
/// fractions of `adc_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditioningParams {
    pub hampel: HampelParams,
    pub gaussian_sigma: f64,
    pub baseline_window_s: f64,
    pub baseline_percentile: f64,
    pub rms_window_s: f64,
    pub rms_max_frac: f64,
    pub baseline_jump_max_frac: f64,
    pub normalize_percentile: f64,
    pub scale_floor_frac: f64,
    pub dead_variance: f64,
    pub gm_eps: f64,
    pub dropout_factor: f64,
}

impl Default for ConditioningParams {
    fn default() -> Self {
        Self {
            hampel: HampelParams::default(),
            gaussian_sigma: 3.0,
            baseline_window_s: 30.0,
            baseline_percentile: 0.10,
            rms_window_s: 1.0,
            rms_max_frac: 0.9,
            baseline_jump_max_frac: 0.01,
            normalize_percentile: 0.995,
            scale_floor_frac: 1e-3,
            dead_variance: 1e-12,
            gm_eps: 1e-6,
            dropout_factor: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDiagnostics {
    pub hampel_replaced: usize,
    pub hampel_passes: usize,
    pub raw_mean: f64,
    pub raw_variance: f64,
    pub baseline_min: f64,
    pub baseline_max: f64,
    pub max_baseline_step: f64,
    pub subtracted_mean: f64,
    pub excluded_samples: usize,
    pub scale: f64,
    pub dead: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conditioned {
    pub signal: ConsolidatedSignal,
    pub mask: ChannelMask,
    pub normalized: [Vec<f64>; CHANNELS],
    pub diagnostics: [ChannelDiagnostics; CHANNELS],
    pub period: f64,
    pub baseline_window: usize,
    pub rms_window: usize,
    pub dropout_samples: usize,
    /// Every channel read exactly zero for the whole session: the glove never
    /// registered load, so the consolidated signal is all zero.
    pub quiet: bool,
}

struct ChannelOutput {
    normalized: Vec<f64>,
    excluded: Vec<bool>,
    diag: ChannelDiagnostics,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    if x.is_empty() {
        return (0.0, 0.0);
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

fn condition_channel(
    raw: &[f64],
    dropouts: &[bool],
    adc_max: f64,
    baseline_window: usize,
    rms_window: usize,
    p: &ConditioningParams,
    exec: Execution,
) -> Result<ChannelOutput> {
    let hampel = hampel_filter_report(raw, p.hampel, exec)?;
    let despiked = hampel.values;
    let hampel_replaced = raw.iter().zip(&despiked).filter(|(a, b)| a != b).count();
    let smoothed = gaussian_smooth(&despiked, p.gaussian_sigma, exec)?;
    let baseline = rolling_percentile_baseline(&smoothed, baseline_window, p.baseline_percentile, exec)?;
    let subtracted = subtract_baseline_clip(&smoothed, &baseline)?;
    let mut excluded = exclusion_mask(
        &smoothed,
        &baseline,
        rms_window,
        p.rms_max_frac * adc_max,
        p.baseline_jump_max_frac * adc_max,
        exec,
    )?;
    let gaps = dilate(dropouts, rms_window / 2);
    for (e, g) in excluded.iter_mut().zip(&gaps) {
        *e |= *g;
    }
    let (raw_mean, raw_variance) = mean_var(raw);
    let mut norm = percentile_normalize(&subtracted, &excluded, p.normalize_percentile, p.scale_floor_frac * adc_max)?;
    if !norm.dead && raw_variance < p.dead_variance {
        norm.values.iter_mut().for_each(|v| *v = 0.0);
        norm.dead = true;
    }
    let diag = ChannelDiagnostics {
        hampel_replaced,
        hampel_passes: hampel.passes,
        raw_mean,
        raw_variance,
        baseline_min: baseline.iter().copied().fold(f64::INFINITY, f64::min),
        baseline_max: baseline.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        max_baseline_step: baseline.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max),
        subtracted_mean: mean_var(&subtracted).0,
        excluded_samples: excluded.iter().filter(|e| **e).count(),
        scale: norm.scale,
        dead: norm.dead,
    };
    if norm.dead {
        excluded.iter_mut().for_each(|e| *e = true);
    }
    Ok(ChannelOutput { normalized: norm.values, excluded, diag })
}

/// Runs the full conditioning chain on every channel and consolidates.
///
/// Fails with [`Error::SessionUnusable`] when every channel is dead.
pub fn run_conditioning(session: &SensorSession, params: &ConditioningParams, exec: Execution) -> Result<Conditioned> {
    session.validate()?;
    let t = session.times();
    let period = session.period();
    let to_samples = |secs: f64| (secs / period).round() as usize;
    let baseline_window = to_samples(params.baseline_window_s).max(3);
    let rms_window = to_samples(params.rms_window_s).max(2);
    if session.is_empty() {
        return Err(Error::SessionUnusable);
    }
    let dropouts = dropout_mask(&t, period, params.dropout_factor);
    let dropout_samples = dropouts.iter().filter(|d| **d).count();

    let raw: Vec<Vec<f64>> = (0..CHANNELS).map(|c| session.channel(c)).collect();
    // channels in parallel; the kernels inside run sequentially to avoid nested splitting
    let outputs = exec.map_slice(&raw, |ch| {
        condition_channel(ch, &dropouts, session.adc_max, baseline_window, rms_window, params, Execution::Sequential)
    });
    let mut channels = Vec::with_capacity(CHANNELS);
    for o in outputs {
        channels.push(o?);
    }

    let mask = ChannelMask {
        excluded: std::array::from_fn(|c| channels[c].excluded.clone()),
        dead: std::array::from_fn(|c| channels[c].diag.dead),
    };
    let diagnostics: [ChannelDiagnostics; CHANNELS] = std::array::from_fn(|c| channels[c].diag.clone());
    let normalized: [Vec<f64>; CHANNELS] = std::array::from_fn(|c| std::mem::take(&mut channels[c].normalized));
    let quiet = mask.dead.iter().all(|d| *d) && raw.iter().all(|ch| ch.iter().all(|v| *v == 0.0));
    let signal = if quiet {
        let gaps = dilate(&dropouts, rms_window / 2);
        ConsolidatedSignal { t_device: t, value: vec![0.0; gaps.len()], excluded: gaps }
    } else {
        consolidate_geometric_mean(&t, &normalized, &mask, params.gm_eps)?
    };
    Ok(Conditioned {
        signal,
        mask,
        normalized,
        diagnostics,
        period,
        baseline_window,
        rms_window,
        dropout_samples,
        quiet,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SensorSample;
    use crate::Hand;

    fn session(n: usize, f: impl Fn(usize, usize) -> f64) -> SensorSession {
        let samples = (0..n)
            .map(|i| SensorSample { t_device: i as f64 * 0.01, channels: std::array::from_fn(|c| f(i, c)) })
            .collect();
        SensorSession::new(Hand::Left, 100.0, 1000.0, samples).unwrap()
    }

    #[test]
    fn constant_zero_session_is_quiet() {
        let s = session(500, |_, _| 0.0);
        let out = run_conditioning(&s, &ConditioningParams::default(), Execution::Sequential).unwrap();
        assert!(out.quiet);
        assert!(out.signal.value.iter().all(|v| *v == 0.0));
        assert!(out.signal.excluded.iter().all(|e| !e));
    }

    #[test]
    fn all_dead_session_is_unusable() {
        // every sensor railed at a constant reading
        let s = session(500, |_, c| 100.0 + c as f64);
        assert!(matches!(
            run_conditioning(&s, &ConditioningParams::default(), Execution::Sequential),
            Err(Error::SessionUnusable)
        ));
    }

    #[test]
    fn plateau_recovered_in_place() {
        // clean plateau on a flat floor, 60 s at 100 Hz
        let s = session(6000, |i, _| if (2000..2600).contains(&i) { 600.0 } else { 100.0 });
        let out = run_conditioning(&s, &ConditioningParams::default(), Execution::Sequential).unwrap();
        let v = &out.signal.value;
        assert!(v[2010..2590].iter().all(|x| *x > 0.9));
        assert!(v[..1980].iter().all(|x| *x < 0.01));
        assert!(v[2620..].iter().all(|x| *x < 0.01));
        assert!(out.signal.excluded.iter().all(|e| !e));
    }

    #[test]
    fn one_flat_channel_is_dropped() {
        let s = session(3000, |i, c| {
            if c == 2 {
                350.0
            } else if (1000..1400).contains(&i) {
                700.0
            } else {
                50.0
            }
        });
        let out = run_conditioning(&s, &ConditioningParams::default(), Execution::Sequential).unwrap();
        assert!(out.mask.dead[2]);
        assert_eq!(out.mask.dead.iter().filter(|d| **d).count(), 1);
        assert!(out.signal.value[1100] > 0.9);
        assert!(out.signal.excluded.iter().all(|e| !e));
    }

    #[test]
    fn dropout_gap_is_excluded() {
        let mut samples: Vec<SensorSample> = (0..3000)
            .map(|i| SensorSample {
                t_device: i as f64 * 0.01,
                channels: [if (500..900).contains(&i) { 500.0 } else { 100.0 }; 6],
            })
            .collect();
        for s in samples.iter_mut().skip(1500) {
            s.t_device += 1.0;
        }
        let s = SensorSession::new(Hand::Right, 100.0, 1000.0, samples).unwrap();
        let out = run_conditioning(&s, &ConditioningParams::default(), Execution::Sequential).unwrap();
        assert_eq!(out.dropout_samples, 2);
        assert!(out.signal.excluded[1499] && out.signal.excluded[1500]);
        assert!(out.signal.excluded[1450] && !out.signal.excluded[1440]);
    }
}
