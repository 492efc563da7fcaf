use super::{ChannelMask, ConsolidatedSignal, CHANNELS};
use crate::{Error, Result};

/// Geometric mean of the live channels, `exp(mean(ln(max(v, eps))))`.
///
/// Dead channels do not enter the mean; a sample is excluded when any live
/// channel is masked there.
pub fn consolidate_geometric_mean(
    t_device: &[f64],
    channels: &[Vec<f64>; CHANNELS],
    mask: &ChannelMask,
    eps: f64,
) -> Result<ConsolidatedSignal> {
    let live: Vec<usize> = (0..CHANNELS).filter(|&c| !mask.dead[c]).collect();
    if live.is_empty() {
        return Err(Error::SessionUnusable);
    }
    let n = t_device.len();
    for &c in &live {
        if channels[c].len() != n || mask.excluded[c].len() != n {
            return Err(Error::Structural(format!("channel {c} length differs from the timeline")));
        }
    }
    let inv = 1.0 / live.len() as f64;
    let mut value = Vec::with_capacity(n);
    let mut excluded = Vec::with_capacity(n);
    for i in 0..n {
        let log_sum: f64 = live.iter().map(|&c| channels[c][i].max(eps).ln()).sum();
        value.push((log_sum * inv).exp());
        excluded.push(live.iter().any(|&c| mask.excluded[c][i]));
    }
    Ok(ConsolidatedSignal { t_device: t_device.to_vec(), value, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(n: usize, dead: [bool; CHANNELS]) -> ChannelMask {
        ChannelMask { excluded: std::array::from_fn(|_| vec![false; n]), dead }
    }

    #[test]
    fn identical_channels() {
        let ch: [Vec<f64>; CHANNELS] = std::array::from_fn(|_| vec![0.5]);
        let s = consolidate_geometric_mean(&[0.0], &ch, &mask(1, [false; 6]), 1e-6).unwrap();
        assert!((s.value[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dead_channel_excluded() {
        let ch: [Vec<f64>; CHANNELS] = std::array::from_fn(|c| vec![if c == 5 { 0.0 } else { 0.8 }]);
        let mut dead = [false; 6];
        dead[5] = true;
        let s = consolidate_geometric_mean(&[0.0], &ch, &mask(1, dead), 1e-6).unwrap();
        assert!((s.value[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn live_zero_channel_drags_mean() {
        let ch: [Vec<f64>; CHANNELS] = std::array::from_fn(|c| vec![if c == 5 { 0.0 } else { 0.8 }]);
        let s = consolidate_geometric_mean(&[0.0], &ch, &mask(1, [false; 6]), 1e-6).unwrap();
        let oracle = ((5.0 * 0.8f64.ln() + 1e-6f64.ln()) / 6.0).exp();
        assert!((s.value[0] - oracle).abs() < 1e-15);
        assert!((s.value[0] - 0.0830).abs() < 5e-5);
    }

    #[test]
    fn no_live_channels() {
        let ch: [Vec<f64>; CHANNELS] = std::array::from_fn(|_| vec![0.0]);
        assert!(matches!(
            consolidate_geometric_mean(&[0.0], &ch, &mask(1, [true; 6]), 1e-6),
            Err(Error::SessionUnusable)
        ));
    }

    #[test]
    fn exclusion_is_or_of_live_masks() {
        let ch: [Vec<f64>; CHANNELS] = std::array::from_fn(|_| vec![1.0, 1.0]);
        let mut m = mask(2, [false; 6]);
        m.dead[0] = true;
        m.excluded[0][0] = true; // dead, ignored
        m.excluded[3][1] = true;
        let s = consolidate_geometric_mean(&[0.0, 0.01], &ch, &m, 1e-6).unwrap();
        assert_eq!(s.excluded, vec![false, true]);
    }
}
