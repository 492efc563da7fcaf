use crate::stats::percentile;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub values: Vec<f64>,
    pub scale: f64,
    pub dead: bool,
}

/// Divides `x` by its `p`-th percentile over the non-excluded samples.
///
/// A channel whose scale falls below `scale_floor`, or that has no usable
/// samples, is declared dead and returned as all zeros.
pub fn percentile_normalize(x: &[f64], excluded: &[bool], p: f64, scale_floor: f64) -> Result<Normalized> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Config(format!("normalization percentile must lie in (0, 1), got {p}")));
    }
    if x.len() != excluded.len() {
        return Err(Error::Structural("mask length does not match signal".into()));
    }
    let usable: Vec<f64> = x.iter().zip(excluded).filter(|(_, e)| !**e).map(|(v, _)| *v).collect();
    let dead = |scale| Normalized { values: vec![0.0; x.len()], scale, dead: true };
    let Some(scale) = percentile(&usable, p) else {
        return Ok(dead(0.0));
    };
    if !(scale >= scale_floor) || scale <= 0.0 {
        return Ok(dead(scale));
    }
    Ok(Normalized { values: x.iter().map(|v| v / scale).collect(), scale, dead: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_channel() {
        let n = percentile_normalize(&[0.4; 10], &[false; 10], 0.995, 1e-3).unwrap();
        assert_eq!(n.scale, 0.4);
        assert!(n.values.iter().all(|v| *v == 1.0));
        assert!(!n.dead);
    }

    #[test]
    fn ramp_scale_between_order_statistics() {
        let x: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
        let n = percentile_normalize(&x, &vec![false; 1000], 0.995, 1e-3).unwrap();
        // order statistics 994 and 995, interpolated at 0.005
        let expected = 994.0 / 999.0 + 0.005 * (1.0 / 999.0);
        assert!((n.scale - expected).abs() < 1e-12);
        assert!((n.scale - 0.99499).abs() < 1e-5);
        assert!((n.values[999] - 1.00503).abs() < 1e-5);
    }

    #[test]
    fn zero_channel_is_dead() {
        let n = percentile_normalize(&[0.0; 20], &[false; 20], 0.995, 1e-3).unwrap();
        assert!(n.dead);
        assert!(n.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn fully_excluded_is_dead() {
        let n = percentile_normalize(&[1.0; 20], &[true; 20], 0.995, 1e-3).unwrap();
        assert!(n.dead);
    }

    #[test]
    fn excluded_samples_do_not_set_scale() {
        let x = [1.0, 1.0, 1.0, 100.0];
        let n = percentile_normalize(&x, &[false, false, false, true], 0.995, 1e-3).unwrap();
        assert_eq!(n.scale, 1.0);
        assert_eq!(n.values[3], 100.0);
    }
}
