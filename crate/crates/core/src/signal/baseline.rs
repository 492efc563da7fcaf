use crate::exec::Execution;
use crate::stats::{centered_bounds, RankWindow, Ranking};
use crate::{Error, Result};

/// Centered rolling percentile (truncated at the edges) with linear
/// interpolation between order statistics.
///
/// Runs in O(n log n) with a rank-indexed Fenwick window. The parallel path
/// splits the output into blocks, each with its own window.
pub fn rolling_percentile_baseline(x: &[f64], window: usize, percentile: f64, exec: Execution) -> Result<Vec<f64>> {
    if window < 3 {
        return Err(Error::Config(format!("baseline window must be at least 3 samples, got {window}")));
    }
    if !(percentile > 0.0 && percentile < 1.0) {
        return Err(Error::Config(format!("baseline percentile must lie in (0, 1), got {percentile}")));
    }
    let n = x.len();
    let mut out = vec![0.0; n];
    let ranking = Ranking::new(x);
    let block = (n / 8).max(16_384);
    exec.fill_chunks(&mut out, block, |offset, chunk| {
        let mut ranks = RankWindow::new(&ranking);
        let (mut cur_lo, mut cur_hi) = centered_bounds(offset, window, n);
        for j in cur_lo..cur_hi {
            ranks.insert(j);
        }
        for (k, slot) in chunk.iter_mut().enumerate() {
            let (lo, hi) = centered_bounds(offset + k, window, n);
            while cur_hi < hi {
                ranks.insert(cur_hi);
                cur_hi += 1;
            }
            while cur_lo < lo {
                ranks.remove(cur_lo);
                cur_lo += 1;
            }
            *slot = ranks.percentile(percentile);
        }
    });
    Ok(out)
}

/// `max(x - baseline, 0)` elementwise.
pub fn subtract_baseline_clip(x: &[f64], baseline: &[f64]) -> Result<Vec<f64>> {
    if x.len() != baseline.len() {
        return Err(Error::Structural(format!(
            "signal length {} does not match baseline length {}",
            x.len(),
            baseline.len()
        )));
    }
    Ok(x.iter().zip(baseline).map(|(v, b)| (v - b).max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_in_constant_out() {
        let out = rolling_percentile_baseline(&[3.5; 50], 9, 0.1, Execution::Sequential).unwrap();
        assert!(out.iter().all(|&v| v == 3.5));
    }

    #[test]
    fn median_ignores_spike() {
        let x = [0.0, 0.0, 0.0, 10.0, 0.0, 0.0, 0.0];
        let out = rolling_percentile_baseline(&x, 7, 0.5, Execution::Sequential).unwrap();
        assert_eq!(out, vec![0.0; 7]);
    }

    #[test]
    fn ramp_tracks_center() {
        let x: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let out = rolling_percentile_baseline(&x, 11, 0.5, Execution::Sequential).unwrap();
        for i in 5..95 {
            assert_eq!(out[i], i as f64);
        }
        // truncated edge windows lag toward the interior by at most the half-width
        assert_eq!(out[0], 2.5);
        assert_eq!(out[99], 96.5);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(rolling_percentile_baseline(&[1.0; 5], 2, 0.5, Execution::Sequential).is_err());
        assert!(rolling_percentile_baseline(&[1.0; 5], 5, 1.0, Execution::Sequential).is_err());
        assert!(rolling_percentile_baseline(&[1.0; 5], 5, 0.0, Execution::Sequential).is_err());
    }

    #[test]
    fn clip_subtraction() {
        assert_eq!(subtract_baseline_clip(&[3.0, 1.0], &[2.0, 2.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(subtract_baseline_clip(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(subtract_baseline_clip(&[1.0], &[]), Err(Error::Structural(_))));
    }
}
