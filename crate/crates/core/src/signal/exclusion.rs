use crate::exec::Execution;
use crate::stats::centered_bounds;
use crate::{Error, Result};

/// Centered rolling root-mean-square, truncated at the edges.
pub fn rolling_rms(x: &[f64], window: usize, exec: Execution) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    exec.fill_chunks(&mut out, 8192, |offset, chunk| {
        for (k, slot) in chunk.iter_mut().enumerate() {
            let (lo, hi) = centered_bounds(offset + k, window, n);
            let sum_sq: f64 = x[lo..hi].iter().map(|v| v * v).sum();
            *slot = (sum_sq / (hi - lo) as f64).sqrt();
        }
    });
    out
}

/// Grow every `true` run by `radius` samples on each side.
pub fn dilate(mask: &[bool], radius: usize) -> Vec<bool> {
    let n = mask.len();
    let mut out = vec![false; n];
    // difference array over covered spans
    let mut cover = vec![0i32; n + 1];
    for (i, _) in mask.iter().enumerate().filter(|(_, m)| **m) {
        cover[i.saturating_sub(radius)] += 1;
        cover[(i + radius + 1).min(n)] -= 1;
    }
    let mut run = 0;
    for i in 0..n {
        run += cover[i];
        out[i] = run > 0;
    }
    out
}

/// Flags both samples bordering any timestamp gap longer than
/// `factor * period`. Gaps are never filled in.
pub fn dropout_mask(t: &[f64], period: f64, factor: f64) -> Vec<bool> {
    let mut out = vec![false; t.len()];
    for i in 1..t.len() {
        if t[i] - t[i - 1] > factor * period {
            out[i - 1] = true;
            out[i] = true;
        }
    }
    out
}

/// Marks samples whose rolling RMS of `x - baseline` exceeds `rms_max`, or
/// where the baseline jumps by more than `baseline_jump_max` from the previous
/// sample. Flagged regions are dilated by `rms_window / 2` on each side.
pub fn exclusion_mask(
    x: &[f64],
    baseline: &[f64],
    rms_window: usize,
    rms_max: f64,
    baseline_jump_max: f64,
    exec: Execution,
) -> Result<Vec<bool>> {
    if rms_window < 2 {
        return Err(Error::Config(format!("rms window must be at least 2 samples, got {rms_window}")));
    }
    if x.len() != baseline.len() {
        return Err(Error::Structural(format!(
            "signal length {} does not match baseline length {}",
            x.len(),
            baseline.len()
        )));
    }
    let residual: Vec<f64> = x.iter().zip(baseline).map(|(v, b)| v - b).collect();
    let rms = rolling_rms(&residual, rms_window, exec);
    let raw: Vec<bool> = (0..x.len())
        .map(|i| rms[i] > rms_max || (i > 0 && (baseline[i] - baseline[i - 1]).abs() > baseline_jump_max))
        .collect();
    Ok(dilate(&raw, rms_window / 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_signal_not_excluded() {
        let m = exclusion_mask(&[0.0; 100], &[0.0; 100], 10, 1.0, 1.0, Execution::Sequential).unwrap();
        assert!(m.iter().all(|v| !v));
    }

    #[test]
    fn baseline_step_is_dilated() {
        let n = 200;
        let j = 100;
        let jump = 0.5;
        let baseline: Vec<f64> = (0..n).map(|i| if i < j { 0.0 } else { 10.0 * jump }).collect();
        let m = exclusion_mask(&baseline, &baseline, 20, 1e9, jump, Execution::Sequential).unwrap();
        for (i, &e) in m.iter().enumerate() {
            assert_eq!(e, (90..=110).contains(&i), "sample {i}");
        }
    }

    #[test]
    fn sustained_rms_region() {
        let n = 300;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                if (100..200).contains(&i) {
                    if i % 2 == 0 {
                        5.0
                    } else {
                        -5.0
                    }
                } else {
                    0.0
                }
            })
            .collect();
        let m = exclusion_mask(&x, &vec![0.0; n], 10, 2.0, 1e9, Execution::Sequential).unwrap();
        // brute force: rms > 2 needs more than 4 of the 10 window samples inside the burst
        let rms = rolling_rms(&x, 10, Execution::Sequential);
        let raw: Vec<bool> = rms.iter().map(|r| *r > 2.0).collect();
        for i in 0..n {
            let lo = i.saturating_sub(5);
            let hi = (i + 5).min(n - 1);
            let expect = (lo..=hi).any(|j| raw[j]);
            assert_eq!(m[i], expect, "sample {i}");
        }
        assert!(m[100..200].iter().all(|v| *v));
        assert!(!m[0] && !m[n - 1]);
    }

    #[test]
    fn dilate_edges() {
        let m = dilate(&[false, false, true, false, false, false], 1);
        assert_eq!(m, vec![false, true, true, true, false, false]);
        assert_eq!(dilate(&[true, false, false], 5), vec![true; 3]);
        assert!(dilate(&[], 3).is_empty());
    }

    #[test]
    fn dropouts_flag_gap_borders() {
        let t = [0.0, 0.01, 0.02, 0.2, 0.21];
        assert_eq!(dropout_mask(&t, 0.01, 5.0), vec![false, false, true, true, false]);
    }
}
