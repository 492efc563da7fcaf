use crate::exec::Execution;
use crate::{Error, Result};

/// Unnormalized Gaussian taps `exp(-k^2 / 2 sigma^2)` for `k` in `-r..=r`,
/// with `r = ceil(4 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil() as isize;
    (-radius..=radius).map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp()).collect()
}

/// Discrete Gaussian convolution; the kernel is truncated at ±4σ and
/// renormalized over the in-range taps, so constants survive at the edges.
pub fn gaussian_smooth(x: &[f64], sigma: f64, exec: Execution) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Config(format!("gaussian sigma must be positive, got {sigma}")));
    }
    let kernel = gaussian_kernel(sigma);
    let radius = kernel.len() / 2;
    let n = x.len();
    let mut out = vec![0.0; n];
    exec.fill_chunks(&mut out, 8192, |offset, chunk| {
        for (k, slot) in chunk.iter_mut().enumerate() {
            let i = offset + k;
            let lo = i.saturating_sub(radius);
            let hi = (i + radius + 1).min(n);
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for j in lo..hi {
                let w = kernel[j + radius - i];
                acc += w * x[j];
                wsum += w;
            }
            *slot = acc / wsum;
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_constants() {
        for sigma in [0.3, 1.0, 3.0, 7.5] {
            let out = gaussian_smooth(&[2.75; 40], sigma, Execution::Sequential).unwrap();
            assert!(out.iter().all(|v| (v - 2.75).abs() < 1e-12), "sigma {sigma}");
        }
    }

    #[test]
    fn impulse_response_is_normalized_kernel() {
        let mut x = vec![0.0; 101];
        x[50] = 1.0;
        let out = gaussian_smooth(&x, 2.0, Execution::Sequential).unwrap();
        // independent evaluation of the sampled Gaussian
        let taps: Vec<f64> = (-8i32..=8).map(|k| (-(k * k) as f64 / 8.0).exp()).collect();
        let total: f64 = taps.iter().sum();
        for (k, t) in taps.iter().enumerate() {
            assert!((out[42 + k] - t / total).abs() < 1e-15);
        }
        assert_eq!(out[41], 0.0);
        assert_eq!(out[59], 0.0);
    }

    #[test]
    fn single_sample() {
        assert_eq!(gaussian_smooth(&[4.0], 3.0, Execution::Sequential).unwrap(), vec![4.0]);
    }

    #[test]
    fn rejects_non_positive_sigma() {
        assert!(matches!(gaussian_smooth(&[1.0], 0.0, Execution::Sequential), Err(Error::Config(_))));
        assert!(gaussian_smooth(&[1.0], -1.0, Execution::Sequential).is_err());
    }
}
