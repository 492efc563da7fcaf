use crate::exec::Execution;
use crate::stats::{centered_bounds, median_in_place};
use crate::{Error, Result};

/// Gaussian consistency factor turning a MAD into a standard deviation.
pub const MAD_SCALE: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HampelParams {
    pub half_width: usize,
    pub k: f64,
    pub mad_floor: f64,
    /// Upper bound on passes of [`hampel_filter`]; 1 gives the classic single pass.
    pub max_passes: usize,
}

impl Default for HampelParams {
    fn default() -> Self {
        Self { half_width: 5, k: 3.0, mad_floor: 1e-9, max_passes: 1000 }
    }
}

impl HampelParams {
    fn validate(&self) -> Result<()> {
        if self.half_width < 1 {
            return Err(Error::Config("hampel half width must be at least 1".into()));
        }
        if !(self.k > 0.0) {
            return Err(Error::Config("hampel k must be positive".into()));
        }
        if self.max_passes < 1 {
            return Err(Error::Config("hampel max_passes must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HampelOutput {
    pub values: Vec<f64>,
    pub passes: usize,
    /// False when `max_passes` ran out before a fixed point was reached.
    pub converged: bool,
}

struct Scratch {
    window: Vec<f64>,
    dev: Vec<f64>,
}

impl Scratch {
    fn new(width: usize) -> Self {
        Self { window: Vec::with_capacity(width), dev: Vec::with_capacity(width) }
    }

    /// Hampel decision for sample `i` of `x`.
    fn decide(&mut self, x: &[f64], i: usize, params: &HampelParams) -> f64 {
        let (lo, hi) = centered_bounds(i, 2 * params.half_width + 1, x.len());
        self.window.clear();
        self.window.extend_from_slice(&x[lo..hi]);
        let med = median_in_place(&mut self.window);
        self.dev.clear();
        self.dev.extend(x[lo..hi].iter().map(|v| (v - med).abs()));
        let mad = median_in_place(&mut self.dev);
        let scale = (MAD_SCALE * mad).max(params.mad_floor);
        if (x[i] - med).abs() > params.k * scale {
            med
        } else {
            x[i]
        }
    }
}

fn check_input(x: &[f64], params: &HampelParams) -> Result<()> {
    params.validate()?;
    if let Some(index) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

/// One sliding-window Hampel pass.
///
/// Sample `i` is replaced by the median of `x[i-h..=i+h]` (truncated at the
/// edges) when it deviates from that median by more than
/// `k * max(1.4826 * MAD, mad_floor)`. Windows read the unfiltered input.
pub fn hampel_pass(x: &[f64], params: HampelParams, exec: Execution) -> Result<Vec<f64>> {
    check_input(x, &params)?;
    let mut out = vec![0.0; x.len()];
    let width = 2 * params.half_width + 1;
    exec.fill_chunks(&mut out, 4096, |offset, chunk| {
        let mut s = Scratch::new(width);
        for (k, slot) in chunk.iter_mut().enumerate() {
            *slot = s.decide(x, offset + k, &params);
        }
    });
    Ok(out)
}

/// Hampel filter iterated to a fixed point.
///
/// A single pass is not idempotent: replacing one outlier shifts the medians
/// and MADs of its neighbours' windows. Passes are repeated until nothing
/// changes (or `max_passes` is reached), so the result passes its own test.
/// After the first pass only samples whose window saw a change are revisited.
pub fn hampel_filter(x: &[f64], params: HampelParams, exec: Execution) -> Result<Vec<f64>> {
    Ok(hampel_filter_report(x, params, exec)?.values)
}

pub fn hampel_filter_report(x: &[f64], params: HampelParams, exec: Execution) -> Result<HampelOutput> {
    let mut y = hampel_pass(x, params, exec)?;
    let n = x.len();
    let h = params.half_width;
    let width = 2 * h + 1;
    let mut changed: Vec<usize> = (0..n).filter(|&i| x[i] != y[i]).collect();
    let mut passes = 1;
    let mut candidates = Vec::new();
    while !changed.is_empty() && passes < params.max_passes {
        // indices whose window touches a changed sample, merged in order
        candidates.clear();
        let mut next_free = 0;
        for &c in &changed {
            let lo = c.saturating_sub(h).max(next_free);
            let hi = (c + h + 1).min(n);
            candidates.extend(lo..hi);
            next_free = next_free.max(hi);
        }
        let current = &y;
        let updates: Vec<f64> = exec.map_slice(&candidates, |&i| Scratch::new(width).decide(current, i, &params));
        changed.clear();
        for (&i, v) in candidates.iter().zip(updates) {
            if v != y[i] {
                y[i] = v;
                changed.push(i);
            }
        }
        passes += 1;
    }
    Ok(HampelOutput { values: y, passes, converged: changed.is_empty() })
}
