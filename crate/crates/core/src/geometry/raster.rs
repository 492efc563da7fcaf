use crate::{Error, Result};

/// Per-pixel displacement from frame i to frame i+1, interleaved (dx, dy).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * 2 {
            return Err(Error::Structural(format!(
                "flow payload has {} values, expected {}",
                data.len(),
                width * height * 2
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema("flow field contains non-finite values".into()));
        }
        Ok(Self { width, height, data })
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> [f64; 2] {
        let k = 2 * (y * self.width + x);
        [self.data[k] as f64, self.data[k + 1] as f64]
    }
}

/// Metric z-depth; zero, negative or non-finite entries are invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f32>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, depth: Vec<f32>) -> Result<Self> {
        if depth.len() != width * height {
            return Err(Error::Structural(format!(
                "depth payload has {} values, expected {}",
                depth.len(),
                width * height
            )));
        }
        Ok(Self { width, height, depth })
    }

    #[inline]
    pub fn valid_at(&self, x: usize, y: usize) -> Option<f64> {
        let d = self.depth[y * self.width + x];
        (d > 0.0 && d.is_finite()).then_some(d as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskProposal {
    pub id: String,
    pub concept: String,
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<bool>,
}

impl MaskProposal {
    pub fn new(
        id: impl Into<String>,
        concept: impl Into<String>,
        width: usize,
        height: usize,
        pixels: Vec<bool>,
    ) -> Result<Self> {
        let id = id.into();
        if pixels.len() != width * height {
            return Err(Error::Structural(format!(
                "mask '{id}' has {} pixels, expected {}",
                pixels.len(),
                width * height
            )));
        }
        if !pixels.iter().any(|p| *p) {
            return Err(Error::Schema(format!("mask '{id}' is empty")));
        }
        Ok(Self { id, concept: concept.into(), width, height, pixels })
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.pixels[y * self.width + x]
    }

    pub fn area(&self) -> usize {
        self.pixels.iter().filter(|p| **p).count()
    }
}
