use super::{sampson_error, CameraModel, DepthMap, FlowField, HandObservation, MaskProposal, Mat3};
use crate::exec::Execution;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskScore {
    /// Mean Sampson error over the sampled in-mask pixels, squared pixels.
    pub mean: f64,
    pub n_pixels: usize,
}

/// Mean Sampson error of the flow correspondences `x -> x + flow(x)` inside
/// `mask`, sampled on a `stride` grid. Correspondences with a vanishing
/// denominator are dropped.
pub fn masked_mean_sampson(
    f: &Mat3,
    flow: &FlowField,
    mask: &MaskProposal,
    stride: usize,
    min_pixels: usize,
) -> Result<MaskScore> {
    if flow.width != mask.width || flow.height != mask.height {
        return Err(Error::Structural(format!("mask '{}' does not match the flow raster size", mask.id)));
    }
    let stride = stride.max(1);
    let mut sum = 0.0;
    let mut n = 0usize;
    for y in (0..mask.height).step_by(stride) {
        for x in (0..mask.width).step_by(stride) {
            if !mask.contains(x, y) {
                continue;
            }
            let d = flow.at(x, y);
            let xi = [x as f64, y as f64];
            if let Ok(e) = sampson_error(f, xi, [xi[0] + d[0], xi[1] + d[1]]) {
                sum += e;
                n += 1;
            }
        }
    }
    if n < min_pixels.max(1) {
        return Err(Error::TooFewPixels { found: n, required: min_pixels.max(1) });
    }
    Ok(MaskScore { mean: sum / n as f64, n_pixels: n })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProposalScore {
    pub id: String,
    /// `None` when the proposal was skipped (too few pixels).
    pub score: Option<MaskScore>,
}

pub fn score_proposals(
    f: &Mat3,
    flow: &FlowField,
    proposals: &[MaskProposal],
    stride: usize,
    min_pixels: usize,
    exec: Execution,
) -> Result<Vec<ProposalScore>> {
    exec.map_slice(proposals, |p| match masked_mean_sampson(f, flow, p, stride, min_pixels) {
        Ok(s) => Ok(ProposalScore { id: p.id.clone(), score: Some(s) }),
        Err(Error::TooFewPixels { .. }) => Ok(ProposalScore { id: p.id.clone(), score: None }),
        Err(e) => Err(e),
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateParams {
    /// Meters from the hand centroid.
    pub dist_max: f64,
    /// Pixels required within `dist_max`.
    pub n_min: usize,
    /// Frames whose best score is below this are treated as static.
    pub static_eps: f64,
}

impl Default for GateParams {
    fn default() -> Self {
        Self { dist_max: 0.15, n_min: 50, static_eps: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionStatus {
    Accepted,
    GateRejected,
    NoProposals,
    NoScorableProposals,
    HandNotVisible,
    StaticScene,
    NotInContact,
    DegenerateMotion,
    /// Last frame of a clip: no flow to a next frame.
    NoNextFrame,
}

impl SelectionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionStatus::Accepted => "accepted",
            SelectionStatus::GateRejected => "gate_rejected",
            SelectionStatus::NoProposals => "no_proposals",
            SelectionStatus::NoScorableProposals => "no_scorable_proposals",
            SelectionStatus::HandNotVisible => "hand_not_visible",
            SelectionStatus::StaticScene => "static_scene",
            SelectionStatus::NotInContact => "not_in_contact",
            SelectionStatus::DegenerateMotion => "degenerate_motion",
            SelectionStatus::NoNextFrame => "no_next_frame",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudolabelResult {
    pub status: SelectionStatus,
    /// Accepted mask id.
    pub selected: Option<String>,
    /// Arg-max proposal before gating.
    pub candidate: Option<String>,
    pub candidate_score: Option<f64>,
    pub gate_count: usize,
    pub scores: Vec<ProposalScore>,
    pub gate: GateParams,
}

impl PseudolabelResult {
    pub fn empty(status: SelectionStatus, scores: Vec<ProposalScore>, gate: GateParams) -> Self {
        Self { status, selected: None, candidate: None, candidate_score: None, gate_count: 0, scores, gate }
    }
}

/// Index of the best-scoring proposal: highest mean, then more pixels, then
/// the lexicographically smallest id.
fn argmax(scores: &[ProposalScore]) -> Option<usize> {
    let mut best: Option<(usize, MaskScore)> = None;
    for (k, p) in scores.iter().enumerate() {
        let Some(s) = p.score else { continue };
        let better = match &best {
            None => true,
            Some((bk, b)) => {
                s.mean > b.mean
                    || (s.mean == b.mean && s.n_pixels > b.n_pixels)
                    || (s.mean == b.mean && s.n_pixels == b.n_pixels && p.id < scores[*bk].id)
            }
        };
        if better {
            best = Some((k, s));
        }
    }
    best.map(|(k, _)| k)
}

/// Number of in-mask pixels with valid depth whose world point lies within
/// `dist_max` of the hand centroid.
pub fn proximity_count(
    mask: &MaskProposal,
    depth: &DepthMap,
    cam: &CameraModel,
    hand: &HandObservation,
    dist_max: f64,
) -> usize {
    let mut count = 0;
    for y in 0..mask.height {
        for x in 0..mask.width {
            if !mask.contains(x, y) {
                continue;
            }
            let Some(d) = depth.valid_at(x, y) else {
                continue;
            };
            if let Ok(p) = cam.unproject([x as f64, y as f64], d) {
                if (p - hand.centroid).norm() <= dist_max {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Picks the proposal with the largest mean Sampson error and accepts it when
/// at least `gate.n_min` of its pixels unproject within `gate.dist_max` of the
/// hand centroid. `scores` must be aligned with `proposals`.
pub fn select_contacted_object(
    proposals: &[MaskProposal],
    scores: Vec<ProposalScore>,
    hand: &HandObservation,
    depth: &DepthMap,
    cam: &CameraModel,
    gate: &GateParams,
) -> Result<PseudolabelResult> {
    if scores.len() != proposals.len() {
        return Err(Error::Structural("scores are not aligned with proposals".into()));
    }
    if !hand.visible {
        return Ok(PseudolabelResult::empty(SelectionStatus::HandNotVisible, scores, *gate));
    }
    if proposals.is_empty() {
        return Ok(PseudolabelResult::empty(SelectionStatus::NoProposals, scores, *gate));
    }
    let Some(best) = argmax(&scores) else {
        return Ok(PseudolabelResult::empty(SelectionStatus::NoScorableProposals, scores, *gate));
    };
    let best_score = scores[best].score.map(|s| s.mean);
    let mut result = PseudolabelResult {
        status: SelectionStatus::StaticScene,
        selected: None,
        candidate: Some(proposals[best].id.clone()),
        candidate_score: best_score,
        gate_count: 0,
        scores,
        gate: *gate,
    };
    if best_score.is_some_and(|s| s < gate.static_eps) {
        return Ok(result);
    }
    result.gate_count = proximity_count(&proposals[best], depth, cam, hand, gate.dist_max);
    if result.gate_count >= gate.n_min {
        result.status = SelectionStatus::Accepted;
        result.selected = Some(proposals[best].id.clone());
    } else {
        result.status = SelectionStatus::GateRejected;
    }
    Ok(result)
}
