//! Two-view geometry for contacted-object pseudolabels.
//!
//! Conventions: pixel centers sit at integer coordinates with the origin at
//! the top-left, x to the right and y down. Poses are world-from-camera, so
//! `p_world = R * p_cam + t`.

mod camera;
mod fundamental;
mod pseudolabel;
mod raster;
mod sampson;

pub use camera::{CameraModel, HandObservation};
pub use fundamental::{fundamental_from_poses, rank2_ratio, relative_pose, skew};
pub use pseudolabel::{
    masked_mean_sampson, proximity_count, score_proposals, select_contacted_object, GateParams, MaskScore,
    ProposalScore, PseudolabelResult, SelectionStatus,
};
pub use raster::{DepthMap, FlowField, MaskProposal};
pub use sampson::sampson_error;

pub type Mat3 = nalgebra::Matrix3<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;
