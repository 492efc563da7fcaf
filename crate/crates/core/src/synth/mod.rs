//! Seeded generators with exact ground truth, used as test oracles and as
//! format conformance fixtures.

mod scene;
mod session;

pub use scene::{RandomScene, Scene, SceneFrame, SceneObject, SceneScript};
pub use session::{
    generate_session, ChannelScript, ContactInterval, Dropout, RandomSession, SessionScript, SyntheticSession,
};
