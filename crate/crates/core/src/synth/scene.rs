//! Synthetic egocentric scenes: a translating camera over a background plane
//! with fronto-parallel disk objects, one of which the hand moves.
//!
//! Depth, masks and flow are ray-cast exactly. Flow maps each pixel's surface
//! point at frame `f` to its reprojection at frame `f + 1`, so static pixels
//! satisfy the epipolar constraint by construction.

use nalgebra::Rotation3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::geometry::{CameraModel, DepthMap, FlowField, HandObservation, MaskProposal, Vec3};
use crate::{Error, Hand, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub id: String,
    pub concept: String,
    /// World position at frame 0 (meters); the disk faces the world z axis.
    pub center: [f64; 3],
    pub radius: f64,
    /// Displacement per frame (meters).
    #[serde(default)]
    pub velocity: [f64; 3],
    /// Motion direction flips every this many frames (0 = never).
    #[serde(default)]
    pub reverse_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneScript {
    pub seed: u64,
    pub n_frames: usize,
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_height")]
    pub height: usize,
    #[serde(default = "default_focal")]
    pub fx: f64,
    #[serde(default = "default_focal")]
    pub fy: f64,
    /// Principal point; defaults to the image center.
    #[serde(default)]
    pub cx: Option<f64>,
    #[serde(default)]
    pub cy: Option<f64>,
    #[serde(default = "default_fps")]
    pub fps: f64,
    /// Camera translation per frame (meters) along `camera_direction`.
    #[serde(default = "default_step")]
    pub camera_step_m: f64,
    #[serde(default = "default_direction")]
    pub camera_direction: [f64; 3],
    #[serde(default = "default_reverse")]
    pub camera_reverse_every: usize,
    /// Peak yaw (radians) of a sinusoidal head turn.
    #[serde(default)]
    pub camera_yaw_amplitude: f64,
    #[serde(default = "default_yaw_period")]
    pub camera_yaw_period_frames: f64,
    /// Depth of the background plane (world z).
    #[serde(default = "default_plane")]
    pub plane_z: f64,
    pub objects: Vec<SceneObject>,
    pub hand: Hand,
    /// Object the hand holds during the grasp frames.
    #[serde(default)]
    pub grasp_object: Option<String>,
    /// Half-open `[start, end)` frame ranges.
    #[serde(default)]
    pub grasp_frames: Vec<[usize; 2]>,
    /// Hand centroid relative to the grasped object's center.
    #[serde(default)]
    pub hand_offset: [f64; 3],
    /// Hand centroid when not grasping.
    #[serde(default = "default_rest")]
    pub hand_rest: [f64; 3],
}

fn default_width() -> usize {
    640
}
fn default_height() -> usize {
    480
}
fn default_focal() -> f64 {
    500.0
}
fn default_fps() -> f64 {
    30.0
}
fn default_step() -> f64 {
    0.015
}
fn default_direction() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}
fn default_reverse() -> usize {
    10
}
fn default_yaw_period() -> f64 {
    40.0
}
fn default_plane() -> f64 {
    3.0
}
fn default_rest() -> [f64; 3] {
    [0.0, 0.0, 0.3]
}

/// Knobs for [`SceneScript::randomized`]; also the `[random]` table of a
/// script file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomScene {
    pub n_frames: usize,
    pub width: usize,
    pub height: usize,
    pub n_static: usize,
    pub hand: Hand,
}

impl Default for RandomScene {
    fn default() -> Self {
        Self { n_frames: 60, width: 320, height: 240, n_static: 4, hand: Hand::Right }
    }
}

const CONCEPTS: [&str; 8] = ["cup", "plate", "bowl", "knife", "bottle", "pan", "box", "phone"];

/// Signed step count after `f` frames of a motion that flips every `every` frames.
fn triangle(f: usize, every: usize) -> f64 {
    if every == 0 {
        return f as f64;
    }
    let period = 2 * every;
    let phase = f % period;
    if phase <= every {
        phase as f64
    } else {
        (period - phase) as f64
    }
}

/// Sign of the step from frame `f` to `f + 1`.
fn step_sign(f: usize, every: usize) -> f64 {
    if every == 0 || (f / every).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

impl SceneScript {
    /// Parses a script file: either every field spelled out, or `seed` plus a
    /// `[random]` table of [`RandomScene`] knobs.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let err = |e: String| Error::Config(format!("scene script: {e}"));
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| err(e.to_string()))?;
        let s: Self = match table.remove("random") {
            Some(random) => {
                let seed = table
                    .remove("seed")
                    .and_then(|v| v.as_integer())
                    .ok_or_else(|| err("missing integer 'seed'".into()))?;
                if let Some(key) = table.keys().next() {
                    return Err(err(format!("unexpected key '{key}' next to [random]")));
                }
                let p: RandomScene = random.try_into().map_err(|e: toml::de::Error| err(e.to_string()))?;
                let seed = u64::try_from(seed).map_err(|_| err("seed must be non-negative".into()))?;
                Self::randomized(seed, &p)
            }
            None => table.try_into().map_err(|e: toml::de::Error| err(e.to_string()))?,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("script serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("scene script: {m}")));
        if self.n_frames == 0 || self.width == 0 || self.height == 0 {
            return bad("frame count and image size must be positive".into());
        }
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fps > 0.0) {
            return bad("focal lengths and fps must be positive".into());
        }
        if self.objects.is_empty() || self.objects.len() > 255 {
            return bad("between 1 and 255 objects required".into());
        }
        let mut ids: Vec<&str> = self.objects.iter().map(|o| o.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("object ids must be unique".into());
        }
        for o in &self.objects {
            let finite = o.center.iter().chain(&o.velocity).all(|v| v.is_finite());
            if !finite || !(o.radius > 0.0) || o.id.is_empty() || o.id.contains([',', ' ']) {
                return bad(format!("object '{}' is invalid", o.id));
            }
        }
        if let Some(g) = &self.grasp_object {
            if !self.objects.iter().any(|o| &o.id == g) {
                return bad(format!("grasp object '{g}' is not a scene object"));
            }
        }
        let dir = Vec3::from(self.camera_direction);
        if !(dir.norm() > 0.0) {
            return bad("camera direction must be non-zero".into());
        }
        Ok(())
    }

    /// Same scene with every object held still.
    pub fn without_object_motion(&self) -> Self {
        let mut s = self.clone();
        s.objects.iter_mut().for_each(|o| o.velocity = [0.0; 3]);
        s
    }

    /// Seeded scene: `n_static` still disks plus one disk that the hand moves
    /// up and down for the whole clip, grasped over the middle half.
    pub fn randomized(seed: u64, p: &RandomScene) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (p.width as f64, p.height as f64);
        let f = 500.0 * w / 640.0;
        let n = p.n_static + 1;
        let mut objects: Vec<SceneObject> = Vec::with_capacity(n);
        let mut placed: Vec<(f64, f64, f64)> = Vec::new();
        let mut attempts = 0;
        while objects.len() < n {
            attempts += 1;
            let depth = rng.random_range(1.2..2.0);
            let radius = rng.random_range(0.06..0.10);
            let u = rng.random_range(0.18..0.82) * w;
            let v = rng.random_range(0.25..0.75) * h;
            let r_px = f * radius / depth;
            // the moving disk sweeps about 25 px vertically; keep clear of it
            let clear =
                placed.iter().all(|&(pu, pv, pr)| ((u - pu).powi(2) + (v - pv).powi(2)).sqrt() > r_px + pr + 0.08 * h);
            if !clear && attempts < 10_000 {
                continue;
            }
            placed.push((u, v, r_px));
            let k = objects.len();
            let moving = k == 0;
            objects.push(SceneObject {
                id: format!("obj{k}"),
                concept: CONCEPTS[k % CONCEPTS.len()].to_string(),
                center: [depth * (u - (w - 1.0) / 2.0) / f, depth * (v - (h - 1.0) / 2.0) / f, depth],
                radius,
                velocity: if moving {
                    [rng.random_range(-0.002..0.002), rng.random_range(0.006..0.010), 0.0]
                } else {
                    [0.0; 3]
                },
                reverse_every: if moving { 8 } else { 0 },
            });
        }
        let start = p.n_frames / 4;
        let end = (3 * p.n_frames / 4).max(start + 1);
        Self {
            seed,
            n_frames: p.n_frames,
            width: p.width,
            height: p.height,
            fx: f,
            fy: f,
            cx: None,
            cy: None,
            fps: 30.0,
            camera_step_m: rng.random_range(0.012..0.02),
            camera_direction: [1.0, rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)],
            camera_reverse_every: 10,
            camera_yaw_amplitude: rng.random_range(0.0..0.02),
            camera_yaw_period_frames: 40.0,
            plane_z: 3.0,
            objects,
            hand: p.hand,
            grasp_object: Some("obj0".into()),
            grasp_frames: vec![[start, end]],
            hand_offset: [rng.random_range(-0.03..0.03), rng.random_range(-0.03..0.03), -0.02],
            hand_rest: [0.0, 0.0, 0.3],
        }
    }
}

/// Rasters of one frame. `flow` is absent on the last frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneFrame {
    pub flow: Option<FlowField>,
    pub depth: DepthMap,
    /// Visible objects only, in script order.
    pub masks: Vec<MaskProposal>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Hit {
    label: u8,
    depth: f32,
    flow: [f32; 2],
}

/// Evaluates a [`SceneScript`] frame by frame.
#[derive(Debug, Clone)]
pub struct Scene {
    script: SceneScript,
    cx: f64,
    cy: f64,
    direction: Vec3,
}

impl Scene {
    pub fn new(script: SceneScript) -> Result<Self> {
        script.validate()?;
        let cx = script.cx.unwrap_or((script.width as f64 - 1.0) / 2.0);
        let cy = script.cy.unwrap_or((script.height as f64 - 1.0) / 2.0);
        let direction = Vec3::from(script.camera_direction).normalize();
        Ok(Self { script, cx, cy, direction })
    }

    pub fn script(&self) -> &SceneScript {
        &self.script
    }

    pub fn n_frames(&self) -> usize {
        self.script.n_frames
    }

    pub fn camera(&self, f: usize) -> CameraModel {
        let s = &self.script;
        let yaw = s.camera_yaw_amplitude * (std::f64::consts::TAU * f as f64 / s.camera_yaw_period_frames).sin();
        let rotation = Rotation3::from_axis_angle(&Vec3::y_axis(), yaw).into_inner();
        let translation = self.direction * (s.camera_step_m * triangle(f, s.camera_reverse_every));
        CameraModel { fx: s.fx, fy: s.fy, cx: self.cx, cy: self.cy, rotation, translation }
    }

    pub fn object_center(&self, k: usize, f: usize) -> Vec3 {
        let o = &self.script.objects[k];
        Vec3::from(o.center) + Vec3::from(o.velocity) * triangle(f, o.reverse_every)
    }

    /// Displacement of object `k` between frames `f` and `f + 1`.
    fn object_step(&self, k: usize, f: usize) -> Vec3 {
        let o = &self.script.objects[k];
        Vec3::from(o.velocity) * step_sign(f, o.reverse_every)
    }

    fn grasping(&self, f: usize) -> bool {
        self.script.grasp_frames.iter().any(|r| f >= r[0] && f < r[1])
    }

    fn grasp_index(&self) -> Option<usize> {
        let id = self.script.grasp_object.as_ref()?;
        self.script.objects.iter().position(|o| &o.id == id)
    }

    pub fn hand(&self, f: usize) -> HandObservation {
        let centroid = match self.grasp_index() {
            Some(k) if self.grasping(f) => self.object_center(k, f) + Vec3::from(self.script.hand_offset),
            _ => Vec3::from(self.script.hand_rest),
        };
        HandObservation { hand: self.script.hand, centroid, visible: true }
    }

    /// Scripted contacted object at frame `f`.
    pub fn contacted(&self, f: usize) -> Option<&str> {
        let k = self.grasp_index()?;
        self.grasping(f).then(|| self.script.objects[k].id.as_str())
    }

    fn cast(&self, cam: &CameraModel, centers: &[Vec3], x: usize, y: usize) -> (usize, Vec3, f64) {
        let d_cam = Vec3::new((x as f64 - self.cx) / self.script.fx, (y as f64 - self.cy) / self.script.fy, 1.0);
        let d = cam.rotation * d_cam;
        let o = cam.translation;
        // background plane, label 0
        let mut best = (0usize, (self.script.plane_z - o.z) / d.z);
        for (k, c) in centers.iter().enumerate() {
            let s = (c.z - o.z) / d.z;
            if !(s > 0.0 && s < best.1) {
                continue;
            }
            let p = o + d * s;
            let r = self.script.objects[k].radius;
            if (p.x - c.x).powi(2) + (p.y - c.y).powi(2) <= r * r {
                best = (k + 1, s);
            }
        }
        (best.0, o + d * best.1, best.1)
    }

    pub fn render(&self, f: usize, exec: Execution) -> Result<SceneFrame> {
        if f >= self.script.n_frames {
            return Err(Error::Structural(format!("frame {f} beyond scene length {}", self.script.n_frames)));
        }
        let (w, h) = (self.script.width, self.script.height);
        let cam = self.camera(f);
        let has_next = f + 1 < self.script.n_frames;
        let cam_next = self.camera(f + 1);
        let centers: Vec<Vec3> = (0..self.script.objects.len()).map(|k| self.object_center(k, f)).collect();
        let steps: Vec<Vec3> = (0..self.script.objects.len()).map(|k| self.object_step(k, f)).collect();
        let mut hits = vec![Hit::default(); w * h];
        exec.fill_chunks(&mut hits, w * 16, |offset, chunk| {
            for (j, slot) in chunk.iter_mut().enumerate() {
                let (x, y) = ((offset + j) % w, (offset + j) / w);
                let (label, p, depth) = self.cast(&cam, &centers, x, y);
                let mut flow = [0.0f32; 2];
                if has_next {
                    let moved = if label > 0 { p + steps[label - 1] } else { p };
                    if let Some(q) = cam_next.project(&moved) {
                        flow = [(q[0] - x as f64) as f32, (q[1] - y as f64) as f32];
                    }
                }
                *slot = Hit { label: label as u8, depth: depth as f32, flow };
            }
        });
        let depth = DepthMap::new(w, h, hits.iter().map(|p| p.depth).collect())?;
        let flow =
            if has_next { Some(FlowField::new(w, h, hits.iter().flat_map(|p| p.flow).collect())?) } else { None };
        let mut masks = Vec::new();
        for (k, o) in self.script.objects.iter().enumerate() {
            let pixels: Vec<bool> = hits.iter().map(|p| p.label as usize == k + 1).collect();
            if pixels.iter().any(|v| *v) {
                masks.push(MaskProposal::new(o.id.clone(), o.concept.clone(), w, h, pixels)?);
            }
        }
        Ok(SceneFrame { flow, depth, masks })
    }
}
