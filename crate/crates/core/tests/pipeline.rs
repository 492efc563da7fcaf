//! End-to-end runs of the dataset commands on synthetic sessions.

mod common;

use std::path::Path;

use common::oracle;
use gloveforce_core::dataset::{self, outputs, read_truth_objects, PseudolabelOptions, RasterKind, Session};
use gloveforce_core::io::formats;
use gloveforce_core::labeling::ContactState;
use gloveforce_core::synth::{RandomScene, RandomSession, SceneScript, SessionScript};
use gloveforce_core::{Config, Error, ErrorClass, Execution, Hand};

fn session_script(seed: u64, hand: Hand) -> SessionScript {
    SessionScript::randomized(seed, &RandomSession { hand, duration_s: 180.0, ..Default::default() })
}

fn processed(dir: &Path, cfg: &Config) -> Session {
    dataset::synth_session(dir, &session_script(5, Hand::Left)).unwrap();
    dataset::synth_session(dir, &session_script(6, Hand::Right)).unwrap();
    let mut s = Session::open(dir).unwrap();
    dataset::filter(&mut s, cfg, Execution::default()).unwrap();
    dataset::label(&mut s, cfg).unwrap();
    dataset::frames(&mut s, cfg).unwrap();
    s
}

#[test]
fn synthetic_session_frames_agree_with_truth() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config::default();
    let s = processed(dir.path(), &cfg);
    for hand in [Hand::Left, Hand::Right] {
        let got = formats::read_frame_states(&s.output(&outputs::frames(hand))).unwrap();
        let truth = formats::read_frame_states(&s.path(&format!("truth/frames_{hand}.txt"))).unwrap();
        assert_eq!(got.fingerprint, cfg.fingerprint());
        assert_eq!(got.states.len(), truth.states.len());
        let f1 = oracle::contact_f1(&got.states, &truth.states, ContactState::Contact, ContactState::NoContact);
        assert!(f1 >= 0.95, "{hand}: F1 {f1}");
    }
    let report = dataset::validate(dir.path()).unwrap();
    assert_eq!(report.fingerprint, Some(cfg.fingerprint()));

    let stats = dataset::stats(dir.path()).unwrap();
    assert!(stats.rows.iter().all(|r| r.is_partition()));
    assert_eq!(stats.rows.len(), 2);
}

#[test]
fn rerunning_a_command_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config::default();
    let mut s = processed(dir.path(), &cfg);
    let read = |s: &Session| -> Vec<Vec<u8>> {
        [outputs::consolidated(Hand::Left), outputs::states(Hand::Right), outputs::frames(Hand::Left)]
            .iter()
            .map(|n| std::fs::read(s.output(n)).unwrap())
            .collect()
    };
    let before = read(&s);
    dataset::filter(&mut s, &cfg, Execution::Sequential).unwrap();
    dataset::label(&mut s, &cfg).unwrap();
    dataset::frames(&mut s, &cfg).unwrap();
    assert_eq!(read(&s), before);
}

#[test]
fn stale_upstream_output_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = processed(dir.path(), &Config::default());
    let other = Config { c_threshold: 0.4, ..Config::default() };
    let err = dataset::label(&mut s, &other).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Config);
    assert!(err.to_string().contains("rerun"), "{err}");
}

#[test]
fn mixed_fingerprints_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    processed(&a, &Config::default());
    processed(&b, &Config { hampel_k: 2.5, ..Config::default() });
    dataset::validate(&a).unwrap();
    let err = dataset::validate(dir.path()).unwrap_err();
    assert!(matches!(err, Error::Schema(ref m) if m.contains("mixed")), "{err}");
    assert!(dataset::stats(dir.path()).is_err());
}

#[test]
fn frames_without_clock_or_events_fails_calibration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config::default();
    dataset::synth_session(dir.path(), &session_script(7, Hand::Right)).unwrap();
    let mut s = Session::open(dir.path()).unwrap();
    s.manifest.events = None;
    s.save().unwrap();
    dataset::filter(&mut s, &cfg, Execution::default()).unwrap();
    dataset::label(&mut s, &cfg).unwrap();
    let err = dataset::frames(&mut s, &cfg).unwrap_err();
    assert_eq!(err.class(), ErrorClass::CalibrationFailed);
}

fn scene(dir: &Path, seed: u64) -> Session {
    let script =
        SceneScript::randomized(seed, &RandomScene { n_frames: 24, width: 160, height: 120, ..Default::default() });
    dataset::synth_scene(dir, &script, Execution::default()).unwrap();
    Session::open(dir).unwrap()
}

#[test]
fn scene_pseudolabels_match_truth_objects() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = scene(dir.path(), 9);
    let opts = PseudolabelOptions { ignore_contact: true, ..Default::default() };
    let summary = dataset::pseudolabel(&mut s, &Config::default(), opts, Execution::default()).unwrap();
    assert_eq!(summary.frames, 24);

    let truth_path = std::fs::read_dir(s.path("truth")).unwrap().map(|e| e.unwrap().path()).next().unwrap();
    let truth = read_truth_objects(&truth_path).unwrap();
    let (ledger, _) = formats::read_pseudolabel_ledger(&s.output(outputs::LEDGER)).unwrap();
    for row in &ledger {
        // the last frame has no successor and cannot be scored
        if row.frame + 1 < truth.len() {
            assert_eq!(row.mask_id, truth[row.frame], "frame {}", row.frame);
        }
    }
    assert_eq!(summary.accepted, truth[..truth.len() - 1].iter().flatten().count());
    dataset::validate(dir.path()).unwrap();
}

#[test]
fn missing_raster_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let s = scene(dir.path(), 10);
    let victim = s.raster_path(RasterKind::Depth, 3).unwrap();
    std::fs::remove_file(&victim).unwrap();
    let err = dataset::validate(dir.path()).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Io);
    assert!(err.to_string().contains(&victim.display().to_string()), "{err}");
}
