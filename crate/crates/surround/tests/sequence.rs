use std::fs;
use std::path::Path;

use surround::config::RunConfig;
use surround::report::{run_sequence, write_report, StateReport};
use surround::sequence::{load_sequence, read_sequence_calibration};
use surround::synth::{emit_sequence, CameraSpec, NoiseSpec, Scene, SceneSpec, VehicleSpec};
use surround::Error;

fn small_scene(frames: u32) -> Scene {
    let mut s = SceneSpec {
        frames,
        width: 320,
        height: 200,
        camera: CameraSpec { fx: 250.0, fy: 250.0, cx: 160.0, cy: 100.0, ..CameraSpec::default() },
        ..SceneSpec::default()
    };
    s.ego.forward_mps = 10.0;
    s.vehicles.push(VehicleSpec { id: 4, size: [4.0, 1.8], height: 1.5, start_pose: [0.0, 12.0, 0.0], velocity_mps: [0.0, 12.0] });
    Scene::new(s).unwrap()
}

fn emit(dir: &Path, frames: u32) -> Scene {
    let scene = small_scene(frames);
    emit_sequence(&scene, &NoiseSpec::default(), dir).unwrap();
    scene
}

fn open(dir: &Path) -> surround::Result<surround::sequence::Sequence> {
    let calib = read_sequence_calibration(dir)?;
    let cfg = RunConfig::default().resolve(&calib, None)?;
    load_sequence(dir, &cfg)
}

#[test]
fn emitted_sequence_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = emit(tmp.path(), 3);
    let seq = open(tmp.path()).unwrap();
    assert_eq!(seq.frame_ids(), &[0, 1, 2]);
    let frames: Vec<_> = seq.frames().collect::<Result<_, _>>().unwrap();
    assert_eq!(frames.len(), 3);
    assert!(frames[0].flow.is_some() && frames[1].flow.is_some() && frames[2].flow.is_none());
    for f in &frames {
        let rendered = scene.render_frame(f.frame_id, &NoiseSpec::default()).bundle;
        assert_eq!(f, &rendered);
    }
    let calib = read_sequence_calibration(tmp.path()).unwrap();
    assert_eq!(calib, scene.calibration());
}

#[test]
fn emit_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    emit(a.path(), 2);
    emit(b.path(), 2);
    for sub in ["calib.txt", "detections.csv", "depth/000000.msr", "flow/000000.msr", "truth/vehicles_truth.csv"] {
        assert_eq!(fs::read(a.path().join(sub)).unwrap(), fs::read(b.path().join(sub)).unwrap(), "{sub}");
    }
}

#[test]
fn dimension_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    emit(tmp.path(), 2);
    let calib = read_sequence_calibration(tmp.path()).unwrap();
    let cfg = RunConfig { width: Some(640), ..Default::default() }.resolve(&calib, None).unwrap();
    assert!(matches!(load_sequence(tmp.path(), &cfg), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn truncated_and_corrupt_rasters() {
    let tmp = tempfile::tempdir().unwrap();
    emit(tmp.path(), 2);
    let p = tmp.path().join("depth/000001.msr");
    let bytes = fs::read(&p).unwrap();
    fs::write(&p, &bytes[..bytes.len() - 8]).unwrap();
    assert!(matches!(open(tmp.path()), Err(Error::ShortRead { .. })));
    let mut bad = bytes;
    bad[0] = b'X';
    fs::write(&p, &bad).unwrap();
    assert!(matches!(open(tmp.path()), Err(Error::BadMagic { .. })));
}

#[test]
fn gaps_and_missing_files() {
    let tmp = tempfile::tempdir().unwrap();
    emit(tmp.path(), 4);
    fs::remove_file(tmp.path().join("flow/000001.msr")).unwrap();
    assert!(matches!(open(tmp.path()), Err(Error::MissingFlow(1))));

    let tmp = tempfile::tempdir().unwrap();
    emit(tmp.path(), 4);
    fs::rename(tmp.path().join("depth/000002.msr"), tmp.path().join("depth/000005.msr")).unwrap();
    assert!(matches!(open(tmp.path()), Err(Error::NonContiguousFrameIds { expected: 2, found: 3 })));

    let tmp = tempfile::tempdir().unwrap();
    emit(tmp.path(), 2);
    fs::remove_file(tmp.path().join("calib.txt")).unwrap();
    assert!(matches!(open(tmp.path()), Err(Error::MissingCalibration(_))));
}

#[test]
fn report_files() {
    let tmp = tempfile::tempdir().unwrap();
    write_report(&StateReport::default(), tmp.path(), &[]).unwrap();
    assert_eq!(fs::read_to_string(tmp.path().join("ego.csv")).unwrap(), "frame,ego_vx_kmh,ego_vz_kmh,confidence\n");
    assert_eq!(
        fs::read_to_string(tmp.path().join("vehicles.csv")).unwrap(),
        "frame,id,x,y,z,yaw_deg,vax_kmh,vaz_kmh,confidence\n"
    );
    assert_eq!(fs::read_to_string(tmp.path().join("plane.csv")).unwrap(), "frame,a,b,c,d,updated\n");
    assert!(fs::read_to_string(tmp.path().join("metrics.txt")).unwrap().starts_with("frames=0\n"));

    let seq_dir = tempfile::tempdir().unwrap();
    let scene = emit(seq_dir.path(), 2);
    let seq = open(seq_dir.path()).unwrap();
    let cfg = scene.estimator_config();
    let one = run_sequence(seq.frames().take(1), &cfg).unwrap();
    let out = tmp.path().join("one");
    write_report(&one, &out, &[]).unwrap();
    for f in ["ego.csv", "vehicles.csv", "plane.csv"] {
        assert_eq!(fs::read_to_string(out.join(f)).unwrap().lines().count(), 2, "{f}");
    }
    let again = tmp.path().join("again");
    write_report(&run_sequence(seq.frames().take(1), &cfg).unwrap(), &again, &[]).unwrap();
    for f in ["ego.csv", "vehicles.csv", "plane.csv", "metrics.txt"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(again.join(f)).unwrap());
    }
}

#[test]
fn last_frame_has_no_velocity_records() {
    let seq_dir = tempfile::tempdir().unwrap();
    let scene = emit(seq_dir.path(), 2);
    let seq = open(seq_dir.path()).unwrap();
    let report = run_sequence(seq.frames(), &scene.estimator_config()).unwrap();
    let ego = report.ego_records();
    assert_eq!(ego.len(), 1);
    let veh = report.vehicle_records();
    assert_eq!(veh.len(), 2);
    assert!(veh[0].vaz_kmh.is_some());
    assert!(veh[1].vaz_kmh.is_none() && veh[1].z.is_some());
    assert_eq!(veh[1].confidence, "no_flow");
}
