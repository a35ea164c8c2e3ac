use std::f64::consts::PI;
use std::path::Path;

use hapfix::geom::Vec3;
use hapfix::score::aggregate;
use hapfix::sim::{
    archetype, archetype_document, gen_input, run_episode, AdmittanceParams, InputFrame, InputStream, LengthUnit, Scene,
    TaskKind, DT,
};

fn mean_d(task: TaskKind, assist: bool, amplitude: f64, seed: u64) -> f64 {
    let scene = archetype(task);
    let stream = gen_input(task, amplitude, seed).unwrap();
    let log = run_episode(&scene, &stream, &AdmittanceParams::default().with_assist(assist), seed).unwrap();
    log.metrics().expect("episode started").d
}

#[test]
fn unassisted_path_deviation_matches_mean_sine() {
    let amplitude = 5.0;
    let seeds = 0..10u64;
    let n = seeds.clone().count() as f64;
    let d = seeds.map(|s| mean_d(TaskKind::Path, false, amplitude, s)).sum::<f64>() / n;
    let expected = amplitude * 2.0 / PI;
    assert!((d - expected).abs() <= 0.2 * expected, "mean D {d}, expected {expected}");
}

#[test]
fn guidance_lowers_path_deviation() {
    for seed in 0..5 {
        let on = mean_d(TaskKind::Path, true, 5.0, seed);
        let off = mean_d(TaskKind::Path, false, 5.0, seed);
        assert!(on < off, "seed {seed}: {on} vs {off}");
    }
}

#[test]
fn unassisted_runs_log_shadow_wrenches_only() {
    let scene = archetype(TaskKind::Path);
    let stream = gen_input(TaskKind::Path, 5.0, 3).unwrap();
    let log = run_episode(&scene, &stream, &AdmittanceParams::unassisted(), 3).unwrap();
    assert!(log.frames.iter().all(|f| f.applied_force == Vec3::ZERO && f.applied_torque == Vec3::ZERO));
    assert!(log.frames.iter().any(|f| f.fixtures[0].0.norm() > 0.0));
    assert!(log.frames.iter().any(|f| f.feedback_force.norm() > 0.0));
}

#[test]
fn unassisted_trajectory_ignores_gains() {
    let scene = archetype(TaskKind::Path);
    let stream = gen_input(TaskKind::Path, 5.0, 4).unwrap();
    let a = run_episode(&scene, &stream, &AdmittanceParams::unassisted(), 4).unwrap();
    let mut strong = AdmittanceParams::unassisted();
    strong.g_f *= 10.0;
    strong.g_t *= 10.0;
    let b = run_episode(&scene, &stream, &strong, 4).unwrap();
    let pa: Vec<Vec3> = a.frames.iter().map(|f| f.position).collect();
    let pb: Vec<Vec3> = b.frames.iter().map(|f| f.position).collect();
    assert_eq!(pa, pb);
}

#[test]
fn replays_are_byte_identical() {
    for task in TaskKind::ALL {
        let scene = archetype(task);
        let stream = gen_input(task, 3.0, 9).unwrap();
        let a = run_episode(&scene, &stream, &AdmittanceParams::default(), 9).unwrap();
        let b = run_episode(&scene, &stream, &AdmittanceParams::default(), 9).unwrap();
        assert_eq!(a.to_csv(), b.to_csv(), "{task}");
        assert_eq!(a.digest(), b.digest());
    }
}

#[test]
fn scene_documents_round_trip_through_toml() {
    for task in TaskKind::ALL {
        let text = archetype_document(task).to_toml().unwrap();
        let scene = Scene::from_toml(&text, Path::new(".")).unwrap();
        let stream = gen_input(task, 2.0, 1).unwrap();
        let a = run_episode(&scene, &stream, &AdmittanceParams::default(), 1).unwrap();
        let b = run_episode(&archetype(task), &stream, &AdmittanceParams::default(), 1).unwrap();
        assert_eq!(a.digest(), b.digest(), "{task}");
    }
}

#[test]
fn orientation_stays_normalized_over_long_episodes() {
    let scene = archetype(TaskKind::Path);
    let frames = (0..100_000)
        .map(|i| InputFrame {
            time: i as f64 * DT,
            target_velocity: Vec3::ZERO,
            target_angular_velocity: Vec3::new(0.7, -0.4, 0.9),
            grip_closed: false,
            clutch_engaged: false,
        })
        .collect();
    let log = run_episode(&scene, &InputStream::new(frames), &AdmittanceParams::unassisted(), 0).unwrap();
    assert_eq!(log.frames.len(), 100_000);
    let worst = log.frames.iter().map(|f| (f.orientation.norm() - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn clutched_frames_take_time_but_not_motion() {
    let scene = archetype(TaskKind::Path);
    let frames: Vec<InputFrame> = (0..60)
        .map(|i| InputFrame {
            time: i as f64 * DT,
            target_velocity: Vec3::new(30.0, 0.0, 0.0),
            target_angular_velocity: Vec3::ZERO,
            grip_closed: false,
            clutch_engaged: (20..40).contains(&i),
        })
        .collect();
    let log = run_episode(&scene, &InputStream::new(frames), &AdmittanceParams::default(), 0).unwrap();
    let x: Vec<f64> = log.frames.iter().map(|f| f.position.x).collect();
    for i in 21..40 {
        assert_eq!(x[i], x[20], "frame {i}");
    }
    assert!(x[41] > x[40]);
    let m = log.metrics().unwrap();
    let bounds = log.bounds.unwrap();
    let span = (bounds.end - bounds.start + 1) as f64;
    assert!((m.c - 20.0 / span).abs() < 1e-12);
}

#[test]
fn aggregate_ignores_frames_outside_bounds() {
    let scene = archetype(TaskKind::Path);
    let mut frames: Vec<InputFrame> = (0..30)
        .map(|i| InputFrame {
            time: i as f64 * DT,
            target_velocity: Vec3::ZERO,
            target_angular_velocity: Vec3::new(0.0, 0.3, 0.0),
            grip_closed: false,
            clutch_engaged: false,
        })
        .collect();
    let stream = gen_input(TaskKind::Path, 4.0, 2).unwrap();
    let offset = frames.len();
    frames.extend(stream.frames.iter().map(|f| InputFrame { time: f.time + offset as f64 * DT, ..*f }));
    let mut log = run_episode(&scene, &InputStream::new(frames), &AdmittanceParams::default(), 2).unwrap();
    let bounds = log.bounds.unwrap();
    assert!(bounds.start > 10);
    let before = aggregate(&log).unwrap();
    log.frames[..bounds.start].reverse();
    assert_eq!(aggregate(&log).unwrap(), before);
}

#[test]
fn metre_streams_need_metre_scenes() {
    let scene = archetype(TaskKind::Path);
    let mut stream = gen_input(TaskKind::Path, 0.0, 0).unwrap();
    stream.units = LengthUnit::Metre;
    assert!(run_episode(&scene, &stream, &AdmittanceParams::default(), 0).is_err());
}
