use std::sync::Arc;

use hapfix::fieldmap::{MapParams, Profile};
use hapfix::fixtures::{
    combine_and_clamp, FixtureBinding, FixtureGeometry, FixtureKind, FixtureSet, GainSet,
};
use hapfix::geom::{rotate_vector, ConeFrame, Polyline, Quat, Vec3};
use hapfix::score::{performance_index, Baseline, EpsilonPolicy, MetricVector, ScoreWeights};
use hapfix::sim::{EEState, TaskLibrary};
use proptest::prelude::*;

fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn unit() -> impl Strategy<Value = Vec3> {
    vec3(1.0).prop_filter_map("non-zero", |v| v.try_normalize(1e-3))
}

fn profile() -> impl Strategy<Value = Profile> {
    prop_oneof![Just(Profile::RisingWithError), Just(Profile::FallingWithError)]
}

fn map_params() -> impl Strategy<Value = MapParams> {
    (-5.0..20.0, 0.01..10.0, 0.01..10.0, profile())
        .prop_map(|(t, h, w, p)| MapParams::new(t, h, w, p).unwrap())
}

proptest! {
    #[test]
    fn sigmoid_midpoint_is_half(p in map_params()) {
        prop_assert!((p.map(p.midpoint()).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_is_point_symmetric(p in map_params(), x in 0.0..5.0f64) {
        let m = p.midpoint();
        let s = p.map(m + x).unwrap() + p.map(m - x).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_stays_in_open_unit_interval(p in map_params(), e in -1e6..1e6f64) {
        let f = p.map(e).unwrap();
        prop_assert!(f > 0.0 && f < 1.0);
    }

    #[test]
    fn sigmoid_is_monotone_near_midpoint(p in map_params(), a in -8.0..8.0f64, gap in 1e-3..1.0f64) {
        // Offsets in units of the exponent scale, away from f64 saturation.
        let scale = 1.0 / (p.gain_constant * p.steepness);
        let (m, a, gap) = (p.midpoint(), a * scale, gap * scale);
        let (lo, hi) = (p.map(m + a).unwrap(), p.map(m + a + gap).unwrap());
        match p.profile {
            Profile::RisingWithError => prop_assert!(hi > lo),
            Profile::FallingWithError => prop_assert!(hi < lo),
        }
    }

    #[test]
    fn rotation_preserves_norm_and_inverts(v in vec3(50.0), axis in unit(), theta in -10.0..10.0f64) {
        let r = rotate_vector(v, theta, axis).vector;
        prop_assert!((r.norm() - v.norm()).abs() < 1e-9);
        let back = rotate_vector(r, -theta, axis).vector;
        prop_assert!(back.distance(v) < 1e-9);
    }

    #[test]
    fn cone_split_reconstructs(target in vec3(100.0), dir in unit(), h in 1.0..200.0f64, alpha in 1.0..60.0f64, p in vec3(200.0)) {
        let cone = ConeFrame::new(target - dir * h, target, alpha).unwrap();
        let c = cone.decompose(p);
        prop_assert!((c.axial + c.radial).distance(target - p) < 1e-9);
        prop_assert!(c.axial.dot(c.radial).abs() < 1e-9 * (1.0 + c.axial.norm() * c.radial.norm()));
    }

    #[test]
    fn polyline_distance_is_query_to_point(points in prop::collection::vec(vec3(20.0), 2..8), q in vec3(30.0)) {
        if let Ok(line) = Polyline::new(points) {
            let r = line.closest_point(q);
            prop_assert!((r.distance - q.distance(r.point)).abs() < 1e-9);
        }
    }

    #[test]
    fn clamped_wrench_respects_limits(fe in vec3(50.0), fv in vec3(50.0), te in vec3(5.0), tv in vec3(5.0),
                                      k in 0.0..10.0f64, eta in 0.0..2.0f64) {
        let gains = GainSet { k_f: k, eta_f: eta, k_t: k, eta_t: eta, ..GainSet::default() };
        let w = combine_and_clamp(fe, fv, te, tv, &gains).unwrap();
        prop_assert!(w.force.norm() <= gains.f_max * (1.0 + 1e-12));
        prop_assert!(w.torque.norm() <= gains.t_max * (1.0 + 1e-12));
    }

    #[test]
    fn trajectory_force_points_at_the_line(p in vec3(20.0), z in unit()) {
        let line = Arc::new(Polyline::new(vec![Vec3::new(-50.0, 0.0, 0.0), Vec3::new(50.0, 0.0, 0.0)]).unwrap());
        let map = MapParams::new(1.0, 1.0, 1.0, Profile::RisingWithError).unwrap();
        let gains = GainSet { k_f: 1.0, eta_f: 0.0, k_t: 1.0, eta_t: 0.0, f_max: 1e9, t_max: 1e9 };
        let binding = FixtureBinding::new("t", FixtureKind::Trajectory, FixtureGeometry::Polyline(line.clone()), map, gains);
        let mut set = FixtureSet::with_default_limits(vec![binding]).unwrap();
        let state = EEState::at(p, Quat::from_to(Vec3::Z, z));
        let eval = set.evaluate(&state, 0.0).unwrap();
        let w = eval.fixtures[0].wrench;
        let d = line.closest_point(p).point - p;
        prop_assert!(w.elastic_force.dot(d) >= 0.0);
        let t = w.elastic_torque;
        if t.norm() > 1e-9 {
            let expected = state.z_axis().dot(Vec3::X).clamp(-1.0, 1.0).acos();
            prop_assert!((t.norm() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn static_pose_without_viscous_gain_is_time_invariant(p in vec3(20.0), t0 in 0.0..10.0f64) {
        let line = Arc::new(Polyline::new(vec![Vec3::ZERO, Vec3::new(30.0, 10.0, 0.0)]).unwrap());
        let map = MapParams::new(0.5, 1.0, 1.0, Profile::RisingWithError).unwrap();
        let gains = GainSet { k_f: 2.0, eta_f: 0.0, k_t: 0.05, eta_t: 0.0, ..GainSet::default() };
        let binding = FixtureBinding::new("t", FixtureKind::Trajectory, FixtureGeometry::Polyline(line), map, gains);
        let mut set = FixtureSet::with_default_limits(vec![binding]).unwrap();
        let state = EEState::at(p, Quat::IDENTITY);
        let a = set.evaluate(&state, t0).unwrap().applied;
        let b = set.evaluate(&state, t0 + 1.0).unwrap().applied;
        prop_assert_eq!(a.force, b.force);
        prop_assert_eq!(a.torque, b.torque);
    }

    #[test]
    fn quaternion_integration_stays_normalized(w in vec3(3.0), steps in 1usize..2000) {
        let mut q = Quat::IDENTITY;
        for _ in 0..steps {
            q = q.integrate(w, 1.0 / 30.0);
        }
        prop_assert!((q.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn index_is_linear_in_each_metric(k in 0usize..6, base in prop::array::uniform6(0.1..10.0f64)) {
        let weights = ScoreWeights::new([3, 2, 3, 1, 0, 1]).unwrap();
        let mut expert = base;
        expert[4] = expert[4].round().max(1.0);
        let e = metric_vector(expert);
        let baseline = Baseline { task_id: "path".into(), expert: e, provenance: "prop".into() };
        let policy = EpsilonPolicy::disabled();
        let at_parity = performance_index(&e, &baseline, &weights, &policy).unwrap();
        prop_assert!((at_parity.p - 1.0).abs() < 1e-12);

        let mut doubled = expert;
        doubled[k] *= 2.0;
        let s = performance_index(&metric_vector(doubled), &baseline, &weights, &policy).unwrap();
        let w = f64::from(weights.row()[k]);
        prop_assert!((s.p - (1.0 + w / 10.0)).abs() < 1e-12);

        let all = expert.map(|x| 2.0 * x);
        let s2 = performance_index(&metric_vector(all), &baseline, &weights, &policy).unwrap();
        prop_assert!((s2.p - 2.0).abs() < 1e-12);
    }
}

fn metric_vector(a: [f64; 6]) -> MetricVector {
    MetricVector { d: a[0], a: a[1], f: a[2], t: a[3], m: a[4] as u32, c: a[5] }
}

#[test]
fn sigmoid_is_monotone_on_a_dense_grid() {
    for profile in [Profile::RisingWithError, Profile::FallingWithError] {
        let p = MapParams::new(2.0, 1.0, 1.0, profile).unwrap();
        let values: Vec<f64> = (0..10_000).map(|i| p.map(-1.0 + 8.0 * i as f64 / 9_999.0).unwrap()).collect();
        for w in values.windows(2) {
            match profile {
                Profile::RisingWithError => assert!(w[1] > w[0]),
                Profile::FallingWithError => assert!(w[1] < w[0]),
            }
        }
    }
}

#[test]
fn shipped_weight_rows_sum_to_ten() {
    let lib = TaskLibrary::builtin();
    assert_eq!(lib.tasks().len(), 8);
    for t in lib.tasks() {
        assert_eq!(t.weights.row().iter().sum::<u32>(), 10, "{}", t.id);
    }
}
