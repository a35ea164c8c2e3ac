//! Index-accelerated proximity queries against exhaustive oracles.

use hapfix::geom::{closest_point_on_triangle, Polyline, TriMesh, Vec3};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(rng: &mut ChaCha8Rng, half: f64) -> Vec3 {
    Vec3::new(rng.random_range(-half..half), rng.random_range(-half..half), rng.random_range(-half..half))
}

/// Triangle soup or shared-vertex mesh with up to `max_faces` faces.
fn random_mesh(rng: &mut ChaCha8Rng, max_faces: usize) -> TriMesh {
    loop {
        let n_faces = rng.random_range(1..=max_faces);
        let (vertices, faces) = if rng.random_bool(0.5) {
            let mut v = Vec::with_capacity(3 * n_faces);
            let mut f = Vec::with_capacity(n_faces);
            for i in 0..n_faces {
                let c = random_point(rng, 20.0);
                for _ in 0..3 {
                    v.push(c + random_point(rng, 3.0));
                }
                f.push([3 * i, 3 * i + 1, 3 * i + 2]);
            }
            (v, f)
        } else {
            let pool: Vec<Vec3> = (0..(n_faces / 2).max(3)).map(|_| random_point(rng, 15.0)).collect();
            let mut used = vec![usize::MAX; pool.len()];
            let mut v = Vec::new();
            let mut f = Vec::with_capacity(n_faces);
            for _ in 0..n_faces {
                let tri: [usize; 3] = std::array::from_fn(|_| rng.random_range(0..pool.len()));
                if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                    continue;
                }
                f.push(tri.map(|i| {
                    if used[i] == usize::MAX {
                        used[i] = v.len();
                        v.push(pool[i]);
                    }
                    used[i]
                }));
            }
            (v, f)
        };
        if let Ok(m) = TriMesh::new(vertices, faces) {
            return m;
        }
    }
}

/// Closest point on a segment by clamped projection.
fn segment_point(a: Vec3, b: Vec3, p: Vec3) -> Vec3 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm_squared()).clamp(0.0, 1.0);
    a + ab * t
}

/// Plane projection if it falls inside the triangle, else the best edge point.
fn triangle_oracle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let n = (b - a).cross(c - a);
    let q = p - n * ((p - a).dot(n) / n.norm_squared());
    let inside = [(a, b), (b, c), (c, a)].iter().all(|&(u, v)| (v - u).cross(q - u).dot(n) >= 0.0);
    if inside {
        return p.distance(q);
    }
    [(a, b), (b, c), (c, a)].iter().map(|&(u, v)| p.distance(segment_point(u, v, p))).fold(f64::INFINITY, f64::min)
}

#[test]
fn mesh_queries_match_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let mesh = random_mesh(&mut rng, 500);
        for _ in 0..200 {
            let p = random_point(&mut rng, 30.0);

            let (vi, vd2) = mesh
                .vertices()
                .iter()
                .enumerate()
                .map(|(i, v)| (i, p.distance_squared(*v)))
                .fold((usize::MAX, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            let r = mesh.closest_vertex(p);
            assert_eq!(r.feature_id, vi);
            assert!((r.distance - vd2.sqrt()).abs() <= 1e-12);

            let (fi, fd2) = (0..mesh.faces().len())
                .map(|f| {
                    let [a, b, c] = mesh.triangle(f);
                    (f, p.distance_squared(closest_point_on_triangle(p, a, b, c).0))
                })
                .fold((usize::MAX, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            let s = mesh.closest_surface_point(p);
            assert_eq!(s.feature_id, fi);
            assert!((s.distance - fd2.sqrt()).abs() <= 1e-12);

            let independent = (0..mesh.faces().len())
                .map(|f| {
                    let [a, b, c] = mesh.triangle(f);
                    triangle_oracle(p, a, b, c)
                })
                .fold(f64::INFINITY, f64::min);
            assert!((s.distance - independent).abs() <= 1e-9, "{} vs {independent}", s.distance);
        }
    }
}

/// Dense sampling of every segment whose bounding box could still beat the
/// best sample so far.
fn sampled_distance(points: &[Vec3], p: Vec3, samples: usize) -> f64 {
    let mut order: Vec<(usize, f64)> = points
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (lo, hi) = (w[0].min(w[1]), w[0].max(w[1]));
            let d = Vec3::new(
                (lo.x - p.x).max(0.0).max(p.x - hi.x),
                (lo.y - p.y).max(0.0).max(p.y - hi.y),
                (lo.z - p.z).max(0.0).max(p.z - hi.z),
            );
            (i, d.norm())
        })
        .collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut best = f64::INFINITY;
    for (i, lower) in order {
        if lower > best {
            break;
        }
        let (a, b) = (points[i], points[i + 1]);
        for k in 0..=samples {
            best = best.min(p.distance(a.lerp(b, k as f64 / samples as f64)));
        }
    }
    best
}

#[test]
fn polyline_matches_dense_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let points: Vec<Vec3> = (0..20).map(|_| random_point(&mut rng, 10.0)).collect();
        let line = Polyline::new(points.clone()).unwrap();
        for _ in 0..20 {
            let p = random_point(&mut rng, 15.0);
            let exact = line.closest_point(p);
            let sampled = sampled_distance(&points, p, 100_000);
            assert!(exact.distance <= sampled + 1e-12);
            assert!((exact.distance - sampled).abs() <= 1e-6, "{} vs {sampled}", exact.distance);
        }
    }
}
