use serde::{Deserialize, Serialize};

use super::bvh::{Aabb, Bvh};
use super::{GeomError, ProximityResult, Vec3};

/// Which normal `closest_surface_point` reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalMode {
    /// Normal of the face owning the closest point.
    #[default]
    Face,
    /// Barycentric blend of the owning face's vertex normals, renormalized.
    Interpolated,
}

/// Triangle mesh with per-face and per-vertex unit normals and two
/// acceleration trees (faces and vertices).
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    face_normals: Vec<Vec3>,
    vertex_normals: Vec<Vec3>,
    face_tree: Bvh,
    vertex_tree: Bvh,
}

impl TriMesh {
    /// Validates indices and geometry, then derives normals and builds the
    /// spatial index. Vertex normals are the area-weighted average of the
    /// incident face normals.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, GeomError> {
        if faces.is_empty() {
            return Err(GeomError::EmptyMesh);
        }
        if let Some(index) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite { what: "mesh vertex", index });
        }
        let count = vertices.len();
        let mut weighted = vec![Vec3::ZERO; count];
        let mut referenced = vec![false; count];
        let mut face_normals = Vec::with_capacity(faces.len());
        for (face, f) in faces.iter().enumerate() {
            for &vertex in f {
                if vertex >= count {
                    return Err(GeomError::BadIndex { face, vertex, count });
                }
                referenced[vertex] = true;
            }
            let [a, b, c] = f.map(|i| vertices[i]);
            // |cross| is twice the face area, so summing it area-weights the normals.
            let cross = (b - a).cross(c - a);
            let n = cross.try_normalize(1e-12).ok_or(GeomError::DegenerateFace(face))?;
            face_normals.push(n);
            for &vertex in f {
                weighted[vertex] += cross;
            }
        }
        if let Some(v) = referenced.iter().position(|r| !r) {
            return Err(GeomError::UnreferencedVertex(v));
        }
        let vertex_normals = weighted
            .iter()
            .enumerate()
            .map(|(i, w)| w.try_normalize(1e-12).ok_or(GeomError::DegenerateVertexNormal(i)))
            .collect::<Result<Vec<_>, _>>()?;

        let face_boxes: Vec<Aabb> = faces
            .iter()
            .map(|f| Aabb::from_points(&f.map(|i| vertices[i])))
            .collect();
        let vertex_boxes: Vec<Aabb> = vertices.iter().map(|&v| Aabb { min: v, max: v }).collect();
        Ok(Self {
            face_tree: Bvh::build(&face_boxes),
            vertex_tree: Bvh::build(&vertex_boxes),
            vertices,
            faces,
            face_normals,
            vertex_normals,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_normals(&self) -> &[Vec3] {
        &self.face_normals
    }

    pub fn vertex_normals(&self) -> &[Vec3] {
        &self.vertex_normals
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        self.faces[face].map(|i| self.vertices[i])
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    /// Depth of the face tree (diagnostics).
    pub fn index_depth(&self) -> usize {
        self.face_tree.depth()
    }

    /// Nearest vertex and its vertex normal; ties go to the lowest vertex index.
    pub fn closest_vertex(&self, p: Vec3) -> ProximityResult {
        let (i, _) = self
            .vertex_tree
            .nearest(p, |i| p.distance_squared(self.vertices[i]))
            .expect("mesh is non-empty");
        let mut r = ProximityResult::new(p, self.vertices[i], i);
        r.normal = Some(self.vertex_normals[i]);
        r
    }

    /// Exact closest point over all faces with the face normal attached.
    pub fn closest_surface_point(&self, p: Vec3) -> ProximityResult {
        self.closest_surface_point_with(p, NormalMode::Face)
    }

    pub fn closest_surface_point_with(&self, p: Vec3, mode: NormalMode) -> ProximityResult {
        let (face, _) = self
            .face_tree
            .nearest(p, |f| {
                let [a, b, c] = self.triangle(f);
                p.distance_squared(closest_point_on_triangle(p, a, b, c).0)
            })
            .expect("mesh is non-empty");
        let [a, b, c] = self.triangle(face);
        let (q, bary) = closest_point_on_triangle(p, a, b, c);
        let mut r = ProximityResult::new(p, q, face);
        let face_normal = self.face_normals[face];
        r.normal = Some(match mode {
            NormalMode::Face => face_normal,
            NormalMode::Interpolated => {
                let [i, j, k] = self.faces[face];
                let blended = self.vertex_normals[i] * bary[0]
                    + self.vertex_normals[j] * bary[1]
                    + self.vertex_normals[k] * bary[2];
                blended.try_normalize(1e-9).unwrap_or(face_normal)
            }
        });
        r
    }

    /// Inside test by ray parity. Meaningful only for closed meshes.
    pub fn contains(&self, p: Vec3) -> bool {
        // Irrational-ish direction so rays almost never graze edges or vertices.
        let dir = Vec3::new(0.577_215_664_9, 0.618_033_988_7, 0.531_490_051_3);
        let mut hits = 0usize;
        self.face_tree.for_each_on_ray(p, dir, |f| {
            let [a, b, c] = self.triangle(f);
            if ray_hits_triangle(p, dir, a, b, c) {
                hits += 1;
            }
        });
        hits % 2 == 1
    }

    /// Distance to the surface, negative inside a closed mesh.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        let d = self.closest_surface_point(p).distance;
        if self.contains(p) {
            -d
        } else {
            d
        }
    }
}

/// Closest point on triangle `abc` to `p` and its barycentric coordinates,
/// by Voronoi-region classification.
pub fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> (Vec3, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, [1.0, 0.0, 0.0]);
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0]);
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

fn ray_hits_triangle(origin: Vec3, dir: Vec3, a: Vec3, b: Vec3, c: Vec3) -> bool {
    let e1 = b - a;
    let e2 = c - a;
    let h = dir.cross(e2);
    let det = e1.dot(h);
    if det.abs() < 1e-14 {
        return false;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = inv * s.dot(h);
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let q = s.cross(e1);
    let v = inv * dir.dot(q);
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    inv * e2.dot(q) > 0.0
}
