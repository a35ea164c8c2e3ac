//! Minimal Wavefront OBJ subset: `v x y z` and triangular `f` lines with
//! 1-based indices. `vt`/`vn` references (`f 1/2/3 ...`) are accepted and
//! ignored; polygons with more than three corners are rejected.

use std::fmt::Write as _;

use super::{GeomError, TriMesh, Vec3};

pub fn parse(text: &str) -> Result<TriMesh, GeomError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |message: String| GeomError::Obj { line, message };
        let body = raw.split('#').next().unwrap_or("").trim();
        let mut fields = body.split_whitespace();
        match fields.next() {
            Some("v") => {
                let coords: Vec<f64> = fields
                    .take(3)
                    .map(|f| f.parse::<f64>().map_err(|e| err(format!("bad coordinate {f:?}: {e}"))))
                    .collect::<Result<_, _>>()?;
                if coords.len() != 3 {
                    return Err(err("vertex needs three coordinates".into()));
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let corners: Vec<&str> = fields.collect();
                if corners.len() != 3 {
                    return Err(err(format!(
                        "only triangles are supported, face has {} corners",
                        corners.len()
                    )));
                }
                let mut face = [0usize; 3];
                for (slot, corner) in face.iter_mut().zip(&corners) {
                    let idx = corner.split('/').next().unwrap_or("");
                    let i: usize = idx
                        .parse()
                        .map_err(|_| err(format!("bad face index {corner:?}")))?;
                    if i == 0 {
                        return Err(err("face indices are 1-based".into()));
                    }
                    *slot = i - 1;
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

pub fn write(mesh: &TriMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}
