//! Closed and open triangle meshes for the built-in scenes.

use std::f64::consts::TAU;

use crate::geom::{GeomError, TriMesh, Vec3};

/// Upright closed cylinder on `base` (its bottom-cap centre) along +z.
/// `segments` around, `bands` wall subdivisions along the height.
pub fn cylinder(base: Vec3, radius: f64, height: f64, segments: usize, bands: usize) -> Result<TriMesh, GeomError> {
    let segments = segments.max(3);
    let bands = bands.max(1);
    let mut vertices = Vec::with_capacity(segments * (bands + 1) + 2);
    for b in 0..=bands {
        let z = height * b as f64 / bands as f64;
        for s in 0..segments {
            let a = TAU * s as f64 / segments as f64;
            vertices.push(base + Vec3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let bottom = vertices.len();
    vertices.push(base);
    let top = vertices.len();
    vertices.push(base + Vec3::new(0.0, 0.0, height));
    let ring = |b: usize, s: usize| b * segments + s % segments;
    let mut faces = Vec::with_capacity(2 * segments * (bands + 1));
    for b in 0..bands {
        for s in 0..segments {
            let (a0, a1, b0, b1) = (ring(b, s), ring(b, s + 1), ring(b + 1, s), ring(b + 1, s + 1));
            faces.push([a0, a1, b1]);
            faces.push([a0, b1, b0]);
        }
    }
    for s in 0..segments {
        faces.push([bottom, ring(0, s + 1), ring(0, s)]);
        faces.push([top, ring(bands, s), ring(bands, s + 1)]);
    }
    TriMesh::new(vertices, faces)
}

/// Axis-aligned closed box.
pub fn cuboid(min: Vec3, max: Vec3) -> Result<TriMesh, GeomError> {
    let vertices: Vec<Vec3> = (0..8)
        .map(|i| {
            Vec3::new(
                if i & 4 != 0 { max.x } else { min.x },
                if i & 2 != 0 { max.y } else { min.y },
                if i & 1 != 0 { max.z } else { min.z },
            )
        })
        .collect();
    let faces = vec![
        [0, 1, 3], [0, 3, 2], // -x
        [4, 6, 7], [4, 7, 5], // +x
        [0, 4, 5], [0, 5, 1], // -y
        [2, 3, 7], [2, 7, 6], // +y
        [0, 2, 6], [0, 6, 4], // -z
        [1, 5, 7], [1, 7, 3], // +z
    ];
    TriMesh::new(vertices, faces)
}

/// Square `n`×`n`-cell grid in the plane `z = centre.z`, normals along +z.
pub fn grid(centre: Vec3, size: f64, n: usize) -> Result<TriMesh, GeomError> {
    let n = n.max(1);
    let step = size / n as f64;
    let origin = centre - Vec3::new(size / 2.0, size / 2.0, 0.0);
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(origin + Vec3::new(i as f64 * step, j as f64 * step, 0.0));
        }
    }
    let at = |i: usize, j: usize| j * (n + 1) + i;
    let mut faces = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            faces.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            faces.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    TriMesh::new(vertices, faces)
}

/// Closed latitude-longitude sphere with `2·slices·(stacks − 1)` faces.
pub fn uv_sphere(centre: Vec3, radius: f64, stacks: usize, slices: usize) -> Result<TriMesh, GeomError> {
    let stacks = stacks.max(2);
    let slices = slices.max(3);
    let mut vertices = Vec::with_capacity((stacks - 1) * slices + 2);
    vertices.push(centre + Vec3::new(0.0, 0.0, radius));
    for i in 1..stacks {
        let phi = std::f64::consts::PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let theta = TAU * j as f64 / slices as f64;
            vertices.push(centre + Vec3::new(phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos()) * radius);
        }
    }
    let south = vertices.len();
    vertices.push(centre - Vec3::new(0.0, 0.0, radius));
    let at = |i: usize, j: usize| 1 + (i - 1) * slices + j % slices;
    let mut faces = Vec::with_capacity(2 * slices * (stacks - 1));
    for j in 0..slices {
        faces.push([0, at(1, j), at(1, j + 1)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            faces.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            faces.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    for j in 0..slices {
        faces.push([south, at(stacks - 1, j + 1), at(stacks - 1, j)]);
    }
    TriMesh::new(vertices, faces)
}

/// Disjoint union of meshes.
pub fn merge(meshes: &[TriMesh]) -> Result<TriMesh, GeomError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for m in meshes {
        let offset = vertices.len();
        vertices.extend_from_slice(m.vertices());
        faces.extend(m.faces().iter().map(|f| f.map(|i| i + offset)));
    }
    TriMesh::new(vertices, faces)
}
