//! Bounding-volume hierarchy for exact nearest-primitive queries.
//!
//! The tree is built by median split along the longest axis of the centroid
//! bounds until a node holds at most [`LEAF_SIZE`] primitives. Queries visit
//! the nearer child first and prune any node whose box is strictly farther
//! than the best candidate, so equidistant primitives are still examined and
//! the lowest index wins. Results are therefore identical to a linear scan.

use super::Vec3;

pub(crate) const LEAF_SIZE: usize = 4;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        max: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    pub fn from_points(points: &[Vec3]) -> Aabb {
        points.iter().fold(Aabb::EMPTY, |b, &p| b.grow(p))
    }

    pub fn grow(self, p: Vec3) -> Aabb {
        Aabb { min: self.min.min(p), max: self.max.max(p) }
    }

    pub fn union(self, o: Aabb) -> Aabb {
        Aabb { min: self.min.min(o.min), max: self.max.max(o.max) }
    }

    pub fn centroid(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    /// Squared distance from `p` to the box (zero inside).
    #[inline]
    pub fn distance_squared(&self, p: Vec3) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        let dz = (self.min.z - p.z).max(0.0).max(p.z - self.max.z);
        dx * dx + dy * dy + dz * dz
    }

    /// Slab test for the ray `origin + t·dir`, `t ≥ 0`, given `1/dir`.
    fn hit_by_ray(&self, origin: Vec3, inv: Vec3) -> bool {
        let mut t0 = 0.0f64;
        let mut t1 = f64::INFINITY;
        for (o, i, lo, hi) in [
            (origin.x, inv.x, self.min.x, self.max.x),
            (origin.y, inv.y, self.min.y, self.max.y),
            (origin.z, inv.z, self.min.z, self.max.z),
        ] {
            let (a, b) = ((lo - o) * i, (hi - o) * i);
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
        t0 <= t1
    }

    /// Box padded so that rounding in primitive distance routines can never
    /// produce a value below the box lower bound.
    fn padded(self) -> Aabb {
        let scale = self.min.x.abs().max(self.min.y.abs()).max(self.min.z.abs())
            .max(self.max.x.abs()).max(self.max.y.abs()).max(self.max.z.abs());
        let pad = Vec3::splat(scale * 1e-12 + 1e-300);
        Aabb { min: self.min - pad, max: self.max + pad }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: u32, count: u32 },
    Inner { bounds: Aabb, left: u32, right: u32 },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Bvh {
    nodes: Vec<Node>,
    /// Primitive indices, permuted so each leaf owns a contiguous range.
    order: Vec<u32>,
}

impl Bvh {
    pub(crate) fn build(boxes: &[Aabb]) -> Bvh {
        let padded: Vec<Aabb> = boxes.iter().map(|b| b.padded()).collect();
        let centroids: Vec<Vec3> = boxes.iter().map(Aabb::centroid).collect();
        let mut order: Vec<u32> = (0..boxes.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * boxes.len() / LEAF_SIZE + 1);
        if !boxes.is_empty() {
            build_node(&padded, &centroids, &mut order, 0, &mut nodes);
        }
        Bvh { nodes, order }
    }

    pub(crate) fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 1,
                Node::Inner { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(&self.nodes, 0)
        }
    }

    /// Calls `visit` for every primitive whose box the ray `origin + t·dir`,
    /// `t ≥ 0`, passes through.
    pub(crate) fn for_each_on_ray<F: FnMut(usize)>(&self, origin: Vec3, dir: Vec3, mut visit: F) {
        if self.nodes.is_empty() {
            return;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx as usize];
            if !node.bounds().hit_by_ray(origin, inv) {
                continue;
            }
            match node {
                Node::Leaf { start, count, .. } => {
                    for &prim in &self.order[*start as usize..(*start + *count) as usize] {
                        visit(prim as usize);
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(*left);
                    stack.push(*right);
                }
            }
        }
    }

    /// Nearest primitive to `p` under `dist2`, which must return the squared
    /// distance from `p` to primitive `i`. Ties resolve to the lowest index.
    pub(crate) fn nearest<F: FnMut(usize) -> f64>(&self, p: Vec3, mut dist2: F) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut stack: Vec<(u32, f64)> = Vec::with_capacity(64);
        stack.push((0, self.nodes[0].bounds().distance_squared(p)));
        while let Some((idx, lower)) = stack.pop() {
            if let Some((_, bd)) = best {
                if lower > bd {
                    continue;
                }
            }
            match &self.nodes[idx as usize] {
                Node::Leaf { start, count, .. } => {
                    for &prim in &self.order[*start as usize..(*start + *count) as usize] {
                        let prim = prim as usize;
                        let d2 = dist2(prim);
                        let better = match best {
                            None => true,
                            Some((bi, bd)) => d2 < bd || (d2 == bd && prim < bi),
                        };
                        if better {
                            best = Some((prim, d2));
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left as usize].bounds().distance_squared(p);
                    let dr = self.nodes[*right as usize].bounds().distance_squared(p);
                    // Push the farther child first so the nearer one is popped next.
                    if dl <= dr {
                        stack.push((*right, dr));
                        stack.push((*left, dl));
                    } else {
                        stack.push((*left, dl));
                        stack.push((*right, dr));
                    }
                }
            }
        }
        best
    }
}

fn build_node(
    boxes: &[Aabb],
    centroids: &[Vec3],
    order: &mut [u32],
    offset: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    let bounds = order
        .iter()
        .fold(Aabb::EMPTY, |b, &i| b.union(boxes[i as usize]));
    let me = nodes.len() as u32;
    if order.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start: offset as u32, count: order.len() as u32 });
        return me;
    }
    let cb = order
        .iter()
        .fold(Aabb::EMPTY, |b, &i| b.grow(centroids[i as usize]));
    let ext = cb.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });
    // Placeholder, patched once both children exist.
    nodes.push(Node::Leaf { bounds, start: 0, count: 0 });
    let (lo, hi) = order.split_at_mut(mid);
    let left = build_node(boxes, centroids, lo, offset, nodes);
    let right = build_node(boxes, centroids, hi, offset + mid, nodes);
    nodes[me as usize] = Node::Inner { bounds, left, right };
    me
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_distance() {
        let b = Aabb { min: Vec3::ZERO, max: Vec3::splat(1.0) };
        assert_eq!(b.distance_squared(Vec3::splat(0.5)), 0.0);
        assert_eq!(b.distance_squared(Vec3::new(3.0, 0.5, 0.5)), 4.0);
        assert_eq!(b.distance_squared(Vec3::new(-1.0, -1.0, 0.5)), 2.0);
    }

    #[test]
    fn nearest_point_matches_scan() {
        let pts: Vec<Vec3> = (0..100)
            .map(|i| {
                let f = i as f64;
                Vec3::new((f * 0.37).sin() * 10.0, (f * 0.11).cos() * 10.0, f * 0.05)
            })
            .collect();
        let boxes: Vec<Aabb> = pts.iter().map(|&p| Aabb { min: p, max: p }).collect();
        let bvh = Bvh::build(&boxes);
        assert!(bvh.depth() <= 7);
        for q in [Vec3::ZERO, Vec3::new(5.0, -3.0, 2.0), Vec3::splat(20.0)] {
            let (i, d2) = bvh.nearest(q, |i| q.distance_squared(pts[i])).unwrap();
            let (j, e2) = pts
                .iter()
                .enumerate()
                .map(|(j, p)| (j, q.distance_squared(*p)))
                .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            assert_eq!((i, d2), (j, e2));
        }
    }

    #[test]
    fn empty_tree_has_no_nearest() {
        let bvh = Bvh::build(&[]);
        assert!(bvh.nearest(Vec3::ZERO, |_| 0.0).is_none());
    }
}
