use super::{GeomError, ProximityResult, Vec3, DEGENERATE_EPS};

/// An open polyline with precomputed cumulative arclength.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Vec3>,
    /// `arclength[i]` is the distance along the line from `points[0]` to `points[i]`.
    arclength: Vec<f64>,
}

/// Closest point on a polyline together with its arclength coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolylineProjection {
    pub result: ProximityResult,
    pub arclength: f64,
}

impl Polyline {
    pub fn new(points: Vec<Vec3>) -> Result<Self, GeomError> {
        if points.len() < 2 {
            return Err(GeomError::TooFewPoints(points.len()));
        }
        if let Some(index) = points.iter().position(|p| !p.is_finite()) {
            return Err(GeomError::NonFinite { what: "polyline point", index });
        }
        let mut arclength = Vec::with_capacity(points.len());
        arclength.push(0.0);
        for (index, w) in points.windows(2).enumerate() {
            let length = w[0].distance(w[1]);
            if length <= DEGENERATE_EPS {
                return Err(GeomError::DegenerateSegment { index, length });
            }
            arclength.push(arclength[index] + length);
        }
        Ok(Self { points, arclength })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn segment_count(&self) -> usize {
        self.points.len() - 1
    }

    pub fn length(&self) -> f64 {
        *self.arclength.last().expect("at least two points")
    }

    pub fn start(&self) -> Vec3 {
        self.points[0]
    }

    pub fn end(&self) -> Vec3 {
        *self.points.last().expect("at least two points")
    }

    pub fn cumulative_arclength(&self) -> &[f64] {
        &self.arclength
    }

    /// Unit direction of segment `i`.
    pub fn segment_tangent(&self, i: usize) -> Vec3 {
        let d = self.points[i + 1] - self.points[i];
        d / (self.arclength[i + 1] - self.arclength[i])
    }

    /// Index of the segment containing arclength `s` (clamped to the line).
    pub fn segment_at(&self, s: f64) -> usize {
        let last = self.segment_count() - 1;
        match self.arclength.binary_search_by(|a| a.total_cmp(&s)) {
            Ok(i) => i.min(last),
            Err(i) => i.saturating_sub(1).min(last),
        }
    }

    /// Point at arclength `s`, clamped to `[0, length]`.
    pub fn point_at(&self, s: f64) -> Vec3 {
        let s = s.clamp(0.0, self.length());
        let i = self.segment_at(s);
        let seg_len = self.arclength[i + 1] - self.arclength[i];
        let t = ((s - self.arclength[i]) / seg_len).clamp(0.0, 1.0);
        self.points[i].lerp(self.points[i + 1], t)
    }

    pub fn closest_point(&self, p: Vec3) -> ProximityResult {
        self.project(p).result
    }

    /// Global closest point over all segments. Equidistant candidates resolve
    /// to the lowest segment index.
    pub fn project(&self, p: Vec3) -> PolylineProjection {
        let mut best_i = 0;
        let mut best_point = self.points[0];
        let mut best_t = 0.0;
        let mut best_d2 = f64::INFINITY;
        for i in 0..self.segment_count() {
            let (q, t) = closest_on_segment(self.points[i], self.points[i + 1], p);
            let d2 = p.distance_squared(q);
            if d2 < best_d2 {
                best_d2 = d2;
                best_i = i;
                best_point = q;
                best_t = t;
            }
        }
        let seg_len = self.arclength[best_i + 1] - self.arclength[best_i];
        let mut result = ProximityResult::new(p, best_point, best_i);
        result.tangent = Some(self.segment_tangent(best_i));
        PolylineProjection { result, arclength: self.arclength[best_i] + best_t * seg_len }
    }
}

/// Closest point on segment `[a, b]` and its parameter in `[0, 1]`.
fn closest_on_segment(a: Vec3, b: Vec3, p: Vec3) -> (Vec3, f64) {
    let ab = b - a;
    let t = (p - a).dot(ab) / ab.norm_squared();
    if t <= 0.0 {
        (a, 0.0)
    } else if t >= 1.0 {
        (b, 1.0)
    } else {
        (a + ab * t, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_axis() -> Polyline {
        Polyline::new(vec![Vec3::ZERO, Vec3::new(10.0, 0.0, 0.0)]).unwrap()
    }

    #[test]
    fn perpendicular_projection() {
        let r = x_axis().closest_point(Vec3::new(5.0, 3.0, 0.0));
        assert_eq!(r.point, Vec3::new(5.0, 0.0, 0.0));
        assert_eq!(r.distance, 3.0);
        assert_eq!(r.tangent, Some(Vec3::X));
        assert_eq!(r.direction, Some(Vec3::new(0.0, -1.0, 0.0)));
    }

    #[test]
    fn query_on_vertex_is_zero_distance() {
        let line = Polyline::new(vec![
            Vec3::ZERO,
            Vec3::new(10.0, 0.0, 0.0),
            Vec3::new(10.0, 10.0, 0.0),
        ])
        .unwrap();
        let p = Vec3::new(10.0, 0.0, 0.0);
        let r = line.closest_point(p);
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.point, p);
        assert!(r.direction.is_none());
    }

    #[test]
    fn ties_pick_lowest_segment() {
        // Query equidistant from both legs of a V.
        let line = Polyline::new(vec![
            Vec3::new(-5.0, 5.0, 0.0),
            Vec3::ZERO,
            Vec3::new(5.0, 5.0, 0.0),
        ])
        .unwrap();
        let r = line.closest_point(Vec3::new(0.0, 5.0, 0.0));
        assert_eq!(r.feature_id, 0);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert_eq!(Polyline::new(vec![Vec3::ZERO]), Err(GeomError::TooFewPoints(1)));
        assert!(matches!(
            Polyline::new(vec![Vec3::ZERO, Vec3::ZERO]),
            Err(GeomError::DegenerateSegment { index: 0, .. })
        ));
        assert!(matches!(
            Polyline::new(vec![Vec3::ZERO, Vec3::new(f64::NAN, 0.0, 0.0)]),
            Err(GeomError::NonFinite { index: 1, .. })
        ));
    }

    #[test]
    fn arclength_and_point_at() {
        let line = Polyline::new(vec![
            Vec3::ZERO,
            Vec3::new(3.0, 0.0, 0.0),
            Vec3::new(3.0, 4.0, 0.0),
        ])
        .unwrap();
        assert_eq!(line.length(), 7.0);
        assert_eq!(line.point_at(5.0), Vec3::new(3.0, 2.0, 0.0));
        assert_eq!(line.point_at(-1.0), Vec3::ZERO);
        assert_eq!(line.point_at(100.0), Vec3::new(3.0, 4.0, 0.0));
        let proj = line.project(Vec3::new(4.0, 2.0, 0.0));
        assert_eq!(proj.arclength, 5.0);
        assert_eq!(proj.result.feature_id, 1);
    }
}
