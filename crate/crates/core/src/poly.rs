//! Small 2D polygon toolbox shared by scene generation and validation.
//!
//! All polygons are vertex lists in counter-clockwise or clockwise order;
//! functions that care about orientation normalize internally. Footprints in
//! this crate are convex (rectangles, regular n-gons, triangles), which the
//! clipping routine relies on.

/// Signed area via the shoelace formula (positive for CCW).
pub fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    acc / 2.0
}

pub fn area(poly: &[[f64; 2]]) -> f64 {
    signed_area(poly).abs()
}

/// Area centroid of a simple polygon.
pub fn centroid(poly: &[[f64; 2]]) -> [f64; 2] {
    let a = signed_area(poly);
    if a.abs() < 1e-15 {
        // Degenerate: fall back to vertex mean.
        let n = poly.len().max(1) as f64;
        let (sx, sy) = poly.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
        return [sx / n, sy / n];
    }
    let n = poly.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % n];
        let w = x0 * y1 - x1 * y0;
        cx += (x0 + x1) * w;
        cy += (y0 + y1) * w;
    }
    [cx / (6.0 * a), cy / (6.0 * a)]
}

/// Rotate by `yaw` about the origin, then translate by `(dx, dy)`.
pub fn transform(poly: &[[f64; 2]], yaw: f64, dx: f64, dy: f64) -> Vec<[f64; 2]> {
    let (s, c) = yaw.sin_cos();
    poly.iter()
        .map(|[x, y]| [c * x - s * y + dx, s * x + c * y + dy])
        .collect()
}

fn segments_properly_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let cross = |o: [f64; 2], p: [f64; 2], q: [f64; 2]| {
        (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])
    };
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// A polygon is simple when no two non-adjacent edges intersect and it has
/// at least three vertices.
pub fn is_simple(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            // Skip adjacent edges (shared endpoint).
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_properly_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

fn ensure_ccw(poly: &[[f64; 2]]) -> Vec<[f64; 2]> {
    if signed_area(poly) < 0.0 {
        poly.iter().rev().copied().collect()
    } else {
        poly.to_vec()
    }
}

/// Sutherland-Hodgman clip of `subject` against a convex `clip` polygon.
/// Returns the intersection polygon (possibly empty).
pub fn clip_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let clip = ensure_ccw(clip);
    let mut out = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if out.is_empty() {
            return out;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        let input = std::mem::take(&mut out);
        let inside = |p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= -1e-12;
        let intersect = |p: [f64; 2], q: [f64; 2]| -> [f64; 2] {
            let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
            let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
            let denom = dx * ey - dy * ex;
            if denom.abs() < 1e-18 {
                return p;
            }
            let t = ((a[0] - p[0]) * ey - (a[1] - p[1]) * ex) / denom;
            [p[0] + t * dx, p[1] + t * dy]
        };
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let prev = input[(j + m - 1) % m];
            match (inside(prev), inside(cur)) {
                (true, true) => out.push(cur),
                (true, false) => out.push(intersect(prev, cur)),
                (false, true) => {
                    out.push(intersect(prev, cur));
                    out.push(cur);
                }
                (false, false) => {}
            }
        }
    }
    out
}

/// Area of the intersection of two convex polygons.
pub fn intersection_area(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    area(&clip_convex(a, b))
}

/// Convex hull of a point set (monotone chain). Collinear points dropped.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|p, q| p[0].partial_cmp(&q[0]).unwrap().then(p[1].partial_cmp(&q[1]).unwrap()));
    pts.dedup_by(|p, q| (p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], p: [f64; 2], q: [f64; 2]| {
        (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * n);
    for &p in pts.iter() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 1e-15 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 1e-15 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Point-in-convex-polygon test; points within `tol` of the boundary count
/// as inside. The polygon may be in either winding order.
pub fn point_in_convex(poly: &[[f64; 2]], p: [f64; 2], tol: f64) -> bool {
    let poly = ensure_ccw(poly);
    let n = poly.len();
    if n == 0 {
        return false;
    }
    if n == 1 {
        let (dx, dy) = (p[0] - poly[0][0], p[1] - poly[0][1]);
        return (dx * dx + dy * dy).sqrt() <= tol;
    }
    if n == 2 {
        return point_segment_distance(p, poly[0], poly[1]) <= tol;
    }
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let edge_len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt().max(1e-18);
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        if cross / edge_len < -tol {
            return false;
        }
    }
    true
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 < 1e-18 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a[0] + t * dx, a[1] + t * dy);
    ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()
}

/// Axis-aligned bounds as (min_x, min_y, max_x, max_y).
pub fn bounds(poly: &[[f64; 2]]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in poly {
        b.0 = b.0.min(p[0]);
        b.1 = b.1.min(p[1]);
        b.2 = b.2.max(p[0]);
        b.3 = b.3.max(p[1]);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(cx: f64, cy: f64) -> Vec<[f64; 2]> {
        vec![
            [cx - 0.5, cy - 0.5],
            [cx + 0.5, cy - 0.5],
            [cx + 0.5, cy + 0.5],
            [cx - 0.5, cy + 0.5],
        ]
    }

    #[test]
    fn square_area_and_centroid() {
        let sq = unit_square(2.0, -1.0);
        assert!((area(&sq) - 1.0).abs() < 1e-12);
        let c = centroid(&sq);
        assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_of_shifted_squares() {
        let a = unit_square(0.0, 0.0);
        let b = unit_square(0.6, 0.0);
        // Overlap strip is 0.4 x 1.0.
        assert!((intersection_area(&a, &b) - 0.4).abs() < 1e-9);
        let c = unit_square(2.0, 0.0);
        assert!(intersection_area(&a, &c) < 1e-12);
    }

    #[test]
    fn bowtie_is_not_simple() {
        let bowtie = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(!is_simple(&bowtie));
        assert!(is_simple(&unit_square(0.0, 0.0)));
    }

    #[test]
    fn hull_and_containment() {
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!(point_in_convex(&hull, [0.5, 0.5], 1e-9));
        assert!(point_in_convex(&hull, [1.0, 1.0], 1e-9));
        assert!(!point_in_convex(&hull, [1.2, 0.5], 1e-9));
    }
}
