//! Small planar polygon helpers: signed area, convexity, half-plane clipping.

/// Signed shoelace area; positive for counter-clockwise vertex order.
pub fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|k| {
            let (a, b) = (poly[k], poly[(k + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

pub fn perimeter(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n).map(|k| edge_length(poly[k], poly[(k + 1) % n])).sum()
}

pub(crate) fn edge_length(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

/// True for a counter-clockwise, strictly convex polygon with at least three
/// vertices.
pub fn is_convex_ccw(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut turning = 0.0;
    for k in 0..n {
        let (a, b, c) = (poly[k], poly[(k + 1) % n], poly[(k + 2) % n]);
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        if !(cross > 0.0) {
            return false;
        }
        turning += exterior_angle(a, b, c);
    }
    // A simple convex polygon turns exactly once.
    (turning - 2.0 * std::f64::consts::PI).abs() < 1e-9
}

/// Turning angle at `b` walking `a -> b -> c`, in `(-pi, pi]`.
pub fn exterior_angle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let (ux, uy) = (b[0] - a[0], b[1] - a[1]);
    let (vx, vy) = (c[0] - b[0], c[1] - b[1]);
    (ux * vy - uy * vx).atan2(ux * vx + uy * vy)
}

/// Keeps the part of a convex polygon where `nx * x + ny * y <= c`.
pub fn clip_halfplane(poly: &[[f64; 2]], nx: f64, ny: f64, c: f64) -> Vec<[f64; 2]> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..n {
        let (p, q) = (poly[k], poly[(k + 1) % n]);
        let fp = nx * p[0] + ny * p[1] - c;
        let fq = nx * q[0] + ny * q[1] - c;
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Intersection of a convex polygon with an axis-aligned box.
pub fn clip_box(poly: &[[f64; 2]], lo: [f64; 2], hi: [f64; 2]) -> Vec<[f64; 2]> {
    let mut p = clip_halfplane(poly, 1.0, 0.0, hi[0]);
    p = clip_halfplane(&p, -1.0, 0.0, -lo[0]);
    p = clip_halfplane(&p, 0.0, 1.0, hi[1]);
    clip_halfplane(&p, 0.0, -1.0, -lo[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_basics() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert_eq!(signed_area(&sq), 1.0);
        assert_eq!(perimeter(&sq), 4.0);
        assert!(is_convex_ccw(&sq));
        let mut cw = sq;
        cw.reverse();
        assert!(!is_convex_ccw(&cw));
        let clipped = clip_box(&sq, [0.5, -1.0], [2.0, 0.25]);
        assert!((signed_area(&clipped) - 0.125).abs() < 1e-15);
        let tri = clip_halfplane(&sq, 1.0, 1.0, 1.0);
        assert!((signed_area(&tri) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonconvex() {
        let dart = [[0.0, 0.0], [2.0, 0.0], [1.0, 0.5], [1.0, 2.0]];
        assert!(!is_convex_ccw(&dart));
        let star = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        assert!(!is_convex_ccw(&star));
    }
}
