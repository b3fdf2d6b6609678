//! Exact disk / axis-aligned-rectangle overlap area in the plane.
//!
//! The overlap is the integral over x of the covered y-length. Between
//! consecutive breakpoints (the x where the circle height equals a
//! rectangle edge, plus the range ends) the integrand is one of five
//! closed forms, identified by evaluating at the piece midpoint; each
//! piece then integrates exactly through the circular-segment
//! antiderivative H(x) = (x sqrt(r^2 - x^2) + r^2 asin(x/r)) / 2.

use crate::error::{Error, Result};

/// Antiderivative of sqrt(r^2 - x^2) on [-r, r].
///
/// The radicand is factored as (r - x)(r + x): near x = +-r the matching
/// factor is exact by Sterbenz subtraction, and atan2 in place of
/// asin(x/r) avoids the derivative blowup at the endpoints. Both guard
/// against O(sqrt(ulp)) area errors when a rectangle edge grazes the
/// disk.
fn circle_antiderivative(x: f64, r: f64) -> f64 {
    let s = ((r - x) * (r + x)).max(0.0).sqrt();
    0.5 * (x * s + r * r * x.atan2(s))
}

/// Area of the disk of radius `r` around `center` intersected with the
/// rectangle [lower, upper].
pub fn disk_rect_overlap(center: [f64; 2], r: f64, lower: [f64; 2], upper: [f64; 2]) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Parameter(format!(
            "disk radius must be positive, got {}",
            r
        )));
    }
    for v in center.iter().chain(&lower).chain(&upper) {
        if !v.is_finite() {
            return Err(Error::Parameter(
                "disk overlap needs finite coordinates".to_string(),
            ));
        }
    }
    for axis in 0..2 {
        if lower[axis] > upper[axis] {
            return Err(Error::Parameter(format!(
                "rectangle bounds are reversed on axis {}: {} > {}",
                axis, lower[axis], upper[axis]
            )));
        }
    }
    // Disk-centered coordinates.
    let a1 = lower[0] - center[0];
    let a2 = upper[0] - center[0];
    let b1 = lower[1] - center[1];
    let b2 = upper[1] - center[1];
    let xlo = a1.max(-r);
    let xhi = a2.min(r);
    if xhi <= xlo {
        return Ok(0.0);
    }
    let mut cuts = vec![xlo, xhi];
    for b in [b1, b2] {
        if b.abs() < r {
            let t = ((r - b) * (r + b)).sqrt();
            for x in [-t, t] {
                if x > xlo && x < xhi {
                    cuts.push(x);
                }
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        // Within a piece the active bounds never switch, so the midpoint
        // identifies them.
        let mid = 0.5 * (lo + hi);
        let h = ((r - mid) * (r + mid)).max(0.0).sqrt();
        let top = b2.min(h);
        let bottom = b1.max(-h);
        if top <= bottom {
            continue;
        }
        // Ties go to the arc branch: at a tangency (say b2 == r, midpoint
        // exactly under the top of the circle) the arc is the correct
        // integrand on the whole piece.
        let upper_part = if h <= b2 {
            circle_antiderivative(hi, r) - circle_antiderivative(lo, r)
        } else {
            b2 * (hi - lo)
        };
        let lower_part = if -h >= b1 {
            -(circle_antiderivative(hi, r) - circle_antiderivative(lo, r))
        } else {
            b1 * (hi - lo)
        };
        area += upper_part - lower_part;
    }
    Ok(area.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;
    use std::f64::consts::PI;

    /// Midpoint-rule integration of the covered y-length; no reuse of the
    /// closed form.
    fn overlap_numeric(center: [f64; 2], r: f64, lower: [f64; 2], upper: [f64; 2]) -> f64 {
        let n = 200_000;
        let w = upper[0] - lower[0];
        if w <= 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..n {
            let x = lower[0] + (i as f64 + 0.5) * w / n as f64;
            let dx = x - center[0];
            if dx.abs() >= r {
                continue;
            }
            let h = (r * r - dx * dx).sqrt();
            let ylen = (upper[1].min(center[1] + h) - lower[1].max(center[1] - h)).max(0.0);
            acc += ylen;
        }
        acc * w / n as f64
    }

    #[test]
    fn containments_are_exact() {
        // Rectangle contains the disk: full disk area.
        let a = disk_rect_overlap([0.3, 0.2], 1.0, [-2.0, -2.0], [2.0, 2.0]).unwrap();
        assert!((a - PI).abs() <= 4.0 * f64::EPSILON);
        // Disk contains the rectangle: full rectangle area.
        let a = disk_rect_overlap([0.0, 0.0], 5.0, [-1.0, 0.5], [1.0, 2.0]).unwrap();
        assert_eq!(a, 3.0);
        // Disjoint and externally tangent.
        assert_eq!(
            disk_rect_overlap([10.0, 10.0], 1.0, [0.0, 0.0], [1.0, 1.0]).unwrap(),
            0.0
        );
        assert_eq!(
            disk_rect_overlap([2.0, 0.5], 1.0, [0.0, 0.0], [1.0, 1.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn quarter_and_half_disks() {
        let a = disk_rect_overlap([0.0, 0.0], 1.0, [0.0, 0.0], [2.0, 2.0]).unwrap();
        assert!((a - PI / 4.0).abs() <= 1e-15);
        let a = disk_rect_overlap([0.0, 0.0], 1.0, [-1.0, 0.0], [1.0, 1.0]).unwrap();
        assert!((a - PI / 2.0).abs() <= 1e-15);
    }

    #[test]
    fn matches_numeric_integration() {
        let mut rng = stream(0x0f0f_5ca1e);
        for case in 0..14 {
            let r = [0.3, 1.0, 2.5][case % 3];
            let center = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let xs: [f64; 2] = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let ys: [f64; 2] = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let lower = [xs[0].min(xs[1]), ys[0].min(ys[1])];
            let upper = [xs[0].max(xs[1]), ys[0].max(ys[1])];
            let exact = disk_rect_overlap(center, r, lower, upper).unwrap();
            let numeric = overlap_numeric(center, r, lower, upper);
            assert!(
                (exact - numeric).abs() <= 1e-5,
                "case {}: exact {} numeric {}",
                case,
                exact,
                numeric
            );
            assert!(exact >= 0.0);
            assert!(exact <= PI * r * r + 1e-12);
            assert!(exact <= (upper[0] - lower[0]) * (upper[1] - lower[1]) + 1e-12);
        }
    }

    #[test]
    fn overlap_validation() {
        assert!(disk_rect_overlap([0.0, 0.0], 0.0, [0.0, 0.0], [1.0, 1.0]).is_err());
        assert!(disk_rect_overlap([0.0, 0.0], 1.0, [1.0, 0.0], [0.0, 1.0]).is_err());
        assert!(disk_rect_overlap([f64::NAN, 0.0], 1.0, [0.0, 0.0], [1.0, 1.0]).is_err());
    }
}
