//! Per-edge curve model: a quadratic Bezier with fixed endpoints and one
//! interior control point, fitted by least squares.

use serde::{Deserialize, Serialize};

use crate::error::BezierError;
use crate::graph::Point2;

const MAX_LM_ITERS: usize = 200;
const CONTROL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeCurve {
    pub p0: Point2,
    pub c: Point2,
    pub p1: Point2,
}

impl EdgeCurve {
    pub fn new(p0: Point2, c: Point2, p1: Point2) -> Self {
        Self { p0, c, p1 }
    }

    /// Straight segment: control at the chord midpoint.
    pub fn straight(p0: Point2, p1: Point2) -> Self {
        Self::new(p0, p0.lerp(p1, 0.5), p1)
    }

    pub fn eval(&self, t: f64) -> Point2 {
        let s = 1.0 - t;
        let (a, b, c) = (s * s, 2.0 * t * s, t * t);
        Point2::new(
            a * self.p0.x + b * self.c.x + c * self.p1.x,
            a * self.p0.y + b * self.c.y + c * self.p1.y,
        )
    }

    fn derivative(&self, t: f64) -> Point2 {
        let d0 = self.c - self.p0;
        let d1 = self.p1 - self.c;
        d0.scale(2.0 * (1.0 - t)) + d1.scale(2.0 * t)
    }
}

/// Cubic control polygon equivalent to a quadratic curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCurve {
    pub p0: Point2,
    pub q1: Point2,
    pub q2: Point2,
    pub p1: Point2,
}

impl CubicCurve {
    pub fn eval(&self, t: f64) -> Point2 {
        let s = 1.0 - t;
        let w = [s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t];
        let pts = [self.p0, self.q1, self.q2, self.p1];
        pts.iter()
            .zip(w)
            .fold(Point2::new(0.0, 0.0), |acc, (p, w)| acc + p.scale(w))
    }
}

/// Least-squares fit of the interior control point through an ordered polyline.
///
/// The first and last points are the fixed endpoints. The control point and
/// the interior curve parameters are optimized jointly (Levenberg-Marquardt),
/// starting once from chord-length parameters and once from uniform ones;
/// the lower residual wins. Points sampled from a quadratic are recovered
/// exactly. A polyline with zero chord length yields `c == p0`.
pub fn fit_control_point(points: &[Point2]) -> Result<EdgeCurve, BezierError> {
    if points.len() < 3 {
        return Err(BezierError::TooFewPoints(points.len()));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(BezierError::NonFinite);
    }
    let p0 = points[0];
    let p1 = points[points.len() - 1];
    let n = points.len();

    let mut cum = Vec::with_capacity(n);
    let mut total = 0.0;
    cum.push(0.0);
    for w in points.windows(2) {
        total += w[0].distance(w[1]);
        cum.push(total);
    }
    if total == 0.0 {
        return Ok(EdgeCurve::new(p0, p0, p1));
    }
    let mut chord: Vec<f64> = cum.iter().map(|d| d / total).collect();
    chord[n - 1] = 1.0;
    let uniform: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();

    let best = [chord, uniform]
        .into_iter()
        .filter_map(|ts| {
            let c = solve_control(points, &ts, p0, p1)?;
            Some(refine(points, EdgeCurve::new(p0, c, p1), ts))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1));
    Ok(match best {
        Some((curve, _)) => curve,
        None => EdgeCurve::straight(p0, p1),
    })
}

/// Closed-form control point for fixed parameters.
fn solve_control(points: &[Point2], ts: &[f64], p0: Point2, p1: Point2) -> Option<Point2> {
    let (mut num, mut den) = (Point2::new(0.0, 0.0), 0.0);
    for (q, &t) in points.iter().zip(ts) {
        let s = 1.0 - t;
        let basis = 2.0 * t * s;
        let residual = *q - p0.scale(s * s) - p1.scale(t * t);
        num = num + residual.scale(basis);
        den += basis * basis;
    }
    (den > f64::EPSILON).then(|| num.scale(1.0 / den))
}

fn sse(curve: &EdgeCurve, points: &[Point2], ts: &[f64]) -> f64 {
    points
        .iter()
        .zip(ts)
        .map(|(q, &t)| {
            let r = curve.eval(t) - *q;
            r.dot(r)
        })
        .sum()
}

/// Levenberg-Marquardt over `(c, t_1 .. t_{n-2})`. The parameter block is
/// eliminated per point, leaving a 2x2 system for the control point.
fn refine(points: &[Point2], mut curve: EdgeCurve, mut ts: Vec<f64>) -> (EdgeCurve, f64) {
    let n = points.len();
    let mut err = sse(&curve, points, &ts);
    let mut lambda = 1e-6;
    for _ in 0..MAX_LM_ITERS {
        if err < 1e-28 {
            break;
        }
        // Reduced normal equations S * dc = -h for the control point.
        let (mut s11, mut s12, mut s22) = (0.0, 0.0, 0.0);
        let (mut h1, mut h2) = (0.0, 0.0);
        let mut per_point = Vec::with_capacity(n - 2);
        for k in 1..n - 1 {
            let t = ts[k];
            let b = 2.0 * t * (1.0 - t);
            let r = curve.eval(t) - points[k];
            let d = curve.derivative(t);
            let dd = d.dot(d);
            let htt = dd + lambda * dd.max(1e-12);
            let gt = d.dot(r);
            let hcc = b * b;
            let hcc_d = hcc + lambda * hcc.max(1e-12);
            s11 += hcc_d - b * b * d.x * d.x / htt;
            s22 += hcc_d - b * b * d.y * d.y / htt;
            s12 -= b * b * d.x * d.y / htt;
            h1 += b * r.x - b * d.x * gt / htt;
            h2 += b * r.y - b * d.y * gt / htt;
            per_point.push((b, d, gt, htt));
        }
        let det = s11 * s22 - s12 * s12;
        if det.abs() < 1e-300 {
            break;
        }
        let dc = Point2::new(-(s22 * h1 - s12 * h2) / det, -(s11 * h2 - s12 * h1) / det);
        let mut trial_ts = ts.clone();
        for (k, (b, d, gt, htt)) in (1..n - 1).zip(&per_point) {
            let dt = -(gt + b * d.dot(dc)) / htt;
            trial_ts[k] = (ts[k] + dt).clamp(0.0, 1.0);
        }
        let trial = EdgeCurve::new(curve.p0, curve.c + dc, curve.p1);
        let trial_err = sse(&trial, points, &trial_ts);
        if trial_err < err {
            let gain = err - trial_err;
            curve = trial;
            ts = trial_ts;
            err = trial_err;
            lambda = (lambda * 0.3).max(1e-12);
            if dc.dot(dc).sqrt() < CONTROL_TOL && gain < 1e-30 {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    (curve, err)
}

/// `n` points at uniform parameters `k / (n - 1)`; endpoints are exact.
pub fn sample_curve(e: &EdgeCurve, n: usize) -> Vec<Point2> {
    assert!(n >= 2, "sample_curve needs n >= 2");
    let mut out: Vec<Point2> = (0..n)
        .map(|k| e.eval(k as f64 / (n - 1) as f64))
        .collect();
    out[0] = e.p0;
    out[n - 1] = e.p1;
    out
}

pub fn elevate_to_cubic(e: &EdgeCurve) -> CubicCurve {
    CubicCurve {
        p0: e.p0,
        q1: e.p0 + (e.c - e.p0).scale(2.0 / 3.0),
        q2: e.p1 + (e.c - e.p1).scale(2.0 / 3.0),
        p1: e.p1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn collinear_uniform_fits_chord_midpoint() {
        let pts: Vec<_> = (0..10).map(|i| p(i as f64, 0.0)).collect();
        let e = fit_control_point(&pts).unwrap();
        assert!(e.c.distance(p(4.5, 0.0)) < 1e-12, "{:?}", e.c);
    }

    #[test]
    fn identical_points_degenerate_to_p0() {
        let pts = vec![p(3.0, -1.0); 10];
        let e = fit_control_point(&pts).unwrap();
        assert_eq!(e.c, p(3.0, -1.0));
    }

    #[test]
    fn too_few_points() {
        assert_eq!(
            fit_control_point(&[p(0.0, 0.0), p(1.0, 0.0)]),
            Err(BezierError::TooFewPoints(2))
        );
    }

    #[test]
    fn exact_recovery_from_generated_curves() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let mut r = || p(rng.random_range(-40.0..40.0), rng.random_range(-20.0..20.0));
            let truth = EdgeCurve::new(r(), r(), r());
            if truth.p0.distance(truth.p1) < 1.0 {
                continue;
            }
            let pts = sample_curve(&truth, 10);
            let fit = fit_control_point(&pts).unwrap();
            assert!(
                fit.c.distance(truth.c) < 1e-9,
                "truth {:?} fit {:?}",
                truth.c,
                fit.c
            );
            for (a, b) in sample_curve(&fit, 10).iter().zip(&pts) {
                assert!(a.distance(*b) < 1e-6);
            }
        }
    }

    #[test]
    fn sampling_endpoints() {
        let e = EdgeCurve::new(p(0.1, 0.2), p(5.0, 7.0), p(9.3, -1.7));
        assert_eq!(sample_curve(&e, 2), vec![e.p0, e.p1]);
        let s = sample_curve(&e, 10);
        assert_eq!(s[0], e.p0);
        assert_eq!(s[9], e.p1);
        let straight = EdgeCurve::straight(p(0.0, 0.0), p(4.0, 2.0));
        assert_eq!(
            sample_curve(&straight, 3),
            vec![p(0.0, 0.0), p(2.0, 1.0), p(4.0, 2.0)]
        );
    }

    #[test]
    fn degree_elevation() {
        let e = EdgeCurve::new(p(0.0, 0.0), p(3.0, 3.0), p(6.0, 0.0));
        let c = elevate_to_cubic(&e);
        assert!(c.q1.distance(p(2.0, 2.0)) < 1e-12);
        assert!(c.q2.distance(p(4.0, 2.0)) < 1e-12);
        for k in 0..100 {
            let t = k as f64 / 99.0;
            assert!(c.eval(t).distance(e.eval(t)) <= 1e-9);
        }
        let z = elevate_to_cubic(&EdgeCurve::new(p(1.0, 1.0), p(1.0, 1.0), p(1.0, 1.0)));
        assert!([z.q1, z.q2, z.p1].iter().all(|q| *q == p(1.0, 1.0)));
    }
}
