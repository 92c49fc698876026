//! Membership in and volume of Minkowski sums `t₁C + t₂B`.
//!
//! Membership is decided by convex feasibility in floating point: cheap
//! radial and supporting-hyperplane certificates settle most points, and the
//! rest minimise the gauge of the ellipsoidal summand over the other summand
//! by Frank–Wolfe (away steps when that summand is a polytope). Two polytopes
//! are handled by a small linear program instead.

use alloc::vec;
use alloc::vec::Vec;

use crate::bodies::{count_hits, BodyKind, ExactReal, SymmetricBody, VolumeEstimate};
use crate::error::{check_dim, Error, Result};
use crate::lp::{maximize_lex, LpOutcome};
use crate::num::{dot_f64, inverse, mat_vec_f64, to_f64};
use crate::rng;

/// Default gauge slack for membership decisions.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Frank–Wolfe steps per dimension.
pub const STEPS_PER_DIM: usize = 200;

const EXTRA_DIRECTIONS_PER_DIM: usize = 24;

/// Floating view of a body with a linear maximisation oracle.
#[derive(Debug, Clone)]
enum FloatBody {
    Ellipsoid { gram: Vec<Vec<f64>>, inv: Vec<Vec<f64>> },
    Polytope { forms: Vec<Vec<f64>>, vertices: Vec<Vec<f64>> },
}

impl FloatBody {
    fn new(body: &SymmetricBody) -> Result<Self> {
        match body.kind() {
            BodyKind::Ellipsoid => {
                let gram = body.gram().ok_or(Error::Internal("ellipsoid without gram"))?;
                let inv = inverse(gram).ok_or(Error::NotPositiveDefinite)?;
                Ok(FloatBody::Ellipsoid {
                    gram: body.float_data().to_vec(),
                    inv: inv.iter().map(|r| r.iter().map(to_f64).collect()).collect(),
                })
            }
            BodyKind::Polytope => {
                let vertices = body
                    .polytope_vertices()
                    .ok_or(Error::Internal("polytope without vertices"))?
                    .iter()
                    .map(|v| v.iter().map(to_f64).collect())
                    .collect();
                Ok(FloatBody::Polytope {
                    forms: body.float_data().to_vec(),
                    vertices,
                })
            }
        }
    }

    fn gauge(&self, x: &[f64]) -> f64 {
        match self {
            FloatBody::Ellipsoid { gram, .. } => libm::sqrt(dot_f64(x, &mat_vec_f64(gram, x)).max(0.0)),
            FloatBody::Polytope { forms, .. } => forms.iter().map(|f| dot_f64(f, x).abs()).fold(0.0, f64::max),
        }
    }

    /// Support function value `h(u)`.
    fn support_value(&self, u: &[f64]) -> f64 {
        match self {
            FloatBody::Ellipsoid { inv, .. } => libm::sqrt(dot_f64(u, &mat_vec_f64(inv, u)).max(0.0)),
            FloatBody::Polytope { vertices, .. } => vertices.iter().map(|v| dot_f64(u, v)).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Maximiser of `⟨u, x⟩`; for polytopes the vertex index as well.
    fn argmax(&self, u: &[f64]) -> (Vec<f64>, Option<usize>) {
        match self {
            FloatBody::Ellipsoid { inv, .. } => {
                let w = mat_vec_f64(inv, u);
                let s = libm::sqrt(dot_f64(u, &w).max(0.0));
                if s == 0.0 {
                    (vec![0.0; u.len()], None)
                } else {
                    (w.iter().map(|v| v / s).collect(), None)
                }
            }
            FloatBody::Polytope { vertices, .. } => {
                let mut best = 0;
                let mut best_val = f64::NEG_INFINITY;
                for (i, v) in vertices.iter().enumerate() {
                    let val = dot_f64(u, v);
                    if val > best_val {
                        best_val = val;
                        best = i;
                    }
                }
                (vertices[best].clone(), Some(best))
            }
        }
    }
}

/// Precomputed data for repeated membership queries in `t₁C + t₂B`.
#[derive(Debug, Clone)]
pub struct MinkowskiSum {
    dim: usize,
    c: FloatBody,
    t1: f64,
    b: FloatBody,
    t2: f64,
    /// Directions `u` with `h_K(u)` for outer certificates.
    directions: Vec<(Vec<f64>, f64)>,
    tol: f64,
}

impl MinkowskiSum {
    pub fn new(c: &SymmetricBody, t1: f64, b: &SymmetricBody, t2: f64, tol: f64) -> Result<Self> {
        check_dim(c.dim(), b.dim())?;
        if !(t1 > 0.0 && t2 > 0.0 && tol > 0.0) {
            return Err(Error::InvalidArgument("scales and tolerance must be positive".into()));
        }
        let d = c.dim();
        let fc = FloatBody::new(c)?;
        let fb = FloatBody::new(b)?;
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for i in 0..d {
            dirs.push((0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect());
        }
        for body in [&fc, &fb] {
            match body {
                FloatBody::Polytope { forms, .. } => dirs.extend(forms.iter().cloned()),
                FloatBody::Ellipsoid { gram, .. } => dirs.extend(gram.iter().cloned()),
            }
        }
        let mut stream = rng::stream(0x6d69_6e6b, d as u64);
        for _ in 0..EXTRA_DIRECTIONS_PER_DIM * d {
            dirs.push((0..d).map(|_| rng::symmetric_f64(&mut stream, 1.0)).collect());
        }
        let directions = dirs
            .into_iter()
            .filter(|u| u.iter().any(|v| *v != 0.0))
            .map(|u| {
                let h = t1 * fc.support_value(&u) + t2 * fb.support_value(&u);
                (u, h)
            })
            .collect();
        Ok(MinkowskiSum {
            dim: d,
            c: fc,
            t1,
            b: fb,
            t2,
            directions,
            tol,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether `x ∈ t₁C + t₂B` up to gauge slack `tol`.
    pub fn contains(&self, x: &[f64]) -> bool {
        let limit = 1.0 + self.tol;
        let g1 = self.c.gauge(x) / self.t1;
        let g2 = self.b.gauge(x) / self.t2;
        if g1 == 0.0 || g2 == 0.0 {
            return true;
        }
        // Radial split x = αx + (1−α)x gives gauge_K(x) ≤ g₁g₂/(g₁+g₂).
        if g1 * g2 / (g1 + g2) <= limit {
            return true;
        }
        // Any direction gives gauge_K(x) ≥ |⟨u,x⟩| / h_K(u).
        for (u, h) in &self.directions {
            if dot_f64(u, x).abs() > limit * h {
                return false;
            }
        }
        match (&self.c, &self.b) {
            (FloatBody::Polytope { .. }, FloatBody::Polytope { .. }) => self.lp_contains(x, limit),
            (_, FloatBody::Ellipsoid { gram, .. }) => frank_wolfe(x, gram, self.t2, &self.c, self.t1, limit),
            (FloatBody::Ellipsoid { gram, .. }, _) => frank_wolfe(x, gram, self.t1, &self.b, self.t2, limit),
        }
    }

    /// Both summands polytopes: maximise μ with μx − y ∈ t₂B, y ∈ t₁C;
    /// the gauge of x is 1/μ*.
    fn lp_contains(&self, x: &[f64], limit: f64) -> bool {
        let (FloatBody::Polytope { forms: fc, .. }, FloatBody::Polytope { forms: fb, .. }) = (&self.c, &self.b) else {
            return false;
        };
        let d = self.dim;
        // variables: μ, y⁺ (d), y⁻ (d)
        let mut a: Vec<Vec<f64>> = Vec::new();
        let mut b: Vec<f64> = Vec::new();
        for f in fb {
            let fx = dot_f64(f, x);
            for sign in [1.0, -1.0] {
                let mut row = vec![sign * fx];
                row.extend(f.iter().map(|v| -sign * v));
                row.extend(f.iter().map(|v| sign * v));
                a.push(row);
                b.push(self.t2);
            }
        }
        for f in fc {
            for sign in [1.0, -1.0] {
                let mut row = vec![0.0];
                row.extend(f.iter().map(|v| sign * v));
                row.extend(f.iter().map(|v| -sign * v));
                a.push(row);
                b.push(self.t1);
            }
        }
        let mut obj = vec![0.0; 1 + 2 * d];
        obj[0] = 1.0;
        match maximize_lex(&a, &b, &[obj]) {
            Ok(LpOutcome::Optimal { x: sol, .. }) => sol[0] * limit >= 1.0,
            Ok(LpOutcome::Unbounded) => true,
            Err(_) => false,
        }
    }
}

/// Minimises `f(y) = (x−y)ᵀG(x−y)/tₑ²` over `y ∈ tₛS` and decides whether
/// `√f* ≤ limit`, stopping as soon as the value or the duality gap settles it.
fn frank_wolfe(x: &[f64], gram: &[Vec<f64>], te: f64, set: &FloatBody, ts: f64, limit: f64) -> bool {
    let d = x.len();
    let threshold = limit * limit;
    let te2 = te * te;
    let value = |y: &[f64]| {
        let r: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        dot_f64(&r, &mat_vec_f64(gram, &r)) / te2
    };
    let grad = |y: &[f64]| {
        let r: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        mat_vec_f64(gram, &r).into_iter().map(|v| -2.0 * v / te2).collect::<Vec<f64>>()
    };
    // Exact line search for the quadratic along direction `dir` from `y`, capped at `max_step`.
    let line = |g: &[f64], dir: &[f64], max_step: f64| {
        let slope = dot_f64(g, dir);
        let curv = 2.0 * dot_f64(dir, &mat_vec_f64(gram, dir)) / te2;
        if curv <= 0.0 || slope >= 0.0 {
            return 0.0;
        }
        (-slope / curv).min(max_step)
    };
    let budget = STEPS_PER_DIM * d;
    match set {
        FloatBody::Ellipsoid { .. } => {
            let mut y = vec![0.0; d];
            for _ in 0..budget {
                let g = grad(&y);
                let neg: Vec<f64> = g.iter().map(|v| -v).collect();
                let (s, _) = set.argmax(&neg);
                let s: Vec<f64> = s.iter().map(|v| v * ts).collect();
                let f = value(&y);
                if f <= threshold {
                    return true;
                }
                let dir: Vec<f64> = s.iter().zip(&y).map(|(a, b)| a - b).collect();
                let gap = -dot_f64(&g, &dir);
                if f - gap > threshold {
                    return false;
                }
                let step = line(&g, &dir, 1.0);
                if step == 0.0 {
                    break;
                }
                for (yi, di) in y.iter_mut().zip(&dir) {
                    *yi += step * di;
                }
            }
            value(&y) <= threshold
        }
        FloatBody::Polytope { vertices, .. } => {
            let verts: Vec<Vec<f64>> = vertices.iter().map(|v| v.iter().map(|c| c * ts).collect()).collect();
            let mut weights = vec![0.0; verts.len()];
            let start = {
                let (_, idx) = set.argmax(x);
                idx.unwrap_or(0)
            };
            weights[start] = 1.0;
            let mut y = verts[start].clone();
            for _ in 0..budget {
                let f = value(&y);
                if f <= threshold {
                    return true;
                }
                let g = grad(&y);
                let mut fw = 0;
                let mut fw_val = f64::INFINITY;
                for (i, v) in verts.iter().enumerate() {
                    let val = dot_f64(&g, v);
                    if val < fw_val {
                        fw_val = val;
                        fw = i;
                    }
                }
                let gy = dot_f64(&g, &y);
                let gap = gy - fw_val;
                if f - gap > threshold {
                    return false;
                }
                let mut away = None;
                let mut away_val = f64::NEG_INFINITY;
                for (i, v) in verts.iter().enumerate() {
                    if weights[i] > 0.0 {
                        let val = dot_f64(&g, v);
                        if val > away_val {
                            away_val = val;
                            away = Some(i);
                        }
                    }
                }
                let away = away.unwrap_or(fw);
                let (dir, max_step, toward) = if gap >= away_val - gy {
                    (verts[fw].iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<f64>>(), 1.0, true)
                } else {
                    let wa = weights[away];
                    let max = if wa < 1.0 { wa / (1.0 - wa) } else { f64::INFINITY };
                    (y.iter().zip(&verts[away]).map(|(a, b)| a - b).collect::<Vec<f64>>(), max, false)
                };
                let step = line(&g, &dir, max_step);
                if step <= 0.0 {
                    break;
                }
                for (yi, di) in y.iter_mut().zip(&dir) {
                    *yi += step * di;
                }
                if toward {
                    for w in weights.iter_mut() {
                        *w *= 1.0 - step;
                    }
                    weights[fw] += step;
                } else {
                    for w in weights.iter_mut() {
                        *w *= 1.0 + step;
                    }
                    weights[away] -= step;
                    if weights[away] < 1e-15 {
                        weights[away] = 0.0;
                    }
                }
            }
            value(&y) <= threshold
        }
    }
}

/// Whether `x ∈ t₁C + t₂B` up to gauge slack `tol`.
pub fn minkowski_member(x: &[f64], c: &SymmetricBody, t1: f64, b: &SymmetricBody, t2: f64, tol: f64) -> Result<bool> {
    check_dim(c.dim(), x.len())?;
    Ok(MinkowskiSum::new(c, t1, b, t2, tol)?.contains(x))
}

/// Minimum sample count accepted by [`minkowski_volume_mc`].
pub const MIN_MC_SAMPLES: usize = 1_000;

/// Rejection estimate of `vol(t₁C + t₂B)` inside the box of summed half-widths.
pub fn minkowski_volume_mc(c: &SymmetricBody, t1: f64, t2: f64, b: &SymmetricBody, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    if samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidArgument("Minkowski volume needs at least 1000 samples".into()));
    }
    let sum = MinkowskiSum::new(c, t1, b, t2, DEFAULT_TOL)?;
    let rc = c.bounding_box()?;
    let rb = b.bounding_box()?;
    let radii: Vec<f64> = rc
        .iter()
        .zip(&rb)
        .map(|(a, b)| t1 * ExactReal::upper_f64(a) + t2 * ExactReal::upper_f64(b))
        .collect();
    let box_volume: f64 = radii.iter().map(|r| 2.0 * r).product();
    let hits = count_hits(samples, seed, |stream| {
        let x: Vec<f64> = radii.iter().map(|&r| rng::symmetric_f64(stream, r)).collect();
        sum.contains(&x)
    });
    Ok(VolumeEstimate::from_hits(box_volume, hits, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{q, qi};
    use core::f64::consts::PI;

    fn disk() -> SymmetricBody {
        SymmetricBody::unit_ball(2).unwrap()
    }

    fn square() -> SymmetricBody {
        SymmetricBody::axis_box(&[qi(1), qi(1)]).unwrap()
    }

    #[test]
    fn membership_examples() {
        for (c, b) in [(disk(), disk()), (square(), square()), (disk(), square())] {
            assert!(minkowski_member(&[0.0, 0.0], &c, 1.0, &b, 1.0, 1e-6).unwrap());
        }
        assert!(minkowski_member(&[2.0, 0.0], &disk(), 1.0, &disk(), 1.0, 1e-6).unwrap());
        assert!(!minkowski_member(&[2.01, 0.0], &square(), 1.0, &square(), 1.0, 1e-6).unwrap());
        assert!(minkowski_member(&[2.0, 2.0], &square(), 1.0, &square(), 1.0, 1e-6).unwrap());
    }

    #[test]
    fn closed_form_cases_agree_on_a_grid() {
        // square + disk: points at distance ≤ 1 from [-1,1]².
        let sum = MinkowskiSum::new(&square(), 1.0, &disk(), 1.0, 1e-6).unwrap();
        let rot = SymmetricBody::polytope(vec![vec![qi(1), qi(1)], vec![qi(1), qi(-1)]]).unwrap();
        let ell = SymmetricBody::ellipsoid(vec![vec![q(1, 4), qi(0)], vec![qi(0), qi(1)]]).unwrap();
        let pp = MinkowskiSum::new(&square(), 1.0, &rot, 1.0, 1e-6).unwrap();
        let ee = MinkowskiSum::new(&ell, 2.0, &ell, 1.0, 1e-6).unwrap();
        for i in -30..=30 {
            for j in -30..=30 {
                let x = [i as f64 / 10.0 + 0.013, j as f64 / 10.0 - 0.007];
                let dx = (x[0].abs() - 1.0).max(0.0);
                let dy = (x[1].abs() - 1.0).max(0.0);
                let inside = dx * dx + dy * dy <= 1.0;
                assert_eq!(sum.contains(&x), inside, "{x:?}");
                // [-1,1]² + rotated square = octagon |x|,|y| ≤ 2, |x|+|y| ≤ 3
                let oct = x[0].abs() <= 2.0 && x[1].abs() <= 2.0 && x[0].abs() + x[1].abs() <= 3.0;
                assert_eq!(pp.contains(&x), oct, "{x:?}");
                // 2E + E = 3E
                let e3 = x[0] * x[0] / 36.0 + x[1] * x[1] / 9.0 <= 1.0;
                assert_eq!(ee.contains(&x), e3, "{x:?}");
            }
        }
    }

    #[test]
    fn frank_wolfe_on_skew_pairs() {
        // Ellipsoid + parallelogram, checked against a dense support-function oracle.
        let e = SymmetricBody::ellipsoid(vec![vec![qi(2), q(1, 2)], vec![q(1, 2), qi(1)]]).unwrap();
        let p = SymmetricBody::polytope(vec![vec![qi(1), q(1, 3)], vec![q(-1, 4), qi(1)]]).unwrap();
        let sum = MinkowskiSum::new(&e, 1.0, &p, 0.5, 1e-9).unwrap();
        let fe = FloatBody::new(&e).unwrap();
        let fp = FloatBody::new(&p).unwrap();
        let oracle = |x: &[f64]| {
            (0..20_000).all(|k| {
                let a = k as f64 * 2.0 * PI / 20_000.0;
                let u = [libm::cos(a), libm::sin(a)];
                dot_f64(&u, x) <= fe.support_value(&u) + 0.5 * fp.support_value(&u) + 1e-7
            })
        };
        let mut disagreements = 0;
        for i in -20..=20 {
            for j in -20..=20 {
                let x = [i as f64 * 0.1 + 0.003, j as f64 * 0.1 + 0.001];
                if sum.contains(&x) != oracle(&x) {
                    disagreements += 1;
                }
            }
        }
        assert_eq!(disagreements, 0);
    }

    #[test]
    fn volume_examples() {
        let v = minkowski_volume_mc(&disk(), 1.0, 1.0, &disk(), 100_000, 1).unwrap();
        assert!((v.value - 4.0 * PI).abs() <= 3.0 * v.std_error, "{v:?}");
        let v = minkowski_volume_mc(&square(), 1.0, 1.0, &disk(), 100_000, 2).unwrap();
        assert!((v.value - (12.0 + PI)).abs() <= 3.0 * v.std_error, "{v:?}");
        let cube = SymmetricBody::axis_box(&[qi(1), qi(1), qi(1)]).unwrap();
        let v = minkowski_volume_mc(&cube, 1.0, 1.0, &cube, 10_000, 3).unwrap();
        assert_eq!(v.value, 64.0);
        assert!((v.value - 64.0).abs() <= 3.0 * v.std_error + 1e-9);
    }

    #[test]
    fn volume_errors_and_determinism() {
        assert!(minkowski_volume_mc(&disk(), 1.0, 1.0, &disk(), 999, 1).is_err());
        let three = SymmetricBody::unit_ball(3).unwrap();
        assert!(minkowski_volume_mc(&disk(), 1.0, 1.0, &three, 1000, 1).is_err());
        let a = minkowski_volume_mc(&disk(), 1.0, 0.5, &square(), 5000, 9).unwrap();
        let b = minkowski_volume_mc(&disk(), 1.0, 0.5, &square(), 5000, 9).unwrap();
        assert_eq!(a, b);
    }
}
