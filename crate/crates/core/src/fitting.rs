//! Candidate ellipsoids for a symmetric body: minimum-volume enclosing
//! ellipsoids, second-moment (inertia) ellipsoids, volume equalisation and
//! uniform rejection sampling.

use alloc::vec;
use alloc::vec::Vec;

use crate::bodies::SymmetricBody;
use crate::error::{check_dim, Error, Result};
use crate::num::{det, inverse, mat_to_f64, quad_f64, rank, snap_symmetric, to_f64, unit_ball_volume, QMat, Q};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitSource {
    Mvee,
    Inertia,
    LatticeInertia,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidCandidate {
    pub ellipsoid: SymmetricBody,
    pub source: FitSource,
    pub fit_tolerance: f64,
}

fn ellipsoid_from_float(gram: &[Vec<f64>]) -> Result<SymmetricBody> {
    if gram.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    SymmetricBody::ellipsoid(snap_symmetric(gram))
}

fn dimension_of(points: &[Vec<f64>]) -> Result<usize> {
    let d = points.first().map(|p| p.len()).ok_or(Error::Empty("points"))?;
    if d == 0 {
        return Err(Error::InvalidArgument("zero-dimensional points".into()));
    }
    for p in points {
        check_dim(d, p.len())?;
    }
    Ok(d)
}

fn moment(points: &[Vec<f64>], weights: &[f64], d: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; d]; d];
    for (p, &w) in points.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for i in 0..d {
            for j in 0..=i {
                m[i][j] += w * p[i] * p[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            m[j][i] = m[i][j];
        }
    }
    m
}

const KHACHIYAN_MAX_ITER: usize = 200_000;

/// Khachiyan ascent on a fixed point list; returns `Q = X(u)⁻¹ / d`.
fn khachiyan(points: &[Vec<f64>], d: usize, eps: f64) -> Result<Vec<Vec<f64>>> {
    let n = points.len();
    let mut u = vec![1.0 / n as f64; n];
    let target = d as f64 * (1.0 + eps);
    for _ in 0..KHACHIYAN_MAX_ITER {
        let xinv = inverse(&moment(points, &u, d)).ok_or(Error::RankDeficient(d))?;
        let (j, mj) = points
            .iter()
            .map(|p| quad_f64(&xinv, p))
            .enumerate()
            .fold((0, f64::MIN), |b, (i, v)| if v > b.1 { (i, v) } else { b });
        if mj <= target {
            return Ok(xinv.iter().map(|r| r.iter().map(|v| v / d as f64).collect()).collect());
        }
        let step = (mj / d as f64 - 1.0) / (mj - 1.0);
        for w in u.iter_mut() {
            *w *= 1.0 - step;
        }
        u[j] += step;
    }
    Err(Error::Internal("Khachiyan iteration budget exhausted"))
}

/// Minimum-volume origin-centred ellipsoid containing `±points`, to within a
/// factor `1 + eps` in gauge.
pub fn mvee(points: &[Vec<f64>], eps: f64) -> Result<EllipsoidCandidate> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let d = dimension_of(points)?;
    if rank(points) < d {
        return Err(Error::RankDeficient(rank(points)));
    }
    // Core set: per-axis extremes plus the longest point; grown by violators.
    let mut core: Vec<usize> = Vec::new();
    for i in 0..d {
        let best = (0..points.len())
            .max_by(|&a, &b| points[a][i].abs().total_cmp(&points[b][i].abs()))
            .unwrap_or(0);
        core.push(best);
    }
    let longest = (0..points.len())
        .max_by(|&a, &b| {
            points[a]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .total_cmp(&points[b].iter().map(|v| v * v).sum())
        })
        .unwrap_or(0);
    core.push(longest);
    let inner = eps / 2.0;
    loop {
        core.sort_unstable();
        core.dedup();
        let sub: Vec<Vec<f64>> = core.iter().map(|&i| points[i].clone()).collect();
        let gram = if rank(&sub) < d { None } else { Some(khachiyan(&sub, d, inner)?) };
        let mut worst: Vec<(f64, usize)> = match &gram {
            Some(g) => points
                .iter()
                .enumerate()
                .map(|(i, p)| (quad_f64(g, p), i))
                .filter(|(v, _)| *v > 1.0 + eps)
                .collect(),
            None => (0..points.len()).filter(|i| !core.contains(i)).map(|i| (1.0, i)).collect(),
        };
        if let (Some(g), true) = (&gram, worst.is_empty()) {
            let ellipsoid = ellipsoid_from_float(g)?;
            return Ok(EllipsoidCandidate {
                ellipsoid,
                source: FitSource::Mvee,
                fit_tolerance: eps,
            });
        }
        worst.sort_by(|a, b| b.0.total_cmp(&a.0));
        core.extend(worst.iter().take(4 * d).map(|w| w.1));
    }
}

fn inertia_from_moment(m: &[Vec<f64>], source: FitSource, samples: usize) -> Result<EllipsoidCandidate> {
    let d = m.len();
    let minv = inverse(m).ok_or(Error::RankDeficient(d))?;
    // A uniform ellipsoid with gram G has second moment G⁻¹ / (d + 2).
    let gram: Vec<Vec<f64>> = minv.iter().map(|r| r.iter().map(|v| v / (d + 2) as f64).collect()).collect();
    let ellipsoid = ellipsoid_from_float(&gram).map_err(|e| match e {
        Error::NotPositiveDefinite => Error::RankDeficient(d),
        e => e,
    })?;
    Ok(EllipsoidCandidate {
        ellipsoid,
        source,
        fit_tolerance: 1.0 / libm::sqrt(samples as f64),
    })
}

/// Second-moment matrix `mean(x xᵀ)` of float samples.
pub fn second_moment(samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = dimension_of(samples)?;
    let w = vec![1.0 / samples.len() as f64; samples.len()];
    Ok(moment(samples, &w, d))
}

/// Exact second-moment matrix of integer points.
pub fn lattice_moment(points: &[Vec<i64>]) -> Result<QMat> {
    let d = points.first().map(|p| p.len()).ok_or(Error::Empty("points"))?;
    let mut m = vec![vec![0i128; d]; d];
    for p in points {
        check_dim(d, p.len())?;
        for i in 0..d {
            for j in 0..d {
                m[i][j] += p[i] as i128 * p[j] as i128;
            }
        }
    }
    let n = Q::from_integer((points.len() as u64).into());
    Ok(m.iter()
        .map(|r| r.iter().map(|&v| Q::from_integer(v.into()) / &n).collect())
        .collect())
}

/// Ellipsoid whose uniform second moment matches the samples'.
pub fn inertia_ellipsoid(samples: &[Vec<f64>]) -> Result<EllipsoidCandidate> {
    let d = dimension_of(samples)?;
    if samples.len() < 10 * d * d {
        return Err(Error::InvalidArgument("inertia fit needs at least 10·d² samples".into()));
    }
    inertia_from_moment(&second_moment(samples)?, FitSource::Inertia, samples.len())
}

/// Inertia ellipsoid of a lattice point set, from its exact moment.
pub fn lattice_inertia_ellipsoid(points: &[Vec<i64>]) -> Result<EllipsoidCandidate> {
    let m = lattice_moment(points)?;
    let d = m.len();
    if points.len() < 10 * d * d {
        return Err(Error::InvalidArgument("inertia fit needs at least 10·d² points".into()));
    }
    inertia_from_moment(&mat_to_f64(&m), FitSource::LatticeInertia, points.len())
}

fn ellipsoid_volume(gram: &QMat) -> f64 {
    unit_ball_volume(gram.len()) / libm::sqrt(to_f64(&det(gram)))
}

/// Rescales the candidate so its volume equals `target_vol`.
pub fn equalize_volume(e: &EllipsoidCandidate, target_vol: f64) -> Result<SymmetricBody> {
    if !(target_vol > 0.0) || !target_vol.is_finite() {
        return Err(Error::InvalidArgument("target volume must be positive".into()));
    }
    let mut body = e.ellipsoid.clone();
    let d = body.dim() as f64;
    for _ in 0..3 {
        let gram = body.gram().ok_or(Error::Internal("candidate is not an ellipsoid"))?;
        let k = libm::pow(ellipsoid_volume(gram) / target_vol, 2.0 / d);
        if (k - 1.0).abs() < 1e-13 {
            break;
        }
        let scaled: Vec<Vec<f64>> = mat_to_f64(gram).iter().map(|r| r.iter().map(|v| v * k).collect()).collect();
        body = ellipsoid_from_float(&scaled)?;
    }
    Ok(body)
}

const MIN_ACCEPTANCE: f64 = 1e-6;
const ACCEPTANCE_PROBE: usize = 1_000_000;

/// `n` uniform points of `body` by rejection from its bounding box.
pub fn uniform_sample(body: &SymmetricBody, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let half: Vec<f64> = body.bounding_box()?.iter().map(|r| r.upper_f64()).collect();
    let mut out = Vec::with_capacity(n);
    let mut trial = 0u64;
    while out.len() < n {
        let mut r = rng::stream(seed, trial);
        trial += 1;
        let x: Vec<f64> = half.iter().map(|&h| rng::symmetric_f64(&mut r, h)).collect();
        if body.contains_f64(&x) {
            out.push(x);
        }
        if trial as usize >= ACCEPTANCE_PROBE && (out.len() as f64) < MIN_ACCEPTANCE * trial as f64 {
            return Err(Error::LowAcceptance);
        }
    }
    Ok(out)
}

/// Samples per dimension fed to the enclosing-ellipsoid fit.
pub const MVEE_SAMPLES_PER_DIM: usize = 1_000;
/// Gauge tolerance of the enclosing-ellipsoid fit.
pub const MVEE_EPS: f64 = 1e-3;

/// Equal-volume ellipsoid candidates for `c`, in the order MVEE, inertia,
/// lattice inertia. The last is omitted when there are too few lattice
/// points or they do not span.
pub fn candidate_ellipsoids(
    c: &SymmetricBody,
    lattice_points: &[Vec<i64>],
    mc_samples: usize,
    seed: u64,
    eps: f64,
) -> Result<Vec<EllipsoidCandidate>> {
    let d = c.dim();
    let target = c.volume_seeded(mc_samples, rng::derive(seed, 1))?.value;
    let n_inertia = mc_samples.max(10 * d * d);
    let samples = uniform_sample(c, n_inertia, rng::derive(seed, 2))?;

    let mut hull: Vec<Vec<f64>> = lattice_points.iter().map(|p| p.iter().map(|&v| v as f64).collect()).collect();
    hull.extend(samples.iter().take(MVEE_SAMPLES_PER_DIM * d).cloned());
    let mut raw = vec![mvee(&hull, eps)?, inertia_ellipsoid(&samples)?];
    if lattice_points.len() >= 10 * d * d {
        match lattice_inertia_ellipsoid(lattice_points) {
            Ok(cand) => raw.push(cand),
            Err(Error::RankDeficient(_)) => {}
            Err(e) => return Err(e),
        }
    }
    raw.into_iter()
        .map(|cand| {
            let ellipsoid = equalize_volume(&cand, target)?;
            Ok(EllipsoidCandidate { ellipsoid, ..cand })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{enumerate_lattice, origin, DEFAULT_LIMIT};
    use crate::num::{q, qi};
    use num_traits::Zero;

    fn gram_f64(b: &SymmetricBody) -> Vec<Vec<f64>> {
        mat_to_f64(b.gram().unwrap())
    }

    fn close(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
        a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn frobenius_rel(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        let num: f64 = a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y) * (x - y)).sum();
        let den: f64 = b.iter().flatten().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn mvee_of_axis_points() {
        let pts = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let e = mvee(&pts, 1e-6).unwrap();
        assert!(close(&gram_f64(&e.ellipsoid), &[vec![1.0, 0.0], vec![0.0, 1.0]], 1e-5));
        let pts = vec![vec![2.0, 0.0], vec![-2.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let e = mvee(&pts, 1e-6).unwrap();
        assert!(close(&gram_f64(&e.ellipsoid), &[vec![0.25, 0.0], vec![0.0, 1.0]], 1e-5));
        assert_eq!(e.source, FitSource::Mvee);
    }

    #[test]
    fn mvee_contains_random_points() {
        let mut r = rng::stream(11, 0);
        let pts: Vec<Vec<f64>> = (0..100)
            .map(|_| {
                vec![
                    rng::symmetric_f64(&mut r, 3.0),
                    rng::symmetric_f64(&mut r, 1.0),
                    rng::symmetric_f64(&mut r, 2.0),
                ]
            })
            .collect();
        let eps = 1e-3;
        let e = mvee(&pts, eps).unwrap();
        // membership oracle: gauge of every input at most 1 + eps
        for p in &pts {
            assert!(e.ellipsoid.gauge_f64(p) <= 1.0 + eps, "{}", e.ellipsoid.gauge_f64(p));
        }
    }

    #[test]
    fn mvee_errors() {
        assert!(matches!(
            mvee(&[vec![1.0, 1.0], vec![2.0, 2.0]], 1e-3),
            Err(Error::RankDeficient(_))
        ));
        assert!(mvee(&[vec![1.0]], 0.0).is_err());
        assert!(mvee(&[], 1e-3).is_err());
    }

    #[test]
    fn inertia_of_disk_samples() {
        let disk = SymmetricBody::unit_ball(2).unwrap();
        let n = 1_000_000;
        let s = uniform_sample(&disk, n, 3).unwrap();
        let m = second_moment(&s).unwrap();
        // per-entry MC error from the sample fourth moments
        for i in 0..2 {
            for j in 0..2 {
                let mean = m[i][j];
                let var = s.iter().map(|x| (x[i] * x[j] - mean).powi(2)).sum::<f64>() / n as f64;
                let expect = if i == j { 0.25 } else { 0.0 };
                assert!((mean - expect).abs() <= 3.0 * (var / n as f64).sqrt(), "{i}{j} {mean}");
            }
        }
        let e = inertia_ellipsoid(&s).unwrap();
        assert!(close(&gram_f64(&e.ellipsoid), &[vec![1.0, 0.0], vec![0.0, 1.0]], 0.01));
    }

    #[test]
    fn lattice_moment_closed_form() {
        for n in 1..30i64 {
            let pts: Vec<Vec<i64>> = (-n..=n).map(|k| vec![k]).collect();
            // Σ k² over [−N, N] is N(N+1)(2N+1)/3
            let sum: i64 = (-n..=n).map(|k| k * k).sum();
            assert_eq!(sum, n * (n + 1) * (2 * n + 1) / 3);
            assert_eq!(lattice_moment(&pts).unwrap()[0][0], q(n * (n + 1), 3));
        }
    }

    #[test]
    fn symmetric_samples_have_zero_mean_contribution() {
        let pts = vec![vec![1i64, 2], vec![-1, -2], vec![3, 0], vec![-3, 0]];
        let m = lattice_moment(&pts).unwrap();
        let half = lattice_moment(&pts[..1]).unwrap();
        assert_eq!(m[0][1], (qi(2) + qi(0)) / qi(2));
        assert_eq!(half[0][1], qi(2));
    }

    #[test]
    fn equalize_disk() {
        let cand = EllipsoidCandidate {
            ellipsoid: SymmetricBody::unit_ball(2).unwrap(),
            source: FitSource::Inertia,
            fit_tolerance: 0.1,
        };
        let pi = core::f64::consts::PI;
        let b = equalize_volume(&cand, 4.0 * pi).unwrap();
        assert!(close(&gram_f64(&b), &[vec![0.25, 0.0], vec![0.0, 0.25]], 1e-14));
        let same = equalize_volume(&cand, pi).unwrap();
        assert_eq!(same, cand.ellipsoid);
        assert!(equalize_volume(&cand, 0.0).is_err());
    }

    #[test]
    fn equalize_matches_volume_formula() {
        let g = vec![vec![qi(1), qi(0)], vec![qi(0), qi(4)]];
        let cand = EllipsoidCandidate {
            ellipsoid: SymmetricBody::ellipsoid(g).unwrap(),
            source: FitSource::Mvee,
            fit_tolerance: 0.1,
        };
        let pi = core::f64::consts::PI;
        let b = equalize_volume(&cand, pi).unwrap();
        let v = b.exact_volume().unwrap();
        assert!((v / pi - 1.0).abs() < 1e-9);
        // volume π with diag(1,4)·k needs k² · 4 = 1, so k = 1/2
        assert!(close(&gram_f64(&b), &[vec![0.5, 0.0], vec![0.0, 2.0]], 1e-12));
        let again = EllipsoidCandidate {
            ellipsoid: b.clone(),
            ..cand
        };
        let b2 = equalize_volume(&again, pi).unwrap();
        assert!(frobenius_rel(&gram_f64(&b2), &gram_f64(&b)) < 1e-9);
    }

    #[test]
    fn sampling_membership_mean_and_determinism() {
        let disk = SymmetricBody::unit_ball(2).unwrap();
        let s = uniform_sample(&disk, 1000, 5).unwrap();
        assert!(s.iter().all(|x| disk.contains_f64(x)));
        assert_eq!(s, uniform_sample(&disk, 1000, 5).unwrap());
        let n = 100_000;
        let s = uniform_sample(&SymmetricBody::axis_box(&[qi(2), q(1, 3)]).unwrap(), n, 9).unwrap();
        for i in 0..2 {
            let mean = s.iter().map(|x| x[i]).sum::<f64>() / n as f64;
            let var = s.iter().map(|x| (x[i] - mean).powi(2)).sum::<f64>() / n as f64;
            assert!(mean.abs() <= 3.0 * (var / n as f64).sqrt());
        }
    }

    #[test]
    fn candidates_for_an_ellipsoid_are_proportional() {
        let g = vec![vec![q(1, 36), q(1, 120)], vec![q(1, 120), q(1, 16)]];
        let c = SymmetricBody::ellipsoid(g).unwrap();
        let pts = enumerate_lattice(&c, &origin(2), DEFAULT_LIMIT).unwrap().points;
        let cands = candidate_ellipsoids(&c, &pts, 100_000, 1, MVEE_EPS).unwrap();
        assert_eq!(cands.len(), 3);
        let target = gram_f64(&c);
        for cand in &cands {
            assert!(frobenius_rel(&gram_f64(&cand.ellipsoid), &target) < 0.05, "{:?}", cand.source);
        }
    }

    #[test]
    fn candidates_for_a_square_have_its_volume() {
        let c = SymmetricBody::axis_box(&[qi(1), qi(1)]).unwrap();
        let cands = candidate_ellipsoids(&c, &[], 20_000, 4, MVEE_EPS).unwrap();
        assert_eq!(
            cands.iter().map(|c| c.source).collect::<Vec<_>>(),
            vec![FitSource::Mvee, FitSource::Inertia]
        );
        for cand in &cands {
            assert!((cand.ellipsoid.exact_volume().unwrap() / 4.0 - 1.0).abs() < 1e-6);
            assert!(!cand.ellipsoid.gram().unwrap()[0][0].is_zero());
        }
    }
}
