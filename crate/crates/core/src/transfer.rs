//! Convex-to-ellipsoid transfer: surrogate selection, greedy packing and
//! covering, assembly of `P′` and `X′`, exact verification, and the
//! volume-ratio measurements that accompany it.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::Zero;

use crate::bodies::{SymmetricBody, VolumeEstimate, DEFAULT_MC_SAMPLES};
use crate::error::{check_dim, Error, Result};
use crate::fitting::{candidate_ellipsoids, FitSource, MVEE_EPS};
use crate::lattice::{enumerate_lattice, LatticePointSet, DEFAULT_LIMIT};
use crate::minkowski::minkowski_volume_mc;
use crate::num::{floor_int, int_to_i64, q, Q};
use crate::progressions::{Progression, ProgressionKind};
use crate::rng;
use crate::setops::{sumset, verify_cover, CoverCheck, FiniteSet};

fn diff(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Greedy maximal packing: points in order of increasing `B`-gauge (ties
/// lexicographic); a point is kept when its `B`-gauge distance to every kept
/// point is at least 1, so the half-bodies `y + B/2` are interior-disjoint.
pub fn greedy_packing(points: &LatticePointSet, b: &SymmetricBody) -> Result<Vec<Vec<i64>>> {
    if points.truncated {
        return Err(Error::Truncated { limit: points.len() });
    }
    check_dim(points.body.dim(), b.dim())?;
    let mut order: Vec<(Q, &Vec<i64>)> = points.points.iter().map(|n| (b.gauge_key_int(n), n)).collect();
    order.sort_by(|u, v| u.0.cmp(&v.0).then_with(|| u.1.cmp(v.1)));
    let mut kept: Vec<Vec<i64>> = Vec::new();
    for (_, x) in order {
        // recent picks are the likeliest to be close
        if kept.iter().rev().all(|y| b.compare_unit_int(&diff(x, y)) != Ordering::Less) {
            kept.push(x.clone());
        }
    }
    Ok(kept)
}

/// Pairwise `B`-gauge distances of `y` are all at least 1.
pub fn packing_ok(b: &SymmetricBody, y: &[Vec<i64>]) -> bool {
    (0..y.len()).all(|i| (0..i).all(|j| b.compare_unit_int(&diff(&y[i], &y[j])) != Ordering::Less))
}

/// Every point lies in `y + B` for some `y ∈ Y`.
pub fn covering_ok(points: &LatticePointSet, b: &SymmetricBody, y: &[Vec<i64>]) -> bool {
    points
        .points
        .iter()
        .all(|x| y.iter().rev().any(|yy| b.compare_unit_int(&diff(x, yy)) != Ordering::Greater))
}

pub fn verify_packing_covering(points: &LatticePointSet, b: &SymmetricBody, y: &[Vec<i64>]) -> bool {
    packing_ok(b, y) && covering_ok(points, b, y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverBound {
    pub lhs: usize,
    /// `vol(C + B/2) / vol(B/2)`.
    pub rhs: VolumeEstimate,
    /// `lhs ≤ rhs + 3·std_error`.
    pub holds: bool,
}

fn sq(x: f64) -> f64 {
    x * x
}

fn ratio(num: &VolumeEstimate, den: &VolumeEstimate) -> VolumeEstimate {
    let value = num.value / den.value;
    let rel = libm::sqrt(sq(num.relative_error()) + sq(den.relative_error()));
    let method = if num.std_error == 0.0 && den.std_error == 0.0 {
        num.method
    } else {
        crate::bodies::VolumeMethod::MonteCarlo
    };
    VolumeEstimate {
        value,
        std_error: value * rel,
        method,
        samples: num.samples.max(den.samples),
    }
}

/// Checks `|Y| ≤ vol(C + B/2) / vol(B/2)` within three standard errors.
pub fn covering_bound_check(c: &SymmetricBody, b: &SymmetricBody, y: &[Vec<i64>], samples: usize, seed: u64) -> Result<CoverBound> {
    check_dim(c.dim(), b.dim())?;
    let sum = minkowski_volume_mc(c, 1.0, 0.5, b, samples, seed)?;
    let half = b.scale(&q(1, 2))?.volume_seeded(samples, rng::derive(seed, 7))?;
    let rhs = ratio(&sum, &half);
    let lhs = y.len();
    Ok(CoverBound {
        lhs,
        holds: lhs as f64 <= rhs.value + 3.0 * rhs.std_error,
        rhs,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbmPoint {
    pub t1: f64,
    pub t2: f64,
    pub ratio: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbmReport {
    /// Largest ratio over the grid.
    pub c: f64,
    pub std_error: f64,
    pub points: Vec<RbmPoint>,
}

/// Relative volume mismatch tolerated between `C` and `B`, on top of three
/// standard errors of the estimates.
pub const VOLUME_MATCH_TOL: f64 = 1e-3;

/// `max_t vol(t₁C + t₂B)^{1/d} / ((t₁ + t₂)·V^{1/d})` for equal-volume bodies.
pub fn rbm_ratio(c: &SymmetricBody, b: &SymmetricBody, t_grid: &[(f64, f64)], samples: usize, seed: u64) -> Result<RbmReport> {
    check_dim(c.dim(), b.dim())?;
    if t_grid.is_empty() {
        return Err(Error::Empty("t_grid"));
    }
    let d = c.dim() as f64;
    let vc = c.volume_seeded(samples, rng::derive(seed, 11))?;
    let vb = b.volume_seeded(samples, rng::derive(seed, 12))?;
    let gap = (vc.value - vb.value).abs() / vc.value.max(vb.value);
    let noise = 3.0 * libm::sqrt(sq(vc.relative_error()) + sq(vb.relative_error()));
    if gap > VOLUME_MATCH_TOL + noise {
        return Err(Error::VolumeMismatch(vc.value, vb.value));
    }
    let mut points = Vec::with_capacity(t_grid.len());
    for (k, &(t1, t2)) in t_grid.iter().enumerate() {
        let s = minkowski_volume_mc(c, t1, t2, b, samples, rng::derive(seed, 100 + k as u64))?;
        let r = libm::pow(s.value / vc.value, 1.0 / d) / (t1 + t2);
        let rel = libm::sqrt(sq(s.relative_error()) + sq(vc.relative_error())) / d;
        points.push(RbmPoint {
            t1,
            t2,
            ratio: r,
            std_error: r * rel,
        });
    }
    let best = points.iter().fold(&points[0], |a, p| if p.ratio > a.ratio { p } else { a });
    Ok(RbmReport {
        c: best.ratio,
        std_error: best.std_error,
        points: points.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub source: FitSource,
    /// `None` when the candidate's lattice enumeration was truncated.
    pub y: Option<usize>,
    pub z: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub body: SymmetricBody,
    pub source: FitSource,
    pub y: Vec<Vec<i64>>,
    pub z: Vec<Vec<i64>>,
    /// `B ∩ Z^d`.
    pub b_points: LatticePointSet,
    pub scores: Vec<CandidateScore>,
}

/// Picks the candidate ellipsoid minimising `|Y|·|Z|` (then `|Y|`, then
/// candidate order). `Y` packs `points` with `B`; `Z` packs `B ∩ Z^d` with `C`.
pub fn select_surrogate(c: &SymmetricBody, points: &LatticePointSet, cfg: &TransferConfig) -> Result<Surrogate> {
    if points.truncated {
        return Err(Error::Truncated { limit: cfg.limit });
    }
    let cands = candidate_ellipsoids(c, &points.points, cfg.mc_samples, cfg.seed, cfg.fit_eps)?;
    let origin = vec![Q::zero(); c.dim()];
    let mut best: Option<(u128, usize, Surrogate)> = None;
    let mut scores = Vec::new();
    for cand in cands {
        let bset = enumerate_lattice(&cand.ellipsoid, &origin, cfg.limit)?;
        if bset.truncated {
            scores.push(CandidateScore {
                source: cand.source,
                y: None,
                z: None,
            });
            continue;
        }
        let y = greedy_packing(points, &cand.ellipsoid)?;
        let z = greedy_packing(&bset, c)?;
        scores.push(CandidateScore {
            source: cand.source,
            y: Some(y.len()),
            z: Some(z.len()),
        });
        let key = (y.len() as u128 * z.len() as u128, y.len());
        if best.as_ref().map_or(true, |b| key < (b.0, b.1)) {
            let s = Surrogate {
                body: cand.ellipsoid,
                source: cand.source,
                y,
                z,
                b_points: bset,
                scores: Vec::new(),
            };
            best = Some((key.0, key.1, s));
        }
    }
    let (_, _, mut s) = best.ok_or(Error::Truncated { limit: cfg.limit })?;
    s.scores = scores;
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferConfig {
    pub limit: usize,
    /// Samples for volumes and fitting.
    pub mc_samples: usize,
    /// Samples for the two covering-bound checks; 0 skips them.
    pub bound_samples: usize,
    pub fit_eps: f64,
    pub seed: u64,
    /// Optional reverse Brunn–Minkowski grid; empty skips the check.
    pub t_grid: Vec<(f64, f64)>,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            limit: DEFAULT_LIMIT,
            mc_samples: DEFAULT_MC_SAMPLES,
            bound_samples: DEFAULT_MC_SAMPLES,
            fit_eps: MVEE_EPS,
            seed: 0,
            t_grid: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransferCounts {
    /// `|C ∩ Z^d|` with `C` centred at the origin.
    pub c_points: usize,
    pub b_points: usize,
    /// Lattice points of `P` (its size).
    pub p_size: usize,
    pub y: usize,
    pub z: usize,
    pub x: usize,
    pub x_prime: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransferChecks {
    pub y_packing: bool,
    pub y_covering: bool,
    pub z_packing: bool,
    pub z_covering: bool,
    /// `A ⊆ P′ + X′`.
    pub cover: bool,
    /// `|X′| ≤ |X|·|Y|`.
    pub x_prime_bound: bool,
    /// `|B ∩ Z^d| ≤ |Z|·|C ∩ Z^d|`.
    pub b_count_bound: bool,
}

impl TransferChecks {
    pub fn all(&self) -> bool {
        self.y_packing && self.y_covering && self.z_packing && self.z_covering && self.cover && self.x_prime_bound && self.b_count_bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub surrogate: SymmetricBody,
    pub surrogate_source: FitSource,
    pub scores: Vec<CandidateScore>,
    /// Integer shift `s` with `P`'s coefficients written as `s + w`.
    pub shift: Vec<i64>,
    pub y: Vec<Vec<i64>>,
    pub z: Vec<Vec<i64>>,
    pub p_prime: Progression,
    pub x_prime: FiniteSet,
    pub counts: TransferCounts,
    /// `|B ∩ Z^d| / |C ∩ Z^d|`.
    pub b_over_c: Q,
    pub y_bound: Option<CoverBound>,
    pub z_bound: Option<CoverBound>,
    pub rbm: Option<RbmReport>,
    pub checks: TransferChecks,
    pub cover_witness: Option<Vec<Q>>,
    pub verified: bool,
}

/// Runs the transfer for `A ⊆ P + X`: returns an ellipsoid progression `P′`
/// with the frame of `P` and a translate set `X′ = X + {L(y) : y ∈ Y}` with
/// `A ⊆ P′ + X′`, where `L` is the linear part of the frame.
///
/// Coefficients of `P` are split as `n = s + w` with `s` the rounded center,
/// so `w` ranges over the lattice points of `C` centred at `c − s`.
pub fn transfer_pipeline(a: &FiniteSet, p: &Progression, x: &FiniteSet, cfg: &TransferConfig) -> Result<TransferReport> {
    if let CoverCheck::Uncovered { witness } = verify_cover(a, p, x, cfg.limit)? {
        return Err(Error::NotCovered { witness });
    }
    let c = p.body();
    let d = p.d();
    let mut shift = Vec::with_capacity(d);
    for ci in p.center() {
        let s = int_to_i64(&floor_int(&(ci + q(1, 2)))).ok_or_else(|| Error::Guard("center out of range".into()))?;
        shift.push(s);
    }
    let residual: Vec<Q> = p
        .center()
        .iter()
        .zip(&shift)
        .map(|(ci, &s)| ci - Q::from_integer(s.into()))
        .collect();
    let w = enumerate_lattice(c, &residual, cfg.limit)?.complete(cfg.limit)?;
    let origin = vec![Q::zero(); d];
    let c_set = if residual.iter().all(|v| v.is_zero()) {
        w.clone()
    } else {
        enumerate_lattice(c, &origin, cfg.limit)?.complete(cfg.limit)?
    };

    let sur = select_surrogate(c, &w, cfg)?;
    let shift_q: Vec<Q> = shift.iter().map(|&s| Q::from_integer(s.into())).collect();
    let p_prime = Progression::new(p.frame().clone(), sur.body.clone(), shift_q, ProgressionKind::Ellipsoid)?;

    let frame = p.frame().scaled()?;
    let ly = sur.y.iter().map(|y| frame.linear(y)).collect::<Result<Vec<_>>>()?;
    let group = p.frame().group().clone();
    let ly_set = FiniteSet::from_scaled(group, frame.scale, ly)?;
    let x_prime = sumset(x, &ly_set)?;

    let cover = verify_cover(a, &p_prime, &x_prime, cfg.limit)?;
    let counts = TransferCounts {
        c_points: c_set.len(),
        b_points: sur.b_points.len(),
        p_size: w.len(),
        y: sur.y.len(),
        z: sur.z.len(),
        x: x.len(),
        x_prime: x_prime.len(),
    };
    let checks = TransferChecks {
        y_packing: packing_ok(&sur.body, &sur.y),
        y_covering: covering_ok(&w, &sur.body, &sur.y),
        z_packing: packing_ok(c, &sur.z),
        z_covering: covering_ok(&sur.b_points, c, &sur.z),
        cover: cover.is_covered(),
        x_prime_bound: counts.x_prime as u128 <= counts.x as u128 * counts.y as u128,
        b_count_bound: counts.b_points as u128 <= counts.z as u128 * counts.c_points as u128,
    };
    let (y_bound, z_bound) = if cfg.bound_samples > 0 {
        (
            Some(covering_bound_check(
                c,
                &sur.body,
                &sur.y,
                cfg.bound_samples,
                rng::derive(cfg.seed, 21),
            )?),
            Some(covering_bound_check(
                &sur.body,
                c,
                &sur.z,
                cfg.bound_samples,
                rng::derive(cfg.seed, 22),
            )?),
        )
    } else {
        (None, None)
    };
    let rbm = if cfg.t_grid.is_empty() {
        None
    } else {
        Some(rbm_ratio(c, &sur.body, &cfg.t_grid, cfg.mc_samples, rng::derive(cfg.seed, 23))?)
    };
    let cover_witness = match cover {
        CoverCheck::Uncovered { witness } => Some(witness),
        CoverCheck::Covered => None,
    };
    Ok(TransferReport {
        b_over_c: Q::new(counts.b_points.into(), counts.c_points.max(1).into()),
        verified: checks.all(),
        surrogate: sur.body,
        surrogate_source: sur.source,
        scores: sur.scores,
        shift,
        y: sur.y,
        z: sur.z,
        p_prime,
        x_prime,
        counts,
        y_bound,
        z_bound,
        rbm,
        checks,
        cover_witness,
    })
}

/// Names of the failed checks, for reports.
pub fn failed_checks(c: &TransferChecks) -> Vec<String> {
    let mut out = Vec::new();
    for (ok, name) in [
        (c.y_packing, "y_packing"),
        (c.y_covering, "y_covering"),
        (c.z_packing, "z_packing"),
        (c.z_covering, "z_covering"),
        (c.cover, "cover"),
        (c.x_prime_bound, "x_prime_bound"),
        (c.b_count_bound, "b_count_bound"),
    ] {
        if !ok {
            out.push(String::from(name));
        }
    }
    out
}
