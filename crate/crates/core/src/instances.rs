//! Generators for arithmetic progressions, GAPs, random convex progressions
//! and Lovett–Regev sets (a Euclidean ball intersected with a random lattice).
//! Every generator is a deterministic function of its arguments.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::bodies::SymmetricBody;
use crate::error::{Error, Result};
use crate::lattice::count_lattice;
use crate::num::{det, q, qi, to_f64, QMat, Q};
use crate::progressions::{gap_to_convex, image_set, AmbientGroup, Frame, Progression, ProgressionKind};
use crate::rng;
use crate::setops::{verify_cover, FiniteSet};

/// A set `A` with a progression `P` and translates `X` such that `A ⊆ P + X`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub a: FiniteSet,
    pub p: Progression,
    pub x: FiniteSet,
}

const INSTANCE_LIMIT: usize = 10_000_000;

fn checked(a: FiniteSet, p: Progression, x: FiniteSet) -> Result<Instance> {
    if !verify_cover(&a, &p, &x, INSTANCE_LIMIT)?.is_covered() {
        return Err(Error::VerificationFailed("generated instance is not covered".to_string()));
    }
    Ok(Instance { a, p, x })
}

fn zero_set(group: &AmbientGroup) -> Result<FiniteSet> {
    FiniteSet::from_integers(group.clone(), &[vec![0; group.m]])
}

/// `{base + k·step : 0 ≤ k < N}` in `Z` (or `Q` for fractional data).
pub fn make_ap(n: u64, step: &Q, base: &Q) -> Result<Instance> {
    if n < 1 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let group = if step.is_integer() && base.is_integer() {
        AmbientGroup::integer(1)
    } else {
        AmbientGroup::rational(1)
    };
    let frame = Frame::new(group.clone(), vec![base.clone()], vec![vec![step.clone()]])?;
    make_gap(frame, &[n])
}

/// The GAP of `frame` with lengths `N`, covered by `X = {0}`.
pub fn make_gap(frame: Frame, lengths: &[u64]) -> Result<Instance> {
    let group = frame.group().clone();
    let p = gap_to_convex(lengths, frame)?;
    let a = image_set(&p, INSTANCE_LIMIT)?.set;
    checked(a, p, zero_set(&group)?)
}

const RESAMPLE_BUDGET: u64 = 100;
/// Lattice-count window targeted by [`make_random_convex_progression`].
pub const CONVEX_COUNT_RANGE: (usize, usize) = (10, 100_000);
const FORM_ENTRY_BOUND: i64 = 5;
const FORM_DENOMINATOR_BOUND: i64 = 3;
const GENERATOR_BOUND: i64 = 20;

/// Random symmetric polytope progression in `Z²`: `k` rational forms with
/// column rank `d`, dilated from `scale` until the lattice count lies in
/// [`CONVEX_COUNT_RANGE`]. Skew when `k = d`, convex otherwise.
pub fn make_random_convex_progression(d: usize, k: usize, seed: u64, scale: &Q) -> Result<Progression> {
    if d == 0 || k < d {
        return Err(Error::InvalidArgument("need d ≥ 1 and k ≥ d".into()));
    }
    if !scale.is_positive() {
        return Err(Error::InvalidArgument("scale must be positive".into()));
    }
    let mut base = None;
    for attempt in 0..RESAMPLE_BUDGET {
        let mut r = rng::stream(seed, attempt);
        let forms: QMat = (0..k)
            .map(|_| {
                (0..d)
                    .map(|_| {
                        let num = rng::int_in(&mut r, FORM_ENTRY_BOUND);
                        let den = 1 + rng::int_in(&mut r, FORM_DENOMINATOR_BOUND - 1).abs();
                        q(num, den)
                    })
                    .collect()
            })
            .collect();
        if let Ok(body) = SymmetricBody::polytope(forms) {
            base = Some(body);
            break;
        }
    }
    let base = base.ok_or(Error::ResampleExhausted("forms without full column rank"))?;
    let (lo, hi) = CONVEX_COUNT_RANGE;
    let origin = vec![Q::zero(); d];
    let mut t = scale.clone();
    let mut body;
    let mut steps = 0;
    loop {
        body = base.scale(&t)?;
        let count = count_lattice(&body, &origin, hi).ok();
        match count {
            Some(c) if c >= lo => break,
            Some(_) => t *= q(3, 2),
            None => t *= q(2, 3),
        }
        steps += 1;
        if steps > 200 {
            return Err(Error::ResampleExhausted("no scale puts the lattice count in range"));
        }
    }
    let mut r = rng::stream(rng::derive(seed, 1), 0);
    let gens = (0..d)
        .map(|_| (0..2).map(|_| qi(rng::int_in(&mut r, GENERATOR_BOUND))).collect())
        .collect();
    let frame = Frame::new(AmbientGroup::integer(2), vec![qi(0), qi(0)], gens)?;
    let kind = if k == d { ProgressionKind::Skew } else { ProgressionKind::Convex };
    Progression::new(frame, body, origin, kind)
}

/// Integer basis with entries in `[-h, h]`, resampled while singular.
fn random_basis(m: usize, h: i64, seed: u64) -> Result<(Vec<Vec<i64>>, Q)> {
    for attempt in 0..RESAMPLE_BUDGET {
        let mut r = rng::stream(seed, attempt);
        let basis: Vec<Vec<i64>> = (0..m).map(|_| (0..m).map(|_| rng::int_in(&mut r, h)).collect()).collect();
        let dq = det(&basis.iter().map(|row| row.iter().map(|&v| qi(v)).collect()).collect::<QMat>());
        if !dq.is_zero() {
            return Ok((basis, dq.abs()));
        }
    }
    Err(Error::ResampleExhausted("singular lattice bases"))
}

/// The scaled basis `M / s` with covolume close to 1 and its Gram `MᵀM / s²`.
fn normalised_lattice(m: usize, h: i64, seed: u64) -> Result<(Vec<Vec<Q>>, QMat)> {
    if m == 0 || h < 1 {
        return Err(Error::InvalidArgument("need m ≥ 1 and h ≥ 1".into()));
    }
    let (basis, covol) = random_basis(m, h, seed)?;
    let root = libm::pow(to_f64(&covol), 1.0 / m as f64);
    let s = q(libm::round(root * 1000.0).max(1.0) as i64, 1000);
    let s2 = &s * &s;
    let cols = (0..m).map(|i| (0..m).map(|k| qi(basis[k][i]) / &s).collect()).collect();
    let gram = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| (0..m).map(|k| qi(basis[k][i] * basis[k][j])).sum::<Q>() / &s2)
                .collect()
        })
        .collect();
    Ok((cols, gram))
}

/// `A = {Mz : ‖Mz‖₂ ≤ R}` for a random integer basis rescaled to covolume
/// about 1, with the ellipsoid progression whose image is exactly `A`.
pub fn make_lovett_regev(m: usize, radius: &Q, h: i64, seed: u64) -> Result<Instance> {
    if !radius.is_positive() {
        return Err(Error::InvalidArgument("R must be positive".into()));
    }
    let (cols, gram) = normalised_lattice(m, h, seed)?;
    let r2 = radius * radius;
    let body = SymmetricBody::ellipsoid(gram.iter().map(|row| row.iter().map(|v| v / &r2).collect()).collect())?;
    let group = AmbientGroup::rational(m);
    let frame = Frame::new(group.clone(), vec![Q::zero(); m], cols)?;
    let p = Progression::new(frame, body, vec![Q::zero(); m], ProgressionKind::Ellipsoid)?;
    let a = image_set(&p, INSTANCE_LIMIT)?.set;
    checked(a, p, zero_set(&group)?)
}

/// A radius (a multiple of 1/1000) for which the Lovett–Regev set of these
/// parameters has between `lo` and `hi` points.
pub fn lovett_regev_radius(m: usize, h: i64, seed: u64, lo: usize, hi: usize) -> Result<Q> {
    if lo > hi || hi == 0 {
        return Err(Error::InvalidArgument("empty target range".into()));
    }
    let (_, gram) = normalised_lattice(m, h, seed)?;
    let origin = vec![Q::zero(); m];
    let count = |r: &Q| -> Result<Option<usize>> {
        let r2 = r * r;
        let body = SymmetricBody::ellipsoid(gram.iter().map(|row| row.iter().map(|v| v / &r2).collect()).collect())?;
        match count_lattice(&body, &origin, hi) {
            Ok(c) => Ok(Some(c)),
            Err(Error::Truncated { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let in_range = |c: Option<usize>| c.is_some_and(|c| c >= lo);
    // R = k / 1000; grow until the count reaches lo, then bisect
    let (mut a, mut b) = (1i64, 1000i64);
    loop {
        let c = count(&q(b, 1000))?;
        if in_range(c) {
            return Ok(q(b, 1000));
        }
        if c.is_none() {
            break;
        }
        a = b;
        b *= 2;
        if b > 1 << 40 {
            return Err(Error::Guard("radius search diverged".into()));
        }
    }
    while b - a > 1 {
        let mid = a + (b - a) / 2;
        let c = count(&q(mid, 1000))?;
        if in_range(c) {
            return Ok(q(mid, 1000));
        }
        if c.is_some() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Err(Error::Guard("no radius hits the target range".into()))
}
