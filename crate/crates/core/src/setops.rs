//! Finite subsets of `Z^m` or `Q^m`: sumsets, doubling constants, cover
//! checks and greedy covers.
//!
//! A [`FiniteSet`] stores its elements as integer vectors over one positive
//! common denominator, so comparisons and lookups stay in machine integers.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::lattice::enumerate_lattice;
use crate::num::{int_to_i128, Int, Q};
use crate::progressions::{image_set, AmbientGroup, Progression};

/// Largest `|A|·|B|` accepted by [`sumset`].
pub const SUMSET_GUARD: u128 = 1_000_000_000;

fn overflow() -> Error {
    Error::Guard("coordinates exceed the 128-bit scaled range".to_string())
}

pub(crate) fn checked_lcm(a: i128, b: i128) -> Result<i128> {
    let g = a.gcd(&b);
    (a / g).checked_mul(b).ok_or_else(overflow)
}

pub(crate) fn add_vec(a: &[i128], b: &[i128]) -> Result<Vec<i128>> {
    a.iter().zip(b).map(|(x, y)| x.checked_add(*y).ok_or_else(overflow)).collect()
}

pub(crate) fn sub_vec(a: &[i128], b: &[i128]) -> Result<Vec<i128>> {
    a.iter().zip(b).map(|(x, y)| x.checked_sub(*y).ok_or_else(overflow)).collect()
}

fn mul_vec(a: &[i128], k: i128) -> Result<Vec<i128>> {
    a.iter().map(|x| x.checked_mul(k).ok_or_else(overflow)).collect()
}

/// Rational vectors as integer vectors over their least common denominator.
pub(crate) fn scale_rationals(v: &[Vec<Q>]) -> Result<(i128, Vec<Vec<i128>>)> {
    let mut scale: i128 = 1;
    for x in v.iter().flatten() {
        let d = int_to_i128(x.denom()).ok_or_else(overflow)?;
        scale = checked_lcm(scale, d)?;
    }
    let s = Int::from(scale);
    let pts = v
        .iter()
        .map(|p| {
            p.iter()
                .map(|x| int_to_i128(&(x.numer() * (&s / x.denom()))).ok_or_else(overflow))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((scale, pts))
}

pub(crate) fn unscale(p: &[i128], scale: i128) -> Vec<Q> {
    p.iter().map(|&v| Q::new(Int::from(v), Int::from(scale))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSet {
    group: AmbientGroup,
    scale: i128,
    points: Vec<Vec<i128>>,
}

impl FiniteSet {
    pub fn empty(group: AmbientGroup) -> Self {
        FiniteSet {
            group,
            scale: 1,
            points: Vec::new(),
        }
    }

    pub fn new(group: AmbientGroup, elements: &[Vec<Q>]) -> Result<Self> {
        let (scale, points) = scale_rationals(elements)?;
        Self::from_scaled(group, scale, points)
    }

    pub fn from_integers(group: AmbientGroup, elements: &[Vec<i64>]) -> Result<Self> {
        let points = elements.iter().map(|p| p.iter().map(|&v| v as i128).collect()).collect();
        Self::from_scaled(group, 1, points)
    }

    /// Elements `p / scale`; sorted, deduplicated and reduced here.
    pub fn from_scaled(group: AmbientGroup, scale: i128, mut points: Vec<Vec<i128>>) -> Result<Self> {
        if scale <= 0 {
            return Err(Error::InvalidArgument("scale must be positive".into()));
        }
        for p in &points {
            crate::error::check_dim(group.m, p.len())?;
        }
        let g = points.iter().flatten().fold(scale, |g, v| g.gcd(v));
        let scale = scale / g;
        if g != 1 {
            for v in points.iter_mut().flatten() {
                *v /= g;
            }
        }
        if group.is_integer() && scale != 1 {
            return Err(Error::GroupMismatch("non-integral element in an integer group".into()));
        }
        points.sort_unstable();
        points.dedup();
        Ok(FiniteSet { group, scale, points })
    }

    pub fn group(&self) -> &AmbientGroup {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Common denominator of the stored integer vectors.
    pub fn scale(&self) -> i128 {
        self.scale
    }

    pub fn scaled_points(&self) -> &[Vec<i128>] {
        &self.points
    }

    pub fn element(&self, i: usize) -> Vec<Q> {
        unscale(&self.points[i], self.scale)
    }

    pub fn elements(&self) -> Vec<Vec<Q>> {
        (0..self.len()).map(|i| self.element(i)).collect()
    }

    /// Points expressed over the finer denominator `to` (a multiple of the scale).
    pub fn rescaled(&self, to: i128) -> Result<Vec<Vec<i128>>> {
        if to % self.scale != 0 {
            return Err(Error::Internal("rescale target is not a multiple"));
        }
        let k = to / self.scale;
        self.points.iter().map(|p| mul_vec(p, k)).collect()
    }

    pub fn index_of(&self, x: &[Q]) -> Option<usize> {
        if x.len() != self.group.m {
            return None;
        }
        let (s, p) = scale_rationals(&[x.to_vec()]).ok()?;
        if self.scale % s != 0 {
            return None;
        }
        let p = mul_vec(&p[0], self.scale / s).ok()?;
        self.points.binary_search(&p).ok()
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        self.index_of(x).is_some()
    }

    pub fn translate(&self, t: &[Q]) -> Result<Self> {
        crate::error::check_dim(self.group.m, t.len())?;
        let (st, tp) = scale_rationals(&[t.to_vec()])?;
        let s = checked_lcm(self.scale, st)?;
        let tp = mul_vec(&tp[0], s / st)?;
        let pts = self.rescaled(s)?.iter().map(|p| add_vec(p, &tp)).collect::<Result<_>>()?;
        let group = if st == 1 {
            self.group.clone()
        } else {
            AmbientGroup::rational(self.group.m)
        };
        Self::from_scaled(group, s, pts)
    }
}

fn merge_dedup(a: Vec<Vec<i128>>, b: Vec<Vec<i128>>) -> Vec<Vec<i128>> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut ia, mut ib) = (a.into_iter().peekable(), b.into_iter().peekable());
    loop {
        let next = match (ia.peek(), ib.peek()) {
            (None, None) => break,
            (Some(_), None) => ia.next(),
            (None, Some(_)) => ib.next(),
            (Some(x), Some(y)) => match x.cmp(y) {
                Ordering::Less => ia.next(),
                Ordering::Greater => ib.next(),
                Ordering::Equal => {
                    ib.next();
                    ia.next()
                }
            },
        };
        if let Some(v) = next {
            if out.last() != Some(&v) {
                out.push(v);
            }
        }
    }
    out
}

/// `{a + b : a ∈ A, b ∈ B}`, exact and deduplicated.
pub fn sumset(a: &FiniteSet, b: &FiniteSet) -> Result<FiniteSet> {
    if a.group.m != b.group.m {
        return Err(Error::GroupMismatch("sets live in groups of different rank".into()));
    }
    if a.len() as u128 * b.len() as u128 > SUMSET_GUARD {
        return Err(Error::Guard("|A|·|B| exceeds 10^9".into()));
    }
    let group = a.group.join(&b.group);
    let s = checked_lcm(a.scale, b.scale)?;
    let pa = a.rescaled(s)?;
    let pb = b.rescaled(s)?;
    // Each row a + B is sorted; rows are merged like a binary counter.
    let mut stack: Vec<(u32, Vec<Vec<i128>>)> = Vec::new();
    for x in &pa {
        let row = pb.iter().map(|y| add_vec(x, y)).collect::<Result<Vec<_>>>()?;
        let mut item = (0u32, row);
        while stack.last().is_some_and(|t| t.0 == item.0) {
            let (lvl, top) = stack.pop().unwrap_or_default();
            item = (lvl + 1, merge_dedup(top, item.1));
        }
        stack.push(item);
    }
    let mut acc = Vec::new();
    while let Some((_, run)) = stack.pop() {
        acc = merge_dedup(run, acc);
    }
    Ok(FiniteSet {
        group,
        scale: s,
        points: acc,
    }
    .normalized())
}

impl FiniteSet {
    fn normalized(self) -> Self {
        let g = self.points.iter().flatten().fold(self.scale, |g, v| g.gcd(v));
        if g == 1 {
            return self;
        }
        let points = self.points.into_iter().map(|p| p.into_iter().map(|v| v / g).collect()).collect();
        FiniteSet {
            group: self.group,
            scale: self.scale / g,
            points,
        }
    }
}

/// `|A + A| / |A|`.
pub fn doubling_constant(a: &FiniteSet) -> Result<Q> {
    if a.is_empty() {
        return Err(Error::Empty("A"));
    }
    let s = sumset(a, a)?;
    Ok(Q::new(Int::from(s.len()), Int::from(a.len())))
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoverCheck {
    Covered,
    Uncovered { witness: Vec<Q> },
}

impl CoverCheck {
    pub fn is_covered(&self) -> bool {
        matches!(self, CoverCheck::Covered)
    }
}

/// Whether `A ⊆ P + X`; the first uncovered element of `A` otherwise.
pub fn verify_cover(a: &FiniteSet, p: &Progression, x: &FiniteSet, limit: usize) -> Result<CoverCheck> {
    let m = p.frame().group().m;
    if a.group.m != m || x.group.m != m {
        return Err(Error::GroupMismatch("A, P and X must share the ambient group".into()));
    }
    let image = image_set(p, limit)?.set;
    let s = checked_lcm(checked_lcm(a.scale, x.scale)?, image.scale)?;
    let img = image.rescaled(s)?;
    let xs = x.rescaled(s)?;
    for (i, pa) in a.rescaled(s)?.iter().enumerate() {
        let mut hit = false;
        for px in &xs {
            if img.binary_search(&sub_vec(pa, px)?).is_ok() {
                hit = true;
                break;
            }
        }
        if !hit {
            return Ok(CoverCheck::Uncovered { witness: a.element(i) });
        }
    }
    Ok(CoverCheck::Covered)
}

/// A translate set `X` with `A ⊆ P + X`, built greedily: each still-uncovered
/// element `a` (smallest first) contributes `a − ev(n*)`, where `n*` is the
/// lattice point of `P` of least body gauge.
pub fn greedy_cover(a: &FiniteSet, p: &Progression, limit: usize) -> Result<FiniteSet> {
    let m = p.frame().group().m;
    if a.group.m != m {
        return Err(Error::GroupMismatch("A and P must share the ambient group".into()));
    }
    let lattice = enumerate_lattice(p.body(), p.center(), limit)?.complete(limit)?;
    let body = p.body();
    let center = p.center();
    let best = lattice
        .points
        .iter()
        .map(|n| {
            let y: Vec<Q> = n.iter().zip(center).map(|(&v, c)| Q::from_integer(v.into()) - c).collect();
            (body.gauge_key(&y), n)
        })
        .min_by(|u, v| u.0.cmp(&v.0).then_with(|| u.1.cmp(v.1)))
        .map(|(_, n)| n.clone())
        .ok_or(Error::Empty("progression image"))?;
    let image = image_set(p, limit)?.set;
    let frame = p.frame().scaled()?;
    let s = checked_lcm(checked_lcm(a.scale, image.scale)?, frame.scale)?;
    let anchor = mul_vec(&frame.ev(&best)?, s / frame.scale)?;
    let img = image.rescaled(s)?;
    let pa = a.rescaled(s)?;
    let mut covered = vec![false; pa.len()];
    let mut xs = Vec::new();
    for i in 0..pa.len() {
        if covered[i] {
            continue;
        }
        let x = sub_vec(&pa[i], &anchor)?;
        for q in &img {
            if let Ok(j) = pa.binary_search(&add_vec(&x, q)?) {
                covered[j] = true;
            }
        }
        xs.push(x);
    }
    FiniteSet::from_scaled(a.group.join(p.frame().group()), s, xs)
}
