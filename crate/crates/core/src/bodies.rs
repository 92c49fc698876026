//! Origin-symmetric convex bodies in coefficient space.
//!
//! Two representations are supported: ellipsoids `{x : xᵀ G x ≤ 1}` stored by
//! their rational Gram matrix `G`, and symmetric polytopes
//! `{x : |⟨fᵢ, x⟩| ≤ 1 ∀i}` stored by rational linear forms. All membership
//! and gauge decisions are exact; volumes are floating.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use crate::error::{check_dim, Error, Result};
use crate::lp::{maximize_lex, LpOutcome};
use crate::num::{
    ceil_sub_sqrt, common_denominator, dot, floor_add_sqrt, int_to_i128, inverse, is_symmetric, ldl, mat_to_f64, mat_vec, rank, to_f64,
    unit_ball_volume, Int, QMat, Q,
};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BodyKind {
    Ellipsoid,
    Polytope,
}

#[derive(Debug, Clone)]
enum Shape {
    Ellipsoid { gram: QMat },
    Polytope { forms: QMat },
}

/// Integer-scaled copy of the defining data, used for exact comparisons
/// without rational normalisation in inner loops.
#[derive(Debug, Clone)]
enum Scaled {
    /// `gram = g / den`.
    Quad {
        g: Vec<Vec<Int>>,
        den: Int,
        small: Option<(Vec<Vec<i128>>, i128)>,
    },
    /// `formᵢ = rowᵢ / denᵢ`.
    Forms {
        rows: Vec<(Vec<Int>, Int)>,
        small: Option<Vec<(Vec<i128>, i128)>>,
    },
}

#[derive(Debug, Clone)]
pub struct SymmetricBody {
    dim: usize,
    shape: Shape,
    scaled: Scaled,
    float: Vec<Vec<f64>>,
}

impl PartialEq for SymmetricBody {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && match (&self.shape, &other.shape) {
                (Shape::Ellipsoid { gram: a }, Shape::Ellipsoid { gram: b }) => a == b,
                (Shape::Polytope { forms: a }, Shape::Polytope { forms: b }) => a == b,
                _ => false,
            }
    }
}

/// An exact nonnegative real: a rational or the square root of one.
#[derive(Debug, Clone, PartialEq)]
pub enum ExactReal {
    Rational(Q),
    SqrtOf(Q),
}

impl ExactReal {
    pub fn to_f64(&self) -> f64 {
        match self {
            ExactReal::Rational(v) => to_f64(v),
            ExactReal::SqrtOf(v) => libm::sqrt(to_f64(v)),
        }
    }

    /// Smallest double found not below the exact value (outward rounding).
    pub fn upper_f64(&self) -> f64 {
        let mut v = self.to_f64().max(0.0);
        loop {
            let Some(exact) = Ratio::from_float(v) else {
                return v;
            };
            let covers = match self {
                ExactReal::Rational(r) => &exact >= r,
                ExactReal::SqrtOf(s) => &(&exact * &exact) >= s,
            };
            if covers {
                return v;
            }
            v = f64::from_bits(v.to_bits() + 1);
        }
    }

    pub fn squared(&self) -> Q {
        match self {
            ExactReal::Rational(v) => v * v,
            ExactReal::SqrtOf(v) => v.clone(),
        }
    }

    /// Integer range `[ceil(c - self), floor(c + self)]`, exact.
    pub fn integer_range_around(&self, c: &Q) -> (Int, Int) {
        match self {
            ExactReal::Rational(r) => ((c - r).ceil().to_integer(), (c + r).floor().to_integer()),
            ExactReal::SqrtOf(s) => (ceil_sub_sqrt(c, s), floor_add_sqrt(c, s)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    /// Maximiser, as doubles.
    pub point: Vec<f64>,
    /// Exact maximiser when it is rational (polytopes).
    pub exact_point: Option<Vec<Q>>,
    pub value: ExactReal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeMethod {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: VolumeMethod,
    pub samples: usize,
}

impl VolumeEstimate {
    pub fn exact(value: f64) -> Self {
        VolumeEstimate {
            value,
            std_error: 0.0,
            method: VolumeMethod::Exact,
            samples: 0,
        }
    }

    /// Binomial rejection estimate: `hits` of `samples` inside a box of volume `box_volume`.
    pub fn from_hits(box_volume: f64, hits: usize, samples: usize) -> Self {
        let n = samples as f64;
        let p = hits as f64 / n;
        VolumeEstimate {
            value: box_volume * p,
            std_error: box_volume * libm::sqrt(p * (1.0 - p) / n),
            method: VolumeMethod::MonteCarlo,
            samples,
        }
    }

    pub fn relative_error(&self) -> f64 {
        if self.value > 0.0 {
            self.std_error / self.value
        } else {
            0.0
        }
    }
}

/// Default Monte Carlo sample count.
pub const DEFAULT_MC_SAMPLES: usize = 100_000;

fn small_matrix(g: &[Vec<Int>]) -> Option<Vec<Vec<i128>>> {
    g.iter().map(|r| r.iter().map(small_entry).collect()).collect()
}

// Entries are kept below 2^62 so products with small lattice vectors stay in i128.
fn small_entry(v: &Int) -> Option<i128> {
    int_to_i128(v).filter(|x| x.unsigned_abs() < (1u128 << 62))
}

impl SymmetricBody {
    /// Ellipsoid `{x : xᵀ gram x ≤ 1}`; `gram` must be symmetric positive definite.
    pub fn ellipsoid(gram: QMat) -> Result<Self> {
        let d = gram.len();
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if gram.iter().any(|r| r.len() != d) || !is_symmetric(&gram) {
            return Err(Error::NotPositiveDefinite);
        }
        if ldl(&gram).is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        let flat: Vec<Q> = gram.iter().flatten().cloned().collect();
        let (nums, den) = common_denominator(&flat);
        let g: Vec<Vec<Int>> = nums.chunks(d).map(|c| c.to_vec()).collect();
        let small = small_matrix(&g).zip(small_entry(&den));
        let float = mat_to_f64(&gram);
        Ok(SymmetricBody {
            dim: d,
            scaled: Scaled::Quad { g, den, small },
            float,
            shape: Shape::Ellipsoid { gram },
        })
    }

    /// Symmetric polytope `{x : |⟨formᵢ, x⟩| ≤ 1}`; forms need column rank `d`.
    pub fn polytope(forms: QMat) -> Result<Self> {
        let d = forms.first().map_or(0, |r| r.len());
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if forms.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidArgument("ragged form matrix".into()));
        }
        if forms.len() < d || rank(&forms) < d {
            return Err(Error::RankDeficient(d));
        }
        let rows: Vec<(Vec<Int>, Int)> = forms.iter().map(|r| common_denominator(r)).collect();
        let small = rows
            .iter()
            .map(|(r, den)| {
                let r: Option<Vec<i128>> = r.iter().map(small_entry).collect();
                Some((r?, small_entry(den)?))
            })
            .collect();
        let float = mat_to_f64(&forms);
        Ok(SymmetricBody {
            dim: d,
            scaled: Scaled::Forms { rows, small },
            float,
            shape: Shape::Polytope { forms },
        })
    }

    pub fn unit_ball(d: usize) -> Result<Self> {
        Self::ellipsoid(
            (0..d)
                .map(|i| (0..d).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
                .collect(),
        )
    }

    /// Axis-aligned box `∏ [-rᵢ, rᵢ]`, all `rᵢ > 0`.
    pub fn axis_box(radii: &[Q]) -> Result<Self> {
        if radii.iter().any(|r| !r.is_positive()) {
            return Err(Error::InvalidArgument("box radii must be positive".into()));
        }
        let d = radii.len();
        Self::polytope(
            (0..d)
                .map(|i| (0..d).map(|j| if i == j { radii[i].recip() } else { Q::zero() }).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> BodyKind {
        match self.shape {
            Shape::Ellipsoid { .. } => BodyKind::Ellipsoid,
            Shape::Polytope { .. } => BodyKind::Polytope,
        }
    }

    pub fn gram(&self) -> Option<&QMat> {
        match &self.shape {
            Shape::Ellipsoid { gram } => Some(gram),
            Shape::Polytope { .. } => None,
        }
    }

    pub fn forms(&self) -> Option<&QMat> {
        match &self.shape {
            Shape::Polytope { forms } => Some(forms),
            Shape::Ellipsoid { .. } => None,
        }
    }

    /// Gram matrix or form matrix as doubles.
    pub fn float_data(&self) -> &[Vec<f64>] {
        &self.float
    }

    /// True for polytopes whose every form involves a single coordinate.
    pub fn is_axis_box(&self) -> bool {
        match &self.shape {
            Shape::Polytope { forms } => forms.iter().all(|r| r.iter().filter(|v| !v.is_zero()).count() == 1),
            Shape::Ellipsoid { .. } => false,
        }
    }

    /// Exact comparison of the gauge of `x` with `t ≥ 0`.
    pub fn gauge_compare(&self, x: &[Q], t: &Q) -> Result<Ordering> {
        check_dim(self.dim, x.len())?;
        if t.is_negative() {
            return Err(Error::InvalidArgument("gauge threshold must be nonnegative".into()));
        }
        let (p, s) = common_denominator(x);
        Ok(self.compare_scaled(&p, &s, t))
    }

    /// Compares the gauge of `p / s` with `t`, all exact.
    fn compare_scaled(&self, p: &[Int], s: &Int, t: &Q) -> Ordering {
        match &self.scaled {
            Scaled::Quad { g, den, .. } => {
                // pᵀ g p · t_den² vs t_num² · den · s²
                let qv = quad_int(g, p);
                let lhs = qv * t.denom() * t.denom();
                let rhs = t.numer() * t.numer() * den * s * s;
                lhs.cmp(&rhs)
            }
            Scaled::Forms { rows, .. } => {
                // max |rowᵢ·p| / (denᵢ s) vs t
                let mut best: Option<Q> = None;
                for (row, den) in rows {
                    let v: Int = row.iter().zip(p).map(|(a, b)| a * b).sum();
                    let val = Q::new(v.abs(), den * s);
                    if best.as_ref().map_or(true, |b| &val > b) {
                        best = Some(val);
                    }
                }
                best.unwrap_or_else(Q::zero).cmp(t)
            }
        }
    }

    /// Gauge of an integer vector compared with 1; `n.len()` must equal the dimension.
    pub fn compare_unit_int(&self, n: &[i64]) -> Ordering {
        self.compare_unit_shifted(n, &[], 1)
    }

    /// Gauge of `(scale·n − offset) / scale` compared with 1. An empty
    /// `offset` means zero. This is the hot path of enumeration and packing.
    pub fn compare_unit_shifted(&self, n: &[i64], offset: &[i128], scale: i128) -> Ordering {
        let p: Option<Vec<i128>> = n
            .iter()
            .enumerate()
            .map(|(i, &v)| (v as i128).checked_mul(scale)?.checked_sub(offset.get(i).copied().unwrap_or(0)))
            .collect();
        if let Some(p) = p {
            if let Some(o) = self.compare_unit_small(&p, scale) {
                return o;
            }
        }
        let s = Int::from(scale);
        let p: Vec<Int> = n
            .iter()
            .enumerate()
            .map(|(i, &v)| Int::from(v) * &s - Int::from(offset.get(i).copied().unwrap_or(0)))
            .collect();
        self.compare_scaled(&p, &s, &Q::one())
    }

    fn compare_unit_small(&self, p: &[i128], s: i128) -> Option<Ordering> {
        match &self.scaled {
            Scaled::Quad { small: Some((g, den)), .. } => {
                let mut acc: i128 = 0;
                for (i, row) in g.iter().enumerate() {
                    let mut inner: i128 = 0;
                    for (gij, pj) in row.iter().zip(p) {
                        inner = inner.checked_add(gij.checked_mul(*pj)?)?;
                    }
                    acc = acc.checked_add(inner.checked_mul(p[i])?)?;
                }
                let rhs = den.checked_mul(s)?.checked_mul(s)?;
                Some(acc.cmp(&rhs))
            }
            Scaled::Forms { small: Some(rows), .. } => {
                // Compare max |rowᵢ·p| / denᵢ with s.
                let mut result = Ordering::Less;
                for (row, den) in rows {
                    let mut v: i128 = 0;
                    for (a, b) in row.iter().zip(p) {
                        v = v.checked_add(a.checked_mul(*b)?)?;
                    }
                    let o = v.checked_abs()?.cmp(&den.checked_mul(s)?);
                    if o == Ordering::Greater {
                        return Some(o);
                    }
                    if o == Ordering::Equal {
                        result = o;
                    }
                }
                Some(result)
            }
            _ => None,
        }
    }

    /// A rational that orders points exactly like the gauge does
    /// (the squared gauge for ellipsoids, the gauge for polytopes).
    pub fn gauge_key(&self, x: &[Q]) -> Q {
        match &self.shape {
            Shape::Ellipsoid { gram } => dot(x, &mat_vec(gram, x)),
            Shape::Polytope { forms } => forms.iter().map(|f| dot(f, x).abs()).max().unwrap_or_else(Q::zero),
        }
    }

    pub fn gauge_key_int(&self, n: &[i64]) -> Q {
        let p: Vec<Int> = n.iter().map(|&v| Int::from(v)).collect();
        match &self.scaled {
            Scaled::Quad { g, den, .. } => Q::new(quad_int(g, &p), den.clone()),
            Scaled::Forms { rows, .. } => rows
                .iter()
                .map(|(row, den)| {
                    let v: Int = row.iter().zip(&p).map(|(a, b)| a * b).sum();
                    Q::new(v.abs(), den.clone())
                })
                .max()
                .unwrap_or_else(Q::zero),
        }
    }

    /// Floating gauge.
    pub fn gauge_f64(&self, x: &[f64]) -> f64 {
        match self.shape {
            Shape::Ellipsoid { .. } => libm::sqrt(crate::num::quad_f64(&self.float, x).max(0.0)),
            Shape::Polytope { .. } => self.float.iter().map(|f| crate::num::dot_f64(f, x).abs()).fold(0.0, f64::max),
        }
    }

    /// Exact membership of a floating point, using the float gauge as a
    /// filter and falling back to rationals near the boundary.
    pub fn contains_f64(&self, x: &[f64]) -> bool {
        let g = self.gauge_f64(x);
        if g < 1.0 - 1e-9 {
            return true;
        }
        if g > 1.0 + 1e-9 {
            return false;
        }
        let exact: Vec<Q> = x.iter().map(|&v| Ratio::from_float(v).unwrap_or_else(Q::zero)).collect();
        let (p, s) = common_denominator(&exact);
        self.compare_scaled(&p, &s, &Q::one()) != Ordering::Greater
    }

    /// `t · body` for `t > 0`.
    pub fn scale(&self, t: &Q) -> Result<Self> {
        if !t.is_positive() {
            return Err(Error::InvalidArgument("scale factor must be positive".into()));
        }
        match &self.shape {
            Shape::Ellipsoid { gram } => {
                let t2 = t * t;
                Self::ellipsoid(gram.iter().map(|r| r.iter().map(|v| v / &t2).collect()).collect())
            }
            Shape::Polytope { forms } => Self::polytope(forms.iter().map(|r| r.iter().map(|v| v / t).collect()).collect()),
        }
    }

    /// Maximiser of `⟨u, x⟩` over the body. Polytopes are solved by exact
    /// simplex; ties go to the lexicographically smallest optimal vertex.
    pub fn support_point(&self, u: &[Q]) -> Result<Support> {
        check_dim(self.dim, u.len())?;
        if u.iter().all(|v| v.is_zero()) {
            return Err(Error::InvalidArgument("support direction must be nonzero".into()));
        }
        match &self.shape {
            Shape::Ellipsoid { gram } => {
                let ginv = inverse(gram).ok_or(Error::NotPositiveDefinite)?;
                let w = mat_vec(&ginv, u);
                let s = dot(u, &w);
                let norm = libm::sqrt(to_f64(&s));
                Ok(Support {
                    point: w.iter().map(|v| to_f64(v) / norm).collect(),
                    exact_point: None,
                    value: ExactReal::SqrtOf(s),
                })
            }
            Shape::Polytope { forms } => {
                let x = polytope_lp(forms, u)?;
                let value = dot(u, &x);
                Ok(Support {
                    point: x.iter().map(to_f64).collect(),
                    exact_point: Some(x),
                    value: ExactReal::Rational(value),
                })
            }
        }
    }

    /// Per-axis half-widths `rᵢ` with `body ⊆ ∏ [-rᵢ, rᵢ]`, exact.
    pub fn bounding_box(&self) -> Result<Vec<ExactReal>> {
        match &self.shape {
            Shape::Ellipsoid { gram } => {
                let ginv = inverse(gram).ok_or(Error::NotPositiveDefinite)?;
                Ok((0..self.dim).map(|i| ExactReal::SqrtOf(ginv[i][i].clone())).collect())
            }
            Shape::Polytope { .. } => (0..self.dim)
                .map(|i| {
                    let e: Vec<Q> = (0..self.dim).map(|j| if i == j { Q::one() } else { Q::zero() }).collect();
                    Ok(self.support_point(&e)?.value)
                })
                .collect(),
        }
    }

    /// Exact volume when a closed form exists (ellipsoids, axis boxes, parallelotopes).
    pub fn exact_volume(&self) -> Option<f64> {
        match &self.shape {
            Shape::Ellipsoid { gram } => {
                let det = crate::num::det(gram);
                Some(unit_ball_volume(self.dim) / libm::sqrt(to_f64(&det)))
            }
            Shape::Polytope { forms } => {
                if self.is_axis_box() {
                    let mut vol = Q::one();
                    for i in 0..self.dim {
                        let coef = forms.iter().map(|r| r[i].abs()).max()?;
                        vol *= Q::from_integer(Int::from(2)) / coef;
                    }
                    Some(to_f64(&vol))
                } else if forms.len() == self.dim {
                    let det = crate::num::det(forms).abs();
                    Some(to_f64(&(Q::from_integer(Int::from(2).pow(self.dim as u32)) / det)))
                } else {
                    None
                }
            }
        }
    }

    /// Volume with the default seed.
    pub fn volume(&self, mc_samples: usize) -> Result<VolumeEstimate> {
        self.volume_seeded(mc_samples, 0)
    }

    pub fn volume_seeded(&self, mc_samples: usize, seed: u64) -> Result<VolumeEstimate> {
        if let Some(v) = self.exact_volume() {
            return Ok(VolumeEstimate::exact(v));
        }
        if mc_samples == 0 {
            return Err(Error::InvalidArgument("Monte Carlo volume needs at least one sample".into()));
        }
        let radii: Vec<f64> = self.bounding_box()?.iter().map(ExactReal::upper_f64).collect();
        let box_volume: f64 = radii.iter().map(|r| 2.0 * r).product();
        let hits = count_hits(mc_samples, seed, |rng| {
            let x: Vec<f64> = radii.iter().map(|&r| rng::symmetric_f64(rng, r)).collect();
            self.gauge_f64(&x) <= 1.0
        });
        Ok(VolumeEstimate::from_hits(box_volume, hits, mc_samples))
    }

    /// Vertices of a polytope, sorted lexicographically; `None` for ellipsoids.
    pub fn polytope_vertices(&self) -> Option<Vec<Vec<Q>>> {
        let forms = self.forms()?;
        let d = self.dim;
        let k = forms.len();
        let mut out: Vec<Vec<Q>> = Vec::new();
        let mut subset: Vec<usize> = (0..d).collect();
        loop {
            let sub: QMat = subset.iter().map(|&i| forms[i].clone()).collect();
            if let Some(inv) = inverse(&sub) {
                for signs in 0u32..(1 << d) {
                    let x: Vec<Q> = (0..d)
                        .map(|r| {
                            inv[r]
                                .iter()
                                .enumerate()
                                .fold(Q::zero(), |acc, (c, v)| if signs >> c & 1 == 1 { acc - v } else { acc + v })
                        })
                        .collect();
                    if forms.iter().all(|f| dot(f, &x).abs() <= Q::one()) {
                        out.push(x);
                    }
                }
            }
            // next d-subset of 0..k
            let mut i = d;
            loop {
                if i == 0 {
                    out.sort();
                    out.dedup();
                    return Some(out);
                }
                i -= 1;
                if subset[i] < k - d + i {
                    subset[i] += 1;
                    for j in i + 1..d {
                        subset[j] = subset[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
}

fn quad_int(g: &[Vec<Int>], p: &[Int]) -> Int {
    let mut acc = Int::zero();
    for (i, row) in g.iter().enumerate() {
        let inner: Int = row.iter().zip(p).map(|(a, b)| a * b).sum();
        acc += inner * &p[i];
    }
    acc
}

/// Exact LP: maximise `⟨u, x⟩` over `{|F x| ≤ 1}`, lexicographically
/// minimising `x` among optima. Variables are split as `x = x⁺ − x⁻`.
fn polytope_lp(forms: &QMat, u: &[Q]) -> Result<Vec<Q>> {
    let d = u.len();
    let mut a: QMat = Vec::with_capacity(2 * forms.len());
    for f in forms {
        let mut row: Vec<Q> = f.clone();
        row.extend(f.iter().map(|v| -v));
        a.push(row);
    }
    for f in forms {
        let mut row: Vec<Q> = f.iter().map(|v| -v).collect();
        row.extend(f.iter().cloned());
        a.push(row);
    }
    let b = vec![Q::one(); a.len()];
    let mut objectives: QMat = Vec::with_capacity(d + 1);
    let mut main: Vec<Q> = u.to_vec();
    main.extend(u.iter().map(|v| -v));
    objectives.push(main);
    for i in 0..d {
        let mut row = vec![Q::zero(); 2 * d];
        row[i] = -Q::one();
        row[d + i] = Q::one();
        objectives.push(row);
    }
    match maximize_lex(&a, &b, &objectives)? {
        LpOutcome::Optimal { x, .. } => Ok((0..d).map(|i| &x[i] - &x[d + i]).collect()),
        LpOutcome::Unbounded => Err(Error::Internal("support LP unbounded despite full rank")),
    }
}

/// Number of sample indices in `0..n` for which `hit` is true, where each
/// index draws from its own counter-based stream.
pub(crate) fn count_hits<F>(n: usize, seed: u64, hit: F) -> usize
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> bool + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n as u64).into_par_iter().filter(|&i| hit(&mut rng::stream(seed, i))).count()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n as u64).filter(|&i| hit(&mut rng::stream(seed, i))).count()
    }
}

/// Convenience: unit vector along axis `i`.
pub fn axis(d: usize, i: usize) -> Vec<Q> {
    (0..d).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()
}

pub fn to_q_vec(v: &[i64]) -> Vec<Q> {
    v.iter().map(|&x| Q::from_integer(Int::from(x))).collect()
}

impl ExactReal {
    pub fn is_rational(&self) -> bool {
        matches!(self, ExactReal::Rational(_))
    }
}
