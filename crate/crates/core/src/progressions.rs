//! Frames, the four progression kinds, size versus cardinality, and the
//! Gaussian density over a frame.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::bodies::{BodyKind, SymmetricBody};
use crate::error::{check_dim, Error, Result};
use crate::lattice::{count_lattice, enumerate_lattice};
use crate::num::{inverse, mat_to_f64, qi, quad_f64, to_f64, QMat, Q};
use crate::setops::{add_vec, checked_lcm, scale_rationals, FiniteSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinates {
    Integer,
    Rational,
}

/// `Z^m` or `Q^m` (the exact stand-in for `R^m`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmbientGroup {
    pub m: usize,
    pub coordinates: Coordinates,
}

impl AmbientGroup {
    pub fn integer(m: usize) -> Self {
        AmbientGroup {
            m,
            coordinates: Coordinates::Integer,
        }
    }

    pub fn rational(m: usize) -> Self {
        AmbientGroup {
            m,
            coordinates: Coordinates::Rational,
        }
    }

    pub fn is_integer(&self) -> bool {
        self.coordinates == Coordinates::Integer
    }

    /// Smallest group containing both (same `m` assumed).
    pub fn join(&self, other: &AmbientGroup) -> AmbientGroup {
        if self.is_integer() && other.is_integer() {
            self.clone()
        } else {
            AmbientGroup::rational(self.m)
        }
    }
}

/// Base point `a₀` and generators `a₁..a_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    group: AmbientGroup,
    a0: Vec<Q>,
    generators: Vec<Vec<Q>>,
}

/// A frame over one common denominator.
#[derive(Debug, Clone)]
pub(crate) struct ScaledFrame {
    pub scale: i128,
    pub a0: Vec<i128>,
    pub gens: Vec<Vec<i128>>,
}

impl ScaledFrame {
    pub fn linear(&self, n: &[i64]) -> Result<Vec<i128>> {
        let mut out = vec![0i128; self.a0.len()];
        for (g, &k) in self.gens.iter().zip(n) {
            for (o, v) in out.iter_mut().zip(g) {
                let t = v.checked_mul(k as i128).and_then(|t| o.checked_add(t));
                *o = t.ok_or_else(|| Error::Guard("frame evaluation overflows".into()))?;
            }
        }
        Ok(out)
    }

    pub fn ev(&self, n: &[i64]) -> Result<Vec<i128>> {
        add_vec(&self.a0, &self.linear(n)?)
    }
}

impl Frame {
    pub fn new(group: AmbientGroup, a0: Vec<Q>, generators: Vec<Vec<Q>>) -> Result<Self> {
        if group.m == 0 {
            return Err(Error::InvalidArgument("group rank m must be at least 1".into()));
        }
        check_dim(group.m, a0.len())?;
        for g in &generators {
            check_dim(group.m, g.len())?;
        }
        if group.is_integer() && a0.iter().chain(generators.iter().flatten()).any(|v| !v.is_integer()) {
            return Err(Error::GroupMismatch("non-integral frame point in an integer group".into()));
        }
        Ok(Frame { group, a0, generators })
    }

    pub fn group(&self) -> &AmbientGroup {
        &self.group
    }

    pub fn a0(&self) -> &[Q] {
        &self.a0
    }

    pub fn generators(&self) -> &[Vec<Q>] {
        &self.generators
    }

    /// Rank `d` (number of generators).
    pub fn d(&self) -> usize {
        self.generators.len()
    }

    /// Same generators, new base point.
    pub fn with_base(&self, a0: Vec<Q>) -> Result<Self> {
        Frame::new(self.group.clone(), a0, self.generators.clone())
    }

    pub(crate) fn scaled(&self) -> Result<ScaledFrame> {
        let mut all = vec![self.a0.clone()];
        all.extend(self.generators.iter().cloned());
        let (scale, mut pts) = scale_rationals(&all)?;
        let a0 = pts.remove(0);
        Ok(ScaledFrame { scale, a0, gens: pts })
    }
}

/// `a₀ + Σ nᵢaᵢ`.
pub fn ev(frame: &Frame, n: &[i64]) -> Result<Vec<Q>> {
    check_dim(frame.d(), n.len())?;
    let mut out = frame.a0.clone();
    for (g, &k) in frame.generators.iter().zip(n) {
        let k = qi(k);
        for (o, v) in out.iter_mut().zip(g) {
            *o += v * &k;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProgressionKind {
    Gap,
    Convex,
    Ellipsoid,
    Skew,
}

/// Frame image of the lattice points `n` with `gauge(n − center) ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Progression {
    frame: Frame,
    body: SymmetricBody,
    center: Vec<Q>,
    kind: ProgressionKind,
}

impl Progression {
    pub fn new(frame: Frame, body: SymmetricBody, center: Vec<Q>, kind: ProgressionKind) -> Result<Self> {
        check_dim(frame.d(), body.dim())?;
        check_dim(frame.d(), center.len())?;
        let ok = match kind {
            ProgressionKind::Gap => body.kind() == BodyKind::Polytope && body.is_axis_box(),
            ProgressionKind::Ellipsoid => body.kind() == BodyKind::Ellipsoid,
            ProgressionKind::Skew => body.forms().is_some_and(|f| f.len() == body.dim()),
            ProgressionKind::Convex => true,
        };
        if !ok {
            return Err(Error::InvalidArgument("progression kind does not match its body".into()));
        }
        Ok(Progression { frame, body, center, kind })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn body(&self) -> &SymmetricBody {
        &self.body
    }

    pub fn center(&self) -> &[Q] {
        &self.center
    }

    pub fn kind(&self) -> ProgressionKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.frame.d()
    }
}

/// Number of coefficient vectors (not distinct group elements).
pub fn progression_size(p: &Progression, limit: usize) -> Result<usize> {
    count_lattice(&p.body, &p.center, limit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageReport {
    pub set: FiniteSet,
    pub size: usize,
    pub cardinality: usize,
    /// `size > cardinality`.
    pub improper: bool,
}

pub fn image_set(p: &Progression, limit: usize) -> Result<ImageReport> {
    let lattice = enumerate_lattice(&p.body, &p.center, limit)?.complete(limit)?;
    let frame = p.frame.scaled()?;
    let pts = lattice.points.iter().map(|n| frame.ev(n)).collect::<Result<Vec<_>>>()?;
    let set = FiniteSet::from_scaled(p.frame.group.clone(), frame.scale, pts)?;
    let size = lattice.len();
    let cardinality = set.len();
    Ok(ImageReport {
        set,
        size,
        cardinality,
        improper: size > cardinality,
    })
}

/// The GAP `{a₀ + Σ nᵢaᵢ : 0 ≤ nᵢ < Nᵢ}` as a box progression with center
/// `(Nᵢ − 1)/2`. Length-one directions use the form `2nᵢ`.
pub fn gap_to_convex(lengths: &[u64], frame: Frame) -> Result<Progression> {
    check_dim(frame.d(), lengths.len())?;
    if lengths.is_empty() {
        return Err(Error::InvalidArgument("a GAP needs at least one length".into()));
    }
    if lengths.iter().any(|&n| n < 1) {
        return Err(Error::InvalidArgument("GAP lengths must be at least 1".into()));
    }
    let d = lengths.len();
    let forms: QMat = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    if i != j {
                        Q::zero()
                    } else if lengths[i] == 1 {
                        qi(2)
                    } else {
                        Q::new(2.into(), (lengths[i] - 1).into())
                    }
                })
                .collect()
        })
        .collect();
    let center = lengths.iter().map(|&n| Q::new((n - 1).into(), 2.into())).collect();
    Progression::new(frame, SymmetricBody::polytope(forms)?, center, ProgressionKind::Gap)
}

/// Weights `θ(x) = Σ_{ev(n) = x} exp(−nᵀ G n)` over the enumerated shell.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDensity {
    support: FiniteSet,
    weights: Vec<f64>,
    truncation_bound: f64,
    total_dropped: f64,
}

impl GaussianDensity {
    pub fn support(&self) -> &FiniteSet {
        &self.support
    }

    /// Aligned with `support().elements()`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: &[Q]) -> f64 {
        self.support.index_of(x).map_or(0.0, |i| self.weights[i])
    }

    /// Threshold `T`: all `n` with `nᵀGn ≤ T` are summed.
    pub fn truncation_bound(&self) -> f64 {
        self.truncation_bound
    }

    /// Certified upper bound on the discarded mass.
    pub fn total_dropped(&self) -> f64 {
        self.total_dropped
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

// Σ_j N(t+j+1)·e^{−(t+j)}, with N(r) ≤ ∏(2√(r·hᵢ) + 1) the box count of
// {nᵀGn ≤ r}, hᵢ = (G⁻¹)ᵢᵢ. Stops once terms shrink geometrically by at
// least half, adding the last term as the remainder bound.
fn shell_tail_bound(h: &[f64], t: f64) -> f64 {
    let count = |r: f64| h.iter().map(|&hi| 2.0 * libm::sqrt(r * hi) + 1.0).product::<f64>();
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for j in 0.. {
        let r = t + j as f64;
        let term = count(r + 1.0) * libm::exp(-r);
        sum += term;
        if term < 0.5 * prev && term <= 1e-20 * sum.max(1e-300) {
            return (sum + term) * (1.0 + 1e-12);
        }
        if j > 100_000 {
            return f64::INFINITY;
        }
        prev = term;
    }
    f64::INFINITY
}

pub fn gaussian_density(frame: &Frame, gram: &QMat, tail_eps: f64, limit: usize) -> Result<GaussianDensity> {
    if !(tail_eps > 0.0) {
        return Err(Error::InvalidArgument("tail_eps must be positive".into()));
    }
    let d = frame.d();
    check_dim(d, gram.len())?;
    // validates symmetry and positive definiteness
    SymmetricBody::ellipsoid(gram.clone())?;
    let ginv = inverse(gram).ok_or(Error::NotPositiveDefinite)?;
    let h: Vec<f64> = (0..d).map(|i| to_f64(&ginv[i][i])).collect();
    let mut t = libm::ceil(libm::log(1.0 / tail_eps) + d as f64 * libm::log(d as f64 + 1.0)).max(1.0);
    let mut dropped = shell_tail_bound(&h, t);
    while dropped > tail_eps {
        t += 1.0;
        dropped = shell_tail_bound(&h, t);
    }
    let tq = Q::from_integer((t as i64).into());
    let shell = SymmetricBody::ellipsoid(gram.iter().map(|r| r.iter().map(|v| v / &tq).collect()).collect())?;
    let pts = enumerate_lattice(&shell, &vec![Q::zero(); d], limit)?.complete(limit)?;
    let gf = mat_to_f64(gram);
    let sf = frame.scaled()?;
    let mut keyed = pts
        .points
        .iter()
        .map(|n| {
            let nf: Vec<f64> = n.iter().map(|&v| v as f64).collect();
            Ok((sf.ev(n)?, libm::exp(-quad_f64(&gf, &nf))))
        })
        .collect::<Result<Vec<_>>>()?;
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    let mut keys: Vec<Vec<i128>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (k, w) in keyed {
        if keys.last() == Some(&k) {
            *weights.last_mut().unwrap_or(&mut 0.0) += w;
        } else {
            keys.push(k);
            weights.push(w);
        }
    }
    // Reduction by a common factor keeps order, so weights stay aligned.
    let support = FiniteSet::from_scaled(frame.group.clone(), sf.scale, keys)?;
    Ok(GaussianDensity {
        support,
        weights,
        truncation_bound: t,
        total_dropped: dropped,
    })
}

/// `ρ = Σ_{a∈A} θ(a) / (‖θ‖₂ · √|A|)`.
pub fn gaussian_correlation(a: &FiniteSet, theta: &GaussianDensity) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::Empty("A"));
    }
    if theta.weights.is_empty() {
        return Err(Error::Empty("density"));
    }
    if a.group().m != theta.support.group().m {
        return Err(Error::GroupMismatch("A and the density live in different groups".into()));
    }
    let s = checked_lcm(a.scale(), theta.support.scale())?;
    let sup = theta.support.rescaled(s)?;
    let hits: f64 = a
        .rescaled(s)?
        .iter()
        .filter_map(|x| sup.binary_search(x).ok())
        .map(|i| theta.weights[i])
        .sum();
    let norm: f64 = libm::sqrt(theta.weights.iter().map(|w| w * w).sum::<f64>());
    Ok(hits / (norm * libm::sqrt(a.len() as f64)))
}

/// Frame in `Z^m` with integer generators and `a₀ = 0`.
pub fn integer_frame(gens: &[Vec<i64>]) -> Result<Frame> {
    let m = gens.first().map(|g| g.len()).ok_or(Error::Empty("generators"))?;
    Frame::new(
        AmbientGroup::integer(m),
        vec![Q::zero(); m],
        gens.iter().map(|g| g.iter().map(|&v| qi(v)).collect()).collect(),
    )
}

/// `Σ_{n∈Z} e^{−s·n²}`, summed until terms vanish.
pub fn theta_one(scale: f64) -> f64 {
    let mut s = 1.0;
    let mut n = 1.0f64;
    loop {
        let t = libm::exp(-scale * n * n);
        if t < 1e-300 {
            return s;
        }
        s += 2.0 * t;
        n += 1.0;
    }
}
