//! Exact rational helpers and small dense linear algebra shared by the
//! exact (rational) and floating code paths.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;
pub type Int = BigInt;
pub type QMat = Vec<Vec<Q>>;

/// Denominator used when snapping floating values to rationals.
pub const SNAP_BITS: u32 = 48;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(Int::from(n), Int::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(Int::from(n))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Nearest rational with denominator dividing 2^48.
pub fn snap(v: f64) -> Q {
    let scale = (1u64 << SNAP_BITS) as f64;
    let n = Int::from_f64(libm::round(v * scale)).unwrap_or_else(Int::zero);
    Q::new(n, Int::from(1u64 << SNAP_BITS))
}

/// Symmetric matrix snapped to rationals sharing one power-of-two
/// denominator, keeping 48 significant bits of the largest entry.
pub fn snap_symmetric(m: &[Vec<f64>]) -> QMat {
    let n = m.len();
    let top = m.iter().flatten().fold(0.0f64, |a, v| a.max(libm::fabs(*v)));
    if top == 0.0 || !top.is_finite() {
        return vec![vec![Q::zero(); n]; n];
    }
    let (_, e) = libm::frexp(top);
    let shift = SNAP_BITS as i32 - e;
    let factor = libm::ldexp(1.0, shift);
    let den = if shift >= 0 {
        Q::from_integer(Int::one() << shift as usize)
    } else {
        Q::new(Int::one(), Int::one() << (-shift) as usize)
    };
    let mut out = vec![vec![Q::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v = 0.5 * (m[i][j] + m[j][i]);
            let k = Int::from_f64(libm::round(v * factor)).unwrap_or_else(Int::zero);
            let x = Q::from_integer(k) / &den;
            out[i][j] = x.clone();
            out[j][i] = x;
        }
    }
    out
}

pub fn floor_int(x: &Q) -> Int {
    x.floor().to_integer()
}

pub fn ceil_int(x: &Q) -> Int {
    x.ceil().to_integer()
}

/// `floor(sqrt(x))` for `x >= 0`, exact.
pub fn floor_sqrt(x: &Q) -> Int {
    if !x.is_positive() {
        return Int::zero();
    }
    num_integer::Roots::sqrt(&floor_int(x))
}

/// Largest integer `k` with `k <= c + sqrt(r)`, exact (`r >= 0`).
pub fn floor_add_sqrt(c: &Q, r: &Q) -> Int {
    let holds = |k: &Int| {
        let diff = Q::from_integer(k.clone()) - c;
        !diff.is_positive() || &(&diff * &diff) <= r
    };
    let approx = libm::floor(to_f64(c) + libm::sqrt(to_f64(r).max(0.0)));
    let mut k = Int::from_f64(approx).unwrap_or_else(|| floor_int(c));
    while !holds(&k) {
        k -= 1;
    }
    loop {
        let next = &k + 1;
        if holds(&next) {
            k = next;
        } else {
            return k;
        }
    }
}

/// Smallest integer `k` with `k >= c - sqrt(r)`, exact.
pub fn ceil_sub_sqrt(c: &Q, r: &Q) -> Int {
    -floor_add_sqrt(&-c, r)
}

pub fn int_to_i64(x: &Int) -> Option<i64> {
    x.to_i64()
}

pub fn int_to_i128(x: &Int) -> Option<i128> {
    x.to_i128()
}

/// Formats as `p/q`, always with an explicit denominator.
pub struct PQ<'a>(pub &'a Q);

impl fmt::Display for PQ<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

/// Least common multiple of the denominators, and the numerators over it.
pub fn common_denominator(v: &[Q]) -> (Vec<Int>, Int) {
    let mut den = Int::one();
    for x in v {
        den = num_integer::lcm(den, x.denom().clone());
    }
    let nums = v.iter().map(|x| (x * Q::from_integer(den.clone())).to_integer()).collect();
    (nums, den)
}

/// Field operations needed by the dense elimination and simplex routines.
pub trait Field: Clone + fmt::Debug {
    fn field_zero() -> Self;
    fn field_one() -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn over(&self, o: &Self) -> Self;
    fn negated(&self) -> Self;
    fn near_zero(&self) -> bool;
    fn strictly_positive(&self) -> bool;
    /// Exact or tolerant comparison.
    fn compare(&self, o: &Self) -> Ordering;
    /// Pivot preference: larger is better.
    fn magnitude(&self) -> f64;
}

impl Field for Q {
    fn field_zero() -> Self {
        Zero::zero()
    }
    fn field_one() -> Self {
        One::one()
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn over(&self, o: &Self) -> Self {
        self / o
    }
    fn negated(&self) -> Self {
        -self
    }
    fn near_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn strictly_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn compare(&self, o: &Self) -> Ordering {
        self.cmp(o)
    }
    fn magnitude(&self) -> f64 {
        // Exact arithmetic: any nonzero pivot works; prefer the first one.
        if Zero::is_zero(self) {
            0.0
        } else {
            1.0
        }
    }
}

/// Tolerance used by floating elimination and simplex.
pub const F64_EPS: f64 = 1e-12;

impl Field for f64 {
    fn field_zero() -> Self {
        0.0
    }
    fn field_one() -> Self {
        1.0
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn over(&self, o: &Self) -> Self {
        self / o
    }
    fn negated(&self) -> Self {
        -self
    }
    fn near_zero(&self) -> bool {
        self.abs() <= F64_EPS
    }
    fn strictly_positive(&self) -> bool {
        *self > F64_EPS
    }
    fn compare(&self, o: &Self) -> Ordering {
        if (self - o).abs() <= F64_EPS * (1.0 + self.abs().max(o.abs())) {
            Ordering::Equal
        } else if self < o {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

fn pivot_row<F: Field>(m: &[Vec<F>], col: usize, from: usize) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (r, row) in m.iter().enumerate().skip(from) {
        if row[col].near_zero() {
            continue;
        }
        let mag = row[col].magnitude();
        if best.map_or(true, |(_, b)| mag > b) {
            best = Some((r, mag));
        }
    }
    best.map(|(r, _)| r)
}

/// Row-reduces `m` in place; returns (rank, determinant sign-adjusted product of pivots).
fn eliminate<F: Field>(m: &mut [Vec<F>], cols: usize) -> (usize, F) {
    let mut rank = 0;
    let mut det = F::field_one();
    for c in 0..cols {
        if rank == m.len() {
            break;
        }
        let Some(p) = pivot_row(m, c, rank) else {
            det = F::field_zero();
            continue;
        };
        if p != rank {
            m.swap(p, rank);
            det = det.negated();
        }
        let piv = m[rank][c].clone();
        det = det.times(&piv);
        for r in 0..m.len() {
            if r == rank || m[r][c].near_zero() {
                continue;
            }
            let factor = m[r][c].over(&piv);
            for k in c..m[r].len() {
                let v = m[rank][k].times(&factor);
                m[r][k] = m[r][k].minus(&v);
            }
        }
        rank += 1;
    }
    (rank, det)
}

pub fn rank<F: Field>(m: &[Vec<F>]) -> usize {
    if m.is_empty() {
        return 0;
    }
    let cols = m[0].len();
    let mut work = m.to_vec();
    eliminate(&mut work, cols).0
}

pub fn det<F: Field>(m: &[Vec<F>]) -> F {
    let n = m.len();
    let mut work = m.to_vec();
    let (rank, det) = eliminate(&mut work, n);
    if rank < n {
        F::field_zero()
    } else {
        det
    }
}

/// Solves `m x = b` for square nonsingular `m`.
pub fn solve<F: Field>(m: &[Vec<F>], b: &[F]) -> Option<Vec<F>> {
    let n = m.len();
    let mut work: Vec<Vec<F>> = m
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let (rank, _) = eliminate(&mut work, n);
    if rank < n {
        return None;
    }
    Some((0..n).map(|i| work[i][n].over(&work[i][i])).collect())
}

pub fn inverse<F: Field>(m: &[Vec<F>]) -> Option<Vec<Vec<F>>> {
    let n = m.len();
    let mut work: Vec<Vec<F>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { F::field_one() } else { F::field_zero() }));
            r
        })
        .collect();
    let (rank, _) = eliminate(&mut work, n);
    if rank < n {
        return None;
    }
    Some(
        (0..n)
            .map(|i| {
                let piv = work[i][i].clone();
                work[i][n..].iter().map(|v| v.over(&piv)).collect()
            })
            .collect(),
    )
}

/// Exact `L D Lᵀ` factorisation with unit lower-triangular `L`.
/// Returns `None` unless every pivot is strictly positive.
pub fn ldl(m: &QMat) -> Option<(QMat, Vec<Q>)> {
    let n = m.len();
    let mut l = vec![vec![Q::zero(); n]; n];
    let mut d = vec![Q::zero(); n];
    for j in 0..n {
        let mut dj = m[j][j].clone();
        for k in 0..j {
            dj -= &l[j][k] * &l[j][k] * &d[k];
        }
        if !dj.is_positive() {
            return None;
        }
        l[j][j] = Q::one();
        for i in j + 1..n {
            let mut v = m[i][j].clone();
            for k in 0..j {
                v -= &l[i][k] * &l[j][k] * &d[k];
            }
            l[i][j] = v / &dj;
        }
        d[j] = dj;
    }
    Some((l, d))
}

pub fn is_symmetric(m: &QMat) -> bool {
    let n = m.len();
    (0..n).all(|i| m[i].len() == n && (0..i).all(|j| m[i][j] == m[j][i]))
}

pub fn mat_to_f64(m: &[Vec<Q>]) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(to_f64).collect()).collect()
}

pub fn mat_vec(m: &[Vec<Q>], v: &[Q]) -> Vec<Q> {
    m.iter()
        .map(|row| row.iter().zip(v).fold(Q::zero(), |acc, (a, b)| acc + a * b))
        .collect()
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

pub fn dot_f64(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn mat_vec_f64(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot_f64(row, v)).collect()
}

pub fn quad_f64(m: &[Vec<f64>], v: &[f64]) -> f64 {
    dot_f64(v, &mat_vec_f64(m, v))
}

/// Volume of the Euclidean unit ball in dimension `d`, by the two-step recurrence.
pub fn unit_ball_volume(d: usize) -> f64 {
    let mut vols = vec![1.0, 2.0];
    for k in 2..=d {
        vols.push(vols[k - 2] * 2.0 * core::f64::consts::PI / k as f64);
    }
    vols[d]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_volumes() {
        let pi = core::f64::consts::PI;
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - pi).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * pi / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - pi * pi / 2.0).abs() < 1e-14);
    }

    #[test]
    fn floor_add_sqrt_exact_on_squares() {
        assert_eq!(floor_add_sqrt(&q(1, 2), &qi(4)), Int::from(2));
        assert_eq!(ceil_sub_sqrt(&q(1, 2), &qi(4)), Int::from(-1));
        assert_eq!(floor_add_sqrt(&qi(0), &qi(9)), Int::from(3));
        assert_eq!(floor_add_sqrt(&qi(0), &q(8, 1)), Int::from(2));
        assert_eq!(floor_sqrt(&q(17, 2)), Int::from(2));
    }

    #[test]
    fn snap_keeps_relative_precision() {
        let m = vec![vec![3e-9, 1e-10], vec![1.1e-10, 5e-9]];
        let s = snap_symmetric(&m);
        assert!((to_f64(&s[0][0]) / 3e-9 - 1.0).abs() < 1e-12);
        assert_eq!(s[0][1], s[1][0]);
        assert!((to_f64(&s[0][1]) - 1.05e-10).abs() < 1e-22);
        let big = snap_symmetric(&[vec![1e20]]);
        assert!((to_f64(&big[0][0]) / 1e20 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ldl_rejects_indefinite() {
        let m = vec![vec![qi(1), qi(2)], vec![qi(2), qi(1)]];
        assert!(ldl(&m).is_none());
        let m = vec![vec![qi(4), qi(2)], vec![qi(2), qi(3)]];
        let (l, d) = ldl(&m).unwrap();
        assert_eq!(d, vec![qi(4), qi(2)]);
        assert_eq!(l[1][0], q(1, 2));
    }

    #[test]
    fn elimination_routines() {
        let m = vec![vec![qi(2), qi(1)], vec![qi(1), qi(3)]];
        assert_eq!(det(&m), qi(5));
        let inv = inverse(&m).unwrap();
        assert_eq!(inv[0][0], q(3, 5));
        assert_eq!(inv[0][1], q(-1, 5));
        assert_eq!(solve(&m, &[qi(3), qi(4)]).unwrap(), vec![qi(1), qi(1)]);
        let singular = vec![vec![qi(1), qi(2)], vec![qi(2), qi(4)]];
        assert_eq!(rank(&singular), 1);
        assert!(inverse(&singular).is_none());
        let fm = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!((det(&fm) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn snap_has_bounded_denominator() {
        let s = snap(0.1);
        assert!(s.denom() <= &Int::from(1u64 << SNAP_BITS));
        assert!((to_f64(&s) - 0.1).abs() < 1e-14);
    }
}
