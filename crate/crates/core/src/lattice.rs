//! Exact enumeration of `Z^d` points in center-shifted symmetric bodies.
//!
//! Ellipsoids use Fincke–Pohst recursion driven by an exact rational
//! `LDLᵀ` factorisation; interval radii are widened outward and every leaf is
//! re-checked exactly, so no point is missed and none is wrongly kept.
//! Polytopes scan their outward-rounded bounding box.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::Zero;

use crate::bodies::{BodyKind, SymmetricBody};
use crate::error::{check_dim, Error, Result};
use crate::num::{common_denominator, int_to_i128, int_to_i64, ldl, to_f64, Q};

/// Default cap on the number of enumerated points.
pub const DEFAULT_LIMIT: usize = 10_000_000;

// Bounding boxes larger than this are refused by the scan path.
const MAX_SCAN_CELLS: f64 = 2e10;

#[derive(Debug, Clone, PartialEq)]
pub struct LatticePointSet {
    /// Lexicographically sorted, no duplicates.
    pub points: Vec<Vec<i64>>,
    pub body: SymmetricBody,
    pub center: Vec<Q>,
    /// Set when the limit was reached; `points` is then a lexicographic prefix.
    pub truncated: bool,
}

impl LatticePointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Turns a truncated set into an error.
    pub fn complete(self, limit: usize) -> Result<Self> {
        if self.truncated {
            Err(Error::Truncated { limit })
        } else {
            Ok(self)
        }
    }

    pub fn contains(&self, n: &[i64]) -> bool {
        self.points.binary_search_by(|p| p.as_slice().cmp(n)).is_ok()
    }
}

/// Center as integer offset over a common integer scale.
struct Shift {
    offset: Vec<i128>,
    scale: i128,
}

fn shift_of(center: &[Q]) -> Result<Shift> {
    let (nums, den) = common_denominator(center);
    let offset: Option<Vec<i128>> = nums.iter().map(int_to_i128).collect();
    match (offset, int_to_i128(&den)) {
        (Some(offset), Some(scale)) => Ok(Shift { offset, scale }),
        _ => Err(Error::InvalidArgument("center denominators too large".into())),
    }
}

/// Points `n ∈ Z^d` with `gauge(n − center) ≤ 1`, in lexicographic order.
pub fn enumerate_lattice(body: &SymmetricBody, center: &[Q], limit: usize) -> Result<LatticePointSet> {
    check_dim(body.dim(), center.len())?;
    if limit == 0 {
        return Err(Error::InvalidArgument("limit must be at least 1".into()));
    }
    let (points, truncated) = match body.kind() {
        BodyKind::Ellipsoid => fincke_pohst(body, center, limit)?,
        BodyKind::Polytope => box_scan(body, center, limit)?,
    };
    Ok(LatticePointSet {
        points,
        body: body.clone(),
        center: center.to_vec(),
        truncated,
    })
}

/// Bounding-box scan for any body; the reference path for ellipsoids.
pub fn scan_lattice(body: &SymmetricBody, center: &[Q], limit: usize) -> Result<LatticePointSet> {
    check_dim(body.dim(), center.len())?;
    if limit == 0 {
        return Err(Error::InvalidArgument("limit must be at least 1".into()));
    }
    let (points, truncated) = box_scan(body, center, limit)?;
    Ok(LatticePointSet {
        points,
        body: body.clone(),
        center: center.to_vec(),
        truncated,
    })
}

/// Number of lattice points; errors when it exceeds `limit`.
pub fn count_lattice(body: &SymmetricBody, center: &[Q], limit: usize) -> Result<usize> {
    let set = enumerate_lattice(body, center, limit)?;
    if set.truncated {
        return Err(Error::Truncated { limit });
    }
    Ok(set.len())
}

fn box_scan(body: &SymmetricBody, center: &[Q], limit: usize) -> Result<(Vec<Vec<i64>>, bool)> {
    let shift = shift_of(center)?;
    let bb = body.bounding_box()?;
    let mut ranges = Vec::with_capacity(body.dim());
    let mut cells = 1.0f64;
    for (r, c) in bb.iter().zip(center) {
        let (lo, hi) = r.integer_range_around(c);
        let (Some(lo), Some(hi)) = (int_to_i64(&lo), int_to_i64(&hi)) else {
            return Err(Error::Guard("bounding box exceeds i64 range".into()));
        };
        if hi < lo {
            return Ok((Vec::new(), false));
        }
        cells *= (hi - lo + 1) as f64;
        ranges.push((lo, hi));
    }
    if cells > MAX_SCAN_CELLS {
        return Err(Error::Guard("bounding box too large to scan".into()));
    }
    let mut out = Vec::new();
    let mut n: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        if body.compare_unit_shifted(&n, &shift.offset, shift.scale) != Ordering::Greater {
            if out.len() == limit {
                return Ok((out, true));
            }
            out.push(n.clone());
        }
        // odometer, last coordinate fastest
        let mut i = n.len();
        loop {
            if i == 0 {
                return Ok((out, false));
            }
            i -= 1;
            if n[i] < ranges[i].1 {
                n[i] += 1;
                for j in i + 1..n.len() {
                    n[j] = ranges[j].0;
                }
                break;
            }
        }
    }
}

/// Per-coordinate data of the reversed `LDLᵀ`: with `y = n − c`,
/// `yᵀGy = Σᵢ diag[i] · (yᵢ + Σ_{j<i} coef[i][j] yⱼ)²`.
struct Triangular {
    diag: Vec<f64>,
    coef: Vec<Vec<f64>>,
}

fn reversed_ldl(gram: &[Vec<Q>]) -> Result<Triangular> {
    let d = gram.len();
    let rev: Vec<Vec<Q>> = (0..d)
        .map(|i| (0..d).map(|j| gram[d - 1 - i][d - 1 - j].clone()).collect())
        .collect();
    let (l, dd) = ldl(&rev).ok_or(Error::NotPositiveDefinite)?;
    let diag = (0..d).map(|i| to_f64(&dd[d - 1 - i])).collect();
    let coef = (0..d).map(|i| (0..i).map(|j| to_f64(&l[d - 1 - j][d - 1 - i])).collect()).collect();
    Ok(Triangular { diag, coef })
}

// Slack added to the remaining squared radius, relative to the unit budget.
const RADIUS_SLACK: f64 = 1e-9;
// Absolute widening of each coordinate interval.
const INTERVAL_SLACK: f64 = 1e-7;

struct Walk<'a> {
    body: &'a SymmetricBody,
    tri: Triangular,
    center: Vec<f64>,
    shift: Shift,
    limit: usize,
    n: Vec<i64>,
    y: Vec<f64>,
    out: Vec<Vec<i64>>,
    truncated: bool,
}

impl Walk<'_> {
    fn descend(&mut self, i: usize, remaining: f64) {
        if self.truncated {
            return;
        }
        let d = self.n.len();
        if i == d {
            if self.body.compare_unit_shifted(&self.n, &self.shift.offset, self.shift.scale) != Ordering::Greater {
                if self.out.len() == self.limit {
                    self.truncated = true;
                } else {
                    self.out.push(self.n.clone());
                }
            }
            return;
        }
        let s = self.center[i] - self.tri.coef[i].iter().zip(&self.y).map(|(a, b)| a * b).sum::<f64>();
        let half = libm::sqrt(remaining.max(0.0) / self.tri.diag[i]);
        let widen = INTERVAL_SLACK * (1.0 + libm::fabs(s) + half);
        let lo = libm::ceil(s - half - widen) as i64;
        let hi = libm::floor(s + half + widen) as i64;
        for v in lo..=hi {
            self.n[i] = v;
            self.y[i] = v as f64 - self.center[i];
            let t = v as f64 - s;
            let next = remaining - self.tri.diag[i] * t * t;
            if next < -RADIUS_SLACK {
                continue;
            }
            self.descend(i + 1, next + RADIUS_SLACK);
            if self.truncated {
                return;
            }
        }
    }
}

fn fincke_pohst(body: &SymmetricBody, center: &[Q], limit: usize) -> Result<(Vec<Vec<i64>>, bool)> {
    let gram = body.gram().ok_or(Error::Internal("ellipsoid without gram"))?;
    let tri = reversed_ldl(gram)?;
    let d = body.dim();
    let mut walk = Walk {
        body,
        tri,
        center: center.iter().map(to_f64).collect(),
        shift: shift_of(center)?,
        limit,
        n: vec![0; d],
        y: vec![0.0; d],
        out: Vec::new(),
        truncated: false,
    };
    walk.descend(0, 1.0 + RADIUS_SLACK);
    Ok((walk.out, walk.truncated))
}

/// Center vector of zeros.
pub fn origin(d: usize) -> Vec<Q> {
    vec![Q::zero(); d]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{q, qi};

    fn diag(v: &[Q]) -> Vec<Vec<Q>> {
        let d = v.len();
        (0..d)
            .map(|i| (0..d).map(|j| if i == j { v[i].clone() } else { Q::zero() }).collect())
            .collect()
    }

    #[test]
    fn unit_disk() {
        let disk = SymmetricBody::unit_ball(2).unwrap();
        let set = enumerate_lattice(&disk, &origin(2), DEFAULT_LIMIT).unwrap();
        assert_eq!(set.points, vec![vec![-1, 0], vec![0, -1], vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert!(!set.truncated);
        assert_eq!(count_lattice(&disk, &origin(2), 100).unwrap(), 5);
    }

    #[test]
    fn radius_two_disk_matches_grid_oracle() {
        let disk2 = SymmetricBody::ellipsoid(diag(&[q(1, 4), q(1, 4)])).unwrap();
        let oracle = (-2i64..=2)
            .flat_map(|a| (-2i64..=2).map(move |b| (a, b)))
            .filter(|(a, b)| a * a + b * b <= 4)
            .count();
        assert_eq!(oracle, 13);
        assert_eq!(count_lattice(&disk2, &origin(2), 100).unwrap(), oracle);
    }

    #[test]
    fn boxes_and_intervals() {
        let bx = SymmetricBody::axis_box(&[q(3, 2), q(3, 2)]).unwrap();
        assert_eq!(count_lattice(&bx, &origin(2), 100).unwrap(), 9);
        for n in 0..20i64 {
            let iv = SymmetricBody::axis_box(&[qi(n.max(1))]).unwrap();
            assert_eq!(count_lattice(&iv, &origin(1), 1000).unwrap() as i64, 2 * n.max(1) + 1);
        }
    }

    #[test]
    fn center_shift() {
        // interval radius 1/2 centred at 1/2 contains exactly {0, 1}
        let iv = SymmetricBody::axis_box(&[q(1, 2)]).unwrap();
        let set = enumerate_lattice(&iv, &[q(1, 2)], 10).unwrap();
        assert_eq!(set.points, vec![vec![0], vec![1]]);
        let disk = SymmetricBody::unit_ball(2).unwrap();
        let set = enumerate_lattice(&disk, &[q(1, 2), q(1, 2)], 10).unwrap();
        assert_eq!(set.points, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn truncation_is_flagged() {
        let disk = SymmetricBody::unit_ball(2).unwrap();
        let set = enumerate_lattice(&disk, &origin(2), 3).unwrap();
        assert!(set.truncated);
        assert_eq!(set.points, vec![vec![-1, 0], vec![0, -1], vec![0, 0]]);
        assert_eq!(count_lattice(&disk, &origin(2), 4), Err(Error::Truncated { limit: 4 }));
        assert!(enumerate_lattice(&disk, &origin(2), 0).is_err());
    }

    #[test]
    fn fincke_pohst_agrees_with_scan_on_skew_ellipsoid() {
        let g = vec![
            vec![q(7, 10), q(3, 10), q(-1, 5)],
            vec![q(3, 10), q(1, 2), q(1, 10)],
            vec![q(-1, 5), q(1, 10), q(1, 3)],
        ];
        let body = SymmetricBody::ellipsoid(g).unwrap().scale(&qi(4)).unwrap();
        let c = [q(1, 3), q(-2, 7), qi(0)];
        let a = enumerate_lattice(&body, &c, DEFAULT_LIMIT).unwrap();
        let b = scan_lattice(&body, &c, DEFAULT_LIMIT).unwrap();
        assert_eq!(a.points, b.points);
        assert!(a.len() > 100);
    }
}
