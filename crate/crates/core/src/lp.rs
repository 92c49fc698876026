//! Dense primal simplex with Bland's rule and lexicographic objectives.
//!
//! Solves `max (c₀·x, c₁·x, …)` lexicographically subject to `A x ≤ b`,
//! `x ≥ 0`, `b ≥ 0`, starting from the all-slack basis. Generic over
//! [`Field`] so the same routine serves exact rationals and doubles.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::num::Field;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<F> {
    Optimal { x: Vec<F>, values: Vec<F> },
    Unbounded,
}

pub fn maximize_lex<F: Field>(a: &[Vec<F>], b: &[F], objectives: &[Vec<F>]) -> Result<LpOutcome<F>> {
    let m = a.len();
    let n = objectives.first().map_or(0, |c| c.len());
    if b.len() != m || a.iter().any(|r| r.len() != n) || objectives.iter().any(|c| c.len() != n) {
        return Err(Error::Internal("inconsistent LP shape"));
    }
    if b.iter().any(|bi| !bi.strictly_positive() && !bi.near_zero()) {
        return Err(Error::Internal("LP right-hand side must be nonnegative"));
    }
    let cols = n + m;
    let mut rows: Vec<Vec<F>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..m).map(|k| if k == i { F::field_one() } else { F::field_zero() }));
            row
        })
        .collect();
    let mut rhs: Vec<F> = b.to_vec();
    let mut basis: Vec<usize> = (n..cols).collect();
    let mut reduced: Vec<Vec<F>> = objectives
        .iter()
        .map(|c| {
            let mut r = c.clone();
            r.extend((0..m).map(|_| F::field_zero()));
            r
        })
        .collect();
    let mut values: Vec<F> = vec![F::field_zero(); objectives.len()];

    let max_iter = 50 * (cols + 1) * (m + 1);
    for _ in 0..max_iter {
        // Bland: lowest-index column whose reduced-cost vector is lexicographically positive.
        let entering = (0..cols).find(|&j| {
            reduced
                .iter()
                .map(|r| &r[j])
                .find(|v| !v.near_zero())
                .is_some_and(|v| v.strictly_positive())
        });
        let Some(e) = entering else {
            let mut x = vec![F::field_zero(); n];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    x[bv] = rhs[i].clone();
                }
            }
            return Ok(LpOutcome::Optimal { x, values });
        };
        let mut leave: Option<(usize, F)> = None;
        for i in 0..m {
            if !rows[i][e].strictly_positive() {
                continue;
            }
            let ratio = rhs[i].over(&rows[i][e]);
            leave = match leave {
                None => Some((i, ratio)),
                Some((li, lr)) => match ratio.compare(&lr) {
                    Ordering::Less => Some((i, ratio)),
                    Ordering::Equal if basis[i] < basis[li] => Some((i, ratio)),
                    _ => Some((li, lr)),
                },
            };
        }
        let Some((p, _)) = leave else {
            return Ok(LpOutcome::Unbounded);
        };
        let piv = rows[p][e].clone();
        for v in rows[p].iter_mut() {
            *v = v.over(&piv);
        }
        rhs[p] = rhs[p].over(&piv);
        let pivot_row = rows[p].clone();
        let pivot_rhs = rhs[p].clone();
        for i in 0..m {
            if i == p || rows[i][e].near_zero() {
                continue;
            }
            let f = rows[i][e].clone();
            for (v, pv) in rows[i].iter_mut().zip(&pivot_row) {
                *v = v.minus(&pv.times(&f));
            }
            rhs[i] = rhs[i].minus(&pivot_rhs.times(&f));
            if rhs[i].near_zero() {
                rhs[i] = F::field_zero();
            }
        }
        for (r, val) in reduced.iter_mut().zip(values.iter_mut()) {
            let f = r[e].clone();
            if f.near_zero() {
                continue;
            }
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                *v = v.minus(&pv.times(&f));
            }
            *val = val.plus(&pivot_rhs.times(&f));
        }
        basis[p] = e;
    }
    Err(Error::Internal("simplex iteration budget exhausted"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{q, qi, Q};

    #[test]
    fn box_corner() {
        // max x + y, x <= 2, y <= 1
        let a = vec![vec![qi(1), qi(0)], vec![qi(0), qi(1)]];
        let out = maximize_lex(&a, &[qi(2), qi(1)], &[vec![qi(1), qi(1)]]).unwrap();
        assert_eq!(
            out,
            LpOutcome::Optimal {
                x: vec![qi(2), qi(1)],
                values: vec![qi(3)]
            }
        );
    }

    #[test]
    fn lexicographic_tie_break() {
        // max x + y on x + y <= 1: optimal face is a segment; second objective -x picks (0, 1).
        let a = vec![vec![qi(1), qi(1)]];
        let out = maximize_lex(&a, &[qi(1)], &[vec![qi(1), qi(1)], vec![qi(-1), qi(0)]]).unwrap();
        match out {
            LpOutcome::Optimal { x, .. } => assert_eq!(x, vec![qi(0), qi(1)]),
            _ => panic!(),
        }
    }

    #[test]
    fn detects_unbounded() {
        let a = vec![vec![qi(1), qi(-1)]];
        let out = maximize_lex(&a, &[qi(1)], &[vec![qi(0), qi(1)]]).unwrap();
        assert_eq!(out, LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Classic Beale cycling example (cycles under the largest-coefficient rule).
        let a: Vec<Vec<Q>> = vec![
            vec![q(1, 4), qi(-8), qi(-1), qi(9)],
            vec![q(1, 2), qi(-12), q(-1, 2), qi(3)],
            vec![qi(0), qi(0), qi(1), qi(0)],
        ];
        let c = vec![q(3, 4), qi(-20), q(1, 2), qi(-6)];
        let out = maximize_lex(&a, &[qi(0), qi(0), qi(1)], &[c]).unwrap();
        match out {
            LpOutcome::Optimal { values, .. } => assert_eq!(values[0], q(5, 4)),
            _ => panic!(),
        }
    }

    #[test]
    fn float_matches_exact() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let out = maximize_lex(&a, &[4.0, 6.0], &[vec![1.0, 1.0]]).unwrap();
        match out {
            LpOutcome::Optimal { values, .. } => assert!((values[0] - 2.8).abs() < 1e-12),
            _ => panic!(),
        }
    }
}
