//! Small exact-arithmetic linear program solver.
//!
//! Solves `maximize c·x subject to A·x <= b, x >= 0` with `b >= 0` using the
//! primal simplex method on big rationals with Bland's rule. Problem sizes
//! here are tiny (a few dozen variables, at most a couple dozen constraints:
//! one per scheduler port), so the dense tableau is fine.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Exact LP optimum of `max c·x, A·x <= b, x >= 0`.
///
/// Panics if `b` has a negative entry (the origin must be feasible; every
/// use in this crate has unit port capacities).
pub fn maximize(c: &[BigRational], a: &[Vec<BigRational>], b: &[BigRational]) -> BigRational {
    let m = a.len();
    let n = c.len();
    assert!(
        b.iter().all(|v| !v.is_negative()),
        "origin must be feasible"
    );
    assert!(a.iter().all(|row| row.len() == n));

    // Tableau: m rows of [A | I | b], objective row [-c | 0 | 0].
    let cols = n + m + 1;
    let mut t: Vec<Vec<BigRational>> = Vec::with_capacity(m + 1);
    for (i, row) in a.iter().enumerate() {
        let mut r = vec![BigRational::zero(); cols];
        r[..n].clone_from_slice(row);
        r[n + i] = BigRational::one();
        r[cols - 1] = b[i].clone();
        t.push(r);
    }
    let mut obj = vec![BigRational::zero(); cols];
    for (j, cj) in c.iter().enumerate() {
        obj[j] = -cj.clone();
    }
    t.push(obj);

    let mut basis: Vec<usize> = (n..n + m).collect();

    // Bland: entering column = lowest index with negative reduced cost.
    while let Some(pivot_col) = (0..cols - 1).find(|&j| t[m][j].is_negative()) {
        // Ratio test, ties broken by lowest basis variable index (Bland).
        let mut pivot_row: Option<usize> = None;
        let mut best: Option<BigRational> = None;
        for i in 0..m {
            if t[i][pivot_col].is_positive() {
                let ratio = &t[i][cols - 1] / &t[i][pivot_col];
                let better = match &best {
                    None => true,
                    Some(b) => ratio < *b || (ratio == *b && basis[i] < basis[pivot_row.unwrap()]),
                };
                if better {
                    best = Some(ratio);
                    pivot_row = Some(i);
                }
            }
        }
        let Some(pivot_row) = pivot_row else {
            panic!("unbounded LP; port capacities make this impossible");
        };

        // Normalize pivot row, eliminate column elsewhere.
        let pv = t[pivot_row][pivot_col].clone();
        for v in t[pivot_row].iter_mut() {
            *v /= &pv;
        }
        let pivot_row_vals = t[pivot_row].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != pivot_row && !row[pivot_col].is_zero() {
                let f = row[pivot_col].clone();
                for (cell, pv) in row.iter_mut().zip(&pivot_row_vals) {
                    let delta = &f * pv;
                    *cell -= delta;
                }
            }
        }
        basis[pivot_row] = pivot_col;
    }

    t[m][cols - 1].clone()
}

/// Convenience: build a `BigRational` from an `i64` pair.
pub fn big(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_textbook_lp() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
        let c = vec![big(3, 1), big(5, 1)];
        let a = vec![
            vec![big(1, 1), big(0, 1)],
            vec![big(0, 1), big(2, 1)],
            vec![big(3, 1), big(2, 1)],
        ];
        let b = vec![big(4, 1), big(12, 1), big(18, 1)];
        assert_eq!(maximize(&c, &a, &b), big(36, 1));
    }

    #[test]
    fn degenerate_constraints_terminate() {
        // Redundant rows exercise Bland's rule.
        let c = vec![big(1, 1), big(1, 1)];
        let a = vec![
            vec![big(1, 1), big(1, 1)],
            vec![big(1, 1), big(1, 1)],
            vec![big(2, 1), big(2, 1)],
        ];
        let b = vec![big(1, 1), big(1, 1), big(2, 1)];
        assert_eq!(maximize(&c, &a, &b), big(1, 1));
    }

    #[test]
    fn zero_objective_is_zero() {
        let c = vec![big(0, 1)];
        let a = vec![vec![big(1, 1)]];
        let b = vec![big(1, 1)];
        assert_eq!(maximize(&c, &a, &b), big(0, 1));
    }
}
