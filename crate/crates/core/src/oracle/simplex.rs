//! Dense exact-rational simplex for tiny fractional packing problems.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::capacity::Rational;
use crate::error::{Error, Result};

pub fn big(r: Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Maximizes `sum(x)` subject to `A x <= b`, `x >= 0`, with `b >= 0`.
/// Bland's rule, so no cycling; exact arithmetic throughout.
pub fn maximize_sum(a: &[Vec<BigRational>], b: &[BigRational]) -> Result<BigRational> {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    if n == 0 {
        return Ok(BigRational::zero());
    }
    // Tableau: columns 0..n structural, n..n+m slack, last column rhs.
    let cols = n + m + 1;
    let mut t: Vec<Vec<BigRational>> = Vec::with_capacity(m + 1);
    for i in 0..m {
        let mut row = vec![BigRational::zero(); cols];
        row[..n].clone_from_slice(&a[i]);
        row[n + i] = BigRational::one();
        row[cols - 1] = b[i].clone();
        t.push(row);
    }
    // Objective row holds reduced costs; structural costs are all 1.
    let mut obj = vec![BigRational::zero(); cols];
    for c in obj.iter_mut().take(n) {
        *c = BigRational::one();
    }
    t.push(obj);

    loop {
        // Entering column: smallest index with positive reduced cost.
        let entering = (0..cols - 1).find(|&j| t[m][j].is_positive());
        let Some(col) = entering else {
            return Ok(-t[m][cols - 1].clone());
        };
        // Leaving row: minimum ratio, ties to the smallest row index.
        let mut pivot: Option<(usize, BigRational)> = None;
        for (i, row) in t.iter().enumerate().take(m) {
            if row[col].is_positive() {
                let ratio = &row[cols - 1] / &row[col];
                match &pivot {
                    Some((_, best)) if *best <= ratio => {}
                    _ => pivot = Some((i, ratio)),
                }
            }
        }
        let Some((row, _)) = pivot else {
            return Err(Error::UnboundedFlow);
        };
        // Pivot on (row, col).
        let factor = t[row][col].clone();
        for x in t[row].iter_mut() {
            *x /= &factor;
        }
        let pivot_row = t[row].clone();
        for (i, other) in t.iter_mut().enumerate() {
            if i != row && !other[col].is_zero() {
                let f = other[col].clone();
                for (x, p) in other.iter_mut().zip(&pivot_row) {
                    *x -= &f * p;
                }
            }
        }
    }
}
