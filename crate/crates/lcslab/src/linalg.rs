//! Exact rational linear algebra: fraction-free Bareiss rank, linear solves
//! and inversion over `BigRational`.

use num::bigint::BigInt;
use num::{Integer, One, Signed, Zero};

use crate::scalar::Rational;
use crate::{Error, Result};

/// Rank of a rational matrix by fraction-free Bareiss elimination on the
/// denominator-cleared integer matrix.
pub fn rank(matrix: &[Vec<Rational>]) -> usize {
    let rows = matrix.len();
    if rows == 0 {
        return 0;
    }
    let cols = matrix[0].len();
    if cols == 0 {
        return 0;
    }
    // Clear denominators row by row; row scaling preserves rank.
    let mut m: Vec<Vec<BigInt>> = matrix
        .iter()
        .map(|row| {
            let lcm = row.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
            row.iter().map(|q| q.numer() * (&lcm / q.denom())).collect()
        })
        .collect();

    let mut rank = 0;
    let mut prev = BigInt::one();
    let mut pivot_row = 0;
    for col in 0..cols {
        // Find a pivot in this column.
        let Some(p) = (pivot_row..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(pivot_row, p);
        let pivot = m[pivot_row][col].clone();
        for r in pivot_row + 1..rows {
            for c in col + 1..cols {
                let v = (&pivot * &m[r][c] - &m[r][col] * &m[pivot_row][c]) / &prev;
                m[r][c] = v;
            }
            m[r][col] = BigInt::zero();
        }
        prev = pivot;
        pivot_row += 1;
        rank += 1;
        if pivot_row == rows {
            break;
        }
    }
    rank
}

/// Solve `A x = b` exactly. Returns `None` when the system is inconsistent;
/// for underdetermined systems one particular solution is returned (free
/// variables set to zero).
pub fn solve(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let rows = a.len();
    let cols = if rows > 0 { a[0].len() } else { 0 };
    assert_eq!(b.len(), rows);
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();

    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut pivot_row = 0;
    for col in 0..cols {
        let Some(p) = (pivot_row..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(pivot_row, p);
        let inv = m[pivot_row][col].recip();
        for c in col..=cols {
            m[pivot_row][c] = &m[pivot_row][c] * &inv;
        }
        for r in 0..rows {
            if r != pivot_row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in col..=cols {
                    let v = &m[r][c] - &factor * &m[pivot_row][c];
                    m[r][c] = v;
                }
            }
        }
        pivots.push((pivot_row, col));
        pivot_row += 1;
        if pivot_row == rows {
            break;
        }
    }
    // Inconsistent if a zero row has nonzero RHS.
    for r in pivot_row..rows {
        if !m[r][cols].is_zero() {
            return None;
        }
    }
    let mut x = vec![Rational::zero(); cols];
    for (r, c) in pivots {
        x[c] = m[r][cols].clone();
    }
    Some(x)
}

/// Exact inverse of a square rational matrix.
pub fn inverse(a: &[Vec<Rational>]) -> Result<Vec<Vec<Rational>>> {
    let n = a.len();
    if a.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch(n, a.iter().map(|r| r.len()).max().unwrap_or(0)));
    }
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Err(Error::SingularMap);
        };
        m.swap(col, p);
        let inv = m[col][col].recip();
        for c in 0..2 * n {
            m[col][c] = &m[col][c] * &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in 0..2 * n {
                    let v = &m[r][c] - &factor * &m[col][c];
                    m[r][c] = v;
                }
            }
        }
    }
    Ok(m.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Determinant via Bareiss (integer, fraction-free after clearing
/// denominators; the cleared factors are divided back out).
pub fn determinant(a: &[Vec<Rational>]) -> Rational {
    let n = a.len();
    if n == 0 {
        return Rational::one();
    }
    let mut scale = Rational::one();
    let mut m: Vec<Vec<BigInt>> = a
        .iter()
        .map(|row| {
            let lcm = row.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
            scale = &scale * &Rational::from_integer(lcm.clone());
            row.iter().map(|q| q.numer() * (&lcm / q.denom())).collect()
        })
        .collect();
    let mut prev = BigInt::one();
    let mut sign = 1i32;
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rational::zero();
        };
        if p != col {
            m.swap(col, p);
            sign = -sign;
        }
        let pivot = m[col][col].clone();
        for r in col + 1..n {
            for c in col + 1..n {
                let v = (&pivot * &m[r][c] - &m[r][col] * &m[col][c]) / &prev;
                m[r][c] = v;
            }
            m[r][col] = BigInt::zero();
        }
        prev = pivot;
    }
    let det_int = if sign < 0 { -m[n - 1][n - 1].clone() } else { m[n - 1][n - 1].clone() };
    Rational::from_integer(det_int) / scale
}

pub fn is_invertible(a: &[Vec<Rational>]) -> bool {
    !a.is_empty() && a.len() == a[0].len() && !determinant(a).is_zero()
}

#[allow(unused)]
fn abs(q: &Rational) -> Rational {
    q.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_i64};

    fn m(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter().map(|r| r.iter().map(|&v| rat_i64(v)).collect()).collect()
    }

    #[test]
    fn rank_of_small_matrices() {
        assert_eq!(rank(&m(&[&[1, 2], &[2, 4]])), 1);
        assert_eq!(rank(&m(&[&[1, 0], &[0, 1]])), 2);
        assert_eq!(rank(&m(&[&[0, 0], &[0, 0]])), 0);
        assert_eq!(rank(&m(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]])), 2);
    }

    #[test]
    fn solve_and_consistency() {
        let a = m(&[&[2, 1], &[1, 3]]);
        let b = vec![rat_i64(5), rat_i64(10)];
        let x = solve(&a, &b).unwrap();
        assert_eq!(x, vec![rat_i64(1), rat_i64(3)]);
        // Inconsistent system
        let a2 = m(&[&[1, 1], &[2, 2]]);
        assert!(solve(&a2, &[rat_i64(1), rat_i64(3)]).is_none());
        // Underdetermined but consistent
        let x2 = solve(&a2, &[rat_i64(1), rat_i64(2)]).unwrap();
        assert_eq!(&x2[0] + &x2[1], rat_i64(1));
    }

    #[test]
    fn inverse_roundtrip() {
        let a = m(&[&[1, 1, 0], &[0, 1, 0], &[2, 0, 1]]);
        let inv = inverse(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: Rational = (0..3).map(|k| &a[i][k] * &inv[k][j]).sum();
                assert_eq!(v, if i == j { rat_i64(1) } else { rat_i64(0) });
            }
        }
        assert!(inverse(&m(&[&[1, 2], &[2, 4]])).is_err());
    }

    #[test]
    fn determinant_values() {
        assert_eq!(determinant(&m(&[&[2, 0], &[0, 3]])), rat_i64(6));
        assert_eq!(determinant(&m(&[&[0, 1], &[1, 0]])), rat_i64(-1));
        let half = vec![vec![rat(1, 2), rat_i64(0)], vec![rat_i64(0), rat(1, 3)]];
        assert_eq!(determinant(&half), rat(1, 6));
    }
}
