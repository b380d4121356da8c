//! Exact dense linear algebra: rational rank and fraction-free integer determinants.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

/// Dense row-major matrix of rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(k: usize) -> Self {
        let mut m = Self::zeros(k, k);
        for i in 0..k {
            m.set(i, i, Rational::one());
        }
        m
    }

    /// Builds from row vectors; all rows must have the same length.
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        RationalMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    /// `u v^T`.
    pub fn outer(u: &[Rational], v: &[Rational]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, a) in u.iter().enumerate() {
            for (j, b) in v.iter().enumerate() {
                m.set(i, j, a * b);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn add(&self, other: &RationalMatrix) -> RationalMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> RationalMatrix {
        RationalMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * c).collect() }
    }

    /// Entrywise absolute sum `Σ |a_ij|`.
    pub fn abs_sum(&self) -> Rational {
        self.data.iter().fold(Rational::zero(), |acc, a| acc + a.abs())
    }

    pub fn transpose(&self) -> RationalMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }
}

/// Rank over the rationals.
///
/// Rows are scaled to integers and reduced by fraction-free (Bareiss) elimination,
/// whose intermediate entries are minors of the scaled matrix, so every division is
/// exact and no gcd work is done. The pivot in each column is the entry of largest
/// absolute value among the remaining rows (ties to the lowest row).
pub fn exact_rank(m: &RationalMatrix) -> usize {
    let mut rows: Vec<Vec<BigInt>> = (0..m.rows())
        .map(|i| {
            let row = m.row(i);
            let lcm = row.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
            row.iter().map(|q| q.numer() * (&lcm / q.denom())).collect()
        })
        .collect();
    let cols = m.cols();
    let mut rank = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        if rank == rows.len() {
            break;
        }
        let mut pivot: Option<usize> = None;
        for r in rank..rows.len() {
            if rows[r][c].is_zero() {
                continue;
            }
            match pivot {
                Some(p) if rows[p][c].magnitude() >= rows[r][c].magnitude() => {}
                _ => pivot = Some(r),
            }
        }
        let Some(p) = pivot else { continue };
        rows.swap(rank, p);
        let (head, tail) = rows.split_at_mut(rank + 1);
        let prow = &head[rank];
        let unit_step = prow[c] == prev;
        for row in tail.iter_mut() {
            if row[c].is_zero() {
                // the update reduces to scaling by pivot / prev
                if !unit_step {
                    for x in row[c + 1..].iter_mut().filter(|x| !x.is_zero()) {
                        *x = &*x * &prow[c] / &prev;
                    }
                }
                continue;
            }
            for j in c + 1..cols {
                let v = (&row[j] * &prow[c] - &row[c] * &prow[j]) / &prev;
                row[j] = v;
            }
            row[c] = BigInt::zero();
        }
        prev = prow[c].clone();
        rank += 1;
    }
    rank
}

/// Rank by plain rational Gaussian elimination with first-nonzero pivoting.
///
/// Slower than [`exact_rank`]; kept as an independent check.
pub fn rational_rank(m: &RationalMatrix) -> usize {
    let mut rows = m.to_rows();
    let mut rank = 0;
    for c in 0..m.cols() {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][c].is_zero()) else { continue };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            if row[c].is_zero() {
                continue;
            }
            let f = &row[c] / &pivot[c];
            for (x, y) in row.iter_mut().zip(&pivot).skip(c) {
                *x -= &f * y;
            }
        }
        rank += 1;
    }
    rank
}

/// Determinant of a square integer matrix by Bareiss fraction-free elimination.
///
/// Every intermediate value is itself a minor of the input, so all divisions are exact.
/// The empty matrix has determinant 1.
pub fn bareiss_determinant(matrix: &[Vec<BigInt>]) -> BigInt {
    let n = matrix.len();
    assert!(matrix.iter().all(|r| r.len() == n), "matrix must be square");
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = matrix.to_vec();
    let mut sign = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = !sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if sign {
        -det
    } else {
        det
    }
}
