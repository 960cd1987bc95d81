//! Exact arbitrary-precision rational scalars and dense matrices, with the
//! elimination kernels (RREF, kernels, principality) the rest of the crate
//! builds on. No floating point enters this module.

use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};
use thiserror::Error;

/// Exact rational scalar. Always stored in lowest terms with positive
/// denominator (maintained by `BigRational` itself).
pub type Rat = BigRational;

/// Convenience constructor for an integer rational.
pub fn rat_int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

/// Convenience constructor for `p/q`.
pub fn rat(p: i64, q: i64) -> Rat {
    assert!(q != 0, "zero denominator");
    Rat::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `p`, `-p` or `p/q`.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Rat::new(p, q))
        }
        None => {
            let p: BigInt = s.parse().ok()?;
            Some(Rat::from_integer(p))
        }
    }
}

/// Sign of a rational as `-1`, `0` or `1`.
pub fn sign_of(x: &Rat) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinAlgError {
    #[error("matrix does not have full row rank")]
    RankDeficient,
    #[error("leading square block is singular")]
    NotPrincipal,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Dense row-major matrix of exact rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Rat::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        assert!(rows.iter().all(|v| v.len() == c), "ragged rows");
        RatMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| rat_int(v)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Rat> {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn row_is_zero(&self, i: usize) -> bool {
        self.row(i).iter().all(|x| x.is_zero())
    }

    pub fn transpose(&self) -> RatMatrix {
        let mut t = RatMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *t.at_mut(j, i) = self.at(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = RatMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = a * other.at(k, j);
                    *out.at_mut(i, j) += v;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len(), "vector length mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(Rat::zero(), |acc, (a, x)| acc + a * x)
            })
            .collect()
    }

    /// Selects columns in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> RatMatrix {
        let mut out = RatMatrix::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (jj, &j) in idx.iter().enumerate() {
                *out.at_mut(i, jj) = self.at(i, j).clone();
            }
        }
        out
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        RatMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    /// Reduced row echelon form together with the pivot column indices.
    /// Zero rows are trailing; pivot columns are strictly increasing.
    pub fn rref(&self) -> (RatMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for j in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.at(i, j).is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m.at(r, j).clone();
            for jj in j..m.cols {
                let v = m.at(r, jj).clone() / &inv;
                *m.at_mut(r, jj) = v;
            }
            for i in 0..m.rows {
                if i != r && !m.at(i, j).is_zero() {
                    let f = m.at(i, j).clone();
                    for jj in j..m.cols {
                        let v = m.at(i, jj).clone() - &f * m.at(r, jj);
                        *m.at_mut(i, jj) = v;
                    }
                }
            }
            pivots.push(j);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right kernel as columns of a `cols x (cols - rank)` matrix.
    pub fn kernel_basis(&self) -> RatMatrix {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|j| !pivots.contains(j)).collect();
        let mut out = RatMatrix::zeros(self.cols, free.len());
        for (k, &fj) in free.iter().enumerate() {
            *out.at_mut(fj, k) = Rat::one();
            for (pi, &pj) in pivots.iter().enumerate() {
                *out.at_mut(pj, k) = -r.at(pi, fj).clone();
            }
        }
        out
    }

    /// Full-row-rank matrix `L` with `L * self = 0` and
    /// `rows(L) = rows(self) - rank(self)`.
    pub fn left_kernel(&self) -> RatMatrix {
        self.transpose().kernel_basis().transpose()
    }

    /// For a principal full-row-rank matrix `C`, the matrix `[Pbar; I]` whose
    /// columns form a basis of `ker(C)`; the lower block is the identity.
    pub fn kernel_basis_principal(&self) -> Result<RatMatrix, LinAlgError> {
        let s = self.rows;
        let (r, pivots) = self.rref();
        if pivots.len() < s {
            return Err(LinAlgError::RankDeficient);
        }
        if pivots.iter().enumerate().any(|(i, &p)| i != p) {
            return Err(LinAlgError::NotPrincipal);
        }
        let ell = self.cols - s;
        // rref(C) = [I | R]; kernel basis = [-R; I].
        let mut out = RatMatrix::zeros(self.cols, ell);
        for i in 0..s {
            for j in 0..ell {
                *out.at_mut(i, j) = -r.at(i, s + j).clone();
            }
        }
        for j in 0..ell {
            *out.at_mut(s + j, j) = Rat::one();
        }
        Ok(out)
    }

    /// Permutes columns greedily (left to right, first column extending the
    /// rank) so the leading square block becomes invertible. Returns the
    /// permuted matrix and the permutation `perm`, where `perm[new] = old`.
    pub fn make_principal(&self) -> Result<(RatMatrix, Vec<usize>), LinAlgError> {
        let s = self.rows;
        let mut chosen: Vec<usize> = Vec::with_capacity(s);
        for j in 0..self.cols {
            if chosen.len() == s {
                break;
            }
            let mut cand = chosen.clone();
            cand.push(j);
            if self.select_columns(&cand).rank() == cand.len() {
                chosen = cand;
            }
        }
        if chosen.len() < s {
            return Err(LinAlgError::RankDeficient);
        }
        let mut perm = chosen.clone();
        perm.extend((0..self.cols).filter(|j| !chosen.contains(j)));
        Ok((self.select_columns(&perm), perm))
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RatMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "( {} )", row.join("  "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hhk_stoichiometric() -> RatMatrix {
        RatMatrix::from_i64(&[
            &[-1, 0, 0, 1, 0, 0],
            &[1, -1, 0, 0, 1, 0],
            &[0, 1, -1, -1, 0, 0],
            &[0, 0, 1, 0, -1, 0],
            &[0, 0, 0, -1, -1, 1],
            &[0, 0, 0, 1, 1, -1],
        ])
    }

    fn hhk_c() -> RatMatrix {
        RatMatrix::from_i64(&[
            &[1, 0, 0, 0, 1, -1],
            &[0, 1, 0, 0, 0, -1],
            &[0, 0, 1, 0, -1, 0],
            &[0, 0, 0, 1, 1, -1],
        ])
    }

    #[test]
    fn rref_identity_is_identity() {
        let i3 = RatMatrix::identity(3);
        let (r, p) = i3.rref();
        assert_eq!(r, i3);
        assert_eq!(p, vec![0, 1, 2]);
    }

    #[test]
    fn rref_of_hhk_stoichiometric_matrix() {
        let n = hhk_stoichiometric();
        let (r, pivots) = n.rref();
        assert_eq!(pivots, vec![0, 1, 2, 3]);
        let c = hhk_c();
        for i in 0..4 {
            assert_eq!(r.row(i), c.row(i));
        }
        assert!(r.row_is_zero(4) && r.row_is_zero(5));
    }

    // Independent fraction-free elimination oracle: returns the rank and a
    // row-echelon (not reduced) form by integer-style cross-multiplication.
    fn fraction_free_rank(m: &RatMatrix) -> usize {
        let mut a: Vec<Vec<Rat>> = (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
        let (rows, cols) = (m.rows(), m.cols());
        let mut rank = 0;
        for j in 0..cols {
            if rank == rows {
                break;
            }
            let Some(p) = (rank..rows).find(|&i| !a[i][j].is_zero()) else {
                continue;
            };
            a.swap(rank, p);
            for i in rank + 1..rows {
                if !a[i][j].is_zero() {
                    let num = a[i][j].clone();
                    let den = a[rank][j].clone();
                    for jj in j..cols {
                        let v = &a[i][jj] * &den - &a[rank][jj] * &num;
                        a[i][jj] = v;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn rref_agrees_with_fraction_free_oracle() {
        // fixed small pseudo-random rational matrices
        let cases = [
            RatMatrix::from_rows(vec![
                vec![rat(1, 2), rat_int(3), rat_int(0), rat(-2, 5)],
                vec![rat_int(1), rat_int(6), rat_int(0), rat(-4, 5)],
                vec![rat_int(2), rat_int(0), rat_int(1), rat_int(7)],
            ]),
            RatMatrix::from_i64(&[&[0, 0, 0, 0], &[1, 2, 3, 4], &[2, 4, 6, 8]]),
        ];
        for m in cases {
            let (r, pivots) = m.rref();
            assert_eq!(pivots.len(), fraction_free_rank(&m));
            // row space preserved: stacking changes nothing
            assert_eq!(m.vstack(&r).rank(), pivots.len());
            // idempotent
            let (rr, pp) = r.rref();
            assert_eq!(rr, r);
            assert_eq!(pp, pivots);
        }
    }

    #[test]
    fn kernel_basis_principal_hhk() {
        let c = hhk_c();
        let phat = c.kernel_basis_principal().unwrap();
        let expect = RatMatrix::from_i64(&[
            &[-1, 1],
            &[0, 1],
            &[1, 0],
            &[-1, 1],
            &[1, 0],
            &[0, 1],
        ]);
        assert_eq!(phat, expect);
        assert!(c.mul(&phat).is_zero());
    }

    #[test]
    fn kernel_basis_principal_identity_is_trivial() {
        let c = RatMatrix::identity(3);
        let phat = c.kernel_basis_principal().unwrap();
        assert_eq!(phat.cols(), 0);
        assert_eq!(phat.rows(), 3);
    }

    #[test]
    fn kernel_basis_principal_random_multiply_back() {
        let c = RatMatrix::from_rows(vec![
            vec![rat_int(2), rat_int(0), rat(1, 3), rat_int(-1)],
            vec![rat_int(0), rat(5, 2), rat_int(1), rat_int(4)],
        ]);
        let phat = c.kernel_basis_principal().unwrap();
        assert!(c.mul(&phat).is_zero());
        // lower block is the identity
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { Rat::one() } else { Rat::zero() };
                assert_eq!(*phat.at(2 + i, j), expect);
            }
        }
    }

    #[test]
    fn kernel_basis_principal_errors() {
        let singular_lead = RatMatrix::from_i64(&[&[0, 1, 1], &[0, 0, 1]]);
        assert_eq!(
            singular_lead.kernel_basis_principal(),
            Err(LinAlgError::NotPrincipal)
        );
        let rank_def = RatMatrix::from_i64(&[&[1, 1, 0], &[2, 2, 0]]);
        assert_eq!(
            rank_def.kernel_basis_principal(),
            Err(LinAlgError::RankDeficient)
        );
    }

    #[test]
    fn left_kernel_hhk_matches_printed_row_space() {
        let n = hhk_stoichiometric();
        let l = n.left_kernel();
        assert_eq!(l.rows(), 2);
        assert!(l.mul(&n).is_zero());
        let printed = RatMatrix::from_i64(&[&[1, 1, 1, 1, 0, 0], &[0, 0, 0, 0, 1, 1]]);
        // same row space: stacking does not increase rank
        assert_eq!(l.vstack(&printed).rank(), 2);
    }

    #[test]
    fn left_kernel_of_invertible_is_empty() {
        let m = RatMatrix::identity(4);
        let l = m.left_kernel();
        assert_eq!(l.rows(), 0);
    }

    #[test]
    fn left_kernel_rank_deficient() {
        let m = RatMatrix::from_i64(&[&[1, 2], &[2, 4], &[0, 1]]);
        let l = m.left_kernel();
        assert_eq!(l.rows(), 3 - m.rank());
        assert!(l.mul(&m).is_zero());
        assert_eq!(l.rank(), l.rows());
    }

    #[test]
    fn make_principal_identity_permutation() {
        let c = hhk_c();
        let (cp, perm) = c.make_principal().unwrap();
        assert_eq!(cp, c);
        assert_eq!(perm, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn make_principal_rank_deficient() {
        let c = RatMatrix::from_i64(&[&[0, 1], &[0, 0]]);
        assert_eq!(c.make_principal().unwrap_err(), LinAlgError::RankDeficient);
    }

    #[test]
    fn make_principal_fixes_singular_lead() {
        let c = RatMatrix::from_i64(&[&[0, 1, 1], &[0, 2, 1]]);
        let (cp, perm) = c.make_principal().unwrap();
        // leading 2x2 block must be invertible
        let lead = cp.select_columns(&[0, 1]);
        assert_eq!(lead.rank(), 2);
        assert_eq!(perm, vec![1, 2, 0]);
    }
}
