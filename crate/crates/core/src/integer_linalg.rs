//! Exact integer matrices, Smith normal form and p-primary cokernel data.
//!
//! Everything here is arbitrary precision. Entries produced by evaluating
//! `ω_n` on companion matrices get large, so no reduction modulo anything is
//! ever applied inside the elimination.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::finite_level::FiniteLevelInvariants;

/// Dense row-major integer matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Parse(format!(
                "matrix of shape {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn diagonal<I: IntoIterator<Item = BigInt>>(diag: I) -> Self {
        let diag: Vec<BigInt> = diag.into_iter().collect();
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.into_iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from small integer rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let entries = rows.iter().flatten().map(|&x| BigInt::from(x)).collect();
        Self { rows: r, cols: c, entries }
    }

    /// Builds a matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(rows: usize, columns: &[Vec<BigInt>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "column length mismatch");
            for (i, x) in col.iter().enumerate() {
                m[(i, j)] = x.clone();
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

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hconcat(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.rows, other.rows, "row count mismatch in hconcat");
        let mut out = IntMatrix::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)].clone();
            }
            for j in 0..other.cols {
                out[(i, self.cols + j)] = other[(i, j)].clone();
            }
        }
        out
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[(k, k)].is_zero() {
                match (k + 1..n).find(|&i| !a[(i, k)].is_zero()) {
                    Some(i) => {
                        a.swap_rows(k, i);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)];
                    a[(i, j)] = v / &prev;
                }
            }
            prev = a[(k, k)].clone();
        }
        sign * a[(n - 1, n - 1)].clone()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.entries.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += c * row[src]
    fn add_row_multiple(&mut self, dst: usize, src: usize, c: &BigInt) {
        for j in 0..self.cols {
            let v = &self.entries[src * self.cols + j];
            if !v.is_zero() {
                let t = v * c;
                self.entries[dst * self.cols + j] += t;
            }
        }
    }

    /// col[dst] += c * col[src]
    fn add_col_multiple(&mut self, dst: usize, src: usize, c: &BigInt) {
        for i in 0..self.rows {
            let v = &self.entries[i * self.cols + src];
            if !v.is_zero() {
                let t = v * c;
                self.entries[i * self.cols + dst] += t;
            }
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = std::mem::take(&mut self.entries[r * self.cols + j]);
            self.entries[r * self.cols + j] = -v;
        }
    }

    fn negate_col(&mut self, c: usize) {
        for i in 0..self.rows {
            let v = std::mem::take(&mut self.entries[i * self.cols + c]);
            self.entries[i * self.cols + c] = -v;
        }
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;

    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.entries[i * self.cols + j]
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self[(i, j)].to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Nonzero Smith invariants in divisibility order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnfResult {
    pub divisors: Vec<BigInt>,
    pub rank: usize,
}

/// Smith form together with unimodular transforms `u · m · v = diag`.
///
/// `u_inv` is kept alongside `u` because the saturation of the column space
/// of `m` is spanned by the first `rank` columns of `u_inv`.
#[derive(Clone, Debug)]
pub struct SnfDecomposition {
    pub divisors: Vec<BigInt>,
    pub rank: usize,
    pub u: IntMatrix,
    pub u_inv: IntMatrix,
    pub v: IntMatrix,
}

struct Transforms {
    u: IntMatrix,
    u_inv: IntMatrix,
    v: IntMatrix,
}

struct Reducer {
    a: IntMatrix,
    tr: Option<Transforms>,
}

impl Reducer {
    fn swap_rows(&mut self, i: usize, j: usize) {
        self.a.swap_rows(i, j);
        if let Some(t) = &mut self.tr {
            t.u.swap_rows(i, j);
            t.u_inv.swap_cols(i, j);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        self.a.swap_cols(i, j);
        if let Some(t) = &mut self.tr {
            t.v.swap_cols(i, j);
        }
    }

    /// row[dst] += c * row[src]; the inverse transform does col[src] -= c * col[dst].
    fn add_row(&mut self, dst: usize, src: usize, c: &BigInt) {
        self.a.add_row_multiple(dst, src, c);
        if let Some(t) = &mut self.tr {
            t.u.add_row_multiple(dst, src, c);
            t.u_inv.add_col_multiple(src, dst, &-c);
        }
    }

    fn add_col(&mut self, dst: usize, src: usize, c: &BigInt) {
        self.a.add_col_multiple(dst, src, c);
        if let Some(t) = &mut self.tr {
            t.v.add_col_multiple(dst, src, c);
        }
    }

    fn negate_row(&mut self, r: usize) {
        self.a.negate_row(r);
        if let Some(t) = &mut self.tr {
            t.u.negate_row(r);
            t.u_inv.negate_col(r);
        }
    }

    /// Position of the nonzero entry of least absolute value in the trailing block.
    fn smallest_in_block(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), &BigInt)> = None;
        for i in t..self.a.rows {
            for j in t..self.a.cols {
                let x = &self.a[(i, j)];
                if x.is_zero() {
                    continue;
                }
                if best.is_none_or(|(_, b)| x.magnitude() < b.magnitude()) {
                    best = Some(((i, j), x));
                }
            }
        }
        best.map(|(pos, _)| pos)
    }

    fn run(&mut self) -> Vec<BigInt> {
        let (rows, cols) = (self.a.rows, self.a.cols);
        let mut divisors = Vec::new();
        let mut t = 0;
        while t < rows.min(cols) {
            let Some((pi, pj)) = self.smallest_in_block(t) else { break };
            self.swap_rows(t, pi);
            self.swap_cols(t, pj);
            loop {
                let pivot = self.a[(t, t)].clone();
                let mut clean = true;
                for i in t + 1..rows {
                    if self.a[(i, t)].is_zero() {
                        continue;
                    }
                    let q = &self.a[(i, t)] / &pivot;
                    if !q.is_zero() {
                        self.add_row(i, t, &-q);
                    }
                    if !self.a[(i, t)].is_zero() {
                        clean = false;
                    }
                }
                for j in t + 1..cols {
                    if self.a[(t, j)].is_zero() {
                        continue;
                    }
                    let q = &self.a[(t, j)] / &pivot;
                    if !q.is_zero() {
                        self.add_col(j, t, &-q);
                    }
                    if !self.a[(t, j)].is_zero() {
                        clean = false;
                    }
                }
                if !clean {
                    // Move the smallest leftover in the pivot row/column onto the diagonal.
                    let mut best = (t, t);
                    let mut best_mag = pivot.magnitude().clone();
                    for i in t + 1..rows {
                        let x = &self.a[(i, t)];
                        if !x.is_zero() && x.magnitude() < &best_mag {
                            best = (i, t);
                            best_mag = x.magnitude().clone();
                        }
                    }
                    for j in t + 1..cols {
                        let x = &self.a[(t, j)];
                        if !x.is_zero() && x.magnitude() < &best_mag {
                            best = (t, j);
                            best_mag = x.magnitude().clone();
                        }
                    }
                    self.swap_rows(t, best.0);
                    self.swap_cols(t, best.1);
                    continue;
                }
                // Enforce the divisibility chain against the trailing block.
                let offender = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !self.a[(i, j)].is_multiple_of(&pivot)));
                match offender {
                    Some(i) => self.add_row(t, i, &BigInt::one()),
                    None => break,
                }
            }
            if self.a[(t, t)].is_negative() {
                self.negate_row(t);
            }
            divisors.push(self.a[(t, t)].clone());
            t += 1;
        }
        divisors
    }
}

/// Smith normal form over the integers. Only the nonzero invariants are kept.
pub fn smith_normal_form(m: &IntMatrix) -> SnfResult {
    let mut r = Reducer { a: m.clone(), tr: None };
    let divisors = r.run();
    SnfResult { rank: divisors.len(), divisors }
}

/// Smith normal form with the unimodular transforms that realize it.
pub fn smith_decomposition(m: &IntMatrix) -> SnfDecomposition {
    let tr = Transforms {
        u: IntMatrix::identity(m.rows),
        u_inv: IntMatrix::identity(m.rows),
        v: IntMatrix::identity(m.cols),
    };
    let mut r = Reducer { a: m.clone(), tr: Some(tr) };
    let divisors = r.run();
    let tr = r.tr.expect("transforms requested");
    SnfDecomposition { rank: divisors.len(), divisors, u: tr.u, u_inv: tr.u_inv, v: tr.v }
}

/// p-adic valuation of an integer; zero has infinite valuation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(u32),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<u32> {
        match self {
            Valuation::Finite(k) => Some(k),
            Valuation::Infinite => None,
        }
    }
}

pub fn p_valuation(x: &BigInt, p: u64) -> Valuation {
    if x.is_zero() {
        return Valuation::Infinite;
    }
    let p = BigInt::from(p);
    let mut x = x.clone();
    let mut k = 0;
    loop {
        let (q, r) = x.div_rem(&p);
        if !r.is_zero() {
            return Valuation::Finite(k);
        }
        x = q;
        k += 1;
    }
}

/// Free rank and p-primary invariants of the group `Z^cols` modulo the row span of `m`.
pub fn cokernel_invariants(m: &IntMatrix, p: u64) -> FiniteLevelInvariants {
    let snf = smith_normal_form(m);
    let torsion = snf.divisors.iter().filter_map(|d| p_valuation(d, p).finite()).filter(|&k| k > 0).collect();
    // Rows are relations in Z^cols.
    FiniteLevelInvariants::new(m.cols() - snf.rank, torsion)
}
