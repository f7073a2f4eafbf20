//! Prime-field arithmetic and dense matrices over GF(p).
//!
//! Elements are stored as `u64` residues in `[0, p)`. The modulus is capped
//! at [`MAX_MODULUS`] so that the product of two residues always fits in a
//! `u64` before reduction.
//!
//! Row reduction is deterministic: columns are scanned left to right and the
//! pivot is the first row (lowest index) at or below the current pivot row
//! holding a nonzero entry in that column.

use std::fmt;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest admissible modulus: `(p - 1)^2` must fit in a `u64`.
pub const MAX_MODULUS: u64 = u32::MAX as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    modulus: u64,
}

impl PrimeField {
    pub fn new(modulus: u64) -> Result<Self> {
        if !(2..=MAX_MODULUS).contains(&modulus) || !is_prime(modulus) {
            return Err(Error::InvalidModulus(modulus));
        }
        Ok(Self { modulus })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        x % self.modulus
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.modulus {
            s - self.modulus
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.modulus - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.modulus - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        (a * b) % self.modulus
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.modulus;
        base %= self.modulus;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: u64) -> Option<u64> {
        let a = a % self.modulus;
        if a == 0 {
            None
        } else {
            Some(self.pow(a, self.modulus - 2))
        }
    }

    /// Inner product of two equal-length slices.
    pub fn dot(&self, a: &[u64], b: &[u64]) -> u64 {
        debug_assert_eq!(a.len(), b.len());
        a.iter()
            .zip(b)
            .fold(0, |acc, (&x, &y)| self.add(acc, self.mul(x, y)))
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.modulus)
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Dense row-major matrix over a prime field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

/// Output of [`FieldMatrix::rref_with_transform`].
#[derive(Debug, Clone)]
pub struct Rref {
    /// Reduced row-echelon form of the input.
    pub reduced: FieldMatrix,
    /// Invertible row-operation matrix with `transform * input == reduced`.
    pub transform: FieldMatrix,
    pub rank: usize,
    /// Pivot column of each of the first `rank` rows.
    pub pivots: Vec<usize>,
}

impl FieldMatrix {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        Self {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Builds a matrix from row-major entries, reducing each one mod p.
    pub fn from_vec(field: PrimeField, rows: usize, cols: usize, data: Vec<u64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        let data = data.into_iter().map(|x| field.reduce(x)).collect();
        Ok(Self {
            field,
            rows,
            cols,
            data,
        })
    }

    /// Builds a matrix from nested rows. An empty outer vector gives a
    /// `0 x cols` matrix only through [`FieldMatrix::zeros`]; here it yields `0 x 0`.
    pub fn from_rows(field: PrimeField, rows: &[Vec<u64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::from_vec(field, rows.len(), cols, data)
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = self.field.reduce(v);
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    fn check_field(&self, other: &Self) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch {
                left: self.field.modulus(),
                right: other.field.modulus(),
            });
        }
        Ok(())
    }

    /// Exact product `self * other`.
    pub fn mat_mul(&self, other: &Self) -> Result<Self> {
        self.check_field(other)?;
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        let mut out = Self::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d = f.add(*d, f.mul(a, b));
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[u64]) -> Result<Vec<u64>> {
        if v.len() != self.cols {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by a vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|r| self.field.dot(self.row(r), v)).collect())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.get(r, c);
            }
        }
        out
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        self.check_field(other)?;
        if self.cols != other.cols {
            return Err(Error::Shape(format!(
                "cannot stack {} columns on {} columns",
                self.cols, other.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            field: self.field,
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    /// Places `self` and `other` side by side.
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        self.check_field(other)?;
        if self.rows != other.rows {
            return Err(Error::Shape(format!(
                "cannot join {} rows with {} rows",
                self.rows, other.rows
            )));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        Ok(Self {
            field: self.field,
            rows: self.rows,
            cols,
            data,
        })
    }

    /// Submatrix with the given row range and column range.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        assert!(rows.end <= self.rows && cols.end <= self.cols, "block out of bounds");
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for r in rows.clone() {
            data.extend_from_slice(&self.row(r)[cols.clone()]);
        }
        Self {
            field: self.field,
            rows: rows.len(),
            cols: cols.len(),
            data,
        }
    }

    /// Gauss-Jordan elimination recording the accumulated row operations.
    pub fn rref_with_transform(&self) -> Rref {
        let mut reduced = self.clone();
        let mut transform = Self::identity(self.field, self.rows);
        let pivots = reduced.eliminate(Some(&mut transform));
        Rref {
            reduced,
            transform,
            rank: pivots.len(),
            pivots,
        }
    }

    /// Gauss-Jordan elimination in place, mirroring row operations onto `transform`.
    fn eliminate(&mut self, mut transform: Option<&mut Self>) -> Vec<usize> {
        let f = self.field;
        let mut pivots = Vec::new();
        let mut pivot_row = 0;

        for col in 0..self.cols {
            if pivot_row == self.rows {
                break;
            }
            let Some(found) = (pivot_row..self.rows).find(|&r| self.get(r, col) != 0) else {
                continue;
            };
            self.swap_rows(found, pivot_row);
            let inv = f.inv(self.get(pivot_row, col)).expect("pivot is nonzero");
            self.scale_row(pivot_row, inv);
            if let Some(t) = transform.as_deref_mut() {
                t.swap_rows(found, pivot_row);
                t.scale_row(pivot_row, inv);
            }

            for r in 0..self.rows {
                if r == pivot_row {
                    continue;
                }
                let factor = self.get(r, col);
                if factor != 0 {
                    let factor = f.neg(factor);
                    self.add_row_multiple(r, pivot_row, factor);
                    if let Some(t) = transform.as_deref_mut() {
                        t.add_row_multiple(r, pivot_row, factor);
                    }
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().eliminate(None).len()
    }

    pub fn invert(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::Shape(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let rref = self.rref_with_transform();
        if rref.rank != self.rows {
            return Err(Error::Singular);
        }
        Ok(rref.transform)
    }

    /// True iff every row of `probe` lies in the row space of `self`.
    pub fn rowspace_contains(&self, probe: &Self) -> Result<bool> {
        self.check_field(probe)?;
        if self.cols != probe.cols {
            return Err(Error::Shape(format!(
                "row space of {} columns probed with {} columns",
                self.cols, probe.cols
            )));
        }
        let f = self.field;
        let mut basis = self.clone();
        let pivots = basis.eliminate(None);
        let mut row = vec![0; self.cols];
        for r in 0..probe.rows {
            row.copy_from_slice(probe.row(r));
            for (i, &col) in pivots.iter().enumerate() {
                let factor = row[col];
                if factor != 0 {
                    let factor = f.neg(factor);
                    for (x, &b) in row.iter_mut().zip(basis.row(i)) {
                        if b != 0 {
                            *x = f.add(*x, f.mul(factor, b));
                        }
                    }
                }
            }
            if row.iter().any(|&x| x != 0) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let cols = self.cols;
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(hi * cols);
        head[lo * cols..(lo + 1) * cols].swap_with_slice(&mut tail[..cols]);
    }

    fn scale_row(&mut self, r: usize, factor: u64) {
        let f = self.field;
        for x in &mut self.data[r * self.cols..(r + 1) * self.cols] {
            *x = f.mul(*x, factor);
        }
    }

    /// row[dst] += factor * row[src]
    fn add_row_multiple(&mut self, dst: usize, src: usize, factor: u64) {
        let f = self.field;
        let cols = self.cols;
        for c in 0..cols {
            let s = self.data[src * cols + c];
            if s != 0 {
                let d = &mut self.data[dst * cols + c];
                *d = f.add(*d, f.mul(factor, s));
            }
        }
    }
}

impl Serialize for FieldMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.rows))?;
        for r in 0..self.rows {
            seq.serialize_element(self.row(r))?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gf(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn random(field: PrimeField, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> FieldMatrix {
        let data = (0..rows * cols)
            .map(|_| rng.gen_range(0..field.modulus()))
            .collect();
        FieldMatrix::from_vec(field, rows, cols, data).unwrap()
    }

    fn is_rref(m: &FieldMatrix) -> bool {
        let mut last_pivot: Option<usize> = None;
        let mut seen_zero_row = false;
        for r in 0..m.rows() {
            let lead = m.row(r).iter().position(|&x| x != 0);
            match lead {
                None => seen_zero_row = true,
                Some(c) => {
                    if seen_zero_row || last_pivot.is_some_and(|p| c <= p) || m.get(r, c) != 1 {
                        return false;
                    }
                    if (0..m.rows()).any(|o| o != r && m.get(o, c) != 0) {
                        return false;
                    }
                    last_pivot = Some(c);
                }
            }
        }
        true
    }

    /// Determinant by cofactor expansion; only used on tiny minors.
    fn det(f: PrimeField, m: &[Vec<u64>]) -> u64 {
        let n = m.len();
        if n == 1 {
            return m[0][0];
        }
        let mut acc = 0;
        for j in 0..n {
            let minor: Vec<Vec<u64>> = m[1..]
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != j)
                        .map(|(_, &x)| x)
                        .collect()
                })
                .collect();
            let term = f.mul(m[0][j], det(f, &minor));
            acc = if j % 2 == 0 { f.add(acc, term) } else { f.sub(acc, term) };
        }
        acc
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        if n < k {
            return vec![];
        }
        let mut out = subsets(n - 1, k);
        for mut s in subsets(n - 1, k - 1) {
            s.push(n - 1);
            out.push(s);
        }
        out
    }

    /// Largest k such that some k x k minor is nonzero.
    fn brute_rank(m: &FieldMatrix) -> usize {
        let f = m.field();
        for k in (1..=m.rows().min(m.cols())).rev() {
            for rs in subsets(m.rows(), k) {
                for cs in subsets(m.cols(), k) {
                    let minor: Vec<Vec<u64>> = rs
                        .iter()
                        .map(|&r| cs.iter().map(|&c| m.get(r, c)).collect())
                        .collect();
                    if det(f, &minor) != 0 {
                        return k;
                    }
                }
            }
        }
        0
    }

    #[test]
    fn rejects_bad_moduli() {
        assert!(PrimeField::new(0).is_err());
        assert!(PrimeField::new(1).is_err());
        assert!(PrimeField::new(9).is_err());
        assert!(PrimeField::new(MAX_MODULUS + 2).is_err());
        assert!(PrimeField::new(4_294_967_291).is_ok());
    }

    #[test]
    fn large_modulus_products_do_not_overflow() {
        let f = gf(4_294_967_291);
        let a = f.modulus() - 1;
        assert_eq!(f.mul(a, a), 1);
        assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
    }

    #[test]
    fn identity_times_b() {
        let f = gf(7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random(f, 3, 4, &mut rng);
        assert_eq!(FieldMatrix::identity(f, 3).mat_mul(&b).unwrap(), b);
    }

    #[test]
    fn gf2_product() {
        let f = gf(2);
        let a = FieldMatrix::from_rows(f, &[vec![1, 1], vec![0, 1]]).unwrap();
        let b = FieldMatrix::from_rows(f, &[vec![1], vec![1]]).unwrap();
        let c = a.mat_mul(&b).unwrap();
        assert_eq!(c.to_rows(), vec![vec![0], vec![1]]);
    }

    #[test]
    fn product_matches_triple_loop() {
        let f = gf(7);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random(f, 4, 5, &mut rng);
        let b = random(f, 5, 2, &mut rng);
        let c = a.mat_mul(&b).unwrap();
        for i in 0..4 {
            for j in 0..2 {
                let naive: u64 = (0..5).map(|k| a.get(i, k) * b.get(k, j)).sum::<u64>() % 7;
                assert_eq!(c.get(i, j), naive);
            }
        }
    }

    #[test]
    fn product_errors() {
        let a = FieldMatrix::zeros(gf(5), 2, 3);
        assert!(matches!(a.mat_mul(&FieldMatrix::zeros(gf(5), 2, 3)), Err(Error::Shape(_))));
        assert!(matches!(
            a.mat_mul(&FieldMatrix::zeros(gf(7), 3, 1)),
            Err(Error::FieldMismatch { .. })
        ));
    }

    #[test]
    fn rref_of_zero_and_identity() {
        let f = gf(5);
        let z = FieldMatrix::zeros(f, 2, 3);
        let r = z.rref_with_transform();
        assert_eq!(r.rank, 0);
        assert!(r.reduced.is_zero());
        assert_eq!(r.transform, FieldMatrix::identity(f, 2));

        let i3 = FieldMatrix::identity(f, 3);
        let r = i3.rref_with_transform();
        assert_eq!(r.rank, 3);
        assert_eq!(r.reduced, i3);
        assert_eq!(r.transform, i3);
    }

    #[test]
    fn rref_tall_matches_minor_oracle() {
        let f = gf(5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..40 {
            let mut a = random(f, 6, 3, &mut rng);
            // force some rank deficiency now and then
            if trial % 3 == 0 {
                for r in 0..6 {
                    let v = f.add(a.get(r, 0), a.get(r, 1));
                    a.set(r, 2, v);
                }
            }
            let r = a.rref_with_transform();
            assert_eq!(r.transform.mat_mul(&a).unwrap(), r.reduced);
            assert!(is_rref(&r.reduced));
            assert_eq!(r.rank, brute_rank(&a));
            assert!(r.transform.invert().is_ok());
        }
    }

    #[test]
    fn rref_pivots_first_nonzero_row() {
        // column 0 is nonzero in rows 1 and 2; row 1 must become the pivot
        let f = gf(3);
        let a = FieldMatrix::from_rows(f, &[vec![0, 1], vec![2, 0], vec![1, 1]]).unwrap();
        let r = a.rref_with_transform();
        // the first row of T picks out row 1 scaled by 2^{-1} = 2
        assert_eq!(r.transform.row(0), &[0, 2, 0]);
    }

    #[test]
    fn invert_small_cases() {
        let f = gf(3);
        let a = FieldMatrix::from_rows(f, &[vec![2]]).unwrap();
        assert_eq!(a.invert().unwrap().to_rows(), vec![vec![2]]);
        let i4 = FieldMatrix::identity(gf(11), 4);
        assert_eq!(i4.invert().unwrap(), i4);
        let s = FieldMatrix::from_rows(f, &[vec![1, 2], vec![2, 1]]).unwrap();
        assert_eq!(s.invert(), Err(Error::Singular));
        assert!(matches!(FieldMatrix::zeros(f, 2, 3).invert(), Err(Error::Shape(_))));
    }

    #[test]
    fn invert_random_invertible() {
        let f = gf(7);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut done = 0;
        while done < 10 {
            let a = random(f, 5, 5, &mut rng);
            if let Ok(inv) = a.invert() {
                assert_eq!(a.mat_mul(&inv).unwrap(), FieldMatrix::identity(f, 5));
                done += 1;
            }
        }
    }

    #[test]
    fn rowspace_basic() {
        let f = gf(2);
        let big = FieldMatrix::from_rows(f, &[vec![1, 0, 0]]).unwrap();
        let zero = FieldMatrix::zeros(f, 1, 3);
        assert!(big.rowspace_contains(&zero).unwrap());
        let e2 = FieldMatrix::from_rows(f, &[vec![0, 1, 0]]).unwrap();
        assert!(!big.rowspace_contains(&e2).unwrap());
        let id = FieldMatrix::identity(f, 3);
        assert!(id.rowspace_contains(&e2).unwrap());
        assert!(matches!(
            big.rowspace_contains(&FieldMatrix::zeros(f, 1, 2)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn block_and_stack() {
        let f = gf(7);
        let a = FieldMatrix::from_rows(f, &[vec![1, 2, 3], vec![4, 5, 6]]).unwrap();
        assert_eq!(a.block(0..2, 1..3).to_rows(), vec![vec![2, 3], vec![5, 6]]);
        let h = a.block(0..2, 0..1).hstack(&a.block(0..2, 1..3)).unwrap();
        assert_eq!(h, a);
        let v = a.block(0..1, 0..3).vstack(&a.block(1..2, 0..3)).unwrap();
        assert_eq!(v, a);
        assert_eq!(a.transpose().transpose(), a);
        assert_eq!(serde_json::to_string(&a).unwrap(), "[[1,2,3],[4,5,6]]");
    }
}
