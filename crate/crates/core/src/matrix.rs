//! Dense matrices over the scalar field, plus the two group-side products
//! the aggregation scheme needs: a field matrix applied to a vector of group
//! elements, and a pairing of one key row against a ciphertext half.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::suite::{FieldElem, GroupElem, PairingSuite};

/// Give up sampling an invertible matrix after this many rejections; the
/// per-draw failure probability is about n/q, so hitting this means the RNG
/// is broken.
const MAX_SAMPLE_ATTEMPTS: usize = 64;

/// Row-major dense matrix over Z_q.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldMatrix<S: FieldElem> {
    rows: usize,
    cols: usize,
    entries: Vec<S>,
}

impl<S: FieldElem> std::fmt::Debug for FieldMatrix<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FieldMatrix({}x{})", self.rows, self.cols)
    }
}

impl<S: FieldElem> FieldMatrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FieldMatrix {
            rows,
            cols,
            entries: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<S>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix wants {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(FieldMatrix { rows, cols, entries })
    }

    /// Convenience for tests and small fixtures: entries given as u64.
    pub fn from_u64(rows: usize, cols: usize, entries: &[u64]) -> Result<Self> {
        Self::from_entries(rows, cols, entries.iter().map(|&v| S::from_u64(v)).collect())
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

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    /// Uniformly random matrix (not necessarily invertible).
    pub fn random<R: RngCore>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let entries = (0..rows * cols).map(|_| S::sample(rng)).collect();
        FieldMatrix { rows, cols, entries }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.shape_check(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| *a + *b)
            .collect();
        Ok(FieldMatrix { rows: self.rows, cols: self.cols, entries })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.shape_check(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| *a - *b)
            .collect();
        Ok(FieldMatrix { rows: self.rows, cols: self.cols, entries })
    }

    fn shape_check(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let t = a * other[(k, j)];
                    out[(i, j)] += t;
                }
            }
        }
        Ok(out)
    }

    /// Matrix times a field column vector.
    pub fn mul_vec(&self, v: &[S]) -> Result<Vec<S>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix applied to length-{} vector",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = S::zero();
                for (j, x) in v.iter().enumerate() {
                    acc += self[(i, j)] * *x;
                }
                acc
            })
            .collect())
    }

    /// Gauss-Jordan inverse; `SingularMatrix` when det = 0 mod q.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "inverse of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            // Pivot search: any nonzero entry works, field arithmetic is exact.
            let pivot_row = (col..n)
                .find(|&r| !a[(r, col)].is_zero())
                .ok_or(Error::SingularMatrix)?;
            if pivot_row != col {
                a.swap_rows(pivot_row, col);
                inv.swap_rows(pivot_row, col);
            }
            let pivot_inv = a[(col, col)].inverse().ok_or(Error::SingularMatrix)?;
            a.scale_row(col, pivot_inv);
            inv.scale_row(col, pivot_inv);
            for r in 0..n {
                if r != col && !a[(r, col)].is_zero() {
                    let factor = a[(r, col)];
                    a.sub_scaled_row(r, col, factor);
                    inv.sub_scaled_row(r, col, factor);
                }
            }
        }
        Ok(inv)
    }

    /// Determinant by elimination. Used by invertibility checks and tests.
    pub fn determinant(&self) -> Result<S> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "determinant of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut det = S::one();
        for col in 0..n {
            let Some(pivot_row) = (col..n).find(|&r| !a[(r, col)].is_zero()) else {
                return Ok(S::zero());
            };
            if pivot_row != col {
                a.swap_rows(pivot_row, col);
                det = -det;
            }
            let pivot = a[(col, col)];
            det *= pivot;
            let pivot_inv = pivot.inverse().expect("nonzero pivot");
            for r in (col + 1)..n {
                if !a[(r, col)].is_zero() {
                    let factor = a[(r, col)] * pivot_inv;
                    a.sub_scaled_row(r, col, factor);
                }
            }
        }
        Ok(det)
    }

    pub fn is_invertible(&self) -> bool {
        matches!(self.determinant(), Ok(d) if !d.is_zero())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn scale_row(&mut self, r: usize, factor: S) {
        for j in 0..self.cols {
            self[(r, j)] *= factor;
        }
    }

    /// row[r] -= factor * row[src]
    fn sub_scaled_row(&mut self, r: usize, src: usize, factor: S) {
        for j in 0..self.cols {
            let t = factor * self[(src, j)];
            self[(r, j)] -= t;
        }
    }

    /// Serialize as a (rows, cols, q-identifier) header followed by the
    /// row-major little-endian entry encodings.
    pub fn to_bytes(&self, q_id: &str) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.cols as u32).to_le_bytes());
        out.extend_from_slice(&(q_id.len() as u32).to_le_bytes());
        out.extend_from_slice(q_id.as_bytes());
        for e in &self.entries {
            out.extend_from_slice(&e.to_bytes());
        }
        out
    }

    /// Inverse of [`Self::to_bytes`]; checks the q-identifier and consumed
    /// length. Returns the matrix and the number of bytes read.
    pub fn from_bytes(bytes: &[u8], expected_q_id: &str) -> Result<(Self, usize)> {
        let mut pos = 0usize;
        let rows = read_u32(bytes, &mut pos)? as usize;
        let cols = read_u32(bytes, &mut pos)? as usize;
        let id_len = read_u32(bytes, &mut pos)? as usize;
        let id_bytes = slice(bytes, &mut pos, id_len)?;
        let q_id = std::str::from_utf8(id_bytes)
            .map_err(|_| Error::Decode("matrix q-identifier is not utf-8".into()))?;
        if q_id != expected_q_id {
            return Err(Error::Decode(format!(
                "matrix q-identifier {q_id:?} does not match suite {expected_q_id:?}"
            )));
        }
        let mut entries = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let raw = slice(bytes, &mut pos, S::ENCODED_LEN)?;
            entries.push(S::from_bytes(raw)?);
        }
        Ok((Self::from_entries(rows, cols, entries)?, pos))
    }
}

pub(crate) fn read_u32(bytes: &[u8], pos: &mut usize) -> Result<u32> {
    let raw = slice(bytes, pos, 4)?;
    Ok(u32::from_le_bytes(raw.try_into().unwrap()))
}

pub(crate) fn read_u64(bytes: &[u8], pos: &mut usize) -> Result<u64> {
    let raw = slice(bytes, pos, 8)?;
    Ok(u64::from_le_bytes(raw.try_into().unwrap()))
}

pub(crate) fn slice<'a>(bytes: &'a [u8], pos: &mut usize, len: usize) -> Result<&'a [u8]> {
    let end = pos
        .checked_add(len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| Error::Decode("truncated input".into()))?;
    let out = &bytes[*pos..end];
    *pos = end;
    Ok(out)
}

impl<S: FieldElem> std::ops::Index<(usize, usize)> for FieldMatrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        debug_assert!(i < self.rows && j < self.cols);
        &self.entries[i * self.cols + j]
    }
}

impl<S: FieldElem> std::ops::IndexMut<(usize, usize)> for FieldMatrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.entries[i * self.cols + j]
    }
}

/// Rejection-sample an n-by-n matrix with nonzero determinant.
pub fn sample_invertible_matrix<S: FieldElem, R: RngCore>(
    n: usize,
    rng: &mut R,
) -> Result<FieldMatrix<S>> {
    if n == 0 {
        return Err(Error::InvalidInput("matrix dimension must be >= 1".into()));
    }
    for _ in 0..MAX_SAMPLE_ATTEMPTS {
        let candidate = FieldMatrix::random(n, n, rng);
        if candidate.is_invertible() {
            return Ok(candidate);
        }
    }
    Err(Error::RandomnessExhausted(MAX_SAMPLE_ATTEMPTS))
}

/// Apply a field matrix to a vector of group elements:
/// `out[j] = sum_i m[j][i] * v[i]` with group scalar multiplication.
///
/// Commutes with encoding: `encode(M x) = mat_vec_group(M, encode(x))`.
pub fn mat_vec_group<G: GroupElem>(
    m: &FieldMatrix<G::Scalar>,
    v: &[G],
) -> Result<Vec<G>> {
    if m.cols() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix applied to length-{} group vector",
            m.rows(),
            m.cols(),
            v.len()
        )));
    }
    (0..m.rows()).map(|j| G::msm(v, m.row(j))).collect()
}

/// Pair one aggregation-key row (encoded into G1 on the fly) against a
/// ciphertext half living in G2:
/// `prod_i e(row[i] * g1, v[i]) = e(g1, g2)^(sum_i row[i] * dlog(v[i]))`.
pub fn pairing_row<P: PairingSuite>(row: &[P::Scalar], v: &[P::G2]) -> Result<P::Gt> {
    if row.len() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "pairing row of length {} against vector of length {}",
            row.len(),
            v.len()
        )));
    }
    let g1 = P::G1::generator();
    let lhs: Vec<P::G1> = row.iter().map(|s| g1 * *s).collect();
    P::multi_pairing(&lhs, v)
}
