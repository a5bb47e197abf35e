use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::scalar::{Field, Scalar};
use super::AlgebraError;

/// Dense row-major matrix over a field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zeros(field: Field, rows: usize, cols: usize) -> Matrix {
        Matrix {
            field,
            rows,
            cols,
            data: vec![field.zero(); rows * cols],
        }
    }

    pub fn identity(field: Field, n: usize) -> Matrix {
        let mut m = Matrix::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    pub fn from_rows(field: Field, rows: Vec<Vec<Scalar>>) -> Matrix {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix rows");
            data.extend(row);
        }
        Matrix {
            field,
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_i64(field: Field, rows: &[&[i64]]) -> Matrix {
        Matrix::from_rows(
            field,
            rows.iter()
                .map(|r| r.iter().map(|&v| field.from_i64(v)).collect())
                .collect(),
        )
    }

    /// Matrix whose columns are the given vectors (all of length `rows`).
    pub fn from_columns(field: Field, rows: usize, columns: &[Vec<Scalar>]) -> Matrix {
        let mut m = Matrix::zeros(field, rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for (i, v) in col.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn field(&self) -> Field {
        self.field
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

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<Scalar> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Matrix::zeros(self.field, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let v = out.get(i, j) + &(a * b);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(self.field.zero(), |acc, (a, b)| &acc + &(a * b))
            })
            .collect()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: &Scalar) -> Matrix {
        Matrix {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn pow(&self, mut e: u32) -> Matrix {
        assert!(self.is_square());
        let mut acc = Matrix::identity(self.field, self.rows);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn trace(&self) -> Scalar {
        assert!(self.is_square());
        (0..self.rows).fold(self.field.zero(), |acc, i| &acc + self.get(i, i))
    }

    /// Sub-block `[r0, r1) x [c0, c1)`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Matrix {
        let mut b = Matrix::zeros(self.field, r1 - r0, c1 - c0);
        for i in r0..r1 {
            for j in c0..c1 {
                b.set(i - r0, j - c0, self.get(i, j).clone());
            }
        }
        b
    }

    /// Reduced row echelon form and pivot columns. Pivots are chosen at the
    /// leftmost column, lowest row index first.
    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut prow = 0;
        for col in 0..a.cols {
            if prow == a.rows {
                break;
            }
            let Some(r) = (prow..a.rows).find(|&r| !a.get(r, col).is_zero()) else {
                continue;
            };
            a.swap_rows(r, prow);
            let inv = a.get(prow, col).inv().unwrap();
            for j in col..a.cols {
                let v = a.get(prow, j) * &inv;
                a.set(prow, j, v);
            }
            for r in 0..a.rows {
                if r == prow || a.get(r, col).is_zero() {
                    continue;
                }
                let f = a.get(r, col).clone();
                for j in col..a.cols {
                    let p = a.get(prow, j);
                    if p.is_zero() {
                        continue;
                    }
                    let v = a.get(r, j) - &(&f * p);
                    a.set(r, j, v);
                }
            }
            pivots.push(col);
            prow += 1;
        }
        (a, pivots)
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

    /// Kernel basis; each vector is scaled so its first nonzero entry is one.
    pub fn kernel(&self) -> Vec<Vec<Scalar>> {
        let (r, pivots) = self.rref();
        kernel_from_rref(&r, &pivots, self.cols)
    }

    /// Indices of a maximal linearly independent prefix-greedy set of columns.
    pub fn pivot_columns(&self) -> Vec<usize> {
        self.rref().1
    }

    pub fn inverse(&self) -> Option<Matrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut aug = Matrix::zeros(self.field, n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, self.field.one());
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some(r.block(0, n, n, 2 * n))
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }
}

fn kernel_from_rref(r: &Matrix, pivots: &[usize], n: usize) -> Vec<Vec<Scalar>> {
    let field = r.field;
    let mut is_pivot = vec![None; n];
    for (row, &c) in pivots.iter().enumerate() {
        is_pivot[c] = Some(row);
    }
    let mut basis = Vec::new();
    for free in (0..n).filter(|&c| is_pivot[c].is_none()) {
        let mut v = vec![field.zero(); n];
        v[free] = field.one();
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = -r.get(row, free);
        }
        normalize_leading(&mut v);
        basis.push(v);
    }
    basis
}

fn normalize_leading(v: &mut [Scalar]) {
    if let Some(lead) = v.iter().find(|x| !x.is_zero()).cloned() {
        let inv = lead.inv().unwrap();
        for x in v.iter_mut() {
            *x = &*x * &inv;
        }
    }
}

/// Result of [`solve_linear`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSolution {
    /// A particular solution with all free variables set to zero.
    pub solution: Option<Vec<Scalar>>,
    pub kernel: Vec<Vec<Scalar>>,
}

/// Solves `A x = b` exactly, returning a particular solution (if any) and a
/// kernel basis of `A`.
pub fn solve_linear(a: &Matrix, b: &[Scalar]) -> Result<LinearSolution, AlgebraError> {
    if b.len() != a.rows {
        return Err(AlgebraError::DimensionMismatch {
            expected: a.rows,
            found: b.len(),
        });
    }
    let n = a.cols;
    let mut aug = Matrix::zeros(a.field, a.rows, n + 1);
    for i in 0..a.rows {
        for j in 0..n {
            aug.set(i, j, a.get(i, j).clone());
        }
        aug.set(i, n, b[i].clone());
    }
    let (r, pivots) = aug.rref();
    let kernel = {
        let coeff_pivots: Vec<usize> = pivots.iter().copied().filter(|&c| c < n).collect();
        kernel_from_rref(&r.block(0, r.rows, 0, n), &coeff_pivots, n)
    };
    if pivots.last() == Some(&n) {
        return Ok(LinearSolution { solution: None, kernel });
    }
    let mut x = vec![a.field.zero(); n];
    for (row, &pc) in pivots.iter().enumerate() {
        x[pc] = r.get(row, n).clone();
    }
    Ok(LinearSolution {
        solution: Some(x),
        kernel,
    })
}

/// Block-diagonal matrix indexed by homological degree. Missing degrees are
/// zero-dimensional.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedMatrix {
    field: Field,
    blocks: BTreeMap<i32, Matrix>,
}

impl GradedMatrix {
    pub fn new(field: Field) -> GradedMatrix {
        GradedMatrix {
            field,
            blocks: BTreeMap::new(),
        }
    }

    pub fn from_blocks(field: Field, blocks: impl IntoIterator<Item = (i32, Matrix)>) -> Self {
        let mut g = GradedMatrix::new(field);
        for (q, m) in blocks {
            g.insert(q, m);
        }
        g
    }

    pub fn insert(&mut self, degree: i32, m: Matrix) {
        assert_eq!(m.field(), self.field);
        if m.rows() == 0 && m.cols() == 0 {
            self.blocks.remove(&degree);
        } else {
            self.blocks.insert(degree, m);
        }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn block(&self, degree: i32) -> Option<&Matrix> {
        self.blocks.get(&degree)
    }

    pub fn blocks(&self) -> impl Iterator<Item = (i32, &Matrix)> {
        self.blocks.iter().map(|(q, m)| (*q, m))
    }

    pub fn degrees(&self) -> impl Iterator<Item = i32> + '_ {
        self.blocks.keys().copied()
    }

    /// Row dimension per degree.
    pub fn dims(&self) -> BTreeMap<i32, usize> {
        self.blocks.iter().map(|(q, m)| (*q, m.rows())).collect()
    }

    pub fn mul(&self, other: &GradedMatrix) -> GradedMatrix {
        let mut out = GradedMatrix::new(self.field);
        for (q, a) in &self.blocks {
            if let Some(b) = other.blocks.get(q) {
                out.insert(*q, a.mul(b));
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> GradedMatrix {
        GradedMatrix::from_blocks(self.field, self.blocks.iter().map(|(q, m)| (*q, m.pow(e))))
    }

    pub fn to_json(&self) -> Vec<MatrixJson> {
        self.blocks
            .iter()
            .map(|(q, m)| MatrixJson::from_matrix(*q, m))
            .collect()
    }

    pub fn from_json(field: Field, blocks: &[MatrixJson]) -> Result<GradedMatrix, AlgebraError> {
        let mut g = GradedMatrix::new(field);
        for b in blocks {
            if g.blocks.contains_key(&b.degree) {
                return Err(AlgebraError::Parse(format!("duplicate degree {}", b.degree)));
            }
            g.insert(b.degree, b.to_matrix(field)?);
        }
        Ok(g)
    }
}

/// JSON envelope `{"degree", "rows", "cols", "entries": [[i, j, "num/den"], ...]}`.
/// Only nonzero entries are written, in row-major order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub degree: i32,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, String)>,
}

impl MatrixJson {
    pub fn from_matrix(degree: i32, m: &Matrix) -> MatrixJson {
        let mut entries = Vec::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let v = m.get(i, j);
                if !v.is_zero() {
                    entries.push((i, j, v.to_text()));
                }
            }
        }
        MatrixJson {
            degree,
            rows: m.rows(),
            cols: m.cols(),
            entries,
        }
    }

    pub fn to_matrix(&self, field: Field) -> Result<Matrix, AlgebraError> {
        let mut m = Matrix::zeros(field, self.rows, self.cols);
        for (i, j, text) in &self.entries {
            if *i >= self.rows || *j >= self.cols {
                return Err(AlgebraError::Parse(format!("entry ({i},{j}) out of range")));
            }
            m.set(*i, *j, field.parse(text)?);
        }
        Ok(m)
    }
}
