//! Sparse vectors and left-to-right column reduction with recorded
//! transformations (`R = A V`, distinct pivot rows in the reduced columns).

use std::collections::HashMap;

use super::scalar::{Field, Scalar};

/// Sparse vector: strictly increasing indices, no stored zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SparseVec {
    entries: Vec<(usize, Scalar)>,
}

impl SparseVec {
    pub fn new() -> SparseVec {
        SparseVec::default()
    }

    /// Builds from arbitrary `(index, value)` pairs; duplicates are summed.
    pub fn from_pairs(mut pairs: Vec<(usize, Scalar)>) -> SparseVec {
        pairs.sort_by_key(|(i, _)| *i);
        let mut entries: Vec<(usize, Scalar)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match entries.last_mut() {
                Some((j, w)) if *j == i => *w = &*w + &v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|(_, v)| !v.is_zero());
        SparseVec { entries }
    }

    pub fn unit(field: Field, i: usize) -> SparseVec {
        SparseVec {
            entries: vec![(i, field.one())],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, Scalar)] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<(usize, Scalar)> {
        self.entries
    }

    /// Largest index with a nonzero entry.
    pub fn low(&self) -> Option<(usize, &Scalar)> {
        self.entries.last().map(|(i, v)| (*i, v))
    }

    pub fn get(&self, i: usize) -> Option<&Scalar> {
        self.entries
            .binary_search_by_key(&i, |(j, _)| *j)
            .ok()
            .map(|k| &self.entries[k].1)
    }

    /// `self += coef * other`.
    pub fn axpy(&mut self, coef: &Scalar, other: &SparseVec) {
        if coef.is_zero() || other.is_zero() {
            return;
        }
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let mut a = std::mem::take(&mut self.entries).into_iter().peekable();
        let mut b = other.entries.iter().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (Some((i, _)), Some((j, _))) if i < j => out.push(a.next().unwrap()),
                (Some((i, _)), Some((j, _))) if i > j => {
                    let (j, w) = b.next().unwrap();
                    out.push((*j, coef * w));
                }
                (Some(_), Some(_)) => {
                    let (i, v) = a.next().unwrap();
                    let (_, w) = b.next().unwrap();
                    let s = &v + &(coef * w);
                    if !s.is_zero() {
                        out.push((i, s));
                    }
                }
                (Some(_), None) => out.push(a.next().unwrap()),
                (None, Some(_)) => {
                    let (j, w) = b.next().unwrap();
                    out.push((*j, coef * w));
                }
                (None, None) => break,
            }
        }
        self.entries = out;
    }

    pub fn scaled(&self, coef: &Scalar) -> SparseVec {
        if coef.is_zero() {
            return SparseVec::new();
        }
        SparseVec {
            entries: self.entries.iter().map(|(i, v)| (*i, v * coef)).collect(),
        }
    }

    /// Keeps only entries whose index satisfies `keep`.
    pub fn filtered(&self, keep: impl Fn(usize) -> bool) -> SparseVec {
        SparseVec {
            entries: self.entries.iter().filter(|(i, _)| keep(*i)).cloned().collect(),
        }
    }
}

/// Column reduction of a sparse matrix given by columns.
///
/// After construction, `reduced[j] = Σ_k transforms[j][k] · A[k]` and the
/// nonzero reduced columns have pairwise distinct lows.
#[derive(Clone, Debug)]
pub struct ColumnReduction {
    field: Field,
    reduced: Vec<SparseVec>,
    transforms: Vec<SparseVec>,
    low_owner: HashMap<usize, usize>,
    pivot_trace: Vec<(usize, usize)>,
}

impl ColumnReduction {
    pub fn new(field: Field, columns: Vec<SparseVec>) -> ColumnReduction {
        let mut red = ColumnReduction {
            field,
            reduced: Vec::with_capacity(columns.len()),
            transforms: Vec::with_capacity(columns.len()),
            low_owner: HashMap::new(),
            pivot_trace: Vec::new(),
        };
        for (j, col) in columns.into_iter().enumerate() {
            let mut r = col;
            let mut v = SparseVec::unit(field, j);
            while let Some((low, val)) = r.low() {
                let Some(&k) = red.low_owner.get(&low) else {
                    break;
                };
                let (_, pv) = red.reduced[k].low().unwrap();
                let coef = -&val.div(pv);
                r.axpy(&coef, &red.reduced[k]);
                v.axpy(&coef, &red.transforms[k]);
            }
            if let Some((low, _)) = r.low() {
                red.low_owner.insert(low, j);
                red.pivot_trace.push((j, low));
            }
            red.reduced.push(r);
            red.transforms.push(v);
        }
        red
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn ncols(&self) -> usize {
        self.reduced.len()
    }

    pub fn reduced(&self, j: usize) -> &SparseVec {
        &self.reduced[j]
    }

    pub fn transform(&self, j: usize) -> &SparseVec {
        &self.transforms[j]
    }

    /// Column whose reduced form has its low at `row`.
    pub fn owner_of_low(&self, row: usize) -> Option<usize> {
        self.low_owner.get(&row).copied()
    }

    /// Columns reduced to zero; their transforms form a kernel basis.
    pub fn zero_columns(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.reduced.len()).filter(|&j| self.reduced[j].is_zero())
    }

    pub fn rank(&self) -> usize {
        self.low_owner.len()
    }

    /// `(column, low)` pairs in the order they were fixed.
    pub fn pivot_trace(&self) -> &[(usize, usize)] {
        &self.pivot_trace
    }

    /// Solves `A x = target`. Returns `x` in original-column coordinates, or
    /// the unreducible residual when the target is outside the column span.
    pub fn solve(&self, target: &SparseVec) -> Result<SparseVec, SparseVec> {
        let mut r = target.clone();
        let mut lambdas: Vec<(usize, Scalar)> = Vec::new();
        while let Some((low, val)) = r.low() {
            let Some(k) = self.owner_of_low(low) else {
                return Err(r);
            };
            let (_, pv) = self.reduced[k].low().unwrap();
            let coef = val.div(pv);
            r.axpy(&-&coef, &self.reduced[k]);
            lambdas.push((k, coef));
        }
        let mut x = SparseVec::new();
        for (k, coef) in lambdas {
            x.axpy(&coef, &self.transforms[k]);
        }
        Ok(x)
    }
}

/// Sparse matrix-vector product with columns given explicitly.
pub fn combine_columns(columns: &[SparseVec], x: &SparseVec) -> SparseVec {
    let mut out = SparseVec::new();
    for (j, c) in x.entries() {
        out.axpy(c, &columns[*j]);
    }
    out
}
