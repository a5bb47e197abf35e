//! Relative cubical homology over a field with explicit representative
//! cycles and boundary-decomposition witnesses.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{ColumnReduction, Field, GradedMatrix, Matrix, Scalar, SparseVec};
use crate::cubical::{Chain, ChainJson, Cube, CubePair};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomologyError {
    #[error("chain is not a relative cycle: {0}")]
    NotRelativeCycle(String),
    #[error("pairs are not nested: {0:?} of the smaller pair is missing from the larger")]
    NotNested(Cube),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

/// Matrix of `∂_q` with rows and columns indexed by cubes in canonical order.
#[derive(Clone, Debug)]
pub struct BoundaryMatrix {
    pub rows: Vec<Cube>,
    pub cols: Vec<Cube>,
    pub columns: Vec<SparseVec>,
    field: Field,
}

impl BoundaryMatrix {
    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.field, self.rows.len(), self.cols.len());
        for (j, col) in self.columns.iter().enumerate() {
            for (i, v) in col.entries() {
                m.set(*i, j, v.clone());
            }
        }
        m
    }
}

fn cubes_in_degree<'a>(cubes: impl Iterator<Item = &'a Cube>, q: usize) -> Vec<Cube> {
    cubes.filter(|c| c.dim() == q).copied().collect()
}

/// `∂_q` of `N`, or of the quotient `N / L` when `relative` is set (cubes of
/// `L` dropped from rows and columns).
pub fn boundary_matrix(p: &CubePair, q: usize, field: Field, relative: bool) -> BoundaryMatrix {
    let keep = |c: &&Cube| !relative || !p.l.contains(*c);
    let cols = if q == 0 {
        Vec::new()
    } else {
        cubes_in_degree(p.n.iter().filter(keep), q)
    };
    let rows = if q == 0 {
        Vec::new()
    } else {
        cubes_in_degree(p.n.iter().filter(keep), q - 1)
    };
    let row_index: HashMap<Cube, usize> = rows.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let columns = cols
        .iter()
        .map(|c| {
            SparseVec::from_pairs(
                p.grid
                    .signed_faces(c)
                    .into_iter()
                    .filter_map(|(f, s)| row_index.get(&f).map(|&i| (i, field.from_i64(s))))
                    .collect(),
            )
        })
        .collect();
    BoundaryMatrix {
        rows,
        cols,
        columns,
        field,
    }
}

/// Per-degree representative relative cycles of a basis of `H(N, L)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomologyBasis {
    pub field: Field,
    pub representatives: BTreeMap<usize, Vec<Chain>>,
}

impl HomologyBasis {
    pub fn dims(&self) -> BTreeMap<usize, usize> {
        self.representatives
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(q, v)| (*q, v.len()))
            .collect()
    }

    pub fn dim(&self, q: usize) -> usize {
        self.representatives.get(&q).map_or(0, Vec::len)
    }

    pub fn total_dim(&self) -> usize {
        self.representatives.values().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> HomologyBasisJson {
        HomologyBasisJson {
            field: self.field,
            dims: self.dims(),
            representatives: self
                .representatives
                .iter()
                .filter(|(_, v)| !v.is_empty())
                .map(|(q, v)| (*q, v.iter().map(Chain::to_json).collect()))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyBasisJson {
    pub field: Field,
    pub dims: BTreeMap<usize, usize>,
    pub representatives: BTreeMap<usize, Vec<ChainJson>>,
}

/// Degree-`q` data: relative cubes, the reduction of `∂_{q+1}` and a
/// combined pivot system of boundaries followed by representatives.
#[derive(Clone, Debug)]
struct Degree {
    cells: Vec<Cube>,
    index: HashMap<Cube, usize>,
    /// Reduction of `∂_{q+1}` (columns: relative (q+1)-cubes).
    upper: ColumnReduction,
    /// Nonzero reduced columns of `upper`, in order.
    boundary_cols: Vec<usize>,
    /// Columns: `upper` boundaries followed by the representatives, all with
    /// distinct lows.
    pivots: ColumnReduction,
    reps: Vec<SparseVec>,
}

/// Homology of a cubical pair with enough retained structure to decompose
/// cycles and compute coordinates.
#[derive(Clone, Debug)]
pub struct RelativeHomology {
    pair: CubePair,
    field: Field,
    degrees: Vec<Degree>,
    basis: HomologyBasis,
}

/// Computes `H(N, L)` over `field` with representative cycles.
pub fn relative_homology(p: &CubePair, field: Field) -> RelativeHomology {
    let top = p.relative_cubes().map(|c| c.dim()).max();
    let Some(top) = top else {
        return RelativeHomology {
            pair: p.clone(),
            field,
            degrees: Vec::new(),
            basis: HomologyBasis {
                field,
                representatives: BTreeMap::new(),
            },
        };
    };
    // Reductions of ∂_q for q = 0..=top+1.
    let reductions: Vec<ColumnReduction> = (0..=top + 1)
        .map(|q| ColumnReduction::new(field, boundary_matrix(p, q, field, true).columns))
        .collect();
    let mut degrees = Vec::with_capacity(top + 1);
    let mut representatives = BTreeMap::new();
    for q in 0..=top {
        let cells = cubes_in_degree(p.relative_cubes(), q);
        let index = cells.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let upper = reductions[q + 1].clone();
        let boundary_cols: Vec<usize> = (0..upper.ncols()).filter(|&j| !upper.reduced(j).is_zero()).collect();
        let boundaries: Vec<SparseVec> = boundary_cols.iter().map(|&j| upper.reduced(j).clone()).collect();
        let kernel: Vec<SparseVec> = if q == 0 {
            (0..cells.len()).map(|i| SparseVec::unit(field, i)).collect()
        } else {
            reductions[q]
                .zero_columns()
                .map(|j| reductions[q].transform(j).clone())
                .collect()
        };
        let nb = boundaries.len();
        let mut combined = boundaries.clone();
        combined.extend(kernel);
        let first = ColumnReduction::new(field, combined);
        let reps: Vec<SparseVec> = (nb..first.ncols())
            .map(|j| first.reduced(j).clone())
            .filter(|r| !r.is_zero())
            .collect();
        let mut cols = boundaries;
        cols.extend(reps.iter().cloned());
        let pivots = ColumnReduction::new(field, cols);
        debug_assert_eq!(pivots.rank(), pivots.ncols());
        representatives.insert(q, reps.iter().map(|r| to_chain(q, &cells, r)).collect::<Vec<_>>());
        degrees.push(Degree {
            cells,
            index,
            upper,
            boundary_cols,
            pivots,
            reps,
        });
    }
    RelativeHomology {
        pair: p.clone(),
        field,
        degrees,
        basis: HomologyBasis { field, representatives },
    }
}

fn to_chain(q: usize, cells: &[Cube], v: &SparseVec) -> Chain {
    Chain::from_terms(q, v.entries().iter().map(|(i, s)| (cells[*i], s.clone())))
}

impl RelativeHomology {
    pub fn pair(&self) -> &CubePair {
        &self.pair
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn basis(&self) -> &HomologyBasis {
        &self.basis
    }

    pub fn dims(&self) -> BTreeMap<usize, usize> {
        self.basis.dims()
    }

    /// Checks `support(z) ⊆ N` and `support(∂z) ⊆ L`.
    pub fn check_relative_cycle(&self, z: &Chain) -> Result<(), HomologyError> {
        if let Some(c) = z.support().find(|c| !self.pair.n.contains(c)) {
            return Err(HomologyError::NotRelativeCycle(format!("{c:?} is outside N")));
        }
        let b = z.boundary(&self.pair.grid, self.field);
        if let Some(c) = b.support().find(|c| !self.pair.l.contains(c)) {
            return Err(HomologyError::NotRelativeCycle(format!(
                "boundary term {c:?} is outside L"
            )));
        }
        Ok(())
    }

    fn relative_vector(&self, z: &Chain) -> Option<SparseVec> {
        let q = z.degree();
        let Some(d) = self.degrees.get(q) else {
            return Some(SparseVec::new()).filter(|_| z.support().all(|c| self.pair.l.contains(c)));
        };
        Some(SparseVec::from_pairs(
            z.terms()
                .filter(|(c, _)| !self.pair.l.contains(c))
                .map(|(c, v)| d.index.get(c).map(|&i| (i, v.clone())))
                .collect::<Option<Vec<_>>>()?,
        ))
    }

    /// Splits a relative cycle into boundary coefficients and class
    /// coordinates.
    fn split(&self, z: &Chain) -> Result<(Vec<(usize, Scalar)>, Vec<Scalar>), HomologyError> {
        self.check_relative_cycle(z)?;
        let q = z.degree();
        let v = self
            .relative_vector(z)
            .ok_or_else(|| HomologyError::Inconsistent("cycle term not indexed".into()))?;
        let Some(d) = self.degrees.get(q) else {
            return Ok((Vec::new(), Vec::new()));
        };
        let x = d
            .pivots
            .solve(&v)
            .map_err(|_| HomologyError::Inconsistent(format!("degree-{q} cycle outside the cycle span")))?;
        let nb = d.boundary_cols.len();
        let mut coords = vec![self.field.zero(); d.reps.len()];
        let mut lambdas = Vec::new();
        for (j, s) in x.into_entries() {
            if j < nb {
                lambdas.push((j, s));
            } else {
                coords[j - nb] = s;
            }
        }
        Ok((lambdas, coords))
    }

    /// Coordinates of `[z]` in the representative basis.
    pub fn coordinates(&self, z: &Chain) -> Result<Vec<Scalar>, HomologyError> {
        Ok(self.split(z)?.1)
    }

    /// `z = ∂c + b` with `c` in `N` and `b` in `L`, or `None` when `[z] ≠ 0`.
    pub fn decompose(&self, z: &Chain) -> Result<Option<(Chain, Chain)>, HomologyError> {
        let (lambdas, coords) = self.split(z)?;
        if coords.iter().any(|s| !s.is_zero()) {
            return Ok(None);
        }
        let q = z.degree();
        let mut c = Chain::zero(q + 1);
        if let Some(d) = self.degrees.get(q) {
            let upper_cells = self
                .degrees
                .get(q + 1)
                .map(|u| u.cells.clone())
                .unwrap_or_else(|| cubes_in_degree(self.pair.relative_cubes(), q + 1));
            let mut x = SparseVec::new();
            for (k, s) in lambdas {
                x.axpy(&s, d.upper.transform(d.boundary_cols[k]));
            }
            c = to_chain(q + 1, &upper_cells, &x);
        }
        let b = z.sub(&c.boundary(&self.pair.grid, self.field));
        if let Some(t) = b.support().find(|t| !self.pair.l.contains(t)) {
            return Err(HomologyError::Inconsistent(format!(
                "decomposition residual {t:?} outside L"
            )));
        }
        Ok(Some((c, b)))
    }
}

/// `z = ∂c + b` witnesses for relative cycles; `None` iff `[z] ≠ 0`.
pub fn homologous_decomposition(z: &Chain, h: &RelativeHomology) -> Result<Option<(Chain, Chain)>, HomologyError> {
    h.decompose(z)
}

/// Matrix of the inclusion-induced map `H(sub) → H(sup)` in the two
/// representative bases.
pub fn induced_inclusion_map(sub: &RelativeHomology, sup: &RelativeHomology) -> Result<GradedMatrix, HomologyError> {
    if let Some(c) = sub.pair.n.iter().find(|c| !sup.pair.n.contains(c)) {
        return Err(HomologyError::NotNested(*c));
    }
    if let Some(c) = sub.pair.l.iter().find(|c| !sup.pair.l.contains(c)) {
        return Err(HomologyError::NotNested(*c));
    }
    let field = sup.field;
    let mut out = GradedMatrix::new(field);
    let degrees: std::collections::BTreeSet<usize> = sub
        .basis
        .dims()
        .keys()
        .chain(sup.basis.dims().keys())
        .copied()
        .collect();
    for q in degrees {
        let rows = sup.basis.dim(q);
        let empty = Vec::new();
        let reps = sub.basis.representatives.get(&q).unwrap_or(&empty);
        let mut m = Matrix::zeros(field, rows, reps.len());
        for (j, u) in reps.iter().enumerate() {
            let x = sup
                .coordinates(u)
                .map_err(|e| HomologyError::Inconsistent(format!("representative {j} in degree {q}: {e}")))?;
            for (i, s) in x.into_iter().enumerate() {
                m.set(i, j, s);
            }
        }
        out.insert(q as i32, m);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubical::Grid;

    const Q: Field = Field::Rational;

    fn pair(g: Grid, tops: &[Cube], l: &[Cube]) -> CubePair {
        CubePair::from_generators(g, &tops.iter().copied().collect(), &l.iter().copied().collect())
    }

    fn annulus() -> CubePair {
        let g = Grid::flat(2, 2);
        let tops: Vec<Cube> = g
            .box_tops(&[0, 0], &[3, 3])
            .into_iter()
            .filter(|c| c.base() != [1, 1])
            .collect();
        pair(g, &tops, &[])
    }

    #[test]
    fn boundary_matrix_examples() {
        let g = Grid::flat(1, 1);
        let p = pair(g, &[Cube::new(&[0], 1)], &[]);
        assert_eq!(
            boundary_matrix(&p, 1, Q, false).to_dense(),
            Matrix::from_i64(Q, &[&[-1], &[1]])
        );
        let rel = pair(g, &[Cube::new(&[0], 1)], &[Cube::vertex(&[0]), Cube::vertex(&[1])]);
        assert!(boundary_matrix(&rel, 1, Q, true).to_dense().is_zero());
        let b = boundary_matrix(&p, 5, Q, false);
        assert_eq!((b.rows.len(), b.cols.len()), (0, 0));
    }

    #[test]
    fn point_and_interval_pair() {
        let g = Grid::flat(1, 1);
        let pt = pair(g, &[Cube::vertex(&[0])], &[]);
        let h = relative_homology(&pt, Q);
        assert_eq!(h.dims(), BTreeMap::from([(0, 1)]));
        let iv = pair(
            g,
            &[Cube::new(&[-1], 1), Cube::new(&[0], 1)],
            &[Cube::vertex(&[-1]), Cube::vertex(&[1])],
        );
        let h = relative_homology(&iv, Q);
        assert_eq!(h.dims(), BTreeMap::from([(1, 1)]));
        let u = &h.basis().representatives[&1][0];
        assert!(h.check_relative_cycle(u).is_ok());
    }

    #[test]
    fn annulus_decomposition() {
        let p = annulus();
        let h = relative_homology(&p, Q);
        assert_eq!(h.dims(), BTreeMap::from([(0, 1), (1, 1)]));
        let loop_ = h.basis().representatives[&1][0].clone();
        assert!(h.decompose(&loop_).unwrap().is_none());
        let sq = Cube::top(&[0, 0]);
        let z = Chain::cube(sq, Q).boundary(&p.grid, Q);
        let (c, b) = h.decompose(&z).unwrap().unwrap();
        assert!(b.is_zero());
        assert_eq!(c.boundary(&p.grid, Q), z);
        assert_eq!(h.decompose(&Chain::zero(1)).unwrap().unwrap().0, Chain::zero(2));
        let not_cycle = Chain::cube(Cube::new(&[0, 0], 1), Q);
        assert!(h.decompose(&not_cycle).is_err());
    }

    #[test]
    fn inclusion_maps() {
        let a = annulus();
        let ha = relative_homology(&a, Q);
        let id = induced_inclusion_map(&ha, &ha).unwrap();
        assert_eq!(id.block(1).unwrap(), &Matrix::identity(Q, 1));
        let g = a.grid;
        let full = pair(g, &g.box_tops(&[0, 0], &[3, 3]).into_iter().collect::<Vec<_>>(), &[]);
        let hf = relative_homology(&full, Q);
        let m = induced_inclusion_map(&ha, &hf).unwrap();
        assert_eq!(m.block(1).unwrap().rows(), 0);
        assert_eq!(m.block(0).unwrap(), &Matrix::identity(Q, 1));
        let empty = relative_homology(&CubePair::empty(g), Q);
        let e = induced_inclusion_map(&empty, &hf).unwrap();
        assert_eq!(e.block(0).map(|b| b.cols()), Some(0));
        assert!(induced_inclusion_map(&hf, &ha).is_err());
    }
}
