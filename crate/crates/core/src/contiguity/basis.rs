use std::collections::BTreeMap;

use super::mask::MovabilityMask;
use super::ContiguityError;
use crate::algebra::{Field, GradedMatrix, Matrix};
use crate::cubical::{Chain, CoveringGrid, Cube, CubePair, CubeSet};
use crate::homology::{induced_inclusion_map, relative_homology};

/// Basis of `H(N_a, L_a)` made of cycles whose lifts at angle `a` are
/// movable: chains in `n_movable` with boundary in `l_movable`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionBasis {
    pub angle: i32,
    /// Section-grid representatives per degree.
    pub representatives: BTreeMap<usize, Vec<Chain>>,
    /// Coordinates of the representatives in the pivot basis of
    /// `H(N_a, L_a)`; invertible in every degree.
    pub change_of_basis: GradedMatrix,
}

impl SectionBasis {
    pub fn dims(&self) -> BTreeMap<usize, usize> {
        self.representatives.iter().map(|(q, r)| (*q, r.len())).collect()
    }

    pub fn dim(&self, q: usize) -> usize {
        self.representatives.get(&q).map_or(0, Vec::len)
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.representatives
            .iter()
            .filter(|(_, r)| !r.is_empty())
            .map(|(q, _)| *q)
    }
}

/// Sub-pair of the section at angle `a` spanned by cubes whose whole face
/// lattice lifts to movable cubes.
pub fn movable_section_pair(
    cov: &CoveringGrid,
    mask: &MovabilityMask,
    a: i32,
) -> Result<(CubePair, CubePair), ContiguityError> {
    let s = cov.section_at(a)?;
    let g = s.grid;
    let all_faces =
        |c: &Cube, ok: &dyn Fn(&Cube) -> bool| g.faces_of(c).iter().all(|f| ok(&cov.lift_section_cube(f, a)));
    let n: CubeSet =
        s.n.iter()
            .filter(|c| all_faces(c, &|l| mask.is_n_movable(l)))
            .copied()
            .collect();
    let l: CubeSet =
        s.l.iter()
            .filter(|c| all_faces(c, &|l| mask.is_l_movable(l)))
            .copied()
            .collect();
    Ok((s, CubePair { grid: g, n, l }))
}

/// Movable representatives spanning `H(N_a, L_a)`. Fails with a refinement
/// error when the movable sub-pair does not carry all of the homology.
pub fn movable_basis(
    cov: &CoveringGrid,
    mask: &MovabilityMask,
    a: i32,
    field: Field,
) -> Result<SectionBasis, ContiguityError> {
    let (full, sub) = movable_section_pair(cov, mask, a)?;
    let h = relative_homology(&full, field);
    let h_sub = relative_homology(&sub, field);
    let map = induced_inclusion_map(&h_sub, &h)?;
    let mut representatives = BTreeMap::new();
    let mut change = GradedMatrix::new(field);
    for (q, dim) in h.dims() {
        if dim == 0 {
            continue;
        }
        let sub_reps = h_sub.basis().representatives.get(&q).cloned().unwrap_or_default();
        let block = map
            .block(q as i32)
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(field, dim, 0));
        let pivots = block.pivot_columns();
        if pivots.len() < dim {
            return Err(ContiguityError::NotMovable {
                degree: q,
                missing: dim - pivots.len(),
            });
        }
        let cols: Vec<_> = pivots.iter().map(|&j| block.column(j)).collect();
        change.insert(q as i32, Matrix::from_columns(field, dim, &cols));
        representatives.insert(q, pivots.iter().map(|&j| sub_reps[j].clone()).collect());
    }
    Ok(SectionBasis {
        angle: a,
        representatives,
        change_of_basis: change,
    })
}
