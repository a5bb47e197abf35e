use std::collections::BTreeMap;

use rayon::prelude::*;

use super::basis::SectionBasis;
use super::ContiguityError;
use crate::algebra::{Field, GradedMatrix, Matrix};
use crate::cubical::{Chain, CoveringGrid, Cube, CubePair, CubeSet, Grid};
use crate::flow::{box_from_bounds, box_hull, translation_enclosure, FlowModel, IntervalBox};
use crate::homology::relative_homology;

fn unavailable(reason: impl Into<String>) -> ContiguityError {
    ContiguityError::TransportUnavailable(reason.into())
}

/// Acyclic cubical carrier of the first-return map on section cubes: the
/// grid box around the hull of the enclosed images of a cube and its faces.
struct Carriers {
    grid: Grid,
    boxes: BTreeMap<Cube, IntervalBox>,
}

impl Carriers {
    fn new(grid: Grid, m: &FlowModel, cubes: &CubeSet) -> Result<Carriers, ContiguityError> {
        let images: Vec<(Cube, Result<IntervalBox, String>)> = cubes
            .par_iter()
            .map(|c| {
                let b = box_from_bounds(&c.bounds(grid.scale));
                (*c, translation_enclosure(m, &b, 1.0).map_err(|e| e.to_string()))
            })
            .collect();
        let mut raw = BTreeMap::new();
        for (c, r) in images {
            raw.insert(c, r.map_err(|e| unavailable(format!("translation of {c:?}: {e}")))?);
        }
        let mut boxes = BTreeMap::new();
        for c in cubes {
            let mut b = raw[c].clone();
            for f in grid.faces_of(c) {
                b = box_hull(&b, &raw[&f]);
            }
            boxes.insert(*c, b);
        }
        Ok(Carriers { grid, boxes })
    }

    fn bounds(&self, c: &Cube) -> Vec<(f64, f64)> {
        self.boxes[c].iter().map(|i| (i.lo, i.hi)).collect()
    }

    fn tops(&self, c: &Cube) -> CubeSet {
        self.grid.tops_meeting(&self.bounds(c))
    }

    fn cubes(&self, c: &Cube) -> CubeSet {
        self.grid.closure(&self.tops(c))
    }
}

/// Chain selector of the carrier: vertices go to the carrier vertex nearest
/// the image centre, higher cubes to a filling of the already selected
/// boundary inside their (contractible) carrier.
fn select_chains(carriers: &Carriers, cubes: &CubeSet, field: Field) -> Result<BTreeMap<Cube, Chain>, ContiguityError> {
    let grid = carriers.grid;
    let unit = (-(grid.scale as f64)).exp2();
    let mut out: BTreeMap<Cube, Chain> = BTreeMap::new();
    let top = cubes.iter().map(Cube::dim).max().unwrap_or(0);
    for q in 0..=top {
        for c in cubes.iter().filter(|c| c.dim() == q) {
            let carrier = carriers.cubes(c);
            let chain = if q == 0 {
                let centre: Vec<f64> = carriers.boxes[c].iter().map(|i| i.mid()).collect();
                let dist = |v: &Cube| -> f64 {
                    v.base()
                        .iter()
                        .zip(&centre)
                        .map(|(&k, &x)| (k as f64 * unit - x).abs())
                        .fold(0.0, f64::max)
                };
                let v = carrier
                    .iter()
                    .filter(|v| v.dim() == 0)
                    .min_by(|a, b| dist(a).total_cmp(&dist(b)).then(a.cmp(b)))
                    .ok_or_else(|| unavailable(format!("empty carrier for {c:?}")))?;
                Chain::cube(*v, field)
            } else {
                let mut z = Chain::zero(q - 1);
                for (f, s) in grid.signed_faces(c) {
                    z.axpy(&field.from_i64(s), &out[&f]);
                }
                let pair = CubePair {
                    grid,
                    n: carrier,
                    l: CubeSet::new(),
                };
                let h = relative_homology(&pair, field);
                match h.decompose(&z) {
                    Ok(Some((fill, rest))) if rest.is_zero() => fill,
                    _ => {
                        return Err(unavailable(format!(
                            "selected boundary of {c:?} does not bound in its carrier"
                        )))
                    }
                }
            };
            out.insert(*c, chain);
        }
    }
    Ok(out)
}

/// Matrix of the first-return map on `H(N₀, L₀)` in `basis`, from full-period
/// translation enclosures.
///
/// The transported cycles live in `T = (N₀ ∪ F(N₀), L₀ ∪ F(L₀) ∪ overflow)`,
/// where overflow is the part of the carriers outside `N₀`; the result is
/// `i⁻¹ ∘ F` with `i` the inclusion `(N₀, L₀) → T`, which must induce an
/// isomorphism. Any failed certificate makes the cross-check unavailable.
pub fn corollary_transport(
    cov: &CoveringGrid,
    m: &FlowModel,
    basis: &SectionBasis,
    field: Field,
) -> Result<GradedMatrix, ContiguityError> {
    let s0 = cov.section_at(0)?;
    let grid = s0.grid;
    let mut model = m.clone();
    model.working_region = None;
    let support: Vec<Cube> = basis
        .representatives
        .values()
        .flatten()
        .flat_map(|z| z.support().copied())
        .collect();
    let cubes = grid.closure(&support);
    let carriers = Carriers::new(grid, &model, &cubes)?;
    let select = select_chains(&carriers, &cubes, field)?;

    let mut image_cubes = CubeSet::new();
    let mut l_t = s0.l.clone();
    for c in &cubes {
        let cells = carriers.cubes(c);
        if s0.l.contains(c) {
            l_t.extend(cells.iter().copied());
        }
        image_cubes.extend(cells);
    }
    let overflow: Vec<Cube> = image_cubes
        .iter()
        .filter(|c| c.is_top() && !s0.n.contains(c))
        .copied()
        .collect();
    l_t = grid.closure(&l_t.iter().chain(&overflow).copied().collect::<Vec<_>>());
    let mut n_t = s0.n.clone();
    n_t.extend(image_cubes);
    n_t.extend(l_t.iter().copied());
    let target = CubePair { grid, n: n_t, l: l_t };
    let h_t = relative_homology(&target, field);

    let mut out = GradedMatrix::new(field);
    for (q, dim) in h_t.dims() {
        if dim > 0 && basis.dim(q) == 0 {
            return Err(unavailable(format!("target pair has extra homology in degree {q}")));
        }
    }
    for q in basis.degrees() {
        let reps = &basis.representatives[&q];
        let n = reps.len();
        if h_t.dims().get(&q).copied().unwrap_or(0) != n {
            return Err(unavailable(format!(
                "inclusion into the target pair changes degree-{q} homology"
            )));
        }
        let mut inc = Matrix::zeros(field, n, n);
        let mut map = Matrix::zeros(field, n, n);
        for (j, u) in reps.iter().enumerate() {
            let mut fu = Chain::zero(q);
            for (c, s) in u.terms() {
                fu.axpy(s, &select[c]);
            }
            let xi = h_t.coordinates(u).map_err(|e| unavailable(e.to_string()))?;
            let xf = h_t
                .coordinates(&fu)
                .map_err(|e| unavailable(format!("transported cycle {j}: {e}")))?;
            for i in 0..n {
                inc.set(i, j, xi[i].clone());
                map.set(i, j, xf[i].clone());
            }
        }
        let inv = inc
            .inverse()
            .ok_or_else(|| unavailable(format!("inclusion is not an isomorphism in degree {q}")))?;
        out.insert(q as i32, inv.mul(&map));
    }
    Ok(out)
}
