use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::map::{isolating_check, MultivaluedCubeMap};
use super::IndexPairError;
use crate::cubical::{Cube, CubePair, CubeSet, Grid};
use crate::flow::{box_from_bounds, rough_enclosure, Expr, FlowModel};

/// How isolation of `cl(N ∖ L)` was established.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsolationEvidence {
    /// The combinatorial invariant part avoids the boundary.
    Combinatorial,
    /// Every boundary face is crossed transversally: points on it leave
    /// `cl(N ∖ L)` within one step forward (exit faces) or backward
    /// (entrance faces).
    Transversal { exit_faces: usize, entrance_faces: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub pass: bool,
    pub offending: Vec<Cube>,
}

impl ConditionResult {
    fn from_offending(mut offending: Vec<Cube>) -> ConditionResult {
        offending.sort();
        offending.dedup();
        ConditionResult {
            pass: offending.is_empty(),
            offending,
        }
    }
}

/// Per-condition outcome of re-verifying an index pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexPairDiagnostics {
    /// `ℱ(L) ∩ N ⊆ L`.
    pub positive_invariance: ConditionResult,
    /// `cl(ℱ(N) ∖ N) ∩ N ⊆ L`.
    pub exit_set: ConditionResult,
    /// `Inv cl(N ∖ L) ⊆ int(N ∖ L)`.
    pub isolation: ConditionResult,
    pub isolation_evidence: Option<IsolationEvidence>,
}

impl IndexPairDiagnostics {
    pub fn pass(&self) -> bool {
        self.positive_invariance.pass && self.exit_set.pass && self.isolation.pass
    }
}

fn tops(set: &CubeSet) -> CubeSet {
    set.iter().filter(|c| c.is_top()).copied().collect()
}

/// Cells of `N` in the topological boundary of `|N|`.
fn is_boundary_cell(grid: &Grid, n_tops: &CubeSet, c: &Cube) -> bool {
    grid.cofaces_top(c).iter().any(|t| !n_tops.contains(t))
}

/// Cells of `N ∖ L` that images of `L` reach.
fn positive_invariance_violations(f: &MultivaluedCubeMap, n: &CubeSet, l: &CubeSet, n_tops: &CubeSet) -> Vec<Cube> {
    let grid = &f.grid;
    let mut bad = Vec::new();
    // Sources: N-tops meeting L. For a top cube of L the whole image matters;
    // for stray lower-dimensional L cells the image boxes of all N-tops
    // around them are used.
    let mut sources: BTreeSet<Cube> = l.iter().filter(|c| c.is_top()).copied().collect();
    for c in l.iter().filter(|c| !c.is_top()) {
        let covered = grid.cofaces_top(c).iter().any(|t| l.contains(t));
        if !covered {
            sources.extend(grid.cofaces_top(c).into_iter().filter(|t| n_tops.contains(t)));
        }
    }
    for q in &sources {
        match f.image_box(q) {
            Some(b) => {
                for cell in grid.cells_meeting(b) {
                    if n.contains(&cell) && !l.contains(&cell) {
                        bad.push(cell);
                    }
                }
            }
            None => {
                for r in f.image(q) {
                    if n_tops.contains(r) && !l.contains(r) {
                        bad.push(*r);
                    }
                }
            }
        }
    }
    bad
}

/// Boundary cells of `N` outside `L` reached by images leaving `N`.
fn exit_violations(f: &MultivaluedCubeMap, n: &CubeSet, l: &CubeSet, n_tops: &CubeSet) -> Vec<Cube> {
    let grid = &f.grid;
    let mut bad = Vec::new();
    for q in n_tops {
        match f.image_box(q) {
            Some(b) => {
                if grid.box_inside(n, b) {
                    continue;
                }
                for cell in grid.cells_meeting(b) {
                    if n.contains(&cell) && !l.contains(&cell) && is_boundary_cell(grid, n_tops, &cell) {
                        bad.push(cell);
                    }
                }
            }
            None => {
                let outside: Vec<&Cube> = f.image(q).iter().filter(|r| !n_tops.contains(r)).collect();
                for r in outside {
                    for face in grid.faces_of(r) {
                        if n.contains(&face) && !l.contains(&face) {
                            bad.push(face);
                        }
                    }
                }
            }
        }
    }
    bad
}

fn negated(m: &FlowModel) -> FlowModel {
    let mut back = m.clone();
    back.field = m.field.iter().map(|e| Expr::neg(e.clone())).collect();
    back
}

/// Checks that every boundary face of `|K|` (K given by top cubes) is left
/// transversally within one step, forward or backward. Returns the faces that
/// could not be certified.
pub fn transversality_certificate(grid: &Grid, k_tops: &CubeSet, m: &FlowModel) -> Result<(usize, usize), Vec<Cube>> {
    let back = negated(m);
    let mut failed = Vec::new();
    let (mut exits, mut entrances) = (0, 0);
    for q in k_tops {
        for axis in 0..grid.dim {
            for dir in [1i32, -1] {
                let neighbor = grid.normalize(q.with_coord(axis, q.base()[axis] + dir));
                if k_tops.contains(&neighbor) {
                    continue;
                }
                let (lower, upper) = q.faces_across(axis);
                let face = if dir > 0 { upper } else { lower };
                let plane = face.base()[axis];
                let fb = box_from_bounds(&face.bounds(grid.scale));
                let crosses = |model: &FlowModel| -> bool {
                    let tube = rough_enclosure(model, &fb);
                    if !tube.validated {
                        return false;
                    }
                    let speed = model.eval(&tube.tube)[axis];
                    let outward = if dir > 0 { speed.lo > 0.0 } else { speed.hi < 0.0 };
                    if !outward {
                        return false;
                    }
                    let bounds: Vec<(f64, f64)> = tube.tube.iter().map(|i| (i.lo, i.hi)).collect();
                    // Slabs strictly beyond the plane reached by the tube,
                    // reduced like cube coordinates on periodic axes.
                    let u = (grid.scale as f64).exp2();
                    let beyond: Vec<i32> = if dir > 0 {
                        (plane..=(bounds[axis].1 * u).floor() as i32).collect()
                    } else {
                        ((bounds[axis].0 * u).ceil() as i32 - 1..plane).collect()
                    };
                    let beyond: BTreeSet<i32> = beyond
                        .into_iter()
                        .map(|j| grid.normalize(q.with_coord(axis, j)).base()[axis])
                        .collect();
                    grid.tops_meeting(&bounds)
                        .iter()
                        .all(|r| !(beyond.contains(&r.base()[axis]) && k_tops.contains(r)))
                };
                if crosses(m) {
                    exits += 1;
                } else if crosses(&back) {
                    entrances += 1;
                } else {
                    failed.push(grid.normalize(face));
                }
            }
        }
    }
    if failed.is_empty() {
        Ok((exits, entrances))
    } else {
        failed.sort();
        failed.dedup();
        Err(failed)
    }
}

fn isolation_of(
    f: &MultivaluedCubeMap,
    k_tops: &CubeSet,
    model: Option<&FlowModel>,
) -> (ConditionResult, Option<IsolationEvidence>) {
    let comb = isolating_check(k_tops, f);
    if comb.isolating {
        return (
            ConditionResult::from_offending(vec![]),
            Some(IsolationEvidence::Combinatorial),
        );
    }
    match model {
        Some(m) => match transversality_certificate(&f.grid, k_tops, m) {
            Ok((exit_faces, entrance_faces)) => (
                ConditionResult::from_offending(vec![]),
                Some(IsolationEvidence::Transversal {
                    exit_faces,
                    entrance_faces,
                }),
            ),
            Err(faces) => (ConditionResult::from_offending(faces), None),
        },
        None => (ConditionResult::from_offending(comb.offending), None),
    }
}

/// Re-checks the index-pair conditions for `p` against `f`. Isolation
/// accepts either combinatorial evidence or, when a model is supplied, the
/// transversal-face certificate.
pub fn verify_index_pair(p: &CubePair, f: &MultivaluedCubeMap, model: Option<&FlowModel>) -> IndexPairDiagnostics {
    let n_tops = tops(&p.n);
    let l_tops = tops(&p.l);
    let outside: Vec<Cube> = n_tops.iter().filter(|q| !f.contains(q)).copied().collect();
    let positive_invariance = ConditionResult::from_offending(positive_invariance_violations(f, &p.n, &p.l, &n_tops));
    let mut exit = exit_violations(f, &p.n, &p.l, &n_tops);
    exit.extend(outside);
    let exit_set = ConditionResult::from_offending(exit);
    let k_tops: CubeSet = n_tops.difference(&l_tops).copied().collect();
    let (isolation, isolation_evidence) = isolation_of(f, &k_tops, model);
    IndexPairDiagnostics {
        positive_invariance,
        exit_set,
        isolation,
        isolation_evidence,
    }
}

/// An index pair with the top cubes that generate it.
#[derive(Clone, Debug, PartialEq)]
pub struct BuiltPair {
    pub pair: CubePair,
    pub n_tops: CubeSet,
    pub l_tops: CubeSet,
    pub evidence: IsolationEvidence,
}

/// `N` = `iso` plus its one-step collar inside the domain; `L` = cubes whose
/// images leave `N`, grown until positive invariance and the exit condition
/// hold cell by cell.
pub fn build_index_pair(
    iso: &CubeSet,
    f: &MultivaluedCubeMap,
    model: Option<&FlowModel>,
) -> Result<BuiltPair, IndexPairError> {
    let grid = f.grid;
    if let Some(q) = iso.iter().find(|q| !f.contains(q)) {
        return Err(IndexPairError::NotInDomain(*q));
    }
    let mut n_tops: CubeSet = iso.iter().filter(|q| q.is_top()).copied().collect();
    for q in iso {
        n_tops.extend(f.image(q).iter().filter(|r| f.contains(r)).copied());
    }
    let n = grid.closure(&n_tops);
    let mut l_tops: CubeSet = n_tops
        .iter()
        .filter(|q| f.image(q).iter().any(|r| !n_tops.contains(r)))
        .copied()
        .collect();
    loop {
        let l = grid.closure(&l_tops);
        let mut bad = positive_invariance_violations(f, &n, &l, &n_tops);
        bad.extend(exit_violations(f, &n, &l, &n_tops));
        let mut grew = false;
        for cell in bad {
            for t in grid.cofaces_top(&cell) {
                if n_tops.contains(&t) && l_tops.insert(t) {
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    let l = grid.closure(&l_tops);
    let k_tops: CubeSet = n_tops.difference(&l_tops).copied().collect();
    if k_tops.is_empty() {
        return Err(IndexPairError::Refinement(
            "exit set swallowed the whole neighborhood; refine the grid or shrink h".into(),
        ));
    }
    let (iso_result, evidence) = isolation_of(f, &k_tops, model);
    let Some(evidence) = evidence else {
        return Err(IndexPairError::Refinement(format!(
            "cl(N \\ L) is not certified isolating; {} boundary cubes/faces fail (first: {:?}); refine the grid or shrink h",
            iso_result.offending.len(),
            iso_result.offending.first()
        )));
    };
    Ok(BuiltPair {
        pair: CubePair { grid, n, l },
        n_tops,
        l_tops,
        evidence,
    })
}

/// Widens `L` by `layers` rings of `N`-tops touching it and re-checks every
/// condition of the pair. A collar gives the exit set cubes whose short-time
/// flow stays inside it.
pub fn thicken_exit_set(
    built: &BuiltPair,
    f: &MultivaluedCubeMap,
    model: Option<&FlowModel>,
    layers: u32,
) -> Result<BuiltPair, IndexPairError> {
    let grid = f.grid;
    let mut l_tops = built.l_tops.clone();
    for _ in 0..layers {
        let ring: Vec<Cube> = l_tops
            .iter()
            .flat_map(|q| grid.tops_meeting(&q.bounds(grid.scale)))
            .filter(|t| built.n_tops.contains(t))
            .collect();
        l_tops.extend(ring);
    }
    let pair = CubePair {
        grid,
        n: built.pair.n.clone(),
        l: grid.closure(&l_tops),
    };
    let d = verify_index_pair(&pair, f, model);
    if !d.pass() {
        let first = [&d.positive_invariance, &d.exit_set, &d.isolation]
            .iter()
            .find_map(|c| c.offending.first().copied());
        return Err(IndexPairError::Refinement(format!(
            "exit set with a {layers}-layer collar is not an index pair (first offending cell: {first:?})"
        )));
    }
    Ok(BuiltPair {
        pair,
        n_tops: built.n_tops.clone(),
        l_tops,
        evidence: d.isolation_evidence.unwrap_or(IsolationEvidence::Combinatorial),
    })
}
