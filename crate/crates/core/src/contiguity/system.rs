use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::basis::SectionBasis;
use super::mask::MovabilityMask;
use super::ContiguityError;
use crate::algebra::{ColumnReduction, Field, GradedMatrix, Matrix, Scalar, SparseVec};
use crate::cubical::{Chain, ChainJson, CoveringGrid, Cube, CubeSet, Grid};

/// Drops the angular coordinate of a lifted cube.
pub(crate) fn project(c: &Cube, axis: usize) -> Cube {
    Cube::new(c.base(), c.extent() & !(1 << axis)).drop_axis(axis)
}

fn angle_range(c: &Cube, axis: usize) -> (i32, i32) {
    let lo = c.base()[axis];
    (lo, lo + c.extends(axis) as i32)
}

/// Lifts a section chain to the slice at grid angle `a`.
pub fn lift_chain(cov: &CoveringGrid, z: &Chain, a: i32) -> Chain {
    z.map_cubes(|c| cov.lift_section_cube(c, a))
}

/// One exact solution of `u×from − Σ aᵢ wᵢ×to = ∂c + d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContiguitySolution {
    pub degree: usize,
    /// Index of `u` in its basis.
    pub column: usize,
    pub coefficients: Vec<Scalar>,
    /// Lifted `(q+1)`-chain in `n_movable`.
    pub c: Chain,
    /// Lifted `q`-chain in `l_movable`.
    pub d: Chain,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionJson {
    pub degree: usize,
    pub column: usize,
    pub coefficients: Vec<String>,
    pub c: ChainJson,
    pub d: ChainJson,
}

impl ContiguitySolution {
    pub fn to_json(&self) -> SolutionJson {
        SolutionJson {
            degree: self.degree,
            column: self.column,
            coefficients: self.coefficients.iter().map(Scalar::to_text).collect(),
            c: self.c.to_json(),
            d: self.d.to_json(),
        }
    }

    pub fn from_json(j: &SolutionJson, field: Field) -> Result<ContiguitySolution, ContiguityError> {
        let bad = |e: String| ContiguityError::Json(e);
        Ok(ContiguitySolution {
            degree: j.degree,
            column: j.column,
            coefficients: j
                .coefficients
                .iter()
                .map(|s| field.parse(s).map_err(|e| bad(e.to_string())))
                .collect::<Result<_, _>>()?,
            c: Chain::from_json(&j.c, field).map_err(|e| bad(e.to_string()))?,
            d: Chain::from_json(&j.d, field).map_err(|e| bad(e.to_string()))?,
        })
    }
}

/// The linear system of one degree over the angular slice `[from, to]`.
///
/// Unknowns are the coefficients `aᵢ` of `wᵢ×to` followed by the
/// coefficients of `c` on `n_movable` `(q+1)`-cubes; `d` absorbs every
/// `l_movable` row, so only the other rows are equations.
#[derive(Clone, Debug)]
pub struct ContiguitySystem {
    pub degree: usize,
    pub from: i32,
    pub to: i32,
    field: Field,
    grid: Grid,
    axis: usize,
    rows: HashMap<Cube, usize>,
    row_cubes: Vec<Cube>,
    targets: Vec<Chain>,
    c_cubes: Vec<Cube>,
    reduction: ColumnReduction,
    kernel: Vec<SparseVec>,
}

/// Angular-major order keeps the reduction local along the time direction.
fn angular_key(c: &Cube, axis: usize) -> (i32, bool, Cube) {
    (c.base()[axis], c.extends(axis), *c)
}

/// Section cubes within `layers` rings of top cubes touching `support`.
fn neighbourhood(grid: &Grid, support: &CubeSet, layers: u32) -> CubeSet {
    let mut tops: CubeSet = support
        .iter()
        .flat_map(|c| grid.tops_meeting(&c.bounds(grid.scale)))
        .collect();
    for _ in 1..layers {
        let ring: Vec<Cube> = tops
            .iter()
            .flat_map(|t| grid.tops_meeting(&t.bounds(grid.scale)))
            .collect();
        tops.extend(ring);
    }
    let mut out = grid.closure(&tops);
    out.extend(support.iter().copied());
    out
}

impl ContiguitySystem {
    /// Builds the system whose targets are the lifts of `targets` at `to`.
    /// With `layers`, the unknowns of `c` are limited to lifted cubes over a
    /// section neighbourhood of the cycles; every solution of the smaller
    /// system solves the full one.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        cov: &CoveringGrid,
        mask: &MovabilityMask,
        field: Field,
        degree: usize,
        sources: &[Chain],
        targets: &[Chain],
        (from, to): (i32, i32),
        layers: Option<u32>,
    ) -> ContiguitySystem {
        let axis = cov.angular_axis;
        let grid = cov.lifted_pair.grid;
        let region = layers.map(|k| {
            let support: CubeSet = sources
                .iter()
                .chain(targets)
                .flat_map(|z| z.support().copied())
                .collect();
            neighbourhood(&cov.section_grid(), &support, k)
        });
        let mut c_cubes: Vec<Cube> = mask
            .n_movable
            .iter()
            .filter(|c| c.dim() == degree + 1)
            .filter(|c| {
                let (lo, hi) = angle_range(c, axis);
                from <= lo && hi <= to
            })
            .filter(|c| region.as_ref().map_or(true, |r| r.contains(&project(c, axis))))
            .copied()
            .collect();
        c_cubes.sort_by_key(|c| angular_key(c, axis));
        let lifted_targets: Vec<Chain> = targets.iter().map(|z| lift_chain(cov, z, to)).collect();
        let boundaries: Vec<Chain> = c_cubes
            .iter()
            .map(|c| Chain::cube(*c, field).boundary(&grid, field))
            .collect();
        let mut row_cubes: Vec<Cube> = lifted_targets
            .iter()
            .chain(&boundaries)
            .flat_map(|z| z.support().copied())
            .chain(sources.iter().flat_map(|z| lift_chain(cov, z, from).support_set()))
            .filter(|c| !mask.is_l_movable(c))
            .collect::<CubeSet>()
            .into_iter()
            .collect();
        row_cubes.sort_by_key(|c| angular_key(c, axis));
        let rows: HashMap<Cube, usize> = row_cubes.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let to_vec = |z: &Chain| -> SparseVec {
            SparseVec::from_pairs(
                z.terms()
                    .filter_map(|(c, s)| rows.get(c).map(|&i| (i, s.clone())))
                    .collect(),
            )
        };
        let columns: Vec<SparseVec> = lifted_targets.iter().chain(&boundaries).map(to_vec).collect();
        let reduction = ColumnReduction::new(field, columns);
        let kernel = reduction
            .zero_columns()
            .map(|j| reduction.transform(j).clone())
            .collect();
        ContiguitySystem {
            degree,
            from,
            to,
            field,
            grid,
            axis,
            rows,
            row_cubes,
            targets: lifted_targets,
            c_cubes,
            reduction,
            kernel,
        }
    }

    pub fn unknowns(&self) -> usize {
        self.reduction.ncols()
    }

    pub fn equations(&self) -> usize {
        self.row_cubes.len()
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel.len()
    }

    /// Whether the coefficient vector `a` is forced: no kernel element moves it.
    pub fn coefficients_unique(&self) -> bool {
        let n = self.targets.len();
        self.kernel.iter().all(|k| k.entries().iter().all(|(i, _)| *i >= n))
    }

    pub fn pivot_trace(&self) -> &[(usize, usize)] {
        self.reduction.pivot_trace()
    }

    fn vector(&self, z: &Chain) -> SparseVec {
        SparseVec::from_pairs(
            z.terms()
                .filter_map(|(c, s)| self.rows.get(c).map(|&i| (i, s.clone())))
                .collect(),
        )
    }

    /// A particular solution for the source cycle lifted at `from`.
    pub fn solve_raw(&self, source: &Chain, cov: &CoveringGrid) -> Result<SparseVec, ContiguityError> {
        let target = self.vector(&lift_chain(cov, source, self.from));
        self.reduction.solve(&target).map_err(|residual| {
            let (low, _) = residual.low().expect("nonzero residual");
            ContiguityError::Infeasible {
                degree: self.degree,
                cube: Some(self.row_cubes[low]),
                residual_rows: residual.len(),
            }
        })
    }

    /// Turns unknowns into `(a, c, d)`; `d` is whatever remains of the
    /// identity and lies on `l_movable` rows.
    pub fn solution(&self, cov: &CoveringGrid, source: &Chain, column: usize, x: &SparseVec) -> ContiguitySolution {
        let n = self.targets.len();
        let mut coefficients = vec![self.field.zero(); n];
        let mut c = Chain::zero(self.degree + 1);
        for (j, s) in x.entries() {
            if *j < n {
                coefficients[*j] = s.clone();
            } else {
                c.add_term(self.c_cubes[j - n], s);
            }
        }
        let mut d = lift_chain(cov, source, self.from);
        for (a, t) in coefficients.iter().zip(&self.targets) {
            d.axpy(&-a, t);
        }
        d = d.sub(&c.boundary(&self.grid, self.field));
        ContiguitySolution {
            degree: self.degree,
            column,
            coefficients,
            c,
            d,
        }
    }

    /// `x` plus a random combination of kernel vectors with coefficients in
    /// `-3..=3`, not all zero when the kernel is nonempty.
    pub fn perturb(&self, x: &SparseVec, rng: &mut ChaCha8Rng) -> SparseVec {
        let mut y = x.clone();
        if self.kernel.is_empty() {
            return y;
        }
        let mut any = false;
        for k in &self.kernel {
            let r: i64 = rng.gen_range(-3..=3);
            if r != 0 {
                any = true;
                y.axpy(&self.field.from_i64(r), k);
            }
        }
        if !any {
            y.axpy(&self.field.one(), &self.kernel[rng.gen_range(0..self.kernel.len())]);
        }
        y
    }

    pub fn axis(&self) -> usize {
        self.axis
    }
}

/// Neighbourhood sizes tried in order; `None` is the whole lifted pair.
const LAYER_SCHEDULE: [Option<u32>; 3] = [Some(1), Some(3), None];

/// Solved systems for one slice, one per degree.
#[derive(Clone, Debug)]
pub struct SliceSolve {
    pub from: i32,
    pub to: i32,
    pub systems: BTreeMap<usize, ContiguitySystem>,
    /// Particular solutions per degree, indexed by source column.
    pub raw: BTreeMap<usize, Vec<SparseVec>>,
    pub solutions: BTreeMap<usize, Vec<ContiguitySolution>>,
}

/// Solves every source cycle of `sources` (at angle `from`) against the
/// basis `targets` (at angle `to`), widening the unknowns until all
/// sources are solvable.
pub fn solve_slice(
    cov: &CoveringGrid,
    mask: &MovabilityMask,
    field: Field,
    sources: &SectionBasis,
    targets: &SectionBasis,
) -> Result<SliceSolve, ContiguityError> {
    let (from, to) = (sources.angle, targets.angle);
    let mut out = SliceSolve {
        from,
        to,
        systems: BTreeMap::new(),
        raw: BTreeMap::new(),
        solutions: BTreeMap::new(),
    };
    let degrees: BTreeSet<usize> = sources.degrees().chain(targets.degrees()).collect();
    for q in degrees {
        let src = sources.representatives.get(&q).cloned().unwrap_or_default();
        let tgt = targets.representatives.get(&q).cloned().unwrap_or_default();
        let mut last_err = None;
        let mut done = false;
        for layers in LAYER_SCHEDULE {
            let sys = ContiguitySystem::build(cov, mask, field, q, &src, &tgt, (from, to), layers);
            let xs: Vec<Result<SparseVec, ContiguityError>> = src.par_iter().map(|u| sys.solve_raw(u, cov)).collect();
            match xs.into_iter().collect::<Result<Vec<_>, _>>() {
                Ok(xs) => {
                    let sols = src
                        .iter()
                        .zip(&xs)
                        .enumerate()
                        .map(|(j, (u, x))| sys.solution(cov, u, j, x))
                        .collect();
                    out.solutions.insert(q, sols);
                    out.raw.insert(q, xs);
                    out.systems.insert(q, sys);
                    done = true;
                    break;
                }
                Err(e) => last_err = Some(e),
            }
        }
        if !done {
            return Err(last_err.expect("schedule is nonempty"));
        }
    }
    Ok(out)
}

impl SliceSolve {
    pub fn matrix(&self, field: Field, targets: &SectionBasis, sources: &SectionBasis) -> GradedMatrix {
        coefficient_matrix(field, &self.solutions, targets, sources)
    }

    /// Hash of every pivot decision, for provenance.
    pub fn pivot_hash(&self) -> String {
        let mut h = Sha256::new();
        for (q, sys) in &self.systems {
            h.update((*q as u64).to_le_bytes());
            for (c, r) in sys.pivot_trace() {
                h.update((*c as u64).to_le_bytes());
                h.update((*r as u64).to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// Another exact solution set, shifted by random kernel elements.
    pub fn variant(
        &self,
        cov: &CoveringGrid,
        sources: &SectionBasis,
        seed: u64,
    ) -> BTreeMap<usize, Vec<ContiguitySolution>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = BTreeMap::new();
        for (q, sys) in &self.systems {
            let src = &sources.representatives[q];
            let sols = self.raw[q]
                .iter()
                .enumerate()
                .map(|(j, x)| sys.solution(cov, &src[j], j, &sys.perturb(x, &mut rng)))
                .collect();
            out.insert(*q, sols);
        }
        out
    }
}

/// The graded matrix whose column `j` in degree `q` holds the coefficients
/// of source `j`.
pub fn coefficient_matrix(
    field: Field,
    solutions: &BTreeMap<usize, Vec<ContiguitySolution>>,
    targets: &SectionBasis,
    sources: &SectionBasis,
) -> GradedMatrix {
    let mut out = GradedMatrix::new(field);
    for q in sources.degrees().chain(targets.degrees()) {
        let mut m = Matrix::zeros(field, targets.dim(q), sources.dim(q));
        for s in solutions.get(&q).into_iter().flatten() {
            for (i, a) in s.coefficients.iter().enumerate() {
                m.set(i, s.column, a.clone());
            }
        }
        out.insert(q as i32, m);
    }
    out
}
