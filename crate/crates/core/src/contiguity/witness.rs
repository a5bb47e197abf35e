use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::basis::{movable_basis, SectionBasis};
use super::mask::MovabilityMask;
use super::system::{coefficient_matrix, lift_chain, solve_slice, ContiguitySolution, SliceSolve, SolutionJson};
use super::ContiguityError;
use crate::algebra::{Field, GradedMatrix, MatrixJson};
use crate::cubical::{Chain, ChainJson, CoveringGrid, Cube};

/// The matrix `A = [aᵢⱼ]` with every witness pair `(c, d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContiguityWitness {
    pub field: Field,
    pub from: i32,
    pub to: i32,
    /// Section representatives `uⱼ`, used at both ends of the slice.
    pub basis: BTreeMap<usize, Vec<Chain>>,
    pub a: GradedMatrix,
    pub solutions: BTreeMap<usize, Vec<ContiguitySolution>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessJson {
    pub field: Field,
    pub from: i32,
    pub to: i32,
    pub basis: BTreeMap<usize, Vec<ChainJson>>,
    pub a: Vec<MatrixJson>,
    pub solutions: BTreeMap<usize, Vec<SolutionJson>>,
}

impl ContiguityWitness {
    pub fn to_json(&self) -> WitnessJson {
        WitnessJson {
            field: self.field,
            from: self.from,
            to: self.to,
            basis: self
                .basis
                .iter()
                .map(|(q, r)| (*q, r.iter().map(Chain::to_json).collect()))
                .collect(),
            a: self.a.to_json(),
            solutions: self
                .solutions
                .iter()
                .map(|(q, s)| (*q, s.iter().map(ContiguitySolution::to_json).collect()))
                .collect(),
        }
    }

    pub fn from_json(j: &WitnessJson) -> Result<ContiguityWitness, ContiguityError> {
        let field = j.field;
        let bad = |e: String| ContiguityError::Json(e);
        let mut basis = BTreeMap::new();
        for (q, reps) in &j.basis {
            let chains = reps
                .iter()
                .map(|c| Chain::from_json(c, field).map_err(|e| bad(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            basis.insert(*q, chains);
        }
        let mut solutions = BTreeMap::new();
        for (q, sols) in &j.solutions {
            let s = sols
                .iter()
                .map(|s| ContiguitySolution::from_json(s, field))
                .collect::<Result<Vec<_>, _>>()?;
            solutions.insert(*q, s);
        }
        Ok(ContiguityWitness {
            field,
            from: j.from,
            to: j.to,
            basis,
            a: GradedMatrix::from_json(field, &j.a).map_err(|e| bad(e.to_string()))?,
            solutions,
        })
    }
}

/// Builds the witness from solved slices; every basis cycle must have a
/// solution.
pub fn assemble_a(
    field: Field,
    basis: &SectionBasis,
    end: &SectionBasis,
    solutions: &BTreeMap<usize, Vec<ContiguitySolution>>,
) -> Result<ContiguityWitness, ContiguityError> {
    for q in basis.degrees() {
        let have = solutions.get(&q).map_or(0, Vec::len);
        if have != basis.dim(q) {
            return Err(ContiguityError::MissingSolve {
                degree: q,
                column: have,
            });
        }
    }
    Ok(ContiguityWitness {
        field,
        from: basis.angle,
        to: end.angle,
        basis: basis.representatives.clone(),
        a: coefficient_matrix(field, solutions, end, basis),
        solutions: solutions.clone(),
    })
}

/// The section basis at the far end of the slice: the same cycles at angle
/// `period`.
fn at_end(basis: &SectionBasis, period: i32) -> SectionBasis {
    SectionBasis {
        angle: period,
        ..basis.clone()
    }
}

/// Everything the contiguity computation produces over one period.
#[derive(Clone, Debug)]
pub struct ContiguityRun {
    pub basis: SectionBasis,
    pub slice: SliceSolve,
    pub witness: ContiguityWitness,
}

impl ContiguityRun {
    /// Witness built from a kernel-shifted solution of every system.
    pub fn variant(&self, cov: &CoveringGrid, seed: u64) -> Result<ContiguityWitness, ContiguityError> {
        let sols = self.slice.variant(cov, &self.basis, seed);
        assemble_a(self.witness.field, &self.basis, &at_end(&self.basis, cov.period), &sols)
    }

    pub fn kernel_dims(&self) -> BTreeMap<usize, usize> {
        self.slice.systems.iter().map(|(q, s)| (*q, s.kernel_dim())).collect()
    }

    pub fn coefficients_unique(&self) -> bool {
        self.slice.systems.values().all(|s| s.coefficients_unique())
    }
}

/// Movable basis at angle 0, one solve per basis cycle, and `A`.
pub fn contiguity_witness(
    cov: &CoveringGrid,
    mask: &MovabilityMask,
    field: Field,
) -> Result<ContiguityRun, ContiguityError> {
    let basis = movable_basis(cov, mask, 0, field)?;
    let end = at_end(&basis, cov.period);
    let slice = solve_slice(cov, mask, field, &basis, &end)?;
    let witness = assemble_a(field, &basis, &end, &slice.solutions)?;
    Ok(ContiguityRun { basis, slice, witness })
}

/// `A` obtained by solving over `[0, ½]` and `[½, 1]` separately.
#[derive(Clone, Debug)]
pub struct HalfComposition {
    pub middle: SectionBasis,
    pub first: GradedMatrix,
    pub second: GradedMatrix,
    pub product: GradedMatrix,
}

pub fn compose_halves(
    cov: &CoveringGrid,
    mask: &MovabilityMask,
    basis: &SectionBasis,
    field: Field,
) -> Result<HalfComposition, ContiguityError> {
    let middle = movable_basis(cov, mask, cov.period / 2, field)?;
    let end = at_end(basis, cov.period);
    let s1 = solve_slice(cov, mask, field, basis, &middle)?;
    let s2 = solve_slice(cov, mask, field, &middle, &end)?;
    let first = s1.matrix(field, &middle, basis);
    let second = s2.matrix(field, &end, &middle);
    let product = second.mul(&first);
    Ok(HalfComposition {
        middle,
        first,
        second,
        product,
    })
}

/// A failed witness check, naming the offending cube.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessViolation {
    /// `u×from − Σ aᵢ wᵢ×to − ∂c − d` is nonzero on this cube.
    Identity { degree: usize, column: usize, cube: Cube },
    /// A cube of `c` is not certified `N`-movable.
    CSupport { degree: usize, column: usize, cube: Cube },
    /// A cube of `d` is not certified `L`-movable.
    DSupport { degree: usize, column: usize, cube: Cube },
    /// A cube of an end cycle with nonzero weight is not `N`-movable.
    EndSupport { degree: usize, column: usize, cube: Cube },
    Shape {
        degree: usize,
        column: usize,
        detail: String,
    },
}

/// Re-checks one solution from scratch: the support discipline against the
/// given movability predicates, then the chain identity term by term.
#[allow(clippy::too_many_arguments)]
pub fn check_solution(
    cov: &CoveringGrid,
    field: Field,
    source: &Chain,
    targets: &[Chain],
    (from, to): (i32, i32),
    sol: &ContiguitySolution,
    n_movable: &dyn Fn(&Cube) -> bool,
    l_movable: &dyn Fn(&Cube) -> bool,
) -> Result<(), WitnessViolation> {
    let (degree, column) = (sol.degree, sol.column);
    let shape = |detail: String| WitnessViolation::Shape { degree, column, detail };
    if sol.coefficients.len() != targets.len() {
        return Err(shape(format!(
            "{} coefficients for {} target cycles",
            sol.coefficients.len(),
            targets.len()
        )));
    }
    if sol.c.degree() != degree + 1 || sol.d.degree() != degree || source.degree() != degree {
        return Err(shape("chain degrees do not match".into()));
    }
    let grid = cov.lifted_pair.grid;
    let start = lift_chain(cov, source, from);
    let mut lhs = start.clone();
    let mut ends = Vec::new();
    for (a, w) in sol.coefficients.iter().zip(targets) {
        let lifted = lift_chain(cov, w, to);
        lhs.axpy(&-a, &lifted);
        if !a.is_zero() {
            ends.push(lifted);
        }
    }
    let mut rhs = sol.c.boundary(&grid, field);
    rhs.axpy(&field.one(), &sol.d);
    if let Some(cube) = sol.c.support().find(|c| !n_movable(c)) {
        return Err(WitnessViolation::CSupport {
            degree,
            column,
            cube: *cube,
        });
    }
    if let Some(cube) = sol.d.support().find(|c| !l_movable(c)) {
        return Err(WitnessViolation::DSupport {
            degree,
            column,
            cube: *cube,
        });
    }
    if let Some(cube) = std::iter::once(&start)
        .chain(&ends)
        .flat_map(|z| z.support())
        .find(|c| !n_movable(c))
    {
        return Err(WitnessViolation::EndSupport {
            degree,
            column,
            cube: *cube,
        });
    }
    if let Some((cube, _)) = lhs.sub(&rhs).terms().next() {
        return Err(WitnessViolation::Identity {
            degree,
            column,
            cube: *cube,
        });
    }
    Ok(())
}

/// All violations of a witness; empty iff it verifies. The columns of `A`
/// must also agree with the stored coefficients.
pub fn verify_witness(
    cov: &CoveringGrid,
    w: &ContiguityWitness,
    n_movable: &dyn Fn(&Cube) -> bool,
    l_movable: &dyn Fn(&Cube) -> bool,
) -> Vec<WitnessViolation> {
    let mut out = Vec::new();
    for (q, reps) in &w.basis {
        let sols = w.solutions.get(q).map(Vec::as_slice).unwrap_or(&[]);
        if sols.len() != reps.len() {
            out.push(WitnessViolation::Shape {
                degree: *q,
                column: sols.len(),
                detail: format!("{} solutions for {} basis cycles", sols.len(), reps.len()),
            });
            continue;
        }
        for sol in sols {
            let Some(u) = reps.get(sol.column) else {
                out.push(WitnessViolation::Shape {
                    degree: *q,
                    column: sol.column,
                    detail: "column outside the basis".into(),
                });
                continue;
            };
            if let Err(v) = check_solution(cov, w.field, u, reps, (w.from, w.to), sol, n_movable, l_movable) {
                out.push(v);
            }
            let block = w.a.block(*q as i32);
            let agrees = block.is_some_and(|m| {
                m.rows() == sol.coefficients.len()
                    && (0..m.rows()).all(|i| m.get(i, sol.column) == &sol.coefficients[i])
            });
            if !agrees {
                out.push(WitnessViolation::Shape {
                    degree: *q,
                    column: sol.column,
                    detail: "column of A differs from the solution coefficients".into(),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Matrix;
    use crate::contiguity::movability_mask;
    use crate::cubical::{lift_to_cover, Grid};
    use crate::flow::Expr;
    use crate::index_pair::{build_index_pair, outer_approximation, thicken_exit_set};

    const Q: Field = Field::Rational;

    fn orbit(sign: f64) -> (CoveringGrid, FlowModel) {
        let g = Grid::circular(2, 3, 1);
        let dom = g.box_tops(&[-8, 0], &[8, 8]);
        let v = Expr::mul(vec![Expr::c(sign), Expr::x(0), Expr::Ln2]);
        let m = FlowModel::new(vec![v, Expr::c(1.0)], Some(1), 0.7, 0.125);
        let f = outer_approximation(&g, &dom, &m).unwrap();
        let built = build_index_pair(&dom, &f, Some(&m)).unwrap();
        let built = thicken_exit_set(&built, &f, Some(&m), 1).unwrap();
        (lift_to_cover(&built.pair).unwrap(), m)
    }

    use crate::flow::FlowModel;

    fn check(cov: &CoveringGrid, mask: &MovabilityMask, w: &ContiguityWitness) {
        let v = verify_witness(cov, w, &|c| mask.is_n_movable(c), &|c| mask.is_l_movable(c));
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn attracting_orbit_gives_identity_in_degree_zero() {
        let (cov, m) = orbit(-1.0);
        let mask = movability_mask(&cov, &m);
        let run = contiguity_witness(&cov, &mask, Q).unwrap();
        assert_eq!(
            run.witness.a,
            GradedMatrix::from_blocks(Q, [(0, Matrix::identity(Q, 1))])
        );
        check(&cov, &mask, &run.witness);
        let sol = &run.witness.solutions[&0][0];
        assert!(sol.d.is_zero());
        assert!(run.kernel_dims()[&0] > 0);
        let other = run.variant(&cov, 7).unwrap();
        assert_ne!(other.solutions, run.witness.solutions);
        check(&cov, &mask, &other);
        let half = compose_halves(&cov, &mask, &run.basis, Q).unwrap();
        assert_eq!(half.product, run.witness.a);
    }

    #[test]
    fn repelling_orbit_gives_identity_in_degree_one() {
        let (cov, m) = orbit(1.0);
        let mask = movability_mask(&cov, &m);
        let run = contiguity_witness(&cov, &mask, Q).unwrap();
        assert_eq!(
            run.witness.a,
            GradedMatrix::from_blocks(Q, [(1, Matrix::identity(Q, 1))])
        );
        check(&cov, &mask, &run.witness);
        let sol = &run.witness.solutions[&1][0];
        assert!(!sol.d.is_zero());
        // The strip over the section interval: one square per slab and edge.
        let u = &run.basis.representatives[&1][0];
        assert_eq!(sol.c.len(), u.len() * 8);
        let other = run.variant(&cov, 3).unwrap();
        assert_ne!(other.solutions, run.witness.solutions);
        check(&cov, &mask, &other);
        let mut bad = run.witness.clone();
        let s = &mut bad.solutions.get_mut(&1).unwrap()[0];
        let (cube, _) = s.c.terms().next().map(|(c, v)| (*c, v.clone())).unwrap();
        s.c.add_term(cube, &Q.one());
        let v = verify_witness(&cov, &bad, &|c| mask.is_n_movable(c), &|c| mask.is_l_movable(c));
        assert!(matches!(v[0], WitnessViolation::Identity { .. }), "{v:?}");
    }

    #[test]
    fn transport_matches_on_orbits() {
        for sign in [-1.0, 1.0] {
            let (cov, m) = orbit(sign);
            let mask = movability_mask(&cov, &m);
            let run = contiguity_witness(&cov, &mask, Q).unwrap();
            let t = super::super::corollary_transport(&cov, &m, &run.basis, Q).unwrap();
            assert_eq!(t, run.witness.a);
        }
    }
}
