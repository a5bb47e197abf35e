use std::collections::BTreeMap;

use serde::Serialize;

use super::matrix::{solve_linear, GradedMatrix, Matrix};
use super::poly::{invariant_factors, Poly};
use super::scalar::{Field, Scalar};
use super::AlgebraError;

/// The automorphism obtained from an endomorphism by the Leray reduction,
/// with its conjugacy-class data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LerayReduced {
    pub reduced_dims: BTreeMap<i32, usize>,
    pub matrix: GradedMatrix,
    pub invariant_factors: BTreeMap<i32, Vec<Poly>>,
}

fn check_square(e: &GradedMatrix) -> Result<(), AlgebraError> {
    for (q, m) in e.blocks() {
        if !m.is_square() {
            return Err(AlgebraError::NotSquare {
                degree: q,
                rows: m.rows(),
                cols: m.cols(),
            });
        }
    }
    Ok(())
}

/// Basis of `ker(E^n)` per degree, `n` the block dimension.
pub fn generalized_kernel(e: &GradedMatrix) -> Result<BTreeMap<i32, Vec<Vec<Scalar>>>, AlgebraError> {
    check_square(e)?;
    Ok(e.blocks().map(|(q, m)| (q, m.pow(m.rows() as u32).kernel())).collect())
}

/// Leray reduction of one square block.
pub fn leray_block(m: &Matrix) -> Matrix {
    let field = m.field();
    let n = m.rows();
    let gker = m.pow(n as u32).kernel();
    let k = gker.len();

    // Extend the kernel basis by unit vectors to a basis of the whole space.
    let mut basis = gker.clone();
    for i in 0..n {
        if basis.len() == n {
            break;
        }
        let mut e = vec![field.zero(); n];
        e[i] = field.one();
        let mut trial = basis.clone();
        trial.push(e);
        if Matrix::from_columns(field, n, &trial).rank() == trial.len() {
            basis = trial;
        }
    }
    let p = Matrix::from_columns(field, n, &basis);
    let p_inv = p.inverse().expect("completed basis is invertible");
    // gker is invariant, so in the new basis the map is block upper triangular
    // and the lower-right block is the induced map on the quotient.
    let conj = p_inv.mul(m).mul(&p);
    let quotient = conj.block(k, n, k, n);

    // Generalized image of the induced map.
    let r = n - k;
    let power = quotient.pow(r as u32);
    let image_cols: Vec<Vec<Scalar>> = power.pivot_columns().into_iter().map(|j| power.column(j)).collect();
    let g = Matrix::from_columns(field, r, &image_cols);
    let d = image_cols.len();
    let mut reduced = Matrix::zeros(field, d, d);
    for (j, col) in image_cols.iter().enumerate() {
        let target = quotient.mul_vec(col);
        let x = solve_linear(&g, &target)
            .expect("dimensions agree")
            .solution
            .expect("generalized image is invariant");
        for (i, v) in x.into_iter().enumerate() {
            reduced.set(i, j, v);
        }
    }
    reduced
}

/// Leray reduction `R(E)`: quotient by the generalized kernel, then
/// restriction to the generalized image.
pub fn leray_reduce(e: &GradedMatrix) -> Result<LerayReduced, AlgebraError> {
    check_square(e)?;
    let field = e.field();
    let mut matrix = GradedMatrix::new(field);
    let mut reduced_dims = BTreeMap::new();
    for (q, m) in e.blocks() {
        let r = leray_block(m);
        reduced_dims.insert(q, r.rows());
        matrix.insert(q, r);
    }
    let invariant_factors = conjugacy_invariants(&matrix)?;
    Ok(LerayReduced {
        reduced_dims,
        matrix,
        invariant_factors,
    })
}

/// Per-degree invariant factors of an automorphism; equal lists per degree
/// exactly when the inputs are conjugate.
pub fn conjugacy_invariants(m: &GradedMatrix) -> Result<BTreeMap<i32, Vec<Poly>>, AlgebraError> {
    check_square(m)?;
    let mut out = BTreeMap::new();
    for (q, block) in m.blocks() {
        if !block.is_invertible() {
            return Err(AlgebraError::Singular { degree: q });
        }
        let factors = invariant_factors(block);
        if !factors.is_empty() {
            out.insert(q, factors);
        }
    }
    Ok(out)
}

/// One Lefschetz number per iterate, with the fixed-point verdict for the
/// first iterate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LefschetzNumbers {
    pub values: Vec<Scalar>,
    pub fixed_point_detected: bool,
}

/// `Λ(Πⁿ) = Σ_q (-1)^q trace(R_qⁿ)` for `n = 1..=n_max`. Requires Q coefficients.
pub fn lefschetz_numbers(l: &LerayReduced, n_max: u32) -> Result<LefschetzNumbers, AlgebraError> {
    let field = l.matrix.field();
    if field != Field::Rational {
        return Err(AlgebraError::LefschetzNeedsRationals(field.characteristic()));
    }
    if n_max == 0 {
        return Err(AlgebraError::Parse("n_max must be positive".into()));
    }
    let mut values = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let mut acc = field.zero();
        for (q, m) in l.matrix.blocks() {
            let t = m.pow(n).trace();
            acc = if q.rem_euclid(2) == 0 { &acc + &t } else { &acc - &t };
        }
        values.push(acc);
    }
    let fixed_point_detected = !values[0].is_zero();
    Ok(LefschetzNumbers {
        values,
        fixed_point_detected,
    })
}
