//! Univariate polynomials over the coefficient field and the invariant
//! factors of a square matrix (Smith form of `xI - M` over `F[x]`).

use std::fmt;

use serde::Serialize;

use super::matrix::Matrix;
use super::scalar::{Field, Scalar};

/// Polynomial with coefficients stored lowest degree first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly {
    field: Field,
    coeffs: Vec<Scalar>,
}

impl Poly {
    pub fn new(field: Field, mut coeffs: Vec<Scalar>) -> Poly {
        while coeffs.last().is_some_and(Scalar::is_zero) {
            coeffs.pop();
        }
        Poly { field, coeffs }
    }

    pub fn zero(field: Field) -> Poly {
        Poly::new(field, Vec::new())
    }

    pub fn constant(c: Scalar) -> Poly {
        Poly::new(c.field(), vec![c])
    }

    /// `x - root`.
    pub fn linear(root: &Scalar) -> Poly {
        let f = root.field();
        Poly::new(f, vec![-root, f.one()])
    }

    pub fn from_i64(field: Field, coeffs: &[i64]) -> Poly {
        Poly::new(field, coeffs.iter().map(|&c| field.from_i64(c)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial has no degree.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn leading(&self) -> Option<&Scalar> {
        self.coeffs.last()
    }

    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => self.clone(),
            Some(l) => {
                let inv = l.inv().unwrap();
                Poly::new(self.field, self.coeffs.iter().map(|c| c * &inv).collect())
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = self.field.zero();
        Poly::new(
            self.field,
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&zero) + other.coeffs.get(i).unwrap_or(&zero))
                .collect(),
        )
    }

    pub fn neg(&self) -> Poly {
        Poly::new(self.field, self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero(self.field);
        }
        let mut out = vec![self.field.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Poly::new(self.field, out)
    }

    /// Euclidean division: `(q, r)` with `self = q * d + r`, `deg r < deg d`.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let dd = d.degree().expect("polynomial division by zero");
        let lead_inv = d.leading().unwrap().inv().unwrap();
        let mut r = self.coeffs.clone();
        let mut q = vec![self.field.zero(); r.len().saturating_sub(dd)];
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1 - dd;
            let c = r.last().unwrap() * &lead_inv;
            for (i, dc) in d.coeffs.iter().enumerate() {
                r[k + i] = &r[k + i] - &(&c * dc);
            }
            q[k] = c;
            r.pop();
            while r.last().is_some_and(Scalar::is_zero) {
                r.pop();
            }
        }
        (Poly::new(self.field, q), Poly::new(self.field, r))
    }

    pub fn eval_matrix(&self, m: &Matrix) -> Matrix {
        let n = m.rows();
        let mut acc = Matrix::zeros(self.field, n, n);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(m).add(&Matrix::identity(self.field, n).scale(c));
        }
        acc
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let text = c.to_string();
            let text = text.strip_suffix("/1").unwrap_or(&text).to_string();
            let (neg, mag) = match text.strip_prefix('-') {
                Some(rest) => (true, rest.to_string()),
                None => (false, text),
            };
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let coeff = if mag == "1" && i > 0 { String::new() } else { mag };
            match i {
                0 => write!(f, "{coeff}")?,
                1 => write!(f, "{coeff}x")?,
                _ => write!(f, "{coeff}x^{i}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for Poly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Invariant factors of a square matrix: the non-unit diagonal of the Smith
/// form of `xI - M`, monic and ordered so each divides the next.
pub fn invariant_factors(m: &Matrix) -> Vec<Poly> {
    assert!(m.is_square());
    let field = m.field();
    let n = m.rows();
    let mut a: Vec<Vec<Poly>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut p = Poly::constant(-m.get(i, j));
                    if i == j {
                        p = p.add(&Poly::from_i64(field, &[0, 1]));
                    }
                    p
                })
                .collect()
        })
        .collect();

    for t in 0..n {
        loop {
            // Entry of least degree in the trailing block.
            let mut best: Option<(usize, usize, usize)> = None;
            for i in t..n {
                for j in t..n {
                    if let Some(d) = a[i][j].degree() {
                        if best.is_none_or(|(_, _, bd)| d < bd) {
                            best = Some((i, j, d));
                        }
                    }
                }
            }
            let Some((bi, bj, _)) = best else {
                break;
            };
            a.swap(t, bi);
            for row in a.iter_mut() {
                row.swap(t, bj);
            }
            let pivot = a[t][t].clone();
            let mut clean = true;
            for i in t + 1..n {
                if a[i][t].is_zero() {
                    continue;
                }
                let (q, r) = a[i][t].div_rem(&pivot);
                for j in t..n {
                    let v = a[i][j].sub(&q.mul(&a[t][j]));
                    a[i][j] = v;
                }
                clean &= r.is_zero();
            }
            for j in t + 1..n {
                if a[t][j].is_zero() {
                    continue;
                }
                let (q, r) = a[t][j].div_rem(&pivot);
                for row in a.iter_mut().skip(t) {
                    let v = row[j].sub(&q.mul(&row[t]));
                    row[j] = v;
                }
                clean &= r.is_zero();
            }
            if !clean {
                continue;
            }
            // The pivot must divide the whole trailing block.
            let offender = (t + 1..n)
                .flat_map(|i| (t + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| !a[i][j].is_zero() && !a[i][j].div_rem(&pivot).1.is_zero());
            match offender {
                Some((i, _)) => {
                    for j in t..n {
                        let v = a[t][j].add(&a[i][j]);
                        a[t][j] = v;
                    }
                }
                None => break,
            }
        }
    }

    let mut out: Vec<Poly> = (0..n)
        .map(|i| a[i][i].monic())
        .filter(|p| p.degree().is_some_and(|d| d > 0))
        .collect();
    out.sort_by_key(|p| p.degree());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: Field = Field::Rational;

    /// Minimal polynomial by searching for the first linear dependency among
    /// I, M, M^2, ... (independent of the Smith-form route).
    fn minimal_polynomial(m: &Matrix) -> Poly {
        let n = m.rows();
        let mut powers = vec![Matrix::identity(Q, n)];
        for k in 1..=n {
            powers.push(powers[k - 1].mul(m));
            let cols: Vec<Vec<Scalar>> = powers
                .iter()
                .map(|p| (0..n * n).map(|i| p.get(i / n, i % n).clone()).collect())
                .collect();
            let system = Matrix::from_columns(Q, n * n, &cols);
            if let Some(kv) = system.kernel().first() {
                return Poly::new(Q, kv.clone()).monic();
            }
        }
        unreachable!()
    }

    #[test]
    fn scalar_block() {
        let f = invariant_factors(&Matrix::from_i64(Q, &[&[2]]));
        assert_eq!(f, vec![Poly::from_i64(Q, &[-2, 1])]);
    }

    #[test]
    fn identity_block() {
        let f = invariant_factors(&Matrix::identity(Q, 2));
        assert_eq!(f, vec![Poly::from_i64(Q, &[-1, 1]); 2]);
    }

    #[test]
    fn rotation_block_matches_minimal_polynomial() {
        let m = Matrix::from_i64(Q, &[&[0, 1], &[-1, 0]]);
        let oracle = minimal_polynomial(&m);
        assert_eq!(oracle, Poly::from_i64(Q, &[1, 0, 1]));
        assert_eq!(invariant_factors(&m), vec![oracle]);
        assert_eq!(invariant_factors(&m)[0].to_string(), "x^2 + 1");
    }

    #[test]
    fn largest_factor_is_minimal_polynomial() {
        let m = Matrix::from_i64(Q, &[&[2, 1, 0], &[0, 2, 0], &[0, 0, 2]]);
        let f = invariant_factors(&m);
        assert_eq!(f.len(), 2);
        assert_eq!(f.last().unwrap(), &minimal_polynomial(&m));
        assert!(f[1].div_rem(&f[0]).1.is_zero());
        assert!(f.last().unwrap().eval_matrix(&m).is_zero());
    }

    #[test]
    fn display() {
        assert_eq!(Poly::from_i64(Q, &[-2, 1]).to_string(), "x - 2");
        assert_eq!(Poly::from_i64(Q, &[3, 0, -1]).to_string(), "-x^2 + 3");
    }
}
