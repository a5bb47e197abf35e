use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::cube::{Cube, CubeJson};
use super::grid::{CubeSet, Grid};
use super::CubicalError;
use crate::algebra::{Field, Scalar};

/// Finite linear combination of `degree`-dimensional cubes. Zero
/// coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    degree: usize,
    terms: BTreeMap<Cube, Scalar>,
}

impl Chain {
    pub fn zero(degree: usize) -> Chain {
        Chain {
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(degree: usize, terms: impl IntoIterator<Item = (Cube, Scalar)>) -> Chain {
        let mut c = Chain::zero(degree);
        for (q, v) in terms {
            c.add_term(q, &v);
        }
        c
    }

    pub fn cube(c: Cube, field: Field) -> Chain {
        Chain::from_terms(c.dim(), [(c, field.one())])
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Cube, &Scalar)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, c: &Cube) -> Option<&Scalar> {
        self.terms.get(c)
    }

    /// Cubes with nonzero coefficient.
    pub fn support(&self) -> impl Iterator<Item = &Cube> {
        self.terms.keys()
    }

    pub fn support_set(&self) -> CubeSet {
        self.terms.keys().copied().collect()
    }

    pub fn add_term(&mut self, c: Cube, v: &Scalar) {
        assert_eq!(c.dim(), self.degree, "cube dimension differs from chain degree");
        if v.is_zero() {
            return;
        }
        match self.terms.get_mut(&c) {
            Some(w) => {
                let s = &*w + v;
                if s.is_zero() {
                    self.terms.remove(&c);
                } else {
                    *w = s;
                }
            }
            None => {
                self.terms.insert(c, v.clone());
            }
        }
    }

    /// `self += coef * other`.
    pub fn axpy(&mut self, coef: &Scalar, other: &Chain) {
        if coef.is_zero() {
            return;
        }
        for (c, v) in &other.terms {
            self.add_term(*c, &(coef * v));
        }
    }

    pub fn scaled(&self, coef: &Scalar) -> Chain {
        let mut out = Chain::zero(self.degree);
        out.axpy(coef, self);
        out
    }

    pub fn sub(&self, other: &Chain) -> Chain {
        let mut out = self.clone();
        for (c, v) in &other.terms {
            out.add_term(*c, &-v);
        }
        out
    }

    /// Keeps the terms whose cube satisfies `keep`.
    pub fn restricted(&self, keep: impl Fn(&Cube) -> bool) -> Chain {
        Chain {
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .filter(|(c, _)| keep(c))
                .map(|(c, v)| (*c, v.clone()))
                .collect(),
        }
    }

    /// Applies a cube relabeling (e.g. lifting or projecting) termwise.
    pub fn map_cubes(&self, f: impl Fn(&Cube) -> Cube) -> Chain {
        let mut out = Chain::zero(self.degree);
        for (c, v) in &self.terms {
            let m = f(c);
            out.degree = m.dim();
            out.add_term(m, v);
        }
        out
    }

    pub fn boundary(&self, grid: &Grid, field: Field) -> Chain {
        let mut out = Chain::zero(self.degree.saturating_sub(1));
        if self.degree == 0 {
            return out;
        }
        for (c, v) in &self.terms {
            for (f, s) in grid.signed_faces(c) {
                out.add_term(f, &(v * &field.from_i64(s)));
            }
        }
        out
    }

    pub fn to_json(&self) -> ChainJson {
        ChainJson {
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|(c, v)| (CubeJson::from(c), v.to_string()))
                .collect(),
        }
    }

    pub fn from_json(j: &ChainJson, field: Field) -> Result<Chain, CubicalError> {
        let mut out = Chain::zero(j.degree);
        for (c, v) in &j.terms {
            let cube = c
                .to_cube()
                .ok_or_else(|| CubicalError::Json(format!("invalid cube {c:?}")))?;
            if cube.dim() != j.degree {
                return Err(CubicalError::Json(format!(
                    "cube {cube:?} in a degree-{} chain",
                    j.degree
                )));
            }
            let s = field.parse(v).map_err(|e| CubicalError::Json(e.to_string()))?;
            out.add_term(cube, &s);
        }
        Ok(out)
    }
}

/// Signed codimension-one faces of `q` as a chain.
pub fn boundary_chain(q: &Cube, grid: &Grid, field: Field) -> Chain {
    Chain::cube(*q, field).boundary(grid, field)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainJson {
    pub degree: usize,
    pub terms: Vec<(CubeJson, String)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: Field = Field::Rational;

    #[test]
    fn interval_boundary() {
        let g = Grid::flat(1, 1);
        let b = boundary_chain(&Cube::new(&[0], 1), &g, Q);
        assert_eq!(b.coefficient(&Cube::vertex(&[1])), Some(&Q.from_i64(1)));
        assert_eq!(b.coefficient(&Cube::vertex(&[0])), Some(&Q.from_i64(-1)));
        assert!(boundary_chain(&Cube::vertex(&[0]), &g, Q).is_zero());
    }

    #[test]
    fn square_boundary_squares_to_zero() {
        let g = Grid::flat(2, 1);
        let b = boundary_chain(&Cube::top(&[0, 0]), &g, Q);
        assert_eq!(b.len(), 4);
        assert!(b.boundary(&g, Q).is_zero());
        let f2 = Field::prime(2).unwrap();
        let b2 = boundary_chain(&Cube::top(&[0, 0]), &g, f2);
        assert!(b2.terms().all(|(_, v)| v.is_one()));
    }

    #[test]
    fn json_round_trip() {
        let g = Grid::flat(3, 2);
        let b = boundary_chain(&Cube::top(&[1, -2, 0]), &g, Q);
        let j = serde_json::to_string(&b.to_json()).unwrap();
        let back: ChainJson = serde_json::from_str(&j).unwrap();
        assert_eq!(Chain::from_json(&back, Q).unwrap(), b);
    }
}
