use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cubical::{CoveringGrid, Cube, CubeSet, Grid};
use crate::flow::{box_from_bounds, rough_enclosure, FlowModel};

/// Lifted cubes whose `[0, h]` flow tube stays in `Ñ` (resp. `L̃`).
///
/// Tubes are computed once per base cube: the lift of `N` to the full cover
/// is periodic in the angle, so a lifted cube is movable iff its base cube
/// is, and containment is tested in the periodic base grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MovabilityMask {
    pub n_movable: CubeSet,
    pub l_movable: CubeSet,
    /// Validated tube of every base cube of `N` (model units).
    pub tubes: BTreeMap<Cube, Vec<(f64, f64)>>,
    /// Base cubes whose tube could not be validated; excluded from both sets.
    pub unvalidated: Vec<Cube>,
}

/// Base-grid cube carrying a lifted cube.
pub fn base_cube(cov: &CoveringGrid, c: &Cube) -> Cube {
    cov.base_pair.grid.normalize(*c)
}

/// Base-grid movability flags `(n, l)` for a validated tube.
pub fn tube_flags(base: &Grid, n: &CubeSet, l: &CubeSet, c: &Cube, tube: &[(f64, f64)]) -> (bool, bool) {
    let own = c.bounds(base.scale);
    let covers = own.iter().zip(tube).all(|(b, t)| t.0 <= b.0 && b.1 <= t.1);
    let in_n = covers && base.box_inside(n, tube);
    let in_l = in_n && l.contains(c) && base.box_inside(l, tube);
    (in_n, in_l)
}

/// Movability of every lifted cube of `Ñ_[0,1]` from one rough enclosure per
/// base cube.
pub fn movability_mask(cov: &CoveringGrid, m: &FlowModel) -> MovabilityMask {
    let base = &cov.base_pair;
    let g = base.grid;
    let cubes: Vec<Cube> = base.n.iter().copied().collect();
    let results: Vec<(Cube, Option<Vec<(f64, f64)>>)> = cubes
        .par_iter()
        .map(|c| {
            let r = rough_enclosure(m, &box_from_bounds(&c.bounds(g.scale)));
            let tube = r.validated.then(|| r.tube.iter().map(|i| (i.lo, i.hi)).collect());
            (*c, tube)
        })
        .collect();
    let mut tubes = BTreeMap::new();
    let mut unvalidated = Vec::new();
    for (c, t) in results {
        match t {
            Some(t) => {
                tubes.insert(c, t);
            }
            None => unvalidated.push(c),
        }
    }
    MovabilityMask::from_tubes(cov, tubes, unvalidated)
}

impl MovabilityMask {
    /// Rebuilds the movable sets from stored tubes; no flow evaluation.
    /// Cubes without a tube are movable in neither sense.
    pub fn from_tubes(
        cov: &CoveringGrid,
        tubes: BTreeMap<Cube, Vec<(f64, f64)>>,
        unvalidated: Vec<Cube>,
    ) -> MovabilityMask {
        let base = &cov.base_pair;
        let flags: BTreeMap<Cube, (bool, bool)> = tubes
            .iter()
            .filter(|(c, _)| base.n.contains(c))
            .map(|(c, t)| (*c, tube_flags(&base.grid, &base.n, &base.l, c, t)))
            .collect();
        let mut n_movable = CubeSet::new();
        let mut l_movable = CubeSet::new();
        for c in &cov.lifted_pair.n {
            let (n_ok, l_ok) = flags.get(&base_cube(cov, c)).copied().unwrap_or((false, false));
            if n_ok {
                n_movable.insert(*c);
            }
            if l_ok {
                l_movable.insert(*c);
            }
        }
        MovabilityMask {
            n_movable,
            l_movable,
            tubes,
            unvalidated,
        }
    }

    pub fn is_n_movable(&self, c: &Cube) -> bool {
        self.n_movable.contains(c)
    }

    pub fn is_l_movable(&self, c: &Cube) -> bool {
        self.l_movable.contains(c)
    }

    /// Tube certificates for the base cubes under the given lifted cubes.
    pub fn certificates<'a>(
        &self,
        cov: &CoveringGrid,
        cubes: impl IntoIterator<Item = &'a Cube>,
    ) -> Vec<TubeCertificate> {
        let mut out: BTreeMap<Cube, Vec<(f64, f64)>> = BTreeMap::new();
        for c in cubes {
            let b = base_cube(cov, c);
            if let Some(t) = self.tubes.get(&b) {
                out.insert(b, t.clone());
            }
        }
        out.into_iter()
            .map(|(cube, tube)| TubeCertificate { cube, tube })
            .collect()
    }
}

/// Stored tube of one base cube, re-checkable against `N` and `L` without
/// evaluating the flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeCertificate {
    pub cube: Cube,
    pub tube: Vec<(f64, f64)>,
}
