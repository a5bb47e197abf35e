use serde::{Deserialize, Serialize};

use super::cube::{Cube, CubeJson};
use super::grid::{CubeSet, Grid};
use super::CubicalError;

/// Face-closed pair `L ⊆ N` on one grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubePair {
    pub grid: Grid,
    pub n: CubeSet,
    pub l: CubeSet,
}

impl CubePair {
    /// Builds a pair and checks closure and inclusion.
    pub fn new(grid: Grid, n: CubeSet, l: CubeSet) -> Result<CubePair, CubicalError> {
        let p = CubePair { grid, n, l };
        p.validate()?;
        Ok(p)
    }

    /// Pair generated by the closures of the given cubes.
    pub fn from_generators(grid: Grid, n: &CubeSet, l: &CubeSet) -> CubePair {
        let l = grid.closure(l);
        let mut n = grid.closure(n);
        n.extend(l.iter().copied());
        CubePair { grid, n, l }
    }

    pub fn empty(grid: Grid) -> CubePair {
        CubePair {
            grid,
            n: CubeSet::new(),
            l: CubeSet::new(),
        }
    }

    pub fn validate(&self) -> Result<(), CubicalError> {
        self.grid.validate_section_ok()?;
        self.grid.check_closed(&self.n)?;
        self.grid.check_closed(&self.l)?;
        if let Some(c) = self.l.iter().find(|c| !self.n.contains(c)) {
            return Err(CubicalError::NotSubset(*c));
        }
        Ok(())
    }

    /// Cubes of `N ∖ L`, the generators of the relative chain groups.
    pub fn relative_cubes(&self) -> impl Iterator<Item = &Cube> {
        self.n.iter().filter(|c| !self.l.contains(c))
    }

    pub fn top_dim(&self) -> Option<usize> {
        self.n.iter().map(|c| c.dim()).max()
    }

    pub fn to_json(&self) -> PairJson {
        PairJson {
            dim: self.grid.dim,
            scale: self.grid.scale,
            angular_axis: self.grid.angular_axis,
            periodic: self.grid.periodic,
            n: self.n.iter().map(CubeJson::from).collect(),
            l: self.l.iter().map(CubeJson::from).collect(),
        }
    }

    pub fn from_json(j: &PairJson) -> Result<CubePair, CubicalError> {
        let grid = Grid {
            dim: j.dim,
            scale: j.scale,
            angular_axis: j.angular_axis,
            periodic: j.periodic,
        };
        let parse = |v: &[CubeJson]| -> Result<CubeSet, CubicalError> {
            v.iter()
                .map(|c| {
                    c.to_cube()
                        .ok_or_else(|| CubicalError::Json(format!("invalid cube {c:?}")))
                })
                .collect()
        };
        CubePair::new(grid, parse(&j.n)?, parse(&j.l)?)
    }
}

impl Grid {
    fn validate_section_ok(&self) -> Result<(), CubicalError> {
        if self.dim == 0 {
            // Sections of one-dimensional spaces are points.
            return Ok(());
        }
        self.validate()
    }
}

/// Canonical JSON envelope of a cube set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeSetJson {
    pub dim: usize,
    pub scale: u32,
    pub angular_axis: Option<usize>,
    pub cubes: Vec<CubeJson>,
}

impl CubeSetJson {
    pub fn new(grid: &Grid, set: &CubeSet) -> CubeSetJson {
        CubeSetJson {
            dim: grid.dim,
            scale: grid.scale,
            angular_axis: grid.angular_axis,
            cubes: set.iter().map(CubeJson::from).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairJson {
    pub dim: usize,
    pub scale: u32,
    pub angular_axis: Option<usize>,
    #[serde(default)]
    pub periodic: bool,
    #[serde(rename = "N")]
    pub n: Vec<CubeJson>,
    #[serde(rename = "L")]
    pub l: Vec<CubeJson>,
}

/// A pair in the circular base space together with its unrolling over one
/// angular period.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoveringGrid {
    pub angular_axis: usize,
    pub period: i32,
    pub base_pair: CubePair,
    pub lifted_pair: CubePair,
}

fn lift_set(set: &CubeSet, axis: usize, period: i32) -> CubeSet {
    let mut out = CubeSet::new();
    for c in set {
        let k = c.base()[axis];
        out.insert(*c);
        if !c.extends(axis) && k == 0 {
            out.insert(c.with_coord(axis, period));
        }
    }
    out
}

/// Unrolls the angular circle of `base` onto `[0, 1]`: every base cube keeps
/// its slab index, and cubes degenerate at angle 0 also appear at angle 1.
pub fn lift_to_cover(base: &CubePair) -> Result<CoveringGrid, CubicalError> {
    let axis = base.grid.angular_axis.ok_or(CubicalError::NoAngularAxis)?;
    if !base.grid.periodic {
        return Err(CubicalError::Config(
            "base grid must be periodic in its angular axis".into(),
        ));
    }
    let period = base.grid.period();
    let grid = Grid {
        periodic: false,
        ..base.grid
    };
    Ok(CoveringGrid {
        angular_axis: axis,
        period,
        base_pair: base.clone(),
        lifted_pair: CubePair {
            grid,
            n: lift_set(&base.n, axis, period),
            l: lift_set(&base.l, axis, period),
        },
    })
}

impl CoveringGrid {
    /// Grid of the angular sections.
    pub fn section_grid(&self) -> Grid {
        let g = self.lifted_pair.grid;
        Grid {
            dim: g.dim - 1,
            scale: g.scale,
            angular_axis: None,
            periodic: false,
        }
    }

    /// Section at grid angle `a` (any `0 ≤ a ≤ period`), projected by
    /// dropping the angular coordinate.
    pub fn section_at(&self, a: i32) -> Result<CubePair, CubicalError> {
        if !(0..=self.period).contains(&a) {
            return Err(CubicalError::InteriorSection { a, period: self.period });
        }
        let ax = self.angular_axis;
        let pick = |s: &CubeSet| -> CubeSet {
            s.iter()
                .filter(|c| !c.extends(ax) && c.base()[ax] == a)
                .map(|c| c.drop_axis(ax))
                .collect()
        };
        Ok(CubePair {
            grid: self.section_grid(),
            n: pick(&self.lifted_pair.n),
            l: pick(&self.lifted_pair.l),
        })
    }

    /// Lifted cube over angle `a` corresponding to a section cube.
    pub fn lift_section_cube(&self, c: &Cube, a: i32) -> Cube {
        c.insert_axis(self.angular_axis, a)
    }
}

/// The pair `(N_a, L_a)` for `a` one of the two period boundaries.
pub fn section_restrict(g: &CoveringGrid, a: i32) -> Result<CubePair, CubicalError> {
    if a != 0 && a != g.period {
        return Err(CubicalError::InteriorSection { a, period: g.period });
    }
    g.section_at(a)
}
