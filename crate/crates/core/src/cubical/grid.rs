use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::cube::{Cube, MAX_DIM};
use super::CubicalError;

pub type CubeSet = BTreeSet<Cube>;

/// Uniform dyadic grid with side `2^-scale`.
///
/// When `periodic` is set, the angular axis is a circle of `2^scale` slabs
/// (circumference 1) and cube coordinates on it are kept in `0..2^scale`.
/// The lifted cover uses the same axis unrolled over `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub scale: u32,
    pub angular_axis: Option<usize>,
    #[serde(default)]
    pub periodic: bool,
}

impl Grid {
    /// Base space with a periodic angular axis.
    pub fn circular(dim: usize, scale: u32, angular_axis: usize) -> Grid {
        Grid {
            dim,
            scale,
            angular_axis: Some(angular_axis),
            periodic: true,
        }
    }

    /// Grid without an angular axis.
    pub fn flat(dim: usize, scale: u32) -> Grid {
        Grid {
            dim,
            scale,
            angular_axis: None,
            periodic: false,
        }
    }

    /// Number of angular slabs in one period.
    pub fn period(&self) -> i32 {
        1 << self.scale
    }

    pub fn validate(&self) -> Result<(), CubicalError> {
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(CubicalError::Config(format!(
                "ambient dimension {} outside 1..={MAX_DIM}",
                self.dim
            )));
        }
        if self.scale == 0 || self.scale > 24 {
            return Err(CubicalError::Config(format!("scale {} outside 1..=24", self.scale)));
        }
        if let Some(a) = self.angular_axis {
            if a >= self.dim {
                return Err(CubicalError::Config(format!(
                    "angular axis {a} outside dimension {}",
                    self.dim
                )));
            }
        } else if self.periodic {
            return Err(CubicalError::Config("periodic grid without angular axis".into()));
        }
        Ok(())
    }

    /// Canonical representative of a cube (angular coordinate reduced mod the
    /// period on periodic grids).
    pub fn normalize(&self, c: Cube) -> Cube {
        match self.angular_axis {
            Some(a) if self.periodic => {
                let k = c.base()[a];
                let m = self.period();
                if (0..m).contains(&k) {
                    c
                } else {
                    c.with_coord(a, k.rem_euclid(m))
                }
            }
            _ => c,
        }
    }

    pub fn signed_faces(&self, c: &Cube) -> Vec<(Cube, i64)> {
        c.signed_faces()
            .into_iter()
            .map(|(f, s)| (self.normalize(f), s))
            .collect()
    }

    /// Smallest face-closed superset.
    pub fn closure<'a>(&self, cubes: impl IntoIterator<Item = &'a Cube>) -> CubeSet {
        let mut out = CubeSet::new();
        let mut stack: Vec<Cube> = cubes.into_iter().map(|c| self.normalize(*c)).collect();
        while let Some(c) = stack.pop() {
            if out.insert(c) {
                for (f, _) in self.signed_faces(&c) {
                    if !out.contains(&f) {
                        stack.push(f);
                    }
                }
            }
        }
        out
    }

    /// All cubes of the face lattice of `c`, including `c`.
    pub fn faces_of(&self, c: &Cube) -> CubeSet {
        self.closure(std::iter::once(c))
    }

    /// Top cubes filling the grid box `lo ≤ base < hi`.
    pub fn box_tops(&self, lo: &[i32], hi: &[i32]) -> CubeSet {
        let mut out = CubeSet::new();
        let n = self.dim;
        let mut cur = lo.to_vec();
        if (0..n).any(|a| lo[a] >= hi[a]) {
            return out;
        }
        loop {
            out.insert(self.normalize(Cube::top(&cur)));
            let mut a = 0;
            loop {
                if a == n {
                    return out;
                }
                cur[a] += 1;
                if cur[a] < hi[a] {
                    break;
                }
                cur[a] = lo[a];
                a += 1;
            }
        }
    }

    /// Checks that every cube has the grid's ambient dimension, is
    /// normalized, and that the set is face-closed.
    pub fn check_closed(&self, set: &CubeSet) -> Result<(), CubicalError> {
        for c in set {
            if c.ambient() != self.dim {
                return Err(CubicalError::Config(format!(
                    "cube {c:?} has ambient dimension {}, grid has {}",
                    c.ambient(),
                    self.dim
                )));
            }
            if self.normalize(*c) != *c {
                return Err(CubicalError::Config(format!("cube {c:?} is not normalized")));
            }
            for (f, _) in self.signed_faces(c) {
                if !set.contains(&f) {
                    return Err(CubicalError::NotClosed(f));
                }
            }
        }
        Ok(())
    }
}

impl Grid {
    fn unit(&self) -> f64 {
        (self.scale as f64).exp2()
    }

    /// Per-axis choices `(coordinate, extended)` of the open cells meeting
    /// the closed box (model units).
    fn axis_cells(&self, axis: usize, lo: f64, hi: f64) -> Vec<(i32, bool)> {
        let u = self.unit();
        let (lo, hi) = (lo * u, hi * u);
        let periodic = self.periodic && self.angular_axis == Some(axis);
        if periodic && hi - lo >= self.period() as f64 {
            return (0..self.period()).flat_map(|j| [(j, false), (j, true)]).collect();
        }
        let mut out = Vec::new();
        let first = lo.floor() as i64 - 1;
        let last = hi.ceil() as i64 + 1;
        for j in first..=last {
            let jf = j as f64;
            if lo <= jf && jf <= hi {
                out.push((j as i32, false));
            }
            if jf < hi && jf + 1.0 > lo {
                out.push((j as i32, true));
            }
        }
        out
    }

    fn product(&self, per_axis: &[Vec<(i32, bool)>]) -> CubeSet {
        let mut out = CubeSet::new();
        if per_axis.iter().any(Vec::is_empty) {
            return out;
        }
        let n = per_axis.len();
        let mut idx = vec![0usize; n];
        let mut base = vec![0i32; n];
        loop {
            let mut extent = 0u8;
            for a in 0..n {
                let (j, e) = per_axis[a][idx[a]];
                base[a] = j;
                if e {
                    extent |= 1 << a;
                }
            }
            out.insert(self.normalize(Cube::new(&base, extent)));
            let mut a = 0;
            loop {
                if a == n {
                    return out;
                }
                idx[a] += 1;
                if idx[a] < per_axis[a].len() {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
        }
    }

    /// Cubes whose open cell meets the closed box `bounds` (model units).
    pub fn cells_meeting(&self, bounds: &[(f64, f64)]) -> CubeSet {
        let per_axis: Vec<_> = bounds
            .iter()
            .enumerate()
            .map(|(a, &(lo, hi))| self.axis_cells(a, lo, hi))
            .collect();
        self.product(&per_axis)
    }

    /// Top cubes whose closed box meets the closed box `bounds`.
    pub fn tops_meeting(&self, bounds: &[(f64, f64)]) -> CubeSet {
        let per_axis: Vec<_> = bounds
            .iter()
            .enumerate()
            .map(|(a, &(lo, hi))| {
                let mut js: Vec<(i32, bool)> = self
                    .axis_cells(a, lo, hi)
                    .into_iter()
                    .flat_map(|(j, e)| {
                        if e {
                            vec![(j, true)]
                        } else {
                            vec![(j - 1, true), (j, true)]
                        }
                    })
                    .collect();
                js.sort();
                js.dedup();
                js
            })
            .collect();
        self.product(&per_axis)
    }

    /// Whether the closed box lies in the realization of the face-closed `set`.
    pub fn box_inside(&self, set: &CubeSet, bounds: &[(f64, f64)]) -> bool {
        self.cells_meeting(bounds).iter().all(|c| set.contains(c))
    }

    /// Top cubes having `c` as a face.
    pub fn cofaces_top(&self, c: &Cube) -> Vec<Cube> {
        let free: Vec<usize> = (0..c.ambient()).filter(|&a| !c.extends(a)).collect();
        let full = ((1u16 << c.ambient()) - 1) as u8;
        let mut out = Vec::with_capacity(1 << free.len());
        for mask in 0..(1u32 << free.len()) {
            let mut t = Cube::new(c.base(), full);
            for (k, &a) in free.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    t = t.with_coord(a, c.base()[a] - 1);
                }
            }
            out.push(self.normalize(t));
        }
        out.sort();
        out.dedup();
        out
    }
}

pub fn top_cubes(set: &CubeSet) -> impl Iterator<Item = &Cube> {
    set.iter().filter(|c| c.is_top())
}

pub fn cubes_of_dim(set: &CubeSet, q: usize) -> impl Iterator<Item = &Cube> {
    set.iter().filter(move |c| c.dim() == q)
}
