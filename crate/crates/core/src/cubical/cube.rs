use std::fmt;

use serde::{Deserialize, Serialize};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 6;

/// Elementary cube: product of unit intervals `[bᵢ, bᵢ+1]` on the axes set in
/// `extent` and points `{bᵢ}` elsewhere, in grid units.
///
/// Ordering is lexicographic on the base vector, then the extent mask, which
/// is the canonical order used for every serialized cube list and every
/// matrix index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    ambient: u8,
    base: [i32; MAX_DIM],
    extent: u8,
}

impl Cube {
    pub fn new(base: &[i32], extent: u8) -> Cube {
        assert!(base.len() <= MAX_DIM, "ambient dimension above {MAX_DIM}");
        assert!(
            extent as usize >> base.len() == 0,
            "extent bit outside the ambient dimension"
        );
        let mut b = [0; MAX_DIM];
        b[..base.len()].copy_from_slice(base);
        Cube {
            ambient: base.len() as u8,
            base: b,
            extent,
        }
    }

    /// Vertex at `base`.
    pub fn vertex(base: &[i32]) -> Cube {
        Cube::new(base, 0)
    }

    /// Full-dimensional cube with lower corner `base`.
    pub fn top(base: &[i32]) -> Cube {
        Cube::new(base, ((1u16 << base.len()) - 1) as u8)
    }

    pub fn ambient(&self) -> usize {
        self.ambient as usize
    }

    pub fn base(&self) -> &[i32] {
        &self.base[..self.ambient as usize]
    }

    pub fn extent(&self) -> u8 {
        self.extent
    }

    pub fn dim(&self) -> usize {
        self.extent.count_ones() as usize
    }

    pub fn is_top(&self) -> bool {
        self.dim() == self.ambient()
    }

    pub fn extends(&self, axis: usize) -> bool {
        self.extent >> axis & 1 == 1
    }

    /// Closed interval occupied on `axis`, in grid units.
    pub fn span(&self, axis: usize) -> (i32, i32) {
        let b = self.base[axis];
        (b, b + self.extends(axis) as i32)
    }

    pub fn with_coord(&self, axis: usize, value: i32) -> Cube {
        let mut c = *self;
        c.base[axis] = value;
        c
    }

    /// Lower and upper faces across `axis`. `axis` must be extended.
    pub fn faces_across(&self, axis: usize) -> (Cube, Cube) {
        debug_assert!(self.extends(axis));
        let mut lower = *self;
        lower.extent &= !(1 << axis);
        let mut upper = lower;
        upper.base[axis] += 1;
        (lower, upper)
    }

    /// Codimension-one faces with the standard cubical signs: for the j-th
    /// extended axis (counting from zero) the upper face carries `(-1)^j` and
    /// the lower face `-(-1)^j`.
    pub fn signed_faces(&self) -> Vec<(Cube, i64)> {
        let mut out = Vec::with_capacity(2 * self.dim());
        let mut j = 0;
        for axis in 0..self.ambient() {
            if !self.extends(axis) {
                continue;
            }
            let sign = if j % 2 == 0 { 1 } else { -1 };
            let (lower, upper) = self.faces_across(axis);
            out.push((upper, sign));
            out.push((lower, -sign));
            j += 1;
        }
        out
    }

    /// Removes `axis`, which must be degenerate.
    pub fn drop_axis(&self, axis: usize) -> Cube {
        debug_assert!(!self.extends(axis));
        let n = self.ambient();
        let mut base = Vec::with_capacity(n - 1);
        let mut extent = 0u8;
        for a in 0..n {
            if a == axis {
                continue;
            }
            if self.extends(a) {
                extent |= 1 << base.len();
            }
            base.push(self.base[a]);
        }
        Cube::new(&base, extent)
    }

    /// Inserts a degenerate coordinate `value` at position `axis`.
    pub fn insert_axis(&self, axis: usize, value: i32) -> Cube {
        let n = self.ambient();
        let mut base = Vec::with_capacity(n + 1);
        let mut extent = 0u8;
        for a in 0..=n {
            if a == axis {
                base.push(value);
                continue;
            }
            let src = if a < axis { a } else { a - 1 };
            if self.extends(src) {
                extent |= 1 << a;
            }
            base.push(self.base[src]);
        }
        Cube::new(&base, extent)
    }

    /// Geometric realization in model units for cube side `2^-scale`.
    pub fn bounds(&self, scale: u32) -> Vec<(f64, f64)> {
        let unit = (-(scale as f64)).exp2();
        (0..self.ambient())
            .map(|a| {
                let (lo, hi) = self.span(a);
                (lo as f64 * unit, hi as f64 * unit)
            })
            .collect()
    }
}

impl fmt::Debug for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for a in 0..self.ambient() {
            if a > 0 {
                write!(f, "x")?;
            }
            let (lo, hi) = self.span(a);
            if lo == hi {
                write!(f, "{lo}")?;
            } else {
                write!(f, "{lo}..{hi}")?;
            }
        }
        write!(f, "]")
    }
}

/// `(base vector, extent bitmask)` wire form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeJson(pub Vec<i32>, pub u8);

impl From<&Cube> for CubeJson {
    fn from(c: &Cube) -> Self {
        CubeJson(c.base().to_vec(), c.extent())
    }
}

impl CubeJson {
    pub fn to_cube(&self) -> Option<Cube> {
        if self.0.len() > MAX_DIM || self.1 as usize >> self.0.len() != 0 {
            return None;
        }
        Some(Cube::new(&self.0, self.1))
    }
}

impl Serialize for Cube {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CubeJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cube {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        CubeJson::deserialize(d)?
            .to_cube()
            .ok_or_else(|| serde::de::Error::custom("invalid cube"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_faces() {
        let e = Cube::new(&[0], 1);
        assert_eq!(
            e.signed_faces(),
            vec![(Cube::vertex(&[1]), 1), (Cube::vertex(&[0]), -1)]
        );
        assert!(Cube::vertex(&[3]).signed_faces().is_empty());
    }

    #[test]
    fn axis_insert_drop_round_trip() {
        let c = Cube::new(&[2, -1], 0b01);
        let lifted = c.insert_axis(1, 5);
        assert_eq!(lifted.base(), &[2, 5, -1]);
        assert_eq!(lifted.extent(), 0b001);
        assert_eq!(lifted.drop_axis(1), c);
        let c2 = Cube::new(&[2, -1], 0b10).insert_axis(0, 7);
        assert_eq!(c2.extent(), 0b100);
    }

    #[test]
    fn bounds_are_dyadic() {
        let c = Cube::new(&[-16, 3], 0b11);
        assert_eq!(c.bounds(4), vec![(-1.0, -0.9375), (0.1875, 0.25)]);
    }
}
