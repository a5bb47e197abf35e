#![allow(dead_code)]

use conley_core::algebra::{Field, GradedMatrix, Matrix, Scalar};
use conley_core::cubical::{Cube, CubePair, CubeSet, Grid};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const Q: Field = Field::Rational;

/// Identity scrambled by random elementary row operations.
pub fn random_invertible(rng: &mut ChaCha8Rng, field: Field, n: usize) -> Matrix {
    if n == 0 {
        return Matrix::zeros(field, 0, 0);
    }
    let mut rows: Vec<Vec<Scalar>> = (0..n)
        .map(|i| (0..n).map(|j| field.from_i64((i == j) as i64)).collect())
        .collect();
    for _ in 0..3 * n {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i == j {
            continue;
        }
        if rng.gen_bool(0.2) {
            rows.swap(i, j);
        } else {
            let k = field.from_i64(rng.gen_range(-2..=2));
            let src = rows[j].clone();
            for (a, b) in rows[i].iter_mut().zip(&src) {
                *a = &*a + &(&k * b);
            }
        }
    }
    Matrix::from_rows(field, rows)
}

fn random_entries(rng: &mut ChaCha8Rng, field: Field, rows: usize, cols: usize, density: f64) -> Matrix {
    let mut m = Matrix::zeros(field, rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            if rng.gen_bool(density) {
                m.set(i, j, field.from_i64(rng.gen_range(-3..=3)));
            }
        }
    }
    m
}

pub fn random_matrix(rng: &mut ChaCha8Rng, field: Field, rows: usize, cols: usize) -> Matrix {
    random_entries(rng, field, rows, cols, 0.6)
}

/// Endomorphism with an invertible part of random rank and a nilpotent part,
/// hidden by a random change of basis.
pub fn random_endomorphism(rng: &mut ChaCha8Rng, field: Field, n: usize) -> Matrix {
    if n == 0 {
        return Matrix::zeros(field, 0, 0);
    }
    let r = rng.gen_range(0..=n);
    let mut core = random_invertible(rng, field, r);
    if r > 0 && rng.gen_bool(0.5) {
        // Repeated eigenvalues make the invariant factors non-trivial.
        let lam = field.from_i64(rng.gen_range(1..=2));
        let mut jordan = Matrix::zeros(field, r, r);
        for i in 0..r {
            jordan.set(i, i, lam.clone());
            if i + 1 < r && rng.gen_bool(0.5) {
                jordan.set(i, i + 1, field.one());
            }
        }
        core = jordan;
    }
    let mut e = Matrix::zeros(field, n, n);
    for i in 0..r {
        for j in 0..r {
            e.set(i, j, core.get(i, j).clone());
        }
    }
    for i in r..n {
        for j in (i + 1)..n {
            if rng.gen_bool(0.5) {
                e.set(i, j, field.from_i64(rng.gen_range(-2..=2)));
            }
        }
    }
    let g = random_invertible(rng, field, n);
    g.mul(&e).mul(&g.inverse().expect("invertible"))
}

/// Graded endomorphism with at most `degrees` degrees and `max_dim` per block.
pub fn random_graded(rng: &mut ChaCha8Rng, field: Field, degrees: usize, max_dim: usize) -> GradedMatrix {
    let k = rng.gen_range(1..=degrees);
    let mut qs: Vec<i32> = (0..4).collect();
    qs.shuffle(rng);
    GradedMatrix::from_blocks(
        field,
        qs[..k].iter().map(|&q| {
            let n = rng.gen_range(0..=max_dim);
            (q, random_endomorphism(rng, field, n))
        }),
    )
}

pub fn conjugate(m: &GradedMatrix, rng: &mut ChaCha8Rng) -> GradedMatrix {
    let field = m.field();
    GradedMatrix::from_blocks(
        field,
        m.blocks().map(|(q, b)| {
            let g = random_invertible(rng, field, b.rows());
            (q, g.mul(b).mul(&g.inverse().expect("invertible")))
        }),
    )
}

/// Random face-closed pair on a flat grid: `N` is the closure of random top
/// and lower cubes in a small box, `L` the closure of a random subset of them.
pub fn random_pair(rng: &mut ChaCha8Rng, dim: usize, side: i32, max_cubes: usize) -> CubePair {
    let g = Grid::flat(dim, 1);
    loop {
        let gens = rng.gen_range(1..=6);
        let mut n_gen = Vec::new();
        for _ in 0..gens {
            let base: Vec<i32> = (0..dim).map(|_| rng.gen_range(0..side)).collect();
            let extent: u8 = rng.gen_range(0..(1u16 << dim)) as u8;
            n_gen.push(Cube::new(&base, extent));
        }
        let n = g.closure(&n_gen);
        if n.len() > max_cubes {
            continue;
        }
        let pool: Vec<Cube> = n.iter().copied().collect();
        let l_gen: Vec<Cube> = pool.iter().filter(|_| rng.gen_bool(0.25)).copied().collect();
        let l = g.closure(&l_gen);
        return CubePair { grid: g, n, l };
    }
}

pub fn closure_is_closed(g: &Grid, s: &CubeSet) -> bool {
    s.iter().all(|c| g.faces_of(c).iter().all(|f| s.contains(f)))
}

/// Rank by fraction-free elimination on `i128` entries, reducing mod `p`
/// over `Z/p`. Exact for the small integer matrices used here.
pub fn dense_rank(rows: &[Vec<i64>], field: Field) -> usize {
    let mut a: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let p = field.characteristic() as i128;
    let norm = |x: i128| if p == 0 { x } else { x.rem_euclid(p) };
    for r in a.iter_mut() {
        for x in r.iter_mut() {
            *x = norm(*x);
        }
    }
    let ncols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..a.len()).find(|&i| a[i][col] != 0) else {
            continue;
        };
        a.swap(rank, piv);
        for i in 0..a.len() {
            if i == rank || a[i][col] == 0 {
                continue;
            }
            let (f, g) = (a[rank][col], a[i][col]);
            for j in 0..ncols {
                a[i][j] = norm(f * a[i][j] - g * a[rank][j]);
            }
            if p == 0 {
                let d = a[i].iter().fold(0i128, |acc, &x| gcd(acc, x));
                if d > 1 {
                    for x in a[i].iter_mut() {
                        *x /= d;
                    }
                }
            }
        }
        rank += 1;
    }
    rank
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Codimension-one faces of a cube with signs, computed from coordinates:
/// the `k`-th extended axis contributes `(-1)^k (upper - lower)`.
fn oracle_faces(c: &Cube) -> Vec<(Cube, i64)> {
    let d = c.ambient();
    let mut out = Vec::new();
    let mut k = 0;
    for axis in 0..d {
        if c.extent() & (1 << axis) == 0 {
            continue;
        }
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let ext = c.extent() & !(1 << axis);
        let lower = Cube::new(c.base(), ext);
        let mut up = c.base().to_vec();
        up[axis] += 1;
        out.push((Cube::new(&up, ext), sign));
        out.push((lower, -sign));
        k += 1;
    }
    out
}

/// `dim H_q(N, L)` from ranks of dense relative boundary matrices.
pub fn dense_homology_dims(p: &CubePair, field: Field) -> std::collections::BTreeMap<usize, usize> {
    let rel: Vec<Cube> = p.n.iter().filter(|c| !p.l.contains(c)).copied().collect();
    let top = rel.iter().map(|c| c.extent().count_ones() as usize).max();
    let mut out = std::collections::BTreeMap::new();
    let Some(top) = top else { return out };
    let cells = |q: usize| -> Vec<Cube> {
        rel.iter()
            .filter(|c| c.extent().count_ones() as usize == q)
            .copied()
            .collect()
    };
    let rank = |q: usize| -> usize {
        // Rank of the boundary from q-cells to (q-1)-cells.
        if q == 0 {
            return 0;
        }
        let cols = cells(q);
        let rows = cells(q - 1);
        if cols.is_empty() || rows.is_empty() {
            return 0;
        }
        let index: std::collections::HashMap<Cube, usize> = rows.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let mut m = vec![vec![0i64; cols.len()]; rows.len()];
        for (j, c) in cols.iter().enumerate() {
            for (f, s) in oracle_faces(c) {
                if let Some(&i) = index.get(&f) {
                    m[i][j] += s;
                }
            }
        }
        dense_rank(&m, field)
    };
    for q in 0..=top {
        let n = cells(q).len();
        out.insert(q, n - rank(q) - rank(q + 1));
    }
    out
}
