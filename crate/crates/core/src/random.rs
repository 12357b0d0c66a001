//! Random trees for property checks.
//!
//! Topologies are uniform over labelled trees (Prüfer decoding). Weights:
//! positive definite `AᵀA + 0.1 I` with `A` uniform on `(-1, 1)`; triangular
//! with diagonal uniform on `(0.5, 2)` and the other triangle uniform on
//! `(-1, 1)`; general nonsingular with off-diagonal entries uniform on
//! `(-1, 1)` and a diagonal of random sign and magnitude in `(s, s + 1)`,
//! which makes every weight strictly diagonally dominant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::matrix::Matrix;
use crate::tree::{Tree, VertexId, WeightClass};

/// Deterministic generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Edges of a uniformly random labelled tree on `n >= 2` vertices.
pub fn random_topology<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<(VertexId, VertexId)> {
    assert!(n >= 2, "a tree needs at least two vertices");
    if n == 2 {
        return vec![(0, 1)];
    }
    let code: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &x in &code {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &x in &code {
        let leaf = (0..n)
            .find(|&y| degree[y] == 1)
            .expect("a leaf always remains");
        edges.push((leaf, x));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&y| degree[y] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

pub fn random_weight<R: Rng + ?Sized>(class: WeightClass, s: usize, rng: &mut R) -> Matrix {
    let mut w = Matrix::zeros(s, s);
    match class {
        WeightClass::PositiveDefinite => {
            let mut a = Matrix::zeros(s, s);
            for i in 0..s {
                for j in 0..s {
                    a[(i, j)] = rng.random_range(-1.0..1.0);
                }
            }
            w = a.transpose().matmul(&a).expect("square factors");
            for i in 0..s {
                w[(i, i)] += 0.1;
            }
        }
        WeightClass::LowerTriangular | WeightClass::UpperTriangular => {
            let lower = class == WeightClass::LowerTriangular;
            for i in 0..s {
                for j in 0..s {
                    if i == j {
                        w[(i, j)] = rng.random_range(0.5..2.0);
                    } else if (i > j) == lower {
                        w[(i, j)] = rng.random_range(-1.0..1.0);
                    }
                }
            }
        }
        WeightClass::GeneralNonsingular => {
            for i in 0..s {
                for j in 0..s {
                    w[(i, j)] = if i == j {
                        let magnitude = s as f64 + rng.random_range(0.0..1.0);
                        if rng.random_bool(0.5) {
                            magnitude
                        } else {
                            -magnitude
                        }
                    } else {
                        rng.random_range(-1.0..1.0)
                    };
                }
            }
        }
    }
    w
}

pub fn random_tree<R: Rng + ?Sized>(
    class: WeightClass,
    n: usize,
    s: usize,
    rng: &mut R,
) -> Result<Tree> {
    let edges: Vec<_> = random_topology(n, rng)
        .into_iter()
        .map(|(u, v)| (u, v, random_weight(class, s, rng)))
        .collect();
    Tree::new(class, n, edges)
}

/// Random tree with `n` uniform on `2..=n_max` and `s` uniform on `1..=s_max`.
pub fn random_tree_up_to<R: Rng + ?Sized>(
    class: WeightClass,
    n_max: usize,
    s_max: usize,
    rng: &mut R,
) -> Result<Tree> {
    let n = rng.random_range(2..=n_max.max(2));
    let s = rng.random_range(1..=s_max.max(1));
    random_tree(class, n, s, rng)
}
