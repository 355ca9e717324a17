//! Random span programs for property tests and verification suites.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::SpanProgram;
use crate::linalg::{self, Tolerances};

/// Size caps for [`random_program`].
#[derive(Debug, Clone, Copy)]
pub struct RandomShape {
    pub max_dim_h: usize,
    pub max_dim_v: usize,
    pub max_n: usize,
    pub max_q: usize,
}

impl Default for RandomShape {
    fn default() -> Self {
        Self {
            max_dim_h: 8,
            max_dim_v: 6,
            max_n: 4,
            max_q: 3,
        }
    }
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Draws a valid span program with `τ ∈ col A`.
///
/// Each input block has one or two coordinates; the always-available and
/// never-available blocks get at most one coordinate each. Subspaces are
/// random Gaussian spans (possibly empty, possibly overlapping); when their
/// union misses part of the block, extra columns are added to a random symbol.
pub fn random_program<R: Rng + ?Sized>(rng: &mut R, shape: RandomShape) -> SpanProgram {
    let tol = Tolerances::default();
    let max_n = shape.max_n.min(shape.max_dim_h).max(1);
    let n = rng.random_range(1..=max_n);
    let q = rng.random_range(2..=shape.max_q.max(2));

    let mut sizes: Vec<usize> = vec![1; n];
    let mut used = n;
    for s in sizes.iter_mut() {
        if used < shape.max_dim_h && rng.random_bool(0.5) {
            *s = 2;
            used += 1;
        }
    }
    let mut extra = |rng: &mut R| {
        if used < shape.max_dim_h && rng.random_bool(0.4) {
            used += 1;
            1
        } else {
            0
        }
    };
    let n_true = extra(rng);
    let n_false = extra(rng);

    let mut next = 0;
    let mut take = |k: usize| {
        let r: Vec<usize> = (next..next + k).collect();
        next += k;
        r
    };
    let blocks: Vec<Vec<usize>> = sizes.iter().map(|&k| take(k)).collect();
    let true_coords = take(n_true);
    let false_coords = take(n_false);
    let dim_h = next;

    let subspaces = blocks
        .iter()
        .map(|b| {
            let len = b.len();
            let mut fam: Vec<DMatrix<f64>> = (0..q)
                .map(|_| {
                    let cols = rng.random_range(0..=len);
                    gaussian_matrix(rng, len, cols)
                })
                .collect();
            loop {
                let refs: Vec<&DMatrix<f64>> = fam.iter().collect();
                if linalg::rank(&linalg::hstack(&refs, len), &tol) == len {
                    break;
                }
                let a = rng.random_range(0..q);
                let col = gaussian_matrix(rng, len, 1);
                let grown = linalg::hstack(&[&fam[a], &col], len);
                fam[a] = grown;
            }
            fam
        })
        .collect();

    let dim_v = rng.random_range(1..=shape.max_dim_v.max(1));
    let a = gaussian_matrix(rng, dim_v, dim_h);
    let tau = &a * gaussian_vector(rng, dim_h);
    SpanProgram {
        n,
        q,
        dim_h,
        dim_v,
        blocks,
        true_coords,
        false_coords,
        subspaces,
        a,
        tau,
        tol,
    }
}
