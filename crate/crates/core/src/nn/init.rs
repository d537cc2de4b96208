use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use super::Mlp;
use crate::seeding;

/// A `rows x cols` matrix (row-major) with orthonormal rows or columns,
/// whichever are fewer, scaled by `gain`.
pub fn orthogonal_matrix(rows: usize, cols: usize, gain: f64, rng: &mut seeding::Rng) -> Vec<f64> {
    let (tall_r, tall_c) = if rows >= cols {
        (rows, cols)
    } else {
        (cols, rows)
    };
    let a = DMatrix::<f64>::from_fn(tall_r, tall_c, |_, _| StandardNormal.sample(rng));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    // fix signs so the factorisation (and the distribution) is unique
    for j in 0..tall_c {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let m = if rows >= cols { q } else { q.transpose() };
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push(gain * m[(i, j)]);
        }
    }
    out
}

/// Orthogonal weights per layer with the given gains, zero biases.
pub fn orthogonal_init(net: &mut Mlp, seed: u64, gains: &[f64]) {
    assert_eq!(gains.len(), net.layers.len(), "one gain per layer");
    let mut rng = seeding::rng(seed);
    for (layer, gain) in net.layers.iter_mut().zip(gains) {
        layer.weights = orthogonal_matrix(layer.outputs, layer.inputs, *gain, &mut rng);
        layer.bias.iter_mut().for_each(|b| *b = 0.0);
    }
}
