use super::{Vgae, VgaeError};
use crate::archspace::{decode_cell, CellGraph};
use crate::tensor::{linear, row_softmax, sigmoid_scalar, Tensor};

/// `z = mu + sigma ⊙ η` with `η ~ N(0, I)` drawn from `seed`.
pub fn reparameterize(mu: &Tensor, sigma: &Tensor, seed: u64) -> Result<Tensor, VgaeError> {
    let eta = super::standard_normal(mu.shape(), seed);
    Ok(mu.add(&sigma.hadamard(&eta)?)?)
}

/// Symmetric edge probabilities `sigmoid(z_i · z_j)`.
pub fn decode_edges(node_z: &Tensor) -> Result<Tensor, VgaeError> {
    Ok(node_z.matmul_nt(node_z)?.map(sigmoid_scalar))
}

/// Closed-form `KL(N(mu, sigma²) ‖ N(0, I))` summed over all entries.
pub fn kl_divergence(mu: &Tensor, sigma: &Tensor) -> f64 {
    mu.data()
        .iter()
        .zip(sigma.data())
        .map(|(m, s)| {
            let v = s * s;
            0.5 * (v + m * m - 1.0 - v.ln())
        })
        .sum()
}

fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

impl Vgae {
    /// Row-stochastic operation probabilities `softmax(z·W_o + b_o)`.
    pub fn decode_ops(&self, node_z: &Tensor) -> Result<Tensor, VgaeError> {
        let logits = linear(node_z, self.params.value("decoder.ops.weight")?, self.params.value("decoder.ops.bias")?)?;
        Ok(row_softmax(&logits))
    }

    /// Turns an `N×d` latent matrix into a cell: operations by row argmax
    /// (lowest index on ties), edges where the probability is strictly above
    /// one half. In padded spaces the first row after the input decoded as
    /// the output label ends the cell; later rows become padding.
    pub fn decode_point(&self, node_z: &Tensor) -> Result<CellGraph, VgaeError> {
        let n = self.spec.max_nodes;
        let k = self.spec.num_ops();
        if node_z.shape() != [n, self.latent_dim()] {
            return Err(VgaeError::Config(format!(
                "latent point must be {n}x{}, got {:?}",
                self.latent_dim(),
                node_z.shape()
            )));
        }
        let probs = self.decode_ops(node_z)?;
        let edges = decode_edges(node_z)?;
        let labels: Vec<usize> = (0..n).map(|i| argmax_lowest(probs.row(i))).collect();
        let used = if self.spec.padding {
            (1..n).find(|&i| labels[i] == self.spec.output_op()).map_or(n, |i| i + 1)
        } else {
            n
        };
        let mut adjacency = vec![0u8; n * n];
        let mut ops = vec![0u8; n * k];
        for i in 0..used {
            ops[i * k + labels[i]] = 1;
            for j in (i + 1)..used {
                adjacency[i * n + j] = u8::from(edges.get(i, j) > 0.5);
            }
        }
        Ok(decode_cell(&adjacency, &ops, &self.spec)?)
    }
}
