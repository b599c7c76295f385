//! Fully connected ReLU networks with hand-written backpropagation.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::StandardNormal;

/// Affine layer `y = x·W + b` with `W` stored as `(inputs, outputs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }
}

/// ReLU between layers, identity after the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input of each layer (the previous layer's post-ReLU output).
    inputs: Vec<Array2<f64>>,
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    /// Orthogonal weights (gain √2 on hidden layers, `output_gain` on the
    /// last one) and zero biases.
    pub fn orthogonal<R: Rng + ?Sized>(sizes: &[usize], output_gain: f64, rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        let last = net.layers.len() - 1;
        for (i, layer) in net.layers.iter_mut().enumerate() {
            let gain = if i == last {
                output_gain
            } else {
                std::f64::consts::SQRT_2
            };
            layer.weight = orthogonal_matrix(layer.inputs(), layer.outputs(), rng) * gain;
        }
        net
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(Dense::outputs));
        s
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        self.forward_cached(x).0
    }

    pub fn forward_cached(&self, x: ArrayView2<'_, f64>) -> (Array2<f64>, ForwardCache) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = h.dot(&layer.weight);
            z += &layer.bias;
            if i != last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            inputs.push(h);
            h = z;
        }
        (h, ForwardCache { inputs })
    }

    /// Gradients of a scalar loss given `∂L/∂output` for the batch.
    pub fn backward(&self, cache: &ForwardCache, grad_output: Array2<f64>) -> Mlp {
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        let mut delta = grad_output;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.inputs[i];
            let gw = input.t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            grads.push(Dense { weight: gw, bias: gb });
            if i > 0 {
                let mut d = delta.dot(&layer.weight.t());
                // The stored input is relu(z); its derivative is 1 where it is positive.
                Zip::from(&mut d).and(input).for_each(|g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
                delta = d;
            }
        }
        grads.reverse();
        Mlp { layers: grads }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.weight.iter().chain(l.bias.iter()).map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weight *= factor;
            l.bias *= factor;
        }
    }

    /// Flat view of all parameters in layer order (weights row-major, then bias).
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weight.iter().chain(l.bias.iter()))
    }
}

/// `(rows, cols)` matrix with orthonormal rows or columns, whichever is the
/// smaller set, from Gram–Schmidt on a Gaussian draw.
fn orthogonal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let (tall, short) = (rows.max(cols), rows.min(cols));
    let mut q = Array2::<f64>::zeros((tall, short));
    for v in q.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    for j in 0..short {
        for k in 0..j {
            let proj = q.column(j).dot(&q.column(k));
            let qk = q.column(k).to_owned();
            q.column_mut(j).scaled_add(-proj, &qk);
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        q.column_mut(j).mapv_inplace(|v| v / norm);
    }
    if rows >= cols {
        q
    } else {
        q.reversed_axes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orthogonal_init_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = orthogonal_matrix(7, 32, &mut rng);
        let gram = w.dot(&w.t());
        for i in 0..7 {
            for j in 0..7 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[[i, j]] - expect).abs() < 1e-10);
            }
        }
        let w = orthogonal_matrix(32, 8, &mut rng);
        let gram = w.t().dot(&w);
        for i in 0..8 {
            assert!((gram[[i, i]] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn forward_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = Mlp::orthogonal(&[3, 4, 2], 1.0, &mut rng);
        for b in net.layers[0].bias.iter_mut() {
            *b = 0.1;
        }
        let x = array![[0.5, -1.0, 2.0]];
        let out = net.forward(x.view());
        let mut h = [0.0; 4];
        for j in 0..4 {
            let mut s = net.layers[0].bias[j];
            for i in 0..3 {
                s += x[[0, i]] * net.layers[0].weight[[i, j]];
            }
            h[j] = s.max(0.0);
        }
        for k in 0..2 {
            let mut s = net.layers[1].bias[k];
            for j in 0..4 {
                s += h[j] * net.layers[1].weight[[j, k]];
            }
            assert!((out[[0, k]] - s).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::orthogonal(&[4, 6, 5, 3], 1.0, &mut rng);
        let x = Array2::from_shape_fn((5, 4), |(i, j)| ((i * 4 + j) as f64 * 0.37).sin());
        // Loss: Σ c ⊙ out with fixed coefficients.
        let c = Array2::from_shape_fn((5, 3), |(i, j)| ((i + 2 * j) as f64 * 0.71).cos());
        let loss = |n: &Mlp| (n.forward(x.view()) * &c).sum();
        let (_, cache) = net.forward_cached(x.view());
        let g = net.backward(&cache, c.clone());
        let analytic: Vec<f64> = g.params().copied().collect();
        let h = 1e-6;
        for (idx, &a) in analytic.iter().enumerate() {
            let mut plus = net.clone();
            *plus.params_mut().nth(idx).unwrap() += h;
            let mut minus = net.clone();
            *minus.params_mut().nth(idx).unwrap() -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            assert!((fd - a).abs() < 1e-6 * (1.0 + a.abs()), "param {idx}: {fd} vs {a}");
        }
    }
}
