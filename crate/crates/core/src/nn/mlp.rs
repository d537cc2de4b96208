use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// Dense layer, `weights` row-major with one row per output unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.bias)
                .map(|(row, b)| b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()),
        );
    }
}

/// Feed-forward network: hidden layers share one activation, the output
/// layer is linear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub hidden_activation: Activation,
}

/// Per-layer activations recorded by [`Mlp::forward_trace`]; entry 0 is the
/// input, the last entry the output.
#[derive(Clone, Debug)]
pub struct Trace {
    activations: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace has an input")
    }
}

/// Partial derivatives with the same shapes as the network's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    pub layers: Vec<Layer>,
}

impl GradientSet {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Layer::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &GradientSet) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, k: f64) {
        for t in self.tensors_mut() {
            for x in t {
                *x *= k;
            }
        }
    }

    pub fn sum_sq(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|x| x * x)
            .sum()
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| *x == 0.0))
    }
}

impl Mlp {
    /// Zero-initialised network with the given layer widths, input first.
    pub fn new(sizes: &[usize], hidden_activation: Activation) -> Self {
        assert!(
            sizes.len() >= 2,
            "a network needs an input and an output size"
        );
        Self {
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
            hidden_activation,
        }
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().expect("non-empty").outputs
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_size() {
            return Err(Error::Dimension {
                expected: self.input_size(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.affine(&cur, &mut next);
            if i < last {
                for v in &mut next {
                    *v = self.hidden_activation.apply(*v);
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<Trace> {
        self.check_input(x)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.affine(activations.last().expect("non-empty"), &mut out);
            if i < last {
                for v in &mut out {
                    *v = self.hidden_activation.apply(*v);
                }
            }
            activations.push(out);
        }
        Ok(Trace { activations })
    }

    /// Reverse-mode gradients of a scalar loss whose derivative with respect
    /// to the network output is `output_grad`, accumulated into `grads`.
    pub fn backward_into(
        &self,
        trace: &Trace,
        output_grad: &[f64],
        grads: &mut GradientSet,
    ) -> Result<()> {
        if output_grad.len() != self.output_size() {
            return Err(Error::Dimension {
                expected: self.output_size(),
                actual: output_grad.len(),
            });
        }
        let mut delta = output_grad.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &trace.activations[i];
            let g = &mut grads.layers[i];
            for (o, d) in delta.iter().enumerate() {
                g.bias[o] += d;
                if *d != 0.0 {
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (w, x) in row.iter_mut().zip(input) {
                        *w += d * x;
                    }
                }
            }
            if i == 0 {
                break;
            }
            let mut prev = vec![0.0; layer.inputs];
            for (o, d) in delta.iter().enumerate() {
                if *d != 0.0 {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
            }
            for (p, y) in prev.iter_mut().zip(input) {
                *p *= self.hidden_activation.derivative_from_output(*y);
            }
            delta = prev;
        }
        Ok(())
    }

    pub fn backward(&self, trace: &Trace, output_grad: &[f64]) -> Result<GradientSet> {
        let mut g = GradientSet::zeros_like(self);
        self.backward_into(trace, output_grad, &mut g)?;
        Ok(g)
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;
    use rand::Rng as _;

    fn random_net(sizes: &[usize], seed: u64) -> Mlp {
        let mut rng = seeding::rng(seed);
        let mut net = Mlp::new(sizes, Activation::Tanh);
        for t in net.tensors_mut() {
            for v in t {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        net
    }

    #[test]
    fn zero_net_gives_zero() {
        let net = Mlp::new(&[3, 5, 2], Activation::Tanh);
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn one_by_one_by_one() {
        let mut net = Mlp::new(&[1, 1, 1], Activation::Tanh);
        net.layers[0].weights[0] = 1.0;
        net.layers[1].weights[0] = 0.7;
        let y = net.forward(&[0.5]).unwrap()[0];
        assert!((y - 0.5f64.tanh() * 0.7).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let net = Mlp::new(&[3, 2], Activation::Tanh);
        assert!(matches!(
            net.forward(&[1.0]),
            Err(Error::Dimension {
                expected: 3,
                actual: 1
            })
        ));
        let tr = net.forward_trace(&[1.0, 2.0, 3.0]).unwrap();
        assert!(net.backward(&tr, &[1.0]).is_err());
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let net = random_net(&[4, 6, 3], 2);
        let tr = net.forward_trace(&[0.1, 0.2, -0.3, 0.9]).unwrap();
        assert!(net.backward(&tr, &[0.0; 3]).unwrap().is_zero());
    }

    #[test]
    fn linear_net_gradient_is_outer_product() {
        // y = W2 (W1 x + b1) + b2 with identity hidden activation
        let mut net = random_net(&[3, 4, 2], 5);
        net.hidden_activation = Activation::Identity;
        let x = [0.3, -1.2, 2.0];
        let gy = [0.5, -2.0];
        let tr = net.forward_trace(&x).unwrap();
        let g = net.backward(&tr, &gy).unwrap();
        let h: Vec<f64> = (0..4)
            .map(|j| {
                net.layers[0].bias[j]
                    + (0..3)
                        .map(|i| net.layers[0].weights[j * 3 + i] * x[i])
                        .sum::<f64>()
            })
            .collect();
        for o in 0..2 {
            for j in 0..4 {
                assert!((g.layers[1].weights[o * 4 + j] - gy[o] * h[j]).abs() < 1e-12);
            }
        }
        for j in 0..4 {
            let back: f64 = (0..2)
                .map(|o| gy[o] * net.layers[1].weights[o * 4 + j])
                .sum();
            for i in 0..3 {
                assert!((g.layers[0].weights[j * 3 + i] - back * x[i]).abs() < 1e-12);
            }
            assert!((g.layers[0].bias[j] - back).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_matches_forward() {
        let net = random_net(&[5, 7, 7, 2], 9);
        let x = [0.1, 0.5, -0.5, 2.0, -3.0];
        assert_eq!(
            net.forward(&x).unwrap(),
            net.forward_trace(&x).unwrap().output()
        );
    }
}
