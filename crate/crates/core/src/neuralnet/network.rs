use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::{Activation, OutputActivation};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Architecture {
    pub hidden_layers: usize,
    /// Hidden width as a multiple of the input dimension.
    pub hidden_unit_multiplier: usize,
    pub hidden_activation: Activation,
    pub output_activation: OutputActivation,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            hidden_layers: 2,
            hidden_unit_multiplier: 8,
            hidden_activation: Activation::Sigmoid,
            output_activation: OutputActivation::None,
        }
    }
}

impl Architecture {
    pub fn check(&self) -> Result<()> {
        if self.hidden_layers == 0 {
            return Err(Error::field("hidden_layers", "must be at least 1"));
        }
        if self.hidden_unit_multiplier == 0 {
            return Err(Error::field("hidden_unit_multiplier", "must be at least 1"));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!(
            "{}x{}/{}/{}",
            self.hidden_layers,
            self.hidden_unit_multiplier,
            self.hidden_activation.name(),
            self.output_activation.name()
        )
    }
}

/// Fully connected layer; `w` is `inputs x outputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub arch: Architecture,
    pub layers: Vec<Layer>,
}

/// Gradients with the same shapes as [`Network::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| (l.w.sum() + l.b.sum()).is_finite())
    }

    pub fn flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }
}

fn flatten(layers: &[Layer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.w.iter().chain(l.b.iter()).copied())
        .collect()
}

impl Network {
    /// Glorot-uniform weights and zero biases.
    pub fn init(arch: Architecture, input_dim: usize, output_dim: usize, seed_value: u64) -> Result<Self> {
        arch.check()?;
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::Shape("network dimensions must be positive".into()));
        }
        let hidden = arch.hidden_unit_multiplier * input_dim;
        let mut dims = vec![input_dim];
        dims.extend(std::iter::repeat_n(hidden, arch.hidden_layers));
        dims.push(output_dim);
        let mut rng = seed::rng(seed_value, &[0x6e6e]);
        let layers = dims
            .windows(2)
            .map(|d| {
                let limit = (6.0 / (d[0] + d[1]) as f64).sqrt();
                Layer {
                    w: Array2::from_shape_simple_fn((d[0], d[1]), || rng.random_range(-limit..limit)),
                    b: Array1::zeros(d[1]),
                }
            })
            .collect();
        Ok(Network { arch, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().w.ncols()
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.w.ncols()).collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::Shape(format!("{} parameters, expected {}", flat.len(), self.n_params())));
        }
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            l.w.iter_mut().chain(l.b.iter_mut()).for_each(|v| *v = it.next().unwrap());
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} columns, network expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Activations of every layer, input first.
    fn activations(&self, x: &Array2<f64>) -> Vec<Array2<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_owned());
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = acts[i].dot(&l.w);
            z += &l.b;
            if i < last {
                self.arch.hidden_activation.apply(&mut z);
            } else {
                self.arch.output_activation.apply(&mut z);
            }
            acts.push(z);
        }
        acts
    }

    /// Predictions for each row of `x`, in scaled space.
    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        Ok(self.activations(x).pop().unwrap())
    }

    /// MAE loss of a batch and its gradient with respect to every parameter.
    pub fn backward(&self, x: &Array2<f64>, y: &Array2<f64>) -> Result<(f64, Gradients)> {
        self.check_input(x)?;
        if y.nrows() != x.nrows() || y.ncols() != self.output_dim() {
            return Err(Error::Shape("target batch does not match input batch".into()));
        }
        let acts = self.activations(x);
        let out = acts.last().unwrap();
        let scale = 1.0 / y.len() as f64;
        let loss = loss_mae(out, y);
        // subgradient of |.| is 0 at 0
        let mut delta = (out - y).mapv(|d| {
            if d > 0.0 {
                scale
            } else if d < 0.0 {
                -scale
            } else {
                0.0
            }
        });
        self.arch.output_activation.scale_by_derivative(&mut delta, out);

        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let a_prev = &acts[i];
            let gw = a_prev.t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut next = delta.dot(&self.layers[i].w.t());
                self.arch.hidden_activation.scale_by_derivative(&mut next, a_prev);
                delta = next;
            }
            grads.push(Layer { w: gw, b: gb });
        }
        grads.reverse();
        Ok((loss, Gradients { layers: grads }))
    }

    /// Jacobian of the outputs with respect to the inputs at `x`, shape `outputs x inputs`.
    pub fn input_jacobian(&self, x: &[f64]) -> Result<Array2<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!("{} inputs, expected {}", x.len(), self.input_dim())));
        }
        let row = Array2::from_shape_vec((1, x.len()), x.to_vec()).unwrap();
        let acts = self.activations(&row);
        let last = self.layers.len() - 1;
        // forward mode: rows index the inputs
        let mut j = Array2::<f64>::eye(x.len());
        for (i, l) in self.layers.iter().enumerate() {
            j = j.dot(&l.w);
            let a = acts[i + 1].broadcast(j.raw_dim()).unwrap().to_owned();
            if i < last {
                self.arch.hidden_activation.scale_by_derivative(&mut j, &a);
            } else {
                self.arch.output_activation.scale_by_derivative(&mut j, &a);
            }
        }
        Ok(j.reversed_axes())
    }
}

/// Mean absolute error over every element.
pub fn loss_mae(pred: &Array2<f64>, y: &Array2<f64>) -> f64 {
    if pred.is_empty() {
        return 0.0;
    }
    (pred - y).mapv(f64::abs).sum() / pred.len() as f64
}
