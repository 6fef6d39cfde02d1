use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
}

/// Output layer activation. `ReluShifted` is `max(z, 0) - 1`, bounded below by -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    None,
    ReluShifted,
}

impl Activation {
    pub const ALL: [Activation; 3] = [Activation::Sigmoid, Activation::Tanh, Activation::Relu];

    pub fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Sigmoid => z.mapv_inplace(|v| 1.0 / (1.0 + (-v).exp())),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
        }
    }

    /// Multiplies `g` in place by the derivative, given the activated values `a`.
    pub fn scale_by_derivative(self, g: &mut Array2<f64>, a: &Array2<f64>) {
        let zip = Zip::from(g).and(a);
        match self {
            Activation::Sigmoid => zip.for_each(|g, &a| *g *= a * (1.0 - a)),
            Activation::Tanh => zip.for_each(|g, &a| *g *= 1.0 - a * a),
            Activation::Relu => zip.for_each(|g, &a| {
                if a <= 0.0 {
                    *g = 0.0
                }
            }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }
}

impl OutputActivation {
    pub const ALL: [OutputActivation; 2] = [OutputActivation::None, OutputActivation::ReluShifted];

    pub fn apply(self, z: &mut Array2<f64>) {
        if self == OutputActivation::ReluShifted {
            z.mapv_inplace(|v| v.max(0.0) - 1.0);
        }
    }

    /// Derivative factor given the activated output `a`.
    pub fn scale_by_derivative(self, g: &mut Array2<f64>, a: &Array2<f64>) {
        if self == OutputActivation::ReluShifted {
            Zip::from(g).and(a).for_each(|g, &a| {
                if a <= -1.0 {
                    *g = 0.0
                }
            });
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OutputActivation::None => "none",
            OutputActivation::ReluShifted => "relu_shifted",
        }
    }
}
