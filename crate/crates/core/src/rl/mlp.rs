use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    Sigmoid,
    Identity,
}

impl OutputActivation {
    fn apply(self, z: f64) -> f64 {
        match self {
            OutputActivation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            OutputActivation::Identity => z,
        }
    }

    /// Derivative expressed through the activated output `y`.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            OutputActivation::Sigmoid => y * (1.0 - y),
            OutputActivation::Identity => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OutputActivation::Sigmoid => "sigmoid",
            OutputActivation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sigmoid" => Some(OutputActivation::Sigmoid),
            "identity" => Some(OutputActivation::Identity),
            _ => None,
        }
    }
}

/// Two fully connected layers: `input → hidden (ReLU) → output`.
///
/// Parameters live in one flat vector laid out as `[W1, b1, W2, b2]`, with
/// both weight matrices row-major (one row per output unit).
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub activation: OutputActivation,
    pub params: Vec<f64>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Trace {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

impl Mlp {
    pub fn param_count(input: usize, hidden: usize, output: usize) -> usize {
        hidden * input + hidden + output * hidden + output
    }

    pub fn zeros(input: usize, hidden: usize, output: usize, activation: OutputActivation) -> Self {
        Self {
            input,
            hidden,
            output,
            activation,
            params: vec![0.0; Self::param_count(input, hidden, output)],
        }
    }

    /// Weights and biases uniform in `±1/√fan_in` of their layer.
    pub fn random<R: Rng + ?Sized>(
        input: usize,
        hidden: usize,
        output: usize,
        activation: OutputActivation,
        rng: &mut R,
    ) -> Self {
        let mut net = Self::zeros(input, hidden, output, activation);
        let (l1, l2) = net.layer_ranges();
        let b1 = 1.0 / (input as f64).sqrt();
        let b2 = 1.0 / (hidden as f64).sqrt();
        for p in &mut net.params[l1] {
            *p = rng.random_range(-b1..=b1);
        }
        for p in &mut net.params[l2] {
            *p = rng.random_range(-b2..=b2);
        }
        net
    }

    fn layer_ranges(&self) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let l1 = self.hidden * self.input + self.hidden;
        (0..l1, l1..self.params.len())
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.input;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.output * self.hidden;
        (b1, w2, b2)
    }

    pub fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.input {
            Ok(())
        } else {
            Err(Error::Dimension {
                what: "network input",
                expected: self.input,
                actual: x.len(),
            })
        }
    }

    pub fn forward_trace(&self, x: &[f64]) -> Trace {
        debug_assert_eq!(x.len(), self.input);
        let (ob1, ow2, ob2) = self.offsets();
        let p = &self.params;
        let mut hidden = Vec::with_capacity(self.hidden);
        for h in 0..self.hidden {
            let row = &p[h * self.input..(h + 1) * self.input];
            let z = p[ob1 + h] + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
            hidden.push(z.max(0.0));
        }
        let mut output = Vec::with_capacity(self.output);
        for o in 0..self.output {
            let row = &p[ow2 + o * self.hidden..ow2 + (o + 1) * self.hidden];
            let z = p[ob2 + o] + row.iter().zip(&hidden).map(|(w, hi)| w * hi).sum::<f64>();
            output.push(self.activation.apply(z));
        }
        Trace { hidden, output }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_trace(x).output
    }

    /// Backpropagates `grad_out = ∂L/∂y` through one traced pass.
    ///
    /// Parameter gradients are accumulated into `grad_params`; the input
    /// gradient is written to `grad_input`. Either may be skipped.
    pub fn backward(
        &self,
        x: &[f64],
        trace: &Trace,
        grad_out: &[f64],
        grad_params: Option<&mut [f64]>,
        grad_input: Option<&mut [f64]>,
    ) {
        let (ob1, ow2, ob2) = self.offsets();
        let p = &self.params;
        let delta_out: Vec<f64> = grad_out
            .iter()
            .zip(&trace.output)
            .map(|(g, y)| g * self.activation.derivative_from_output(*y))
            .collect();
        let mut delta_hidden = vec![0.0; self.hidden];
        for (o, d) in delta_out.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            let row = &p[ow2 + o * self.hidden..ow2 + (o + 1) * self.hidden];
            for (dh, w) in delta_hidden.iter_mut().zip(row) {
                *dh += w * d;
            }
        }
        for (dh, h) in delta_hidden.iter_mut().zip(&trace.hidden) {
            if *h <= 0.0 {
                *dh = 0.0;
            }
        }
        if let Some(g) = grad_params {
            for h in 0..self.hidden {
                let d = delta_hidden[h];
                if d != 0.0 {
                    let row = &mut g[h * self.input..(h + 1) * self.input];
                    for (gw, xi) in row.iter_mut().zip(x) {
                        *gw += d * xi;
                    }
                    g[ob1 + h] += d;
                }
            }
            for (o, d) in delta_out.iter().enumerate() {
                let row = &mut g[ow2 + o * self.hidden..ow2 + (o + 1) * self.hidden];
                for (gw, hi) in row.iter_mut().zip(&trace.hidden) {
                    *gw += d * hi;
                }
                g[ob2 + o] += d;
            }
        }
        if let Some(gi) = grad_input {
            gi.iter_mut().for_each(|v| *v = 0.0);
            for h in 0..self.hidden {
                let d = delta_hidden[h];
                if d == 0.0 {
                    continue;
                }
                let row = &p[h * self.input..(h + 1) * self.input];
                for (g, w) in gi.iter_mut().zip(row) {
                    *g += w * d;
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.input == other.input
            && self.hidden == other.hidden
            && self.output == other.output
            && self.activation == other.activation
    }
}
