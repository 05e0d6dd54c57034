//! Feed-forward ReLU network trained full-batch with Adam on squared error.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, ModelError, Standardizer};
use crate::seeding::rng_from;

pub const N_HIDDEN: usize = 5;
pub const DEFAULT_LEARNING_RATE: f64 = 0.001;
pub const DEFAULT_EPOCHS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Uniform on ±1/√fan_in, biases zero.
    #[default]
    FanIn,
    /// All weights and biases zero.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub rng_seed: u64,
    #[serde(default)]
    pub init: Init,
}

impl MlpParams {
    pub fn new(hidden_sizes: [usize; N_HIDDEN], rng_seed: u64) -> MlpParams {
        MlpParams {
            hidden_sizes: hidden_sizes.to_vec(),
            learning_rate: DEFAULT_LEARNING_RATE,
            epochs: DEFAULT_EPOCHS,
            rng_seed,
            init: Init::FanIn,
        }
    }

    fn check(&self) -> Result<(), ModelError> {
        if self.hidden_sizes.len() != N_HIDDEN || self.hidden_sizes.contains(&0) {
            return Err(ModelError::Params(format!(
                "mlp needs {N_HIDDEN} positive hidden sizes, got {:?}",
                self.hidden_sizes
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) || self.epochs == 0 {
            return Err(ModelError::Params(
                "mlp needs learning_rate > 0 and epochs ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

/// Dense layers; `weights[l]` is (fan_in × fan_out).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

impl Network {
    pub fn new(sizes: &[usize], init: Init, seed: u64) -> Network {
        let mut rng = rng_from(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            weights.push(DMatrix::from_fn(w[0], w[1], |_, _| match init {
                Init::FanIn => rng.random_range(-bound..bound),
                Init::Zero => 0.0,
            }));
            biases.push(DVector::zeros(w[1]));
        }
        Network { weights, biases }
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Activations of every layer; the last one is the linear output.
    fn forward(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let mut acts = vec![x.clone()];
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut h = acts[l].clone() * w;
            for mut row in h.row_iter_mut() {
                row += b.transpose();
            }
            if l < last {
                h.apply(|v| *v = v.max(0.0));
            }
            acts.push(h);
        }
        acts
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        self.forward(x)
            .pop()
            .expect("output layer")
            .column(0)
            .into_owned()
    }

    /// Mean of ½(ŷ − y)² and its gradient, laid out like the network.
    pub fn loss_and_grad(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> (f64, Network) {
        let acts = self.forward(x);
        let n = x.nrows() as f64;
        let out = acts.last().expect("output").column(0);
        let resid = out - y;
        let loss = 0.5 * resid.norm_squared() / n;
        let mut delta = DMatrix::from_column_slice(resid.len(), 1, (resid / n).as_slice());
        let mut gw = vec![DMatrix::zeros(0, 0); self.weights.len()];
        let mut gb = vec![DVector::zeros(0); self.biases.len()];
        for l in (0..self.weights.len()).rev() {
            gw[l] = acts[l].transpose() * &delta;
            gb[l] = delta.row_sum().transpose();
            if l > 0 {
                let mut back = &delta * self.weights[l].transpose();
                back.zip_apply(&acts[l], |d, a| {
                    if a <= 0.0 {
                        *d = 0.0
                    }
                });
                delta = back;
            }
        }
        (
            loss,
            Network {
                weights: gw,
                biases: gb,
            },
        )
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights
            .iter_mut()
            .flat_map(|w| w.iter_mut())
            .chain(self.biases.iter_mut().flat_map(|b| b.iter_mut()))
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights
            .iter()
            .flat_map(|w| w.iter())
            .chain(self.biases.iter().flat_map(|b| b.iter()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub scaler: Standardizer,
    pub net: Network,
    pub final_loss: f64,
}

impl MlpModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let z = self.scaler.apply(row);
        self.net.predict(&DMatrix::from_row_slice(1, z.len(), &z))[0]
    }
}

/// Layer sizes from input width through the hidden layers to one output.
pub fn layer_sizes(n_inputs: usize, hidden: &[usize]) -> Vec<usize> {
    std::iter::once(n_inputs)
        .chain(hidden.iter().copied())
        .chain(std::iter::once(1))
        .collect()
}

pub fn fit_mlp(data: &Dataset, params: &MlpParams) -> Result<MlpModel, ModelError> {
    params.check()?;
    let scaler = Standardizer::fit(&data.x);
    let z: Vec<f64> = data.x.rows.iter().flat_map(|r| scaler.apply(r)).collect();
    let x = DMatrix::from_row_slice(data.n(), data.p(), &z);
    let y = DVector::from_column_slice(data.y());
    let mut net = Network::new(
        &layer_sizes(data.p(), &params.hidden_sizes),
        params.init,
        params.rng_seed,
    );
    // start the output at the mean response
    let last = net.biases.len() - 1;
    net.biases[last][0] = y.mean();

    let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let n_params = net.n_params();
    let (mut m, mut v) = (vec![0.0; n_params], vec![0.0; n_params]);
    for epoch in 1..=params.epochs {
        let (loss, grad) = net.loss_and_grad(&x, &y);
        if !loss.is_finite() {
            return Err(ModelError::NonFinite(epoch));
        }
        let (c1, c2) = (1.0 - b1.powi(epoch as i32), 1.0 - b2.powi(epoch as i32));
        for (((p, g), mk), vk) in net
            .params_mut()
            .zip(grad.params())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *mk = b1 * *mk + (1.0 - b1) * g;
            *vk = b2 * *vk + (1.0 - b2) * g * g;
            *p -= params.learning_rate * (*mk / c1) / ((*vk / c2).sqrt() + eps);
        }
    }
    let final_loss = net.loss_and_grad(&x, &y).0;
    if !final_loss.is_finite() {
        return Err(ModelError::NonFinite(params.epochs));
    }
    Ok(MlpModel {
        scaler,
        net,
        final_loss,
    })
}

/// Hidden sizes chosen per setting.
pub fn default_hidden_sizes(setting: crate::features::Setting) -> [usize; N_HIDDEN] {
    use crate::features::Setting::*;
    match setting {
        All => [1024, 128, 128, 32, 1024],
        NonImage => [1024, 64, 512, 32, 1024],
        Image => [1024, 16, 16, 128, 1024],
        Common => [1024, 128, 32, 256, 1024],
    }
}
