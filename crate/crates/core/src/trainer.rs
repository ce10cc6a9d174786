//! Binary factorization-machine training by stochastic gradient descent.
//!
//! For a score `y_hat` the partial derivatives are
//! `d/dw0 = 1`, `d/dw_i = x_i` and `d/dv_if = x_i (S_f - v_if x_i)` with
//! `S_f = sum_j v_jf x_j`. Each step moves every touched parameter by
//! `-lr * (g * d y_hat/d theta + reg * theta)` where `g` is the derivative of
//! the loss with respect to the score.

use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fm::FmModel;
use crate::sparse::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Hinge,
    Logistic,
}

impl LossKind {
    /// Loss of a raw score against a `+1`/`-1` label.
    pub fn value(self, score: f64, y: f64) -> f64 {
        let margin = y * score;
        match self {
            LossKind::Hinge => (1.0 - margin).max(0.0),
            // ln(1 + e^-m) without overflow for large |m|
            LossKind::Logistic => {
                if margin > 0.0 {
                    (-margin).exp().ln_1p()
                } else {
                    -margin + margin.exp().ln_1p()
                }
            }
        }
    }

    /// Derivative of the loss with respect to the score. The hinge
    /// subgradient at the kink `y * score == 1` is 0.
    pub fn derivative(self, score: f64, y: f64) -> f64 {
        let margin = y * score;
        match self {
            LossKind::Hinge => {
                if margin < 1.0 {
                    -y
                } else {
                    0.0
                }
            }
            LossKind::Logistic => -y * sigmoid(-margin),
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hinge" => Ok(LossKind::Hinge),
            "logistic" => Ok(LossKind::Logistic),
            other => Err(Error::Config(format!("unknown loss '{other}'"))),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::Hinge => "hinge",
            LossKind::Logistic => "logistic",
        })
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Free function form of [`LossKind::value`].
pub fn loss_value(loss: LossKind, score: f64, y: f64) -> f64 {
    loss.value(score, y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub k: usize,
    pub learning_rate: f64,
    pub reg_w0: f64,
    pub reg_w: f64,
    pub reg_v: f64,
    pub epochs: usize,
    pub init_sd: f64,
    pub seed: u64,
    pub shuffle: bool,
    pub loss: LossKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k: 5,
            learning_rate: 0.05,
            reg_w0: 0.0,
            reg_w: 1e-4,
            reg_v: 1e-4,
            epochs: 100,
            init_sd: 0.1,
            seed: 1,
            shuffle: true,
            loss: LossKind::Hinge,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be a positive finite number");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.init_sd >= 0.0 && self.init_sd.is_finite()) {
            return bad("init-sd must be non-negative");
        }
        for (name, r) in [
            ("reg-w0", self.reg_w0),
            ("reg-w", self.reg_w),
            ("reg-v", self.reg_v),
        ] {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative")));
            }
        }
        Ok(())
    }
}

/// A sparse instance with a `+1`/`-1` label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub x: SparseVector,
    y: f64,
}

impl LabeledInstance {
    pub fn new(x: SparseVector, positive: bool) -> Self {
        Self {
            x,
            y: if positive { 1.0 } else { -1.0 },
        }
    }

    /// Accepts only `y == 1` or `y == -1`.
    pub fn try_new(x: SparseVector, y: f64) -> Result<Self> {
        if y == 1.0 || y == -1.0 {
            Ok(Self { x, y })
        } else {
            Err(Error::Input(format!(
                "binary label must be +1 or -1, got {y}"
            )))
        }
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn is_positive(&self) -> bool {
        self.y > 0.0
    }
}

/// Loss gradient at one instance, restricted to the parameters the instance
/// touches. Regularization is not included.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub score: f64,
    pub loss: f64,
    pub w0: f64,
    /// `(feature index, dL/dw_i)` in index order.
    pub w: Vec<(usize, f64)>,
    /// `(feature index, dL/dv_i)` in index order; each row has length `k`.
    pub v: Vec<(usize, Vec<f64>)>,
}

pub fn gradient(model: &FmModel, inst: &LabeledInstance, loss: LossKind) -> Result<Gradient> {
    inst.x.check_dim(model.n())?;
    let mut sums = Vec::new();
    let score = model.score_unchecked(&inst.x, Some(&mut sums));
    let g = loss.derivative(score, inst.y);
    let w = inst.x.iter().map(|(i, xi)| (i, g * xi)).collect();
    let v = inst
        .x
        .iter()
        .map(|(i, xi)| {
            let row = model
                .factor_row(i)
                .iter()
                .zip(&sums)
                .map(|(&vif, &s)| g * xi * (s - vif * xi))
                .collect();
            (i, row)
        })
        .collect();
    Ok(Gradient {
        score,
        loss: loss.value(score, inst.y),
        w0: g,
        w,
        v,
    })
}

/// Applies one SGD update in place and returns the loss measured before the
/// update. Only `w0` and parameters of features active in the instance move.
pub fn sgd_step(model: &mut FmModel, inst: &LabeledInstance, config: &TrainConfig) -> Result<f64> {
    let grad = gradient(model, inst, config.loss)?;
    let lr = config.learning_rate;
    model.w0 -= lr * (grad.w0 + config.reg_w0 * model.w0);
    for &(i, gi) in &grad.w {
        let wi = &mut model.w[i];
        *wi -= lr * (gi + config.reg_w * *wi);
    }
    for (i, row) in &grad.v {
        for (vif, gif) in model.factor_row_mut(*i).iter_mut().zip(row) {
            *vif -= lr * (gif + config.reg_v * *vif);
        }
    }
    Ok(grad.loss)
}

/// Zero bias and weights; factors drawn from `N(0, init_sd^2)`.
pub fn init_model(n: usize, config: &TrainConfig) -> FmModel {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    init_with(n, config, &mut rng)
}

fn init_with(n: usize, config: &TrainConfig, rng: &mut ChaCha8Rng) -> FmModel {
    let mut model = FmModel::zeros(n, config.k);
    if config.init_sd > 0.0 {
        let normal = Normal::new(0.0, config.init_sd).expect("validated std-dev");
        for x in model.v.iter_mut() {
            *x = normal.sample(rng);
        }
    }
    model
}

/// Mean loss of `model` over `data`.
pub fn mean_loss(model: &FmModel, data: &[LabeledInstance], loss: LossKind) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for inst in data {
        total += loss.value(model.predict_raw(&inst.x)?, inst.y);
    }
    Ok(total / data.len() as f64)
}

/// Mean loss plus `reg/2 * ||theta||^2` for each parameter group.
pub fn objective(model: &FmModel, data: &[LabeledInstance], config: &TrainConfig) -> Result<f64> {
    let sq = |xs: &[f64]| xs.iter().map(|x| x * x).sum::<f64>();
    Ok(mean_loss(model, data, config.loss)?
        + 0.5 * config.reg_w0 * model.w0 * model.w0
        + 0.5 * config.reg_w * sq(&model.w)
        + 0.5 * config.reg_v * sq(&model.v))
}

/// Trained model plus the mean loss observed during each epoch.
#[derive(Debug, Clone)]
pub struct TrainedBinary {
    pub model: FmModel,
    pub epoch_losses: Vec<f64>,
}

pub fn train_binary(data: &[LabeledInstance], n: usize, config: &TrainConfig) -> Result<FmModel> {
    train_binary_traced(data, n, config).map(|t| t.model)
}

/// Runs `config.epochs` passes of SGD starting from [`init_model`].
pub fn train_binary_traced(
    data: &[LabeledInstance],
    n: usize,
    config: &TrainConfig,
) -> Result<TrainedBinary> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    for inst in data {
        inst.x.check_dim(n)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = init_with(n, config, &mut rng);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for &idx in &order {
            total += sgd_step(&mut model, &data[idx], config)?;
        }
        let mean = total / data.len() as f64;
        log::debug!("epoch {} mean {} loss {mean:.6}", epoch + 1, config.loss);
        if !mean.is_finite() || !model.is_finite() {
            return Err(Error::Config(format!(
                "training diverged in epoch {}; lower the learning rate",
                epoch + 1
            )));
        }
        epoch_losses.push(mean);
    }
    Ok(TrainedBinary {
        model,
        epoch_losses,
    })
}
