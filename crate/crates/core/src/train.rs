//! Mini-batch training of the weight-shared twins.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::embeddings::{cosine_similarity, Dataset};
use crate::error::{Error, Result};
use crate::loss::{pair_loss, pair_loss_grad, DEFAULT_MARGIN};
use crate::mlp::{
    backward_accumulate, forward, init_params, MlpConfig, MlpParams, ParamGrad, DEFAULT_WIDTHS,
};
use crate::pairs::{sample_epoch, Label, Pair};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Hinge margin Δ.
    pub margin: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    pub widths: Vec<usize>,
    pub selu_on_last_hidden: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            margin: DEFAULT_MARGIN,
            n_pos: 20_000,
            n_neg: 20_000,
            batch_size: 256,
            epochs: 50,
            learning_rate: 0.01,
            momentum: 0.9,
            seed: 0,
            widths: DEFAULT_WIDTHS.to_vec(),
            selu_on_last_hidden: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad("margin must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn mlp_config(&self, input_dim: usize) -> MlpConfig {
        MlpConfig {
            input_dim,
            widths: self.widths.clone(),
            selu_on_last_hidden: self.selu_on_last_hidden,
        }
    }

    /// Seed for the initial weights.
    pub fn init_seed(&self) -> u64 {
        derive_seed(self.seed, u64::MAX)
    }

    /// Seed for the pair plan of `epoch`.
    pub fn epoch_seed(&self, epoch: usize) -> u64 {
        derive_seed(self.seed, epoch as u64)
    }
}

/// Momentum buffers for SGD.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub velocity: ParamGrad,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(params: &MlpParams) -> Self {
        Self {
            velocity: ParamGrad::zeros_like(params),
            step: 0,
        }
    }
}

/// Loss of one pair and its gradient with respect to the shared parameters.
///
/// `cos α` comes from the raw descriptors and is constant with respect to
/// the parameters, so gradient flows only through the two scores. Both
/// twins are the same `params`, so their contributions add up.
pub fn pair_objective(
    params: &MlpParams,
    f1: &[f64],
    f2: &[f64],
    y: Label,
    margin: f64,
) -> Result<(f64, ParamGrad)> {
    let cos = cosine_similarity(f1, f2)?;
    let t1 = forward(params, f1)?;
    let t2 = forward(params, f2)?;
    let (r1, r2) = (t1.score(), t2.score());
    let mut grad = ParamGrad::zeros_like(params);
    if !(r1.is_finite() && r2.is_finite()) {
        // The hinge would silently map NaN to zero loss.
        return Ok((f64::NAN, grad));
    }
    let loss = pair_loss(r1, r2, cos, y, margin);
    let (d1, d2) = pair_loss_grad(r1, r2, cos, y, margin);
    if d1 != 0.0 {
        backward_accumulate(params, &t1, d1, &mut grad)?;
    }
    if d2 != 0.0 {
        backward_accumulate(params, &t2, d2, &mut grad)?;
    }
    Ok((loss, grad))
}

/// Adds the gradient of one pair's loss into `grad` and returns the loss.
fn accumulate_pair(
    params: &MlpParams,
    f1: &[f64],
    f2: &[f64],
    y: Label,
    margin: f64,
    grad: &mut ParamGrad,
) -> Result<f64> {
    let cos = cosine_similarity(f1, f2)?;
    let t1 = forward(params, f1)?;
    let t2 = forward(params, f2)?;
    let (r1, r2) = (t1.score(), t2.score());
    if !(r1.is_finite() && r2.is_finite()) {
        return Ok(f64::NAN);
    }
    let (d1, d2) = pair_loss_grad(r1, r2, cos, y, margin);
    if d1 != 0.0 {
        backward_accumulate(params, &t1, d1, grad)?;
    }
    if d2 != 0.0 {
        backward_accumulate(params, &t2, d2, grad)?;
    }
    Ok(pair_loss(r1, r2, cos, y, margin))
}

/// Mean loss and mean gradient over `batch`.
pub fn batch_objective(
    params: &MlpParams,
    batch: &[Pair],
    ds: &Dataset,
    margin: f64,
) -> Result<(f64, ParamGrad)> {
    let mut grad = ParamGrad::zeros_like(params);
    let mut total = 0.0;
    for pair in batch {
        let (f1, f2) = (&ds.record(pair.i)?.vector, &ds.record(pair.j)?.vector);
        total += accumulate_pair(params, f1, f2, pair.y, margin, &mut grad)?;
    }
    if batch.is_empty() {
        return Ok((0.0, grad));
    }
    let n = batch.len() as f64;
    grad.scale(1.0 / n);
    Ok((total / n, grad))
}

/// One SGD-with-momentum update on `batch`; returns the mean batch loss
/// measured before the update.
pub fn batch_step(
    params: &mut MlpParams,
    batch: &[Pair],
    ds: &Dataset,
    state: &mut OptimizerState,
    config: &TrainConfig,
) -> Result<f64> {
    let (loss, grad) = batch_objective(params, batch, ds, config.margin)?;
    state.step += 1;
    if !loss.is_finite() || !grad.is_finite() {
        return Err(Error::Divergence {
            step: state.step,
            detail: format!("non-finite loss or gradient (loss = {loss})"),
        });
    }
    state.velocity.scale(config.momentum);
    state.velocity.add_scaled(&grad, 1.0);
    params.descend(&state.velocity, config.learning_rate);
    if params.flat().iter().any(|p| !p.is_finite()) {
        return Err(Error::Divergence {
            step: state.step,
            detail: String::from("parameters became non-finite"),
        });
    }
    Ok(loss)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub mean_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: MlpParams,
    pub history: Vec<EpochLoss>,
}

/// Trains from freshly initialized weights, resampling the pair plan every
/// epoch. The last short batch of an epoch is averaged over its own size.
pub fn train(
    ds: &Dataset,
    eligible: &BTreeSet<String>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let mut params = init_params(&config.mlp_config(ds.dimension()), config.init_seed())?;
    let mut state = OptimizerState::new(&params);
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let plan = sample_epoch(
            ds,
            eligible,
            config.n_pos,
            config.n_neg,
            config.epoch_seed(epoch),
        )?;
        let mut total = 0.0;
        for batch in plan.pairs.chunks(config.batch_size) {
            let loss = batch_step(&mut params, batch, ds, &mut state, config)?;
            total += loss * batch.len() as f64;
        }
        let mean_loss = if plan.is_empty() {
            0.0
        } else {
            total / plan.len() as f64
        };
        history.push(EpochLoss { epoch, mean_loss });
    }
    Ok(TrainOutcome { params, history })
}

/// Iconicity score r(f) from a single twin.
pub fn score(params: &MlpParams, embedding: &[f64]) -> Result<f64> {
    Ok(forward(params, embedding)?.score())
}

pub fn score_dataset(params: &MlpParams, ds: &Dataset) -> Result<Vec<f64>> {
    ds.records()
        .iter()
        .map(|r| score(params, &r.vector))
        .collect()
}
