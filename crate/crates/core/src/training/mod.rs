//! Composite-loss training with Momentum SGD and dev-set snapshot selection.

pub mod loss;
mod optim;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{AlPair, DatasetBundle, LabeledEvent};
use crate::evaluation::{evaluate, EvalError};
use crate::extraction::EventPair;
use crate::model::{EncoderKind, Parameters, PolarityModel, Vocabulary};
use crate::scalar::{cast, Scalar};

pub use loss::AlScores;
pub use optim::momentum_step;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("batch is empty")]
    EmptyBatch,
    #[error("no active loss has any data in this step")]
    NoActiveData,
    #[error("objective {objective} needs {dataset} data but the bundle has none")]
    MissingDataset {
        objective: Objective,
        dataset: &'static str,
    },
    #[error("dev set is empty")]
    EmptyDevSet,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {params} parameters, {grads} gradients, {velocity} velocities")]
    ShapeMismatch {
        params: usize,
        grads: usize,
        velocity: usize,
    },
    #[error("parameter {parameter} became non-finite after epoch {epoch}")]
    NonFinite { epoch: usize, parameter: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Which dataset combination is optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Objective {
    #[serde(rename = "al")]
    Al,
    #[default]
    #[serde(rename = "al+ca+co")]
    AlCaCo,
    #[serde(rename = "acp")]
    Acp,
    #[serde(rename = "acp+al+ca+co")]
    AcpAlCaCo,
}

impl Objective {
    pub fn uses_al(self) -> bool {
        self != Objective::Acp
    }

    pub fn uses_ca_co(self) -> bool {
        matches!(self, Objective::AlCaCo | Objective::AcpAlCaCo)
    }

    pub fn uses_acp(self) -> bool {
        matches!(self, Objective::Acp | Objective::AcpAlCaCo)
    }
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "al" => Ok(Objective::Al),
            "al+ca+co" => Ok(Objective::AlCaCo),
            "acp" => Ok(Objective::Acp),
            "acp+al+ca+co" => Ok(Objective::AcpAlCaCo),
            other => Err(format!(
                "unknown objective {other:?} (expected al|al+ca+co|acp|acp+al+ca+co)"
            )),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Al => "al",
            Objective::AlCaCo => "al+ca+co",
            Objective::Acp => "acp",
            Objective::AcpAlCaCo => "acp+al+ca+co",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lambda_al: f64,
    pub lambda_ca: f64,
    pub lambda_co: f64,
    pub mu: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub rng_seed: u64,
    pub objective: Objective,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda_al: 1.0,
            lambda_ca: 0.35,
            lambda_co: 1.0,
            mu: 0.5,
            learning_rate: 0.05,
            momentum: 0.9,
            batch_size: 64,
            epochs: 50,
            rng_seed: 0,
            objective: Objective::AlCaCo,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        for (name, v) in [
            ("lambda_al", self.lambda_al),
            ("lambda_ca", self.lambda_ca),
            ("lambda_co", self.lambda_co),
            ("mu", self.mu),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(TrainError::InvalidConfig(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        if !self.learning_rate.is_finite() || !self.momentum.is_finite() {
            return Err(TrainError::InvalidConfig(
                "learning_rate and momentum must be finite".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(TrainError::InvalidConfig("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Model construction settings used when training from scratch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub encoder: EncoderKind,
    pub dim: usize,
    pub min_frequency: usize,
    pub max_vocab: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            encoder: EncoderKind::MeanOfEmbeddings,
            dim: 64,
            min_frequency: 1,
            max_vocab: 100_000,
        }
    }
}

/// Builds the vocabulary from every bundle event and a seeded random model.
pub fn init_model<T: Scalar>(
    bundle: &DatasetBundle,
    config: &ModelConfig,
    seed: u64,
) -> PolarityModel<T> {
    let vocab = Vocabulary::build(bundle.events(), config.min_frequency, config.max_vocab);
    PolarityModel::init(vocab, config.dim, config.encoder, seed)
}

/// Loss components of one evaluation; inactive components are 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub l_al: f64,
    pub l_ca: f64,
    pub l_co: f64,
    pub l_acp: f64,
    pub total: f64,
}

impl LossReport {
    fn accumulate(&mut self, other: &LossReport) {
        self.l_al += other.l_al;
        self.l_ca += other.l_ca;
        self.l_co += other.l_co;
        self.l_acp += other.l_acp;
        self.total += other.total;
    }

    fn scaled(mut self, factor: f64) -> LossReport {
        self.l_al *= factor;
        self.l_ca *= factor;
        self.l_co *= factor;
        self.l_acp *= factor;
        self.total *= factor;
        self
    }
}

/// One batch per dataset for a single optimizer step.
#[derive(Debug, Clone, Default)]
pub struct Batches<'a> {
    pub al: Vec<&'a AlPair>,
    pub ca: Vec<&'a EventPair>,
    pub co: Vec<&'a EventPair>,
    pub acp: Vec<&'a LabeledEvent>,
}

impl<'a> Batches<'a> {
    pub fn from_bundle(bundle: &'a DatasetBundle) -> Self {
        Batches {
            al: bundle.al.iter().collect(),
            ca: bundle.ca.iter().collect(),
            co: bundle.co.iter().collect(),
            acp: bundle.supervised.iter().collect(),
        }
    }
}

fn n_of<T: Scalar>(len: usize) -> T {
    T::from_usize(len).expect("batch size fits the scalar")
}

fn al_value<T: Scalar>(
    model: &PolarityModel<T>,
    batch: &[&AlPair],
    lambda_al: T,
    grads: Option<&mut Parameters<T>>,
) -> Result<T, TrainError> {
    let n: T = n_of(batch.len());
    let mut scores = Vec::with_capacity(batch.len());
    let mut fwds = Vec::new();
    for a in batch {
        let f1 = model.forward(&a.pair.former);
        let f2 = model.forward(&a.pair.latter);
        scores.push(AlScores {
            r_former: cast(a.r_former.as_f64()),
            r_latter: cast(a.r_latter.as_f64()),
            p_former: f1.score,
            p_latter: f2.score,
        });
        if grads.is_some() {
            fwds.push((f1, f2));
        }
    }
    let value = loss::al_loss(&scores, lambda_al)?;
    if let Some(g) = grads {
        for (s, (f1, f2)) in scores.iter().zip(&fwds) {
            let (d1, d2) = loss::al_score_grad(s, lambda_al, n);
            model.backward(f1, d1, g);
            model.backward(f2, d2, g);
        }
    }
    Ok(value)
}

#[derive(Clone, Copy)]
enum PairLoss {
    Cause,
    Concession,
}

fn pair_value<T: Scalar>(
    model: &PolarityModel<T>,
    batch: &[&EventPair],
    kind: PairLoss,
    lambda: T,
    mu: T,
    grads: Option<&mut Parameters<T>>,
) -> Result<T, TrainError> {
    let n: T = n_of(batch.len());
    let fwds: Vec<_> = batch
        .iter()
        .map(|p| (model.forward(&p.former), model.forward(&p.latter)))
        .collect();
    let scores: Vec<(T, T)> = fwds.iter().map(|(a, b)| (a.score, b.score)).collect();
    let value = match kind {
        PairLoss::Cause => loss::ca_loss(&scores, lambda, mu)?,
        PairLoss::Concession => loss::co_loss(&scores, lambda, mu)?,
    };
    if let Some(g) = grads {
        for (f1, f2) in &fwds {
            let (d1, d2) = match kind {
                PairLoss::Cause => loss::ca_score_grad(f1.score, f2.score, lambda, mu, n),
                PairLoss::Concession => loss::co_score_grad(f1.score, f2.score, lambda, mu, n),
            };
            model.backward(f1, d1, g);
            model.backward(f2, d2, g);
        }
    }
    Ok(value)
}

fn acp_value<T: Scalar>(
    model: &PolarityModel<T>,
    batch: &[&LabeledEvent],
    grads: Option<&mut Parameters<T>>,
) -> Result<T, TrainError> {
    let n: T = n_of(batch.len());
    let fwds: Vec<_> = batch.iter().map(|e| model.forward(&e.event)).collect();
    let items: Vec<(T, T)> = batch
        .iter()
        .zip(&fwds)
        .map(|(e, f)| (cast(e.score.as_f64()), f.score))
        .collect();
    let value = loss::acp_loss(&items)?;
    if let Some(g) = grads {
        for (&(r, p), f) in items.iter().zip(&fwds) {
            model.backward(f, loss::acp_score_grad(r, p, n), g);
        }
    }
    Ok(value)
}

/// AL loss of a batch under the model.
pub fn loss_al<T: Scalar>(
    model: &PolarityModel<T>,
    batch: &[AlPair],
    lambda_al: f64,
) -> Result<T, TrainError> {
    let refs: Vec<_> = batch.iter().collect();
    al_value(model, &refs, cast(lambda_al), None)
}

pub fn loss_ca<T: Scalar>(
    model: &PolarityModel<T>,
    batch: &[EventPair],
    lambda_ca: f64,
    mu: f64,
) -> Result<T, TrainError> {
    let refs: Vec<_> = batch.iter().collect();
    pair_value(
        model,
        &refs,
        PairLoss::Cause,
        cast(lambda_ca),
        cast(mu),
        None,
    )
}

pub fn loss_co<T: Scalar>(
    model: &PolarityModel<T>,
    batch: &[EventPair],
    lambda_co: f64,
    mu: f64,
) -> Result<T, TrainError> {
    let refs: Vec<_> = batch.iter().collect();
    pair_value(
        model,
        &refs,
        PairLoss::Concession,
        cast(lambda_co),
        cast(mu),
        None,
    )
}

pub fn loss_acp<T: Scalar>(
    model: &PolarityModel<T>,
    batch: &[LabeledEvent],
) -> Result<T, TrainError> {
    let refs: Vec<_> = batch.iter().collect();
    acp_value(model, &refs, None)
}

fn evaluate_objective<T: Scalar>(
    model: &PolarityModel<T>,
    batches: &Batches<'_>,
    config: &TrainConfig,
    mut grads: Option<&mut Parameters<T>>,
) -> Result<LossReport, TrainError> {
    let obj = config.objective;
    let mut report = LossReport::default();
    let mut any = false;
    if obj.uses_al() && !batches.al.is_empty() {
        report.l_al = al_value(
            model,
            &batches.al,
            cast(config.lambda_al),
            grads.as_deref_mut(),
        )?
        .to_f64_exact();
        any = true;
    }
    if obj.uses_ca_co() && !batches.ca.is_empty() {
        report.l_ca = pair_value(
            model,
            &batches.ca,
            PairLoss::Cause,
            cast(config.lambda_ca),
            cast(config.mu),
            grads.as_deref_mut(),
        )?
        .to_f64_exact();
        any = true;
    }
    if obj.uses_ca_co() && !batches.co.is_empty() {
        report.l_co = pair_value(
            model,
            &batches.co,
            PairLoss::Concession,
            cast(config.lambda_co),
            cast(config.mu),
            grads.as_deref_mut(),
        )?
        .to_f64_exact();
        any = true;
    }
    if obj.uses_acp() && !batches.acp.is_empty() {
        report.l_acp = acp_value(model, &batches.acp, grads)?.to_f64_exact();
        any = true;
    }
    if !any {
        return Err(TrainError::NoActiveData);
    }
    report.total = report.l_al + report.l_ca + report.l_co + report.l_acp;
    Ok(report)
}

/// Value of the configured objective on the given batches.
pub fn objective_value<T: Scalar>(
    model: &PolarityModel<T>,
    batches: &Batches<'_>,
    config: &TrainConfig,
) -> Result<LossReport, TrainError> {
    evaluate_objective(model, batches, config, None)
}

/// Analytic gradient of the summed active losses with respect to every parameter.
pub fn compute_gradients<T: Scalar>(
    model: &PolarityModel<T>,
    batches: &Batches<'_>,
    config: &TrainConfig,
) -> Result<(Parameters<T>, LossReport), TrainError> {
    let mut grads = Parameters::zeros(model.shape());
    let report = evaluate_objective(model, batches, config, Some(&mut grads))?;
    Ok((grads, report))
}

/// Endless seeded reshuffling over one dataset.
struct Cycler {
    order: Vec<usize>,
    pos: usize,
    rng: ChaCha8Rng,
}

impl Cycler {
    fn new(len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..len).collect();
        order.shuffle(&mut rng);
        Cycler { order, pos: 0, rng }
    }

    fn next_batch(&mut self, size: usize) -> &[usize] {
        if self.order.is_empty() {
            return &[];
        }
        if self.pos >= self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.pos = 0;
        }
        let start = self.pos;
        self.pos = (start + size).min(self.order.len());
        &self.order[start..self.pos]
    }

    fn steps_per_pass(&self, size: usize) -> usize {
        self.order.len().div_ceil(size)
    }
}

/// Per-epoch log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean over the epoch's steps of each batch loss, measured before the update.
    pub l_al: f64,
    pub l_ca: f64,
    pub l_co: f64,
    pub l_acp: f64,
    pub total: f64,
    pub dev_accuracy: f64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose snapshot was returned.
    pub best_epoch: usize,
    pub best_dev_accuracy: f64,
}

impl TrainingLog {
    pub fn write_jsonl(&self, w: &mut dyn std::io::Write) -> std::io::Result<()> {
        for r in &self.epochs {
            crate::io::write_json_line(w, r)?;
        }
        Ok(())
    }
}

fn stream_seed(base: u64, stream: u64) -> u64 {
    base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs `config.epochs` epochs of Momentum SGD and returns the snapshot with
/// the best dev accuracy (earliest on ties) together with the per-epoch log.
///
/// Every step draws one batch from each dataset the objective uses and applies
/// the gradient of the summed losses. Datasets cycle independently, each
/// reshuffled on every pass; an epoch is as many steps as the largest active
/// dataset needs for one pass.
pub fn train<T: Scalar>(
    model: PolarityModel<T>,
    bundle: &DatasetBundle,
    dev: &[LabeledEvent],
    config: &TrainConfig,
) -> Result<(PolarityModel<T>, TrainingLog), TrainError> {
    config.validate()?;
    let obj = config.objective;
    let missing = |dataset| {
        Err(TrainError::MissingDataset {
            objective: obj,
            dataset,
        })
    };
    if obj.uses_al() && bundle.al.is_empty() {
        return missing("AL");
    }
    if obj.uses_ca_co() && bundle.ca.is_empty() && bundle.co.is_empty() {
        return missing("CA/CO");
    }
    if obj.uses_acp() && bundle.supervised.is_empty() {
        return missing("supervised");
    }
    if dev.is_empty() {
        return Err(TrainError::EmptyDevSet);
    }

    let mut model = model;
    let bs = config.batch_size;
    let lengths = [
        if obj.uses_al() { bundle.al.len() } else { 0 },
        if obj.uses_ca_co() { bundle.ca.len() } else { 0 },
        if obj.uses_ca_co() { bundle.co.len() } else { 0 },
        if obj.uses_acp() {
            bundle.supervised.len()
        } else {
            0
        },
    ];
    let mut cyclers: Vec<Cycler> = lengths
        .iter()
        .enumerate()
        .map(|(k, &len)| Cycler::new(len, stream_seed(config.rng_seed, k as u64)))
        .collect();
    let steps = cyclers
        .iter()
        .map(|c| c.steps_per_pass(bs))
        .max()
        .unwrap_or(0)
        .max(1);

    let lr: T = cast(config.learning_rate);
    let momentum: T = cast(config.momentum);
    let mut velocity = vec![T::zero(); model.params().len()];
    let mut log = TrainingLog::default();
    let mut best: Option<(f64, PolarityModel<T>)> = None;

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let mut sum = LossReport::default();
        for _ in 0..steps {
            let batches = Batches {
                al: cyclers[0]
                    .next_batch(bs)
                    .iter()
                    .map(|&i| &bundle.al[i])
                    .collect(),
                ca: cyclers[1]
                    .next_batch(bs)
                    .iter()
                    .map(|&i| &bundle.ca[i])
                    .collect(),
                co: cyclers[2]
                    .next_batch(bs)
                    .iter()
                    .map(|&i| &bundle.co[i])
                    .collect(),
                acp: cyclers[3]
                    .next_batch(bs)
                    .iter()
                    .map(|&i| &bundle.supervised[i])
                    .collect(),
            };
            let (grads, report) = compute_gradients(&model, &batches, config)?;
            sum.accumulate(&report);
            momentum_step(
                model.params_mut().as_mut_slice(),
                grads.as_slice(),
                &mut velocity,
                lr,
                momentum,
            )?;
        }
        if let Some(i) = model
            .params()
            .as_slice()
            .iter()
            .position(|v| !v.is_finite())
        {
            return Err(TrainError::NonFinite {
                epoch,
                parameter: model.params().describe(i),
            });
        }
        let dev_accuracy = evaluate(&model, dev)?.accuracy;
        let mean = sum.scaled(1.0 / steps as f64);
        let record = EpochRecord {
            epoch,
            l_al: mean.l_al,
            l_ca: mean.l_ca,
            l_co: mean.l_co,
            l_acp: mean.l_acp,
            total: mean.total,
            dev_accuracy,
            wall_ms: started.elapsed().as_millis() as u64,
        };
        log::info!(
            "epoch {epoch}: total {:.5} (al {:.5} ca {:.5} co {:.5} acp {:.5}) dev acc {:.4}",
            record.total,
            record.l_al,
            record.l_ca,
            record.l_co,
            record.l_acp,
            dev_accuracy
        );
        log.epochs.push(record);
        if best.as_ref().is_none_or(|(acc, _)| dev_accuracy > *acc) {
            log.best_epoch = epoch;
            log.best_dev_accuracy = dev_accuracy;
            best = Some((dev_accuracy, model.clone()));
        }
    }
    let (_, best_model) = best.expect("at least one epoch ran");
    Ok((best_model, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::{DiscourseRelation, Event};
    use crate::lexicon::Polarity;

    fn ev(s: &str) -> Event {
        Event::from_text(s).unwrap()
    }

    fn zero_model() -> PolarityModel<f64> {
        PolarityModel::zeros(
            Vocabulary::from_tokens(["a", "b", "c"]),
            2,
            EncoderKind::MeanOfEmbeddings,
        )
    }

    fn al(former: &str, latter: &str, r: Polarity) -> AlPair {
        AlPair {
            pair: EventPair {
                former: ev(former),
                latter: ev(latter),
                relation: DiscourseRelation::Cause,
            },
            r_former: r,
            r_latter: r,
        }
    }

    #[test]
    fn al_at_zero_model() {
        let m = zero_model();
        let batch = [al("a", "b", Polarity::Positive)];
        assert_eq!(loss_al(&m, &batch, 1.0).unwrap(), 2.0);
        assert_eq!(loss_al(&m, &batch, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn zero_lambda_al_leaves_former_without_gradient() {
        let m = PolarityModel::<f64>::init(
            Vocabulary::from_tokens(["a", "b"]),
            2,
            EncoderKind::MeanOfEmbeddings,
            4,
        );
        let bundle = DatasetBundle {
            al: vec![al("a", "b", Polarity::Positive)],
            ..Default::default()
        };
        let config = TrainConfig {
            lambda_al: 0.0,
            objective: Objective::Al,
            ..Default::default()
        };
        let (g, _) = compute_gradients(&m, &Batches::from_bundle(&bundle), &config).unwrap();
        assert!(g.embedding(1).iter().all(|&v| v == 0.0));
        assert!(g.embedding(2).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn absent_token_rows_get_zero_gradient() {
        let m = PolarityModel::<f64>::init(
            Vocabulary::from_tokens(["a", "b", "c"]),
            3,
            EncoderKind::SimpleRecurrent,
            4,
        );
        let bundle = DatasetBundle {
            ca: vec![EventPair {
                former: ev("a"),
                latter: ev("b a"),
                relation: DiscourseRelation::Cause,
            }],
            ..Default::default()
        };
        let (g, _) =
            compute_gradients(&m, &Batches::from_bundle(&bundle), &TrainConfig::default()).unwrap();
        assert!(g.embedding(3).iter().all(|&v| v == 0.0));
        assert!(g.embedding(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn no_active_data() {
        let m = zero_model();
        let bundle = DatasetBundle {
            ca: vec![EventPair {
                former: ev("a"),
                latter: ev("b"),
                relation: DiscourseRelation::Cause,
            }],
            ..Default::default()
        };
        let config = TrainConfig {
            objective: Objective::Acp,
            ..Default::default()
        };
        assert!(matches!(
            compute_gradients(&m, &Batches::from_bundle(&bundle), &config),
            Err(TrainError::NoActiveData)
        ));
    }

    #[test]
    fn missing_dataset() {
        let dev = vec![LabeledEvent {
            event: ev("a"),
            score: Polarity::Positive,
        }];
        let config = TrainConfig {
            objective: Objective::Al,
            ..Default::default()
        };
        let err = train(zero_model(), &DatasetBundle::default(), &dev, &config).unwrap_err();
        assert!(matches!(
            err,
            TrainError::MissingDataset { dataset: "AL", .. }
        ));
    }

    #[test]
    fn invalid_config() {
        let bad = TrainConfig {
            lambda_ca: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            batch_size: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_learning_rate_returns_initial_model() {
        let m = PolarityModel::<f64>::init(
            Vocabulary::from_tokens(["a", "b"]),
            2,
            EncoderKind::MeanOfEmbeddings,
            1,
        );
        let bundle = DatasetBundle {
            al: vec![al("a", "b", Polarity::Positive)],
            ..Default::default()
        };
        let dev = vec![LabeledEvent {
            event: ev("a"),
            score: Polarity::Positive,
        }];
        let config = TrainConfig {
            epochs: 1,
            learning_rate: 0.0,
            objective: Objective::Al,
            ..Default::default()
        };
        let (out, log) = train(m.clone(), &bundle, &dev, &config).unwrap();
        assert_eq!(out, m);
        assert_eq!(log.epochs.len(), 1);
        assert_eq!(log.best_epoch, 1);
    }

    #[test]
    fn objective_names_round_trip() {
        for o in [
            Objective::Al,
            Objective::AlCaCo,
            Objective::Acp,
            Objective::AcpAlCaCo,
        ] {
            assert_eq!(o.to_string().parse::<Objective>().unwrap(), o);
            let json = serde_json::to_string(&o).unwrap();
            assert_eq!(json, format!("\"{o}\""));
        }
    }

    #[test]
    fn cycler_covers_every_item_each_pass() {
        let mut c = Cycler::new(10, 3);
        let mut seen: Vec<usize> = Vec::new();
        for _ in 0..c.steps_per_pass(4) {
            seen.extend_from_slice(c.next_batch(4));
        }
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        assert_eq!(c.next_batch(4).len(), 4);
    }
}
