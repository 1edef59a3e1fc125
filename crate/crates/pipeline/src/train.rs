//! Mini-batch training with early stopping, and evaluation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use ample_core::metrics::{classification_metrics, confusion_matrix, ClassificationScores, ConfusionMatrix};
use ample_core::{CodeStructureGraph, Corpus, Label, MergeRuleTable};
use ample_model::model::GraphInput;
use ample_model::optim::{Optimizer, OptimizerConfig};
use ample_model::{Mode, Model};

use crate::bundle::PipelineModel;
use crate::config::{PipelineConfig, TrainConfig};
use crate::prepare::{fit_embedder, graph_inputs, labels_of, simplify_all};
use crate::split::{split_corpus, Split};
use crate::PipelineError;

/// One line of the training history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub valid_loss: f64,
    pub valid_f1: f64,
}

pub struct TrainOutcome {
    /// Parameters from the best validation epoch.
    pub model: Model,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

impl TrainOutcome {
    pub fn history_jsonl(&self) -> String {
        self.history.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect()
    }
}

pub type Sample<'a> = (&'a GraphInput, Label);

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub scores: ClassificationScores,
    pub confusion: ConfusionMatrix,
    pub predictions: Vec<u8>,
    /// Probability of the vulnerable class per graph.
    pub probabilities: Vec<f64>,
    /// Mean cross-entropy.
    pub loss: f64,
}

/// Threshold 0.5 on the vulnerable probability; a tie predicts
/// non-vulnerable.
pub fn predict_label(p_vulnerable: f64) -> u8 {
    u8::from(p_vulnerable > 0.5)
}

pub fn evaluate_model(model: &Model, data: &[Sample]) -> Result<Evaluation, PipelineError> {
    let probs: Vec<[f64; 2]> = {
        use rayon::prelude::*;
        data.par_iter().map(|(input, _)| model.predict(input)).collect::<Result<_, _>>()?
    };
    let labels: Vec<u8> = data.iter().map(|(_, l)| l.as_u8()).collect();
    let predictions: Vec<u8> = probs.iter().map(|p| predict_label(p[1])).collect();
    let loss = probs
        .iter()
        .zip(&labels)
        .map(|(p, &y)| -p[y as usize].max(f64::MIN_POSITIVE).ln())
        .sum::<f64>()
        / data.len().max(1) as f64;
    Ok(Evaluation {
        scores: classification_metrics(&predictions, &labels)?,
        confusion: confusion_matrix(&predictions, &labels)?,
        predictions,
        probabilities: probs.iter().map(|p| p[1]).collect(),
        loss,
    })
}

fn is_improvement(f1: f64, loss: f64, best: Option<(f64, f64)>) -> bool {
    match best {
        None => true,
        Some((bf, bl)) => f1 > bf || (f1 == bf && loss < bl),
    }
}

/// Trains `model` and returns the parameters of the best validation epoch. An epoch improves on the best so far when validation F1
/// rises, or stays equal while validation loss falls. Training stops after
/// `patience` epochs without improvement or at `max_epochs`.
pub fn train_model(model: Model, train: &[Sample], valid: &[Sample], cfg: &TrainConfig) -> Result<TrainOutcome, PipelineError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
    pool.install(|| train_loop(model, train, valid, cfg))
}

fn train_loop(mut model: Model, train: &[Sample], valid: &[Sample], cfg: &TrainConfig) -> Result<TrainOutcome, PipelineError> {
    let opt_cfg = OptimizerConfig { kind: cfg.optimizer, lr: cfg.learning_rate, ..OptimizerConfig::default() };
    let mut opt = Optimizer::new(opt_cfg, &model.params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    let mut best_model = model.clone();
    let mut best_epoch = 0;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<Sample> = chunk.iter().map(|&i| train[i]).collect();
            let out = model.loss_and_grad(&batch, Mode::Train)?;
            if !out.loss.is_finite() || !out.grads.all_finite() {
                return Err(PipelineError::NonFiniteLoss { epoch, batch: bi, loss: out.loss });
            }
            opt.step(&mut model.params, &out.grads);
            model.update_running_stats(&out);
            epoch_loss += out.loss * chunk.len() as f64;
        }
        epoch_loss /= train.len() as f64;

        let (valid_f1, valid_loss) = if valid.is_empty() {
            (0.0, epoch_loss)
        } else {
            let ev = evaluate_model(&model, valid)?;
            (ev.scores.f1, ev.loss)
        };
        history.push(EpochRecord { epoch, loss: epoch_loss, valid_loss, valid_f1 });
        if is_improvement(valid_f1, valid_loss, best) {
            best = Some((valid_f1, valid_loss));
            best_model = model.clone();
            best_epoch = epoch;
        } else if epoch - best_epoch >= cfg.patience {
            break;
        }
    }
    Ok(TrainOutcome { model: best_model, history, best_epoch })
}

fn refs(v: &[(GraphInput, Label)]) -> Vec<Sample<'_>> {
    v.iter().map(|(i, l)| (i, *l)).collect()
}

/// Everything a full run produces.
pub struct RunReport {
    pub bundle: PipelineModel,
    pub split: Split,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub test: Option<Evaluation>,
}

/// Split, simplify, fit embeddings on the training part, train, and score
/// the test part.
pub fn run_pipeline(corpus: &Corpus, cfg: &PipelineConfig) -> Result<RunReport, PipelineError> {
    cfg.validate()?;
    let seed = cfg.train.seed;
    let split = split_corpus(corpus, cfg.train.split, seed)?;
    let rules = MergeRuleTable::default();
    let simplified = simplify_all(&corpus.graphs, &rules);
    let pick = |idx: &[usize]| idx.iter().map(|&i| &simplified[i].graph).collect::<Vec<_>>();
    let (train_g, valid_g, test_g) = (pick(&split.train), pick(&split.valid), pick(&split.test));

    let embedder = fit_embedder(train_g.iter().copied(), cfg, seed)?;
    let model = Model::new(cfg.model.clone(), seed)?;
    let samples = |gs: &[&CodeStructureGraph]| -> Result<Vec<(GraphInput, Label)>, PipelineError> {
        Ok(graph_inputs(gs, &embedder, &model)?.into_iter().zip(labels_of(gs)?).collect())
    };
    let (train_s, valid_s, test_s) = (samples(&train_g)?, samples(&valid_g)?, samples(&test_g)?);

    let outcome = train_model(model, &refs(&train_s), &refs(&valid_s), &cfg.train)?;
    let test = if test_s.is_empty() { None } else { Some(evaluate_model(&outcome.model, &refs(&test_s))?) };
    let bundle = PipelineModel::new(outcome.model, embedder, rules, cfg.clone())?;
    Ok(RunReport { bundle, split, history: outcome.history, best_epoch: outcome.best_epoch, test })
}
