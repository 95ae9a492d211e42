use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ModelConfig, TrainConfig};
use super::model::{mix_seed, TypingNet};
use crate::channel::corpus_accuracy;
use crate::corpus::{CharSet, LabeledBlock, BLANK, SEPARATOR};
use crate::ctc::{ctc_beam_decode, ctc_loss_logits, interleave_separators};
use crate::error::{Error, Result};
use crate::nn::{softmax, Adam, Scalar, Tensor};

/// A block converted to network inputs and CTC targets.
#[derive(Clone, Debug)]
pub struct PreparedBlock<F> {
    pub id: String,
    pub inputs: Vec<Tensor<F>>,
    pub label: Vec<char>,
    pub target: Vec<usize>,
}

/// Class targets for a label: raw symbols, or separator-interleaved.
pub fn encode_target(label: &[char], cs: &CharSet, separators: bool) -> Result<Vec<usize>> {
    let classes = cs.encode(label)?;
    Ok(if separators {
        interleave_separators(&classes, SEPARATOR)
    } else {
        classes
    })
}

pub fn prepare_blocks<F: Scalar>(net: &TypingNet<F>, blocks: &[LabeledBlock]) -> Result<Vec<PreparedBlock<F>>> {
    let cs = CharSet::standard();
    blocks
        .par_iter()
        .map(|b| {
            Ok(PreparedBlock {
                id: b.id(),
                inputs: net.prepare_input(&b.signal)?,
                label: b.label.clone(),
                target: encode_target(&b.label, &cs, net.cfg.separators)?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Ids of blocks left out because their label cannot be aligned.
    pub rejected: Vec<String>,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,loss\n");
        for e in &self.epochs {
            s.push_str(&format!("{},{}\n", e.epoch, e.loss));
        }
        s
    }

    /// Final loss finite and below half the first epoch's.
    pub fn converged(&self) -> bool {
        match (self.epochs.first(), self.epochs.last()) {
            (Some(a), Some(b)) => b.loss.is_finite() && b.loss < 0.5 * a.loss,
            _ => false,
        }
    }
}

/// Trains a fresh network on `blocks`.
pub fn train(blocks: &[LabeledBlock], mcfg: &ModelConfig, tcfg: &TrainConfig) -> Result<(TypingNet<f32>, TrainHistory)> {
    let mut net = TypingNet::new(mcfg)?;
    let prepared = prepare_blocks(&net, blocks)?;
    let refs: Vec<&PreparedBlock<f32>> = prepared.iter().collect();
    let hist = train_prepared(&mut net, &refs, tcfg)?;
    Ok((net, hist))
}

/// Minibatch CTC training with Adam. Each epoch visits every accepted block
/// once in a seeded shuffled order; the last short minibatch is kept.
pub fn train_prepared<F: Scalar>(
    net: &mut TypingNet<F>,
    blocks: &[&PreparedBlock<F>],
    tcfg: &TrainConfig,
) -> Result<TrainHistory> {
    tcfg.validate()?;
    if blocks.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut hist = TrainHistory::default();
    let mut items: Vec<&PreparedBlock<F>> = Vec::with_capacity(blocks.len());
    for &b in blocks {
        let t_in = b.inputs.first().map_or(0, |t| t.rows());
        let frames = net.cfg.output_len(t_in)?;
        if 2 * b.target.len() + 1 > frames {
            log::warn!(
                "block {} rejected: label of {} classes cannot align to {frames} frames",
                b.id,
                b.target.len()
            );
            hist.rejected.push(b.id.clone());
        } else {
            items.push(b);
        }
    }
    if items.is_empty() {
        return Err(Error::invalid("blocks", "every block was rejected as unalignable"));
    }
    let mut adam = Adam::new(tcfg.lr);
    let mut step = 0u64;
    for epoch in 1..=tcfg.epochs {
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(tcfg.seed, &[epoch as u64])));
        let mut total = 0.0;
        for chunk in order.chunks(tcfg.batch_size) {
            let batch: Vec<&[Tensor<F>]> = chunk.iter().map(|&i| items[i].inputs.as_slice()).collect();
            net.zero_grad();
            let (logits, trace) = net.forward_train(&batch, step)?;
            let scale = F::of(1.0 / chunk.len() as f64);
            let per_item: Vec<(f64, Tensor<F>)> = logits
                .par_iter()
                .zip(chunk.par_iter())
                .map(|(l, &i)| {
                    let (loss, mut g) = ctc_loss_logits(l, &items[i].target, BLANK)?;
                    g.data_mut().iter_mut().for_each(|v| *v *= scale);
                    Ok((loss, g))
                })
                .collect::<Result<_>>()?;
            let mut grads = Vec::with_capacity(per_item.len());
            for (loss, g) in per_item {
                if !loss.is_finite() {
                    return Err(Error::NonFinite("ctc loss"));
                }
                total += loss;
                grads.push(g);
            }
            net.backward(&trace, grads);
            if tcfg.clip_norm > 0.0 {
                let norm = net.grad_norm();
                if norm > tcfg.clip_norm {
                    net.scale_grads(tcfg.clip_norm / norm);
                }
            }
            adam.step(net.params_mut());
            step += 1;
        }
        let loss = total / items.len() as f64;
        log::info!("epoch {epoch}/{}: mean ctc loss {loss:.4}", tcfg.epochs);
        hist.epochs.push(EpochRecord { epoch, loss });
    }
    Ok(hist)
}

/// Beam-decodes one prepared block into characters.
pub fn decode_inputs<F: Scalar>(net: &TypingNet<F>, inputs: &[Tensor<F>], beam_width: usize) -> Result<Vec<char>> {
    let probs = softmax(&net.infer_logits(inputs)?);
    let classes = ctc_beam_decode(&probs, beam_width, BLANK)?;
    Ok(CharSet::standard().decode(&classes))
}

/// One decoded block.
#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub block_id: String,
    pub recorded: Vec<char>,
    pub predicted: Vec<char>,
    pub holdout: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    /// Micro-averaged holdout character accuracy.
    pub accuracy: f64,
    pub converged: bool,
    pub history: TrainHistory,
    pub transcripts: Vec<Transcript>,
}

/// Shuffles `0..n` once and cuts it into `folds` contiguous shards.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::invalid("folds", "at least 2 folds are required"));
    }
    if n < folds {
        return Err(Error::invalid("blocks", format!("{n} blocks cannot fill {folds} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((0..folds).map(|f| order[f * n / folds..(f + 1) * n / folds].to_vec()).collect())
}

pub fn decode_prepared<F: Scalar>(
    net: &TypingNet<F>,
    blocks: &[&PreparedBlock<F>],
    beam_width: usize,
    holdout: bool,
) -> Result<Vec<Transcript>> {
    blocks
        .par_iter()
        .map(|b| {
            Ok(Transcript {
                block_id: b.id.clone(),
                recorded: b.label.clone(),
                predicted: decode_inputs(net, &b.inputs, beam_width)?,
                holdout,
            })
        })
        .collect()
}

/// k-fold cross-validation: train on all other folds, decode the holdout
/// with beam search and score it. With `transcribe_train`, training blocks
/// are decoded too (marked `holdout = false`).
pub fn cross_validate(
    blocks: &[LabeledBlock],
    mcfg: &ModelConfig,
    tcfg: &TrainConfig,
    transcribe_train: bool,
) -> Result<Vec<FoldResult>> {
    tcfg.validate()?;
    let assignment = fold_assignment(blocks.len(), tcfg.folds, tcfg.seed)?;
    let template = TypingNet::<f32>::new(mcfg)?;
    let prepared = prepare_blocks(&template, blocks)?;
    let mut results = Vec::with_capacity(tcfg.folds);
    for (fold, held) in assignment.iter().enumerate() {
        let mut is_held = vec![false; blocks.len()];
        for &i in held {
            is_held[i] = true;
        }
        let train_set: Vec<&PreparedBlock<f32>> = (0..blocks.len()).filter(|&i| !is_held[i]).map(|i| &prepared[i]).collect();
        let hold_set: Vec<&PreparedBlock<f32>> = held.iter().map(|&i| &prepared[i]).collect();
        let fold_mcfg = ModelConfig {
            seed: mix_seed(mcfg.seed, &[fold as u64]),
            ..mcfg.clone()
        };
        let fold_tcfg = TrainConfig {
            seed: mix_seed(tcfg.seed, &[fold as u64, 1]),
            ..tcfg.clone()
        };
        log::info!("fold {}/{}: {} train, {} holdout", fold + 1, tcfg.folds, train_set.len(), hold_set.len());
        let mut net = TypingNet::<f32>::new(&fold_mcfg)?;
        let history = train_prepared(&mut net, &train_set, &fold_tcfg)?;
        let mut transcripts = decode_prepared(&net, &hold_set, tcfg.beam_width, true)?;
        let pairs: Vec<(Vec<char>, Vec<char>)> =
            transcripts.iter().map(|t| (t.predicted.clone(), t.recorded.clone())).collect();
        let accuracy = corpus_accuracy(&pairs);
        log::info!("fold {}: holdout accuracy {accuracy:.4}", fold + 1);
        if transcribe_train {
            transcripts.extend(decode_prepared(&net, &train_set, tcfg.beam_width, false)?);
        }
        results.push(FoldResult {
            fold,
            accuracy,
            converged: history.converged(),
            history,
            transcripts,
        });
    }
    Ok(results)
}
