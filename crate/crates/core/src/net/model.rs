//! The four-stage network: a shared per-channel convolutional extractor, a
//! merge layer across channels, two LSTMs and a classifier head.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::ModelConfig;
use crate::error::{Error, Result};
use super::extractor::{stage_backward, stage_infer, stage_train, Seq, StageCache};
use crate::nn::{
    dropout, dropout_backward_inplace, fully_connected_backward, log_softmax, relu_backward_inplace, relu_inplace,
    softmax, BatchNorm, BnCache, Checkpoint, Conv1d, Linear, Lstm, LstmCache, Mode, NamedTensor, Param, Scalar, Tensor,
};
use crate::signal::Recording;

#[derive(Clone, Debug, PartialEq)]
pub struct TypingNet<F> {
    pub cfg: ModelConfig,
    pub convs: Vec<Conv1d<F>>,
    pub conv_bns: Vec<BatchNorm<F>>,
    pub merge: Linear<F>,
    pub merge_bn: BatchNorm<F>,
    pub lstms: Vec<Lstm<F>>,
    /// Hidden head layers followed by the output layer.
    pub heads: Vec<Linear<F>>,
    pub head_bns: Vec<BatchNorm<F>>,
}

struct DenseTrace<F> {
    x: Vec<Tensor<F>>,
    bn: BnCache<F>,
    act: Vec<Tensor<F>>,
    masks: Vec<Option<Vec<F>>>,
}

/// Activations kept by a training forward pass for the backward pass.
pub struct Trace<F> {
    n_items: usize,
    stages: Vec<StageCache<F>>,
    merge: DenseTrace<F>,
    lstm: Vec<Vec<LstmCache<F>>>,
    heads: Vec<DenseTrace<F>>,
    out_x: Vec<Tensor<F>>,
}

/// Mixes a seed with a position into an independent stream seed.
pub(crate) fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut z = seed;
    for &p in parts {
        z = z.wrapping_add(p.wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(0x632B_E59B_D9B4_E019);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

fn drop_all<F: Scalar>(xs: &mut [Tensor<F>], rate: f64, mode: Mode, seed: u64, step: u64, layer: u64) -> Vec<Option<Vec<F>>> {
    xs.par_iter_mut()
        .enumerate()
        .map(|(i, x)| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[step, layer, i as u64]));
            let (y, mask) = dropout(x, rate, mode, &mut rng);
            *x = y;
            mask
        })
        .collect()
}

/// FC backward over a batch with one accumulator per item, reduced in
/// item order.
fn linear_backward_batch<F: Scalar>(
    layer: &mut Linear<F>,
    xs: &[Tensor<F>],
    dys: &[Tensor<F>],
    want_dx: bool,
) -> Vec<Tensor<F>> {
    let w = &layer.weight.value;
    let (nw, nb) = (layer.weight.len(), layer.bias.len());
    let parts: Vec<(Vec<F>, Vec<F>, Option<Tensor<F>>)> = xs
        .par_iter()
        .zip(dys.par_iter())
        .map(|(x, dy)| {
            let mut dw = vec![F::zero(); nw];
            let mut db = vec![F::zero(); nb];
            let dx = fully_connected_backward(x, w, dy, &mut dw, &mut db, want_dx);
            (dw, db, dx)
        })
        .collect();
    let mut dxs = Vec::with_capacity(parts.len());
    for (dw, db, dx) in parts {
        layer.weight.add_grad(&dw);
        layer.bias.add_grad(&db);
        if let Some(dx) = dx {
            dxs.push(dx);
        }
    }
    dxs
}

impl<F: Scalar> TypingNet<F> {
    pub fn new(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut convs = Vec::new();
        let mut conv_bns = Vec::new();
        let mut cin = 1;
        for (s, (&k, &w)) in cfg.conv_kernels.iter().zip(&cfg.conv_widths).enumerate() {
            convs.push(Conv1d::new(&format!("conv{s}"), k, cin, w, cfg.causal_padding, &mut rng));
            conv_bns.push(BatchNorm::new(&format!("conv{s}.bn"), w));
            cin = w;
        }
        let merge_in = cfg.n_channels * cfg.per_channel_features();
        let merge = Linear::new("merge", merge_in, cfg.merge_fc, true, &mut rng);
        let merge_bn = BatchNorm::new("merge.bn", cfg.merge_fc);
        let mut lstms = Vec::new();
        let mut din = cfg.merge_fc;
        for (i, &h) in cfg.lstm_hidden.iter().enumerate() {
            lstms.push(Lstm::new(&format!("lstm{i}"), din, h, &mut rng));
            din = h;
        }
        let mut heads = Vec::new();
        let mut head_bns = Vec::new();
        let n_heads = cfg.head_fc.len();
        for (i, &w) in cfg.head_fc.iter().enumerate() {
            let hidden = i + 1 < n_heads;
            heads.push(Linear::new(&format!("head{i}"), din, w, hidden, &mut rng));
            if hidden {
                head_bns.push(BatchNorm::new(&format!("head{i}.bn"), w));
            }
            din = w;
        }
        Ok(TypingNet {
            cfg: cfg.clone(),
            convs,
            conv_bns,
            merge,
            merge_bn,
            lstms,
            heads,
            head_bns,
        })
    }

    /// Every trainable parameter in a fixed order.
    pub fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        let mut out: Vec<&mut Param<F>> = Vec::new();
        for (c, bn) in self.convs.iter_mut().zip(self.conv_bns.iter_mut()) {
            out.extend([&mut c.weight, &mut c.bias, &mut bn.gamma, &mut bn.beta]);
        }
        out.extend([
            &mut self.merge.weight,
            &mut self.merge.bias,
            &mut self.merge_bn.gamma,
            &mut self.merge_bn.beta,
        ]);
        for l in &mut self.lstms {
            out.extend([&mut l.wx, &mut l.wh, &mut l.bias]);
        }
        let mut bns = self.head_bns.iter_mut();
        for h in self.heads.iter_mut() {
            out.extend([&mut h.weight, &mut h.bias]);
            if let Some(bn) = bns.next() {
                out.extend([&mut bn.gamma, &mut bn.beta]);
            }
        }
        out
    }

    pub fn params(&self) -> Vec<&Param<F>> {
        let mut out: Vec<&Param<F>> = Vec::new();
        for (c, bn) in self.convs.iter().zip(&self.conv_bns) {
            out.extend([&c.weight, &c.bias, &bn.gamma, &bn.beta]);
        }
        out.extend([&self.merge.weight, &self.merge.bias, &self.merge_bn.gamma, &self.merge_bn.beta]);
        for l in &self.lstms {
            out.extend([&l.wx, &l.wh, &l.bias]);
        }
        for (i, h) in self.heads.iter().enumerate() {
            out.extend([&h.weight, &h.bias]);
            if let Some(bn) = self.head_bns.get(i) {
                out.extend([&bn.gamma, &bn.beta]);
            }
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn batch_norms(&self) -> Vec<&BatchNorm<F>> {
        let mut v: Vec<&BatchNorm<F>> = self.conv_bns.iter().collect();
        v.push(&self.merge_bn);
        v.extend(self.head_bns.iter());
        v
    }

    fn batch_norms_mut(&mut self) -> Vec<&mut BatchNorm<F>> {
        let mut v: Vec<&mut BatchNorm<F>> = self.conv_bns.iter_mut().collect();
        v.push(&mut self.merge_bn);
        v.extend(self.head_bns.iter_mut());
        v
    }

    /// Per-channel `[T, 1]` input sequences for one recording.
    pub fn prepare_input(&self, rec: &Recording) -> Result<Vec<Tensor<F>>> {
        if rec.n_channels() != self.cfg.n_channels {
            return Err(Error::Shape(format!(
                "network expects {} channels, recording has {}",
                self.cfg.n_channels,
                rec.n_channels()
            )));
        }
        let scale = self.cfg.input_scale;
        Ok((0..rec.n_channels())
            .map(|c| {
                let ch = rec.channel(c);
                Tensor::from_vec(&[ch.len(), 1], ch.iter().map(|&v| F::of(v * scale)).collect()).unwrap()
            })
            .collect())
    }

    fn to_seqs(channels: &[Tensor<F>]) -> Vec<Seq<F>> {
        channels
            .iter()
            .map(|c| Seq {
                data: c.data().to_vec(),
                len: c.rows(),
            })
            .collect()
    }

    fn extract(&self, channels: &[Tensor<F>]) -> Result<Vec<Seq<F>>> {
        let mut seqs = Self::to_seqs(channels);
        for (conv, bn) in self.convs.iter().zip(&self.conv_bns) {
            seqs = stage_infer(conv, bn, &seqs, self.cfg.pool_width, self.cfg.pool_stride)?;
        }
        Ok(seqs)
    }

    /// Stage-1 features `[T', F]` of each input channel, run independently
    /// through the shared extractor in infer mode.
    pub fn channel_features(&self, channels: &[Tensor<F>]) -> Result<Vec<Tensor<F>>> {
        Ok(self.extract(channels)?.iter().map(Seq::to_time_major).collect())
    }

    fn dense_infer(layer: &Linear<F>, bn: Option<&BatchNorm<F>>, x: &Tensor<F>) -> Result<Tensor<F>> {
        let mut y = layer.forward(x)?;
        if let Some(bn) = bn {
            bn.apply_frozen(&mut y);
            relu_inplace(&mut y);
        }
        Ok(y)
    }

    /// `[T', C·F]` with feature index `c·F + f`.
    fn merge_channels(seqs: &[Seq<F>]) -> Tensor<F> {
        let c = seqs.len();
        let t = seqs[0].len;
        let f = seqs[0].channels();
        let mut m = Tensor::zeros(&[t, c * f]);
        let d = m.data_mut();
        for (ci, s) in seqs.iter().enumerate() {
            for fi in 0..f {
                for (r, &v) in s.channel(fi).iter().enumerate() {
                    d[r * c * f + ci * f + fi] = v;
                }
            }
        }
        m
    }

    /// Logits `[T', 34]` for one block, in infer mode.
    pub fn infer_logits(&self, channels: &[Tensor<F>]) -> Result<Tensor<F>> {
        if channels.len() != self.cfg.n_channels {
            return Err(Error::Shape(format!("expected {} channels, got {}", self.cfg.n_channels, channels.len())));
        }
        let rf = self.cfg.receptive_field();
        if let Some(short) = channels.iter().find(|c| c.rows() < rf) {
            return Err(Error::TooShort {
                len: short.rows(),
                needed: rf,
            });
        }
        let feats = self.extract(channels)?;
        let mut x = Self::dense_infer(&self.merge, Some(&self.merge_bn), &Self::merge_channels(&feats))?;
        for l in &self.lstms {
            x = l.forward(&x, None, None)?.0;
        }
        let n = self.heads.len();
        for (i, h) in self.heads.iter().enumerate() {
            x = Self::dense_infer(h, if i + 1 < n { Some(&self.head_bns[i]) } else { None }, &x)?;
        }
        x.check_finite("network output")?;
        Ok(x)
    }

    /// Per-frame class probabilities `[T', 34]` for one recording block.
    pub fn forward(&self, rec: &Recording) -> Result<Tensor<F>> {
        Ok(softmax(&self.infer_logits(&self.prepare_input(rec)?)?))
    }

    /// Per-frame log-probabilities for one recording block.
    pub fn forward_log(&self, rec: &Recording) -> Result<Tensor<F>> {
        Ok(log_softmax(&self.infer_logits(&self.prepare_input(rec)?)?))
    }

    fn dense_train(
        layer: &Linear<F>,
        bn: &mut BatchNorm<F>,
        xs: Vec<Tensor<F>>,
        rate: f64,
        seed: u64,
        step: u64,
        tag: u64,
    ) -> Result<(Vec<Tensor<F>>, DenseTrace<F>)> {
        let ys: Vec<Tensor<F>> = xs.par_iter().map(|x| layer.forward(x)).collect::<Result<_>>()?;
        let (mut ys, bn_cache) = bn.forward(&ys, Mode::Train)?;
        ys.par_iter_mut().for_each(relu_inplace);
        let act = ys.clone();
        let masks = drop_all(&mut ys, rate, Mode::Train, seed, step, tag);
        Ok((
            ys,
            DenseTrace {
                x: xs,
                bn: bn_cache,
                act,
                masks,
            },
        ))
    }

    fn dense_backward(layer: &mut Linear<F>, bn: &mut BatchNorm<F>, tr: &DenseTrace<F>, mut dys: Vec<Tensor<F>>) -> Vec<Tensor<F>> {
        dys.par_iter_mut().zip(tr.act.par_iter()).zip(tr.masks.par_iter()).for_each(|((dy, act), mask)| {
            dropout_backward_inplace(mask.as_deref(), dy);
            relu_backward_inplace(act, dy);
        });
        let dys = bn.backward(&tr.bn, &dys);
        linear_backward_batch(layer, &tr.x, &dys, true)
    }

    /// Training-mode forward over a minibatch (`items × channels`
    /// sequences). Returns logits per item and the trace for
    /// [`TypingNet::backward`]. `step` seeds dropout.
    pub fn forward_train(&mut self, batch: &[&[Tensor<F>]], step: u64) -> Result<(Vec<Tensor<F>>, Trace<F>)> {
        let nc = self.cfg.n_channels;
        if batch.is_empty() {
            return Err(Error::invalid("batch", "empty minibatch"));
        }
        if batch.iter().any(|b| b.len() != nc) {
            return Err(Error::Shape(format!("every item needs {nc} channels")));
        }
        let rate = self.cfg.dropout;
        let seed = self.cfg.seed;
        let (pw, ps) = (self.cfg.pool_width, self.cfg.pool_stride);
        let mut seqs: Vec<Seq<F>> = batch.iter().flat_map(|b| Self::to_seqs(b)).collect();
        let mut stages = Vec::new();
        for s in 0..self.convs.len() {
            let (next, cache) = stage_train(&self.convs[s], &mut self.conv_bns[s], seqs, pw, ps, rate, seed, step, s as u64)?;
            seqs = next;
            stages.push(cache);
        }
        let merged: Vec<Tensor<F>> = seqs.chunks(nc).map(Self::merge_channels).collect();
        let (mut xs, merge) = Self::dense_train(&self.merge, &mut self.merge_bn, merged, rate, seed, step, 10)?;
        let mut lstm = Vec::new();
        for l in &self.lstms {
            let out: Vec<(Tensor<F>, LstmCache<F>)> =
                xs.par_iter().map(|x| l.forward(x, None, None)).collect::<Result<_>>()?;
            let (ys, caches): (Vec<_>, Vec<_>) = out.into_iter().unzip();
            xs = ys;
            lstm.push(caches);
        }
        let n = self.heads.len();
        let mut heads = Vec::new();
        for i in 0..n - 1 {
            let (ys, tr) = Self::dense_train(&self.heads[i], &mut self.head_bns[i], xs, rate, seed, step, 20 + i as u64)?;
            xs = ys;
            heads.push(tr);
        }
        let out = &self.heads[n - 1];
        let logits: Vec<Tensor<F>> = xs.par_iter().map(|x| out.forward(x)).collect::<Result<_>>()?;
        for l in &logits {
            l.check_finite("network output")?;
        }
        Ok((
            logits,
            Trace {
                n_items: batch.len(),
                stages,
                merge,
                lstm,
                heads,
                out_x: xs,
            },
        ))
    }

    /// Accumulates parameter gradients for `dlogits` (one per item).
    pub fn backward(&mut self, trace: &Trace<F>, dlogits: Vec<Tensor<F>>) {
        let n = self.heads.len();
        let mut d = linear_backward_batch(&mut self.heads[n - 1], &trace.out_x, &dlogits, true);
        for i in (0..n - 1).rev() {
            d = Self::dense_backward(&mut self.heads[i], &mut self.head_bns[i], &trace.heads[i], d);
        }
        for (l, caches) in self.lstms.iter_mut().zip(&trace.lstm).rev() {
            let lref = &*l;
            let (nx, nh, nb) = (l.wx.len(), l.wh.len(), l.bias.len());
            let parts: Vec<(Vec<F>, Vec<F>, Vec<F>, Tensor<F>)> = caches
                .par_iter()
                .zip(d.par_iter())
                .map(|(cache, dy)| {
                    let mut dwx = vec![F::zero(); nx];
                    let mut dwh = vec![F::zero(); nh];
                    let mut db = vec![F::zero(); nb];
                    let g = lref.backward(cache, dy, &mut dwx, &mut dwh, &mut db);
                    (dwx, dwh, db, g.dx)
                })
                .collect();
            d = Vec::with_capacity(parts.len());
            for (dwx, dwh, db, dx) in parts {
                l.wx.add_grad(&dwx);
                l.wh.add_grad(&dwh);
                l.bias.add_grad(&db);
                d.push(dx);
            }
        }
        let d = Self::dense_backward(&mut self.merge, &mut self.merge_bn, &trace.merge, d);
        // Split the merged gradient back into per-channel sequences.
        let nc = self.cfg.n_channels;
        let f = self.cfg.per_channel_features();
        let mut dseqs: Vec<Seq<F>> = Vec::with_capacity(trace.n_items * nc);
        for dm in &d {
            let t = dm.rows();
            for c in 0..nc {
                let mut data = vec![F::zero(); f * t];
                for r in 0..t {
                    for (fi, &v) in dm.row(r)[c * f..(c + 1) * f].iter().enumerate() {
                        data[fi * t + r] = v;
                    }
                }
                dseqs.push(Seq { data, len: t });
            }
        }
        for s in (0..self.convs.len()).rev() {
            dseqs = stage_backward(&mut self.convs[s], &mut self.conv_bns[s], &trace.stages[s], dseqs, s > 0);
        }
    }

    /// Global L2 norm of the accumulated gradients.
    pub fn grad_norm(&self) -> f64 {
        self.params()
            .iter()
            .flat_map(|p| p.grad.data().iter())
            .map(|g| {
                let g = g.to_f64().unwrap();
                g * g
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale_grads(&mut self, s: f64) {
        let s = F::of(s);
        for p in self.params_mut() {
            for g in p.grad.data_mut() {
                *g *= s;
            }
        }
    }

    /// Parameters and batch-norm running statistics as a named archive,
    /// with the architecture as a TOML manifest.
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut tensors: Vec<NamedTensor> = self
            .params()
            .iter()
            .map(|p| NamedTensor {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                data: p.value.data().iter().map(|v| v.to_f32().unwrap()).collect(),
            })
            .collect();
        for bn in self.batch_norms() {
            let base = bn.gamma.name.trim_end_matches(".gamma").to_string();
            for (suffix, v) in [("running_mean", &bn.running_mean), ("running_var", &bn.running_var)] {
                tensors.push(NamedTensor {
                    name: format!("{base}.{suffix}"),
                    shape: vec![v.len()],
                    data: v.iter().map(|x| x.to_f32().unwrap()).collect(),
                });
            }
        }
        Checkpoint {
            manifest: self.cfg.to_toml(),
            tensors,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let cfg = ModelConfig::from_toml(&ck.manifest)?;
        let mut net = TypingNet::new(&cfg)?;
        let fetch = |name: &str, len: usize| -> Result<Vec<F>> {
            let t = ck.get(name).ok_or_else(|| Error::Format(format!("checkpoint lacks tensor {name}")))?;
            if t.data.len() != len {
                return Err(Error::Shape(format!("checkpoint tensor {name} has {} values, expected {len}", t.data.len())));
            }
            Ok(t.data.iter().map(|&v| F::of(v as f64)).collect())
        };
        for p in net.params_mut() {
            let v = fetch(&p.name, p.len())?;
            p.value.data_mut().copy_from_slice(&v);
        }
        for bn in net.batch_norms_mut() {
            let base = bn.gamma.name.trim_end_matches(".gamma").to_string();
            let c = bn.features();
            bn.running_mean = fetch(&format!("{base}.running_mean"), c)?;
            bn.running_var = fetch(&format!("{base}.running_var"), c)?;
        }
        Ok(net)
    }
}
