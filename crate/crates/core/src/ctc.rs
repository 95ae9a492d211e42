//! CTC loss by log-space forward-backward, plus greedy and prefix-beam
//! decoding. Class indices are plain `usize`; the blank index is a parameter
//! so that tiny alphabets can be exercised directly.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::nn::{Scalar, Tensor};
use crate::error::{Error, Result};

#[inline]
fn lse(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Fewest frames that can emit `label`: one per symbol plus one blank
/// between each adjacent repeat.
pub fn min_frames(label: &[usize]) -> usize {
    label.len() + label.windows(2).filter(|w| w[0] == w[1]).count()
}

/// Inserts `separator` between consecutive symbols.
pub fn interleave_separators(label: &[usize], separator: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(label.len() * 2);
    for (i, &c) in label.iter().enumerate() {
        if i > 0 {
            out.push(separator);
        }
        out.push(c);
    }
    out
}

/// Negative log-likelihood of `label` under per-frame log-probabilities
/// `[T, K]`, and its exact gradient with respect to `log_probs`.
pub fn ctc_loss<F: Scalar>(log_probs: &Tensor<F>, label: &[usize], blank: usize) -> Result<(f64, Tensor<F>)> {
    let (t_len, k) = log_probs.expect_2d("ctc log_probs")?;
    if blank >= k {
        return Err(Error::invalid("blank", "index outside the class range"));
    }
    if let Some(&bad) = label.iter().find(|&&c| c >= k || c == blank) {
        return Err(Error::invalid("label", format!("class {bad} is blank or out of range")));
    }
    let needed = min_frames(label);
    if t_len < needed || t_len == 0 {
        return Err(Error::Unalignable {
            label_len: label.len(),
            needed: needed.max(1),
            frames: t_len,
        });
    }
    let s_len = 2 * label.len() + 1;
    let ext: Vec<usize> = (0..s_len).map(|s| if s % 2 == 0 { blank } else { label[s / 2] }).collect();
    let lp = |t: usize, c: usize| log_probs.at(t, c).to_f64().unwrap();
    let ninf = f64::NEG_INFINITY;
    let skip_ok = |s: usize| s >= 2 && ext[s] != blank && ext[s] != ext[s - 2];

    let mut alpha = vec![ninf; t_len * s_len];
    alpha[0] = lp(0, blank);
    if s_len > 1 {
        alpha[1] = lp(0, ext[1]);
    }
    for t in 1..t_len {
        for s in 0..s_len {
            let prev = &alpha[(t - 1) * s_len..t * s_len];
            let mut a = prev[s];
            if s >= 1 {
                a = lse(a, prev[s - 1]);
            }
            if skip_ok(s) {
                a = lse(a, prev[s - 2]);
            }
            alpha[t * s_len + s] = if a == ninf { ninf } else { a + lp(t, ext[s]) };
        }
    }
    // beta[t, s]: log-probability of frames after t given state s at t.
    let mut beta = vec![ninf; t_len * s_len];
    let last = (t_len - 1) * s_len;
    beta[last + s_len - 1] = 0.0;
    if s_len > 1 {
        beta[last + s_len - 2] = 0.0;
    }
    for t in (0..t_len - 1).rev() {
        for s in 0..s_len {
            let next = (t + 1) * s_len;
            let mut b = beta[next + s] + lp(t + 1, ext[s]);
            if s + 1 < s_len {
                b = lse(b, beta[next + s + 1] + lp(t + 1, ext[s + 1]));
            }
            if s + 2 < s_len && skip_ok(s + 2) {
                b = lse(b, beta[next + s + 2] + lp(t + 1, ext[s + 2]));
            }
            beta[t * s_len + s] = b;
        }
    }
    let mut log_p = alpha[last + s_len - 1];
    if s_len > 1 {
        log_p = lse(log_p, alpha[last + s_len - 2]);
    }
    if log_p == ninf || !log_p.is_finite() {
        return Err(Error::NonFinite("ctc likelihood"));
    }
    let mut grad = Tensor::zeros(&[t_len, k]);
    let mut occ = vec![ninf; k];
    for t in 0..t_len {
        occ.fill(ninf);
        for s in 0..s_len {
            let v = alpha[t * s_len + s] + beta[t * s_len + s];
            occ[ext[s]] = lse(occ[ext[s]], v);
        }
        let row = grad.row_mut(t);
        for c in 0..k {
            row[c] = F::of(-(occ[c] - log_p).exp());
        }
    }
    Ok((-log_p, grad))
}

/// CTC loss on raw logits followed by a row-wise log-softmax. Returns the
/// loss and the gradient with respect to the logits, `softmax - γ`.
pub fn ctc_loss_logits<F: Scalar>(logits: &Tensor<F>, label: &[usize], blank: usize) -> Result<(f64, Tensor<F>)> {
    let lp = crate::nn::log_softmax(logits);
    let (loss, mut g) = ctc_loss(&lp, label, blank)?;
    for (gv, &l) in g.data_mut().iter_mut().zip(lp.data()) {
        *gv += l.exp();
    }
    Ok((loss, g))
}

/// Drops repeats then blanks (and any class listed in `drop`).
pub fn collapse(path: &[usize], blank: usize, drop: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &c in path {
        if Some(c) != prev && c != blank && !drop.contains(&c) {
            out.push(c);
        }
        prev = Some(c);
    }
    out
}

/// Per-frame argmax (lowest index on ties), collapsed.
pub fn ctc_greedy_decode<F: Scalar>(probs: &Tensor<F>, blank: usize) -> Vec<usize> {
    let path: Vec<usize> = (0..probs.rows())
        .map(|t| {
            let row = probs.row(t);
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    collapse(&path, blank, &[])
}

/// A labeling kept by the beam with its log-probability mass.
#[derive(Clone, Debug, PartialEq)]
pub struct Beam {
    pub labeling: Vec<usize>,
    pub log_prob: f64,
}

fn rank(a: &(f64, &Vec<usize>), b: &(f64, &Vec<usize>)) -> Ordering {
    b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then_with(|| a.1.cmp(b.1))
}

/// Prefix beam search over labelings. Each prefix carries its
/// blank-ending and non-blank-ending log mass; the `width` best prefixes by
/// total mass survive each frame, equal masses ordered lexicographically.
/// Returns the final beams best first.
pub fn ctc_beam_search<F: Scalar>(probs: &Tensor<F>, width: usize, blank: usize) -> Result<Vec<Beam>> {
    if width < 1 {
        return Err(Error::invalid("width", "beam width must be at least 1"));
    }
    let (t_len, k) = probs.expect_2d("ctc probs")?;
    if blank >= k {
        return Err(Error::invalid("blank", "index outside the class range"));
    }
    let ninf = f64::NEG_INFINITY;
    let mut beams: BTreeMap<Vec<usize>, (f64, f64)> = BTreeMap::new();
    beams.insert(Vec::new(), (0.0, ninf));
    let mut lrow = vec![0.0; k];
    for t in 0..t_len {
        for (l, &p) in lrow.iter_mut().zip(probs.row(t)) {
            *l = p.to_f64().unwrap().ln();
        }
        let mut next: BTreeMap<Vec<usize>, (f64, f64)> = BTreeMap::new();
        for (prefix, &(pb, pnb)) in &beams {
            let total = lse(pb, pnb);
            let e = next.entry(prefix.clone()).or_insert((ninf, ninf));
            e.0 = lse(e.0, total + lrow[blank]);
            let last = prefix.last().copied();
            for c in 0..k {
                if c == blank || lrow[c] == ninf {
                    continue;
                }
                let lc = lrow[c];
                if Some(c) == last {
                    let e = next.get_mut(prefix).unwrap();
                    e.1 = lse(e.1, pnb + lc);
                }
                let mut ext = prefix.clone();
                ext.push(c);
                let from = if Some(c) == last { pb } else { total };
                let e = next.entry(ext).or_insert((ninf, ninf));
                e.1 = lse(e.1, from + lc);
            }
        }
        let mut ranked: Vec<(f64, &Vec<usize>)> = next.iter().map(|(p, &(b, nb))| (lse(b, nb), p)).collect();
        ranked.sort_by(rank);
        let keep: Vec<Vec<usize>> = ranked.into_iter().take(width).map(|(_, p)| p.clone()).collect();
        beams = keep
            .into_iter()
            .map(|p| {
                let v = next[&p];
                (p, v)
            })
            .collect();
    }
    let mut out: Vec<Beam> = beams
        .into_iter()
        .map(|(labeling, (b, nb))| Beam {
            labeling,
            log_prob: lse(b, nb),
        })
        .collect();
    out.sort_by(|a, b| rank(&(a.log_prob, &a.labeling), &(b.log_prob, &b.labeling)));
    Ok(out)
}

/// The most probable labeling found by [`ctc_beam_search`].
pub fn ctc_beam_decode<F: Scalar>(probs: &Tensor<F>, width: usize, blank: usize) -> Result<Vec<usize>> {
    Ok(ctc_beam_search(probs, width, blank)?.swap_remove(0).labeling)
}
