//! Channel-model fits from decode transcripts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use myotype::channel::{adjacent_substitution_share, finger_confusion, fit_paper_style, ChannelModel, FingerConfusion};
use myotype::corpus::{CharSet, Finger, FingerMap};

use crate::transcripts::TranscriptRow;

#[derive(Clone, Debug)]
pub struct ErrorModel {
    pub model: ChannelModel,
    pub fingers: FingerConfusion,
    pub pairs: usize,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
    /// Off-diagonal substitution mass on same-finger adjacent keys.
    pub adjacent_share: f64,
}

/// Fits on every transcript, or only holdout ones with `holdout_only`.
pub fn fit(rows: &[TranscriptRow], holdout_only: bool) -> Result<ErrorModel> {
    let pairs: Vec<(Vec<char>, Vec<char>)> = rows
        .iter()
        .filter(|r| r.holdout || !holdout_only)
        .map(|r| (r.predicted.clone(), r.recorded.clone()))
        .collect();
    if pairs.is_empty() {
        bail!("no transcripts to fit");
    }
    let cs = CharSet::standard();
    let fm = FingerMap::standard(&cs);
    let fit = fit_paper_style(&pairs, &cs)?;
    Ok(ErrorModel {
        fingers: finger_confusion(&fit.model, &fm, &cs)?,
        adjacent_share: adjacent_substitution_share(&fit.model, &fm, &cs)?,
        pairs: pairs.len(),
        iterations: fit.log_likelihoods.len() - 1,
        converged: fit.converged,
        log_likelihood: *fit.log_likelihoods.last().unwrap(),
        model: fit.model,
    })
}

pub fn finger_csv(fc: &FingerConfusion) -> String {
    let mut s = String::from("finger");
    for g in Finger::ALL {
        write!(s, ",{g}").unwrap();
    }
    s.push_str(",deleted\n");
    for f in Finger::ALL {
        write!(s, "{f}").unwrap();
        for g in Finger::ALL {
            write!(s, ",{}", fc.sub(f, g)).unwrap();
        }
        writeln!(s, ",{}", fc.del(f)).unwrap();
    }
    s
}

/// Writes `channel.csv`, `finger_confusion.csv` and `errmodel.csv`.
pub fn write(em: &ErrorModel, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    em.model.save_csv(&dir.join("channel.csv"))?;
    fs::write(dir.join("finger_confusion.csv"), finger_csv(&em.fingers))?;
    let mean_diag = (0..em.model.k()).map(|x| em.model.sub(x, x)).sum::<f64>() / em.model.k() as f64;
    let summary = format!(
        "pairs,iterations,converged,log_likelihood,insert_prob,mean_diagonal,adjacent_share\n{},{},{},{},{},{},{}\n",
        em.pairs, em.iterations, em.converged, em.log_likelihood, em.model.insert_prob, mean_diag, em.adjacent_share
    );
    fs::write(dir.join("errmodel.csv"), summary)?;
    Ok(())
}
