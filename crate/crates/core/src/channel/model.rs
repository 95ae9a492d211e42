//! Character-level noisy channel with deletions, substitutions and a
//! geometric insertion loop before every source position and before the
//! end of the string.

use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{key_name, parse_key_name, CharSet};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelModel {
    pub alphabet: Vec<char>,
    /// `p_del[x]`
    pub p_del: Vec<f64>,
    /// Probability of (another) insertion before each transmission.
    pub insert_prob: f64,
    /// `p_ins[y]`, distribution of inserted symbols.
    pub p_ins: Vec<f64>,
    /// Row-major `p_sub[x * K + y]`.
    pub p_sub: Vec<f64>,
}

impl ChannelModel {
    pub fn k(&self) -> usize {
        self.alphabet.len()
    }

    pub fn sub(&self, x: usize, y: usize) -> f64 {
        self.p_sub[x * self.k() + y]
    }

    /// `p_sub = (1 - p_del)·(diag·I + (1 - diag)·U)`, uniform `p_ins`.
    pub fn near_identity(alphabet: Vec<char>, diag: f64, p_del: f64, insert_prob: f64) -> Self {
        let k = alphabet.len();
        let mut p_sub = vec![0.0; k * k];
        for x in 0..k {
            for y in 0..k {
                let v = (1.0 - diag) / k as f64 + if x == y { diag } else { 0.0 };
                p_sub[x * k + y] = (1.0 - p_del) * v;
            }
        }
        ChannelModel {
            p_del: vec![p_del; k],
            insert_prob,
            p_ins: vec![1.0 / k as f64; k],
            p_sub,
            alphabet,
        }
    }

    /// Starting point for fitting: 0.9 identity + 0.1 uniform substitution
    /// shape, deletion 0.02, insertion 0.01.
    pub fn em_init(alphabet: Vec<char>) -> Self {
        ChannelModel::near_identity(alphabet, 0.9, 0.02, 0.01)
    }

    /// Shape checks plus the normalization identities within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let k = self.k();
        if k == 0 || self.p_del.len() != k || self.p_ins.len() != k || self.p_sub.len() != k * k {
            return Err(Error::Shape("channel model tables disagree with the alphabet".into()));
        }
        let all = self.p_del.iter().chain(&self.p_ins).chain(&self.p_sub);
        if all.clone().any(|&v| !(0.0..=1.0 + tol).contains(&v)) {
            return Err(Error::invalid("channel model", "probability outside [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.insert_prob) {
            return Err(Error::invalid("insert_prob", "must lie in [0, 1)"));
        }
        for x in 0..k {
            let row = self.p_del[x] + self.p_sub[x * k..(x + 1) * k].iter().sum::<f64>();
            if (row - 1.0).abs() > tol {
                return Err(Error::invalid("channel model", format!("row {x} sums to {row}")));
            }
        }
        let s: f64 = self.p_ins.iter().sum();
        if (s - 1.0).abs() > tol {
            return Err(Error::invalid("p_ins", format!("sums to {s}")));
        }
        Ok(())
    }

    pub fn index_of(&self, c: char) -> Result<usize> {
        self.alphabet.iter().position(|&a| a == c).ok_or(Error::UnknownSymbol(c))
    }

    pub fn encode(&self, s: &[char]) -> Result<Vec<usize>> {
        s.iter().map(|&c| self.index_of(c)).collect()
    }

    fn check(&self, s: &[usize]) -> Result<()> {
        match s.iter().find(|&&c| c >= self.k()) {
            Some(&c) => Err(Error::invalid("symbol", format!("index {c} outside a {}-symbol alphabet", self.k()))),
            None => Ok(()),
        }
    }

    /// CSV with a `row,<alphabet>` header, then `sub:<x>` rows, a `del`
    /// row, an `ins` row and a `P_ins` row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let k = self.k();
        let mut wr = csv::Writer::from_writer(w);
        let names: Vec<String> = self.alphabet.iter().map(|&c| key_name(c)).collect();
        let csv_err = |e: csv::Error| Error::Format(e.to_string());
        let mut header = vec!["row".to_string()];
        header.extend(names.iter().cloned());
        wr.write_record(&header).map_err(csv_err)?;
        let fmt = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        for x in 0..k {
            let mut rec = vec![format!("sub:{}", names[x])];
            rec.extend(fmt(&self.p_sub[x * k..(x + 1) * k]));
            wr.write_record(&rec).map_err(csv_err)?;
        }
        for (tag, v) in [("del", &self.p_del), ("ins", &self.p_ins)] {
            let mut rec = vec![tag.to_string()];
            rec.extend(fmt(v));
            wr.write_record(&rec).map_err(csv_err)?;
        }
        let mut rec = vec!["P_ins".to_string(), self.insert_prob.to_string()];
        rec.resize(k + 1, String::new());
        wr.write_record(&rec).map_err(csv_err)?;
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let bad = |s: String| Error::Format(format!("channel csv: {s}"));
        let header = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
        let alphabet: Vec<char> = header
            .iter()
            .skip(1)
            .map(|n| {
                parse_key_name(n)
                    .or_else(|| {
                        let mut it = n.chars();
                        match (it.next(), it.next()) {
                            (Some(c), None) => Some(c),
                            _ => None,
                        }
                    })
                    .ok_or_else(|| bad(format!("bad symbol name {n:?}")))
            })
            .collect::<Result<_>>()?;
        let k = alphabet.len();
        let mut m = ChannelModel {
            p_del: vec![0.0; k],
            insert_prob: 0.0,
            p_ins: vec![0.0; k],
            p_sub: vec![0.0; k * k],
            alphabet,
        };
        let mut seen = 0usize;
        for rec in rd.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let tag = rec.get(0).unwrap_or("").to_string();
            let vals: Vec<f64> = rec
                .iter()
                .skip(1)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|_| bad(format!("bad number {s:?}"))))
                .collect::<Result<_>>()?;
            let expect = |n: usize| if vals.len() == n { Ok(()) } else { Err(bad(format!("row {tag} has {} values", vals.len()))) };
            if let Some(name) = tag.strip_prefix("sub:") {
                expect(k)?;
                let x = m
                    .alphabet
                    .iter()
                    .position(|&c| key_name(c) == name)
                    .ok_or_else(|| bad(format!("unknown row {name}")))?;
                m.p_sub[x * k..(x + 1) * k].copy_from_slice(&vals);
            } else if tag == "del" {
                expect(k)?;
                m.p_del = vals;
            } else if tag == "ins" {
                expect(k)?;
                m.p_ins = vals;
            } else if tag == "P_ins" {
                expect(1)?;
                m.insert_prob = vals[0];
            } else {
                return Err(bad(format!("unknown row tag {tag:?}")));
            }
            seen += 1;
        }
        if seen != k + 3 {
            return Err(bad(format!("expected {} rows, found {seen}", k + 3)));
        }
        Ok(m)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        ChannelModel::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

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

struct LogTables {
    del: Vec<f64>,
    sub: Vec<f64>,
    ins: Vec<f64>,
    cont: f64,
    stop: f64,
}

impl LogTables {
    fn new(m: &ChannelModel) -> Self {
        LogTables {
            del: m.p_del.iter().map(|p| p.ln()).collect(),
            sub: m.p_sub.iter().map(|p| p.ln()).collect(),
            ins: m.p_ins.iter().map(|p| p.ln()).collect(),
            cont: m.insert_prob.ln(),
            stop: (1.0 - m.insert_prob).ln(),
        }
    }
}

/// Forward lattice: `a[i][j]` is the log mass of having consumed `x[..i]`,
/// emitted `y[..j]`, and standing at the insertion loop before `x[i]`.
fn forward(lt: &LogTables, k: usize, x: &[usize], y: &[usize]) -> Vec<f64> {
    let (n, m) = (x.len(), y.len());
    let w = m + 1;
    let mut a = vec![f64::NEG_INFINITY; (n + 1) * w];
    a[0] = 0.0;
    for i in 0..=n {
        for j in 0..=m {
            let mut v = a[i * w + j];
            if i > 0 {
                let xi = x[i - 1];
                let prev = (i - 1) * w;
                v = lse(v, a[prev + j] + lt.stop + lt.del[xi]);
                if j > 0 {
                    v = lse(v, a[prev + j - 1] + lt.stop + lt.sub[xi * k + y[j - 1]]);
                }
            }
            if j > 0 {
                v = lse(v, a[i * w + j - 1] + lt.cont + lt.ins[y[j - 1]]);
            }
            a[i * w + j] = v;
        }
    }
    a
}

/// Backward lattice: `b[i][j]` is the log mass of producing `y[j..]` from
/// the insertion loop before `x[i]`.
fn backward(lt: &LogTables, k: usize, x: &[usize], y: &[usize]) -> Vec<f64> {
    let (n, m) = (x.len(), y.len());
    let w = m + 1;
    let mut b = vec![f64::NEG_INFINITY; (n + 1) * w];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            // After the loop exits at (i, j).
            let t = if i == n {
                if j == m {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                let xi = x[i];
                let mut t = b[(i + 1) * w + j] + lt.del[xi];
                if j < m {
                    t = lse(t, b[(i + 1) * w + j + 1] + lt.sub[xi * k + y[j]]);
                }
                t
            };
            let mut v = lt.stop + t;
            if j < m {
                v = lse(v, lt.cont + lt.ins[y[j]] + b[i * w + j + 1]);
            }
            b[i * w + j] = v;
        }
    }
    b
}

/// Exact log-probability that the channel turns `source` into `observed`,
/// summed over all generation histories.
pub fn pair_log_likelihood(m: &ChannelModel, source: &[usize], observed: &[usize]) -> Result<f64> {
    m.check(source)?;
    m.check(observed)?;
    if let Some(s) = ScaledLattice::forward(m, source, observed) {
        return Ok(s.log_likelihood(m));
    }
    let lt = LogTables::new(m);
    let a = forward(&lt, m.k(), source, observed);
    Ok(a[a.len() - 1] + lt.stop)
}

/// Expected operation counts accumulated by the E-step.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelCounts {
    pub k: usize,
    pub del: Vec<f64>,
    pub sub: Vec<f64>,
    pub ins: Vec<f64>,
    /// Loop exits, one per source position plus one per string end.
    pub exits: f64,
    pub log_likelihood: f64,
}

impl ChannelCounts {
    pub fn zeros(k: usize) -> Self {
        ChannelCounts {
            k,
            del: vec![0.0; k],
            sub: vec![0.0; k * k],
            ins: vec![0.0; k],
            exits: 0.0,
            log_likelihood: 0.0,
        }
    }

    pub fn add(&mut self, o: &ChannelCounts) {
        for (a, b) in self.del.iter_mut().zip(&o.del) {
            *a += b;
        }
        for (a, b) in self.sub.iter_mut().zip(&o.sub) {
            *a += b;
        }
        for (a, b) in self.ins.iter_mut().zip(&o.ins) {
            *a += b;
        }
        self.exits += o.exits;
        self.log_likelihood += o.log_likelihood;
    }

    pub fn insertions(&self) -> f64 {
        self.ins.iter().sum()
    }
}

/// Posterior operation counts for one pair; `None` when the pair has zero
/// probability under `m`.
pub fn pair_counts(m: &ChannelModel, x: &[usize], y: &[usize]) -> Option<ChannelCounts> {
    pair_counts_scaled(m, x, y).or_else(|| pair_counts_log(m, x, y))
}

fn pair_counts_log(m: &ChannelModel, x: &[usize], y: &[usize]) -> Option<ChannelCounts> {
    let k = m.k();
    let lt = LogTables::new(m);
    let a = forward(&lt, k, x, y);
    let b = backward(&lt, k, x, y);
    let (n, mm) = (x.len(), y.len());
    let w = mm + 1;
    let log_p = a[a.len() - 1] + lt.stop;
    if !log_p.is_finite() {
        return None;
    }
    let mut c = ChannelCounts::zeros(k);
    c.log_likelihood = log_p;
    c.exits = (n + 1) as f64;
    for i in 0..=n {
        for j in 0..=mm {
            let here = a[i * w + j];
            if here == f64::NEG_INFINITY {
                continue;
            }
            if j < mm {
                c.ins[y[j]] += (here + lt.cont + lt.ins[y[j]] + b[i * w + j + 1] - log_p).exp();
            }
            if i < n {
                let xi = x[i];
                let t = here + lt.stop;
                c.del[xi] += (t + lt.del[xi] + b[(i + 1) * w + j] - log_p).exp();
                if j < mm {
                    c.sub[xi * k + y[j]] += (t + lt.sub[xi * k + y[j]] + b[(i + 1) * w + j + 1] - log_p).exp();
                }
            }
        }
    }
    Some(c)
}

/// Linear-space forward lattice with every source row renormalized to sum
/// to one. `None` when a row underflows, in which case callers fall back to
/// the log-space lattice.
struct ScaledLattice {
    a: Vec<f64>,
    /// Row sums before normalization.
    scale: Vec<f64>,
    w: usize,
}

impl ScaledLattice {
    fn forward(m: &ChannelModel, x: &[usize], y: &[usize]) -> Option<Self> {
        let k = m.k();
        let (n, mm) = (x.len(), y.len());
        let w = mm + 1;
        let (cont, stop) = (m.insert_prob, 1.0 - m.insert_prob);
        let mut a = vec![0.0; (n + 1) * w];
        let mut scale = vec![0.0; n + 1];
        for i in 0..=n {
            let (prev, row) = a.split_at_mut(i * w);
            let row = &mut row[..w];
            if i == 0 {
                row[0] = 1.0;
            } else {
                let p = &prev[(i - 1) * w..];
                let xi = x[i - 1];
                let del = stop * m.p_del[xi];
                let sub = &m.p_sub[xi * k..(xi + 1) * k];
                row[0] = p[0] * del;
                for j in 1..w {
                    row[j] = p[j] * del + p[j - 1] * stop * sub[y[j - 1]];
                }
            }
            for j in 1..w {
                row[j] += row[j - 1] * cont * m.p_ins[y[j - 1]];
            }
            let s: f64 = row.iter().sum();
            if !(s > 0.0 && s.is_finite()) {
                return None;
            }
            row.iter_mut().for_each(|v| *v /= s);
            scale[i] = s;
        }
        (a[a.len() - 1] > 0.0).then_some(ScaledLattice { a, scale, w })
    }

    fn log_likelihood(&self, m: &ChannelModel) -> f64 {
        self.scale.iter().map(|s| s.ln()).sum::<f64>() + (self.a[self.a.len() - 1] * (1.0 - m.insert_prob)).ln()
    }
}

fn pair_counts_scaled(m: &ChannelModel, x: &[usize], y: &[usize]) -> Option<ChannelCounts> {
    let k = m.k();
    let (n, mm) = (x.len(), y.len());
    let lat = ScaledLattice::forward(m, x, y)?;
    let (a, w) = (&lat.a, lat.w);
    let (cont, stop) = (m.insert_prob, 1.0 - m.insert_prob);
    // b[i][j] is the mass of producing y[j..] from the loop before x[i],
    // divided by the forward scales of rows after i.
    let mut b = vec![0.0; (n + 1) * w];
    for i in (0..=n).rev() {
        for j in (0..w).rev() {
            let mut v = if i == n {
                if j == mm {
                    stop
                } else {
                    0.0
                }
            } else {
                let xi = x[i];
                let nx = &b[(i + 1) * w..(i + 2) * w];
                let mut t = nx[j] * m.p_del[xi];
                if j < mm {
                    t += nx[j + 1] * m.p_sub[xi * k + y[j]];
                }
                stop * t / lat.scale[i + 1]
            };
            if j < mm {
                v += cont * m.p_ins[y[j]] * b[i * w + j + 1];
            }
            if !v.is_finite() {
                return None;
            }
            b[i * w + j] = v;
        }
    }
    let z = a[a.len() - 1] * stop;
    let mut c = ChannelCounts::zeros(k);
    c.log_likelihood = lat.log_likelihood(m);
    c.exits = (n + 1) as f64;
    for i in 0..=n {
        let next_scale = if i < n { lat.scale[i + 1] } else { 1.0 };
        for j in 0..w {
            let here = a[i * w + j];
            if here == 0.0 {
                continue;
            }
            if j < mm {
                c.ins[y[j]] += here * cont * m.p_ins[y[j]] * b[i * w + j + 1] / z;
            }
            if i < n {
                let xi = x[i];
                let t = here * stop / (next_scale * z);
                c.del[xi] += t * m.p_del[xi] * b[(i + 1) * w + j];
                if j < mm {
                    c.sub[xi * k + y[j]] += t * m.p_sub[xi * k + y[j]] * b[(i + 1) * w + j + 1];
                }
            }
        }
    }
    Some(c)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmOptions {
    pub max_iters: usize,
    /// Stop once the total log-likelihood gains less than this.
    pub tol: f64,
    /// Pseudo-count added to every count before renormalizing.
    pub smoothing: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            max_iters: 200,
            tol: 1e-6,
            smoothing: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmFit {
    pub model: ChannelModel,
    /// Total log-likelihood of the initial model followed by one entry per
    /// iteration.
    pub log_likelihoods: Vec<f64>,
    pub converged: bool,
}

const E_CHUNK: usize = 64;

/// E-step over all pairs, reduced in input order.
pub fn expected_counts(m: &ChannelModel, pairs: &[(Vec<usize>, Vec<usize>)]) -> Result<ChannelCounts> {
    let partial: Vec<Result<ChannelCounts>> = pairs
        .par_chunks(E_CHUNK)
        .enumerate()
        .map(|(ci, chunk)| {
            let mut acc = ChannelCounts::zeros(m.k());
            for (off, (x, y)) in chunk.iter().enumerate() {
                let c = pair_counts(m, x, y).ok_or(Error::ZeroSupport(ci * E_CHUNK + off))?;
                acc.add(&c);
            }
            Ok(acc)
        })
        .collect();
    let mut total = ChannelCounts::zeros(m.k());
    for p in partial {
        total.add(&p?);
    }
    Ok(total)
}

/// M-step: renormalize smoothed counts. A symbol with no mass at all keeps
/// its previous row.
pub fn maximize(prev: &ChannelModel, c: &ChannelCounts, smoothing: f64) -> ChannelModel {
    let k = c.k;
    let mut m = prev.clone();
    for x in 0..k {
        let del = c.del[x] + smoothing;
        let row: Vec<f64> = c.sub[x * k..(x + 1) * k].iter().map(|v| v + smoothing).collect();
        let total = del + row.iter().sum::<f64>();
        if total > 0.0 {
            m.p_del[x] = del / total;
            for (dst, v) in m.p_sub[x * k..(x + 1) * k].iter_mut().zip(&row) {
                *dst = v / total;
            }
        }
    }
    let ins: Vec<f64> = c.ins.iter().map(|v| v + smoothing).collect();
    let ins_total: f64 = ins.iter().sum();
    if ins_total > 0.0 {
        m.p_ins = ins.iter().map(|v| v / ins_total).collect();
    }
    let inserted = c.insertions() + smoothing;
    m.insert_prob = inserted / (inserted + c.exits + smoothing);
    m
}

/// Runs EM from `init`, invoking `observe(iteration, model, log_likelihood)`
/// after every M-step.
pub fn em_fit_observed(
    pairs: &[(Vec<usize>, Vec<usize>)],
    init: &ChannelModel,
    opts: EmOptions,
    mut observe: impl FnMut(usize, &ChannelModel, f64),
) -> Result<EmFit> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    init.validate(1e-9)?;
    for (x, y) in pairs {
        init.check(x)?;
        init.check(y)?;
    }
    let mut model = init.clone();
    let mut counts = expected_counts(&model, pairs)?;
    let mut lls = vec![counts.log_likelihood];
    let mut converged = false;
    for it in 0..opts.max_iters {
        model = maximize(&model, &counts, opts.smoothing);
        counts = expected_counts(&model, pairs)?;
        let ll = counts.log_likelihood;
        observe(it + 1, &model, ll);
        let gain = ll - lls[lls.len() - 1];
        lls.push(ll);
        if gain.abs() < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(EmFit {
        model,
        log_likelihoods: lls,
        converged,
    })
}

pub fn em_fit(pairs: &[(Vec<usize>, Vec<usize>)], init: &ChannelModel, opts: EmOptions) -> Result<EmFit> {
    em_fit_observed(pairs, init, opts, |_, _, _| {})
}

/// Fits the channel that turns recorded text into predicted text over the
/// full 32-key alphabet, with a near-identity start and `1e-6` smoothing.
pub fn fit_paper_style(predictions: &[(Vec<char>, Vec<char>)], cs: &CharSet) -> Result<EmFit> {
    let init = ChannelModel::em_init(cs.chars().to_vec());
    let pairs: Vec<(Vec<usize>, Vec<usize>)> = predictions
        .iter()
        .map(|(pred, rec)| Ok((init.encode(rec)?, init.encode(pred)?)))
        .collect::<Result<_>>()?;
    em_fit(&pairs, &init, EmOptions::default())
}
