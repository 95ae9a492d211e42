/// One step of an alignment turning `source` into `target`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EditOp<T> {
    Match(T),
    Substitute { from: T, to: T },
    /// Source symbol dropped.
    Delete(T),
    /// Target symbol added.
    Insert(T),
}

/// Levenshtein distance with unit costs and one optimal alignment. On
/// backtracking, match/substitute is preferred to delete, delete to insert.
pub fn edit_distance<T: PartialEq + Clone>(source: &[T], target: &[T]) -> (usize, Vec<EditOp<T>>) {
    let (n, m) = (source.len(), target.len());
    let w = m + 1;
    let mut d = vec![0usize; (n + 1) * w];
    for j in 0..=m {
        d[j] = j;
    }
    for i in 1..=n {
        d[i * w] = i;
        for j in 1..=m {
            let sub = d[(i - 1) * w + j - 1] + usize::from(source[i - 1] != target[j - 1]);
            let del = d[(i - 1) * w + j] + 1;
            let ins = d[i * w + j - 1] + 1;
            d[i * w + j] = sub.min(del).min(ins);
        }
    }
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let same = source[i - 1] == target[j - 1];
            if d[(i - 1) * w + j - 1] + usize::from(!same) == here {
                ops.push(if same {
                    EditOp::Match(source[i - 1].clone())
                } else {
                    EditOp::Substitute {
                        from: source[i - 1].clone(),
                        to: target[j - 1].clone(),
                    }
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[(i - 1) * w + j] + 1 == here {
            ops.push(EditOp::Delete(source[i - 1].clone()));
            i -= 1;
        } else {
            ops.push(EditOp::Insert(target[j - 1].clone()));
            j -= 1;
        }
    }
    ops.reverse();
    (d[n * w + m], ops)
}

/// Replays an alignment, returning the target it produces.
pub fn apply_alignment<T: Clone>(ops: &[EditOp<T>]) -> Vec<T> {
    ops.iter()
        .filter_map(|op| match op {
            EditOp::Match(x) | EditOp::Insert(x) => Some(x.clone()),
            EditOp::Substitute { to, .. } => Some(to.clone()),
            EditOp::Delete(_) => None,
        })
        .collect()
}

/// `max(0, 1 - distance / |truth|)`. An empty truth scores 1 against an
/// empty prediction and 0 otherwise.
pub fn char_accuracy<T: PartialEq + Clone>(pred: &[T], truth: &[T]) -> f64 {
    if truth.is_empty() {
        if !pred.is_empty() {
            log::warn!("accuracy against an empty truth with {} predicted symbols", pred.len());
            return 0.0;
        }
        return 1.0;
    }
    let (d, _) = edit_distance(pred, truth);
    (1.0 - d as f64 / truth.len() as f64).max(0.0)
}

/// Micro-averaged accuracy `1 - Σ distance / Σ |truth|` over `(pred, truth)`
/// pairs.
pub fn corpus_accuracy<T: PartialEq + Clone>(pairs: &[(Vec<T>, Vec<T>)]) -> f64 {
    let (mut dist, mut total) = (0usize, 0usize);
    for (p, t) in pairs {
        dist += edit_distance(p, t).0;
        total += t.len();
    }
    if total == 0 {
        return if dist == 0 { 1.0 } else { 0.0 };
    }
    (1.0 - dist as f64 / total as f64).max(0.0)
}
