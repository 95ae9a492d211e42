use super::model::ChannelModel;
use crate::corpus::{CharSet, Finger, FingerMap};
use crate::error::{Error, Result};

/// Finger-level channel: `sub[f * 9 + g]` is the frequency-weighted chance
/// that a key typed by finger `f` is received as a key of finger `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct FingerConfusion {
    pub sub: Vec<f64>,
    pub del: Vec<f64>,
}

impl FingerConfusion {
    pub fn sub(&self, f: Finger, g: Finger) -> f64 {
        self.sub[f.index() * Finger::ALL.len() + g.index()]
    }

    pub fn del(&self, f: Finger) -> f64 {
        self.del[f.index()]
    }
}

fn fingers_of(m: &ChannelModel, fm: &FingerMap, cs: &CharSet) -> Result<Vec<Finger>> {
    m.alphabet
        .iter()
        .map(|&c| fm.finger_of_char(cs, c).ok_or(Error::UnknownSymbol(c)))
        .collect()
}

/// Aggregates `m` by finger, weighting each source key by its frequency.
/// Fingers with no keys in the alphabet get all-zero rows.
pub fn finger_confusion(m: &ChannelModel, fm: &FingerMap, cs: &CharSet) -> Result<FingerConfusion> {
    let nf = Finger::ALL.len();
    let fingers = fingers_of(m, fm, cs)?;
    let k = m.k();
    let mut sub = vec![0.0; nf * nf];
    let mut del = vec![0.0; nf];
    let mut weight = vec![0.0; nf];
    for x in 0..k {
        let f = fingers[x].index();
        let w = cs.freq(m.alphabet[x]);
        weight[f] += w;
        del[f] += w * m.p_del[x];
        for y in 0..k {
            sub[f * nf + fingers[y].index()] += w * m.sub(x, y);
        }
    }
    for f in 0..nf {
        if weight[f] > 0.0 {
            del[f] /= weight[f];
            for v in &mut sub[f * nf..(f + 1) * nf] {
                *v /= weight[f];
            }
        }
    }
    Ok(FingerConfusion { sub, del })
}

/// Share of the frequency-weighted off-diagonal substitution mass that
/// falls on same-finger adjacent key pairs.
pub fn adjacent_substitution_share(m: &ChannelModel, fm: &FingerMap, cs: &CharSet) -> Result<f64> {
    let classes: Vec<usize> = m
        .alphabet
        .iter()
        .map(|&c| cs.index_of(c).ok_or(Error::UnknownSymbol(c)))
        .collect::<Result<_>>()?;
    let (mut adj, mut total) = (0.0, 0.0);
    for (x, &cx) in classes.iter().enumerate() {
        let w = cs.freq(m.alphabet[x]);
        for (y, &cy) in classes.iter().enumerate() {
            if x == y {
                continue;
            }
            let v = w * m.sub(x, y);
            total += v;
            if fm.are_adjacent(cx, cy) {
                adj += v;
            }
        }
    }
    Ok(if total > 0.0 { adj / total } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_maps_to_identity() {
        let cs = CharSet::standard();
        let fm = FingerMap::standard(&cs);
        let m = ChannelModel::near_identity(cs.chars().to_vec(), 1.0, 0.0, 0.0);
        let fc = finger_confusion(&m, &fm, &cs).unwrap();
        for f in Finger::ALL {
            for g in Finger::ALL {
                assert!((fc.sub(f, g) - f64::from(u8::from(f == g))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_key_weighted_aggregation() {
        // 'e' (L3) and 'd' (L3): one finger, two keys.
        let cs = CharSet::standard();
        let fm = FingerMap::standard(&cs);
        let mut m = ChannelModel::near_identity(vec!['e', 'd'], 1.0, 0.0, 0.0);
        m.p_sub = vec![0.9, 0.0, 0.2, 0.6];
        m.p_del = vec![0.1, 0.2];
        let fc = finger_confusion(&m, &fm, &cs).unwrap();
        let (we, wd) = (cs.freq('e'), cs.freq('d'));
        let del = (we * 0.1 + wd * 0.2) / (we + wd);
        assert!((fc.del(Finger::L3) - del).abs() < 1e-15);
        assert!((fc.sub(Finger::L3, Finger::L3) - (1.0 - del)).abs() < 1e-15);
        assert!(finger_confusion(&ChannelModel::near_identity(vec!['~'], 1.0, 0.0, 0.0), &fm, &cs).is_err());
    }
}
