//! The 32-key alphabet, CTC class layout and finger assignments.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

pub const N_CHARS: usize = 32;
/// Reserved "character separator" output class.
pub const SEPARATOR: usize = 32;
/// CTC blank ("no output") class.
pub const BLANK: usize = 33;
pub const N_CLASSES: usize = 34;

pub const ENTER: char = '\n';
pub const BACKSPACE: char = '\u{8}';

const CHARS: [char; N_CHARS] = [
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r', 's',
    't', 'u', 'v', 'w', 'x', 'y', 'z', ' ', '.', ',', ENTER, BACKSPACE, '\'',
];

// Measured unigram frequencies of the reference typing corpus.
const MEASURED: [(char, f64); 12] = [
    ('e', 0.0898),
    ('a', 0.0606),
    ('s', 0.0484),
    ('d', 0.0269),
    ('w', 0.0186),
    ('c', 0.0176),
    ('p', 0.0125),
    ('v', 0.0080),
    ('\'', 0.0084),
    ('x', 0.0014),
    ('z', 0.0011),
    ('q', 0.0010),
];

// Space, punctuation and editing keys, chosen to be consistent with the
// corpus (space > 18% of keystrokes).
const SPECIAL: [(char, f64); 5] = [
    (' ', 0.185),
    ('.', 0.009),
    (',', 0.008),
    (ENTER, 0.003),
    (BACKSPACE, 0.022),
];

// Standard English letter frequencies (percent of letters), rescaled into
// whatever mass the two tables above leave over.
const ENGLISH_REST: [(char, f64); 14] = [
    ('t', 9.06),
    ('o', 7.51),
    ('i', 6.97),
    ('n', 6.75),
    ('h', 6.09),
    ('r', 5.99),
    ('l', 4.03),
    ('u', 2.76),
    ('m', 2.41),
    ('f', 2.23),
    ('g', 2.02),
    ('y', 1.97),
    ('b', 1.49),
    ('k', 0.77),
];
const ENGLISH_J: (char, f64) = ('j', 0.15);

/// Ordered alphabet with unigram frequencies `f(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CharSet {
    chars: [char; N_CHARS],
    freq: [f64; N_CHARS],
}

impl CharSet {
    /// 'a'-'z', space, period, comma, enter, backspace, apostrophe.
    pub fn standard() -> Self {
        let mut freq = [0.0; N_CHARS];
        let fixed: f64 = MEASURED.iter().chain(&SPECIAL).map(|&(_, f)| f).sum();
        for &(c, f) in MEASURED.iter().chain(&SPECIAL) {
            freq[class_of(c)] = f;
        }
        let rest: Vec<(char, f64)> = ENGLISH_REST.iter().copied().chain([ENGLISH_J]).collect();
        let rest_total: f64 = rest.iter().map(|&(_, p)| p).sum();
        for &(c, p) in &rest {
            freq[class_of(c)] = (1.0 - fixed) * p / rest_total;
        }
        CharSet { chars: CHARS, freq }
    }

    pub fn chars(&self) -> &[char; N_CHARS] {
        &self.chars
    }

    pub fn len(&self) -> usize {
        N_CHARS
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.chars.iter().position(|&x| x == c)
    }

    pub fn contains(&self, c: char) -> bool {
        self.index_of(c).is_some()
    }

    pub fn char_at(&self, class: usize) -> Option<char> {
        self.chars.get(class).copied()
    }

    pub fn freq(&self, c: char) -> f64 {
        self.index_of(c).map_or(0.0, |i| self.freq[i])
    }

    pub fn freqs(&self) -> &[f64; N_CHARS] {
        &self.freq
    }

    pub fn encode(&self, text: &[char]) -> Result<Vec<usize>> {
        text.iter()
            .map(|&c| self.index_of(c).ok_or(Error::UnknownSymbol(c)))
            .collect()
    }

    pub fn encode_str(&self, text: &str) -> Result<Vec<usize>> {
        let chars: Vec<char> = text.chars().collect();
        self.encode(&chars)
    }

    /// Maps class indices back to symbols, dropping separator and blank.
    pub fn decode(&self, classes: &[usize]) -> Vec<char> {
        classes.iter().filter_map(|&k| self.char_at(k)).collect()
    }
}

impl Default for CharSet {
    fn default() -> Self {
        CharSet::standard()
    }
}

fn class_of(c: char) -> usize {
    CHARS.iter().position(|&x| x == c).expect("table char in alphabet")
}

/// Keylogger name of a key: the character itself for letters, otherwise
/// one of SPACE, ENTER, BACKSPACE, PERIOD, COMMA, APOSTROPHE.
pub fn key_name(c: char) -> String {
    match c {
        ' ' => "SPACE".into(),
        ENTER => "ENTER".into(),
        BACKSPACE => "BACKSPACE".into(),
        '.' => "PERIOD".into(),
        ',' => "COMMA".into(),
        '\'' => "APOSTROPHE".into(),
        c => c.to_string(),
    }
}

/// Inverse of [`key_name`] for in-set keys.
pub fn parse_key_name(name: &str) -> Option<char> {
    match name {
        "SPACE" => Some(' '),
        "ENTER" => Some(ENTER),
        "BACKSPACE" => Some(BACKSPACE),
        "PERIOD" => Some('.'),
        "COMMA" => Some(','),
        "APOSTROPHE" => Some('\''),
        _ => {
            let mut it = name.chars();
            match (it.next(), it.next()) {
                (Some(c), None) if CHARS.contains(&c) => Some(c),
                _ => None,
            }
        }
    }
}

/// Fingers numbered 2 (index) to 5 (pinkie) per hand, plus the right thumb.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Finger {
    L2,
    L3,
    L4,
    L5,
    R2,
    R3,
    R4,
    R5,
    RThumb,
}

impl Finger {
    pub const ALL: [Finger; 9] = [
        Finger::L2,
        Finger::L3,
        Finger::L4,
        Finger::L5,
        Finger::R2,
        Finger::R3,
        Finger::R4,
        Finger::R5,
        Finger::RThumb,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_left(self) -> bool {
        matches!(self, Finger::L2 | Finger::L3 | Finger::L4 | Finger::L5)
    }
}

impl fmt::Display for Finger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Finger::L2 => "L2",
            Finger::L3 => "L3",
            Finger::L4 => "L4",
            Finger::L5 => "L5",
            Finger::R2 => "R2",
            Finger::R3 => "R3",
            Finger::R4 => "R4",
            Finger::R5 => "R5",
            Finger::RThumb => "R-thumb",
        };
        f.write_str(s)
    }
}

/// QWERTY key position: row 0 = top letter row, 1 = home, 2 = bottom,
/// 3 = space bar. Columns follow the letter columns (q/a/z = 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyPos {
    pub row: u8,
    pub col: u8,
}

pub fn key_pos(c: char) -> Option<KeyPos> {
    const TOP: &str = "qwertyuiop";
    const HOME: &str = "asdfghjkl";
    const BOTTOM: &str = "zxcvbnm,.";
    let at = |row: u8, s: &str| s.chars().position(|x| x == c).map(|i| KeyPos { row, col: i as u8 });
    at(0, TOP).or_else(|| at(1, HOME)).or_else(|| at(2, BOTTOM)).or(match c {
        '\'' => Some(KeyPos { row: 1, col: 10 }),
        ENTER => Some(KeyPos { row: 1, col: 11 }),
        BACKSPACE => Some(KeyPos { row: 0, col: 13 }),
        ' ' => Some(KeyPos { row: 3, col: 5 }),
        _ => None,
    })
}

/// Touch-typing finger assignment and same-finger key adjacency.
#[derive(Clone, Debug)]
pub struct FingerMap {
    finger: [Finger; N_CHARS],
    adjacency: BTreeSet<(usize, usize)>,
}

impl FingerMap {
    pub fn standard(cs: &CharSet) -> Self {
        let mut finger = [Finger::RThumb; N_CHARS];
        for (i, &c) in cs.chars().iter().enumerate() {
            finger[i] = standard_finger(c);
        }
        let mut adjacency = BTreeSet::new();
        for i in 0..N_CHARS {
            for j in i + 1..N_CHARS {
                if finger[i] != finger[j] {
                    continue;
                }
                let (a, b) = (cs.chars()[i], cs.chars()[j]);
                let (pa, pb) = (key_pos(a).unwrap(), key_pos(b).unwrap());
                let dr = pa.row.abs_diff(pb.row);
                let dc = pa.col.abs_diff(pb.col);
                let orthogonal = dr + dc == 1;
                if orthogonal || pinkie_neighbours(a, b) {
                    adjacency.insert((i, j));
                }
            }
        }
        FingerMap { finger, adjacency }
    }

    pub fn finger_of(&self, class: usize) -> Finger {
        self.finger[class]
    }

    pub fn finger_of_char(&self, cs: &CharSet, c: char) -> Option<Finger> {
        cs.index_of(c).map(|i| self.finger[i])
    }

    /// Unordered same-finger adjacent pairs, as `(low, high)` class indices.
    pub fn adjacency(&self) -> &BTreeSet<(usize, usize)> {
        &self.adjacency
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency.contains(&(a.min(b), a.max(b)))
    }
}

// The right pinkie covers p, apostrophe, enter and backspace, which are
// not on a shared grid column.
fn pinkie_neighbours(a: char, b: char) -> bool {
    let pair = |x: char, y: char| (a == x && b == y) || (a == y && b == x);
    pair('p', '\'') || pair('\'', ENTER) || pair(ENTER, BACKSPACE)
}

fn standard_finger(c: char) -> Finger {
    match c {
        'q' | 'a' | 'z' => Finger::L5,
        'w' | 's' | 'x' => Finger::L4,
        'e' | 'd' | 'c' => Finger::L3,
        'r' | 't' | 'f' | 'g' | 'v' | 'b' => Finger::L2,
        'y' | 'u' | 'h' | 'j' | 'n' | 'm' => Finger::R2,
        'i' | 'k' | ',' => Finger::R3,
        'o' | 'l' | '.' => Finger::R4,
        'p' | '\'' | ENTER | BACKSPACE => Finger::R5,
        _ => Finger::RThumb,
    }
}
