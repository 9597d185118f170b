//! Words over {0,1}, dual words, bi-infinite windows and the β-metric.
//!
//! A [`Word`] is read left to right as x_0 x_1 ... x_n, first symbol outermost.
//! A [`DualWord`] holds the suffix y_{-n} ... y_{-1} of a past sequence; index 0
//! is y_{-n} and the last stored symbol is y_{-1}.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DEPTH_CAP: usize = 26;

fn parse_symbols(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .filter(|c| *c != '…')
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::InvalidSymbol(other)),
        })
        .collect()
}

fn check_symbols(symbols: &[u8]) -> Result<()> {
    match symbols.iter().find(|&&s| s > 1) {
        Some(&s) => Err(Error::InvalidSymbol(char::from(b'0' + s.min(9)))),
        None => Ok(()),
    }
}

fn write_symbols(f: &mut fmt::Formatter<'_>, symbols: &[u8]) -> fmt::Result {
    for s in symbols {
        f.write_str(if *s == 0 { "0" } else { "1" })?;
    }
    Ok(())
}

/// Finite word x_0 ... x_n.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Result<Self> {
        check_symbols(&symbols)?;
        Ok(Word(symbols))
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Word of length `len` whose binary value (first symbol most significant) is `index`.
    pub fn from_index(index: usize, len: usize) -> Self {
        Word((0..len).map(|k| ((index >> (len - 1 - k)) & 1) as u8).collect())
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Binary value with the first symbol most significant.
    pub fn index(&self) -> usize {
        self.0.iter().fold(0usize, |acc, &s| (acc << 1) | s as usize)
    }

    /// The word with `s` appended on the right (innermost).
    pub fn child(&self, s: u8) -> Word {
        let mut v = self.0.clone();
        v.push(s);
        Word(v)
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.len())].to_vec())
    }

    pub fn suffix_from(&self, start: usize) -> Word {
        Word(self.0[start.min(self.len())..].to_vec())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Reinterpret as the past y_{-n} ... y_{-1}.
    pub fn as_dual(&self) -> DualWord {
        DualWord(self.0.clone())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_symbols(f, &self.0)
    }
}

impl FromStr for Word {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(Word(parse_symbols(s)?))
    }
}

impl TryFrom<String> for Word {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Word> for String {
    fn from(w: Word) -> String {
        w.to_string()
    }
}

/// Past suffix y_{-n} ... y_{-1}.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DualWord(Vec<u8>);

impl DualWord {
    pub fn new(symbols: Vec<u8>) -> Result<Self> {
        check_symbols(&symbols)?;
        Ok(DualWord(symbols))
    }

    pub fn empty() -> Self {
        DualWord(Vec::new())
    }

    pub fn zeros(n: usize) -> Self {
        DualWord(vec![0; n])
    }

    pub fn from_index(index: usize, len: usize) -> Self {
        Word::from_index(index, len).as_dual()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index(&self) -> usize {
        self.as_word().index()
    }

    /// Plain word y_{-n} ... y_{-1}, so that I_y is the cylinder of the past.
    pub fn as_word(&self) -> Word {
        Word(self.0.clone())
    }

    /// The last `m` symbols y_{-m} ... y_{-1}.
    pub fn suffix(&self, m: usize) -> DualWord {
        let start = self.len().saturating_sub(m);
        DualWord(self.0[start..].to_vec())
    }

    /// Extend leftward with zeros to length `n` (no-op if already that long).
    pub fn padded(&self, n: usize) -> DualWord {
        if self.len() >= n {
            return self.clone();
        }
        let mut v = vec![0; n - self.len()];
        v.extend_from_slice(&self.0);
        DualWord(v)
    }

    /// The past y·x_0...x_k obtained by appending future symbols.
    pub fn extend(&self, w: &Word) -> DualWord {
        let mut v = self.0.clone();
        v.extend_from_slice(w.symbols());
        DualWord(v)
    }

    pub fn push(&self, s: u8) -> DualWord {
        let mut v = self.0.clone();
        v.push(s);
        DualWord(v)
    }

    /// Human-readable form with a leading ellipsis marking the infinite past.
    pub fn human(&self) -> String {
        format!("…{self}")
    }
}

impl fmt::Display for DualWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_symbols(f, &self.0)
    }
}

impl FromStr for DualWord {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(DualWord(parse_symbols(s)?))
    }
}

impl TryFrom<String> for DualWord {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DualWord> for String {
    fn from(w: DualWord) -> String {
        w.to_string()
    }
}

/// Finite window (y, x) around the boundary point of a bi-infinite sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiWindow {
    pub past: DualWord,
    pub future: Word,
}

impl BiWindow {
    pub fn new(past: DualWord, future: Word) -> Self {
        BiWindow { past, future }
    }

    pub fn shift(&self) -> Result<BiWindow> {
        let (&first, rest) = self.future.symbols().split_first().ok_or(Error::EmptyFuture)?;
        Ok(BiWindow { past: self.past.push(first), future: Word(rest.to_vec()) })
    }

    pub fn shift_n(&self, n: usize) -> Result<BiWindow> {
        if n > self.future.len() {
            return Err(Error::EmptyFuture);
        }
        Ok(BiWindow {
            past: self.past.extend(&self.future.prefix(n)),
            future: self.future.suffix_from(n),
        })
    }
}

/// Result of comparing two finite dual words in the β-metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BetaDistance {
    /// The words differ inside the available symbols; the value is exact.
    Exact(f64),
    /// All comparable symbols agree. The true distance lies in `[0, upper]`;
    /// `upper` is 0 when both words are exhausted together.
    AgreeToDepth { upper: f64 },
}

impl BetaDistance {
    pub fn upper(&self) -> f64 {
        match *self {
            BetaDistance::Exact(v) => v,
            BetaDistance::AgreeToDepth { upper } => upper,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, BetaDistance::Exact(_))
    }
}

/// Length of the longest common suffix.
pub fn common_suffix_len(y: &DualWord, w: &DualWord) -> usize {
    y.symbols().iter().rev().zip(w.symbols().iter().rev()).take_while(|(a, b)| a == b).count()
}

pub fn beta_metric(y: &DualWord, w: &DualWord, beta: f64) -> Result<BetaDistance> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Parameter(format!("beta = {beta} must lie in (0,1)")));
    }
    let n = common_suffix_len(y, w);
    let shorter = y.len().min(w.len());
    Ok(if n < shorter {
        BetaDistance::Exact(beta.powi(n as i32))
    } else if y.len() == w.len() {
        BetaDistance::AgreeToDepth { upper: 0.0 }
    } else {
        BetaDistance::AgreeToDepth { upper: beta.powi(shorter as i32) }
    })
}

pub fn check_depth(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::DepthCap { requested: n, cap })
    } else {
        Ok(())
    }
}

/// All 2^n words of length n in lexicographic order.
pub fn enumerate_cylinders(n: usize, cap: usize) -> Result<Vec<Word>> {
    check_depth(n, cap)?;
    Ok((0..1usize << n).map(|i| Word::from_index(i, n)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dual(s: &str) -> DualWord {
        s.parse().unwrap()
    }

    #[test]
    fn shift_examples() {
        let w = BiWindow::new(dual("0"), "10".parse().unwrap());
        let s = w.shift().unwrap();
        assert_eq!(s.past, dual("01"));
        assert_eq!(s.future.to_string(), "0");
        let w = BiWindow::new(DualWord::empty(), "1".parse().unwrap());
        let s = w.shift().unwrap();
        assert_eq!(s.past, dual("1"));
        assert!(s.future.is_empty());
        assert!(matches!(s.shift(), Err(Error::EmptyFuture)));
    }

    #[test]
    fn beta_metric_examples() {
        let d = beta_metric(&dual("011"), &dual("111"), 1.0 / 3.0).unwrap();
        assert_eq!(d, BetaDistance::Exact(1.0 / 9.0));
        let d = beta_metric(&dual("01101"), &dual("01101"), 0.5).unwrap();
        assert_eq!(d, BetaDistance::AgreeToDepth { upper: 0.0 });
        let d = beta_metric(&dual("0"), &dual("1"), 0.4333).unwrap();
        assert_eq!(d, BetaDistance::Exact(1.0));
        let d = beta_metric(&dual("11"), &dual("011"), 0.5).unwrap();
        assert_eq!(d, BetaDistance::AgreeToDepth { upper: 0.25 });
        assert!(beta_metric(&dual("0"), &dual("1"), 1.0).is_err());
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_cylinders(0, 26).unwrap(), vec![Word::empty()]);
        let one: Vec<String> = enumerate_cylinders(1, 26).unwrap().iter().map(|w| w.to_string()).collect();
        assert_eq!(one, ["0", "1"]);
        let three = enumerate_cylinders(3, 26).unwrap();
        assert_eq!(three.len(), 8);
        assert_eq!(three[0].to_string(), "000");
        assert_eq!(three[7].to_string(), "111");
        assert!(matches!(enumerate_cylinders(27, 26), Err(Error::DepthCap { .. })));
    }

    #[test]
    fn parsing_and_padding() {
        assert!("012".parse::<Word>().is_err());
        assert_eq!(dual("…101").to_string(), "101");
        assert_eq!(dual("101").human(), "…101");
        assert_eq!(dual("11").padded(4).to_string(), "0011");
        assert_eq!(dual("0110").suffix(2).to_string(), "10");
        assert_eq!(Word::from_index(5, 4).to_string(), "0101");
        assert_eq!("0101".parse::<Word>().unwrap().index(), 5);
    }

    fn dual_strategy(len: usize) -> impl Strategy<Value = DualWord> {
        proptest::collection::vec(0u8..2, len).prop_map(|v| DualWord::new(v).unwrap())
    }

    proptest! {
        #[test]
        fn beta_metric_symmetric_ultrametric(
            y in dual_strategy(12), z in dual_strategy(12), w in dual_strategy(12), beta in 0.05f64..0.95
        ) {
            let d = |a: &DualWord, b: &DualWord| beta_metric(a, b, beta).unwrap().upper();
            prop_assert_eq!(d(&y, &w), d(&w, &y));
            prop_assert!(d(&y, &w) <= d(&y, &z).max(d(&z, &w)));
        }

        #[test]
        fn shift_n_appends_future(
            past in proptest::collection::vec(0u8..2, 0..10),
            future in proptest::collection::vec(0u8..2, 0..12),
            n in 0usize..12,
        ) {
            let win = BiWindow::new(DualWord::new(past).unwrap(), Word::new(future).unwrap());
            prop_assume!(n <= win.future.len());
            let mut stepped = win.clone();
            for _ in 0..n {
                stepped = stepped.shift().unwrap();
            }
            prop_assert_eq!(&stepped, &win.shift_n(n).unwrap());
            prop_assert_eq!(stepped.past, win.past.extend(&win.future.prefix(n)));
        }

        #[test]
        fn cylinders_distinct(n in 0usize..12) {
            let words = enumerate_cylinders(n, 26).unwrap();
            let set: std::collections::HashSet<_> = words.iter().collect();
            prop_assert_eq!(set.len(), 1usize << n);
            prop_assert!(words.windows(2).all(|p| p[0] < p[1]));
        }
    }
}
