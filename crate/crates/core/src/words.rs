//! The symbolic alphabet: one parameter interval around each strict central
//! configuration, the non-antipodality relation between intervals, admissible
//! words, the word metric and reflection symmetry of words.
//!
//! Symbols are 1-based: symbol `i` refers to `intervals[i - 1]`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BoundaryCurve, CentralConfiguration, ConfigKind, ParamInterval};

pub const DEFAULT_HALF_WIDTH: f64 = 0.05;
const MAX_HALVINGS: usize = 10;
/// Dilation factor of the window on which star-convexity is checked.
const LSC_DILATION: f64 = 1.5;
const LSC_SAMPLES: usize = 9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WordsError {
    #[error("inadmissible domain: {0}")]
    InadmissibleDomain(String),
    #[error("cannot parse word {0:?}")]
    Parse(String),
    #[error("symbol {symbol} is outside the alphabet 1..={alphabet}")]
    UnknownSymbol { symbol: usize, alphabet: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSystem {
    pub intervals: Vec<ParamInterval>,
    /// Central configuration inside each interval.
    pub centers: Vec<f64>,
    pub kinds: Vec<ConfigKind>,
    /// `na[i - 1]` lists the symbols allowed after symbol `i`, sorted.
    pub na: Vec<Vec<usize>>,
    pub half_width: f64,
}

impl IntervalSystem {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn interval(&self, symbol: usize) -> &ParamInterval {
        &self.intervals[symbol - 1]
    }

    pub fn center(&self, symbol: usize) -> f64 {
        self.centers[symbol - 1]
    }

    pub fn na(&self, symbol: usize) -> &[usize] {
        &self.na[symbol - 1]
    }

    pub fn allows(&self, from: usize, to: usize) -> bool {
        self.na(from).contains(&to)
    }

    /// Symbol whose interval contains `xi` (modulo `L`), if any.
    pub fn symbol_of(&self, curve: &BoundaryCurve, xi: f64) -> Option<usize> {
        self.intervals.iter().position(|iv| {
            let d = curve.param_diff(iv.center(), xi);
            d.abs() <= 0.5 * iv.width() + 1e-12 * curve.length()
        })
        .map(|k| k + 1)
    }

    pub fn check_symbol(&self, symbol: usize) -> Result<(), WordsError> {
        if symbol == 0 || symbol > self.len() {
            return Err(WordsError::UnknownSymbol { symbol, alphabet: self.len() });
        }
        Ok(())
    }

    /// All admissible periodic words of exactly length `n` (every rotation
    /// listed separately).
    pub fn periodic_words(&self, n: usize) -> Vec<Word> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(n);
        self.extend_words(n, &mut cur, &mut out);
        out
    }

    fn extend_words(&self, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Word>) {
        if cur.len() == n {
            let w = Word::periodic(cur.clone());
            if w.is_admissible(self) {
                out.push(w);
            }
            return;
        }
        for s in 1..=self.len() {
            if cur.last().is_none_or(|&p| self.allows(p, s)) {
                cur.push(s);
                self.extend_words(n, cur, out);
                cur.pop();
            }
        }
    }
}

fn try_build(curve: &BoundaryCurve, strict: &[&CentralConfiguration], w: f64) -> Result<IntervalSystem, String> {
    let l = curve.length();
    let m = strict.len();
    let intervals: Vec<ParamInterval> = strict.iter().map(|c| ParamInterval::around(c.xi_bar, w)).collect();
    for k in 0..m {
        let next = strict[(k + 1) % m].xi_bar;
        let gap = (next - strict[k].xi_bar).rem_euclid(l);
        if m > 1 && gap <= 2.0 * w {
            return Err(format!("intervals {} and {} overlap", k + 1, (k + 1) % m + 1));
        }
    }
    for (k, c) in strict.iter().enumerate() {
        let dil = ParamInterval::around(c.xi_bar, LSC_DILATION * w);
        if !dil.samples(LSC_SAMPLES).all(|xi| curve.is_lsc(xi)) {
            return Err(format!("interval {} is not star-convex", k + 1));
        }
        let r1 = (curve.radius_derivatives(intervals[k].lo)[1], curve.radius_derivatives(intervals[k].hi)[1]);
        if r1.0 * r1.1 >= 0.0 {
            return Err(format!("|gamma| has no change of monotonicity on interval {}", k + 1));
        }
    }
    let na: Vec<Vec<usize>> = (0..m)
        .map(|i| (0..m).filter(|&j| curve.intervals_not_antipodal(&intervals[i], &intervals[j])).map(|j| j + 1).collect())
        .collect();
    for (i, set) in na.iter().enumerate() {
        if !set.contains(&(i + 1)) {
            return Err(format!("interval {} is self-antipodal", i + 1));
        }
        if set.len() < 2 {
            return Err(format!("NA({}) has fewer than two symbols", i + 1));
        }
    }
    Ok(IntervalSystem {
        intervals,
        centers: strict.iter().map(|c| c.xi_bar).collect(),
        kinds: strict.iter().map(|c| c.kind).collect(),
        na,
        half_width: w,
    })
}

/// Build the alphabet from the strict central configurations of `curve`.
///
/// `half_width` is relative to the curve length; it is halved (at most ten
/// times) until the intervals are disjoint, star-convex on a dilation,
/// not self-antipodal and every `NA(i)` has at least two symbols.
pub fn build_interval_system(
    curve: &BoundaryCurve,
    ccs: &[CentralConfiguration],
    half_width: f64,
) -> Result<IntervalSystem, WordsError> {
    let strict: Vec<&CentralConfiguration> =
        ccs.iter().filter(|c| c.plateau.is_none() && c.kind != ConfigKind::Degenerate && c.lsc_ok).collect();
    if strict.len() < 2 {
        return Err(WordsError::InadmissibleDomain(format!(
            "{} strict central configuration(s), at least two are required",
            strict.len()
        )));
    }
    if strict.len() == 2 && curve.are_antipodal(strict[0].xi_bar, strict[1].xi_bar) {
        return Err(WordsError::InadmissibleDomain("the only two central configurations are antipodal".into()));
    }
    let mut w = half_width * curve.length();
    let mut last = String::new();
    for _ in 0..=MAX_HALVINGS {
        match try_build(curve, &strict, w) {
            Ok(sys) => return Ok(sys),
            Err(e) => last = e,
        }
        w *= 0.5;
    }
    Err(WordsError::InadmissibleDomain(last))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordKind {
    Finite,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    pub symbols: Vec<usize>,
    pub kind: WordKind,
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.symbols.iter().map(|s| s.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// Where a reflection axis of a word crosses it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "at")]
pub enum AxisPoint {
    /// Through the symbol at this position.
    Element { index: usize },
    /// Between positions `index` and `index + 1` (cyclically for periodic
    /// words).
    Gap { index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryAxis {
    pub points: Vec<AxisPoint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub symmetric: bool,
    pub axes: Vec<SymmetryAxis>,
}

impl Word {
    pub fn periodic(symbols: Vec<usize>) -> Self {
        Self { symbols, kind: WordKind::Periodic }
    }

    pub fn finite(symbols: Vec<usize>) -> Self {
        Self { symbols, kind: WordKind::Finite }
    }

    /// Parse a comma-separated list of symbols such as `1,2,2,1`.
    pub fn parse(text: &str, kind: WordKind) -> Result<Self, WordsError> {
        let trimmed = text.trim().trim_start_matches('(').trim_end_matches(')');
        let symbols: Result<Vec<usize>, _> = trimmed.split(',').map(|s| s.trim().parse::<usize>()).collect();
        match symbols {
            Ok(s) if !s.is_empty() && s.iter().all(|&x| x > 0) => Ok(Self { symbols: s, kind }),
            _ => Err(WordsError::Parse(text.to_string())),
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Consecutive symbols are non-antipodal (cyclically for periodic words).
    pub fn is_admissible(&self, system: &IntervalSystem) -> bool {
        if self.symbols.is_empty() || self.symbols.iter().any(|&s| system.check_symbol(s).is_err()) {
            return false;
        }
        let n = self.len();
        let pairs = match self.kind {
            WordKind::Periodic => n,
            WordKind::Finite => n - 1,
        };
        (0..pairs).all(|k| system.allows(self.symbols[k], self.symbols[(k + 1) % n]))
    }

    pub fn rotated(&self, by: usize) -> Self {
        let mut s = self.symbols.clone();
        if !s.is_empty() {
            let k = by % s.len();
            s.rotate_left(k);
        }
        Self { symbols: s, kind: self.kind }
    }

    /// Reflection symmetry.
    ///
    /// Periodic words are tested for every cyclic reflection
    /// `k -> c - k (mod n)`; a finite word only for the palindrome axis.
    pub fn symmetry(&self) -> SymmetryReport {
        let n = self.len();
        let s = &self.symbols;
        let mut axes = Vec::new();
        match self.kind {
            WordKind::Periodic => {
                for c in 0..n {
                    if (0..n).all(|k| s[k] == s[(c + n - k) % n]) {
                        axes.push(SymmetryAxis { points: axis_points(c, n) });
                    }
                }
            }
            WordKind::Finite => {
                if (0..n).all(|k| s[k] == s[n - 1 - k]) && n > 0 {
                    let p = if n % 2 == 1 { AxisPoint::Element { index: n / 2 } } else { AxisPoint::Gap { index: n / 2 - 1 } };
                    axes.push(SymmetryAxis { points: vec![p] });
                }
            }
        }
        SymmetryReport { symmetric: !axes.is_empty(), axes }
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetry().symmetric
    }
}

/// Fixed positions of the reflection `k -> c - k` on a cycle of length `n`.
fn axis_points(c: usize, n: usize) -> Vec<AxisPoint> {
    let mut pts = Vec::new();
    // element fixed points: 2k = c (mod n); gap fixed points: 2k + 1 = c (mod n)
    for k in 0..n {
        if (2 * k) % n == c % n {
            pts.push(AxisPoint::Element { index: k });
        }
    }
    for k in 0..n {
        if (2 * k + 1) % n == c % n {
            pts.push(AxisPoint::Gap { index: k });
        }
    }
    pts
}

/// Finite window of a bi-infinite word; `symbols[offset]` has index 0. A
/// periodic window repeats its symbols in both directions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordWindow {
    pub symbols: Vec<usize>,
    pub offset: usize,
    pub periodic: bool,
}

impl WordWindow {
    pub fn finite(symbols: Vec<usize>, offset: usize) -> Self {
        Self { symbols, offset, periodic: false }
    }

    pub fn periodic(word: &Word) -> Self {
        Self { symbols: word.symbols.clone(), offset: 0, periodic: true }
    }

    pub fn symbol_at(&self, k: i64) -> Option<usize> {
        let n = self.symbols.len() as i64;
        let idx = k + self.offset as i64;
        if self.periodic && n > 0 {
            Some(self.symbols[idx.rem_euclid(n) as usize])
        } else if (0..n).contains(&idx) {
            Some(self.symbols[idx as usize])
        } else {
            None
        }
    }

    fn extent(&self) -> Option<(i64, i64)> {
        if self.periodic {
            None
        } else {
            Some((-(self.offset as i64), self.symbols.len() as i64 - 1 - self.offset as i64))
        }
    }
}

/// Two-sided enclosure of a word distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Terms beyond this index contribute less than `4^-40` each; periodic
/// windows are summed up to here.
const PERIODIC_HORIZON: i64 = 40;

/// `d = sum_k rho(l_k, m_k) / 4^|k|` with the discrete metric `rho`. Indices
/// not covered by both windows are bounded by their maximal contribution.
pub fn word_distance(a: &WordWindow, b: &WordWindow) -> DistanceBounds {
    let (lo, hi) = match (a.extent(), b.extent()) {
        (None, None) => (-PERIODIC_HORIZON, PERIODIC_HORIZON),
        (Some(e), None) | (None, Some(e)) => e,
        (Some(x), Some(y)) => (x.0.max(y.0), x.1.min(y.1)),
    };
    let mut seen = 0.0;
    let mut covered = 0.0;
    for k in lo..=hi {
        let weight = 0.25f64.powi(k.unsigned_abs() as i32);
        covered += weight;
        if a.symbol_at(k) != b.symbol_at(k) {
            seen += weight;
        }
    }
    // sum over all k of 4^-|k| is 5/3; unseen indices contribute at most
    // their weight
    let unseen = (5.0 / 3.0 - covered).max(0.0);
    DistanceBounds { lower: seen, upper: seen + unseen }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurveSpec;

    fn ellipse_system(a: f64, b: f64) -> IntervalSystem {
        let c = BoundaryCurve::new(CurveSpec::ellipse(a, b)).unwrap();
        build_interval_system(&c, &c.find_central_configurations(), DEFAULT_HALF_WIDTH).unwrap()
    }

    #[test]
    fn ellipse_na_excludes_opposite_vertices() {
        let s = ellipse_system(2.0, 1.0);
        assert_eq!(s.len(), 4);
        assert_eq!(s.na, vec![vec![1, 2, 4], vec![1, 2, 3], vec![2, 3, 4], vec![1, 3, 4]]);
    }

    #[test]
    fn focused_ellipse_is_inadmissible() {
        let c = BoundaryCurve::new(CurveSpec::focused_ellipse(1.5, 1.0)).unwrap();
        let ccs = c.find_central_configurations();
        assert_eq!(ccs.len(), 2);
        assert!(matches!(build_interval_system(&c, &ccs, DEFAULT_HALF_WIDTH), Err(WordsError::InadmissibleDomain(_))));
    }

    #[test]
    fn circle_is_inadmissible() {
        let c = BoundaryCurve::new(CurveSpec::circle(1.0)).unwrap();
        assert!(build_interval_system(&c, &c.find_central_configurations(), DEFAULT_HALF_WIDTH).is_err());
    }

    #[test]
    fn three_lobes() {
        // centred: the six critical directions come in three antipodal pairs
        let c = BoundaryCurve::new(CurveSpec::polar_fourier(1.0, vec![0.0, 0.0, 0.2], vec![])).unwrap();
        let ccs = c.find_central_configurations();
        assert_eq!(ccs.len(), 6);
        for (k, cc) in ccs.iter().enumerate() {
            let expected = if k % 2 == 0 { ConfigKind::StrictMax } else { ConfigKind::StrictMin };
            assert_eq!(cc.kind, expected);
        }
        let s = build_interval_system(&c, &ccs, DEFAULT_HALF_WIDTH).unwrap();
        for i in 1..=6 {
            let opposite = (i + 2) % 6 + 1;
            assert!(!s.allows(i, opposite));
            assert_eq!(s.na(i).len(), 5);
        }
        // a sixth harmonic tilts maxima and minima apart so that no pair of
        // narrow intervals is antipodal
        let spec = CurveSpec::polar_fourier(1.0, vec![0.0, 0.0, 0.2], vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.08]);
        let c = BoundaryCurve::new(spec).unwrap();
        let ccs = c.find_central_configurations();
        assert_eq!(ccs.len(), 6);
        let s = build_interval_system(&c, &ccs, 0.02).unwrap();
        for i in 1..=6 {
            assert_eq!(s.na(i), &[1, 2, 3, 4, 5, 6]);
        }
    }

    #[test]
    fn admissibility() {
        let s = ellipse_system(2.0, 1.0);
        assert!(Word::periodic(vec![1, 2, 1, 2]).is_admissible(&s));
        assert!(!Word::periodic(vec![1, 3]).is_admissible(&s));
        assert!(Word::periodic(vec![1, 1]).is_admissible(&s));
        assert!(!Word::periodic(vec![1, 5]).is_admissible(&s));
        assert!(!Word::finite(vec![2, 4]).is_admissible(&s));
        let total: usize = (1..=4).map(|n| s.periodic_words(n).len()).sum();
        assert_eq!(total, 4 + 12 + 28 + 84);
    }

    #[test]
    fn distance_examples() {
        let w = |v: Vec<usize>| WordWindow::finite(v, 2);
        assert_eq!(word_distance(&w(vec![1, 2, 1, 2, 1]), &w(vec![1, 2, 1, 2, 1])).lower, 0.0);
        assert_eq!(word_distance(&w(vec![1, 2, 1, 2, 1]), &w(vec![1, 2, 3, 2, 1])).lower, 1.0);
        assert_eq!(word_distance(&w(vec![1, 2, 1, 2, 1]), &w(vec![1, 4, 1, 4, 1])).lower, 0.5);
        let d = word_distance(&w(vec![1, 2, 1, 2, 1]), &w(vec![1, 2, 1, 2, 1]));
        assert!((d.upper - 2.0 * (1.0 / 3.0) / 16.0).abs() < 1e-15);
    }

    #[test]
    fn symmetry_examples() {
        let r = Word::periodic(vec![1, 2, 2, 1]).symmetry();
        assert!(r.symmetric);
        assert!(r.axes.iter().any(|a| a.points.contains(&AxisPoint::Gap { index: 1 })));
        assert!(Word::periodic(vec![1]).is_symmetric());
        assert!(!Word::periodic(vec![1, 2, 3, 4]).is_symmetric());
        assert!(!Word::periodic(vec![1, 4, 3, 2]).is_symmetric());
        // reflection k -> 2 - k (mod 4) fixes elements 1 and 3
        let r = Word::periodic(vec![1, 2, 1, 4]).symmetry();
        assert_eq!(r.axes.len(), 1);
        assert_eq!(r.axes[0].points, vec![AxisPoint::Element { index: 1 }, AxisPoint::Element { index: 3 }]);
        assert!(Word::finite(vec![1, 2, 1]).is_symmetric());
        assert!(!Word::finite(vec![1, 2, 2]).is_symmetric());
    }

    #[test]
    fn parse_words() {
        assert_eq!(Word::parse("1,2, 3", WordKind::Periodic).unwrap().symbols, vec![1, 2, 3]);
        assert_eq!(Word::parse("(2,1)", WordKind::Finite).unwrap().symbols, vec![2, 1]);
        assert!(Word::parse("1,,2", WordKind::Finite).is_err());
        assert!(Word::parse("0,1", WordKind::Finite).is_err());
    }
}
