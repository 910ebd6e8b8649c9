//! Feynman-diagram combinatorics: perfect matchings of a linearly ordered
//! set, restricted crossing numbers, Catalan sign sequences, and the three
//! diagrammatic evaluation routes (crossing-weighted pairing sum, partial
//! expectations over compatible diagrams, and the pair-removal recursion).
//! These are the independent oracles against the rewriting engine.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{ModelSpec, MomentQuery};
use crate::exactmath::{QPoly, QRational};

/// Enumeration refuses ground sets beyond this size unless a caller raises
/// the limit explicitly; 16 points already mean 2,027,025 diagrams.
pub const DEFAULT_GROUND_LIMIT: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiagramError {
    #[error("ground size {0} is odd; complete diagrams need an even size")]
    OddGroundSize(usize),
    #[error("ground size {size} exceeds the enumeration limit {limit}")]
    SizeLimitExceeded { size: usize, limit: usize },
    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),
    #[error("sign sequence has odd length {0}")]
    OddLength(usize),
    #[error("sign sequence entries must be +1 or -1")]
    InvalidSign,
    #[error("annihilator count {m} outside 0..={max}")]
    AnnihilatorCountOutOfRange { m: usize, max: usize },
    #[error("the diagrammatic formulas need zero means and zero preservation commutators")]
    ModelNotCentered,
    #[error("coordinate index {index} outside 1..={d}")]
    IndexOutOfRange { index: usize, d: usize },
}

/// A complete Feynman diagram: a perfect matching of `{1, ..., 2n}` stored
/// as `(opener, closer)` pairs with `opener < closer`, sorted by opener.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FeynmanDiagram {
    pairs: Vec<(usize, usize)>,
}

impl FeynmanDiagram {
    /// Validates and canonicalizes a set of pairs into a diagram.
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self, DiagramError> {
        let mut pairs: Vec<(usize, usize)> = pairs
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        pairs.sort_unstable();
        let n2 = 2 * pairs.len();
        let mut seen = vec![false; n2 + 1];
        for &(a, b) in &pairs {
            if a == b {
                return Err(DiagramError::InvalidDiagram(format!(
                    "element {a} paired with itself"
                )));
            }
            for x in [a, b] {
                if x == 0 || x > n2 {
                    return Err(DiagramError::InvalidDiagram(format!(
                        "element {x} outside 1..={n2}"
                    )));
                }
                if seen[x] {
                    return Err(DiagramError::InvalidDiagram(format!(
                        "element {x} appears twice"
                    )));
                }
                seen[x] = true;
            }
        }
        Ok(FeynmanDiagram { pairs })
    }

    /// Fast path for the enumerator, which produces canonical pairs already.
    fn from_canonical(pairs: Vec<(usize, usize)>) -> Self {
        FeynmanDiagram { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn ground_size(&self) -> usize {
        2 * self.pairs.len()
    }

    /// Number of left crossings for the pair `(i, j)`: pairs `(k, l)` of the
    /// diagram with `k < i < l < j`.
    pub fn left_crossings(&self, (i, j): (usize, usize)) -> usize {
        self.pairs
            .iter()
            .filter(|&&(k, l)| k < i && i < l && l < j)
            .count()
    }

    /// The restricted crossing number: total left crossings over all pairs.
    pub fn crossing_number(&self) -> usize {
        self.pairs.iter().map(|&p| self.left_crossings(p)).sum()
    }

    /// The sign sequence the diagram induces on its ground set: openers
    /// become `-1`, closers `+1`.
    pub fn induced_signs(&self) -> CatalanSeq {
        let mut signs = vec![Sign::Plus; self.ground_size()];
        for &(opener, _) in &self.pairs {
            signs[opener - 1] = Sign::Minus;
        }
        CatalanSeq::new(signs)
    }

    /// True when positions `1..=m` are all openers.
    pub fn opens_first(&self, m: usize) -> bool {
        self.pairs.iter().all(|&(_, closer)| closer > m)
    }
}

impl fmt::Display for FeynmanDiagram {
    /// Renders e.g. `(1,3)(2,7)(4,8)(5,6)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &(a, b) in &self.pairs {
            write!(f, "({a},{b})")?;
        }
        Ok(())
    }
}

impl FromStr for FeynmanDiagram {
    type Err = DiagramError;

    fn from_str(s: &str) -> Result<Self, DiagramError> {
        let t = s.trim();
        let bad = |msg: &str| DiagramError::InvalidDiagram(format!("`{s}`: {msg}"));
        let mut pairs = Vec::new();
        let mut rest = t;
        while !rest.is_empty() {
            let inner = rest.strip_prefix('(').ok_or_else(|| bad("expected ("))?;
            let close = inner.find(')').ok_or_else(|| bad("missing )"))?;
            let (a, b) = inner[..close]
                .split_once(',')
                .ok_or_else(|| bad("expected two comma-separated elements"))?;
            let a: usize = a.trim().parse().map_err(|_| bad("bad element"))?;
            let b: usize = b.trim().parse().map_err(|_| bad("bad element"))?;
            pairs.push((a, b));
            rest = inner[close + 1..].trim_start();
        }
        if pairs.is_empty() {
            return Err(bad("no pairs"));
        }
        FeynmanDiagram::new(pairs)
    }
}

/// Streams every complete diagram on `{1, ..., ground_size}` in the
/// deterministic order "pair the smallest free element with each larger free
/// element in turn".
pub fn enumerate_pairings(ground_size: usize) -> Result<PairingIter, DiagramError> {
    enumerate_pairings_with_limit(ground_size, DEFAULT_GROUND_LIMIT)
}

pub fn enumerate_pairings_with_limit(
    ground_size: usize,
    limit: usize,
) -> Result<PairingIter, DiagramError> {
    if !ground_size.is_multiple_of(2) {
        return Err(DiagramError::OddGroundSize(ground_size));
    }
    if ground_size > limit {
        return Err(DiagramError::SizeLimitExceeded {
            size: ground_size,
            limit,
        });
    }
    Ok(PairingIter::over((1..=ground_size).collect()))
}

/// Splits the enumeration of `{1, ..., ground_size}` into one independent
/// stream per choice of the partner of element 1; their concatenation in
/// order equals [`enumerate_pairings`]. This is the unit of parallelism for
/// diagram folds.
pub fn enumerate_pairings_split(
    ground_size: usize,
    limit: usize,
) -> Result<Vec<PairingIter>, DiagramError> {
    if !ground_size.is_multiple_of(2) {
        return Err(DiagramError::OddGroundSize(ground_size));
    }
    if ground_size > limit {
        return Err(DiagramError::SizeLimitExceeded {
            size: ground_size,
            limit,
        });
    }
    if ground_size == 0 {
        return Ok(vec![PairingIter::over(Vec::new())]);
    }
    Ok((2..=ground_size)
        .map(|partner| {
            let free: Vec<usize> = (2..=ground_size).filter(|&x| x != partner).collect();
            PairingIter::with_first_pair((1, partner), free)
        })
        .collect())
}

struct Frame {
    free: Vec<usize>,
    next: usize,
}

/// Depth-first enumeration of perfect matchings with an explicit stack, so
/// even the two-million-diagram ground sets stream in constant memory.
pub struct PairingIter {
    frames: Vec<Frame>,
    pairs: Vec<(usize, usize)>,
    done: bool,
}

impl PairingIter {
    fn over(free: Vec<usize>) -> Self {
        PairingIter {
            frames: vec![Frame { free, next: 1 }],
            pairs: Vec::new(),
            done: false,
        }
    }

    fn with_first_pair(first: (usize, usize), free: Vec<usize>) -> Self {
        PairingIter {
            frames: vec![Frame { free, next: 1 }],
            pairs: vec![first],
            done: false,
        }
    }
}

impl Iterator for PairingIter {
    type Item = FeynmanDiagram;

    fn next(&mut self) -> Option<FeynmanDiagram> {
        if self.done {
            return None;
        }
        loop {
            let Some(top) = self.frames.last_mut() else {
                self.done = true;
                return None;
            };
            if top.free.is_empty() {
                let diagram = FeynmanDiagram::from_canonical(self.pairs.clone());
                self.frames.pop();
                self.pairs.pop();
                return Some(diagram);
            }
            if top.next >= top.free.len() {
                self.frames.pop();
                self.pairs.pop();
                continue;
            }
            let opener = top.free[0];
            let closer = top.free[top.next];
            let mut free = Vec::with_capacity(top.free.len() - 2);
            free.extend(
                top.free
                    .iter()
                    .enumerate()
                    .filter(|&(pos, _)| pos != 0 && pos != top.next)
                    .map(|(_, &x)| x),
            );
            top.next += 1;
            self.pairs.push((opener, closer));
            self.frames.push(Frame { free, next: 1 });
        }
    }
}

/// `(2n-1)!! = (ground_size - 1)!!`, the number of complete diagrams.
pub fn pairing_count(ground_size: usize) -> u128 {
    let mut count: u128 = 1;
    let mut k = ground_size.saturating_sub(1);
    while k > 1 {
        count *= k as u128;
        k -= 2;
    }
    count
}

/// The n-th Catalan number, the count of noncrossing diagrams on 2n points.
pub fn catalan_number(n: usize) -> u128 {
    let mut c: u128 = 1;
    for k in 0..n {
        c = c * 2 * (2 * k as u128 + 1) / (k as u128 + 2);
    }
    c
}

/// A sign in `{-1, +1}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Minus => -1,
            Sign::Plus => 1,
        }
    }
}

/// A candidate Catalan sequence: a word over `{-1, +1}`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CatalanSeq {
    signs: Vec<Sign>,
}

impl CatalanSeq {
    pub fn new(signs: Vec<Sign>) -> Self {
        CatalanSeq { signs }
    }

    pub fn from_values(values: &[i64]) -> Result<Self, DiagramError> {
        let signs = values
            .iter()
            .map(|&v| match v {
                -1 => Ok(Sign::Minus),
                1 => Ok(Sign::Plus),
                _ => Err(DiagramError::InvalidSign),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CatalanSeq { signs })
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    /// The right-to-left partial sums `tau_k = sum_{j=k}^{2n} eps(j)`,
    /// indexed so that `taus()[k-1] = tau_k`.
    pub fn taus(&self) -> Vec<i64> {
        let mut taus = vec![0i64; self.signs.len()];
        let mut acc = 0i64;
        for (k, s) in self.signs.iter().enumerate().rev() {
            acc += s.value();
            taus[k] = acc;
        }
        taus
    }

    /// The Catalan-sequence test, taken literally: with `tau_k` the
    /// right-to-left partial sums, require `tau_{2n} > 0`, `tau_k >= 0` for
    /// `2 <= k <= 2n-1`, and `tau_1 = 0`. Odd lengths are an error; the
    /// empty sequence counts as Catalan (it is the sign pattern of the empty
    /// word, whose expectation is 1).
    pub fn is_catalan(&self) -> Result<bool, DiagramError> {
        let n2 = self.signs.len();
        if !n2.is_multiple_of(2) {
            return Err(DiagramError::OddLength(n2));
        }
        if n2 == 0 {
            return Ok(true);
        }
        let taus = self.taus();
        Ok(taus[n2 - 1] > 0 && taus[1..n2 - 1].iter().all(|&t| t >= 0) && taus[0] == 0)
    }
}

impl fmt::Display for CatalanSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .signs
            .iter()
            .map(|s| {
                if s.value() > 0 {
                    "+1".into()
                } else {
                    "-1".to_string()
                }
            })
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Streams the diagrams on `{1, ..., ground_size}` whose induced sign
/// sequence starts with `m` openers (minus signs).
pub fn compatible_diagrams(
    ground_size: usize,
    m: usize,
) -> Result<impl Iterator<Item = FeynmanDiagram>, DiagramError> {
    if m > ground_size / 2 {
        return Err(DiagramError::AnnihilatorCountOutOfRange {
            m,
            max: ground_size / 2,
        });
    }
    let iter = enumerate_pairings(ground_size)?;
    Ok(iter.filter(move |d| d.opens_first(m)))
}

fn require_gaussian_form(spec: &ModelSpec) -> Result<(), DiagramError> {
    if !spec.is_gaussian_form() {
        return Err(DiagramError::ModelNotCentered);
    }
    Ok(())
}

fn validate_query(spec: &ModelSpec, query: &MomentQuery) -> Result<(), DiagramError> {
    for &i in query.indices() {
        if i == 0 || i > spec.dim() {
            return Err(DiagramError::IndexOutOfRange {
                index: i,
                d: spec.dim(),
            });
        }
    }
    Ok(())
}

/// Folds `q^{crossing} * product-of-covariances` over a diagram stream.
/// Coefficients are accumulated per crossing number, which keeps the fold
/// associative and order-independent.
fn wick_fold(
    spec: &ModelSpec,
    query: &MomentQuery,
    diagrams: impl Iterator<Item = FeynmanDiagram>,
) -> QPoly {
    let mut by_crossing: Vec<QRational> = Vec::new();
    for diagram in diagrams {
        let crossing = diagram.crossing_number();
        let mut weight = QRational::one();
        for &(opener, closer) in diagram.pairs() {
            if weight.is_zero() {
                break;
            }
            weight *= spec.cov(query.index_at(opener), query.index_at(closer));
        }
        if weight.is_zero() {
            continue;
        }
        if by_crossing.len() <= crossing {
            by_crossing.resize(crossing + 1, QRational::zero());
        }
        by_crossing[crossing] += &weight;
    }
    QPoly::from_coeffs(by_crossing)
}

/// The crossing-weighted pairing sum: for an even word the exact sum of
/// `q^{c(diagram)}` times the product of covariances along the pairs, over
/// every complete diagram; odd words give the zero polynomial.
///
/// Requires a model in Gaussian form (zero means, zero preservation
/// commutators). Evaluating the result at `q = 0` keeps only the constant
/// term, i.e. exactly the noncrossing diagrams, which realizes the
/// `0^0 = 1, 0^c = 0` convention of the semicircular specialization
/// without any special casing.
pub fn q_wick_moment(spec: &ModelSpec, query: &MomentQuery) -> Result<QPoly, DiagramError> {
    q_wick_moment_with_limit(spec, query, DEFAULT_GROUND_LIMIT)
}

pub fn q_wick_moment_with_limit(
    spec: &ModelSpec,
    query: &MomentQuery,
    limit: usize,
) -> Result<QPoly, DiagramError> {
    require_gaussian_form(spec)?;
    validate_query(spec, query)?;
    let k = query.len();
    if !k.is_multiple_of(2) {
        return Ok(QPoly::zero());
    }
    Ok(wick_fold(
        spec,
        query,
        enumerate_pairings_with_limit(k, limit)?,
    ))
}

/// Parallel variant of [`q_wick_moment`]: the diagram stream is split on the
/// first pair and folded on the current rayon pool. Exact arithmetic makes
/// the reduction order irrelevant, so results are identical to the
/// sequential fold.
pub fn q_wick_moment_parallel(
    spec: &ModelSpec,
    query: &MomentQuery,
    limit: usize,
) -> Result<QPoly, DiagramError> {
    require_gaussian_form(spec)?;
    validate_query(spec, query)?;
    let k = query.len();
    if !k.is_multiple_of(2) {
        return Ok(QPoly::zero());
    }
    let streams = enumerate_pairings_split(k, limit)?;
    Ok(streams
        .into_par_iter()
        .map(|stream| wick_fold(spec, query, stream))
        .reduce(QPoly::zero, |a, b| &a + &b))
}

/// The mixed annihilator/variable expectation
/// `< a-(sigma_1) ... a-(sigma_m) X(sigma_{m+1}) ... X(sigma_{2n}) >`
/// evaluated diagrammatically: the crossing-weighted sum restricted to
/// diagrams whose first `m` positions are openers.
pub fn partial_expectation(
    spec: &ModelSpec,
    m: usize,
    query: &MomentQuery,
) -> Result<QPoly, DiagramError> {
    require_gaussian_form(spec)?;
    validate_query(spec, query)?;
    let k = query.len();
    if !k.is_multiple_of(2) {
        return Err(DiagramError::OddGroundSize(k));
    }
    if m == 0 || m > k / 2 {
        return Err(DiagramError::AnnihilatorCountOutOfRange { m, max: k / 2 });
    }
    Ok(wick_fold(spec, query, compatible_diagrams(k, m)?))
}

/// The pair-removal recursion: evaluates the same mixed expectations by
/// repeatedly contracting the leftmost surviving annihilator block, a third
/// route independent of both the rewriting engine and the diagram sum.
///
/// `< k_1^- ... k_m^- k_{m+1} ... k_{2n} >` equals
/// `sum_{l=m+1}^{n+1} sum_{j=1}^{l-1} q^{l-1-j} c(sigma(k_j), sigma(k_l))
///  < ... with k_j and k_l removed and the annihilator prefix grown to l-2 >`,
/// with odd ground sets vanishing and the empty set giving 1.
pub fn scalar_recursion_moment(
    spec: &ModelSpec,
    query: &MomentQuery,
) -> Result<QPoly, DiagramError> {
    scalar_recursion_with_limit(spec, query, DEFAULT_GROUND_LIMIT)
}

pub fn scalar_recursion_with_limit(
    spec: &ModelSpec,
    query: &MomentQuery,
    limit: usize,
) -> Result<QPoly, DiagramError> {
    require_gaussian_form(spec)?;
    validate_query(spec, query)?;
    let k = query.len();
    // Positions live in a u64 bitmask, so 64 is a hard ceiling.
    if k > limit.min(64) {
        return Err(DiagramError::SizeLimitExceeded {
            size: k,
            limit: limit.min(64),
        });
    }
    if !k.is_multiple_of(2) {
        return Ok(QPoly::zero());
    }
    let full: u64 = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    let mut memo: HashMap<(u64, usize), QPoly> = HashMap::new();
    Ok(recursion_value(spec, query, full, 1, &mut memo))
}

/// `mask` holds the surviving positions (bit p-1 for position p of the
/// query); `m` is the length of the annihilator prefix among the survivors.
fn recursion_value(
    spec: &ModelSpec,
    query: &MomentQuery,
    mask: u64,
    m: usize,
    memo: &mut HashMap<(u64, usize), QPoly>,
) -> QPoly {
    let size = mask.count_ones() as usize;
    if size == 0 {
        return QPoly::one();
    }
    if !size.is_multiple_of(2) {
        return QPoly::zero();
    }
    // With zero means a leading variable contributes only through its
    // annihilator part, so a vanished prefix regrows to length one.
    let m = m.max(1);
    if let Some(v) = memo.get(&(mask, m)) {
        return v.clone();
    }
    let positions: Vec<usize> = (0..64)
        .filter(|&b| mask & (1u64 << b) != 0)
        .map(|b| b + 1)
        .collect();
    let n = size / 2;
    let mut total = QPoly::zero();
    for l in (m + 1)..=(n + 1) {
        for j in 1..=(l - 1) {
            let c = spec.cov(
                query.index_at(positions[j - 1]),
                query.index_at(positions[l - 1]),
            );
            if c.is_zero() {
                continue;
            }
            let sub_mask =
                mask & !(1u64 << (positions[j - 1] - 1)) & !(1u64 << (positions[l - 1] - 1));
            let sub = recursion_value(spec, query, sub_mask, l - 2, memo);
            if sub.is_zero() {
                continue;
            }
            total += &sub.scale(c).shift(l - 1 - j);
        }
    }
    memo.insert((mask, m), total.clone());
    total
}
