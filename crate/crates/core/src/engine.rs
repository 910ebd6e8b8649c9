//! The generic moment-evaluation engine.
//!
//! A vacuum expectation is reduced by three kinds of exact rewriting steps:
//! duality moves the leftmost preservation or creation symbol out of the
//! bracket, the q-product rule pushes the rightmost annihilator into the
//! annihilator-free tail to its right, and the resulting q-commutators are
//! resolved against the model's commutator tables. Every step lowers a
//! finite potential (word length plus variable count) when the
//! preservation-commutator table is zero, so evaluation terminates; for
//! user-supplied tables the recursion is guarded by a depth limit instead.

use std::collections::HashMap;

use thiserror::Error;

use crate::algebra::{
    annihilator_excess_is_zero, AlgebraError, ModelSpec, MomentQuery, OpExpr, OpKind, OpSymbol,
    OpWord,
};
use crate::exactmath::QPoly;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("the q-product rule needs a nonempty word to commute through")]
    EmptyProductRule,
    #[error("q-commutator resolution requires an annihilator on the left, got `{0}`")]
    NotAnnihilator(String),
    #[error(
        "evaluation exceeded the recursion guard of {max_depth}; \
         the preservation-commutator table does not appear to lower degree"
    )]
    DepthExceeded { max_depth: usize },
    #[error("model dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Evaluation knobs. `max_depth` defaults to ten times the word length,
/// which is far above the bound reachable with a zero
/// preservation-commutator table; it exists so that a table that fails to
/// lower degree produces an error instead of a hang.
#[derive(Clone, Debug)]
pub struct EvalConfig {
    pub max_depth: Option<usize>,
    pub prune_with_excess_rule: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            max_depth: None,
            prune_with_excess_rule: true,
        }
    }
}

/// One factor of a word over the extended alphabet produced by
/// [`q_product_rule`]: either a plain symbol or an unexpanded q-commutator
/// `[left; right]_q` kept as a single token.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MarkedFactor {
    Symbol(OpSymbol),
    QCommutator { left: OpSymbol, right: OpSymbol },
}

/// A coefficient times a word over the extended alphabet.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MarkedTerm {
    pub coeff: QPoly,
    pub factors: Vec<MarkedFactor>,
}

/// Expands `[y; u_1 ... u_n]_q` by the q-product rule:
///
/// ```text
/// [y; u_1...u_n]_q = sum_{i=0}^{n-1} q^i u_1..u_i [y; u_{i+1}]_q u_{i+2}..u_n
///                    + (q^n - q) u_1..u_n y
/// ```
///
/// The commutators stay unexpanded; [`resolve_commutator`] turns them into
/// concrete expressions. Terms with an identically zero coefficient (the
/// trailing one when `n = 1`) are dropped.
pub fn q_product_rule(y: OpSymbol, us: &OpWord) -> Result<Vec<MarkedTerm>, EngineError> {
    let symbols = us.symbols();
    let n = symbols.len();
    if n == 0 {
        return Err(EngineError::EmptyProductRule);
    }
    let mut terms = Vec::with_capacity(n + 1);
    for i in 0..n {
        let mut factors: Vec<MarkedFactor> = Vec::with_capacity(n);
        factors.extend(symbols[..i].iter().map(|&s| MarkedFactor::Symbol(s)));
        factors.push(MarkedFactor::QCommutator {
            left: y,
            right: symbols[i],
        });
        factors.extend(symbols[i + 1..].iter().map(|&s| MarkedFactor::Symbol(s)));
        terms.push(MarkedTerm {
            coeff: QPoly::monomial(crate::exactmath::QRational::one(), i),
            factors,
        });
    }
    let trailing = &QPoly::monomial(crate::exactmath::QRational::one(), n) - &QPoly::q();
    if !trailing.is_zero() {
        let mut factors: Vec<MarkedFactor> =
            symbols.iter().map(|&s| MarkedFactor::Symbol(s)).collect();
        factors.push(MarkedFactor::Symbol(y));
        terms.push(MarkedTerm {
            coeff: trailing,
            factors,
        });
    }
    Ok(terms)
}

/// Resolves `[a; b]_q` for an annihilator `a` against the model's tables:
///
/// * creation: the scalar `c(a, b)` times the identity,
/// * preservation: the table entry `[a-(i); a0(j)]_q` (zero by default),
/// * annihilation: the definition `a b - q * b a`,
/// * variable: the sum of the three cases above.
pub fn resolve_commutator(
    spec: &ModelSpec,
    a: OpSymbol,
    b: OpSymbol,
) -> Result<OpExpr, EngineError> {
    if a.kind != OpKind::Ann {
        return Err(EngineError::NotAnnihilator(a.to_string()));
    }
    spec.check_index(a.index)?;
    spec.check_index(b.index)?;
    let scalar_part = |j: usize| {
        OpExpr::from_term(
            OpWord::identity(),
            QPoly::constant(spec.cov(a.index, j).clone()),
        )
    };
    let ann_part = |j: usize| {
        let mut e = OpExpr::from_word(OpWord::new(vec![a, OpSymbol::ann(j)]));
        e.add_term(OpWord::new(vec![OpSymbol::ann(j), a]), -QPoly::q());
        e
    };
    Ok(match b.kind {
        OpKind::Cre => scalar_part(b.index),
        OpKind::Pres => spec.pres_comm(a.index, b.index).clone(),
        OpKind::Ann => ann_part(b.index),
        OpKind::Var => scalar_part(b.index)
            .add(spec.pres_comm(a.index, b.index))
            .add(&ann_part(b.index)),
    })
}

/// Grading bound: scanning from the right, creation and variable symbols
/// raise the reachable chaos level by at most one, preservation keeps it,
/// and an annihilator lowers it by one. Once the bound goes negative the
/// word kills the vacuum. Iterating the argument behind the excess rule,
/// this subsumes both the trailing-annihilator case and the
/// annihilator-prefix shapes.
fn grading_kills(symbols: &[OpSymbol]) -> bool {
    let mut level: i64 = 0;
    for s in symbols.iter().rev() {
        match s.kind {
            OpKind::Cre | OpKind::Var => level += 1,
            OpKind::Pres => {}
            OpKind::Ann => {
                level -= 1;
                if level < 0 {
                    return true;
                }
            }
        }
    }
    false
}

/// Words of at most 15 symbols with indices below 64 pack into a `u128`
/// memo key (4 length bits, then 8 bits per symbol); longer words, which
/// only arise from user preservation-commutator tables, fall back to a
/// map keyed by the word itself.
fn pack_word(symbols: &[OpSymbol]) -> Option<u128> {
    if symbols.len() > 15 {
        return None;
    }
    let mut key = symbols.len() as u128;
    for (pos, s) in symbols.iter().enumerate() {
        if s.index >= 64 {
            return None;
        }
        let byte = ((s.kind as u128) << 6) | s.index as u128;
        key |= byte << (4 + 8 * pos);
    }
    Some(key)
}

struct Evaluator<'a> {
    spec: &'a ModelSpec,
    prune: bool,
    max_depth: usize,
    memo: HashMap<u128, QPoly>,
    memo_wide: HashMap<OpWord, QPoly>,
}

impl<'a> Evaluator<'a> {
    fn vac(&mut self, symbols: &[OpSymbol], depth: usize) -> Result<QPoly, EngineError> {
        if symbols.is_empty() {
            return Ok(QPoly::one());
        }
        if depth > self.max_depth {
            return Err(EngineError::DepthExceeded {
                max_depth: self.max_depth,
            });
        }
        let key = pack_word(symbols);
        let cached = match key {
            Some(k) => self.memo.get(&k),
            None => self.memo_wide.get(&OpWord::new(symbols.to_vec())),
        };
        if let Some(v) = cached {
            return Ok(v.clone());
        }
        let result = self.vac_uncached(symbols, depth)?;
        match key {
            Some(k) => {
                self.memo.insert(k, result.clone());
            }
            None => {
                self.memo_wide
                    .insert(OpWord::new(symbols.to_vec()), result.clone());
            }
        }
        Ok(result)
    }

    fn vac_uncached(&mut self, symbols: &[OpSymbol], depth: usize) -> Result<QPoly, EngineError> {
        // A trailing annihilator kills the vacuum.
        if symbols.last().unwrap().kind == OpKind::Ann {
            return Ok(QPoly::zero());
        }
        // Duality: a leading creator pairs the vacuum against an annihilated
        // vacuum; a leading preservation symbol contributes its first moment.
        let head = symbols[0];
        match head.kind {
            OpKind::Cre => return Ok(QPoly::zero()),
            OpKind::Pres => {
                let mean = self.spec.mean(head.index).clone();
                if mean.is_zero() {
                    return Ok(QPoly::zero());
                }
                return Ok(self.vac(&symbols[1..], depth + 1)?.scale(&mean));
            }
            _ => {}
        }
        if self.prune {
            // The excess rule on annihilator-prefix shapes, then its
            // iterated grading form on everything else.
            let k = symbols.iter().take_while(|s| s.kind == OpKind::Ann).count();
            if k > 0 && symbols[k..].iter().all(|s| s.kind == OpKind::Var) {
                let word = OpWord::new(symbols.to_vec());
                if annihilator_excess_is_zero(&word)? {
                    return Ok(QPoly::zero());
                }
            }
            if grading_kills(symbols) {
                return Ok(QPoly::zero());
            }
        }
        if let Some(r) = symbols.iter().rposition(|s| s.kind == OpKind::Ann) {
            return self.push_annihilator(symbols, r, depth);
        }
        // No annihilators left and the head is a variable: split it into its
        // annihilator part plus the first-moment contribution.
        debug_assert_eq!(head.kind, OpKind::Var);
        let mut with_ann = symbols.to_vec();
        with_ann[0] = OpSymbol::ann(head.index);
        let split = self.vac(&with_ann, depth + 1)?;
        let mean = self.spec.mean(head.index).clone();
        if mean.is_zero() {
            return Ok(split);
        }
        let rest_value = self.vac(&symbols[1..], depth + 1)?;
        Ok(&split + &rest_value.scale(&mean))
    }

    /// Pushes the annihilator at position `r` through the annihilator-free
    /// tail to its right with the q-product rule, resolving each commutator
    /// against the model. The rule's trailing term ends in the pushed
    /// annihilator acting on the vacuum and is dropped.
    ///
    /// This is the same expansion [`q_product_rule`] + [`resolve_commutator`]
    /// produce, inlined: child words are assembled in place and the monomial
    /// weights `q^j` become shifts of the child polynomials.
    fn push_annihilator(
        &mut self,
        symbols: &[OpSymbol],
        r: usize,
        depth: usize,
    ) -> Result<QPoly, EngineError> {
        let spec = self.spec;
        let y = symbols[r];
        let n = symbols.len() - r - 1;
        // Child skeleton: prefix, tail before u_j, <resolved>, tail after.
        let build = |j: usize, mid: &[OpSymbol]| {
            let mut w = Vec::with_capacity(symbols.len() + mid.len());
            w.extend_from_slice(&symbols[..r]);
            w.extend_from_slice(&symbols[r + 1..r + 1 + j]);
            w.extend_from_slice(mid);
            w.extend_from_slice(&symbols[r + 2 + j..]);
            w
        };
        let mut out = QPoly::zero();
        for j in 0..n {
            let u = symbols[r + 1 + j];
            debug_assert_ne!(u.kind, OpKind::Ann);
            // Scalar part: [y; a+(u)]_q = c(y, u) I.
            if matches!(u.kind, OpKind::Cre | OpKind::Var) {
                let c = spec.cov(y.index, u.index);
                if !c.is_zero() {
                    let v = self.vac(&build(j, &[]), depth + 1)?;
                    if !v.is_zero() {
                        out = &out + &v.scale(c).shift(j);
                    }
                }
            }
            // Preservation part: the model's [a-(y); a0(u)]_q table entry.
            if matches!(u.kind, OpKind::Pres | OpKind::Var) {
                let entry = spec.pres_comm(y.index, u.index);
                for (mid, coeff) in entry.terms() {
                    let v = self.vac(&build(j, mid.symbols()), depth + 1)?;
                    if !v.is_zero() {
                        out = &out + &(&v * coeff).shift(j);
                    }
                }
            }
            // Annihilation part: [y; a-(u)]_q = y a-(u) - q a-(u) y.
            if matches!(u.kind, OpKind::Ann | OpKind::Var) {
                let a = OpSymbol::ann(u.index);
                let straight = self.vac(&build(j, &[y, a]), depth + 1)?;
                if !straight.is_zero() {
                    out = &out + &straight.shift(j);
                }
                let swapped = self.vac(&build(j, &[a, y]), depth + 1)?;
                if !swapped.is_zero() {
                    out = &out - &swapped.shift(j + 1);
                }
            }
        }
        Ok(out)
    }
}

/// The exact vacuum expectation of a formal operator expression.
pub fn vacuum_expectation(
    spec: &ModelSpec,
    expr: &OpExpr,
    cfg: &EvalConfig,
) -> Result<QPoly, EngineError> {
    let mut max_len = 0;
    for (word, _) in expr.terms() {
        for s in word.symbols() {
            spec.check_index(s.index)?;
        }
        max_len = max_len.max(word.len());
    }
    let max_depth = cfg.max_depth.unwrap_or(10 * max_len.max(1)).max(max_len);
    let mut ev = Evaluator {
        spec,
        prune: cfg.prune_with_excess_rule,
        max_depth,
        memo: HashMap::new(),
        memo_wide: HashMap::new(),
    };
    let mut total = QPoly::zero();
    for (word, coeff) in expr.terms() {
        let v = ev.vac(word.symbols(), 0)?;
        if !v.is_zero() {
            total += &(coeff * &v);
        }
    }
    Ok(total)
}

/// The mixed moment `E[X_sigma(1) ... X_sigma(k)]` as an exact polynomial
/// in `q`.
pub fn moment(spec: &ModelSpec, query: &MomentQuery) -> Result<QPoly, EngineError> {
    moment_with(spec, query, &EvalConfig::default())
}

pub fn moment_with(
    spec: &ModelSpec,
    query: &MomentQuery,
    cfg: &EvalConfig,
) -> Result<QPoly, EngineError> {
    query.validate_for(spec)?;
    let word = OpWord::variables(query.indices());
    vacuum_expectation(spec, &OpExpr::from_word(word), cfg)
}

/// Outcome of a truncated moment-equality check.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum MomentEquality {
    Equal,
    Differs {
        sigma: MomentQuery,
        lhs: QPoly,
        rhs: QPoly,
    },
}

impl MomentEquality {
    pub fn is_equal(&self) -> bool {
        matches!(self, MomentEquality::Equal)
    }
}

/// Compares every mixed moment of the two models up to `max_order`,
/// returning the first (shortest, then lexicographically first) index word
/// on which they differ.
pub fn moment_equal_check(
    spec_a: &ModelSpec,
    spec_b: &ModelSpec,
    max_order: usize,
) -> Result<MomentEquality, EngineError> {
    if spec_a.dim() != spec_b.dim() {
        return Err(EngineError::DimensionMismatch(spec_a.dim(), spec_b.dim()));
    }
    let d = spec_a.dim();
    for len in 1..=max_order {
        let mut sigma = vec![1usize; len];
        loop {
            let query = MomentQuery::new(sigma.clone()).expect("nonempty word");
            let lhs = moment(spec_a, &query)?;
            let rhs = moment(spec_b, &query)?;
            if lhs != rhs {
                return Ok(MomentEquality::Differs {
                    sigma: query,
                    lhs,
                    rhs,
                });
            }
            // Odometer step in lexicographic order.
            let mut pos = len;
            while pos > 0 {
                if sigma[pos - 1] < d {
                    sigma[pos - 1] += 1;
                    break;
                }
                sigma[pos - 1] = 1;
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
        }
    }
    Ok(MomentEquality::Equal)
}
