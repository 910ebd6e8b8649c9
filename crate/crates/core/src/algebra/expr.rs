//! Operator symbols, words and formal linear combinations.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::exactmath::QPoly;

use super::AlgebraError;

/// The four symbol kinds. The derived order `Ann < Pres < Cre < Var` fixes
/// the deterministic term ordering used everywhere in this crate.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum OpKind {
    Ann,
    Pres,
    Cre,
    Var,
}

/// One operator symbol: an annihilation, preservation or creation operator,
/// or a full variable, attached to a coordinate index (1-based).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct OpSymbol {
    pub kind: OpKind,
    pub index: usize,
}

impl OpSymbol {
    pub fn ann(index: usize) -> Self {
        OpSymbol {
            kind: OpKind::Ann,
            index,
        }
    }

    pub fn pres(index: usize) -> Self {
        OpSymbol {
            kind: OpKind::Pres,
            index,
        }
    }

    pub fn cre(index: usize) -> Self {
        OpSymbol {
            kind: OpKind::Cre,
            index,
        }
    }

    pub fn var(index: usize) -> Self {
        OpSymbol {
            kind: OpKind::Var,
            index,
        }
    }
}

impl fmt::Display for OpSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            OpKind::Ann => write!(f, "a-({})", self.index),
            OpKind::Pres => write!(f, "a0({})", self.index),
            OpKind::Cre => write!(f, "a+({})", self.index),
            OpKind::Var => write!(f, "X({})", self.index),
        }
    }
}

impl FromStr for OpSymbol {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, AlgebraError> {
        let t = s.trim();
        let bad = || AlgebraError::InvalidSymbol(s.to_string());
        let (kind, rest) = if let Some(r) = t.strip_prefix("a-") {
            (OpKind::Ann, r)
        } else if let Some(r) = t.strip_prefix("a0") {
            (OpKind::Pres, r)
        } else if let Some(r) = t.strip_prefix("a+") {
            (OpKind::Cre, r)
        } else if let Some(r) = t.strip_prefix('X') {
            (OpKind::Var, r)
        } else {
            return Err(bad());
        };
        let digits = rest
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let index: usize = digits.trim().parse().map_err(|_| bad())?;
        if index == 0 {
            return Err(bad());
        }
        Ok(OpSymbol { kind, index })
    }
}

/// A finite product of operator symbols; the empty word is the identity.
///
/// Words compare lexicographically with the symbol order of [`OpKind`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct OpWord(Vec<OpSymbol>);

impl OpWord {
    pub fn identity() -> Self {
        OpWord(Vec::new())
    }

    pub fn new(symbols: Vec<OpSymbol>) -> Self {
        OpWord(symbols)
    }

    /// The word `X(sigma_1) ... X(sigma_k)`.
    pub fn variables(indices: &[usize]) -> Self {
        OpWord(indices.iter().map(|&i| OpSymbol::var(i)).collect())
    }

    pub fn symbols(&self) -> &[OpSymbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &OpWord) -> OpWord {
        let mut symbols = self.0.clone();
        symbols.extend_from_slice(&other.0);
        OpWord(symbols)
    }

    /// Largest coordinate index appearing in the word (0 when empty).
    pub fn max_index(&self) -> usize {
        self.0.iter().map(|s| s.index).max().unwrap_or(0)
    }
}

impl fmt::Display for OpWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "I");
        }
        let mut first = true;
        for s in &self.0 {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{s}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for OpWord {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, AlgebraError> {
        let t = s.trim();
        if t == "I" {
            return Ok(OpWord::identity());
        }
        let symbols = t
            .split_whitespace()
            .map(OpSymbol::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(OpWord(symbols))
    }
}

/// A formal linear combination of words with [`QPoly`] coefficients.
///
/// Canonical form: like words merged, zero coefficients never stored;
/// iteration follows the deterministic word order, so rendering and
/// evaluation are bit-reproducible.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct OpExpr {
    terms: BTreeMap<OpWord, QPoly>,
}

impl OpExpr {
    pub fn zero() -> Self {
        OpExpr {
            terms: BTreeMap::new(),
        }
    }

    /// The identity operator with coefficient one.
    pub fn identity() -> Self {
        OpExpr::from_term(OpWord::identity(), QPoly::one())
    }

    pub fn from_word(word: OpWord) -> Self {
        OpExpr::from_term(word, QPoly::one())
    }

    pub fn from_symbol(symbol: OpSymbol) -> Self {
        OpExpr::from_word(OpWord::new(vec![symbol]))
    }

    pub fn from_term(word: OpWord, coeff: QPoly) -> Self {
        let mut e = OpExpr::zero();
        e.add_term(word, coeff);
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OpWord, &QPoly)> {
        self.terms.iter()
    }

    pub fn coeff(&self, word: &OpWord) -> QPoly {
        self.terms.get(word).cloned().unwrap_or_else(QPoly::zero)
    }

    /// Adds `coeff * word`, keeping canonical form.
    pub fn add_term(&mut self, word: OpWord, coeff: QPoly) {
        if coeff.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(word) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get() + &coeff;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &OpExpr) -> OpExpr {
        let mut out = self.clone();
        for (w, c) in other.terms() {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &OpExpr) -> OpExpr {
        let mut out = self.clone();
        for (w, c) in other.terms() {
            out.add_term(w.clone(), -c);
        }
        out
    }

    pub fn scale(&self, coeff: &QPoly) -> OpExpr {
        let mut out = OpExpr::zero();
        if coeff.is_zero() {
            return out;
        }
        for (w, c) in self.terms() {
            out.add_term(w.clone(), c * coeff);
        }
        out
    }

    /// Bilinear extension of word concatenation (noncommutative product).
    pub fn mul(&self, other: &OpExpr) -> OpExpr {
        let mut out = OpExpr::zero();
        for (wa, ca) in self.terms() {
            for (wb, cb) in other.terms() {
                out.add_term(wa.concat(wb), ca * cb);
            }
        }
        out
    }

    /// Replaces every variable symbol by the sum of its three components,
    /// in every word, expanding bilinearly.
    pub fn expand_variables(&self) -> OpExpr {
        let mut out = OpExpr::zero();
        for (word, coeff) in self.terms() {
            let mut partial: Vec<(OpWord, QPoly)> = vec![(OpWord::identity(), coeff.clone())];
            for &s in word.symbols() {
                let expansion = expand_variable(s);
                let mut next = Vec::with_capacity(partial.len() * expansion.num_terms());
                for (w, c) in &partial {
                    for (ew, ec) in expansion.terms() {
                        next.push((w.concat(ew), c * ec));
                    }
                }
                partial = next;
            }
            for (w, c) in partial {
                out.add_term(w, c);
            }
        }
        out
    }

    pub fn max_index(&self) -> usize {
        self.terms.keys().map(OpWord::max_index).max().unwrap_or(0)
    }
}

impl fmt::Display for OpExpr {
    /// Renders e.g. `(1 + q) I + (-1/2) a-(1) a+(2)`; zero renders as `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (w, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "({c}) {w}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for OpExpr {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, AlgebraError> {
        let t = s.trim();
        if t == "0" {
            return Ok(OpExpr::zero());
        }
        let bad = |msg: &str| AlgebraError::InvalidExpr(s.to_string(), msg.to_string());
        // A term separator is a `+` that opens the next `(coefficient)`;
        // the `+` inside a creation symbol `a+(i)` is preceded by `a`.
        let is_separator = |text: &str, pos: usize| {
            !text[..pos].ends_with('a') && text[pos + 1..].trim_start().starts_with('(')
        };
        let mut out = OpExpr::zero();
        let mut rest = t;
        loop {
            let inner = rest
                .strip_prefix('(')
                .ok_or_else(|| bad("expected ( to open a coefficient"))?;
            let close = inner.find(')').ok_or_else(|| bad("unclosed coefficient"))?;
            let coeff: QPoly = inner[..close]
                .parse()
                .map_err(|e| bad(&format!("bad coefficient: {e}")))?;
            rest = inner[close + 1..].trim_start();
            let end = rest
                .char_indices()
                .filter(|&(_, c)| c == '+')
                .map(|(i, _)| i)
                .find(|&i| is_separator(rest, i))
                .unwrap_or(rest.len());
            let word: OpWord = rest[..end].trim().parse()?;
            out.add_term(word, coeff);
            if end == rest.len() {
                return Ok(out);
            }
            rest = rest[end + 1..].trim_start();
        }
    }
}

/// Decomposes a variable into annihilation + preservation + creation;
/// other symbols are returned unchanged.
pub fn expand_variable(s: OpSymbol) -> OpExpr {
    match s.kind {
        OpKind::Var => {
            let mut e = OpExpr::zero();
            e.add_term(OpWord::new(vec![OpSymbol::ann(s.index)]), QPoly::one());
            e.add_term(OpWord::new(vec![OpSymbol::pres(s.index)]), QPoly::one());
            e.add_term(OpWord::new(vec![OpSymbol::cre(s.index)]), QPoly::one());
            e
        }
        _ => OpExpr::from_symbol(s),
    }
}

/// Vanishing test for words of the shape `a- ... a- X ... X` (a prefix of
/// `k` annihilators followed by variables, `n` symbols in total): such a word
/// kills the vacuum whenever `k > floor(n / 2)`.
///
/// Words of any other shape are rejected as an invalid-shape error.
pub fn annihilator_excess_is_zero(w: &OpWord) -> Result<bool, AlgebraError> {
    let n = w.len();
    let k = w
        .symbols()
        .iter()
        .take_while(|s| s.kind == OpKind::Ann)
        .count();
    if w.symbols()[k..].iter().any(|s| s.kind != OpKind::Var) {
        return Err(AlgebraError::InvalidShape(w.to_string()));
    }
    Ok(k > n / 2)
}
