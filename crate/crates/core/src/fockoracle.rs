//! Floating-point cross-check on a level-truncated q-deformed Fock space.
//!
//! Covariances are factored into concrete vectors, creation prepends a
//! letter, annihilation removes letters with weights `q^(j-1)` times the
//! matching inner product, and a mixed moment is the vacuum amplitude after
//! applying the sum of the two operators letter by letter. With the
//! truncation level at least the word length the only error is rounding.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::algebra::{ModelSpec, MomentQuery};

/// Amplitudes this close to zero are dropped from sparse states.
pub const AMPLITUDE_DROP_TOLERANCE: f64 = 1e-14;

/// Tolerance for the positive-semidefiniteness check and the factor
/// reconstruction check when covariances are turned into vectors.
pub const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum FockError {
    #[error("q = {0} outside [-1, 1]")]
    QOutOfRange(f64),
    #[error("covariance matrix is not symmetric: c({i},{j}) != c({j},{i})")]
    CovNotSymmetric { i: usize, j: usize },
    #[error("covariance matrix is not positive semidefinite (pivot residual {residual:.3e})")]
    CovNotPsd { residual: f64 },
    #[error("state reached the truncation level {level_cap}; raise the level")]
    TruncationOverflow { level_cap: usize },
    #[error("truncation level {level_cap} is below the word length {needed}")]
    LevelTooSmall { level_cap: usize, needed: usize },
    #[error("coordinate index {index} outside 1..={d}")]
    IndexOutOfRange { index: usize, d: usize },
}

/// A basis tensor word: the sequence of vector letters, vacuum when empty.
/// Letters index the model's vectors and must stay within its dimension;
/// operator applications panic on out-of-range letters.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TensorWord {
    letters: Vec<u8>,
}

impl TensorWord {
    pub fn vacuum() -> Self {
        TensorWord {
            letters: Vec::new(),
        }
    }

    pub fn new(letters: Vec<u8>) -> Self {
        TensorWord { letters }
    }

    pub fn level(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    fn prepend(&self, letter: u8) -> TensorWord {
        let mut letters = Vec::with_capacity(self.letters.len() + 1);
        letters.push(letter);
        letters.extend_from_slice(&self.letters);
        TensorWord { letters }
    }

    fn delete(&self, pos: usize) -> TensorWord {
        let mut letters = self.letters.clone();
        letters.remove(pos);
        TensorWord { letters }
    }
}

impl fmt::Display for TensorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "vac");
        }
        let parts: Vec<String> = self.letters.iter().map(u8::to_string).collect();
        write!(f, "{}", parts.join("&"))
    }
}

/// A sparse vector in the truncated Fock space.
#[derive(Clone, PartialEq, Debug)]
pub struct FockState {
    amplitudes: BTreeMap<TensorWord, f64>,
    level_cap: usize,
}

impl FockState {
    pub fn zero(level_cap: usize) -> Self {
        FockState {
            amplitudes: BTreeMap::new(),
            level_cap,
        }
    }

    pub fn vacuum(level_cap: usize) -> Self {
        let mut s = FockState::zero(level_cap);
        s.add(TensorWord::vacuum(), 1.0);
        s
    }

    pub fn level_cap(&self) -> usize {
        self.level_cap
    }

    pub fn amplitude(&self, word: &TensorWord) -> f64 {
        self.amplitudes.get(word).copied().unwrap_or(0.0)
    }

    pub fn vacuum_amplitude(&self) -> f64 {
        self.amplitude(&TensorWord::vacuum())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TensorWord, f64)> {
        self.amplitudes.iter().map(|(w, &a)| (w, a))
    }

    pub fn num_terms(&self) -> usize {
        self.amplitudes.len()
    }

    /// Adds `amp` to the coefficient of `word`, dropping near-zero results.
    pub fn add(&mut self, word: TensorWord, amp: f64) {
        use std::collections::btree_map::Entry;
        match self.amplitudes.entry(word) {
            Entry::Vacant(v) => {
                if amp.abs() > AMPLITUDE_DROP_TOLERANCE {
                    v.insert(amp);
                }
            }
            Entry::Occupied(mut o) => {
                let sum = o.get() + amp;
                if sum.abs() <= AMPLITUDE_DROP_TOLERANCE {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn plus(&self, other: &FockState) -> FockState {
        let mut out = self.clone();
        for (w, a) in other.terms() {
            out.add(w.clone(), a);
        }
        out
    }
}

/// Counts inversions: pairs `i < j` with `perm[i] > perm[j]`.
pub fn inversion_count(perm: &[usize]) -> usize {
    let mut count = 0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                count += 1;
            }
        }
    }
    count
}

/// A concrete realization of a model: one vector per coordinate whose Gram
/// matrix reproduces the covariance, a numeric `q`, and a truncation level.
#[derive(Clone, Debug)]
pub struct FockModel {
    d: usize,
    q: f64,
    vectors: Vec<Vec<f64>>,
    gram: Vec<Vec<f64>>,
    level_cap: usize,
}

impl FockModel {
    /// Factors the covariance of `spec` (symmetric positive semidefinite,
    /// checked here with tolerance [`PSD_TOLERANCE`]) and fixes the numeric
    /// `q` and the truncation level. Means and preservation commutators must
    /// be zero: the realization only carries creation and annihilation.
    pub fn new(spec: &ModelSpec, q: f64, level_cap: usize) -> Result<Self, FockError> {
        if !(-1.0..=1.0).contains(&q) {
            return Err(FockError::QOutOfRange(q));
        }
        let d = spec.dim();
        for i in 1..=d {
            for j in 1..i {
                if spec.cov(i, j) != spec.cov(j, i) {
                    return Err(FockError::CovNotSymmetric { i, j });
                }
            }
        }
        let cov: Vec<Vec<f64>> = (1..=d)
            .map(|i| (1..=d).map(|j| spec.cov(i, j).to_f64()).collect())
            .collect();
        let vectors = pivoted_cholesky(&cov)?;
        let gram: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| dot(&vectors[i], &vectors[j])).collect())
            .collect();
        let worst = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| (gram[i][j] - cov[i][j]).abs())
            .fold(0.0f64, f64::max);
        if worst > PSD_TOLERANCE {
            return Err(FockError::CovNotPsd { residual: worst });
        }
        Ok(FockModel {
            d,
            q,
            vectors,
            gram,
            level_cap,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn level_cap(&self) -> usize {
        self.level_cap
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i - 1]
    }

    /// `<f_i, f_j>` with 1-based indices.
    pub fn pair_inner(&self, i: usize, j: usize) -> f64 {
        self.gram[i - 1][j - 1]
    }

    fn check_index(&self, index: usize) -> Result<(), FockError> {
        if index == 0 || index > self.d {
            return Err(FockError::IndexOutOfRange { index, d: self.d });
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pivoted Cholesky factorization of a symmetric matrix. Returns one row
/// vector per coordinate; rank-deficient input yields vectors in a
/// lower-dimensional span. Fails when a pivot residual drops below
/// `-PSD_TOLERANCE`.
fn pivoted_cholesky(cov: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, FockError> {
    let d = cov.len();
    let mut factor = vec![vec![0.0; d]; d];
    let mut residual: Vec<f64> = (0..d).map(|i| cov[i][i]).collect();
    let mut order: Vec<usize> = (0..d).collect();
    for step in 0..d {
        let (best_pos, best_val) = order[step..]
            .iter()
            .enumerate()
            .map(|(offset, &row)| (step + offset, residual[row]))
            .fold((step, f64::NEG_INFINITY), |acc, cur| {
                if cur.1 > acc.1 {
                    cur
                } else {
                    acc
                }
            });
        if best_val < -PSD_TOLERANCE {
            return Err(FockError::CovNotPsd { residual: best_val });
        }
        if best_val <= PSD_TOLERANCE {
            // Remaining residuals are numerically zero: rank found.
            break;
        }
        order.swap(step, best_pos);
        let pivot_row = order[step];
        let pivot = best_val.sqrt();
        factor[pivot_row][step] = pivot;
        for &row in &order[step + 1..] {
            let correction: f64 = factor[row][..step]
                .iter()
                .zip(&factor[pivot_row][..step])
                .map(|(a, b)| a * b)
                .sum();
            let entry = (cov[row][pivot_row] - correction) / pivot;
            factor[row][step] = entry;
            residual[row] -= entry * entry;
        }
    }
    Ok(factor)
}

/// The q-deformed inner product of two states: words of equal level pair
/// through the permutation sum `sum_pi q^|pi| prod <f_(u_j), f_(v_pi(j))>`,
/// words of different levels are orthogonal.
pub fn q_inner(model: &FockModel, u: &FockState, v: &FockState) -> f64 {
    let mut total = 0.0;
    for (wu, au) in u.terms() {
        for (wv, av) in v.terms() {
            if wu.level() != wv.level() {
                continue;
            }
            total += au * av * word_inner(model, wu, wv);
        }
    }
    total
}

fn word_inner(model: &FockModel, u: &TensorWord, v: &TensorWord) -> f64 {
    let n = u.level();
    if n == 0 {
        return 1.0;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    // Exhaustive permutation sum, fine at oracle scale (n <= 8 or so).
    loop {
        let mut term = model.q().powi(inversion_count(&perm) as i32);
        for (j, &pj) in perm.iter().enumerate() {
            if term == 0.0 {
                break;
            }
            term *= model.pair_inner(u.letters()[j] as usize, v.letters()[pj] as usize);
        }
        total += term;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    total
}

fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Creation: prepends letter `i` to every word of the state.
pub fn apply_creation(model: &FockModel, i: usize, s: &FockState) -> Result<FockState, FockError> {
    model.check_index(i)?;
    let mut out = FockState::zero(s.level_cap());
    for (word, amp) in s.terms() {
        if word.level() >= s.level_cap() {
            return Err(FockError::TruncationOverflow {
                level_cap: s.level_cap(),
            });
        }
        out.add(word.prepend(i as u8), amp);
    }
    Ok(out)
}

/// Annihilation: the q-weighted sum of single-letter deletions,
/// `q^(j-1) * <f_i, f_(letter_j)>` for the j-th letter. The vacuum maps to
/// the zero state.
pub fn apply_annihilation(model: &FockModel, i: usize, s: &FockState) -> FockState {
    let mut out = FockState::zero(s.level_cap());
    for (word, amp) in s.terms() {
        let mut weight = amp;
        for (j, &letter) in word.letters().iter().enumerate() {
            let coupling = model.pair_inner(i, letter as usize);
            if coupling != 0.0 {
                out.add(word.delete(j), weight * coupling);
            }
            weight *= model.q();
        }
    }
    out
}

/// One q-Gaussian factor: creation plus annihilation of coordinate `i`.
pub fn apply_gaussian(model: &FockModel, i: usize, s: &FockState) -> Result<FockState, FockError> {
    Ok(apply_creation(model, i, s)?.plus(&apply_annihilation(model, i, s)))
}

/// The numeric mixed moment: applies the q-Gaussian factors right to left
/// to the vacuum and reads off the vacuum amplitude.
pub fn numeric_moment(model: &FockModel, query: &MomentQuery) -> Result<f64, FockError> {
    for &i in query.indices() {
        model.check_index(i)?;
    }
    if model.level_cap() < query.len() {
        return Err(FockError::LevelTooSmall {
            level_cap: model.level_cap(),
            needed: query.len(),
        });
    }
    let mut state = FockState::vacuum(model.level_cap());
    for &i in query.indices().iter().rev() {
        state = apply_gaussian(model, i, &state)?;
    }
    Ok(state.vacuum_amplitude())
}
