//! Model specifications: the commutator data a moment computation runs on.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::exactmath::{QPoly, QRational};

use super::expr::OpExpr;
use super::AlgebraError;

/// The commutator data of a `d`-dimensional model:
///
/// * `cov[i][j]` is the scalar in `[a-(i); a+(j)]_q = cov[i][j] * I`,
/// * `mean[i]` is the first moment of the i-th coordinate,
/// * `pres_comm[i][j]` is the operator value of `[a-(i); a0(j)]_q`
///   (all zero unless configured otherwise).
///
/// `cov` is deliberately not required to be symmetric: for noncommutative
/// vectors the two orders of a covariance generally differ, and nothing in
/// the formal calculus needs symmetry. The Fock oracle, which builds an
/// actual Hilbert-space realization, checks symmetry and positive
/// semidefiniteness itself at construction time.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModelSpec {
    d: usize,
    cov: Vec<Vec<QRational>>,
    mean: Vec<QRational>,
    pres_comm: Vec<Vec<OpExpr>>,
}

impl ModelSpec {
    pub fn new(cov: Vec<Vec<QRational>>, mean: Vec<QRational>) -> Result<Self, AlgebraError> {
        let d = cov.len();
        if d == 0 {
            return Err(AlgebraError::EmptyModel);
        }
        if cov.iter().any(|row| row.len() != d) {
            return Err(AlgebraError::ShapeMismatch {
                what: "cov",
                expected: d,
            });
        }
        if mean.len() != d {
            return Err(AlgebraError::ShapeMismatch {
                what: "mean",
                expected: d,
            });
        }
        let pres_comm = vec![vec![OpExpr::zero(); d]; d];
        Ok(ModelSpec {
            d,
            cov,
            mean,
            pres_comm,
        })
    }

    /// A model with all first moments zero.
    pub fn centered(cov: Vec<Vec<QRational>>) -> Result<Self, AlgebraError> {
        let d = cov.len();
        ModelSpec::new(cov, vec![QRational::zero(); d])
    }

    /// One-dimensional model with covariance `c` and mean zero.
    pub fn scalar(c: QRational) -> Self {
        ModelSpec::centered(vec![vec![c]]).expect("1x1 model")
    }

    /// Replaces the preservation-commutator table.
    pub fn with_pres_comm(mut self, pres_comm: Vec<Vec<OpExpr>>) -> Result<Self, AlgebraError> {
        if pres_comm.len() != self.d || pres_comm.iter().any(|row| row.len() != self.d) {
            return Err(AlgebraError::ShapeMismatch {
                what: "pres_comm",
                expected: self.d,
            });
        }
        for e in pres_comm.iter().flatten() {
            if e.max_index() > self.d {
                return Err(AlgebraError::IndexOutOfRange {
                    index: e.max_index(),
                    d: self.d,
                });
            }
        }
        self.pres_comm = pres_comm;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `c(i, j)` with 1-based indices.
    pub fn cov(&self, i: usize, j: usize) -> &QRational {
        &self.cov[i - 1][j - 1]
    }

    pub fn cov_rows(&self) -> &[Vec<QRational>] {
        &self.cov
    }

    /// `E[X_i]` with a 1-based index.
    pub fn mean(&self, i: usize) -> &QRational {
        &self.mean[i - 1]
    }

    pub fn means(&self) -> &[QRational] {
        &self.mean
    }

    /// `[a-(i); a0(j)]_q` with 1-based indices.
    pub fn pres_comm(&self, i: usize, j: usize) -> &OpExpr {
        &self.pres_comm[i - 1][j - 1]
    }

    pub fn is_centered(&self) -> bool {
        self.mean.iter().all(QRational::is_zero)
    }

    pub fn has_zero_pres_comm(&self) -> bool {
        self.pres_comm.iter().flatten().all(OpExpr::is_zero)
    }

    /// True when the model is the scalar-commutator one the diagrammatic
    /// formulas apply to: zero means and zero preservation commutators.
    pub fn is_gaussian_form(&self) -> bool {
        self.is_centered() && self.has_zero_pres_comm()
    }

    pub fn is_cov_symmetric(&self) -> bool {
        (0..self.d).all(|i| (0..i).all(|j| self.cov[i][j] == self.cov[j][i]))
    }

    pub fn check_index(&self, index: usize) -> Result<(), AlgebraError> {
        if index == 0 || index > self.d {
            return Err(AlgebraError::IndexOutOfRange { index, d: self.d });
        }
        Ok(())
    }
}

/// A moment query: the index word `sigma(1), ..., sigma(k)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MomentQuery(Vec<usize>);

impl MomentQuery {
    pub fn new(sigma: Vec<usize>) -> Result<Self, AlgebraError> {
        if sigma.is_empty() {
            return Err(AlgebraError::EmptyQuery);
        }
        if let Some(&index) = sigma.iter().find(|&&i| i == 0) {
            return Err(AlgebraError::IndexOutOfRange {
                index,
                d: usize::MAX,
            });
        }
        Ok(MomentQuery(sigma))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `sigma(pos)` with a 1-based position.
    pub fn index_at(&self, pos: usize) -> usize {
        self.0[pos - 1]
    }

    pub fn validate_for(&self, spec: &ModelSpec) -> Result<(), AlgebraError> {
        for &i in &self.0 {
            spec.check_index(i)?;
        }
        Ok(())
    }
}

impl fmt::Display for MomentQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for MomentQuery {
    type Err = AlgebraError;

    /// Parses comma-separated 1-based indices, e.g. `1,2,1,2`.
    fn from_str(s: &str) -> Result<Self, AlgebraError> {
        let sigma = s
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|_| AlgebraError::InvalidQuery(s.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        MomentQuery::new(sigma)
    }
}

/// The value of `q` a model file requests: symbolic (the default) or a
/// fixed rational evaluation point.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub enum QPoint {
    #[default]
    Symbolic,
    Value(QRational),
}

impl QPoint {
    pub fn as_rational(&self) -> Option<&QRational> {
        match self {
            QPoint::Symbolic => None,
            QPoint::Value(v) => Some(v),
        }
    }
}

impl fmt::Display for QPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QPoint::Symbolic => write!(f, "symbolic"),
            QPoint::Value(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for QPoint {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, AlgebraError> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("symbolic") {
            return Ok(QPoint::Symbolic);
        }
        let v: QRational = t
            .parse()
            .map_err(|_| AlgebraError::InvalidQPoint(s.to_string()))?;
        Ok(QPoint::Value(v))
    }
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<String>,
    cov: Vec<Vec<String>>,
    mean: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pres_comm: Option<Vec<Vec<String>>>,
}

/// A model specification together with its requested `q` point, as stored
/// in model files. All scalars are exact rational strings, never floats.
#[derive(Clone, PartialEq, Debug)]
pub struct ModelDocument {
    pub spec: ModelSpec,
    pub q: QPoint,
}

impl ModelDocument {
    pub fn new(spec: ModelSpec, q: QPoint) -> Self {
        ModelDocument { spec, q }
    }

    pub fn from_json(text: &str) -> Result<Self, AlgebraError> {
        let raw: RawModel = serde_json::from_str(text).map_err(|e| AlgebraError::InvalidJson {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let parse_rat = |s: &str| -> Result<QRational, AlgebraError> {
            s.parse()
                .map_err(|_| AlgebraError::InvalidRationalField(s.to_string()))
        };
        if raw.cov.len() != raw.d {
            return Err(AlgebraError::ShapeMismatch {
                what: "cov",
                expected: raw.d,
            });
        }
        let cov = raw
            .cov
            .iter()
            .map(|row| row.iter().map(|s| parse_rat(s)).collect())
            .collect::<Result<Vec<Vec<_>>, _>>()?;
        let mean = raw
            .mean
            .iter()
            .map(|s| parse_rat(s))
            .collect::<Result<Vec<_>, _>>()?;
        let mut spec = ModelSpec::new(cov, mean)?;
        if let Some(rows) = raw.pres_comm {
            let table = rows
                .iter()
                .map(|row| row.iter().map(|s| s.parse::<OpExpr>()).collect())
                .collect::<Result<Vec<Vec<_>>, _>>()?;
            spec = spec.with_pres_comm(table)?;
        }
        let q = match raw.q {
            None => QPoint::Symbolic,
            Some(s) => s.parse()?,
        };
        Ok(ModelDocument { spec, q })
    }

    pub fn to_json(&self) -> String {
        let spec = &self.spec;
        let pres_comm = if spec.has_zero_pres_comm() {
            None
        } else {
            Some(
                (1..=spec.dim())
                    .map(|i| {
                        (1..=spec.dim())
                            .map(|j| spec.pres_comm(i, j).to_string())
                            .collect()
                    })
                    .collect(),
            )
        };
        let raw = RawModel {
            d: spec.dim(),
            q: Some(self.q.to_string()),
            cov: spec
                .cov_rows()
                .iter()
                .map(|row| row.iter().map(QRational::to_string).collect())
                .collect(),
            mean: spec.means().iter().map(QRational::to_string).collect(),
            pres_comm,
        };
        serde_json::to_string_pretty(&raw).expect("model serialization")
    }

    /// Exact evaluation of a symbolic moment at this document's `q` point.
    pub fn eval(&self, poly: &QPoly) -> Option<QRational> {
        self.q.as_rational().map(|q0| poly.eval(q0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> QRational {
        QRational::from((n, d))
    }

    #[test]
    fn model_shape_validation() {
        assert!(matches!(
            ModelSpec::new(vec![], vec![]),
            Err(AlgebraError::EmptyModel)
        ));
        let bad_row = ModelSpec::new(vec![vec![r(1, 1)], vec![]], vec![r(0, 1); 2]);
        assert!(bad_row.is_err());
        let bad_mean = ModelSpec::centered(vec![vec![r(1, 1), r(0, 1)]]);
        assert!(bad_mean.is_err());
    }

    #[test]
    fn asymmetric_cov_is_accepted() {
        let spec =
            ModelSpec::centered(vec![vec![r(1, 1), r(1, 2)], vec![r(1, 3), r(1, 1)]]).unwrap();
        assert!(!spec.is_cov_symmetric());
        assert_eq!(spec.cov(1, 2), &r(1, 2));
        assert_eq!(spec.cov(2, 1), &r(1, 3));
    }

    #[test]
    fn query_parsing() {
        let q: MomentQuery = "1, 2,1,2".parse().unwrap();
        assert_eq!(q.indices(), &[1, 2, 1, 2]);
        assert!("".parse::<MomentQuery>().is_err());
        assert!("1,x".parse::<MomentQuery>().is_err());
        assert!("0,1".parse::<MomentQuery>().is_err());
        let spec = ModelSpec::scalar(r(1, 1));
        assert!("1,2"
            .parse::<MomentQuery>()
            .unwrap()
            .validate_for(&spec)
            .is_err());
    }

    #[test]
    fn document_round_trip() {
        let spec = ModelSpec::new(
            vec![vec![r(1, 1), r(-1, 2)], vec![r(2, 3), r(1, 1)]],
            vec![r(0, 1), r(5, 1)],
        )
        .unwrap();
        let doc = ModelDocument::new(spec, QPoint::Value(r(1, 2)));
        let json = doc.to_json();
        let back = ModelDocument::from_json(&json).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn document_defaults_and_errors() {
        let doc = ModelDocument::from_json(r#"{"d":1,"cov":[["1"]],"mean":["0"]}"#).unwrap();
        assert_eq!(doc.q, QPoint::Symbolic);

        let err = ModelDocument::from_json(r#"{"d":1,"cov":[[1.5]],"mean":["0"]}"#);
        assert!(err.is_err());

        let err = ModelDocument::from_json("{not json");
        assert!(matches!(err, Err(AlgebraError::InvalidJson { .. })));

        let err = ModelDocument::from_json(r#"{"d":2,"cov":[["1"]],"mean":["0","0"]}"#);
        assert!(err.is_err());
    }

    #[test]
    fn document_with_pres_comm_round_trips() {
        let spec = ModelSpec::scalar(r(1, 1))
            .with_pres_comm(vec![vec!["(1/2) a-(1)".parse().unwrap()]])
            .unwrap();
        let doc = ModelDocument::new(spec, QPoint::Symbolic);
        let back = ModelDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
    }
}
