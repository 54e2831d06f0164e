use std::fmt;

use serde::{Deserialize, Serialize};

use super::ClassifyError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Tallies `(actual, predicted)` pairs; class 1 is positive.
pub fn confusion(actual: &[u8], predicted: &[u8]) -> Result<ConfusionMatrix, ClassifyError> {
    if actual.len() != predicted.len() {
        return Err(ClassifyError::LengthMismatch(actual.len(), predicted.len()));
    }
    if actual.is_empty() {
        return Err(ClassifyError::EmptyMatrix);
    }
    let mut cm = ConfusionMatrix::default();
    for (index, (&a, &p)) in actual.iter().zip(predicted).enumerate() {
        match (a, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (1, 0) => cm.fn_ += 1,
            (0, 0) => cm.tn += 1,
            _ => {
                return Err(ClassifyError::LabelOutOfRange {
                    index,
                    label: a.max(p),
                })
            }
        }
    }
    Ok(cm)
}

/// A ratio whose denominator may be zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Score {
    Defined(f64),
    Undefined,
}

impl Score {
    fn ratio(num: usize, den: usize) -> Self {
        if den == 0 {
            Score::Undefined
        } else {
            Score::Defined(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Score::Defined(v) => Some(v),
            Score::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Score::Defined(_))
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Score::Defined(v) => match f.precision() {
                Some(p) => write!(f, "{v:.p$}"),
                None => write!(f, "{v}"),
            },
            Score::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Score {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Score::Defined(v) => s.serialize_f64(*v),
            Score::Undefined => s.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.map_or(Score::Undefined, Score::Defined))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: Score,
    pub accuracy: Score,
    pub threat_score: Score,
}

/// Precision `tp/(tp+fp)`, accuracy `(tp+tn)/total` and threat score
/// `tp/(tp+fp+fn)`.
pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics, ClassifyError> {
    if cm.total() == 0 {
        return Err(ClassifyError::EmptyMatrix);
    }
    Ok(Metrics {
        precision: Score::ratio(cm.tp, cm.tp + cm.fp),
        accuracy: Score::ratio(cm.tp + cm.tn, cm.total()),
        threat_score: Score::ratio(cm.tp, cm.tp + cm.fp + cm.fn_),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting() {
        assert_eq!(confusion(&[1, 0, 1], &[1, 0, 1]).unwrap(), ConfusionMatrix::new(2, 0, 0, 1));
        assert_eq!(confusion(&[1, 0], &[1, 1]).unwrap(), ConfusionMatrix::new(1, 1, 0, 0));
        assert_eq!(
            confusion(&[1, 1, 0, 0, 1], &[1, 0, 1, 0, 1]).unwrap(),
            ConfusionMatrix::new(2, 1, 1, 1)
        );
        assert!(matches!(
            confusion(&[0, 2], &[0, 1]),
            Err(ClassifyError::LabelOutOfRange { index: 1, label: 2 })
        ));
    }

    #[test]
    fn scores() {
        let m = metrics(&ConfusionMatrix::new(8, 2, 2, 8)).unwrap();
        assert_eq!(m.precision, Score::Defined(0.8));
        assert_eq!(m.accuracy, Score::Defined(0.8));
        let m = metrics(&ConfusionMatrix::new(2, 0, 2, 3)).unwrap();
        assert_eq!(m.precision, Score::Defined(1.0));
        assert_eq!(m.threat_score, Score::Defined(0.5));
        let m = metrics(&ConfusionMatrix::new(0, 0, 1, 4)).unwrap();
        assert_eq!(m.precision, Score::Undefined);
        assert!(matches!(metrics(&ConfusionMatrix::default()), Err(ClassifyError::EmptyMatrix)));
    }

    #[test]
    fn score_text_and_json() {
        assert_eq!(format!("{:.3}", Score::Defined(0.8)), "0.800");
        assert_eq!(Score::Undefined.to_string(), "undefined");
        assert_eq!(serde_json::to_string(&Score::Undefined).unwrap(), "null");
        let cm = serde_json::to_string(&ConfusionMatrix::new(1, 2, 3, 4)).unwrap();
        assert_eq!(cm, r#"{"tp":1,"fp":2,"fn":3,"tn":4}"#);
    }
}
