use serde::{Deserialize, Serialize};

use super::{ClassScores, ClassifyError, KnnModel, RfModel};

/// Soft-voting pair: the class scores of both members are averaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    knn: KnnModel,
    rf: RfModel,
}

impl EnsembleModel {
    pub fn new(knn: KnnModel, rf: RfModel) -> Result<Self, ClassifyError> {
        if knn.classes() != rf.classes() {
            return Err(ClassifyError::ClassListMismatch);
        }
        if knn.dim() != rf.dim() {
            return Err(ClassifyError::DimensionMismatch {
                expected: knn.dim(),
                actual: rf.dim(),
            });
        }
        Ok(Self { knn, rf })
    }

    pub fn knn(&self) -> &KnnModel {
        &self.knn
    }

    pub fn rf(&self) -> &RfModel {
        &self.rf
    }

    pub fn classes(&self) -> &[String] {
        self.knn.classes()
    }

    pub fn dim(&self) -> usize {
        self.knn.dim()
    }

    pub fn predict(&self, v: &[f64]) -> Result<(usize, ClassScores), ClassifyError> {
        let (_, a) = self.knn.predict(v)?;
        let (_, b) = self.rf.predict(v)?;
        Ok(combine(&a, &b))
    }
}

/// Mean of two score vectors; the lowest class index wins ties.
pub fn combine(knn: &ClassScores, rf: &ClassScores) -> (usize, ClassScores) {
    let s = ClassScores::mean(&[knn, rf]);
    (s.argmax(), s)
}
