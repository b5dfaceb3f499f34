use serde::{Deserialize, Serialize};

use super::{check_dim, check_training, euclidean_unchecked, ClassScores, ClassifyError};

/// k-nearest-neighbour classifier over a stored (already standardized) training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    k: usize,
    dim: usize,
    classes: Vec<String>,
    train: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl KnnModel {
    pub fn fit(
        k: usize,
        train: Vec<Vec<f64>>,
        labels: Vec<usize>,
        classes: Vec<String>,
    ) -> Result<Self, ClassifyError> {
        if k == 0 || k.is_multiple_of(2) {
            return Err(ClassifyError::EvenK(k));
        }
        let dim = check_training(&train, &labels, &classes)?;
        if k > train.len() {
            return Err(ClassifyError::KTooLarge { k, n: train.len() });
        }
        Ok(Self {
            k,
            dim,
            classes,
            train,
            labels,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn train_rows(&self) -> &[Vec<f64>] {
        &self.train
    }

    pub fn train_labels(&self) -> &[usize] {
        &self.labels
    }

    /// Indices of the k nearest training rows, nearest first; equal
    /// distances go to the lower row index.
    pub fn neighbors(&self, v: &[f64]) -> Result<Vec<usize>, ClassifyError> {
        check_dim(self.dim, v)?;
        let mut d: Vec<(f64, usize)> = self
            .train
            .iter()
            .enumerate()
            .map(|(i, row)| (euclidean_unchecked(row, v), i))
            .collect();
        let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, order);
            d.truncate(self.k);
        }
        d.sort_unstable_by(order);
        Ok(d.into_iter().map(|(_, i)| i).collect())
    }

    /// Scores are neighbour-class fractions. Among classes tied for the
    /// highest count, the one owning the nearest neighbour wins.
    pub fn predict(&self, v: &[f64]) -> Result<(usize, ClassScores), ClassifyError> {
        let nn = self.neighbors(v)?;
        let mut counts = vec![0usize; self.classes.len()];
        for &i in &nn {
            counts[self.labels[i]] += 1;
        }
        let top = counts.iter().copied().max().unwrap_or(0);
        let label = nn
            .iter()
            .map(|&i| self.labels[i])
            .find(|&c| counts[c] == top)
            .expect("k >= 1 neighbours");
        let k = nn.len() as f64;
        Ok((label, ClassScores(counts.into_iter().map(|c| c as f64 / k).collect())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes() -> Vec<String> {
        vec!["A".into(), "B".into()]
    }

    #[test]
    fn exact_match_k1() {
        let m = KnnModel::fit(1, vec![vec![0.0], vec![5.0]], vec![0, 1], classes()).unwrap();
        let (label, scores) = m.predict(&[5.0]).unwrap();
        assert_eq!(label, 1);
        assert_eq!(scores.0, vec![0.0, 1.0]);
    }

    #[test]
    fn majority_of_three() {
        let m = KnnModel::fit(
            3,
            vec![vec![0.0], vec![1.0], vec![2.0], vec![10.0]],
            vec![0, 1, 0, 1],
            classes(),
        )
        .unwrap();
        let (label, scores) = m.predict(&[0.9]).unwrap();
        assert_eq!(label, 0);
        assert_eq!(scores.0, vec![2.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn score_tie_goes_to_nearest_neighbour_class() {
        let cls: Vec<String> = vec!["A".into(), "B".into(), "C".into()];
        let m = KnnModel::fit(
            3,
            vec![vec![0.0], vec![1.0], vec![3.0]],
            vec![0, 1, 2],
            cls,
        )
        .unwrap();
        let (label, _) = m.predict(&[2.6]).unwrap();
        assert_eq!(label, 2);
    }

    #[test]
    fn equal_distance_goes_to_lower_index() {
        let m = KnnModel::fit(1, vec![vec![-1.0], vec![1.0]], vec![1, 0], classes()).unwrap();
        assert_eq!(m.neighbors(&[0.0]).unwrap(), vec![0]);
        assert_eq!(m.predict(&[0.0]).unwrap().0, 1);
    }

    #[test]
    fn validation() {
        let rows = vec![vec![0.0], vec![1.0]];
        assert!(matches!(KnnModel::fit(2, rows.clone(), vec![0, 1], classes()), Err(ClassifyError::EvenK(2))));
        assert!(matches!(KnnModel::fit(3, rows.clone(), vec![0, 1], classes()), Err(ClassifyError::KTooLarge { k: 3, n: 2 })));
        assert!(matches!(KnnModel::fit(1, rows.clone(), vec![0, 2], classes()), Err(ClassifyError::BadLabel { .. })));
        let m = KnnModel::fit(1, rows, vec![0, 1], classes()).unwrap();
        assert!(matches!(m.predict(&[0.0, 1.0]), Err(ClassifyError::DimensionMismatch { expected: 1, actual: 2 })));
    }
}
