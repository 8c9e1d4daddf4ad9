//! Cluster labelings and the matrices derived from them.
//!
//! Labels are 0-based in memory (`0..k`); files use 1-based labels.

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// A labeling `σ ∈ [k]^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    k: usize,
    labels: Vec<usize>,
}

impl Assignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::input("k must be positive"));
        }
        if let Some(i) = labels.iter().position(|&l| l >= k) {
            return Err(Error::input(format!(
                "label {} of point {i} out of range for k = {k}",
                labels[i] + 1
            )));
        }
        Ok(Assignment { k, labels })
    }

    /// Like [`Assignment::new`] but also requires every label to occur exactly `n/k` times.
    pub fn balanced(labels: Vec<usize>, k: usize) -> Result<Self> {
        let a = Self::new(labels, k)?;
        a.check_balanced()?;
        Ok(a)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn is_balanced(&self) -> bool {
        let n = self.labels.len();
        n % self.k == 0 && self.sizes().iter().all(|&s| s == n / self.k)
    }

    pub fn check_balanced(&self) -> Result<()> {
        if self.is_balanced() {
            Ok(())
        } else {
            Err(Error::input(format!(
                "labels are not balanced: cluster sizes {:?} for n = {}, k = {}",
                self.sizes(),
                self.labels.len(),
                self.k
            )))
        }
    }

    /// `Y = F·Fᵀ`: `Y_ij = 1` iff `i` and `j` share a label.
    pub fn cluster_matrix(&self) -> SymMatrix {
        let l = &self.labels;
        SymMatrix::from_fn(l.len(), |i, j| if l[i] == l[j] { 1.0 } else { 0.0 })
    }

    pub fn assignment_matrix(&self) -> AssignmentMatrix {
        AssignmentMatrix::from_labels(&self.labels, self.k)
    }
}

/// Dense `n × k` indicator matrix `F_ja = 1{σ(j) = a}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignmentMatrix {
    n: usize,
    k: usize,
    data: Vec<u8>,
}

impl AssignmentMatrix {
    pub fn from_labels(labels: &[usize], k: usize) -> Self {
        let n = labels.len();
        let mut data = vec![0u8; n * k];
        for (j, &a) in labels.iter().enumerate() {
            data[j * k + a] = 1;
        }
        AssignmentMatrix { n, k, data }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, j: usize, a: usize) -> u8 {
        self.data[j * self.k + a]
    }

    pub fn row_sums(&self) -> Vec<usize> {
        (0..self.n)
            .map(|j| (0..self.k).map(|a| self.get(j, a) as usize).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<usize> {
        (0..self.k)
            .map(|a| (0..self.n).map(|j| self.get(j, a) as usize).sum())
            .collect()
    }

    /// Label of row `j` (the column holding its single 1).
    pub fn label(&self, j: usize) -> usize {
        (0..self.k)
            .find(|&a| self.get(j, a) == 1)
            .expect("assignment matrix row without a 1")
    }

    /// Entrywise ℓ₁ distance `‖F − G‖₁`.
    pub fn l1_distance(&self, other: &AssignmentMatrix) -> usize {
        self.data
            .iter()
            .zip(&other.data)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// `F·Fᵀ`.
    pub fn cluster_matrix(&self) -> SymMatrix {
        SymMatrix::from_fn(self.n, |i, j| {
            (0..self.k)
                .map(|a| (self.get(i, a) * self.get(j, a)) as f64)
                .sum()
        })
    }
}
