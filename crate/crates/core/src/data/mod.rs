//! Dataset ingestion: MNIST IDX files, sparse bag-of-words text, and
//! synthetic problems.

mod idx;
mod sparse;
mod synth;

pub use idx::{load_idx_images, load_idx_labels, parse_idx_images, parse_idx_labels, IMAGE_MAGIC, LABEL_MAGIC};
pub use sparse::{load_sparse_text, parse_sparse_text, write_sparse_text, SparseMatrix};
pub use synth::{rosenbrock, synth_quadratic, synth_sparse_binary, Quadratic, SparseTaskSpec};

use std::path::Path;

use crate::{Error, Result, RngState, Tensor};

/// Design matrix rows, dense or sparse.
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Dense(Tensor),
    Sparse(SparseMatrix),
}

impl Features {
    pub fn rows(&self) -> usize {
        match self {
            Features::Dense(t) => t.rows(),
            Features::Sparse(s) => s.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Features::Dense(t) => t.len() / t.rows(),
            Features::Sparse(s) => s.cols(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Result<Features> {
        Ok(match self {
            Features::Dense(t) => Features::Dense(t.select_rows(idx)?),
            Features::Sparse(s) => Features::Sparse(s.select_rows(idx)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Validation,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
        }
    }
}

/// Labelled examples for one split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Features,
    pub labels: Vec<usize>,
    pub split: Split,
}

impl Dataset {
    pub fn new(x: Features, labels: Vec<usize>, split: Split) -> Result<Self> {
        if x.rows() != labels.len() {
            return Err(Error::Length(format!(
                "{} feature rows but {} labels",
                x.rows(),
                labels.len()
            )));
        }
        Ok(Dataset { x, labels, split })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Examples `idx`, in order.
    pub fn subset(&self, idx: &[usize]) -> Result<Dataset> {
        let labels = idx
            .iter()
            .map(|&i| {
                self.labels
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::Range(format!("example {i} out of {}", self.len())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            x: self.x.select_rows(idx)?,
            labels,
            split: self.split,
        })
    }

    /// The first `k` examples after a seeded shuffle (all of them if `k`
    /// exceeds the dataset size).
    pub fn shuffled_prefix(&self, k: usize, rng: &mut RngState) -> Result<Dataset> {
        let mut order = rng.permutation(self.len());
        order.truncate(k.min(self.len()));
        self.subset(&order)
    }
}

/// Loads the standard MNIST file pair for one split from `dir`:
/// `train-*` for training and `t10k-*` for validation. Gzipped files
/// (`*.gz`) are used when the plain files are absent.
pub fn load_mnist_split(dir: &Path, split: Split) -> Result<Dataset> {
    let prefix = match split {
        Split::Train => "train",
        Split::Validation => "t10k",
    };
    let pick = |stem: String| {
        let plain = dir.join(&stem);
        if plain.exists() {
            plain
        } else {
            dir.join(format!("{stem}.gz"))
        }
    };
    let images = load_idx_images(&pick(format!("{prefix}-images-idx3-ubyte")))?;
    let labels = load_idx_labels(&pick(format!("{prefix}-labels-idx1-ubyte")))?;
    Dataset::new(Features::Dense(images), labels, split)
}
