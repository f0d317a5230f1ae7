//! Complementary pattern pairs drawn from a partial Hadamard matrix.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

const MODULE: &str = "sensing";

/// Dense row-major matrix with entries in `{−1, +1}` (or `{0, 1}`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl SignMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.data[i * self.cols + j]
    }

    /// `S Sᵀ` in exact integer arithmetic.
    pub fn gram_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows)
            .map(|i| {
                (0..self.rows)
                    .map(|j| {
                        self.row(i)
                            .iter()
                            .zip(self.row(j))
                            .map(|(&a, &b)| a as i64 * b as i64)
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_real<T: Real>(&self) -> Matrix<T> {
        Matrix::from_fn(self.rows, self.cols, |i, j| T::lit(self.get(i, j) as f64))
    }
}

/// Entry `(i, j)` of the Sylvester–Hadamard matrix: `(−1)^popcount(i & j)`.
pub fn sylvester_entry(i: usize, j: usize) -> i8 {
    if (i & j).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Sylvester–Hadamard matrix of the given power-of-two order.
pub fn hadamard(order: usize) -> Result<SignMatrix> {
    if order == 0 || !order.is_power_of_two() {
        return Err(Error::invalid(
            MODULE,
            "order",
            format!("Hadamard order must be a power of two, got {order}"),
        ));
    }
    let data = (0..order * order)
        .map(|k| sylvester_entry(k / order, k % order))
        .collect();
    Ok(SignMatrix {
        rows: order,
        cols: order,
        data,
    })
}

/// A binary pattern and its complement, flattened row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternPair {
    pub pos: Vec<u8>,
    pub neg: Vec<u8>,
}

impl PatternPair {
    /// `pos = (1 + h)/2`, `neg = (1 − h)/2`.
    pub fn from_signs(h: &[i8]) -> Self {
        let pos: Vec<u8> = h.iter().map(|&v| u8::from(v > 0)).collect();
        let neg = pos.iter().map(|&v| 1 - v).collect();
        Self { pos, neg }
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    /// `pos − neg`, entries `±1`.
    pub fn difference(&self) -> Vec<i8> {
        self.pos
            .iter()
            .zip(&self.neg)
            .map(|(&p, &n)| p as i8 - n as i8)
            .collect()
    }
}

/// Which measurement matrix a reconstruction uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixMode {
    /// `A⁺`, the displayed 0/1 patterns.
    Plus,
    /// `A⁻`, their complements.
    Minus,
    /// `ΔA = A⁺ − A⁻`, entries `±1`.
    Differential,
}

impl MatrixMode {
    pub const ALL: [MatrixMode; 3] = [
        MatrixMode::Plus,
        MatrixMode::Minus,
        MatrixMode::Differential,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MatrixMode::Plus => "plus",
            MatrixMode::Minus => "minus",
            MatrixMode::Differential => "differential",
        }
    }
}

/// `M` complementary pairs built from distinct non-constant Hadamard rows
/// under one shared column permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensingEnsemble {
    pairs: Vec<PatternPair>,
    n_pixels: usize,
    source_rows: Vec<usize>,
    column_permutation: Vec<usize>,
    seed: u64,
}

impl SensingEnsemble {
    pub fn pairs(&self) -> &[PatternPair] {
        &self.pairs
    }

    pub fn n_pixels(&self) -> usize {
        self.n_pixels
    }

    pub fn m_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn source_rows(&self) -> &[usize] {
        &self.source_rows
    }

    pub fn column_permutation(&self) -> &[usize] {
        &self.column_permutation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sampling_ratio(&self) -> f64 {
        self.m_pairs() as f64 / self.n_pixels as f64
    }

    fn binary_matrix<T: Real>(&self, pick: impl Fn(&PatternPair) -> &[u8]) -> Matrix<T> {
        let n = self.n_pixels;
        let mut data = Vec::with_capacity(self.m_pairs() * n);
        for p in &self.pairs {
            data.extend(
                pick(p)
                    .iter()
                    .map(|&v| if v == 1 { T::one() } else { T::zero() }),
            );
        }
        Matrix::from_vec(self.m_pairs(), n, data).expect("ensemble rows have n_pixels entries")
    }

    /// `A⁺`
    pub fn plus_matrix<T: Real>(&self) -> Matrix<T> {
        self.binary_matrix(|p| &p.pos)
    }

    /// `A⁻`
    pub fn minus_matrix<T: Real>(&self) -> Matrix<T> {
        self.binary_matrix(|p| &p.neg)
    }

    pub fn matrix<T: Real>(&self, mode: MatrixMode) -> Matrix<T> {
        match mode {
            MatrixMode::Plus => self.plus_matrix(),
            MatrixMode::Minus => self.minus_matrix(),
            MatrixMode::Differential => differential_matrix(self).to_real(),
        }
    }

    pub fn to_file(&self) -> EnsembleFile {
        EnsembleFile {
            version: ENSEMBLE_FILE_VERSION,
            n_pixels: self.n_pixels,
            m_pairs: self.m_pairs(),
            seed: self.seed,
            column_permutation: self.column_permutation.clone(),
            source_rows: self.source_rows.clone(),
        }
    }

    /// Rebuilds the patterns from a serialized header.
    pub fn from_file(file: &EnsembleFile) -> Result<Self> {
        if file.version != ENSEMBLE_FILE_VERSION {
            return Err(Error::format(
                "ensemble file",
                format!("unsupported version {}", file.version),
            ));
        }
        let n = file.n_pixels;
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::invalid(MODULE, "n_pixels", "must be a power of two"));
        }
        if file.source_rows.len() != file.m_pairs {
            return Err(Error::format(
                "ensemble file",
                "m_pairs disagrees with source_rows",
            ));
        }
        let mut seen = vec![false; n];
        for &r in &file.source_rows {
            if r == 0 || r >= n || std::mem::replace(&mut seen[r], true) {
                return Err(Error::invalid(
                    MODULE,
                    "source_rows",
                    format!("row {r} invalid or repeated"),
                ));
            }
        }
        let mut perm_seen = vec![false; n];
        if file.column_permutation.len() != n
            || file
                .column_permutation
                .iter()
                .any(|&c| c >= n || std::mem::replace(&mut perm_seen[c], true))
        {
            return Err(Error::format(
                "ensemble file",
                "column_permutation is not a permutation",
            ));
        }
        Ok(assemble(
            n,
            file.source_rows.clone(),
            file.column_permutation.clone(),
            file.seed,
        ))
    }
}

pub const ENSEMBLE_FILE_VERSION: u32 = 1;

/// On-disk ensemble header. The patterns follow from it deterministically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub version: u32,
    pub n_pixels: usize,
    pub m_pairs: usize,
    pub seed: u64,
    pub column_permutation: Vec<usize>,
    pub source_rows: Vec<usize>,
}

fn assemble(
    n: usize,
    source_rows: Vec<usize>,
    column_permutation: Vec<usize>,
    seed: u64,
) -> SensingEnsemble {
    let pairs = source_rows
        .iter()
        .map(|&r| {
            let h: Vec<i8> = column_permutation
                .iter()
                .map(|&c| sylvester_entry(r, c))
                .collect();
            PatternPair::from_signs(&h)
        })
        .collect();
    SensingEnsemble {
        pairs,
        n_pixels: n,
        source_rows,
        column_permutation,
        seed,
    }
}

/// Draws `m_pairs` distinct rows from `1..n_pixels` and one column
/// permutation, both from a ChaCha8 stream seeded with `seed`.
pub fn build_ensemble(n_pixels: usize, m_pairs: usize, seed: u64) -> Result<SensingEnsemble> {
    if n_pixels < 2 || !n_pixels.is_power_of_two() {
        return Err(Error::invalid(
            MODULE,
            "n_pixels",
            format!("must be a power of two ≥ 2, got {n_pixels}"),
        ));
    }
    if m_pairs == 0 || m_pairs > n_pixels - 1 {
        return Err(Error::invalid(
            MODULE,
            "m_pairs",
            format!("must lie in 1..={}, got {m_pairs}", n_pixels - 1),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<usize> = (1..n_pixels).collect();
    let (chosen, _) = candidates.partial_shuffle(&mut rng, m_pairs);
    let source_rows = chosen.to_vec();
    let mut perm: Vec<usize> = (0..n_pixels).collect();
    perm.shuffle(&mut rng);
    Ok(assemble(n_pixels, source_rows, perm, seed))
}

/// `ΔA = A⁺ − A⁻`, the column-permuted selected Hadamard rows.
pub fn differential_matrix(ensemble: &SensingEnsemble) -> SignMatrix {
    let n = ensemble.n_pixels();
    let mut data = Vec::with_capacity(ensemble.m_pairs() * n);
    for p in ensemble.pairs() {
        data.extend(p.difference());
    }
    SignMatrix {
        rows: ensemble.m_pairs(),
        cols: n,
        data,
    }
}
