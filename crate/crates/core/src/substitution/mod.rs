//! Substitution systems on a finite alphabet `{0, …, k-1}`.
//!
//! A [`Substitution`] maps each letter to a nonempty word. When the image
//! of `0` starts with `0` and the iterates `ξⁿ(0)` keep growing, the words
//! `ξⁿ(0)` are prefixes of a one-sided fixed point `u`; for primitive
//! substitutions the orbit closure of `u` is uniquely ergodic and every
//! cylinder frequency is readable off a Perron eigenvector.

mod pair;
mod parse;
mod perron;

pub use pair::{
    block_frequencies, empirical_correlation, pair_substitution, rigidity_constant, Block,
    PairSubstitution, RigidityConstant,
};
pub use parse::parse_substitution;
pub use perron::{perron, PerronData, DEFAULT_TOL, MAX_ITERATIONS};

use serde::Serialize;
use std::fmt;
use thiserror::Error;

pub type Letter = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubstitutionError {
    #[error("invalid substitution: {0}")]
    Invalid(String),
    #[error("substitution is not primitive")]
    NotPrimitive,
    #[error("power iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("substitution has no fixed point starting with 0 (image of 0 must start with 0 and iterates must grow)")]
    NotFixedPointCapable,
    #[error("prefix of length {prefix_len} is too short for shift {shift} and block length {block_len}")]
    PrefixTooShort { prefix_len: usize, shift: usize, block_len: usize },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl SubstitutionError {
    /// Stable variant name for machine-readable error records.
    pub fn name(&self) -> &'static str {
        match self {
            SubstitutionError::Invalid(_) => "InvalidSubstitution",
            SubstitutionError::NotPrimitive => "NotPrimitive",
            SubstitutionError::NoConvergence { .. } => "NoConvergence",
            SubstitutionError::NotFixedPointCapable => "NotFixedPointCapable",
            SubstitutionError::PrefixTooShort { .. } => "PrefixTooShort",
            SubstitutionError::Parse { .. } => "ParseError",
        }
    }
}

pub type Result<T> = std::result::Result<T, SubstitutionError>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Substitution {
    images: Vec<Vec<Letter>>,
}

impl Substitution {
    pub fn new(images: Vec<Vec<Letter>>) -> Result<Self> {
        let k = images.len();
        if k == 0 {
            return Err(SubstitutionError::Invalid("empty alphabet".into()));
        }
        for (a, w) in images.iter().enumerate() {
            if w.is_empty() {
                return Err(SubstitutionError::Invalid(format!("image of {a} is empty")));
            }
            if let Some(&b) = w.iter().find(|&&b| b >= k) {
                return Err(SubstitutionError::Invalid(format!(
                    "image of {a} uses letter {b} outside alphabet of size {k}"
                )));
            }
        }
        Ok(Substitution { images })
    }

    /// `0→02, 1→32, 2→01, 3→31`.
    pub fn rudin_shapiro() -> Self {
        Substitution { images: vec![vec![0, 2], vec![3, 2], vec![0, 1], vec![3, 1]] }
    }

    /// `0→001, 1→122, 2→210`, a length-3 substitution with Lebesgue
    /// spectrum of multiplicity 2 off the eigenfunctions.
    pub fn three_letter() -> Self {
        Substitution { images: vec![vec![0, 0, 1], vec![1, 2, 2], vec![2, 1, 0]] }
    }

    /// `0→01, 1→0`.
    pub fn fibonacci() -> Self {
        Substitution { images: vec![vec![0, 1], vec![0]] }
    }

    pub fn alphabet_size(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[Vec<Letter>] {
        &self.images
    }

    pub fn image(&self, a: Letter) -> &[Letter] {
        &self.images[a]
    }

    pub fn apply(&self, word: &[Letter]) -> Vec<Letter> {
        word.iter().flat_map(|&a| self.images[a].iter().copied()).collect()
    }

    /// `Some(q)` when every image has length `q`.
    pub fn constant_length(&self) -> Option<usize> {
        let q = self.images[0].len();
        self.images.iter().all(|w| w.len() == q).then_some(q)
    }

    /// `|ξⁿ(0)|` for `n = 0..=max_n`, saturating instead of overflowing.
    pub fn iterate_lengths(&self, max_n: usize) -> Vec<u128> {
        // |ξⁿ(a)| = Σ_b M^n-count; track length vectors per letter.
        let k = self.alphabet_size();
        let mut lens = vec![1u128; k];
        let mut out = vec![1u128];
        for _ in 0..max_n {
            lens = self
                .images
                .iter()
                .map(|w| w.iter().fold(0u128, |acc, &b| acc.saturating_add(lens[b])))
                .collect();
            out.push(lens[0]);
        }
        out
    }

    pub fn is_fixed_point_capable(&self) -> bool {
        if self.images[0][0] != 0 {
            return false;
        }
        self.iterate_lengths(5).windows(2).all(|w| w[1] > w[0])
    }

    pub fn is_primitive(&self) -> bool {
        composition_matrix(self).is_primitive()
    }

    pub fn to_text(&self) -> String {
        let digits = self.alphabet_size() <= 10;
        let mut s = String::new();
        for (a, w) in self.images.iter().enumerate() {
            let body: Vec<String> = w.iter().map(|b| b.to_string()).collect();
            let sep = if digits { "" } else { " " };
            s.push_str(&format!("{a} -> {}\n", body.join(sep)));
        }
        s
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_text().trim_end())
    }
}

/// Letter-count matrix: entry `(i, j)` is the number of `i`s in `ξ(j)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CompositionMatrix {
    size: usize,
    entries: Vec<u64>,
}

impl CompositionMatrix {
    pub fn from_rows(rows: Vec<Vec<u64>>) -> Self {
        let size = rows.len();
        assert!(rows.iter().all(|r| r.len() == size), "matrix must be square");
        CompositionMatrix { size, entries: rows.into_iter().flatten().collect() }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.size + j]
    }

    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.size).map(|i| self.get(i, j)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.entries.chunks(self.size).map(|r| r.to_vec()).collect()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        (0..self.size).map(|j| self.column(j).iter().sum()).collect()
    }

    /// Some power `Mⁿ` with `n ≤ k² − 2k + 2` (Wielandt) is entrywise positive.
    pub fn is_primitive(&self) -> bool {
        let k = self.size;
        let bound = k * k + 2 - 2 * k;
        let pattern: Vec<bool> = self.entries.iter().map(|&e| e > 0).collect();
        let mut power = pattern.clone();
        for n in 1..=bound {
            if power.iter().all(|&p| p) {
                return true;
            }
            if n == bound {
                break;
            }
            power = bool_mul(&power, &pattern, k);
        }
        false
    }

    pub(crate) fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.entries
            .chunks(self.size)
            .map(|row| row.iter().zip(x).map(|(&m, &v)| m as f64 * v).sum())
            .collect()
    }

    pub(crate) fn transpose(&self) -> CompositionMatrix {
        let k = self.size;
        let mut entries = vec![0; k * k];
        for i in 0..k {
            for j in 0..k {
                entries[j * k + i] = self.get(i, j);
            }
        }
        CompositionMatrix { size: k, entries }
    }
}

fn bool_mul(a: &[bool], b: &[bool], k: usize) -> Vec<bool> {
    let mut out = vec![false; k * k];
    for i in 0..k {
        for l in 0..k {
            if a[i * k + l] {
                for j in 0..k {
                    out[i * k + j] |= b[l * k + j];
                }
            }
        }
    }
    out
}

pub fn composition_matrix(sub: &Substitution) -> CompositionMatrix {
    let k = sub.alphabet_size();
    let mut entries = vec![0u64; k * k];
    for (j, w) in sub.images().iter().enumerate() {
        for &i in w {
            entries[i * k + j] += 1;
        }
    }
    CompositionMatrix { size: k, entries }
}

pub fn is_primitive(sub: &Substitution) -> bool {
    sub.is_primitive()
}

/// First `length` symbols of the fixed point beginning with `ξⁿ(0)`.
pub fn fixed_point_prefix(sub: &Substitution, length: usize) -> Result<Vec<Letter>> {
    if !sub.is_fixed_point_capable() {
        return Err(SubstitutionError::NotFixedPointCapable);
    }
    let mut word = vec![0];
    while word.len() < length {
        // ξ(w[..n]) is a prefix of ξ(w); truncation keeps the work linear.
        let mut next = Vec::with_capacity(length.min(word.len() * sub.images().iter().map(Vec::len).max().unwrap_or(1)));
        for &a in &word {
            next.extend_from_slice(sub.image(a));
            if next.len() >= length {
                break;
            }
        }
        word = next;
    }
    word.truncate(length);
    Ok(word)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub(images: &[&[Letter]]) -> Substitution {
        Substitution::new(images.iter().map(|w| w.to_vec()).collect()).unwrap()
    }

    #[test]
    fn rejects_bad_images() {
        assert!(matches!(Substitution::new(vec![]), Err(SubstitutionError::Invalid(_))));
        assert!(matches!(Substitution::new(vec![vec![0], vec![]]), Err(SubstitutionError::Invalid(_))));
        assert!(matches!(Substitution::new(vec![vec![0, 2], vec![1]]), Err(SubstitutionError::Invalid(_))));
    }

    #[test]
    fn rudin_shapiro_matrix_columns() {
        let m = composition_matrix(&Substitution::rudin_shapiro());
        assert_eq!(m.column(0), vec![1, 0, 1, 0]);
        assert_eq!(m.column(1), vec![0, 0, 1, 1]);
        assert_eq!(m.column(2), vec![1, 1, 0, 0]);
        assert_eq!(m.column(3), vec![0, 1, 0, 1]);
    }

    #[test]
    fn three_letter_matrix_columns() {
        let m = composition_matrix(&Substitution::three_letter());
        assert_eq!(m.column(0), vec![2, 1, 0]);
        assert_eq!(m.column(1), vec![0, 1, 2]);
        assert_eq!(m.column(2), vec![1, 1, 1]);
        assert_eq!(m.column_sums(), vec![3, 3, 3]);
    }

    #[test]
    fn single_letter_matrix() {
        let m = composition_matrix(&sub(&[&[0]]));
        assert_eq!(m.rows(), vec![vec![1]]);
        assert!(m.is_primitive());
    }

    #[test]
    fn primitivity() {
        assert!(is_primitive(&Substitution::rudin_shapiro()));
        assert!(is_primitive(&Substitution::fibonacci()));
        assert!(is_primitive(&Substitution::three_letter()));
        assert!(!is_primitive(&sub(&[&[0, 0], &[1, 1]])));
        // Irreducible but periodic: 0→1, 1→0 never has a positive power.
        assert!(!is_primitive(&sub(&[&[1], &[0]])));
    }

    /// Independent oracle: integer matrix powers up to the Wielandt bound.
    #[test]
    fn primitivity_matches_integer_power_oracle() {
        fn oracle(m: &CompositionMatrix) -> bool {
            let k = m.size();
            let rows = m.rows();
            let mut p = rows.clone();
            for _ in 0..(k * k) {
                if p.iter().flatten().all(|&e| e > 0) {
                    return true;
                }
                let mut q = vec![vec![0u64; k]; k];
                for i in 0..k {
                    for l in 0..k {
                        for j in 0..k {
                            q[i][j] = (q[i][j] + p[i][l] * rows[l][j]).min(1);
                        }
                    }
                }
                p = q;
            }
            false
        }
        let cases = [
            Substitution::rudin_shapiro(),
            Substitution::three_letter(),
            Substitution::fibonacci(),
            sub(&[&[0, 1], &[2], &[0]]),
            sub(&[&[1], &[2], &[0]]),
            sub(&[&[0, 0], &[1, 1]]),
            sub(&[&[1], &[2], &[0, 1]]),
        ];
        for s in &cases {
            let m = composition_matrix(s);
            assert_eq!(m.is_primitive(), oracle(&m), "{s}");
        }
    }

    #[test]
    fn fixed_point_prefixes() {
        let rs = Substitution::rudin_shapiro();
        let p: String = fixed_point_prefix(&rs, 8).unwrap().iter().map(|d| d.to_string()).collect();
        assert_eq!(p, "02010232");
        let t = Substitution::three_letter();
        let p: String = fixed_point_prefix(&t, 9).unwrap().iter().map(|d| d.to_string()).collect();
        assert_eq!(p, "001001122");
        assert_eq!(fixed_point_prefix(&Substitution::fibonacci(), 1).unwrap(), vec![0]);
        assert_eq!(fixed_point_prefix(&rs, 0).unwrap(), Vec::<Letter>::new());
    }

    #[test]
    fn prefix_matches_direct_iteration() {
        let f = Substitution::fibonacci();
        let mut w = vec![0];
        for _ in 0..10 {
            w = f.apply(&w);
        }
        assert_eq!(fixed_point_prefix(&f, w.len()).unwrap(), w);
    }

    #[test]
    fn fixed_point_capability() {
        assert!(Substitution::rudin_shapiro().is_fixed_point_capable());
        assert!(!sub(&[&[0]]).is_fixed_point_capable());
        assert!(!sub(&[&[1, 0], &[0, 1]]).is_fixed_point_capable());
        assert_eq!(
            fixed_point_prefix(&sub(&[&[1, 0], &[0, 1]]), 4),
            Err(SubstitutionError::NotFixedPointCapable)
        );
    }

    #[test]
    fn iterate_lengths_constant_length() {
        assert_eq!(Substitution::three_letter().iterate_lengths(3), vec![1, 3, 9, 27]);
        assert_eq!(Substitution::fibonacci().iterate_lengths(5), vec![1, 2, 3, 5, 8, 13]);
    }
}
