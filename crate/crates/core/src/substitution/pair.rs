use super::{
    composition_matrix, fixed_point_prefix, perron, Letter, Result, Substitution, SubstitutionError,
};
use serde::{Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

/// A 2-block `ab`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Block(pub Letter, pub Letter);

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 < 10 && self.1 < 10 {
            write!(f, "{}{}", self.0, self.1)
        } else {
            write!(f, "({},{})", self.0, self.1)
        }
    }
}

impl Serialize for Block {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// The substitution induced on admissible 2-blocks: if `ξ(a)ξ(b) = y₀y₁…`
/// then `ab ↦ (y₀y₁)(y₁y₂)…` with `|ξ(a)|` blocks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairSubstitution {
    pub block_alphabet: Vec<Block>,
    /// Images as indices into `block_alphabet`.
    pub images: Vec<Vec<usize>>,
    pub base: Substitution,
}

impl PairSubstitution {
    pub fn index_of(&self, block: Block) -> Option<usize> {
        self.block_alphabet.binary_search(&block).ok()
    }

    pub fn image_blocks(&self, block: Block) -> Option<Vec<Block>> {
        let i = self.index_of(block)?;
        Some(self.images[i].iter().map(|&j| self.block_alphabet[j]).collect())
    }

    /// The pair substitution as an ordinary substitution over block indices.
    pub fn as_substitution(&self) -> Substitution {
        Substitution::new(self.images.clone()).expect("block images are admissible by construction")
    }
}

fn block_image(sub: &Substitution, Block(a, b): Block) -> Vec<Block> {
    let mut y = sub.image(a).to_vec();
    y.extend_from_slice(sub.image(b));
    (0..sub.image(a).len()).map(|i| Block(y[i], y[i + 1])).collect()
}

pub fn pair_substitution(sub: &Substitution) -> Result<PairSubstitution> {
    if !sub.is_primitive() {
        return Err(SubstitutionError::NotPrimitive);
    }
    if !sub.is_fixed_point_capable() {
        return Err(SubstitutionError::NotFixedPointCapable);
    }
    let k = sub.alphabet_size();
    let seed = fixed_point_prefix(sub, 2 * k * k + 2)?;
    let mut found: BTreeSet<Block> = seed.windows(2).map(|w| Block(w[0], w[1])).collect();
    let mut queue: VecDeque<Block> = found.iter().copied().collect();
    while let Some(block) = queue.pop_front() {
        for b in block_image(sub, block) {
            if found.insert(b) {
                queue.push_back(b);
            }
        }
    }
    let block_alphabet: Vec<Block> = found.into_iter().collect();
    let images = block_alphabet
        .iter()
        .map(|&blk| {
            block_image(sub, blk)
                .into_iter()
                .map(|b| block_alphabet.binary_search(&b).expect("closure contains every image"))
                .collect()
        })
        .collect();
    Ok(PairSubstitution { block_alphabet, images, base: sub.clone() })
}

/// Frequencies of admissible 2-blocks: the ℓ₁-normalized Perron vector of
/// the pair substitution's composition matrix.
pub fn block_frequencies(sub: &Substitution, tol: f64) -> Result<BTreeMap<Block, f64>> {
    let pair = pair_substitution(sub)?;
    let data = perron(&composition_matrix(&pair.as_substitution()), tol)?;
    Ok(pair.block_alphabet.iter().copied().zip(data.letter_freq).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RigidityConstant {
    /// Largest cylinder measure `μ[aa]`.
    pub r: f64,
    /// `‖v(a_r)‖₁`.
    pub rho: f64,
    pub alpha: f64,
    pub witness_letter: Letter,
}

pub fn rigidity_constant(sub: &Substitution, tol: f64) -> Result<RigidityConstant> {
    let freqs = block_frequencies(sub, tol)?;
    let data = perron(&composition_matrix(sub), tol)?;
    let diag: Vec<f64> = (0..sub.alphabet_size())
        .map(|a| freqs.get(&Block(a, a)).copied().unwrap_or(0.0))
        .collect();
    let r = diag.iter().copied().fold(0.0, f64::max);
    // Values within rounding of the max count as ties; smallest index wins.
    let witness_letter = diag.iter().position(|&f| f >= r - 10.0 * tol.max(f64::EPSILON)).unwrap_or(0);
    let rho = data.limit_norm(witness_letter);
    Ok(RigidityConstant { r, rho, alpha: r * rho, witness_letter })
}

/// Fraction of positions `p < prefix_len − shift − |block|` of the fixed
/// point at which `block` occurs both at `p` and at `p + shift`.
pub fn empirical_correlation(
    sub: &Substitution,
    block: &[Letter],
    shift: usize,
    prefix_len: usize,
) -> Result<f64> {
    if block.is_empty() {
        return Err(SubstitutionError::Invalid("empty block".into()));
    }
    if prefix_len <= shift + block.len() {
        return Err(SubstitutionError::PrefixTooShort { prefix_len, shift, block_len: block.len() });
    }
    let u = fixed_point_prefix(sub, prefix_len)?;
    let positions = prefix_len - shift - block.len();
    let b = block.len();
    let hits = (0..positions)
        .filter(|&p| &u[p..p + b] == block && &u[p + shift..p + shift + b] == block)
        .count();
    Ok(hits as f64 / positions as f64)
}
