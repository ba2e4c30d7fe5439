//! Rank-one cutting-and-stacking transformations.
//!
//! Stage `k → k+1` cuts the stage-`k` column into `p_k` equal subcolumns,
//! puts `a_j^{(k)}` spacer levels above subcolumn `j` and stacks the
//! subcolumns left to right, so that
//! `h_{k+1} = p_k·h_k + Σ_j a_j^{(k)}` and every stage-`N` level has width
//! `1/Π_{i<N} p_i`.
//!
//! Widths and masses are exact rationals. Correlations `μ(T^m A ∩ A)` for
//! unions of levels are computed from the concatenation structure without
//! materializing the column (see [`correlation`]).

pub mod correlation;
mod parse;

pub use correlation::{
    level_correlation, rigidity_scan, weak_limit_estimate, CoefficientEstimate, CorrelationCounts,
    Correlator, RigidityScan, SetWitness, WeakLimitEstimate,
};
pub use parse::parse_rank_one;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// Total mass beyond which a schedule is treated as an infinite-measure
/// construction and refused by the correlation operations.
pub const MASS_LIMIT: f64 = 1.0e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankOneError {
    #[error("invalid rank-one schedule: {0}")]
    InvalidSpec(String),
    #[error("stage {requested} out of range (schedule has {available} stages)")]
    StageOutOfRange { requested: usize, available: usize },
    #[error("shift {shift} out of range for tower height {height}")]
    ShiftOutOfRange { shift: u128, height: u128 },
    #[error("shifts must be positive")]
    NonPositiveShift,
    #[error("level {level} is not below stage height {height}")]
    InvalidLevel { level: u128, height: u128 },
    #[error("level set is empty")]
    EmptyLevelSet,
    #[error("weak-limit estimation needs a single level, got {0}")]
    NotSingleLevel(usize),
    #[error("tower arithmetic overflowed at stage {0}")]
    Overflow(usize),
    #[error("total mass {mass} exceeds {limit}: spacer mass diverges")]
    InfiniteMeasure { mass: f64, limit: f64 },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl RankOneError {
    pub fn name(&self) -> &'static str {
        match self {
            RankOneError::InvalidSpec(_) => "InvalidSpec",
            RankOneError::StageOutOfRange { .. } => "StageOutOfRange",
            RankOneError::ShiftOutOfRange { .. } => "ShiftOutOfRange",
            RankOneError::NonPositiveShift => "NonPositiveShift",
            RankOneError::InvalidLevel { .. } => "InvalidLevel",
            RankOneError::EmptyLevelSet => "EmptyLevelSet",
            RankOneError::NotSingleLevel(_) => "NotSingleLevel",
            RankOneError::Overflow(_) => "Overflow",
            RankOneError::InfiniteMeasure { .. } => "InfiniteMeasure",
            RankOneError::Parse { .. } => "ParseError",
        }
    }
}

pub type Result<T> = std::result::Result<T, RankOneError>;

/// One cutting step: `p` subcolumns, `spacers[j]` levels above subcolumn `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Stage {
    pub p: u64,
    pub spacers: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankOneSpec {
    stages: Vec<Stage>,
    pub name: Option<String>,
}

impl RankOneSpec {
    pub fn new(stages: Vec<Stage>, name: Option<String>) -> Result<Self> {
        if stages.is_empty() {
            return Err(RankOneError::InvalidSpec("no stages".into()));
        }
        for (k, s) in stages.iter().enumerate() {
            if s.p < 2 {
                return Err(RankOneError::InvalidSpec(format!("stage {k}: p = {} < 2", s.p)));
            }
            if s.spacers.len() as u64 != s.p {
                return Err(RankOneError::InvalidSpec(format!(
                    "stage {k}: {} spacer counts for p = {}",
                    s.spacers.len(),
                    s.p
                )));
            }
        }
        Ok(RankOneSpec { stages, name })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(n) = &self.name {
            s.push_str(&format!("# {n}\n"));
        }
        for st in &self.stages {
            let sp: Vec<String> = st.spacers.iter().map(u64::to_string).collect();
            s.push_str(&format!("{}: {}\n", st.p, sp.join(" ")));
        }
        s
    }
}

fn repeated(stage: Stage, k: usize, name: String) -> RankOneSpec {
    RankOneSpec::new(vec![stage; k.max(1)], Some(name)).expect("preset is valid")
}

/// Chacon map: three subcolumns, one spacer over the middle one.
pub fn chacon_spec(k: usize) -> RankOneSpec {
    repeated(Stage { p: 3, spacers: vec![0, 1, 0] }, k, "chacon".into())
}

/// Staircase with constant cutting parameter `p`: spacers `0, 1, …, p−2, 0`.
pub fn staircase_spec(p: u64, k: usize) -> RankOneSpec {
    assert!(p >= 2, "staircase needs p >= 2");
    let mut spacers: Vec<u64> = (0..p - 1).collect();
    spacers.push(0);
    repeated(Stage { p, spacers }, k, format!("staircase:{p}"))
}

/// Two-cut Chacon map with a single spacer per stage, placed on top of the
/// second subcolumn (column words `B B S`, `BBSBBSS`, …).
pub fn historical_chacon_spec(k: usize) -> RankOneSpec {
    repeated(Stage { p: 2, spacers: vec![0, 1] }, k, "historical".into())
}

/// `h_0, …, h_K` for a `K`-stage schedule.
pub fn heights(spec: &RankOneSpec) -> Vec<u128> {
    try_heights(spec).expect("heights overflow u128")
}

pub(crate) fn try_heights(spec: &RankOneSpec) -> Result<Vec<u128>> {
    let mut h = vec![1u128];
    for (k, s) in spec.stages.iter().enumerate() {
        let spacers: u128 = s.spacers.iter().map(|&a| a as u128).sum();
        let next = h[k]
            .checked_mul(s.p as u128)
            .and_then(|v| v.checked_add(spacers))
            .ok_or(RankOneError::Overflow(k + 1))?;
        h.push(next);
    }
    Ok(h)
}

/// `Π_{i<N} p_i` for `N = 0..=K`.
pub(crate) fn try_cut_products(spec: &RankOneSpec) -> Result<Vec<u128>> {
    let mut out = vec![1u128];
    for (k, s) in spec.stages.iter().enumerate() {
        out.push(out[k].checked_mul(s.p as u128).ok_or(RankOneError::Overflow(k + 1))?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LevelKind {
    /// Descends from the base interval `B_0`.
    B,
    /// A spacer added at some stage.
    S,
}

/// Materialized stage-`N` column.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tower {
    pub stage: usize,
    pub height: u128,
    #[serde(serialize_with = "ser_ratio")]
    pub level_width: BigRational,
    #[serde(serialize_with = "ser_ratio")]
    pub total_mass: BigRational,
    pub column_word: Vec<LevelKind>,
    /// `origin[i]` is the stage at which level `i` first appeared
    /// (0 for `B` levels, `k+1` for spacers added during the step `k → k+1`).
    #[serde(skip)]
    pub origin: Vec<usize>,
    #[serde(skip)]
    pub spec: RankOneSpec,
}

fn ser_ratio<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(r)
}

pub fn ratio(num: u128, den: u128) -> BigRational {
    BigRational::new(BigUint::from(num).into(), BigUint::from(den).into())
}

impl Tower {
    pub fn word_string(&self) -> String {
        self.column_word
            .iter()
            .map(|k| match k {
                LevelKind::B => 'B',
                LevelKind::S => 'S',
            })
            .collect()
    }

    pub fn base_count(&self) -> usize {
        self.column_word.iter().filter(|&&k| k == LevelKind::B).count()
    }

    /// For each stage-`N` level, the stage-`k` level it traces back to, or
    /// `None` if it is a spacer added after stage `k`.
    pub fn trace_to_stage(&self, k: usize) -> Result<Vec<Option<u128>>> {
        if k > self.stage {
            return Err(RankOneError::StageOutOfRange { requested: k, available: self.stage });
        }
        let mut map: Vec<Option<u128>> = (0..heights_upto(&self.spec, k)?).map(Some).collect();
        for s in &self.spec.stages[k..self.stage] {
            let mut next = Vec::new();
            for &a in &s.spacers {
                next.extend_from_slice(&map);
                next.extend(std::iter::repeat_n(None, a as usize));
            }
            map = next;
        }
        Ok(map)
    }
}

fn heights_upto(spec: &RankOneSpec, k: usize) -> Result<u128> {
    Ok(try_heights(spec)?[k])
}

pub fn build_tower(spec: &RankOneSpec, n: usize) -> Result<Tower> {
    if n > spec.num_stages() {
        return Err(RankOneError::StageOutOfRange { requested: n, available: spec.num_stages() });
    }
    let mut word = vec![LevelKind::B];
    let mut origin = vec![0usize];
    for (k, s) in spec.stages[..n].iter().enumerate() {
        let mut next = Vec::new();
        let mut next_origin = Vec::new();
        for &a in &s.spacers {
            next.extend_from_slice(&word);
            next_origin.extend_from_slice(&origin);
            next.extend(std::iter::repeat_n(LevelKind::S, a as usize));
            next_origin.extend(std::iter::repeat_n(k + 1, a as usize));
        }
        word = next;
        origin = next_origin;
    }
    let products = try_cut_products(spec)?;
    let h = word.len() as u128;
    Ok(Tower {
        stage: n,
        height: h,
        level_width: ratio(1, products[n]),
        total_mass: ratio(h, products[n]),
        column_word: word,
        origin,
        spec: spec.clone(),
    })
}

/// Exact `h_N / Π_{i<N} p_i` without building the column.
pub fn total_mass(spec: &RankOneSpec, n: usize) -> Result<BigRational> {
    if n > spec.num_stages() {
        return Err(RankOneError::StageOutOfRange { requested: n, available: spec.num_stages() });
    }
    Ok(ratio(try_heights(spec)?[n], try_cut_products(spec)?[n]))
}

pub(crate) fn check_finite_mass(spec: &RankOneSpec, n: usize) -> Result<()> {
    let mass = total_mass(spec, n)?.to_f64().unwrap_or(f64::INFINITY);
    if mass > MASS_LIMIT {
        return Err(RankOneError::InfiniteMeasure { mass, limit: MASS_LIMIT });
    }
    Ok(())
}

/// A union of levels of the stage-`k` column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelSet {
    pub stage: usize,
    pub levels: BTreeSet<u128>,
    pub description: String,
}

impl LevelSet {
    pub fn new(stage: usize, levels: impl IntoIterator<Item = u128>, description: impl Into<String>) -> Self {
        LevelSet { stage, levels: levels.into_iter().collect(), description: description.into() }
    }

    pub fn single(stage: usize, level: u128) -> Self {
        Self::new(stage, [level], format!("level {level} of stage {stage}"))
    }

    pub fn whole_stage(spec: &RankOneSpec, stage: usize) -> Result<Self> {
        let h = level_height(spec, stage)?;
        Ok(Self::new(stage, 0..h, format!("all levels of stage {stage}")))
    }

    pub fn validate(&self, spec: &RankOneSpec) -> Result<()> {
        let h = level_height(spec, self.stage)?;
        if self.levels.is_empty() {
            return Err(RankOneError::EmptyLevelSet);
        }
        if let Some(&l) = self.levels.iter().next_back().filter(|&&l| l >= h) {
            return Err(RankOneError::InvalidLevel { level: l, height: h });
        }
        Ok(())
    }

    /// `μ(A) = |A| / Π_{i<k} p_i`.
    pub fn measure(&self, spec: &RankOneSpec) -> Result<BigRational> {
        let products = try_cut_products(spec)?;
        Ok(ratio(self.levels.len() as u128, products[self.stage]))
    }
}

fn level_height(spec: &RankOneSpec, stage: usize) -> Result<u128> {
    if stage > spec.num_stages() {
        return Err(RankOneError::StageOutOfRange { requested: stage, available: spec.num_stages() });
    }
    Ok(try_heights(spec)?[stage])
}

impl fmt::Display for RankOneSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_text().trim_end())
    }
}

/// Resolves `chacon`, `staircase:<p>` and `historical` to `k`-stage schedules.
pub fn preset(name: &str, k: usize) -> Option<RankOneSpec> {
    match name {
        "chacon" => Some(chacon_spec(k)),
        "historical" => Some(historical_chacon_spec(k)),
        _ => {
            let p: u64 = name.strip_prefix("staircase:")?.parse().ok()?;
            (p >= 2).then(|| staircase_spec(p, k))
        }
    }
}
