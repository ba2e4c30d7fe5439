//! Level-set correlations on rank-one towers.
//!
//! A union of stage-`k` levels `A` reappears in the stage-`N` column at the
//! positions `o + ℓ`, one offset `o` per stage-`k` copy. Writing `S_N` for
//! those positions, the number of pairs `(i, i+d)` in `S_N × S_N` obeys
//!
//! ```text
//! C_N(d) = Σ_{j, j'} C_{N-1}(d − (o_{j'} − o_j)),   C_s(d) = 0 for |d| ≥ h_s,
//! ```
//!
//! over the copy offsets `o_j` of the step `N−1 → N`. Memoizing on
//! `(stage, lag)` keeps this cheap even when `h_N` is in the billions.
//! Points in the top `m` levels leave the stage-`N` column under `T^m`;
//! their mass is reported as the error bound.

use super::{
    check_finite_mass, ratio, try_cut_products, try_heights, LevelSet, RankOneError, RankOneSpec, Result,
};
use crate::bounded::BoundedValue;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::ops::RangeInclusive;

/// Exact counts behind one correlation: `hits` stage-`N` levels of `A` land
/// in `B` under `T^m` inside the column, `boundary` levels of `A` leave it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CorrelationCounts {
    pub stage: usize,
    pub shift: u128,
    pub hits: u128,
    pub boundary: u128,
    /// `Π_{i<N} p_i`: each stage-`N` level has width `1/denominator`.
    pub denominator: u128,
}

impl CorrelationCounts {
    pub fn lower(&self) -> BigRational {
        ratio(self.hits, self.denominator)
    }

    pub fn upper(&self) -> BigRational {
        ratio(self.hits + self.boundary, self.denominator)
    }

    /// Midpoint/radius form of `[lower, upper]`.
    pub fn to_bounded(&self) -> BoundedValue {
        let lo = self.lower().to_f64().unwrap_or(f64::NAN);
        let hi = self.upper().to_f64().unwrap_or(f64::NAN);
        if self.boundary == 0 {
            BoundedValue::exact(lo)
        } else {
            BoundedValue::from_interval(lo, hi)
        }
    }
}

/// Repeated correlation queries `μ(T^m A ∩ B)` at a fixed stage `N`.
pub struct Correlator {
    stage: usize,
    base_stage: usize,
    heights: Vec<u128>,
    offsets: Vec<Vec<u128>>,
    denominator: u128,
    a: Vec<u128>,
    b: Vec<u128>,
    memo: HashMap<(usize, i128), u128>,
}

impl Correlator {
    pub fn new(spec: &RankOneSpec, n: usize, a: &LevelSet, b: &LevelSet) -> Result<Self> {
        if n > spec.num_stages() {
            return Err(RankOneError::StageOutOfRange { requested: n, available: spec.num_stages() });
        }
        if a.stage > n || b.stage != a.stage {
            return Err(RankOneError::StageOutOfRange { requested: a.stage.max(b.stage), available: n });
        }
        a.validate(spec)?;
        b.validate(spec)?;
        check_finite_mass(spec, n)?;
        let heights = try_heights(spec)?;
        let products = try_cut_products(spec)?;
        let offsets = spec
            .stages()
            .iter()
            .enumerate()
            .map(|(s, st)| {
                let mut acc = 0u128;
                st.spacers
                    .iter()
                    .map(|&sp| {
                        let o = acc;
                        acc += heights[s] + sp as u128;
                        o
                    })
                    .collect()
            })
            .collect();
        Ok(Correlator {
            stage: n,
            base_stage: a.stage,
            heights,
            offsets,
            denominator: products[n],
            a: a.levels.iter().copied().collect(),
            b: b.levels.iter().copied().collect(),
            memo: HashMap::new(),
        })
    }

    pub fn height(&self) -> u128 {
        self.heights[self.stage]
    }

    /// `#{(i, i') ∈ S_A × S_B : i' − i = d}` at stage `s`.
    fn pairs(&mut self, s: usize, d: i128) -> u128 {
        if d.unsigned_abs() >= self.heights[s] {
            return 0;
        }
        if s == self.base_stage {
            return self
                .a
                .iter()
                .filter(|&&l| {
                    let t = l as i128 + d;
                    t >= 0 && self.b.binary_search(&(t as u128)).is_ok()
                })
                .count() as u128;
        }
        if let Some(&c) = self.memo.get(&(s, d)) {
            return c;
        }
        let below = self.heights[s - 1] as i128;
        let offs = self.offsets[s - 1].clone();
        let mut total = 0u128;
        for &oj in &offs {
            for &ok in &offs {
                let e = d - (ok as i128 - oj as i128);
                if e.abs() < below {
                    total += self.pairs(s - 1, e);
                }
            }
        }
        self.memo.insert((s, d), total);
        total
    }

    /// `#{i ∈ S_A : i < x}` at stage `s`.
    fn prefix_count(&self, s: usize, x: u128) -> u128 {
        if s == self.base_stage {
            return self.a.iter().filter(|&&l| l < x).count() as u128;
        }
        let h = self.heights[s - 1];
        let mut total = 0;
        for &o in &self.offsets[s - 1] {
            if o + h <= x {
                total += self.copies(s - 1);
            } else {
                if o < x {
                    total += self.prefix_count(s - 1, x - o);
                }
                break;
            }
        }
        total
    }

    fn copies(&self, s: usize) -> u128 {
        self.a.len() as u128
            * self.offsets[self.base_stage..s].iter().map(|o| o.len() as u128).product::<u128>()
    }

    pub fn counts(&mut self, m: u128) -> Result<CorrelationCounts> {
        let h = self.height();
        if m >= h {
            return Err(RankOneError::ShiftOutOfRange { shift: m, height: h });
        }
        let hits = self.pairs(self.stage, m as i128);
        let boundary = self.copies(self.stage) - self.prefix_count(self.stage, h - m);
        Ok(CorrelationCounts { stage: self.stage, shift: m, hits, boundary, denominator: self.denominator })
    }
}

/// `μ(T^m A ∩ A)` from the stage-`N` column.
pub fn level_correlation(spec: &RankOneSpec, n: usize, a: &LevelSet, m: u128) -> Result<BoundedValue> {
    Ok(Correlator::new(spec, n, a, a)?.counts(m)?.to_bounded())
}

fn measure_f64(spec: &RankOneSpec, a: &LevelSet) -> Result<f64> {
    Ok(a.measure(spec)?.to_f64().unwrap_or(f64::NAN))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientEstimate {
    pub j: i64,
    /// Value at the last time in the range.
    pub estimate: f64,
    /// max − min of the midpoint values across the time range.
    pub spread: f64,
    pub max_error_bound: f64,
    pub per_time: Vec<BoundedValue>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakLimitEstimate {
    pub set: String,
    pub stages: Vec<usize>,
    pub times: Vec<u128>,
    pub coefficients: Vec<CoefficientEstimate>,
}

impl WeakLimitEstimate {
    pub fn coefficient(&self, j: i64) -> Option<&CoefficientEstimate> {
        self.coefficients.iter().find(|c| c.j == j)
    }

    pub fn max_spread(&self) -> f64 {
        self.coefficients.iter().map(|c| c.spread).fold(0.0, f64::max)
    }
}

/// Estimates the weights of the weak limit of `T^{h_n}` along the stages in
/// `stages`: `a_j ≈ μ(T^{h_n + j} A ∩ A) / μ(A)` for `j = 0..=j_max`.
///
/// For a single level `A` of height index `k` with `j_max < h_k` the sets
/// `T^i A`, `0 ≤ i ≤ j_max`, are pairwise disjoint, so `a_j` is the weight
/// the limit operator puts on `U^{-j}` where `U f = f ∘ T⁻¹`.
pub fn weak_limit_estimate(
    spec: &RankOneSpec,
    a: &LevelSet,
    stages: RangeInclusive<usize>,
    j_max: u128,
) -> Result<WeakLimitEstimate> {
    if a.levels.len() != 1 {
        return Err(RankOneError::NotSingleLevel(a.levels.len()));
    }
    let n = spec.num_stages();
    if *stages.end() >= n {
        return Err(RankOneError::StageOutOfRange { requested: *stages.end(), available: n });
    }
    let h = try_heights(spec)?;
    if j_max >= h[a.stage] {
        return Err(RankOneError::ShiftOutOfRange { shift: j_max, height: h[a.stage] });
    }
    let mu = measure_f64(spec, a)?;
    let mut corr = Correlator::new(spec, n, a, a)?;
    let stage_list: Vec<usize> = stages.collect();
    let times: Vec<u128> = stage_list.iter().map(|&s| h[s]).collect();
    let mut coefficients = Vec::new();
    for j in 0..=j_max {
        let per_time = times
            .iter()
            .map(|&t| {
                let b = corr.counts(t + j)?.to_bounded();
                Ok(BoundedValue::new(b.value / mu, b.error_bound / mu))
            })
            .collect::<Result<Vec<_>>>()?;
        let (lo, hi) = per_time.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), b| (lo.min(b.value), hi.max(b.value)));
        coefficients.push(CoefficientEstimate {
            j: j as i64,
            estimate: per_time.last().map_or(f64::NAN, |b| b.value),
            spread: hi - lo,
            max_error_bound: per_time.iter().map(|b| b.error_bound).fold(0.0, f64::max),
            per_time,
        });
    }
    Ok(WeakLimitEstimate { set: a.description.clone(), stages: stage_list, times, coefficients })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SetWitness {
    pub set: String,
    pub best_shift: u128,
    /// `(value − error_bound) / μ(A)` at the best shift.
    pub ratio: f64,
    pub max_error_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RigidityScan {
    pub stage: usize,
    /// min over sets of max over shifts of `(value − error_bound)/μ(A)`.
    pub lower_bound: f64,
    pub max_error_bound: f64,
    pub per_set: Vec<SetWitness>,
}

/// Certified lower bound for the rigidity constant witnessed by `shifts`
/// on `sets`, computed from the stage-`N` column.
pub fn rigidity_scan(spec: &RankOneSpec, n: usize, shifts: &[u128], sets: &[LevelSet]) -> Result<RigidityScan> {
    if shifts.is_empty() || shifts.contains(&0) {
        return Err(RankOneError::NonPositiveShift);
    }
    if sets.is_empty() {
        return Err(RankOneError::EmptyLevelSet);
    }
    let per_set = sets
        .par_iter()
        .map(|a| {
            let mu = measure_f64(spec, a)?;
            let mut corr = Correlator::new(spec, n, a, a)?;
            let mut best = (0u128, f64::NEG_INFINITY);
            let mut max_err = 0.0f64;
            for &m in shifts {
                let b = corr.counts(m)?.to_bounded();
                max_err = max_err.max(b.error_bound);
                let r = b.lower() / mu;
                if r > best.1 {
                    best = (m, r);
                }
            }
            Ok(SetWitness { set: a.description.clone(), best_shift: best.0, ratio: best.1, max_error_bound: max_err })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RigidityScan {
        stage: n,
        lower_bound: per_set.iter().map(|w| w.ratio).fold(f64::INFINITY, f64::min),
        max_error_bound: per_set.iter().map(|w| w.max_error_bound).fold(0.0, f64::max),
        per_set,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{build_tower, chacon_spec, historical_chacon_spec, staircase_spec, Stage};
    use super::*;

    /// Oracle: materialize the stage-`N` column and count directly.
    fn brute(spec: &RankOneSpec, n: usize, a: &LevelSet, b: &LevelSet, m: u128) -> (u128, u128) {
        let t = build_tower(spec, n).unwrap();
        let trace = t.trace_to_stage(a.stage).unwrap();
        let in_a: Vec<bool> = trace.iter().map(|x| x.is_some_and(|l| a.levels.contains(&l))).collect();
        let in_b: Vec<bool> = trace.iter().map(|x| x.is_some_and(|l| b.levels.contains(&l))).collect();
        let h = in_a.len();
        let m = m as usize;
        let hits = (0..h - m).filter(|&i| in_a[i] && in_b[i + m]).count() as u128;
        let boundary = (h - m..h).filter(|&i| in_a[i]).count() as u128;
        (hits, boundary)
    }

    #[test]
    fn recursion_matches_materialized_column() {
        let specs = [chacon_spec(7), staircase_spec(4, 5), historical_chacon_spec(9)];
        for spec in &specs {
            let n = spec.num_stages();
            let h = try_heights(spec).unwrap();
            for k in [0, 1, 2] {
                let a = LevelSet::new(k, (0..h[k]).step_by(2), "even");
                let b = LevelSet::new(k, (0..h[k]).filter(|l| l % 3 != 1), "not 1 mod 3");
                let mut c = Correlator::new(spec, n, &a, &b).unwrap();
                for m in [0, 1, 2, h[n - 2], h[n - 2] + 1, h[n - 1] - 1, h[n] - 1] {
                    let counts = c.counts(m).unwrap();
                    assert_eq!((counts.hits, counts.boundary), brute(spec, n, &a, &b, m), "{spec:?} k={k} m={m}");
                }
            }
        }
    }

    #[test]
    fn zero_shift_is_exact_measure() {
        let spec = chacon_spec(6);
        let a = LevelSet::new(2, [0, 3, 7, 12], "four levels");
        let v = level_correlation(&spec, 6, &a, 0).unwrap();
        assert!(v.exact);
        assert_eq!(v.error_bound, 0.0);
        assert_eq!(v.value, a.measure(&spec).unwrap().to_f64().unwrap());
    }

    #[test]
    fn in_tower_mass_identity() {
        let spec = historical_chacon_spec(7);
        let n = 7;
        let whole = LevelSet::whole_stage(&spec, n).unwrap();
        let h = try_heights(&spec).unwrap()[n];
        for m in [0, 1, 5, 40, h - 1] {
            let c = Correlator::new(&spec, n, &whole, &whole).unwrap().counts(m).unwrap();
            assert_eq!(c.hits, h - m);
            assert_eq!(c.boundary, m);
            assert_eq!(c.lower(), ratio(h - m, 128));
        }
    }

    #[test]
    fn chacon_first_return_is_at_least_a_third() {
        let spec = chacon_spec(10);
        let k = 3;
        let h = try_heights(&spec).unwrap();
        let a = LevelSet::whole_stage(&spec, k).unwrap();
        let mu = a.measure(&spec).unwrap().to_f64().unwrap();
        let v = level_correlation(&spec, k + 6, &a, h[k]).unwrap();
        assert!(v.value >= mu / 3.0 - v.error_bound);
    }

    #[test]
    fn staircase_five_first_return() {
        let spec = staircase_spec(5, 9);
        let k = 2;
        let h = try_heights(&spec).unwrap();
        let a = LevelSet::whole_stage(&spec, k).unwrap();
        let mu = a.measure(&spec).unwrap().to_f64().unwrap();
        let v = level_correlation(&spec, k + 5, &a, h[k]).unwrap();
        assert!(v.value >= mu / 5.0 - v.error_bound);
    }

    #[test]
    fn shift_guards() {
        let spec = chacon_spec(4);
        let a = LevelSet::single(1, 0);
        assert!(matches!(level_correlation(&spec, 4, &a, 121), Err(RankOneError::ShiftOutOfRange { .. })));
        assert!(matches!(level_correlation(&spec, 5, &a, 1), Err(RankOneError::StageOutOfRange { .. })));
        assert!(matches!(
            rigidity_scan(&spec, 4, &[0, 4], &[a.clone()]),
            Err(RankOneError::NonPositiveShift)
        ));
        assert!(matches!(
            weak_limit_estimate(&spec, &LevelSet::new(1, [0, 1], ""), 1..=2, 0),
            Err(RankOneError::NotSingleLevel(2))
        ));
    }

    fn near(est: &WeakLimitEstimate, j: i64, target: f64, tol: f64) -> bool {
        let c = est.coefficient(j).unwrap();
        let last = c.per_time.last().unwrap();
        (c.estimate - target).abs() <= last.error_bound + tol
    }

    #[test]
    fn pure_doubling_is_rigid() {
        let spec = RankOneSpec::new(vec![Stage { p: 2, spacers: vec![0, 0] }; 14], None).unwrap();
        let est = weak_limit_estimate(&spec, &LevelSet::single(6, 5), 8..=10, 3).unwrap();
        assert!(near(&est, 0, 1.0, 1e-12));
        for j in 1..=3 {
            assert!(near(&est, j, 0.0, 1e-12));
        }
    }

    #[test]
    fn spacer_over_first_of_two_is_rigid_one_step_late() {
        // Column words B S B, BSBSBSB, ...: T^{h_n + 1} → Id.
        let spec = RankOneSpec::new(vec![Stage { p: 2, spacers: vec![1, 0] }; 16], None).unwrap();
        let est = weak_limit_estimate(&spec, &LevelSet::single(4, 3), 8..=11, 2).unwrap();
        assert!(near(&est, 0, 0.0, 1e-12));
        assert!(near(&est, 1, 1.0, 1e-12));
        assert!(near(&est, 2, 0.0, 1e-12));
    }

    #[test]
    fn staircase_four_flat_front_window() {
        let spec = staircase_spec(4, 12);
        let est = weak_limit_estimate(&spec, &LevelSet::single(4, 7), 6..=8, 3).unwrap();
        for j in 0..=2 {
            assert!(near(&est, j, 1.0 / 3.0, 0.01), "{:?}", est.coefficient(j));
        }
        assert!(near(&est, 3, 0.0, 0.01));
    }

    #[test]
    fn infinite_mass_is_refused() {
        let spec = RankOneSpec::new(vec![Stage { p: 2, spacers: vec![0, 5000] }; 3], None).unwrap();
        assert!(matches!(
            level_correlation(&spec, 3, &LevelSet::single(0, 0), 1),
            Err(RankOneError::InfiniteMeasure { .. })
        ));
    }
}
