//! The dyadic odometer, the Mathew-Nadkarni cocycle and the skew product
//! `T_φ(x, g) = (Tx, φ(x) + g)` on `[0,1) × Z₂` with fiber measure
//! `h = ½δ₀ + ½δ₁`.
//!
//! Everything is computed on the partition into `2^K` atoms. The odometer
//! permutes atoms in a single cycle: the atom with `K`-bit index `a` sits at
//! position `rev(a)` along the cycle, so `T^m` just adds `m` to the position.
//! Birkhoff sums `φ_m` of atoms are read off prefix parities along the
//! cycle and are exact unless the orbit segment passes an atom on which the
//! cocycle is not constant. For the Mathew-Nadkarni cocycle those are the
//! two top atoms `2^K − 2` and `2^K − 1`.

mod dyadic;

pub use dyadic::{mn_cocycle, odometer_map, Dyadic, DyadicInterval};

use crate::bounded::BoundedValue;
use rayon::prelude::*;
use serde::Serialize;
use std::ops::RangeInclusive;
use thiserror::Error;

pub const DEFAULT_ATOM_LEVEL: u32 = 20;
pub const DEFAULT_CUTOFF: u32 = 16;
pub const MAX_ATOM_LEVEL: u32 = 26;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkewError {
    #[error("invalid skew system: {0}")]
    InvalidSystem(String),
    #[error("invalid dyadic interval: {0}")]
    InvalidInterval(String),
    #[error("invalid cocycle: {0}")]
    InvalidCocycle(String),
    #[error("point {0} outside [0, 1)")]
    OutOfRange(String),
    #[error("index {index} exceeds {limit}")]
    IndexTooLarge { index: i64, limit: i64 },
}

impl SkewError {
    pub fn name(&self) -> &'static str {
        match self {
            SkewError::InvalidSystem(_) => "InvalidSystem",
            SkewError::InvalidInterval(_) => "InvalidInterval",
            SkewError::InvalidCocycle(_) => "InvalidCocycle",
            SkewError::OutOfRange(_) => "OutOfRange",
            SkewError::IndexTooLarge { .. } => "IndexTooLarge",
        }
    }
}

pub type Result<T> = std::result::Result<T, SkewError>;

/// A `{0,1}`-valued step function: `values[i]` on `[breakpoints[i-1], breakpoints[i])`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepCocycle {
    pub breakpoints: Vec<Dyadic>,
    pub values: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Cocycle {
    MathewNadkarni,
    Step(StepCocycle),
}

impl Cocycle {
    /// Value on the level-`k` atom `a`, or `None` if the cocycle is not
    /// constant there.
    pub fn atom_value(&self, a: u64, k: u32) -> Option<u8> {
        match self {
            Cocycle::MathewNadkarni => {
                let n = (a << (64 - k)).leading_ones();
                // Band n splits at level n + 2.
                (n + 2 <= k).then(|| ((a >> (k - n - 2)) & 1) as u8)
            }
            Cocycle::Step(s) => {
                let lo = Dyadic::new(a as u128, k).ok()?;
                let hi = Dyadic::new(a as u128 + 1, k).ok()?;
                let lt = |x: &Dyadic, y: &Dyadic| {
                    let l = x.level().max(y.level());
                    x.num_at(l) < y.num_at(l)
                };
                if s.breakpoints.iter().any(|b| lt(&lo, b) && lt(b, &hi)) {
                    return None;
                }
                let piece = s.breakpoints.iter().filter(|b| !lt(&lo, b)).count();
                Some(s.values[piece])
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkewSystem {
    pub atom_level: u32,
    pub boundary_cutoff: u32,
    pub cocycle: Cocycle,
}

impl SkewSystem {
    pub fn new(atom_level: u32, boundary_cutoff: u32, cocycle: Cocycle) -> Result<Self> {
        if !(4..=MAX_ATOM_LEVEL).contains(&atom_level) {
            return Err(SkewError::InvalidSystem(format!("atom level {atom_level} not in 4..={MAX_ATOM_LEVEL}")));
        }
        if boundary_cutoff == 0 || boundary_cutoff > atom_level {
            return Err(SkewError::InvalidSystem(format!(
                "cutoff {boundary_cutoff} must satisfy 1 <= L <= K = {atom_level}"
            )));
        }
        if let Cocycle::Step(s) = &cocycle {
            if s.values.len() != s.breakpoints.len() + 1 {
                return Err(SkewError::InvalidCocycle("need one more value than breakpoints".into()));
            }
            if s.values.iter().any(|&v| v > 1) {
                return Err(SkewError::InvalidCocycle("values must be 0 or 1".into()));
            }
            let mut prev = Dyadic::ZERO;
            for b in &s.breakpoints {
                let l = b.level().max(prev.level());
                if b.num_at(l) <= prev.num_at(l) || !b.is_unit_interval_point() {
                    return Err(SkewError::InvalidCocycle("breakpoints must increase strictly inside (0, 1)".into()));
                }
                let region_start = (1u128 << boundary_cutoff) - 1;
                let in_region = b.num_at(l.max(boundary_cutoff)) >= region_start << (l.max(boundary_cutoff) - boundary_cutoff);
                if b.level() > atom_level && !in_region {
                    return Err(SkewError::InvalidCocycle(format!(
                        "discontinuity {b} below 1 − 2^-{boundary_cutoff} is finer than the atom level"
                    )));
                }
                prev = *b;
            }
        }
        Ok(SkewSystem { atom_level, boundary_cutoff, cocycle })
    }

    pub fn mathew_nadkarni(atom_level: u32, boundary_cutoff: u32) -> Result<Self> {
        Self::new(atom_level, boundary_cutoff, Cocycle::MathewNadkarni)
    }

    /// Largest admissible correlation time, `2^(K−4)`.
    pub fn index_limit(&self) -> i64 {
        1i64 << (self.atom_level - 4)
    }

    fn check_index(&self, n: i64) -> Result<()> {
        let limit = self.index_limit();
        if n.abs() > limit {
            return Err(SkewError::IndexTooLarge { index: n, limit });
        }
        Ok(())
    }

    fn check_interval(&self, a: &DyadicInterval) -> Result<()> {
        if a.level > self.atom_level {
            return Err(SkewError::InvalidInterval(format!(
                "{a} is finer than the atom level {}",
                self.atom_level
            )));
        }
        Ok(())
    }
}

impl Default for SkewSystem {
    fn default() -> Self {
        Self::mathew_nadkarni(DEFAULT_ATOM_LEVEL, DEFAULT_CUTOFF).expect("defaults are valid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CocycleSum {
    Value(u8),
    Boundary,
}

/// Prefix parities of the cocycle along the odometer cycle.
pub struct SkewEngine<'a> {
    sys: &'a SkewSystem,
    k: u32,
    atoms: u64,
    /// Bit `t` is the parity of `Σ_{u<t} φ(atom at position u)`, `0 ≤ t ≤ 2^K`.
    parity: Vec<u64>,
    /// Positions of atoms on which the cocycle is not constant.
    bad: Vec<u64>,
    region_start: u64,
}

impl<'a> SkewEngine<'a> {
    pub fn new(sys: &'a SkewSystem) -> Self {
        let k = sys.atom_level;
        let atoms = 1u64 << k;
        let mut parity = vec![0u64; (atoms as usize >> 6) + 1];
        let mut bad = Vec::new();
        let mut p = 0u8;
        for t in 0..atoms {
            match sys.cocycle.atom_value(atom_at(t, k), k) {
                Some(v) => p ^= v,
                None => bad.push(t),
            }
            if p == 1 {
                let t1 = t + 1;
                parity[(t1 >> 6) as usize] |= 1 << (t1 & 63);
            }
        }
        SkewEngine { sys, k, atoms, parity, bad, region_start: atoms - (atoms >> sys.boundary_cutoff) }
    }

    fn prefix(&self, t: u64) -> u8 {
        ((self.parity[(t >> 6) as usize] >> (t & 63)) & 1) as u8
    }

    fn has_bad(&self, lo: u64, hi: u64) -> bool {
        let i = self.bad.partition_point(|&b| b < lo);
        i < self.bad.len() && self.bad[i] < hi
    }

    /// Parity of `φ` summed over positions `s, s+1, …, s+len−1` (mod `2^K`).
    fn window(&self, s: u64, len: u64) -> CocycleSum {
        let n = self.atoms;
        let full = len / n;
        let r = len % n;
        let mut bad = full > 0 && !self.bad.is_empty();
        let mut par = (full & 1) as u8 & self.prefix(n);
        let e = s + r;
        if e <= n {
            par ^= self.prefix(e) ^ self.prefix(s);
            bad |= self.has_bad(s, e);
        } else {
            par ^= self.prefix(n) ^ self.prefix(s) ^ self.prefix(e - n);
            bad |= self.has_bad(s, n) || self.has_bad(0, e - n);
        }
        if bad {
            CocycleSum::Boundary
        } else {
            CocycleSum::Value(par)
        }
    }

    fn shift(&self, s: u64, m: i64) -> u64 {
        (s as i64 + m).rem_euclid(self.atoms as i64) as u64
    }

    /// `φ_m(x) = Σ_{j<m} φ(T^j x)` on the level-`K` atom `atom`.
    pub fn cocycle_sum(&self, atom: u64, m: u64) -> CocycleSum {
        self.window(position_of(atom, self.k), m)
    }

    /// Exact counts (in units of `2^-(K+1)`) behind `μ⊗h(T_φ^m(A×{ε}) ∩ (A×{ε′}))`.
    pub fn correlation_counts(&self, a: &DyadicInterval, eps: u8, eps2: u8, m: u64) -> Result<(u64, u64)> {
        self.sys.check_interval(a)?;
        let k = self.k;
        let chunk = 1u64 << k.min(14);
        let parts: Vec<(u64, u64)> = (0..self.atoms / chunk)
            .into_par_iter()
            .map(|c| {
                let (mut good, mut boundary) = (0u64, 0u64);
                for s in c * chunk..(c + 1) * chunk {
                    let atom = atom_at(s, k);
                    if !a.contains_atom(atom, k) || !a.contains_atom(atom_at(self.shift(s, m as i64), k), k) {
                        continue;
                    }
                    if m > 0 && atom >= self.region_start {
                        boundary += 1;
                        continue;
                    }
                    match self.window(s, m) {
                        CocycleSum::Value(p) => good += u64::from((eps ^ p) == eps2),
                        CocycleSum::Boundary => boundary += 1,
                    }
                }
                (good, boundary)
            })
            .collect();
        Ok(parts.iter().fold((0, 0), |(g, b), &(g2, b2)| (g + g2, b + b2)))
    }

    pub fn correlation(&self, a: &DyadicInterval, eps: u8, eps2: u8, m: u64) -> Result<BoundedValue> {
        let (good, boundary) = self.correlation_counts(a, eps, eps2, m)?;
        let unit = 2f64.powi(-(self.k as i32 + 1));
        Ok(if boundary == 0 {
            BoundedValue::exact(good as f64 * unit)
        } else {
            BoundedValue::from_interval(good as f64 * unit, (good + boundary) as f64 * unit)
        })
    }

    pub fn spectral_coefficient(&self, f: &TestFunction, n: i64) -> Result<SpectralCoefficient> {
        self.sys.check_index(n)?;
        f.g.check(self.k)?;
        let k = self.k;
        let chunk = 1u64 << k.min(14);
        let len = n.unsigned_abs();
        let parts: Vec<(f64, f64)> = (0..self.atoms / chunk)
            .into_par_iter()
            .map(|c| {
                let (mut value, mut err) = (0.0, 0.0);
                for s in c * chunk..(c + 1) * chunk {
                    let atom = atom_at(s, k);
                    let t = self.shift(s, n);
                    let w = f.g.at(atom_at(t, k), k) * f.g.at(atom, k);
                    if w == 0.0 {
                        continue;
                    }
                    match f.fiber {
                        Fiber::Trivial => value += w,
                        Fiber::Character => {
                            if n != 0 && atom >= self.region_start {
                                err += w.abs();
                                continue;
                            }
                            // For n < 0 the sum runs over T^n x, …, T^-1 x.
                            match self.window(if n >= 0 { s } else { t }, len) {
                                CocycleSum::Value(p) => value += if p == 0 { w } else { -w },
                                CocycleSum::Boundary => err += w.abs(),
                            }
                        }
                    }
                }
                (value, err)
            })
            .collect();
        let unit = 2f64.powi(-(k as i32));
        let (value, err) = parts.iter().fold((0.0, 0.0), |(v, e), &(v2, e2)| (v + v2, e + e2));
        Ok(SpectralCoefficient { index: n, value: value * unit, error_bound: err * unit, function_tag: f.tag() })
    }
}

fn atom_at(position: u64, k: u32) -> u64 {
    position.reverse_bits() >> (64 - k)
}

fn position_of(atom: u64, k: u32) -> u64 {
    atom.reverse_bits() >> (64 - k)
}

/// Birkhoff parity of the cocycle on a level-`K` atom.
pub fn cocycle_sum(atom: DyadicInterval, m: u64, sys: &SkewSystem) -> Result<CocycleSum> {
    if atom.level != sys.atom_level {
        return Err(SkewError::InvalidInterval(format!("{atom} is not an atom of level {}", sys.atom_level)));
    }
    Ok(SkewEngine::new(sys).cocycle_sum(atom.numerator, m))
}

/// `μ⊗h(T_φ^m(A×{ε}) ∩ (A×{ε′}))`. Atoms whose orbit segment crosses a
/// discontinuity of the cocycle, and atoms inside `[1−2^-L, 1)` when
/// `m > 0`, are charged to the error bound.
pub fn skew_correlation(a: &DyadicInterval, eps: u8, eps2: u8, m: u64, sys: &SkewSystem) -> Result<BoundedValue> {
    SkewEngine::new(sys).correlation(a, eps, eps2, m)
}

/// A step function on level-`level` dyadic intervals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepFunction {
    pub level: u32,
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn new(level: u32, values: Vec<f64>) -> Result<Self> {
        if level > MAX_ATOM_LEVEL || values.len() != 1usize << level {
            return Err(SkewError::InvalidInterval(format!("step function needs 2^{level} values")));
        }
        Ok(StepFunction { level, values })
    }

    pub fn constant(c: f64) -> Self {
        StepFunction { level: 0, values: vec![c] }
    }

    /// `1_{[0,1/2)} − 1_{[1/2,1)}`.
    pub fn first_digit_sign() -> Self {
        StepFunction { level: 1, values: vec![1.0, -1.0] }
    }

    pub fn indicator(a: &DyadicInterval) -> Self {
        let mut values = vec![0.0; 1 << a.level];
        values[a.numerator as usize] = 1.0;
        StepFunction { level: a.level, values }
    }

    fn check(&self, k: u32) -> Result<()> {
        if self.level > k {
            return Err(SkewError::InvalidInterval(format!("step function level {} exceeds atom level {k}", self.level)));
        }
        Ok(())
    }

    fn at(&self, atom: u64, k: u32) -> f64 {
        self.values[(atom >> (k - self.level)) as usize]
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fiber {
    /// `g ⊗ 1`, the `L₀` part.
    Trivial,
    /// `g ⊗ χ` with `χ(ε) = (−1)^ε`, the `L₁` part.
    Character,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestFunction {
    pub g: StepFunction,
    pub fiber: Fiber,
}

impl TestFunction {
    pub fn tag(&self) -> String {
        match self.fiber {
            Fiber::Trivial => "g⊗1".into(),
            Fiber::Character => "g⊗χ".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralCoefficient {
    pub index: i64,
    pub value: f64,
    pub error_bound: f64,
    pub function_tag: String,
}

/// `σ̂_f(n) = ⟨U^n f, f⟩` with `U f = f ∘ T_φ`, computed atomwise.
pub fn spectral_coefficient(f: &TestFunction, n: i64, sys: &SkewSystem) -> Result<SpectralCoefficient> {
    SkewEngine::new(sys).spectral_coefficient(f, n)
}

/// `σ̂_f(n)` for `n = −n_max..=n_max`.
pub fn spectral_sequence(f: &TestFunction, n_max: i64, sys: &SkewSystem) -> Result<Vec<SpectralCoefficient>> {
    sys.check_index(n_max)?;
    let engine = SkewEngine::new(sys);
    (-n_max..=n_max).map(|n| engine.spectral_coefficient(f, n)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RigidityPoint {
    pub k: u32,
    pub time: u64,
    pub correlation: BoundedValue,
}

/// `μ⊗h(T_φ^{2^k}(A×{ε}) ∩ (A×{ε}))` for `k` in `ks`.
pub fn rigidity_sequence(
    a: &DyadicInterval,
    eps: u8,
    ks: RangeInclusive<u32>,
    sys: &SkewSystem,
) -> Result<Vec<RigidityPoint>> {
    let top = *ks.end();
    if top > 62 {
        return Err(SkewError::IndexTooLarge { index: i64::MAX, limit: sys.index_limit() });
    }
    sys.check_index(1i64 << top)?;
    let engine = SkewEngine::new(sys);
    ks.map(|k| {
        let time = 1u64 << k;
        Ok(RigidityPoint { k, time, correlation: engine.correlation(a, eps, eps, time)? })
    })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(k: u32, l: u32) -> SkewSystem {
        SkewSystem::mathew_nadkarni(k, l).unwrap()
    }

    /// Pointwise oracle: iterate `odometer_map` and `mn_cocycle` on the left
    /// endpoint and on the midpoint of the atom.
    fn pointwise(atom: u64, k: u32, m: u64) -> (u8, u8) {
        let mut x = Dyadic::new(atom as u128, k).unwrap();
        let mut y = Dyadic::new(2 * atom as u128 + 1, k + 1).unwrap();
        let (mut px, mut py) = (0, 0);
        for _ in 0..m {
            px ^= mn_cocycle(x).unwrap();
            py ^= mn_cocycle(y).unwrap();
            x = odometer_map(x).unwrap();
            y = odometer_map(y).unwrap();
        }
        (px, py)
    }

    #[test]
    fn cocycle_sum_matches_pointwise_iteration() {
        let sys = small(8, 6);
        let engine = SkewEngine::new(&sys);
        for atom in (0..256).step_by(7) {
            for m in [0, 1, 2, 3, 17, 64, 200] {
                let (px, py) = pointwise(atom, 8, m);
                match engine.cocycle_sum(atom, m) {
                    CocycleSum::Value(p) => {
                        assert_eq!(p, px);
                        assert_eq!(p, py);
                    }
                    CocycleSum::Boundary => {}
                }
            }
        }
    }

    #[test]
    fn cocycle_sum_examples() {
        let sys = small(4, 4);
        for a in 0..16 {
            assert_eq!(cocycle_sum(DyadicInterval::new(a, 4).unwrap(), 0, &sys).unwrap(), CocycleSum::Value(0));
        }
        let zero = DyadicInterval::new(0, 4).unwrap();
        assert_eq!(cocycle_sum(zero, 1, &sys).unwrap(), CocycleSum::Value(0));
        assert_eq!(cocycle_sum(zero, 2, &sys).unwrap(), CocycleSum::Value(0));
        assert_eq!(cocycle_sum(DyadicInterval::new(14, 4).unwrap(), 1, &sys).unwrap(), CocycleSum::Boundary);
    }

    #[test]
    fn mn_atom_values_agree_with_closed_form() {
        let k = 10;
        for a in 0..(1u64 << k) - 2 {
            let left = mn_cocycle(Dyadic::new(a as u128, k).unwrap()).unwrap();
            let right = mn_cocycle(Dyadic::new((a as u128) * 8 + 7, k + 3).unwrap()).unwrap();
            assert_eq!(left, right, "atom {a}");
            assert_eq!(Cocycle::MathewNadkarni.atom_value(a, k), Some(left));
        }
        assert_eq!(Cocycle::MathewNadkarni.atom_value((1 << k) - 2, k), None);
        assert_eq!(Cocycle::MathewNadkarni.atom_value((1 << k) - 1, k), None);
    }

    #[test]
    fn odometer_permutes_atoms_by_translation() {
        let k = 10u32;
        let w = Dyadic::new(1, k + 1).unwrap();
        let mut seen = vec![false; 1 << k];
        for a in 0..(1u64 << k) {
            let x = Dyadic::new(a as u128, k).unwrap();
            let y = odometer_map(x).unwrap();
            let image = (y.num_at(y.level().max(k)) >> (y.level().max(k) - k)) as usize;
            assert!(!seen[image]);
            seen[image] = true;
            if a + 1 < 1 << k {
                // Interior points move by the same amount as the left endpoint.
                let mid = Dyadic::new(2 * a as u128 + 1, k + 1).unwrap();
                let ym = odometer_map(mid).unwrap();
                let l = k + 1;
                assert_eq!(ym.num_at(l.max(ym.level())) >> (l.max(ym.level()) - l), y.num_at(l) + w.num_at(l));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn zero_time_is_exact() {
        let sys = small(10, 8);
        let a = DyadicInterval::new(3, 3).unwrap();
        assert_eq!(skew_correlation(&a, 0, 0, 0, &sys).unwrap(), BoundedValue::exact(1.0 / 16.0));
        assert_eq!(skew_correlation(&a, 1, 0, 0, &sys).unwrap(), BoundedValue::exact(0.0));
    }

    #[test]
    fn fiber_mass_is_conserved() {
        let sys = small(12, 10);
        let a = DyadicInterval::new(5, 4).unwrap();
        let direct = {
            // μ(A ∩ T^-m A)/2 from the exact atom permutation.
            let e = SkewEngine::new(&sys);
            move |m: u64| {
                (0..1u64 << 12)
                    .filter(|&s| {
                        a.contains_atom(atom_at(s, 12), 12) && a.contains_atom(atom_at(e.shift(s, m as i64), 12), 12)
                    })
                    .count() as f64
                    / 2f64.powi(13)
            }
        };
        for m in [1, 16, 17, 100] {
            let x = skew_correlation(&a, 0, 0, m, &sys).unwrap();
            let y = skew_correlation(&a, 0, 1, m, &sys).unwrap();
            let total = direct(m);
            assert!((x.value + y.value - total).abs() <= x.error_bound + y.error_bound + 1e-15);
        }
    }

    #[test]
    fn refinement_stays_inside_intervals() {
        let coarse = small(10, 8);
        let fine = small(12, 10);
        for (num, lvl) in [(0, 0), (1, 1), (5, 3)] {
            let a = DyadicInterval::new(num, lvl).unwrap();
            for eps in 0..2 {
                for m in [1, 8, 33, 64] {
                    let c = skew_correlation(&a, eps, eps, m, &coarse).unwrap();
                    let f = skew_correlation(&a, eps, eps, m, &fine).unwrap();
                    assert!(c.contains(f.value, 1e-15), "{a} eps={eps} m={m}: {c:?} vs {f:?}");
                }
            }
        }
    }

    #[test]
    fn eigenfunction_coefficients() {
        let sys = small(12, 10);
        let f = TestFunction { g: StepFunction::first_digit_sign(), fiber: Fiber::Trivial };
        for n in [-5, -1, 0, 1, 2, 7, 64, 255] {
            let c = spectral_coefficient(&f, n, &sys).unwrap();
            assert_eq!(c.value, if n % 2 == 0 { 1.0 } else { -1.0 });
            assert_eq!(c.error_bound, 0.0);
        }
    }

    #[test]
    fn character_norm_and_symmetry() {
        let sys = small(12, 10);
        let f = TestFunction { g: StepFunction::constant(1.0), fiber: Fiber::Character };
        let c0 = spectral_coefficient(&f, 0, &sys).unwrap();
        assert_eq!((c0.value, c0.error_bound), (1.0, 0.0));
        let g = TestFunction { g: StepFunction::indicator(&DyadicInterval::new(1, 2).unwrap()), fiber: Fiber::Character };
        for n in [1, 3, 10, 100] {
            for f in [&f, &g] {
                let p = spectral_coefficient(f, n, &sys).unwrap();
                let q = spectral_coefficient(f, -n, &sys).unwrap();
                assert!((p.value - q.value).abs() <= p.error_bound + q.error_bound + 1e-12);
                assert!(p.value.abs() <= c0.value + p.error_bound);
            }
        }
    }

    #[test]
    fn index_limit_enforced() {
        let sys = small(10, 8);
        let f = TestFunction { g: StepFunction::constant(1.0), fiber: Fiber::Character };
        assert!(spectral_coefficient(&f, 64, &sys).is_ok());
        assert!(matches!(spectral_coefficient(&f, 65, &sys), Err(SkewError::IndexTooLarge { .. })));
        assert!(matches!(
            rigidity_sequence(&DyadicInterval::unit(), 0, 1..=7, &sys),
            Err(SkewError::IndexTooLarge { .. })
        ));
    }

    #[test]
    fn system_validation() {
        assert!(SkewSystem::mathew_nadkarni(20, 21).is_err());
        assert!(SkewSystem::mathew_nadkarni(27, 16).is_err());
        let step = |bps: &[&str], vals: Vec<u8>| {
            Cocycle::Step(StepCocycle { breakpoints: bps.iter().map(|s| s.parse().unwrap()).collect(), values: vals })
        };
        assert!(SkewSystem::new(8, 4, step(&["1/2"], vec![0, 1])).is_ok());
        assert!(SkewSystem::new(8, 4, step(&["1/2^9"], vec![0, 1])).is_err());
        // Fine discontinuities are allowed inside the boundary region.
        assert!(SkewSystem::new(8, 4, step(&["1023/2^10"], vec![0, 1])).is_ok());
        assert!(SkewSystem::new(8, 4, step(&["1/2", "1/4"], vec![0, 1, 0])).is_err());
        assert!(SkewSystem::new(8, 4, step(&["1/2"], vec![0, 2])).is_err());
    }

    #[test]
    fn step_cocycle_matches_pointwise() {
        // Constant cocycle 1: the Birkhoff sum is m mod 2 everywhere.
        let ones = SkewSystem::new(8, 4, Cocycle::Step(StepCocycle { breakpoints: vec![], values: vec![1] })).unwrap();
        let e = SkewEngine::new(&ones);
        for m in [0, 1, 5, 256, 257] {
            assert_eq!(e.cocycle_sum(17, m), CocycleSum::Value((m % 2) as u8));
        }
        let half = SkewSystem::new(
            6,
            3,
            Cocycle::Step(StepCocycle { breakpoints: vec!["1/2".parse().unwrap()], values: vec![0, 1] }),
        )
        .unwrap();
        // φ(x) = first binary digit; along the orbit it alternates.
        let e = SkewEngine::new(&half);
        assert_eq!(e.cocycle_sum(0, 4), CocycleSum::Value(0));
        assert_eq!(e.cocycle_sum(0, 3), CocycleSum::Value(1));
    }
}
