//! Left-tail test `Σ_n log(Σ_{k≤−n} a_k²) / n² = −∞` for a weak limit
//! `Σ_i a_i U^i` of powers, and the singularity certificate built on it.
//!
//! Verdicts come only from closed-form tail descriptors. Partial sums are
//! reported for inspection but never decide anything.

use super::{slope, Result, SpectralError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Coefficients strictly below the finite support, as a function of the
/// distance `i = min(support) − k ≥ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailDescriptor {
    /// `a = 0` below the support.
    None,
    /// `c·q^i`, `0 < q < 1`.
    Geometric { c: f64, q: f64 },
    /// `c·exp(−i^γ)`, `γ > 0`.
    StretchedExponential { c: f64, gamma: f64 },
    /// `c·i^{−s}`, `s > 1`.
    Polynomial { c: f64, s: f64 },
    /// Finitely many measured values `a_{min−1}, a_{min−2}, …`, nothing
    /// known beyond.
    Tabulated { values: Vec<f64> },
}

impl TailDescriptor {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SpectralError::InvalidTail(m.into()));
        let pos = |c: f64| c.is_finite() && c > 0.0;
        match *self {
            TailDescriptor::None => Ok(()),
            TailDescriptor::Geometric { c, q } if !pos(c) || !(q > 0.0 && q < 1.0) => bad("geometric needs c > 0, 0 < q < 1"),
            TailDescriptor::StretchedExponential { c, gamma } if !pos(c) || !pos(gamma) => {
                bad("stretched exponential needs c > 0, γ > 0")
            }
            TailDescriptor::Polynomial { c, s } if !pos(c) || !(s.is_finite() && s > 1.0) => {
                bad("polynomial needs c > 0, s > 1 (summable)")
            }
            TailDescriptor::Tabulated { ref values } if values.iter().any(|v| !v.is_finite()) => bad("non-finite tabulated value"),
            _ => Ok(()),
        }
    }

    fn term(&self, i: u64) -> f64 {
        let x = i as f64;
        match *self {
            TailDescriptor::None => 0.0,
            TailDescriptor::Geometric { c, q } => c * q.powf(x),
            TailDescriptor::StretchedExponential { c, gamma } => c * (-x.powf(gamma)).exp(),
            TailDescriptor::Polynomial { c, s } => c * x.powf(-s),
            TailDescriptor::Tabulated { ref values } => values.get(i as usize - 1).copied().unwrap_or(0.0),
        }
    }

    /// `Σ_{i ≥ i0} a_i²`: exact for `geometric`, summed with an integral
    /// remainder for the other analytic tails.
    fn square_sum_from(&self, i0: u64) -> f64 {
        const DIRECT: u64 = 20_000;
        let direct = |from: u64| (from..from + DIRECT).map(|i| self.term(i).powi(2)).sum::<f64>();
        match *self {
            TailDescriptor::None => 0.0,
            TailDescriptor::Geometric { c, q } => c * c * q.powf(2.0 * i0 as f64) / (1.0 - q * q),
            TailDescriptor::StretchedExponential { c, gamma } => {
                let x = (i0 + DIRECT) as f64 - 0.5;
                direct(i0) + c * c * (-2.0 * x.powf(gamma)).exp() * x.powf(1.0 - gamma) / (2.0 * gamma)
            }
            TailDescriptor::Polynomial { c, s } => {
                let x = (i0 + DIRECT) as f64 - 0.5;
                direct(i0) + c * c * x.powf(1.0 - 2.0 * s) / (2.0 * s - 1.0)
            }
            TailDescriptor::Tabulated { ref values } => {
                values.iter().skip(i0 as usize - 1).map(|v| v * v).sum()
            }
        }
    }

    /// `square_sum_from(i)` for `i = i0, …, i0 + count − 1`, from one tail
    /// evaluation and backward accumulation.
    fn square_sums_from(&self, i0: u64, count: u64) -> Vec<f64> {
        let mut out = vec![0.0; count as usize];
        let mut acc = self.square_sum_from(i0 + count);
        for (k, slot) in out.iter_mut().enumerate().rev() {
            acc += self.term(i0 + k as u64).powi(2);
            *slot = acc;
        }
        out
    }

    fn max_positive(&self) -> Option<f64> {
        match self {
            TailDescriptor::None => None,
            TailDescriptor::Tabulated { values } => values.iter().copied().filter(|&v| v > 0.0).reduce(f64::max),
            // Analytic tails are decreasing in i.
            _ => Some(self.term(1)),
        }
    }

    fn scaled(&self, lambda: f64) -> Self {
        match self.clone() {
            TailDescriptor::None => TailDescriptor::None,
            TailDescriptor::Geometric { c, q } => TailDescriptor::Geometric { c: c * lambda, q },
            TailDescriptor::StretchedExponential { c, gamma } => TailDescriptor::StretchedExponential { c: c * lambda, gamma },
            TailDescriptor::Polynomial { c, s } => TailDescriptor::Polynomial { c: c * lambda, s },
            TailDescriptor::Tabulated { values } => TailDescriptor::Tabulated { values: values.iter().map(|v| v * lambda).collect() },
        }
    }
}

/// Coefficients `a_i` of a weak limit `Σ_i a_i U^i` with `U f = f ∘ T⁻¹`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoefficients")]
pub struct WeakLimitCoefficients {
    pub support: BTreeMap<i64, f64>,
    pub tail: TailDescriptor,
    /// Some `a_i > 0`.
    pub restricted: bool,
}

#[derive(Deserialize)]
struct RawCoefficients {
    support: BTreeMap<i64, f64>,
    #[serde(default = "no_tail")]
    tail: TailDescriptor,
    restricted: Option<bool>,
}

fn no_tail() -> TailDescriptor {
    TailDescriptor::None
}

impl TryFrom<RawCoefficients> for WeakLimitCoefficients {
    type Error = SpectralError;

    fn try_from(raw: RawCoefficients) -> Result<Self> {
        let c = WeakLimitCoefficients::new(raw.support, raw.tail)?;
        if raw.restricted.is_some_and(|r| r != c.restricted) {
            return Err(SpectralError::InvalidTail("`restricted` disagrees with the coefficients".into()));
        }
        Ok(c)
    }
}

impl WeakLimitCoefficients {
    pub fn new(support: BTreeMap<i64, f64>, tail: TailDescriptor) -> Result<Self> {
        if support.values().any(|v| !v.is_finite()) {
            return Err(SpectralError::InvalidTail("non-finite coefficient".into()));
        }
        tail.validate()?;
        let restricted = support.values().any(|&v| v > 0.0) || tail.max_positive().is_some_and(|v| v > 0.0);
        Ok(WeakLimitCoefficients { support, tail, restricted })
    }

    pub fn finite(support: impl IntoIterator<Item = (i64, f64)>) -> Self {
        Self::new(support.into_iter().collect(), TailDescriptor::None).expect("finite coefficients")
    }

    /// A measured weak limit of `T^{h_n}`: the weight found at time
    /// `h_n + j` belongs to `U^{−j}`.
    pub fn from_estimate(est: &crate::rankone::WeakLimitEstimate, tail: TailDescriptor) -> Result<Self> {
        Self::new(est.coefficients.iter().map(|c| (-c.j, c.estimate)).collect(), tail)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SpectralError::InvalidTail(e.to_string()))
    }

    fn min_index(&self) -> i64 {
        self.support.keys().next().copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.support.values().all(|&v| v == 0.0)
            && match &self.tail {
                TailDescriptor::None => true,
                TailDescriptor::Tabulated { values } => values.iter().all(|&v| v == 0.0),
                _ => false,
            }
    }

    /// `Σ_{k ≤ −n} a_k²`.
    pub fn left_tail(&self, n: i64) -> f64 {
        let own: f64 = self.support.range(..=-n).map(|(_, v)| v * v).sum();
        let i0 = (self.min_index() + n).max(1) as u64;
        own + self.tail.square_sum_from(i0)
    }

    /// `left_tail(n)` for `n = 1..=n_max`.
    pub fn left_tails(&self, n_max: i64) -> Vec<f64> {
        // i0(n) = max(min + n, 1): constant 1 until n passes 1 − min, then consecutive.
        let min = self.min_index();
        let first = (min + 1).max(1) as u64;
        let last = (min + n_max).max(1) as u64;
        let sums = self.tail.square_sums_from(first, last - first + 1);
        (1..=n_max)
            .map(|n| {
                let own: f64 = self.support.range(..=-n).map(|(_, v)| v * v).sum();
                own + sums[((min + n).max(1) as u64 - first) as usize]
            })
            .collect()
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.support.iter().map(|(&k, &v)| (k, v * lambda)).collect(), self.tail.scaled(lambda))
    }

    /// `b_k = a_{k−t}`.
    pub fn shifted(&self, t: i64) -> Self {
        let support = self.support.iter().map(|(&k, &v)| (k + t, v)).collect();
        WeakLimitCoefficients { support, tail: self.tail.clone(), restricted: self.restricted }
    }

    fn max_positive(&self) -> Option<f64> {
        self.support.values().copied().chain(self.tail.max_positive()).filter(|&v| v > 0.0).reduce(f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BeurlingReport {
    pub verdict: Verdict,
    /// `S_N = Σ_{n≤N} log(Σ_{k≤−n} a_k²)/n²` while the tail is nonzero.
    pub partial_sums: Vec<f64>,
    /// First `n` with an empty left tail; the sum is `−∞` from there on.
    pub vanishes_from: Option<i64>,
    /// Slope of `log(−log tail(n))` against `log n` over `n ∈ [N/4, N]`.
    pub tail_exponent_fit: Option<f64>,
    pub notes: String,
}

pub fn beurling_check(coeffs: &WeakLimitCoefficients, n_max: i64) -> Result<BeurlingReport> {
    if n_max < 1 {
        return Err(SpectralError::InvalidTail("N_max must be at least 1".into()));
    }
    coeffs.tail.validate()?;
    let mut partial_sums = Vec::new();
    let mut vanishes_from = None;
    let mut pts = Vec::new();
    let mut s = 0.0;
    for (n, t) in (1..=n_max).zip(coeffs.left_tails(n_max)) {
        if t == 0.0 {
            vanishes_from = Some(n);
            break;
        }
        s += t.ln() / (n * n) as f64;
        partial_sums.push(s);
        if n >= (n_max / 4).max(1) && t < 1.0 {
            pts.push(((n as f64).ln(), (-t.ln()).ln()));
        }
    }
    let (verdict, notes) = match &coeffs.tail {
        TailDescriptor::None => (Verdict::Holds, "left tail vanishes eventually: log of an empty sum is −∞".to_string()),
        TailDescriptor::Geometric { q, .. } => (
            Verdict::Holds,
            format!("geometric tail: log tail ~ −2n·log(1/{q}), terms ~ 1/n, sum diverges"),
        ),
        TailDescriptor::StretchedExponential { gamma, .. } if *gamma < 1.0 => (
            Verdict::Fails,
            format!("stretched exponential γ = {gamma} < 1: log tail ~ −2n^γ and Σ n^(γ−2) converges"),
        ),
        TailDescriptor::StretchedExponential { gamma, .. } => (
            Verdict::Holds,
            format!("stretched exponential γ = {gamma} ≥ 1: log tail ≤ −2n^γ + O(log n), Σ n^(γ−2) diverges"),
        ),
        TailDescriptor::Polynomial { s, .. } => (
            Verdict::Fails,
            format!("polynomial s = {s}: log tail ~ −(2s−1)·log n and Σ log n/n² converges"),
        ),
        TailDescriptor::Tabulated { .. } => (
            Verdict::Inconclusive,
            "tabulated tail: finitely many terms cannot decide divergence".to_string(),
        ),
    };
    Ok(BeurlingReport { verdict, partial_sums, vanishes_from, tail_exponent_fit: slope(&pts), notes })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateVerdict {
    Singular,
    NoCertificate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub verdict: CertificateVerdict,
    pub summary: String,
    /// Set when the limit is restricted: `α ≥ max a_i > 0`.
    pub alpha_lower_bound: Option<f64>,
    /// Caller's assertion that the limit is not itself a power of `U`.
    pub non_power_asserted: bool,
    pub beurling: BeurlingReport,
}

/// Singular maximal spectral type if some `a_i ≠ 0` and the left tail
/// satisfies the Beurling condition; restricted limits also give α-rigidity.
pub fn singularity_certificate(coeffs: &WeakLimitCoefficients, n_max: i64, non_power_asserted: bool) -> Result<Certificate> {
    let beurling = beurling_check(coeffs, n_max)?;
    let no = |summary: &str, beurling| Certificate {
        verdict: CertificateVerdict::NoCertificate,
        summary: summary.into(),
        alpha_lower_bound: None,
        non_power_asserted,
        beurling,
    };
    if coeffs.is_zero() {
        return Ok(no("no certificate (zero limit)", beurling));
    }
    if !non_power_asserted {
        return Ok(no("no certificate (limit not asserted to lie outside the powers)", beurling));
    }
    if beurling.verdict != Verdict::Holds {
        return Ok(no("no certificate", beurling));
    }
    let alpha = coeffs.restricted.then(|| coeffs.max_positive()).flatten();
    let summary = match alpha {
        Some(a) => format!("singular; α-rigid with α ≥ {a}"),
        None => "singular".into(),
    };
    Ok(Certificate { verdict: CertificateVerdict::Singular, summary, alpha_lower_bound: alpha, non_power_asserted, beurling })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_sided_geometric(m: i64) -> WeakLimitCoefficients {
        let support = (-m..=m).map(|k| (k, 2f64.powi(-(k.abs() as i32)))).collect();
        WeakLimitCoefficients::new(support, TailDescriptor::Geometric { c: 2f64.powi(-(m as i32)), q: 0.5 }).unwrap()
    }

    #[test]
    fn one_sided_holds() {
        let c = WeakLimitCoefficients::finite([(0, 1.0 / 3.0), (1, 1.0 / 3.0), (2, 1.0 / 3.0)]);
        let r = beurling_check(&c, 50).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert_eq!(r.vanishes_from, Some(1));
        assert!(r.partial_sums.is_empty());
        let c = WeakLimitCoefficients::finite([(-3, 0.5), (0, 0.5)]);
        assert_eq!(beurling_check(&c, 50).unwrap().vanishes_from, Some(4));
    }

    #[test]
    fn geometric_tail_sums_are_exact() {
        let c = two_sided_geometric(5);
        for n in 1..40 {
            // Σ_{k≤−n} 4^{−|k|} = (4/3)·4^{−n}
            let want = (4.0 / 3.0) * 4f64.powi(-(n as i32));
            assert!((c.left_tail(n) / want - 1.0).abs() < 1e-12, "n={n}");
        }
        let r = beurling_check(&c, 64).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert!((r.tail_exponent_fit.unwrap() - 1.0).abs() < 0.1);
    }

    #[test]
    fn slow_tails_fail() {
        let st = WeakLimitCoefficients::new(BTreeMap::new(), TailDescriptor::StretchedExponential { c: 1.0, gamma: 1.0 / 3.0 }).unwrap();
        let r = beurling_check(&st, 64).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        // log tail ~ −2n^{1/3}: the fitted exponent sits near 1/3.
        assert!((r.tail_exponent_fit.unwrap() - 1.0 / 3.0).abs() < 0.15, "{:?}", r.tail_exponent_fit);
        let poly = WeakLimitCoefficients::new(BTreeMap::new(), TailDescriptor::Polynomial { c: 1.0, s: 2.0 }).unwrap();
        assert_eq!(beurling_check(&poly, 64).unwrap().verdict, Verdict::Fails);
        // Σ_{i≥n} i^{-4} ≈ n^{-3}/3
        let t = poly.left_tail(100);
        assert!((t / ((99.5f64).powi(-3) / 3.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn batched_tails_match_single() {
        let tails = [
            TailDescriptor::None,
            TailDescriptor::Geometric { c: 0.3, q: 0.7 },
            TailDescriptor::StretchedExponential { c: 1.0, gamma: 0.5 },
            TailDescriptor::Polynomial { c: 2.0, s: 1.5 },
            TailDescriptor::Tabulated { values: vec![0.1, 0.2, 0.05] },
        ];
        for tail in tails {
            for support in [BTreeMap::new(), [(-3, 0.25), (2, 0.5)].into(), [(4, 1.0)].into()] {
                let c = WeakLimitCoefficients::new(support, tail.clone()).unwrap();
                for (n, t) in (1..=30).zip(c.left_tails(30)) {
                    let want = c.left_tail(n);
                    assert!((t - want).abs() <= 1e-12 * want.max(1e-300), "{tail:?} n={n}: {t} vs {want}");
                }
            }
        }
    }

    #[test]
    fn tabulated_is_inconclusive() {
        let c = WeakLimitCoefficients::new([(0, 0.5)].into(), TailDescriptor::Tabulated { values: vec![0.25; 10] }).unwrap();
        let r = beurling_check(&c, 20).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert_eq!(r.vanishes_from, Some(11));
    }

    #[test]
    fn invalid_tails() {
        for t in [
            TailDescriptor::Geometric { c: 1.0, q: 1.0 },
            TailDescriptor::Geometric { c: 0.0, q: 0.5 },
            TailDescriptor::StretchedExponential { c: 1.0, gamma: 0.0 },
            TailDescriptor::Polynomial { c: 1.0, s: 1.0 },
            TailDescriptor::Tabulated { values: vec![f64::NAN] },
        ] {
            assert!(matches!(WeakLimitCoefficients::new(BTreeMap::new(), t), Err(SpectralError::InvalidTail(_))));
        }
    }

    #[test]
    fn json_format() {
        let c = WeakLimitCoefficients::from_json(r#"{"support": {"-1": 0.5, "0": 0.25}, "tail": {"kind": "geometric", "c": 0.5, "q": 0.5}}"#).unwrap();
        assert_eq!(c.support[&-1], 0.5);
        assert!(c.restricted);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(WeakLimitCoefficients::from_json(&text).unwrap(), c);
        assert!(WeakLimitCoefficients::from_json(r#"{"support": {"0": 0.5}, "restricted": false}"#).is_err());
        assert!(WeakLimitCoefficients::from_json(r#"{"support": {"0": -0.5}}"#).unwrap().restricted == false);
        assert!(WeakLimitCoefficients::from_json(r#"{"support": {}, "tail": {"kind": "polynomial", "c": 1, "s": 0.5}}"#).is_err());
    }

    #[test]
    fn certificate_examples() {
        let chacon = WeakLimitCoefficients::finite([(0, 1.0 / 3.0), (1, 1.0 / 3.0), (2, 1.0 / 3.0)]);
        let c = singularity_certificate(&chacon, 32, true).unwrap();
        assert_eq!(c.verdict, CertificateVerdict::Singular);
        assert_eq!(c.alpha_lower_bound, Some(1.0 / 3.0));
        let st = WeakLimitCoefficients::new([(0, 0.5)].into(), TailDescriptor::StretchedExponential { c: 0.5, gamma: 1.0 / 3.0 }).unwrap();
        assert_eq!(singularity_certificate(&st, 32, true).unwrap().verdict, CertificateVerdict::NoCertificate);
        let zero = WeakLimitCoefficients::finite([(0, 0.0), (3, 0.0)]);
        let z = singularity_certificate(&zero, 32, true).unwrap();
        assert_eq!(z.summary, "no certificate (zero limit)");
        assert_eq!(singularity_certificate(&chacon, 32, false).unwrap().verdict, CertificateVerdict::NoCertificate);
        // a_i ≠ 0 without a positive coefficient: singular, no α addendum.
        let neg = WeakLimitCoefficients::finite([(0, -0.5)]);
        let n = singularity_certificate(&neg, 32, true).unwrap();
        assert_eq!((n.verdict, n.alpha_lower_bound), (CertificateVerdict::Singular, None));
    }

    fn tail_strategy() -> impl Strategy<Value = TailDescriptor> {
        prop_oneof![
            Just(TailDescriptor::None),
            (0.01f64..2.0, 0.05f64..0.95).prop_map(|(c, q)| TailDescriptor::Geometric { c, q }),
            (0.01f64..2.0, 0.1f64..2.0).prop_map(|(c, gamma)| TailDescriptor::StretchedExponential { c, gamma }),
            (0.01f64..2.0, 1.1f64..4.0).prop_map(|(c, s)| TailDescriptor::Polynomial { c, s }),
            proptest::collection::vec(-1.0f64..1.0, 0..8).prop_map(|values| TailDescriptor::Tabulated { values }),
        ]
    }

    fn coeff_strategy() -> impl Strategy<Value = WeakLimitCoefficients> {
        (proptest::collection::btree_map(-6i64..6, -1.0f64..1.0, 0..6), tail_strategy())
            .prop_map(|(s, t)| WeakLimitCoefficients::new(s, t).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn verdict_invariant_under_scaling_and_translation(c in coeff_strategy(), lambda in 0.01f64..100.0, t in -20i64..20) {
            let v = beurling_check(&c, 24).unwrap().verdict;
            prop_assert_eq!(beurling_check(&c.scaled(lambda).unwrap(), 24).unwrap().verdict, v);
            prop_assert_eq!(beurling_check(&c.shifted(t), 24).unwrap().verdict, v);
        }

        #[test]
        fn certificate_never_outruns_beurling(c in coeff_strategy(), asserted in any::<bool>()) {
            let cert = singularity_certificate(&c, 24, asserted).unwrap();
            if cert.verdict == CertificateVerdict::Singular {
                prop_assert_eq!(cert.beurling.verdict, Verdict::Holds);
                prop_assert!(asserted);
                prop_assert!(!c.is_zero());
            }
            prop_assert_eq!(cert.alpha_lower_bound.is_some(), cert.verdict == CertificateVerdict::Singular && c.restricted);
        }
    }
}
