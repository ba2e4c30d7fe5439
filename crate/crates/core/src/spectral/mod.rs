//! Diagnostics on correlation sequences `σ̂(n) = ⟨U^n f, f⟩`.

mod beurling;

pub use beurling::{
    beurling_check, singularity_certificate, BeurlingReport, Certificate, CertificateVerdict, TailDescriptor, Verdict,
    WeakLimitCoefficients,
};

use crate::bounded::BoundedValue;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io;
use thiserror::Error;

/// The translation probe calls a coefficient stable when its spread over
/// the last three times is at most this.
pub const STABILITY_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("window too small: need {needed}, have {available}")]
    WindowTooSmall { needed: i64, available: i64 },
    #[error("invalid correlation sequence: {0}")]
    InvalidSequence(String),
    #[error("invalid tail: {0}")]
    InvalidTail(String),
    #[error("csv: {0}")]
    Csv(String),
}

impl SpectralError {
    pub fn name(&self) -> &'static str {
        match self {
            SpectralError::WindowTooSmall { .. } => "WindowTooSmall",
            SpectralError::InvalidSequence(_) => "InvalidSequence",
            SpectralError::InvalidTail(_) => "InvalidTail",
            SpectralError::Csv(_) => "ParseError",
        }
    }
}

pub type Result<T> = std::result::Result<T, SpectralError>;

/// `n ↦ (σ̂(n), error_bound)`. Missing negative indices are read through
/// `σ̂(−n) = σ̂(n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationSequence {
    pub source: String,
    pub values: BTreeMap<i64, BoundedValue>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    n: i64,
    value: f64,
    error_bound: f64,
}

impl CorrelationSequence {
    pub fn new(source: impl Into<String>, values: impl IntoIterator<Item = (i64, BoundedValue)>) -> Self {
        CorrelationSequence { source: source.into(), values: values.into_iter().collect() }
    }

    /// Exact values `f(n)` for `n = −window..=window`.
    pub fn from_fn(source: impl Into<String>, window: i64, f: impl Fn(i64) -> f64) -> Self {
        Self::new(source, (-window..=window).map(|n| (n, BoundedValue::exact(f(n)))))
    }

    /// `σ̂ ≡ 1`: the Dirac mass at 1.
    pub fn dirac(window: i64) -> Self {
        Self::from_fn("dirac", window, |_| 1.0)
    }

    /// `σ̂(n) = [n = 0]`: Lebesgue measure.
    pub fn lebesgue(window: i64) -> Self {
        Self::from_fn("lebesgue", window, |n| if n == 0 { 1.0 } else { 0.0 })
    }

    /// `λ·Dirac + (1−λ)·Lebesgue`.
    pub fn mixture(lambda: f64, window: i64) -> Self {
        Self::from_fn(format!("mixture:{lambda}"), window, |n| if n == 0 { 1.0 } else { lambda })
    }

    pub fn from_coefficients(source: impl Into<String>, coeffs: &[crate::skew::SpectralCoefficient]) -> Self {
        Self::new(source, coeffs.iter().map(|c| (c.index, BoundedValue::new(c.value, c.error_bound))))
    }

    pub fn get(&self, n: i64) -> Option<BoundedValue> {
        self.values.get(&n).or_else(|| self.values.get(&-n)).copied()
    }

    /// Largest `N` such that `σ̂(1..=N)` are all available.
    pub fn window(&self) -> i64 {
        let mut n = 0;
        while self.get(n + 1).is_some() {
            n += 1;
        }
        n
    }

    fn require(&self, needed: i64) -> Result<i64> {
        let available = self.window();
        if available < needed {
            return Err(SpectralError::WindowTooSmall { needed, available });
        }
        Ok(available)
    }

    /// Checks `σ̂(0) > 0`, `|σ̂(n)| ≤ σ̂(0)` and `σ̂(−n) = σ̂(n)`, each up to
    /// the recorded error bounds.
    pub fn validate(&self) -> Result<()> {
        let zero = self.get(0).ok_or_else(|| SpectralError::InvalidSequence("σ̂(0) missing".into()))?;
        if zero.upper() <= 0.0 {
            return Err(SpectralError::InvalidSequence("σ̂(0) must be positive".into()));
        }
        let tol = |x: f64| 1e-12 * x.abs().max(1.0);
        for (&n, v) in &self.values {
            if v.value.abs() > zero.value + zero.error_bound + v.error_bound + tol(zero.value) {
                return Err(SpectralError::InvalidSequence(format!("|σ̂({n})| exceeds σ̂(0)")));
            }
            if let Some(w) = self.values.get(&-n) {
                if (v.value - w.value).abs() > v.error_bound + w.error_bound + tol(v.value) {
                    return Err(SpectralError::InvalidSequence(format!("σ̂({n}) ≠ σ̂({})", -n)));
                }
            }
        }
        Ok(())
    }

    pub fn read_csv<R: io::Read>(source: impl Into<String>, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut values = BTreeMap::new();
        for row in rdr.deserialize::<Row>() {
            let row = row.map_err(|e| SpectralError::Csv(e.to_string()))?;
            if !row.value.is_finite() || !(row.error_bound >= 0.0) {
                return Err(SpectralError::Csv(format!("bad row for n = {}", row.n)));
            }
            values.insert(row.n, BoundedValue::new(row.value, row.error_bound));
        }
        Ok(CorrelationSequence { source: source.into(), values })
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (&n, v) in &self.values {
            w.serialize(Row { n, value: v.value, error_bound: v.error_bound })
                .map_err(|e| SpectralError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| SpectralError::Csv(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WienerEstimate {
    pub window: i64,
    /// `(1/N) Σ_{n=1..N} |σ̂(n)|²`.
    pub mass: f64,
    /// Worst-case change of `mass` over the error intervals.
    pub error_bound: f64,
    /// Same average over `n ≤ N/2`.
    pub half_window_mass: f64,
}

fn cesaro_sq(corr: &CorrelationSequence, n: i64) -> (f64, f64) {
    let (mut s, mut e) = (0.0, 0.0);
    for i in 1..=n {
        let v = corr.get(i).expect("window checked");
        s += v.value * v.value;
        e += 2.0 * v.value.abs() * v.error_bound + v.error_bound * v.error_bound;
    }
    (s / n as f64, e / n as f64)
}

/// Cesàro mean of `|σ̂(n)|²`, which tends to the sum of squared atom masses.
pub fn wiener_discrete_mass(corr: &CorrelationSequence) -> Result<WienerEstimate> {
    let n = corr.require(32)?;
    let (mass, error_bound) = cesaro_sq(corr, n);
    let (half, _) = cesaro_sq(corr, n / 2);
    Ok(WienerEstimate { window: n, mass, error_bound, half_window_mass: half })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RajchmanStats {
    pub window: i64,
    /// `max |σ̂(n)|` over `3N/4 < n ≤ N`.
    pub outer_quartile_max: f64,
    pub outer_quartile_error: f64,
    /// Least-squares slope of `log max_{n ∈ [2^j, 2^{j+1})} |σ̂(n)|` against
    /// `log 2^j`; absent when fewer than two blocks are nonzero.
    pub envelope_slope: Option<f64>,
}

pub fn rajchman_probe(corr: &CorrelationSequence) -> Result<RajchmanStats> {
    let n = corr.require(64)?;
    let (mut qmax, mut qerr) = (0.0f64, 0.0f64);
    for i in (3 * n / 4 + 1)..=n {
        let v = corr.get(i).expect("window checked");
        if v.value.abs() >= qmax {
            qmax = v.value.abs();
            qerr = v.error_bound;
        }
    }
    let mut pts = Vec::new();
    let mut lo = 1;
    while lo <= n {
        let hi = (2 * lo - 1).min(n);
        let m = (lo..=hi).map(|i| corr.get(i).expect("window checked").value.abs()).fold(0.0, f64::max);
        if m > 0.0 {
            pts.push(((lo as f64).ln(), m.ln()));
        }
        lo *= 2;
    }
    Ok(RajchmanStats { window: n, outer_quartile_max: qmax, outer_quartile_error: qerr, envelope_slope: slope(&pts) })
}

pub(crate) fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TranslationCoefficient {
    pub j: i64,
    /// `σ̂(n_k + j)` for each time.
    pub sequence: Vec<BoundedValue>,
    pub estimate: f64,
    /// max − min over the last three times.
    pub spread: f64,
    pub stabilized: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TranslationProbe {
    pub times: Vec<i64>,
    pub threshold: f64,
    pub coefficients: Vec<TranslationCoefficient>,
}

impl TranslationProbe {
    pub fn coefficient(&self, j: i64) -> Option<&TranslationCoefficient> {
        self.coefficients.iter().find(|c| c.j == j)
    }
}

/// Fourier data `σ̂(n_k + j)` of `e^{i n_k θ} dσ` for `|j| ≤ j_window`; a
/// stable limit in `k` identifies a weak* limit.
pub fn translation_probe(corr: &CorrelationSequence, times: &[i64], j_window: i64) -> Result<TranslationProbe> {
    if times.is_empty() || j_window < 0 {
        return Err(SpectralError::InvalidSequence("need at least one time and j_window ≥ 0".into()));
    }
    let reach = times.iter().map(|t| t.abs() + j_window).max().unwrap_or(0);
    corr.require(reach)?;
    let coefficients = (-j_window..=j_window)
        .map(|j| {
            let sequence: Vec<BoundedValue> = times.iter().map(|&t| corr.get(t + j).expect("window checked")).collect();
            let tail = &sequence[sequence.len().saturating_sub(3)..];
            let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.value), hi.max(v.value)));
            let spread = hi - lo;
            TranslationCoefficient {
                j,
                estimate: sequence.last().expect("nonempty").value,
                spread,
                stabilized: spread <= STABILITY_THRESHOLD,
                sequence,
            }
        })
        .collect();
    Ok(TranslationProbe { times: times.to_vec(), threshold: STABILITY_THRESHOLD, coefficients })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToeplitzCheck {
    pub size: usize,
    pub min_eigenvalue: f64,
    /// Largest row sum of error bounds: a bound on the spectral norm of the
    /// perturbation.
    pub slack: f64,
    pub passes: bool,
}

/// Positive semidefiniteness of `[σ̂(i − j)]_{0 ≤ i,j < size}` up to the
/// error-bound slack.
pub fn toeplitz_check(corr: &CorrelationSequence, size: usize) -> Result<ToeplitzCheck> {
    corr.require(size as i64 - 1)?;
    let at = |d: i64| corr.get(d).expect("window checked");
    let m = DMatrix::from_fn(size, size, |i, j| at(i as i64 - j as i64).value);
    let slack = (0..size)
        .map(|i| (0..size).map(|j| at(i as i64 - j as i64).error_bound).sum::<f64>())
        .fold(0.0, f64::max);
    let min_eigenvalue = m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = at(0).value.abs().max(1.0);
    Ok(ToeplitzCheck { size, min_eigenvalue, slack, passes: min_eigenvalue >= -slack - 1e-10 * scale })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralReport {
    pub source: String,
    pub wiener: WienerEstimate,
    pub rajchman: Option<RajchmanStats>,
    pub translation: Option<TranslationProbe>,
    pub toeplitz: ToeplitzCheck,
    pub certificate: Option<Certificate>,
}

/// Runs every sequence diagnostic that the window allows.
pub fn spectral_report(
    corr: &CorrelationSequence,
    times: Option<(&[i64], i64)>,
    certificate: Option<Certificate>,
) -> Result<SpectralReport> {
    corr.validate()?;
    Ok(SpectralReport {
        source: corr.source.clone(),
        wiener: wiener_discrete_mass(corr)?,
        rajchman: rajchman_probe(corr).ok(),
        translation: times.map(|(t, j)| translation_probe(corr, t, j)).transpose()?,
        toeplitz: toeplitz_check(corr, 9.min(corr.window() as usize + 1))?,
        certificate,
    })
}
