use crate::report::{bounded_csv, CliError, Output};
use crate::*;
use rigidity::rankone::{self, Correlator, LevelSet, RankOneSpec};
use rigidity::skew::{self, Cocycle, Dyadic, DyadicInterval, Fiber, SkewSystem, StepCocycle, StepFunction, TestFunction};
use rigidity::spectral::{self, CorrelationSequence, WeakLimitCoefficients};
use rigidity::substitution::{self as subst, Substitution};
use serde_json::json;
use std::collections::BTreeMap;
use std::path::Path;

const MAX_STAGES: usize = 30;
const MAX_WINDOW: i64 = 1 << 16;

/// Rigidity constant of the 3-letter preset as published.
const THREE_LETTER_REFERENCE: f64 = 0.3104979673e-7;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn load_substitution(name: &str) -> Result<Substitution, CliError> {
    Ok(match name {
        "rudin-shapiro" => Substitution::rudin_shapiro(),
        "three-letter" => Substitution::three_letter(),
        "fibonacci" => Substitution::fibonacci(),
        path => subst::parse_substitution(&read(Path::new(path))?)?,
    })
}

fn check_stages(n: usize) -> Result<(), CliError> {
    if n == 0 || n > MAX_STAGES {
        return Err(CliError::config(format!("--stages must be in 1..={MAX_STAGES}")));
    }
    Ok(())
}

fn check_window(w: i64) -> Result<(), CliError> {
    if !(1..=MAX_WINDOW).contains(&w) {
        return Err(CliError::config(format!("--window must be in 1..={MAX_WINDOW}")));
    }
    Ok(())
}

/// A schedule with exactly `n` stages.
fn load_rank_one(name: &str, n: usize) -> Result<RankOneSpec, CliError> {
    check_stages(n)?;
    if let Some(spec) = rankone::preset(name, n) {
        return Ok(spec);
    }
    let spec = rankone::parse_rank_one(&read(Path::new(name))?)?;
    if spec.num_stages() < n {
        return Err(CliError::config(format!("schedule has {} stages, --stages is {n}", spec.num_stages())));
    }
    Ok(RankOneSpec::new(spec.stages()[..n].to_vec(), spec.name.clone())?)
}

fn parse_range(s: &str) -> Result<(u64, u64), CliError> {
    let bad = || CliError::config(format!("expected a range `a..b`, got `{s}`"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn level_set(spec: &RankOneSpec, stage: usize, levels: &str) -> Result<LevelSet, CliError> {
    let set = if levels == "all" {
        LevelSet::whole_stage(spec, stage)?
    } else {
        let parsed = levels
            .split(',')
            .map(|t| t.trim().parse::<u128>().map_err(|_| CliError::config(format!("bad level `{t}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        LevelSet::new(stage, parsed, format!("levels {levels} of stage {stage}"))
    };
    set.validate(spec)?;
    Ok(set)
}

pub fn subst_analyze(a: &SubstAnalyze) -> Result<Output, CliError> {
    let sub = load_substitution(&a.system)?;
    let m = subst::composition_matrix(&sub);
    let perron = subst::perron(&m, a.tol)?;
    let pair = subst::pair_substitution(&sub)?;
    let freqs = subst::block_frequencies(&sub, a.tol)?;
    let rc = subst::rigidity_constant(&sub, a.tol)?;
    if a.prefix < 2 {
        return Err(CliError::config("--prefix must be at least 2"));
    }
    let u = subst::fixed_point_prefix(&sub, a.prefix)?;
    let mut counts: BTreeMap<subst::Block, usize> = BTreeMap::new();
    for w in u.windows(2) {
        *counts.entry(subst::Block(w[0], w[1])).or_default() += 1;
    }
    let total = (a.prefix - 1) as f64;
    let empirical: BTreeMap<String, f64> = counts.iter().map(|(b, &c)| (b.to_string(), c as f64 / total)).collect();
    let max_dev = freqs
        .iter()
        .map(|(b, f)| (f - counts.get(b).map_or(0.0, |&c| c as f64 / total)).abs())
        .fold(0.0, f64::max);
    let reference = a.reference_alpha.or((a.system == "three-letter").then_some(THREE_LETTER_REFERENCE));
    let comparison = reference.map(|r| {
        let rel = (rc.alpha - r).abs() / r.abs().max(f64::MIN_POSITIVE);
        json!({
            "reference_alpha": r,
            "computed_alpha": rc.alpha,
            "relative_difference": rel,
            "discrepancy": rel > 1e-6,
        })
    });
    let images: BTreeMap<String, Vec<String>> = pair
        .block_alphabet
        .iter()
        .map(|&b| (b.to_string(), pair.image_blocks(b).unwrap_or_default().iter().map(|x| x.to_string()).collect()))
        .collect();
    Ok(Output::json(&json!({
        "substitution": sub.to_text().lines().collect::<Vec<_>>(),
        "alphabet_size": sub.alphabet_size(),
        "matrix": m.rows(),
        "primitive": m.is_primitive(),
        "perron": perron,
        "pair_substitution": images,
        "block_frequencies": freqs.iter().map(|(b, f)| (b.to_string(), *f)).collect::<BTreeMap<_, _>>(),
        "empirical_block_frequencies": { "prefix": a.prefix, "values": empirical, "max_deviation": max_dev },
        "rigidity_constant": rc,
        "reference_comparison": comparison,
    })))
}

pub fn subst_correlate(a: &SubstCorrelate) -> Result<Output, CliError> {
    let sub = load_substitution(&a.system)?;
    let block: Vec<usize> = if a.block.contains(',') {
        a.block.split(',').map(|t| t.trim().parse().map_err(|_| CliError::config(format!("bad letter `{t}`")))).collect::<Result<_, _>>()?
    } else {
        a.block.chars().map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(|| CliError::config(format!("bad letter `{c}`")))).collect::<Result<_, _>>()?
    };
    let rows = a
        .shifts
        .iter()
        .map(|&m| Ok((m, subst::empirical_correlation(&sub, &block, m, a.prefix)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut csv = String::from("n,value\n");
    for (m, v) in &rows {
        csv.push_str(&format!("{m},{v}\n"));
    }
    let values: Vec<_> = rows.iter().map(|(m, v)| json!({ "shift": m, "value": v })).collect();
    Ok(Output::json(&json!({ "block": block, "prefix": a.prefix, "correlations": values })).with_csv(csv))
}

pub fn rankone_heights(a: &RankOneHeights) -> Result<Output, CliError> {
    let spec = load_rank_one(&a.system, a.stages)?;
    let h = rankone::heights(&spec);
    let shown = &h[..a.stages];
    let masses = (0..a.stages).map(|n| rankone::total_mass(&spec, n).map(|m| m.to_string())).collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from("n,height,mass\n");
    for (n, (hn, m)) in shown.iter().zip(&masses).enumerate() {
        csv.push_str(&format!("{n},{hn},{m}\n"));
    }
    Ok(Output::json(&json!({
        "schedule": spec.to_text().lines().collect::<Vec<_>>(),
        "heights": shown.iter().map(u128::to_string).collect::<Vec<_>>(),
        "masses": masses,
    }))
    .with_csv(csv))
}

pub fn rankone_correlate(a: &RankOneCorrelate) -> Result<Output, CliError> {
    let spec = load_rank_one(&a.system, a.stages)?;
    let set = level_set(&spec, a.level_stage, &a.levels)?;
    let mut corr = Correlator::new(&spec, a.stages, &set, &set)?;
    let mut rows = Vec::new();
    let mut csv = Vec::new();
    for &m in &a.shifts {
        let c = corr.counts(m)?;
        let b = c.to_bounded();
        csv.push((m.to_string(), b.value, b.error_bound));
        rows.push(json!({
            "shift": m.to_string(),
            "value": b.value,
            "error_bound": b.error_bound,
            "lower": c.lower().to_string(),
            "upper": c.upper().to_string(),
        }));
    }
    Ok(Output::json(&json!({
        "set": set.description,
        "measure": set.measure(&spec)?.to_string(),
        "stage": a.stages,
        "correlations": rows,
    }))
    .with_csv(bounded_csv(csv)))
}

pub fn rankone_weaklimit(a: &RankOneWeakLimit) -> Result<Output, CliError> {
    let spec = load_rank_one(&a.system, a.stages)?;
    let set = LevelSet::single(a.level_stage, a.level);
    let est = rankone::weak_limit_estimate(&spec, &set, a.from..=a.to, a.j_max)?;
    let coeffs = WeakLimitCoefficients::from_estimate(&est, spectral::TailDescriptor::None)?;
    if let Some(path) = &a.coefficients_out {
        let text = serde_json::to_string_pretty(&coeffs).expect("coefficients serialize") + "\n";
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    }
    let csv = bounded_csv(est.coefficients.iter().map(|c| (c.j.to_string(), c.estimate, c.per_time.last().map_or(0.0, |b| b.error_bound))));
    Ok(Output::json(&json!({ "estimate": est, "max_spread": est.max_spread(), "coefficients": coeffs })).with_csv(csv))
}

pub fn rankone_rigidity(a: &RankOneRigidity) -> Result<Output, CliError> {
    let spec = load_rank_one(&a.system, a.stages)?;
    let (lo, hi) = parse_range(&a.shift_stages)?;
    let h = rankone::heights(&spec);
    if hi as usize >= a.stages {
        return Err(CliError::config("--shift-stages must end below --stages"));
    }
    let shifts: Vec<u128> = h[lo as usize..=hi as usize].to_vec();
    let mut sets: Vec<LevelSet> = (0..h[a.level_stage.min(a.stages)]).map(|l| LevelSet::single(a.level_stage, l)).collect();
    sets.push(LevelSet::whole_stage(&spec, a.level_stage)?);
    let scan = rankone::rigidity_scan(&spec, a.stages, &shifts, &sets)?;
    let csv = bounded_csv(scan.per_set.iter().map(|w| (w.best_shift.to_string(), w.ratio, w.max_error_bound)));
    Ok(Output::json(&json!({
        "shifts": shifts.iter().map(u128::to_string).collect::<Vec<_>>(),
        "lower_bound": scan.lower_bound,
        "max_error_bound": scan.max_error_bound,
        "per_set": scan.per_set,
    }))
    .with_csv(csv))
}

fn load_skew(s: &SkewSystemArgs) -> Result<SkewSystem, CliError> {
    let cocycle = if s.system == "mathew-nadkarni" {
        Cocycle::MathewNadkarni
    } else {
        let v: serde_json::Value =
            serde_json::from_str(&read(Path::new(&s.system))?).map_err(|e| CliError::config(format!("cocycle file: {e}")))?;
        let bad = || CliError::config("cocycle file needs `breakpoints` (dyadic strings) and `values` (0/1)");
        let breakpoints = v["breakpoints"]
            .as_array()
            .ok_or_else(bad)?
            .iter()
            .map(|b| b.as_str().ok_or_else(bad)?.parse::<Dyadic>().map_err(CliError::from))
            .collect::<Result<Vec<_>, _>>()?;
        let values = v["values"]
            .as_array()
            .ok_or_else(bad)?
            .iter()
            .map(|x| x.as_u64().filter(|&x| x <= 1).map(|x| x as u8).ok_or_else(bad))
            .collect::<Result<Vec<_>, _>>()?;
        Cocycle::Step(StepCocycle { breakpoints, values })
    };
    Ok(SkewSystem::new(s.atom_level, s.cutoff, cocycle)?)
}

fn check_eps(e: u8) -> Result<u8, CliError> {
    if e > 1 {
        return Err(CliError::config("ε must be 0 or 1"));
    }
    Ok(e)
}

pub fn skew_correlate(a: &SkewCorrelate) -> Result<Output, CliError> {
    let sys = load_skew(&a.sys)?;
    let interval: DyadicInterval = a.interval.parse()?;
    let (e1, e2) = (check_eps(a.eps)?, check_eps(a.eps2.unwrap_or(a.eps))?);
    let engine = skew::SkewEngine::new(&sys);
    let rows = a
        .shifts
        .iter()
        .map(|&m| Ok((m, engine.correlation(&interval, e1, e2, m)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let csv = bounded_csv(rows.iter().map(|(m, b)| (m.to_string(), b.value, b.error_bound)));
    let values: Vec<_> = rows.iter().map(|(m, b)| json!({ "shift": m, "value": b.value, "error_bound": b.error_bound })).collect();
    Ok(Output::json(&json!({ "system": sys, "interval": interval.to_string(), "correlations": values })).with_csv(csv))
}

fn parse_g(s: &str) -> Result<StepFunction, CliError> {
    match s {
        "one" => Ok(StepFunction::constant(1.0)),
        "sign" => Ok(StepFunction::first_digit_sign()),
        _ => {
            let i = s.strip_prefix("interval:").ok_or_else(|| CliError::config(format!("unknown g `{s}`")))?;
            Ok(StepFunction::indicator(&i.parse()?))
        }
    }
}

pub fn skew_spectrum(a: &SkewSpectrum) -> Result<Output, CliError> {
    check_window(a.window)?;
    let sys = load_skew(&a.sys)?;
    let fiber = match a.fiber.as_str() {
        "trivial" => Fiber::Trivial,
        "character" => Fiber::Character,
        f => return Err(CliError::config(format!("unknown fiber `{f}`"))),
    };
    let f = TestFunction { g: parse_g(&a.g)?, fiber };
    let coeffs = skew::spectral_sequence(&f, a.window, &sys)?;
    let csv = bounded_csv(coeffs.iter().map(|c| (c.index.to_string(), c.value, c.error_bound)));
    let seq = CorrelationSequence::from_coefficients(format!("skew {} {}", a.g, a.fiber), &coeffs);
    let toeplitz = spectral::toeplitz_check(&seq, 9.min(a.window as usize + 1))?;
    Ok(Output::json(&json!({
        "system": sys,
        "function": f,
        "max_error_bound": coeffs.iter().map(|c| c.error_bound).fold(0.0, f64::max),
        "toeplitz": toeplitz,
        "coefficients": coeffs,
    }))
    .with_csv(csv))
}

pub fn skew_rigidity(a: &SkewRigidity) -> Result<Output, CliError> {
    let sys = load_skew(&a.sys)?;
    let interval: DyadicInterval = a.interval.parse()?;
    let (lo, hi) = parse_range(&a.k)?;
    if hi > 62 {
        return Err(CliError::config("k must be at most 62"));
    }
    let points = skew::rigidity_sequence(&interval, check_eps(a.eps)?, lo as u32..=hi as u32, &sys)?;
    let csv = bounded_csv(points.iter().map(|p| (p.time.to_string(), p.correlation.value, p.correlation.error_bound)));
    Ok(Output::json(&json!({ "system": sys, "interval": interval.to_string(), "points": points })).with_csv(csv))
}

fn load_sequence(path: &Path, window: Option<i64>) -> Result<CorrelationSequence, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut seq = CorrelationSequence::read_csv(path.display().to_string(), file)?;
    if let Some(w) = window {
        check_window(w)?;
        seq.values.retain(|n, _| n.abs() <= w);
    }
    Ok(seq)
}

pub fn spectral_wiener(a: &SeqArgs) -> Result<Output, CliError> {
    let seq = load_sequence(&a.input, a.window)?;
    Ok(Output::json(&spectral::wiener_discrete_mass(&seq)?))
}

pub fn spectral_rajchman(a: &SeqArgs) -> Result<Output, CliError> {
    let seq = load_sequence(&a.input, a.window)?;
    Ok(Output::json(&spectral::rajchman_probe(&seq)?))
}

pub fn spectral_translate(a: &Translate) -> Result<Output, CliError> {
    let seq = load_sequence(&a.input, a.window)?;
    let probe = spectral::translation_probe(&seq, &a.times, a.j_window)?;
    let csv = bounded_csv(probe.coefficients.iter().map(|c| (c.j.to_string(), c.estimate, c.spread)));
    Ok(Output::json(&probe).with_csv(csv.replacen("error_bound", "spread", 1)))
}

fn load_coefficients(path: &Path) -> Result<WeakLimitCoefficients, CliError> {
    Ok(WeakLimitCoefficients::from_json(&read(path)?)?)
}

pub fn spectral_beurling(a: &CoeffArgs) -> Result<Output, CliError> {
    let c = load_coefficients(&a.input)?;
    Ok(Output::json(&json!({ "coefficients": c, "report": spectral::beurling_check(&c, a.n_max)? })))
}

pub fn spectral_certify(a: &Certify) -> Result<Output, CliError> {
    let c = load_coefficients(&a.input)?;
    Ok(Output::json(&json!({ "coefficients": c, "certificate": spectral::singularity_certificate(&c, a.n_max, a.non_power)? })))
}
