//! Pairwise preference prediction from metric differences, and simulated
//! win rates against a fixed baseline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricReport;

pub const UNCALIBRATED: &str = "uncalibrated-normalization";
pub const NOT_CONVERGED: &str = "not-converged";
pub const WITH_TEXT: &str = "with-text";

/// Dimensions of the default model.
pub const DEFAULT_DIMS: [&str; 4] = ["block_match", "position", "color", "visual"];

#[derive(Debug, Error, PartialEq)]
pub enum WinRateError {
    #[error("unknown or missing dimension {0}")]
    MissingDimension(String),
    #[error("degenerate normalization: std of {0} is not positive")]
    DegenerateNormalization(String),
    #[error("feature has {got} dimensions, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite feature value")]
    NonFinite,
    #[error("training labels are all {0}")]
    SingleClass(&'static str),
    #[error("need at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("pairs do not share a reference: {0} vs {1}")]
    Misaligned(String, String),
    #[error("no reports")]
    Empty,
}

/// Per-dimension mean and standard deviation used for z-normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub dims: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl NormalizationStats {
    pub fn identity(dims: &[&str]) -> Self {
        NormalizationStats {
            dims: dims.iter().map(|d| d.to_string()).collect(),
            means: vec![0.0; dims.len()],
            stds: vec![1.0; dims.len()],
        }
    }

    /// Population mean and standard deviation of each dimension over `reports`.
    pub fn from_reports<'a>(
        dims: &[&str],
        reports: impl IntoIterator<Item = &'a MetricReport>,
    ) -> Result<Self, WinRateError> {
        let reports: Vec<&MetricReport> = reports.into_iter().collect();
        if reports.is_empty() {
            return Err(WinRateError::Empty);
        }
        let n = reports.len() as f64;
        let mut means = Vec::new();
        let mut stds = Vec::new();
        for d in dims {
            let vals = reports
                .iter()
                .map(|r| r.score(d).ok_or_else(|| WinRateError::MissingDimension(d.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            means.push(mean);
            stds.push(var.sqrt());
        }
        let stats = NormalizationStats {
            dims: dims.iter().map(|d| d.to_string()).collect(),
            means,
            stds,
        };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<(), WinRateError> {
        if self.means.len() != self.dims.len() || self.stds.len() != self.dims.len() {
            return Err(WinRateError::DimensionMismatch {
                expected: self.dims.len(),
                got: self.means.len().min(self.stds.len()),
            });
        }
        for (d, s) in self.dims.iter().zip(&self.stds) {
            if !(*s > 0.0) || !s.is_finite() {
                return Err(WinRateError::DegenerateNormalization(d.clone()));
            }
        }
        Ok(())
    }
}

/// Normalized score differences plus the constant term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub dims: Vec<String>,
    pub deltas: Vec<f64>,
    pub constant: f64,
}

impl FeatureVector {
    pub fn new(dims: &[&str], deltas: Vec<f64>) -> Self {
        FeatureVector {
            dims: dims.iter().map(|d| d.to_string()).collect(),
            deltas,
            constant: 1.0,
        }
    }

    /// Deltas followed by the constant.
    pub fn row(&self) -> Vec<f64> {
        let mut row = self.deltas.clone();
        row.push(self.constant);
        row
    }

    pub fn negated(&self) -> Self {
        FeatureVector {
            deltas: self.deltas.iter().map(|d| -d).collect(),
            ..self.clone()
        }
    }
}

/// z-normalizes each dimension of both reports and subtracts.
pub fn build_features(
    report1: &MetricReport,
    report2: &MetricReport,
    norm: &NormalizationStats,
) -> Result<FeatureVector, WinRateError> {
    norm.validate()?;
    let mut deltas = Vec::with_capacity(norm.dims.len());
    for (i, d) in norm.dims.iter().enumerate() {
        let a = report1.score(d).ok_or_else(|| WinRateError::MissingDimension(d.clone()))?;
        let b = report2.score(d).ok_or_else(|| WinRateError::MissingDimension(d.clone()))?;
        let z = |v: f64| (v - norm.means[i]) / norm.stds[i];
        let delta = z(a) - z(b);
        if !delta.is_finite() {
            return Err(WinRateError::NonFinite);
        }
        deltas.push(delta);
    }
    Ok(FeatureVector {
        dims: norm.dims.clone(),
        deltas,
        constant: 1.0,
    })
}

/// Logistic model over normalized score differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRateModel {
    pub dims: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub norm_means: Vec<f64>,
    pub norm_stds: Vec<f64>,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl WinRateModel {
    /// The published four-dimension model. Its normalization statistics were
    /// never released, so identity stats stand in and the model is flagged.
    pub fn published() -> Self {
        WinRateModel {
            dims: DEFAULT_DIMS.iter().map(|d| d.to_string()).collect(),
            coefficients: vec![0.6238, 0.7504, 0.3443, 0.4630],
            intercept: 0.5540,
            norm_means: vec![0.0; 4],
            norm_stds: vec![1.0; 4],
            flags: vec![UNCALIBRATED.to_string()],
        }
    }

    /// The published regression that also includes text. Only its
    /// coefficients were reported; the intercept is taken as 0.
    pub fn published_with_text() -> Self {
        WinRateModel {
            dims: ["block_match", "text", "position", "color", "visual"]
                .iter()
                .map(|d| d.to_string())
                .collect(),
            coefficients: vec![0.7429, -0.3541, 0.7605, 0.3461, 0.4929],
            intercept: 0.0,
            norm_means: vec![0.0; 5],
            norm_stds: vec![1.0; 5],
            flags: vec![UNCALIBRATED.to_string(), WITH_TEXT.to_string()],
        }
    }

    pub fn normalization(&self) -> NormalizationStats {
        NormalizationStats {
            dims: self.dims.clone(),
            means: self.norm_means.clone(),
            stds: self.norm_stds.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), WinRateError> {
        if self.coefficients.len() != self.dims.len() {
            return Err(WinRateError::DimensionMismatch {
                expected: self.dims.len(),
                got: self.coefficients.len(),
            });
        }
        for d in &self.dims {
            if !MetricReport::DIMENSIONS.contains(&d.as_str()) {
                return Err(WinRateError::MissingDimension(d.clone()));
            }
        }
        self.normalization().validate()
    }

    pub fn is_flagged(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }

    /// Probability that the first report of the feature vector wins.
    pub fn predict(&self, fv: &FeatureVector) -> Result<f64, WinRateError> {
        if fv.deltas.len() != self.coefficients.len() || fv.dims != self.dims {
            return Err(WinRateError::DimensionMismatch {
                expected: self.coefficients.len(),
                got: fv.deltas.len(),
            });
        }
        if fv.deltas.iter().any(|d| !d.is_finite()) {
            return Err(WinRateError::NonFinite);
        }
        let z = self.intercept * fv.constant
            + self.coefficients.iter().zip(&fv.deltas).map(|(c, d)| c * d).sum::<f64>();
        Ok(sigmoid(z))
    }

    pub fn predict_reports(&self, first: &MetricReport, second: &MetricReport) -> Result<f64, WinRateError> {
        self.predict(&build_features(first, second, &self.normalization())?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        let model: WinRateModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// One human judgment: did `first` beat `second` on the same reference?
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedPair {
    pub first: MetricReport,
    pub second: MetricReport,
    pub win: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Bound on the infinity norm of the mean log-likelihood gradient.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 100,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: WinRateModel,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub training_accuracy: f64,
}

/// Maximum-likelihood fit. Normalization stats come from every report in
/// `pairs`. A model that misses the tolerance is still returned, flagged
/// `not-converged`.
pub fn fit(pairs: &[AnnotatedPair], dims: &[&str], opts: &FitOptions) -> Result<FitReport, WinRateError> {
    if pairs.len() < 2 {
        return Err(WinRateError::TooFewPairs(pairs.len()));
    }
    for p in pairs {
        if p.first.ref_id != p.second.ref_id {
            return Err(WinRateError::Misaligned(p.first.ref_id.clone(), p.second.ref_id.clone()));
        }
    }
    if pairs.iter().all(|p| p.win) {
        return Err(WinRateError::SingleClass("win"));
    }
    if pairs.iter().all(|p| !p.win) {
        return Err(WinRateError::SingleClass("lose"));
    }
    let norm = NormalizationStats::from_reports(dims, pairs.iter().flat_map(|p| [&p.first, &p.second]))?;
    let rows = pairs
        .iter()
        .map(|p| build_features(&p.first, &p.second, &norm).map(|f| f.row()))
        .collect::<Result<Vec<_>, _>>()?;
    let labels: Vec<bool> = pairs.iter().map(|p| p.win).collect();
    let (beta, iterations, gradient_norm) = newton_logistic(&rows, &labels, opts)?;
    let converged = gradient_norm <= opts.tolerance;

    let k = dims.len();
    let model = WinRateModel {
        dims: norm.dims.clone(),
        coefficients: beta[..k].to_vec(),
        intercept: beta[k],
        norm_means: norm.means,
        norm_stds: norm.stds,
        flags: if converged { vec![] } else { vec![NOT_CONVERGED.to_string()] },
    };
    if !converged {
        log::warn!("logistic fit stopped after {iterations} iterations, gradient norm {gradient_norm:.3e}");
    }
    let correct = rows
        .iter()
        .zip(&labels)
        .filter(|(r, &y)| (sigmoid(dot(&beta, r)) > 0.5) == y)
        .count();
    Ok(FitReport {
        model,
        iterations,
        converged,
        gradient_norm,
        training_accuracy: correct as f64 / rows.len() as f64,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mean_log_likelihood(beta: &[f64], rows: &[Vec<f64>], y: &[bool]) -> f64 {
    let total: f64 = rows
        .iter()
        .zip(y)
        .map(|(r, &yi)| {
            let z = dot(beta, r);
            // log sigmoid(z) and log(1 - sigmoid(z)) without overflow.
            let log1pexp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            if yi {
                z - log1pexp
            } else {
                -log1pexp
            }
        })
        .sum();
    total / rows.len() as f64
}

/// Newton-Raphson with step halving. Returns coefficients, iterations used
/// and the final gradient infinity norm.
pub fn newton_logistic(
    rows: &[Vec<f64>],
    y: &[bool],
    opts: &FitOptions,
) -> Result<(Vec<f64>, usize, f64), WinRateError> {
    let k = rows.first().map_or(0, Vec::len);
    let n = rows.len() as f64;
    let mut beta = vec![0.0; k];
    let mut ll = mean_log_likelihood(&beta, rows, y);

    let gradient_hessian = |beta: &[f64]| {
        let mut g = vec![0.0; k];
        let mut h = vec![vec![0.0; k]; k];
        for (r, &yi) in rows.iter().zip(y) {
            let p = sigmoid(dot(beta, r));
            let resid = f64::from(u8::from(yi)) - p;
            let w = p * (1.0 - p);
            for a in 0..k {
                g[a] += resid * r[a] / n;
                for b in 0..=a {
                    h[a][b] += w * r[a] * r[b] / n;
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                h[b][a] = h[a][b];
            }
        }
        (g, h)
    };

    let mut iterations = 0;
    let (mut g, mut h) = gradient_hessian(&beta);
    let mut gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    while gnorm > opts.tolerance && iterations < opts.max_iterations {
        iterations += 1;
        // Collinear dimensions or (quasi-)separable data make the Hessian
        // singular; damp the diagonal until it solves.
        let Some(step) = damped_step(&h, &g) else {
            break;
        };
        let mut scale = 1.0;
        let mut next;
        loop {
            next = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect::<Vec<_>>();
            let next_ll = mean_log_likelihood(&next, rows, y);
            if next_ll >= ll - 1e-15 || scale < 1e-10 {
                ll = next_ll;
                break;
            }
            scale *= 0.5;
        }
        beta = next;
        (g, h) = gradient_hessian(&beta);
        gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    Ok((beta, iterations, gnorm))
}

/// Newton step `h^-1 g`, retried on `h + lambda I` with growing `lambda`
/// when `h` is singular.
fn damped_step(h: &[Vec<f64>], g: &[f64]) -> Option<Vec<f64>> {
    if let Some(step) = solve_linear(h.to_vec(), g.to_vec()) {
        return Some(step);
    }
    let scale = (0..h.len()).map(|i| h[i][i]).fold(1e-12f64, f64::max);
    let mut lambda = 1e-8 * scale;
    while lambda <= scale {
        let mut damped = h.to_vec();
        for (i, row) in damped.iter_mut().enumerate() {
            row[i] += lambda;
        }
        if let Some(step) = solve_linear(damped, g.to_vec()) {
            return Some(step);
        }
        lambda *= 10.0;
    }
    None
}

/// Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Outcome of a simulated head-to-head over aligned pages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRate {
    pub rate: f64,
    pub wins: usize,
    pub pages: usize,
    pub probabilities: Vec<(String, f64)>,
    pub flags: Vec<String>,
}

/// Fraction of pages where the candidate is predicted to beat the baseline
/// (probability strictly above 0.5).
pub fn simulate_win_rate(
    model: &WinRateModel,
    candidate: &[MetricReport],
    baseline: &[MetricReport],
) -> Result<WinRate, WinRateError> {
    if candidate.is_empty() || baseline.is_empty() {
        return Err(WinRateError::Empty);
    }
    if candidate.len() != baseline.len() {
        return Err(WinRateError::DimensionMismatch {
            expected: baseline.len(),
            got: candidate.len(),
        });
    }
    let mut probabilities = Vec::with_capacity(candidate.len());
    for (c, b) in candidate.iter().zip(baseline) {
        if c.ref_id != b.ref_id {
            return Err(WinRateError::Misaligned(c.ref_id.clone(), b.ref_id.clone()));
        }
        probabilities.push((c.ref_id.clone(), model.predict_reports(c, b)?));
    }
    let wins = probabilities.iter().filter(|(_, p)| *p > 0.5).count();
    Ok(WinRate {
        rate: wins as f64 / probabilities.len() as f64,
        wins,
        pages: probabilities.len(),
        probabilities,
        flags: model.flags.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn report(id: &str, s: [f64; 5]) -> MetricReport {
        MetricReport::from_scores(id, "g", s)
    }

    #[test]
    fn zero_delta_gives_sigmoid_of_intercept() {
        let m = WinRateModel::published();
        let r = report("a", [0.7, 0.8, 0.6, 0.5, 0.9]);
        let p = m.predict_reports(&r, &r).unwrap();
        // 1 / (1 + exp(-0.554)), frozen from an independent evaluation.
        assert!((p - 0.635_063_1).abs() < 1e-6, "{p}");
        assert!(m.is_flagged(UNCALIBRATED));
    }

    #[test]
    fn feature_deltas() {
        let norm = NormalizationStats::identity(&["block_match"]);
        let fv = build_features(&report("a", [0.8, 0.0, 0.0, 0.0, 0.0]), &report("a", [0.3, 0.0, 0.0, 0.0, 0.0]), &norm)
            .unwrap();
        assert!((fv.deltas[0] - 0.5).abs() < 1e-12);
        assert_eq!(fv.row(), vec![fv.deltas[0], 1.0]);

        let bad = NormalizationStats {
            stds: vec![0.0],
            ..norm
        };
        let r = report("a", [0.5; 5]);
        assert_eq!(
            build_features(&r, &r, &bad),
            Err(WinRateError::DegenerateNormalization("block_match".into()))
        );
    }

    #[test]
    fn block_match_advantage_wins() {
        let m = WinRateModel::published();
        let fv = FeatureVector::new(&DEFAULT_DIMS, vec![10.0, 0.0, 0.0, 0.0]);
        assert!(m.predict(&fv).unwrap() > 0.5);
        let wrong = FeatureVector::new(&["block_match"], vec![1.0]);
        assert!(matches!(m.predict(&wrong), Err(WinRateError::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_intercept_antisymmetry() {
        let m = WinRateModel::published_with_text();
        let dims: Vec<&str> = m.dims.iter().map(String::as_str).collect();
        let fv = FeatureVector::new(&dims, vec![0.3, -0.2, 0.1, 0.7, -0.4]);
        let p = m.predict(&fv).unwrap();
        let q = m.predict(&fv.negated()).unwrap();
        assert!((p + q - 1.0).abs() < 1e-12);
        let zero = FeatureVector::new(&dims, vec![0.0; 5]);
        assert_eq!(m.predict(&zero).unwrap(), 0.5);
    }

    #[test]
    fn identical_reports_win_everywhere_under_published_model() {
        let reports: Vec<_> = (0..6).map(|i| report(&format!("p{i}"), [0.1 * i as f64; 5])).collect();
        let wr = simulate_win_rate(&WinRateModel::published(), &reports, &reports).unwrap();
        assert_eq!(wr.rate, 1.0);
        assert_eq!(wr.flags, vec![UNCALIBRATED.to_string()]);
    }

    #[test]
    fn dominating_candidate_wins() {
        let base: Vec<_> = (0..5).map(|i| report(&format!("p{i}"), [0.4; 5])).collect();
        let cand: Vec<_> = (0..5).map(|i| report(&format!("p{i}"), [0.9; 5])).collect();
        let mut m = WinRateModel::published();
        m.intercept = 0.0;
        assert_eq!(simulate_win_rate(&m, &cand, &base).unwrap().rate, 1.0);
        assert_eq!(simulate_win_rate(&m, &base, &cand).unwrap().rate, 0.0);
    }

    #[test]
    fn simulate_errors() {
        let m = WinRateModel::published();
        assert_eq!(simulate_win_rate(&m, &[], &[]), Err(WinRateError::Empty));
        let a = [report("x", [0.5; 5])];
        let b = [report("y", [0.5; 5])];
        assert!(matches!(simulate_win_rate(&m, &a, &b), Err(WinRateError::Misaligned(..))));
    }

    #[test]
    fn simulate_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut rand_report = |id: &str| report(id, [(); 5].map(|_| rng.gen::<f64>()));
        let cand: Vec<_> = (0..20).map(|i| rand_report(&format!("p{i}"))).collect();
        let base: Vec<_> = (0..20).map(|i| rand_report(&format!("p{i}"))).collect();
        let m = WinRateModel::published();
        let r1 = simulate_win_rate(&m, &cand, &base).unwrap().rate;
        let order: Vec<usize> = (0..20).map(|i| (i * 7) % 20).collect();
        let pc: Vec<_> = order.iter().map(|&i| cand[i].clone()).collect();
        let pb: Vec<_> = order.iter().map(|&i| base[i].clone()).collect();
        assert_eq!(simulate_win_rate(&m, &pc, &pb).unwrap().rate, r1);
    }

    #[test]
    fn fit_rejects_single_class_and_tiny_input() {
        let r = report("a", [0.5; 5]);
        let pair = AnnotatedPair { first: r.clone(), second: r, win: true };
        assert_eq!(
            fit(&[pair.clone(), pair.clone()], &DEFAULT_DIMS, &FitOptions::default()),
            Err(WinRateError::SingleClass("win"))
        );
        assert_eq!(fit(&[pair], &DEFAULT_DIMS, &FitOptions::default()), Err(WinRateError::TooFewPairs(1)));
    }

    fn random_pairs(n: usize, seed: u64, label: impl Fn(&[f64; 5], &[f64; 5], &mut ChaCha8Rng) -> bool) -> Vec<AnnotatedPair> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let a = [(); 5].map(|_| rng.gen::<f64>());
                let b = [(); 5].map(|_| rng.gen::<f64>());
                let win = label(&a, &b, &mut rng);
                let id = format!("p{i}");
                AnnotatedPair { first: report(&id, a), second: report(&id, b), win }
            })
            .collect()
    }

    #[test]
    fn separable_data_is_learned() {
        let pairs = random_pairs(400, 1, |a, b, _| a[0] + a[2] > b[0] + b[2]);
        let fit = fit(&pairs, &DEFAULT_DIMS, &FitOptions { max_iterations: 25, tolerance: 1e-8 }).unwrap();
        assert!(fit.training_accuracy >= 0.95, "{}", fit.training_accuracy);
        assert!(fit.model.coefficients[0] > 0.0 && fit.model.coefficients[1] > 0.0);
    }

    #[test]
    fn collinear_dimensions_share_weight() {
        // position duplicates block_match; labels are noisy in the sum
        let mut pairs = random_pairs(2000, 3, |a, b, rng| rng.gen_bool(sigmoid(2.0 * (a[0] - b[0]))));
        for p in &mut pairs {
            p.first.position = p.first.block_match;
            p.second.position = p.second.block_match;
        }
        let fit = fit(&pairs, &DEFAULT_DIMS, &FitOptions::default()).unwrap();
        assert!(fit.converged, "{}", fit.gradient_norm);
        let c = &fit.model.coefficients;
        assert!(c[0] > 0.1 && (c[0] - c[1]).abs() < 1e-6, "{c:?}");
    }

    #[test]
    fn random_labels_give_small_coefficients() {
        let pairs = random_pairs(4000, 2, |_, _, rng| rng.gen_bool(0.5));
        let fit = fit(&pairs, &DEFAULT_DIMS, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        for c in fit.model.coefficients.iter().chain([&fit.model.intercept]) {
            assert!(c.abs() < 0.1, "{c}");
        }
        assert!((fit.training_accuracy - 0.5).abs() < 0.05);
    }

    #[test]
    fn model_json_round_trip() {
        let m = WinRateModel::published();
        let text = m.to_json();
        for key in ["dims", "coefficients", "intercept", "norm_means", "norm_stds", "flags"] {
            assert!(text.contains(key), "{key}");
        }
        assert_eq!(WinRateModel::from_json(&text).unwrap(), m);
        let mut bad = m;
        bad.norm_stds[0] = 0.0;
        assert!(WinRateModel::from_json(&bad.to_json()).is_err());
    }

    #[test]
    fn linear_solver() {
        let x = solve_linear(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
        assert!(solve_linear(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_none());
    }
}
