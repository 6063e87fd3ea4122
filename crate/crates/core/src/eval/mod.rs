//! Logistic MOS mapping, correlation scoring, zone-weight estimation and
//! MOS statistics.

pub mod lm;
mod weights;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::zwf::ZoneWeights;

pub use lm::{LeastSquares, LmOptions, LmSolution};
pub use weights::{fit_zone_weights, project_to_simplex};

/// Parameters of `y = b1 (1/2 - 1/(1 + exp(b2 (x - b3)))) + b4 x + b5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
    pub beta5: f64,
}

impl LogisticParams {
    pub fn new(beta1: f64, beta2: f64, beta3: f64, beta4: f64, beta5: f64) -> Self {
        LogisticParams {
            beta1,
            beta2,
            beta3,
            beta4,
            beta5,
        }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.beta1, self.beta2, self.beta3, self.beta4, self.beta5]
    }

    pub fn from_slice(p: &[f64]) -> Self {
        LogisticParams::new(p[0], p[1], p[2], p[3], p[4])
    }
}

/// `1 / (1 + exp(z))` without overflow for large `|z|`.
#[inline]
fn sigmoid_term(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

pub fn logistic5(x: f64, p: &LogisticParams) -> f64 {
    let s = sigmoid_term(p.beta2 * (x - p.beta3));
    p.beta1 * (0.5 - s) + p.beta4 * x + p.beta5
}

/// Partial derivatives of `logistic5` with respect to `beta1..beta5`.
pub(crate) fn logistic5_gradient(x: f64, p: &LogisticParams) -> [f64; 5] {
    let s = sigmoid_term(p.beta2 * (x - p.beta3));
    let ds = s * (1.0 - s);
    [
        0.5 - s,
        p.beta1 * ds * (x - p.beta3),
        -p.beta1 * ds * p.beta2,
        x,
        1.0,
    ]
}

/// Derivative of `logistic5` with respect to `x`.
pub(crate) fn logistic5_slope(x: f64, p: &LogisticParams) -> f64 {
    let s = sigmoid_term(p.beta2 * (x - p.beta3));
    p.beta1 * p.beta2 * s * (1.0 - s) + p.beta4
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson correlation coefficient.
pub fn pcc(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "series lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData(
            "correlation needs at least 2 points".into(),
        ));
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Err(Error::UndefinedCorrelation(
            "a series has zero variance".into(),
        ));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

pub fn rmse(pred: &[f64], obs: &[f64]) -> Result<f64> {
    if pred.len() != obs.len() {
        return Err(Error::InvalidParameter(format!(
            "series lengths differ: {} vs {}",
            pred.len(),
            obs.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InsufficientData("rmse of empty series".into()));
    }
    Ok(mean(
        &pred
            .iter()
            .zip(obs)
            .map(|(p, o)| (p - o) * (p - o))
            .collect::<Vec<_>>(),
    )
    .sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: LogisticParams,
    pub weights: Option<ZoneWeights>,
    pub pcc: f64,
    pub rmse: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Seeding and stopping policy shared by every fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub seed: u64,
    /// Random restarts in addition to the deterministic initial point.
    pub restarts: usize,
    pub lm: LmOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            seed: 0,
            restarts: 8,
            lm: LmOptions::default(),
        }
    }
}

pub const MIN_LOGISTIC_POINTS: usize = 5;

struct LogisticProblem<'a> {
    x: &'a [f64],
    y: &'a [f64],
}

impl LeastSquares for LogisticProblem<'_> {
    fn residuals(&self, p: &[f64]) -> Option<Vec<f64>> {
        let lp = LogisticParams::from_slice(p);
        Some(
            self.x
                .iter()
                .zip(self.y)
                .map(|(&x, &y)| logistic5(x, &lp) - y)
                .collect(),
        )
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let lp = LogisticParams::from_slice(p);
        let mut j = DMatrix::zeros(self.x.len(), 5);
        for (i, &x) in self.x.iter().enumerate() {
            for (c, g) in logistic5_gradient(x, &lp).into_iter().enumerate() {
                j[(i, c)] = g;
            }
        }
        j
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Deterministic initial point followed by `restarts` seeded perturbations.
pub(crate) fn logistic_starts(x: &[f64], y: &[f64], opts: &FitOptions) -> Vec<[f64; 5]> {
    let sx = std_dev(x);
    let beta2 = if sx > 0.0 { 4.0 / sx } else { 1.0 };
    let (ymin, ymax) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let range = ymax - ymin;
    let (xmin, xmax) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let base = [range, beta2, median(x), 0.0, mean(y)];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![base];
    for _ in 0..opts.restarts {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let b1 = sign * range.max(1e-6) * rng.random_range(0.5..2.0);
        let b2 = beta2 * 10f64.powf(rng.random_range(-1.0..1.0));
        let b3 = if xmax > xmin {
            rng.random_range(xmin..=xmax)
        } else {
            xmin
        };
        starts.push([b1, b2, b3, 0.0, mean(y)]);
    }
    starts
}

fn check_series(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter(format!(
            "series lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < MIN_LOGISTIC_POINTS {
        return Err(Error::InsufficientData(format!(
            "logistic fit needs at least {MIN_LOGISTIC_POINTS} points, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "logistic fit inputs must be finite".into(),
        ));
    }
    Ok(())
}

/// Best of several LM runs; ties go to the earliest start.
pub(crate) fn best_of<P: LeastSquares + Sync>(problem: &P, starts: &[Vec<f64>], lm: &LmOptions) -> LmSolution {
    let runs: Vec<LmSolution> = starts
        .par_iter()
        .map(|s| lm::minimize(problem, s, lm))
        .collect();
    runs.into_iter()
        .reduce(|best, r| if r.cost < best.cost { r } else { best })
        .expect("at least one start")
}

/// PCC with a constant-series fallback: a perfect constant fit reads as 1.
fn fit_pcc(pred: &[f64], obs: &[f64], rmse: f64) -> Result<f64> {
    match pcc(pred, obs) {
        Err(Error::UndefinedCorrelation(_)) if rmse <= 1e-12 => Ok(1.0),
        Err(Error::UndefinedCorrelation(_)) => Ok(0.0),
        other => other,
    }
}

pub(crate) fn summarize(
    x: &[f64],
    y: &[f64],
    sol: &LmSolution,
    weights: Option<ZoneWeights>,
) -> Result<FitResult> {
    let params = LogisticParams::from_slice(&sol.params);
    let pred: Vec<f64> = x.iter().map(|&v| logistic5(v, &params)).collect();
    let rmse = rmse(&pred, y)?;
    Ok(FitResult {
        params,
        weights,
        pcc: fit_pcc(&pred, y, rmse)?,
        rmse,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

/// Least-squares fit of `logistic5` to `(x, y)`.
pub fn fit_logistic(x: &[f64], y: &[f64], opts: &FitOptions) -> Result<FitResult> {
    Ok(fit_logistic_with_trace(x, y, opts)?.0)
}

/// As [`fit_logistic`], also returning the objective trace of the winning run.
pub fn fit_logistic_with_trace(x: &[f64], y: &[f64], opts: &FitOptions) -> Result<(FitResult, Vec<f64>)> {
    check_series(x, y)?;
    let problem = LogisticProblem { x, y };
    let starts: Vec<Vec<f64>> = logistic_starts(x, y, opts)
        .into_iter()
        .map(|s| s.to_vec())
        .collect();
    let sol = best_of(&problem, &starts, &opts.lm);
    let fit = summarize(x, y, &sol, None)?;
    Ok((fit, sol.trace))
}

/// Logistic mapping of metric scores onto MOS; non-finite scores are
/// dropped with a warning.
pub fn evaluate_metric(scores: &[f64], mos: &[f64], opts: &FitOptions) -> Result<FitResult> {
    if scores.len() != mos.len() {
        return Err(Error::InvalidParameter(format!(
            "{} scores but {} MOS values",
            scores.len(),
            mos.len()
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = scores
        .iter()
        .zip(mos)
        .filter(|(s, _)| s.is_finite())
        .map(|(&s, &m)| (s, m))
        .unzip();
    if x.len() < scores.len() {
        log::warn!(
            "excluded {} non-finite scores from the logistic fit",
            scores.len() - x.len()
        );
    }
    fit_logistic(&x, &y, opts)
}

/// Raw 1..5 ratings of one stimulus with their mean and 95% CI half-width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectiveRecord {
    pub stimulus_id: String,
    pub raw_scores: Vec<u8>,
    pub mos: f64,
    pub ci95: f64,
}

/// Mean opinion score with half-width `t(0.975, n-1) s / sqrt(n)`.
pub fn mos_with_ci(stimulus_id: &str, raw_scores: &[u8]) -> Result<SubjectiveRecord> {
    let n = raw_scores.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "confidence interval needs at least 2 ratings, got {n}"
        )));
    }
    if let Some(bad) = raw_scores.iter().find(|s| !(1..=5).contains(*s)) {
        return Err(Error::InvalidParameter(format!(
            "rating {bad} outside 1..=5"
        )));
    }
    let v: Vec<f64> = raw_scores.iter().map(|&s| s as f64).collect();
    let m = mean(&v);
    let s = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64).sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(SubjectiveRecord {
        stimulus_id: stimulus_id.to_string(),
        raw_scores: raw_scores.to_vec(),
        mos: m,
        ci95: t * s / (n as f64).sqrt(),
    })
}

/// Maps scores through a known logistic and adds seeded Gaussian noise.
pub fn synthetic_mos(scores: &[f64], params: &LogisticParams, noise_sd: f64, seed: u64) -> Result<Vec<f64>> {
    let normal = Normal::new(0.0, noise_sd).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(scores
        .iter()
        .map(|&s| logistic5(s, params) + if noise_sd > 0.0 { normal.sample(&mut rng) } else { 0.0 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn logistic_identities() {
        let line = LogisticParams::new(3.0, 0.0, 5.0, 0.7, -1.0);
        assert_relative_eq!(logistic5(2.0, &line), 0.7 * 2.0 - 1.0, epsilon = 1e-15);
        let p = LogisticParams::new(2.0, 1.3, 4.0, 0.2, 1.0);
        assert_relative_eq!(logistic5(4.0, &p), 0.2 * 4.0 + 1.0, epsilon = 1e-15);
        let a = LogisticParams::new(2.0, 1.0, 0.0, 0.0, 3.0);
        assert_eq!(logistic5(1e6, &a), 4.0);
        assert_eq!(logistic5(-1e6, &a), 2.0);
        assert!(logistic5(f64::MAX / 4.0, &a).is_finite());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = [1.7, 0.8, 2.0, 0.1, 0.4];
        let x = 2.9;
        let g = logistic5_gradient(x, &LogisticParams::from_slice(&p));
        for k in 0..5 {
            let h = 1e-6;
            let mut hi = p;
            let mut lo = p;
            hi[k] += h;
            lo[k] -= h;
            let fd = (logistic5(x, &LogisticParams::from_slice(&hi))
                - logistic5(x, &LogisticParams::from_slice(&lo)))
                / (2.0 * h);
            assert_relative_eq!(g[k], fd, epsilon = 1e-8);
        }
        let lp = LogisticParams::from_slice(&p);
        let fd = (logistic5(x + 1e-6, &lp) - logistic5(x - 1e-6, &lp)) / 2e-6;
        assert_relative_eq!(logistic5_slope(x, &lp), fd, epsilon = 1e-8);
    }

    #[test]
    fn correlation_goldens() {
        let a = [1.0, 2.0, 3.0, 4.5];
        let affine: Vec<f64> = a.iter().map(|v| 2.0 * v + 1.0).collect();
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        assert_relative_eq!(pcc(&a, &affine).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(pcc(&a, &neg).unwrap(), -1.0, epsilon = 1e-15);
        assert_relative_eq!(pcc(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(), 0.5, epsilon = 1e-15);
        assert!(matches!(pcc(&a, &[1.0; 4]), Err(Error::UndefinedCorrelation(_))));
        assert!(pcc(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn rmse_goldens() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_relative_eq!(rmse(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 12.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(rmse(&[1.5, 2.5, 0.5], &[1.0, 2.0, 0.0]).unwrap(), 0.5, epsilon = 1e-15);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn recovers_planted_curve() {
        let truth = LogisticParams::new(3.5, 0.4, 30.0, 0.02, 3.0);
        let x: Vec<f64> = (0..40).map(|i| 18.0 + 0.6 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| logistic5(v, &truth)).collect();
        let (fit, trace) = fit_logistic_with_trace(&x, &y, &FitOptions::default()).unwrap();
        assert!(fit.rmse < 1e-6, "rmse {}", fit.rmse);
        assert!(fit.pcc > 0.999_999);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn constant_target() {
        let x: Vec<f64> = (0..8).map(f64::from).collect();
        let fit = fit_logistic(&x, &[2.5; 8], &FitOptions::default()).unwrap();
        assert!(fit.rmse < 1e-9);
        assert!(fit_logistic(&x[..4], &[1.0; 4], &FitOptions::default()).is_err());
    }

    #[test]
    fn fits_are_seed_deterministic() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin() * 10.0 + 30.0).collect();
        let y = synthetic_mos(&x, &LogisticParams::new(4.0, 0.5, 30.0, 0.0, 3.0), 0.2, 7).unwrap();
        let opts = FitOptions { seed: 11, ..FitOptions::default() };
        assert_eq!(fit_logistic(&x, &y, &opts).unwrap(), fit_logistic(&x, &y, &opts).unwrap());
    }

    #[test]
    fn evaluate_drops_infinite_scores() {
        let mos = [1.0, 2.0, 3.0, 4.0, 5.0, 3.0];
        let scores = [10.0, 20.0, 30.0, 40.0, 50.0, f64::INFINITY];
        let fit = evaluate_metric(&scores, &mos, &FitOptions::default()).unwrap();
        assert!(fit.pcc > 0.999);
    }

    #[test]
    fn mos_ci_goldens() {
        let r = mos_with_ci("a", &[4, 4, 4]).unwrap();
        assert_eq!((r.mos, r.ci95), (4.0, 0.0));
        let r = mos_with_ci("b", &[1, 5]).unwrap();
        assert_eq!(r.mos, 3.0);
        assert!((r.ci95 - 25.41).abs() < 0.005, "{}", r.ci95);
        let alt: Vec<u8> = (0..20).map(|i| if i % 2 == 0 { 3 } else { 4 }).collect();
        let r = mos_with_ci("c", &alt).unwrap();
        assert_eq!(r.mos, 3.5);
        assert!((r.ci95 - 0.24).abs() < 0.005, "{}", r.ci95);
        assert!(mos_with_ci("d", &[3]).is_err());
        assert!(mos_with_ci("e", &[0, 3]).is_err());
    }
}
