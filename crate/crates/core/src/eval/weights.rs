//! Joint fit of zone weights and the logistic mapping.

use std::f64::consts::LN_10;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::lm::{self, LeastSquares, LmOptions, LmSolution};
use super::{
    best_of, logistic5, logistic5_gradient, logistic5_slope, logistic_starts, summarize, FitOptions, FitResult,
    LogisticParams, LogisticProblem, MIN_LOGISTIC_POINTS,
};
use crate::error::{Error, Result};
use crate::zwf::{ZoneMseVector, ZoneWeights};

/// Euclidean projection onto `{w : w >= 0, sum w = 1}` (sort-based).
pub fn project_to_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
    let sum: f64 = v.iter().sum();
    if sum > 0.0 {
        for x in v.iter_mut() {
            *x /= sum;
        }
    }
}

const DB: f64 = 10.0 / LN_10;

struct Design<'a> {
    /// Per-stimulus zone MSEs.
    m: &'a [Vec<f64>],
    mos: &'a [f64],
    max2: f64,
}

impl Design<'_> {
    /// Weighted MSE per stimulus; `None` if any is non-positive (infinite ZWF).
    fn weighted(&self, w: &[f64]) -> Option<Vec<f64>> {
        let d: Vec<f64> = self
            .m
            .iter()
            .map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum())
            .collect();
        d.iter().all(|&v| v > 0.0).then_some(d)
    }

    fn zwf(&self, d: &[f64]) -> Vec<f64> {
        d.iter().map(|&v| DB * (self.max2 / v).ln()).collect()
    }
}

struct WeightStep<'a> {
    design: &'a Design<'a>,
    beta: LogisticParams,
}

impl LeastSquares for WeightStep<'_> {
    fn residuals(&self, w: &[f64]) -> Option<Vec<f64>> {
        let d = self.design.weighted(w)?;
        let x = self.design.zwf(&d);
        Some(
            x.iter()
                .zip(self.design.mos)
                .map(|(&x, &y)| logistic5(x, &self.beta) - y)
                .collect(),
        )
    }

    fn jacobian(&self, w: &[f64]) -> DMatrix<f64> {
        let k = w.len();
        let mut j = DMatrix::zeros(self.design.m.len(), k);
        let Some(d) = self.design.weighted(w) else {
            return j;
        };
        let x = self.design.zwf(&d);
        for (i, row) in self.design.m.iter().enumerate() {
            let slope = logistic5_slope(x[i], &self.beta);
            for c in 0..k {
                j[(i, c)] = -slope * DB * row[c] / d[i];
            }
        }
        j
    }

    fn project(&self, w: &mut [f64]) {
        project_to_simplex(w);
    }
}

/// All parameters at once: `beta1..beta5` followed by the zone weights.
struct JointStep<'a> {
    design: &'a Design<'a>,
}

impl LeastSquares for JointStep<'_> {
    fn residuals(&self, p: &[f64]) -> Option<Vec<f64>> {
        WeightStep {
            design: self.design,
            beta: LogisticParams::from_slice(&p[..5]),
        }
        .residuals(&p[5..])
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let beta = LogisticParams::from_slice(&p[..5]);
        let w = &p[5..];
        let wj = WeightStep {
            design: self.design,
            beta,
        }
        .jacobian(w);
        let n = self.design.m.len();
        let mut j = DMatrix::zeros(n, 5 + w.len());
        if let Some(d) = self.design.weighted(w) {
            for (i, x) in self.design.zwf(&d).into_iter().enumerate() {
                for (c, g) in logistic5_gradient(x, &beta).into_iter().enumerate() {
                    j[(i, c)] = g;
                }
            }
        }
        j.view_mut((0, 5), (n, w.len())).copy_from(&wj);
        j
    }

    fn project(&self, p: &mut [f64]) {
        project_to_simplex(&mut p[5..]);
    }
}

const MAX_ROUNDS: usize = 200;
const ROUND_TOLERANCE: f64 = 1e-12;

/// Alternating beta/weight descent from one weight start, then a joint
/// projected polish. Returns `(beta ++ w, cost, iterations)`.
fn descend(design: &Design, w0: Vec<f64>, opts: &FitOptions) -> Option<(Vec<f64>, f64, usize)> {
    let mut w = w0;
    let d = design.weighted(&w)?;
    let x = design.zwf(&d);
    let starts: Vec<Vec<f64>> = logistic_starts(&x, design.mos, opts)
        .into_iter()
        .map(|s| s.to_vec())
        .collect();
    let mut sol = best_of(&LogisticProblem { x: &x, y: design.mos }, &starts, &opts.lm);
    let mut beta = sol.params.clone();
    let mut cost = sol.cost;
    let mut iterations = sol.iterations;
    let inner = LmOptions {
        max_iterations: 50,
        ..opts.lm
    };

    for _ in 0..MAX_ROUNDS {
        let before = cost;
        let ws = lm::minimize(
            &WeightStep {
                design,
                beta: LogisticParams::from_slice(&beta),
            },
            &w,
            &inner,
        );
        iterations += ws.iterations;
        if ws.cost < cost {
            w = ws.params;
            cost = ws.cost;
        }
        let x = design.zwf(&design.weighted(&w)?);
        sol = lm::minimize(&LogisticProblem { x: &x, y: design.mos }, &beta, &inner);
        iterations += sol.iterations;
        if sol.cost < cost {
            beta = sol.params.clone();
            cost = sol.cost;
        }
        if cost == 0.0 || (before - cost) <= ROUND_TOLERANCE * before {
            break;
        }
    }

    let joint_start: Vec<f64> = beta.iter().chain(&w).copied().collect();
    let polished: LmSolution = lm::minimize(&JointStep { design }, &joint_start, &opts.lm);
    iterations += polished.iterations;
    if polished.cost < cost {
        Some((polished.params, polished.cost, iterations))
    } else {
        Some((joint_start, cost, iterations))
    }
}

fn random_simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    // Normalized exponentials: uniform on the simplex.
    let e: Vec<f64> = (0..k)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Jointly fits zone weights on the simplex and the logistic mapping from
/// ZWF scores to MOS. Stimuli whose zone MSEs are all zero (infinite ZWF
/// under any weights) are excluded with a warning.
pub fn fit_zone_weights(
    zone_mses: &[ZoneMseVector],
    mos: &[f64],
    max_value: f64,
    opts: &FitOptions,
) -> Result<FitResult> {
    if zone_mses.len() != mos.len() {
        return Err(Error::InvalidParameter(format!(
            "{} zone-MSE vectors but {} MOS values",
            zone_mses.len(),
            mos.len()
        )));
    }
    let k = zone_mses
        .first()
        .map(ZoneMseVector::zone_count)
        .ok_or_else(|| Error::InsufficientData("no stimuli".into()))?;
    let mut rows = Vec::with_capacity(zone_mses.len());
    let mut targets = Vec::with_capacity(mos.len());
    for (zm, &y) in zone_mses.iter().zip(mos) {
        if zm.zone_count() != k {
            return Err(Error::Configuration(format!(
                "zone-MSE vectors have {} and {k} zones",
                zm.zone_count()
            )));
        }
        let row = zm
            .mse
            .iter()
            .enumerate()
            .map(|(z, m)| {
                m.ok_or_else(|| Error::Configuration(format!("zone Z{} has no pixels", z + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if !y.is_finite() || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite zone MSE or MOS".into()));
        }
        if row.iter().all(|&v| v == 0.0) {
            continue;
        }
        rows.push(row);
        targets.push(y);
    }
    if rows.len() < zone_mses.len() {
        log::warn!(
            "excluded {} stimuli with infinite ZWF from the weight fit",
            zone_mses.len() - rows.len()
        );
    }
    let needed = k + MIN_LOGISTIC_POINTS;
    if rows.len() < needed {
        return Err(Error::InsufficientData(format!(
            "weight fit over {k} zones needs at least {needed} stimuli, got {}",
            rows.len()
        )));
    }
    let scale = rows.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    if rows
        .iter()
        .all(|r| r.iter().zip(&rows[0]).all(|(a, b)| (a - b).abs() <= 1e-12 * scale))
    {
        return Err(Error::NonIdentifiable(
            "every stimulus has the same zone MSEs".into(),
        ));
    }

    let design = Design {
        m: &rows,
        mos: &targets,
        max2: max_value * max_value,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![vec![1.0 / k as f64; k]];
    for _ in 0..opts.restarts {
        starts.push(random_simplex(&mut rng, k));
    }
    let runs: Vec<Option<(Vec<f64>, f64, usize)>> = starts
        .into_par_iter()
        .enumerate()
        .map(|(i, w0)| {
            let sub = FitOptions {
                seed: opts.seed.wrapping_add(1 + i as u64),
                ..*opts
            };
            descend(&design, w0, &sub)
        })
        .collect();
    let (params, _, iterations) = runs
        .into_iter()
        .flatten()
        .reduce(|best, r| if r.1 < best.1 { r } else { best })
        .ok_or_else(|| Error::NonIdentifiable("no start reached a finite objective".into()))?;

    let weights = ZoneWeights::new(params[5..].to_vec())?;
    let x = design.zwf(&design.weighted(&params[5..]).expect("finite at optimum"));
    let sol = LmSolution {
        params: params[..5].to_vec(),
        cost: f64::NAN,
        iterations,
        converged: true,
        trace: Vec::new(),
    };
    summarize(&x, &targets, &sol, Some(weights))
}
