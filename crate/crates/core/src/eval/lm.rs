//! Small dense Levenberg–Marquardt solver with Marquardt diagonal scaling.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop once an accepted step improves the objective by less than this
    /// fraction.
    pub relative_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 2000,
            relative_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmSolution {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after the initial point and after every accepted step.
    pub trace: Vec<f64>,
}

/// Model evaluated at a parameter vector: residuals and their Jacobian
/// (rows = residuals). `None` marks a parameter vector outside the domain.
pub trait LeastSquares {
    fn residuals(&self, params: &[f64]) -> Option<Vec<f64>>;
    fn jacobian(&self, params: &[f64]) -> DMatrix<f64>;

    /// Maps a raw step result back into the feasible set.
    fn project(&self, _params: &mut [f64]) {}
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

pub fn minimize<P: LeastSquares + ?Sized>(problem: &P, start: &[f64], opts: &LmOptions) -> LmSolution {
    let mut params = start.to_vec();
    problem.project(&mut params);
    let Some(mut r) = problem.residuals(&params) else {
        return LmSolution {
            params,
            cost: f64::INFINITY,
            iterations: 0,
            converged: false,
            trace: vec![f64::INFINITY],
        };
    };
    let mut cost = sum_sq(&r);
    let mut trace = vec![cost];
    let mut lambda = 1e-3;
    let mut converged = cost == 0.0;
    let mut iterations = 0;
    let n = params.len();

    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let j = problem.jacobian(&params);
        let rv = DVector::from_column_slice(&r);
        let jt = j.transpose();
        let a = &jt * &j;
        let g = &jt * rv;
        let max_diag = (0..n).map(|i| a[(i, i)]).fold(0.0, f64::max);
        let floor = (max_diag * 1e-12).max(1e-300);

        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for i in 0..n {
                damped[(i, i)] += lambda * a[(i, i)].max(floor);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let mut candidate: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            problem.project(&mut candidate);
            let new_r = problem.residuals(&candidate);
            match new_r {
                Some(nr) if sum_sq(&nr).is_finite() && sum_sq(&nr) < cost => {
                    let new_cost = sum_sq(&nr);
                    let rel = (cost - new_cost) / cost.max(f64::MIN_POSITIVE);
                    params = candidate;
                    r = nr;
                    cost = new_cost;
                    trace.push(cost);
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    if rel < opts.relative_tolerance || cost == 0.0 {
                        converged = true;
                    }
                    break;
                }
                _ => lambda *= 4.0,
            }
        }
        if !accepted {
            // No descent direction left at any damping: a stationary point.
            converged = true;
        }
    }
    LmSolution {
        params,
        cost,
        iterations,
        converged,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Line<'a> {
        x: &'a [f64],
        y: &'a [f64],
    }

    impl LeastSquares for Line<'_> {
        fn residuals(&self, p: &[f64]) -> Option<Vec<f64>> {
            Some(self.x.iter().zip(self.y).map(|(x, y)| p[0] * x + p[1] - y).collect())
        }

        fn jacobian(&self, _p: &[f64]) -> DMatrix<f64> {
            DMatrix::from_fn(self.x.len(), 2, |i, j| if j == 0 { self.x[i] } else { 1.0 })
        }
    }

    #[test]
    fn solves_linear_fit() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let sol = minimize(&Line { x: &x, y: &y }, &[0.0, 0.0], &LmOptions::default());
        assert!(sol.converged);
        assert!((sol.params[0] - 2.0).abs() < 1e-8 && (sol.params[1] - 1.0).abs() < 1e-8);
        assert!(sol.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    struct Rosenbrock;

    impl LeastSquares for Rosenbrock {
        fn residuals(&self, p: &[f64]) -> Option<Vec<f64>> {
            Some(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]])
        }

        fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
            DMatrix::from_row_slice(2, 2, &[-20.0 * p[0], 10.0, -1.0, 0.0])
        }
    }

    #[test]
    fn solves_rosenbrock() {
        let sol = minimize(&Rosenbrock, &[-1.2, 1.0], &LmOptions::default());
        assert!((sol.params[0] - 1.0).abs() < 1e-6, "{:?}", sol.params);
        assert!(sol.trace.windows(2).all(|w| w[1] <= w[0]));
    }
}
