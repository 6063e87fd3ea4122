//! Five-parameter logistic mapping from objective scores to MOS, fitted by
//! Levenberg-Marquardt, with PCC and RMSE after mapping.
//!
//! ```text
//! cargo run --example logistic_fit
//! ```

use foveaq::eval::{evaluate_metric, logistic5, synthetic_mos, FitOptions, LogisticParams};

fn main() -> foveaq::Result<()> {
    let truth = LogisticParams::new(3.5, 0.35, 30.0, 0.01, 2.8);
    let scores: Vec<f64> = (0..120).map(|i| 18.0 + 0.2 * i as f64).collect();
    let mos = synthetic_mos(&scores, &truth, 0.15, 42)?;
    let fit = evaluate_metric(&scores, &mos, &FitOptions::default())?;
    println!("true   beta = {:?}", truth.to_array());
    println!("fitted beta = {:?}", fit.params.to_array().map(|b| (b * 1e4).round() / 1e4));
    println!("PCC {:.4}  RMSE {:.4}  ({} iterations, converged {})", fit.pcc, fit.rmse, fit.iterations, fit.converged);
    for x in [20.0, 30.0, 40.0] {
        println!("score {x:>4} -> MOS {:.3}", logistic5(x, &fit.params));
    }
    Ok(())
}
