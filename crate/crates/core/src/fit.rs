//! Weighted nonlinear least-squares fit of the exponential lifetime model
//! `R(t) = R0 exp(-t / tau)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate data: {0}")]
    Degenerate(&'static str),
    #[error("fit did not converge within {0} iterations")]
    NonConvergence(usize),
}

/// One measured retrieval-efficiency point with its standard error.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DataPoint {
    pub t: f64,
    pub y: f64,
    /// Standard error of `y`; non-positive values fall back to unit weight.
    pub sigma: f64,
}

/// Result of the exponential fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpFit {
    pub r0: f64,
    pub tau: f64,
    /// 1-sigma parameter errors from the inverse normal matrix.
    pub r0_err: f64,
    pub tau_err: f64,
    /// Weighted sum of squared residuals at the optimum.
    pub chi2: f64,
    pub iterations: usize,
}

impl ExpFit {
    pub fn model(&self, t: f64) -> f64 {
        self.r0 * (-t / self.tau).exp()
    }
}

const MAX_ITER: usize = 200;
const STEP_TOL: f64 = 1e-12;

/// Fits `R0 exp(-t / tau)` to the data by Levenberg-Marquardt, seeded with
/// a weighted log-linear regression on the positive points.
pub fn fit_exponential(points: &[DataPoint]) -> Result<ExpFit, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints(points.len()));
    }
    for p in points {
        if !p.t.is_finite() || !p.y.is_finite() || !p.sigma.is_finite() {
            return Err(FitError::Degenerate("non-finite input"));
        }
    }
    let t_span = points.iter().map(|p| p.t).fold(f64::NEG_INFINITY, f64::max)
        - points.iter().map(|p| p.t).fold(f64::INFINITY, f64::min);
    if t_span <= 0.0 {
        return Err(FitError::Degenerate("all points share one abscissa"));
    }

    let (mut r0, mut tau) = log_linear_seed(points, t_span)?;
    let weights: Vec<f64> = points
        .iter()
        .map(|p| if p.sigma > 0.0 { 1.0 / (p.sigma * p.sigma) } else { 1.0 })
        .collect();

    let chi2_at = |r0: f64, tau: f64| -> f64 {
        points
            .iter()
            .zip(&weights)
            .map(|(p, w)| w * (p.y - r0 * (-p.t / tau).exp()).powi(2))
            .sum()
    };

    let mut chi2 = chi2_at(r0, tau);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..MAX_ITER {
        iterations = iter + 1;
        // residuals and Jacobian in (r0, tau)
        let mut jtj = DMatrix::<f64>::zeros(2, 2);
        let mut jtr = DVector::<f64>::zeros(2);
        for (p, w) in points.iter().zip(&weights) {
            let e = (-p.t / tau).exp();
            let resid = p.y - r0 * e;
            let j0 = e; // d model / d r0
            let j1 = r0 * e * p.t / (tau * tau); // d model / d tau
            jtj[(0, 0)] += w * j0 * j0;
            jtj[(0, 1)] += w * j0 * j1;
            jtj[(1, 1)] += w * j1 * j1;
            jtr[0] += w * j0 * resid;
            jtr[1] += w * j1 * resid;
        }
        jtj[(1, 0)] = jtj[(0, 1)];

        let mut damped = jtj.clone();
        damped[(0, 0)] *= 1.0 + lambda;
        damped[(1, 1)] *= 1.0 + lambda;
        let Some(step) = damped.lu().solve(&jtr) else {
            return Err(FitError::Degenerate("singular normal matrix"));
        };

        let r0_new = r0 + step[0];
        let tau_new = tau + step[1];
        if tau_new <= 0.0 || r0_new <= 0.0 {
            lambda *= 10.0;
            if lambda > 1e12 {
                return Err(FitError::NonConvergence(iterations));
            }
            continue;
        }
        let chi2_new = chi2_at(r0_new, tau_new);
        if chi2_new <= chi2 {
            let rel_step = (step[0] / r0).abs().max((step[1] / tau).abs());
            r0 = r0_new;
            tau = tau_new;
            chi2 = chi2_new;
            lambda = (lambda * 0.3).max(1e-12);
            if rel_step < STEP_TOL {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                // stuck at a flat minimum: accept if the gradient is tiny
                if jtr.norm() < 1e-9 * (1.0 + chi2) {
                    converged = true;
                    break;
                }
                return Err(FitError::NonConvergence(iterations));
            }
        }
    }
    if !converged {
        return Err(FitError::NonConvergence(MAX_ITER));
    }

    // covariance from the undamped normal matrix at the optimum
    let mut jtj = DMatrix::<f64>::zeros(2, 2);
    for (p, w) in points.iter().zip(&weights) {
        let e = (-p.t / tau).exp();
        let j0 = e;
        let j1 = r0 * e * p.t / (tau * tau);
        jtj[(0, 0)] += w * j0 * j0;
        jtj[(0, 1)] += w * j0 * j1;
        jtj[(1, 1)] += w * j1 * j1;
    }
    jtj[(1, 0)] = jtj[(0, 1)];
    let cov = jtj
        .try_inverse()
        .ok_or(FitError::Degenerate("singular covariance"))?;
    Ok(ExpFit {
        r0,
        tau,
        r0_err: cov[(0, 0)].max(0.0).sqrt(),
        tau_err: cov[(1, 1)].max(0.0).sqrt(),
        chi2,
        iterations,
    })
}

/// Weighted linear regression of `ln y` on `t` over the positive points.
fn log_linear_seed(points: &[DataPoint], t_span: f64) -> Result<(f64, f64), FitError> {
    let mut sw = 0.0;
    let mut st = 0.0;
    let mut sl = 0.0;
    let mut stt = 0.0;
    let mut stl = 0.0;
    let mut n_pos = 0usize;
    for p in points {
        if p.y <= 0.0 {
            continue;
        }
        n_pos += 1;
        let w = 1.0;
        let l = p.y.ln();
        sw += w;
        st += w * p.t;
        sl += w * l;
        stt += w * p.t * p.t;
        stl += w * p.t * l;
    }
    if n_pos < 2 {
        return Err(FitError::Degenerate("not enough positive points"));
    }
    let denom = sw * stt - st * st;
    if denom.abs() < 1e-300 {
        return Err(FitError::Degenerate("collinear abscissae"));
    }
    let slope = (sw * stl - st * sl) / denom;
    let intercept = (sl - slope * st) / sw;
    let r0 = intercept.exp();
    let tau = if slope < 0.0 { -1.0 / slope } else { t_span };
    Ok((r0, tau))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    use super::*;

    fn synthetic(r0: f64, tau: f64, sigma: f64, n: usize, seed: u64) -> Vec<DataPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        (0..n)
            .map(|i| {
                let t = i as f64 * 2.0 * tau / n as f64;
                DataPoint {
                    t,
                    y: r0 * (-t / tau).exp() + noise.sample(&mut rng),
                    sigma,
                }
            })
            .collect()
    }

    #[test]
    fn exact_data_recovers_parameters() {
        let points: Vec<DataPoint> = (0..10)
            .map(|i| {
                let t = i as f64 * 1e-4;
                DataPoint {
                    t,
                    y: 0.35 * (-t / 1.2e-3).exp(),
                    sigma: 1e-4,
                }
            })
            .collect();
        let fit = fit_exponential(&points).unwrap();
        assert_relative_eq!(fit.r0, 0.35, epsilon = 1e-8);
        assert_relative_eq!(fit.tau, 1.2e-3, epsilon = 1e-8);
        assert!(fit.chi2 < 1e-10);
    }

    #[test]
    fn noisy_data_within_errors() {
        let points = synthetic(0.35, 1.0e-3, 0.005, 40, 17);
        let fit = fit_exponential(&points).unwrap();
        assert!(
            (fit.tau - 1.0e-3).abs() < 4.0 * fit.tau_err,
            "tau {} +- {}",
            fit.tau,
            fit.tau_err
        );
        assert!((fit.r0 - 0.35).abs() < 4.0 * fit.r0_err);
        assert!(fit.tau_err > 0.0 && fit.tau_err < 0.3e-3);
    }

    #[test]
    fn rejects_too_few_points() {
        let points = synthetic(0.3, 1e-3, 0.01, 2, 1);
        assert!(matches!(
            fit_exponential(&points),
            Err(FitError::TooFewPoints(2))
        ));
    }

    #[test]
    fn rejects_degenerate_abscissae() {
        let points: Vec<DataPoint> = (0..5)
            .map(|i| DataPoint {
                t: 1e-3,
                y: 0.1 + i as f64 * 0.01,
                sigma: 0.01,
            })
            .collect();
        assert!(matches!(
            fit_exponential(&points),
            Err(FitError::Degenerate(_))
        ));
    }

    #[test]
    fn rejects_non_finite_input() {
        let mut points = synthetic(0.3, 1e-3, 0.01, 5, 2);
        points[1].y = f64::NAN;
        assert!(matches!(
            fit_exponential(&points),
            Err(FitError::Degenerate(_))
        ));
    }

    #[test]
    fn weights_pull_toward_precise_points() {
        // two populations: precise on-model points and noisy biased ones
        let mut points: Vec<DataPoint> = (0..10)
            .map(|i| {
                let t = i as f64 * 1e-4;
                DataPoint {
                    t,
                    y: 0.3 * (-t / 1e-3).exp(),
                    sigma: 1e-4,
                }
            })
            .collect();
        for i in 0..10 {
            let t = i as f64 * 1e-4;
            points.push(DataPoint {
                t,
                y: 0.3 * (-t / 1e-3).exp() + 0.05,
                sigma: 0.5,
            });
        }
        let fit = fit_exponential(&points).unwrap();
        assert_relative_eq!(fit.tau, 1e-3, epsilon = 1e-3 * 0.02);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn recovers_exact_exponentials(r0 in 0.05f64..1.0, tau in 1e-4f64..1e-2) {
                let points: Vec<DataPoint> = (0..12)
                    .map(|i| {
                        let t = i as f64 * tau / 4.0;
                        DataPoint { t, y: r0 * (-t / tau).exp(), sigma: 1.0 }
                    })
                    .collect();
                let fit = fit_exponential(&points).unwrap();
                prop_assert!((fit.r0 - r0).abs() / r0 < 1e-6);
                prop_assert!((fit.tau - tau).abs() / tau < 1e-6);
            }
        }
    }
}
