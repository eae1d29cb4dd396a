//! Riemannian steepest descent on G(n, k) with geodesic steps and Armijo backtracking.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{project_to_tangent, random_orthogonal, GrassmannPoint, TangentVector};
use crate::numerics::Matrix;

/// A cost on the Grassmannian, given through any orthonormal representative.
///
/// Implementations must satisfy `value(X) = value(X·R)` for orthogonal `R`.
pub trait Objective {
    fn value(&self, x: &GrassmannPoint) -> f64;

    /// Matrix of partial derivatives `∂F/∂Xᵢⱼ`.
    fn euclidean_grad(&self, x: &GrassmannPoint) -> Matrix;

    fn value_and_grad(&self, x: &GrassmannPoint) -> (f64, Matrix) {
        (self.value(x), self.euclidean_grad(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub init_step: f64,
    pub min_step: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-6,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            init_step: 1.0,
            min_step: 1e-12,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if !(self.grad_tol >= 0.0) {
            return bad("grad_tol must be nonnegative");
        }
        if !(self.init_step > 0.0 && self.init_step.is_finite()) {
            return bad("init_step must be positive");
        }
        if !(self.min_step > 0.0 && self.min_step <= self.init_step) {
            return bad("min_step must be positive and at most init_step");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimStatus {
    Converged,
    IterationCap,
    StepUnderflow,
}

/// One row of the optimization trace; `step` is the step length that produced this iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimResult {
    pub minimizer: GrassmannPoint,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    pub status: OptimStatus,
}

impl OptimResult {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,value,grad_norm,step\n");
        for r in &self.trace {
            let _ = writeln!(out, "{},{},{},{}", r.iter, r.value, r.grad_norm, r.step);
        }
        out
    }

    pub fn write_trace(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.trace_csv())?;
        Ok(())
    }
}

/// `(I − XXᵀ)·F_X`.
pub fn riemannian_grad(obj: &dyn Objective, x: &GrassmannPoint) -> Result<TangentVector> {
    project_to_tangent(x, &obj.euclidean_grad(x))
}

/// Largest `|f(X) − f(X·R)|` over `trials` random rotations `R`.
pub fn rotation_invariance_defect(
    obj: &dyn Objective,
    x: &GrassmannPoint,
    trials: usize,
    rng: &mut impl rand::Rng,
) -> Result<f64> {
    let f = obj.value(x);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let xr = x.rotated(&random_orthogonal(x.k(), rng))?;
        worst = worst.max((obj.value(&xr) - f).abs());
    }
    Ok(worst)
}

fn evaluation_error(value: f64, iteration: usize, x: &GrassmannPoint) -> Error {
    Error::ObjectiveEvaluation {
        value,
        iteration,
        iterate: Box::new(x.basis().clone()),
    }
}

/// Steepest descent along geodesics from `init`.
///
/// Each step walks the geodesic in direction `−∇f` and backtracks until the
/// Armijo condition holds; the first trial length is `min(init_step, 2·previous)`.
pub fn minimize(
    obj: &dyn Objective,
    init: &GrassmannPoint,
    cfg: &OptimConfig,
) -> Result<OptimResult> {
    cfg.validate()?;
    if cfg!(debug_assertions) {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let defect = rotation_invariance_defect(obj, init, 1, &mut rng)?;
        let f = obj.value(init);
        if defect > 1e-8 * f.abs().max(1.0) {
            log::warn!("objective is not rotation invariant: |f(X) - f(XR)| = {defect:e}");
        }
    }

    let mut x = init.clone();
    let (mut f, mut eg) = obj.value_and_grad(&x);
    if !f.is_finite() {
        return Err(evaluation_error(f, 0, &x));
    }
    let mut trace = Vec::new();
    let mut last_step = cfg.init_step;
    let mut arrived_by = 0.0;
    let mut iterations = 0;

    let status = loop {
        let grad = project_to_tangent(&x, &eg)?;
        let gn = grad.norm();
        if !gn.is_finite() {
            return Err(evaluation_error(gn, iterations, &x));
        }
        trace.push(TraceRecord {
            iter: iterations,
            value: f,
            grad_norm: gn,
            step: arrived_by,
        });
        if gn <= cfg.grad_tol {
            break OptimStatus::Converged;
        }
        if iterations >= cfg.max_iters {
            break OptimStatus::IterationCap;
        }

        let descent = cfg.armijo_c * gn * gn;
        let mut t = cfg.init_step.min(2.0 * last_step);
        let accepted = loop {
            let cand = crate::manifold::exp_map(&x, &grad.scaled(-t))?;
            let fc = obj.value(&cand);
            if fc.is_nan() {
                return Err(evaluation_error(fc, iterations + 1, &cand));
            }
            if fc <= f - t * descent {
                break Some((cand, fc));
            }
            t *= cfg.backtrack_factor;
            if t < cfg.min_step {
                break None;
            }
        };
        let Some((cand, fc)) = accepted else {
            break OptimStatus::StepUnderflow;
        };
        x = cand;
        f = fc;
        eg = obj.euclidean_grad(&x);
        last_step = t;
        arrived_by = t;
        iterations += 1;
    };

    let last = *trace.last().expect("trace holds the initial record");
    Ok(OptimResult {
        minimizer: x,
        value: f,
        grad_norm: last.grad_norm,
        iterations,
        trace,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::random_point;

    struct Constant;

    impl Objective for Constant {
        fn value(&self, _: &GrassmannPoint) -> f64 {
            3.0
        }
        fn euclidean_grad(&self, x: &GrassmannPoint) -> Matrix {
            Matrix::zeros(x.n(), x.k())
        }
    }

    struct Broken;

    impl Objective for Broken {
        fn value(&self, _: &GrassmannPoint) -> f64 {
            f64::NAN
        }
        fn euclidean_grad(&self, x: &GrassmannPoint) -> Matrix {
            Matrix::zeros(x.n(), x.k())
        }
    }

    #[test]
    fn constant_objective_converges_immediately() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let x = random_point(5, 2, &mut rng).unwrap();
        assert_eq!(riemannian_grad(&Constant, &x).unwrap().norm(), 0.0);
        let r = minimize(&Constant, &x, &OptimConfig::default()).unwrap();
        assert_eq!(r.status, OptimStatus::Converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.minimizer.basis(), x.basis());
    }

    #[test]
    fn nan_objective_is_an_error_with_iterate() {
        let x = GrassmannPoint::from_orthonormal(Matrix::eye(3, 1)).unwrap();
        match minimize(&Broken, &x, &OptimConfig::default()) {
            Err(Error::ObjectiveEvaluation {
                iteration, iterate, ..
            }) => {
                assert_eq!(iteration, 0);
                assert_eq!(iterate.shape(), (3, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_validation_and_json() {
        assert!(OptimConfig::default().validate().is_ok());
        let bad = OptimConfig {
            armijo_c: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimConfig {
            backtrack_factor: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let cfg: OptimConfig = serde_json::from_str(r#"{"max_iters": 20}"#).unwrap();
        assert_eq!(cfg.max_iters, 20);
        assert_eq!(cfg.grad_tol, 1e-6);
        assert!(serde_json::from_str::<OptimConfig>(r#"{"iters": 20}"#).is_err());
    }
}
