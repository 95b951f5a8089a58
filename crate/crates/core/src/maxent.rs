//! Classical maximum-entropy solve over a finite state space.
//!
//! Given observables `f_i(x)` and target means `F_i`, the entropy maximizer
//! has the Gibbs form `p_x ∝ exp(−Σ_i λ_i f_i(x))`. The multipliers are found
//! by minimizing the convex dual `ln Z(λ) + λ·F` with damped Newton steps;
//! the Hessian is the covariance matrix of the observables.

use serde::{Deserialize, Serialize};

use crate::entropy::ProbabilityDistribution;
use crate::scalar::{log_sum_exp, Real};
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;
/// Slack of the strict-interior feasibility test.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// Identifier of a micro-state, as it appears in constraint files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateLabel {
    Integer(i64),
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintSet<T> {
    states: Vec<StateLabel>,
    /// `m` rows, one per observable, each with one value per state.
    observables: Vec<Vec<T>>,
    targets: Vec<T>,
}

impl<T: Real> ConstraintSet<T> {
    pub fn new(states: Vec<StateLabel>, observables: Vec<Vec<T>>, targets: Vec<T>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidConstraints("state space is empty".into()));
        }
        if observables.len() != targets.len() {
            return Err(Error::InvalidConstraints(format!(
                "{} observables but {} targets",
                observables.len(),
                targets.len()
            )));
        }
        for (i, row) in observables.iter().enumerate() {
            if row.len() != states.len() {
                return Err(Error::InvalidConstraints(format!(
                    "observable {i} has {} values for {} states",
                    row.len(),
                    states.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConstraints(format!("observable {i} has a non-finite value")));
            }
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidConstraints("non-finite target".into()));
        }
        Ok(Self {
            states,
            observables,
            targets,
        })
    }

    /// States labelled `0..n` with no constraints.
    pub fn unconstrained(n: usize) -> Result<Self> {
        Self::new((0..n as i64).map(StateLabel::Integer).collect(), vec![], vec![])
    }

    pub fn states(&self) -> &[StateLabel] {
        &self.states
    }

    pub fn observables(&self) -> &[Vec<T>] {
        &self.observables
    }

    pub fn targets(&self) -> &[T] {
        &self.targets
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.targets.len()
    }

    fn check_lambdas(&self, lambdas: &[T]) -> Result<()> {
        if lambdas.len() != self.num_constraints() {
            return Err(Error::LengthMismatch {
                left: lambdas.len(),
                right: self.num_constraints(),
            });
        }
        Ok(())
    }

    /// `−Σ_i λ_i f_i(x)` for every state.
    fn log_weights(&self, lambdas: &[T]) -> Vec<T> {
        (0..self.num_states())
            .map(|x| {
                -self
                    .observables
                    .iter()
                    .zip(lambdas)
                    .map(|(f, &l)| l * f[x])
                    .sum::<T>()
            })
            .collect()
    }

    /// Returns `(ln Z, probabilities)` at `lambdas`.
    fn gibbs(&self, lambdas: &[T]) -> (T, Vec<T>) {
        let s = self.log_weights(lambdas);
        let log_z = log_sum_exp(s.iter().copied());
        let probs = s.iter().map(|&v| (v - log_z).exp()).collect();
        (log_z, probs)
    }

    fn means(&self, probs: &[T]) -> Vec<T> {
        self.observables
            .iter()
            .map(|f| f.iter().zip(probs).map(|(&v, &p)| v * p).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GibbsDistribution<T> {
    pub lambdas: Vec<T>,
    pub log_z: T,
    pub probs: ProbabilityDistribution<T>,
    /// `⟨f_i⟩ − F_i` at the returned multipliers.
    pub residuals: Vec<T>,
    pub iterations: usize,
}

impl<T: Real> GibbsDistribution<T> {
    pub fn max_residual(&self) -> T {
        self.residuals.iter().fold(T::zero(), |m, r| m.max(r.abs()))
    }
}

/// `ln Σ_x exp(−Σ_i λ_i f_i(x))`.
pub fn log_partition<T: Real>(cs: &ConstraintSet<T>, lambdas: &[T]) -> Result<T> {
    cs.check_lambdas(lambdas)?;
    Ok(log_sum_exp(cs.log_weights(lambdas)))
}

/// Model means `⟨f_i⟩ = −∂ ln Z / ∂λ_i`.
pub fn dual_gradient<T: Real>(cs: &ConstraintSet<T>, lambdas: &[T]) -> Result<Vec<T>> {
    cs.check_lambdas(lambdas)?;
    let (_, probs) = cs.gibbs(lambdas);
    Ok(cs.means(&probs))
}

/// Dual objective `ln Z(λ) + λ·F`; its minimizer is the MaxEnt solution.
pub fn dual_objective<T: Real>(cs: &ConstraintSet<T>, lambdas: &[T]) -> Result<T> {
    let log_z = log_partition(cs, lambdas)?;
    Ok(log_z + lambdas.iter().zip(&cs.targets).map(|(&l, &f)| l * f).sum::<T>())
}

/// Indices of non-constant observables; errors when a target is infeasible.
fn feasible_active_set<T: Real>(cs: &ConstraintSet<T>) -> Result<Vec<usize>> {
    let slack = T::lit(FEASIBILITY_SLACK);
    let mut active = Vec::new();
    for (i, (f, &target)) in cs.observables.iter().zip(&cs.targets).enumerate() {
        let min = f.iter().copied().fold(T::infinity(), T::min);
        let max = f.iter().copied().fold(T::neg_infinity(), T::max);
        let infeasible = || Error::InfeasibleTargets {
            index: i,
            target: target.to_f64_lossy(),
            min: min.to_f64_lossy(),
            max: max.to_f64_lossy(),
        };
        if max - min <= slack {
            if (target - min).abs() > slack {
                return Err(infeasible());
            }
        } else if !(target > min + slack && target < max - slack) {
            return Err(infeasible());
        } else {
            active.push(i);
        }
    }
    Ok(active)
}

/// In-place Cholesky solve of `a x = b` for symmetric positive-definite `a`.
/// Returns `None` when a pivot is not safely positive.
fn cholesky_solve<T: Real>(mut a: Vec<Vec<T>>, b: &[T]) -> Option<Vec<T>> {
    let n = b.len();
    let scale = (0..n).map(|i| a[i][i].abs()).fold(T::zero(), T::max);
    let floor = scale * T::lit(1e-13);
    for j in 0..n {
        let d = a[j][j] - a[j][..j].iter().map(|&v| v * v).sum::<T>();
        if !(d > floor) {
            return None;
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in (j + 1)..n {
            let s = a[i][j] - a[i][..j].iter().zip(&a[j][..j]).map(|(&x, &y)| x * y).sum::<T>();
            a[i][j] = s / d;
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let s: T = (0..i).map(|k| a[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / a[i][i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let s: T = ((i + 1)..n).map(|k| a[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / a[i][i];
    }
    Some(x)
}

/// Solves the dual and also returns the dual objective after every accepted step.
pub fn solve_dual_traced<T: Real>(cs: &ConstraintSet<T>, tol: T, max_iter: usize) -> Result<(GibbsDistribution<T>, Vec<T>)> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let active = feasible_active_set(cs)?;
    let m = cs.num_constraints();
    let mut lambdas = vec![T::zero(); m];
    let mut trace = Vec::new();

    let finish = |lambdas: Vec<T>, iterations: usize| {
        let (log_z, probs) = cs.gibbs(&lambdas);
        let residuals = cs
            .means(&probs)
            .iter()
            .zip(&cs.targets)
            .map(|(&mu, &f)| mu - f)
            .collect();
        GibbsDistribution {
            lambdas,
            log_z,
            probs: ProbabilityDistribution::from_weights(probs).expect("Gibbs weights are positive"),
            residuals,
            iterations,
        }
    };

    let objective = |l: &[T]| {
        let log_z = log_sum_exp(cs.log_weights(l));
        log_z + l.iter().zip(&cs.targets).map(|(&a, &f)| a * f).sum::<T>()
    };

    let mut current = objective(&lambdas);
    trace.push(current);
    let mut residual = T::zero();
    for iter in 0..=max_iter {
        let (_, probs) = cs.gibbs(&lambdas);
        let means = cs.means(&probs);
        residual = (0..m).fold(T::zero(), |acc, i| acc.max((means[i] - cs.targets[i]).abs()));
        if residual < tol {
            return Ok((finish(lambdas, iter), trace));
        }
        if iter == max_iter {
            break;
        }

        // Gradient of the dual and covariance of the active observables.
        let grad: Vec<T> = active.iter().map(|&i| cs.targets[i] - means[i]).collect();
        let hessian: Vec<Vec<T>> = active
            .iter()
            .map(|&i| {
                active
                    .iter()
                    .map(|&j| {
                        cs.observables[i]
                            .iter()
                            .zip(&cs.observables[j])
                            .zip(&probs)
                            .map(|((&fi, &fj), &p)| p * (fi - means[i]) * (fj - means[j]))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let neg_grad: Vec<T> = grad.iter().map(|&g| -g).collect();
        let direction = match cholesky_solve(hessian.clone(), &neg_grad) {
            Some(step) => step,
            None => {
                // Redundant constraints: steepest descent scaled by the curvature.
                let trace_h: T = (0..active.len()).map(|k| hessian[k][k]).sum::<T>().max(T::epsilon());
                neg_grad.iter().map(|&g| g / trace_h).collect()
            }
        };
        let slope: T = grad.iter().zip(&direction).map(|(&g, &d)| g * d).sum();

        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = lambdas.clone();
            for (k, &i) in active.iter().enumerate() {
                trial[i] = lambdas[i] + t * direction[k];
            }
            let value = objective(&trial);
            let allowance = T::lit(1e-4) * t * slope + T::rounding_slack() * current.abs().max(T::one());
            if value.is_finite() && value <= current + allowance {
                lambdas = trial;
                current = value;
                accepted = true;
                break;
            }
            t = t * T::lit(0.5);
        }
        trace.push(current);
        if !accepted {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: residual.to_f64_lossy(),
    })
}

/// Gibbs distribution matching every target within `tol`.
pub fn solve_dual<T: Real>(cs: &ConstraintSet<T>, tol: T, max_iter: usize) -> Result<GibbsDistribution<T>> {
    solve_dual_traced(cs, tol, max_iter).map(|(g, _)| g)
}
