use serde::{Deserialize, Serialize};

use super::{build_orbit, shooting_newton, EnergySpec, NewtonSolution, ShootOptions, SymmetricOrbit};
use crate::error::{Error, Result};
use crate::scalar::{c, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions<T> {
    pub initial_step: T,
    pub min_step: T,
    pub max_step: T,
    /// Stop with a fold once the corrector's condition number exceeds this.
    pub fold_condition: T,
    /// At step exhaustion, report a fold if the condition number grew by at
    /// least this factor along the branch.
    pub fold_growth: T,
    /// Reject steps whose solution component jumps by more than this
    /// multiple of the predicted change plus the step.
    pub jump_factor: T,
}

impl<T: Real> Default for ContinuationOptions<T> {
    fn default() -> Self {
        ContinuationOptions {
            initial_step: c(1e-3),
            min_step: c(1e-8),
            max_step: c(2e-3),
            fold_condition: c(1e8),
            fold_growth: c(50.0),
            jump_factor: c(20.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corrected<T, const N: usize> {
    #[serde(with = "serde_arrays")]
    pub x: [T; N],
    pub condition: T,
    pub residual: T,
    pub iterations: usize,
}

mod serde_arrays {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, T: Serialize, const N: usize>(a: &[T; N], s: S) -> Result<S::Ok, S::Error> {
        a.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, T: Deserialize<'de>, const N: usize>(d: D) -> Result<[T; N], D::Error> {
        let v = Vec::<T>::deserialize(d)?;
        v.try_into().map_err(|_| serde::de::Error::custom("wrong array length"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint<T, const N: usize> {
    pub mu: T,
    #[serde(flatten)]
    pub solution: Corrected<T, N>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BranchStatus {
    Completed,
    Fold { mu: f64, condition: f64 },
    Failed { error: String, convergence: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch<T, const N: usize> {
    pub points: Vec<BranchPoint<T, N>>,
    pub status: BranchStatus,
    /// Largest `|dx| / |d mu|` between consecutive accepted points.
    pub max_slope: T,
}

impl<T: Real, const N: usize> Branch<T, N> {
    pub fn into_result(self) -> Result<Self> {
        match &self.status {
            BranchStatus::Completed => Ok(self),
            BranchStatus::Fold { mu, condition } => Err(Error::FoldDetected { mu: *mu, condition: *condition }),
            BranchStatus::Failed { error, .. } => Err(Error::ConvergenceFailure(error.clone())),
        }
    }
}

fn dist<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> T {
    (0..N).fold(T::zero(), |s, i| s + (a[i] - b[i]).powi(2)).sqrt()
}

/// Natural-parameter continuation with secant predictor and adaptive step.
pub fn continue_branch<T, const N: usize, F>(
    mu0: T,
    start: Corrected<T, N>,
    mu_target: T,
    opts: &ContinuationOptions<T>,
    mut corrector: F,
) -> Branch<T, N>
where
    T: Real,
    F: FnMut(T, [T; N]) -> Result<Corrected<T, N>>,
{
    let dir = if mu_target >= mu0 { T::one() } else { -T::one() };
    let mut points = vec![BranchPoint { mu: mu0, solution: start }];
    let mut step = opts.initial_step.min(opts.max_step);
    let mut max_slope = T::zero();
    let cond0 = start.condition;
    let mut last_error: Option<Error> = None;
    loop {
        let cur = *points.last().expect("nonempty");
        if (mu_target - cur.mu) * dir <= T::zero() {
            return Branch { points, status: BranchStatus::Completed, max_slope };
        }
        if step < opts.min_step {
            let condition = cur.solution.condition;
            let status = if condition > cond0 * opts.fold_growth {
                BranchStatus::Fold { mu: cur.mu.value(), condition: condition.value() }
            } else {
                let e = last_error.take().unwrap_or(Error::NoConvergence { residual: f64::NAN });
                BranchStatus::Failed { error: e.to_string(), convergence: e.is_convergence() }
            };
            return Branch { points, status, max_slope };
        }
        let h = step.min((mu_target - cur.mu).abs());
        let mu = if h == (mu_target - cur.mu).abs() { mu_target } else { cur.mu + dir * h };
        let slope: [T; N] = if points.len() >= 2 {
            let prev = points[points.len() - 2];
            std::array::from_fn(|i| (cur.solution.x[i] - prev.solution.x[i]) / (cur.mu - prev.mu))
        } else {
            [T::zero(); N]
        };
        let guess: [T; N] = std::array::from_fn(|i| cur.solution.x[i] + slope[i] * (mu - cur.mu));
        match corrector(mu, guess) {
            Ok(sol) => {
                let jump = dist(&sol.x, &guess);
                let predicted = dist(&guess, &cur.solution.x);
                if points.len() >= 2 && jump > opts.jump_factor * (predicted + h) {
                    last_error = Some(Error::ConvergenceFailure("branch jump".into()));
                    step *= c(0.5);
                    continue;
                }
                max_slope = max_slope.max(dist(&sol.x, &cur.solution.x) / h);
                points.push(BranchPoint { mu, solution: sol });
                if sol.condition > opts.fold_condition {
                    return Branch {
                        points,
                        status: BranchStatus::Fold { mu: mu.value(), condition: sol.condition.value() },
                        max_slope,
                    };
                }
                if sol.iterations <= 3 {
                    step = (step * c(1.5)).min(opts.max_step);
                }
            }
            Err(e) => {
                last_error = Some(e);
                step *= c(0.5);
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct OrbitBranch<T> {
    pub branch: Branch<T, 2>,
    /// Orbit rebuilt at the last accepted parameter.
    pub orbit: Option<SymmetricOrbit<T>>,
}

/// Continues a symmetric orbit in `mu` at the energy given by `energy`
/// (re-resolved for every `mu`); the unknowns are `(psi, tau)`.
pub fn continue_in_mu<T: Real>(
    orbit: &SymmetricOrbit<T>,
    energy: EnergySpec<T>,
    mu_target: T,
    opts: &ContinuationOptions<T>,
    shoot: &ShootOptions<T>,
) -> Result<OrbitBranch<T>> {
    let primary = orbit.primary;
    let start = Corrected { x: [orbit.psi, orbit.tau], condition: orbit.condition, residual: orbit.residual, iterations: 0 };
    let branch = continue_branch(orbit.params.mu, start, mu_target, opts, |mu, g| {
        let params = energy.params(mu)?;
        let s: NewtonSolution<T> = shooting_newton(primary, params, g[0], g[1], shoot)?;
        Ok(Corrected { x: [s.psi, s.t], condition: s.condition, residual: s.residual, iterations: s.iterations })
    });
    let last = branch.points.last().expect("nonempty");
    let params = energy.params(last.mu)?;
    let sol = NewtonSolution {
        psi: last.solution.x[0],
        t: last.solution.x[1],
        residual: last.solution.residual,
        iterations: last.solution.iterations,
        condition: last.solution.condition,
    };
    let orbit = build_orbit(primary, params, sol, shoot).ok();
    Ok(OrbitBranch { branch, orbit })
}
