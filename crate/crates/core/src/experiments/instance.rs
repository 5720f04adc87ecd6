use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::{Array1, Array2, Axis};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matvec, Execution};
use crate::losses::{LeastSquares, LeastSquaresData, Logistic, LogisticData};
use crate::problem::{CompositeProblem, SmoothTerm};
use crate::prox::{L1MinusL2Term, L1Term};

const MAX_LABEL_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Logistic loss with an ℓ1 penalty on all but the intercept.
    #[serde(rename = "logistic-l1")]
    LogisticL1,
    /// Least squares with the ℓ1−ℓ2 penalty.
    #[serde(rename = "ls-l1l2")]
    LsL1L2,
    /// Least squares with an ℓ1 penalty (lasso), on the ℓ1−ℓ2 data recipe.
    #[serde(rename = "ls-l1")]
    LsL1,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::LogisticL1 => "logistic-l1",
            Family::LsL1L2 => "ls-l1l2",
            Family::LsL1 => "ls-l1",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic-l1" => Ok(Family::LogisticL1),
            "ls-l1l2" => Ok(Family::LsL1L2),
            "ls-l1" => Ok(Family::LsL1),
            other => Err(Error::InvalidConfig(format!("unknown family {other:?}"))),
        }
    }
}

/// One random instance: `(m, n, s) = (100j, 1000j, 20j)` unless an explicit
/// shape overrides it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: Family,
    pub j: usize,
    pub lambda: f64,
    pub seed: u64,
    pub shape: Option<(usize, usize, usize)>,
}

impl InstanceSpec {
    pub fn new(family: Family, j: usize, lambda: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            family,
            j,
            lambda,
            seed,
            shape: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Explicit `(m, n, s)` in place of the `j` size rule.
    pub fn with_shape(mut self, m: usize, n: usize, s: usize) -> Result<Self> {
        self.shape = Some((m, n, s));
        self.validate()?;
        Ok(self)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.shape.unwrap_or((100 * self.j, 1000 * self.j, 20 * self.j))
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("λ must be positive, got {}", self.lambda)));
        }
        let (m, n, s) = self.dims();
        if m == 0 || n == 0 || s > n {
            return Err(Error::InvalidConfig(format!("invalid instance shape ({m}, {n}, {s})")));
        }
        Ok(())
    }
}

fn gaussian_matrix(rng: &mut ChaCha20Rng, m: usize, n: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((m, n), || StandardNormal.sample(rng))
}

/// Support drawn uniformly, then Gaussian values in increasing index order.
fn sparse_signal(rng: &mut ChaCha20Rng, n: usize, s: usize) -> Array1<f64> {
    let mut support = index::sample(rng, n, s).into_vec();
    support.sort_unstable();
    let mut x = Array1::zeros(n);
    for i in support {
        x[i] = StandardNormal.sample(rng);
    }
    x
}

/// Logistic data: Gaussian `A`, `s`-sparse Gaussian `x̂`, `ε̂ ~ U[0, 1]` and
/// `b = sign(Ax̂ + ε̂·1)` (zero counts as `+1`). `ε̂` is redrawn while all
/// labels coincide.
///
/// Draw order from `ChaCha20(seed)`: `A` row-major, support, `x̂` values,
/// then `ε̂`.
pub fn gen_logistic_instance(spec: &InstanceSpec) -> Result<(LogisticData, Array1<f64>)> {
    spec.validate()?;
    let (m, n, s) = spec.dims();
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let a = gaussian_matrix(&mut rng, m, n);
    let x_hat = sparse_signal(&mut rng, n, s);
    let ax = matvec(a.view(), x_hat.as_slice().unwrap(), Execution::Sequential);
    for _ in 0..MAX_LABEL_REDRAWS {
        let eps: f64 = rng.random_range(0.0..=1.0);
        let b = ax.mapv(|v| if v + eps >= 0.0 { 1.0 } else { -1.0 });
        if b.iter().any(|&v| v != b[0]) {
            return Ok((LogisticData::from_features(&a, b)?, x_hat));
        }
    }
    Err(Error::InvalidData(
        "labels stayed identical after repeated redraws".into(),
    ))
}

/// Least-squares data: Gaussian `A` with unit-norm columns, `s`-sparse
/// Gaussian `x̂`, `b = Ax̂ + 0.01ẑ` with Gaussian `ẑ`.
///
/// Draw order from `ChaCha20(seed)`: `A` row-major, support, `x̂` values,
/// then `ẑ`.
pub fn gen_l12_instance(spec: &InstanceSpec) -> Result<(LeastSquaresData, Array1<f64>)> {
    spec.validate()?;
    let (m, n, s) = spec.dims();
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut a = gaussian_matrix(&mut rng, m, n);
    for mut col in a.axis_iter_mut(Axis(1)) {
        let len = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len > 0.0 {
            col.mapv_inplace(|v| v / len);
        }
    }
    let x_hat = sparse_signal(&mut rng, n, s);
    let z: Array1<f64> = Array1::from_shape_simple_fn(m, || StandardNormal.sample(&mut rng));
    let b = matvec(a.view(), x_hat.as_slice().unwrap(), Execution::Sequential) + &(z * 0.01);
    let data = LeastSquaresData::new(a, b)?;
    if data.has_zero_column() {
        return Err(Error::InvalidData("generated matrix has a zero column".into()));
    }
    Ok((data, x_hat))
}

/// A generated instance assembled into a solvable problem.
#[derive(Clone)]
pub struct Instance {
    pub spec: InstanceSpec,
    pub smooth: Arc<dyn SmoothTerm>,
    pub problem: CompositeProblem,
    /// The planted sparse vector in problem coordinates; for the logistic
    /// family the trailing intercept entry is 0.
    pub ground_truth: Array1<f64>,
    /// The ℓ1−ℓ2 penalty, for families that use it.
    pub l1l2: Option<L1MinusL2Term>,
}

impl Instance {
    /// The origin, where every algorithm starts.
    pub fn origin(&self) -> Array1<f64> {
        Array1::zeros(self.problem.dim())
    }
}

pub fn build_instance(spec: &InstanceSpec, exec: Execution) -> Result<Instance> {
    match spec.family {
        Family::LogisticL1 => {
            let (data, x_hat) = gen_logistic_instance(spec)?;
            let smooth: Arc<dyn SmoothTerm> = Arc::new(Logistic::with_execution(data, exec)?);
            let problem = CompositeProblem::new(smooth.clone(), Arc::new(L1Term::new(spec.lambda, true)?))?;
            let ground_truth = x_hat.into_iter().chain(std::iter::once(0.0)).collect();
            Ok(Instance {
                spec: *spec,
                smooth,
                problem,
                ground_truth,
                l1l2: None,
            })
        }
        Family::LsL1L2 | Family::LsL1 => {
            let (data, x_hat) = gen_l12_instance(spec)?;
            let smooth: Arc<dyn SmoothTerm> = Arc::new(LeastSquares::with_execution(data, exec)?);
            let (problem, l1l2) = if spec.family == Family::LsL1L2 {
                let term = L1MinusL2Term::new(spec.lambda)?;
                (CompositeProblem::new(smooth.clone(), Arc::new(term))?, Some(term))
            } else {
                (
                    CompositeProblem::new(smooth.clone(), Arc::new(L1Term::new(spec.lambda, false)?))?,
                    None,
                )
            };
            Ok(Instance {
                spec: *spec,
                smooth,
                problem,
                ground_truth: x_hat,
                l1l2,
            })
        }
    }
}
