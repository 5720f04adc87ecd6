//! Least-squares and logistic losses over dense data, plus the power-iteration
//! estimate of `‖M‖²` that supplies their Lipschitz constants.

use ndarray::{Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{matvec, matvec_t, Execution};
use crate::problem::SmoothTerm;

const POWER_MAX_ITERS: usize = 5000;
const POWER_REL_TOL: f64 = 1e-9;
const POWER_SEED: u64 = 0x005e_ed0f_903e;

/// `A ∈ R^{m×n}`, `b ∈ Rᵐ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresData {
    pub a: Array2<f64>,
    pub b: Array1<f64>,
}

impl LeastSquaresData {
    pub fn new(a: Array2<f64>, b: Array1<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidData("least-squares matrix is empty".into()));
        }
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                actual: b.len(),
            });
        }
        Ok(Self {
            a: a.as_standard_layout().into_owned(),
            b,
        })
    }

    /// True if some column of `A` is identically zero.
    pub fn has_zero_column(&self) -> bool {
        self.a.axis_iter(Axis(1)).any(|col| col.iter().all(|&v| v == 0.0))
    }
}

/// `f(x) = ½‖Ax − b‖²`, `∇f(x) = Aᵀ(Ax − b)`, `L_f = ‖A‖²`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    data: LeastSquaresData,
    lipschitz: f64,
    exec: Execution,
}

impl LeastSquares {
    pub fn new(data: LeastSquaresData) -> Result<Self> {
        Self::with_execution(data, Execution::default())
    }

    pub fn with_execution(data: LeastSquaresData, exec: Execution) -> Result<Self> {
        let lipschitz = spectral_norm_sq_with(&data.a, exec);
        Ok(Self { data, lipschitz, exec })
    }

    pub fn data(&self) -> &LeastSquaresData {
        &self.data
    }

    fn residual(&self, x: &Array1<f64>) -> Array1<f64> {
        let x = x.as_slice().expect("contiguous vector");
        matvec(self.data.a.view(), x, self.exec) - &self.data.b
    }
}

impl SmoothTerm for LeastSquares {
    fn dim(&self) -> usize {
        self.data.a.ncols()
    }

    fn value(&self, x: &Array1<f64>) -> f64 {
        0.5 * self.residual(x).iter().map(|r| r * r).sum::<f64>()
    }

    fn gradient(&self, x: &Array1<f64>) -> Array1<f64> {
        let r = self.residual(x);
        matvec_t(self.data.a.view(), r.as_slice().unwrap(), self.exec)
    }

    fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }
}

/// Augmented design `C` whose i-th row is `(aᵢᵀ, 1)` and labels `bᵢ ∈ {−1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticData {
    pub c: Array2<f64>,
    pub b: Array1<f64>,
}

impl LogisticData {
    /// Takes the augmented matrix directly.
    pub fn new(c: Array2<f64>, b: Array1<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::InvalidData("logistic design matrix is empty".into()));
        }
        if c.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: c.nrows(),
                actual: b.len(),
            });
        }
        if let Some(bad) = b.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidData(format!("label {bad} is not in {{-1, +1}}")));
        }
        if b.iter().all(|&v| v == b[0]) {
            return Err(Error::InvalidData("labels are all identical".into()));
        }
        Ok(Self {
            c: c.as_standard_layout().into_owned(),
            b,
        })
    }

    /// Builds `C = [A, 1]` from the raw features.
    pub fn from_features(a: &Array2<f64>, b: Array1<f64>) -> Result<Self> {
        let (m, n) = a.dim();
        let c = Array2::from_shape_fn((m, n + 1), |(i, j)| if j < n { a[[i, j]] } else { 1.0 });
        Self::new(c, b)
    }

    /// Number of features `n`; the variable has length `n + 1`.
    pub fn features(&self) -> usize {
        self.c.ncols() - 1
    }
}

/// `log(1 + eᵗ)` without overflow.
#[inline]
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `f(x) = Σ log(1 + exp(−bᵢ (Cx)ᵢ))`, `L_f = ‖C‖² / 4`.
#[derive(Debug, Clone)]
pub struct Logistic {
    data: LogisticData,
    lipschitz: f64,
    exec: Execution,
}

impl Logistic {
    pub fn new(data: LogisticData) -> Result<Self> {
        Self::with_execution(data, Execution::default())
    }

    pub fn with_execution(data: LogisticData, exec: Execution) -> Result<Self> {
        let lipschitz = 0.25 * spectral_norm_sq_with(&data.c, exec);
        Ok(Self { data, lipschitz, exec })
    }

    pub fn data(&self) -> &LogisticData {
        &self.data
    }

    fn margins(&self, x: &Array1<f64>) -> Array1<f64> {
        let z = matvec(self.data.c.view(), x.as_slice().expect("contiguous vector"), self.exec);
        z * &self.data.b
    }
}

impl SmoothTerm for Logistic {
    fn dim(&self) -> usize {
        self.data.c.ncols()
    }

    fn value(&self, x: &Array1<f64>) -> f64 {
        self.margins(x).iter().map(|&t| softplus(-t)).sum()
    }

    fn gradient(&self, x: &Array1<f64>) -> Array1<f64> {
        let margins = self.margins(x);
        let w: Vec<f64> = margins
            .iter()
            .zip(self.data.b.iter())
            .map(|(&t, &bi)| -bi * sigmoid(-t))
            .collect();
        matvec_t(self.data.c.view(), &w, self.exec)
    }

    fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }
}

/// `‖M‖²`, the squared largest singular value, by power iteration on `MᵀM`.
pub fn spectral_norm_sq(m: &Array2<f64>) -> f64 {
    spectral_norm_sq_with(m, Execution::default())
}

pub fn spectral_norm_sq_with(m: &Array2<f64>, exec: Execution) -> f64 {
    let m = m.as_standard_layout();
    let n = m.ncols();
    if m.is_empty() {
        return 0.0;
    }
    let mut rng = ChaCha20Rng::seed_from_u64(POWER_SEED);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let scale = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= scale);

    let mut quotient = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = matvec(m.view(), &v, exec);
        let q = w.iter().map(|x| x * x).sum::<f64>();
        if q == 0.0 {
            return 0.0;
        }
        let next = matvec_t(m.view(), w.as_slice().unwrap(), exec);
        let len = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        let converged = (q - quotient).abs() < POWER_REL_TOL * q;
        quotient = q;
        if converged || len == 0.0 {
            break;
        }
        v = next.iter().map(|x| x / len).collect();
    }
    quotient
}
