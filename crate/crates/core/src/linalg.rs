//! Dense kernels shared by the losses and solvers.
//!
//! Every kernel has a sequential and a data-parallel route. Both routes
//! perform the same floating-point operations in the same order for each
//! output entry, so results are bit-identical regardless of which one runs.
//! Without the `parallel` feature the parallel route falls back to the
//! sequential one.

use ndarray::{Array1, ArrayView2};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Selects how the dense kernels are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

// Below this many matrix entries the rayon overhead dominates.
#[cfg(feature = "parallel")]
const PAR_MIN_ENTRIES: usize = 1 << 14;
#[cfg(feature = "parallel")]
const COL_CHUNK: usize = 256;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

pub fn norm(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn rows<'a>(m: &ArrayView2<'a, f64>) -> &'a [f64] {
    m.to_slice().expect("matrices are stored in standard row-major layout")
}

/// `M x`.
pub fn matvec(m: ArrayView2<'_, f64>, x: &[f64], exec: Execution) -> Array1<f64> {
    let (nr, nc) = m.dim();
    assert_eq!(nc, x.len());
    let data = rows(&m);
    let mut out = vec![0.0; nr];
    if nc == 0 {
        return Array1::from(out);
    }
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && nr * nc >= PAR_MIN_ENTRIES {
        out.par_iter_mut()
            .zip(data.par_chunks(nc))
            .for_each(|(o, row)| *o = dot(row, x));
        return Array1::from(out);
    }
    let _ = exec;
    for (o, row) in out.iter_mut().zip(data.chunks(nc)) {
        *o = dot(row, x);
    }
    Array1::from(out)
}

/// `Mᵀ r`. Each output entry accumulates over rows in increasing order.
pub fn matvec_t(m: ArrayView2<'_, f64>, r: &[f64], exec: Execution) -> Array1<f64> {
    let (nr, nc) = m.dim();
    assert_eq!(nr, r.len());
    let data = rows(&m);
    let mut out = vec![0.0; nc];
    if nc == 0 {
        return Array1::from(out);
    }
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && nr * nc >= PAR_MIN_ENTRIES {
        out.par_chunks_mut(COL_CHUNK).enumerate().for_each(|(chunk, o)| {
            let start = chunk * COL_CHUNK;
            for (row, &ri) in data.chunks(nc).zip(r) {
                let seg = &row[start..start + o.len()];
                for (acc, a) in o.iter_mut().zip(seg) {
                    *acc += a * ri;
                }
            }
        });
        return Array1::from(out);
    }
    let _ = exec;
    for (row, &ri) in data.chunks(nc).zip(r) {
        for (acc, a) in out.iter_mut().zip(row) {
            *acc += a * ri;
        }
    }
    Array1::from(out)
}

/// Maps `f` over `items`, in parallel when requested. Output order matches
/// input order.
pub fn map_collect<T, R, F>(items: Vec<T>, exec: Execution, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.into_par_iter().map(f).collect();
    }
    let _ = exec;
    items.into_iter().map(f).collect()
}
