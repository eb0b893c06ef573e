//! Limit-state abstraction and batch evaluation.
//!
//! Engines never call a limit state point by point on their hot paths; they
//! hand a whole batch of rows to an [`Executor`]. The serial executor lives
//! here. A thread-pool executor is supplied by the CLI crate. Because every
//! evaluation is pure and results are written back by row index, the
//! outcome never depends on the executor.

use core::sync::atomic::{AtomicUsize, Ordering};

use crate::linalg::Matrix;

/// A performance function: failure is `g(x) <= 0`.
pub trait LimitState: Sync {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F> LimitState for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

pub trait Executor: Sync {
    /// Writes `g(points.row(i))` into `out[i]` for every row.
    fn evaluate(&self, g: &dyn LimitState, points: &Matrix, out: &mut [f64]);
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Serial;

impl Executor for Serial {
    fn evaluate(&self, g: &dyn LimitState, points: &Matrix, out: &mut [f64]) {
        debug_assert_eq!(points.rows(), out.len());
        for (o, x) in out.iter_mut().zip(points.iter_rows()) {
            *o = g.evaluate(x);
        }
    }
}

/// Wraps a limit state and counts its evaluations.
#[derive(Debug)]
pub struct Counted<L> {
    inner: L,
    calls: AtomicUsize,
}

impl<L: LimitState> Counted<L> {
    pub fn new(inner: L) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &L {
        &self.inner
    }
}

impl<L: LimitState> LimitState for Counted<L> {
    fn evaluate(&self, x: &[f64]) -> f64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(x)
    }
}
