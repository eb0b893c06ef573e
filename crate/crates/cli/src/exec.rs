use rayon::prelude::*;
use rbdo_core::{Executor, LimitState, Matrix};

use crate::error::CliError;

/// Evaluates batches on a dedicated thread pool. Every value lands in its
/// own slot, so results do not depend on the number of threads.
#[derive(Debug)]
pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    /// `None` uses one thread per available core.
    pub fn new(threads: Option<usize>) -> Result<Self, CliError> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            if n == 0 {
                return Err(CliError::Config("--threads must be at least 1".into()));
            }
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Pool {
    fn evaluate(&self, g: &dyn LimitState, points: &Matrix, out: &mut [f64]) {
        if self.pool.current_num_threads() == 1 || out.len() < 64 {
            for (o, x) in out.iter_mut().zip(points.iter_rows()) {
                *o = g.evaluate(x);
            }
            return;
        }
        self.pool.install(|| {
            out.par_iter_mut()
                .enumerate()
                .for_each(|(i, o)| *o = g.evaluate(points.row(i)));
        });
    }
}
