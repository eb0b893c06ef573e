//! Kriging emulator of one limit state over the augmented space.
//!
//! Components that are constant over the whole confidence box carry no
//! information, so the kriging model only sees the active coordinates.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exec::{Executor, LimitState};
use crate::kriging::{fit, Doe, FitOptions, KrigingModel, Prediction};
use crate::linalg::Matrix;
use crate::probability::ConfidenceBox;
use crate::{doe, rng};

#[derive(Clone, Debug)]
pub struct Surrogate {
    model: KrigingModel,
    active: Vec<usize>,
    /// Full-length point providing the inactive coordinates.
    anchor: Vec<f64>,
    options: FitOptions,
    refits: u64,
}

impl Surrogate {
    /// Fits a surrogate on points given in reduced (active) coordinates.
    pub fn fit(bounds: &ConfidenceBox, inputs: Matrix, outputs: Vec<f64>, options: FitOptions) -> Result<Self> {
        let active = bounds.active_dims();
        if inputs.cols() != active.len() {
            return Err(Error::Dimension {
                expected: active.len(),
                got: inputs.cols(),
            });
        }
        let model = fit(Doe::new(inputs, outputs)?, &options)?;
        Ok(Self {
            model,
            active,
            anchor: bounds.lower.clone(),
            options,
            refits: 0,
        })
    }

    /// Space-filling initial design of `size` points in the box, evaluated
    /// on the true limit state, then fitted.
    pub fn initial(
        g: &dyn LimitState,
        bounds: &ConfidenceBox,
        size: usize,
        options: FitOptions,
        exec: &dyn Executor,
    ) -> Result<Self> {
        let active = bounds.active_dims();
        let lo: Vec<f64> = active.iter().map(|&i| bounds.lower[i]).collect();
        let hi: Vec<f64> = active.iter().map(|&i| bounds.upper[i]).collect();
        let reduced = doe::latin_hypercube(size, &lo, &hi, rng::derive(options.seed, &[rng::label("initial-doe")]));
        let full = lift_rows(&reduced, &active, &bounds.lower);
        let mut y = alloc::vec![0.0; size];
        exec.evaluate(g, &full, &mut y);
        Self::fit(bounds, reduced, y, options)
    }

    /// Rebuilds a surrogate around an existing model.
    pub fn from_model(bounds: &ConfidenceBox, model: KrigingModel, options: FitOptions) -> Result<Self> {
        let active = bounds.active_dims();
        if model.dim() != active.len() {
            return Err(Error::Dimension {
                expected: active.len(),
                got: model.dim(),
            });
        }
        Ok(Self {
            model,
            active,
            anchor: bounds.lower.clone(),
            options,
            refits: 0,
        })
    }

    pub fn model(&self) -> &KrigingModel {
        &self.model
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn calls(&self) -> usize {
        self.model.doe().len()
    }

    pub fn reduce(&self, x: &[f64]) -> Vec<f64> {
        self.active.iter().map(|&i| x[i]).collect()
    }

    pub fn lift(&self, z: &[f64]) -> Vec<f64> {
        let mut x = self.anchor.clone();
        for (&i, &v) in self.active.iter().zip(z) {
            x[i] = v;
        }
        x
    }

    /// Prediction at a full-length physical point.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        self.model.predict(&self.reduce(x))
    }

    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        self.model.predict_mean(&self.reduce(x))
    }

    /// Appends evaluated points (reduced coordinates) and refits, starting
    /// the length search from the current lengths.
    pub fn extend(&mut self, inputs: &Matrix, outputs: &[f64]) -> Result<()> {
        let mut doe = self.model.doe().clone();
        for (x, &y) in inputs.iter_rows().zip(outputs) {
            doe.push(x, y)?;
        }
        self.refits += 1;
        let options = FitOptions {
            warm_start: Some(self.model.lengths().to_vec()),
            seed: rng::derive(self.options.seed, &[rng::label("refit"), self.refits]),
            ..self.options.clone()
        };
        self.model = fit(doe, &options)?;
        Ok(())
    }
}

pub(crate) fn lift_rows(reduced: &Matrix, active: &[usize], anchor: &[f64]) -> Matrix {
    let mut out = Matrix::zeros(reduced.rows(), anchor.len());
    for i in 0..reduced.rows() {
        let row = out.row_mut(i);
        row.copy_from_slice(anchor);
        for (&a, &v) in active.iter().zip(reduced.row(i)) {
            row[a] = v;
        }
    }
    out
}
