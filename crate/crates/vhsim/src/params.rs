//! Model parameters: contact rates, diffusion coefficient, latency rate.

use crate::error::{Error, Result};

/// A parameter that is either spatially constant or given per cell.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamField {
    Scalar(f64),
    PerCell(Vec<f64>),
}

impl ParamField {
    #[inline]
    pub fn get(&self, cell: usize) -> f64 {
        match self {
            ParamField::Scalar(v) => *v,
            ParamField::PerCell(v) => v[cell],
        }
    }

    pub fn check_len(&self, n_cells: usize) -> Result<()> {
        match self {
            ParamField::Scalar(_) => Ok(()),
            ParamField::PerCell(v) if v.len() == n_cells => Ok(()),
            ParamField::PerCell(v) => Err(Error::FieldLength {
                got: v.len(),
                expected: n_cells,
            }),
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            ParamField::Scalar(v) => *v,
            ParamField::PerCell(v) => v.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// Materialize as a per-cell vector of length `n`.
    pub fn to_vec(&self, n: usize) -> Vec<f64> {
        match self {
            ParamField::Scalar(v) => vec![*v; n],
            ParamField::PerCell(v) => v.clone(),
        }
    }
}

impl From<f64> for ParamField {
    fn from(v: f64) -> Self {
        ParamField::Scalar(v)
    }
}

/// Form of the vector dispersal operator.
///
/// `NonFickian` diffuses the product `D(x)·u` (zero-flux faces of `D·u`);
/// `Fickian` is the flux form `div(D grad u)` with zero-flux faces of `u`.
/// For constant `D` the two coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Formulation {
    #[default]
    NonFickian,
    Fickian,
}

/// Epidemiological and dispersal parameters of the model.
#[derive(Debug, Clone)]
pub struct ModelParams {
    /// Contact rate of a vector with hosts (drives host exposure).
    pub beta_v: ParamField,
    /// Contact rate of a host with vectors (drives vector infection).
    pub beta_h: ParamField,
    /// Vector diffusion coefficient, strictly positive.
    pub d: ParamField,
    /// Latency exit rate; `1/epsilon` is the expected exposed duration.
    pub epsilon: f64,
    pub formulation: Formulation,
}

impl ModelParams {
    pub fn constant(beta_v: f64, beta_h: f64, d: f64, epsilon: f64) -> ModelParams {
        ModelParams {
            beta_v: beta_v.into(),
            beta_h: beta_h.into(),
            d: d.into(),
            epsilon,
            formulation: Formulation::default(),
        }
    }

    pub fn with_formulation(mut self, formulation: Formulation) -> ModelParams {
        self.formulation = formulation;
        self
    }

    pub fn validate(&self, n_cells: usize) -> Result<()> {
        self.beta_v.check_len(n_cells)?;
        self.beta_h.check_len(n_cells)?;
        self.d.check_len(n_cells)?;
        for i in 0..n_cells {
            if !(self.d.get(i) > 0.0) {
                return Err(Error::NonpositiveDiffusion { cell: i });
            }
            if self.beta_v.get(i) < 0.0 || self.beta_h.get(i) < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "negative contact rate at cell {i}"
                )));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}
