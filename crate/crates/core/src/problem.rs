use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Laplacian, LaplacianEigenpair};
use crate::model::{Model, ParamPoint};

/// A model discretized on a grid: the Laplacian, the sampled profiles and a
/// lazily computed first Laplacian eigenpair shared between parameter
/// variants of the same problem.
#[derive(Debug, Clone)]
pub struct Problem {
    grid: Grid,
    laplacian: Laplacian,
    model: Model,
    alpha: Field,
    beta: Field,
    eigen: Arc<OnceLock<Result<LaplacianEigenpair>>>,
}

impl Problem {
    pub fn new(grid: Grid, model: Model) -> Result<Self> {
        ParamPoint::new(model.params.lambda, model.params.mu)?;
        let alpha = model.alpha.sample(&grid);
        let beta = model.beta.sample(&grid);
        for (name, field) in [("alpha", &alpha), ("beta", &beta)] {
            if field.iter().any(|&a| !a.is_finite() || a < 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be nonnegative")));
            }
            if field.iter().all(|&a| a == 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be nontrivial")));
            }
        }
        let laplacian = Laplacian::new(&grid);
        Ok(Self { grid, laplacian, model, alpha, beta, eigen: Arc::new(OnceLock::new()) })
    }

    /// The same discretization at other parameters.
    pub fn with_params(&self, params: ParamPoint) -> Self {
        Self { model: self.model.with_params(params), ..self.clone() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn laplacian(&self) -> &Laplacian {
        &self.laplacian
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn params(&self) -> ParamPoint {
        self.model.params
    }

    pub fn alpha(&self) -> &Field {
        &self.alpha
    }

    pub fn beta(&self) -> &Field {
        &self.beta
    }

    pub fn laplacian_eigenpair(&self) -> Result<&LaplacianEigenpair> {
        self.eigen
            .get_or_init(|| self.laplacian.principal_eigenpair(&self.grid))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `λ α f(v)` at every node.
    pub fn reaction_u(&self, v: &[f64]) -> Field {
        let lam = self.model.params.lambda;
        Field::from(self.alpha.iter().zip(v).map(|(a, &s)| lam * a * self.model.f.value(s)).collect::<Vec<_>>())
    }

    /// `μ β g(u)` at every node.
    pub fn reaction_v(&self, u: &[f64]) -> Field {
        let mu = self.model.params.mu;
        Field::from(self.beta.iter().zip(u).map(|(b, &s)| mu * b * self.model.g.value(s)).collect::<Vec<_>>())
    }
}
