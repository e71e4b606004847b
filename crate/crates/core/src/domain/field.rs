use std::sync::Arc;

use super::grid::GridDomain;
use crate::error::{Error, Result};

/// One finite real value per Interior or Boundary node of a domain.
#[derive(Clone, Debug)]
pub struct ScalarField {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(domain: Arc<GridDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::SizeMismatch { expected: domain.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("field value at node {i} is not finite")));
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: Arc<GridDomain>) -> Self {
        let n = domain.len();
        Self { domain, values: vec![0.0; n] }
    }

    pub fn constant(domain: Arc<GridDomain>, c: f64) -> Self {
        let n = domain.len();
        Self { domain, values: vec![c; n] }
    }

    /// Samples `f` at every active node position.
    pub fn from_fn(domain: Arc<GridDomain>, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        let values = (0..domain.len()).map(|i| f(domain.position(i))).collect();
        Self { domain, values }
    }

    /// Samples `f` at interior nodes and sets boundary nodes to zero.
    pub fn zero_trace_from_fn(domain: Arc<GridDomain>, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        let values =
            (0..domain.len()).map(|i| if domain.is_boundary(i) { 0.0 } else { f(domain.position(i)) }).collect();
        Self { domain, values }
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero_trace(&self) -> bool {
        self.domain.boundary_nodes().all(|i| self.values[i] == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { domain: self.domain.clone(), values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { domain: self.domain.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    /// Pointwise combination of two fields on the same domain.
    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_domain(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { domain: self.domain.clone(), values })
    }

    pub fn sup_distance(&self, other: &ScalarField) -> Result<f64> {
        self.check_same_domain(other)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub(crate) fn check_same_domain(&self, other: &ScalarField) -> Result<()> {
        if self.values.len() != other.values.len() {
            return Err(Error::SizeMismatch { expected: self.values.len(), got: other.values.len() });
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for ScalarField {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}
