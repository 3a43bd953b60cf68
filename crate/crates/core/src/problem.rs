use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::operators::{check_len, DenseMatrix, LinearOperator};
use crate::penalties::Misfit;
use crate::regularizers::{Cone, Regularizer};

/// `min ρ(b − Ax) subject to φ(x) ≤ τ`, for any budget `τ`.
#[derive(Debug, Clone)]
pub struct Problem<A = DenseMatrix> {
    pub op: A,
    pub b: Vec<f64>,
    pub misfit: Misfit,
    pub regularizer: Regularizer,
}

impl<A: LinearOperator> Problem<A> {
    pub fn new(op: A, b: Vec<f64>, misfit: Misfit, regularizer: Regularizer) -> Result<Self> {
        check_len(op.rows(), b.len())?;
        if let Regularizer::Gauge {
            cone: Cone::HalfSpace { axis },
            ..
        } = regularizer
        {
            if axis >= op.cols() {
                return Err(Error::InvalidParameter(alloc::format!(
                    "half-space axis {axis} out of range for {} columns",
                    op.cols()
                )));
            }
        }
        Ok(Self {
            op,
            b,
            misfit,
            regularizer,
        })
    }

    pub fn rows(&self) -> usize {
        self.op.rows()
    }

    pub fn cols(&self) -> usize {
        self.op.cols()
    }

    /// `b − Ax`
    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols(), x.len())?;
        let mut r = vec![0.0; self.rows()];
        self.residual_into(x, &mut r);
        Ok(r)
    }

    pub(crate) fn residual_into(&self, x: &[f64], r: &mut [f64]) {
        self.op.apply_into(x, r);
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri = bi - *ri;
        }
    }

    /// `ρ(b − Ax)`
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        Ok(self.misfit.value(&self.residual(x)?))
    }
}
