use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::solver::ValueField;

/// Relative singular-value threshold for the rank test.
pub const RANK_TOL: f64 = 1e-10;

/// Feature matrix `Φ` (`|S|×p`) with linearly independent columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBasis {
    phi: DMatrix<f64>,
}

impl FeatureBasis {
    pub fn new(phi: DMatrix<f64>) -> Result<Self> {
        let columns = phi.ncols();
        if columns == 0 || phi.nrows() < columns {
            return Err(Error::RankDeficient {
                rank: columns.min(phi.nrows()),
                columns,
            });
        }
        if phi.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("basis has non-finite entries".into()));
        }
        let sv = phi.clone().svd(false, false).singular_values;
        let top = sv.max();
        let rank = sv.iter().filter(|&&x| x > RANK_TOL * top.max(f64::MIN_POSITIVE)).count();
        if rank < columns {
            return Err(Error::RankDeficient { rank, columns });
        }
        Ok(Self { phi })
    }

    /// Basis from `[s][k]` rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidArgument("basis rows differ in length".into()));
        }
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            phi: DMatrix::identity(n, n),
        }
    }

    pub fn constant(n: usize) -> Self {
        Self {
            phi: DMatrix::from_element(n, 1, 1.0),
        }
    }

    pub fn num_states(&self) -> usize {
        self.phi.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.phi.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.phi
    }

    /// Feature vector `φ(s)`.
    pub fn features(&self, s: usize) -> Vec<f64> {
        self.phi.row(s).iter().copied().collect()
    }

    /// `Φr`.
    pub fn eval(&self, r: &[f64]) -> ValueField {
        let v = &self.phi * DVector::from_column_slice(r);
        ValueField(v.iter().copied().collect())
    }

    /// `φ(s)·r`.
    pub fn eval_at(&self, s: usize, r: &[f64]) -> f64 {
        self.phi.row(s).iter().zip(r).map(|(a, b)| a * b).sum()
    }
}

/// `sqrt(Σ_s w(s) x(s)²)`.
pub fn weighted_norm(x: &[f64], weights: &[f64]) -> f64 {
    x.iter().zip(weights).map(|(x, w)| w * x * x).sum::<f64>().sqrt()
}

/// Weighted least-squares coefficients of `target` on the basis.
pub fn project_weights(basis: &FeatureBasis, weights: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    let n = basis.num_states();
    if weights.len() != n || target.len() != n {
        return Err(Error::InvalidArgument("weights/target length mismatch".into()));
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidArgument("projection weights must be strictly positive".into()));
    }
    let phi = basis.matrix();
    let sqrt_w = DVector::from_iterator(n, weights.iter().map(|w| w.sqrt()));
    let a = DMatrix::from_fn(n, phi.ncols(), |i, j| phi[(i, j)] * sqrt_w[i]);
    let b = DVector::from_iterator(n, target.iter().zip(sqrt_w.iter()).map(|(t, w)| t * w));
    let sol = a
        .svd(true, true)
        .solve(&b, RANK_TOL)
        .map_err(|e| Error::InvalidArgument(format!("projection failed: {e}")))?;
    Ok(sol.iter().copied().collect())
}

/// Weighted least-squares projection of `target` onto `span(Φ)`.
pub fn project(basis: &FeatureBasis, weights: &[f64], target: &[f64]) -> Result<ValueField> {
    Ok(basis.eval(&project_weights(basis, weights, target)?))
}
