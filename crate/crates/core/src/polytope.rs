//! The truncation domain `{x : Ax <= b}`, feasibility checks, and the
//! whitening reduction from general normal distributions to the standard one.

use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// A convex polytope `{x in R^d : Ax <= b}` given by `m` linear inequalities.
///
/// Rows with zero normal are accepted at construction; they are classified at
/// use time when the per-constraint intersection is solved.
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope<S: Real> {
    a: DMatrix<S>,
    b: DVector<S>,
}

impl<S: Real> Polytope<S> {
    /// Builds a polytope from an `m x d` constraint matrix and an `m`-vector
    /// of offsets. All entries must be finite and `m, d >= 1`.
    pub fn new(a: DMatrix<S>, b: DVector<S>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::InvalidInput(
                "constraint matrix must have at least one row and one column".into(),
            ));
        }
        if b.len() != a.nrows() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "constraint entries must be finite".into(),
            ));
        }
        Ok(Self { a, b })
    }

    /// Number of constraints `m`.
    pub fn num_constraints(&self) -> usize {
        self.a.nrows()
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<S> {
        &self.a
    }

    pub fn offsets(&self) -> &DVector<S> {
        &self.b
    }

    /// Computes `Ax - b`. Nonpositive entries mean the point satisfies the
    /// corresponding constraints.
    pub fn residuals(&self, x: &DVector<S>) -> Result<DVector<S>> {
        self.check_dim(x)?;
        Ok(&self.a * x - &self.b)
    }

    /// Largest residual over all constraints.
    pub fn max_residual(&self, x: &DVector<S>) -> Result<S> {
        let res = self.residuals(x)?;
        Ok(res
            .iter()
            .copied()
            .fold(S::from_double(f64::NEG_INFINITY), |m, v| m.max(v)))
    }

    /// True iff every residual is `<= tol`.
    pub fn is_feasible(&self, x: &DVector<S>, tol: S) -> Result<bool> {
        Ok(self.max_residual(x)? <= tol)
    }

    /// First constraint whose residual is `>= 0`, if any. Strict feasibility
    /// (all residuals `< 0`) is required to start a chain.
    pub fn strict_violation(&self, x: &DVector<S>) -> Result<Option<(usize, S)>> {
        let res = self.residuals(x)?;
        Ok(res
            .iter()
            .copied()
            .enumerate()
            .find(|(_, r)| *r >= S::zero()))
    }

    /// Converts the polytope to another working precision.
    pub fn cast<T: Real>(&self) -> Polytope<T> {
        Polytope {
            a: self.a.map(|v| T::from_double(v.to_double())),
            b: self.b.map(|v| T::from_double(v.to_double())),
        }
    }

    fn check_dim(&self, x: &DVector<S>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// The normal distribution being truncated: either the standard normal or a
/// general `N(mean, covariance)` whose Cholesky factor is computed once at
/// construction.
#[derive(Clone, Debug)]
pub enum GaussianSpec<S: Real> {
    Standard { dim: usize },
    General { mean: DVector<S>, lower: DMatrix<S> },
}

impl<S: Real> GaussianSpec<S> {
    pub fn standard(dim: usize) -> Self {
        Self::Standard { dim }
    }

    /// Builds a general spec from a mean and a symmetric positive-definite
    /// covariance. Fails if the covariance admits no Cholesky factorization.
    pub fn general(mean: DVector<S>, covariance: DMatrix<S>) -> Result<Self> {
        if covariance.nrows() != covariance.ncols() {
            return Err(Error::DimensionMismatch {
                expected: covariance.nrows(),
                got: covariance.ncols(),
            });
        }
        if mean.len() != covariance.nrows() {
            return Err(Error::DimensionMismatch {
                expected: covariance.nrows(),
                got: mean.len(),
            });
        }
        let chol = Cholesky::new(covariance).ok_or(Error::CholeskyFailed)?;
        Ok(Self::General {
            mean,
            lower: chol.l(),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Standard { dim } => *dim,
            Self::General { mean, .. } => mean.len(),
        }
    }

    pub fn is_standard(&self) -> bool {
        matches!(self, Self::Standard { .. })
    }

    /// Transforms the polytope into the coordinates of a standard normal
    /// variable `u` with `x = L u + mean`: the whitened polytope is
    /// `{u : (A L) u <= b - A mean}`. A standard spec returns its input
    /// unchanged.
    pub fn whiten(&self, poly: &Polytope<S>) -> Result<Polytope<S>> {
        if poly.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: poly.dim(),
            });
        }
        match self {
            Self::Standard { .. } => Ok(poly.clone()),
            Self::General { mean, lower } => {
                let a = &poly.a * lower;
                let b = &poly.b - &poly.a * mean;
                Polytope::new(a, b)
            }
        }
    }

    /// Maps a point from original coordinates to whitened coordinates,
    /// `u = L^-1 (x - mean)`.
    pub fn whiten_point(&self, x: &DVector<S>) -> Result<DVector<S>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        match self {
            Self::Standard { .. } => Ok(x.clone()),
            Self::General { mean, lower } => lower
                .solve_lower_triangular(&(x - mean))
                .ok_or(Error::CholeskyFailed),
        }
    }

    /// Maps a whitened point back to original coordinates, `x = L u + mean`.
    pub fn unwhiten(&self, u: &DVector<S>) -> DVector<S> {
        match self {
            Self::Standard { .. } => u.clone(),
            Self::General { mean, lower } => lower * u + mean,
        }
    }
}

/// On-disk problem description.
///
/// A JSON document with fields `A` (row-major array of arrays), `b` (array),
/// optional `mean`, optional `covariance`, and an optional strictly feasible
/// start `x0` in original coordinates. All numbers are IEEE-754 doubles in
/// decimal text.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProblemFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: ProblemFile = serde_json::from_str(&text)?;
        file.validate()?;
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Checks dimension consistency of all fields.
    pub fn validate(&self) -> Result<()> {
        let m = self.a.len();
        if m == 0 {
            return Err(Error::InvalidInput("problem has no constraints".into()));
        }
        let d = self.a[0].len();
        if d == 0 {
            return Err(Error::InvalidInput("constraint rows are empty".into()));
        }
        for row in &self.a {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
        }
        if self.b.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: self.b.len(),
            });
        }
        if let Some(mean) = &self.mean {
            if mean.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: mean.len(),
                });
            }
        }
        if let Some(cov) = &self.covariance {
            if cov.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: cov.len(),
                });
            }
            for row in cov {
                if row.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: row.len(),
                    });
                }
            }
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: x0.len(),
                });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.a.first().map_or(0, Vec::len)
    }

    pub fn to_polytope(&self) -> Result<Polytope<f64>> {
        let m = self.a.len();
        let d = self.dim();
        let a = DMatrix::from_fn(m, d, |i, j| self.a[i][j]);
        let b = DVector::from_column_slice(&self.b);
        Polytope::new(a, b)
    }

    /// Builds the Gaussian spec; a file without `mean` and `covariance`
    /// describes the standard normal. A missing mean defaults to zero and a
    /// missing covariance to the identity.
    pub fn to_gaussian(&self) -> Result<GaussianSpec<f64>> {
        let d = self.dim();
        match (&self.mean, &self.covariance) {
            (None, None) => Ok(GaussianSpec::standard(d)),
            (mean, cov) => {
                let mean = mean
                    .as_ref()
                    .map_or_else(|| DVector::zeros(d), |v| DVector::from_column_slice(v));
                let cov = cov.as_ref().map_or_else(
                    || DMatrix::identity(d, d),
                    |c| DMatrix::from_fn(d, d, |i, j| c[i][j]),
                );
                GaussianSpec::general(mean, cov)
            }
        }
    }
}
