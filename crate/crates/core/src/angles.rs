//! Per-constraint intersection of the ellipse `theta -> x cos(theta) + nu sin(theta)`
//! with a halfspace `a^T x <= b`, solved through the trigonometric identity
//! `p cos(theta) + q sin(theta) = r cos(theta - tau)`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::real::Real;

/// The scalars a single constraint row contributes to the intersection
/// problem: `p = a^T x`, `q = a^T nu`, the offset `b`, and `r = sqrt(p^2 + q^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipseProjection<S: Real> {
    pub p: S,
    pub q: S,
    pub offset: S,
    pub r: S,
}

impl<S: Real> EllipseProjection<S> {
    pub fn new(p: S, q: S, offset: S) -> Self {
        Self {
            p,
            q,
            offset,
            r: (p * p + q * q).sqrt(),
        }
    }
}

/// Classification of one ellipse-hyperplane intersection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RootResult<S: Real> {
    /// The hyperplane misses the ellipse entirely; the whole ellipse lies
    /// inside the halfspace and the constraint can be ignored.
    NoIntersection,
    /// The hyperplane is tangent to the ellipse. `contained` tells whether
    /// the ellipse lies inside the halfspace (`b/r = 1`) or outside of it
    /// except for the tangent point (`b/r = -1`).
    Tangent { angle: S, contained: bool },
    /// Two distinct roots with `alpha < beta`; the feasible arc for this
    /// constraint is `[0, alpha] U [beta, 2*pi]`.
    TwoRoots { alpha: S, beta: S },
}

/// Computes `A x` and `A nu` in two matrix-vector products and pairs each row
/// with its offset. Cost `O(m d)`.
pub fn project<S: Real>(
    poly: &Polytope<S>,
    x: &DVector<S>,
    nu: &DVector<S>,
) -> Result<Vec<EllipseProjection<S>>> {
    for v in [x, nu] {
        if v.len() != poly.dim() {
            return Err(Error::DimensionMismatch {
                expected: poly.dim(),
                got: v.len(),
            });
        }
    }
    let px = poly.matrix() * x;
    let pnu = poly.matrix() * nu;
    Ok((0..poly.num_constraints())
        .map(|i| EllipseProjection::new(px[i], pnu[i], poly.offsets()[i]))
        .collect())
}

/// Wraps an angle into `[0, 2*pi)`. Inputs come from `tau +- acos(rho)` with
/// `tau in (-pi, pi]` and `acos in [0, pi]`, so they lie in `(-2*pi, 2*pi]`
/// and a single correction suffices. A result that rounds up to exactly
/// `2*pi` is folded to `0`.
fn wrap_angle<S: Real>(t: S) -> S {
    let two_pi = S::two_pi();
    let t = if t < S::zero() { t + two_pi } else { t };
    if t >= two_pi {
        t - two_pi
    } else {
        t
    }
}

/// Solves `p cos(theta) + q sin(theta) = b` for one constraint and classifies
/// the outcome by the ratio `b/r`.
///
/// `tol` is the feasibility tolerance: when `p > b + tol` the current point
/// violates this constraint and the `[0, alpha] U [beta, 2*pi]` labeling is
/// undefined, so the call fails with [`Error::InfeasibleCurrentPoint`].
pub fn solve_roots<S: Real>(proj: &EllipseProjection<S>, tol: S) -> Result<RootResult<S>> {
    let EllipseProjection { p, q, offset, r } = *proj;

    if r == S::zero() {
        // Zero constraint row: a tautology when b >= 0, unsatisfiable otherwise.
        return if offset >= S::zero() {
            Ok(RootResult::NoIntersection)
        } else {
            Err(Error::InvalidConstraint { row: None })
        };
    }

    if p - offset > tol {
        return Err(Error::InfeasibleCurrentPoint);
    }

    let rho_raw = offset / r;
    if rho_raw > S::one() {
        return Ok(RootResult::NoIntersection);
    }
    // Clamping converts near-tangency into a well-defined tiny or full arc
    // instead of a NaN from acos.
    let rho = rho_raw.clamp(-S::one(), S::one());
    let tau = q.atan2(p);

    if rho == S::one() {
        return Ok(RootResult::Tangent {
            angle: wrap_angle(tau),
            contained: true,
        });
    }
    if rho == -S::one() {
        return Ok(RootResult::Tangent {
            angle: wrap_angle(tau + S::pi()),
            contained: false,
        });
    }

    let width = rho.acos();
    let alpha = wrap_angle(tau - width);
    let beta = wrap_angle(tau + width);

    if alpha == beta {
        // The two roots collapsed after rounding; treat as a tangency.
        return Ok(RootResult::Tangent {
            angle: alpha,
            contained: rho >= S::zero(),
        });
    }
    if alpha < beta {
        return Ok(RootResult::TwoRoots { alpha, beta });
    }

    // alpha > beta: the infeasible arc wraps through the 0/2*pi seam, which
    // only happens when theta = 0 sits within rounding (or within tol) of the
    // arc boundary. Snap the root nearer the seam onto it so the feasible arc
    // stays representable as [0, alpha] U [beta, 2*pi].
    if S::two_pi() - alpha <= beta {
        Ok(RootResult::TwoRoots {
            alpha: S::zero(),
            beta,
        })
    } else {
        Ok(RootResult::TwoRoots {
            alpha,
            beta: S::two_pi(),
        })
    }
}

/// Reduces a classification to the `(alpha, beta)` pair consumed by the
/// interval construction.
///
/// Constraints without effect get the padding pair `(0, 0)`, which keeps the
/// per-constraint output shape uniform and leaves the intersection unchanged.
/// An excluded-side tangency degenerates to the point pair `(t, t)`; the
/// constraint contributes nothing to the interval construction and the
/// sampler's safeguard rejection catches any violating proposal.
pub fn to_interval_pair<S: Real>(result: &RootResult<S>) -> (S, S) {
    match *result {
        RootResult::NoIntersection => (S::zero(), S::zero()),
        RootResult::Tangent {
            contained: true, ..
        } => (S::zero(), S::zero()),
        RootResult::Tangent {
            angle,
            contained: false,
        } => (angle, angle),
        RootResult::TwoRoots { alpha, beta } => (alpha, beta),
    }
}
