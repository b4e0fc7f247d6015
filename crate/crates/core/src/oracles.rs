//! Independent ground-truth implementations used by the test and benchmark
//! suites: closed-form moments of a univariate truncated standard normal and
//! a naive rejection sampler for low-dimensional polytopes.

use libm::{erf, erfc};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::real::Real;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.5066282746310002;

fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// `Phi(u) - Phi(l)` evaluated without catastrophic cancellation: far right
/// tails difference complementary CDFs, far left tails reflect, and central
/// intervals difference `erf` terms of opposite sign.
fn interval_mass(l: f64, u: f64) -> f64 {
    if l >= 0.0 {
        0.5 * (erfc(l / SQRT_2) - erfc(u / SQRT_2))
    } else if u <= 0.0 {
        interval_mass(-u, -l)
    } else {
        0.5 * (erf(u / SQRT_2) - erf(l / SQRT_2))
    }
}

/// The standard normal truncated to `[lower, upper]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedNormal1D {
    pub lower: f64,
    pub upper: f64,
}

impl TruncatedNormal1D {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::InvalidInput(format!(
                "truncation bounds must be finite with lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// Closed-form mean and variance:
    /// `mean = (pdf(l) - pdf(u)) / Z` and
    /// `var = 1 + (l pdf(l) - u pdf(u)) / Z - mean^2` with `Z = Phi(u) - Phi(l)`.
    pub fn moments(&self) -> Result<(f64, f64)> {
        let (l, u) = (self.lower, self.upper);
        let z = interval_mass(l, u);
        if !(z.is_finite() && z > 1e-300) {
            return Err(Error::UnderflowingMass);
        }
        let mean = (pdf(l) - pdf(u)) / z;
        let variance = 1.0 + (l * pdf(l) - u * pdf(u)) / z - mean * mean;
        Ok((mean, variance))
    }
}

/// Draws `N(0, I)` proposals and keeps the feasible ones until `n` rows are
/// accepted. A pilot run of 10^4 proposals estimates the acceptance
/// probability first and fails when it falls below `1e-3`.
pub fn rejection_sample<S: Real, R: Rng + ?Sized>(
    poly: &Polytope<S>,
    n: usize,
    rng: &mut R,
) -> Result<DMatrix<S>> {
    const PILOT: usize = 10_000;
    let d = poly.dim();
    let zero = S::zero();

    let mut accepted: Vec<DVector<S>> = Vec::with_capacity(n);
    let mut pilot_hits = 0usize;
    for _ in 0..PILOT {
        let x = DVector::from_fn(d, |_, _| S::standard_normal(rng));
        if poly.max_residual(&x)? <= zero {
            pilot_hits += 1;
            if accepted.len() < n {
                accepted.push(x);
            }
        }
    }
    let estimated = pilot_hits as f64 / PILOT as f64;
    if estimated < 1e-3 {
        return Err(Error::AcceptanceTooLow { estimated });
    }

    while accepted.len() < n {
        let x = DVector::from_fn(d, |_, _| S::standard_normal(rng));
        if poly.max_residual(&x)? <= zero {
            accepted.push(x);
        }
    }

    let mut out = DMatrix::zeros(n, d);
    for (i, x) in accepted.iter().take(n).enumerate() {
        out.row_mut(i).tr_copy_from(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn easy_truncation_reference_moments() {
        let t = TruncatedNormal1D::new(-1.0, 3.0).unwrap();
        let (mean, var) = t.moments().unwrap();
        assert_relative_eq!(mean, 0.2828, epsilon = 5e-5);
        assert_relative_eq!(var, 0.6161, epsilon = 5e-5);
    }

    #[test]
    fn far_tail_truncation_reference_moments() {
        let t = TruncatedNormal1D::new(15.0, 16.0).unwrap();
        let (mean, var) = t.moments().unwrap();
        assert_relative_eq!(mean, 15.0661, epsilon = 5e-5);
        assert_relative_eq!(var, 0.0043, epsilon = 5e-5);
    }

    #[test]
    fn symmetric_truncation_has_zero_mean() {
        for a in [0.5, 1.0, 2.5] {
            let t = TruncatedNormal1D::new(-a, a).unwrap();
            let (mean, _) = t.moments().unwrap();
            assert_eq!(mean, 0.0);
        }
    }

    #[test]
    fn left_tail_mirrors_right_tail() {
        let right = TruncatedNormal1D::new(15.0, 16.0)
            .unwrap()
            .moments()
            .unwrap();
        let left = TruncatedNormal1D::new(-16.0, -15.0)
            .unwrap()
            .moments()
            .unwrap();
        assert_relative_eq!(left.0, -right.0, epsilon = 1e-13);
        assert_relative_eq!(left.1, right.1, epsilon = 1e-13);
    }

    #[test]
    fn underflowing_mass_is_an_error() {
        let t = TruncatedNormal1D::new(40.0, 41.0).unwrap();
        assert!(matches!(t.moments(), Err(Error::UnderflowingMass)));
    }

    /// Adaptive Simpson quadrature, the independent check on the closed forms.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, m: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
        }
        fn recurse(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, 0.5 * (a + m), m);
            let right = simpson(f, m, 0.5 * (m + b), b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, m, left, 0.5 * tol, depth - 1)
                    + recurse(f, m, b, right, 0.5 * tol, depth - 1)
            }
        }
        let m = 0.5 * (a + b);
        recurse(f, a, b, simpson(f, a, m, b), tol, 40)
    }

    #[test]
    fn moments_match_numerical_quadrature() {
        let mut rng = StdRng::seed_from_u64(101);
        for _ in 0..100 {
            let l = -5.0 + 10.0 * f64::uniform_01(&mut rng);
            let mut u = -5.0 + 10.0 * f64::uniform_01(&mut rng);
            if (u - l).abs() < 0.05 {
                u = l + 0.05;
            }
            let (l, u) = if l < u { (l, u) } else { (u, l) };
            let t = TruncatedNormal1D::new(l, u).unwrap();
            let (mean, var) = t.moments().unwrap();

            // Integrate the normalized truncated density so the tolerance is
            // not amplified by 1/Z on low-mass intervals, and center the
            // second moment so var is not computed as a difference of squares.
            let z = adaptive_simpson(&pdf, l, u, 1e-13);
            let g = move |x: f64| pdf(x) / z;
            let m1 = adaptive_simpson(&|x| x * g(x), l, u, 1e-12);
            let v = adaptive_simpson(&|x| (x - m1) * (x - m1) * g(x), l, u, 1e-12);
            assert_relative_eq!(mean, m1, max_relative = 1e-8, epsilon = 1e-10);
            assert_relative_eq!(var, v, max_relative = 1e-8, epsilon = 1e-10);
        }
    }

    #[test]
    fn vacuous_polytope_accepts_everything() {
        let poly = Polytope::new(
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_column_slice(&[1e9]),
        )
        .unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        let samples = rejection_sample::<f64, _>(&poly, 100, &mut rng).unwrap();
        assert_eq!(samples.nrows(), 100);
    }

    #[test]
    fn tiny_acceptance_is_an_error() {
        // x <= -4: acceptance about 3e-5.
        let poly = Polytope::new(
            DMatrix::from_row_slice(1, 1, &[1.0]),
            DVector::from_column_slice(&[-4.0]),
        )
        .unwrap();
        let mut rng = StdRng::seed_from_u64(6);
        assert!(matches!(
            rejection_sample::<f64, _>(&poly, 10, &mut rng),
            Err(Error::AcceptanceTooLow { .. })
        ));
    }

    #[test]
    fn rejection_sampler_matches_closed_form_1d() {
        let poly = Polytope::new(
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            DVector::from_column_slice(&[3.0, 1.0]),
        )
        .unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        let n = 100_000;
        let samples = rejection_sample::<f64, _>(&poly, n, &mut rng).unwrap();
        let mean = samples.column(0).sum() / n as f64;
        let var = samples.column(0).map(|v| (v - mean) * (v - mean)).sum() / (n - 1) as f64;
        let (tm, tv) = TruncatedNormal1D::new(-1.0, 3.0)
            .unwrap()
            .moments()
            .unwrap();
        let se_mean = (tv / n as f64).sqrt();
        assert!((mean - tm).abs() <= 3.0 * se_mean, "mean {mean} vs {tm}");
        // Variance standard error under approximate normality.
        let se_var = tv * (2.0 / n as f64).sqrt();
        assert!((var - tv).abs() <= 3.0 * se_var, "var {var} vs {tv}");
    }

    #[test]
    fn halfplane_leaves_other_marginal_standard_normal() {
        // x1 <= 0 in 2-d: the marginal of x2 stays standard normal.
        let poly = Polytope::new(
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DVector::from_column_slice(&[0.0]),
        )
        .unwrap();
        let mut rng = StdRng::seed_from_u64(8);
        let n = 50_000;
        let samples = rejection_sample::<f64, _>(&poly, n, &mut rng).unwrap();
        let mut xs: Vec<f64> = samples.column(1).iter().copied().collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Kolmogorov-Smirnov statistic against Phi.
        let mut d_stat: f64 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let cdf = 0.5 * erfc(-x / SQRT_2);
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            d_stat = d_stat.max((cdf - lo).abs()).max((hi - cdf).abs());
        }
        // Asymptotic Kolmogorov p-value.
        let lambda = (n as f64).sqrt() * d_stat;
        let p: f64 = 2.0
            * (1..=100)
                .map(|k| {
                    let k = k as f64;
                    (-1.0f64).powi(k as i32 - 1) * (-2.0 * k * k * lambda * lambda).exp()
                })
                .sum::<f64>();
        assert!(p > 0.001, "KS statistic {d_stat}, p {p}");
    }
}
