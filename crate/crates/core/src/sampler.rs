//! The elliptical slice sampling Markov kernel for polytope-truncated
//! standard normals, with numerical-stability safeguards, plus single-chain
//! and multi-chain drivers with burn-in and thinning.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::angles::{project, solve_roots, to_interval_pair, EllipseProjection};
use crate::error::{Error, Result};
use crate::intervals::{
    active_intervals_fast, sample_theta, trim, AngleIntervalSet, ConstraintAngles,
};
use crate::polytope::Polytope;
use crate::real::Real;

/// Working precision of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Single,
    Double,
}

impl Precision {
    pub fn name(self) -> &'static str {
        match self {
            Precision::Single => "f32",
            Precision::Double => "f64",
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" | "single" => Ok(Precision::Single),
            "f64" | "double" => Ok(Precision::Double),
            other => Err(Error::InvalidInput(format!(
                "unknown precision {other:?}; expected f32 or f64"
            ))),
        }
    }
}

/// Run parameters.
///
/// Defaults depend on the precision: double precision is robust without
/// trimming, single precision trims the active intervals by `1e-6` rad and
/// uses a looser feasibility tolerance.
#[derive(Clone, Copy, Debug)]
pub struct SamplerConfig {
    pub trim_eps: f64,
    pub feasibility_tol: f64,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
    pub precision: Precision,
}

impl SamplerConfig {
    pub fn new(precision: Precision) -> Self {
        let (trim_eps, feasibility_tol) = match precision {
            Precision::Single => (1e-6, 1e-5),
            Precision::Double => (0.0, 1e-9),
        };
        Self {
            trim_eps,
            feasibility_tol,
            burn_in: 0,
            thinning: 1,
            seed: 0,
            precision,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_thinning(mut self, thinning: usize) -> Self {
        self.thinning = thinning;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trim_eps(mut self, trim_eps: f64) -> Self {
        self.trim_eps = trim_eps;
        self
    }

    pub fn with_feasibility_tol(mut self, tol: f64) -> Self {
        self.feasibility_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.thinning < 1 {
            return Err(Error::InvalidInput("thinning must be >= 1".into()));
        }
        if !(0.0..std::f64::consts::PI).contains(&self.trim_eps) {
            return Err(Error::InvalidInput("trim_eps must lie in [0, pi)".into()));
        }
        if !self.feasibility_tol.is_finite() || self.feasibility_tol < 0.0 {
            return Err(Error::InvalidInput(
                "feasibility_tol must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Current iterate of one chain, in whitened coordinates.
#[derive(Clone, Debug)]
pub struct ChainState<S: Real> {
    pub x: DVector<S>,
    pub step: u64,
    /// Cumulative count of safeguard rejections: proposals discarded because
    /// floating-point error pushed them outside the domain (or made the
    /// active intervals undefined). Expected to be zero in double precision.
    pub rejections: u64,
}

impl<S: Real> ChainState<S> {
    pub fn new(x: DVector<S>) -> Self {
        Self {
            x,
            step: 0,
            rejections: 0,
        }
    }
}

/// What a single transition did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Advanced,
    SafeguardRejected,
}

/// Aggregate counters of a finished run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChainStats {
    pub steps: u64,
    pub rejections: u64,
}

/// One transition of the Markov kernel.
///
/// Draws `nu ~ N(0, I)`, intersects the ellipse through `x` and `nu` with the
/// polytope, samples an angle uniformly from the (trimmed) active intervals,
/// and moves to `x cos(theta) + nu sin(theta)` if that point is feasible
/// within tolerance. A violating proposal, an empty interval set, or a
/// constraint the current point violates all leave the chain where it is and
/// count one safeguard rejection.
pub fn ess_step<S: Real, R: Rng + ?Sized>(
    poly: &Polytope<S>,
    state: &mut ChainState<S>,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<StepOutcome> {
    ess_step_with(poly, state, cfg, rng, |_, angles| {
        Ok(active_intervals_fast(angles))
    })
}

/// Kernel transition with a pluggable interval construction, shared by the
/// production step and the benchmark harness. A construction that fails with
/// [`Error::DuplicateAngles`] (the likelihood baseline's limitation) counts
/// as a safeguard rejection.
pub(crate) fn ess_step_with<S: Real, R, F>(
    poly: &Polytope<S>,
    state: &mut ChainState<S>,
    cfg: &SamplerConfig,
    rng: &mut R,
    mut build: F,
) -> Result<StepOutcome>
where
    R: Rng + ?Sized,
    F: FnMut(&[EllipseProjection<S>], &ConstraintAngles<S>) -> Result<AngleIntervalSet<S>>,
{
    let tol = S::from_double(cfg.feasibility_tol);
    let d = poly.dim();
    let nu = DVector::from_fn(d, |_, _| S::standard_normal(rng));

    let projections = project(poly, &state.x, &nu)?;
    let mut angles = ConstraintAngles::with_capacity(projections.len());
    for (row, pr) in projections.iter().enumerate() {
        match solve_roots(pr, tol) {
            Ok(root) => {
                let (alpha, beta) = to_interval_pair(&root);
                angles.push(alpha, beta);
            }
            Err(Error::InfeasibleCurrentPoint) => {
                // The interval construction is undefined from here; stay put
                // and retry with a fresh ellipse next step.
                state.step += 1;
                state.rejections += 1;
                return Ok(StepOutcome::SafeguardRejected);
            }
            Err(Error::InvalidConstraint { .. }) => {
                return Err(Error::InvalidConstraint { row: Some(row) });
            }
            Err(e) => return Err(e),
        }
    }

    let active = match build(&projections, &angles) {
        Ok(set) => set,
        Err(Error::DuplicateAngles) => {
            state.step += 1;
            state.rejections += 1;
            return Ok(StepOutcome::SafeguardRejected);
        }
        Err(e) => return Err(e),
    };
    let trimmed = trim(&active, S::from_double(cfg.trim_eps));
    // Trimming that empties the set would stall the chain; fall back to the
    // untrimmed intervals.
    let chosen = if trimmed.total_length() > S::zero() {
        trimmed
    } else {
        active
    };
    if chosen.total_length() <= S::zero() {
        state.step += 1;
        state.rejections += 1;
        return Ok(StepOutcome::SafeguardRejected);
    }

    let theta = sample_theta(&chosen, S::uniform_01(rng))?;
    let proposal = &state.x * theta.cos() + &nu * theta.sin();

    state.step += 1;
    if poly.is_feasible(&proposal, tol)? {
        state.x = proposal;
        Ok(StepOutcome::Advanced)
    } else {
        state.rejections += 1;
        Ok(StepOutcome::SafeguardRejected)
    }
}

/// Runs one chain: `burn_in` discarded steps, then every `thinning`-th state
/// is recorded until `n_samples` rows are collected.
///
/// The start must be strictly feasible (all residuals negative); the interval
/// construction assumes interior slack.
pub fn run_chain<S: Real, R: Rng + ?Sized>(
    poly: &Polytope<S>,
    x0: &DVector<S>,
    n_samples: usize,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<(DMatrix<S>, ChainStats)> {
    cfg.validate()?;
    if let Some((constraint, residual)) = poly.strict_violation(x0)? {
        return Err(Error::InfeasibleStart {
            constraint,
            residual: residual.to_double(),
        });
    }

    let mut state = ChainState::new(x0.clone());
    for _ in 0..cfg.burn_in {
        ess_step(poly, &mut state, cfg, rng)?;
    }
    let mut samples = DMatrix::zeros(n_samples, poly.dim());
    for s in 0..n_samples {
        for _ in 0..cfg.thinning {
            ess_step(poly, &mut state, cfg, rng)?;
        }
        samples.row_mut(s).tr_copy_from(&state.x);
    }
    Ok((
        samples,
        ChainStats {
            steps: state.step,
            rejections: state.rejections,
        },
    ))
}

/// Deterministic per-chain RNG stream: all chains share the seed as the
/// cipher key and use their index as the stream id, so results do not depend
/// on scheduling.
pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

/// Runs `k` independent chains (one per row of `starts`) and concatenates
/// their sample blocks in chain order. Chains may execute on any number of
/// workers; the output is bitwise reproducible for a fixed seed.
pub fn run_parallel<S: Real>(
    poly: &Polytope<S>,
    starts: &DMatrix<S>,
    per_chain: usize,
    cfg: &SamplerConfig,
) -> Result<(DMatrix<S>, ChainStats)> {
    cfg.validate()?;
    if starts.ncols() != poly.dim() {
        return Err(Error::DimensionMismatch {
            expected: poly.dim(),
            got: starts.ncols(),
        });
    }
    let k = starts.nrows();
    let runs: Vec<(DMatrix<S>, ChainStats)> = (0..k)
        .into_par_iter()
        .map(|i| {
            let x0 = starts.row(i).transpose();
            let mut rng = chain_rng(cfg.seed, i as u64);
            run_chain(poly, &x0, per_chain, cfg, &mut rng)
        })
        .collect::<Result<_>>()?;

    let mut samples = DMatrix::zeros(k * per_chain, poly.dim());
    let mut stats = ChainStats::default();
    for (i, (block, s)) in runs.iter().enumerate() {
        samples.rows_mut(i * per_chain, per_chain).copy_from(block);
        stats.steps += s.steps;
        stats.rejections += s.rejections;
    }
    Ok((samples, stats))
}
