//! Benchmark harness: random and adversarial instance generators plus a
//! timing and operation-count comparison of the three interval-construction
//! routes and end-to-end sampling throughput.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::angles::EllipseProjection;
use crate::error::{Error, Result};
use crate::intervals::{
    active_intervals_brute, active_intervals_fast, active_intervals_likelihood_cached,
    AngleIntervalSet, ConstraintAngles,
};
use crate::polytope::Polytope;
use crate::real::Real;
use crate::sampler::{chain_rng, ess_step_with, ChainState, SamplerConfig};

/// A generated problem with a guaranteed strictly feasible start.
#[derive(Clone, Debug)]
pub struct BenchInstance<S: Real> {
    pub poly: Polytope<S>,
    pub x0: DVector<S>,
    pub label: String,
}

impl<S: Real> BenchInstance<S> {
    /// `(d, m)` of the instance.
    pub fn dims(&self) -> (usize, usize) {
        (self.poly.dim(), self.poly.num_constraints())
    }
}

/// Random square instance: `A` is `d x d` with i.i.d. standard-normal
/// entries, `x0 ~ N(0, I)`, and `b = A x0 + u` with `u` uniform on `(0, 1]^d`
/// so the start has strictly positive slack in every row.
pub fn gen_random_instance<S: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> BenchInstance<S> {
    assert!(d >= 1, "dimension must be positive");
    let a = DMatrix::from_fn(d, d, |_, _| S::standard_normal(rng));
    let x0 = DVector::from_fn(d, |_, _| S::standard_normal(rng));
    let u = DVector::from_fn(d, |_, _| loop {
        let v = S::uniform_01(rng);
        if v > S::zero() {
            break v;
        }
    });
    let b = &a * &x0 + u;
    BenchInstance {
        poly: Polytope::new(a, b).expect("generated instance is well-formed"),
        x0,
        label: format!("random_d{d}"),
    }
}

/// Nested-interval family that forces the brute-force intersection into
/// quadratic behavior: `alpha_i = 2*pi*3^-i`, `beta_i = 2*pi*2*3^-i`,
/// presented in the order `i = 1..m` so the running set grows one segment per
/// step. Capped at `m = 300`; far beyond that the angles underflow to zero in
/// double precision.
pub fn gen_worst_case_angles(m: usize) -> Result<ConstraintAngles<f64>> {
    if m == 0 {
        return Err(Error::InvalidInput("need at least one constraint".into()));
    }
    if m > 300 {
        return Err(Error::InvalidInput(format!(
            "worst-case family is capped at m = 300, got {m}"
        )));
    }
    let two_pi = std::f64::consts::TAU;
    let alphas: Vec<f64> = (1..=m).map(|i| two_pi * 3f64.powi(-(i as i32))).collect();
    let betas: Vec<f64> = (1..=m)
        .map(|i| two_pi * 2.0 * 3f64.powi(-(i as i32)))
        .collect();
    ConstraintAngles::new(alphas, betas)
}

/// Synthesizes unit-radius projections that realize a given angle family:
/// the pair `(alpha, beta)` maps to `tau = (alpha + beta) / 2`,
/// `rho = cos((beta - alpha) / 2)`, so the constraint
/// `cos(tau) cos(theta) + sin(tau) sin(theta) <= rho` has exactly the feasible
/// arc `[0, alpha] U [beta, 2*pi]`. Lets the likelihood baseline run on angle
/// families that did not come from a polytope.
pub fn angles_to_projections<S: Real>(angles: &ConstraintAngles<S>) -> Vec<EllipseProjection<S>> {
    let half = S::from_double(0.5);
    angles
        .alphas()
        .iter()
        .zip(angles.betas())
        .map(|(&alpha, &beta)| {
            let tau = half * (alpha + beta);
            let rho = (half * (beta - alpha)).cos();
            EllipseProjection::new(tau.cos(), tau.sin(), rho)
        })
        .collect()
}

/// Which interval-construction route a measurement used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Fast,
    Brute,
    Likelihood,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Fast, Method::Brute, Method::Likelihood];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fast => "fast",
            Method::Brute => "brute",
            Method::Likelihood => "likelihood",
        }
    }

    fn build<S: Real>(
        self,
        projections: &[EllipseProjection<S>],
        angles: &ConstraintAngles<S>,
    ) -> Result<AngleIntervalSet<S>> {
        match self {
            Method::Fast => Ok(active_intervals_fast(angles)),
            Method::Brute => Ok(active_intervals_brute(angles)),
            Method::Likelihood => active_intervals_likelihood_cached(projections, angles),
        }
    }
}

/// One machine-readable measurement row.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub label: String,
    pub d: usize,
    pub m: usize,
    pub method: String,
    pub reps: usize,
    pub median_ns_per_call: u64,
    pub samples_per_sec: f64,
    pub workers: usize,
    pub precision: String,
    pub seed: u64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

/// Projections plus angle pairs of one captured step.
type StepInputs<S> = (Vec<EllipseProjection<S>>, ConstraintAngles<S>);

/// Captures per-step interval-construction inputs from the chain start.
fn capture_inputs<S: Real, R: Rng + ?Sized>(
    instance: &BenchInstance<S>,
    cfg: &SamplerConfig,
    count: usize,
    rng: &mut R,
) -> Result<Vec<StepInputs<S>>> {
    let mut state = ChainState::new(instance.x0.clone());
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut captured = None;
        ess_step_with(
            &instance.poly,
            &mut state,
            cfg,
            rng,
            |projections, angles| {
                captured = Some((projections.to_vec(), angles.clone()));
                Ok(active_intervals_fast(angles))
            },
        )?;
        if let Some(c) = captured {
            out.push(c);
        }
    }
    Ok(out)
}

fn time_construction<S: Real>(inputs: &[StepInputs<S>], method: Method, reps: usize) -> u64 {
    let mut per_rep = Vec::with_capacity(reps);
    // One untimed warm-up pass.
    for (projections, angles) in inputs {
        let _ = method.build(projections, angles);
    }
    for _ in 0..reps {
        let start = Instant::now();
        for (projections, angles) in inputs {
            let _ = std::hint::black_box(method.build(projections, angles));
        }
        per_rep.push(start.elapsed().as_nanos() as f64 / inputs.len() as f64);
    }
    median(per_rep) as u64
}

fn chain_throughput<S: Real>(
    instance: &BenchInstance<S>,
    cfg: &SamplerConfig,
    method: Method,
    steps: usize,
) -> Result<f64> {
    let mut rng = chain_rng(cfg.seed, 0);
    let mut state = ChainState::new(instance.x0.clone());
    let start = Instant::now();
    for _ in 0..steps {
        ess_step_with(
            &instance.poly,
            &mut state,
            cfg,
            &mut rng,
            |projections, angles| method.build(projections, angles),
        )?;
    }
    Ok(steps as f64 / start.elapsed().as_secs_f64())
}

fn parallel_throughput<S: Real>(
    instance: &BenchInstance<S>,
    cfg: &SamplerConfig,
    chains: usize,
    steps_per_chain: usize,
    workers: usize,
) -> Result<f64> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot build worker pool: {e}")))?;
    let start = Instant::now();
    pool.install(|| {
        (0..chains)
            .into_par_iter()
            .map(|i| {
                let mut rng = chain_rng(cfg.seed, i as u64);
                let mut state = ChainState::new(instance.x0.clone());
                for _ in 0..steps_per_chain {
                    crate::sampler::ess_step(&instance.poly, &mut state, cfg, &mut rng)?;
                }
                Ok(())
            })
            .collect::<Result<Vec<()>>>()
    })?;
    Ok((chains * steps_per_chain) as f64 / start.elapsed().as_secs_f64())
}

/// Times the three construction routes and end-to-end sampling on each
/// instance.
///
/// Per instance it emits: one row per route with the median construction time
/// per call and the single-chain sampling throughput using that route inside
/// the step; one `ess_step` row with the median production step time; and one
/// `parallel` row with the multi-chain throughput on the declared worker
/// count.
pub fn time_methods<S: Real>(
    instances: &[BenchInstance<S>],
    reps: usize,
    cfg: &SamplerConfig,
    parallel_chains: usize,
    workers: usize,
) -> Result<Vec<BenchRow>> {
    if reps < 3 {
        return Err(Error::InvalidInput("need at least 3 repetitions".into()));
    }
    const CAPTURE: usize = 16;
    const THROUGHPUT_STEPS: usize = 200;

    let mut rows = Vec::new();
    for instance in instances {
        let (d, m) = instance.dims();
        let mut rng = chain_rng(cfg.seed, 0);
        let inputs = capture_inputs(instance, cfg, CAPTURE, &mut rng)?;
        let row = |method: &str, ns: u64, sps: f64, workers: usize| BenchRow {
            label: instance.label.clone(),
            d,
            m,
            method: method.to_string(),
            reps,
            median_ns_per_call: ns,
            samples_per_sec: sps,
            workers,
            precision: S::NAME.to_string(),
            seed: cfg.seed,
        };

        for method in Method::ALL {
            let ns = time_construction(&inputs, method, reps);
            let sps = chain_throughput(instance, cfg, method, THROUGHPUT_STEPS)?;
            rows.push(row(method.name(), ns, sps, 1));
        }

        // Median per-step wall time of the production path.
        let mut step_times = Vec::with_capacity(reps);
        let mut state = ChainState::new(instance.x0.clone());
        for _ in 0..reps {
            let start = Instant::now();
            for _ in 0..8 {
                crate::sampler::ess_step(&instance.poly, &mut state, cfg, &mut rng)?;
            }
            step_times.push(start.elapsed().as_nanos() as f64 / 8.0);
        }
        rows.push(row("ess_step", median(step_times) as u64, 0.0, 1));

        let steps_per_chain = THROUGHPUT_STEPS.div_ceil(parallel_chains);
        let sps = parallel_throughput(instance, cfg, parallel_chains, steps_per_chain, workers)?;
        rows.push(row("parallel", 0, sps, workers));
    }
    Ok(rows)
}

/// Times the three construction routes on the adversarial angle family.
/// These rows have no ambient space, so `d` is recorded as zero.
pub fn time_worst_case(ms: &[usize], reps: usize, seed: u64) -> Result<Vec<BenchRow>> {
    if reps < 3 {
        return Err(Error::InvalidInput("need at least 3 repetitions".into()));
    }
    let mut rows = Vec::new();
    for &m in ms {
        let angles = gen_worst_case_angles(m)?;
        let projections = angles_to_projections(&angles);
        let inputs = vec![(projections, angles)];
        for method in Method::ALL {
            let ns = time_construction(&inputs, method, reps);
            rows.push(BenchRow {
                label: format!("worstcase_m{m}"),
                d: 0,
                m,
                method: method.name().to_string(),
                reps,
                median_ns_per_call: ns,
                samples_per_sec: 0.0,
                workers: 1,
                precision: "f64".to_string(),
                seed,
            });
        }
    }
    Ok(rows)
}
