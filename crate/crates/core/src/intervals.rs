//! Construction of the active intervals: the subset of `[0, 2*pi]` whose
//! ellipse points lie inside the polytope.
//!
//! Three routes compute the same set. The fast path sorts the left endpoints
//! and takes a cumulative max of the right endpoints (`O(m log m)`); the
//! brute-force path intersects the per-constraint interval pairs one at a
//! time (`O(m^2)` worst case) and serves as an oracle; the likelihood-testing
//! baseline classifies intersection angles by evaluating the feasibility
//! indicator at midpoints between consecutive sorted angles.

use nalgebra::DVector;

use crate::angles::{project, EllipseProjection};
use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::real::Real;

/// One closed sub-interval `[lo, hi]` of `[0, 2*pi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment<S> {
    pub lo: S,
    pub hi: S,
}

/// An ordered list of pairwise disjoint closed segments of `[0, 2*pi]`.
///
/// Canonical form: segments sorted ascending, touching segments merged.
/// Zero-width segments (isolated feasible points) are kept; they carry no
/// probability mass but make the set comparable across construction routes.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct AngleIntervalSet<S: Real> {
    segments: Vec<Segment<S>>,
}

impl<S: Real> AngleIntervalSet<S> {
    pub fn empty() -> Self {
        Self {
            segments: Vec::new(),
        }
    }

    pub fn full_circle() -> Self {
        Self {
            segments: vec![Segment {
                lo: S::zero(),
                hi: S::two_pi(),
            }],
        }
    }

    /// Builds a set from `(lo, hi)` pairs, validating the canonical-form
    /// invariants.
    pub fn from_segments(segments: &[(S, S)]) -> Result<Self> {
        let mut out = Self::empty();
        let mut prev_hi = -S::one();
        for &(lo, hi) in segments {
            if !(S::zero() <= lo && lo <= hi && hi <= S::two_pi()) {
                return Err(Error::InvalidInput(format!(
                    "segment [{}, {}] is not an ordered sub-interval of [0, 2*pi]",
                    lo.to_double(),
                    hi.to_double()
                )));
            }
            if lo <= prev_hi {
                return Err(Error::InvalidInput(
                    "segments must be disjoint and sorted".into(),
                ));
            }
            prev_hi = hi;
            out.segments.push(Segment { lo, hi });
        }
        Ok(out)
    }

    pub fn segments(&self) -> &[Segment<S>] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Sum of segment widths; zero for an empty set or a set of isolated
    /// points.
    pub fn total_length(&self) -> S {
        self.segments
            .iter()
            .fold(S::zero(), |acc, s| acc + (s.hi - s.lo))
    }

    pub fn contains(&self, theta: S) -> bool {
        self.segments.iter().any(|s| s.lo <= theta && theta <= s.hi)
    }

    /// Appends a segment known to start at or after the current end, merging
    /// it with the last segment when the endpoints touch.
    fn push_merge(&mut self, lo: S, hi: S) {
        debug_assert!(lo <= hi);
        if let Some(last) = self.segments.last_mut() {
            debug_assert!(lo >= last.hi);
            if last.hi == lo {
                last.hi = hi;
                return;
            }
        }
        self.segments.push(Segment { lo, hi });
    }
}

/// Per-constraint angle pairs `(alpha_i, beta_i)`, each encoding the feasible
/// arc `[0, alpha_i] U [beta_i, 2*pi]`. Padding pairs `(0, 0)` stand for
/// constraints without effect.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintAngles<S: Real> {
    alphas: Vec<S>,
    betas: Vec<S>,
}

impl<S: Real> ConstraintAngles<S> {
    pub fn new(alphas: Vec<S>, betas: Vec<S>) -> Result<Self> {
        if alphas.len() != betas.len() {
            return Err(Error::DimensionMismatch {
                expected: alphas.len(),
                got: betas.len(),
            });
        }
        for (a, b) in alphas.iter().zip(&betas) {
            if !(S::zero() <= *a && a <= b && *b <= S::two_pi()) {
                return Err(Error::InvalidInput(format!(
                    "angle pair ({}, {}) violates 0 <= alpha <= beta <= 2*pi",
                    a.to_double(),
                    b.to_double()
                )));
            }
        }
        Ok(Self { alphas, betas })
    }

    pub fn with_capacity(m: usize) -> Self {
        Self {
            alphas: Vec::with_capacity(m),
            betas: Vec::with_capacity(m),
        }
    }

    /// Appends a pair that already satisfies the invariants (as produced by
    /// the root solver).
    pub fn push(&mut self, alpha: S, beta: S) {
        debug_assert!(S::zero() <= alpha && alpha <= beta && beta <= S::two_pi());
        self.alphas.push(alpha);
        self.betas.push(beta);
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn alphas(&self) -> &[S] {
        &self.alphas
    }

    pub fn betas(&self) -> &[S] {
        &self.betas
    }
}

/// Counter hook for instrumented runs; the production path instantiates the
/// no-op and compiles counter-free.
trait OpCount {
    fn add(&mut self, n: u64);
}

struct NoCount;

impl OpCount for NoCount {
    #[inline(always)]
    fn add(&mut self, _: u64) {}
}

struct Count(u64);

impl OpCount for Count {
    #[inline(always)]
    fn add(&mut self, n: u64) {
        self.0 += n;
    }
}

fn fast_impl<S: Real, C: OpCount>(
    angles: &ConstraintAngles<S>,
    counter: &mut C,
) -> AngleIntervalSet<S> {
    let m = angles.len();
    if m == 0 {
        return AngleIntervalSet::full_circle();
    }
    let alphas = angles.alphas();
    let betas = angles.betas();

    // Stable sort keeps input order among equal left endpoints.
    let mut order: Vec<u32> = (0..m as u32).collect();
    order.sort_by(|&i, &j| {
        counter.add(1);
        alphas[i as usize]
            .partial_cmp(&alphas[j as usize])
            .expect("angles are finite")
    });

    let mut out = AngleIntervalSet::empty();
    out.push_merge(S::zero(), alphas[order[0] as usize]);
    // Running max of the right endpoints in sorted order; a candidate
    // segment survives only when it reaches past the current left endpoint.
    let mut right_max = betas[order[0] as usize];
    for &ik in &order[1..] {
        let alpha_k = alphas[ik as usize];
        counter.add(2); // one candidate-emptiness comparison, one running-max comparison
        if right_max <= alpha_k {
            out.push_merge(right_max, alpha_k);
        }
        let beta_k = betas[ik as usize];
        if beta_k > right_max {
            right_max = beta_k;
        }
    }
    out.push_merge(right_max, S::two_pi());
    out
}

/// Computes the active intervals by sorting the left endpoints and taking the
/// cumulative max of the co-sorted right endpoints. `O(m log m)`; relies only
/// on comparisons, so it introduces no floating-point error and tolerates
/// identical angles.
pub fn active_intervals_fast<S: Real>(angles: &ConstraintAngles<S>) -> AngleIntervalSet<S> {
    fast_impl(angles, &mut NoCount)
}

/// Instrumented fast path; returns the set plus the number of elementary
/// comparisons performed.
pub fn active_intervals_fast_counted<S: Real>(
    angles: &ConstraintAngles<S>,
) -> (AngleIntervalSet<S>, u64) {
    let mut counter = Count(0);
    let set = fast_impl(angles, &mut counter);
    (set, counter.0)
}

/// Instrumentation record of a brute-force run.
#[derive(Clone, Debug, Default)]
pub struct BruteTrace {
    /// Number of segments in the running intersection after each constraint.
    pub per_step_segments: Vec<usize>,
    /// Elementary interval operations: one per segment enumerated per step.
    pub ops: u64,
}

fn brute_impl<S: Real, C: OpCount>(
    angles: &ConstraintAngles<S>,
    counter: &mut C,
    mut trace: Option<&mut Vec<usize>>,
) -> AngleIntervalSet<S> {
    let mut current = AngleIntervalSet::<S>::full_circle();
    let mut next = AngleIntervalSet::empty();
    for (&alpha, &beta) in angles.alphas().iter().zip(angles.betas()) {
        next.segments.clear();
        for seg in &current.segments {
            counter.add(1);
            // seg intersected with [0, alpha] and with [beta, 2*pi].
            if seg.lo <= alpha {
                next.push_merge(seg.lo, seg.hi.min(alpha));
            }
            if seg.hi >= beta {
                next.push_merge(seg.lo.max(beta), seg.hi);
            }
        }
        std::mem::swap(&mut current, &mut next);
        if let Some(t) = trace.as_deref_mut() {
            t.push(current.segments.len());
        }
    }
    current
}

/// Computes the active intervals by sequentially intersecting the running set
/// with each `[0, alpha_i] U [beta_i, 2*pi]`, enumerating all current
/// segments. Used as the independent oracle and the worst-case baseline.
pub fn active_intervals_brute<S: Real>(angles: &ConstraintAngles<S>) -> AngleIntervalSet<S> {
    brute_impl(angles, &mut NoCount, None)
}

/// Instrumented brute force; exposes per-step segment counts and the total
/// number of elementary interval operations.
pub fn active_intervals_brute_traced<S: Real>(
    angles: &ConstraintAngles<S>,
) -> (AngleIntervalSet<S>, BruteTrace) {
    let mut counter = Count(0);
    let mut steps = Vec::with_capacity(angles.len());
    let set = brute_impl(angles, &mut counter, Some(&mut steps));
    (
        set,
        BruteTrace {
            per_step_segments: steps,
            ops: counter.0,
        },
    )
}

/// Likelihood-testing baseline on precomputed projections (the midpoint
/// variant). Costs `O(m^2)` using the cached `p`, `q` values: each of the
/// `2m + 1` midpoints evaluates the feasibility indicator over all `m` rows.
///
/// Fails with [`Error::DuplicateAngles`] when two intersection angles
/// coincide exactly, which the midpoint classification cannot resolve.
pub fn active_intervals_likelihood_cached<S: Real>(
    projections: &[EllipseProjection<S>],
    angles: &ConstraintAngles<S>,
) -> Result<AngleIntervalSet<S>> {
    if projections.len() != angles.len() {
        return Err(Error::DimensionMismatch {
            expected: angles.len(),
            got: projections.len(),
        });
    }
    let mut ts: Vec<S> = Vec::with_capacity(2 * angles.len() + 2);
    ts.extend_from_slice(angles.alphas());
    ts.extend_from_slice(angles.betas());
    ts.sort_by(|a, b| a.partial_cmp(b).expect("angles are finite"));
    for pair in ts.windows(2) {
        if pair[0] == pair[1] {
            return Err(Error::DuplicateAngles);
        }
    }

    let feasible = |theta: S| {
        let (sin, cos) = (theta.sin(), theta.cos());
        projections
            .iter()
            .all(|pr| pr.p * cos + pr.q * sin <= pr.offset)
    };

    let mut bounds = Vec::with_capacity(ts.len() + 2);
    bounds.push(S::zero());
    bounds.extend(
        ts.iter()
            .copied()
            .filter(|t| *t > S::zero() && *t < S::two_pi()),
    );
    bounds.push(S::two_pi());

    let half = S::from_double(0.5);
    let mut out = AngleIntervalSet::empty();
    for pair in bounds.windows(2) {
        let mid = half * (pair[0] + pair[1]);
        if feasible(mid) {
            out.push_merge(pair[0], pair[1]);
        }
    }
    Ok(out)
}

/// Likelihood-testing baseline from a polytope and the current ellipse.
pub fn active_intervals_likelihood<S: Real>(
    poly: &Polytope<S>,
    x: &DVector<S>,
    nu: &DVector<S>,
    angles: &ConstraintAngles<S>,
) -> Result<AngleIntervalSet<S>> {
    let projections = project(poly, x, nu)?;
    active_intervals_likelihood_cached(&projections, angles)
}

/// Shrinks every segment by `eps` on each trimmable endpoint and drops
/// segments that vanish. The angles 0 and 2*pi represent the current (already
/// feasible) point, so a segment endpoint lying exactly there is kept.
pub fn trim<S: Real>(set: &AngleIntervalSet<S>, eps: S) -> AngleIntervalSet<S> {
    debug_assert!(eps >= S::zero());
    if eps == S::zero() {
        return set.clone();
    }
    let mut out = AngleIntervalSet::empty();
    for seg in set.segments() {
        let lo = if seg.lo == S::zero() {
            seg.lo
        } else {
            seg.lo + eps
        };
        let hi = if seg.hi == S::two_pi() {
            seg.hi
        } else {
            seg.hi - eps
        };
        if hi > lo {
            out.push_merge(lo, hi);
        }
    }
    out
}

/// Maps a uniform variate `u in [0, 1)` through the piecewise-linear inverse
/// CDF of the uniform distribution over the union. The caller owns the RNG.
pub fn sample_theta<S: Real>(set: &AngleIntervalSet<S>, u: S) -> Result<S> {
    debug_assert!(S::zero() <= u && u < S::one());
    let total = set.total_length();
    if total <= S::zero() {
        return Err(Error::EmptyIntervalSet);
    }
    let target = u * total;
    let mut acc = S::zero();
    for seg in set.segments() {
        let len = seg.hi - seg.lo;
        if target < acc + len {
            return Ok(seg.lo + (target - acc));
        }
        acc += len;
    }
    // Rounding pushed the target past the last segment; return its endpoint.
    Ok(set.segments().last().expect("total length is positive").hi)
}
