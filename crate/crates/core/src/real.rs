use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating-point scalar the sampler can run in.
///
/// The chain update and all interval arithmetic are generic over this trait
/// so that the same code path runs in single or double precision. Only `f32`
/// and `f64` implement it.
pub trait Real: nalgebra::RealField + Copy {
    /// Short name recorded in file output ("f32" or "f64").
    const NAME: &'static str;

    fn from_double(v: f64) -> Self;
    fn to_double(self) -> f64;

    /// One standard-normal draw.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One uniform draw from `[0, 1)`.
    fn uniform_01<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f64 {
    const NAME: &'static str = "f64";

    #[inline]
    fn from_double(v: f64) -> Self {
        v
    }

    #[inline]
    fn to_double(self) -> f64 {
        self
    }

    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    #[inline]
    fn uniform_01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

impl Real for f32 {
    const NAME: &'static str = "f32";

    #[inline]
    fn from_double(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn to_double(self) -> f64 {
        self as f64
    }

    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    #[inline]
    fn uniform_01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}
