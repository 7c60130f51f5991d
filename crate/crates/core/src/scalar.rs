//! Real scalar abstraction shared by every numerical module.

use nalgebra::{DMatrix, DVector, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

pub use nalgebra::Complex;

/// Complex scalar over the working real type.
pub type Cx<T> = Complex<T>;

/// Floating-point real scalar (`f32` or `f64`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + std::fmt::Debug + Send + Sync + 'static {
    /// Converts an `f64` literal or sample into the working precision.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("finite real")
    }

    /// Unit roundoff scaled for tolerance checks.
    #[inline]
    fn eps() -> Self {
        Self::default_epsilon()
    }

    /// Positive floor for denominators, representable in both precisions.
    #[inline]
    fn tiny() -> Self {
        Self::lit(1e-30)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[inline]
pub fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

#[inline]
pub fn czero<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn cone<T: Real>() -> Cx<T> {
    Complex::new(T::one(), T::zero())
}

#[inline]
pub fn creal<T: Real>(re: T) -> Cx<T> {
    Complex::new(re, T::zero())
}

/// `exp(j·phase)`.
#[inline]
pub fn cis<T: Real>(phase: T) -> Cx<T> {
    Complex::new(phase.cos(), phase.sin())
}

#[inline]
pub fn modulus<T: Real>(z: Cx<T>) -> T {
    z.re.hypot(z.im)
}

#[inline]
pub fn phase<T: Real>(z: Cx<T>) -> T {
    z.im.atan2(z.re)
}

/// Integer power of a complex scalar; negative exponents use the reciprocal.
pub fn cpowi<T: Real>(z: Cx<T>, n: i64) -> Cx<T> {
    let mut base = if n < 0 { cone::<T>() / z } else { z };
    let mut e = n.unsigned_abs();
    let mut acc = cone::<T>();
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// Euclidean norm of a complex vector.
pub fn vnorm<T: Real>(v: &DVector<Cx<T>>) -> T {
    vnorm_sqr(v).sqrt()
}

pub fn vnorm_sqr<T: Real>(v: &DVector<Cx<T>>) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// Squared Frobenius norm.
pub fn fro_sqr<T: Real>(m: &DMatrix<Cx<T>>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// Unconjugated bilinear product `aᵀ b`.
pub fn dotu<T: Real>(a: &DVector<Cx<T>>, b: &DVector<Cx<T>>) -> Cx<T> {
    a.iter().zip(b.iter()).fold(czero(), |acc, (x, y)| acc + *x * *y)
}

/// Relative error `‖a − b‖ / max(‖b‖, tiny)` for complex vectors.
pub fn rel_err<T: Real>(a: &DVector<Cx<T>>, b: &DVector<Cx<T>>) -> T {
    let diff = vnorm(&(a - b));
    let scale = vnorm(b);
    if scale > T::zero() {
        diff / scale
    } else {
        diff
    }
}

/// Conjugate of every entry.
pub fn vconj<T: Real>(v: &DVector<Cx<T>>) -> DVector<Cx<T>> {
    v.map(|z| z.conj())
}
