use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar used by the numeric modules (`f32` or `f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to a float")
    }

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to a float")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut dot = T::zero();
    let mut na = T::zero();
    let mut nb = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        dot = dot + x * y;
        na = na + x * x;
        nb = nb + y * y;
    }
    if na == T::zero() || nb == T::zero() {
        return T::zero();
    }
    dot / (na.sqrt() * nb.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_basic() {
        assert_eq!(cosine(&[1.0f64, 0.0], &[1.0, 0.0]), 1.0);
        assert_eq!(cosine(&[1.0f32, 0.0], &[0.0, 1.0]), 0.0);
        assert_eq!(cosine(&[0.0f64, 0.0], &[0.0, 1.0]), 0.0);
        assert!((cosine(&[3.0f64, 4.0], &[3.0, 4.0]) - 1.0).abs() < 1e-12);
    }
}
