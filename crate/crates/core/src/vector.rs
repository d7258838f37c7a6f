//! Fixed-dimension Cartesian vectors.
//!
//! A run is either planar or spatial; the dimension is a run-level constant and
//! planar vectors are not embedded in 3D. Storage is always three slots, the
//! unused one stays at zero for planar vectors.

use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::math;

/// Spatial dimension of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "usize", into = "usize"))]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub const fn count(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }
}

impl TryFrom<usize> for Dim {
    type Error = GeometryError;

    fn try_from(value: usize) -> Result<Self, Self::Error> {
        match value {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            other => Err(GeometryError::UnsupportedDim(other)),
        }
    }
}

impl From<Dim> for usize {
    fn from(d: Dim) -> usize {
        d.count()
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}D", self.count())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(Dim, Dim),
    #[error("unsupported dimension {0}, expected 2 or 3")]
    UnsupportedDim(usize),
    #[error("non-finite component {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
}

/// A 2D or 3D vector of reals (m, m/s or m/s² depending on context).
#[derive(Clone, Copy, PartialEq)]
pub struct VecD {
    dim: Dim,
    c: [f64; 3],
}

impl VecD {
    /// Builds a vector from 2 or 3 finite components.
    pub fn new(components: &[f64]) -> Result<Self, GeometryError> {
        let dim = Dim::try_from(components.len())?;
        let mut c = [0.0; 3];
        for (index, (slot, &value)) in c.iter_mut().zip(components).enumerate() {
            if !value.is_finite() {
                return Err(GeometryError::NonFinite { index, value });
            }
            *slot = value;
        }
        Ok(Self { dim, c })
    }

    pub const fn zero(dim: Dim) -> Self {
        Self { dim, c: [0.0; 3] }
    }

    pub const fn xy(x: f64, y: f64) -> Self {
        Self {
            dim: Dim::Two,
            c: [x, y, 0.0],
        }
    }

    pub const fn xyz(x: f64, y: f64, z: f64) -> Self {
        Self {
            dim: Dim::Three,
            c: [x, y, z],
        }
    }

    #[inline]
    pub fn dim(&self) -> Dim {
        self.dim
    }

    #[inline]
    pub fn components(&self) -> &[f64] {
        &self.c[..self.dim.count()]
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.c[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.c[1]
    }

    /// Third component; zero for planar vectors.
    #[inline]
    pub fn z(&self) -> f64 {
        self.c[2]
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.c[0] * other.c[0] + self.c[1] * other.c[1] + self.c[2] * other.c[2]
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        math::sqrt(self.norm_sq())
    }

    /// Euclidean distance without the dimension check of [`distance`].
    #[inline]
    pub fn dist(&self, other: &Self) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    /// Returns a copy with component `axis` replaced.
    pub fn with(mut self, axis: usize, value: f64) -> Self {
        assert!(axis < self.dim.count(), "axis {axis} out of range for {}", self.dim);
        self.c[axis] = value;
        self
    }
}

impl fmt::Debug for VecD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.components()).finish()
    }
}

impl Add for VecD {
    type Output = VecD;

    #[inline]
    fn add(self, rhs: VecD) -> VecD {
        debug_assert_eq!(self.dim, rhs.dim);
        VecD {
            dim: self.dim,
            c: [self.c[0] + rhs.c[0], self.c[1] + rhs.c[1], self.c[2] + rhs.c[2]],
        }
    }
}

impl Sub for VecD {
    type Output = VecD;

    #[inline]
    fn sub(self, rhs: VecD) -> VecD {
        debug_assert_eq!(self.dim, rhs.dim);
        VecD {
            dim: self.dim,
            c: [self.c[0] - rhs.c[0], self.c[1] - rhs.c[1], self.c[2] - rhs.c[2]],
        }
    }
}

impl Mul<f64> for VecD {
    type Output = VecD;

    #[inline]
    fn mul(self, k: f64) -> VecD {
        VecD {
            dim: self.dim,
            c: [self.c[0] * k, self.c[1] * k, self.c[2] * k],
        }
    }
}

impl Neg for VecD {
    type Output = VecD;

    #[inline]
    fn neg(self) -> VecD {
        VecD {
            dim: self.dim,
            c: [-self.c[0], -self.c[1], -self.c[2]],
        }
    }
}

impl AddAssign for VecD {
    #[inline]
    fn add_assign(&mut self, rhs: VecD) {
        *self = *self + rhs;
    }
}

impl SubAssign for VecD {
    #[inline]
    fn sub_assign(&mut self, rhs: VecD) {
        *self = *self - rhs;
    }
}

/// Euclidean distance `‖a − b‖`.
pub fn distance(a: &VecD, b: &VecD) -> Result<f64, GeometryError> {
    if a.dim != b.dim {
        return Err(GeometryError::DimMismatch(a.dim, b.dim));
    }
    Ok(a.dist(b))
}

#[cfg(feature = "serde")]
mod serde_impl {
    use super::VecD;
    use alloc::vec::Vec;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    impl Serialize for VecD {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            self.components().serialize(s)
        }
    }

    impl<'de> Deserialize<'de> for VecD {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            let raw = Vec::<f64>::deserialize(d)?;
            VecD::new(&raw).map_err(D::Error::custom)
        }
    }
}
