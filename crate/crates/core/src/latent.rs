use crate::error::{shape_err, Error, Result};
use crate::scalar::{dot, Scalar};

/// Layered latent matrix, `layers × dims`, stored row-major.
///
/// The same type carries gradients with respect to a latent code, which share
/// its shape.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode<T> {
    layers: usize,
    dims: usize,
    values: Vec<T>,
}

impl<T: Scalar> LatentCode<T> {
    pub fn new(layers: usize, dims: usize, values: Vec<T>) -> Result<Self> {
        if layers == 0 || dims == 0 {
            return Err(Error::InvalidConfig(format!(
                "latent shape must be positive, got {layers}x{dims}"
            )));
        }
        if values.len() != layers * dims {
            return Err(shape_err(layers * dims, values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("latent code"));
        }
        Ok(Self {
            layers,
            dims,
            values,
        })
    }

    pub fn zeros(layers: usize, dims: usize) -> Self {
        assert!(layers > 0 && dims > 0, "latent shape must be positive");
        Self {
            layers,
            dims,
            values: vec![T::zero(); layers * dims],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.layers, self.dims)
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    pub fn row(&self, layer: usize) -> &[T] {
        &self.values[layer * self.dims..(layer + 1) * self.dims]
    }

    pub fn row_mut(&mut self, layer: usize) -> &mut [T] {
        &mut self.values[layer * self.dims..(layer + 1) * self.dims]
    }

    pub fn dot(&self, other: &Self) -> Result<T> {
        self.check_same_shape(other)?;
        Ok(dot(&self.values, &other.values))
    }

    pub fn norm(&self) -> T {
        crate::scalar::norm2(&self.values)
    }

    pub fn scaled(&self, k: T) -> Self {
        self.map(|v| v * k)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            layers: self.layers,
            dims: self.dims,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + k * other`.
    pub fn axpy(&self, k: T, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            layers: self.layers,
            dims: self.dims,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a + k * b)
                .collect(),
        })
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(shape_err(
                format!("{}x{}", self.layers, self.dims),
                format!("{}x{}", other.layers, other.dims),
            ));
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> LatentCode<U> {
        LatentCode {
            layers: self.layers,
            dims: self.dims,
            values: self
                .values
                .iter()
                .map(|v| U::lit(v.to_f64_lossy()))
                .collect(),
        }
    }
}
