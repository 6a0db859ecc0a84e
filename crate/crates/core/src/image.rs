use crate::error::{shape_err, Error, Result};
use crate::scalar::Scalar;

/// `height × width × channels` image with values in `[0, 1]`, stored
/// row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuf<T> {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Scalar> ImageBuf<T> {
    /// Values are clamped into `[0, 1]`; non-finite values are rejected.
    pub fn new(height: usize, width: usize, channels: usize, mut data: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::EmptyInput("image"));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidConfig(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(shape_err(height * width * channels, data.len()));
        }
        for v in data.iter_mut() {
            if !v.is_finite() {
                return Err(Error::NonFinite("image"));
            }
            *v = v.max(T::zero()).min(T::one());
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: T) -> Result<Self> {
        Self::new(
            height,
            width,
            channels,
            vec![value; height * width * channels],
        )
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        f: impl Fn(usize, usize, usize) -> T,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> T {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(shape_err(
                format!("{:?}", self.dims()),
                format!("{:?}", other.dims()),
            ));
        }
        Ok(())
    }

    /// Side length of a square image.
    pub fn square_size(&self) -> Result<usize> {
        if self.height != self.width {
            return Err(shape_err(
                "square image",
                format!("{}x{}", self.height, self.width),
            ));
        }
        Ok(self.height)
    }

    pub fn cast<U: Scalar>(&self) -> ImageBuf<U> {
        ImageBuf {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }
}

/// Block-average a square `n × n × c` buffer down to `size × size × c`.
/// `size` must divide `n`.
pub fn area_downsample<T: Scalar>(data: &[T], n: usize, c: usize, size: usize) -> Result<Vec<T>> {
    if size == 0 || size > n || !n.is_multiple_of(size) {
        return Err(Error::BadResample { from: n, to: size });
    }
    if data.len() != n * n * c {
        return Err(shape_err(n * n * c, data.len()));
    }
    if size == n {
        return Ok(data.to_vec());
    }
    let k = n / size;
    let inv = T::one() / T::from_usize_lossy(k * k);
    let mut out = vec![T::zero(); size * size * c];
    for y in 0..n {
        let oy = y / k;
        for x in 0..n {
            let ox = x / k;
            let src = (y * n + x) * c;
            let dst = (oy * size + ox) * c;
            for ch in 0..c {
                out[dst + ch] += data[src + ch];
            }
        }
    }
    for v in out.iter_mut() {
        *v *= inv;
    }
    Ok(out)
}

/// Adjoint of [`area_downsample`]: spreads each coarse gradient uniformly over
/// its source block.
pub fn area_downsample_adjoint<T: Scalar>(
    grad: &[T],
    n: usize,
    c: usize,
    size: usize,
) -> Result<Vec<T>> {
    if size == 0 || size > n || !n.is_multiple_of(size) {
        return Err(Error::BadResample { from: n, to: size });
    }
    if grad.len() != size * size * c {
        return Err(shape_err(size * size * c, grad.len()));
    }
    if size == n {
        return Ok(grad.to_vec());
    }
    let k = n / size;
    let inv = T::one() / T::from_usize_lossy(k * k);
    let mut out = vec![T::zero(); n * n * c];
    for y in 0..n {
        let oy = y / k;
        for x in 0..n {
            let ox = x / k;
            let dst = (y * n + x) * c;
            let src = (oy * size + ox) * c;
            for ch in 0..c {
                out[dst + ch] = grad[src + ch] * inv;
            }
        }
    }
    Ok(out)
}
