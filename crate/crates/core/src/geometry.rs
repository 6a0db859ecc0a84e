//! Face pre-processing: primary-face selection, eye-line de-rotation and
//! canonical alignment to a square output.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::image::ImageBuf;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Self) -> T {
        (other.x - self.x).hypot(other.y - self.y)
    }

    pub fn midpoint(&self, other: &Self) -> Self {
        let half = T::lit(0.5);
        Self::new((self.x + other.x) * half, (self.y + other.y) * half)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox<T> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
}

impl<T: Scalar> BoundingBox<T> {
    pub fn new(x0: T, y0: T, x1: T, y1: T) -> Result<Self> {
        let b = Self { x0, y0, x1, y1 };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x0, self.y0, self.x1, self.y1]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x0 >= self.x1 || self.y0 >= self.y1 {
            return Err(Error::InvalidBox(format!(
                "({}, {}, {}, {})",
                self.x0, self.y0, self.x1, self.y1
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> T {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, p: &Point<T>) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }
}

/// Landmark points plus the index ranges forming the two eye groups.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet<T> {
    pub points: Vec<Point<T>>,
    pub left_eye: Range<usize>,
    pub right_eye: Range<usize>,
}

impl<T: Scalar> LandmarkSet<T> {
    /// Eye groups of the common 68-point layout (points 36..42 and 42..48).
    pub const EYES_68: (Range<usize>, Range<usize>) = (36..42, 42..48);

    pub fn new(
        points: Vec<Point<T>>,
        left_eye: Range<usize>,
        right_eye: Range<usize>,
    ) -> Result<Self> {
        let lm = Self {
            points,
            left_eye,
            right_eye,
        };
        lm.validate()?;
        Ok(lm)
    }

    pub fn with_68_layout(points: Vec<Point<T>>) -> Result<Self> {
        let (l, r) = Self::EYES_68;
        Self::new(points, l, r)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.points.len();
        for (name, r) in [("left", &self.left_eye), ("right", &self.right_eye)] {
            if r.is_empty() || r.end > n {
                return Err(Error::BadIndexRange(format!(
                    "{name} eye {r:?} invalid for {n} points"
                )));
            }
        }
        if self.left_eye.start < self.right_eye.end && self.right_eye.start < self.left_eye.end {
            return Err(Error::BadIndexRange(format!(
                "eye groups {:?} and {:?} overlap",
                self.left_eye, self.right_eye
            )));
        }
        if self
            .points
            .iter()
            .any(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(Error::NonFinite("landmarks"));
        }
        Ok(())
    }

    pub fn map(&self, t: &AffineTransform<T>) -> Self {
        Self {
            points: self.points.iter().map(|p| t.apply(*p)).collect(),
            left_eye: self.left_eye.clone(),
            right_eye: self.right_eye.clone(),
        }
    }
}

/// 2×3 row-major affine matrix mapping source to destination coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform<T> {
    pub m: [[T; 3]; 2],
}

impl<T: Scalar> AffineTransform<T> {
    pub fn new(m: [[T; 3]; 2]) -> Result<Self> {
        let t = Self { m };
        if t.determinant() == T::zero() || !t.determinant().is_finite() {
            return Err(Error::SingularTransform);
        }
        Ok(t)
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, z], [z, o, z]],
        }
    }

    pub fn determinant(&self) -> T {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    #[inline]
    pub fn apply(&self, p: Point<T>) -> Point<T> {
        let m = &self.m;
        Point::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2],
            m[1][0] * p.x + m[1][1] * p.y + m[1][2],
        )
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.determinant();
        if det == T::zero() || !det.is_finite() {
            return Err(Error::SingularTransform);
        }
        let [[a, b, tx], [c, d, ty]] = self.m;
        // Exact for the identity and for signed permutations.
        let (ia, ib, ic, id) = if det == T::one() {
            (d, -b, -c, a)
        } else {
            (d / det, -b / det, -c / det, a / det)
        };
        Ok(Self {
            m: [
                [ia, ib, -(ia * tx + ib * ty)],
                [ic, id, -(ic * tx + id * ty)],
            ],
        })
    }

    /// `self ∘ first`: applies `first`, then `self`.
    pub fn compose(&self, first: &Self) -> Self {
        let a = &self.m;
        let b = &first.m;
        let mut m = [[T::zero(); 3]; 2];
        for r in 0..2 {
            for c in 0..3 {
                m[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
            m[r][2] += a[r][2];
        }
        Self { m }
    }

    pub fn translated(&self, dx: T, dy: T) -> Self {
        let mut m = self.m;
        m[0][2] += dx;
        m[1][2] += dy;
        Self { m }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PadMode<T> {
    /// Mirror without repeating the edge pixel (`dcb|abcd|cba`).
    #[default]
    Reflect,
    Replicate,
    Constant(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interp {
    #[default]
    Bilinear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignConfig<T> {
    pub out_size: usize,
    pub pad_mode: PadMode<T>,
    pub interp: Interp,
    /// Eye-to-eye distance as a fraction of `out_size`.
    pub eye_distance: T,
    /// Eye midpoint as fractions of `out_size` (x, y).
    pub anchor: (T, T),
}

impl<T: Scalar> Default for AlignConfig<T> {
    fn default() -> Self {
        Self {
            out_size: 1024,
            pad_mode: PadMode::Reflect,
            interp: Interp::Bilinear,
            eye_distance: T::lit(0.28),
            anchor: (T::lit(0.5), T::lit(0.42)),
        }
    }
}

impl<T: Scalar> AlignConfig<T> {
    pub fn with_size(out_size: usize) -> Self {
        Self {
            out_size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.out_size < 8 || !self.out_size.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "out_size must be a power of two >= 8, got {}",
                self.out_size
            )));
        }
        if !(self.eye_distance > T::zero()) || !self.eye_distance.is_finite() {
            return Err(Error::InvalidConfig("eye_distance must be positive".into()));
        }
        if !self.anchor.0.is_finite() || !self.anchor.1.is_finite() {
            return Err(Error::InvalidConfig("anchor must be finite".into()));
        }
        if let PadMode::Constant(v) = self.pad_mode {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(Error::InvalidConfig(
                    "constant pad must lie in [0, 1]".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Largest box by area; ties go to the smallest `x0`, then the smallest `y0`.
pub fn select_primary_face<T: Scalar>(boxes: &[BoundingBox<T>]) -> Result<BoundingBox<T>> {
    let mut best: Option<&BoundingBox<T>> = None;
    for b in boxes {
        b.validate()?;
        best = match best {
            None => Some(b),
            Some(cur) => {
                let better = b.area() > cur.area()
                    || (b.area() == cur.area()
                        && (b.x0 < cur.x0 || (b.x0 == cur.x0 && b.y0 < cur.y0)));
                Some(if better { b } else { cur })
            }
        };
    }
    best.copied().ok_or(Error::EmptyInput("no faces detected"))
}

/// Centroids of the two eye groups, ordered so the left one has the smaller x.
pub fn eye_centers<T: Scalar>(lm: &LandmarkSet<T>) -> Result<(Point<T>, Point<T>)> {
    lm.validate()?;
    let centroid = |r: &Range<usize>| {
        let pts = &lm.points[r.clone()];
        let k = T::from_usize_lossy(pts.len());
        let sx: T = pts.iter().map(|p| p.x).sum();
        let sy: T = pts.iter().map(|p| p.y).sum();
        Point::new(sx / k, sy / k)
    };
    let a = centroid(&lm.left_eye);
    let b = centroid(&lm.right_eye);
    Ok(if b.x < a.x { (b, a) } else { (a, b) })
}

/// Eye-line angle in degrees, in `(-180, 180]`.
pub fn rotation_angle<T: Scalar>(left: Point<T>, right: Point<T>) -> Result<T> {
    if left == right {
        return Err(Error::DegenerateEyes);
    }
    let deg = (right.y - left.y).atan2(right.x - left.x).to_degrees();
    Ok(if deg <= T::lit(-180.0) {
        T::lit(180.0)
    } else {
        deg
    })
}

/// Sine and cosine of an angle in degrees, exact at multiples of 90°.
fn sin_cos_deg<T: Scalar>(angle: T) -> (T, T) {
    let reduced = angle % T::lit(360.0);
    let quarter = reduced / T::lit(90.0);
    if quarter == quarter.round() {
        let q = quarter.round().to_i64().unwrap_or(0).rem_euclid(4);
        let (o, z) = (T::one(), T::zero());
        return match q {
            0 => (z, o),
            1 => (o, z),
            2 => (z, -o),
            _ => (-o, z),
        };
    }
    reduced.to_radians().sin_cos()
}

/// Rotation by `-angle` about `center` (in y-down image coordinates this
/// undoes an eye line tilted by `angle`), combined with uniform `scale`.
pub fn derotation_transform<T: Scalar>(
    center: Point<T>,
    angle: T,
    scale: T,
) -> Result<AffineTransform<T>> {
    if !(scale > T::zero()) || !scale.is_finite() || !angle.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "derotation needs finite angle and positive scale, got {angle}, {scale}"
        )));
    }
    let (s, c) = sin_cos_deg(angle);
    let (a, b) = (scale * c, scale * s);
    let one = T::one();
    AffineTransform::new([
        [a, b, (one - a) * center.x - b * center.y],
        [-b, a, b * center.x + (one - a) * center.y],
    ])
}

#[inline]
fn reflect_index(i: i64, n: i64) -> i64 {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let m = i.rem_euclid(period);
    if m < n {
        m
    } else {
        period - m
    }
}

#[inline]
fn fetch<T: Scalar>(img: &ImageBuf<T>, x: i64, y: i64, c: usize, pad: PadMode<T>) -> T {
    let (w, h) = (img.width() as i64, img.height() as i64);
    if (0..w).contains(&x) && (0..h).contains(&y) {
        return img.get(y as usize, x as usize, c);
    }
    match pad {
        PadMode::Constant(v) => v,
        PadMode::Replicate => img.get(y.clamp(0, h - 1) as usize, x.clamp(0, w - 1) as usize, c),
        PadMode::Reflect => img.get(
            reflect_index(y, h) as usize,
            reflect_index(x, w) as usize,
            c,
        ),
    }
}

/// Bilinear sample at continuous coordinates (pixel centers at integers).
pub fn sample_bilinear<T: Scalar>(img: &ImageBuf<T>, x: T, y: T, c: usize, pad: PadMode<T>) -> T {
    let fx0 = x.floor();
    let fy0 = y.floor();
    let fx = x - fx0;
    let fy = y - fy0;
    let x0 = fx0.to_i64().unwrap_or(i64::MIN / 4);
    let y0 = fy0.to_i64().unwrap_or(i64::MIN / 4);
    let one = T::one();
    let v00 = fetch(img, x0, y0, c, pad);
    let v10 = fetch(img, x0 + 1, y0, c, pad);
    let v01 = fetch(img, x0, y0 + 1, c, pad);
    let v11 = fetch(img, x0 + 1, y0 + 1, c, pad);
    v00 * (one - fx) * (one - fy) + v10 * fx * (one - fy) + v01 * (one - fx) * fy + v11 * fx * fy
}

/// Warp `img` by `t` into an `out_h × out_w` image: every output pixel is
/// sampled at the inverse-mapped source coordinate.
pub fn apply_affine<T: Scalar>(
    img: &ImageBuf<T>,
    t: &AffineTransform<T>,
    out_w: usize,
    out_h: usize,
    cfg: &AlignConfig<T>,
) -> Result<ImageBuf<T>> {
    if img.is_empty() {
        return Err(Error::EmptyInput("image"));
    }
    let inv = t.inverse()?;
    let ch = img.channels();
    let mut data = Vec::with_capacity(out_w * out_h * ch);
    for oy in 0..out_h {
        for ox in 0..out_w {
            let src = inv.apply(Point::new(T::from_usize_lossy(ox), T::from_usize_lossy(oy)));
            for c in 0..ch {
                data.push(match cfg.interp {
                    Interp::Bilinear => sample_bilinear(img, src.x, src.y, c, cfg.pad_mode),
                });
            }
        }
    }
    ImageBuf::new(out_h, out_w, ch, data)
}

/// Transform taking the eye line to horizontal, the eye distance to
/// `eye_distance * out_size` and the eye midpoint to `anchor * out_size`.
pub fn alignment_transform<T: Scalar>(
    lm: &LandmarkSet<T>,
    cfg: &AlignConfig<T>,
) -> Result<AffineTransform<T>> {
    cfg.validate()?;
    let (left, right) = eye_centers(lm)?;
    let angle = rotation_angle(left, right)?;
    let dist = left.distance(&right);
    let n = T::from_usize_lossy(cfg.out_size);
    let scale = cfg.eye_distance * n / dist;
    let mid = left.midpoint(&right);
    let t = derotation_transform(mid, angle, scale)?;
    let mapped = t.apply(mid);
    Ok(t.translated(cfg.anchor.0 * n - mapped.x, cfg.anchor.1 * n - mapped.y))
}

/// Canonical `out_size × out_size` crop of the face described by `bbox`/`lm`.
pub fn align_face<T: Scalar>(
    img: &ImageBuf<T>,
    bbox: &BoundingBox<T>,
    lm: &LandmarkSet<T>,
    cfg: &AlignConfig<T>,
) -> Result<ImageBuf<T>> {
    bbox.validate()?;
    let (left, right) = eye_centers(lm)?;
    if !bbox.contains(&left.midpoint(&right)) {
        return Err(Error::LandmarksOutsideBox);
    }
    let t = alignment_transform(lm, cfg)?;
    apply_affine(img, &t, cfg.out_size, cfg.out_size, cfg)
}
