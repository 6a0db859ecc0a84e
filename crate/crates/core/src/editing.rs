//! Layer-masked linear edits `w' = w + α·a` over selected latent rows.

use std::collections::BTreeSet;

use crate::directions::AttributeDirection;
use crate::error::{shape_err, Error, Result};
use crate::latent::LatentCode;
use crate::scalar::Scalar;

/// Alphas outside this range are allowed but tend to leave the data manifold.
pub const ADVISORY_ALPHA_RANGE: (f64, f64) = (-5.0, 5.0);

/// Non-empty set of latent rows an edit touches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerMask {
    layers: usize,
    included: BTreeSet<usize>,
}

impl LayerMask {
    pub fn new(layers: usize, included: impl IntoIterator<Item = usize>) -> Result<Self> {
        let included: BTreeSet<usize> = included.into_iter().collect();
        if included.is_empty() {
            return Err(Error::InvalidConfig("layer mask must not be empty".into()));
        }
        if let Some(&bad) = included.iter().find(|&&i| i >= layers) {
            return Err(Error::InvalidConfig(format!(
                "layer {bad} out of range for {layers} layers"
            )));
        }
        Ok(Self { layers, included })
    }

    /// First `ceil(8·L/18)` layers: the first 8 of 18 at full scale.
    pub fn default_for(layers: usize) -> Self {
        let count = (8 * layers).div_ceil(18).max(1);
        Self::new(layers, 0..count.min(layers)).expect("non-empty in-range prefix")
    }

    pub fn all(layers: usize) -> Self {
        Self::new(layers, 0..layers).expect("layers > 0")
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn contains(&self, layer: usize) -> bool {
        self.included.contains(&layer)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.included.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.included.len()
    }

    pub fn is_empty(&self) -> bool {
        self.included.is_empty()
    }

    fn check<T: Scalar>(&self, w: &LatentCode<T>) -> Result<()> {
        if self.layers != w.layers() {
            return Err(shape_err(
                format!("mask over {} layers", self.layers),
                format!("{} layers", w.layers()),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EditSpec<T> {
    pub direction: AttributeDirection<T>,
    pub alpha: T,
    pub mask: LayerMask,
}

impl<T: Scalar> EditSpec<T> {
    pub fn new(direction: AttributeDirection<T>, alpha: T, mask: LayerMask) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::NonFinite("alpha"));
        }
        Ok(Self {
            direction,
            alpha,
            mask,
        })
    }

    pub fn negated(&self) -> Self {
        Self {
            alpha: -self.alpha,
            ..self.clone()
        }
    }
}

pub fn alpha_is_advisory<T: Scalar>(alpha: T) -> bool {
    let a = alpha.to_f64_lossy();
    a >= ADVISORY_ALPHA_RANGE.0 && a <= ADVISORY_ALPHA_RANGE.1
}

/// Rows in the mask become `w[l] + α·a[l]`; all other rows are copied.
pub fn edit_latent<T: Scalar>(w: &LatentCode<T>, spec: &EditSpec<T>) -> Result<LatentCode<T>> {
    let a = spec.direction.vector();
    w.check_same_shape(a)?;
    spec.mask.check(w)?;
    if !spec.alpha.is_finite() {
        return Err(Error::NonFinite("alpha"));
    }
    let mut out = w.clone();
    if spec.alpha == T::zero() {
        return Ok(out);
    }
    for l in spec.mask.iter() {
        for (v, &ai) in out.row_mut(l).iter_mut().zip(a.row(l)) {
            *v += spec.alpha * ai;
        }
    }
    Ok(out)
}

pub fn sweep<T: Scalar>(
    w: &LatentCode<T>,
    direction: &AttributeDirection<T>,
    alphas: &[T],
    mask: &LayerMask,
) -> Result<Vec<LatentCode<T>>> {
    if alphas.is_empty() {
        return Err(Error::EmptyInput("alphas"));
    }
    alphas
        .iter()
        .map(|&alpha| edit_latent(w, &EditSpec::new(direction.clone(), alpha, mask.clone())?))
        .collect()
}

/// Applies `specs` left to right.
pub fn multi_edit<T: Scalar>(w: &LatentCode<T>, specs: &[EditSpec<T>]) -> Result<LatentCode<T>> {
    specs
        .iter()
        .try_fold(w.clone(), |acc, s| edit_latent(&acc, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir(values: Vec<f64>, layers: usize, dims: usize) -> AttributeDirection<f64> {
        AttributeDirection::from_raw(LatentCode::new(layers, dims, values).unwrap(), 0.0, "t")
            .unwrap()
    }

    #[test]
    fn default_masks() {
        assert_eq!(
            LayerMask::default_for(18).iter().collect::<Vec<_>>(),
            (0..8).collect::<Vec<_>>()
        );
        assert_eq!(
            LayerMask::default_for(4).iter().collect::<Vec<_>>(),
            vec![0, 1]
        );
        assert_eq!(
            LayerMask::default_for(1).iter().collect::<Vec<_>>(),
            vec![0]
        );
        assert!(LayerMask::new(4, []).is_err());
        assert!(LayerMask::new(4, [4]).is_err());
    }

    #[test]
    fn zero_alpha_is_bit_identity() {
        let w = LatentCode::new(2, 2, vec![-0.0, 1.5, -2.0, 0.25]).unwrap();
        let d = dir(vec![1.0, -1.0, 0.5, 2.0], 2, 2);
        let spec = EditSpec::new(d, 0.0, LayerMask::all(2)).unwrap();
        let out = edit_latent(&w, &spec).unwrap();
        for (a, b) in out.as_slice().iter().zip(w.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn hand_example() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let w = LatentCode::zeros(2, 2);
        let d = dir(vec![s, 0.0, 0.0, s], 2, 2);
        let spec = EditSpec::new(d, 2.0, LayerMask::new(2, [0]).unwrap()).unwrap();
        let out = edit_latent(&w, &spec).unwrap();
        assert!((out.as_slice()[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(&out.as_slice()[1..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn negation_restores() {
        let w = LatentCode::new(2, 2, vec![0.3, -1.0, 2.0, 0.7]).unwrap();
        let d = dir(vec![0.2, 0.4, -0.1, 0.9], 2, 2);
        let spec = EditSpec::new(d, 3.7, LayerMask::all(2)).unwrap();
        let back = edit_latent(&edit_latent(&w, &spec).unwrap(), &spec.negated()).unwrap();
        for (a, b) in back.as_slice().iter().zip(w.as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn sweep_and_multi_edit() {
        let w = LatentCode::new(2, 2, vec![0.3, -1.0, 2.0, 0.7]).unwrap();
        let d = dir(vec![0.2, 0.4, -0.1, 0.9], 2, 2);
        let mask = LayerMask::all(2);
        assert_eq!(sweep(&w, &d, &[0.0], &mask).unwrap(), vec![w.clone()]);
        assert!(sweep(&w, &d, &[], &mask).is_err());
        let s = sweep(&w, &d, &[1.0, 2.0], &mask).unwrap();
        for (i, alpha) in [1.0, 2.0].into_iter().enumerate() {
            let e =
                edit_latent(&w, &EditSpec::new(d.clone(), alpha, mask.clone()).unwrap()).unwrap();
            assert_eq!(s[i], e);
        }
        assert_eq!(multi_edit(&w, &[]).unwrap(), w);

        let e = dir(vec![-0.5, 0.1, 0.3, 0.3], 2, 2);
        let s1 = EditSpec::new(d.clone(), 1.5, mask.clone()).unwrap();
        let s2 = EditSpec::new(e, -2.5, mask.clone()).unwrap();
        let ab = multi_edit(&w, &[s1.clone(), s2.clone()]).unwrap();
        let ba = multi_edit(&w, &[s2, s1.clone()]).unwrap();
        for (a, b) in ab.as_slice().iter().zip(ba.as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }
        let back = multi_edit(&w, &[s1.clone(), s1.negated()]).unwrap();
        for (a, b) in back.as_slice().iter().zip(w.as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn mask_shape_checked() {
        let w = LatentCode::<f64>::zeros(2, 2);
        let d = dir(vec![1.0, 0.0, 0.0, 0.0], 2, 2);
        let spec = EditSpec::new(d, 1.0, LayerMask::all(3)).unwrap();
        assert!(matches!(
            edit_latent(&w, &spec),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
