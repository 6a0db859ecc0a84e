//! Attribute hyperplanes in latent space: logistic fitting, unit-direction
//! extraction, correlation analysis and projection-subtraction disentangling.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::latent::LatentCode;
use crate::rng::{normals, rng_for, sample_latent_with, stream};
use crate::scalar::{sigmoid, Scalar};

/// Tolerance for the unit-norm invariant of in-memory directions.
pub const UNIT_TOLERANCE: f64 = 1e-9;
/// Orthogonality target for iterated projection subtraction.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;
/// Residual norm below which a projected direction is considered vanished.
pub const DEGENERATE_RESIDUAL: f64 = 1e-9;
const MAX_PROJECTION_PASSES: usize = 10_000;

/// A unit normal `a` and bias `b` naming the hyperplane `<a, w> + b = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDirection<T> {
    vector: LatentCode<T>,
    pub bias: T,
    pub name: String,
    pub train_accuracy: Option<T>,
}

impl<T: Scalar> AttributeDirection<T> {
    /// Normalizes `a_raw` to unit length, scaling `b` by the same factor so
    /// the zero-level set is unchanged.
    pub fn from_raw(a_raw: LatentCode<T>, b: T, name: impl Into<String>) -> Result<Self> {
        let norm = a_raw.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        if !b.is_finite() {
            return Err(Error::NonFinite("bias"));
        }
        let (vector, bias) = if norm == T::one() {
            (a_raw, b)
        } else {
            (a_raw.scaled(T::one() / norm), b / norm)
        };
        Ok(Self {
            vector,
            bias,
            name: name.into(),
            train_accuracy: None,
        })
    }

    /// Accepts `vector` as-is when its norm is within `tolerance` of one.
    /// Used for directions read back from reduced-precision storage.
    pub fn from_unit(
        vector: LatentCode<T>,
        bias: T,
        name: impl Into<String>,
        tolerance: f64,
    ) -> Result<Self> {
        let dev = (vector.norm() - T::one()).abs().to_f64_lossy();
        if !(dev <= tolerance) {
            return Err(Error::InvalidConfig(format!(
                "direction norm deviates from 1 by {dev:e}"
            )));
        }
        if !bias.is_finite() {
            return Err(Error::NonFinite("bias"));
        }
        Ok(Self {
            vector,
            bias,
            name: name.into(),
            train_accuracy: None,
        })
    }

    pub fn vector(&self) -> &LatentCode<T> {
        &self.vector
    }

    pub fn shape(&self) -> (usize, usize) {
        self.vector.shape()
    }

    pub fn logit(&self, w: &LatentCode<T>) -> Result<T> {
        Ok(self.vector.dot(w)? + self.bias)
    }
}

/// Binary-labeled latent codes; `true` is the positive class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledLatentDataset<T> {
    records: Vec<(LatentCode<T>, bool)>,
    pub label_names: (String, String),
}

impl<T: Scalar> LabeledLatentDataset<T> {
    pub fn new(records: Vec<(LatentCode<T>, bool)>, label_names: (String, String)) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::TooFewSamples {
                min: 2,
                got: records.len(),
            });
        }
        let shape = records[0].0.shape();
        for (w, _) in &records {
            if w.shape() != shape {
                return Err(crate::error::shape_err(
                    format!("{shape:?}"),
                    format!("{:?}", w.shape()),
                ));
            }
        }
        let positives = records.iter().filter(|(_, y)| *y).count();
        if positives == 0 || positives == records.len() {
            return Err(Error::SingleClassDataset);
        }
        Ok(Self {
            records,
            label_names,
        })
    }

    pub fn records(&self) -> &[(LatentCode<T>, bool)] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn latent_shape(&self) -> (usize, usize) {
        self.records[0].0.shape()
    }

    /// Same codes with labels permuted by a seeded shuffle.
    pub fn with_shuffled_labels(&self, seed: u64) -> Result<Self> {
        let mut labels: Vec<bool> = self.records.iter().map(|(_, y)| *y).collect();
        labels.shuffle(&mut rng_for(seed, 0));
        let records = self
            .records
            .iter()
            .zip(labels)
            .map(|((w, _), y)| (w.clone(), y))
            .collect();
        Self::new(records, self.label_names.clone())
    }
}

/// `count` standard-normal codes labeled by `<d, w> + noise·ε > 0`.
pub fn planted_dataset<T: Scalar>(
    direction: &LatentCode<T>,
    count: usize,
    noise: f64,
    seed: u64,
) -> Result<LabeledLatentDataset<T>> {
    let (l, d) = direction.shape();
    let mut rng = rng_for(seed, 0);
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let w: LatentCode<T> = sample_latent_with(&mut rng, l, d);
        let eps = normals(&mut rng, 1)[0];
        let score = direction.dot(&w)?.to_f64_lossy() + noise * eps;
        records.push((w, score > 0.0));
    }
    LabeledLatentDataset::new(records, ("negative".into(), "positive".into()))
}

/// Standard-normal codes pushed `margin` away from the hyperplane `<d, w> = 0`
/// along the unit `d`, labeled by side.
pub fn separable_dataset<T: Scalar>(
    direction: &LatentCode<T>,
    count: usize,
    margin: f64,
    seed: u64,
) -> Result<LabeledLatentDataset<T>> {
    let norm = direction.norm();
    if !(norm > T::zero()) {
        return Err(Error::ZeroVector);
    }
    let unit = direction.scaled(T::one() / norm);
    let (l, d) = direction.shape();
    let mut rng = rng_for(seed, 0);
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let w: LatentCode<T> = sample_latent_with(&mut rng, l, d);
        let positive = unit.dot(&w)? > T::zero();
        let shift = if positive {
            T::lit(margin)
        } else {
            -T::lit(margin)
        };
        records.push((w.axpy(shift, &unit)?, positive));
    }
    LabeledLatentDataset::new(records, ("negative".into(), "positive".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
    /// Fraction of records used for training; the rest are held out.
    pub train_fraction: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            epochs: 1000,
            l2: 1e-4,
            seed: 0,
            train_fraction: 0.7,
        }
    }
}

impl LogisticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(
                "train_fraction must lie in (0, 1)".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.l2 >= 0.0) {
            return Err(Error::InvalidConfig(
                "learning rate must be positive, l2 non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit<T> {
    pub weights: LatentCode<T>,
    pub bias: T,
    pub train_accuracy: T,
    pub test_accuracy: T,
}

/// Full-batch gradient descent on mean cross-entropy plus `l2/2·‖a‖²` (bias
/// unregularized). Accuracies use the 0.5 probability threshold.
pub fn train_logistic<T: Scalar>(
    ds: &LabeledLatentDataset<T>,
    cfg: &LogisticConfig,
) -> Result<LogisticFit<T>> {
    cfg.validate()?;
    let n = ds.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(cfg.seed, stream::SPLIT));
    let n_train = ((cfg.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let (train, test) = order.split_at(n_train);

    let records = ds.records();
    let positives = train.iter().filter(|&&i| records[i].1).count();
    if positives == 0 || positives == train.len() {
        return Err(Error::SingleClassDataset);
    }

    let (l, d) = ds.latent_shape();
    let k = l * d;
    let mut a = vec![T::zero(); k];
    let mut b = T::zero();
    let lr = T::lit(cfg.learning_rate);
    let l2 = T::lit(cfg.l2);
    let inv_n = T::one() / T::from_usize_lossy(train.len());
    let mut grad = vec![T::zero(); k];
    for _ in 0..cfg.epochs {
        grad.iter_mut().for_each(|g| *g = T::zero());
        let mut grad_b = T::zero();
        for &i in train {
            let (w, y) = &records[i];
            let x = w.as_slice();
            let z = crate::scalar::dot(&a, x) + b;
            let r = sigmoid(z) - if *y { T::one() } else { T::zero() };
            for (g, &xi) in grad.iter_mut().zip(x) {
                *g += r * xi;
            }
            grad_b += r;
        }
        for (ai, g) in a.iter_mut().zip(&grad) {
            *ai -= lr * (*g * inv_n + l2 * *ai);
        }
        b -= lr * grad_b * inv_n;
    }
    let weights = LatentCode::new(l, d, a)?;
    let accuracy = |idx: &[usize]| -> Result<T> {
        let mut hits = 0usize;
        for &i in idx {
            let (w, y) = &records[i];
            let p = sigmoid(weights.dot(w)? + b);
            if (p > T::lit(0.5)) == *y {
                hits += 1;
            }
        }
        Ok(T::from_usize_lossy(hits) / T::from_usize_lossy(idx.len().max(1)))
    };
    Ok(LogisticFit {
        train_accuracy: accuracy(train)?,
        test_accuracy: accuracy(test)?,
        weights,
        bias: b,
    })
}

pub fn extract_direction<T: Scalar>(
    a_raw: LatentCode<T>,
    b: T,
    name: &str,
) -> Result<AttributeDirection<T>> {
    AttributeDirection::from_raw(a_raw, b, name)
}

/// Fit a logistic classifier and return its normalized direction, carrying
/// the training accuracy.
pub fn fit_direction<T: Scalar>(
    ds: &LabeledLatentDataset<T>,
    cfg: &LogisticConfig,
    name: &str,
) -> Result<(AttributeDirection<T>, LogisticFit<T>)> {
    let fit = train_logistic(ds, cfg)?;
    let mut dir = extract_direction(fit.weights.clone(), fit.bias, name)?;
    dir.train_accuracy = Some(fit.train_accuracy);
    Ok((dir, fit))
}

/// `sigmoid(<a, w> + b)`.
pub fn classify<T: Scalar>(dir: &AttributeDirection<T>, w: &LatentCode<T>) -> Result<T> {
    Ok(sigmoid(dir.logit(w)?))
}

pub fn cosine_similarity<T: Scalar>(
    d1: &AttributeDirection<T>,
    d2: &AttributeDirection<T>,
) -> Result<T> {
    let c = d1.vector.dot(&d2.vector)?;
    Ok(c.max(-T::one()).min(T::one()))
}

/// Symmetric matrix of pairwise cosine similarities with an exact unit diagonal.
pub fn correlation_matrix<T: Scalar>(dirs: &[AttributeDirection<T>]) -> Result<Vec<Vec<T>>> {
    if dirs.len() < 2 {
        return Err(Error::TooFewSamples {
            min: 2,
            got: dirs.len(),
        });
    }
    let k = dirs.len();
    let mut m = vec![vec![T::one(); k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let c = cosine_similarity(&dirs[i], &dirs[j])?;
            m[i][j] = c;
            m[j][i] = c;
        }
    }
    Ok(m)
}

/// Subtract from `a` its projection on each of `xs` in order, then
/// renormalize. With `iterate`, passes repeat until `a` is orthogonal to every
/// `x` within [`ORTHOGONALITY_TOLERANCE`] and the residual stops shrinking,
/// which lands it at rounding level; a single pass only guarantees
/// orthogonality to the last `x`. The result is an editing direction with
/// zero bias.
pub fn project_subtract<T: Scalar>(
    a: &AttributeDirection<T>,
    xs: &[AttributeDirection<T>],
    iterate: bool,
) -> Result<AttributeDirection<T>> {
    for x in xs {
        a.vector.check_same_shape(&x.vector)?;
    }
    let tol = T::lit(ORTHOGONALITY_TOLERANCE);
    let mut v = a.vector.clone();
    let mut previous = T::infinity();
    for _ in 0..MAX_PROJECTION_PASSES {
        for x in xs {
            let along = v.dot(&x.vector)?;
            v = v.axpy(-along, &x.vector)?;
        }
        let norm = v.norm();
        if !(norm >= T::lit(DEGENERATE_RESIDUAL)) {
            return Err(Error::DegenerateResult);
        }
        v = v.scaled(T::one() / norm);
        if !iterate {
            break;
        }
        let mut worst = T::zero();
        for x in xs {
            worst = worst.max(v.dot(&x.vector)?.abs());
        }
        if worst <= tol && worst >= previous {
            return Ok(projected(v, a));
        }
        previous = worst;
    }
    if iterate && !(previous <= tol) {
        return Err(Error::InvalidConfig(format!(
            "projection subtraction did not converge in {MAX_PROJECTION_PASSES} passes"
        )));
    }
    Ok(projected(v, a))
}

fn projected<T: Scalar>(v: LatentCode<T>, a: &AttributeDirection<T>) -> AttributeDirection<T> {
    AttributeDirection {
        vector: v,
        bias: T::zero(),
        name: a.name.clone(),
        train_accuracy: None,
    }
}
