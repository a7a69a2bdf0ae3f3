//! Bounded search spaces and points.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// Axis-aligned box `[lower[i], upper[i]]` in every dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidInput(format!(
                "bounds length mismatch: {} lower vs {} upper",
                lower.len(),
                upper.len()
            )));
        }
        if lower.is_empty() {
            return Err(Error::InvalidInput("bounds must have at least one dimension".into()));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "dimension {i}: lower {lo} must be below upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval `[lo, hi]` repeated over `dim` dimensions.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn diagonal(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    /// Clamps `x` into the box in place. Caller guarantees matching length.
    pub(crate) fn clamp_in_place(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

/// A position in the search space.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SearchPoint(pub Vec<f64>);

impl SearchPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for SearchPoint {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for SearchPoint {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for SearchPoint {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Projects `x` onto `b` coordinate-wise. Points already inside are returned unchanged.
pub fn clamp_point(x: &SearchPoint, b: &Bounds) -> Result<SearchPoint> {
    if x.len() != b.dim() {
        return Err(Error::InvalidInput(format!(
            "point has {} coordinates, bounds have {}",
            x.len(),
            b.dim()
        )));
    }
    let mut out = x.clone();
    b.clamp_in_place(&mut out);
    Ok(out)
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn clamp_identity_inside() {
        let b = Bounds::uniform(2, 0.0, 100.0).unwrap();
        let x = SearchPoint::new(vec![50.0, 50.0]);
        assert_eq!(clamp_point(&x, &b).unwrap(), x);
    }

    #[test]
    fn clamp_clips_to_faces() {
        let b = Bounds::uniform(2, 0.0, 100.0).unwrap();
        let x = SearchPoint::new(vec![-5.0, 120.0]);
        assert_eq!(clamp_point(&x, &b).unwrap().0, vec![0.0, 100.0]);

        let b1 = Bounds::uniform(1, 0.0, 100.0).unwrap();
        let x1 = SearchPoint::new(vec![101.5]);
        assert_eq!(clamp_point(&x1, &b1).unwrap().0, vec![100.0]);
    }

    #[test]
    fn clamp_dimension_mismatch() {
        let b = Bounds::uniform(2, 0.0, 1.0).unwrap();
        let x = SearchPoint::new(vec![0.5]);
        assert!(matches!(clamp_point(&x, &b), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn bounds_reject_inverted_interval() {
        assert!(Bounds::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(Bounds::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn clamp_is_idempotent(coords in proptest::collection::vec(-500.0f64..500.0, 1..8)) {
            let b = Bounds::uniform(coords.len(), -100.0, 100.0).unwrap();
            let x = SearchPoint::new(coords);
            let once = clamp_point(&x, &b).unwrap();
            let twice = clamp_point(&once, &b).unwrap();
            prop_assert!(b.contains(&once));
            prop_assert_eq!(once, twice);
        }
    }
}
