use std::fmt;
use std::str::FromStr;

use super::{Landscape, Objective};
use crate::error::{Error, Result};
use crate::random::RandomSource;
use crate::space::Bounds;

/// The four static test functions, canonical definitions, minimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StaticFunctionId {
    Sphere,
    Rastrigin,
    Griewank,
    Rosenbrock,
}

impl StaticFunctionId {
    pub const ALL: [StaticFunctionId; 4] = [
        StaticFunctionId::Sphere,
        StaticFunctionId::Rastrigin,
        StaticFunctionId::Griewank,
        StaticFunctionId::Rosenbrock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StaticFunctionId::Sphere => "sphere",
            StaticFunctionId::Rastrigin => "rastrigin",
            StaticFunctionId::Griewank => "griewank",
            StaticFunctionId::Rosenbrock => "rosenbrock",
        }
    }

    /// Canonical per-dimension interval.
    pub fn range(self) -> (f64, f64) {
        match self {
            StaticFunctionId::Sphere => (-100.0, 100.0),
            StaticFunctionId::Rastrigin => (-5.12, 5.12),
            StaticFunctionId::Griewank => (-600.0, 600.0),
            StaticFunctionId::Rosenbrock => (-5.0, 10.0),
        }
    }

    pub fn bounds(self, dim: usize) -> Result<Bounds> {
        let (lo, hi) = self.range();
        Bounds::uniform(dim, lo, hi)
    }

    /// Function value without domain checks.
    pub fn value_unchecked(self, x: &[f64]) -> f64 {
        match self {
            StaticFunctionId::Sphere => x.iter().map(|v| v * v).sum(),
            StaticFunctionId::Rastrigin => x
                .iter()
                .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos() + 10.0)
                .sum(),
            StaticFunctionId::Griewank => {
                let sum: f64 = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
                let prod: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                sum - prod + 1.0
            }
            StaticFunctionId::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2))
                .sum(),
        }
    }
}

impl fmt::Display for StaticFunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StaticFunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StaticFunctionId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidInput(format!("unknown static function `{s}`")))
    }
}

/// Evaluates `id` at `x`, rejecting points outside the canonical range.
pub fn eval_static(id: StaticFunctionId, x: &[f64]) -> Result<f64> {
    let (lo, hi) = id.range();
    if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(lo..=hi).contains(*v)) {
        return Err(Error::DomainViolation {
            function: id.name(),
            index,
            value,
        });
    }
    Ok(id.value_unchecked(x))
}

/// What to do with an out-of-range evaluation request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DomainPolicy {
    #[default]
    Reject,
    Clamp,
}

#[derive(Debug, Clone)]
pub struct StaticLandscape {
    id: StaticFunctionId,
    bounds: Bounds,
    policy: DomainPolicy,
}

impl StaticLandscape {
    pub fn new(id: StaticFunctionId, dim: usize, policy: DomainPolicy) -> Result<Self> {
        Ok(Self {
            id,
            bounds: id.bounds(dim)?,
            policy,
        })
    }

    pub fn id(&self) -> StaticFunctionId {
        self.id
    }
}

impl Landscape for StaticLandscape {
    fn dimension(&self) -> usize {
        self.bounds.dim()
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn objective(&self) -> Objective {
        Objective::Minimize
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension() {
            return Err(Error::InvalidInput(format!(
                "expected {} coordinates, got {}",
                self.dimension(),
                x.len()
            )));
        }
        match self.policy {
            DomainPolicy::Reject => eval_static(self.id, x),
            DomainPolicy::Clamp => {
                let mut y = x.to_vec();
                self.bounds.clamp_in_place(&mut y);
                Ok(self.id.value_unchecked(&y))
            }
        }
    }

    fn optimum(&self) -> Option<f64> {
        None
    }

    fn advanced(&self, _src: &mut RandomSource) -> Self {
        self.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::parabola_eval;
    use crate::benchmarks::OffsetVector;
    use proptest::prelude::*;

    #[test]
    fn global_minima_are_zero() {
        for d in [1, 2, 5, 20] {
            let zeros = vec![0.0; d];
            assert_eq!(eval_static(StaticFunctionId::Sphere, &zeros).unwrap(), 0.0);
            assert_eq!(eval_static(StaticFunctionId::Rastrigin, &zeros).unwrap(), 0.0);
            assert_eq!(eval_static(StaticFunctionId::Griewank, &zeros).unwrap(), 0.0);
            assert_eq!(eval_static(StaticFunctionId::Rosenbrock, &vec![1.0; d]).unwrap(), 0.0);
        }
    }

    #[test]
    fn sphere_three_four() {
        assert_eq!(eval_static(StaticFunctionId::Sphere, &[3.0, 4.0]).unwrap(), 25.0);
    }

    #[test]
    fn known_values() {
        // Rastrigin at 0.5 per coordinate: 0.25 - 10cos(pi) + 10 = 20.25
        let r = eval_static(StaticFunctionId::Rastrigin, &[0.5, 0.5]).unwrap();
        assert!((r - 40.5).abs() < 1e-12);
        // Rosenbrock (0,0): 100*0 + 1
        assert_eq!(eval_static(StaticFunctionId::Rosenbrock, &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn out_of_domain_rejected_or_clamped() {
        let err = eval_static(StaticFunctionId::Rastrigin, &[0.0, 6.0]).unwrap_err();
        assert!(matches!(err, Error::DomainViolation { index: 1, .. }));

        let land = StaticLandscape::new(StaticFunctionId::Sphere, 2, DomainPolicy::Clamp).unwrap();
        assert_eq!(land.value(&[200.0, 0.0]).unwrap(), 10_000.0);
    }

    #[test]
    fn parse_names() {
        assert_eq!("Griewank".parse::<StaticFunctionId>().unwrap(), StaticFunctionId::Griewank);
        assert!("ackley".parse::<StaticFunctionId>().is_err());
    }

    proptest! {
        #[test]
        fn sphere_matches_unshifted_parabola(x in proptest::collection::vec(-50.0f64..50.0, 1..10)) {
            let off = OffsetVector::zeros(x.len());
            let a = eval_static(StaticFunctionId::Sphere, &x).unwrap();
            let b = parabola_eval(&x, &off).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
