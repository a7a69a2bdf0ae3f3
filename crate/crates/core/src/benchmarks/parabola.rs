//! Moving parabola: a shifted sphere whose offset drifts linearly,
//! circularly or by Gaussian steps.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::{Landscape, Objective};
use crate::error::{Error, Result};
use crate::random::RandomSource;
use crate::space::Bounds;

/// Per-dimension offset of the parabola's minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetVector(pub Vec<f64>);

impl OffsetVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MovementKind {
    Linear,
    Circular,
    Gaussian,
}

impl MovementKind {
    pub fn name(self) -> &'static str {
        match self {
            MovementKind::Linear => "linear",
            MovementKind::Circular => "circular",
            MovementKind::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for MovementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MovementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(MovementKind::Linear),
            "circular" => Ok(MovementKind::Circular),
            "gaussian" => Ok(MovementKind::Gaussian),
            other => Err(Error::InvalidInput(format!("unknown movement `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParabolaDynamics {
    pub kind: MovementKind,
    /// Severity τ.
    pub tau: f64,
    /// Number of changes applied so far.
    pub change_count: u64,
}

impl ParabolaDynamics {
    pub fn new(kind: MovementKind, tau: f64) -> Result<Self> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::InvalidInput(format!("severity must be non-negative, got {tau}")));
        }
        Ok(Self {
            kind,
            tau,
            change_count: 0,
        })
    }
}

/// `Σ (x_i − delta_i)²`.
pub fn parabola_eval(x: &[f64], off: &OffsetVector) -> Result<f64> {
    if x.len() != off.len() {
        return Err(Error::InvalidInput(format!(
            "point has {} coordinates, offset has {}",
            x.len(),
            off.len()
        )));
    }
    Ok(x.iter().zip(&off.0).map(|(a, d)| (a - d) * (a - d)).sum())
}

/// Moves the offset by one change and increments `dynamics.change_count`.
///
/// The circular phase uses the number of changes applied before this one,
/// so the first circular step moves odd (0-based) dimensions by τ and even
/// dimensions by zero.
pub fn parabola_advance(
    dynamics: &mut ParabolaDynamics,
    off: &OffsetVector,
    src: &mut RandomSource,
) -> OffsetVector {
    let tau = dynamics.tau;
    let mut next = off.0.clone();
    match dynamics.kind {
        MovementKind::Linear => next.iter_mut().for_each(|d| *d += tau),
        MovementKind::Circular => {
            let phase = 2.0 * PI * dynamics.change_count as f64 / 25.0;
            let (s, c) = phase.sin_cos();
            for (k, d) in next.iter_mut().enumerate() {
                *d += if k % 2 == 0 { tau * s } else { tau * c };
            }
        }
        MovementKind::Gaussian => {
            for d in next.iter_mut() {
                *d += tau * src.standard_normal();
            }
        }
    }
    dynamics.change_count += 1;
    OffsetVector(next)
}

/// Moving parabola over `[-50, 50]^D`; the offset is kept inside the box.
#[derive(Debug, Clone)]
pub struct ParabolaLandscape {
    bounds: Bounds,
    dynamics: ParabolaDynamics,
    offset: OffsetVector,
    clamp_events: u64,
}

impl ParabolaLandscape {
    pub const RANGE: (f64, f64) = (-50.0, 50.0);

    pub fn new(dim: usize, kind: MovementKind, tau: f64) -> Result<Self> {
        Ok(Self {
            bounds: Bounds::uniform(dim, Self::RANGE.0, Self::RANGE.1)?,
            dynamics: ParabolaDynamics::new(kind, tau)?,
            offset: OffsetVector::zeros(dim),
            clamp_events: 0,
        })
    }

    pub fn offset(&self) -> &OffsetVector {
        &self.offset
    }

    pub fn dynamics(&self) -> &ParabolaDynamics {
        &self.dynamics
    }

    /// Number of changes in which at least one offset coordinate hit the boundary.
    pub fn clamp_events(&self) -> u64 {
        self.clamp_events
    }
}

impl Landscape for ParabolaLandscape {
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
        parabola_eval(x, &self.offset)
    }

    fn optimum(&self) -> Option<f64> {
        Some(0.0)
    }

    fn advanced(&self, src: &mut RandomSource) -> Self {
        let mut dynamics = self.dynamics.clone();
        let mut offset = parabola_advance(&mut dynamics, &self.offset, src);
        let before = offset.0.clone();
        self.bounds.clamp_in_place(&mut offset.0);
        let clamped = before != offset.0;
        Self {
            bounds: self.bounds.clone(),
            dynamics,
            offset,
            clamp_events: self.clamp_events + clamped as u64,
        }
    }
}
