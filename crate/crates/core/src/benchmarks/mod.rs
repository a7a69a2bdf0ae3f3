//! Fitness landscapes behind a single [`Problem`] interface.
//!
//! A [`Landscape`] is an immutable snapshot: advancing the environment
//! produces a new value. [`DynamicProblem`] owns the current snapshot, the
//! change schedule, the environment's own random stream and the evaluation
//! counter.

mod parabola;
mod peaks;
mod statics;

pub use parabola::{
    parabola_advance, parabola_eval, MovementKind, OffsetVector, ParabolaDynamics,
    ParabolaLandscape,
};
pub use peaks::{
    format_peaks, mpb_advance, mpb_eval, mpb_optimum, parse_peaks, MpbConfig, Peak,
    PeaksLandscape,
};
pub use statics::{eval_static, DomainPolicy, StaticFunctionId, StaticLandscape};

use crate::error::{Error, Result};
use crate::random::RandomSource;
use crate::space::Bounds;

/// Direction of optimization, used as the single "better-than" comparator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Minimize,
    Maximize,
}

impl Objective {
    /// Strictly better. NaN is never better than anything.
    #[inline]
    pub fn is_better(self, a: f64, b: f64) -> bool {
        match self {
            Objective::Minimize => a < b,
            Objective::Maximize => a > b,
        }
    }

    pub fn worst(self) -> f64 {
        match self {
            Objective::Minimize => f64::INFINITY,
            Objective::Maximize => f64::NEG_INFINITY,
        }
    }

    /// Non-negative distance from `value` to the optimum when `optimum` truly bounds it.
    pub fn gap(self, value: f64, optimum: f64) -> f64 {
        match self {
            Objective::Minimize => value - optimum,
            Objective::Maximize => optimum - value,
        }
    }
}

/// Unit in which the change frequency is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChangeClock {
    Never,
    /// Change after every `n` optimizer iterations.
    Iterations(u64),
    /// Change after every `n` fitness evaluations.
    Evaluations(u64),
}

/// Everything an optimizer needs from a (possibly changing) fitness function.
pub trait Problem {
    fn dimension(&self) -> usize;
    fn bounds(&self) -> &Bounds;
    fn objective(&self) -> Objective;
    fn evaluate(&mut self, x: &[f64]) -> Result<f64>;
    /// Optimum value of the landscape that answered the latest evaluation, if known.
    fn optimum(&self) -> Option<f64>;
    /// Number of evaluations performed so far.
    fn evaluations(&self) -> u64;
    /// Number of environment changes applied so far.
    fn changes(&self) -> u64 {
        0
    }
    /// Signals the end of one optimizer iteration (drives iteration clocks).
    fn end_iteration(&mut self) {}
}

impl<P: Problem + ?Sized> Problem for &mut P {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn bounds(&self) -> &Bounds {
        (**self).bounds()
    }
    fn objective(&self) -> Objective {
        (**self).objective()
    }
    fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        (**self).evaluate(x)
    }
    fn optimum(&self) -> Option<f64> {
        (**self).optimum()
    }
    fn evaluations(&self) -> u64 {
        (**self).evaluations()
    }
    fn changes(&self) -> u64 {
        (**self).changes()
    }
    fn end_iteration(&mut self) {
        (**self).end_iteration()
    }
}

/// An immutable landscape snapshot.
pub trait Landscape: Clone {
    fn dimension(&self) -> usize;
    fn bounds(&self) -> &Bounds;
    fn objective(&self) -> Objective;
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn optimum(&self) -> Option<f64>;
    /// The next snapshot after one environment change.
    fn advanced(&self, src: &mut RandomSource) -> Self;
}

/// A landscape plus its change schedule.
#[derive(Debug, Clone)]
pub struct DynamicProblem<L> {
    landscape: L,
    clock: ChangeClock,
    env_rng: RandomSource,
    evaluations: u64,
    iterations: u64,
    changes: u64,
    pending_change: bool,
}

impl<L: Landscape> DynamicProblem<L> {
    pub fn new(landscape: L, clock: ChangeClock, env_rng: RandomSource) -> Result<Self> {
        match clock {
            ChangeClock::Iterations(0) | ChangeClock::Evaluations(0) => {
                return Err(Error::InvalidInput("change frequency must be positive".into()))
            }
            _ => {}
        }
        Ok(Self {
            landscape,
            clock,
            env_rng,
            evaluations: 0,
            iterations: 0,
            changes: 0,
            pending_change: false,
        })
    }

    pub fn landscape(&self) -> &L {
        &self.landscape
    }

    pub fn clock(&self) -> ChangeClock {
        self.clock
    }

    /// Applies one environment change immediately.
    pub fn change_now(&mut self) {
        self.landscape = self.landscape.advanced(&mut self.env_rng);
        self.changes += 1;
        self.pending_change = false;
    }
}

impl<L: Landscape> Problem for DynamicProblem<L> {
    fn dimension(&self) -> usize {
        self.landscape.dimension()
    }

    fn bounds(&self) -> &Bounds {
        self.landscape.bounds()
    }

    fn objective(&self) -> Objective {
        self.landscape.objective()
    }

    fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        // An evaluation-clocked change takes effect before the next evaluation,
        // so `optimum()` always describes the landscape of the latest answer.
        if self.pending_change {
            self.change_now();
        }
        let v = self.landscape.value(x)?;
        self.evaluations += 1;
        if let ChangeClock::Evaluations(f) = self.clock {
            if self.evaluations % f == 0 {
                self.pending_change = true;
            }
        }
        Ok(v)
    }

    fn optimum(&self) -> Option<f64> {
        self.landscape.optimum()
    }

    fn evaluations(&self) -> u64 {
        self.evaluations
    }

    fn changes(&self) -> u64 {
        self.changes
    }

    fn end_iteration(&mut self) {
        self.iterations += 1;
        if let ChangeClock::Iterations(f) = self.clock {
            if self.iterations % f == 0 {
                self.change_now();
            }
        }
    }
}

pub type StaticProblem = DynamicProblem<StaticLandscape>;
pub type MovingParabola = DynamicProblem<ParabolaLandscape>;
pub type MovingPeaks = DynamicProblem<PeaksLandscape>;

impl StaticProblem {
    pub fn static_fn(id: StaticFunctionId, dim: usize) -> Result<Self> {
        DynamicProblem::new(
            StaticLandscape::new(id, dim, DomainPolicy::Reject)?,
            ChangeClock::Never,
            RandomSource::new(0),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparator_directions() {
        assert!(Objective::Minimize.is_better(1.0, 2.0));
        assert!(!Objective::Minimize.is_better(2.0, 2.0));
        assert!(Objective::Maximize.is_better(3.0, 2.0));
        assert!(!Objective::Maximize.is_better(f64::NAN, 2.0));
        assert_eq!(Objective::Maximize.gap(48.0, 50.0), 2.0);
        assert_eq!(Objective::Minimize.gap(3.0, 0.0), 3.0);
    }

    #[test]
    fn evaluation_clock_changes_after_every_f_evaluations() {
        let cfg = MpbConfig {
            change_every: 3,
            ..MpbConfig::default()
        };
        let mut env = RandomSource::with_stream(5, 1);
        let land = PeaksLandscape::random(&cfg, &mut env).unwrap();
        let mut p = DynamicProblem::new(land, ChangeClock::Evaluations(3), env).unwrap();
        let x = vec![50.0; 5];
        for _ in 0..3 {
            p.evaluate(&x).unwrap();
        }
        assert_eq!(p.changes(), 0);
        p.evaluate(&x).unwrap();
        assert_eq!(p.changes(), 1);
        assert_eq!(p.evaluations(), 4);
    }

    #[test]
    fn iteration_clock_changes_on_iteration_boundaries() {
        let land = ParabolaLandscape::new(3, MovementKind::Linear, 0.1).unwrap();
        let mut p =
            DynamicProblem::new(land, ChangeClock::Iterations(2), RandomSource::new(0)).unwrap();
        p.end_iteration();
        assert_eq!(p.changes(), 0);
        p.end_iteration();
        assert_eq!(p.changes(), 1);
        let v = p.evaluate(&[0.0, 0.0, 0.0]).unwrap();
        assert!((v - 0.03).abs() < 1e-12);
    }

    #[test]
    fn zero_frequency_rejected() {
        let land = ParabolaLandscape::new(3, MovementKind::Linear, 0.1).unwrap();
        assert!(DynamicProblem::new(land, ChangeClock::Iterations(0), RandomSource::new(0)).is_err());
    }
}
