//! Coordinate pattern search.
//!
//! Each dimension carries its own step magnitude and direction. A probe
//! along the current direction is accepted on strict improvement; otherwise
//! the direction flips and the opposite probe is tried; if that fails too the
//! step is halved (never below `min_step`) and the sweep moves on. The search
//! ends when a whole sweep at minimum step improves nothing, or the
//! evaluation budget runs out.

use crate::benchmarks::Problem;
use crate::error::{Error, Result};
use crate::space::SearchPoint;

const STEP_DECREASE: f64 = 0.5;

/// Resumable search state.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternState {
    pub point: SearchPoint,
    pub fitness: f64,
    pub step: Vec<f64>,
    /// +1.0 or -1.0 per dimension.
    pub direction: Vec<f64>,
    pub evals_used: u64,
    pub converged: bool,
    /// Dimension the current sweep will probe next.
    cursor: usize,
    /// The forward probe on `cursor` already failed.
    reversed: bool,
    sweep_improved: bool,
}

impl PatternState {
    pub fn new(point: SearchPoint, fitness: f64, step0: &[f64], min_step: f64) -> Result<Self> {
        if step0.len() != point.len() {
            return Err(Error::InvalidInput(format!(
                "step vector has {} entries for a {}-dimensional point",
                step0.len(),
                point.len()
            )));
        }
        if !(min_step > 0.0) || step0.iter().any(|s| !(*s > min_step) || !s.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "pattern search needs step0 > min_step > 0 (min_step = {min_step})"
            )));
        }
        Ok(Self {
            direction: vec![1.0; point.len()],
            step: step0.to_vec(),
            point,
            fitness,
            evals_used: 0,
            converged: false,
            cursor: 0,
            reversed: false,
            sweep_improved: false,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternOutcome {
    pub point: SearchPoint,
    pub fitness: f64,
    pub evals_used: u64,
}

/// Runs a fresh search from `x0` whose known fitness is `f0`.
pub fn pattern_search<P: Problem + ?Sized>(
    x0: SearchPoint,
    f0: f64,
    problem: &mut P,
    step0: &[f64],
    min_step: f64,
    budget: u64,
) -> Result<PatternOutcome> {
    if budget < 1 {
        return Err(Error::InvalidInput("pattern search budget must be at least 1".into()));
    }
    let mut state = PatternState::new(x0, f0, step0, min_step)?;
    resume(&mut state, problem, min_step, budget)?;
    Ok(PatternOutcome {
        point: state.point,
        fitness: state.fitness,
        evals_used: state.evals_used,
    })
}

/// Continues `state` for at most `budget` further evaluations and returns the
/// number spent. Sets `state.converged` when the termination rule fires.
pub fn resume<P: Problem + ?Sized>(
    state: &mut PatternState,
    problem: &mut P,
    min_step: f64,
    budget: u64,
) -> Result<u64> {
    let objective = problem.objective();
    let dim = state.point.len();
    let mut spent = 0u64;
    let mut probe = state.point.clone();

    while !state.converged {
        if state.cursor == dim {
            if !state.sweep_improved && state.step.iter().all(|&s| s <= min_step) {
                state.converged = true;
                break;
            }
            state.cursor = 0;
            state.sweep_improved = false;
            continue;
        }
        let i = state.cursor;
        let lo = problem.bounds().lower()[i];
        let hi = problem.bounds().upper()[i];
        let candidate = (state.point[i] + state.direction[i] * state.step[i]).clamp(lo, hi);
        if candidate != state.point[i] {
            if spent >= budget {
                break;
            }
            probe[i] = candidate;
            let f = problem.evaluate(&probe)?;
            spent += 1;
            if objective.is_better(f, state.fitness) {
                state.point[i] = candidate;
                state.fitness = f;
                state.sweep_improved = true;
                state.reversed = false;
                state.cursor += 1;
                continue;
            }
            probe[i] = state.point[i];
        }
        state.direction[i] = -state.direction[i];
        if !state.reversed {
            state.reversed = true;
        } else {
            state.reversed = false;
            state.step[i] = (state.step[i] * STEP_DECREASE).max(min_step);
            state.cursor += 1;
        }
    }
    state.evals_used += spent;
    Ok(spent)
}
