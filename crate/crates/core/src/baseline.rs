//! Plain global-best PSO used as the comparison baseline.
//!
//! Shares [`SwarmParams`] with the cellular engine: same acceleration
//! coefficients, inertia range and velocity clamp (in cell widths of the
//! same partition), but a single swarm attracted to the swarm-wide best.

use crate::benchmarks::{Objective, Problem};
use crate::error::Result;
use crate::random::RandomSource;
use crate::space::SearchPoint;
use crate::swarm::{detect_change, velocity_update, Particle, Sentinel, SwarmParams};

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalBest {
    pub position: SearchPoint,
    pub fitness: f64,
}

/// One synchronous-order sweep over the population; returns evaluations spent.
pub fn spso_iterate<P: Problem + ?Sized>(
    particles: &mut [Particle],
    gbest: &mut GlobalBest,
    params: &SwarmParams,
    vmax: &[f64],
    problem: &mut P,
    src: &mut RandomSource,
) -> Result<u64> {
    let objective = problem.objective();
    let dim = problem.dimension();
    let (wl, wh) = params.w_range;
    let mut r1 = vec![0.0; dim];
    let mut r2 = vec![0.0; dim];
    let mut spent = 0;
    for p in particles.iter_mut() {
        let w = src.uniform_in(wl, wh);
        for i in 0..dim {
            r1[i] = src.unit();
            r2[i] = src.unit();
        }
        let v = velocity_update(
            &p.velocity,
            &p.position,
            &p.pbest_position,
            &gbest.position,
            w,
            &r1,
            &r2,
            params.a1,
            params.a2,
            vmax,
        );
        let mut x: Vec<f64> = p.position.iter().zip(&v).map(|(a, b)| a + b).collect();
        problem.bounds().clamp_in_place(&mut x);
        let f = problem.evaluate(&x)?;
        spent += 1;
        p.velocity = v;
        p.position = x.into();
        if objective.is_better(f, p.pbest_fitness) {
            p.pbest_position = p.position.clone();
            p.pbest_fitness = f;
        }
        if objective.is_better(f, gbest.fitness) {
            gbest.position = p.position.clone();
            gbest.fitness = f;
        }
    }
    Ok(spent)
}

/// A baseline run. The global best doubles as change sentinel: when its
/// value moves, every particle is re-evaluated and its memory reset.
#[derive(Debug, Clone)]
pub struct SpsoState {
    params: SwarmParams,
    objective: Objective,
    particles: Vec<Particle>,
    gbest: GlobalBest,
    vmax: Vec<f64>,
    evaluations: u64,
    iteration: u64,
    changes_detected: u64,
}

impl SpsoState {
    pub fn initialize<P: Problem + ?Sized>(
        params: SwarmParams,
        problem: &mut P,
        src: &mut RandomSource,
    ) -> Result<Self> {
        params.validate()?;
        let bounds = problem.bounds().clone();
        let dim = bounds.dim();
        let objective = problem.objective();
        let vmax: Vec<f64> = (0..dim)
            .map(|i| bounds.width(i) / params.partitions as f64 * params.vmax_fraction)
            .collect();
        let mut particles = Vec::with_capacity(params.population);
        let mut gbest = GlobalBest {
            position: SearchPoint::zeros(dim),
            fitness: objective.worst(),
        };
        for id in 0..params.population {
            let x: SearchPoint = (0..dim)
                .map(|i| src.uniform_in(bounds.lower()[i], bounds.upper()[i]))
                .collect::<Vec<_>>()
                .into();
            let f = problem.evaluate(&x)?;
            if objective.is_better(f, gbest.fitness) {
                gbest = GlobalBest {
                    position: x.clone(),
                    fitness: f,
                };
            }
            particles.push(Particle {
                id,
                velocity: vec![0.0; dim],
                pbest_position: x.clone(),
                pbest_fitness: f,
                position: x,
                evaluated: true,
            });
        }
        Ok(Self {
            evaluations: params.population as u64,
            params,
            objective,
            particles,
            gbest,
            vmax,
            iteration: 0,
            changes_detected: 0,
        })
    }

    pub fn iterate<P: Problem + ?Sized>(&mut self, problem: &mut P, src: &mut RandomSource) -> Result<()> {
        let sentinel = Sentinel {
            position: self.gbest.position.clone(),
            stored_fitness: self.gbest.fitness,
        };
        let changed = detect_change(&sentinel, problem)?;
        self.evaluations += 1;
        if changed {
            self.changes_detected += 1;
            self.gbest.fitness = self.objective.worst();
            for p in &mut self.particles {
                let f = problem.evaluate(&p.position)?;
                self.evaluations += 1;
                p.pbest_position = p.position.clone();
                p.pbest_fitness = f;
                if self.objective.is_better(f, self.gbest.fitness) {
                    self.gbest = GlobalBest {
                        position: p.position.clone(),
                        fitness: f,
                    };
                }
            }
        }
        self.evaluations += spso_iterate(
            &mut self.particles,
            &mut self.gbest,
            &self.params,
            &self.vmax,
            problem,
            src,
        )?;
        self.iteration += 1;
        problem.end_iteration();
        Ok(())
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn gbest(&self) -> &GlobalBest {
        &self.gbest
    }

    pub fn vmax(&self) -> &[f64] {
        &self.vmax
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn changes_detected(&self) -> u64 {
        self.changes_detected
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{StaticFunctionId, StaticProblem};

    #[test]
    fn fixed_point_is_stationary() {
        let mut p = StaticProblem::static_fn(StaticFunctionId::Sphere, 2).unwrap();
        let x: SearchPoint = vec![3.0, -1.0].into();
        let mut particles = vec![Particle {
            id: 0,
            position: x.clone(),
            velocity: vec![0.0; 2],
            pbest_position: x.clone(),
            pbest_fitness: 10.0,
            evaluated: true,
        }];
        let mut gbest = GlobalBest {
            position: x.clone(),
            fitness: 10.0,
        };
        let params = SwarmParams::static_defaults();
        spso_iterate(&mut particles, &mut gbest, &params, &[10.0; 2], &mut p, &mut RandomSource::new(1)).unwrap();
        assert_eq!(particles[0].position, x);
        assert_eq!(particles[0].velocity, vec![0.0; 2]);
    }

    #[test]
    fn one_dimensional_hand_case() {
        // same arithmetic as the cellular update with gbest as attractor
        let v = velocity_update(&[1.0], &[0.0], &[2.0], &[4.0], 0.5, &[0.5], &[0.5], 1.5, 1.5, &[f64::MAX]);
        assert_eq!(v[0], 5.0);
    }

    #[test]
    fn elitist_on_static_problem() {
        let mut p = StaticProblem::static_fn(StaticFunctionId::Griewank, 5).unwrap();
        let mut src = RandomSource::new(4);
        let mut s = SpsoState::initialize(SwarmParams::static_defaults(), &mut p, &mut src).unwrap();
        let mut last = s.gbest().fitness;
        for _ in 0..200 {
            s.iterate(&mut p, &mut src).unwrap();
            assert!(s.gbest().fitness <= last);
            last = s.gbest().fitness;
            assert_eq!(s.evaluations(), p.evaluations());
            for q in s.particles() {
                assert!(q.velocity.iter().zip(s.vmax()).all(|(v, m)| v.abs() <= *m));
            }
        }
        assert_eq!(s.changes_detected(), 0);
    }
}
