//! The cellular multi-swarm engine.
//!
//! The search space is cut into cells. Every iteration the particles of each
//! occupied cell are clustered into small groups, moved towards the best
//! memory of their cell neighbourhood, and each cell's best point is refined
//! by coordinate pattern search. Converged groups release their non-best
//! members to neighbouring cells. A sentinel point is re-evaluated every
//! iteration to detect environment changes.

use std::collections::BTreeMap;

use crate::benchmarks::{Objective, Problem};
use crate::error::{Error, Result};
use crate::grid::{cell_of_unchecked, neighbor_cells, region_of, CellCoord, OccupancyIndex, Topology};
use crate::localsearch::{self, PatternState};
use crate::random::RandomSource;
use crate::space::{euclidean_distance, Bounds, SearchPoint};

/// What the local search refines each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalSearchTarget {
    /// The best memory of every occupied cell.
    Cell,
    /// The best member of every group.
    Group,
    Off,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmParams {
    pub a1: f64,
    pub a2: f64,
    pub w_range: (f64, f64),
    pub topology: Topology,
    /// Partitions per dimension.
    pub partitions: usize,
    pub population: usize,
    /// Clustering radius as a fraction of the cell diagonal.
    pub cluster_radius_fraction: f64,
    pub group_size_max: usize,
    /// `None` means 1e-3 × the smallest cell width.
    pub convergence_radius: Option<f64>,
    /// Velocity clamp per dimension, in cell widths.
    pub vmax_fraction: f64,
    pub local_search: LocalSearchTarget,
    /// Initial pattern-search step, in cell widths.
    pub ls_step_fraction: f64,
    /// Minimum pattern-search step, in cell widths.
    pub ls_min_step_fraction: f64,
    /// Pattern-search evaluations per invocation, per dimension.
    pub ls_budget_per_dim: u64,
}

impl Default for SwarmParams {
    /// Moving-peaks settings: Moore neighbourhood, 5 partitions, 40 particles.
    fn default() -> Self {
        Self {
            a1: 1.496180,
            a2: 1.496180,
            w_range: (0.4, 0.9),
            topology: Topology::Moore,
            partitions: 5,
            population: 40,
            cluster_radius_fraction: 0.25,
            group_size_max: 5,
            convergence_radius: None,
            vmax_fraction: 0.25,
            local_search: LocalSearchTarget::Cell,
            ls_step_fraction: 0.1,
            ls_min_step_fraction: 1e-3,
            ls_budget_per_dim: 2,
        }
    }
}

impl SwarmParams {
    /// Static-function settings: Von Neumann neighbourhood, 3 partitions,
    /// and a longer, coarser local search.
    pub fn static_defaults() -> Self {
        Self {
            topology: Topology::VonNeumann,
            partitions: 3,
            vmax_fraction: 1.0,
            ls_step_fraction: 0.25,
            ls_budget_per_dim: 5,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.a1 > 0.0 && self.a2 > 0.0) {
            return bad(format!("acceleration coefficients must be positive ({}, {})", self.a1, self.a2));
        }
        let (wl, wh) = self.w_range;
        if !(0.0 < wl && wl < wh && wh < 1.0) {
            return bad(format!("inertia range ({wl}, {wh}) must satisfy 0 < lo < hi < 1"));
        }
        if self.partitions < 1 {
            return Err(Error::InvalidPartitioning(self.partitions));
        }
        if self.population < 1 {
            return bad("population must be positive".into());
        }
        if self.group_size_max < 1 {
            return bad("group_size_max must be positive".into());
        }
        if !(self.cluster_radius_fraction >= 0.0) {
            return bad("cluster_radius_fraction must be non-negative".into());
        }
        if let Some(eps) = self.convergence_radius {
            if !(eps >= 0.0) {
                return bad("convergence_radius must be non-negative".into());
            }
        }
        if !(self.vmax_fraction > 0.0) {
            return bad("vmax_fraction must be positive".into());
        }
        if self.local_search != LocalSearchTarget::Off
            && !(self.ls_step_fraction > self.ls_min_step_fraction && self.ls_min_step_fraction > 0.0)
        {
            return bad("local search needs step fraction > min step fraction > 0".into());
        }
        if self.local_search != LocalSearchTarget::Off && self.ls_budget_per_dim < 1 {
            return bad("ls_budget_per_dim must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub id: usize,
    pub position: SearchPoint,
    pub velocity: Vec<f64>,
    pub pbest_position: SearchPoint,
    pub pbest_fitness: f64,
    /// False while the particle waits for its first evaluation after relocation.
    pub evaluated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    /// Member ids, best pbest first.
    pub members: Vec<usize>,
    pub cbest_position: SearchPoint,
    pub cbest_fitness: f64,
    pub active: bool,
}

/// Best point recorded for a cell and the particle that found it.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMemory {
    pub position: SearchPoint,
    pub fitness: f64,
    pub owner: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub coord: CellCoord,
    pub groups: Vec<Group>,
    pub best: Option<CellMemory>,
    search: Option<PatternState>,
}

impl CellState {
    fn new(coord: CellCoord) -> Self {
        Self {
            coord,
            groups: Vec::new(),
            best: None,
            search: None,
        }
    }
}

/// Memory point used to detect environment changes.
#[derive(Debug, Clone, PartialEq)]
pub struct Sentinel {
    pub position: SearchPoint,
    pub stored_fitness: f64,
}

/// Smallest fitness difference treated as an environment change.
pub const CHANGE_THRESHOLD: f64 = 1e-12;

/// Re-evaluates the sentinel and reports whether its value moved.
pub fn detect_change<P: Problem + ?Sized>(s: &Sentinel, problem: &mut P) -> Result<bool> {
    let now = problem.evaluate(&s.position)?;
    Ok((now - s.stored_fitness).abs() > CHANGE_THRESHOLD)
}

/// `a1·r1·(pbest − p) + a2·r2·(attractor − p) + w·v`, each component clamped to ±vmax.
#[allow(clippy::too_many_arguments)]
pub fn velocity_update(
    velocity: &[f64],
    position: &[f64],
    pbest: &[f64],
    attractor: &[f64],
    w: f64,
    r1: &[f64],
    r2: &[f64],
    a1: f64,
    a2: f64,
    vmax: &[f64],
) -> Vec<f64> {
    (0..velocity.len())
        .map(|i| {
            let v = a1 * r1[i] * (pbest[i] - position[i])
                + a2 * r2[i] * (attractor[i] - position[i])
                + w * velocity[i];
            v.clamp(-vmax[i], vmax[i])
        })
        .collect()
}

/// Greedy leader clustering of one cell's particles.
///
/// The unassigned particle with the best pbest leads a new group and pulls in
/// unassigned particles within `radius_fraction × diagonal(region)` in rank
/// order until the group holds `group_size_max` members.
pub fn cluster_cell(
    members: &[&Particle],
    region: &Bounds,
    params: &SwarmParams,
    objective: Objective,
) -> Result<Vec<Group>> {
    if members.is_empty() {
        return Err(Error::InvalidInput("cannot cluster an empty cell".into()));
    }
    let mut ranked: Vec<&Particle> = members.to_vec();
    ranked.sort_by(|a, b| rank_order(objective, a, b));
    let radius = params.cluster_radius_fraction * region.diagonal();
    let mut assigned = vec![false; ranked.len()];
    let mut groups = Vec::new();
    for li in 0..ranked.len() {
        if assigned[li] {
            continue;
        }
        assigned[li] = true;
        let leader = ranked[li];
        let mut ids = vec![leader.id];
        for (j, p) in ranked.iter().enumerate().skip(li + 1) {
            if ids.len() >= params.group_size_max {
                break;
            }
            if !assigned[j] && euclidean_distance(&leader.position, &p.position) <= radius {
                assigned[j] = true;
                ids.push(p.id);
            }
        }
        groups.push(Group {
            members: ids,
            cbest_position: leader.pbest_position.clone(),
            cbest_fitness: leader.pbest_fitness,
            active: true,
        });
    }
    Ok(groups)
}

fn rank_order(objective: Objective, a: &Particle, b: &Particle) -> std::cmp::Ordering {
    if objective.is_better(a.pbest_fitness, b.pbest_fitness) {
        std::cmp::Ordering::Less
    } else if objective.is_better(b.pbest_fitness, a.pbest_fitness) {
        std::cmp::Ordering::Greater
    } else {
        a.id.cmp(&b.id)
    }
}

/// Marks the group inactive once its members have collapsed to within `eps`.
/// A singleton is converged when its speed is at most `eps`.
pub fn update_group_status(g: &mut Group, eps: f64, particles: &[Particle]) {
    let converged = if g.members.len() == 1 {
        let v = &particles[g.members[0]].velocity;
        v.iter().map(|x| x * x).sum::<f64>().sqrt() <= eps
    } else {
        g.members.iter().enumerate().all(|(i, &a)| {
            g.members[i + 1..]
                .iter()
                .all(|&b| euclidean_distance(&particles[a].position, &particles[b].position) <= eps)
        })
    };
    g.active = !converged;
}

/// Complete state of one run.
#[derive(Debug, Clone)]
pub struct SwarmState {
    params: SwarmParams,
    objective: Objective,
    bounds: Bounds,
    cell_width: Vec<f64>,
    vmax: Vec<f64>,
    epsilon: f64,
    particles: Vec<Particle>,
    occupancy: OccupancyIndex,
    cells: BTreeMap<CellCoord, CellState>,
    sentinel: Sentinel,
    best: Option<CellMemory>,
    iteration: u64,
    evaluations: u64,
    ls_evaluations: u64,
    changes_detected: u64,
}

impl SwarmState {
    /// Scatters the population uniformly over the box with zero velocity and
    /// evaluates it. The best initial particle becomes the sentinel.
    pub fn initialize<P: Problem + ?Sized>(
        params: SwarmParams,
        problem: &mut P,
        src: &mut RandomSource,
    ) -> Result<Self> {
        params.validate()?;
        let bounds = problem.bounds().clone();
        let dim = bounds.dim();
        let k = params.partitions;
        let cell_width: Vec<f64> = (0..dim).map(|i| bounds.width(i) / k as f64).collect();
        let vmax = cell_width.iter().map(|w| w * params.vmax_fraction).collect();
        let epsilon = params
            .convergence_radius
            .unwrap_or_else(|| 1e-3 * cell_width.iter().cloned().fold(f64::INFINITY, f64::min));
        let objective = problem.objective();

        let mut state = Self {
            objective,
            cell_width,
            vmax,
            epsilon,
            particles: Vec::with_capacity(params.population),
            occupancy: OccupancyIndex::new(),
            cells: BTreeMap::new(),
            sentinel: Sentinel {
                position: SearchPoint::zeros(dim),
                stored_fitness: 0.0,
            },
            best: None,
            iteration: 0,
            evaluations: 0,
            ls_evaluations: 0,
            changes_detected: 0,
            bounds,
            params,
        };

        for id in 0..state.params.population {
            let position: SearchPoint = state.random_point_in(&state.bounds.clone(), src).into();
            let fitness = state.eval(problem, &position)?;
            state.occupancy.insert(id, state.cell_of(&position));
            state.particles.push(Particle {
                id,
                velocity: vec![0.0; dim],
                pbest_position: position.clone(),
                pbest_fitness: fitness,
                position,
                evaluated: true,
            });
            state.record(id, fitness);
        }
        let best = state.best.clone().expect("population is non-empty");
        state.sentinel = Sentinel {
            position: best.position,
            stored_fitness: best.fitness,
        };
        Ok(state)
    }

    pub fn params(&self) -> &SwarmParams {
        &self.params
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn occupancy(&self) -> &OccupancyIndex {
        &self.occupancy
    }

    pub fn cells(&self) -> &BTreeMap<CellCoord, CellState> {
        &self.cells
    }

    pub fn sentinel(&self) -> &Sentinel {
        &self.sentinel
    }

    pub fn vmax(&self) -> &[f64] {
        &self.vmax
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// Problem evaluations issued by this run.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn local_search_evaluations(&self) -> u64 {
        self.ls_evaluations
    }

    pub fn changes_detected(&self) -> u64 {
        self.changes_detected
    }

    /// Best point evaluated since the last detected change.
    pub fn best(&self) -> Option<&CellMemory> {
        self.best.as_ref()
    }

    fn cell_of(&self, x: &[f64]) -> CellCoord {
        cell_of_unchecked(x, &self.bounds, self.params.partitions)
    }

    fn region(&self, c: &CellCoord) -> Bounds {
        region_of(c, &self.bounds, self.params.partitions).expect("cells come from cell_of")
    }

    fn random_point_in(&self, region: &Bounds, src: &mut RandomSource) -> Vec<f64> {
        (0..region.dim())
            .map(|i| src.uniform_in(region.lower()[i], region.upper()[i]))
            .collect()
    }

    fn eval<P: Problem + ?Sized>(&mut self, problem: &mut P, x: &[f64]) -> Result<f64> {
        let f = problem.evaluate(x)?;
        self.evaluations += 1;
        Ok(f)
    }

    /// Offers particle `id`'s latest evaluated position to its cell memory and the run best.
    fn record(&mut self, id: usize, fitness: f64) {
        let position = &self.particles[id].position;
        let coord = self.cell_of(position);
        let candidate = CellMemory {
            position: position.clone(),
            fitness,
            owner: Some(id),
        };
        let cell = self.cells.entry(coord.clone()).or_insert_with(|| CellState::new(coord));
        if cell.best.as_ref().is_none_or(|b| self.objective.is_better(fitness, b.fitness)) {
            cell.best = Some(candidate.clone());
        }
        if self.best.as_ref().is_none_or(|b| self.objective.is_better(fitness, b.fitness)) {
            self.best = Some(candidate);
        }
    }

    /// One full iteration.
    pub fn iterate<P: Problem + ?Sized>(&mut self, problem: &mut P, src: &mut RandomSource) -> Result<()> {
        self.evaluate_pending(problem)?;
        let changed = detect_change(&self.sentinel, problem)?;
        self.evaluations += 1;
        if changed {
            self.changes_detected += 1;
            self.on_change(problem, src)?;
        }
        self.cluster_all();
        self.move_particles(problem, src)?;
        self.refresh_group_bests();
        self.local_search(problem)?;
        self.update_statuses();
        self.recycle_inactive(src);
        self.iteration += 1;
        problem.end_iteration();
        Ok(())
    }

    fn evaluate_pending<P: Problem + ?Sized>(&mut self, problem: &mut P) -> Result<()> {
        for id in 0..self.particles.len() {
            if !self.particles[id].evaluated {
                let x = self.particles[id].position.clone();
                let f = self.eval(problem, &x)?;
                let p = &mut self.particles[id];
                p.pbest_position = x;
                p.pbest_fitness = f;
                p.evaluated = true;
                self.record(id, f);
            }
        }
        Ok(())
    }

    /// Change response: forget every memory, redraw velocities, keep each
    /// cell's best particle at its best-known point, re-scatter the rest of
    /// converged groups inside their cell, then re-evaluate everyone.
    pub fn on_change<P: Problem + ?Sized>(&mut self, problem: &mut P, src: &mut RandomSource) -> Result<()> {
        // rankings from the old landscape decide who is kept
        self.cluster_all();
        self.update_statuses();
        let mut keep = Vec::new();
        let mut scatter = Vec::new();
        for cell in self.cells.values() {
            let Some(leader) = cell
                .groups
                .iter()
                .filter_map(|g| g.members.first().copied())
                .min_by(|&a, &b| rank_order(self.objective, &self.particles[a], &self.particles[b]))
            else {
                continue;
            };
            keep.push(leader);
            for g in cell.groups.iter().filter(|g| !g.active) {
                scatter.extend(g.members.iter().copied().skip(1).map(|m| (m, cell.coord.clone())));
            }
        }

        for cell in self.cells.values_mut() {
            cell.best = None;
            cell.search = None;
            cell.groups.clear();
        }
        self.cells.retain(|c, _| self.occupancy.is_occupied(c));
        self.best = None;

        for p in &mut self.particles {
            for (v, vmax) in p.velocity.iter_mut().zip(&self.vmax) {
                *v = src.uniform_in(-vmax, *vmax);
            }
            p.pbest_fitness = self.objective.worst();
        }
        for id in keep {
            let p = &mut self.particles[id];
            p.position = p.pbest_position.clone();
        }
        for (id, coord) in scatter {
            let region = self.region(&coord);
            self.particles[id].position = self.random_point_in(&region, src).into();
        }
        for id in 0..self.particles.len() {
            let coord = self.cell_of(&self.particles[id].position);
            self.occupancy.insert(id, coord);
        }

        for id in 0..self.particles.len() {
            let x = self.particles[id].position.clone();
            let f = self.eval(problem, &x)?;
            let p = &mut self.particles[id];
            p.pbest_position = x;
            p.pbest_fitness = f;
            p.evaluated = true;
            self.record(id, f);
        }
        let f = self.eval(problem, &self.sentinel.position.clone())?;
        self.sentinel.stored_fitness = f;
        Ok(())
    }

    fn cluster_all(&mut self) {
        for cell in self.cells.values_mut() {
            cell.groups.clear();
        }
        let occupied: Vec<(CellCoord, Vec<usize>)> = self
            .occupancy
            .occupied()
            .map(|(c, ids)| (c.clone(), ids.iter().copied().collect()))
            .collect();
        for (coord, ids) in occupied {
            let region = self.region(&coord);
            let members: Vec<&Particle> = ids.iter().map(|&i| &self.particles[i]).collect();
            let groups = cluster_cell(&members, &region, &self.params, self.objective)
                .expect("occupied cells are non-empty");
            self.cells
                .entry(coord.clone())
                .or_insert_with(|| CellState::new(coord))
                .groups = groups;
        }
    }

    /// Best memory among `coord` and its occupied neighbours.
    fn attractor(&self, coord: &CellCoord, neighbors: &[CellCoord]) -> Option<SearchPoint> {
        std::iter::once(coord)
            .chain(neighbors)
            .filter_map(|c| self.cells.get(c).and_then(|s| s.best.as_ref()))
            .fold(None::<&CellMemory>, |acc, m| match acc {
                Some(a) if !self.objective.is_better(m.fitness, a.fitness) => Some(a),
                _ => Some(m),
            })
            .map(|m| m.position.clone())
    }

    fn move_particles<P: Problem + ?Sized>(&mut self, problem: &mut P, src: &mut RandomSource) -> Result<()> {
        let topology = self.params.topology;
        let plan: Vec<(CellCoord, Vec<CellCoord>)> = self
            .occupancy
            .occupied()
            .map(|(c, _)| (c.clone(), neighbor_cells(c, topology, &self.occupancy)))
            .collect();
        for (coord, neighbors) in plan {
            let attractor = self.attractor(&coord, &neighbors);
            let n_groups = self.cells[&coord].groups.len();
            for gi in 0..n_groups {
                let mut group = self.cells[&coord].groups[gi].clone();
                if group.active {
                    let social = attractor.clone().unwrap_or_else(|| group.cbest_position.clone());
                    self.step_group(&mut group, &social, problem, src)?;
                }
                self.cells.get_mut(&coord).expect("cell exists").groups[gi] = group;
            }
        }
        Ok(())
    }

    /// Moves every member of `g` once towards its pbest and `social`.
    pub fn step_group<P: Problem + ?Sized>(
        &mut self,
        g: &mut Group,
        social: &[f64],
        problem: &mut P,
        src: &mut RandomSource,
    ) -> Result<()> {
        let dim = self.bounds.dim();
        let (wl, wh) = self.params.w_range;
        let mut r1 = vec![0.0; dim];
        let mut r2 = vec![0.0; dim];
        for &id in &g.members {
            let w = src.uniform_in(wl, wh);
            for i in 0..dim {
                r1[i] = src.unit();
                r2[i] = src.unit();
            }
            let p = &self.particles[id];
            if self.at_rest(p, social) {
                continue;
            }
            let v = velocity_update(
                &p.velocity,
                &p.position,
                &p.pbest_position,
                social,
                w,
                &r1,
                &r2,
                self.params.a1,
                self.params.a2,
                &self.vmax,
            );
            let mut x: Vec<f64> = p.position.iter().zip(&v).map(|(a, b)| a + b).collect();
            self.bounds.clamp_in_place(&mut x);
            let f = self.eval(problem, &x)?;

            let p = &mut self.particles[id];
            p.velocity = v;
            p.position = x.into();
            if self.objective.is_better(f, p.pbest_fitness) {
                p.pbest_position = p.position.clone();
                p.pbest_fitness = f;
            }
            if self.objective.is_better(f, g.cbest_fitness) {
                g.cbest_position = p.position.clone();
                g.cbest_fitness = f;
            }
            let coord = self.cell_of(&self.particles[id].position);
            self.occupancy.insert(id, coord);
            self.record(id, f);
        }
        Ok(())
    }

    /// A particle resting on both attractors would not move; it is skipped
    /// rather than re-evaluated at the same point.
    fn at_rest(&self, p: &Particle, social: &[f64]) -> bool {
        let eps = self.epsilon;
        p.velocity.iter().map(|v| v * v).sum::<f64>().sqrt() <= eps
            && euclidean_distance(&p.position, &p.pbest_position) <= eps
            && euclidean_distance(&p.position, social) <= eps
    }

    fn refresh_group_bests(&mut self) {
        let particles = &self.particles;
        let objective = self.objective;
        for cell in self.cells.values_mut() {
            for g in &mut cell.groups {
                for &m in &g.members {
                    let p = &particles[m];
                    if objective.is_better(p.pbest_fitness, g.cbest_fitness) {
                        g.cbest_fitness = p.pbest_fitness;
                        g.cbest_position = p.pbest_position.clone();
                    }
                }
            }
        }
    }

    fn ls_steps(&self) -> (Vec<f64>, f64) {
        let step0 = self.cell_width.iter().map(|w| w * self.params.ls_step_fraction).collect();
        let min_w = self.cell_width.iter().cloned().fold(f64::INFINITY, f64::min);
        (step0, min_w * self.params.ls_min_step_fraction)
    }

    fn ls_budget(&self) -> u64 {
        self.params.ls_budget_per_dim * self.bounds.dim() as u64
    }

    fn local_search<P: Problem + ?Sized>(&mut self, problem: &mut P) -> Result<()> {
        match self.params.local_search {
            LocalSearchTarget::Off => Ok(()),
            LocalSearchTarget::Cell => self.local_search_cells(problem),
            LocalSearchTarget::Group => self.local_search_groups(problem),
        }
    }

    /// Refines each occupied cell's memory, best cell first. Search state
    /// persists between iterations and is re-anchored when the swarm moves
    /// the memory elsewhere.
    fn local_search_cells<P: Problem + ?Sized>(&mut self, problem: &mut P) -> Result<()> {
        let (step0, min_step) = self.ls_steps();
        let budget = self.ls_budget();
        let mut order: Vec<(CellCoord, f64)> = self
            .occupancy
            .occupied()
            .filter_map(|(c, _)| self.cells.get(c).and_then(|s| s.best.as_ref()).map(|b| (c.clone(), b.fitness)))
            .collect();
        let objective = self.objective;
        order.sort_by(|a, b| {
            if objective.is_better(a.1, b.1) {
                std::cmp::Ordering::Less
            } else if objective.is_better(b.1, a.1) {
                std::cmp::Ordering::Greater
            } else {
                a.0.cmp(&b.0)
            }
        });

        for (coord, _) in order {
            let cell = self.cells.get_mut(&coord).expect("ordered cells exist");
            let memory = cell.best.clone().expect("ordered cells have memory");
            let state = match cell.search.take() {
                Some(mut s) if s.point == memory.position => {
                    s.fitness = memory.fitness;
                    s
                }
                Some(mut s) => {
                    s.point = memory.position.clone();
                    s.fitness = memory.fitness;
                    s.converged = false;
                    s
                }
                None => PatternState::new(memory.position.clone(), memory.fitness, &step0, min_step)?,
            };
            let mut state = state;
            if !state.converged {
                let spent = localsearch::resume(&mut state, problem, min_step, budget)?;
                self.evaluations += spent;
                self.ls_evaluations += spent;
            }
            if objective.is_better(state.fitness, memory.fitness) {
                self.adopt(&coord, memory.owner, &state.point, state.fitness);
            }
            self.cells.get_mut(&coord).expect("cell exists").search = Some(state);
        }
        Ok(())
    }

    fn local_search_groups<P: Problem + ?Sized>(&mut self, problem: &mut P) -> Result<()> {
        let (step0, min_step) = self.ls_steps();
        let budget = self.ls_budget();
        let targets: Vec<(CellCoord, usize, SearchPoint, f64)> = self
            .cells
            .iter()
            .flat_map(|(c, s)| {
                s.groups
                    .iter()
                    .map(move |g| (c.clone(), g.members[0], g.cbest_position.clone(), g.cbest_fitness))
            })
            .collect();
        for (coord, leader, x0, f0) in targets {
            let out = localsearch::pattern_search(x0, f0, problem, &step0, min_step, budget)?;
            self.evaluations += out.evals_used;
            self.ls_evaluations += out.evals_used;
            if self.objective.is_better(out.fitness, f0) {
                self.adopt(&coord, Some(leader), &out.point, out.fitness);
            }
        }
        Ok(())
    }

    /// Stores an improved point found by local search for `coord`.
    fn adopt(&mut self, coord: &CellCoord, owner: Option<usize>, point: &SearchPoint, fitness: f64) {
        let objective = self.objective;
        let memory = CellMemory {
            position: point.clone(),
            fitness,
            owner,
        };
        if let Some(cell) = self.cells.get_mut(coord) {
            if cell.best.as_ref().is_none_or(|b| objective.is_better(fitness, b.fitness)) {
                cell.best = Some(memory.clone());
            }
            for g in &mut cell.groups {
                if owner.is_some_and(|o| g.members.contains(&o)) && objective.is_better(fitness, g.cbest_fitness) {
                    g.cbest_position = point.clone();
                    g.cbest_fitness = fitness;
                }
            }
        }
        if let Some(id) = owner {
            let p = &mut self.particles[id];
            if objective.is_better(fitness, p.pbest_fitness) {
                p.pbest_position = point.clone();
                p.pbest_fitness = fitness;
            }
        }
        if self.best.as_ref().is_none_or(|b| objective.is_better(fitness, b.fitness)) {
            self.best = Some(memory);
        }
    }

    fn update_statuses(&mut self) {
        let eps = self.epsilon;
        let particles = &self.particles;
        for cell in self.cells.values_mut() {
            for g in &mut cell.groups {
                update_group_status(g, eps, particles);
            }
        }
    }

    /// Keeps the best member of each inactive group at the group's best point
    /// and relocates the others, preferably into an occupied neighbour cell.
    pub fn recycle_inactive(&mut self, src: &mut RandomSource) {
        let topology = self.params.topology;
        let mut moves: Vec<(CellCoord, usize, usize, Vec<usize>)> = Vec::new();
        for (coord, cell) in &self.cells {
            for (gi, g) in cell.groups.iter().enumerate() {
                if !g.active && g.members.len() > 1 {
                    moves.push((coord.clone(), gi, g.members[0], g.members[1..].to_vec()));
                }
            }
        }
        let mut newcomers: BTreeMap<CellCoord, Vec<usize>> = BTreeMap::new();
        for (coord, gi, leader, freed) in moves {
            let neighbors = neighbor_cells(&coord, topology, &self.occupancy);
            {
                let g = &mut self.cells.get_mut(&coord).expect("cell exists").groups[gi];
                g.members.truncate(1);
                let p = &mut self.particles[leader];
                p.position = g.cbest_position.clone();
                p.velocity.iter_mut().for_each(|v| *v = 0.0);
            }
            let lc = self.cell_of(&self.particles[leader].position);
            self.occupancy.insert(leader, lc);
            for id in freed {
                let region = if neighbors.is_empty() {
                    self.bounds.clone()
                } else {
                    self.region(&neighbors[src.index(neighbors.len())])
                };
                let x: SearchPoint = self.random_point_in(&region, src).into();
                let p = &mut self.particles[id];
                p.position = x.clone();
                p.pbest_position = x;
                p.pbest_fitness = self.objective.worst();
                p.velocity.iter_mut().for_each(|v| *v = 0.0);
                p.evaluated = false;
                let c = self.cell_of(&self.particles[id].position);
                self.occupancy.insert(id, c.clone());
                newcomers.entry(c).or_default().push(id);
            }
        }
        for (coord, ids) in newcomers {
            let cell = self.cells.entry(coord.clone()).or_insert_with(|| CellState::new(coord));
            for id in ids {
                cell.groups.push(Group {
                    members: vec![id],
                    cbest_position: self.particles[id].position.clone(),
                    cbest_fitness: self.objective.worst(),
                    active: true,
                });
            }
        }
    }

    /// Checks the structural invariants; returns a description of the first violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut membership = vec![0usize; self.particles.len()];
        for cell in self.cells.values() {
            for g in &cell.groups {
                for &m in &g.members {
                    membership[m] += 1;
                }
            }
        }
        for p in &self.particles {
            if !self.bounds.contains(&p.position) {
                return Err(format!("particle {} left the bounds", p.id));
            }
            let expected = self.cell_of(&p.position);
            if self.occupancy.cell_of_particle(p.id) != Some(&expected) {
                return Err(format!("particle {} indexed in the wrong cell", p.id));
            }
            if membership[p.id] != 1 {
                return Err(format!("particle {} is in {} groups", p.id, membership[p.id]));
            }
            if let Some(i) = p.velocity.iter().zip(&self.vmax).position(|(v, m)| v.abs() > *m) {
                return Err(format!("particle {} velocity component {i} exceeds vmax", p.id));
            }
        }
        if self.occupancy.particle_count() != self.particles.len() {
            return Err("occupancy index lost particles".into());
        }
        if self.occupancy.occupied_count() > self.particles.len() {
            return Err("occupancy index holds empty cells".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{ChangeClock, DynamicProblem, MovementKind, ParabolaLandscape, StaticFunctionId, StaticProblem};

    fn particle(id: usize, pos: Vec<f64>, fitness: f64) -> Particle {
        Particle {
            id,
            position: pos.clone().into(),
            velocity: vec![0.0; pos.len()],
            pbest_position: pos.into(),
            pbest_fitness: fitness,
            evaluated: true,
        }
    }

    #[test]
    fn velocity_hand_case() {
        let v = velocity_update(&[1.0], &[0.0], &[2.0], &[4.0], 0.5, &[0.5], &[0.5], 1.5, 1.5, &[100.0]);
        assert_eq!(v, vec![5.0]);
        // position update p' = p + v'
        assert_eq!(0.0 + v[0], 5.0);
    }

    #[test]
    fn velocity_zero_random_factors_keep_inertia_only() {
        let v = velocity_update(&[2.0, -1.0], &[1.0, 1.0], &[5.0, 5.0], &[9.0, 9.0], 0.7, &[0.0; 2], &[0.0; 2], 1.5, 1.5, &[10.0; 2]);
        assert_eq!(v, vec![0.7 * 2.0, 0.7 * -1.0]);
    }

    #[test]
    fn velocity_fixed_point_and_clamp() {
        let v = velocity_update(&[0.0], &[3.0], &[3.0], &[3.0], 0.6, &[0.9], &[0.9], 1.5, 1.5, &[1.0]);
        assert_eq!(v, vec![0.0]);
        let v = velocity_update(&[0.0], &[0.0], &[100.0], &[100.0], 0.6, &[1.0], &[1.0], 1.5, 1.5, &[2.5]);
        assert_eq!(v, vec![2.5]);
    }

    #[test]
    fn clustering_examples() {
        let params = SwarmParams::default();
        let region = Bounds::uniform(2, 0.0, 20.0).unwrap(); // diagonal ≈ 28.3, radius ≈ 7.07
        let a = particle(0, vec![1.0, 1.0], 3.0);
        let b = particle(1, vec![2.0, 2.0], 1.0);
        let g = cluster_cell(&[&a, &b], &region, &params, Objective::Minimize).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].members, vec![1, 0]);
        assert_eq!(g[0].cbest_fitness, 1.0);

        let far = particle(2, vec![19.0, 19.0], 2.0);
        let g = cluster_cell(&[&a, &far], &region, &params, Objective::Minimize).unwrap();
        assert_eq!(g.len(), 2);

        let same: Vec<Particle> = (0..7).map(|i| particle(i, vec![5.0, 5.0], 1.0)).collect();
        let refs: Vec<&Particle> = same.iter().collect();
        let g = cluster_cell(&refs, &region, &params, Objective::Minimize).unwrap();
        assert_eq!(g.iter().map(|g| g.members.len()).collect::<Vec<_>>(), vec![5, 2]);
        // ties broken by id
        assert_eq!(g[0].members, vec![0, 1, 2, 3, 4]);

        assert!(cluster_cell(&[], &region, &params, Objective::Minimize).is_err());
    }

    #[test]
    fn group_status_examples() {
        let eps = 0.01;
        let mut ps = vec![particle(0, vec![1.0, 1.0], 0.0), particle(1, vec![1.0, 1.0], 0.0)];
        let mut g = Group {
            members: vec![0, 1],
            cbest_position: vec![1.0, 1.0].into(),
            cbest_fitness: 0.0,
            active: true,
        };
        update_group_status(&mut g, eps, &ps);
        assert!(!g.active);

        ps[1].position = vec![1.0 + 10.0 * eps, 1.0].into();
        update_group_status(&mut g, eps, &ps);
        assert!(g.active);

        update_group_status(&mut g, 0.0, &ps);
        assert!(g.active);

        let mut single = Group {
            members: vec![0],
            ..g.clone()
        };
        update_group_status(&mut single, eps, &ps);
        assert!(!single.active);
        ps[0].velocity = vec![1.0, 0.0];
        update_group_status(&mut single, eps, &ps);
        assert!(single.active);
    }

    #[test]
    fn initialize_contract() {
        let mut p = StaticProblem::static_fn(StaticFunctionId::Sphere, 5).unwrap();
        let mut src = RandomSource::new(1);
        let s = SwarmState::initialize(SwarmParams::default(), &mut p, &mut src).unwrap();
        assert_eq!(s.particles().len(), 40);
        assert!(s.occupancy().occupied_count() <= 40);
        assert!(s.particles().iter().all(|p| p.velocity.iter().all(|v| *v == 0.0)));
        assert!(s.particles().iter().all(|p| p.pbest_position == p.position));
        assert_eq!(s.evaluations(), 40);
        let best = s.particles().iter().map(|p| p.pbest_fitness).fold(f64::INFINITY, f64::min);
        assert_eq!(s.sentinel().stored_fitness, best);

        let mut p2 = StaticProblem::static_fn(StaticFunctionId::Sphere, 5).unwrap();
        let s2 = SwarmState::initialize(SwarmParams::default(), &mut p2, &mut RandomSource::new(1)).unwrap();
        assert_eq!(s.particles(), s2.particles());
    }

    #[test]
    fn detect_change_cases() {
        let mut p = StaticProblem::static_fn(StaticFunctionId::Sphere, 3).unwrap();
        let s = Sentinel {
            position: vec![1.0, 2.0, 3.0].into(),
            stored_fitness: 14.0,
        };
        assert!(!detect_change(&s, &mut p).unwrap());

        let land = ParabolaLandscape::new(3, MovementKind::Linear, 0.1).unwrap();
        let mut dp = DynamicProblem::new(land, ChangeClock::Iterations(1), RandomSource::new(0)).unwrap();
        let s = Sentinel {
            position: vec![1.0, 1.0, 1.0].into(),
            stored_fitness: 3.0,
        };
        assert!(!detect_change(&s, &mut dp).unwrap());
        dp.end_iteration();
        // new value 3·0.9² = 2.43
        assert!(detect_change(&s, &mut dp).unwrap());
        assert_eq!(s.stored_fitness, 3.0);
    }

    #[test]
    fn on_change_resets_to_current_values() {
        let land = ParabolaLandscape::new(4, MovementKind::Linear, 0.5).unwrap();
        let mut p = DynamicProblem::new(land, ChangeClock::Iterations(5), RandomSource::new(3)).unwrap();
        let mut src = RandomSource::new(4);
        let mut s = SwarmState::initialize(SwarmParams::static_defaults(), &mut p, &mut src).unwrap();
        for _ in 0..5 {
            s.iterate(&mut p, &mut src).unwrap();
        }
        s.on_change(&mut p, &mut src).unwrap();
        for q in s.particles() {
            let f = parabola_value(&p, &q.position);
            assert_eq!(q.pbest_fitness, f);
            assert_eq!(q.pbest_position, q.position);
            assert!(q.velocity.iter().zip(s.vmax()).all(|(v, m)| v.abs() <= *m));
        }
        assert_eq!(s.sentinel().stored_fitness, parabola_value(&p, &s.sentinel().position));
        for q in s.particles() {
            let c = cell_of_unchecked(&q.position, p.bounds(), 3);
            assert_eq!(s.occupancy().cell_of_particle(q.id), Some(&c));
        }
    }

    fn parabola_value(p: &DynamicProblem<ParabolaLandscape>, x: &[f64]) -> f64 {
        crate::benchmarks::parabola_eval(x, p.landscape().offset()).unwrap()
    }

    #[test]
    fn zero_severity_change_keeps_fitnesses() {
        let land = ParabolaLandscape::new(3, MovementKind::Gaussian, 0.0).unwrap();
        let mut p = DynamicProblem::new(land, ChangeClock::Never, RandomSource::new(0)).unwrap();
        let mut src = RandomSource::new(8);
        let mut s = SwarmState::initialize(SwarmParams::static_defaults(), &mut p, &mut src).unwrap();
        let before: Vec<f64> = s.particles().iter().map(|q| parabola_value(&p, &q.position)).collect();
        // no particle has moved away from its pbest yet, so nothing relocates
        s.on_change(&mut p, &mut src).unwrap();
        let after: Vec<f64> = s.particles().iter().map(|q| q.pbest_fitness).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn recycle_without_inactive_groups_is_identity() {
        let mut p = StaticProblem::static_fn(StaticFunctionId::Sphere, 2).unwrap();
        let mut src = RandomSource::new(5);
        let mut s = SwarmState::initialize(SwarmParams::default(), &mut p, &mut src).unwrap();
        s.cluster_all();
        let snapshot = s.particles().to_vec();
        s.recycle_inactive(&mut src);
        assert_eq!(s.particles(), &snapshot[..]);
    }

    #[test]
    fn recycle_keeps_one_and_relocates_rest() {
        let mut p = StaticProblem::static_fn(StaticFunctionId::Sphere, 2).unwrap();
        let mut src = RandomSource::new(5);
        let params = SwarmParams {
            population: 3,
            ..SwarmParams::default()
        };
        let mut s = SwarmState::initialize(params, &mut p, &mut src).unwrap();
        for (i, q) in s.particles.iter_mut().enumerate() {
            q.position = vec![10.0, 10.0].into();
            q.pbest_position = q.position.clone();
            q.pbest_fitness = 200.0 + i as f64;
        }
        for id in 0..3 {
            s.occupancy.insert(id, s.cell_of(&[10.0, 10.0]));
        }
        s.cells.clear();
        for id in 0..3 {
            s.record(id, 200.0 + id as f64);
        }
        s.cluster_all();
        s.update_statuses();
        let cell = s.cell_of(&[10.0, 10.0]);
        assert_eq!(s.cells[&cell].groups.len(), 1);
        assert!(!s.cells[&cell].groups[0].active);
        let best_before = s.cells[&cell].best.clone().unwrap();

        s.recycle_inactive(&mut src);
        assert_eq!(s.particles[0].position.0, vec![10.0, 10.0]);
        assert!(s.particles[0].evaluated);
        assert_eq!(s.particles.iter().filter(|q| !q.evaluated).count(), 2);
        assert_eq!(s.cells[&cell].best.as_ref().unwrap(), &best_before);
        s.check_invariants().unwrap();
    }

    #[test]
    fn static_run_is_elitist_and_consistent() {
        for topology in [Topology::Moore, Topology::VonNeumann] {
            let mut p = StaticProblem::static_fn(StaticFunctionId::Rastrigin, 4).unwrap();
            let mut src = RandomSource::new(77);
            let params = SwarmParams {
                topology,
                ..SwarmParams::static_defaults()
            };
            let mut s = SwarmState::initialize(params, &mut p, &mut src).unwrap();
            let mut last_best = s.best().unwrap().fitness;
            let mut last_evals = s.evaluations();
            for _ in 0..100 {
                s.iterate(&mut p, &mut src).unwrap();
                s.check_invariants().unwrap();
                let b = s.best().unwrap().fitness;
                assert!(b <= last_best);
                assert!(s.evaluations() > last_evals);
                assert_eq!(s.evaluations(), p.evaluations());
                last_best = b;
                last_evals = s.evaluations();
            }
            assert_eq!(s.changes_detected(), 0);
        }
    }

    #[test]
    fn group_local_search_mode_runs() {
        let mut p = StaticProblem::static_fn(StaticFunctionId::Sphere, 3).unwrap();
        let mut src = RandomSource::new(2);
        let params = SwarmParams {
            local_search: LocalSearchTarget::Group,
            ..SwarmParams::static_defaults()
        };
        let mut s = SwarmState::initialize(params, &mut p, &mut src).unwrap();
        for _ in 0..20 {
            s.iterate(&mut p, &mut src).unwrap();
            s.check_invariants().unwrap();
        }
        assert!(s.local_search_evaluations() > 0);
        assert!(s.best().unwrap().fitness < 1.0);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = StaticProblem::static_fn(StaticFunctionId::Sphere, 2).unwrap();
        let bad = SwarmParams {
            w_range: (0.9, 0.4),
            ..SwarmParams::default()
        };
        assert!(SwarmState::initialize(bad, &mut p, &mut RandomSource::new(0)).is_err());
        let bad = SwarmParams {
            partitions: 0,
            ..SwarmParams::default()
        };
        assert!(matches!(
            SwarmState::initialize(bad, &mut p, &mut RandomSource::new(0)),
            Err(Error::InvalidPartitioning(0))
        ));
    }
}
