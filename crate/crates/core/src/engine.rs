//! The simulation loop.
//!
//! Each step, every agent in turn (1) tries to pick up the item under it or
//! drop the item it carries, (2) moves to a neighbouring cell chosen by the
//! pheromone transition rule and (3) deposits pheromone there according to
//! the number of items around its new cell. One evaporation sweep closes
//! the step. After `t_max` steps a drain phase disables picking until every
//! carried item has been put down.

use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::behavior::{
    chi, compose_probabilities, delta_drop, epsilon_pick, lf_local_density, lf_probabilities,
};
use crate::config::{FunctionType, Schedule, SimConfig, SubAssignment};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::grid::{Grid, Pos};
use crate::pheromone::{self, DirectionWeights, Heading};

#[derive(Clone, Debug, PartialEq)]
pub struct Agent {
    pub id: u32,
    pub pos: Pos,
    pub heading: Heading,
    pub carried: Option<u32>,
    pub sub: SubAssignment,
}

impl Agent {
    pub fn is_laden(&self) -> bool {
        self.carried.is_some()
    }
}

/// Receives read-only views of the state while a run progresses.
pub trait Observer {
    /// Whether to call [`Observer::observe`] after step `t` (`t = 0` is the
    /// initial layout).
    fn wants(&self, t: u64) -> bool;
    fn observe(&mut self, t: u64, state: &SimState);
    /// Called once after the drain phase.
    fn finish(&mut self, _state: &SimState) {}
}

#[derive(Clone, Debug)]
pub struct SimState {
    cfg: SimConfig,
    weights: DirectionWeights,
    grid: Grid,
    agents: Vec<Agent>,
    dataset: Arc<Dataset>,
    t: u64,
    rng: ChaCha8Rng,
    picking: bool,
    deposits: Vec<f64>,
}

impl SimState {
    /// Random initial layout: items, then agent cells, then headings, all
    /// drawn from the stream seeded by `cfg.seed`.
    pub fn new(cfg: SimConfig, dataset: Arc<Dataset>) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut grid = Grid::new(cfg.grid_side)?;
        grid.place_items_randomly(dataset.len(), &mut rng)?;

        let cells = index::sample(&mut rng, grid.n_cells(), cfg.n_agents).into_vec();
        let mut agents = Vec::with_capacity(cfg.n_agents);
        for (id, cell) in cells.into_iter().enumerate() {
            let pos = grid.pos(cell);
            grid.put_agent(pos, id as u32)?;
            agents.push(Agent {
                id: id as u32,
                pos,
                heading: Heading::random(&mut rng),
                carried: None,
                sub: SubAssignment::for_agent(id),
            });
        }
        Ok(SimState {
            cfg,
            weights: DirectionWeights::default(),
            grid,
            agents,
            dataset,
            t: 0,
            rng,
            picking: true,
            deposits: Vec::new(),
        })
    }

    /// Explicit initial layout: item `i` sits at `item_positions[i]`, agent
    /// `j` at `agents[j]`. The random stream is still seeded from `cfg.seed`;
    /// `cfg.n_agents` is overridden by the number of agents given.
    pub fn from_layout(
        mut cfg: SimConfig,
        dataset: Arc<Dataset>,
        item_positions: &[Pos],
        agents: &[(Pos, Heading)],
    ) -> Result<Self> {
        if item_positions.len() != dataset.len() {
            return Err(Error::Config(format!(
                "{} item positions for {} items",
                item_positions.len(),
                dataset.len()
            )));
        }
        cfg.n_agents = agents.len().max(1);
        cfg.validate()?;
        cfg.n_agents = agents.len();
        let mut grid = Grid::new(cfg.grid_side)?;
        let in_bounds = |p: &Pos| p.x < cfg.grid_side && p.y < cfg.grid_side;
        for (id, p) in item_positions.iter().enumerate() {
            if !in_bounds(p) {
                return Err(Error::Config(format!("item {id} placed outside the grid")));
            }
            grid.put_item(*p, id as u32)?;
        }
        let agents = agents
            .iter()
            .enumerate()
            .map(|(id, &(pos, heading))| {
                if !in_bounds(&pos) {
                    return Err(Error::Config(format!("agent {id} placed outside the grid")));
                }
                grid.put_agent(pos, id as u32)?;
                Ok(Agent {
                    id: id as u32,
                    pos,
                    heading,
                    carried: None,
                    sub: SubAssignment::for_agent(id),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SimState {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            weights: DirectionWeights::default(),
            grid,
            agents,
            dataset,
            t: 0,
            picking: true,
            deposits: Vec::new(),
        })
    }

    pub fn with_direction_weights(mut self, weights: DirectionWeights) -> Self {
        self.weights = weights;
        self
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn dataset_arc(&self) -> Arc<Dataset> {
        Arc::clone(&self.dataset)
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn picking_enabled(&self) -> bool {
        self.picking
    }

    pub fn set_picking(&mut self, enabled: bool) {
        self.picking = enabled;
    }

    /// Pheromone deposited by each agent during the last [`SimState::step`].
    pub fn last_deposits(&self) -> &[f64] {
        &self.deposits
    }

    pub fn laden_agents(&self) -> usize {
        self.agents.iter().filter(|a| a.is_laden()).count()
    }

    /// Hands agent `agent` an item that currently lies under it, bypassing
    /// the pick rule.
    pub fn force_pick(&mut self, agent: usize) -> Result<()> {
        let a = &mut self.agents[agent];
        if a.carried.is_some() {
            return Err(Error::Invariant(format!("agent {} already laden", a.id)));
        }
        let item = self
            .grid
            .take_item(a.pos)
            .ok_or_else(|| Error::Invariant(format!("no item under agent {}", a.id)))?;
        a.carried = Some(item);
        Ok(())
    }

    /// Puts the carried item back on the agent's (empty) cell, bypassing the drop rule.
    pub fn force_drop(&mut self, agent: usize) -> Result<()> {
        let a = &mut self.agents[agent];
        let item = a
            .carried
            .ok_or_else(|| Error::Invariant(format!("agent {} is unladen", a.id)))?;
        self.grid.put_item(a.pos, item)?;
        a.carried = None;
        Ok(())
    }

    /// Runs the pick vote for an unladen agent standing on an item, without
    /// changing the grid. Consumes random numbers.
    pub fn vote_pick(&mut self, agent: usize) -> bool {
        let a = &self.agents[agent];
        let (pos, sub) = (a.pos, a.sub);
        let Some(item) = self.grid.item_at(pos) else {
            return false;
        };
        let cfg = &self.cfg;
        if cfg.function_type == FunctionType::Type4 {
            let f = lf_local_density(&self.grid, pos, item, &self.dataset, cfg.lf_s, cfg.lf_alpha);
            let (p_pick, _) = lf_probabilities(f, cfg.k1, cfg.k2);
            return self.rng.random::<f64>() < p_pick;
        }
        let n = self.grid.count_items_around(pos);
        if n == 0 {
            return true;
        }
        let chi_val = chi(n, cfg.theta_count, cfg.steepness);
        let mut votes = 0;
        for nb in self.grid.neighbors8(pos) {
            if let Some(other) = self.grid.item_at(nb) {
                let d = self.dataset.distance(item, other);
                let (p_pick, _) =
                    compose_probabilities(cfg.function_type, sub, chi_val, epsilon_pick(d, cfg.k2), 0.0)
                        .expect("types 1-3");
                if self.rng.random::<f64>() < p_pick {
                    votes += 1;
                }
            }
        }
        2 * votes >= n
    }

    /// Runs the drop vote for a laden agent on an empty cell, without
    /// changing the grid. An agent with no items around never drops.
    pub fn vote_drop(&mut self, agent: usize) -> bool {
        let a = &self.agents[agent];
        let (pos, sub) = (a.pos, a.sub);
        let Some(item) = a.carried else {
            return false;
        };
        if self.grid.item_at(pos).is_some() {
            return false;
        }
        let cfg = &self.cfg;
        if cfg.function_type == FunctionType::Type4 {
            let f = lf_local_density(&self.grid, pos, item, &self.dataset, cfg.lf_s, cfg.lf_alpha);
            let (_, p_drop) = lf_probabilities(f, cfg.k1, cfg.k2);
            return self.rng.random::<f64>() < p_drop;
        }
        let n = self.grid.count_items_around(pos);
        if n == 0 {
            return false;
        }
        let chi_val = chi(n, cfg.theta_count, cfg.steepness);
        let mut votes = 0;
        for nb in self.grid.neighbors8(pos) {
            if let Some(other) = self.grid.item_at(nb) {
                let d = self.dataset.distance(item, other);
                let (_, p_drop) =
                    compose_probabilities(cfg.function_type, sub, chi_val, 0.0, delta_drop(d, cfg.k1))
                        .expect("types 1-3");
                if self.rng.random::<f64>() < p_drop {
                    votes += 1;
                }
            }
        }
        2 * votes >= n
    }

    /// Pick attempt; on success the item leaves its cell and is carried.
    pub fn try_pick(&mut self, agent: usize) -> bool {
        let a = &self.agents[agent];
        if a.is_laden() || self.grid.item_at(a.pos).is_none() {
            return false;
        }
        if self.vote_pick(agent) {
            self.force_pick(agent).expect("checked above");
            true
        } else {
            false
        }
    }

    /// Drop attempt; on success the carried item becomes the cell's resident.
    pub fn try_drop(&mut self, agent: usize) -> bool {
        let a = &self.agents[agent];
        if !a.is_laden() || self.grid.item_at(a.pos).is_some() {
            return false;
        }
        if self.vote_drop(agent) {
            self.force_drop(agent).expect("checked above");
            true
        } else {
            false
        }
    }

    fn act(&mut self, agent: usize) {
        let a = &self.agents[agent];
        let on_item = self.grid.item_at(a.pos).is_some();
        if !a.is_laden() && on_item {
            if self.picking {
                self.try_pick(agent);
            }
        } else if a.is_laden() && !on_item {
            self.try_drop(agent);
        }
    }

    /// Moves the agent per the transition rule and deposits at its new cell.
    /// Returns the amount deposited.
    pub fn move_and_deposit(&mut self, agent: usize) -> f64 {
        let (pos, heading) = (self.agents[agent].pos, self.agents[agent].heading);
        if let Some((scores, total)) =
            pheromone::move_scores(&self.grid, pos, heading, &self.cfg, &self.weights)
        {
            let dir = pheromone::sample_direction(&scores, total, &mut self.rng);
            let to = self.grid.neighbors8(pos)[dir];
            self.grid.move_agent(pos, to);
            let a = &mut self.agents[agent];
            a.pos = to;
            a.heading = Heading::new(dir as u8).expect("dir < 8");
        }
        let here = self.agents[agent].pos;
        let n = self.grid.count_items_around(here);
        pheromone::deposit(&mut self.grid, here, n, &self.cfg);
        pheromone::deposit_amount(n, &self.cfg)
    }

    /// Advances one global time step.
    pub fn step(&mut self) {
        self.deposits.resize(self.agents.len(), 0.0);
        match self.cfg.schedule {
            Schedule::Fixed => {
                for i in 0..self.agents.len() {
                    self.act(i);
                    self.deposits[i] = self.move_and_deposit(i);
                }
            }
            Schedule::Shuffled => {
                let mut order: Vec<usize> = (0..self.agents.len()).collect();
                order.shuffle(&mut self.rng);
                for i in order {
                    self.act(i);
                    self.deposits[i] = self.move_and_deposit(i);
                }
            }
        }
        pheromone::evaporate(&mut self.grid, self.cfg.k_evap);
        self.t += 1;
    }

    /// Places every still-carried item on the nearest cell without an item,
    /// agents taken in id order. Returns how many items were placed.
    pub fn place_carried_items(&mut self) -> Result<usize> {
        let mut placed = 0;
        for a in &mut self.agents {
            if let Some(item) = a.carried {
                let cell = self.grid.nearest_empty_cell(a.pos).ok_or(Error::Capacity {
                    items: self.dataset.len(),
                    cells: self.grid.n_cells(),
                })?;
                self.grid.put_item(cell, item)?;
                a.carried = None;
                placed += 1;
            }
        }
        Ok(placed)
    }

    /// Checks item conservation and agent exclusion.
    pub fn check_invariants(&self) -> Result<()> {
        let mut seen = vec![false; self.dataset.len()];
        let mut mark = |id: u32, what: &str| -> Result<()> {
            let slot = seen
                .get_mut(id as usize)
                .ok_or_else(|| Error::Invariant(format!("unknown item {id} {what}")))?;
            if *slot {
                return Err(Error::Invariant(format!("item {id} duplicated ({what})")));
            }
            *slot = true;
            Ok(())
        };
        for id in self.grid.item_slots().iter().flatten() {
            mark(*id, "on grid")?;
        }
        for a in &self.agents {
            if let Some(id) = a.carried {
                mark(id, "carried")?;
            }
        }
        if let Some(lost) = seen.iter().position(|s| !s) {
            return Err(Error::Invariant(format!("item {lost} lost")));
        }
        let on_grid = self.grid.agent_slots().iter().flatten().count();
        if on_grid != self.agents.len() {
            return Err(Error::Invariant(format!(
                "{} agents but {on_grid} occupied agent slots",
                self.agents.len()
            )));
        }
        for a in &self.agents {
            if self.grid.agent_at(a.pos) != Some(a.id) {
                return Err(Error::Invariant(format!("agent {} not at its cell", a.id)));
            }
        }
        if self.grid.pheromone().iter().any(|s| s.is_nan() || *s < 0.0) {
            return Err(Error::Invariant("negative pheromone".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub state: SimState,
    /// Steps spent in the drain phase.
    pub drain_steps: u64,
    /// Items still carried when the drain cap was hit.
    pub forced_placements: usize,
}

/// Runs `t_max` steps from a seeded random layout, then drains.
pub fn run(
    cfg: &SimConfig,
    dataset: Arc<Dataset>,
    observers: &mut [&mut dyn Observer],
) -> Result<RunOutcome> {
    let state = SimState::new(cfg.clone(), dataset)?;
    run_from(state, observers)
}

/// Like [`run`], but from a prepared state.
pub fn run_from(mut state: SimState, observers: &mut [&mut dyn Observer]) -> Result<RunOutcome> {
    let notify = |state: &SimState, observers: &mut [&mut dyn Observer]| {
        for o in observers.iter_mut() {
            if o.wants(state.t) {
                o.observe(state.t, state);
            }
        }
    };
    notify(&state, observers);
    while state.t < state.cfg.t_max {
        state.step();
        notify(&state, observers);
    }

    state.picking = false;
    let mut drain_steps = 0;
    while state.laden_agents() > 0 && drain_steps < state.cfg.drain_cap {
        state.step();
        drain_steps += 1;
    }
    let forced_placements = state.place_carried_items()?;
    state.picking = true;
    state.check_invariants()?;
    for o in observers.iter_mut() {
        o.finish(&state);
    }
    Ok(RunOutcome {
        state,
        drain_steps,
        forced_placements,
    })
}
