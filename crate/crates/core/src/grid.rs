//! Toroidal lattice holding items, agents and the pheromone field.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Moore offsets `(dx, dy)` in heading order: N, NE, E, SE, S, SW, W, NW.
/// `y` grows downward.
pub const OFFSETS: [(isize, isize); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

#[inline]
fn wrap(coord: usize, delta: isize, side: usize) -> usize {
    let s = side as isize;
    let v = coord as isize + delta;
    if v >= 0 && v < s {
        v as usize
    } else if v < 0 && v >= -s {
        (v + s) as usize
    } else if v >= s && v < 2 * s {
        (v - s) as usize
    } else {
        v.rem_euclid(s) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub x: usize,
    pub y: usize,
}

impl Pos {
    pub const fn new(x: usize, y: usize) -> Self {
        Pos { x, y }
    }
}

/// Copy of one lattice site.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub pheromone: f64,
    pub item: Option<u32>,
    pub agent: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    side: usize,
    pheromone: Vec<f64>,
    items: Vec<Option<u32>>,
    agents: Vec<Option<u32>>,
}

impl Grid {
    pub fn new(side: usize) -> Result<Self> {
        if side < 3 {
            return Err(Error::Config(format!("grid side {side} is below 3")));
        }
        let n = side * side;
        Ok(Grid {
            side,
            pheromone: vec![0.0; n],
            items: vec![None; n],
            agents: vec![None; n],
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn n_cells(&self) -> usize {
        self.side * self.side
    }

    #[inline]
    pub fn index(&self, pos: Pos) -> usize {
        pos.y * self.side + pos.x
    }

    #[inline]
    pub fn pos(&self, index: usize) -> Pos {
        Pos::new(index % self.side, index / self.side)
    }

    /// Position reached by moving `(dx, dy)` from `pos` with wrap-around.
    #[inline]
    pub fn offset(&self, pos: Pos, dx: isize, dy: isize) -> Pos {
        Pos::new(wrap(pos.x, dx, self.side), wrap(pos.y, dy, self.side))
    }

    /// The 8 Moore neighbours, ordered by heading index.
    #[inline]
    pub fn neighbors8(&self, pos: Pos) -> [Pos; 8] {
        let last = self.side - 1;
        let (x, y) = (pos.x, pos.y);
        let xm = if x == 0 { last } else { x - 1 };
        let xp = if x == last { 0 } else { x + 1 };
        let ym = if y == 0 { last } else { y - 1 };
        let yp = if y == last { 0 } else { y + 1 };
        [
            Pos::new(x, ym),
            Pos::new(xp, ym),
            Pos::new(xp, y),
            Pos::new(xp, yp),
            Pos::new(x, yp),
            Pos::new(xm, yp),
            Pos::new(xm, y),
            Pos::new(xm, ym),
        ]
    }

    pub fn cell(&self, pos: Pos) -> Cell {
        let i = self.index(pos);
        Cell {
            pheromone: self.pheromone[i],
            item: self.items[i],
            agent: self.agents[i],
        }
    }

    #[inline]
    pub fn item_at(&self, pos: Pos) -> Option<u32> {
        self.items[self.index(pos)]
    }

    #[inline]
    pub fn agent_at(&self, pos: Pos) -> Option<u32> {
        self.agents[self.index(pos)]
    }

    #[inline]
    pub fn pheromone_at(&self, pos: Pos) -> f64 {
        self.pheromone[self.index(pos)]
    }

    pub fn pheromone(&self) -> &[f64] {
        &self.pheromone
    }

    pub fn pheromone_mut(&mut self) -> &mut [f64] {
        &mut self.pheromone
    }

    /// Item slot per cell in row-major order.
    pub fn item_slots(&self) -> &[Option<u32>] {
        &self.items
    }

    pub fn agent_slots(&self) -> &[Option<u32>] {
        &self.agents
    }

    pub fn set_pheromone(&mut self, pos: Pos, value: f64) {
        debug_assert!(value >= 0.0);
        let i = self.index(pos);
        self.pheromone[i] = value;
    }

    /// Puts an item on an empty cell.
    pub fn put_item(&mut self, pos: Pos, item: u32) -> Result<()> {
        let i = self.index(pos);
        match self.items[i] {
            None => {
                self.items[i] = Some(item);
                Ok(())
            }
            Some(other) => Err(Error::Invariant(format!(
                "cell ({}, {}) already holds item {other}",
                pos.x, pos.y
            ))),
        }
    }

    pub fn take_item(&mut self, pos: Pos) -> Option<u32> {
        let i = self.index(pos);
        self.items[i].take()
    }

    pub fn put_agent(&mut self, pos: Pos, agent: u32) -> Result<()> {
        let i = self.index(pos);
        match self.agents[i] {
            None => {
                self.agents[i] = Some(agent);
                Ok(())
            }
            Some(other) => Err(Error::Invariant(format!(
                "cell ({}, {}) already holds agent {other}",
                pos.x, pos.y
            ))),
        }
    }

    pub(crate) fn move_agent(&mut self, from: Pos, to: Pos) {
        let (a, b) = (self.index(from), self.index(to));
        debug_assert!(self.agents[b].is_none());
        self.agents[b] = self.agents[a].take();
    }

    /// Number of occupied item slots among the 8 neighbours; the centre is excluded.
    pub fn count_items_around(&self, pos: Pos) -> usize {
        self.neighbors8(pos)
            .iter()
            .filter(|p| self.item_at(**p).is_some())
            .count()
    }

    pub fn resident_items(&self) -> usize {
        self.items.iter().filter(|s| s.is_some()).count()
    }

    /// Scatters items `0..n_items` over distinct cells drawn uniformly at random.
    pub fn place_items_randomly<R: Rng + ?Sized>(&mut self, n_items: usize, rng: &mut R) -> Result<()> {
        let free: Vec<usize> = (0..self.n_cells()).filter(|&i| self.items[i].is_none()).collect();
        if n_items > free.len() {
            return Err(Error::Capacity {
                items: n_items,
                cells: free.len(),
            });
        }
        for (item, k) in index::sample(rng, free.len(), n_items).into_iter().enumerate() {
            self.items[free[k]] = Some(item as u32);
        }
        Ok(())
    }

    /// Nearest cell without a resident item, searching square rings of growing
    /// radius around `pos`; within a ring cells are visited row by row in
    /// offset order, so the result only depends on relative positions.
    pub fn nearest_empty_cell(&self, pos: Pos) -> Option<Pos> {
        let max_r = (self.side / 2) as isize;
        for r in 0..=max_r {
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx.abs() != r && dy.abs() != r {
                        continue;
                    }
                    let p = self.offset(pos, dx, dy);
                    if self.item_at(p).is_none() {
                        return Some(p);
                    }
                }
            }
        }
        None
    }
}
