//! Plain-text gridworld maps and the shipped four-rooms layout.
//!
//! Maps use `#` for walls and `.` for open cells. Open cells are numbered in
//! row-major order; that numbering is the state index of the resulting MDP.

use std::collections::VecDeque;

use crate::error::{config, Result};
use crate::mdp::{Mdp, Policy};

/// Four-rooms layout shipped with the crate (105 open cells, 11x11 interior).
pub const FOUR_ROOMS_MAP: &str = include_str!("../maps/four_rooms.txt");

/// Movement offsets for the actions up, right, down, left.
pub const MOVES: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMap {
    rows: usize,
    cols: usize,
    cells: Vec<Option<usize>>,
    states: Vec<(usize, usize)>,
}

impl GridMap {
    /// Parses a map and checks that every open cell is reachable from every other.
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().map(str::trim_end).filter(|l| !l.is_empty()).collect();
        if lines.is_empty() {
            return Err(config("empty gridworld map"));
        }
        let cols = lines[0].chars().count();
        let rows = lines.len();
        let mut cells = Vec::with_capacity(rows * cols);
        let mut states = Vec::new();
        for (r, line) in lines.iter().enumerate() {
            if line.chars().count() != cols {
                return Err(config(format!("map row {r} has a different width")));
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '#' => cells.push(None),
                    '.' => {
                        cells.push(Some(states.len()));
                        states.push((r, c));
                    }
                    other => return Err(config(format!("unknown map symbol {other:?} at ({r}, {c})"))),
                }
            }
        }
        if states.is_empty() {
            return Err(config("map has no open cells"));
        }
        let map = GridMap {
            rows,
            cols,
            cells,
            states,
        };
        let reached = map.reachable_from(0);
        if reached != map.states.len() {
            return Err(config(format!(
                "map is disconnected: {} of {} open cells reachable",
                reached,
                map.states.len()
            )));
        }
        Ok(map)
    }

    fn reachable_from(&self, start: usize) -> usize {
        let mut seen = vec![false; self.states.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut count = 0;
        while let Some(s) = queue.pop_front() {
            count += 1;
            for a in 0..MOVES.len() {
                let next = self.step(s, a);
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        count
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    /// State index of the open cell at `(row, col)`, if any.
    pub fn state_at(&self, row: usize, col: usize) -> Option<usize> {
        if row < self.rows && col < self.cols {
            self.cells[row * self.cols + col]
        } else {
            None
        }
    }

    pub fn cell_of(&self, state: usize) -> (usize, usize) {
        self.states[state]
    }

    /// Deterministic successor; bumping into a wall or the border leaves the agent in place.
    pub fn step(&self, state: usize, action: usize) -> usize {
        let (r, c) = self.states[state];
        let (dr, dc) = MOVES[action];
        let (nr, nc) = (r as isize + dr, c as isize + dc);
        if nr < 0 || nc < 0 {
            return state;
        }
        self.state_at(nr as usize, nc as usize).unwrap_or(state)
    }

    /// Zero-reward MDP with the four movement actions.
    pub fn to_mdp(&self) -> Result<Mdp> {
        let n = self.n_states();
        let na = MOVES.len();
        let mut kernel = vec![0.0; n * na * n];
        for s in 0..n {
            for a in 0..na {
                kernel[(s * na + a) * n + self.step(s, a)] = 1.0;
            }
        }
        Mdp::new(n, na, kernel, vec![0.0; n * na])
    }
}

pub fn four_rooms_map() -> GridMap {
    GridMap::parse(FOUR_ROOMS_MAP).expect("shipped four-rooms map is valid")
}

/// Four-rooms MDP with no reward and the uniform random policy.
pub fn build_four_rooms() -> (Mdp, Policy) {
    let mdp = four_rooms_map()
        .to_mdp()
        .expect("shipped four-rooms map yields a valid MDP");
    let policy = Policy::uniform(mdp.n_states(), mdp.n_actions());
    (mdp, policy)
}
