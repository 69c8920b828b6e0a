//! Network topology: a square grid of nodes joined by symmetric two-device
//! basic units, with node removal (damage) and source/sink designation.

use std::collections::BTreeSet;
use std::fmt;

use crate::device::{DeviceParams, DeviceState, Orientation};
use crate::error::{Error, Result};

/// Grid node id: (row, col), 0-indexed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Node {
    pub row: usize,
    pub col: usize,
}

impl Node {
    pub fn new(row: usize, col: usize) -> Self {
        Node { row, col }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Which of a unit's two antiparallel devices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviceSlot {
    /// Oriented a->b.
    Plus,
    /// Oriented b->a.
    Minus,
}

/// Two antiparallel memristive devices in parallel between two adjacent
/// nodes, each behind its own ideal access switch.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicUnit {
    pub node_a: Node,
    pub node_b: Node,
    pub dev_plus: DeviceState,
    pub dev_minus: DeviceState,
    pub switch_plus: bool,
    pub switch_minus: bool,
}

impl BasicUnit {
    /// New unit with both devices at `x0` and both switches closed.
    /// `node_a` is always the lexicographically smaller endpoint; a->b is the
    /// unit's reference direction.
    pub fn new(node_a: Node, node_b: Node, x0: f64) -> Self {
        debug_assert!(node_a < node_b);
        BasicUnit {
            node_a,
            node_b,
            dev_plus: DeviceState::new(x0, Orientation::Forward),
            dev_minus: DeviceState::new(x0, Orientation::Reverse),
            switch_plus: true,
            switch_minus: true,
        }
    }

    pub fn endpoints(&self) -> (Node, Node) {
        (self.node_a, self.node_b)
    }

    pub fn device(&self, slot: DeviceSlot) -> &DeviceState {
        match slot {
            DeviceSlot::Plus => &self.dev_plus,
            DeviceSlot::Minus => &self.dev_minus,
        }
    }

    /// Sum of `1/x` over closed-switch devices, siemens. Zero if both open.
    pub fn conductance(&self) -> f64 {
        let mut g = 0.0;
        if self.switch_plus {
            g += 1.0 / self.dev_plus.x;
        }
        if self.switch_minus {
            g += 1.0 / self.dev_minus.x;
        }
        g
    }

    /// Parallel resistance of the closed-switch devices, ohm.
    /// `f64::INFINITY` when both switches are open (branch carries nothing).
    pub fn resistance(&self) -> f64 {
        let g = self.conductance();
        if g == 0.0 {
            f64::INFINITY
        } else {
            1.0 / g
        }
    }
}

/// Target limiting state for network initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitState {
    /// High resistance: every device at `r_off`.
    Off,
    /// Low resistance: every device at `r_on`.
    On,
}

/// Square-grid memristive network snapshot. Value semantics: cloned freely,
/// one writer per simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    rows: usize,
    cols: usize,
    params: DeviceParams,
    units: Vec<BasicUnit>,
    removed: BTreeSet<Node>,
    source: Node,
    sink: Node,
}

impl Lattice {
    /// Build an intact rows x cols grid with every device at `x0`, all
    /// switches closed and terminals defaulting to the middle row's opposite
    /// boundary columns.
    pub fn build_grid(rows: usize, cols: usize, params: DeviceParams, x0: f64) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::InvalidInput(format!(
                "grid.rows/grid.cols: need at least 2x2, got {}x{}",
                rows, cols
            )));
        }
        params.validate()?;
        if !(params.r_on <= x0 && x0 <= params.r_off) {
            return Err(Error::InvalidInput(format!(
                "initial state x0={} outside [r_on, r_off] = [{}, {}]",
                x0, params.r_on, params.r_off
            )));
        }
        // horizontal units row-major, then vertical units row-major
        let mut units = Vec::with_capacity(rows * (cols - 1) + (rows - 1) * cols);
        for r in 0..rows {
            for c in 0..cols - 1 {
                units.push(BasicUnit::new(Node::new(r, c), Node::new(r, c + 1), x0));
            }
        }
        for r in 0..rows - 1 {
            for c in 0..cols {
                units.push(BasicUnit::new(Node::new(r, c), Node::new(r + 1, c), x0));
            }
        }
        Ok(Lattice {
            rows,
            cols,
            params,
            units,
            removed: BTreeSet::new(),
            source: Node::new(rows / 2, 0),
            sink: Node::new(rows / 2, cols - 1),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn source(&self) -> Node {
        self.source
    }

    pub fn sink(&self) -> Node {
        self.sink
    }

    pub fn units(&self) -> &[BasicUnit] {
        &self.units
    }

    pub fn units_mut(&mut self) -> &mut [BasicUnit] {
        &mut self.units
    }

    pub fn removed_nodes(&self) -> &BTreeSet<Node> {
        &self.removed
    }

    pub fn in_bounds(&self, n: Node) -> bool {
        n.row < self.rows && n.col < self.cols
    }

    pub fn is_live(&self, n: Node) -> bool {
        self.in_bounds(n) && !self.removed.contains(&n)
    }

    /// Live nodes in row-major order.
    pub fn live_nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.rows)
            .flat_map(move |r| (0..self.cols).map(move |c| Node::new(r, c)))
            .filter(move |n| !self.removed.contains(n))
    }

    pub fn live_node_count(&self) -> usize {
        self.rows * self.cols - self.removed.len()
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    /// Index of the unit joining `a` and `b`, if present.
    pub fn unit_between(&self, a: Node, b: Node) -> Option<usize> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.units.iter().position(|u| (u.node_a, u.node_b) == key)
    }

    /// Index of the horizontal unit (row, col)-(row, col+1), if present.
    pub fn horizontal_unit(&self, row: usize, col: usize) -> Option<usize> {
        self.unit_between(Node::new(row, col), Node::new(row, col + 1))
    }

    /// Re-designate source and sink. Both must be distinct live nodes.
    pub fn set_terminals(&mut self, source: Node, sink: Node) -> Result<()> {
        for (name, n) in [("source", source), ("sink", sink)] {
            if !self.is_live(n) {
                return Err(Error::Config(format!(
                    "{}: node {} is not a live grid node",
                    name, n
                )));
            }
        }
        if source == sink {
            return Err(Error::Config(format!(
                "source/sink: must be distinct, both are {}",
                source
            )));
        }
        self.source = source;
        self.sink = sink;
        Ok(())
    }

    /// Remove the given nodes and every incident unit, keeping the states of
    /// all surviving devices. Source and sink cannot be removed.
    pub fn remove_nodes(&self, nodes: &[Node]) -> Result<Lattice> {
        for &n in nodes {
            if !self.in_bounds(n) {
                return Err(Error::InvalidInput(format!(
                    "damage: node {} outside grid",
                    n
                )));
            }
            if n == self.source || n == self.sink {
                return Err(Error::InvalidInput(format!(
                    "damage: cannot remove terminal node {}",
                    n
                )));
            }
        }
        let mut out = self.clone();
        out.removed.extend(nodes.iter().copied());
        out.units
            .retain(|u| !out.removed.contains(&u.node_a) && !out.removed.contains(&u.node_b));
        out.validate()?;
        Ok(out)
    }

    /// Remove a single unit, keeping both endpoint nodes. Plumbing for
    /// unit-level damage; presets only remove whole nodes.
    pub fn remove_unit(&self, a: Node, b: Node) -> Result<Lattice> {
        let idx = self.unit_between(a, b).ok_or_else(|| {
            Error::InvalidInput(format!("remove_unit: no unit between {} and {}", a, b))
        })?;
        let mut out = self.clone();
        out.units.remove(idx);
        Ok(out)
    }

    /// Set every device to the chosen limiting state. Models the per-device
    /// switch access as an instantaneous state write; idempotent.
    pub fn initialize(&mut self, target: LimitState) {
        let x = match target {
            LimitState::Off => self.params.r_off,
            LimitState::On => self.params.r_on,
        };
        for u in &mut self.units {
            u.dev_plus.x = x;
            u.dev_minus.x = x;
        }
    }

    /// Incidence consistency: every unit's endpoints are live, terminals are
    /// live and distinct, all states within bounds.
    pub fn validate(&self) -> Result<()> {
        for u in &self.units {
            if !self.is_live(u.node_a) || !self.is_live(u.node_b) {
                return Err(Error::InvalidInput(format!(
                    "unit {}-{} references a removed node",
                    u.node_a, u.node_b
                )));
            }
            for s in [&u.dev_plus, &u.dev_minus] {
                if !(self.params.r_on <= s.x && s.x <= self.params.r_off) {
                    return Err(Error::InvalidInput(format!(
                        "unit {}-{} device state {} outside [{}, {}]",
                        u.node_a, u.node_b, s.x, self.params.r_on, self.params.r_off
                    )));
                }
            }
        }
        if !self.is_live(self.source) || !self.is_live(self.sink) || self.source == self.sink {
            return Err(Error::InvalidInput(
                "terminals must be distinct live nodes".into(),
            ));
        }
        Ok(())
    }

    /// Same grid dimensions, removed set and unit endpoints (device states may differ).
    pub fn same_topology(&self, other: &Lattice) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.removed == other.removed
            && self.units.len() == other.units.len()
            && self
                .units
                .iter()
                .zip(&other.units)
                .all(|(a, b)| a.endpoints() == b.endpoints())
    }
}
