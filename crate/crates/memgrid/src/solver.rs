//! Per-time-step DC solve: assemble the weighted Laplacian from unit
//! conductances, pin the terminals (Dirichlet elimination), factor and solve
//! the reduced symmetric positive-definite system, recover per-device branch
//! currents.
//!
//! The reduced system is solved by a direct banded Cholesky factorization;
//! with row-major node numbering a grid Laplacian has half-bandwidth `cols`,
//! so factor + solve is O(n * bw^2) per step.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{DeviceSlot, Lattice, Node};

/// Relative residual bound the solve must meet.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Node potentials and branch currents for one time step.
#[derive(Debug, Clone)]
pub struct SolveResult {
    nodes: Arc<[Node]>,
    potentials: Vec<f64>,
    unit_currents: Vec<f64>,
    device_currents: Vec<[f64; 2]>,
    total_current: f64,
}

impl SolveResult {
    /// Potential at a live node, volt.
    pub fn potential(&self, n: Node) -> Option<f64> {
        self.nodes
            .binary_search(&n)
            .ok()
            .map(|i| self.potentials[i])
    }

    pub fn node_potentials(&self) -> impl Iterator<Item = (Node, f64)> + '_ {
        self.nodes
            .iter()
            .copied()
            .zip(self.potentials.iter().copied())
    }

    /// Signed current through unit `idx` in its a->b reference direction, ampere.
    pub fn unit_current(&self, idx: usize) -> f64 {
        self.unit_currents[idx]
    }

    pub fn unit_currents(&self) -> &[f64] {
        &self.unit_currents
    }

    /// Ohmic branch current through one device of unit `idx`, a->b direction.
    /// Zero when the device's switch is open.
    pub fn device_current(&self, idx: usize, slot: DeviceSlot) -> f64 {
        match slot {
            DeviceSlot::Plus => self.device_currents[idx][0],
            DeviceSlot::Minus => self.device_currents[idx][1],
        }
    }

    /// Current delivered by the source terminal, ampere.
    pub fn total_current(&self) -> f64 {
        self.total_current
    }
}

/// Full weighted-Laplacian description over live, non-isolated nodes.
/// Test- and inspection-facing; the solve path uses the banded workspace.
#[derive(Debug, Clone)]
pub struct ConductanceSystem {
    nodes: Vec<Node>,
    entries: BTreeMap<(usize, usize), f64>,
}

impl ConductanceSystem {
    pub fn dimension(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        *self.entries.get(&(i, j)).unwrap_or(&0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }
}

/// Assemble the symmetric weighted Laplacian: each closed-switch device
/// contributes conductance `1/x` between its unit's endpoints. Nodes of
/// degree zero are excluded.
pub fn assemble_conductance(l: &Lattice) -> ConductanceSystem {
    let live: Vec<Node> = l.live_nodes().collect();
    let mut degree = vec![0usize; live.len()];
    let lookup = |n: Node| live.binary_search(&n).expect("unit endpoint is live");
    let unit_nodes: Vec<(usize, usize)> = l
        .units()
        .iter()
        .map(|u| (lookup(u.node_a), lookup(u.node_b)))
        .collect();
    for (u, &(a, b)) in l.units().iter().zip(&unit_nodes) {
        if u.conductance() > 0.0 {
            degree[a] += 1;
            degree[b] += 1;
        }
    }
    let mut index = vec![usize::MAX; live.len()];
    let mut nodes = Vec::new();
    for (i, &d) in degree.iter().enumerate() {
        if d > 0 {
            index[i] = nodes.len();
            nodes.push(live[i]);
        }
    }
    let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (u, &(a, b)) in l.units().iter().zip(&unit_nodes) {
        let g = u.conductance();
        if g == 0.0 {
            continue;
        }
        let (i, j) = (index[a], index[b]);
        *entries.entry((i, i)).or_insert(0.0) += g;
        *entries.entry((j, j)).or_insert(0.0) += g;
        *entries.entry((i, j)).or_insert(0.0) -= g;
        *entries.entry((j, i)).or_insert(0.0) -= g;
    }
    ConductanceSystem { nodes, entries }
}

/// Cached per-topology solver state: source/sink component, reduced index
/// map and band buffers. Reused across the time steps of one run; device
/// state values may change between solves, topology may not.
pub struct Workspace {
    live: Arc<[Node]>,
    unit_nodes: Vec<(usize, usize)>,
    /// Index into the reduced system, usize::MAX for terminals and
    /// out-of-component nodes.
    reduced: Vec<usize>,
    in_component: Vec<bool>,
    source_idx: usize,
    n_red: usize,
    bw: usize,
    unit_count: usize,
    band: Vec<f64>,
    factor: Vec<f64>,
    rhs: Vec<f64>,
    sol: Vec<f64>,
    scratch: Vec<f64>,
    dev_g: Vec<[f64; 2]>,
}

impl Workspace {
    pub fn new(l: &Lattice) -> Result<Self> {
        l.validate()?;
        let live: Arc<[Node]> = l.live_nodes().collect();
        let lookup = |n: Node| live.binary_search(&n).expect("unit endpoint is live");
        let unit_nodes: Vec<(usize, usize)> = l
            .units()
            .iter()
            .map(|u| (lookup(u.node_a), lookup(u.node_b)))
            .collect();
        let source_idx = lookup(l.source());
        let sink_idx = lookup(l.sink());

        // connected component of the source over conducting units
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); live.len()];
        for (u, &(a, b)) in l.units().iter().zip(&unit_nodes) {
            if u.conductance() > 0.0 {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut in_component = vec![false; live.len()];
        let mut stack = vec![source_idx];
        in_component[source_idx] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !in_component[j] {
                    in_component[j] = true;
                    stack.push(j);
                }
            }
        }
        if !in_component[sink_idx] {
            return Err(Error::NoCircuit(format!(
                "source {} and sink {} are not connected",
                l.source(),
                l.sink()
            )));
        }

        let mut reduced = vec![usize::MAX; live.len()];
        let mut n_red = 0;
        for i in 0..live.len() {
            if in_component[i] && i != source_idx && i != sink_idx {
                reduced[i] = n_red;
                n_red += 1;
            }
        }
        let mut bw = 0;
        for &(a, b) in &unit_nodes {
            if reduced[a] != usize::MAX && reduced[b] != usize::MAX {
                bw = bw.max(reduced[a].abs_diff(reduced[b]));
            }
        }
        Ok(Workspace {
            live,
            unit_nodes,
            reduced,
            in_component,
            source_idx,
            n_red,
            bw,
            unit_count: l.unit_count(),
            band: vec![0.0; n_red * (bw + 1)],
            factor: vec![0.0; n_red * (bw + 1)],
            rhs: vec![0.0; n_red],
            sol: vec![0.0; n_red],
            scratch: vec![0.0; n_red],
            dev_g: vec![[0.0, 0.0]; l.unit_count()],
        })
    }

    /// Solve for node potentials with the sink grounded and the source pinned
    /// at `v_applied`, then recover branch currents from Ohm's law.
    pub fn solve(&mut self, l: &Lattice, v_applied: f64) -> Result<SolveResult> {
        assert_eq!(
            l.unit_count(),
            self.unit_count,
            "workspace topology mismatch"
        );
        let (n, bw) = (self.n_red, self.bw);
        let stride = bw + 1;
        self.band.iter_mut().for_each(|x| *x = 0.0);
        self.rhs.iter_mut().for_each(|x| *x = 0.0);

        for (k, (u, &(a, b))) in l.units().iter().zip(&self.unit_nodes).enumerate() {
            let gp = if u.switch_plus {
                1.0 / u.dev_plus.x
            } else {
                0.0
            };
            let gm = if u.switch_minus {
                1.0 / u.dev_minus.x
            } else {
                0.0
            };
            self.dev_g[k] = [gp, gm];
            let g = gp + gm;
            if g == 0.0 || !self.in_component[a] {
                continue;
            }
            let (ra, rb) = (self.reduced[a], self.reduced[b]);
            let pot_of_terminal = |i: usize| if i == self.source_idx { v_applied } else { 0.0 };
            match (ra != usize::MAX, rb != usize::MAX) {
                (true, true) => {
                    self.band[ra * stride] += g;
                    self.band[rb * stride] += g;
                    let (hi, lo) = if ra > rb { (ra, rb) } else { (rb, ra) };
                    self.band[lo * stride + (hi - lo)] -= g;
                }
                (true, false) => {
                    self.band[ra * stride] += g;
                    self.rhs[ra] += g * pot_of_terminal(b);
                }
                (false, true) => {
                    self.band[rb * stride] += g;
                    self.rhs[rb] += g * pot_of_terminal(a);
                }
                (false, false) => {} // terminal-terminal unit: contributes current only
            }
        }

        if n > 0 {
            self.factor.copy_from_slice(&self.band);
            band_cholesky(&mut self.factor, n, bw)?;
            band_solve(&self.factor, n, bw, &self.rhs, &mut self.sol);
            check_residual(&self.band, n, bw, &self.rhs, &self.sol, &mut self.scratch)?;
        }

        // potentials over all live nodes: pinned terminals, solved component
        // interior, 0 V for disconnected live components
        let mut potentials = vec![0.0; self.live.len()];
        potentials[self.source_idx] = v_applied;
        for i in 0..self.live.len() {
            if self.reduced[i] != usize::MAX {
                potentials[i] = self.sol[self.reduced[i]];
            }
        }
        if potentials.iter().any(|p| !p.is_finite()) {
            return Err(Error::Solver("non-finite node potential".into()));
        }

        let mut unit_currents = vec![0.0; l.unit_count()];
        let mut device_currents = vec![[0.0, 0.0]; l.unit_count()];
        let mut total_current = 0.0;
        for (k, &(a, b)) in self.unit_nodes.iter().enumerate() {
            let dv = potentials[a] - potentials[b];
            let [gp, gm] = self.dev_g[k];
            let ip = dv * gp;
            let im = dv * gm;
            device_currents[k] = [ip, im];
            unit_currents[k] = ip + im;
            if a == self.source_idx {
                total_current += unit_currents[k];
            } else if b == self.source_idx {
                total_current -= unit_currents[k];
            }
        }

        Ok(SolveResult {
            nodes: self.live.clone(),
            potentials,
            unit_currents,
            device_currents,
            total_current,
        })
    }
}

/// One-shot solve; builds the workspace internally.
pub fn solve_potentials(l: &Lattice, v_applied: f64) -> Result<SolveResult> {
    Workspace::new(l)?.solve(l, v_applied)
}

/// Signed currents through the horizontal units crossing the vertical
/// boundary between `col_boundary` and `col_boundary + 1`, one entry per row
/// (zero where the crossing unit was removed).
pub fn cross_section_currents(
    sr: &SolveResult,
    l: &Lattice,
    col_boundary: usize,
) -> Result<Vec<f64>> {
    if col_boundary >= l.cols() - 1 {
        return Err(Error::InvalidInput(format!(
            "entropy_cut: column boundary {} out of range 0..{}",
            col_boundary,
            l.cols() - 1
        )));
    }
    Ok((0..l.rows())
        .map(|r| {
            l.horizontal_unit(r, col_boundary)
                .map_or(0.0, |k| sr.unit_current(k))
        })
        .collect())
}

/// Net signed current into each live non-terminal node; all entries should be
/// ~0 by Kirchhoff's current law. Diagnostic used by the test suites.
pub fn kcl_residuals(l: &Lattice, sr: &SolveResult) -> Vec<(Node, f64)> {
    let mut acc: BTreeMap<Node, f64> = l.live_nodes().map(|n| (n, 0.0)).collect();
    for (k, u) in l.units().iter().enumerate() {
        let i = sr.unit_current(k);
        *acc.get_mut(&u.node_a).unwrap() -= i;
        *acc.get_mut(&u.node_b).unwrap() += i;
    }
    acc.remove(&l.source());
    acc.remove(&l.sink());
    acc.into_iter().collect()
}

/// In-place banded Cholesky on column-major band storage,
/// `a[j*(bw+1) + d] = A[j+d, j]`: each column's in-band entries are
/// contiguous, so the update loops run over plain slices. Fails on
/// non-positive pivots.
fn band_cholesky(a: &mut [f64], n: usize, bw: usize) -> Result<()> {
    let stride = bw + 1;
    for j in 0..n {
        for k in j.saturating_sub(bw)..j {
            let ljk = a[k * stride + (j - k)];
            if ljk != 0.0 {
                // A[i,j] -= L[j,k] * L[i,k] for i in j..=min(k+bw, n-1)
                let len = (k + bw).min(n - 1) - j + 1;
                let (head, tail) = a.split_at_mut(j * stride);
                let col_k = &head[k * stride + (j - k)..k * stride + (j - k) + len];
                let col_j = &mut tail[..len];
                for t in 0..len {
                    col_j[t] -= ljk * col_k[t];
                }
            }
        }
        let d = a[j * stride];
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Solver(format!(
                "non-positive pivot {} at row {} (system singular or indefinite)",
                d, j
            )));
        }
        let s = d.sqrt();
        a[j * stride] = s;
        let inv = 1.0 / s;
        for t in 1..=bw.min(n - 1 - j) {
            a[j * stride + t] *= inv;
        }
    }
    Ok(())
}

/// Solve `L L^T x = b` given the column-major banded factor.
fn band_solve(fac: &[f64], n: usize, bw: usize, b: &[f64], x: &mut [f64]) {
    let stride = bw + 1;
    x.copy_from_slice(b);
    for j in 0..n {
        let xj = x[j] / fac[j * stride];
        x[j] = xj;
        for t in 1..=bw.min(n - 1 - j) {
            x[j + t] -= fac[j * stride + t] * xj;
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for t in 1..=bw.min(n - 1 - i) {
            s -= fac[i * stride + t] * x[i + t];
        }
        x[i] = s / fac[i * stride];
    }
}

fn check_residual(
    band: &[f64],
    n: usize,
    bw: usize,
    b: &[f64],
    x: &[f64],
    r: &mut [f64],
) -> Result<()> {
    let stride = bw + 1;
    let mut a_inf: f64 = 0.0;
    for i in 0..n {
        let mut s = band[i * stride] * x[i];
        let mut row_sum = band[i * stride].abs();
        for d in 1..=bw.min(i) {
            // A[i, i-d] lives in column i-d at offset d
            let v = band[(i - d) * stride + d];
            s += v * x[i - d];
            row_sum += v.abs();
        }
        for d in 1..=bw.min(n - 1 - i) {
            // A[i, i+d] = A[i+d, i] lives in column i at offset d
            let v = band[i * stride + d];
            s += v * x[i + d];
            row_sum += v.abs();
        }
        r[i] = s - b[i];
        a_inf = a_inf.max(row_sum);
    }
    let r_inf = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let x_inf = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let b_inf = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = a_inf * x_inf + b_inf;
    if scale > 0.0 && r_inf > RESIDUAL_TOLERANCE * scale {
        return Err(Error::Solver(format!(
            "residual {:.3e} exceeds {:.1e} relative (scale {:.3e})",
            r_inf, RESIDUAL_TOLERANCE, scale
        )));
    }
    Ok(())
}
