//! The generation loop: Hamiltonian transient, then the synchronous rule.
//!
//! One generation takes the binary state `n^k`, evolves its density field
//! through the transient (`n_k(tau) = M n^k`), and applies the
//! sigma-widened birth/survival rule synchronously to produce `n^{k+1}`.
//! With `tau = 0` and `sigma = 0` the pipeline is bit-identical to the
//! classical Game of Life on the same fixed-border Moore lattice. Because
//! the state space is finite and the map deterministic, every trajectory
//! ends in a cycle; [`detect_cycle`] finds the exact transient and period
//! by first-repeat detection.

use std::collections::HashMap;

use crate::lattice::{BinaryState, DensityField, LatticeSpec, NeighborhoodTable};
use crate::propagator::{HamiltonianEig, TransferMatrix};
use crate::{Error, Result};

/// Which value the rule's own-cell branch selection reads.
///
/// The neighbor sums always use the evolved densities; the branch choice
/// (survival thresholds vs birth thresholds) needs a binary alive/dead
/// call for the cell itself, and the transient leaves only a continuous
/// density. `Evolved` classifies by that density with threshold 1/2 (ties
/// alive), matching the reading in which the rule acts on the evolved
/// state. `Prior` branches on the cell's binary value from before the
/// transient. Both are kept because published surfaces do not pin the
/// choice down; `Evolved` is the default everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RuleReading {
    #[default]
    Evolved,
    Prior,
}

impl RuleReading {
    pub fn name(self) -> &'static str {
        match self {
            RuleReading::Evolved => "evolved",
            RuleReading::Prior => "prior",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "evolved" => Ok(RuleReading::Evolved),
            "prior" => Ok(RuleReading::Prior),
            other => Err(Error::Config(format!(
                "unknown rule reading '{other}' (expected 'evolved' or 'prior')"
            ))),
        }
    }
}

/// Parameters of the sigma-widened rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleParams {
    pub sigma: f64,
    pub reading: RuleReading,
}

impl RuleParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::Config(format!(
                "sigma must be nonnegative, got {sigma}"
            )));
        }
        Ok(RuleParams {
            sigma,
            reading: RuleReading::Evolved,
        })
    }

    pub fn with_reading(mut self, reading: RuleReading) -> Self {
        self.reading = reading;
        self
    }

    /// `sigma = 0`: thresholds of the classical rule.
    pub fn classical() -> Self {
        RuleParams {
            sigma: 0.0,
            reading: RuleReading::Evolved,
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: LatticeSpec,
    pub tau: f64,
    pub rule: RuleParams,
    /// Number of generations recorded, `n^0 .. n^{T-1}`.
    pub generations: usize,
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.generations == 0 {
            return Err(Error::Config("generation count must be at least 1".into()));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::Config(format!(
                "tau must be nonnegative, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

/// Recorded run: binary state and its evolved density per generation.
#[derive(Debug, Clone)]
pub struct GenerationTrace {
    states: Vec<BinaryState>,
    densities: Vec<DensityField>,
}

impl GenerationTrace {
    pub fn generations(&self) -> usize {
        self.states.len()
    }

    pub fn cell_count(&self) -> usize {
        self.states.first().map_or(0, BinaryState::cell_count)
    }

    pub fn state(&self, k: usize) -> &BinaryState {
        &self.states[k]
    }

    /// Evolved density `n_k(tau)` that produced `n^{k+1}`.
    pub fn density(&self, k: usize) -> &DensityField {
        &self.densities[k]
    }

    pub fn states(&self) -> &[BinaryState] {
        &self.states
    }

    pub fn densities(&self) -> &[DensityField] {
        &self.densities
    }

    /// Wraps a list of binary states as a trace, using the states
    /// themselves as their density fields (the `tau = 0` convention).
    /// The states need not come from the generation loop.
    pub fn from_states(states: Vec<BinaryState>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Config("a trace needs at least one state".into()));
        }
        let cells = states[0].cell_count();
        if states.iter().any(|s| s.cell_count() != cells) {
            return Err(Error::Config("trace states differ in cell count".into()));
        }
        let densities = states.iter().map(DensityField::from_state).collect();
        Ok(GenerationTrace { states, densities })
    }
}

/// Iterates the classical rule directly, with no transfer matrix anywhere
/// in the path: the reference implementation quantum runs are compared to.
pub fn classical_trace(
    table: &NeighborhoodTable,
    initial: &BinaryState,
    generations: usize,
) -> Result<GenerationTrace> {
    if generations == 0 {
        return Err(Error::Config("generation count must be at least 1".into()));
    }
    if initial.cell_count() != table.cell_count() {
        return Err(Error::Config(format!(
            "initial state has {} cells but the table covers {}",
            initial.cell_count(),
            table.cell_count()
        )));
    }
    let mut states = Vec::with_capacity(generations);
    let mut state = initial.clone();
    for _ in 0..generations {
        let next = classical_rule_step(&state, table);
        states.push(state);
        state = next;
    }
    GenerationTrace::from_states(states)
}

/// Exact cycle structure of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleReport {
    /// Index of the first state on the cycle.
    pub transient: usize,
    /// Cycle length; meaningful only when `detected`.
    pub period: usize,
    /// False when the generation budget ran out before a repeat.
    pub detected: bool,
}

/// One synchronous step of the classical rule: an alive cell survives with
/// 2 or 3 alive neighbors, a dead cell is born with exactly 3.
pub fn classical_rule_step(state: &BinaryState, table: &NeighborhoodTable) -> BinaryState {
    debug_assert_eq!(state.cell_count(), table.cell_count());
    let mut next = BinaryState::dead(state.cell_count());
    for cell in 0..state.cell_count() {
        let alive_neighbors = table
            .neighbors(cell)
            .iter()
            .filter(|&&n| state.is_alive(n))
            .count();
        let alive = if state.is_alive(cell) {
            alive_neighbors == 2 || alive_neighbors == 3
        } else {
            alive_neighbors == 3
        };
        if alive {
            next.set(cell, true);
        }
    }
    next
}

/// One synchronous step of the sigma-widened rule on evolved densities.
///
/// Per cell: the neighbor sum `S` adds the evolved densities over the
/// Moore neighborhood; the own-cell branch is selected per
/// [`RuleReading`]; an alive-branch cell ends alive iff
/// `2 - sigma <= S <= 3 + sigma`, a dead-branch cell iff
/// `3 - sigma <= S <= 3 + sigma` (closed intervals exactly as stated).
pub fn quantum_rule_step(
    density: &DensityField,
    prior: &BinaryState,
    rule: &RuleParams,
    table: &NeighborhoodTable,
) -> BinaryState {
    debug_assert_eq!(density.cell_count(), table.cell_count());
    debug_assert_eq!(prior.cell_count(), table.cell_count());
    let mut next = BinaryState::dead(prior.cell_count());
    for cell in 0..prior.cell_count() {
        let sum: f64 = table.neighbors(cell).iter().map(|&n| density.get(n)).sum();
        let own_alive = match rule.reading {
            RuleReading::Evolved => density.get(cell) >= 0.5,
            RuleReading::Prior => prior.is_alive(cell),
        };
        let lower = if own_alive {
            2.0 - rule.sigma
        } else {
            3.0 - rule.sigma
        };
        if lower <= sum && sum <= 3.0 + rule.sigma {
            next.set(cell, true);
        }
    }
    next
}

/// Runs the full generation loop for `config.generations` generations,
/// recording each binary state with the evolved density that produced its
/// successor. Pure in its inputs: identical arguments give a bit-identical
/// trace.
pub fn run(
    config: &RunConfig,
    transfer: &TransferMatrix,
    initial: &BinaryState,
) -> Result<GenerationTrace> {
    config.validate()?;
    let cells = config.spec.cell_count();
    if initial.cell_count() != cells {
        return Err(Error::Config(format!(
            "initial state has {} cells but the lattice has {cells}",
            initial.cell_count()
        )));
    }
    if transfer.dim() != cells {
        return Err(Error::Config(format!(
            "transfer matrix dimension {} does not match the {cells}-cell lattice",
            transfer.dim()
        )));
    }
    if transfer.tau() != config.tau {
        return Err(Error::Config(format!(
            "transfer matrix was built for tau={} but the run asks for tau={}",
            transfer.tau(),
            config.tau
        )));
    }
    let table = NeighborhoodTable::moore(&config.spec);
    let mut states = Vec::with_capacity(config.generations);
    let mut densities = Vec::with_capacity(config.generations);
    let mut state = initial.clone();
    for _ in 0..config.generations {
        let density = transfer.evolve_state(&state)?;
        let next = quantum_rule_step(&density, &state, &config.rule, &table);
        states.push(state);
        densities.push(density);
        state = next;
    }
    Ok(GenerationTrace { states, densities })
}

/// Samples the continuous piece of the dynamics inside one transient:
/// densities at `t = j*tau/substeps` for `j = 0..=substeps`. The `j = 0`
/// sample is the binary input itself; the last sample is the full-transient
/// density the rule would see.
pub fn sample_transient(
    eig: &HamiltonianEig,
    tau: f64,
    state: &BinaryState,
    substeps: usize,
) -> Result<Vec<DensityField>> {
    if substeps == 0 {
        return Err(Error::Config("substeps must be at least 1".into()));
    }
    if !(tau >= 0.0) {
        return Err(Error::Config(format!("tau must be nonnegative, got {tau}")));
    }
    let mut samples = Vec::with_capacity(substeps + 1);
    for j in 0..=substeps {
        let t = tau * j as f64 / substeps as f64;
        samples.push(eig.transfer_matrix(t).evolve_state(state)?);
    }
    Ok(samples)
}

/// Exact first-repeat cycle detection over a state stream.
///
/// Indexes every visited state; on the first repeat, the transient is the
/// repeated state's first-occurrence index and the period is the gap.
/// `detected = false` when `max_generations` states pass without a repeat
/// (then `transient = max_generations` and `period = 0` as placeholders).
pub fn detect_cycle(
    states: impl IntoIterator<Item = BinaryState>,
    max_generations: usize,
) -> CycleReport {
    let mut seen: HashMap<BinaryState, usize> = HashMap::new();
    for (k, state) in states.into_iter().take(max_generations).enumerate() {
        if let Some(&first) = seen.get(&state) {
            return CycleReport {
                transient: first,
                period: k - first,
                detected: true,
            };
        }
        seen.insert(state, k);
    }
    CycleReport {
        transient: max_generations,
        period: 0,
        detected: false,
    }
}

/// Lazily yields the trajectory `n^0, n^1, ...` of the generation loop,
/// for cycle detection without storing a full trace.
pub struct Trajectory<'a> {
    transfer: &'a TransferMatrix,
    rule: RuleParams,
    table: &'a NeighborhoodTable,
    state: BinaryState,
}

impl<'a> Trajectory<'a> {
    pub fn new(
        transfer: &'a TransferMatrix,
        rule: RuleParams,
        table: &'a NeighborhoodTable,
        initial: BinaryState,
    ) -> Result<Self> {
        if transfer.dim() != table.cell_count() || initial.cell_count() != table.cell_count() {
            return Err(Error::Config(format!(
                "trajectory dimensions disagree: matrix {}, table {}, state {}",
                transfer.dim(),
                table.cell_count(),
                initial.cell_count()
            )));
        }
        Ok(Trajectory {
            transfer,
            rule,
            table,
            state: initial,
        })
    }
}

impl Iterator for Trajectory<'_> {
    type Item = BinaryState;

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.state.clone();
        let density = self
            .transfer
            .evolve_state(&current)
            .expect("dimensions checked at construction");
        self.state = quantum_rule_step(&density, &current, &self.rule, self.table);
        Some(current)
    }
}
