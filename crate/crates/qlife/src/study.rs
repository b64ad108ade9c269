//! Exhaustive classification of the 5x5 classical Game of Life and sampled
//! quantum-vs-classical comparison surfaces.
//!
//! Every one of the 2^25 initial conditions is iterated with a bit-parallel
//! stepper (25-bit states, precomputed neighbor masks) until its trajectory
//! repeats, recording period, transient, and the attractor it falls into.
//! Attractors are registered under a canonical representative (the minimum
//! encoded state on the cycle), so basin sizes and per-period cycle counts
//! come out of one sweep.
//!
//! Unlike the fixed-border lattice of the large-lattice runs, the 5x5
//! census uses the wraparound (toroidal) Moore neighborhood: every cell has
//! exactly eight neighbors, and translating patterns re-enter the lattice
//! instead of dying at the border. That convention is what produces the
//! reference period set {1, 2, 3, 4, 5, 10, 20} (a glider circling the
//! torus closes after 20 generations); with fixed borders the observed
//! periods collapse to {1, 2, 4, 8, 12}. The quantum comparison runs of
//! this module use the same wraparound adjacency so that the widened rule
//! at (tau, sigma) = (0, 0) reproduces the catalog exactly.
//!
//! On top of the catalog sit transient statistics per period and the
//! comparison surfaces T_P(tau, sigma) and Omega_P(tau, sigma): mean shifts
//! of transient and period between the widened-rule quantum runs and the
//! classical baseline, over a seeded, period-stratified sample of initial
//! conditions.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;

use crate::engine::{detect_cycle, RuleParams, RuleReading, Trajectory};
use crate::lattice::{seeded_rng, BinaryState, NeighborhoodTable};
use crate::propagator::{HamiltonianEig, SingleParticleHamiltonian};
use crate::{Error, Result};

/// Side of the exhaustively enumerable lattice.
pub const ENUMERATION_SIDE: usize = 5;
/// Cells of the 5x5 lattice; states fit a `u32`.
pub const ENUMERATION_CELLS: usize = ENUMERATION_SIDE * ENUMERATION_SIDE;
/// Number of initial conditions, 2^25.
pub const STATE_COUNT: usize = 1 << ENUMERATION_CELLS;

/// One registered attractor cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttractorInfo {
    /// Minimum encoded state on the cycle.
    pub canonical: u32,
    pub period: u16,
    /// Number of initial conditions whose trajectory ends on this cycle.
    pub basin: u64,
}

/// Per-IC classification of all 2^25 initial conditions plus the attractor
/// registry.
pub struct AttractorCatalog {
    periods: Vec<u16>,
    transients: Vec<u16>,
    attractor_ids: Vec<u32>,
    attractors: Vec<AttractorInfo>,
}

/// One row of the catalog, in sidecar-file layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogEntry {
    pub ic: u32,
    pub period: u16,
    pub transient: u16,
}

impl AttractorCatalog {
    pub fn state_count(&self) -> usize {
        self.periods.len()
    }

    pub fn period_of(&self, ic: u32) -> u16 {
        self.periods[ic as usize]
    }

    pub fn transient_of(&self, ic: u32) -> u16 {
        self.transients[ic as usize]
    }

    pub fn attractor_of(&self, ic: u32) -> &AttractorInfo {
        &self.attractors[self.attractor_ids[ic as usize] as usize]
    }

    pub fn attractors(&self) -> &[AttractorInfo] {
        &self.attractors
    }

    /// Sorted list of periods that occur.
    pub fn distinct_periods(&self) -> Vec<u16> {
        let set: BTreeSet<u16> = self.attractors.iter().map(|a| a.period).collect();
        set.into_iter().collect()
    }

    /// Number of distinct attractor cycles per period.
    pub fn cycle_counts_by_period(&self) -> BTreeMap<u16, u64> {
        let mut counts = BTreeMap::new();
        for attractor in &self.attractors {
            *counts.entry(attractor.period).or_insert(0u64) += 1;
        }
        counts
    }

    /// Number of initial conditions per period (basin totals).
    pub fn ic_counts_by_period(&self) -> BTreeMap<u16, u64> {
        let mut counts = BTreeMap::new();
        for attractor in &self.attractors {
            *counts.entry(attractor.period).or_insert(0u64) += attractor.basin;
        }
        counts
    }

    /// Number of attractor cycles per period after merging cycles related
    /// by a lattice symmetry: any rotation, reflection, or wraparound
    /// translation (the full symmetry group of the torus, 200 elements).
    pub fn symmetry_class_counts_by_period(&self) -> BTreeMap<u16, u64> {
        let masks = neighbor_masks(&torus_table());
        let mut classes: BTreeSet<(u16, u32)> = BTreeSet::new();
        for attractor in &self.attractors {
            let canonical = d4_images(attractor.canonical)
                .into_iter()
                .flat_map(|image| {
                    (0..ENUMERATION_CELLS)
                        .map(move |t| translate(image, t / ENUMERATION_SIDE, t % ENUMERATION_SIDE))
                })
                .map(|image| cycle_minimum(image, attractor.period, &masks))
                .min()
                .expect("images are nonempty");
            classes.insert((attractor.period, canonical));
        }
        let mut counts = BTreeMap::new();
        for (period, _) in classes {
            *counts.entry(period).or_insert(0u64) += 1;
        }
        counts
    }

    /// All rows in ascending IC order.
    pub fn entries(&self) -> impl Iterator<Item = CatalogEntry> + '_ {
        (0..self.periods.len()).map(|ic| CatalogEntry {
            ic: ic as u32,
            period: self.periods[ic],
            transient: self.transients[ic],
        })
    }
}

/// Wraparound Moore adjacency of the 5x5 lattice: row and column offsets
/// are taken modulo the side, so every cell has exactly eight neighbors.
/// This is the census convention of the whole module.
pub fn torus_table() -> NeighborhoodTable {
    let side = ENUMERATION_SIDE;
    let lists = (0..ENUMERATION_CELLS)
        .map(|cell| {
            let (row, col) = (cell / side, cell % side);
            let mut list = Vec::with_capacity(8);
            for dr in [side - 1, 0, 1] {
                for dc in [side - 1, 0, 1] {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    list.push((row + dr) % side * side + (col + dc) % side);
                }
            }
            list
        })
        .collect();
    NeighborhoodTable::from_lists(lists).expect("torus adjacency is symmetric")
}

/// Per-cell masks of neighbor bits for a 25-cell adjacency table.
pub fn neighbor_masks(table: &NeighborhoodTable) -> [u32; ENUMERATION_CELLS] {
    assert_eq!(table.cell_count(), ENUMERATION_CELLS, "need a 5x5 table");
    let mut masks = [0u32; ENUMERATION_CELLS];
    for (cell, mask) in masks.iter_mut().enumerate() {
        for &neighbor in table.neighbors(cell) {
            *mask |= 1 << neighbor;
        }
    }
    masks
}

/// One classical rule application on a bit-encoded 5x5 state (cell `i` is
/// bit `i`, matching [`BinaryState::encode`]).
pub fn classical_step_bits(state: u32, masks: &[u32; ENUMERATION_CELLS]) -> u32 {
    let mut next = 0u32;
    for (cell, mask) in masks.iter().enumerate() {
        let count = (state & mask).count_ones();
        if count == 3 || (count == 2 && state >> cell & 1 == 1) {
            next |= 1 << cell;
        }
    }
    next
}

/// Reflects a 5x5 state across the vertical axis, (row, col) to
/// (row, 4 - col).
pub fn mirror_horizontal(state: u32) -> u32 {
    transform(state, |row, col| (row, ENUMERATION_SIDE - 1 - col))
}

/// Shifts a 5x5 state by (dr, dc) with wraparound.
pub fn translate(state: u32, dr: usize, dc: usize) -> u32 {
    transform(state, |row, col| {
        ((row + dr) % ENUMERATION_SIDE, (col + dc) % ENUMERATION_SIDE)
    })
}

/// The eight rotation/reflection images of a 5x5 state (identity included).
pub fn d4_images(state: u32) -> [u32; 8] {
    let rot90 = |row: usize, col: usize| (col, ENUMERATION_SIDE - 1 - row);
    let mut images = [0u32; 8];
    let mut current = state;
    for quarter in 0..4 {
        images[2 * quarter] = current;
        images[2 * quarter + 1] = mirror_horizontal(current);
        current = transform(current, rot90);
    }
    images
}

fn transform(state: u32, map: impl Fn(usize, usize) -> (usize, usize)) -> u32 {
    let mut out = 0u32;
    for row in 0..ENUMERATION_SIDE {
        for col in 0..ENUMERATION_SIDE {
            if state >> (row * ENUMERATION_SIDE + col) & 1 == 1 {
                let (r, c) = map(row, col);
                out |= 1 << (r * ENUMERATION_SIDE + c);
            }
        }
    }
    out
}

/// Minimum encoded state on the cycle through `start`, which must lie on a
/// cycle of the given period.
fn cycle_minimum(start: u32, period: u16, masks: &[u32; ENUMERATION_CELLS]) -> u32 {
    let mut minimum = start;
    let mut state = start;
    for _ in 1..period {
        state = classical_step_bits(state, masks);
        minimum = minimum.min(state);
    }
    state = classical_step_bits(state, masks);
    debug_assert_eq!(state, start, "period does not close the cycle");
    minimum
}

/// Classifies every initial condition of the 5x5 classical Game of Life
/// (wraparound neighborhoods, see the module docs) by exact cycle
/// detection. Single pass: each walk follows the trajectory until it meets
/// an already classified state or revisits a state of the current walk,
/// then back-fills period and transient along the path.
pub fn enumerate_classical_5x5() -> AttractorCatalog {
    let masks = neighbor_masks(&torus_table());
    let mut periods = vec![0u16; STATE_COUNT];
    let mut transients = vec![0u16; STATE_COUNT];
    let mut attractor_ids = vec![0u32; STATE_COUNT];
    let mut attractors: Vec<AttractorInfo> = Vec::new();

    // Walk bookkeeping: which walk last touched a state, and at which path
    // position. Walk ic+1 is unique per seed, so the arrays never need
    // clearing. `periods[s] == 0` marks an unclassified state; real periods
    // are at least 1.
    let mut walk_of = vec![0u32; STATE_COUNT];
    let mut position = vec![0u32; STATE_COUNT];
    let mut path: Vec<u32> = Vec::with_capacity(128);

    for ic in 0..STATE_COUNT as u32 {
        if periods[ic as usize] != 0 {
            continue;
        }
        let walk = ic + 1;
        path.clear();
        let mut state = ic;
        loop {
            if periods[state as usize] != 0 {
                // The tail reaches territory classified by an earlier walk:
                // every path state is transient into the same attractor.
                let id = attractor_ids[state as usize];
                let period = periods[state as usize];
                let base = transients[state as usize] as usize;
                for (i, &q) in path.iter().enumerate() {
                    periods[q as usize] = period;
                    transients[q as usize] = (base + path.len() - i) as u16;
                    attractor_ids[q as usize] = id;
                }
                attractors[id as usize].basin += path.len() as u64;
                break;
            }
            if walk_of[state as usize] == walk {
                // The walk closed on itself: path[start..] is a new cycle.
                let start = position[state as usize] as usize;
                let period = (path.len() - start) as u16;
                let canonical = *path[start..].iter().min().expect("nonempty cycle");
                let id = attractors.len() as u32;
                attractors.push(AttractorInfo {
                    canonical,
                    period,
                    basin: path.len() as u64,
                });
                for &q in &path[start..] {
                    periods[q as usize] = period;
                    transients[q as usize] = 0;
                    attractor_ids[q as usize] = id;
                }
                for (i, &q) in path.iter().enumerate().take(start) {
                    periods[q as usize] = period;
                    transients[q as usize] = (start - i) as u16;
                    attractor_ids[q as usize] = id;
                }
                break;
            }
            walk_of[state as usize] = walk;
            position[state as usize] = path.len() as u32;
            path.push(state);
            state = classical_step_bits(state, &masks);
        }
    }

    AttractorCatalog {
        periods,
        transients,
        attractor_ids,
        attractors,
    }
}

/// Transient distribution of one period's basins.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientSummary {
    pub period: u16,
    pub ic_count: u64,
    pub max: u16,
    /// Mean over every IC in the basins, on-cycle states (transient 0)
    /// included.
    pub mean: f64,
    /// Smallest and mean transient over the strictly transient ICs only;
    /// `None` when every IC of the period sits on a cycle.
    pub positive_min: Option<u16>,
    pub positive_mean: Option<f64>,
    /// `histogram[t]` = number of ICs with transient exactly `t`.
    pub histogram: Vec<u64>,
}

/// Per-period transient statistics, sorted by period.
pub fn transient_statistics(catalog: &AttractorCatalog) -> Vec<TransientSummary> {
    let mut histograms: BTreeMap<u16, Vec<u64>> = BTreeMap::new();
    for entry in catalog.entries() {
        let histogram = histograms.entry(entry.period).or_default();
        if histogram.len() <= entry.transient as usize {
            histogram.resize(entry.transient as usize + 1, 0);
        }
        histogram[entry.transient as usize] += 1;
    }
    histograms
        .into_iter()
        .map(|(period, histogram)| {
            let ic_count: u64 = histogram.iter().sum();
            let max = (histogram.len() - 1) as u16;
            let weighted: f64 = histogram
                .iter()
                .enumerate()
                .map(|(t, &n)| t as f64 * n as f64)
                .sum();
            let mean = weighted / ic_count as f64;
            let positive: u64 = histogram.iter().skip(1).sum();
            let positive_min = histogram
                .iter()
                .enumerate()
                .skip(1)
                .find(|(_, &n)| n > 0)
                .map(|(t, _)| t as u16);
            let positive_mean = (positive > 0).then(|| weighted / positive as f64);
            TransientSummary {
                period,
                ic_count,
                max,
                mean,
                positive_min,
                positive_mean,
                histogram,
            }
        })
        .collect()
}

/// Sampling and run parameters of the comparison surfaces.
#[derive(Debug, Clone)]
pub struct SurfaceParams {
    pub tau_grid: Vec<f64>,
    pub sigma_grid: Vec<f64>,
    /// Total sample budget, split evenly across the periods present in the
    /// catalog.
    pub sample_size: usize,
    pub seed: u64,
    pub reading: RuleReading,
    /// Cycle-detection budget per quantum run.
    pub max_generations: usize,
}

impl SurfaceParams {
    pub fn new(tau_grid: Vec<f64>, sigma_grid: Vec<f64>, sample_size: usize, seed: u64) -> Self {
        SurfaceParams {
            tau_grid,
            sigma_grid,
            sample_size,
            seed,
            reading: RuleReading::Evolved,
            max_generations: 1024,
        }
    }
}

/// Mean shifts for one period stratum at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StratumStats {
    pub period: u16,
    /// ICs drawn for this stratum; 0 flags the stratum absent.
    pub samples: usize,
    /// Runs whose cycle detection exhausted the generation budget; they are
    /// excluded from the means.
    pub undetected: usize,
    /// Mean quantum-minus-classical transient difference.
    pub transient_shift: f64,
    /// Mean quantum-minus-classical period difference.
    pub period_shift: f64,
}

/// T_P and Omega_P over a (tau, sigma) grid.
pub struct ComparisonSurface {
    tau_grid: Vec<f64>,
    sigma_grid: Vec<f64>,
    /// `cells[ti][si]` holds one entry per period stratum, sorted by period.
    cells: Vec<Vec<Vec<StratumStats>>>,
    /// Sampled ICs per period (the quota actually drawn).
    quotas: Vec<(u16, usize)>,
}

impl ComparisonSurface {
    pub fn tau_grid(&self) -> &[f64] {
        &self.tau_grid
    }

    pub fn sigma_grid(&self) -> &[f64] {
        &self.sigma_grid
    }

    pub fn strata(&self, tau_index: usize, sigma_index: usize) -> &[StratumStats] {
        &self.cells[tau_index][sigma_index]
    }

    pub fn stratum(&self, tau_index: usize, sigma_index: usize, period: u16) -> Option<&StratumStats> {
        self.cells[tau_index][sigma_index]
            .iter()
            .find(|s| s.period == period)
    }

    pub fn quotas(&self) -> &[(u16, usize)] {
        &self.quotas
    }
}

/// Draws a period-stratified IC sample: the budget is split evenly across
/// the catalog's periods and each stratum is filled by seeded reservoir
/// sampling (uniform without replacement within the stratum). Strata are
/// returned sorted by period with their ICs sorted ascending, so downstream
/// iteration order never depends on the draw order.
pub fn sample_strata(
    catalog: &AttractorCatalog,
    sample_size: usize,
    seed: u64,
) -> Vec<(u16, Vec<u32>)> {
    let periods = catalog.distinct_periods();
    let quota = sample_size / periods.len().max(1);
    let index_of: BTreeMap<u16, usize> = periods
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, i))
        .collect();
    let mut reservoirs: Vec<Vec<u32>> = vec![Vec::with_capacity(quota); periods.len()];
    let mut seen = vec![0u64; periods.len()];
    let mut rng = seeded_rng(seed);
    if quota > 0 {
        for ic in 0..catalog.state_count() as u32 {
            let stratum = index_of[&catalog.period_of(ic)];
            seen[stratum] += 1;
            if reservoirs[stratum].len() < quota {
                reservoirs[stratum].push(ic);
            } else {
                let j = rng.gen_range(0..seen[stratum]);
                if (j as usize) < quota {
                    reservoirs[stratum][j as usize] = ic;
                }
            }
        }
    }
    periods
        .into_iter()
        .zip(reservoirs)
        .map(|(period, mut ics)| {
            ics.sort_unstable();
            (period, ics)
        })
        .collect()
}

/// Computes the comparison surfaces over the parameter grid. Each stratum
/// mean is T_P (transient shift) and Omega_P (period shift) between the
/// widened-rule quantum run and the classical catalog entry of the same IC.
/// Rows of the tau grid run in parallel; accumulation order within a row is
/// fixed, so results are independent of worker count.
pub fn comparison_surfaces(
    catalog: &AttractorCatalog,
    params: &SurfaceParams,
) -> Result<ComparisonSurface> {
    if params.sample_size > catalog.state_count() {
        return Err(Error::Config(format!(
            "sample size {} exceeds the {} initial conditions",
            params.sample_size,
            catalog.state_count()
        )));
    }
    if params.max_generations == 0 {
        return Err(Error::Config("generation budget must be at least 1".into()));
    }
    for &tau in &params.tau_grid {
        if !(tau >= 0.0) {
            return Err(Error::Config(format!("tau must be nonnegative, got {tau}")));
        }
    }
    let table = torus_table();
    let eig = HamiltonianEig::new(&SingleParticleHamiltonian::from_table(&table))?;
    let strata = sample_strata(catalog, params.sample_size, params.seed);
    let quotas: Vec<(u16, usize)> = strata.iter().map(|(p, ics)| (*p, ics.len())).collect();

    let cells: Result<Vec<Vec<Vec<StratumStats>>>> = params
        .tau_grid
        .par_iter()
        .map(|&tau| {
            let transfer = eig.transfer_matrix(tau);
            params
                .sigma_grid
                .iter()
                .map(|&sigma| {
                    let rule = RuleParams::new(sigma)?.with_reading(params.reading);
                    strata
                        .iter()
                        .map(|&(period, ref ics)| {
                            let mut transient_sum = 0.0;
                            let mut period_sum = 0.0;
                            let mut undetected = 0usize;
                            for &ic in ics {
                                let initial =
                                    BinaryState::decode(ENUMERATION_CELLS, ic as u64)?;
                                let trajectory =
                                    Trajectory::new(&transfer, rule, &table, initial)?;
                                let report =
                                    detect_cycle(trajectory, params.max_generations);
                                if !report.detected {
                                    undetected += 1;
                                    continue;
                                }
                                transient_sum += report.transient as f64
                                    - catalog.transient_of(ic) as f64;
                                period_sum +=
                                    report.period as f64 - catalog.period_of(ic) as f64;
                            }
                            let counted = ics.len() - undetected;
                            let denom = counted.max(1) as f64;
                            Ok(StratumStats {
                                period,
                                samples: ics.len(),
                                undetected,
                                transient_shift: transient_sum / denom,
                                period_shift: period_sum / denom,
                            })
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    Ok(ComparisonSurface {
        tau_grid: params.tau_grid.clone(),
        sigma_grid: params.sigma_grid.clone(),
        cells: cells?,
        quotas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::classical_rule_step;
    use crate::lattice::LatticeSpec;
    use std::collections::HashMap;
    use std::sync::OnceLock;

    fn catalog() -> &'static AttractorCatalog {
        static CATALOG: OnceLock<AttractorCatalog> = OnceLock::new();
        CATALOG.get_or_init(enumerate_classical_5x5)
    }

    #[test]
    fn bit_stepper_matches_the_generic_classical_rule() {
        let spec = LatticeSpec::new(5).unwrap();
        let tables = [torus_table(), NeighborhoodTable::moore(&spec)];
        let mut rng = seeded_rng(7);
        for table in &tables {
            let masks = neighbor_masks(table);
            for _ in 0..1000 {
                let ic: u32 = rng.gen_range(0..1 << 25);
                let state = BinaryState::decode(25, ic as u64).unwrap();
                let expected = classical_rule_step(&state, table).encode().unwrap();
                assert_eq!(classical_step_bits(ic, &masks) as u64, expected);
            }
        }
    }

    #[test]
    fn torus_neighborhoods_have_eight_members_and_wrap() {
        let table = torus_table();
        for cell in 0..25 {
            assert_eq!(table.neighbors(cell).len(), 8);
        }
        let mut corner = table.neighbors(0).to_vec();
        corner.sort_unstable();
        assert_eq!(corner, vec![1, 4, 5, 6, 9, 20, 21, 24]);
    }

    #[test]
    fn empty_board_is_a_fixed_point() {
        let catalog = catalog();
        assert_eq!(catalog.period_of(0), 1);
        assert_eq!(catalog.transient_of(0), 0);
        let attractor = catalog.attractor_of(0);
        assert_eq!(attractor.canonical, 0);
        assert_eq!(attractor.period, 1);
    }

    #[test]
    fn centered_blinker_has_period_two_and_no_transient() {
        let spec = LatticeSpec::new(5).unwrap();
        let mut state = BinaryState::dead(25);
        for row in 1..4 {
            state.set(spec.index(row, 2), true);
        }
        let ic = state.encode().unwrap() as u32;
        let catalog = catalog();
        assert_eq!(catalog.period_of(ic), 2);
        assert_eq!(catalog.transient_of(ic), 0);
    }

    #[test]
    fn observed_period_set_and_peak_transient() {
        let catalog = catalog();
        assert_eq!(catalog.distinct_periods(), vec![1, 2, 3, 4, 5, 10, 20]);
        let stats = transient_statistics(catalog);
        let period_one = stats.iter().find(|s| s.period == 1).unwrap();
        assert_eq!(period_one.max, 51);
    }

    #[test]
    fn basins_partition_the_state_space() {
        let catalog = catalog();
        let total: u64 = catalog.attractors().iter().map(|a| a.basin).sum();
        assert_eq!(total, STATE_COUNT as u64);
        let by_period: u64 = catalog.ic_counts_by_period().values().sum();
        assert_eq!(by_period, STATE_COUNT as u64);
    }

    #[test]
    fn transient_histograms_are_consistent() {
        let stats = transient_statistics(catalog());
        for summary in &stats {
            assert_eq!(summary.histogram.iter().sum::<u64>(), summary.ic_count);
            assert!(summary.histogram[summary.max as usize] > 0);
            assert!(summary.mean <= summary.max as f64);
            if let Some(mean) = summary.positive_mean {
                assert!(mean >= summary.mean);
            }
        }
    }

    #[test]
    fn mirror_images_share_period_and_transient() {
        let catalog = catalog();
        let mut rng = seeded_rng(11);
        for _ in 0..100_000 {
            let ic: u32 = rng.gen_range(0..1 << 25);
            let mirrored = mirror_horizontal(ic);
            assert_eq!(catalog.period_of(ic), catalog.period_of(mirrored));
            assert_eq!(catalog.transient_of(ic), catalog.transient_of(mirrored));
        }
    }

    #[test]
    fn d4_images_are_involutive_and_preserve_population() {
        let mut rng = seeded_rng(13);
        for _ in 0..200 {
            let state: u32 = rng.gen_range(0..1 << 25);
            assert_eq!(mirror_horizontal(mirror_horizontal(state)), state);
            let images = d4_images(state);
            assert_eq!(images[0], state);
            for image in images {
                assert_eq!(image.count_ones(), state.count_ones());
            }
        }
    }

    #[test]
    fn resimulation_reproduces_the_catalog() {
        let catalog = catalog();
        let masks = neighbor_masks(&torus_table());
        let mut rng = seeded_rng(17);
        for _ in 0..10_000 {
            let ic: u32 = rng.gen_range(0..1 << 25);
            let mut seen: HashMap<u32, u16> = HashMap::new();
            let mut state = ic;
            let (transient, period) = loop {
                if let Some(&first) = seen.get(&state) {
                    break (first, seen.len() as u16 - first);
                }
                seen.insert(state, seen.len() as u16);
                state = classical_step_bits(state, &masks);
            };
            assert_eq!(catalog.transient_of(ic), transient, "ic {ic}");
            assert_eq!(catalog.period_of(ic), period, "ic {ic}");
        }
    }

    #[test]
    fn attractor_canonicals_lie_on_their_cycles() {
        let catalog = catalog();
        let masks = neighbor_masks(&torus_table());
        for attractor in catalog.attractors().iter().step_by(37) {
            assert_eq!(catalog.transient_of(attractor.canonical), 0);
            assert_eq!(catalog.period_of(attractor.canonical), attractor.period);
            assert_eq!(
                cycle_minimum(attractor.canonical, attractor.period, &masks),
                attractor.canonical,
                "canonical state is the cycle minimum"
            );
        }
    }

    #[test]
    fn symmetry_classes_never_outnumber_cycles() {
        let catalog = catalog();
        let cycles = catalog.cycle_counts_by_period();
        let classes = catalog.symmetry_class_counts_by_period();
        assert_eq!(
            cycles.keys().collect::<Vec<_>>(),
            classes.keys().collect::<Vec<_>>()
        );
        for (period, &count) in &classes {
            assert!(count <= cycles[period]);
            assert!(count >= cycles[period].div_ceil(200), "orbit size is at most 200");
        }
    }

    #[test]
    fn stratified_sample_is_deterministic_and_correctly_labeled() {
        let catalog = catalog();
        let strata = sample_strata(catalog, 700, 99);
        assert_eq!(strata.len(), 7);
        for (period, ics) in &strata {
            assert_eq!(ics.len(), 100);
            for &ic in ics {
                assert_eq!(catalog.period_of(ic), *period);
            }
            let mut sorted = ics.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(&sorted, ics, "sorted without replacement");
        }
        assert_eq!(strata, sample_strata(catalog, 700, 99));
        assert_ne!(strata, sample_strata(catalog, 700, 100));
    }

    #[test]
    fn undersized_sample_flags_strata_absent() {
        let catalog = catalog();
        let strata = sample_strata(catalog, 3, 5);
        assert!(strata.iter().all(|(_, ics)| ics.is_empty()));
        let params = SurfaceParams::new(vec![0.0], vec![0.0], 3, 5);
        let surface = comparison_surfaces(catalog, &params).unwrap();
        for stratum in surface.strata(0, 0) {
            assert_eq!(stratum.samples, 0);
            assert_eq!(stratum.transient_shift, 0.0);
        }
    }

    #[test]
    fn comparison_surface_vanishes_at_the_classical_point() {
        let catalog = catalog();
        let params = SurfaceParams::new(vec![0.0], vec![0.0], 350, 42);
        let surface = comparison_surfaces(catalog, &params).unwrap();
        for stratum in surface.strata(0, 0) {
            assert_eq!(stratum.samples, 50);
            assert_eq!(stratum.undetected, 0);
            assert_eq!(stratum.transient_shift, 0.0, "period {}", stratum.period);
            assert_eq!(stratum.period_shift, 0.0, "period {}", stratum.period);
        }
    }

    #[test]
    fn oversized_sample_is_rejected() {
        let catalog = catalog();
        let params = SurfaceParams::new(vec![0.0], vec![0.0], STATE_COUNT + 1, 1);
        assert!(matches!(
            comparison_surfaces(catalog, &params),
            Err(Error::Config(_))
        ));
    }
}
