//! Square lattice geometry, Moore neighborhoods with fixed borders, binary
//! cell states, density fields, and seeded randomness.
//!
//! Conventions (all output formats depend on these, so they are fixed here
//! once and for all):
//!
//! - Cells are indexed `0..L*L` in row-major order, cell 0 at the top-left.
//! - In the integer encoding of a state, cell 0 is the least significant
//!   bit.
//! - Borders do not wrap: border cells simply have fewer Moore neighbors.
//! - Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`). A state is
//!   drawn one cell at a time, in cell order: cell `i` is alive iff the
//!   `i`-th call to `next_u32()` has its low bit set. Ensemble member `k`
//!   of a seeded ensemble uses the same 64-bit seed on stream `k`, so
//!   members are independent and reproducible in any execution order.

use nalgebra::DVector;
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Geometry of an `L x L` lattice, `L >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeSpec {
    side: usize,
}

impl LatticeSpec {
    pub fn new(side: usize) -> Result<Self> {
        if side < 2 {
            return Err(Error::Config(format!(
                "lattice side must be at least 2, got {side}"
            )));
        }
        Ok(LatticeSpec { side })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn cell_count(&self) -> usize {
        self.side * self.side
    }

    /// Row-major cell index of `(row, col)`.
    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.side && col < self.side);
        row * self.side + col
    }

    /// Inverse of [`LatticeSpec::index`].
    pub fn coords(&self, index: usize) -> (usize, usize) {
        debug_assert!(index < self.cell_count());
        (index / self.side, index % self.side)
    }
}

/// One binary lattice configuration: one bit per cell, in cell order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryState {
    bits: Vec<u8>,
}

impl BinaryState {
    /// All-dead state over `cells` cells.
    pub fn dead(cells: usize) -> Self {
        BinaryState {
            bits: vec![0; cells],
        }
    }

    /// Builds a state from explicit bits; every entry must be 0 or 1.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Format(format!(
                "binary state entries must be 0 or 1, got {bad}"
            )));
        }
        Ok(BinaryState { bits })
    }

    pub fn cell_count(&self) -> usize {
        self.bits.len()
    }

    pub fn is_alive(&self, cell: usize) -> bool {
        self.bits[cell] == 1
    }

    pub fn set(&mut self, cell: usize, alive: bool) {
        self.bits[cell] = alive as u8;
    }

    pub fn alive_count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Integer encoding: cell 0 is the least significant bit. Only defined
    /// for at most 64 cells.
    pub fn encode(&self) -> Result<u64> {
        if self.bits.len() > 64 {
            return Err(Error::Capacity(format!(
                "integer encoding supports at most 64 cells, state has {}",
                self.bits.len()
            )));
        }
        let mut code = 0u64;
        for (i, &b) in self.bits.iter().enumerate() {
            code |= (b as u64) << i;
        }
        Ok(code)
    }

    /// Inverse of [`BinaryState::encode`] over `cells` cells.
    pub fn decode(cells: usize, code: u64) -> Result<Self> {
        if cells > 64 {
            return Err(Error::Capacity(format!(
                "integer encoding supports at most 64 cells, got {cells}"
            )));
        }
        if cells < 64 && code >> cells != 0 {
            return Err(Error::Format(format!(
                "encoded state {code:#x} has bits beyond cell {cells}"
            )));
        }
        let bits = (0..cells).map(|i| ((code >> i) & 1) as u8).collect();
        Ok(BinaryState { bits })
    }
}

/// Per-cell Moore neighbor lists (the cell itself excluded). Also usable for
/// non-lattice topologies via [`NeighborhoodTable::chain`]; everything
/// downstream of the adjacency structure (Hamiltonians, the Fock oracle)
/// only consumes mode count plus neighbor lists.
#[derive(Debug, Clone)]
pub struct NeighborhoodTable {
    neighbors: Vec<Vec<usize>>,
}

impl NeighborhoodTable {
    /// Moore neighborhoods of a square lattice with fixed borders: interior
    /// cells have 8 neighbors, edge cells 5, corner cells 3.
    pub fn moore(spec: &LatticeSpec) -> Self {
        let l = spec.side() as isize;
        let mut neighbors = Vec::with_capacity(spec.cell_count());
        for row in 0..l {
            for col in 0..l {
                let mut list = Vec::with_capacity(8);
                for dr in -1..=1isize {
                    for dc in -1..=1isize {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let (r, c) = (row + dr, col + dc);
                        if r >= 0 && r < l && c >= 0 && c < l {
                            list.push((r * l + c) as usize);
                        }
                    }
                }
                neighbors.push(list);
            }
        }
        NeighborhoodTable { neighbors }
    }

    /// Path-graph adjacency over `modes` sites: site `i` neighbors `i-1`
    /// and `i+1`. Used for small non-lattice systems in oracle
    /// cross-checks.
    pub fn chain(modes: usize) -> Self {
        let neighbors = (0..modes)
            .map(|i| {
                let mut list = Vec::with_capacity(2);
                if i > 0 {
                    list.push(i - 1);
                }
                if i + 1 < modes {
                    list.push(i + 1);
                }
                list
            })
            .collect();
        NeighborhoodTable { neighbors }
    }

    /// Builds a table from explicit neighbor lists. Validates that indices
    /// are in range, no cell neighbors itself, lists hold no duplicates,
    /// and adjacency is symmetric (everything downstream assumes an
    /// undirected graph). Lists are sorted for deterministic iteration.
    pub(crate) fn from_lists(mut neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let cells = neighbors.len();
        for list in &mut neighbors {
            list.sort_unstable();
        }
        for (cell, list) in neighbors.iter().enumerate() {
            for (i, &neighbor) in list.iter().enumerate() {
                if neighbor >= cells {
                    return Err(Error::Dimension(format!(
                        "cell {cell} lists neighbor {neighbor} beyond cell count {cells}"
                    )));
                }
                if neighbor == cell {
                    return Err(Error::Config(format!("cell {cell} neighbors itself")));
                }
                if i > 0 && list[i - 1] == neighbor {
                    return Err(Error::Config(format!(
                        "cell {cell} lists neighbor {neighbor} twice"
                    )));
                }
                if neighbors[neighbor].binary_search(&cell).is_err() {
                    return Err(Error::Config(format!(
                        "asymmetric adjacency: {cell} lists {neighbor} but not vice versa"
                    )));
                }
            }
        }
        Ok(NeighborhoodTable { neighbors })
    }

    pub fn cell_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, cell: usize) -> &[usize] {
        &self.neighbors[cell]
    }
}

/// Real-valued per-cell densities. Entries produced by the evolution are
/// expectation values in `[0, 1]` up to roundoff.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    values: DVector<f64>,
}

impl DensityField {
    pub fn from_state(state: &BinaryState) -> Self {
        DensityField {
            values: DVector::from_iterator(
                state.cell_count(),
                state.bits().iter().map(|&b| b as f64),
            ),
        }
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        DensityField {
            values: DVector::from_vec(values),
        }
    }

    pub(crate) fn from_dvector(values: DVector<f64>) -> Self {
        DensityField { values }
    }

    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    /// Total density over the lattice.
    pub fn total(&self) -> f64 {
        self.values.sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }
}

/// The crate's named RNG, seeded directly from a 64-bit value.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// RNG for member `member` of the ensemble identified by `seed`: same key,
/// distinct ChaCha stream per member.
pub fn ensemble_rng(seed: u64, member: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member);
    rng
}

/// Draws each cell independently with probability 1/2 from `rng`, one
/// `next_u32` call per cell in cell order.
pub fn random_state_from(cells: usize, rng: &mut impl RngCore) -> BinaryState {
    let bits = (0..cells).map(|_| (rng.next_u32() & 1) as u8).collect();
    BinaryState { bits }
}

/// Fair random state for `spec` from a fresh generator seeded with `seed`.
pub fn random_state(spec: &LatticeSpec, seed: u64) -> BinaryState {
    random_state_from(spec.cell_count(), &mut seeded_rng(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spec_rejects_degenerate_side() {
        assert!(LatticeSpec::new(0).is_err());
        assert!(LatticeSpec::new(1).is_err());
        assert!(LatticeSpec::new(2).is_ok());
    }

    #[test]
    fn index_coords_roundtrip() {
        let spec = LatticeSpec::new(5).unwrap();
        for i in 0..spec.cell_count() {
            let (r, c) = spec.coords(i);
            assert_eq!(spec.index(r, c), i);
        }
    }

    #[test]
    fn moore_neighbor_counts_on_3x3() {
        let spec = LatticeSpec::new(3).unwrap();
        let table = NeighborhoodTable::moore(&spec);
        // center cell sees all eight others
        assert_eq!(table.neighbors(spec.index(1, 1)).len(), 8);
        // corner cell sees three
        assert_eq!(table.neighbors(spec.index(0, 0)).len(), 3);
        // edge-middle cell sees five
        assert_eq!(table.neighbors(spec.index(0, 1)).len(), 5);
    }

    #[test]
    fn moore_neighbor_histogram_matches_closed_form() {
        for l in 3..=8 {
            let spec = LatticeSpec::new(l).unwrap();
            let table = NeighborhoodTable::moore(&spec);
            let mut by_degree = [0usize; 9];
            for cell in 0..spec.cell_count() {
                by_degree[table.neighbors(cell).len()] += 1;
            }
            assert_eq!(by_degree[3], 4, "L={l}");
            assert_eq!(by_degree[5], 4 * (l - 2), "L={l}");
            assert_eq!(by_degree[8], (l - 2) * (l - 2), "L={l}");
            assert_eq!(by_degree[3] + by_degree[5] + by_degree[8], l * l);
        }
    }

    #[test]
    fn moore_symmetry_and_no_self() {
        let spec = LatticeSpec::new(6).unwrap();
        let table = NeighborhoodTable::moore(&spec);
        for a in 0..spec.cell_count() {
            assert!(!table.neighbors(a).contains(&a));
            for &b in table.neighbors(a) {
                assert!(
                    table.neighbors(b).contains(&a),
                    "asymmetry between {a} and {b}"
                );
            }
        }
    }

    #[test]
    fn chain_degrees() {
        let table = NeighborhoodTable::chain(6);
        assert_eq!(table.neighbors(0), &[1]);
        assert_eq!(table.neighbors(5), &[4]);
        for i in 1..5 {
            assert_eq!(table.neighbors(i), &[i - 1, i + 1]);
        }
        let lonely = NeighborhoodTable::chain(1);
        assert!(lonely.neighbors(0).is_empty());
    }

    #[test]
    fn encode_known_values_on_5x5() {
        let dead = BinaryState::dead(25);
        assert_eq!(dead.encode().unwrap(), 0);

        let mut one = BinaryState::dead(25);
        one.set(0, true);
        assert_eq!(one.encode().unwrap(), 1);

        let all = BinaryState::from_bits(vec![1; 25]).unwrap();
        assert_eq!(all.encode().unwrap(), (1u64 << 25) - 1);
    }

    #[test]
    fn encode_rejects_wide_states() {
        let wide = BinaryState::dead(65);
        assert!(matches!(wide.encode(), Err(Error::Capacity(_))));
        assert!(matches!(
            BinaryState::decode(65, 0),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn decode_rejects_out_of_range_codes() {
        assert!(BinaryState::decode(4, 0x10).is_err());
        assert!(BinaryState::decode(4, 0x0f).is_ok());
    }

    #[test]
    fn from_bits_rejects_non_binary() {
        assert!(BinaryState::from_bits(vec![0, 1, 2]).is_err());
    }

    #[test]
    fn random_state_is_deterministic() {
        let spec = LatticeSpec::new(33).unwrap();
        assert_eq!(random_state(&spec, 42), random_state(&spec, 42));
    }

    #[test]
    fn nearby_seeds_give_different_states() {
        let spec = LatticeSpec::new(33).unwrap();
        for s in 0..100u64 {
            assert_ne!(
                random_state(&spec, s),
                random_state(&spec, s + 1),
                "seeds {s} and {} collided",
                s + 1
            );
        }
    }

    #[test]
    fn ensemble_streams_are_distinct_and_stable() {
        let a0 = random_state_from(1089, &mut ensemble_rng(7, 0));
        let a1 = random_state_from(1089, &mut ensemble_rng(7, 1));
        let a0_again = random_state_from(1089, &mut ensemble_rng(7, 0));
        assert_ne!(a0, a1);
        assert_eq!(a0, a0_again);
    }

    #[test]
    fn alive_fraction_concentrates_at_half() {
        // 10^4 draws of 33x33 states: the mean alive fraction of ~1.1e7
        // independent fair bits deviates from 1/2 by less than 0.01 with
        // overwhelming margin (the standard deviation of the mean is ~1.5e-4).
        let spec = LatticeSpec::new(33).unwrap();
        let mut rng = seeded_rng(20240817);
        let mut alive = 0usize;
        let draws = 10_000;
        for _ in 0..draws {
            alive += random_state_from(spec.cell_count(), &mut rng).alive_count();
        }
        let fraction = alive as f64 / (draws * spec.cell_count()) as f64;
        assert!(
            (fraction - 0.5).abs() < 0.01,
            "alive fraction {fraction} strays from 1/2"
        );
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(cells in 1usize..=64, raw: u64) {
            let code = if cells == 64 { raw } else { raw & ((1u64 << cells) - 1) };
            let state = BinaryState::decode(cells, code).unwrap();
            prop_assert_eq!(state.cell_count(), cells);
            prop_assert_eq!(state.encode().unwrap(), code);
        }

        #[test]
        fn decode_encode_roundtrip_via_bits(bits in proptest::collection::vec(0u8..=1, 1..=64)) {
            let state = BinaryState::from_bits(bits.clone()).unwrap();
            let code = state.encode().unwrap();
            let back = BinaryState::decode(bits.len(), code).unwrap();
            prop_assert_eq!(back, state);
        }
    }
}
