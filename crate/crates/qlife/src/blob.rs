//! Connected-component analysis of binary lattice frames: blob extraction
//! by forward-scan flood fill over 8-connectivity, area/perimeter/
//! circularity, centroids, centroid occurrence histograms, and per-frame
//! centroid correlation.
//!
//! Perimeter counts exposed unit edges: cell sides facing a non-blob cell
//! or the lattice boundary (the boundary is dead). Circularity is
//! perimeter over area, which is at most 4 and attains 4 exactly when no
//! two blob cells share an edge, so isolated and only-diagonally-touching
//! shapes score the maximum.

use std::collections::HashSet;

use crate::engine::GenerationTrace;
use crate::lattice::{BinaryState, LatticeSpec};
use crate::{Error, Result};

/// One 8-connected component of alive cells.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobRecord {
    /// Member cells as (row, col), sorted row-major.
    pub cells: Vec<(usize, usize)>,
    pub area: usize,
    /// Exposed unit edges (lattice boundary counts as dead).
    pub perimeter: usize,
    /// `perimeter / area`, in (0, 4].
    pub circularity: f64,
    /// Arithmetic mean of member coordinates, (row, col).
    pub centroid: (f64, f64),
}

/// Blob-level summary of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBlobStats {
    pub blobs: Vec<BlobRecord>,
    pub blob_count: usize,
    pub alive_count: usize,
    /// Mean coordinates over all alive cells; `None` for an all-dead frame.
    pub frame_centroid: Option<(f64, f64)>,
    pub circ_min: Option<f64>,
    pub circ_mean: Option<f64>,
    pub circ_max: Option<f64>,
    /// Pearson correlation between the row and column coordinates of the
    /// blob centroids; `None` (undefined, not an error) with fewer than 2
    /// blobs or zero variance in either coordinate.
    pub centroid_correlation: Option<f64>,
}

/// Occurrence counts of rounded frame centroids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CentroidHistogram {
    side: usize,
    counts: Vec<u64>,
    skipped_dead_frames: u64,
}

impl CentroidHistogram {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn count(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.side + col]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Frames that contributed no count because they had no alive cells.
    pub fn skipped_dead_frames(&self) -> u64 {
        self.skipped_dead_frames
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Cells with at least one occurrence.
    pub fn occupied_cells(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Merges two histograms cell by cell.
    pub fn merge(&mut self, other: &CentroidHistogram) -> Result<()> {
        if self.side != other.side {
            return Err(Error::Dimension(format!(
                "histogram sides differ: {} vs {}",
                self.side, other.side
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.skipped_dead_frames += other.skipped_dead_frames;
        Ok(())
    }
}

/// Largest possible number of blobs on an `side x side` lattice: isolated
/// cells on every other row and column.
pub fn max_blob_count(side: usize) -> usize {
    side.div_ceil(2).pow(2)
}

/// Extracts all 8-connected alive components. The scan runs forward in
/// row-major cell order; each unvisited alive cell seeds a flood fill, so
/// blobs are reported in seed-scan order and every alive cell belongs to
/// exactly one blob.
pub fn extract_blobs(spec: &LatticeSpec, state: &BinaryState) -> Result<Vec<BlobRecord>> {
    if state.cell_count() != spec.cell_count() {
        return Err(Error::Dimension(format!(
            "state has {} cells but the lattice has {}",
            state.cell_count(),
            spec.cell_count()
        )));
    }
    let side = spec.side();
    let mut visited = vec![false; spec.cell_count()];
    let mut blobs = Vec::new();
    for seed in 0..spec.cell_count() {
        if visited[seed] || !state.is_alive(seed) {
            continue;
        }
        let mut cells = Vec::new();
        let mut stack = vec![seed];
        visited[seed] = true;
        while let Some(cell) = stack.pop() {
            let (row, col) = spec.coords(cell);
            cells.push((row, col));
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (nr, nc) = (row as i64 + dr, col as i64 + dc);
                    if nr < 0 || nc < 0 || nr >= side as i64 || nc >= side as i64 {
                        continue;
                    }
                    let neighbor = spec.index(nr as usize, nc as usize);
                    if !visited[neighbor] && state.is_alive(neighbor) {
                        visited[neighbor] = true;
                        stack.push(neighbor);
                    }
                }
            }
        }
        cells.sort_unstable();
        let area = cells.len();
        let perimeter = perimeter(&cells);
        let (row_sum, col_sum) = cells
            .iter()
            .fold((0usize, 0usize), |(r, c), &(row, col)| (r + row, c + col));
        blobs.push(BlobRecord {
            area,
            perimeter,
            circularity: perimeter as f64 / area as f64,
            centroid: (row_sum as f64 / area as f64, col_sum as f64 / area as f64),
            cells,
        });
    }
    Ok(blobs)
}

/// Exposed unit edges of a cell set: sides facing a cell outside the set
/// (the lattice boundary always counts as outside).
pub fn perimeter(cells: &[(usize, usize)]) -> usize {
    let members: HashSet<(usize, usize)> = cells.iter().cloned().collect();
    let mut edges = 0;
    for &(row, col) in cells {
        let sides = [
            (row.wrapping_sub(1), col),
            (row + 1, col),
            (row, col.wrapping_sub(1)),
            (row, col + 1),
        ];
        for side in sides {
            if !members.contains(&side) {
                edges += 1;
            }
        }
    }
    edges
}

/// Full blob-level summary of one frame.
pub fn frame_stats(spec: &LatticeSpec, state: &BinaryState) -> Result<FrameBlobStats> {
    let blobs = extract_blobs(spec, state)?;
    let blob_count = blobs.len();
    let alive_count: usize = blobs.iter().map(|b| b.area).sum();

    let frame_centroid = if alive_count == 0 {
        None
    } else {
        let (mut row_sum, mut col_sum) = (0usize, 0usize);
        for blob in &blobs {
            for &(row, col) in &blob.cells {
                row_sum += row;
                col_sum += col;
            }
        }
        Some((
            row_sum as f64 / alive_count as f64,
            col_sum as f64 / alive_count as f64,
        ))
    };

    let (circ_min, circ_mean, circ_max) = if blob_count == 0 {
        (None, None, None)
    } else {
        let min = blobs.iter().map(|b| b.circularity).fold(f64::INFINITY, f64::min);
        let max = blobs
            .iter()
            .map(|b| b.circularity)
            .fold(f64::NEG_INFINITY, f64::max);
        let mean = blobs.iter().map(|b| b.circularity).sum::<f64>() / blob_count as f64;
        (Some(min), Some(mean), Some(max))
    };

    let centroid_correlation = pearson(
        blobs.iter().map(|b| b.centroid.0),
        blobs.iter().map(|b| b.centroid.1),
        blob_count,
    );

    Ok(FrameBlobStats {
        blobs,
        blob_count,
        alive_count,
        frame_centroid,
        circ_min,
        circ_mean,
        circ_max,
        centroid_correlation,
    })
}

/// Sample Pearson correlation; `None` with fewer than 2 points or zero
/// variance in either coordinate.
fn pearson(
    xs: impl Iterator<Item = f64>,
    ys: impl Iterator<Item = f64>,
    n: usize,
) -> Option<f64> {
    if n < 2 {
        return None;
    }
    let xs: Vec<f64> = xs.collect();
    let ys: Vec<f64> = ys.collect();
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mean_x).powi(2);
        syy += (y - mean_y).powi(2);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Accumulates rounded frame centroids into an occurrence histogram.
/// Rounding is half-up in both coordinates; all-dead frames are skipped
/// and counted separately.
pub fn accumulate_centroids<'a>(
    side: usize,
    stats: impl IntoIterator<Item = &'a FrameBlobStats>,
) -> CentroidHistogram {
    let mut histogram = CentroidHistogram {
        side,
        counts: vec![0; side * side],
        skipped_dead_frames: 0,
    };
    for frame in stats {
        match frame.frame_centroid {
            Some((row, col)) => {
                let r = (row + 0.5).floor() as usize;
                let c = (col + 0.5).floor() as usize;
                histogram.counts[r.min(side - 1) * side + c.min(side - 1)] += 1;
            }
            None => histogram.skipped_dead_frames += 1,
        }
    }
    histogram
}

/// Per-generation (alive fraction, blob count fraction), both normalized
/// into `[0, 1]`: alive cells over the cell count, blobs over
/// [`max_blob_count`].
pub fn normalized_series(spec: &LatticeSpec, trace: &GenerationTrace) -> Result<Vec<(f64, f64)>> {
    let cells = spec.cell_count() as f64;
    let max_blobs = max_blob_count(spec.side()) as f64;
    trace
        .states()
        .iter()
        .map(|state| {
            let blobs = extract_blobs(spec, state)?;
            Ok((
                state.alive_count() as f64 / cells,
                blobs.len() as f64 / max_blobs,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{random_state, seeded_rng};
    use rand::Rng;

    fn state_from_cells(spec: &LatticeSpec, alive: &[(usize, usize)]) -> BinaryState {
        let mut state = BinaryState::dead(spec.cell_count());
        for &(row, col) in alive {
            state.set(spec.index(row, col), true);
        }
        state
    }

    #[test]
    fn empty_frame_has_no_blobs() {
        let spec = LatticeSpec::new(5).unwrap();
        let blobs = extract_blobs(&spec, &BinaryState::dead(25)).unwrap();
        assert!(blobs.is_empty());
        let stats = frame_stats(&spec, &BinaryState::dead(25)).unwrap();
        assert_eq!(stats.blob_count, 0);
        assert_eq!(stats.alive_count, 0);
        assert_eq!(stats.frame_centroid, None);
        assert_eq!(stats.circ_min, None);
        assert_eq!(stats.centroid_correlation, None);
    }

    #[test]
    fn single_cell_blob_scores_maximum_circularity() {
        let spec = LatticeSpec::new(5).unwrap();
        let state = state_from_cells(&spec, &[(2, 2)]);
        let blobs = extract_blobs(&spec, &state).unwrap();
        assert_eq!(blobs.len(), 1);
        assert_eq!(blobs[0].area, 1);
        assert_eq!(blobs[0].perimeter, 4);
        assert_eq!(blobs[0].circularity, 4.0);
        assert_eq!(blobs[0].centroid, (2.0, 2.0));
    }

    #[test]
    fn corner_cell_perimeter_counts_the_boundary_as_dead() {
        let spec = LatticeSpec::new(4).unwrap();
        let state = state_from_cells(&spec, &[(0, 0)]);
        let blobs = extract_blobs(&spec, &state).unwrap();
        assert_eq!(blobs[0].perimeter, 4);
    }

    #[test]
    fn diagonal_pair_is_one_blob_at_maximum_circularity() {
        let spec = LatticeSpec::new(5).unwrap();
        let state = state_from_cells(&spec, &[(1, 1), (2, 2)]);
        let blobs = extract_blobs(&spec, &state).unwrap();
        assert_eq!(blobs.len(), 1);
        assert_eq!(blobs[0].area, 2);
        assert_eq!(blobs[0].perimeter, 8);
        assert_eq!(blobs[0].circularity, 4.0);
    }

    #[test]
    fn square_block_halves_the_circularity() {
        let spec = LatticeSpec::new(5).unwrap();
        let state = state_from_cells(&spec, &[(1, 1), (1, 2), (2, 1), (2, 2)]);
        let blobs = extract_blobs(&spec, &state).unwrap();
        assert_eq!(blobs.len(), 1);
        assert_eq!(blobs[0].area, 4);
        assert_eq!(blobs[0].perimeter, 8);
        assert_eq!(blobs[0].circularity, 2.0);
        assert_eq!(blobs[0].centroid, (1.5, 1.5));
    }

    #[test]
    fn partition_and_circularity_bound_on_random_frames() {
        let spec = LatticeSpec::new(8).unwrap();
        let mut rng = seeded_rng(2024);
        for _ in 0..200 {
            let state = random_state(&spec, rng.gen());
            let blobs = extract_blobs(&spec, &state).unwrap();
            let total: usize = blobs.iter().map(|b| b.area).sum();
            assert_eq!(total, state.alive_count());
            assert!(blobs.len() <= max_blob_count(8));
            let mut seen = vec![false; spec.cell_count()];
            for blob in &blobs {
                assert!(blob.circularity <= 4.0 + 1e-12);
                let has_edge_pair = blob.cells.iter().any(|&(r, c)| {
                    blob.cells.contains(&(r + 1, c)) || blob.cells.contains(&(r, c + 1))
                });
                if has_edge_pair {
                    assert!(blob.circularity < 4.0);
                } else {
                    assert_eq!(blob.circularity, 4.0);
                }
                for &(r, c) in &blob.cells {
                    let index = spec.index(r, c);
                    assert!(!seen[index], "cell in two blobs");
                    seen[index] = true;
                }
            }
        }
    }

    #[test]
    fn blob_set_is_scan_order_independent() {
        let spec = LatticeSpec::new(6).unwrap();
        let mut rng = seeded_rng(55);
        for _ in 0..50 {
            let state = random_state(&spec, rng.gen());
            let forward = extract_blobs(&spec, &state).unwrap();

            // Reverse-scan extraction: same flood fill, seeds visited from
            // the last cell backwards.
            let mut visited = vec![false; spec.cell_count()];
            let mut reverse: Vec<Vec<(usize, usize)>> = Vec::new();
            for seed in (0..spec.cell_count()).rev() {
                if visited[seed] || !state.is_alive(seed) {
                    continue;
                }
                let mut cells = Vec::new();
                let mut stack = vec![seed];
                visited[seed] = true;
                while let Some(cell) = stack.pop() {
                    let (row, col) = spec.coords(cell);
                    cells.push((row, col));
                    for dr in -1i64..=1 {
                        for dc in -1i64..=1 {
                            let (nr, nc) = (row as i64 + dr, col as i64 + dc);
                            if (dr == 0 && dc == 0)
                                || nr < 0
                                || nc < 0
                                || nr >= 6
                                || nc >= 6
                            {
                                continue;
                            }
                            let n = spec.index(nr as usize, nc as usize);
                            if !visited[n] && state.is_alive(n) {
                                visited[n] = true;
                                stack.push(n);
                            }
                        }
                    }
                }
                cells.sort_unstable();
                reverse.push(cells);
            }

            let mut forward_sets: Vec<Vec<(usize, usize)>> =
                forward.iter().map(|b| b.cells.clone()).collect();
            forward_sets.sort();
            reverse.sort();
            assert_eq!(forward_sets, reverse);
        }
    }

    #[test]
    fn frame_centroid_is_the_area_weighted_blob_centroid_mean() {
        let spec = LatticeSpec::new(8).unwrap();
        let mut rng = seeded_rng(91);
        for _ in 0..50 {
            let state = random_state(&spec, rng.gen());
            let stats = frame_stats(&spec, &state).unwrap();
            if stats.alive_count == 0 {
                continue;
            }
            let total = stats.alive_count as f64;
            let weighted_row: f64 = stats
                .blobs
                .iter()
                .map(|b| b.centroid.0 * b.area as f64)
                .sum::<f64>()
                / total;
            let weighted_col: f64 = stats
                .blobs
                .iter()
                .map(|b| b.centroid.1 * b.area as f64)
                .sum::<f64>()
                / total;
            let (row, col) = stats.frame_centroid.unwrap();
            assert!((row - weighted_row).abs() < 1e-12);
            assert!((col - weighted_col).abs() < 1e-12);
        }
    }

    #[test]
    fn centered_cell_centroid_and_diagonal_correlation() {
        let spec = LatticeSpec::new(5).unwrap();
        let single = frame_stats(&spec, &state_from_cells(&spec, &[(2, 2)])).unwrap();
        assert_eq!(single.frame_centroid, Some((2.0, 2.0)));
        assert_eq!(single.centroid_correlation, None);

        // Three isolated blobs with centroids on the main diagonal.
        let diagonal = frame_stats(
            &spec,
            &state_from_cells(&spec, &[(0, 0), (2, 2), (4, 4)]),
        )
        .unwrap();
        assert_eq!(diagonal.blob_count, 3);
        let r = diagonal.centroid_correlation.unwrap();
        assert!((r - 1.0).abs() < 1e-12);

        // Two blobs determine a line: correlation +-1 unless a coordinate
        // has zero variance.
        let two = frame_stats(&spec, &state_from_cells(&spec, &[(0, 4), (4, 0)])).unwrap();
        let r = two.centroid_correlation.unwrap();
        assert!((r.abs() - 1.0).abs() < 1e-12);

        // Same row: column varies, row variance is zero.
        let flat = frame_stats(&spec, &state_from_cells(&spec, &[(2, 0), (2, 4)])).unwrap();
        assert_eq!(flat.centroid_correlation, None);
    }

    #[test]
    fn histogram_counts_conserve_frames_and_round_half_up() {
        let spec = LatticeSpec::new(5).unwrap();
        let a = frame_stats(&spec, &state_from_cells(&spec, &[(1, 2), (2, 3)])).unwrap();
        assert_eq!(a.frame_centroid, Some((1.5, 2.5)));
        let dead = frame_stats(&spec, &BinaryState::dead(25)).unwrap();
        let b = frame_stats(&spec, &state_from_cells(&spec, &[(0, 0)])).unwrap();
        let frames = vec![a.clone(), dead, b, a];
        let histogram = accumulate_centroids(5, &frames);
        assert_eq!(histogram.count(2, 3), 2, "half-up rounding of (1.5, 2.5)");
        assert_eq!(histogram.count(0, 0), 1);
        assert_eq!(histogram.total(), 3);
        assert_eq!(histogram.skipped_dead_frames(), 1);
        assert_eq!(histogram.occupied_cells(), 2);
    }

    #[test]
    fn histogram_merge_adds_cellwise() {
        let spec = LatticeSpec::new(4).unwrap();
        let a = frame_stats(&spec, &state_from_cells(&spec, &[(1, 1)])).unwrap();
        let b = frame_stats(&spec, &state_from_cells(&spec, &[(2, 2)])).unwrap();
        let mut left = accumulate_centroids(4, &vec![a.clone()]);
        let right = accumulate_centroids(4, &vec![a, b]);
        left.merge(&right).unwrap();
        assert_eq!(left.count(1, 1), 2);
        assert_eq!(left.count(2, 2), 1);
        assert_eq!(left.total(), 3);
    }

    #[test]
    fn identical_frames_pile_up_in_one_cell() {
        let spec = LatticeSpec::new(5).unwrap();
        let stats = frame_stats(&spec, &state_from_cells(&spec, &[(3, 1)])).unwrap();
        let frames = vec![stats; 10];
        let histogram = accumulate_centroids(5, &frames);
        assert_eq!(histogram.count(3, 1), 10);
        assert_eq!(histogram.occupied_cells(), 1);
    }

    #[test]
    fn normalized_series_endpoints() {
        let spec = LatticeSpec::new(5).unwrap();
        let all = BinaryState::from_bits(vec![1; 25]).unwrap();
        let empty = BinaryState::dead(25);
        // Isolated cells at all even coordinates attain the blob maximum.
        let mut checker = BinaryState::dead(25);
        for row in (0..5).step_by(2) {
            for col in (0..5).step_by(2) {
                checker.set(spec.index(row, col), true);
            }
        }
        let trace = GenerationTrace::from_states(vec![all, empty, checker]).unwrap();
        let series = normalized_series(&spec, &trace).unwrap();
        assert_eq!(series[0], (1.0, 1.0 / 9.0));
        assert_eq!(series[1], (0.0, 0.0));
        assert_eq!(series[2], (9.0 / 25.0, 1.0));
    }

    #[test]
    fn exhaustive_small_lattices_attain_but_never_exceed_the_blob_maximum() {
        for side in [2usize, 3, 4] {
            let spec = LatticeSpec::new(side).unwrap();
            let cells = spec.cell_count();
            let mut best = 0;
            for encoded in 0u64..(1u64 << cells) {
                let state = BinaryState::decode(cells, encoded).unwrap();
                let blobs = extract_blobs(&spec, &state).unwrap();
                best = best.max(blobs.len());
                assert!(blobs.len() <= max_blob_count(side));
            }
            assert_eq!(best, max_blob_count(side), "side {side}");
        }
    }
}
