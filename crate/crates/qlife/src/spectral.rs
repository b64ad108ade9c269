//! Run statistics: the quantum-vs-classical deviation surface, alive-cell
//! density series, Fourier power spectra of cell histories, and power-law
//! fits.
//!
//! The deviation metric compares the binary state at generation index 2
//! (counting from 0, i.e. after two rule applications) between a quantum
//! run and the classical reference started from the same initial state,
//! normalized to the cell count. Surfaces average that metric over a
//! seeded ensemble of initial conditions on a (tau, sigma) grid.
//!
//! Spectra follow the convention `n~_alpha(f) = (1/T) sum_t s_alpha(t)
//! exp(-i 2 pi t f / T)` on the binary history `s_alpha` of each cell,
//! with `S(f) = sum_alpha |n~_alpha(f)|^2` and integer frequencies
//! `f = 0..T-1`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::engine::{self, GenerationTrace, RuleParams, RuleReading, RunConfig};
use crate::lattice::{ensemble_rng, random_state_from, BinaryState, LatticeSpec, NeighborhoodTable};
use crate::propagator::{HamiltonianEig, SingleParticleHamiltonian};
use crate::{Error, Result};

/// Mean deviation between two runs on a (tau, sigma) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSurface {
    tau_grid: Vec<f64>,
    sigma_grid: Vec<f64>,
    /// `values[tau_index][sigma_index]`, each in `[0, 1]`.
    values: Vec<Vec<f64>>,
    ensemble_size: usize,
}

impl DeltaSurface {
    /// Wraps precomputed values; grid and value dimensions must agree.
    pub fn from_values(
        tau_grid: Vec<f64>,
        sigma_grid: Vec<f64>,
        values: Vec<Vec<f64>>,
        ensemble_size: usize,
    ) -> Result<Self> {
        if values.len() != tau_grid.len()
            || values.iter().any(|row| row.len() != sigma_grid.len())
        {
            return Err(Error::Dimension(format!(
                "surface shape {}x{} does not match value rows",
                tau_grid.len(),
                sigma_grid.len()
            )));
        }
        Ok(DeltaSurface {
            tau_grid,
            sigma_grid,
            values,
            ensemble_size,
        })
    }

    pub fn tau_grid(&self) -> &[f64] {
        &self.tau_grid
    }

    pub fn sigma_grid(&self) -> &[f64] {
        &self.sigma_grid
    }

    pub fn ensemble_size(&self) -> usize {
        self.ensemble_size
    }

    pub fn value(&self, tau_index: usize, sigma_index: usize) -> f64 {
        self.values[tau_index][sigma_index]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Mean over each tau row (the tau-marginal used for trend checks).
    pub fn tau_marginal_means(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|row| row.iter().sum::<f64>() / row.len().max(1) as f64)
            .collect()
    }
}

/// Fourier power spectrum of a run, indexed by integer frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    s: Vec<f64>,
}

impl Spectrum {
    /// Wraps a precomputed spectrum; values must be nonnegative.
    pub fn from_values(s: Vec<f64>) -> Result<Self> {
        if s.len() < 2 {
            return Err(Error::Dimension(
                "a spectrum needs at least 2 frequency bins".into(),
            ));
        }
        if s.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Numeric("spectral power must be nonnegative".into()));
        }
        Ok(Spectrum { s })
    }

    /// Number of frequency bins (equals the generation count).
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn value(&self, f: usize) -> f64 {
        self.s[f]
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    /// Largest violation of the real-input symmetry `S(f) = S(T-f)`.
    pub fn max_symmetry_violation(&self) -> f64 {
        let t = self.s.len();
        (1..t)
            .map(|f| (self.s[f] - self.s[t - f]).abs())
            .fold(0.0, f64::max)
    }

    /// Frequency of the largest bin among `f >= 1` (smallest such `f` on
    /// ties). `None` when the spectrum has no positive bin beyond DC.
    pub fn dominant_nonzero_bin(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (f, &v) in self.s.iter().enumerate().skip(1) {
            if v > 0.0 && best.map_or(true, |(_, bv)| v > bv) {
                best = Some((f, v));
            }
        }
        best.map(|(f, _)| f)
    }
}

/// Least-squares power law `S(f) ~ C f^alpha` over a frequency range.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawFit {
    pub c: f64,
    pub alpha: f64,
    pub f_lo: usize,
    pub f_hi: usize,
    /// Bins in the range skipped because their power was zero.
    pub excluded_zero_bins: usize,
    /// Root-mean-square residual of the log-log fit.
    pub rms_residual: f64,
}

/// Deviation between two runs: the fraction of cells whose binary state
/// differs at generation index 2. Symmetric in its arguments.
pub fn delta_metric(a: &GenerationTrace, b: &GenerationTrace) -> Result<f64> {
    if a.generations() < 3 || b.generations() < 3 {
        return Err(Error::Config(format!(
            "deviation needs at least 3 generations per trace, got {} and {}",
            a.generations(),
            b.generations()
        )));
    }
    let cells = a.cell_count();
    if cells != b.cell_count() {
        return Err(Error::Dimension(format!(
            "traces live on different lattices: {cells} vs {} cells",
            b.cell_count()
        )));
    }
    let sa = a.state(2);
    let sb = b.state(2);
    let differing = (0..cells)
        .filter(|&cell| sa.is_alive(cell) != sb.is_alive(cell))
        .count();
    Ok(differing as f64 / cells as f64)
}

/// Computes the deviation surface over a (tau, sigma) grid.
///
/// Ensemble member `k` draws its initial state from the `k`-th stream of
/// `seed`, so the ensemble is stable under grid changes. Each member's
/// classical reference is computed once and shared across the whole grid;
/// each tau row builds exactly one transfer matrix. Rows are computed in
/// parallel; within a row the ensemble mean accumulates in fixed member
/// order, so results do not depend on the worker count.
pub fn delta_surface(
    spec: &LatticeSpec,
    tau_grid: &[f64],
    sigma_grid: &[f64],
    ensemble_size: usize,
    seed: u64,
    reading: RuleReading,
) -> Result<DeltaSurface> {
    if tau_grid.is_empty() || sigma_grid.is_empty() {
        return Err(Error::Config("surface grids must be nonempty".into()));
    }
    if ensemble_size == 0 {
        return Err(Error::Config("ensemble size must be at least 1".into()));
    }
    let table = NeighborhoodTable::moore(spec);
    let eig = HamiltonianEig::new(&SingleParticleHamiltonian::from_table(&table))?;

    let initial_states: Vec<BinaryState> = (0..ensemble_size)
        .map(|member| {
            let mut rng = ensemble_rng(seed, member as u64);
            random_state_from(spec.cell_count(), &mut rng)
        })
        .collect();
    let references: Vec<GenerationTrace> = initial_states
        .iter()
        .map(|state| engine::classical_trace(&table, state, 3))
        .collect::<Result<_>>()?;

    let values: Vec<Vec<f64>> = tau_grid
        .par_iter()
        .map(|&tau| -> Result<Vec<f64>> {
            let transfer = eig.transfer_matrix(tau);
            let mut row = Vec::with_capacity(sigma_grid.len());
            for &sigma in sigma_grid {
                let rule = RuleParams::new(sigma)?.with_reading(reading);
                let config = RunConfig {
                    spec: *spec,
                    tau,
                    rule,
                    generations: 3,
                    seed,
                };
                let mut total = 0.0;
                for (state, reference) in initial_states.iter().zip(&references) {
                    let trace = engine::run(&config, &transfer, state)?;
                    total += delta_metric(&trace, reference)?;
                }
                row.push(total / ensemble_size as f64);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    DeltaSurface::from_values(
        tau_grid.to_vec(),
        sigma_grid.to_vec(),
        values,
        ensemble_size,
    )
}

/// Per tau row, the smallest sigma attaining the row minimum (the left
/// edge of a minimum plateau).
pub fn sigma_min_curve(surface: &DeltaSurface) -> Vec<(f64, f64)> {
    surface
        .tau_grid()
        .iter()
        .enumerate()
        .map(|(i, &tau)| {
            let row = &surface.rows()[i];
            let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let j = row.iter().position(|&v| v == min).unwrap_or(0);
            (tau, surface.sigma_grid()[j])
        })
        .collect()
}

/// For one sigma column, the smallest tau at which the surface reaches
/// `level`, linearly interpolated between bracketing grid rows. `None`
/// when the column never reaches the level.
pub fn contour_tau(surface: &DeltaSurface, sigma_index: usize, level: f64) -> Option<f64> {
    let taus = surface.tau_grid();
    let mut prev = (taus[0], surface.value(0, sigma_index));
    if prev.1 >= level {
        return Some(prev.0);
    }
    for i in 1..taus.len() {
        let here = (taus[i], surface.value(i, sigma_index));
        if here.1 >= level {
            let (t0, v0) = prev;
            let (t1, v1) = here;
            if v1 == v0 {
                return Some(t1);
            }
            return Some(t0 + (level - v0) / (v1 - v0) * (t1 - t0));
        }
        prev = here;
    }
    None
}

/// Ordinary least-squares slopes of a curve over three tau segments split
/// at the given breakpoints; segments with fewer than 2 points report 0.
/// Used to summarize the piecewise behavior of the sigma_min curve.
pub fn piecewise_slopes(curve: &[(f64, f64)], breaks: (f64, f64)) -> (f64, f64, f64) {
    let slope = |points: Vec<(f64, f64)>| -> f64 {
        let n = points.len() as f64;
        if points.len() < 2 {
            return 0.0;
        }
        let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
        let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = points
            .iter()
            .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
            .sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
        if sxx == 0.0 {
            0.0
        } else {
            sxy / sxx
        }
    };
    let low: Vec<_> = curve.iter().filter(|p| p.0 <= breaks.0).cloned().collect();
    let mid: Vec<_> = curve
        .iter()
        .filter(|p| p.0 > breaks.0 && p.0 <= breaks.1)
        .cloned()
        .collect();
    let high: Vec<_> = curve.iter().filter(|p| p.0 > breaks.1).cloned().collect();
    (slope(low), slope(mid), slope(high))
}

/// Alive-cell fraction per generation.
pub fn density_series(trace: &GenerationTrace) -> Vec<f64> {
    let cells = trace.cell_count().max(1);
    trace
        .states()
        .iter()
        .map(|state| state.alive_count() as f64 / cells as f64)
        .collect()
}

/// Fourier power spectrum of the binary cell histories of a run.
pub fn power_spectrum(trace: &GenerationTrace) -> Result<Spectrum> {
    let t = trace.generations();
    if t < 2 {
        return Err(Error::Config(format!(
            "spectrum needs at least 2 generations, got {t}"
        )));
    }
    let cells = trace.cell_count();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(t);
    let mut s = vec![0.0f64; t];
    let mut buffer = vec![Complex64::new(0.0, 0.0); t];
    let norm = 1.0 / (t as f64 * t as f64);
    for cell in 0..cells {
        for (step, slot) in buffer.iter_mut().enumerate() {
            *slot = Complex64::new(
                if trace.state(step).is_alive(cell) {
                    1.0
                } else {
                    0.0
                },
                0.0,
            );
        }
        fft.process(&mut buffer);
        for (f, value) in buffer.iter().enumerate() {
            s[f] += value.norm_sqr() * norm;
        }
    }
    Spectrum::from_values(s)
}

/// Fits `S(f) ~ C f^alpha` by ordinary least squares on (log f, log S)
/// over `f in [f_lo, f_hi]`. Zero-power bins are excluded (counted in the
/// result); a range with fewer than 2 positive bins cannot be fitted.
pub fn fit_power_law(spectrum: &Spectrum, f_lo: usize, f_hi: usize) -> Result<PowerLawFit> {
    let half = spectrum.len() / 2;
    if f_lo < 1 || f_lo >= f_hi || f_hi > half {
        return Err(Error::Config(format!(
            "fit range [{f_lo}, {f_hi}] invalid: need 1 <= f_lo < f_hi <= {half}"
        )));
    }
    let mut points = Vec::with_capacity(f_hi - f_lo + 1);
    let mut excluded = 0usize;
    for f in f_lo..=f_hi {
        let v = spectrum.value(f);
        if v > 0.0 {
            points.push(((f as f64).ln(), v.ln()));
        } else {
            excluded += 1;
        }
    }
    if points.len() < 2 {
        return Err(Error::Numeric(format!(
            "power-law fit impossible on [{f_lo}, {f_hi}]: only {} positive bins",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Numeric(
            "power-law fit impossible: degenerate frequency range".into(),
        ));
    }
    let alpha = sxy / sxx;
    let intercept = mean_y - alpha * mean_x;
    let rms = (points
        .iter()
        .map(|p| (p.1 - (intercept + alpha * p.0)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(PowerLawFit {
        c: intercept.exp(),
        alpha,
        f_lo,
        f_hi,
        excluded_zero_bins: excluded,
        rms_residual: rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::classical_trace;
    use crate::lattice::random_state;

    fn lattice(side: usize) -> (LatticeSpec, NeighborhoodTable) {
        let spec = LatticeSpec::new(side).unwrap();
        let table = NeighborhoodTable::moore(&spec);
        (spec, table)
    }

    fn single_cell_state(cells: usize, cell: usize) -> BinaryState {
        let mut state = BinaryState::dead(cells);
        state.set(cell, true);
        state
    }

    #[test]
    fn identical_traces_have_zero_deviation() {
        let (spec, table) = lattice(33);
        let state = random_state(&spec, 3);
        let a = classical_trace(&table, &state, 3).unwrap();
        let b = classical_trace(&table, &state, 3).unwrap();
        assert_eq!(delta_metric(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn single_cell_difference_is_one_over_cell_count() {
        let empty = BinaryState::dead(1089);
        let a = GenerationTrace::from_states(vec![empty.clone(); 3]).unwrap();
        let b = GenerationTrace::from_states(vec![
            empty.clone(),
            empty,
            single_cell_state(1089, 512),
        ])
        .unwrap();
        let delta = delta_metric(&a, &b).unwrap();
        assert_eq!(delta, 1.0 / 1089.0);
        assert_eq!(delta_metric(&b, &a).unwrap(), delta);
    }

    #[test]
    fn deviation_requires_three_generations() {
        let state = BinaryState::dead(9);
        let short = GenerationTrace::from_states(vec![state.clone(); 2]).unwrap();
        let full = GenerationTrace::from_states(vec![state; 3]).unwrap();
        assert!(delta_metric(&short, &full).is_err());
    }

    #[test]
    fn surface_origin_is_zero_and_values_bounded() {
        let spec = LatticeSpec::new(5).unwrap();
        let surface = delta_surface(
            &spec,
            &[0.0, 0.1, 0.3],
            &[0.0, 0.5],
            10,
            42,
            RuleReading::Evolved,
        )
        .unwrap();
        assert_eq!(surface.value(0, 0), 0.0);
        for row in surface.rows() {
            for &v in row {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn surface_is_reproducible_bit_for_bit() {
        let spec = LatticeSpec::new(4).unwrap();
        let grid_t = [0.0, 0.2];
        let grid_s = [0.0, 0.4, 0.8];
        let a = delta_surface(&spec, &grid_t, &grid_s, 8, 7, RuleReading::Evolved).unwrap();
        let b = delta_surface(&spec, &grid_t, &grid_s, 8, 7, RuleReading::Evolved).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sigma_min_picks_the_plateau_left_edge() {
        let surface = DeltaSurface::from_values(
            vec![0.0, 0.1],
            vec![0.0, 0.25, 0.5, 0.75],
            vec![vec![0.0, 0.0, 0.0, 0.0], vec![0.3, 0.1, 0.1, 0.2]],
            1,
        )
        .unwrap();
        let curve = sigma_min_curve(&surface);
        assert_eq!(curve[0], (0.0, 0.0));
        assert_eq!(curve[1], (0.1, 0.25));
    }

    #[test]
    fn contour_interpolates_between_rows() {
        let surface = DeltaSurface::from_values(
            vec![0.0, 0.1, 0.2],
            vec![0.5],
            vec![vec![0.0], vec![0.01], vec![0.03]],
            1,
        )
        .unwrap();
        let tau = contour_tau(&surface, 0, 0.02).unwrap();
        assert!((tau - 0.15).abs() < 1e-12);
        assert!(contour_tau(&surface, 0, 0.5).is_none());
    }

    #[test]
    fn density_series_matches_population() {
        let (spec, table) = lattice(5);
        let all_alive = BinaryState::from_bits(vec![1; 25]).unwrap();
        let trace = GenerationTrace::from_states(vec![all_alive]).unwrap();
        assert_eq!(density_series(&trace), vec![1.0]);

        let mut blinker = BinaryState::dead(25);
        for row in 1..4 {
            blinker.set(spec.index(row, 2), true);
        }
        let trace = classical_trace(&table, &blinker, 8).unwrap();
        for d in density_series(&trace) {
            assert_eq!(d, 3.0 / 25.0);
        }
    }

    #[test]
    fn constant_trace_has_dc_only_spectrum() {
        let mut state = BinaryState::dead(9);
        state.set(2, true);
        state.set(7, true);
        let trace = GenerationTrace::from_states(vec![state; 16]).unwrap();
        let spectrum = power_spectrum(&trace).unwrap();
        assert!((spectrum.value(0) - 2.0).abs() < 1e-9);
        for f in 1..16 {
            assert!(spectrum.value(f).abs() < 1e-12, "bin {f}");
        }
    }

    #[test]
    fn alternating_cell_peaks_at_half_the_window() {
        let t = 4096;
        let states: Vec<BinaryState> = (0..t)
            .map(|k| {
                if k % 2 == 1 {
                    single_cell_state(9, 4)
                } else {
                    BinaryState::dead(9)
                }
            })
            .collect();
        let trace = GenerationTrace::from_states(states).unwrap();
        let spectrum = power_spectrum(&trace).unwrap();
        assert!((spectrum.value(0) - 0.25).abs() < 1e-9);
        assert!((spectrum.value(t / 2) - 0.25).abs() < 1e-9);
        for (f, &v) in spectrum.values().iter().enumerate() {
            if f != 0 && f != t / 2 {
                assert!(v < 1e-12, "unexpected power at bin {f}");
            }
        }
        assert_eq!(spectrum.dominant_nonzero_bin(), Some(t / 2));
    }

    #[test]
    fn spectrum_matches_a_direct_dft_and_parseval() {
        let (spec, table) = lattice(3);
        let trace = classical_trace(&table, &random_state(&spec, 11), 64).unwrap();
        let spectrum = power_spectrum(&trace).unwrap();

        let t = 64usize;
        let mut direct = vec![0.0f64; t];
        let mut time_side = 0.0f64;
        for cell in 0..9 {
            for f in 0..t {
                let mut acc = Complex64::new(0.0, 0.0);
                for step in 0..t {
                    if trace.state(step).is_alive(cell) {
                        let angle = -2.0 * std::f64::consts::PI * (step * f) as f64 / t as f64;
                        acc += Complex64::new(angle.cos(), angle.sin());
                    }
                }
                direct[f] += (acc / t as f64).norm_sqr();
            }
            let ones = (0..t).filter(|&s| trace.state(s).is_alive(cell)).count();
            time_side += ones as f64 / t as f64;
        }
        for f in 0..t {
            assert!(
                (spectrum.value(f) - direct[f]).abs() < 1e-9,
                "bin {f}: {} vs {}",
                spectrum.value(f),
                direct[f]
            );
        }
        let total: f64 = spectrum.values().iter().sum();
        assert!((total - time_side).abs() < 1e-9, "energy mismatch");
        assert!(spectrum.max_symmetry_violation() < 1e-9);
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let t = 512;
        let values: Vec<f64> = (0..t)
            .map(|f| {
                if f == 0 {
                    5.0
                } else {
                    0.4 * (f as f64).powf(-1.033)
                }
            })
            .collect();
        let spectrum = Spectrum::from_values(values).unwrap();
        let fit = fit_power_law(&spectrum, 1, 256).unwrap();
        assert!((fit.c - 0.4).abs() < 1e-6);
        assert!((fit.alpha + 1.033).abs() < 1e-6);
        assert_eq!(fit.excluded_zero_bins, 0);
        assert!(fit.rms_residual < 1e-9);
    }

    #[test]
    fn fit_range_validation_and_zero_bins() {
        let mut values = vec![0.0; 64];
        values[0] = 1.0;
        for f in 1..64 {
            values[f] = if f % 2 == 0 { 0.0 } else { 1.0 / f as f64 };
        }
        let spectrum = Spectrum::from_values(values).unwrap();
        assert!(fit_power_law(&spectrum, 0, 10).is_err());
        assert!(fit_power_law(&spectrum, 5, 5).is_err());
        assert!(fit_power_law(&spectrum, 1, 33).is_err());
        let fit = fit_power_law(&spectrum, 1, 8).unwrap();
        assert_eq!(fit.excluded_zero_bins, 4);

        let flat = Spectrum::from_values(vec![0.0; 64]).unwrap();
        assert!(fit_power_law(&flat, 1, 8).is_err());
    }
}
