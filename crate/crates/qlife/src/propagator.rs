//! Single-particle reduction of the diffusion Hamiltonian and the density
//! transfer matrix.
//!
//! The many-body Hamiltonian is quadratic in fermionic operators: a number
//! term per cell plus hopping `a_alpha a_beta^dag + a_beta a_alpha^dag`
//! summed over ordered adjacent pairs. Normal-ordering via the canonical
//! anticommutation rules collapses it, up to an irrelevant additive
//! constant, onto the cell space as
//!
//! ```text
//! h = I - 2 A
//! ```
//!
//! where `A` is the 0/1 Moore adjacency matrix. Densities evolve through a
//! transient of length `tau` by the doubly stochastic matrix
//! `M[a][b] = |U[a][b]|^2` with `U = exp(-i h tau)`:
//!
//! ```text
//! n_a(tau) = sum_b M[a][b] n_b(0)
//! ```
//!
//! The additive constant dropped in the reduction is exactly a diagonal
//! shift of `h`, which cancels in `|U|^2`; `shifted` plus the
//! shift-invariance tests pin this down. `U` is computed from one full
//! symmetric eigendecomposition of `h`, reused across every `tau` of a
//! sweep.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::lattice::{BinaryState, DensityField, NeighborhoodTable};
use crate::{Error, Result};

/// Real symmetric cell-space Hamiltonian.
#[derive(Debug, Clone)]
pub struct SingleParticleHamiltonian {
    h: DMatrix<f64>,
}

impl SingleParticleHamiltonian {
    /// `h = I - 2A` for the adjacency described by `table`.
    pub fn from_table(table: &NeighborhoodTable) -> Self {
        let n = table.cell_count();
        let mut h = DMatrix::<f64>::identity(n, n);
        for a in 0..n {
            for &b in table.neighbors(a) {
                h[(a, b)] = -2.0;
            }
        }
        SingleParticleHamiltonian { h }
    }

    /// Wraps an explicit matrix; must be square and symmetric.
    pub fn from_matrix(h: DMatrix<f64>) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::Dimension(format!(
                "Hamiltonian must be square, got {}x{}",
                h.nrows(),
                h.ncols()
            )));
        }
        for i in 0..h.nrows() {
            for j in 0..i {
                if h[(i, j)] != h[(j, i)] {
                    return Err(Error::Numeric(format!(
                        "Hamiltonian not symmetric at ({i},{j}): {} vs {}",
                        h[(i, j)],
                        h[(j, i)]
                    )));
                }
            }
        }
        Ok(SingleParticleHamiltonian { h })
    }

    /// `h + c I`; the transfer matrix is invariant under this shift.
    pub fn shifted(&self, c: f64) -> Self {
        let n = self.h.nrows();
        SingleParticleHamiltonian {
            h: &self.h + DMatrix::<f64>::identity(n, n) * c,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }
}

/// Full symmetric eigendecomposition with a Jacobi polish pass.
///
/// The library QL solver keeps its eigenvector matrix orthogonal to machine
/// precision but can leave eigenvalue errors near 1e-8 on matrices with
/// degenerate or clustered spectra, which every lattice Hamiltonian here
/// has. Cross-checks against the exact small-system simulator run at 1e-10,
/// so that is not good enough. The fix: rotate into the QL eigenbasis,
/// where the matrix is already nearly diagonal, then run threshold cyclic
/// Jacobi sweeps to drive the remaining off-diagonal mass to roundoff.
/// Starting from a near-diagonal matrix the sweeps apply only a handful of
/// rotations, so the polish costs about as much as the two change-of-basis
/// multiplications. If QL fails to converge outright, plain Jacobi from the
/// identity takes over; it is slower but unconditionally convergent.
///
/// Returns eigenvalues ascending with matching eigenvector columns.
pub(crate) fn polished_symmetric_eigen(h: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = h.nrows();
    let scale = h.amax().max(f64::MIN_POSITIVE);
    let mut vectors = match SymmetricEigen::try_new(h.clone(), f64::EPSILON, 0) {
        Some(eig) => eig.eigenvectors,
        None => DMatrix::identity(n, n),
    };
    let mut core = vectors.transpose() * h * &vectors;

    let threshold = f64::EPSILON * scale;
    let max_sweeps = 30;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = 0.5 * (core[(p, q)] + core[(q, p)]);
                if apq.abs() <= threshold {
                    continue;
                }
                rotated = true;
                let theta = (core[(q, q)] - core[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let ekp = core[(k, p)];
                    let ekq = core[(k, q)];
                    core[(k, p)] = c * ekp - s * ekq;
                    core[(k, q)] = s * ekp + c * ekq;
                }
                for k in 0..n {
                    let epk = core[(p, k)];
                    let eqk = core[(q, k)];
                    core[(p, k)] = c * epk - s * eqk;
                    core[(q, k)] = s * epk + c * eqk;
                }
                for k in 0..n {
                    let vkp = vectors[(k, p)];
                    let vkq = vectors[(k, q)];
                    vectors[(k, p)] = c * vkp - s * vkq;
                    vectors[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut residual = 0.0f64;
    for p in 0..n {
        for q in (p + 1)..n {
            residual = residual.max(core[(p, q)].abs());
        }
    }
    if residual > 1e3 * (n as f64) * f64::EPSILON * scale {
        return Err(Error::Numeric(format!(
            "symmetric eigensolver stalled at off-diagonal residual {residual:.3e} (n={n})"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| core[(a, a)].total_cmp(&core[(b, b)]));
    let values = DVector::from_fn(n, |i, _| core[(order[i], order[i])]);
    let vectors = DMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Eigendecomposition `h = V diag(lambda) V^T`, the reusable part of
/// exponentiation: one decomposition serves every `tau`.
#[derive(Debug, Clone)]
pub struct HamiltonianEig {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

/// Relative reconstruction tolerance accepted from the eigensolver.
const EIG_RESIDUAL_TOL: f64 = 1e-11;

impl HamiltonianEig {
    pub fn new(h: &SingleParticleHamiltonian) -> Result<Self> {
        let n = h.dim();
        let (values, vectors) = polished_symmetric_eigen(h.matrix())?;
        let decomposition = HamiltonianEig { values, vectors };

        // Validate the decomposition and report the residual if it is bad;
        // downstream tolerances (unitarity 1e-10, stochasticity 1e-10) are
        // meaningless when reconstruction fails.
        let scale = h.matrix().amax().max(1.0);
        let residual = (decomposition.reconstruct() - h.matrix()).amax();
        if !(residual <= EIG_RESIDUAL_TOL * (n as f64) * scale) {
            return Err(Error::Numeric(format!(
                "eigendecomposition residual {residual:.3e} exceeds {:.3e} (n={n})",
                EIG_RESIDUAL_TOL * (n as f64) * scale
            )));
        }
        Ok(decomposition)
    }

    fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.values[k];
        }
        scaled * self.vectors.transpose()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `U(tau) = V exp(-i lambda tau) V^T`.
    ///
    /// `tau = 0` returns the exact identity rather than `V V^T`: the
    /// identity is the mathematically exact value, and the classical limit
    /// of the whole pipeline must be bit-exact, not merely within roundoff.
    pub fn propagator(&self, tau: f64) -> Propagator {
        let n = self.dim();
        if tau == 0.0 {
            return Propagator {
                u: DMatrix::from_diagonal_element(n, n, Complex64::new(1.0, 0.0)),
                tau,
            };
        }
        let mut vc = self.vectors.clone();
        let mut vs = self.vectors.clone();
        for k in 0..n {
            let (s, c) = (self.values[k] * tau).sin_cos();
            vc.column_mut(k).scale_mut(c);
            vs.column_mut(k).scale_mut(-s);
        }
        let re = vc * self.vectors.transpose();
        let im = vs * self.vectors.transpose();
        let u = DMatrix::from_fn(n, n, |i, j| Complex64::new(re[(i, j)], im[(i, j)]));
        Propagator { u, tau }
    }

    /// Shorthand for `propagator(tau).transfer_matrix()`.
    pub fn transfer_matrix(&self, tau: f64) -> TransferMatrix {
        self.propagator(tau).transfer_matrix()
    }
}

/// Unitary transient propagator `U = exp(-i h tau)`.
#[derive(Debug, Clone)]
pub struct Propagator {
    u: DMatrix<Complex64>,
    tau: f64,
}

impl Propagator {
    /// One-shot exponentiation; prefer [`HamiltonianEig`] when sweeping
    /// several `tau` values.
    pub fn exponentiate(h: &SingleParticleHamiltonian, tau: f64) -> Result<Self> {
        if tau < 0.0 {
            return Err(Error::Config(format!("tau must be nonnegative, got {tau}")));
        }
        Ok(HamiltonianEig::new(h)?.propagator(tau))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.u
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// `max |(U^dag U - I)[i][j]|`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim();
        let gram = self.u.adjoint() * &self.u;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                worst = worst.max((gram[(i, j)] - expected).norm());
            }
        }
        worst
    }

    /// `M[a][b] = |U[a][b]|^2`.
    pub fn transfer_matrix(&self) -> TransferMatrix {
        TransferMatrix {
            m: self.u.map(|z| z.norm_sqr()),
            tau: self.tau,
        }
    }
}

/// Doubly stochastic density-transfer matrix for one transient.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    m: DMatrix<f64>,
    tau: f64,
}

impl TransferMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Advances a binary state through the transient: the output density is
    /// the sum of the columns of `M` at the alive cells. Exactly
    /// `evolve_density` on the 0/1 field, but skips the dead columns.
    pub fn evolve_state(&self, state: &BinaryState) -> Result<DensityField> {
        self.check_dim(state.cell_count())?;
        let mut out = DVector::<f64>::zeros(self.dim());
        for (cell, &bit) in state.bits().iter().enumerate() {
            if bit == 1 {
                out += self.m.column(cell);
            }
        }
        Ok(DensityField::from_dvector(out))
    }

    /// `n(tau) = M n(0)` for an arbitrary density field.
    pub fn evolve_density(&self, field: &DensityField) -> Result<DensityField> {
        self.check_dim(field.cell_count())?;
        Ok(DensityField::from_dvector(&self.m * field.values()))
    }

    fn check_dim(&self, cells: usize) -> Result<()> {
        if cells != self.dim() {
            return Err(Error::Dimension(format!(
                "transfer matrix is {}x{} but the state has {} cells",
                self.dim(),
                self.dim(),
                cells
            )));
        }
        Ok(())
    }

    /// Largest deviation of any row sum from 1.
    pub fn max_row_sum_residual(&self) -> f64 {
        (0..self.dim())
            .map(|i| (self.m.row(i).sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of any column sum from 1.
    pub fn max_col_sum_residual(&self) -> f64 {
        (0..self.dim())
            .map(|j| (self.m.column(j).sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation from symmetry, `max |M - M^T|`.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)]).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{random_state_from, seeded_rng, LatticeSpec};

    const TAU_GRID: [f64; 6] = [0.0, 0.01, 0.1, 0.25, 0.5, 1.0];

    fn moore_h(side: usize) -> SingleParticleHamiltonian {
        let spec = LatticeSpec::new(side).unwrap();
        SingleParticleHamiltonian::from_table(&NeighborhoodTable::moore(&spec))
    }

    #[test]
    fn two_by_two_hamiltonian_entries() {
        // On a 2x2 lattice every cell is a Moore neighbor of every other.
        let h = moore_h(2);
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 1.0 } else { -2.0 };
                assert_eq!(h.matrix()[(i, j)], expected);
            }
        }
    }

    #[test]
    fn two_mode_chain_matches_closed_form() {
        // For h = [[1,-2],[-2,1]] the hopping probability has the closed
        // form |U_01|^2 = sin^2(2 tau).
        let h = SingleParticleHamiltonian::from_table(&NeighborhoodTable::chain(2));
        assert_eq!(h.matrix()[(0, 0)], 1.0);
        assert_eq!(h.matrix()[(0, 1)], -2.0);
        let eig = HamiltonianEig::new(&h).unwrap();
        for tau in [0.05, 0.1, 0.3, 0.7, 1.0, 2.3] {
            let m = eig.transfer_matrix(tau);
            let expected = (2.0 * tau).sin().powi(2);
            assert!(
                (m.matrix()[(0, 1)] - expected).abs() < 1e-12,
                "tau={tau}: {} vs sin^2(2tau)={expected}",
                m.matrix()[(0, 1)]
            );
        }
    }

    #[test]
    fn tau_zero_is_exactly_identity() {
        let eig = HamiltonianEig::new(&moore_h(3)).unwrap();
        let prop = eig.propagator(0.0);
        let m = prop.transfer_matrix();
        for i in 0..9 {
            for j in 0..9 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_eq!(prop.matrix()[(i, j)], Complex64::new(expected, 0.0));
                assert_eq!(m.matrix()[(i, j)], expected);
            }
        }
    }

    #[test]
    fn isolated_mode_keeps_identity_transfer_for_all_tau() {
        // A single site with no neighbors has h = [1]; U is a pure phase,
        // so M = [1] for every tau.
        let h = SingleParticleHamiltonian::from_table(&NeighborhoodTable::chain(1));
        let eig = HamiltonianEig::new(&h).unwrap();
        for tau in TAU_GRID {
            let m = eig.transfer_matrix(tau);
            assert!((m.matrix()[(0, 0)] - 1.0).abs() < 1e-14, "tau={tau}");
        }
    }

    #[test]
    fn unitarity_on_tau_grid() {
        for side in [2, 3, 5] {
            let eig = HamiltonianEig::new(&moore_h(side)).unwrap();
            for tau in TAU_GRID {
                let residual = eig.propagator(tau).unitarity_residual();
                assert!(
                    residual < 1e-10,
                    "L={side}, tau={tau}: unitarity residual {residual:.3e}"
                );
            }
        }
    }

    #[test]
    fn doubly_stochastic_and_symmetric_on_tau_grid() {
        for side in [2, 3, 5] {
            let eig = HamiltonianEig::new(&moore_h(side)).unwrap();
            for tau in TAU_GRID {
                let m = eig.transfer_matrix(tau);
                assert!(m.max_row_sum_residual() < 1e-10, "L={side} tau={tau}");
                assert!(m.max_col_sum_residual() < 1e-10, "L={side} tau={tau}");
                assert!(m.max_asymmetry() < 1e-10, "L={side} tau={tau}");
                assert!(m.matrix().iter().all(|&x| (-1e-15..=1.0 + 1e-12).contains(&x)));
            }
        }
    }

    #[test]
    fn diagonal_shift_leaves_transfer_matrix_unchanged() {
        for side in [2, 3] {
            let h = moore_h(side);
            let base = HamiltonianEig::new(&h).unwrap().transfer_matrix(0.37);
            for c in [-3.0, 1.0, 10.0] {
                let shifted = HamiltonianEig::new(&h.shifted(c))
                    .unwrap()
                    .transfer_matrix(0.37);
                let diff = (shifted.matrix() - base.matrix()).amax();
                assert!(diff < 1e-12, "L={side}, shift c={c} moved M by {diff:.3e}");
            }
        }
    }

    #[test]
    fn two_by_two_spectrum_is_known_in_closed_form() {
        // h = I - 2A with complete adjacency on 4 cells: eigenvalues are
        // 1 - 2*3 = -5 (uniform vector) and 1 + 2 = 3 (threefold).
        let eig = HamiltonianEig::new(&moore_h(2)).unwrap();
        let expected = [-5.0, 3.0, 3.0, 3.0];
        for (k, &want) in expected.iter().enumerate() {
            assert!(
                (eig.values()[k] - want).abs() < 1e-12,
                "eigenvalue {k}: {} vs {want}",
                eig.values()[k]
            );
        }
    }

    #[test]
    fn from_matrix_rejects_asymmetry() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 1.0]);
        assert!(SingleParticleHamiltonian::from_matrix(bad).is_err());
        let rect = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert!(SingleParticleHamiltonian::from_matrix(rect).is_err());
    }

    #[test]
    fn exponentiate_rejects_negative_tau() {
        assert!(Propagator::exponentiate(&moore_h(2), -0.1).is_err());
    }

    #[test]
    fn all_alive_maps_to_all_ones_and_dead_to_zeros() {
        let spec = LatticeSpec::new(4).unwrap();
        let eig = HamiltonianEig::new(&moore_h(4)).unwrap();
        let m = eig.transfer_matrix(0.33);
        let ones = m
            .evolve_state(&BinaryState::from_bits(vec![1; 16]).unwrap())
            .unwrap();
        for cell in 0..spec.cell_count() {
            assert!((ones.get(cell) - 1.0).abs() < 1e-10);
        }
        let zeros = m.evolve_state(&BinaryState::dead(16)).unwrap();
        assert_eq!(zeros.total(), 0.0);
    }

    #[test]
    fn state_and_density_paths_agree() {
        let eig = HamiltonianEig::new(&moore_h(5)).unwrap();
        let m = eig.transfer_matrix(0.4);
        let mut rng = seeded_rng(11);
        for _ in 0..10 {
            let state = random_state_from(25, &mut rng);
            let via_state = m.evolve_state(&state).unwrap();
            let via_density = m
                .evolve_density(&DensityField::from_state(&state))
                .unwrap();
            for cell in 0..25 {
                assert!((via_state.get(cell) - via_density.get(cell)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn total_density_is_conserved_through_transients() {
        let eig = HamiltonianEig::new(&moore_h(5)).unwrap();
        let mut rng = seeded_rng(3);
        for tau in TAU_GRID {
            let m = eig.transfer_matrix(tau);
            for _ in 0..5 {
                let state = random_state_from(25, &mut rng);
                let evolved = m.evolve_state(&state).unwrap();
                assert!(
                    (evolved.total() - state.alive_count() as f64).abs() < 1e-9,
                    "tau={tau}"
                );
            }
        }
    }

    #[test]
    fn evolve_dimension_mismatch_is_an_error() {
        let eig = HamiltonianEig::new(&moore_h(3)).unwrap();
        let m = eig.transfer_matrix(0.1);
        assert!(m.evolve_state(&BinaryState::dead(4)).is_err());
    }
}
