//! Exact full-Hilbert-space reference simulator for small mode counts.
//!
//! The lattice dynamics used everywhere else in this crate lives in the
//! cell-space reduction (see [`crate::propagator`]). This module builds the
//! unreduced many-body picture for up to 12 modes: fermionic ladder
//! operators under the Jordan-Wigner construction, the full diffusion
//! Hamiltonian, Schrodinger evolution, number-operator expectations, the
//! trajectory-derived rule operator, and classifiers for induced
//! observable sequences. Everything here is exponentially sized in the
//! mode count, so it exists to cross-check the reduced pipeline and to
//! probe the sequence-level theory on tiny lattices, not to scale.
//!
//! Conventions: basis state index `n` in `0..2^m` encodes occupations with
//! mode 0 in the least significant bit, matching
//! [`crate::lattice::BinaryState::encode`]. Ladder operators carry the
//! Jordan-Wigner sign `(-1)^(number of occupied modes below the target)`,
//! which makes every operator an integer matrix and the canonical
//! anticommutation relations exact in integer arithmetic.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::lattice::{BinaryState, DensityField, NeighborhoodTable};
use crate::propagator::polished_symmetric_eigen;
use crate::{Error, Result};

/// Hard ceiling on the mode count; dimension 2^12 = 4096 keeps dense
/// eigendecompositions of the full Hamiltonian within desk-scale time.
pub const MAX_MODES: usize = 12;

/// Absolute tolerance for "this observable sequence has settled".
pub const SETTLE_TOL: f64 = 1e-9;

/// The 2^m-dimensional fermionic Fock space over `m` modes.
#[derive(Debug, Clone)]
pub struct FockSpace {
    modes: usize,
}

impl FockSpace {
    pub fn new(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Config("mode count must be positive".into()));
        }
        if modes > MAX_MODES {
            return Err(Error::Capacity(format!(
                "{modes} modes exceed the {MAX_MODES}-mode ceiling (dimension 2^{modes})"
            )));
        }
        Ok(FockSpace { modes })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        1usize << self.modes
    }

    /// Basis index of a binary lattice state (mode 0 = least significant bit).
    pub fn basis_index(&self, state: &BinaryState) -> Result<usize> {
        if state.cell_count() != self.modes {
            return Err(Error::Dimension(format!(
                "state has {} cells but the space has {} modes",
                state.cell_count(),
                self.modes
            )));
        }
        Ok(state.encode()? as usize)
    }

    /// Annihilation operator for one mode, as an exact integer matrix.
    pub fn annihilation(&self, mode: usize) -> FermionOp {
        assert!(mode < self.modes, "mode {mode} out of range");
        let dim = self.dim();
        let bit = 1usize << mode;
        let mut cols = vec![Vec::new(); dim];
        for (n, col) in cols.iter_mut().enumerate() {
            if n & bit != 0 {
                let sign = if (n & (bit - 1)).count_ones() % 2 == 0 {
                    1
                } else {
                    -1
                };
                col.push((n ^ bit, sign));
            }
        }
        FermionOp { dim, cols }
    }

    /// Creation operator: adjoint of [`annihilation`](Self::annihilation).
    pub fn creation(&self, mode: usize) -> FermionOp {
        self.annihilation(mode).adjoint()
    }

    /// Number operator `N = a^dag a` for one mode.
    pub fn number(&self, mode: usize) -> FermionOp {
        self.creation(mode).product(&self.annihilation(mode))
    }

    /// Total number operator `sum_alpha N_alpha`.
    pub fn total_number(&self) -> FermionOp {
        let mut total = FermionOp::zero(self.dim());
        for mode in 0..self.modes {
            total = total.add(&self.number(mode));
        }
        total
    }
}

/// Sparse integer matrix on the Fock space. The Jordan-Wigner ladder
/// operators and every polynomial in them used here have integer entries,
/// so products, sums, and equality checks are exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FermionOp {
    dim: usize,
    /// `cols[j]` holds the nonzero entries of column `j` as sorted
    /// `(row, value)` pairs with no zero values (canonical form).
    cols: Vec<Vec<(usize, i64)>>,
}

impl FermionOp {
    pub fn zero(dim: usize) -> Self {
        FermionOp {
            dim,
            cols: vec![Vec::new(); dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        FermionOp {
            dim,
            cols: (0..dim).map(|j| vec![(j, 1)]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Transpose; equals the adjoint because entries are real.
    pub fn adjoint(&self) -> Self {
        let mut cols = vec![Vec::new(); self.dim];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                cols[i].push((j, v));
            }
        }
        let mut out = FermionOp { dim: self.dim, cols };
        out.canonicalize();
        out
    }

    /// Matrix product `self * rhs`, exact.
    pub fn product(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        let mut cols = vec![Vec::new(); self.dim];
        for (j, rcol) in rhs.cols.iter().enumerate() {
            for &(k, rv) in rcol {
                for &(i, lv) in &self.cols[k] {
                    cols[j].push((i, lv * rv));
                }
            }
        }
        let mut out = FermionOp { dim: self.dim, cols };
        out.canonicalize();
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        let mut cols = self.cols.clone();
        for (j, rcol) in rhs.cols.iter().enumerate() {
            cols[j].extend_from_slice(rcol);
        }
        let mut out = FermionOp { dim: self.dim, cols };
        out.canonicalize();
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scaled(-1))
    }

    pub fn scaled(&self, factor: i64) -> Self {
        let mut out = self.clone();
        for col in &mut out.cols {
            col.retain_mut(|entry| {
                entry.1 *= factor;
                entry.1 != 0
            });
        }
        out
    }

    /// `{self, rhs} = self*rhs + rhs*self`.
    pub fn anticommutator(&self, rhs: &Self) -> Self {
        self.product(rhs).add(&rhs.product(self))
    }

    /// `[self, rhs] = self*rhs - rhs*self`.
    pub fn commutator(&self, rhs: &Self) -> Self {
        self.product(rhs).sub(&rhs.product(self))
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(Vec::is_empty)
    }

    pub fn is_identity(&self) -> bool {
        self.cols
            .iter()
            .enumerate()
            .all(|(j, col)| col.as_slice() == [(j, 1)])
    }

    /// Applies the operator to a complex amplitude vector.
    pub fn apply(&self, amplitudes: &DVector<Complex64>) -> DVector<Complex64> {
        assert_eq!(amplitudes.len(), self.dim, "vector dimension differs");
        let mut out = DVector::from_element(self.dim, Complex64::new(0.0, 0.0));
        for (j, col) in self.cols.iter().enumerate() {
            let amp = amplitudes[j];
            for &(i, v) in col {
                out[i] += amp * v as f64;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut dense = DMatrix::<f64>::zeros(self.dim, self.dim);
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                dense[(i, j)] = v as f64;
            }
        }
        dense
    }

    fn canonicalize(&mut self) {
        for col in &mut self.cols {
            col.sort_unstable_by_key(|&(row, _)| row);
            let mut merged: Vec<(usize, i64)> = Vec::with_capacity(col.len());
            for &(row, v) in col.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == row => last.1 += v,
                    _ => merged.push((row, v)),
                }
            }
            merged.retain(|&(_, v)| v != 0);
            *col = merged;
        }
    }
}

/// Full diffusion Hamiltonian in exact integer operator form:
/// a number term per mode plus `a_alpha a_beta^dag + a_beta a_alpha^dag`
/// for every ordered adjacent pair.
pub fn full_hamiltonian_op(space: &FockSpace, table: &NeighborhoodTable) -> Result<FermionOp> {
    if table.cell_count() != space.modes() {
        return Err(Error::Dimension(format!(
            "neighborhood table covers {} cells but the space has {} modes",
            table.cell_count(),
            space.modes()
        )));
    }
    let mut h = FermionOp::zero(space.dim());
    for mode in 0..space.modes() {
        h = h.add(&space.number(mode));
    }
    for alpha in 0..space.modes() {
        let a_alpha = space.annihilation(alpha);
        let c_alpha = space.creation(alpha);
        for &beta in table.neighbors(alpha) {
            let hop = a_alpha
                .product(&space.creation(beta))
                .add(&space.annihilation(beta).product(&c_alpha));
            h = h.add(&hop);
        }
    }
    Ok(h)
}

/// Dense form of [`full_hamiltonian_op`]. Real symmetric (hence
/// self-adjoint): the Jordan-Wigner matrices are real.
pub fn full_hamiltonian(space: &FockSpace, table: &NeighborhoodTable) -> Result<DMatrix<f64>> {
    Ok(full_hamiltonian_op(space, table)?.to_dense())
}

/// Unit-norm state vector on the Fock space.
#[derive(Debug, Clone)]
pub struct FockState {
    amplitudes: DVector<Complex64>,
}

/// Norm slack tolerated by [`FockState::from_amplitudes`].
pub const NORM_TOL: f64 = 1e-10;

impl FockState {
    /// The basis vector with occupation pattern `index`.
    pub fn basis(space: &FockSpace, index: usize) -> Result<Self> {
        if index >= space.dim() {
            return Err(Error::Dimension(format!(
                "basis index {index} out of range for dimension {}",
                space.dim()
            )));
        }
        let mut amplitudes = DVector::from_element(space.dim(), Complex64::new(0.0, 0.0));
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(FockState { amplitudes })
    }

    /// The basis vector for a binary lattice state.
    pub fn from_binary(space: &FockSpace, state: &BinaryState) -> Result<Self> {
        Self::basis(space, space.basis_index(state)?)
    }

    /// Wraps an amplitude vector, requiring unit norm within [`NORM_TOL`].
    pub fn from_amplitudes(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Numeric(format!(
                "state norm {norm} deviates from 1 by more than {NORM_TOL}"
            )));
        }
        Ok(FockState { amplitudes })
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<self, other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &FockState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// Eigendecomposition of a real symmetric Fock-space Hamiltonian, the
/// reusable ingredient of Schrodinger evolution.
#[derive(Debug, Clone)]
pub struct FockEig {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl FockEig {
    pub fn new(h: &DMatrix<f64>) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::Dimension(format!(
                "Hamiltonian must be square, got {}x{}",
                h.nrows(),
                h.ncols()
            )));
        }
        if h != &h.transpose() {
            return Err(Error::Numeric(
                "Hamiltonian must be symmetric for Schrodinger evolution".into(),
            ));
        }
        let (values, vectors) = polished_symmetric_eigen(h)?;
        Ok(FockEig { values, vectors })
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `exp(-iHt)` applied to an arbitrary (not necessarily unit) vector.
    /// Linear, so callers may evolve superpositions without renormalizing.
    pub fn evolve_vector(&self, amplitudes: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let re: DVector<f64> = amplitudes.map(|z| z.re);
        let im: DVector<f64> = amplitudes.map(|z| z.im);
        let mut coeff_re = self.vectors.transpose() * re;
        let mut coeff_im = self.vectors.transpose() * im;
        for k in 0..self.dim() {
            let (s, c) = (self.values[k] * t).sin_cos();
            // (c - i s)(x + i y) = (c x + s y) + i (c y - s x)
            let x = coeff_re[k];
            let y = coeff_im[k];
            coeff_re[k] = c * x + s * y;
            coeff_im[k] = c * y - s * x;
        }
        let out_re = &self.vectors * coeff_re;
        let out_im = &self.vectors * coeff_im;
        DVector::from_fn(self.dim(), |i, _| Complex64::new(out_re[i], out_im[i]))
    }

    /// Evolves a unit-norm state, preserving the norm.
    pub fn evolve(&self, state: &FockState, t: f64) -> Result<FockState> {
        if state.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "state dimension {} differs from Hamiltonian dimension {}",
                state.dim(),
                self.dim()
            )));
        }
        Ok(FockState {
            amplitudes: self.evolve_vector(state.amplitudes(), t),
        })
    }

    /// Evolves the basis vector with the given index.
    pub fn evolve_basis(&self, index: usize, t: f64) -> DVector<Complex64> {
        let n = self.dim();
        assert!(index < n, "basis index {index} out of range");
        let mut coeff_re = DVector::<f64>::from_fn(n, |k, _| self.vectors[(index, k)]);
        let mut coeff_im = DVector::<f64>::zeros(n);
        for k in 0..n {
            let (s, c) = (self.values[k] * t).sin_cos();
            let x = coeff_re[k];
            coeff_re[k] = c * x;
            coeff_im[k] = -s * x;
        }
        let out_re = &self.vectors * coeff_re;
        let out_im = &self.vectors * coeff_im;
        DVector::from_fn(n, |i, _| Complex64::new(out_re[i], out_im[i]))
    }
}

/// One-shot `exp(-iHt) state` through a fresh eigendecomposition. Reuse a
/// [`FockEig`] instead when evolving many states under the same `H`.
pub fn schrodinger_evolve(h: &DMatrix<f64>, state: &FockState, t: f64) -> Result<FockState> {
    if t < 0.0 {
        return Err(Error::Config(format!(
            "evolution time must be nonnegative, got {t}"
        )));
    }
    FockEig::new(h)?.evolve(state, t)
}

/// Per-mode occupation expectations `<state, N_alpha state>`. Each equals
/// the total probability weight of basis states with that mode occupied,
/// so the result is real and in `[0, 1]` up to roundoff.
pub fn number_expectations(space: &FockSpace, state: &FockState) -> DensityField {
    let mut values = vec![0.0f64; space.modes()];
    for (n, amp) in state.amplitudes().iter().enumerate() {
        let w = amp.norm_sqr();
        if w == 0.0 {
            continue;
        }
        for (mode, value) in values.iter_mut().enumerate() {
            if n & (1usize << mode) != 0 {
                *value += w;
            }
        }
    }
    DensityField::from_vec(values)
}

/// One rank-one addendum of the rule operator: the trajectory step sending
/// the evolved input basis state to the output basis state.
#[derive(Debug, Clone)]
pub struct RulePair {
    /// Basis index of the step's output state.
    pub output_index: usize,
    /// Basis index of the step's input state.
    pub input_index: usize,
    /// `exp(-iHtau)` applied to the input basis vector.
    pub evolved_input: DVector<Complex64>,
    /// How many trajectory steps shared this input state.
    pub multiplicity: usize,
}

/// Trajectory-derived rule operator: the sum of rank-one maps
/// `(output basis vector) x (evolved input)^*` over the recorded steps,
/// with repeated input states retained once. On the evolved basis inputs it
/// acts as a lookup table for the rule, because distinct basis vectors stay
/// orthonormal under unitary evolution.
#[derive(Debug, Clone)]
pub struct RuleOperatorR {
    dim: usize,
    pairs: Vec<RulePair>,
    duplicate_steps: usize,
}

/// Builds the rule operator from a recorded trajectory of binary states.
/// Steps whose input state already appeared are dropped (their multiplicity
/// is recorded); the built operator then reproduces the first occurrence,
/// and `duplicate_steps() > 0` flags the degeneracy.
pub fn build_rule_operator(
    trajectory: &[BinaryState],
    space: &FockSpace,
    eig: &FockEig,
    tau: f64,
) -> Result<RuleOperatorR> {
    if trajectory.len() < 2 {
        return Err(Error::Config(
            "rule operator needs a trajectory with at least one step".into(),
        ));
    }
    if eig.dim() != space.dim() {
        return Err(Error::Dimension(format!(
            "eigendecomposition dimension {} differs from space dimension {}",
            eig.dim(),
            space.dim()
        )));
    }
    let mut pairs: Vec<RulePair> = Vec::new();
    let mut duplicate_steps = 0usize;
    for step in trajectory.windows(2) {
        let input_index = space.basis_index(&step[0])?;
        let output_index = space.basis_index(&step[1])?;
        if let Some(existing) = pairs.iter_mut().find(|p| p.input_index == input_index) {
            if existing.output_index != output_index {
                return Err(Error::Config(format!(
                    "trajectory maps state {input_index} to both {} and {output_index}, so it \
                     was not generated by a deterministic rule",
                    existing.output_index
                )));
            }
            existing.multiplicity += 1;
            duplicate_steps += 1;
            continue;
        }
        pairs.push(RulePair {
            output_index,
            input_index,
            evolved_input: eig.evolve_basis(input_index, tau),
            multiplicity: 1,
        });
    }
    Ok(RuleOperatorR {
        dim: space.dim(),
        pairs,
        duplicate_steps,
    })
}

impl RuleOperatorR {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Retained rank-one addenda, in first-occurrence order.
    pub fn pairs(&self) -> &[RulePair] {
        &self.pairs
    }

    /// Number of trajectory steps dropped because their input state had
    /// already appeared.
    pub fn duplicate_steps(&self) -> usize {
        self.duplicate_steps
    }

    /// True when the trajectory revisited an input state; the operator
    /// reproduces only each state's first recorded transition.
    pub fn has_degeneracy(&self) -> bool {
        self.duplicate_steps > 0
    }

    /// Applies the operator: `R psi = sum_pairs phi_out <evolved_in, psi>`.
    pub fn apply(&self, amplitudes: &DVector<Complex64>) -> DVector<Complex64> {
        assert_eq!(amplitudes.len(), self.dim, "vector dimension differs");
        let mut out = DVector::from_element(self.dim, Complex64::new(0.0, 0.0));
        for pair in &self.pairs {
            out[pair.output_index] += pair.evolved_input.dotc(amplitudes);
        }
        out
    }

    /// Dense matrix form; exponentially sized, for small-space checks only.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut dense = DMatrix::from_element(self.dim, self.dim, Complex64::new(0.0, 0.0));
        for pair in &self.pairs {
            for j in 0..self.dim {
                dense[(pair.output_index, j)] += pair.evolved_input[j].conj();
            }
        }
        dense
    }

    /// Largest 2-norm error of the lookup property over the retained pairs:
    /// applying the operator to an evolved input should recover the output
    /// basis vector.
    pub fn max_reconstruction_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for pair in &self.pairs {
            let mut image = self.apply(&pair.evolved_input);
            image[pair.output_index] -= Complex64::new(1.0, 0.0);
            worst = worst.max(image.norm());
        }
        worst
    }

    /// Operator 2-norm estimate via power iteration on the retained pairs'
    /// Gram matrices; the full-space operator never needs materializing.
    pub fn operator_norm(&self) -> f64 {
        let n = self.pairs.len();
        if n == 0 {
            return 0.0;
        }
        // ||R||^2 = max eigenvalue of (O^dag O)(W^dag W), where O stacks the
        // output basis vectors and W the evolved inputs; both Grams are n x n.
        let gram_out = DMatrix::from_fn(n, n, |i, j| {
            if self.pairs[i].output_index == self.pairs[j].output_index {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let gram_in = DMatrix::from_fn(n, n, |i, j| {
            self.pairs[i].evolved_input.dotc(&self.pairs[j].evolved_input)
        });
        let product = gram_out * gram_in;
        let mut v = DVector::from_element(n, Complex64::new(1.0, 0.0));
        v /= Complex64::new(v.norm(), 0.0);
        let mut eigenvalue = 0.0f64;
        for _ in 0..200 {
            let next = &product * &v;
            let norm = next.norm();
            if norm == 0.0 {
                return 0.0;
            }
            eigenvalue = norm;
            v = next / Complex64::new(norm, 0.0);
        }
        eigenvalue.sqrt()
    }
}

/// Outcome of [`classify_sequence`].
#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    /// Constant from `transient` onward (within [`SETTLE_TOL`]).
    Equilibrium { transient: usize },
    /// Confined to a band of half-width below `epsilon` around `value`
    /// from `transient` onward, without being constant.
    EpsilonEquilibrium { transient: usize, value: f64 },
    /// Exactly periodic (within [`SETTLE_TOL`]) with the given period from
    /// `transient` onward; the transient is the smallest valid onset.
    Cycle { period: usize, transient: usize },
    /// No settled tail was found.
    Unsettled,
}

/// Classifies the tail behavior of an observable sequence.
///
/// Checks, in order: eventual constancy; eventual containment in an open
/// band of radius `epsilon` (skipped when `epsilon <= 0`, the sentinel for
/// "no band requested"); eventual exact periodicity with the smallest
/// period and, for it, the smallest onset. A settled tail must have at
/// least 2 elements (2 full periods for a cycle). Sequences shorter than 4
/// are reported as unsettled: no tail requirement can be met.
pub fn classify_sequence(xs: &[f64], epsilon: f64) -> Classification {
    let len = xs.len();
    if len < 4 {
        return Classification::Unsettled;
    }

    for onset in 0..=(len - 2) {
        let tail = &xs[onset..];
        let max = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        if max - min <= SETTLE_TOL {
            return Classification::Equilibrium { transient: onset };
        }
    }

    if epsilon > 0.0 {
        for onset in 0..=(len - 2) {
            let tail = &xs[onset..];
            let max = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = tail.iter().cloned().fold(f64::INFINITY, f64::min);
            if (max - min) / 2.0 < epsilon {
                return Classification::EpsilonEquilibrium {
                    transient: onset,
                    value: (max + min) / 2.0,
                };
            }
        }
    }

    for period in 2..=(len / 2) {
        let mut onset = None;
        for candidate in 0..len {
            if len - candidate < 2 * period {
                break;
            }
            if xs[candidate..]
                .iter()
                .zip(&xs[candidate + period..])
                .all(|(a, b)| (a - b).abs() <= SETTLE_TOL)
            {
                onset = Some(candidate);
                break;
            }
        }
        if let Some(transient) = onset {
            return Classification::Cycle { period, transient };
        }
    }

    Classification::Unsettled
}

/// Generates the induced observable sequence `(x_1, x_2, ...)` for one
/// cell: from the current binary state, evolve its basis vector for `tau`,
/// read off the cell's occupation expectation, then let the supplied rule
/// choose the next binary state. The rule sees only the binary state, so
/// engineered rules (constant maps, forced cycles) can probe the sequence
/// theory directly.
pub fn induced_observable_sequence(
    space: &FockSpace,
    eig: &FockEig,
    tau: f64,
    initial: &BinaryState,
    rule: impl Fn(&BinaryState) -> BinaryState,
    cell: usize,
    len: usize,
) -> Result<Vec<f64>> {
    if cell >= space.modes() {
        return Err(Error::Dimension(format!(
            "cell {cell} out of range for {} modes",
            space.modes()
        )));
    }
    let mut xs = Vec::with_capacity(len);
    let mut state = initial.clone();
    for _ in 0..len {
        let index = space.basis_index(&state)?;
        let evolved = FockState {
            amplitudes: eig.evolve_basis(index, tau),
        };
        xs.push(number_expectations(space, &evolved).get(cell));
        state = rule(&state);
    }
    Ok(xs)
}

/// Largest per-cell density deviation between the reduced cell-space
/// pipeline and the full Fock-space evolution, over the given times and
/// initial states. This is the crate's central cross-check: the two
/// routes share no evolution code.
pub fn oracle_deviation(
    table: &NeighborhoodTable,
    times: &[f64],
    initial_states: &[BinaryState],
) -> Result<f64> {
    use crate::propagator::{HamiltonianEig, SingleParticleHamiltonian};

    let space = FockSpace::new(table.cell_count())?;
    let single = HamiltonianEig::new(&SingleParticleHamiltonian::from_table(table))?;
    let full = FockEig::new(&full_hamiltonian(&space, table)?)?;

    let mut worst = 0.0f64;
    for &t in times {
        let transfer = single.transfer_matrix(t);
        for state in initial_states {
            let reduced = transfer.evolve_state(state)?;
            let evolved = FockState {
                amplitudes: full.evolve_basis(space.basis_index(state)?, t),
            };
            let exact = number_expectations(&space, &evolved);
            for cell in 0..table.cell_count() {
                worst = worst.max((reduced.get(cell) - exact.get(cell)).abs());
            }
        }
    }
    Ok(worst)
}
