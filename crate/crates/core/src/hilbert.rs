//! Dense complex linear algebra on small composite Hilbert spaces.
//!
//! Conventions used everywhere in the crate:
//!
//! * factor order is (ion A, ion B, cavity);
//! * single-ion basis order is `|e⟩, |g⟩`, so `σ_z|e⟩ = +|e⟩`;
//! * cavity Fock order is `|0⟩ … |n_max⟩`;
//! * composite indices are row-major over the factor list (first factor slowest).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance below which two Schmidt coefficients are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

const HERMITIAN_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-10;
const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    factor_dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.is_empty() {
            return Err(Error::DimensionMismatch("empty factor list".into()));
        }
        if let Some(d) = factor_dims.iter().find(|&&d| d < 2) {
            return Err(Error::DimensionMismatch(format!("factor dimension {d} < 2")));
        }
        Ok(Self { factor_dims })
    }

    pub fn qubit() -> Self {
        Self { factor_dims: vec![2] }
    }

    pub fn two_ions() -> Self {
        Self { factor_dims: vec![2, 2] }
    }

    pub fn ions_and_cavity(n_max: usize) -> Self {
        Self {
            factor_dims: vec![2, 2, n_max.max(1) + 1],
        }
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn dim(&self) -> usize {
        self.factor_dims.iter().product()
    }

    pub fn num_factors(&self) -> usize {
        self.factor_dims.len()
    }

    /// Concatenation `self ⊗ other`.
    pub fn tensor(&self, other: &HilbertSpace) -> HilbertSpace {
        let mut dims = self.factor_dims.clone();
        dims.extend_from_slice(&other.factor_dims);
        HilbertSpace { factor_dims: dims }
    }

    pub fn subspace(&self, factors: &[usize]) -> Result<HilbertSpace> {
        HilbertSpace::new(factors.iter().map(|&k| self.factor_dims[k]).collect())
    }

    fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factor_dims.len()];
        for (k, &d) in self.factor_dims.iter().enumerate().rev() {
            out[k] = index % d;
            index /= d;
        }
        out
    }
}

fn check_square(matrix: &CMatrix, space: &HilbertSpace) -> Result<()> {
    let n = space.dim();
    if matrix.nrows() != n || matrix.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix on a space of dimension {n}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    Ok(())
}

/// Largest entry of `|A − A†|`.
pub fn hermitian_deviation(matrix: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..matrix.nrows() {
        for j in 0..=i {
            worst = worst.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entry modulus.
pub fn max_abs(matrix: &CMatrix) -> f64 {
    matrix.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// `‖U†U − I‖_max`.
pub fn unitarity_defect(matrix: &CMatrix) -> f64 {
    let n = matrix.nrows();
    max_abs(&(matrix.adjoint() * matrix - CMatrix::identity(n, n)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: HilbertSpace,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(space: HilbertSpace, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes on a space of dimension {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        Ok(Self { space, amplitudes })
    }

    pub fn from_slice(space: HilbertSpace, amplitudes: &[C64]) -> Result<Self> {
        Self::new(space, CVector::from_column_slice(amplitudes))
    }

    /// Computational basis vector with unit amplitude at the given per-factor digits.
    pub fn basis(space: HilbertSpace, digits: &[usize]) -> Result<Self> {
        if digits.len() != space.num_factors()
            || digits.iter().zip(space.factor_dims()).any(|(&d, &n)| d >= n)
        {
            return Err(Error::InvalidSubsystem(format!("basis digits {digits:?}")));
        }
        let index = digits
            .iter()
            .zip(space.factor_dims())
            .fold(0, |acc, (&d, &n)| acc * n + d);
        let mut amps = CVector::zeros(space.dim());
        amps[index] = ONE;
        Ok(Self {
            space,
            amplitudes: amps,
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self {
            space: self.space.clone(),
            amplitudes: self.amplitudes.unscale(n),
        })
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|⟨self|other⟩|²`, insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn scale(&self, z: C64) -> StateVector {
        StateVector {
            space: self.space.clone(),
            amplitudes: self.amplitudes.map(|a| a * z),
        }
    }

    pub fn add(&self, other: &StateVector) -> Result<StateVector> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch("adding states on different spaces".into()));
        }
        Ok(StateVector {
            space: self.space.clone(),
            amplitudes: &self.amplitudes + &other.amplitudes,
        })
    }

    pub fn projector(&self) -> DensityOperator {
        DensityOperator {
            space: self.space.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector {
            space: self.space.tensor(&other.space),
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperator {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl LinearOperator {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        check_square(&matrix, &space)?;
        Ok(Self { space, matrix })
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let n = space.dim();
        Self {
            space,
            matrix: CMatrix::identity(n, n),
        }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> LinearOperator {
        LinearOperator {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn compose(&self, other: &LinearOperator) -> Result<LinearOperator> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch("composing operators on different spaces".into()));
        }
        Ok(LinearOperator {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if self.space != psi.space {
            return Err(Error::DimensionMismatch("operator and state spaces differ".into()));
        }
        Ok(StateVector {
            space: self.space.clone(),
            amplitudes: &self.matrix * &psi.amplitudes,
        })
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermitian_deviation(&self.matrix) <= tol
    }

    pub fn tensor(&self, other: &LinearOperator) -> LinearOperator {
        LinearOperator {
            space: self.space.tensor(&other.space),
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity (1e-10), unit trace (1e-9) and positivity (−1e-9).
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        check_square(&matrix, &space)?;
        let rho = Self { space, matrix };
        rho.validate(1e-10, 1e-9, 1e-9)?;
        Ok(rho)
    }

    /// Skips validation; used for intermediate integrator states.
    pub fn new_unchecked(space: HilbertSpace, matrix: CMatrix) -> Self {
        Self { space, matrix }
    }

    pub fn maximally_mixed(space: HilbertSpace) -> Self {
        let n = space.dim();
        Self {
            space,
            matrix: CMatrix::identity(n, n).unscale(n as f64),
        }
    }

    pub fn validate(&self, herm_tol: f64, trace_tol: f64, psd_tol: f64) -> Result<()> {
        let dev = hermitian_deviation(&self.matrix);
        if dev > herm_tol {
            return Err(Error::InvalidDensity(format!("Hermiticity defect {dev:.3e}")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > trace_tol {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let lo = self.min_eigenvalue()?;
        if lo < -psd_tol {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {lo:.3e}")));
        }
        Ok(())
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let (vals, _) = eigh_matrix(&self.hermitian_part())?;
        Ok(vals.first().copied().unwrap_or(0.0))
    }

    fn hermitian_part(&self) -> CMatrix {
        (&self.matrix + self.matrix.adjoint()).unscale(2.0)
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation_pure(&self, psi: &StateVector) -> f64 {
        (psi.amplitudes.adjoint() * &self.matrix * &psi.amplitudes)[(0, 0)].re
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &LinearOperator) -> Result<DensityOperator> {
        if u.space != self.space {
            return Err(Error::DimensionMismatch("unitary and state spaces differ".into()));
        }
        Ok(DensityOperator {
            space: self.space.clone(),
            matrix: &u.matrix * &self.matrix * u.matrix.adjoint(),
        })
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch("trace distance across spaces".into()));
        }
        let diff = &self.matrix - &other.matrix;
        let diff = (&diff + diff.adjoint()).unscale(2.0);
        let (vals, _) = eigh_matrix(&diff)?;
        Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        DensityOperator {
            space: self.space.tensor(&other.space),
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }
}

/// Kronecker product of two values on disjoint factor lists.
pub trait TensorProduct {
    fn tensor_product(&self, other: &Self) -> Self;
}

impl TensorProduct for StateVector {
    fn tensor_product(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

impl TensorProduct for LinearOperator {
    fn tensor_product(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

impl TensorProduct for DensityOperator {
    fn tensor_product(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

pub fn tensor_product<T: TensorProduct>(a: &T, b: &T) -> T {
    a.tensor_product(b)
}

/// Reduced density operator on the factors listed in `keep` (kept in ascending order).
pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    let space = rho.space();
    let nf = space.num_factors();
    if keep.is_empty() {
        return Err(Error::InvalidSubsystem("nothing to keep".into()));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || kept.iter().any(|&k| k >= nf) {
        return Err(Error::InvalidSubsystem(format!(
            "keep {keep:?} on {nf} factors"
        )));
    }
    let reduced = space.subspace(&kept)?;
    let traced: Vec<usize> = (0..nf).filter(|k| !kept.contains(k)).collect();
    let n = space.dim();
    let m = reduced.dim();
    let digits: Vec<Vec<usize>> = (0..n).map(|i| space.digits(i)).collect();
    let index_of = |d: &[usize]| {
        kept.iter()
            .fold(0, |acc, &k| acc * space.factor_dims()[k] + d[k])
    };
    let mut out = CMatrix::zeros(m, m);
    for i in 0..n {
        for j in 0..n {
            if traced.iter().all(|&k| digits[i][k] == digits[j][k]) {
                out[(index_of(&digits[i]), index_of(&digits[j]))] += rho.matrix()[(i, j)];
            }
        }
    }
    Ok(DensityOperator::new_unchecked(reduced, out))
}

#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    /// Squared Schmidt coefficients, descending, summing to one.
    pub coefficients: Vec<f64>,
    pub left_vectors: Vec<StateVector>,
    pub right_vectors: Vec<StateVector>,
    pub degenerate: bool,
}

impl SchmidtDecomposition {
    /// `Σ_k √p_k |μ_k⟩⊗|ν_k⟩`.
    pub fn reconstruct(&self) -> StateVector {
        let space = self.left_vectors[0].space().tensor(self.right_vectors[0].space());
        let mut acc = CVector::zeros(space.dim());
        for ((p, l), r) in self
            .coefficients
            .iter()
            .zip(&self.left_vectors)
            .zip(&self.right_vectors)
        {
            acc += l.amplitudes().kronecker(r.amplitudes()) * C64::from(p.sqrt());
        }
        StateVector {
            space,
            amplitudes: acc,
        }
    }
}

/// Schmidt decomposition across the cut after the first `split` factors.
pub fn schmidt_decompose(psi: &StateVector, split: usize) -> Result<SchmidtDecomposition> {
    psi.ensure_normalized()?;
    let space = psi.space();
    if split == 0 || split >= space.num_factors() {
        return Err(Error::InvalidSubsystem(format!(
            "bipartition after factor {split} of {}",
            space.num_factors()
        )));
    }
    let left_space = HilbertSpace::new(space.factor_dims()[..split].to_vec())?;
    let right_space = HilbertSpace::new(space.factor_dims()[split..].to_vec())?;
    let (dl, dr) = (left_space.dim(), right_space.dim());
    let m = CMatrix::from_fn(dl, dr, |i, j| psi.amplitudes()[i * dr + j]);
    let svd = m
        .try_svd(true, true, EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(Error::EigenConvergence)?;
    let u = svd.u.ok_or(Error::EigenConvergence)?;
    let v_t = svd.v_t.ok_or(Error::EigenConvergence)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let raw: Vec<f64> = order.iter().map(|&k| svd.singular_values[k].powi(2)).collect();
    let total: f64 = raw.iter().sum();
    let coefficients: Vec<f64> = raw.iter().map(|p| p / total).collect();
    let left_vectors = order
        .iter()
        .map(|&k| StateVector {
            space: left_space.clone(),
            amplitudes: u.column(k).into_owned(),
        })
        .collect();
    let right_vectors = order
        .iter()
        .map(|&k| StateVector {
            space: right_space.clone(),
            amplitudes: v_t.row(k).transpose(),
        })
        .collect();
    let degenerate = coefficients.len() >= 2 && (coefficients[0] - coefficients[1]).abs() < DEGENERACY_TOL;
    Ok(SchmidtDecomposition {
        coefficients,
        left_vectors,
        right_vectors,
        degenerate,
    })
}

/// `exp(−i·t·G)` for a Hermitian 2×2 generator, via `G = a₀I + a⃗·σ⃗`.
pub fn expm_2x2(generator: &LinearOperator, t: f64) -> Result<LinearOperator> {
    let g = generator.matrix();
    if g.nrows() != 2 {
        return Err(Error::DimensionMismatch("expm_2x2 needs a 2x2 generator".into()));
    }
    let dev = hermitian_deviation(g);
    if dev > 1e-12 {
        return Err(Error::NotHermitian(dev));
    }
    Ok(LinearOperator {
        space: generator.space().clone(),
        matrix: expm_2x2_matrix(g, t),
    })
}

pub(crate) fn expm_2x2_matrix(g: &CMatrix, t: f64) -> CMatrix {
    let a0 = 0.5 * (g[(0, 0)].re + g[(1, 1)].re);
    let az = 0.5 * (g[(0, 0)].re - g[(1, 1)].re);
    let off = 0.5 * (g[(0, 1)] + g[(1, 0)].conj());
    let (ax, ay) = (off.re, -off.im);
    let w = (ax * ax + ay * ay + az * az).sqrt();
    let phase = C64::from_polar(1.0, -a0 * t);
    let c = C64::from((w * t).cos());
    // sin(wt)/w → t as w → 0
    let s = if w * t.abs() < 1e-300 || w == 0.0 {
        t
    } else {
        (w * t).sin() / w
    };
    let traceless = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::from(az),
            C64::new(ax, -ay),
            C64::new(ax, ay),
            C64::from(-az),
        ],
    );
    (CMatrix::identity(2, 2) * c - traceless * (I * s)) * phase
}

/// Hermitian eigendecomposition with ascending eigenvalues.
pub fn eigh(op: &LinearOperator, require_hermitian: bool) -> Result<(Vec<f64>, Vec<StateVector>)> {
    let m = op.matrix();
    if require_hermitian {
        let dev = hermitian_deviation(m);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
    }
    let (vals, vecs) = eigh_matrix(m)?;
    let vecs = vecs
        .into_iter()
        .map(|v| StateVector {
            space: op.space().clone(),
            amplitudes: v,
        })
        .collect();
    Ok((vals, vecs))
}

pub(crate) fn eigh_matrix(m: &CMatrix) -> Result<(Vec<f64>, Vec<CVector>)> {
    let n = m.nrows();
    let herm = (m + m.adjoint()).unscale(2.0);
    let eig = herm
        .try_symmetric_eigen(EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(Error::EigenConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    Ok((vals, vecs))
}

/// `exp(−i·t·H)` for Hermitian `H` of any size, via eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let (vals, vecs) = eigh_matrix(h)?;
    let n = h.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (lambda, v) in vals.iter().zip(&vecs) {
        out += v * v.adjoint() * C64::from_polar(1.0, -lambda * t);
    }
    Ok(out)
}

/// Single-qubit operators in the `|e⟩, |g⟩` basis.
pub mod pauli {
    use super::*;

    pub fn identity() -> CMatrix {
        CMatrix::identity(2, 2)
    }

    pub fn sigma_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn sigma_y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
    }

    pub fn sigma_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    /// `σ_eg = |e⟩⟨g|` (raising).
    pub fn sigma_eg() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
    }

    /// `σ_ge = |g⟩⟨e|` (lowering).
    pub fn sigma_ge() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO])
    }

    pub fn excited() -> CVector {
        CVector::from_column_slice(&[ONE, ZERO])
    }

    pub fn ground() -> CVector {
        CVector::from_column_slice(&[ZERO, ONE])
    }
}
