//! Dense complex linear algebra for registers of up to four qubits.
//!
//! Basis ordering is big-endian: for qubits `(q0, q1, ...)` the first qubit is
//! the most significant bit of the state index.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Largest operator dimension supported (four qubits).
pub const MAX_DIM: usize = 16;

/// Default absolute tolerance for algebraic identities.
pub const DEFAULT_TOL: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Builds a complex scalar, rejecting NaN and infinite components.
pub fn complex(re: f64, im: f64) -> Result<C64> {
    if re.is_finite() && im.is_finite() {
        Ok(C64::new(re, im))
    } else {
        Err(Error::NonFinite)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || !dim.is_power_of_two() || dim > MAX_DIM {
        return Err(Error::Size(format!(
            "dimension {dim} is not a power of two in 1..={MAX_DIM}"
        )));
    }
    Ok(())
}

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl DenseMatrix {
    pub fn from_entries(dim: usize, entries: Vec<C64>) -> Result<Self> {
        check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::Size(format!(
                "expected {} entries for dimension {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, entries })
    }

    /// Builds a matrix from rows; every row must have `rows.len()` entries.
    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Result<Self> {
        Self::from_entries(N, rows.iter().flatten().copied().collect())
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = ONE;
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            entries: vec![ZERO; dim * dim],
        })
    }

    pub fn pauli_x() -> Self {
        Self::from_rows([[ZERO, ONE], [ONE, ZERO]]).expect("static pauli")
    }

    pub fn pauli_y() -> Self {
        Self::from_rows([[ZERO, -I], [I, ZERO]]).expect("static pauli")
    }

    pub fn pauli_z() -> Self {
        Self::from_rows([[ONE, ZERO], [ZERO, -ONE]]).expect("static pauli")
    }

    /// Block-diagonal matrix `diag(upper, lower)` of twice the block dimension.
    pub fn block_diag(upper: &DenseMatrix, lower: &DenseMatrix) -> Result<Self> {
        if upper.dim != lower.dim {
            return Err(Error::Size(format!(
                "block dimensions differ: {} vs {}",
                upper.dim, lower.dim
            )));
        }
        let half = upper.dim;
        let mut out = Self::zeros(2 * half)?;
        for r in 0..half {
            for c in 0..half {
                out.set(r, c, upper.get(r, c));
                out.set(r + half, c + half, lower.get(r, c));
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of qubits the matrix acts on.
    pub fn n_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    #[inline]
    pub(crate) fn set(&mut self, row: usize, col: usize, value: C64) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: rhs.dim,
            });
        }
        let n = self.dim;
        let mut entries = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    entries[i * n + j] += a * rhs.entries[k * n + j];
                }
            }
        }
        Ok(Self { dim: n, entries })
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn approx_eq(&self, other: &DenseMatrix, tol: f64) -> bool {
        self.max_abs_diff(other).is_ok_and(|d| d <= tol)
    }

    /// `‖M†M − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        let product = dagger(self).matmul(self).expect("same dimension");
        let id = Self::identity(self.dim).expect("valid dimension");
        product.max_abs_diff(&id).expect("same dimension")
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }
}

/// Complex amplitudes over the computational basis of 1 to 4 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if !(2..=MAX_DIM).contains(&len) || !len.is_power_of_two() {
            return Err(Error::Size(format!(
                "state length {len} is not a power of two in 2..={MAX_DIM}"
            )));
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    /// The computational basis state `|index⟩` on `n_qubits` qubits.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if !(1..=4).contains(&n_qubits) {
            return Err(Error::Size(format!("{n_qubits} qubits unsupported")));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Size(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Measurement probabilities in basis order.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Largest amplitude difference after removing the relative global phase.
    pub fn phase_distance(&self, other: &StateVector) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        let overlap: C64 = other
            .amplitudes
            .iter()
            .zip(&self.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            ONE
        };
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b * phase).norm())
            .fold(0.0, f64::max)
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let dim = a.dim * b.dim;
    if dim > MAX_DIM {
        return Err(Error::Size(format!(
            "kron of {}x{} and {}x{} exceeds {MAX_DIM}",
            a.dim, a.dim, b.dim, b.dim
        )));
    }
    let db = b.dim;
    let mut out = DenseMatrix::zeros(dim)?;
    for i in 0..a.dim {
        for j in 0..a.dim {
            let aij = a.get(i, j);
            for k in 0..db {
                for l in 0..db {
                    out.set(i * db + k, j * db + l, aij * b.get(k, l));
                }
            }
        }
    }
    Ok(out)
}

fn check_targets(op_dim: usize, targets: &[usize], n_total: usize) -> Result<()> {
    if !(1..=4).contains(&n_total) {
        return Err(Error::Size(format!("{n_total} qubits unsupported")));
    }
    if op_dim != 1 << targets.len() {
        return Err(Error::Dimension {
            expected: 1 << targets.len(),
            found: op_dim,
        });
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= n_total {
            return Err(Error::Size(format!(
                "target qubit {t} out of range for {n_total} qubits"
            )));
        }
        if targets[..i].contains(&t) {
            return Err(Error::DuplicateTarget(t));
        }
    }
    Ok(())
}

/// Local index of `global` restricted to `targets`, first target most significant.
#[inline]
fn local_index(global: usize, targets: &[usize], n_total: usize) -> usize {
    targets.iter().fold(0, |acc, &t| {
        (acc << 1) | ((global >> (n_total - 1 - t)) & 1)
    })
}

fn target_mask(targets: &[usize], n_total: usize) -> usize {
    targets
        .iter()
        .fold(0, |acc, &t| acc | (1 << (n_total - 1 - t)))
}

/// Operator acting as `op` on `targets` and as identity on every other qubit
/// of an `n_total`-qubit register.
pub fn embed(op: &DenseMatrix, targets: &[usize], n_total: usize) -> Result<DenseMatrix> {
    check_targets(op.dim, targets, n_total)?;
    let dim = 1 << n_total;
    let mask = target_mask(targets, n_total);
    let mut out = DenseMatrix::zeros(dim)?;
    for row in 0..dim {
        for col in 0..dim {
            if row & !mask != col & !mask {
                continue;
            }
            let r = local_index(row, targets, n_total);
            let c = local_index(col, targets, n_total);
            out.set(row, col, op.get(r, c));
        }
    }
    Ok(out)
}

/// Matrix-vector product.
pub fn apply(op: &DenseMatrix, psi: &StateVector) -> Result<StateVector> {
    if op.dim != psi.dim() {
        return Err(Error::Dimension {
            expected: psi.dim(),
            found: op.dim,
        });
    }
    let n = op.dim;
    let amplitudes = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| op.entries[r * n + c] * psi.amplitudes[c])
                .sum()
        })
        .collect();
    Ok(StateVector {
        n_qubits: psi.n_qubits,
        amplitudes,
    })
}

/// Applies `op` to the listed qubits of `psi` by index arithmetic, without
/// building the full-register operator.
pub fn apply_on(op: &DenseMatrix, targets: &[usize], psi: &StateVector) -> Result<StateVector> {
    let n_total = psi.n_qubits;
    check_targets(op.dim, targets, n_total)?;
    let mask = target_mask(targets, n_total);
    let k = targets.len();
    // global offset of each local basis index
    let offsets: Vec<usize> = (0..1usize << k)
        .map(|local| {
            targets.iter().enumerate().fold(0, |acc, (pos, &t)| {
                let bit = (local >> (k - 1 - pos)) & 1;
                acc | (bit << (n_total - 1 - t))
            })
        })
        .collect();
    let mut out = vec![ZERO; psi.dim()];
    for base in (0..psi.dim()).filter(|i| i & mask == 0) {
        for (r, &ro) in offsets.iter().enumerate() {
            out[base | ro] = offsets
                .iter()
                .enumerate()
                .map(|(c, &co)| op.get(r, c) * psi.amplitudes[base | co])
                .sum();
        }
    }
    Ok(StateVector {
        n_qubits: n_total,
        amplitudes: out,
    })
}

/// Conjugate transpose.
pub fn dagger(op: &DenseMatrix) -> DenseMatrix {
    let n = op.dim;
    let mut entries = vec![ZERO; n * n];
    for r in 0..n {
        for c in 0..n {
            entries[c * n + r] = op.entries[r * n + c].conj();
        }
    }
    DenseMatrix { dim: n, entries }
}

/// True iff `a = e^{iδ} b` for some real δ, entry-wise within `tol`.
pub fn phase_equal(a: &DenseMatrix, b: &DenseMatrix, tol: f64) -> Result<bool> {
    if a.dim != b.dim {
        return Err(Error::Dimension {
            expected: a.dim,
            found: b.dim,
        });
    }
    // Anchor the phase on the largest entry of b.
    let (idx, pivot) = b
        .entries
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .expect("non-empty matrix");
    if pivot.norm() <= tol {
        return Ok(a.entries.iter().all(|z| z.norm() <= tol));
    }
    let ratio = a.entries[idx] / pivot;
    if ratio.norm() == 0.0 {
        return Ok(false);
    }
    let phase = ratio / ratio.norm();
    Ok(a.entries
        .iter()
        .zip(&b.entries)
        .all(|(x, y)| (x - y * phase).norm() <= tol))
}
