//! Discretized strategy spaces.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circuit::{strategy_matrix, StrategyParams};
use crate::error::{Error, Result};
use crate::tensor::{DenseMatrix, C64};

const ANGLE_TOL: f64 = 1e-12;
const DEDUP_TOL: f64 = 1e-12;
const PAULI_TOL: f64 = 1e-10;

/// Uniform step sizes for θ over `[0, π]` and φ, α over `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSteps {
    pub d_theta: f64,
    pub d_phi: f64,
    pub d_alpha: f64,
}

fn divisions(name: &'static str, step: f64, range: f64) -> Result<usize> {
    if !(step.is_finite() && step > 0.0 && step <= range + ANGLE_TOL) {
        return Err(Error::GridStep { name, step });
    }
    let n = (range / step).round();
    if (n * step - range).abs() > ANGLE_TOL * range.max(1.0) * n.max(1.0) {
        return Err(Error::GridStep { name, step });
    }
    Ok(n as usize)
}

impl GridSteps {
    pub const fn new(d_theta: f64, d_phi: f64, d_alpha: f64) -> Self {
        Self {
            d_theta,
            d_phi,
            d_alpha,
        }
    }

    /// `(π, π/2, π/2)`: the eight-strategy grid.
    pub const fn coarse() -> Self {
        Self::new(PI, PI / 2.0, PI / 2.0)
    }

    /// `(π/8, π/8, π/8)`.
    pub const fn fine() -> Self {
        Self::new(PI / 8.0, PI / 8.0, PI / 8.0)
    }

    /// Number of intervals along θ, φ and α.
    pub fn divisions(&self) -> Result<(usize, usize, usize)> {
        Ok((
            divisions("d_theta", self.d_theta, PI)?,
            divisions("d_phi", self.d_phi, TAU)?,
            divisions("d_alpha", self.d_alpha, TAU)?,
        ))
    }
}

impl Default for GridSteps {
    fn default() -> Self {
        Self::coarse()
    }
}

fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r < ANGLE_TOL || TAU - r < ANGLE_TOL {
        0.0
    } else {
        r
    }
}

/// Reduces phases mod 2π and zeroes the phase that is undefined at the θ
/// endpoints (α at θ = 0, φ at θ = π).
pub fn canonicalize(s: StrategyParams) -> StrategyParams {
    let mut out = StrategyParams::new(s.theta, wrap_phase(s.phi), wrap_phase(s.alpha));
    if out.theta.abs() < ANGLE_TOL {
        out.theta = 0.0;
        out.alpha = 0.0;
    } else if (out.theta - PI).abs() < ANGLE_TOL {
        out.theta = PI;
        out.phi = 0.0;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub params: StrategyParams,
    pub unitary: DenseMatrix,
}

/// Ordered list of strategies with pairwise distinct matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySet {
    items: Vec<Strategy>,
    steps: GridSteps,
}

impl StrategySet {
    pub fn items(&self) -> &[Strategy] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, idx: usize) -> Option<&Strategy> {
        self.items.get(idx)
    }

    pub fn steps(&self) -> GridSteps {
        self.steps
    }

    pub(crate) fn unitary(&self, idx: usize) -> &[C64] {
        self.items[idx].unitary.entries()
    }

    pub(crate) fn unitary_matrix(&self, idx: usize) -> &DenseMatrix {
        &self.items[idx].unitary
    }

    /// Index of the strategy with these canonical parameters.
    pub fn position(&self, params: &StrategyParams) -> Option<usize> {
        let c = canonicalize(*params);
        self.items.iter().position(|s| {
            (s.params.theta - c.theta).abs() < 1e-9
                && phase_close(s.params.phi, c.phi)
                && phase_close(s.params.alpha, c.alpha)
        })
    }
}

fn phase_close(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(TAU);
    d < 1e-9 || TAU - d < 1e-9
}

/// All canonical grid strategies, exact-duplicate matrices removed, sorted by
/// `(θ, φ, α)`.
pub fn enumerate(steps: GridSteps) -> Result<StrategySet> {
    let (n_theta, n_phi, n_alpha) = steps.divisions()?;
    let mut raw = Vec::with_capacity((n_theta + 1) * n_phi * n_alpha);
    for i in 0..=n_theta {
        let theta = PI * i as f64 / n_theta as f64;
        for j in 0..n_phi {
            let phi = TAU * j as f64 / n_phi as f64;
            for k in 0..n_alpha {
                let alpha = TAU * k as f64 / n_alpha as f64;
                raw.push(canonicalize(StrategyParams::new(theta, phi, alpha)));
            }
        }
    }
    raw.sort_by(|a, b| {
        a.theta
            .total_cmp(&b.theta)
            .then(a.phi.total_cmp(&b.phi))
            .then(a.alpha.total_cmp(&b.alpha))
    });
    let mut items: Vec<Strategy> = Vec::new();
    for params in raw {
        let unitary = strategy_matrix(params.theta, params.phi, params.alpha);
        if items
            .iter()
            .any(|s| s.unitary.approx_eq(&unitary, DEDUP_TOL))
        {
            continue;
        }
        items.push(Strategy { params, unitary });
    }
    Ok(StrategySet { items, steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> DenseMatrix {
        match self {
            Pauli::I => DenseMatrix::identity(2).expect("valid"),
            Pauli::X => DenseMatrix::pauli_x(),
            Pauli::Y => DenseMatrix::pauli_y(),
            Pauli::Z => DenseMatrix::pauli_z(),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        };
        f.write_str(s)
    }
}

/// `(P, c)` with `u = c·P` and `|c| = 1`, if `u` is a phased Pauli matrix.
pub fn pauli_label(u: &DenseMatrix) -> Option<(Pauli, C64)> {
    if u.dim() != 2 {
        return None;
    }
    Pauli::ALL.into_iter().find_map(|p| {
        let m = p.matrix();
        // Paulis are Hermitian and trace-orthogonal: c = tr(P u) / 2.
        let c = (0..2)
            .flat_map(|r| (0..2).map(move |k| (r, k)))
            .map(|(r, k)| m.get(r, k) * u.get(k, r))
            .sum::<C64>()
            / 2.0;
        ((c.norm() - 1.0).abs() < PAULI_TOL && u.approx_eq(&m.scale(c), PAULI_TOL))
            .then_some((p, c))
    })
}
