//! EWL operators and circuit evaluation.
//!
//! The two-player circuit prepares `J(γ)|00⟩`, applies the local strategies
//! `U_A ⊗ U_B`, undoes the entangler with `J(γ)†` and measures. The Bayesian
//! circuit adds a control qubit `Q` (register order `Q, A, B₁, B₂`) whose
//! `|1⟩` branch entangles A with B₁ and whose `|0⟩` branch entangles A with
//! B₂, so that `p = sin²(θ_Q/2)` is the probability of facing B₁.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{check_probability, payoff_expectation, BayesianGame, PayoffSpec, TwoPlayerGame};
use crate::tensor::{apply, apply_on, dagger, embed, DenseMatrix, StateVector, C64, I, ZERO};

const RANGE_SLACK: f64 = 1e-12;

/// Below this branch probability a conditional payoff is undefined.
pub const BRANCH_EPS: f64 = 1e-12;

fn check_angle(name: &'static str, value: f64, upper: f64, closed: bool) -> Result<()> {
    let ok = value.is_finite()
        && value >= -RANGE_SLACK
        && if closed {
            value <= upper + RANGE_SLACK
        } else {
            value < upper
        };
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            range: if closed { "[0, pi]" } else { "[0, 2pi)" },
        })
    }
}

/// One player's SU(2)-with-phases strategy `U(θ, φ, α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyParams {
    pub theta: f64,
    pub phi: f64,
    pub alpha: f64,
}

impl StrategyParams {
    pub const fn new(theta: f64, phi: f64, alpha: f64) -> Self {
        Self { theta, phi, alpha }
    }

    pub fn validate(&self) -> Result<()> {
        check_angle("theta", self.theta, PI, true)?;
        check_angle("phi", self.phi, TAU, false)?;
        check_angle("alpha", self.alpha, TAU, false)
    }
}

/// `[[e^{−iφ}cos(θ/2), e^{iα}sin(θ/2)], [−e^{−iα}sin(θ/2), e^{iφ}cos(θ/2)]]`.
pub fn strategy_unitary(s: &StrategyParams) -> Result<DenseMatrix> {
    s.validate()?;
    Ok(strategy_matrix(s.theta, s.phi, s.alpha))
}

pub(crate) fn strategy_matrix(theta: f64, phi: f64, alpha: f64) -> DenseMatrix {
    let (sin, cos) = (theta / 2.0).sin_cos();
    DenseMatrix::from_rows([
        [C64::from_polar(cos, -phi), C64::from_polar(sin, alpha)],
        [-C64::from_polar(sin, -alpha), C64::from_polar(cos, phi)],
    ])
    .expect("finite entries")
}

/// Entanglement parameter γ ∈ [0, π/2].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct EntanglerAngle(f64);

impl EntanglerAngle {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && (0.0..=PI / 2.0 + RANGE_SLACK).contains(&gamma) {
            Ok(Self(gamma.min(PI / 2.0)))
        } else {
            Err(Error::OutOfRange {
                name: "gamma",
                value: gamma,
                range: "[0, pi/2]",
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for EntanglerAngle {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EntanglerAngle> for f64 {
    fn from(g: EntanglerAngle) -> f64 {
        g.0
    }
}

/// The entangling gate `J(γ)`.
pub fn entangler(g: EntanglerAngle) -> DenseMatrix {
    let (s, c) = (g.0 / 2.0).sin_cos();
    let c = C64::new(c, 0.0);
    let is = I * s;
    DenseMatrix::from_rows([
        [c, ZERO, ZERO, is],
        [ZERO, c, -is, ZERO],
        [ZERO, -is, c, ZERO],
        [is, ZERO, ZERO, c],
    ])
    .expect("finite entries")
}

/// Output amplitudes of `J†(U_A ⊗ U_B)J|00⟩` for arbitrary 2×2 unitaries,
/// evaluated in closed form.
pub fn evolve_two_player_unitaries(
    g: EntanglerAngle,
    u_a: &DenseMatrix,
    u_b: &DenseMatrix,
) -> Result<StateVector> {
    for u in [u_a, u_b] {
        if u.dim() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                found: u.dim(),
            });
        }
    }
    StateVector::new(evolve_pair(g, u_a.entries(), u_b.entries()).to_vec())
}

/// Hot-path kernel: `u_a`, `u_b` are row-major 2×2 entries.
#[inline]
pub(crate) fn evolve_pair(g: EntanglerAngle, u_a: &[C64], u_b: &[C64]) -> [C64; 4] {
    let (s, c) = (g.0 / 2.0).sin_cos();
    let is = I * s;
    // (U_A ⊗ U_B) applied to J|00⟩ = c|00⟩ + i s|11⟩
    let mid =
        |a: usize, b: usize| c * u_a[2 * a] * u_b[2 * b] + is * u_a[2 * a + 1] * u_b[2 * b + 1];
    let m = [mid(0, 0), mid(0, 1), mid(1, 0), mid(1, 1)];
    [
        c * m[0] - is * m[3],
        c * m[1] + is * m[2],
        is * m[1] + c * m[2],
        -is * m[0] + c * m[3],
    ]
}

#[inline]
pub(crate) fn outcome_probabilities(g: EntanglerAngle, u_a: &[C64], u_b: &[C64]) -> [f64; 4] {
    evolve_pair(g, u_a, u_b).map(|z| z.norm_sqr())
}

#[inline]
pub(crate) fn expect(probs: &[f64; 4], payoff: &PayoffSpec) -> f64 {
    probs.iter().zip(payoff.values()).map(|(p, v)| p * v).sum()
}

pub fn evolve_two_player(
    g: EntanglerAngle,
    u_a: &StrategyParams,
    u_b: &StrategyParams,
) -> Result<StateVector> {
    evolve_two_player_unitaries(g, &strategy_unitary(u_a)?, &strategy_unitary(u_b)?)
}

/// Expected payoffs `(A, B)` of a two-player game.
pub fn two_player_payoffs(
    game: &TwoPlayerGame,
    g: EntanglerAngle,
    u_a: &DenseMatrix,
    u_b: &DenseMatrix,
) -> Result<[f64; 2]> {
    let psi = evolve_two_player_unitaries(g, u_a, u_b)?;
    Ok([
        payoff_expectation(&psi, &game.payoff_a)?,
        payoff_expectation(&psi, &game.payoff_b)?,
    ])
}

/// Bayesian payoffs `(A, B₁, B₂)` as the `p`-weighted mixture of the two
/// subgames. B payoffs are conditional on their subgame being played.
pub fn bayesian_payoffs_mixture(
    game: &BayesianGame,
    g: EntanglerAngle,
    u_a: &DenseMatrix,
    u_b1: &DenseMatrix,
    u_b2: &DenseMatrix,
) -> Result<[f64; 3]> {
    let p = game.p();
    let [a1, b1] = two_player_payoffs(&game.subgame_b1, g, u_a, u_b1)?;
    let [a2, b2] = two_player_payoffs(&game.subgame_b2, g, u_a, u_b2)?;
    Ok([p * a1 + (1.0 - p) * a2, b1, b2])
}

/// Rotation `U_Q` of the control qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlSpec {
    pub theta_q: f64,
    pub phi_q: f64,
    pub alpha_q: f64,
}

impl ControlSpec {
    pub fn new(theta_q: f64, phi_q: f64, alpha_q: f64) -> Result<Self> {
        let spec = Self {
            theta_q,
            phi_q,
            alpha_q,
        };
        spec.params().validate()?;
        Ok(spec)
    }

    /// Control rotation realizing probability `p` with zero phases.
    pub fn from_probability(p: f64) -> Result<Self> {
        check_probability(p)?;
        Self::new(2.0 * p.sqrt().asin(), 0.0, 0.0)
    }

    /// `p = sin²(θ_Q/2)`, the probability of facing B₁.
    pub fn probability(&self) -> f64 {
        (self.theta_q / 2.0).sin().powi(2)
    }

    fn params(&self) -> StrategyParams {
        StrategyParams::new(self.theta_q, self.phi_q, self.alpha_q)
    }
}

/// Controlled entanglers of the four-qubit register, precomputed for one γ.
#[derive(Debug, Clone)]
pub struct BayesianCircuit {
    gamma: EntanglerAngle,
    j1: DenseMatrix,
    j2: DenseMatrix,
    j1_dag: DenseMatrix,
    j2_dag: DenseMatrix,
}

pub const QUBIT_Q: usize = 0;
pub const QUBIT_A: usize = 1;
pub const QUBIT_B1: usize = 2;
pub const QUBIT_B2: usize = 3;

impl BayesianCircuit {
    pub fn new(g: EntanglerAngle) -> Self {
        let j = entangler(g);
        let i4 = DenseMatrix::identity(4).expect("valid");
        // Q = |1⟩ entangles (A, B₁); Q = |0⟩ entangles (A, B₂).
        let j1_local = DenseMatrix::block_diag(&i4, &j).expect("equal blocks");
        let j2_local = DenseMatrix::block_diag(&j, &i4).expect("equal blocks");
        let j1 = embed(&j1_local, &[QUBIT_Q, QUBIT_A, QUBIT_B1], 4).expect("valid targets");
        let j2 = embed(&j2_local, &[QUBIT_Q, QUBIT_A, QUBIT_B2], 4).expect("valid targets");
        Self {
            gamma: g,
            j1_dag: dagger(&j1),
            j2_dag: dagger(&j2),
            j1,
            j2,
        }
    }

    pub fn gamma(&self) -> EntanglerAngle {
        self.gamma
    }

    /// Full-register controlled entanglers `(J₁, J₂)`.
    pub fn entanglers(&self) -> (&DenseMatrix, &DenseMatrix) {
        (&self.j1, &self.j2)
    }

    /// `J₁†J₂†(I ⊗ U_A ⊗ U_B₁ ⊗ U_B₂)J₂J₁(U_Q ⊗ I₈)|0000⟩`.
    pub fn evolve(
        &self,
        control: &ControlSpec,
        u_a: &DenseMatrix,
        u_b1: &DenseMatrix,
        u_b2: &DenseMatrix,
    ) -> Result<StateVector> {
        let u_q = strategy_unitary(&control.params())?;
        let mut psi = StateVector::basis(4, 0)?;
        psi = apply_on(&u_q, &[QUBIT_Q], &psi)?;
        psi = apply(&self.j1, &psi)?;
        psi = apply(&self.j2, &psi)?;
        psi = apply_on(u_a, &[QUBIT_A], &psi)?;
        psi = apply_on(u_b1, &[QUBIT_B1], &psi)?;
        psi = apply_on(u_b2, &[QUBIT_B2], &psi)?;
        psi = apply(&self.j2_dag, &psi)?;
        apply(&self.j1_dag, &psi)
    }
}

pub fn evolve_bayesian_circuit(
    control: &ControlSpec,
    g: EntanglerAngle,
    u_a: &StrategyParams,
    u_b1: &StrategyParams,
    u_b2: &StrategyParams,
) -> Result<StateVector> {
    BayesianCircuit::new(g).evolve(
        control,
        &strategy_unitary(u_a)?,
        &strategy_unitary(u_b1)?,
        &strategy_unitary(u_b2)?,
    )
}

/// Payoffs read off a measured four-qubit state. B payoffs are conditional
/// on the control branch and are `None` when that branch has no weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitPayoffs {
    pub a: f64,
    pub b1: Option<f64>,
    pub b2: Option<f64>,
    /// Probability of the `Q = |1⟩` branch.
    pub p_b1: f64,
}

pub fn bayesian_payoffs_circuit(psi: &StateVector, game: &BayesianGame) -> Result<CircuitPayoffs> {
    if psi.n_qubits() != 4 {
        return Err(Error::Dimension {
            expected: 16,
            found: psi.dim(),
        });
    }
    let (g1, g2) = (&game.subgame_b1, &game.subgame_b2);
    let (mut a, mut b1, mut b2, mut w1, mut w0) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (idx, amp) in psi.amplitudes().iter().enumerate() {
        let prob = amp.norm_sqr();
        let q = (idx >> 3) & 1;
        let qa = (idx >> 2) & 1;
        let qb1 = (idx >> 1) & 1;
        let qb2 = idx & 1;
        if q == 1 {
            w1 += prob;
            a += prob * g1.payoff_a.outcome(qa, qb1);
            b1 += prob * g1.payoff_b.outcome(qa, qb1);
        } else {
            w0 += prob;
            a += prob * g2.payoff_a.outcome(qa, qb2);
            b2 += prob * g2.payoff_b.outcome(qa, qb2);
        }
    }
    Ok(CircuitPayoffs {
        a,
        b1: (w1 > BRANCH_EPS).then(|| b1 / w1),
        b2: (w0 > BRANCH_EPS).then(|| b2 / w0),
        p_b1: w1,
    })
}

/// Bayesian payoffs from the four-qubit circuit, with the two-player subgame
/// value standing in for a B payoff whose branch has zero weight.
pub fn bayesian_payoffs_full_circuit(
    circuit: &BayesianCircuit,
    control: &ControlSpec,
    game: &BayesianGame,
    u_a: &DenseMatrix,
    u_b1: &DenseMatrix,
    u_b2: &DenseMatrix,
) -> Result<[f64; 3]> {
    let psi = circuit.evolve(control, u_a, u_b1, u_b2)?;
    let pay = bayesian_payoffs_circuit(&psi, game)?;
    let g = circuit.gamma();
    let b1 = match pay.b1 {
        Some(v) => v,
        None => two_player_payoffs(&game.subgame_b1, g, u_a, u_b1)?[1],
    };
    let b2 = match pay.b2 {
        Some(v) => v,
        None => two_player_payoffs(&game.subgame_b2, g, u_a, u_b2)?[1],
    };
    Ok([pay.a, b1, b2])
}

/// `P(a, b | x, y)` for binary outcomes `a, b` and binary types `x, y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalDistribution {
    /// Indexed `[x][y][a][b]`.
    probs: [[[[f64; 2]; 2]; 2]; 2],
}

const NORMALIZATION_TOL: f64 = 1e-9;

impl ConditionalDistribution {
    pub fn new(probs: [[[[f64; 2]; 2]; 2]; 2]) -> Result<Self> {
        for (x, row) in probs.iter().enumerate() {
            for (y, table) in row.iter().enumerate() {
                if table.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::OutOfRange {
                        name: "probability",
                        value: table
                            .iter()
                            .flatten()
                            .copied()
                            .find(|v| !(0.0..=1.0).contains(v))
                            .unwrap_or(f64::NAN),
                        range: "[0, 1]",
                    });
                }
                let sum: f64 = table.iter().flatten().sum();
                if (sum - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(Error::Unnormalized { x, y, sum });
                }
            }
        }
        Ok(Self { probs })
    }

    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.probs[x][y][a][b]
    }

    /// Outcome statistics of computational-basis measurements on `J(γ)|00⟩`
    /// after A applies `a_types[x]` and B applies `b_types[y]`.
    pub fn from_shared_state(
        g: EntanglerAngle,
        a_types: [&DenseMatrix; 2],
        b_types: [&DenseMatrix; 2],
    ) -> Result<Self> {
        let shared = apply(&entangler(g), &StateVector::basis(2, 0)?)?;
        let mut probs = [[[[0.0; 2]; 2]; 2]; 2];
        for (x, ua) in a_types.iter().enumerate() {
            for (y, ub) in b_types.iter().enumerate() {
                let psi = apply_on(ub, &[1], &apply_on(ua, &[0], &shared)?)?;
                for (idx, p) in psi.probabilities().into_iter().enumerate() {
                    probs[x][y][idx >> 1][idx & 1] = p;
                }
            }
        }
        Self::new(probs)
    }
}

/// True iff each party's marginal is independent of the other party's type.
pub fn no_signaling_check(d: &ConditionalDistribution, tol: f64) -> bool {
    let marg_a = |a: usize, x: usize, y: usize| (0..2).map(|b| d.get(a, b, x, y)).sum::<f64>();
    let marg_b = |b: usize, x: usize, y: usize| (0..2).map(|a| d.get(a, b, x, y)).sum::<f64>();
    (0..2).all(|o| {
        (0..2).all(|t| {
            (marg_a(o, t, 0) - marg_a(o, t, 1)).abs() <= tol
                && (marg_b(o, 0, t) - marg_b(o, 1, t)).abs() <= tol
        })
    })
}

/// `e^{iδ}·u`.
pub fn with_global_phase(u: &DenseMatrix, delta: f64) -> DenseMatrix {
    u.scale(C64::from_polar(1.0, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{builtin_bayesian, builtin_da, builtin_pd};
    use crate::tensor::{kron, phase_equal, ONE};
    use std::f64::consts::FRAC_PI_2;

    const C_LIKE: StrategyParams = StrategyParams::new(0.0, 0.0, 0.0);
    const D_LIKE: StrategyParams = StrategyParams::new(PI, 0.0, 0.0);

    fn gamma(v: f64) -> EntanglerAngle {
        EntanglerAngle::new(v).unwrap()
    }

    #[test]
    fn strategy_unitary_special_cases() {
        let id = DenseMatrix::identity(2).unwrap();
        assert!(strategy_unitary(&C_LIKE).unwrap().approx_eq(&id, 1e-15));

        let d = strategy_unitary(&D_LIKE).unwrap();
        let expected = DenseMatrix::from_rows([[ZERO, ONE], [-ONE, ZERO]]).unwrap();
        assert!(d.approx_eq(&expected, 1e-15));

        let x_like = strategy_unitary(&StrategyParams::new(PI, 0.0, FRAC_PI_2)).unwrap();
        let expected = DenseMatrix::from_rows([[ZERO, I], [I, ZERO]]).unwrap();
        assert!(x_like.approx_eq(&expected, 1e-15));
        assert!(x_like.is_unitary(1e-14));
    }

    #[test]
    fn strategy_range_errors() {
        assert!(strategy_unitary(&StrategyParams::new(-0.1, 0.0, 0.0)).is_err());
        assert!(strategy_unitary(&StrategyParams::new(4.0, 0.0, 0.0)).is_err());
        assert!(strategy_unitary(&StrategyParams::new(1.0, TAU, 0.0)).is_err());
        assert!(strategy_unitary(&StrategyParams::new(1.0, 0.0, f64::NAN)).is_err());
    }

    #[test]
    fn entangler_cases() {
        assert!(entangler(gamma(0.0)).approx_eq(&DenseMatrix::identity(4).unwrap(), 0.0));
        let bell = apply(
            &entangler(gamma(FRAC_PI_2)),
            &StateVector::basis(2, 0).unwrap(),
        )
        .unwrap();
        let r = 0.5f64.sqrt();
        let expected =
            StateVector::new(vec![C64::new(r, 0.0), ZERO, ZERO, C64::new(0.0, r)]).unwrap();
        assert!(bell.phase_distance(&expected) < 1e-15);
        assert!((bell.amplitudes()[3] - C64::new(0.0, r)).norm() < 1e-15);
        let j = entangler(gamma(PI / 3.0));
        assert!((j.get(0, 0).re - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(j.is_unitary(1e-14));
        assert!(EntanglerAngle::new(1.6).is_err());
        assert!(EntanglerAngle::new(-1e-3).is_err());
    }

    #[test]
    fn dagger_inverts_entangler() {
        let j = entangler(gamma(0.7));
        let prod = dagger(&j).matmul(&j).unwrap();
        assert!(prod.approx_eq(&DenseMatrix::identity(4).unwrap(), 1e-15));
    }

    #[test]
    fn identity_strategies_recover_initial_state() {
        for g in [0.0, 0.4, 1.0, FRAC_PI_2] {
            let psi = evolve_two_player(gamma(g), &C_LIKE, &C_LIKE).unwrap();
            assert!(psi.phase_distance(&StateVector::basis(2, 0).unwrap()) < 1e-14);
        }
    }

    #[test]
    fn classical_defection_flips_both() {
        let psi = evolve_two_player(gamma(0.0), &D_LIKE, &D_LIKE).unwrap();
        assert!(psi.phase_distance(&StateVector::basis(2, 3).unwrap()) < 1e-14);
    }

    // Independent route: explicit 4×4 matrix chain built from kron/matmul.
    fn matrix_chain(g: EntanglerAngle, ua: &DenseMatrix, ub: &DenseMatrix) -> StateVector {
        let j = entangler(g);
        let full = dagger(&j)
            .matmul(&kron(ua, ub).unwrap())
            .unwrap()
            .matmul(&j)
            .unwrap();
        apply(&full, &StateVector::basis(2, 0).unwrap()).unwrap()
    }

    #[test]
    fn closed_form_matches_matrix_chain() {
        let ua = strategy_unitary(&D_LIKE).unwrap();
        let ub = strategy_unitary(&StrategyParams::new(PI, 0.0, FRAC_PI_2)).unwrap();
        let fast = evolve_two_player_unitaries(gamma(1.0), &ua, &ub).unwrap();
        let slow = matrix_chain(gamma(1.0), &ua, &ub);
        for (x, y) in fast.amplitudes().iter().zip(slow.amplitudes()) {
            assert!((x - y).norm() < 1e-14);
        }
        // and at the Bell point with generic strategies
        let ua = strategy_matrix(0.3, 1.1, 2.5);
        let ub = strategy_matrix(2.2, 0.4, 5.9);
        let fast = evolve_two_player_unitaries(gamma(FRAC_PI_2), &ua, &ub).unwrap();
        let slow = matrix_chain(gamma(FRAC_PI_2), &ua, &ub);
        for (x, y) in fast.amplitudes().iter().zip(slow.amplitudes()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn mixture_examples() {
        let c = strategy_unitary(&C_LIKE).unwrap();
        let d = strategy_unitary(&D_LIKE).unwrap();
        let g0 = gamma(0.0);

        let game = builtin_bayesian(0.5).unwrap();
        let pay = bayesian_payoffs_mixture(&game, g0, &d, &d, &c).unwrap();
        assert!((pay[0] - 8.0).abs() < 1e-12);
        assert!((pay[1] - 6.0).abs() < 1e-12);
        assert!((pay[2] - 1.0).abs() < 1e-12);

        let game = builtin_bayesian(0.1).unwrap();
        let pay = bayesian_payoffs_mixture(&game, g0, &c, &d, &c).unwrap();
        assert!((pay[0] - 10.0).abs() < 1e-12);
        assert!((pay[1] - 10.0).abs() < 1e-12);
        assert!((pay[2] - 9.0).abs() < 1e-12);

        let game = builtin_bayesian(1.0).unwrap();
        let ua = strategy_matrix(1.0, 0.2, 0.3);
        let ub = strategy_matrix(2.0, 0.5, 4.0);
        let g = gamma(0.9);
        let pay = bayesian_payoffs_mixture(&game, g, &ua, &ub, &c).unwrap();
        let pd = two_player_payoffs(&builtin_pd(), g, &ua, &ub).unwrap();
        assert!((pay[0] - pd[0]).abs() < 1e-12);
    }

    #[test]
    fn controlled_entanglers_commute() {
        for g in [0.3, 1.0, FRAC_PI_2] {
            let circuit = BayesianCircuit::new(gamma(g));
            let (j1, j2) = circuit.entanglers();
            let ab = j1.matmul(j2).unwrap();
            let ba = j2.matmul(j1).unwrap();
            assert!(ab.approx_eq(&ba, 1e-15));
            assert!(j1.is_unitary(1e-14) && j2.is_unitary(1e-14));
        }
    }

    #[test]
    fn control_boundaries_select_subgames() {
        let game = builtin_bayesian(0.5).unwrap();
        let g = gamma(0.8);
        let circuit = BayesianCircuit::new(g);
        let ua = strategy_matrix(PI, 0.0, FRAC_PI_2);
        let ub1 = strategy_matrix(PI, 0.0, 0.0);
        let ub2 = strategy_matrix(0.0, FRAC_PI_2, 0.0);
        let pd = two_player_payoffs(&builtin_pd(), g, &ua, &ub1).unwrap();
        let da = two_player_payoffs(&builtin_da(), g, &ua, &ub2).unwrap();

        let to_da = ControlSpec::new(0.0, 0.0, 0.0).unwrap();
        let pay = bayesian_payoffs_full_circuit(&circuit, &to_da, &game, &ua, &ub1, &ub2).unwrap();
        assert!((pay[0] - da[0]).abs() < 1e-12);
        assert!((pay[2] - da[1]).abs() < 1e-12);
        // B₁'s branch is empty, so the subgame value stands in
        assert!((pay[1] - pd[1]).abs() < 1e-12);

        let to_pd = ControlSpec::new(PI, 0.0, 0.0).unwrap();
        let pay = bayesian_payoffs_full_circuit(&circuit, &to_pd, &game, &ua, &ub1, &ub2).unwrap();
        assert!((pay[0] - pd[0]).abs() < 1e-12);
        assert!((pay[1] - pd[1]).abs() < 1e-12);
    }

    #[test]
    fn half_control_matches_mixture() {
        let g = gamma(0.5);
        let circuit = BayesianCircuit::new(g);
        let game = builtin_bayesian(0.5).unwrap();
        let control = ControlSpec::new(FRAC_PI_2, 0.3, 1.7).unwrap();
        assert!((control.probability() - 0.5).abs() < 1e-15);
        let ua = strategy_matrix(1.2, 0.7, 3.1);
        let ub1 = strategy_matrix(0.4, 2.0, 0.1);
        let ub2 = strategy_matrix(2.9, 5.0, 4.4);
        let full =
            bayesian_payoffs_full_circuit(&circuit, &control, &game, &ua, &ub1, &ub2).unwrap();
        let mix = bayesian_payoffs_mixture(&game, g, &ua, &ub1, &ub2).unwrap();
        for (x, y) in full.iter().zip(mix) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    fn branch_state(q: usize, a: usize, b1: usize, b2: usize) -> usize {
        8 * q + 4 * a + 2 * b1 + b2
    }

    #[test]
    fn payoffs_from_basis_states() {
        let game = builtin_bayesian(0.3).unwrap();
        let pd_dd = StateVector::basis(4, branch_state(1, 1, 1, 0)).unwrap();
        let pay = bayesian_payoffs_circuit(&pd_dd, &game).unwrap();
        assert_eq!((pay.a, pay.b1, pay.b2), (6.0, Some(6.0), None));

        let da_cc = StateVector::basis(4, branch_state(0, 0, 1, 0)).unwrap();
        let pay = bayesian_payoffs_circuit(&da_cc, &game).unwrap();
        assert_eq!((pay.a, pay.b1, pay.b2), (11.0, None, Some(9.0)));

        let r = 0.5f64.sqrt();
        let mut amps = vec![ZERO; 16];
        amps[branch_state(1, 1, 1, 0)] = C64::new(r, 0.0);
        amps[branch_state(0, 0, 1, 0)] = C64::new(r, 0.0);
        let pay = bayesian_payoffs_circuit(&StateVector::new(amps).unwrap(), &game).unwrap();
        assert!((pay.a - 8.5).abs() < 1e-12);
    }

    #[test]
    fn no_signaling_examples() {
        // product distribution
        let pa = [[0.3, 0.7], [0.9, 0.1]];
        let pb = [[0.5, 0.5], [0.2, 0.8]];
        let mut probs = [[[[0.0; 2]; 2]; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        probs[x][y][a][b] = pa[x][a] * pb[y][b];
                    }
                }
            }
        }
        let d = ConditionalDistribution::new(probs).unwrap();
        assert!(no_signaling_check(&d, 1e-12));

        // a copies y
        let mut probs = [[[[0.0; 2]; 2]; 2]; 2];
        for row in probs.iter_mut() {
            for (y, table) in row.iter_mut().enumerate() {
                table[y][0] = 1.0;
            }
        }
        let d = ConditionalDistribution::new(probs).unwrap();
        assert!(!no_signaling_check(&d, 1e-12));

        let mut probs = [[[[0.25; 2]; 2]; 2]; 2];
        probs[1][0][0][0] = 0.5;
        assert!(matches!(
            ConditionalDistribution::new(probs),
            Err(Error::Unnormalized { x: 1, y: 0, .. })
        ));
    }

    #[test]
    fn entangled_local_statistics_do_not_signal() {
        let a_types = [
            strategy_matrix(PI, 0.0, FRAC_PI_2),
            strategy_matrix(0.7, 1.0, 2.0),
        ];
        let b_types = [
            strategy_matrix(0.0, FRAC_PI_2, 0.0),
            strategy_matrix(2.1, 4.0, 0.5),
        ];
        for g in [0.0, 0.7, FRAC_PI_2] {
            let d = ConditionalDistribution::from_shared_state(
                gamma(g),
                [&a_types[0], &a_types[1]],
                [&b_types[0], &b_types[1]],
            )
            .unwrap();
            assert!(no_signaling_check(&d, 1e-12));
        }
    }

    #[test]
    fn global_phase_does_not_change_payoffs() {
        let game = builtin_bayesian(0.35).unwrap();
        let g = gamma(1.1);
        let us = [
            strategy_matrix(PI, 0.0, FRAC_PI_2),
            strategy_matrix(0.9, 2.0, 1.0),
            strategy_matrix(0.0, 3.0, 0.0),
        ];
        let base = bayesian_payoffs_mixture(&game, g, &us[0], &us[1], &us[2]).unwrap();
        for delta in [PI / 7.0, 1.0, 3.0] {
            for k in 0..3 {
                let mut v = us.clone();
                v[k] = with_global_phase(&us[k], delta);
                assert!(phase_equal(&v[k], &us[k], 1e-12).unwrap());
                let pay = bayesian_payoffs_mixture(&game, g, &v[0], &v[1], &v[2]).unwrap();
                for (x, y) in pay.iter().zip(base) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }
}
