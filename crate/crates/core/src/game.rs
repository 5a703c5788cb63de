//! Payoff data for the prisoner's dilemma, the DA's-brother variant and the
//! Bayesian game built from the two, plus classical pure-strategy baselines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::StateVector;

/// Payoff per two-qubit measurement outcome in basis order
/// `|00⟩, |01⟩, |10⟩, |11⟩` (player A's qubit first).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PayoffSpec([f64; 4]);

impl PayoffSpec {
    pub fn new(values: [f64; 4]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64; 4] {
        &self.0
    }

    /// Payoff for the classical outcome `(a, b)`, each 0 (C) or 1 (D).
    pub fn outcome(&self, a: usize, b: usize) -> f64 {
        self.0[2 * a + b]
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl TryFrom<Vec<f64>> for PayoffSpec {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        let arr: [f64; 4] = values
            .as_slice()
            .try_into()
            .map_err(|_| Error::PayoffLength {
                expected: 4,
                found: values.len(),
            })?;
        Self::new(arr)
    }
}

impl From<PayoffSpec> for Vec<f64> {
    fn from(p: PayoffSpec) -> Self {
        p.0.to_vec()
    }
}

/// `Σ_j |ψ_j|² · $_j` for a two-qubit state.
pub fn payoff_expectation(psi: &StateVector, payoff: &PayoffSpec) -> Result<f64> {
    if psi.dim() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            found: psi.dim(),
        });
    }
    Ok(psi
        .amplitudes()
        .iter()
        .zip(payoff.values())
        .map(|(amp, v)| amp.norm_sqr() * v)
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPlayerGame {
    pub name: String,
    pub payoff_a: PayoffSpec,
    pub payoff_b: PayoffSpec,
}

/// Player A against one of two types of player B: the `subgame_b1` type with
/// probability `p`, the `subgame_b2` type otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesianGame {
    pub subgame_b1: TwoPlayerGame,
    pub subgame_b2: TwoPlayerGame,
    p: f64,
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "p",
            value: p,
            range: "[0, 1]",
        })
    }
}

impl BayesianGame {
    pub fn new(subgame_b1: TwoPlayerGame, subgame_b2: TwoPlayerGame, p: f64) -> Result<Self> {
        check_probability(p)?;
        Ok(Self {
            subgame_b1,
            subgame_b2,
            p,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(self.subgame_b1.clone(), self.subgame_b2.clone(), p)
    }
}

/// Either kind of game the solver handles.
#[derive(Debug, Clone, PartialEq)]
pub enum GameInstance {
    TwoPlayer(TwoPlayerGame),
    Bayesian(BayesianGame),
}

impl GameInstance {
    pub fn n_players(&self) -> usize {
        match self {
            GameInstance::TwoPlayer(_) => 2,
            GameInstance::Bayesian(_) => 3,
        }
    }
}

/// A game as loaded from a definition file: the Bayesian prior is supplied
/// separately when the game is solved.
#[derive(Debug, Clone, PartialEq)]
pub enum GameDefinition {
    TwoPlayer(TwoPlayerGame),
    Bayesian {
        subgame_b1: TwoPlayerGame,
        subgame_b2: TwoPlayerGame,
    },
}

impl GameDefinition {
    pub fn builtin_bayesian() -> Self {
        GameDefinition::Bayesian {
            subgame_b1: builtin_pd(),
            subgame_b2: builtin_da(),
        }
    }

    pub fn is_bayesian(&self) -> bool {
        matches!(self, GameDefinition::Bayesian { .. })
    }

    /// Concrete game; Bayesian definitions need a prior `p`.
    pub fn instance(&self, p: Option<f64>) -> Result<GameInstance> {
        match (self, p) {
            (GameDefinition::TwoPlayer(g), _) => Ok(GameInstance::TwoPlayer(g.clone())),
            (
                GameDefinition::Bayesian {
                    subgame_b1,
                    subgame_b2,
                },
                Some(p),
            ) => Ok(GameInstance::Bayesian(BayesianGame::new(
                subgame_b1.clone(),
                subgame_b2.clone(),
                p,
            )?)),
            (GameDefinition::Bayesian { .. }, None) => {
                Err(Error::config("p", "Bayesian game needs a prior p"))
            }
        }
    }
}

impl From<GameInstance> for GameDefinition {
    fn from(g: GameInstance) -> Self {
        match g {
            GameInstance::TwoPlayer(t) => GameDefinition::TwoPlayer(t),
            GameInstance::Bayesian(b) => GameDefinition::Bayesian {
                subgame_b1: b.subgame_b1,
                subgame_b2: b.subgame_b2,
            },
        }
    }
}

const PD_A: [f64; 4] = [11.0, 1.0, 10.0, 6.0];
const PD_B: [f64; 4] = [9.0, 10.0, 1.0, 6.0];
const DA_A: [f64; 4] = [11.0, 1.0, 10.0, 6.0];
const DA_B: [f64; 4] = [9.0, 6.0, 1.0, 0.0];

/// Asymmetric prisoner's dilemma between A and B₁.
pub fn builtin_pd() -> TwoPlayerGame {
    TwoPlayerGame {
        name: "pd".into(),
        payoff_a: PayoffSpec(PD_A),
        payoff_b: PayoffSpec(PD_B),
    }
}

/// DA's-brother game between A and B₂.
pub fn builtin_da() -> TwoPlayerGame {
    TwoPlayerGame {
        name: "da".into(),
        payoff_a: PayoffSpec(DA_A),
        payoff_b: PayoffSpec(DA_B),
    }
}

pub fn builtin_bayesian(p: f64) -> Result<BayesianGame> {
    BayesianGame::new(builtin_pd(), builtin_da(), p)
}

/// Classical pure action; `C` maps to outcome `|0⟩`, `D` to `|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    C,
    D,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::C, Action::D];

    pub fn bit(self) -> usize {
        match self {
            Action::C => 0,
            Action::D => 1,
        }
    }
}

const CLASSICAL_TIE: f64 = 1e-12;

/// Pure-strategy equilibria of the classical 2×2 game.
pub fn classical_pure_ne(game: &TwoPlayerGame) -> Vec<(Action, Action)> {
    let pay_a = |a: Action, b: Action| game.payoff_a.outcome(a.bit(), b.bit());
    let pay_b = |a: Action, b: Action| game.payoff_b.outcome(a.bit(), b.bit());
    let mut out = Vec::new();
    for a in Action::ALL {
        for b in Action::ALL {
            let a_stable = Action::ALL
                .iter()
                .all(|&dev| pay_a(dev, b) <= pay_a(a, b) + CLASSICAL_TIE);
            let b_stable = Action::ALL
                .iter()
                .all(|&dev| pay_b(a, dev) <= pay_b(a, b) + CLASSICAL_TIE);
            if a_stable && b_stable {
                out.push((a, b));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalBayesianNe {
    pub profile: (Action, Action, Action),
    /// Payoffs of (A, B₁, B₂).
    pub payoffs: [f64; 3],
}

/// Pure-strategy equilibria of the classical Bayesian game at `game.p()`.
pub fn classical_bayesian_ne(game: &BayesianGame) -> Vec<ClassicalBayesianNe> {
    let p = game.p;
    let g1 = &game.subgame_b1;
    let g2 = &game.subgame_b2;
    let pay = |a: Action, b1: Action, b2: Action| {
        [
            p * g1.payoff_a.outcome(a.bit(), b1.bit())
                + (1.0 - p) * g2.payoff_a.outcome(a.bit(), b2.bit()),
            g1.payoff_b.outcome(a.bit(), b1.bit()),
            g2.payoff_b.outcome(a.bit(), b2.bit()),
        ]
    };
    let mut out = Vec::new();
    for a in Action::ALL {
        for b1 in Action::ALL {
            for b2 in Action::ALL {
                let here = pay(a, b1, b2);
                let stable = Action::ALL.iter().all(|&dev| {
                    pay(dev, b1, b2)[0] <= here[0] + CLASSICAL_TIE
                        && pay(a, dev, b2)[1] <= here[1] + CLASSICAL_TIE
                        && pay(a, b1, dev)[2] <= here[2] + CLASSICAL_TIE
                });
                if stable {
                    out.push(ClassicalBayesianNe {
                        profile: (a, b1, b2),
                        payoffs: here,
                    });
                }
            }
        }
    }
    out
}
