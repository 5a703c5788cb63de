//! Pure-strategy Nash equilibrium search by brute-force best response, an
//! independent deviation check, and grouping of equilibria into classes that
//! share a θ-profile and payoffs and differ only by correlated phases.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::circuit::{
    bayesian_payoffs_full_circuit, bayesian_payoffs_mixture, expect, outcome_probabilities,
    two_player_payoffs, BayesianCircuit, ControlSpec, EntanglerAngle,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::game::{BayesianGame, GameInstance, TwoPlayerGame};
use crate::grid::{pauli_label, StrategySet};

/// Default absolute tie tolerance for best responses.
pub const DEFAULT_EPS_TIE: f64 = 1e-9;

/// Payoff agreement required for two equilibria to share a class.
pub const CLASS_PAYOFF_TOL: f64 = 1e-9;

/// Largest strategy set the dense four-qubit solver accepts.
pub const MAX_CIRCUIT_STRATEGIES: usize = 64;

/// Strategy indices, one per player, in player order (A, B) or (A, B₁, B₂).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Profile(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub profile: Profile,
    pub payoffs: Vec<f64>,
}

/// How Bayesian payoffs are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Evaluation {
    /// `p`-weighted mixture of the two two-qubit subgames.
    #[default]
    Mixture,
    /// Four-qubit circuit with an explicit control rotation.
    FullCircuit { control: ControlSpec },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub indices: Vec<usize>,
    pub value: f64,
}

impl BestResponse {
    pub fn contains(&self, idx: usize) -> bool {
        self.indices.binary_search(&idx).is_ok()
    }
}

/// Every candidate in `0..n` whose payoff is within `eps_tie` of the maximum.
pub fn best_responses(
    n: usize,
    eps_tie: f64,
    payoff: impl Fn(usize) -> f64,
) -> Result<BestResponse> {
    if n == 0 {
        return Err(Error::EmptyStrategySet);
    }
    let values: Vec<f64> = (0..n).map(payoff).collect();
    Ok(best_of(&values, eps_tie))
}

fn best_of(values: &[f64], eps_tie: f64) -> BestResponse {
    let value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let indices = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= value - eps_tie)
        .map(|(i, _)| i)
        .collect();
    BestResponse { indices, value }
}

/// Best responses of one player, indexed by the opponents' configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseMap {
    pub responses: Vec<BestResponse>,
}

/// Expected payoffs of a two-player game over every pair of strategies.
#[derive(Debug, Clone)]
pub struct PayoffTable {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PayoffTable {
    /// Builds one table per game; all games share the outcome probabilities of
    /// each strategy pair.
    pub fn build_many(
        games: &[&TwoPlayerGame],
        g: EntanglerAngle,
        set: &StrategySet,
        exec: Execution,
    ) -> Result<Vec<PayoffTable>> {
        let n = set.len();
        if n == 0 {
            return Err(Error::EmptyStrategySet);
        }
        let rows = exec.map(n, |ia| {
            let ua = set.unitary(ia);
            let mut out: Vec<(Vec<f64>, Vec<f64>)> = games
                .iter()
                .map(|_| (Vec::with_capacity(n), Vec::with_capacity(n)))
                .collect();
            for ib in 0..n {
                let probs = outcome_probabilities(g, ua, set.unitary(ib));
                for (game, (ra, rb)) in games.iter().zip(out.iter_mut()) {
                    ra.push(expect(&probs, &game.payoff_a));
                    rb.push(expect(&probs, &game.payoff_b));
                }
            }
            out
        });
        let mut tables: Vec<PayoffTable> = games
            .iter()
            .map(|_| PayoffTable {
                n,
                a: Vec::with_capacity(n * n),
                b: Vec::with_capacity(n * n),
            })
            .collect();
        for row in rows {
            for (table, (ra, rb)) in tables.iter_mut().zip(row) {
                table.a.extend(ra);
                table.b.extend(rb);
            }
        }
        Ok(tables)
    }

    pub fn build(
        game: &TwoPlayerGame,
        g: EntanglerAngle,
        set: &StrategySet,
        exec: Execution,
    ) -> Result<PayoffTable> {
        Ok(Self::build_many(&[game], g, set, exec)?.remove(0))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn payoff_a(&self, ia: usize, ib: usize) -> f64 {
        self.a[ia * self.n + ib]
    }

    #[inline]
    pub fn payoff_b(&self, ia: usize, ib: usize) -> f64 {
        self.b[ia * self.n + ib]
    }

    /// B's best responses to each of A's strategies.
    pub fn best_responses_b(&self, eps_tie: f64, exec: Execution) -> BestResponseMap {
        let n = self.n;
        BestResponseMap {
            responses: exec.map(n, |ia| best_of(&self.b[ia * n..(ia + 1) * n], eps_tie)),
        }
    }

    /// A's best responses to each of B's strategies.
    pub fn best_responses_a(&self, eps_tie: f64, exec: Execution) -> BestResponseMap {
        let n = self.n;
        BestResponseMap {
            responses: exec.map(n, |ib| {
                let column: Vec<f64> = (0..n).map(|ia| self.a[ia * n + ib]).collect();
                best_of(&column, eps_tie)
            }),
        }
    }
}

fn sort_records(records: &mut [EquilibriumRecord]) {
    records.sort_by(|x, y| x.profile.cmp(&y.profile));
}

/// Equilibria of a two-player game: intersections of the best-response maps.
pub fn find_ne_two_player(
    game: &TwoPlayerGame,
    g: EntanglerAngle,
    set: &StrategySet,
    eps_tie: f64,
    exec: Execution,
) -> Result<Vec<EquilibriumRecord>> {
    let table = PayoffTable::build(game, g, set, exec)?;
    Ok(find_ne_in_table(&table, eps_tie, exec))
}

pub fn find_ne_in_table(
    table: &PayoffTable,
    eps_tie: f64,
    exec: Execution,
) -> Vec<EquilibriumRecord> {
    let br_b = table.best_responses_b(eps_tie, exec);
    let br_a = table.best_responses_a(eps_tie, exec);
    let mut records: Vec<EquilibriumRecord> = exec
        .map(table.n, |ia| {
            br_b.responses[ia]
                .indices
                .iter()
                .filter(|&&ib| br_a.responses[ib].contains(ia))
                .map(|&ib| EquilibriumRecord {
                    profile: Profile(vec![ia, ib]),
                    payoffs: vec![table.payoff_a(ia, ib), table.payoff_b(ia, ib)],
                })
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect();
    sort_records(&mut records);
    records
}

/// Subgame tables of the Bayesian game at one γ. They do not depend on `p`,
/// so one build serves a whole column of a `(p, γ)` sweep.
#[derive(Debug, Clone)]
pub struct BayesianTables {
    with_b1: PayoffTable,
    with_b2: PayoffTable,
    br_b1: BestResponseMap,
    br_b2: BestResponseMap,
    eps_tie: f64,
}

impl BayesianTables {
    pub fn build(
        game: &BayesianGame,
        g: EntanglerAngle,
        set: &StrategySet,
        eps_tie: f64,
        exec: Execution,
    ) -> Result<Self> {
        let mut tables =
            PayoffTable::build_many(&[&game.subgame_b1, &game.subgame_b2], g, set, exec)?;
        let with_b2 = tables.pop().expect("two tables");
        let with_b1 = tables.pop().expect("two tables");
        Ok(Self {
            br_b1: with_b1.best_responses_b(eps_tie, exec),
            br_b2: with_b2.best_responses_b(eps_tie, exec),
            with_b1,
            with_b2,
            eps_tie,
        })
    }

    /// A's expected payoff `p·T₁[a][b₁] + (1−p)·T₂[a][b₂]`.
    #[inline]
    pub fn payoff_a(&self, p: f64, ia: usize, ib1: usize, ib2: usize) -> f64 {
        p * self.with_b1.payoff_a(ia, ib1) + (1.0 - p) * self.with_b2.payoff_a(ia, ib2)
    }

    pub fn payoffs(&self, p: f64, ia: usize, ib1: usize, ib2: usize) -> [f64; 3] {
        [
            self.payoff_a(p, ia, ib1, ib2),
            self.with_b1.payoff_b(ia, ib1),
            self.with_b2.payoff_b(ia, ib2),
        ]
    }

    /// Equilibria at prior `p`.
    pub fn solve(&self, p: f64, exec: Execution) -> Vec<EquilibriumRecord> {
        let n = self.with_b1.n;
        let eps = self.eps_tie;
        let mut records: Vec<EquilibriumRecord> = exec
            .map(n, |ia| {
                let mut found = Vec::new();
                for &ib1 in &self.br_b1.responses[ia].indices {
                    for &ib2 in &self.br_b2.responses[ia].indices {
                        let here = self.payoff_a(p, ia, ib1, ib2);
                        let best = (0..n)
                            .map(|alt| self.payoff_a(p, alt, ib1, ib2))
                            .fold(f64::NEG_INFINITY, f64::max);
                        if here >= best - eps {
                            found.push(EquilibriumRecord {
                                profile: Profile(vec![ia, ib1, ib2]),
                                payoffs: self.payoffs(p, ia, ib1, ib2).to_vec(),
                            });
                        }
                    }
                }
                found
            })
            .into_iter()
            .flatten()
            .collect();
        sort_records(&mut records);
        records
    }
}

/// Equilibria of the Bayesian game at `game.p()` under mixture evaluation.
pub fn find_ne_bayesian(
    game: &BayesianGame,
    g: EntanglerAngle,
    set: &StrategySet,
    eps_tie: f64,
    exec: Execution,
) -> Result<Vec<EquilibriumRecord>> {
    Ok(BayesianTables::build(game, g, set, eps_tie, exec)?.solve(game.p(), exec))
}

/// Equilibria of the Bayesian game evaluated on the four-qubit circuit. Every
/// profile is simulated, so the set is limited to
/// [`MAX_CIRCUIT_STRATEGIES`] strategies.
pub fn find_ne_bayesian_circuit(
    game: &BayesianGame,
    control: &ControlSpec,
    g: EntanglerAngle,
    set: &StrategySet,
    eps_tie: f64,
    exec: Execution,
) -> Result<Vec<EquilibriumRecord>> {
    let n = set.len();
    if n == 0 {
        return Err(Error::EmptyStrategySet);
    }
    if n > MAX_CIRCUIT_STRATEGIES {
        return Err(Error::Size(format!(
            "full-circuit solve supports at most {MAX_CIRCUIT_STRATEGIES} strategies, got {n}"
        )));
    }
    let circuit = BayesianCircuit::new(g);
    let idx = |a: usize, b1: usize, b2: usize| (a * n + b1) * n + b2;
    let table: Vec<[f64; 3]> = exec
        .try_map(n, |ia| {
            let mut row = Vec::with_capacity(n * n);
            for ib1 in 0..n {
                for ib2 in 0..n {
                    row.push(bayesian_payoffs_full_circuit(
                        &circuit,
                        control,
                        game,
                        set.unitary_matrix(ia),
                        set.unitary_matrix(ib1),
                        set.unitary_matrix(ib2),
                    )?);
                }
            }
            Ok::<_, Error>(row)
        })?
        .into_iter()
        .flatten()
        .collect();

    let mut best_a = vec![f64::NEG_INFINITY; n * n];
    let mut best_b1 = vec![f64::NEG_INFINITY; n * n];
    let mut best_b2 = vec![f64::NEG_INFINITY; n * n];
    for a in 0..n {
        for b1 in 0..n {
            for b2 in 0..n {
                let v = table[idx(a, b1, b2)];
                best_a[b1 * n + b2] = best_a[b1 * n + b2].max(v[0]);
                best_b1[a * n + b2] = best_b1[a * n + b2].max(v[1]);
                best_b2[a * n + b1] = best_b2[a * n + b1].max(v[2]);
            }
        }
    }
    let mut records = Vec::new();
    for a in 0..n {
        for b1 in 0..n {
            for b2 in 0..n {
                let v = table[idx(a, b1, b2)];
                if v[0] >= best_a[b1 * n + b2] - eps_tie
                    && v[1] >= best_b1[a * n + b2] - eps_tie
                    && v[2] >= best_b2[a * n + b1] - eps_tie
                {
                    records.push(EquilibriumRecord {
                        profile: Profile(vec![a, b1, b2]),
                        payoffs: v.to_vec(),
                    });
                }
            }
        }
    }
    Ok(records)
}

/// Payoffs of a profile recomputed from the circuit, bypassing every table.
pub fn profile_payoffs(
    game: &GameInstance,
    g: EntanglerAngle,
    set: &StrategySet,
    eval: &Evaluation,
    profile: &[usize],
) -> Result<Vec<f64>> {
    if profile.len() != game.n_players() || profile.iter().any(|&i| i >= set.len()) {
        return Err(Error::Profile(profile.to_vec()));
    }
    let u = |k: usize| set.unitary_matrix(profile[k]);
    Ok(match (game, eval) {
        (GameInstance::TwoPlayer(two), _) => two_player_payoffs(two, g, u(0), u(1))?.to_vec(),
        (GameInstance::Bayesian(bayes), Evaluation::Mixture) => {
            bayesian_payoffs_mixture(bayes, g, u(0), u(1), u(2))?.to_vec()
        }
        (GameInstance::Bayesian(bayes), Evaluation::FullCircuit { control }) => {
            let circuit = BayesianCircuit::new(g);
            bayesian_payoffs_full_circuit(&circuit, control, bayes, u(0), u(1), u(2))?.to_vec()
        }
    })
}

/// Naive equilibrium check: recomputes the record's payoffs and tries every
/// unilateral deviation over the full strategy set. Also rejects records whose
/// stored payoffs disagree with the recomputed ones.
pub fn verify_ne(
    record: &EquilibriumRecord,
    game: &GameInstance,
    g: EntanglerAngle,
    set: &StrategySet,
    eps_tie: f64,
    eval: &Evaluation,
) -> Result<bool> {
    let base = profile_payoffs(game, g, set, eval, &record.profile.0)?;
    if record.payoffs.len() != base.len()
        || record
            .payoffs
            .iter()
            .zip(&base)
            .any(|(x, y)| (x - y).abs() > CLASS_PAYOFF_TOL)
    {
        return Ok(false);
    }
    for player in 0..base.len() {
        for alt in 0..set.len() {
            if alt == record.profile.0[player] {
                continue;
            }
            let mut deviated = record.profile.0.clone();
            deviated[player] = alt;
            let pay = profile_payoffs(game, g, set, eval, &deviated)?;
            if pay[player] > base[player] + eps_tie {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Observed offsets between the free phases of two players.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRelation {
    pub players: (usize, usize),
    /// `{phase_j + phase_i mod 2π}` when this set is the same for every value
    /// of player i's phase, otherwise `None`.
    pub sum: Option<Vec<f64>>,
    /// `{phase_j − phase_i mod 2π}` under the same condition.
    pub difference: Option<Vec<f64>>,
}

impl PhaseRelation {
    /// True when either the sum or the difference offsets equal `expected`.
    pub fn matches(&self, expected: &[f64]) -> bool {
        let want = phase_set(expected.iter().copied());
        [&self.sum, &self.difference]
            .into_iter()
            .flatten()
            .any(|set| sets_equal(set, &want))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumClass {
    pub theta_profile: Vec<f64>,
    pub payoffs: Vec<f64>,
    pub members: Vec<EquilibriumRecord>,
    pub phase_relations: Vec<PhaseRelation>,
    pub operator_label: Option<String>,
}

impl EquilibriumClass {
    /// Identifier derived from the θ-profile, e.g. `pi_pi_0`.
    pub fn class_id(&self) -> String {
        theta_signature(&self.theta_profile)
    }

    pub fn n_profiles(&self) -> usize {
        self.members.len()
    }

    pub fn relation(&self, i: usize, j: usize) -> Option<&PhaseRelation> {
        self.phase_relations.iter().find(|r| r.players == (i, j))
    }

    /// Largest per-player payoff spread across the members.
    pub fn payoff_spread(&self) -> f64 {
        (0..self.payoffs.len())
            .map(|k| {
                let (lo, hi) = self
                    .members
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, m| {
                        (acc.0.min(m.payoffs[k]), acc.1.max(m.payoffs[k]))
                    });
                hi - lo
            })
            .fold(0.0, f64::max)
    }
}

/// `0`, `pi`, or a multiple of π such as `0.5pi`, joined with `_`.
pub fn theta_signature(thetas: &[f64]) -> String {
    thetas
        .iter()
        .map(|&t| {
            let k = t / PI;
            if k.abs() < 1e-9 {
                "0".to_string()
            } else if (k - 1.0).abs() < 1e-9 {
                "pi".to_string()
            } else {
                format!("{}pi", (k * 1e6).round() / 1e6)
            }
        })
        .collect::<Vec<_>>()
        .join("_")
}

const PHASE_KEY_SCALE: f64 = 1e9;

fn phase_key(x: f64) -> i64 {
    let w = x.rem_euclid(TAU);
    let k = (w * PHASE_KEY_SCALE).round() as i64;
    if k >= (TAU * PHASE_KEY_SCALE).round() as i64 {
        0
    } else {
        k
    }
}

fn phase_set(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let keys: BTreeMap<i64, f64> = values.map(|v| (phase_key(v), v.rem_euclid(TAU))).collect();
    keys.into_iter()
        .map(|(k, v)| if k == 0 { 0.0 } else { v })
        .collect()
}

fn sets_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| phase_key(*x) == phase_key(*y))
}

/// The phase a strategy leaves free at the θ endpoints: φ at θ = 0, α at θ = π.
fn free_phase(set: &StrategySet, idx: usize) -> Option<f64> {
    let p = set.get(idx)?.params;
    if p.theta.abs() < 1e-9 {
        Some(p.phi)
    } else if (p.theta - PI).abs() < 1e-9 {
        Some(p.alpha)
    } else {
        None
    }
}

fn consistent_offsets(
    members: &[EquilibriumRecord],
    set: &StrategySet,
    i: usize,
    j: usize,
    combine: impl Fn(f64, f64) -> f64,
) -> Option<Vec<f64>> {
    let mut by_phase: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for m in members {
        let pi_ = free_phase(set, m.profile.0[i])?;
        let pj = free_phase(set, m.profile.0[j])?;
        by_phase
            .entry(phase_key(pi_))
            .or_default()
            .push(combine(pi_, pj));
    }
    let mut sets = by_phase.into_values().map(|v| phase_set(v.into_iter()));
    let first = sets.next()?;
    sets.all(|s| sets_equal(&s, &first)).then_some(first)
}

/// Groups equilibria by θ-profile and payoffs and reports the phase relations
/// within each group. Output order follows the first member of each class.
pub fn classify(records: &[EquilibriumRecord], set: &StrategySet) -> Vec<EquilibriumClass> {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let mut classes: Vec<EquilibriumClass> = Vec::new();
    for record in sorted {
        let thetas: Vec<f64> = record
            .profile
            .0
            .iter()
            .map(|&i| set.get(i).map_or(f64::NAN, |s| s.params.theta))
            .collect();
        let home = classes.iter_mut().find(|c| {
            c.theta_profile.len() == thetas.len()
                && c.theta_profile
                    .iter()
                    .zip(&thetas)
                    .all(|(x, y)| (x - y).abs() < 1e-9)
                && c.payoffs
                    .iter()
                    .zip(&record.payoffs)
                    .all(|(x, y)| (x - y).abs() <= CLASS_PAYOFF_TOL)
        });
        match home {
            Some(class) => class.members.push(record),
            None => classes.push(EquilibriumClass {
                theta_profile: thetas,
                payoffs: record.payoffs.clone(),
                members: vec![record],
                phase_relations: Vec::new(),
                operator_label: None,
            }),
        }
    }
    for class in &mut classes {
        let n_players = class.theta_profile.len();
        for i in 0..n_players {
            for j in i + 1..n_players {
                let has_phases = class.members.iter().all(|m| {
                    free_phase(set, m.profile.0[i]).is_some()
                        && free_phase(set, m.profile.0[j]).is_some()
                });
                if !has_phases || class.members.len() < 2 {
                    continue;
                }
                class.phase_relations.push(PhaseRelation {
                    players: (i, j),
                    sum: consistent_offsets(&class.members, set, i, j, |a, b| b + a),
                    difference: consistent_offsets(&class.members, set, i, j, |a, b| b - a),
                });
            }
        }
        class.operator_label = operator_label(class, set);
    }
    classes
}

fn operator_label(class: &EquilibriumClass, set: &StrategySet) -> Option<String> {
    let labelled = class.members.iter().all(|m| {
        m.profile.0.iter().all(|&i| {
            set.get(i)
                .is_some_and(|s| pauli_label(&s.unitary).is_some())
        })
    });
    if !labelled {
        return None;
    }
    let representative = class.members.first()?;
    let symbols: Option<Vec<String>> = representative
        .profile
        .0
        .iter()
        .map(|&i| pauli_label(&set.get(i)?.unitary).map(|(p, _)| p.to_string()))
        .collect();
    Some(symbols?.join("⊗"))
}
