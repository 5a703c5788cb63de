//! `(p, γ)` parameter sweeps and region summaries of the equilibrium classes.

use std::f64::consts::FRAC_PI_2;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::circuit::{ControlSpec, EntanglerAngle};
use crate::equilibrium::{
    classify, find_ne_bayesian_circuit, find_ne_in_table, verify_ne, BayesianTables,
    EquilibriumClass, Evaluation, PayoffTable, DEFAULT_EPS_TIE,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::game::{GameDefinition, GameInstance};
use crate::grid::{enumerate, GridSteps, StrategySet};

/// Evaluation used for Bayesian cells. In full-circuit mode θ_Q follows each
/// cell's `p` and the two phases stay fixed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SweepEvaluation {
    #[default]
    Mixture,
    FullCircuit {
        phi_q: f64,
        alpha_q: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(with = "crate::io::game_schema")]
    pub game: GameDefinition,
    /// Ignored for two-player games.
    pub p_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    pub grid_steps: GridSteps,
    pub eps_tie: f64,
    #[serde(default)]
    pub evaluation: SweepEvaluation,
    /// Re-check every equilibrium with the naive deviation scan.
    #[serde(default = "default_true")]
    pub verify: bool,
}

fn default_true() -> bool {
    true
}

/// `lo, lo+step, …` up to `hi`, with the last step clamped so that `hi` is
/// always the final value. Values are snapped to 1e-12.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite() && step > 0.0 && hi >= lo) {
        return Err(Error::OutOfRange {
            name: "step",
            value: step,
            range: "(0, hi - lo]",
        });
    }
    let n = ((hi - lo) / step).round() as usize;
    let snap = |x: f64| (x * 1e12).round() / 1e12;
    let mut out: Vec<f64> = (0..n).map(|k| snap(lo + k as f64 * step)).collect();
    out.push(hi);
    Ok(out)
}

impl SweepSpec {
    /// Bayesian sweep over `p ∈ [0, 1]` and `γ ∈ [0, π/2]`.
    pub fn bayesian(game: GameDefinition, p_step: f64, gamma_step: f64) -> Result<Self> {
        Ok(Self {
            game,
            p_values: uniform_grid(0.0, 1.0, p_step)?,
            gamma_values: uniform_grid(0.0, FRAC_PI_2, gamma_step)?,
            grid_steps: GridSteps::coarse(),
            eps_tie: DEFAULT_EPS_TIE,
            evaluation: SweepEvaluation::Mixture,
            verify: true,
        })
    }

    /// One-dimensional γ sweep of a two-player game.
    pub fn two_player(game: GameDefinition, gamma_step: f64) -> Result<Self> {
        Ok(Self {
            game,
            p_values: Vec::new(),
            gamma_values: uniform_grid(0.0, FRAC_PI_2, gamma_step)?,
            grid_steps: GridSteps::coarse(),
            eps_tie: DEFAULT_EPS_TIE,
            evaluation: SweepEvaluation::Mixture,
            verify: true,
        })
    }

    fn validate(&self) -> Result<()> {
        let ascending = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if self.gamma_values.is_empty() || !ascending(&self.gamma_values) {
            return Err(Error::config(
                "gamma_values",
                "must be non-empty and ascending",
            ));
        }
        if self.game.is_bayesian() && (self.p_values.is_empty() || !ascending(&self.p_values)) {
            return Err(Error::config("p_values", "must be non-empty and ascending"));
        }
        if self.eps_tie.is_nan() || self.eps_tie < 0.0 {
            return Err(Error::config("eps_tie", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    /// `None` for two-player sweeps.
    pub p: Option<f64>,
    pub gamma: f64,
    pub classes: Vec<EquilibriumClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// Ordered by `p`, then `γ`.
    pub cells: Vec<SweepCell>,
    #[serde(skip)]
    pub elapsed: Option<Duration>,
}

impl SweepResult {
    pub fn cell(&self, p: Option<f64>, gamma: f64) -> Option<&SweepCell> {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
        self.cells.iter().find(|c| {
            close(c.gamma, gamma)
                && match (c.p, p) {
                    (Some(x), Some(y)) => close(x, y),
                    (None, None) => true,
                    _ => false,
                }
        })
    }
}

fn verify_all(
    classes: &[EquilibriumClass],
    game: &GameInstance,
    g: EntanglerAngle,
    set: &StrategySet,
    eps: f64,
    eval: &Evaluation,
) -> Result<()> {
    for class in classes {
        for m in &class.members {
            if !verify_ne(m, game, g, set, eps, eval)? {
                return Err(Error::Verification(format!(
                    "profile {:?} at gamma = {} is not an equilibrium",
                    m.profile.0,
                    g.value()
                )));
            }
        }
    }
    Ok(())
}

/// Solves every cell of the sweep. Payoff tables are built once per γ and
/// shared across the `p` values of that column.
pub fn run_sweep(spec: &SweepSpec, exec: Execution) -> Result<SweepResult> {
    spec.validate()?;
    let start = Instant::now();
    let set = enumerate(spec.grid_steps)?;
    let gammas: Vec<EntanglerAngle> = spec
        .gamma_values
        .iter()
        .map(|&g| EntanglerAngle::new(g))
        .collect::<Result<_>>()?;

    // columns[γ][p]
    let columns: Vec<Vec<SweepCell>> = exec.try_map(gammas.len(), |gi| {
        let g = gammas[gi];
        let inner = Execution::Sequential;
        match &spec.game {
            GameDefinition::TwoPlayer(two) => {
                let table = PayoffTable::build(two, g, &set, inner)?;
                let classes = classify(&find_ne_in_table(&table, spec.eps_tie, inner), &set);
                if spec.verify {
                    let game = GameInstance::TwoPlayer(two.clone());
                    verify_all(&classes, &game, g, &set, spec.eps_tie, &Evaluation::Mixture)?;
                }
                Ok(vec![SweepCell {
                    p: None,
                    gamma: g.value(),
                    classes,
                }])
            }
            GameDefinition::Bayesian { .. } => {
                let base = match spec.game.instance(Some(0.0))? {
                    GameInstance::Bayesian(b) => b,
                    GameInstance::TwoPlayer(_) => unreachable!("definition is Bayesian"),
                };
                let tables = match spec.evaluation {
                    SweepEvaluation::Mixture => {
                        Some(BayesianTables::build(&base, g, &set, spec.eps_tie, inner)?)
                    }
                    SweepEvaluation::FullCircuit { .. } => None,
                };
                spec.p_values
                    .iter()
                    .map(|&p| {
                        let game = base.with_p(p)?;
                        let (records, eval) = match (&tables, spec.evaluation) {
                            (Some(t), _) => (t.solve(p, inner), Evaluation::Mixture),
                            (None, SweepEvaluation::FullCircuit { phi_q, alpha_q }) => {
                                let theta_q = ControlSpec::from_probability(p)?.theta_q;
                                let control = ControlSpec::new(theta_q, phi_q, alpha_q)?;
                                let records = find_ne_bayesian_circuit(
                                    &game,
                                    &control,
                                    g,
                                    &set,
                                    spec.eps_tie,
                                    inner,
                                )?;
                                (records, Evaluation::FullCircuit { control })
                            }
                            (None, SweepEvaluation::Mixture) => {
                                unreachable!("tables built for mixture")
                            }
                        };
                        let classes = classify(&records, &set);
                        if spec.verify {
                            let inst = GameInstance::Bayesian(game);
                            verify_all(&classes, &inst, g, &set, spec.eps_tie, &eval)?;
                        }
                        Ok(SweepCell {
                            p: Some(p),
                            gamma: g.value(),
                            classes,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            }
        }
    })?;

    let n_p = columns.first().map_or(0, Vec::len);
    let mut cells = Vec::with_capacity(n_p * columns.len());
    for pi in 0..n_p {
        for column in &columns {
            cells.push(column[pi].clone());
        }
    }
    Ok(SweepResult {
        spec: spec.clone(),
        cells,
        elapsed: Some(start.elapsed()),
    })
}

/// Where one class signature occurs in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub class_id: String,
    pub theta_profile: Vec<f64>,
    pub operator_label: Option<String>,
    /// Bounding `[min, max]` of occupied `p` values; `None` for two-player sweeps.
    pub p_range: Option<(f64, f64)>,
    pub gamma_range: (f64, f64),
    /// Occupied `(p, γ)` cells in sweep order.
    pub cells: Vec<(Option<f64>, f64)>,
}

impl RegionSummary {
    pub fn contains(&self, p: Option<f64>, gamma: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
        self.cells.iter().any(|&(cp, cg)| {
            close(cg, gamma)
                && match (cp, p) {
                    (Some(x), Some(y)) => close(x, y),
                    (None, None) => true,
                    _ => false,
                }
        })
    }
}

/// Groups classes across cells by θ-profile and operator label and reports
/// the occupied-cell bounding ranges of each group.
pub fn summarize_regions(result: &SweepResult) -> Vec<RegionSummary> {
    let mut regions: Vec<RegionSummary> = Vec::new();
    for cell in &result.cells {
        for class in &cell.classes {
            let id = class.class_id();
            let region = match regions
                .iter_mut()
                .find(|r| r.class_id == id && r.operator_label == class.operator_label)
            {
                Some(r) => r,
                None => {
                    regions.push(RegionSummary {
                        class_id: id,
                        theta_profile: class.theta_profile.clone(),
                        operator_label: class.operator_label.clone(),
                        p_range: None,
                        gamma_range: (cell.gamma, cell.gamma),
                        cells: Vec::new(),
                    });
                    regions.last_mut().expect("just pushed")
                }
            };
            if region.cells.last() == Some(&(cell.p, cell.gamma)) {
                continue;
            }
            region.cells.push((cell.p, cell.gamma));
            region.gamma_range = (
                region.gamma_range.0.min(cell.gamma),
                region.gamma_range.1.max(cell.gamma),
            );
            if let Some(p) = cell.p {
                region.p_range = Some(match region.p_range {
                    Some((lo, hi)) => (lo.min(p), hi.max(p)),
                    None => (p, p),
                });
            }
        }
    }
    regions
}
