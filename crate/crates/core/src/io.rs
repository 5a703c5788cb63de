//! Game definition files, result files and CSV plot data.
//!
//! Game files are JSON:
//!
//! ```json
//! {"game": "bayesian",
//!  "payoffs": {"A_vs_B1": {"A": [11, 1, 10, 6], "B": [9, 10, 1, 6]},
//!              "A_vs_B2": {"A": [11, 1, 10, 6], "B": [9, 6, 1, 0]}}}
//! ```
//!
//! Payoff vectors are in basis order `|00⟩, |01⟩, |10⟩, |11⟩` with player A's
//! outcome first. Two-player games only use `A_vs_B1`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::circuit::EntanglerAngle;
use crate::equilibrium::{EquilibriumClass, Evaluation};
use crate::error::{Error, Result};
use crate::game::{GameDefinition, PayoffSpec, TwoPlayerGame};
use crate::grid::GridSteps;
use crate::sweep::SweepResult;

fn parse_vector(v: &Value, field: &str) -> Result<PayoffSpec> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::config(field, "expected an array of 4 numbers"))?;
    if arr.len() != 4 {
        return Err(Error::config(
            field,
            format!("expected 4 entries, found {}", arr.len()),
        ));
    }
    let mut values = [0.0; 4];
    for (k, x) in arr.iter().enumerate() {
        values[k] = x
            .as_f64()
            .filter(|f| f.is_finite())
            .ok_or_else(|| Error::config(format!("{field}[{k}]"), "expected a finite number"))?;
    }
    PayoffSpec::new(values)
}

fn parse_subgame(payoffs: &Value, key: &str) -> Result<TwoPlayerGame> {
    let block = payoffs
        .get(key)
        .ok_or_else(|| Error::config(format!("payoffs.{key}"), "missing"))?;
    let vector = |who: &str| {
        let field = format!("payoffs.{key}.{who}");
        let v = block
            .get(who)
            .ok_or_else(|| Error::config(&field, "missing"))?;
        parse_vector(v, &field)
    };
    Ok(TwoPlayerGame {
        name: key.to_string(),
        payoff_a: vector("A")?,
        payoff_b: vector("B")?,
    })
}

/// Validates a parsed game definition document.
pub fn game_from_value(doc: &Value) -> Result<GameDefinition> {
    let kind = doc
        .get("game")
        .ok_or_else(|| Error::config("game", "missing"))?
        .as_str()
        .ok_or_else(|| Error::config("game", "expected a string"))?;
    let payoffs = doc
        .get("payoffs")
        .ok_or_else(|| Error::config("payoffs", "missing"))?;
    if !payoffs.is_object() {
        return Err(Error::config("payoffs", "expected an object"));
    }
    match kind {
        "two-player" => Ok(GameDefinition::TwoPlayer(parse_subgame(
            payoffs, "A_vs_B1",
        )?)),
        "bayesian" => Ok(GameDefinition::Bayesian {
            subgame_b1: parse_subgame(payoffs, "A_vs_B1")?,
            subgame_b2: parse_subgame(payoffs, "A_vs_B2")?,
        }),
        other => Err(Error::config(
            "game",
            format!("expected \"two-player\" or \"bayesian\", found {other:?}"),
        )),
    }
}

pub fn game_to_value(def: &GameDefinition) -> Value {
    let block = |g: &TwoPlayerGame| json!({"A": g.payoff_a.values(), "B": g.payoff_b.values()});
    match def {
        GameDefinition::TwoPlayer(g) => json!({
            "game": "two-player",
            "payoffs": {"A_vs_B1": block(g)},
        }),
        GameDefinition::Bayesian {
            subgame_b1,
            subgame_b2,
        } => json!({
            "game": "bayesian",
            "payoffs": {"A_vs_B1": block(subgame_b1), "A_vs_B2": block(subgame_b2)},
        }),
    }
}

pub fn parse_game(text: &str) -> Result<GameDefinition> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
    game_from_value(&doc)
}

pub fn load_game(path: impl AsRef<Path>) -> Result<GameDefinition> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_game(&text)
}

/// Serde adapter storing a [`GameDefinition`] in the game-file schema.
pub mod game_schema {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        def: &GameDefinition,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        game_to_value(def).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<GameDefinition, D::Error> {
        let v = Value::deserialize(d)?;
        game_from_value(&v).map_err(serde::de::Error::custom)
    }
}

/// Output of a single `(p, γ)` solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    #[serde(with = "game_schema")]
    pub game: GameDefinition,
    pub p: Option<f64>,
    pub gamma: EntanglerAngle,
    pub grid_steps: GridSteps,
    pub eps_tie: f64,
    pub evaluation: Evaluation,
    pub classes: Vec<EquilibriumClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResultFile {
    Solve(SolveResult),
    Sweep(SweepResult),
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_result(text: &str) -> Result<ResultFile> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_result(path: impl AsRef<Path>) -> Result<ResultFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_result(&text)
}

/// Formats with 9 significant digits, `%g` style: trailing zeros dropped,
/// exponent form outside `[1e-5, 1e9)`.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    // rounding can carry into the next decade
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    let exp = if rounded.abs() >= 10f64.powi(exp + 1) {
        exp + 1
    } else {
        exp
    };
    if !(-5..9).contains(&exp) {
        let s = format!("{x:.8e}");
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{e}");
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const BAYESIAN_CSV_HEADER: &str =
    "p,gamma,class_id,theta_A,theta_B1,theta_B2,payoff_A,payoff_B1,payoff_B2,n_profiles";
pub const TWO_PLAYER_CSV_HEADER: &str =
    "gamma,class_id,theta_A,theta_B,payoff_A,payoff_B,n_profiles";
pub const FIGURE_CSV_HEADER: &str = "gamma,payoff_A,payoff_B,class_id";

/// Marker for cells without any equilibrium.
pub const NO_CLASS: &str = "NONE";

fn join_sig9(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| fmt_sig9(v))
        .collect::<Vec<_>>()
        .join(",")
}

/// One row per class per cell; empty cells get a `NONE` row with empty
/// θ and payoff fields.
pub fn sweep_csv(result: &SweepResult) -> String {
    let bayesian = result.spec.game.is_bayesian();
    let n_players = if bayesian { 3 } else { 2 };
    let blanks = vec![""; n_players].join(",");
    let mut out = String::new();
    out.push_str(if bayesian {
        BAYESIAN_CSV_HEADER
    } else {
        TWO_PLAYER_CSV_HEADER
    });
    out.push('\n');
    for cell in &result.cells {
        let prefix = match cell.p {
            Some(p) if bayesian => format!("{},{}", fmt_sig9(p), fmt_sig9(cell.gamma)),
            _ => fmt_sig9(cell.gamma),
        };
        if cell.classes.is_empty() {
            out.push_str(&format!("{prefix},{NO_CLASS},{blanks},{blanks},0\n"));
        }
        for class in &cell.classes {
            out.push_str(&format!(
                "{prefix},{},{},{},{}\n",
                class.class_id(),
                join_sig9(&class.theta_profile),
                join_sig9(&class.payoffs),
                class.n_profiles()
            ));
        }
    }
    out
}

/// Payoff curve of a two-player γ sweep: `gamma,payoff_A,payoff_B,class_id`.
pub fn figure_csv(result: &SweepResult) -> String {
    let mut out = String::from(FIGURE_CSV_HEADER);
    out.push('\n');
    for cell in &result.cells {
        let g = fmt_sig9(cell.gamma);
        if cell.classes.is_empty() {
            out.push_str(&format!("{g},,,{NO_CLASS}\n"));
        }
        for class in &cell.classes {
            out.push_str(&format!(
                "{g},{},{}\n",
                join_sig9(&class.payoffs),
                class.class_id()
            ));
        }
    }
    out
}

/// Writes `content` to `path`, or to stdout when `path` is `None` or `-`.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) if p.as_os_str() != "-" => fs::write(p, content).map_err(|source| Error::Io {
            path: p.display().to_string(),
            source,
        }),
        _ => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{builtin_da, builtin_pd};

    const BUILTIN_JSON: &str = r#"{
        "game": "bayesian",
        "payoffs": {
            "A_vs_B1": {"A": [11, 1, 10, 6], "B": [9, 10, 1, 6]},
            "A_vs_B2": {"A": [11, 1, 10, 6], "B": [9, 6, 1, 0]}
        }
    }"#;

    #[test]
    fn builtin_equivalent_document() {
        let def = parse_game(BUILTIN_JSON).unwrap();
        let GameDefinition::Bayesian {
            subgame_b1,
            subgame_b2,
        } = &def
        else {
            panic!("expected a Bayesian game");
        };
        assert_eq!(subgame_b1.payoff_a, builtin_pd().payoff_a);
        assert_eq!(subgame_b1.payoff_b, builtin_pd().payoff_b);
        assert_eq!(subgame_b2.payoff_b, builtin_da().payoff_b);
        assert_eq!(
            game_to_value(&def),
            game_to_value(&GameDefinition::builtin_bayesian())
        );
    }

    #[test]
    fn schema_errors_name_the_field() {
        let short = BUILTIN_JSON.replace("[9, 6, 1, 0]", "[9, 6, 1]");
        let err = parse_game(&short).unwrap_err().to_string();
        assert!(err.contains("payoffs.A_vs_B2.B"), "{err}");

        let missing =
            r#"{"game": "bayesian", "payoffs": {"A_vs_B1": {"A": [1,2,3,4], "B": [1,2,3,4]}}}"#;
        let err = parse_game(missing).unwrap_err().to_string();
        assert!(err.contains("payoffs.A_vs_B2"), "{err}");

        let bad_kind = r#"{"game": "poker", "payoffs": {}}"#;
        assert!(parse_game(bad_kind)
            .unwrap_err()
            .to_string()
            .contains("`game`"));
        assert!(parse_game("not json").is_err());

        let two =
            r#"{"game": "two-player", "payoffs": {"A_vs_B1": {"A": [1,2,3,4], "B": [4,3,"x",1]}}}"#;
        assert!(parse_game(two)
            .unwrap_err()
            .to_string()
            .contains("payoffs.A_vs_B1.B[2]"));
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(fmt_sig9(6.0), "6");
        assert_eq!(fmt_sig9(0.05), "0.05");
        assert_eq!(fmt_sig9(std::f64::consts::FRAC_PI_2), "1.57079633");
        assert_eq!(fmt_sig9(-10.0 / 3.0), "-3.33333333");
        assert_eq!(fmt_sig9(9.9999999999), "10");
        assert_eq!(fmt_sig9(1.5e-7), "1.5e-7");
        assert_eq!(fmt_sig9(0.0), "0");
    }
}
