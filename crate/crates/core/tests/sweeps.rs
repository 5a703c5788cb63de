use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI};

use qgame::circuit::EntanglerAngle;
use qgame::equilibrium::{classify, find_ne_bayesian, EquilibriumClass};
use qgame::exec::{with_threads, Execution};
use qgame::game::{builtin_bayesian, builtin_da, builtin_pd, GameDefinition};
use qgame::grid::{enumerate, GridSteps};
use qgame::io::{to_json, ResultFile};
use qgame::sweep::{run_sweep, summarize_regions, SweepResult, SweepSpec};

fn bayesian_sweep(exec: Execution) -> SweepResult {
    let spec = SweepSpec::bayesian(GameDefinition::builtin_bayesian(), 0.05, 0.05).unwrap();
    run_sweep(&spec, exec).unwrap()
}

fn line(def: GameDefinition) -> SweepResult {
    run_sweep(
        &SweepSpec::two_player(def, 0.05).unwrap(),
        Execution::Sequential,
    )
    .unwrap()
}

fn signature(classes: &[EquilibriumClass]) -> Vec<(String, Vec<String>)> {
    classes
        .iter()
        .map(|c| {
            (
                c.class_id(),
                c.payoffs.iter().map(|x| format!("{x:.9}")).collect(),
            )
        })
        .collect()
}

#[test]
fn serialized_sweep_is_independent_of_scheduling() {
    let seq = to_json(&ResultFile::Sweep(bayesian_sweep(Execution::Sequential))).unwrap();
    let par = to_json(&ResultFile::Sweep(bayesian_sweep(Execution::Parallel))).unwrap();
    let two = with_threads(Some(2), || {
        to_json(&ResultFile::Sweep(bayesian_sweep(Execution::Parallel))).unwrap()
    });
    assert_eq!(seq, par);
    assert_eq!(seq, two);
}

#[test]
fn boundary_columns_match_two_player_sweeps() {
    let sweep = bayesian_sweep(Execution::Parallel);
    let pd = line(GameDefinition::TwoPlayer(builtin_pd()));
    let da = line(GameDefinition::TwoPlayer(builtin_da()));
    for (p, two, player) in [(1.0, &pd, 1), (0.0, &da, 2)] {
        for cell in &two.cells {
            let bayes = sweep.cell(Some(p), cell.gamma).unwrap();
            let ours: BTreeSet<_> = bayes
                .classes
                .iter()
                .map(|c| {
                    (
                        format!("{:.9}", c.payoffs[0]),
                        format!("{:.9}", c.payoffs[player]),
                    )
                })
                .collect();
            let theirs: BTreeSet<_> = cell
                .classes
                .iter()
                .map(|c| {
                    (
                        format!("{:.9}", c.payoffs[0]),
                        format!("{:.9}", c.payoffs[1]),
                    )
                })
                .collect();
            assert_eq!(ours, theirs, "p = {p}, gamma = {}", cell.gamma);
        }
    }
}

#[test]
fn tie_tolerance_does_not_change_equilibria() {
    let set = enumerate(GridSteps::coarse()).unwrap();
    for (p, g) in [
        (0.1, 0.0),
        (0.9, 0.3),
        (0.5, 0.3),
        (0.5, 0.8),
        (0.1, 1.3),
        (0.5, 1.4),
        (0.05, FRAC_PI_2),
    ] {
        let game = builtin_bayesian(p).unwrap();
        let g = EntanglerAngle::new(g).unwrap();
        let loose = find_ne_bayesian(&game, g, &set, 1e-6, Execution::Sequential).unwrap();
        let tight = find_ne_bayesian(&game, g, &set, 1e-9, Execution::Sequential).unwrap();
        let ids = |r: &[qgame::equilibrium::EquilibriumRecord]| {
            r.iter().map(|x| x.profile.clone()).collect::<Vec<_>>()
        };
        assert_eq!(ids(&loose), ids(&tight), "p = {p}");
    }
}

#[test]
fn classes_are_closed_under_their_phase_relations() {
    let sweep = bayesian_sweep(Execution::Parallel);
    let set = enumerate(GridSteps::coarse()).unwrap();
    let free = |idx: usize| {
        let s = set.items()[idx].params;
        if s.theta == 0.0 {
            Some(s.phi)
        } else if s.theta == PI {
            Some(s.alpha)
        } else {
            None
        }
    };
    for cell in &sweep.cells {
        for class in &cell.classes {
            assert!(class.payoff_spread() < 1e-9);
            let members: BTreeSet<_> = class.members.iter().map(|m| m.profile.0.clone()).collect();
            // every grid profile with the class θ-profile whose phase offsets
            // lie in the reported sets must be a member
            let n = set.len();
            for idx in 0..n * n * n {
                let profile = vec![idx / (n * n), (idx / n) % n, idx % n];
                let thetas: Vec<f64> = profile
                    .iter()
                    .map(|&i| set.items()[i].params.theta)
                    .collect();
                if thetas != class.theta_profile {
                    continue;
                }
                let related = class.phase_relations.iter().all(|r| {
                    let (i, j) = r.players;
                    let (Some(a), Some(b)) = (free(profile[i]), free(profile[j])) else {
                        return true;
                    };
                    let diff = (b - a).rem_euclid(2.0 * PI);
                    r.difference.as_ref().is_none_or(|offsets| {
                        offsets.iter().any(|o| {
                            let d = (diff - o).rem_euclid(2.0 * PI);
                            d < 1e-9 || 2.0 * PI - d < 1e-9
                        })
                    })
                });
                if related {
                    assert!(
                        members.contains(&profile),
                        "missing sibling {profile:?} at {:?}",
                        (cell.p, cell.gamma)
                    );
                }
            }
            for r in &class.phase_relations {
                assert_eq!(r.sum, r.difference, "sum and difference offsets differ");
            }
        }
    }
}

#[test]
fn pd_branch_payoffs_increase_with_entanglement() {
    let pd = line(GameDefinition::TwoPlayer(builtin_pd()));
    let branch: Vec<_> = pd
        .cells
        .iter()
        .filter(|c| !c.classes.is_empty())
        .map(|c| c.classes[0].payoffs.clone())
        .collect();
    assert!(branch.len() >= 23);
    for w in branch.windows(2) {
        assert!(w[1][0] >= w[0][0] - 1e-12 && w[1][1] >= w[0][1] - 1e-12);
    }
}

#[test]
fn e1_payoffs_are_affine_in_p() {
    let sweep = bayesian_sweep(Execution::Parallel);
    for &g in sweep.spec.gamma_values.iter().filter(|&&g| g > 0.0) {
        let points: Vec<_> = sweep
            .cells
            .iter()
            .filter(|c| c.gamma == g)
            .flat_map(|c| {
                c.classes
                    .iter()
                    .filter(|k| k.class_id() == "pi_pi_0")
                    .map(move |k| (c.p.unwrap(), k.payoffs.clone()))
            })
            .collect();
        if points.len() < 2 {
            continue;
        }
        let (p0, first) = &points[0];
        let (p1, last) = &points[points.len() - 1];
        let slope = (last[0] - first[0]) / (p1 - p0);
        assert!(slope < 0.0, "A gains as p decreases");
        for (p, pay) in &points {
            assert!((pay[1] - first[1]).abs() < 1e-9 && (pay[2] - first[2]).abs() < 1e-9);
            assert!((first[0] + slope * (p - p0) - pay[0]).abs() < 1e-9);
        }
    }
}

#[test]
fn region_summaries_cover_exactly_the_occupied_cells() {
    let sweep = bayesian_sweep(Execution::Parallel);
    let regions = summarize_regions(&sweep);
    for cell in &sweep.cells {
        for class in &cell.classes {
            let owner = regions
                .iter()
                .find(|r| {
                    r.class_id == class.class_id() && r.operator_label == class.operator_label
                })
                .unwrap();
            assert!(owner.contains(cell.p, cell.gamma));
        }
    }
    let total: usize = regions.iter().map(|r| r.cells.len()).sum();
    let expected: usize = sweep.cells.iter().map(|c| c.classes.len()).sum();
    assert_eq!(total, expected);
    let e3 = regions.iter().find(|r| r.class_id == "pi_pi_pi").unwrap();
    assert_eq!(e3.p_range, Some((0.0, 1.0)));
    let e2 = regions.iter().find(|r| r.class_id == "0_pi_0").unwrap();
    assert_eq!(e2.gamma_range, (0.0, FRAC_PI_2));
}

#[test]
fn pd_equilibria_form_one_labelled_class() {
    let coarse = enumerate(GridSteps::coarse()).unwrap();
    let g = EntanglerAngle::new(0.5).unwrap();
    let records = qgame::equilibrium::find_ne_two_player(
        &builtin_pd(),
        g,
        &coarse,
        1e-9,
        Execution::Parallel,
    )
    .unwrap();
    let classes = classify(&records, &coarse);
    assert_eq!(signature(&classes).len(), 1);
    assert_eq!(classes[0].operator_label.as_deref(), Some("Y⊗X"));
}
