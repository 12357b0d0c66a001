//! Randomized property checks over generated trees.

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bottleneck::{perron_value, DEFAULT_TIE_TOL};
use crate::charlike::{
    edge_functions, locate_from, mu, rank_one_grounding_identity, spanning_subtree,
    split_identity_check, verify_result2, CharLike, BOUND_TOL,
};
use crate::laplacian::{
    grounded, grounded_det, grounded_inverse_analytic, incidence, incidence_grounded, laplacian,
    path_matrix, weight_det_product,
};
use crate::matrix::{lu_inverse, Matrix};
use crate::pseudoinverse::{pinv, pinv_grounded_at};
use crate::random::{random_tree_up_to, trial_rng};
use crate::scalar_tree::{
    induce, scalar_characteristic_with, triangular_equivalence_check, ScalarTree,
};
use crate::tree::{Tree, WeightClass};

pub const ALL_CLASSES: [WeightClass; 4] = [
    WeightClass::PositiveDefinite,
    WeightClass::LowerTriangular,
    WeightClass::UpperTriangular,
    WeightClass::GeneralNonsingular,
];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub classes: Vec<WeightClass>,
    pub trials: usize,
    pub n_max: usize,
    pub s_max: usize,
    pub seed: u64,
    pub tie_tol: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            classes: ALL_CLASSES.to_vec(),
            trials: 100,
            n_max: 10,
            s_max: 3,
            seed: 42,
            tie_tol: DEFAULT_TIE_TOL,
        }
    }
}

/// Stream index of trial `trial` for the class at position `class_index`.
pub fn trial_stream(class_index: usize, trial: usize) -> u64 {
    ((class_index as u64) << 32) | trial as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub class: WeightClass,
    pub seed: u64,
    pub stream: u64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub invariant: String,
    pub passed: usize,
    pub failed: usize,
    pub first_failure: Option<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub tallies: Vec<Tally>,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.tallies.iter().all(|t| t.failed == 0)
    }

    pub fn render(&self) -> String {
        let width = self
            .tallies
            .iter()
            .map(|t| t.invariant.len())
            .max()
            .unwrap_or(9)
            .max(9);
        let mut out = format!(
            "{:<width$}  {:>6}  {:>6}\n",
            "invariant", "passed", "failed"
        );
        for t in &self.tallies {
            out += &format!(
                "{:<width$}  {:>6}  {:>6}\n",
                t.invariant, t.passed, t.failed
            );
        }
        for t in self.tallies.iter().filter(|t| t.failed > 0) {
            if let Some(f) = &t.first_failure {
                out += &format!(
                    "FAIL {}: {} tree, seed {} stream {}: {}\n",
                    t.invariant,
                    f.class.tag(),
                    f.seed,
                    f.stream,
                    f.detail
                );
            }
        }
        out
    }
}

type Outcome = (&'static str, Result<(), String>);

fn ensure(cond: bool, detail: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(detail())
    }
}

fn below(name: &str, value: f64, tol: f64) -> Result<(), String> {
    ensure(value < tol, || {
        format!("{name} = {value:e} exceeds {tol:e}")
    })
}

fn flatten(r: crate::Result<Result<(), String>>) -> Result<(), String> {
    r.map_err(|e| e.to_string()).and_then(|x| x)
}

/// Checks every applicable invariant on one tree.
pub fn tree_checks<R: Rng + ?Sized>(tree: &Tree, tie_tol: f64, rng: &mut R) -> Vec<Outcome> {
    let n = tree.n();
    let class = tree.class();
    let v = rng.random_range(0..n);
    let edge = tree.edge(rng.random_range(0..tree.edges().len())).clone();
    let alpha = *[0.25, 0.5, 0.75].choose(rng).unwrap();
    let split_alpha = rng.random_range(0.1..0.9);
    let mut out: Vec<Outcome> = Vec::new();

    out.push((
        "grounded inverse matches LU",
        flatten((|| {
            let g = grounded(tree, v)?;
            let (lu, _) = lu_inverse(&g.data)?;
            let gap = grounded_inverse_analytic(tree, v)?.data.max_abs_diff(&lu);
            Ok(below("gap", gap, 1e-8))
        })()),
    ));
    out.push((
        "grounded det is weight det product",
        flatten((|| {
            let expected = weight_det_product(tree);
            let det = grounded_det(tree, v)?;
            Ok(below(
                "relative gap",
                (det - expected).abs() / expected.abs(),
                1e-8,
            ))
        })()),
    ));
    if class == WeightClass::PositiveDefinite {
        out.push((
            "incidence factors Laplacian",
            flatten((|| {
                let q = incidence(tree)?.data;
                let gap = q
                    .matmul(&q.transpose())?
                    .max_abs_diff(&laplacian(tree).data);
                let qv = incidence_grounded(tree, v)?.data;
                let pv = path_matrix(tree, v)?.data;
                let id_gap = pv.matmul(&qv)?.max_abs_diff(&Matrix::identity(qv.rows()));
                Ok(below("Q Qt - L", gap, 1e-8).and(below("Pv Qv - I", id_gap, 1e-8)))
            })()),
        ));
    }

    match pinv(tree) {
        Ok(r) => {
            out.push(("Penrose conditions", Ok(())));
            out.push((
                "projector identity",
                below("residual", r.projector_residual, 1e-8),
            ));
            out.push((
                "pseudoinverse block sums",
                below("block sum", r.pinv.max_block_sum(), 1e-9),
            ));
            out.push((
                "pseudoinverse grounding invariance",
                flatten((|| {
                    let other = pinv_grounded_at(tree, 0)?;
                    Ok(below(
                        "gap",
                        other.pinv.data.max_abs_diff(&r.pinv.data),
                        1e-8,
                    ))
                })()),
            ));
        }
        Err(e) => out.push(("Penrose conditions", Err(e.to_string()))),
    }

    out.push((
        "rank-one grounding identity",
        flatten(
            rank_one_grounding_identity(tree, edge.u, edge.v, alpha)
                .map(|r| below("residual", r, 1e-8)),
        ),
    ));
    out.push((
        "split identity",
        flatten(
            split_identity_check(tree, edge.u, edge.v, split_alpha)
                .map(|r| below("residual", r.residual, 1e-8)),
        ),
    ));

    if !class.supports_perron() {
        return out;
    }

    let located = locate_from(tree, 0, tie_tol);
    out.push((
        "walk terminates",
        located.as_ref().map(|_| ()).map_err(|e| e.to_string()),
    ));
    let Ok(result) = located else {
        return out;
    };
    out.push((
        "start vertex invariance",
        flatten((|| {
            for start in 1..n {
                let other = locate_from(tree, start, tie_tol)?;
                if !other.kind.same_location(&result.kind) {
                    return Ok(Err(format!(
                        "start 0 gives {:?}, start {start} gives {:?}",
                        result.kind.vertices(),
                        other.kind.vertices()
                    )));
                }
            }
            Ok(Ok(()))
        })()),
    ));
    out.push((
        "Perron branches point at the center",
        flatten(verify_result2(tree, &result, tie_tol).map(|r| {
            ensure(r.all_pass(), || {
                let bad: Vec<_> = r
                    .entries
                    .iter()
                    .filter(|e| !e.pass)
                    .map(|e| e.vertex)
                    .collect();
                format!("failing vertices {bad:?}")
            })
        })),
    ));
    let kappa = 1.0 / result.value;
    out.push((
        "kappa <= mu",
        flatten(
            mu(tree).map(|m| ensure(kappa <= m + BOUND_TOL, || format!("kappa {kappa} > mu {m}"))),
        ),
    ));
    if let CharLike::Edge { u, v: w, nu } = result.kind {
        out.push((
            "nu balances the edge",
            flatten((|| {
                let (f, g) = edge_functions(tree, u, w, nu)?;
                if (f - g).abs() > 1e-9 * f.max(g) {
                    return Ok(Err(format!("f(nu) = {f}, g(nu) = {g}")));
                }
                let mut prev: Option<(f64, f64)> = None;
                for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
                    let (f, g) = edge_functions(tree, u, w, t)?;
                    if let Some((pf, pg)) = prev {
                        if f > pf + 1e-12 || g < pg - 1e-12 {
                            return Ok(Err(format!("monotonicity broken at t = {t}")));
                        }
                    }
                    prev = Some((f, g));
                }
                Ok(Ok(()))
            })()),
        ));
        if class == WeightClass::PositiveDefinite && n > 2 {
            out.push((
                "split spectrum at nu equals kappa",
                flatten(split_identity_check(tree, u, w, nu).map(|r| {
                    let lam = r.min_eigenvalue.unwrap_or(f64::NAN);
                    below("|lambda_min - kappa|", (lam - kappa).abs(), 1e-6)
                })),
            ));
        }
    }
    out.push((
        "nested branch monotonicity",
        flatten((|| {
            let far = rng.random_range(0..n);
            for start in (0..n).filter(|&x| x != far) {
                let outer = perron_value(tree, start, &tree.branch_containing(start, far)?)?;
                let path = tree.vertex_path(start, far)?;
                for &mid in &path[1..path.len() - 1] {
                    let inner = perron_value(tree, mid, &tree.branch_containing(mid, far)?)?;
                    if inner > outer + 1e-9 {
                        return Ok(Err(format!(
                            "rho at {mid} toward {far} = {inner} exceeds rho at {start} = {outer}"
                        )));
                    }
                }
            }
            Ok(Ok(()))
        })()),
    ));

    if class.is_triangular() {
        out.push((
            "triangular permutation equivalence",
            flatten(
                triangular_equivalence_check(tree).map(|c| ensure(c.passed(), || format!("{c:?}"))),
            ),
        ));
        out.push((
            "center within induced span",
            flatten((|| {
                let mut anchors = Vec::new();
                for st in induce(tree)? {
                    anchors.extend(scalar_characteristic_with(&st, tie_tol)?.kind.vertices());
                }
                let span = spanning_subtree(tree, &anchors)?;
                let center = result.kind.vertices();
                Ok(ensure(center.iter().all(|c| span.contains(c)), || {
                    format!("center {center:?} outside span {span:?}")
                }))
            })()),
        ));
    }

    if tree.s() == 1 && class == WeightClass::PositiveDefinite {
        out.push((
            "scalar degeneration",
            flatten((|| {
                let st = ScalarTree::new(tree.clone())?;
                let scalar = scalar_characteristic_with(&st, tie_tol)?;
                if scalar.kind.vertices() != result.kind.vertices() {
                    return Ok(Err(format!(
                        "walk gives {:?}, scan gives {:?}",
                        result.kind.vertices(),
                        scalar.kind.vertices()
                    )));
                }
                let m = mu(tree)?;
                Ok(below("|kappa - mu|", (kappa - m).abs(), 1e-7))
            })()),
        ));
    }
    out
}

/// Runs `trials` random trees per requested class. Trials run in parallel;
/// each draws from its own stream so results do not depend on scheduling.
pub fn run_checks(config: &CheckConfig) -> CheckReport {
    let mut tallies: Vec<Tally> = Vec::new();
    for (class_index, &class) in ALL_CLASSES.iter().enumerate() {
        if !config.classes.contains(&class) {
            continue;
        }
        let outcomes: Vec<(u64, Vec<Outcome>)> = (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let stream = trial_stream(class_index, trial);
                let mut rng = trial_rng(config.seed, stream);
                let checks = match random_tree_up_to(class, config.n_max, config.s_max, &mut rng) {
                    Ok(tree) => tree_checks(&tree, config.tie_tol, &mut rng),
                    Err(e) => vec![("tree generation", Err(e.to_string()))],
                };
                (stream, checks)
            })
            .collect();
        for (stream, checks) in outcomes {
            for (name, outcome) in checks {
                let tally = match tallies.iter_mut().find(|t| t.invariant == name) {
                    Some(t) => t,
                    None => {
                        tallies.push(Tally {
                            invariant: name.to_string(),
                            passed: 0,
                            failed: 0,
                            first_failure: None,
                        });
                        tallies.last_mut().unwrap()
                    }
                };
                match outcome {
                    Ok(()) => tally.passed += 1,
                    Err(detail) => {
                        tally.failed += 1;
                        tally.first_failure.get_or_insert(Failure {
                            class,
                            seed: config.seed,
                            stream,
                            detail,
                        });
                    }
                }
            }
        }
    }
    CheckReport { tallies }
}
