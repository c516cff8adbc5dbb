//! The bundled verification suite for the two-flags example task: twelve
//! trajectory returns under four reward configurations, each value checked
//! against its published target and cross-checked against exact policy
//! evaluation on the enumerated grid product.

use serde::Serialize;
use shaper_core::dfa::{analyze, fixture_dfa};
use shaper_core::env::{example_grid, ExampleGridVariant, LabeledEnv};
use shaper_core::oracle::{
    enumerate_product, policy_evaluation, trajectory_return, EnumeratedProduct, OraclePolicy,
    SymbolicTrajectory,
};
use shaper_core::reward::context_for;
use shaper_core::{RewardContext, RewardKind};

/// One pass/fail entry of an oracle report.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub details: String,
}

impl CheckResult {
    pub fn info(name: impl Into<String>, details: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            passed: true,
            value: None,
            details: details.into(),
        }
    }
}

/// The three symbolic runs of the example task on the bundled automaton:
/// the near-blue shortcut (no completion), the orange-then-far-blue
/// completion, and the yellow trap.
pub fn example_trajectories() -> [SymbolicTrajectory; 3] {
    [
        SymbolicTrajectory {
            start: 0,
            events: vec![(10, 0, 2)],
            length: 25,
        },
        SymbolicTrajectory {
            start: 0,
            events: vec![(16, 0, 1), (20, 1, 4)],
            length: 20,
        },
        SymbolicTrajectory {
            start: 0,
            events: vec![(5, 0, 3)],
            length: 5,
        },
    ]
}

/// Grid action plans realizing the three trajectories on the bundled map
/// (actions 0=up, 1=down, 2=left, 3=right, start at row 7, col 4).
pub fn example_plans() -> [Vec<usize>; 3] {
    [
        // left along the bottom, then up the west wall to the near blue
        vec![2, 2, 2, 2, 0, 0, 0, 0, 0, 0],
        // right wall, up, across the top, down past orange to the far blue
        vec![3, 3, 3, 3, 0, 0, 0, 0, 0, 0, 0, 2, 2, 2, 2, 1, 1, 1, 1, 1],
        // two left, three up, straight into yellow
        vec![2, 2, 0, 0, 0],
    ]
}

/// Extends a plan into a stage-indexed product policy; stages past the
/// plan repeat `idle`, which must not leave the plan's final cell.
fn staged_policy(p: &EnumeratedProduct, plan: &[usize], idle: usize) -> OraclePolicy {
    let n = p.num_states();
    let rows = (0..p.horizon)
        .map(|t| vec![plan.get(t).copied().unwrap_or(idle); n])
        .collect();
    OraclePolicy::Staged(rows)
}

struct SuiteCase {
    label: &'static str,
    ctx: RewardContext,
    /// Published target returns for the three trajectories, ±0.01.
    expected: [f64; 3],
}

fn suite_cases() -> Vec<SuiteCase> {
    let dfa = fixture_dfa();
    let adaptive_prog = context_for(&dfa, RewardKind::AdaptiveProgression, 0.1, Some(100.0))
        .advance_round(1)
        .expect("adaptive kind");
    let adaptive_hybrid = context_for(&dfa, RewardKind::AdaptiveHybrid, 0.1, Some(100.0))
        .advance_round(1)
        .expect("adaptive kind");
    vec![
        SuiteCase {
            label: "progression",
            ctx: context_for(&dfa, RewardKind::Progression, 0.1, Some(100.0)),
            expected: [0.387, 0.341, 0.0],
        },
        SuiteCase {
            label: "hybrid",
            ctx: context_for(&dfa, RewardKind::Hybrid, 0.1, Some(100.0)),
            expected: [-1.153, -1.332, -0.688],
        },
        SuiteCase {
            label: "adaptive-progression-k1",
            ctx: adaptive_prog,
            expected: [0.387, 13.85, 0.0],
        },
        SuiteCase {
            label: "adaptive-hybrid-k1",
            ctx: adaptive_hybrid,
            expected: [-0.52, 12.97, -0.35],
        },
    ]
}

const VALUE_TOL: f64 = 0.01;
const CROSS_TOL: f64 = 1e-9;

/// Runs the twelve-value suite. Every returned check carries the computed
/// value; `passed` covers both the target tolerance (±0.01) and agreement
/// with exact policy evaluation (±1e-9).
pub fn example_suite() -> Vec<CheckResult> {
    let dfa = fixture_dfa();
    let analysis = analyze(&dfa);
    let env = example_grid(ExampleGridVariant::Full, 0.0);
    let model = env.model().expect("the example grid is enumerable");
    let product = enumerate_product(&model, &dfa, &analysis);

    let trajectories = example_trajectories();
    let plans = example_plans();
    // idle actions keep the final cell: bump the west wall, and anything
    // once the product is terminal
    let idles = [2usize, 1, 0];

    let mut out = Vec::new();
    for case in suite_cases() {
        for (i, tr) in trajectories.iter().enumerate() {
            let name = format!("{}/pi{}", case.label, i + 1);
            let v = match trajectory_return(tr, &case.ctx, 0.9) {
                Ok(v) => v,
                Err(e) => {
                    out.push(CheckResult {
                        name,
                        passed: false,
                        value: None,
                        details: format!("trajectory rejected: {e}"),
                    });
                    continue;
                }
            };
            let policy = staged_policy(&product, &plans[i], idles[i]);
            let pv = policy_evaluation(&product, &policy, &case.ctx, 0.9);
            let target = case.expected[i];
            let on_target = (v - target).abs() <= VALUE_TOL;
            let cross_ok = (pv - v).abs() <= CROSS_TOL;
            out.push(CheckResult {
                name,
                passed: on_target && cross_ok,
                value: Some(v),
                details: format!(
                    "return {v:.6}, target {target} (tol {VALUE_TOL}), product policy value {pv:.6}"
                ),
            });
        }
    }
    out
}
