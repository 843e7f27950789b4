//! End-to-end pipeline runs on inline scenario configurations.

use std::path::Path;

use roundcap_core::pipeline::{check_hypotheses, report_json, run_rigidity, Verdict};
use roundcap_core::scenario::load_scenario_str;

fn scenario(text: &str) -> roundcap_core::Scenario {
    load_scenario_str(text, Path::new(".")).expect("scenario loads")
}

#[test]
fn standard_hemisphere_cap_is_rigid() {
    let s = scenario(
        r#"
[geometry]
dimension = 3
rho = "pi/2"

[factor]
kind = "round"
"#,
    );
    let run = run_rigidity(&s).unwrap();
    assert_eq!(run.report.verdict, Verdict::Rigid);
    let gap = run.report.gap.unwrap();
    assert!(gap <= 1e-6, "gap {gap}");
    let hopf = run.report.hopf_gap.unwrap();
    assert!(hopf.abs() <= 1e-5, "hopf gap {hopf}");
    assert!(run.report.flux.as_ref().unwrap().satisfied);
    assert!(run.report.floor.as_ref().unwrap().passed);
    assert_eq!(run.report.holes_glued, 0);
}

#[test]
fn third_cap_is_rigid_for_n4() {
    let s = scenario(
        r#"
[geometry]
dimension = 4
rho = "pi/3"

[factor]
kind = "round"

[solver]
grid_size = 2048
"#,
    );
    let run = run_rigidity(&s).unwrap();
    assert_eq!(run.report.verdict, Verdict::Rigid);
    assert!(run.report.gap.unwrap() <= 1e-6);
}

#[test]
fn bubble_scenario_is_rigid_after_normalization() {
    let s = scenario(
        r#"
[geometry]
dimension = 3
rho = "pi/3"

[factor]
kind = "bubble"
boost = 0.5

[solver]
grid_size = 2048
"#,
    );
    assert!(s.transformed);
    let run = run_rigidity(&s).unwrap();
    assert_eq!(run.report.verdict, Verdict::Rigid, "report: {:#?}", run.report.finding);
    assert!(run.report.gap.unwrap() <= 1e-5);
}

#[test]
fn random_pullback_preserves_verdict_and_gap() {
    let base = scenario(
        r#"
[geometry]
dimension = 3
rho = "pi/3"

[factor]
kind = "round"

[solver]
grid_size = 2048
"#,
    );
    let pulled = base.random_pullback(42).unwrap();
    let run_a = run_rigidity(&base).unwrap();
    let run_b = run_rigidity(&pulled).unwrap();
    assert_eq!(run_a.report.verdict, run_b.report.verdict);
    let ga = run_a.report.gap.unwrap();
    let gb = run_b.report.gap.unwrap();
    assert!(
        (ga - gb).abs() <= 2.0 * base.solver.gap_tolerance,
        "gaps {ga} vs {gb}"
    );
}

#[test]
fn inflated_factor_fails_scal_gate() {
    let s = scenario(
        r#"
[geometry]
dimension = 3
rho = "pi/3"

[factor]
kind = "scaled"
scale = 1.1
"#,
    );
    let h = check_hypotheses(&s).unwrap();
    assert!(!h.scal_bound.passed);
    assert!(h.scal_bound.detail.contains("clause (i)"));
    // boundary also breaks at 1.1, but the verdict must name the gate
    let run = run_rigidity(&s).unwrap();
    assert_eq!(run.report.verdict, Verdict::HypothesisFail);
    assert!(run.report.finding.unwrap().contains("(i)"));
}

#[test]
fn scaled_boundary_fails_roundness_then_shows_gap_under_force() {
    let gate = scenario(
        r#"
[geometry]
dimension = 3
rho = "pi/3"

[factor]
kind = "scaled"
scale = 1.05
"#,
    );
    let h = check_hypotheses(&gate).unwrap();
    assert!(!h.boundary_isometry.passed);
    assert!(h.boundary_isometry.detail.contains("clause (ii)"));
    let run = run_rigidity(&gate).unwrap();
    assert_eq!(run.report.verdict, Verdict::HypothesisFail);

    let forced = scenario(
        r#"
[geometry]
dimension = 3
rho = "pi/3"

[factor]
kind = "scaled"
scale = 1.05

[solver]
force = true
grid_size = 2048
"#,
    );
    let run = run_rigidity(&forced).unwrap();
    assert_eq!(run.report.verdict, Verdict::NonRigid);
    assert_eq!(
        run.report.supersolution_source.as_deref(),
        Some("dilated bubble fallback")
    );
    let gap = run.report.gap.unwrap();
    assert!(gap >= 1e-3, "gap {gap} should be macroscopic");
}

#[test]
fn boundary_slope_fails_mean_curvature_gate() {
    // u = 1 + b sin(theta - rho) has u = 1 and du/deta = b at the boundary,
    // so H = cot(rho) + 2b/(n-2); b = -0.05 (n-2)/2 lands at cot(rho) - 0.05
    let s = scenario(
        r#"
[geometry]
dimension = 3
rho = "pi/3"

[factor]
kind = "expression"
expr = "1 - 0.025 * sin(theta - pi/3)"
"#,
    );
    let h = check_hypotheses(&s).unwrap();
    assert!(!h.mean_curvature.passed);
    let measured = h.mean_curvature.value;
    let expected = (std::f64::consts::PI / 3.0).tan().recip() - 0.05;
    assert!(
        (measured - expected).abs() < 1e-6,
        "H = {measured}, expected {expected}"
    );
    assert!(h.mean_curvature.detail.contains("clause (ii)"));
}

#[test]
fn hemisphere_relaxation_flag_downgrades_mean_curvature() {
    let text_base = r#"
[geometry]
dimension = 3
rho = "pi/2"

[factor]
kind = "expression"
expr = "1 - 0.01 * sin(theta - pi/2)"
"#;
    let strict = scenario(text_base);
    let h = check_hypotheses(&strict).unwrap();
    assert!(!h.mean_curvature.passed);

    let relaxed = scenario(&format!(
        "{text_base}\n[solver]\nrelax_hemisphere_mean_curvature = true\n"
    ));
    let h = check_hypotheses(&relaxed).unwrap();
    assert!(h.mean_curvature.passed);
    assert!(h.mean_curvature.relaxed);
}

#[test]
fn annular_hole_scenario_runs_the_glue_loop() {
    // an axial hole at the pole with a factor tapering linearly from the
    // round-compatible inner value (sin(rho)/sin(eps))^{(n-2)/2} down to 1
    // at the outer boundary: both boundaries pass the roundness gate, the
    // interior curvature does not, and the forced run exercises
    // normalization, gluing and the interface checks end to end
    let s = scenario(
        r#"
[geometry]
dimension = 3
rho = "pi/2"

[[geometry.holes]]
center = [0.0, 0.0, 0.0, -1.0]
radius = 0.75

[factor]
kind = "expression"
expr = "1 + ((1/sin(0.75))^0.5 - 1) * (pi/2 - theta) / (pi/2 - 0.75)"

[solver]
force = true
grid_size = 1024
"#,
    );
    let h = check_hypotheses(&s).unwrap();
    assert!(h.boundary_isometry.detail.contains("inner hole"));
    assert!(h.boundary_isometry.passed, "{}", h.boundary_isometry.detail);
    let run = run_rigidity(&s).unwrap();
    assert_eq!(run.report.holes_glued, 1);
    assert_eq!(run.report.interface_jumps.len(), 1);
    assert_eq!(run.report.residual_tables.len(), 1);
    assert!(run.report.residual_min.is_some());
}

#[test]
fn verdict_monotone_under_hypothesis_strengthening() {
    // gaps shrink monotonically as the data strengthen toward round; the
    // verdict never flips from rigid back to non-rigid along the way
    let mut last_gap = f64::INFINITY;
    let mut seen_rigid = false;
    for scale in [1.05_f64, 1.02, 1.0] {
        let s = scenario(&format!(
            r#"
[geometry]
dimension = 3
rho = "pi/3"

[factor]
kind = "scaled"
scale = {scale}

[solver]
force = true
grid_size = 1024
"#
        ));
        let run = run_rigidity(&s).unwrap();
        let gap = run.report.gap.unwrap();
        assert!(gap <= last_gap + 1e-12, "gap grew: {gap} after {last_gap}");
        last_gap = gap;
        if seen_rigid {
            assert_eq!(run.report.verdict, Verdict::Rigid);
        }
        seen_rigid = run.report.verdict == Verdict::Rigid;
    }
    assert!(seen_rigid, "the round endpoint must be rigid");
}

#[test]
fn reports_are_deterministic() {
    let text = r#"
[geometry]
dimension = 3
rho = "pi/3"

[factor]
kind = "bubble"
boost = 0.3

[solver]
grid_size = 1024
"#;
    let a = report_json(&run_rigidity(&scenario(text)).unwrap().report).unwrap();
    let b = report_json(&run_rigidity(&scenario(text)).unwrap().report).unwrap();
    assert_eq!(a, b, "identical scenarios must produce byte-identical reports");
}

#[test]
fn report_names_fields_stably() {
    let s = scenario(
        r#"
[geometry]
dimension = 3
rho = "pi/2"

[factor]
kind = "round"

[solver]
grid_size = 1024
"#,
    );
    let json = report_json(&run_rigidity(&s).unwrap().report).unwrap();
    for key in [
        "\"verdict\"",
        "\"RIGID\"",
        "\"gap\"",
        "\"hopf_gap\"",
        "\"hypotheses\"",
        "\"scal_bound\"",
        "\"mean_curvature\"",
    ] {
        assert!(json.contains(key), "report JSON lacks {key}");
    }
}
