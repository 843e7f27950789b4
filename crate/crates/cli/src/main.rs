//! Command-line front end for rigidity verification runs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use roundcap_core::moebius::{
    cap_normalizer, orthogonal_extension_reflection, sphere_reflection, AmbientReflection,
    MoebiusMap,
};
use roundcap_core::pipeline::{check_hypotheses, emit_report, report_json, run_rigidity, Verdict};
use roundcap_core::scenario::{load_scenario, write_profile_csv, OutputFormat, Scenario};
use roundcap_core::solver::{
    monotone_iterate, standard_supersolution, BvpSpec, IterationDirection, MonotoneOptions,
};
use roundcap_core::sphere::{stereographic, stereographic_inverse, BallPoint, SpherePoint};
use roundcap_core::{Error, HyperSphere};

#[derive(Parser)]
#[command(
    name = "roundcap",
    version,
    about = "Conformal-geometry toolkit verifying scalar-curvature rigidity of spherical caps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a scenario file.
    Verify(VerifyArgs),
    /// Evaluate only the hypothesis gates of a scenario.
    Check(CheckArgs),
    /// Solve the ball boundary-value problem directly.
    SolveBvp(SolveBvpArgs),
    /// Möbius-algebra utilities.
    #[command(subcommand)]
    Mobius(MobiusCommand),
    /// Run a scenario across a parameter sweep.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CommonOverrides {
    /// Number of grid cells.
    #[arg(long)]
    grid_size: Option<usize>,
    /// Rigidity gap and Hopf tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Proceed past failing hypothesis gates.
    #[arg(long)]
    force: bool,
    /// Relax the mean-curvature gate at rho = pi/2.
    #[arg(long)]
    relax_hemisphere: bool,
    /// Also run the increasing iteration and report the agreement.
    #[arg(long)]
    bidirectional: bool,
    /// Report format: json, csv or both.
    #[arg(long)]
    format: Option<String>,
    /// Output directory for the report and profiles.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    scenario: PathBuf,
    #[command(flatten)]
    overrides: CommonOverrides,
}

#[derive(Args)]
struct CheckArgs {
    scenario: PathBuf,
    #[arg(long)]
    grid_size: Option<usize>,
}

#[derive(Args)]
struct SolveBvpArgs {
    /// Dimension n >= 3.
    #[arg(long)]
    n: usize,
    /// Cap parameter rho in (0, pi/2]; accepts expressions like pi/3.
    #[arg(long)]
    rho: String,
    /// Scale applied to the bubble boundary value.
    #[arg(long, default_value_t = 1.0)]
    boundary_scale: f64,
    #[arg(long, default_value_t = 4096)]
    grid_size: usize,
    /// Iteration direction: decreasing (from the supersolution) or
    /// increasing (from the subsolution).
    #[arg(long, default_value = "decreasing")]
    direction: String,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MobiusCommand {
    /// Reflection matrix in a hypersphere.
    Reflect {
        #[arg(long)]
        n: usize,
        /// Center coordinates, comma separated (n+1 values, unit norm).
        #[arg(long)]
        center: String,
        /// Geodesic radius in (0, pi); accepts expressions like pi/3.
        #[arg(long)]
        radius: String,
    },
    /// Matrix mapping one cap onto another (rotation plus axis boost).
    CapMap {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        source_center: String,
        #[arg(long)]
        source_radius: String,
        #[arg(long)]
        target_center: String,
        #[arg(long)]
        target_radius: String,
    },
    /// Apply a stored matrix to a point of S^n (default) or of the ball.
    Apply {
        #[arg(long)]
        n: usize,
        /// JSON file holding {"n": ..., "matrix": [[...], ...]}.
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        point: String,
        /// Treat the point as a ball point and use the extension.
        #[arg(long)]
        ball: bool,
    },
    /// Stereographic projection from the north pole, or its inverse.
    Stereo {
        #[arg(long)]
        point: String,
        #[arg(long)]
        inverse: bool,
    },
    /// Cross-validate the ball extension against the ambient reflection.
    ExtensionCheck {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        center: String,
        #[arg(long)]
        radius: String,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
}

#[derive(Args)]
struct SweepArgs {
    scenario: PathBuf,
    /// Parameter to sweep: rho or grid-size.
    #[arg(long)]
    param: String,
    /// Comma-separated values; rho accepts expressions like pi/3.
    #[arg(long)]
    values: String,
    #[command(flatten)]
    overrides: CommonOverrides,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify_error(&e))
        }
    }
}

fn classify_error(e: &anyhow::Error) -> u8 {
    if let Some(core) = e.downcast_ref::<Error>() {
        return match core {
            Error::HypothesisViolation { .. } => 2,
            Error::SolverFailure(_) => 4,
            _ => 3,
        };
    }
    3
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Check(args) => cmd_check(args),
        Command::SolveBvp(args) => cmd_solve_bvp(args),
        Command::Mobius(args) => cmd_mobius(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn apply_overrides(scenario: &mut Scenario, o: &CommonOverrides) -> anyhow::Result<()> {
    if let Some(g) = o.grid_size {
        scenario.solver.grid_size = g;
    }
    if let Some(t) = o.tol {
        scenario.solver.gap_tolerance = t;
        scenario.solver.hopf_tolerance = t;
    }
    if o.force {
        scenario.solver.force = true;
    }
    if o.relax_hemisphere {
        scenario.solver.relax_hemisphere_mean_curvature = true;
    }
    if o.bidirectional {
        scenario.solver.bidirectional = true;
    }
    if let Some(f) = &o.format {
        scenario.output.format = match f.as_str() {
            "json" => OutputFormat::Json,
            "csv" => OutputFormat::Csv,
            "both" => OutputFormat::Both,
            other => return Err(anyhow!("unknown format `{other}` (json | csv | both)")),
        };
    }
    if let Some(dir) = &o.out {
        scenario.output.directory = Some(dir.clone());
    }
    Ok(())
}

fn verdict_code(verdict: Verdict) -> ExitCode {
    match verdict {
        Verdict::Rigid => ExitCode::from(0),
        Verdict::NonRigid => ExitCode::from(1),
        Verdict::HypothesisFail => ExitCode::from(2),
        Verdict::SolverFail => ExitCode::from(4),
    }
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let mut scenario = load_scenario(&args.scenario)
        .with_context(|| format!("loading {}", args.scenario.display()))?;
    apply_overrides(&mut scenario, &args.overrides)?;

    let artifacts = run_rigidity(&scenario)?;
    let report = &artifacts.report;
    println!(
        "verdict: {:?}  gap: {}  hopf: {}",
        report.verdict,
        report
            .gap
            .map(|g| format!("{g:.3e}"))
            .unwrap_or_else(|| "-".into()),
        report
            .hopf_gap
            .map(|g| format!("{g:.3e}"))
            .unwrap_or_else(|| "-".into()),
    );
    if let Some(f) = &report.finding {
        println!("finding: {f}");
    }

    if let Some(dir) = &scenario.output.directory {
        let written = emit_report(&artifacts, &scenario.output.format, dir)?;
        for path in written {
            println!("wrote {}", path.display());
        }
    } else {
        println!("{}", report_json(report)?);
    }
    Ok(verdict_code(report.verdict))
}

fn cmd_check(args: CheckArgs) -> anyhow::Result<ExitCode> {
    let mut scenario = load_scenario(&args.scenario)
        .with_context(|| format!("loading {}", args.scenario.display()))?;
    if let Some(g) = args.grid_size {
        scenario.solver.grid_size = g;
    }
    let report = check_hypotheses(&scenario)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.passed { ExitCode::from(0) } else { ExitCode::from(2) })
}

fn cmd_solve_bvp(args: SolveBvpArgs) -> anyhow::Result<ExitCode> {
    let rho = parse_angle(&args.rho)?;
    let spec = BvpSpec::for_cap(args.n, rho, args.boundary_scale, args.grid_size)?;
    let sub = spec.constant_subsolution();
    let sup = standard_supersolution(&spec)?;
    let direction = match args.direction.as_str() {
        "decreasing" => IterationDirection::FromSupersolution,
        "increasing" => IterationDirection::FromSubsolution,
        other => return Err(anyhow!("unknown direction `{other}`")),
    };
    let opts = MonotoneOptions { direction, ..MonotoneOptions::default() };
    let (solution, diagnostics) = monotone_iterate(&spec, &sub, &sup, &opts)?;
    let bubble = spec.bubble_field();
    let gap = solution.sup_distance(&bubble);
    println!(
        "n = {}, rho = {rho:.6}, r = {:.6}, boundary scale {}",
        args.n, spec.radius, args.boundary_scale
    );
    println!(
        "iterations: {}  stop: {:?}  sup|f - w| = {gap:.6e}",
        diagnostics.iterations, diagnostics.stopped_on
    );
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        let diff: Vec<f64> = solution
            .values()
            .iter()
            .zip(bubble.values())
            .map(|(a, b)| a - b)
            .collect();
        let path = dir.join("bvp_profile.csv");
        write_profile_csv(
            &path,
            "r,v,w,v_minus_w",
            &[spec.grid.nodes(), solution.values(), bubble.values(), &diff],
        )?;
        println!("wrote {}", path.display());
        let diag_path = dir.join("bvp_diagnostics.json");
        std::fs::write(&diag_path, serde_json::to_string_pretty(&diagnostics)?)?;
        println!("wrote {}", diag_path.display());
    }
    Ok(ExitCode::from(0))
}

fn parse_angle(text: &str) -> anyhow::Result<f64> {
    meval::eval_str(text).map_err(|e| anyhow!("cannot evaluate `{text}`: {e}"))
}

fn parse_point(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow!("bad coordinate `{s}`: {e}")))
        .collect()
}

fn sphere_from_args(n: usize, center: &str, radius: &str) -> anyhow::Result<HyperSphere> {
    let c = parse_point(center)?;
    if c.len() != n + 1 {
        return Err(anyhow!("center needs {} coordinates", n + 1));
    }
    Ok(HyperSphere::new(
        SpherePoint::from_slice(&c)?,
        parse_angle(radius)?,
    )?)
}

fn matrix_json(map: &MoebiusMap) -> serde_json::Value {
    let m = map.matrix();
    let rows: Vec<Vec<f64>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect();
    serde_json::json!({ "n": map.n(), "matrix": rows })
}

fn cmd_mobius(cmd: MobiusCommand) -> anyhow::Result<ExitCode> {
    match cmd {
        MobiusCommand::Reflect { n, center, radius } => {
            let sphere = sphere_from_args(n, &center, &radius)?;
            let map = sphere_reflection(&sphere);
            println!("{}", serde_json::to_string_pretty(&matrix_json(&map))?);
        }
        MobiusCommand::CapMap {
            n,
            source_center,
            source_radius,
            target_center,
            target_radius,
        } => {
            let source = sphere_from_args(n, &source_center, &source_radius)?;
            let target = sphere_from_args(n, &target_center, &target_radius)?;
            let map = cap_normalizer(&source, &target)?;
            println!("{}", serde_json::to_string_pretty(&matrix_json(&map))?);
        }
        MobiusCommand::Apply { n, matrix, point, ball } => {
            let text = std::fs::read_to_string(&matrix)
                .with_context(|| format!("reading {}", matrix.display()))?;
            let value: serde_json::Value = serde_json::from_str(&text)?;
            let rows = value
                .get("matrix")
                .and_then(|m| m.as_array())
                .ok_or_else(|| anyhow!("matrix file needs a `matrix` array"))?;
            let d = n + 2;
            if rows.len() != d {
                return Err(anyhow!("matrix must be {d}x{d}"));
            }
            let mut m = nalgebra::DMatrix::zeros(d, d);
            for (i, row) in rows.iter().enumerate() {
                let row = row.as_array().ok_or_else(|| anyhow!("bad matrix row"))?;
                if row.len() != d {
                    return Err(anyhow!("matrix must be {d}x{d}"));
                }
                for (j, x) in row.iter().enumerate() {
                    m[(i, j)] = x.as_f64().ok_or_else(|| anyhow!("bad matrix entry"))?;
                }
            }
            let map = MoebiusMap::from_matrix(m, n)?;
            let coords = parse_point(&point)?;
            if ball {
                let y = BallPoint::from_slice(&coords)?;
                let image = map.apply_ball(&y)?;
                println!(
                    "{}",
                    serde_json::json!({ "point": image.coords().as_slice() })
                );
            } else {
                let x = SpherePoint::from_slice(&coords)?;
                let (image, factor) = map.apply_sphere(&x)?;
                println!(
                    "{}",
                    serde_json::json!({
                        "point": image.coords().as_slice(),
                        "conformal_factor": factor
                    })
                );
            }
        }
        MobiusCommand::Stereo { point, inverse } => {
            let coords = parse_point(&point)?;
            if inverse {
                let z = nalgebra::DVector::from_vec(coords);
                let x = stereographic_inverse(&z);
                println!("{}", serde_json::json!({ "point": x.coords().as_slice() }));
            } else {
                let x = SpherePoint::from_slice(&coords)?;
                let z = stereographic(&x)?;
                println!("{}", serde_json::json!({ "point": z.as_slice() }));
            }
        }
        MobiusCommand::ExtensionCheck { n, center, radius, samples } => {
            let sphere = sphere_from_args(n, &center, &radius)?;
            let lorentz = sphere_reflection(&sphere);
            let ambient = orthogonal_extension_reflection(&sphere);
            let kind = match &ambient {
                AmbientReflection::Hyperplane { .. } => "hyperplane",
                AmbientReflection::Sphere { .. } => "sphere",
            };
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
            let mut worst = 0.0_f64;
            for _ in 0..samples {
                let dir = roundcap_core::moebius::random_sphere_point(n, &mut rng);
                let r: f64 = rng.gen_range(0.0..0.999);
                let y = BallPoint::new(dir.coords() * r)?;
                let a = lorentz.apply_ball(&y)?;
                let b = ambient.apply(y.coords());
                worst = worst.max((a.coords() - &b).norm());
            }
            println!(
                "{}",
                serde_json::json!({
                    "extension_kind": kind,
                    "samples": samples,
                    "max_disagreement": worst
                })
            );
        }
    }
    Ok(ExitCode::from(0))
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<ExitCode> {
    let text = std::fs::read_to_string(&args.scenario)
        .with_context(|| format!("reading {}", args.scenario.display()))?;
    let base_dir = args
        .scenario
        .parent()
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let values: Vec<&str> = args.values.split(',').map(str::trim).collect();
    if values.is_empty() {
        return Err(anyhow!("--values must name at least one value"));
    }

    let mut rows: Vec<(f64, String, f64, f64, usize)> = Vec::new();
    let mut worst = 0u8;
    for raw in &values {
        let mut doc: toml::Value = toml::from_str(&text)?;
        let numeric = match args.param.as_str() {
            "rho" => {
                let v = parse_angle(raw)?;
                doc["geometry"]["rho"] = toml::Value::Float(v);
                v
            }
            "grid-size" | "grid_size" => {
                let v: i64 = raw.parse()?;
                doc.as_table_mut()
                    .unwrap()
                    .entry("solver")
                    .or_insert(toml::Value::Table(Default::default()))["grid_size"] =
                    toml::Value::Integer(v);
                v as f64
            }
            other => return Err(anyhow!("unknown sweep parameter `{other}` (rho | grid-size)")),
        };
        let mut scenario =
            roundcap_core::scenario::load_scenario_str(&toml::to_string(&doc)?, &base_dir)?;
        apply_overrides(&mut scenario, &args.overrides)?;
        scenario.output.directory = None;

        let artifacts = run_rigidity(&scenario)?;
        let report = &artifacts.report;
        let gap = report.gap.unwrap_or(f64::NAN);
        let hopf = report.hopf_gap.unwrap_or(f64::NAN);
        let iters = report.solver.as_ref().map(|d| d.iterations).unwrap_or(0);
        println!(
            "{} = {raw}: verdict {:?} gap {gap:.3e} hopf {hopf:.3e} iterations {iters}",
            args.param, report.verdict
        );
        rows.push((numeric, format!("{:?}", report.verdict), gap, hopf, iters));
        let code = match report.verdict {
            Verdict::Rigid => 0,
            Verdict::NonRigid => 1,
            Verdict::HypothesisFail => 2,
            Verdict::SolverFail => 4,
        };
        worst = worst.max(code);

        if let Some(dir) = &args.overrides.out {
            let sub = dir.join(format!(
                "{}_{}",
                args.param.replace('-', "_"),
                raw.replace('/', "_")
            ));
            emit_report(&artifacts, &scenario.output.format, &sub)?;
        }
    }

    if let Some(dir) = &args.overrides.out {
        std::fs::create_dir_all(dir)?;
        use std::io::Write;
        let mut f = std::fs::File::create(dir.join("sweep.csv"))?;
        writeln!(f, "value,verdict,gap,hopf_gap,iterations")?;
        for (v, verdict, gap, hopf, iters) in &rows {
            writeln!(f, "{v},{verdict},{gap},{hopf},{iters}")?;
        }
        println!("wrote {}", dir.join("sweep.csv").display());
    }
    Ok(ExitCode::from(worst))
}
