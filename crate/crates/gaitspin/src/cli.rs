//! Command-line front end orchestrating the pipeline.
//!
//! Subcommands mirror the pipeline stages: `fields` evaluates or loads the
//! connection fields and potentials, `plan` solves for a contact sequence,
//! `simulate` integrates a planned gait, and `verify` runs the randomized
//! solver checks; `config` prints a starter configuration. Every artifact
//! embeds the schema id and the short hash of the configuration that
//! produced it, and identical (config, seed) pairs produce byte-identical
//! artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cache::{self, CacheOutcome};
use crate::config::{PipelineConfig, AMPLITUDE_LIMIT, SCHEMA_ID};
use crate::dynamics::ForceModel;
use crate::error::{Error, Result};
use crate::fields::{build_weight_tensor, write_fields_csv, Direction};
use crate::gait::{
    assemble_gait, compose_and_simulate, simulate, write_trajectory_csv, GaitMetrics, GaitPlan,
};
use crate::model::{sample_shape_cycle, ContactPattern};
use crate::planner::{plan_gait_sequence, PlanMethod, PlanSolution};
use crate::verify::{self, VerifyReport};

/// Plans optimal contact sequences and body trajectories for planar
/// multi-legged robots.
#[derive(Debug, Parser)]
#[command(name = "gaitspin", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Pipeline configuration JSON; omit for the built-in hexapod default.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Override the planning direction (x or y).
    #[arg(long, global = true)]
    pub direction: Option<Direction>,

    /// Override the planning method (greedy, domain-wall, or brute).
    #[arg(long, global = true)]
    pub method: Option<PlanMethod>,

    /// Override the allowed switch counts, comma separated (e.g. 0,2,4).
    #[arg(long, global = true, value_delimiter = ',', value_name = "LIST")]
    pub k_set: Option<Vec<usize>>,

    /// Override the switch penalty.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda: Option<f64>,

    /// Seed for the randomized verification suites.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Override the output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Neither read nor write the fields cache.
    #[arg(long, global = true)]
    pub no_cache: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the connection fields and potentials, keeping them cached.
    Fields,
    /// Solve for the optimal contact sequence and write the gait artifact.
    Plan,
    /// Integrate a planned gait and export its trajectory and metrics.
    Simulate {
        /// Gait artifact to integrate; defaults to the plan artifact for
        /// the configured direction inside the output directory.
        #[arg(long, value_name = "PATH")]
        gait: Option<PathBuf>,
        /// Also compose the gait with its anti-symmetric partner.
        #[arg(long)]
        composed: bool,
    },
    /// Run the randomized verification suites and write the report.
    Verify {
        /// Trials per randomized suite.
        #[arg(long, default_value_t = verify::DEFAULT_TRIALS)]
        trials: usize,
    },
    /// Print a built-in configuration as JSON.
    Config {
        /// Which configuration to print (hexapod or centipede).
        #[arg(long, default_value = "hexapod")]
        robot: String,
    },
}

/// Parses the process arguments and runs the selected command.
pub fn run() -> Result<()> {
    dispatch(Cli::parse())
}

/// Applies overrides, validates the configuration, and executes a command.
pub fn dispatch(cli: Cli) -> Result<()> {
    if let Command::Config { robot } = &cli.command {
        return cmd_config(robot);
    }
    let config = effective_config(&cli)?;
    match cli.command {
        Command::Fields => cmd_fields(&config, !cli.no_cache).map(drop),
        Command::Plan => cmd_plan(&config, !cli.no_cache).map(drop),
        Command::Simulate { gait, composed } => {
            cmd_simulate(&config, gait.as_deref(), composed).map(drop)
        }
        Command::Verify { trials } => cmd_verify(&config, cli.seed, trials).map(drop),
        Command::Config { .. } => unreachable!("handled before config loading"),
    }
}

/// Loads the configuration and layers the command-line overrides on top.
pub fn effective_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::argument(format!("cannot read config {}: {e}", path.display()))
            })?;
            PipelineConfig::from_json(&text)?
        }
        None => PipelineConfig::hexapod_default(),
    };
    if let Some(direction) = cli.direction {
        config.planner.direction = direction;
    }
    if let Some(method) = cli.method {
        config.planner.method = method;
    }
    if let Some(k_set) = &cli.k_set {
        config.planner.k_set = k_set.clone();
    }
    if let Some(lambda) = cli.lambda {
        config.planner.lambda = lambda;
    }
    if let Some(out) = &cli.out {
        config.paths.out_dir = out.clone();
    }
    config.validate()
}

/// Planned-gait artifact: solver output plus the assembled gait.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanArtifact {
    pub schema: String,
    /// Short hash of the configuration that produced the plan.
    pub config: String,
    pub direction: Direction,
    pub method: PlanMethod,
    pub lambda: f64,
    pub k_set: Vec<usize>,
    /// Wall placements examined, when the method enumerates them.
    pub examined: Option<u64>,
    pub solution: PlanSolution,
    pub plan: GaitPlan,
}

/// Simulation metrics artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsArtifact {
    pub schema: String,
    pub config: String,
    pub direction: Direction,
    /// Displacement of the planned gait alone, body lengths per cycle.
    pub single: GaitMetrics,
    /// Displacement of the gait composed with its anti-symmetric partner.
    pub composed: Option<GaitMetrics>,
    /// `|composed / (2 single) - 1|` in the planned direction.
    pub doubling_gap: Option<f64>,
}

/// What the fields stage did, for callers and tests.
#[derive(Debug)]
pub struct FieldsSummary {
    pub n_patterns: usize,
    pub outcome: CacheOutcome,
    /// Decomposition rows whose divergence-free remainder exceeds the
    /// negligibility threshold.
    pub warnings: usize,
    pub csv_path: PathBuf,
}

/// Evaluates or loads the fields and exports them for plotting.
pub fn cmd_fields(config: &PipelineConfig, use_cache: bool) -> Result<FieldsSummary> {
    let started = Instant::now();
    let (artifact, outcome) = cache::load_or_compute(config, use_cache)?;
    match &outcome {
        CacheOutcome::Hit => {
            println!("fields: cache hit at {}", cache::cache_file_path(config).display());
        }
        CacheOutcome::Computed => {
            println!("fields: computed and cached in {:.1?}", started.elapsed());
        }
        CacheOutcome::Recomputed(reason) => {
            println!("warning: cache rejected ({reason}); recomputed");
        }
        CacheOutcome::Bypassed => {
            println!("fields: computed in {:.1?}, cache bypassed", started.elapsed());
        }
    }
    println!(
        "fields: {} contact patterns on a {}x{} grid",
        artifact.n_patterns(),
        config.grid.resolution,
        config.grid.resolution
    );
    let reports = artifact.stack.reports();
    let mut warnings = 0usize;
    let mut worst_by_direction = [0.0_f64; 2];
    for report in &reports {
        let slot = match report.direction {
            Direction::X => 0,
            Direction::Y => 1,
        };
        worst_by_direction[slot] = worst_by_direction[slot].max(report.ratio());
        if !report.is_negligible() {
            warnings += 1;
        }
    }
    println!(
        "fields: divergence-free/curl-free ratio up to {:.3} (x rows), {:.3} (y rows)",
        worst_by_direction[0], worst_by_direction[1]
    );
    if warnings > 0 {
        println!(
            "warning: {warnings} of {} rows keep a divergence-free remainder above 20%; \
             the planner sees only the curl-free part, so the simulator is the \
             authority on those displacements",
            reports.len()
        );
    }
    ensure_out_dir(config)?;
    let csv_path = config.paths.out_dir.join("fields.csv");
    let mut buffer = csv_preamble(config).into_bytes();
    write_fields_csv(&mut buffer, &artifact.set, &artifact.stack)
        .map_err(|e| Error::io(csv_path.display().to_string(), e))?;
    std::fs::write(&csv_path, &buffer).map_err(|e| Error::io(csv_path.display().to_string(), e))?;
    println!("fields: wrote {}", csv_path.display());
    Ok(FieldsSummary { n_patterns: artifact.n_patterns(), outcome, warnings, csv_path })
}

/// Plans the contact sequence for the configured direction and writes the
/// gait artifact.
pub fn cmd_plan(config: &PipelineConfig, use_cache: bool) -> Result<PlanArtifact> {
    let (fields, outcome) = cache::load_or_compute(config, use_cache)?;
    if let CacheOutcome::Recomputed(reason) = &outcome {
        println!("warning: cache rejected ({reason}); recomputed");
    }
    let cycle = sample_shape_cycle(config.sampling.m, config.sampling.amplitude, AMPLITUDE_LIMIT)?;
    let tensor = build_weight_tensor(&fields.stack, &cycle, config.planner.direction)?;
    let started = Instant::now();
    let outcome = plan_gait_sequence(
        tensor,
        config.planner.lambda,
        &config.planner.k_set,
        config.planner.method,
    )?;
    let elapsed = started.elapsed();
    let patterns: Vec<ContactPattern> =
        fields.set.fields.iter().map(|f| f.pattern.clone()).collect();
    let plan = assemble_gait(&cycle, &outcome.solution.assignment, &patterns)?;
    println!(
        "plan({}): method {}, K = {}, displacement {:+.4}, score {:+.4}",
        outcome.direction,
        outcome.method,
        outcome.solution.switch_count,
        outcome.solution.displacement,
        outcome.solution.score
    );
    if let Some(examined) = outcome.examined {
        println!("plan: examined {examined} wall placements in {elapsed:.1?}");
    }
    let artifact = PlanArtifact {
        schema: SCHEMA_ID.to_string(),
        config: config.short_hash(),
        direction: outcome.direction,
        method: outcome.method,
        lambda: config.planner.lambda,
        k_set: config.planner.k_set.clone(),
        examined: outcome.examined,
        solution: outcome.solution,
        plan,
    };
    ensure_out_dir(config)?;
    let path = plan_path(config);
    write_json(&path, &artifact)?;
    println!("plan: wrote {}", path.display());
    Ok(artifact)
}

/// Integrates a planned gait and writes the trajectory and metrics
/// artifacts.
pub fn cmd_simulate(
    config: &PipelineConfig,
    gait: Option<&Path>,
    composed: bool,
) -> Result<MetricsArtifact> {
    let default_path = plan_path(config);
    let path = gait.unwrap_or(&default_path);
    if !path.exists() {
        return Err(Error::argument(format!(
            "no gait artifact at {}; run the plan command first or pass --gait",
            path.display()
        )));
    }
    let plan_artifact: PlanArtifact = read_json(path)?;
    if plan_artifact.schema != SCHEMA_ID {
        return Err(Error::argument(format!(
            "gait artifact schema {:?} does not match {SCHEMA_ID:?}",
            plan_artifact.schema
        )));
    }
    if plan_artifact.config != config.short_hash() {
        println!(
            "warning: gait artifact was planned under config {}, the current config is {}",
            plan_artifact.config,
            config.short_hash()
        );
    }
    let fm = ForceModel::from_robot(&config.robot);
    let compose = composed || config.sim.composed;
    let (trajectory, single) = simulate(
        &config.robot,
        &config.basis,
        &plan_artifact.plan,
        &fm,
        config.sim.substeps,
        config.sim.cycles,
    )?;
    println!(
        "simulate({}): dx {:+.5} dy {:+.5} dtheta {:+.5} over {} cycles",
        plan_artifact.direction,
        single.delta_x,
        single.delta_y,
        single.delta_theta,
        config.sim.cycles
    );
    ensure_out_dir(config)?;
    let traj_path = config
        .paths
        .out_dir
        .join(format!("trajectory-{}.csv", plan_artifact.direction));
    write_csv(&traj_path, config, &trajectory)?;
    println!("simulate: wrote {}", traj_path.display());

    let mut metrics = MetricsArtifact {
        schema: SCHEMA_ID.to_string(),
        config: config.short_hash(),
        direction: plan_artifact.direction,
        single,
        composed: None,
        doubling_gap: None,
    };
    if compose {
        let (composed_trajectory, composed_metrics) = compose_and_simulate(
            &config.robot,
            &config.basis,
            &plan_artifact.plan,
            &fm,
            config.sim.substeps,
            config.sim.cycles,
        )?;
        let single_principal = principal(&metrics.single, plan_artifact.direction);
        let composed_principal = principal(&composed_metrics, plan_artifact.direction);
        let doubled = 2.0 * single_principal;
        let gap = if doubled == 0.0 && composed_principal == 0.0 {
            0.0
        } else {
            (composed_principal / doubled - 1.0).abs()
        };
        println!(
            "simulate: composed dx {:+.5} dy {:+.5} dtheta {:+.5}, doubling gap {:.4}",
            composed_metrics.delta_x,
            composed_metrics.delta_y,
            composed_metrics.delta_theta,
            gap
        );
        let composed_path = config
            .paths
            .out_dir
            .join(format!("trajectory-composed-{}.csv", plan_artifact.direction));
        write_csv(&composed_path, config, &composed_trajectory)?;
        println!("simulate: wrote {}", composed_path.display());
        metrics.composed = Some(composed_metrics);
        metrics.doubling_gap = Some(gap);
    }
    let metrics_path = config
        .paths
        .out_dir
        .join(format!("metrics-{}.json", plan_artifact.direction));
    write_json(&metrics_path, &metrics)?;
    println!("simulate: wrote {}", metrics_path.display());
    Ok(metrics)
}

/// Runs the verification suites, writes the report, and fails the process
/// when any suite fails.
pub fn cmd_verify(config: &PipelineConfig, seed: u64, trials: usize) -> Result<VerifyReport> {
    let started = Instant::now();
    let report = verify::run_all(config, seed, trials)?;
    for suite in &report.suites {
        println!(
            "verify: {:<18} {}  worst {:.3e} vs tolerance {:.1e} over {} trials",
            suite.name,
            if suite.passed { "pass" } else { "FAIL" },
            suite.worst,
            suite.tolerance,
            suite.trials
        );
    }
    println!("verify: {} suites in {:.1?}", report.suites.len(), started.elapsed());
    ensure_out_dir(config)?;
    let path = config.paths.out_dir.join("verify-report.json");
    write_json(&path, &report)?;
    println!("verify: wrote {}", path.display());
    report.ensure_passed()?;
    Ok(report)
}

fn cmd_config(robot: &str) -> Result<()> {
    let config = match robot {
        "hexapod" => PipelineConfig::hexapod_default(),
        "centipede" => PipelineConfig::centipede_default(),
        other => {
            return Err(Error::argument(format!(
                "unknown robot {other:?}, expected hexapod or centipede"
            )))
        }
    };
    let text =
        serde_json::to_string_pretty(&config).map_err(|e| Error::json("stdout".to_string(), e))?;
    println!("{text}");
    Ok(())
}

/// The component of the metric the plan optimizes.
fn principal(metrics: &GaitMetrics, direction: Direction) -> f64 {
    match direction {
        Direction::X => metrics.delta_x,
        Direction::Y => metrics.delta_y,
    }
}

/// Location of the plan artifact for the configured direction.
pub fn plan_path(config: &PipelineConfig) -> PathBuf {
    config
        .paths
        .out_dir
        .join(format!("plan-{}.json", config.planner.direction))
}

fn ensure_out_dir(config: &PipelineConfig) -> Result<()> {
    std::fs::create_dir_all(&config.paths.out_dir)
        .map_err(|e| Error::io(config.paths.out_dir.display().to_string(), e))
}

/// Provenance comment prepended to every CSV artifact.
fn csv_preamble(config: &PipelineConfig) -> String {
    format!("# schema {SCHEMA_ID} config {}\n", config.short_hash())
}

fn write_csv(path: &Path, config: &PipelineConfig, trajectory: &crate::gait::Trajectory) -> Result<()> {
    let mut buffer = csv_preamble(config).into_bytes();
    write_trajectory_csv(&mut buffer, trajectory)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    std::fs::write(path, &buffer).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::json(path.display().to_string(), e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
}
