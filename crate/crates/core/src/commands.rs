//! Subcommand implementations. Each writes its report to `out` and returns
//! an error whose [`Error::exit_code`] the binary exits with.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::construction::{
    build_chain_data_point_seeded_in, build_chain_in, validate_construction, ConstructionParams,
    GadgetWeights, Instance, ValidationReport, Variant,
};
use crate::engine::{run_in, EmptyClusterPolicy, RunOptions, RunResult, DEFAULT_MAX_ITERATIONS};
use crate::error::{Error, Result};
use crate::geometry::{expand_weights, Point, DEFAULT_SPACING_RATIO};
use crate::io::{
    check_stage_rows, read_instance_file, read_trace_file, trace_rows, write_instance_file,
    write_trace_file,
};
use crate::scalar::{DoubleDouble, Precision};
use crate::verifier::{analyze, analyze_with, AnalyzeOptions, StageTimeline};

pub const DEFAULT_SWEEP_GUARD: usize = 16;

pub fn run_with_precision(
    instance: &Instance,
    options: &RunOptions,
    precision: Precision,
) -> Result<RunResult> {
    match precision {
        Precision::Double => run_in::<f64>(instance, options),
        Precision::Extended => run_in::<DoubleDouble>(instance, options),
    }
}

#[derive(Debug, Clone)]
pub struct GenerateArgs {
    pub gadgets: usize,
    pub r0: f64,
    pub variant: Variant,
    pub delta: f64,
    pub lambda: f64,
    pub epsilon: Option<f64>,
    pub precision: Precision,
    pub out: PathBuf,
}

impl GenerateArgs {
    pub fn new(gadgets: usize, out: impl Into<PathBuf>) -> Self {
        GenerateArgs {
            gadgets,
            r0: 1.0,
            variant: Variant::MorningMeans,
            delta: crate::construction::REFERENCE_DELTA,
            lambda: crate::construction::REFERENCE_LAMBDA,
            epsilon: None,
            precision: Precision::Double,
            out: out.into(),
        }
    }
}

pub fn build_instance(
    params: &ConstructionParams,
    variant: Variant,
    precision: Precision,
) -> Result<Instance> {
    match (variant, precision) {
        (Variant::MorningMeans, Precision::Double) => build_chain_in::<f64>(params),
        (Variant::MorningMeans, Precision::Extended) => build_chain_in::<DoubleDouble>(params),
        (Variant::DataPoints, Precision::Double) => build_chain_data_point_seeded_in::<f64>(params),
        (Variant::DataPoints, Precision::Extended) => {
            build_chain_data_point_seeded_in::<DoubleDouble>(params)
        }
    }
}

fn print_report(out: &mut dyn Write, report: &ValidationReport) -> Result<()> {
    let checks: Vec<_> = report
        .checks
        .iter()
        .filter(|c| c.kind != crate::construction::CheckKind::Reference)
        .collect();
    let passed = checks.iter().filter(|c| c.passed).count();
    writeln!(out, "validation: {passed}/{} checks passed", checks.len())?;
    if let Some(d) = &report.derived {
        writeln!(
            out,
            "derived: alpha={:.10} beta={:.10} gamma={:.10} growth={:.10} epsilon={:e}",
            d.alpha, d.beta, d.gamma, d.growth_factor, d.epsilon
        )?;
    }
    for c in report.reference_failures() {
        writeln!(
            out,
            "warning: reference value {} outside its printed interval (margin {:e})",
            c.name, c.margin
        )?;
    }
    for n in &report.notes {
        writeln!(out, "note: {n}")?;
    }
    Ok(())
}

pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<Instance> {
    let params = ConstructionParams::new(
        args.delta,
        args.lambda,
        GadgetWeights::reference(),
        args.r0,
        Point::new(0.0, 0.0),
        args.gadgets,
        args.epsilon,
    )?;
    let instance = build_instance(&params, args.variant, args.precision)?;
    let report = validate_construction(&instance);
    writeln!(
        out,
        "points: {}, centers: {}",
        instance.points.len(),
        instance.centers.len()
    )?;
    print_report(out, &report)?;
    if let Some(c) = report.failures().next() {
        return Err(Error::ValidationFailure {
            check: c.name.clone(),
            margin: c.margin,
        });
    }
    write_instance_file(&args.out, &instance)?;
    writeln!(out, "wrote {}", args.out.display())?;
    Ok(instance)
}

#[derive(Debug, Clone)]
pub struct RunArgs {
    pub instance: PathBuf,
    pub max_iters: usize,
    pub trace: Option<PathBuf>,
    pub no_trace: bool,
    pub precision: Precision,
    pub tie_tolerance: f64,
    pub empty_policy: EmptyClusterPolicy,
}

impl RunArgs {
    pub fn new(instance: impl Into<PathBuf>) -> Self {
        RunArgs {
            instance: instance.into(),
            max_iters: DEFAULT_MAX_ITERATIONS,
            trace: None,
            no_trace: false,
            precision: Precision::Double,
            tie_tolerance: 0.0,
            empty_policy: EmptyClusterPolicy::Fail,
        }
    }
}

/// Where `run` writes its trace when no path is given.
pub fn default_trace_path(instance: &Path) -> PathBuf {
    instance.with_extension("trace.csv")
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<RunResult> {
    let instance = read_instance_file(&args.instance)?;
    let options = RunOptions {
        max_iterations: args.max_iters,
        tie_tolerance: args.tie_tolerance,
        empty_policy: args.empty_policy,
        trace: !args.no_trace,
    };
    let result = run_with_precision(&instance, &options, args.precision)?;
    writeln!(
        out,
        "iterations: {}, converged: {}",
        result.iterations, result.converged
    )?;
    writeln!(
        out,
        "ties: {}, empty clusters: {}",
        result.ties.len(),
        result.empty_clusters.len()
    )?;
    if let Some(trace) = &result.trace {
        let path = args
            .trace
            .clone()
            .unwrap_or_else(|| default_trace_path(&args.instance));
        write_trace_file(&path, &trace_rows(trace, &instance)?)?;
        writeln!(
            out,
            "trace: {} rows written to {}",
            trace.rows.len(),
            path.display()
        )?;
    }
    Ok(result)
}

#[derive(Debug, Clone)]
pub struct VerifyArgs {
    pub instance: PathBuf,
    pub trace: PathBuf,
    pub precision: Precision,
    pub strict: bool,
}

impl VerifyArgs {
    pub fn new(instance: impl Into<PathBuf>, trace: impl Into<PathBuf>) -> Self {
        VerifyArgs {
            instance: instance.into(),
            trace: trace.into(),
            precision: Precision::Double,
            strict: false,
        }
    }
}

/// Checks a trace file against the stage graph and against a replay of the
/// instance. A trace that stops early is verified as a prefix.
pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<StageTimeline> {
    let instance = read_instance_file(&args.instance)?;
    let rows = read_trace_file(&args.trace)?;
    if rows.is_empty() {
        return Err(Error::Format("trace file has no rows".into()));
    }
    check_stage_rows(&rows, instance.gadgets.len())?;
    let options = RunOptions {
        max_iterations: (rows.len() - 1).max(1),
        ..RunOptions::default()
    };
    let result = run_with_precision(&instance, &options, args.precision)?;
    let mut trace = result.trace.expect("tracing enabled");
    let replayed = trace_rows(&trace, &instance)?;
    for (k, row) in rows.iter().enumerate() {
        let Some(want) = replayed.get(k) else {
            return Err(Error::VerificationFailure {
                iteration: k,
                gadget: 0,
                reason: format!(
                    "trace continues past convergence at row {}",
                    replayed.len() - 1
                ),
            });
        };
        let same = row.points_reassigned == want.points_reassigned
            && row.potential.to_bits() == want.potential.to_bits()
            && row.stages == want.stages
            && row.wakes == want.wakes;
        if !same {
            let gadget = row
                .stages
                .iter()
                .zip(&want.stages)
                .position(|(a, b)| a != b)
                .unwrap_or(0);
            return Err(Error::VerificationFailure {
                iteration: k,
                gadget,
                reason: "row differs from a replay of the instance".into(),
            });
        }
    }
    let complete = trace.converged && replayed.len() == rows.len();
    trace.rows.truncate(rows.len());
    trace.converged = complete;
    let timeline = analyze_with(
        &trace,
        &instance,
        &AnalyzeOptions {
            strict_geometry: args.strict,
        },
    )?;
    writeln!(
        out,
        "rows: {}, transitions checked: {}",
        timeline.rows, timeline.transitions_checked
    )?;
    writeln!(out, "leaf wake count: {}", timeline.leaf_wake_count)?;
    let wakes: Vec<String> = timeline.wake_counts.iter().map(|w| w.to_string()).collect();
    writeln!(out, "wake counts: {}", wakes.join(" "))?;
    if complete {
        writeln!(out, "complete: run converged, all gadgets asleep")?;
    } else {
        writeln!(out, "incomplete: verified prefix of {} rows", rows.len())?;
    }
    Ok(timeline)
}

#[derive(Debug, Clone)]
pub struct SweepArgs {
    pub min_t: usize,
    pub max_t: usize,
    pub out: Option<PathBuf>,
    pub guard: usize,
    pub variant: Variant,
}

impl SweepArgs {
    pub fn new(min_t: usize, max_t: usize) -> Self {
        SweepArgs {
            min_t,
            max_t,
            out: None,
            guard: DEFAULT_SWEEP_GUARD,
            variant: Variant::MorningMeans,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub t: usize,
    pub points: usize,
    pub centers: usize,
    pub iterations: usize,
    pub leaf_wakes: usize,
    /// Seconds; excluded from reproducibility comparisons.
    pub wall_time: f64,
}

impl SweepRow {
    /// Every column except the wall time.
    pub fn key(&self) -> (usize, usize, usize, usize, usize) {
        (
            self.t,
            self.points,
            self.centers,
            self.iterations,
            self.leaf_wakes,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// True when the guard cut the requested range short.
    pub partial: bool,
}

/// Builds, runs and verifies one chain.
pub fn sweep_row(t: usize, variant: Variant) -> Result<SweepRow> {
    let start = Instant::now();
    let params = ConstructionParams::reference(t)?;
    let instance = build_instance(&params, variant, Precision::Double)?;
    let result = run_in::<f64>(&instance, &RunOptions::default())?;
    if !result.converged {
        return Err(Error::VerificationFailure {
            iteration: result.iterations,
            gadget: 0,
            reason: "iteration budget exhausted".into(),
        });
    }
    let timeline = analyze(result.trace.as_ref().expect("tracing enabled"), &instance)?;
    Ok(SweepRow {
        t,
        points: instance.points.len(),
        centers: instance.centers.len(),
        iterations: result.iterations,
        leaf_wakes: timeline.leaf_wake_count,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<SweepResult> {
    if args.min_t < 1 || args.min_t > args.max_t {
        return Err(Error::InvalidParams(format!(
            "need 1 <= min-t <= max-t, got {}..{}",
            args.min_t, args.max_t
        )));
    }
    let partial = args.max_t > args.guard;
    let max_t = args.max_t.min(args.guard);
    if partial {
        writeln!(
            out,
            "warning: max-t {} exceeds the guard {}; stopping at t={max_t}",
            args.max_t, args.guard
        )?;
    }
    let rows = (args.min_t..=max_t)
        .into_par_iter()
        .map(|t| sweep_row(t, args.variant))
        .collect::<Result<Vec<_>>>()?;
    let mut csv_out = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut csv_out);
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    if let Some(path) = &args.out {
        std::fs::write(path, &csv_out)?;
    }
    out.write_all(&csv_out)?;
    for pair in rows.windows(2) {
        if pair[1].iterations <= pair[0].iterations {
            writeln!(
                out,
                "warning: iterations do not grow from t={} to t={}",
                pair[0].t, pair[1].t
            )?;
        }
    }
    Ok(SweepResult { rows, partial })
}

#[derive(Debug, Clone)]
pub struct ExpandArgs {
    pub instance: PathBuf,
    /// Defaults to `1e-12 r0`.
    pub spacing: Option<f64>,
    pub out: PathBuf,
}

pub fn cmd_expand(args: &ExpandArgs, out: &mut dyn Write) -> Result<Instance> {
    let instance = read_instance_file(&args.instance)?;
    let spacing = args
        .spacing
        .unwrap_or(DEFAULT_SPACING_RATIO * instance.params.r0);
    let expanded = expand_weights(&instance, spacing)?;
    write_instance_file(&args.out, &expanded)?;
    writeln!(
        out,
        "expanded {} weighted points into {} unit points (spacing {spacing:e})",
        instance.points.len(),
        expanded.points.len()
    )?;
    Ok(expanded)
}
