use std::path::PathBuf;
use std::time::Instant;

use bellsim_core::detector::{TrialOptions, WindowScheme};
use bellsim_core::inequality::{AngleQuad, SettingPair};
use bellsim_core::montecarlo::{compare_with_reference_k, DiscrepancyReport, RunConfig, Z_THRESHOLD};
use bellsim_core::source::PhaseMode;
use serde::Serialize;

use crate::config::{parse_pairing, parse_quad, parse_scheme, McSpec, SweepSpec};
use crate::{emit, out_path, Failure, SCHEMA_VERSION};

const DEFAULT_TRIALS: u64 = 1_000_000;

#[derive(clap::Args, Default)]
pub struct Args {
    /// TOML file; its `[mc]` and `[quad]` tables fill unset flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<f64>,
    /// single or halves
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Sample the relative phases instead of suppressing the cross terms.
    #[arg(long)]
    pub phases: bool,
    /// independent or shared
    #[arg(long)]
    pub pairing: Option<String>,
    /// Suppress a party's second-half shot after a first-half shot.
    #[arg(long)]
    pub dead_time: bool,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Angles a,b,a',b' with units, e.g. "30deg,60deg,0deg,90deg".
    #[arg(long)]
    pub quad: Option<String>,
    /// Compare against the closed form at this k instead of the run's k.
    #[arg(long)]
    pub reference_k: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Merges flag values over file values into a run configuration.
pub fn build_config(
    mc: &McSpec,
    quad: AngleQuad,
    k: Option<f64>,
    flags: &Args,
    seed: Option<u64>,
) -> Result<RunConfig, Failure> {
    let k = k
        .or(mc.k)
        .ok_or_else(|| Failure::config("k is required (--k or [mc] k)"))?;
    let scheme = match flags.scheme.as_deref().or(mc.scheme.as_deref()) {
        Some(s) => parse_scheme(s).map_err(Failure::config)?,
        None => WindowScheme::default(),
    };
    let pairing = match flags.pairing.as_deref().or(mc.pairing.as_deref()) {
        Some(s) => parse_pairing(s).map_err(Failure::config)?,
        None => Default::default(),
    };
    let phases = flags.phases || mc.phases.unwrap_or(false);
    let mut cfg = RunConfig::new(
        k,
        scheme,
        flags.trials.or(mc.trials).unwrap_or(DEFAULT_TRIALS),
        seed.or(mc.seed).unwrap_or(0),
    );
    cfg.quad = quad;
    cfg.workers = flags.workers.or(mc.workers).unwrap_or(1);
    cfg.options = TrialOptions {
        phase_mode: if phases { PhaseMode::Sampled } else { PhaseMode::Suppressed },
        pairing,
        dead_time: flags.dead_time || mc.dead_time.unwrap_or(false),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Per-pair Alice first-half shot rate `p` and the conditional rate `q` of
/// a Bob first-half shot given an Alice one.
#[derive(Serialize)]
struct EmergentHalfWindow {
    pair: &'static str,
    p: f64,
    q: Option<f64>,
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    command: &'static str,
    seed: u64,
    runtime_seconds: f64,
    config: &'a RunConfig,
    z_threshold: f64,
    emergent_half_window: Vec<EmergentHalfWindow>,
    #[serde(flatten)]
    comparison: &'a DiscrepancyReport,
}

pub fn run(args: Args, seed: Option<u64>) -> Result<(), Failure> {
    let mut spec = match &args.config {
        Some(p) => SweepSpec::load(p)?,
        None => SweepSpec::default(),
    };
    if let Some(q) = &args.quad {
        spec.quad_override = Some(parse_quad(q).map_err(Failure::config)?);
    }
    let quad = spec.quad().map_err(Failure::config)?;
    let mc = spec.mc.clone().unwrap_or_default();
    let cfg = build_config(&mc, quad, args.k, &args, seed)?;
    let reference_k = args.reference_k.unwrap_or(cfg.k);

    let start = Instant::now();
    let comparison = compare_with_reference_k(&cfg, reference_k)?;
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        seed: cfg.seed,
        runtime_seconds: start.elapsed().as_secs_f64(),
        config: &cfg,
        z_threshold: Z_THRESHOLD,
        emergent_half_window: SettingPair::ALL
            .iter()
            .zip(&comparison.estimated.counts)
            .map(|(pair, c)| {
                let (p, q) = c.emergent_half_window();
                EmergentHalfWindow { pair: pair.label(), p, q }
            })
            .collect(),
        comparison: &comparison,
    };
    let mut json = serde_json::to_string_pretty(&report).map_err(Failure::config)?;
    json.push('\n');
    emit(out_path(&args.out), &json)?;
    if !comparison.closed_form_is_exact {
        eprintln!("warning: the closed form is approximate for these options");
    }
    if comparison.pass {
        Ok(())
    } else {
        Err(Failure::comparison(format!(
            "max |z| = {:.2} exceeds {Z_THRESHOLD}",
            comparison.max_abs_z
        )))
    }
}
