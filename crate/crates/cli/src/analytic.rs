use std::fmt::Write as _;
use std::path::PathBuf;

use bellsim_core::analytic::{bisect, ch_analysis, Analysis};
use bellsim_core::inequality::AngleQuad;
use bellsim_core::montecarlo::estimate_table;

use crate::config::{parse_quad, scheme_name, GridScale, SweepSpec};
use crate::{emit, fmt_f64, out_path, simulate, Failure};

pub const HEADER: &str = "k,mode,p_s,p_c,ch,ch_std_error";

#[derive(clap::Args)]
pub struct Args {
    /// TOML sweep specification.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated analysis names, overriding the file.
    #[arg(long)]
    modes: Option<String>,
    #[arg(long)]
    quad: Option<String>,
    #[arg(long)]
    k_start: Option<f64>,
    #[arg(long)]
    k_stop: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// log or linear
    #[arg(long)]
    scale: Option<String>,
    /// Monte Carlo trials per angle pair; adds an estimate row at every k.
    #[arg(long)]
    trials: Option<u64>,
}

fn crossing_in_grid(ks: &[f64], chs: &[f64], quad: &AngleQuad, analysis: Analysis) -> Option<f64> {
    let j = (1..ks.len()).find(|&j| chs[j - 1] > 0.0 && chs[j] <= 0.0)?;
    let f = |k: f64| ch_analysis(k, quad, analysis).map_or(f64::NAN, |b| b.ch);
    bisect(ks[j - 1], ks[j], f, 1e-10).ok()
}

/// CSV for a sweep: header, one row per (mode, k), then `#` footer records.
pub fn sweep_csv(spec: &SweepSpec, seed: Option<u64>) -> Result<String, Failure> {
    spec.k_grid.validate().map_err(Failure::config)?;
    let analyses = spec.analyses().map_err(Failure::config)?;
    let quad = spec.quad().map_err(Failure::config)?;
    let ks = spec.k_grid.values();

    let mut csv = String::new();
    writeln!(csv, "{HEADER}").unwrap();
    let mut footer = String::new();
    for analysis in &analyses {
        let mut chs = Vec::with_capacity(ks.len());
        for &k in &ks {
            let b = ch_analysis(k, &quad, *analysis)?;
            chs.push(b.ch);
            writeln!(csv, "{},{},{},{},{},", fmt_f64(k), analysis.name(), fmt_f64(b.p_s), fmt_f64(b.p_c), fmt_f64(b.ch)).unwrap();
        }
        if let Some(k) = crossing_in_grid(&ks, &chs, &quad, *analysis) {
            writeln!(footer, "# crossing,{},{}", analysis.name(), fmt_f64(k)).unwrap();
        }
    }

    if let Some(mc) = spec.mc.as_ref().filter(|mc| mc.trials.is_some()) {
        let flags = simulate::Args::default();
        for &k in &ks {
            let cfg = simulate::build_config(mc, quad, Some(k), &flags, seed)?;
            let t = estimate_table(&cfg)?;
            writeln!(
                csv,
                "{},mc-{},{},{},{},{}",
                fmt_f64(k),
                scheme_name(cfg.scheme),
                fmt_f64(t.ch.p_s),
                fmt_f64(t.ch.p_c),
                fmt_f64(t.ch.ch),
                fmt_f64(t.ch_std_error)
            )
            .unwrap();
        }
    }
    csv.push_str(&footer);
    Ok(csv)
}

pub fn run(args: Args, seed: Option<u64>) -> Result<(), Failure> {
    let mut spec = match &args.spec {
        Some(p) => SweepSpec::load(p)?,
        None => SweepSpec::default(),
    };
    if let Some(m) = &args.modes {
        spec.modes = m.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
    }
    if let Some(q) = &args.quad {
        spec.quad_override = Some(parse_quad(q).map_err(Failure::config)?);
    }
    if let Some(v) = args.k_start {
        spec.k_grid.start = v;
    }
    if let Some(v) = args.k_stop {
        spec.k_grid.stop = v;
    }
    if let Some(v) = args.points {
        spec.k_grid.points = v;
    }
    if let Some(s) = &args.scale {
        spec.k_grid.scale = match s.as_str() {
            "log" => GridScale::Log,
            "linear" => GridScale::Linear,
            other => return Err(Failure::config(format!("unknown scale {other:?}, expected log or linear"))),
        };
    }
    if let Some(n) = args.trials {
        spec.mc.get_or_insert_with(Default::default).trials = Some(n);
    }
    if spec.modes.is_empty() {
        eprintln!("warning: no modes selected, writing the header only");
    }
    let csv = sweep_csv(&spec, seed)?;
    emit(out_path(&args.out), &csv)
}
