//! Sweep and run configuration read from TOML.

use std::f64::consts::PI;
use std::path::Path;

use bellsim_core::analytic::Analysis;
use bellsim_core::detector::{CoincidencePairing, WindowScheme};
use bellsim_core::inequality::AngleQuad;
use serde::Deserialize;

use crate::Failure;

/// An angle written with an explicit `deg` or `rad` suffix, e.g. `"30deg"`.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let (number, scale) = if let Some(n) = t.strip_suffix("deg") {
        (n, PI / 180.0)
    } else if let Some(n) = t.strip_suffix("rad") {
        (n, 1.0)
    } else {
        return Err(format!("angle {text:?} needs a unit suffix, deg or rad"));
    };
    let v: f64 = number
        .trim()
        .parse()
        .map_err(|_| format!("angle {text:?} is not a number"))?;
    if !v.is_finite() {
        return Err(format!("angle {text:?} is not finite"));
    }
    Ok(v * scale)
}

/// Four comma-separated angles in the order `a, b, a', b'`.
pub fn parse_quad(text: &str) -> Result<AngleQuad, String> {
    let angles: Vec<f64> = text.split(',').map(parse_angle).collect::<Result<_, _>>()?;
    match angles[..] {
        [a, b, ap, bp] => AngleQuad::new(a, b, ap, bp).map_err(|e| e.to_string()),
        _ => Err(format!("expected four angles a,b,a',b' but got {}", angles.len())),
    }
}

pub fn parse_scheme(text: &str) -> Result<WindowScheme, String> {
    match text {
        "single" => Ok(WindowScheme::SingleWindow),
        "halves" => Ok(WindowScheme::TwoHalfWindows),
        other => Err(format!("unknown scheme {other:?}, expected single or halves")),
    }
}

pub fn parse_pairing(text: &str) -> Result<CoincidencePairing, String> {
    match text {
        "independent" => Ok(CoincidencePairing::Independent),
        "shared" => Ok(CoincidencePairing::SharedShots),
        other => Err(format!("unknown pairing {other:?}, expected independent or shared")),
    }
}

pub fn scheme_name(s: WindowScheme) -> &'static str {
    match s {
        WindowScheme::SingleWindow => "single",
        WindowScheme::TwoHalfWindows => "halves",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    Log,
    Linear,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGrid {
    pub scale: GridScale,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Default for KGrid {
    fn default() -> Self {
        Self {
            scale: GridScale::Log,
            start: 0.01,
            stop: 100.0,
            points: 200,
        }
    }
}

impl KGrid {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err("k_grid bounds must be finite".into());
        }
        if self.start <= 0.0 {
            return Err(format!("k_grid.start = {} must be positive", self.start));
        }
        if self.start >= self.stop {
            return Err(format!("k_grid.start = {} must be below stop = {}", self.start, self.stop));
        }
        if self.points < 2 {
            return Err(format!("k_grid.points = {} must be at least 2", self.points));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|j| {
                let f = j as f64 / last;
                match self.scale {
                    GridScale::Log => self.start * (self.stop / self.start).powf(f),
                    GridScale::Linear => self.start + (self.stop - self.start) * f,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSpec {
    pub a: String,
    pub b: String,
    pub a_prime: String,
    pub b_prime: String,
}

impl QuadSpec {
    pub fn resolve(&self) -> Result<AngleQuad, String> {
        AngleQuad::new(
            parse_angle(&self.a)?,
            parse_angle(&self.b)?,
            parse_angle(&self.a_prime)?,
            parse_angle(&self.b_prime)?,
        )
        .map_err(|e| e.to_string())
    }
}

/// Monte Carlo settings; every field may be overridden on the command line.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub k: Option<f64>,
    pub scheme: Option<String>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub phases: Option<bool>,
    pub pairing: Option<String>,
    pub dead_time: Option<bool>,
}

fn default_modes() -> Vec<String> {
    ["standard", "multiwindow-exact", "multiwindow-paper"]
        .map(String::from)
        .to_vec()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_modes")]
    pub modes: Vec<String>,
    #[serde(default)]
    pub k_grid: KGrid,
    pub quad: Option<QuadSpec>,
    pub mc: Option<McSpec>,
    /// Set from the command line; takes precedence over `quad`.
    #[serde(skip)]
    pub quad_override: Option<AngleQuad>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            modes: default_modes(),
            k_grid: KGrid::default(),
            quad: None,
            mc: None,
            quad_override: None,
        }
    }
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
    }

    pub fn analyses(&self) -> Result<Vec<Analysis>, String> {
        self.modes
            .iter()
            .map(|m| {
                Analysis::from_name(m).ok_or_else(|| {
                    let known: Vec<&str> = Analysis::all().iter().map(|a| a.name()).collect();
                    format!("unknown mode {m:?}, expected one of {}", known.join(", "))
                })
            })
            .collect()
    }

    pub fn quad(&self) -> Result<AngleQuad, String> {
        if let Some(q) = self.quad_override {
            return Ok(q);
        }
        self.quad.as_ref().map_or(Ok(AngleQuad::default()), QuadSpec::resolve)
    }
}
