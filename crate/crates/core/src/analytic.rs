//! Closed-form probabilities of the chaotic-light model.
//!
//! With `x`, `y` unit exponentials and `p(I) = 1 - exp(-k I)`, every
//! probability reduces to Laplace transforms of exponentials:
//!
//! * `Q(t) = E[exp(-k I_A)] = 1 / ((1 + k c^2)(1 + k s^2))`
//! * `Q(t, f) = E[exp(-k I_A - k I_B)] = 1 / ((1 + k (c^2 + c'^2))(1 + k (s^2 + s'^2)))`
//!
//! A single window gives `P_X = 1 - Q_X` and `P_XY = 1 - Q_X - Q_Y + Q_XY`.
//! The two-half-window analyses square the no-shot probabilities, see
//! [`MultiwindowMode`].

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::inequality::{ch_value, AngleQuad, ChBreakdown, ProbabilityTable};

fn check_k(k: f64) -> Result<()> {
    ensure_finite("k", k)?;
    if k <= 0.0 {
        return Err(Error::InvalidInput(format!("k = {k} must be positive")));
    }
    Ok(())
}

fn q_single_raw(k: f64, angle: f64) -> f64 {
    let (s, c) = angle.sin_cos();
    1.0 / ((1.0 + k * c * c) * (1.0 + k * s * s))
}

fn q_joint_raw(k: f64, theta: f64, phi: f64) -> f64 {
    let (s1, c1) = theta.sin_cos();
    let (s2, c2) = phi.sin_cos();
    1.0 / ((1.0 + k * (c1 * c1 + c2 * c2)) * (1.0 + k * (s1 * s1 + s2 * s2)))
}

/// No-shot probability of one party in one window.
pub fn q_single(k: f64, angle: f64) -> Result<f64> {
    check_k(k)?;
    ensure_finite("angle", angle)?;
    Ok(q_single_raw(k, angle))
}

/// Probability that neither party fires in one shared window.
pub fn q_joint(k: f64, theta: f64, phi: f64) -> Result<f64> {
    check_k(k)?;
    ensure_finite("theta", theta)?;
    ensure_finite("phi", phi)?;
    Ok(q_joint_raw(k, theta, phi))
}

/// All no-shot probabilities for one quad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QSet {
    pub q_a: f64,
    pub q_b: f64,
    pub q_a_prime: f64,
    pub q_b_prime: f64,
    pub q_ab: f64,
    pub q_ab_prime: f64,
    pub q_a_prime_b: f64,
    pub q_a_prime_b_prime: f64,
}

impl QSet {
    pub fn new(k: f64, quad: &AngleQuad) -> Result<Self> {
        check_k(k)?;
        Ok(Self::raw(k, quad))
    }

    // k = 0 is admitted here for limits.
    fn raw(k: f64, quad: &AngleQuad) -> Self {
        Self {
            q_a: q_single_raw(k, quad.a),
            q_b: q_single_raw(k, quad.b),
            q_a_prime: q_single_raw(k, quad.a_prime),
            q_b_prime: q_single_raw(k, quad.b_prime),
            q_ab: q_joint_raw(k, quad.a, quad.b),
            q_ab_prime: q_joint_raw(k, quad.a, quad.b_prime),
            q_a_prime_b: q_joint_raw(k, quad.a_prime, quad.b),
            q_a_prime_b_prime: q_joint_raw(k, quad.a_prime, quad.b_prime),
        }
    }
}

/// Variants of the two-half-window analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiwindowMode {
    /// `P^m_X = 1 - Q_X^2` and
    /// `P^m_XY = 1 - (Q_X + Q_Y - Q_XY)^2 (1 - P_X P_Y)^2`: independent halves
    /// and independent composite coincidence events.
    Exact,
    /// As [`MultiwindowMode::Quartic`], then cancelling `P^m_AB` against
    /// `P^m_A'B'`, which leaves
    /// `CH = [Q_A + Q_B' - Q_AB']^4 + [Q_A' + Q_B - Q_A'B]^4 - Q_A^2 - Q_B^2`.
    Cancelled,
    /// `P^m_XY = 1 - (Q_X + Q_Y - Q_XY)^4`, i.e. `1 - P_X P_Y` replaced by
    /// `Q_X + Q_Y - Q_XY`.
    Quartic,
    /// Coincidence means Alice fired and Bob fired in the window:
    /// `P^m_XY = 1 - Q_X^2 - Q_Y^2 + Q_XY^2`. A local model, so `CH >= 0`.
    SharedShots,
}

impl MultiwindowMode {
    pub const ALL: [MultiwindowMode; 4] = [
        MultiwindowMode::Exact,
        MultiwindowMode::Cancelled,
        MultiwindowMode::Quartic,
        MultiwindowMode::SharedShots,
    ];
}

/// Which analysis of the model to evaluate. Serialized as [`Analysis::name`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "&'static str", try_from = "String")]
pub enum Analysis {
    Standard,
    Multiwindow(MultiwindowMode),
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::Standard => "standard",
            Analysis::Multiwindow(MultiwindowMode::Exact) => "multiwindow-exact",
            Analysis::Multiwindow(MultiwindowMode::Cancelled) => "multiwindow-paper",
            Analysis::Multiwindow(MultiwindowMode::Quartic) => "multiwindow-quartic",
            Analysis::Multiwindow(MultiwindowMode::SharedShots) => "multiwindow-shared",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::all().into_iter().find(|a| a.name() == name)
    }

    pub fn all() -> [Analysis; 5] {
        [
            Analysis::Standard,
            Analysis::Multiwindow(MultiwindowMode::Exact),
            Analysis::Multiwindow(MultiwindowMode::Cancelled),
            Analysis::Multiwindow(MultiwindowMode::Quartic),
            Analysis::Multiwindow(MultiwindowMode::SharedShots),
        ]
    }
}

impl From<Analysis> for &'static str {
    fn from(a: Analysis) -> Self {
        a.name()
    }
}

impl TryFrom<String> for Analysis {
    type Error = String;

    fn try_from(name: String) -> std::result::Result<Self, String> {
        Analysis::from_name(&name).ok_or_else(|| format!("unknown analysis {name:?}"))
    }
}

fn standard_table_raw(q: &QSet) -> ProbabilityTable {
    let joint = |qx: f64, qy: f64, qxy: f64| 1.0 - qx - qy + qxy;
    ProbabilityTable {
        p_a: 1.0 - q.q_a,
        p_b: 1.0 - q.q_b,
        p_ab: joint(q.q_a, q.q_b, q.q_ab),
        p_ab_prime: joint(q.q_a, q.q_b_prime, q.q_ab_prime),
        p_a_prime_b: joint(q.q_a_prime, q.q_b, q.q_a_prime_b),
        p_a_prime_b_prime: joint(q.q_a_prime, q.q_b_prime, q.q_a_prime_b_prime),
        p_a_prime: Some(1.0 - q.q_a_prime),
        p_b_prime: Some(1.0 - q.q_b_prime),
    }
}

fn multiwindow_table_raw(q: &QSet, mode: MultiwindowMode) -> ProbabilityTable {
    let joint = |qx: f64, qy: f64, qxy: f64| -> f64 {
        match mode {
            MultiwindowMode::Exact => {
                let no_same = qx + qy - qxy;
                let no_cross = qx + qy - qx * qy;
                1.0 - (no_same * no_same) * (no_cross * no_cross)
            }
            MultiwindowMode::Cancelled | MultiwindowMode::Quartic => {
                1.0 - (qx + qy - qxy).powi(4)
            }
            MultiwindowMode::SharedShots => 1.0 - qx * qx - qy * qy + qxy * qxy,
        }
    };
    let p_a_prime_b_prime = joint(q.q_a_prime, q.q_b_prime, q.q_a_prime_b_prime);
    let p_ab = match mode {
        MultiwindowMode::Cancelled => p_a_prime_b_prime,
        _ => joint(q.q_a, q.q_b, q.q_ab),
    };
    ProbabilityTable {
        p_a: 1.0 - q.q_a * q.q_a,
        p_b: 1.0 - q.q_b * q.q_b,
        p_ab,
        p_ab_prime: joint(q.q_a, q.q_b_prime, q.q_ab_prime),
        p_a_prime_b: joint(q.q_a_prime, q.q_b, q.q_a_prime_b),
        p_a_prime_b_prime,
        p_a_prime: Some(1.0 - q.q_a_prime * q.q_a_prime),
        p_b_prime: Some(1.0 - q.q_b_prime * q.q_b_prime),
    }
}

/// Single-window probabilities.
pub fn standard_table(k: f64, quad: &AngleQuad) -> Result<ProbabilityTable> {
    Ok(standard_table_raw(&QSet::new(k, quad)?))
}

/// Two-half-window probabilities. In [`MultiwindowMode::Cancelled`] the `p_ab`
/// entry holds `P^m_A'B'` so that the cancellation shows up in the table.
pub fn multiwindow_table(k: f64, quad: &AngleQuad, mode: MultiwindowMode) -> Result<ProbabilityTable> {
    Ok(multiwindow_table_raw(&QSet::new(k, quad)?, mode))
}

pub fn analysis_table(k: f64, quad: &AngleQuad, analysis: Analysis) -> Result<ProbabilityTable> {
    match analysis {
        Analysis::Standard => standard_table(k, quad),
        Analysis::Multiwindow(mode) => multiwindow_table(k, quad, mode),
    }
}

pub fn ch_standard(k: f64, quad: &AngleQuad) -> Result<ChBreakdown> {
    ch_value(&standard_table(k, quad)?)
}

pub fn ch_multiwindow(k: f64, quad: &AngleQuad, mode: MultiwindowMode) -> Result<ChBreakdown> {
    ch_value(&multiwindow_table(k, quad, mode)?)
}

pub fn ch_analysis(k: f64, quad: &AngleQuad, analysis: Analysis) -> Result<ChBreakdown> {
    ch_value(&analysis_table(k, quad, analysis)?)
}

/// CH of every multi-window mode at one `k`, for side-by-side reports.
pub fn compare_multiwindow_modes(k: f64, quad: &AngleQuad) -> Result<Vec<(MultiwindowMode, ChBreakdown)>> {
    MultiwindowMode::ALL
        .into_iter()
        .map(|mode| Ok((mode, ch_multiwindow(k, quad, mode)?)))
        .collect()
}

fn ch_raw(k: f64, quad: &AngleQuad, analysis: Analysis) -> f64 {
    let q = QSet::raw(k, quad);
    let table = match analysis {
        Analysis::Standard => standard_table_raw(&q),
        Analysis::Multiwindow(mode) => multiwindow_table_raw(&q, mode),
    };
    let b = ch_value(&table).expect("closed forms are finite");
    b.ch
}

/// Search bracket for [`ch_zero_crossing`].
pub const CROSSING_BRACKET: (f64, f64) = (0.01, 100.0);
const CROSSING_SCAN_POINTS: usize = 400;
const CROSSING_REL_TOL: f64 = 1e-10;

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs,
/// down to `|hi - lo| <= rel_tol * hi`.
pub fn bisect<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, f: F, rel_tol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoCrossing { lo, hi });
    }
    for _ in 0..200 {
        if hi - lo <= rel_tol * hi.abs() {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// First `k` in [`CROSSING_BRACKET`] where CH turns negative.
///
/// A log-spaced scan locates the first sign change, which is then refined by
/// bisection to a relative tolerance of `1e-10`.
pub fn ch_zero_crossing(quad: &AngleQuad, analysis: Analysis) -> Result<f64> {
    let (lo, hi) = CROSSING_BRACKET;
    let f = |k: f64| ch_raw(k, quad, analysis);
    let grid: Vec<f64> = (0..CROSSING_SCAN_POINTS)
        .map(|j| lo * (hi / lo).powf(j as f64 / (CROSSING_SCAN_POINTS - 1) as f64))
        .collect();
    let mut prev_k = grid[0];
    let mut prev = f(prev_k);
    for &k in &grid[1..] {
        let v = f(k);
        if prev > 0.0 && v <= 0.0 {
            return bisect(prev_k, k, f, CROSSING_REL_TOL);
        }
        prev_k = k;
        prev = v;
    }
    Err(Error::NoCrossing { lo, hi })
}

/// Slope of CH at `k -> 0+`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeReport {
    pub analysis: Analysis,
    pub ch_at_zero: f64,
    pub slope: f64,
    /// Slope expected for this analysis by the first-order expansion, if any.
    pub expected: Option<f64>,
}

/// Richardson-extrapolated forward-difference slope of CH at `k = 0`.
pub fn small_k_expansion(quad: &AngleQuad, analysis: Analysis) -> SlopeReport {
    const LEVELS: usize = 6;
    let ch_at_zero = ch_raw(0.0, quad, analysis);
    let h0 = 1e-2;
    // table[i][0] = D(h0 / 2^i); column j cancels the h^j error term.
    let mut table = [[0.0f64; LEVELS]; LEVELS];
    for (i, row) in table.iter_mut().enumerate() {
        let h = h0 / 2f64.powi(i as i32);
        row[0] = (ch_raw(h, quad, analysis) - ch_at_zero) / h;
    }
    for j in 1..LEVELS {
        let factor = 2f64.powi(j as i32);
        for i in j..LEVELS {
            table[i][j] = (factor * table[i][j - 1] - table[i - 1][j - 1]) / (factor - 1.0);
        }
    }
    let expected = match analysis {
        Analysis::Multiwindow(MultiwindowMode::Cancelled) => Some(4.0),
        _ => None,
    };
    SlopeReport {
        analysis,
        ch_at_zero,
        slope: table[LEVELS - 1][LEVELS - 1],
        expected,
    }
}
