//! Bell functionals and the finite local-hidden-variable evaluator.
//!
//! The CH functional works on detection probabilities (outcomes 0/1), CHSH on
//! correlators of ±1 outcomes. [`ch_to_chsh`] applies the change of variables
//! `a = 2θ - 1` to expectations, which needs every single-party marginal per
//! setting, so a [`ProbabilityTable`] optionally carries the primed marginals.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Tolerance for probability sums and Bell's-theorem checks.
pub const THEOREM_TOLERANCE: f64 = 1e-12;

/// Polarizer settings (A, B, A', B') in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleQuad {
    pub a: f64,
    pub b: f64,
    pub a_prime: f64,
    pub b_prime: f64,
}

impl Default for AngleQuad {
    fn default() -> Self {
        Self {
            a: FRAC_PI_6,
            b: FRAC_PI_3,
            a_prime: 0.0,
            b_prime: FRAC_PI_2,
        }
    }
}

/// The four (Alice, Bob) angle pairs entering CH.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SettingPair {
    AB,
    ABPrime,
    APrimeB,
    APrimeBPrime,
}

impl SettingPair {
    pub const ALL: [SettingPair; 4] = [
        SettingPair::AB,
        SettingPair::ABPrime,
        SettingPair::APrimeB,
        SettingPair::APrimeBPrime,
    ];

    pub fn index(self) -> usize {
        match self {
            SettingPair::AB => 0,
            SettingPair::ABPrime => 1,
            SettingPair::APrimeB => 2,
            SettingPair::APrimeBPrime => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SettingPair::AB => "AB",
            SettingPair::ABPrime => "AB'",
            SettingPair::APrimeB => "A'B",
            SettingPair::APrimeBPrime => "A'B'",
        }
    }
}

impl AngleQuad {
    pub fn new(a: f64, b: f64, a_prime: f64, b_prime: f64) -> Result<Self> {
        for (name, v) in [("A", a), ("B", b), ("A'", a_prime), ("B'", b_prime)] {
            ensure_finite(name, v)?;
        }
        Ok(Self {
            a,
            b,
            a_prime,
            b_prime,
        })
    }

    /// `(theta, phi)` for the given pair.
    pub fn angles(&self, pair: SettingPair) -> (f64, f64) {
        match pair {
            SettingPair::AB => (self.a, self.b),
            SettingPair::ABPrime => (self.a, self.b_prime),
            SettingPair::APrimeB => (self.a_prime, self.b),
            SettingPair::APrimeBPrime => (self.a_prime, self.b_prime),
        }
    }
}

/// Single and coincidence probabilities entering CH.
///
/// `p_a_prime` and `p_b_prime` are the marginals at the primed settings. CH
/// itself does not use them; the CHSH mapping does.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub p_a: f64,
    pub p_b: f64,
    pub p_ab: f64,
    pub p_ab_prime: f64,
    pub p_a_prime_b: f64,
    pub p_a_prime_b_prime: f64,
    pub p_a_prime: Option<f64>,
    pub p_b_prime: Option<f64>,
}

impl ProbabilityTable {
    pub fn joint(&self, pair: SettingPair) -> f64 {
        match pair {
            SettingPair::AB => self.p_ab,
            SettingPair::ABPrime => self.p_ab_prime,
            SettingPair::APrimeB => self.p_a_prime_b,
            SettingPair::APrimeBPrime => self.p_a_prime_b_prime,
        }
    }

    /// Pairs whose joint probability exceeds the smaller of its marginals.
    ///
    /// A single-window model can never produce one; multi-window tables may,
    /// so this is a diagnostic and never a rejection. Pairs whose marginals
    /// are not present in the table are skipped.
    pub fn monotonicity_violations(&self) -> Vec<SettingPair> {
        SettingPair::ALL
            .into_iter()
            .filter(|&pair| {
                let (alice, bob) = match pair {
                    SettingPair::AB => (Some(self.p_a), Some(self.p_b)),
                    SettingPair::ABPrime => (Some(self.p_a), self.p_b_prime),
                    SettingPair::APrimeB => (self.p_a_prime, Some(self.p_b)),
                    SettingPair::APrimeBPrime => (self.p_a_prime, self.p_b_prime),
                };
                match (alice, bob) {
                    (Some(x), Some(y)) => self.joint(pair) > x.min(y) + THEOREM_TOLERANCE,
                    _ => false,
                }
            })
            .collect()
    }

    fn entries(&self) -> [(&'static str, f64); 6] {
        [
            ("P_A", self.p_a),
            ("P_B", self.p_b),
            ("P_AB", self.p_ab),
            ("P_AB'", self.p_ab_prime),
            ("P_A'B", self.p_a_prime_b),
            ("P_A'B'", self.p_a_prime_b_prime),
        ]
    }
}

/// `CH = Ps - Pc`, kept together with its two parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChBreakdown {
    pub p_s: f64,
    pub p_c: f64,
    pub ch: f64,
}

/// Correlators `<a_j b_k>` of ±1-valued outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorSet {
    pub e11: f64,
    pub e12: f64,
    pub e21: f64,
    pub e22: f64,
}

pub fn ch_value(table: &ProbabilityTable) -> Result<ChBreakdown> {
    for (name, v) in table.entries() {
        ensure_finite(name, v)?;
    }
    let p_s = table.p_a + table.p_b;
    let p_c = table.p_ab + table.p_ab_prime + table.p_a_prime_b - table.p_a_prime_b_prime;
    Ok(ChBreakdown {
        p_s,
        p_c,
        ch: p_s - p_c,
    })
}

pub fn chsh_value(c: &CorrelatorSet) -> Result<f64> {
    for (name, v) in [("e11", c.e11), ("e12", c.e12), ("e21", c.e21), ("e22", c.e22)] {
        ensure_finite(name, v)?;
    }
    Ok(c.e11 + c.e12 + c.e21 - c.e22)
}

/// Maps a 0/1 probability table to ±1 correlators.
///
/// `e_jk = 4 P_jk - 2 P_j - 2 P_k + 1`. The result satisfies
/// `chsh_value(ch_to_chsh(t)) = 2 - 4 ch_value(t).ch`.
pub fn ch_to_chsh(table: &ProbabilityTable) -> Result<CorrelatorSet> {
    let (p_a_prime, p_b_prime) = match (table.p_a_prime, table.p_b_prime) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::InvalidInput(
                "CHSH mapping needs the marginals at A' and B'".into(),
            ))
        }
    };
    for (name, v) in table.entries() {
        ensure_finite(name, v)?;
    }
    ensure_finite("P_A'", p_a_prime)?;
    ensure_finite("P_B'", p_b_prime)?;
    let e = |joint: f64, alice: f64, bob: f64| 4.0 * joint - 2.0 * alice - 2.0 * bob + 1.0;
    Ok(CorrelatorSet {
        e11: e(table.p_ab, table.p_a, table.p_b),
        e12: e(table.p_ab_prime, table.p_a, p_b_prime),
        e21: e(table.p_a_prime_b, p_a_prime, table.p_b),
        e22: e(table.p_a_prime_b_prime, p_a_prime, p_b_prime),
    })
}

/// Column indices of the four settings in a [`DiscreteLhvModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingIndices {
    pub a: usize,
    pub b: usize,
    pub a_prime: usize,
    pub b_prime: usize,
}

impl Default for SettingIndices {
    fn default() -> Self {
        Self {
            a: 0,
            b: 0,
            a_prime: 1,
            b_prime: 1,
        }
    }
}

/// A local hidden-variable model over a finite set of hidden states.
///
/// `response_a[l][s]` is Alice's detection probability in state `l` at her
/// setting column `s`; `response_b` likewise for Bob. Neither table can see
/// the other party's setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLhvModel {
    weights: Vec<f64>,
    response_a: Vec<Vec<f64>>,
    response_b: Vec<Vec<f64>>,
}

impl DiscreteLhvModel {
    pub fn new(
        weights: Vec<f64>,
        response_a: Vec<Vec<f64>>,
        response_b: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::ModelInvalid("empty hidden-state set".into()));
        }
        if response_a.len() != weights.len() || response_b.len() != weights.len() {
            return Err(Error::ModelInvalid(format!(
                "{} weights but {} / {} response rows",
                weights.len(),
                response_a.len(),
                response_b.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::ModelInvalid(format!("weight {w} is negative or not finite")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > THEOREM_TOLERANCE {
            return Err(Error::ModelInvalid(format!("weights sum to {total}, not 1")));
        }
        for (side, table) in [("Alice", &response_a), ("Bob", &response_b)] {
            let width = table[0].len();
            if width == 0 {
                return Err(Error::ModelInvalid(format!("{side} has no setting columns")));
            }
            for (l, row) in table.iter().enumerate() {
                if row.len() != width {
                    return Err(Error::ModelInvalid(format!(
                        "{side} row {l} has {} columns, expected {width}",
                        row.len()
                    )));
                }
                if let Some(m) = row.iter().find(|m| !(0.0..=1.0).contains(*m)) {
                    return Err(Error::ModelInvalid(format!(
                        "{side} response {m} in row {l} is outside [0, 1]"
                    )));
                }
            }
        }
        Ok(Self {
            weights,
            response_a,
            response_b,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn alice_settings(&self) -> usize {
        self.response_a[0].len()
    }

    pub fn bob_settings(&self) -> usize {
        self.response_b[0].len()
    }

    fn alice_marginal(&self, s: usize) -> f64 {
        self.weights
            .iter()
            .zip(&self.response_a)
            .map(|(w, row)| w * row[s])
            .sum()
    }

    fn bob_marginal(&self, s: usize) -> f64 {
        self.weights
            .iter()
            .zip(&self.response_b)
            .map(|(w, row)| w * row[s])
            .sum()
    }

    fn joint(&self, sa: usize, sb: usize) -> f64 {
        self.weights
            .iter()
            .zip(self.response_a.iter().zip(&self.response_b))
            .map(|(w, (ra, rb))| w * ra[sa] * rb[sb])
            .sum()
    }
}

pub fn eval_discrete_lhv(
    model: &DiscreteLhvModel,
    settings: SettingIndices,
) -> Result<ProbabilityTable> {
    let (na, nb) = (model.alice_settings(), model.bob_settings());
    if settings.a >= na || settings.a_prime >= na {
        return Err(Error::ModelInvalid(format!(
            "Alice setting index out of range (model has {na} columns)"
        )));
    }
    if settings.b >= nb || settings.b_prime >= nb {
        return Err(Error::ModelInvalid(format!(
            "Bob setting index out of range (model has {nb} columns)"
        )));
    }
    Ok(ProbabilityTable {
        p_a: model.alice_marginal(settings.a),
        p_b: model.bob_marginal(settings.b),
        p_ab: model.joint(settings.a, settings.b),
        p_ab_prime: model.joint(settings.a, settings.b_prime),
        p_a_prime_b: model.joint(settings.a_prime, settings.b),
        p_a_prime_b_prime: model.joint(settings.a_prime, settings.b_prime),
        p_a_prime: Some(model.alice_marginal(settings.a_prime)),
        p_b_prime: Some(model.bob_marginal(settings.b_prime)),
    })
}

/// One assignment `(θ1, φ1, θ2, φ2)` of 0/1 outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointwiseCase {
    pub assignment: [u8; 4],
    pub lhs: i32,
    pub rhs: i32,
    pub slack: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseReport {
    pub cases: Vec<PointwiseCase>,
}

impl PointwiseReport {
    pub fn all_hold(&self) -> bool {
        self.cases.iter().all(|c| c.slack >= 0)
    }

    pub fn min_slack(&self) -> i32 {
        self.cases.iter().map(|c| c.slack).min().unwrap_or(0)
    }
}

/// Checks `θ1 + φ1 + θ2 φ2 >= θ1 φ1 + θ1 φ2 + θ2 φ1` on all of `{0,1}^4`.
pub fn pointwise_ch_inequality_check() -> PointwiseReport {
    let cases = (0u8..16)
        .map(|bits| {
            let [t1, f1, t2, f2] = [bits >> 3 & 1, bits >> 2 & 1, bits >> 1 & 1, bits & 1];
            let (t1i, f1i, t2i, f2i) = (t1 as i32, f1 as i32, t2 as i32, f2 as i32);
            let lhs = t1i + f1i + t2i * f2i;
            let rhs = t1i * f1i + t1i * f2i + t2i * f1i;
            PointwiseCase {
                assignment: [t1, f1, t2, f2],
                lhs,
                rhs,
                slack: lhs - rhs,
            }
        })
        .collect();
    PointwiseReport { cases }
}
