//! Experiment configuration, read from TOML.
//!
//! A config file only needs the keys it wants to change; everything else comes
//! from the per-experiment defaults in [`ExperimentConfig::defaults_for`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arraykit::ArrayGeometry;
use crate::capacity::CovarianceKind;
use crate::channel::{sqrt_rule, DomainRestriction};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    BeamPattern,
    Fig2,
    Fig3,
    QpskSweep,
    LemmaCheck,
    TheoremSweep,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Self::BeamPattern,
        Self::Fig2,
        Self::Fig3,
        Self::QpskSweep,
        Self::LemmaCheck,
        Self::TheoremSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::BeamPattern => "beam_pattern",
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::QpskSweep => "qpsk_sweep",
            Self::LemmaCheck => "lemma_check",
            Self::TheoremSweep => "theorem_sweep",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Exact antenna separation `num/den`, written as `"1/4"` or `0.25` in TOML.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SeparationRepr", into = "String")]
pub struct Separation {
    num: u32,
    den: u32,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SeparationRepr {
    Text(String),
    Float(f64),
}

const MAX_DENOMINATOR: u32 = 4096;

impl Separation {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 || 2 * num > den {
            return Err(Error::Config(format!("separation {num}/{den} must lie in (0, 1/2]")));
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn half() -> Self {
        Self { num: 1, den: 2 }
    }

    /// Recovers an exact fraction from a float with denominator up to 4096.
    pub fn from_f64(x: f64) -> Result<Self> {
        for den in 1..=MAX_DENOMINATOR {
            let num = (x * den as f64).round();
            if num >= 1.0 && (num / den as f64 - x).abs() < 1e-12 {
                return Self::new(num as u32, den);
            }
        }
        Err(Error::Config(format!("separation {x} is not a simple fraction")))
    }

    pub fn parts(self) -> (u32, u32) {
        (self.num, self.den)
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn geometry(self, length: u32) -> Result<ArrayGeometry> {
        ArrayGeometry::with_separation(length, self.num, self.den)
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl FromStr for Separation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let parse = |t: &str| {
                    t.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::Config(format!("bad separation '{s}'")))
                };
                Self::new(parse(n)?, parse(d)?)
            }
            None => Self::from_f64(
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad separation '{s}'")))?,
            ),
        }
    }
}

impl TryFrom<SeparationRepr> for Separation {
    type Error = Error;

    fn try_from(r: SeparationRepr) -> Result<Self> {
        match r {
            SeparationRepr::Text(s) => s.parse(),
            SeparationRepr::Float(x) => Self::from_f64(x),
        }
    }
}

impl From<Separation> for String {
    fn from(s: Separation) -> String {
        s.to_string()
    }
}

impl fmt::Display for Separation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// How `s_L` is chosen for a given array length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SlRuleRepr", into = "SlRuleRepr")]
pub enum SlRule {
    Sqrt,
    Custom(u32),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SlRuleRepr {
    Name(String),
    Value(u32),
}

impl TryFrom<SlRuleRepr> for SlRule {
    type Error = Error;

    fn try_from(r: SlRuleRepr) -> Result<Self> {
        match r {
            SlRuleRepr::Name(n) if n == "sqrt" => Ok(Self::Sqrt),
            SlRuleRepr::Name(n) => Err(Error::Config(format!("unknown s_l_rule '{n}'"))),
            SlRuleRepr::Value(0) => Err(Error::Config("s_l_rule must be >= 1".into())),
            SlRuleRepr::Value(v) => Ok(Self::Custom(v)),
        }
    }
}

impl From<SlRule> for SlRuleRepr {
    fn from(r: SlRule) -> Self {
        match r {
            SlRule::Sqrt => Self::Name("sqrt".into()),
            SlRule::Custom(v) => Self::Value(v),
        }
    }
}

impl SlRule {
    pub fn s_l(self, length: u32) -> u32 {
        match self {
            Self::Sqrt => sqrt_rule(length),
            Self::Custom(v) => v.min(length),
        }
    }
}

/// CSIR precoder for the QPSK sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precoder {
    Identity,
    MainLobe,
}

impl Precoder {
    pub fn kind(self) -> CovarianceKind {
        match self {
            Self::Identity => CovarianceKind::IdentityScaled,
            Self::MainLobe => CovarianceKind::MainLobeUniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub l_t: u32,
    pub l_r: u32,
    pub delta_t_list: Vec<Separation>,
    pub delta_r: Separation,
    pub gamma_tilde_db_grid: Vec<f64>,
    /// Paths per instance; `None` means `4·min{2L_t, 2L_r}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_paths: Option<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub s_l_rule: SlRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    /// Rejection-sample path cosines into `D_L`.
    pub restrict_domain: bool,
    pub precoder: Precoder,
    /// Array-length multipliers for the theorem sweep.
    pub scales: Vec<u32>,
    /// Angle grid size for beam patterns and lemma scans.
    pub grid_points: usize,
    pub beam_indices: Vec<u32>,
    pub lemma_lengths: Vec<u32>,
    pub lemma_deltas: Vec<Separation>,
    /// Assumption-1 flag thresholds for `Σ|a_p|²` and the normalized top
    /// singular value.
    pub power_bound: f64,
    pub sigma_bound: f64,
}

fn db_grid(lo: i32, hi: i32, step: i32) -> Vec<f64> {
    (lo..=hi).step_by(step as usize).map(f64::from).collect()
}

fn seps(list: &[(u32, u32)]) -> Vec<Separation> {
    list.iter().map(|&(n, d)| Separation { num: n, den: d }).collect()
}

impl ExperimentConfig {
    pub fn defaults_for(experiment: Experiment) -> Self {
        let mut c = Self {
            experiment,
            l_t: 8,
            l_r: 4,
            delta_t_list: seps(&[(1, 4)]),
            delta_r: Separation::half(),
            gamma_tilde_db_grid: db_grid(-10, 40, 5),
            p_paths: None,
            trials: 200,
            master_seed: 1,
            s_l_rule: SlRule::Sqrt,
            output_path: None,
            restrict_domain: false,
            precoder: Precoder::MainLobe,
            scales: vec![1, 2, 4],
            grid_points: 101,
            beam_indices: vec![0, 4, 8, 12],
            lemma_lengths: vec![16, 32, 64],
            lemma_deltas: seps(&[(1, 2), (1, 4), (1, 8)]),
            power_bound: 4.0,
            sigma_bound: 4.0,
        };
        match experiment {
            Experiment::BeamPattern => {
                c.delta_t_list = seps(&[(1, 2), (1, 4)]);
                c.grid_points = 721;
                c.trials = 1;
            }
            Experiment::Fig2 => {}
            Experiment::Fig3 => c.delta_t_list = seps(&[(1, 2), (1, 4)]),
            Experiment::QpskSweep => {
                c.delta_t_list = seps(&[(1, 2), (1, 4), (1, 8), (1, 16)]);
                c.gamma_tilde_db_grid = vec![-10.0, 0.0, 10.0];
                c.trials = 100;
            }
            Experiment::LemmaCheck => c.trials = 1,
            Experiment::TheoremSweep => {
                c.gamma_tilde_db_grid = vec![0.0, 10.0, 20.0, 30.0];
                c.trials = 100;
            }
        }
        c
    }

    /// Parses TOML on top of the defaults. `experiment` may come from the file
    /// or from `fallback`; the file wins only when no fallback is given.
    pub fn from_toml_str(text: &str, fallback: Option<Experiment>) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let from_file = match table.get("experiment") {
            Some(v) => Some(
                v.clone()
                    .try_into::<Experiment>()
                    .map_err(|e| Error::Config(e.to_string()))?,
            ),
            None => None,
        };
        let experiment = match (fallback, from_file) {
            (Some(cli), Some(file)) if cli != file => {
                return Err(Error::Config(format!(
                    "config is for '{file}' but subcommand is '{cli}'"
                )));
            }
            (Some(e), _) | (None, Some(e)) => e,
            (None, None) => return Err(Error::Config("missing 'experiment' key".into())),
        };
        let mut merged = toml::Table::try_from(Self::defaults_for(experiment))
            .map_err(|e| Error::Config(e.to_string()))?;
        for (k, v) in table {
            merged.insert(k, v);
        }
        let config: Self = merged
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return fail("trials must be >= 1".into());
        }
        if self.l_t == 0 || self.l_r == 0 {
            return fail("array lengths must be >= 1".into());
        }
        if self.delta_t_list.is_empty() || self.gamma_tilde_db_grid.is_empty() {
            return fail("delta_t_list and gamma_tilde_db_grid must be nonempty".into());
        }
        if self.gamma_tilde_db_grid.iter().any(|g| !g.is_finite()) {
            return fail("gamma_tilde_db_grid entries must be finite".into());
        }
        if self.scales.is_empty() || self.scales.contains(&0) {
            return fail("scales must be nonempty and positive".into());
        }
        if self.grid_points < 2 {
            return fail("grid_points must be >= 2".into());
        }
        if self.p_paths == Some(0) {
            return fail("p_paths must be >= 1".into());
        }
        match self.experiment {
            Experiment::LemmaCheck => {
                if self.lemma_lengths.is_empty() || self.lemma_deltas.is_empty() {
                    return fail("lemma_lengths and lemma_deltas must be nonempty".into());
                }
                for &l in &self.lemma_lengths {
                    for d in &self.lemma_deltas {
                        d.geometry(l)?;
                    }
                }
            }
            _ => {
                for &s in &self.scales {
                    for d in &self.delta_t_list {
                        d.geometry(self.l_t * s)?;
                    }
                    self.delta_r.geometry(self.l_r * s)?;
                }
            }
        }
        Ok(())
    }

    /// Default `P = 4·min{2L_t, 2L_r}` unless configured.
    pub fn paths_for(&self, l_t: u32, l_r: u32) -> usize {
        self.p_paths
            .unwrap_or(4 * (2 * l_t.min(l_r)) as usize)
    }

    pub fn restriction(&self, l_t: u32, l_r: u32) -> Option<DomainRestriction> {
        self.restrict_domain.then(|| DomainRestriction {
            s_l: self.s_l_rule.s_l(l_t.min(l_r)),
        })
    }

    /// Hex SHA-256 prefix of the canonical TOML form, ignoring where the output
    /// goes.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_path = None;
        let text = c.to_toml_string().unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// `10^(dB/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
