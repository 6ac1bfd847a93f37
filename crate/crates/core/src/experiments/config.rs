//! Flat `key = value` experiment configuration.
//!
//! ```text
//! [run]
//! seed = 7
//!
//! [sweep]
//! family = korobov
//! r = 2
//! p = 2
//! m_list = 4, 8, 16
//!
//! [probe]
//! n_list = 10, 20, 40
//! ```
//!
//! `[sweep]` and `[probe]` may repeat; each header starts a new section.
//! `#` starts a comment.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::lower_bound::GrowthFunction;
use crate::sequences::{CoefficientSequence, MaskSpec};
use crate::spectral::DEFAULT_OVERSAMPLE;

/// Family parameters of one coefficient sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSpec {
    pub family: String,
    pub r: Option<f64>,
    pub s: Option<f64>,
    pub v: Option<f64>,
    /// `one` or `log_damped`.
    pub mask: Option<String>,
    pub mask_c: Option<f64>,
}

impl SequenceSpec {
    pub fn korobov(r: f64) -> Self {
        SequenceSpec {
            family: "korobov".into(),
            r: Some(r),
            s: None,
            v: None,
            mask: None,
            mask_c: None,
        }
    }

    pub fn exponential(s: f64) -> Self {
        SequenceSpec {
            family: "exponential".into(),
            s: Some(s),
            ..SequenceSpec::korobov(0.0).without_r()
        }
    }

    fn without_r(mut self) -> Self {
        self.r = None;
        self
    }

    fn mask_spec(&self) -> Result<MaskSpec> {
        match self.mask.as_deref().unwrap_or("one") {
            "one" => Ok(MaskSpec::constant_one()),
            "log_damped" => MaskSpec::log_damped(self.mask_c.unwrap_or(0.5)),
            other => Err(Error::InvalidArgument(format!("unknown mask `{other}`"))),
        }
    }

    /// Builds the sequence in `d` variables (coordinate products for `d > 1`).
    pub fn build(&self, d: usize) -> Result<CoefficientSequence> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| {
                Error::InvalidArgument(format!("family `{}` needs `{name}`", self.family))
            })
        };
        let one = match self.family.as_str() {
            "korobov" => return CoefficientSequence::korobov_d(need(self.r, "r")?, d),
            "exponential" => return CoefficientSequence::exponential_d(need(self.s, "s")?, d),
            "constant" => return CoefficientSequence::constant_d(self.v.unwrap_or(1.0), d),
            "mask_power" => CoefficientSequence::mask_power(need(self.r, "r")?, self.mask_spec()?)?,
            "exponent_mask" => {
                CoefficientSequence::exponent_mask(need(self.s, "s")?, self.mask_spec()?)?
            }
            other => return Err(Error::InvalidArgument(format!("unknown family `{other}`"))),
        };
        if d == 1 {
            Ok(one)
        } else {
            CoefficientSequence::product(vec![one; d])
        }
    }
}

/// One `[sweep]` section.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub lambda: SequenceSpec,
    /// Defaults to `lambda`.
    pub beta: Option<SequenceSpec>,
    /// Truncates `β` to a box polynomial of this degree.
    pub beta_degree: Option<i64>,
    pub d: usize,
    pub p: f64,
    pub m_list: Vec<i64>,
    pub g_random: usize,
    pub g_bandwidth_factor: i64,
    pub g_file: Option<PathBuf>,
    pub probes: bool,
    pub quadrature: bool,
    pub oversample: usize,
    pub k_gen: Option<i64>,
    pub k_out: Option<i64>,
    pub k_out_quadrature: Option<i64>,
    pub j_max: Option<i64>,
    pub seed: u64,
    pub timing: bool,
}

impl SweepConfig {
    pub fn new(lambda: SequenceSpec, p: f64, m_list: Vec<i64>) -> Self {
        SweepConfig {
            lambda,
            beta: None,
            beta_degree: None,
            d: 1,
            p,
            m_list,
            g_random: 20,
            g_bandwidth_factor: 2,
            g_file: None,
            probes: true,
            quadrature: true,
            oversample: DEFAULT_OVERSAMPLE,
            k_gen: None,
            k_out: None,
            k_out_quadrature: None,
            j_max: None,
            seed: 0,
            timing: false,
        }
    }

    pub fn lambda_sequence(&self) -> Result<CoefficientSequence> {
        self.lambda.build(self.d)
    }

    pub fn beta_sequence(&self) -> Result<CoefficientSequence> {
        let beta = self.beta.as_ref().unwrap_or(&self.lambda).build(self.d)?;
        match self.beta_degree {
            Some(deg) => beta.truncated(deg),
            None => Ok(beta),
        }
    }

    /// Checks the invariants that do not depend on a source line.
    pub fn validate(&self) -> std::result::Result<(), (String, String)> {
        if self.m_list.is_empty() {
            return Err(("m_list".into(), "m_list must not be empty".into()));
        }
        if self.m_list.windows(2).any(|w| w[0] >= w[1]) || self.m_list[0] < 1 {
            return Err((
                "m_list".into(),
                "m_list must be positive and strictly increasing".into(),
            ));
        }
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(("p".into(), format!("p must lie in (1, ∞), got {}", self.p)));
        }
        if self.d == 0 || self.d > 3 {
            return Err(("d".into(), "d must be 1, 2 or 3".into()));
        }
        if self.g_random == 0 && !self.probes && self.g_file.is_none() {
            return Err((
                "g_random".into(),
                "no test functions: enable probes, g_random or g_file".into(),
            ));
        }
        if self.p != 2.0 && !self.quadrature {
            return Err((
                "quadrature".into(),
                "p ≠ 2 needs the quadrature method".into(),
            ));
        }
        if self.oversample < 2 {
            return Err(("oversample".into(), "oversample must be at least 2".into()));
        }
        Ok(())
    }
}

/// One `[probe]` section.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    pub lambda: SequenceSpec,
    pub d: usize,
    pub n_list: Vec<u64>,
    pub c3: f64,
    pub trials: usize,
    pub restarts: usize,
    pub seed: u64,
    pub growth: GrowthFunction,
}

impl ProbeConfig {
    pub fn new(lambda: SequenceSpec, n_list: Vec<u64>) -> Self {
        ProbeConfig {
            lambda,
            d: 1,
            n_list,
            c3: 1.0,
            trials: 20,
            restarts: 4,
            seed: 0,
            growth: GrowthFunction::power(1.0).expect("positive exponent"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    pub sweeps: Vec<SweepConfig>,
    pub probes: Vec<ProbeConfig>,
}

enum Section {
    None,
    Run,
    Sweep(Box<SweepConfig>, usize),
    Probe(ProbeConfig, usize),
}

fn err(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.into(),
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| err(line, key, format!("cannot parse `{value}`")))
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(err(
            line,
            key,
            format!("expected true or false, got `{value}`"),
        )),
    }
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|v| parse_num(line, key, v.trim()))
        .collect()
}

fn parse_growth(line: usize, key: &str, value: &str) -> Result<GrowthFunction> {
    let (kind, args) = value.split_once(':').unwrap_or((value, ""));
    let nums: Vec<f64> = parse_list(line, key, args)?;
    let g = match (kind, nums.as_slice()) {
        ("power", [a]) => GrowthFunction::power(*a),
        ("log_power", [a, b]) => GrowthFunction::log_power(*a, *b),
        _ => {
            return Err(err(
                line,
                key,
                format!("expected power:<a> or log_power:<a>,<b>, got `{value}`"),
            ))
        }
    };
    g.map_err(|e| err(line, key, e.to_string()))
}

/// Applies a sequence key to `spec`; `prefix` is `""` or `"beta_"`.
fn sequence_key(spec: &mut SequenceSpec, key: &str, value: &str, line: usize) -> Result<bool> {
    match key {
        "family" => spec.family = value.to_string(),
        "r" => spec.r = Some(parse_num(line, key, value)?),
        "s" => spec.s = Some(parse_num(line, key, value)?),
        "v" => spec.v = Some(parse_num(line, key, value)?),
        "mask" => spec.mask = Some(value.to_string()),
        "mask_c" => spec.mask_c = Some(parse_num(line, key, value)?),
        _ => return Ok(false),
    }
    Ok(true)
}

fn sweep_key(cfg: &mut SweepConfig, key: &str, value: &str, line: usize) -> Result<()> {
    if sequence_key(&mut cfg.lambda, key, value, line)? {
        return Ok(());
    }
    if let Some(rest) = key.strip_prefix("beta_") {
        if rest == "degree" {
            cfg.beta_degree = Some(parse_num(line, key, value)?);
            return Ok(());
        }
        let beta = cfg.beta.get_or_insert_with(|| cfg.lambda.clone());
        if sequence_key(beta, rest, value, line)? {
            return Ok(());
        }
    }
    match key {
        "d" => cfg.d = parse_num(line, key, value)?,
        "p" => cfg.p = parse_num(line, key, value)?,
        "m_list" => cfg.m_list = parse_list(line, key, value)?,
        "g_random" => cfg.g_random = parse_num(line, key, value)?,
        "g_bandwidth_factor" => cfg.g_bandwidth_factor = parse_num(line, key, value)?,
        "g_file" => cfg.g_file = Some(PathBuf::from(value)),
        "probes" => cfg.probes = parse_bool(line, key, value)?,
        "quadrature" => cfg.quadrature = parse_bool(line, key, value)?,
        "oversample" => cfg.oversample = parse_num(line, key, value)?,
        "k_gen" => cfg.k_gen = Some(parse_num(line, key, value)?),
        "k_out" => cfg.k_out = Some(parse_num(line, key, value)?),
        "k_out_quadrature" => cfg.k_out_quadrature = Some(parse_num(line, key, value)?),
        "j_max" => cfg.j_max = Some(parse_num(line, key, value)?),
        "seed" => cfg.seed = parse_num(line, key, value)?,
        "timing" => cfg.timing = parse_bool(line, key, value)?,
        _ => return Err(err(line, key, "unknown key in [sweep]")),
    }
    Ok(())
}

fn probe_key(cfg: &mut ProbeConfig, key: &str, value: &str, line: usize) -> Result<()> {
    if sequence_key(&mut cfg.lambda, key, value, line)? {
        return Ok(());
    }
    match key {
        "d" => cfg.d = parse_num(line, key, value)?,
        "n_list" => cfg.n_list = parse_list(line, key, value)?,
        "c3" => cfg.c3 = parse_num(line, key, value)?,
        "trials" => cfg.trials = parse_num(line, key, value)?,
        "restarts" => cfg.restarts = parse_num(line, key, value)?,
        "seed" => cfg.seed = parse_num(line, key, value)?,
        "growth" => cfg.growth = parse_growth(line, key, value)?,
        _ => return Err(err(line, key, "unknown key in [probe]")),
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = ExperimentConfig::default();
        let mut section = Section::None;
        let finish = |section: Section, out: &mut ExperimentConfig| -> Result<()> {
            match section {
                Section::Sweep(cfg, line) => {
                    cfg.validate().map_err(|(key, msg)| err(line, &key, msg))?;
                    cfg.lambda_sequence()
                        .map_err(|e| err(line, "family", e.to_string()))?;
                    cfg.beta_sequence()
                        .map_err(|e| err(line, "beta_family", e.to_string()))?;
                    out.sweeps.push(*cfg);
                }
                Section::Probe(cfg, line) => {
                    if cfg.n_list.is_empty() {
                        return Err(err(line, "n_list", "n_list must not be empty"));
                    }
                    if cfg.n_list.iter().any(|&n| n < 10) {
                        return Err(err(line, "n_list", "every n must be at least 10"));
                    }
                    if cfg.d != 1 {
                        return Err(err(line, "d", "the translate fit supports d = 1 only"));
                    }
                    cfg.lambda
                        .build(cfg.d)
                        .map_err(|e| err(line, "family", e.to_string()))?;
                    out.probes.push(cfg);
                }
                Section::None | Section::Run => {}
            }
            Ok(())
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|c| c.strip_suffix(']')) {
                finish(std::mem::replace(&mut section, Section::None), &mut out)?;
                section = match name.trim() {
                    "run" => Section::Run,
                    "sweep" => Section::Sweep(
                        Box::new(SweepConfig::new(
                            SequenceSpec::korobov(2.0),
                            2.0,
                            Vec::new(),
                        )),
                        line,
                    ),
                    "probe" => Section::Probe(
                        ProbeConfig::new(SequenceSpec::korobov(1.0), Vec::new()),
                        line,
                    ),
                    other => return Err(err(line, other, "unknown section")),
                };
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(line, content, "expected `key = value`"))?;
            match &mut section {
                Section::None => return Err(err(line, key, "key outside of a section")),
                Section::Run => match key {
                    "seed" => out.run.seed = Some(parse_num(line, key, value)?),
                    "out" => out.run.out = Some(PathBuf::from(value)),
                    "format" => match value {
                        "csv" | "plot" => out.run.format = Some(value.to_string()),
                        _ => return Err(err(line, key, "format must be csv or plot")),
                    },
                    _ => return Err(err(line, key, "unknown key in [run]")),
                },
                Section::Sweep(cfg, _) => sweep_key(cfg, key, value, line)?,
                Section::Probe(cfg, _) => probe_key(cfg, key, value, line)?,
            }
        }
        finish(section, &mut out)?;
        if let Some(seed) = out.run.seed {
            out.apply_seed(seed);
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Overrides every section seed.
    pub fn apply_seed(&mut self, seed: u64) {
        self.run.seed = Some(seed);
        for s in &mut self.sweeps {
            s.seed = seed;
        }
        for p in &mut self.probes {
            p.seed = seed;
        }
    }
}
