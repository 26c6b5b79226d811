//! TOML scenario files and the built-in presets.
//!
//! ```toml
//! [game]
//! kind = "oligopoly"          # or "explicit"
//! demand = 100.0
//! resistances = [0.15, 0.3, 0.6, 1.0]
//! marginal_costs = [30.0, 30.0, 25.0, 20.0]
//! # kind = "explicit" takes payoff_matrices, payoff_vectors, offsets
//!
//! [dither]
//! amplitudes = [0.05, 0.05, 0.05, 0.05]
//! freq_ratios = [30, 24, "44", "7/2"]   # integers or "p/q" strings
//! base_freq = 1.0
//!
//! [trigger]
//! sigmas = [0.65, 0.55, 0.75, 0.45]
//! gains = [6.0, 18.0, 10.0, 24.0]
//!
//! [sim]
//! dt = 0.001
//! horizon = 300.0
//! theta_hat_0 = [52.0, 40.93, 33.5, 35.09]
//! mode = "original"           # or "average"
//! decimate = 1                # optional
//!
//! [output]                    # optional
//! dir = "out"
//! ```

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dither::{validate_frequencies, DitherConfig, FrequencyViolation, Rational};
use crate::error::{Error, Result};
use crate::game::{oligopoly_game, QuadraticGame};
use crate::linalg::Matrix;
use crate::sim::{SimConfig, SimMode};
use crate::trigger::TriggerConfig;

pub const OLIGOPOLY_4FIRM: &str = include_str!("../presets/oligopoly-4firm.toml");

/// `(name, description, source)` for every compiled-in preset.
pub const PRESETS: &[(&str, &str, &str)] =
    &[("oligopoly-4firm", "four-firm oligopoly pricing game, 300 s horizon", OLIGOPOLY_4FIRM)];

pub fn preset_source(name: &str) -> Result<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.2).ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GameSpec {
    Oligopoly { demand: f64, resistances: Vec<f64>, marginal_costs: Vec<f64> },
    Explicit { payoff_matrices: Vec<Vec<Vec<f64>>>, payoff_vectors: Vec<Vec<f64>>, offsets: Vec<f64> },
}

/// A frequency ratio as written in the file: an integer or a `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RatioSpec {
    Int(i64),
    Text(String),
}

impl RatioSpec {
    pub fn from_ratio(r: Rational) -> Self {
        if *r.denom() == 1 {
            RatioSpec::Int(*r.numer())
        } else {
            RatioSpec::Text(format!("{}/{}", r.numer(), r.denom()))
        }
    }

    fn parse(&self, field: &str) -> Result<Rational> {
        match self {
            RatioSpec::Int(v) => Ok(Rational::from_integer(*v)),
            RatioSpec::Text(s) => {
                let bad = || Error::config(field, format!("expected an integer or \"p/q\", got {s:?}"));
                let (p, q) = match s.split_once('/') {
                    Some((p, q)) => (p.trim(), q.trim()),
                    None => (s.trim(), "1"),
                };
                let p: i64 = p.parse().map_err(|_| bad())?;
                let q: i64 = q.parse().map_err(|_| bad())?;
                if q == 0 {
                    return Err(Error::config(field, "zero denominator"));
                }
                Ok(Rational::new(p, q))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DitherSpec {
    pub amplitudes: Vec<f64>,
    pub freq_ratios: Vec<RatioSpec>,
    pub base_freq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerSpec {
    pub sigmas: Vec<f64>,
    pub gains: Vec<f64>,
}

fn default_mode() -> String {
    "original".into()
}

fn default_decimate() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub dt: f64,
    pub horizon: f64,
    pub theta_hat_0: Vec<f64>,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_decimate")]
    pub decimate: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

/// Raw file contents, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub game: GameSpec,
    pub dither: DitherSpec,
    pub trigger: TriggerSpec,
    pub sim: SimSpec,
    #[serde(default, skip_serializing_if = "is_default_output")]
    pub output: OutputSpec,
}

fn is_default_output(o: &OutputSpec) -> bool {
    *o == OutputSpec::default()
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub spec: ScenarioFile,
    pub game: QuadraticGame<f64>,
    pub dither: DitherConfig<f64>,
    pub trigger: TriggerConfig<f64>,
    pub sim: SimConfig<f64>,
    /// Non-fatal findings, currently frequency-assumption violations.
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    Frequency(FrequencyViolation),
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::Frequency(v) => write!(f, "probing frequencies: {v}"),
        }
    }
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

pub fn parse_scenario_file(src: &str, source_name: &str) -> Result<ScenarioFile> {
    if src.trim().is_empty() {
        return Err(Error::Parse { source_name: source_name.into(), message: "empty scenario".into() });
    }
    toml::from_str(src).map_err(|e| {
        let msg = e.message().trim().to_string();
        let message = match e.span() {
            Some(span) => {
                let (l, c) = line_col(src, span.start);
                format!("line {l}, column {c}: {msg}")
            }
            None => msg,
        };
        Error::Parse { source_name: source_name.into(), message }
    })
}

fn require_len(field: &str, got: usize, n: usize) -> Result<()> {
    if got != n {
        return Err(Error::config(field, format!("expected {n} entries, got {got}")));
    }
    Ok(())
}

impl Scenario {
    pub fn from_str(src: &str, name: &str) -> Result<Self> {
        Self::from_file(parse_scenario_file(src, name)?, name)
    }

    pub fn from_file(spec: ScenarioFile, name: &str) -> Result<Self> {
        let game = build_game(&spec.game)?;
        let n = game.players();
        game.validate().into_result()?;

        let d = &spec.dither;
        require_len("dither.amplitudes", d.amplitudes.len(), n)?;
        require_len("dither.freq_ratios", d.freq_ratios.len(), n)?;
        let ratios =
            d.freq_ratios.iter().enumerate().map(|(i, r)| r.parse(&format!("dither.freq_ratios[{i}]"))).collect::<Result<Vec<_>>>()?;
        let dither = DitherConfig::new(d.amplitudes.clone(), ratios, d.base_freq)?;

        let t = &spec.trigger;
        require_len("trigger.sigmas", t.sigmas.len(), n)?;
        require_len("trigger.gains", t.gains.len(), n)?;
        let trigger = TriggerConfig::new(t.sigmas.clone(), t.gains.clone())?;

        let s = &spec.sim;
        require_len("sim.theta_hat_0", s.theta_hat_0.len(), n)?;
        let mode: SimMode = s.mode.parse()?;
        let sim = SimConfig::new(s.dt, s.horizon, s.theta_hat_0.clone(), mode)?.with_decimation(s.decimate)?;

        let warnings = validate_frequencies(&dither).into_iter().map(Warning::Frequency).collect();
        Ok(Self { name: name.to_string(), spec, game, dither, trigger, sim, warnings })
    }

    pub fn preset(name: &str) -> Result<Self> {
        Self::from_str(preset_source(name)?, name)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        let name = path.file_stem().map_or_else(|| "scenario".to_string(), |s| s.to_string_lossy().into_owned());
        Self::from_file(parse_scenario_file(&src, &path.display().to_string())?, &name)
    }

    /// Resolves `target` as an existing file first, then as a preset name.
    pub fn load(target: &str) -> Result<Self> {
        let path = Path::new(target);
        if path.is_file() {
            Self::from_path(path)
        } else if PRESETS.iter().any(|p| p.0 == target) {
            Self::preset(target)
        } else if target.ends_with(".toml") || target.contains(std::path::MAIN_SEPARATOR) {
            Self::from_path(path)
        } else {
            Err(Error::UnknownPreset(target.to_string()))
        }
    }

    /// Re-applies the sim section after command-line overrides.
    pub fn override_sim(&mut self, mode: Option<SimMode>, dt: Option<f64>, horizon: Option<f64>, decimate: Option<usize>) -> Result<()> {
        let s = &mut self.spec.sim;
        if let Some(m) = mode {
            s.mode = m.as_str().to_string();
        }
        if let Some(v) = dt {
            s.dt = v;
        }
        if let Some(v) = horizon {
            s.horizon = v;
        }
        if let Some(v) = decimate {
            s.decimate = v;
        }
        self.sim = SimConfig::new(s.dt, s.horizon, s.theta_hat_0.clone(), s.mode.parse()?)?.with_decimation(s.decimate)?;
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(&self.spec).map_err(|e| Error::Parse { source_name: self.name.clone(), message: e.to_string() })
    }
}

pub fn build_game(spec: &GameSpec) -> Result<QuadraticGame<f64>> {
    match spec {
        GameSpec::Oligopoly { demand, resistances, marginal_costs } => {
            if resistances.len() != marginal_costs.len() {
                return Err(Error::config(
                    "game.marginal_costs",
                    format!("expected {} entries, got {}", resistances.len(), marginal_costs.len()),
                ));
            }
            oligopoly_game(*demand, resistances, marginal_costs)
        }
        GameSpec::Explicit { payoff_matrices, payoff_vectors, offsets } => {
            let n = payoff_matrices.len();
            require_len("game.payoff_vectors", payoff_vectors.len(), n)?;
            require_len("game.offsets", offsets.len(), n)?;
            let mats = payoff_matrices
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    Matrix::try_from_rows(m).map_err(|e| Error::config(format!("game.payoff_matrices[{i}]"), e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            QuadraticGame::new(mats, payoff_vectors.clone(), offsets.clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_matches_published_parameters() {
        let sc = Scenario::preset("oligopoly-4firm").unwrap();
        assert_eq!(sc.sim.theta_hat_0, vec![52.0, 40.93, 33.5, 35.09]);
        assert_eq!(sc.dither.amplitudes(), &[0.05; 4]);
        let w: Vec<f64> = (0..4).map(|i| sc.dither.omega(i)).collect();
        assert_eq!(w, vec![30.0, 24.0, 44.0, 36.0]);
        assert_eq!(sc.trigger.sigmas(), &[0.65, 0.55, 0.75, 0.45]);
        assert_eq!(sc.trigger.gains(), &[6.0, 18.0, 10.0, 24.0]);
        assert_eq!((sc.sim.dt, sc.sim.horizon, sc.sim.mode), (1e-3, 300.0, SimMode::Original));
        // 30 is the midpoint of 24 and 36
        assert_eq!(sc.warnings.len(), 1);
    }

    #[test]
    fn round_trip_is_identical() {
        let sc = Scenario::preset("oligopoly-4firm").unwrap();
        let again = Scenario::from_str(&sc.to_toml().unwrap(), "oligopoly-4firm").unwrap();
        assert_eq!(sc, again);
    }

    #[test]
    fn empty_file_is_a_parse_error() {
        assert!(matches!(Scenario::from_str("", "x"), Err(Error::Parse { .. })));
        assert!(matches!(Scenario::from_str("  \n", "x"), Err(Error::Parse { .. })));
    }

    #[test]
    fn bad_sigma_names_the_field() {
        let src = OLIGOPOLY_4FIRM.replace("sigmas = [0.65", "sigmas = [1.2");
        match Scenario::from_str(&src, "x") {
            Err(Error::InvalidConfig { field, reason }) => {
                assert_eq!(field, "trigger.sigmas[0]");
                assert!(reason.contains("sigma out of (0,1)"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_line() {
        let src = OLIGOPOLY_4FIRM.replace("demand = 100.0", "demand = = 100.0");
        match Scenario::from_str(&src, "x") {
            Err(Error::Parse { message, .. }) => assert!(message.starts_with("line 5,"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let src = OLIGOPOLY_4FIRM.replace("base_freq = 1.0", "base_freq = 1.0\nbase_frq = 2.0");
        assert!(matches!(Scenario::from_str(&src, "x"), Err(Error::Parse { .. })));
    }

    #[test]
    fn fractional_ratios_and_explicit_games() {
        let src = r#"
[game]
kind = "explicit"
payoff_matrices = [[[-2.0, 1.0], [1.0, 0.0]], [[0.0, 1.0], [1.0, -2.0]]]
payoff_vectors = [[1.0, 0.0], [0.0, 1.0]]
offsets = [0.0, 0.0]

[dither]
amplitudes = [0.1, 0.1]
freq_ratios = ["7/2", 5]
base_freq = 4.0

[trigger]
sigmas = [0.5, 0.5]
gains = [1.0, 1.0]

[sim]
dt = 0.01
horizon = 1.0
theta_hat_0 = [0.0, 0.0]
mode = "average"
"#;
        let sc = Scenario::from_str(src, "x").unwrap();
        assert_eq!(sc.dither.omega(0), 14.0);
        assert_eq!(sc.sim.mode, SimMode::Average);
        assert_eq!(Scenario::from_str(&sc.to_toml().unwrap(), "x").unwrap(), sc);
        let bad = src.replace("\"7/2\"", "\"7/0\"");
        assert!(matches!(Scenario::from_str(&bad, "x"), Err(Error::InvalidConfig { .. })));
        let short = src.replace("gains = [1.0, 1.0]", "gains = [1.0]");
        match Scenario::from_str(&short, "x") {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "trigger.gains"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_revalidate() {
        let mut sc = Scenario::preset("oligopoly-4firm").unwrap();
        sc.override_sim(Some(SimMode::Average), Some(5e-4), Some(10.0), None).unwrap();
        assert_eq!((sc.sim.dt, sc.sim.horizon, sc.sim.mode), (5e-4, 10.0, SimMode::Average));
        assert!(sc.override_sim(None, Some(-1.0), None, None).is_err());
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(Scenario::load("no-such-preset"), Err(Error::UnknownPreset(_))));
    }
}
