//! Flat key = value configuration files with command-line overrides.
//!
//! The format is deliberately minimal: one `key = value` pair per line,
//! `#` starts a comment, keys are case-sensitive. Flags win over file
//! values. The seed is mandatory everywhere; there is no wall-clock
//! fallback, so runs are reproducible by construction.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use geosens::estimators::Mode;
use geosens::models::StiffnessCase;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()))
}

/// Raw key-value map from the file plus overrides.
#[derive(Debug, Default, Clone)]
pub struct KeyValues {
    map: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected 'key = value', got '{raw}'", lineno + 1));
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(KeyValues { map })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.map.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn take_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| ConfigError(format!("key '{key}': cannot parse '{raw}'"))),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.take_parsed(key)?
            .ok_or_else(|| ConfigError(format!("missing required key '{key}'")))
    }

    fn or_default<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.take_parsed(key)?.unwrap_or(default))
    }
}

/// Grid syntax: either `lo:hi:count` (inclusive linspace) or a comma list.
pub fn parse_grid(raw: &str) -> Result<Vec<f64>> {
    let raw = raw.trim();
    if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            return err(format!("grid '{raw}': expected lo:hi:count"));
        }
        let lo: f64 = parts[0].parse().map_err(|_| ConfigError(format!("bad grid bound '{}'", parts[0])))?;
        let hi: f64 = parts[1].parse().map_err(|_| ConfigError(format!("bad grid bound '{}'", parts[1])))?;
        let count: usize =
            parts[2].parse().map_err(|_| ConfigError(format!("bad grid count '{}'", parts[2])))?;
        if count < 1 {
            return err("grid count must be positive");
        }
        if count == 1 {
            return Ok(vec![lo]);
        }
        let step = (hi - lo) / (count - 1) as f64;
        Ok((0..count).map(|i| lo + step * i as f64).collect())
    } else {
        raw.split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| ConfigError(format!("bad grid entry '{tok}'")))
            })
            .collect()
    }
}

fn parse_mode(raw: &str) -> Result<Mode> {
    if raw == "exact" {
        return Ok(Mode::ExactU);
    }
    if let Some(m) = raw.strip_prefix("incomplete:") {
        let m: usize =
            m.parse().map_err(|_| ConfigError(format!("bad incomplete size '{raw}'")))?;
        if m == 0 {
            return err("incomplete size must be positive");
        }
        return Ok(Mode::IncompleteU(m));
    }
    err(format!("mode must be 'exact' or 'incomplete:M', got '{raw}'"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Which of the built-in studies to run.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Example1 { alpha: f64, p_grid: Vec<f64> },
    Example2 { mu1_grid: Vec<f64>, mu2: f64, sigma1_sq: f64, sigma2_sq: f64 },
    Example3 { mu1_grid: Vec<f64> },
    Stiffness { case: StiffnessCase, lambda_grid: Vec<f64> },
    Custom { model: CustomModel, dim: usize, nu: Vec<usize> },
}


/// Named models accepted by the `custom` experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum CustomModel {
    /// Ignores its inputs.
    Constant(f64),
    /// Sum of the input coordinates.
    Sum,
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub n: usize,
    pub n_w: usize,
    pub mode: Mode,
    /// 0 disables the bootstrap columns.
    pub bootstrap_reps: usize,
    pub bootstrap_level: f64,
    /// Estimator mode inside bootstrap replicates; defaults to
    /// incomplete:2000 so intervals stay affordable at benchmark sizes.
    bootstrap_mode: Mode,
    pub out: Option<String>,
    pub format: OutputFormat,
    /// Real wall-clock timings in the output; off by default so identical
    /// configs produce byte-identical files.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn from_keys(experiment_name: &str, kv: &KeyValues) -> Result<Self> {
        let seed: u64 = kv.required("seed")?;
        let default_n = match experiment_name {
            "example2" => 300,
            "stiffness" => 500,
            _ => 1000,
        };
        let n: usize = kv.or_default("n", default_n)?;
        if n < 2 {
            return err("n must be at least 2");
        }
        let n_w: usize = kv.or_default("nw", n)?;
        if n_w < 2 {
            return err("nw must be at least 2");
        }
        let mode = match kv.get("mode") {
            None => Mode::ExactU,
            Some(raw) => parse_mode(raw)?,
        };
        let bootstrap_reps: usize = kv.or_default("bootstrap_reps", 200)?;
        if bootstrap_reps != 0 && bootstrap_reps < 100 {
            return err("bootstrap_reps must be 0 (disabled) or at least 100");
        }
        let bootstrap_level: f64 = kv.or_default("bootstrap_level", 0.95)?;
        if !(bootstrap_level > 0.0 && bootstrap_level < 1.0) {
            return err("bootstrap_level must lie strictly between 0 and 1");
        }
        let bootstrap_mode = match kv.get("bootstrap_mode") {
            None => Mode::IncompleteU(2000),
            Some(raw) => parse_mode(raw)?,
        };
        let format = match kv.get("format").unwrap_or("csv") {
            "csv" => OutputFormat::Csv,
            "json" => OutputFormat::Json,
            other => return err(format!("format must be csv or json, got '{other}'")),
        };
        let timing = match kv.get("timing").unwrap_or("off") {
            "on" | "true" => true,
            "off" | "false" => false,
            other => return err(format!("timing must be on or off, got '{other}'")),
        };

        let experiment = match experiment_name {
            "example1" => {
                let alpha: f64 = kv.or_default("alpha", 1.0)?;
                if alpha <= 0.0 {
                    return err("alpha must be positive");
                }
                let p_grid = parse_grid(kv.get("p_grid").unwrap_or("0.1:0.9:9"))?;
                // p = 0 or 1 collapses the uniform width b to zero.
                if p_grid.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
                    return err("p_grid entries must lie strictly inside (0, 1)");
                }
                Experiment::Example1 { alpha, p_grid }
            }
            "example2" => {
                let mu1_grid = parse_grid(kv.get("mu1_grid").unwrap_or("-5:0:11"))?;
                let mu2: f64 = kv.or_default("mu2", 0.0)?;
                let sigma1_sq: f64 = kv.or_default("sigma1_sq", 1.0)?;
                let sigma2_sq: f64 = kv.or_default("sigma2_sq", 1.0)?;
                if sigma1_sq <= 0.0 || sigma2_sq <= 0.0 {
                    return err("variances must be positive");
                }
                Experiment::Example2 { mu1_grid, mu2, sigma1_sq, sigma2_sq }
            }
            "example3" => {
                let mu1_grid = parse_grid(kv.get("mu1_grid").unwrap_or("0.5:5:10"))?;
                if mu1_grid.iter().any(|m| *m <= 0.0) {
                    return err("mu1_grid entries must be positive");
                }
                Experiment::Example3 { mu1_grid }
            }
            "stiffness" => {
                let case = match kv.get("case").unwrap_or("gamma") {
                    "gamma" => StiffnessCase::Gamma,
                    "uniform" => StiffnessCase::Uniform,
                    other => return err(format!("case must be gamma or uniform, got '{other}'")),
                };
                let lambda_grid = parse_grid(kv.get("lambda_grid").unwrap_or("0.001,0.01,0.1,1"))?;
                if lambda_grid.iter().any(|l| *l <= 0.0) {
                    return err("lambda_grid entries must be positive");
                }
                Experiment::Stiffness { case, lambda_grid }
            }
            "custom" => {
                let dim: usize = kv.or_default("dim", 2)?;
                if dim < 2 {
                    return err("custom models need dim >= 2 so nu can be a proper subset");
                }
                let model = match kv.get("model") {
                    Some("sum") => CustomModel::Sum,
                    Some(raw) => match raw.strip_prefix("constant:") {
                        Some(v) => CustomModel::Constant(v.parse().map_err(|_| {
                            ConfigError(format!("bad constant value in '{raw}'"))
                        })?),
                        None => return err(format!("unknown custom model '{raw}'")),
                    },
                    None => return err("custom experiment needs a 'model' key"),
                };
                let nu: Vec<usize> = kv
                    .get("nu")
                    .unwrap_or("1")
                    .split(',')
                    .map(|tok| {
                        tok.trim()
                            .parse::<usize>()
                            .map_err(|_| ConfigError(format!("bad nu entry '{tok}'")))
                    })
                    .collect::<Result<_>>()?;
                if nu.iter().any(|&i| i == 0 || i > dim) {
                    return err("nu entries are 1-based input indices");
                }
                Experiment::Custom { model, dim, nu: nu.into_iter().map(|i| i - 1).collect() }
            }
            other => return err(format!("unknown experiment '{other}'")),
        };

        Ok(ExperimentConfig {
            experiment,
            seed,
            n,
            n_w,
            mode,
            bootstrap_reps,
            bootstrap_level,
            bootstrap_mode,
            out: kv.get("out").map(String::from),
            format,
            timing,
        })
    }

    pub fn bootstrap_mode(&self) -> Mode {
        self.bootstrap_mode
    }
}
