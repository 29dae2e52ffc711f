//! Flat `key = value` configuration with `#` comments. Each command takes
//! the keys it understands; anything left over is an unknown key.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use fracblow::spde::{CoeffSpec, InitSpec, SpdeConfig};
use fracblow::Grid;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Default, Clone)]
pub struct Params {
    values: BTreeMap<String, String>,
}

fn parse_pair(line: &str, origin: &str) -> Result<(String, String)> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("{origin}: expected key = value, found {line:?}")))?;
    let key = k.trim();
    if key.is_empty() {
        return Err(ConfigError(format!("{origin}: empty key")));
    }
    Ok((key.to_string(), v.trim().to_string()))
}

impl Params {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = parse_pair(line, &format!("line {}", i + 1))?;
            values.insert(k, v);
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Apply a `--set key=value` override.
    pub fn set(&mut self, pair: &str) -> Result<()> {
        let (k, v) = parse_pair(pair, "--set")?;
        self.values.insert(k, v);
        Ok(())
    }

    pub fn insert(&mut self, key: &str, value: String) {
        self.values.insert(key.to_string(), value);
    }

    pub fn remove_prefix(&mut self, prefix: &str) {
        self.values.retain(|k, _| !k.starts_with(prefix));
    }

    pub fn take_str(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| ConfigError(format!("key `{key}`: cannot parse {raw:?}"))),
        }
    }

    pub fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.take(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?
            .ok_or_else(|| ConfigError(format!("key `{key}` is required")))
    }

    pub fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| ConfigError(format!("key `{key}`: cannot parse {s:?}")))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Fails on any key nobody consumed.
    pub fn finish(self) -> Result<()> {
        if self.values.is_empty() {
            Ok(())
        } else {
            let keys: Vec<&str> = self.values.keys().map(String::as_str).collect();
            Err(ConfigError(format!("unknown key(s): {}", keys.join(", "))))
        }
    }
}

fn coefficient(p: &mut Params, prefix: &str) -> Result<CoeffSpec> {
    let kind = p.take_str(&format!("{prefix}.kind")).unwrap_or_else(|| "zero".into());
    let key = |f: &str| format!("{prefix}.{f}");
    Ok(match kind.as_str() {
        "zero" => CoeffSpec::Zero,
        "constant" => CoeffSpec::Constant(p.require(&key("c"))?),
        "linear" => CoeffSpec::Linear(p.require(&key("lambda"))?),
        "power" => CoeffSpec::Power {
            k: p.take_or(&key("k"), 1.0)?,
            exponent: p.require(&key("exponent"))?,
        },
        other => {
            return Err(ConfigError(format!(
                "key `{prefix}.kind`: expected zero, constant, linear or power, got {other:?}"
            )))
        }
    })
}

fn initial_datum(p: &mut Params, grid: &Grid) -> Result<InitSpec> {
    let kind = p.take_str("init.kind").unwrap_or_else(|| "constant".into());
    Ok(match kind.as_str() {
        "zero" => InitSpec::Zero,
        "constant" => InitSpec::Constant(p.take_or("init.kappa", 1.0)?),
        "bump" => {
            let kappa: f64 = p.take_or("init.kappa", 1.0)?;
            let amplitude: f64 = p.take_or("init.bump_amplitude", 1.0)?;
            let width: f64 = p.take_or("init.bump_width", 1.0)?;
            if !(width > 0.0) {
                return Err(ConfigError("key `init.bump_width`: must be positive".into()));
            }
            InitSpec::Samples(
                grid.points()
                    .map(|x| kappa + amplitude * (-(x / width).powi(2)).exp())
                    .collect(),
            )
        }
        "file" => {
            let path: String = p.require("init.file")?;
            let file = std::fs::File::open(&path)
                .map_err(|e| ConfigError(format!("key `init.file`: cannot open {path}: {e}")))?;
            let snaps = fracblow::io::read_snapshots(file)
                .map_err(|e| ConfigError(format!("key `init.file`: {e}")))?;
            let first = snaps
                .into_iter()
                .next()
                .ok_or_else(|| ConfigError("key `init.file`: no rows".into()))?;
            InitSpec::Samples(first.values)
        }
        other => {
            return Err(ConfigError(format!(
                "key `init.kind`: expected zero, constant, bump or file, got {other:?}"
            )))
        }
    })
}

/// Build an [`SpdeConfig`] from the SPDE keys. Validation happens later so
/// that every error names its key the same way.
pub fn spde_config(p: &mut Params) -> Result<SpdeConfig> {
    let d = SpdeConfig::default();
    let half_width = p.take_or("domain.half_width", d.half_width)?;
    let n_grid = p.take_or("grid.n", d.n_grid)?;
    let grid = Grid::new(half_width, n_grid).map_err(|e| ConfigError(e.to_string()))?;
    Ok(SpdeConfig {
        alpha: p.take_or("alpha", d.alpha)?,
        half_width,
        n_grid,
        dt: p.take_or("dt", d.dt)?,
        horizon: p.take_or("horizon", d.horizon)?,
        drift: coefficient(p, "drift")?,
        diffusion: coefficient(p, "diffusion")?,
        init: initial_datum(p, &grid)?,
        seed: p.take_or("seed", d.seed)?,
        blowup_threshold: p.take_or("blowup_threshold", d.blowup_threshold)?,
    })
}
