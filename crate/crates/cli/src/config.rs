//! Settings shared by every subcommand, resolved from command-line flags, an
//! optional flat `key = value` file and an optional preset, in that order of
//! precedence.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use dynwalk::estimate::{Method, DEFAULT_TOL};
use dynwalk::moments::{ModelDims, DEFAULT_FD_STEP};
use dynwalk::sim::DEFAULT_BURN_IN;
use dynwalk::study::{curve_grid, StudyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    #[value(name = "paper-s6")]
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Uniform,
    First,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Vertex count
    #[arg(long)]
    pub n: Option<usize>,
    /// Walker count
    #[arg(long)]
    pub m: Option<usize>,
    /// Edge probability, or a comma-separated grid for studies
    #[arg(long)]
    pub p: Option<String>,
    /// Observation length T
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long = "burn-in")]
    pub burn_in: Option<usize>,
    /// Replication count R
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// mom, mom-known-mean or ls; comma-separated where several are allowed
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "fd-step")]
    pub fd_step: Option<f64>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    /// Output path; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Flat key = value file mirroring the flags
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_list<T>(raw: &str, what: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| anyhow!("bad {what} {s:?}: {e}")))
        .collect()
}

fn parse_value<T>(key: &str, raw: &str) -> Result<T>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| anyhow!("config key {key}: bad value {raw:?}: {e}"))
}

impl Common {
    /// Parses a config file. Blank lines and `#` comments are skipped; keys
    /// are flag names without the leading dashes.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_str_config(&text)
    }

    pub fn from_str_config(text: &str) -> Result<Self> {
        let mut c = Common::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| anyhow!("config line {}: expected key = value", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "n" => c.n = Some(parse_value(key, value)?),
                "m" => c.m = Some(parse_value(key, value)?),
                "p" => c.p = Some(value.to_string()),
                "t" => c.t = Some(parse_value(key, value)?),
                "burn-in" => c.burn_in = Some(parse_value(key, value)?),
                "r" => c.r = Some(parse_value(key, value)?),
                "seed" => c.seed = Some(parse_value(key, value)?),
                "method" => c.method = Some(value.to_string()),
                "tol" => c.tol = Some(parse_value(key, value)?),
                "fd-step" => c.fd_step = Some(parse_value(key, value)?),
                "init" => c.init = Some(InitArg::from_str(value, false).map_err(|e| anyhow!("config key init: {e}"))?),
                "out" => c.out = Some(PathBuf::from(value)),
                "preset" => {
                    c.preset = Some(Preset::from_str(value, false).map_err(|e| anyhow!("config key preset: {e}"))?)
                }
                other => bail!("config line {}: unknown key {other:?}", lineno + 1),
            }
        }
        Ok(c)
    }

    /// Fills every unset field from `fallback`.
    pub fn or(self, fallback: Common) -> Common {
        Common {
            n: self.n.or(fallback.n),
            m: self.m.or(fallback.m),
            p: self.p.or(fallback.p),
            t: self.t.or(fallback.t),
            burn_in: self.burn_in.or(fallback.burn_in),
            r: self.r.or(fallback.r),
            seed: self.seed.or(fallback.seed),
            method: self.method.or(fallback.method),
            tol: self.tol.or(fallback.tol),
            fd_step: self.fd_step.or(fallback.fd_step),
            init: self.init.or(fallback.init),
            out: self.out.or(fallback.out),
            preset: self.preset.or(fallback.preset),
            config: self.config,
        }
    }

    /// Merges in the config file named by `--config`, if any.
    pub fn with_file(self) -> Result<Common> {
        match self.config.clone() {
            Some(path) => Ok(self.or(Common::from_file(&path)?)),
            None => Ok(self),
        }
    }

    fn preset_study(&self) -> Option<StudyConfig> {
        self.preset.map(|Preset::Reference| StudyConfig::reference_study())
    }

    pub fn dims(&self) -> Result<ModelDims> {
        let preset = self.preset_study();
        let n = self.n.or(preset.as_ref().map(|s| s.dims.n())).ok_or_else(|| anyhow!("missing --n"))?;
        let m = self.m.or(preset.as_ref().map(|s| s.dims.m())).ok_or_else(|| anyhow!("missing --m"))?;
        Ok(ModelDims::new(n, m)?)
    }

    pub fn p_list(&self) -> Result<Option<Vec<f64>>> {
        self.p.as_deref().map(|s| parse_list(s, "probability")).transpose()
    }

    pub fn single_p(&self) -> Result<f64> {
        match self.p_list()?.as_deref() {
            Some([p]) => Ok(*p),
            Some(_) => bail!("--p must be a single value here"),
            None => bail!("missing --p"),
        }
    }

    pub fn methods(&self) -> Result<Option<Vec<Method>>> {
        self.method.as_deref().map(|s| parse_list(s, "method")).transpose()
    }

    pub fn single_method(&self, default: Method) -> Result<Method> {
        match self.methods()?.as_deref() {
            Some([m]) => Ok(*m),
            Some(_) => bail!("--method must name a single estimator here"),
            None => Ok(default),
        }
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in.or(self.preset_study().map(|s| s.burn_in)).unwrap_or(DEFAULT_BURN_IN)
    }

    /// Study definition; `default_grid` is used when neither `--p` nor a preset supplies one.
    pub fn study(&self, default_grid: Option<Vec<f64>>) -> Result<StudyConfig> {
        let preset = self.preset_study();
        let p_grid = match (self.p_list()?, default_grid, &preset) {
            (Some(g), _, _) => g,
            (None, Some(g), _) => g,
            (None, None, Some(s)) => s.p_grid.clone(),
            (None, None, None) => bail!("missing --p"),
        };
        let cfg = StudyConfig {
            dims: self.dims()?,
            t: self.t.or(preset.as_ref().map(|s| s.t)).unwrap_or(4000),
            burn_in: self.burn_in(),
            reps: self.r.or(preset.as_ref().map(|s| s.reps)).unwrap_or(200),
            p_grid,
            base_seed: self.seed.or(preset.as_ref().map(|s| s.base_seed)).unwrap_or(1),
            methods: self.methods()?.unwrap_or_else(|| Method::ALL.to_vec()),
            fd_step: self.fd_step.unwrap_or(DEFAULT_FD_STEP),
            tol: self.tol(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Grid for the comparison curves when `--p` is absent.
    pub fn curve_grid(&self) -> Option<Vec<f64>> {
        Some(curve_grid())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let c = Common::from_str_config(
            "# study\nn = 5\nm=3\np = 0.2, 0.4\nburn-in = 10\nmethod = ls\npreset = paper-s6\ninit = first\n\n",
        )
        .unwrap();
        assert_eq!((c.n, c.m, c.burn_in), (Some(5), Some(3), Some(10)));
        assert_eq!(c.p_list().unwrap(), Some(vec![0.2, 0.4]));
        assert_eq!(c.methods().unwrap(), Some(vec![Method::Ls]));
        assert_eq!(c.preset, Some(Preset::Reference));
        assert_eq!(c.init, Some(InitArg::First));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(Common::from_str_config("q = 1").is_err());
        assert!(Common::from_str_config("n 5").is_err());
        assert!(Common::from_str_config("n = five").is_err());
    }

    #[test]
    fn flags_override_file_and_preset() {
        let flags = Common { r: Some(20), seed: Some(42), ..Default::default() };
        let file = Common::from_str_config("preset = paper-s6\nr = 7\nt = 100").unwrap();
        let study = flags.or(file).study(None).unwrap();
        assert_eq!(study.reps, 20);
        assert_eq!(study.base_seed, 42);
        assert_eq!(study.t, 100);
        assert_eq!(study.dims, ModelDims::new(7, 14).unwrap());
        assert_eq!(study.p_grid, vec![0.25, 0.5, 0.75]);
    }

    #[test]
    fn missing_values_are_reported() {
        assert!(Common::default().dims().is_err());
        assert!(Common { n: Some(3), m: Some(2), ..Default::default() }.study(None).is_err());
        let two = Common { p: Some("0.1,0.2".into()), ..Default::default() };
        assert!(two.single_p().is_err());
    }
}
