//! Run configuration: defaults, then a `key=value` file, then flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuMode {
    Explicit,
    RandomSphere,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kappa_list: Vec<f64>,
    pub mu_mode: MuMode,
    pub mu: Option<[f64; 4]>,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub grid: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kappa_list: vec![4.0],
            mu_mode: MuMode::Explicit,
            mu: None,
            trials: 100,
            seed: 42,
            tol: 1e-6,
            grid: 256,
            output_dir: PathBuf::from("q4lab-out"),
        }
    }
}

/// Values given on the command line; `None` leaves the lower layer alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub kappa: Vec<f64>,
    pub mu: Option<[f64; 4]>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub grid: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn parse_mu(text: &str) -> Result<[f64; 4]> {
    let v = parse_list(text)?;
    match v.as_slice() {
        &[a, b, c, d] => Ok([a, b, c, d]),
        _ => bail!("mu needs four comma-separated numbers, got {}", v.len()),
    }
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad number {x:?}")))
        .collect()
}

impl RunConfig {
    pub fn load(file: Option<&Path>, flags: &Overrides) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_text(&text).with_context(|| format!("in {}", path.display()))?;
        }
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    /// One `key = value` per line; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected key=value", n + 1))?;
            let value = value.trim();
            let at = || format!("line {}: {}", n + 1, key.trim());
            match key.trim() {
                "kappa" => self.kappa_list = parse_list(value).with_context(at)?,
                "mu" => self.mu = Some(parse_mu(value).with_context(at)?),
                "mu_mode" => {
                    self.mu_mode = match value {
                        "explicit" => MuMode::Explicit,
                        "random_sphere" => MuMode::RandomSphere,
                        other => bail!("{}: unknown mu_mode {other:?}", at()),
                    }
                }
                "trials" => self.trials = value.parse().with_context(at)?,
                "seed" => self.seed = value.parse().with_context(at)?,
                "tol" => self.tol = value.parse().with_context(at)?,
                "grid" => self.grid = value.parse().with_context(at)?,
                "out" | "output_dir" => self.output_dir = PathBuf::from(value),
                other => bail!("line {}: unknown key {other:?}", n + 1),
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, flags: &Overrides) {
        if !flags.kappa.is_empty() {
            self.kappa_list = flags.kappa.clone();
        }
        if let Some(mu) = flags.mu {
            self.mu = Some(mu);
            self.mu_mode = MuMode::Explicit;
        }
        if let Some(t) = flags.trials {
            self.trials = t;
        }
        if let Some(s) = flags.seed {
            self.seed = s;
        }
        if let Some(t) = flags.tol {
            self.tol = t;
        }
        if let Some(g) = flags.grid {
            self.grid = g;
        }
        if let Some(o) = &flags.out {
            self.output_dir = o.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa_list.is_empty() {
            bail!("no kappa given");
        }
        if let Some(k) = self.kappa_list.iter().find(|&&k| !(k > 1.0 && k.is_finite())) {
            bail!("kappa must exceed 1, got {k}");
        }
        if self.trials < 1 {
            bail!("trials must be at least 1");
        }
        if !(self.tol > 0.0) {
            bail!("tol must be positive, got {}", self.tol);
        }
        if self.grid < 8 {
            bail!("grid must be at least 8, got {}", self.grid);
        }
        if let Some(mu) = self.mu {
            if mu.iter().any(|x| !x.is_finite()) {
                bail!("mu must be finite");
            }
        }
        Ok(())
    }
}
