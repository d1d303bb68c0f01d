//! Flat `key = value` run configuration shared by all suites.

use serde::Serialize;

use crate::coupling::OracleSpec;
use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    /// Overrides the main sample count of every suite when set.
    pub replicas: Option<usize>,
    pub depth: u32,
    pub significance: f64,
    pub out_dir: String,

    pub minima_paths: usize,
    pub minima_kmax: u32,
    pub arcsine_samples: usize,

    pub a: f64,
    pub b: f64,
    pub density_samples: usize,
    pub density_depth: u32,
    pub density_grid: usize,
    pub tail_paths: usize,
    pub tail_kmax: u32,

    pub height: f64,
    pub oracle: String,
    pub oracle2: String,
    pub slope: f64,
    pub tilt: f64,
    pub oracle_scale: f64,
    pub nested_paths: usize,
    pub nested_depth: u32,
    pub nested_levels: usize,
    pub coupling_replicas: usize,
    pub race_steps: usize,
    pub corr_steps: usize,
    pub corr_replicas: usize,
    pub level: f64,

    pub instances: usize,
    pub max_ground: usize,
    pub instance_file: String,

    pub grid_l: i64,
    pub sweeps: usize,
    pub shift_lo: i64,
    pub shift_hi: i64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            replicas: None,
            depth: 14,
            significance: 1e-3,
            out_dir: "out".into(),
            minima_paths: 100,
            minima_kmax: 5,
            arcsine_samples: 100_000,
            a: 1.0,
            b: 1.0,
            density_samples: 100_000,
            density_depth: 10,
            density_grid: 10,
            tail_paths: 400,
            tail_kmax: 6,
            height: 30.0,
            oracle: "iid-uniform".into(),
            oracle2: String::new(),
            slope: 1.0,
            tilt: 0.8,
            oracle_scale: 1.0,
            nested_paths: 32,
            nested_depth: 12,
            nested_levels: 8,
            coupling_replicas: 500,
            race_steps: 10,
            corr_steps: 5,
            corr_replicas: 20_000,
            level: 10.0,
            instances: 200,
            max_ground: 8,
            instance_file: String::new(),
            grid_l: 256,
            sweeps: 50,
            shift_lo: -1,
            shift_hi: 5,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

impl RunConfig {
    /// Sets one field; keys accept `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let k = key.as_str();
        let v = value.trim();
        match k {
            "seed" => self.seed = parse(k, v)?,
            "replicas" => self.replicas = if v.is_empty() || v == "none" { None } else { Some(parse(k, v)?) },
            "depth" => self.depth = parse(k, v)?,
            "significance" => self.significance = parse(k, v)?,
            "out_dir" => self.out_dir = v.into(),
            "minima_paths" => self.minima_paths = parse(k, v)?,
            "minima_kmax" => self.minima_kmax = parse(k, v)?,
            "arcsine_samples" => self.arcsine_samples = parse(k, v)?,
            "a" => self.a = parse(k, v)?,
            "b" => self.b = parse(k, v)?,
            "density_samples" => self.density_samples = parse(k, v)?,
            "density_depth" => self.density_depth = parse(k, v)?,
            "density_grid" => self.density_grid = parse(k, v)?,
            "tail_paths" => self.tail_paths = parse(k, v)?,
            "tail_kmax" => self.tail_kmax = parse(k, v)?,
            "height" | "h" => self.height = parse(k, v)?,
            "oracle" => self.oracle = v.into(),
            "oracle2" => self.oracle2 = v.into(),
            "slope" => self.slope = parse(k, v)?,
            "tilt" => self.tilt = parse(k, v)?,
            "oracle_scale" => self.oracle_scale = parse(k, v)?,
            "nested_paths" => self.nested_paths = parse(k, v)?,
            "nested_depth" => self.nested_depth = parse(k, v)?,
            "nested_levels" => self.nested_levels = parse(k, v)?,
            "coupling_replicas" => self.coupling_replicas = parse(k, v)?,
            "race_steps" => self.race_steps = parse(k, v)?,
            "corr_steps" => self.corr_steps = parse(k, v)?,
            "corr_replicas" => self.corr_replicas = parse(k, v)?,
            "level" => self.level = parse(k, v)?,
            "instances" => self.instances = parse(k, v)?,
            "max_ground" => self.max_ground = parse(k, v)?,
            "instance_file" => self.instance_file = v.into(),
            "grid_l" => self.grid_l = parse(k, v)?,
            "sweeps" => self.sweeps = parse(k, v)?,
            "shift_lo" => self.shift_lo = parse(k, v)?,
            "shift_hi" => self.shift_hi = parse(k, v)?,
            _ => return Err(Error::Config(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Applies a config file body: one `key = value` per line, `#` comments.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain fields")
    }

    /// Field names and values in declaration order.
    pub fn pairs(&self) -> Vec<(String, String)> {
        match self.to_json() {
            serde_json::Value::Object(m) => m
                .into_iter()
                .map(|(k, v)| {
                    let v = match v {
                        serde_json::Value::String(s) => s,
                        serde_json::Value::Null => "none".into(),
                        other => other.to_string(),
                    };
                    (k, v)
                })
                .collect(),
            _ => unreachable!(),
        }
    }

    /// `key=value` pairs on one line, space separated.
    pub fn to_line(&self) -> String {
        self.pairs().iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
    }

    /// Config file body that reproduces this configuration.
    pub fn to_text(&self) -> String {
        self.pairs().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn oracle_spec(&self, id: &str) -> OracleSpec {
        OracleSpec {
            id: id.into(),
            slope: self.slope,
            tilt: self.tilt,
            scale: self.oracle_scale,
            nested_levels: self.nested_levels,
            nested_paths: self.nested_paths,
            nested_depth: self.nested_depth,
            nested_cells: 256,
            seed: crate::rng::derive_seed(self.seed, 0x0a11),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::Config(format!("significance {} must lie in (0,1)", self.significance)));
        }
        if self.replicas == Some(0) {
            return Err(Error::Config("replicas must be >= 1".into()));
        }
        Ok(())
    }

    pub fn count(&self, default: usize) -> usize {
        self.replicas.unwrap_or(default)
    }
}
