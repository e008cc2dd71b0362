//! The structured-text configuration file and flag value parsers.

use std::path::{Path, PathBuf};

use connective::gibbs::Boundary;
use connective::{Norm, Potential, RadialTable, Space};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    HardSphere { r: f64 },
    HardCube { r: f64 },
    Strauss { r: f64, a: f64 },
    /// CSV with header `s,phi`; relative paths resolve against the config
    /// file's directory.
    RadialTable { table: PathBuf },
}

impl PotentialSpec {
    pub fn build(&self) -> CliResult<Potential> {
        Ok(match self {
            PotentialSpec::HardSphere { r } => Potential::hard_sphere(*r)?,
            PotentialSpec::HardCube { r } => Potential::hard_cube(*r)?,
            PotentialSpec::Strauss { r, a } => Potential::strauss(*r, *a)?,
            PotentialSpec::RadialTable { table } => {
                let file = std::fs::File::open(table).map_err(|e| CliError::io(table, e))?;
                Potential::radial_table(RadialTable::from_csv(file)?)
            }
        })
    }

    pub(crate) fn resolve(&mut self, base: &Path) {
        if let PotentialSpec::RadialTable { table } = self {
            *table = base.join(&*table);
        }
    }

    pub(crate) fn table(&self) -> Option<&Path> {
        match self {
            PotentialSpec::RadialTable { table } => Some(table),
            _ => None,
        }
    }

    /// Threshold unit: `v_{d,r}` when `C_phi` is the volume of the
    /// excluded ball.
    pub fn unit(&self, d: usize) -> String {
        match self {
            PotentialSpec::HardSphere { .. } | PotentialSpec::HardCube { .. } => format!("v_{{{d},r}}"),
            _ => "C_phi".to_string(),
        }
    }
}

fn default_norm() -> Norm {
    Norm::L2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub d: usize,
    #[serde(default = "default_norm")]
    pub norm: Norm,
}

impl SpaceSpec {
    pub fn build(&self) -> CliResult<Space> {
        Ok(Space::new(self.d, self.norm)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Identity {
    Recursion,
    Kpoint,
    Domination,
    Ruelle,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ThresholdMethod {
    /// Exact `V_2` when a closed form exists, otherwise Monte Carlo.
    #[default]
    Auto,
    Exact,
    MonteCarlo,
    Bound,
}

/// The `[run]` section. Every key is optional; flags take precedence.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub confidence: Option<f64>,
    pub out: Option<PathBuf>,
    pub k: Option<Vec<usize>>,
    pub samples: Option<f64>,
    pub method: Option<ThresholdMethod>,
    pub include_exact: Option<bool>,
    pub include_bound: Option<bool>,
    pub inputs: Option<Vec<PathBuf>>,
    pub lambda: Option<f64>,
    pub c_phi: Option<f64>,
    pub sweep: Option<String>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub k_max: Option<usize>,
    #[serde(rename = "box")]
    pub box_sides: Option<Vec<f64>>,
    pub boundary: Option<Boundary>,
    pub n: Option<usize>,
    pub identity: Option<Identity>,
    pub v: Option<Vec<f64>>,
    pub points: Option<Vec<Vec<f64>>>,
    pub grid: Option<usize>,
    pub reps: Option<usize>,
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub potential: Option<PotentialSpec>,
    pub space: Option<SpaceSpec>,
    #[serde(default)]
    pub run: RunSection,
}

/// A parsed config file with its paths resolved against its directory.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub file: FileConfig,
}

pub fn parse_config_str(text: &str) -> CliResult<FileConfig> {
    toml::from_str(text).map_err(|e| {
        let msg = e.to_string();
        if msg.contains("unknown field") {
            CliError::UnknownKey(msg)
        } else {
            CliError::Config(msg)
        }
    })
}

pub fn load_config(path: &Path) -> CliResult<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let mut file = parse_config_str(&text).map_err(|e| match e {
        CliError::UnknownKey(m) => CliError::UnknownKey(format!("{}: {m}", path.display())),
        other => CliError::config(format!("{}: {other}", path.display())),
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    if let Some(p) = file.potential.as_mut() {
        p.resolve(&base);
    }
    let run = &mut file.run;
    for slot in [&mut run.out, &mut run.dir] {
        if let Some(p) = slot.as_mut() {
            *p = base.join(&*p);
        }
    }
    if let Some(inputs) = run.inputs.as_mut() {
        for p in inputs {
            *p = base.join(&*p);
        }
    }
    Ok(LoadedConfig {
        path: path.to_path_buf(),
        file,
    })
}

/// Parses a sample count, accepting float notation such as `1e6`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    count_from_f64(x)
}

pub fn count_from_f64(x: f64) -> Result<u64, String> {
    if x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x <= 9.007_199_254_740_992e15 {
        Ok(x as u64)
    } else {
        Err(format!("`{x}` is not a whole non-negative count"))
    }
}

/// Parses box sides written as `5x5` or `8`.
pub fn parse_box(s: &str) -> Result<Vec<f64>, String> {
    s.split(['x', 'X'])
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad box side `{t}` in `{s}`")))
        .collect()
}

/// Parses a point written as `2,2`.
pub fn parse_point(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad coordinate `{t}` in `{s}`")))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let h = (self.end - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.start + h * i as f64).collect()
    }
}

/// Parses `a:b:n`, `n` evenly spaced values from `a` to `b` inclusive.
pub fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(format!("sweep `{s}` must have the form a:b:n"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad sweep bound `{t}`"));
    let steps: usize = n.trim().parse().map_err(|_| format!("bad sweep count `{n}`"))?;
    if steps == 0 {
        return Err("sweep needs at least one step".into());
    }
    Ok(Sweep {
        start: num(a)?,
        end: num(b)?,
        steps,
    })
}

pub fn parse_boundary(s: &str) -> Result<Boundary, String> {
    match s {
        "free" => Ok(Boundary::Free),
        "periodic" => Ok(Boundary::Periodic),
        _ => Err(format!("boundary must be `free` or `periodic`, got `{s}`")),
    }
}

pub fn parse_norm(s: &str) -> Result<Norm, String> {
    match s {
        "l2" => Ok(Norm::L2),
        "linf" => Ok(Norm::Linf),
        _ => Err(format!("norm must be `l2` or `linf`, got `{s}`")),
    }
}
