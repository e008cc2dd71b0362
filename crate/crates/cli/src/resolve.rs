//! Merging flags, environment and config file into a [`RunConfig`].

use std::path::{Path, PathBuf};

use connective::gibbs::Boundary;
use serde::{Deserialize, Serialize};

use crate::args::{Command, Common, Sampling, Scenario};
use crate::config::{
    count_from_f64, load_config, parse_sweep, FileConfig, Identity, LoadedConfig, PotentialSpec, SpaceSpec, Sweep,
    ThresholdMethod,
};
use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "CONNECTIVE_SEED";
pub const DEFAULT_CONFIDENCE: f64 = 0.99;
pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_K_MAX: usize = 12;
pub const DEFAULT_CONFIGS: u64 = 1000;
pub const DEFAULT_VERIFY_CONFIGS: u64 = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Flag,
    Env,
    Config,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Jsonl,
}

impl Format {
    fn from_path(p: &Path) -> Format {
        match p.extension().and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            Some("jsonl") => Format::Jsonl,
            _ => Format::Json,
        }
    }
}

/// Subcommand parameters after defaults are applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Params {
    VkEstimate {
        k: Vec<usize>,
        samples: u64,
    },
    DeltaBound {
        k: Vec<usize>,
        samples: u64,
        include_exact: bool,
        include_bound: bool,
        inputs: Vec<PathBuf>,
    },
    Threshold {
        method: ThresholdMethod,
        k: Vec<usize>,
        samples: u64,
    },
    FixedPoint {
        lambda: Option<f64>,
        sweep: Option<Sweep>,
        c_phi: f64,
    },
    Contraction {
        lambda: f64,
        c_phi: f64,
        tau1: f64,
        tau2: f64,
        k_max: usize,
    },
    SampleGibbs {
        lambda: f64,
        #[serde(rename = "box")]
        box_sides: Vec<f64>,
        boundary: Boundary,
        n: u64,
    },
    Verify {
        identity: Identity,
        lambda: f64,
        #[serde(rename = "box")]
        box_sides: Vec<f64>,
        boundary: Boundary,
        n: u64,
        v: Vec<f64>,
        points: Vec<Vec<f64>>,
        grid: usize,
        reps: usize,
    },
    Report {
        dir: PathBuf,
    },
}

impl Params {
    pub fn name(&self) -> &'static str {
        match self {
            Params::VkEstimate { .. } => "vk-estimate",
            Params::DeltaBound { .. } => "delta-bound",
            Params::Threshold { .. } => "threshold",
            Params::FixedPoint { .. } => "fixed-point",
            Params::Contraction { .. } => "contraction",
            Params::SampleGibbs { .. } => "sample-gibbs",
            Params::Verify { .. } => "verify",
            Params::Report { .. } => "report",
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Params,
    pub potential: Option<PotentialSpec>,
    pub space: Option<SpaceSpec>,
    pub seed: u64,
    pub seed_source: SeedSource,
    pub workers: usize,
    pub confidence: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

/// A resolved run plus the files it was read from.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: RunConfig,
    pub config_file: Option<PathBuf>,
    pub json: bool,
}

fn absolute(p: &Path) -> CliResult<PathBuf> {
    std::path::absolute(p).map_err(|e| CliError::io(p, e))
}

fn missing(flag: &str) -> CliError {
    CliError::config(format!("missing `--{flag}` (or `run.{}` in the config)", flag.replace('-', "_")))
}

fn potential_from_flags(c: &Common) -> CliResult<Option<PotentialSpec>> {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| CliError::config(format!("`--potential` needs `--{name}`")));
    let Some(kind) = c.potential.as_deref() else {
        if c.r.is_some() || c.a.is_some() || c.table.is_some() {
            return Err(CliError::config("`--r`, `--a` and `--table` require `--potential`"));
        }
        return Ok(None);
    };
    Ok(Some(match kind {
        "hard_sphere" => PotentialSpec::HardSphere { r: need(c.r, "r")? },
        "hard_cube" => PotentialSpec::HardCube { r: need(c.r, "r")? },
        "strauss" => PotentialSpec::Strauss {
            r: need(c.r, "r")?,
            a: need(c.a, "a")?,
        },
        "radial_table" => PotentialSpec::RadialTable {
            table: absolute(c.table.as_deref().ok_or_else(|| CliError::config("`--potential radial_table` needs `--table`"))?)?,
        },
        other => return Err(CliError::config(format!("unknown potential kind `{other}`"))),
    }))
}

fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> CliResult<(u64, SeedSource)> {
    if let Some(s) = flag {
        return Ok((s, SeedSource::Flag));
    }
    if let Ok(raw) = std::env::var(SEED_ENV) {
        let s = raw
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("{SEED_ENV}=`{raw}` is not a 64-bit unsigned integer")))?;
        return Ok((s, SeedSource::Env));
    }
    if let Some(s) = file {
        return Ok((s, SeedSource::Config));
    }
    Ok((rand::random(), SeedSource::Random))
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, usize::from)
}

struct Merge<'a> {
    common: &'a Common,
    file: FileConfig,
}

impl Merge<'_> {
    fn potential(&self) -> CliResult<Option<PotentialSpec>> {
        Ok(potential_from_flags(self.common)?.or_else(|| self.file.potential.clone()))
    }

    fn space(&self) -> Option<SpaceSpec> {
        let file = self.file.space;
        let d = self.common.d.or(file.map(|s| s.d))?;
        let norm = self.common.norm.or(file.map(|s| s.norm)).unwrap_or(connective::Norm::L2);
        Some(SpaceSpec { d, norm })
    }

    fn samples(&self, flag: Option<u64>) -> CliResult<u64> {
        match (flag, self.file.run.samples) {
            (Some(n), _) => Ok(n),
            (None, Some(x)) => count_from_f64(x).map_err(|e| CliError::config(format!("run.samples: {e}"))),
            (None, None) => Ok(DEFAULT_SAMPLES),
        }
    }

    fn k(&self, s: &Sampling, default: Option<Vec<usize>>) -> CliResult<Vec<usize>> {
        let k = if s.k.is_empty() {
            self.file.run.k.clone().or(default).ok_or_else(|| missing("k"))?
        } else {
            s.k.clone()
        };
        if k.contains(&0) {
            return Err(CliError::config("chain lengths k must be at least 1"));
        }
        Ok(k)
    }

    fn sampling(&self, s: &Sampling, default_k: Option<Vec<usize>>) -> CliResult<(Vec<usize>, u64)> {
        Ok((self.k(s, default_k)?, self.samples(s.samples)?))
    }

    fn lambda(&self, flag: Option<f64>) -> Option<f64> {
        flag.or(self.file.run.lambda)
    }

    /// `--c-phi`, else the temperedness constant of the configured potential.
    fn c_phi(&self, flag: Option<f64>) -> CliResult<f64> {
        if let Some(c) = flag.or(self.file.run.c_phi) {
            return Ok(c);
        }
        let (Some(p), Some(s)) = (self.potential()?, self.space()) else {
            return Err(CliError::config("need `--c-phi` or a config with [potential] and [space]"));
        };
        Ok(p.build()?.temperedness_constant(&s.build()?)?)
    }

    fn scenario(&self, s: &Scenario, default_n: u64) -> CliResult<(f64, Vec<f64>, Boundary, u64)> {
        let run = &self.file.run;
        let lambda = self.lambda(s.lambda).ok_or_else(|| missing("lambda"))?;
        let mut sides = s.box_sides.clone().map(|c| c.0).or(run.box_sides.clone()).ok_or_else(|| missing("box"))?;
        if let Some(d) = self.space().map(|s| s.d) {
            if sides.len() == 1 && d > 1 {
                sides = vec![sides[0]; d];
            }
        }
        let boundary = s.boundary.or(run.boundary).unwrap_or_default();
        let n = s.n.or(run.n.map(|n| n as u64)).unwrap_or(default_n);
        Ok((lambda, sides, boundary, n))
    }
}

/// Builds the run configuration for a parsed subcommand.
pub fn resolve(command: Command) -> CliResult<Resolved> {
    let common = match &command {
        Command::VkEstimate { common, .. }
        | Command::DeltaBound { common, .. }
        | Command::Threshold { common, .. }
        | Command::FixedPoint { common, .. }
        | Command::Contraction { common, .. }
        | Command::SampleGibbs { common, .. }
        | Command::Verify { common, .. }
        | Command::Report { common, .. } => common.clone(),
        Command::Replay { .. } => return Err(CliError::config("replay has no run configuration")),
    };
    let loaded = common.config.as_deref().map(load_config).transpose()?;
    let config_file = loaded.as_ref().map(|l: &LoadedConfig| absolute(&l.path)).transpose()?;
    let file = loaded.map(|l| l.file).unwrap_or_default();
    let m = Merge { common: &common, file };
    let run = &m.file.run;

    let params = match &command {
        Command::VkEstimate { sampling, .. } => {
            let (k, samples) = m.sampling(sampling, None)?;
            Params::VkEstimate { k, samples }
        }
        Command::DeltaBound {
            sampling,
            include_exact,
            include_bound,
            inputs,
            ..
        } => {
            let (k, samples) = m.sampling(sampling, Some(Vec::new()))?;
            let inputs = if inputs.is_empty() {
                run.inputs.clone().unwrap_or_default()
            } else {
                inputs.clone()
            };
            let inputs = inputs.iter().map(|p| absolute(p)).collect::<CliResult<Vec<_>>>()?;
            let include_exact = *include_exact || run.include_exact.unwrap_or(false);
            let include_bound = *include_bound || run.include_bound.unwrap_or(false);
            if k.is_empty() && inputs.is_empty() && !include_exact && !include_bound {
                return Err(CliError::config(
                    "delta-bound needs `--k`, `--input`, `--include-exact` or `--include-bound`",
                ));
            }
            Params::DeltaBound {
                k,
                samples,
                include_exact,
                include_bound,
                inputs,
            }
        }
        Command::Threshold { sampling, method, .. } => {
            let (k, samples) = m.sampling(sampling, Some(vec![2]))?;
            Params::Threshold {
                method: method.or(run.method).unwrap_or_default(),
                k,
                samples,
            }
        }
        Command::FixedPoint { lambda, c_phi, sweep, .. } => {
            let lambda = m.lambda(*lambda);
            let sweep = sweep
                .clone()
                .or(run.sweep.clone())
                .map(|s| parse_sweep(&s).map_err(CliError::Config))
                .transpose()?;
            if lambda.is_none() && sweep.is_none() {
                return Err(CliError::config("fixed-point needs `--lambda` or `--sweep`"));
            }
            Params::FixedPoint {
                lambda,
                sweep,
                c_phi: m.c_phi(*c_phi)?,
            }
        }
        Command::Contraction {
            lambda,
            c_phi,
            tau1,
            tau2,
            k_max,
            ..
        } => {
            let lambda = m.lambda(*lambda).ok_or_else(|| missing("lambda"))?;
            Params::Contraction {
                lambda,
                c_phi: m.c_phi(*c_phi)?,
                tau1: tau1.or(run.tau1).unwrap_or(0.0),
                tau2: tau2.or(run.tau2).unwrap_or(lambda),
                k_max: k_max.or(run.k_max).unwrap_or(DEFAULT_K_MAX),
            }
        }
        Command::SampleGibbs { scenario, .. } => {
            let (lambda, box_sides, boundary, n) = m.scenario(scenario, DEFAULT_CONFIGS)?;
            Params::SampleGibbs {
                lambda,
                box_sides,
                boundary,
                n,
            }
        }
        Command::Verify {
            scenario,
            identity,
            v,
            points,
            grid,
            reps,
            ..
        } => {
            let (lambda, box_sides, boundary, n) = m.scenario(scenario, DEFAULT_VERIFY_CONFIGS)?;
            let center: Vec<f64> = box_sides.iter().map(|s| 0.5 * s).collect();
            let v = v.clone().map(|c| c.0).or(run.v.clone()).unwrap_or(center);
            let points = points.clone().map(|p| p.0).or(run.points.clone()).unwrap_or_default();
            Params::Verify {
                identity: identity.or(run.identity).ok_or_else(|| missing("identity"))?,
                lambda,
                grid: grid.or(run.grid).unwrap_or(if box_sides.len() == 1 { 64 } else { 16 }),
                box_sides,
                boundary,
                n,
                v,
                points,
                reps: reps.or(run.reps).unwrap_or(1).max(1),
            }
        }
        Command::Report { dir, .. } => Params::Report {
            dir: absolute(&dir.clone().or(run.dir.clone()).ok_or_else(|| missing("dir"))?)?,
        },
        Command::Replay { .. } => unreachable!(),
    };

    let needs_potential = !matches!(
        params,
        Params::FixedPoint { .. } | Params::Contraction { .. } | Params::Report { .. }
    );
    let potential = m.potential()?;
    let space = m.space();
    if needs_potential {
        let p = potential.as_ref().ok_or_else(|| CliError::config("no potential: pass `--potential` or a config with [potential]"))?;
        if space.is_none() {
            return Err(CliError::config("no space: pass `--d` or a config with [space]"));
        }
        if let Some(t) = p.table() {
            if !t.is_file() {
                return Err(CliError::config(format!("radial table {} does not exist", t.display())));
            }
        }
    }
    if let Params::DeltaBound { inputs, .. } = &params {
        if let Some(p) = inputs.iter().find(|p| !p.is_file()) {
            return Err(CliError::config(format!("input {} does not exist", p.display())));
        }
    }

    let (seed, seed_source) = resolve_seed(common.seed, run.seed)?;
    let workers = common.workers.or(run.workers).unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(CliError::config("workers must be at least 1"));
    }
    let confidence = common.confidence.or(run.confidence).unwrap_or(DEFAULT_CONFIDENCE);
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(CliError::config(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let out = match &common.out {
        Some(p) => Some(absolute(p)?),
        None => run.out.as_deref().map(absolute).transpose()?,
    };
    let format = out.as_deref().map_or(Format::Json, Format::from_path);
    check_format(&params, format)?;

    Ok(Resolved {
        config: RunConfig {
            command: params,
            potential,
            space,
            seed,
            seed_source,
            workers,
            confidence,
            out,
            format,
        },
        config_file,
        json: common.json,
    })
}

pub(crate) fn check_format(params: &Params, format: Format) -> CliResult<()> {
    let ok = match format {
        Format::Json => true,
        Format::Csv => matches!(params, Params::VkEstimate { .. } | Params::FixedPoint { .. }),
        Format::Jsonl => matches!(params, Params::SampleGibbs { .. }),
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::config(format!(
            "{} cannot write {} output",
            params.name(),
            serde_json::to_string(&format).unwrap_or_default()
        )))
    }
}
