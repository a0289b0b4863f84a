use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::fedproto::{BitMode, Protocol, Recipe};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    CdpSgd,
    SoteriaGd,
    SoteriaSgd,
    SoteriaSvrg,
    SoteriaSaga,
    LdpSgd,
    LdpSvrg,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::CdpSgd,
        Algorithm::SoteriaGd,
        Algorithm::SoteriaSgd,
        Algorithm::SoteriaSvrg,
        Algorithm::SoteriaSaga,
        Algorithm::LdpSgd,
        Algorithm::LdpSvrg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::CdpSgd => "cdp-sgd",
            Algorithm::SoteriaGd => "soteriafl-gd",
            Algorithm::SoteriaSgd => "soteriafl-sgd",
            Algorithm::SoteriaSvrg => "soteriafl-svrg",
            Algorithm::SoteriaSaga => "soteriafl-saga",
            Algorithm::LdpSgd => "ldp-sgd",
            Algorithm::LdpSvrg => "ldp-svrg",
        }
    }

    pub fn protocol(self) -> Protocol {
        match self {
            Algorithm::CdpSgd | Algorithm::LdpSgd | Algorithm::LdpSvrg => Protocol::Direct,
            _ => Protocol::Shifted,
        }
    }

    pub fn estimator(self) -> EstimatorKind {
        match self {
            Algorithm::SoteriaGd => EstimatorKind::Gd,
            Algorithm::CdpSgd | Algorithm::SoteriaSgd | Algorithm::LdpSgd => EstimatorKind::Sgd,
            Algorithm::SoteriaSvrg | Algorithm::LdpSvrg => EstimatorKind::Svrg,
            Algorithm::SoteriaSaga => EstimatorKind::Saga,
        }
    }

    /// Uncompressed baselines always run with the identity compressor.
    pub fn forces_identity(self) -> bool {
        matches!(self, Algorithm::LdpSgd | Algorithm::LdpSvrg)
    }

    pub fn recipe(self) -> Recipe {
        match self {
            Algorithm::CdpSgd => Recipe::Thm1CdpSgd,
            Algorithm::SoteriaGd => Recipe::Cor1Gd,
            Algorithm::SoteriaSgd | Algorithm::LdpSgd => Recipe::Cor1Sgd,
            Algorithm::SoteriaSvrg | Algorithm::LdpSvrg => Recipe::Cor2Svrg,
            Algorithm::SoteriaSaga => Recipe::Cor3Saga,
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Libsvm { path: PathBuf },
    Mnist { images: PathBuf, labels: PathBuf, test: Option<(PathBuf, PathBuf)> },
    SyntheticA9a { rows: usize },
    SyntheticDigits { rows: usize, test_rows: usize },
    /// `½ Σ_k h_k (x_k − a_k)²` with centers `a ~ U(−1, 1)^d` and curvatures
    /// spaced linearly in `[h_min, h_max]`.
    Quadratic { dim: usize, samples: usize, h_min: f64, h_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaMode {
    Formula,
    Accountant,
    Off,
}

/// A value that is either given or taken from the algorithm's recipe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Setting<T> {
    Recipe,
    Value(T),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompressorChoice {
    Identity,
    RandK(usize),
    RandFraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub dataset: DatasetSource,
    pub lambda: f64,
    pub hidden: usize,
    pub n_clients: usize,
    pub shuffle_seed: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub clip: f64,
    pub compressor: CompressorChoice,
    pub eta: Setting<f64>,
    /// Stepsize grid; when set every value is run and tagged in the output.
    pub eta_grid: Option<Vec<f64>>,
    pub gamma: Setting<f64>,
    pub batch: Setting<usize>,
    pub p: Setting<f64>,
    pub rounds: u64,
    pub sigma_mode: SigmaMode,
    pub c: f64,
    pub phi0: f64,
    pub smoothness: Option<f64>,
    pub bits_per_scalar: u32,
    pub bit_mode: BitMode,
    pub eval_every: u64,
    pub seeds: Vec<u64>,
    pub output: Option<PathBuf>,
    pub parallel: bool,
    pub saga_memory_cap: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::SoteriaSgd,
            dataset: DatasetSource::SyntheticA9a { rows: crate::dataio::A9A_ROWS },
            lambda: 0.2,
            hidden: 64,
            n_clients: 10,
            shuffle_seed: 0,
            epsilon: 10.0,
            delta: 1e-3,
            clip: 0.5,
            compressor: CompressorChoice::RandFraction(0.05),
            eta: Setting::Recipe,
            eta_grid: None,
            gamma: Setting::Recipe,
            batch: Setting::Recipe,
            p: Setting::Recipe,
            rounds: 100,
            sigma_mode: SigmaMode::Formula,
            c: 1.0,
            phi0: 1.0,
            smoothness: None,
            bits_per_scalar: 32,
            bit_mode: BitMode::Paper,
            eval_every: 10,
            seeds: vec![0],
            output: None,
            parallel: true,
            saga_memory_cap: 1e8,
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn setting<T: FromStr>(key: &str, v: &str, word: &str) -> Result<Setting<T>> {
    if v == word || v == "recipe" {
        Ok(Setting::Recipe)
    } else {
        num(key, v).map(Setting::Value)
    }
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(|t| num(key, t.trim())).collect()
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got '{v}'"))),
    }
}

impl RunConfig {
    /// Parses flat `key = value` text. `#` starts a comment; unknown keys
    /// and repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", no + 1)))?;
            let k = k.trim().to_string();
            if kv.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: key '{k}' given twice", no + 1)));
            }
        }
        Self::from_pairs(kv)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn from_pairs(mut kv: BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut take = |k: &str| kv.remove(k);

        if let Some(v) = take("algorithm") {
            cfg.algorithm = v.parse()?;
        }
        let rows = take("rows").map(|v| num("rows", &v)).transpose()?;
        let dataset = take("dataset").unwrap_or_else(|| "synthetic_a9a".into());
        cfg.dataset = match dataset.as_str() {
            "synthetic_a9a" => DatasetSource::SyntheticA9a { rows: rows.unwrap_or(crate::dataio::A9A_ROWS) },
            "synthetic_digits" => DatasetSource::SyntheticDigits {
                rows: rows.unwrap_or(6000),
                test_rows: take("test_rows").map(|v| num("test_rows", &v)).transpose()?.unwrap_or(1000),
            },
            "libsvm" => DatasetSource::Libsvm {
                path: take("data_path").ok_or_else(|| Error::Config("libsvm dataset needs data_path".into()))?.into(),
            },
            "mnist" => {
                let need = |k: &str, v: Option<String>| v.ok_or_else(|| Error::Config(format!("mnist dataset needs {k}")));
                let images = need("train_images", take("train_images"))?.into();
                let labels = need("train_labels", take("train_labels"))?.into();
                let test = match (take("test_images"), take("test_labels")) {
                    (Some(i), Some(l)) => Some((i.into(), l.into())),
                    (None, None) => None,
                    _ => return Err(Error::Config("test_images and test_labels go together".into())),
                };
                DatasetSource::Mnist { images, labels, test }
            }
            "quadratic" => DatasetSource::Quadratic {
                dim: take("quad_dim").map(|v| num("quad_dim", &v)).transpose()?.unwrap_or(50),
                samples: rows.unwrap_or(200),
                h_min: take("quad_h_min").map(|v| num("quad_h_min", &v)).transpose()?.unwrap_or(0.1),
                h_max: take("quad_h_max").map(|v| num("quad_h_max", &v)).transpose()?.unwrap_or(1.0),
            },
            other => return Err(Error::Config(format!("unknown dataset '{other}'"))),
        };
        if let Some(v) = take("lambda") {
            cfg.lambda = num("lambda", &v)?;
        }
        if let Some(v) = take("hidden") {
            cfg.hidden = num("hidden", &v)?;
        }
        if let Some(v) = take("n_clients") {
            cfg.n_clients = num("n_clients", &v)?;
        }
        if let Some(v) = take("shuffle_seed") {
            cfg.shuffle_seed = num("shuffle_seed", &v)?;
        }
        if let Some(v) = take("epsilon") {
            cfg.epsilon = num("epsilon", &v)?;
        }
        if let Some(v) = take("delta") {
            cfg.delta = num("delta", &v)?;
        }
        if let Some(v) = take("clip") {
            cfg.clip = num("clip", &v)?;
        }
        let k = take("k");
        let k_fraction = take("k_fraction");
        match take("compressor").as_deref() {
            None | Some("rand_k") => {
                cfg.compressor = match (k, k_fraction) {
                    (Some(_), Some(_)) => return Err(Error::Config("give k or k_fraction, not both".into())),
                    (Some(k), None) => CompressorChoice::RandK(num("k", &k)?),
                    (None, Some(f)) => CompressorChoice::RandFraction(num("k_fraction", &f)?),
                    (None, None) => CompressorChoice::RandFraction(0.05),
                }
            }
            Some("identity") => {
                if k.is_some() || k_fraction.is_some() {
                    return Err(Error::Config("identity compressor takes no k".into()));
                }
                cfg.compressor = CompressorChoice::Identity;
            }
            Some(other) => return Err(Error::Config(format!("unknown compressor '{other}'"))),
        }
        if let Some(v) = take("eta") {
            cfg.eta = setting("eta", &v, "recipe")?;
        }
        if let Some(v) = take("eta_grid") {
            cfg.eta_grid = Some(list("eta_grid", &v)?);
        }
        if let Some(v) = take("gamma") {
            cfg.gamma = setting("gamma", &v, "formula")?;
        }
        if let Some(v) = take("b") {
            cfg.batch = setting("b", &v, "recipe")?;
        }
        if let Some(v) = take("p") {
            cfg.p = setting("p", &v, "recipe")?;
        }
        if let Some(v) = take("T") {
            cfg.rounds = num("T", &v)?;
        }
        if let Some(v) = take("sigma_mode") {
            cfg.sigma_mode = match v.as_str() {
                "formula" => SigmaMode::Formula,
                "accountant" => SigmaMode::Accountant,
                "off" => SigmaMode::Off,
                _ => return Err(Error::Config(format!("unknown sigma_mode '{v}'"))),
            };
        }
        if let Some(v) = take("c") {
            cfg.c = num("c", &v)?;
        }
        if let Some(v) = take("phi0") {
            cfg.phi0 = num("phi0", &v)?;
        }
        if let Some(v) = take("L") {
            cfg.smoothness = Some(num("L", &v)?);
        }
        if let Some(v) = take("B") {
            cfg.bits_per_scalar = num("B", &v)?;
        }
        if let Some(v) = take("bit_mode") {
            cfg.bit_mode = match v.as_str() {
                "paper" => BitMode::Paper,
                "wire" => BitMode::Wire,
                _ => return Err(Error::Config(format!("unknown bit_mode '{v}'"))),
            };
        }
        if let Some(v) = take("eval_every") {
            cfg.eval_every = num("eval_every", &v)?;
        }
        match (take("seed"), take("seeds")) {
            (Some(_), Some(_)) => return Err(Error::Config("give seed or seeds, not both".into())),
            (Some(s), None) => cfg.seeds = vec![num("seed", &s)?],
            (None, Some(s)) => cfg.seeds = list("seeds", &s)?,
            (None, None) => {}
        }
        if let Some(v) = take("output") {
            cfg.output = Some(v.into());
        }
        if let Some(v) = take("parallel") {
            cfg.parallel = flag("parallel", &v)?;
        }
        if let Some(v) = take("saga_memory_cap") {
            cfg.saga_memory_cap = num("saga_memory_cap", &v)?;
        }
        if let Some(k) = kv.keys().next() {
            return Err(Error::Config(format!("unknown key '{k}'")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_clients == 0 {
            return Err(Error::Config("n_clients must be positive".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if !(self.clip > 0.0) {
            return Err(Error::Config("clip must be positive (inf disables clipping)".into()));
        }
        if self.eta_grid.as_ref().is_some_and(|g| g.is_empty() || g.iter().any(|e| !(*e > 0.0))) {
            return Err(Error::Config("eta_grid values must be positive".into()));
        }
        Ok(())
    }
}
