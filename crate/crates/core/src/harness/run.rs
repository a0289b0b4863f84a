use log::{info, warn};
use rand::Rng;
use rayon::prelude::*;

use super::config::{Algorithm, CompressorChoice, DatasetSource, RunConfig, Setting, SigmaMode};
use super::metrics::MetricsRow;
use crate::compress::{omega_of, CompressorSpec};
use crate::dataio::{self, DataFormat, DatasetManifest};
use crate::error::{Error, Result};
use crate::estimators::{sensitivity_of, EstimatorConfig, EstimatorKind};
use crate::fedproto::{
    derive_hyperparams, shift_stepsize, BitAccounting, Federation, HyperInputs, HyperParams, Protocol, RoundConfig,
};
use crate::linalg::norm_sq;
use crate::objectives::{Objective, Sample, ShallowNetLayout, SparseVec};
use crate::privacy::{sigma_accountant, sigma_formula, NoiseMode, NoiseSpec, PrivacyBudget};
use crate::streams::{derive_stream, Purpose};

/// Client id reserved for the stream that draws the initial network weights.
const INIT_CLIENT: u64 = u64::MAX - 2;

/// Data loaded and split for one experiment.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub objective: Objective,
    pub shards: Vec<Vec<Sample>>,
    pub test: Option<Vec<Sample>>,
    pub manifest: DatasetManifest,
    /// Smoothness constant used by the recipes, if known.
    pub smoothness: Option<f64>,
}

pub fn prepare_data(cfg: &RunConfig) -> Result<PreparedData> {
    let (name, format, paths, samples, test, objective) = match &cfg.dataset {
        DatasetSource::Libsvm { path } => {
            let (s, d) = dataio::load_libsvm(path)?;
            ("libsvm", DataFormat::Libsvm, vec![path.clone()], s, None, Objective::logistic(d, cfg.lambda))
        }
        DatasetSource::SyntheticA9a { rows } => {
            let s = dataio::synthetic_a9a(*rows, cfg.shuffle_seed);
            ("synthetic_a9a", DataFormat::Libsvm, vec![], s, None, Objective::logistic(dataio::A9A_DIM, cfg.lambda))
        }
        DatasetSource::Mnist { images, labels, test } => {
            let s = dataio::load_mnist(images, labels)?;
            let t = test.as_ref().map(|(i, l)| dataio::load_mnist(i, l)).transpose()?;
            let mut paths = vec![images.clone(), labels.clone()];
            if let Some((i, l)) = test {
                paths.extend([i.clone(), l.clone()]);
            }
            let layout = ShallowNetLayout { hidden: cfg.hidden, ..Default::default() };
            ("mnist", DataFormat::Idx, paths, s, t, Objective::shallow_nn(layout))
        }
        DatasetSource::SyntheticDigits { rows, test_rows } => {
            let mut s = dataio::synthetic_digits(rows + test_rows, cfg.shuffle_seed);
            let t = s.split_off(*rows);
            let layout = ShallowNetLayout { hidden: cfg.hidden, ..Default::default() };
            ("synthetic_digits", DataFormat::Idx, vec![], s, Some(t), Objective::shallow_nn(layout))
        }
        DatasetSource::Quadratic { dim, samples, h_min, h_max } => {
            if *dim == 0 || !(*h_min > 0.0 && h_max >= h_min) {
                return Err(Error::Config("quadratic needs quad_dim >= 1 and 0 < quad_h_min <= quad_h_max".into()));
            }
            let curv: Vec<f64> = (0..*dim)
                .map(|k| if *dim == 1 { *h_max } else { h_min + (h_max - h_min) * k as f64 / (*dim - 1) as f64 })
                .collect();
            let mut rng = derive_stream(cfg.shuffle_seed, INIT_CLIENT, 1, Purpose::Shuffle);
            let s = (0..*samples)
                .map(|_| {
                    let c: Vec<f64> = (0..*dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    Sample::new(SparseVec::from_dense(&c), 0)
                })
                .collect();
            ("quadratic", DataFormat::Libsvm, vec![], s, None, Objective::quadratic(curv))
        }
    };
    let smoothness = cfg.smoothness.or_else(|| objective.smoothness_bound(&samples));
    let part = dataio::partition(&samples, cfg.n_clients, cfg.shuffle_seed)?;
    let manifest = DatasetManifest {
        name: name.into(),
        format,
        paths,
        n_clients: cfg.n_clients,
        m: part.local_size(),
        d_features: objective.dim(),
        shuffle_seed: cfg.shuffle_seed,
    };
    Ok(PreparedData { objective, shards: part.shards, test, manifest, smoothness })
}

/// Everything fixed before round 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub algorithm: Algorithm,
    pub round: RoundConfig,
    pub omega: f64,
    pub estimator: EstimatorConfig,
    pub etas: Vec<f64>,
    /// Whether rows carry an `@eta=` tag (stepsize-grid mode).
    pub tagged: bool,
    pub hyper: Option<HyperParams>,
    pub private: bool,
}

impl RunPlan {
    pub fn sigma(&self) -> f64 {
        self.round.noise.sigma
    }
}

fn compressor(cfg: &RunConfig, d: usize) -> Result<CompressorSpec> {
    if cfg.algorithm.forces_identity() {
        if cfg.compressor != CompressorChoice::Identity {
            warn!("{} is uncompressed; ignoring the configured compressor", cfg.algorithm.name());
        }
        return Ok(CompressorSpec::Identity);
    }
    let spec = match cfg.compressor {
        CompressorChoice::Identity => CompressorSpec::Identity,
        CompressorChoice::RandK(k) => CompressorSpec::RandK { k },
        CompressorChoice::RandFraction(f) => CompressorSpec::rand_fraction(d, f)?,
    };
    spec.kept(d)?;
    Ok(spec)
}

pub fn plan_run(cfg: &RunConfig, data: &PreparedData) -> Result<RunPlan> {
    let algo = cfg.algorithm;
    let d = data.objective.dim();
    let m = data.manifest.m;
    let kind = algo.estimator();
    let comp = compressor(cfg, d)?;
    let omega = omega_of(comp, d)?;

    if kind == EstimatorKind::Saga && (m as f64) * (d as f64) > cfg.saga_memory_cap {
        return Err(Error::Config(format!(
            "saga table needs m*d = {} scalars per client, above the cap of {}",
            m * d,
            cfg.saga_memory_cap
        )));
    }

    let needs_recipe = (cfg.eta == Setting::Recipe && cfg.eta_grid.is_none())
        || (cfg.batch == Setting::Recipe && kind != EstimatorKind::Gd)
        || (cfg.p == Setting::Recipe && kind == EstimatorKind::Svrg);
    let hyper = if needs_recipe {
        let l = data
            .smoothness
            .ok_or_else(|| Error::Config("recipe values need a smoothness constant; set L".into()))?;
        let budget = PrivacyBudget::new(cfg.epsilon, cfg.delta)?;
        let inputs = HyperInputs { n: cfg.n_clients, omega, m, d, smoothness: l, clip: cfg.clip, budget, c: cfg.c, phi0: cfg.phi0 };
        Some(derive_hyperparams(algo.recipe(), &inputs)?)
    } else {
        None
    };

    let batch = match (kind, cfg.batch) {
        (EstimatorKind::Gd, _) => m,
        (_, Setting::Value(b)) => b,
        (_, Setting::Recipe) => hyper.expect("recipe computed").batch,
    };
    if batch == 0 || batch > m {
        return Err(Error::Config(format!("batch size {batch} outside 1..={m}")));
    }
    let p = match (kind, cfg.p) {
        (EstimatorKind::Svrg, Setting::Value(p)) => p,
        (EstimatorKind::Svrg, Setting::Recipe) => hyper.expect("recipe computed").p,
        _ => 0.0,
    };
    let gamma = match (algo.protocol(), cfg.gamma) {
        (Protocol::Direct, _) => 0.0,
        (Protocol::Shifted, Setting::Value(g)) => g,
        (Protocol::Shifted, Setting::Recipe) => shift_stepsize(omega),
    };
    let (etas, tagged) = match (&cfg.eta_grid, cfg.eta) {
        (Some(grid), _) => (grid.clone(), true),
        (None, Setting::Value(e)) => (vec![e], false),
        (None, Setting::Recipe) => (vec![hyper.expect("recipe computed").eta], false),
    };

    let sens = sensitivity_of(kind, cfg.clip);
    let (sigma, mode, private) = match cfg.sigma_mode {
        SigmaMode::Off => (0.0, NoiseMode::Off, false),
        mode => {
            if !cfg.clip.is_finite() {
                return Err(Error::Config("a private run needs a finite clip threshold".into()));
            }
            let budget = PrivacyBudget::new(cfg.epsilon, cfg.delta)?;
            let rounds = cfg.rounds.max(1);
            match mode {
                SigmaMode::Formula => (sigma_formula(budget, rounds, m, sens, cfg.c)?, NoiseMode::Formula, true),
                _ => {
                    let q = batch as f64 / m as f64;
                    let report = sigma_accountant(budget, rounds, q, m, batch as f64, sens)?;
                    (report.sigma, NoiseMode::Accountant, true)
                }
            }
        }
    };
    info!("{}: omega = {omega}, b = {batch}, gamma = {gamma}, sigma = {sigma}", algo.name());

    let noise = NoiseSpec { sigma, clip: cfg.clip, mode, c: cfg.c };
    let mut estimator = EstimatorConfig::new(kind, batch);
    if kind == EstimatorKind::Svrg {
        estimator = estimator.with_snapshot_prob(p);
    }
    Ok(RunPlan {
        algorithm: algo,
        round: RoundConfig {
            protocol: algo.protocol(),
            noise,
            comp,
            gamma,
            bits: BitAccounting { mode: cfg.bit_mode, bits_per_scalar: cfg.bits_per_scalar },
        },
        omega,
        estimator,
        etas,
        tagged,
        hyper,
        private,
    })
}

/// Zero for convex-style objectives; small uniform weights for the network,
/// whose zero point is a symmetric saddle.
pub fn initial_point(obj: &Objective, seed: u64) -> Vec<f64> {
    match obj {
        Objective::ShallowNn { layout } => {
            let mut rng = derive_stream(seed, INIT_CLIENT, 0, Purpose::Shuffle);
            let mut draw = |len: usize, fan_in: usize| -> Vec<f64> {
                let r = 1.0 / (fan_in as f64).sqrt();
                (0..len).map(|_| rng.gen_range(-r..r)).collect()
            };
            let w1 = draw(layout.hidden * layout.input, layout.input);
            let w2 = draw(layout.output * layout.hidden, layout.hidden);
            layout
                .pack(&w1, &vec![0.0; layout.hidden], &w2, &vec![0.0; layout.output])
                .expect("blocks sized by the layout")
        }
        _ => vec![0.0; obj.dim()],
    }
}

/// Builds the federation for one `(eta, seed)` run.
pub fn build_federation(cfg: &RunConfig, data: &PreparedData, plan: &RunPlan, eta: f64, seed: u64) -> Result<Federation> {
    let x0 = initial_point(&data.objective, seed);
    let mut fed = Federation::new(data.objective.clone(), data.shards.clone(), x0, plan.estimator, plan.round, eta, seed)?;
    fed.parallel = cfg.parallel;
    Ok(fed)
}

pub fn evaluate(fed: &Federation, test: Option<&[Sample]>) -> Result<(f64, f64, Option<f64>)> {
    let x = &fed.server.x;
    let g = fed.full_gradient(x)?;
    let loss = fed.loss(x)?;
    let acc = match test {
        Some(t) => fed.objective.accuracy(x, t)?,
        None => None,
    };
    Ok((norm_sq(&g), loss, acc))
}

fn run_label(plan: &RunPlan, eta: f64) -> String {
    if plan.tagged {
        format!("{}@eta={eta}", plan.algorithm.name())
    } else {
        plan.algorithm.name().to_string()
    }
}

/// Builds the federation and advances it `rounds` rounds without
/// evaluating. Noise stays calibrated for `cfg.rounds`.
pub fn run_until(cfg: &RunConfig, data: &PreparedData, plan: &RunPlan, eta: f64, seed: u64, rounds: u64) -> Result<Federation> {
    let mut fed = build_federation(cfg, data, plan, eta, seed)?;
    fed.run(rounds)?;
    Ok(fed)
}

/// Runs `cfg.rounds` rounds for one `(eta, seed)` pair.
pub fn run_single(cfg: &RunConfig, data: &PreparedData, plan: &RunPlan, eta: f64, seed: u64) -> Result<Vec<MetricsRow>> {
    let mut fed = build_federation(cfg, data, plan, eta, seed)?;
    let label = run_label(plan, eta);
    let (epsilon, delta) = if plan.private { (cfg.epsilon, cfg.delta) } else { (f64::INFINITY, 0.0) };
    let mut rows = Vec::new();
    for t in 1..=cfg.rounds {
        fed.step()?;
        if t % cfg.eval_every == 0 || t == cfg.rounds {
            let (grad_norm_sq, train_loss, test_accuracy) = evaluate(&fed, data.test.as_deref())?;
            rows.push(MetricsRow {
                algorithm: label.clone(),
                seed,
                round: t,
                bits_cumulative: fed.server.bits_cumulative,
                grad_evals_cumulative: fed.server.grad_evals_cumulative,
                grad_norm_sq,
                train_loss,
                test_accuracy,
                sigma_p: plan.sigma(),
                epsilon,
                delta,
            });
        }
    }
    Ok(rows)
}

/// Runs every configured stepsize and seed. Rows come grouped by stepsize,
/// then seed, whatever the degree of parallelism.
pub fn run_experiment(cfg: &RunConfig) -> Result<Vec<MetricsRow>> {
    cfg.validate()?;
    let data = prepare_data(cfg)?;
    let plan = plan_run(cfg, &data)?;
    run_prepared(cfg, &data, &plan)
}

pub fn run_prepared(cfg: &RunConfig, data: &PreparedData, plan: &RunPlan) -> Result<Vec<MetricsRow>> {
    let jobs: Vec<(f64, u64)> = plan.etas.iter().flat_map(|&e| cfg.seeds.iter().map(move |&s| (e, s))).collect();
    let runs: Vec<Result<Vec<MetricsRow>>> = if cfg.parallel {
        jobs.par_iter().map(|&(e, s)| run_single(cfg, data, plan, e, s)).collect()
    } else {
        jobs.iter().map(|&(e, s)| run_single(cfg, data, plan, e, s)).collect()
    };
    let mut rows = Vec::new();
    for r in runs {
        rows.extend(r?);
    }
    Ok(rows)
}
