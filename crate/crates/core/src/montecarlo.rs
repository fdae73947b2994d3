//! Monte Carlo harness for completion-time experiments: seeded sweeps over
//! graph model x LP model x dimension, one-sample Student t-tests on the
//! completion-time-to-diameter ratio, Chernoff sample sizing and plot-data
//! export.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::{run_constraints_consensus, ConsensusError, RunOptions};
use crate::lp::{gen_model_a, gen_model_b, LinearProgram};
use crate::network::{
    gen_erdos_renyi, gen_line, gen_random_geometric, graph_metrics, NetworkError,
    TimeVaryingDigraph,
};
use crate::util::derive_seed;

#[derive(Debug, Error)]
pub enum MonteCarloError {
    #[error("sweep work {work} exceeds the configured budget {budget}")]
    BudgetExceeded { work: u64, budget: u64 },
    #[error("need at least two samples")]
    InsufficientSamples,
    #[error("empty indicator list")]
    Empty,
    #[error("epsilon and eta must lie strictly inside (0, 1)")]
    OutOfRange,
    #[error("dimension {0} outside 2..=5 or n below d+1")]
    BadConfig(usize),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Statistics kernels
// ---------------------------------------------------------------------------

/// One-sample Student t-test result (lower-tail p-value).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TTest {
    pub t: f64,
    pub df: usize,
    pub p_one_sided: f64,
}

/// One-sample t-test of `mean(samples)` against `mu0`; the reported p-value
/// is the lower-tail probability `P(T_df <= t)`.
pub fn t_test_one_sample(samples: &[f64], mu0: f64) -> Result<TTest, MonteCarloError> {
    if samples.len() < 2 {
        return Err(MonteCarloError::InsufficientSamples);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    let df = samples.len() - 1;
    if (mean - mu0).abs() == 0.0 {
        return Ok(TTest { t: 0.0, df, p_one_sided: 0.5 });
    }
    if std == 0.0 {
        let t = if mean > mu0 { f64::INFINITY } else { f64::NEG_INFINITY };
        return Ok(TTest { t, df, p_one_sided: if mean > mu0 { 1.0 } else { 0.0 } });
    }
    let t = (mean - mu0) / (std / n.sqrt());
    Ok(TTest { t, df, p_one_sided: student_t_cdf(t, df as f64) })
}

/// Lower-tail CDF of the t-distribution with `nu` degrees of freedom, through
/// the regularized incomplete beta function.
pub fn student_t_cdf(t: f64, nu: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let x = nu / (nu + t * t);
    let tail = 0.5 * regularized_incomplete_beta(0.5 * nu, 0.5, x);
    if t <= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Regularized incomplete beta `I_x(a, b)` via the Lentz continued fraction,
/// switching to the symmetric form for fast convergence.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0 && (0.0..=1.0).contains(&x));
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // even step
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // odd step
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Natural log of the gamma function (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Monte Carlo runs are dispatched in thousand-run batches once a campaign
/// exceeds ten thousand samples, so required counts round up to a full batch.
const SAMPLE_BATCH: u64 = 1000;
const BATCH_THRESHOLD: u64 = 10_000;

/// Number of i.i.d. samples for estimating a probability to accuracy
/// `epsilon` with confidence `1 - eta` (additive Chernoff bound
/// `N >= ln(2/eta) / (2 epsilon^2)`), rounded up to the batch size for large
/// campaigns.
pub fn chernoff_samples(epsilon: f64, eta: f64) -> Result<u64, MonteCarloError> {
    if !(epsilon > 0.0 && epsilon < 1.0 && eta > 0.0 && eta < 1.0) {
        return Err(MonteCarloError::OutOfRange);
    }
    let raw = (2.0 / eta).ln() / (2.0 * epsilon * epsilon);
    let mut n = raw.ceil() as u64;
    if (raw - raw.floor()).abs() < 1e-12 {
        n = raw.floor() as u64; // exact integers are not rounded up
    }
    if n > BATCH_THRESHOLD {
        n = n.div_ceil(SAMPLE_BATCH) * SAMPLE_BATCH;
    }
    Ok(n)
}

/// Fraction of true indicators.
pub fn empirical_probability(indicators: &[bool]) -> Result<f64, MonteCarloError> {
    if indicators.is_empty() {
        return Err(MonteCarloError::Empty);
    }
    Ok(indicators.iter().filter(|&&b| b).count() as f64 / indicators.len() as f64)
}

/// Ordinary least-squares line fit; returns `(slope, intercept, r_squared)`.
/// Degenerate inputs (a single point, or zero variance in `x`) fit a flat
/// line through the mean with `r_squared = 1`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    if sxx == 0.0 {
        return (0.0, mean_y, 1.0);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let ss_res: f64 =
        xs.iter().zip(ys).map(|(x, y)| (y - (slope * x + intercept)).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (slope, intercept, r2)
}

// ---------------------------------------------------------------------------
// Experiment sweeps
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphModel {
    Line,
    ErdosRenyi { epsilon: f64 },
    Rgg,
}

impl GraphModel {
    pub fn tag(&self) -> &'static str {
        match self {
            GraphModel::Line => "line",
            GraphModel::ErdosRenyi { .. } => "er",
            GraphModel::Rgg => "rgg",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpModel {
    A,
    B,
}

impl LpModel {
    pub fn tag(&self) -> &'static str {
        match self {
            LpModel::A => "a",
            LpModel::B => "b",
        }
    }
}

fn default_budget() -> u64 {
    1_000_000
}

fn default_max_rounds_factor() -> usize {
    40
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub graph_model: GraphModel,
    pub lp_model: LpModel,
    pub d: usize,
    pub n_list: Vec<usize>,
    pub runs_per_point: usize,
    pub seed: u64,
    /// Cap on total work, measured as the sum of `n * runs_per_point`.
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Per-run round cap as a multiple of `n`.
    #[serde(default = "default_max_rounds_factor")]
    pub max_rounds_factor: usize,
    /// Run each simulation with the distributed `2*diam + 1` halting rule
    /// enabled (completion is still detected against the oracle value).
    #[serde(default)]
    pub halting_diameter_rule: bool,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), MonteCarloError> {
        if !(2..=5).contains(&self.d) {
            return Err(MonteCarloError::BadConfig(self.d));
        }
        for &n in &self.n_list {
            if n < self.d + 1 {
                return Err(MonteCarloError::BadConfig(n));
            }
        }
        let work: u64 = self.n_list.iter().map(|&n| (n * self.runs_per_point) as u64).sum();
        if work > self.budget {
            return Err(MonteCarloError::BudgetExceeded { work, budget: self.budget });
        }
        Ok(())
    }
}

/// One consensus run inside a sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RunRecord {
    pub n: usize,
    pub run: usize,
    pub completion: usize,
    pub diameter: usize,
    pub ratio: f64,
    pub converged: bool,
}

/// Aggregates for one value of `n`.
#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub n: usize,
    pub mean_completion: f64,
    pub std_completion: f64,
    pub mean_diameter: f64,
    pub mean_ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub runs: Vec<RunRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub points: Vec<SweepPoint>,
    /// Least-squares fit of mean completion time against `n`.
    pub fit_slope: f64,
    pub fit_intercept: f64,
    pub fit_r2: f64,
}

impl SweepResult {
    /// Lower-tail t-tests of the per-run completion/diameter ratios against
    /// the null mean `mu0`, one per sweep point.
    pub fn ratio_t_tests(&self, mu0: f64) -> Result<Vec<(usize, TTest)>, MonteCarloError> {
        self.points
            .iter()
            .map(|p| {
                let ratios: Vec<f64> = p.runs.iter().map(|r| r.ratio).collect();
                Ok((p.n, t_test_one_sample(&ratios, mu0)?))
            })
            .collect()
    }
}

/// Per-run seeds derive from `(master seed, n, run index)` so any subset of a
/// sweep can be recomputed independently.
pub fn run_seed(master: u64, n: usize, run: usize) -> u64 {
    derive_seed(master, &[n as u64, run as u64])
}

fn single_run(cfg: &ExperimentConfig, n: usize, run: usize) -> Result<RunRecord, MonteCarloError> {
    let seed = run_seed(cfg.seed, n, run);
    let mut graph_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[1]));
    let graph: TimeVaryingDigraph = match cfg.graph_model {
        GraphModel::Line => gen_line(n),
        GraphModel::ErdosRenyi { epsilon } => gen_erdos_renyi(n, epsilon, &mut graph_rng)?,
        GraphModel::Rgg => gen_random_geometric(n, &mut graph_rng),
    };
    let mut lp_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[2]));
    let lp: LinearProgram = match cfg.lp_model {
        LpModel::A => gen_model_a(n, cfg.d, &mut lp_rng),
        LpModel::B => gen_model_b(n, cfg.d, &mut lp_rng),
    };
    let problem = lp.as_problem();
    let diameter = graph_metrics(&graph, 0).diameter.unwrap_or(n);
    let halting = if cfg.halting_diameter_rule {
        crate::consensus::Halting::DiameterRule(diameter)
    } else {
        crate::consensus::Halting::None
    };
    let opts = RunOptions {
        seed,
        max_rounds: cfg.max_rounds_factor * n,
        record_values: false,
        halting,
        ..RunOptions::default()
    };
    let trace = run_constraints_consensus(&problem, &graph, &lp.constraints, &opts)?;
    let completion = trace.completion_round.unwrap_or(trace.rounds_run);
    Ok(RunRecord {
        n,
        run,
        completion,
        diameter,
        ratio: completion as f64 / diameter as f64,
        converged: trace.converged(),
    })
}

/// Runs the sweep, optionally spreading runs over `jobs` worker threads.
/// Results are reduced in `(n, run)` order, so the output is identical for
/// any thread count.
pub fn run_sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<SweepResult, MonteCarloError> {
    cfg.validate()?;
    let items: Vec<(usize, usize)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| (0..cfg.runs_per_point).map(move |r| (n, r)))
        .collect();

    let mut slots: Vec<Option<Result<RunRecord, MonteCarloError>>> =
        (0..items.len()).map(|_| None).collect();
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        for (slot, &(n, r)) in slots.iter_mut().zip(&items) {
            *slot = Some(single_run(cfg, n, r));
        }
    } else {
        let chunks: Vec<Vec<(usize, (usize, usize))>> = (0..jobs)
            .map(|w| {
                items
                    .iter()
                    .enumerate()
                    .filter(|(idx, _)| idx % jobs == w)
                    .map(|(idx, &item)| (idx, item))
                    .collect()
            })
            .collect();
        let results: Vec<Vec<(usize, Result<RunRecord, MonteCarloError>)>> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = chunks
                    .into_iter()
                    .map(|chunk| {
                        scope.spawn(move || {
                            chunk
                                .into_iter()
                                .map(|(idx, (n, r))| (idx, single_run(cfg, n, r)))
                                .collect::<Vec<_>>()
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            });
        for worker in results {
            for (idx, record) in worker {
                slots[idx] = Some(record);
            }
        }
    }

    let mut records: Vec<RunRecord> = Vec::with_capacity(items.len());
    for slot in slots {
        records.push(slot.expect("all slots filled")?);
    }

    let mut points = Vec::new();
    for &n in &cfg.n_list {
        let runs: Vec<RunRecord> = records.iter().filter(|r| r.n == n).copied().collect();
        let count = runs.len() as f64;
        let mean = runs.iter().map(|r| r.completion as f64).sum::<f64>() / count;
        let var = if runs.len() > 1 {
            runs.iter().map(|r| (r.completion as f64 - mean).powi(2)).sum::<f64>() / (count - 1.0)
        } else {
            0.0
        };
        let std = var.sqrt();
        let half = 1.96 * std / count.sqrt();
        points.push(SweepPoint {
            n,
            mean_completion: mean,
            std_completion: std,
            mean_diameter: runs.iter().map(|r| r.diameter as f64).sum::<f64>() / count,
            mean_ratio: runs.iter().map(|r| r.ratio).sum::<f64>() / count,
            ci_low: mean - half,
            ci_high: mean + half,
            runs,
        });
    }

    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_completion).collect();
    let (fit_slope, fit_intercept, fit_r2) = least_squares(&xs, &ys);
    Ok(SweepResult { config: cfg.clone(), points, fit_slope, fit_intercept, fit_r2 })
}

/// Writes the sweep's plot data: a data CSV with one row per `n` and a fit
/// CSV sampling the least-squares line at the same `n` values. File names
/// encode the (graph model, LP model, d) combination. Returns both paths.
pub fn export_plot_data(result: &SweepResult, dir: &Path) -> Result<(PathBuf, PathBuf), MonteCarloError> {
    std::fs::create_dir_all(dir)?;
    let stem = format!(
        "sweep_{}_{}_d{}",
        result.config.graph_model.tag(),
        result.config.lp_model.tag(),
        result.config.d
    );
    let data_path = dir.join(format!("{stem}.csv"));
    let mut file = std::fs::File::create(&data_path)?;
    writeln!(file, "n,mean_completion,std,diameter,ratio,ci_low,ci_high")?;
    for p in &result.points {
        writeln!(
            file,
            "{},{},{},{},{},{},{}",
            p.n, p.mean_completion, p.std_completion, p.mean_diameter, p.mean_ratio, p.ci_low,
            p.ci_high
        )?;
    }
    let fit_path = dir.join(format!("{stem}_fit.csv"));
    let mut file = std::fs::File::create(&fit_path)?;
    writeln!(file, "n,fit")?;
    for p in &result.points {
        writeln!(file, "{},{}", p.n, result.fit_slope * p.n as f64 + result.fit_intercept)?;
    }
    Ok((data_path, fit_path))
}
