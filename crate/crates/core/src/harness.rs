//! Experiment configuration and the Monte Carlo driver.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::honesty::MeasurementMode;
use crate::protocol::{
    derive_seed, resolve_backend, run_protocol, AliceStrategy, Backend, BobStrategy, Mode, ProtocolParams,
    ResolvedBackend, RunOptions, Transcript, Verdict,
};
use crate::stats::{binomial_sigma, within_sigmas, RateEstimate};

/// Trials per parallel chunk and per job; output is flushed after every chunk.
const CHUNK_PER_JOB: usize = 64;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    #[serde(default)]
    graph: Option<Graph>,
    #[serde(default)]
    graph_file: Option<PathBuf>,
    k: usize,
    m: usize,
    #[serde(default = "default_mode")]
    mode: Mode,
    #[serde(default)]
    toy: Option<bool>,
}

fn default_mode() -> Mode {
    Mode::Arbitrable
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// JSON-lines transcript file.
    #[serde(default)]
    pub transcripts: Option<PathBuf>,
    /// Summary JSON file.
    #[serde(default)]
    pub summary: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    params: ParamsFile,
    #[serde(default = "default_bob")]
    bob: BobStrategy,
    #[serde(default)]
    alice: AliceStrategy,
    #[serde(default = "default_trials")]
    trials: u64,
    #[serde(default)]
    master_seed: u64,
    #[serde(default)]
    backend: Backend,
    #[serde(default)]
    test_mode: MeasurementMode,
    #[serde(default)]
    pattern: Option<Vec<f64>>,
    #[serde(default)]
    output: OutputConfig,
}

fn default_bob() -> BobStrategy {
    BobStrategy::Honest
}

fn default_trials() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub params: ProtocolParams,
    pub bob: BobStrategy,
    pub alice: AliceStrategy,
    pub trials: u64,
    pub master_seed: u64,
    pub options: RunOptions,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn new(params: ProtocolParams, bob: BobStrategy, alice: AliceStrategy, trials: u64, master_seed: u64) -> Self {
        ExperimentConfig {
            params,
            bob,
            alice,
            trials,
            master_seed,
            options: RunOptions::default(),
            output: OutputConfig::default(),
        }
    }

    /// Parses TOML; relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let raw: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let p = raw.params;
        let graph = match (p.graph, p.graph_file) {
            (Some(g), None) => g,
            (None, Some(file)) => Graph::from_file(base.join(file))?,
            _ => return Err(Error::Config("give exactly one of params.graph and params.graph_file".into())),
        };
        let params = ProtocolParams::with_toy(graph, p.k, p.m, p.mode, p.toy)?;
        let resolve = |path: Option<PathBuf>| path.map(|f| base.join(f));
        let cfg = ExperimentConfig {
            params,
            bob: raw.bob,
            alice: raw.alice,
            trials: raw.trials,
            master_seed: raw.master_seed,
            options: RunOptions { backend: raw.backend, test_mode: raw.test_mode, pattern: raw.pattern },
            output: OutputConfig {
                transcripts: resolve(raw.output.transcripts),
                summary: resolve(raw.output.summary),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<ResolvedBackend> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.params.validate()?;
        self.bob.validate(&self.params)?;
        resolve_backend(&self.params, &self.bob, &self.options)
    }

    pub fn trial_seed(&self, trial: u64) -> u64 {
        derive_seed(self.master_seed, trial)
    }

    pub fn run_trial(&self, trial: u64) -> Result<Transcript> {
        run_protocol(&self.params, &self.bob, self.alice, &self.options, self.trial_seed(trial))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub accepted: u64,
    pub bob_cheating: u64,
    pub alice_cheating: u64,
    pub rejected: u64,
}

impl VerdictCounts {
    pub fn add(&mut self, v: Verdict) {
        *self.get_mut(v) += 1;
    }

    fn get_mut(&mut self, v: Verdict) -> &mut u64 {
        match v {
            Verdict::Accepted => &mut self.accepted,
            Verdict::BobCheating => &mut self.bob_cheating,
            Verdict::AliceCheating => &mut self.alice_cheating,
            Verdict::Rejected => &mut self.rejected,
        }
    }

    pub fn get(&self, v: Verdict) -> u64 {
        match v {
            Verdict::Accepted => self.accepted,
            Verdict::BobCheating => self.bob_cheating,
            Verdict::AliceCheating => self.alice_cheating,
            Verdict::Rejected => self.rejected,
        }
    }

    pub fn total(&self) -> u64 {
        self.accepted + self.bob_cheating + self.alice_cheating + self.rejected
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictRates {
    pub accepted: RateEstimate,
    pub bob_cheating: RateEstimate,
    pub alice_cheating: RateEstimate,
    pub rejected: RateEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub quantity: String,
    pub predicted: f64,
    pub observed: f64,
    pub sigma: f64,
    pub within_3_sigma: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub trials: u64,
    pub master_seed: u64,
    pub backend: ResolvedBackend,
    pub counts: VerdictCounts,
    pub rates: VerdictRates,
    pub predictions: Vec<Prediction>,
    /// Mean `<G|rho_comp|G>` over accepted trials.
    pub mean_fidelity_given_accept: Option<f64>,
    /// Trials in which a planted bad copy became the computation copy.
    pub bad_copy_is_compute: Option<RateEstimate>,
    pub wall_clock_seconds: f64,
}

impl ExperimentSummary {
    pub fn all_predictions_hold(&self) -> bool {
        self.predictions.iter().all(|p| p.within_3_sigma)
    }
}

/// Analytic verdict distribution for iid copies of fidelity `f`.
pub fn predicted_verdicts(params: &ProtocolParams, alice: AliceStrategy, f: f64) -> Vec<(Verdict, f64)> {
    let q = ((1.0 + f) / 2.0).powi(params.k as i32);
    match (params.mode, alice) {
        (Mode::PrivateOnly, AliceStrategy::Honest) => vec![(Verdict::Accepted, q), (Verdict::Rejected, 1.0 - q)],
        (Mode::PrivateOnly, AliceStrategy::FalseReject) => vec![(Verdict::Accepted, 0.0), (Verdict::Rejected, 1.0)],
        (Mode::Arbitrable, AliceStrategy::Honest) => vec![
            (Verdict::Accepted, q),
            (Verdict::AliceCheating, (1.0 - q) * q),
            (Verdict::BobCheating, (1.0 - q) * (1.0 - q)),
        ],
        (Mode::ArbitrableCharlieEarlyTest, AliceStrategy::Honest) => vec![
            (Verdict::Accepted, q * q),
            (Verdict::AliceCheating, q * (1.0 - q)),
            (Verdict::BobCheating, 1.0 - q),
        ],
        (_, AliceStrategy::FalseReject) => vec![
            (Verdict::Accepted, 0.0),
            (Verdict::AliceCheating, q),
            (Verdict::BobCheating, 1.0 - q),
        ],
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Accepted => "accepted",
        Verdict::BobCheating => "bob_cheating",
        Verdict::AliceCheating => "alice_cheating",
        Verdict::Rejected => "rejected",
    }
}

fn prediction(quantity: String, predicted: f64, count: u64, trials: u64) -> Prediction {
    Prediction {
        quantity,
        predicted,
        observed: count as f64 / trials as f64,
        sigma: binomial_sigma(predicted, trials),
        within_3_sigma: within_sigmas(count, trials, predicted, 3.0),
    }
}

/// What the aggregator keeps from each trial.
struct TrialStats {
    verdict: Verdict,
    fidelity: Option<f64>,
    bad_is_compute: bool,
}

impl TrialStats {
    fn of(t: &Transcript) -> Self {
        TrialStats {
            verdict: t.verdict,
            fidelity: t.instrumented_fidelity,
            bad_is_compute: t.compute_copy().is_some_and(|c| t.bad_copies().contains(&c)),
        }
    }
}

/// Runs every trial, writing one transcript per line in trial order.
pub fn run_montecarlo(
    cfg: &ExperimentConfig,
    jobs: Option<usize>,
    mut transcripts: Option<&mut dyn Write>,
) -> Result<ExperimentSummary> {
    let backend = cfg.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let chunk = (CHUNK_PER_JOB * pool.current_num_threads()).max(1) as u64;
    let mut counts = VerdictCounts::default();
    let mut fid_sum = 0.0;
    let mut bad_compute = 0;
    let want_lines = transcripts.is_some();
    let mut begin = 0;
    while begin < cfg.trials {
        let end = (begin + chunk).min(cfg.trials);
        let results: Vec<Result<(Option<String>, TrialStats)>> = pool.install(|| {
            (begin..end)
                .into_par_iter()
                .map(|i| {
                    let t = cfg.run_trial(i)?;
                    let line = if want_lines { Some(t.to_json()?) } else { None };
                    Ok((line, TrialStats::of(&t)))
                })
                .collect()
        });
        for r in results {
            let (line, s) = r?;
            if let (Some(w), Some(line)) = (transcripts.as_deref_mut(), line) {
                writeln!(w, "{line}")?;
            }
            counts.add(s.verdict);
            if s.verdict == Verdict::Accepted {
                fid_sum += s.fidelity.unwrap_or(f64::NAN);
            }
            bad_compute += u64::from(s.bad_is_compute);
        }
        if let Some(w) = transcripts.as_deref_mut() {
            w.flush()?;
        }
        begin = end;
    }

    let trials = cfg.trials;
    let rate = |v| RateEstimate::new(counts.get(v), trials);
    let mut predictions = Vec::new();
    if let Some(f) = cfg.bob.iid_fidelity(&cfg.params.graph) {
        for (v, p) in predicted_verdicts(&cfg.params, cfg.alice, f) {
            predictions.push(prediction(format!("{}_rate", verdict_name(v)), p, counts.get(v), trials));
        }
    }
    let bad_copy_is_compute = match &cfg.bob {
        BobStrategy::PlantBad { count, .. } => {
            let predicted = *count as f64 / cfg.params.total_copies() as f64;
            // Only reached when Charlie's early tests do not end the run first.
            if cfg.params.mode != Mode::ArbitrableCharlieEarlyTest {
                predictions.push(prediction("bad_copy_is_compute_rate".into(), predicted, bad_compute, trials));
            }
            Some(RateEstimate::new(bad_compute, trials))
        }
        _ => None,
    };
    Ok(ExperimentSummary {
        trials,
        master_seed: cfg.master_seed,
        backend,
        rates: VerdictRates {
            accepted: rate(Verdict::Accepted),
            bob_cheating: rate(Verdict::BobCheating),
            alice_cheating: rate(Verdict::AliceCheating),
            rejected: rate(Verdict::Rejected),
        },
        mean_fidelity_given_accept: (counts.accepted > 0).then(|| fid_sum / counts.accepted as f64),
        counts,
        predictions,
        bad_copy_is_compute,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::StateSpec;

    const TOML: &str = r#"
trials = 50
master_seed = 7

[params]
k = 3
m = 1
graph = { n = 2, edges = [[0, 1]] }

[bob]
kind = "iid_state"
state = { kind = "depolarized", fidelity = 0.5 }
"#;

    #[test]
    fn parses_config() {
        let cfg = ExperimentConfig::from_toml(TOML, Path::new(".")).unwrap();
        assert_eq!(cfg.trials, 50);
        assert!(cfg.params.toy);
        assert_eq!(cfg.bob, BobStrategy::IidState { state: StateSpec::Depolarized { fidelity: 0.5 } });
        assert_eq!(cfg.validate().unwrap(), ResolvedBackend::Dense);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = TOML.replace("trials = 50", "trials = 0");
        assert!(ExperimentConfig::from_toml(&bad, Path::new(".")).is_err());
        let bad = TOML.replace("m = 1", "m = 1\nunknown = 3");
        assert!(matches!(ExperimentConfig::from_toml(&bad, Path::new(".")), Err(Error::Config(_))));
        let bad = TOML.replace("fidelity = 0.5", "fidelity = 0.1");
        assert!(ExperimentConfig::from_toml(&bad, Path::new(".")).is_err());
        // depolarized states are not stabilizer states
        let bad = format!("backend = \"tableau\"\n{TOML}");
        assert!(ExperimentConfig::from_toml(&bad, Path::new(".")).is_err());
    }

    #[test]
    fn predictions_sum_to_one() {
        let g = Graph::path(2).unwrap();
        for mode in [Mode::Arbitrable, Mode::ArbitrableCharlieEarlyTest, Mode::PrivateOnly] {
            for alice in [AliceStrategy::Honest, AliceStrategy::FalseReject] {
                let p = ProtocolParams::new(g.clone(), 4, 1, mode).unwrap();
                let total: f64 = predicted_verdicts(&p, alice, 0.3).iter().map(|(_, q)| q).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn montecarlo_is_order_independent() {
        let cfg = ExperimentConfig::from_toml(TOML, Path::new(".")).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        let sa = run_montecarlo(&cfg, Some(1), Some(&mut a)).unwrap();
        let sb = run_montecarlo(&cfg, Some(4), Some(&mut b)).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa.counts, sb.counts);
        assert_eq!(sa.counts.total(), 50);
        assert_eq!(String::from_utf8(a).unwrap().lines().count(), 50);
    }
}
