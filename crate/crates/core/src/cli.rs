//! The `mutind` command line.
//!
//! Exit codes: 0 success, 1 validation error, 2 optimizer non-convergence,
//! 3 conjecture violation (only `conj5` and `conj4`).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classical::{
    classical_mi, classical_mindep_rate, hash_sim, ki_decompose, slepian_wolf_sum,
    JointDistribution, StochasticMap, INDEPENDENCE_TOL, LOG_RATIO_TOL, RECONSTRUCTION_TOL,
    STRUCTURAL_ZERO,
};
use crate::compression::{rate_region, rate_sum_identity_check, RateInputs};
use crate::conjectures::{
    conj4_search, conj5_search, conj5_trial_state, Conj5Params, Generator, OperatorPair,
    TrialRecord, CONJ4_TOL, MARGINAL_TOL, NONTRIVIAL_MARGIN, VIOLATION_TOL,
};
use crate::entropy::entropic_report;
use crate::error::{Error, Result};
use crate::measures::{esq_upper, log_negativity, rel_ent_ppt, Cut, MeasureResult, PptOptions};
use crate::mindep::{
    check_exact_mi, check_exact_mi_on, is_maximally_correlated, maxcorr_hashing_bound, mi_bounds,
    MiBoundsOptions, SplitDims, SplitFile, SplitSearchOptions, SubsystemSplit, CORRELATION_TOL,
    EXACT_MI_TOL, SPLIT_TOL, TWIST_TOL,
};
use crate::tensor::io::{read_state_file, write_state_file, StateFile};
use crate::tensor::linalg::RANK_CUTOFF;
use crate::tensor::{MultipartiteState, RngSeed};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "mutind", version, about = "Mutual independence, distributed compression and conjecture harnesses")]
pub struct Cli {
    /// Master seed; every random choice derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct NumericOpts {
    /// Optimizer restarts (PPT descent and split search).
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Iteration cap of the PPT descent.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Extension dimension for the squashed-entanglement heuristic.
    #[arg(long, default_value_t = 2)]
    pub ext_dim: usize,
    /// Sampled extensions for the squashed-entanglement heuristic.
    #[arg(long, default_value_t = 32)]
    pub trials: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Entropies and mutual informations of a state file.
    Info { state: PathBuf },
    /// Log-negativity, PPT relative entropy and the squashed-entanglement heuristic.
    Measures {
        state: PathBuf,
        /// Bipartition such as `A,A'|B,B'`.
        #[arg(long)]
        cut: Option<String>,
        #[command(flatten)]
        num: NumericOpts,
    },
    /// Lower and upper bounds on mutual independence.
    Mindep {
        state: PathBuf,
        #[arg(long)]
        cut: Option<String>,
        /// Key systems to test for exact mutual independence, e.g. `A|B`.
        #[arg(long)]
        keys: Option<String>,
        /// Run the split search with factor dimensions `alpha,beta`.
        #[arg(long)]
        split: Option<String>,
        #[command(flatten)]
        num: NumericOpts,
    },
    /// Rate region for entanglement-assisted distributed compression.
    Rates {
        state: PathBuf,
        #[arg(long)]
        cut: Option<String>,
        #[arg(long)]
        split_file: Option<PathBuf>,
        /// A certified value of mutual independence.
        #[arg(long)]
        iind: Option<f64>,
        #[command(flatten)]
        num: NumericOpts,
    },
    /// Random search for log-negativity exceeding log|X| on product-marginal extensions.
    Conj5 {
        /// `|X|,|A|,|B|`.
        #[arg(long, default_value = "2,2,2")]
        dims: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Run the local ascent after each random start.
        #[arg(long)]
        optimize: bool,
        /// Replay a single trial from its seed.
        #[arg(long)]
        trial_seed: Option<u64>,
        #[arg(long)]
        dim_g: Option<usize>,
        #[arg(long)]
        ascent_evals: Option<usize>,
        /// Use the locking control generator instead of product extensions.
        #[arg(long)]
        control: bool,
        /// Write summary, histogram and violation certificates here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Search for a nontrivial local operator pair with constant expectation on the support.
    Conj4 {
        state: PathBuf,
        #[arg(long)]
        cut: Option<String>,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
    },
    /// Classical sources P_XYZ.
    Classical {
        #[command(subcommand)]
        command: ClassicalCommand,
    },
    /// Recompute the expected values embedded in the example corpus.
    Selftest {
        /// Read the corpus from this directory instead of the built-in copy.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum ClassicalCommand {
    /// Redundant decomposition tables.
    Decompose { dist: PathBuf },
    /// Slepian-Wolf sum and the optimal joint rate.
    Rates { dist: PathBuf },
    /// Mutual-independence rate of explicit local maps (identity by default).
    Mindep {
        dist: PathBuf,
        /// JSON file `{"f": [[..]], "g": [[..]]}` of row-stochastic tables.
        #[arg(long)]
        maps: Option<PathBuf>,
    },
    /// Finite-n local hashing simulation.
    Hashsim {
        dist: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out_bits: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
}

/// Everything needed to rerun a command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub inputs: Vec<String>,
    pub seed: u64,
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    pub options: BTreeMap<String, Value>,
    pub tolerances: BTreeMap<String, f64>,
}

/// Tolerances used across the toolkit.
pub fn tolerances() -> BTreeMap<String, f64> {
    [
        ("rank_cutoff", RANK_CUTOFF),
        ("exact_mi", EXACT_MI_TOL),
        ("correlation", CORRELATION_TOL),
        ("twist_reconstruction", TWIST_TOL),
        ("split_feasibility", SPLIT_TOL),
        ("conj5_violation", VIOLATION_TOL),
        ("conj5_marginal", MARGINAL_TOL),
        ("conj4_residual", CONJ4_TOL),
        ("conj4_nontrivial", NONTRIVIAL_MARGIN),
        ("structural_zero", STRUCTURAL_ZERO),
        ("log_ratio", LOG_RATIO_TOL),
        ("reconstruction", RECONSTRUCTION_TOL),
        ("classical_independence", INDEPENDENCE_TOL),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// A finished command: its report and how to exit.
struct Outcome {
    command: String,
    inputs: Vec<String>,
    options: BTreeMap<String, Value>,
    report: Value,
    /// Specialized CSV; otherwise the flattened report.
    csv: Option<String>,
    exit: i32,
}

impl Outcome {
    fn new(command: &str, inputs: Vec<String>, report: Value) -> Self {
        Outcome {
            command: command.to_string(),
            inputs,
            options: BTreeMap::new(),
            report,
            csv: None,
            exit: EXIT_OK,
        }
    }

    fn option(mut self, key: &str, v: impl Serialize) -> Self {
        self.options.insert(key.to_string(), serde_json::to_value(v).expect("option serializes"));
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuresReport {
    pub cut: Cut,
    pub log_negativity: MeasureResult,
    pub rel_ent_ppt: MeasureResult,
    pub esq_upper: MeasureResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conj5TrialReport {
    pub record: TrialRecord,
    pub violation: bool,
    pub reproduce: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conj4Report {
    pub cut: Cut,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<OperatorPair>,
    /// Mutual independence certified by an exact or hashing route.
    pub certified_lower_bound: f64,
    /// No pair found although the certified bound is positive.
    pub candidate_violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalRates {
    pub slepian_wolf_sum: f64,
    pub optimal_rate_hlj: f64,
    pub has_redundancy: bool,
    pub reconstruction_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestCheck {
    pub file: String,
    pub key: String,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub checks: Vec<SelftestCheck>,
    pub passed: bool,
}

#[derive(Deserialize)]
struct MapsFile {
    f: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
}

/// Parse `A,A'|B,B'`.
pub fn parse_cut(text: &str) -> Result<Cut> {
    let (a, b) = text
        .split_once('|')
        .ok_or_else(|| Error::Parse(format!("cut `{text}` must look like `A,A'|B,B'`")))?;
    let side = |t: &str| -> Vec<String> {
        t.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
    };
    Ok(Cut {
        a: side(a),
        b: side(b),
    })
}

/// The two labels of a bipartite state, or `A*`-labels against `B*`-labels.
pub fn default_cut(s: &MultipartiteState) -> Result<Cut> {
    let labels = s.labels();
    if labels.len() == 2 {
        return Cut::of_pair(s);
    }
    let a: Vec<&str> = labels.iter().copied().filter(|l| l.starts_with('A')).collect();
    let b: Vec<&str> = labels.iter().copied().filter(|l| l.starts_with('B')).collect();
    if a.is_empty() || b.is_empty() || a.len() + b.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot infer a bipartition of {labels:?}; pass --cut"
        )));
    }
    Ok(Cut::new(&a, &b))
}

fn cut_for(s: &MultipartiteState, text: &Option<String>) -> Result<Cut> {
    let cut = match text {
        Some(t) => parse_cut(t)?,
        None => default_cut(s)?,
    };
    cut.check(s)?;
    Ok(cut)
}

fn parse_list(text: &str, n: usize, what: &str) -> Result<Vec<usize>> {
    let v: Vec<usize> = text
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("{what} `{text}`: {e}")))?;
    if v.len() != n {
        return Err(Error::Parse(format!("{what} `{text}` needs {n} comma-separated integers")));
    }
    Ok(v)
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn read_split(path: &Path) -> Result<SubsystemSplit> {
    let text = std::fs::read_to_string(path)?;
    let f: SplitFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    SubsystemSplit::from_file(&f)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn ppt_options(num: &NumericOpts, seed: u64) -> PptOptions {
    let d = PptOptions::default();
    PptOptions {
        restarts: num.restarts.unwrap_or(d.restarts),
        max_iters: num.max_iters.unwrap_or(d.max_iters),
        rel_tol: d.rel_tol,
        seed: RngSeed(seed),
    }
}

fn cmd_info(state: &Path) -> Result<Outcome> {
    let (s, _) = read_state_file(state)?;
    Ok(Outcome::new("info", vec![path_str(state)], to_value(&entropic_report(&s)?)))
}

fn cmd_measures(state: &Path, cut: &Option<String>, num: &NumericOpts, seed: u64) -> Result<Outcome> {
    let (s, _) = read_state_file(state)?;
    let cut = cut_for(&s, cut)?;
    let ppt = ppt_options(num, seed);
    let report = MeasuresReport {
        log_negativity: MeasureResult {
            value: log_negativity(&s, &cut)?,
            method: crate::measures::METHOD_LOG_NEG.to_string(),
            certificate: None,
        },
        rel_ent_ppt: rel_ent_ppt(&s, &cut, &ppt)?,
        esq_upper: esq_upper(&s, &cut, num.ext_dim, num.trials, RngSeed(seed))?,
        cut,
    };
    let converged = report
        .rel_ent_ppt
        .certificate
        .as_ref()
        .is_none_or(|c| c.converged);
    let mut out = Outcome::new("measures", vec![path_str(state)], to_value(&report))
        .option("ppt", &ppt)
        .option("ext_dim", num.ext_dim)
        .option("esq_trials", num.trials);
    if !converged {
        out.exit = EXIT_NONCONVERGENCE;
    }
    Ok(out)
}

fn cmd_mindep(
    state: &Path,
    cut: &Option<String>,
    keys: &Option<String>,
    split: &Option<String>,
    num: &NumericOpts,
    seed: u64,
) -> Result<Outcome> {
    let (s, _) = read_state_file(state)?;
    let cut = cut_for(&s, cut)?;
    let split = match split {
        Some(t) => {
            let v = parse_list(t, 2, "--split")?;
            Some(SplitDims {
                alpha: v[0],
                beta: v[1],
            })
        }
        None => None,
    };
    let search = SplitSearchOptions {
        seed: RngSeed(seed),
        restarts: num.restarts.unwrap_or(SplitSearchOptions::default().restarts),
        ..SplitSearchOptions::default()
    };
    let opts = MiBoundsOptions {
        cut: Some(cut),
        exact_keys: keys.as_deref().map(parse_cut).transpose()?,
        split,
        search,
        esq_ext_dim: num.ext_dim,
        esq_trials: num.trials,
        seed: RngSeed(seed),
        ppt: Some(ppt_options(num, seed)),
    };
    let report = mi_bounds(&s, &opts)?;
    Ok(Outcome::new("mindep", vec![path_str(state)], to_value(&report)).option("bounds", &opts))
}

fn cmd_rates(
    state: &Path,
    cut: &Option<String>,
    split_file: &Option<PathBuf>,
    iind: Option<f64>,
    num: &NumericOpts,
    seed: u64,
) -> Result<Outcome> {
    let (s, _) = read_state_file(state)?;
    let cut = cut_for(&s, cut)?;
    let split = split_file.as_deref().map(read_split).transpose()?;
    let mut inputs = vec![path_str(state)];
    if let Some(p) = split_file {
        inputs.push(path_str(p));
    }
    let iind = match (iind, &split) {
        (Some(v), _) => Some((v, "supplied on the command line".to_string())),
        (None, Some(sp)) => {
            let c = sp.check(&s)?;
            c.is_exact.then(|| (c.mi_half, "exact split from the split file".to_string()))
        }
        (None, None) => None,
    };
    let esq = esq_upper(&s, &cut, num.ext_dim, num.trials, RngSeed(seed))?;
    let report = rate_region(
        &s,
        &cut,
        &RateInputs {
            split: split.as_ref(),
            iind,
            esq_value: esq.value,
        },
    )?;
    let mut out = Outcome::new("rates", inputs, to_value(&report))
        .option("ext_dim", num.ext_dim)
        .option("esq_trials", num.trials);
    out.csv = Some(report.to_csv());
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_conj5(
    dims: &str,
    trials: usize,
    optimize: bool,
    trial_seed: Option<u64>,
    dim_g: Option<usize>,
    ascent_evals: Option<usize>,
    control: bool,
    out_dir: &Option<PathBuf>,
    seed: u64,
) -> Result<Outcome> {
    let d = parse_list(dims, 3, "--dims")?;
    let mut params = Conj5Params::new(d[0], d[1], d[2]);
    params.dim_g = dim_g;
    if let Some(e) = ascent_evals {
        params.ascent_evals = e;
    }
    if control {
        params.generator = Generator::LockingControl;
    }
    if let Some(ts) = trial_seed {
        let (record, state) = conj5_trial_state(&params, RngSeed(ts), optimize)?;
        let violation = record.slack < VIOLATION_TOL;
        let report = Conj5TrialReport {
            reproduce: crate::conjectures::replay_command(&params, &record),
            record,
            violation,
        };
        if let Some(dir) = out_dir {
            std::fs::create_dir_all(dir)?;
            write_state_file(&dir.join(format!("trial_{ts}.json")), &state)?;
        }
        let mut out = Outcome::new("conj5", vec![], to_value(&report)).option("params", &params);
        if violation {
            out.exit = EXIT_VIOLATION;
        }
        return Ok(out);
    }
    let summary = conj5_search(&params, trials, RngSeed(seed), optimize)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
        std::fs::write(dir.join("histogram.csv"), summary.histogram_csv())?;
        for v in &summary.violations {
            let path = dir.join(format!("violation_{}.json", v.record.trial));
            std::fs::write(path, serde_json::to_string_pretty(&v.state)? + "\n")?;
        }
    }
    let mut out = Outcome::new("conj5", vec![], to_value(&summary))
        .option("params", &params)
        .option("trials", trials)
        .option("optimize", optimize);
    out.csv = Some(summary.histogram_csv());
    if !summary.violations.is_empty() {
        out.exit = EXIT_VIOLATION;
    }
    Ok(out)
}

/// Mutual independence certified without optimization, if any route applies.
fn certified_lower(s: &MultipartiteState, cut: &Cut) -> Result<f64> {
    if s.labels().len() == 2 && is_maximally_correlated(s) {
        return Ok(maxcorr_hashing_bound(s)?.value);
    }
    let c = check_exact_mi_on(s, cut)?;
    Ok(if c.is_exact { c.mi_half } else { 0.0 })
}

fn cmd_conj4(state: &Path, cut: &Option<String>, restarts: usize, seed: u64) -> Result<Outcome> {
    let (s, _) = read_state_file(state)?;
    let cut = cut_for(&s, cut)?;
    let pair = conj4_search(&s, &cut, RngSeed(seed), restarts)?;
    let lower = certified_lower(&s, &cut)?;
    let candidate_violation = pair.is_none() && lower > EXACT_MI_TOL;
    let report = Conj4Report {
        cut,
        pair,
        certified_lower_bound: lower,
        candidate_violation,
    };
    let mut out =
        Outcome::new("conj4", vec![path_str(state)], to_value(&report)).option("restarts", restarts);
    if candidate_violation {
        out.exit = EXIT_VIOLATION;
    }
    Ok(out)
}

fn cmd_classical(cmd: &ClassicalCommand, seed: u64) -> Result<Outcome> {
    match cmd {
        ClassicalCommand::Decompose { dist } => {
            let p = JointDistribution::read(dist)?;
            let d = ki_decompose(&p)?;
            let mut out = Outcome::new("classical decompose", vec![path_str(dist)], to_value(&d));
            out.csv = Some(d.tau_csv());
            Ok(out)
        }
        ClassicalCommand::Rates { dist } => {
            let p = JointDistribution::read(dist)?;
            let d = ki_decompose(&p)?;
            let r = ClassicalRates {
                slepian_wolf_sum: slepian_wolf_sum(&p)?,
                optimal_rate_hlj: d.h_lj,
                has_redundancy: d.has_redundancy(),
                reconstruction_error: d.reconstruction_error,
            };
            Ok(Outcome::new("classical rates", vec![path_str(dist)], to_value(&r)))
        }
        ClassicalCommand::Mindep { dist, maps } => {
            let p = JointDistribution::read(dist)?;
            let mut inputs = vec![path_str(dist)];
            let (f, g) = match maps {
                Some(m) => {
                    inputs.push(path_str(m));
                    let text = std::fs::read_to_string(m)?;
                    let mf: MapsFile = serde_json::from_str(&text)
                        .map_err(|e| Error::Parse(format!("{}: {e}", m.display())))?;
                    (StochasticMap::new(mf.f)?, StochasticMap::new(mf.g)?)
                }
                None => (
                    StochasticMap::identity(p.size_of("X")?),
                    StochasticMap::identity(p.size_of("Y")?),
                ),
            };
            let r = classical_mindep_rate(&p, &f, &g)?;
            Ok(Outcome::new("classical mindep", inputs, to_value(&r)))
        }
        ClassicalCommand::Hashsim {
            dist,
            n,
            out_bits,
            trials,
        } => {
            let p = JointDistribution::read(dist)?;
            let r = hash_sim(&p, *n, *out_bits, *trials, RngSeed(seed))?;
            Ok(Outcome::new("classical hashsim", vec![path_str(dist)], to_value(&r)))
        }
    }
}

const CORPUS: &[(&str, &str)] = &[
    ("phi_plus.json", include_str!("../data/phi_plus.json")),
    ("pbit_d2.json", include_str!("../data/pbit_d2.json")),
    ("pbit_d2.split.json", include_str!("../data/pbit_d2.split.json")),
    ("pdit_d3.json", include_str!("../data/pdit_d3.json")),
    ("maxcorr_eps025.json", include_str!("../data/maxcorr_eps025.json")),
    ("iso_F09_d2.json", include_str!("../data/iso_F09_d2.json")),
    ("local_eve.json", include_str!("../data/local_eve.json")),
    ("corr_anticorr_p075.json", include_str!("../data/corr_anticorr_p075.json")),
];

/// Names of the shipped example files.
pub fn corpus_names() -> Vec<&'static str> {
    CORPUS.iter().map(|(n, _)| *n).collect()
}

/// Value and tolerance of one expected key on a state.
fn state_key(s: &MultipartiteState, key: &str, split: Option<&SubsystemSplit>) -> Result<(f64, f64)> {
    if key.starts_with("S(") || key.starts_with("I(") || key.starts_with("J(") {
        let r = entropic_report(s)?;
        let v = r
            .get(key)
            .ok_or_else(|| Error::InvalidArgument(format!("entropic report has no `{key}`")))?;
        return Ok((v, 1e-9));
    }
    match key {
        "E_N" => Ok((log_negativity(s, &default_cut(s)?)?, 1e-9)),
        "E_r_ppt" => Ok((rel_ent_ppt(s, &default_cut(s)?, &PptOptions::default())?.value, 1e-4)),
        "hashing_bound" => Ok((maxcorr_hashing_bound(s)?.value, 1e-9)),
        "exact_mi_residual" => Ok((check_exact_mi(s)?.residual, EXACT_MI_TOL)),
        "iind_lower" => {
            let c = if s.labels().len() == 2 {
                check_exact_mi_on(s, &Cut::of_pair(s)?)?
            } else {
                check_exact_mi(s)?
            };
            Ok((if c.is_exact { c.mi_half } else { 0.0 }, EXACT_MI_TOL))
        }
        "rate_gap" => {
            let sp = split.ok_or_else(|| Error::InvalidArgument("rate_gap needs a split file".into()))?;
            Ok((rate_sum_identity_check(s, sp)?.gap, EXACT_MI_TOL))
        }
        "protocol_value" => {
            let p = JointDistribution::from_diagonal_state(s)?
                .relabel("A", "X")?
                .relabel("B", "Y")?
                .group(&["E1", "E2"], "Z")?;
            let id = |n| StochasticMap::identity(n);
            let r = classical_mindep_rate(&p, &id(p.size_of("X")?), &id(p.size_of("Y")?))?;
            Ok((r.protocol_value, 1e-9))
        }
        _ => Err(Error::InvalidArgument(format!("unknown expected key `{key}`"))),
    }
}

fn dist_key(p: &JointDistribution, key: &str) -> Result<(f64, f64)> {
    match key {
        "slepian_wolf_sum" => Ok((slepian_wolf_sum(p)?, 1e-9)),
        "optimal_rate_hlj" => Ok((ki_decompose(p)?.h_lj, 1e-9)),
        "I(X:Y)" => Ok((classical_mi(p, &["X"], &["Y"])?, 1e-9)),
        _ => Err(Error::InvalidArgument(format!("unknown expected key `{key}`"))),
    }
}

/// Run every embedded check of the corpus.
pub fn selftest(data_dir: Option<&Path>) -> Result<SelftestReport> {
    let load = |name: &str, builtin: &str| -> Result<String> {
        match data_dir {
            Some(d) => Ok(std::fs::read_to_string(d.join(name))?),
            None => Ok(builtin.to_string()),
        }
    };
    let mut checks = Vec::new();
    for (name, builtin) in CORPUS {
        if name.ends_with(".split.json") {
            continue;
        }
        let text = load(name, builtin)?;
        let raw: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{name}: {e}")))?;
        let expected: BTreeMap<String, f64> = raw
            .get("expected")
            .map(|v| serde_json::from_value(v.clone()))
            .transpose()?
            .unwrap_or_default();
        let evaluate: Box<dyn Fn(&str) -> Result<(f64, f64)>> = if raw.get("alphabets").is_some() {
            let p = JointDistribution::from_json(&text)?;
            Box::new(move |k| dist_key(&p, k))
        } else {
            let f: StateFile =
                serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{name}: {e}")))?;
            let s = f.to_state()?;
            let split_name = name.replace(".json", ".split.json");
            let split = match CORPUS.iter().find(|(n, _)| *n == split_name) {
                Some((n, b)) => {
                    let sf: SplitFile = serde_json::from_str(&load(n, b)?)
                        .map_err(|e| Error::Parse(format!("{n}: {e}")))?;
                    Some(SubsystemSplit::from_file(&sf)?)
                }
                None => None,
            };
            Box::new(move |k| state_key(&s, k, split.as_ref()))
        };
        for (key, want) in expected {
            let (actual, tolerance) = evaluate(&key)?;
            checks.push(SelftestCheck {
                file: name.to_string(),
                pass: (actual - want).abs() <= tolerance,
                key,
                expected: want,
                actual,
                tolerance,
            });
        }
    }
    let passed = checks.iter().all(|c| c.pass);
    Ok(SelftestReport { checks, passed })
}

fn cmd_selftest(data_dir: &Option<PathBuf>) -> Result<Outcome> {
    let r = selftest(data_dir.as_deref())?;
    let inputs = data_dir.iter().map(|d| path_str(d)).collect();
    let mut out = Outcome::new("selftest", inputs, to_value(&r));
    let mut csv = String::from("file,key,expected,actual,tolerance,pass\n");
    for c in &r.checks {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.file, c.key, c.expected, c.actual, c.tolerance, c.pass
        ));
    }
    out.csv = Some(csv);
    if !r.passed {
        out.exit = EXIT_VALIDATION;
    }
    Ok(out)
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let seed = cli.seed;
    match &cli.command {
        Command::Info { state } => cmd_info(state),
        Command::Measures { state, cut, num } => cmd_measures(state, cut, num, seed),
        Command::Mindep {
            state,
            cut,
            keys,
            split,
            num,
        } => cmd_mindep(state, cut, keys, split, num, seed),
        Command::Rates {
            state,
            cut,
            split_file,
            iind,
            num,
        } => cmd_rates(state, cut, split_file, *iind, num, seed),
        Command::Conj5 {
            dims,
            trials,
            optimize,
            trial_seed,
            dim_g,
            ascent_evals,
            control,
            out_dir,
        } => cmd_conj5(
            dims,
            *trials,
            *optimize,
            *trial_seed,
            *dim_g,
            *ascent_evals,
            *control,
            out_dir,
            seed,
        ),
        Command::Conj4 {
            state,
            cut,
            restarts,
        } => cmd_conj4(state, cut, *restarts, seed),
        Command::Classical { command } => cmd_classical(command, seed),
        Command::Selftest { data_dir } => cmd_selftest(data_dir),
    }
}

/// Flatten nested JSON into `path = scalar` rows; long numeric arrays are summarized.
fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&join(k), x, rows);
            }
        }
        Value::Array(a) if a.len() > 16 && a.iter().all(|x| !x.is_object()) => {
            rows.push((prefix.to_string(), format!("[{} entries]", a.len())));
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&join(&i.to_string()), x, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        Value::Null => rows.push((prefix.to_string(), "-".into())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render(out: &Outcome, config: &RunConfig, format: Format) -> String {
    match format {
        Format::Json => {
            let doc = json!({ "config": config, "report": out.report });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        Format::Csv => match &out.csv {
            Some(c) => c.clone(),
            None => {
                let mut rows = Vec::new();
                flatten("", &out.report, &mut rows);
                let mut s = String::from("key,value\n");
                for (k, v) in rows {
                    s.push_str(&format!("{},{}\n", csv_field(&k), csv_field(&v)));
                }
                s
            }
        },
        Format::Table => {
            let mut s = format!("# mutind {}\n", config.command);
            let mut head = Vec::new();
            flatten("", &to_value(config), &mut head);
            for (k, v) in head.iter().filter(|(k, _)| k != "command") {
                s.push_str(&format!("# {k} = {v}\n"));
            }
            let mut rows = Vec::new();
            flatten("", &out.report, &mut rows);
            let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
            for (k, v) in rows {
                s.push_str(&format!("{k:<width$}  {v}\n"));
            }
            s
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence(_) => EXIT_NONCONVERGENCE,
        _ => EXIT_VALIDATION,
    }
}

/// Parse `args` (including the program name), run, write to `out`/`err`, return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let pool = match cli.jobs {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        _ => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start worker pool: {e}");
            return EXIT_VALIDATION;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(o) => {
            let config = RunConfig {
                command: o.command.clone(),
                inputs: o.inputs.clone(),
                seed: cli.seed,
                format: cli.format,
                jobs: cli.jobs,
                options: o.options.clone(),
                tolerances: tolerances(),
            };
            let _ = out.write_all(render(&o, &config, cli.format).as_bytes());
            o.exit
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
