//! Argument parsing and subcommand execution.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use sepqma_core::bellqma::{estimate_acceptance, preset_message, MerlinStrategy, ProtocolParams};
use sepqma_core::encoding::{
    decode_error, decode_state, default_precision, encode_state, encoding_bound, encoding_error, preparation_plan,
};
use sepqma_core::product::{brute_force_max, seesaw_max, BruteForceConfig, DEFAULT_RESTARTS};
use sepqma_core::random::{haar_vector, stream};
use sepqma_core::repetition::{k_fold_values, verify_perfect_repetition, RepetitionConfig};
use sepqma_core::separable::WitnessSearch;
use sepqma_core::shape::DEFAULT_MAX_DIM;
use sepqma_core::{HermitianOperator, MultipartiteShape, PureState};

use crate::error::{CliError, CliResult};
use crate::formats::{
    description_from_hex, description_to_hex, parse_json, AnyOperatorDoc, EstimateDoc, OptimizationDoc, PlanDoc,
    ProtocolDoc, RepetitionDoc, TrialRow, VectorDoc,
};

#[derive(Debug, Parser)]
#[command(name = "sepqma", version, about = "Multi-prover verification experiments at desk scale")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo trials.
    #[arg(long, global = true, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Tolerance for the repetition verdict.
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub tol: f64,
    /// Largest joint dimension any subcommand may build.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_DIM)]
    pub max_dim: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Omit the metadata block (version, timestamp).
    #[arg(long, global = true)]
    pub no_meta: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Merlin {
    Honest,
    LyingX,
    MixedY,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximize <φ|C|φ> over product states by multistart seesaw.
    Optimize {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
    },
    /// Sampling oracle for the product-state maximum (joint dimension ≤ 64).
    #[command(alias = "brute")]
    Oracle {
        file: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 8)]
        refine: usize,
    },
    /// Two-fold repetition of two separable operators, or k-fold repetition of one operator.
    Parrep {
        #[arg(num_args = 1..=2, required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        /// Treat the operator as a single party.
        #[arg(long)]
        one_party: bool,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 20_000)]
        witness_samples: usize,
    },
    /// Monte Carlo run of the single-prover protocol simulating a Bell-measurement verifier.
    Bellqma {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Merlin::Honest)]
        merlin: Merlin,
        /// Overrides p (and k = 5p³ unless --k is given).
        #[arg(long)]
        p: Option<u64>,
        #[arg(long)]
        k: Option<u64>,
        #[arg(long)]
        q: Option<u64>,
        #[arg(long)]
        alpha: Option<u32>,
        /// Mass moved by the lying-x preset.
        #[arg(long)]
        shift: Option<f64>,
        /// Also write the per-trial CSV here.
        #[arg(long)]
        trials_out: Option<PathBuf>,
    },
    /// Fixed-precision description of a pure state.
    Encode {
        #[command(flatten)]
        input: StateInput,
        /// Precision bits f (default 20·N).
        #[arg(long)]
        bits: Option<u32>,
        /// Write the preparation plan JSON here.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Decode a hex description (given inline or as a file path).
    Decode { description: String },
    /// Encode then decode, reporting fidelity and errors.
    Roundtrip {
        #[command(flatten)]
        input: StateInput,
        #[arg(long)]
        bits: Option<u32>,
    },
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct StateInput {
    /// State file `{"re": [..], "im": [..]}`.
    pub file: Option<PathBuf>,
    /// Haar-random state of this dimension, drawn from --seed.
    #[arg(long)]
    pub random: Option<usize>,
}

/// A finished result: JSON payload plus its CSV rendering.
struct Output {
    json: Value,
    csv: Vec<Vec<String>>,
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn check_dim(dims: &[usize], max_dim: usize) -> CliResult<MultipartiteShape> {
    let shape = MultipartiteShape::new(dims.to_vec())?;
    shape.check_cap(max_dim)?;
    Ok(shape)
}

fn load_any(path: &Path, max_dim: usize) -> CliResult<AnyOperatorDoc> {
    let doc: AnyOperatorDoc = parse_json(&read(path)?, &path.display().to_string())?;
    check_dim(doc.dims(), max_dim)?;
    Ok(doc)
}

fn load_dense(path: &Path, max_dim: usize) -> CliResult<HermitianOperator> {
    match load_any(path, max_dim)? {
        AnyOperatorDoc::Dense(d) => d.to_operator(),
        AnyOperatorDoc::Separable(s) => Ok(sepqma_core::separable::densify_capped(&s.to_separable()?, max_dim)?),
    }
}

fn load_state(input: &StateInput, seed: u64, max_dim: usize) -> CliResult<PureState> {
    let psi = match (&input.file, input.random) {
        (Some(path), _) => parse_json::<VectorDoc>(&read(path)?, &path.display().to_string())?.to_state()?,
        (None, Some(n)) => {
            check_dim(&[n], max_dim)?;
            PureState::new(MultipartiteShape::single(n)?, haar_vector(n, &mut stream(seed, 0)))?
        }
        (None, None) => return Err(CliError::Parse("a state file or --random N is required".into())),
    };
    check_dim(&[psi.amplitudes().len()], max_dim)?;
    Ok(psi)
}

fn row<T: ToString>(cells: impl IntoIterator<Item = T>) -> Vec<String> {
    cells.into_iter().map(|c| c.to_string()).collect()
}

fn to_value<T: Serialize>(v: &T) -> CliResult<Value> {
    Ok(serde_json::to_value(v)?)
}

fn cmd_optimize(g: &GlobalOpts, file: &Path, restarts: usize) -> CliResult<Output> {
    let c = load_dense(file, g.max_dim)?;
    let r = seesaw_max(&c, restarts, &mut stream(g.seed, 0))?;
    let mut csv = vec![row(["sweep", "value"])];
    csv.extend(r.trace.iter().enumerate().map(|(i, v)| row([i.to_string(), v.to_string()])));
    Ok(Output { json: to_value(&OptimizationDoc::from_result(&r))?, csv })
}

fn cmd_oracle(g: &GlobalOpts, file: &Path, samples: usize, refine: usize) -> CliResult<Output> {
    let c = load_dense(file, g.max_dim)?;
    let value = brute_force_max(&c, &BruteForceConfig { samples, refine_best: refine, seed: g.seed })?;
    Ok(Output { json: json!({ "value": value, "samples": samples }), csv: vec![row(["value"]), row([value])] })
}

fn cmd_parrep(
    g: &GlobalOpts,
    files: &[PathBuf],
    k: Option<usize>,
    one_party: bool,
    restarts: usize,
    witness_samples: usize,
) -> CliResult<Output> {
    match (files, k) {
        ([file], Some(k)) => {
            let mut c = load_dense(file, g.max_dim)?;
            if one_party {
                c = c.reshaped(MultipartiteShape::single(c.dim())?)?;
            }
            let total = (c.dim() as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
            if total > g.max_dim as u128 {
                return Err(sepqma_core::Error::Capacity { dim: total.min(usize::MAX as u128) as usize, cap: g.max_dim }.into());
            }
            let (v1, vk) = k_fold_values(&c, k, restarts, &mut stream(g.seed, 0))?;
            let expected = v1.powi(k as i32);
            let json = json!({ "k": k, "v1": v1, "vk": vk, "v1_pow_k": expected, "gap": (vk - expected).abs() });
            Ok(Output { json, csv: vec![row(["k", "v1", "vk", "v1_pow_k"]), row([k.to_string(), v1.to_string(), vk.to_string(), expected.to_string()])] })
        }
        ([a, b], None) => {
            let load_sep = |p: &PathBuf| match load_any(p, g.max_dim)? {
                AnyOperatorDoc::Separable(s) => s.to_separable(),
                AnyOperatorDoc::Dense(_) => Err(CliError::Parse(format!("{}: expected a separable operator file", p.display()))),
            };
            let (c1, c2) = (load_sep(a)?, load_sep(b)?);
            if c1.parties() != c2.parties() {
                return Err(sepqma_core::Error::PartyMismatch { left: c1.parties(), right: c2.parties() }.into());
            }
            let paired: Vec<usize> = c1.shape().dims().iter().zip(c2.shape().dims()).map(|(x, y)| x * y).collect();
            check_dim(&paired, g.max_dim)?;
            let config = RepetitionConfig {
                restarts,
                witness: WitnessSearch { samples: witness_samples, ..WitnessSearch::default() },
                ..RepetitionConfig::default()
            };
            let report = verify_perfect_repetition(&c1, &c2, g.tol, &config, &mut stream(g.seed, 0))?;
            let doc = RepetitionDoc::from_report(&report);
            let csv = vec![
                row(["v1", "v2", "v", "t1t2", "witness_min", "verdict"]),
                row([doc.v1.to_string(), doc.v2.to_string(), doc.v.to_string(), doc.t1t2.to_string(), doc.witness_min.to_string(), doc.verdict.clone()]),
            ];
            Ok(Output { json: to_value(&doc)?, csv })
        }
        ([_], None) => Err(CliError::Parse("parrep needs two files, or one file with --k".into())),
        _ => Err(CliError::Parse("--k takes exactly one file".into())),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_bellqma(
    g: &GlobalOpts,
    file: &Path,
    merlin: Merlin,
    p: Option<u64>,
    k: Option<u64>,
    q: Option<u64>,
    alpha: Option<u32>,
    shift: Option<f64>,
    trials_out: Option<&Path>,
) -> CliResult<Output> {
    let doc: ProtocolDoc = parse_json(&read(file)?, &file.display().to_string())?;
    let m = doc.povms.len();
    let r = doc.povms.first().map_or(0, Vec::len);
    // Fail on the table cap before touching any operator.
    sepqma_core::bellqma::Stage2Acceptor::constant(m.max(1), r.max(1), 0.0)?;
    let (protocol, proofs) = doc.to_protocol()?;
    for j in 0..protocol.provers() {
        check_dim(&[protocol.local_dim(j)], g.max_dim)?;
    }
    let proofs = match proofs {
        Some(ps) => ps,
        None => (0..protocol.provers())
            .map(|j| {
                let d = protocol.local_dim(j);
                Ok(HermitianOperator::identity(MultipartiteShape::single(d)?).scale(1.0 / d as f64))
            })
            .collect::<CliResult<Vec<_>>>()?,
    };

    let mut params = protocol.default_params()?;
    if let Some(p) = p {
        params = params.with_p(p)?;
    }
    params = ProtocolParams::new(params.p, k.unwrap_or(params.k), q.unwrap_or(params.q), alpha.unwrap_or(params.alpha))?;
    let strategy = match merlin {
        Merlin::Honest => MerlinStrategy::Honest,
        Merlin::LyingX => MerlinStrategy::LyingX { shift },
        Merlin::MixedY => MerlinStrategy::MixedY,
    };
    let message = preset_message(&protocol, &proofs, &params, strategy)?;
    let est = estimate_acceptance(&protocol, &message, &params, g.trials, g.seed)?;

    let mut csv = vec![row(["trial", "accepted", "rejection_stage", "j", "i", "n_ji"])];
    for (t, o) in est.outcomes.iter().enumerate() {
        let tr = TrialRow::new(t as u64, o);
        let opt = |x: Option<String>| x.unwrap_or_default();
        csv.push(vec![
            tr.trial.to_string(),
            tr.accepted.to_string(),
            tr.rejection_stage,
            opt(tr.j.map(|v| v.to_string())),
            opt(tr.i.map(|v| v.to_string())),
            opt(tr.n_ji.map(|v| v.to_string())),
        ]);
    }
    if let Some(path) = trials_out {
        write_csv(&csv, &mut fs::File::create(path)?)?;
    }
    let json = json!({
        "params": { "p": params.p, "k": params.k, "q": params.q, "alpha": params.alpha },
        "m": protocol.provers(),
        "r": protocol.outcomes(),
        "merlin": merlin.to_possible_value().map(|v| v.get_name().to_string()),
        "estimate": to_value(&EstimateDoc::from_estimate(&est))?,
        "soundness_bound": sepqma_core::bellqma::soundness_bound(protocol.provers(), protocol.outcomes()),
        "completeness_bound": sepqma_core::bellqma::completeness_bound(&params),
    });
    Ok(Output { json, csv })
}

fn precision(bits: Option<u32>, n: usize) -> CliResult<u32> {
    match bits {
        Some(0) => Err(CliError::Parse("--bits must be at least 1".into())),
        Some(f) => Ok(f),
        None => Ok(default_precision(n)?),
    }
}

fn cmd_encode(g: &GlobalOpts, input: &StateInput, bits: Option<u32>, plan: Option<&Path>) -> CliResult<Output> {
    let psi = load_state(input, g.seed, g.max_dim)?;
    let n = psi.amplitudes().len();
    let f = precision(bits, n)?;
    let desc = encode_state(&psi, f)?;
    let hex = description_to_hex(&desc)?;
    let bound = encoding_bound(n, f);
    let fixed = encoding_error(&psi, &desc)?;
    let decoded = decode_error(&psi, &desc).ok();
    if let Some(path) = plan {
        fs::write(path, serde_json::to_string_pretty(&PlanDoc::from_plan(&preparation_plan(&psi)))? + "\n")?;
    }
    let json = json!({
        "dimension": n,
        "precision": f,
        "bound": bound,
        "error_fixed_point": fixed,
        "error_decoded": decoded,
        "description": hex,
    });
    let csv = vec![
        row(["dimension", "precision", "bound", "error_fixed_point", "error_decoded", "description"]),
        row([n.to_string(), f.to_string(), bound.to_string(), fixed.to_string(), decoded.map_or(String::new(), |e| e.to_string()), hex]),
    ];
    Ok(Output { json, csv })
}

fn cmd_decode(g: &GlobalOpts, description: &str) -> CliResult<Output> {
    let text = if Path::new(description).is_file() { read(Path::new(description))? } else { description.to_string() };
    let desc = description_from_hex(&text)?;
    check_dim(&[desc.dimension()], g.max_dim)?;
    let psi = decode_state(&desc)?;
    let doc = VectorDoc::from_amplitudes(psi.amplitudes());
    let mut csv = vec![row(["index", "re", "im"])];
    csv.extend(doc.re.iter().zip(&doc.im).enumerate().map(|(i, (a, b))| row([i.to_string(), a.to_string(), b.to_string()])));
    Ok(Output { json: to_value(&doc)?, csv })
}

fn cmd_roundtrip(g: &GlobalOpts, input: &StateInput, bits: Option<u32>) -> CliResult<Output> {
    let psi = load_state(input, g.seed, g.max_dim)?;
    let n = psi.amplitudes().len();
    let f = precision(bits, n)?;
    let desc = encode_state(&psi, f)?;
    let parsed = description_from_hex(&description_to_hex(&desc)?)?;
    if parsed != desc {
        return Err(CliError::Output("hex round trip changed the description".into()));
    }
    let back = decode_state(&parsed)?;
    let fidelity = psi.fidelity(&back);
    let err = decode_error(&psi, &parsed)?;
    let json = json!({ "dimension": n, "precision": f, "fidelity": fidelity, "error_decoded": err, "bound": encoding_bound(n, f) });
    let csv = vec![row(["dimension", "precision", "fidelity", "error_decoded"]), row([n.to_string(), f.to_string(), fidelity.to_string(), err.to_string()])];
    Ok(Output { json, csv })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Optimize { .. } => "optimize",
        Command::Oracle { .. } => "oracle",
        Command::Parrep { .. } => "parrep",
        Command::Bellqma { .. } => "bellqma",
        Command::Encode { .. } => "encode",
        Command::Decode { .. } => "decode",
        Command::Roundtrip { .. } => "roundtrip",
    }
}

fn write_csv(rows: &[Vec<String>], w: &mut dyn Write) -> CliResult<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.write_record(r)?;
    }
    wtr.flush()?;
    Ok(())
}

fn render(g: &GlobalOpts, command: &str, out: Output) -> CliResult<Vec<u8>> {
    match g.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&out.csv, &mut buf)?;
            Ok(buf)
        }
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("command".into(), json!(command));
            doc.insert("seed".into(), json!(g.seed));
            doc.insert("result".into(), out.json);
            if !g.no_meta {
                let unix_time = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
                doc.insert("meta".into(), json!({ "version": env!("CARGO_PKG_VERSION"), "unix_time": unix_time }));
            }
            let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
            text.push('\n');
            Ok(text.into_bytes())
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let g = &cli.global;
    let out = match &cli.command {
        Command::Optimize { file, restarts } => cmd_optimize(g, file, *restarts)?,
        Command::Oracle { file, samples, refine } => cmd_oracle(g, file, *samples, *refine)?,
        Command::Parrep { files, k, one_party, restarts, witness_samples } => {
            cmd_parrep(g, files, *k, *one_party, *restarts, *witness_samples)?
        }
        Command::Bellqma { file, merlin, p, k, q, alpha, shift, trials_out } => {
            cmd_bellqma(g, file, *merlin, *p, *k, *q, *alpha, *shift, trials_out.as_deref())?
        }
        Command::Encode { input, bits, plan } => cmd_encode(g, input, *bits, plan.as_deref())?,
        Command::Decode { description } => cmd_decode(g, description)?,
        Command::Roundtrip { input, bits } => cmd_roundtrip(g, input, *bits)?,
    };
    let bytes = render(g, command_name(&cli.command), out)?;
    match &g.out {
        Some(path) => fs::write(path, bytes)?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

/// Parses `args` and runs the command, mapping failures to exit codes.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
