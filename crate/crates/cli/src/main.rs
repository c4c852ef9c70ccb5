//! `lgseq`: batch command-line front end for the lane-graph sequence codec.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use lgseq_core::error::FormatError;
use lgseq_core::io::{self, GraphDoc};
use lgseq_core::{
    assemble_training_pair, compare_roundtrip, dag_to_lanegraph, decode, decode_lenient, encode, evaluate,
    extract_keypoints, generate, run, sequence_nll, shuffle_prompt, stream_rng, validate_dag, validate_sequence,
    CodecConfig, Error, GenSpec, KeyPointDag, Mode, ProbTable, TokenWeights,
};

const CONFIG_ENV: &str = "LGSEQ_CONFIG";

#[derive(Parser)]
#[command(name = "lgseq", version, about = "Lane-graph sequence codec")]
struct Cli {
    /// TOML file of key = value codec overrides (falls back to $LGSEQ_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed; overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-line work. Output order is unchanged.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct GraphIn {
    /// Lane-graph or DAG JSON, one document or JSON lines.
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Args)]
struct Out {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Graph documents to token lines.
    Encode {
        #[command(flatten)]
        input: GraphIn,
        #[command(flatten)]
        out: Out,
    },
    /// Token lines to DAG JSON, or constrained decoding from a probability table.
    Decode {
        /// Token lines to decode.
        #[arg(long, conflicts_with = "probs", required_unless_present = "probs")]
        tokens: Option<PathBuf>,
        /// TOKPROB table; one row per decoding step.
        #[arg(long)]
        probs: Option<PathBuf>,
        /// Sample instead of greedy argmax (with --probs).
        #[arg(long, requires = "probs")]
        sample: bool,
        /// Write the decoded tokens here (with --probs).
        #[arg(long, requires = "probs")]
        tokens_out: Option<PathBuf>,
        /// Skip malformed sextets instead of failing.
        #[arg(long)]
        lenient: bool,
        /// Emit lane graphs instead of DAGs.
        #[arg(long)]
        lanes: bool,
        #[command(flatten)]
        out: Out,
    },
    /// Encode, decode and compare; exit 0 iff every graph survives.
    Roundtrip {
        #[command(flatten)]
        input: GraphIn,
    },
    /// Shuffled key-point prompts, one line of `xb,yb` pairs per graph.
    Prompt {
        #[command(flatten)]
        input: GraphIn,
        /// Keep extraction order.
        #[arg(long)]
        no_shuffle: bool,
        #[command(flatten)]
        out: Out,
    },
    /// Training pairs: an input line then a target line per graph.
    Assemble {
        #[command(flatten)]
        input: GraphIn,
        #[command(flatten)]
        out: Out,
    },
    /// Report grammar violations of token lines, or invariant violations of graphs.
    Validate {
        #[arg(long, required_unless_present = "graph", conflicts_with = "graph")]
        tokens: Option<PathBuf>,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
    /// Score predicted graphs against ground truth, line by line.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[command(flatten)]
        out: Out,
    },
    /// Synthetic graphs as JSON lines.
    Gen {
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Draw generator parameters per graph from the seed.
        #[arg(long, conflicts_with = "spec")]
        varied: bool,
        /// TOML generator spec; `seed` is replaced per graph.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Emit DAG documents instead of lane graphs.
        #[arg(long)]
        dag: bool,
        #[command(flatten)]
        out: Out,
    },
    /// Negative log-likelihood of a target line under a probability table.
    Nll {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        probs: PathBuf,
        #[command(flatten)]
        out: Out,
    },
}

/// A failure with its exit code: 1 I/O, 2 validation, 3 budget.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self { code: 1, msg: format!("IoError: {}: {e}", path.display()) }
    }

    fn invalid(msg: impl Into<String>) -> Self {
        Self { code: 2, msg: msg.into() }
    }

    fn at(self, line: usize) -> Self {
        Self { msg: format!("line {}: {}", line + 1, self.msg), ..self }
    }
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e = e.into();
        let code = if e.is_io() {
            1
        } else if e.is_budget() {
            3
        } else {
            2
        };
        Self { code, msg: format!("{}: {e}", e.name()) }
    }
}

type Res<T> = Result<T, Failure>;

fn load_config(cli: &Cli) -> Res<CodecConfig> {
    let path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let mut cfg = match path {
        Some(p) => {
            let text = read(&p)?;
            toml::from_str::<CodecConfig>(&text)
                .map_err(|e| Failure::invalid(format!("InvalidConfig: {}: {e}", p.display())))?
        }
        None => CodecConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read(p: &Path) -> Res<String> {
    fs::read_to_string(p).map_err(|e| Failure::io(p, e))
}

fn read_graphs(p: &Path) -> Res<Vec<GraphDoc>> {
    let text = read(p)?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    Ok(io::parse_graphs(&text)?)
}

fn token_lines(p: &Path) -> Res<Vec<Vec<u32>>> {
    read(p)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| io::parse_tokens(l).map_err(|e| Failure::from(e).at(i)))
        .collect()
}

fn read_table(p: &Path) -> Res<ProbTable> {
    let f = fs::File::open(p).map_err(|e| Failure::io(p, e))?;
    ProbTable::read_from(std::io::BufReader::new(f)).map_err(|e| match e {
        FormatError::Io(e) => Failure::io(p, e),
        e => e.into(),
    })
}

fn line_rng(cfg: &CodecConfig, line: usize) -> ChaCha8Rng {
    stream_rng(cfg.seed, line as u64)
}

/// Apply `f` to every item, in parallel when asked; the first failure by index wins.
fn map_lines<T: Sync, U: Send>(items: &[T], f: impl Fn(usize, &T) -> Res<U> + Sync + Send) -> Res<Vec<U>> {
    let results: Vec<Res<U>> = items.par_iter().enumerate().map(|(i, x)| f(i, x).map_err(|e| e.at(i))).collect();
    results.into_iter().collect()
}

fn write_lines(out: &Out, lines: &[String]) -> Res<()> {
    let mut text = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    match &out.out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::io(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::io(Path::new("<stdout>"), e)),
    }
}

fn execute(cli: &Cli) -> Res<bool> {
    let cfg = load_config(cli)?;
    match &cli.cmd {
        Cmd::Encode { input, out } => {
            let docs = read_graphs(&input.graph)?;
            let lines = map_lines(&docs, |_, doc| {
                let seq = encode(&doc.to_dag(&cfg)?, &cfg)?;
                Ok(io::format_tokens(&seq.tokens(&cfg)))
            })?;
            write_lines(out, &lines)?;
        }
        Cmd::Decode { tokens: Some(path), lenient, lanes, out, .. } => {
            let seqs = token_lines(path)?;
            let lines = map_lines(&seqs, |i, toks| {
                let dag = if *lenient {
                    let d = decode_lenient(toks, &cfg);
                    for e in &d.skipped {
                        eprintln!("line {}: skipped: {}: {e}", i + 1, e.name());
                    }
                    d.dag
                } else {
                    decode(toks, &cfg)?
                };
                Ok(dag_line(&dag, *lanes, &cfg))
            })?;
            write_lines(out, &lines)?;
        }
        Cmd::Decode { probs: Some(path), sample, tokens_out, lanes, out, .. } => {
            let table = read_table(path)?;
            let mode = if *sample { Mode::Sample } else { Mode::Greedy };
            let mut rng = line_rng(&cfg, 0);
            let res = run(&mut &table, &cfg, mode, &mut rng)?;
            if let Some(p) = tokens_out {
                write_lines(&Out { out: Some(p.clone()) }, &[io::format_tokens(&res.tokens)])?;
            }
            write_lines(out, &[dag_line(&res.dag, *lanes, &cfg)])?;
        }
        Cmd::Decode { .. } => unreachable!("clap requires --tokens or --probs"),
        Cmd::Roundtrip { input } => {
            let docs = read_graphs(&input.graph)?;
            let limit = 0.5 * cfg.bin_width_x().max(cfg.bin_width_y()) + 1e-6;
            let reports = map_lines(&docs, |_, doc| {
                let dag = doc.to_dag(&cfg)?;
                let seq = encode(&dag, &cfg)?;
                let back = decode(&seq.tokens(&cfg), &cfg)?;
                Ok(compare_roundtrip(&dag, &back, &cfg))
            })?;
            let mut ok = true;
            let lines: Vec<String> = reports
                .iter()
                .map(|r| {
                    let pass = r.topology_exact && r.max_deviation <= limit;
                    ok &= pass;
                    format!(
                        "topology_exact={} max_deviation={} {}",
                        r.topology_exact,
                        r.max_deviation,
                        if pass { "ok" } else { "FAIL" }
                    )
                })
                .collect();
            write_lines(&Out { out: None }, &lines)?;
            return Ok(ok);
        }
        Cmd::Prompt { input, no_shuffle, out } => {
            let docs = read_graphs(&input.graph)?;
            let lines = map_lines(&docs, |i, doc| {
                let p = extract_keypoints(&doc.to_lanes(&cfg), &cfg)?;
                let p = if *no_shuffle {
                    p
                } else {
                    shuffle_prompt(&p, rand::RngCore::next_u64(&mut line_rng(&cfg, i)))
                };
                Ok(io::format_prompt(&p))
            })?;
            write_lines(out, &lines)?;
        }
        Cmd::Assemble { input, out } => {
            let docs = read_graphs(&input.graph)?;
            let pairs = map_lines(&docs, |i, doc| {
                let seq = encode(&doc.to_dag(&cfg)?, &cfg)?;
                let prompt = extract_keypoints(&doc.to_lanes(&cfg), &cfg)?;
                let pair = assemble_training_pair(&seq, &prompt, &cfg, &mut line_rng(&cfg, i))?;
                Ok([io::format_tokens(&pair.input), io::format_tokens(&pair.target)])
            })?;
            write_lines(out, &pairs.concat())?;
        }
        Cmd::Validate { tokens, graph, out } => {
            let reports: Vec<Vec<String>> = if let Some(p) = tokens {
                map_lines(&token_lines(p)?, |_, toks| {
                    Ok(validate_sequence(toks, &cfg)
                        .iter()
                        .map(|e| format!("{}: {e}", e.name()))
                        .collect())
                })?
            } else {
                let p = graph.as_ref().expect("clap requires --tokens or --graph");
                map_lines(&read_graphs(p)?, |_, doc| {
                    let dag = doc.to_dag(&cfg)?;
                    Ok(validate_dag(&dag, cfg.merge_eps).iter().map(|v| format!("{v:?}")).collect())
                })?
            };
            let ok = reports.iter().all(Vec::is_empty);
            let lines: Vec<String> = reports
                .iter()
                .map(|r| serde_json::to_string(r).expect("strings serialize"))
                .collect();
            write_lines(out, &lines)?;
            if !ok {
                return Err(Failure::invalid("violations found"));
            }
        }
        Cmd::Eval { pred, gt, out } => {
            let (p, g) = (read_graphs(pred)?, read_graphs(gt)?);
            if p.len() != g.len() {
                return Err(Failure::invalid(format!(
                    "ParseError: {} predicted graphs but {} ground-truth graphs",
                    p.len(),
                    g.len()
                )));
            }
            let pairs: Vec<_> = p.iter().zip(&g).collect();
            let lines = map_lines(&pairs, |_, (p, g)| {
                let r = evaluate(&p.to_lanes(&cfg), &g.to_lanes(&cfg), &cfg);
                Ok(serde_json::to_string(&r).expect("report serializes"))
            })?;
            write_lines(out, &lines)?;
        }
        Cmd::Gen { count, varied, spec, dag, out } => {
            let base = match spec {
                Some(p) => toml::from_str::<GenSpec>(&read(p)?)
                    .map_err(|e| Failure::invalid(format!("SpecInfeasible: {}: {e}", p.display())))?,
                None => GenSpec::default(),
            };
            let seeds: Vec<u64> = (0..*count).map(|i| cfg.seed.wrapping_add(i)).collect();
            let lines = map_lines(&seeds, |_, &seed| {
                let spec = if *varied { GenSpec::varied(seed) } else { GenSpec { seed, ..base.clone() } };
                let d = generate(&spec, &cfg)?;
                Ok(dag_line(&d, !*dag, &cfg))
            })?;
            write_lines(out, &lines)?;
        }
        Cmd::Nll { target, probs, out } => {
            let lines = token_lines(target)?;
            let [target] = lines.as_slice() else {
                return Err(Failure::invalid(format!(
                    "ParseError: expected one target line, found {}",
                    lines.len()
                )));
            };
            let nll = sequence_nll(target, &read_table(probs)?, &TokenWeights::default(), &cfg)?;
            write_lines(out, &[format!("{nll:?}")])?;
        }
    }
    Ok(true)
}

fn dag_line(d: &KeyPointDag, lanes: bool, cfg: &CodecConfig) -> String {
    if lanes {
        io::lanegraph_to_json(&dag_to_lanegraph(d, cfg))
    } else {
        io::dag_to_json(d)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    } else {
        // sequential by default
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
