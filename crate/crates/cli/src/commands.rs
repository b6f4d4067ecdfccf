use std::collections::{BTreeSet, VecDeque};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use classinet::classify::{
    cross_validate, damping_sweep, evaluate, expansion_ratio, out_degree, paired_t_test, train_downstream,
    DownstreamModel, DownstreamOptions, EvalReport, TTest,
};
use classinet::corpus::{corpus_stats, read_jsonl, vectorize_corpus, Document, Tokenizer, Vocabulary, Weighting};
use classinet::expand::{
    read_expanded, spectral_radius, write_expanded, BankScorer, ExpandedHeader, ExpandedInstance, ExpandedRecord,
    ExpansionMethod, Expander, GlobalExpansionConfig, MutualKnnGraph, Prior,
};
use classinet::graph::{build_classinet, BuildOptions, EvalMode, Vertex};
use classinet::predictor::{train_bank, BankOptions, SelectionOptions, TrainOptions};
use classinet::{rng, ClassiNet, PredictorBank, SparseVector};
use rand::seq::SliceRandom;
use serde::Serialize;
use serde_json::{json, Value};

use crate::{
    BuildNetArgs, Command, EvalArgs, ExpandArgs, InspectArgs, MethodArgs, MethodFlag, PriorFlag, StatsArgs, SweepArgs,
    TrainArgs, WeightingFlag,
};

const VOCAB_FILE: &str = "vocab.txt";
const BANK_FILE: &str = "predictors.bin";
const NET_FILE: &str = "net.tsv";
const RUN_FILE: &str = "run.json";

pub fn run(cmd: &Command) -> Result<()> {
    let config = serde_json::to_value(cmd)?;
    match cmd {
        Command::BuildNet(a) => build_net(a, &config),
        Command::Expand(a) => expand(a, &config),
        Command::Train(a) => train(a, &config),
        Command::Eval(a) => eval(a, &config),
        Command::Inspect(a) => inspect(a),
        Command::Stats(a) => stats(a),
        Command::SweepGamma(a) => sweep(a, &config),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

fn read_docs(path: &Path) -> Result<Vec<Document>> {
    ensure!(path.exists(), "input {} does not exist", path.display());
    read_jsonl(path).with_context(|| format!("reading {}", path.display()))
}

fn weighting(w: WeightingFlag) -> Weighting {
    match w {
        WeightingFlag::Binary => Weighting::Binary,
        WeightingFlag::Tf => Weighting::Tf,
        WeightingFlag::Tfidf => Weighting::Tfidf,
    }
}

fn downstream(grid: &[f64]) -> DownstreamOptions {
    DownstreamOptions { lambda_grid: grid.to_vec(), ..Default::default() }
}

fn build_net(a: &BuildNetArgs, config: &Value) -> Result<()> {
    let docs = read_docs(&a.input)?;
    let tokenizer = Tokenizer::new(a.lemma);
    let tokens: Vec<Vec<String>> = docs.iter().map(|d| tokenizer.tokenize(&d.text)).collect();
    let vocab = Vocabulary::from_token_lists(tokens.iter().cloned(), a.min_count)?;
    let mut vectors: Vec<SparseVector> = tokens.iter().map(|t| vocab.vectorize(t, Weighting::Binary)).collect();
    ensure!(
        a.pool_size > 0 && a.pool_size < vectors.len(),
        "pool size {} must be between 1 and the corpus size {}",
        a.pool_size,
        vectors.len()
    );
    vectors.shuffle(&mut rng::stream(a.common.seed, "unlabeled-split", &[]));
    let pool = vectors.split_off(vectors.len() - a.pool_size);
    log::info!("{} documents, {} terms, {} held out for edge weights", docs.len(), vocab.len(), pool.len());

    let features: Vec<usize> = (0..a.vertices.unwrap_or(usize::MAX).min(vocab.len())).collect();
    let opts = BankOptions {
        selection: SelectionOptions {
            min_positive: a.min_positive,
            max_positives: a.max_positives,
            ..Default::default()
        },
        training: TrainOptions { lambda_grid: a.lambda_grid.clone(), ..Default::default() },
        workers: a.common.workers(),
    };
    let (bank, skipped) = train_bank(&vectors, vocab.len(), &features, &opts, a.common.seed)?;
    ensure!(!bank.is_empty(), "no feature had enough positive instances to train a predictor");
    log::info!("trained {} predictors, skipped {}", bank.len(), skipped.len());

    let vertices: Vec<Vertex> = bank
        .predictors()
        .iter()
        .map(|p| Vertex { feature: p.target(), term: vocab.term(p.target()).to_string() })
        .collect();
    let build = BuildOptions {
        k: a.k,
        permutations: a.permutations,
        beam: a.beam,
        exhaustive_neighbours: false,
        eval: EvalMode::PerPair { cap: a.eval_cap },
        signature_size: a.signature_size,
        workers: a.common.workers(),
        seed: a.common.seed,
    };
    let mut net = build_classinet(bank.predictors(), vertices, &pool, &build)?;
    net.meta_mut().notes.push(format!("config {}", serde_json::to_string(config)?));

    fs::create_dir_all(&a.output).with_context(|| format!("cannot create {}", a.output.display()))?;
    let mut out = create(&a.output.join(VOCAB_FILE))?;
    vocab.write(&mut out)?;
    out.flush()?;
    let mut out = create(&a.output.join(BANK_FILE))?;
    bank.write_binary(&mut out)?;
    out.flush()?;
    let mut out = create(&a.output.join(NET_FILE))?;
    net.write(&mut out)?;
    out.flush()?;
    let mut out = create(&a.output.join(RUN_FILE))?;
    serde_json::to_writer_pretty(&mut out, config)?;
    writeln!(out)?;
    out.flush()?;

    println!(
        "vertices {}\tedges {}\tout-degree {:.4}\tskipped {}",
        net.len(),
        net.edge_count(),
        out_degree(&net),
        skipped.len()
    );
    Ok(())
}

/// Everything `build-net` leaves in its output directory.
struct NetDir {
    vocab: Vocabulary,
    tokenizer: Tokenizer,
    bank: PredictorBank,
    net: ClassiNet,
}

fn load_vocab(dir: &Path) -> Result<(Vocabulary, Tokenizer)> {
    let vocab = Vocabulary::read(open(&dir.join(VOCAB_FILE))?).context("reading vocabulary")?;
    let run: Value = serde_json::from_reader(open(&dir.join(RUN_FILE))?).context("reading run configuration")?;
    let lemma = run.get("lemma").and_then(Value::as_bool).unwrap_or(false);
    Ok((vocab, Tokenizer::new(lemma)))
}

fn load_graph(dir: &Path) -> Result<ClassiNet> {
    ClassiNet::read(open(&dir.join(NET_FILE))?).context("reading network")
}

fn load_net_dir(dir: &Path) -> Result<NetDir> {
    let (vocab, tokenizer) = load_vocab(dir)?;
    let bank = PredictorBank::read_binary(open(&dir.join(BANK_FILE))?).context("reading predictors")?;
    let net = load_graph(dir)?;
    ensure!(bank.dim() == vocab.len(), "predictors and vocabulary disagree on the feature count");
    Ok(NetDir { vocab, tokenizer, bank, net })
}

fn expansion_method(m: &MethodArgs) -> ExpansionMethod {
    match m.method {
        MethodFlag::None => ExpansionMethod::None,
        MethodFlag::Independent => ExpansionMethod::Independent { posterior: m.posterior },
        MethodFlag::LocalPath => ExpansionMethod::LocalPath { max_hops: m.max_hops, posterior: m.posterior },
        MethodFlag::AllNn => ExpansionMethod::AllNn { k: m.nn_k },
        MethodFlag::MutualNn => ExpansionMethod::MutualNn { k: m.nn_k },
        MethodFlag::Global => ExpansionMethod::Global(GlobalExpansionConfig {
            gamma: m.gamma,
            q: m.q,
            eps_score: m.eps_score,
            prior: match m.prior {
                PriorFlag::Uniform => Prior::Uniform,
                PriorFlag::Empirical => Prior::Empirical,
            },
            weighted: m.weighted,
        }),
    }
}

fn expander<'a>(dir: &'a NetDir) -> Result<Expander<'a>> {
    let n = dir.vocab.n_docs().max(1) as f64;
    let priors = dir.net.vertices().iter().map(|v| dir.vocab.df(v.feature) as f64 / n).collect();
    Ok(Expander::new(&dir.net, Some(BankScorer::new(&dir.bank)))?.with_priors(priors))
}

fn expand(a: &ExpandArgs, config: &Value) -> Result<()> {
    let dir = load_net_dir(&a.net)?;
    let docs = read_docs(&a.input)?;
    let xs = vectorize_corpus(&docs, &dir.tokenizer, &dir.vocab, weighting(a.weighting));
    let method = expansion_method(&a.method);
    if let ExpansionMethod::Global(cfg) = method {
        cfg.validate()?;
    }
    let expanded = expander(&dir)?.expand_all(&xs, &method)?;
    let (gamma, q) = match method {
        ExpansionMethod::Global(cfg) => (Some(cfg.gamma), Some(cfg.q)),
        _ => (None, None),
    };
    let records: Vec<ExpandedRecord> = docs
        .iter()
        .zip(&expanded)
        .map(|(d, e)| ExpandedRecord::from_instance(&d.id, d.label, e, &dir.vocab, gamma, q))
        .collect();
    let mut out = create(&a.output)?;
    write_expanded(&mut out, &ExpandedHeader::new(config.clone()), &records)?;
    out.flush()?;
    let stats = expansion_ratio(&expanded, 0.5);
    log::info!("expanded {} instances with {}; mean expansion ratio {:.3}", records.len(), method.tag(), stats.mean);
    Ok(())
}

/// Joint vectors and labels of an expanded file, plus the instances
/// rebuilt for expansion statistics.
struct ExpandedSet {
    ids: Vec<String>,
    joint: Vec<SparseVector>,
    labels: Vec<i64>,
    instances: Vec<ExpandedInstance>,
}

fn read_expanded_set(path: &Path, vocab: &Vocabulary) -> Result<ExpandedSet> {
    let (_, records) = read_expanded(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    let d = vocab.len();
    let mut set = ExpandedSet { ids: Vec::new(), joint: Vec::new(), labels: Vec::new(), instances: Vec::new() };
    for r in records {
        let label = r.label.with_context(|| format!("record {} has no label", r.id))?;
        let joint = r.joint(vocab)?;
        let features = SparseVector::from_pairs(d, joint.iter().filter(|&(i, _)| i < d).collect())?;
        let expansions = SparseVector::from_pairs(d, joint.iter().filter(|&(i, _)| i >= d).map(|(i, v)| (i - d, v)).collect())?;
        set.instances.push(ExpandedInstance { original: features.clone(), features, expansions, method: r.method });
        set.ids.push(r.id);
        set.joint.push(joint);
        set.labels.push(label);
    }
    ensure!(!set.joint.is_empty(), "{} holds no instances", path.display());
    Ok(set)
}

fn raw_set(path: &Path, dir_vocab: &Vocabulary, tokenizer: &Tokenizer, w: WeightingFlag) -> Result<ExpandedSet> {
    let docs = read_docs(path)?;
    let xs = vectorize_corpus(&docs, tokenizer, dir_vocab, weighting(w));
    let mut set = ExpandedSet { ids: Vec::new(), joint: Vec::new(), labels: Vec::new(), instances: Vec::new() };
    for (d, x) in docs.iter().zip(xs) {
        let label = d.label.with_context(|| format!("document {} has no label", d.id))?;
        let inst = ExpandedInstance::unexpanded(&x);
        set.joint.push(inst.joint());
        set.instances.push(inst);
        set.ids.push(d.id.clone());
        set.labels.push(label);
    }
    Ok(set)
}

#[derive(Serialize, serde::Deserialize)]
struct ModelFile {
    config: Value,
    /// Configuration of the run that produced the training instances.
    source: Value,
    model: DownstreamModel,
}

fn train(a: &TrainArgs, config: &Value) -> Result<()> {
    let (vocab, _) = load_vocab(&a.net)?;
    let (header, _) = read_expanded(open(&a.input)?)?;
    let set = read_expanded_set(&a.input, &vocab)?;
    let model = train_downstream(&set.joint, &set.labels, &downstream(&a.lambda_grid), a.common.seed)?;
    let mut out = create(&a.output)?;
    serde_json::to_writer(&mut out, &ModelFile { config: config.clone(), source: header.config, model })?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Comparison {
    input: PathBuf,
    report: EvalReport,
    t_test: TTest,
}

fn eval(a: &EvalArgs, config: &Value) -> Result<()> {
    let (vocab, tokenizer) = load_vocab(&a.net)?;
    let load = |p: &Path| {
        if a.no_expansion {
            raw_set(p, &vocab, &tokenizer, a.weighting)
        } else {
            read_expanded_set(p, &vocab)
        }
    };
    let set = load(&a.input)?;
    let opts = downstream(&a.lambda_grid);
    let mut report = match &a.model {
        Some(path) => {
            let file: ModelFile = serde_json::from_reader(open(path)?).context("reading model")?;
            evaluate(&file.model, &set.joint, &set.labels)
        }
        None => cross_validate(&set.joint, &set.labels, a.folds, &opts, a.common.seed, a.common.workers())?,
    };
    report.expansion = Some(expansion_ratio(&set.instances, 0.5));
    report.out_degree = Some(out_degree(&load_graph(&a.net)?));

    let comparison = match &a.compare {
        Some(path) => {
            ensure!(a.model.is_none(), "--compare needs cross-validation, not --model");
            let other = load(path)?;
            ensure!(other.ids == set.ids, "{} does not hold the same instances in the same order", path.display());
            let other_report =
                cross_validate(&other.joint, &other.labels, a.folds, &opts, a.common.seed, a.common.workers())?;
            let t_test = paired_t_test(&report.folds, &other_report.folds)?;
            Some(Comparison { input: path.clone(), report: other_report, t_test })
        }
        None => None,
    };
    let doc = json!({ "config": config, "report": report, "comparison": comparison });
    let text = serde_json::to_string_pretty(&doc)?;
    match &a.output {
        Some(path) => {
            let mut out = create(path)?;
            writeln!(out, "{text}")?;
            out.flush()?;
            log::info!("accuracy {:.4} over {} instances", report.accuracy, report.n);
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn dot_id(term: &str) -> String {
    format!("\"{}\"", term.replace('\\', "\\\\").replace('"', "\\\""))
}

fn inspect(a: &InspectArgs) -> Result<()> {
    let net = load_graph(&a.net)?;
    let g = MutualKnnGraph::build(&net, a.k);
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    for term in &a.terms {
        match net.vertex_of_term(term) {
            Some(v) => {
                if seen.insert(v) {
                    queue.push_back((v, 0));
                }
            }
            None => log::warn!("term {term:?} is not a vertex of the network"),
        }
    }
    while let Some((v, depth)) = queue.pop_front() {
        if depth == a.hops {
            continue;
        }
        for &u in g.neighbours(v) {
            if seen.insert(u) {
                queue.push_back((u, depth + 1));
            }
        }
    }

    let mut dot = format!("graph classinet_k{} {{\n", a.k);
    for &v in &seen {
        dot.push_str(&format!("  {};\n", dot_id(&net.vertex(v).term)));
    }
    for (i, j) in g.edges().filter(|(i, j)| seen.contains(i) && seen.contains(j)) {
        dot.push_str(&format!("  {} -- {};\n", dot_id(&net.vertex(i).term), dot_id(&net.vertex(j).term)));
    }
    dot.push_str("}\n");
    match &a.output {
        Some(path) => {
            let mut out = create(path)?;
            out.write_all(dot.as_bytes())?;
            out.flush()?;
        }
        None => print!("{dot}"),
    }
    Ok(())
}

fn stats(a: &StatsArgs) -> Result<()> {
    if a.input.is_none() && a.net.is_none() {
        bail!("give --input, --net or both");
    }
    let mut doc = serde_json::Map::new();
    let loaded = a.net.as_deref().map(load_vocab).transpose()?;
    if let Some(dir) = &a.net {
        let net = load_graph(dir)?;
        let rho = spectral_radius(&net, 10_000, 1e-10);
        doc.insert(
            "network".into(),
            json!({
                "vertices": net.len(),
                "edges": net.edge_count(),
                "k": net.meta().k,
                "d_prime": net.meta().d_prime,
                "seed": net.meta().seed,
                "out_degree": out_degree(&net),
                "spectral_radius": rho.radius,
                "suggested_gamma": rho.suggested_gamma,
            }),
        );
    }
    if let Some(path) = &a.input {
        let docs = read_docs(path)?;
        let (vocab, tokenizer) = match loaded {
            Some(v) => v,
            None => {
                let t = Tokenizer::default();
                (classinet::corpus::build_vocabulary(&docs, &t, 1)?, t)
            }
        };
        let xs = vectorize_corpus(&docs, &tokenizer, &vocab, weighting(a.weighting));
        doc.insert("corpus".into(), serde_json::to_value(corpus_stats(&docs, &vocab, &xs))?);
    }
    println!("{}", serde_json::to_string_pretty(&Value::Object(doc))?);
    Ok(())
}

fn sweep(a: &SweepArgs, config: &Value) -> Result<()> {
    let dir = load_net_dir(&a.net)?;
    let docs = read_docs(&a.input)?;
    let xs = vectorize_corpus(&docs, &dir.tokenizer, &dir.vocab, weighting(a.weighting));
    let labels: Vec<i64> = docs
        .iter()
        .map(|d| d.label.with_context(|| format!("document {} has no label", d.id)))
        .collect::<Result<_>>()?;
    let mut ex = expander(&dir)?;
    let opts = downstream(&a.lambda_grid);
    let table = damping_sweep(&a.gammas, |gamma| {
        let m = ExpansionMethod::Global(GlobalExpansionConfig { gamma, q: a.q, ..Default::default() });
        let joint: Vec<SparseVector> = ex.expand_all(&xs, &m)?.iter().map(ExpandedInstance::joint).collect();
        let r = cross_validate(&joint, &labels, a.folds, &opts, a.common.seed, a.common.workers())?;
        log::info!("gamma {gamma}: accuracy {:.4}", r.accuracy);
        Ok(r.accuracy)
    })?;
    let text = format!("# config {}\n{}", serde_json::to_string(config)?, table.to_tsv());
    match &a.output {
        Some(path) => {
            let mut out = create(path)?;
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
        None => print!("{text}"),
    }
    log::info!("best gamma {} (accuracy {:.4})", table.argmax, table.best_accuracy);
    Ok(())
}
