//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 8-10 run on the corpora fetched by `scripts/fetch_data.py`
//! (looked up in `$CLASSINET_DATA_DIR`, else `<workspace>/data`).
//! `CLASSINET_ACCEPTANCE_ONLY=2,8` restricts the run to the listed criteria.

mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use classinet::classify::{cross_validate, damping_sweep, expansion_ratio, paired_t_test, DownstreamOptions, EvalReport};
use classinet::corpus::{read_jsonl, Document, Tokenizer, Vocabulary, Weighting};
use classinet::expand::{
    all_neighbour_candidates, closed_form_scores, expand_global, global_scores, independent_candidates,
    local_path_candidates, mutual_neighbour_candidates, reverse_adjacency, spectral_radius, write_expanded, BankScorer,
    ExpandedHeader, ExpandedRecord, ExpansionCandidate, ExpansionMethod, Expander, GlobalExpansionConfig, Method,
    MutualKnnGraph, Prior,
};
use classinet::graph::{
    build_classinet, calibrate_k, estimate_angle, exact_knn, knn_search, label_vector, mean_recall, BuildOptions,
    ClassiNet, EvalMode, LshParams, NetMeta, Vertex,
};
use classinet::logistic::Dataset;
use classinet::predictor::{train_bank, BankOptions, FeaturePredictor, IndicatorPredictor, PredictorBank};
use classinet::{rng, SparseVector};
use rand::seq::SliceRandom;
use rand::Rng;

type Check = Result<(bool, String), String>;

struct Criterion {
    id: usize,
    name: &'static str,
    limit: Duration,
}

const CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, name: "co-occurrence reduction", limit: Duration::from_secs(5) },
    Criterion { id: 2, name: "angle recovery", limit: Duration::from_secs(30) },
    Criterion { id: 3, name: "LSH fidelity", limit: Duration::from_secs(60) },
    Criterion { id: 4, name: "series / closed form", limit: Duration::from_secs(30) },
    Criterion { id: 5, name: "path-sum example", limit: Duration::from_secs(1) },
    Criterion { id: 6, name: "superset chains", limit: Duration::from_secs(30) },
    Criterion { id: 7, name: "gradient correctness", limit: Duration::from_secs(10) },
    Criterion { id: 8, name: "directional end-to-end", limit: Duration::from_secs(30 * 60) },
    Criterion { id: 9, name: "expansion-ratio bands", limit: Duration::from_secs(10 * 60) },
    Criterion { id: 10, name: "damping-sweep shape", limit: Duration::from_secs(30 * 60) },
    Criterion { id: 11, name: "determinism", limit: Duration::from_secs(10 * 60) },
];

fn main() {
    let only: Option<BTreeSet<usize>> = std::env::var("CLASSINET_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut desk = DeskState::default();
    let mut failed = 0;
    for c in &CRITERIA {
        if only.as_ref().is_some_and(|o| !o.contains(&c.id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = match c.id {
            1 => cooccurrence_reduction(),
            2 => angle_recovery(),
            3 => lsh_fidelity(),
            4 => series_closed_form(),
            5 => path_sum_example(),
            6 => superset_chains(),
            7 => gradient_correctness(),
            8 => desk.get().and_then(directional_end_to_end),
            9 => desk.get().and_then(expansion_ratio_bands),
            10 => desk.get().and_then(damping_sweep_shape),
            11 => determinism(),
            _ => unreachable!(),
        };
        // criteria on the shared desk-scale setup are charged its build time
        let shared = if (8..=10).contains(&c.id) { desk.setup } else { Duration::ZERO };
        let elapsed = start.elapsed() + shared;
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => (ok, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = elapsed <= c.limit;
        let pass = ok && in_time;
        if !pass {
            failed += 1;
        }
        let timing = if shared > Duration::ZERO {
            format!("{:.1} s incl. {:.1} s shared setup", elapsed.as_secs_f64(), shared.as_secs_f64())
        } else {
            format!("{:.2} s", elapsed.as_secs_f64())
        };
        println!(
            "{} [{:>2}] {}: {} ({timing} / limit {} s{})",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            c.limit.as_secs(),
            if in_time { "" } else { ", over time" },
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

// 1. Indicator predictors reduce the network to conditional co-occurrence.
fn cooccurrence_reduction() -> Check {
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for seed in 0..5u64 {
        let mut r = rng::stream(seed, "acceptance-toy", &[]);
        let docs = r.random_range(50..=200);
        let vocab = r.random_range(10..=50);
        let corpus = common::toy_corpus(docs, vocab, seed);
        let bank: Vec<IndicatorPredictor> = (0..vocab).map(|feature| IndicatorPredictor { feature }).collect();
        let opts = BuildOptions {
            k: vocab,
            exhaustive_neighbours: true,
            eval: EvalMode::FullPool,
            signature_size: 64,
            workers: 1,
            seed,
            ..Default::default()
        };
        let net = build_classinet(&bank, common::vertices(vocab), &corpus, &opts).map_err(|e| e.to_string())?;
        for i in 0..vocab {
            let with_i: Vec<&SparseVector> = corpus.iter().filter(|x| x.contains(i)).collect();
            for j in (0..vocab).filter(|&j| j != i) {
                let expected = if with_i.is_empty() {
                    0.0
                } else {
                    with_i.iter().filter(|x| x.contains(j)).count() as f64 / with_i.len() as f64
                };
                worst = worst.max((net.weight(i, j) - expected).abs());
                pairs += 1;
            }
        }
    }
    Ok((worst <= 1e-12, format!("max |w_ij - p(j|i)| = {worst:e} over {pairs} ordered pairs in 5 corpora (tol 1e-12)")))
}

// 2. The hamming distance of label vectors estimates the angle between
// linear predictors.
fn angle_recovery() -> Check {
    let mut r = rng::stream(2, "acceptance-angle", &[]);
    let dim = 10;
    let sample: Vec<SparseVector> = (0..2000)
        .map(|_| {
            let mut v = common::gaussian_vec(dim, &mut r);
            v.push(0.0);
            SparseVector::from_dense(&v)
        })
        .collect();
    let mut total = 0.0;
    for _ in 0..50 {
        let theta = r.random_range(10f64..=170.0).to_radians();
        let u = unit(common::gaussian_vec(dim, &mut r));
        let g = common::gaussian_vec(dim, &mut r);
        let proj: f64 = g.iter().zip(&u).map(|(a, b)| a * b).sum();
        let v = unit(g.iter().zip(&u).map(|(a, b)| a - proj * b).collect());
        let mu_j: Vec<f64> = u.iter().zip(&v).map(|(a, b)| theta.cos() * a + theta.sin() * b).collect();
        let as_predictor = |mu: &[f64]| {
            let mut w = mu.to_vec();
            w.push(0.0);
            FeaturePredictor::new(dim, SparseVector::from_dense(&w), 0.0, 1.0)
        };
        let hi = as_predictor(&u).map_err(|e| e.to_string())?;
        let hj = as_predictor(&mu_j).map_err(|e| e.to_string())?;
        let est = estimate_angle(&label_vector(0, &hi, &sample), &label_vector(1, &hj, &sample)).map_err(|e| e.to_string())?;
        total += (est - theta).abs();
    }
    let mae = total / 50.0;
    Ok((mae <= 0.05, format!("mean |θ̂ - θ| = {mae:.4} rad over 50 pairs, d' = 2000 (tol 0.05)")))
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

// 3. Permutation search recall against brute-force hamming neighbours.
fn lsh_fidelity() -> Check {
    let sigs = common::hyperplane_signatures(500, 8, 512, 3);
    let params = LshParams { seed: 3, ..Default::default() };
    let approx = knn_search(&sigs, &params).map_err(|e| e.to_string())?;
    let exact = exact_knn(&sigs, params.k).map_err(|e| e.to_string())?;
    let recall = mean_recall(&approx, &exact);
    let report = calibrate_k(&sigs, sigs.len(), &[params.k], &params).map_err(|e| e.to_string())?;
    let calibrated = report.overlap[0];
    let ok = recall >= 0.9 && (calibrated - recall).abs() < 1e-12;
    Ok((
        ok,
        format!(
            "recall@10 = {recall:.4} on 500 signatures (P = {}, B = {}; min 0.9), calibrate_k overlap@10 = {calibrated:.4}",
            params.permutations, params.beam
        ),
    ))
}

// 4. Truncated series against the dense closed form.
fn series_closed_form() -> Check {
    let mut worst: f64 = 0.0;
    let mut r = rng::stream(4, "acceptance-series", &[]);
    for seed in 0..100u64 {
        let n = r.random_range(2..=50);
        let p = r.random_range(0.02..0.4);
        let net = common::random_net(n, p, false, seed);
        let rho = spectral_radius(&net, 100_000, 1e-14).radius;
        let gamma = if rho > 0.0 { (r.random_range(0.1..0.95) / rho).min(1.0) } else { 0.85 };
        let x0: Vec<f64> = (0..n).map(|_| if r.random::<f64>() < 0.3 { 1.0 } else { 0.0 }).collect();
        for q in 1..=10 {
            let series = global_scores(&net, &x0, gamma, q);
            let closed = closed_form_scores(&net, &x0, gamma, Some(q)).map_err(|e| e.to_string())?;
            worst = worst.max(common::max_abs_diff(&series, &closed));
        }
    }
    Ok((worst <= 1e-9, format!("max |series - closed form| = {worst:e} over 100 nets × q ∈ 1..=10 (tol 1e-9)")))
}

// 5. Two routes into v*, hand-checked with dyadic weights.
fn path_sum_example() -> Check {
    let (x1, x2, v3, v4, vs) = (0, 1, 2, 3, 4);
    let (w13, w3s, w24, w4s) = (0.75, 0.5, 0.625, 0.25);
    let net = ClassiNet::new(
        common::vertices(5),
        vec![(x1, v3, w13), (v3, vs, w3s), (x2, v4, w24), (v4, vs, w4s)],
        NetMeta::default(),
    )
    .map_err(|e| e.to_string())?;
    let x = SparseVector::from_pairs(5, vec![(x1, 1.0), (x2, 1.0)]).map_err(|e| e.to_string())?;
    let cfg = GlobalExpansionConfig { gamma: 1.0, q: 2, eps_score: 0.0, prior: Prior::Uniform, weighted: false };
    let e = expand_global(&net, &x, &cfg, None).map_err(|e| e.to_string())?;
    // p(x1) p(v3|x1) p(v*|v3) + p(x2) p(v4|x2) p(v*|v4) = 0.375 + 0.15625
    let expected = 1.0 * w13 * w3s + 1.0 * w24 * w4s;
    let got = e.expansions.get(vs);
    let ok = got == expected && expected == 0.53125;
    Ok((ok, format!("p(v*|x) = {got} (expected {expected}, exact)")))
}

// 6. independent ⊆ local-path and mutual-nn ⊆ all-nn on random pairs.
fn superset_chains() -> Check {
    let mut violations = 0;
    let mut r = rng::stream(6, "acceptance-chains", &[]);
    for seed in 0..200u64 {
        let n = r.random_range(5..=40);
        let net = common::random_net(n, r.random_range(0.05..0.3), false, seed);
        let preds: Vec<FeaturePredictor> = (0..n)
            .map(|v| {
                let w: Vec<f64> = (0..n).map(|j| if j == v { 0.0 } else { r.random_range(-1.0..1.0) }).collect();
                FeaturePredictor::new(v, SparseVector::from_dense(&w), r.random_range(-1.0..0.5), 1.0)
            })
            .collect::<classinet::Result<_>>()
            .map_err(|e| e.to_string())?;
        let bank = PredictorBank::new(n, preds).map_err(|e| e.to_string())?;
        let scorer = BankScorer::new(&bank);
        let nnz = r.random_range(1..=n.min(6));
        let x = common::random_instance(n, nnz, &mut r);
        let set = |c: Vec<ExpansionCandidate>| c.into_iter().map(|c| c.vertex).collect::<BTreeSet<_>>();
        let ind = set(independent_candidates(&scorer, &x, false));
        let lp = set(local_path_candidates(&net, &reverse_adjacency(&net), &scorer, &x, 3, false));
        let g = MutualKnnGraph::build(&net, 4);
        let all = set(all_neighbour_candidates(&net, &g, &x));
        let mutual = set(mutual_neighbour_candidates(&net, &g, &x));
        violations += usize::from(!ind.is_subset(&lp)) + usize::from(!mutual.is_subset(&all));
    }
    Ok((violations == 0, format!("{violations} violations over 200 (net, instance) pairs")))
}

// 7. Analytic gradient against central differences of a dense re-statement.
fn gradient_correctness() -> Check {
    let mut worst: f64 = 0.0;
    for case in 0..20u64 {
        let mut r = rng::stream(case, "acceptance-grad", &[]);
        let dim = r.random_range(3..12);
        let n = r.random_range(5..40);
        let mut xs = Vec::with_capacity(n);
        for _ in 0..n {
            let mut pairs = Vec::new();
            for i in 0..dim {
                if r.random::<f64>() < 0.6 {
                    pairs.push((i, r.random_range(-2.0..2.0)));
                }
            }
            xs.push(SparseVector::from_pairs(dim, pairs).map_err(|e| e.to_string())?);
        }
        let ys: Vec<bool> = (0..n).map(|_| r.random()).collect();
        let refs: Vec<&SparseVector> = xs.iter().collect();
        let ds = Dataset::new(&refs, &ys);
        let lambda = r.random_range(0.0..1.0);
        let w: Vec<f64> = (0..ds.width()).map(|_| r.random_range(-1.0..1.0)).collect();
        let b = r.random_range(-1.0..1.0);
        let rows: Vec<usize> = (0..n).collect();
        let (_, grad) = ds.objective(&rows, &w, b, lambda);
        let dense: Vec<Vec<f64>> = xs.iter().map(|x| x.to_dense()).collect();
        let global = |wl: &[f64]| {
            let mut g = vec![0.0; dim];
            for (j, &f) in ds.features().iter().enumerate() {
                g[f] = wl[j];
            }
            g
        };
        let h = 1e-5;
        let mut fd = Vec::with_capacity(grad.len());
        for j in 0..=ds.width() {
            let (mut wp, mut wm, mut bp, mut bm) = (w.clone(), w.clone(), b, b);
            if j < ds.width() {
                wp[j] += h;
                wm[j] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            let fp = common::oracle_loss(&dense, &ys, &global(&wp), bp, lambda);
            let fm = common::oracle_loss(&dense, &ys, &global(&wm), bm, lambda);
            fd.push((fp - fm) / (2.0 * h));
        }
        let scale = fd.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-8);
        worst = worst.max(common::max_abs_diff(&grad, &fd) / scale);
    }
    Ok((worst <= 1e-5, format!("max relative gradient error = {worst:e} over 20 problems (tol 1e-5)")))
}

// Desk-scale pipeline shared by criteria 8-10.

const SEED: u64 = 2017;
const MIN_COUNT: u64 = 2;
/// The small net keeps the most frequent terms of the full one.
const SMALL_NET: usize = 700;
const POOL: usize = 10_000;
const MAX_POSITIVES: usize = 300;
const SUBSAMPLE: usize = 2000;
const FOLDS: usize = 5;
const DATASETS: [&str; 3] = ["mr", "uncertainty", "review_snippets"];

struct LabeledSet {
    name: &'static str,
    xs: Vec<SparseVector>,
    ys: Vec<i64>,
}

struct Desk {
    bank: PredictorBank,
    net: ClassiNet,
    small_net: ClassiNet,
    sets: Vec<LabeledSet>,
    unlabeled: usize,
}

#[derive(Default)]
struct DeskState {
    desk: Option<Result<Desk, String>>,
    setup: Duration,
}

impl DeskState {
    fn get(&mut self) -> Result<&Desk, String> {
        if self.desk.is_none() {
            let start = Instant::now();
            self.desk = Some(build_desk());
            self.setup = start.elapsed();
        }
        self.desk.as_ref().unwrap().as_ref().map_err(Clone::clone)
    }
}

fn data_dir() -> PathBuf {
    std::env::var_os("CLASSINET_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

fn load(name: &str) -> Result<Vec<Document>, String> {
    let path = data_dir().join(format!("{name}.jsonl"));
    if !path.exists() {
        return Err(format!("{} not found; run scripts/fetch_data.py first", path.display()));
    }
    read_jsonl(&path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Per-class seeded shuffle, keeping each class's share of `n` (all
/// instances when the set is smaller).
fn stratified_subsample(docs: &[Document], n: usize, seed: u64) -> Vec<&Document> {
    let mut classes = std::collections::BTreeMap::<i64, Vec<&Document>>::new();
    for d in docs.iter().filter(|d| d.label.is_some()) {
        classes.entry(d.label.unwrap()).or_default().push(d);
    }
    let total: usize = classes.values().map(Vec::len).sum();
    let mut out = Vec::new();
    for (label, mut members) in classes {
        members.shuffle(&mut rng::stream(seed, "subsample", &[label as u64]));
        let take = if total <= n { members.len() } else { (members.len() * n + total / 2) / total };
        out.extend(members.into_iter().take(take));
    }
    out
}

fn build_desk() -> Result<Desk, String> {
    let tokenizer = Tokenizer::default();
    let unlabeled = load("unlabeled")?;
    let tokens: Vec<Vec<String>> = unlabeled.iter().map(|d| tokenizer.tokenize(&d.text)).collect();
    let vocab = Vocabulary::from_token_lists(tokens.iter().cloned(), MIN_COUNT).map_err(|e| e.to_string())?;
    let mut vectors: Vec<SparseVector> = tokens.iter().map(|t| vocab.vectorize(t, Weighting::Binary)).collect();
    vectors.shuffle(&mut rng::stream(SEED, "unlabeled-split", &[]));
    let pool = vectors.split_off(vectors.len() - POOL);

    // every term is a candidate vertex; too-rare ones are skipped by the trainer
    let features: Vec<usize> = (0..vocab.len()).collect();
    let mut opts = BankOptions::default();
    opts.selection.max_positives = Some(MAX_POSITIVES);
    let t = Instant::now();
    let (bank, skipped) = train_bank(&vectors, vocab.len(), &features, &opts, SEED).map_err(|e| e.to_string())?;
    eprintln!("trained {} predictors ({} skipped) in {:.1} s", bank.len(), skipped.len(), t.elapsed().as_secs_f64());

    let vertices = |bank: &PredictorBank| -> Vec<Vertex> {
        bank.predictors().iter().map(|p| Vertex { feature: p.target(), term: vocab.term(p.target()).to_string() }).collect()
    };
    let build = BuildOptions { seed: SEED, ..Default::default() };
    let t = Instant::now();
    let net = build_classinet(bank.predictors(), vertices(&bank), &pool, &build).map_err(|e| e.to_string())?;
    eprintln!("built {}-vertex net with {} edges in {:.1} s", net.len(), net.edge_count(), t.elapsed().as_secs_f64());
    let small_bank =
        PredictorBank::new(bank.dim(), bank.predictors()[..SMALL_NET.min(bank.len())].to_vec()).map_err(|e| e.to_string())?;
    let small_net =
        build_classinet(small_bank.predictors(), vertices(&small_bank), &pool, &build).map_err(|e| e.to_string())?;

    let mut sets = Vec::new();
    for name in DATASETS {
        let docs = load(name)?;
        let picked = stratified_subsample(&docs, SUBSAMPLE, SEED);
        sets.push(LabeledSet {
            name,
            xs: picked.iter().map(|d| vocab.vectorize(&tokenizer.tokenize(&d.text), Weighting::Tfidf)).collect(),
            ys: picked.iter().map(|d| d.label.unwrap()).collect(),
        });
    }
    Ok(Desk { bank, net, small_net, sets, unlabeled: unlabeled.len() })
}

fn evaluate_method(expander: &mut Expander, set: &LabeledSet, method: &ExpansionMethod) -> Result<EvalReport, String> {
    let expanded = expander.expand_all(&set.xs, method).map_err(|e| e.to_string())?;
    let joint: Vec<SparseVector> = expanded.iter().map(|e| e.joint()).collect();
    cross_validate(&joint, &set.ys, FOLDS, &DownstreamOptions::default(), SEED, 1).map_err(|e| e.to_string())
}

// 8. Global expansion against no expansion and the local methods.
fn directional_end_to_end(desk: &Desk) -> Check {
    let mut expander = Expander::new(&desk.net, Some(BankScorer::new(&desk.bank))).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let mut beats_none_everywhere = true;
    let mut beats_locals = 0;
    for set in &desk.sets {
        let mut acc = Vec::new();
        for tag in Method::ALL {
            let r = evaluate_method(&mut expander, set, &ExpansionMethod::default_for(tag))?;
            acc.push((tag, r.accuracy, r.folds));
        }
        let of = |m: Method| acc.iter().find(|a| a.0 == m).unwrap();
        let global = of(Method::Global);
        let none = of(Method::None);
        let locals = [Method::Independent, Method::LocalPath, Method::AllNeighbours, Method::MutualNeighbours];
        beats_none_everywhere &= global.1 >= none.1;
        if locals.iter().all(|&m| global.1 >= of(m).1) {
            beats_locals += 1;
        }
        let p = paired_t_test(&global.2, &none.2).map(|t| t.p_value).unwrap_or(f64::NAN);
        lines.push(format!(
            "{} (n={}): {}; global vs none p={p:.3}",
            set.name,
            set.xs.len(),
            acc.iter().map(|(m, a, _)| format!("{m}={:.2}", 100.0 * a)).collect::<Vec<_>>().join(" ")
        ));
    }
    let ok = beats_none_everywhere && beats_locals >= 2;
    Ok((
        ok,
        format!(
            "net {} vertices / {} edges from {} unlabeled sentences; global ≥ none on all sets: {beats_none_everywhere}; global ≥ every local method on {beats_locals}/3 sets | {}",
            desk.net.len(),
            desk.net.edge_count(),
            desk.unlabeled,
            lines.join(" | ")
        ),
    ))
}

// 9. Expansion-ratio histogram modes on the 700-vertex net.
fn expansion_ratio_bands(desk: &Desk) -> Check {
    let set = &desk.sets[0];
    let mut expander = Expander::new(&desk.small_net, None).map_err(|e| e.to_string())?;
    let all = expander.expand_all(&set.xs, &ExpansionMethod::AllNn { k: 4 }).map_err(|e| e.to_string())?;
    let global = expander
        .expand_all(&set.xs, &ExpansionMethod::Global(GlobalExpansionConfig::default()))
        .map_err(|e| e.to_string())?;
    let a = expansion_ratio(&all, 0.5);
    let g = expansion_ratio(&global, 0.5);
    // bands 1.5-2.5 and 25-30, each edge widened by half
    let (a_lo, a_hi, g_lo, g_hi) = (1.5 * 0.5, 2.5 * 1.5, 25.0 * 0.5, 30.0 * 1.5);
    let ok = (a_lo..=a_hi).contains(&a.mode) && (g_lo..=g_hi).contains(&g.mode);
    Ok((
        ok,
        format!(
            "{}-vertex net, {} instances of {}: all-nn mode {:.2} (mean {:.2}; band [{a_lo}, {a_hi}]), global mode {:.2} (mean {:.2}; band [{g_lo}, {g_hi}]), out-degree {:.2}",
            desk.small_net.len(),
            set.xs.len(),
            set.name,
            a.mode,
            a.mean,
            g.mode,
            g.mean,
            classinet::classify::out_degree(&desk.small_net)
        ),
    ))
}

// 10. Accuracy against γ is unimodal up to one accuracy point.
fn damping_sweep_shape(desk: &Desk) -> Check {
    let set = &desk.sets[0];
    let mut expander = Expander::new(&desk.net, None).map_err(|e| e.to_string())?;
    let gammas: Vec<f64> = (0..10).map(|i| 0.05 + 0.1 * i as f64).collect();
    let table = damping_sweep(&gammas, |gamma| {
        let m = ExpansionMethod::Global(GlobalExpansionConfig { gamma, ..Default::default() });
        evaluate_method(&mut expander, set, &m).map(|r| r.accuracy).map_err(classinet::Error::Config)
    })
    .map_err(|e| e.to_string())?;
    let unimodal = table.is_unimodal(0.01);
    let curve: Vec<String> = table.rows.iter().map(|(g, a)| format!("{g:.2}:{:.2}", 100.0 * a)).collect();
    Ok((
        unimodal,
        format!(
            "{} cross-validated accuracy vs γ [{}]; argmax γ = {:.2} ({:.2}%); unimodal within 1 point: {unimodal}",
            set.name,
            curve.join(" "),
            table.argmax,
            100.0 * table.best_accuracy
        ),
    ))
}

// 11. Every stage is byte-identical across reruns and worker counts.
fn determinism() -> Check {
    let a = small_pipeline(1)?;
    let b = small_pipeline(1)?;
    let c = small_pipeline(2)?;
    let stages = ["vocabulary", "predictor bank", "network", "expanded instances", "evaluation report", "sweep table"];
    let mut differing = Vec::new();
    for (i, stage) in stages.iter().enumerate() {
        if a[i] != b[i] || a[i] != c[i] {
            differing.push(*stage);
        }
    }
    let sizes: Vec<String> = stages.iter().zip(&a).map(|(s, bytes)| format!("{s} {} B", bytes.len())).collect();
    Ok((
        differing.is_empty(),
        if differing.is_empty() {
            format!("3 runs (workers 1, 1, 2) identical: {}", sizes.join(", "))
        } else {
            format!("stages differ: {}", differing.join(", "))
        },
    ))
}

/// Every artifact of a small end-to-end run, serialized.
fn small_pipeline(workers: usize) -> Result<Vec<Vec<u8>>, String> {
    let e = |e: classinet::Error| e.to_string();
    let seed = 11;
    let corpus = common::toy_corpus(1500, 60, seed);
    let texts: Vec<Vec<String>> = corpus.iter().map(|x| x.indices().map(|i| format!("t{i}")).collect()).collect();
    let vocab = Vocabulary::from_token_lists(texts.iter().cloned(), 2).map_err(e)?;
    let vectors: Vec<SparseVector> = texts.iter().map(|t| vocab.vectorize(t, Weighting::Binary)).collect();
    let (train, pool) = vectors.split_at(1000);
    let features: Vec<usize> = (0..40.min(vocab.len())).collect();
    let opts = BankOptions { workers, ..Default::default() };
    let (bank, _) = train_bank(train, vocab.len(), &features, &opts, seed).map_err(e)?;
    let verts = bank.predictors().iter().map(|p| Vertex { feature: p.target(), term: vocab.term(p.target()).into() }).collect();
    let build = BuildOptions { workers, seed, ..Default::default() };
    let net = build_classinet(bank.predictors(), verts, pool, &build).map_err(e)?;

    let labels: Vec<i64> = pool.iter().map(|x| i64::from(x.contains(0) || x.contains(3))).collect();
    let mut expander = Expander::new(&net, Some(BankScorer::new(&bank))).map_err(e)?;
    let method = ExpansionMethod::Global(GlobalExpansionConfig::default());
    let expanded = expander.expand_all(pool, &method).map_err(e)?;
    let records: Vec<ExpandedRecord> = expanded
        .iter()
        .enumerate()
        .map(|(i, x)| ExpandedRecord::from_instance(&format!("d{i}"), Some(labels[i]), x, &vocab, Some(0.85), Some(4)))
        .collect();
    let joint: Vec<SparseVector> = expanded.iter().map(|x| x.joint()).collect();
    let report = cross_validate(&joint, &labels, 5, &DownstreamOptions::default(), seed, workers).map_err(e)?;
    let sweep = damping_sweep(&[0.85, 0.25], |gamma| {
        let m = ExpansionMethod::Global(GlobalExpansionConfig { gamma, ..Default::default() });
        let j: Vec<SparseVector> = expander.expand_all(pool, &m)?.iter().map(|x| x.joint()).collect();
        Ok(cross_validate(&j, &labels, 3, &DownstreamOptions::default(), seed, workers)?.accuracy)
    })
    .map_err(e)?;

    let mut out = vec![Vec::new(); 6];
    vocab.write(&mut out[0]).map_err(e)?;
    bank.write_binary(&mut out[1]).map_err(e)?;
    net.write(&mut out[2]).map_err(e)?;
    write_expanded(&mut out[3], &ExpandedHeader::new(serde_json::to_value(method).unwrap()), &records).map_err(e)?;
    out[4] = serde_json::to_vec(&report).map_err(|e| e.to_string())?;
    out[5] = sweep.to_tsv().into_bytes();
    Ok(out)
}
