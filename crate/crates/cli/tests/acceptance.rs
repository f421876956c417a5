//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails the
//! run if any criterion fails. Each check compares the implementation with
//! an independent recount or a value computed by hand.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use birnn_cli::commands::cmd_train;
use birnn_cli::config::RunConfig;
use birnn_sentiment::bdrnn::{
    backward, build_vocab, decode_model, encode_model, loss, train, BdrnnModel, EncodedSequence, Hyperparams,
    LabeledSequence,
};
use birnn_sentiment::config::KeyValues;
use birnn_sentiment::corpus::{
    load_corpus, split, synth_corpus, Corpus, SplitSpec, SynthConfig, DEFAULT_NEGATIVE_HASHTAGS,
    DEFAULT_NEGATIVE_WORDS, DEFAULT_POSITIVE_HASHTAGS, DEFAULT_POSITIVE_WORDS,
};
use birnn_sentiment::impact::{rate, DoIRecord};
use birnn_sentiment::lexicon::{collect_seed_posts, Lexicon, LexiconBuilder, SeedSpec};
use birnn_sentiment::metrics::{accuracy, kappa, mae_rmse_weights, ConfusionMatrix};
use birnn_sentiment::polarity::bucket_value;
use birnn_sentiment::preprocess::{stem, tokenize, Preprocessor};
use birnn_sentiment::{Error, SentimentClass};
use ndarray::{arr1, arr2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((a - b).abs() <= tol, format!("{what}: {a} vs {b}"))
}

// 1. Analytic gradients against central differences.
fn gradient_check() -> Check {
    const EPS: f64 = 1e-5;
    let start = Instant::now();
    let mut m = BdrnnModel::<f64>::init(Hyperparams {
        vocab_size: 50,
        embed_dim: 8,
        hidden_dim: 8,
        num_recurrent_layers: 2,
        num_classes: 7,
        seed: 21,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let seq = EncodedSequence::new(vec![4, 31, 4, 49, 12, 2, 38]);
    let gold = 5;
    let l2 = 1.3e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (_, cache) = m.forward(&seq, false, &mut rng).map_err(|e| e.to_string())?;
    let g = backward(&m, &seq, gold, &cache, l2).map_err(|e| e.to_string())?;

    let e = m.hp.embed_dim;
    let mut analytic = vec![0.0; m.embedding.len()];
    for (&id, row) in &g.embedding {
        for (k, v) in row.iter().enumerate() {
            analytic[id * e + k] = *v;
        }
    }
    for l in &g.layers {
        for d in [&l.fwd, &l.bwd] {
            analytic.extend(d.w_in.iter().chain(d.w_rec.iter()).chain(d.bias.iter()));
        }
    }
    analytic.extend(g.out_fwd.iter().chain(g.out_bwd.iter()).chain(g.out_bias.iter()));
    ensure(analytic.len() == m.num_params(), "gradient size differs from parameter count")?;

    let eval = |m: &BdrnnModel<f64>| {
        let p = m.infer(&seq).unwrap();
        loss(&p, gold, m, l2).unwrap()
    };
    let mut worst: f64 = 0.0;
    let mut k = 0;
    for ti in 0..m.tensors().len() {
        for j in 0..m.tensors()[ti].len() {
            let base = m.tensors()[ti][j];
            m.tensors_mut()[ti][j] = base + EPS;
            let up = eval(&m);
            m.tensors_mut()[ti][j] = base - EPS;
            let down = eval(&m);
            m.tensors_mut()[ti][j] = base;
            let fd = (up - down) / (2.0 * EPS);
            let a = analytic[k];
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-6));
            k += 1;
        }
    }
    let took = start.elapsed();
    ensure(worst <= 1e-4, format!("max relative error {worst:e}"))?;
    ensure(took < Duration::from_secs(30), format!("took {took:?}"))?;
    Ok(format!("{} parameters, max relative error {worst:.2e}, {took:.1?}", m.num_params()))
}

// 2. Reversing the input of a direction-swapped model swaps the summary states.
fn mirror_symmetry() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let hp = Hyperparams {
            vocab_size: rng.random_range(3..12),
            embed_dim: rng.random_range(1..5),
            hidden_dim: rng.random_range(1..6),
            num_recurrent_layers: rng.random_range(1..4),
            num_classes: rng.random_range(2..8),
            seed: i,
            ..Default::default()
        };
        let len = rng.random_range(1..9);
        let seq = EncodedSequence::new((0..len).map(|_| rng.random_range(0..hp.vocab_size)).collect());
        let m = BdrnnModel::<f64>::init(hp).map_err(|e| e.to_string())?;
        let (p, c) = m.forward(&seq, false, &mut rng).map_err(|e| e.to_string())?;
        let (p2, c2) = m.mirrored().forward(&seq.reversed(), false, &mut rng).map_err(|e| e.to_string())?;
        let pairs = [
            (c2.final_forward(), c.first_backward()),
            (c2.first_backward(), c.final_forward()),
            (p2, p),
        ];
        for (a, b) in &pairs {
            for (x, y) in a.iter().zip(b.iter()) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    ensure(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    Ok(format!("20 models, max deviation {worst:.1e}"))
}

// 3. Two steps, one layer, two dimensions, every activation written out.
fn hand_trace() -> Check {
    let mut m = BdrnnModel::<f64>::zeros(Hyperparams {
        vocab_size: 4,
        embed_dim: 2,
        hidden_dim: 2,
        num_recurrent_layers: 1,
        num_classes: 2,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    m.embedding = arr2(&[[0.0, 0.0], [0.0, 0.0], [0.5, -0.2], [0.1, 0.4]]);
    let l = &mut m.layers[0];
    l.fwd.w_in = arr2(&[[0.3, -0.1], [0.2, 0.4]]);
    l.fwd.w_rec = arr2(&[[0.5, 0.1], [-0.3, 0.2]]);
    l.fwd.bias = arr1(&[0.05, -0.05]);
    l.bwd.w_in = arr2(&[[-0.2, 0.6], [0.1, 0.1]]);
    l.bwd.w_rec = arr2(&[[0.4, -0.2], [0.3, 0.1]]);
    l.bwd.bias = arr1(&[0.0, 0.1]);
    m.out_fwd = arr2(&[[1.0, -1.0], [0.5, 0.5]]);
    m.out_bwd = arr2(&[[0.2, 0.3], [-0.4, 0.1]]);
    m.out_bias = arr1(&[0.1, -0.1]);

    // x1 = (0.5, -0.2), x2 = (0.1, 0.4)
    let f1 = [
        (0.3 * 0.5 - 0.1 * -0.2 + 0.05f64).tanh(),
        (0.2 * 0.5 + 0.4 * -0.2 - 0.05f64).tanh(),
    ];
    let f2 = [
        (0.3 * 0.1 - 0.1 * 0.4 + 0.5 * f1[0] + 0.1 * f1[1] + 0.05).tanh(),
        (0.2 * 0.1 + 0.4 * 0.4 - 0.3 * f1[0] + 0.2 * f1[1] - 0.05).tanh(),
    ];
    let b2 = [(-0.2 * 0.1 + 0.6 * 0.4 + 0.0f64).tanh(), (0.1 * 0.1 + 0.1 * 0.4 + 0.1f64).tanh()];
    let b1 = [
        (-0.2 * 0.5 + 0.6 * -0.2 + 0.4 * b2[0] - 0.2 * b2[1] + 0.0).tanh(),
        (0.1 * 0.5 + 0.1 * -0.2 + 0.3 * b2[0] + 0.1 * b2[1] + 0.1).tanh(),
    ];
    let z0 = f2[0] - f2[1] + 0.2 * b1[0] + 0.3 * b1[1] + 0.1;
    let z1 = 0.5 * f2[0] + 0.5 * f2[1] - 0.4 * b1[0] + 0.1 * b1[1] - 0.1;
    let p0 = 1.0 / (1.0 + (z1 - z0).exp());

    let seq = EncodedSequence::new(vec![2, 3]);
    let (p, c) = m.forward(&seq, false, &mut ChaCha8Rng::seed_from_u64(0)).map_err(|e| e.to_string())?;
    let ff = c.final_forward();
    let fb = c.first_backward();
    for k in 0..2 {
        close(ff[k], f2[k], 1e-12, "last forward state")?;
        close(fb[k], b1[k], 1e-12, "first backward state")?;
    }
    close(p[0], p0, 1e-12, "p[0]")?;
    close(p[1], 1.0 - p0, 1e-12, "p[1]")?;
    Ok(format!("p = ({:.6}, {:.6})", p[0], p[1]))
}

fn default_seeds() -> SeedSpec {
    SeedSpec::new(DEFAULT_POSITIVE_HASHTAGS.to_vec(), DEFAULT_NEGATIVE_HASHTAGS.to_vec()).unwrap()
}

// 4. Seeded lexicon recovers the generator's word pools.
fn lexicon_oracle() -> Check {
    let cfg = SynthConfig {
        posts: 2000,
        ..Default::default()
    };
    ensure(
        DEFAULT_POSITIVE_WORDS.len() == 50 && DEFAULT_NEGATIVE_WORDS.len() == 50,
        "pools are not 50 words",
    )?;
    let corpus = synth_corpus(&cfg, 4).map_err(|e| e.to_string())?;
    let seeds = default_seeds();
    let (pos, neg) = collect_seed_posts(&corpus, &seeds).map_err(|e| e.to_string())?;
    let builder = LexiconBuilder::new(Preprocessor::default(), &seeds);
    let lex = builder.score_words(&pos, &neg, 0.7).map_err(|e| e.to_string())?;
    let right = DEFAULT_POSITIVE_WORDS.iter().filter(|w| lex.lookup(&stem(w)) == 1).count()
        + DEFAULT_NEGATIVE_WORDS.iter().filter(|w| lex.lookup(&stem(w)) == -1).count();
    let share = right as f64 / 100.0;
    ensure(share >= 0.95, format!("{right}/100 pool words signed correctly"))?;

    let holdout = synth_corpus(&SynthConfig { posts: 400, ..cfg }, 5).map_err(|e| e.to_string())?;
    let cal = builder.calibrate(&pos, &neg, &holdout).map_err(|e| e.to_string())?;
    let best = cal.grid.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
    let tied = cal.grid.iter().filter(|g| g.1 == best).count();
    ensure(tied >= 2, format!("grid minimum is not tied: {:?}", cal.grid))?;
    ensure(cal.theta == 0.7, format!("calibration chose {}", cal.theta))?;
    Ok(format!("{right}/100 pool words signed, {tied} grid points tie, theta {:.2}", cal.theta))
}

// 5. The classifier learns the clean seven-class task.
fn end_to_end() -> Check {
    let start = Instant::now();
    let cfg = SynthConfig {
        posts: 60_000,
        neutral_fraction: 1.0 / 7.0,
        ..Default::default()
    };
    let corpus = synth_corpus(&cfg, 1).map_err(|e| e.to_string())?;
    let (tr, te) = split(&corpus, SplitSpec { train_fraction: 0.8, seed: 2 }).map_err(|e| e.to_string())?;
    let pre = Preprocessor::default();
    let dtr = pre.process_all(&tr.posts);
    let dte = pre.process_all(&te.posts);
    let vocab = build_vocab(&dtr, 2000).map_err(|e| e.to_string())?;
    let hp = Hyperparams {
        vocab_size: vocab.len(),
        hidden_dim: 32,
        batch_size: 64,
        epochs: 5,
        learning_rate: 0.5,
        seed: 1,
        ..Default::default()
    };
    let encode = |docs: &[birnn_sentiment::preprocess::Document], c: &Corpus| -> Vec<LabeledSequence> {
        docs.iter()
            .zip(&c.posts)
            .map(|(d, p)| LabeledSequence {
                seq: vocab.encode(d, hp.max_seq_len),
                label: p.gold_class.expect("synthetic posts are labelled").index(),
            })
            .collect()
    };
    let train_set = encode(&dtr, &tr);
    let test_set = encode(&dte, &te);
    let mut m = BdrnnModel::<f64>::init(hp).map_err(|e| e.to_string())?;
    let trace = train(&mut m, &train_set).map_err(|e| e.to_string())?;
    let mut hits = 0;
    for ex in &test_set {
        if m.predict_index(&ex.seq).map_err(|e| e.to_string())? == ex.label {
            hits += 1;
        }
    }
    let acc = hits as f64 / test_set.len() as f64;
    let (l1, l5) = (trace[0].mean_loss, trace[4].mean_loss);
    let took = start.elapsed();
    ensure(acc >= 0.90, format!("test accuracy {acc:.4}"))?;
    ensure(l5 < l1, format!("loss epoch 1 {l1:.4}, epoch 5 {l5:.4}"))?;
    ensure(took < Duration::from_secs(300), format!("took {took:?}"))?;
    Ok(format!(
        "vocab {}, test accuracy {acc:.4}, loss {l1:.4} -> {l5:.4}, {took:.1?}",
        vocab.len()
    ))
}

// 6. Bucketing and impact arithmetic.
fn impact_arithmetic() -> Check {
    use SentimentClass::*;
    let table = [
        (-5, StrongNeg),
        (-3, StrongNeg),
        (-2, ModNeg),
        (-1, WeakNeg),
        (0, Neutral),
        (1, WeakPos),
        (2, ModPos),
        (3, StrongPos),
        (9, StrongPos),
    ];
    for (p, class) in table {
        ensure(bucket_value(p) == class, format!("bucket({p}) = {:?}", bucket_value(p)))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let raw: Vec<(i64, i64, i64)> = (0..1000)
        .map(|_| (rng.random_range(-3..=3), rng.random_range(0..5000), rng.random_range(0..5000)))
        .collect();
    let mut records = Vec::new();
    for (i, &(w, l, r)) in raw.iter().enumerate() {
        let rec = DoIRecord::new(format!("r{i}"), w, l, r).map_err(|e| e.to_string())?;
        ensure(rec.doi == w + l + r, format!("doi of record {i}"))?;
        records.push(rec);
    }
    let mut total = 0i64;
    let mut positive = 0i64;
    for &(w, l, r) in &raw {
        total += w + l + r;
        if w > 0 {
            positive += 1;
        }
    }
    let report = rate("t", records).map_err(|e| e.to_string())?;
    ensure(report.total_doi == total, "total doi differs from recount")?;
    ensure(report.n_pl as i64 == positive, "n_pl differs from recount")?;
    close(report.rate, total as f64 / positive as f64, 1e-12, "rate")?;
    Ok(format!("bucket(3) = {:?}, 1000 records, rate {:.4}", bucket_value(3), report.rate))
}

// 7. Metric fixtures.
fn metric_fixtures() -> Check {
    let even = ConfusionMatrix::from_rows(&[vec![1, 1], vec![1, 1]]).map_err(|e| e.to_string())?;
    let skew = ConfusionMatrix::from_rows(&[vec![2, 1], vec![0, 3]]).map_err(|e| e.to_string())?;
    close(kappa::<f64>(&even).map_err(|e| e.to_string())?, 0.0, 1e-12, "kappa [[1,1],[1,1]]")?;
    close(kappa::<f64>(&skew).map_err(|e| e.to_string())?, 2.0 / 3.0, 1e-12, "kappa [[2,1],[0,3]]")?;
    close(accuracy::<f64>(&skew).map_err(|e| e.to_string())?, 5.0 / 6.0, 1e-12, "accuracy")?;
    let (mae, rmse): (f64, f64) = mae_rmse_weights(&[1, -2], &[3, -2]).map_err(|e| e.to_string())?;
    close(mae, 1.0, 1e-12, "mae")?;
    close(rmse, 2f64.sqrt(), 1e-12, "rmse")?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..1000 {
        let n = rng.random_range(1..40);
        let g: Vec<i64> = (0..n).map(|_| rng.random_range(-3..=3)).collect();
        let p: Vec<i64> = (0..n).map(|_| rng.random_range(-3..=3)).collect();
        let (mae, rmse): (f64, f64) = mae_rmse_weights(&g, &p).map_err(|e| e.to_string())?;
        ensure(rmse + 1e-12 >= mae, format!("trial {trial}: rmse {rmse} < mae {mae}"))?;
    }
    Ok("kappa 0 and 2/3, accuracy 5/6, mae/rmse (1, sqrt 2), 1000 trials".into())
}

fn train_config(dir: &Path, corpus: &Path, name: &str) -> RunConfig {
    let mut kv = KeyValues::default();
    for (k, v) in [
        ("corpus", corpus.display().to_string()),
        ("out", dir.join(name).display().to_string()),
        ("seed", "13".into()),
        ("embed_dim", "8".into()),
        ("hidden_dim", "8".into()),
        ("num_recurrent_layers", "2".into()),
        ("batch_size", "16".into()),
        ("epochs", "2".into()),
    ] {
        kv.set(k, v);
    }
    RunConfig::from_key_values(kv).unwrap()
}

// 8. Identical runs give identical bytes, and files round-trip.
fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = synth_corpus(&SynthConfig { posts: 300, ..Default::default() }, 8).map_err(|e| e.to_string())?;
    let cpath = dir.path().join("c.jsonl");
    corpus.save(&cpath).map_err(|e| e.to_string())?;
    let reloaded = load_corpus(&cpath).map_err(|e| e.to_string())?;
    ensure(reloaded.rejects.is_empty() && reloaded.corpus.posts == corpus.posts, "corpus round trip")?;

    let a = cmd_train(&train_config(dir.path(), &cpath, "a.bin")).map_err(|e| e.to_string())?;
    let b = cmd_train(&train_config(dir.path(), &cpath, "b.bin")).map_err(|e| e.to_string())?;
    let read = |p: &Path| std::fs::read(p).map_err(|e| e.to_string());
    let (ma, mb) = (read(&a.model_path)?, read(&b.model_path)?);
    ensure(ma == mb, "model files differ")?;
    ensure(read(&a.vocab_path)? == read(&b.vocab_path)?, "vocabulary files differ")?;

    let (model, hash) = decode_model::<f64>(&ma, None).map_err(|e| e.to_string())?;
    ensure(encode_model(&model, hash) == ma, "model re-encode differs")?;

    let seeds = default_seeds();
    let (pos, neg) = collect_seed_posts(&corpus, &seeds).map_err(|e| e.to_string())?;
    let lex = LexiconBuilder::new(Preprocessor::default(), &seeds)
        .score_words(&pos, &neg, 0.7)
        .map_err(|e| e.to_string())?;
    let lpath = dir.path().join("lex.tsv");
    lex.save(&lpath).map_err(|e| e.to_string())?;
    let lex2 = Lexicon::load(&lpath).map_err(|e| e.to_string())?;
    ensure(lex2 == lex && lex2.to_text() == lex.to_text(), "lexicon round trip")?;
    Ok(format!("{} byte model files identical, corpus/lexicon/model round trip", ma.len()))
}

fn random_text(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(0..80);
    (0..len)
        .map(|_| loop {
            // Mostly printable planes, with a share of arbitrary code points.
            let cp = if rng.random_bool(0.3) {
                rng.random_range(0..0x11_0000)
            } else {
                rng.random_range(0..0x3000)
            };
            if let Some(c) = char::from_u32(cp) {
                break c;
            }
        })
        .collect()
}

// 9. No panics on arbitrary text, documented errors on degenerate input.
fn robustness() -> Check {
    let pre = Preprocessor::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut tokens = 0usize;
    for i in 0..10_000 {
        let text = random_text(&mut rng);
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            let n = tokenize(&text).len();
            pre.process_text("x", &text);
            n
        }));
        match outcome {
            Ok(n) => tokens += n,
            Err(_) => return Err(format!("panic on string {i}: {text:?}")),
        }
    }

    let none_positive = vec![DoIRecord::new("a", -2, 4, 1).unwrap(), DoIRecord::new("b", 0, 3, 0).unwrap()];
    ensure(
        matches!(rate("t", none_positive), Err(Error::NoPositiveSupport(_))),
        "n_pl = 0 did not report NoPositiveSupport",
    )?;
    ensure(matches!(build_vocab(&[], 100), Err(Error::EmptyCorpus)), "empty vocabulary input")?;
    let mut m = BdrnnModel::<f64>::init(Hyperparams::default()).map_err(|e| e.to_string())?;
    ensure(matches!(train(&mut m, &[]), Err(Error::EmptyCorpus)), "empty training set")?;
    let empty = Corpus::new("t", vec![]);
    ensure(
        matches!(LexiconBuilder::default().count(&empty, &empty), Err(Error::EmptyCorpus)),
        "empty seed corpora",
    )?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cpath = dir.path().join("empty.jsonl");
    std::fs::write(&cpath, "").map_err(|e| e.to_string())?;
    let err = cmd_train(&train_config(dir.path(), &cpath, "m.bin")).err();
    ensure(
        matches!(err, Some(birnn_cli::CliError::Core(Error::EmptyCorpus))),
        format!("empty corpus through train: {err:?}"),
    )?;
    Ok(format!("10000 strings, {tokens} tokens, no panics; N_PL = 0 and empty corpus rejected"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("gradient check", gradient_check),
        ("bidirectional symmetry", mirror_symmetry),
        ("hand-traced forward pass", hand_trace),
        ("lexicon oracle", lexicon_oracle),
        ("end-to-end learning", end_to_end),
        ("polarity and impact arithmetic", impact_arithmetic),
        ("metric fixtures", metric_fixtures),
        ("determinism and round trips", determinism),
        ("robustness", robustness),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("{}/9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
