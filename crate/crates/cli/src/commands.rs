use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use birnn_sentiment::bdrnn::{
    build_vocab, load_model, save_model, train_with, BdrnnModel, EpochStats, LabeledSequence, Vocab,
};
use birnn_sentiment::corpus::{dedupe, load_corpus, synth_corpus, Corpus, SynthConfig};
use birnn_sentiment::impact::{compare_topics, ranking_text, rate_with, DoIRecord, RateReport};
use birnn_sentiment::lexicon::{collect_seed_posts, Lexicon, LexiconBuilder, DEFAULT_THETA};
use birnn_sentiment::metrics::{evaluate, TraceRow};
use birnn_sentiment::polarity::{bucket, bucket_value, message_polarity};
use birnn_sentiment::preprocess::Document;
use birnn_sentiment::{Error, EvalReport, Model, SentimentClass};
use rayon::prelude::*;

use crate::config::{sibling, RunConfig};
use crate::CliError;

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| {
        CliError::Core(Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

/// Loads a corpus, reporting rejected lines on stderr.
fn read_corpus(path: &Path) -> Result<Corpus, CliError> {
    let loaded = load_corpus(path)?;
    for r in &loaded.rejects {
        eprintln!("{}:{}: skipped: {}", path.display(), r.line, r.reason);
    }
    Ok(loaded.corpus)
}

pub fn cmd_synth(rc: &RunConfig) -> Result<Corpus, CliError> {
    let out = rc.out()?;
    let cfg = SynthConfig::from_key_values(&rc.kv).map_err(|e| CliError::Usage(e.to_string()))?;
    let corpus = synth_corpus(&cfg, rc.seed)?;
    corpus.save(out)?;
    println!("wrote {} posts to {}", corpus.len(), out.display());
    Ok(corpus)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconSummary {
    pub theta: f64,
    /// Words scored negative, neutral and positive.
    pub sign_counts: [usize; 3],
    pub lexicon: Lexicon,
}

pub fn cmd_build_lexicon(rc: &RunConfig) -> Result<LexiconSummary, CliError> {
    let out = rc.out()?;
    let seeds = rc.seeds()?;
    let corpus = dedupe(read_corpus(rc.single_corpus()?)?);
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus.into());
    }
    let (pos, neg) = collect_seed_posts(&corpus, &seeds)?;
    let mut builder = LexiconBuilder::new(rc.preprocessor()?, &seeds);
    builder.min_count = rc.min_count;
    let theta = match (&rc.holdout, rc.theta) {
        (_, Some(t)) => t,
        (Some(h), None) => {
            let cal = builder.calibrate(&pos, &neg, &read_corpus(h)?)?;
            for (t, err) in &cal.grid {
                println!("theta {t:.2} holdout error {err:.4}");
            }
            cal.theta
        }
        (None, None) => DEFAULT_THETA,
    };
    let lexicon = builder.score_words(&pos, &neg, theta)?;
    lexicon.save(out)?;
    let sign_counts = lexicon.sign_counts();
    println!(
        "theta={theta:.2} seed_posts positive={} negative={} words negative={} neutral={} positive={}",
        pos.len(),
        neg.len(),
        sign_counts[0],
        sign_counts[1],
        sign_counts[2]
    );
    Ok(LexiconSummary {
        theta,
        sign_counts,
        lexicon,
    })
}

/// Gold class when present, otherwise the lexicon bucket.
fn labels(corpus: &Corpus, docs: &[Document], lexicon: Option<&Lexicon>) -> Result<Vec<SentimentClass>, CliError> {
    corpus
        .posts
        .iter()
        .zip(docs)
        .map(|(p, d)| match (p.gold_class, lexicon) {
            (Some(c), _) => Ok(c),
            (None, Some(lex)) => Ok(bucket(&message_polarity(d, lex))),
            (None, None) => Err(CliError::Usage(format!(
                "post {} has no gold class and no lexicon was given",
                p.id
            ))),
        })
        .collect()
}

fn predict_all(model: &Model, vocab: &Vocab, docs: &[Document]) -> Result<Vec<SentimentClass>, CliError> {
    let max_len = model.hp.max_seq_len;
    let preds: Result<Vec<SentimentClass>, Error> =
        docs.par_iter().map(|d| model.predict(&vocab.encode(d, max_len))).collect();
    Ok(preds?)
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub model_path: PathBuf,
    pub vocab_path: PathBuf,
    pub trace_path: PathBuf,
    pub epochs: Vec<EpochStats>,
}

pub fn cmd_train(rc: &RunConfig) -> Result<TrainSummary, CliError> {
    let model_path = rc.out()?.to_path_buf();
    let pre = rc.preprocessor()?;
    let corpus = dedupe(read_corpus(rc.single_corpus()?)?);
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus.into());
    }
    let lexicon = rc.lexicon.as_deref().map(Lexicon::load).transpose()?;
    let docs = pre.process_all(&corpus.posts);
    let gold = labels(&corpus, &docs, lexicon.as_ref())?;

    let vocab = build_vocab(&docs, rc.max_vocab)?;
    let mut hp = rc.hp.clone();
    hp.vocab_size = vocab.len();
    hp.num_classes = SentimentClass::COUNT;
    let data: Vec<LabeledSequence> = docs
        .iter()
        .zip(&gold)
        .map(|(d, c)| LabeledSequence {
            seq: vocab.encode(d, hp.max_seq_len),
            label: c.index(),
        })
        .collect();

    // The trace is scored on the holdout when one is given.
    let (eval_docs, eval_gold) = match &rc.holdout {
        Some(h) => {
            let hc = read_corpus(h)?;
            let hd = pre.process_all(&hc.posts);
            let hg = labels(&hc, &hd, lexicon.as_ref())?;
            (hd, hg)
        }
        None => (docs.clone(), gold.clone()),
    };

    let trace_path = rc.trace.clone().unwrap_or_else(|| sibling(&model_path, "trace.tsv"));
    let mut trace = format!("{}\n", TraceRow::<f64>::HEADER);
    let mut model = BdrnnModel::init(hp)?;
    let epochs = train_with(&mut model, &data, |stats, m| {
        let preds = predict_all(m, &vocab, &eval_docs).map_err(|e| match e {
            CliError::Core(e) => e,
            CliError::Usage(msg) => Error::InvalidArgument(msg),
        })?;
        let row = TraceRow {
            epoch: stats.epoch,
            loss: stats.mean_loss,
            report: evaluate(&eval_gold, &preds)?,
        };
        println!("epoch {} loss {:.6} train_accuracy {:.4}", stats.epoch, stats.mean_loss, stats.accuracy);
        writeln!(trace, "{}", row.to_line()).expect("string write");
        Ok(())
    })?;

    let vocab_path = rc.vocab_path(&model_path);
    vocab.save(&vocab_path)?;
    save_model(&model, &vocab, &model_path)?;
    write(&trace_path, &trace)?;
    println!(
        "wrote {} ({} parameters), {}, {}",
        model_path.display(),
        model.num_params(),
        vocab_path.display(),
        trace_path.display()
    );
    Ok(TrainSummary {
        model_path,
        vocab_path,
        trace_path,
        epochs,
    })
}

fn load_model_and_vocab(rc: &RunConfig) -> Result<Option<(Model, Vocab)>, CliError> {
    let Some(model_path) = &rc.model else {
        return Ok(None);
    };
    let vocab = Vocab::load(rc.vocab_path(model_path))?;
    let model = load_model(model_path, &vocab)?;
    Ok(Some((model, vocab)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPost {
    pub post_id: String,
    /// Message polarity; `None` without a lexicon.
    pub p: Option<i64>,
    pub class: SentimentClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifySummary {
    pub posts: Vec<ScoredPost>,
    /// Share of posts where the model and the lexicon bucket agree, when
    /// both are available.
    pub agreement: Option<f64>,
}

pub const SCORED_HEADER: &str = "#post_id\tp\tclass\tweight";

pub fn cmd_classify(rc: &RunConfig) -> Result<ClassifySummary, CliError> {
    let out = rc.out()?;
    let corpus = read_corpus(rc.single_corpus()?)?;
    let lexicon = rc.lexicon.as_deref().map(Lexicon::load).transpose()?;
    let mv = load_model_and_vocab(rc)?;
    if lexicon.is_none() && mv.is_none() {
        return Err(CliError::Usage("classify needs --model or --lexicon".into()));
    }
    let docs = rc.preprocessor()?.process_all(&corpus.posts);
    let ps: Option<Vec<i64>> = lexicon
        .as_ref()
        .map(|lex| docs.iter().map(|d| message_polarity(d, lex).p).collect());
    let model_classes = match &mv {
        Some((m, v)) => Some(predict_all(m, v, &docs)?),
        None => None,
    };

    let agreement = match (&ps, &model_classes) {
        (Some(ps), Some(mc)) if !mc.is_empty() => {
            let same = ps.iter().zip(mc).filter(|(p, c)| bucket_value(**p) == **c).count();
            Some(same as f64 / mc.len() as f64)
        }
        _ => None,
    };

    let mut text = format!("{SCORED_HEADER}\n");
    let mut posts = Vec::with_capacity(corpus.len());
    for (i, post) in corpus.posts.iter().enumerate() {
        let p = ps.as_ref().map(|v| v[i]);
        let class = match &model_classes {
            Some(mc) => mc[i],
            None => bucket_value(p.expect("lexicon present")),
        };
        let p_text = p.map_or_else(|| "-".to_string(), |p| p.to_string());
        writeln!(text, "{}\t{}\t{}\t{}", post.id, p_text, class.name(), class.weight()).expect("string write");
        posts.push(ScoredPost {
            post_id: post.id.clone(),
            p,
            class,
        });
    }
    write(out, &text)?;
    match agreement {
        Some(a) => println!("classified {} posts; model/lexicon agreement {a:.4}", posts.len()),
        None => println!("classified {} posts", posts.len()),
    }
    Ok(ClassifySummary { posts, agreement })
}

/// Reads `post_id -> weight` pairs from a `classify` output file.
fn read_scored(path: &Path) -> Result<Vec<(String, i64)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        CliError::Core(Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let weight = cols.get(3).and_then(|w| w.parse::<i64>().ok()).filter(|w| (-3..=3).contains(w));
        match (cols.first(), weight) {
            (Some(id), Some(w)) if cols.len() == 4 => out.push((id.to_string(), w)),
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: "expected post_id<TAB>p<TAB>class<TAB>weight".into(),
                }
                .into())
            }
        }
    }
    Ok(out)
}

pub fn cmd_rate(rc: &RunConfig) -> Result<Vec<RateReport>, CliError> {
    let out = rc.out()?;
    if rc.corpus.is_empty() || rc.corpus.len() != rc.scored.len() {
        return Err(CliError::Usage(format!(
            "rate needs matching --corpus/--scored pairs, got {} and {}",
            rc.corpus.len(),
            rc.scored.len()
        )));
    }
    let mut reports = Vec::new();
    for (cp, sp) in rc.corpus.iter().zip(&rc.scored) {
        let corpus = read_corpus(cp)?;
        let by_id: HashMap<&str, (u64, u64)> = corpus
            .posts
            .iter()
            .map(|p| (p.id.as_str(), (p.likes, p.retweets)))
            .collect();
        let mut records = Vec::new();
        for (id, w) in read_scored(sp)? {
            let (likes, rts) = by_id.get(id.as_str()).ok_or_else(|| {
                CliError::Core(Error::InvalidArgument(format!(
                    "{}: post {id} not in {}",
                    sp.display(),
                    cp.display()
                )))
            })?;
            let count = |v: u64| i64::try_from(v).map_err(|_| Error::InvalidArgument(format!("count {v} too large")));
            records.push(DoIRecord::new(id, w, count(*likes)?, count(*rts)?)?);
        }
        reports.push(rate_with(&corpus.topic, records, rc.rate_denominator)?);
    }
    let ranked = compare_topics(&reports);
    let mut text = ranking_text(&ranked);
    for r in &reports {
        text.push('\n');
        text.push_str(&r.to_text());
    }
    write(out, &text)?;
    print!("{}", ranking_text(&ranked));
    Ok(reports)
}

pub fn cmd_evaluate(rc: &RunConfig) -> Result<EvalReport, CliError> {
    let out = rc.out()?;
    let corpus = read_corpus(rc.single_corpus()?)?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus.into());
    }
    let unlabeled = corpus.posts.iter().filter(|p| p.gold_class.is_none()).count();
    if unlabeled > 0 {
        return Err(Error::UnlabeledHoldout(unlabeled).into());
    }
    let gold: Vec<SentimentClass> = corpus.posts.iter().filter_map(|p| p.gold_class).collect();
    let docs = rc.preprocessor()?.process_all(&corpus.posts);
    let preds = match load_model_and_vocab(rc)? {
        Some((m, v)) => predict_all(&m, &v, &docs)?,
        None => {
            let lex = rc
                .lexicon
                .as_deref()
                .map(Lexicon::load)
                .transpose()?
                .ok_or_else(|| CliError::Usage("evaluate needs --model or --lexicon".into()))?;
            docs.iter().map(|d| bucket(&message_polarity(d, &lex))).collect()
        }
    };
    let report: EvalReport = evaluate(&gold, &preds)?;
    report.save(out)?;
    println!(
        "accuracy {:.4} macro_f1 {:.4} kappa {:.4} mae {:.4} rmse {:.4}",
        report.accuracy, report.macro_f1, report.kappa, report.mae, report.rmse
    );
    Ok(report)
}
