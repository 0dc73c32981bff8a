use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rayon::ThreadPool;

use super::config::PipelineConfig;
use super::manifest::Manifest;
use super::records::{read_stream, write_stream, DeltaItem, Failure, Record, ScoreItem, Stream, TranslationItem, UnitRole};
use super::{PipelineError, Stage, StageOptions, StageSummary};
use crate::backend::{BackendError, MtBackend, QeBackend};
use crate::corpus::{load_plain, parse_conllu, read_jsonl, Corpus, Sentence};
use crate::extract::{Category, Extractor, VmweCandidate};
use crate::lexicon::{default_verb_lemmas, light_verb_set, load_idiom_lexicon, read_verb_lemmas, IdiomLexicon};
use crate::llm::{classify_candidate, paraphrase_candidate, ClassificationResult, LlmError};
use crate::mt::langid::default_detector;
use crate::mt::{translate, Lang, MtError, TranslationRecord, ValidityStatus, Validator};
use crate::qe::{paraphrase_experiment, score, Orientation, QeError};
use crate::report::{
    classifier_report, classifier_table, delta_rows_table, delta_table, diagnostics_table, emit, emit_bundle,
    error_rate_cells_table, error_rate_table, exclusions, gap_cells_table, gap_matrix, gap_table, rank_languages,
    rank_systems, ranking_table, z_gap_table, CellKey, Diagnostic, Format, GoldLabel, PairMean, Table,
};
use crate::scalar::mean;
use crate::stats::{znormalize, DaAnnotation};

/// Settings shared by every stage of one run.
struct Ctx<'a> {
    config: &'a PipelineConfig,
    opts: &'a StageOptions,
    seed: u64,
    categories: Vec<Category>,
    langs: Vec<Lang>,
    pool: ThreadPool,
}

impl<'a> Ctx<'a> {
    fn new(config: &'a PipelineConfig, opts: &'a StageOptions) -> Result<Self, PipelineError> {
        let categories = match &opts.categories {
            Some(c) => c.clone(),
            None => config.category_list()?,
        };
        let langs = opts.target_langs.clone().unwrap_or_else(|| config.target_langs.clone());
        if let Some(l) = langs.iter().find(|l| !l.is_target()) {
            return Err(PipelineError::contract(format!("{l} is not a translation target")));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.concurrency)
            .build()
            .map_err(|e| PipelineError::contract(format!("thread pool: {e}")))?;
        Ok(Self {
            config,
            opts,
            seed: opts.seed.unwrap_or(config.seed),
            categories,
            langs,
            pool,
        })
    }

    /// Order-preserving map on the bounded pool.
    fn par_map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        self.pool.install(|| items.par_iter().map(f).collect())
    }

    fn snapshot(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self.config).expect("config serializes");
        let obj = v.as_object_mut().expect("config is a table");
        obj.insert("seed".into(), self.seed.into());
        obj.insert(
            "categories".into(),
            self.categories.iter().map(|c| c.as_str().to_lowercase()).collect::<Vec<_>>().into(),
        );
        obj.insert("target_langs".into(), serde_json::to_value(&self.langs).expect("langs serialize"));
        if let Some(b) = &self.opts.backend {
            obj.insert("backend_override".into(), b.clone().into());
        }
        v
    }

    fn input(&self, stage: Stage) -> Result<(Stream, PathBuf), PipelineError> {
        let path = self
            .opts
            .stage_in
            .clone()
            .ok_or_else(|| PipelineError::contract(format!("{stage} needs --stage-in")))?;
        let stream = read_stream(&path)?;
        let expected = stage.predecessor().expect("not extract");
        if stream.stage != expected {
            return Err(PipelineError::contract(format!(
                "{stage} reads a {expected} stream, got {}",
                stream.stage
            )));
        }
        Ok((stream, path))
    }

    fn backend_names(&self, configured: &[String], stage: Stage) -> Result<Vec<String>, PipelineError> {
        let names = match &self.opts.backend {
            Some(b) => vec![b.clone()],
            None => configured.to_vec(),
        };
        if names.is_empty() {
            return Err(PipelineError::contract(format!("no backend configured for {stage}")));
        }
        Ok(names)
    }

    fn script_files(&self, names: &[String]) -> Vec<PathBuf> {
        names
            .iter()
            .filter_map(|n| self.config.backend(n).ok())
            .filter_map(|b| b.script.as_ref())
            .map(|p| self.config.resolve(p))
            .collect()
    }
}

/// Everything a stream stage hands to [`finish`].
struct Output {
    records: Vec<Record>,
    counts: BTreeMap<String, usize>,
    failures: Vec<Failure>,
    inputs: Vec<PathBuf>,
}

impl Output {
    fn new(records: Vec<Record>, inputs: Vec<PathBuf>) -> Self {
        Self {
            records,
            counts: BTreeMap::new(),
            failures: Vec::new(),
            inputs,
        }
    }

    fn count(&mut self, key: &str, n: usize) {
        *self.counts.entry(key.to_string()).or_default() += n;
    }

    fn fail(&mut self, stage: Stage, unit: String, error: String, transport: bool) {
        if transport {
            log::error!("{stage} {unit}: {error}");
        } else {
            log::warn!("{stage} {unit}: {error}");
        }
        self.failures.push(Failure {
            stage,
            unit,
            error,
            transport,
        });
    }
}

fn manifest_for(ctx: &Ctx, stage: Stage, out: &Output) -> Result<Manifest, PipelineError> {
    let mut m = Manifest::new(stage, ctx.snapshot(), ctx.seed);
    m.add_inputs(&out.inputs)?;
    m.counts = out.counts.clone();
    m.failures = out.failures.len();
    m.transport_failures = out.failures.iter().filter(|f| f.transport).count();
    Ok(m)
}

fn summary(stage: Stage, output: &Path, m: &Manifest) -> StageSummary {
    StageSummary {
        stage: Some(stage),
        output: output.to_path_buf(),
        counts: m.counts.clone(),
        failures: m.failures,
        transport_failures: m.transport_failures,
    }
}

fn finish(ctx: &Ctx, stage: Stage, mut out: Output) -> Result<StageSummary, PipelineError> {
    let m = manifest_for(ctx, stage, &out)?;
    let path = &ctx.opts.stage_out;
    out.records.extend(out.failures.iter().cloned().map(Record::Failure));
    write_stream(path, stage, &out.records)?;
    m.write(&Manifest::path_for(path, stage))?;
    Ok(summary(stage, path, &m))
}

fn is_transport(e: &BackendError) -> bool {
    e.is_transport()
}

fn llm_transport(e: &LlmError) -> bool {
    matches!(e, LlmError::Backend(b) if is_transport(b))
}

fn mt_transport(e: &MtError) -> bool {
    matches!(e, MtError::Backend(b) if is_transport(b))
}

fn qe_transport(e: &QeError) -> bool {
    matches!(e, QeError::Backend(b) if is_transport(b))
}

fn label_of(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn open(path: &Path) -> Result<BufReader<File>, PipelineError> {
    File::open(path).map(BufReader::new).map_err(|e| PipelineError::io(path, e))
}

/// Corpus format follows the extension: `.conllu`/`.conll`, `.jsonl`, anything else plain text.
pub(crate) fn load_corpus_file(path: &Path) -> Result<Corpus, PipelineError> {
    let label = label_of(path);
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let reader = open(path)?;
    let parsed = match ext.as_str() {
        "conllu" | "conll" => parse_conllu(reader, &label),
        "jsonl" => read_jsonl(reader, &label),
        _ => load_plain(reader, &label),
    };
    parsed.map_err(|e| PipelineError::contract(format!("{}: {e}", path.display())))
}

fn load_lexicon(config: &PipelineConfig) -> Result<(IdiomLexicon, Vec<PathBuf>), PipelineError> {
    let mut used = Vec::new();
    let verbs = match &config.lexicon.verb_lemmas {
        Some(p) => {
            let path = config.resolve(p);
            let v = read_verb_lemmas(open(&path)?).map_err(|e| PipelineError::contract(format!("{}: {e}", path.display())))?;
            used.push(path);
            v
        }
        None => default_verb_lemmas(),
    };
    let mut parts = Vec::new();
    let mut labels = Vec::new();
    for p in &config.lexicon.idiom_paths {
        let path = config.resolve(p);
        let label = label_of(&path);
        let lex = load_idiom_lexicon(open(&path)?, &verbs, &label)
            .map_err(|e| PipelineError::contract(format!("{}: {e}", path.display())))?;
        parts.push(lex);
        labels.push(label);
        used.push(path);
    }
    Ok((IdiomLexicon::merge(labels.join("+"), parts), used))
}

fn run_extract(ctx: &Ctx) -> Result<StageSummary, PipelineError> {
    let config = ctx.config;
    let corpus_paths: Vec<PathBuf> = match &ctx.opts.stage_in {
        Some(p) => vec![p.clone()],
        None => config.corpus.paths.iter().map(|p| config.resolve(p)).collect(),
    };
    if corpus_paths.is_empty() {
        return Err(PipelineError::contract("no corpus files given"));
    }
    let mut sentences = Vec::new();
    for p in &corpus_paths {
        sentences.extend(load_corpus_file(p)?.sentences);
    }
    let label = config
        .corpus
        .label
        .clone()
        .unwrap_or_else(|| corpus_paths.iter().map(|p| label_of(p)).collect::<Vec<_>>().join("+"));
    let corpus = Corpus::new(label.clone(), sentences).map_err(|e| PipelineError::contract(e.to_string()))?;

    let (idioms, lexicon_files) = load_lexicon(config)?;
    let mut extractor = Extractor::new(idioms, light_verb_set(config.lexicon.light_verbs)).with_threshold(config.threshold()?);
    extractor.particle_allowlist = config
        .lexicon
        .particle_allowlist
        .as_ref()
        .map(|l| l.iter().map(|p| p.to_lowercase()).collect());

    let mut inputs = corpus_paths.clone();
    inputs.extend(lexicon_files);
    let mut out = Output::new(Vec::new(), inputs);

    let parsed: Vec<Sentence> = corpus.sentences.iter().filter(|s| s.has_dependencies()).cloned().collect();
    let unparsed = corpus.len() - parsed.len();
    if unparsed > 0 {
        log::warn!("{unparsed} sentences have no dependency parse; only idiom matching runs on them");
    }
    let vid_only: Vec<Category> = ctx.categories.iter().copied().filter(|c| *c == Category::Vid).collect();
    let found: Vec<Result<Vec<VmweCandidate>, _>> = ctx.par_map(&corpus.sentences, |s| {
        let cats = if s.has_dependencies() { &ctx.categories } else { &vid_only };
        extractor.candidates(s, cats)
    });

    let parsed_corpus = Corpus::new(label, parsed).map_err(|e| PipelineError::contract(e.to_string()))?;
    let sample = extractor
        .sample_non_vmwe(&parsed_corpus, config.control_size, ctx.seed)
        .map_err(|e| PipelineError::contract(e.to_string()))?;
    let control_ids: BTreeSet<&str> = sample.sentences.iter().map(|s| s.id.as_str()).collect();

    let mut records = Vec::new();
    for (s, cands) in corpus.sentences.iter().zip(found) {
        let cands = cands.map_err(|e| PipelineError::contract(format!("sentence {}: {e}", s.id)))?;
        let is_control = control_ids.contains(s.id.as_str());
        if cands.is_empty() && !is_control {
            continue;
        }
        records.push(Record::Sentence(s.clone()));
        for c in cands {
            out.count(&format!("candidates_{}", c.category.as_str().to_lowercase()), 1);
            records.push(Record::Candidate(c));
        }
        if is_control {
            records.push(Record::Control {
                sentence_id: s.id.clone(),
            });
        }
    }
    out.records = records;
    out.count("sentences_read", corpus.len());
    out.count("sentences_unparsed", unparsed);
    out.count("controls", sample.sentences.len());
    out.count("controls_requested", sample.requested);
    for c in &ctx.categories {
        out.count(&format!("candidates_{}", c.as_str().to_lowercase()), 0);
    }
    finish(ctx, Stage::Extract, out)
}

fn sentence_index(stream: &Stream) -> HashMap<&str, &Sentence> {
    stream.sentences().map(|s| (s.id.as_str(), s)).collect()
}

fn candidate_index(stream: &Stream) -> HashMap<String, &VmweCandidate> {
    stream.candidates().map(|c| (c.id(), c)).collect()
}

fn lookup<'s>(index: &HashMap<&str, &'s Sentence>, c: &VmweCandidate) -> Result<&'s Sentence, PipelineError> {
    index
        .get(c.sentence_id.as_str())
        .copied()
        .ok_or_else(|| PipelineError::contract(format!("candidate {} refers to a missing sentence", c.id())))
}

fn run_classify(ctx: &Ctx) -> Result<StageSummary, PipelineError> {
    let (stream, in_path) = ctx.input(Stage::Classify)?;
    let names = ctx.backend_names(ctx.config.stages.classify.as_slice(), Stage::Classify)?;
    let client = ctx.config.chat_backend(&names[0])?;
    let sentences = sentence_index(&stream);
    let jobs: Vec<(&VmweCandidate, &Sentence)> = stream
        .candidates()
        .filter(|c| ctx.categories.contains(&c.category))
        .map(|c| lookup(&sentences, c).map(|s| (c, s)))
        .collect::<Result<_, _>>()?;

    let results = ctx.par_map(&jobs, |(c, s)| classify_candidate(client.as_ref(), c.category, c, s));

    let mut inputs = vec![in_path];
    inputs.extend(ctx.script_files(&names));
    let mut out = Output::new(stream.records.clone(), inputs);
    out.count("candidates", jobs.len());
    for key in ["positive", "negative", "undecided", "failed"] {
        out.count(key, 0);
    }
    for ((c, _), r) in jobs.iter().zip(results) {
        let r: ClassificationResult = match r {
            Ok(r) => r,
            Err(e) => {
                out.fail(Stage::Classify, c.id(), e.to_string(), llm_transport(&e));
                ClassificationResult::failed(c, &e)
            }
        };
        let key = match (r.status, r.verdict) {
            (crate::llm::Decision::Decided, Some(true)) => "positive",
            (crate::llm::Decision::Decided, _) => "negative",
            (crate::llm::Decision::Undecided, _) => "undecided",
            (crate::llm::Decision::Failed, _) => "failed",
        };
        out.count(key, 1);
        out.records.push(Record::Classification(r));
    }
    finish(ctx, Stage::Classify, out)
}

fn run_paraphrase(ctx: &Ctx) -> Result<StageSummary, PipelineError> {
    let (stream, in_path) = ctx.input(Stage::Paraphrase)?;
    let names = ctx.backend_names(ctx.config.stages.paraphrase.as_slice(), Stage::Paraphrase)?;
    let client = ctx.config.chat_backend(&names[0])?;
    let sentences = sentence_index(&stream);
    let candidates = candidate_index(&stream);
    let mut jobs: Vec<(&VmweCandidate, &Sentence)> = Vec::new();
    for r in stream.classifications().filter(|r| r.is_positive() && ctx.categories.contains(&r.category)) {
        let c = candidates
            .get(&r.candidate_ref)
            .ok_or_else(|| PipelineError::contract(format!("classification for unknown candidate {}", r.candidate_ref)))?;
        jobs.push((c, lookup(&sentences, c)?));
    }

    let results = ctx.par_map(&jobs, |(c, s)| paraphrase_candidate(client.as_ref(), c, s));

    let mut inputs = vec![in_path];
    inputs.extend(ctx.script_files(&names));
    let mut out = Output::new(stream.records.clone(), inputs);
    out.count("requested", jobs.len());
    out.count("paraphrased", 0);
    out.count("retains_phrase", 0);
    for ((c, _), r) in jobs.iter().zip(results) {
        match r {
            Ok(p) => {
                out.count("paraphrased", 1);
                out.count("retains_phrase", usize::from(p.retains_phrase));
                out.records.push(Record::Paraphrase(p));
            }
            Err(e) => out.fail(Stage::Paraphrase, c.id(), e.to_string(), llm_transport(&e)),
        }
    }
    finish(ctx, Stage::Paraphrase, out)
}

/// A source text to translate.
struct Unit {
    role: UnitRole,
    unit: String,
    sentence_id: String,
    source: String,
    categories: Vec<Category>,
}

/// Sentence id -> categories with a positive classification.
fn positive_categories(stream: &Stream, categories: &[Category]) -> Result<BTreeMap<String, BTreeSet<Category>>, PipelineError> {
    let candidates = candidate_index(stream);
    let mut out: BTreeMap<String, BTreeSet<Category>> = BTreeMap::new();
    for r in stream.classifications().filter(|r| r.is_positive() && categories.contains(&r.category)) {
        let c = candidates
            .get(&r.candidate_ref)
            .ok_or_else(|| PipelineError::contract(format!("classification for unknown candidate {}", r.candidate_ref)))?;
        out.entry(c.sentence_id.clone()).or_default().insert(r.category);
    }
    Ok(out)
}

fn translation_units(stream: &Stream, categories: &[Category]) -> Result<Vec<Unit>, PipelineError> {
    let positive = positive_categories(stream, categories)?;
    let sentences = sentence_index(stream);
    let candidates = candidate_index(stream);
    let mut units = Vec::new();
    for s in stream.sentences() {
        if let Some(cats) = positive.get(&s.id) {
            units.push(Unit {
                role: UnitRole::Vmwe,
                unit: s.id.clone(),
                sentence_id: s.id.clone(),
                source: s.text.clone(),
                categories: cats.iter().copied().collect(),
            });
        }
    }
    for id in stream.controls() {
        let s = sentences
            .get(id)
            .ok_or_else(|| PipelineError::contract(format!("control {id} refers to a missing sentence")))?;
        units.push(Unit {
            role: UnitRole::Control,
            unit: id.to_string(),
            sentence_id: id.to_string(),
            source: s.text.clone(),
            categories: Vec::new(),
        });
    }
    for p in stream.paraphrases() {
        let c = candidates
            .get(&p.candidate_ref)
            .ok_or_else(|| PipelineError::contract(format!("paraphrase for unknown candidate {}", p.candidate_ref)))?;
        if !categories.contains(&c.category) {
            continue;
        }
        units.push(Unit {
            role: UnitRole::Paraphrase,
            unit: p.candidate_ref.clone(),
            sentence_id: p.sentence_id.clone(),
            source: p.paraphrased.clone(),
            categories: vec![c.category],
        });
    }
    Ok(units)
}

fn run_translate(ctx: &Ctx) -> Result<StageSummary, PipelineError> {
    let (stream, in_path) = ctx.input(Stage::Translate)?;
    let names = ctx.backend_names(&ctx.config.stages.translate, Stage::Translate)?;
    let clients: Vec<Box<dyn MtBackend>> = names.iter().map(|n| ctx.config.mt_backend(n)).collect::<Result<_, _>>()?;
    let units = translation_units(&stream, &ctx.categories)?;
    let validator = Validator {
        detector: default_detector(),
        repetition: ctx.config.repetition,
    };

    let mut jobs = Vec::new();
    for (b, _) in clients.iter().enumerate() {
        for &lang in &ctx.langs {
            for (u, _) in units.iter().enumerate() {
                jobs.push((b, lang, u));
            }
        }
    }
    let results = ctx.par_map(&jobs, |&(b, lang, u)| {
        let unit = &units[u];
        translate(clients[b].as_ref(), &unit.sentence_id, &unit.source, lang).map(|mut r: TranslationRecord| {
            r.validity = Some(validator.validate(&r));
            r
        })
    });

    let mut inputs = vec![in_path];
    inputs.extend(ctx.script_files(&names));
    let mut out = Output::new(stream.records.clone(), inputs);
    out.count("translations", 0);
    for status in [
        ValidityStatus::Ok,
        ValidityStatus::WrongLanguage,
        ValidityStatus::Untranslated,
        ValidityStatus::Repetitive,
        ValidityStatus::Empty,
    ] {
        out.count(&format!("validity_{status}"), 0);
    }
    for (&(b, lang, u), r) in jobs.iter().zip(results) {
        let unit = &units[u];
        match r {
            Ok(record) => {
                out.count("translations", 1);
                out.count(&format!("validity_{}", record.validity.expect("set above")), 1);
                out.records.push(Record::Translation(TranslationItem {
                    role: unit.role,
                    unit: unit.unit.clone(),
                    categories: unit.categories.clone(),
                    record,
                }));
            }
            Err(e) => {
                let id = format!("{}/{}/{}", clients[b].system_id(), lang, unit.unit);
                out.fail(Stage::Translate, id, e.to_string(), mt_transport(&e));
            }
        }
    }
    finish(ctx, Stage::Translate, out)
}

enum ScoreJob<'a> {
    Single(usize, &'a TranslationItem),
    Delta {
        backend: usize,
        ori: &'a TranslationItem,
        para: &'a TranslationItem,
    },
}

fn run_score(ctx: &Ctx) -> Result<StageSummary, PipelineError> {
    let (stream, in_path) = ctx.input(Stage::Score)?;
    let names = ctx.backend_names(&ctx.config.stages.score, Stage::Score)?;
    let clients: Vec<Box<dyn QeBackend>> = names.iter().map(|n| ctx.config.qe_backend(n)).collect::<Result<_, _>>()?;
    let items: Vec<&TranslationItem> = stream.translations().collect();
    let valid: Vec<&TranslationItem> = items.iter().copied().filter(|t| t.record.is_valid()).collect();
    let originals: HashMap<(&str, &str, Lang), &TranslationItem> = valid
        .iter()
        .filter(|t| t.role == UnitRole::Vmwe)
        .map(|t| ((t.unit.as_str(), t.record.system_id.as_str(), t.record.target_lang), *t))
        .collect();

    let mut jobs = Vec::new();
    for b in 0..clients.len() {
        jobs.extend(valid.iter().map(|t| ScoreJob::Single(b, t)));
    }
    let mut unpaired = 0;
    for b in 0..clients.len() {
        for para in items.iter().filter(|t| t.role == UnitRole::Paraphrase) {
            let key = (para.record.sentence_id.as_str(), para.record.system_id.as_str(), para.record.target_lang);
            match originals.get(&key) {
                Some(ori) if para.record.is_valid() => jobs.push(ScoreJob::Delta { backend: b, ori, para }),
                _ => unpaired += 1,
            }
        }
    }

    enum Scored {
        Single(ScoreItem),
        Delta(DeltaItem),
    }
    let results = ctx.par_map(&jobs, |job| match job {
        ScoreJob::Single(b, t) => score(clients[*b].as_ref(), &t.record.source, &t.record.hypothesis).map(|s| {
            Scored::Single(ScoreItem {
                role: t.role,
                unit: t.unit.clone(),
                categories: t.categories.clone(),
                sentence_id: t.record.sentence_id.clone(),
                system_id: t.record.system_id.clone(),
                target_lang: t.record.target_lang,
                score: s,
            })
        }),
        ScoreJob::Delta { backend, ori, para } => paraphrase_experiment(
            clients[*backend].as_ref(),
            &ori.record,
            &para.record,
            &ori.record.source,
            &para.record.source,
        )
        .map(|report| {
            Scored::Delta(DeltaItem {
                category: para.categories[0],
                candidate_ref: para.unit.clone(),
                report,
            })
        }),
    });

    let mut out = Output::new(stream.records.clone(), vec![in_path]);
    out.count("translations_skipped_invalid", items.len() - valid.len());
    out.count("deltas_skipped", unpaired);
    out.count("scores", 0);
    out.count("deltas", 0);
    for (job, r) in jobs.iter().zip(results) {
        match r {
            Ok(Scored::Single(s)) => {
                out.count("scores", 1);
                out.records.push(Record::Score(s));
            }
            Ok(Scored::Delta(d)) => {
                out.count("deltas", 1);
                out.records.push(Record::Delta(d));
            }
            Err(e) => {
                let (b, t) = match job {
                    ScoreJob::Single(b, t) => (*b, *t),
                    ScoreJob::Delta { backend, para, .. } => (*backend, *para),
                };
                let id = format!("{}/{}/{}/{}", clients[b].metric_id(), t.record.system_id, t.record.target_lang, t.unit);
                out.fail(Stage::Score, id, e.to_string(), qe_transport(&e));
            }
        }
    }
    finish(ctx, Stage::Score, out)
}

/// Table and file name fragment for a metric id.
fn slug(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn read_jsonl_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| PipelineError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| PipelineError::contract(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

const MOCK_NOTE: &str = "scores come from a mock backend (character overlap) and carry no quality meaning";

fn metric_tables(ctx: &Ctx, stream: &Stream, excluded: &BTreeSet<(String, Lang)>, diags: &mut Vec<Diagnostic>) -> Vec<Table> {
    let mut metrics: Vec<(String, Orientation)> = Vec::new();
    for s in stream.scores() {
        if !metrics.iter().any(|(m, _)| *m == s.score.metric_id) {
            metrics.push((s.score.metric_id.clone(), s.score.orientation));
        }
    }
    let mut tables = Vec::new();
    for (metric, orientation) in metrics {
        let scale = orientation.display_scale();
        let name = slug(&metric);
        let is_mock = ctx
            .config
            .backends
            .iter()
            .any(|b| b.is_mock() && b.model == metric && b.role() == Some(super::BackendKind::Qe));
        let scores: Vec<&ScoreItem> = stream.scores().filter(|s| s.score.metric_id == metric).collect();
        let mut tagged = |found: Vec<Diagnostic>| {
            diags.extend(found.into_iter().map(|d| Diagnostic::new(format!("{metric} {}", d.subject), d.message)));
        };

        let mut vmwe: BTreeMap<CellKey, Vec<f64>> = BTreeMap::new();
        let mut control: BTreeMap<CellKey, Vec<f64>> = BTreeMap::new();
        let mut pairs: BTreeMap<(String, Lang), Vec<f64>> = BTreeMap::new();
        for s in &scores {
            match s.role {
                UnitRole::Vmwe => {
                    for c in s.categories.iter().filter(|c| ctx.categories.contains(c)) {
                        vmwe.entry(CellKey::new(*c, &s.system_id, s.target_lang)).or_default().push(s.score.value);
                    }
                    pairs.entry((s.system_id.clone(), s.target_lang)).or_default().push(s.score.value);
                }
                UnitRole::Control => {
                    for c in &ctx.categories {
                        control.entry(CellKey::new(*c, &s.system_id, s.target_lang)).or_default().push(s.score.value);
                    }
                }
                UnitRole::Paraphrase => {}
            }
        }
        let (cells, d) = gap_table(&vmwe, &control, &metric, orientation);
        tagged(d);
        let mut t = gap_cells_table(&format!("gap_{name}"), &cells, scale);
        let mut m = gap_matrix(&format!("gap_matrix_{name}"), &cells, scale);
        if is_mock {
            t.note(MOCK_NOTE);
            m.note(MOCK_NOTE);
        }
        tables.push(t);
        tables.push(m);

        let deltas: Vec<(Category, crate::qe::DeltaReport<f64>)> = stream
            .deltas()
            .filter(|d| d.report.qe_ori.metric_id == metric && ctx.categories.contains(&d.category))
            .map(|d| (d.category, d.report.clone()))
            .collect();
        let mut t = delta_rows_table(&format!("delta_{name}"), &delta_table(&deltas));
        if is_mock {
            t.note(MOCK_NOTE);
        }
        tables.push(t);

        let means: Vec<PairMean<f64>> = pairs
            .into_iter()
            .map(|((system_id, target_lang), v)| PairMean {
                system_id,
                target_lang,
                mean: mean(&v).expect("non-empty group"),
            })
            .collect();
        let (ranking, d) = rank_systems(&means, &metric, None, orientation, excluded);
        tagged(d);
        let mut t = ranking_table(&format!("ranking_{name}"), &ranking);
        let (lang_ranking, d) = rank_languages(&means, &metric, None, orientation, excluded);
        tagged(d);
        let mut l = ranking_table(&format!("language_ranking_{name}"), &lang_ranking);
        if is_mock {
            t.note(MOCK_NOTE);
            l.note(MOCK_NOTE);
        }
        tables.push(t);
        tables.push(l);
    }
    tables
}

fn run_report(ctx: &Ctx) -> Result<StageSummary, PipelineError> {
    let (stream, in_path) = ctx.input(Stage::Report)?;
    let config = ctx.config;
    let dir = &ctx.opts.stage_out;
    fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let mut inputs = vec![in_path];
    let mut diags = Vec::new();
    let mut tables = Vec::new();

    let originals: Vec<TranslationRecord> = stream
        .translations()
        .filter(|t| t.role != UnitRole::Paraphrase)
        .map(|t| t.record.clone())
        .collect();
    let rates = error_rate_table(&originals, config.report.flag_pct, config.report.exclude_pct);
    let excluded = exclusions(&rates);
    for c in rates.iter().filter(|c| c.excluded) {
        diags.push(Diagnostic::new(
            format!("{}/{}", c.system_id, c.target_lang),
            format!("error rate {:.2}% exceeds {}%; excluded from rankings", c.rate, config.report.exclude_pct),
        ));
    }
    tables.push(error_rate_cells_table("error_rates", &rates));
    tables.extend(metric_tables(ctx, &stream, &excluded, &mut diags));

    if !config.report.da.is_empty() {
        let candidates = candidate_index(&stream);
        let mut vmwe_ids: BTreeMap<Category, BTreeSet<String>> = BTreeMap::new();
        for r in stream.classifications().filter(|r| r.is_positive() && ctx.categories.contains(&r.category)) {
            if let Some(c) = candidates.get(&r.candidate_ref) {
                vmwe_ids.entry(r.category).or_default().insert(c.sentence_id.clone());
            }
        }
        let control_ids: BTreeSet<String> = stream.controls().map(str::to_string).collect();
        for source in &config.report.da {
            let path = config.resolve(&source.path);
            let annotations: Vec<DaAnnotation<f64>> = read_jsonl_file(&path)?;
            inputs.push(path);
            let z = znormalize(&annotations);
            let (cells, d) = z_gap_table(&z, source.lang, &vmwe_ids, &control_ids);
            diags.extend(d.into_iter().map(|d| Diagnostic::new(format!("da_z {}", d.subject), d.message)));
            tables.push(gap_cells_table(&format!("z_gap_{}", source.lang), &cells, 1.0));
        }
    }

    if let Some(p) = &config.report.gold_labels {
        let path = config.resolve(p);
        let gold: Vec<GoldLabel> = read_jsonl_file(&path)?;
        inputs.push(path);
        let predicted: Vec<ClassificationResult> = stream
            .classifications()
            .filter(|r| ctx.categories.contains(&r.category))
            .cloned()
            .collect();
        let rows = classifier_report::<f64>(&gold, &predicted).map_err(|e| PipelineError::contract(e.to_string()))?;
        tables.push(classifier_table("classifier", &rows));
    }

    tables.push(diagnostics_table("diagnostics", &diags));

    let write = |name: &str, bytes: Vec<u8>| {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| PipelineError::io(&p, e))
    };
    write("report.json", emit_bundle(&tables))?;
    for t in &tables {
        write(&format!("{}.csv", t.name), emit(t, Format::Csv))?;
    }

    let mut out = Output::new(Vec::new(), inputs);
    out.count("tables", tables.len());
    out.count("diagnostics", diags.len());
    out.count("excluded_pairs", excluded.len());
    out.count("upstream_failures", stream.records.iter().filter(|r| matches!(r, Record::Failure(_))).count());
    let m = manifest_for(ctx, Stage::Report, &out)?;
    m.write(&Manifest::path_for(dir, Stage::Report))?;
    Ok(summary(Stage::Report, dir, &m))
}

/// Run one stage.
pub fn run_stage(stage: Stage, config: &PipelineConfig, opts: &StageOptions) -> Result<StageSummary, PipelineError> {
    let ctx = Ctx::new(config, opts)?;
    match stage {
        Stage::Extract => run_extract(&ctx),
        Stage::Classify => run_classify(&ctx),
        Stage::Paraphrase => run_paraphrase(&ctx),
        Stage::Translate => run_translate(&ctx),
        Stage::Score => run_score(&ctx),
        Stage::Report => run_report(&ctx),
    }
}

/// Every stage in order, writing `<stage>.jsonl` files and a `report/`
/// directory under `opts.stage_out`. Stops after the first stage with a
/// non-zero exit code.
pub fn run_all(config: &PipelineConfig, opts: &StageOptions) -> Result<Vec<StageSummary>, PipelineError> {
    if opts.backend.is_some() {
        return Err(PipelineError::contract("--backend applies to a single stage, not run-all"));
    }
    let dir = &opts.stage_out;
    let mut summaries = Vec::new();
    let mut previous: Option<PathBuf> = opts.stage_in.clone();
    for stage in Stage::ALL {
        let out = match stage {
            Stage::Report => dir.join("report"),
            _ => dir.join(format!("{stage}.jsonl")),
        };
        let stage_opts = StageOptions {
            stage_in: previous.clone(),
            stage_out: out.clone(),
            ..opts.clone()
        };
        log::info!("running {stage}");
        let s = run_stage(stage, config, &stage_opts)?;
        let code = s.exit_code();
        summaries.push(s);
        if code != 0 {
            break;
        }
        previous = Some(out);
    }
    Ok(summaries)
}
