//! Declarative pipeline configuration (TOML).
//!
//! Relative paths are resolved against the directory holding the config
//! file. Credentials are never read from the file itself: a backend names an
//! environment variable in `credential_env` and the value is looked up when
//! the backend is built.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::backend::http::{HttpChat, HttpMt, HttpQe};
use crate::backend::mock::{ChatScript, MockMt, MtScript, OverlapQe, ScriptedChat};
use crate::backend::{ChatBackend, MtBackend, QeBackend};
use crate::extract::{Category, Threshold};
use crate::lexicon::LightVerbVariant;
use crate::mt::{Lang, RepetitionRule};
use crate::qe::Orientation;

fn default_concurrency() -> usize {
    4
}

fn default_control_size() -> usize {
    2000
}

fn default_threshold() -> f64 {
    0.6
}

fn default_flag_pct() -> f64 {
    10.0
}

fn default_exclude_pct() -> f64 {
    50.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub paths: Vec<PathBuf>,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconConfig {
    #[serde(default)]
    pub idiom_paths: Vec<PathBuf>,
    /// Verb lemma list for the idiom verb filter; the shipped list if absent.
    #[serde(default)]
    pub verb_lemmas: Option<PathBuf>,
    #[serde(default = "LexiconConfig::default_light_verbs")]
    pub light_verbs: LightVerbVariant,
    #[serde(default = "default_threshold")]
    pub vid_threshold: f64,
    #[serde(default)]
    pub particle_allowlist: Option<Vec<String>>,
}

impl LexiconConfig {
    fn default_light_verbs() -> LightVerbVariant {
        LightVerbVariant::DatasetSix
    }
}

impl Default for LexiconConfig {
    fn default() -> Self {
        Self {
            idiom_paths: Vec::new(),
            verb_lemmas: None,
            light_verbs: Self::default_light_verbs(),
            vid_threshold: default_threshold(),
            particle_allowlist: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Llm,
    Mt,
    Qe,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub name: String,
    pub kind: BackendKind,
    /// What a mock stands in for: `llm`, `mt` or `qe`.
    #[serde(default)]
    pub role: Option<BackendKind>,
    /// Model id (llm), system id (mt) or metric id (qe).
    pub model: String,
    #[serde(default)]
    pub url: Option<String>,
    /// Name of the environment variable holding the API credential.
    #[serde(default)]
    pub credential_env: Option<String>,
    #[serde(default)]
    pub orientation: Option<Orientation>,
    /// Script file for mock chat / MT backends.
    #[serde(default)]
    pub script: Option<PathBuf>,
}

impl BackendConfig {
    /// The service this backend provides.
    pub fn role(&self) -> Option<BackendKind> {
        match self.kind {
            BackendKind::Mock => self.role.filter(|r| *r != BackendKind::Mock),
            kind => Some(kind),
        }
    }

    pub fn is_mock(&self) -> bool {
        self.kind == BackendKind::Mock
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagesConfig {
    #[serde(default)]
    pub classify: Option<String>,
    #[serde(default)]
    pub paraphrase: Option<String>,
    #[serde(default)]
    pub translate: Vec<String>,
    #[serde(default)]
    pub score: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DaSource {
    pub path: PathBuf,
    pub lang: Lang,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    #[serde(default = "default_flag_pct")]
    pub flag_pct: f64,
    #[serde(default = "default_exclude_pct")]
    pub exclude_pct: f64,
    #[serde(default)]
    pub gold_labels: Option<PathBuf>,
    #[serde(default)]
    pub da: Vec<DaSource>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            flag_pct: default_flag_pct(),
            exclude_pct: default_exclude_pct(),
            gold_labels: None,
            da: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    /// Number of VMWE-free control sentences to sample.
    #[serde(default = "default_control_size")]
    pub control_size: usize,
    /// Category names (`vid`, `vpc`, `lvc`); all three if absent.
    #[serde(default)]
    pub categories: Option<Vec<String>>,
    #[serde(default = "PipelineConfig::default_targets")]
    pub target_langs: Vec<Lang>,
    #[serde(default)]
    pub repetition: RepetitionRule,
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub lexicon: LexiconConfig,
    #[serde(default)]
    pub stages: StagesConfig,
    #[serde(default)]
    pub report: ReportConfig,
    #[serde(default)]
    pub backends: Vec<BackendConfig>,
    /// Directory relative paths resolve against; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    fn default_targets() -> Vec<Lang> {
        Lang::TARGETS.to_vec()
    }

    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, PipelineError> {
        let mut config: PipelineConfig =
            toml::from_str(text).map_err(|e| PipelineError::Contract(format!("config: {e}")))?;
        config.base_dir = base_dir.into();
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn category_list(&self) -> Result<Vec<Category>, PipelineError> {
        match &self.categories {
            None => Ok(Category::ALL.to_vec()),
            Some(names) => names
                .iter()
                .map(|n| n.parse::<Category>().map_err(|e| PipelineError::Contract(e.to_string())))
                .collect(),
        }
    }

    pub fn threshold(&self) -> Result<Threshold, PipelineError> {
        Threshold::new(self.lexicon.vid_threshold).map_err(|e| PipelineError::Contract(e.to_string()))
    }

    pub fn backend(&self, name: &str) -> Result<&BackendConfig, PipelineError> {
        self.backends
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| PipelineError::Contract(format!("backend {name:?} is not defined")))
    }

    fn expect_role(&self, name: &str, role: BackendKind) -> Result<&BackendConfig, PipelineError> {
        let b = self.backend(name)?;
        if b.role() != Some(role) {
            return Err(PipelineError::Contract(format!(
                "backend {name:?} is not a {} backend",
                format!("{role:?}").to_lowercase()
            )));
        }
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let contract = |m: String| Err(PipelineError::Contract(m));
        self.category_list()?;
        self.threshold()?;
        if self.concurrency == 0 {
            return contract("concurrency must be at least 1".into());
        }
        if self.target_langs.iter().any(|l| !l.is_target()) {
            return contract("target_langs may not include en".into());
        }
        if !(0.0..=100.0).contains(&self.report.flag_pct) || !(0.0..=100.0).contains(&self.report.exclude_pct) {
            return contract("report thresholds are percentages in [0, 100]".into());
        }
        let mut names = HashSet::new();
        for b in &self.backends {
            if !names.insert(b.name.as_str()) {
                return contract(format!("backend {:?} defined twice", b.name));
            }
            let Some(role) = b.role() else {
                return contract(format!("mock backend {:?} needs a role of llm, mt or qe", b.name));
            };
            if !b.is_mock() && b.url.is_none() {
                return contract(format!("backend {:?} needs a url", b.name));
            }
            if role == BackendKind::Qe && b.orientation.is_none() {
                return contract(format!("qe backend {:?} needs an orientation", b.name));
            }
        }
        if let Some(n) = &self.stages.classify {
            self.expect_role(n, BackendKind::Llm)?;
        }
        if let Some(n) = &self.stages.paraphrase {
            self.expect_role(n, BackendKind::Llm)?;
        }
        for n in &self.stages.translate {
            self.expect_role(n, BackendKind::Mt)?;
        }
        for n in &self.stages.score {
            self.expect_role(n, BackendKind::Qe)?;
        }
        let metrics: BTreeSet<&str> = self
            .stages
            .score
            .iter()
            .filter_map(|n| self.backend(n).ok())
            .map(|b| b.model.as_str())
            .collect();
        if metrics.len() != self.stages.score.len() {
            return contract("score backends must have distinct metric ids".into());
        }
        Ok(())
    }

    fn credential(&self, b: &BackendConfig) -> Result<Option<String>, PipelineError> {
        match &b.credential_env {
            None => Ok(None),
            Some(var) => std::env::var(var).map(Some).map_err(|_| {
                PipelineError::Contract(format!("environment variable {var} for backend {:?} is not set", b.name))
            }),
        }
    }

    fn read_script<T: for<'de> Deserialize<'de> + Default>(&self, b: &BackendConfig) -> Result<T, PipelineError> {
        match &b.script {
            None => Ok(T::default()),
            Some(p) => {
                let path = self.resolve(p);
                let text = fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
                serde_json::from_str(&text)
                    .map_err(|e| PipelineError::Contract(format!("{}: {e}", path.display())))
            }
        }
    }

    pub fn chat_backend(&self, name: &str) -> Result<Box<dyn ChatBackend>, PipelineError> {
        let b = self.expect_role(name, BackendKind::Llm)?;
        if b.is_mock() {
            let script: ChatScript = self.read_script(b)?;
            return Ok(Box::new(ScriptedChat::new(&b.model, script)));
        }
        let url = b.url.clone().unwrap_or_default();
        Ok(Box::new(HttpChat::new(url, &b.model, self.credential(b)?)))
    }

    pub fn mt_backend(&self, name: &str) -> Result<Box<dyn MtBackend>, PipelineError> {
        let b = self.expect_role(name, BackendKind::Mt)?;
        if b.is_mock() {
            let script: MtScript = self.read_script(b)?;
            return Ok(Box::new(MockMt::new(&b.model, script)));
        }
        let url = b.url.clone().unwrap_or_default();
        Ok(Box::new(HttpMt::new(url, &b.model, self.credential(b)?)))
    }

    pub fn qe_backend(&self, name: &str) -> Result<Box<dyn QeBackend>, PipelineError> {
        let b = self.expect_role(name, BackendKind::Qe)?;
        let orientation = b.orientation.expect("validated");
        if b.is_mock() {
            return Ok(Box::new(OverlapQe::new(&b.model, orientation)));
        }
        let url = b.url.clone().unwrap_or_default();
        Ok(Box::new(HttpQe::new(url, &b.model, orientation, self.credential(b)?)))
    }

    /// Files this config points at that `stage` reads.
    pub fn referenced_files(&self, stage: super::Stage) -> Vec<PathBuf> {
        use super::Stage;
        let mut files = Vec::new();
        let script = |name: &String, files: &mut Vec<PathBuf>| {
            if let Ok(b) = self.backend(name) {
                if let Some(p) = &b.script {
                    files.push(self.resolve(p));
                }
            }
        };
        match stage {
            Stage::Extract => {
                files.extend(self.corpus.paths.iter().map(|p| self.resolve(p)));
                files.extend(self.lexicon.idiom_paths.iter().map(|p| self.resolve(p)));
                files.extend(self.lexicon.verb_lemmas.iter().map(|p| self.resolve(p)));
            }
            Stage::Classify => self.stages.classify.iter().for_each(|n| script(n, &mut files)),
            Stage::Paraphrase => self.stages.paraphrase.iter().for_each(|n| script(n, &mut files)),
            Stage::Translate => self.stages.translate.iter().for_each(|n| script(n, &mut files)),
            Stage::Score => {}
            Stage::Report => {
                files.extend(self.report.gold_labels.iter().map(|p| self.resolve(p)));
                files.extend(self.report.da.iter().map(|d| self.resolve(&d.path)));
            }
        }
        files
    }
}
