//! Verbal multiword expression (VMWE) analysis for machine translation.
//!
//! The crate covers the whole corpus-to-report path:
//!
//! * [`corpus`] reads CoNLL-U and plain text into a uniform sentence model.
//! * [`lexicon`] loads idiom dictionaries and light-verb sets.
//! * [`extract`] finds verbal idiom (VID), verb-particle (VPC) and light verb
//!   (LVC) candidates, and samples VMWE-free control sentences.
//! * [`llm`] renders the classification / paraphrase prompts and parses the
//!   model's answers.
//! * [`mt`] drives translation backends and flags invalid output.
//! * [`qe`] scores translations and computes the paraphrasing deltas.
//! * [`report`] aggregates everything into gap tables, delta tables,
//!   classifier tables and system rankings.
//! * [`pipeline`] wires the stages together behind a declarative config.
//!
//! Numeric code in [`stats`], [`qe`] and [`report`] is generic over [`Real`]
//! (`f32` or `f64`); the aliases below fix the scalar to `f64`, which is what
//! the pipeline uses end to end.

pub mod backend;
pub mod corpus;
pub mod extract;
pub mod lexicon;
pub mod llm;
pub mod mt;
pub mod pipeline;
pub mod qe;
pub mod report;
pub mod scalar;
pub mod stats;

pub use scalar::Real;

pub type QeScore = qe::QeScore<f64>;
pub type DeltaReport = qe::DeltaReport<f64>;
pub type ClassMetrics = stats::ClassMetrics<f64>;
pub type DaAnnotation = stats::DaAnnotation<f64>;
pub type ZScore = stats::ZScore<f64>;
pub type GapCell = report::GapCell<f64>;
pub type Ranking = report::Ranking<f64>;
