//! Corpora, inequality campaigns, run configuration and report/file I/O.

pub mod campaign;
pub mod config;
pub mod corpus;
pub mod fieldio;
pub mod report;

pub use campaign::{
    evaluate, replay_worst_case, run_campaign, worker_pool, CampaignConfig, Evaluation, InequalityReport, Target,
    WorstCase,
};
pub use config::{ForceData, InitialData, SolveConfig};
pub use corpus::{boundary_shell_max, describe_corpus, generate_corpus, CorpusElement, CorpusField, CorpusKind};
pub use fieldio::{decode_field, encode_field, read_field, write_field};
pub use report::{emit_report, read_report, Report, ReportBody, ReportFormat, SCHEMA};
