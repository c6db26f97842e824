//! Analysis and rewriting of free-form Fortran with OpenACC directives
//! into `do concurrent` code versions.
//!
//! The crate models a source file as physical lines plus derived logical
//! lines ([`source`]), parses the OpenACC directive inventory and computes
//! the directive census ([`directive`]), recognizes and classifies
//! accelerated regions ([`analysis`]), applies the per-mode rewrite rules
//! ([`transform`]), and aggregates results into migration reports
//! ([`report`]). [`launch`] generates the MPI launch script and per-mode
//! compiler-flag recommendations used by the fully-converted versions.

pub mod analysis;
pub mod config;
pub mod directive;
pub mod error;
mod fortran;
pub mod launch;
pub mod report;
mod rewrite;
pub mod source;
pub mod transform;

pub use analysis::{
    build_regions, classify_region, detect_calls, parse_all_directives, parse_loop_nest,
    AccRegion, CallSite, LoopNest, Purity, RegionCategory, RegionPayload, SymbolTable,
};
pub use config::{MpiFlavor, ToolConfig};
pub use directive::{
    directive_census, parse_directive, parse_directive_text, CensusReport, Clause, ClauseArgs,
    Directive, DirectiveKind,
};
pub use error::{Error, ParseErrorKind, Result};
pub use launch::{generate_launch_script, recommend_flags};
pub use report::{compare_modes, version_summary, MigrationReport, OrderingCheck, VersionSummary};
pub use source::{LineKind, LogicalLine, SourceFile};
pub use transform::{
    plan_inlining, transform_file, Diagnostic, InlinePlan, Mode, Severity, TransformResult,
};
