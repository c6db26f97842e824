//! The mode-driven rewrite engine producing the six code versions.
//!
//! Mode matrix, applied region by region:
//! * `A` — identity pass-through, baseline census.
//! * `AD` — simple collapses and routine-bearing loops become DC; data
//!   management, reductions, atomics, and kernels stay OpenACC.
//! * `ADU` — AD plus data-directive stripping under unified memory, with
//!   the declare/derived-type retention exceptions.
//! * `AD2XU` — ADU plus scalar reductions via the `reduce` clause and
//!   atomic-bearing loops as DC with the atomic retained; derived-type
//!   enter/exit data now removed as well.
//! * `D2XU` — everything: array reductions via loop interchange, kernels
//!   expansion, routine directives traded for an inline plan, async/wait
//!   dropped, device selection moved to the launch script.
//! * `D2XAd` — the D2XU rewrites with every data-management directive kept.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    build_regions, parse_all_directives, AccRegion, CallSite, Purity, RegionCategory,
    RegionPayload, SymbolTable,
};
use crate::config::ToolConfig;
use crate::directive::{census_of_logical, CensusReport, Directive, DirectiveKind};
use crate::error::{Error, Result};
use crate::rewrite::{
    conv_collapse, conv_interchange, conv_kernels, region_clause_names, scalar_atomic_reduces,
    AtomicAction, CollapseSpec, ConvOut, Edit, Edits, DATA_CLAUSES, GUARD_CLAUSES, PERF_CLAUSES,
};
use crate::source::{LogicalLine, SourceFile};

/// The six code versions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "A")]
    A,
    #[serde(rename = "AD")]
    Ad,
    #[serde(rename = "ADU")]
    Adu,
    #[serde(rename = "AD2XU")]
    Ad2xu,
    #[serde(rename = "D2XU")]
    D2xu,
    #[serde(rename = "D2XAd")]
    D2xad,
}

impl Mode {
    pub const ALL: [Mode; 6] = [Mode::A, Mode::Ad, Mode::Adu, Mode::Ad2xu, Mode::D2xu, Mode::D2xad];

    pub fn label(self) -> &'static str {
        match self {
            Mode::A => "A",
            Mode::Ad => "AD",
            Mode::Adu => "ADU",
            Mode::Ad2xu => "AD2XU",
            Mode::D2xu => "D2XU",
            Mode::D2xad => "D2XAd",
        }
    }

    /// Modes that strip data-management directives (unified memory).
    fn strips_data(self) -> bool {
        matches!(self, Mode::Adu | Mode::Ad2xu | Mode::D2xu)
    }

    /// Modes where every remaining loop construct must be DC.
    fn full_dc(self) -> bool {
        matches!(self, Mode::D2xu | Mode::D2xad)
    }

    /// Modes allowed to use the Fortran 202X `reduce` clause.
    fn uses_reduce(self) -> bool {
        matches!(self, Mode::Ad2xu | Mode::D2xu | Mode::D2xad)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Mode::A),
            "ad" => Ok(Mode::Ad),
            "adu" => Ok(Mode::Adu),
            "ad2xu" => Ok(Mode::Ad2xu),
            "d2xu" => Ok(Mode::D2xu),
            "d2xad" => Ok(Mode::D2xad),
            other => Err(Error::Config(format!(
                "unknown mode `{other}` (expected one of A, AD, ADU, AD2XU, D2XU, D2XAd)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Warning,
    ActionRequired,
}

/// Stable diagnostic codes; reports group by these.
pub mod codes {
    pub const COLLAPSE_TO_DC: &str = "collapse-to-dc";
    pub const SCALAR_REDUCE_TO_DC: &str = "scalar-reduce-to-dc";
    pub const ARRAY_REDUCE_ATOMIC_DC: &str = "array-reduce-atomic-dc";
    pub const ARRAY_REDUCE_INTERCHANGE: &str = "array-reduce-interchange";
    pub const ATOMIC_SCALAR_TO_REDUCE: &str = "atomic-scalar-to-reduce";
    pub const KERNELS_EXPANDED: &str = "kernels-expanded";
    pub const KERNELS_KEPT: &str = "kernels-kept-openacc";
    pub const KERNELS_MANUAL: &str = "kernels-manual";
    pub const REDUCTION_KEPT: &str = "reduction-kept-openacc";
    pub const ARRAY_REDUCTION_KEPT: &str = "array-reduction-kept-openacc";
    pub const ATOMIC_KEPT: &str = "atomic-kept-openacc";
    pub const ATOMIC_MANUAL: &str = "atomic-manual";
    pub const ORPHAN_ATOMIC: &str = "orphan-atomic";
    pub const ROUTINE_KEPT: &str = "routine-directives-kept";
    pub const ROUTINE_REMOVED: &str = "routine-removed-for-inlining";
    pub const ROUTINE_INLINE: &str = "routine-calls-inlined";
    pub const IMPURE_CALL: &str = "impure-call";
    pub const UNKNOWN_PURITY: &str = "unknown-purity";
    pub const ASYNC_KEPT: &str = "async-kept-openacc";
    pub const ASYNC_DROPPED: &str = "async-dropped";
    pub const WAIT_DROPPED: &str = "wait-dropped";
    pub const SET_DEVICE_REMOVED: &str = "set-device-num-removed";
    pub const DATA_REMOVED: &str = "data-directive-removed";
    pub const DATA_KEPT_DERIVED_TYPE: &str = "data-directive-kept-derived-type";
    pub const DECLARE_KEPT: &str = "declare-kept";
    pub const DECLARE_REMOVED: &str = "declare-removed";
    pub const UPDATE_KEPT_DECLARE: &str = "update-kept-declare";
    pub const DATA_CLAUSE_SUBSUMED: &str = "data-clause-subsumed-by-um";
    pub const CLAUSE_BLOCKS_CONVERSION: &str = "clause-blocks-conversion";
    pub const PRIVATE_DROPPED: &str = "private-clause-dropped";
    pub const LOOP_CLAUSE_DROPPED: &str = "loop-clause-dropped";
    pub const INNER_LOOP_DIRECTIVE_DROPPED: &str = "inner-loop-directive-dropped";
    pub const KERNEL_FISSION: &str = "kernel-fission";
    pub const FUSED_GROUP_KEPT: &str = "fused-group-kept";
    pub const UNSUPPORTED_REGION: &str = "unsupported-region";
    pub const UNKNOWN_CLAUSE: &str = "unknown-clause";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    /// 1-based physical line.
    pub line: usize,
    pub mode: Mode,
}

impl Diagnostic {
    fn new(severity: Severity, code: &str, message: impl Into<String>, line0: usize, mode: Mode) -> Self {
        Diagnostic {
            severity,
            code: code.to_string(),
            message: message.into(),
            line: line0 + 1,
            mode,
        }
    }
}

/// Inline-flag plan for pure callees inside converted DC loops.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InlinePlan {
    pub callees: Vec<String>,
    pub reshape: bool,
}

impl InlinePlan {
    /// Compiler-flag fragment, empty when there is nothing to inline.
    pub fn flag_fragment(&self) -> String {
        if self.callees.is_empty() {
            return String::new();
        }
        let mut s = String::from("-Minline=");
        if self.reshape {
            s.push_str("reshape,");
        }
        s.push_str("name:");
        s.push_str(&self.callees.join(","));
        s
    }

    pub fn merge(&mut self, other: &InlinePlan) {
        for c in &other.callees {
            if !self.callees.contains(c) {
                self.callees.push(c.clone());
            }
        }
        self.reshape |= other.reshape;
    }
}

/// Build the inline plan from resolved call sites: pure callees enter the
/// flag fragment, unknown-purity callees are returned for diagnostics.
pub fn plan_inlining(calls: &[CallSite], config: &ToolConfig) -> (InlinePlan, Vec<String>) {
    let mut plan = InlinePlan::default();
    let mut unknown = Vec::new();
    for c in calls {
        match c.declared_pure {
            Purity::Pure => {
                if !plan.callees.contains(&c.callee) {
                    plan.callees.push(c.callee.clone());
                    plan.reshape |= config.needs_reshape(&c.callee);
                }
            }
            Purity::Unknown => {
                if !unknown.contains(&c.callee) {
                    unknown.push(c.callee.clone());
                }
            }
            Purity::NotPure => {}
        }
    }
    (plan, unknown)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformResult {
    pub output: SourceFile,
    pub diagnostics: Vec<Diagnostic>,
    pub counts_before: CensusReport,
    pub counts_after: CensusReport,
    pub inline_plan: InlinePlan,
}

impl TransformResult {
    pub fn action_required(&self) -> usize {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::ActionRequired)
            .count()
    }
}

#[derive(Debug, Default)]
struct RegionOutcome {
    edits: Edits,
    diags: Vec<Diagnostic>,
    callees: Vec<CallSite>,
    converted: bool,
}

impl RegionOutcome {
    fn unchanged(diags: Vec<Diagnostic>) -> Self {
        RegionOutcome {
            diags,
            ..Default::default()
        }
    }
}

/// Apply the mode's rewrite rules to one file.
pub fn transform_file(src: &SourceFile, mode: Mode, config: &ToolConfig) -> Result<TransformResult> {
    let logical = src.logical_lines()?;
    let counts_before = census_of_logical(&logical)?;

    if mode == Mode::A {
        return Ok(TransformResult {
            output: src.clone(),
            diagnostics: Vec::new(),
            counts_before: counts_before.clone(),
            counts_after: counts_before,
            inline_plan: InlinePlan::default(),
        });
    }

    let directives = parse_all_directives(&logical)?;
    let symbols = SymbolTable::build(&logical, config);
    let regions = build_regions(&logical, &directives, &symbols, config)?;

    let lines = src.physical_lines();
    let mut outcomes: Vec<RegionOutcome> = regions
        .iter()
        .map(|r| plan_region(&logical, lines, r, mode, config, &symbols))
        .collect();

    demote_incomplete_fused_groups(&regions, &mut outcomes, mode);

    let mut edits: Edits = BTreeMap::new();
    let mut diags: Vec<Diagnostic> = Vec::new();
    let mut call_sites: Vec<CallSite> = Vec::new();
    for outcome in outcomes {
        for (idx, edit) in outcome.edits {
            edits.entry(idx).or_insert(edit);
        }
        diags.extend(outcome.diags);
        call_sites.extend(outcome.callees);
    }

    let owned: BTreeSet<usize> = regions.iter().flat_map(|r| r.owned_lines()).collect();
    strip_standalone(&logical, &directives, &owned, mode, config, &mut edits, &mut diags);

    for (&idx, d) in &directives {
        for name in d.unrecognized_clauses() {
            diags.push(Diagnostic::new(
                Severity::Warning,
                codes::UNKNOWN_CLAUSE,
                format!("unrecognized clause `{name}` on `!$acc` directive"),
                logical[idx].first_physical_index,
                mode,
            ));
        }
    }

    let mut out_lines: Vec<String> = Vec::with_capacity(lines.len());
    for (idx, ll) in logical.iter().enumerate() {
        match edits.get(&idx) {
            None => out_lines
                .extend(lines[ll.first_physical_index..ll.first_physical_index + ll.span].iter().cloned()),
            Some(Edit::Remove) => {}
            Some(Edit::Replace(v)) => out_lines.extend(v.iter().cloned()),
        }
    }
    let output = SourceFile::from_lines(src.path().to_string(), out_lines);
    let counts_after = crate::directive::directive_census(&output)?;

    let inline_plan = if mode.full_dc() {
        plan_inlining(&call_sites, config).0
    } else {
        InlinePlan::default()
    };

    diags.sort_by(|a, b| {
        (a.line, a.severity, a.code.as_str(), a.message.as_str())
            .cmp(&(b.line, b.severity, b.code.as_str(), b.message.as_str()))
    });

    Ok(TransformResult {
        output,
        diagnostics: diags,
        counts_before,
        counts_after,
        inline_plan,
    })
}

/// A conversion bound to a fused sibling group only fires when every member
/// of the group converts; otherwise the shared parallel pair must survive.
fn demote_incomplete_fused_groups(regions: &[AccRegion], outcomes: &mut [RegionOutcome], mode: Mode) {
    let mut blocked_groups: BTreeSet<usize> = BTreeSet::new();
    for (r, o) in regions.iter().zip(outcomes.iter()) {
        if let Some(g) = r.fused_group {
            if !o.converted {
                blocked_groups.insert(g);
            }
        }
    }
    for (r, o) in regions.iter().zip(outcomes.iter_mut()) {
        if let Some(g) = r.fused_group {
            if blocked_groups.contains(&g) && o.converted {
                *o = RegionOutcome::unchanged(vec![Diagnostic::new(
                    Severity::Info,
                    codes::FUSED_GROUP_KEPT,
                    "loop kept as OpenACC: a sibling in the same parallel region cannot convert",
                    r.start_line,
                    mode,
                )]);
            }
        }
    }
}

fn plan_region(
    logical: &[LogicalLine],
    lines: &[String],
    region: &AccRegion,
    mode: Mode,
    config: &ToolConfig,
    symbols: &SymbolTable,
) -> RegionOutcome {
    let line0 = region.start_line;
    let info = |code: &str, msg: String| Diagnostic::new(Severity::Info, code, msg, line0, mode);
    let warn = |code: &str, msg: String| Diagnostic::new(Severity::Warning, code, msg, line0, mode);
    let action = |code: &str, msg: String| {
        Diagnostic::new(Severity::ActionRequired, code, msg, line0, mode)
    };

    match region.category {
        RegionCategory::AlreadyDC => RegionOutcome::default(),
        RegionCategory::Unsupported => RegionOutcome::unchanged(vec![action(
            codes::UNSUPPORTED_REGION,
            format!(
                "manual intervention required: {}",
                region.unsupported_reason.as_deref().unwrap_or("unsupported region")
            ),
        )]),
        RegionCategory::KernelsLoops
        | RegionCategory::KernelsArraySyntax
        | RegionCategory::KernelsIntrinsic => {
            if !mode.full_dc() {
                return RegionOutcome::unchanged(vec![info(
                    codes::KERNELS_KEPT,
                    "kernels region retained as OpenACC".into(),
                )]);
            }
            match conv_kernels(logical, lines, region, symbols, config) {
                Ok(out) => {
                    let mut diags = vec![info(
                        codes::KERNELS_EXPANDED,
                        "kernels region expanded into explicit do-concurrent loops".into(),
                    )];
                    if region.features.has_async {
                        diags.push(warn(
                            codes::ASYNC_DROPPED,
                            "async clause dropped: do concurrent has no asynchronous launches".into(),
                        ));
                    }
                    RegionOutcome {
                        edits: out.edits,
                        diags,
                        callees: Vec::new(),
                        converted: true,
                    }
                }
                Err(reason) => RegionOutcome::unchanged(vec![action(
                    codes::KERNELS_MANUAL,
                    format!("manual intervention required: {reason}"),
                )]),
            }
        }
        _ => plan_loop_region(logical, lines, region, mode, symbols),
    }
}

fn plan_loop_region(
    logical: &[LogicalLine],
    lines: &[String],
    region: &AccRegion,
    mode: Mode,
    symbols: &SymbolTable,
) -> RegionOutcome {
    let line0 = region.start_line;
    let info = |code: &str, msg: String| Diagnostic::new(Severity::Info, code, msg, line0, mode);
    let warn = |code: &str, msg: String| Diagnostic::new(Severity::Warning, code, msg, line0, mode);
    let action = |code: &str, msg: String| {
        Diagnostic::new(Severity::ActionRequired, code, msg, line0, mode)
    };
    let nest = match &region.payload {
        RegionPayload::Loops(n) => n,
        RegionPayload::Block(_) => {
            return RegionOutcome::unchanged(vec![action(
                codes::UNSUPPORTED_REGION,
                "manual intervention required: loop directive without an analyzable nest".into(),
            )]);
        }
    };

    // Purity gates.
    let impure: Vec<&str> = region
        .features
        .calls
        .iter()
        .filter(|c| c.declared_pure == Purity::NotPure)
        .map(|c| c.callee.as_str())
        .collect();
    if !impure.is_empty() {
        let msg = format!(
            "calls to non-pure routines ({}) prevent do-concurrent conversion",
            impure.join(", ")
        );
        return RegionOutcome::unchanged(vec![if mode.full_dc() {
            action(codes::IMPURE_CALL, msg)
        } else {
            info(codes::IMPURE_CALL, msg)
        }]);
    }
    let unknown: Vec<&str> = region
        .features
        .calls
        .iter()
        .filter(|c| c.declared_pure == Purity::Unknown)
        .map(|c| c.callee.as_str())
        .collect();
    if !unknown.is_empty() && mode.full_dc() {
        return RegionOutcome::unchanged(vec![action(
            codes::UNKNOWN_PURITY,
            format!(
                "purity of {} is unknown; declare them pure or whitelist them to allow conversion",
                unknown.join(", ")
            ),
        )]);
    }

    // Clause gates.
    let clause_names = region_clause_names(region);
    let guard: Vec<&String> = clause_names
        .iter()
        .filter(|n| GUARD_CLAUSES.contains(&n.as_str()))
        .collect();
    if !guard.is_empty() {
        let msg = format!(
            "clause(s) {} have no do-concurrent equivalent; region kept as OpenACC",
            guard.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
        );
        return RegionOutcome::unchanged(vec![if mode.full_dc() {
            action(codes::CLAUSE_BLOCKS_CONVERSION, msg)
        } else {
            info(codes::CLAUSE_BLOCKS_CONVERSION, msg)
        }]);
    }
    let data_clauses: Vec<&String> = clause_names
        .iter()
        .filter(|n| DATA_CLAUSES.contains(&n.as_str()))
        .collect();
    if !data_clauses.is_empty() && !mode.strips_data() {
        // Without unified memory the data movement expressed by these
        // clauses cannot be dropped.
        let msg = format!(
            "data clause(s) {} on the compute construct require manual data directives",
            data_clauses.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
        );
        return RegionOutcome::unchanged(vec![if mode.full_dc() {
            action(codes::CLAUSE_BLOCKS_CONVERSION, msg)
        } else {
            info(codes::CLAUSE_BLOCKS_CONVERSION, msg)
        }]);
    }

    // Async gate: the clause survives only while the region stays OpenACC.
    if region.features.has_async && !mode.full_dc() {
        return RegionOutcome::unchanged(vec![info(
            codes::ASYNC_KEPT,
            "region with async/wait clause retained as OpenACC".into(),
        )]);
    }

    let conversion: Option<(ConvOut, Vec<Diagnostic>)> = match region.category {
        RegionCategory::SimpleCollapse | RegionCategory::RoutineBearingLoop => {
            let out = conv_collapse(
                logical,
                lines,
                &CollapseSpec {
                    region,
                    nest,
                    n: region.collapse_count(),
                    reduces: Vec::new(),
                    atomic_action: AtomicAction::Keep,
                },
            );
            Some((out, vec![info(codes::COLLAPSE_TO_DC, "loop nest converted to do concurrent".into())]))
        }
        RegionCategory::ScalarReduction => {
            if !mode.uses_reduce() {
                return RegionOutcome::unchanged(vec![info(
                    codes::REDUCTION_KEPT,
                    "reduction loop retained as OpenACC".into(),
                )]);
            }
            let out = conv_collapse(
                logical,
                lines,
                &CollapseSpec {
                    region,
                    nest,
                    n: region.collapse_count(),
                    reduces: region.reductions(),
                    atomic_action: AtomicAction::Keep,
                },
            );
            Some((
                out,
                vec![info(
                    codes::SCALAR_REDUCE_TO_DC,
                    "reduction loop converted to do concurrent with a reduce clause".into(),
                )],
            ))
        }
        RegionCategory::ArrayReductionAtomic => {
            if !mode.uses_reduce() {
                return RegionOutcome::unchanged(vec![info(
                    codes::ARRAY_REDUCTION_KEPT,
                    "array reduction retained as OpenACC".into(),
                )]);
            }
            if mode == Mode::Ad2xu {
                let out = conv_collapse(
                    logical,
                    lines,
                    &CollapseSpec {
                        region,
                        nest,
                        n: region.collapse_count(),
                        reduces: region.reductions(),
                        atomic_action: AtomicAction::Keep,
                    },
                );
                Some((
                    out,
                    vec![info(
                        codes::ARRAY_REDUCE_ATOMIC_DC,
                        "array reduction converted to do concurrent with the atomic retained".into(),
                    )],
                ))
            } else {
                match conv_interchange(logical, region, nest, symbols) {
                    Ok(out) => Some((
                        out,
                        vec![info(
                            codes::ARRAY_REDUCE_INTERCHANGE,
                            "array reduction restructured: outer do concurrent over the target \
                             indices, inner reduce loop replaces the atomic"
                                .into(),
                        )],
                    )),
                    Err(reason) => {
                        // Fall back to the atomic-retaining form and flag it.
                        let out = conv_collapse(
                            logical,
                            lines,
                            &CollapseSpec {
                                region,
                                nest,
                                n: region.collapse_count(),
                                reduces: region.reductions(),
                                atomic_action: AtomicAction::Keep,
                            },
                        );
                        Some((
                            out,
                            vec![action(
                                codes::ATOMIC_MANUAL,
                                format!("atomic retained inside do concurrent; {reason}"),
                            )],
                        ))
                    }
                }
            }
        }
        RegionCategory::AtomicNonReduction => {
            if !mode.uses_reduce() {
                return RegionOutcome::unchanged(vec![info(
                    codes::ATOMIC_KEPT,
                    "atomic-bearing loop retained as OpenACC".into(),
                )]);
            }
            let all_update = region
                .features
                .atomics
                .iter()
                .all(|a| a.kind == crate::directive::AtomicKind::Update);
            if !all_update {
                let msg = "atomic read/write/capture cannot be carried into do concurrent".to_string();
                return RegionOutcome::unchanged(vec![if mode.full_dc() {
                    action(codes::ATOMIC_MANUAL, msg)
                } else {
                    info(codes::ATOMIC_KEPT, msg)
                }]);
            }
            if mode == Mode::Ad2xu {
                let out = conv_collapse(
                    logical,
                    lines,
                    &CollapseSpec {
                        region,
                        nest,
                        n: region.collapse_count(),
                        reduces: region.reductions(),
                        atomic_action: AtomicAction::Keep,
                    },
                );
                Some((
                    out,
                    vec![info(
                        codes::ARRAY_REDUCE_ATOMIC_DC,
                        "atomic-bearing loop converted to do concurrent with the atomic retained".into(),
                    )],
                ))
            } else {
                match scalar_atomic_reduces(region) {
                    Ok(reduces) => {
                        let out = conv_collapse(
                            logical,
                            lines,
                            &CollapseSpec {
                                region,
                                nest,
                                n: region.collapse_count(),
                                reduces,
                                atomic_action: AtomicAction::Remove,
                            },
                        );
                        Some((
                            out,
                            vec![info(
                                codes::ATOMIC_SCALAR_TO_REDUCE,
                                "scalar atomic accumulation converted to a reduce clause".into(),
                            )],
                        ))
                    }
                    Err(reason) => {
                        let out = conv_collapse(
                            logical,
                            lines,
                            &CollapseSpec {
                                region,
                                nest,
                                n: region.collapse_count(),
                                reduces: region.reductions(),
                                atomic_action: AtomicAction::Keep,
                            },
                        );
                        Some((
                            out,
                            vec![action(
                                codes::ATOMIC_MANUAL,
                                format!("atomic retained inside do concurrent; {reason}"),
                            )],
                        ))
                    }
                }
            }
        }
        _ => unreachable!("non-loop categories handled by the caller"),
    };

    let Some((out, mut diags)) = conversion else {
        return RegionOutcome::default();
    };

    // Companion diagnostics for the conversion.
    if region.features.has_async && mode.full_dc() {
        diags.push(warn(
            codes::ASYNC_DROPPED,
            "async clause dropped: do concurrent has no asynchronous launches".into(),
        ));
    }
    if clause_names.iter().any(|n| n == "private" || n == "firstprivate") {
        diags.push(info(
            codes::PRIVATE_DROPPED,
            "private clause dropped: scalars assigned before use localize automatically".into(),
        ));
    }
    for n in clause_names.iter().filter(|n| PERF_CLAUSES.contains(&n.as_str())) {
        diags.push(warn(
            codes::LOOP_CLAUSE_DROPPED,
            format!("`{n}` clause dropped: do concurrent has no equivalent"),
        ));
    }
    if !data_clauses.is_empty() {
        diags.push(info(
            codes::DATA_CLAUSE_SUBSUMED,
            "data clauses on the compute construct dropped: unified memory pages the data".into(),
        ));
    }
    for &idx in &out.removed_inner_loop_dirs {
        diags.push(Diagnostic::new(
            Severity::Warning,
            codes::INNER_LOOP_DIRECTIVE_DROPPED,
            "inner `!$acc loop` directive dropped inside the converted loop",
            logical[idx].first_physical_index,
            mode,
        ));
    }
    if region.fused_group.is_some() {
        diags.push(info(
            codes::KERNEL_FISSION,
            "fused sibling loops now compile to separate kernels (possible launch overhead)".into(),
        ));
    }
    let mut callees = Vec::new();
    if !region.features.calls.is_empty() {
        if mode.full_dc() {
            callees = region.features.calls.clone();
            diags.push(info(
                codes::ROUTINE_INLINE,
                format!(
                    "calls inside the converted loop ({}) rely on compiler inlining; see the inline plan",
                    region.features.calls.iter().map(|c| c.callee.as_str()).collect::<Vec<_>>().join(", ")
                ),
            ));
        } else {
            diags.push(info(
                codes::ROUTINE_KEPT,
                "converted loop calls routines; their `!$acc routine` directives are retained".into(),
            ));
        }
    }

    RegionOutcome {
        edits: out.edits,
        diags,
        callees,
        converted: true,
    }
}

fn strip_standalone(
    logical: &[LogicalLine],
    directives: &BTreeMap<usize, Directive>,
    owned: &BTreeSet<usize>,
    mode: Mode,
    config: &ToolConfig,
    edits: &mut Edits,
    diags: &mut Vec<Diagnostic>,
) {
    // Names declared on `declare` directives; their `update`s stay with them.
    let declare_names: BTreeSet<String> = directives
        .values()
        .filter(|d| d.kind == DirectiveKind::Declare)
        .flat_map(|d| d.data_clause_vars())
        .collect();

    for (&idx, d) in directives {
        if owned.contains(&idx) {
            continue;
        }
        let line0 = logical[idx].first_physical_index;
        let remove = |code: &str, sev: Severity, msg: String, edits: &mut Edits, diags: &mut Vec<Diagnostic>| {
            edits.insert(idx, Edit::Remove);
            diags.push(Diagnostic::new(sev, code, msg, line0, mode));
        };
        match d.kind {
            DirectiveKind::Routine if mode.full_dc() => remove(
                codes::ROUTINE_REMOVED,
                Severity::Info,
                "routine directive removed; device callees handled via the inline plan".into(),
                edits,
                diags,
            ),
            DirectiveKind::Wait if mode.full_dc() => remove(
                codes::WAIT_DROPPED,
                Severity::Warning,
                "wait directive dropped: do concurrent has no asynchronous launches".into(),
                edits,
                diags,
            ),
            DirectiveKind::SetDeviceNum if mode.full_dc() => remove(
                codes::SET_DEVICE_REMOVED,
                Severity::Info,
                "set device_num removed: device selection moves to the generated launch script".into(),
                edits,
                diags,
            ),
            DirectiveKind::Atomic if mode.full_dc() => {
                diags.push(Diagnostic::new(
                    Severity::ActionRequired,
                    codes::ORPHAN_ATOMIC,
                    "atomic directive outside a convertible region requires manual code modification",
                    line0,
                    mode,
                ));
            }
            DirectiveKind::EnterData | DirectiveKind::ExitData if mode.strips_data() => {
                let vars = d.data_clause_vars();
                let derived: Vec<&String> =
                    vars.iter().filter(|v| config.is_derived_type(v)).collect();
                if !derived.is_empty() && mode == Mode::Adu {
                    diags.push(Diagnostic::new(
                        Severity::Info,
                        codes::DATA_KEPT_DERIVED_TYPE,
                        format!(
                            "enter/exit data kept: derived-type instance(s) {} are not paged by unified memory",
                            derived.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
                        ),
                        line0,
                        mode,
                    ));
                } else {
                    remove(
                        codes::DATA_REMOVED,
                        Severity::Info,
                        "data directive removed: unified memory pages the data".into(),
                        edits,
                        diags,
                    );
                }
            }
            DirectiveKind::Update if mode.strips_data() => {
                let tied = d.data_clause_vars().iter().any(|v| declare_names.contains(v));
                if tied && matches!(mode, Mode::Adu | Mode::Ad2xu) {
                    diags.push(Diagnostic::new(
                        Severity::Info,
                        codes::UPDATE_KEPT_DECLARE,
                        "update kept: it refreshes data owned by a retained declare directive",
                        line0,
                        mode,
                    ));
                } else {
                    remove(
                        codes::DATA_REMOVED,
                        Severity::Info,
                        "update directive removed: unified memory pages the data".into(),
                        edits,
                        diags,
                    );
                }
            }
            DirectiveKind::HostData | DirectiveKind::EndHostData if mode.strips_data() => remove(
                codes::DATA_REMOVED,
                Severity::Info,
                "host_data directive removed: unified memory exposes device pointers".into(),
                edits,
                diags,
            ),
            DirectiveKind::Declare if mode.strips_data() => {
                if matches!(mode, Mode::Adu | Mode::Ad2xu) {
                    diags.push(Diagnostic::new(
                        Severity::Info,
                        codes::DECLARE_KEPT,
                        "declare kept: module data referenced inside device routines",
                        line0,
                        mode,
                    ));
                } else {
                    remove(
                        codes::DECLARE_REMOVED,
                        Severity::Info,
                        "declare removed: inlining eliminates the device routine that needed it".into(),
                        edits,
                        diags,
                    );
                }
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::SourceFile;

    const TRIPLE: &str = "\
!$acc parallel default(present)
!$acc loop collapse(3)
do k=1,n3
  do j=1,n2
    do i=1,n1
      a(i,j,k)=b(i,j,k)+c(i,j,k)
    enddo
  enddo
enddo
!$acc end parallel
";

    const TRIPLE_DC: &str = "\
do concurrent (k=1:n3,j=1:n2,i=1:n1)
  a(i,j,k)=b(i,j,k)+c(i,j,k)
enddo
";

    const ARRAY_REDUCTION: &str = "\
!$acc parallel default(present)
!$acc loop collapse(2)
do j=1,n2
  do i=1,n1
!$acc atomic update
    sum0(i)=sum0(i)+array(i,j)*b(j)
  enddo
enddo
!$acc end parallel
";

    const ARRAY_REDUCTION_DC_ATOMIC: &str = "\
do concurrent (j=1:n2,i=1:n1)
!$acc atomic update
  sum0(i)=sum0(i)+array(i,j)*b(j)
enddo
";

    const ARRAY_REDUCTION_INTERCHANGED: &str = "\
do concurrent (i=1:n1)
  tmp=0.
  do concurrent (j=1:n2) reduce(+:tmp)
    tmp=tmp+array(i,j)*b(j)
  enddo
  sum0(i)=tmp
enddo
";

    fn shapes() -> ToolConfig {
        ToolConfig::parse(
            "array_shape.a = n1, n2, n3\narray_shape.b = n1, n2, n3\narray_shape.c = n1, n2, n3\narray_shape.array = n1, n2\narray_shape.sum0 = n1\narray_shape.q = n1\n",
        )
        .unwrap()
    }

    fn run(text: &str, mode: Mode, config: &ToolConfig) -> TransformResult {
        let src = SourceFile::from_text("t.f90", text);
        transform_file(&src, mode, config).unwrap()
    }

    #[test]
    fn mode_a_is_identity() {
        let cfg = shapes();
        for text in [TRIPLE, ARRAY_REDUCTION] {
            let r = run(text, Mode::A, &cfg);
            assert_eq!(r.output.emit(), text);
            assert!(r.diagnostics.is_empty());
            assert_eq!(r.counts_before, r.counts_after);
        }
    }

    #[test]
    fn triple_nest_becomes_dc_in_ad() {
        let cfg = ToolConfig::parse("array_shape.b = n1,n2,n3\narray_shape.c = n1,n2,n3\n").unwrap();
        let r = run(TRIPLE, Mode::Ad, &cfg);
        assert_eq!(r.output.emit(), TRIPLE_DC);
        assert_eq!(r.counts_after.total, 0);
    }

    #[test]
    fn array_reduction_unchanged_in_ad_with_info() {
        let r = run(ARRAY_REDUCTION, Mode::Ad, &shapes());
        assert_eq!(r.output.emit(), ARRAY_REDUCTION);
        assert!(r
            .diagnostics
            .iter()
            .any(|d| d.code == codes::ARRAY_REDUCTION_KEPT && d.severity == Severity::Info));
        assert_eq!(r.action_required(), 0);
    }

    #[test]
    fn array_reduction_keeps_atomic_in_ad2xu() {
        let r = run(ARRAY_REDUCTION, Mode::Ad2xu, &shapes());
        assert_eq!(r.output.emit(), ARRAY_REDUCTION_DC_ATOMIC);
        assert_eq!(r.counts_after.atomic, 1);
        assert_eq!(r.counts_after.total, 1);
    }

    #[test]
    fn array_reduction_interchanges_in_d2xu() {
        let r = run(ARRAY_REDUCTION, Mode::D2xu, &shapes());
        assert_eq!(r.output.emit(), ARRAY_REDUCTION_INTERCHANGED);
        assert_eq!(r.counts_after.total, 0);
        assert_eq!(r.action_required(), 0);
    }

    #[test]
    fn tmp_name_avoids_collision() {
        let text = ARRAY_REDUCTION.replace("b(j)", "tmp");
        let r = run(&text, Mode::D2xu, &shapes());
        let emitted = r.output.emit();
        assert!(emitted.contains("tmp0=0."), "{emitted}");
        assert!(emitted.contains("reduce(+:tmp0)"), "{emitted}");
    }

    /// Triplet-notation oracle: enumerate `do i=lo,hi,st` and compare with
    /// the values described by the emitted `lo:hi:st` triplet.
    #[test]
    fn strided_loop_keeps_triplet_semantics() {
        let text = "!$acc parallel loop\ndo i=1,9,2\n  q(i)=0.\nenddo\n";
        let r = run(text, Mode::Ad, &shapes());
        let emitted = r.output.emit();
        assert!(emitted.contains("do concurrent (i=1:9:2)"), "{emitted}");

        fn enumerate(lo: i64, hi: i64, st: i64) -> Vec<i64> {
            let mut v = Vec::new();
            let mut x = lo;
            while (st > 0 && x <= hi) || (st < 0 && x >= hi) {
                v.push(x);
                x += st;
            }
            v
        }
        fn triplet_values(spec: &str) -> Vec<i64> {
            let parts: Vec<i64> = spec.split(':').map(|p| p.parse().unwrap()).collect();
            enumerate(parts[0], parts[1], *parts.get(2).unwrap_or(&1))
        }
        assert_eq!(enumerate(1, 9, 2), triplet_values("1:9:2"));
    }

    #[test]
    fn single_loop_without_collapse() {
        let text = "!$acc parallel loop\ndo i=1,n1\n  q(i)=0.\nenddo\n";
        let r = run(text, Mode::Ad, &shapes());
        assert_eq!(r.output.emit(), "do concurrent (i=1:n1)\n  q(i)=0.\nenddo\n");
    }

    #[test]
    fn scalar_reduction_modes() {
        let text = "!$acc parallel loop reduction(+:s)\ndo i=1,n1\n  s = s + q(i)\nenddo\n";
        let cfg = shapes();
        let r = run(text, Mode::Ad, &cfg);
        assert_eq!(r.output.emit(), text);
        assert!(r.diagnostics.iter().any(|d| d.code == codes::REDUCTION_KEPT));

        let r = run(text, Mode::Ad2xu, &cfg);
        assert_eq!(
            r.output.emit(),
            "do concurrent (i=1:n1) reduce(+:s)\n  s = s + q(i)\nenddo\n"
        );

        let text = "!$acc parallel loop reduction(max:m)\ndo i=1,n1\n  m = max(m, q(i))\nenddo\n";
        let r = run(text, Mode::D2xu, &cfg);
        assert!(r.output.emit().contains("reduce(max:m)"));
    }

    #[test]
    fn scalar_atomic_becomes_reduce_in_d2xu() {
        let text = "\
!$acc parallel loop
do i=1,n1
!$acc atomic update
  s=s+q(i)
enddo
";
        let cfg = shapes();
        let r = run(text, Mode::Ad2xu, &cfg);
        assert_eq!(
            r.output.emit(),
            "do concurrent (i=1:n1)\n!$acc atomic update\n  s=s+q(i)\nenddo\n"
        );
        let r = run(text, Mode::D2xu, &cfg);
        assert_eq!(r.output.emit(), "do concurrent (i=1:n1) reduce(+:s)\n  s=s+q(i)\nenddo\n");
        assert_eq!(r.action_required(), 0);
    }

    #[test]
    fn computed_index_atomic_needs_manual_work_in_d2xu() {
        let text = "\
!$acc parallel loop
do i=1,n1
!$acc atomic update
  cnt(bin(i))=cnt(bin(i))+1
enddo
";
        let cfg = ToolConfig::parse("array_shape.cnt = m\narray_shape.bin = n1\n").unwrap();
        let r = run(text, Mode::D2xu, &cfg);
        assert!(r.diagnostics.iter().any(|d| d.code == codes::ATOMIC_MANUAL));
        assert_eq!(r.counts_after.atomic, 1);
        assert!(r.action_required() > 0);
    }

    #[test]
    fn kernels_minval_expansion() {
        let text = "!$acc kernels\ns = MINVAL(a)\n!$acc end kernels\n";
        let cfg = ToolConfig::parse("array_shape.a = n1\n").unwrap();
        let r = run(text, Mode::D2xu, &cfg);
        assert_eq!(
            r.output.emit(),
            "s = HUGE(s)\ndo concurrent (i0=1:n1) reduce(min:s)\n  s = min(s, a(i0))\nenddo\n"
        );
        // Same region is untouched before D2XU.
        let r = run(text, Mode::Ad2xu, &cfg);
        assert_eq!(r.output.emit(), text);
        assert!(r.diagnostics.iter().any(|d| d.code == codes::KERNELS_KEPT));
    }

    #[test]
    fn kernels_sum_and_maxval_identities() {
        let cfg = ToolConfig::parse("array_shape.a = n1\n").unwrap();
        let r = run("!$acc kernels\ns = SUM(a)\n!$acc end kernels\n", Mode::D2xu, &cfg);
        assert_eq!(
            r.output.emit(),
            "s = 0.\ndo concurrent (i0=1:n1) reduce(+:s)\n  s = s + a(i0)\nenddo\n"
        );
        let r = run("!$acc kernels\ns = MAXVAL(a)\n!$acc end kernels\n", Mode::D2xu, &cfg);
        assert_eq!(
            r.output.emit(),
            "s = -HUGE(s)\ndo concurrent (i0=1:n1) reduce(max:s)\n  s = max(s, a(i0))\nenddo\n"
        );
    }

    #[test]
    fn kernels_array_syntax_expansion() {
        let text = "!$acc kernels\na = b + c\n!$acc end kernels\n";
        let cfg =
            ToolConfig::parse("array_shape.a = n1, n2\narray_shape.b = n1, n2\narray_shape.c = n1, n2\n")
                .unwrap();
        let r = run(text, Mode::D2xu, &cfg);
        assert_eq!(
            r.output.emit(),
            "do concurrent (i0=1:n1,j0=1:n2)\n  a(i0,j0) = b(i0,j0) + c(i0,j0)\nenddo\n"
        );
    }

    #[test]
    fn kernels_wrapping_do_matches_parallel_loop_path() {
        let cfg = ToolConfig::parse("array_shape.q = n1\n").unwrap();
        let kernels = "!$acc kernels\ndo i=1,n1\n  q(i)=0.\nenddo\n!$acc end kernels\n";
        let parallel = "!$acc parallel loop\ndo i=1,n1\n  q(i)=0.\nenddo\n";
        let rk = run(kernels, Mode::D2xu, &cfg);
        let rp = run(parallel, Mode::D2xu, &cfg);
        assert_eq!(rk.output.emit(), rp.output.emit());
    }

    #[test]
    fn kernels_with_unknown_shape_needs_manual_work() {
        let text = "!$acc kernels\ns = SUM(w)\n!$acc end kernels\n";
        let r = run(text, Mode::D2xu, &ToolConfig::default());
        assert_eq!(r.output.emit(), text);
        assert!(r.diagnostics.iter().any(|d| d.code == codes::KERNELS_MANUAL));
    }

    #[test]
    fn data_directive_stripping_rules() {
        let cfg = ToolConfig::parse("derived_type_registry = dt\n").unwrap();
        let plain = "!$acc enter data copyin(a)\n";
        let derived = "!$acc enter data copyin(dt)\n";

        let r = run(plain, Mode::Adu, &cfg);
        assert_eq!(r.output.emit(), "");
        assert!(r.diagnostics.iter().any(|d| d.code == codes::DATA_REMOVED));

        let r = run(derived, Mode::Adu, &cfg);
        assert_eq!(r.output.emit(), derived);
        assert!(r.diagnostics.iter().any(|d| d.code == codes::DATA_KEPT_DERIVED_TYPE));

        let r = run(derived, Mode::Ad2xu, &cfg);
        assert_eq!(r.output.emit(), "");
        assert!(r.diagnostics.iter().any(|d| d.code == codes::DATA_REMOVED));

        let r = run(derived, Mode::Ad, &cfg);
        assert_eq!(r.output.emit(), derived);

        let r = run(derived, Mode::D2xad, &cfg);
        assert_eq!(r.output.emit(), derived);
    }

    #[test]
    fn declare_and_update_retention() {
        let text = "!$acc declare create(w)\n!$acc update device(w)\n!$acc update device(x)\n";
        let cfg = ToolConfig::default();

        let r = run(text, Mode::Adu, &cfg);
        assert_eq!(r.output.emit(), "!$acc declare create(w)\n!$acc update device(w)\n");
        assert!(r.diagnostics.iter().any(|d| d.code == codes::DECLARE_KEPT));
        assert!(r.diagnostics.iter().any(|d| d.code == codes::UPDATE_KEPT_DECLARE));

        let r = run(text, Mode::Ad2xu, &cfg);
        assert_eq!(r.output.emit(), "!$acc declare create(w)\n!$acc update device(w)\n");

        let r = run(text, Mode::D2xu, &cfg);
        assert_eq!(r.output.emit(), "");
        assert!(r.diagnostics.iter().any(|d| d.code == codes::DECLARE_REMOVED));
    }

    #[test]
    fn host_data_stripped_under_um() {
        let text = "!$acc host_data use_device(p)\ncall mpi_send(p)\n!$acc end host_data\n";
        let r = run(text, Mode::Adu, &ToolConfig::default());
        assert_eq!(r.output.emit(), "call mpi_send(p)\n");
    }

    #[test]
    fn routine_wait_set_device_in_d2xu() {
        let text = "!$acc routine (boost) seq\n!$acc wait\n!$acc set device_num(irank)\n";
        let r = run(text, Mode::Ad2xu, &ToolConfig::default());
        assert_eq!(r.output.emit(), text);
        let r = run(text, Mode::D2xu, &ToolConfig::default());
        assert_eq!(r.output.emit(), "");
        assert!(r.diagnostics.iter().any(|d| d.code == codes::WAIT_DROPPED));
        assert!(r.diagnostics.iter().any(|d| d.code == codes::SET_DEVICE_REMOVED));
        assert!(r.diagnostics.iter().any(|d| d.code == codes::ROUTINE_REMOVED));
    }

    #[test]
    fn async_region_kept_until_d2xu() {
        let text = "!$acc parallel loop async(1)\ndo i=1,n1\n  q(i)=0.\nenddo\n";
        let cfg = shapes();
        for mode in [Mode::Ad, Mode::Adu, Mode::Ad2xu] {
            let r = run(text, mode, &cfg);
            assert_eq!(r.output.emit(), text, "{mode}");
            assert!(r.diagnostics.iter().any(|d| d.code == codes::ASYNC_KEPT));
        }
        let r = run(text, Mode::D2xu, &cfg);
        assert_eq!(r.output.emit(), "do concurrent (i=1:n1)\n  q(i)=0.\nenddo\n");
        assert!(r.diagnostics.iter().any(|d| d.code == codes::ASYNC_DROPPED && d.severity == Severity::Warning));
    }

    #[test]
    fn private_clause_dropped_with_info() {
        let text = "!$acc parallel loop private(x)\ndo i=1,n1\n  x = q(i)\n  q(i) = x*2\nenddo\n";
        let r = run(text, Mode::Ad, &shapes());
        assert!(r.output.emit().starts_with("do concurrent (i=1:n1)\n"));
        assert!(r.diagnostics.iter().any(|d| d.code == codes::PRIVATE_DROPPED));
    }

    #[test]
    fn gang_vector_clauses_warn_and_drop() {
        let text = "!$acc parallel loop gang vector\ndo i=1,n1\n  q(i)=0.\nenddo\n";
        let r = run(text, Mode::Ad, &shapes());
        assert_eq!(r.output.emit(), "do concurrent (i=1:n1)\n  q(i)=0.\nenddo\n");
        let drops: Vec<_> = r
            .diagnostics
            .iter()
            .filter(|d| d.code == codes::LOOP_CLAUSE_DROPPED)
            .collect();
        assert_eq!(drops.len(), 2);
    }

    #[test]
    fn routine_bearing_loop_with_whitelist() {
        let text = "!$acc parallel loop\ndo i=1,n1\n  call boost(q(i))\nenddo\n";
        let cfg = ToolConfig::parse("purity_whitelist = boost\narray_shape.q = n1\n").unwrap();
        let r = run(text, Mode::Ad, &cfg);
        assert!(r.output.emit().starts_with("do concurrent"));
        assert!(r.diagnostics.iter().any(|d| d.code == codes::ROUTINE_KEPT));

        let r = run(text, Mode::D2xu, &cfg);
        assert!(r.output.emit().starts_with("do concurrent"));
        assert_eq!(r.inline_plan.callees, vec!["boost".to_string()]);
    }

    #[test]
    fn unknown_purity_blocks_d2xu_only() {
        let text = "!$acc parallel loop\ndo i=1,n1\n  q(i) = interp(q(i), 2.0)\nenddo\n";
        let cfg = ToolConfig::parse("array_shape.q = n1\n").unwrap();
        let r = run(text, Mode::Ad, &cfg);
        assert!(r.output.emit().starts_with("do concurrent"));
        let r = run(text, Mode::D2xu, &cfg);
        assert_eq!(r.output.emit(), text);
        assert!(r.diagnostics.iter().any(|d| d.code == codes::UNKNOWN_PURITY));
        assert!(r.inline_plan.callees.is_empty());
    }

    #[test]
    fn impure_call_blocks_everywhere() {
        let text = "\
subroutine rng(x)
  real :: x
end subroutine rng
program p
  real :: q(n1)
!$acc parallel loop
do i=1,n1
  call rng(q(i))
enddo
end program p
";
        for mode in [Mode::Ad, Mode::D2xu] {
            let r = run(text, mode, &ToolConfig::default());
            assert_eq!(r.output.emit(), text, "{mode}");
            assert!(r.diagnostics.iter().any(|d| d.code == codes::IMPURE_CALL));
        }
    }

    #[test]
    fn fused_siblings_convert_together_or_not_at_all() {
        let both_ok = "\
!$acc parallel default(present)
!$acc loop
do i=1,n1
  q(i)=0.
enddo
!$acc loop
do i=1,n1
  q(i)=q(i)+1.
enddo
!$acc end parallel
";
        let cfg = shapes();
        let r = run(both_ok, Mode::Ad, &cfg);
        assert_eq!(
            r.output.emit(),
            "do concurrent (i=1:n1)\n  q(i)=0.\nenddo\ndo concurrent (i=1:n1)\n  q(i)=q(i)+1.\nenddo\n"
        );
        assert!(r.diagnostics.iter().any(|d| d.code == codes::KERNEL_FISSION));

        let mixed = "\
!$acc parallel default(present)
!$acc loop
do i=1,n1
  q(i)=0.
enddo
!$acc loop reduction(+:s)
do i=1,n1
  s = s + q(i)
enddo
!$acc end parallel
";
        let r = run(mixed, Mode::Ad, &cfg);
        assert_eq!(r.output.emit(), mixed);
        assert!(r.diagnostics.iter().any(|d| d.code == codes::FUSED_GROUP_KEPT));
        let r = run(mixed, Mode::Ad2xu, &cfg);
        assert!(!r.output.emit().contains("!$acc"));
    }

    #[test]
    fn unsupported_region_keeps_bytes_and_flags() {
        let text = "\
!$acc parallel loop collapse(2)
do k=1,n3
  x = k
  do j=1,n2
    y(j,k) = x
  enddo
enddo
";
        let cfg = ToolConfig::parse("array_shape.y = n2, n3\n").unwrap();
        let r = run(text, Mode::D2xu, &cfg);
        assert_eq!(r.output.emit(), text);
        assert!(r.diagnostics.iter().any(|d| d.code == codes::UNSUPPORTED_REGION));
        assert!(r.action_required() > 0);
        assert!(r.counts_after.total > 0);
    }

    #[test]
    fn idempotence_on_listing_fixtures() {
        let cfg = shapes();
        for text in [TRIPLE, ARRAY_REDUCTION] {
            for mode in Mode::ALL {
                let once = run(text, mode, &cfg);
                let twice = transform_file(&once.output, mode, &cfg).unwrap();
                assert_eq!(once.output.emit(), twice.output.emit(), "{mode}");
            }
        }
    }

    #[test]
    fn byte_fidelity_outside_regions() {
        let text = format!("x = 1  ! leading context\n\n{TRIPLE}\n! trailing comment\ny = 2\n");
        let r = run(&text, Mode::Ad, &shapes());
        let emitted = r.output.emit();
        assert!(emitted.starts_with("x = 1  ! leading context\n\n"));
        assert!(emitted.ends_with("\n! trailing comment\ny = 2\n"));
    }

    #[test]
    fn inline_plan_flag_fragments() {
        let cfg = ToolConfig::parse("purity_whitelist = s2c, boost, interp, c2s, sv2cv\nreshape_routines = s2c\n").unwrap();
        let calls: Vec<CallSite> = ["s2c", "boost", "interp", "c2s", "sv2cv"]
            .iter()
            .map(|n| CallSite { callee: n.to_string(), declared_pure: Purity::Pure })
            .collect();
        let (plan, unknown) = plan_inlining(&calls, &cfg);
        assert!(unknown.is_empty());
        assert_eq!(plan.flag_fragment(), "-Minline=reshape,name:s2c,boost,interp,c2s,sv2cv");

        let (plan, unknown) = plan_inlining(&[], &cfg);
        assert!(unknown.is_empty());
        assert_eq!(plan.flag_fragment(), "");

        let calls = vec![
            CallSite { callee: "boost".into(), declared_pure: Purity::Pure },
            CallSite { callee: "mystery".into(), declared_pure: Purity::Unknown },
        ];
        let (plan, unknown) = plan_inlining(&calls, &cfg);
        assert_eq!(plan.flag_fragment(), "-Minline=name:boost");
        assert_eq!(unknown, vec!["mystery".to_string()]);
    }

    #[test]
    fn counts_are_monotone_for_listing_fixture() {
        let cfg = shapes();
        let mut prev = usize::MAX;
        for mode in [Mode::A, Mode::Ad, Mode::Adu, Mode::Ad2xu, Mode::D2xu] {
            let r = run(ARRAY_REDUCTION, mode, &cfg);
            assert!(r.counts_after.total <= prev, "{mode}");
            prev = r.counts_after.total;
        }
        let d2xu = run(ARRAY_REDUCTION, Mode::D2xu, &cfg).counts_after.total;
        let d2xad = run(ARRAY_REDUCTION, Mode::D2xad, &cfg).counts_after.total;
        assert!(d2xad >= d2xu);
    }
}
