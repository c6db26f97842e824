//! OpenACC directive parsing and the per-file directive census.
//!
//! The directive inventory is intentionally closed: `parallel`/`loop`,
//! `kernels`, the unstructured data directives, `declare`, `atomic`,
//! `routine`, `wait` and `set device_num`. Anything else is a parse error
//! rather than a silent pass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseErrorKind, Result};
use crate::fortran::{find_top_level, is_ident_char, is_ident_start, split_top_level};
use crate::source::{LineKind, LogicalLine, SourceFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DirectiveKind {
    Parallel,
    EndParallel,
    Loop,
    ParallelLoop,
    Kernels,
    EndKernels,
    EnterData,
    ExitData,
    Update,
    HostData,
    EndHostData,
    Declare,
    Atomic,
    Routine,
    Wait,
    SetDeviceNum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AtomicKind {
    #[default]
    Update,
    Read,
    Write,
    Capture,
}

/// Reduction operators valid on `reduction`/`reduce` clauses.
pub const REDUCTION_OPS: &[&str] = &["+", "*", "max", "min", "iand", "ior", "ieor", ".and.", ".or."];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClauseArgs {
    None,
    Exprs(Vec<String>),
    Reduction { op: String, vars: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    /// Lower-cased clause name.
    pub name: String,
    pub args: ClauseArgs,
}

impl Clause {
    /// Argument expressions, empty for bare clauses.
    pub fn exprs(&self) -> &[String] {
        match &self.args {
            ClauseArgs::Exprs(v) => v,
            _ => &[],
        }
    }

    pub fn render(&self) -> String {
        match &self.args {
            ClauseArgs::None => self.name.clone(),
            ClauseArgs::Exprs(v) => format!("{}({})", self.name, v.join(",")),
            ClauseArgs::Reduction { op, vars } => {
                format!("{}({}:{})", self.name, op, vars.join(","))
            }
        }
    }
}

/// One parsed directive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Directive {
    pub kind: DirectiveKind,
    /// Sub-kind for `atomic` directives; defaults to update.
    pub atomic_kind: Option<AtomicKind>,
    /// Parenthesized argument directly after the directive words
    /// (`routine(name)`, `wait(1)`, `set device_num(expr)`).
    pub args: Vec<String>,
    pub clauses: Vec<Clause>,
    /// 0-based first physical line of the logical line this came from.
    pub line: usize,
}

impl Directive {
    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }

    pub fn has_clause(&self, name: &str) -> bool {
        self.clause(name).is_some()
    }

    /// All reduction clause payloads.
    pub fn reductions(&self) -> Vec<(&str, &[String])> {
        self.clauses
            .iter()
            .filter_map(|c| match &c.args {
                ClauseArgs::Reduction { op, vars } if c.name == "reduction" || c.name == "reduce" => {
                    Some((op.as_str(), vars.as_slice()))
                }
                _ => None,
            })
            .collect()
    }

    /// Variable names mentioned by data clauses (`copyin(a,b)` -> a, b).
    pub fn data_clause_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.clauses {
            for e in c.exprs() {
                if let Some((name, _)) = crate::fortran::parse_ref(e) {
                    out.push(name.to_ascii_lowercase());
                }
            }
        }
        out
    }

    fn kind_words(&self) -> String {
        match self.kind {
            DirectiveKind::Parallel => "parallel".into(),
            DirectiveKind::EndParallel => "end parallel".into(),
            DirectiveKind::Loop => "loop".into(),
            DirectiveKind::ParallelLoop => "parallel loop".into(),
            DirectiveKind::Kernels => "kernels".into(),
            DirectiveKind::EndKernels => "end kernels".into(),
            DirectiveKind::EnterData => "enter data".into(),
            DirectiveKind::ExitData => "exit data".into(),
            DirectiveKind::Update => "update".into(),
            DirectiveKind::HostData => "host_data".into(),
            DirectiveKind::EndHostData => "end host_data".into(),
            DirectiveKind::Declare => "declare".into(),
            DirectiveKind::Atomic => match self.atomic_kind.unwrap_or_default() {
                AtomicKind::Update => "atomic update".into(),
                AtomicKind::Read => "atomic read".into(),
                AtomicKind::Write => "atomic write".into(),
                AtomicKind::Capture => "atomic capture".into(),
            },
            DirectiveKind::Routine => "routine".into(),
            DirectiveKind::Wait => "wait".into(),
            DirectiveKind::SetDeviceNum => "set device_num".into(),
        }
    }

    /// Render back to a canonical `!$acc ...` line.
    pub fn render(&self) -> String {
        let mut s = format!("!$acc {}", self.kind_words());
        if !self.args.is_empty() {
            s.push_str(&format!("({})", self.args.join(",")));
        }
        for c in &self.clauses {
            s.push(' ');
            s.push_str(&c.render());
        }
        s
    }

    /// Clause names not in the known inventory for this directive kind;
    /// these surface as warning diagnostics, never errors.
    pub fn unrecognized_clauses(&self) -> Vec<&str> {
        let known = known_clauses(self.kind);
        self.clauses
            .iter()
            .filter(|c| !known.contains(&c.name.as_str()))
            .map(|c| c.name.as_str())
            .collect()
    }
}

fn known_clauses(kind: DirectiveKind) -> &'static [&'static str] {
    const COMPUTE: &[&str] = &[
        "async", "wait", "num_gangs", "num_workers", "vector_length", "device_type", "if",
        "self", "reduction", "copy", "copyin", "copyout", "create", "no_create", "present",
        "deviceptr", "attach", "private", "firstprivate", "default",
    ];
    const LOOP: &[&str] = &[
        "collapse", "gang", "worker", "vector", "seq", "auto", "independent", "tile",
        "device_type", "private", "reduction",
    ];
    const PARALLEL_LOOP: &[&str] = &[
        "async", "wait", "num_gangs", "num_workers", "vector_length", "device_type", "if",
        "self", "reduction", "copy", "copyin", "copyout", "create", "no_create", "present",
        "deviceptr", "attach", "private", "firstprivate", "default", "collapse", "gang",
        "worker", "vector", "seq", "auto", "independent", "tile",
    ];
    match kind {
        DirectiveKind::Parallel | DirectiveKind::Kernels => COMPUTE,
        DirectiveKind::Loop => LOOP,
        DirectiveKind::ParallelLoop => PARALLEL_LOOP,
        DirectiveKind::EnterData => &["if", "async", "wait", "copyin", "create", "attach"],
        DirectiveKind::ExitData => &["if", "async", "wait", "copyout", "delete", "detach", "finalize"],
        DirectiveKind::Update => &["async", "wait", "device_type", "if", "if_present", "self", "host", "device"],
        DirectiveKind::HostData => &["use_device", "if", "if_present"],
        DirectiveKind::Declare => &[
            "copy", "copyin", "copyout", "create", "present", "deviceptr", "device_resident", "link",
        ],
        DirectiveKind::Routine => &["gang", "worker", "vector", "seq", "bind", "device_type", "nohost"],
        DirectiveKind::Wait => &["async", "if"],
        _ => &[],
    }
}

struct Scanner<'a> {
    s: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Scanner<'a> {
    fn skip_ws_and_commas(&mut self) {
        let bytes = self.s.as_bytes();
        while self.pos < bytes.len()
            && ((bytes[self.pos] as char).is_whitespace() || bytes[self.pos] == b',')
        {
            self.pos += 1;
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws_and_commas();
        self.pos >= self.s.len()
    }

    fn peek_is(&mut self, c: char) -> bool {
        self.skip_ws_and_commas();
        self.s[self.pos..].starts_with(c)
    }

    fn next_ident(&mut self) -> Option<&'a str> {
        self.skip_ws_and_commas();
        let rest = &self.s[self.pos..];
        let mut it = rest.char_indices();
        match it.next() {
            Some((_, c)) if is_ident_start(c) => {}
            _ => return None,
        }
        let end = rest
            .char_indices()
            .find(|(_, c)| !is_ident_char(*c))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        self.pos += end;
        Some(&rest[..end])
    }

    fn read_group(&mut self) -> Result<&'a str> {
        self.skip_ws_and_commas();
        let rest = &self.s[self.pos..];
        match crate::fortran::read_paren_group(rest) {
            Some((inside, tail)) => {
                self.pos = self.s.len() - tail.len();
                Ok(inside)
            }
            None => Err(Error::parse(
                self.line,
                ParseErrorKind::Malformed,
                "unbalanced parentheses in directive",
            )),
        }
    }

    fn malformed(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line, ParseErrorKind::Malformed, msg)
    }
}

/// Parse the directive on an `AccDirective` logical line.
pub fn parse_directive(line: &LogicalLine) -> Result<Directive> {
    debug_assert_eq!(line.kind, LineKind::AccDirective);
    parse_directive_text(&line.text, line.first_physical_index)
}

/// Parse directive content (the text after the `!$acc` sentinel).
pub fn parse_directive_text(text: &str, line: usize) -> Result<Directive> {
    let mut sc = Scanner { s: text, pos: 0, line };
    let unknown = |w: &str| {
        Error::parse(
            line,
            ParseErrorKind::UnknownDirective,
            format!("unknown OpenACC directive `{w}`"),
        )
    };
    let w1 = sc
        .next_ident()
        .ok_or_else(|| unknown(text.trim()))?
        .to_ascii_lowercase();

    let mut atomic_kind = None;
    let mut args: Vec<String> = Vec::new();
    let kind = match w1.as_str() {
        "parallel" => {
            let save = sc.pos;
            match sc.next_ident() {
                Some(w) if w.eq_ignore_ascii_case("loop") => DirectiveKind::ParallelLoop,
                _ => {
                    sc.pos = save;
                    DirectiveKind::Parallel
                }
            }
        }
        "end" => {
            let w2 = sc
                .next_ident()
                .ok_or_else(|| sc.malformed("`end` without a directive name"))?
                .to_ascii_lowercase();
            match w2.as_str() {
                "parallel" => {
                    let save = sc.pos;
                    match sc.next_ident() {
                        Some(w) if w.eq_ignore_ascii_case("loop") => {}
                        _ => sc.pos = save,
                    }
                    DirectiveKind::EndParallel
                }
                "kernels" => DirectiveKind::EndKernels,
                "host_data" => DirectiveKind::EndHostData,
                other => return Err(unknown(&format!("end {other}"))),
            }
        }
        "loop" => DirectiveKind::Loop,
        "kernels" => DirectiveKind::Kernels,
        "enter" | "exit" => {
            match sc.next_ident() {
                Some(w) if w.eq_ignore_ascii_case("data") => {}
                _ => return Err(sc.malformed(format!("`{w1}` must be followed by `data`"))),
            }
            if w1 == "enter" {
                DirectiveKind::EnterData
            } else {
                DirectiveKind::ExitData
            }
        }
        "update" => DirectiveKind::Update,
        "host_data" => DirectiveKind::HostData,
        "declare" => DirectiveKind::Declare,
        "atomic" => {
            let save = sc.pos;
            atomic_kind = Some(match sc.next_ident() {
                Some(w) if w.eq_ignore_ascii_case("update") => AtomicKind::Update,
                Some(w) if w.eq_ignore_ascii_case("read") => AtomicKind::Read,
                Some(w) if w.eq_ignore_ascii_case("write") => AtomicKind::Write,
                Some(w) if w.eq_ignore_ascii_case("capture") => AtomicKind::Capture,
                Some(w) => {
                    return Err(sc.malformed(format!("unknown atomic sub-kind `{w}`")));
                }
                None => {
                    sc.pos = save;
                    AtomicKind::Update
                }
            });
            DirectiveKind::Atomic
        }
        "routine" => {
            if sc.peek_is('(') {
                let group = sc.read_group()?;
                args.push(group.trim().to_string());
            }
            DirectiveKind::Routine
        }
        "wait" => {
            if sc.peek_is('(') {
                let group = sc.read_group()?;
                args.extend(split_top_level(group, ',').iter().map(|a| a.trim().to_string()));
            }
            DirectiveKind::Wait
        }
        "set" => {
            match sc.next_ident() {
                Some(w) if w.eq_ignore_ascii_case("device_num") => {}
                Some(w) => return Err(unknown(&format!("set {w}"))),
                None => return Err(sc.malformed("`set` without a sub-directive")),
            }
            if !sc.peek_is('(') {
                return Err(sc.malformed("set device_num requires a device expression"));
            }
            let group = sc.read_group()?;
            args.push(group.trim().to_string());
            DirectiveKind::SetDeviceNum
        }
        other => return Err(unknown(other)),
    };

    let mut clauses = Vec::new();
    loop {
        if sc.at_end() {
            break;
        }
        let name = match sc.next_ident() {
            Some(n) => n.to_ascii_lowercase(),
            None => {
                return Err(sc.malformed(format!(
                    "unexpected character in directive near `{}`",
                    &text[sc.pos..]
                )));
            }
        };
        let args = if sc.peek_is('(') {
            let group = sc.read_group()?;
            if name == "reduction" || name == "reduce" {
                let colon = find_top_level(group, ':').ok_or_else(|| {
                    sc.malformed(format!("{name} clause requires `operator:variables`"))
                })?;
                let op = group[..colon].trim().to_ascii_lowercase();
                if !REDUCTION_OPS.contains(&op.as_str()) {
                    return Err(sc.malformed(format!("unsupported reduction operator `{op}`")));
                }
                let vars: Vec<String> = split_top_level(&group[colon + 1..], ',')
                    .iter()
                    .map(|v| v.trim().to_string())
                    .filter(|v| !v.is_empty())
                    .collect();
                if vars.is_empty() {
                    return Err(sc.malformed(format!("{name} clause without variables")));
                }
                ClauseArgs::Reduction { op, vars }
            } else {
                ClauseArgs::Exprs(
                    split_top_level(group, ',')
                        .iter()
                        .map(|a| a.trim().to_string())
                        .filter(|a| !a.is_empty())
                        .collect(),
                )
            }
        } else {
            if name == "reduction" || name == "reduce" {
                return Err(sc.malformed(format!("{name} clause requires arguments")));
            }
            ClauseArgs::None
        };
        clauses.push(Clause { name, args });
    }

    Ok(Directive {
        kind,
        atomic_kind,
        args,
        clauses,
        line,
    })
}

/// Table row a directive kind is counted under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectiveCategory {
    ParallelLoop,
    DataManagement,
    Atomic,
    Routine,
    Kernels,
    Wait,
    SetDeviceNum,
}

pub fn category_of(kind: DirectiveKind) -> DirectiveCategory {
    use DirectiveKind::*;
    match kind {
        Parallel | EndParallel | Loop | ParallelLoop => DirectiveCategory::ParallelLoop,
        Kernels | EndKernels => DirectiveCategory::Kernels,
        EnterData | ExitData | Update | HostData | EndHostData | Declare => {
            DirectiveCategory::DataManagement
        }
        Atomic => DirectiveCategory::Atomic,
        Routine => DirectiveCategory::Routine,
        Wait => DirectiveCategory::Wait,
        SetDeviceNum => DirectiveCategory::SetDeviceNum,
    }
}

/// Per-type breakdown of the data-management row.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataManagementDetail {
    pub enter: usize,
    pub exit: usize,
    pub update: usize,
    pub host_data: usize,
    pub declare: usize,
}

/// Directive line counts, one bucket per census row. Continuation lines
/// (`!$acc&`) count in their own row, separate from their parent directive.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusReport {
    pub parallel_loop: usize,
    pub data_management: usize,
    pub data_management_detail: DataManagementDetail,
    pub atomic: usize,
    pub routine: usize,
    pub kernels: usize,
    pub wait: usize,
    pub set_device_num: usize,
    pub continuation: usize,
    pub total: usize,
}

impl CensusReport {
    pub fn record(&mut self, kind: DirectiveKind, span: usize) {
        match category_of(kind) {
            DirectiveCategory::ParallelLoop => self.parallel_loop += 1,
            DirectiveCategory::Kernels => self.kernels += 1,
            DirectiveCategory::Atomic => self.atomic += 1,
            DirectiveCategory::Routine => self.routine += 1,
            DirectiveCategory::Wait => self.wait += 1,
            DirectiveCategory::SetDeviceNum => self.set_device_num += 1,
            DirectiveCategory::DataManagement => {
                self.data_management += 1;
                use DirectiveKind::*;
                match kind {
                    EnterData => self.data_management_detail.enter += 1,
                    ExitData => self.data_management_detail.exit += 1,
                    Update => self.data_management_detail.update += 1,
                    HostData | EndHostData => self.data_management_detail.host_data += 1,
                    Declare => self.data_management_detail.declare += 1,
                    _ => unreachable!(),
                }
            }
        }
        self.continuation += span - 1;
        self.total += span;
    }

    pub fn merge(&mut self, other: &CensusReport) {
        self.parallel_loop += other.parallel_loop;
        self.data_management += other.data_management;
        self.data_management_detail.enter += other.data_management_detail.enter;
        self.data_management_detail.exit += other.data_management_detail.exit;
        self.data_management_detail.update += other.data_management_detail.update;
        self.data_management_detail.host_data += other.data_management_detail.host_data;
        self.data_management_detail.declare += other.data_management_detail.declare;
        self.atomic += other.atomic;
        self.routine += other.routine;
        self.kernels += other.kernels;
        self.wait += other.wait;
        self.set_device_num += other.set_device_num;
        self.continuation += other.continuation;
        self.total += other.total;
    }
}

/// Count directive lines per census row. The total equals the number of
/// physical lines whose content starts with the `!$acc` sentinel.
pub fn directive_census(src: &SourceFile) -> Result<CensusReport> {
    let logical = src.logical_lines()?;
    census_of_logical(&logical)
}

pub(crate) fn census_of_logical(logical: &[LogicalLine]) -> Result<CensusReport> {
    let mut report = CensusReport::default();
    for ll in logical {
        if ll.kind == LineKind::AccDirective {
            let d = parse_directive(ll)?;
            report.record(d.kind, ll.span);
        }
    }
    Ok(report)
}
