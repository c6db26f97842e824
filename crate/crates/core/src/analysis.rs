//! Loop-nest recognition, symbol harvesting, and region classification.
//!
//! A region is a directive-governed block of code: `parallel ... end
//! parallel`, a combined `parallel loop`, or `kernels ... end kernels`.
//! Each region is classified into the transformation taxonomy that decides
//! which rewrite (if any) fires for a given code version.

use std::collections::{BTreeMap, BTreeSet};

use crate::config::ToolConfig;
use crate::directive::{parse_directive, AtomicKind, Directive, DirectiveKind};
use crate::error::{Error, ParseErrorKind, Result};
use crate::fortran::{
    self, code_text, contains_ident, find_assignment, first_word, identifiers, parse_declaration,
    parse_do, parse_ref, scope_event, squeeze, DimSpec, DoStmt, LoopControl, ScopeEvent,
};
use crate::source::{LineKind, LogicalLine};

/// Purity of a called routine, resolved from an explicit `pure` prefix in
/// the same file or the configuration whitelist. Unknown is never silently
/// treated as pure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purity {
    Pure,
    NotPure,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSite {
    pub callee: String,
    pub declared_pure: Purity,
}

#[derive(Debug)]
struct Scope {
    start: usize,
    end: usize,
    parent: Option<usize>,
    arrays: BTreeMap<String, Vec<DimSpec>>,
    idents: BTreeSet<String>,
}

/// Array declarations and procedure purity harvested from the file,
/// merged with configuration-supplied shapes and whitelists.
#[derive(Debug)]
pub struct SymbolTable {
    scopes: Vec<Scope>,
    purity: BTreeMap<String, bool>,
    config_shapes: BTreeMap<String, Vec<DimSpec>>,
    whitelist: Vec<String>,
}

impl SymbolTable {
    pub fn build(logical: &[LogicalLine], config: &ToolConfig) -> SymbolTable {
        let mut scopes = vec![Scope {
            start: 0,
            end: usize::MAX,
            parent: None,
            arrays: BTreeMap::new(),
            idents: BTreeSet::new(),
        }];
        let mut stack = vec![0usize];
        let mut purity = BTreeMap::new();
        let mut type_depth = 0usize;

        for (idx, ll) in logical.iter().enumerate() {
            match ll.kind {
                LineKind::Code => {}
                LineKind::AccDirective => {
                    // Directive operands join the identifier pool so generated
                    // temporaries never collide with declared data.
                    let cur = *stack.last().unwrap();
                    for (_, w) in identifiers(&ll.text) {
                        scopes[cur].idents.insert(w.to_ascii_lowercase());
                    }
                    continue;
                }
                _ => continue,
            }
            let code = code_text(&ll.text);
            let cur = *stack.last().unwrap();
            for (_, w) in identifiers(code) {
                scopes[cur].idents.insert(w.to_ascii_lowercase());
            }
            match scope_event(code) {
                ScopeEvent::Start { name, pure, .. } => {
                    purity.entry(name).or_insert(pure);
                    let id = scopes.len();
                    scopes.push(Scope {
                        start: idx,
                        end: usize::MAX,
                        parent: Some(cur),
                        arrays: BTreeMap::new(),
                        idents: BTreeSet::new(),
                    });
                    stack.push(id);
                }
                ScopeEvent::End => {
                    if stack.len() > 1 {
                        let id = stack.pop().unwrap();
                        scopes[id].end = idx;
                    }
                }
                ScopeEvent::TypeStart => type_depth += 1,
                ScopeEvent::TypeEnd => type_depth = type_depth.saturating_sub(1),
                ScopeEvent::InterfaceStart | ScopeEvent::InterfaceEnd => {}
                ScopeEvent::None => {
                    if type_depth == 0 {
                        if let Some(entities) = parse_declaration(code) {
                            for (name, dims) in entities {
                                if let Some(dims) = dims {
                                    scopes[*stack.last().unwrap()]
                                        .arrays
                                        .insert(name.to_ascii_lowercase(), dims);
                                }
                            }
                        }
                    }
                }
            }
        }

        SymbolTable {
            scopes,
            purity,
            config_shapes: config.array_shapes.clone(),
            whitelist: config.purity_whitelist.clone(),
        }
    }

    fn scope_chain(&self, at: usize) -> Vec<usize> {
        // Innermost scope containing `at`, then its parents.
        let mut best: usize = 0;
        for (id, s) in self.scopes.iter().enumerate() {
            if s.start <= at && at < s.end && (s.start >= self.scopes[best].start || best == 0) {
                if id != 0 && (best == 0 || s.start >= self.scopes[best].start) {
                    best = id;
                }
            }
        }
        let mut chain = vec![best];
        let mut cur = best;
        while let Some(p) = self.scopes[cur].parent {
            chain.push(p);
            cur = p;
        }
        if *chain.last().unwrap() != 0 {
            chain.push(0);
        }
        chain
    }

    /// Array shape lookup; declarations shadow configuration entries.
    pub fn array_shape(&self, name: &str, at: usize) -> Option<&Vec<DimSpec>> {
        let n = name.to_ascii_lowercase();
        for id in self.scope_chain(at) {
            if let Some(dims) = self.scopes[id].arrays.get(&n) {
                return Some(dims);
            }
        }
        self.config_shapes.get(&n)
    }

    pub fn is_array(&self, name: &str, at: usize) -> bool {
        self.array_shape(name, at).is_some()
    }

    pub fn purity(&self, name: &str) -> Purity {
        let n = name.to_ascii_lowercase();
        if self.purity.get(&n) == Some(&true) {
            return Purity::Pure;
        }
        if self.whitelist.iter().any(|w| *w == n) {
            return Purity::Pure;
        }
        match self.purity.get(&n) {
            Some(false) => Purity::NotPure,
            _ => Purity::Unknown,
        }
    }

    /// Identifiers visible around `at`; used to pick collision-free names
    /// for generated temporaries.
    pub fn identifiers_at(&self, at: usize) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for id in self.scope_chain(at) {
            out.extend(self.scopes[id].idents.iter().cloned());
        }
        out
    }

    /// Deterministic fresh name: `base`, then `base0`, `base1`, ...
    pub fn fresh_name(&self, base: &str, at: usize, also_taken: &BTreeSet<String>) -> String {
        let taken = self.identifiers_at(at);
        let free = |n: &str| !taken.contains(n) && !also_taken.contains(n);
        if free(base) {
            return base.to_string();
        }
        for i in 0.. {
            let cand = format!("{base}{i}");
            if free(&cand) {
                return cand;
            }
        }
        unreachable!()
    }
}

/// A `do` loop nest: the chain of immediately nested counted loops starting
/// at some header, their matching `enddo`s, and the innermost body.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopNest {
    /// Controls from outermost to innermost.
    pub loops: Vec<LoopControl>,
    /// Logical index of each `do` header, outermost first.
    pub header_idx: Vec<usize>,
    /// Logical index of each matching `enddo`, aligned with `header_idx`.
    pub end_idx: Vec<usize>,
    /// How many outer loops form a perfect nest (nothing but comments
    /// between consecutive headers and between consecutive `enddo`s).
    pub perfectly_nested_depth: usize,
    /// Logical indices strictly inside the innermost loop.
    pub body: Vec<usize>,
    /// True when the outermost statement is already a `do concurrent`.
    pub is_concurrent: bool,
}

fn next_code_line(logical: &[LogicalLine], mut i: usize) -> Option<usize> {
    while i < logical.len() {
        match logical[i].kind {
            LineKind::Code => return Some(i),
            LineKind::Comment | LineKind::Blank => i += 1,
            LineKind::AccDirective => return None,
        }
    }
    None
}

fn only_comments_between(logical: &[LogicalLine], a: usize, b: usize) -> bool {
    logical[a + 1..b]
        .iter()
        .all(|l| matches!(l.kind, LineKind::Comment | LineKind::Blank))
}

/// Find the `enddo` matching the `do` at `header` by depth counting.
fn find_end(logical: &[LogicalLine], header: usize) -> Result<usize> {
    let mut depth = 1usize;
    for (off, ll) in logical[header + 1..].iter().enumerate() {
        if ll.kind != LineKind::Code {
            continue;
        }
        let code = code_text(&ll.text);
        if fortran::is_end_do(code) {
            depth -= 1;
            if depth == 0 {
                return Ok(header + 1 + off);
            }
        } else if parse_do(code).is_some() {
            depth += 1;
        }
    }
    Err(Error::parse(
        logical[header].first_physical_index,
        ParseErrorKind::Malformed,
        "`do` without a matching `enddo`",
    ))
}

/// Parse the loop nest whose outermost `do` is the logical line `at`.
pub fn parse_loop_nest(logical: &[LogicalLine], at: usize) -> Result<LoopNest> {
    let mut loops = Vec::new();
    let mut header_idx = Vec::new();
    let stmt = parse_do(code_text(&logical[at].text)).ok_or_else(|| {
        Error::parse(
            logical[at].first_physical_index,
            ParseErrorKind::Malformed,
            "expected a `do` statement",
        )
    })?;

    let is_concurrent = match stmt {
        DoStmt::Concurrent { controls } => {
            loops = controls;
            header_idx.push(at);
            true
        }
        DoStmt::Counted(ctrl) => {
            loops.push(ctrl);
            header_idx.push(at);
            // Extend through immediately nested counted loops.
            loop {
                let last = *header_idx.last().unwrap();
                match next_code_line(logical, last + 1) {
                    Some(next) => match parse_do(code_text(&logical[next].text)) {
                        Some(DoStmt::Counted(ctrl)) => {
                            loops.push(ctrl);
                            header_idx.push(next);
                        }
                        _ => break,
                    },
                    None => break,
                }
            }
            false
        }
        DoStmt::While => {
            return Err(Error::parse(
                logical[at].first_physical_index,
                ParseErrorKind::Malformed,
                "`do while` loops cannot be analyzed as parallel nests",
            ));
        }
        DoStmt::Other => {
            return Err(Error::parse(
                logical[at].first_physical_index,
                ParseErrorKind::Malformed,
                "unsupported `do` form (labeled or infinite)",
            ));
        }
    };

    let mut end_idx = Vec::with_capacity(header_idx.len());
    for &h in &header_idx {
        end_idx.push(find_end(logical, h)?);
    }

    // Perfect-nest prefix: headers are adjacent by construction; the
    // matching `enddo`s must be adjacent too.
    let mut depth = 1;
    for m in 1..header_idx.len() {
        if only_comments_between(logical, end_idx[m], end_idx[m - 1]) {
            depth = m + 1;
        } else {
            break;
        }
    }

    let inner_h = *header_idx.last().unwrap();
    let inner_e = *end_idx.last().unwrap();
    let body = (inner_h + 1..inner_e).collect();

    Ok(LoopNest {
        loops,
        header_idx,
        end_idx,
        perfectly_nested_depth: depth,
        body,
        is_concurrent,
    })
}

/// Transformation taxonomy. Every region gets exactly one category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionCategory {
    SimpleCollapse,
    ScalarReduction,
    ArrayReductionAtomic,
    AtomicNonReduction,
    KernelsLoops,
    KernelsArraySyntax,
    KernelsIntrinsic,
    RoutineBearingLoop,
    AlreadyDC,
    Unsupported,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegionPayload {
    Loops(LoopNest),
    /// Opaque statement block (kernels regions): logical indices inside.
    Block(Vec<usize>),
}

/// The shape of an atomic-guarded update statement.
#[derive(Debug, Clone, PartialEq)]
pub enum UpdateForm {
    /// `t = t + expr` / `t = t * expr`
    Binary { op: char, rest: String },
    /// `t = max(t, expr)` / `t = min(t, expr)`
    MinMax { op: String, rest: String },
    /// Anything else; kept verbatim, never restructured.
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicUpdate {
    /// Logical index of the `!$acc atomic` line.
    pub directive_idx: usize,
    /// Logical index of the guarded statement.
    pub stmt_idx: usize,
    pub kind: AtomicKind,
    pub target: String,
    /// Subscript expressions of the target, `None` for scalars.
    pub target_args: Option<Vec<String>>,
    /// Left-hand side exactly as written.
    pub lhs_text: String,
    pub form: UpdateForm,
}

impl AtomicUpdate {
    /// Loop variables that appear in the target subscripts.
    fn vars_in_target(&self, loops: &[LoopControl]) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        if let Some(args) = &self.target_args {
            for arg in args {
                for ctrl in loops {
                    if contains_ident(arg, &ctrl.var) {
                        out.insert(ctrl.var.to_ascii_lowercase());
                    }
                }
            }
        }
        out
    }

    /// The Listing-style array-reduction pattern: array target in update
    /// form whose subscripts omit at least one loop index.
    pub fn is_array_reduction(&self, loops: &[LoopControl]) -> bool {
        if self.target_args.is_none() || !matches!(self.form, UpdateForm::Binary { .. } | UpdateForm::MinMax { .. }) {
            return false;
        }
        if self.kind != AtomicKind::Update {
            return false;
        }
        let used = self.vars_in_target(loops);
        loops
            .iter()
            .any(|c| !used.contains(&c.var.to_ascii_lowercase()))
    }

    /// Loop controls split into (target-bearing, reduced-over), preserving
    /// nest order.
    pub fn split_controls<'a>(&self, loops: &'a [LoopControl]) -> (Vec<&'a LoopControl>, Vec<&'a LoopControl>) {
        let used = self.vars_in_target(loops);
        let mut outer = Vec::new();
        let mut inner = Vec::new();
        for c in loops {
            if used.contains(&c.var.to_ascii_lowercase()) {
                outer.push(c);
            } else {
                inner.push(c);
            }
        }
        (outer, inner)
    }
}

/// A kernels-region intrinsic reduction statement: `s = SUM(a)` etc.
#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicReduction {
    pub stmt_idx: usize,
    pub lhs: String,
    /// One of `sum`, `minval`, `maxval` (lower-cased).
    pub func: String,
    pub array: String,
}

/// Syntactic features harvested from a region body.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BodyFeatures {
    pub atomics: Vec<AtomicUpdate>,
    pub calls: Vec<CallSite>,
    pub array_syntax: Vec<usize>,
    pub intrinsic_reductions: Vec<IntrinsicReduction>,
    /// `!$acc loop` directives nested inside the body.
    pub inner_loop_directives: Vec<usize>,
    /// Non-loop, non-atomic directives found inside the body.
    pub foreign_directives: Vec<usize>,
    /// Any governing directive carries `async` or a `wait` clause.
    pub has_async: bool,
    pub has_loops: bool,
    /// Code statements a kernels expansion cannot handle.
    pub opaque_statements: Vec<usize>,
}

/// An accelerated region: governing directives plus the code they cover.
#[derive(Debug, Clone, PartialEq)]
pub struct AccRegion {
    /// Governing directives with their logical indices (parallel and/or
    /// loop directive; end directives are tracked separately).
    pub directives: Vec<(usize, Directive)>,
    pub parallel_open: Option<usize>,
    pub parallel_close: Option<usize>,
    pub loop_directive: Option<usize>,
    pub payload: RegionPayload,
    pub features: BodyFeatures,
    pub category: RegionCategory,
    pub unsupported_reason: Option<String>,
    /// Shared id for sibling loops fused in one parallel region.
    pub fused_group: Option<usize>,
    /// 0-based physical line where the region starts (for diagnostics).
    pub start_line: usize,
}

impl AccRegion {
    pub fn directive(&self, kind: DirectiveKind) -> Option<&Directive> {
        self.directives.iter().find(|(_, d)| d.kind == kind).map(|(_, d)| d)
    }

    /// The collapse count requested by the loop-bearing directive (1 when
    /// no collapse clause is present).
    pub fn collapse_count(&self) -> usize {
        self.directives
            .iter()
            .filter_map(|(_, d)| d.clause("collapse"))
            .filter_map(|c| c.exprs().first().and_then(|e| e.trim().parse::<usize>().ok()))
            .next()
            .unwrap_or(1)
    }

    /// Reduction clause payloads across the governing directives.
    pub fn reductions(&self) -> Vec<(String, Vec<String>)> {
        let mut out = Vec::new();
        for (_, d) in &self.directives {
            for (op, vars) in d.reductions() {
                out.push((op.to_string(), vars.to_vec()));
            }
        }
        out
    }

    /// Every logical line owned by this region (directives, headers, body).
    pub fn owned_lines(&self) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some(i) = self.parallel_open {
            out.push(i);
        }
        if let Some(i) = self.parallel_close {
            out.push(i);
        }
        if let Some(i) = self.loop_directive {
            out.push(i);
        }
        match &self.payload {
            RegionPayload::Loops(nest) => {
                out.extend(nest.header_idx.iter().copied());
                out.extend(nest.end_idx.iter().copied());
                out.extend(nest.body.iter().copied());
            }
            RegionPayload::Block(lines) => out.extend(lines.iter().copied()),
        }
        out
    }
}

/// Detect call sites in a set of body lines. Every `call name(...)` and
/// every identifier followed by `(` that is neither a declared array nor an
/// intrinsic is reported, with purity resolution. Ambiguity surfaces as
/// `Unknown`, never as a guess.
pub fn detect_calls(
    logical: &[LogicalLine],
    body: &[usize],
    symbols: &SymbolTable,
) -> Vec<CallSite> {
    let mut out: Vec<CallSite> = Vec::new();
    let mut push = |name: &str, symbols: &SymbolTable| {
        let lname = name.to_ascii_lowercase();
        if out.iter().any(|c| c.callee == lname) {
            return;
        }
        let declared_pure = symbols.purity(&lname);
        out.push(CallSite {
            callee: lname,
            declared_pure,
        });
    };

    for &idx in body {
        let ll = &logical[idx];
        if ll.kind != LineKind::Code {
            continue;
        }
        let code = code_text(&ll.text);
        if let Some(w) = first_word(code) {
            if w.eq_ignore_ascii_case("call") {
                let rest = code.trim_start()[w.len()..].trim_start();
                if let Some(name) = first_word(rest) {
                    push(name, symbols);
                }
                continue;
            }
        }
        // Assignment left-hand sides are array elements, not calls.
        let scan_from = match find_assignment(code) {
            Some((lhs, _)) if parse_ref(lhs).is_some() => lhs.len() + 1,
            _ => 0,
        };
        let scan = &code[scan_from.min(code.len())..];
        let offset_base = scan.as_bytes().as_ptr() as usize - code.as_bytes().as_ptr() as usize;
        for (pos, word) in identifiers(scan) {
            let after = scan[pos + word.len()..].trim_start();
            if !after.starts_with('(') {
                continue;
            }
            let wl = word.to_ascii_lowercase();
            if fortran::KEYWORDS.contains(&wl.as_str()) || fortran::INTRINSICS.contains(&wl.as_str()) {
                continue;
            }
            if symbols.is_array(&wl, idx) {
                continue;
            }
            // Sections and substrings (`a(1:n)`) are never calls.
            if let Some((group, _)) = fortran::read_paren_group(after) {
                if fortran::split_top_level(group, ',')
                    .iter()
                    .any(|a| fortran::find_top_level(a, ':').is_some())
                {
                    continue;
                }
            }
            let _ = offset_base;
            push(word, symbols);
        }
    }
    out
}

fn scan_atomic(logical: &[LogicalLine], directive_idx: usize, kind: AtomicKind, limit: usize) -> AtomicUpdate {
    let stmt_idx = next_code_line(logical, directive_idx + 1)
        .filter(|&i| i < limit)
        .unwrap_or(directive_idx);
    let mut target = String::new();
    let mut target_args = None;
    let mut lhs_text = String::new();
    let mut form = UpdateForm::Other;

    if stmt_idx != directive_idx {
        let code = code_text(&logical[stmt_idx].text);
        if let Some((lhs, rhs)) = find_assignment(code) {
            if let Some((name, args)) = parse_ref(lhs) {
                target = name.to_ascii_lowercase();
                target_args = args;
                lhs_text = lhs.trim().to_string();
                form = parse_update_form(lhs, rhs);
            }
        }
    }
    AtomicUpdate {
        directive_idx,
        stmt_idx,
        kind,
        target,
        target_args,
        lhs_text,
        form,
    }
}

fn parse_update_form(lhs: &str, rhs: &str) -> UpdateForm {
    let lhs_sq = squeeze(lhs).to_ascii_lowercase();
    let rhs_trim = rhs.trim();
    // Binary form: rhs starts with the target reference followed by + or *.
    let rhs_sq = squeeze(rhs_trim).to_ascii_lowercase();
    if let Some(after) = rhs_sq.strip_prefix(&lhs_sq) {
        if let Some(op) = after.chars().next() {
            if op == '+' || op == '*' {
                // Recover the original (non-squeezed) remainder text.
                if let Some(pos) = op_position(rhs_trim, &lhs_sq) {
                    let rest = rhs_trim[pos + 1..].trim().to_string();
                    if !rest.is_empty() {
                        return UpdateForm::Binary { op, rest };
                    }
                }
            }
        }
    }
    // min/max form: `t = max(t, expr)`.
    if let Some((fname, Some(args))) = parse_ref(rhs_trim) {
        let f = fname.to_ascii_lowercase();
        if (f == "max" || f == "min") && args.len() == 2 {
            if squeeze(&args[0]).to_ascii_lowercase() == lhs_sq {
                return UpdateForm::MinMax {
                    op: f,
                    rest: args[1].trim().to_string(),
                };
            }
        }
    }
    UpdateForm::Other
}

/// Byte position in `rhs` of the operator that follows the leading target
/// reference (whose squeezed form is `lhs_sq`).
fn op_position(rhs: &str, lhs_sq: &str) -> Option<usize> {
    let mut matched = 0;
    for (i, c) in rhs.char_indices() {
        if c.is_whitespace() {
            continue;
        }
        if matched == lhs_sq.len() {
            return Some(i);
        }
        if lhs_sq[matched..].chars().next() == Some(c.to_ascii_lowercase()) {
            matched += c.len_utf8();
        } else {
            return None;
        }
    }
    None
}

struct RegionBuilder<'a> {
    logical: &'a [LogicalLine],
    directives: &'a BTreeMap<usize, Directive>,
    symbols: &'a SymbolTable,
    regions: Vec<AccRegion>,
    fused_counter: usize,
}

/// Build all accelerated regions of a file. Directive pairing errors are
/// structural errors carrying both line numbers.
pub fn build_regions(
    logical: &[LogicalLine],
    directives: &BTreeMap<usize, Directive>,
    symbols: &SymbolTable,
    config: &ToolConfig,
) -> Result<Vec<AccRegion>> {
    let mut b = RegionBuilder {
        logical,
        directives,
        symbols,
        regions: Vec::new(),
        fused_counter: 0,
    };
    b.check_host_data_pairing()?;

    let mut i = 0;
    while i < logical.len() {
        let Some(d) = directives.get(&i) else {
            i += 1;
            continue;
        };
        match d.kind {
            DirectiveKind::Parallel => {
                let close = b.find_region_close(i, DirectiveKind::Parallel, DirectiveKind::EndParallel)?;
                b.build_parallel_region(i, close, config)?;
                i = close + 1;
            }
            DirectiveKind::ParallelLoop => {
                i = b.build_combined_region(i, config)?;
            }
            DirectiveKind::Kernels => {
                let close = b.find_region_close(i, DirectiveKind::Kernels, DirectiveKind::EndKernels)?;
                b.build_kernels_region(i, close, config);
                i = close + 1;
            }
            DirectiveKind::Loop => {
                // Orphan loop directive outside any parallel region.
                i = b.build_loop_region(i, None, None, None, config)?;
            }
            DirectiveKind::EndParallel | DirectiveKind::EndKernels => {
                return Err(Error::structure(
                    logical[i].first_physical_index,
                    None,
                    format!("`{}` without a matching opening directive", if d.kind == DirectiveKind::EndParallel { "end parallel" } else { "end kernels" }),
                ));
            }
            _ => {
                i += 1;
            }
        }
    }
    Ok(b.regions)
}

impl<'a> RegionBuilder<'a> {
    fn check_host_data_pairing(&self) -> Result<()> {
        let mut open: Vec<usize> = Vec::new();
        for (&i, d) in self.directives {
            match d.kind {
                DirectiveKind::HostData => open.push(i),
                DirectiveKind::EndHostData => {
                    if open.pop().is_none() {
                        return Err(Error::structure(
                            self.logical[i].first_physical_index,
                            None,
                            "`end host_data` without a matching `host_data`",
                        ));
                    }
                }
                _ => {}
            }
        }
        if let Some(i) = open.pop() {
            return Err(Error::structure(
                self.logical[i].first_physical_index,
                None,
                "`host_data` without a matching `end host_data`",
            ));
        }
        Ok(())
    }

    fn find_region_close(
        &self,
        open: usize,
        open_kind: DirectiveKind,
        close_kind: DirectiveKind,
    ) -> Result<usize> {
        for (&j, d) in self.directives.range(open + 1..) {
            if d.kind == close_kind {
                return Ok(j);
            }
            if d.kind == open_kind || matches!((open_kind, d.kind), (DirectiveKind::Parallel, DirectiveKind::ParallelLoop)) {
                return Err(Error::structure(
                    self.logical[open].first_physical_index,
                    Some(self.logical[j].first_physical_index),
                    "nested compute regions are not supported",
                ));
            }
        }
        Err(Error::structure(
            self.logical[open].first_physical_index,
            None,
            "compute region is never closed",
        ))
    }

    fn region_has_async(directives: &[(usize, Directive)]) -> bool {
        directives
            .iter()
            .any(|(_, d)| d.has_clause("async") || d.has_clause("wait"))
    }

    fn build_parallel_region(&mut self, open: usize, close: usize, config: &ToolConfig) -> Result<()> {
        // Collect top-level loop directives inside the pair.
        let mut loop_dirs = Vec::new();
        let mut loose_code = Vec::new();
        let mut j = open + 1;
        while j < close {
            if let Some(d) = self.directives.get(&j) {
                if d.kind == DirectiveKind::Loop {
                    loop_dirs.push(j);
                    let target = next_code_line(self.logical, j + 1);
                    match target {
                        Some(t) if t < close => {
                            if let Ok(nest) = parse_loop_nest(self.logical, t) {
                                j = nest.end_idx[0] + 1;
                                continue;
                            }
                        }
                        _ => {}
                    }
                    j += 1;
                    continue;
                }
            }
            if self.logical[j].kind == LineKind::Code {
                loose_code.push(j);
            }
            j += 1;
        }

        if loop_dirs.is_empty() {
            // A bare parallel region executes its content redundantly on
            // every gang; there is no DC equivalent.
            let lines: Vec<usize> = (open + 1..close).collect();
            let features = self.block_features(&lines, config);
            self.regions.push(AccRegion {
                directives: vec![(open, self.directives[&open].clone())],
                parallel_open: Some(open),
                parallel_close: Some(close),
                loop_directive: None,
                payload: RegionPayload::Block(lines),
                features,
                category: RegionCategory::Unsupported,
                unsupported_reason: Some(
                    "parallel region without a loop directive requires manual conversion".into(),
                ),
                fused_group: None,
                start_line: self.logical[open].first_physical_index,
            });
            return Ok(());
        }

        let fused = if loop_dirs.len() > 1 {
            self.fused_counter += 1;
            Some(self.fused_counter)
        } else {
            None
        };
        let loose = !loose_code.is_empty();
        for &ld in &loop_dirs {
            let next = self.build_loop_region(ld, Some(open), Some(close), fused, config)?;
            if loose {
                if let Some(r) = self.regions.last_mut() {
                    r.category = RegionCategory::Unsupported;
                    r.unsupported_reason = Some(
                        "statements outside the bound loop nests in a parallel region".into(),
                    );
                }
            }
            let _ = next;
        }
        Ok(())
    }

    /// Build a region for a loop directive (or a combined parallel loop at
    /// top level). Returns the logical index to resume scanning from.
    fn build_loop_region(
        &mut self,
        dir_idx: usize,
        parallel_open: Option<usize>,
        parallel_close: Option<usize>,
        fused: Option<usize>,
        config: &ToolConfig,
    ) -> Result<usize> {
        let dir = self.directives[&dir_idx].clone();
        let start_line = self.logical[parallel_open.unwrap_or(dir_idx)].first_physical_index;
        let target = next_code_line(self.logical, dir_idx + 1).ok_or_else(|| {
            Error::structure(
                self.logical[dir_idx].first_physical_index,
                None,
                "loop directive is not followed by a `do` statement",
            )
        })?;

        let mut directives = Vec::new();
        if let Some(po) = parallel_open {
            directives.push((po, self.directives[&po].clone()));
        }
        directives.push((dir_idx, dir));

        let nest = match parse_loop_nest(self.logical, target) {
            Ok(nest) => nest,
            Err(e) => {
                // `do while` and friends: an unsupported region, not a hard stop.
                self.regions.push(AccRegion {
                    directives,
                    parallel_open,
                    parallel_close,
                    loop_directive: Some(dir_idx),
                    payload: RegionPayload::Block(vec![target]),
                    features: BodyFeatures::default(),
                    category: RegionCategory::Unsupported,
                    unsupported_reason: Some(e.to_string()),
                    fused_group: fused,
                    start_line,
                });
                return Ok(target + 1);
            }
        };
        let resume = nest.end_idx[0] + 1;
        let features = self.nest_features(&nest, &directives, config);
        let mut region = AccRegion {
            directives,
            parallel_open,
            parallel_close,
            loop_directive: Some(dir_idx),
            payload: RegionPayload::Loops(nest),
            features,
            category: RegionCategory::Unsupported,
            unsupported_reason: None,
            fused_group: fused,
            start_line,
        };
        let (cat, reason) = classify_region(&region, self.symbols, config);
        region.category = cat;
        region.unsupported_reason = reason;
        self.regions.push(region);
        Ok(resume)
    }

    fn build_combined_region(&mut self, dir_idx: usize, config: &ToolConfig) -> Result<usize> {
        let resume = self.build_loop_region(dir_idx, None, None, None, config)?;
        // Absorb an optional `end parallel (loop)` directly after the nest.
        let mut k = resume;
        while k < self.logical.len()
            && matches!(self.logical[k].kind, LineKind::Comment | LineKind::Blank)
        {
            k += 1;
        }
        if let Some(d) = self.directives.get(&k) {
            if d.kind == DirectiveKind::EndParallel {
                if let Some(r) = self.regions.last_mut() {
                    r.parallel_close = Some(k);
                }
                return Ok(k + 1);
            }
        }
        Ok(resume)
    }

    fn build_kernels_region(&mut self, open: usize, close: usize, config: &ToolConfig) {
        let lines: Vec<usize> = (open + 1..close).collect();
        let features = self.block_features(&lines, config);
        let mut region = AccRegion {
            directives: vec![(open, self.directives[&open].clone())],
            parallel_open: Some(open),
            parallel_close: Some(close),
            loop_directive: None,
            payload: RegionPayload::Block(lines),
            features,
            category: RegionCategory::Unsupported,
            unsupported_reason: None,
            fused_group: None,
            start_line: self.logical[open].first_physical_index,
        };
        let (cat, reason) = classify_region(&region, self.symbols, config);
        region.category = cat;
        region.unsupported_reason = reason;
        self.regions.push(region);
    }

    fn nest_features(
        &self,
        nest: &LoopNest,
        directives: &[(usize, Directive)],
        _config: &ToolConfig,
    ) -> BodyFeatures {
        let mut f = BodyFeatures {
            has_async: Self::region_has_async(directives),
            ..BodyFeatures::default()
        };
        let limit = *nest.end_idx.last().unwrap();
        for &idx in &nest.body {
            if let Some(d) = self.directives.get(&idx) {
                match d.kind {
                    DirectiveKind::Atomic => {
                        f.atomics.push(scan_atomic(self.logical, idx, d.atomic_kind.unwrap_or_default(), limit));
                    }
                    DirectiveKind::Loop => f.inner_loop_directives.push(idx),
                    _ => f.foreign_directives.push(idx),
                }
            }
        }
        let atomic_stmts: BTreeSet<usize> = f.atomics.iter().map(|a| a.stmt_idx).collect();
        let call_lines: Vec<usize> = nest
            .body
            .iter()
            .copied()
            .filter(|i| !atomic_stmts.contains(i))
            .collect();
        f.calls = detect_calls(self.logical, &call_lines, self.symbols);
        f.has_loops = nest.body.iter().any(|&i| {
            self.logical[i].kind == LineKind::Code && parse_do(code_text(&self.logical[i].text)).is_some()
        });
        f
    }

    fn block_features(&self, lines: &[usize], _config: &ToolConfig) -> BodyFeatures {
        let mut f = BodyFeatures::default();
        let mut skip_until = 0usize;
        for &idx in lines {
            if idx < skip_until {
                continue;
            }
            let ll = &self.logical[idx];
            match ll.kind {
                LineKind::AccDirective => {
                    if let Some(d) = self.directives.get(&idx) {
                        match d.kind {
                            DirectiveKind::Atomic => f.foreign_directives.push(idx),
                            DirectiveKind::Loop => f.inner_loop_directives.push(idx),
                            _ => f.foreign_directives.push(idx),
                        }
                    }
                }
                LineKind::Code => {
                    let code = code_text(&ll.text);
                    if parse_do(code).is_some() {
                        f.has_loops = true;
                        if let Ok(nest) = parse_loop_nest(self.logical, idx) {
                            skip_until = nest.end_idx[0] + 1;
                        }
                        continue;
                    }
                    if let Some((lhs, rhs)) = find_assignment(code) {
                        if let Some((name, None)) = parse_ref(lhs) {
                            if let Some(ir) = parse_intrinsic_reduction(lhs, rhs, idx) {
                                f.intrinsic_reductions.push(ir);
                                continue;
                            }
                            if self.symbols.is_array(name, idx) {
                                f.array_syntax.push(idx);
                                continue;
                            }
                        }
                    }
                    f.opaque_statements.push(idx);
                }
                _ => {}
            }
        }
        let code_lines: Vec<usize> = lines.to_vec();
        f.calls = detect_calls(self.logical, &code_lines, self.symbols);
        f.has_async = false;
        f
    }
}

fn parse_intrinsic_reduction(lhs: &str, rhs: &str, idx: usize) -> Option<IntrinsicReduction> {
    let (fname, args) = parse_ref(rhs)?;
    let args = args?;
    let f = fname.to_ascii_lowercase();
    if !matches!(f.as_str(), "sum" | "minval" | "maxval") || args.len() != 1 {
        return None;
    }
    // Whole-array argument only: a bare name, no sections or masks.
    let (arr, arr_args) = parse_ref(&args[0])?;
    if arr_args.is_some() {
        return None;
    }
    Some(IntrinsicReduction {
        stmt_idx: idx,
        lhs: lhs.trim().to_string(),
        func: f,
        array: arr.to_string(),
    })
}

/// Deterministic classification following the precedence
/// Unsupported > Kernels* > ArrayReductionAtomic > ScalarReduction >
/// AtomicNonReduction > RoutineBearingLoop > SimpleCollapse.
pub fn classify_region(
    region: &AccRegion,
    _symbols: &SymbolTable,
    _config: &ToolConfig,
) -> (RegionCategory, Option<String>) {
    if region.category == RegionCategory::Unsupported && region.unsupported_reason.is_some() {
        return (RegionCategory::Unsupported, region.unsupported_reason.clone());
    }
    let f = &region.features;
    match &region.payload {
        RegionPayload::Block(_) => {
            // Kernels-style region.
            if !f.intrinsic_reductions.is_empty() {
                (RegionCategory::KernelsIntrinsic, None)
            } else if !f.array_syntax.is_empty() {
                (RegionCategory::KernelsArraySyntax, None)
            } else if f.has_loops {
                (RegionCategory::KernelsLoops, None)
            } else {
                (
                    RegionCategory::Unsupported,
                    Some("kernels region without recognizable loops, array syntax, or intrinsics".into()),
                )
            }
        }
        RegionPayload::Loops(nest) => {
            if nest.is_concurrent {
                return (RegionCategory::AlreadyDC, None);
            }
            if !f.foreign_directives.is_empty() {
                return (
                    RegionCategory::Unsupported,
                    Some("unexpected directive inside the loop body".into()),
                );
            }
            let n = region.collapse_count();
            if n > nest.perfectly_nested_depth {
                return (
                    RegionCategory::Unsupported,
                    Some(format!(
                        "collapse({n}) exceeds the perfectly nested depth {}; manual intervention required",
                        nest.perfectly_nested_depth
                    )),
                );
            }
            if !f.atomics.is_empty() && f.atomics.iter().all(|a| a.is_array_reduction(&nest.loops)) {
                (RegionCategory::ArrayReductionAtomic, None)
            } else if !region.reductions().is_empty() {
                (RegionCategory::ScalarReduction, None)
            } else if !f.atomics.is_empty() {
                (RegionCategory::AtomicNonReduction, None)
            } else if !f.calls.is_empty() {
                (RegionCategory::RoutineBearingLoop, None)
            } else {
                (RegionCategory::SimpleCollapse, None)
            }
        }
    }
}

/// Parse every directive line of a file up front.
pub fn parse_all_directives(logical: &[LogicalLine]) -> Result<BTreeMap<usize, Directive>> {
    let mut out = BTreeMap::new();
    for (idx, ll) in logical.iter().enumerate() {
        if ll.kind == LineKind::AccDirective {
            out.insert(idx, parse_directive(ll)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::SourceFile;

    fn setup(text: &str) -> (Vec<LogicalLine>, BTreeMap<usize, Directive>, SymbolTable, ToolConfig) {
        let src = SourceFile::from_text("t.f90", text);
        let logical = src.logical_lines().unwrap();
        let directives = parse_all_directives(&logical).unwrap();
        let config = ToolConfig::default();
        let symbols = SymbolTable::build(&logical, &config);
        (logical, directives, symbols, config)
    }

    fn regions_of(text: &str, config: Option<ToolConfig>) -> Vec<AccRegion> {
        let src = SourceFile::from_text("t.f90", text);
        let logical = src.logical_lines().unwrap();
        let directives = parse_all_directives(&logical).unwrap();
        let config = config.unwrap_or_default();
        let symbols = SymbolTable::build(&logical, &config);
        build_regions(&logical, &directives, &symbols, &config).unwrap()
    }

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

    fn shapes_config() -> ToolConfig {
        ToolConfig::parse(
            "array_shape.a = n1, n2, n3\narray_shape.b = n1, n2, n3\narray_shape.c = n1, n2, n3\narray_shape.array = n1, n2\narray_shape.sum0 = n1\n",
        )
        .unwrap()
    }

    #[test]
    fn triple_nest_parses() {
        let (logical, _, _, _) = setup(TRIPLE);
        let nest = parse_loop_nest(&logical, 2).unwrap();
        assert_eq!(nest.loops.len(), 3);
        assert_eq!(nest.perfectly_nested_depth, 3);
        assert_eq!(
            nest.loops.iter().map(|c| c.var.as_str()).collect::<Vec<_>>(),
            ["k", "j", "i"]
        );
        assert_eq!(nest.loops[0].lower, "1");
        assert_eq!(nest.loops[0].upper, "n3");
        assert_eq!(nest.body, vec![5]);
    }

    #[test]
    fn single_loop_depth_one() {
        let (logical, _, _, _) = setup("do i=1,n1\n  x = x + 1\nenddo\n");
        let nest = parse_loop_nest(&logical, 0).unwrap();
        assert_eq!(nest.perfectly_nested_depth, 1);
        assert_eq!(nest.loops.len(), 1);
    }

    /// Hand-labeled fixture: a statement between the k and j headers limits
    /// the perfect depth to 1.
    #[test]
    fn statement_between_headers_limits_depth() {
        let text = "\
do k=1,n3
  x = k
  do j=1,n2
    do i=1,n1
      a(i,j,k)=0.
    enddo
  enddo
enddo
";
        let (logical, _, _, _) = setup(text);
        let nest = parse_loop_nest(&logical, 0).unwrap();
        assert_eq!(nest.perfectly_nested_depth, 1);
        assert_eq!(nest.loops.len(), 1);
    }

    #[test]
    fn statement_between_enddos_limits_depth() {
        let text = "\
do k=1,n3
  do j=1,n2
    do i=1,n1
      a(i,j,k)=0.
    enddo
    x = 1
  enddo
enddo
";
        let (logical, _, _, _) = setup(text);
        let nest = parse_loop_nest(&logical, 0).unwrap();
        assert_eq!(nest.loops.len(), 3);
        assert_eq!(nest.perfectly_nested_depth, 2);
    }

    #[test]
    fn unmatched_enddo_is_parse_error() {
        let (logical, _, _, _) = setup("do i=1,n1\n  x = 1\n");
        assert!(parse_loop_nest(&logical, 0).is_err());
    }

    #[test]
    fn listing_region_structure() {
        let regions = regions_of(TRIPLE, Some(shapes_config()));
        assert_eq!(regions.len(), 1);
        let r = &regions[0];
        assert_eq!(r.directives.len(), 2);
        assert_eq!(r.directives[0].1.kind, DirectiveKind::Parallel);
        assert_eq!(r.directives[1].1.kind, DirectiveKind::Loop);
        assert_eq!(r.category, RegionCategory::SimpleCollapse);
        assert_eq!(r.collapse_count(), 3);
    }

    #[test]
    fn no_directives_no_regions() {
        let regions = regions_of("do i=1,n\n  x = 1\nenddo\n", None);
        assert!(regions.is_empty());
    }

    #[test]
    fn fused_siblings_share_group() {
        let text = "\
!$acc parallel default(present)
!$acc loop
do i=1,n1
  a(i)=0.
enddo
!$acc loop
do i=1,n1
  b(i)=0.
enddo
!$acc end parallel
";
        let cfg = ToolConfig::parse("array_shape.a = n1\narray_shape.b = n1\n").unwrap();
        let regions = regions_of(text, Some(cfg));
        assert_eq!(regions.len(), 2);
        assert!(regions[0].fused_group.is_some());
        assert_eq!(regions[0].fused_group, regions[1].fused_group);
    }

    #[test]
    fn unmatched_end_parallel_is_structure_error() {
        let src = SourceFile::from_text("t.f90", "!$acc end parallel\n");
        let logical = src.logical_lines().unwrap();
        let directives = parse_all_directives(&logical).unwrap();
        let config = ToolConfig::default();
        let symbols = SymbolTable::build(&logical, &config);
        let err = build_regions(&logical, &directives, &symbols, &config).unwrap_err();
        assert!(matches!(err, Error::Structure { .. }));
    }

    #[test]
    fn unclosed_parallel_reports_open_line() {
        let src = SourceFile::from_text("t.f90", "x = 1\n!$acc parallel\ndo i=1,n\nenddo\n");
        let logical = src.logical_lines().unwrap();
        let directives = parse_all_directives(&logical).unwrap();
        let config = ToolConfig::default();
        let symbols = SymbolTable::build(&logical, &config);
        let err = build_regions(&logical, &directives, &symbols, &config).unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn array_reduction_classification() {
        let regions = regions_of(ARRAY_REDUCTION, Some(shapes_config()));
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].category, RegionCategory::ArrayReductionAtomic);
        let a = &regions[0].features.atomics[0];
        assert_eq!(a.target, "sum0");
        assert!(matches!(a.form, UpdateForm::Binary { op: '+', .. }));
    }

    #[test]
    fn scalar_reduction_classification() {
        let text = "!$acc parallel loop reduction(+:s)\ndo i=1,n1\n  s = s + q(i)\nenddo\n";
        let cfg = ToolConfig::parse("array_shape.q = n1\n").unwrap();
        let regions = regions_of(text, Some(cfg));
        assert_eq!(regions[0].category, RegionCategory::ScalarReduction);
    }

    #[test]
    fn atomic_with_all_indices_is_non_reduction() {
        let text = "\
!$acc parallel loop collapse(2)
do j=1,n2
  do i=1,n1
!$acc atomic update
    w(i,j)=w(i,j)+1.
  enddo
enddo
";
        let cfg = ToolConfig::parse("array_shape.w = n1, n2\n").unwrap();
        let regions = regions_of(text, Some(cfg));
        assert_eq!(regions[0].category, RegionCategory::AtomicNonReduction);
    }

    #[test]
    fn computed_index_atomic_is_non_reduction() {
        let text = "\
!$acc parallel loop
do i=1,n1
!$acc atomic update
  cnt(bin(i))=cnt(bin(i))+1
enddo
";
        let cfg = ToolConfig::parse("array_shape.cnt = m\narray_shape.bin = n1\n").unwrap();
        let regions = regions_of(text, Some(cfg));
        assert_eq!(regions[0].category, RegionCategory::AtomicNonReduction);
    }

    #[test]
    fn do_while_region_is_unsupported() {
        let regions = regions_of("!$acc parallel loop\ndo while (x < 3)\n  x = x + 1\nenddo\n", None);
        assert_eq!(regions[0].category, RegionCategory::Unsupported);
    }

    #[test]
    fn collapse_beyond_depth_is_unsupported() {
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
        let regions = regions_of(text, Some(cfg));
        assert_eq!(regions[0].category, RegionCategory::Unsupported);
        assert!(regions[0].unsupported_reason.as_ref().unwrap().contains("collapse(2)"));
    }

    #[test]
    fn dc_loop_behind_directive_is_already_dc() {
        let regions = regions_of(
            "!$acc parallel loop\ndo concurrent (i=1:n1)\n  a(i) = 0.\nenddo\n",
            Some(ToolConfig::parse("array_shape.a = n1\n").unwrap()),
        );
        assert_eq!(regions[0].category, RegionCategory::AlreadyDC);
    }

    #[test]
    fn kernels_classifications() {
        let cfg = || {
            ToolConfig::parse("array_shape.a = n1, n2\narray_shape.b = n1, n2\narray_shape.c = n1, n2\n")
                .unwrap()
        };
        let r = regions_of("!$acc kernels\ns = MINVAL(a)\n!$acc end kernels\n", Some(cfg()));
        assert_eq!(r[0].category, RegionCategory::KernelsIntrinsic);
        let r = regions_of("!$acc kernels\na = b + c\n!$acc end kernels\n", Some(cfg()));
        assert_eq!(r[0].category, RegionCategory::KernelsArraySyntax);
        let r = regions_of(
            "!$acc kernels\ndo i=1,n1\n  x = x + 1\nenddo\n!$acc end kernels\n",
            Some(cfg()),
        );
        assert_eq!(r[0].category, RegionCategory::KernelsLoops);
    }

    #[test]
    fn call_detection_with_whitelist() {
        let text = "!$acc parallel loop\ndo i=1,n1\n  call boost(x)\nenddo\n";
        let cfg = ToolConfig::parse("purity_whitelist = boost\n").unwrap();
        let regions = regions_of(text, Some(cfg));
        assert_eq!(regions[0].category, RegionCategory::RoutineBearingLoop);
        assert_eq!(
            regions[0].features.calls,
            vec![CallSite { callee: "boost".into(), declared_pure: Purity::Pure }]
        );
    }

    #[test]
    fn arithmetic_only_body_has_no_calls() {
        let (logical, _, symbols, _) = setup("do i=1,n1\n  x = x*2 + 1\nenddo\n");
        let calls = detect_calls(&logical, &[1], &symbols);
        assert!(calls.is_empty());
    }

    #[test]
    fn undeclared_paren_ident_is_unknown_call() {
        let (logical, _, symbols, _) = setup("y = interp(a,b)\n");
        let calls = detect_calls(&logical, &[0], &symbols);
        assert_eq!(
            calls,
            vec![CallSite { callee: "interp".into(), declared_pure: Purity::Unknown }]
        );
    }

    #[test]
    fn in_file_purity_resolution() {
        let text = "\
pure subroutine boost(x)
  real :: x
end subroutine boost
subroutine rng(x)
  real :: x
end subroutine rng
program main
  real :: q(n1)
!$acc parallel loop
do i=1,n1
  call boost(q(i))
  call rng(q(i))
enddo
end program main
";
        let (logical, _, symbols, _) = setup(text);
        assert_eq!(symbols.purity("boost"), Purity::Pure);
        assert_eq!(symbols.purity("rng"), Purity::NotPure);
        assert_eq!(symbols.purity("mystery"), Purity::Unknown);
        let _ = logical;
    }

    #[test]
    fn declared_array_is_not_a_call() {
        let text = "subroutine s\n  real :: q(n1)\n  y = q(i) + 1\nend subroutine s\n";
        let (logical, _, symbols, _) = setup(text);
        let calls = detect_calls(&logical, &[2], &symbols);
        assert!(calls.is_empty());
    }

    #[test]
    fn classification_is_deterministic() {
        let cfg = shapes_config();
        let r1 = regions_of(ARRAY_REDUCTION, Some(cfg.clone()));
        let r2 = regions_of(ARRAY_REDUCTION, Some(cfg));
        assert_eq!(r1[0].category, r2[0].category);
    }

    #[test]
    fn fresh_names_avoid_scope_identifiers() {
        let (logical, _, symbols, _) = setup("tmp = 1\nx = tmp\n");
        let name = symbols.fresh_name("tmp", 0, &BTreeSet::new());
        assert_eq!(name, "tmp0");
        let _ = logical;
    }
}
