//! Line-level rewrite builders: collapse-to-DC, array-reduction
//! restructuring, and kernels expansion. Each builder returns an edit set
//! keyed by logical-line index; untouched lines keep their original bytes.

use std::collections::{BTreeMap, BTreeSet};

use crate::analysis::{
    AccRegion, AtomicUpdate, IntrinsicReduction, LoopNest, RegionPayload, SymbolTable, UpdateForm,
};
use crate::config::ToolConfig;
use crate::directive::DirectiveKind;
use crate::fortran::{
    self, code_text, contains_ident, find_top_level, identifiers, parse_do, read_paren_group,
    split_top_level, DimSpec, DoStmt, LoopControl,
};
use crate::source::{LineKind, LogicalLine};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Edit {
    Remove,
    Replace(Vec<String>),
}

pub(crate) type Edits = BTreeMap<usize, Edit>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum AtomicAction {
    Keep,
    Remove,
}

#[derive(Debug, Default)]
pub(crate) struct ConvOut {
    pub edits: Edits,
    /// `!$acc loop` lines removed from inside the converted body.
    pub removed_inner_loop_dirs: Vec<usize>,
}

fn indent_len(s: &str) -> usize {
    s.chars().count()
}

fn spaces(n: usize) -> String {
    " ".repeat(n)
}

/// Indentation step inferred from the nest (header-to-header), falling back
/// to the first body line, then to two spaces.
pub(crate) fn indent_unit(logical: &[LogicalLine], nest: &LoopNest) -> usize {
    let d0 = indent_len(&logical[nest.header_idx[0]].indent);
    if nest.header_idx.len() >= 2 {
        let d1 = indent_len(&logical[nest.header_idx[1]].indent);
        if d1 > d0 {
            return d1 - d0;
        }
    }
    for &i in &nest.body {
        if logical[i].kind == LineKind::Code {
            let db = indent_len(&logical[i].indent);
            if db > d0 {
                return (db - d0).min(8);
            }
        }
    }
    2
}

fn control_spec(c: &LoopControl) -> String {
    let mut s = format!("{}={}:{}", c.var, c.lower, c.upper);
    if let Some(st) = &c.stride {
        s.push(':');
        s.push_str(st);
    }
    s
}

/// Render a `do concurrent` header, outermost index first, colon triplets,
/// with optional `reduce` clauses appended.
pub(crate) fn dc_header(controls: &[&LoopControl], reduces: &[(String, Vec<String>)]) -> String {
    let specs: Vec<String> = controls.iter().map(|c| control_spec(c)).collect();
    let mut s = format!("do concurrent ({})", specs.join(","));
    for (op, vars) in reduces {
        s.push_str(&format!(" reduce({}:{})", op, vars.join(",")));
    }
    s
}

/// Re-indent one logical line to `new_first_len` columns, shifting the
/// continuation lines of its span by the same delta.
fn reindent(logical: &[LogicalLine], lines: &[String], idx: usize, new_first_len: usize) -> Vec<String> {
    let ll = &logical[idx];
    let old_len = indent_len(&ll.indent);
    let mut out = Vec::with_capacity(ll.span);
    for p in 0..ll.span {
        let raw = &lines[ll.first_physical_index + p];
        let body = raw.trim_start();
        let old = indent_len(&raw[..raw.len() - body.len()]);
        let shifted = (old + new_first_len).saturating_sub(old_len);
        out.push(format!("{}{}", spaces(shifted), body));
    }
    out
}

pub(crate) struct CollapseSpec<'a> {
    pub region: &'a AccRegion,
    pub nest: &'a LoopNest,
    /// How many outer loops to merge into the DC header.
    pub n: usize,
    pub reduces: Vec<(String, Vec<String>)>,
    pub atomic_action: AtomicAction,
}

/// Replace the outer `n` loops of a nest with a single `do concurrent`
/// header, drop the governing directive lines, and re-base the body by one
/// level. The enclosing `enddo`s collapse to one.
pub(crate) fn conv_collapse(
    logical: &[LogicalLine],
    lines: &[String],
    spec: &CollapseSpec,
) -> ConvOut {
    let nest = spec.nest;
    let n = spec.n.clamp(1, nest.loops.len());
    let h0 = nest.header_idx[0];
    let e0 = nest.end_idx[0];
    let dc_indent = logical[h0].indent.clone();
    let unit = indent_unit(logical, nest);

    let mut out = ConvOut::default();
    for idx in [spec.region.parallel_open, spec.region.parallel_close, spec.region.loop_directive]
        .into_iter()
        .flatten()
    {
        out.edits.insert(idx, Edit::Remove);
    }
    let controls: Vec<&LoopControl> = nest.loops[..n].iter().collect();
    out.edits.insert(
        h0,
        Edit::Replace(vec![format!("{dc_indent}{}", dc_header(&controls, &spec.reduces))]),
    );
    for m in 1..n {
        out.edits.insert(nest.header_idx[m], Edit::Remove);
        out.edits.insert(nest.end_idx[m], Edit::Remove);
    }
    if n > 1 {
        out.edits
            .insert(e0, Edit::Replace(vec![format!("{}enddo", logical[e0].indent)]));

        // Base indentation: shallowest code line of the innermost collapsed
        // loop; the rewritten body sits one unit inside the DC header.
        let inner_h = nest.header_idx[n - 1];
        let inner_e = nest.end_idx[n - 1];
        let base = (inner_h + 1..inner_e)
            .filter(|i| logical[*i].kind == LineKind::Code)
            .map(|i| indent_len(&logical[i].indent))
            .min()
            .unwrap_or(indent_len(&logical[inner_h].indent) + unit);
        let new_base = indent_len(&dc_indent) + unit;
        for idx in h0 + 1..e0 {
            if out.edits.contains_key(&idx) {
                continue;
            }
            match logical[idx].kind {
                LineKind::Blank | LineKind::AccDirective => {}
                LineKind::Code | LineKind::Comment => {
                    let rel = indent_len(&logical[idx].indent).saturating_sub(base);
                    out.edits
                        .insert(idx, Edit::Replace(reindent(logical, lines, idx, new_base + rel)));
                }
            }
        }
    }

    for a in &spec.region.features.atomics {
        if spec.atomic_action == AtomicAction::Remove {
            out.edits.insert(a.directive_idx, Edit::Remove);
        }
    }
    for &idx in &spec.region.features.inner_loop_directives {
        out.edits.insert(idx, Edit::Remove);
        out.removed_inner_loop_dirs.push(idx);
    }
    out
}

fn reduce_init(op: &str, tmp: &str) -> String {
    match op {
        "+" => "0.".to_string(),
        "*" => "1.".to_string(),
        "max" => format!("-HUGE({tmp})"),
        "min" => format!("HUGE({tmp})"),
        _ => "0.".to_string(),
    }
}

fn atomic_reduce_op(form: &UpdateForm) -> Option<(String, String)> {
    // (reduce operator, accumulation template rest)
    match form {
        UpdateForm::Binary { op: '+', rest } => Some(("+".into(), rest.clone())),
        UpdateForm::Binary { op: '*', rest } => Some(("*".into(), rest.clone())),
        UpdateForm::MinMax { op, rest } => Some((op.clone(), rest.clone())),
        _ => None,
    }
}

/// The loop-interchange restructuring of an array reduction: an outer DC
/// over the target's indices and an inner DC `reduce` accumulating into a
/// fresh scalar, assigned to the target after the inner loop.
pub(crate) fn conv_interchange(
    logical: &[LogicalLine],
    region: &AccRegion,
    nest: &LoopNest,
    symbols: &SymbolTable,
) -> Result<ConvOut, String> {
    if region.features.atomics.len() != 1 {
        return Err("multiple atomic updates in one reduction loop".into());
    }
    if !region.reductions().is_empty() {
        return Err("mixed reduction clause and atomic update".into());
    }
    let a: &AtomicUpdate = &region.features.atomics[0];
    for &idx in &nest.body {
        if idx != a.directive_idx && idx != a.stmt_idx && logical[idx].kind == LineKind::Code {
            return Err("additional statements beside the atomic update".into());
        }
    }
    let (op, rest) = atomic_reduce_op(&a.form)
        .ok_or_else(|| "atomic statement is not in update form".to_string())?;
    if contains_ident(&rest, &a.target) {
        return Err("reduction target appears inside the accumulated expression".into());
    }
    let (outer, inner) = a.split_controls(&nest.loops);
    if inner.is_empty() {
        return Err("no reduction dimension".into());
    }

    let mut taken = BTreeSet::new();
    let tmp = symbols.fresh_name("tmp", nest.header_idx[0], &taken);
    taken.insert(tmp.clone());

    let h0 = nest.header_idx[0];
    let d0 = logical[h0].indent.clone();
    let unit = indent_unit(logical, nest);
    let inner_ind = if outer.is_empty() {
        d0.clone()
    } else {
        format!("{d0}{}", spaces(unit))
    };
    let body_ind = format!("{inner_ind}{}", spaces(unit));

    let mut block = Vec::new();
    if !outer.is_empty() {
        block.push(format!("{d0}{}", dc_header(&outer, &[])));
    }
    block.push(format!("{inner_ind}{tmp}={}", reduce_init(&op, &tmp)));
    block.push(format!(
        "{inner_ind}{}",
        dc_header(&inner, &[(op.clone(), vec![tmp.clone()])])
    ));
    match &a.form {
        UpdateForm::Binary { op, rest } => block.push(format!("{body_ind}{tmp}={tmp}{op}{rest}")),
        UpdateForm::MinMax { op, rest } => block.push(format!("{body_ind}{tmp}={op}({tmp},{rest})")),
        UpdateForm::Other => unreachable!(),
    }
    block.push(format!("{inner_ind}enddo"));
    block.push(format!("{inner_ind}{}={tmp}", a.lhs_text));
    if !outer.is_empty() {
        block.push(format!("{d0}enddo"));
    }

    let mut out = ConvOut::default();
    for idx in region.owned_lines() {
        out.edits.insert(idx, Edit::Remove);
    }
    out.edits.insert(h0, Edit::Replace(block));
    Ok(out)
}

/// Scalar atomic accumulations (`s = s + expr` under `!$acc atomic`) carry
/// straight over to a DC `reduce` clause; returns the clauses or the reason
/// they cannot.
pub(crate) fn scalar_atomic_reduces(region: &AccRegion) -> Result<Vec<(String, Vec<String>)>, String> {
    let mut reduces: Vec<(String, Vec<String>)> = Vec::new();
    for a in &region.features.atomics {
        if a.target_args.is_some() {
            return Err("atomic target is array-indexed; no automatic rewrite".into());
        }
        let (op, rest) = match atomic_reduce_op(&a.form) {
            Some(v) => v,
            None => return Err("atomic statement is not in update form".into()),
        };
        if contains_ident(&rest, &a.target) {
            return Err("reduction target appears inside the accumulated expression".into());
        }
        if !reduces.iter().any(|(o, v)| *o == op && v[0] == a.target) {
            reduces.push((op, vec![a.target.clone()]));
        }
    }
    Ok(reduces)
}

fn pick_index_names(
    symbols: &SymbolTable,
    at: usize,
    rank: usize,
    taken: &mut BTreeSet<String>,
) -> Vec<String> {
    const LETTERS: [&str; 6] = ["i", "j", "k", "l", "m", "n"];
    let in_scope = symbols.identifiers_at(at);
    let mut names = Vec::with_capacity(rank);
    for d in 0..rank {
        // i0, j0, ... bumping the digit on collision: i1, i2, ...
        let name = (0..)
            .map(|s| format!("{}{s}", LETTERS[d % 6]))
            .find(|cand| !in_scope.contains(cand) && !taken.contains(cand))
            .unwrap();
        taken.insert(name.clone());
        names.push(name);
    }
    names
}

fn dims_to_controls(names: &[String], dims: &[DimSpec]) -> Option<Vec<LoopControl>> {
    let mut out = Vec::with_capacity(dims.len());
    for (name, dim) in names.iter().zip(dims) {
        out.push(LoopControl {
            var: name.clone(),
            lower: dim.lower_or_one().to_string(),
            upper: dim.upper.clone()?,
            stride: None,
        });
    }
    Some(out)
}

fn expand_intrinsic(
    logical: &[LogicalLine],
    ir: &IntrinsicReduction,
    symbols: &SymbolTable,
) -> Result<Vec<String>, String> {
    let dims = symbols
        .array_shape(&ir.array, ir.stmt_idx)
        .ok_or_else(|| format!("unknown shape for array `{}`", ir.array))?
        .clone();
    let mut taken: BTreeSet<String> = BTreeSet::new();
    taken.insert(ir.lhs.to_ascii_lowercase());
    let names = pick_index_names(symbols, ir.stmt_idx, dims.len(), &mut taken);
    let controls = dims_to_controls(&names, &dims)
        .ok_or_else(|| format!("array `{}` has assumed or deferred extents", ir.array))?;
    let ind = logical[ir.stmt_idx].indent.clone();
    let unit = 2;
    let lhs = &ir.lhs;
    let subscript = names.join(",");
    let element = format!("{}({subscript})", ir.array);
    let (init, op, acc) = match ir.func.as_str() {
        "sum" => ("0.".to_string(), "+", format!("{lhs} + {element}")),
        "minval" => (format!("HUGE({lhs})"), "min", format!("min({lhs}, {element})")),
        "maxval" => (format!("-HUGE({lhs})"), "max", format!("max({lhs}, {element})")),
        other => return Err(format!("unsupported intrinsic `{other}`")),
    };
    let refs: Vec<&LoopControl> = controls.iter().collect();
    Ok(vec![
        format!("{ind}{lhs} = {init}"),
        format!(
            "{ind}{}",
            dc_header(&refs, &[(op.to_string(), vec![lhs.clone()])])
        ),
        format!("{ind}{}{lhs} = {acc}", spaces(unit)),
        format!("{ind}enddo"),
    ])
}

fn expand_array_syntax(
    logical: &[LogicalLine],
    idx: usize,
    symbols: &SymbolTable,
) -> Result<Vec<String>, String> {
    let code = code_text(&logical[idx].text);
    let (lhs, _) = fortran::find_assignment(code).ok_or("not an assignment")?;
    let lhs_name = lhs.trim();
    let lhs_dims = symbols
        .array_shape(lhs_name, idx)
        .ok_or_else(|| format!("unknown shape for array `{lhs_name}`"))?
        .clone();
    if lhs_dims.iter().any(|d| !d.known()) {
        return Err(format!("array `{lhs_name}` has assumed or deferred extents"));
    }

    // Validate every array mentioned in the statement.
    for (pos, word) in identifiers(code) {
        let after = code[pos + word.len()..].trim_start();
        if let Some(dims) = symbols.array_shape(word, idx) {
            if after.starts_with('(') {
                if let Some((group, _)) = read_paren_group(after) {
                    if split_top_level(group, ',')
                        .iter()
                        .any(|a| find_top_level(a, ':').is_some())
                    {
                        return Err(format!("array section on `{word}` requires manual conversion"));
                    }
                }
                continue; // explicit element reference, left alone
            }
            if !conformable(&lhs_dims, dims) {
                return Err(format!("array `{word}` is not conformable with `{lhs_name}`"));
            }
        }
    }

    let mut taken: BTreeSet<String> = BTreeSet::new();
    let names = pick_index_names(symbols, idx, lhs_dims.len(), &mut taken);
    let controls = dims_to_controls(&names, &lhs_dims).ok_or("unknown extents")?;
    let subscript = format!("({})", names.join(","));

    // Subscript every bare reference to a known array.
    let mut stmt = String::new();
    let mut last = 0;
    for (pos, word) in identifiers(code) {
        let after = code[pos + word.len()..].trim_start();
        if symbols.array_shape(word, idx).is_some() && !after.starts_with('(') {
            stmt.push_str(&code[last..pos + word.len()]);
            stmt.push_str(&subscript);
            last = pos + word.len();
        }
    }
    stmt.push_str(&code[last..]);

    let ind = logical[idx].indent.clone();
    let refs: Vec<&LoopControl> = controls.iter().collect();
    Ok(vec![
        format!("{ind}{}", dc_header(&refs, &[])),
        format!("{ind}{}{}", spaces(2), stmt.trim()),
        format!("{ind}enddo"),
    ])
}

fn conformable(a: &[DimSpec], b: &[DimSpec]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            let eq = |p: &str, q: &str| {
                fortran::squeeze(p).eq_ignore_ascii_case(&fortran::squeeze(q))
            };
            eq(x.lower_or_one(), y.lower_or_one())
                && match (&x.upper, &y.upper) {
                    (Some(p), Some(q)) => eq(p, q),
                    _ => false,
                }
        })
}

/// Expand a kernels region into explicit DC loops: contained `do` nests are
/// converted like parallel-loop regions, whole-array assignments become
/// rank-matching DC loops, and reduction intrinsics become DC reduce loops.
pub(crate) fn conv_kernels(
    logical: &[LogicalLine],
    lines: &[String],
    region: &AccRegion,
    symbols: &SymbolTable,
    _config: &ToolConfig,
) -> Result<ConvOut, String> {
    let RegionPayload::Block(block) = &region.payload else {
        return Err("not a kernels region".into());
    };
    let mut out = ConvOut::default();
    for idx in [region.parallel_open, region.parallel_close].into_iter().flatten() {
        out.edits.insert(idx, Edit::Remove);
    }

    let mut skip_until = 0usize;
    for &idx in block {
        if idx < skip_until {
            continue;
        }
        let ll = &logical[idx];
        match ll.kind {
            LineKind::Comment | LineKind::Blank => {}
            LineKind::AccDirective => {
                return Err("directive inside kernels region requires manual conversion".into());
            }
            LineKind::Code => {
                let code = code_text(&ll.text);
                match parse_do(code) {
                    Some(DoStmt::Concurrent { .. }) => {
                        let nest = parse_loop_nest(logical, idx)?;
                        skip_until = nest.end_idx[0] + 1;
                    }
                    Some(DoStmt::Counted(_)) => {
                        let nest = parse_loop_nest(logical, idx)?;
                        for &b in &nest.body {
                            if logical[b].kind == LineKind::AccDirective {
                                return Err(
                                    "directive inside kernels loop requires manual conversion".into(),
                                );
                            }
                        }
                        // Same output as the parallel-loop path on this loop:
                        // no collapse clause means only the outer loop converts.
                        let ind = logical[idx].indent.clone();
                        let controls = [&nest.loops[0]];
                        out.edits.insert(
                            idx,
                            Edit::Replace(vec![format!("{ind}{}", dc_header(&controls, &[]))]),
                        );
                        skip_until = nest.end_idx[0] + 1;
                    }
                    Some(_) => return Err("unsupported do form inside kernels region".into()),
                    None => {
                        if let Some(ir) = region
                            .features
                            .intrinsic_reductions
                            .iter()
                            .find(|ir| ir.stmt_idx == idx)
                        {
                            out.edits
                                .insert(idx, Edit::Replace(expand_intrinsic(logical, ir, symbols)?));
                        } else if region.features.array_syntax.contains(&idx) {
                            out.edits
                                .insert(idx, Edit::Replace(expand_array_syntax(logical, idx, symbols)?));
                        } else {
                            return Err(format!(
                                "statement at line {} requires manual conversion",
                                ll.line_number()
                            ));
                        }
                    }
                }
            }
        }
    }
    let _ = lines;
    Ok(out)
}

fn parse_loop_nest(logical: &[LogicalLine], at: usize) -> Result<LoopNest, String> {
    crate::analysis::parse_loop_nest(logical, at).map_err(|e| e.to_string())
}

/// Clause names whose loss only affects performance; dropping them warrants
/// a warning, not a refusal.
pub(crate) const PERF_CLAUSES: &[&str] = &[
    "gang", "worker", "vector", "seq", "auto", "independent", "tile", "num_gangs", "num_workers",
    "vector_length", "device_type",
];

/// Data-movement clauses on compute constructs; convertible only under
/// unified memory.
pub(crate) const DATA_CLAUSES: &[&str] = &[
    "copy", "copyin", "copyout", "create", "no_create", "present", "deviceptr", "attach",
];

/// Clauses that block conversion outright (no DC analog, semantics change).
pub(crate) const GUARD_CLAUSES: &[&str] = &["if", "self"];

pub(crate) fn region_clause_names(region: &AccRegion) -> Vec<String> {
    let mut out = Vec::new();
    for (_, d) in &region.directives {
        if matches!(
            d.kind,
            DirectiveKind::Parallel | DirectiveKind::ParallelLoop | DirectiveKind::Loop | DirectiveKind::Kernels
        ) {
            for c in &d.clauses {
                out.push(c.name.clone());
            }
        }
    }
    out
}
