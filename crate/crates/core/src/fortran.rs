//! Small statement-level helpers for free-form Fortran code lines.
//!
//! Nothing here evaluates Fortran; expressions stay opaque strings. These
//! helpers only recognize the statement shapes the analyzer and rewriter
//! care about: `do` headers, assignments, declarations, scope boundaries.

use crate::source::code_part;

/// Intrinsic names that must never be reported as call sites.
pub(crate) const INTRINSICS: &[&str] = &[
    "abs", "acos", "adjustl", "adjustr", "aimag", "aint", "all", "allocated", "anint", "any",
    "asin", "associated", "atan", "atan2", "btest", "ceiling", "char", "cmplx", "conjg", "cos",
    "cosh", "count", "cshift", "dble", "dot_product", "eoshift", "epsilon", "exp", "floor",
    "huge", "iand", "ibclr", "ibset", "ichar", "ieor", "index", "int", "ior", "ishft", "kind",
    "lbound", "len", "len_trim", "log", "log10", "matmul", "max", "maxloc", "maxval", "merge",
    "min", "minloc", "minval", "mod", "modulo", "nint", "not", "pack", "present", "product",
    "real", "reshape", "shape", "sign", "sin", "sinh", "size", "spread", "sqrt", "sum", "tan",
    "tanh", "tiny", "transfer", "transpose", "trim", "ubound", "unpack",
];

/// Statement keywords excluded from call-site detection.
pub(crate) const KEYWORDS: &[&str] = &[
    "allocate", "associate", "block", "call", "case", "close", "common", "concurrent",
    "contains", "continue", "cycle", "data", "deallocate", "default", "dimension", "do", "else",
    "elseif", "elsewhere", "end", "enddo", "endif", "equivalence", "exit", "forall", "format",
    "function", "go", "goto", "if", "implicit", "in", "inout", "integer", "intent", "interface",
    "intrinsic", "local", "local_init", "logical", "module", "namelist", "none", "nullify",
    "only", "open", "out", "parameter", "pointer", "print", "procedure", "program", "read",
    "real", "recursive", "reduce", "result", "return", "save", "select", "shared", "stop",
    "subroutine", "target", "then", "type", "use", "where", "while", "write",
];

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic()
}

/// Strip a trailing `!` comment from a logical-line text.
pub(crate) fn code_text(text: &str) -> &str {
    code_part(text).trim_end()
}

/// Split at top-level occurrences of `sep` (outside parentheses and strings).
pub(crate) fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match quote {
            Some(q) => {
                if c == q {
                    quote = None;
                }
            }
            None => match c {
                '\'' | '"' => quote = Some(c),
                '(' => depth += 1,
                ')' => depth = depth.saturating_sub(1),
                c if c == sep && depth == 0 => {
                    out.push(&s[start..i]);
                    start = i + c.len_utf8();
                }
                _ => {}
            },
        }
    }
    out.push(&s[start..]);
    out
}

/// Find the position of a top-level `:` (used for triplet and reduction specs).
pub(crate) fn find_top_level(s: &str, target: char) -> Option<usize> {
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    for (i, c) in s.char_indices() {
        match quote {
            Some(q) => {
                if c == q {
                    quote = None;
                }
            }
            None => match c {
                '\'' | '"' => quote = Some(c),
                '(' => depth += 1,
                ')' => depth = depth.saturating_sub(1),
                c if c == target && depth == 0 => return Some(i),
                _ => {}
            },
        }
    }
    None
}

/// Iterate identifiers with their byte positions.
pub(crate) fn identifiers(code: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let bytes = code.as_bytes();
    let mut i = 0;
    let mut quote: Option<u8> = None;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if let Some(q) = quote {
            if bytes[i] == q {
                quote = None;
            }
            i += 1;
            continue;
        }
        if c == '\'' || c == '"' {
            quote = Some(bytes[i]);
            i += 1;
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            while i < bytes.len() && is_ident_char(bytes[i] as char) {
                i += 1;
            }
            out.push((start, &code[start..i]));
        } else {
            i += 1;
        }
    }
    out
}

/// Case-insensitive whole-word search for an identifier.
pub(crate) fn contains_ident(code: &str, ident: &str) -> bool {
    identifiers(code)
        .iter()
        .any(|(_, w)| w.eq_ignore_ascii_case(ident))
}

pub(crate) fn first_word(code: &str) -> Option<&str> {
    let t = code.trim_start();
    let end = t
        .char_indices()
        .find(|(_, c)| !is_ident_char(*c))
        .map(|(i, _)| i)
        .unwrap_or(t.len());
    if end == 0 {
        None
    } else {
        Some(&t[..end])
    }
}

fn word_eq(w: Option<&str>, s: &str) -> bool {
    w.map(|w| w.eq_ignore_ascii_case(s)).unwrap_or(false)
}

/// Strip an optional `name:` construct label (`outer: do i=1,n`).
pub(crate) fn strip_construct_label(code: &str) -> &str {
    let t = code.trim_start();
    if let Some(w) = first_word(t) {
        let rest = t[w.len()..].trim_start();
        if let Some(stripped) = rest.strip_prefix(':') {
            if !stripped.starts_with(':') && !stripped.starts_with('=') {
                return stripped.trim_start();
            }
        }
    }
    t
}

/// One control of a counted `do` or `do concurrent` header.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopControl {
    pub var: String,
    pub lower: String,
    pub upper: String,
    pub stride: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum DoStmt {
    Counted(LoopControl),
    Concurrent { controls: Vec<LoopControl> },
    While,
    /// Labeled, infinite, or otherwise unrecognized `do` forms.
    Other,
}

/// Parse a `do` statement. Returns `None` when the line is not a `do`.
pub(crate) fn parse_do(code: &str) -> Option<DoStmt> {
    let t = strip_construct_label(code_text(code));
    let w = first_word(t)?;
    if !w.eq_ignore_ascii_case("do") {
        return None;
    }
    let rest = t[w.len()..].trim();
    if rest.is_empty() {
        return Some(DoStmt::Other);
    }
    if rest.starts_with(|c: char| c.is_ascii_digit()) {
        return Some(DoStmt::Other);
    }
    let rw = first_word(rest);
    if word_eq(rw, "while") {
        return Some(DoStmt::While);
    }
    if word_eq(rw, "concurrent") {
        let after = rest[rw.unwrap().len()..].trim_start();
        if !after.starts_with('(') {
            return Some(DoStmt::Other);
        }
        let (group, _) = read_paren_group(after)?;
        let mut controls = Vec::new();
        for item in split_top_level(group, ',') {
            if let Some(eq) = find_top_level(item, '=') {
                let var = item[..eq].trim().to_string();
                let spec = &item[eq + 1..];
                let parts = split_triplet(spec);
                if var.is_empty() || parts.is_empty() {
                    continue;
                }
                controls.push(LoopControl {
                    var,
                    lower: parts[0].trim().to_string(),
                    upper: parts.get(1).map(|s| s.trim().to_string()).unwrap_or_default(),
                    stride: parts.get(2).map(|s| s.trim().to_string()),
                });
            }
        }
        return Some(DoStmt::Concurrent { controls });
    }
    // Counted form: `do v = lo, hi [, stride]`.
    let eq = find_top_level(rest, '=')?;
    let var = rest[..eq].trim();
    if var.is_empty() || !var.chars().all(is_ident_char) || !var.starts_with(is_ident_start) {
        return Some(DoStmt::Other);
    }
    let bounds: Vec<&str> = split_top_level(&rest[eq + 1..], ',');
    if bounds.len() < 2 || bounds.len() > 3 {
        return Some(DoStmt::Other);
    }
    Some(DoStmt::Counted(LoopControl {
        var: var.to_string(),
        lower: bounds[0].trim().to_string(),
        upper: bounds[1].trim().to_string(),
        stride: bounds.get(2).map(|s| s.trim().to_string()),
    }))
}

fn split_triplet(spec: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut rest = spec;
    while let Some(pos) = find_top_level(rest, ':') {
        parts.push(&rest[..pos]);
        rest = &rest[pos + 1..];
    }
    parts.push(rest);
    parts
}

/// True for `enddo` / `end do` (optionally followed by a construct name).
pub(crate) fn is_end_do(code: &str) -> bool {
    let t = code_text(code).trim();
    let w = match first_word(t) {
        Some(w) => w,
        None => return false,
    };
    if w.eq_ignore_ascii_case("enddo") {
        return true;
    }
    if w.eq_ignore_ascii_case("end") {
        let rest = t[w.len()..].trim_start();
        return word_eq(first_word(rest), "do");
    }
    false
}

/// Read `(...)` starting at the first byte of `s`; returns (inside, rest).
pub(crate) fn read_paren_group(s: &str) -> Option<(&str, &str)> {
    if !s.starts_with('(') {
        return None;
    }
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    for (i, c) in s.char_indices() {
        match quote {
            Some(q) => {
                if c == q {
                    quote = None;
                }
            }
            None => match c {
                '\'' | '"' => quote = Some(c),
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some((&s[1..i], &s[i + 1..]));
                    }
                }
                _ => {}
            },
        }
    }
    None
}

/// Locate the top-level assignment `=` of a statement, skipping `==`, `=>`,
/// `/=`, `<=`, `>=`. Returns (lhs, rhs).
pub(crate) fn find_assignment(code: &str) -> Option<(&str, &str)> {
    let t = code_text(code);
    let bytes = t.as_bytes();
    let mut depth = 0usize;
    let mut quote: Option<u8> = None;
    for i in 0..bytes.len() {
        let c = bytes[i];
        if let Some(q) = quote {
            if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            b'\'' | b'"' => quote = Some(c),
            b'(' => depth += 1,
            b')' => depth = depth.saturating_sub(1),
            b'=' if depth == 0 => {
                let prev = if i > 0 { bytes[i - 1] } else { 0 };
                let next = bytes.get(i + 1).copied().unwrap_or(0);
                if next == b'=' || next == b'>' || matches!(prev, b'=' | b'<' | b'>' | b'/') {
                    continue;
                }
                return Some((&t[..i], &t[i + 1..]));
            }
            _ => {}
        }
    }
    None
}

/// Parse `name` or `name(arg, ...)` with nothing trailing.
pub(crate) fn parse_ref(text: &str) -> Option<(&str, Option<Vec<String>>)> {
    let t = text.trim();
    let w = first_word(t)?;
    if !w.starts_with(is_ident_start) {
        return None;
    }
    let rest = t[w.len()..].trim_start();
    if rest.is_empty() {
        return Some((w, None));
    }
    let (group, tail) = read_paren_group(rest)?;
    if !tail.trim().is_empty() {
        return None;
    }
    let args = split_top_level(group, ',')
        .iter()
        .map(|a| a.trim().to_string())
        .collect();
    Some((w, Some(args)))
}

/// Remove all whitespace; used for form-insensitive statement comparison.
pub(crate) fn squeeze(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

/// One dimension of an array declaration: `n1`, `0:n2`, `:`, `*`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimSpec {
    pub lower: Option<String>,
    pub upper: Option<String>,
}

impl DimSpec {
    pub fn known(&self) -> bool {
        self.upper.is_some()
    }

    pub fn lower_or_one(&self) -> &str {
        self.lower.as_deref().unwrap_or("1")
    }
}

pub(crate) fn parse_dims(group: &str) -> Vec<DimSpec> {
    split_top_level(group, ',')
        .iter()
        .map(|d| {
            let d = d.trim();
            match find_top_level(d, ':') {
                Some(pos) => {
                    let lo = d[..pos].trim();
                    let hi = d[pos + 1..].trim();
                    DimSpec {
                        lower: (!lo.is_empty()).then(|| lo.to_string()),
                        upper: (!hi.is_empty() && hi != "*").then(|| hi.to_string()),
                    }
                }
                None => DimSpec {
                    lower: None,
                    upper: (!d.is_empty() && d != "*").then(|| d.to_string()),
                },
            }
        })
        .collect()
}

const TYPE_KEYWORDS: &[&str] = &[
    "integer", "real", "double", "complex", "logical", "character", "type", "class",
];

/// Parse a type declaration statement into `(name, dims)` entities.
/// Returns `None` when the line is not a declaration.
pub(crate) fn parse_declaration(code: &str) -> Option<Vec<(String, Option<Vec<DimSpec>>)>> {
    let t = code_text(code).trim();
    let w = first_word(t)?;
    let wl = w.to_ascii_lowercase();
    if !TYPE_KEYWORDS.contains(&wl.as_str()) {
        return None;
    }
    let mut rest = t[w.len()..].trim_start();
    if wl == "double" {
        let w2 = first_word(rest)?;
        if !w2.eq_ignore_ascii_case("precision") {
            return None;
        }
        rest = rest[w2.len()..].trim_start();
    }
    // Kind or length spec: `real(r_typ)`, `character(len=8)`, `type(grid)`.
    if rest.starts_with('(') {
        let (_, tail) = read_paren_group(rest)?;
        rest = tail.trim_start();
    } else if (wl == "type" || wl == "class") && !rest.starts_with(',') && !rest.starts_with(':') {
        // `type foo` opens a derived-type definition, not a declaration.
        return None;
    } else if rest.starts_with('*') {
        // `character*8`, `real*8`
        rest = rest[1..].trim_start();
        let len = first_word(rest)?;
        rest = rest[len.len()..].trim_start();
    }

    let mut default_dims: Option<Vec<DimSpec>> = None;
    let entities_text: &str;
    if let Some(pos) = find_double_colon(rest) {
        // Attribute list between the type spec and `::`.
        let attrs = &rest[..pos];
        for attr in split_top_level(attrs, ',') {
            let attr = attr.trim();
            if attr.is_empty() {
                continue;
            }
            if let Some(aw) = first_word(attr) {
                if aw.eq_ignore_ascii_case("dimension") {
                    let after = attr[aw.len()..].trim_start();
                    if let Some((group, _)) = read_paren_group(after) {
                        default_dims = Some(parse_dims(group));
                    }
                }
            }
        }
        entities_text = rest[pos + 2..].trim();
    } else {
        // Old-style declaration without `::`. Reject statements that are
        // really procedure headers (`real function f(x)`).
        match first_word(rest) {
            Some(w2)
                if ["function", "pure", "elemental", "recursive", "impure"]
                    .iter()
                    .any(|k| w2.eq_ignore_ascii_case(k)) =>
            {
                return None;
            }
            Some(_) => {}
            None => return None,
        }
        if !rest.starts_with(is_ident_start) {
            return None;
        }
        entities_text = rest;
    }

    let mut out = Vec::new();
    for entity in split_top_level(entities_text, ',') {
        let entity = entity.trim();
        if entity.is_empty() {
            continue;
        }
        // Drop initializers: `a(3) = 0.`
        let entity = match find_top_level(entity, '=') {
            Some(pos) => entity[..pos].trim_end(),
            None => entity,
        };
        let name = match first_word(entity) {
            Some(n) if n.starts_with(is_ident_start) => n,
            _ => continue,
        };
        let after = entity[name.len()..].trim_start();
        let dims = if after.starts_with('(') {
            read_paren_group(after).map(|(g, _)| parse_dims(g))
        } else {
            default_dims.clone()
        };
        out.push((name.to_string(), dims));
    }
    if out.is_empty() {
        None
    } else {
        Some(out)
    }
}

fn find_double_colon(s: &str) -> Option<usize> {
    let bytes = s.as_bytes();
    let mut depth = 0usize;
    for i in 0..bytes.len().saturating_sub(1) {
        match bytes[i] {
            b'(' => depth += 1,
            b')' => depth = depth.saturating_sub(1),
            b':' if depth == 0 && bytes[i + 1] == b':' => return Some(i),
            _ => {}
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ScopeKind {
    Program,
    Module,
    Subroutine,
    Function,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ScopeEvent {
    Start {
        kind: ScopeKind,
        name: String,
        pure: bool,
    },
    End,
    TypeStart,
    TypeEnd,
    InterfaceStart,
    InterfaceEnd,
    None,
}

const END_BLOCK_WORDS: &[&str] = &[
    "do", "if", "select", "where", "forall", "associate", "block", "critical", "team",
];

/// Recognize scope boundaries (procedures, modules, type defs, interfaces).
pub(crate) fn scope_event(code: &str) -> ScopeEvent {
    let t = code_text(code).trim();
    let words: Vec<&str> = identifiers(t).into_iter().map(|(_, w)| w).collect();
    let w0 = match words.first() {
        Some(w) => w.to_ascii_lowercase(),
        None => return ScopeEvent::None,
    };
    match w0.as_str() {
        "end" => match words.get(1).map(|w| w.to_ascii_lowercase()) {
            None => ScopeEvent::End,
            Some(w1) => {
                if w1 == "type" {
                    ScopeEvent::TypeEnd
                } else if w1 == "interface" {
                    ScopeEvent::InterfaceEnd
                } else if ["subroutine", "function", "program", "module"].contains(&w1.as_str()) {
                    ScopeEvent::End
                } else if END_BLOCK_WORDS.contains(&w1.as_str()) {
                    ScopeEvent::None
                } else {
                    ScopeEvent::None
                }
            }
        },
        "program" => start_event(&words, 1, ScopeKind::Program, false),
        "module" => {
            if words.get(1).map(|w| w.eq_ignore_ascii_case("procedure")) == Some(true) {
                ScopeEvent::None
            } else {
                start_event(&words, 1, ScopeKind::Module, false)
            }
        }
        "interface" => ScopeEvent::InterfaceStart,
        "type" => {
            // `type(x) :: v` and `type :: name` vs `type name` / `type, attrs :: name`.
            let after = t[4..].trim_start();
            if after.starts_with('(') {
                ScopeEvent::None
            } else {
                ScopeEvent::TypeStart
            }
        }
        _ => {
            // Procedure headers, possibly with prefixes:
            // `pure real(r_typ) function f(x) result(y)`.
            let mut pure = false;
            let mut impure = false;
            let mut elemental = false;
            let mut i = 0;
            while let Some(w) = words.get(i) {
                let wl = w.to_ascii_lowercase();
                match wl.as_str() {
                    "pure" => pure = true,
                    "impure" => impure = true,
                    "elemental" => elemental = true,
                    "recursive" | "precision" => {}
                    "subroutine" => {
                        return start_event(&words, i + 1, ScopeKind::Subroutine, (pure || elemental) && !impure);
                    }
                    "function" => {
                        return start_event(&words, i + 1, ScopeKind::Function, (pure || elemental) && !impure);
                    }
                    _ if TYPE_KEYWORDS.contains(&wl.as_str()) => {}
                    _ => return ScopeEvent::None,
                }
                i += 1;
            }
            ScopeEvent::None
        }
    }
}

fn start_event(words: &[&str], name_at: usize, kind: ScopeKind, pure: bool) -> ScopeEvent {
    match words.get(name_at) {
        Some(name) => ScopeEvent::Start {
            kind,
            name: name.to_ascii_lowercase(),
            pure,
        },
        None => ScopeEvent::None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_counted_do() {
        match parse_do("do i=1,n1").unwrap() {
            DoStmt::Counted(c) => {
                assert_eq!(c.var, "i");
                assert_eq!(c.lower, "1");
                assert_eq!(c.upper, "n1");
                assert_eq!(c.stride, None);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_strided_do() {
        match parse_do("do i = 1, n1, 2").unwrap() {
            DoStmt::Counted(c) => assert_eq!(c.stride.as_deref(), Some("2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_do_variants() {
        assert_eq!(parse_do("do while (x < 3)"), Some(DoStmt::While));
        assert_eq!(parse_do("do 100 i=1,n"), Some(DoStmt::Other));
        assert_eq!(parse_do("doit = 1"), None);
        assert!(matches!(
            parse_do("do concurrent (i=1:n1,j=1:n2)"),
            Some(DoStmt::Concurrent { .. })
        ));
        match parse_do("outer: do k = 1, n3").unwrap() {
            DoStmt::Counted(c) => assert_eq!(c.var, "k"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn end_do_forms() {
        assert!(is_end_do("enddo"));
        assert!(is_end_do("end do"));
        assert!(is_end_do("END DO outer"));
        assert!(!is_end_do("end if"));
        assert!(!is_end_do("end"));
    }

    #[test]
    fn assignment_detection() {
        let (l, r) = find_assignment("sum0(i)=sum0(i)+array(i,j)").unwrap();
        assert_eq!(l, "sum0(i)");
        assert_eq!(r, "sum0(i)+array(i,j)");
        assert!(find_assignment("if (a == b) call f(x)").is_none());
        let (l, _) = find_assignment("if (a == b) x = 1").unwrap();
        assert_eq!(l.trim_end(), "if (a == b) x");
    }

    #[test]
    fn ref_parsing() {
        assert_eq!(parse_ref("sum0(i)").unwrap().0, "sum0");
        assert_eq!(parse_ref("  s  "), Some(("s", None)));
        assert!(parse_ref("a(i)%f").is_none());
        let (_, args) = parse_ref("t(i, j+1)").unwrap();
        assert_eq!(args.unwrap(), vec!["i", "j+1"]);
    }

    #[test]
    fn declaration_parsing() {
        let d = parse_declaration("real(r_typ) :: a(n1,n2), b").unwrap();
        assert_eq!(d[0].0, "a");
        assert_eq!(d[0].1.as_ref().unwrap().len(), 2);
        assert_eq!(d[1].0, "b");
        assert!(d[1].1.is_none());

        let d = parse_declaration("real, dimension(n1,n2) :: x, y(5)").unwrap();
        assert_eq!(d[0].1.as_ref().unwrap().len(), 2);
        assert_eq!(d[1].1.as_ref().unwrap().len(), 1);

        let d = parse_declaration("integer :: i, j = 0").unwrap();
        assert_eq!(d.len(), 2);

        assert!(parse_declaration("real function f(x)").is_none());
        assert!(parse_declaration("call foo(x)").is_none());

        let d = parse_declaration("real, dimension(:,:), allocatable :: z").unwrap();
        let dims = d[0].1.as_ref().unwrap();
        assert!(!dims[0].known());
    }

    #[test]
    fn dim_specs() {
        let dims = parse_dims("n1, 0:n2, :");
        assert_eq!(dims[0].upper.as_deref(), Some("n1"));
        assert_eq!(dims[0].lower_or_one(), "1");
        assert_eq!(dims[1].lower.as_deref(), Some("0"));
        assert!(!dims[2].known());
    }

    #[test]
    fn scope_events() {
        assert!(matches!(
            scope_event("pure subroutine boost(x)"),
            ScopeEvent::Start { kind: ScopeKind::Subroutine, pure: true, .. }
        ));
        match scope_event("real function interp(a, b)") {
            ScopeEvent::Start { kind, name, pure } => {
                assert_eq!(kind, ScopeKind::Function);
                assert_eq!(name, "interp");
                assert!(!pure);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(scope_event("module mas_fields"), ScopeEvent::Start { .. }));
        assert_eq!(scope_event("module procedure foo"), ScopeEvent::None);
        assert_eq!(scope_event("end subroutine boost"), ScopeEvent::End);
        assert_eq!(scope_event("end do"), ScopeEvent::None);
        assert_eq!(scope_event("type grid_t"), ScopeEvent::TypeStart);
        assert_eq!(scope_event("type(grid_t) :: g"), ScopeEvent::None);
        assert_eq!(scope_event("end type"), ScopeEvent::TypeEnd);
        assert!(matches!(
            scope_event("elemental function sq(x)"),
            ScopeEvent::Start { pure: true, .. }
        ));
        assert!(matches!(
            scope_event("impure elemental function rng(x)"),
            ScopeEvent::Start { pure: false, .. }
        ));
    }

    #[test]
    fn top_level_splitting() {
        assert_eq!(split_top_level("a, b(i,j), c", ','), vec!["a", " b(i,j)", " c"]);
        assert_eq!(find_top_level("a(1:2)", ':'), None);
        assert_eq!(find_top_level("1:n", ':'), Some(1));
    }
}
