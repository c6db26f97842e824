//! Physical and logical line model for free-form Fortran sources.
//!
//! A [`SourceFile`] stores the file as raw physical lines (line endings
//! normalized to LF) and derives [`LogicalLine`]s on demand: `!$acc ... /
//! !$acc& ...` sequences and `&`-continued code lines join into one logical
//! line. Emission reproduces untouched content byte for byte; the only
//! normalization is that emitted files always end with a single trailing
//! newline.

use std::path::Path;

use crate::error::{Error, ParseErrorKind, Result};

/// Classification of a logical line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineKind {
    Code,
    Comment,
    AccDirective,
    Blank,
}

/// One logical line: a physical line plus any continuations it consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalLine {
    pub kind: LineKind,
    /// 0-based index of the first physical line.
    pub first_physical_index: usize,
    /// Number of physical lines consumed (>= 1).
    pub span: usize,
    /// Continuation-joined content with continuation markers removed.
    /// For directives this excludes the `!$acc` sentinel itself.
    pub text: String,
    /// Leading whitespace of the first physical line, verbatim.
    pub indent: String,
}

impl LogicalLine {
    /// 1-based line number for messages.
    pub fn line_number(&self) -> usize {
        self.first_physical_index + 1
    }
}

/// A loaded source file.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceFile {
    path: String,
    lines: Vec<String>,
}

/// Extensions treated as fixed-form Fortran and rejected.
const FIXED_FORM_EXTENSIONS: &[&str] = &["f", "for", "f77", "ftn", "fpp"];

impl SourceFile {
    /// Build a source file from already-decoded text.
    pub fn from_text(path: impl Into<String>, text: &str) -> SourceFile {
        let mut lines: Vec<String> = Vec::new();
        if !text.is_empty() {
            for raw in text.split('\n') {
                lines.push(raw.strip_suffix('\r').unwrap_or(raw).to_string());
            }
            // A trailing newline produces one empty fragment; drop it so the
            // line list matches what an editor shows.
            if text.ends_with('\n') {
                lines.pop();
            }
        }
        SourceFile {
            path: path.into(),
            lines,
        }
    }

    /// Decode bytes as UTF-8 and build a source file.
    pub fn from_bytes(path: impl Into<String>, bytes: &[u8]) -> Result<SourceFile> {
        let path = path.into();
        let text = std::str::from_utf8(bytes)
            .map_err(|e| Error::Input(format!("{path}: not valid UTF-8 text ({e})")))?;
        Ok(SourceFile::from_text(path, text))
    }

    /// Load a file from disk. Fixed-form extensions are rejected.
    pub fn load(path: &Path) -> Result<SourceFile> {
        if let Some(ext) = path.extension().and_then(|e| e.to_str()) {
            if FIXED_FORM_EXTENSIONS.contains(&ext.to_ascii_lowercase().as_str()) {
                return Err(Error::Input(format!(
                    "{}: fixed-form Fortran is not supported; only free-form sources are handled",
                    path.display()
                )));
            }
        }
        let bytes = std::fs::read(path)?;
        SourceFile::from_bytes(path.display().to_string(), &bytes)
    }

    /// Build directly from physical lines (used by the transform engine).
    pub fn from_lines(path: impl Into<String>, lines: Vec<String>) -> SourceFile {
        SourceFile {
            path: path.into(),
            lines,
        }
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn physical_lines(&self) -> &[String] {
        &self.lines
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    /// Re-emit the file. Untouched lines reproduce their original bytes; a
    /// single trailing newline is appended to non-empty files.
    pub fn emit(&self) -> String {
        if self.lines.is_empty() {
            return String::new();
        }
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }

    /// Assemble logical lines, joining `!$acc&` and `&` continuations.
    pub fn logical_lines(&self) -> Result<Vec<LogicalLine>> {
        assemble_logical_lines(&self.lines)
    }
}

/// True if `trimmed` (leading whitespace removed) starts a directive line.
pub fn is_acc_sentinel(trimmed: &str) -> bool {
    if trimmed.len() < 5 || !trimmed.as_bytes()[..5].eq_ignore_ascii_case(b"!$acc") {
        return false;
    }
    // The sentinel must be a complete word: `!$accelerate` is a comment.
    match trimmed.as_bytes().get(5) {
        None => true,
        Some(&c) => !(c.is_ascii_alphanumeric() || c == b'_'),
    }
}

/// True if `trimmed` is a `!$acc&` continuation line.
pub fn is_acc_continuation(trimmed: &str) -> bool {
    trimmed.len() >= 6 && trimmed.as_bytes()[..6].eq_ignore_ascii_case(b"!$acc&")
}

/// The statement part of a line: everything before a trailing `!` comment,
/// honoring quoted strings.
pub fn code_part(line: &str) -> &str {
    let bytes = line.as_bytes();
    let mut quote: Option<u8> = None;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match quote {
            Some(q) => {
                if c == q {
                    // Doubled quote is an escaped quote.
                    if bytes.get(i + 1) == Some(&q) {
                        i += 1;
                    } else {
                        quote = None;
                    }
                }
            }
            None => {
                if c == b'\'' || c == b'"' {
                    quote = Some(c);
                } else if c == b'!' {
                    return &line[..i];
                }
            }
        }
        i += 1;
    }
    line
}

fn code_continues(line: &str) -> bool {
    code_part(line).trim_end().ends_with('&')
}

/// Directive content after the sentinel, trimmed, with a trailing `&` removed.
fn directive_fragment(trimmed: &str, continuation: bool) -> &str {
    let start = if continuation { 6 } else { 5 };
    let frag = trimmed[start..].trim();
    frag.strip_suffix('&').map(str::trim_end).unwrap_or(frag)
}

fn assemble_logical_lines(lines: &[String]) -> Result<Vec<LogicalLine>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let raw = &lines[i];
        let trimmed = raw.trim_start();
        let indent = raw[..raw.len() - trimmed.len()].to_string();

        if trimmed.is_empty() {
            out.push(LogicalLine {
                kind: LineKind::Blank,
                first_physical_index: i,
                span: 1,
                text: String::new(),
                indent,
            });
            i += 1;
        } else if is_acc_continuation(trimmed) {
            return Err(Error::parse(
                i,
                ParseErrorKind::OrphanContinuation,
                "`!$acc&` continuation with no preceding `!$acc` line",
            ));
        } else if is_acc_sentinel(trimmed) {
            let mut text = directive_fragment(trimmed, false).to_string();
            let mut span = 1;
            while i + span < lines.len() && is_acc_continuation(lines[i + span].trim_start()) {
                let frag = directive_fragment(lines[i + span].trim_start(), true);
                if !frag.is_empty() {
                    if !text.is_empty() {
                        text.push(' ');
                    }
                    text.push_str(frag);
                }
                span += 1;
            }
            out.push(LogicalLine {
                kind: LineKind::AccDirective,
                first_physical_index: i,
                span,
                text,
                indent,
            });
            i += span;
        } else if trimmed.starts_with('!') {
            out.push(LogicalLine {
                kind: LineKind::Comment,
                first_physical_index: i,
                span: 1,
                text: trimmed.trim_end().to_string(),
                indent,
            });
            i += 1;
        } else {
            // Code line, possibly continued with trailing `&`.
            let mut span = 1;
            let mut text: String;
            if !code_continues(raw) {
                text = trimmed.trim_end().to_string();
            } else {
                let first = code_part(raw).trim_end();
                text = first[..first.len() - 1].trim_end().to_string();
                text = text[indent.len().min(text.len())..].to_string();
                loop {
                    let next = lines.get(i + span).map(|l| l.as_str()).ok_or_else(|| {
                        Error::parse(
                            i + span - 1,
                            ParseErrorKind::Malformed,
                            "line ends with `&` but the file ends",
                        )
                    })?;
                    let nt = next.trim_start();
                    if nt.is_empty() || nt.starts_with('!') {
                        return Err(Error::parse(
                            i + span,
                            ParseErrorKind::Malformed,
                            "continuation interrupted by a comment or blank line",
                        ));
                    }
                    let continues = code_continues(next);
                    let piece_full = if continues {
                        let p = code_part(next).trim_end();
                        p[..p.len() - 1].trim_end()
                    } else {
                        nt.trim_end()
                    };
                    let piece = piece_full.trim_start();
                    let (glue, body) = match piece.strip_prefix('&') {
                        Some(rest) => ("", rest),
                        None => (" ", piece),
                    };
                    if !body.is_empty() {
                        text.push_str(glue);
                        text.push_str(body);
                    }
                    span += 1;
                    if !continues {
                        break;
                    }
                }
            }
            out.push(LogicalLine {
                kind: LineKind::Code,
                first_physical_index: i,
                span,
                text,
                indent,
            });
            i += span;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIPLE_NEST: &str = "\
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

    #[test]
    fn load_empty_file() {
        let src = SourceFile::from_text("empty.f90", "");
        assert_eq!(src.line_count(), 0);
        assert_eq!(src.emit(), "");
    }

    #[test]
    fn load_ten_line_nest() {
        let src = SourceFile::from_text("nest.f90", TRIPLE_NEST);
        assert_eq!(src.line_count(), 10);
    }

    #[test]
    fn crlf_matches_lf() {
        let lf = SourceFile::from_text("a.f90", "x = 1\ny = 2\n");
        let crlf = SourceFile::from_text("a.f90", "x = 1\r\ny = 2\r\n");
        assert_eq!(lf.physical_lines(), crlf.physical_lines());
    }

    #[test]
    fn round_trip_identity() {
        let src = SourceFile::from_text("nest.f90", TRIPLE_NEST);
        assert_eq!(src.emit(), TRIPLE_NEST);
    }

    #[test]
    fn round_trip_appends_missing_final_newline() {
        let src = SourceFile::from_text("a.f90", "x = 1");
        assert_eq!(src.emit(), "x = 1\n");
    }

    #[test]
    fn directive_continuation_joins() {
        let src = SourceFile::from_text(
            "c.f90",
            "!$acc enter data copyin(a)\n!$acc& copyin(b)\n",
        );
        let ll = src.logical_lines().unwrap();
        assert_eq!(ll.len(), 1);
        assert_eq!(ll[0].kind, LineKind::AccDirective);
        assert_eq!(ll[0].span, 2);
        assert_eq!(ll[0].text, "enter data copyin(a) copyin(b)");
    }

    #[test]
    fn single_code_line() {
        let src = SourceFile::from_text("c.f90", "x = 1\n");
        let ll = src.logical_lines().unwrap();
        assert_eq!(ll.len(), 1);
        assert_eq!(ll[0].kind, LineKind::Code);
        assert_eq!(ll[0].span, 1);
        assert_eq!(ll[0].text, "x = 1");
    }

    /// Independent join oracle: drop trailing `&`, splice continuations,
    /// consuming a leading `&` on the continuation line.
    fn oracle_join(lines: &[&str]) -> String {
        let mut s = String::new();
        for (n, l) in lines.iter().enumerate() {
            let mut piece = l.trim().trim_end_matches('&').trim_end();
            let mut glue = " ";
            if n > 0 && piece.starts_with('&') {
                piece = &piece[1..];
                glue = "";
            }
            if n > 0 {
                s.push_str(glue);
            }
            s.push_str(piece);
        }
        s
    }

    #[test]
    fn three_line_code_chain() {
        let parts = ["y = a + &", "    b + &", "    c"];
        let expected = oracle_join(&parts);
        assert_eq!(expected, "y = a + b + c");
        let src = SourceFile::from_text("c.f90", &(parts.join("\n") + "\n"));
        let ll = src.logical_lines().unwrap();
        assert_eq!(ll.len(), 1);
        assert_eq!(ll[0].span, 3);
        assert_eq!(ll[0].text, expected);
    }

    #[test]
    fn leading_ampersand_splices_without_space() {
        let src = SourceFile::from_text("c.f90", "y = ab&\n&cd + 1\n");
        let ll = src.logical_lines().unwrap();
        assert_eq!(ll[0].text, "y = abcd + 1");
    }

    #[test]
    fn orphan_continuation_is_an_error() {
        let src = SourceFile::from_text("c.f90", "x = 1\n!$acc& copyin(b)\n");
        let err = src.logical_lines().unwrap_err();
        assert_eq!(err.parse_kind(), Some(ParseErrorKind::OrphanContinuation));
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn sentinel_is_case_insensitive_and_tolerates_indent() {
        for line in ["!$ACC PARALLEL", "  !$Acc loop", "\t!$acc atomic update"] {
            let t = line.trim_start();
            assert!(is_acc_sentinel(t), "{line}");
        }
        assert!(!is_acc_sentinel("!$accelerate x"));
        assert!(!is_acc_sentinel("! plain comment"));
        assert!(!is_acc_sentinel("x = 1 !$acc not a directive"));
    }

    #[test]
    fn trailing_comment_stays_attached_to_code() {
        let src = SourceFile::from_text("c.f90", "x = 1 ! note with !$acc inside\n");
        let ll = src.logical_lines().unwrap();
        assert_eq!(ll[0].kind, LineKind::Code);
        assert_eq!(ll[0].text, "x = 1 ! note with !$acc inside");
    }

    #[test]
    fn ampersand_inside_string_does_not_continue() {
        let src = SourceFile::from_text("c.f90", "s = 'a &'\nx = 1\n");
        let ll = src.logical_lines().unwrap();
        assert_eq!(ll.len(), 2);
    }

    #[test]
    fn spans_partition_physical_lines() {
        let text = "\
! header
x = a + &
    b
!$acc enter data copyin(a)
!$acc& copyin(b)

y = 2
";
        let src = SourceFile::from_text("c.f90", text);
        let ll = src.logical_lines().unwrap();
        let total: usize = ll.iter().map(|l| l.span).sum();
        assert_eq!(total, src.line_count());
        let mut next = 0;
        for l in &ll {
            assert_eq!(l.first_physical_index, next);
            next += l.span;
        }
    }

    #[test]
    fn fixed_form_extension_is_rejected() {
        let dir = std::env::temp_dir();
        let path = dir.join("acc2dc_fixed_form_test.f");
        std::fs::write(&path, "      do 10 i=1,n\n").unwrap();
        let err = SourceFile::load(&path).unwrap_err();
        assert!(err.to_string().contains("fixed-form"));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn indent_preserves_tabs() {
        let src = SourceFile::from_text("c.f90", "\t x = 1\n");
        let ll = src.logical_lines().unwrap();
        assert_eq!(ll[0].indent, "\t ");
    }
}
