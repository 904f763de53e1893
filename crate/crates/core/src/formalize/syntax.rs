//! Line-oriented reader and printer for the logic-program text format.
//!
//! ```text
//! % comment
//! head(X) :- body1(X), body2(X, b).
//! body1(a).
//! ?- head(a).
//! ```
//!
//! One clause per line. Predicate names and constants are lowercased;
//! names starting with an uppercase letter or `_` in argument position are
//! variables. Lines that are only a section label (`RULES:`, `FACTS:`,
//! `QUERY:`) or a markdown code fence are skipped, and inside a `QUERY:`
//! section the `?-` marker is optional.

use crate::error::LogicParseError;
use crate::model::{Atom, LogicProgram, Rule, Term};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Neck,
    Query,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    None,
    Rules,
    Facts,
    Query,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> LogicParseError {
    LogicParseError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str, line: usize) -> Result<Vec<Spanned>, LogicParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            _ if c.is_whitespace() => i += 1,
            '(' => {
                out.push(Spanned {
                    tok: Tok::LParen,
                    col,
                });
                i += 1;
            }
            ')' => {
                out.push(Spanned {
                    tok: Tok::RParen,
                    col,
                });
                i += 1;
            }
            ',' => {
                out.push(Spanned {
                    tok: Tok::Comma,
                    col,
                });
                i += 1;
            }
            '.' => {
                out.push(Spanned { tok: Tok::Dot, col });
                i += 1;
            }
            ':' if chars.get(i + 1) == Some(&'-') => {
                out.push(Spanned {
                    tok: Tok::Neck,
                    col,
                });
                i += 2;
            }
            '?' if chars.get(i + 1) == Some(&'-') => {
                out.push(Spanned {
                    tok: Tok::Query,
                    col,
                });
                i += 2;
            }
            '\'' | '"' => {
                let close = chars[i + 1..]
                    .iter()
                    .position(|&d| d == c)
                    .ok_or_else(|| syntax(line, col, "unterminated quoted name"))?;
                let inner: String = chars[i + 1..i + 1 + close].iter().collect();
                let name = snake_case(&inner);
                if name.is_empty() {
                    return Err(syntax(line, col, "empty quoted name"));
                }
                out.push(Spanned {
                    tok: Tok::Name(name),
                    col,
                });
                i += close + 2;
            }
            _ if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Spanned {
                    tok: Tok::Name(chars[start..i].iter().collect()),
                    col,
                });
            }
            _ => return Err(syntax(line, col, format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

/// Lowercase, ASCII alphanumerics kept, every other run becomes one `_`,
/// leading and trailing underscores dropped.
pub fn snake_case(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending = false;
    for c in text.chars() {
        if c.is_ascii_alphanumeric() {
            if pending && !out.is_empty() {
                out.push('_');
            }
            pending = false;
            out.push(c.to_ascii_lowercase());
        } else {
            pending = true;
        }
    }
    out
}

struct ClauseParser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl ClauseParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn name(&mut self, what: &str) -> Result<String, LogicParseError> {
        match self.peek() {
            Some(Tok::Name(n)) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            _ => Err(syntax(self.line, self.col(), format!("expected {what}"))),
        }
    }

    fn atom(&mut self) -> Result<Atom, LogicParseError> {
        let predicate = self.name("predicate name")?.to_lowercase();
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::LParen) {
            let open = self.col();
            self.pos += 1;
            loop {
                if self.pos >= self.toks.len() {
                    return Err(syntax(self.line, open, "unclosed `(`"));
                }
                let raw = self.name("argument")?;
                args.push(match Term::from_name(&raw) {
                    Term::Constant(c) => Term::Constant(c.to_lowercase()),
                    v => v,
                });
                match self.peek() {
                    Some(Tok::Comma) => self.pos += 1,
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        break;
                    }
                    None => return Err(syntax(self.line, open, "unclosed `(`")),
                    _ => return Err(syntax(self.line, self.col(), "expected `,` or `)`")),
                }
            }
        }
        Ok(Atom { predicate, args })
    }

    fn finish(&mut self) -> Result<(), LogicParseError> {
        if self.peek() == Some(&Tok::Dot) {
            self.pos += 1;
        } else if self.pos < self.toks.len() {
            return Err(syntax(self.line, self.col(), "expected `.`"));
        } else {
            return Err(syntax(
                self.line,
                self.end_col,
                "expected `.` at end of clause",
            ));
        }
        if self.pos < self.toks.len() {
            return Err(syntax(self.line, self.col(), "trailing input after `.`"));
        }
        Ok(())
    }
}

enum Clause {
    Rule(Rule),
    Fact(Atom),
    Query(Atom),
}

fn strip_label(line: &str) -> (Option<Section>, &str) {
    let trimmed = line.trim_start();
    for (label, section) in [
        ("RULES", Section::Rules),
        ("FACTS", Section::Facts),
        ("QUERY", Section::Query),
    ] {
        if let Some(rest) = trimmed.strip_prefix(label) {
            if let Some(rest) = rest.trim_start().strip_prefix(':') {
                return (Some(section), rest);
            }
        }
    }
    (None, line)
}

/// Parses a program. Errors carry 1-based line and column.
pub fn parse_logic_text(text: &str) -> Result<LogicProgram, LogicParseError> {
    if text.trim().is_empty() {
        return Err(LogicParseError::Empty);
    }
    let mut rules = Vec::new();
    let mut facts = Vec::new();
    let mut query: Option<Atom> = None;
    let mut section = Section::None;

    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let without_comment = raw_line.split('%').next().unwrap_or("");
        if without_comment.trim_start().starts_with("```") {
            continue;
        }
        let (label, rest) = strip_label(without_comment);
        if let Some(s) = label {
            section = s;
        }
        if rest.trim().is_empty() {
            continue;
        }
        // Columns refer to the original line.
        let offset = without_comment.chars().count() - rest.chars().count();
        let toks: Vec<Spanned> = lex(rest, lineno)?
            .into_iter()
            .map(|t| Spanned {
                col: t.col + offset,
                ..t
            })
            .collect();
        let end_col = without_comment.trim_end().chars().count() + 1;
        match parse_clause(&toks, lineno, end_col, section)? {
            Clause::Rule(r) => rules.push(r),
            Clause::Fact(f) => {
                if !f.is_ground() {
                    return Err(LogicParseError::NonGroundFact { line: lineno });
                }
                facts.push(f);
            }
            Clause::Query(q) => {
                if query.is_some() {
                    return Err(LogicParseError::MultipleQueries { line: lineno });
                }
                query = Some(q);
            }
        }
    }
    let query = query.ok_or(LogicParseError::MissingQuery)?;
    if facts.is_empty() {
        return Err(LogicParseError::NoFacts);
    }
    Ok(LogicProgram::new(rules, facts, query).expect("invariants checked while parsing"))
}

fn parse_clause(
    toks: &[Spanned],
    line: usize,
    end_col: usize,
    section: Section,
) -> Result<Clause, LogicParseError> {
    let mut p = ClauseParser {
        toks,
        pos: 0,
        line,
        end_col,
    };
    if p.peek() == Some(&Tok::Query) {
        p.pos += 1;
        let q = p.atom()?;
        p.finish()?;
        return Ok(Clause::Query(q));
    }
    let head = p.atom()?;
    if p.peek() == Some(&Tok::Neck) {
        p.pos += 1;
        let mut body = vec![p.atom()?];
        while p.peek() == Some(&Tok::Comma) {
            p.pos += 1;
            body.push(p.atom()?);
        }
        p.finish()?;
        return Ok(Clause::Rule(Rule { head, body }));
    }
    p.finish()?;
    Ok(if section == Section::Query {
        Clause::Query(head)
    } else {
        Clause::Fact(head)
    })
}

/// Prints a program in the canonical text form: rules, then facts, then the
/// query, one clause per line with a trailing newline.
pub fn render(program: &LogicProgram) -> String {
    let mut out = String::new();
    for rule in &program.rules {
        out.push_str(&rule.to_string());
        out.push('\n');
    }
    for fact in &program.facts {
        out.push_str(&format!("{fact}.\n"));
    }
    out.push_str(&format!("?- {}.\n", program.query));
    out
}
