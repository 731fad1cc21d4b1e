//! Recursive-descent parser for the rule language.
//!
//! ```text
//! formula := iff
//! iff     := impl ("<->" iff)?
//! impl    := or ("->" impl)?
//! or      := and ("|" or)?
//! and     := unary ("&" and)?
//! unary   := "inverse" "(" formula ")" | "~" unary | "(" formula ")" | ident
//! ident   := [A-Za-z_][A-Za-z0-9_=]*
//! ```
//!
//! Whitespace is insignificant and `#` starts a comment running to the end
//! of the line. Identifiers listed in the declared variable set parse as
//! [`Formula::Var`], every other identifier as [`Formula::Atom`].

use std::collections::BTreeSet;

use super::error::{LogicError, ParseError};
use super::formula::{Formula, NamedFormula};

/// Parenthesis / negation nesting beyond this is rejected instead of
/// risking stack exhaustion.
pub const MAX_NESTING: usize = 128;

/// Syntax tree depth limit. Every tree walk in the crate is recursive, so a
/// long operator chain is refused here rather than built.
pub const MAX_DEPTH: usize = 2048;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Inverse,
    Tilde,
    LParen,
    RParen,
    And,
    Or,
    Implies,
    Iff,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Inverse => "`inverse`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Implies => "`->`".into(),
            Tok::Iff => "`<->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '='
}

/// True when `name` is a well-formed identifier of the rule language.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if is_ident_start(c))
        && chars.all(is_ident_continue)
        && name != "inverse"
}

fn lex(text: &str, line_offset: usize) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1 + line_offset;
    let mut column = 1;
    let mut chars = text.chars().peekable();

    let operand_start = || {
        vec!["`(`".to_string(), "`inverse`".into(), "`~`".into(), "identifier".into()]
    };

    while let Some(&c) = chars.peek() {
        let (tok_line, tok_col) = (line, column);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars<'_>>| {
            let ch = chars.next();
            if ch == Some('\n') {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            ch
        };
        let tok = match c {
            c if c.is_whitespace() => {
                bump(&mut chars);
                continue;
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump(&mut chars);
                }
                continue;
            }
            '(' => {
                bump(&mut chars);
                Tok::LParen
            }
            ')' => {
                bump(&mut chars);
                Tok::RParen
            }
            '&' => {
                bump(&mut chars);
                Tok::And
            }
            '|' => {
                bump(&mut chars);
                Tok::Or
            }
            '~' => {
                bump(&mut chars);
                Tok::Tilde
            }
            '-' => {
                bump(&mut chars);
                if chars.peek() == Some(&'>') {
                    bump(&mut chars);
                    Tok::Implies
                } else {
                    return Err(ParseError {
                        line: tok_line,
                        column: tok_col,
                        found: "`-`".into(),
                        expected: vec!["`->`".into()],
                    });
                }
            }
            '<' => {
                bump(&mut chars);
                let ok = chars.peek() == Some(&'-') && {
                    bump(&mut chars);
                    chars.peek() == Some(&'>')
                };
                if ok {
                    bump(&mut chars);
                    Tok::Iff
                } else {
                    return Err(ParseError {
                        line: tok_line,
                        column: tok_col,
                        found: "`<`".into(),
                        expected: vec!["`<->`".into()],
                    });
                }
            }
            c if is_ident_start(c) => {
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_ident_continue(c) {
                        break;
                    }
                    name.push(c);
                    bump(&mut chars);
                }
                if name == "inverse" {
                    Tok::Inverse
                } else {
                    Tok::Ident(name)
                }
            }
            other => {
                return Err(ParseError {
                    line: tok_line,
                    column: tok_col,
                    found: format!("character `{other}`"),
                    expected: operand_start(),
                });
            }
        };
        out.push(Spanned { tok, line: tok_line, column: tok_col });
    }
    out.push(Spanned { tok: Tok::Eof, line, column });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    vars: &'a BTreeSet<String>,
    nesting: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn advance(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let at = self.peek();
        let mut expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        expected.sort();
        expected.dedup();
        ParseError { line: at.line, column: at.column, found: at.tok.describe(), expected }
    }

    fn expect(&mut self, tok: Tok, expected: &[&str]) -> Result<(), ParseError> {
        if self.peek().tok == tok {
            self.advance();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            let at = self.peek();
            return Err(ParseError {
                line: at.line,
                column: at.column,
                found: format!("nesting deeper than {MAX_NESTING}"),
                expected: vec![],
            });
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.nesting -= 1;
    }

    fn too_deep(&self) -> ParseError {
        let at = self.peek();
        ParseError {
            line: at.line,
            column: at.column,
            found: format!("formula deeper than {MAX_DEPTH}"),
            expected: vec![],
        }
    }

    /// Parses `operand (op operand)*` and folds it to the right, so chains
    /// never recurse once per operator. Returns the tree with its depth.
    fn right_chain(
        &mut self,
        op: Tok,
        operand: fn(&mut Self) -> Result<(Formula, usize), ParseError>,
        build: fn(Formula, Formula) -> Formula,
    ) -> Result<(Formula, usize), ParseError> {
        let mut operands = vec![operand(self)?];
        while self.peek().tok == op {
            self.advance();
            operands.push(operand(self)?);
            // Depth of the folded chain, computed before anything is built.
            let depth = operands.iter().rev().fold(0, |acc, (_, d)| if acc == 0 { *d } else { acc.max(*d) + 1 });
            if depth > MAX_DEPTH {
                return Err(self.too_deep());
            }
        }
        let (mut acc, mut depth) = operands.pop().expect("at least one operand");
        while let Some((left, d)) = operands.pop() {
            acc = build(left, acc);
            depth = depth.max(d) + 1;
        }
        Ok((acc, depth))
    }

    fn formula(&mut self) -> Result<(Formula, usize), ParseError> {
        self.right_chain(Tok::Iff, Self::implication, Formula::iff)
    }

    fn implication(&mut self) -> Result<(Formula, usize), ParseError> {
        self.right_chain(Tok::Implies, Self::disjunction, Formula::implies)
    }

    fn disjunction(&mut self) -> Result<(Formula, usize), ParseError> {
        self.right_chain(Tok::Or, Self::conjunction, Formula::or)
    }

    fn conjunction(&mut self) -> Result<(Formula, usize), ParseError> {
        self.right_chain(Tok::And, Self::unary, Formula::and)
    }

    fn unary(&mut self) -> Result<(Formula, usize), ParseError> {
        const OPERAND: &[&str] = &["`(`", "`inverse`", "`~`", "identifier"];
        const CLOSE: &[&str] = &["`)`", "`&`", "`|`", "`->`", "`<->`"];
        match self.peek().tok.clone() {
            Tok::Ident(name) => {
                self.advance();
                let leaf = if self.vars.contains(&name) { Formula::Var(name) } else { Formula::Atom(name) };
                Ok((leaf, 1))
            }
            Tok::Inverse => {
                self.advance();
                self.expect(Tok::LParen, &["`(`"])?;
                self.enter()?;
                let (inner, d) = self.formula()?;
                self.leave();
                self.expect(Tok::RParen, CLOSE)?;
                Ok((Formula::not(inner), d + 1))
            }
            Tok::Tilde => {
                self.advance();
                self.enter()?;
                let (inner, d) = self.unary()?;
                self.leave();
                Ok((Formula::not(inner), d + 1))
            }
            Tok::LParen => {
                self.advance();
                self.enter()?;
                let inner = self.formula()?;
                self.leave();
                self.expect(Tok::RParen, CLOSE)?;
                Ok(inner)
            }
            _ => Err(self.error(OPERAND)),
        }
    }
}

fn parse_with_offset(
    text: &str,
    vars: &BTreeSet<String>,
    line_offset: usize,
) -> Result<Formula, ParseError> {
    let toks = lex(text, line_offset)?;
    let mut parser = Parser { toks, pos: 0, vars, nesting: 0 };
    let (f, _) = parser.formula()?;
    if parser.peek().tok != Tok::Eof {
        return Err(parser.error(&["`&`", "`|`", "`->`", "`<->`", "end of input"]));
    }
    Ok(f)
}

/// Parses a detailed formula: every identifier is an atom.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    parse_with_offset(text, &BTreeSet::new(), 0)
}

/// Parses a formula in which identifiers listed in `vars` are variables.
pub fn parse_formula_with_vars(text: &str, vars: &BTreeSet<String>) -> Result<Formula, ParseError> {
    parse_with_offset(text, vars, 0)
}

/// A parsed formula file: an optional `vars:` declaration followed by one
/// formula per line, each optionally labelled `name: formula`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FormulaDoc {
    pub vars: BTreeSet<String>,
    pub formulas: Vec<NamedFormula>,
}

impl FormulaDoc {
    pub fn get(&self, id: &str) -> Option<&NamedFormula> {
        self.formulas.iter().find(|f| f.id == id)
    }
}

fn split_label(line: &str) -> Option<(&str, &str)> {
    let (label, rest) = line.split_once(':')?;
    let label = label.trim();
    is_identifier(label).then_some((label, rest))
}

pub fn parse_document(text: &str) -> Result<FormulaDoc, LogicError> {
    let mut doc = FormulaDoc::default();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(decl) = content.strip_prefix("vars:") {
            for name in decl.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                if !is_identifier(name) {
                    return Err(ParseError {
                        line: idx + 1,
                        column: 1,
                        found: format!("`{name}`"),
                        expected: vec!["identifier".into()],
                    }
                    .into());
                }
                doc.vars.insert(name.to_string());
            }
            continue;
        }
        let (id, body) = match split_label(content) {
            Some((label, body)) => (label.to_string(), body),
            None => (format!("rule{}", doc.formulas.len() + 1), content),
        };
        // Re-parse the raw line so reported columns match the file.
        let body_start = raw.len() - raw.trim_start().len() + (content.len() - body.len());
        let padded = format!("{}{}", " ".repeat(body_start), body);
        let formula = parse_with_offset(&padded, &doc.vars, idx)?;
        doc.formulas.push(NamedFormula::new(id, formula));
    }
    for f in &doc.formulas {
        for atom in f.formula.atoms() {
            if doc.vars.contains(&atom) {
                return Err(LogicError::NameClash(atom));
            }
        }
    }
    Ok(doc)
}
