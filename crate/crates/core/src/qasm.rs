// Copyright 2026 The qptkit Authors
// SPDX-License-Identifier: Apache-2.0

//! Parser and printer for a strict OpenQASM 2.0 subset:
//!
//! ```text
//! program   := "OPENQASM 2.0;" include? qreg creg? stmt*
//! include   := "include \"qelib1.inc\";"
//! qreg      := "qreg" ident "[" int "]" ";"
//! creg      := "creg" ident "[" int "]" ";"
//! stmt      := gate1 arg ";" | "cx" arg "," arg ";" | "measure" arg "->" arg ";"
//! gate1     := "id" | "x" | "y" | "z" | "h" | "s" | "sdg" | "t" | "tdg"
//! arg       := ident "[" int "]"
//! ```
//!
//! `//` starts a comment that runs to the end of the line. Every error carries
//! the 1-based line and column where it was detected.

use std::fmt;

use thiserror::Error;

use crate::algebra::GateLabel;
use crate::circuit::{Circuit, CircuitError, Instruction};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    Lexical(char),
    #[error("unterminated string literal")]
    UnterminatedString,
    #[error("integer literal `{0}` is too large")]
    IntegerOverflow(String),
    #[error("expected {expected}, found {found}")]
    Expected { expected: String, found: String },
    #[error("unsupported OpenQASM version `{0}`, only 2.0 is accepted")]
    Version(String),
    #[error("unsupported include `{0}`")]
    Include(String),
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("register `{0}` is already declared")]
    Redeclaration(String),
    #[error("undeclared register `{0}`")]
    UndeclaredRegister(String),
    #[error("gate `{gate}` expects {expected} argument(s), got {found}")]
    Arity {
        gate: String,
        expected: usize,
        found: usize,
    },
    #[error("{0}")]
    Circuit(CircuitError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(String),
    Real(String),
    Str(String),
    LBracket,
    RBracket,
    Semi,
    Comma,
    Arrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(s) | Tok::Real(s) => write!(f, "`{s}`"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let err = |kind| ParseError {
            line: start_line,
            col: start_col,
            kind,
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let single = match c {
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ';' => Some(Tok::Semi),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        let (tok, len) = if let Some(t) = single {
            (t, 1)
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            (Tok::Arrow, 2)
        } else if c.is_ascii_alphabetic() || c == '_' {
            let end = (i..chars.len())
                .find(|&j| !(chars[j].is_ascii_alphanumeric() || chars[j] == '_'))
                .unwrap_or(chars.len());
            (Tok::Ident(chars[i..end].iter().collect()), end - i)
        } else if c.is_ascii_digit() {
            let mut end = (i..chars.len())
                .find(|&j| !chars[j].is_ascii_digit())
                .unwrap_or(chars.len());
            let mut real = false;
            if end < chars.len() && chars[end] == '.' {
                real = true;
                end = (end + 1..chars.len())
                    .find(|&j| !chars[j].is_ascii_digit())
                    .unwrap_or(chars.len());
            }
            let s: String = chars[i..end].iter().collect();
            (if real { Tok::Real(s) } else { Tok::Int(s) }, end - i)
        } else if c == '"' {
            let end = (i + 1..chars.len())
                .find(|&j| chars[j] == '"' || chars[j] == '\n')
                .filter(|&j| chars[j] == '"')
                .ok_or_else(|| err(ParseErrorKind::UnterminatedString))?;
            (Tok::Str(chars[i + 1..end].iter().collect()), end + 1 - i)
        } else {
            return Err(err(ParseErrorKind::Lexical(c)));
        };
        out.push(Spanned {
            tok,
            line: start_line,
            col: start_col,
        });
        i += len;
        col += len;
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Register {
    name: String,
    size: usize,
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

struct Arg {
    reg: String,
    index: usize,
    line: usize,
    col: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(t: &Spanned, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: t.line,
            col: t.col,
            kind,
        }
    }

    fn expected(t: &Spanned, what: &str) -> ParseError {
        Self::error_at(
            t,
            ParseErrorKind::Expected {
                expected: what.to_string(),
                found: t.tok.to_string(),
            },
        )
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Spanned, ParseError> {
        let t = self.bump();
        if t.tok == want {
            Ok(t)
        } else {
            Err(Self::expected(&t, what))
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Spanned, ParseError> {
        let t = self.bump();
        match &t.tok {
            Tok::Ident(s) if s == kw => Ok(t),
            _ => Err(Self::expected(&t, &format!("`{kw}`"))),
        }
    }

    fn ident(&mut self) -> Result<(String, Spanned), ParseError> {
        let t = self.bump();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            _ => Err(Self::expected(&t, "an identifier")),
        }
    }

    fn int(&mut self) -> Result<(usize, Spanned), ParseError> {
        let t = self.bump();
        match &t.tok {
            Tok::Int(s) => s
                .parse::<usize>()
                .map(|v| (v, t.clone()))
                .map_err(|_| Self::error_at(&t, ParseErrorKind::IntegerOverflow(s.clone()))),
            _ => Err(Self::expected(&t, "an integer")),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn register_decl(&mut self, kw: &str) -> Result<(Register, Spanned), ParseError> {
        self.keyword(kw)?;
        let (name, name_tok) = self.ident()?;
        self.expect(Tok::LBracket, "`[`")?;
        let (size, _) = self.int()?;
        self.expect(Tok::RBracket, "`]`")?;
        self.expect(Tok::Semi, "`;`")?;
        Ok((Register { name, size }, name_tok))
    }

    fn arg(&mut self) -> Result<Arg, ParseError> {
        let (reg, t) = self.ident()?;
        self.expect(Tok::LBracket, "`[`")?;
        let (index, _) = self.int()?;
        self.expect(Tok::RBracket, "`]`")?;
        Ok(Arg {
            reg,
            index,
            line: t.line,
            col: t.col,
        })
    }

    fn parse(mut self) -> Result<Circuit, ParseError> {
        self.keyword("OPENQASM")?;
        let v = self.bump();
        match &v.tok {
            Tok::Real(s) if s == "2.0" => {}
            Tok::Real(s) | Tok::Int(s) => return Err(Self::error_at(&v, ParseErrorKind::Version(s.clone()))),
            _ => return Err(Self::expected(&v, "a version number")),
        }
        self.expect(Tok::Semi, "`;`")?;

        if self.is_keyword("include") {
            self.bump();
            let f = self.bump();
            match &f.tok {
                Tok::Str(s) if s == "qelib1.inc" => {}
                Tok::Str(s) => return Err(Self::error_at(&f, ParseErrorKind::Include(s.clone()))),
                _ => return Err(Self::expected(&f, "a file name string")),
            }
            self.expect(Tok::Semi, "`;`")?;
        }

        let (qreg, qtok) = self.register_decl("qreg")?;
        let creg = if self.is_keyword("creg") {
            let (creg, ctok) = self.register_decl("creg")?;
            if creg.name == qreg.name {
                return Err(Self::error_at(&ctok, ParseErrorKind::Redeclaration(creg.name)));
            }
            Some(creg)
        } else {
            None
        };
        let mut circuit = Circuit::new(qreg.size, creg.as_ref().map_or(0, |c| c.size))
            .map_err(|e| Self::error_at(&qtok, ParseErrorKind::Circuit(e)))?;

        loop {
            let head = self.peek().clone();
            let name = match &head.tok {
                Tok::Eof => break,
                Tok::Ident(s) => s.clone(),
                _ => return Err(Self::expected(&head, "a statement")),
            };
            self.bump();
            match name.as_str() {
                "qreg" | "creg" => {
                    let (n, _) = self.ident()?;
                    return Err(Self::error_at(&head, ParseErrorKind::Redeclaration(n)));
                }
                "measure" => {
                    let q = self.arg()?;
                    self.expect(Tok::Arrow, "`->`")?;
                    let c = self.arg()?;
                    self.expect(Tok::Semi, "`;`")?;
                    let qi = resolve(&q, &qreg, false)?;
                    let ci = match &creg {
                        Some(r) => resolve(&c, r, true)?,
                        None => {
                            return Err(ParseError {
                                line: c.line,
                                col: c.col,
                                kind: ParseErrorKind::UndeclaredRegister(c.reg),
                            })
                        }
                    };
                    circuit
                        .push(Instruction::Measure { qubit: qi, clbit: ci })
                        .map_err(|e| Self::error_at(&head, ParseErrorKind::Circuit(e)))?;
                }
                _ => {
                    let label = GateLabel::from_qasm(&name)
                        .ok_or_else(|| Self::error_at(&head, ParseErrorKind::UnknownGate(name.clone())))?;
                    let mut args = vec![self.arg()?];
                    while self.peek().tok == Tok::Comma {
                        self.bump();
                        args.push(self.arg()?);
                    }
                    self.expect(Tok::Semi, "`;`")?;
                    if args.len() != label.arity() {
                        return Err(Self::error_at(
                            &head,
                            ParseErrorKind::Arity {
                                gate: name,
                                expected: label.arity(),
                                found: args.len(),
                            },
                        ));
                    }
                    let qubits = args
                        .iter()
                        .map(|a| resolve(a, &qreg, false))
                        .collect::<Result<Vec<_>, _>>()?;
                    circuit
                        .gate(label, &qubits)
                        .map_err(|e| Self::error_at(&head, ParseErrorKind::Circuit(e)))?;
                }
            }
        }
        Ok(circuit)
    }
}

fn resolve(arg: &Arg, reg: &Register, classical: bool) -> Result<usize, ParseError> {
    let at = |kind| ParseError {
        line: arg.line,
        col: arg.col,
        kind,
    };
    if arg.reg != reg.name {
        return Err(at(ParseErrorKind::UndeclaredRegister(arg.reg.clone())));
    }
    if arg.index >= reg.size {
        let (index, size) = (arg.index, reg.size);
        let err = if classical {
            CircuitError::ClbitOutOfRange { index, size }
        } else {
            CircuitError::QubitOutOfRange { index, size }
        };
        return Err(at(ParseErrorKind::Circuit(err)));
    }
    Ok(arg.index)
}

/// Parses program text into a validated [`Circuit`].
pub fn parse_qasm(text: &str) -> Result<Circuit, ParseError> {
    Parser {
        toks: lex(text)?,
        pos: 0,
    }
    .parse()
}

/// Canonical text for a circuit: registers named `q` and `c`, one statement
/// per line. The `creg` line is omitted when the circuit has no classical bits.
pub fn emit_qasm(c: &Circuit) -> String {
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    out.push_str(&format!("qreg q[{}];\n", c.qubit_count()));
    if c.clbit_count() > 0 {
        out.push_str(&format!("creg c[{}];\n", c.clbit_count()));
    }
    for inst in c.instructions() {
        match inst {
            Instruction::Gate { label, qubits } => {
                let args: Vec<String> = qubits.iter().map(|q| format!("q[{q}]")).collect();
                out.push_str(&format!("{} {};\n", label.qasm_name(), args.join(",")));
            }
            Instruction::Measure { qubit, clbit } => {
                out.push_str(&format!("measure q[{qubit}] -> c[{clbit}];\n"));
            }
        }
    }
    out
}
