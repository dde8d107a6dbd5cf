//! Line-oriented scenario scripts.
//!
//! ```text
//! spawn controller contr1 slice=slice1,slice2
//! spawn switch 10.0.1.1 slice=slice1
//! spawn app app1 category="traffic engineering" contr=contr1
//! connect 10.0.1.1 contr1
//! run 2
//! flow app1 contr1 10.0.1.1 0a000001ff id=f1
//! attack replay-flow app1 at 4
//! run 6
//! ```

use std::fmt;
use std::str::FromStr;

use crate::abe::APP_CATEGORIES;

use super::adversary::AdversaryKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EntityKind {
    App,
    Controller,
    Switch,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityKind::App => "app",
            EntityKind::Controller => "controller",
            EntityKind::Switch => "switch",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    SpawnController { id: String, slice: String },
    SpawnSwitch { id: String, slice: String, contr: Option<String> },
    SpawnApp { id: String, category: String, contrs: Vec<String> },
    Flow { app: String, contr: String, switch: String, content: Vec<u8>, id: Option<String> },
    Connect { switch: String, contr: String },
    Rekey { switch: String },
    Packet { switch: String, data: Vec<u8> },
    Resource { id: String, slice: String, content: Vec<u8> },
    Access { app: String, resource: String },
    Attack { kind: AdversaryKind, target: String, tick: u64 },
    Run { ticks: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub line: usize,
    pub column: usize,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Scenario {
    pub statements: Vec<Statement>,
}

impl Scenario {
    pub fn total_ticks(&self) -> u64 {
        self.statements
            .iter()
            .map(|s| match s.command {
                Command::Run { ticks } => ticks,
                _ => 0,
            })
            .sum()
    }
}

impl FromStr for Scenario {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_scenario(s)
    }
}

#[derive(Debug, Clone)]
struct Token {
    text: String,
    column: usize,
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '#' {
            break;
        }
        let mut text = String::new();
        let mut quoted = false;
        while let Some(&(_, c)) = chars.peek() {
            if c == '"' {
                quoted = !quoted;
                chars.next();
                continue;
            }
            if !quoted && (c.is_whitespace() || c == '#') {
                break;
            }
            text.push(c);
            chars.next();
        }
        if quoted {
            return Err(ParseError { line: line_no, column: start + 1, message: "unterminated quote".into() });
        }
        tokens.push(Token { text, column: line[..start].chars().count() + 1 });
    }
    Ok(tokens)
}

struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: usize,
    end_column: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, column: usize, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, column, message: message.into() }
    }

    fn next(&mut self, what: &str) -> Result<&'a Token, ParseError> {
        let t = self.tokens.get(self.pos).ok_or_else(|| self.err(self.end_column, format!("expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn keyed(&mut self, key: &str) -> Result<(String, usize), ParseError> {
        let t = self.next(&format!("{key}=<value>"))?;
        match t.text.strip_prefix(key).and_then(|r| r.strip_prefix('=')) {
            Some(v) if !v.is_empty() => Ok((v.to_string(), t.column)),
            _ => Err(self.err(t.column, format!("expected {key}=<value>, found `{}`", t.text))),
        }
    }

    fn optional_keyed(&mut self, key: &str) -> Result<Option<String>, ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) if t.text.starts_with(&format!("{key}=")) => Ok(Some(self.keyed(key)?.0)),
            _ => Ok(None),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) => Err(self.err(t.column, format!("unexpected `{}`", t.text))),
            None => Ok(()),
        }
    }
}

fn parse_hex(t: &Token, line: usize) -> Result<Vec<u8>, ParseError> {
    hex::decode(&t.text).map_err(|_| ParseError { line, column: t.column, message: format!("invalid hex `{}`", t.text) })
}

fn canonical_category(raw: &str) -> Option<&'static str> {
    APP_CATEGORIES.iter().copied().find(|c| *c == raw || c.replace(' ', "-") == raw)
}

fn parse_line(tokens: &[Token], line: usize, end_column: usize) -> Result<Option<Command>, ParseError> {
    if tokens.is_empty() {
        return Ok(None);
    }
    let mut c = Cursor { tokens, pos: 0, line, end_column };
    let verb = c.next("command")?;
    let cmd = match verb.text.as_str() {
        "spawn" => {
            let kind = c.next("entity kind")?;
            let id = c.next("entity id")?.text.clone();
            match kind.text.as_str() {
                "controller" => Command::SpawnController { id, slice: c.keyed("slice")?.0 },
                "switch" => {
                    let slice = c.keyed("slice")?.0;
                    Command::SpawnSwitch { id, slice, contr: c.optional_keyed("contr")? }
                }
                "app" => {
                    let (raw, col) = c.keyed("category")?;
                    let category = canonical_category(&raw)
                        .ok_or_else(|| c.err(col, format!("unknown category `{raw}`")))?
                        .to_string();
                    let (contrs, _) = c.keyed("contr")?;
                    Command::SpawnApp { id, category, contrs: contrs.split(',').map(str::to_string).collect() }
                }
                other => return Err(c.err(kind.column, format!("unknown entity kind `{other}`"))),
            }
        }
        "flow" => {
            let app = c.next("app id")?.text.clone();
            let contr = c.next("controller id")?.text.clone();
            let switch = c.next("switch id")?.text.clone();
            let content = parse_hex(c.next("content hex")?, line)?;
            Command::Flow { app, contr, switch, content, id: c.optional_keyed("id")? }
        }
        "connect" => Command::Connect { switch: c.next("switch id")?.text.clone(), contr: c.next("controller id")?.text.clone() },
        "rekey" => Command::Rekey { switch: c.next("switch id")?.text.clone() },
        "packet" => {
            let switch = c.next("switch id")?.text.clone();
            Command::Packet { switch, data: parse_hex(c.next("packet hex")?, line)? }
        }
        "resource" => {
            let id = c.next("resource id")?.text.clone();
            let slice = c.keyed("slice")?.0;
            Command::Resource { id, slice, content: c.next("resource content")?.text.clone().into_bytes() }
        }
        "access" => Command::Access { app: c.next("app id")?.text.clone(), resource: c.next("resource id")?.text.clone() },
        "attack" => {
            let k = c.next("attack kind")?;
            let kind = k.text.parse::<AdversaryKind>().map_err(|e| c.err(k.column, e))?;
            let target = c.next("attack target")?.text.clone();
            let at = c.next("`at`")?;
            if at.text != "at" {
                return Err(c.err(at.column, format!("expected `at`, found `{}`", at.text)));
            }
            let t = c.next("tick")?;
            let tick = t.text.parse().map_err(|_| c.err(t.column, format!("invalid tick `{}`", t.text)))?;
            Command::Attack { kind, target, tick }
        }
        "run" => {
            let t = c.next("tick count")?;
            let ticks = t.text.parse().map_err(|_| c.err(t.column, format!("invalid tick count `{}`", t.text)))?;
            Command::Run { ticks }
        }
        other => return Err(c.err(verb.column, format!("unknown command `{other}`"))),
    };
    c.finish()?;
    Ok(Some(cmd))
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    let mut statements = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let tokens = tokenize(raw, line)?;
        let end_column = raw.chars().count() + 1;
        if let Some(command) = parse_line(&tokens, line, end_column)? {
            statements.push(Statement { line, column: tokens[0].column, command });
        }
    }
    Ok(Scenario { statements })
}
