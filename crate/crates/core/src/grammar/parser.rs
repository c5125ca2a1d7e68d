use std::collections::HashSet;

use super::{
    DegreeInterval, DegreeSemantics, Direction, EdgePattern, Element, Grammar, GraphPattern,
    NodeKey, NodePattern, ProductionRule,
};
use crate::error::{Error, Result};
use crate::topology::TopologyGraph;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(u32),
    Underscore,
    LBracket,
    RBracket,
    Comma,
    Dash,
    Arrow,
    BiArrow,
    Implies,
    Semicolon,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    column: usize,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Number(n) => format!("'{n}'"),
        Tok::Underscore => "'_'".into(),
        Tok::LBracket => "'['".into(),
        Tok::RBracket => "']'".into(),
        Tok::Comma => "','".into(),
        Tok::Dash => "'-'".into(),
        Tok::Arrow => "'->'".into(),
        Tok::BiArrow => "'<->'".into(),
        Tok::Implies => "'=>'".into(),
        Tok::Semicolon => "';'".into(),
    }
}

fn lex(text: &[char], offset: usize, line: usize) -> Result<Vec<Token>> {
    let err = |column: usize, message: String| Error::Syntax {
        line,
        column,
        message,
    };
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < text.len() {
        let c = text[i];
        let column = offset + i + 1;
        let mut push = |tok, width: usize| {
            tokens.push(Token { tok, column });
            width
        };
        let width = match c {
            c if c.is_whitespace() => 1,
            'φ' => push(Tok::Ident("phi".into()), 1),
            '⇒' => push(Tok::Implies, 1),
            '→' => push(Tok::Arrow, 1),
            '↔' => push(Tok::BiArrow, 1),
            '_' => push(Tok::Underscore, 1),
            '[' => push(Tok::LBracket, 1),
            ']' => push(Tok::RBracket, 1),
            ',' => push(Tok::Comma, 1),
            ';' => push(Tok::Semicolon, 1),
            '-' if text.get(i + 1) == Some(&'>') => push(Tok::Arrow, 2),
            '-' => push(Tok::Dash, 1),
            '<' if text.get(i + 1) == Some(&'-') && text.get(i + 2) == Some(&'>') => {
                push(Tok::BiArrow, 3)
            }
            '=' if text.get(i + 1) == Some(&'>') => push(Tok::Implies, 2),
            c if c.is_ascii_alphabetic() => {
                let end = (i..text.len())
                    .find(|&j| !text[j].is_ascii_alphabetic())
                    .unwrap_or(text.len());
                let word: String = text[i..end].iter().collect();
                push(Tok::Ident(word), end - i)
            }
            c if c.is_ascii_digit() => {
                let end = (i..text.len())
                    .find(|&j| !text[j].is_ascii_digit())
                    .unwrap_or(text.len());
                let digits: String = text[i..end].iter().collect();
                let n = digits
                    .parse()
                    .map_err(|_| err(column, format!("number {digits} is too large")))?;
                push(Tok::Number(n), end - i)
            }
            other => return Err(err(column, format!("unexpected character {other:?}"))),
        };
        i += width;
    }
    Ok(tokens)
}

struct SideParser<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: usize,
    end_column: usize,
    side: GraphPattern,
}

impl<'a> SideParser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn column(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.column)
            .unwrap_or(self.end_column)
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: self.line,
            column: self.column(),
            message: message.into(),
        }
    }

    fn unexpected(&self, wanted: &str) -> Error {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {}", describe(t))),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    fn number(&mut self) -> Result<u32> {
        match self.peek() {
            Some(Tok::Number(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&describe(&tok)))
        }
    }

    fn parse(mut self) -> Result<GraphPattern> {
        if let [Token {
            tok: Tok::Ident(word),
            ..
        }] = self.tokens
        {
            if word == "phi" {
                return Ok(GraphPattern::default());
            }
        }
        if self.tokens.is_empty() {
            return Err(self.error("empty side; write 'phi' for the empty graph"));
        }
        loop {
            self.structure()?;
            match self.peek() {
                None => break,
                Some(Tok::Comma) => self.pos += 1,
                Some(_) => return Err(self.unexpected("',' or end of side")),
            }
        }
        Ok(self.side)
    }

    fn structure(&mut self) -> Result<()> {
        let mut prev = self.node()?;
        let mut chained = false;
        loop {
            let direction = match self.peek() {
                Some(Tok::Arrow) => Direction::Directed,
                Some(Tok::BiArrow) => Direction::Bidirectional,
                _ => break,
            };
            let column = self.column();
            self.pos += 1;
            let next = self.node()?;
            self.add_edge(prev, next, direction, column)?;
            prev = next;
            chained = true;
        }
        if !chained {
            self.side.elements.push(Element::Node(prev));
        }
        Ok(())
    }

    fn add_edge(&mut self, src: usize, dst: usize, direction: Direction, column: usize) -> Result<()> {
        let err = |message: String| Error::Syntax {
            line: self.line,
            column,
            message,
        };
        if src == dst {
            return Err(err(format!(
                "self-loop on {} is not allowed",
                self.side.nodes[src].key
            )));
        }
        let overlaps = self.side.edges.iter().any(|e| {
            let fwd = e.src == src && e.dst == dst;
            let rev = e.src == dst && e.dst == src;
            fwd || (rev && (direction == Direction::Bidirectional || e.direction == Direction::Bidirectional))
        });
        if overlaps {
            return Err(err(format!(
                "edge between {} and {} is given twice",
                self.side.nodes[src].key, self.side.nodes[dst].key
            )));
        }
        self.side.edges.push(EdgePattern {
            src,
            dst,
            direction,
        });
        self.side
            .elements
            .push(Element::Edge(self.side.edges.len() - 1));
        Ok(())
    }

    fn node(&mut self) -> Result<usize> {
        let column = self.column();
        let label = match self.peek() {
            Some(Tok::Ident(word)) if word == "phi" => {
                return Err(self.error("'phi' must stand alone on its side"))
            }
            Some(Tok::Ident(word)) => word.clone(),
            _ => return Err(self.unexpected("a type label")),
        };
        self.pos += 1;
        let index = if self.peek() == Some(&Tok::Underscore) {
            self.pos += 1;
            let n = self.number()?;
            if n == 0 {
                return Err(self.error("node indices start at 1"));
            }
            Some(n)
        } else {
            None
        };
        let interval = if self.peek() == Some(&Tok::LBracket) {
            self.pos += 1;
            let lo = self.number()?;
            let hi = match self.peek() {
                Some(Tok::Dash) | Some(Tok::Comma) => {
                    self.pos += 1;
                    self.number()?
                }
                _ => lo,
            };
            self.expect(Tok::RBracket)?;
            if lo > hi {
                return Err(Error::Syntax {
                    line: self.line,
                    column,
                    message: format!("degree interval [{lo}, {hi}] has lo > hi"),
                });
            }
            Some(DegreeInterval { lo, hi })
        } else {
            None
        };

        let key = NodeKey { label, index };
        if let Some(i) = self.side.find(&key) {
            let existing = &mut self.side.nodes[i];
            match (existing.interval, interval) {
                (Some(a), Some(b)) if a != b => {
                    return Err(Error::Syntax {
                        line: self.line,
                        column,
                        message: format!("conflicting degree intervals for {key}"),
                    })
                }
                (None, Some(b)) => existing.interval = Some(b),
                _ => {}
            }
            Ok(i)
        } else {
            self.side.nodes.push(NodePattern { key, interval });
            Ok(self.side.nodes.len() - 1)
        }
    }
}

fn is_rule_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_line(raw: &str, line: usize, ordinal: usize) -> Result<Option<ProductionRule>> {
    let (body, comment) = match raw.find('#') {
        Some(i) => (&raw[..i], Some(raw[i + 1..].trim().to_string())),
        None => (raw, None),
    };
    if body.trim().is_empty() {
        return Ok(None);
    }
    let chars: Vec<char> = body.chars().collect();
    let err = |column: usize, message: &str| Error::Syntax {
        line,
        column,
        message: message.into(),
    };

    let mut start = 0;
    let mut name = format!("r{ordinal}");
    if let Some(colon) = chars.iter().position(|&c| c == ':') {
        let candidate: String = chars[..colon].iter().collect();
        let candidate = candidate.trim();
        if !is_rule_name(candidate) {
            return Err(err(1, "rule name must be letters, digits or '_'"));
        }
        name = candidate.to_string();
        start = colon + 1;
    }

    let tokens = lex(&chars[start..], start, line)?;
    let end_column = chars.len() + 1;
    let implies: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.tok == Tok::Implies)
        .map(|(i, _)| i)
        .collect();
    let split = match implies.as_slice() {
        [i] => *i,
        [] => return Err(err(end_column, "missing '=>'")),
        [_, second, ..] => return Err(err(tokens[*second].column, "more than one '=>'")),
    };
    let semi = match tokens.iter().position(|t| t.tok == Tok::Semicolon) {
        Some(i) if i == tokens.len() - 1 => i,
        Some(i) => return Err(err(tokens[i + 1].column, "unexpected input after ';'")),
        None => return Err(err(end_column, "missing ';'")),
    };
    if semi < split {
        return Err(err(tokens[semi].column, "';' before '=>'"));
    }

    let side = |range: &[Token], end_column: usize| {
        SideParser {
            tokens: range,
            pos: 0,
            line,
            end_column,
            side: GraphPattern::default(),
        }
        .parse()
    };
    let lhs = side(&tokens[..split], tokens[split].column)?;
    let rhs = side(&tokens[split + 1..semi], tokens[semi].column)?;
    let comment = comment.filter(|c| !c.is_empty());
    Ok(Some(ProductionRule::new(name, lhs, rhs, comment)))
}

/// Parses grammar text: one production per line, `#` comments.
pub fn parse_grammar(text: &str) -> Result<Grammar> {
    let mut rules: Vec<ProductionRule> = Vec::new();
    let mut names = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if let Some(rule) = parse_line(raw, line, rules.len())? {
            if !names.insert(rule.name.clone()) {
                return Err(Error::Syntax {
                    line,
                    column: 1,
                    message: format!("duplicate rule name {}", rule.name),
                });
            }
            rules.push(rule);
        }
    }
    Ok(Grammar {
        rules,
        start_graph: TopologyGraph::new(),
        degree_semantics: DegreeSemantics::default(),
    })
}
