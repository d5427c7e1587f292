//! A small reader for the Graphviz DOT language, independent of the
//! library's writer. It accepts graphs, subgraphs, attribute lists and edge
//! chains, which is what provenance graphs use.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Id(String),
    Arrow,
    UndirectedEdge,
    Punct(char),
}

fn tokenize(text: &str) -> Result<Vec<Token>, String> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '{' | '}' | '[' | ']' | ';' | ',' | '=' => {
                chars.next();
                out.push(Token::Punct(c));
            }
            '-' => {
                chars.next();
                match chars.next() {
                    Some('>') => out.push(Token::Arrow),
                    Some('-') => out.push(Token::UndirectedEdge),
                    other => return Err(format!("stray `-` before {other:?}")),
                }
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => return Err("unterminated string".into()),
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some(other) => {
                                s.push('\\');
                                s.push(other);
                            }
                            None => return Err("unterminated escape".into()),
                        },
                        Some(other) => s.push(other),
                    }
                }
                out.push(Token::Id(s));
            }
            c if c.is_alphanumeric() || c == '_' || c == '.' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' || c == '.' {
                        s.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Token::Id(s));
            }
            other => return Err(format!("unexpected character {other:?}")),
        }
    }
    Ok(out)
}

pub type Attrs = BTreeMap<String, String>;

#[derive(Debug, Default)]
pub struct Dot {
    pub directed: bool,
    pub name: Option<String>,
    /// Explicitly declared nodes in declaration order.
    pub nodes: Vec<(String, Attrs)>,
    pub edges: Vec<(String, String, Attrs)>,
    /// `rank=...` blocks with their member nodes.
    pub ranks: Vec<(String, Vec<String>)>,
    pub clusters: Vec<String>,
}

impl Dot {
    pub fn node(&self, id: &str) -> Option<&Attrs> {
        self.nodes.iter().find(|(n, _)| n == id).map(|(_, a)| a)
    }

    pub fn rank(&self, rank: &str) -> Vec<&str> {
        self.ranks
            .iter()
            .filter(|(r, _)| r == rank)
            .flat_map(|(_, ids)| ids.iter().map(String::as_str))
            .collect()
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dot: Dot,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, c: char) -> Result<(), String> {
        match self.next() {
            Some(Token::Punct(p)) if p == c => Ok(()),
            other => Err(format!("expected `{c}`, found {other:?} at token {}", self.pos - 1)),
        }
    }

    fn id(&mut self) -> Result<String, String> {
        match self.next() {
            Some(Token::Id(s)) => Ok(s),
            other => Err(format!("expected an identifier, found {other:?} at token {}", self.pos - 1)),
        }
    }

    fn keyword(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Token::Id(s)) if s.eq_ignore_ascii_case(word))
    }

    fn graph(&mut self) -> Result<(), String> {
        if self.keyword("strict") {
            self.next();
        }
        self.dot.directed = match self.id()?.to_ascii_lowercase().as_str() {
            "digraph" => true,
            "graph" => false,
            other => return Err(format!("expected graph or digraph, found `{other}`")),
        };
        if let Some(Token::Id(_)) = self.peek() {
            self.dot.name = Some(self.id()?);
        }
        self.expect('{')?;
        self.statements(None)?;
        self.expect('}')?;
        if self.pos != self.tokens.len() {
            return Err(format!("trailing tokens after the graph at token {}", self.pos));
        }
        Ok(())
    }

    /// Statements up to the closing brace. `rank` collects node ids when
    /// the enclosing block sets `rank=...`.
    fn statements(&mut self, mut rank: Option<(String, Vec<String>)>) -> Result<Option<(String, Vec<String>)>, String> {
        loop {
            match self.peek() {
                None => return Err("unexpected end of input".into()),
                Some(Token::Punct('}')) => return Ok(rank),
                Some(Token::Punct(';')) => {
                    self.next();
                }
                _ => self.statement(&mut rank)?,
            }
        }
    }

    fn attr_list(&mut self) -> Result<Attrs, String> {
        let mut attrs = Attrs::new();
        while let Some(Token::Punct('[')) = self.peek() {
            self.next();
            loop {
                if let Some(Token::Punct(']')) = self.peek() {
                    self.next();
                    break;
                }
                let key = self.id()?;
                self.expect('=')?;
                let value = self.id()?;
                attrs.insert(key, value);
                if let Some(Token::Punct(',' | ';')) = self.peek() {
                    self.next();
                }
            }
        }
        Ok(attrs)
    }

    fn subgraph(&mut self) -> Result<(), String> {
        let mut cluster = None;
        if self.keyword("subgraph") {
            self.next();
            if let Some(Token::Id(_)) = self.peek() {
                cluster = Some(self.id()?);
            }
        }
        self.expect('{')?;
        let rank = self.statements(None)?;
        self.expect('}')?;
        if let Some(c) = cluster {
            self.dot.clusters.push(c);
        }
        if let Some(r) = rank {
            self.dot.ranks.push(r);
        }
        Ok(())
    }

    fn statement(&mut self, rank: &mut Option<(String, Vec<String>)>) -> Result<(), String> {
        if self.keyword("subgraph") || matches!(self.peek(), Some(Token::Punct('{'))) {
            return self.subgraph();
        }
        if self.keyword("graph") || self.keyword("node") || self.keyword("edge") {
            self.next();
            self.attr_list()?;
            return Ok(());
        }
        let first = self.id()?;
        if let Some(Token::Punct('=')) = self.peek() {
            self.next();
            let value = self.id()?;
            if first == "rank" {
                *rank = Some((value, Vec::new()));
            }
            return Ok(());
        }
        let mut chain = vec![first];
        loop {
            match self.peek() {
                Some(Token::Arrow) if self.dot.directed => {}
                Some(Token::UndirectedEdge) if !self.dot.directed => {}
                Some(Token::Arrow | Token::UndirectedEdge) => return Err("edge operator does not match the graph kind".into()),
                _ => break,
            }
            self.next();
            chain.push(self.id()?);
        }
        let attrs = self.attr_list()?;
        if chain.len() == 1 {
            let id = chain.pop().unwrap();
            if let Some((_, members)) = rank {
                members.push(id.clone());
                if attrs.is_empty() {
                    return Ok(());
                }
            }
            if self.dot.nodes.iter().any(|(n, _)| *n == id) {
                return Err(format!("node `{id}` is declared twice"));
            }
            self.dot.nodes.push((id, attrs));
        } else {
            for pair in chain.windows(2) {
                self.dot.edges.push((pair[0].clone(), pair[1].clone(), attrs.clone()));
            }
        }
        Ok(())
    }
}

/// Parses `text` and requires every edge endpoint and ranked node to be
/// declared.
pub fn parse(text: &str) -> Result<Dot, String> {
    let mut p = Parser {
        tokens: tokenize(text)?,
        pos: 0,
        dot: Dot::default(),
    };
    p.graph()?;
    let dot = p.dot;
    for (a, b, _) in &dot.edges {
        for end in [a, b] {
            if dot.node(end).is_none() {
                return Err(format!("edge endpoint `{end}` is never declared"));
            }
        }
    }
    for (_, ids) in &dot.ranks {
        if let Some(id) = ids.iter().find(|id| dot.node(id).is_none()) {
            return Err(format!("ranked node `{id}` is never declared"));
        }
    }
    Ok(dot)
}
