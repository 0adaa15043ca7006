//! A finite regex dialect: parser, full-match matcher and uniform sampler
//! ("xeger").
//!
//! Supported: literals, `\d \w \s`, bracket sets with ranges and negation,
//! grouping with `(..)` or `(?:..)`, alternation, `?`, `{m}` and `{m,n}`.
//! A leading `^` and trailing `$` are accepted and ignored since matching is
//! always anchored.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

const PRINTABLE: std::ops::RangeInclusive<u8> = 32..=126;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegexNode {
    Literal(u8),
    /// Sorted, deduplicated member bytes.
    Class(Vec<u8>),
    Concat(Vec<RegexNode>),
    Alternation(Vec<RegexNode>),
    Repeat {
        node: Box<RegexNode>,
        min: u32,
        max: u32,
    },
    Optional(Box<RegexNode>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteRegex {
    source: String,
    ast: RegexNode,
}

impl FiniteRegex {
    pub fn ast(&self) -> &RegexNode {
        &self.ast
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn is_match(&self, s: &str) -> bool {
        regex_match(self, s)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> String {
        xeger_sample(self, rng)
    }
}

impl fmt::Display for FiniteRegex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl std::str::FromStr for FiniteRegex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_regex(s)
    }
}

fn digits() -> Vec<u8> {
    (b'0'..=b'9').collect()
}

fn word() -> Vec<u8> {
    let mut v: Vec<u8> = (b'0'..=b'9').chain(b'A'..=b'Z').chain(b'a'..=b'z').collect();
    v.push(b'_');
    v.sort_unstable();
    v
}

fn space() -> Vec<u8> {
    vec![b'\t', b' ']
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

fn syntax(position: usize, what: &str) -> Error {
    Error::SyntaxError { position, what: what.to_string() }
}

fn unsupported(position: usize, what: &str) -> Error {
    Error::UnsupportedConstruct { position, what: what.to_string() }
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    fn alternation(&mut self) -> Result<RegexNode> {
        let mut arms = vec![self.concat()?];
        while self.peek() == Some(b'|') {
            self.pos += 1;
            arms.push(self.concat()?);
        }
        Ok(if arms.len() == 1 { arms.pop().unwrap() } else { RegexNode::Alternation(arms) })
    }

    fn concat(&mut self) -> Result<RegexNode> {
        let mut items = Vec::new();
        while let Some(b) = self.peek() {
            if b == b'|' || b == b')' {
                break;
            }
            let atom = self.atom()?;
            items.push(self.quantified(atom)?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { RegexNode::Concat(items) })
    }

    fn quantified(&mut self, mut node: RegexNode) -> Result<RegexNode> {
        loop {
            match self.peek() {
                Some(b'?') => {
                    self.pos += 1;
                    node = RegexNode::Optional(Box::new(node));
                }
                Some(b'*') => return Err(unsupported(self.pos, "unbounded repetition '*'")),
                Some(b'+') => return Err(unsupported(self.pos, "unbounded repetition '+'")),
                Some(b'{') => {
                    let (min, max) = self.bounds()?;
                    node = RegexNode::Repeat { node: Box::new(node), min, max };
                }
                _ => return Ok(node),
            }
        }
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).ok()?.parse().ok()
    }

    fn bounds(&mut self) -> Result<(u32, u32)> {
        let open = self.pos;
        self.pos += 1;
        let min = self.number().ok_or_else(|| syntax(self.pos, "expected repetition count"))?;
        let max = match self.bump() {
            Some(b'}') => return Ok((min, min)),
            Some(b',') => {
                if self.peek() == Some(b'}') {
                    return Err(unsupported(open, "unbounded repetition '{m,}'"));
                }
                self.number().ok_or_else(|| syntax(self.pos, "expected repetition bound"))?
            }
            _ => return Err(syntax(self.pos.saturating_sub(1), "malformed repetition")),
        };
        if self.bump() != Some(b'}') {
            return Err(syntax(self.pos.saturating_sub(1), "expected '}'"));
        }
        if max < min {
            return Err(syntax(open, "repetition bounds out of order"));
        }
        Ok((min, max))
    }

    fn atom(&mut self) -> Result<RegexNode> {
        let at = self.pos;
        match self.bump().unwrap() {
            b'(' => {
                if self.src[self.pos..].starts_with(b"?:") {
                    self.pos += 2;
                } else if self.peek() == Some(b'?') {
                    return Err(unsupported(self.pos, "group modifier"));
                }
                let inner = self.alternation()?;
                if self.bump() != Some(b')') {
                    return Err(syntax(at, "unclosed group"));
                }
                Ok(inner)
            }
            b'[' => self.bracket(at),
            b'\\' => self.escape().map(|set| match set {
                Escaped::Byte(b) => RegexNode::Literal(b),
                Escaped::Set(s) => RegexNode::Class(s),
            }),
            b'.' => Err(unsupported(at, "wildcard '.'")),
            b'*' | b'+' | b'?' | b'{' => Err(syntax(at, "quantifier without operand")),
            b'^' | b'$' => Err(unsupported(at, "inner anchor")),
            b if b.is_ascii() && b != b'\n' && b != b'\r' => Ok(RegexNode::Literal(b)),
            _ => Err(syntax(at, "non-ASCII or control character")),
        }
    }

    fn escape(&mut self) -> Result<Escaped> {
        let at = self.pos;
        let b = self.bump().ok_or_else(|| syntax(at, "dangling backslash"))?;
        Ok(match b {
            b'd' => Escaped::Set(digits()),
            b'w' => Escaped::Set(word()),
            b's' => Escaped::Set(space()),
            b't' => Escaped::Byte(b'\t'),
            b'n' | b'r' => return Err(unsupported(at, "line-break escape")),
            b if b.is_ascii_punctuation() || b == b' ' => Escaped::Byte(b),
            _ => return Err(unsupported(at, "unknown escape")),
        })
    }

    fn bracket(&mut self, open: usize) -> Result<RegexNode> {
        let negate = self.peek() == Some(b'^');
        if negate {
            self.pos += 1;
        }
        let mut members = [false; 128];
        let mut first = true;
        loop {
            let at = self.pos;
            let b = self.bump().ok_or_else(|| syntax(open, "unclosed bracket"))?;
            if b == b']' && !first {
                break;
            }
            first = false;
            let lo = match b {
                b'\\' => match self.escape()? {
                    Escaped::Byte(b) => b,
                    Escaped::Set(s) => {
                        s.into_iter().for_each(|m| members[m as usize] = true);
                        continue;
                    }
                },
                b if b.is_ascii() && b >= b' ' => b,
                _ => return Err(syntax(at, "non-ASCII or control character")),
            };
            if self.peek() == Some(b'-') && self.src.get(self.pos + 1).is_some_and(|&n| n != b']') {
                self.pos += 1;
                let hi_at = self.pos;
                let hi = match self.bump().unwrap() {
                    b'\\' => match self.escape()? {
                        Escaped::Byte(b) => b,
                        Escaped::Set(_) => return Err(syntax(hi_at, "class escape as range bound")),
                    },
                    b if b.is_ascii() && b >= b' ' => b,
                    _ => return Err(syntax(hi_at, "non-ASCII or control character")),
                };
                if hi < lo {
                    return Err(syntax(at, "range out of order"));
                }
                (lo..=hi).for_each(|m| members[m as usize] = true);
            } else {
                members[lo as usize] = true;
            }
        }
        let set: Vec<u8> = if negate {
            PRINTABLE.filter(|&b| !members[b as usize]).collect()
        } else {
            (0..128u8).filter(|&b| members[b as usize]).collect()
        };
        if set.is_empty() {
            return Err(syntax(open, "empty character set"));
        }
        Ok(RegexNode::Class(set))
    }
}

enum Escaped {
    Byte(u8),
    Set(Vec<u8>),
}

pub fn parse_regex(pattern: &str) -> Result<FiniteRegex> {
    let mut body = pattern.as_bytes();
    let mut offset = 0;
    if body.first() == Some(&b'^') {
        body = &body[1..];
        offset = 1;
    }
    if body.last() == Some(&b'$') && !ends_escaped(body) {
        body = &body[..body.len() - 1];
    }
    let mut p = Parser { src: body, pos: 0 };
    let ast = p.alternation().map_err(|e| shift(e, offset))?;
    if p.pos < body.len() {
        return Err(syntax(p.pos + offset, "unmatched ')'"));
    }
    Ok(FiniteRegex { source: pattern.to_string(), ast })
}

fn ends_escaped(body: &[u8]) -> bool {
    let slashes = body[..body.len() - 1].iter().rev().take_while(|&&b| b == b'\\').count();
    slashes % 2 == 1
}

fn shift(e: Error, offset: usize) -> Error {
    match e {
        Error::SyntaxError { position, what } => Error::SyntaxError { position: position + offset, what },
        Error::UnsupportedConstruct { position, what } => {
            Error::UnsupportedConstruct { position: position + offset, what }
        }
        e => e,
    }
}

/// Advances a set of start offsets through `node`, returning every offset at
/// which a match of `node` can end.
fn step(node: &RegexNode, s: &[u8], starts: &[bool]) -> Vec<bool> {
    let n = s.len();
    match node {
        RegexNode::Literal(c) => {
            let mut out = vec![false; n + 1];
            for i in 0..n {
                if starts[i] && s[i] == *c {
                    out[i + 1] = true;
                }
            }
            out
        }
        RegexNode::Class(set) => {
            let mut out = vec![false; n + 1];
            for i in 0..n {
                if starts[i] && set.binary_search(&s[i]).is_ok() {
                    out[i + 1] = true;
                }
            }
            out
        }
        RegexNode::Concat(items) => items.iter().fold(starts.to_vec(), |cur, item| step(item, s, &cur)),
        RegexNode::Alternation(arms) => {
            let mut out = vec![false; n + 1];
            for arm in arms {
                for (o, e) in out.iter_mut().zip(step(arm, s, starts)) {
                    *o |= e;
                }
            }
            out
        }
        RegexNode::Optional(inner) => {
            let mut out = step(inner, s, starts);
            for (o, &st) in out.iter_mut().zip(starts) {
                *o |= st;
            }
            out
        }
        RegexNode::Repeat { node, min, max } => {
            let mut cur = starts.to_vec();
            let mut out = vec![false; n + 1];
            for count in 0..=*max {
                if count >= *min {
                    for (o, &c) in out.iter_mut().zip(&cur) {
                        *o |= c;
                    }
                }
                if count == *max || !cur.iter().any(|&c| c) {
                    break;
                }
                cur = step(node, s, &cur);
            }
            out
        }
    }
}

/// Anchored full match.
pub fn regex_match(r: &FiniteRegex, s: &str) -> bool {
    if !s.is_ascii() {
        return false;
    }
    let bytes = s.as_bytes();
    let mut starts = vec![false; bytes.len() + 1];
    starts[0] = true;
    step(&r.ast, bytes, &starts)[bytes.len()]
}

fn sample_node<R: Rng + ?Sized>(node: &RegexNode, rng: &mut R, out: &mut String) {
    match node {
        RegexNode::Literal(c) => out.push(*c as char),
        RegexNode::Class(set) => out.push(set[rng.gen_range(0..set.len())] as char),
        RegexNode::Concat(items) => items.iter().for_each(|i| sample_node(i, rng, out)),
        RegexNode::Alternation(arms) => sample_node(&arms[rng.gen_range(0..arms.len())], rng, out),
        RegexNode::Optional(inner) => {
            if rng.gen_bool(0.5) {
                sample_node(inner, rng, out);
            }
        }
        RegexNode::Repeat { node, min, max } => {
            for _ in 0..rng.gen_range(*min..=*max) {
                sample_node(node, rng, out);
            }
        }
    }
}

pub fn xeger_sample<R: Rng + ?Sized>(r: &FiniteRegex, rng: &mut R) -> String {
    let mut out = String::new();
    sample_node(&r.ast, rng, &mut out);
    out
}
