//! DOT interchange format for strategy DAGs.
//!
//! Normal form (ASCII, LF line endings, one statement per line):
//!
//! ```text
//! digraph strategy {
//!   graph [bs_m=3,bs_t=4,bs_g=3];
//!   n0 [loads="0,0,0",next="1"];
//!   n1 [loads="3,1,1",next="3",packing="3;3;1,1"];
//!   n0 -> n1;
//! }
//! ```
//!
//! `next` holds one item, or several for a compressed node. `packing` lists
//! bins separated by `;` and items by `,`; an empty segment is an empty bin.
//! Edges are unlabeled and the root is the unique node without in-edges. Items
//! are not stored; the parser derives them along edges and rejects conflicts.
//!
//! The parser accepts a practical DOT subset: comments, quoted or bare IDs,
//! `graph`/`node`/`edge` attribute statements, edge chains and unknown
//! attributes (ignored). Subgraphs and undirected edges are rejected.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::dag::{DagNode, StrategyDag};
use crate::game::{GameParams, ItemMultiset, PackingCertificate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct DotError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, DotError> {
    Err(DotError {
        line,
        message: message.into(),
    })
}

fn join(values: &[u32]) -> String {
    let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    parts.join(",")
}

/// Serialize in the normal form. Nodes are named `n<index>`.
pub fn emit_dot(dag: &StrategyDag, params: &GameParams) -> String {
    let mut out = String::new();
    out.push_str("digraph strategy {\n");
    let _ = writeln!(
        out,
        "  graph [bs_m={},bs_t={},bs_g={}];",
        params.m(),
        params.t(),
        params.g()
    );
    for (i, node) in dag.nodes.iter().enumerate() {
        let _ = write!(
            out,
            "  n{i} [loads=\"{}\",next=\"{}\"",
            join(&node.loads),
            join(&node.next_items)
        );
        if let Some(p) = &node.packing {
            let bins: Vec<String> = p.bins.iter().map(|b| join(b)).collect();
            let _ = write!(out, ",packing=\"{}\"", bins.join(";"));
        }
        out.push_str("];\n");
    }
    for (i, node) in dag.nodes.iter().enumerate() {
        for c in &node.children {
            let _ = writeln!(out, "  n{i} -> n{c};");
        }
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Id(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Eq,
    Semi,
    Comma,
    Arrow,
    UndirectedEdge,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, DotError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut i = 0usize;
    let mut line_start = true;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            i += 1;
            line_start = true;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' && line_start {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        line_start = false;
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let start = line;
            i += 2;
            loop {
                match chars.get(i) {
                    None => return err(start, "unterminated comment"),
                    Some('*') if chars.get(i + 1) == Some(&'/') => {
                        i += 2;
                        break;
                    }
                    Some('\n') => {
                        line += 1;
                        i += 1;
                    }
                    Some(_) => i += 1,
                }
            }
            continue;
        }
        let simple = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '=' => Some(Tok::Eq),
            ';' => Some(Tok::Semi),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = simple {
            toks.push((tok, line));
            i += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            toks.push((Tok::Arrow, line));
            i += 2;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            toks.push((Tok::UndirectedEdge, line));
            i += 2;
            continue;
        }
        if c == '"' {
            let start = line;
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return err(start, "unterminated string"),
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') if chars.get(i + 1) == Some(&'"') => {
                        s.push('"');
                        i += 2;
                    }
                    Some('\\') if chars.get(i + 1) == Some(&'\n') => {
                        line += 1;
                        i += 2;
                    }
                    Some(&ch) => {
                        if ch == '\n' {
                            line += 1;
                        }
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            toks.push((Tok::Id(s), start));
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
            let mut s = String::new();
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '.')
            {
                s.push(chars[i]);
                i += 1;
            }
            toks.push((Tok::Id(s), line));
            continue;
        }
        return err(line, format!("unexpected character {c:?}"));
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(_, l)| *l)
            .unwrap_or(1)
    }

    fn next(&mut self) -> Option<Tok> {
        let tok = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        tok
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), DotError> {
        let line = self.line();
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => err(line, format!("expected {what}, found {t:?}")),
            None => err(line, format!("expected {what}, found end of input")),
        }
    }

    fn id(&mut self, what: &str) -> Result<String, DotError> {
        let line = self.line();
        match self.next() {
            Some(Tok::Id(s)) => Ok(s),
            Some(t) => err(line, format!("expected {what}, found {t:?}")),
            None => err(line, format!("expected {what}, found end of input")),
        }
    }

    fn attr_list(&mut self) -> Result<Vec<(String, String, usize)>, DotError> {
        let mut attrs = Vec::new();
        while self.peek() == Some(&Tok::LBracket) {
            self.next();
            loop {
                match self.peek() {
                    Some(Tok::RBracket) => {
                        self.next();
                        break;
                    }
                    Some(Tok::Comma) | Some(Tok::Semi) => {
                        self.next();
                    }
                    _ => {
                        let line = self.line();
                        let key = self.id("attribute name")?;
                        self.expect(Tok::Eq, "'='")?;
                        let value = self.id("attribute value")?;
                        attrs.push((key, value, line));
                    }
                }
            }
        }
        Ok(attrs)
    }
}

fn parse_list(value: &str, line: usize, what: &str) -> Result<Vec<u32>, DotError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .or_else(|_| err(line, format!("malformed {what} value {value:?}")))
        })
        .collect()
}

struct RawNode {
    line: usize,
    loads: Option<Vec<u32>>,
    next: Option<Vec<u32>>,
    packing: Option<PackingCertificate>,
}

/// Parse a strategy DAG, deriving every node's items from the root.
pub fn parse_dot(text: &str) -> Result<(GameParams, StrategyDag), DotError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    if let Some(Tok::Id(s)) = p.peek() {
        if s.eq_ignore_ascii_case("strict") {
            p.next();
        }
    }
    let line = p.line();
    match p.next() {
        Some(Tok::Id(s)) if s.eq_ignore_ascii_case("digraph") => {}
        Some(Tok::Id(s)) if s.eq_ignore_ascii_case("graph") => {
            return err(line, "undirected graphs are not strategies")
        }
        _ => return err(line, "expected 'digraph'"),
    }
    if let Some(Tok::Id(_)) = p.peek() {
        p.next();
    }
    p.expect(Tok::LBrace, "'{'")?;

    let mut graph_attrs: HashMap<String, (String, usize)> = HashMap::new();
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut nodes: Vec<RawNode> = Vec::new();
    let mut edges: Vec<(String, String, usize)> = Vec::new();

    loop {
        let line = p.line();
        match p.peek() {
            None => return err(line, "missing closing '}'"),
            Some(Tok::RBrace) => {
                p.next();
                break;
            }
            Some(Tok::Semi) => {
                p.next();
                continue;
            }
            _ => {}
        }
        let first = p.id("statement")?;
        let lower = first.to_ascii_lowercase();
        if lower == "subgraph" {
            return err(line, "subgraphs are not supported");
        }
        if lower == "graph" || lower == "node" || lower == "edge" {
            let attrs = p.attr_list()?;
            if lower == "graph" {
                for (k, v, l) in attrs {
                    graph_attrs.insert(k, (v, l));
                }
            }
            continue;
        }
        match p.peek() {
            Some(Tok::Eq) => {
                p.next();
                let value = p.id("attribute value")?;
                graph_attrs.insert(first, (value, line));
            }
            Some(Tok::Arrow) => {
                let mut from = first;
                while p.peek() == Some(&Tok::Arrow) {
                    p.next();
                    let to = p.id("edge target")?;
                    edges.push((from, to.clone(), line));
                    from = to;
                }
                p.attr_list()?;
            }
            Some(Tok::UndirectedEdge) => return err(line, "undirected edge in a digraph"),
            _ => {
                let attrs = p.attr_list()?;
                if names.contains_key(&first) {
                    return err(line, format!("node {first:?} declared twice"));
                }
                let mut node = RawNode {
                    line,
                    loads: None,
                    next: None,
                    packing: None,
                };
                for (k, v, l) in attrs {
                    match k.as_str() {
                        "loads" => node.loads = Some(parse_list(&v, l, "loads")?),
                        "next" => node.next = Some(parse_list(&v, l, "next")?),
                        "packing" => {
                            let bins = v
                                .split(';')
                                .map(|seg| parse_list(seg, l, "packing"))
                                .collect::<Result<Vec<_>, _>>()?;
                            node.packing = Some(PackingCertificate::new(bins));
                        }
                        _ => {}
                    }
                }
                names.insert(first, nodes.len());
                nodes.push(node);
            }
        }
    }
    if p.peek().is_some() {
        return err(p.line(), "content after closing '}'");
    }

    let get = |key: &str| -> Result<u32, DotError> {
        match graph_attrs.get(key) {
            Some((v, l)) => v
                .trim()
                .parse::<u32>()
                .or_else(|_| err(*l, format!("malformed {key} value {v:?}"))),
            None => err(1, format!("missing graph attribute {key}")),
        }
    };
    let m = get("bs_m")?;
    let t = get("bs_t")?;
    let g = get("bs_g")?;
    let params = GameParams::new(m as usize, t, g).map_err(|e| DotError {
        line: graph_attrs.get("bs_m").map(|(_, l)| *l).unwrap_or(1),
        message: e.to_string(),
    })?;

    let mut dag_nodes = Vec::with_capacity(nodes.len());
    for raw in &nodes {
        let loads = match &raw.loads {
            Some(l) if l.len() == params.m() => l.clone(),
            Some(l) => {
                return err(
                    raw.line,
                    format!("loads has {} entries, expected {}", l.len(), params.m()),
                )
            }
            None => return err(raw.line, "node without loads attribute"),
        };
        let next = match &raw.next {
            Some(n) if !n.is_empty() => n.clone(),
            _ => return err(raw.line, "node without next attribute"),
        };
        dag_nodes.push(DagNode {
            loads,
            items: ItemMultiset::new(params.g()),
            next_items: next,
            packing: raw.packing.clone(),
            children: Vec::new(),
        });
    }
    let mut indegree = vec![0usize; dag_nodes.len()];
    for (from, to, line) in &edges {
        let (Some(&a), Some(&b)) = (names.get(from), names.get(to)) else {
            let missing = if names.contains_key(from) { to } else { from };
            return err(*line, format!("edge references undeclared node {missing:?}"));
        };
        if !dag_nodes[a].children.contains(&b) {
            dag_nodes[a].children.push(b);
            indegree[b] += 1;
        }
    }
    let roots: Vec<usize> = (0..dag_nodes.len()).filter(|&i| indegree[i] == 0).collect();
    let root = match roots.as_slice() {
        [] => {
            let line = nodes.first().map(|n| n.line).unwrap_or(1);
            return err(line, "no root");
        }
        [r] => *r,
        [_, second, ..] => {
            return err(nodes[*second].line, "more than one node without in-edges")
        }
    };
    let mut dag = StrategyDag {
        nodes: dag_nodes,
        root,
    };
    let Some(order) = dag.topological_order() else {
        return err(nodes[root].line, "strategy graph has a cycle");
    };

    let mut derived: Vec<Option<ItemMultiset>> = vec![None; dag.nodes.len()];
    derived[root] = Some(ItemMultiset::new(params.g()));
    for &i in &order {
        let items = derived[i].clone().expect("parents precede children");
        let node = &dag.nodes[i];
        if !node.children.is_empty() {
            if node.is_compressed() {
                return err(nodes[i].line, "compressed node has successors");
            }
            let mut child_items = items.clone();
            if child_items.insert(node.next_items[0]).is_err() {
                return err(
                    nodes[i].line,
                    format!("next item {} outside 1..={}", node.next_items[0], params.g()),
                );
            }
            for &c in &node.children {
                match &derived[c] {
                    Some(existing) if *existing != child_items => {
                        return err(
                            nodes[c].line,
                            format!(
                                "inconsistent item derivation: {existing} versus {child_items}"
                            ),
                        )
                    }
                    Some(_) => {}
                    None => derived[c] = Some(child_items.clone()),
                }
            }
        }
        dag.nodes[i].items = items;
    }
    Ok((params, dag))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIGURE_ONE: &str = "digraph lb43 {
  // the classic 4/3 strategy, three bins of size 3
  bs_m = 3; bs_t = 4; bs_g = 3;
  root [loads=\"0,0,0\", next=\"1\"];
  a [loads=\"1,0,0\", next=\"1\"];
  b [loads=\"2,0,0\", next=\"2\", packing=\"2,1;1;\"];
  c [loads=\"1,1,0\", next=\"3\", packing=\"3;1;1\"];
  d [loads=\"2,2,0\", next=\"2\", packing=\"2,1;2,1;\"];
  e [loads=\"3,1,1\", next=\"3\", packing=\"3;3;1,1\"];
  f [loads=\"2,2,2\", next=\"2\", packing=\"2,1;2,1;2\"];
  root -> a -> b -> d -> f;
  a -> c -> e;
}
";

    #[test]
    fn figure_one_parses() {
        let (params, dag) = parse_dot(FIGURE_ONE).unwrap();
        assert_eq!(params, GameParams::new(3, 4, 3).unwrap());
        assert_eq!(dag.len(), 7);
        assert_eq!(dag.root, 0);
        let e = &dag.nodes[5];
        assert_eq!(e.items, ItemMultiset::from_items(3, &[1, 1, 3]).unwrap());
        assert_eq!(e.packing.as_ref().unwrap().bins, vec![vec![3], vec![3], vec![1, 1]]);
        let b = &dag.nodes[2];
        assert_eq!(b.packing.as_ref().unwrap().bins, vec![vec![2, 1], vec![1], vec![]]);
    }

    #[test]
    fn emit_parse_round_trip() {
        let (params, dag) = parse_dot(FIGURE_ONE).unwrap();
        let text = emit_dot(&dag, &params);
        let (params2, dag2) = parse_dot(&text).unwrap();
        assert_eq!(params2, params);
        assert_eq!(dag2, dag);
        assert_eq!(emit_dot(&dag2, &params2), text);
        assert!(text.is_ascii());
        assert!(!text.contains('\r'));
    }

    #[test]
    fn rejects_malformed_input() {
        let cases = [
            ("digraph { bs_m=3; bs_t=4; bs_g=3; }", "no root"),
            ("digraph { bs_m=3; bs_t=4; bs_g=3; a [loads=\"0,0,0\",next=\"1\"]; a -> b; }", "undeclared"),
            ("digraph { bs_m=3; bs_t=4; bs_g=3; a [loads=\"0,0\",next=\"1\"]; }", "entries"),
            ("digraph { bs_m=3; bs_t=4; a [loads=\"0,0,0\",next=\"1\"]; }", "bs_g"),
            ("digraph { bs_m=3; bs_t=4; bs_g=3; a [loads=\"0,x,0\",next=\"1\"]; }", "malformed"),
            ("digraph { bs_m=3; bs_t=4; bs_g=3; a [loads=\"0,0,0\",next=\"1\"];\n b [loads=\"1,0,0\",next=\"1\"]; c [loads=\"2,0,0\",next=\"1\"];\n b -> c; c -> b; a -> b; }", "cycle"),
            ("digraph { bs_m=3; bs_t=4; bs_g=3; a [loads=\"0,0,0\",next=\"1\"]", "closing"),
            ("graph { }", "undirected"),
        ];
        for (text, needle) in cases {
            let e = parse_dot(text).unwrap_err();
            assert!(e.message.contains(needle), "{text:?}: {e}");
        }
    }

    #[test]
    fn rejects_conflicting_derivations() {
        // Node c is reached after sending 1 from [1,0,0] and after sending 2 from [0,0,0].
        let text = "digraph {
graph [bs_m=3,bs_t=9,bs_g=6];
r [loads=\"0,0,0\",next=\"2\"];
a [loads=\"1,0,0\",next=\"1\"];
c [loads=\"2,0,0\",next=\"6\"];
r -> c;
r -> a;
a -> c;
}
";
        let e = parse_dot(text).unwrap_err();
        assert!(e.message.contains("inconsistent"), "{e}");
        assert_eq!(e.line, 5);
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let text = "digraph {\n  graph [bs_m=3,bs_t=4,bs_g=3];\n  n0 [loads=\"0,0,0\",next=\"1\"];\n  n0 -> n7;\n}\n";
        let e = parse_dot(text).unwrap_err();
        assert_eq!(e.line, 4);
    }
}
