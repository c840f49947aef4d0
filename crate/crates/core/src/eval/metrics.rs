//! Exact match, n-gram BLEU, keyword-weighted BLEU, statement-tree syntax
//! match, def-use dataflow match, and their CodeBLEU combination.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::syntax::{body_tree, dedent, is_keyword, normalize_newlines, tokenize, StmtNode, Token, TokenKind};

/// Trailing whitespace stripped per line, outer blank lines dropped.
pub fn normalize_for_em(text: &str) -> String {
    let text = normalize_newlines(text);
    let lines: Vec<&str> = text.split('\n').map(str::trim_end).collect();
    let first = lines.iter().position(|l| !l.is_empty());
    let last = lines.iter().rposition(|l| !l.is_empty());
    match (first, last) {
        (Some(a), Some(b)) => lines[a..=b].join("\n"),
        _ => String::new(),
    }
}

pub fn exact_match(pred: &str, gold: &str) -> u8 {
    u8::from(normalize_for_em(pred) == normalize_for_em(gold))
}

/// Code tokens for n-gram scoring: comments and layout removed. Text that
/// does not lex falls back to a whitespace split.
pub fn metric_tokens(text: &str) -> Vec<String> {
    match tokenize(&dedent(text)) {
        Ok(toks) => {
            toks.into_iter().filter(|t| !t.is_layout() && t.kind != TokenKind::Comment).map(|t| t.text).collect()
        }
        Err(_) => text.split_whitespace().map(str::to_string).collect(),
    }
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut out = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w).or_insert(0) += 1;
        }
    }
    out
}

fn brevity_penalty(pred_len: usize, gold_len: usize) -> f64 {
    (1.0 - gold_len as f64 / pred_len as f64).exp().min(1.0)
}

/// Geometric mean of clipped n-gram precisions (a zero match count `m`
/// over `c` candidates becomes `1/(c+1)`) times the brevity penalty. Two
/// empty sequences score 1.
pub fn ngram_bleu(pred: &[String], gold: &[String], max_n: usize) -> f64 {
    if pred.is_empty() && gold.is_empty() {
        return 1.0;
    }
    if pred.is_empty() || max_n == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let p = ngrams(pred, n);
        let g = ngrams(gold, n);
        let candidates: usize = p.values().sum();
        let matched: usize = p.iter().map(|(k, c)| (*c).min(*g.get(k).unwrap_or(&0))).sum();
        let precision = if matched > 0 { matched as f64 / candidates as f64 } else { 1.0 / (candidates as f64 + 1.0) };
        log_sum += precision.ln();
    }
    (log_sum / max_n as f64).exp() * brevity_penalty(pred.len(), gold.len())
}

/// As [`ngram_bleu`], but unigram precision counts keyword tokens
/// `keyword_weight` times.
pub fn weighted_ngram_bleu(pred: &[String], gold: &[String], max_n: usize, keyword_weight: f64) -> f64 {
    if pred.is_empty() && gold.is_empty() {
        return 1.0;
    }
    if pred.is_empty() || max_n == 0 {
        return 0.0;
    }
    let weight = |t: &str| if is_keyword(t) { keyword_weight } else { 1.0 };
    let p = ngrams(pred, 1);
    let g = ngrams(gold, 1);
    let mut total = 0.0;
    let mut matched = 0.0;
    for (k, c) in &p {
        let w = weight(&k[0]);
        total += w * *c as f64;
        matched += w * (*c).min(*g.get(k).unwrap_or(&0)) as f64;
    }
    let p1 = if matched > 0.0 { matched / total } else { 1.0 / (total + 1.0) };
    let mut log_sum = p1.ln();
    for n in 2..=max_n {
        let p = ngrams(pred, n);
        let g = ngrams(gold, n);
        let candidates: usize = p.values().sum();
        let m: usize = p.iter().map(|(k, c)| (*c).min(*g.get(k).unwrap_or(&0))).sum();
        let precision = if m > 0 { m as f64 / candidates as f64 } else { 1.0 / (candidates as f64 + 1.0) };
        log_sum += precision.ln();
    }
    (log_sum / max_n as f64).exp() * brevity_penalty(pred.len(), gold.len())
}

/// `(kind leaf... child...)` for a node and all its descendants.
pub fn sexp(node: &StmtNode) -> String {
    let mut out = format!("({}", node.kind);
    for l in &node.leaves {
        out.push(' ');
        out.push_str(&format!("{l:?}"));
    }
    for c in &node.children {
        out.push(' ');
        out.push_str(&sexp(c));
    }
    out.push(')');
    out
}

fn subtrees(node: &StmtNode, out: &mut Vec<String>) {
    out.push(sexp(node));
    for c in &node.children {
        subtrees(c, out);
    }
}

/// Share of gold subtrees (every node with its full descendant structure)
/// that also occur in the prediction.
pub fn syntax_match(pred: &str, gold: &str) -> f64 {
    let Ok(gold_tree) = body_tree(gold) else {
        return f64::from(exact_match(pred, gold));
    };
    let Ok(pred_tree) = body_tree(pred) else { return 0.0 };
    let mut g = Vec::new();
    subtrees(&gold_tree, &mut g);
    let mut p = Vec::new();
    subtrees(&pred_tree, &mut p);
    let present: BTreeSet<&String> = p.iter().collect();
    g.iter().filter(|s| present.contains(s)).count() as f64 / g.len() as f64
}

/// A def-use edge: (normalized variable, defining line, using line), lines
/// counted in logical statements.
pub type DataflowEdge = (String, usize, usize);

/// Def-use edges where each use links to the most recent earlier
/// definition of the same name. Names are renamed `var_0, var_1, ...` in
/// order of first definition.
pub fn dataflow_edges(text: &str) -> BTreeSet<DataflowEdge> {
    let Ok(tokens) = tokenize(&dedent(text)) else { return BTreeSet::new() };
    let lines = logical_lines(&tokens);
    let mut last_def: HashMap<&str, usize> = HashMap::new();
    let mut renamed: HashMap<&str, String> = HashMap::new();
    let mut edges = BTreeSet::new();
    for (i, line) in lines.iter().enumerate() {
        let (defs, uses) = defs_and_uses(line);
        for u in uses {
            if let Some(&d) = last_def.get(u) {
                if d < i {
                    edges.insert((renamed[u].clone(), d, i));
                }
            }
        }
        for d in defs {
            let next = renamed.len();
            renamed.entry(d).or_insert_with(|| format!("var_{next}"));
            last_def.insert(d, i);
        }
    }
    edges
}

/// Non-layout tokens grouped per logical line. A compound header and its
/// same-line body count as one line.
fn logical_lines(tokens: &[Token]) -> Vec<Vec<&Token>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for t in tokens {
        match t.kind {
            TokenKind::Newline | TokenKind::EndMarker => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            TokenKind::Indent | TokenKind::Dedent | TokenKind::Comment => {}
            _ => cur.push(t),
        }
    }
    out
}

fn defs_and_uses<'a>(line: &[&'a Token]) -> (Vec<&'a str>, Vec<&'a str>) {
    let mut defs: Vec<usize> = Vec::new();
    let mut depth = 0i32;
    let ident = |t: &Token| t.kind == TokenKind::Identifier;
    // Depth-0 plain `=` positions split targets from the value.
    let mut assign_ends = Vec::new();
    for (i, t) in line.iter().enumerate() {
        match t.text.as_str() {
            "(" | "[" | "{" if t.kind == TokenKind::Punct => depth += 1,
            ")" | "]" | "}" if t.kind == TokenKind::Punct => depth -= 1,
            "=" if t.kind == TokenKind::Operator && depth == 0 => assign_ends.push(i),
            _ => {}
        }
    }
    // Plain names in a target list; `a.b` and `a[i]` targets bind nothing.
    let target_names = |from: usize, to: usize, defs: &mut Vec<usize>| {
        let mut j = from;
        while j < to {
            let t = line[j];
            let after_dot = j > 0 && line[j - 1].is_punct(".");
            let trailer =
                j + 1 < to && (line[j + 1].is_punct(".") || line[j + 1].is_punct("[") || line[j + 1].is_punct("("));
            if ident(t) && !after_dot && trailer {
                let mut rel = 0i32;
                j += 1;
                while j < to {
                    let u = line[j];
                    match u.text.as_str() {
                        "(" | "[" | "{" if u.kind == TokenKind::Punct => rel += 1,
                        ")" | "]" | "}" if u.kind == TokenKind::Punct => {
                            rel -= 1;
                            if rel < 0 {
                                break;
                            }
                        }
                        "," if rel == 0 => break,
                        _ => {}
                    }
                    j += 1;
                }
                continue;
            }
            if ident(t) && !after_dot {
                defs.push(j);
            }
            j += 1;
        }
    };
    let first = line.first().map(|t| t.text.as_str()).unwrap_or_default();
    if !assign_ends.is_empty() {
        let mut start = 0;
        for &e in &assign_ends {
            // Annotated target: only the name before `:` is bound.
            let colon = (start..e).find(|&j| line[j].is_punct(":"));
            target_names(start, colon.unwrap_or(e), &mut defs);
            start = e + 1;
        }
    } else if line.len() >= 2
        && ident(line[0])
        && line[1].kind == TokenKind::Operator
        && line[1].text.len() >= 2
        && line[1].text.ends_with('=')
        && !matches!(line[1].text.as_str(), "==" | "<=" | ">=" | "!=")
    {
        defs.push(0);
    } else if (first == "for" || (first == "async" && line.get(1).is_some_and(|t| t.text == "for")))
        && line.iter().any(|t| t.is_keyword("in"))
    {
        let s = if first == "for" { 1 } else { 2 };
        let e = line.iter().position(|t| t.is_keyword("in")).unwrap_or(s);
        target_names(s, e, &mut defs);
    } else if line.len() >= 3 && ident(line[0]) && line[1].is_punct(":") {
        defs.push(0);
    }
    for (j, t) in line.iter().enumerate() {
        // `with ... as x`, `except E as x`, walrus.
        if t.is_keyword("as") && line.get(j + 1).is_some_and(|n| ident(n)) && first != "import" && first != "from" {
            defs.push(j + 1);
        }
        if t.is_op(":=") && j > 0 && ident(line[j - 1]) {
            defs.push(j - 1);
        }
    }
    let def_set: BTreeSet<usize> = defs.iter().copied().collect();
    let aug = line.len() >= 2
        && line[1].kind == TokenKind::Operator
        && line[1].text.len() >= 2
        && line[1].text.ends_with('=')
        && !matches!(line[1].text.as_str(), "==" | "<=" | ">=" | "!=");
    let mut uses = Vec::new();
    let mut d = 0i32;
    for (j, t) in line.iter().enumerate() {
        match t.text.as_str() {
            "(" | "[" | "{" if t.kind == TokenKind::Punct => d += 1,
            ")" | "]" | "}" if t.kind == TokenKind::Punct => d -= 1,
            _ => {}
        }
        if !ident(t) || (j > 0 && line[j - 1].is_punct(".")) {
            continue;
        }
        let kwarg = d > 0 && line.get(j + 1).is_some_and(|n| n.is_op("="));
        if kwarg || (def_set.contains(&j) && !(aug && j == 0)) {
            continue;
        }
        uses.push(t.text.as_str());
    }
    let defs = defs.into_iter().map(|j| line[j].text.as_str()).collect();
    (defs, uses)
}

/// |gold ∩ pred| / |gold| over def-use edges; 1 when gold has none.
pub fn dataflow_match(pred: &str, gold: &str) -> f64 {
    let g = dataflow_edges(gold);
    if g.is_empty() {
        return 1.0;
    }
    let p = dataflow_edges(pred);
    g.intersection(&p).count() as f64 / g.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodeBleuWeights {
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub syntax: f64,
    pub dataflow: f64,
    pub keyword_weight: f64,
}

impl Default for CodeBleuWeights {
    fn default() -> Self {
        CodeBleuWeights { ngram: 0.25, weighted_ngram: 0.25, syntax: 0.25, dataflow: 0.25, keyword_weight: 4.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CodeBleuParts {
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub syntax: f64,
    pub dataflow: f64,
    pub combined: f64,
}

pub fn codebleu_parts(pred: &str, gold: &str, w: &CodeBleuWeights) -> CodeBleuParts {
    let (pt, gt) = (metric_tokens(pred), metric_tokens(gold));
    let ngram = ngram_bleu(&pt, &gt, 4);
    let weighted_ngram = weighted_ngram_bleu(&pt, &gt, 4, w.keyword_weight);
    let syntax = syntax_match(pred, gold);
    let dataflow = dataflow_match(pred, gold);
    let combined = w.ngram * ngram + w.weighted_ngram * weighted_ngram + w.syntax * syntax + w.dataflow * dataflow;
    CodeBleuParts { ngram, weighted_ngram, syntax, dataflow, combined }
}

pub fn codebleu(pred: &str, gold: &str) -> f64 {
    codebleu_parts(pred, gold, &CodeBleuWeights::default()).combined
}

/// Per-kind counts of statement nodes, used in reports.
pub fn statement_kinds(text: &str) -> BTreeMap<String, usize> {
    fn walk(n: &StmtNode, out: &mut BTreeMap<String, usize>) {
        for c in &n.children {
            *out.entry(c.kind.clone()).or_insert(0) += 1;
            walk(c, out);
        }
    }
    let mut out = BTreeMap::new();
    if let Ok(t) = body_tree(text) {
        walk(&t, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn exact_match_rules() {
        assert_eq!(exact_match("return a+b", "return a+b"), 1);
        assert_eq!(exact_match("x = 1   \nreturn x  \n\n", "\nx = 1\nreturn x"), 1);
        assert_eq!(exact_match("return a+b", "return a-b"), 0);
        assert_eq!(exact_match("a\r\nb", "a\nb"), 1);
    }

    #[test]
    fn bleu_pinned_pair() {
        // p1 = 2/3, p2 = 1/2, p3 = 1/(1+1), p4 = 1/(0+1).
        let v = ngram_bleu(&toks("a b c"), &toks("a b d"), 4);
        assert!((v - (1.0f64 / 6.0).powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn bleu_edges() {
        assert_eq!(ngram_bleu(&toks("a b c d e"), &toks("a b c d e"), 4), 1.0);
        assert_eq!(ngram_bleu(&[], &toks("a"), 4), 0.0);
        assert_eq!(weighted_ngram_bleu(&toks("if x return"), &toks("if x return"), 4, 4.0), 1.0);
    }

    #[test]
    fn weighted_bleu_rewards_keywords() {
        let gold = toks("return x");
        let kw = weighted_ngram_bleu(&toks("return y"), &gold, 1, 4.0);
        let id = weighted_ngram_bleu(&toks("z x"), &gold, 1, 4.0);
        assert!((kw - 0.8).abs() < 1e-12);
        assert!((id - 0.5).abs() < 1e-12);
    }

    #[test]
    fn syntax_match_cases() {
        assert_eq!(syntax_match("x = 1\nreturn x\n", "x = 1\nreturn x\n"), 1.0);
        assert_eq!(syntax_match("%%% ((", "return 1\n"), 0.0);
        // gold subtrees: body, assign, return; pred has only the assign.
        let v = syntax_match("x = 1\nreturn y\n", "x = 1\nreturn x\n");
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn dataflow_cases() {
        assert_eq!(dataflow_match("x = f()\nreturn x\n", "x = f()\nreturn x\n"), 1.0);
        assert_eq!(dataflow_match("return 1\n", "return g()\n"), 1.0);
        assert_eq!(dataflow_match("total = a\nreturn total\n", "acc = a\nreturn acc\n"), 1.0);
        assert_eq!(dataflow_match("return 0\n", "x = 1\nreturn x\n"), 0.0);
        let e = dataflow_edges("a = 1\nb = a + 1\na += b\nreturn a\n");
        let want: BTreeSet<DataflowEdge> = [
            ("var_0".to_string(), 0, 1),
            ("var_0".to_string(), 0, 2),
            ("var_1".to_string(), 1, 2),
            ("var_0".to_string(), 2, 3),
        ]
        .into_iter()
        .collect();
        assert_eq!(e, want);
    }

    #[test]
    fn dataflow_targets() {
        let e = dataflow_edges("for i, v in xs:\n    out[i] = v\nwith open(p) as fh:\n    fh.read()\n");
        let names: BTreeSet<_> = e.iter().map(|(n, _, _)| n.clone()).collect();
        assert_eq!(names.len(), 3);
        assert!(dataflow_edges("f(key=1)\nkey = 2\n").is_empty());
        assert_eq!(dataflow_edges("self.x = 1\nreturn self.x\n").len(), 0);
    }

    #[test]
    fn codebleu_identity_and_empty() {
        let g = "s = Service()\nreturn s.get_state()\n";
        assert!((codebleu(g, g) - 1.0).abs() < 1e-12);
        assert!(codebleu("", g) <= 0.25);
    }
}
