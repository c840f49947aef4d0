//! Reference implementations written from the metric and resolution rules,
//! sharing no code with the library beyond its parsed data.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use crossfile_core::index::{is_builtin, RepoIndex, Resolution, SymbolKind};
use crossfile_core::syntax::{is_keyword, ClassDecl, FunctionDecl, ImportForm, ModuleAst, StmtNode};

// ---- n-gram BLEU by direct counting ----

fn grams(t: &[String], n: usize) -> Vec<&[String]> {
    if t.len() < n {
        return Vec::new();
    }
    (0..=t.len() - n).map(|i| &t[i..i + n]).collect()
}

fn count(list: &[&[String]], g: &[String]) -> usize {
    list.iter().filter(|x| **x == g).count()
}

fn precision(pred: &[String], gold: &[String], n: usize, weight: &dyn Fn(&[String]) -> f64) -> f64 {
    let p = grams(pred, n);
    let g = grams(gold, n);
    let mut seen: Vec<&[String]> = Vec::new();
    let mut matched = 0.0;
    let mut total = 0.0;
    for x in &p {
        total += weight(x);
        if seen.contains(x) {
            continue;
        }
        seen.push(x);
        matched += weight(x) * count(&p, x).min(count(&g, x)) as f64;
    }
    if matched > 0.0 {
        matched / total
    } else {
        1.0 / (total + 1.0)
    }
}

fn bleu_with(pred: &[String], gold: &[String], unigram_weight: &dyn Fn(&[String]) -> f64) -> f64 {
    if pred.is_empty() {
        return if gold.is_empty() { 1.0 } else { 0.0 };
    }
    let one = |_: &[String]| 1.0;
    let mut product = precision(pred, gold, 1, unigram_weight);
    for n in 2..=4 {
        product *= precision(pred, gold, n, &one);
    }
    let bp = (1.0 - gold.len() as f64 / pred.len() as f64).exp().min(1.0);
    product.powf(0.25) * bp
}

pub fn bleu(pred: &[String], gold: &[String]) -> f64 {
    bleu_with(pred, gold, &|_| 1.0)
}

pub fn weighted_bleu(pred: &[String], gold: &[String], keyword_weight: f64) -> f64 {
    bleu_with(pred, gold, &|g: &[String]| if is_keyword(&g[0]) { keyword_weight } else { 1.0 })
}

// ---- subtree enumeration ----

fn nodes<'a>(n: &'a StmtNode, out: &mut Vec<&'a StmtNode>) {
    out.push(n);
    for c in &n.children {
        nodes(c, out);
    }
}

/// Fraction of gold nodes for which a structurally equal pred node exists.
pub fn subtree_match(pred: &StmtNode, gold: &StmtNode) -> f64 {
    let mut g = Vec::new();
    nodes(gold, &mut g);
    let mut p = Vec::new();
    nodes(pred, &mut p);
    let hit = g.iter().filter(|x| p.iter().any(|y| y == *x)).count();
    hit as f64 / g.len() as f64
}

// ---- def-use edges for one-statement-per-line bodies ----

#[derive(Debug, Clone, PartialEq)]
enum Word {
    Name(String),
    Sym(String),
}

fn words(line: &str) -> Vec<Word> {
    let c: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < c.len() {
        let ch = c[i];
        if ch == '#' {
            break;
        } else if ch == '\'' || ch == '"' {
            i += 1;
            while i < c.len() && c[i] != ch {
                i += 1;
            }
            i += 1;
            out.push(Word::Sym("str".into()));
        } else if ch.is_alphabetic() || ch == '_' {
            let s = i;
            while i < c.len() && (c[i].is_alphanumeric() || c[i] == '_') {
                i += 1;
            }
            out.push(Word::Name(c[s..i].iter().collect()));
        } else if ch.is_ascii_digit() {
            while i < c.len() && (c[i].is_alphanumeric() || c[i] == '.') {
                i += 1;
            }
            out.push(Word::Sym("num".into()));
        } else if ch.is_whitespace() {
            i += 1;
        } else {
            let two: String = c[i..(i + 2).min(c.len())].iter().collect();
            let ops = ["==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "|=", "&=", "//", "**", "->"];
            if ops.contains(&two.as_str()) {
                out.push(Word::Sym(two));
                i += 2;
            } else {
                out.push(Word::Sym(ch.to_string()));
                i += 1;
            }
        }
    }
    out
}

fn is_name(w: &Word) -> Option<&str> {
    match w {
        Word::Name(n) if !is_keyword(n) => Some(n),
        _ => None,
    }
}

fn sym(w: Option<&Word>, s: &str) -> bool {
    matches!(w, Some(Word::Sym(x)) if x == s)
}

/// Plain-name targets in `ws`, split on commas; dotted or subscripted
/// targets bind nothing.
fn plain_targets(ws: &[Word]) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut start = 0;
    for end in (0..=ws.len()).filter(|&e| e == ws.len() || sym(ws.get(e), ",")) {
        if end == start + 1 && is_name(&ws[start]).is_some() {
            out.insert(start);
        }
        start = end + 1;
    }
    out
}

fn line_defs_uses(line: &str) -> (Vec<String>, Vec<String>) {
    let ws = words(line);
    let mut depth = 0i32;
    let mut eq = None;
    for (i, w) in ws.iter().enumerate() {
        match w {
            Word::Sym(s) if s == "(" || s == "[" || s == "{" => depth += 1,
            Word::Sym(s) if s == ")" || s == "]" || s == "}" => depth -= 1,
            Word::Sym(s) if s == "=" && depth == 0 && eq.is_none() => eq = Some(i),
            _ => {}
        }
    }
    let aug = ws.len() >= 2
        && is_name(&ws[0]).is_some()
        && matches!(&ws[1], Word::Sym(s) if s.len() == 2 && s.ends_with('=') && !["==", "!=", "<=", ">="].contains(&s.as_str()));
    let mut def_pos = BTreeSet::new();
    if let Some(e) = eq {
        def_pos = plain_targets(&ws[..e]);
    } else if aug {
        def_pos.insert(0);
    } else if matches!(ws.first(), Some(Word::Name(n)) if n == "for") {
        let e = ws.iter().position(|w| matches!(w, Word::Name(n) if n == "in")).unwrap_or(1);
        def_pos = plain_targets(&ws[1..e]).into_iter().map(|i| i + 1).collect();
    }
    let mut uses = Vec::new();
    let mut depth = 0i32;
    for (i, w) in ws.iter().enumerate() {
        match w {
            Word::Sym(s) if s == "(" || s == "[" || s == "{" => depth += 1,
            Word::Sym(s) if s == ")" || s == "]" || s == "}" => depth -= 1,
            _ => {}
        }
        let Some(n) = is_name(w) else { continue };
        if i > 0 && sym(ws.get(i - 1), ".") {
            continue;
        }
        if depth > 0 && sym(ws.get(i + 1), "=") {
            continue;
        }
        if def_pos.contains(&i) && !aug {
            continue;
        }
        uses.push(n.to_string());
    }
    let defs = def_pos.iter().map(|&i| is_name(&ws[i]).unwrap().to_string()).collect();
    (defs, uses)
}

pub fn def_use_edges(body: &str) -> BTreeSet<(String, usize, usize)> {
    let mut last: BTreeMap<String, usize> = BTreeMap::new();
    let mut names: BTreeMap<String, String> = BTreeMap::new();
    let mut edges = BTreeSet::new();
    for (i, line) in body.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let (defs, uses) = line_defs_uses(line);
        for u in uses {
            if let Some(&d) = last.get(&u) {
                edges.insert((names[&u].clone(), d, i));
            }
        }
        for d in defs {
            let k = names.len();
            names.entry(d.clone()).or_insert_with(|| format!("var_{k}"));
            last.insert(d, i);
        }
    }
    edges
}

pub fn dataflow(pred: &str, gold: &str) -> f64 {
    let g = def_use_edges(gold);
    if g.is_empty() {
        return 1.0;
    }
    let p = def_use_edges(pred);
    g.intersection(&p).count() as f64 / g.len() as f64
}

// ---- name resolution by walking scopes over the parsed modules ----

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Local,
    Symbol(String),
    Module(String),
    External,
    Builtin,
    Unresolved,
}

impl Outcome {
    pub fn of(r: &Resolution) -> Outcome {
        match r {
            Resolution::Symbol(s) if s.kind == SymbolKind::Module => Outcome::Module(s.qualified_name.clone()),
            Resolution::Symbol(s) => Outcome::Symbol(s.qualified_name.clone()),
            Resolution::Local(_) => Outcome::Local,
            Resolution::Package { path } => Outcome::Module(path.clone()),
            Resolution::External { .. } => Outcome::External,
            Resolution::Builtin { .. } => Outcome::Builtin,
            Resolution::Unresolved => Outcome::Unresolved,
        }
    }
}

pub struct Walker<'a> {
    pub index: &'a RepoIndex,
}

impl<'a> Walker<'a> {
    fn known(&self, path: &str) -> bool {
        self.index.module(path).is_some()
            || self.index.is_package(path)
            || self.index.modules().values().any(|m| m.path.starts_with(&format!("{}/", path.replace('.', "/"))))
    }

    fn class_decl(&self, qn: &str) -> Option<(String, &'a ClassDecl)> {
        let (module, name) = qn.rsplit_once('.')?;
        let ast = self.index.module(module)?;
        ast.classes.iter().rev().find(|c| c.name == name).map(|c| (module.to_string(), c))
    }

    fn is_package(&self, module: &str) -> bool {
        self.index.module(module).is_some_and(|m| m.path.ends_with("__init__.py"))
    }

    fn absolute(&self, dots: usize, dotted: &str, importer: &str) -> Option<String> {
        if dots == 0 {
            return Some(dotted.to_string());
        }
        let mut parts: Vec<&str> = importer.split('.').collect();
        if !self.is_package(importer) {
            parts.pop();
        }
        for _ in 1..dots {
            parts.pop()?;
        }
        if parts.is_empty() {
            return None;
        }
        let mut base = parts.join(".");
        if !dotted.is_empty() {
            base = format!("{base}.{dotted}");
        }
        Some(base)
    }

    fn module_ref(&self, dotted: &str) -> Outcome {
        if self.known(dotted) {
            Outcome::Module(dotted.to_string())
        } else {
            Outcome::External
        }
    }

    /// Depth-first, left to right, each class once.
    pub fn mro(&self, qn: &str) -> Vec<String> {
        fn visit(w: &Walker<'_>, qn: &str, seen: &mut Vec<String>) {
            if seen.iter().any(|s| s == qn) {
                return;
            }
            seen.push(qn.to_string());
            let Some((module, decl)) = w.class_decl(qn) else { return };
            for base in &decl.bases {
                if let Outcome::Symbol(b) = w.dotted(&module, base) {
                    if w.class_decl(&b).is_some() {
                        visit(w, &b, seen);
                    }
                }
            }
        }
        let mut seen = Vec::new();
        visit(self, qn, &mut seen);
        seen
    }

    fn member(&self, class_qn: &str, name: &str) -> Outcome {
        for c in self.mro(class_qn) {
            let Some((_, decl)) = self.class_decl(&c) else { continue };
            if decl.methods.iter().any(|m| m.name == name) || decl.attributes.iter().any(|a| a.name == name) {
                return Outcome::Symbol(format!("{c}.{name}"));
            }
        }
        Outcome::Unresolved
    }

    fn declares(ast: &ModuleAst, name: &str) -> bool {
        ast.classes.iter().any(|c| c.name == name)
            || ast.functions.iter().any(|f| f.name == name)
            || ast.variables.iter().any(|v| v.name == name)
    }

    pub fn namespace(&self, module: &str, name: &str, depth: usize) -> Outcome {
        if depth > 16 {
            return Outcome::Unresolved;
        }
        let Some(ast) = self.index.module(module) else { return Outcome::Unresolved };
        let qn = format!("{module}.{name}");
        if Self::declares(ast, name) && self.index.module(&qn).is_none() {
            return Outcome::Symbol(qn);
        }
        for imp in ast.imports.iter().rev() {
            match imp.form {
                ImportForm::Plain => {
                    let dotted = &imp.module_path.dotted;
                    match &imp.module_alias {
                        Some(a) if a == name => return self.module_ref(dotted),
                        None if dotted.split('.').next() == Some(name) => return self.module_ref(name),
                        _ => {}
                    }
                }
                ImportForm::From => {
                    for (item, alias) in imp.imported_names.iter().rev() {
                        if item == "*" || alias.as_deref().unwrap_or(item) != name {
                            continue;
                        }
                        let Some(abs) = self.absolute(imp.module_path.dots, &imp.module_path.dotted, module) else {
                            return Outcome::Unresolved;
                        };
                        let sub = format!("{abs}.{item}");
                        if self.known(&sub) {
                            return Outcome::Module(sub);
                        }
                        if self.index.module(&abs).is_some() {
                            return self.namespace(&abs, item, depth + 1);
                        }
                        if imp.module_path.dots > 0 || self.known(&abs) {
                            return Outcome::Unresolved;
                        }
                        return Outcome::External;
                    }
                }
            }
        }
        if name.starts_with('_') {
            return Outcome::Unresolved;
        }
        for imp in ast.imports.iter().rev() {
            if imp.form != ImportForm::From || !imp.imported_names.iter().any(|(n, _)| n == "*") {
                continue;
            }
            let Some(abs) = self.absolute(imp.module_path.dots, &imp.module_path.dotted, module) else { continue };
            if self.index.module(&abs).is_some() {
                let r = self.namespace(&abs, name, depth + 1);
                if r != Outcome::Unresolved {
                    return r;
                }
            } else if imp.module_path.dots == 0 && !self.known(&abs) {
                return Outcome::External;
            }
        }
        Outcome::Unresolved
    }

    fn attribute(&self, base: &Outcome, name: &str) -> Option<Outcome> {
        Some(match base {
            Outcome::Symbol(qn) if self.class_decl(qn).is_some() => self.member(qn, name),
            Outcome::Module(m) => {
                let r = if self.index.module(m).is_some() { self.namespace(m, name, 0) } else { Outcome::Unresolved };
                if r != Outcome::Unresolved {
                    r
                } else if self.known(&format!("{m}.{name}")) {
                    Outcome::Module(format!("{m}.{name}"))
                } else {
                    Outcome::Unresolved
                }
            }
            Outcome::External => Outcome::External,
            Outcome::Builtin | Outcome::Unresolved => Outcome::Unresolved,
            _ => return None,
        })
    }

    /// Resolution of a dotted name at module level.
    pub fn dotted(&self, module: &str, text: &str) -> Outcome {
        let mut parts = text.split('.');
        let head = parts.next().unwrap_or_default();
        let mut cur = self.head(module, None, head);
        for p in parts {
            match self.attribute(&cur, p) {
                Some(next) => cur = next,
                None => return Outcome::Unresolved,
            }
        }
        cur
    }

    fn enclosing(&self, module: &str, enclosing: Option<&str>) -> (Option<&'a ClassDecl>, Option<&'a FunctionDecl>) {
        let Some(ast) = self.index.module(module) else { return (None, None) };
        let Some(name) = enclosing else { return (None, None) };
        match name.split_once('.') {
            Some((c, f)) => {
                let class = ast.classes.iter().rev().find(|x| x.name == c);
                (class, class.and_then(|x| x.methods.iter().rev().find(|m| m.name == f)))
            }
            None => match ast.functions.iter().rev().find(|x| x.name == name) {
                Some(f) => (None, Some(f)),
                None => (ast.classes.iter().rev().find(|x| x.name == name), None),
            },
        }
    }

    pub fn head(&self, module: &str, enclosing: Option<&str>, name: &str) -> Outcome {
        let (class, function) = self.enclosing(module, enclosing);
        if let Some(f) = function {
            let first = f.params.first().map(|p| p.name.as_str());
            let classmethod = f.decorators.iter().any(|d| d == "classmethod");
            if let Some(c) = class.filter(|_| classmethod && first == Some(name) && f.params[0].annotation.is_none()) {
                return Outcome::Symbol(format!("{module}.{}", c.name));
            }
            if f.params.iter().any(|p| p.name == name) || f.locals.iter().any(|l| l.name == name) {
                return Outcome::Local;
            }
        }
        if let Some(c) = class {
            let r = self.member(&format!("{module}.{}", c.name), name);
            if r != Outcome::Unresolved {
                return r;
            }
        }
        let r = self.namespace(module, name, 0);
        if r != Outcome::Unresolved {
            return r;
        }
        if is_builtin(name) {
            return Outcome::Builtin;
        }
        Outcome::Unresolved
    }

    /// `None` when the chain passes through a value the walker does not model.
    pub fn chain(&self, module: &str, enclosing: Option<&str>, chain: &[String]) -> Option<Outcome> {
        let mut cur = self.head(module, enclosing, &chain[0]);
        for name in &chain[1..] {
            cur = self.attribute(&cur, name)?;
        }
        Some(cur)
    }
}
