//! Declaration-level recursive-descent parser.
//!
//! Works over the comment-free token stream. Module and class bodies are
//! parsed statement by statement; function bodies are only scanned for
//! docstrings, local bindings, and `self.attr` assignments.

use std::collections::HashSet;

use super::ast::*;
use super::lexer::{normalize_newlines, tokenize_lenient, Token, TokenKind};
use super::SyntaxError;

/// Parse one source file into its declaration-level structure.
pub fn parse_module(source: &str, path: &str) -> Result<ModuleAst, SyntaxError> {
    let source = normalize_newlines(source);
    let tokens: Vec<Token> = tokenize_lenient(&source)?.into_iter().filter(|t| t.kind != TokenKind::Comment).collect();
    let mut p = Parser {
        src: &source,
        toks: &tokens,
        at: 0,
        declared: HashSet::new(),
        import_lines: Vec::new(),
        last_body: (0, 0),
    };
    let mut module = ModuleAst {
        path: path.to_string(),
        module_docstring: None,
        imports: Vec::new(),
        classes: Vec::new(),
        functions: Vec::new(),
        variables: Vec::new(),
        opaque_statements: Vec::new(),
        occurrences: Vec::new(),
        line_count: source.lines().count(),
    };
    p.parse_module_body(&mut module)?;
    module.occurrences = p.collect_occurrences();
    Ok(module)
}

/// Number of body lines of a parsed function.
pub fn function_line_count(decl: &FunctionDecl) -> usize {
    decl.body_span.len()
}

struct Parser<'a> {
    src: &'a str,
    toks: &'a [Token],
    at: usize,
    /// Token indices that are declaration names (excluded from occurrences).
    declared: HashSet<usize>,
    /// Token index ranges of import statements.
    import_lines: Vec<(usize, usize)>,
    /// Body token range of the most recently parsed function.
    last_body: (usize, usize),
}

enum Item {
    Import(Vec<ImportDecl>),
    Class(Vec<ClassDecl>),
    Function(FunctionDecl),
    Assign(Vec<Assignment>),
    Docstring(String),
    Opaque(LineSpan),
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &'a Token {
        &self.toks[self.at.min(self.toks.len() - 1)]
    }

    fn peek_n(&self, n: usize) -> &'a Token {
        &self.toks[(self.at + n).min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> &'a Token {
        let t = self.peek();
        if self.at < self.toks.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, SyntaxError> {
        Err(SyntaxError::Parse { pos: self.peek().pos, expected: expected.to_string() })
    }

    fn expect_punct(&mut self, p: &str) -> Result<&'a Token, SyntaxError> {
        if self.peek().is_punct(p) {
            Ok(self.bump())
        } else {
            self.error(&format!("'{p}'"))
        }
    }

    fn expect_name(&mut self, what: &str) -> Result<(usize, &'a Token), SyntaxError> {
        if self.peek().kind == TokenKind::Identifier {
            let idx = self.at;
            Ok((idx, self.bump()))
        } else {
            self.error(what)
        }
    }

    fn expect_newline(&mut self) -> Result<(), SyntaxError> {
        match self.peek().kind {
            TokenKind::Newline => {
                self.bump();
                Ok(())
            }
            TokenKind::EndMarker => Ok(()),
            _ => self.error("end of line"),
        }
    }

    fn at_block_end(&self) -> bool {
        matches!(self.peek().kind, TokenKind::Dedent | TokenKind::EndMarker)
    }

    /// Source text covering tokens `[from, to)`, with line breaks collapsed.
    fn slice_text(&self, from: usize, to: usize) -> String {
        if from >= to {
            return String::new();
        }
        let start = self.toks[from].offset;
        let end = self.toks[to - 1].end_offset();
        collapse_ws(&self.src[start..end])
    }

    /// Index one past the end of the current logical line (its Newline).
    fn logical_line_end(&self, from: usize) -> usize {
        let mut i = from;
        while i < self.toks.len() && !matches!(self.toks[i].kind, TokenKind::Newline | TokenKind::EndMarker) {
            i += 1;
        }
        i
    }

    fn parse_module_body(&mut self, module: &mut ModuleAst) -> Result<(), SyntaxError> {
        let mut first = true;
        while self.peek().kind != TokenKind::EndMarker {
            if matches!(self.peek().kind, TokenKind::Indent | TokenKind::Dedent | TokenKind::Newline) {
                // Stray layout at top level: treat the indented run as opaque.
                let start = self.peek().pos.line;
                if self.peek().kind == TokenKind::Indent {
                    let end = self.skip_block();
                    module.opaque_statements.push(LineSpan::new(start, end.max(start)));
                } else {
                    self.bump();
                }
                continue;
            }
            let item = self.parse_item(false, first)?;
            first = false;
            match item {
                Item::Import(i) => module.imports.extend(i),
                Item::Class(cs) => module.classes.extend(cs),
                Item::Function(f) => module.functions.push(f),
                Item::Assign(a) => module.variables.extend(a),
                Item::Docstring(d) => module.module_docstring = Some(d),
                Item::Opaque(s) => module.opaque_statements.push(s),
            }
        }
        Ok(())
    }

    /// Parse one statement in a module or class body.
    fn parse_item(&mut self, in_class: bool, first: bool) -> Result<Item, SyntaxError> {
        let tok = self.peek();
        if tok.is_op("@") {
            return self.parse_decorated(in_class);
        }
        if tok.is_keyword("def") || (tok.is_keyword("async") && self.peek_n(1).is_keyword("def")) {
            return self.parse_function(Vec::new(), None, in_class).map(Item::Function);
        }
        if tok.is_keyword("class") {
            return self.parse_class(Vec::new(), None, "").map(Item::Class);
        }
        if tok.is_keyword("import") || tok.is_keyword("from") {
            return self.parse_import().map(Item::Import);
        }
        if first && tok.kind == TokenKind::String {
            if let Some(doc) = self.try_docstring() {
                return Ok(Item::Docstring(doc));
            }
        }
        if tok.kind == TokenKind::Identifier {
            if let Some(assigns) = self.try_assignment() {
                return Ok(Item::Assign(assigns));
            }
        }
        Ok(Item::Opaque(self.skip_statement()))
    }

    /// Consume a statement outside the subset, including any nested block.
    fn skip_statement(&mut self) -> LineSpan {
        let first = self.peek().pos.line;
        let mut last = first;
        let end = self.logical_line_end(self.at);
        if end > self.at {
            last = self.toks[end - 1].end_line();
        }
        let header_ends_block = end > self.at && self.toks[end - 1].is_punct(":");
        self.at = end;
        self.expect_newline().ok();
        if header_ends_block && self.peek().kind == TokenKind::Indent {
            last = last.max(self.skip_block());
        }
        LineSpan::new(first, last.max(first))
    }

    /// Consume an Indent ... Dedent block; returns the last content line.
    fn skip_block(&mut self) -> usize {
        debug_assert_eq!(self.peek().kind, TokenKind::Indent);
        let mut depth = 0usize;
        let mut last = self.peek().pos.line;
        loop {
            let t = self.bump();
            match t.kind {
                TokenKind::Indent => depth += 1,
                TokenKind::Dedent => {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                TokenKind::EndMarker => break,
                TokenKind::Newline => {}
                _ => last = t.end_line(),
            }
        }
        last
    }

    fn try_docstring(&mut self) -> Option<String> {
        let mut i = self.at;
        let mut parts = Vec::new();
        while self.toks[i].kind == TokenKind::String {
            parts.push(self.toks[i].text.as_str());
            i += 1;
        }
        if !matches!(self.toks[i].kind, TokenKind::Newline | TokenKind::EndMarker) {
            return None;
        }
        self.at = i;
        self.expect_newline().ok();
        let raw: String = parts.iter().map(|p| string_literal_value(p)).collect();
        Some(clean_docstring(&raw))
    }

    /// Recognize `a = ...`, `a: T = ...`, `a: T`, `a, b = ...`, `a = b = ...`.
    fn try_assignment(&mut self) -> Option<Vec<Assignment>> {
        let start = self.at;
        let end = self.logical_line_end(start);
        let toks = &self.toks[start..end];
        let line = toks[0].pos.line;
        // Annotated form.
        if toks.len() >= 3 && toks[1].is_punct(":") && toks[0].kind == TokenKind::Identifier {
            let eq = find_depth0(toks, 2, |t| t.is_op("="));
            let ann_end = eq.unwrap_or(toks.len());
            if ann_end <= 2 {
                return None;
            }
            let annotation = Some(self.slice_text(start + 2, start + ann_end));
            let constructor = eq.and_then(|e| constructor_call(&toks[e + 1..]));
            self.declared.insert(start);
            self.at = end;
            self.expect_newline().ok();
            return Some(vec![Assignment { name: toks[0].text.clone(), annotation, constructor, line }]);
        }
        let eqs: Vec<usize> = (0..toks.len()).filter(|&i| toks[i].is_op("=") && depth_at(toks, i) == 0).collect();
        let last_eq = *eqs.last()?;
        let constructor = constructor_call(&toks[last_eq + 1..]);
        let mut out = Vec::new();
        let mut declared = Vec::new();
        let mut seg_start = 0;
        for &eq in &eqs {
            let target = &toks[seg_start..eq];
            let names = simple_targets(target)?;
            let single = names.len() == 1;
            for idx in names {
                declared.push(start + seg_start + idx);
                out.push(Assignment {
                    name: target[idx].text.clone(),
                    annotation: None,
                    constructor: if single { constructor.clone() } else { None },
                    line,
                });
            }
            seg_start = eq + 1;
        }
        self.declared.extend(declared);
        self.at = end;
        self.expect_newline().ok();
        Some(out)
    }

    fn parse_decorated(&mut self, in_class: bool) -> Result<Item, SyntaxError> {
        let (decorators, first_line) = self.take_decorators()?;
        let t = self.peek();
        if t.is_keyword("def") || (t.is_keyword("async") && self.peek_n(1).is_keyword("def")) {
            self.parse_function(decorators, first_line, in_class).map(Item::Function)
        } else if t.is_keyword("class") {
            self.parse_class(decorators, first_line, "").map(Item::Class)
        } else {
            self.error("'def' or 'class' after decorator")
        }
    }

    fn parse_function(
        &mut self,
        decorators: Vec<String>,
        first_line: Option<usize>,
        is_method: bool,
    ) -> Result<FunctionDecl, SyntaxError> {
        if self.peek().is_keyword("async") {
            self.bump();
        }
        let def_tok = self.bump();
        let indent = def_tok.pos.col - 1;
        let first_line = first_line.unwrap_or(def_tok.pos.line);
        let (name_idx, name_tok) = self.expect_name("function name")?;
        self.declared.insert(name_idx);
        self.expect_punct("(")?;
        let params = self.parse_params()?;
        let return_annotation = if self.peek().is_op("->") {
            self.bump();
            let from = self.at;
            while !self.peek().is_punct(":") || self.depth_from(from) != 0 {
                if matches!(self.peek().kind, TokenKind::Newline | TokenKind::EndMarker) {
                    return self.error("':' after return annotation");
                }
                self.bump();
            }
            if self.at == from {
                return self.error("return annotation");
            }
            Some(self.slice_text(from, self.at))
        } else {
            None
        };
        let colon = self.expect_punct(":")?;
        let signature_end_line = colon.pos.line;
        let (body_span, body_range) = self.parse_suite()?;
        self.last_body = body_range;
        let (docstring, locals, _) = self.scan_body(body_range, None);
        Ok(FunctionDecl {
            name: name_tok.text.clone(),
            params,
            return_annotation,
            docstring,
            decorators,
            is_method,
            span: LineSpan::new(first_line, body_span.last),
            signature_end_line,
            body_span,
            indent,
            locals,
        })
    }

    /// Bracket depth of the current position relative to token `from`.
    fn depth_from(&self, from: usize) -> i32 {
        let mut d = 0;
        for t in &self.toks[from..self.at] {
            if t.kind == TokenKind::Punct {
                match t.text.as_str() {
                    "(" | "[" | "{" => d += 1,
                    ")" | "]" | "}" => d -= 1,
                    _ => {}
                }
            }
        }
        d
    }

    fn parse_params(&mut self) -> Result<Vec<Parameter>, SyntaxError> {
        let mut params = Vec::new();
        let mut keyword_only = false;
        loop {
            if self.peek().is_punct(")") {
                self.bump();
                return Ok(params);
            }
            let mut kind = if keyword_only { ParamKind::KeywordOnly } else { ParamKind::Regular };
            if self.peek().is_op("*") {
                self.bump();
                keyword_only = true;
                if self.peek().is_punct(",") || self.peek().is_punct(")") {
                    params.push(Parameter {
                        name: String::new(),
                        annotation: None,
                        default: None,
                        kind: ParamKind::KeywordOnly,
                    });
                    if self.peek().is_punct(",") {
                        self.bump();
                    }
                    continue;
                }
                kind = ParamKind::VarPositional;
            } else if self.peek().is_op("**") {
                self.bump();
                kind = ParamKind::VarKeyword;
            } else if self.peek().is_op("/") {
                self.bump();
                params.push(Parameter { name: "/".into(), annotation: None, default: None, kind: ParamKind::Regular });
                if self.peek().is_punct(",") {
                    self.bump();
                } else if !self.peek().is_punct(")") {
                    return self.error("',' or ')'");
                }
                continue;
            }
            let (idx, name) = self.expect_name("parameter name or ')'")?;
            self.declared.insert(idx);
            let annotation = if self.peek().is_punct(":") {
                self.bump();
                Some(self.param_expr("parameter annotation")?)
            } else {
                None
            };
            let default = if self.peek().is_op("=") {
                self.bump();
                Some(self.param_expr("default value")?)
            } else {
                None
            };
            params.push(Parameter { name: name.text.clone(), annotation, default, kind });
            if self.peek().is_punct(",") {
                self.bump();
            } else if !self.peek().is_punct(")") {
                return self.error("',' or ')'");
            }
        }
    }

    /// Expression text up to the next depth-0 `,` / `)` / `=` inside a
    /// parameter list.
    fn param_expr(&mut self, what: &str) -> Result<String, SyntaxError> {
        let from = self.at;
        let mut depth = 0i32;
        loop {
            let t = self.peek();
            match t.kind {
                TokenKind::Newline | TokenKind::EndMarker => return self.error(what),
                TokenKind::Punct if depth == 0 && (t.text == "," || t.text == ")") => break,
                TokenKind::Operator if depth == 0 && t.text == "=" => break,
                TokenKind::Punct => match t.text.as_str() {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => depth -= 1,
                    _ => {}
                },
                _ => {}
            }
            self.bump();
        }
        if self.at == from {
            return self.error(what);
        }
        Ok(self.slice_text(from, self.at))
    }

    /// Parse the block after a `:`. Returns the body line span and the token
    /// index range of the body.
    fn parse_suite(&mut self) -> Result<(LineSpan, (usize, usize)), SyntaxError> {
        if self.peek().kind != TokenKind::Newline {
            // Simple statements on the header line.
            let start = self.at;
            if matches!(self.peek().kind, TokenKind::EndMarker) {
                return self.error("function body");
            }
            let end = self.logical_line_end(start);
            let line = self.toks[start].pos.line;
            let last = self.toks[end - 1].end_line();
            self.at = end;
            self.expect_newline()?;
            return Ok((LineSpan::new(line, last), (start, end)));
        }
        self.bump();
        if self.peek().kind != TokenKind::Indent {
            return self.error("indented block");
        }
        self.bump();
        let start = self.at;
        let first = self.peek().pos.line;
        let mut depth = 1usize;
        let mut last = first;
        loop {
            let t = self.peek();
            match t.kind {
                TokenKind::Indent => depth += 1,
                TokenKind::Dedent => {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                TokenKind::EndMarker => break,
                TokenKind::Newline => {}
                _ => last = t.end_line(),
            }
            self.bump();
        }
        let end = self.at;
        if self.peek().kind == TokenKind::Dedent {
            self.bump();
        }
        Ok((LineSpan::new(first, last), (start, end)))
    }

    /// Scan a function body for its docstring, local bindings, and
    /// assignments to `receiver.attr`.
    fn scan_body(
        &self,
        (start, end): (usize, usize),
        receiver: Option<&str>,
    ) -> (Option<String>, Vec<LocalBinding>, Vec<Assignment>) {
        let toks = &self.toks[start..end];
        let mut docstring = None;
        if let Some(first) = toks.first() {
            if first.kind == TokenKind::String {
                let n = toks.iter().take_while(|t| t.kind == TokenKind::String).count();
                if toks.get(n).is_none_or(|t| t.kind == TokenKind::Newline) {
                    let raw: String = toks[..n].iter().map(|t| string_literal_value(&t.text)).collect();
                    docstring = Some(clean_docstring(&raw));
                }
            }
        }
        let mut locals = Vec::new();
        let mut attrs = Vec::new();
        for stmt in statements(toks) {
            bind_statement(self, stmt, &mut locals, receiver, &mut attrs);
        }
        // Loop/with/except/lambda/walrus bindings can appear anywhere.
        let mut i = 0;
        while i < toks.len() {
            let t = &toks[i];
            if t.is_keyword("for") {
                let mut j = i + 1;
                while j < toks.len() && !toks[j].is_keyword("in") && toks[j].kind != TokenKind::Newline {
                    if toks[j].kind == TokenKind::Identifier && !toks[j - 1].is_punct(".") {
                        locals.push(local(&toks[j], None, None));
                    }
                    j += 1;
                }
            } else if t.is_keyword("as") {
                if let Some(n) = toks.get(i + 1).filter(|n| n.kind == TokenKind::Identifier) {
                    locals.push(local(n, None, None));
                }
            } else if t.is_keyword("lambda") {
                let mut j = i + 1;
                while j < toks.len() && !toks[j].is_punct(":") && toks[j].kind != TokenKind::Newline {
                    if toks[j].kind == TokenKind::Identifier && !toks[j - 1].is_op("=") {
                        locals.push(local(&toks[j], None, None));
                    }
                    j += 1;
                }
            } else if t.is_op(":=") && i > 0 && toks[i - 1].kind == TokenKind::Identifier {
                locals.push(local(&toks[i - 1], None, None));
            } else if (t.is_keyword("global") || t.is_keyword("nonlocal")) && statement_start(toks, i) {
                let mut j = i + 1;
                while j < toks.len() && toks[j].kind != TokenKind::Newline {
                    if toks[j].kind == TokenKind::Identifier {
                        locals.push(local(&toks[j], None, None));
                    }
                    j += 1;
                }
            } else if (t.is_keyword("def") || t.is_keyword("class")) && i + 1 < toks.len() {
                if toks[i + 1].kind == TokenKind::Identifier {
                    locals.push(local(&toks[i + 1], None, None));
                }
                if t.is_keyword("def") {
                    // Nested function parameters.
                    let mut j = i + 2;
                    let mut depth = 0;
                    while j < toks.len() {
                        let tj = &toks[j];
                        if tj.is_punct("(") {
                            depth += 1;
                        } else if tj.is_punct(")") {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        } else if depth == 1
                            && tj.kind == TokenKind::Identifier
                            && (toks[j - 1].is_punct("(")
                                || toks[j - 1].is_punct(",")
                                || toks[j - 1].is_op("*")
                                || toks[j - 1].is_op("**"))
                        {
                            locals.push(local(tj, None, None));
                        }
                        j += 1;
                    }
                }
            } else if t.is_keyword("import") {
                // `import a.b` binds `a`; `from x import y` binds `y`;
                // aliases are bound by the `as` rule above.
                let mut j = i + 1;
                let mut expect_name = true;
                while j < toks.len() && toks[j].kind != TokenKind::Newline && !toks[j].is_punct(";") {
                    let tj = &toks[j];
                    if tj.is_punct(",") {
                        expect_name = true;
                    } else if tj.kind == TokenKind::Identifier && expect_name {
                        let mut k = j + 1;
                        while k + 1 < toks.len() && toks[k].is_punct(".") {
                            k += 2;
                        }
                        if !toks.get(k).is_some_and(|n| n.is_keyword("as")) {
                            locals.push(local(tj, None, None));
                        }
                        expect_name = false;
                    }
                    j += 1;
                }
            }
            i += 1;
        }
        (docstring, locals, attrs)
    }

    fn parse_class(
        &mut self,
        decorators: Vec<String>,
        first_line: Option<usize>,
        outer: &str,
    ) -> Result<Vec<ClassDecl>, SyntaxError> {
        let class_tok = self.bump();
        let first_line = first_line.unwrap_or(class_tok.pos.line);
        let (name_idx, name_tok) = self.expect_name("class name")?;
        self.declared.insert(name_idx);
        let name = if outer.is_empty() { name_tok.text.clone() } else { format!("{outer}.{}", name_tok.text) };
        let mut bases = Vec::new();
        if self.peek().is_punct("(") {
            self.bump();
            let args_start = self.at;
            let mut depth = 1;
            while depth > 0 {
                let t = self.peek();
                match t.kind {
                    TokenKind::EndMarker | TokenKind::Newline => return self.error("')'"),
                    TokenKind::Punct if matches!(t.text.as_str(), "(" | "[" | "{") => depth += 1,
                    TokenKind::Punct if matches!(t.text.as_str(), ")" | "]" | "}") => depth -= 1,
                    _ => {}
                }
                self.bump();
            }
            let args = &self.toks[args_start..self.at - 1];
            for arg in split_depth0(args, ",") {
                if arg.len() >= 2 && arg[1].is_op("=") {
                    continue;
                }
                if let Some(dotted) = leading_dotted(arg) {
                    bases.push(dotted);
                }
            }
        }
        self.expect_punct(":")?;
        let mut out = Vec::new();
        let mut class = ClassDecl {
            name: name.clone(),
            bases,
            docstring: None,
            methods: Vec::new(),
            attributes: Vec::new(),
            decorators,
            span: LineSpan::new(first_line, first_line),
        };
        let mut nested = Vec::new();
        if self.peek().kind != TokenKind::Newline {
            let span = self.skip_statement();
            class.span = LineSpan::new(first_line, span.last);
            out.push(class);
            return Ok(out);
        }
        self.bump();
        if self.peek().kind != TokenKind::Indent {
            return self.error("indented block");
        }
        self.bump();
        let mut last = first_line;
        let mut first = true;
        let mut method_bodies: Vec<(String, (usize, usize))> = Vec::new();
        while !self.at_block_end() {
            if self.peek().kind == TokenKind::Indent {
                last = last.max(self.skip_block());
                continue;
            }
            if self.peek().kind == TokenKind::Newline {
                self.bump();
                continue;
            }
            let item = if self.peek().is_keyword("class") || (self.peek().is_op("@") && self.decorates_class()) {
                let (decorators, first_line) = self.take_decorators()?;
                Item::Class(self.parse_class(decorators, first_line, &name)?)
            } else {
                self.parse_item(true, first)?
            };
            first = false;
            match item {
                Item::Function(f) => {
                    last = last.max(f.body_span.last);
                    class.methods.retain(|m| m.name != f.name);
                    method_bodies.retain(|(n, _)| n != &f.name);
                    method_bodies.push((f.name.clone(), self.last_body));
                    class.methods.push(f);
                }
                Item::Class(cs) => {
                    for c in &cs {
                        last = last.max(c.span.last);
                    }
                    nested.extend(cs);
                }
                Item::Assign(a) => {
                    last = last.max(a.iter().map(|x| x.line).max().unwrap_or(last));
                    for asg in a {
                        merge_attribute(&mut class.attributes, asg);
                    }
                }
                Item::Docstring(d) => {
                    last = last.max(self.toks[self.at.saturating_sub(1)].pos.line);
                    class.docstring = Some(d);
                }
                Item::Import(i) => last = i.iter().map(|d| d.end_line).fold(last, usize::max),
                Item::Opaque(span) => last = last.max(span.last),
            }
        }
        if self.peek().kind == TokenKind::Dedent {
            self.bump();
        }
        // Instance attributes assigned through the receiver in methods.
        for m in &class.methods {
            if m.is_staticmethod() || m.is_classmethod() {
                continue;
            }
            let Some(receiver) = m.params.first().map(|p| p.name.clone()) else { continue };
            let Some((_, range)) = method_bodies.iter().find(|(n, _)| n == &m.name) else { continue };
            let (_, _, attrs) = self.scan_body(*range, Some(&receiver));
            for a in attrs {
                merge_attribute(&mut class.attributes, a);
            }
        }
        class.span = LineSpan::new(first_line, last);
        out.push(class);
        out.extend(nested);
        Ok(out)
    }

    fn decorates_class(&self) -> bool {
        let mut i = self.at;
        while i < self.toks.len() {
            let t = &self.toks[i];
            if t.is_keyword("class") && (i == 0 || self.toks[i - 1].kind == TokenKind::Newline) {
                return true;
            }
            if t.is_keyword("def") || t.is_keyword("async") {
                return false;
            }
            i += 1;
        }
        false
    }

    fn take_decorators(&mut self) -> Result<(Vec<String>, Option<usize>), SyntaxError> {
        if !self.peek().is_op("@") {
            return Ok((Vec::new(), None));
        }
        let first_line = self.peek().pos.line;
        let mut decorators = Vec::new();
        while self.peek().is_op("@") {
            self.bump();
            let (_, head) = self.expect_name("decorator name")?;
            let mut name = head.text.clone();
            while self.peek().is_punct(".") && self.peek_n(1).kind == TokenKind::Identifier {
                self.bump();
                name.push('.');
                name.push_str(&self.bump().text);
            }
            decorators.push(name);
            self.at = self.logical_line_end(self.at);
            self.expect_newline()?;
        }
        Ok((decorators, Some(first_line)))
    }

    /// One import statement; `import a, b` yields one declaration per module.
    fn parse_import(&mut self) -> Result<Vec<ImportDecl>, SyntaxError> {
        let start = self.at;
        let kw = self.bump();
        let pos = kw.pos;
        let decl = if kw.is_keyword("import") {
            let mut decls = Vec::new();
            loop {
                let path = self.dotted_path(false)?;
                let alias = if self.peek().is_keyword("as") {
                    self.bump();
                    let (idx, a) = self.expect_name("alias")?;
                    self.declared.insert(idx);
                    Some(a.text.clone())
                } else {
                    None
                };
                decls.push((path, alias));
                if self.peek().is_punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
            decls
                .into_iter()
                .map(|(module_path, module_alias)| ImportDecl {
                    form: ImportForm::Plain,
                    module_path,
                    module_alias,
                    imported_names: Vec::new(),
                    pos,
                    end_line: pos.line,
                })
                .collect::<Vec<_>>()
        } else {
            let path = self.dotted_path(true)?;
            if !self.peek().is_keyword("import") {
                return self.error("'import'");
            }
            self.bump();
            let parenthesized = self.peek().is_punct("(");
            if parenthesized {
                self.bump();
            }
            let mut names = Vec::new();
            if self.peek().is_op("*") {
                self.bump();
                names.push(("*".to_string(), None));
            } else {
                loop {
                    if parenthesized && self.peek().is_punct(")") {
                        break;
                    }
                    let (idx, n) = self.expect_name("imported name")?;
                    self.declared.insert(idx);
                    let alias = if self.peek().is_keyword("as") {
                        self.bump();
                        let (aidx, a) = self.expect_name("alias")?;
                        self.declared.insert(aidx);
                        Some(a.text.clone())
                    } else {
                        None
                    };
                    names.push((n.text.clone(), alias));
                    if self.peek().is_punct(",") {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            if parenthesized {
                self.expect_punct(")")?;
            }
            if names.is_empty() {
                return self.error("imported name");
            }
            vec![ImportDecl {
                form: ImportForm::From,
                module_path: path,
                module_alias: None,
                imported_names: names,
                pos,
                end_line: pos.line,
            }]
        };
        let end_line = self.toks[self.at.saturating_sub(1)].end_line();
        if !matches!(self.peek().kind, TokenKind::Newline | TokenKind::EndMarker) && !self.peek().is_punct(";") {
            return self.error("end of import");
        }
        self.import_lines.push((start, self.at));
        // Anything after `;` is treated as part of the same logical line.
        self.at = self.logical_line_end(self.at);
        self.expect_newline()?;
        Ok(decl.into_iter().map(|d| ImportDecl { end_line, ..d }).collect())
    }

    fn dotted_path(&mut self, allow_relative: bool) -> Result<ModulePath, SyntaxError> {
        let mut dots = 0;
        if allow_relative {
            loop {
                if self.peek().is_punct(".") {
                    dots += 1;
                } else if self.peek().is_op("...") {
                    dots += 3;
                } else {
                    break;
                }
                self.bump();
            }
        }
        let mut parts = Vec::new();
        if self.peek().kind == TokenKind::Identifier {
            let (idx, first) = self.expect_name("module name")?;
            self.declared.insert(idx);
            parts.push(first.text.clone());
            while self.peek().is_punct(".") {
                self.bump();
                let (idx, next) = self.expect_name("module name")?;
                self.declared.insert(idx);
                parts.push(next.text.clone());
            }
        } else if dots == 0 {
            return self.error("module name");
        }
        Ok(ModulePath { dots, dotted: parts.join(".") })
    }

    fn collect_occurrences(&self) -> Vec<IdentifierOccurrence> {
        let toks = self.toks;
        let in_import = |i: usize| self.import_lines.iter().any(|&(s, e)| s <= i && i < e);
        let mut out = Vec::new();
        let mut depth = 0i32;
        let mut i = 0;
        while i < toks.len() {
            let t = &toks[i];
            if t.kind == TokenKind::Punct {
                match t.text.as_str() {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => depth -= 1,
                    _ => {}
                }
            }
            if t.kind != TokenKind::Identifier
                || self.declared.contains(&i)
                || in_import(i)
                || (i > 0 && toks[i - 1].is_punct("."))
                || (i > 0 && (toks[i - 1].is_keyword("def") || toks[i - 1].is_keyword("class")))
            {
                i += 1;
                continue;
            }
            // Keyword argument names inside calls.
            if depth > 0 && toks.get(i + 1).is_some_and(|n| n.is_op("=")) {
                i += 1;
                continue;
            }
            // Soft keywords opening a compound statement (`match x:`).
            if matches!(t.text.as_str(), "match" | "case")
                && statement_start(toks, i)
                && toks.get(i + 1).is_some_and(|n| !n.is_punct(".") && !n.is_op("=") && !n.is_punct("("))
            {
                i += 1;
                continue;
            }
            let mut chain = vec![t.text.clone()];
            let mut j = i + 1;
            while j + 1 < toks.len() && toks[j].is_punct(".") && toks[j + 1].kind == TokenKind::Identifier {
                chain.push(toks[j + 1].text.clone());
                j += 2;
            }
            let called = toks.get(j).is_some_and(|n| n.is_punct("("));
            out.push(IdentifierOccurrence { chain, pos: t.pos, called });
            i += 1;
        }
        out
    }
}

fn local(t: &Token, annotation: Option<String>, constructor: Option<String>) -> LocalBinding {
    LocalBinding { name: t.text.clone(), annotation, constructor, pos: t.pos }
}

fn merge_attribute(attrs: &mut Vec<Assignment>, a: Assignment) {
    if let Some(existing) = attrs.iter_mut().find(|x| x.name == a.name) {
        if existing.annotation.is_none() {
            existing.annotation = a.annotation;
        }
        if existing.constructor.is_none() {
            existing.constructor = a.constructor;
        }
    } else {
        attrs.push(a);
    }
}

/// Split a token run into statements at Newline tokens and depth-0 `;`,
/// descending into the simple-statement tail of one-line compound headers.
fn statements(toks: &[Token]) -> Vec<&[Token]> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut depth = 0i32;
    for (i, t) in toks.iter().enumerate() {
        if t.kind == TokenKind::Punct {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                _ => {}
            }
        }
        let boundary = t.is_layout() || (depth == 0 && t.is_punct(";"));
        if boundary {
            if i > start {
                out.push(&toks[start..i]);
            }
            start = i + 1;
        }
    }
    if start < toks.len() {
        out.push(&toks[start..]);
    }
    let mut expanded = Vec::new();
    for s in out {
        expanded.push(s);
        if s.first().is_some_and(is_compound_keyword) {
            if let Some(colon) = find_depth0(s, 1, |t| t.is_punct(":")) {
                if colon + 1 < s.len() && !s[0].is_keyword("lambda") {
                    expanded.push(&s[colon + 1..]);
                }
            }
        }
    }
    expanded
}

fn is_compound_keyword(t: &Token) -> bool {
    t.kind == TokenKind::Keyword
        && matches!(t.text.as_str(), "if" | "elif" | "else" | "while" | "for" | "with" | "try" | "except" | "finally")
}

fn bind_statement(
    _p: &Parser<'_>,
    stmt: &[Token],
    locals: &mut Vec<LocalBinding>,
    receiver: Option<&str>,
    attrs: &mut Vec<Assignment>,
) {
    if stmt.is_empty() || stmt[0].kind == TokenKind::Keyword {
        return;
    }
    // Receiver attribute: `self.x = ...` / `self.x: T = ...`.
    if let Some(recv) = receiver {
        if stmt.len() >= 4 && stmt[0].text == recv && stmt[1].is_punct(".") && stmt[2].kind == TokenKind::Identifier {
            let line = stmt[0].pos.line;
            if stmt[3].is_punct(":") {
                let eq = find_depth0(stmt, 4, |t| t.is_op("="));
                let ann_end = eq.unwrap_or(stmt.len());
                if ann_end > 4 {
                    attrs.push(Assignment {
                        name: stmt[2].text.clone(),
                        annotation: Some(tokens_text(&stmt[4..ann_end])),
                        constructor: eq.and_then(|e| constructor_call(&stmt[e + 1..])),
                        line,
                    });
                }
            } else if stmt[3].is_op("=") {
                attrs.push(Assignment {
                    name: stmt[2].text.clone(),
                    annotation: None,
                    constructor: constructor_call(&stmt[4..]),
                    line,
                });
            }
        }
    }
    if stmt[0].kind != TokenKind::Identifier && !stmt[0].is_punct("(") && !stmt[0].is_punct("[") {
        return;
    }
    if stmt.len() >= 2 && stmt[0].kind == TokenKind::Identifier && stmt[1].is_punct(":") {
        let eq = find_depth0(stmt, 2, |t| t.is_op("="));
        let ann_end = eq.unwrap_or(stmt.len());
        if ann_end > 2 {
            let constructor = eq.and_then(|e| constructor_call(&stmt[e + 1..]));
            locals.push(local(&stmt[0], Some(tokens_text(&stmt[2..ann_end])), constructor));
        }
        return;
    }
    if stmt.len() >= 2
        && stmt[0].kind == TokenKind::Identifier
        && stmt[1].kind == TokenKind::Operator
        && is_augmented(&stmt[1].text)
    {
        locals.push(local(&stmt[0], None, None));
        return;
    }
    let eqs: Vec<usize> = (0..stmt.len()).filter(|&i| stmt[i].is_op("=") && depth_at(stmt, i) == 0).collect();
    let Some(&last_eq) = eqs.last() else { return };
    let constructor = constructor_call(&stmt[last_eq + 1..]);
    let mut seg_start = 0;
    for &eq in &eqs {
        let target = &stmt[seg_start..eq];
        if let Some(names) = simple_targets(target) {
            let single = names.len() == 1;
            for idx in names {
                locals.push(local(&target[idx], None, if single { constructor.clone() } else { None }));
            }
        }
        seg_start = eq + 1;
    }
}

fn is_augmented(op: &str) -> bool {
    op.len() >= 2 && op.ends_with('=') && !matches!(op, "==" | "<=" | ">=" | "!=")
}

/// Indices of plain names in an assignment target (`a`, `a, b`, `(a, b)`).
fn simple_targets(target: &[Token]) -> Option<Vec<usize>> {
    if target.is_empty() {
        return None;
    }
    let mut names = Vec::new();
    let mut expect_name = true;
    for (i, t) in target.iter().enumerate() {
        match t.kind {
            TokenKind::Identifier if expect_name => {
                names.push(i);
                expect_name = false;
            }
            TokenKind::Punct if t.text == "," && !expect_name => expect_name = true,
            TokenKind::Punct if matches!(t.text.as_str(), "(" | ")" | "[" | "]") => {}
            TokenKind::Operator if t.text == "*" && expect_name => {}
            _ => return None,
        }
    }
    (!names.is_empty()).then_some(names)
}

/// `Dotted.Name(...)` spanning the whole value → `Some("Dotted.Name")`.
fn constructor_call(value: &[Token]) -> Option<String> {
    let dotted = leading_dotted(value)?;
    let name_tokens = dotted.split('.').count() * 2 - 1;
    if !value.get(name_tokens)?.is_punct("(") {
        return None;
    }
    let mut depth = 0;
    for (i, t) in value.iter().enumerate().skip(name_tokens) {
        if t.is_punct("(") || t.is_punct("[") || t.is_punct("{") {
            depth += 1;
        } else if t.is_punct(")") || t.is_punct("]") || t.is_punct("}") {
            depth -= 1;
            if depth == 0 {
                return (i == value.len() - 1).then_some(dotted);
            }
        }
    }
    None
}

fn leading_dotted(toks: &[Token]) -> Option<String> {
    let first = toks.first().filter(|t| t.kind == TokenKind::Identifier)?;
    let mut name = first.text.clone();
    let mut i = 1;
    while i + 1 < toks.len() && toks[i].is_punct(".") && toks[i + 1].kind == TokenKind::Identifier {
        name.push('.');
        name.push_str(&toks[i + 1].text);
        i += 2;
    }
    Some(name)
}

fn depth_at(toks: &[Token], idx: usize) -> i32 {
    let mut d = 0;
    for t in &toks[..idx] {
        if t.kind == TokenKind::Punct {
            match t.text.as_str() {
                "(" | "[" | "{" => d += 1,
                ")" | "]" | "}" => d -= 1,
                _ => {}
            }
        }
    }
    d
}

fn find_depth0(toks: &[Token], from: usize, pred: impl Fn(&Token) -> bool) -> Option<usize> {
    let mut d = 0;
    for (i, t) in toks.iter().enumerate() {
        if i >= from && d == 0 && pred(t) {
            return Some(i);
        }
        if t.kind == TokenKind::Punct {
            match t.text.as_str() {
                "(" | "[" | "{" => d += 1,
                ")" | "]" | "}" => d -= 1,
                _ => {}
            }
        }
    }
    None
}

fn split_depth0<'t>(toks: &'t [Token], sep: &str) -> Vec<&'t [Token]> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut d = 0;
    for (i, t) in toks.iter().enumerate() {
        if t.kind == TokenKind::Punct {
            match t.text.as_str() {
                "(" | "[" | "{" => d += 1,
                ")" | "]" | "}" => d -= 1,
                s if s == sep && d == 0 => {
                    out.push(&toks[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
    }
    if start < toks.len() {
        out.push(&toks[start..]);
    }
    out.into_iter().filter(|s| !s.is_empty()).collect()
}

fn statement_start(toks: &[Token], i: usize) -> bool {
    i == 0 || toks[i - 1].is_layout() || toks[i - 1].is_punct(";")
}

/// Token texts joined the way they would be written: no spaces around
/// brackets and dots, a space after commas.
fn tokens_text(toks: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in toks.iter().enumerate() {
        if i > 0 {
            let prev = &toks[i - 1];
            let tight = prev.is_punct("(")
                || prev.is_punct("[")
                || prev.is_punct(".")
                || t.is_punct(")")
                || t.is_punct("]")
                || t.is_punct(",")
                || t.is_punct(".")
                || t.is_punct("[")
                || (t.is_punct("(") && prev.kind == TokenKind::Identifier);
            if !tight {
                out.push(' ');
            }
        }
        out.push_str(&t.text);
    }
    out
}

fn collapse_ws(s: &str) -> String {
    if !s.contains('\n') {
        return s.to_string();
    }
    let mut out = String::new();
    let mut pending_space = false;
    for line in s.split('\n') {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if pending_space && !out.ends_with(['(', '[', '{']) && !trimmed.starts_with([')', ']', '}']) {
            out.push(' ');
        }
        out.push_str(trimmed.trim_end_matches('\\').trim_end());
        pending_space = true;
    }
    out
}

/// Value of a string literal token (prefix and quotes removed, simple
/// escapes processed unless raw).
fn string_literal_value(text: &str) -> String {
    let prefix_len = text.find(['"', '\'']).unwrap_or(0);
    let raw = text[..prefix_len].to_ascii_lowercase().contains('r');
    let body = &text[prefix_len..];
    let q = if body.starts_with("\"\"\"") || body.starts_with("'''") { 3 } else { 1 };
    let inner = &body[q..body.len().saturating_sub(q).max(q)];
    if raw {
        return inner.to_string();
    }
    let mut out = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('\\') => out.push('\\'),
            Some('\'') => out.push('\''),
            Some('"') => out.push('"'),
            Some('\n') => {}
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

/// Trim docstring indentation: first line stripped, common indentation of
/// the remaining lines removed, surrounding blank lines dropped.
fn clean_docstring(raw: &str) -> String {
    let expanded = raw.replace('\t', "        ");
    let lines: Vec<&str> = expanded.split('\n').collect();
    let margin = lines
        .iter()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.len() - l.trim_start().len())
        .min()
        .unwrap_or(0);
    let mut cleaned: Vec<String> = Vec::with_capacity(lines.len());
    for (i, l) in lines.iter().enumerate() {
        if i == 0 {
            cleaned.push(l.trim().to_string());
        } else {
            cleaned.push(l.get(margin..).unwrap_or("").trim_end().to_string());
        }
    }
    while cleaned.first().is_some_and(|l| l.is_empty()) {
        cleaned.remove(0);
    }
    while cleaned.last().is_some_and(|l| l.is_empty()) {
        cleaned.pop();
    }
    cleaned.join("\n")
}
