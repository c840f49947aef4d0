//! Prompt realization under a character budget.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{ContextKind, CrossFileContext};
use crate::eval::retrieve_chunks;
use crate::index::{ImportResolution, RepoIndex};

pub const ROLE_HEADER: &str = "## Role of current file\n";
pub const DEPENDENCIES_HEADER: &str = "## Project dependencies\n";
pub const THIRD_PARTY_HEADER: &str = "## Third-party packages\n";
pub const APIS_HEADER: &str = "## Available APIs\n";
pub const LOCALS_HEADER: &str = "## Local variable types\n";
pub const INSTRUCTION: &str = "## Complete the function body:\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    InFile,
    AllImport,
    Rag,
    #[serde(rename = "idecoder")]
    IdeCoder,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::InFile, Strategy::AllImport, Strategy::Rag, Strategy::IdeCoder];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::InFile => "in_file",
            Strategy::AllImport => "all_import",
            Strategy::Rag => "rag",
            Strategy::IdeCoder => "idecoder",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown strategy {s:?} (expected in_file, all_import, rag or idecoder)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    pub max_chars: usize,
    pub reserved_for_prefix: usize,
}

impl Budget {
    pub fn new(max_chars: usize, reserved_for_prefix: usize) -> Result<Budget, String> {
        if max_chars == 0 {
            return Err("max_chars must be positive".into());
        }
        if reserved_for_prefix > max_chars {
            return Err(format!("reserved_for_prefix {reserved_for_prefix} exceeds max_chars {max_chars}"));
        }
        Ok(Budget { max_chars, reserved_for_prefix })
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_chars: 12_000, reserved_for_prefix: 2_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("budget of {max_chars} chars cannot hold the instruction and reserved prefix ({needed} chars)")]
pub struct BudgetError {
    pub needed: usize,
    pub max_chars: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Section {
    pub label: String,
    pub text: String,
    pub droppable: bool,
    pub relevance: f64,
}

impl Section {
    fn fixed(label: &str, text: String) -> Section {
        Section { label: label.to_string(), text, droppable: false, relevance: f64::INFINITY }
    }

    fn droppable(label: impl Into<String>, text: String, relevance: f64) -> Section {
        Section { label: label.into(), text, droppable: true, relevance }
    }

    fn chars(&self) -> usize {
        self.text.chars().count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptPlan {
    pub strategy: Strategy,
    pub sections: Vec<Section>,
    pub realized: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RagOptions {
    pub k: usize,
    pub chunk_lines: usize,
}

impl Default for RagOptions {
    fn default() -> Self {
        RagOptions { k: 3, chunk_lines: 12 }
    }
}

const PREFIX_LABEL: &str = "prefix";
const API_HEADER_LABEL: &str = "available_apis";
const USER_SYMBOL_LABEL: &str = "user_symbol:";

pub fn build_prompt(
    ctx: &CrossFileContext,
    strategy: Strategy,
    budget: &Budget,
    repo: &RepoIndex,
    rag: &RagOptions,
) -> Result<PromptPlan, BudgetError> {
    let prefix = &ctx.point.prefix;
    let needed = INSTRUCTION.chars().count() + budget.reserved_for_prefix.min(prefix.chars().count());
    if needed > budget.max_chars {
        return Err(BudgetError { needed, max_chars: budget.max_chars });
    }
    let mut sections = match strategy {
        Strategy::InFile => Vec::new(),
        Strategy::AllImport => all_import_sections(ctx, repo),
        Strategy::Rag => retrieve_chunks(repo, prefix, Some(&ctx.point.module), rag.k.max(1), rag.chunk_lines.max(1))
            .into_iter()
            .map(|c| {
                let text = format!("# {} (lines {}-{})\n{}\n\n", c.path, c.start_line, c.end_line, c.text);
                Section::droppable(format!("chunk:{}:{}", c.path, c.start_line), text, c.score)
            })
            .collect(),
        Strategy::IdeCoder => idecoder_sections(ctx),
    };
    sections.push(Section::fixed("instruction", INSTRUCTION.to_string()));
    sections.push(Section::fixed(PREFIX_LABEL, prefix.clone()));
    fit(&mut sections, budget);
    let realized: String = sections.iter().map(|s| s.text.as_str()).collect();
    Ok(PromptPlan { strategy, sections, realized })
}

fn all_import_sections(ctx: &CrossFileContext, repo: &RepoIndex) -> Vec<Section> {
    let mut out = Vec::new();
    let Some(module) = repo.module(&ctx.point.module) else { return out };
    let mut seen = Vec::new();
    for decl in &module.imports {
        if let ImportResolution::UserDefined { module: m } = repo.resolve_import(decl, &ctx.point.module) {
            if seen.contains(&m) || m == ctx.point.module {
                continue;
            }
            let path = repo.module(&m).map(|a| a.path.clone()).unwrap_or_else(|| m.clone());
            let source = repo.source(&m).unwrap_or_default();
            out.push(Section::droppable(format!("import:{m}"), format!("# file: {path}\n{source}\n"), 0.0));
            seen.push(m);
        }
    }
    out
}

fn idecoder_sections(ctx: &CrossFileContext) -> Vec<Section> {
    let mut out = Vec::new();
    let max_of = |kind| ctx.items_of(kind).map(|i| i.relevance).fold(0.0f64, f64::max);
    if let Some(role) = ctx.items_of(ContextKind::FileRole).next() {
        out.push(Section::droppable("file_role", format!("{ROLE_HEADER}{}\n\n", role.payload), role.relevance));
    }
    let list = |kind| ctx.items_of(kind).map(|i| format!("- {}\n", i.payload)).collect::<String>();
    let deps = list(ContextKind::ModuleDependency);
    if !deps.is_empty() {
        out.push(Section::droppable(
            "module_dependencies",
            format!("{DEPENDENCIES_HEADER}{deps}\n"),
            max_of(ContextKind::ModuleDependency),
        ));
    }
    let third = list(ContextKind::ThirdParty);
    if !third.is_empty() {
        out.push(Section::droppable(
            "third_party",
            format!("{THIRD_PARTY_HEADER}{third}\n"),
            max_of(ContextKind::ThirdParty),
        ));
    }
    let symbols: Vec<_> = ctx.items_of(ContextKind::UserSymbol).collect();
    if !symbols.is_empty() {
        out.push(Section::droppable(API_HEADER_LABEL, APIS_HEADER.to_string(), max_of(ContextKind::UserSymbol)));
        for item in symbols {
            let label = format!("{USER_SYMBOL_LABEL}{}", item.sort_key());
            out.push(Section::droppable(label, format!("{}\n", item.payload), item.relevance));
        }
    }
    let locals = ctx.items_of(ContextKind::LocalType).map(|i| format!("{}\n", i.payload)).collect::<String>();
    if !locals.is_empty() {
        out.push(Section::droppable(
            "local_types",
            format!("{LOCALS_HEADER}{locals}\n"),
            max_of(ContextKind::LocalType),
        ));
    }
    out
}

/// Drop, then truncate, until the sections fit `budget.max_chars`.
fn fit(sections: &mut Vec<Section>, budget: &Budget) {
    loop {
        drop_orphan_header(sections);
        let total: usize = sections.iter().map(Section::chars).sum();
        if total <= budget.max_chars {
            return;
        }
        let droppable: Vec<usize> = (0..sections.len()).filter(|&i| sections[i].droppable).collect();
        if droppable.len() > 1 {
            // Lowest relevance first; among equals, the later section.
            let victim = droppable
                .iter()
                .copied()
                .min_by(|&a, &b| sections[a].relevance.total_cmp(&sections[b].relevance).then(b.cmp(&a)))
                .expect("nonempty");
            sections.remove(victim);
            continue;
        }
        let excess = total - budget.max_chars;
        if let Some(&only) = droppable.first() {
            let len = sections[only].chars();
            if len > excess {
                let keep: String = sections[only].text.chars().take(len - excess).collect();
                sections[only].text = keep;
            } else {
                sections.remove(only);
            }
            continue;
        }
        let p = sections.iter().position(|s| s.label == PREFIX_LABEL).expect("prefix section");
        let len = sections[p].chars();
        let keep = len.saturating_sub(excess);
        sections[p].text = sections[p].text.chars().skip(len - keep).collect();
        return;
    }
}

fn drop_orphan_header(sections: &mut Vec<Section>) {
    let has_symbols = sections.iter().any(|s| s.label.starts_with(USER_SYMBOL_LABEL));
    if !has_symbols {
        sections.retain(|s| s.label != API_HEADER_LABEL);
    }
}

/// Last `n` characters of `text`.
pub fn char_suffix(text: &str, n: usize) -> &str {
    let count = text.chars().count();
    if n >= count {
        return text;
    }
    let idx = text.char_indices().nth(count - n).map_or(text.len(), |(i, _)| i);
    &text[idx..]
}
