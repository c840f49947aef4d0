//! Class linearization: left-to-right depth-first over bases, keeping the
//! first visit of each class. This intentionally differs from Python's C3
//! order on diamonds (`D(B, C)`, `B(A)`, `C(A)` gives `D, B, A, C`).

use std::collections::BTreeMap;

use thiserror::Error;

use super::{RepoIndex, Symbol, SymbolKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("class hierarchy cycle: {}", cycle.join(" -> "))]
pub struct CycleError {
    pub cycle: Vec<String>,
}

pub(crate) fn linearize(class: &str, bases: &BTreeMap<String, Vec<String>>) -> Result<Vec<String>, CycleError> {
    let mut order = Vec::new();
    let mut path = Vec::new();
    visit(class, bases, &mut order, &mut path)?;
    Ok(order)
}

fn visit(
    class: &str,
    bases: &BTreeMap<String, Vec<String>>,
    order: &mut Vec<String>,
    path: &mut Vec<String>,
) -> Result<(), CycleError> {
    if let Some(at) = path.iter().position(|c| c == class) {
        let mut cycle = path[at..].to_vec();
        cycle.push(class.to_string());
        return Err(CycleError { cycle });
    }
    let seen = order.iter().any(|c| c == class);
    if !seen {
        order.push(class.to_string());
    }
    path.push(class.to_string());
    for base in bases.get(class).map(Vec::as_slice).unwrap_or_default() {
        // Already-visited bases are pruned, but still walked for cycles.
        if order.iter().any(|c| c == base) && !path.contains(base) {
            continue;
        }
        visit(base, bases, order, path)?;
    }
    path.pop();
    Ok(())
}

impl RepoIndex {
    /// Linearized ancestors of `class` (itself first).
    pub fn linearization(&self, class: &str) -> Result<Vec<String>, CycleError> {
        match self.hierarchy.get(class) {
            Some(lin) => Ok(lin.clone()),
            None => linearize(class, &self.bases),
        }
    }

    /// Find `member` on a class or its linearized bases; first match wins.
    pub fn lookup_member(&self, class_symbol: &Symbol, member: &str) -> Result<Option<Symbol>, CycleError> {
        debug_assert_eq!(class_symbol.kind, SymbolKind::Class);
        for class in self.linearization(&class_symbol.qualified_name)? {
            if let Some(found) = self.symbols.get(&format!("{class}.{member}")) {
                return Ok(Some(found.clone()));
            }
        }
        Ok(None)
    }
}
