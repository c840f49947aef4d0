//! Generated repositories for the ordering experiment and for benchmarks.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::eval::EvalTask;
use crate::llm::{MockRule, MockScript};

/// One task of the ordering corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderingTask {
    pub module: String,
    pub function: String,
    pub gold_body: String,
    /// Text a prompt must contain for the gated mock to answer correctly.
    pub gate: String,
    /// Whether the worker method sits behind filler code.
    pub buried: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthRepo {
    /// Relative path and source of every file.
    pub files: Vec<(String, String)>,
    pub tasks: Vec<OrderingTask>,
}

impl SynthRepo {
    pub fn write_to(&self, root: &Path) -> io::Result<()> {
        for (rel, src) in &self.files {
            let path = root.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, src)?;
        }
        Ok(())
    }

    pub fn eval_tasks(&self, root: &Path) -> Vec<EvalTask> {
        self.tasks
            .iter()
            .map(|t| EvalTask {
                repo: root.to_path_buf(),
                module: t.module.clone(),
                function: t.function.clone(),
                gold_lines: t.gold_body.lines().count(),
                gold_body: t.gold_body.clone(),
                source_line: 0,
            })
            .collect()
    }

    /// Answers with a task's gold body only when its gate text is present.
    pub fn gated_mock(&self) -> MockScript {
        MockScript {
            rules: self
                .tasks
                .iter()
                .map(|t| MockRule { require: vec![t.gate.clone()], completion: t.gold_body.clone() })
                .collect(),
            fallback: "pass".to_string(),
        }
    }
}

fn worker_file(i: usize, buried: bool) -> String {
    let mut s = format!("class Worker{i}:\n    \"\"\"Worker number {i}.\"\"\"\n\n");
    let filler = |s: &mut String, from: usize, to: usize| {
        for k in from..to {
            let _ = write!(
                s,
                "    def tidy_{i}_{k}(self, alpha_{i}_{k}, beta_{i}_{k}):\n        gamma_{i}_{k} = alpha_{i}_{k} + beta_{i}_{k}\n        return gamma_{i}_{k}\n\n"
            );
        }
    };
    if buried {
        filler(&mut s, 0, 5);
    }
    let _ = write!(s, "    def fetch_x_{i}(self, key_{i}: str) -> str:\n        return key_{i}\n");
    if buried {
        s.push('\n');
        filler(&mut s, 5, 7);
    }
    s
}

fn task_file(i: usize) -> String {
    format!(
        "from workers.w{i} import Worker{i}\n\n\ndef run_{i}(item_{i}: Worker{i}, key_{i}: str):\n    return item_{i}.fetch_x_{i}(key_{i})\n"
    )
}

/// `n` tasks, each in its own module, each completing to a single call of
/// a method defined in another file. Odd-numbered workers bury that method
/// after filler methods.
pub fn ordering_corpus(n: usize) -> SynthRepo {
    let mut files =
        vec![("workers/__init__.py".to_string(), String::new()), ("tasks/__init__.py".to_string(), String::new())];
    let mut tasks = Vec::new();
    for i in 0..n {
        let buried = i % 2 == 1;
        files.push((format!("workers/w{i}.py"), worker_file(i, buried)));
        files.push((format!("tasks/t{i}.py"), task_file(i)));
        tasks.push(OrderingTask {
            module: format!("tasks.t{i}"),
            function: format!("run_{i}"),
            gold_body: format!("return item_{i}.fetch_x_{i}(key_{i})\n"),
            gate: format!("def fetch_x_{i}(self, key_{i}: str)"),
            buried,
        });
    }
    SynthRepo { files, tasks }
}

/// A repository of `files` modules of roughly `lines_per_file` lines, with
/// classes, inheritance across files and imports between neighbours.
pub fn generated_repo(files: usize, lines_per_file: usize) -> Vec<(String, String)> {
    let mut out = vec![("pkg/__init__.py".to_string(), "\"\"\"Generated package.\"\"\"\n".to_string())];
    for f in 0..files {
        let mut s = format!("\"\"\"Module {f}.\"\"\"\nimport os\nfrom typing import Optional\n");
        if f > 0 {
            let _ = writeln!(s, "from pkg.m{} import Base{}", f - 1, f - 1);
        }
        let _ = writeln!(s, "\nLIMIT_{f} = {f}\n");
        let base = if f > 0 { format!("Base{}", f - 1) } else { "object".to_string() };
        let _ = write!(s, "class Base{f}({base}):\n    \"\"\"Base class {f}.\"\"\"\n    size: int = 0\n\n");
        let mut k = 0;
        while s.lines().count() + 8 < lines_per_file {
            let _ = write!(
                s,
                "    def step_{k}(self, value: int, note: Optional[str] = None) -> int:\n        \"\"\"Step {k}.\"\"\"\n        total = value + self.size + LIMIT_{f}\n        for part in range(value):\n            total += part  # accumulate\n        return total if note is None else len(os.sep) + total\n\n"
            );
            k += 1;
        }
        let _ = write!(s, "def make_{f}() -> Base{f}:\n    return Base{f}()\n");
        out.push((format!("pkg/m{f}.py"), s));
    }
    out
}
