mod common;
mod oracles;

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{fixture_index, fixture_indexes, targets};
use crossfile_core::context::{identify_context, CompletionPoint, ContextItem, ContextKind, ContextOptions};
use crossfile_core::eval::{
    codebleu, dataflow_match, exact_match, metric_tokens, run_eval, syntax_match, CodeBleuWeights, EvalSettings,
};
use crossfile_core::index::{build_repo_index, Scope, BUILTINS};
use crossfile_core::llm::{MockBackend, MockRule, MockScript};
use crossfile_core::prompt::{build_prompt, char_suffix, Budget, RagOptions, Strategy, INSTRUCTION};
use crossfile_core::refine::{apply_import_edits, auto_import, lint_completion, refine_loop, DiagnosticKind};
use crossfile_core::syntax::body_tree;
use crossfile_core::synth::{generated_repo, ordering_corpus};
use oracles::{Outcome, Walker};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn metric_identity() -> Verdict {
    let start = Instant::now();
    let mut golds = Vec::new();
    for idx in fixture_indexes() {
        golds.extend(targets(&idx).into_iter().map(|t| t.body));
    }
    golds.truncate(50);
    if golds.len() < 50 {
        return Err(format!("only {} gold bodies", golds.len()));
    }
    let mut failures = Vec::new();
    for g in &golds {
        let scores = [f64::from(exact_match(g, g)), syntax_match(g, g), codebleu(g, g), dataflow_match(g, g)];
        if scores.iter().any(|s| (s - 1.0).abs() > 1e-12) {
            failures.push(format!("{scores:?} for {g:?}"));
        }
    }
    let elapsed = start.elapsed();
    check(
        failures.is_empty() && elapsed < Duration::from_secs(5),
        format!(
            "{} bodies, {} failures, {:.2?}{}",
            golds.len(),
            failures.len(),
            elapsed,
            failures.first().map_or(String::new(), |f| format!("; {f}"))
        ),
    )
}

const PAIRS: &[(&str, &str)] = &[
    ("x = a + 1\nreturn x\n", "x = a + 1\nreturn x\n"),
    ("y = a + 1\nreturn y\n", "x = a + 1\nreturn x\n"),
    (
        "total = 0\nfor item in items:\n    total = total + item\nreturn total\n",
        "total = 0\nfor item in items:\n    total += item\nreturn total\n",
    ),
    ("return a - b\n", "return a + b\n"),
    ("if x:\n    return 2\nreturn 1\n", "if x:\n    return 1\nreturn 2\n"),
    ("return fetch(key).value\n", "result = fetch(key)\nreturn result.value\n"),
    ("a, b = pair\nreturn a, b\n", "a, b = pair\nreturn b, a\n"),
    ("data = load(path)\nreturn parse(data)\n", "data = load(path, mode='r')\nreturn parse(data)\n"),
    ("for k in keys:\n    return k\n", "for k in keys:\n    if k in seen:\n        return k\nreturn None\n"),
    ("n = len(xs)\nreturn sum(xs) / n\n", "n = len(xs)\nif n == 0:\n    return 0\nreturn sum(xs) / n\n"),
    ("self.count = self.count + 1\nreturn self.count\n", "self.count += 1\nreturn self.count\n"),
    ("return [x * 2 for x in xs]\n", "out = []\nfor x in xs:\n    out.append(x * 2)\nreturn out\n"),
    (
        "value = cache.get(key)\nreturn value\n",
        "value = cache.get(key)\nif value is None:\n    value = compute(key)\n    cache[key] = value\nreturn value\n",
    ),
    ("while i < n:\n    i = i + 2\nreturn i\n", "while i < n:\n    i += 1\nreturn i\n"),
    ("x = 1\nz = x\nreturn z\n", "x = 1\ny = x\nz = y\nreturn z\n"),
    ("raise TypeError(msg)\n", "raise ValueError(msg)\n"),
    (
        "email = user.email\nname = user.name\nreturn name + email\n",
        "name = user.name\nemail = user.email\nreturn name + email\n",
    ),
    ("return None\n", "pass\n"),
    ("return svc.getState()\n", "return svc.get_service_state()\n"),
    ("return int(s)\n", "try:\n    return int(s)\nexcept ValueError:\n    return 0\n"),
];

fn metric_oracles() -> Verdict {
    let w = CodeBleuWeights::default();
    let mut worst: f64 = 0.0;
    let mut mismatches = Vec::new();
    for (i, (pred, gold)) in PAIRS.iter().enumerate() {
        let (pt, gt) = (metric_tokens(pred), metric_tokens(gold));
        let b = oracles::bleu(&pt, &gt);
        let wb = oracles::weighted_bleu(&pt, &gt, w.keyword_weight);
        let s = oracles::subtree_match(&body_tree(pred).unwrap(), &body_tree(gold).unwrap());
        let d = oracles::dataflow(pred, gold);
        let expected = w.ngram * b + w.weighted_ngram * wb + w.syntax * s + w.dataflow * d;
        let got = codebleu(pred, gold);
        let diff = (expected - got).abs();
        worst = worst.max(diff);
        if diff > 1e-9 {
            mismatches.push(format!(
                "pair {i}: oracle {expected:.12} (bleu {b:.6}, wbleu {wb:.6}, sm {s:.6}, df {d:.6}) vs {got:.12} (sm {:.6}, df {:.6})",
                syntax_match(pred, gold),
                dataflow_match(pred, gold)
            ));
        }
    }
    check(
        mismatches.is_empty(),
        format!(
            "{} pairs, max |diff| {worst:.2e}{}",
            PAIRS.len(),
            mismatches.first().map_or(String::new(), |m| format!("; {m}"))
        ),
    )
}

fn ordering() -> Verdict {
    let start = Instant::now();
    let repo = ordering_corpus(30);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    repo.write_to(dir.path()).map_err(|e| e.to_string())?;
    let tasks = repo.eval_tasks(dir.path());
    let backend = MockBackend::new(repo.gated_mock());
    let settings = EvalSettings::default();
    let em = |s: Strategy| run_eval(&tasks, s, &backend, &settings).report.em;
    let (ide, rag, inf) = (em(Strategy::IdeCoder), em(Strategy::Rag), em(Strategy::InFile));
    let elapsed = start.elapsed();
    check(
        ide >= rag && rag >= inf && ide - inf >= 20.0 && elapsed < Duration::from_secs(30),
        format!("EM idecoder {ide:.1} / rag {rag:.1} / in_file {inf:.1}, {elapsed:.2?}"),
    )
}

fn resolution_oracle() -> Verdict {
    let mut rng = StdRng::seed_from_u64(20);
    let indexes = fixture_indexes();
    let mut agree = 0;
    let mut asked = 0;
    let mut kinds = std::collections::BTreeMap::new();
    let mut first_miss = None;
    while asked < 100 {
        let idx = &indexes[rng.gen_range(0..indexes.len())];
        let walker = Walker { index: idx };
        let modules: Vec<&String> = idx.modules().keys().collect();
        let module = modules[rng.gen_range(0..modules.len())];
        let ast = idx.module(module).unwrap();
        let mut scopes: Vec<Option<String>> = vec![None];
        scopes.extend(ast.functions.iter().map(|f| Some(f.name.clone())));
        for c in &ast.classes {
            scopes.push(Some(c.name.clone()));
            scopes.extend(c.methods.iter().map(|m| Some(format!("{}.{}", c.name, m.name))));
        }
        let enclosing = scopes[rng.gen_range(0..scopes.len())].clone();
        let mut names: Vec<String> =
            idx.modules().values().flat_map(|m| m.occurrences.iter().map(|o| o.chain[0].clone())).collect();
        names.extend(BUILTINS.iter().take(8).map(|s| s.to_string()));
        names.extend(["nothing_here", "_private", "shop", "app"].map(String::from));
        names.sort();
        names.dedup();
        let mut chain = vec![names[rng.gen_range(0..names.len())].clone()];
        if rng.gen_bool(0.4) {
            let members: Vec<String> = idx.symbols().values().map(|s| s.name().to_string()).collect();
            chain.push(members[rng.gen_range(0..members.len())].clone());
        }
        let Some(expected) = walker.chain(module, enclosing.as_deref(), &chain) else { continue };
        let scope = match &enclosing {
            Some(e) => Scope::within(module, e),
            None => Scope::module(module),
        };
        let got = Outcome::of(&idx.resolve_name(&chain, &scope));
        asked += 1;
        *kinds.entry(format!("{:?}", std::mem::discriminant(&expected))).or_insert(0) += 1;
        if got == expected {
            agree += 1;
        } else if first_miss.is_none() {
            first_miss = Some(format!("{module} {enclosing:?} {chain:?}: oracle {expected:?}, resolver {got:?}"));
        }
    }
    check(
        agree == asked,
        format!(
            "{agree}/{asked} agree across {} outcome kinds{}",
            kinds.len(),
            first_miss.map_or(String::new(), |m| format!("; {m}"))
        ),
    )
}

fn refinement() -> Verdict {
    let mut fixtures = Vec::new();
    for idx in fixture_indexes() {
        for t in targets(&idx) {
            let p = CompletionPoint::new(&idx, &t.module, &t.function).unwrap();
            let m = idx.module(&t.module).unwrap();
            let decl = p.decl(&idx).unwrap();
            let typed: Vec<String> = m
                .occurrences_in(decl.body_span)
                .filter(|o| o.chain.len() >= 2 && o.chain[0] != "self")
                .map(|o| format!("{}.{}", o.chain[0], o.chain[1]))
                .collect();
            for access in typed {
                let broken = t.body.replacen(&access, &format!("{access}_v2"), 1);
                let d = lint_completion(&broken, &p, &idx);
                if d.len() == 1 && d[0].kind == DiagnosticKind::UnknownAttribute {
                    let member = access.split('.').nth(1).unwrap();
                    fixtures.push((
                        idx.clone(),
                        p.clone(),
                        t.body.clone(),
                        broken,
                        format!("no attribute '{member}_v2'"),
                    ));
                    break;
                }
            }
            if fixtures.len() == 10 {
                break;
            }
        }
    }
    let unknown_count = fixtures.len();
    let shop = fixture_index("shop");
    let foreign = [
        "Inventory",
        "OrderService",
        "PriceBook",
        "Entity",
        "slugify",
        "quote",
        "busiest",
        "order_block",
        "Line",
        "clamp",
    ];
    let hosts = [("shop.base", "Entity.describe"), ("shop.util", "first"), ("shop.base", "Timestamped.touch")];
    for (i, name) in foreign.iter().enumerate() {
        let (module, function) = hosts[i % hosts.len()];
        let p = CompletionPoint::new(&shop, module, function).unwrap();
        let body = format!("value = {name}\nreturn value\n");
        fixtures.push((shop.clone(), p, body.clone(), body, String::from("UnimportedUsage")));
    }
    let mut converged = 0;
    let mut import_failures = 0;
    for (idx, p, gold, broken, marker) in &fixtures {
        let d = lint_completion(broken, p, idx);
        let (edits, _) = auto_import(broken, &d, p, idx);
        let patched = apply_import_edits(idx.source(&p.module).unwrap(), &edits);
        let next = idx.with_module_source(&p.module, &patched).unwrap();
        let p2 = CompletionPoint::new(&next, &p.module, &p.function).unwrap();
        if lint_completion(broken, &p2, &next).iter().any(|d| d.kind == DiagnosticKind::UnimportedUsage) {
            import_failures += 1;
        }
        let script = MockScript {
            rules: vec![MockRule { require: vec!["Linter found".into(), marker.clone()], completion: gold.clone() }],
            fallback: broken.clone(),
        };
        let ctx = identify_context(p, idx, &ContextOptions::default()).unwrap();
        let plan = build_prompt(&ctx, Strategy::IdeCoder, &Budget::default(), idx, &RagOptions::default()).unwrap();
        let trace = refine_loop(p, &plan, &MockBackend::new(script), idx, 2, None).map_err(|e| e.to_string())?;
        if trace.converged && trace.iterations.len() <= 3 {
            converged += 1;
        }
    }
    let rate = converged as f64 / fixtures.len() as f64;
    check(
        fixtures.len() == 20 && rate >= 0.95 && import_failures == 0,
        format!(
            "{converged}/{} converged ({unknown_count} attribute, {} import defects), {import_failures} left unimported",
            fixtures.len(),
            fixtures.len() - unknown_count
        ),
    )
}

fn budget_fuzz() -> Verdict {
    let mut rng = StdRng::seed_from_u64(6);
    let indexes = fixture_indexes();
    let points: Vec<(usize, CompletionPoint)> = indexes
        .iter()
        .enumerate()
        .flat_map(|(i, idx)| {
            targets(idx).into_iter().map(move |t| (i, CompletionPoint::new(idx, &t.module, &t.function).unwrap()))
        })
        .collect();
    let mut violations = 0;
    let mut cases = 0;
    let instruction = INSTRUCTION.chars().count();
    while cases < 1000 {
        let (i, p) = &points[rng.gen_range(0..points.len())];
        let idx = &indexes[*i];
        let mut ctx = identify_context(p, idx, &ContextOptions::default()).unwrap();
        for k in 0..rng.gen_range(0..6) {
            let len = rng.gen_range(0..600);
            let payload: String =
                (0..len).map(|j| if j % 40 == 39 { '\n' } else { (b'a' + (j % 26) as u8) as char }).collect();
            ctx.items.push(ContextItem {
                kind: ContextKind::UserSymbol,
                payload,
                source_symbol: Some(format!("zz.fake{k}")),
                relevance: rng.gen_range(0.0..6.0),
            });
        }
        let reserved = rng.gen_range(0..400);
        let floor = instruction + reserved.min(p.prefix.chars().count());
        let max = rng.gen_range(floor.max(reserved).max(1)..floor.max(reserved).max(1) + 3000);
        let budget = Budget::new(max, reserved).map_err(|e| e.to_string())?;
        let strategy = Strategy::ALL[rng.gen_range(0..4)];
        let plan = build_prompt(&ctx, strategy, &budget, idx, &RagOptions::default()).map_err(|e| e.to_string())?;
        let keep = reserved.min(p.prefix.chars().count());
        if plan.realized.chars().count() > max || !plan.realized.contains(char_suffix(&p.prefix, keep)) {
            violations += 1;
        }
        cases += 1;
    }
    check(violations == 0, format!("{cases} cases, {violations} violations"))
}

fn determinism() -> Verdict {
    let repo = ordering_corpus(30);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    repo.write_to(&dir.path().join("repo")).map_err(|e| e.to_string())?;
    let tasks = repo.eval_tasks(&dir.path().join("repo"));
    let backend = MockBackend::new(repo.gated_mock());
    let mut differing = Vec::new();
    for s in Strategy::ALL {
        let mut files = Vec::new();
        for round in 0..2 {
            let run = run_eval(&tasks, s, &backend, &EvalSettings::default());
            let report = dir.path().join(format!("{s}-{round}.json"));
            let trace = dir.path().join(format!("{s}-{round}.jsonl"));
            fs::write(&report, run.report_json()).map_err(|e| e.to_string())?;
            fs::write(&trace, run.trace_jsonl()).map_err(|e| e.to_string())?;
            files.push((fs::read(report).unwrap(), fs::read(trace).unwrap()));
        }
        if files[0] != files[1] {
            differing.push(s.to_string());
        }
    }
    check(differing.is_empty(), format!("4 strategies x 2 runs, differing: {differing:?}"))
}

fn indexing_speed() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let files = generated_repo(50, 100);
    let lines: usize = files.iter().map(|(_, s)| s.lines().count()).sum();
    for (rel, src) in &files {
        let path = dir.path().join(rel);
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, src).unwrap();
    }
    let start = Instant::now();
    let idx = build_repo_index(dir.path(), &[]).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(
        elapsed < Duration::from_secs(1) && idx.errors().is_empty() && idx.modules().len() == files.len(),
        format!("{} files, {lines} lines in {elapsed:.2?}", idx.modules().len()),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("metric identity", metric_identity),
        ("metric oracles", metric_oracles),
        ("strategy ordering", ordering),
        ("resolution oracle", resolution_oracle),
        ("refinement convergence", refinement),
        ("budget fuzz", budget_fuzz),
        ("determinism", determinism),
        ("indexing speed", indexing_speed),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", n + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
