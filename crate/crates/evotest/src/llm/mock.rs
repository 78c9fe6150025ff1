//! Deterministic mock backend.
//!
//! Replies are a pure function of (backend seed, request sampling seed,
//! template id, hash of the user content). The mock parses the program
//! source out of the prompt and interprets it to compute ground-truth
//! expected values, so generated tests mostly pass; a configurable slice
//! of expectations is deliberately wrong to exercise the repair loop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use minilang::ast::{Block, Expr, ExprKind, Span, Stmt, StmtKind};
use minilang::hash::{fnv1a_64, mix64};
use minilang::{
    parse_program, parse_test_file, print_function, print_test_method, FunctionDecl, Program,
    TestRun, Value,
};

use super::templates::{sections, TemplateId};
use super::{Backend, BackendKind, CompletionRequest, CompletionResponse, LlmError};

const PROBE_BUDGET: u64 = 10_000;
const REPAIR_INTRO: &str = "The generated test suite has encountered an error:";
const REPAIR_FOOTER_PREFIX: &str = "Modify the test code to fix it";

#[derive(Debug, Clone)]
pub struct MockBackend {
    pub seed: u64,
    /// Probability that a generated expectation is deliberately wrong.
    pub wrong_expectation_rate: f64,
    /// When set, every repair reply is unparseable garbage; the repair
    /// loop then burns through its full round budget.
    pub fail_repairs: bool,
}

impl MockBackend {
    pub fn new(seed: u64) -> Self {
        MockBackend {
            seed,
            wrong_expectation_rate: 0.10,
            fail_repairs: false,
        }
    }

    pub fn with_wrong_expectation_rate(mut self, rate: f64) -> Self {
        self.wrong_expectation_rate = rate;
        self
    }

    pub fn failing_repairs(mut self) -> Self {
        self.fail_repairs = true;
        self
    }

    fn rng_for(&self, request: &CompletionRequest) -> ChaCha8Rng {
        let template_tag = fnv1a_64(request.template.name().as_bytes());
        let content_tag = fnv1a_64(request.user_content.as_bytes());
        let mixed = mix64(
            mix64(self.seed, request.sampling_seed),
            mix64(template_tag, content_tag),
        );
        ChaCha8Rng::seed_from_u64(mixed)
    }
}

impl Backend for MockBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let mut rng = self.rng_for(request);
        let text = match request.template {
            t if t.is_generation() => self.generation_reply(&mut rng, request),
            TemplateId::CoverageEnhance => self.enhancement_reply(&mut rng, request),
            TemplateId::Repair => self.repair_reply(request),
            TemplateId::Mutator => self.mutator_reply(&mut rng, request),
            _ => String::new(),
        };
        Ok(CompletionResponse {
            text,
            backend: BackendKind::Mock,
            latency: std::time::Duration::ZERO,
            prompt_tokens: 0,
            completion_tokens: 0,
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }
}

impl MockBackend {
    fn generation_reply(&self, rng: &mut ChaCha8Rng, request: &CompletionRequest) -> String {
        let Some(program) = parse_program_section(&request.user_content) else {
            return "// mock: source section missing or unparseable".to_string();
        };
        let focal: Vec<&FunctionDecl> = program.focal_functions().collect();
        if focal.is_empty() {
            return String::new();
        }
        let (test_count, asserts_per_test, edge_bias, via_helpers) = match request.template {
            TemplateId::GenA1 => (3, 1, false, false),
            TemplateId::GenA2 => (3, 2, false, false),
            TemplateId::GenA3 => (4, 1, false, false),
            TemplateId::GenA4 => (3, 1, true, false),
            TemplateId::GenA5 => (2, 1, false, true),
            _ => (3, 1, false, false),
        };

        let mut helpers: Vec<FunctionDecl> = Vec::new();
        let mut tests: Vec<(String, Block)> = Vec::new();
        for i in 0..test_count {
            let function = focal[rng.random_range(0..focal.len())];
            let Some((args, value)) = sample_passing_call(rng, &program, function, edge_bias)
            else {
                continue;
            };
            let mut stmts = Vec::new();
            let target = if via_helpers {
                let helper_name = format!("via_{}", function.name);
                if !helpers.iter().any(|h| h.name == helper_name) {
                    helpers.push(make_forwarding_helper(&helper_name, function));
                }
                helper_name
            } else {
                function.name.clone()
            };
            let wrong = rng.random::<f64>() < self.wrong_expectation_rate;
            stmts.push(assert_stmt(&target, &args, &value, wrong));
            for _ in 1..asserts_per_test {
                let Some((more_args, more_value)) =
                    sample_passing_call(rng, &program, function, edge_bias)
                else {
                    continue;
                };
                stmts.push(assert_stmt(&function.name, &more_args, &more_value, false));
            }
            tests.push((format!("t{i}_{}", function.name), Block { stmts }));
        }

        let mut out = String::new();
        for h in &helpers {
            out.push_str(&print_function(h));
            out.push('\n');
        }
        for (name, body) in &tests {
            out.push_str(&print_test_method(name, body));
            out.push('\n');
        }
        out
    }

    fn enhancement_reply(&self, rng: &mut ChaCha8Rng, request: &CompletionRequest) -> String {
        let Some(program) = parse_program_section(&request.user_content) else {
            return String::new();
        };
        let Some(report) = extract_section(&request.user_content, sections::COVERAGE_REPORT)
        else {
            return String::new();
        };
        let missed = parse_missed_items(&report);
        let mut targets: Vec<String> = Vec::new();
        for item in &missed {
            if !targets.contains(&item.function) {
                targets.push(item.function.clone());
            }
        }

        let mut tests: Vec<(String, Block)> = Vec::new();
        for (i, target) in targets.iter().take(3).enumerate() {
            let Some(function) = program.function(target) else {
                continue;
            };
            let wanted: Vec<&MissedItem> =
                missed.iter().filter(|m| &m.function == target).collect();
            let mut found = None;
            for _ in 0..200 {
                let Some((args, value, coverage)) =
                    sample_passing_call_with_coverage(rng, &program, function)
                else {
                    continue;
                };
                if covers_any(&program, &coverage, &wanted) {
                    found = Some((args, value));
                    break;
                }
            }
            let chosen = found.or_else(|| sample_passing_call(rng, &program, function, false));
            if let Some((args, value)) = chosen {
                let wrong = rng.random::<f64>() < self.wrong_expectation_rate;
                let body = Block {
                    stmts: vec![assert_stmt(&function.name, &args, &value, wrong)],
                };
                tests.push((format!("t{i}_{}_enhanced", function.name), body));
            }
        }

        let mut out = String::new();
        for (name, body) in &tests {
            out.push_str(&print_test_method(name, body));
            out.push('\n');
        }
        out
    }

    fn repair_reply(&self, request: &CompletionRequest) -> String {
        if self.fail_repairs {
            return "@@ mock repair disabled @@".to_string();
        }
        let Some(trace) = extract_repair_trace(&request.user_content) else {
            return "@@ mock repair: no trace @@".to_string();
        };
        let Some(suite_text) = extract_section(&request.user_content, sections::TEST_SUITE) else {
            return "@@ mock repair: no suite @@".to_string();
        };
        let Some((function, line)) = parse_trace_head(&trace) else {
            return suite_text;
        };
        let Ok(decls) = parse_test_file(&suite_text) else {
            return suite_text;
        };

        let mut out = String::new();
        let is_failing_helper = decls
            .iter()
            .any(|d| !d.is_test && d.decl.name == function);
        for d in &decls {
            if d.is_test {
                if d.decl.name == function {
                    // Drop the statement the trace points at.
                    let body = remove_stmt_at_line(&d.decl.body, line);
                    if body.stmts.is_empty() {
                        continue;
                    }
                    out.push_str(&print_test_method(&d.decl.name, &body));
                    out.push('\n');
                    continue;
                }
                if is_failing_helper && calls_name(&d.decl.body, &function) {
                    // The failure is inside a helper; drop tests that use it.
                    continue;
                }
                out.push_str(&print_test_method(&d.decl.name, &d.decl.body));
                out.push('\n');
            } else {
                out.push_str(&print_function(&d.decl));
                out.push('\n');
            }
        }
        out
    }

    fn mutator_reply(&self, rng: &mut ChaCha8Rng, request: &CompletionRequest) -> String {
        let Some(program) = parse_program_section(&request.user_content) else {
            return String::new();
        };
        let Some(method_text) = extract_section(&request.user_content, sections::TEST_METHOD)
        else {
            return String::new();
        };
        let Ok(decls) = parse_test_file(&method_text) else {
            return method_text;
        };
        let Some(method) = decls.iter().find(|d| d.is_test) else {
            return method_text;
        };
        let focal: Vec<&FunctionDecl> = program.focal_functions().collect();
        if focal.is_empty() {
            return method_text;
        }

        let mut body = method.decl.body.clone();
        let additions = rng.random_range(1..=5usize);
        let mut added = 0;
        for _ in 0..additions {
            let function = focal[rng.random_range(0..focal.len())];
            let Some((args, value)) = sample_passing_call(rng, &program, function, false) else {
                continue;
            };
            let wrong = rng.random::<f64>() < self.wrong_expectation_rate;
            body.stmts.push(assert_stmt(&function.name, &args, &value, wrong));
            added += 1;
        }
        if added == 0 {
            return method_text;
        }
        print_test_method(&method.decl.name, &body)
    }
}

// ---- prompt parsing ------------------------------------------------------

/// Content of the section starting after the exact `header` line, up to the
/// next known section header (or end of input).
pub(crate) fn extract_section(text: &str, header: &str) -> Option<String> {
    let mut collecting = false;
    let mut out = String::new();
    for line in text.lines() {
        if line == header {
            collecting = true;
            continue;
        }
        if collecting {
            if sections::ALL.contains(&line)
                || line == REPAIR_INTRO
                || line.starts_with(REPAIR_FOOTER_PREFIX)
            {
                break;
            }
            out.push_str(line);
            out.push('\n');
        }
    }
    if collecting {
        Some(out)
    } else {
        None
    }
}

fn extract_repair_trace(text: &str) -> Option<String> {
    let mut collecting = false;
    let mut out = String::new();
    for line in text.lines() {
        if line == REPAIR_INTRO {
            collecting = true;
            continue;
        }
        if collecting {
            if sections::ALL.contains(&line) {
                break;
            }
            out.push_str(line);
            out.push('\n');
        }
    }
    if collecting {
        Some(out)
    } else {
        None
    }
}

fn parse_program_section(text: &str) -> Option<Program> {
    let source = extract_section(text, sections::SOURCE_CODE)?;
    parse_program(&source, "program.mini").ok()
}

/// First trace line: `ERROR <kind> at <file>:<line>:<col> in <function>`.
fn parse_trace_head(trace: &str) -> Option<(String, u32)> {
    let head = trace.lines().find(|l| l.starts_with("ERROR "))?;
    let after_at = head.split(" at ").nth(1)?;
    let (location, function) = after_at.split_once(" in ")?;
    let mut parts = location.rsplitn(3, ':');
    let _col = parts.next()?;
    let line: u32 = parts.next()?.parse().ok()?;
    Some((function.trim().to_string(), line))
}

struct MissedItem {
    function: String,
    line: u32,
    arm: Option<minilang::BranchArm>,
}

/// Parse `MISSED LINE <fn>:<line>` / `MISSED BRANCH <fn>:<line> arm=<arm>`.
fn parse_missed_items(report: &str) -> Vec<MissedItem> {
    let mut out = Vec::new();
    for line in report.lines() {
        if let Some(rest) = line.strip_prefix("MISSED LINE ") {
            if let Some((function, l)) = rest.rsplit_once(':') {
                if let Ok(l) = l.trim().parse() {
                    out.push(MissedItem {
                        function: function.to_string(),
                        line: l,
                        arm: None,
                    });
                }
            }
        } else if let Some(rest) = line.strip_prefix("MISSED BRANCH ") {
            let Some((location, arm)) = rest.split_once(" arm=") else {
                continue;
            };
            let Some((function, l)) = location.rsplit_once(':') else {
                continue;
            };
            let Ok(l) = l.trim().parse() else { continue };
            let arm = match arm.trim() {
                "then" => minilang::BranchArm::Then,
                "else" => minilang::BranchArm::Else,
                _ => continue,
            };
            out.push(MissedItem {
                function: function.to_string(),
                line: l,
                arm: Some(arm),
            });
        }
    }
    out
}

fn covers_any(
    program: &Program,
    coverage: &minilang::CoverageReport,
    wanted: &[&MissedItem],
) -> bool {
    for item in wanted {
        match item.arm {
            None => {
                if coverage
                    .executed_lines
                    .contains(&(item.function.clone(), item.line))
                {
                    return true;
                }
            }
            Some(arm) => {
                let hit = coverage.branch_outcomes.iter().any(|(id, a)| {
                    *a == arm
                        && program
                            .branch_index
                            .get(id)
                            .map(|info| info.function == item.function && info.line == item.line)
                            .unwrap_or(false)
                });
                if hit {
                    return true;
                }
            }
        }
    }
    false
}

// ---- test synthesis ------------------------------------------------------

fn sample_args(rng: &mut ChaCha8Rng, count: usize, edge_bias: bool) -> Vec<i64> {
    (0..count)
        .map(|_| {
            if edge_bias && rng.random::<f64>() < 0.5 {
                *[-1i64, 0, 1, 2].get(rng.random_range(0..4)).unwrap()
            } else {
                rng.random_range(-10..=10)
            }
        })
        .collect()
}

fn sample_passing_call(
    rng: &mut ChaCha8Rng,
    program: &Program,
    function: &FunctionDecl,
    edge_bias: bool,
) -> Option<(Vec<i64>, Value)> {
    sample_passing_call_with_coverage_inner(rng, program, function, edge_bias)
        .map(|(args, value, _)| (args, value))
}

fn sample_passing_call_with_coverage(
    rng: &mut ChaCha8Rng,
    program: &Program,
    function: &FunctionDecl,
) -> Option<(Vec<i64>, Value, minilang::CoverageReport)> {
    // Half the draws sit near comparison boundaries, which is where the
    // interesting missed arms usually live.
    sample_passing_call_with_coverage_inner(rng, program, function, true)
}

fn sample_passing_call_with_coverage_inner(
    rng: &mut ChaCha8Rng,
    program: &Program,
    function: &FunctionDecl,
    edge_bias: bool,
) -> Option<(Vec<i64>, Value, minilang::CoverageReport)> {
    let run = TestRun::new(program, &[], "mock.probe").with_budget(PROBE_BUDGET);
    for _ in 0..12 {
        let args = sample_args(rng, function.params.len(), edge_bias);
        let values: Vec<Value> = args.iter().map(|&v| Value::Int(v)).collect();
        let outcome = run.call(&function.name, &values);
        match outcome.result {
            Ok(Value::Unit) => continue,
            Ok(value) => {
                if value_expr(&value).is_none() {
                    continue;
                }
                return Some((args, value, outcome.coverage));
            }
            Err(_) => continue,
        }
    }
    None
}

fn int_expr(n: i64) -> Expr {
    if n >= 0 {
        Expr {
            span: Span::default(),
            kind: ExprKind::Int(n),
        }
    } else {
        Expr {
            span: Span::default(),
            kind: ExprKind::Binary {
                op: minilang::BinaryOp::Sub,
                lhs: Box::new(Expr {
                    span: Span::default(),
                    kind: ExprKind::Int(0),
                }),
                rhs: Box::new(Expr {
                    span: Span::default(),
                    kind: ExprKind::Int(i64::try_from((n as i128).unsigned_abs()).unwrap()),
                }),
            },
        }
    }
}

/// Literal (or literal-like) expression for a runtime value. `None` when
/// the value cannot be written as a MiniLang expression.
fn value_expr(value: &Value) -> Option<Expr> {
    match value {
        Value::Int(n) => {
            if *n == i64::MIN {
                None
            } else {
                Some(int_expr(*n))
            }
        }
        Value::Bool(b) => Some(Expr {
            span: Span::default(),
            kind: ExprKind::Bool(*b),
        }),
        Value::Str(s) => Some(Expr {
            span: Span::default(),
            kind: ExprKind::Str(s.clone()),
        }),
        Value::Unit => None,
    }
}

fn corrupt(value: &Value) -> Value {
    match value {
        Value::Int(n) => Value::Int(n.wrapping_add(1)),
        Value::Bool(b) => Value::Bool(!b),
        Value::Str(s) => Value::Str(format!("{s}x")),
        Value::Unit => Value::Unit,
    }
}

fn assert_stmt(callee: &str, args: &[i64], expected: &Value, wrong: bool) -> Stmt {
    let expected = if wrong { corrupt(expected) } else { expected.clone() };
    let call = Expr {
        span: Span::default(),
        kind: ExprKind::Call {
            callee: callee.to_string(),
            args: args.iter().map(|&a| int_expr(a)).collect(),
        },
    };
    let expected_expr = value_expr(&expected).expect("expected value must be expressible");
    Stmt {
        id: 0,
        span: Span::default(),
        kind: StmtKind::Expr {
            expr: Expr {
                span: Span::default(),
                kind: ExprKind::Call {
                    callee: "assert_eq".to_string(),
                    args: vec![call, expected_expr],
                },
            },
        },
    }
}

fn make_forwarding_helper(name: &str, target: &FunctionDecl) -> FunctionDecl {
    let params: Vec<String> = (0..target.params.len()).map(|i| format!("p{i}")).collect();
    let call = Expr {
        span: Span::default(),
        kind: ExprKind::Call {
            callee: target.name.clone(),
            args: params
                .iter()
                .map(|p| Expr {
                    span: Span::default(),
                    kind: ExprKind::Ident(p.clone()),
                })
                .collect(),
        },
    };
    FunctionDecl {
        name: name.to_string(),
        is_focal: minilang::ast::is_focal_name(name),
        params,
        body: Block {
            stmts: vec![Stmt {
                id: 0,
                span: Span::default(),
                kind: StmtKind::Return { value: call },
            }],
        },
        span: Span::default(),
    }
}

fn remove_stmt_at_line(body: &Block, line: u32) -> Block {
    // Drop the top-level statement whose span starts at (or last before)
    // the reported line.
    let mut best: Option<usize> = None;
    for (i, stmt) in body.stmts.iter().enumerate() {
        if stmt.span.line <= line {
            best = Some(i);
        }
    }
    let mut stmts = body.stmts.clone();
    if let Some(i) = best {
        stmts.remove(i);
    } else if !stmts.is_empty() {
        stmts.remove(0);
    }
    Block { stmts }
}

fn calls_name(block: &Block, name: &str) -> bool {
    let mut found = false;
    minilang::ast::walk_exprs(block, &mut |e| {
        if let ExprKind::Call { callee, .. } = &e.kind {
            if callee == name {
                found = true;
            }
        }
    });
    found
}
