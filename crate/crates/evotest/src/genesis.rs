//! Initial population construction: source preprocessing, temperature-
//! diverse generation, the bounded generation-repair loop with
//! programmatic-fix-first policy, and coverage-guided enhancement.

use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use minilang::ast::{walk_exprs, walk_exprs_mut};
use minilang::hash::mix64;
use minilang::{
    merge_coverage, parse_program, print_program, Block, CoverageReport, ExprKind, ParseError,
    Program, RunOutcome, RunStatus, Stmt, StmtKind,
};

use crate::llm::templates::{self, render, TemplateId};
use crate::llm::{strip_code_fences, AgentConfig, Backend, CompletionRequest};
use crate::suite::{
    merge_suites, prune_failing, run_all_methods, split_methods, Provenance, TestSuite,
};

/// The repair loop is repeated at most this many times per suite.
pub const MAX_REPAIR_ROUNDS: u32 = 4;

const PHASE_GENERATE: u64 = 1;
const PHASE_REPAIR: u64 = 2;
const PHASE_ENHANCE: u64 = 3;
const PHASE_ENHANCE_REPAIR: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixKind {
    StatementRemoved,
    IdentifierStubbed,
    LlmRepair,
}

impl FixKind {
    pub fn label(self) -> &'static str {
        match self {
            FixKind::StatementRemoved => "statement_removed",
            FixKind::IdentifierStubbed => "identifier_stubbed",
            FixKind::LlmRepair => "llm_repair",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppliedFix {
    pub kind: FixKind,
    pub location: String,
}

/// State of one repair loop: LLM rounds consumed, the last failing trace,
/// and every fix applied along the way.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RepairState {
    pub round: u32,
    pub last_trace: String,
    pub fixes_applied: Vec<AppliedFix>,
}

#[derive(Debug, Clone)]
pub struct PopulationSpec {
    pub strategies: Vec<AgentConfig>,
    pub samples_per_strategy: usize,
}

impl PopulationSpec {
    /// The standard five-agent matrix with `samples` drafts per agent.
    pub fn standard(samples: usize) -> Self {
        PopulationSpec {
            strategies: templates::standard_agents(),
            samples_per_strategy: samples,
        }
    }

    /// Temperature-diversity ablation: every draft uses A1's prompt and
    /// temperature; diversity comes from sampling alone.
    pub fn single_strategy(total: usize) -> Self {
        PopulationSpec {
            strategies: vec![templates::standard_agents().remove(0)],
            samples_per_strategy: total,
        }
    }

    pub fn population_size(&self) -> usize {
        self.strategies.len() * self.samples_per_strategy
    }
}

#[derive(Debug, Clone)]
pub struct GenesisOptions {
    pub step_budget: u64,
    pub max_retries: u32,
    pub in_flight_cap: usize,
}

impl Default for GenesisOptions {
    fn default() -> Self {
        GenesisOptions {
            step_budget: minilang::DEFAULT_STEP_BUDGET,
            max_retries: 3,
            in_flight_cap: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteGenesisRecord {
    pub provenance: Provenance,
    pub repair: RepairState,
    pub enhance_repair: Option<RepairState>,
    pub generation_failed: bool,
}

#[derive(Debug, Clone)]
pub struct GenesisOutcome {
    pub suites: Vec<TestSuite>,
    pub records: Vec<SuiteGenesisRecord>,
}

/// Strip comments and statements made unreachable by an earlier `return`
/// in the same block. The output re-parses to a program with identical
/// observable behavior; comments vanish because the printer never emits
/// them.
pub fn preprocess_source(program_source: &str, path: &str) -> Result<String, ParseError> {
    let mut program = parse_program(program_source, path)?;
    for function in &mut program.functions {
        strip_unreachable(&mut function.body);
    }
    Ok(print_program(&program))
}

fn strip_unreachable(block: &mut Block) {
    if let Some(cut) = block
        .stmts
        .iter()
        .position(|s| matches!(s.kind, StmtKind::Return { .. }))
    {
        block.stmts.truncate(cut + 1);
    }
    for stmt in &mut block.stmts {
        match &mut stmt.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                strip_unreachable(then_block);
                if let Some(e) = else_block {
                    strip_unreachable(e);
                }
            }
            StmtKind::While { body, .. } => strip_unreachable(body),
            _ => {}
        }
    }
}

/// One `fn name(params)` line per focal function, in declaration order.
pub fn focal_signatures(program: &Program) -> String {
    let mut out = String::new();
    for f in program.focal_functions() {
        out.push_str(&format!("fn {}({})\n", f.name, f.params.join(", ")));
    }
    out
}

/// The textual coverage report fed to the enhancement prompt. One line per
/// item, `MISSED LINE <fn>:<line>` or `MISSED BRANCH <fn>:<line> arm=<arm>`,
/// sorted by function then line (lines before branch arms at the same
/// location). The format is frozen: it is prompt-visible.
pub fn coverage_report_text(program: &Program, coverage: &CoverageReport) -> String {
    let mut items: Vec<(String, u32, u8, String)> = Vec::new();
    for (function, line) in coverage.missed_focal_lines(program) {
        let text = format!("MISSED LINE {function}:{line}");
        items.push((function, line, 0, text));
    }
    for (function, line, _, arm) in coverage.missed_focal_branch_arms(program) {
        let text = format!("MISSED BRANCH {function}:{line} arm={}", arm.label());
        items.push((function, line, 1, text));
    }
    items.sort();
    let mut out = String::new();
    for (_, _, _, text) in items {
        out.push_str(&text);
        out.push('\n');
    }
    out
}

fn derived_tag(slot: usize, sample: usize, phase: u64, round: u64) -> u64 {
    mix64(
        mix64(slot as u64 + 1, sample as u64 + 1),
        mix64(phase, round + 1),
    )
}

fn all_passing(outcomes: &BTreeMap<String, RunOutcome>) -> bool {
    outcomes.values().all(|o| o.passed())
}

fn first_failing_trace(suite: &TestSuite, outcomes: &BTreeMap<String, RunOutcome>) -> String {
    for method in &suite.methods {
        if let Some(outcome) = outcomes.get(&method.name) {
            if !outcome.passed() {
                return outcome.trace.clone();
            }
        }
    }
    String::new()
}

fn parse_error_trace(error: &ParseError, label: &str) -> String {
    format!(
        "ERROR parse_error at {label}:{}:{} in top_level\n    {error}\n",
        error.line, error.col
    )
}

/// Levenshtein distance, used for near-miss call rewriting.
fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut row = vec![i + 1];
        for (j, &cb) in b.iter().enumerate() {
            let cost = if ca == cb { 0 } else { 1 };
            row.push((prev[j] + cost).min(prev[j + 1] + 1).min(row[j] + 1));
        }
        prev = row;
    }
    prev[b.len()]
}

enum Draft {
    Parsed(TestSuite),
    Raw { text: String, error: ParseError },
}

struct RepairContext<'a> {
    program: &'a Program,
    backend: &'a dyn Backend,
    agent: &'a AgentConfig,
    opts: &'a GenesisOptions,
    slot: usize,
    sample: usize,
    phase: u64,
}

/// Fix the first failing method programmatically, if a rule applies.
/// Rule order: near-miss call rewriting for undefined functions (it
/// corrects instead of deleting), then deletion of the failing statement
/// when the error location is inside the test method itself.
fn apply_one_fix(
    suite: &TestSuite,
    program: &Program,
    outcomes: &BTreeMap<String, RunOutcome>,
    fixes: &mut Vec<AppliedFix>,
) -> Option<TestSuite> {
    for method in &suite.methods {
        let outcome = outcomes.get(&method.name)?;
        if outcome.passed() {
            continue;
        }
        let Some(innermost) = outcome.frames.first() else {
            continue;
        };

        // Rule: undefined function with a unique near-miss among program
        // functions is rewritten in place.
        if outcome.status == RunStatus::RuntimeError {
            if let Some(missing) = outcome.message.strip_prefix("undefined function: ") {
                let missing = missing.trim().to_string();
                let candidates: Vec<&str> = program
                    .functions
                    .iter()
                    .map(|f| f.name.as_str())
                    .filter(|name| edit_distance(name, &missing) == 1)
                    .collect();
                if candidates.len() == 1 {
                    let replacement = candidates[0].to_string();
                    if let Some(fixed) =
                        rewrite_calls(suite, &innermost.function, &missing, &replacement)
                    {
                        fixes.push(AppliedFix {
                            kind: FixKind::IdentifierStubbed,
                            location: format!("{}:{}", innermost.file, innermost.line),
                        });
                        return Some(fixed);
                    }
                }
            }
        }

        // Rule: the error location is a statement of the test method
        // itself; delete it along with every later statement that reads a
        // variable it defined.
        if innermost.function == method.name && innermost.file == suite.source_label {
            let fixed = delete_failing_statement(suite, &method.name, innermost.line);
            fixes.push(AppliedFix {
                kind: FixKind::StatementRemoved,
                location: format!("{}:{}", innermost.file, innermost.line),
            });
            return Some(fixed);
        }
    }
    None
}

/// Rewrite every call to `from` inside the named test method or helper.
fn rewrite_calls(suite: &TestSuite, function: &str, from: &str, to: &str) -> Option<TestSuite> {
    let mut methods = suite.methods.clone();
    let mut helpers = suite.helpers.clone();
    let mut rewritten = false;
    let rewrite = |block: &mut Block, rewritten: &mut bool| {
        walk_exprs_mut(block, &mut |e| {
            if let ExprKind::Call { callee, .. } = &mut e.kind {
                if callee == from {
                    *callee = to.to_string();
                    *rewritten = true;
                }
            }
        });
    };
    for m in &mut methods {
        if m.name == function {
            rewrite(&mut m.body, &mut rewritten);
        }
    }
    for h in &mut helpers {
        if h.name == function {
            rewrite(&mut h.body, &mut rewritten);
        }
    }
    if !rewritten {
        return None;
    }
    Some(TestSuite::from_parts(
        suite.suite_id,
        suite.provenance.clone(),
        suite.source_label.clone(),
        helpers,
        methods,
    ))
}

fn stmt_defines(stmt: &Stmt) -> Option<String> {
    match &stmt.kind {
        StmtKind::Let { name, .. } => Some(name.clone()),
        _ => None,
    }
}

fn stmt_touches(stmt: &Stmt, vars: &HashSet<String>) -> bool {
    if let StmtKind::Assign { name, .. } = &stmt.kind {
        if vars.contains(name) {
            return true;
        }
    }
    let probe = Block {
        stmts: vec![stmt.clone()],
    };
    let mut touched = false;
    walk_exprs(&probe, &mut |e| {
        if let ExprKind::Ident(name) = &e.kind {
            if vars.contains(name) {
                touched = true;
            }
        }
    });
    touched
}

/// Delete the top-level statement at `line` in `method`, plus the
/// transitive closure of later statements that use variables the deleted
/// statements defined. A method whose statements all disappear is removed
/// outright.
fn delete_failing_statement(suite: &TestSuite, method: &str, line: u32) -> TestSuite {
    let mut methods = Vec::new();
    for m in &suite.methods {
        if m.name != method {
            methods.push(m.clone());
            continue;
        }
        let mut target: Option<usize> = None;
        for (i, stmt) in m.body.stmts.iter().enumerate() {
            if stmt.span.line <= line {
                target = Some(i);
            }
        }
        let Some(target) = target else {
            methods.push(m.clone());
            continue;
        };
        let mut dead_vars: HashSet<String> = HashSet::new();
        if let Some(name) = stmt_defines(&m.body.stmts[target]) {
            dead_vars.insert(name);
        }
        let mut kept = Vec::new();
        for (i, stmt) in m.body.stmts.iter().enumerate() {
            if i == target {
                continue;
            }
            if i > target && !dead_vars.is_empty() && stmt_touches(stmt, &dead_vars) {
                if let Some(name) = stmt_defines(stmt) {
                    dead_vars.insert(name);
                }
                continue;
            }
            kept.push(stmt.clone());
        }
        if kept.is_empty() {
            continue; // drop the emptied method entirely
        }
        let mut replacement = m.clone();
        replacement.body = Block { stmts: kept };
        methods.push(crate::suite::TestMethod::new(replacement.name, replacement.body));
    }
    let bodies: Vec<&Block> = methods.iter().map(|m| &m.body).collect();
    let helpers = crate::suite::reachable_helpers(&suite.helpers, &bodies);
    TestSuite::from_parts(
        suite.suite_id,
        suite.provenance.clone(),
        suite.source_label.clone(),
        helpers,
        methods,
    )
}

fn complete_template(
    ctx: &RepairContext,
    template: TemplateId,
    bindings: &BTreeMap<&str, String>,
    round: u64,
) -> Result<String, crate::llm::LlmError> {
    let user_content = render(template, bindings)?;
    let system_prompt = match template {
        TemplateId::Repair => templates::agent_system_prompt(ctx.agent.id).to_string(),
        other => templates::system_prompt(other).to_string(),
    };
    let request = CompletionRequest {
        template,
        system_prompt,
        user_content,
        temperature: ctx.agent.temperature,
        max_retries: ctx.opts.max_retries,
        sampling_seed: derived_tag(ctx.slot, ctx.sample, ctx.phase, round),
    };
    ctx.backend.complete(&request).map(|r| r.text)
}

/// Drive a draft suite to all-green: programmatic fixes first, then LLM
/// repair rounds (at most [`MAX_REPAIR_ROUNDS`]), then pruning of whatever
/// still fails. The returned suite passes all of its surviving methods.
fn repair_to_green(mut draft: Draft, ctx: &RepairContext) -> (TestSuite, RepairState) {
    let mut state = RepairState::default();
    loop {
        if let Draft::Parsed(suite) = draft {
            let mut suite = suite;
            let mut outcomes = run_all_methods(ctx.program, &suite, ctx.opts.step_budget);
            let mut guard = 0;
            while !all_passing(&outcomes) && guard < 64 {
                match apply_one_fix(&suite, ctx.program, &outcomes, &mut state.fixes_applied) {
                    Some(fixed) => {
                        suite = fixed;
                        outcomes = run_all_methods(ctx.program, &suite, ctx.opts.step_budget);
                    }
                    None => break,
                }
                guard += 1;
            }
            if all_passing(&outcomes) {
                return (prune_failing(&suite, &outcomes), state);
            }
            state.last_trace = first_failing_trace(&suite, &outcomes);
            draft = Draft::Parsed(suite);
        }

        if state.round >= MAX_REPAIR_ROUNDS {
            break;
        }

        let (suite_text, trace_text) = match &draft {
            Draft::Parsed(suite) => (suite.to_source(), state.last_trace.clone()),
            Draft::Raw { text, error } => {
                (text.clone(), parse_error_trace(error, "draft.test.mini"))
            }
        };
        state.last_trace = trace_text.clone();
        state.round += 1;
        state.fixes_applied.push(AppliedFix {
            kind: FixKind::LlmRepair,
            location: format!("round {}", state.round),
        });
        let mut bindings = BTreeMap::new();
        bindings.insert(templates::STACKTRACE, trace_text);
        bindings.insert(templates::TEST_METHOD, suite_text);
        match complete_template(ctx, TemplateId::Repair, &bindings, u64::from(state.round)) {
            Ok(reply) => {
                let cleaned = strip_code_fences(&reply);
                match split_methods(cleaned, label_of(&draft)) {
                    Ok(new_suite) => {
                        let (id, provenance, label) = identity_of(&draft);
                        draft = Draft::Parsed(
                            new_suite
                                .with_id(id)
                                .with_provenance(provenance)
                                .with_label(label),
                        );
                    }
                    Err(_) => {
                        // Unparseable reply burns the round; keep the draft.
                    }
                }
            }
            Err(_) => {
                // Backend failure burns the round as well.
            }
        }
    }

    match draft {
        Draft::Parsed(suite) => {
            let outcomes = run_all_methods(ctx.program, &suite, ctx.opts.step_budget);
            state.last_trace = first_failing_trace(&suite, &outcomes);
            (prune_failing(&suite, &outcomes), state)
        }
        Draft::Raw { .. } => (
            TestSuite::empty(0, Provenance::Loaded, "draft.test.mini"),
            state,
        ),
    }
}

fn label_of(draft: &Draft) -> &str {
    match draft {
        Draft::Parsed(suite) => &suite.source_label,
        Draft::Raw { .. } => "draft.test.mini",
    }
}

fn identity_of(draft: &Draft) -> (u64, Provenance, String) {
    match draft {
        Draft::Parsed(suite) => (
            suite.suite_id,
            suite.provenance.clone(),
            suite.source_label.clone(),
        ),
        Draft::Raw { .. } => (0, Provenance::Loaded, "draft.test.mini".to_string()),
    }
}

/// Public entry: run the generation-repair loop on an already-parsed suite.
pub fn repair_loop(
    suite: TestSuite,
    program: &Program,
    backend: &dyn Backend,
    agent: &AgentConfig,
    opts: &GenesisOptions,
    slot: usize,
    sample: usize,
) -> (TestSuite, RepairState) {
    let ctx = RepairContext {
        program,
        backend,
        agent,
        opts,
        slot,
        sample,
        phase: PHASE_REPAIR,
    };
    repair_to_green(Draft::Parsed(suite), &ctx)
}

/// Ask the coverage-analysis agent for complementary tests aimed at the
/// focal lines and branch arms the suite misses. Returns only the new
/// complementary suite; callers merge. Skipped entirely (empty result)
/// when focal coverage is already complete.
pub fn enhance_coverage(
    suite: &TestSuite,
    program: &Program,
    agent: &AgentConfig,
    backend: &dyn Backend,
    opts: &GenesisOptions,
    slot: usize,
    sample: usize,
) -> (TestSuite, Option<RepairState>) {
    let outcomes = run_all_methods(program, suite, opts.step_budget);
    let mut reports = vec![CoverageReport::for_program(program)];
    for outcome in outcomes.values() {
        if outcome.passed() {
            reports.push(outcome.coverage.clone());
        }
    }
    let merged = merge_coverage(&reports).expect("reports share one program");
    if merged.is_focal_complete(program) {
        return (
            TestSuite::empty(0, Provenance::Loaded, suite.source_label.clone()),
            None,
        );
    }

    let mut bindings = BTreeMap::new();
    bindings.insert(templates::FOCAL_METHODS, focal_signatures(program));
    bindings.insert(templates::SOURCE_CODE, print_program(program));
    bindings.insert(
        templates::COVERAGE_REPORT,
        coverage_report_text(program, &merged),
    );
    let ctx = RepairContext {
        program,
        backend,
        agent,
        opts,
        slot,
        sample,
        phase: PHASE_ENHANCE,
    };
    let reply = match complete_template(&ctx, TemplateId::CoverageEnhance, &bindings, 0) {
        Ok(reply) => reply,
        Err(_) => {
            return (
                TestSuite::empty(0, Provenance::Loaded, suite.source_label.clone()),
                None,
            );
        }
    };
    let cleaned = strip_code_fences(&reply);
    let draft = match split_methods(cleaned, &suite.source_label) {
        Ok(parsed) => Draft::Parsed(parsed.with_label(suite.source_label.clone())),
        Err(error) => Draft::Raw {
            text: cleaned.to_string(),
            error,
        },
    };
    let repair_ctx = RepairContext {
        phase: PHASE_ENHANCE_REPAIR,
        ..ctx
    };
    let (complementary, state) = repair_to_green(draft, &repair_ctx);
    (complementary, Some(state))
}

/// Draft, repair, enhance, and merge one suite per (strategy, sample)
/// pair. Pipelines are independent; up to `in_flight_cap` run at once,
/// and results are assembled in (strategy, sample) order regardless of
/// completion order.
pub fn generate_initial(
    spec: &PopulationSpec,
    program: &Program,
    backend: &dyn Backend,
    opts: &GenesisOptions,
) -> GenesisOutcome {
    let samples = spec.samples_per_strategy;
    let total = spec.population_size();
    let focal = focal_signatures(program);
    let source = print_program(program);

    let results: Mutex<Vec<Option<(TestSuite, SuiteGenesisRecord)>>> =
        Mutex::new((0..total).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = opts.in_flight_cap.clamp(1, total.max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                if index >= total {
                    break;
                }
                let slot = index / samples;
                let sample = index % samples;
                let agent = &spec.strategies[slot];
                let out = run_generation_pipeline(
                    program, backend, opts, agent, slot, sample, index as u64, &focal, &source,
                );
                results.lock().unwrap()[index] = Some(out);
            });
        }
    });

    let mut suites = Vec::with_capacity(total);
    let mut records = Vec::with_capacity(total);
    for entry in results.into_inner().unwrap() {
        let (suite, record) = entry.expect("every pipeline slot completes");
        suites.push(suite);
        records.push(record);
    }
    GenesisOutcome { suites, records }
}

#[allow(clippy::too_many_arguments)]
fn run_generation_pipeline(
    program: &Program,
    backend: &dyn Backend,
    opts: &GenesisOptions,
    agent: &AgentConfig,
    slot: usize,
    sample: usize,
    suite_id: u64,
    focal: &str,
    source: &str,
) -> (TestSuite, SuiteGenesisRecord) {
    let provenance = Provenance::Agent {
        agent: agent.id,
        sample,
    };
    let label = format!("{}_s{}.test.mini", agent.id.name(), sample);
    let empty = |failed: bool, repair: RepairState| {
        (
            TestSuite::empty(suite_id, provenance.clone(), label.clone()),
            SuiteGenesisRecord {
                provenance: provenance.clone(),
                repair,
                enhance_repair: None,
                generation_failed: failed,
            },
        )
    };

    let mut bindings = BTreeMap::new();
    bindings.insert(templates::FOCAL_METHODS, focal.to_string());
    bindings.insert(templates::SOURCE_CODE, source.to_string());
    let ctx = RepairContext {
        program,
        backend,
        agent,
        opts,
        slot,
        sample,
        phase: PHASE_GENERATE,
    };
    let reply = match complete_template(&ctx, agent.system_template, &bindings, 0) {
        Ok(reply) => reply,
        Err(_) => return empty(true, RepairState::default()),
    };
    let cleaned = strip_code_fences(&reply);
    let draft = match split_methods(cleaned, &label) {
        Ok(parsed) => Draft::Parsed(
            parsed
                .with_id(suite_id)
                .with_provenance(provenance.clone())
                .with_label(label.clone()),
        ),
        Err(error) => Draft::Raw {
            text: cleaned.to_string(),
            error,
        },
    };

    let repair_ctx = RepairContext {
        phase: PHASE_REPAIR,
        ..ctx
    };
    let (repaired, repair_state) = repair_to_green(draft, &repair_ctx);
    let repaired = repaired
        .with_id(suite_id)
        .with_provenance(provenance.clone())
        .with_label(label.clone());

    let (complementary, enhance_state) =
        enhance_coverage(&repaired, program, agent, backend, opts, slot, sample);
    let merged = merge_suites(&repaired, &complementary);

    (
        merged,
        SuiteGenesisRecord {
            provenance,
            repair: repair_state,
            enhance_repair: enhance_state,
            generation_failed: false,
        },
    )
}
