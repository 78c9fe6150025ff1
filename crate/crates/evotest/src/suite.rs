//! Test suites as GA chromosomes: ordered test methods plus the helper
//! functions they call.
//!
//! Suites are immutable; every operation builds a new suite. Construction
//! goes through [`TestSuite::from_parts`], which re-parses the canonical
//! printed source so that statement spans always agree with the text a
//! repair prompt or error trace will show.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use minilang::ast::{walk_exprs, walk_exprs_mut};
use minilang::{
    parse_test_file, print_function, print_stmt, print_test_method, Block, ExprKind, FunctionDecl,
    ParseError, Program, RunOutcome, TestRun,
};

use crate::llm::AgentId;

pub type SuiteId = u64;

/// Where a suite came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// Drafted by a generation agent: agent id plus per-strategy sample index.
    Agent { agent: AgentId, sample: usize },
    Crossover,
    Mutated,
    /// Parsed directly from a source file or string.
    Loaded,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Agent { agent, sample } => write!(f, "{}/s{}", agent.name(), sample),
            Provenance::Crossover => write!(f, "crossover"),
            Provenance::Mutated => write!(f, "mutated"),
            Provenance::Loaded => write!(f, "loaded"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodStatus {
    Unknown,
    Passing,
    Failing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestMethod {
    pub name: String,
    pub body: Block,
    pub status: MethodStatus,
    pub assertion_count: usize,
}

impl TestMethod {
    pub fn new(name: impl Into<String>, body: Block) -> Self {
        let assertion_count = count_assertions(&body);
        TestMethod {
            name: name.into(),
            body,
            status: MethodStatus::Unknown,
            assertion_count,
        }
    }

    fn with_status(mut self, status: MethodStatus) -> Self {
        self.status = status;
        self
    }

    pub fn to_source(&self) -> String {
        print_test_method(&self.name, &self.body)
    }

    /// Printed body alone; the duplicate-detection key for merges.
    pub fn body_fingerprint(&self) -> String {
        let mut out = String::new();
        for stmt in &self.body.stmts {
            out.push_str(&print_stmt(stmt, 1));
        }
        out
    }
}

/// Number of `assert_*` calls in a block, including nested ones.
pub fn count_assertions(block: &Block) -> usize {
    let mut n = 0;
    walk_exprs(block, &mut |e| {
        if let ExprKind::Call { callee, .. } = &e.kind {
            if matches!(callee.as_str(), "assert_eq" | "assert_true" | "assert_false") {
                n += 1;
            }
        }
    });
    n
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestSuite {
    pub suite_id: SuiteId,
    pub methods: Vec<TestMethod>,
    pub helpers: Vec<FunctionDecl>,
    pub provenance: Provenance,
    /// File label used in traces and repair prompts.
    pub source_label: String,
}

/// Lexicographic suite size: method count first, then total statements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SuiteSize {
    pub methods: usize,
    pub statements: usize,
}

impl SuiteSize {
    pub fn combined(self, other: SuiteSize) -> SuiteSize {
        SuiteSize {
            methods: self.methods + other.methods,
            statements: self.statements + other.statements,
        }
    }
}

impl TestSuite {
    /// Build a suite from parts, normalizing spans by printing and
    /// re-parsing the canonical source. Method statuses survive the
    /// round-trip; assertion counts are recomputed.
    pub fn from_parts(
        suite_id: SuiteId,
        provenance: Provenance,
        source_label: impl Into<String>,
        helpers: Vec<FunctionDecl>,
        methods: Vec<TestMethod>,
    ) -> TestSuite {
        let source = render_suite_source(&helpers, &methods);
        let decls = parse_test_file(&source).expect("canonical suite source must re-parse");
        let statuses: HashMap<String, MethodStatus> =
            methods.iter().map(|m| (m.name.clone(), m.status)).collect();
        let mut helpers = Vec::new();
        let mut methods = Vec::new();
        for d in decls {
            if d.is_test {
                let status = statuses
                    .get(&d.decl.name)
                    .copied()
                    .unwrap_or(MethodStatus::Unknown);
                methods.push(TestMethod::new(d.decl.name, d.decl.body).with_status(status));
            } else {
                helpers.push(d.decl);
            }
        }
        TestSuite {
            suite_id,
            methods,
            helpers,
            provenance,
            source_label: source_label.into(),
        }
    }

    pub fn empty(suite_id: SuiteId, provenance: Provenance, source_label: impl Into<String>) -> TestSuite {
        TestSuite {
            suite_id,
            methods: Vec::new(),
            helpers: Vec::new(),
            provenance,
            source_label: source_label.into(),
        }
    }

    pub fn with_id(mut self, suite_id: SuiteId) -> TestSuite {
        self.suite_id = suite_id;
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> TestSuite {
        self.provenance = provenance;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> TestSuite {
        self.source_label = label.into();
        self
    }

    pub fn method(&self, name: &str) -> Option<&TestMethod> {
        self.methods.iter().find(|m| m.name == name)
    }

    /// Canonical `.test.mini` source: helpers first, then test methods.
    pub fn to_source(&self) -> String {
        render_suite_source(&self.helpers, &self.methods)
    }

    /// Hash of the printed source. Changes iff the printed source changes.
    pub fn content_hash(&self) -> u64 {
        minilang::hash::fnv1a_64(self.to_source().as_bytes())
    }

    pub fn size(&self) -> SuiteSize {
        size_of(self)
    }

    pub fn passing_method_names(&self) -> Vec<String> {
        self.methods
            .iter()
            .filter(|m| m.status == MethodStatus::Passing)
            .map(|m| m.name.clone())
            .collect()
    }
}

fn render_suite_source(helpers: &[FunctionDecl], methods: &[TestMethod]) -> String {
    let mut out = String::new();
    let mut first = true;
    for h in helpers {
        if !first {
            out.push('\n');
        }
        out.push_str(&print_function(h));
        first = false;
    }
    for m in methods {
        if !first {
            out.push('\n');
        }
        out.push_str(&m.to_source());
        first = false;
    }
    out
}

/// Parse a test file into a suite: `test` declarations become methods,
/// plain functions become helpers, statuses start unknown.
pub fn split_methods(suite_source: &str, source_label: &str) -> Result<TestSuite, ParseError> {
    let decls = parse_test_file(suite_source)?;
    let mut helpers = Vec::new();
    let mut methods = Vec::new();
    for d in decls {
        if d.is_test {
            methods.push(TestMethod::new(d.decl.name, d.decl.body));
        } else {
            helpers.push(d.decl);
        }
    }
    Ok(TestSuite::from_parts(
        0,
        Provenance::Loaded,
        source_label,
        helpers,
        methods,
    ))
}

fn called_names(block: &Block) -> BTreeSet<String> {
    let mut names = BTreeSet::new();
    walk_exprs(block, &mut |e| {
        if let ExprKind::Call { callee, .. } = &e.kind {
            names.insert(callee.clone());
        }
    });
    names
}

/// Helpers (in original order) transitively reachable from `bodies`.
pub fn reachable_helpers(helpers: &[FunctionDecl], bodies: &[&Block]) -> Vec<FunctionDecl> {
    let by_name: HashMap<&str, &FunctionDecl> =
        helpers.iter().map(|h| (h.name.as_str(), h)).collect();
    let mut needed: BTreeSet<String> = BTreeSet::new();
    let mut queue: Vec<String> = Vec::new();
    for body in bodies {
        for name in called_names(body) {
            if by_name.contains_key(name.as_str()) && needed.insert(name.clone()) {
                queue.push(name);
            }
        }
    }
    while let Some(name) = queue.pop() {
        if let Some(decl) = by_name.get(name.as_str()) {
            for callee in called_names(&decl.body) {
                if by_name.contains_key(callee.as_str()) && needed.insert(callee.clone()) {
                    queue.push(callee);
                }
            }
        }
    }
    helpers
        .iter()
        .filter(|h| needed.contains(&h.name))
        .cloned()
        .collect()
}

fn unique_name(base: &str, taken: &HashSet<String>) -> String {
    let mut k = 1;
    loop {
        let candidate = format!("{base}_m{k}");
        if !taken.contains(&candidate) {
            return candidate;
        }
        k += 1;
    }
}

fn function_fingerprint(f: &FunctionDecl) -> String {
    print_function(f)
}

/// Concatenate two suites. Name collisions on the incoming side get an
/// `_m<k>` suffix (helpers have their call sites rewritten); when
/// `drop_duplicate_bodies` is set, incoming methods whose printed body
/// already exists are dropped.
pub(crate) fn merge_with(a: &TestSuite, b: &TestSuite, drop_duplicate_bodies: bool) -> TestSuite {
    let mut helpers = a.helpers.clone();
    let mut helper_names: HashSet<String> = helpers.iter().map(|h| h.name.clone()).collect();
    let mut b_methods = b.methods.clone();

    // Resolve helper collisions first; renames affect every b-side body.
    let mut renames: HashMap<String, String> = HashMap::new();
    let mut incoming: Vec<FunctionDecl> = Vec::new();
    for h in &b.helpers {
        if let Some(existing) = helpers.iter().find(|e| e.name == h.name) {
            if function_fingerprint(existing) == function_fingerprint(h) {
                continue; // same helper, share a's copy
            }
            let fresh = unique_name(&h.name, &helper_names);
            helper_names.insert(fresh.clone());
            renames.insert(h.name.clone(), fresh.clone());
            let mut renamed = h.clone();
            renamed.name = fresh;
            incoming.push(renamed);
        } else {
            helper_names.insert(h.name.clone());
            incoming.push(h.clone());
        }
    }
    if !renames.is_empty() {
        let rewrite = |block: &mut Block| {
            walk_exprs_mut(block, &mut |e| {
                if let ExprKind::Call { callee, .. } = &mut e.kind {
                    if let Some(new) = renames.get(callee) {
                        *callee = new.clone();
                    }
                }
            });
        };
        for h in &mut incoming {
            rewrite(&mut h.body);
        }
        for m in &mut b_methods {
            rewrite(&mut m.body);
        }
    }
    helpers.extend(incoming);

    let mut methods = a.methods.clone();
    let mut method_names: HashSet<String> = methods.iter().map(|m| m.name.clone()).collect();
    let mut fingerprints: HashSet<String> =
        methods.iter().map(|m| m.body_fingerprint()).collect();
    for m in b_methods {
        let fp = m.body_fingerprint();
        if drop_duplicate_bodies && fingerprints.contains(&fp) {
            continue;
        }
        let mut m = m;
        if method_names.contains(&m.name) {
            m.name = unique_name(&m.name, &method_names);
        }
        method_names.insert(m.name.clone());
        fingerprints.insert(fp);
        methods.push(m);
    }

    TestSuite::from_parts(
        a.suite_id,
        a.provenance.clone(),
        a.source_label.clone(),
        helpers,
        methods,
    )
}

/// Merge two suites into one composite suite, dropping incoming methods
/// whose printed bodies duplicate existing ones.
pub fn merge_suites(a: &TestSuite, b: &TestSuite) -> TestSuite {
    merge_with(a, b, true)
}

/// Drop methods that did not pass, then drop helpers no longer referenced.
/// Surviving methods are marked passing.
pub fn prune_failing(suite: &TestSuite, outcomes: &BTreeMap<String, RunOutcome>) -> TestSuite {
    let survivors: Vec<TestMethod> = suite
        .methods
        .iter()
        .filter(|m| outcomes.get(&m.name).map(|o| o.passed()).unwrap_or(false))
        .map(|m| m.clone().with_status(MethodStatus::Passing))
        .collect();
    let bodies: Vec<&Block> = survivors.iter().map(|m| &m.body).collect();
    let helpers = reachable_helpers(&suite.helpers, &bodies);
    TestSuite::from_parts(
        suite.suite_id,
        suite.provenance.clone(),
        suite.source_label.clone(),
        helpers,
        survivors,
    )
}

/// Method count and total statement count (methods plus helpers, counting
/// nested statements).
pub fn size_of(suite: &TestSuite) -> SuiteSize {
    let mut statements = 0;
    for m in &suite.methods {
        statements += minilang::ast::count_statements(&m.body);
    }
    for h in &suite.helpers {
        statements += minilang::ast::count_statements(&h.body);
    }
    SuiteSize {
        methods: suite.methods.len(),
        statements,
    }
}

/// Run one named test method of `suite` against `program`.
pub fn run_test_method(
    program: &Program,
    suite: &TestSuite,
    method_name: &str,
    step_budget: u64,
) -> RunOutcome {
    let run = TestRun::new(program, &suite.helpers, &suite.source_label).with_budget(step_budget);
    match suite.method(method_name) {
        Some(method) => run.run_method(&method.name, &method.body),
        None => {
            // Violated precondition; surface it as an ordinary failure.
            let mut outcome = run.run_method(method_name, &Block::default());
            outcome.status = minilang::RunStatus::RuntimeError;
            outcome.message = format!("no such test method: {method_name}");
            outcome
        }
    }
}

/// Run every method of `suite` in order; keyed by method name.
pub fn run_all_methods(
    program: &Program,
    suite: &TestSuite,
    step_budget: u64,
) -> BTreeMap<String, RunOutcome> {
    let run = TestRun::new(program, &suite.helpers, &suite.source_label).with_budget(step_budget);
    suite
        .methods
        .iter()
        .map(|m| (m.name.clone(), run.run_method(&m.name, &m.body)))
        .collect()
}

/// Recompute each method's status from fresh runs.
pub fn with_statuses(program: &Program, suite: &TestSuite, step_budget: u64) -> TestSuite {
    let outcomes = run_all_methods(program, suite, step_budget);
    let methods = suite
        .methods
        .iter()
        .map(|m| {
            let status = if outcomes[&m.name].passed() {
                MethodStatus::Passing
            } else {
                MethodStatus::Failing
            };
            m.clone().with_status(status)
        })
        .collect();
    TestSuite {
        methods,
        ..suite.clone()
    }
}
