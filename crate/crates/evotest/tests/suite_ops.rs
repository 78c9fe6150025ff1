use std::collections::BTreeMap;

use evotest::suite::{
    merge_suites, prune_failing, reachable_helpers, run_all_methods, run_test_method, size_of,
    split_methods, MethodStatus, TestSuite,
};
use minilang::parse_program;

fn program() -> minilang::Program {
    parse_program(
        "fn id(x) {\n    return x;\n}\n\nfn add(a, b) {\n    return a + b;\n}\n",
        "p.mini",
    )
    .unwrap()
}

#[test]
fn split_classifies_tests_and_helpers() {
    let suite = split_methods(
        "fn helper(x) {\n    return x + 1;\n}\n\ntest t1() {\n    assert_eq(helper(1), 2);\n}\n\ntest t2() {\n    assert_true(helper(1) == 2);\n    assert_false(helper(0) == 2);\n}\n",
        "s.test.mini",
    )
    .unwrap();
    assert_eq!(suite.methods.len(), 2);
    assert_eq!(suite.helpers.len(), 1);
    assert_eq!(suite.methods[0].assertion_count, 1);
    assert_eq!(suite.methods[1].assertion_count, 2);
    assert!(suite.methods.iter().all(|m| m.status == MethodStatus::Unknown));
}

#[test]
fn split_accepts_empty_file() {
    let suite = split_methods("", "empty.test.mini").unwrap();
    assert!(suite.methods.is_empty());
    assert!(suite.helpers.is_empty());
    assert_eq!(size_of(&suite), evotest::SuiteSize { methods: 0, statements: 0 });
}

#[test]
fn helper_closure_reaches_shared_helper() {
    let suite = split_methods(
        "fn shared(x) {\n    return x * 2;\n}\n\ntest a() {\n    assert_eq(shared(1), 2);\n}\n\ntest b() {\n    assert_eq(shared(2), 4);\n}\n",
        "s.test.mini",
    )
    .unwrap();
    for method in &suite.methods {
        let closure = reachable_helpers(&suite.helpers, &[&method.body]);
        assert_eq!(closure.len(), 1, "both methods reach the shared helper");
        assert_eq!(closure[0].name, "shared");
    }
}

#[test]
fn helper_closure_is_transitive() {
    let suite = split_methods(
        "fn inner(x) {\n    return x + 1;\n}\n\nfn outer(x) {\n    return inner(x) * 2;\n}\n\ntest t() {\n    assert_eq(outer(1), 4);\n}\n",
        "s.test.mini",
    )
    .unwrap();
    let closure = reachable_helpers(&suite.helpers, &[&suite.methods[0].body]);
    let names: Vec<&str> = closure.iter().map(|h| h.name.as_str()).collect();
    assert_eq!(names, vec!["inner", "outer"]);
}

#[test]
fn merge_renames_colliding_method() {
    let a = split_methods("test t1() {\n    assert_true(true);\n}\n", "a.test.mini").unwrap();
    let b = split_methods("test t1() {\n    assert_false(false);\n}\n", "b.test.mini").unwrap();
    let merged = merge_suites(&a, &b);
    let names: Vec<&str> = merged.methods.iter().map(|m| m.name.as_str()).collect();
    assert_eq!(names, vec!["t1", "t1_m1"]);
}

#[test]
fn merge_with_self_is_identity() {
    let s = split_methods(
        "fn h(x) {\n    return x;\n}\n\ntest t1() {\n    assert_eq(h(1), 1);\n}\n\ntest t2() {\n    assert_eq(h(2), 2);\n}\n",
        "s.test.mini",
    )
    .unwrap();
    let merged = merge_suites(&s, &s);
    assert_eq!(merged.to_source(), s.to_source());
}

#[test]
fn merge_drops_duplicate_bodies_across_names() {
    // Three initial tests plus an enhancement pair where one body is a
    // duplicate under a different name: four methods survive.
    let a = split_methods(
        "test t1() {\n    assert_eq(1, 1);\n}\n\ntest t2() {\n    assert_eq(2, 2);\n}\n\ntest t3() {\n    assert_eq(3, 3);\n}\n",
        "a.test.mini",
    )
    .unwrap();
    let b = split_methods(
        "test fresh() {\n    assert_eq(4, 4);\n}\n\ntest dup_of_t2() {\n    assert_eq(2, 2);\n}\n",
        "b.test.mini",
    )
    .unwrap();
    let merged = merge_suites(&a, &b);
    assert_eq!(merged.methods.len(), 4);
    assert!(merged.method("fresh").is_some());
    assert!(merged.method("dup_of_t2").is_none());
}

#[test]
fn merge_renames_colliding_helper_and_rewrites_calls() {
    let a = split_methods(
        "fn h(x) {\n    return x + 1;\n}\n\ntest t1() {\n    assert_eq(h(1), 2);\n}\n",
        "a.test.mini",
    )
    .unwrap();
    let b = split_methods(
        "fn h(x) {\n    return x + 2;\n}\n\ntest t2() {\n    assert_eq(h(1), 3);\n}\n",
        "b.test.mini",
    )
    .unwrap();
    let merged = merge_suites(&a, &b);
    let helper_names: Vec<&str> = merged.helpers.iter().map(|h| h.name.as_str()).collect();
    assert_eq!(helper_names, vec!["h", "h_m1"]);
    // t2 keeps passing because its call now targets the renamed helper.
    let program = program();
    let outcomes = run_all_methods(&program, &merged, 10_000);
    assert!(outcomes.values().all(|o| o.passed()));
}

#[test]
fn merge_shares_identical_helper() {
    let a = split_methods(
        "fn h(x) {\n    return x + 1;\n}\n\ntest t1() {\n    assert_eq(h(1), 2);\n}\n",
        "a.test.mini",
    )
    .unwrap();
    let b = split_methods(
        "fn h(x) {\n    return x + 1;\n}\n\ntest t2() {\n    assert_eq(h(5), 6);\n}\n",
        "b.test.mini",
    )
    .unwrap();
    let merged = merge_suites(&a, &b);
    assert_eq!(merged.helpers.len(), 1);
    assert_eq!(merged.methods.len(), 2);
}

#[test]
fn merge_associative_up_to_renaming() {
    let a = split_methods("test t1() {\n    assert_eq(1, 1);\n}\n", "a.test.mini").unwrap();
    let b = split_methods(
        "test t1() {\n    assert_eq(2, 2);\n}\n\ntest t2() {\n    assert_eq(3, 3);\n}\n",
        "b.test.mini",
    )
    .unwrap();
    let c = split_methods(
        "test t2() {\n    assert_eq(4, 4);\n}\n\ntest t3() {\n    assert_eq(1, 1);\n}\n",
        "c.test.mini",
    )
    .unwrap();
    let left = merge_suites(&merge_suites(&a, &b), &c);
    let right = merge_suites(&a, &merge_suites(&b, &c));
    let mut left_bodies: Vec<String> = left.methods.iter().map(|m| m.body_fingerprint()).collect();
    let mut right_bodies: Vec<String> =
        right.methods.iter().map(|m| m.body_fingerprint()).collect();
    left_bodies.sort();
    right_bodies.sort();
    assert_eq!(left_bodies, right_bodies);
}

fn outcomes_for(suite: &TestSuite) -> BTreeMap<String, minilang::RunOutcome> {
    run_all_methods(&program(), suite, 10_000)
}

#[test]
fn prune_keeps_all_passing() {
    let suite = split_methods(
        "test t1() {\n    assert_eq(id(1), 1);\n}\n\ntest t2() {\n    assert_eq(add(1, 2), 3);\n}\n",
        "s.test.mini",
    )
    .unwrap();
    let pruned = prune_failing(&suite, &outcomes_for(&suite));
    assert_eq!(pruned.methods.len(), 2);
    assert!(pruned.methods.iter().all(|m| m.status == MethodStatus::Passing));
    assert_eq!(pruned.to_source(), suite.to_source());
}

#[test]
fn prune_can_empty_a_suite() {
    let suite = split_methods(
        "test t1() {\n    assert_eq(id(1), 2);\n}\n\ntest t2() {\n    assert_eq(add(1, 2), 4);\n}\n",
        "s.test.mini",
    )
    .unwrap();
    let pruned = prune_failing(&suite, &outcomes_for(&suite));
    assert!(pruned.methods.is_empty());
    assert!(pruned.helpers.is_empty());
}

#[test]
fn prune_drops_helpers_of_failing_methods() {
    let suite = split_methods(
        "fn used_by_pass(x) {\n    return id(x);\n}\n\nfn used_by_fail(x) {\n    return id(x);\n}\n\ntest t1() {\n    assert_eq(used_by_pass(1), 1);\n}\n\ntest t2() {\n    assert_eq(id(2), 2);\n}\n\ntest t3() {\n    assert_eq(id(3), 3);\n}\n\ntest f1() {\n    assert_eq(used_by_fail(4), 5);\n}\n\ntest f2() {\n    assert_eq(id(6), 7);\n}\n",
        "s.test.mini",
    )
    .unwrap();
    let pruned = prune_failing(&suite, &outcomes_for(&suite));
    assert_eq!(pruned.methods.len(), 3);
    let helper_names: Vec<&str> = pruned.helpers.iter().map(|h| h.name.as_str()).collect();
    assert_eq!(helper_names, vec!["used_by_pass"]);
}

#[test]
fn prune_is_idempotent() {
    let suite = split_methods(
        "test t1() {\n    assert_eq(id(1), 1);\n}\n\ntest f1() {\n    assert_eq(id(1), 2);\n}\n",
        "s.test.mini",
    )
    .unwrap();
    let once = prune_failing(&suite, &outcomes_for(&suite));
    let twice = prune_failing(&once, &outcomes_for(&once));
    assert_eq!(once.to_source(), twice.to_source());
}

#[test]
fn size_counts_methods_and_statements() {
    let suite = split_methods(
        "fn helper(x) {\n    let y = x + 1;\n    return y;\n}\n\ntest t1() {\n    let a = 1;\n    let b = 2;\n    let c = helper(a);\n    assert_eq(c, b);\n}\n",
        "s.test.mini",
    )
    .unwrap();
    assert_eq!(size_of(&suite), evotest::SuiteSize { methods: 1, statements: 6 });
}

#[test]
fn size_counts_nested_statements() {
    let suite = split_methods(
        "test t1() {\n    let i = 0;\n    while (i < 3) {\n        i = i + 1;\n    }\n    assert_eq(i, 3);\n}\n",
        "s.test.mini",
    )
    .unwrap();
    // let + while + nested assignment + assert
    assert_eq!(size_of(&suite).statements, 4);
}

#[test]
fn content_hash_tracks_printed_source() {
    let a = split_methods("test t1() {\n    assert_eq(1, 1);\n}\n", "s.test.mini").unwrap();
    let b = split_methods("test t1() {\n    assert_eq(1, 1);\n}\n", "other.test.mini").unwrap();
    assert_eq!(a.content_hash(), b.content_hash(), "labels are not content");
    let c = split_methods("test t1() {\n    assert_eq(1, 2);\n}\n", "s.test.mini").unwrap();
    assert_ne!(a.content_hash(), c.content_hash());
}

#[test]
fn run_test_method_reports_by_name() {
    let suite = split_methods(
        "test ok() {\n    assert_eq(add(2, 2), 4);\n}\n\ntest bad() {\n    assert_eq(add(2, 2), 5);\n}\n",
        "s.test.mini",
    )
    .unwrap();
    let program = program();
    assert!(run_test_method(&program, &suite, "ok", 10_000).passed());
    assert!(!run_test_method(&program, &suite, "bad", 10_000).passed());
    assert!(!run_test_method(&program, &suite, "missing", 10_000).passed());
}

#[test]
fn no_method_references_absent_helper_after_ops() {
    let a = split_methods(
        "fn h(x) {\n    return x + 1;\n}\n\ntest t1() {\n    assert_eq(h(1), 2);\n}\n",
        "a.test.mini",
    )
    .unwrap();
    let b = split_methods(
        "fn h(x) {\n    return x * 3;\n}\n\ntest t9() {\n    assert_eq(h(2), 6);\n}\n",
        "b.test.mini",
    )
    .unwrap();
    let merged = merge_suites(&a, &b);
    let helper_names: std::collections::BTreeSet<&str> =
        merged.helpers.iter().map(|h| h.name.as_str()).collect();
    for method in &merged.methods {
        let mut called = Vec::new();
        minilang::ast::walk_exprs(&method.body, &mut |e| {
            if let minilang::ExprKind::Call { callee, .. } = &e.kind {
                called.push(callee.clone());
            }
        });
        for callee in called {
            let is_builtin = matches!(callee.as_str(), "assert_eq" | "assert_true" | "assert_false");
            let is_program = matches!(callee.as_str(), "id" | "add");
            assert!(
                is_builtin || is_program || helper_names.contains(callee.as_str()),
                "method {} calls unknown {}",
                method.name,
                callee
            );
        }
    }
}
