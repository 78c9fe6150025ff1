//! Parse/print round-trip: printing any valid AST and re-parsing it yields
//! a structurally identical AST.

use proptest::prelude::*;

use minilang::ast::{
    BinaryOp, Block, Expr, ExprKind, FunctionDecl, Span, Stmt, StmtKind, UnaryOp,
};
use minilang::{parse_program, print_program, Program};

const KEYWORDS: [&str; 9] = [
    "fn", "test", "let", "if", "else", "while", "return", "true", "false",
];

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,6}".prop_filter("not a keyword", |s| !KEYWORDS.contains(&s.as_str()))
}

fn literal() -> impl Strategy<Value = ExprKind> {
    prop_oneof![
        (0i64..1_000_000).prop_map(ExprKind::Int),
        any::<bool>().prop_map(ExprKind::Bool),
        "[a-z ]{0,10}".prop_map(ExprKind::Str),
        ident().prop_map(ExprKind::Ident),
    ]
}

fn binary_op() -> impl Strategy<Value = BinaryOp> {
    prop_oneof![
        Just(BinaryOp::Add),
        Just(BinaryOp::Sub),
        Just(BinaryOp::Mul),
        Just(BinaryOp::Div),
        Just(BinaryOp::Mod),
        Just(BinaryOp::Eq),
        Just(BinaryOp::Ne),
        Just(BinaryOp::Lt),
        Just(BinaryOp::Le),
        Just(BinaryOp::Gt),
        Just(BinaryOp::Ge),
        Just(BinaryOp::And),
        Just(BinaryOp::Or),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = literal().prop_map(|kind| Expr {
        span: Span::default(),
        kind,
    });
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone()).prop_map(|operand| Expr {
                span: Span::default(),
                kind: ExprKind::Unary {
                    op: UnaryOp::Not,
                    operand: Box::new(operand),
                },
            }),
            (binary_op(), inner.clone(), inner.clone()).prop_map(|(op, lhs, rhs)| Expr {
                span: Span::default(),
                kind: ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
            }),
            (ident(), prop::collection::vec(inner, 0..3)).prop_map(|(callee, args)| Expr {
                span: Span::default(),
                kind: ExprKind::Call { callee, args },
            }),
        ]
    })
}

fn stmt() -> impl Strategy<Value = Stmt> {
    let simple = prop_oneof![
        (ident(), expr()).prop_map(|(name, value)| StmtKind::Let { name, value }),
        (ident(), expr()).prop_map(|(name, value)| StmtKind::Assign { name, value }),
        expr().prop_map(|value| StmtKind::Return { value }),
        expr().prop_map(|expr| StmtKind::Expr { expr }),
    ];
    let leaf = simple.prop_map(|kind| Stmt {
        id: 0,
        span: Span::default(),
        kind,
    });
    leaf.prop_recursive(3, 16, 4, |inner| {
        let block = prop::collection::vec(inner.clone(), 0..4).prop_map(|stmts| Block { stmts });
        prop_oneof![
            (expr(), block.clone(), prop::option::of(block.clone())).prop_map(
                |(cond, then_block, else_block)| Stmt {
                    id: 0,
                    span: Span::default(),
                    kind: StmtKind::If {
                        branch: 0,
                        cond,
                        then_block,
                        else_block,
                    },
                }
            ),
            (expr(), block).prop_map(|(cond, body)| Stmt {
                id: 0,
                span: Span::default(),
                kind: StmtKind::While {
                    branch: 0,
                    cond,
                    body,
                },
            }),
        ]
    })
}

fn program() -> impl Strategy<Value = Program> {
    let function = (ident(), prop::collection::vec(ident(), 0..3), prop::collection::vec(stmt(), 0..5))
        .prop_map(|(name, params, stmts)| FunctionDecl {
            is_focal: minilang::ast::is_focal_name(&name),
            name,
            params,
            body: Block { stmts },
            span: Span::default(),
        });
    prop::collection::vec(function, 1..4)
        .prop_filter("unique function names", |fns| {
            let names: std::collections::BTreeSet<_> = fns.iter().map(|f| &f.name).collect();
            names.len() == fns.len()
        })
        .prop_map(|functions| Program {
            source_path: "generated.mini".to_string(),
            functions,
            line_index: Default::default(),
            branch_index: Default::default(),
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_is_structural_identity(p in program()) {
        let printed = print_program(&p);
        let reparsed = parse_program(&printed, "generated.mini")
            .expect("printed program must re-parse");
        prop_assert!(p.structurally_equal(&reparsed), "printed:\n{printed}");
    }

    #[test]
    fn printing_is_idempotent_after_one_parse(p in program()) {
        let once = print_program(&p);
        let reparsed = parse_program(&once, "generated.mini").unwrap();
        let twice = print_program(&reparsed);
        prop_assert_eq!(once, twice);
    }
}

#[test]
fn source_roundtrip_on_fixture_corpus() {
    for name in ["triangle", "leap", "gcd", "digits", "clamp", "parity"] {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../fixtures")
            .join(format!("{name}.mini"));
        let source = std::fs::read_to_string(path).unwrap();
        let parsed = parse_program(&source, "fixture.mini").unwrap();
        let reparsed = parse_program(&print_program(&parsed), "fixture.mini").unwrap();
        assert!(parsed.structurally_equal(&reparsed), "fixture {name}");
    }
}

#[test]
fn string_escapes_roundtrip() {
    let program = parse_program(
        "fn f() { return \"quote \\\" slash \\\\ nl \\n tab \\t\"; }",
        "p.mini",
    )
    .unwrap();
    let printed = print_program(&program);
    let reparsed = parse_program(&printed, "p.mini").unwrap();
    assert!(program.structurally_equal(&reparsed));
}
