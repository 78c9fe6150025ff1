//! First-order AST mutation. The operator set mirrors the default
//! conditionals-boundary / negate-conditionals / math / return-values /
//! inline-constants group, restricted to MiniLang's surface.
//!
//! Enumeration is a pure function of the AST: sites are visited in
//! source order (pre-order), operators apply in a fixed order at each
//! site, and mutants whose full mutated source duplicates an earlier
//! one are removed.

use minilang::ast::{BinaryOp, Block, Expr, ExprKind, Span, Stmt, StmtKind, UnaryOp};
use minilang::{parse_program, print_expr, print_program, Program};

use crate::suite::{run_test_method, TestSuite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MutationOperator {
    /// `+` <-> `-`, `*` <-> `/`, `%` -> `*`.
    ArithmeticReplace,
    /// `<` <-> `<=`, `>` <-> `>=`.
    RelationalBoundary,
    /// `==` <-> `!=`, or wrap an `if`/`while` condition in `!`.
    NegateConditional,
    /// Integer `return e` -> `return e + 1`; boolean -> `return !e`;
    /// string -> `return ""`.
    ReturnValueMutate,
    /// Integer literal `c` -> `c + 1`; boolean literal `b` -> `!b`.
    ConstantReplace,
}

impl MutationOperator {
    pub fn name(self) -> &'static str {
        match self {
            MutationOperator::ArithmeticReplace => "ArithmeticReplace",
            MutationOperator::RelationalBoundary => "RelationalBoundary",
            MutationOperator::NegateConditional => "NegateConditional",
            MutationOperator::ReturnValueMutate => "ReturnValueMutate",
            MutationOperator::ConstantReplace => "ConstantReplace",
        }
    }
}

impl std::fmt::Display for MutationOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutantStatus {
    NotRun,
    Killed,
    Survived,
}

impl MutantStatus {
    pub fn label(self) -> &'static str {
        match self {
            MutantStatus::NotRun => "not_run",
            MutantStatus::Killed => "killed",
            MutantStatus::Survived => "survived",
        }
    }
}

/// Steps from a function body to an AST node. Block children are statement
/// indices; statements and expressions expose their operands positionally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutantSite {
    pub function: String,
    pub path: Vec<usize>,
    pub line: u32,
}

/// The concrete rewrite a mutant applies at its site.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Rewrite {
    SwapBinaryOp(BinaryOp),
    WrapConditionNot,
    ReturnIntPlusOne,
    ReturnNegate,
    ReturnEmptyString,
    IntLiteralPlusOne,
    BoolLiteralNegate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mutant {
    pub mutant_id: usize,
    pub operator: MutationOperator,
    pub site: MutantSite,
    pub original_fragment: String,
    pub mutated_fragment: String,
    pub in_focal: bool,
    pub status: MutantStatus,
    rewrite: Rewrite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutationResult {
    pub mutants: Vec<Mutant>,
    pub killed_count: usize,
    pub total_count: usize,
    pub msct_percent: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum MutationError {
    #[error("mutant {mutant_id} did not re-parse after rewriting: {source}")]
    Reparse {
        mutant_id: usize,
        source: minilang::ParseError,
    },
    #[error("mutant {mutant_id} addresses a path that does not exist")]
    BadPath { mutant_id: usize },
}

/// Syntactic type of an expression, used to pick the return-value rewrite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StaticType {
    Int,
    Bool,
    Str,
    Unknown,
}

fn static_type(e: &Expr) -> StaticType {
    match &e.kind {
        ExprKind::Int(_) => StaticType::Int,
        ExprKind::Bool(_) => StaticType::Bool,
        ExprKind::Str(_) => StaticType::Str,
        ExprKind::Unary { op: UnaryOp::Not, .. } => StaticType::Bool,
        ExprKind::Binary { op, .. } => {
            if op.is_arithmetic() {
                StaticType::Int
            } else {
                StaticType::Bool
            }
        }
        ExprKind::Ident(_) | ExprKind::Call { .. } => StaticType::Unknown,
    }
}

/// Enumerate every applicable mutant of `program` in deterministic source
/// order, dropping duplicates that produce identical mutated source.
pub fn enumerate_mutants(program: &Program, focal_only: bool) -> Vec<Mutant> {
    let mut raw = Vec::new();
    for function in &program.functions {
        if focal_only && !function.is_focal {
            continue;
        }
        let mut collector = Collector {
            function: &function.name,
            in_focal: function.is_focal,
            path: Vec::new(),
            out: &mut raw,
        };
        collector.block(&function.body);
    }

    let mut seen = std::collections::HashSet::new();
    let mut mutants = Vec::new();
    for mut mutant in raw {
        let mutated = apply_rewrite(program, &mutant).expect("enumerated mutant must apply");
        let source = print_program(&mutated);
        if seen.insert(minilang::hash::fnv1a_64(source.as_bytes())) {
            mutant.mutant_id = mutants.len();
            mutants.push(mutant);
        }
    }
    mutants
}

struct Collector<'a> {
    function: &'a str,
    in_focal: bool,
    path: Vec<usize>,
    out: &'a mut Vec<Mutant>,
}

impl Collector<'_> {
    fn push(
        &mut self,
        operator: MutationOperator,
        rewrite: Rewrite,
        span: Span,
        original: String,
        mutated: String,
    ) {
        self.out.push(Mutant {
            mutant_id: 0,
            operator,
            site: MutantSite {
                function: self.function.to_string(),
                path: self.path.clone(),
                line: span.line,
            },
            original_fragment: original,
            mutated_fragment: mutated,
            in_focal: self.in_focal,
            status: MutantStatus::NotRun,
            rewrite,
        })
    }

    fn block(&mut self, block: &Block) {
        for (i, stmt) in block.stmts.iter().enumerate() {
            self.path.push(i);
            self.stmt(stmt);
            self.path.pop();
        }
    }

    fn stmt(&mut self, stmt: &Stmt) {
        match &stmt.kind {
            StmtKind::Let { value, .. } | StmtKind::Assign { value, .. } => {
                self.path.push(0);
                self.expr(value);
                self.path.pop();
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
                ..
            } => {
                // Condition wrap comes first: the statement is the site.
                self.path.push(0);
                self.push(
                    MutationOperator::NegateConditional,
                    Rewrite::WrapConditionNot,
                    cond.span,
                    print_expr(cond),
                    print_expr(&negate(cond)),
                );
                self.expr(cond);
                self.path.pop();
                self.path.push(1);
                self.block(then_block);
                self.path.pop();
                if let Some(else_block) = else_block {
                    self.path.push(2);
                    self.block(else_block);
                    self.path.pop();
                }
            }
            StmtKind::While { cond, body, .. } => {
                self.path.push(0);
                self.push(
                    MutationOperator::NegateConditional,
                    Rewrite::WrapConditionNot,
                    cond.span,
                    print_expr(cond),
                    print_expr(&negate(cond)),
                );
                self.expr(cond);
                self.path.pop();
                self.path.push(1);
                self.block(body);
                self.path.pop();
            }
            StmtKind::Return { value } => {
                let rewrite = match static_type(value) {
                    StaticType::Int => Some((Rewrite::ReturnIntPlusOne, plus_one(value))),
                    StaticType::Bool => Some((Rewrite::ReturnNegate, negate(value))),
                    StaticType::Str => Some((Rewrite::ReturnEmptyString, str_literal(""))),
                    StaticType::Unknown => None,
                };
                if let Some((rewrite, replacement)) = rewrite {
                    self.push(
                        MutationOperator::ReturnValueMutate,
                        rewrite,
                        stmt.span,
                        format!("return {};", print_expr(value)),
                        format!("return {};", print_expr(&replacement)),
                    );
                }
                self.path.push(0);
                self.expr(value);
                self.path.pop();
            }
            StmtKind::Expr { expr } => {
                self.path.push(0);
                self.expr(expr);
                self.path.pop();
            }
        }
    }

    fn expr(&mut self, expr: &Expr) {
        match &expr.kind {
            ExprKind::Int(v) => {
                if *v < i64::MAX {
                    self.push(
                        MutationOperator::ConstantReplace,
                        Rewrite::IntLiteralPlusOne,
                        expr.span,
                        v.to_string(),
                        (v + 1).to_string(),
                    );
                }
            }
            ExprKind::Bool(_) => {
                self.push(
                    MutationOperator::ConstantReplace,
                    Rewrite::BoolLiteralNegate,
                    expr.span,
                    print_expr(expr),
                    print_expr(&negate(expr)),
                );
            }
            ExprKind::Binary { op, lhs, rhs } => {
                if let Some((operator, replacement)) = binary_swap(*op) {
                    let mut swapped = expr.clone();
                    if let ExprKind::Binary { op, .. } = &mut swapped.kind {
                        *op = replacement;
                    }
                    self.push(
                        operator,
                        Rewrite::SwapBinaryOp(replacement),
                        expr.span,
                        print_expr(expr),
                        print_expr(&swapped),
                    );
                }
                self.path.push(0);
                self.expr(lhs);
                self.path.pop();
                self.path.push(1);
                self.expr(rhs);
                self.path.pop();
            }
            ExprKind::Unary { operand, .. } => {
                self.path.push(0);
                self.expr(operand);
                self.path.pop();
            }
            ExprKind::Call { args, .. } => {
                for (i, arg) in args.iter().enumerate() {
                    self.path.push(i);
                    self.expr(arg);
                    self.path.pop();
                }
            }
            _ => {}
        }
    }
}

fn binary_swap(op: BinaryOp) -> Option<(MutationOperator, BinaryOp)> {
    match op {
        BinaryOp::Add => Some((MutationOperator::ArithmeticReplace, BinaryOp::Sub)),
        BinaryOp::Sub => Some((MutationOperator::ArithmeticReplace, BinaryOp::Add)),
        BinaryOp::Mul => Some((MutationOperator::ArithmeticReplace, BinaryOp::Div)),
        BinaryOp::Div => Some((MutationOperator::ArithmeticReplace, BinaryOp::Mul)),
        BinaryOp::Mod => Some((MutationOperator::ArithmeticReplace, BinaryOp::Mul)),
        BinaryOp::Lt => Some((MutationOperator::RelationalBoundary, BinaryOp::Le)),
        BinaryOp::Le => Some((MutationOperator::RelationalBoundary, BinaryOp::Lt)),
        BinaryOp::Gt => Some((MutationOperator::RelationalBoundary, BinaryOp::Ge)),
        BinaryOp::Ge => Some((MutationOperator::RelationalBoundary, BinaryOp::Gt)),
        BinaryOp::Eq => Some((MutationOperator::NegateConditional, BinaryOp::Ne)),
        BinaryOp::Ne => Some((MutationOperator::NegateConditional, BinaryOp::Eq)),
        BinaryOp::And | BinaryOp::Or => None,
    }
}

fn negate(e: &Expr) -> Expr {
    Expr {
        span: e.span,
        kind: ExprKind::Unary {
            op: UnaryOp::Not,
            operand: Box::new(e.clone()),
        },
    }
}

fn plus_one(e: &Expr) -> Expr {
    Expr {
        span: e.span,
        kind: ExprKind::Binary {
            op: BinaryOp::Add,
            lhs: Box::new(e.clone()),
            rhs: Box::new(Expr {
                span: e.span,
                kind: ExprKind::Int(1),
            }),
        },
    }
}

fn str_literal(s: &str) -> Expr {
    Expr {
        span: Span::default(),
        kind: ExprKind::Str(s.to_string()),
    }
}

/// Apply a mutant's rewrite to a copy of `program`, print it, and re-parse.
pub fn apply_mutant(program: &Program, mutant: &Mutant) -> Result<Program, MutationError> {
    let mutated = apply_rewrite(program, mutant).ok_or(MutationError::BadPath {
        mutant_id: mutant.mutant_id,
    })?;
    let source = print_program(&mutated);
    parse_program(&source, &program.source_path).map_err(|source| MutationError::Reparse {
        mutant_id: mutant.mutant_id,
        source,
    })
}

enum NodeMut<'a> {
    Stmt(&'a mut Stmt),
    Expr(&'a mut Expr),
}

fn navigate_block<'a>(block: &'a mut Block, path: &[usize]) -> Option<NodeMut<'a>> {
    let (&index, rest) = path.split_first()?;
    let stmt = block.stmts.get_mut(index)?;
    if rest.is_empty() {
        return Some(NodeMut::Stmt(stmt));
    }
    let (&child, rest) = rest.split_first()?;
    match &mut stmt.kind {
        StmtKind::Let { value, .. } | StmtKind::Assign { value, .. } | StmtKind::Return { value } => {
            if child == 0 {
                navigate_expr(value, rest)
            } else {
                None
            }
        }
        StmtKind::If {
            cond,
            then_block,
            else_block,
            ..
        } => match child {
            0 => navigate_expr(cond, rest),
            1 => navigate_block(then_block, rest),
            2 => navigate_block(else_block.as_mut()?, rest),
            _ => None,
        },
        StmtKind::While { cond, body, .. } => match child {
            0 => navigate_expr(cond, rest),
            1 => navigate_block(body, rest),
            _ => None,
        },
        StmtKind::Expr { expr } => {
            if child == 0 {
                navigate_expr(expr, rest)
            } else {
                None
            }
        }
    }
}

fn navigate_expr<'a>(expr: &'a mut Expr, path: &[usize]) -> Option<NodeMut<'a>> {
    let Some((&child, rest)) = path.split_first() else {
        return Some(NodeMut::Expr(expr));
    };
    match &mut expr.kind {
        ExprKind::Unary { operand, .. } => {
            if child == 0 {
                navigate_expr(operand, rest)
            } else {
                None
            }
        }
        ExprKind::Binary { lhs, rhs, .. } => match child {
            0 => navigate_expr(lhs, rest),
            1 => navigate_expr(rhs, rest),
            _ => None,
        },
        ExprKind::Call { args, .. } => navigate_expr(args.get_mut(child)?, rest),
        _ => None,
    }
}

fn apply_rewrite(program: &Program, mutant: &Mutant) -> Option<Program> {
    let mut clone = program.clone();
    let function = clone
        .functions
        .iter_mut()
        .find(|f| f.name == mutant.site.function)?;
    let node = navigate_block(&mut function.body, &mutant.site.path)?;
    match (&mutant.rewrite, node) {
        (Rewrite::SwapBinaryOp(replacement), NodeMut::Expr(e)) => match &mut e.kind {
            ExprKind::Binary { op, .. } => *op = *replacement,
            _ => return None,
        },
        (Rewrite::WrapConditionNot, NodeMut::Expr(e)) => {
            *e = negate(e);
        }
        (Rewrite::ReturnIntPlusOne, NodeMut::Stmt(s)) => match &mut s.kind {
            StmtKind::Return { value } => *value = plus_one(value),
            _ => return None,
        },
        (Rewrite::ReturnNegate, NodeMut::Stmt(s)) => match &mut s.kind {
            StmtKind::Return { value } => *value = negate(value),
            _ => return None,
        },
        (Rewrite::ReturnEmptyString, NodeMut::Stmt(s)) => match &mut s.kind {
            StmtKind::Return { value } => *value = str_literal(""),
            _ => return None,
        },
        (Rewrite::IntLiteralPlusOne, NodeMut::Expr(e)) => match &mut e.kind {
            ExprKind::Int(v) => *v += 1,
            _ => return None,
        },
        (Rewrite::BoolLiteralNegate, NodeMut::Expr(e)) => {
            if !matches!(e.kind, ExprKind::Bool(_)) {
                return None;
            }
            *e = negate(e);
        }
        _ => return None,
    }
    Some(clone)
}

/// Run the passing tests against every mutant, short-circuiting on the
/// first kill per mutant. Any non-pass status kills, including exhausting
/// the step budget. An empty mutant set scores 100 so that an unmutatable
/// focal region does not poison fitness.
pub fn execute_mutants(
    program: &Program,
    mutants: &[Mutant],
    passing_tests: &[String],
    suite: &TestSuite,
    step_budget: u64,
) -> Result<MutationResult, MutationError> {
    let mut out = Vec::with_capacity(mutants.len());
    let mut killed_count = 0;
    for mutant in mutants {
        let mutated = apply_mutant(program, mutant)?;
        let mut status = MutantStatus::Survived;
        for test in passing_tests {
            let outcome = run_test_method(&mutated, suite, test, step_budget);
            if !outcome.passed() {
                status = MutantStatus::Killed;
                break;
            }
        }
        if status == MutantStatus::Killed {
            killed_count += 1;
        }
        out.push(Mutant {
            status,
            ..mutant.clone()
        });
    }
    let total_count = out.len();
    let msct_percent = if total_count == 0 {
        100.0
    } else {
        100.0 * killed_count as f64 / total_count as f64
    };
    Ok(MutationResult {
        mutants: out,
        killed_count,
        total_count,
        msct_percent,
    })
}
