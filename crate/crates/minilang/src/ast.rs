//! Abstract syntax tree for MiniLang programs and test files.

use std::collections::BTreeMap;

/// Identifies a statement within one parse. Ids are assigned in source
/// order, starting at zero, and are unique within the parsed unit.
pub type StmtId = u32;

/// Identifies an `if` or `while` condition within one parse.
pub type BranchId = u32;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

/// A parsed program: the unit under test.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub source_path: String,
    pub functions: Vec<FunctionDecl>,
    /// Statement id to 1-based source line.
    pub line_index: BTreeMap<StmtId, u32>,
    /// Branch id to its condition location and arm count.
    pub branch_index: BTreeMap<BranchId, BranchInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchInfo {
    pub function: String,
    pub line: u32,
    pub arm_count: u8,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn focal_functions(&self) -> impl Iterator<Item = &FunctionDecl> {
        self.functions.iter().filter(|f| f.is_focal)
    }

    /// Hash of the canonical printed source. Two programs with the same
    /// hash are treated as the same program for coverage merging and
    /// fitness caching.
    pub fn content_hash(&self) -> u64 {
        crate::hash::fnv1a_64(crate::printer::print_program(self).as_bytes())
    }

    /// Distinct `(function, line)` pairs of statements in focal functions.
    pub fn focal_line_set(&self) -> std::collections::BTreeSet<(String, u32)> {
        let mut set = std::collections::BTreeSet::new();
        for f in self.focal_functions() {
            walk_stmts(&f.body, &mut |s| {
                set.insert((f.name.clone(), s.span.line));
            });
        }
        set
    }

    /// Branch ids whose condition sits inside a focal function.
    pub fn focal_branch_ids(&self) -> std::collections::BTreeSet<BranchId> {
        self.branch_index
            .iter()
            .filter(|(_, info)| {
                self.function(&info.function)
                    .map(|f| f.is_focal)
                    .unwrap_or(false)
            })
            .map(|(id, _)| *id)
            .collect()
    }

    /// Structural equality: compares shapes, names, operators, and literal
    /// values while ignoring spans and statement/branch ids. This is the
    /// notion of equality under which parse/print round-trips are identity.
    pub fn structurally_equal(&self, other: &Program) -> bool {
        self.functions.len() == other.functions.len()
            && self
                .functions
                .iter()
                .zip(&other.functions)
                .all(|(a, b)| function_eq(a, b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<String>,
    pub body: Block,
    /// A function is focal iff its name does not begin with an underscore.
    pub is_focal: bool,
    pub span: Span,
}

/// One declaration of a test file: either a `test` method or a helper `fn`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFileDecl {
    pub is_test: bool,
    pub decl: FunctionDecl,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub id: StmtId,
    pub span: Span,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Let {
        name: String,
        value: Expr,
    },
    Assign {
        name: String,
        value: Expr,
    },
    If {
        branch: BranchId,
        cond: Expr,
        then_block: Block,
        else_block: Option<Block>,
    },
    While {
        branch: BranchId,
        cond: Expr,
        body: Block,
    },
    Return {
        value: Expr,
    },
    Expr {
        expr: Expr,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub span: Span,
    pub kind: ExprKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Bool(bool),
    Str(String),
    Ident(String),
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        callee: String,
        args: Vec<Expr>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod
        )
    }

    pub fn is_relational(self) -> bool {
        matches!(self, BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge)
    }

    pub fn is_equality(self) -> bool {
        matches!(self, BinaryOp::Eq | BinaryOp::Ne)
    }
}

/// Whether a function name marks the function as focal.
pub fn is_focal_name(name: &str) -> bool {
    !name.starts_with('_')
}

/// Visit every statement in a block, including statements nested inside
/// `if` and `while` bodies, in source order.
pub fn walk_stmts(block: &Block, f: &mut impl FnMut(&Stmt)) {
    for stmt in &block.stmts {
        f(stmt);
        match &stmt.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                walk_stmts(then_block, f);
                if let Some(e) = else_block {
                    walk_stmts(e, f);
                }
            }
            StmtKind::While { body, .. } => walk_stmts(body, f),
            _ => {}
        }
    }
}

/// Visit every expression in a block in pre-order.
pub fn walk_exprs(block: &Block, f: &mut impl FnMut(&Expr)) {
    walk_stmts(block, &mut |stmt| match &stmt.kind {
        StmtKind::Let { value, .. }
        | StmtKind::Assign { value, .. }
        | StmtKind::Return { value } => walk_expr(value, f),
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => walk_expr(cond, f),
        StmtKind::Expr { expr } => walk_expr(expr, f),
    });
}

fn walk_expr(e: &Expr, f: &mut impl FnMut(&Expr)) {
    f(e);
    match &e.kind {
        ExprKind::Unary { operand, .. } => walk_expr(operand, f),
        ExprKind::Binary { lhs, rhs, .. } => {
            walk_expr(lhs, f);
            walk_expr(rhs, f);
        }
        ExprKind::Call { args, .. } => {
            for a in args {
                walk_expr(a, f);
            }
        }
        _ => {}
    }
}

/// Mutable expression walk; used to rewrite call targets in place.
pub fn walk_exprs_mut(block: &mut Block, f: &mut impl FnMut(&mut Expr)) {
    for stmt in &mut block.stmts {
        match &mut stmt.kind {
            StmtKind::Let { value, .. }
            | StmtKind::Assign { value, .. }
            | StmtKind::Return { value } => walk_expr_mut(value, f),
            StmtKind::If {
                cond,
                then_block,
                else_block,
                ..
            } => {
                walk_expr_mut(cond, f);
                walk_exprs_mut(then_block, f);
                if let Some(e) = else_block {
                    walk_exprs_mut(e, f);
                }
            }
            StmtKind::While { cond, body, .. } => {
                walk_expr_mut(cond, f);
                walk_exprs_mut(body, f);
            }
            StmtKind::Expr { expr } => walk_expr_mut(expr, f),
        }
    }
}

fn walk_expr_mut(e: &mut Expr, f: &mut impl FnMut(&mut Expr)) {
    f(e);
    match &mut e.kind {
        ExprKind::Unary { operand, .. } => walk_expr_mut(operand, f),
        ExprKind::Binary { lhs, rhs, .. } => {
            walk_expr_mut(lhs, f);
            walk_expr_mut(rhs, f);
        }
        ExprKind::Call { args, .. } => {
            for a in args {
                walk_expr_mut(a, f);
            }
        }
        _ => {}
    }
}

/// Total number of statements in a block, counting nested statements.
pub fn count_statements(block: &Block) -> usize {
    let mut n = 0;
    walk_stmts(block, &mut |_| n += 1);
    n
}

pub fn function_eq(a: &FunctionDecl, b: &FunctionDecl) -> bool {
    a.name == b.name && a.params == b.params && a.is_focal == b.is_focal && block_eq(&a.body, &b.body)
}

pub fn block_eq(a: &Block, b: &Block) -> bool {
    a.stmts.len() == b.stmts.len() && a.stmts.iter().zip(&b.stmts).all(|(x, y)| stmt_eq(x, y))
}

pub fn stmt_eq(a: &Stmt, b: &Stmt) -> bool {
    match (&a.kind, &b.kind) {
        (StmtKind::Let { name: n1, value: v1 }, StmtKind::Let { name: n2, value: v2 }) => {
            n1 == n2 && expr_eq(v1, v2)
        }
        (StmtKind::Assign { name: n1, value: v1 }, StmtKind::Assign { name: n2, value: v2 }) => {
            n1 == n2 && expr_eq(v1, v2)
        }
        (
            StmtKind::If {
                cond: c1,
                then_block: t1,
                else_block: e1,
                ..
            },
            StmtKind::If {
                cond: c2,
                then_block: t2,
                else_block: e2,
                ..
            },
        ) => {
            expr_eq(c1, c2)
                && block_eq(t1, t2)
                && match (e1, e2) {
                    (None, None) => true,
                    (Some(x), Some(y)) => block_eq(x, y),
                    _ => false,
                }
        }
        (
            StmtKind::While { cond: c1, body: b1, .. },
            StmtKind::While { cond: c2, body: b2, .. },
        ) => expr_eq(c1, c2) && block_eq(b1, b2),
        (StmtKind::Return { value: v1 }, StmtKind::Return { value: v2 }) => expr_eq(v1, v2),
        (StmtKind::Expr { expr: e1 }, StmtKind::Expr { expr: e2 }) => expr_eq(e1, e2),
        _ => false,
    }
}

pub fn expr_eq(a: &Expr, b: &Expr) -> bool {
    match (&a.kind, &b.kind) {
        (ExprKind::Int(x), ExprKind::Int(y)) => x == y,
        (ExprKind::Bool(x), ExprKind::Bool(y)) => x == y,
        (ExprKind::Str(x), ExprKind::Str(y)) => x == y,
        (ExprKind::Ident(x), ExprKind::Ident(y)) => x == y,
        (
            ExprKind::Unary { op: o1, operand: e1 },
            ExprKind::Unary { op: o2, operand: e2 },
        ) => o1 == o2 && expr_eq(e1, e2),
        (
            ExprKind::Binary { op: o1, lhs: l1, rhs: r1 },
            ExprKind::Binary { op: o2, lhs: l2, rhs: r2 },
        ) => o1 == o2 && expr_eq(l1, l2) && expr_eq(r1, r2),
        (
            ExprKind::Call { callee: c1, args: a1 },
            ExprKind::Call { callee: c2, args: a2 },
        ) => c1 == c2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| expr_eq(x, y)),
        _ => false,
    }
}
