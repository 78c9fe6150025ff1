//! Canonical pretty-printer. Printing then re-parsing yields a
//! structurally identical AST; every statement lands on its own line so
//! line coverage over printed sources is well defined.

use crate::ast::{BinaryOp, Block, Expr, ExprKind, FunctionDecl, Program, Stmt, StmtKind, UnaryOp};

const INDENT: &str = "    ";

pub fn print_program(program: &Program) -> String {
    let mut out = String::new();
    for (i, f) in program.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&print_function(f));
    }
    out
}

pub fn print_function(f: &FunctionDecl) -> String {
    let mut out = format!("fn {}({}) {{\n", f.name, f.params.join(", "));
    print_block_into(&mut out, &f.body, 1);
    out.push_str("}\n");
    out
}

/// Print a test method declaration (`test name() { ... }`).
pub fn print_test_method(name: &str, body: &Block) -> String {
    let mut out = format!("test {}() {{\n", name);
    print_block_into(&mut out, body, 1);
    out.push_str("}\n");
    out
}

pub fn print_stmt(stmt: &Stmt, indent: usize) -> String {
    let mut out = String::new();
    print_stmt_into(&mut out, stmt, indent);
    out
}

fn print_block_into(out: &mut String, block: &Block, indent: usize) {
    for stmt in &block.stmts {
        print_stmt_into(out, stmt, indent);
    }
}

fn print_stmt_into(out: &mut String, stmt: &Stmt, indent: usize) {
    let pad = INDENT.repeat(indent);
    match &stmt.kind {
        StmtKind::Let { name, value } => {
            out.push_str(&format!("{pad}let {name} = {};\n", print_expr(value)));
        }
        StmtKind::Assign { name, value } => {
            out.push_str(&format!("{pad}{name} = {};\n", print_expr(value)));
        }
        StmtKind::If {
            cond,
            then_block,
            else_block,
            ..
        } => {
            out.push_str(&format!("{pad}if ({}) {{\n", print_expr(cond)));
            print_block_into(out, then_block, indent + 1);
            if let Some(else_block) = else_block {
                out.push_str(&format!("{pad}}} else {{\n"));
                print_block_into(out, else_block, indent + 1);
            }
            out.push_str(&format!("{pad}}}\n"));
        }
        StmtKind::While { cond, body, .. } => {
            out.push_str(&format!("{pad}while ({}) {{\n", print_expr(cond)));
            print_block_into(out, body, indent + 1);
            out.push_str(&format!("{pad}}}\n"));
        }
        StmtKind::Return { value } => {
            out.push_str(&format!("{pad}return {};\n", print_expr(value)));
        }
        StmtKind::Expr { expr } => {
            out.push_str(&format!("{pad}{};\n", print_expr(expr)));
        }
    }
}

pub fn print_expr(expr: &Expr) -> String {
    print_expr_prec(expr, 0)
}

fn precedence(op: BinaryOp) -> u8 {
    match op {
        BinaryOp::Or => 1,
        BinaryOp::And => 2,
        BinaryOp::Eq | BinaryOp::Ne => 3,
        BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
        BinaryOp::Add | BinaryOp::Sub => 5,
        BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => 6,
    }
}

const UNARY_PRECEDENCE: u8 = 7;

fn print_expr_prec(expr: &Expr, min_prec: u8) -> String {
    match &expr.kind {
        ExprKind::Int(v) => v.to_string(),
        ExprKind::Bool(b) => b.to_string(),
        ExprKind::Str(s) => format!("\"{}\"", escape(s)),
        ExprKind::Ident(name) => name.clone(),
        ExprKind::Call { callee, args } => {
            let rendered: Vec<String> = args.iter().map(print_expr).collect();
            format!("{callee}({})", rendered.join(", "))
        }
        ExprKind::Unary { op, operand } => {
            let symbol = match op {
                UnaryOp::Not => "!",
            };
            let inner = print_expr_prec(operand, UNARY_PRECEDENCE);
            let text = format!("{symbol}{inner}");
            if UNARY_PRECEDENCE < min_prec {
                format!("({text})")
            } else {
                text
            }
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let prec = precedence(*op);
            let left = print_expr_prec(lhs, prec);
            let right = print_expr_prec(rhs, prec + 1);
            let text = format!("{left} {} {right}", op.symbol());
            if prec < min_prec {
                format!("({text})")
            } else {
                text
            }
        }
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out
}
