//! Recursive-descent parser for program files and test files.
//!
//! Program files contain only `fn` declarations. Test files additionally
//! allow `test name() { ... }` declarations; plain `fn` declarations in a
//! test file are helper functions. Statement and branch ids are assigned
//! in source order during the parse.

use std::collections::BTreeMap;
use std::collections::HashSet;

use crate::ast::{
    is_focal_name, BinaryOp, Block, BranchInfo, Expr, ExprKind, FunctionDecl, Program, Span, Stmt,
    StmtKind, TestFileDecl, UnaryOp,
};
use crate::lexer::{lex, SpannedToken, Token};

/// Syntax error with position and the tokens that would have been accepted.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}", self.render())]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub expected: Vec<String>,
    pub found: String,
    pub message: Option<String>,
}

impl ParseError {
    pub(crate) fn message(span: Span, message: impl Into<String>) -> Self {
        ParseError {
            line: span.line,
            col: span.col,
            expected: Vec::new(),
            found: String::new(),
            message: Some(message.into()),
        }
    }

    fn expected(span: Span, expected: &[&str], found: &Token) -> Self {
        ParseError {
            line: span.line,
            col: span.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: found.describe(),
            message: None,
        }
    }

    fn render(&self) -> String {
        if let Some(msg) = &self.message {
            format!("parse error at {}:{}: {}", self.line, self.col, msg)
        } else {
            format!(
                "parse error at {}:{}: expected {}; found {}",
                self.line,
                self.col,
                self.expected.join(" or "),
                self.found
            )
        }
    }
}

/// Parse a program file: `fn` declarations only, unique names.
pub fn parse_program(source: &str, source_path: &str) -> Result<Program, ParseError> {
    let tokens = lex(source)?;
    let mut parser = Parser::new(tokens);
    let mut functions = Vec::new();
    let mut seen = HashSet::new();
    loop {
        match parser.peek().clone() {
            Token::Eof => break,
            Token::Fn => {
                let decl = parser.function_decl(false)?;
                if !seen.insert(decl.name.clone()) {
                    return Err(ParseError::message(
                        decl.span,
                        format!("duplicate function name `{}`", decl.name),
                    ));
                }
                functions.push(decl);
            }
            other => {
                return Err(ParseError::expected(parser.peek_span(), &["`fn`"], &other));
            }
        }
    }
    Ok(Program {
        source_path: source_path.to_string(),
        functions,
        line_index: parser.line_index,
        branch_index: parser.branch_index,
    })
}

/// Parse a test file: `test` and `fn` declarations in any order.
pub fn parse_test_file(source: &str) -> Result<Vec<TestFileDecl>, ParseError> {
    let tokens = lex(source)?;
    let mut parser = Parser::new(tokens);
    let mut decls = Vec::new();
    let mut test_names = HashSet::new();
    let mut helper_names = HashSet::new();
    loop {
        match parser.peek().clone() {
            Token::Eof => break,
            Token::Fn => {
                let decl = parser.function_decl(false)?;
                if !helper_names.insert(decl.name.clone()) {
                    return Err(ParseError::message(
                        decl.span,
                        format!("duplicate helper function name `{}`", decl.name),
                    ));
                }
                decls.push(TestFileDecl { is_test: false, decl });
            }
            Token::Test => {
                let decl = parser.function_decl(true)?;
                if !test_names.insert(decl.name.clone()) {
                    return Err(ParseError::message(
                        decl.span,
                        format!("duplicate test name `{}`", decl.name),
                    ));
                }
                decls.push(TestFileDecl { is_test: true, decl });
            }
            other => {
                return Err(ParseError::expected(
                    parser.peek_span(),
                    &["`fn`", "`test`"],
                    &other,
                ));
            }
        }
    }
    Ok(decls)
}

struct Parser {
    tokens: Vec<SpannedToken>,
    pos: usize,
    next_stmt_id: u32,
    next_branch_id: u32,
    line_index: BTreeMap<u32, u32>,
    branch_index: BTreeMap<u32, BranchInfo>,
    current_function: String,
}

impl Parser {
    fn new(tokens: Vec<SpannedToken>) -> Self {
        Parser {
            tokens,
            pos: 0,
            next_stmt_id: 0,
            next_branch_id: 0,
            line_index: BTreeMap::new(),
            branch_index: BTreeMap::new(),
            current_function: String::new(),
        }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos].token
    }

    fn peek_span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn peek2(&self) -> &Token {
        let idx = (self.pos + 1).min(self.tokens.len() - 1);
        &self.tokens[idx].token
    }

    fn advance(&mut self) -> SpannedToken {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, want: &Token, describe: &str) -> Result<SpannedToken, ParseError> {
        if self.peek() == want {
            Ok(self.advance())
        } else {
            Err(ParseError::expected(
                self.peek_span(),
                &[describe],
                self.peek(),
            ))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        let span = self.peek_span();
        match self.peek().clone() {
            Token::Ident(name) => {
                self.advance();
                Ok((name, span))
            }
            other => Err(ParseError::expected(span, &[what], &other)),
        }
    }

    fn fresh_stmt_id(&mut self, line: u32) -> u32 {
        let id = self.next_stmt_id;
        self.next_stmt_id += 1;
        self.line_index.insert(id, line);
        id
    }

    fn fresh_branch_id(&mut self, line: u32) -> u32 {
        let id = self.next_branch_id;
        self.next_branch_id += 1;
        self.branch_index.insert(
            id,
            BranchInfo {
                function: self.current_function.clone(),
                line,
                arm_count: 2,
            },
        );
        id
    }

    fn function_decl(&mut self, is_test: bool) -> Result<FunctionDecl, ParseError> {
        let keyword = self.advance(); // `fn` or `test`
        let (name, _) = self.expect_ident("a function name")?;
        self.current_function = name.clone();
        self.expect(&Token::LParen, "`(`")?;
        let mut params = Vec::new();
        if !is_test && !matches!(self.peek(), Token::RParen) {
            loop {
                let (param, _) = self.expect_ident("a parameter name")?;
                params.push(param);
                match self.peek() {
                    Token::Comma => {
                        self.advance();
                    }
                    Token::RParen => break,
                    other => {
                        return Err(ParseError::expected(
                            self.peek_span(),
                            &["`,`", "`)`"],
                            &other.clone(),
                        ));
                    }
                }
            }
        }
        self.expect(&Token::RParen, "`)`")?;
        let body = self.block()?;
        Ok(FunctionDecl {
            is_focal: is_focal_name(&name),
            name,
            params,
            body,
            span: keyword.span,
        })
    }

    fn block(&mut self) -> Result<Block, ParseError> {
        self.expect(&Token::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while !matches!(self.peek(), Token::RBrace) {
            if matches!(self.peek(), Token::Eof) {
                return Err(ParseError::expected(self.peek_span(), &["`}`"], self.peek()));
            }
            stmts.push(self.statement()?);
        }
        self.expect(&Token::RBrace, "`}`")?;
        Ok(Block { stmts })
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        let span = self.peek_span();
        match self.peek().clone() {
            Token::Let => {
                self.advance();
                let (name, _) = self.expect_ident("a variable name")?;
                self.expect(&Token::Assign, "`=`")?;
                let value = self.expression()?;
                self.expect(&Token::Semi, "`;`")?;
                Ok(Stmt {
                    id: self.fresh_stmt_id(span.line),
                    span,
                    kind: StmtKind::Let { name, value },
                })
            }
            Token::If => {
                self.advance();
                self.expect(&Token::LParen, "`(`")?;
                let cond = self.expression()?;
                self.expect(&Token::RParen, "`)`")?;
                let id = self.fresh_stmt_id(span.line);
                let branch = self.fresh_branch_id(span.line);
                let then_block = self.block()?;
                let else_block = if matches!(self.peek(), Token::Else) {
                    self.advance();
                    Some(self.block()?)
                } else {
                    None
                };
                Ok(Stmt {
                    id,
                    span,
                    kind: StmtKind::If {
                        branch,
                        cond,
                        then_block,
                        else_block,
                    },
                })
            }
            Token::While => {
                self.advance();
                self.expect(&Token::LParen, "`(`")?;
                let cond = self.expression()?;
                self.expect(&Token::RParen, "`)`")?;
                let id = self.fresh_stmt_id(span.line);
                let branch = self.fresh_branch_id(span.line);
                let body = self.block()?;
                Ok(Stmt {
                    id,
                    span,
                    kind: StmtKind::While { branch, cond, body },
                })
            }
            Token::Return => {
                self.advance();
                let value = self.expression()?;
                self.expect(&Token::Semi, "`;`")?;
                Ok(Stmt {
                    id: self.fresh_stmt_id(span.line),
                    span,
                    kind: StmtKind::Return { value },
                })
            }
            Token::Ident(name) if matches!(self.peek2(), Token::Assign) => {
                self.advance();
                self.advance();
                let value = self.expression()?;
                self.expect(&Token::Semi, "`;`")?;
                Ok(Stmt {
                    id: self.fresh_stmt_id(span.line),
                    span,
                    kind: StmtKind::Assign { name, value },
                })
            }
            _ => {
                let expr = self.expression()?;
                self.expect(&Token::Semi, "`;`")?;
                Ok(Stmt {
                    id: self.fresh_stmt_id(span.line),
                    span,
                    kind: StmtKind::Expr { expr },
                })
            }
        }
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while matches!(self.peek(), Token::OrOr) {
            let span = self.peek_span();
            self.advance();
            let rhs = self.and_expr()?;
            lhs = binary(BinaryOp::Or, lhs, rhs, span);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.equality_expr()?;
        while matches!(self.peek(), Token::AndAnd) {
            let span = self.peek_span();
            self.advance();
            let rhs = self.equality_expr()?;
            lhs = binary(BinaryOp::And, lhs, rhs, span);
        }
        Ok(lhs)
    }

    fn equality_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.relational_expr()?;
        loop {
            let op = match self.peek() {
                Token::EqEq => BinaryOp::Eq,
                Token::NotEq => BinaryOp::Ne,
                _ => break,
            };
            let span = self.peek_span();
            self.advance();
            let rhs = self.relational_expr()?;
            lhs = binary(op, lhs, rhs, span);
        }
        Ok(lhs)
    }

    fn relational_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.additive_expr()?;
        loop {
            let op = match self.peek() {
                Token::Lt => BinaryOp::Lt,
                Token::Le => BinaryOp::Le,
                Token::Gt => BinaryOp::Gt,
                Token::Ge => BinaryOp::Ge,
                _ => break,
            };
            let span = self.peek_span();
            self.advance();
            let rhs = self.additive_expr()?;
            lhs = binary(op, lhs, rhs, span);
        }
        Ok(lhs)
    }

    fn additive_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.multiplicative_expr()?;
        loop {
            let op = match self.peek() {
                Token::Plus => BinaryOp::Add,
                Token::Minus => BinaryOp::Sub,
                _ => break,
            };
            let span = self.peek_span();
            self.advance();
            let rhs = self.multiplicative_expr()?;
            lhs = binary(op, lhs, rhs, span);
        }
        Ok(lhs)
    }

    fn multiplicative_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Token::Star => BinaryOp::Mul,
                Token::Slash => BinaryOp::Div,
                Token::Percent => BinaryOp::Mod,
                _ => break,
            };
            let span = self.peek_span();
            self.advance();
            let rhs = self.unary_expr()?;
            lhs = binary(op, lhs, rhs, span);
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek(), Token::Bang) {
            let span = self.peek_span();
            self.advance();
            let operand = self.unary_expr()?;
            return Ok(Expr {
                span,
                kind: ExprKind::Unary {
                    op: UnaryOp::Not,
                    operand: Box::new(operand),
                },
            });
        }
        self.primary_expr()
    }

    fn primary_expr(&mut self) -> Result<Expr, ParseError> {
        let span = self.peek_span();
        match self.peek().clone() {
            Token::Int(v) => {
                self.advance();
                Ok(Expr { span, kind: ExprKind::Int(v) })
            }
            Token::True => {
                self.advance();
                Ok(Expr { span, kind: ExprKind::Bool(true) })
            }
            Token::False => {
                self.advance();
                Ok(Expr { span, kind: ExprKind::Bool(false) })
            }
            Token::Str(s) => {
                self.advance();
                Ok(Expr { span, kind: ExprKind::Str(s) })
            }
            Token::Ident(name) => {
                self.advance();
                if matches!(self.peek(), Token::LParen) {
                    self.advance();
                    let mut args = Vec::new();
                    if !matches!(self.peek(), Token::RParen) {
                        loop {
                            args.push(self.expression()?);
                            match self.peek() {
                                Token::Comma => {
                                    self.advance();
                                }
                                Token::RParen => break,
                                other => {
                                    return Err(ParseError::expected(
                                        self.peek_span(),
                                        &["`,`", "`)`"],
                                        &other.clone(),
                                    ));
                                }
                            }
                        }
                    }
                    self.expect(&Token::RParen, "`)`")?;
                    Ok(Expr {
                        span,
                        kind: ExprKind::Call { callee: name, args },
                    })
                } else {
                    Ok(Expr { span, kind: ExprKind::Ident(name) })
                }
            }
            Token::LParen => {
                self.advance();
                let inner = self.expression()?;
                self.expect(&Token::RParen, "`)`")?;
                Ok(inner)
            }
            other => Err(ParseError::expected(
                span,
                &[
                    "an integer",
                    "a string",
                    "`true`",
                    "`false`",
                    "an identifier",
                    "`(`",
                    "`!`",
                ],
                &other,
            )),
        }
    }
}

fn binary(op: BinaryOp, lhs: Expr, rhs: Expr, span: Span) -> Expr {
    Expr {
        span,
        kind: ExprKind::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        },
    }
}
