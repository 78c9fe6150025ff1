//! MiniLang: a small imperative language with an instrumented tree-walking
//! interpreter.
//!
//! The language is the substrate for automated test generation: programs
//! under test are plain `.mini` files, test suites are `.test.mini` files
//! containing `test` functions plus helper functions. The interpreter
//! records statement-level line coverage and per-arm branch coverage while
//! it runs, and enforces a step budget so that runaway loops terminate
//! deterministically.

pub mod ast;
pub mod coverage;
pub mod hash;
pub mod interp;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use ast::{
    BinaryOp, Block, BranchId, BranchInfo, Expr, ExprKind, FunctionDecl, Program, Span, Stmt,
    StmtId, StmtKind, TestFileDecl, UnaryOp,
};
pub use coverage::{merge_coverage, BranchArm, CoverageMergeError, CoverageReport};
pub use interp::{
    CallError, CallOutcome, ExecEvent, FrameInfo, RunOutcome, RunStatus, TestRun, Value,
    DEFAULT_STEP_BUDGET, MAX_CALL_DEPTH,
};
pub use parser::{parse_program, parse_test_file, ParseError};
pub use printer::{print_expr, print_function, print_program, print_stmt, print_test_method};
