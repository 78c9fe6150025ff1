//! Tree-walking interpreter with coverage instrumentation and a step
//! budget.
//!
//! A run executes one test method body with the program's functions and
//! the suite's helper functions in scope. Every executed statement counts
//! one step against the budget; `while` loops additionally count one step
//! per iteration so that non-terminating loops exhaust the budget even
//! with empty bodies.

use std::collections::HashMap;

use crate::ast::{BinaryOp, Block, Expr, ExprKind, FunctionDecl, Program, Span, Stmt, StmtKind, UnaryOp};
use crate::coverage::{BranchArm, CoverageReport};

pub const DEFAULT_STEP_BUDGET: u64 = 100_000;
pub const MAX_CALL_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Str(String),
    Unit,
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "integer",
            Value::Bool(_) => "boolean",
            Value::Str(_) => "string",
            Value::Unit => "unit",
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "\"{s}\""),
            Value::Unit => write!(f, "unit"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Pass,
    AssertionFailure,
    RuntimeError,
    StepBudgetExceeded,
}

impl RunStatus {
    pub fn kind_str(self) -> &'static str {
        match self {
            RunStatus::Pass => "pass",
            RunStatus::AssertionFailure => "assertion_failure",
            RunStatus::RuntimeError => "runtime_error",
            RunStatus::StepBudgetExceeded => "step_budget_exceeded",
        }
    }
}

/// One stack frame as reported in error traces, innermost first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameInfo {
    pub function: String,
    pub file: String,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub message: String,
    /// Rendered error trace; empty when the run passed. The first line is
    /// `ERROR <kind> at <file>:<line>:<col> in <function>` followed by one
    /// frame per line.
    pub trace: String,
    /// Structured view of the trace, innermost frame first.
    pub frames: Vec<FrameInfo>,
    pub coverage: CoverageReport,
    pub steps_used: u64,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.status == RunStatus::Pass
    }
}

/// Coverage or execution event, in execution order. Used by tracing
/// oracles that replay a run and compare against the coverage sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExecEvent {
    Line { function: String, line: u32 },
    Branch { branch: u32, arm: BranchArm },
}

/// Error information from a direct function call probe.
#[derive(Debug, Clone, PartialEq)]
pub struct CallError {
    pub status: RunStatus,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallOutcome {
    pub result: Result<Value, CallError>,
    pub coverage: CoverageReport,
    pub steps_used: u64,
}

/// Execution context shared by all runs of one (program, helpers) pair.
pub struct TestRun<'a> {
    pub program: &'a Program,
    pub helpers: &'a [FunctionDecl],
    /// File label used in traces for test methods and helpers.
    pub suite_file: &'a str,
    pub step_budget: u64,
}

impl<'a> TestRun<'a> {
    pub fn new(program: &'a Program, helpers: &'a [FunctionDecl], suite_file: &'a str) -> Self {
        TestRun {
            program,
            helpers,
            suite_file,
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }

    pub fn with_budget(mut self, step_budget: u64) -> Self {
        self.step_budget = step_budget;
        self
    }

    /// Execute one test method body to completion or first failure.
    pub fn run_method(&self, method_name: &str, body: &Block) -> RunOutcome {
        self.run_method_inner(method_name, body, None)
    }

    /// Like [`run_method`](Self::run_method) but also returns the ordered
    /// event log.
    pub fn run_method_traced(&self, method_name: &str, body: &Block) -> (RunOutcome, Vec<ExecEvent>) {
        let mut events = Vec::new();
        let outcome = self.run_method_inner(method_name, body, Some(&mut events));
        (outcome, events)
    }

    fn run_method_inner(
        &self,
        method_name: &str,
        body: &Block,
        events: Option<&mut Vec<ExecEvent>>,
    ) -> RunOutcome {
        let mut interp = match Interp::new(self, method_name, events) {
            Ok(i) => i,
            Err(outcome) => return *outcome,
        };
        let result = interp.exec_block(body);
        interp.finish(result.map(|_| ()))
    }

    /// Call a program (or helper) function directly with the given argument
    /// values. Used by generators that need ground-truth return values and
    /// the coverage a call produces.
    pub fn call(&self, function: &str, args: &[Value]) -> CallOutcome {
        let mut interp = match Interp::new(self, "<call>", None) {
            Ok(i) => i,
            Err(outcome) => {
                return CallOutcome {
                    result: Err(CallError {
                        status: outcome.status,
                        message: outcome.message,
                    }),
                    coverage: outcome.coverage,
                    steps_used: outcome.steps_used,
                }
            }
        };
        let call_span = Span { line: 1, col: 1 };
        let result = interp.call_function(function, args.to_vec(), call_span);
        let steps_used = interp.steps;
        let coverage = interp.coverage.clone();
        match result {
            Ok(value) => CallOutcome {
                result: Ok(value),
                coverage,
                steps_used,
            },
            Err(interrupt) => {
                let outcome = interp.finish(Err(interrupt));
                CallOutcome {
                    result: Err(CallError {
                        status: outcome.status,
                        message: outcome.message,
                    }),
                    coverage: outcome.coverage,
                    steps_used: outcome.steps_used,
                }
            }
        }
    }
}

enum Control {
    Normal,
    Return(Value),
}

/// Non-local exit carrying the frame snapshot taken where it was raised.
struct Interrupt {
    status: RunStatus,
    message: String,
    frames: Vec<FrameInfo>,
}

struct FunctionRef<'a> {
    decl: &'a FunctionDecl,
    file: &'a str,
    is_program: bool,
}

struct Frame {
    function: String,
    file: String,
    is_program: bool,
    current: Span,
    scopes: Vec<HashMap<String, Value>>,
}

struct Interp<'a, 'b> {
    run: &'a TestRun<'a>,
    table: HashMap<&'a str, FunctionRef<'a>>,
    frames: Vec<Frame>,
    coverage: CoverageReport,
    steps: u64,
    events: Option<&'b mut Vec<ExecEvent>>,
}

const BUILTINS: [&str; 3] = ["assert_eq", "assert_true", "assert_false"];

impl<'a, 'b> Interp<'a, 'b> {
    fn new(
        run: &'a TestRun<'a>,
        entry_name: &str,
        events: Option<&'b mut Vec<ExecEvent>>,
    ) -> Result<Self, Box<RunOutcome>> {
        let mut table: HashMap<&str, FunctionRef> = HashMap::new();
        for f in &run.program.functions {
            table.insert(
                f.name.as_str(),
                FunctionRef {
                    decl: f,
                    file: &run.program.source_path,
                    is_program: true,
                },
            );
        }
        for h in run.helpers {
            if table.contains_key(h.name.as_str()) {
                let coverage = CoverageReport::for_program(run.program);
                let frame = FrameInfo {
                    function: entry_name.to_string(),
                    file: run.suite_file.to_string(),
                    line: h.span.line,
                    col: h.span.col,
                };
                let message = format!("helper function `{}` shadows a program function", h.name);
                return Err(Box::new(RunOutcome {
                    status: RunStatus::RuntimeError,
                    trace: render_trace(RunStatus::RuntimeError, std::slice::from_ref(&frame)),
                    frames: vec![frame],
                    message,
                    coverage,
                    steps_used: 0,
                }));
            }
            table.insert(
                h.name.as_str(),
                FunctionRef {
                    decl: h,
                    file: run.suite_file,
                    is_program: false,
                },
            );
        }
        let entry_frame = Frame {
            function: entry_name.to_string(),
            file: run.suite_file.to_string(),
            is_program: false,
            current: Span { line: 1, col: 1 },
            scopes: vec![HashMap::new()],
        };
        Ok(Interp {
            run,
            table,
            frames: vec![entry_frame],
            coverage: CoverageReport::for_program(run.program),
            steps: 0,
            events,
        })
    }

    fn finish(self, result: Result<(), Interrupt>) -> RunOutcome {
        match result {
            Ok(()) => RunOutcome {
                status: RunStatus::Pass,
                message: String::new(),
                trace: String::new(),
                frames: Vec::new(),
                coverage: self.coverage,
                steps_used: self.steps,
            },
            Err(interrupt) => RunOutcome {
                status: interrupt.status,
                trace: render_trace(interrupt.status, &interrupt.frames),
                frames: interrupt.frames,
                message: interrupt.message,
                coverage: self.coverage,
                steps_used: self.steps,
            },
        }
    }

    fn snapshot_frames(&self) -> Vec<FrameInfo> {
        self.frames
            .iter()
            .rev()
            .map(|f| FrameInfo {
                function: f.function.clone(),
                file: f.file.clone(),
                line: f.current.line,
                col: f.current.col,
            })
            .collect()
    }

    fn raise(&self, status: RunStatus, message: impl Into<String>) -> Interrupt {
        Interrupt {
            status,
            message: message.into(),
            frames: self.snapshot_frames(),
        }
    }

    fn runtime(&self, message: impl Into<String>) -> Interrupt {
        self.raise(RunStatus::RuntimeError, message)
    }

    fn consume_step(&mut self) -> Result<(), Interrupt> {
        if self.steps >= self.run.step_budget {
            return Err(self.raise(
                RunStatus::StepBudgetExceeded,
                format!("step budget of {} statements exceeded", self.run.step_budget),
            ));
        }
        self.steps += 1;
        Ok(())
    }

    fn in_program_code(&self) -> bool {
        self.frames.last().map(|f| f.is_program).unwrap_or(false)
    }

    fn record_line(&mut self, line: u32) {
        if self.in_program_code() {
            let function = self.frames.last().unwrap().function.clone();
            self.coverage.record_line(&function, line);
            if let Some(events) = self.events.as_deref_mut() {
                events.push(ExecEvent::Line { function, line });
            }
        }
    }

    fn record_branch(&mut self, branch: u32, arm: BranchArm) {
        if self.in_program_code() {
            self.coverage.record_branch(branch, arm);
            if let Some(events) = self.events.as_deref_mut() {
                events.push(ExecEvent::Branch { branch, arm });
            }
        }
    }

    fn set_current(&mut self, span: Span) {
        if let Some(f) = self.frames.last_mut() {
            f.current = span;
        }
    }

    fn exec_block(&mut self, block: &Block) -> Result<Control, Interrupt> {
        self.frames.last_mut().unwrap().scopes.push(HashMap::new());
        let mut result = Control::Normal;
        for stmt in &block.stmts {
            match self.exec_stmt(stmt)? {
                Control::Normal => {}
                ret @ Control::Return(_) => {
                    result = ret;
                    break;
                }
            }
        }
        self.frames.last_mut().unwrap().scopes.pop();
        Ok(result)
    }

    fn exec_stmt(&mut self, stmt: &Stmt) -> Result<Control, Interrupt> {
        self.set_current(stmt.span);
        self.consume_step()?;
        self.record_line(stmt.span.line);
        match &stmt.kind {
            StmtKind::Let { name, value } => {
                let v = self.eval(value)?;
                let frame = self.frames.last_mut().unwrap();
                frame.scopes.last_mut().unwrap().insert(name.clone(), v);
                Ok(Control::Normal)
            }
            StmtKind::Assign { name, value } => {
                let v = self.eval(value)?;
                let frame = self.frames.last_mut().unwrap();
                for scope in frame.scopes.iter_mut().rev() {
                    if let Some(slot) = scope.get_mut(name) {
                        *slot = v;
                        return Ok(Control::Normal);
                    }
                }
                Err(self.runtime(format!("undefined variable: {name}")))
            }
            StmtKind::If {
                branch,
                cond,
                then_block,
                else_block,
            } => {
                let taken = self.eval_condition(cond)?;
                self.record_branch(*branch, if taken { BranchArm::Then } else { BranchArm::Else });
                if taken {
                    self.exec_block(then_block)
                } else if let Some(else_block) = else_block {
                    self.exec_block(else_block)
                } else {
                    Ok(Control::Normal)
                }
            }
            StmtKind::While { branch, cond, body } => {
                loop {
                    self.set_current(stmt.span);
                    let taken = self.eval_condition(cond)?;
                    self.record_branch(*branch, if taken { BranchArm::Then } else { BranchArm::Else });
                    if !taken {
                        break;
                    }
                    if let ret @ Control::Return(_) = self.exec_block(body)? {
                        return Ok(ret);
                    }
                    // One step per iteration: the loop re-evaluates its
                    // condition, which is how empty bodies still burn budget.
                    self.set_current(stmt.span);
                    self.consume_step()?;
                }
                Ok(Control::Normal)
            }
            StmtKind::Return { value } => {
                let v = self.eval(value)?;
                Ok(Control::Return(v))
            }
            StmtKind::Expr { expr } => {
                self.eval(expr)?;
                Ok(Control::Normal)
            }
        }
    }

    fn eval_condition(&mut self, cond: &Expr) -> Result<bool, Interrupt> {
        match self.eval(cond)? {
            Value::Bool(b) => Ok(b),
            other => Err(self.runtime(format!(
                "type mismatch: condition must be boolean, got {}",
                other.type_name()
            ))),
        }
    }

    fn eval(&mut self, expr: &Expr) -> Result<Value, Interrupt> {
        match &expr.kind {
            ExprKind::Int(v) => Ok(Value::Int(*v)),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::Str(s) => Ok(Value::Str(s.clone())),
            ExprKind::Ident(name) => {
                let frame = self.frames.last().unwrap();
                for scope in frame.scopes.iter().rev() {
                    if let Some(v) = scope.get(name) {
                        return Ok(v.clone());
                    }
                }
                Err(self.runtime(format!("undefined variable: {name}")))
            }
            ExprKind::Unary { op, operand } => {
                let v = self.eval(operand)?;
                match (op, v) {
                    (UnaryOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                    (UnaryOp::Not, other) => Err(self.runtime(format!(
                        "type mismatch: `!` requires a boolean, got {}",
                        other.type_name()
                    ))),
                }
            }
            ExprKind::Binary { op, lhs, rhs } => self.eval_binary(*op, lhs, rhs),
            ExprKind::Call { callee, args } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a)?);
                }
                self.call_function(callee, values, expr.span)
            }
        }
    }

    fn eval_binary(&mut self, op: BinaryOp, lhs: &Expr, rhs: &Expr) -> Result<Value, Interrupt> {
        // Short-circuit logical operators evaluate the right side lazily.
        if matches!(op, BinaryOp::And | BinaryOp::Or) {
            let l = match self.eval(lhs)? {
                Value::Bool(b) => b,
                other => {
                    return Err(self.runtime(format!(
                        "type mismatch: `{}` requires booleans, got {}",
                        op.symbol(),
                        other.type_name()
                    )))
                }
            };
            if op == BinaryOp::And && !l {
                return Ok(Value::Bool(false));
            }
            if op == BinaryOp::Or && l {
                return Ok(Value::Bool(true));
            }
            return match self.eval(rhs)? {
                Value::Bool(b) => Ok(Value::Bool(b)),
                other => Err(self.runtime(format!(
                    "type mismatch: `{}` requires booleans, got {}",
                    op.symbol(),
                    other.type_name()
                ))),
            };
        }

        let l = self.eval(lhs)?;
        let r = self.eval(rhs)?;
        match op {
            BinaryOp::Eq => Ok(Value::Bool(self.values_equal(&l, &r)?)),
            BinaryOp::Ne => Ok(Value::Bool(!self.values_equal(&l, &r)?)),
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => {
                let (a, b) = self.int_operands(op, l, r)?;
                Ok(Value::Bool(match op {
                    BinaryOp::Lt => a < b,
                    BinaryOp::Le => a <= b,
                    BinaryOp::Gt => a > b,
                    BinaryOp::Ge => a >= b,
                    _ => unreachable!(),
                }))
            }
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => {
                let (a, b) = self.int_operands(op, l, r)?;
                let result = match op {
                    BinaryOp::Add => a.checked_add(b),
                    BinaryOp::Sub => a.checked_sub(b),
                    BinaryOp::Mul => a.checked_mul(b),
                    BinaryOp::Div => {
                        if b == 0 {
                            return Err(self.runtime("division by zero"));
                        }
                        a.checked_div(b)
                    }
                    BinaryOp::Mod => {
                        if b == 0 {
                            return Err(self.runtime("modulo by zero"));
                        }
                        a.checked_rem(b)
                    }
                    _ => unreachable!(),
                };
                match result {
                    Some(v) => Ok(Value::Int(v)),
                    None => Err(self.runtime("integer overflow")),
                }
            }
            BinaryOp::And | BinaryOp::Or => unreachable!(),
        }
    }

    fn int_operands(&self, op: BinaryOp, l: Value, r: Value) -> Result<(i64, i64), Interrupt> {
        match (l, r) {
            (Value::Int(a), Value::Int(b)) => Ok((a, b)),
            (l, r) => Err(self.runtime(format!(
                "type mismatch: `{}` requires integers, got {} and {}",
                op.symbol(),
                l.type_name(),
                r.type_name()
            ))),
        }
    }

    fn values_equal(&self, l: &Value, r: &Value) -> Result<bool, Interrupt> {
        match (l, r) {
            (Value::Int(a), Value::Int(b)) => Ok(a == b),
            (Value::Bool(a), Value::Bool(b)) => Ok(a == b),
            (Value::Str(a), Value::Str(b)) => Ok(a == b),
            (Value::Unit, Value::Unit) => Ok(true),
            (l, r) => Err(self.runtime(format!(
                "type mismatch: cannot compare {} and {}",
                l.type_name(),
                r.type_name()
            ))),
        }
    }

    fn call_function(
        &mut self,
        callee: &str,
        args: Vec<Value>,
        call_span: Span,
    ) -> Result<Value, Interrupt> {
        if BUILTINS.contains(&callee) {
            return self.call_builtin(callee, args);
        }
        let (decl, file, is_program) = match self.table.get(callee) {
            Some(f) => (f.decl, f.file.to_string(), f.is_program),
            None => return Err(self.runtime(format!("undefined function: {callee}"))),
        };
        if args.len() != decl.params.len() {
            return Err(self.runtime(format!(
                "call arity mismatch: {callee} expects {} arguments, got {}",
                decl.params.len(),
                args.len()
            )));
        }
        if self.frames.len() >= MAX_CALL_DEPTH {
            return Err(self.runtime(format!(
                "call depth exceeded ({MAX_CALL_DEPTH} frames)"
            )));
        }
        // Remember where the call happened for the caller's trace frame.
        self.set_current(call_span);
        let mut root_scope = HashMap::new();
        for (param, value) in decl.params.iter().zip(args) {
            root_scope.insert(param.clone(), value);
        }
        self.frames.push(Frame {
            function: decl.name.clone(),
            file,
            is_program,
            current: decl.span,
            scopes: vec![root_scope],
        });
        let result = self.exec_block(&decl.body);
        self.frames.pop();
        match result? {
            Control::Return(v) => Ok(v),
            Control::Normal => Ok(Value::Unit),
        }
    }

    fn call_builtin(&mut self, name: &str, args: Vec<Value>) -> Result<Value, Interrupt> {
        match name {
            "assert_eq" => {
                if args.len() != 2 {
                    return Err(self.runtime(format!(
                        "call arity mismatch: assert_eq expects 2 arguments, got {}",
                        args.len()
                    )));
                }
                let equal = self.values_equal(&args[0], &args[1])?;
                if equal {
                    Ok(Value::Unit)
                } else {
                    Err(self.raise(
                        RunStatus::AssertionFailure,
                        format!("assert_eq failed: expected {}, actual {}", args[1], args[0]),
                    ))
                }
            }
            "assert_true" | "assert_false" => {
                if args.len() != 1 {
                    return Err(self.runtime(format!(
                        "call arity mismatch: {name} expects 1 argument, got {}",
                        args.len()
                    )));
                }
                let actual = match &args[0] {
                    Value::Bool(b) => *b,
                    other => {
                        return Err(self.runtime(format!(
                            "type mismatch: {name} requires a boolean, got {}",
                            other.type_name()
                        )))
                    }
                };
                let expected = name == "assert_true";
                if actual == expected {
                    Ok(Value::Unit)
                } else {
                    Err(self.raise(
                        RunStatus::AssertionFailure,
                        format!("{name} failed: expected {expected}, actual {actual}"),
                    ))
                }
            }
            _ => unreachable!(),
        }
    }
}

fn render_trace(status: RunStatus, frames: &[FrameInfo]) -> String {
    let mut out = String::new();
    if let Some(first) = frames.first() {
        out.push_str(&format!(
            "ERROR {} at {}:{}:{} in {}\n",
            status.kind_str(),
            first.file,
            first.line,
            first.col,
            first.function
        ));
        for frame in frames {
            out.push_str(&format!(
                "    at {}:{}:{} in {}\n",
                frame.file, frame.line, frame.col, frame.function
            ));
        }
    }
    out
}
