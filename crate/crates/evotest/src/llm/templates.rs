//! Agent configuration matrix and prompt template catalog.
//!
//! Each generation agent pairs a sampling temperature with a system prompt
//! that pushes the model toward a different testing style. User-content
//! templates carry named `{placeholder}` slots; rendering fails when a
//! required placeholder is unbound or empty.

use std::collections::BTreeMap;

use super::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentId {
    A1,
    A2,
    A3,
    A4,
    A5,
}

impl AgentId {
    pub const ALL: [AgentId; 5] = [AgentId::A1, AgentId::A2, AgentId::A3, AgentId::A4, AgentId::A5];

    pub fn name(self) -> &'static str {
        match self {
            AgentId::A1 => "A1",
            AgentId::A2 => "A2",
            AgentId::A3 => "A3",
            AgentId::A4 => "A4",
            AgentId::A5 => "A5",
        }
    }

    pub fn index(self) -> usize {
        match self {
            AgentId::A1 => 0,
            AgentId::A2 => 1,
            AgentId::A3 => 2,
            AgentId::A4 => 3,
            AgentId::A5 => 4,
        }
    }

    pub fn template(self) -> TemplateId {
        match self {
            AgentId::A1 => TemplateId::GenA1,
            AgentId::A2 => TemplateId::GenA2,
            AgentId::A3 => TemplateId::GenA3,
            AgentId::A4 => TemplateId::GenA4,
            AgentId::A5 => TemplateId::GenA5,
        }
    }
}

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub id: AgentId,
    pub temperature: f64,
    pub strategy: &'static str,
    pub purpose: &'static str,
    pub system_template: TemplateId,
}

/// The five-agent configuration matrix: temperature and prompt strategy
/// paired to encourage diversity and robustness.
pub fn standard_agents() -> Vec<AgentConfig> {
    vec![
        AgentConfig {
            id: AgentId::A1,
            temperature: 0.3,
            strategy: "Standard unit testing",
            purpose: "Reliable structure",
            system_template: TemplateId::GenA1,
        },
        AgentConfig {
            id: AgentId::A2,
            temperature: 0.6,
            strategy: "Emphasize assertion diversity",
            purpose: "Broader observation",
            system_template: TemplateId::GenA2,
        },
        AgentConfig {
            id: AgentId::A3,
            temperature: 0.8,
            strategy: "'Try hard' creative agent",
            purpose: "Path and value exploration",
            system_template: TemplateId::GenA3,
        },
        AgentConfig {
            id: AgentId::A4,
            temperature: 0.5,
            strategy: "Focus on edge conditions",
            purpose: "Boundary case detection",
            system_template: TemplateId::GenA4,
        },
        AgentConfig {
            id: AgentId::A5,
            temperature: 0.4,
            strategy: "Uses long object chains",
            purpose: "Deeper semantic chains",
            system_template: TemplateId::GenA5,
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateId {
    GenA1,
    GenA2,
    GenA3,
    GenA4,
    GenA5,
    Repair,
    CoverageEnhance,
    Mutator,
}

impl TemplateId {
    pub fn name(self) -> &'static str {
        match self {
            TemplateId::GenA1 => "gen_A1",
            TemplateId::GenA2 => "gen_A2",
            TemplateId::GenA3 => "gen_A3",
            TemplateId::GenA4 => "gen_A4",
            TemplateId::GenA5 => "gen_A5",
            TemplateId::Repair => "repair",
            TemplateId::CoverageEnhance => "coverage_enhance",
            TemplateId::Mutator => "mutator",
        }
    }

    pub fn is_generation(self) -> bool {
        matches!(
            self,
            TemplateId::GenA1
                | TemplateId::GenA2
                | TemplateId::GenA3
                | TemplateId::GenA4
                | TemplateId::GenA5
        )
    }

    /// Placeholders that must be bound and non-empty.
    pub fn required_placeholders(self) -> &'static [&'static str] {
        match self {
            TemplateId::GenA1
            | TemplateId::GenA2
            | TemplateId::GenA3
            | TemplateId::GenA4
            | TemplateId::GenA5 => &[FOCAL_METHODS, SOURCE_CODE],
            TemplateId::Repair => &[STACKTRACE, TEST_METHOD],
            TemplateId::CoverageEnhance => &[FOCAL_METHODS, SOURCE_CODE, COVERAGE_REPORT],
            TemplateId::Mutator => &[TEST_METHOD, SOURCE_CODE],
        }
    }

    /// Placeholders that may be empty or absent; they render as "".
    pub fn optional_placeholders(self) -> &'static [&'static str] {
        match self {
            TemplateId::Mutator => &[HELPERS],
            _ => &[],
        }
    }
}

impl std::fmt::Display for TemplateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub const FOCAL_METHODS: &str = "focal_methods";
pub const SOURCE_CODE: &str = "source_code";
pub const STACKTRACE: &str = "stacktrace";
pub const COVERAGE_REPORT: &str = "coverage_report";
pub const TEST_METHOD: &str = "test_method";
pub const HELPERS: &str = "helpers";

/// Section headers used in rendered user content. The mock backend splits
/// prompts on these exact lines, so they are part of the wire format.
pub mod sections {
    pub const FOCAL_FUNCTIONS: &str = "Focal functions:";
    pub const SOURCE_CODE: &str = "Source code:";
    pub const COVERAGE_REPORT: &str = "Coverage report:";
    pub const TEST_SUITE: &str = "Test suite:";
    pub const TEST_METHOD: &str = "Test method:";
    pub const HELPER_FUNCTIONS: &str = "Helper functions:";

    pub const ALL: [&str; 6] = [
        FOCAL_FUNCTIONS,
        SOURCE_CODE,
        COVERAGE_REPORT,
        TEST_SUITE,
        TEST_METHOD,
        HELPER_FUNCTIONS,
    ];
}

const GEN_USER_TEMPLATE: &str = "Focal functions:
{focal_methods}

Source code:
{source_code}
";

const REPAIR_USER_TEMPLATE: &str = "The generated test suite has encountered an error:

{stacktrace}

Test suite:
{test_method}

Modify the test code to fix it. Output the full corrected test file without markdown formatting.
";

const ENHANCE_USER_TEMPLATE: &str = "Focal functions:
{focal_methods}

Source code:
{source_code}

Coverage report:
{coverage_report}
";

const MUTATOR_USER_TEMPLATE: &str = "Test method:
{test_method}

Helper functions:
{helpers}

Source code:
{source_code}
";

pub fn user_template(template: TemplateId) -> &'static str {
    match template {
        t if t.is_generation() => GEN_USER_TEMPLATE,
        TemplateId::Repair => REPAIR_USER_TEMPLATE,
        TemplateId::CoverageEnhance => ENHANCE_USER_TEMPLATE,
        TemplateId::Mutator => MUTATOR_USER_TEMPLATE,
        _ => unreachable!(),
    }
}

/// Render a template's user content. Fails if any required placeholder is
/// unbound or bound to an empty string; optional placeholders default to
/// empty. No rewriting beyond substitution happens.
pub fn render(template: TemplateId, bindings: &BTreeMap<&str, String>) -> Result<String, LlmError> {
    let mut missing = Vec::new();
    for &name in template.required_placeholders() {
        match bindings.get(name) {
            Some(value) if !value.trim().is_empty() => {}
            _ => missing.push(name.to_string()),
        }
    }
    if !missing.is_empty() {
        return Err(LlmError::Template {
            template: template.name().to_string(),
            missing,
        });
    }
    let mut out = user_template(template).to_string();
    for &name in template
        .required_placeholders()
        .iter()
        .chain(template.optional_placeholders())
    {
        let marker = format!("{{{name}}}");
        let value = bindings.get(name).cloned().unwrap_or_default();
        out = out.replace(&marker, &value);
    }
    Ok(out)
}

pub fn agent_system_prompt(agent: AgentId) -> &'static str {
    match agent {
        AgentId::A1 => SYSTEM_A1,
        AgentId::A2 => SYSTEM_A2,
        AgentId::A3 => SYSTEM_A3,
        AgentId::A4 => SYSTEM_A4,
        AgentId::A5 => SYSTEM_A5,
    }
}

pub fn system_prompt(template: TemplateId) -> &'static str {
    match template {
        TemplateId::GenA1 => SYSTEM_A1,
        TemplateId::GenA2 => SYSTEM_A2,
        TemplateId::GenA3 => SYSTEM_A3,
        TemplateId::GenA4 => SYSTEM_A4,
        TemplateId::GenA5 => SYSTEM_A5,
        TemplateId::Repair => SYSTEM_A1,
        TemplateId::CoverageEnhance => SYSTEM_ENHANCE,
        TemplateId::Mutator => SYSTEM_MUTATOR,
    }
}

const SYSTEM_A1: &str = "You act as a unit test case generator, with \
meaningful assertions for MiniLang programs. \
Your task is to generate a MiniLang test file for MiniLang programs.

I will provide the following information of the focal function:

1. A list of the focal functions to test.
2. The source code of the the functions.

You are required to:

1. Cover as many branches as possible in the \"focal function\" (Branch Coverage).
2. Write the meaningful assertions.
3. If you suspect a section of the code to be vulnerable to mutations, write \
a meaningful assertion or whole test to catch it.
4. Declare each test as `test name() { ... }` and use only the built-in \
assertions assert_eq(actual, expected), assert_true(cond), assert_false(cond).
5. Ensure the test file parses without errors.
6. Write tests ONLY for the focal functions in the provided functions list.
7. *All helper functions used within the test must be defined as plain `fn` \
functions in the same file. Do not call undefined functions.*
8. Output the unit test code without markdown formatting (```).

No additional explanations required.";

const SYSTEM_A2: &str = "You act as a unit test case generator, \
with meaningful assertions for MiniLang programs.

Your task is to generate a MiniLang test file for MiniLang programs.

I will provide the following information of the focal function:

1. A list of the focal functions to test.
2. The source code of the the functions.

You are required to:

1. Cover all reachable branches, but prioritize writing multiple strong and \
diverse assertions that verify:
   - Return values
   - Results of calling related focal functions
   - Behavior across related inputs
2. Maximize the use of assertions in every test case, checking both normal \
and edge values.
3. If you suspect a section of the code to be vulnerable to mutations, write \
a meaningful assertion or whole test to catch it.
4. Declare each test as `test name() { ... }` and use only the built-in \
assertions assert_eq(actual, expected), assert_true(cond), assert_false(cond).
5. Ensure the test file parses without errors.
6. Write tests ONLY for the focal functions in the provided functions list.
7. *All helper functions used within the test must be defined as plain `fn` \
functions in the same file. Do not call undefined functions.*
8. Output the unit test code without markdown formatting (```).

No additional explanations required.";

const SYSTEM_A3: &str = "You act as a unit test case generator, with \
meaningful assertions for MiniLang programs. \
Your task is to generate a MiniLang test file for MiniLang programs.

I will provide the following information of the focal function:

1. A list of the focal functions to test.
2. The source code of the the functions.

You are required to:

1. Cover reachable branches, but focus primarily on bug-catching logic.
2. Write the meaningful assertions.
3. Analyze the function for sections that may be prone to logic errors, \
misuse of conditionals, or potential edge case failures. Write full test \
cases specifically to **expose potential bugs**, even if coverage is low.
4. Declare each test as `test name() { ... }` and use only the built-in \
assertions assert_eq(actual, expected), assert_true(cond), assert_false(cond).
5. Ensure the test file parses without errors.
6. Write tests ONLY for the focal functions in the provided functions list.
7. *All helper functions used within the test must be defined as plain `fn` \
functions in the same file. Do not call undefined functions.*
8. Output the unit test code without markdown formatting (```).

No additional explanations required.";

const SYSTEM_A4: &str = "You act as a unit test case generator, with \
meaningful assertions for MiniLang programs. \
Your task is to generate a MiniLang test file for MiniLang programs.

I will provide the following information of the focal function:

1. A list of the focal functions to test.
2. The source code of the the functions.

You are required to:

1. Focus on edge cases and boundary values that may trigger hidden bugs or \
exceptional paths. For example: zero, negative numbers, values that sit \
exactly on comparison boundaries, equal arguments, empty strings.
2. Each test should target one edge condition at a time.
3. If you suspect a section of the code to contain bugs, write a meaningful \
assertion or whole test to catch it.
4. Declare each test as `test name() { ... }` and use only the built-in \
assertions assert_eq(actual, expected), assert_true(cond), assert_false(cond).
5. Ensure the test file parses without errors.
6. Write tests ONLY for the focal functions in the provided functions list.
7. *All helper functions used within the test must be defined as plain `fn` \
functions in the same file. Do not call undefined functions.*
8. Output the unit test code without markdown formatting (```).

No additional explanations required.";

const SYSTEM_A5: &str = "You act as a unit test case generator, with \
meaningful assertions for MiniLang programs. \
Your task is to generate a MiniLang test file for MiniLang programs.

I will provide the following information of the focal function:
1. A list of the focal functions to test.
2. The source code of the the functions.

You are required to:
1. Cover **as many branches as possible** in the focal functions using the \
fewest number of test cases.
2. Write exactly one assertion per test method — pick the one that validates \
the key condition.
3. Prefer reaching the focal functions through helper functions that chain \
calls together, rather than redundant or overly detailed checks.
4. Declare each test as `test name() { ... }` and use only the built-in \
assertions assert_eq(actual, expected), assert_true(cond), assert_false(cond).
5. Ensure the test file parses without errors.
6. Write tests ONLY for the focal functions in the provided functions list.
7. *All helper functions used within the test must be defined as plain `fn` \
functions in the same file. Do not call undefined functions.*
8. Output the unit test code without markdown formatting (```).

No additional explanations required.";

const SYSTEM_ENHANCE: &str = "You are an AI Test Generation Agent responsible \
for improving test coverage by writing unit tests with meaningful assertions \
for MiniLang programs.
Your goal is to maximize branch coverage and line coverage by targeting \
untested or partially tested functions and missing branches.

* The following test coverage report has been generated by the MiniLang test \
runner.

* You will receive coverage information for the tested focal functions, \
including the missed lines and missed branch arms.

* Additionally, you will receive specific lines of code where missed branches \
occur, and the exact branch. Your instructions are the following:
1. Prioritize writing tests for low coverage functions
2. Use the missed branches report to create tests cases that exercise these \
code paths.
3. Generate a full test suite in MiniLang test syntax (`test name() { ... }` \
with assert_eq / assert_true / assert_false).
4. Do not call undefined functions.
5. Name each new test with the suffix _enhanced.
6. Ensure the test file parses without errors.
7. *All helper functions used within the test must be defined as plain `fn` \
functions in the same file.*
8. Output the unit test code without markdown formatting (```).
9. The test file should not redefine any program function.
No additional explanations required.";

const SYSTEM_MUTATOR: &str = "You are a mutation agent for evolutionary unit \
test generation.

Your role is to enhance the robustness of MiniLang unit test methods by \
intelligently adding new assertions. These additional assertions should \
verify more properties of the system under test (SUT), including outputs, \
results of related function calls, or observable side effects.

Follow these strict guidelines:

1. Preserve the original logic of the test. Do **not** modify or remove \
existing code.
2. Add **1 to 5 new assertions** that enhance the strength of the test by:
   - Checking additional return values.
   - Inspecting results of related focal functions.
   - Validating behavior on nearby inputs.
3. Prefer using **existing variables** and values in the test.
4. If a needed value is missing, you **may introduce new let bindings** \
within the test method, but only if:
   - They are directly relevant to additional assertions.
   - They do not significantly change the original test's intent.
5. You may use the built-in assertions (`assert_eq`, `assert_true`, \
`assert_false`).
6. Maintain consistent code style and indentation.
7. Do not explain the code. Only output the updated MiniLang test method.

You will be provided:

- The original MiniLang test method to mutate.
- The source code of the program under test.
- Optional helper functions used in the test.

Your output must be the **full, modified MiniLang test method, declared with \
`test`**, with the added assertions inserted logically and consistently \
within the method body. Output the test method code without markdown \
formatting (```).";
