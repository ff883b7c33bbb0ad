use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const SYSTEM_PROMPT: &str = include_str!("../../assets/prompts/system.txt");
pub const GAME_PROMPT: &str = include_str!("../../assets/prompts/game.txt");
pub const INSTRUCTION_TEMPLATE: &str = include_str!("../../assets/prompts/instruct.txt");
pub const GAME_STATE_EXAMPLE: &str = include_str!("../../assets/prompts/state_example.txt");
pub const ASSIGNED_TASKS_EXAMPLE: &str = include_str!("../../assets/prompts/tasks_example.txt");
pub const GENERATOR_OUTPUT: &str = include_str!("../../assets/prompts/generator_output.txt");
pub const REFLECTION_OUTPUT: &str = include_str!("../../assets/prompts/reflection_output.txt");
pub const TOM_OUTPUT: &str = include_str!("../../assets/prompts/tom_output.txt");
pub const ACT_OUTPUT: &str = include_str!("../../assets/prompts/act_output.txt");
pub const REACT_OUTPUT: &str = include_str!("../../assets/prompts/react_output.txt");
pub const REFLEXION_OUTPUT: &str = include_str!("../../assets/prompts/reflexion_output.txt");

/// Bumped whenever a template asset or the rendering below changes.
pub const TEMPLATE_VERSION: u32 = 1;

/// Describes the belief input in the instruction's input list.
pub const INFERRED_HUMAN_PROMPT: &str =
    "**Inferred Human Behavior**:\n    - The inference on the human player's behavior pattern based on the game history.";

/// Heading of the belief block inside the input section.
pub const BELIEF_HEADING: &str = "**Inferred Human Behavior**:";

/// Which output contract a prompt ends with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputKind {
    Generator,
    Reflection,
    Tom,
    Act,
    React,
    Reflexion,
}

impl OutputKind {
    fn template(self) -> &'static str {
        match self {
            OutputKind::Generator => GENERATOR_OUTPUT,
            OutputKind::Reflection => REFLECTION_OUTPUT,
            OutputKind::Tom => TOM_OUTPUT,
            OutputKind::Act => ACT_OUTPUT,
            OutputKind::React => REACT_OUTPUT,
            OutputKind::Reflexion => REFLEXION_OUTPUT,
        }
    }
}

/// A chat request: one system message and one user message.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

/// Everything substituted into the instruction's input section.
#[derive(Debug, Clone, Copy)]
pub struct PromptInput<'a> {
    pub history: &'a str,
    pub assigned_tasks: &'a str,
    pub guidelines: Option<&'a str>,
    /// Whether the prompt carries the belief sections at all.
    pub tom: bool,
    pub belief: Option<&'a str>,
    /// Diagnostics from earlier rejected outputs.
    pub feedback: &'a [String],
}

fn fill(template: &str, pairs: &[(&str, &str)]) -> String {
    let mut out = String::from(template);
    for (key, value) in pairs {
        out = out.replace(key, value);
    }
    out
}

/// The belief block of the input section, including its leading separator.
pub fn belief_block(belief: Option<&str>) -> String {
    alloc::format!("\n\n{BELIEF_HEADING}\n{}", belief.unwrap_or("None"))
}

pub fn render_input(input: &PromptInput<'_>) -> String {
    let mut s = String::new();
    s.push_str("**Game History**:\n");
    s.push_str(input.history);
    s.push_str("\n\n**Current Assigned Tasks**:\n");
    s.push_str(input.assigned_tasks);
    s.push_str("\n\n**Behavior Guidelines**:\n");
    s.push_str(input.guidelines.unwrap_or("None"));
    if input.tom {
        s.push_str(&belief_block(input.belief));
    }
    if !input.feedback.is_empty() {
        s.push_str("\n\n**Feedback**:");
        for f in input.feedback {
            s.push_str("\n- ");
            s.push_str(f);
        }
    }
    s
}

/// Renders the instruction with every placeholder substituted.
pub fn render_instruction(input: &PromptInput<'_>) -> String {
    let rendered = render_input(input);
    fill(
        INSTRUCTION_TEMPLATE,
        &[
            ("{MESSAGE_PROMPT}", ""),
            ("{INFERRED_HUMAN_PROMPT}", if input.tom { INFERRED_HUMAN_PROMPT } else { "" }),
            ("{GAME_STATE_EXAMPLE}", GAME_STATE_EXAMPLE.trim_end()),
            ("{ASSIGNED_TASKS_EXAMPLE}", ASSIGNED_TASKS_EXAMPLE.trim_end()),
            ("{LATEST_MESSAGE_PROMPT}", ""),
            ("{FEW_SHOT_EXAMPLE}", ""),
            // Last, so text inside the input is never treated as a placeholder.
            ("{INPUT}", &rendered),
        ],
    )
}

pub fn render_output(kind: OutputKind) -> String {
    let body = fill(kind.template(), &[("{MESSAGE_OUTPUT_FORMAT}", "")]);
    match kind {
        // The belief contract ships without a heading of its own.
        OutputKind::Tom => alloc::format!("# OutputFormat\n\n{body}"),
        _ => body,
    }
}

/// Game introduction, instruction and output contract, in that order.
pub fn render_prompt(kind: OutputKind, input: &PromptInput<'_>) -> Prompt {
    let parts: Vec<String> = [String::from(GAME_PROMPT), render_instruction(input), render_output(kind)]
        .into_iter()
        .map(|p| String::from(p.trim_end_matches('\n')))
        .collect();
    let mut user = parts.join("\n\n");
    user.push('\n');
    Prompt { system: String::from(SYSTEM_PROMPT.trim_end()), user }
}
