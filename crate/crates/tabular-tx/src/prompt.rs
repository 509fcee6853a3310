//! Prompt templates and the two-step prompt builders.
//!
//! Step one asks the model to recognize the highlighted data: each record
//! with its header path, classification, and the selected analysis method.
//! Step two asks for the final single-sentence summary, optionally framed
//! by a journalist persona preamble and closed by a theme instruction that
//! pins the sentence opening. Both optional blocks attach as exact prefix
//! and suffix around the rendered template, so ablation runs differ only
//! in those bytes.

use crate::analysis::AnalysisPlan;
use crate::model::{Coord, Locale, TableMetadata};
use crate::preprocess::RelatedRecord;
use crate::tx::compose_theme_part;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template {name:?} uses unknown placeholder {{{placeholder}}}")]
    UnknownPlaceholder { name: String, placeholder: String },
    #[error("template {name:?} is missing required placeholder {{{placeholder}}}")]
    MissingPlaceholder { name: String, placeholder: String },
    #[error("template {name:?} left placeholder {{{placeholder}}} unresolved")]
    Unresolved { name: String, placeholder: String },
    #[error("template file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Placeholder names templates may reference. `{{` and `}}` escape
/// literal braces.
pub const KNOWN_PLACEHOLDERS: [&str; 5] = [
    "table_title",
    "records",
    "analysis_plan",
    "step1_output",
    "glossary",
];

/// A validated prompt template. Construction rejects unknown placeholders,
/// so a typo fails at load time rather than producing a malformed prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub locale: Locale,
    body: String,
}

/// Scan `{identifier}` placeholders, honouring `{{`/`}}` escapes.
fn placeholders(body: &str) -> Vec<String> {
    let mut found = Vec::new();
    let chars: Vec<char> = body.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '{' {
            if chars.get(i + 1) == Some(&'{') {
                i += 2;
                continue;
            }
            let end = (i + 1..chars.len()).find(|&j| chars[j] == '}');
            if let Some(end) = end {
                let name: String = chars[i + 1..end].iter().collect();
                if !name.is_empty()
                    && name
                        .chars()
                        .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
                {
                    found.push(name);
                    i = end + 1;
                    continue;
                }
            }
        } else if chars[i] == '}' && chars.get(i + 1) == Some(&'}') {
            i += 2;
            continue;
        }
        i += 1;
    }
    found
}

impl PromptTemplate {
    pub fn new(
        name: impl Into<String>,
        locale: Locale,
        body: impl Into<String>,
    ) -> Result<Self, TemplateError> {
        let name = name.into();
        let body = body.into();
        for placeholder in placeholders(&body) {
            if !KNOWN_PLACEHOLDERS.contains(&placeholder.as_str()) {
                return Err(TemplateError::UnknownPlaceholder { name, placeholder });
            }
        }
        Ok(PromptTemplate { name, locale, body })
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    /// Require a placeholder's presence, for step-specific contracts.
    fn require(&self, placeholder: &str) -> Result<(), TemplateError> {
        if placeholders(&self.body).iter().any(|p| p == placeholder) {
            Ok(())
        } else {
            Err(TemplateError::MissingPlaceholder {
                name: self.name.clone(),
                placeholder: placeholder.to_string(),
            })
        }
    }

    /// Substitute every placeholder. Fails if the context misses one the
    /// body references, so no prompt ever leaves with a hole in it.
    pub fn render(&self, context: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
        let mut out = String::with_capacity(self.body.len());
        let chars: Vec<char> = self.body.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            if chars[i] == '{' && chars.get(i + 1) == Some(&'{') {
                out.push('{');
                i += 2;
            } else if chars[i] == '}' && chars.get(i + 1) == Some(&'}') {
                out.push('}');
                i += 2;
            } else if chars[i] == '{' {
                let end = (i + 1..chars.len()).find(|&j| chars[j] == '}');
                let name: Option<String> = end.map(|e| chars[i + 1..e].iter().collect());
                let is_placeholder = name.as_deref().is_some_and(|n| {
                    !n.is_empty()
                        && n.chars()
                            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
                });
                if is_placeholder {
                    let name = name.expect("checked above");
                    let value =
                        context
                            .get(name.as_str())
                            .ok_or_else(|| TemplateError::Unresolved {
                                name: self.name.clone(),
                                placeholder: name.clone(),
                            })?;
                    out.push_str(value);
                    i = end.expect("checked above") + 1;
                } else {
                    // Not a placeholder: a lone brace stays literal.
                    out.push('{');
                    i += 1;
                }
            } else {
                out.push(chars[i]);
                i += 1;
            }
        }
        Ok(out)
    }
}

/// The step-one and step-two templates for one locale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub step1: PromptTemplate,
    pub step2: PromptTemplate,
}

impl TemplateSet {
    /// The templates compiled into the binary.
    pub fn bundled(locale: Locale) -> TemplateSet {
        let (step1, step2) = match locale {
            Locale::En => (
                include_str!("../templates/step1.en.txt"),
                include_str!("../templates/step2.en.txt"),
            ),
            Locale::Ko => (
                include_str!("../templates/step1.ko.txt"),
                include_str!("../templates/step2.ko.txt"),
            ),
        };
        let set = TemplateSet {
            step1: PromptTemplate::new(format!("step1.{locale}"), locale, step1)
                .expect("bundled template is valid"),
            step2: PromptTemplate::new(format!("step2.{locale}"), locale, step2)
                .expect("bundled template is valid"),
        };
        set.check_contracts().expect("bundled template is complete");
        set
    }

    /// Load `step1.{locale}.txt` and `step2.{locale}.txt` from a directory,
    /// for callers overriding the bundled prompts.
    pub fn from_dir(dir: impl AsRef<Path>, locale: Locale) -> Result<TemplateSet, TemplateError> {
        let dir = dir.as_ref();
        let read = |step: &str| -> Result<String, TemplateError> {
            let path = dir.join(format!("{step}.{locale}.txt"));
            std::fs::read_to_string(&path).map_err(|source| TemplateError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        let set = TemplateSet {
            step1: PromptTemplate::new(format!("step1.{locale}"), locale, read("step1")?)?,
            step2: PromptTemplate::new(format!("step2.{locale}"), locale, read("step2")?)?,
        };
        set.check_contracts()?;
        Ok(set)
    }

    /// Step one must take the records and plan; step two must take the
    /// step-one output. Both must cite the table title.
    pub fn check_contracts(&self) -> Result<(), TemplateError> {
        self.step1.require("table_title")?;
        self.step1.require("records")?;
        self.step1.require("analysis_plan")?;
        self.step2.require("table_title")?;
        self.step2.require("step1_output")?;
        Ok(())
    }
}

/// One line per record: header path, value, classification, and any
/// related header cells pulled in as context.
pub fn render_records(records: &[RelatedRecord], plan: &AnalysisPlan) -> String {
    let type_of = |coord: Coord| {
        plan.ordered_cells
            .iter()
            .find(|cell| cell.record.coordinate == coord)
            .map(|cell| cell.cell_type.as_str())
            .unwrap_or("unclassified")
    };
    let mut out = String::new();
    for related in records {
        let record = &related.record;
        if !out.is_empty() {
            out.push('\n');
        }
        let chain = if record.key_chain.is_empty() {
            record.coordinate.to_string()
        } else {
            record.key_chain.join(" > ")
        };
        let _ = write!(
            out,
            "- {chain}: {value} [{kind}]",
            value = record.value,
            kind = type_of(record.coordinate)
        );
        if !related.context.is_empty() {
            let headers: Vec<&str> = related.context.iter().map(|h| h.value.as_str()).collect();
            let _ = write!(out, " (related: {})", headers.join(", "));
        }
    }
    out
}

/// The analysis plan as one prompt line: the method name, plus the axis
/// for trend analyses.
pub fn render_plan(plan: &AnalysisPlan) -> String {
    match &plan.axis {
        Some(axis) => format!("{} (axis: {axis})", plan.method),
        None => plan.method.to_string(),
    }
}

/// Build the step-one data recognition prompt.
pub fn build_recognition_prompt(
    records: &[RelatedRecord],
    plan: &AnalysisPlan,
    metadata: &TableMetadata,
    template: &PromptTemplate,
    glossary: &str,
) -> Result<String, TemplateError> {
    template.require("records")?;
    let glossary_block = if glossary.trim().is_empty() {
        String::new()
    } else {
        let label = match template.locale {
            Locale::En => "Domain glossary:",
            Locale::Ko => "용어 설명:",
        };
        format!("{label}\n{}\n", glossary.trim_end())
    };
    let mut context = BTreeMap::new();
    context.insert("table_title", metadata.table_title.clone());
    context.insert("records", render_records(records, plan));
    context.insert("analysis_plan", render_plan(plan));
    context.insert("glossary", glossary_block);
    template.render(&context)
}

/// Persona preamble placed before the step-two prompt when enabled.
pub fn persona_preamble(locale: Locale) -> &'static str {
    match locale {
        Locale::En => {
            "You are a newspaper journalist writing straight news. Report only the \
             facts provided, concisely and objectively."
        }
        Locale::Ko => {
            "당신은 스트레이트 기사를 쓰는 신문 기자입니다. 제공된 사실만을 \
             간결하고 객관적으로 보도하세요."
        }
    }
}

/// Theme instruction appended after the step-two prompt when enabled:
/// pins the sentence to open with the composed theme part.
pub fn theme_instruction(table_title: &str, locale: Locale) -> String {
    let rendered = match compose_theme_part(table_title, locale) {
        Ok(theme) => theme.rendered,
        Err(_) => String::new(),
    };
    match locale {
        Locale::En => format!(
            "Begin the sentence with the exact phrase \"{rendered}\" and follow it \
             with one clause explaining the highlighted values."
        ),
        Locale::Ko => format!(
            "문장은 반드시 \"{rendered}\"(으)로 시작하고, 이어서 강조된 값을 \
             설명하는 하나의 절을 작성하세요."
        ),
    }
}

/// Toggles for the step-two prompt frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptOptions {
    pub persona: bool,
    pub theme_instruction: bool,
}

impl Default for PromptOptions {
    fn default() -> Self {
        PromptOptions {
            persona: true,
            theme_instruction: true,
        }
    }
}

/// Build the step-two sentence generation prompt. The persona block is an
/// exact prefix and the theme instruction an exact suffix, each separated
/// by one blank line, so disabling either changes nothing else.
pub fn build_generation_prompt(
    step1_output: &str,
    metadata: &TableMetadata,
    template: &PromptTemplate,
    options: PromptOptions,
) -> Result<String, TemplateError> {
    template.require("step1_output")?;
    let mut context = BTreeMap::new();
    context.insert("table_title", metadata.table_title.clone());
    context.insert("step1_output", step1_output.to_string());
    context.insert("glossary", String::new());
    let body = template.render(&context)?;

    let mut prompt = String::new();
    if options.persona {
        prompt.push_str(persona_preamble(template.locale));
        prompt.push_str("\n\n");
    }
    prompt.push_str(&body);
    if options.theme_instruction {
        prompt.push_str("\n\n");
        prompt.push_str(&theme_instruction(&metadata.table_title, template.locale));
    }
    Ok(prompt)
}

/// Instruction appended when regenerating after failed structure checks,
/// naming exactly what to fix.
pub fn corrective_instruction(failed_checks: &[&str], locale: Locale) -> String {
    let list = failed_checks.join(", ");
    match locale {
        Locale::En => format!(
            "The previous attempt failed these structure checks: {list}. \
             Rewrite the sentence so every check passes."
        ),
        Locale::Ko => format!(
            "이전 답변이 다음 구조 검사를 통과하지 못했습니다: {list}. \
             모든 검사를 통과하도록 문장을 다시 작성하세요."
        ),
    }
}
