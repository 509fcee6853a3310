//! End-to-end document processing: the two-step prompting loop with
//! structure validation and bounded regeneration, plus a deterministic
//! parallel runner over whole corpora.

use crate::analysis::{select_analysis_method, type_cells};
use crate::backend::{
    Backend, BackendError, BackendRequest, GenerationParams, PipelineStep, RequestTag,
};
use crate::model::{Locale, TableDocument};
use crate::preprocess::{
    expand_merged_cells, filter_related, infer_headers, to_key_value_records, PreprocessError,
};
use crate::prompt::{
    build_generation_prompt, build_recognition_prompt, corrective_instruction, PromptOptions,
    TemplateError, TemplateSet,
};
use crate::tx::{parse_tx_summary, validate_tx};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("document {id:?}: {source}")]
    Preprocess {
        id: String,
        #[source]
        source: PreprocessError,
    },
    #[error("document {id:?} ({step}): {source}")]
    Backend {
        id: String,
        step: PipelineStep,
        #[source]
        source: BackendError,
    },
    #[error("document {id:?}: {source}")]
    Template {
        id: String,
        #[source]
        source: TemplateError,
    },
}

/// Everything a run needs beyond the backend itself.
#[derive(Debug, Clone)]
pub struct PipelineSettings {
    pub locale: Locale,
    pub options: PromptOptions,
    /// Regeneration attempts allowed after a failed validation.
    pub max_regeneration: u32,
    pub params: GenerationParams,
    pub templates: TemplateSet,
    pub glossary: String,
}

impl PipelineSettings {
    pub fn new(locale: Locale) -> Self {
        PipelineSettings {
            locale,
            options: PromptOptions::default(),
            max_regeneration: 1,
            params: GenerationParams::default(),
            templates: TemplateSet::bundled(locale),
            glossary: String::new(),
        }
    }
}

/// The outcome for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub document_id: String,
    pub step1_output: String,
    pub final_summary: String,
    pub tx_valid: bool,
    pub failure_reason: Option<String>,
}

/// One prompt as sent to the backend, for audit logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptLogEntry {
    pub document_id: String,
    pub step: PipelineStep,
    pub attempt: u32,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub record: GenerationRecord,
    pub prompts: Vec<PromptLogEntry>,
}

/// Run both steps for one document: preprocess and plan, ask for data
/// recognition, then ask for the sentence, re-asking with a corrective
/// instruction while validation fails and attempts remain.
pub fn run_pipeline(
    doc: &TableDocument,
    backend: &dyn Backend,
    settings: &PipelineSettings,
) -> Result<PipelineOutput, PipelineError> {
    let id = doc.id.clone();
    let preprocess_err = |source| PipelineError::Preprocess {
        id: id.clone(),
        source,
    };
    let grid = infer_headers(expand_merged_cells(&doc.cells).map_err(preprocess_err)?);
    let records = to_key_value_records(&grid, &doc.highlighted_cells);
    let filtered =
        filter_related(&records, &grid, &doc.highlighted_cells).map_err(preprocess_err)?;
    let plan = select_analysis_method(type_cells(&filtered));

    let template_err = |source| PipelineError::Template {
        id: id.clone(),
        source,
    };
    let step1_prompt = build_recognition_prompt(
        &filtered,
        &plan,
        &doc.metadata,
        &settings.templates.step1,
        &settings.glossary,
    )
    .map_err(template_err)?;

    let mut prompts = vec![PromptLogEntry {
        document_id: id.clone(),
        step: PipelineStep::Recognition,
        attempt: 0,
        prompt: step1_prompt.clone(),
    }];

    let complete = |prompt: &str, step: PipelineStep, attempt: u32| {
        backend
            .complete(&BackendRequest {
                prompt: prompt.to_string(),
                params: settings.params.clone(),
                tag: Some(RequestTag {
                    document_id: id.clone(),
                    step,
                    attempt,
                }),
            })
            .map_err(|source| PipelineError::Backend {
                id: id.clone(),
                step,
                source,
            })
    };

    let step1_output = complete(&step1_prompt, PipelineStep::Recognition, 0)?.text;

    let base_prompt = build_generation_prompt(
        &step1_output,
        &doc.metadata,
        &settings.templates.step2,
        settings.options,
    )
    .map_err(template_err)?;

    let mut final_summary = String::new();
    let mut failed_checks: Vec<&str> = Vec::new();
    let mut tx_valid = false;
    for attempt in 0..=settings.max_regeneration {
        let prompt = if attempt == 0 {
            base_prompt.clone()
        } else {
            format!(
                "{base_prompt}\n\n{}",
                corrective_instruction(&failed_checks, settings.locale)
            )
        };
        prompts.push(PromptLogEntry {
            document_id: id.clone(),
            step: PipelineStep::Generation,
            attempt,
            prompt: prompt.clone(),
        });
        final_summary = complete(&prompt, PipelineStep::Generation, attempt)?
            .text
            .trim()
            .to_string();
        let summary = parse_tx_summary(&final_summary, settings.locale);
        let report = validate_tx(&summary, &doc.metadata.table_title);
        if report.valid {
            tx_valid = true;
            break;
        }
        failed_checks = report.failed_checks();
    }

    let failure_reason = if tx_valid {
        None
    } else {
        Some(format!(
            "tx validation failed: {}",
            failed_checks.join(", ")
        ))
    };
    Ok(PipelineOutput {
        record: GenerationRecord {
            document_id: id,
            step1_output,
            final_summary,
            tx_valid,
            failure_reason,
        },
        prompts,
    })
}

/// A corpus run's outcome. Documents that produced no usable records
/// become failure records rather than sinking the run; the first backend
/// or template failure aborts remaining work and is reported here with
/// whatever completed before it.
#[derive(Debug)]
pub struct CorpusRun {
    pub outputs: Vec<PipelineOutput>,
    pub fatal: Option<PipelineError>,
}

/// Process a corpus with `parallelism` worker threads. Results are merged
/// back in corpus order, so equal inputs give byte-equal outputs at any
/// thread count.
pub fn run_corpus(
    documents: &[TableDocument],
    backend: &dyn Backend,
    settings: &PipelineSettings,
    parallelism: usize,
) -> CorpusRun {
    assert!(parallelism >= 1, "parallelism must be at least 1");
    let workers = parallelism.min(documents.len().max(1));

    let next_index = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let slots: Vec<Mutex<Option<Result<PipelineOutput, PipelineError>>>> =
        documents.iter().map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if abort.load(Ordering::Relaxed) {
                    break;
                }
                let index = next_index.fetch_add(1, Ordering::Relaxed);
                if index >= documents.len() {
                    break;
                }
                let result = run_pipeline(&documents[index], backend, settings);
                if matches!(
                    result,
                    Err(PipelineError::Backend { .. } | PipelineError::Template { .. })
                ) {
                    abort.store(true, Ordering::Relaxed);
                }
                *slots[index].lock().expect("slot lock poisoned") = Some(result);
            });
        }
    });

    let mut outputs = Vec::with_capacity(documents.len());
    let mut fatal = None;
    for (slot, doc) in slots.into_iter().zip(documents) {
        let Some(result) = slot.into_inner().expect("slot lock poisoned") else {
            continue;
        };
        match result {
            Ok(output) => outputs.push(output),
            Err(err @ PipelineError::Preprocess { .. }) => {
                // A document with no extractable records still gets a
                // record, so batch runs keep going.
                outputs.push(PipelineOutput {
                    record: GenerationRecord {
                        document_id: doc.id.clone(),
                        step1_output: String::new(),
                        final_summary: String::new(),
                        tx_valid: false,
                        failure_reason: Some(err.to_string()),
                    },
                    prompts: Vec::new(),
                });
            }
            Err(err) => {
                if fatal.is_none() {
                    fatal = Some(err);
                }
            }
        }
    }
    CorpusRun { outputs, fatal }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{DocScript, FallbackMode, MockBackend, MockScript};
    use crate::model::{Coord, RawCell, TableMetadata};
    use std::collections::BTreeMap;

    fn cell(row: usize, col: usize, value: &str, is_header: bool) -> RawCell {
        RawCell {
            row,
            col,
            rowspan: 1,
            colspan: 1,
            value: value.into(),
            is_header,
        }
    }

    fn document(id: &str, title: &str) -> TableDocument {
        TableDocument {
            id: id.into(),
            metadata: TableMetadata {
                document_title: "report".into(),
                table_title: title.into(),
                publication_date: "2024-01-01".into(),
                publishing_org: "org".into(),
                source_url: "https://example.test".into(),
            },
            cells: vec![
                cell(0, 0, "Category", true),
                cell(0, 1, "Applications", true),
                cell(1, 0, "Total", true),
                cell(1, 1, "2,437", false),
            ],
            highlighted_cells: vec![Coord::new(1, 1)],
            reference_summary: None,
        }
    }

    const VALID_SENTENCE: &str =
        "According to the refugee status, applications reached 2,437 in total.";
    const INVALID_SENTENCE: &str = "Applications reached 2,437 in total";

    fn scripted(generation: Vec<&str>) -> MockBackend {
        let mut documents = BTreeMap::new();
        documents.insert(
            "d1".to_string(),
            DocScript {
                recognition: vec!["notes: applications 2,437".into()],
                generation: generation.into_iter().map(String::from).collect(),
            },
        );
        MockBackend::new(MockScript {
            fallback: FallbackMode::Error,
            documents,
        })
    }

    #[test]
    fn valid_first_attempt_needs_no_regeneration() {
        let doc = document("d1", "the refugee status");
        let backend = scripted(vec![VALID_SENTENCE]);
        let settings = PipelineSettings::new(Locale::En);
        let output = run_pipeline(&doc, &backend, &settings).unwrap();
        assert!(output.record.tx_valid);
        assert_eq!(output.record.final_summary, VALID_SENTENCE);
        assert_eq!(output.record.failure_reason, None);
        // One recognition prompt, one generation prompt.
        assert_eq!(output.prompts.len(), 2);
    }

    #[test]
    fn invalid_attempt_triggers_corrective_regeneration() {
        let doc = document("d1", "the refugee status");
        let backend = scripted(vec![INVALID_SENTENCE, VALID_SENTENCE]);
        let settings = PipelineSettings::new(Locale::En);
        let output = run_pipeline(&doc, &backend, &settings).unwrap();
        assert!(output.record.tx_valid);
        assert_eq!(output.record.final_summary, VALID_SENTENCE);
        assert_eq!(output.prompts.len(), 3);
        let retry_prompt = &output.prompts[2].prompt;
        assert!(retry_prompt.contains("failed these structure checks"));
        assert!(retry_prompt.contains("has_citation_expression"));
        // The corrective block extends the base prompt without changing it.
        assert!(retry_prompt.starts_with(&output.prompts[1].prompt));
    }

    #[test]
    fn exhausted_regeneration_reports_failure() {
        let doc = document("d1", "the refugee status");
        let backend = scripted(vec![INVALID_SENTENCE]);
        let settings = PipelineSettings::new(Locale::En);
        let output = run_pipeline(&doc, &backend, &settings).unwrap();
        assert!(!output.record.tx_valid);
        let reason = output.record.failure_reason.unwrap();
        assert!(reason.contains("has_citation_expression"), "{reason}");
        // Initial attempt plus max_regeneration retries.
        assert_eq!(output.prompts.len(), 2 + settings.max_regeneration as usize);
    }

    #[test]
    fn headers_only_document_errors_empty() {
        let mut doc = document("d1", "t");
        doc.cells = vec![cell(0, 0, "only header", true)];
        doc.highlighted_cells = vec![Coord::new(0, 0)];
        let backend = MockBackend::echo();
        let settings = PipelineSettings::new(Locale::En);
        let err = run_pipeline(&doc, &backend, &settings).unwrap_err();
        assert!(matches!(err, PipelineError::Preprocess { .. }));
    }

    #[test]
    fn corpus_run_converts_data_errors_and_keeps_order() {
        let mut empty_doc = document("empty", "t");
        empty_doc.cells = vec![cell(0, 0, "only header", true)];
        empty_doc.highlighted_cells = vec![Coord::new(0, 0)];
        let docs = vec![document("d1", "the refugee status"), empty_doc];

        let backend = scripted(vec![VALID_SENTENCE]);
        let settings = PipelineSettings::new(Locale::En);
        let run = run_corpus(&docs, &backend, &settings, 2);
        assert!(run.fatal.is_none());
        assert_eq!(run.outputs.len(), 2);
        assert_eq!(run.outputs[0].record.document_id, "d1");
        assert!(run.outputs[0].record.tx_valid);
        assert_eq!(run.outputs[1].record.document_id, "empty");
        assert!(!run.outputs[1].record.tx_valid);
        assert!(run.outputs[1]
            .record
            .failure_reason
            .as_deref()
            .unwrap()
            .contains("no highlighted data cell"));
    }

    #[test]
    fn corpus_run_is_deterministic_across_parallelism() {
        let docs: Vec<TableDocument> = vec![document("d1", "the refugee status")];
        let backend = scripted(vec![VALID_SENTENCE]);
        let settings = PipelineSettings::new(Locale::En);
        let a = run_corpus(&docs, &backend, &settings, 1);
        let b = run_corpus(&docs, &backend, &settings, 4);
        assert_eq!(a.outputs, b.outputs);
    }

    #[test]
    fn backend_failure_is_fatal() {
        let docs = vec![document("unscripted", "t")];
        let backend = scripted(vec![VALID_SENTENCE]);
        let settings = PipelineSettings::new(Locale::En);
        let run = run_corpus(&docs, &backend, &settings, 1);
        assert!(run.outputs.is_empty());
        assert!(matches!(run.fatal, Some(PipelineError::Backend { .. })));
    }
}
