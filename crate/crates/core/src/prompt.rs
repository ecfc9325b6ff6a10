//! Zero-shot classification prompt for a directed drug pair.
//!
//! Rendering rules: lines are joined with `\n` only, no line carries
//! trailing whitespace, list values are joined with `", "`, genes appear in
//! byte-wise sorted order (the gene index order) and organisms in catalog
//! order. A field whose list is empty renders as `Label:` with nothing
//! after the colon. Line breaks inside substituted values become spaces.

use crate::catalog::{Catalog, DrugRecord};
use crate::pairs::{DirectedPair, Label};

pub const SYSTEM_PROMPT: &str = "You are an expert in drug-drug interaction.\n\
Given two drugs, where the order of administration counts, the genes and organisms targeted by the two drugs and the SMILES formulas of the two drugs, classify whether their administration causes 'interaction' or 'no interaction.'\n\
Answer only with the classification ('interaction' or 'no interaction'), nothing else.";

pub const FINAL_LINE: &str = "CLASSIFICATION:";

pub const ANSWER_INTERACTION: &str = "interaction";
pub const ANSWER_NO_INTERACTION: &str = "no interaction";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("drug {0:?} is not in the catalog")]
    UnknownDrug(String),
    #[error("pair ({0}, {1}) has no label")]
    Unlabeled(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptExchange {
    pub system_text: String,
    pub user_text: String,
    /// Present only for training conversations.
    pub expected_assistant: Option<String>,
}

pub fn answer_for(label: Label) -> &'static str {
    match label {
        Label::Interaction => ANSWER_INTERACTION,
        Label::NoInteraction => ANSWER_NO_INTERACTION,
    }
}

fn clean(value: &str) -> String {
    value
        .split(['\r', '\n'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn field(out: &mut Vec<String>, label: String, value: String) {
    if value.is_empty() {
        out.push(format!("{label}:"));
    } else {
        out.push(format!("{label}: {value}"));
    }
}

fn drug_block(out: &mut Vec<String>, n: u8, drug: &DrugRecord) {
    let join = |items: &mut dyn Iterator<Item = &String>| {
        items.map(|s| clean(s)).filter(|s| !s.is_empty()).collect::<Vec<_>>().join(", ")
    };
    let slot = format!("drug{n}");
    field(out, format!("Drug{n}"), clean(drug.display_name()));
    field(out, format!("SMILES for {slot}"), clean(&drug.smiles));
    field(out, format!("Organism targeted by {slot}"), join(&mut drug.organisms.iter()));
    field(out, format!("Genes targeted by {slot}"), join(&mut drug.target_genes.iter()));
}

pub fn render_user_text(drug1: &DrugRecord, drug2: &DrugRecord) -> String {
    let mut lines = Vec::with_capacity(9);
    drug_block(&mut lines, 1, drug1);
    drug_block(&mut lines, 2, drug2);
    lines.push(FINAL_LINE.to_string());
    lines.join("\n")
}

fn resolve<'c>(catalog: &'c Catalog, id: &str) -> Result<&'c DrugRecord, PromptError> {
    catalog
        .get(id)
        .ok_or_else(|| PromptError::UnknownDrug(id.to_string()))
}

pub fn build_zero_shot(pair: &DirectedPair, catalog: &Catalog) -> Result<PromptExchange, PromptError> {
    let d1 = resolve(catalog, &pair.drug1)?;
    let d2 = resolve(catalog, &pair.drug2)?;
    Ok(PromptExchange {
        system_text: SYSTEM_PROMPT.to_string(),
        user_text: render_user_text(d1, d2),
        expected_assistant: None,
    })
}

pub fn build_training_conversation(
    pair: &DirectedPair,
    catalog: &Catalog,
) -> Result<PromptExchange, PromptError> {
    let label = pair
        .label
        .ok_or_else(|| PromptError::Unlabeled(pair.drug1.clone(), pair.drug2.clone()))?;
    let mut ex = build_zero_shot(pair, catalog)?;
    ex.expected_assistant = Some(answer_for(label).to_string());
    Ok(ex)
}
