//! Lexical, syntactic and semantic wheat, one of each.
//!
//!     cargo run --example classify

use wheacha::analysis::classify_wheat;
use wheacha::corpus::{edge_rule, monotone_rules};
use wheacha::lang::Program;
use wheacha::model::Model;
use wheacha::mutate::{extract_wheat_with, ExtractOptions};
use wheacha::verify::{HeaderMode, QueryLedger, Verifier};

fn show(model: &dyn Model, source: &str) -> anyhow::Result<()> {
    let program = Program::parse(source)?;
    let ledger = QueryLedger::new();
    let verifier = Verifier::new(model, &program, &ledger, HeaderMode::MaskName)?;
    let wheat = extract_wheat_with(&verifier, &ExtractOptions::default())?;
    let class = classify_wheat(&verifier, &wheat)?;
    println!("{:<10} {:<30} {}", format!("{class:?}"), wheat.source().replace('\n', " "), source);
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let rules = monotone_rules().build()?;
    let edges = edge_rule().build()?;
    show(rules.as_ref(), "void f() { int n = put; log(n); }")?;
    show(rules.as_ref(), "void f() { x = y; items.add(x); }")?;
    show(edges.as_ref(), "int f() { total = a + b; log(c); return total; }")?;
    Ok(())
}
