//! Check by exhaustive search that no shorter candidate passes.
//!
//!     cargo run --example oracle

use wheacha::corpus::monotone_rules;
use wheacha::lang::Program;
use wheacha::mutate::{extract_wheat_with, ExtractOptions};
use wheacha::oracle::{brute_force_check, DEFAULT_TOKEN_LIMIT};
use wheacha::verify::{HeaderMode, QueryLedger, Verifier};

fn main() -> anyhow::Result<()> {
    let model = monotone_rules().build()?;
    let program = Program::parse("void store(int n) { items.add(n); log(n); }")?;
    let ledger = QueryLedger::new();
    let verifier = Verifier::new(model.as_ref(), &program, &ledger, HeaderMode::MaskName)?;
    let wheat = extract_wheat_with(&verifier, &ExtractOptions::default())?;
    let report = brute_force_check(&verifier, wheat.token_count, None, DEFAULT_TOKEN_LIMIT, true)?;
    let summary = report.summary("store", wheat.token_count);
    println!("wheat `{}`", wheat.source());
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
