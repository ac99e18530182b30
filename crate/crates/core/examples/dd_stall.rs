//! Delta debugging against a model that is not monotone: the trace gets
//! stuck on five lexemes while Reduce+Mutate goes below them.
//!
//!     cargo run --example dd_stall

use wheacha::corpus::StallSurrogate;
use wheacha::dd::ddmin_wheat;
use wheacha::lang::{Program, RUNNING_EXAMPLE};
use wheacha::mutate::{extract_wheat_with, ExtractOptions};
use wheacha::verify::{HeaderMode, QueryLedger, Verifier};

fn main() -> anyhow::Result<()> {
    let program = Program::parse(RUNNING_EXAMPLE)?;
    let ledger = QueryLedger::new();
    let verifier = Verifier::new(&StallSurrogate, &program, &ledger, HeaderMode::MaskName)?;
    let dd = ddmin_wheat(&verifier)?;
    // the last round, at one lexeme per chunk
    for s in dd.trace.steps.iter().rev().take(10).rev() {
        println!("{:>2} {:<4} {:<40} {:?}", s.granularity, s.partition, s.tokens.join(" "), s.unsatisfied);
    }
    println!("dd keeps {} tokens:\n{}", dd.token_count, dd.source());
    let wheat = extract_wheat_with(&verifier, &ExtractOptions::default())?;
    println!("wheat has {} tokens:\n{}", wheat.token_count, wheat.source());
    Ok(())
}
