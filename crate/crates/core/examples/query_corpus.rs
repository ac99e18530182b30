//! Every program the model was asked about while explaining one input: a
//! ready-made set of near neighbours for labelling or retraining.
//!
//!     cargo run --example query_corpus

use wheacha::corpus::non_monotone_rules;
use wheacha::explain::generate_query_corpus;
use wheacha::lang::{serialize_statements, Program};
use wheacha::mutate::ExtractOptions;

fn main() -> anyhow::Result<()> {
    let model = non_monotone_rules().build()?;
    let program = Program::parse("void f() { items.remove(key); log(key); count = total; }")?;
    let queried = generate_query_corpus(&program, model.as_ref(), &ExtractOptions::default())?;
    println!("{} programs queried", queried.len());
    for p in queried.iter().take(12) {
        let label = model.predict(&p.source)?.label;
        println!("{label:<12} {}", serialize_statements(&p.ast.body().children).replace('\n', " "));
    }
    Ok(())
}
