//! Any type implementing `Model` can be explained. This one labels a method
//! `guarded` when some `if` compares against a literal.
//!
//!     cargo run --example custom_model

use wheacha::lang::{parse, NodeKind, Program};
use wheacha::model::{Model, ModelError, ModelKind, Prediction};
use wheacha::mutate::{extract_wheat, ExtractOptions};

struct Guarded;

impl Model for Guarded {
    fn id(&self) -> &str {
        "guarded"
    }
    fn kind(&self) -> ModelKind {
        ModelKind::Custom
    }
    fn concurrency_safe(&self) -> bool {
        true
    }
    fn predict(&self, source: &str) -> Result<Prediction, ModelError> {
        let ast = parse(source)?;
        let guarded = ast.body().preorder().iter().any(|n| {
            n.kind == NodeKind::If && n.children[0].preorder().iter().any(|c| c.kind == NodeKind::Literal)
        });
        Ok(Prediction::certain(if guarded { "guarded" } else { "plain" }))
    }
}

fn main() -> anyhow::Result<()> {
    let program = Program::parse("void f(int n) { log(n); if(n > 0) { items.add(n); } return; }")?;
    let wheat = extract_wheat(&program, &Guarded, &ExtractOptions::default())?;
    println!("{} -> `{}`", wheat.label, wheat.source().replace('\n', " "));
    Ok(())
}
