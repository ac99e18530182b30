//! Rank same-label training programs by wheat distance and by whole-program
//! distance. The two disagree when the bodies look alike for other reasons.
//!
//!     cargo run --example explain_ranking

use wheacha::corpus::monotone_rules;
use wheacha::explain::{rank_training, rank_training_baseline, wheat_of, Corpus, CorpusEntry};
use wheacha::lang::Program;
use wheacha::mutate::ExtractOptions;

fn main() -> anyhow::Result<()> {
    let model = monotone_rules().build()?;
    let options = ExtractOptions::default();
    let entry = |path: &str, src: &str| -> anyhow::Result<CorpusEntry> {
        Ok(CorpusEntry { path: path.into(), program: Program::parse(src)?, label: "addItem".into() })
    };
    let corpus = Corpus::new(vec![
        entry("loop.mini", "void addItem(int n) { while(ready) { wait(); } result = compute(n); add(n); }")?,
        entry("twin.mini", "void addItem(int n) { x = n; items.put(x); log(x); }")?,
        entry("other.mini", "void addItem(int n) { items.add(n); }")?,
    ]);
    let test = Program::parse("void addItem(int n) { x = n; items.add(x); log(x); }")?;
    let wheat = wheat_of(&test, model.as_ref(), &options, None)?.expect("the test program has wheat");
    println!("test wheat `{}`", wheat.source);
    let by_wheat = rank_training(&wheat.tokens, &corpus, "addItem", 3, model.as_ref(), &options, None)?;
    let by_body = rank_training_baseline(&test, &corpus, "addItem", 3)?;
    for (title, ranking) in [("by wheat", by_wheat), ("by body", by_body)] {
        println!("{title}:");
        for r in ranking.items {
            println!("  {:.3} {}", r.distance, r.path);
        }
    }
    Ok(())
}
