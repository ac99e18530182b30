//! Would occlusion attribution have pointed at the wheat? Top-N% coverage
//! for one program, then a hand-sized instance with made-up scores.
//!
//!     cargo run --example coverage

use wheacha::analysis::{coverage, occlusion_attribution, top_positions, wheat_positions, AttributionScores, ScoreSource, DEFAULT_GRID};
use wheacha::corpus::linear_bag;
use wheacha::lang::Program;
use wheacha::mutate::{extract_wheat, ExtractOptions};

fn main() -> anyhow::Result<()> {
    let model = linear_bag().build()?;
    let program = Program::parse("void f(int n) { log(n); items.add(n); count = 0; }")?;
    let wheat = extract_wheat(&program, model.as_ref(), &ExtractOptions::default())?;
    let scores = occlusion_attribution(&program, model.as_ref())?;
    let positions = wheat_positions(&wheat, &program).expect("wheat embeds");
    for (t, s) in program.tokens.iter().zip(&scores.scores) {
        print!("{}:{s:.2} ", t.text);
    }
    println!("\nwheat `{}` at {positions:?}", wheat.source());
    for pct in DEFAULT_GRID {
        println!("top {pct:>2}%: covered {}", coverage(&scores, &positions, pct).covered);
    }

    // ten tokens; the wheat holds the 3rd and 4th highest scores
    let hand = AttributionScores { scores: vec![0.9, 0.1, 0.7, 0.0, 0.5, 0.2, 0.3, 0.8, 0.05, 0.15], source: ScoreSource::External };
    for pct in DEFAULT_GRID {
        let top = top_positions(&hand.scores, pct);
        println!("hand top {pct:>2}% = {top:?}: covered {}", coverage(&hand, &[2, 4], pct).covered);
    }
    Ok(())
}
