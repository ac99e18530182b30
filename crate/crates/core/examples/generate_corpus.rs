//! Regenerate the shipped corpus and the reference model configs.
//!
//!     cargo run --example generate_corpus -- [corpus-dir] [models-dir] [count]

use std::path::PathBuf;

use wheacha::corpus::{generate, reference_models, write_dir, DEFAULT_SEED};

fn main() -> anyhow::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize()?;
    let mut args = std::env::args().skip(1);
    let corpus = args.next().map(PathBuf::from).unwrap_or_else(|| root.join("corpus"));
    let models = args.next().map(PathBuf::from).unwrap_or_else(|| root.join("models"));
    let count: usize = args.next().map(|n| n.parse()).transpose()?.unwrap_or(100);

    write_dir(&corpus, &generate(DEFAULT_SEED, count))?;
    std::fs::create_dir_all(&models)?;
    for (name, spec) in reference_models() {
        std::fs::write(models.join(format!("{name}.json")), serde_json::to_string_pretty(&spec)? + "\n")?;
    }
    println!("{count} programs in {}, models in {}", corpus.display(), models.display());
    Ok(())
}
