//! The tree algebra: flatten a method into statements, then subtract a
//! fragment and see what the repair leaves behind.
//!
//!     cargo run --example subtract_flatten

use wheacha::lang::{flatten, parse_statements, serialize, subtract_statements, Program, RUNNING_EXAMPLE};

fn main() -> anyhow::Result<()> {
    let program = Program::parse(RUNNING_EXAMPLE)?;
    for (i, s) in flatten(&program).iter().enumerate() {
        println!("{}: {}", i + 1, s.source());
    }
    for fragment in ["mItems.add(genItem());", "mItems.add();"] {
        let rest = subtract_statements(&program.ast, &parse_statements(fragment)?)?;
        println!("\nminus `{fragment}`:\n{}", serialize(&rest));
    }
    Ok(())
}
