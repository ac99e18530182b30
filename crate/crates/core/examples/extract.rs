//! Extract the wheat of the running example under a one-rule model.
//!
//!     cargo run --example extract

use wheacha::lang::{Program, RUNNING_EXAMPLE};
use wheacha::model::{Rule, RuleConfig, RulePresence};
use wheacha::mutate::{extract_report, ExtractOptions};

fn main() -> anyhow::Result<()> {
    let rule = Rule { all_of: ["add".to_string()].into(), none_of: Default::default(), label: "addItem".into() };
    let model = RulePresence::new("add-rule", RuleConfig { id: None, rules: vec![rule], default_label: "misc".into() })?;
    let program = Program::parse(RUNNING_EXAMPLE)?;
    let report = extract_report("running-example", &program, &model, &ExtractOptions::default())?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
