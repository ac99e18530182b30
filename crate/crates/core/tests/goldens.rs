//! Byte-exact checks against checked-in sources. `BLESS=1` rewrites them.

use std::fs;
use std::path::PathBuf;

use wheacha::lang::{flatten, parse_statements, serialize, subtract_statements, Program, Statement, RUNNING_EXAMPLE};

fn check(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("BLESS").is_some() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} differs");
}

fn subtracted(fragment: &str) -> String {
    let program = Program::parse(RUNNING_EXAMPLE).unwrap();
    serialize(&subtract_statements(&program.ast, &parse_statements(fragment).unwrap()).unwrap()) + "\n"
}

#[test]
fn dropping_the_generator_argument_leaves_position_dangling() {
    check("subtract_add_gen_item.mini", &subtracted("mItems.add(genItem());"));
}

#[test]
fn dropping_the_bare_call_frees_both_arguments() {
    check("subtract_add.mini", &subtracted("mItems.add();"));
}

#[test]
fn running_example_flattens_to_six_statements() {
    let program = Program::parse(RUNNING_EXAMPLE).unwrap();
    let lines: Vec<String> = flatten(&program).iter().map(Statement::source).collect();
    assert_eq!(lines.len(), 6);
    check("flatten_running_example.txt", &(lines.join("\n") + "\n"));
}
