//! A deterministic corpus of small methods, the reference models run over
//! it, and a hand-built model that reproduces delta debugging's stall on
//! the running example.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lang::{parse, statement_tokens, EdgeKind, TokenKind};
use crate::model::{
    EdgeRuleConfig, LinearBagConfig, Model, ModelError, ModelKind, ModelSpec, Prediction, Rule, RuleConfig,
    TokenEdgeRule,
};

pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusProgram {
    pub name: String,
    pub source: String,
}

/// A model that is not monotone in the way learned models are not: on the
/// running example, delta debugging gets stuck at
/// `{size, return, mItems, add, position}` while the statement-first search
/// goes below it.
///
/// It looks only at the body's non-punctuation lexemes and answers
/// `addItem` when
/// - there are at least 18 of them (the near-complete method), or
/// - `size`, `return`, `mItems`, `add` and `position` all occur, or
/// - `mItems` and `add` occur without `size` or `return`, `position` only
///   comes with `genItem`, and the body is short (at most 8 lexemes).
pub struct StallSurrogate;

pub const STALL_LABEL: &str = "addItem";
pub const STALL_OTHER: &str = "misc";

impl Model for StallSurrogate {
    fn id(&self) -> &str {
        "stall-surrogate"
    }
    fn kind(&self) -> ModelKind {
        ModelKind::Custom
    }
    fn concurrency_safe(&self) -> bool {
        true
    }
    fn predict(&self, source: &str) -> Result<Prediction, ModelError> {
        let ast = parse(source)?;
        let lexemes: Vec<String> = statement_tokens(&ast.body().children)
            .into_iter()
            .filter(|t| t.kind != TokenKind::Punct)
            .map(|t| t.text)
            .collect();
        let has = |w: &str| lexemes.iter().any(|l| l == w);
        let whole = lexemes.len() >= 18;
        let all_five = ["size", "return", "mItems", "add", "position"].iter().all(|w| has(w));
        let core = has("mItems")
            && has("add")
            && !has("size")
            && !has("return")
            && (has("genItem") || !has("position"))
            && lexemes.len() <= 8;
        Ok(Prediction::certain(if whole || all_five || core { STALL_LABEL } else { STALL_OTHER }))
    }
}

const METHODS: &[&str] = &[
    "add", "remove", "size", "get", "put", "contains", "clear", "push", "pop", "find", "log", "notify", "update",
    "compute", "insert", "sort",
];
const VARS: &[&str] = &["items", "list", "count", "index", "value", "result", "key", "total", "node", "buf"];
const TYPES: &[&str] = &["int", "List<Obj>", "String", "Node", "boolean"];
const LITERALS: &[&str] = &["0", "1", "2", "\"done\"", "true", "null"];
const NAMES: &[&str] = &[
    "addEntry", "removeItem", "computeTotal", "findIndex", "updateNode", "clearBuffer", "sortList", "getSize",
    "insertValue", "notifyAll", "popResult", "countItems",
];

/// Seeded generator of well-formed methods.
pub struct Generator {
    rng: ChaCha8Rng,
}

impl Generator {
    pub fn new(seed: u64) -> Self {
        Generator { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn pick(&mut self, from: &[&str]) -> String {
        from.choose(&mut self.rng).expect("non-empty vocabulary").to_string()
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn atom(&mut self) -> String {
        if self.chance(0.75) {
            self.pick(VARS)
        } else {
            self.pick(LITERALS)
        }
    }

    fn call(&mut self, depth: usize) -> String {
        let m = self.pick(METHODS);
        let n = self.rng.gen_range(0..=2);
        let args: Vec<String> = (0..n).map(|_| self.expr(depth + 1)).collect();
        if self.chance(0.5) {
            format!("{}.{m}({})", self.pick(VARS), args.join(", "))
        } else {
            format!("{m}({})", args.join(", "))
        }
    }

    fn expr(&mut self, depth: usize) -> String {
        let roll = if depth > 1 { 0 } else { self.rng.gen_range(0..10) };
        match roll {
            0..=4 => self.atom(),
            5 | 6 => self.call(depth),
            7 => format!("{} {} {}", self.pick(VARS), self.pick(&["+", "-", "*"]), self.atom()),
            8 => format!("{}.{}", self.pick(VARS), self.pick(METHODS)),
            _ => format!("({} + {})", self.pick(VARS), self.atom()),
        }
    }

    fn cond(&mut self) -> String {
        match self.rng.gen_range(0..4) {
            0 => format!("{} > {}", self.pick(VARS), self.atom()),
            1 => format!("{} == {}", self.pick(VARS), self.atom()),
            2 => format!("!{}", self.pick(VARS)),
            _ => format!("{} < {}.size()", self.pick(VARS), self.pick(VARS)),
        }
    }

    fn simple(&mut self) -> String {
        match self.rng.gen_range(0..10) {
            0..=3 => format!("{};", self.call(0)),
            4 | 5 => format!("{} {} = {};", self.pick(TYPES), self.pick(VARS), self.expr(0)),
            6 | 7 => format!("{} {} {};", self.pick(VARS), self.pick(&["=", "=", "+="]), self.expr(0)),
            8 => format!("return {};", self.expr(0)),
            _ => "return;".to_string(),
        }
    }

    fn block(&mut self, depth: usize) -> String {
        let n = self.rng.gen_range(1..=2);
        (0..n).map(|_| self.statement(depth + 1)).collect::<Vec<_>>().join(" ")
    }

    fn statement(&mut self, depth: usize) -> String {
        if depth >= 2 {
            return self.simple();
        }
        match self.rng.gen_range(0..12) {
            0 => format!("if({}) {{ {} }}", self.cond(), self.block(depth)),
            1 => format!("if({}) {{ {} }} else {{ {} }}", self.cond(), self.block(depth), self.block(depth)),
            2 => format!("while({}) {{ {} }}", self.cond(), self.block(depth)),
            3 => {
                let (i, n) = (self.pick(&["i", "j"]), self.pick(VARS));
                format!("for(int {i} = 0; {i} < {n}; {i} = {i} + 1) {{ {} }}", self.block(depth))
            }
            4 if self.chance(0.4) => {
                let v = self.pick(VARS);
                format!("switch({v}) {{ case 1: {} default: {} }}", self.simple(), self.simple())
            }
            _ => self.simple(),
        }
    }

    /// One method. About a third are tiny (one or two plain statements).
    pub fn program(&mut self) -> String {
        let name = self.pick(NAMES);
        let params: Vec<String> = (0..self.rng.gen_range(0..=2))
            .map(|_| format!("{} {}", self.pick(&["int", "List<Obj>", "String"]), self.pick(&["a", "b", "n", "s"])))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let ret = self.pick(&["void", "int", "boolean"]);
        let tiny = self.chance(0.35);
        let n = if tiny { self.rng.gen_range(1..=2) } else { self.rng.gen_range(2..=5) };
        let body: Vec<String> =
            (0..n).map(|_| if tiny { self.simple() } else { self.statement(0) }).collect();
        format!("{ret} {name}({}) {{ {} }}", params.join(", "), body.join(" "))
    }
}

/// The method name of a generated program, which doubles as its label.
pub fn method_name(source: &str) -> Option<String> {
    let open = source.find('(')?;
    source[..open].split_whitespace().last().map(str::to_string)
}

/// Write programs as `<name>` files plus a `labels.json` of method names,
/// the layout [`crate::explain::Corpus::load`] reads.
pub fn write_dir(dir: &Path, programs: &[CorpusProgram]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut labels = BTreeMap::new();
    for p in programs {
        fs::write(dir.join(&p.name), format!("{}\n", p.source))?;
        if let Some(name) = method_name(&p.source) {
            labels.insert(p.name.clone(), name);
        }
    }
    let json = serde_json::to_string_pretty(&labels).expect("string map serializes");
    fs::write(dir.join("labels.json"), json + "\n")
}

/// `count` programs, named `p000.mini`, `p001.mini`, ...
pub fn generate(seed: u64, count: usize) -> Vec<CorpusProgram> {
    let mut g = Generator::new(seed);
    (0..count).map(|i| CorpusProgram { name: format!("p{i:03}.mini"), source: g.program() }).collect()
}

fn rule(all_of: &[&str], none_of: &[&str], label: &str) -> Rule {
    Rule {
        all_of: all_of.iter().map(|s| s.to_string()).collect(),
        none_of: none_of.iter().map(|s| s.to_string()).collect(),
        label: label.into(),
    }
}

/// Rules that only ever ask for tokens to be present.
pub fn monotone_rules() -> ModelSpec {
    ModelSpec::RulePresence(RuleConfig {
        id: Some("rules-monotone".into()),
        rules: vec![
            rule(&["add"], &[], "addItem"),
            rule(&["remove"], &[], "removeItem"),
            rule(&["get", "size"], &[], "getSize"),
            rule(&["put"], &[], "putEntry"),
            rule(&["sort"], &[], "sortList"),
        ],
        default_label: "misc".into(),
    })
}

/// Rules that some added tokens switch off.
pub fn non_monotone_rules() -> ModelSpec {
    ModelSpec::RulePresence(RuleConfig {
        id: Some("rules-non-monotone".into()),
        rules: vec![
            rule(&["add"], &["size"], "addItem"),
            rule(&["remove"], &["clear"], "removeItem"),
            rule(&["get"], &["put"], "getItem"),
            rule(&["count", "total"], &[], "countTotal"),
        ],
        default_label: "misc".into(),
    })
}

pub fn linear_bag() -> ModelSpec {
    let w = |pairs: &[(&str, f64)]| pairs.iter().map(|(l, v)| (l.to_string(), *v)).collect::<BTreeMap<_, _>>();
    ModelSpec::LinearBag(LinearBagConfig {
        id: Some("linear-bag".into()),
        labels: vec!["addItem".into(), "removeItem".into(), "compute".into(), "misc".into()],
        weights: BTreeMap::from([
            ("add".into(), w(&[("addItem", 2.5)])),
            ("items".into(), w(&[("addItem", 0.5)])),
            ("remove".into(), w(&[("removeItem", 2.5)])),
            ("total".into(), w(&[("compute", 1.5)])),
            ("count".into(), w(&[("compute", 1.0)])),
            ("result".into(), w(&[("compute", 0.8)])),
            ("log".into(), w(&[("misc", 0.6)])),
        ]),
        bias: w(&[("misc", 1.0)]),
        temperature: 1.0,
    })
}

pub fn edge_rule() -> ModelSpec {
    let r = |tokens: &[&str], edges: &[EdgeKind], label: &str| TokenEdgeRule {
        all_of_tokens: tokens.iter().map(|s| s.to_string()).collect(),
        all_of_edge_kinds: edges.iter().copied().collect(),
        label: label.into(),
    };
    ModelSpec::EdgeRule(EdgeRuleConfig {
        id: Some("edge-rule".into()),
        rules: vec![
            r(&["total"], &[EdgeKind::ComputedFrom], "compute"),
            r(&["index"], &[EdgeKind::GuardedBy], "guarded"),
            r(&["add"], &[], "addItem"),
        ],
        default_label: "misc".into(),
    })
}

/// The four reference models, by name.
pub fn reference_models() -> Vec<(&'static str, ModelSpec)> {
    vec![
        ("monotone", monotone_rules()),
        ("non-monotone", non_monotone_rules()),
        ("linear-bag", linear_bag()),
        ("edge-rule", edge_rule()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{serialize, texts, tokenize, Program, RUNNING_EXAMPLE};
    use crate::OOV;

    #[test]
    fn written_corpus_loads_back() {
        let dir = tempfile::tempdir().unwrap();
        let programs = generate(3, 12);
        write_dir(dir.path(), &programs).unwrap();
        let (c, skipped) = crate::explain::Corpus::load(dir.path()).unwrap();
        assert!(skipped.is_empty());
        assert_eq!(c.entries.len(), 12);
        assert_eq!(Some(c.entries[0].label.clone()), method_name(&programs[0].source));
        assert_eq!(method_name("void addItem(int position) {}").as_deref(), Some("addItem"));
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(generate(7, 30), generate(7, 30));
        assert_ne!(generate(7, 30), generate(8, 30));
    }

    #[test]
    fn every_program_parses_and_round_trips() {
        for p in generate(DEFAULT_SEED, 300) {
            let prog = Program::parse(&p.source).unwrap_or_else(|e| panic!("{}: {e}\n{}", p.name, p.source));
            let again = tokenize(&serialize(&prog.ast)).unwrap();
            assert_eq!(texts(&again), texts(&prog.tokens), "{}", p.source);
            assert!(prog.tokens.iter().all(|t| t.text != OOV));
        }
    }

    #[test]
    fn reference_models_build() {
        for (_, spec) in reference_models() {
            spec.build().unwrap();
        }
    }

    #[test]
    fn surrogate_labels_the_running_example() {
        assert_eq!(StallSurrogate.predict(RUNNING_EXAMPLE).unwrap().label, STALL_LABEL);
        assert_eq!(StallSurrogate.predict("void f(){ mItems.add(); }").unwrap().label, STALL_LABEL);
        assert_eq!(StallSurrogate.predict("void f(){ mItems.add(position); }").unwrap().label, STALL_OTHER);
    }
}
