//! Explaining a prediction by the training programs whose wheat looks most
//! like the test program's, next to the plain whole-program baseline; and
//! the corpus of programs an extraction asked the model about.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lang::{texts, Program};
use crate::model::Model;
use crate::mutate::{extract_wheat_with, ExtractOptions};
use crate::verify::{QueryLedger, Verifier};

pub const CACHE_ENV: &str = "WHEACHA_CACHE_DIR";

/// Token-level Levenshtein distance.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(x != y)).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Edit distance over max length; 0 exactly when the sequences agree.
pub fn wheat_distance(a: &[String], b: &[String]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    levenshtein(a, b) as f64 / longest as f64
}

/// Lowercased words of a label: `getItemCount` and `get_item_count` both
/// give `get`, `item`, `count`.
pub fn label_words(label: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut word = String::new();
    let mut prev_lower = false;
    for c in label.chars() {
        if c == '_' || c == '-' || (c.is_uppercase() && prev_lower) {
            if !word.is_empty() {
                words.push(std::mem::take(&mut word));
            }
        }
        if c != '_' && c != '-' {
            word.extend(c.to_lowercase());
        }
        prev_lower = c.is_lowercase() || c.is_ascii_digit();
    }
    if !word.is_empty() {
        words.push(word);
    }
    words
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub path: String,
    pub program: Program,
    pub label: String,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
    pub index: BTreeMap<String, Vec<usize>>,
}

impl Corpus {
    pub fn new(mut entries: Vec<CorpusEntry>) -> Corpus {
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        entries.dedup_by(|a, b| a.path == b.path);
        let mut index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            index.entry(e.label.clone()).or_default().push(i);
        }
        Corpus { entries, index }
    }

    /// `.mini` files of `dir` plus `labels.json` (file name → label).
    /// Files that do not parse or have no label are skipped and returned.
    pub fn load(dir: &Path) -> anyhow::Result<(Corpus, Vec<String>)> {
        let labels: BTreeMap<String, String> = serde_json::from_str(&fs::read_to_string(dir.join("labels.json"))?)?;
        let mut entries = Vec::new();
        let mut skipped = Vec::new();
        let mut files: Vec<PathBuf> =
            fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "mini")).collect();
        files.sort();
        for file in files {
            let name = file.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
            let parsed = fs::read_to_string(&file).ok().and_then(|s| Program::parse(&s).ok());
            match (parsed, labels.get(&name)) {
                (Some(program), Some(label)) if !label.is_empty() => {
                    entries.push(CorpusEntry { path: name, program, label: label.clone() })
                }
                _ => skipped.push(name),
            }
        }
        Ok((Corpus::new(entries), skipped))
    }

    /// Entries labelled `label`, or whose label's words all occur in it.
    pub fn candidates(&self, label: &str) -> Vec<&CorpusEntry> {
        let wanted = label_words(label);
        self.entries
            .iter()
            .filter(|e| e.label == label || label_words(&e.label).iter().all(|w| wanted.contains(w)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub path: String,
    pub distance: f64,
    /// The entry's wheat, or its whole body for the baseline.
    pub wheat_source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub items: Vec<Ranked>,
    pub k: usize,
}

fn rank(mut items: Vec<Ranked>, k: usize) -> Ranking {
    items.sort_by(|a, b| a.distance.total_cmp(&b.distance).then_with(|| a.path.cmp(&b.path)));
    items.truncate(k);
    Ranking { items, k }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedWheat {
    pub source: String,
    pub tokens: Vec<String>,
}

/// Extracted wheat on disk, keyed by program text and model.
pub struct WheatCache {
    dir: PathBuf,
}

impl WheatCache {
    pub fn new(dir: impl Into<PathBuf>) -> WheatCache {
        WheatCache { dir: dir.into() }
    }

    pub fn from_env() -> Option<WheatCache> {
        std::env::var_os(CACHE_ENV).map(WheatCache::new)
    }

    fn path(&self, program: &Program, model_id: &str) -> PathBuf {
        let mut h = Sha256::new();
        h.update(program.source.as_bytes());
        h.update([0]);
        h.update(model_id.as_bytes());
        self.dir.join(format!("{}.json", hex::encode(h.finalize())))
    }

    pub fn get(&self, program: &Program, model_id: &str) -> Option<CachedWheat> {
        serde_json::from_str(&fs::read_to_string(self.path(program, model_id)).ok()?).ok()
    }

    pub fn put(&self, program: &Program, model_id: &str, wheat: &CachedWheat) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        fs::write(self.path(program, model_id), serde_json::to_string(wheat).expect("plain data serializes"))
    }
}

/// The wheat of `program`, from the cache when present. `None` when the
/// fragment search gives up.
pub fn wheat_of(
    program: &Program,
    model: &dyn Model,
    options: &ExtractOptions,
    cache: Option<&WheatCache>,
) -> Result<Option<CachedWheat>> {
    if let Some(hit) = cache.and_then(|c| c.get(program, model.id())) {
        return Ok(Some(hit));
    }
    let ledger = QueryLedger::new();
    let verifier = Verifier::new(model, program, &ledger, options.header)?;
    let wheat = match extract_wheat_with(&verifier, options) {
        Ok(w) => CachedWheat { source: w.source(), tokens: texts(&w.tokens) },
        Err(Error::FragmentSearchExhausted { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    if let Some(c) = cache {
        // a cache that cannot be written only costs time
        let _ = c.put(program, model.id(), &wheat);
    }
    Ok(Some(wheat))
}

/// Same-label training programs, closest wheat first. Entries without a
/// wheat are left out.
pub fn rank_training(
    test_wheat: &[String],
    corpus: &Corpus,
    label: &str,
    k: usize,
    model: &dyn Model,
    options: &ExtractOptions,
    cache: Option<&WheatCache>,
) -> Result<Ranking> {
    let bucket = corpus.candidates(label);
    if bucket.is_empty() {
        return Err(Error::NoCandidates { label: label.to_string() });
    }
    let mut items = Vec::new();
    for e in bucket {
        if let Some(w) = wheat_of(&e.program, model, options, cache)? {
            items.push(Ranked { path: e.path.clone(), distance: wheat_distance(test_wheat, &w.tokens), wheat_source: w.source });
        }
    }
    Ok(rank(items, k))
}

/// The same ranking by whole-program distance; no model involved.
pub fn rank_training_baseline(test: &Program, corpus: &Corpus, label: &str, k: usize) -> Result<Ranking> {
    let bucket = corpus.candidates(label);
    if bucket.is_empty() {
        return Err(Error::NoCandidates { label: label.to_string() });
    }
    let mine = texts(&test.tokens);
    let items = bucket
        .into_iter()
        .map(|e| Ranked {
            path: e.path.clone(),
            distance: wheat_distance(&mine, &texts(&e.program.tokens)),
            wheat_source: crate::lang::serialize_statements(&e.program.ast.body().children),
        })
        .collect();
    Ok(rank(items, k))
}

/// Every distinct program the model was asked about while extracting the
/// wheat of `program`, in the order first asked. An exhausted search still
/// yields what it queried.
pub fn generate_query_corpus(program: &Program, model: &dyn Model, options: &ExtractOptions) -> Result<Vec<Program>> {
    let ledger = QueryLedger::new();
    let verifier = Verifier::new(model, program, &ledger, options.header)?;
    match extract_wheat_with(&verifier, options) {
        Ok(_) | Err(Error::FragmentSearchExhausted { .. }) => {}
        Err(e) => return Err(e),
    }
    ledger.visited().iter().map(|s| Ok(Program::parse(s)?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{serialize, tokenize, RUNNING_EXAMPLE};
    use crate::model::{Rule, RuleConfig, RulePresence};
    use std::collections::BTreeSet;

    fn toks(s: &str) -> Vec<String> {
        texts(&tokenize(s).unwrap())
    }

    #[test]
    fn distances_by_hand() {
        assert_eq!(wheat_distance(&toks("add();"), &toks("add();")), 0.0);
        assert_eq!(wheat_distance(&toks("add();"), &toks("put();")), 0.25);
        assert_eq!(wheat_distance(&toks("a b c"), &toks("x y z")), 1.0);
        assert_eq!(levenshtein(&toks("a b c d"), &toks("a c d e")), 2);
        assert_eq!(wheat_distance(&[], &[]), 0.0);
    }

    #[test]
    fn label_word_splitting() {
        assert_eq!(label_words("getItemCount"), ["get", "item", "count"]);
        assert_eq!(label_words("get_item_count"), ["get", "item", "count"]);
        assert_eq!(label_words("addItem"), ["add", "item"]);
    }

    fn entry(path: &str, src: &str, label: &str) -> CorpusEntry {
        CorpusEntry { path: path.into(), program: Program::parse(src).unwrap(), label: label.into() }
    }

    fn add_model() -> RulePresence {
        let r = Rule { all_of: BTreeSet::from(["add".into()]), none_of: BTreeSet::new(), label: "addItem".into() };
        RulePresence::new("add", RuleConfig { id: None, rules: vec![r], default_label: "misc".into() }).unwrap()
    }

    #[test]
    fn subset_labels_join_the_bucket() {
        let c = Corpus::new(vec![
            entry("a.mini", "void f(){ add(); }", "addItem"),
            entry("b.mini", "void f(){ add(); }", "add"),
            entry("c.mini", "void f(){ x(); }", "removeItem"),
        ]);
        let paths: Vec<_> = c.candidates("addItem").iter().map(|e| e.path.as_str()).collect();
        assert_eq!(paths, ["a.mini", "b.mini"]);
    }

    #[test]
    fn identical_wheat_ranks_first() {
        let c = Corpus::new(vec![
            entry("far.mini", "void f(){ x = y; z.add(q, r); }", "addItem"),
            entry("same.mini", "void g(){ add(); }", "addItem"),
        ]);
        let r = rank_training(&toks("add();"), &c, "addItem", 5, &add_model(), &ExtractOptions::default(), None).unwrap();
        assert_eq!(r.items[0].path, "far.mini");
        assert_eq!(r.items[0].distance, 0.0);
        assert_eq!(r.items.len(), 2);
        let err = rank_training(&toks("add();"), &c, "nothing", 1, &add_model(), &ExtractOptions::default(), None);
        assert!(matches!(err, Err(Error::NoCandidates { .. })));
    }

    #[test]
    fn baseline_uses_whole_programs() {
        let c = Corpus::new(vec![
            entry("a.mini", "void f(){ a(); b(); c(); }", "L"),
            entry("b.mini", "void f(){ a(); }", "L"),
            entry("c.mini", "void f(){ q(); r(); s(); t(); u(); }", "L"),
        ]);
        let test = Program::parse("void f(){ a(); b(); }").unwrap();
        let r = rank_training_baseline(&test, &c, "L", 2).unwrap();
        let paths: Vec<_> = r.items.iter().map(|i| i.path.as_str()).collect();
        assert_eq!(paths, ["a.mini", "b.mini"]);
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = WheatCache::new(dir.path());
        let p = Program::parse(RUNNING_EXAMPLE).unwrap();
        let m = add_model();
        let first = wheat_of(&p, &m, &ExtractOptions::default(), Some(&cache)).unwrap().unwrap();
        assert_eq!(cache.get(&p, "add"), Some(first.clone()));
        assert_eq!(cache.get(&p, "other"), None);
        assert_eq!(wheat_of(&p, &m, &ExtractOptions::default(), Some(&cache)).unwrap(), Some(first));
    }

    #[test]
    fn query_corpus_contains_the_final_wheat() {
        let p = Program::parse(RUNNING_EXAMPLE).unwrap();
        let m = add_model();
        let queried = generate_query_corpus(&p, &m, &ExtractOptions::default()).unwrap();
        let sources: Vec<String> = queried.iter().map(|q| serialize(&q.ast)).collect();
        assert!(sources.contains(&"void METHOD_NAME(int position) {\n  add();\n}".to_string()));
        assert_eq!(queried, generate_query_corpus(&p, &m, &ExtractOptions::default()).unwrap());
    }

    #[test]
    fn exhausted_search_still_reports_its_queries() {
        let r = Rule { all_of: BTreeSet::new(), none_of: BTreeSet::new(), label: "L".into() };
        let m = RulePresence::new("c", RuleConfig { id: None, rules: vec![r], default_label: "L".into() }).unwrap();
        let p = Program::parse("void f(){ a(); b(); c(); }").unwrap();
        let queried = generate_query_corpus(&p, &m, &ExtractOptions::default()).unwrap();
        // every candidate is sufficient and none necessary: the original,
        // then each single and each pair under the masked header together
        // with its complement under the original one
        assert_eq!(queried.len(), 1 + 3 * 2 + 3 * 2);
    }
}
