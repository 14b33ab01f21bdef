use std::collections::{BTreeMap, BTreeSet};

/// Next document for `annotator`: the first id (in order) that has fewer
/// than `k` submissions and none from this annotator.
pub fn assignment_policy<'a>(
    doc_ids: impl IntoIterator<Item = &'a str>,
    submitted: &BTreeMap<String, BTreeSet<String>>,
    annotator: &str,
    k: usize,
) -> Option<String> {
    let mut ids: Vec<&str> = doc_ids.into_iter().collect();
    ids.sort_unstable();
    ids.into_iter()
        .find(|id| {
            let who = submitted.get(*id);
            who.map_or(0, BTreeSet::len) < k && !who.is_some_and(|w| w.contains(annotator))
        })
        .map(str::to_string)
}
