use serde::Serialize;

use super::{Query, Test, TqlError};
use crate::anchor::Anchor;
use crate::corpus::{NodeId, Work};
use crate::features::Featured;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Binding {
    /// Index path of the block within the query; empty for the outermost block.
    pub path: Vec<usize>,
    #[serde(skip)]
    pub node: NodeId,
    pub anchor: Anchor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Match {
    /// One binding per block, in block pre-order.
    pub bindings: Vec<Binding>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryResult {
    pub matches: Vec<Match>,
    pub truncated: bool,
}

struct Slot<'q> {
    path: Vec<usize>,
    rank: usize,
    tests: &'q [Test],
    parent: Option<usize>,
    prev_sibling: Option<usize>,
}

struct Search<'a, 'q> {
    work: &'a Work,
    featured: &'a Featured<'a>,
    slots: Vec<Slot<'q>>,
    bound: Vec<NodeId>,
    limit: usize,
    out: Vec<Match>,
    truncated: bool,
}

impl Search<'_, '_> {
    fn passes(&self, id: NodeId, tests: &[Test]) -> bool {
        tests
            .iter()
            .all(|t| t.accepts(self.featured.features.value_of(id, &t.key)))
    }

    /// Returns false once the limit has been exceeded.
    fn extend(&mut self, k: usize) -> bool {
        if k == self.slots.len() {
            if self.out.len() == self.limit {
                self.truncated = true;
                return false;
            }
            let bindings = self
                .slots
                .iter()
                .zip(&self.bound)
                .map(|(slot, &node)| Binding {
                    path: slot.path.clone(),
                    node,
                    anchor: self.work.object(node).anchor().clone(),
                })
                .collect();
            self.out.push(Match { bindings });
            return true;
        }
        let slot = &self.slots[k];
        let (mut lo, hi) = match slot.parent {
            Some(p) => {
                let range = self.work.descendant_range(self.bound[p]);
                (range.start, range.end)
            }
            None => (0, self.work.len()),
        };
        if let Some(s) = slot.prev_sibling {
            // Objects after the sibling's subtree in pre-order start after its last leaf.
            lo = lo.max(self.work.descendant_range(self.bound[s]).end);
        }
        let candidates = self.work.ids_of_rank(slot.rank);
        let start = candidates.partition_point(|id| id.0 < lo);
        let end = candidates.partition_point(|id| id.0 < hi);
        let tests = slot.tests;
        for i in start..end {
            let id = candidates[i];
            if !self.passes(id, tests) {
                continue;
            }
            self.bound.push(id);
            let go_on = self.extend(k + 1);
            self.bound.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
}

/// Evaluate `query` over a work, returning matches in lexicographic document
/// order of their binding tuples, at most `limit` of them.
pub fn run_query(
    featured: &Featured<'_>,
    query: &Query,
    limit: usize,
) -> Result<QueryResult, TqlError> {
    if limit == 0 {
        return Err(TqlError::InvalidLimit);
    }
    let work = featured.work;
    let blocks = query.blocks();
    let mut slots: Vec<Slot> = Vec::with_capacity(blocks.len());
    for (path, block) in &blocks {
        let rank = work
            .type_rank(&block.object_type)
            .ok_or_else(|| TqlError::UnknownType(block.object_type.clone()))?;
        let parent = (!path.is_empty()).then(|| {
            let parent_path = &path[..path.len() - 1];
            slots.iter().position(|s| s.path == parent_path).unwrap()
        });
        let prev_sibling = match path.last() {
            Some(&i) if i > 0 => {
                let mut sibling = path.clone();
                *sibling.last_mut().unwrap() = i - 1;
                slots.iter().position(|s| s.path == sibling)
            }
            _ => None,
        };
        slots.push(Slot {
            path: path.clone(),
            rank,
            tests: &block.tests,
            parent,
            prev_sibling,
        });
    }
    let mut search = Search {
        work,
        featured,
        slots,
        bound: Vec::new(),
        limit,
        out: Vec::new(),
        truncated: false,
    };
    search.extend(0);
    Ok(QueryResult {
        matches: search.out,
        truncated: search.truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureIndex;

    fn fixture() -> (Work, FeatureIndex) {
        let work = Work::from_document(include_str!("../../../../fixtures/w1.json")).unwrap();
        let mut features = FeatureIndex::new();
        features
            .load_table(&work, include_str!("../../../../fixtures/f1.tsv"))
            .unwrap();
        (work, features)
    }

    fn run(text: &str, limit: usize) -> Result<QueryResult, TqlError> {
        let (work, features) = fixture();
        let featured = Featured::new(&work, &features);
        run_query(&featured, &Query::parse(text).unwrap(), limit)
    }

    fn anchors(result: &QueryResult) -> Vec<Vec<String>> {
        result
            .matches
            .iter()
            .map(|m| m.bindings.iter().map(|b| b.anchor.to_string()).collect())
            .collect()
    }

    const V: &str = "W1:book/B/chapter/1/verse/";

    #[test]
    fn verses_with_verbs() {
        let r = run("[verse [word pos=verb]]", 10).unwrap();
        assert!(!r.truncated);
        assert_eq!(
            anchors(&r),
            vec![
                vec![format!("{V}1"), format!("{V}1/word/3")],
                vec![format!("{V}2"), format!("{V}2/word/2")],
            ]
        );
        assert_eq!(r.matches[0].bindings[1].path, vec![0]);
    }

    #[test]
    fn sibling_order_matters() {
        assert_eq!(run("[verse [word pos=noun] [word pos=verb]]", 10).unwrap().matches.len(), 2);
        assert!(run("[verse [word pos=verb] [word pos=noun]]", 10).unwrap().matches.is_empty());
    }

    #[test]
    fn absent_keys() {
        // '!=' holds on the four words without a tense.
        assert_eq!(run("[word tense!=perfect]", 10).unwrap().matches.len(), 5);
        assert_eq!(run("[word gender=female]", 10).unwrap().matches.len(), 1);
        assert_eq!(run("[word gender!=female]", 10).unwrap().matches.len(), 5);
    }

    #[test]
    fn descendants_at_any_depth() {
        assert_eq!(run("[book [word pos=verb]]", 10).unwrap().matches.len(), 2);
        assert!(run("[word [word]]", 10).unwrap().matches.is_empty());
    }

    #[test]
    fn truncates_at_limit() {
        let r = run("[word]", 4).unwrap();
        assert_eq!(r.matches.len(), 4);
        assert!(r.truncated);
        let r = run("[word]", 6).unwrap();
        assert_eq!(r.matches.len(), 6);
        assert!(!r.truncated);
        assert_eq!(run("[word]", 0).unwrap_err(), TqlError::InvalidLimit);
    }

    #[test]
    fn unknown_type() {
        assert_eq!(
            run("[verse [clause]]", 10).unwrap_err(),
            TqlError::UnknownType("clause".into())
        );
    }

    #[test]
    fn pairs_enumerated_lexicographically() {
        let r = run("[chapter [word] [word]]", 100).unwrap();
        // C(6, 2) ordered pairs of non-overlapping words.
        assert_eq!(r.matches.len(), 15);
        let firsts: Vec<usize> = r.matches.iter().map(|m| m.bindings[1].node.0).collect();
        assert!(firsts.windows(2).all(|w| w[0] <= w[1]));
    }
}
