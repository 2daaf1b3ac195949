use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::tree::TestObject;

const KEYS: [&str; 3] = ["pos", "tense", "gender"];
const VALUES: [&str; 3] = ["a", "b", "c"];

/// Feature assignments keyed by (object pre-order index, key).
#[derive(Debug, Clone, Default)]
pub struct FeatureTable {
    pub values: HashMap<(usize, String), String>,
    pub tsv: String,
}

impl FeatureTable {
    pub fn random<R: Rng>(rng: &mut R, objects: &[TestObject]) -> FeatureTable {
        let mut table = FeatureTable::default();
        for (i, obj) in objects.iter().enumerate() {
            let p = if obj.token.is_some() { 0.6 } else { 0.15 };
            for key in KEYS {
                if rng.gen_bool(p) {
                    let value = VALUES.choose(rng).unwrap().to_string();
                    table
                        .tsv
                        .push_str(&format!("{}\t{key}\t{value}\n", obj.anchor));
                    table.values.insert((i, key.to_string()), value);
                }
            }
        }
        table
    }

    pub fn get(&self, object: usize, key: &str) -> Option<&str> {
        self.values.get(&(object, key.to_string())).map(String::as_str)
    }

    /// Objects carrying `key=value`, by full scan, in pre-order.
    pub fn scan(&self, objects: &[TestObject], key: &str, value: &str) -> Vec<String> {
        (0..objects.len())
            .filter(|&i| self.get(i, key) == Some(value))
            .map(|i| objects[i].anchor.clone())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct QBlock {
    pub object_type: String,
    /// (key, is_equality, value)
    pub tests: Vec<(String, bool, String)>,
    pub children: Vec<QBlock>,
}

impl QBlock {
    pub fn to_text(&self) -> String {
        let mut s = format!("[{}", self.object_type);
        for (k, eq, v) in &self.tests {
            s.push_str(&format!(" {k}{}{v}", if *eq { "=" } else { "!=" }));
        }
        for c in &self.children {
            s.push(' ');
            s.push_str(&c.to_text());
        }
        s.push(']');
        s
    }

    fn count(&self) -> usize {
        1 + self.children.iter().map(QBlock::count).sum::<usize>()
    }
}

/// A random query with at most 3 levels, 2 tests per block and 4 blocks,
/// using the work's own type names.
pub fn random_query<R: Rng>(rng: &mut R, types: &[String]) -> QBlock {
    fn block<R: Rng>(rng: &mut R, types: &[String], min_rank: usize, depth: usize, budget: &mut usize) -> QBlock {
        *budget -= 1;
        let rank = rng.gen_range(min_rank.min(types.len() - 1)..types.len());
        let tests = (0..rng.gen_range(0..=2))
            .map(|_| {
                (
                    KEYS.choose(rng).unwrap().to_string(),
                    rng.gen_bool(0.6),
                    VALUES.choose(rng).unwrap().to_string(),
                )
            })
            .collect();
        let mut children = Vec::new();
        if depth < 3 && rank + 1 < types.len() {
            for _ in 0..rng.gen_range(0..=2) {
                if *budget == 0 {
                    break;
                }
                children.push(block(rng, types, rank + 1, depth + 1, budget));
            }
        }
        QBlock {
            object_type: types[rank].clone(),
            tests,
            children,
        }
    }
    let mut budget = 4;
    let q = block(rng, types, 0, 1, &mut budget);
    debug_assert!(q.count() <= 4);
    q
}

struct Slot<'q> {
    block: &'q QBlock,
    parent: Option<usize>,
    prev: Option<usize>,
}

fn flatten<'q>(b: &'q QBlock, parent: Option<usize>, prev: Option<usize>, out: &mut Vec<Slot<'q>>) {
    let me = out.len();
    out.push(Slot { block: b, parent, prev });
    let mut last_child = None;
    for c in &b.children {
        let idx = out.len();
        flatten(c, Some(me), last_child, out);
        last_child = Some(idx);
    }
}

/// Brute-force evaluation: every tuple of objects, one per block in block
/// pre-order, that satisfies the query semantics, sorted lexicographically
/// by pre-order position. Returns anchor strings.
pub fn naive_matches(objects: &[TestObject], features: &FeatureTable, query: &QBlock) -> Vec<Vec<String>> {
    let mut slots = Vec::new();
    flatten(query, None, None, &mut slots);

    let accepts = |slot: &Slot, obj: usize, bound: &[usize]| -> bool {
        let o = &objects[obj];
        if o.type_name != slot.block.object_type {
            return false;
        }
        for (k, eq, v) in &slot.block.tests {
            let actual = features.get(obj, k);
            let ok = if *eq { actual == Some(v.as_str()) } else { actual != Some(v.as_str()) };
            if !ok {
                return false;
            }
        }
        if let Some(p) = slot.parent {
            if !o.ancestors.contains(&bound[p]) {
                return false;
            }
        }
        if let Some(s) = slot.prev {
            if o.first <= objects[bound[s]].last {
                return false;
            }
        }
        true
    };

    fn go(
        k: usize,
        slots: &[Slot],
        n: usize,
        bound: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        accepts: &dyn Fn(&Slot, usize, &[usize]) -> bool,
    ) {
        if k == slots.len() {
            out.push(bound.clone());
            return;
        }
        for obj in 0..n {
            if accepts(&slots[k], obj, bound) {
                bound.push(obj);
                go(k + 1, slots, n, bound, out, accepts);
                bound.pop();
            }
        }
    }

    let mut tuples = Vec::new();
    go(0, &slots, objects.len(), &mut Vec::new(), &mut tuples, &accepts);
    tuples.sort();
    tuples
        .into_iter()
        .map(|t| t.into_iter().map(|i| objects[i].anchor.clone()).collect())
        .collect()
}
