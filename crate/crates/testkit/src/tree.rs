use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};

const TYPE_NAMES: [&str; 4] = ["book", "chapter", "verse", "word"];
const VOCAB: [&str; 8] = ["in", "beginning", "created", "earth", "was", "void", "and", "light"];
const KEY_DECORATIONS: [&str; 6] = ["", "", "", "a/b", " x", "ë%"];

#[derive(Debug, Clone)]
pub struct TestNode {
    pub rank: usize,
    pub key: String,
    pub children: Vec<TestNode>,
    pub text: Option<String>,
}

#[derive(Debug, Clone)]
pub struct TestWork {
    pub id: String,
    pub types: Vec<String>,
    pub root: TestNode,
}

/// A flattened object with everything the oracles need.
#[derive(Debug, Clone)]
pub struct TestObject {
    pub anchor: String,
    pub type_name: String,
    pub first: usize,
    pub last: usize,
    /// Pre-order indices of all proper ancestors.
    pub ancestors: Vec<usize>,
    pub token: Option<String>,
}

/// Percent-encode everything outside `[A-Za-z0-9_.-]`.
pub fn encode(segment: &str) -> String {
    let mut out = String::new();
    for b in segment.bytes() {
        if b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || b == b'-' {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

struct Generator<'r, R: Rng> {
    rng: &'r mut R,
    levels: usize,
    leaves_left: usize,
}

impl<R: Rng> Generator<'_, R> {
    fn node(&mut self, rank: usize, key: String) -> TestNode {
        let finest = rank + 1 == self.levels;
        let early_leaf = rank > 0 && self.rng.gen_bool(0.1);
        if finest || early_leaf || self.leaves_left <= 1 {
            self.leaves_left = self.leaves_left.saturating_sub(1);
            return TestNode {
                rank,
                key,
                children: Vec::new(),
                text: Some(VOCAB.choose(self.rng).unwrap().to_string()),
            };
        }
        // Fan-out scaled so the leaf budget is reachable at this depth.
        let below = (self.levels - rank - 1).max(1) as f64;
        let reach = (self.leaves_left as f64).powf(1.0 / below).ceil() as usize;
        let count = self.rng.gen_range(1..=(2 * reach).max(5));
        let mut children = Vec::new();
        for i in 0..count {
            if self.leaves_left == 0 {
                break;
            }
            // Usually the next level; sometimes skip one.
            let child_rank = if rank + 2 < self.levels && self.rng.gen_bool(0.15) {
                rank + 2
            } else {
                rank + 1
            };
            let deco = KEY_DECORATIONS.choose(self.rng).unwrap();
            let key = format!("{}{deco}", i + 1);
            children.push(self.node(child_rank, key));
        }
        if children.is_empty() {
            return TestNode {
                rank,
                key,
                children,
                text: Some("end".into()),
            };
        }
        TestNode {
            rank,
            key,
            children,
            text: None,
        }
    }
}

/// A random single-rooted work with at most `max_levels` levels and
/// `max_leaves` leaves.
pub fn random_work<R: Rng>(rng: &mut R, id: &str, max_levels: usize, max_leaves: usize) -> TestWork {
    let levels = rng.gen_range(1..=max_levels.clamp(1, TYPE_NAMES.len()));
    let types: Vec<String> = TYPE_NAMES[TYPE_NAMES.len() - levels..]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let leaves_left = rng.gen_range(1..=max_leaves.max(1));
    let mut generator = Generator {
        rng,
        levels,
        leaves_left,
    };
    let root = generator.node(0, "R".into());
    TestWork {
        id: id.to_string(),
        types,
        root,
    }
}

impl TestWork {
    fn node_json(&self, node: &TestNode) -> Value {
        let ty = &self.types[node.rank];
        match &node.text {
            Some(t) => json!({"type": ty, "key": node.key, "text": t}),
            None => json!({
                "type": ty,
                "key": node.key,
                "children": node.children.iter().map(|c| self.node_json(c)).collect::<Vec<_>>(),
            }),
        }
    }

    /// The corpus-interchange document.
    pub fn to_json(&self) -> String {
        json!({"work": self.id, "types": self.types, "tree": self.node_json(&self.root)}).to_string()
    }

    /// All objects in pre-order with independently computed anchors and spans.
    pub fn objects(&self) -> Vec<TestObject> {
        fn walk(
            work: &TestWork,
            node: &TestNode,
            path: &str,
            ancestors: &mut Vec<usize>,
            next_leaf: &mut usize,
            out: &mut Vec<TestObject>,
        ) {
            let index = out.len();
            out.push(TestObject {
                anchor: path.to_string(),
                type_name: work.types[node.rank].clone(),
                first: *next_leaf,
                last: *next_leaf,
                ancestors: ancestors.clone(),
                token: node.text.clone(),
            });
            if node.text.is_some() {
                *next_leaf += 1;
            }
            ancestors.push(index);
            for child in &node.children {
                let child_path = format!(
                    "{path}/{}/{}",
                    encode(&work.types[child.rank]),
                    encode(&child.key)
                );
                walk(work, child, &child_path, ancestors, next_leaf, out);
            }
            ancestors.pop();
            out[index].last = *next_leaf - 1;
        }
        let mut out = Vec::new();
        let mut next_leaf = 0;
        walk(
            self,
            &self.root,
            &format!(
                "{}:{}/{}",
                encode(&self.id),
                encode(&self.types[0]),
                encode(&self.root.key)
            ),
            &mut Vec::new(),
            &mut next_leaf,
            &mut out,
        );
        out
    }

    pub fn leaf_count(&self) -> usize {
        self.objects().iter().filter(|o| o.token.is_some()).count()
    }
}
