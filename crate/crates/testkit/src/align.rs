//! Exhaustive search over monotone token alignments.

pub const COST_EQUAL: u32 = 0;
pub const COST_GROUP: u32 = 1;
pub const COST_MODIFIED: u32 = 2;
pub const COST_GAP: u32 = 2;

/// Minimum total cost over every monotone alignment of `src` onto `dst`,
/// found by enumerating all move sequences without memoization.
pub fn exhaustive_min_cost(src: &[String], dst: &[String], max_group: usize) -> u32 {
    fn go(src: &[String], dst: &[String], max_group: usize, acc: u32, best: &mut u32) {
        if src.is_empty() && dst.is_empty() {
            *best = (*best).min(acc);
            return;
        }
        if let (Some(s), Some(d)) = (src.first(), dst.first()) {
            let cost = if s == d { COST_EQUAL } else { COST_MODIFIED };
            go(&src[1..], &dst[1..], max_group, acc + cost, best);
            for k in 2..=max_group {
                if k <= src.len() && src[..k].concat() == *d {
                    go(&src[k..], &dst[1..], max_group, acc + COST_GROUP, best);
                }
                if k <= dst.len() && dst[..k].concat() == *s {
                    go(&src[1..], &dst[k..], max_group, acc + COST_GROUP, best);
                }
            }
        }
        if !src.is_empty() {
            go(&src[1..], dst, max_group, acc + COST_GAP, best);
        }
        if !dst.is_empty() {
            go(src, &dst[1..], max_group, acc + COST_GAP, best);
        }
    }
    let mut best = u32::MAX;
    go(src, dst, max_group, 0, &mut best);
    best
}
