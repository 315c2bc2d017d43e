//! Borda Fuse rank aggregation.
//!
//! Every input list is a voter. With `N` the length of the longest list, the
//! candidate at position `p` of a list earns `N − p + 1` points from it and
//! nothing from lists that omit it. Candidates are sorted by total points.

use std::collections::HashMap;

use crate::extraction::{RankedItem, RankedList};

pub const FUSED_SOURCE: &str = "fused";

/// Fuses per-engine lists.
///
/// Ties on points go to the candidate with the better best single-list
/// position, then to the lexicographically smaller name.
pub fn borda_fuse(lists: &[RankedList]) -> RankedList {
    let max_len = lists.iter().map(RankedList::len).max().unwrap_or(0);
    // name → (points, best position)
    let mut tally: HashMap<&str, (usize, usize)> = HashMap::new();
    for list in lists {
        for (i, item) in list.items.iter().enumerate() {
            let entry = tally.entry(item.name.as_str()).or_insert((0, usize::MAX));
            entry.0 += max_len - i;
            entry.1 = entry.1.min(i + 1);
        }
    }
    let mut fused: Vec<(&str, usize, usize)> = tally.into_iter().map(|(n, (pts, best))| (n, pts, best)).collect();
    fused.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)).then(a.0.cmp(b.0)));
    RankedList {
        source: FUSED_SOURCE.to_string(),
        query: lists.iter().find_map(|l| l.query.clone()),
        items: fused
            .into_iter()
            .map(|(name, points, _)| RankedItem {
                name: name.to_string(),
                score: points as f64,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scored(list: &RankedList) -> Vec<(String, f64)> {
        list.items.iter().map(|i| (i.name.clone(), i.score)).collect()
    }

    #[test]
    fn borda_table_example() {
        let lists = [
            RankedList::from_names("npm", &["bytescout"]),
            RankedList::from_names("google", &["quagga", "bcreader", "bytescout", "jaguar"]),
            RankedList::from_names("bing", &["quagga", "bc-js", "bwip-js", "bcreader"]),
        ];
        let fused = borda_fuse(&lists);
        let expected = [
            ("quagga", 8.0),
            ("bytescout", 6.0),
            ("bcreader", 4.0),
            ("bc-js", 3.0),
            ("bwip-js", 2.0),
            ("jaguar", 1.0),
        ];
        assert_eq!(scored(&fused), expected.map(|(n, s)| (n.to_string(), s)));
        assert_eq!(fused.source, "fused");
    }

    #[test]
    fn single_voter_is_identity() {
        let fused = borda_fuse(&[RankedList::from_names("a", &["a", "b"])]);
        assert_eq!(scored(&fused), [("a".into(), 2.0), ("b".into(), 1.0)]);
    }

    #[test]
    fn tie_broken_by_best_position_then_name() {
        let fused = borda_fuse(&[
            RankedList::from_names("x", &["a", "b"]),
            RankedList::from_names("y", &["b", "a"]),
        ]);
        assert_eq!(scored(&fused), [("a".into(), 3.0), ("b".into(), 3.0)]);
        // c and d both get 3 points; d reached position 1, c only position 2.
        let fused = borda_fuse(&[
            RankedList::from_names("x", &["d", "e", "f"]),
            RankedList::from_names("y", &["e", "c", "g"]),
            RankedList::from_names("z", &["a", "b", "c"]),
        ]);
        let names = fused.names();
        let pos = |n: &str| names.iter().position(|x| *x == n).unwrap();
        assert!(pos("d") < pos("c"));
    }

    #[test]
    fn empty_inputs() {
        assert!(borda_fuse(&[]).is_empty());
        assert!(borda_fuse(&[RankedList::new("a"), RankedList::new("b")]).is_empty());
    }

    fn arb_lists() -> impl Strategy<Value = Vec<Vec<String>>> {
        let names =
            prop::sample::subsequence((0..10).map(|i| format!("t{i}")).collect::<Vec<_>>(), 0..=10).prop_shuffle();
        prop::collection::vec(names, 1..5)
    }

    fn build(lists: &[Vec<String>]) -> Vec<RankedList> {
        lists
            .iter()
            .enumerate()
            .map(|(i, l)| RankedList::from_names(&format!("e{i}"), l))
            .collect()
    }

    proptest! {
        #[test]
        fn points_per_list_and_total(lists in arb_lists()) {
            let ranked = build(&lists);
            let fused = borda_fuse(&ranked);
            let n = lists.iter().map(Vec::len).max().unwrap();
            let expected: usize = lists.iter().map(|l| (1..=l.len()).map(|p| n - p + 1).sum::<usize>()).sum();
            let total: f64 = fused.items.iter().map(|i| i.score).sum();
            prop_assert_eq!(total, expected as f64);
        }

        #[test]
        fn voter_anonymity_and_empty_voter(lists in arb_lists(), seed in any::<u64>()) {
            let ranked = build(&lists);
            let fused = borda_fuse(&ranked);
            let mut permuted = ranked.clone();
            let k = permuted.len();
            permuted.rotate_left((seed as usize) % k);
            prop_assert_eq!(&borda_fuse(&permuted).items, &fused.items);
            permuted.push(RankedList::new("empty"));
            prop_assert_eq!(&borda_fuse(&permuted).items, &fused.items);
        }

        #[test]
        fn unanimous_first_wins(mut lists in arb_lists()) {
            for l in &mut lists {
                l.retain(|n| n != "winner");
                l.insert(0, "winner".to_string());
            }
            let fused = borda_fuse(&build(&lists));
            prop_assert_eq!(fused.items[0].name.as_str(), "winner");
        }
    }
}
