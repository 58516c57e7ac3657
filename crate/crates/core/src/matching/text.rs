use std::collections::HashMap;

/// Character-level Sørensen-Dice similarity: twice the size of the multiset
/// intersection of characters over the total character count. Order
/// insensitive. Two empty strings score 0.
pub fn text_similarity(a: &str, b: &str) -> f64 {
    let mut counts: HashMap<char, usize> = HashMap::new();
    let mut len_a = 0usize;
    for c in a.chars() {
        *counts.entry(c).or_default() += 1;
        len_a += 1;
    }
    let mut len_b = 0usize;
    let mut overlap = 0usize;
    for c in b.chars() {
        len_b += 1;
        if let Some(n) = counts.get_mut(&c) {
            if *n > 0 {
                *n -= 1;
                overlap += 1;
            }
        }
    }
    if len_a + len_b == 0 {
        return 0.0;
    }
    2.0 * overlap as f64 / (len_a + len_b) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_examples() {
        assert_eq!(text_similarity("abc", "abc"), 1.0);
        assert!((text_similarity("abc", "abd") - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(text_similarity("abc", "xyz"), 0.0);
        assert_eq!(text_similarity("", ""), 0.0);
        assert_eq!(text_similarity("abc", ""), 0.0);
        assert_eq!(text_similarity("aab", "abb"), 2.0 * 2.0 / 6.0);
    }

    fn sorted(s: &str) -> Vec<char> {
        let mut v: Vec<char> = s.chars().collect();
        v.sort_unstable();
        v
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in "[a-d ]{0,12}", b in "[a-d ]{0,12}") {
            let ab = text_similarity(&a, &b);
            prop_assert_eq!(ab, text_similarity(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn one_iff_same_multiset(a in "[a-c]{1,8}", b in "[a-c]{1,8}") {
            let same = sorted(&a) == sorted(&b);
            prop_assert_eq!(text_similarity(&a, &b) == 1.0, same);
        }
    }
}
