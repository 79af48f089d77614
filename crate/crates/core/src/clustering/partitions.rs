use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::ClusterAssignment;

/// Largest `n` accepted by [`enumerate_partitions`].
pub const MAX_ENUMERATED_AGENTS: usize = 14;

/// Stirling number of the second kind `S(n, k)`.
pub fn stirling2(n: usize, k: usize) -> Result<u128> {
    if k > n {
        return domain(format!("S({n}, {k}) requires k <= n"));
    }
    // row[j] = S(i, j)
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for i in 1..=n {
        for j in (1..=k.min(i)).rev() {
            let term = (j as u128)
                .checked_mul(row[j])
                .and_then(|x| x.checked_add(row[j - 1]))
                .ok_or_else(|| Error::Overflow(format!("S({n}, {k}) exceeds u128")))?;
            row[j] = term;
        }
        row[0] = 0;
    }
    Ok(row[k])
}

/// Partitions of `{0..n}` into exactly `k` blocks, in lexicographic order of
/// their restricted growth strings.
#[derive(Debug, Clone)]
pub struct Partitions {
    k: usize,
    labels: Vec<usize>,
    done: bool,
}

impl Iterator for Partitions {
    type Item = ClusterAssignment;

    fn next(&mut self) -> Option<ClusterAssignment> {
        if self.done {
            return None;
        }
        let out = ClusterAssignment::from_labels(&self.labels).expect("valid growth string");
        self.done = !self.advance();
        Some(out)
    }
}

impl Partitions {
    /// Step to the next growth string with exactly `k` blocks.
    fn advance(&mut self) -> bool {
        let n = self.labels.len();
        let k = self.k;
        for i in (1..n).rev() {
            let prefix_max = self.labels[..i].iter().copied().max().unwrap_or(0);
            let candidate = self.labels[i] + 1;
            if candidate > prefix_max + 1 || candidate >= k {
                continue;
            }
            let top = prefix_max.max(candidate);
            let remaining = n - i - 1;
            let missing = k - 1 - top;
            if remaining < missing {
                continue;
            }
            self.labels[i] = candidate;
            let zeros = remaining - missing;
            for j in 0..remaining {
                self.labels[i + 1 + j] = if j < zeros { 0 } else { top + 1 + (j - zeros) };
            }
            return true;
        }
        false
    }
}

/// Every partition of `n` agents into `k` clusters, each exactly once.
/// Requires `1 <= k <= n <= 14`.
pub fn enumerate_partitions(n: usize, k: usize) -> Result<Partitions> {
    if k == 0 || k > n || n > MAX_ENUMERATED_AGENTS {
        return Err(Error::Guard(format!(
            "partition enumeration needs 1 <= k <= n <= {MAX_ENUMERATED_AGENTS}, got n={n}, k={k}"
        )));
    }
    let mut labels = vec![0; n];
    for (j, slot) in labels[n - k + 1..].iter_mut().enumerate() {
        *slot = j + 1;
    }
    Ok(Partitions {
        k,
        labels,
        done: false,
    })
}

/// A 2-way split of cluster `parent` into `part` and `rest`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub parent: Vec<usize>,
    /// Always contains the smallest member of `parent`.
    pub part: Vec<usize>,
    pub rest: Vec<usize>,
}

impl SplitCandidate {
    pub fn is_canonical(&self) -> bool {
        !self.part.is_empty() && !self.rest.is_empty() && self.part.first() == self.parent.first()
    }
}

/// All `2^{|U|-1} - 1` splits of `group` up to swapping the two parts.
/// Ordered by the bitmask of the non-minimal members placed in `part`.
pub fn canonical_splits(group: &[usize]) -> Vec<SplitCandidate> {
    let mut parent = group.to_vec();
    parent.sort_unstable();
    parent.dedup();
    if parent.len() < 2 {
        return Vec::new();
    }
    let others = &parent[1..];
    let full = (1u64 << others.len()) - 1;
    (0..full)
        .map(|mask| {
            let mut part = vec![parent[0]];
            let mut rest = Vec::new();
            for (i, &a) in others.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    part.push(a);
                } else {
                    rest.push(a);
                }
            }
            SplitCandidate {
                parent: parent.clone(),
                part,
                rest,
            }
        })
        .collect()
}

/// `sum_c (2^{|c|-1} - 1)`: number of split candidates of an assignment.
pub fn split_count(assignment: &ClusterAssignment) -> u128 {
    assignment
        .clusters()
        .iter()
        .map(|c| (1u128 << (c.len() - 1)) - 1)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    /// Count growth strings with exactly k distinct labels by brute force.
    fn rgs_count(n: usize, k: usize) -> u128 {
        fn go(i: usize, n: usize, max: usize, k: usize, labels: usize) -> u128 {
            if i == n {
                return (labels == k) as u128;
            }
            (0..=max + 1)
                .filter(|&l| l < k)
                .map(|l| go(i + 1, n, max.max(l), k, labels.max(l + 1)))
                .sum()
        }
        if n == 0 {
            return (k == 0) as u128;
        }
        go(1, n, 0, k, 1)
    }

    #[test]
    fn stirling_edges_and_examples() {
        for n in 1..12 {
            assert_eq!(stirling2(n, 1).unwrap(), 1);
            assert_eq!(stirling2(n, n).unwrap(), 1);
        }
        assert_eq!(stirling2(0, 0).unwrap(), 1);
        assert_eq!(stirling2(4, 2).unwrap(), rgs_count(4, 2));
        assert_eq!(rgs_count(4, 2), 7);
        assert_eq!(stirling2(10, 5).unwrap(), rgs_count(10, 5));
        assert_eq!(rgs_count(10, 5), 42525);
        assert!(stirling2(2, 3).is_err());
    }

    #[test]
    fn stirling_overflow_is_reported() {
        assert!(matches!(stirling2(200, 100), Err(Error::Overflow(_))));
    }

    #[test]
    fn enumeration_counts_match_stirling() {
        for n in 1..=8 {
            for k in 1..=n {
                let all: Vec<_> = enumerate_partitions(n, k).unwrap().collect();
                assert_eq!(all.len() as u128, stirling2(n, k).unwrap(), "n={n} k={k}");
                let distinct: HashSet<_> = all.iter().map(|p| p.labels().to_vec()).collect();
                assert_eq!(distinct.len(), all.len());
                assert!(all.iter().all(|p| p.len() == k && p.agents() == n));
                let keys: Vec<_> = all.iter().map(|p| p.labels().to_vec()).collect();
                let mut sorted = keys.clone();
                sorted.sort();
                assert_eq!(keys, sorted);
            }
        }
    }

    #[test]
    fn enumeration_small_cases() {
        let one: Vec<_> = enumerate_partitions(3, 3).unwrap().collect();
        assert_eq!(one, vec![ClusterAssignment::singletons(3)]);
        let whole: Vec<_> = enumerate_partitions(3, 1).unwrap().collect();
        assert_eq!(whole, vec![ClusterAssignment::single(3)]);
        assert!(enumerate_partitions(15, 2).is_err());
        assert!(enumerate_partitions(3, 0).is_err());
    }

    #[test]
    fn split_candidates() {
        assert_eq!(canonical_splits(&[4, 7]).len(), 1);
        let splits = canonical_splits(&[0, 1, 2, 3]);
        assert_eq!(splits.len(), 7);
        for s in &splits {
            assert!(s.is_canonical());
            let mut union: Vec<_> = s.part.iter().chain(&s.rest).copied().collect();
            union.sort();
            assert_eq!(union, vec![0, 1, 2, 3]);
            assert!(s.part.iter().all(|a| !s.rest.contains(a)));
        }
        assert!(canonical_splits(&[5]).is_empty());
    }
}
