use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// A partition of agents `0..N` into disjoint, nonempty, covering clusters.
///
/// Always held in canonical form: members sorted ascending inside each
/// cluster, clusters ordered by their smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct ClusterAssignment {
    clusters: Vec<Vec<usize>>,
    agent_cluster: Vec<usize>,
}

impl ClusterAssignment {
    /// Validates and canonicalizes `clusters` as a partition of `0..N`, where
    /// `N` is inferred from the largest member.
    pub fn new(clusters: Vec<Vec<usize>>) -> Result<Self> {
        let n = clusters.iter().flatten().map(|&a| a + 1).max().unwrap_or(0);
        Self::for_agents(clusters, n)
    }

    /// Validates `clusters` as a partition of exactly `0..agents`.
    pub fn for_agents(mut clusters: Vec<Vec<usize>>, agents: usize) -> Result<Self> {
        if agents == 0 {
            return domain("a clustering needs at least one agent");
        }
        let mut owner = vec![usize::MAX; agents];
        for c in clusters.iter_mut() {
            if c.is_empty() {
                return domain("clusters must be nonempty");
            }
            c.sort_unstable();
        }
        clusters.sort_by_key(|c| c[0]);
        for (ci, c) in clusters.iter().enumerate() {
            for &a in c {
                if a >= agents {
                    return domain(format!("agent {a} out of range 0..{agents}"));
                }
                if owner[a] != usize::MAX {
                    return domain(format!("agent {a} appears in more than one cluster"));
                }
                owner[a] = ci;
            }
        }
        if let Some(a) = owner.iter().position(|&o| o == usize::MAX) {
            return domain(format!("agent {a} is not assigned to any cluster"));
        }
        Ok(Self {
            clusters,
            agent_cluster: owner,
        })
    }

    /// Every agent in one cluster.
    pub fn single(agents: usize) -> Self {
        Self::for_agents(vec![(0..agents).collect()], agents).expect("valid single cluster")
    }

    /// Every agent in its own cluster.
    pub fn singletons(agents: usize) -> Self {
        Self::for_agents((0..agents).map(|a| vec![a]).collect(), agents)
            .expect("valid singleton clustering")
    }

    /// Builds the assignment from cluster labels (`labels[a]` is the cluster
    /// of agent `a`). Every label below the maximum must be used; the result
    /// is canonicalized.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let k = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
        let mut clusters = vec![Vec::new(); k];
        for (a, &l) in labels.iter().enumerate() {
            clusters[l].push(a);
        }
        Self::for_agents(clusters, labels.len())
    }

    /// Restricted growth string of the canonical form.
    pub fn labels(&self) -> &[usize] {
        &self.agent_cluster
    }

    /// Compact label string (`"00101"`), base-36 digits.
    pub fn rgs_string(&self) -> String {
        self.agent_cluster
            .iter()
            .map(|&l| std::char::from_digit(l as u32 % 36, 36).unwrap_or('?'))
            .collect()
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn agents(&self) -> usize {
        self.agent_cluster.len()
    }

    /// Cluster index of `agent`.
    #[inline]
    pub fn cluster_of(&self, agent: usize) -> usize {
        self.agent_cluster[agent]
    }

    /// Replace cluster `index` by the two parts `part` and `cluster \ part`.
    pub fn split(&self, index: usize, part: &[usize]) -> Result<Self> {
        let Some(parent) = self.clusters.get(index) else {
            return domain(format!("cluster {index} does not exist"));
        };
        let rest: Vec<usize> = parent
            .iter()
            .copied()
            .filter(|a| !part.contains(a))
            .collect();
        if part.is_empty() || rest.is_empty() || part.iter().any(|a| !parent.contains(a)) {
            return domain("split part must be a nonempty proper subset of the cluster");
        }
        let mut clusters: Vec<Vec<usize>> = self
            .clusters
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != index)
            .map(|(_, c)| c.clone())
            .collect();
        clusters.push(part.to_vec());
        clusters.push(rest);
        Self::for_agents(clusters, self.agents())
    }

    /// True when `self` is obtained from `coarser` by splitting clusters.
    pub fn refines(&self, coarser: &Self) -> bool {
        self.agents() == coarser.agents()
            && self.clusters.iter().all(|c| {
                let owner = coarser.cluster_of(c[0]);
                c.iter().all(|&a| coarser.cluster_of(a) == owner)
            })
    }
}

impl TryFrom<Vec<Vec<usize>>> for ClusterAssignment {
    type Error = crate::Error;

    fn try_from(v: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ClusterAssignment> for Vec<Vec<usize>> {
    fn from(c: ClusterAssignment) -> Self {
        c.clusters
    }
}

impl fmt::Display for ClusterAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.clusters.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, a) in c.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalizes() {
        let c = ClusterAssignment::new(vec![vec![3, 1], vec![2, 0]]).unwrap();
        assert_eq!(c.clusters(), &[vec![0, 2], vec![1, 3]]);
        assert_eq!(c.labels(), &[0, 1, 0, 1]);
        assert_eq!(c.rgs_string(), "0101");
        assert_eq!(c.to_string(), "{{0,2},{1,3}}");
    }

    #[test]
    fn rejects_overlap_gaps_and_empties() {
        assert!(ClusterAssignment::new(vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(ClusterAssignment::for_agents(vec![vec![0], vec![2]], 3).is_err());
        assert!(ClusterAssignment::new(vec![vec![0], vec![]]).is_err());
    }

    #[test]
    fn split_and_refine() {
        let c = ClusterAssignment::single(4);
        let s = c.split(0, &[1, 3]).unwrap();
        assert_eq!(s.clusters(), &[vec![0, 2], vec![1, 3]]);
        assert!(s.refines(&c));
        assert!(!c.refines(&s));
        assert!(c.split(0, &[0, 1, 2, 3]).is_err());
    }

    #[test]
    fn labels_round_trip() {
        let c = ClusterAssignment::from_labels(&[0, 0, 1, 2, 1]).unwrap();
        assert_eq!(c.labels(), &[0, 0, 1, 2, 1]);
        assert_eq!(c.len(), 3);
    }
}
