#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use timdp_core::{FactoredMdp, Policy, RewardSpec};

/// Joint controls in mixed-radix order, cluster 0 least significant.
pub fn joint_controls(model: &FactoredMdp) -> Vec<Vec<usize>> {
    let (m, c) = (model.actions(), model.clusters());
    let total = m.pow(c as u32);
    (0..total)
        .map(|mut i| {
            (0..c)
                .map(|_| {
                    let a = i % m;
                    i /= m;
                    a
                })
                .collect()
        })
        .collect()
}

/// Dense `P(s' | s, alpha)` built by multiplying every agent's kernel entry.
pub fn dense_transition(model: &FactoredMdp, alpha: &[usize]) -> DMatrix<f64> {
    let n = model.states();
    let clustering = model.clustering();
    let mut p = DMatrix::zeros(n, n);
    for s in 0..n {
        for t in 0..n {
            let digits = model.decode_state(t).unwrap();
            let mut prob = 1.0;
            for (agent, &d) in digits.iter().enumerate() {
                let a = alpha[clustering.cluster_of(agent)];
                prob *= model.kernel_row(agent, s, a)[d];
            }
            p[(s, t)] = prob;
        }
    }
    p
}

/// Reward evaluated straight from the model's JSON tables.
pub fn table_reward(model: &FactoredMdp, s: usize, alpha: &[usize]) -> f64 {
    let digits = model.decode_state(s).unwrap();
    let clustering = model.clustering();
    match model.reward_spec() {
        RewardSpec::AgentSeparable { tables } => tables
            .iter()
            .enumerate()
            .map(|(n, t)| t[digits[n]][alpha[clustering.cluster_of(n)]])
            .sum(),
        RewardSpec::ClusterSeparable { groups, tables } => groups
            .iter()
            .zip(tables)
            .map(|(g, t)| {
                let mut local = 0;
                let mut place = 1;
                for &n in g {
                    local += digits[n] * place;
                    place *= model.substates()[n];
                }
                t[local][alpha[clustering.cluster_of(g[0])]]
            })
            .sum(),
        RewardSpec::Full { table } => {
            let m = model.actions();
            let joint = alpha.iter().rev().fold(0, |acc, &a| acc * m + a);
            table[s][joint]
        }
        RewardSpec::Indicator {
            desirable,
            normalized,
        } => {
            let hits = desirable
                .iter()
                .enumerate()
                .filter(|(n, d)| d.contains(&digits[*n]))
                .count() as f64;
            if *normalized {
                hits / model.agents() as f64
            } else {
                hits
            }
        }
        RewardSpec::StateOnly { table } => table[s],
    }
}

/// Naive full Bellman operator: every joint control, dense transitions.
pub fn naive_bellman(model: &FactoredMdp, values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let v = DVector::from_column_slice(values);
    let controls = joint_controls(model);
    let mut best = vec![f64::NEG_INFINITY; model.states()];
    let mut arg = vec![0; model.states()];
    for (j, alpha) in controls.iter().enumerate() {
        let next = dense_transition(model, alpha) * &v;
        for s in 0..model.states() {
            let q = table_reward(model, s, alpha) + model.gamma() * next[s];
            if q > best[s] {
                best[s] = q;
                arg[s] = j;
            }
        }
    }
    (best, arg)
}

/// Exact value of a fixed policy from `(I - gamma P) V = r`.
pub fn linear_policy_value(model: &FactoredMdp, policy: &Policy) -> Vec<f64> {
    let n = model.states();
    let mut a = DMatrix::identity(n, n);
    let mut r = DVector::zeros(n);
    for s in 0..n {
        let alpha = policy.at(s);
        let row = dense_transition(model, alpha).row(s).into_owned();
        for t in 0..n {
            a[(s, t)] -= model.gamma() * row[t];
        }
        r[s] = table_reward(model, s, alpha);
    }
    a.lu()
        .solve(&r)
        .expect("nonsingular")
        .iter()
        .copied()
        .collect()
}

/// Optimal values by exhaustive policy search over stationary deterministic
/// policies. Tiny models only.
pub fn brute_optimal_values(model: &FactoredMdp) -> Vec<f64> {
    let controls = joint_controls(model);
    let n = model.states();
    let total = controls.len().pow(n as u32);
    let mut best = vec![f64::NEG_INFINITY; n];
    for mut code in 0..total {
        let mut flat = Vec::with_capacity(n * model.clusters());
        for _ in 0..n {
            flat.extend_from_slice(&controls[code % controls.len()]);
            code /= controls.len();
        }
        let policy = Policy::from_flat(model.clusters(), flat).unwrap();
        for (b, v) in best.iter_mut().zip(linear_policy_value(model, &policy)) {
            *b = b.max(v);
        }
    }
    best
}

pub fn sup_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
