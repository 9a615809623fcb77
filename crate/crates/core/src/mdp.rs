//! Exact tabular MDPs: construction, policy induction, evaluation and policy iteration.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::linalg::check_row_stochastic;

const PROB_TOL: f64 = 1e-12;

/// Finite MDP with expected rewards.
///
/// The kernel is stored row-major as `P[x][a][x']`, the reward as `R[x][a]`.
/// Serializes to `{n_states, n_actions, kernel, reward}` with flat row-major arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpDocument", into = "MdpDocument")]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    kernel: Vec<f64>,
    reward: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MdpDocument {
    n_states: usize,
    n_actions: usize,
    kernel: Vec<f64>,
    reward: Vec<f64>,
}

impl TryFrom<MdpDocument> for Mdp {
    type Error = Error;

    fn try_from(doc: MdpDocument) -> Result<Self> {
        Mdp::new(doc.n_states, doc.n_actions, doc.kernel, doc.reward)
    }
}

impl From<Mdp> for MdpDocument {
    fn from(m: Mdp) -> Self {
        MdpDocument {
            n_states: m.n_states,
            n_actions: m.n_actions,
            kernel: m.kernel,
            reward: m.reward,
        }
    }
}

impl Mdp {
    pub fn new(n_states: usize, n_actions: usize, kernel: Vec<f64>, reward: Vec<f64>) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(config("an MDP needs at least one state and one action"));
        }
        if kernel.len() != n_states * n_actions * n_states {
            return Err(config(format!(
                "kernel has {} entries, expected {}",
                kernel.len(),
                n_states * n_actions * n_states
            )));
        }
        if reward.len() != n_states * n_actions {
            return Err(config(format!(
                "reward has {} entries, expected {}",
                reward.len(),
                n_states * n_actions
            )));
        }
        if let Some(r) = reward.iter().find(|r| !r.is_finite()) {
            return Err(config(format!("non-finite reward {r}")));
        }
        for (row_idx, row) in kernel.chunks(n_states).enumerate() {
            let (x, a) = (row_idx / n_actions, row_idx % n_actions);
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(config(format!("kernel row ({x}, {a}) has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(config(format!("kernel row ({x}, {a}) sums to {sum}")));
            }
        }
        Ok(Mdp {
            n_states,
            n_actions,
            kernel,
            reward,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Distribution over next states after taking `action` in `state`.
    pub fn kernel_row(&self, state: usize, action: usize) -> &[f64] {
        let start = (state * self.n_actions + action) * self.n_states;
        &self.kernel[start..start + self.n_states]
    }

    pub fn transition(&self, state: usize, action: usize, next: usize) -> f64 {
        self.kernel_row(state, action)[next]
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.reward[state * self.n_actions + action]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Stochastic policy `π[x][a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    probs: DMatrix<f64>,
}

impl Policy {
    pub fn new(probs: DMatrix<f64>) -> Result<Self> {
        for (x, row) in probs.row_iter().enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(config(format!("policy row {x} has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(config(format!("policy row {x} sums to {sum}")));
            }
        }
        Ok(Policy { probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Policy {
            probs: DMatrix::from_element(n_states, n_actions, 1.0 / n_actions as f64),
        }
    }

    pub fn deterministic(actions: &[usize], n_actions: usize) -> Result<Self> {
        let mut probs = DMatrix::zeros(actions.len(), n_actions);
        for (x, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(config(format!("action {a} out of range at state {x}")));
            }
            probs[(x, a)] = 1.0;
        }
        Ok(Policy { probs })
    }

    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn n_states(&self) -> usize {
        self.probs.nrows()
    }

    /// The chosen action at each state if the policy is deterministic.
    pub fn actions(&self) -> Option<Vec<usize>> {
        self.probs
            .row_iter()
            .map(|row| row.iter().position(|p| *p == 1.0))
            .collect()
    }
}

/// Policy-induced Markov reward process `(P^π, R^π, γ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovChain {
    transition: DMatrix<f64>,
    reward: DVector<f64>,
    gamma: f64,
}

impl MarkovChain {
    pub fn new(transition: DMatrix<f64>, reward: DVector<f64>, gamma: f64) -> Result<Self> {
        check_row_stochastic(&transition, PROB_TOL)?;
        if reward.len() != transition.nrows() {
            return Err(config(format!(
                "reward has length {}, transition is {}x{}",
                reward.len(),
                transition.nrows(),
                transition.ncols()
            )));
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(config("reward vector has non-finite entries"));
        }
        check_discount(gamma)?;
        Ok(MarkovChain {
            transition,
            reward,
            gamma,
        })
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn reward(&self) -> &DVector<f64> {
        &self.reward
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_states(&self) -> usize {
        self.reward.len()
    }

    /// Same dynamics and discount with a different reward vector.
    pub fn with_reward(&self, reward: DVector<f64>) -> Result<Self> {
        MarkovChain::new(self.transition.clone(), reward, self.gamma)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        MarkovChain::new(self.transition.clone(), self.reward.clone(), gamma)
    }
}

pub(crate) fn check_discount(gamma: f64) -> Result<()> {
    if (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(config(format!("discount {gamma} outside [0, 1)")))
    }
}

/// Sequence of policies visited by policy iteration with their exact values.
#[derive(Clone, Debug)]
pub struct PolicyIterationTrace {
    pub policies: Vec<Policy>,
    pub values: Vec<DVector<f64>>,
    pub converged: bool,
}

/// Chain of `n` states with actions left (0) and right (1).
///
/// With probability `slip` the executed action is drawn uniformly instead of
/// the intended one. Moving off an end keeps the agent in place. Taking left in
/// state 0 pays `left_reward`, taking right in state `n - 1` pays `right_reward`.
pub fn build_chain_mdp(n: usize, slip: f64, left_reward: f64, right_reward: f64) -> Result<Mdp> {
    if n < 2 {
        return Err(config(format!("chain needs at least 2 states, got {n}")));
    }
    if !(0.0..=1.0).contains(&slip) {
        return Err(config(format!("slip {slip} outside [0, 1]")));
    }
    let n_actions = 2;
    let mut kernel = vec![0.0; n * n_actions * n];
    let mut reward = vec![0.0; n * n_actions];
    let destination = |x: usize, a: usize| {
        if a == 0 {
            x.saturating_sub(1)
        } else {
            (x + 1).min(n - 1)
        }
    };
    for x in 0..n {
        for a in 0..n_actions {
            let row = &mut kernel[(x * n_actions + a) * n..(x * n_actions + a + 1) * n];
            row[destination(x, a)] += 1.0 - slip;
            for executed in 0..n_actions {
                row[destination(x, executed)] += slip / n_actions as f64;
            }
        }
    }
    reward[0] = left_reward;
    reward[(n - 1) * n_actions + 1] = right_reward;
    Mdp::new(n, n_actions, kernel, reward)
}

/// Single-action two-state MDP with the given self-transition probabilities.
pub fn build_two_state_mdp(stay_prob_a: f64, stay_prob_b: f64, rewards: [f64; 2]) -> Result<(Mdp, Policy)> {
    for p in [stay_prob_a, stay_prob_b] {
        if !(0.0..=1.0).contains(&p) {
            return Err(config(format!("probability {p} outside [0, 1]")));
        }
    }
    let kernel = vec![stay_prob_a, 1.0 - stay_prob_a, 1.0 - stay_prob_b, stay_prob_b];
    let mdp = Mdp::new(2, 1, kernel, rewards.to_vec())?;
    Ok((mdp, Policy::uniform(2, 1)))
}

/// `P^π(x'|x) = Σ_a π(a|x) P(x'|x,a)` and `R^π(x) = Σ_a π(a|x) R(x,a)`.
pub fn induce(mdp: &Mdp, policy: &Policy, gamma: f64) -> Result<MarkovChain> {
    let n = mdp.n_states();
    if policy.probs.nrows() != n || policy.probs.ncols() != mdp.n_actions() {
        return Err(config(format!(
            "policy is {}x{}, MDP has {} states and {} actions",
            policy.probs.nrows(),
            policy.probs.ncols(),
            n,
            mdp.n_actions()
        )));
    }
    check_discount(gamma)?;
    let mut transition = DMatrix::zeros(n, n);
    let mut reward = DVector::zeros(n);
    for x in 0..n {
        for a in 0..mdp.n_actions() {
            let pa = policy.probs[(x, a)];
            if pa == 0.0 {
                continue;
            }
            reward[x] += pa * mdp.reward(x, a);
            for (y, p) in mdp.kernel_row(x, a).iter().enumerate() {
                transition[(x, y)] += pa * p;
            }
        }
    }
    MarkovChain::new(transition, reward, gamma)
}

/// Solves `(I - γP^π) V = R^π`.
pub fn exact_value(chain: &MarkovChain) -> Result<DVector<f64>> {
    let n = chain.n_states();
    let system = DMatrix::identity(n, n) - chain.transition() * chain.gamma();
    let value = system
        .clone()
        .lu()
        .solve(chain.reward())
        .ok_or_else(|| Error::Numerical {
            context: "policy evaluation solve".into(),
            residual: f64::INFINITY,
        })?;
    let residual = (&system * &value - chain.reward()).amax();
    if !residual.is_finite() || residual > 1e-9 * (1.0 + value.amax()) {
        return Err(Error::Numerical {
            context: "policy evaluation solve".into(),
            residual,
        });
    }
    Ok(value)
}

/// `Q(x,a) = R(x,a) + γ Σ_{x'} P(x'|x,a) V(x')`.
pub fn q_values(mdp: &Mdp, value: &DVector<f64>, gamma: f64) -> Result<DMatrix<f64>> {
    if value.len() != mdp.n_states() {
        return Err(config(format!(
            "value has length {}, MDP has {} states",
            value.len(),
            mdp.n_states()
        )));
    }
    Ok(DMatrix::from_fn(mdp.n_states(), mdp.n_actions(), |x, a| {
        let next: f64 = mdp.kernel_row(x, a).iter().zip(value.iter()).map(|(p, v)| p * v).sum();
        mdp.reward(x, a) + gamma * next
    }))
}

/// Deterministic greedy policy; ties go to the lowest action index.
pub fn greedy_policy(mdp: &Mdp, value: &DVector<f64>, gamma: f64) -> Result<Policy> {
    let q = q_values(mdp, value, gamma)?;
    let actions: Vec<usize> = q
        .row_iter()
        .map(|row| {
            let best = row.max();
            let tol = 1e-12 * best.abs().max(1.0);
            row.iter().position(|v| *v >= best - tol).unwrap_or(0)
        })
        .collect();
    Policy::deterministic(&actions, mdp.n_actions())
}

/// Exact policy iteration starting from `init`.
///
/// Every evaluated `(π_j, V_j)` is recorded, the initial policy included. Stops
/// when the greedy step reproduces the current policy or after `max_iters`
/// evaluations.
pub fn policy_iteration(mdp: &Mdp, gamma: f64, max_iters: usize, init: &Policy) -> Result<PolicyIterationTrace> {
    if max_iters == 0 {
        return Err(config("max_iters must be at least 1"));
    }
    let mut policies = Vec::new();
    let mut values = Vec::new();
    let mut current = init.clone();
    let mut converged = false;
    for _ in 0..max_iters {
        let value = exact_value(&induce(mdp, &current, gamma)?)?;
        let next = greedy_policy(mdp, &value, gamma)?;
        policies.push(current.clone());
        values.push(value);
        if next == current {
            converged = true;
            break;
        }
        current = next;
    }
    Ok(PolicyIterationTrace {
        policies,
        values,
        converged,
    })
}
