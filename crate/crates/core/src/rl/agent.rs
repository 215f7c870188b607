use serde::{Deserialize, Serialize};

use super::world::{Observation, NUM_ACTIONS};
use crate::error::{domain_err, Error, Result};
use crate::nn::{backward, forward_batch, forward_stochastic, forward_weight_averaged, predict_weight_averaged};
use crate::nn::{MaskSet, NetworkParams, NetworkSpec};
use crate::numerics::{Matrix, RngStream};
use crate::optim::Optimizer;
use crate::uncertainty::argmax;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Observation,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Observation,
}

/// Fixed-capacity ring of transitions; once full, the oldest is overwritten.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(domain_err!("replay capacity must be positive"));
        }
        Ok(ReplayBuffer {
            items: Vec::with_capacity(capacity.min(1 << 16)),
            capacity,
            cursor: 0,
        })
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    /// `k` transitions drawn uniformly, with replacement, from the filled slots.
    pub fn sample(&self, k: usize, rng: &mut RngStream) -> Result<Vec<&Transition>> {
        if self.items.len() < k || self.items.is_empty() {
            return Err(Error::State(format!(
                "replay holds {} transitions, {k} requested",
                self.items.len()
            )));
        }
        Ok((0..k).map(|_| &self.items[rng.below(self.items.len())]).collect())
    }
}

/// With probability `epsilon` a uniform random action, otherwise the argmax
/// of the weight-averaged Q-values (ties to the lowest index).
pub fn act_epsilon_greedy(
    spec: &NetworkSpec,
    params: &NetworkParams,
    obs: &[f64],
    epsilon: f64,
    rng: &mut RngStream,
) -> Result<usize> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(domain_err!("epsilon {epsilon} outside [0, 1]"));
    }
    if rng.uniform() < epsilon {
        return Ok(rng.below(spec.output_dim()));
    }
    Ok(argmax(&forward_weight_averaged(spec, params, obs)?))
}

/// Argmax of one stochastic pass with fresh masks.
pub fn act_thompson(spec: &NetworkSpec, params: &NetworkParams, obs: &[f64], rng: &mut RngStream) -> Result<usize> {
    let masks = MaskSet::sample(spec, 1, rng);
    let (q, _) = forward_stochastic(spec, params, obs, &masks)?;
    Ok(argmax(&q))
}

/// Q-learning loss `(1/B) Σ ½ (Q(s, a) − target)² + λ Σ (‖W‖² + ‖b‖²)` and its
/// gradient, with `target = r + γ max Q_frozen(s′, ·)` from a weight-averaged
/// pass of the frozen parameters. Only the taken action's output receives
/// gradient; `masks` are used for both passes over the online network.
pub fn td_loss_and_grad(
    spec: &NetworkSpec,
    params: &NetworkParams,
    frozen: &NetworkParams,
    batch: &[&Transition],
    gamma: f64,
    masks: &MaskSet,
) -> Result<(f64, NetworkParams)> {
    if batch.is_empty() {
        return Err(domain_err!("empty replay batch"));
    }
    let b = batch.len();
    let x = Matrix::from_rows(&batch.iter().map(|t| t.obs.as_slice()).collect::<Vec<_>>())?;
    let next = Matrix::from_rows(&batch.iter().map(|t| t.next_obs.as_slice()).collect::<Vec<_>>())?;
    let q_next = predict_weight_averaged(spec, frozen, &next)?;
    let trace = forward_batch(spec, params, &x, masks)?;
    let q = trace.output();
    let mut d_out = Matrix::zeros(b, spec.output_dim());
    let mut loss = 0.0;
    for (i, t) in batch.iter().enumerate() {
        if t.action >= spec.output_dim() {
            return Err(domain_err!("action {} out of range", t.action));
        }
        let best_next = q_next.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let target = t.reward + gamma * best_next;
        let err = q.get(i, t.action) - target;
        loss += 0.5 * err * err;
        d_out.set(i, t.action, err / b as f64);
    }
    let mut grad = backward(spec, params, &trace, &d_out)?;
    let lambda = spec.weight_decay();
    if lambda > 0.0 {
        for (g, p) in grad.blocks_mut().zip(params.blocks()) {
            for (gv, pv) in g.iter_mut().zip(p) {
                *gv += 2.0 * lambda * pv;
            }
        }
        loss += lambda * params.blocks().flatten().map(|v| v * v).sum::<f64>() * b as f64;
    }
    Ok((loss / b as f64, grad))
}

/// Online Q-network with a frozen copy used for bootstrap targets.
#[derive(Clone, Debug)]
pub struct QLearner {
    pub spec: NetworkSpec,
    pub params: NetworkParams,
    pub frozen: NetworkParams,
    pub optimizer: Optimizer,
    pub gamma: f64,
    pub refresh_every: u64,
    pub updates: u64,
}

impl QLearner {
    pub fn new(spec: NetworkSpec, params: NetworkParams, optimizer: Optimizer, gamma: f64, refresh_every: u64) -> Result<Self> {
        params.check(&spec)?;
        if spec.output_dim() != NUM_ACTIONS {
            return Err(Error::Shape(format!("Q-network must have {NUM_ACTIONS} outputs")));
        }
        Ok(QLearner {
            frozen: params.clone(),
            spec,
            params,
            optimizer,
            gamma,
            refresh_every: refresh_every.max(1),
            updates: 0,
        })
    }

    /// One replay step: sample a batch, draw one mask set for it, descend the
    /// TD loss, and refresh the frozen copy on schedule. Returns the loss.
    pub fn replay_train(&mut self, buffer: &ReplayBuffer, batch_size: usize, rng: &mut RngStream) -> Result<f64> {
        let batch = buffer.sample(batch_size, rng)?;
        let masks = MaskSet::sample(&self.spec, batch.len(), rng);
        let (loss, grad) = td_loss_and_grad(&self.spec, &self.params, &self.frozen, &batch, self.gamma, &masks)?;
        self.optimizer.step(&mut self.params, &grad)?;
        self.updates += 1;
        if self.updates % self.refresh_every == 0 {
            self.frozen = self.params.clone();
        }
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LossKind};
    use crate::optim::OptimizerConfig;

    fn transition(action: usize, reward: f64) -> Transition {
        Transition { obs: vec![0.5; 27], action, reward, next_obs: vec![0.1; 27] }
    }

    fn qspec(keep: f64) -> NetworkSpec {
        NetworkSpec::uniform(vec![27, 8, 5], Activation::Relu, keep, LossKind::Euclidean, 0.0).unwrap()
    }

    #[test]
    fn ring_overwrites_oldest_first() {
        let mut b = ReplayBuffer::new(3).unwrap();
        for r in 0..5 {
            b.push(transition(0, r as f64));
        }
        let rewards: Vec<f64> = (0..3).map(|i| b.get(i).unwrap().reward).collect();
        assert_eq!(rewards, vec![3.0, 4.0, 2.0]);
        assert!(matches!(b.sample(4, &mut RngStream::new(0, 0)), Err(Error::State(_))));
    }

    #[test]
    fn sampling_only_touches_filled_slots() {
        let mut b = ReplayBuffer::new(100).unwrap();
        for r in 0..7 {
            b.push(transition(0, r as f64));
        }
        let mut rng = RngStream::new(2, 0);
        assert!(b.sample(8, &mut rng).is_err());
        let mut seen = [0usize; 7];
        for _ in 0..7000 {
            let t = b.sample(1, &mut rng).unwrap()[0];
            seen[t.reward as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800 && c < 1200), "{seen:?}");
    }

    #[test]
    fn greedy_argmax_and_ties() {
        let spec = NetworkSpec::uniform(vec![1, 5], Activation::Identity, 1.0, LossKind::Euclidean, 0.0).unwrap();
        let mut p = NetworkParams::zeros(&spec);
        p.biases[0] = vec![1.0, 5.0, 2.0, 0.0, 3.0];
        let mut rng = RngStream::new(0, 0);
        assert_eq!(act_epsilon_greedy(&spec, &p, &[0.0], 0.0, &mut rng).unwrap(), 1);
        p.biases[0] = vec![1.0, 5.0, 2.0, 5.0, 3.0];
        assert_eq!(act_epsilon_greedy(&spec, &p, &[0.0], 0.0, &mut rng).unwrap(), 1);
        assert_eq!(act_thompson(&spec, &p, &[0.0], &mut rng).unwrap(), 1);
        assert!(act_epsilon_greedy(&spec, &p, &[0.0], 1.5, &mut rng).is_err());
    }

    #[test]
    fn non_taken_actions_get_no_gradient() {
        let spec = NetworkSpec::uniform(vec![27, 5], Activation::Identity, 1.0, LossKind::Euclidean, 0.0).unwrap();
        let p = NetworkParams::init(&spec, &mut RngStream::new(1, 0));
        let t = transition(3, 1.0);
        let (_, g) = td_loss_and_grad(&spec, &p, &p, &[&t], 0.9, &MaskSet::ones(&spec, 1)).unwrap();
        for a in [0, 1, 2, 4] {
            assert!(g.weights[0].row(a).iter().all(|v| *v == 0.0));
            assert_eq!(g.biases[0][a], 0.0);
        }
        assert!(g.biases[0][3] != 0.0);
    }

    #[test]
    fn fixed_transition_with_zero_discount_converges_monotonically() {
        let spec = qspec(1.0);
        let p = NetworkParams::init(&spec, &mut RngStream::new(3, 0));
        let opt = Optimizer::new(&OptimizerConfig::sgd(0.05, 0.0), &p);
        let mut q = QLearner::new(spec, p, opt, 0.0, 100).unwrap();
        let mut buf = ReplayBuffer::new(1).unwrap();
        buf.push(transition(2, 2.0));
        let mut rng = RngStream::new(3, 1);
        let mut prev = f64::INFINITY;
        for _ in 0..200 {
            let gap = (forward_weight_averaged(&q.spec, &q.params, &[0.5; 27]).unwrap()[2] - 2.0).abs();
            assert!(gap <= prev + 1e-12);
            prev = gap;
            q.replay_train(&buf, 1, &mut rng).unwrap();
        }
        assert!(prev < 1e-3, "gap {prev}");
    }
}
