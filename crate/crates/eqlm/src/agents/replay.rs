//! Experience replay: a moving window of the most recent transitions.

use std::collections::VecDeque;

use rand::Rng;

use super::Transition;

/// Bounded transition store. Eviction is strictly oldest-first and retained
/// elements keep their insertion order.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    buffer: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "replay capacity must be >= 1");
        ReplayMemory {
            buffer: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Transition> {
        self.buffer.get(index)
    }

    pub fn push(&mut self, transition: Transition) {
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(transition);
    }

    /// Draws `k` distinct transitions uniformly at random (no duplicates
    /// within one minibatch). Requires `k <= len`.
    pub fn sample(&self, k: usize, rng: &mut impl Rng) -> Vec<Transition> {
        assert!(
            k <= self.buffer.len(),
            "sample of {k} from {} stored transitions",
            self.buffer.len()
        );
        rand::seq::index::sample(rng, self.buffer.len(), k)
            .iter()
            .map(|i| self.buffer[i].clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn transition(tag: f64) -> Transition {
        Transition {
            state: [tag, 0.0, 0.0, 0.0],
            action: 0,
            reward: 1.0,
            next_state: [tag, 0.0, 0.0, 0.0],
            terminal: false,
        }
    }

    #[test]
    fn eviction_is_oldest_first_and_order_is_kept() {
        let mut mem = ReplayMemory::new(3);
        for tag in 0..5 {
            mem.push(transition(tag as f64));
        }
        assert_eq!(mem.len(), 3);
        let tags: Vec<f64> = (0..3).map(|i| mem.get(i).unwrap().state[0]).collect();
        assert_eq!(tags, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn sample_has_no_duplicates() {
        let mut mem = ReplayMemory::new(100);
        for tag in 0..50 {
            mem.push(transition(tag as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let batch = mem.sample(10, &mut rng);
            let mut tags: Vec<u64> = batch.iter().map(|t| t.state[0] as u64).collect();
            tags.sort_unstable();
            tags.dedup();
            assert_eq!(tags.len(), 10);
        }
    }

    #[test]
    fn sample_is_uniform_enough() {
        let mut mem = ReplayMemory::new(10);
        for tag in 0..10 {
            mem.push(transition(tag as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = [0usize; 10];
        let draws = 20_000;
        for _ in 0..draws {
            for t in mem.sample(1, &mut rng) {
                counts[t.state[0] as usize] += 1;
            }
        }
        for c in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.1).abs() < 0.02, "frequency {freq}");
        }
    }
}
