use rand::Rng;

/// Past behaviour descriptors for novelty scoring.
#[derive(Clone, Debug, PartialEq)]
pub struct BehaviorArchive {
    k: usize,
    add_probability: f64,
    entries: Vec<Vec<f64>>,
}

impl Default for BehaviorArchive {
    fn default() -> Self {
        BehaviorArchive::new(15, 0.1)
    }
}

impl BehaviorArchive {
    pub fn new(k: usize, add_probability: f64) -> Self {
        BehaviorArchive { k: k.max(1), add_probability: add_probability.clamp(0.0, 1.0), entries: Vec::new() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, behavior: Vec<f64>) {
        self.entries.push(behavior);
    }

    /// Mean distance to the `k` nearest descriptors among the archive and
    /// `peers` (which must not contain the behaviour itself); 1.0 when
    /// there is nothing to compare against.
    pub fn novelty(&self, behavior: &[f64], peers: &[&[f64]]) -> f64 {
        let mut distances: Vec<f64> = self
            .entries
            .iter()
            .map(Vec::as_slice)
            .chain(peers.iter().copied())
            .map(|other| euclidean(behavior, other))
            .collect();
        if distances.is_empty() {
            return 1.0;
        }
        let k = self.k.min(distances.len());
        distances.select_nth_unstable_by(k - 1, f64::total_cmp);
        distances[..k].iter().sum::<f64>() / k as f64
    }

    /// Archives `behavior` with the configured probability.
    pub fn maybe_record<R: Rng + ?Sized>(&mut self, behavior: &[f64], rng: &mut R) {
        if rng.random::<f64>() < self.add_probability {
            self.entries.push(behavior.to_vec());
        }
    }

    /// Scores `behavior`, then archives it with the configured probability.
    pub fn score_and_record<R: Rng + ?Sized>(&mut self, behavior: &[f64], peers: &[&[f64]], rng: &mut R) -> f64 {
        let score = self.novelty(behavior, peers);
        self.maybe_record(behavior, rng);
        score
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
