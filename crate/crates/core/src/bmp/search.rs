use std::cmp::Ordering;

use nalgebra::DVector;

use super::metric::pi_initial;
use super::node::{Activation, CandidateNode, Precomputed, Scored};
use super::SearchConfig;
use crate::error::{Error, Result};
use crate::model::{PilotSystem, C64};

/// Retained hypotheses and their normalized posterior weights.
#[derive(Debug, Clone)]
pub struct PosteriorSet {
    pub candidates: Vec<CandidateNode>,
    pub weights: Vec<f64>,
}

impl PosteriorSet {
    /// Normalizes `exp(pi)` over `candidates` in the log domain.
    pub fn from_candidates(candidates: Vec<CandidateNode>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::InvalidParameter("posterior needs at least one candidate".into()));
        }
        let weights = normalized_weights(candidates.iter().map(|c| c.pi));
        Ok(Self { candidates, weights })
    }

    /// Single hypothesis with weight one.
    pub fn single(candidate: CandidateNode) -> Self {
        Self {
            candidates: vec![candidate],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Index of the highest-weight candidate (first one on ties).
    pub fn map_index(&self) -> usize {
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = i;
            }
        }
        best
    }

    pub fn map_candidate(&self) -> &CandidateNode {
        &self.candidates[self.map_index()]
    }

    /// The `n` highest-weight candidates with their weights, best first.
    pub fn top(&self, n: usize) -> Vec<(&CandidateNode, f64)> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.weights[b]
                .total_cmp(&self.weights[a])
                .then_with(|| support_order(&self.candidates[a], &self.candidates[b]))
        });
        order
            .into_iter()
            .take(n)
            .map(|i| (&self.candidates[i], self.weights[i]))
            .collect()
    }
}

/// `exp(pi_i - max) / sum_j exp(pi_j - max)`.
pub(crate) fn normalized_weights(pis: impl Iterator<Item = f64> + Clone) -> Vec<f64> {
    let max = pis.clone().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = pis.map(|p| (p - max).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / total).collect()
}

/// Work counters of one search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Complex multiplications spent on metric updates and cache maintenance.
    pub multiplications: u64,
    /// Child hypotheses scored, duplicates included.
    pub evaluated: usize,
    /// Distinct child hypotheses after deduplication.
    pub unique: usize,
    /// Stages actually run.
    pub stages: usize,
    /// Children dropped because their update was numerically invalid.
    pub aborted: usize,
}

/// Lexicographic order on the sorted active-tap lists.
fn support_order(a: &CandidateNode, b: &CandidateNode) -> Ordering {
    a.support.active().cmp(&b.support.active())
}

/// Runs the `D`-best search and returns every retained hypothesis, root included.
pub fn search(y: &DVector<C64>, system: &PilotSystem, config: &SearchConfig) -> Result<PosteriorSet> {
    search_with_stats(y, system, config).map(|(set, _)| set)
}

struct Child {
    parent: usize,
    tap: usize,
    /// Order-independent hash of the child's support.
    hash: u64,
    pi: f64,
    gain: f64,
    beta: f64,
    proj: C64,
}

/// Per-tap random words; a support hashes to the XOR of its taps' words.
fn tap_word(tap: usize) -> u64 {
    let mut z = (tap as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `parent_a + {tap_a} == parent_b + {tap_b}` for two parents of equal size.
fn same_child(frontier: &[CandidateNode], a: &Child, b: &Child) -> bool {
    let (sa, sb) = (&frontier[a.parent].support, &frontier[b.parent].support);
    if a.tap == b.tap {
        return sa == sb;
    }
    sa.is_active(b.tap)
        && sb.is_active(a.tap)
        && (0..sa.len()).all(|t| t == a.tap || t == b.tap || sa.is_active(t) == sb.is_active(t))
}

/// Number of scored children that repeat the support of another scored child.
///
/// Two parents of equal size share a child only when they differ in exactly
/// one tap each, so only such parent pairs are inspected. `bases` holds the
/// parents' support hashes and `aborted` the `(parent, tap)` pairs left unscored.
fn duplicate_count(frontier: &[CandidateNode], bases: &[u64], words: &[u64], aborted: &[(usize, usize)]) -> usize {
    let mut shared: Vec<u64> = Vec::new();
    for a in 0..frontier.len() {
        for b in a + 1..frontier.len() {
            let (sa, sb) = (frontier[a].support.bits(), frontier[b].support.bits());
            // Taps active in only one of the two parents; a shared child needs one each way.
            let (mut only_a, mut only_b, mut differ) = (0, 0, 0);
            for (t, (&x, &y)) in sa.iter().zip(sb).enumerate() {
                if x != y {
                    differ += 1;
                    if differ > 2 {
                        break;
                    }
                    if x {
                        only_a = t;
                    } else {
                        only_b = t;
                    }
                }
            }
            if differ != 2 || aborted.contains(&(a, only_b)) || aborted.contains(&(b, only_a)) {
                continue;
            }
            shared.push(bases[a] ^ words[only_b]);
        }
    }
    // A support reached from k parents appears in k(k-1)/2 pairs and k times in total.
    shared.sort_unstable();
    let mut dups = 0;
    let mut i = 0;
    while i < shared.len() {
        let mut j = i;
        while j < shared.len() && shared[j] == shared[i] {
            j += 1;
        }
        let pairs = (j - i) as f64;
        dups += ((1.0 + (1.0 + 8.0 * pairs).sqrt()) / 2.0).round() as usize - 1;
        i = j;
    }
    dups
}

/// Ranking of children: metric descending, then support, then origin.
fn child_order(frontier: &[CandidateNode], a: &Child, b: &Child) -> Ordering {
    b.pi.total_cmp(&a.pi)
        .then_with(|| child_key(frontier, a).cmp(&child_key(frontier, b)))
        .then_with(|| (a.parent, a.tap).cmp(&(b.parent, b.tap)))
}

/// The best `cap` children with distinct supports seen so far, best first.
/// A support offered twice keeps its better copy.
struct Pool {
    cap: usize,
    best: Vec<Child>,
}

impl Pool {
    /// Metrics below this can no longer enter the pool.
    fn floor(&self) -> f64 {
        match self.best.last() {
            Some(worst) if self.best.len() == self.cap => worst.pi,
            _ => f64::NEG_INFINITY,
        }
    }

    fn offer(&mut self, frontier: &[CandidateNode], c: Child) {
        let better = |a: &Child, b: &Child| child_order(frontier, a, b) == Ordering::Less;
        if let Some(i) = self
            .best
            .iter()
            .position(|k| k.hash == c.hash && same_child(frontier, k, &c))
        {
            if !better(&c, &self.best[i]) {
                return;
            }
            self.best.remove(i);
        } else if self.best.len() == self.cap {
            if !better(&c, &self.best[self.cap - 1]) {
                return;
            }
            self.best.pop();
        }
        let at = self.best.partition_point(|k| better(k, &c));
        self.best.insert(at, c);
    }
}

fn child_key(frontier: &[CandidateNode], c: &Child) -> Vec<usize> {
    frontier[c.parent].support.with(c.tap).active()
}

pub fn search_with_stats(
    y: &DVector<C64>,
    system: &PilotSystem,
    config: &SearchConfig,
) -> Result<(PosteriorSet, SearchStats)> {
    let taps = system.taps();
    if y.len() != system.rows() {
        return Err(Error::Dimension(format!(
            "observation of length {} for {} pilot rows",
            y.len(),
            system.rows()
        )));
    }
    config.validate(taps)?;
    let max_support = config.resolve_max_support(taps)?;
    let mut stats = SearchStats::default();
    let mut mults = 0u64;

    let words: Vec<u64> = (0..taps).map(tap_word).collect();
    let scratch = Precomputed::new(y, system, &mut mults);
    let root = CandidateNode::root(taps, pi_initial(y, config, taps)?);
    let mut retained = Vec::with_capacity(1 + max_support * config.branch_width);
    let mut frontier = vec![root];

    for _stage in 1..=max_support {
        let last: Vec<&Activation> = frontier.iter().filter_map(|n| n.activations().last().map(|a| &**a)).collect();
        scratch.fill_correlations(&last, &mut mults);
        let mut pool = Pool {
            cap: config.branch_width,
            best: Vec::with_capacity(config.branch_width.min(frontier.len() * taps) + 1),
        };
        let mut accumulators = Vec::with_capacity(frontier.len());
        let mut bases = Vec::with_capacity(frontier.len());
        let mut aborted = Vec::new();
        let mut scored = 0;
        for (p, parent) in frontier.iter().enumerate() {
            let base = parent.activations().iter().fold(0u64, |h, a| h ^ words[a.tap]);
            bases.push(base);
            let inactive = taps - parent.support.count();
            stats.evaluated += inactive;
            scored += inactive;
            let acc = parent.expansion_gains(&scratch, config, &mut mults, |tap, outcome| {
                match outcome {
                    Scored::Invalid => {
                        scored -= 1;
                        aborted.push((p, tap));
                    }
                    Scored::Gain(gain, beta, proj) => {
                        let pi = parent.pi + gain;
                        if pi >= pool.floor() {
                            let child = Child {
                                parent: p,
                                tap,
                                hash: base ^ words[tap],
                                pi,
                                gain,
                                beta,
                                proj,
                            };
                            pool.offer(&frontier, child);
                        }
                    }
                }
                pool.floor() - parent.pi
            });
            accumulators.push(acc);
        }
        stats.aborted += aborted.len();
        if scored == 0 {
            break;
        }
        stats.stages += 1;
        stats.unique += scored - duplicate_count(&frontier, &bases, &words, &aborted);

        let next: Vec<CandidateNode> = pool
            .best
            .iter()
            .map(|c| {
                frontier[c.parent].expand(
                    c.tap,
                    c.gain,
                    c.beta,
                    c.proj,
                    &accumulators[c.parent],
                    system,
                    config,
                    &mut mults,
                )
            })
            .collect();
        retained.append(&mut frontier);
        frontier = next;
    }
    retained.append(&mut frontier);

    stats.multiplications = mults;
    Ok((PosteriorSet::from_candidates(retained)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bmp::pi_direct;
    use crate::model::{build_pilot_system, FieldMode, SupportIndicator};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn instance(rows: usize, taps: usize, seed: u64) -> (PilotSystem, DVector<C64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = build_pilot_system(rows, taps, 64, FieldMode::Complex, &mut rng).unwrap();
        let y = DVector::from_fn(rows, |_, _| FieldMode::Complex.gaussian(0.1, &mut rng));
        (sys, y)
    }

    #[test]
    fn walkthrough_keeps_one_survivor_per_stage() {
        let (sys, y) = instance(4, 5, 1);
        let cfg = SearchConfig::new(0.3, 1.0, 0.1).with_branch_width(1).with_max_support(3);
        let (set, stats) = search_with_stats(&y, &sys, &cfg).unwrap();
        assert_eq!(set.len(), 4);
        assert_eq!(stats.stages, 3);
        assert_eq!(stats.evaluated, 5 + 4 + 3);
        for (s, cand) in set.candidates.iter().enumerate() {
            assert_eq!(cand.support.count(), s);
            if s > 0 {
                let prev = &set.candidates[s - 1].support;
                assert!(prev.active().iter().all(|&t| cand.support.is_active(t)));
            }
        }
    }

    #[test]
    fn second_stage_unique_count() {
        let (sys, y) = instance(8, 20, 2);
        for d in [1usize, 2, 3, 5] {
            let cfg = SearchConfig::new(0.1, 1.0, 0.1).with_branch_width(d).with_max_support(2);
            let (_, stats) = search_with_stats(&y, &sys, &cfg).unwrap();
            assert_eq!(stats.unique, 20 + 20 * d - d * (d + 1) / 2);
        }
    }

    #[test]
    fn noiseless_single_tap_is_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sys = build_pilot_system(12, 16, 64, FieldMode::Complex, &mut rng).unwrap();
        let y = sys.column(3).into_owned();
        let cfg = SearchConfig::new(0.1, 1.0, 1e-8).with_max_support(3);
        let set = search(&y, &sys, &cfg).unwrap();
        assert_eq!(set.map_candidate().support.active(), vec![3]);
    }

    #[test]
    fn wide_search_finds_exhaustive_map() {
        let (sys, y) = instance(8, 10, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let truth = sys.column(2) * C64::new(0.8, 0.1) + sys.column(7) * C64::new(-0.5, 0.3);
        let y = y + truth + DVector::from_fn(8, |_, _| FieldMode::Complex.gaussian(0.01, &mut rng));
        let cfg = SearchConfig::new(0.2, 1.0, 0.05).with_branch_width(1024).with_max_support(10);
        let set = search(&y, &sys, &cfg).unwrap();
        let mut best = (f64::NEG_INFINITY, SupportIndicator::empty(10));
        for mask in 0u32..1024 {
            let g = SupportIndicator::from_bits((0..10).map(|i| mask >> i & 1 == 1).collect());
            let pi = pi_direct(&g, &y, &sys, &cfg).unwrap();
            if pi > best.0 {
                best = (pi, g);
            }
        }
        assert_eq!(set.map_candidate().support, best.1);
    }

    #[test]
    fn supports_are_unique() {
        let (sys, y) = instance(10, 24, 5);
        let cfg = SearchConfig::new(0.2, 1.0, 0.1).with_branch_width(6).with_max_support(6);
        let set = search(&y, &sys, &cfg).unwrap();
        let mut keys: Vec<_> = set.candidates.iter().map(|c| c.support.clone()).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), set.len());
    }

    #[test]
    fn weights_are_normalized_and_shift_invariant() {
        let (sys, y) = instance(10, 24, 6);
        let cfg = SearchConfig::new(0.2, 1.0, 0.1);
        let set = search(&y, &sys, &cfg).unwrap();
        let total: f64 = set.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let shifted = normalized_weights(set.candidates.iter().map(|c| c.pi + 1234.5));
        for (a, b) in shifted.iter().zip(&set.weights) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn search_is_deterministic() {
        let (sys, y) = instance(10, 24, 7);
        let cfg = SearchConfig::new(0.2, 1.0, 0.1).with_branch_width(4);
        let a = search(&y, &sys, &cfg).unwrap();
        let b = search(&y, &sys, &cfg).unwrap();
        let pis = |s: &PosteriorSet| s.candidates.iter().map(|c| (c.support.clone(), c.pi.to_bits())).collect::<Vec<_>>();
        assert_eq!(pis(&a), pis(&b));
    }

    #[test]
    fn mismatched_observation_is_rejected() {
        let (sys, _) = instance(10, 24, 8);
        let y = DVector::zeros(9);
        assert!(search(&y, &sys, &SearchConfig::new(0.2, 1.0, 0.1)).is_err());
    }
}
