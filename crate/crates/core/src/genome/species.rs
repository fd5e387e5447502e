use super::Genome;

pub type SpeciesId = u32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompatibilityCoefficients {
    pub excess: f64,
    pub disjoint: f64,
    pub weight: f64,
}

impl Default for CompatibilityCoefficients {
    fn default() -> Self {
        CompatibilityCoefficients { excess: 1.0, disjoint: 1.0, weight: 0.4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeciationParams {
    pub threshold: f64,
    pub coefficients: CompatibilityCoefficients,
}

impl Default for SpeciationParams {
    fn default() -> Self {
        SpeciationParams { threshold: 3.0, coefficients: CompatibilityCoefficients::default() }
    }
}

impl Genome {
    /// `(c1·E + c2·D)/N + c3·W̄` with `N` the larger gene count (at least 1).
    pub fn compatibility_distance(&self, other: &Genome, coeffs: &CompatibilityCoefficients) -> f64 {
        let (a, b) = (self.connections(), other.connections());
        let (mut i, mut j) = (0, 0);
        let (mut disjoint, mut matching, mut weight_diff) = (0usize, 0usize, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].innovation.cmp(&b[j].innovation) {
                std::cmp::Ordering::Equal => {
                    matching += 1;
                    weight_diff += (a[i].weight - b[j].weight).abs();
                    i += 1;
                    j += 1;
                }
                std::cmp::Ordering::Less => {
                    disjoint += 1;
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    disjoint += 1;
                    j += 1;
                }
            }
        }
        let excess = (a.len() - i) + (b.len() - j);
        let n = a.len().max(b.len()).max(1) as f64;
        let mean_weight = if matching == 0 { 0.0 } else { weight_diff / matching as f64 };
        (coeffs.excess * excess as f64 + coeffs.disjoint * disjoint as f64) / n + coeffs.weight * mean_weight
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Species {
    pub id: SpeciesId,
    pub representative: Genome,
    /// Indices into the population that was speciated.
    pub members: Vec<usize>,
}

impl Species {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Assigns every genome to the species whose representative is nearest,
/// provided that distance is under the threshold; otherwise the genome
/// founds a new species. Equally near species resolve to the lowest id.
/// Species left without members are dropped.
pub fn speciate<G: AsRef<Genome>>(
    population: &[G],
    previous: &[Species],
    params: &SpeciationParams,
    next_id: &mut SpeciesId,
) -> Vec<Species> {
    let mut species: Vec<Species> = previous
        .iter()
        .map(|s| Species { id: s.id, representative: s.representative.clone(), members: Vec::new() })
        .collect();
    species.sort_by_key(|s| s.id);
    for (index, genome) in population.iter().enumerate() {
        let genome = genome.as_ref();
        let mut best: Option<(usize, f64)> = None;
        for (si, s) in species.iter().enumerate() {
            let d = genome.compatibility_distance(&s.representative, &params.coefficients);
            if d < params.threshold && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((si, d));
            }
        }
        match best {
            Some((si, _)) => species[si].members.push(index),
            None => {
                species.push(Species { id: *next_id, representative: genome.clone(), members: vec![index] });
                *next_id += 1;
            }
        }
    }
    species.retain(|s| !s.members.is_empty());
    species
}

/// Replaces each representative with the species' first member, ready for
/// the next call to [`speciate`].
pub fn rebase_representatives<G: AsRef<Genome>>(species: &mut [Species], population: &[G]) {
    for s in species {
        s.representative = population[s.members[0]].as_ref().clone();
    }
}

#[cfg(test)]
mod tests {
    use super::super::{mutate_add_node, mutate_weights, ConnectionGene, InnovationRegistry, MutationConfig, NodeGene, NodeKind};
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn population(seed: u64, n: usize) -> Vec<Genome> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut reg = InnovationRegistry::new(2, 2);
        (0..n)
            .map(|_| {
                let mut g = Genome::minimal(2, 2, &mut rng).unwrap();
                for _ in 0..rng.random_range(0..6) {
                    g = mutate_add_node(&g, &mut reg, &mut rng);
                    g = mutate_weights(&g, &MutationConfig::default(), &mut rng);
                }
                g
            })
            .collect()
    }

    #[test]
    fn distance_of_identical_is_zero() {
        let p = population(1, 3);
        for g in &p {
            assert_eq!(g.compatibility_distance(g, &CompatibilityCoefficients::default()), 0.0);
        }
    }

    #[test]
    fn distance_hand_alignment() {
        // a: innovations {0, 1, 2}; b: {0, 2}. Matching 0 and 2 with |Δw|
        // of 0.4 and 0.6 (mean 0.5), innovation 1 disjoint, nothing excess.
        let nodes = vec![
            NodeGene { id: 0, kind: NodeKind::Input },
            NodeGene { id: 1, kind: NodeKind::Input },
            NodeGene { id: 2, kind: NodeKind::Bias },
            NodeGene { id: 3, kind: NodeKind::Output },
        ];
        let c = |innovation, from, weight| ConnectionGene { innovation, from, to: 3, weight, enabled: true };
        let a = Genome::from_parts(2, 1, nodes.clone(), vec![c(0, 0, 0.4), c(1, 1, 0.1), c(2, 2, -0.3)]).unwrap();
        let b = Genome::from_parts(2, 1, nodes, vec![c(0, 0, 0.0), c(2, 2, 0.3)]).unwrap();
        let d = a.compatibility_distance(&b, &CompatibilityCoefficients::default());
        assert!((d - (1.0 / 3.0 + 0.2)).abs() < 1e-12);
        assert!((d - 0.5333).abs() < 1e-4);
    }

    #[test]
    fn clones_form_one_species() {
        let g = population(2, 1).pop().unwrap();
        let clones = vec![g; 12];
        let mut next = 0;
        let species = speciate(&clones, &[], &SpeciationParams::default(), &mut next);
        assert_eq!(species.len(), 1);
        assert_eq!(species[0].members.len(), 12);
    }

    #[test]
    fn tiny_threshold_splits_distinct_genomes() {
        let pop = population(3, 10);
        let params = SpeciationParams { threshold: 1e-12, ..Default::default() };
        let mut next = 0;
        assert_eq!(speciate(&pop, &[], &params, &mut next).len(), 10);
    }

    #[test]
    fn equal_distance_goes_to_lowest_id() {
        let g = population(4, 1).pop().unwrap();
        let previous = vec![
            Species { id: 7, representative: g.clone(), members: vec![] },
            Species { id: 3, representative: g.clone(), members: vec![] },
        ];
        let mut next = 10;
        let species = speciate(&[g], &previous, &SpeciationParams::default(), &mut next);
        assert_eq!(species.len(), 1);
        assert_eq!(species[0].id, 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn distance_is_symmetric(seed in any::<u64>()) {
            let p = population(seed, 2);
            let c = CompatibilityCoefficients::default();
            let (ab, ba) = (p[0].compatibility_distance(&p[1], &c), p[1].compatibility_distance(&p[0], &c));
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() < 1e-12);
        }

        #[test]
        fn speciation_is_a_partition(seed in any::<u64>(), n in 1usize..30, threshold in 0.01f64..4.0) {
            let pop = population(seed, n);
            let params = SpeciationParams { threshold, ..Default::default() };
            let mut next = 0;
            let first = speciate(&pop, &[], &params, &mut next);
            let mut rebased = first.clone();
            rebase_representatives(&mut rebased, &pop);
            let second = speciate(&pop, &rebased, &params, &mut next);
            for species in [&first, &second] {
                let mut seen = vec![0usize; n];
                for s in species.iter() {
                    prop_assert!(!s.members.is_empty());
                    for &m in &s.members {
                        seen[m] += 1;
                        let d = pop[m].compatibility_distance(&s.representative, &params.coefficients);
                        prop_assert!(d < params.threshold);
                    }
                }
                prop_assert!(seen.iter().all(|&c| c == 1));
            }
        }
    }
}
