//! Secondary preference criteria for candidates that tie on fitness.

use crate::error::{Error, Result};
use crate::fitness::BehaviorArchive;
use crate::genome::{CompatibilityCoefficients, Genome, Species};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SecondaryCriterion {
    /// Members of smaller species are preferred.
    SpeciesSize,
    /// Genomes far (on average) from the rest of the population are preferred.
    CompatDistance,
    /// Behaviourally novel genomes are preferred.
    Novelty,
}

impl SecondaryCriterion {
    pub const ALL: [SecondaryCriterion; 3] =
        [SecondaryCriterion::SpeciesSize, SecondaryCriterion::CompatDistance, SecondaryCriterion::Novelty];

    pub fn label(self) -> &'static str {
        match self {
            SecondaryCriterion::SpeciesSize => "species",
            SecondaryCriterion::CompatDistance => "compat",
            SecondaryCriterion::Novelty => "novelty",
        }
    }
}

impl fmt::Display for SecondaryCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SecondaryCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SecondaryCriterion::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::UnknownCriterion(s.to_string()))
    }
}

/// Population state the secondary scores are computed against.
pub struct PreferenceContext<'a, G> {
    pub population: &'a [G],
    /// Size of each member's species; `None` for unspeciated members.
    pub species_sizes: &'a [Option<usize>],
    /// Behaviour descriptor of each member.
    pub behaviors: &'a [&'a [f64]],
    pub archive: &'a BehaviorArchive,
    pub coefficients: &'a CompatibilityCoefficients,
}

/// Species size of every population index covered by `species`.
pub fn species_sizes(species: &[Species], population: usize) -> Vec<Option<usize>> {
    let mut sizes = vec![None; population];
    for s in species {
        for &m in &s.members {
            sizes[m] = Some(s.len());
        }
    }
    sizes
}

impl<G: AsRef<Genome>> PreferenceContext<'_, G> {
    /// Secondary score of member `index`; higher is preferred.
    pub fn score(&self, criterion: SecondaryCriterion, index: usize) -> Result<f64> {
        match criterion {
            SecondaryCriterion::SpeciesSize => self
                .species_sizes
                .get(index)
                .copied()
                .flatten()
                .map(|size| -(size as f64))
                .ok_or_else(|| Error::contract(format!("population member {index} has no species"))),
            SecondaryCriterion::CompatDistance => {
                let me = self.population[index].as_ref();
                let others = self.population.len() - 1;
                if others == 0 {
                    return Ok(0.0);
                }
                let total: f64 = self
                    .population
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != index)
                    .map(|(_, g)| me.compatibility_distance(g.as_ref(), self.coefficients))
                    .sum();
                Ok(total / others as f64)
            }
            SecondaryCriterion::Novelty => {
                let peers: Vec<&[f64]> =
                    self.behaviors.iter().enumerate().filter(|(j, _)| *j != index).map(|(_, b)| *b).collect();
                Ok(self.archive.novelty(self.behaviors[index], &peers))
            }
        }
    }

    pub fn scores(&self, criterion: SecondaryCriterion) -> Result<Vec<f64>> {
        match criterion {
            // Pairwise distances are symmetric; compute each once.
            SecondaryCriterion::CompatDistance => {
                let n = self.population.len();
                let mut totals = vec![0.0; n];
                for i in 0..n {
                    for j in i + 1..n {
                        let d = self.population[i].as_ref().compatibility_distance(self.population[j].as_ref(), self.coefficients);
                        totals[i] += d;
                        totals[j] += d;
                    }
                }
                Ok(totals.into_iter().map(|t| if n > 1 { t / (n - 1) as f64 } else { 0.0 }).collect())
            }
            _ => (0..self.population.len()).map(|i| self.score(criterion, i)).collect(),
        }
    }
}

/// Orders by fitness (lower first), then secondary score (higher first).
pub fn compare(fitness_a: f64, secondary_a: f64, fitness_b: f64, secondary_b: f64) -> Ordering {
    fitness_a.total_cmp(&fitness_b).then_with(|| secondary_b.total_cmp(&secondary_a))
}

/// Whether a candidate should replace an incumbent: strictly better
/// fitness, or equal fitness and a strictly higher secondary score.
pub fn is_better_than_worst(candidate_fitness: f64, candidate_secondary: f64, incumbent_fitness: f64, incumbent_secondary: f64) -> bool {
    candidate_fitness < incumbent_fitness || (candidate_fitness == incumbent_fitness && candidate_secondary > incumbent_secondary)
}
