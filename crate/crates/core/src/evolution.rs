//! Grammatical-evolution operators and generational replacement.

use std::cmp::Ordering;

use rand::Rng;

use crate::dtree::DecisionTree;
use crate::error::{Error, Result};
use crate::grammar::{Genotype, TranslationResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fitness {
    Unevaluated,
    /// Assigned to individuals whose genotype does not translate to a tree.
    Invalid,
    Score(f64),
}

impl Fitness {
    pub fn score(&self) -> Option<f64> {
        match self {
            Fitness::Score(s) => Some(*s),
            _ => None,
        }
    }

    /// Total order over evaluated fitness; `Invalid` is below every score.
    /// Errors on `Unevaluated`.
    pub fn compare(&self, other: &Fitness) -> Result<Ordering> {
        match (self, other) {
            (Fitness::Unevaluated, _) | (_, Fitness::Unevaluated) => {
                Err(Error::ContractViolation("comparing an unevaluated individual".into()))
            }
            (Fitness::Invalid, Fitness::Invalid) => Ok(Ordering::Equal),
            (Fitness::Invalid, Fitness::Score(_)) => Ok(Ordering::Less),
            (Fitness::Score(_), Fitness::Invalid) => Ok(Ordering::Greater),
            (Fitness::Score(a), Fitness::Score(b)) => Ok(a.total_cmp(b)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genotype: Genotype,
    pub fitness: Fitness,
    pub phenotype: Option<TranslationResult>,
    /// Learned tree carried over from a parent when `carry_q` is on and the
    /// genotype is an exact copy.
    pub tree: Option<DecisionTree>,
}

impl Individual {
    pub fn new(genotype: Genotype) -> Self {
        Individual {
            genotype,
            fitness: Fitness::Unevaluated,
            phenotype: None,
            tree: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvoParams {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    /// Probability that a child is mutated at all.
    pub mutation_prob: f64,
    /// Per-gene replacement probability within a mutated child.
    pub mutation_rate: f64,
    pub gene_value_max: u32,
    pub tournament_size: usize,
    pub genotype_length: usize,
    pub carry_q: bool,
}

impl Default for EvoParams {
    fn default() -> Self {
        EvoParams {
            population_size: 500,
            generations: 100,
            crossover_prob: 0.1,
            mutation_prob: 0.9,
            mutation_rate: 0.05,
            gene_value_max: 40_000,
            tournament_size: 2,
            genotype_length: 1000,
            carry_q: false,
        }
    }
}

impl EvoParams {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(name, "must lie in [0, 1]"))
            }
        };
        prob("crossover_prob", self.crossover_prob)?;
        prob("mutation_prob", self.mutation_prob)?;
        prob("mutation_rate", self.mutation_rate)?;
        let positive = |name: &str, v: usize| {
            if v >= 1 {
                Ok(())
            } else {
                Err(Error::config(name, "must be at least 1"))
            }
        };
        positive("population_size", self.population_size)?;
        positive("generations", self.generations)?;
        positive("genotype_length", self.genotype_length)?;
        positive("tournament_size", self.tournament_size)?;
        if self.gene_value_max == 0 {
            return Err(Error::config("gene_value_max", "must be at least 1"));
        }
        Ok(())
    }
}

pub fn init_pop<R: Rng + ?Sized>(params: &EvoParams, rng: &mut R) -> Vec<Individual> {
    (0..params.population_size)
        .map(|_| Individual::new(Genotype::random(params.genotype_length, params.gene_value_max, rng)))
        .collect()
}

/// Draws `k` individuals with replacement and returns a copy of the best;
/// ties go to the earliest draw.
pub fn tournament_select<R: Rng + ?Sized>(pop: &[Individual], k: usize, rng: &mut R) -> Result<Individual> {
    Ok(pop[tournament_index(pop, k, rng)?].clone())
}

fn tournament_index<R: Rng + ?Sized>(pop: &[Individual], k: usize, rng: &mut R) -> Result<usize> {
    if pop.is_empty() {
        return Err(Error::ContractViolation("tournament over an empty population".into()));
    }
    if k == 0 {
        return Err(Error::ContractViolation("tournament size 0".into()));
    }
    let mut best = rng.gen_range(0..pop.len());
    if pop[best].fitness == Fitness::Unevaluated {
        return Err(Error::ContractViolation("tournament over an unevaluated individual".into()));
    }
    for _ in 1..k {
        let challenger = rng.gen_range(0..pop.len());
        if pop[challenger].fitness.compare(&pop[best].fitness)? == Ordering::Greater {
            best = challenger;
        }
    }
    Ok(best)
}

/// Children swap suffixes from `cut`.
pub fn crossover_at(a: &Genotype, b: &Genotype, cut: usize) -> Result<(Genotype, Genotype)> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let cut = cut.min(a.len());
    let mut c1 = a.genes[..cut].to_vec();
    c1.extend_from_slice(&b.genes[cut..]);
    let mut c2 = b.genes[..cut].to_vec();
    c2.extend_from_slice(&a.genes[cut..]);
    Ok((Genotype::new(c1), Genotype::new(c2)))
}

/// One-point crossover with the cut drawn uniformly from `[1, len - 1]`.
/// Genotypes shorter than 2 have no interior cut and are copied.
pub fn one_point_crossover<R: Rng + ?Sized>(a: &Genotype, b: &Genotype, rng: &mut R) -> Result<(Genotype, Genotype)> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Ok((a.clone(), b.clone()));
    }
    let cut = rng.gen_range(1..a.len());
    crossover_at(a, b, cut)
}

pub fn mutate<R: Rng + ?Sized>(g: &Genotype, mutation_rate: f64, gene_value_max: u32, rng: &mut R) -> Genotype {
    if mutation_rate <= 0.0 {
        return g.clone();
    }
    Genotype::new(
        g.genes
            .iter()
            .map(|&v| {
                if rng.gen_bool(mutation_rate.min(1.0)) {
                    rng.gen_range(0..gene_value_max)
                } else {
                    v
                }
            })
            .collect(),
    )
}

fn offspring(parent: &Individual, genotype: Genotype, carry_q: bool) -> Individual {
    let clone = genotype == parent.genotype;
    Individual {
        genotype,
        fitness: Fitness::Unevaluated,
        phenotype: if clone { parent.phenotype.clone() } else { None },
        tree: if clone && carry_q { parent.tree.clone() } else { None },
    }
}

/// Next generation: tournament parents, optional crossover, optional
/// mutation, until `population_size` children exist. No elitism.
pub fn update_pop<R: Rng + ?Sized>(pop: &[Individual], params: &EvoParams, rng: &mut R) -> Result<Vec<Individual>> {
    let mut next = Vec::with_capacity(params.population_size);
    while next.len() < params.population_size {
        let p1 = &pop[tournament_index(pop, params.tournament_size, rng)?];
        let p2 = &pop[tournament_index(pop, params.tournament_size, rng)?];
        let (mut g1, mut g2) = if rng.gen::<f64>() < params.crossover_prob {
            one_point_crossover(&p1.genotype, &p2.genotype, rng)?
        } else {
            (p1.genotype.clone(), p2.genotype.clone())
        };
        for g in [&mut g1, &mut g2] {
            if rng.gen::<f64>() < params.mutation_prob {
                *g = mutate(g, params.mutation_rate, params.gene_value_max, rng);
            }
        }
        next.push(offspring(p1, g1, params.carry_q));
        if next.len() < params.population_size {
            next.push(offspring(p2, g2, params.carry_q));
        }
    }
    Ok(next)
}

/// Index of the best evaluated individual (earliest on ties), if any is valid.
pub fn best_index(pop: &[Individual]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, ind) in pop.iter().enumerate() {
        let Some(s) = ind.fitness.score() else { continue };
        if best.is_none_or(|b| s > pop[b].fitness.score().unwrap()) {
            best = Some(i);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::{self, Domain};

    fn rng(k: u64) -> seeds::Rng {
        seeds::stream(k, Domain::Aux, 0, 0)
    }

    fn with_fitness(scores: &[f64]) -> Vec<Individual> {
        scores
            .iter()
            .enumerate()
            .map(|(i, s)| Individual {
                fitness: Fitness::Score(*s),
                ..Individual::new(Genotype::new(vec![i as u32; 4]))
            })
            .collect()
    }

    #[test]
    fn init_sizes_and_reproducibility() {
        let params = EvoParams::default();
        let pop = init_pop(&params, &mut rng(1));
        assert_eq!(pop.len(), 500);
        assert!(pop.iter().all(|i| i.genotype.len() == 1000 && i.fitness == Fitness::Unevaluated));
        assert!(pop.iter().flat_map(|i| &i.genotype.genes).all(|g| *g < 40_000));
        assert_eq!(pop, init_pop(&params, &mut rng(1)));
        let one = EvoParams {
            population_size: 1,
            ..params
        };
        assert_eq!(init_pop(&one, &mut rng(1)).len(), 1);
    }

    #[test]
    fn invalid_sorts_below_scores() {
        assert_eq!(Fitness::Invalid.compare(&Fitness::Score(-1e300)).unwrap(), Ordering::Less);
        assert!(Fitness::Unevaluated.compare(&Fitness::Invalid).is_err());
    }

    #[test]
    fn large_tournament_always_finds_the_best() {
        let pop = with_fitness(&[0.0, 10.0, 5.0]);
        let mut r = rng(2);
        for _ in 0..100 {
            assert_eq!(tournament_select(&pop, 64, &mut r).unwrap().fitness, Fitness::Score(10.0));
        }
    }

    #[test]
    fn tournament_of_one_is_uniform() {
        let pop = with_fitness(&[3.0, 2.0, 1.0, 0.0]);
        let mut r = rng(3);
        let n = 10_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let w = tournament_select(&pop, 1, &mut r).unwrap();
            counts[w.genotype.genes[0] as usize] += 1;
        }
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        assert!(counts.iter().all(|c| (*c as f64 - n as f64 / 4.0).abs() < 3.0 * sigma));
    }

    #[test]
    fn binary_tournament_win_rate() {
        let pop = with_fitness(&[2.0, 1.0]);
        let mut r = rng(4);
        let n = 10_000;
        let wins = (0..n)
            .filter(|_| tournament_select(&pop, 2, &mut r).unwrap().fitness == Fitness::Score(2.0))
            .count();
        // 1 - (1/2)^2
        let rate = wins as f64 / n as f64;
        assert!((rate - 0.75).abs() < 0.02, "rate {rate}");
    }

    #[test]
    fn tournament_rejects_unevaluated() {
        let pop = vec![Individual::new(Genotype::new(vec![1]))];
        assert!(matches!(tournament_select(&pop, 2, &mut rng(5)), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn crossover_examples() {
        let a = Genotype::new(vec![1, 1, 1, 1]);
        let b = Genotype::new(vec![2, 2, 2, 2]);
        let (c1, c2) = crossover_at(&a, &b, 2).unwrap();
        assert_eq!(c1.genes, vec![1, 1, 2, 2]);
        assert_eq!(c2.genes, vec![2, 2, 1, 1]);
        let (d1, d2) = one_point_crossover(&a, &a, &mut rng(6)).unwrap();
        assert_eq!((d1, d2), (a.clone(), a.clone()));
        assert!(one_point_crossover(&a, &Genotype::new(vec![1]), &mut rng(6)).is_err());
    }

    #[test]
    fn crossover_preserves_positional_multisets() {
        let mut r = rng(7);
        for _ in 0..200 {
            let a = Genotype::random(50, 100, &mut r);
            let b = Genotype::random(50, 100, &mut r);
            let (c1, c2) = one_point_crossover(&a, &b, &mut r).unwrap();
            assert_eq!(c1.len(), 50);
            for i in 0..50 {
                let mut before = [a.genes[i], b.genes[i]];
                let mut after = [c1.genes[i], c2.genes[i]];
                before.sort();
                after.sort();
                assert_eq!(before, after);
            }
            // the cut is interior: first gene from a, last from b
            assert_eq!(c1.genes[0], a.genes[0]);
            assert_eq!(c1.genes[49], b.genes[49]);
        }
    }

    #[test]
    fn mutation_rates() {
        let mut r = rng(8);
        let g = Genotype::random(1000, 40_000, &mut r);
        assert_eq!(mutate(&g, 0.0, 40_000, &mut r), g);

        let all = mutate(&Genotype::new(vec![0; 10_000]), 1.0, 40_000, &mut r);
        let mean = all.genes.iter().map(|v| *v as f64).sum::<f64>() / 10_000.0;
        // uniform on {0..39999}: mean 19999.5, sd 40000/sqrt(12)
        let se = 40_000.0 / 12f64.sqrt() / 100.0;
        assert!((mean - 19_999.5).abs() < 3.0 * se, "mean {mean}");

        let mut in_band = 0;
        for _ in 0..1000 {
            let m = mutate(&g, 0.05, 40_000, &mut r);
            let changed = m.genes.iter().zip(&g.genes).filter(|(x, y)| x != y).count();
            if (30..=70).contains(&changed) {
                in_band += 1;
            }
        }
        assert!(in_band >= 990, "{in_band}");
    }

    #[test]
    fn update_keeps_size_and_copies_winners() {
        let pop = with_fitness(&[5.0, 4.0, 3.0, 2.0, 1.0]);
        let params = EvoParams {
            population_size: 5,
            crossover_prob: 0.0,
            mutation_prob: 0.0,
            ..EvoParams::default()
        };
        let next = update_pop(&pop, &params, &mut rng(9)).unwrap();
        assert_eq!(next.len(), 5);
        for child in &next {
            assert!(pop.iter().any(|p| p.genotype == child.genotype));
            assert_eq!(child.fitness, Fitness::Unevaluated);
        }
        let odd = EvoParams {
            population_size: 3,
            ..params
        };
        assert_eq!(update_pop(&pop, &odd, &mut rng(9)).unwrap().len(), 3);
    }

    #[test]
    fn selection_pressure() {
        let mut r = rng(10);
        let scores: Vec<f64> = (0..40).map(|_| r.gen_range(0.0..100.0)).collect();
        let pop = with_fitness(&scores);
        let pop_mean = scores.iter().sum::<f64>() / scores.len() as f64;
        let trials = 1000;
        let selected: f64 = (0..trials)
            .map(|_| tournament_select(&pop, 2, &mut r).unwrap().fitness.score().unwrap())
            .sum::<f64>()
            / trials as f64;
        assert!(selected >= pop_mean, "{selected} < {pop_mean}");
    }

    #[test]
    fn genes_stay_in_range_after_operators() {
        let params = EvoParams {
            population_size: 30,
            genotype_length: 40,
            gene_value_max: 17,
            crossover_prob: 0.5,
            mutation_prob: 1.0,
            mutation_rate: 0.5,
            ..EvoParams::default()
        };
        let mut r = rng(11);
        let mut pop = init_pop(&params, &mut r);
        for gen in 0..10 {
            for (i, ind) in pop.iter_mut().enumerate() {
                ind.fitness = Fitness::Score(((i * 7 + gen) % 13) as f64);
            }
            pop = update_pop(&pop, &params, &mut r).unwrap();
            assert_eq!(pop.len(), 30);
            assert!(pop.iter().flat_map(|i| &i.genotype.genes).all(|g| *g < 17));
        }
    }

    #[test]
    fn best_index_skips_invalid() {
        let mut pop = with_fitness(&[1.0, 3.0, 3.0]);
        pop[0].fitness = Fitness::Invalid;
        assert_eq!(best_index(&pop), Some(1));
        pop.iter_mut().for_each(|i| i.fitness = Fitness::Invalid);
        assert_eq!(best_index(&pop), None);
    }

    #[test]
    fn carry_q_only_for_exact_clones() {
        let mut pop = with_fitness(&[1.0]);
        pop[0].tree = Some(DecisionTree::leaf(1, 1, vec![0.5]).unwrap());
        let params = EvoParams {
            population_size: 2,
            crossover_prob: 0.0,
            mutation_prob: 0.0,
            carry_q: true,
            ..EvoParams::default()
        };
        let next = update_pop(&pop, &params, &mut rng(12)).unwrap();
        assert!(next.iter().all(|c| c.tree.is_some()));
        let no_carry = EvoParams { carry_q: false, ..params.clone() };
        assert!(update_pop(&pop, &no_carry, &mut rng(12)).unwrap().iter().all(|c| c.tree.is_none()));
        let mutated = EvoParams {
            mutation_prob: 1.0,
            mutation_rate: 1.0,
            gene_value_max: 1000,
            ..params
        };
        let next = update_pop(&pop, &mutated, &mut rng(12)).unwrap();
        assert!(next.iter().all(|c| c.tree.is_none()));
    }
}
