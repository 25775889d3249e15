//! Mutation schemes that exploit population structure: ring neighborhoods,
//! fitness ranks, species and pairwise similarity.

use rand::Rng;

use super::operators::{rand1_donor, sample_distinct};
use super::{best_index, ranked_indices, DeError, Individual};
use crate::rng::Rng64;

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Roulette draw over `weights` restricted to indices not in `exclude`.
/// Falls back to a uniform draw when every allowed weight is zero.
pub(crate) fn weighted_pick(weights: &[f64], exclude: &[usize], rng: &mut Rng64) -> Result<usize, DeError> {
    let allowed: Vec<usize> = (0..weights.len()).filter(|i| !exclude.contains(i)).collect();
    if allowed.is_empty() {
        return Err(DeError::InsufficientPopulation {
            needed: exclude.len() + 1,
            got: weights.len(),
        });
    }
    let total: f64 = allowed.iter().map(|&i| weights[i]).sum();
    if !(total > 0.0) {
        return Ok(allowed[rng.random_range(0..allowed.len())]);
    }
    let mut u = rng.random::<f64>() * total;
    for &i in &allowed {
        u -= weights[i];
        if u < 0.0 {
            return Ok(i);
        }
    }
    Ok(*allowed
        .iter()
        .rev()
        .find(|&&i| weights[i] > 0.0)
        .expect("positive total"))
}

/// DEGL donor `w g + (1 - w) L` with
/// `g = x_i + F (x_gbest - x_i) + F (x_r1 - x_r2)` over the whole population
/// and `L = x_i + F (x_nbest - x_i) + F (x_p - x_q)` over the ring of radius
/// `k` around `i`.
pub fn degl_mutation(
    pop: &[Individual],
    target: usize,
    f: f64,
    k: usize,
    weight: f64,
    rng: &mut Rng64,
) -> Result<Vec<f64>, DeError> {
    let n = pop.len();
    if k == 0 || 2 * k >= n {
        return Err(DeError::InvalidArgument(format!(
            "neighborhood radius {k} must satisfy 1 ≤ k < {}/2",
            n
        )));
    }
    if !(0.0..=1.0).contains(&weight) {
        return Err(DeError::InvalidArgument(format!("weight {weight} outside [0, 1]")));
    }
    let ring: Vec<usize> = (0..=2 * k).map(|o| (target + n + o - k) % n).collect();
    let nbest = *ring
        .iter()
        .min_by(|&&a, &&b| pop[a].fitness.total_cmp(&pop[b].fitness))
        .expect("nonempty ring");
    let others: Vec<usize> = ring.iter().copied().filter(|&j| j != target).collect();
    let a = rng.random_range(0..others.len());
    let mut b = rng.random_range(0..others.len() - 1);
    if b >= a {
        b += 1;
    }
    let (p, q) = (others[a], others[b]);
    let gbest = best_index(pop);
    let r = sample_distinct(rng, n, &[target], 2)?;

    let xi = &pop[target].x;
    Ok((0..xi.len())
        .map(|j| {
            let local = xi[j] + f * (pop[nbest].x[j] - xi[j]) + f * (pop[p].x[j] - pop[q].x[j]);
            let global = xi[j] + f * (pop[gbest].x[j] - xi[j]) + f * (pop[r[0]].x[j] - pop[r[1]].x[j]);
            weight * global + (1.0 - weight) * local
        })
        .collect())
}

/// Linear-ranking selection probabilities `R_i / Σ R`, where the best member
/// gets `R = N` and the worst `R = 1`. Tied fitness values share the mean
/// rank.
pub fn rank_selection_probabilities(pop: &[Individual]) -> Vec<f64> {
    let n = pop.len();
    let order = ranked_indices(pop);
    let mut rank = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pop[order[end]].fitness == pop[order[start]].fitness {
            end += 1;
        }
        // positions start..end carry ranks n-start down to n-end+1
        let mean = (2 * n - start - end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            rank[i] = mean;
        }
        start = end;
    }
    let total = (n * (n + 1)) as f64 / 2.0;
    rank.into_iter().map(|r| r / total).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Species {
    /// Best member; the species is formed around it.
    pub seed: usize,
    /// Member indices, seed first, in fitness order.
    pub members: Vec<usize>,
}

/// Partition in fitness order: each individual joins the nearest existing
/// seed within `radius` whose species has room (fewer than `cap` members),
/// otherwise it becomes a new seed.
pub fn speciation_partition(pop: &[Individual], radius: f64, cap: usize) -> Vec<Species> {
    let cap = cap.max(1);
    let mut species: Vec<Species> = Vec::new();
    for i in ranked_indices(pop) {
        let home = species
            .iter()
            .enumerate()
            .filter(|(_, s)| s.members.len() < cap)
            .map(|(k, s)| (k, distance(&pop[i].x, &pop[s.seed].x)))
            .filter(|&(_, d)| d <= radius)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k);
        match home {
            Some(k) => species[k].members.push(i),
            None => species.push(Species {
                seed: i,
                members: vec![i],
            }),
        }
    }
    species
}

/// Donor-selection weights for `target`: `exp(-d_j / mean_d)` over the
/// other members, normalized; the target gets 0. Uniform when every other
/// member coincides with the target.
pub fn similarity_weights(pop: &[Individual], target: usize) -> Vec<f64> {
    let n = pop.len();
    let d: Vec<f64> = pop.iter().map(|p| distance(&p.x, &pop[target].x)).collect();
    let others = (n - 1) as f64;
    let mean = d
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != target)
        .map(|(_, v)| v)
        .sum::<f64>()
        / others;
    let raw: Vec<f64> = d
        .iter()
        .enumerate()
        .map(|(j, &dj)| {
            if j == target {
                0.0
            } else if mean > 0.0 {
                (-dj / mean).exp()
            } else {
                1.0
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// rand/1 with r1, r2, r3 drawn without replacement by
/// [`similarity_weights`].
pub fn similarity_mutation(pop: &[Individual], target: usize, f: f64, rng: &mut Rng64) -> Result<Vec<f64>, DeError> {
    if pop.len() < 4 {
        return Err(DeError::InsufficientPopulation {
            needed: 4,
            got: pop.len(),
        });
    }
    let w = similarity_weights(pop, target);
    let mut chosen = vec![target];
    for _ in 0..3 {
        let r = weighted_pick(&w, &chosen, rng)?;
        chosen.push(r);
    }
    Ok(rand1_donor(&pop[chosen[1]].x, &pop[chosen[2]].x, &pop[chosen[3]].x, f))
}
