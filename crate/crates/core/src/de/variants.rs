//! Generation loops of the ten variants. Each loop runs until the evaluator's
//! budget is spent.

use rand::Rng;

use super::adaptive::{jade_mutation, Archive, JadeState, ShadeMemory};
use super::dcmaea::{dcmaea_step, CmaState};
use super::operators::{
    crossover_binomial, mutate_best1, mutate_rand1, rand1_donor, reflect, sample_distinct, select_greedy,
};
use super::structured::{
    degl_mutation, rank_selection_probabilities, similarity_mutation, speciation_partition, weighted_pick,
};
use super::{best_index, init_population, ranked_indices, DEConfig, DeError, Evaluator, Individual};
use super::{Population, VariantId};
use crate::rng::Rng64;

pub(super) fn evolve(
    variant: VariantId,
    pop: Population,
    cfg: &DEConfig,
    ev: &mut Evaluator<'_>,
    rng: &mut Rng64,
) -> Result<(), DeError> {
    let f = cfg.scale_factor;
    match variant {
        VariantId::Derand => classic(pop, cfg, ev, rng, |p, i, r| mutate_rand1(p, i, f, r)),
        VariantId::Debest => classic(pop, cfg, ev, rng, |p, i, r| mutate_best1(p, i, f, r)),
        VariantId::Rbde => classic(pop, cfg, ev, rng, |p, i, r| rank_based(p, i, f, r)),
        VariantId::Degl => degl(pop, cfg, ev, rng),
        VariantId::Desim => classic(pop, cfg, ev, rng, |p, i, r| similarity_mutation(p, i, f, r)),
        VariantId::Desps => speciated(pop, cfg, ev, rng),
        VariantId::Shade => shade(pop, cfg, ev, rng),
        VariantId::Jade => jade(pop, cfg, ev, rng),
        VariantId::Dcmaea => dcmaea(pop, cfg, ev, rng),
        VariantId::Obde => obde(pop, cfg, ev, rng),
    }
}

/// Evaluates one generation of trials and applies greedy selection. Returns
/// the offspring, or `None` once the budget ran out.
fn advance(pop: &mut Population, trials: &[Vec<f64>], ev: &mut Evaluator<'_>) -> Result<Option<Population>, DeError> {
    let Some(offspring) = ev.evaluate_all(trials)? else {
        return Ok(None);
    };
    for (target, trial) in pop.iter_mut().zip(&offspring) {
        *target = select_greedy(target, trial)?;
    }
    Ok(Some(offspring))
}

/// Generation loop shared by the variants that differ only in the donor.
fn classic<M>(
    mut pop: Population,
    cfg: &DEConfig,
    ev: &mut Evaluator<'_>,
    rng: &mut Rng64,
    mut donor: M,
) -> Result<(), DeError>
where
    M: FnMut(&Population, usize, &mut Rng64) -> Result<Vec<f64>, DeError>,
{
    loop {
        let mut trials = Vec::with_capacity(pop.len());
        for i in 0..pop.len() {
            let v = donor(&pop, i, rng)?;
            trials.push(crossover_binomial(&pop[i].x, &v, cfg.crossover_prob, rng)?);
        }
        if advance(&mut pop, &trials, ev)?.is_none() {
            return Ok(());
        }
    }
}

/// rand/1 with rank-proportional base and first difference vector.
fn rank_based(pop: &Population, i: usize, f: f64, rng: &mut Rng64) -> Result<Vec<f64>, DeError> {
    let probs = rank_selection_probabilities(pop);
    let r1 = weighted_pick(&probs, &[i], rng)?;
    let r2 = weighted_pick(&probs, &[i, r1], rng)?;
    let r3 = sample_distinct(rng, pop.len(), &[i, r1, r2], 1)?[0];
    Ok(rand1_donor(&pop[r1].x, &pop[r2].x, &pop[r3].x, f))
}

/// Neighborhood DE. With `degl.linear_weight` set, the weight rises
/// linearly from 0 to 1 over the evaluation budget; otherwise `degl.weight`
/// is fixed.
fn degl(mut pop: Population, cfg: &DEConfig, ev: &mut Evaluator<'_>, rng: &mut Rng64) -> Result<(), DeError> {
    let params = &cfg.variant_params;
    let k = params.get("degl.k") as usize;
    let linear = params.get("degl.linear_weight") != 0.0;
    let fixed = params.get("degl.weight");
    loop {
        let w = if linear {
            ev.used() as f64 / cfg.max_evals as f64
        } else {
            fixed
        };
        let mut trials = Vec::with_capacity(pop.len());
        for i in 0..pop.len() {
            let v = degl_mutation(&pop, i, cfg.scale_factor, k, w, rng)?;
            trials.push(crossover_binomial(&pop[i].x, &v, cfg.crossover_prob, rng)?);
        }
        if advance(&mut pop, &trials, ev)?.is_none() {
            return Ok(());
        }
    }
}

fn speciated(mut pop: Population, cfg: &DEConfig, ev: &mut Evaluator<'_>, rng: &mut Rng64) -> Result<(), DeError> {
    let radius = cfg.variant_params.get("desps.radius") * ev.space().diagonal();
    let cap = match cfg.variant_params.get("desps.species_cap") as usize {
        0 => (cfg.pop_size / 2).max(4),
        c => c,
    };
    loop {
        let species = speciation_partition(&pop, radius, cap);
        let mut home = vec![0; pop.len()];
        for (k, s) in species.iter().enumerate() {
            for &m in &s.members {
                home[m] = k;
            }
        }
        let mut trials = Vec::with_capacity(pop.len());
        for i in 0..pop.len() {
            let members = &species[home[i]].members;
            let v = if members.len() >= 4 {
                let pos = members.iter().position(|&m| m == i).expect("member of own species");
                let r = sample_distinct(rng, members.len(), &[pos], 3)?;
                rand1_donor(
                    &pop[members[r[0]]].x,
                    &pop[members[r[1]]].x,
                    &pop[members[r[2]]].x,
                    cfg.scale_factor,
                )
            } else {
                mutate_rand1(&pop, i, cfg.scale_factor, rng)?
            };
            trials.push(crossover_binomial(&pop[i].x, &v, cfg.crossover_prob, rng)?);
        }
        if advance(&mut pop, &trials, ev)?.is_none() {
            return Ok(());
        }
    }
}

fn archive_capacity(factor: f64, pop: usize) -> usize {
    (factor * pop as f64).round() as usize
}

fn shade(mut pop: Population, cfg: &DEConfig, ev: &mut Evaluator<'_>, rng: &mut Rng64) -> Result<(), DeError> {
    let params = &cfg.variant_params;
    let mut memory = ShadeMemory::new(params.get("shade.memory_size") as usize, 0.5)?;
    let mut archive = Archive::new(archive_capacity(params.get("shade.archive_factor"), pop.len()));
    let p_min = 2.0 / pop.len() as f64;
    let p_max = params.get("shade.p_max").clamp(p_min, 1.0);
    loop {
        let mut trials = Vec::with_capacity(pop.len());
        let mut drawn = Vec::with_capacity(pop.len());
        for i in 0..pop.len() {
            let (f, cr) = memory.sample_params(rng);
            let p = p_min + rng.random::<f64>() * (p_max - p_min);
            let v = jade_mutation(&pop, &archive.members, i, f, p, rng)?;
            trials.push(crossover_binomial(&pop[i].x, &v, cr, rng)?);
            drawn.push((f, cr));
        }
        let parents = pop.clone();
        let Some(offspring) = advance(&mut pop, &trials, ev)? else {
            return Ok(());
        };
        let (mut s_f, mut s_cr, mut delta) = (Vec::new(), Vec::new(), Vec::new());
        for (i, (parent, child)) in parents.into_iter().zip(&offspring).enumerate() {
            if child.fitness < parent.fitness {
                s_f.push(drawn[i].0);
                s_cr.push(drawn[i].1);
                delta.push(parent.fitness - child.fitness);
                archive.push(parent.x, rng);
            }
        }
        memory.update(&s_f, &s_cr, &delta)?;
    }
}

fn jade(mut pop: Population, cfg: &DEConfig, ev: &mut Evaluator<'_>, rng: &mut Rng64) -> Result<(), DeError> {
    let params = &cfg.variant_params;
    let mut state = JadeState::new(params.get("jade.c"));
    let p = params.get("jade.p").clamp(f64::MIN_POSITIVE, 1.0);
    let mut archive = Archive::new(archive_capacity(params.get("jade.archive_factor"), pop.len()));
    loop {
        let mut trials = Vec::with_capacity(pop.len());
        let mut drawn = Vec::with_capacity(pop.len());
        for i in 0..pop.len() {
            let (f, cr) = state.sample_params(rng);
            let v = jade_mutation(&pop, &archive.members, i, f, p, rng)?;
            trials.push(crossover_binomial(&pop[i].x, &v, cr, rng)?);
            drawn.push((f, cr));
        }
        let parents = pop.clone();
        let Some(offspring) = advance(&mut pop, &trials, ev)? else {
            return Ok(());
        };
        let (mut s_f, mut s_cr) = (Vec::new(), Vec::new());
        for (i, (parent, child)) in parents.into_iter().zip(&offspring).enumerate() {
            if child.fitness < parent.fitness {
                s_f.push(drawn[i].0);
                s_cr.push(drawn[i].1);
                archive.push(parent.x, rng);
            }
        }
        state.update(&s_f, &s_cr);
    }
}

fn dcmaea(mut pop: Population, cfg: &DEConfig, ev: &mut Evaluator<'_>, rng: &mut Rng64) -> Result<(), DeError> {
    let space = ev.space();
    let width = space.upper().iter().zip(space.lower()).map(|(u, l)| u - l).sum::<f64>() / space.dim() as f64;
    let sigma0 = cfg.variant_params.get("dcmaea.sigma0") * width;
    let mean = pop[best_index(&pop)].x.clone();
    let mut state = CmaState::new(mean, sigma0, pop.len(), space.diagonal())?;
    while dcmaea_step(&mut state, &mut pop, ev, cfg.scale_factor, cfg.crossover_prob, rng)?.is_some() {}
    Ok(())
}

/// The `n` fittest of `candidates` (stable on ties).
fn fittest(candidates: Vec<Individual>, n: usize) -> Population {
    let order = ranked_indices(&candidates);
    let mut slots: Vec<Option<Individual>> = candidates.into_iter().map(Some).collect();
    order
        .into_iter()
        .take(n)
        .map(|i| slots[i].take().expect("unique index"))
        .collect()
}

/// Random population plus its opposite points; keeps the fittest half.
pub(super) fn obde_init(cfg: &DEConfig, ev: &mut Evaluator<'_>, rng: &mut Rng64) -> Result<Population, DeError> {
    let mut all = init_population(cfg, ev, rng)?;
    let space = ev.space().clone();
    let opposites: Vec<Vec<f64>> = all
        .iter()
        .map(|p| reflect(&p.x, space.lower(), space.upper()))
        .collect();
    for x in opposites {
        match ev.evaluate(&x)? {
            Some(ind) => all.push(ind),
            None => break,
        }
    }
    Ok(fittest(all, cfg.pop_size))
}

fn obde(mut pop: Population, cfg: &DEConfig, ev: &mut Evaluator<'_>, rng: &mut Rng64) -> Result<(), DeError> {
    let jump_rate = cfg.variant_params.get("obde.jump_rate");
    loop {
        let mut trials = Vec::with_capacity(pop.len());
        for i in 0..pop.len() {
            let v = mutate_rand1(&pop, i, cfg.scale_factor, rng)?;
            trials.push(crossover_binomial(&pop[i].x, &v, cfg.crossover_prob, rng)?);
        }
        if advance(&mut pop, &trials, ev)?.is_none() {
            return Ok(());
        }
        if rng.random::<f64>() < jump_rate {
            let dim = pop[0].x.len();
            let lo: Vec<f64> = (0..dim)
                .map(|j| pop.iter().map(|p| p.x[j]).fold(f64::INFINITY, f64::min))
                .collect();
            let hi: Vec<f64> = (0..dim)
                .map(|j| pop.iter().map(|p| p.x[j]).fold(f64::NEG_INFINITY, f64::max))
                .collect();
            let mut union = pop.clone();
            let mut spent = false;
            for p in &pop {
                match ev.evaluate(&reflect(&p.x, &lo, &hi))? {
                    Some(ind) => union.push(ind),
                    None => {
                        spent = true;
                        break;
                    }
                }
            }
            pop = fittest(union, cfg.pop_size);
            if spent || ev.exhausted() {
                return Ok(());
            }
        }
    }
}
