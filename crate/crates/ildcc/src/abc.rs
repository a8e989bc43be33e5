//! Second-phase relay placement by artificial bee colony search.
//!
//! Positions live in the unit hypercube with one dimension per candidate
//! vertex; decoding activates the strongest entries under a budget. A
//! placement is feasible when the combined network stays inside the
//! algebraic-connectivity window and at least as connected as the
//! phase-1 backbone; its fitness is the spectral distance sum, minimized.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backbone::Backbone;
use crate::error::{Error, Result};
use crate::spectral::{
    eigenvalues, fiedler_value, laplacian, wiener_spectral, LaplacianMatrix, NetworkGraph,
    CONNECTIVITY_TOL, EIGEN_TOL,
};
use crate::topology::{unit_disk_graph, GridInstance, GridSpec};
use crate::Real;

/// Weight floor for roulette selection when a source has no finite
/// fitness yet.
pub const SENTINEL_WEIGHT: f64 = 1e-12;

/// Distribution of the scale factor in the neighbor move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NeighborStep {
    /// Uniform in [-1, 1].
    #[default]
    SymmetricUnit,
    /// Uniform in [0, 1].
    PositiveUnit,
}

/// Colony shape and stopping rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColonyConfig<F> {
    /// Total bees; half employed, half onlookers. Must be even and
    /// at least 2.
    pub colony_size: usize,
    pub generations: usize,
    /// Trials without improvement before a source is abandoned.
    /// Zero means `colony_size * dims / 2`.
    pub abandonment_limit: usize,
    /// Largest number of candidates a placement may activate.
    pub budget: usize,
    pub lambda2_min: F,
    pub lambda2_max: F,
    pub neighbor_step: NeighborStep,
    /// Decode exactly `budget` candidates instead of thresholding.
    pub exact_budget: bool,
    pub seed: u64,
}

impl<F: Real> ColonyConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.colony_size < 2 || !self.colony_size.is_multiple_of(2) {
            return Err(Error::Config("colony_size must be even and at least 2".into()));
        }
        if !(self.lambda2_min > F::zero()) || !(self.lambda2_max > self.lambda2_min) {
            return Err(Error::Config(
                "connectivity window needs 0 < lambda2_min < lambda2_max".into(),
            ));
        }
        Ok(())
    }

    pub fn effective_abandonment_limit(&self, dims: usize) -> usize {
        if self.abandonment_limit > 0 {
            self.abandonment_limit
        } else {
            (self.colony_size * dims.max(1)) / 2
        }
    }
}

impl<F: Real> Default for ColonyConfig<F> {
    fn default() -> Self {
        let f = |x: f64| F::from_f64(x).expect("parameter fits the scalar type");
        ColonyConfig {
            colony_size: 40,
            generations: 120,
            abandonment_limit: 0,
            budget: 0,
            lambda2_min: f(0.4),
            lambda2_max: f(0.6),
            neighbor_step: NeighborStep::SymmetricUnit,
            exact_budget: false,
            seed: 0,
        }
    }
}

/// Activation pattern over the candidate list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlacementVector {
    pub bits: Vec<bool>,
}

impl PlacementVector {
    pub fn empty(dims: usize) -> Self {
        PlacementVector { bits: vec![false; dims] }
    }

    pub fn active_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

fn rank_descending<F: Real>(position: &[F], keep: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut ranked: Vec<usize> = (0..position.len()).filter(|&i| keep(i)).collect();
    ranked.sort_by(|&a, &b| {
        position[b]
            .partial_cmp(&position[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    ranked
}

/// Activates the positions above 0.5, strongest first, up to `budget`.
/// Ties pick the lower index.
pub fn decode<F: Real>(position: &[F], budget: usize) -> PlacementVector {
    let half = F::from_f64(0.5).unwrap();
    let ranked = rank_descending(position, |i| position[i] > half);
    let mut out = PlacementVector::empty(position.len());
    for &i in ranked.iter().take(budget) {
        out.bits[i] = true;
    }
    out
}

/// Activates the `budget` strongest positions regardless of threshold,
/// ties to the lower index.
pub fn decode_exact<F: Real>(position: &[F], budget: usize) -> PlacementVector {
    let ranked = rank_descending(position, |_| true);
    let mut out = PlacementVector::empty(position.len());
    for &i in ranked.iter().take(budget) {
        out.bits[i] = true;
    }
    out
}

/// Fixed data the fitness function needs: the phase-1 network and the
/// candidate vertices open to second-phase relays.
#[derive(Debug, Clone)]
pub struct PlacementProblem<F> {
    spec: GridSpec<F>,
    range_r: F,
    base_vertices: Vec<[usize; 3]>,
    candidates: Vec<[usize; 3]>,
    lambda2_min: F,
    lambda2_max: F,
    lambda2_backbone: F,
    backbone_fitness: F,
}

/// Outcome of scoring one placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessEval<F> {
    /// Spectral distance sum, or positive infinity when rejected.
    pub fitness: F,
    /// Algebraic connectivity of the combined network, when computable.
    pub lambda2: Option<F>,
    /// Vertices in the combined network.
    pub network_size: usize,
}

impl<F: Real> PlacementProblem<F> {
    pub fn new(
        inst: &GridInstance<F>,
        backbone: &Backbone,
        lambda2_min: F,
        lambda2_max: F,
    ) -> Result<Self> {
        if !(lambda2_min > F::zero()) || !(lambda2_max > lambda2_min) {
            return Err(Error::Config(
                "connectivity window needs 0 < lambda2_min < lambda2_max".into(),
            ));
        }
        let base_vertices = backbone.member_vertices();
        let candidates: Vec<[usize; 3]> = inst
            .candidates
            .iter()
            .copied()
            .filter(|c| !base_vertices.contains(c))
            .collect();
        let lambda2_backbone = fiedler_value(&backbone.graph)?;
        if lambda2_backbone <= F::from_f64(CONNECTIVITY_TOL).unwrap() {
            return Err(Error::Disconnected);
        }
        let spectrum = eigenvalues(
            &laplacian(&backbone.graph),
            F::from_f64(EIGEN_TOL).unwrap(),
        )?;
        let backbone_fitness = wiener_spectral(&spectrum)?;
        Ok(PlacementProblem {
            spec: inst.spec(),
            range_r: inst.range_r,
            base_vertices,
            candidates,
            lambda2_min,
            lambda2_max,
            lambda2_backbone,
            backbone_fitness,
        })
    }

    pub fn dims(&self) -> usize {
        self.candidates.len()
    }

    pub fn lambda2_backbone(&self) -> F {
        self.lambda2_backbone
    }

    pub fn backbone_fitness(&self) -> F {
        self.backbone_fitness
    }

    pub fn candidate_vertices(&self) -> &[[usize; 3]] {
        &self.candidates
    }

    pub fn base_size(&self) -> usize {
        self.base_vertices.len()
    }

    /// The combined phase-1 plus activated-candidate network.
    pub fn network(&self, alpha: &PlacementVector) -> Result<NetworkGraph> {
        let mut vertices = self.base_vertices.clone();
        vertices.extend(alpha.active_indices().into_iter().map(|i| self.candidates[i]));
        unit_disk_graph(&self.spec, self.range_r, &vertices)
    }

    /// Scores a placement with no window screening: infinite only when
    /// the network is disconnected.
    pub fn raw_fitness(&self, alpha: &PlacementVector) -> Result<FitnessEval<F>> {
        let graph = self.network(alpha)?;
        let n = graph.vertex_count();
        let spectrum = eigenvalues(&laplacian(&graph), F::from_f64(EIGEN_TOL).unwrap())?;
        let l2 = spectrum.lambda2();
        if l2 <= F::from_f64(CONNECTIVITY_TOL).unwrap() {
            return Ok(FitnessEval { fitness: F::infinity(), lambda2: None, network_size: n });
        }
        Ok(FitnessEval {
            fitness: wiener_spectral(&spectrum)?,
            lambda2: Some(l2),
            network_size: n,
        })
    }

    /// Scores a placement. Networks that leave the connectivity window
    /// or fall below the backbone connectivity score positive infinity.
    pub fn fitness(&self, alpha: &PlacementVector) -> Result<FitnessEval<F>> {
        let eval = self.raw_fitness(alpha)?;
        let l2 = match eval.lambda2 {
            Some(l2) => l2,
            None => return Ok(eval),
        };
        let reject = l2 < self.lambda2_min
            || l2 > self.lambda2_max
            || l2 < self.lambda2_backbone - F::from_f64(1e-9).unwrap();
        if reject {
            return Ok(FitnessEval { fitness: F::infinity(), ..eval });
        }
        Ok(eval)
    }
}

/// Colony progress after one generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStat<F> {
    pub generation: usize,
    /// Best fitness seen so far; infinity while nothing is feasible.
    pub best_fitness: F,
    /// Connectivity of the best placement so far; NaN while infeasible.
    pub lambda2: F,
    /// Sources currently holding a feasible placement.
    pub feasible_count: usize,
}

/// Search outcome. When no feasible placement is ever found the result
/// falls back to the bare backbone with `feasible` unset.
#[derive(Debug, Clone, PartialEq)]
pub struct AbcResult<F> {
    pub best_placement: PlacementVector,
    pub best_fitness: F,
    pub best_lambda2: F,
    pub feasible: bool,
    pub network_size: usize,
    pub history: Vec<GenerationStat<F>>,
    /// Laplacian of the final network, backbone plus activated relays.
    pub updated_laplacian: LaplacianMatrix,
    pub evaluations: usize,
}

impl<F: Real> AbcResult<F> {
    pub fn sprn_count(&self) -> usize {
        self.best_placement.count()
    }
}

struct FoodSource<F> {
    position: Vec<F>,
    fitness: F,
    trial: usize,
}

/// Roulette weights from fitness values: `1 / (1 + fitness)` for finite
/// entries, a tiny floor otherwise.
pub fn selection_weights<F: Real>(fitnesses: &[F]) -> Vec<F> {
    fitnesses
        .iter()
        .map(|&f| {
            if f.is_finite() {
                F::one() / (F::one() + f)
            } else {
                F::from_f64(SENTINEL_WEIGHT).unwrap()
            }
        })
        .collect()
}

/// Samples an index proportionally to `weights`.
pub fn roulette_pick<F: Real, R: Rng>(weights: &[F], rng: &mut R) -> usize {
    let total: F = weights.iter().copied().sum();
    if !(total > F::zero()) {
        return rng.gen_range(0..weights.len());
    }
    let mut ticket = rng.gen_range(F::zero()..total);
    for (i, &w) in weights.iter().enumerate() {
        if ticket < w {
            return i;
        }
        ticket -= w;
    }
    weights.len() - 1
}

struct Evaluator<'a, F: Real> {
    problem: &'a PlacementProblem<F>,
    budget: usize,
    exact: bool,
    cache: HashMap<Vec<bool>, FitnessEval<F>>,
    evaluations: usize,
}

impl<'a, F: Real> Evaluator<'a, F> {
    fn decode(&self, position: &[F]) -> PlacementVector {
        if self.exact {
            decode_exact(position, self.budget)
        } else {
            decode(position, self.budget)
        }
    }

    fn eval(&mut self, position: &[F]) -> Result<(PlacementVector, FitnessEval<F>)> {
        let alpha = self.decode(position);
        if let Some(hit) = self.cache.get(&alpha.bits) {
            return Ok((alpha, *hit));
        }
        let eval = self.problem.fitness(&alpha)?;
        self.evaluations += 1;
        self.cache.insert(alpha.bits.clone(), eval);
        Ok((alpha, eval))
    }
}

fn consider<F: Real>(
    alpha: PlacementVector,
    eval: FitnessEval<F>,
    best: &mut Option<(PlacementVector, FitnessEval<F>)>,
) {
    if !eval.fitness.is_finite() {
        return;
    }
    match best {
        Some((_, incumbent)) if eval.fitness >= incumbent.fitness => {}
        _ => *best = Some((alpha, eval)),
    }
}

fn mutate_source<F: Real>(
    sources: &mut [FoodSource<F>],
    i: usize,
    step: NeighborStep,
    rng: &mut ChaCha8Rng,
    ev: &mut Evaluator<'_, F>,
    best: &mut Option<(PlacementVector, FitnessEval<F>)>,
) -> Result<()> {
    let dims = sources[i].position.len();
    let j = rng.gen_range(0..dims);
    let partner = if sources.len() > 1 {
        let k = rng.gen_range(0..sources.len() - 1);
        if k >= i {
            k + 1
        } else {
            k
        }
    } else {
        i
    };
    let u = match step {
        NeighborStep::SymmetricUnit => rng.gen_range(F::from_f64(-1.0).unwrap()..F::one()),
        NeighborStep::PositiveUnit => rng.gen_range(F::zero()..F::one()),
    };
    let mut position = sources[i].position.clone();
    let moved = position[j] + u * (position[j] - sources[partner].position[j]);
    position[j] = moved.max(F::zero()).min(F::one());

    let (alpha, eval) = ev.eval(&position)?;
    consider(alpha, eval, best);
    // Strict improvement replaces the source; ties keep the incumbent.
    if eval.fitness < sources[i].fitness {
        sources[i] = FoodSource { position, fitness: eval.fitness, trial: 0 };
    } else {
        sources[i].trial += 1;
    }
    Ok(())
}

/// Runs the colony. Decisions come from one seeded generator in a fixed
/// draw order, so equal inputs give equal outputs.
pub fn optimize<F: Real>(
    problem: &PlacementProblem<F>,
    cfg: &ColonyConfig<F>,
) -> Result<AbcResult<F>> {
    cfg.validate()?;
    let dims = problem.dims();

    let backbone_only = |history: Vec<GenerationStat<F>>, evaluations: usize| {
        let alpha = PlacementVector::empty(dims);
        let graph = problem.network(&alpha)?;
        Ok(AbcResult {
            best_placement: alpha,
            best_fitness: problem.backbone_fitness(),
            best_lambda2: problem.lambda2_backbone(),
            feasible: false,
            network_size: graph.vertex_count(),
            history,
            updated_laplacian: laplacian(&graph),
            evaluations,
        })
    };

    if cfg.budget == 0 || dims == 0 {
        return backbone_only(Vec::new(), 0);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let employed = cfg.colony_size / 2;
    let limit = cfg.effective_abandonment_limit(dims);
    let mut ev = Evaluator {
        problem,
        budget: cfg.budget.min(dims),
        exact: cfg.exact_budget,
        cache: HashMap::new(),
        evaluations: 0,
    };

    let draw_position = |rng: &mut ChaCha8Rng| -> Vec<F> {
        (0..dims).map(|_| rng.gen_range(F::zero()..F::one())).collect()
    };

    let mut best: Option<(PlacementVector, FitnessEval<F>)> = None;
    let mut sources: Vec<FoodSource<F>> = Vec::with_capacity(employed);
    for _ in 0..employed {
        let position = draw_position(&mut rng);
        let (alpha, eval) = ev.eval(&position)?;
        consider(alpha, eval, &mut best);
        sources.push(FoodSource { position, fitness: eval.fitness, trial: 0 });
    }

    let mut history = Vec::with_capacity(cfg.generations);
    for generation in 0..cfg.generations {
        // Employed phase: each source probes one neighbor.
        for i in 0..employed {
            mutate_source(&mut sources, i, cfg.neighbor_step, &mut rng, &mut ev, &mut best)?;
        }

        // Onlooker phase: weights frozen at phase entry.
        let weights =
            selection_weights::<F>(&sources.iter().map(|s| s.fitness).collect::<Vec<_>>());
        for _ in 0..employed {
            let i = roulette_pick(&weights, &mut rng);
            mutate_source(&mut sources, i, cfg.neighbor_step, &mut rng, &mut ev, &mut best)?;
        }

        // Scout phase: at most one abandonment per generation, the most
        // exhausted source first, lower index on ties.
        if let Some(i) = sources
            .iter()
            .enumerate()
            .filter(|(_, s)| s.trial > limit)
            .max_by(|(ai, a), (bi, b)| a.trial.cmp(&b.trial).then(bi.cmp(ai)))
            .map(|(i, _)| i)
        {
            let position = draw_position(&mut rng);
            let (alpha, eval) = ev.eval(&position)?;
            sources[i] = FoodSource { position, fitness: eval.fitness, trial: 0 };
            consider(alpha, eval, &mut best);
        }

        let feasible_count = sources.iter().filter(|s| s.fitness.is_finite()).count();
        let (best_fitness, lambda2) = match &best {
            Some((_, e)) => (e.fitness, e.lambda2.unwrap_or_else(F::nan)),
            None => (F::infinity(), F::nan()),
        };
        history.push(GenerationStat { generation, best_fitness, lambda2, feasible_count });
    }

    match best {
        Some((alpha, eval)) => {
            let graph = problem.network(&alpha)?;
            Ok(AbcResult {
                best_placement: alpha,
                best_fitness: eval.fitness,
                best_lambda2: eval.lambda2.expect("feasible placements have lambda2"),
                feasible: true,
                network_size: eval.network_size,
                history,
                updated_laplacian: laplacian(&graph),
                evaluations: ev.evaluations,
            })
        }
        None => backbone_only(history, ev.evaluations),
    }
}

/// Exhaustively scores every placement within the budget. A test oracle
/// for small candidate sets; refuses more than 25 dimensions.
pub fn exhaustive_best<F: Real>(
    problem: &PlacementProblem<F>,
    budget: usize,
    exact: bool,
) -> Result<Option<(PlacementVector, FitnessEval<F>)>> {
    let dims = problem.dims();
    if dims > 25 {
        return Err(Error::Domain("exhaustive search is capped at 25 candidates".into()));
    }
    let budget = budget.min(dims);
    let mut best: Option<(PlacementVector, FitnessEval<F>)> = None;
    for mask in 0u32..(1u32 << dims) {
        let k = mask.count_ones() as usize;
        if k > budget || (exact && k != budget) {
            continue;
        }
        let mut alpha = PlacementVector::empty(dims);
        for i in 0..dims {
            alpha.bits[i] = mask & (1 << i) != 0;
        }
        let eval = problem.fitness(&alpha)?;
        if !eval.fitness.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((_, inc)) => eval.fitness < inc.fitness,
        };
        if better {
            best = Some((alpha, eval));
        }
    }
    Ok(best)
}
