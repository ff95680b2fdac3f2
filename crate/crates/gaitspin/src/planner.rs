//! Contact-sequence optimization over a shape cycle.
//!
//! A gait assigns one contact pattern to each step of the cycle; the
//! objective is the accumulated potential difference minus a penalty per
//! pattern switch. Because the weights are differences of per-pattern
//! potentials, the problem maps onto a dual model over switch locations:
//! between consecutive switches the best pattern for the whole segment is
//! known in closed form, so searching over switch placements alone finds the
//! exact optimum at a fraction of the exhaustive cost.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Direction, WeightTensor};

/// How to solve a planning instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMethod {
    Greedy,
    DomainWall,
    Brute,
}

impl fmt::Display for PlanMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanMethod::Greedy => f.write_str("greedy"),
            PlanMethod::DomainWall => f.write_str("domain-wall"),
            PlanMethod::Brute => f.write_str("brute"),
        }
    }
}

impl FromStr for PlanMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(PlanMethod::Greedy),
            "domain-wall" | "domain_wall" => Ok(PlanMethod::DomainWall),
            "brute" => Ok(PlanMethod::Brute),
            other => Err(Error::argument(format!(
                "unknown method {other:?}, expected greedy, domain-wall, or brute"
            ))),
        }
    }
}

/// Largest enumeration any exact solver will attempt.
const ENUMERATION_GUARD: f64 = 1e7;

/// One planning problem: weight tensor plus switch penalty.
///
/// Construction validates the structure the solvers rely on: anti-symmetry
/// `d(i,j,l) = -d(i,l,j)` and additivity `d(i,j,l) + d(i,l,m) = d(i,j,m)`.
#[derive(Debug, Clone)]
pub struct PottsInstance {
    tensor: WeightTensor,
    pub lambda: f64,
}

impl PottsInstance {
    pub fn new(tensor: WeightTensor, lambda: f64) -> Result<Self> {
        if lambda < 0.0 || !lambda.is_finite() {
            return Err(Error::argument(format!(
                "switch penalty must be finite and non-negative, got {lambda}"
            )));
        }
        if tensor.n_sites < 2 || tensor.n_patterns == 0 {
            return Err(Error::argument(format!(
                "instance needs at least 2 sites and 1 pattern, got {} sites, {} patterns",
                tensor.n_sites, tensor.n_patterns
            )));
        }
        let (n, m) = (tensor.n_patterns, tensor.n_sites);
        let mut scale = 1.0_f64;
        for i in 0..n {
            for j in 0..m {
                for l in 0..m {
                    scale = scale.max(tensor.d(i, j, l).abs());
                }
            }
        }
        for i in 0..n {
            for j in 0..m {
                if tensor.d(i, j, j) != 0.0 {
                    return Err(Error::argument(format!(
                        "weight tensor has nonzero diagonal at ({i}, {j})"
                    )));
                }
                for l in j + 1..m {
                    let skew = tensor.d(i, j, l) + tensor.d(i, l, j);
                    if skew.abs() > 1e-12 * scale {
                        return Err(Error::argument(format!(
                            "weight tensor breaks anti-symmetry at ({i}, {j}, {l}) by {skew:.3e}"
                        )));
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..m {
                for l in 0..m {
                    for k in 0..m {
                        let gap = tensor.d(i, j, l) + tensor.d(i, l, k) - tensor.d(i, j, k);
                        if gap.abs() > 1e-9 * scale {
                            return Err(Error::argument(format!(
                                "weight tensor breaks additivity at ({i}, {j}, {l}, {k}) by {gap:.3e}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self { tensor, lambda })
    }

    /// Wraps a tensor without structural validation; negative-control tests
    /// use this to feed solvers deliberately broken weights.
    pub fn new_unchecked(tensor: WeightTensor, lambda: f64) -> Self {
        Self { tensor, lambda }
    }

    pub fn n_patterns(&self) -> usize {
        self.tensor.n_patterns
    }

    pub fn n_sites(&self) -> usize {
        self.tensor.n_sites
    }

    pub fn direction(&self) -> Direction {
        self.tensor.direction
    }

    /// Weight for pattern `i` over the step from site `j` to site `l`.
    pub fn d(&self, i: usize, j: usize, l: usize) -> f64 {
        self.tensor.d(i, j, l)
    }
}

/// A solved assignment of patterns to cycle sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSolution {
    /// Pattern index per cycle site.
    pub assignment: Vec<usize>,
    /// Number of cyclically adjacent sites with different patterns.
    pub switch_count: usize,
    /// Sum of step weights along the cycle.
    pub displacement: f64,
    /// `displacement - lambda * switch_count`.
    pub score: f64,
}

impl PlanSolution {
    /// Sites where a new pattern domain begins (the assignment differs from
    /// the cyclically previous site), in increasing order.
    pub fn walls(&self) -> Vec<usize> {
        walls_of_assignment(&self.assignment)
    }
}

/// Sites where the assignment differs from its cyclic predecessor.
pub fn walls_of_assignment(assignment: &[usize]) -> Vec<usize> {
    let m = assignment.len();
    (0..m)
        .filter(|&j| assignment[j] != assignment[(j + m - 1) % m])
        .collect()
}

/// Evaluates the objective for an assignment: returns the displacement, the
/// switch count, and the penalized score.
pub fn potts_score(inst: &PottsInstance, assignment: &[usize]) -> Result<(f64, usize, f64)> {
    let m = inst.n_sites();
    if assignment.len() != m {
        return Err(Error::argument(format!(
            "assignment has {} entries, instance has {} sites",
            assignment.len(),
            m
        )));
    }
    if let Some(&bad) = assignment.iter().find(|&&i| i >= inst.n_patterns()) {
        return Err(Error::argument(format!(
            "assignment references pattern {bad}, instance has {}",
            inst.n_patterns()
        )));
    }
    let mut displacement = 0.0;
    let mut switches = 0;
    for j in 0..m {
        let next = (j + 1) % m;
        displacement += inst.d(assignment[j], j, next);
        if assignment[j] != assignment[next] {
            switches += 1;
        }
    }
    Ok((displacement, switches, displacement - inst.lambda * switches as f64))
}

fn solution_from_assignment(inst: &PottsInstance, assignment: Vec<usize>) -> Result<PlanSolution> {
    let (displacement, switch_count, score) = potts_score(inst, &assignment)?;
    Ok(PlanSolution { assignment, switch_count, displacement, score })
}

/// Chooses the best pattern independently for every step.
///
/// With no switch penalty the objective separates per step, so this is
/// exact at `lambda = 0`; with a penalty it only scores the result honestly.
/// Ties go to the lowest pattern index.
pub fn greedy_plan(inst: &PottsInstance) -> Result<PlanSolution> {
    let m = inst.n_sites();
    let assignment = (0..m)
        .map(|j| {
            let next = (j + 1) % m;
            let mut best = 0;
            for i in 1..inst.n_patterns() {
                if inst.d(i, j, next) > inst.d(best, j, next) {
                    best = i;
                }
            }
            best
        })
        .collect();
    solution_from_assignment(inst, assignment)
}

/// Exhaustive enumeration of all `N^M` assignments.
///
/// Serves as the oracle for the other solvers; refuses instances past the
/// enumeration guard. Ties are broken toward the lexicographically smallest
/// assignment.
pub fn brute_force_potts(inst: &PottsInstance) -> Result<PlanSolution> {
    let (n, m) = (inst.n_patterns(), inst.n_sites());
    let total = (n as f64).powi(m as i32);
    if total > ENUMERATION_GUARD {
        return Err(Error::Capacity(format!(
            "brute force over {n}^{m} = {total:.3e} assignments exceeds the {ENUMERATION_GUARD:.0e} guard"
        )));
    }
    let mut assignment = vec![0usize; m];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let (_, _, score) = potts_score(inst, &assignment)?;
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, assignment.clone()));
        }
        // advance the base-N odometer, most significant digit first so the
        // visit order is lexicographic
        let mut digit = m;
        loop {
            if digit == 0 {
                return solution_from_assignment(inst, best.unwrap().1);
            }
            digit -= 1;
            assignment[digit] += 1;
            if assignment[digit] < n {
                break;
            }
            assignment[digit] = 0;
        }
    }
}

/// The dual model over switch locations.
///
/// `j_value(j, l)` is the best displacement any single pattern can collect
/// over the cyclic segment from site `j` to site `l`; `argmax_pattern(j, l)`
/// is the (lowest) pattern index achieving it.
#[derive(Debug, Clone)]
pub struct IsingDual {
    n_sites: usize,
    j: Vec<f64>,
    argmax: Vec<usize>,
}

impl IsingDual {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn j_value(&self, j: usize, l: usize) -> f64 {
        self.j[j * self.n_sites + l]
    }

    pub fn argmax_pattern(&self, j: usize, l: usize) -> usize {
        self.argmax[j * self.n_sites + l]
    }
}

/// Builds the dual coupling matrix `J(j, l) = max_i d(i, j, l)` with its
/// argmax table; ties go to the lowest pattern index.
pub fn build_ising_dual(inst: &PottsInstance) -> IsingDual {
    let (n, m) = (inst.n_patterns(), inst.n_sites());
    let mut j_matrix = vec![0.0; m * m];
    let mut argmax = vec![0usize; m * m];
    for j in 0..m {
        for l in 0..m {
            let mut best = 0;
            for i in 1..n {
                if inst.d(i, j, l) > inst.d(best, j, l) {
                    best = i;
                }
            }
            j_matrix[j * m + l] = inst.d(best, j, l);
            argmax[j * m + l] = best;
        }
    }
    IsingDual { n_sites: m, j: j_matrix, argmax }
}

/// Result of a domain-wall search, with the winning wall placement and the
/// number of configurations examined.
#[derive(Debug, Clone)]
pub struct DomainWallOutcome {
    pub solution: PlanSolution,
    /// Wall placement the search selected (before merging equal-pattern
    /// neighbors, so its length may exceed the solution's switch count).
    pub walls: Vec<usize>,
    /// Total wall configurations scored, summed over the K set.
    pub examined: u64,
}

fn binomial(m: u64, k: u64) -> f64 {
    if k > m {
        return 0.0;
    }
    let k = k.min(m - k);
    let mut out = 1.0_f64;
    for i in 0..k {
        out = out * (m - i) as f64 / (i + 1) as f64;
    }
    out
}

/// Advances a sorted combination of `k` values drawn from `0..m` to its
/// lexicographic successor; returns false after the last combination.
fn next_combination(combo: &mut [usize], m: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < m - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exact search over switch placements.
///
/// For each `K` in the set, every placement of `K` walls on the cycle is
/// scored as the sum of segment couplings minus the switch penalty; the
/// best placement is expanded back to a full assignment via the argmax
/// table and re-scored from the instance. Requesting `K = 1` is rejected:
/// a cycle cannot host a single domain wall.
pub fn domain_wall_search(inst: &PottsInstance, k_set: &[usize]) -> Result<DomainWallOutcome> {
    let m = inst.n_sites();
    let mut ks: Vec<usize> = k_set.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(Error::argument("domain-wall search needs a non-empty K set"));
    }
    if ks.contains(&1) {
        return Err(Error::argument(
            "K = 1 is infeasible: one wall cannot separate a domain from itself on a cycle",
        ));
    }
    if let Some(&too_big) = ks.iter().find(|&&k| k > m) {
        return Err(Error::argument(format!(
            "K = {too_big} exceeds the {m} cycle sites"
        )));
    }
    let work: f64 = ks.iter().map(|&k| binomial(m as u64, k as u64)).sum();
    if work > ENUMERATION_GUARD {
        return Err(Error::Capacity(format!(
            "domain-wall search over {work:.3e} placements exceeds the {ENUMERATION_GUARD:.0e} guard"
        )));
    }
    let dual = build_ising_dual(inst);
    let lambda = inst.lambda;
    let mut examined = 0u64;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for &k in &ks {
        if k == 0 {
            examined += 1;
            if best.as_ref().is_none_or(|(s, _)| 0.0 > *s) {
                best = Some((0.0, Vec::new()));
            }
            continue;
        }
        let mut walls: Vec<usize> = (0..k).collect();
        loop {
            examined += 1;
            let mut value = 0.0;
            for w in 0..k {
                value += dual.j_value(walls[w], walls[(w + 1) % k]);
            }
            let score = value - lambda * k as f64;
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                best = Some((score, walls.clone()));
            }
            if !next_combination(&mut walls, m) {
                break;
            }
        }
    }
    let (_, walls) = best.unwrap();
    let assignment = expand_walls(&dual, &walls, m);
    let solution = solution_from_assignment(inst, assignment)?;
    Ok(DomainWallOutcome { solution, walls, examined })
}

/// Fills each cyclic segment between consecutive walls with its argmax
/// pattern; no walls means a uniform pattern-0 assignment.
fn expand_walls(dual: &IsingDual, walls: &[usize], m: usize) -> Vec<usize> {
    if walls.is_empty() {
        return vec![0; m];
    }
    let mut assignment = vec![0usize; m];
    let k = walls.len();
    for w in 0..k {
        let start = walls[w];
        let end = walls[(w + 1) % k];
        let pattern = dual.argmax_pattern(start, end);
        let mut site = start;
        loop {
            assignment[site] = pattern;
            site = (site + 1) % m;
            if site == end {
                break;
            }
        }
    }
    assignment
}

/// Builds an instance from a weight tensor and dispatches to the chosen
/// solver.
pub fn plan_gait_sequence(
    tensor: WeightTensor,
    lambda: f64,
    k_set: &[usize],
    method: PlanMethod,
) -> Result<PlanOutcome> {
    let direction = tensor.direction;
    let inst = PottsInstance::new(tensor, lambda)?;
    let (solution, examined) = match method {
        PlanMethod::Greedy => (greedy_plan(&inst)?, None),
        PlanMethod::Brute => (brute_force_potts(&inst)?, None),
        PlanMethod::DomainWall => {
            let outcome = domain_wall_search(&inst, k_set)?;
            (outcome.solution, Some(outcome.examined))
        }
    };
    Ok(PlanOutcome { solution, direction, method, examined })
}

/// A solved plan plus the provenance of how it was obtained.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub solution: PlanSolution,
    pub direction: Direction,
    pub method: PlanMethod,
    /// Configurations examined, when the method enumerates placements.
    pub examined: Option<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn instance_from_potentials(potentials: &[Vec<f64>], lambda: f64) -> PottsInstance {
        let tensor = WeightTensor::from_site_potentials(potentials, Direction::X).unwrap();
        PottsInstance::new(tensor, lambda).unwrap()
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, m: usize, lambda: f64) -> PottsInstance {
        let potentials: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        instance_from_potentials(&potentials, lambda)
    }

    #[test]
    fn potts_score_counts_switches_and_telescopes() {
        let inst = instance_from_potentials(
            &[vec![0.0, 1.0, 3.0, 2.0], vec![1.0, 0.0, 2.0, 5.0]],
            0.7,
        );
        let (disp, switches, score) = potts_score(&inst, &[0, 0, 0, 0]).unwrap();
        assert_eq!(switches, 0);
        assert!(disp.abs() < 1e-15 && score.abs() < 1e-15);
        let (_, switches, _) = potts_score(&inst, &[0, 1, 0, 1]).unwrap();
        assert_eq!(switches, 4);
        // independent re-summation straight from the potentials
        let potentials = [[0.0, 1.0, 3.0, 2.0], [1.0, 0.0, 2.0, 5.0]];
        let assignment = [1, 0, 0, 1];
        let mut expected = 0.0;
        for j in 0..4 {
            let i = assignment[j];
            expected += potentials[i][(j + 1) % 4] - potentials[i][j];
        }
        let (disp, switches, score) = potts_score(&inst, &assignment).unwrap();
        assert_eq!(disp, expected);
        assert_eq!(switches, 2);
        assert_eq!(score, disp - 0.7 * 2.0);
    }

    #[test]
    fn potts_score_rejects_malformed_assignments() {
        let inst = instance_from_potentials(&[vec![0.0, 1.0, 2.0]], 0.0);
        assert!(potts_score(&inst, &[0, 0]).is_err());
        assert!(potts_score(&inst, &[0, 1, 0]).is_err());
    }

    #[test]
    fn instance_validation_rejects_broken_tensors() {
        let mut skewed =
            WeightTensor::from_site_potentials(&[vec![0.0, 1.0, 2.0]], Direction::X).unwrap();
        skewed.perturb(0, 0, 1, 0.5);
        assert!(PottsInstance::new(skewed.clone(), 0.0).is_err());
        let unchecked = PottsInstance::new_unchecked(skewed, 0.0);
        assert_eq!(unchecked.d(0, 0, 1), 1.5);

        let mut nonadditive =
            WeightTensor::from_site_potentials(&[vec![0.0, 1.0, 2.0, 3.0]], Direction::X).unwrap();
        nonadditive.perturb(0, 0, 2, 1e-3);
        nonadditive.perturb(0, 2, 0, -1e-3);
        assert!(PottsInstance::new(nonadditive, 0.0).is_err());

        let tensor =
            WeightTensor::from_site_potentials(&[vec![0.0, 1.0, 2.0]], Direction::X).unwrap();
        assert!(PottsInstance::new(tensor.clone(), -0.1).is_err());
        assert!(PottsInstance::new(tensor, f64::NAN).is_err());
    }

    #[test]
    fn greedy_handles_degenerate_and_dominant_instances() {
        let zero = PottsInstance::new(
            WeightTensor::from_raw(3, 4, Direction::X, vec![0.0; 48]).unwrap(),
            0.0,
        )
        .unwrap();
        let sol = greedy_plan(&zero).unwrap();
        assert_eq!(sol.assignment, vec![0, 0, 0, 0]);
        assert_eq!(sol.displacement, 0.0);

        // a potential that dominates pointwise differs only by an offset, so
        // every step weight ties and the loop telescopes to zero
        let dominant = instance_from_potentials(
            &[vec![0.0, 5.0, 11.0, 7.0], vec![10.0, 15.0, 21.0, 17.0]],
            0.0,
        );
        let sol = greedy_plan(&dominant).unwrap();
        assert_eq!(sol.assignment, vec![0, 0, 0, 0]);
        assert_eq!(sol.switch_count, 0);
        assert_eq!(sol.displacement, 0.0);

        let single = instance_from_potentials(&[vec![0.0, 5.0, 11.0, 7.0]], 0.0);
        let sol = greedy_plan(&single).unwrap();
        assert_eq!(sol.assignment, vec![0; 4]);
        assert_eq!(sol.switch_count, 0);
        assert_eq!(sol.displacement, 0.0);
    }

    #[test]
    fn brute_force_matches_hand_enumeration() {
        let inst = instance_from_potentials(&[vec![0.0, 2.0], vec![0.0, -1.0]], 0.5);
        let sol = brute_force_potts(&inst).unwrap();
        assert_eq!(sol.assignment, vec![0, 1]);
        assert_eq!(sol.switch_count, 2);
        assert_eq!(sol.displacement, 3.0);
        assert_eq!(sol.score, 2.0);
    }

    #[test]
    fn brute_force_guard_trips_on_large_instances() {
        let potentials: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64; 10]).collect();
        let tensor = WeightTensor::from_site_potentials(&potentials, Direction::X).unwrap();
        let inst = PottsInstance::new(tensor, 0.0).unwrap();
        assert!(matches!(brute_force_potts(&inst), Err(Error::Capacity(_))));
    }

    #[test]
    fn huge_switch_penalty_aligns_the_assignment() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let inst = random_instance(&mut rng, 4, 6, 1e3);
        let sol = brute_force_potts(&inst).unwrap();
        assert!(sol.assignment.iter().all(|&i| i == sol.assignment[0]));
        assert_eq!(sol.switch_count, 0);
        assert!(sol.score.abs() < 1e-12);
    }

    #[test]
    fn greedy_matches_brute_displacement_at_lambda_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let inst = random_instance(&mut rng, 4, 8, 0.0);
            let greedy = greedy_plan(&inst).unwrap();
            let brute = brute_force_potts(&inst).unwrap();
            assert_eq!(
                greedy.displacement, brute.displacement,
                "greedy fell short of the exhaustive optimum"
            );
        }
    }

    #[test]
    fn tie_breaking_prefers_low_pattern_indices_everywhere() {
        // two identical patterns: every optimum has a pattern-0-only twin
        let inst = instance_from_potentials(
            &[vec![0.0, 2.0, 1.0, 3.0], vec![0.0, 2.0, 1.0, 3.0]],
            0.0,
        );
        let greedy = greedy_plan(&inst).unwrap();
        assert!(greedy.assignment.iter().all(|&i| i == 0));
        let brute = brute_force_potts(&inst).unwrap();
        assert!(brute.assignment.iter().all(|&i| i == 0));
        let dual = build_ising_dual(&inst);
        for j in 0..4 {
            for l in 0..4 {
                assert_eq!(dual.argmax_pattern(j, l), 0);
            }
        }
    }

    #[test]
    fn ising_dual_has_the_stated_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = random_instance(&mut rng, 5, 7, 0.0);
        let dual = build_ising_dual(&inst);
        for j in 0..7 {
            assert_eq!(dual.j_value(j, j), 0.0);
            for l in 0..7 {
                assert!(dual.j_value(j, l) + dual.j_value(l, j) >= 0.0);
                let by_hand = (0..5).map(|i| inst.d(i, j, l)).fold(f64::MIN, f64::max);
                assert_eq!(dual.j_value(j, l), by_hand);
            }
        }

        let single = instance_from_potentials(&[vec![0.0, 1.0, -2.0]], 0.0);
        let dual = build_ising_dual(&single);
        for j in 0..3 {
            for l in 0..3 {
                assert_eq!(dual.j_value(j, l), single.d(0, j, l));
                assert_eq!(dual.argmax_pattern(j, l), 0);
            }
        }
    }

    #[test]
    fn domain_wall_k0_and_k2_reduce_to_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let inst = random_instance(&mut rng, 4, 6, 0.0);
        let uniform = domain_wall_search(&inst, &[0]).unwrap();
        assert!(uniform.solution.score.abs() < 1e-12);
        assert_eq!(uniform.solution.switch_count, 0);
        assert!(uniform.walls.is_empty());

        let two = domain_wall_search(&inst, &[2]).unwrap();
        let dual = build_ising_dual(&inst);
        let mut best_pair = f64::MIN;
        for j in 0..6 {
            for l in j + 1..6 {
                best_pair = best_pair.max(dual.j_value(j, l) + dual.j_value(l, j));
            }
        }
        assert!((two.solution.score - best_pair).abs() <= 1e-12 * (1.0 + best_pair.abs()));
    }

    #[test]
    fn domain_wall_rejects_bad_k_sets() {
        let inst = instance_from_potentials(&[vec![0.0, 1.0, 2.0, 1.0]], 0.0);
        assert!(domain_wall_search(&inst, &[1]).is_err());
        assert!(domain_wall_search(&inst, &[0, 1, 2]).is_err());
        assert!(domain_wall_search(&inst, &[5]).is_err());
        assert!(domain_wall_search(&inst, &[]).is_err());
    }

    #[test]
    fn domain_wall_guard_trips_on_huge_combination_counts() {
        let potentials = vec![(0..40).map(|j| j as f64).collect::<Vec<f64>>()];
        let tensor = WeightTensor::from_site_potentials(&potentials, Direction::X).unwrap();
        let inst = PottsInstance::new(tensor, 0.0).unwrap();
        assert!(matches!(
            domain_wall_search(&inst, &[20]),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn domain_wall_examined_counter_follows_the_binomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inst = random_instance(&mut rng, 3, 10, 0.0);
        let outcome = domain_wall_search(&inst, &[0, 2, 3]).unwrap();
        assert_eq!(outcome.examined, 1 + 45 + 120);
    }

    #[test]
    fn domain_wall_matches_brute_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let all_k = [0usize, 2, 3, 4, 5, 6, 7, 8];
        for trial in 0..30 {
            let lambda = if trial % 2 == 0 { 0.0 } else { rng.gen_range(0.0..0.5) };
            let inst = random_instance(&mut rng, 4, 8, lambda);
            let wall = domain_wall_search(&inst, &all_k).unwrap();
            let brute = brute_force_potts(&inst).unwrap();
            let gap = (wall.solution.score - brute.score).abs();
            assert!(
                gap <= 1e-9 * (1.0 + brute.score.abs()),
                "trial {trial}: domain-wall {} vs brute {}",
                wall.solution.score,
                brute.score
            );
        }
    }

    #[test]
    fn best_score_is_monotone_in_the_k_budget_at_lambda_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let inst = random_instance(&mut rng, 4, 9, 0.0);
        let mut previous = f64::MIN;
        for cap in [0usize, 2, 3, 4, 5, 6, 7, 8, 9] {
            let k_set: Vec<usize> = (0..=cap).filter(|&k| k != 1).collect();
            let outcome = domain_wall_search(&inst, &k_set).unwrap();
            assert!(
                outcome.solution.score >= previous - 1e-12,
                "score dropped when the K budget grew to {cap}"
            );
            previous = outcome.solution.score;
        }
    }

    #[test]
    fn walls_recover_domain_starts() {
        assert_eq!(walls_of_assignment(&[0, 0, 1, 1, 2, 2]), vec![0, 2, 4]);
        assert!(walls_of_assignment(&[3, 3, 3]).is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = random_instance(&mut rng, 4, 8, 0.1);
        let sol = brute_force_potts(&inst).unwrap();
        assert_eq!(sol.walls().len(), sol.switch_count);
    }

    #[test]
    fn plan_gait_sequence_dispatches_and_records_provenance() {
        let potentials: Vec<Vec<f64>> = vec![
            vec![0.0, 0.4, 0.9, 0.2, -0.3, 0.1],
            vec![0.1, -0.2, 0.3, 0.8, 0.0, -0.1],
        ];
        let tensor = WeightTensor::from_site_potentials(&potentials, Direction::Y).unwrap();
        let k_set = [0usize, 2, 3, 4, 5, 6];
        let outcome =
            plan_gait_sequence(tensor.clone(), 0.0, &k_set, PlanMethod::DomainWall).unwrap();
        assert_eq!(outcome.direction, Direction::Y);
        assert_eq!(outcome.method, PlanMethod::DomainWall);
        assert!(outcome.examined.is_some());
        let brute = plan_gait_sequence(tensor, 0.0, &k_set, PlanMethod::Brute).unwrap();
        assert!(brute.examined.is_none());
        assert!(
            (outcome.solution.score - brute.solution.score).abs()
                <= 1e-9 * (1.0 + brute.solution.score.abs())
        );
    }
}
