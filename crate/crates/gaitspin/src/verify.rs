//! Randomized self-checks for the solver stack.
//!
//! Four seeded suites exercise the claims the planner relies on: the
//! domain-wall optimum must match exhaustive enumeration, the greedy solver
//! must be exact without a switch penalty, difference tensors must satisfy
//! anti-symmetry and additivity, and the evaluated connection must obey the
//! bilateral mirror relation. A negative control corrupts a tensor on
//! purpose and requires the machinery to notice, so a silent weakening of
//! the checks shows up as a control failure rather than a green run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{PipelineConfig, SCHEMA_ID};
use crate::dynamics::{local_connection, ForceModel};
use crate::error::{Error, Result};
use crate::fields::{Direction, WeightTensor};
use crate::model::{enumerate_contact_patterns, flip_contralateral, ShapePoint};
use crate::planner::{brute_force_potts, domain_wall_search, greedy_plan, PottsInstance};

/// Default number of trials per randomized suite.
pub const DEFAULT_TRIALS: usize = 200;

/// Score agreement required between the domain-wall and exhaustive solvers.
pub const DUALITY_TOLERANCE: f64 = 1e-9;

/// Largest deviation tolerated in the tensor structure checks.
pub const STRUCTURE_TOLERANCE: f64 = 1e-12;

/// Largest deviation tolerated in the connection mirror relation.
pub const SYMMETRY_TOLERANCE: f64 = 1e-6;

/// Sites and patterns for the random planning instances.
const INSTANCE_SITES: usize = 8;
const INSTANCE_PATTERNS: usize = 4;

/// Sites and patterns for the tensor structure checks.
const STRUCTURE_SITES: usize = 10;
const STRUCTURE_PATTERNS: usize = 6;

/// Instances the negative control corrupts.
const CONTROL_TRIALS: usize = 8;

/// One ChaCha stream per suite keeps them independent under a shared seed
/// and lets any suite rerun alone with identical draws.
fn suite_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_potentials(rng: &mut ChaCha8Rng, patterns: usize, sites: usize) -> Vec<Vec<f64>> {
    (0..patterns)
        .map(|_| (0..sites).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

/// Every switch count a cycle of `sites` can host: zero, or two and up.
fn feasible_k_set(sites: usize) -> Vec<usize> {
    std::iter::once(0).chain(2..=sites).collect()
}

/// Outcome of one verification suite.
///
/// `passed` is the authoritative verdict; `worst` and `tolerance` describe
/// the measured deviation, whose direction the note explains. For most
/// suites the deviation must stay below tolerance, for the negative control
/// it must exceed it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub trials: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub note: String,
}

impl SuiteResult {
    fn measured(name: &str, trials: usize, worst: f64, tolerance: f64, note: String) -> Self {
        SuiteResult {
            name: name.to_string(),
            trials,
            worst,
            tolerance,
            passed: worst <= tolerance,
            note,
        }
    }
}

/// Combined result of a verification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema: String,
    /// Short hash of the configuration the symmetry suite read.
    pub config: String,
    pub seed: u64,
    pub trials: usize,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    /// Maps a failing report onto the verification error the process exit
    /// code is derived from.
    pub fn ensure_passed(&self) -> Result<()> {
        if self.all_passed() {
            return Ok(());
        }
        let failed: Vec<&str> = self
            .suites
            .iter()
            .filter(|s| !s.passed)
            .map(|s| s.name.as_str())
            .collect();
        Err(Error::Verification(format!(
            "{} of {} suites failed: {}",
            failed.len(),
            self.suites.len(),
            failed.join(", ")
        )))
    }
}

/// Runs every suite under one seed and assembles the report.
///
/// The symmetry suite reads the robot, basis, sampling amplitude, and
/// contact filter from the configuration; the instance suites are
/// configuration independent. The report is deterministic for a fixed
/// (config, seed, trials) triple.
pub fn run_all(config: &PipelineConfig, seed: u64, trials: usize) -> Result<VerifyReport> {
    if trials == 0 {
        return Err(Error::argument("verification needs at least one trial"));
    }
    let suites = vec![
        duality_suite(seed, trials)?,
        greedy_suite(seed, trials)?,
        structure_suite(seed, trials)?,
        symmetry_suite(config, seed, trials)?,
        negative_control_suite(seed)?,
    ];
    Ok(VerifyReport {
        schema: SCHEMA_ID.to_string(),
        config: config.short_hash(),
        seed,
        trials,
        suites,
    })
}

/// Domain-wall search against exhaustive enumeration on random instances.
///
/// Trials alternate between zero and positive switch penalties so both the
/// penalty-free and penalized branches of the search face the oracle.
pub fn duality_suite(seed: u64, trials: usize) -> Result<SuiteResult> {
    let mut rng = suite_rng(seed, 1);
    let k_set = feasible_k_set(INSTANCE_SITES);
    let mut worst = 0.0_f64;
    for trial in 0..trials {
        let potentials = random_potentials(&mut rng, INSTANCE_PATTERNS, INSTANCE_SITES);
        let tensor = WeightTensor::from_site_potentials(&potentials, Direction::X)?;
        let lambda = if trial % 2 == 0 { 0.0 } else { rng.gen_range(0.0..0.5) };
        let inst = PottsInstance::new(tensor, lambda)?;
        let exact = brute_force_potts(&inst)?;
        let dual = domain_wall_search(&inst, &k_set)?;
        let gap = (dual.solution.score - exact.score).abs() / exact.score.abs().max(1.0);
        worst = worst.max(gap);
    }
    Ok(SuiteResult::measured(
        "duality",
        trials,
        worst,
        DUALITY_TOLERANCE,
        format!(
            "domain-wall score vs exhaustive enumeration, \
             {INSTANCE_PATTERNS} patterns x {INSTANCE_SITES} sites, alternating penalties"
        ),
    ))
}

/// Greedy against exhaustive enumeration with no switch penalty.
///
/// At zero penalty the objective separates per step, so greedy must agree
/// with the enumeration bit for bit, assignments included.
pub fn greedy_suite(seed: u64, trials: usize) -> Result<SuiteResult> {
    let mut rng = suite_rng(seed, 2);
    let mut mismatches = 0usize;
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let potentials = random_potentials(&mut rng, INSTANCE_PATTERNS, INSTANCE_SITES);
        let tensor = WeightTensor::from_site_potentials(&potentials, Direction::X)?;
        let inst = PottsInstance::new(tensor, 0.0)?;
        let greedy = greedy_plan(&inst)?;
        let exact = brute_force_potts(&inst)?;
        if greedy.assignment != exact.assignment {
            mismatches += 1;
        }
        worst = worst.max((greedy.score - exact.score).abs());
    }
    let mut result = SuiteResult::measured(
        "greedy-optimality",
        trials,
        worst,
        0.0,
        "per-step argmax vs exhaustive enumeration at zero switch penalty".to_string(),
    );
    result.passed = result.passed && mismatches == 0;
    if mismatches > 0 {
        result.note =
            format!("{mismatches} of {trials} assignments diverged from the exhaustive optimum");
    }
    Ok(result)
}

/// Anti-symmetry and additivity of difference tensors over all site triples.
pub fn structure_suite(seed: u64, trials: usize) -> Result<SuiteResult> {
    let mut rng = suite_rng(seed, 3);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let potentials = random_potentials(&mut rng, STRUCTURE_PATTERNS, STRUCTURE_SITES);
        let tensor = WeightTensor::from_site_potentials(&potentials, Direction::Y)?;
        worst = worst.max(tensor_structure_deviation(&tensor));
    }
    Ok(SuiteResult::measured(
        "tensor-structure",
        trials,
        worst,
        STRUCTURE_TOLERANCE,
        format!(
            "anti-symmetry and additivity over every site triple, \
             {STRUCTURE_PATTERNS} patterns x {STRUCTURE_SITES} sites"
        ),
    ))
}

/// Largest violation of `d(i,j,l) = -d(i,l,j)` and
/// `d(i,j,l) + d(i,l,k) = d(i,j,k)` across a whole tensor.
pub fn tensor_structure_deviation(tensor: &WeightTensor) -> f64 {
    let (n, m) = (tensor.n_patterns, tensor.n_sites);
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..m {
            for l in 0..m {
                worst = worst.max((tensor.d(i, j, l) + tensor.d(i, l, j)).abs());
                for k in 0..m {
                    worst = worst
                        .max((tensor.d(i, j, l) + tensor.d(i, l, k) - tensor.d(i, j, k)).abs());
                }
            }
        }
    }
    worst
}

/// Mirror relation of the evaluated local connection at random shapes.
///
/// Negating the shape and swapping contralateral contacts must negate the
/// forward row of the connection and preserve the lateral and rotational
/// rows; deviations are measured absolutely, on rows of order 1e-2 and
/// below for desk-scale robots.
pub fn symmetry_suite(config: &PipelineConfig, seed: u64, trials: usize) -> Result<SuiteResult> {
    let mut rng = suite_rng(seed, 4);
    let fm = ForceModel::from_robot(&config.robot);
    let patterns = enumerate_contact_patterns(
        config.robot.n_legs(),
        config.contact_filter.min_stance,
        config.contact_filter.exclude_unilateral,
    )?;
    let amplitude = config.sampling.amplitude;
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let shape = ShapePoint::new(
            rng.gen_range(-amplitude..amplitude),
            rng.gen_range(-amplitude..amplitude),
        );
        let pattern = &patterns[rng.gen_range(0..patterns.len())];
        let direct = local_connection(&config.robot, &config.basis, &shape, pattern, &fm)?;
        let mirrored = local_connection(
            &config.robot,
            &config.basis,
            &shape.negated(),
            &flip_contralateral(pattern),
            &fm,
        )?;
        for col in 0..2 {
            let (a, b) = (direct.matrix, mirrored.matrix);
            worst = worst.max((a[(0, col)] + b[(0, col)]).abs());
            worst = worst.max((a[(1, col)] - b[(1, col)]).abs());
            worst = worst.max((a[(2, col)] - b[(2, col)]).abs());
        }
    }
    Ok(SuiteResult::measured(
        "mirror-symmetry",
        trials,
        worst,
        SYMMETRY_TOLERANCE,
        format!(
            "connection rows under shape negation with contralateral swap, \
             drawing from {} admissible patterns",
            patterns.len()
        ),
    ))
}

/// Corrupts tensors on purpose and requires both defenses to notice.
///
/// The perturbation keeps anti-symmetry intact but breaks additivity on a
/// non-adjacent site pair, and it is large enough that the dual search is
/// guaranteed to chase the corrupted coupling. Instance construction must
/// reject every corrupted tensor, and with validation bypassed the duality
/// comparison must open a score gap above its tolerance.
pub fn negative_control_suite(seed: u64) -> Result<SuiteResult> {
    let mut rng = suite_rng(seed, 5);
    let k_set = feasible_k_set(INSTANCE_SITES);
    let mut rejected = 0usize;
    let mut widest = 0.0_f64;
    for _ in 0..CONTROL_TRIALS {
        let potentials = random_potentials(&mut rng, INSTANCE_PATTERNS, INSTANCE_SITES);
        let mut tensor = WeightTensor::from_site_potentials(&potentials, Direction::X)?;
        tensor.perturb(1, 2, 5, 50.0);
        tensor.perturb(1, 5, 2, -50.0);
        if PottsInstance::new(tensor.clone(), 0.0).is_err() {
            rejected += 1;
        }
        let inst = PottsInstance::new_unchecked(tensor, 0.0);
        let exact = brute_force_potts(&inst)?;
        let dual = domain_wall_search(&inst, &k_set)?;
        let gap = (dual.solution.score - exact.score).abs() / exact.score.abs().max(1.0);
        widest = widest.max(gap);
    }
    let detected = widest > DUALITY_TOLERANCE;
    Ok(SuiteResult {
        name: "negative-control".to_string(),
        trials: CONTROL_TRIALS,
        worst: widest,
        tolerance: DUALITY_TOLERANCE,
        passed: rejected == CONTROL_TRIALS && detected,
        note: format!(
            "corrupted additivity rejected at construction in {rejected}/{CONTROL_TRIALS} \
             trials; bypassing validation must open a score gap above tolerance"
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PipelineConfig;

    #[test]
    fn all_suites_pass_at_default_seed() {
        let config = PipelineConfig::hexapod_default();
        let report = run_all(&config, 7, 6).unwrap();
        assert_eq!(report.suites.len(), 5);
        for suite in &report.suites {
            assert!(
                suite.passed,
                "suite {} failed with worst {:.3e}: {}",
                suite.name, suite.worst, suite.note
            );
        }
        assert!(report.all_passed());
        assert!(report.ensure_passed().is_ok());
        assert_eq!(report.config, config.short_hash());
    }

    #[test]
    fn report_is_deterministic_under_seed() {
        let config = PipelineConfig::hexapod_default();
        let a = serde_json::to_string(&run_all(&config, 11, 4).unwrap()).unwrap();
        let b = serde_json::to_string(&run_all(&config, 11, 4).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_trials_is_an_argument_error() {
        let config = PipelineConfig::hexapod_default();
        match run_all(&config, 1, 0) {
            Err(Error::Argument(_)) => {}
            other => panic!("expected an argument error, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_tensor_is_rejected_and_detected() {
        let control = negative_control_suite(3).unwrap();
        assert!(
            control.passed,
            "negative control failed with worst {:.3e}: {}",
            control.worst, control.note
        );
        assert!(control.worst > DUALITY_TOLERANCE);
    }

    #[test]
    fn failing_report_maps_to_verification_error() {
        let config = PipelineConfig::hexapod_default();
        let mut report = run_all(&config, 5, 2).unwrap();
        report.suites[0].passed = false;
        match report.ensure_passed() {
            Err(Error::Verification(message)) => assert!(message.contains("duality")),
            other => panic!("expected a verification error, got {other:?}"),
        }
    }

    #[test]
    fn symmetry_suite_covers_the_centipede() {
        let config = PipelineConfig::centipede_default();
        let suite = symmetry_suite(&config, 2, 3).unwrap();
        assert!(suite.passed, "worst deviation {:.3e}", suite.worst);
    }
}
