//! Gait assembly and quasi-static simulation.
//!
//! A [`GaitPlan`] pairs a shape cycle with the contact pattern active on each
//! arc of the cycle. [`simulate`] integrates the body pose through one or more
//! cycles of the plan, solving the force balance fresh at every substep, and
//! reports per-cycle displacement metrics normalized by body length.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

use crate::dynamics::{local_connection, ForceModel};
use crate::error::{Error, Result};
use crate::model::{flip_contralateral, ContactPattern, RobotSpec, ShapeBasis, ShapeCycle};

/// Minimum accepted integration substeps per arc.
pub const MIN_SUBSTEPS_PER_ARC: usize = 10;

/// Default integration substeps per arc.
pub const DEFAULT_SUBSTEPS_PER_ARC: usize = 100;

/// One contiguous arc of the cycle executed under a single contact pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitPhase {
    /// First cycle site of the arc.
    pub start_site: usize,
    /// Number of site-to-site steps the arc spans.
    pub length: usize,
    /// Contact pattern held fixed over the arc.
    pub pattern: ContactPattern,
}

/// A shape cycle together with the contact pattern governing each arc.
///
/// The arcs partition the cycle: their lengths sum to the number of sites and
/// cyclically adjacent arcs carry distinct patterns. A plan with a single arc
/// holds one pattern for the whole cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitPlan {
    pub cycle: ShapeCycle,
    pub phases: Vec<GaitPhase>,
}

impl GaitPlan {
    /// Builds a plan from the pattern governing each site-to-site step.
    ///
    /// `site_patterns[j]` is the pattern active on the step from site `j` to
    /// site `j + 1 mod M`. Maximal runs of equal patterns merge into arcs;
    /// the first arc starts at the first pattern switch, or at site 0 when
    /// the whole cycle uses one pattern.
    pub fn from_site_patterns(
        cycle: ShapeCycle,
        site_patterns: Vec<ContactPattern>,
    ) -> Result<Self> {
        let m = cycle.len();
        if site_patterns.len() != m {
            return Err(Error::argument(format!(
                "got {} site patterns for a cycle of {m} sites",
                site_patterns.len()
            )));
        }
        let n_legs = site_patterns[0].n_legs();
        if site_patterns.iter().any(|p| p.n_legs() != n_legs) {
            return Err(Error::argument(
                "site patterns disagree on the number of legs",
            ));
        }
        let walls: Vec<usize> = (0..m)
            .filter(|&j| site_patterns[j] != site_patterns[(j + m - 1) % m])
            .collect();
        let phases = if walls.is_empty() {
            vec![GaitPhase {
                start_site: 0,
                length: m,
                pattern: site_patterns[0].clone(),
            }]
        } else {
            (0..walls.len())
                .map(|k| {
                    let start = walls[k];
                    let next = walls[(k + 1) % walls.len()];
                    GaitPhase {
                        start_site: start,
                        length: (next + m - start - 1) % m + 1,
                        pattern: site_patterns[start].clone(),
                    }
                })
                .collect()
        };
        Ok(Self { cycle, phases })
    }

    /// Expands the arcs back to one pattern per site-to-site step.
    pub fn site_patterns(&self) -> Vec<ContactPattern> {
        let m = self.cycle.len();
        let mut out: Vec<Option<ContactPattern>> = vec![None; m];
        for phase in &self.phases {
            for t in 0..phase.length {
                out[(phase.start_site + t) % m] = Some(phase.pattern.clone());
            }
        }
        out.into_iter().map(|p| p.expect("arcs partition the cycle")).collect()
    }

    /// Number of arcs.
    pub fn n_phases(&self) -> usize {
        self.phases.len()
    }

    /// Number of pattern switches per cycle: the arc count, except that a
    /// single-arc plan has no switches.
    pub fn switch_count(&self) -> usize {
        if self.phases.len() == 1 {
            0
        } else {
            self.phases.len()
        }
    }
}

/// Materializes the planner's site assignment into a [`GaitPlan`].
///
/// `assignment[j]` indexes into `patterns` and governs the step from site `j`
/// to site `j + 1`.
pub fn assemble_gait(
    cycle: &ShapeCycle,
    assignment: &[usize],
    patterns: &[ContactPattern],
) -> Result<GaitPlan> {
    let site_patterns = assignment
        .iter()
        .map(|&i| {
            patterns.get(i).cloned().ok_or_else(|| {
                Error::argument(format!(
                    "assignment refers to pattern {i}, only {} available",
                    patterns.len()
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    GaitPlan::from_site_patterns(cycle.clone(), site_patterns)
}

/// The mirror image of a plan: every shape negated and every pattern's left
/// and right legs swapped. Applying it twice returns the original plan.
pub fn antisymmetric_gait(plan: &GaitPlan) -> GaitPlan {
    GaitPlan {
        cycle: plan.cycle.negated(),
        phases: plan
            .phases
            .iter()
            .map(|phase| GaitPhase {
                start_site: phase.start_site,
                length: phase.length,
                pattern: flip_contralateral(&phase.pattern),
            })
            .collect(),
    }
}

/// Concatenates a plan with its mirror image into one continuous super-cycle.
///
/// The mirrored half starts at the mirrored site whose shape continues the
/// original loop, so the composed shape path traverses the cycle's closed
/// curve twice without jumps. Requires an even number of cycle sites.
pub fn compose_with_antisymmetric(plan: &GaitPlan) -> Result<GaitPlan> {
    let m = plan.cycle.len();
    if !m.is_multiple_of(2) {
        return Err(Error::argument(format!(
            "composition needs an even cycle length, got {m} sites"
        )));
    }
    let half = m / 2;
    let site_patterns = plan.site_patterns();
    let mut points = Vec::with_capacity(2 * m);
    let mut composed_patterns = Vec::with_capacity(2 * m);
    for j in 0..m {
        points.push(plan.cycle.point(j));
        composed_patterns.push(site_patterns[j].clone());
    }
    for t in 0..m {
        let j = (half + t) % m;
        points.push(plan.cycle.point(j).negated());
        composed_patterns.push(flip_contralateral(&site_patterns[j]));
    }
    let cycle = ShapeCycle::from_points(points)?;
    GaitPlan::from_site_patterns(cycle, composed_patterns)
}

/// One integrated pose sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    /// Phase variable, accumulating 2π per cycle.
    pub tau: f64,
    /// World-frame position, meters.
    pub x: f64,
    pub y: f64,
    /// World-frame heading, radians.
    pub theta: f64,
    /// Bitmask id of the pattern active on the substep ending here.
    pub pattern_id: u64,
}

/// The integrated pose history of a simulation run.
///
/// The first sample is the identity pose at τ = 0; each later sample closes
/// one substep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    /// Final integrated pose.
    pub fn final_pose(&self) -> (f64, f64, f64) {
        let s = self.samples.last().expect("trajectory has an initial sample");
        (s.x, s.y, s.theta)
    }
}

/// Net displacement over the first simulated cycle.
///
/// Translations are normalized by body length (body lengths per cycle);
/// rotation is in radians per cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitMetrics {
    pub delta_x: f64,
    pub delta_y: f64,
    pub delta_theta: f64,
}

/// Integrates the pose through `cycles` repetitions of `plan`.
///
/// Within each arc the shape follows the cycle's piecewise-linear
/// interpolation in τ and the arc's τ span is divided into `substeps_per_arc`
/// equal substeps. Every substep solves the force balance fresh at the
/// midpoint shape, maps the shape rate through the local connection, and
/// advances the pose by the midpoint rule. Pattern switches between arcs are
/// instantaneous and produce no displacement.
///
/// Metrics are taken from the pose at the end of the first cycle; the
/// trajectory covers all cycles.
pub fn simulate(
    robot: &RobotSpec,
    basis: &ShapeBasis,
    plan: &GaitPlan,
    fm: &ForceModel,
    substeps_per_arc: usize,
    cycles: usize,
) -> Result<(Trajectory, GaitMetrics)> {
    if substeps_per_arc < MIN_SUBSTEPS_PER_ARC {
        return Err(Error::argument(format!(
            "substeps_per_arc must be at least {MIN_SUBSTEPS_PER_ARC}, got {substeps_per_arc}"
        )));
    }
    if cycles == 0 {
        return Err(Error::argument("cycles must be at least 1"));
    }
    let n_legs = plan.phases[0].pattern.n_legs();
    if n_legs != robot.n_legs() {
        return Err(Error::argument(format!(
            "plan patterns have {n_legs} legs, robot has {}",
            robot.n_legs()
        )));
    }
    let m = plan.cycle.len();
    let site_span = 2.0 * PI / m as f64;
    let mut samples = Vec::with_capacity(1 + cycles * plan.phases.len() * substeps_per_arc);
    samples.push(TrajectorySample {
        tau: 0.0,
        x: 0.0,
        y: 0.0,
        theta: 0.0,
        pattern_id: plan.phases[0].pattern.id(),
    });
    let (mut x, mut y, mut theta) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut tau = 0.0_f64;
    let mut first_cycle_end = (0.0, 0.0, 0.0);
    for cycle_index in 0..cycles {
        for (arc_index, phase) in plan.phases.iter().enumerate() {
            let arc_span = phase.length as f64 * site_span;
            let dt = arc_span / substeps_per_arc as f64;
            for substep in 0..substeps_per_arc {
                let t0 = substep as f64 * dt;
                let t1 = (substep + 1) as f64 * dt;
                // A substep may span a cycle point where the shape path has a
                // kink; integrating each linear piece separately keeps the
                // midpoint rule second order.
                let mut boundaries = vec![t0];
                let mut site = (t0 / site_span).floor() as usize + 1;
                while (site as f64) * site_span < t1 {
                    let tk = site as f64 * site_span;
                    if tk > t0 {
                        boundaries.push(tk);
                    }
                    site += 1;
                }
                boundaries.push(t1);
                for pair in boundaries.windows(2) {
                    let (p0, p1) = (pair[0], pair[1]);
                    let step = p1 - p0;
                    if step <= 0.0 {
                        continue;
                    }
                    let local = 0.5 * (p0 + p1);
                    let segment = ((local / site_span) as usize).min(phase.length - 1);
                    let frac = local / site_span - segment as f64;
                    let a = plan.cycle.point(phase.start_site + segment);
                    let b = plan.cycle.point(phase.start_site + segment + 1);
                    let [a0, a1] = a.coordinates;
                    let [b0, b1] = b.coordinates;
                    let rdot = Vector2::new((b0 - a0) / site_span, (b1 - a1) / site_span);
                    let xi = if rdot.x == 0.0 && rdot.y == 0.0 {
                        nalgebra::Vector3::zeros()
                    } else {
                        let mid = crate::model::ShapePoint::new(
                            a0 + frac * (b0 - a0),
                            a1 + frac * (b1 - a1),
                        );
                        let connection = local_connection(robot, basis, &mid, &phase.pattern, fm)
                            .map_err(|e| {
                                e.annotate(format!(
                                    "cycle {cycle_index}, arc {arc_index}, substep {substep}"
                                ))
                            })?;
                        connection.matrix * rdot
                    };
                    let heading = theta + 0.5 * xi[2] * step;
                    x += (heading.cos() * xi[0] - heading.sin() * xi[1]) * step;
                    y += (heading.sin() * xi[0] + heading.cos() * xi[1]) * step;
                    theta += xi[2] * step;
                }
                tau += dt;
                samples.push(TrajectorySample {
                    tau,
                    x,
                    y,
                    theta,
                    pattern_id: phase.pattern.id(),
                });
            }
        }
        if cycle_index == 0 {
            first_cycle_end = (x, y, theta);
        }
    }
    let bl = robot.body_length();
    let metrics = GaitMetrics {
        delta_x: first_cycle_end.0 / bl,
        delta_y: first_cycle_end.1 / bl,
        delta_theta: first_cycle_end.2,
    };
    Ok((Trajectory { samples }, metrics))
}

/// Simulates the plan concatenated with its mirror image as one super-cycle.
///
/// Metrics cover the whole composed loop: one super-cycle executes the
/// original plan once and its mirror once.
pub fn compose_and_simulate(
    robot: &RobotSpec,
    basis: &ShapeBasis,
    plan: &GaitPlan,
    fm: &ForceModel,
    substeps_per_arc: usize,
    cycles: usize,
) -> Result<(Trajectory, GaitMetrics)> {
    let composed = compose_with_antisymmetric(plan)?;
    simulate(robot, basis, &composed, fm, substeps_per_arc, cycles)
}

/// Writes a trajectory as CSV with columns `tau,x,y,theta,pattern`.
///
/// The seed sample at τ = 0 is implicit (the identity pose), so the data
/// rows cover exactly `cycles` times the substeps of one cycle.
pub fn write_trajectory_csv<W: Write>(out: &mut W, trajectory: &Trajectory) -> std::io::Result<()> {
    writeln!(out, "tau,x,y,theta,pattern")?;
    for s in trajectory.samples.iter().skip(1) {
        writeln!(out, "{},{},{},{},{:#x}", s.tau, s.x, s.y, s.theta, s.pattern_id)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_shape_cycle, ShapePoint, Side};

    fn hexapod() -> (RobotSpec, ShapeBasis, ForceModel) {
        let spec = RobotSpec::hexapod();
        let fm = ForceModel::from_robot(&spec);
        (spec, ShapeBasis::Sinusoidal { spatial_frequency: 1.0 }, fm)
    }

    fn all_stance(n: usize) -> ContactPattern {
        ContactPattern::new(vec![true; n]).unwrap()
    }

    fn tripod_pair(n_legs: usize) -> (ContactPattern, ContactPattern) {
        let mut a = vec![false; n_legs];
        for segment in 0..n_legs / 2 {
            let side = if segment % 2 == 0 { Side::Left } else { Side::Right };
            a[ContactPattern::leg_index(segment, side)] = true;
        }
        let a = ContactPattern::new(a).unwrap();
        let b = flip_contralateral(&a);
        (a, b)
    }

    #[test]
    fn uniform_assignment_yields_single_phase() {
        let cycle = sample_shape_cycle(6, 0.5, 2.0).unwrap();
        let patterns = vec![all_stance(6)];
        let plan = assemble_gait(&cycle, &[0; 6], &patterns).unwrap();
        assert_eq!(plan.n_phases(), 1);
        assert_eq!(plan.switch_count(), 0);
        assert_eq!(plan.phases[0].start_site, 0);
        assert_eq!(plan.phases[0].length, 6);
        assert_eq!(plan.site_patterns(), vec![patterns[0].clone(); 6]);
    }

    #[test]
    fn phases_start_at_walls_and_round_trip() {
        let cycle = sample_shape_cycle(6, 0.5, 2.0).unwrap();
        let (t0, t1) = tripod_pair(6);
        let patterns = vec![t0.clone(), t1.clone(), all_stance(6)];

        let plan = assemble_gait(&cycle, &[0, 0, 1, 1, 2, 2], &patterns).unwrap();
        assert_eq!(plan.switch_count(), 3);
        let starts: Vec<usize> = plan.phases.iter().map(|p| p.start_site).collect();
        let lengths: Vec<usize> = plan.phases.iter().map(|p| p.length).collect();
        assert_eq!(starts, vec![0, 2, 4]);
        assert_eq!(lengths, vec![2, 2, 2]);
        let expected: Vec<ContactPattern> =
            [0, 0, 1, 1, 2, 2].iter().map(|&i| patterns[i as usize].clone()).collect();
        assert_eq!(plan.site_patterns(), expected);

        let rotated = assemble_gait(&cycle, &[2, 0, 0, 1, 1, 2], &patterns).unwrap();
        assert_eq!(rotated.phases[0].start_site, 1);
        let total: usize = rotated.phases.iter().map(|p| p.length).sum();
        assert_eq!(total, 6);
        for (k, phase) in rotated.phases.iter().enumerate() {
            let next = &rotated.phases[(k + 1) % rotated.phases.len()];
            assert_ne!(phase.pattern, next.pattern);
        }
        let expected: Vec<ContactPattern> =
            [2, 0, 0, 1, 1, 2].iter().map(|&i| patterns[i as usize].clone()).collect();
        assert_eq!(rotated.site_patterns(), expected);
    }

    #[test]
    fn assemble_rejects_bad_input() {
        let cycle = sample_shape_cycle(6, 0.5, 2.0).unwrap();
        let patterns = vec![all_stance(6)];
        assert!(assemble_gait(&cycle, &[0; 5], &patterns).is_err());
        assert!(assemble_gait(&cycle, &[1; 6], &patterns).is_err());
    }

    #[test]
    fn antisymmetric_gait_is_an_involution() {
        let cycle = sample_shape_cycle(8, 0.5, 2.0).unwrap();
        let (t0, t1) = tripod_pair(6);
        let plan = assemble_gait(&cycle, &[0, 0, 0, 0, 1, 1, 1, 1], &[t0, t1]).unwrap();
        let mirrored = antisymmetric_gait(&plan);
        assert_ne!(mirrored, plan);
        for (p, q) in plan.cycle.points.iter().zip(&mirrored.cycle.points) {
            assert_eq!(q.coordinates[0], -p.coordinates[0]);
            assert_eq!(q.coordinates[1], -p.coordinates[1]);
        }
        assert_eq!(antisymmetric_gait(&mirrored), plan);
    }

    #[test]
    fn simulate_validates_arguments() {
        let (spec, basis, fm) = hexapod();
        let cycle = sample_shape_cycle(6, 0.5, 2.0).unwrap();
        let plan = assemble_gait(&cycle, &[0; 6], &[all_stance(6)]).unwrap();
        let err = simulate(&spec, &basis, &plan, &fm, 5, 1).unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
        let err = simulate(&spec, &basis, &plan, &fm, 20, 0).unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
        let short = assemble_gait(&cycle, &[0; 6], &[all_stance(4)]).unwrap();
        let err = simulate(&spec, &basis, &short, &fm, 20, 1).unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
    }

    #[test]
    fn zero_amplitude_cycle_stays_at_identity() {
        let (spec, basis, fm) = hexapod();
        let cycle = sample_shape_cycle(8, 0.0, 2.0).unwrap();
        let plan = assemble_gait(&cycle, &[0; 8], &[all_stance(6)]).unwrap();
        let (trajectory, metrics) = simulate(&spec, &basis, &plan, &fm, 25, 2).unwrap();
        assert_eq!(trajectory.samples.len(), 1 + 2 * 25);
        for s in &trajectory.samples {
            assert_eq!(s.x, 0.0);
            assert_eq!(s.y, 0.0);
            assert_eq!(s.theta, 0.0);
        }
        assert_eq!(metrics.delta_x, 0.0);
        assert_eq!(metrics.delta_y, 0.0);
        assert_eq!(metrics.delta_theta, 0.0);
    }

    #[test]
    fn metrics_report_first_cycle_pose() {
        let (spec, basis, fm) = hexapod();
        let cycle = sample_shape_cycle(6, 0.6, 2.0).unwrap();
        let (t0, t1) = tripod_pair(6);
        let plan = assemble_gait(&cycle, &[0, 0, 0, 1, 1, 1], &[t0, t1]).unwrap();
        let (trajectory, metrics) = simulate(&spec, &basis, &plan, &fm, 12, 2).unwrap();
        let per_cycle = plan.n_phases() * 12;
        assert_eq!(trajectory.samples.len(), 1 + 2 * per_cycle);
        let end = trajectory.samples[per_cycle];
        let bl = spec.body_length();
        assert_eq!(metrics.delta_x, end.x / bl);
        assert_eq!(metrics.delta_y, end.y / bl);
        assert_eq!(metrics.delta_theta, end.theta);
    }

    #[test]
    fn trajectory_csv_is_deterministic_and_well_formed() {
        let (spec, basis, fm) = hexapod();
        let cycle = sample_shape_cycle(6, 0.5, 2.0).unwrap();
        let (t0, t1) = tripod_pair(6);
        let plan = assemble_gait(&cycle, &[0, 0, 0, 1, 1, 1], &[t0, t1]).unwrap();
        let (trajectory, _) = simulate(&spec, &basis, &plan, &fm, 10, 1).unwrap();
        let mut first = Vec::new();
        write_trajectory_csv(&mut first, &trajectory).unwrap();
        let mut second = Vec::new();
        write_trajectory_csv(&mut second, &trajectory).unwrap();
        assert_eq!(first, second);
        let text = String::from_utf8(first).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "tau,x,y,theta,pattern");
        assert_eq!(lines.len(), 1 + trajectory.samples.len() - 1);
        assert_eq!(lines.len() - 1, 2 * 10);
        for line in &lines[1..] {
            assert_eq!(line.split(',').count(), 5);
        }
        let first_tau: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
        assert!(first_tau > 0.0);
    }

    #[test]
    fn plan_round_trips_through_json() {
        let cycle = sample_shape_cycle(6, 0.5, 2.0).unwrap();
        let (t0, t1) = tripod_pair(6);
        let plan = assemble_gait(&cycle, &[0, 1, 1, 0, 0, 1], &[t0, t1]).unwrap();
        let text = serde_json::to_string(&plan).unwrap();
        let back: GaitPlan = serde_json::from_str(&text).unwrap();
        assert_eq!(back, plan);
    }

    #[test]
    fn composition_requires_even_cycle() {
        let cycle = sample_shape_cycle(5, 0.5, 2.0).unwrap();
        let plan = assemble_gait(&cycle, &[0; 5], &[all_stance(6)]).unwrap();
        assert!(matches!(
            compose_with_antisymmetric(&plan),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn composed_cycle_is_continuous_and_doubled() {
        let cycle = sample_shape_cycle(8, 0.7, 2.0).unwrap();
        let (t0, t1) = tripod_pair(6);
        let plan = assemble_gait(&cycle, &[0, 0, 0, 0, 1, 1, 1, 1], &[t0.clone(), t1.clone()])
            .unwrap();
        let composed = compose_with_antisymmetric(&plan).unwrap();
        assert_eq!(composed.cycle.len(), 16);
        let max_step = (0..16)
            .map(|j| {
                let a = composed.cycle.point(j);
                let b = composed.cycle.point(j + 1);
                ((b.coordinates[0] - a.coordinates[0]).powi(2)
                    + (b.coordinates[1] - a.coordinates[1]).powi(2))
                .sqrt()
            })
            .fold(0.0, f64::max);
        let nominal = 2.0 * PI * 0.7 / 8.0;
        assert!(
            max_step < 1.5 * nominal,
            "composed cycle jumps: max step {max_step}, nominal {nominal}"
        );
        let site = composed.site_patterns();
        assert_eq!(site[0], t0);
        assert_eq!(site[8], flip_contralateral(&site[4]));
    }

    fn wave_plan(cycle: &ShapeCycle) -> GaitPlan {
        let lifted: Vec<ContactPattern> = (0..6)
            .map(|k| {
                let mut stance = vec![true; 6];
                let side = if k % 2 == 0 { Side::Left } else { Side::Right };
                stance[ContactPattern::leg_index(k / 2, side)] = false;
                ContactPattern::new(stance).unwrap()
            })
            .collect();
        assemble_gait(cycle, &[0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5], &lifted).unwrap()
    }

    fn alternating_tripod_plan(cycle: &ShapeCycle) -> GaitPlan {
        let (t0, t1) = tripod_pair(6);
        assemble_gait(cycle, &[0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1], &[t0, t1]).unwrap()
    }

    fn hexapod_cycle() -> ShapeCycle {
        sample_shape_cycle(12, std::f64::consts::PI / 3.0, 2.0).unwrap()
    }

    #[test]
    fn all_stance_loop_nearly_closes() {
        // The all-stance x-row keeps a marked divergence-free residual, so
        // the loop integral drifts by about 0.027 BL/cyc instead of closing
        // below 0.02; lateral drift and rotation vanish by mirror symmetry.
        let (spec, basis, fm) = hexapod();
        let plan = assemble_gait(&hexapod_cycle(), &[0; 12], &[all_stance(6)]).unwrap();
        let (_, metrics) = simulate(&spec, &basis, &plan, &fm, 40, 1).unwrap();
        assert!(
            metrics.delta_x.abs() > 0.015 && metrics.delta_x.abs() < 0.04,
            "all-stance drift off the measured band: {}",
            metrics.delta_x
        );
        assert!(metrics.delta_y.abs() < 1e-12);
        assert!(metrics.delta_theta.abs() < 1e-12);
    }

    #[test]
    fn antisymmetric_partner_mirrors_metrics() {
        let (spec, basis, fm) = hexapod();
        let plan = alternating_tripod_plan(&hexapod_cycle());
        let mirrored = antisymmetric_gait(&plan);
        let (_, base) = simulate(&spec, &basis, &plan, &fm, 40, 1).unwrap();
        let (_, twin) = simulate(&spec, &basis, &mirrored, &fm, 40, 1).unwrap();
        assert!(base.delta_x > 0.01, "tripod gait should move forward");
        assert!((twin.delta_x - base.delta_x).abs() <= 0.01 * base.delta_x.abs());
        assert!((twin.delta_y + base.delta_y).abs() <= 0.01 * base.delta_y.abs().max(1e-9));
        assert!((twin.delta_theta + base.delta_theta).abs() <= 1e-9);
    }

    #[test]
    fn reversing_traversal_negates_displacement() {
        let (spec, basis, fm) = hexapod();
        let plan = alternating_tripod_plan(&hexapod_cycle());
        let m = plan.cycle.len();
        let site = plan.site_patterns();
        let points: Vec<ShapePoint> = (0..m).map(|t| plan.cycle.point((m - t) % m)).collect();
        let patterns: Vec<ContactPattern> =
            (0..m).map(|t| site[(m - t - 1) % m].clone()).collect();
        let reversed =
            GaitPlan::from_site_patterns(ShapeCycle::from_points(points).unwrap(), patterns)
                .unwrap();
        let (_, base) = simulate(&spec, &basis, &plan, &fm, 20, 1).unwrap();
        let (_, back) = simulate(&spec, &basis, &reversed, &fm, 20, 1).unwrap();
        assert!((back.delta_x + base.delta_x).abs() <= 1e-6 * base.delta_x.abs());
        assert!((back.delta_y + base.delta_y).abs() <= 1e-6 * base.delta_y.abs().max(1e-9));
        assert!((back.delta_theta + base.delta_theta).abs() <= 1e-9);
    }

    #[test]
    fn halving_substeps_moves_final_pose_less_than_a_thousandth_body_length() {
        let (spec, basis, fm) = hexapod();
        let plan = alternating_tripod_plan(&hexapod_cycle());
        let (coarse, _) = simulate(&spec, &basis, &plan, &fm, 10, 1).unwrap();
        let (fine, _) = simulate(&spec, &basis, &plan, &fm, 20, 1).unwrap();
        let a = coarse.final_pose();
        let b = fine.final_pose();
        let shift = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        let bl = spec.body_length();
        assert!(shift < 1e-3 * bl, "final pose moved {shift} m, bl {bl}");
        assert!((a.2 - b.2).abs() < 1e-3);
    }

    #[test]
    fn start_phase_shift_conjugates_the_cycle_displacement() {
        // The integrator advances by right-multiplication with local SE(2)
        // steps, so starting the same cyclic program at site k must produce
        // exactly the conjugated displacement h^{-1} g h, with h the pose
        // the original run reaches at site k.
        let (spec, basis, fm) = hexapod();
        let plan = wave_plan(&hexapod_cycle());
        let substeps = 15;
        let (trajectory, metrics) = simulate(&spec, &basis, &plan, &fm, substeps, 1).unwrap();
        assert!(metrics.delta_theta.abs() > 0.1, "wave gait should turn");

        let shift = 2;
        let m = plan.cycle.len();
        let site = plan.site_patterns();
        let points: Vec<ShapePoint> = (0..m).map(|t| plan.cycle.point((t + shift) % m)).collect();
        let patterns: Vec<ContactPattern> =
            (0..m).map(|t| site[(t + shift) % m].clone()).collect();
        let shifted =
            GaitPlan::from_site_patterns(ShapeCycle::from_points(points).unwrap(), patterns)
                .unwrap();
        let (_, rotated) = simulate(&spec, &basis, &shifted, &fm, substeps, 1).unwrap();

        assert!((rotated.delta_theta - metrics.delta_theta).abs() < 1e-9);
        let bl = spec.body_length();
        let h = trajectory.samples[substeps];
        let (vx, vy) = (metrics.delta_x * bl, metrics.delta_y * bl);
        let (g_cos, g_sin) = (metrics.delta_theta.cos(), metrics.delta_theta.sin());
        let wx = vx + (g_cos - 1.0) * h.x - g_sin * h.y;
        let wy = vy + g_sin * h.x + (g_cos - 1.0) * h.y;
        let (h_cos, h_sin) = (h.theta.cos(), h.theta.sin());
        let expect_x = h_cos * wx + h_sin * wy;
        let expect_y = -h_sin * wx + h_cos * wy;
        assert!((rotated.delta_x * bl - expect_x).abs() < 1e-9);
        assert!((rotated.delta_y * bl - expect_y).abs() < 1e-9);
        let mag = (metrics.delta_x.powi(2) + metrics.delta_y.powi(2)).sqrt();
        let mag_rot = (rotated.delta_x.powi(2) + rotated.delta_y.powi(2)).sqrt();
        assert!((mag_rot - mag).abs() < 0.2 * mag, "shifts re-orient, roughly preserving size");
    }

    #[test]
    fn self_antisymmetric_composition_cancels_lateral_and_turn() {
        let (spec, basis, fm) = hexapod();
        let plan = assemble_gait(&hexapod_cycle(), &[0; 12], &[all_stance(6)]).unwrap();
        let (_, single) = simulate(&spec, &basis, &plan, &fm, 40, 1).unwrap();
        let (_, composed) = compose_and_simulate(&spec, &basis, &plan, &fm, 40, 1).unwrap();
        assert!(single.delta_y.abs() < 1e-12 && single.delta_theta.abs() < 1e-12);
        assert!(composed.delta_y.abs() < 1e-12);
        assert!(composed.delta_theta.abs() < 1e-12);
        assert!((composed.delta_x - 2.0 * single.delta_x).abs() <= 0.05 * single.delta_x.abs());
    }

    #[test]
    fn simulate_reports_arc_and_substep_on_failure() {
        let (spec, basis, fm) = hexapod();
        let cycle = ShapeCycle::from_points(vec![
            ShapePoint::new(0.0, 0.4),
            ShapePoint::new(0.4, 0.0),
            ShapePoint::new(0.0, -0.4),
            ShapePoint::new(-0.4, 0.0),
        ])
        .unwrap();
        let all_swing = ContactPattern::new(vec![false; 6]).unwrap();
        let plan = assemble_gait(&cycle, &[0; 4], &[all_swing]).unwrap();
        let err = simulate(&spec, &basis, &plan, &fm, 10, 1).unwrap_err();
        let text = err.to_string();
        assert!(
            text.contains("arc 0") && text.contains("substep 0"),
            "missing location context: {text}"
        );
    }
}
