//! Robot morphology, contact patterns, and shape-space parameterizations.
//!
//! A robot is a planar chain of rigid segments joined by bending joints, with
//! one leg on each side of every segment. A [`ContactPattern`] records which
//! legs are in stance, a [`ShapePoint`] is a point in the two-dimensional
//! reduced shape space, and [`foot_positions`] evaluates the forward
//! kinematics that everything downstream (force balance, connection fields,
//! simulation) is built on.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Left or right side of a body segment, viewed from above with the body
/// heading along +x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Physical description of a planar multi-legged robot.
///
/// Legs are rigid lateral struts in plan view: each of the `2 * n_segments`
/// feet sits at a fixed offset perpendicular to its segment midline and is
/// either planted (stance) or lifted, with no sweep motion of its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    /// Number of rigid body segments (at least 2).
    pub n_segments: usize,
    /// Length of each segment in meters.
    pub segment_length: f64,
    /// Hip distance from the segment midline in meters.
    pub lateral_offset: f64,
    /// Leg strut length in meters; feet sit at `lateral_offset + leg_length`
    /// from the midline.
    pub leg_length: f64,
    /// Total mass in kilograms, shared equally by stance legs.
    pub mass: f64,
    /// Coulomb friction coefficient.
    pub friction_mu: f64,
    /// Regularization speed for the Coulomb direction in m/s.
    pub friction_regularization: f64,
    /// Perpendicular-to-parallel drag ratio; 1.0 is isotropic friction.
    pub anisotropy_ratio: f64,
}

impl RobotSpec {
    /// Validates the physical invariants, returning the spec on success.
    pub fn validate(self) -> Result<Self> {
        if self.n_segments < 2 {
            return Err(Error::argument("n_segments must be at least 2"));
        }
        let lengths = [
            ("segment_length", self.segment_length),
            ("lateral_offset", self.lateral_offset),
            ("leg_length", self.leg_length),
            ("mass", self.mass),
            ("friction_regularization", self.friction_regularization),
        ];
        for (name, value) in lengths {
            if value <= 0.0 || value.is_nan() {
                return Err(Error::argument(format!("{name} must be strictly positive")));
            }
        }
        if !(self.friction_mu > 0.0 && self.friction_mu <= 2.0) {
            return Err(Error::argument("friction_mu must lie in (0, 2]"));
        }
        if self.anisotropy_ratio <= 0.0 || self.anisotropy_ratio.is_nan() {
            return Err(Error::argument("anisotropy_ratio must be strictly positive"));
        }
        Ok(self)
    }

    /// Number of legs, two per segment.
    pub fn n_legs(&self) -> usize {
        2 * self.n_segments
    }

    /// Number of body bending joints.
    pub fn n_joints(&self) -> usize {
        self.n_segments - 1
    }

    /// Body length in meters: the summed segment lengths.
    pub fn body_length(&self) -> f64 {
        self.n_segments as f64 * self.segment_length
    }

    /// Default three-segment hexapod with directly actuated joints.
    pub fn hexapod() -> Self {
        Self {
            n_segments: 3,
            segment_length: 0.1,
            lateral_offset: 0.007,
            leg_length: 0.011,
            mass: 1.0,
            friction_mu: 0.35,
            friction_regularization: 1e-6,
            anisotropy_ratio: 1.0,
        }
    }

    /// Default six-segment centipede driven through a sinusoidal shape basis.
    pub fn centipede() -> Self {
        Self {
            n_segments: 6,
            segment_length: 0.1,
            lateral_offset: 0.012,
            leg_length: 0.018,
            mass: 2.0,
            friction_mu: 0.35,
            friction_regularization: 1e-6,
            anisotropy_ratio: 1.0,
        }
    }
}

/// Per-leg stance/aerial assignment: the internal state the planner switches
/// between.
///
/// Leg `2 * segment + side` covers segment `segment` on `side` (0 = left,
/// 1 = right), so the bitmask layout is (L0, R0, L1, R1, ...).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContactPattern {
    stance: Vec<bool>,
}

impl ContactPattern {
    /// Builds a pattern from per-leg stance flags; length must be even.
    pub fn new(stance: Vec<bool>) -> Result<Self> {
        if stance.is_empty() || !stance.len().is_multiple_of(2) {
            return Err(Error::argument(
                "contact pattern needs an even, positive number of legs",
            ));
        }
        Ok(Self { stance })
    }

    /// Leg index for a (segment, side) pair under this crate's layout.
    pub fn leg_index(segment: usize, side: Side) -> usize {
        2 * segment
            + match side {
                Side::Left => 0,
                Side::Right => 1,
            }
    }

    /// Number of legs covered by the pattern.
    pub fn n_legs(&self) -> usize {
        self.stance.len()
    }

    /// Whether leg `leg` is in stance.
    pub fn is_stance(&self, leg: usize) -> bool {
        self.stance[leg]
    }

    /// Stance flags in leg order.
    pub fn stance(&self) -> &[bool] {
        &self.stance
    }

    /// Number of stance legs.
    pub fn stance_count(&self) -> usize {
        self.stance.iter().filter(|s| **s).count()
    }

    /// Iterator over the indices of stance legs.
    pub fn stance_legs(&self) -> impl Iterator<Item = usize> + '_ {
        self.stance
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.then_some(i))
    }

    /// True when every stance leg lies on one lateral side.
    pub fn is_unilateral(&self) -> bool {
        let left = self.stance.iter().step_by(2).any(|s| *s);
        let right = self.stance.iter().skip(1).step_by(2).any(|s| *s);
        left != right
    }

    /// Compact integer id: bit `k` set when leg `k` is in stance.
    pub fn id(&self) -> u64 {
        self.stance
            .iter()
            .enumerate()
            .fold(0, |acc, (k, s)| acc | ((*s as u64) << k))
    }
}

/// Swaps the left/right stance states within every segment, producing the
/// contralateral mirror pattern. Applying it twice returns the input.
pub fn flip_contralateral(pattern: &ContactPattern) -> ContactPattern {
    let mut stance = pattern.stance.clone();
    for chunk in stance.chunks_exact_mut(2) {
        chunk.swap(0, 1);
    }
    ContactPattern { stance }
}

/// Enumerates all contact patterns with at least `min_stance` legs planted,
/// optionally excluding unilateral-support patterns.
///
/// Output order is deterministic: lexicographic on the stance sequence with
/// leg 0 most significant and stance sorting before aerial.
pub fn enumerate_contact_patterns(
    n_legs: usize,
    min_stance: usize,
    exclude_unilateral: bool,
) -> Result<Vec<ContactPattern>> {
    if n_legs == 0 || !n_legs.is_multiple_of(2) {
        return Err(Error::argument("n_legs must be even and positive"));
    }
    if n_legs > 62 {
        return Err(Error::argument("n_legs above 62 exceeds enumeration capacity"));
    }
    if min_stance == 0 || min_stance > n_legs {
        return Err(Error::argument("min_stance must lie in [1, n_legs]"));
    }
    let mut out = Vec::new();
    for code in 0..(1u64 << n_legs) {
        // Bit (n_legs - 1 - k) carries leg k so that incrementing `code`
        // walks the stance sequences in lexicographic order.
        let stance: Vec<bool> = (0..n_legs)
            .map(|k| (code >> (n_legs - 1 - k)) & 1 == 1)
            .collect();
        let pattern = ContactPattern { stance };
        if pattern.stance_count() < min_stance {
            continue;
        }
        if exclude_unilateral && pattern.is_unilateral() {
            continue;
        }
        out.push(pattern);
    }
    Ok(out)
}

/// A point in the reduced two-dimensional shape space: joint angles for the
/// direct basis, basis weights for the sinusoidal one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapePoint {
    pub coordinates: [f64; 2],
}

impl ShapePoint {
    pub fn new(a: f64, b: f64) -> Self {
        Self { coordinates: [a, b] }
    }

    /// Componentwise negation; the image of the point under the body mirror.
    pub fn negated(&self) -> Self {
        Self::new(-self.coordinates[0], -self.coordinates[1])
    }
}

/// Maps the two shape coordinates to the robot's joint angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeBasis {
    /// Shape coordinates are the two joint angles themselves (two-joint
    /// robots only).
    Direct,
    /// Joint k of n takes the angle
    /// `w1 * sin(2π f ξ_k) + w2 * cos(2π f ξ_k)` at the normalized station
    /// `ξ_k = k / n_segments`.
    Sinusoidal {
        /// Spatial frequency in undulation cycles per body length.
        spatial_frequency: f64,
    },
}

/// Evaluates the joint angles for `shape` under `basis`.
pub fn joint_angles(basis: &ShapeBasis, shape: &ShapePoint, n_joints: usize) -> Result<Vec<f64>> {
    let [a, b] = shape.coordinates;
    match basis {
        ShapeBasis::Direct => {
            if n_joints != 2 {
                return Err(Error::argument(format!(
                    "direct basis drives exactly 2 joints, robot has {n_joints}"
                )));
            }
            Ok(vec![a, b])
        }
        ShapeBasis::Sinusoidal { spatial_frequency } => {
            let n_segments = n_joints + 1;
            Ok((1..=n_joints)
                .map(|k| {
                    let xi = k as f64 / n_segments as f64;
                    let phase = 2.0 * std::f64::consts::PI * spatial_frequency * xi;
                    a * phase.sin() + b * phase.cos()
                })
                .collect())
        }
    }
}

/// A closed loop of shape points traversed in a fixed direction, sampled
/// uniformly in the phase variable τ ∈ [0, 2π).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeCycle {
    pub points: Vec<ShapePoint>,
    pub phases: Vec<f64>,
}

impl ShapeCycle {
    /// Builds a cycle from explicit points at uniform phases.
    pub fn from_points(points: Vec<ShapePoint>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::argument("a shape cycle needs at least 3 points"));
        }
        let m = points.len();
        let phases = (0..m)
            .map(|j| 2.0 * std::f64::consts::PI * j as f64 / m as f64)
            .collect();
        Ok(Self { points, phases })
    }

    /// Number of cycle sites.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Point at site `j mod M`.
    pub fn point(&self, j: usize) -> ShapePoint {
        self.points[j % self.points.len()]
    }

    /// The cycle with every point negated, traversed in the same direction.
    pub fn negated(&self) -> Self {
        Self {
            points: self.points.iter().map(ShapePoint::negated).collect(),
            phases: self.phases.clone(),
        }
    }
}

/// Samples the circular shape prescription
/// `r(τ) = [amplitude·sin τ, amplitude·cos τ]` at `m` uniform phases.
pub fn sample_shape_cycle(m: usize, amplitude: f64, joint_limit: f64) -> Result<ShapeCycle> {
    if m < 3 {
        return Err(Error::argument("cycle sampling needs at least 3 points"));
    }
    if amplitude.abs() > joint_limit {
        return Err(Error::argument(format!(
            "amplitude {amplitude} exceeds joint limit {joint_limit}"
        )));
    }
    let points = (0..m)
        .map(|j| {
            let tau = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            ShapePoint::new(amplitude * tau.sin(), amplitude * tau.cos())
        })
        .collect();
    ShapeCycle::from_points(points)
}

/// Forward-kinematics snapshot: per-foot body-frame positions, segment
/// tangents, and shape Jacobians.
#[derive(Debug, Clone)]
pub struct FootLayout {
    /// Foot positions in the body frame, in leg order.
    pub positions: Vec<Vector2<f64>>,
    /// Unit tangent of each foot's segment in the body frame.
    pub tangents: Vec<Vector2<f64>>,
    /// ∂(foot position)/∂(shape coordinates), a 2×2 block per foot.
    pub jacobians: Vec<Matrix2<f64>>,
}

/// Chain pose in an arbitrary frame: per-segment angles and midpoints.
struct ChainPose {
    seg_angles: Vec<f64>,
    seg_midpoints: Vec<Vector2<f64>>,
}

/// Walks the segment chain for the given joint angles, anchored at the first
/// segment (angle 0, tail at the origin).
fn chain_pose(n_segments: usize, segment_length: f64, joints: &[f64]) -> ChainPose {
    let mut seg_angles = Vec::with_capacity(n_segments);
    let mut angle = 0.0;
    seg_angles.push(angle);
    for &j in joints {
        angle += j;
        seg_angles.push(angle);
    }
    let mut seg_midpoints = Vec::with_capacity(n_segments);
    let mut tail = Vector2::zeros();
    for &theta in &seg_angles {
        let dir = Vector2::new(theta.cos(), theta.sin());
        seg_midpoints.push(tail + dir * (segment_length / 2.0));
        tail += dir * segment_length;
    }
    ChainPose { seg_angles, seg_midpoints }
}

/// Evaluates the planar forward kinematics for `shape`.
///
/// The body frame sits at the geometric center of the segment midpoints with
/// the mean segment orientation; each foot lies `lateral_offset + leg_length`
/// from its segment midpoint, perpendicular to the segment, on its own side.
///
/// Jacobians are evaluated analytically by differentiating the chain through
/// the body-frame alignment, so repeated calls are exactly reproducible.
pub fn foot_positions(spec: &RobotSpec, basis: &ShapeBasis, shape: &ShapePoint) -> Result<FootLayout> {
    let joints = joint_angles(basis, shape, spec.n_joints())?;
    let n = spec.n_segments;
    let pose = chain_pose(n, spec.segment_length, &joints);

    // ∂joints/∂shape: direct basis is the identity; the sinusoidal basis has
    // constant coefficients sin/cos of the station phases.
    let mut djoint = vec![[0.0f64; 2]; joints.len()];
    match basis {
        ShapeBasis::Direct => {
            djoint[0] = [1.0, 0.0];
            djoint[1] = [0.0, 1.0];
        }
        ShapeBasis::Sinusoidal { spatial_frequency } => {
            for (k, d) in djoint.iter_mut().enumerate() {
                let xi = (k + 1) as f64 / n as f64;
                let phase = 2.0 * std::f64::consts::PI * spatial_frequency * xi;
                *d = [phase.sin(), phase.cos()];
            }
        }
    }

    // Chain-frame derivatives. Segment angle s carries the sum of joints
    // 1..=s, so ∂θ_s/∂w = Σ_{k<=s} ∂joint_k/∂w.
    let mut dtheta = vec![[0.0f64; 2]; n];
    for s in 1..n {
        for w in 0..2 {
            dtheta[s][w] = dtheta[s - 1][w] + djoint[s - 1][w];
        }
    }
    // Midpoint of segment s: tail_s + (L/2) dir_s with tail_s the summed
    // full-segment steps before it.
    let mut dmid = vec![[Vector2::zeros(); 2]; n];
    let mut dtail = [Vector2::zeros(); 2];
    for s in 0..n {
        let theta = pose.seg_angles[s];
        let normal = Vector2::new(-theta.sin(), theta.cos());
        for w in 0..2 {
            dmid[s][w] = dtail[w] + normal * (spec.segment_length / 2.0) * dtheta[s][w];
        }
        for w in 0..2 {
            dtail[w] += normal * spec.segment_length * dtheta[s][w];
        }
    }

    // Body frame: mean midpoint and mean orientation.
    let center: Vector2<f64> = pose.seg_midpoints.iter().sum::<Vector2<f64>>() / n as f64;
    let mean_angle: f64 = pose.seg_angles.iter().sum::<f64>() / n as f64;
    let dcenter: [Vector2<f64>; 2] = [
        (0..n).map(|s| dmid[s][0]).sum::<Vector2<f64>>() / n as f64,
        (0..n).map(|s| dmid[s][1]).sum::<Vector2<f64>>() / n as f64,
    ];
    let dmean_angle = [
        (0..n).map(|s| dtheta[s][0]).sum::<f64>() / n as f64,
        (0..n).map(|s| dtheta[s][1]).sum::<f64>() / n as f64,
    ];

    let rot = |angle: f64| Matrix2::new(angle.cos(), angle.sin(), -angle.sin(), angle.cos());
    let to_body = rot(mean_angle);
    // d/dw R(-mean_angle) = R(-mean_angle) * S * (-dmean_angle/dw) with
    // S the infinitesimal rotation generator; folded below as a perp term.
    let perp = |v: Vector2<f64>| Vector2::new(-v.y, v.x);

    let offset = spec.lateral_offset + spec.leg_length;
    let n_legs = spec.n_legs();
    let mut positions = Vec::with_capacity(n_legs);
    let mut tangents = Vec::with_capacity(n_legs);
    let mut jacobians = Vec::with_capacity(n_legs);
    for leg in 0..n_legs {
        let segment = leg / 2;
        let sign = if leg % 2 == 0 { 1.0 } else { -1.0 };
        let theta = pose.seg_angles[segment];
        let seg_normal = Vector2::new(-theta.sin(), theta.cos());
        let world_foot = pose.seg_midpoints[segment] + seg_normal * (sign * offset);
        let rel = world_foot - center;
        let q = to_body * rel;
        positions.push(q);
        tangents.push(to_body * Vector2::new(theta.cos(), theta.sin()));

        let mut jac = Matrix2::zeros();
        for w in 0..2 {
            let dworld = dmid[segment][w]
                - Vector2::new(theta.cos(), theta.sin()) * (sign * offset) * dtheta[segment][w];
            let drel = dworld - dcenter[w];
            // Product rule through the frame alignment: rotating the relative
            // vector into a frame whose angle itself depends on the shape.
            let dq = to_body * drel - perp(q) * dmean_angle[w];
            jac.set_column(w, &dq);
        }
        jacobians.push(jac);
    }
    Ok(FootLayout { positions, tangents, jacobians })
}
