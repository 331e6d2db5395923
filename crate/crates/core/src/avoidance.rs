//! Obstacle circles, gap midpoints, circle-overlap repulsion and the
//! overhead-view fallback for occluded peers.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{segment_hits_circle, Vec2};

/// Extra clearance added around the sensed extent of an obstacle (m).
pub const CIRCLE_CLEARANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleCircle {
    pub center: Vec2,
    pub radius: f64,
}

impl ObstacleCircle {
    pub fn new(center: Vec2, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "bad obstacle circle {center:?} r={radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.dist(self.center) < self.radius
    }
}

/// One simple piece of a sensed obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstaclePart {
    pub centroid: Vec2,
    pub area: f64,
    pub samples: Vec<Vec2>,
}

impl ObstaclePart {
    /// Part from polygon vertices: centroid is the vertex mean, area from the
    /// shoelace formula, samples are the vertices.
    pub fn from_polygon(vertices: &[Vec2]) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidArgument(
                "polygon needs at least 3 vertices".into(),
            ));
        }
        let n = vertices.len();
        let twice: f64 = (0..n)
            .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
            .sum();
        let area = 0.5 * twice.abs();
        if !(area > 0.0) {
            return Err(Error::InvalidArgument("degenerate polygon".into()));
        }
        let sum = vertices.iter().fold(Vec2::ZERO, |a, v| a + *v);
        Ok(Self {
            centroid: sum * (1.0 / n as f64),
            area,
            samples: vertices.to_vec(),
        })
    }
}

/// Area-weighted centre of the parts, radius covering every sample point
/// plus `CIRCLE_CLEARANCE`, capped at the sensing range.
pub fn obstacle_circle(parts: &[ObstaclePart], fov_max: f64) -> Result<ObstacleCircle> {
    if parts.is_empty() {
        return Err(Error::Empty("obstacle parts"));
    }
    let total: f64 = parts.iter().map(|p| p.area).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument(
            "obstacle parts have zero total area".into(),
        ));
    }
    let center = parts
        .iter()
        .fold(Vec2::ZERO, |acc, p| acc + p.centroid * p.area)
        * (1.0 / total);
    let extent = parts
        .iter()
        .flat_map(|p| p.samples.iter().chain(std::iter::once(&p.centroid)))
        .map(|s| s.dist(center))
        .fold(0.0, f64::max);
    let radius = (extent + CIRCLE_CLEARANCE).min(fov_max);
    ObstacleCircle::new(center, radius)
}

pub fn gap_midpoint(c1: &ObstacleCircle, c2: &ObstacleCircle) -> Result<Vec2> {
    if c1.center == c2.center {
        return Err(Error::InvalidArgument("gap endpoints coincide".into()));
    }
    Ok((c1.center + c2.center) * 0.5)
}

/// Free width between two circles along their centre line.
pub fn gap_width(c1: &ObstacleCircle, c2: &ObstacleCircle) -> f64 {
    c1.center.dist(c2.center) - c1.radius - c2.radius
}

/// Penetration depth of two circles, zero when apart or tangent.
pub fn overlap(c1: Vec2, r1: f64, c2: Vec2, r2: f64) -> f64 {
    (r1 + r2 - c1.dist(c2)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepulsionResult {
    pub overlap: f64,
    pub force: Vec2,
    pub vel_cmd: Vec2,
}

/// Spring force on the robot at `c1` from the robot at `c2`: magnitude
/// `|k_r| * overlap` capped at `fmax`, along `c1 - c2` (`+x` when the centres
/// coincide).
pub fn repulsion_force(c1: Vec2, r1: f64, c2: Vec2, r2: f64, k_r: f64, fmax: f64) -> (f64, Vec2) {
    let ov = overlap(c1, r1, c2, r2);
    if ov <= 0.0 {
        return (0.0, Vec2::ZERO);
    }
    let dir = (c1 - c2).normalized().unwrap_or(Vec2::new(1.0, 0.0));
    (ov, dir * (k_r.abs() * ov).min(fmax))
}

/// Decayed repulsion speeds below this are treated as gone (m/s).
pub const ACCUMULATOR_FLOOR: f64 = 1e-6;

/// Velocity produced by integrating repulsive acceleration. With no force
/// the stored velocity decays with time constant `decay_tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepulsionAccumulator {
    pub vel: Vec2,
    pub decay_tau: f64,
}

impl RepulsionAccumulator {
    pub fn new(decay_tau: f64) -> Self {
        Self {
            vel: Vec2::ZERO,
            decay_tau,
        }
    }

    pub fn update(&mut self, force: Vec2, mass: f64, dt: f64) -> Vec2 {
        if force == Vec2::ZERO {
            if self.decay_tau > 0.0 {
                self.vel = self.vel * (-dt / self.decay_tau).exp();
                if self.vel.norm() < ACCUMULATOR_FLOOR {
                    self.vel = Vec2::ZERO;
                }
            } else {
                self.vel = Vec2::ZERO;
            }
            Vec2::ZERO
        } else {
            let dv = force * (dt / mass);
            self.vel += dv;
            dv
        }
    }
}

/// Single-pair repulsion step for the yielding robot at `c1`.
#[allow(clippy::too_many_arguments)]
pub fn repulsion(
    c1: Vec2,
    r1: f64,
    c2: Vec2,
    r2: f64,
    k_r: f64,
    mass: f64,
    fmax: f64,
    dt: f64,
    acc: &mut RepulsionAccumulator,
) -> Result<RepulsionResult> {
    if !(mass > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mass must be positive, got {mass}"
        )));
    }
    let (ov, force) = repulsion_force(c1, r1, c2, r2, k_r, fmax);
    acc.update(force, mass, dt);
    Ok(RepulsionResult {
        overlap: ov,
        force,
        vel_cmd: acc.vel,
    })
}

/// Which of two overlapping robots gives way: the one not busy avoiding an
/// obstacle, or the higher role number when both or neither are.
/// Returns `true` when robot `a` yields.
pub fn a_yields(a_avoiding: bool, a_id: usize, b_avoiding: bool, b_id: usize) -> bool {
    match (a_avoiding, b_avoiding) {
        (false, true) => true,
        (true, false) => false,
        _ => a_id > b_id,
    }
}

pub fn uav_center(positions: &[Vec2]) -> Result<Vec2> {
    if positions.is_empty() {
        return Err(Error::Empty("positions"));
    }
    let sum = positions.iter().fold(Vec2::ZERO, |a, p| a + *p);
    Ok(sum * (1.0 / positions.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementSource {
    Direct,
    Uav,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelativeMeasurement {
    /// `peer - requester`.
    pub rel: Vec2,
    pub source: MeasurementSource,
}

/// Overhead camera that can stand in for blocked line-of-sight sensing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavView {
    pub pos: Vec2,
    pub camera_radius: f64,
    pub noise_std: f64,
}

pub fn is_occluded(a: Vec2, b: Vec2, obstacles: &[ObstacleCircle]) -> bool {
    obstacles
        .iter()
        .any(|o| segment_hits_circle(a, b, o.center, o.radius))
}

/// Relative position of `peer` seen from `requester`. Falls back to the
/// UAV when an obstacle blocks the line of sight.
pub fn fallback_relative_position<R: Rng>(
    requester: usize,
    requester_pos: Vec2,
    peer_pos: Vec2,
    obstacles: &[ObstacleCircle],
    uav: Option<&UavView>,
    rng: &mut R,
) -> Result<RelativeMeasurement> {
    let truth = peer_pos - requester_pos;
    if !is_occluded(requester_pos, peer_pos, obstacles) {
        return Ok(RelativeMeasurement {
            rel: truth,
            source: MeasurementSource::Direct,
        });
    }
    let view = uav.ok_or(Error::SensingLost(requester))?;
    let seen = |p: Vec2| p.dist(view.pos) <= view.camera_radius;
    if !(seen(requester_pos) && seen(peer_pos)) {
        return Err(Error::SensingLost(requester));
    }
    let mut rel = truth;
    if view.noise_std > 0.0 {
        let n =
            Normal::new(0.0, view.noise_std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        rel += Vec2::new(n.sample(rng), n.sample(rng));
    }
    Ok(RelativeMeasurement {
        rel,
        source: MeasurementSource::Uav,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn square(cx: f64, cy: f64, h: f64) -> ObstaclePart {
        ObstaclePart::from_polygon(&[
            Vec2::new(cx - h, cy - h),
            Vec2::new(cx + h, cy - h),
            Vec2::new(cx + h, cy + h),
            Vec2::new(cx - h, cy + h),
        ])
        .unwrap()
    }

    #[test]
    fn area_weighted_center() {
        let a = ObstaclePart {
            centroid: Vec2::new(0.0, 0.0),
            area: 1.0,
            samples: vec![Vec2::ZERO],
        };
        let b = ObstaclePart {
            centroid: Vec2::new(4.0, 0.0),
            area: 3.0,
            samples: vec![Vec2::new(4.0, 0.0)],
        };
        let c = obstacle_circle(&[a, b], 10.0).unwrap();
        assert!((c.center.x - 3.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_parts_and_coverage() {
        let c = obstacle_circle(&[square(-1.0, 0.0, 0.2), square(1.0, 0.0, 0.2)], 10.0).unwrap();
        assert!(c.center.norm() < 1e-15);
        let one = square(0.3, -0.2, 0.25);
        let c = obstacle_circle(std::slice::from_ref(&one), 10.0).unwrap();
        assert!(one.samples.iter().all(|s| s.dist(c.center) <= c.radius));
        assert!(obstacle_circle(&[], 1.0).is_err());
    }

    #[test]
    fn midpoints_and_widths() {
        let a = ObstacleCircle::new(Vec2::ZERO, 0.35).unwrap();
        let b = ObstacleCircle::new(Vec2::new(2.0, 0.0), 0.35).unwrap();
        assert_eq!(gap_midpoint(&a, &b).unwrap(), Vec2::new(1.0, 0.0));
        let c = ObstacleCircle::new(Vec2::new(-1.0, -1.0), 0.35).unwrap();
        let d = ObstacleCircle::new(Vec2::new(1.0, 1.0), 0.35).unwrap();
        assert_eq!(gap_midpoint(&c, &d).unwrap(), Vec2::ZERO);
        let e = ObstacleCircle::new(Vec2::new(1.2, 0.0), 0.35).unwrap();
        assert!((gap_width(&a, &e) - 0.5).abs() < 1e-12);
        assert!(gap_midpoint(&a, &a).is_err());
    }

    #[test]
    fn overlap_cases() {
        let c1 = Vec2::new(-0.65, 0.50);
        let c2 = Vec2::new(0.50, -0.50);
        assert_eq!(overlap(c1, 0.46, c2, 0.46), 0.0);
        assert_eq!(overlap(Vec2::ZERO, 0.5, Vec2::new(1.0, 0.0), 0.5), 0.0);
        assert!((overlap(Vec2::ZERO, 0.46, Vec2::new(0.8, 0.0), 0.46) - 0.12).abs() < 1e-12);
    }

    #[test]
    fn accumulated_velocity_after_one_second() {
        let mut acc = RepulsionAccumulator::new(1.0);
        let mut last = None;
        for _ in 0..100 {
            last = Some(
                repulsion(
                    Vec2::ZERO,
                    0.46,
                    Vec2::new(0.8, 0.0),
                    0.46,
                    -0.1,
                    1.0,
                    6.0,
                    0.01,
                    &mut acc,
                )
                .unwrap(),
            );
        }
        let r = last.unwrap();
        assert!((r.vel_cmd.norm() - 0.012).abs() < 1e-12);
        // Pushed away from the other robot.
        assert!(r.vel_cmd.x < 0.0);
    }

    #[test]
    fn accumulator_decays_to_exact_zero() {
        let mut acc = RepulsionAccumulator::new(1.0);
        acc.update(Vec2::new(1.0, 0.0), 1.0, 0.01);
        // 0.01 m/s needs ln(1e4) ~ 9.2 s to fall below the floor.
        for _ in 0..900 {
            acc.update(Vec2::ZERO, 1.0, 0.01);
        }
        assert!(acc.vel.norm() > 0.0);
        for _ in 0..100 {
            acc.update(Vec2::ZERO, 1.0, 0.01);
        }
        assert_eq!(acc.vel, Vec2::ZERO);
    }

    #[test]
    fn force_is_capped_and_zero_when_apart() {
        let (_, f) = repulsion_force(Vec2::ZERO, 50.0, Vec2::new(1.0, 0.0), 50.0, -0.1, 6.0);
        assert!((f.norm() - 6.0).abs() < 1e-12);
        let (ov, f) = repulsion_force(Vec2::ZERO, 0.1, Vec2::new(1.0, 0.0), 0.1, -0.1, 6.0);
        assert_eq!((ov, f), (0.0, Vec2::ZERO));
        let (_, f) = repulsion_force(Vec2::ZERO, 0.5, Vec2::ZERO, 0.5, -0.1, 6.0);
        assert!(f.x > 0.0 && f.y == 0.0);
    }

    #[test]
    fn yielding_rule() {
        assert!(a_yields(false, 1, true, 2));
        assert!(!a_yields(true, 3, false, 2));
        assert!(a_yields(false, 3, false, 2));
        assert!(!a_yields(true, 1, true, 2));
    }

    #[test]
    fn center_point() {
        let c = uav_center(&[Vec2::ZERO, Vec2::new(2.0, 0.0), Vec2::new(1.0, 3.0)]).unwrap();
        assert!((c - Vec2::new(1.0, 1.0)).norm() < 1e-15);
        assert_eq!(
            uav_center(&[Vec2::new(5.0, 6.0)]).unwrap(),
            Vec2::new(5.0, 6.0)
        );
        assert!(uav_center(&[]).is_err());
    }

    #[test]
    fn occlusion_fallback() {
        let wall = [ObstacleCircle::new(Vec2::new(1.0, 0.0), 0.3).unwrap()];
        let a = Vec2::ZERO;
        let b = Vec2::new(2.0, 0.0);
        let mut rng = stream(3, 0, 0, Purpose::Sensing);
        let clear =
            fallback_relative_position(0, a, Vec2::new(0.0, 2.0), &wall, None, &mut rng).unwrap();
        assert_eq!(clear.source, MeasurementSource::Direct);
        assert_eq!(clear.rel, Vec2::new(0.0, 2.0));
        let view = UavView {
            pos: Vec2::new(1.0, 1.0),
            camera_radius: 8.0,
            noise_std: 0.0,
        };
        let m = fallback_relative_position(0, a, b, &wall, Some(&view), &mut rng).unwrap();
        assert_eq!(m.source, MeasurementSource::Uav);
        assert_eq!(m.rel, b - a);
        assert_eq!(
            fallback_relative_position(0, a, b, &wall, None, &mut rng),
            Err(Error::SensingLost(0))
        );
    }
}
