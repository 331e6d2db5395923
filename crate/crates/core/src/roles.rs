//! Distributed leader/follower role numbers, queue switching near a gap and
//! the communication topologies that go with each mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::ni::IncidenceMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdSource {
    DestinationRule,
    QueueRule,
}

/// `ids[i]` is the role number of robot `i`; 1 is the leader.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdAssignment {
    pub ids: Vec<usize>,
    pub source: IdSource,
}

impl IdAssignment {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Robot index holding role `id`.
    pub fn robot_with(&self, id: usize) -> Option<usize> {
        self.ids.iter().position(|&r| r == id)
    }

    pub fn leader(&self) -> usize {
        self.robot_with(1)
            .expect("assignment always contains a leader")
    }

    /// Robot indices ordered by role number.
    pub fn by_role(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.ids.len()).collect();
        order.sort_by_key(|&i| self.ids[i]);
        order
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.ids.len()];
        self.ids
            .iter()
            .all(|&id| id >= 1 && id <= seen.len() && !std::mem::replace(&mut seen[id - 1], true))
    }
}

/// Indices sorted by ascending key, ties kept in index order.
fn rank_by<F: Fn(usize) -> f64>(indices: impl Iterator<Item = usize>, key: F) -> Vec<usize> {
    let mut v: Vec<usize> = indices.collect();
    v.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    v
}

/// Leader is the robot closest to the destination; followers are numbered
/// 2.. by increasing distance to the leader. Ties go to the lower index.
pub fn assign_ids(positions: &[Vec2], destination: Vec2) -> Result<IdAssignment> {
    if positions.is_empty() {
        return Err(Error::Empty("robot positions"));
    }
    if positions.iter().any(|p| !p.is_finite()) || !destination.is_finite() {
        return Err(Error::NonFinite("position".into()));
    }
    let leader = rank_by(0..positions.len(), |i| positions[i].dist(destination))[0];
    let followers = rank_by((0..positions.len()).filter(|&i| i != leader), |i| {
        positions[i].dist(positions[leader])
    });
    let mut ids = vec![0; positions.len()];
    ids[leader] = 1;
    for (k, &i) in followers.iter().enumerate() {
        ids[i] = k + 2;
    }
    Ok(IdAssignment {
        ids,
        source: IdSource::DestinationRule,
    })
}

/// Role numbers by increasing distance to the gap midpoint.
pub fn requeue_ids(positions: &[Vec2], m: Vec2) -> Result<IdAssignment> {
    if positions.is_empty() {
        return Err(Error::Empty("robot positions"));
    }
    let order = rank_by(0..positions.len(), |i| positions[i].dist(m));
    let mut ids = vec![0; positions.len()];
    for (k, &i) in order.iter().enumerate() {
        ids[i] = k + 1;
    }
    Ok(IdAssignment {
        ids,
        source: IdSource::QueueRule,
    })
}

/// Desired displacements from the leader, indexed by role number - 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationSpec {
    pub shape_name: String,
    pub offsets: Vec<Vec2>,
}

impl FormationSpec {
    pub fn new(shape_name: impl Into<String>, offsets: Vec<Vec2>) -> Result<Self> {
        let spec = Self {
            shape_name: shape_name.into(),
            offsets,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.offsets.first() {
            None => Err(Error::Empty("formation offsets")),
            Some(o) if *o != Vec2::ZERO => {
                Err(Error::Config("leader offset must be (0, 0)".into()))
            }
            _ if self.offsets.iter().any(|o| !o.is_finite()) => {
                Err(Error::NonFinite("formation offset".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Same shape expressed in a frame rotated by `theta`.
    pub fn rotated(&self, theta: f64) -> Self {
        Self {
            shape_name: self.shape_name.clone(),
            offsets: self.offsets.iter().map(|o| o.rotated(theta)).collect(),
        }
    }
}

pub fn desired_offset(spec: &FormationSpec, id: usize) -> Result<Vec2> {
    if id == 0 || id > spec.offsets.len() {
        return Err(Error::OutOfRange {
            index: id,
            len: spec.offsets.len(),
        });
    }
    Ok(spec.offsets[id - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Front,
    Behind,
}

/// Radius around the gap midpoint that switches queue mode (m).
pub const QUEUE_RADIUS: f64 = 1.0;

/// Queue flag update: set within the radius in front of the gap, cleared
/// beyond it behind the gap, held otherwise (including exactly on the radius).
pub fn queue_flag(dist_to_m: f64, side: Side, prev: bool) -> bool {
    match side {
        Side::Front if dist_to_m < QUEUE_RADIUS => true,
        Side::Behind if dist_to_m > QUEUE_RADIUS => false,
        _ => prev,
    }
}

/// Side of the gap a robot is on, relative to the travel direction.
pub fn side_of(pos: Vec2, m: Vec2, travel_dir: Vec2) -> Side {
    if (pos - m).dot(travel_dir) > 0.0 {
        Side::Behind
    } else {
        Side::Front
    }
}

/// Leader-anchored line slots: role 1 at `m`, role k one spacing behind role k-1.
pub fn line_targets(
    ids: &IdAssignment,
    m: Vec2,
    spacing: f64,
    travel_dir: Vec2,
) -> Result<Vec<Vec2>> {
    if !(spacing > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "line spacing must be positive, got {spacing}"
        )));
    }
    let dir = travel_dir
        .normalized()
        .ok_or_else(|| Error::InvalidArgument("travel direction is zero".into()))?;
    Ok(ids
        .ids
        .iter()
        .map(|&id| m - dir * (spacing * (id - 1) as f64))
        .collect())
}

/// Line slots that chain off the previous poses of the robot ahead; the
/// head of the line targets `head_target`.
pub fn chained_line_targets(
    ids: &IdAssignment,
    head_target: Vec2,
    prev_poses: &[Vec2],
    spacing: f64,
    travel_dir: Vec2,
) -> Result<Vec<Vec2>> {
    if !(spacing > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "line spacing must be positive, got {spacing}"
        )));
    }
    if prev_poses.len() != ids.len() {
        return Err(Error::InvalidArgument(
            "pose count differs from assignment".into(),
        ));
    }
    let dir = travel_dir
        .normalized()
        .ok_or_else(|| Error::InvalidArgument("travel direction is zero".into()))?;
    Ok(ids
        .ids
        .iter()
        .map(|&id| match id {
            1 => head_target,
            k => {
                let ahead = ids.robot_with(k - 1).expect("bijective assignment");
                prev_poses[ahead] - dir * spacing
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyMode {
    /// Every follower linked to the leader.
    Formation,
    /// Role k linked to role k - 1.
    Queue,
}

/// Communication graph over robot indices. `consensus` is the incidence
/// matrix with the leader row removed; `reference` selects the leader row.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub incidence: IncidenceMatrix,
    pub consensus: nalgebra::DMatrix<f64>,
    pub reference: nalgebra::DMatrix<f64>,
}

pub fn build_topology(ids: &IdAssignment, mode: TopologyMode) -> Result<Topology> {
    if !ids.is_bijection() {
        return Err(Error::InvalidArgument(
            "role numbers are not a bijection".into(),
        ));
    }
    let n = ids.len();
    let order = ids.by_role();
    let edges: Vec<(usize, usize)> = match mode {
        TopologyMode::Formation => order[1..].iter().map(|&f| (order[0], f)).collect(),
        TopologyMode::Queue => order.windows(2).map(|w| (w[0], w[1])).collect(),
    };
    let incidence = IncidenceMatrix::from_edges(n, &edges)?;
    let leader = order[0];
    let q = incidence.matrix();
    let rows: Vec<usize> = (0..n).filter(|&i| i != leader).collect();
    let consensus = q.select_rows(rows.iter());
    let mut reference = nalgebra::DMatrix::zeros(1, n);
    reference[(0, leader)] = 1.0;
    Ok(Topology {
        incidence,
        consensus,
        reference,
    })
}

/// Per-robot queue flags, the gap anchor and the roles to restore afterwards.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueState {
    pub que: Vec<bool>,
    pub m: Option<Vec2>,
    pub saved_ids: Option<IdAssignment>,
    /// Side of the gap each robot is considered to be on.
    pub sides: Vec<Side>,
}

impl QueueState {
    pub fn new(n: usize) -> Self {
        Self {
            que: vec![false; n],
            m: None,
            saved_ids: None,
            sides: vec![Side::Front; n],
        }
    }

    pub fn any_active(&self) -> bool {
        self.que.iter().any(|&q| q)
    }

    /// Updates every flag from current positions; returns the indices whose
    /// flag changed.
    pub fn update(&mut self, positions: &[Vec2], travel_dir: Vec2) -> Vec<usize> {
        let Some(m) = self.m else {
            return Vec::new();
        };
        let mut changed = Vec::new();
        for (i, p) in positions.iter().enumerate() {
            let side = side_of(*p, m, travel_dir);
            self.sides[i] = side;
            let next = queue_flag(p.dist(m), side, self.que[i]);
            if next != self.que[i] {
                changed.push(i);
                self.que[i] = next;
            }
        }
        changed
    }
}
