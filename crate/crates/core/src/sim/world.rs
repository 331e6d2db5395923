//! World state and the fixed-step tick.

use rand::Rng;
use serde::Serialize;

use super::config::{InitConfig, InitVelocity, OffsetFrame, RepulsionGating, Scenario};
use super::trace::{Phase, RobotRow, SourceTag, TraceRecord};
use crate::avoidance::{
    a_yields, fallback_relative_position, gap_midpoint, gap_width, overlap, repulsion_force,
    uav_center, MeasurementSource, ObstacleCircle, RepulsionAccumulator, UavView,
};
use crate::error::{Error, Result};
use crate::formation::{formation_step, transition_step, FormationInput, SensingFailSafe};
use crate::geom::{angle_diff, segment_hits_circle, Vec2};
use crate::lti::DiscreteLTI;
use crate::rng::{stream, Purpose};
use crate::roles::{
    assign_ids, build_topology, line_targets, requeue_ids, side_of, IdAssignment, QueueState, Side,
    Topology, TopologyMode, QUEUE_RADIUS,
};
use crate::vehicle::{uav_tick, ugv_tick, RobotState, UavModel, UgvModel, UgvParams, VehicleKind};

/// A ground robot and its private filter state.
#[derive(Debug, Clone)]
pub struct Agent {
    pub state: RobotState,
    model: UgvModel,
    acc: RepulsionAccumulator,
    measured: Option<Vec2>,
    pub source: SourceTag,
    pub cmd: Vec2,
    pub target: Vec2,
    pub overlap: f64,
    pub force: Vec2,
    faulted: bool,
}

#[derive(Debug, Clone)]
pub struct UavAgent {
    pub state: RobotState,
    model: UavModel,
    cx: DiscreteLTI,
    cy: DiscreteLTI,
    pub camera_radius: f64,
    pub noise_std: f64,
    pub cmd: Vec2,
    pub target: Vec2,
}

/// A passable gap between two known obstacles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gate {
    pub a: usize,
    pub b: usize,
    pub m: Vec2,
    /// Unit normal of the gap pointing towards the destination.
    pub normal: Vec2,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    IdsAssigned {
        ids: Vec<usize>,
    },
    Formed,
    GateDetected {
        m: Vec2,
        width: f64,
    },
    QueueStarted {
        ids: Vec<usize>,
        trigger_distance: f64,
    },
    FlagSet {
        robot: usize,
    },
    FlagCleared {
        robot: usize,
    },
    LineFormed,
    QueueEnded {
        ids: Vec<usize>,
    },
    Reformed,
    Arrived,
    SensingLost {
        robot: usize,
    },
    SensingRestored {
        robot: usize,
    },
    VehicleFault {
        robot: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub tick: u64,
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Running safety and progress counters, updated every tick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stats {
    pub min_pair_distance: f64,
    /// Smallest `distance / (r_i + r_j)` over pairs with repulsion enabled.
    pub min_pair_ratio_enabled: Option<f64>,
    /// Smallest centre-to-obstacle-edge distance (negative: inside).
    pub min_obstacle_clearance: Option<f64>,
    pub obstacle_entry_ticks: u64,
    /// Largest `|command| / vmax`.
    pub max_command_ratio: f64,
    /// Pairs whose force and overlap disagreed (force without overlap or
    /// overlap without force while enabled).
    pub repulsion_mismatches: u64,
    pub repulsion_active_ticks: u64,
    pub nonfinite_records: u64,
    pub uav_fallback_ticks: u64,
    pub sensing_lost_ticks: u64,
    pub vehicle_faults: u64,
    pub activations: Vec<u32>,
    pub deactivations: Vec<u32>,
    #[serde(skip)]
    sq_err: Vec<f64>,
    #[serde(skip)]
    err_samples: u64,
}

impl Stats {
    fn new(n: usize) -> Self {
        Self {
            min_pair_distance: f64::INFINITY,
            min_pair_ratio_enabled: None,
            min_obstacle_clearance: None,
            obstacle_entry_ticks: 0,
            max_command_ratio: 0.0,
            repulsion_mismatches: 0,
            repulsion_active_ticks: 0,
            nonfinite_records: 0,
            uav_fallback_ticks: 0,
            sensing_lost_ticks: 0,
            vehicle_faults: 0,
            activations: vec![0; n],
            deactivations: vec![0; n],
            sq_err: vec![0.0; n],
            err_samples: 0,
        }
    }

    /// Per-robot RMS distance to the assigned target over the run.
    pub fn rmse(&self) -> Vec<f64> {
        let k = self.err_samples.max(1) as f64;
        self.sq_err.iter().map(|s| (s / k).sqrt()).collect()
    }
}

/// Milestone times (s) of the mission.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Milestones {
    pub formed: Option<f64>,
    pub gate_detected: Option<f64>,
    pub queue_started: Option<f64>,
    /// Distance from the gap midpoint of the robots whose flag started the queue.
    pub queue_trigger_distance: Option<f64>,
    pub line_formed: Option<f64>,
    pub queue_ended: Option<f64>,
    /// Roles after the queue equal those before it.
    pub ids_restored: Option<bool>,
    pub reformed: Option<f64>,
    pub arrived: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct World {
    pub scenario: Scenario,
    pub agents: Vec<Agent>,
    pub uav: Option<UavAgent>,
    pub obstacles: Vec<ObstacleCircle>,
    pub clock: u64,
    pub ids: IdAssignment,
    pub initial_ids: IdAssignment,
    pub queue: QueueState,
    pub topology: Topology,
    pub phase: Phase,
    pub gate: Option<Gate>,
    pub stats: Stats,
    pub milestones: Milestones,
    pub events: Vec<Event>,
    /// Formation offsets in world axes, indexed by role number - 1.
    offsets: Vec<Vec2>,
    hold_point: Vec2,
    settled_ticks: u64,
    approach_done: bool,
    known: Vec<bool>,
    passed: Vec<(usize, usize)>,
    dis_no: Vec<f64>,
    line_formed: bool,
    failsafe: SensingFailSafe,
}

fn initial_poses(s: &Scenario) -> Vec<(Vec2, f64, Vec2)> {
    match &s.robots.init {
        InitConfig::Explicit { poses } => poses
            .iter()
            .map(|p| (Vec2::new(p.x, p.y), p.yaw, Vec2::ZERO))
            .collect(),
        InitConfig::Random {
            half_width,
            velocity,
        } => {
            let mut rng = stream(s.seed, 0, 0, Purpose::Init);
            let n = s.robots.count;
            let pos: Vec<Vec2> = (0..n)
                .map(|_| {
                    let x = half_width * (2.0 * rng.random::<f64>() - 1.0);
                    let y = half_width * (2.0 * rng.random::<f64>() - 1.0);
                    Vec2::new(x, y)
                })
                .collect();
            // cm/s to m/s.
            let draw = |u: f64| match velocity {
                InitVelocity::Literal => 0.002 * (u - 350.0) * 0.01,
                InitVelocity::Spread => 0.002 * (700.0 * u - 350.0) * 0.01,
            };
            pos.into_iter()
                .map(|p| {
                    let v = Vec2::new(draw(rng.random()), draw(rng.random()));
                    (p, v.angle(), v)
                })
                .collect()
        }
    }
}

/// Random start as in the gauntlet preset, with `n` robots in a V.
pub fn init_random(n: usize, seed: u64) -> Result<World> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one robot".into()));
    }
    let mut s = super::config::case1_6ugv();
    s.seed = seed;
    s.robots.count = n;
    s.formation.spec.offsets = super::config::v_shape(n);
    World::new(s)
}

impl World {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let s = &scenario;
        let dt = s.dt;
        let params = UgvParams {
            vmax: s.control.gains.vmax,
            yaw_kp: s.control.yaw_kp,
            yaw_ki: s.control.yaw_ki,
            corner_threshold: crate::vehicle::CORNER_THRESHOLD,
        };
        let mut agents = Vec::with_capacity(s.robots.count);
        for (pos, yaw, vel) in initial_poses(s) {
            let mut state = RobotState::new(VehicleKind::Ugv, pos, yaw, s.robots.radius)?;
            state.vel = vel;
            agents.push(Agent {
                model: UgvModel::new(state.yaw, params, dt)?,
                state,
                acc: RepulsionAccumulator::new(s.control.accumulator_tau),
                measured: None,
                source: SourceTag::None,
                cmd: Vec2::ZERO,
                target: pos,
                overlap: 0.0,
                force: Vec2::ZERO,
                faulted: false,
            });
        }
        let positions: Vec<Vec2> = agents.iter().map(|a| a.state.pos).collect();
        let dest = s.mission.destination;
        let ids = assign_ids(&positions, dest)?;
        for (a, &id) in agents.iter_mut().zip(&ids.ids) {
            a.state.id = id;
        }
        let leader_pos = positions[ids.leader()];
        let theta = match s.formation.frame {
            OffsetFrame::World => 0.0,
            OffsetFrame::Travel => (dest - leader_pos).normalized().map_or(0.0, Vec2::angle),
        };
        let offsets = s.formation.spec.rotated(theta).offsets;

        let uav = match s.uav_models()? {
            None => None,
            Some(m) => {
                let u = s.uav.as_ref().expect("models imply config");
                Some(UavAgent {
                    state: RobotState::new(VehicleKind::Uav, u.start, 0.0, s.robots.radius)?,
                    model: UavModel::with_plants(
                        &m.plant_x,
                        &m.plant_y,
                        u.start,
                        s.wind.coupling,
                        dt,
                    )?,
                    cx: DiscreteLTI::new(&m.controller, dt)?,
                    cy: DiscreteLTI::new(&m.controller, dt)?,
                    camera_radius: u.camera_radius,
                    noise_std: u.noise_std,
                    cmd: Vec2::ZERO,
                    target: u.start,
                })
            }
        };
        let obstacles = s.obstacle_circles()?;
        let n = agents.len();
        let topology = build_topology(&ids, TopologyMode::Formation)?;
        let mut w = Self {
            agents,
            uav,
            known: vec![false; obstacles.len()],
            obstacles,
            clock: 0,
            initial_ids: ids.clone(),
            ids,
            queue: QueueState::new(n),
            topology,
            phase: Phase::Assemble,
            gate: None,
            stats: Stats::new(n),
            milestones: Milestones::default(),
            events: Vec::new(),
            offsets,
            hold_point: leader_pos,
            settled_ticks: 0,
            approach_done: false,
            passed: Vec::new(),
            dis_no: vec![0.0; n],
            line_formed: false,
            failsafe: SensingFailSafe::new(n),
            scenario,
        };
        w.emit(EventKind::IdsAssigned {
            ids: w.ids.ids.clone(),
        });
        Ok(w)
    }

    pub fn dt(&self) -> f64 {
        self.scenario.dt
    }

    pub fn time(&self) -> f64 {
        self.clock as f64 * self.scenario.dt
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.agents.iter().map(|a| a.state.pos).collect()
    }

    fn emit(&mut self, kind: EventKind) {
        log::debug!("t={:.2} {:?}", self.time(), kind);
        self.events.push(Event {
            tick: self.clock,
            t: self.time(),
            kind,
        });
    }

    fn leader(&self) -> usize {
        self.ids.leader()
    }

    /// Where the leader is being sent this tick.
    pub fn leader_reference(&self) -> Vec2 {
        let mission = &self.scenario.mission;
        match self.phase {
            Phase::Assemble | Phase::Reform => self.hold_point,
            Phase::Travel => match self.gate {
                Some(g) if self.approach_done => g.m,
                Some(g) => g.m - g.normal * mission.approach_distance,
                None => mission.destination,
            },
            Phase::Queue => {
                let g = self.gate.expect("queue implies a gate");
                if self.line_formed {
                    g.m + g.normal * mission.exit_distance
                } else {
                    g.m
                }
            }
            Phase::Arrived => mission.destination,
        }
    }

    /// Peer robot and desired `self - peer` for every robot; the leader
    /// maps to itself.
    fn peers_and_offsets(&self) -> (Vec<usize>, Vec<Vec2>) {
        let n = self.agents.len();
        let leader = self.leader();
        let mut peers = vec![leader; n];
        let mut offs = vec![Vec2::ZERO; n];
        for i in 0..n {
            let id = self.ids.ids[i];
            if i == leader {
                continue;
            }
            match (self.phase, self.gate) {
                (Phase::Queue, Some(g)) => {
                    peers[i] = self.ids.robot_with(id - 1).expect("bijective roles");
                    offs[i] = -g.normal * self.scenario.formation.line_spacing;
                }
                _ => offs[i] = self.offsets[id - 1],
            }
        }
        (peers, offs)
    }

    fn targets(&self, pos: &[Vec2]) -> Vec<Vec2> {
        let (peers, offs) = self.peers_and_offsets();
        let leader = self.leader();
        let reference = self.leader_reference();
        (0..pos.len())
            .map(|i| {
                if i == leader {
                    reference
                } else {
                    pos[peers[i]] + offs[i]
                }
            })
            .collect()
    }

    fn detect_obstacles(&mut self) {
        let s = &self.scenario.sensing;
        for a in &self.agents {
            for (j, o) in self.obstacles.iter().enumerate() {
                if self.known[j] {
                    continue;
                }
                let rel = o.center - a.state.pos;
                let in_range = rel.norm() - o.radius <= s.fov_range;
                let in_cone = angle_diff(rel.angle(), a.state.yaw).abs() <= s.fov_half_angle;
                if in_range && in_cone {
                    self.known[j] = true;
                }
            }
        }
    }

    /// Closest pair of known obstacles with a positive gap that the leader
    /// has not passed yet.
    fn best_gate(&self, leader_pos: Vec2) -> Option<Gate> {
        let dest = self.scenario.mission.destination;
        let mut best: Option<(f64, Gate)> = None;
        for a in 0..self.obstacles.len() {
            for b in a + 1..self.obstacles.len() {
                if !(self.known[a] && self.known[b]) || self.passed.contains(&(a, b)) {
                    continue;
                }
                let (oa, ob) = (&self.obstacles[a], &self.obstacles[b]);
                let width = gap_width(oa, ob);
                let blocked = self.obstacles.iter().enumerate().any(|(k, o)| {
                    k != a
                        && k != b
                        && segment_hits_circle(oa.center, ob.center, o.center, o.radius)
                });
                if width <= 0.0 || blocked {
                    continue;
                }
                let Ok(m) = gap_midpoint(oa, ob) else {
                    continue;
                };
                let Some(along) = (ob.center - oa.center).normalized() else {
                    continue;
                };
                let mut normal = Vec2::new(-along.y, along.x);
                if normal.dot(dest - m) < 0.0 {
                    normal = -normal;
                }
                if side_of(leader_pos, m, normal) != Side::Front || (dest - m).dot(normal) <= 0.0 {
                    continue;
                }
                let d = oa.center.dist(ob.center);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((
                        d,
                        Gate {
                            a,
                            b,
                            m,
                            normal,
                            width,
                        },
                    ));
                }
            }
        }
        best.map(|(_, g)| g)
    }

    fn measure_peers(&mut self, pos: &[Vec2]) {
        let (peers, _) = self.peers_and_offsets();
        let leader = self.leader();
        let view = self.uav.as_ref().map(|u| UavView {
            pos: u.state.pos,
            camera_radius: u.camera_radius,
            noise_std: u.noise_std,
        });
        for i in 0..self.agents.len() {
            if i == leader {
                self.agents[i].measured = None;
                self.agents[i].source = SourceTag::None;
                continue;
            }
            let mut rng = stream(self.scenario.seed, self.clock, i as u64, Purpose::Sensing);
            let r = fallback_relative_position(
                i,
                pos[i],
                pos[peers[i]],
                &self.obstacles,
                view.as_ref(),
                &mut rng,
            );
            let was_lost = self.agents[i].source == SourceTag::Lost;
            let (measured, source) = match r {
                Ok(m) => (
                    Some(m.rel),
                    match m.source {
                        MeasurementSource::Direct => SourceTag::Direct,
                        MeasurementSource::Uav => SourceTag::Uav,
                    },
                ),
                Err(_) => (None, SourceTag::Lost),
            };
            self.agents[i].measured = measured;
            self.agents[i].source = source;
            match (was_lost, source == SourceTag::Lost) {
                (false, true) => self.emit(EventKind::SensingLost { robot: i }),
                (true, false) => self.emit(EventKind::SensingRestored { robot: i }),
                _ => {}
            }
        }
    }

    fn settled(&mut self, pos: &[Vec2]) -> bool {
        let tol = self.scenario.mission.slot_tolerance;
        let targets = self.targets(pos);
        let ok = pos.iter().zip(&targets).all(|(p, t)| p.dist(*t) <= tol);
        self.settled_ticks = if ok { self.settled_ticks + 1 } else { 0 };
        ok && self.settled_ticks as f64 * self.scenario.dt >= self.scenario.mission.hold_time - 1e-9
    }

    fn set_phase(&mut self, p: Phase) {
        self.phase = p;
        self.settled_ticks = 0;
    }

    fn update_flags(&mut self, pos: &[Vec2], normal: Vec2) {
        for i in self.queue.update(pos, normal) {
            if self.queue.que[i] {
                self.stats.activations[i] += 1;
                self.emit(EventKind::FlagSet { robot: i });
            } else {
                self.stats.deactivations[i] += 1;
                self.emit(EventKind::FlagCleared { robot: i });
            }
        }
    }

    fn start_queue(&mut self, pos: &[Vec2], g: Gate) -> Result<()> {
        let t = self.time();
        let trigger = (0..pos.len())
            .filter(|&i| self.queue.que[i])
            .map(|i| pos[i].dist(g.m))
            .fold(0.0, f64::max);
        self.queue.saved_ids = Some(self.ids.clone());
        self.ids = requeue_ids(pos, g.m)?;
        self.topology = build_topology(&self.ids, TopologyMode::Queue)?;
        let slots = line_targets(
            &self.ids,
            g.m,
            self.scenario.formation.line_spacing,
            g.normal,
        )?;
        let tol = self.scenario.mission.slot_tolerance;
        self.dis_no = pos
            .iter()
            .zip(&slots)
            .map(|(p, s)| p.dist(*s).max(tol))
            .collect();
        self.line_formed = false;
        self.set_phase(Phase::Queue);
        self.milestones.queue_started.get_or_insert(t);
        self.milestones
            .queue_trigger_distance
            .get_or_insert(trigger);
        self.emit(EventKind::QueueStarted {
            ids: self.ids.ids.clone(),
            trigger_distance: trigger,
        });
        Ok(())
    }

    fn end_queue(&mut self, pos: &[Vec2], g: Gate) -> Result<()> {
        let saved = self.queue.saved_ids.take().expect("queue saved the roles");
        self.ids = saved;
        self.topology = build_topology(&self.ids, TopologyMode::Formation)?;
        self.passed.push((g.a, g.b));
        self.queue.m = None;
        self.hold_point = pos[self.leader()];
        let restored = self.ids == self.initial_ids;
        self.milestones.ids_restored =
            Some(self.milestones.ids_restored.unwrap_or(true) && restored);
        self.milestones.queue_ended.get_or_insert(self.time());
        self.set_phase(Phase::Reform);
        self.emit(EventKind::QueueEnded {
            ids: self.ids.ids.clone(),
        });
        Ok(())
    }

    /// Phase logic. Returns whether roles or peers changed.
    fn update_mission(&mut self, pos: &[Vec2]) -> Result<bool> {
        let t = self.time();
        match self.phase {
            Phase::Assemble => {
                if self.settled(pos) {
                    self.milestones.formed.get_or_insert(t);
                    self.set_phase(Phase::Travel);
                    self.emit(EventKind::Formed);
                }
            }
            Phase::Travel => {
                if !self.approach_done {
                    let g = self.best_gate(pos[self.leader()]);
                    if g.map(|g| g.m) != self.gate.map(|g| g.m) {
                        if let Some(g) = g {
                            self.milestones.gate_detected.get_or_insert(t);
                            self.emit(EventKind::GateDetected {
                                m: g.m,
                                width: g.width,
                            });
                        }
                        self.gate = g;
                    }
                }
                match self.gate {
                    Some(g) => {
                        let staging = g.m - g.normal * self.scenario.mission.approach_distance;
                        if pos[self.leader()].dist(staging)
                            <= self.scenario.mission.waypoint_tolerance
                        {
                            self.approach_done = true;
                        }
                        self.queue.m = Some(g.m);
                        self.update_flags(pos, g.normal);
                        if self.queue.any_active() {
                            self.start_queue(pos, g)?;
                            return Ok(true);
                        }
                    }
                    None => {
                        if self.settled(pos) {
                            self.milestones.arrived.get_or_insert(t);
                            self.set_phase(Phase::Arrived);
                            self.emit(EventKind::Arrived);
                        }
                    }
                }
            }
            Phase::Queue => {
                let g = self.gate.expect("queue implies a gate");
                self.update_flags(pos, g.normal);
                if !self.line_formed && self.settled(pos) {
                    self.line_formed = true;
                    self.milestones.line_formed.get_or_insert(t);
                    self.emit(EventKind::LineFormed);
                }
                let clear = (0..pos.len()).all(|i| {
                    !self.queue.que[i]
                        && self.queue.sides[i] == Side::Behind
                        && pos[i].dist(g.m) > QUEUE_RADIUS
                });
                if clear {
                    self.end_queue(pos, g)?;
                    return Ok(true);
                }
            }
            Phase::Reform => {
                if self.settled(pos) {
                    self.milestones.reformed.get_or_insert(t);
                    self.gate = None;
                    self.approach_done = false;
                    self.set_phase(Phase::Travel);
                    self.emit(EventKind::Reformed);
                }
            }
            Phase::Arrived => {}
        }
        Ok(false)
    }

    fn repulsion_enabled(&self) -> bool {
        match self.scenario.control.repulsion {
            RepulsionGating::Always => true,
            RepulsionGating::AvoidanceOnly => self.phase == Phase::Queue,
        }
    }

    /// Pairwise forces on yielding robots; updates the accumulators.
    fn repulsion(&mut self, pos: &[Vec2]) {
        let c = &self.scenario.control;
        let (k_r, fmax, mass, dt) = (c.k_r, c.fmax, self.scenario.robots.mass, self.scenario.dt);
        let enabled = self.repulsion_enabled();
        let n = pos.len();
        let mut force = vec![Vec2::ZERO; n];
        let mut max_ov = vec![0.0f64; n];
        let mut any = false;
        for i in 0..n {
            for j in i + 1..n {
                let (ri, rj) = (self.agents[i].state.radius, self.agents[j].state.radius);
                let ov = overlap(pos[i], ri, pos[j], rj);
                max_ov[i] = max_ov[i].max(ov);
                max_ov[j] = max_ov[j].max(ov);
                let d = pos[i].dist(pos[j]);
                self.stats.min_pair_distance = self.stats.min_pair_distance.min(d);
                if !enabled {
                    continue;
                }
                let ratio = d / (ri + rj);
                self.stats.min_pair_ratio_enabled = Some(
                    self.stats
                        .min_pair_ratio_enabled
                        .map_or(ratio, |r| r.min(ratio)),
                );
                let i_yields = a_yields(
                    self.queue.que[i],
                    self.ids.ids[i],
                    self.queue.que[j],
                    self.ids.ids[j],
                );
                let (y, o) = if i_yields { (i, j) } else { (j, i) };
                let (ov2, f) = repulsion_force(pos[y], ri, pos[o], rj, k_r, fmax);
                if (ov2 > 0.0) != (f != Vec2::ZERO) || (ov > 0.0) != (ov2 > 0.0) {
                    self.stats.repulsion_mismatches += 1;
                }
                any |= f != Vec2::ZERO;
                force[y] += f;
            }
        }
        if any {
            self.stats.repulsion_active_ticks += 1;
        }
        for (i, a) in self.agents.iter_mut().enumerate() {
            a.acc.update(force[i], mass, dt);
            a.force = force[i];
            a.overlap = max_ov[i];
        }
    }

    fn commands(&mut self, pos: &[Vec2]) -> Result<Vec<Vec2>> {
        let (_, offs) = self.peers_and_offsets();
        let measured: Vec<Option<Vec2>> = self.agents.iter().map(|a| a.measured).collect();
        let repulse: Vec<Vec2> = self.agents.iter().map(|a| a.acc.vel).collect();
        let input = FormationInput {
            ids: &self.ids,
            positions: pos,
            leader_reference: self.leader_reference(),
            measured: &measured,
            offsets: &offs,
            repulse: &repulse,
        };
        let c = &self.scenario.control;
        let out = if self.phase == Phase::Queue && !self.line_formed {
            transition_step(
                &input,
                &c.gains,
                &c.weights,
                &self.dis_no,
                self.scenario.formation.t_des,
                &mut self.failsafe,
            )?
        } else {
            formation_step(&input, &c.gains, &c.weights, &mut self.failsafe)?
        };
        Ok(out.vel_sp)
    }

    /// Advances the world by one step and returns the record of the new state.
    pub fn tick(&mut self) -> TraceRecord {
        let pos = self.positions();
        let dt = self.scenario.dt;
        let sense_now = self
            .clock
            .is_multiple_of(self.scenario.sensing.rate_divider);

        // Sensing.
        if sense_now {
            self.detect_obstacles();
        }
        // Roles and queue logic.
        let changed = match self.update_mission(&pos) {
            Ok(c) => c,
            Err(e) => {
                log::warn!("role update failed: {e}");
                false
            }
        };
        if sense_now || changed {
            self.measure_peers(&pos);
        }
        for a in &self.agents {
            match a.source {
                SourceTag::Uav => self.stats.uav_fallback_ticks += 1,
                SourceTag::Lost => self.stats.sensing_lost_ticks += 1,
                _ => {}
            }
        }
        // Repulsion, then the formation law blends it in.
        self.repulsion(&pos);
        let cmds = match self.commands(&pos) {
            Ok(c) => c,
            Err(e) => {
                log::warn!("formation step failed: {e}");
                vec![Vec2::ZERO; pos.len()]
            }
        };
        let targets = self.targets(&pos);
        let vmax = self.scenario.control.gains.vmax;

        // Vehicles.
        let t = self.time();
        let mut faults = Vec::new();
        for (i, a) in self.agents.iter_mut().enumerate() {
            a.cmd = if a.faulted { Vec2::ZERO } else { cmds[i] };
            a.target = targets[i];
            self.stats.max_command_ratio = self.stats.max_command_ratio.max(a.cmd.norm() / vmax);
            self.stats.sq_err[i] += pos[i].dist(targets[i]).powi(2);
            match ugv_tick(&a.state, &mut a.model, a.cmd, dt) {
                Ok(next) => a.state = next,
                Err(e) => {
                    a.faulted = true;
                    a.state.vel = Vec2::ZERO;
                    faults.push((i, e.to_string()));
                }
            }
        }
        self.stats.err_samples += 1;
        for (robot, message) in faults {
            self.stats.vehicle_faults += 1;
            self.emit(EventKind::VehicleFault { robot, message });
        }
        if let Some(u) = self.uav.as_mut() {
            let center = uav_center(&pos).expect("non-empty swarm");
            let e = -center + u.state.pos;
            let step =
                u.cx.step(e.x)
                    .and_then(|vx| u.cy.step(e.y).map(|vy| Vec2::new(vx, vy)));
            u.cmd = step.unwrap_or(Vec2::ZERO);
            u.target = center;
            let mut rng = stream(
                self.scenario.seed,
                self.clock,
                self.agents.len() as u64,
                Purpose::Wind,
            );
            match uav_tick(
                &u.state,
                &mut u.model,
                u.cmd,
                &self.scenario.wind,
                t,
                dt,
                &mut rng,
            ) {
                Ok(next) => u.state = next,
                Err(e) => log::warn!("uav step failed: {e}"),
            }
        }

        self.clock += 1;
        let rec = self.record();
        self.check(&rec);
        rec
    }

    fn check(&mut self, rec: &TraceRecord) {
        if !rec.is_finite() {
            self.stats.nonfinite_records += 1;
        }
        let mut entered = false;
        for a in &self.agents {
            for o in &self.obstacles {
                let c = a.state.pos.dist(o.center) - o.radius;
                self.stats.min_obstacle_clearance =
                    Some(self.stats.min_obstacle_clearance.map_or(c, |m| m.min(c)));
                entered |= c < 0.0;
            }
        }
        if entered {
            self.stats.obstacle_entry_ticks += 1;
        }
    }

    pub fn record(&self) -> TraceRecord {
        let t = self.time();
        let mut rows: Vec<RobotRow> = self
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| RobotRow {
                tick: self.clock,
                t,
                phase: self.phase,
                robot: i,
                kind: VehicleKind::Ugv,
                id: self.ids.ids[i],
                x: a.state.pos.x,
                y: a.state.pos.y,
                yaw: a.state.yaw,
                vx: a.state.vel.x,
                vy: a.state.vel.y,
                cmd_x: a.cmd.x,
                cmd_y: a.cmd.y,
                target_x: a.target.x,
                target_y: a.target.y,
                overlap: a.overlap,
                force_x: a.force.x,
                force_y: a.force.y,
                queue: self.queue.que[i],
                source: a.source,
            })
            .collect();
        if let Some(u) = &self.uav {
            rows.push(RobotRow {
                tick: self.clock,
                t,
                phase: self.phase,
                robot: self.agents.len(),
                kind: VehicleKind::Uav,
                id: 0,
                x: u.state.pos.x,
                y: u.state.pos.y,
                yaw: u.state.yaw,
                vx: u.state.vel.x,
                vy: u.state.vel.y,
                cmd_x: u.cmd.x,
                cmd_y: u.cmd.y,
                target_x: u.target.x,
                target_y: u.target.y,
                overlap: 0.0,
                force_x: 0.0,
                force_y: 0.0,
                queue: false,
                source: SourceTag::None,
            });
        }
        TraceRecord {
            tick: self.clock,
            t,
            phase: self.phase,
            rows,
        }
    }

    /// Distance from each robot to its current target.
    pub fn slot_errors(&self) -> Vec<f64> {
        let pos = self.positions();
        let targets = self.targets(&pos);
        pos.iter().zip(&targets).map(|(p, t)| p.dist(*t)).collect()
    }
}
