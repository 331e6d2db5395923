//! Distributed leader-follower law: per-robot velocity setpoints from
//! reference and relative-offset errors, the time-varying transition
//! variant, and the interconnection stability report.

use serde::Serialize;

use crate::control::{blend_priorities, tv_gain, TaskWeights};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::lti::{DcGain, FreqGrid, RationalTF};
use crate::ni::{block_sni, formation_stable, ni_report, FormationVerdict, NiReport};
use crate::roles::{IdAssignment, Topology};

/// Ticks a robot keeps its last command after losing sight of its peer.
pub const FAILSAFE_HOLD_TICKS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationGains {
    /// Leader reference gain.
    pub kr: f64,
    /// Follower offset gain.
    pub kc: f64,
    /// Command saturation for followers (m/s).
    pub vmax: f64,
    /// Command saturation for the leader (m/s); keeps headroom for followers.
    pub leader_vmax: f64,
}

impl FormationGains {
    pub fn validate(&self) -> Result<()> {
        if !(self.kr.is_finite() && self.kc.is_finite()) {
            return Err(Error::Config("formation gains must be finite".into()));
        }
        if !(self.vmax > 0.0 && self.leader_vmax > 0.0 && self.leader_vmax <= self.vmax) {
            return Err(Error::Config("need 0 < leader_vmax <= vmax".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandMode {
    Formation,
    Queue,
}

/// Junction errors before the gains. Leader: `-reference + position`;
/// follower: `-desired offset + (self - peer)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormationErrors {
    pub leader_index: usize,
    pub leader: Vec2,
    /// `(robot index, error)`; `None` when the peer measurement was lost.
    pub followers: Vec<(usize, Option<Vec2>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormationCommand {
    pub vel_sp: Vec<Vec2>,
    pub mode: CommandMode,
    pub gains_used: Vec<f64>,
    pub errors: FormationErrors,
    pub lost: Vec<bool>,
}

/// Read-only view of the swarm for one control update. Every slice is
/// indexed by robot.
#[derive(Debug, Clone, Copy)]
pub struct FormationInput<'a> {
    pub ids: &'a IdAssignment,
    /// Own positions (each robot localises itself).
    pub positions: &'a [Vec2],
    pub leader_reference: Vec2,
    /// Measured `peer - self`, `None` when sensing failed. Unused for the leader.
    pub measured: &'a [Option<Vec2>],
    /// Desired `self - peer`. Unused for the leader.
    pub offsets: &'a [Vec2],
    /// Accumulated repulsion velocity; zero means no active repulsion.
    pub repulse: &'a [Vec2],
}

impl FormationInput<'_> {
    fn check(&self) -> Result<()> {
        let n = self.ids.len();
        if n == 0 {
            return Err(Error::Empty("swarm"));
        }
        if !self.ids.is_bijection() {
            return Err(Error::InvalidArgument(
                "role numbers are not a bijection".into(),
            ));
        }
        for (name, len) in [
            ("positions", self.positions.len()),
            ("measured", self.measured.len()),
            ("offsets", self.offsets.len()),
            ("repulse", self.repulse.len()),
        ] {
            if len != n {
                return Err(Error::InvalidArgument(format!(
                    "{name} has {len} entries for {n} robots"
                )));
            }
        }
        Ok(())
    }

    fn errors(&self) -> FormationErrors {
        let leader = self.ids.leader();
        let followers = (0..self.ids.len())
            .filter(|&i| i != leader)
            .map(|i| (i, self.measured[i].map(|rel| -self.offsets[i] - rel)))
            .collect();
        FormationErrors {
            leader_index: leader,
            leader: -self.leader_reference + self.positions[leader],
            followers,
        }
    }
}

/// Holds the last good command for a few ticks after sensing is lost,
/// then commands a stop.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingFailSafe {
    last: Vec<Vec2>,
    lost_ticks: Vec<u32>,
}

impl SensingFailSafe {
    pub fn new(n: usize) -> Self {
        Self {
            last: vec![Vec2::ZERO; n],
            lost_ticks: vec![0; n],
        }
    }

    pub fn lost_ticks(&self, i: usize) -> u32 {
        self.lost_ticks[i]
    }

    pub fn apply(&mut self, i: usize, cmd: Option<Vec2>) -> Vec2 {
        match cmd {
            Some(c) => {
                self.last[i] = c;
                self.lost_ticks[i] = 0;
                c
            }
            None => {
                self.lost_ticks[i] = self.lost_ticks[i].saturating_add(1);
                if self.lost_ticks[i] <= FAILSAFE_HOLD_TICKS {
                    self.last[i]
                } else {
                    Vec2::ZERO
                }
            }
        }
    }
}

fn command(e: Vec2, repulse: Vec2, k: f64, w: &TaskWeights, vmax: f64) -> Vec2 {
    // Error saturated so the formation term alone never exceeds vmax; a far
    // slot then cannot crowd the avoidance term out of the blend.
    let e = if k != 0.0 {
        e.clamp_norm(vmax / k.abs())
    } else {
        e
    };
    let raw = if repulse == Vec2::ZERO {
        e * k
    } else {
        blend_priorities(e, -repulse, w, k)
    };
    raw.clamp_norm(vmax)
}

fn assemble(
    input: &FormationInput,
    gains: &FormationGains,
    weights: &TaskWeights,
    failsafe: &mut SensingFailSafe,
    mode: CommandMode,
    gain_of: impl Fn(usize, Vec2) -> f64,
) -> Result<FormationCommand> {
    input.check()?;
    let n = input.ids.len();
    let errors = input.errors();
    let mut vel_sp = vec![Vec2::ZERO; n];
    let mut gains_used = vec![0.0; n];
    let mut lost = vec![false; n];

    let l = errors.leader_index;
    gains_used[l] = gain_of(l, errors.leader);
    vel_sp[l] = failsafe.apply(
        l,
        Some(command(
            errors.leader,
            input.repulse[l],
            gains_used[l],
            weights,
            gains.leader_vmax,
        )),
    );
    for &(i, e) in &errors.followers {
        let cmd = e.map(|e| {
            gains_used[i] = gain_of(i, e);
            command(e, input.repulse[i], gains_used[i], weights, gains.vmax)
        });
        lost[i] = cmd.is_none();
        vel_sp[i] = failsafe.apply(i, cmd).clamp_norm(gains.vmax);
    }
    Ok(FormationCommand {
        vel_sp,
        mode,
        gains_used,
        errors,
        lost,
    })
}

/// Static-gain update: `kr` on the leader's reference error, `kc` on each
/// follower's offset error, repulsion blended in where active, then
/// saturation.
pub fn formation_step(
    input: &FormationInput,
    gains: &FormationGains,
    weights: &TaskWeights,
    failsafe: &mut SensingFailSafe,
) -> Result<FormationCommand> {
    gains.validate()?;
    let leader = input.ids.leader();
    assemble(
        input,
        gains,
        weights,
        failsafe,
        CommandMode::Formation,
        |i, _| {
            if i == leader {
                gains.kr
            } else {
                gains.kc
            }
        },
    )
}

/// Same as [`formation_step`] but every robot uses the time-varying gain
/// `-|e0| / (t_des |e|)`, so each covers its initial distance `dis_no[i]`
/// in roughly `t_des` seconds.
pub fn transition_step(
    input: &FormationInput,
    gains: &FormationGains,
    weights: &TaskWeights,
    dis_no: &[f64],
    t_des: f64,
    failsafe: &mut SensingFailSafe,
) -> Result<FormationCommand> {
    gains.validate()?;
    if !(t_des > 0.0 && t_des.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "t_des must be positive, got {t_des}"
        )));
    }
    if dis_no.len() != input.ids.len() {
        return Err(Error::InvalidArgument(
            "one initial distance per robot required".into(),
        ));
    }
    assemble(
        input,
        gains,
        weights,
        failsafe,
        CommandMode::Queue,
        |i, e| tv_gain(-dis_no[i].abs(), t_des, e.norm()),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolReport {
    /// Every plant passes the SNI sweep.
    pub plants_sni: bool,
    /// Every controller is SNI after negation (plus-junction convention).
    pub controllers_sni: bool,
    pub repulsion: NiReport,
    /// The repulsion plant is NI under the same sign convention.
    pub repulsion_ni: bool,
    /// Largest plant and controller DC gains, when all are finite.
    pub m0: Option<f64>,
    pub n0: Option<f64>,
    pub formation: Option<FormationVerdict>,
    pub notes: Vec<String>,
}

impl ProtocolReport {
    pub fn all_pass(&self) -> bool {
        self.plants_sni
            && self.controllers_sni
            && self.repulsion_ni
            && self.formation.is_some_and(|f| f.stable)
    }
}

fn max_dc(tfs: &[RationalTF]) -> Option<f64> {
    tfs.iter()
        .map(|t| match t.dc_gain() {
            DcGain::Finite(k) => Some(k),
            DcGain::Infinite => None,
        })
        .try_fold(f64::NEG_INFINITY, |acc, k| k.map(|k| acc.max(k)))
}

/// Runs each stability condition separately. The DC-gain bound uses the
/// largest eigenvalue of the diagonal `M(0)` and `N(0)`, i.e. the largest
/// signed DC gain over members.
pub fn check_protocol_stability(
    topology: &Topology,
    controllers: &[RationalTF],
    plants: &[RationalTF],
    repulsion: &RationalTF,
    grid: &FreqGrid,
) -> Result<ProtocolReport> {
    if controllers.is_empty() || plants.is_empty() {
        return Err(Error::Empty("controllers or plants"));
    }
    let mut notes = Vec::new();
    let plants_sni = block_sni(plants, grid)?;
    let negated: Vec<RationalTF> = controllers.iter().map(RationalTF::negated).collect();
    let controllers_sni = block_sni(&negated, grid)?;
    let rep = ni_report(repulsion);
    let repulsion_ni = rep.negated_is_ni;

    let m0 = max_dc(plants);
    let n0 = max_dc(controllers);
    let formation = match (m0, n0) {
        (Some(m), Some(n)) => Some(formation_stable(m, n, &topology.incidence)?),
        _ => {
            notes.push("a member has an infinite DC gain; DC-gain bound not applicable".into());
            None
        }
    };

    Ok(ProtocolReport {
        plants_sni,
        controllers_sni,
        repulsion: rep,
        repulsion_ni,
        m0,
        n0,
        formation,
        notes,
    })
}
