//! Acceptance criteria, one line each. Runs without the test harness so
//! the report is always printed; exits non-zero when a criterion fails
//! that is not listed in `KNOWN_RED`.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ni_swarm::control::{ControllerPreset, PlantPreset};
use ni_swarm::experiments::{hover_disturbance, step_response, HoverSetup};
use ni_swarm::geom::Vec2;
use ni_swarm::lti::{DiscreteLTI, FreqGrid};
use ni_swarm::ni::{
    formation_stable, is_sni, laplacian_from_incidence, max_eigenvalue, ni_report, IncidenceMatrix,
};
use ni_swarm::roles::{assign_ids, requeue_ids};
use ni_swarm::sim::{init_random, preset, run, MemorySink, NullSink, Phase, World};

/// Criteria whose failure is understood: the two identified ground-robot
/// models do not pass the strict frequency sweep (positive imaginary part
/// at high frequency, and right-half-plane zeros in the yaw model).
const KNOWN_RED: &[u32] = &[2];

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn dc_gain(p: PlantPreset) -> f64 {
    p.tf().dc_gain().finite().expect("finite plant gain")
}

fn c1_dc_gain() -> Outcome {
    let o = Command::new(env!("CARGO_BIN_EXE_ni-swarm"))
        .args(["check", "--preset", "ugv-speed"])
        .output()
        .expect("binary runs");
    let v: serde_json::Value = match serde_json::from_slice(&o.stdout) {
        Ok(v) => v,
        Err(e) => return outcome(false, format!("unreadable report: {e}")),
    };
    let k = v["dc_gain"].as_f64().unwrap_or(f64::NAN);
    outcome(
        (k - 47.34).abs() <= 0.01,
        format!("dc_gain={k:.4} (want 47.34 +- 0.01)"),
    )
}

fn c2_classification() -> Outcome {
    let grid = FreqGrid::default();
    let mut parts = Vec::new();
    let mut pass = true;
    for p in [
        PlantPreset::UavX,
        PlantPreset::UavY,
        PlantPreset::UgvSpeed,
        PlantPreset::UgvYaw,
    ] {
        let r = is_sni(&p.tf(), &grid);
        pass &= r.is_sni;
        parts.push(format!(
            "{}={} (margin {:.3e} at {:.0} rad/s)",
            p.name(),
            r.is_sni,
            r.margin,
            r.worst_omega
        ));
    }
    let rep = ni_report(&PlantPreset::Repulsion.tf());
    let rep_ok = rep.origin_pole && rep.negated_is_ni && !rep.is_ni;
    pass &= rep_ok;
    parts.push(format!("repulsion origin-pole NI path={rep_ok}"));
    outcome(pass, parts.join("; "))
}

fn laplacian_oracle(n: usize, edges: &[(usize, usize)]) -> f64 {
    let mut l = DMatrix::<f64>::zeros(n, n);
    for &(a, b) in edges {
        l[(a, a)] += 1.0;
        l[(b, b)] += 1.0;
        l[(a, b)] -= 1.0;
        l[(b, a)] -= 1.0;
    }
    SymmetricEigen::new(l)
        .eigenvalues
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

fn c3_stability_bound() -> Outcome {
    let mut graphs = 0;
    for n in 1..=5usize {
        let all: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        for mask in 0u32..(1 << all.len()) {
            let edges: Vec<_> = all
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, e)| *e)
                .collect();
            let q = IncidenceMatrix::from_edges(n, &edges).expect("valid graph");
            let got = max_eigenvalue(&laplacian_from_incidence(&q)).expect("symmetric");
            let want = laplacian_oracle(n, &edges);
            if (got - want).abs() > 1e-9 * want.max(1.0) {
                return outcome(
                    false,
                    format!("n={n} edges={edges:?}: {got} vs oracle {want}"),
                );
            }
            graphs += 1;
        }
    }
    let m0 = ControllerPreset::SniSim.tf().dc_gain().finite().unwrap();
    let n0 = dc_gain(PlantPreset::UgvSpeed);
    let mut pass = true;
    let mut parts = vec![format!("{graphs} graphs match oracle")];
    for (name, edges) in [("star", [(0, 1), (0, 2)]), ("path", [(0, 1), (1, 2)])] {
        let q = IncidenceMatrix::from_edges(3, &edges).unwrap();
        let v = formation_stable(m0, n0, &q).unwrap();
        let flipped = formation_stable(-m0, n0, &q).unwrap();
        let ok = (v.lambda_max - 3.0).abs() < 1e-9 && v.stable && !flipped.stable;
        pass &= ok;
        parts.push(format!(
            "{name}: lambda={:.6} stable={} flipped={}",
            v.lambda_max, v.stable, flipped.stable
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c4_step() -> Outcome {
    let (px, py) = (PlantPreset::UavX.tf(), PlantPreset::UavY.tf());
    let sni = ControllerPreset::SniSim.tf();
    let run = |c, p| step_response(c, p, 0.5, 0.01, 300.0).map(|r| r.1);
    let (Ok(sx), Ok(sy), Ok(fx), Ok(fy)) = (
        run(&sni, &px),
        run(&sni, &py),
        run(&ControllerPreset::PidfX.tf(), &px),
        run(&ControllerPreset::PidfY.tf(), &py),
    ) else {
        return outcome(false, "step run failed");
    };
    let t = |m: &ni_swarm::experiments::StepMetrics| m.time_to_reference.unwrap_or(f64::INFINITY);
    let pass = t(&sx) * 5.0 <= t(&fx)
        && t(&sy) * 5.0 <= t(&fy)
        && (6.0..=26.0).contains(&sx.po)
        && (2.0..=22.0).contains(&sy.po);
    outcome(
        pass,
        format!(
            "t_ref sni {:.2}/{:.2} s vs pidf {:.2}/{:.2} s; PO x {:.1}% y {:.1}%",
            t(&sx),
            t(&sy),
            t(&fx),
            t(&fy),
            sx.po,
            sy.po
        ),
    )
}

fn gauntlet(seed: u64) -> Result<String, String> {
    let mut w = init_random(6, seed).map_err(|e| e.to_string())?;
    if !w.ids.is_bijection() {
        return Err(format!("seed {seed}: initial roles {:?}", w.ids.ids));
    }
    let tol = w.scenario.mission.slot_tolerance;
    let s = run(&mut w, &mut NullSink).map_err(|e| e.to_string())?;
    let m = &s.milestones;
    let checks = [
        ("formed", tol <= 0.10 && m.formed.is_some()),
        (
            "line within 1 m",
            m.queue_trigger_distance.is_some_and(|d| d <= 1.0),
        ),
        ("line formed", m.line_formed.is_some()),
        ("no obstacle entry", s.stats.obstacle_entry_ticks == 0),
        (
            "ids restored",
            m.ids_restored == Some(true) && m.reformed.is_some(),
        ),
        ("arrived", s.final_phase == Phase::Arrived),
    ];
    match checks.iter().find(|c| !c.1) {
        Some((name, _)) => Err(format!("seed {seed}: {name} failed")),
        None => Ok(format!("{:.0}", s.final_time)),
    }
}

fn c5_gauntlet() -> Outcome {
    let results: Vec<Result<String, String>> = std::thread::scope(|sc| {
        let hs: Vec<_> = (1..=10u64)
            .map(|seed| sc.spawn(move || gauntlet(seed)))
            .collect();
        hs.into_iter()
            .map(|h| h.join().expect("seed thread"))
            .collect()
    });
    let errs: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    if errs.is_empty() {
        let times: Vec<&str> = results
            .iter()
            .map(|r| r.as_ref().unwrap().as_str())
            .collect();
        outcome(
            true,
            format!("10 seeds arrived at t = [{}] s", times.join(", ")),
        )
    } else {
        outcome(false, format!("{errs:?}"))
    }
}

fn c6_crossings() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for name in ["crossing_a", "crossing_b", "crossing_c"] {
        let mut w = World::new(preset(name).unwrap()).unwrap();
        let s = run(&mut w, &mut NullSink).unwrap();
        let ratio = s.stats.min_pair_ratio_enabled.unwrap_or(0.0);
        let ok =
            ratio >= 0.5 && s.stats.repulsion_mismatches == 0 && s.stats.repulsion_active_ticks > 0;
        pass &= ok;
        parts.push(format!(
            "{name}: ratio {ratio:.3}, {} active ticks, {} mismatches",
            s.stats.repulsion_active_ticks, s.stats.repulsion_mismatches
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c7_hover() -> Outcome {
    let setup = HoverSetup::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (axis, p) in [("x", PlantPreset::UavX), ("y", PlantPreset::UavY)] {
        let rec = |c: ControllerPreset| {
            hover_disturbance(&c.tf(), &p.tf(), &setup)
                .ok()
                .and_then(|r| r.1.recovery_time)
                .unwrap_or(f64::INFINITY)
        };
        let (a, b) = (rec(ControllerPreset::SniExp), rec(ControllerPreset::PiExp));
        pass &= a <= 10.0 && b >= 4.0 * a;
        parts.push(format!("{axis}: sni {a:.1} s, pi {b:.1} s"));
    }
    outcome(pass, parts.join("; "))
}

fn oracle_ids(pos: &[Vec2], anchor: Vec2, leader_first: bool) -> Vec<usize> {
    let n = pos.len();
    let before =
        |d: &dyn Fn(usize) -> f64, i: usize, j: usize| d(j) < d(i) || (d(j) == d(i) && j < i);
    if !leader_first {
        let d = |k: usize| pos[k].dist(anchor);
        return (0..n)
            .map(|i| 1 + (0..n).filter(|&j| before(&d, i, j)).count())
            .collect();
    }
    let d0 = |k: usize| pos[k].dist(anchor);
    let leader = (0..n)
        .find(|&i| (0..n).all(|j| !before(&d0, i, j)))
        .unwrap();
    let dl = |k: usize| pos[k].dist(pos[leader]);
    (0..n)
        .map(|i| {
            if i == leader {
                1
            } else {
                2 + (0..n).filter(|&j| j != leader && before(&dl, i, j)).count()
            }
        })
        .collect()
}

fn c8_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 0..1000 {
        let n = rng.random_range(1..=10);
        // Coarse grid so ties occur and exercise the index rule.
        let mut p = || {
            Vec2::new(
                rng.random_range(-5..=5) as f64 * 0.5,
                rng.random_range(-5..=5) as f64 * 0.5,
            )
        };
        let pos: Vec<Vec2> = (0..n).map(|_| p()).collect();
        let dest = p();
        let a = assign_ids(&pos, dest).unwrap().ids;
        let q = requeue_ids(&pos, dest).unwrap().ids;
        if a != oracle_ids(&pos, dest, true) || q != oracle_ids(&pos, dest, false) {
            return outcome(false, format!("instance {k}: {pos:?} -> {a:?} / {q:?}"));
        }
    }
    let mut worst: f64 = 0.0;
    for p in [
        PlantPreset::UavX,
        PlantPreset::UavY,
        PlantPreset::UgvSpeed,
        PlantPreset::UgvYaw,
    ] {
        let mut d = DiscreteLTI::new(&p.tf(), 0.01).unwrap();
        let mut y = 0.0;
        for _ in 0..400_000 {
            y = d.step(1.0).unwrap();
        }
        let k = dc_gain(p);
        worst = worst.max(((y - k) / k).abs());
    }
    let hash = |name: &str| {
        let mut s = preset(name).unwrap();
        s.duration = 120.0;
        let mut mem = MemorySink::default();
        let sum = run(&mut World::new(s).unwrap(), &mut mem).unwrap();
        let bits: Vec<u64> = mem
            .records
            .iter()
            .flat_map(|r| r.rows.iter().flat_map(|row| row.floats()))
            .map(f64::to_bits)
            .collect();
        (sum.trace_sha256, bits)
    };
    let same = ["case1_6ugv", "crossing_b"]
        .iter()
        .all(|n| hash(n) == hash(n));
    outcome(
        worst <= 1e-3 && same,
        format!(
            "1000 role and queue instances match; worst DC error {:.2e}; deterministic={same}",
            worst
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (1, "dc gain", Duration::from_secs(1), c1_dc_gain),
        (
            2,
            "sni classification",
            Duration::from_secs(1),
            c2_classification,
        ),
        (
            3,
            "formation stability bound",
            Duration::from_secs(1),
            c3_stability_bound,
        ),
        (4, "step response", Duration::from_secs(10), c4_step),
        (
            5,
            "six-robot gauntlet",
            Duration::from_secs(60),
            c5_gauntlet,
        ),
        (
            6,
            "inter-robot safety",
            Duration::from_secs(20),
            c6_crossings,
        ),
        (7, "hover disturbance", Duration::from_secs(10), c7_hover),
        (
            8,
            "oracles and determinism",
            Duration::from_secs(30),
            c8_oracles,
        ),
    ];
    let mut unexpected = 0;
    for (n, name, budget, f) in criteria {
        let t0 = Instant::now();
        let o = f();
        let dt = t0.elapsed();
        let pass = o.pass && dt <= budget;
        let tag = match (pass, KNOWN_RED.contains(&n)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!(
            "criterion {n} [{name}]: {tag} in {:.2} s (budget {} s): {}",
            dt.as_secs_f64(),
            budget.as_secs(),
            o.detail
        );
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
