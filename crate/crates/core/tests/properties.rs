use proptest::prelude::*;

use ni_swarm::avoidance::{repulsion_force, RepulsionAccumulator};
use ni_swarm::control::{blend_priorities, tv_gain, TaskWeights, TV_K_MAX};
use ni_swarm::formation::{formation_step, FormationGains, FormationInput, SensingFailSafe};
use ni_swarm::geom::Vec2;
use ni_swarm::roles::{assign_ids, IdAssignment};

fn pt() -> impl Strategy<Value = Vec2> {
    (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(x, y)| Vec2::new(x, y))
}

fn swarm(max: usize) -> impl Strategy<Value = Vec<Vec2>> {
    prop::collection::vec(pt(), 1..=max)
}

fn gains() -> impl Strategy<Value = FormationGains> {
    (-3.0..0.0f64, -3.0..0.0f64, 0.05..2.0f64, 0.1..=1.0f64).prop_map(|(kr, kc, vmax, frac)| {
        FormationGains {
            kr,
            kc,
            vmax,
            leader_vmax: vmax * frac,
        }
    })
}

fn step(
    ids: &IdAssignment,
    pos: &[Vec2],
    reference: Vec2,
    offsets: &[Vec2],
    repulse: &[Vec2],
    g: &FormationGains,
) -> Vec<Vec2> {
    let measured: Vec<Option<Vec2>> = (0..pos.len())
        .map(|i| {
            let id = ids.ids[i];
            (id > 1).then(|| pos[ids.robot_with(id - 1).unwrap()] - pos[i])
        })
        .collect();
    let input = FormationInput {
        ids,
        positions: pos,
        leader_reference: reference,
        measured: &measured,
        offsets,
        repulse,
    };
    let mut fs = SensingFailSafe::new(pos.len());
    formation_step(&input, g, &TaskWeights::default(), &mut fs)
        .unwrap()
        .vel_sp
}

proptest! {
    #[test]
    fn roles_form_a_bijection(pos in swarm(12), dest in pt()) {
        let a = assign_ids(&pos, dest).unwrap();
        prop_assert!(a.is_bijection());
        let l = a.leader();
        for p in &pos {
            prop_assert!(pos[l].dist(dest) <= p.dist(dest));
        }
        // Followers are numbered outward from the leader.
        let order = a.by_role();
        for w in order[1..].windows(2) {
            prop_assert!(pos[w[0]].dist(pos[l]) <= pos[w[1]].dist(pos[l]));
        }
    }

    #[test]
    fn roles_follow_the_robots_not_the_indices(pos in swarm(8), dest in pt(), rot in 0usize..8) {
        let rot = rot % pos.len();
        let mut shifted = pos.clone();
        shifted.rotate_left(rot);
        let a = assign_ids(&pos, dest).unwrap();
        let b = assign_ids(&shifted, dest).unwrap();
        let mut expect = a.ids.clone();
        expect.rotate_left(rot);
        // Exact ties fall back to index order, so only distinct distances compare.
        let mut d: Vec<f64> = pos.iter().map(|p| p.dist(dest)).collect();
        d.sort_by(f64::total_cmp);
        let distinct = d.windows(2).all(|w| w[1] - w[0] > 1e-9);
        let l = a.leader();
        let mut f: Vec<f64> = pos.iter().map(|p| p.dist(pos[l])).collect();
        f.sort_by(f64::total_cmp);
        prop_assume!(distinct && f.windows(2).all(|w| w[1] - w[0] > 1e-9));
        prop_assert_eq!(b.ids, expect);
    }

    #[test]
    fn commands_respect_their_caps(pos in swarm(10), reference in pt(), g in gains(), rep in pt()) {
        let ids = assign_ids(&pos, reference).unwrap();
        let offsets: Vec<Vec2> = pos.iter().map(|p| *p * 0.1).collect();
        let repulse: Vec<Vec2> = (0..pos.len()).map(|i| if i % 2 == 0 { rep } else { Vec2::ZERO }).collect();
        let v = step(&ids, &pos, reference, &offsets, &repulse, &g);
        for (i, c) in v.iter().enumerate() {
            let cap = if i == ids.leader() { g.leader_vmax } else { g.vmax };
            prop_assert!(c.norm() <= cap * (1.0 + 1e-12), "{} > {}", c.norm(), cap);
        }
    }

    #[test]
    fn zero_offsets_pull_followers_onto_their_peer(pos in swarm(10), reference in pt(), g in gains()) {
        let ids = assign_ids(&pos, reference).unwrap();
        let zeros = vec![Vec2::ZERO; pos.len()];
        let v = step(&ids, &pos, reference, &zeros, &zeros, &g);
        for i in 0..pos.len() {
            let id = ids.ids[i];
            if id == 1 {
                continue;
            }
            let to_peer = pos[ids.robot_with(id - 1).unwrap()] - pos[i];
            prop_assert!(v[i].dot(to_peer) >= 0.0);
            prop_assert!(v[i].cross(to_peer).abs() <= 1e-9 * (1.0 + to_peer.norm()));
        }
    }

    #[test]
    fn lone_robot_follows_the_reference_law(p in pt(), reference in pt(), g in gains()) {
        let ids = assign_ids(&[p], reference).unwrap();
        let v = step(&ids, &[p], reference, &[Vec2::ZERO], &[Vec2::ZERO], &g);
        let e = p - reference;
        let raw = e * g.kr;
        let expect = if raw.norm() > g.leader_vmax { raw * (g.leader_vmax / raw.norm()) } else { raw };
        prop_assert!((v[0] - expect).norm() <= 1e-9 * (1.0 + expect.norm()));
    }

    #[test]
    fn blend_is_linear(f in pt(), r in pt(), f2 in pt(), a in 0.0..=1.0f64, b in 0.0..=1.0f64, k in -5.0..5.0f64) {
        let w = TaskWeights::new(a, 1.0 - a, b, 1.0 - b).unwrap();
        let lhs = blend_priorities(f + f2, r, &w, k);
        let rhs = blend_priorities(f, r, &w, k) + blend_priorities(f2, Vec2::ZERO, &w, k);
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + lhs.norm()));
        let whole = blend_priorities(f, f, &w, k);
        prop_assert!((whole - f * k).norm() <= 1e-9 * (1.0 + whole.norm()));
    }

    #[test]
    fn tv_gain_is_bounded(d in -100.0..100.0f64, t in 0.01..100.0f64, e in -100.0..100.0f64) {
        let k = tv_gain(d, t, e);
        prop_assert!(k.is_finite() && k.abs() <= TV_K_MAX);
        if d < 0.0 && e > 0.0 {
            prop_assert!(k <= 0.0);
        }
    }

    #[test]
    fn repulsion_pushes_apart_and_saturates(
        c1 in pt(), c2 in pt(), r in 0.05..5.0f64, kr in -500.0..500.0f64, fmax in 0.1..50.0f64,
    ) {
        let (ov, f) = repulsion_force(c1, r, c2, r, kr, fmax);
        prop_assert!(ov >= 0.0);
        prop_assert!(f.norm() <= fmax * (1.0 + 1e-12));
        if ov == 0.0 {
            prop_assert_eq!(f, Vec2::ZERO);
        } else if c1 != c2 {
            prop_assert!(f.dot(c1 - c2) >= 0.0);
        }
    }

    #[test]
    fn accumulator_only_decays_without_force(v in pt(), tau in 0.0..10.0f64, dt in 0.001..0.1f64, n in 1usize..200) {
        let mut acc = RepulsionAccumulator::new(tau);
        acc.vel = v;
        let mut last = v.norm();
        for _ in 0..n {
            acc.update(Vec2::ZERO, 1.0, dt);
            prop_assert!(acc.vel.norm() <= last);
            last = acc.vel.norm();
        }
    }
}

mod lti {
    use ni_swarm::control::sni_first_order;
    use ni_swarm::lti::{parse_tf, DiscreteLTI, FreqGrid, RationalTF};
    use ni_swarm::ni::is_sni;
    use proptest::prelude::*;

    fn coeffs(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-20.0..20.0f64, 1..=len)
    }

    proptest! {
        #[test]
        fn display_parses_back(num in coeffs(4), den in coeffs(4)) {
            let Ok(tf) = RationalTF::new(&num, &den) else { return Ok(()) };
            let back = parse_tf(&tf.to_string()).unwrap();
            for (a, b) in [(tf.num(), back.num()), (tf.den(), back.den())] {
                prop_assert_eq!(a.len(), b.len());
                for (x, y) in a.iter().zip(b) {
                    prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "{} vs {}", tf, back);
                }
            }
        }

        #[test]
        fn first_order_lag_sign_decides_sni(delta in 0.01..50.0f64, a in 0.01..10.0f64, w in 0.1..10.0f64) {
            let grid = FreqGrid::log_space(1e-3, 1e3, 200).unwrap();
            let (_, pos) = sni_first_order(delta, a, w).unwrap();
            let (_, neg) = sni_first_order(-delta, a, w).unwrap();
            let rp = is_sni(&pos, &grid);
            let rn = is_sni(&neg, &grid);
            prop_assert!(rp.is_sni && !rp.negated_is_sni);
            prop_assert!(!rn.is_sni && rn.negated_is_sni);
        }

        #[test]
        fn discrete_lag_keeps_dc_gain(k in -10.0..10.0f64, p in 0.1..20.0f64, dt in 0.001..0.05f64) {
            let tf = RationalTF::new(&[k * p], &[1.0, p]).unwrap();
            let mut d = DiscreteLTI::new(&tf, dt).unwrap();
            let g = d.dc_gain().unwrap();
            prop_assert!((g - k).abs() <= 1e-9 * (1.0 + k.abs()));
            let y = d.settle_to(1.0).unwrap();
            prop_assert!((y - k).abs() <= 1e-6 * (1.0 + k.abs()));
        }
    }
}
