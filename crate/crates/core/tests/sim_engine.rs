use ni_swarm::geom::Vec2;
use ni_swarm::sim::config::{exp_3ugv, InitConfig, Pose, RepulsionGating};
use ni_swarm::sim::trace::read_trace;
use ni_swarm::sim::{
    init_random, preset, run, CsvSink, MemorySink, NullSink, Phase, Scenario, World,
};

fn two_robots(a: Pose, b: Pose, offset: Vec2) -> Scenario {
    let mut s = exp_3ugv();
    s.robots.count = 2;
    s.robots.radius = 0.46;
    s.robots.init = InitConfig::Explicit { poses: vec![a, b] };
    s.formation.spec.offsets = vec![Vec2::ZERO, offset];
    s.mission.destination = Vec2::new(a.x, a.y);
    s.uav = None;
    s
}

fn pose(x: f64, y: f64, yaw: f64) -> Pose {
    Pose { x, y, yaw }
}

#[test]
fn init_random_stays_in_box_and_is_seeded() {
    let w = init_random(6, 3).unwrap();
    for p in w.positions() {
        assert!(p.x.abs() <= 1.6 && p.y.abs() <= 1.6, "{p:?}");
    }
    let again = init_random(6, 3).unwrap();
    assert_eq!(w.positions(), again.positions());
    assert_ne!(w.positions(), init_random(6, 4).unwrap().positions());
    assert!(init_random(0, 3).is_err());
}

#[test]
fn initial_roles_are_a_bijection() {
    for seed in 0..20 {
        let w = init_random(6, seed).unwrap();
        let mut ids = w.ids.ids.clone();
        ids.sort_unstable();
        assert_eq!(ids, (1..=6).collect::<Vec<_>>());
    }
}

#[test]
fn zero_gains_leave_the_world_static() {
    let mut s = two_robots(
        pose(0.0, 0.0, 0.3),
        pose(3.0, 1.0, -1.0),
        Vec2::new(-2.0, 0.0),
    );
    s.control.gains.kr = 0.0;
    s.control.gains.kc = 0.0;
    let mut w = World::new(s).unwrap();
    let before = w.positions();
    for _ in 0..500 {
        w.tick();
    }
    assert_eq!(w.positions(), before);
    assert_eq!(w.clock, 500);
}

#[test]
fn lone_robot_at_destination_stays_idle() {
    let mut s = exp_3ugv();
    s.robots.count = 1;
    s.robots.init = InitConfig::Explicit {
        poses: vec![pose(-1.0, 1.7, 0.0)],
    };
    s.formation.spec.offsets = vec![Vec2::ZERO];
    s.uav = None;
    let mut w = World::new(s).unwrap();
    for _ in 0..1000 {
        let rec = w.tick();
        assert_eq!((rec.rows[0].cmd_x, rec.rows[0].cmd_y), (0.0, 0.0));
    }
    assert_eq!(w.positions()[0], Vec2::new(-1.0, 1.7));
}

#[test]
fn overlapping_pair_separates_next_tick() {
    // The second robot faces away from the first, which is avoiding an obstacle.
    let mut s = two_robots(
        pose(0.0, 0.0, 0.0),
        pose(0.5, 0.0, 0.0),
        Vec2::new(0.5, 0.0),
    );
    s.control.repulsion = RepulsionGating::Always;
    let mut w = World::new(s).unwrap();
    w.queue.que[0] = true;
    let d0 = w.positions()[0].dist(w.positions()[1]);
    let rec = w.tick();
    let d1 = w.positions()[0].dist(w.positions()[1]);
    assert!(d1 > d0, "{d0} -> {d1}");
    assert!(rec.rows[1].force_x > 0.0);
    assert_eq!((rec.rows[0].force_x, rec.rows[0].force_y), (0.0, 0.0));
}

#[test]
fn experiment_row_settles_without_obstacles() {
    let mut w = World::new(preset("exp_3ugv").unwrap()).unwrap();
    let sum = run(&mut w, &mut NullSink).unwrap();
    assert_eq!(sum.final_phase, Phase::Arrived);
    for e in &sum.final_slot_errors {
        assert!(*e < 0.1, "{:?}", sum.final_slot_errors);
    }
    assert!(sum.stats.min_pair_distance.is_finite());
}

#[test]
fn same_seed_same_trace_bits() {
    let run_once = |seed| {
        let mut s = preset("crossing_a").unwrap();
        s.seed = seed;
        s.duration = 60.0;
        let mut w = World::new(s).unwrap();
        run(&mut w, &mut NullSink).unwrap().trace_sha256
    };
    assert_eq!(run_once(7), run_once(7));
}

#[test]
fn csv_trace_reads_back() {
    let mut s = preset("exp_3ugv").unwrap();
    s.duration = 5.0;
    let mut w = World::new(s).unwrap();
    let mut sink = CsvSink::new(Vec::new(), 10).unwrap();
    run(&mut w, &mut sink).unwrap();
    let rows = read_trace(&sink.into_inner().unwrap()[..]).unwrap();
    // Ticks 0, 10, ..., 500, three robots and the UAV each.
    assert_eq!(rows.len(), 51 * 4);

    let mut w = World::new({
        let mut s = preset("exp_3ugv").unwrap();
        s.duration = 5.0;
        s
    })
    .unwrap();
    let mut mem = MemorySink::default();
    run(&mut w, &mut mem).unwrap();
    let r = &mem.records[10].rows[2];
    assert_eq!(rows[4 + 2].x.to_bits(), r.x.to_bits());
}

#[test]
fn dumped_config_reruns_identically() {
    let s = {
        let mut s = preset("crossing_b").unwrap();
        s.duration = 30.0;
        s
    };
    let back = Scenario::from_json(&s.to_json()).unwrap();
    let h = |s: Scenario| {
        run(&mut World::new(s).unwrap(), &mut NullSink)
            .unwrap()
            .trace_sha256
    };
    assert_eq!(h(s), h(back));
}

#[test]
fn gauntlet_queue_lifecycle() {
    let mut w = World::new(preset("case1_6ugv").unwrap()).unwrap();
    let sum = run(&mut w, &mut NullSink).unwrap();
    assert_eq!(sum.final_phase, Phase::Arrived);
    assert_eq!(sum.stats.activations, vec![1; 6]);
    assert_eq!(sum.stats.deactivations, vec![1; 6]);
    assert_eq!(sum.milestones.ids_restored, Some(true));
    assert_eq!(sum.stats.obstacle_entry_ticks, 0);
    assert_eq!(sum.stats.nonfinite_records, 0);
    assert!(sum.violations.is_empty(), "{:?}", sum.violations);
}
