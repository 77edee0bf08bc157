use pimax_sim::{ArenaConfig, ChainState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check_invariants(chain: &ChainState, arena: &ArenaConfig) -> Result<(), String> {
    for i in 0..chain.len().saturating_sub(1) {
        let err = (chain.link_separation(i) - arena.link_length()).abs();
        if err > 1e-6 {
            return Err(format!("link {i} off by {err:e}"));
        }
    }
    for i in 0..chain.len() {
        let h = chain.hinge_angle(i);
        if h.abs() > arena.hinge_limit + 1e-9 {
            return Err(format!("hinge {i} at {h}"));
        }
        let b = &chain.bodies[i];
        if b.wheels.iter().any(|w| !(-1.0..=1.0).contains(w)) {
            return Err(format!("wheels {:?}", b.wheels));
        }
        let [x, y] = b.position;
        let eps = 1e-9;
        if x < b.radius - eps
            || x > arena.width - b.radius + eps
            || y < b.radius - eps
            || y > arena.height - b.radius + eps
        {
            return Err(format!("robot {i} outside the arena at {:?}", b.position));
        }
    }
    Ok(())
}

fn random_actions(rng: &mut impl Rng, robots: usize) -> Vec<[f64; 2]> {
    (0..robots)
        .map(|_| [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)])
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn constraints_hold_under_random_actions(robots in 1usize..6, seed in any::<u64>(), heading in -3.0f64..3.0) {
        let arena = ArenaConfig::default();
        let mut chain = ChainState::init_chain(robots, &arena, heading).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // hold each action for a while so chains actually travel and hit walls
        let mut actions = random_actions(&mut rng, robots);
        for t in 0..3_000 {
            if t % 25 == 0 {
                actions = random_actions(&mut rng, robots);
            }
            chain.step(&arena, &actions, 0.1).unwrap();
            if let Err(e) = check_invariants(&chain, &arena) {
                prop_assert!(false, "tick {}: {}", t, e);
            }
        }
    }
}

#[test]
fn wheels_stay_in_range_over_long_random_runs() {
    let arena = ArenaConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut chain = ChainState::init_chain(5, &arena, 0.3).unwrap();
    for _ in 0..100_000 {
        let actions = random_actions(&mut rng, 5);
        chain.step(&arena, &actions, 0.1).unwrap();
        assert!(chain
            .read_sensors()
            .iter()
            .flatten()
            .all(|w| (-1.0..=1.0).contains(w)));
    }
    check_invariants(&chain, &arena).unwrap();
}

#[test]
fn a_lone_robot_changes_wheel_speed_by_at_most_the_lag() {
    let arena = ArenaConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut chain = ChainState::init_chain(1, &arena, 0.0).unwrap();
    for _ in 0..10_000 {
        let before = chain.read_sensors()[0];
        let desired = [[-1.0, 1.0], [1.0, -1.0]][rng.gen_range(0..2)];
        chain.step(&arena, &[desired], 0.1).unwrap();
        let after = chain.read_sensors()[0];
        for k in 0..2 {
            assert!((after[k] - before[k]).abs() <= arena.wheel_lag + 1e-12);
        }
    }
}

#[test]
fn identical_action_sequences_give_identical_trajectories() {
    let arena = ArenaConfig::default();
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut chain = ChainState::init_chain(3, &arena, 0.0).unwrap();
        let mut trace = Vec::new();
        for _ in 0..20_000 {
            chain
                .step(&arena, &random_actions(&mut rng, 3), 0.1)
                .unwrap();
            trace.extend(chain.bodies.iter().flat_map(|b| {
                [
                    b.position[0],
                    b.position[1],
                    b.heading,
                    b.wheels[0],
                    b.wheels[1],
                ]
            }));
        }
        trace
    };
    let (a, b) = (run(), run());
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn the_majority_drags_a_dissenting_robot() {
    let arena = ArenaConfig::default();
    let run = |desired: Vec<[f64; 2]>| {
        let mut chain = ChainState::init_chain(3, &arena, 0.0).unwrap();
        let start = chain.center_position();
        for _ in 0..50 {
            chain.step(&arena, &desired, 0.1).unwrap();
        }
        (chain.center_position()[0] - start[0], chain.read_sensors())
    };
    let (together, _) = run(vec![[1.0, 1.0]; 3]);
    // the first tick runs at half speed
    assert!(
        (together - 49.5 * arena.v_max * 0.1).abs() < 1e-6,
        "{together}"
    );

    let (opposed, sensors) = run(vec![[1.0, 1.0], [-1.0, -1.0], [-1.0, -1.0]]);
    assert!(opposed < 0.0 && opposed.abs() < together, "{opposed}");
    // the dissenter's wheels read well below what it asks for
    assert!(sensors[0][0] < 0.9 && sensors[0][1] < 0.9, "{sensors:?}");
}
