use proptest::prelude::*;
use wallsim_core::dynamics::*;
use wallsim_core::lattice::*;
use wallsim_core::Result;

fn shifted_state(t_half: u64, levels: &[&[u32]]) -> InterlacingState {
    let cfg = SimpleConfiguration { t_half, levels: levels.iter().map(|l| l.to_vec()).collect() };
    from_simple(&cfg).unwrap()
}

fn worked_step_table() -> DrawTable {
    DrawTable::from_json(include_str!("fixtures/worked_step_draws.json")).unwrap()
}

#[test]
fn worked_step_golden() {
    let mut draws = worked_step_table();
    let x = shifted_state(0, &[&[1], &[3], &[4, 2], &[4, 3]]);
    let h = left_half_step(&x, &mut draws).unwrap();
    assert_eq!(to_simple(&h).levels, vec![vec![1], vec![1], vec![4, 1], vec![4, 2]]);
    for rule in [WallRule { odd_wall_uses_half_time: true }, WallRule { odd_wall_uses_half_time: false }] {
        let y = right_half_step(&x, &h, &mut draws, rule).unwrap();
        assert_eq!(to_simple(&y).levels, vec![vec![3], vec![4], vec![5, 0], vec![6, 3]]);
        assert_eq!(y.t_half, 2);
    }
}

#[test]
fn right_step_needs_matching_times() {
    let mut draws = worked_step_table();
    let x = shifted_state(0, &[&[1], &[3], &[4, 2], &[4, 3]]);
    assert!(right_half_step(&x, &x, &mut draws, WallRule::default()).is_err());
    let odd = InterlacingState { t_half: 1, ..x.clone() };
    assert!(left_half_step(&odd, &mut draws).is_err());
}

#[test]
fn same_seed_same_trajectory() {
    let cfg = RunConfig { q: 0.5, levels: 4, steps: 10, replicas: 3, seed: 42, odd_wall_uses_half_time: true };
    for rep in 0..3 {
        let a: Vec<_> = run_trajectory(&cfg, rep, Record::Half).unwrap().collect();
        let b: Vec<_> = run_trajectory(&cfg, rep, Record::Half).unwrap().collect();
        assert_eq!(a, b);
        assert_eq!(a.len(), 21);
        let ints: Vec<_> = run_trajectory(&cfg, rep, Record::Integer).unwrap().collect();
        assert_eq!(ints.len(), 11);
        assert_eq!(ints[10], a[20]);
    }
}

#[test]
fn invalid_config_lists_every_violation() {
    let cfg = RunConfig { q: 1.5, levels: 0, steps: 1, replicas: 0, seed: 0, odd_wall_uses_half_time: true };
    let errs = cfg.validate().unwrap_err();
    assert_eq!(errs.len(), 3);
    assert!(errs[0].contains("(0,1)"));
}

#[test]
fn config_rejects_unknown_keys() {
    let ok: RunConfig = serde_json::from_str(r#"{"q":0.5,"K":4,"steps":10,"replicas":100,"seed":42}"#).unwrap();
    assert!(ok.validate().is_ok());
    assert!(serde_json::from_str::<RunConfig>(r#"{"q":0.5,"K":4,"steps":10,"replicas":100,"seed":42,"x":1}"#).is_err());
}

/// Replays a fixed list of draws, cycling when exhausted.
struct Cycle(Vec<u32>, usize);

impl DrawSource for Cycle {
    fn draw(&mut self, _: usize, _: usize, _: HalfTag) -> Result<u32> {
        let v = self.0[self.1 % self.0.len()];
        self.1 += 1;
        Ok(v)
    }
}

proptest! {
    #[test]
    fn steps_preserve_interlacing(levels in 1usize..7, draws in prop::collection::vec(0u32..6, 1..60), steps in 1usize..6) {
        let mut src = Cycle(draws, 0);
        let mut x = InterlacingState::densely_packed(levels);
        for _ in 0..steps {
            let h = left_half_step(&x, &mut src).unwrap();
            prop_assert!(h.is_valid());
            x = right_half_step(&x, &h, &mut src, WallRule::default()).unwrap();
            prop_assert!(x.is_valid());
        }
    }

    #[test]
    fn zero_draws_are_a_fixed_point_of_the_packed_state(levels in 1usize..8) {
        let mut src = Cycle(vec![0], 0);
        let x = InterlacingState::densely_packed(levels);
        let h = left_half_step(&x, &mut src).unwrap();
        let y = right_half_step(&x, &h, &mut src, WallRule::default()).unwrap();
        prop_assert_eq!(y.levels, x.levels);
    }

    #[test]
    fn geometric_inverse_transform_is_monotone(u in 1e-300f64..=1.0, v in 1e-300f64..=1.0) {
        let lq = 0.3f64.ln();
        let (a, b) = (geometric_from_uniform(u, lq), geometric_from_uniform(v, lq));
        if u <= v {
            prop_assert!(a >= b);
        } else {
            prop_assert!(a <= b);
        }
    }
}
