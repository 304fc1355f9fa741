use proptest::prelude::*;
use wallsim_core::lattice::*;

#[test]
fn enumeration_counts() {
    assert_eq!(enumerate_states(3, 1).iter().map(|s| s.0.clone()).collect::<Vec<_>>(), vec![vec![0, 0], vec![1, 0], vec![1, 1]]);
    // pairs (z ≺ y) with one part each on level 2
    assert_eq!(enumerate_pair_states(2, 2).len(), 6);
    // odd level 3: z has one part, y two
    for p in enumerate_pair_states(3, 3) {
        assert_eq!(p.z.len(), 1);
        assert!(p.y.0[1] <= p.z.0[0] && p.z.0[0] <= p.y.0[0]);
    }
}

#[test]
fn state_json_round_trip() {
    let s = InterlacingState::new(3, vec![Signature(vec![1]), Signature(vec![3]), Signature(vec![3, 1])]).unwrap();
    let back: InterlacingState = serde_json::from_str(&s.to_json_line()).unwrap();
    assert_eq!(back, s);
    assert!(InterlacingState::new(0, vec![Signature(vec![4]), Signature(vec![3])]).is_err());
}

fn signature(len: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..12, len).prop_map(|mut v| {
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    })
}

/// A random interlacing state built top-down.
fn state(levels: usize) -> impl Strategy<Value = InterlacingState> {
    (signature(parts_on_level(levels)), prop::collection::vec(any::<u32>(), 64)).prop_map(move |(top, noise)| {
        let mut lv = vec![top];
        let mut n = noise.into_iter().cycle();
        for k in (1..levels).rev() {
            let up = lv.last().unwrap().clone();
            let below: Vec<u32> = (0..parts_on_level(k))
                .map(|i| {
                    let lo = up.get(i + 1).copied().unwrap_or(0);
                    lo + n.next().unwrap() % (up[i] - lo + 1)
                })
                .collect();
            lv.push(below);
        }
        lv.reverse();
        InterlacingState::new(0, lv.into_iter().map(Signature).collect()).unwrap()
    })
}

proptest! {
    #[test]
    fn simple_round_trip(s in (1usize..7).prop_flat_map(state)) {
        let simple = to_simple(&s);
        for lvl in &simple.levels {
            prop_assert!(lvl.windows(2).all(|w| w[0] > w[1]));
        }
        prop_assert_eq!(from_simple(&simple).unwrap(), s);
    }

    #[test]
    fn interlacing_below_is_exactly_the_interlacing_set(y in signature(3), shorter in any::<bool>()) {
        let len = if shorter { 2 } else { 3 };
        let ys = Signature(y.clone());
        let listed = interlacing_below(&y, len);
        for x in enumerate_parts(len, 12) {
            prop_assert_eq!(listed.contains(&x), interlaces(&x, &ys).unwrap());
        }
    }

    #[test]
    fn modified_abs_lands_on_the_lattice(x in -1000i64..1000) {
        let m = modified_abs(x) as i64;
        prop_assert!(m >= 0);
        let expected = if x >= 0 { x } else { -x - 1 };
        prop_assert_eq!(m, expected);
    }
}
