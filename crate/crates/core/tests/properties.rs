//! Randomized invariants. Instances are drawn from seeded generators so a
//! failing case shrinks to a seed and a few small parameters.

use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lipmart::gen;
use lipmart::interval_re::{
    oracle_to_staged, IntervalReOracle, LinearOracle, PrefixFreeMachine, StagedOracle,
};
use lipmart::martingale::{cdf_at_dyadic, cdf_fn, MartingaleTable};
use lipmart::oscillator::{build_oscillator, max_drop, savings_transform, Phase};
use lipmart::piecewise::grid_variation;
use lipmart::rat::{self, int, pow2, ratio};
use lipmart::schnorr::{
    check_l1_to_lp, lp_norm, refine_test, DyadicCube, DyadicCubeSet, PointTest, SchnorrTest,
    StepField, Target,
};
use lipmart::synthesis::{synthesize_signed, SynthesisOptions};
use lipmart::{BinWord, Dyadic, PiecewiseFn, Rat};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cdf_of(seed: u64, depth: usize) -> PiecewiseFn {
    let m = gen::fair_table(&mut rng(seed), depth, int(1), 4).unwrap();
    cdf_fn(m.table())
}

fn signed_step(seed: u64, level: u32) -> PiecewiseFn {
    gen::step_fn(&mut rng(seed), level, 6, 2, 4).unwrap()
}

fn sets(seed: u64, dim: usize) -> (DyadicCubeSet, DyadicCubeSet) {
    let mut r = rng(seed);
    let a = gen::cube_set(&mut r, dim, 4, 6).unwrap();
    let b = gen::cube_set(&mut r, dim, 4, 6).unwrap();
    (a, b)
}

fn d(i: u64, k: u32) -> Dyadic {
    Dyadic::from_parts(i, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grid_variation_grows_with_depth(seed: u64, depth in 1u32..6) {
        let f = signed_step(seed, 4).antiderivative().unwrap();
        let (x, y) = (Dyadic::zero(), Dyadic::one());
        let coarse = grid_variation(&f, &x, &y, depth, &int(1)).unwrap();
        let fine = grid_variation(&f, &x, &y, depth + 1, &int(1)).unwrap();
        prop_assert!(coarse <= fine);
        let coarse2 = grid_variation(&f, &x, &y, depth, &int(2)).unwrap();
        let fine2 = grid_variation(&f, &x, &y, depth + 1, &int(2)).unwrap();
        prop_assert!(coarse2 <= fine2);
    }

    #[test]
    fn grid_variation_is_additive_at_grid_points(seed: u64, a in 0u64..16, b in 0u64..16, c in 0u64..16) {
        let mut v = [a, b, c];
        v.sort_unstable();
        prop_assume!(v[0] < v[1] && v[1] < v[2]);
        let f = signed_step(seed, 3).antiderivative().unwrap();
        let one = int(1);
        let (x, y, z) = (d(v[0], 4), d(v[1], 4), d(v[2], 4));
        let whole = grid_variation(&f, &x, &z, 5, &one).unwrap();
        let parts = grid_variation(&f, &x, &y, 5, &one).unwrap() + grid_variation(&f, &y, &z, 5, &one).unwrap();
        prop_assert_eq!(whole, parts);
    }

    #[test]
    fn monotone_functions_vary_by_their_increment(seed: u64, a in 0u64..32, b in 0u64..32, depth in 0u32..8) {
        prop_assume!(a < b);
        let f = cdf_of(seed, 5);
        let (x, y) = (d(a, 5), d(b, 5));
        let var = grid_variation(&f, &x, &y, depth, &int(1)).unwrap();
        prop_assert_eq!(var, f.eval(y.value()).unwrap() - f.eval(x.value()).unwrap());
    }

    #[test]
    fn integral_variation_norm_is_l1_norm(seed: u64, level in 1u32..6) {
        let h = signed_step(seed, level);
        let norm = h.antiderivative().unwrap().p_variation_norm(&int(1)).unwrap();
        let l1 = lp_norm(&StepField::from_step_fn(&h).unwrap(), &int(1)).unwrap();
        prop_assert_eq!(norm.exact(), Some(&l1.power));
    }

    #[test]
    fn cdf_is_nondecreasing_and_ends_at_the_root(seed: u64, depth in 1usize..7) {
        let m = gen::fair_table(&mut rng(seed), depth, int(1), 4).unwrap();
        let grid = Dyadic::grid(&Dyadic::zero(), &Dyadic::one(), depth as u32);
        let values: Vec<Rat> = grid.iter().map(|x| cdf_at_dyadic(&m, x).unwrap()).collect();
        prop_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(values.last().unwrap(), m.table().at(0, 0));
    }

    #[test]
    fn machine_cdf_is_nondecreasing(seed: u64, count in 1usize..8) {
        use rand::Rng;
        let mut r = rng(seed);
        let mut table = std::collections::BTreeMap::new();
        for _ in 0..count {
            let len = r.gen_range(1..=6);
            let w = gen::word(&mut r, len);
            if table.keys().any(|k: &BinWord| k.is_prefix_of(&w) || w.is_prefix_of(k)) {
                continue;
            }
            table.insert(w, d(r.gen_range(0..16), 4));
        }
        let machine = PrefixFreeMachine::new(table).unwrap();
        let grid = Dyadic::grid(&Dyadic::zero(), &Dyadic::one(), 5);
        let values: Vec<Rat> = grid.iter().map(|x| machine.fs_eval(x.value()).unwrap()).collect();
        prop_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(*values.last().unwrap() <= Rat::one());
    }

    #[test]
    fn oracle_stages_are_fair(num in 0i64..16, den in 1i64..8, depth in 1usize..7) {
        let oracle = LinearOracle { c: ratio(num, den) };
        let staged = oracle_to_staged(&oracle, depth, 2).unwrap();
        for s in staged.stages() {
            prop_assert!(s.check_fairness().is_empty());
        }
    }

    #[test]
    fn staged_oracle_round_trips(seed: u64, depth in 1usize..6, stages in 1usize..4) {
        let sm = gen::staged_martingale(&mut rng(seed), depth, stages).unwrap();
        let oracle = StagedOracle::new(sm.clone());
        let back = oracle_to_staged(&oracle, depth, oracle.stage_hint()).unwrap();
        prop_assert_eq!(back.stages(), sm.stages());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn signed_synthesis_invariants(seed: u64, depth in 4usize..10, stages in 1usize..5) {
        let sm = gen::staged_martingale(&mut rng(seed), depth, stages).unwrap();
        let res = synthesize_signed(&sm, &SynthesisOptions::new(depth).with_trace()).unwrap();
        let l = res.l.table();
        prop_assert!(res.l.check_fairness().is_empty());
        prop_assert!(res.sign_lock_violations(&sm).is_empty());
        let last = sm.stage_count() - 1;
        for (w, v) in l.entries() {
            let s = res.stage_of_level[w.len()].min(last);
            prop_assert!(v.abs() <= *sm.stage(s).get(&w).unwrap(), "|L({})| above M_{}", w, s);
        }
        for (s, gap) in res.deficits.iter().enumerate() {
            prop_assert!(!gap.is_negative() && *gap <= pow2(-(s as i64)));
        }
        // V_{L,b}(σ) grows with b and starts at |L(σ)|
        for w in BinWord::level(2.min(depth)) {
            let mut prev = l.get(&w).unwrap().abs();
            for b in w.len()..=depth {
                let v = res.l.level_variation(&w, b).unwrap();
                prop_assert!(prev <= v);
                prev = v;
            }
        }
    }

    #[test]
    fn oscillator_phase_invariants(seed: u64, depth in 1usize..10) {
        let m = gen::fair_table(&mut rng(seed), depth, int(1), 2).unwrap();
        let s = savings_transform(&m).unwrap();
        prop_assert!(max_drop(s.table()).0 <= int(1));
        let osc = build_oscillator(&s, depth).unwrap();
        prop_assert!(osc.invariant_violations().is_empty());
        prop_assert!(osc.b.check_fairness().is_empty());
        for (w, v) in osc.b.table().entries() {
            match osc.phase(&w).unwrap() {
                Phase::Up => prop_assert!(*v < int(3)),
                Phase::Down => prop_assert!(*v > int(2)),
            }
        }
    }

    #[test]
    fn cube_set_algebra(seed: u64, dim in 1usize..4) {
        let (a, b) = sets(seed, dim);
        let union = a.union(&b).unwrap();
        let meet = a.intersection(&b).unwrap();
        prop_assert_eq!(union.measure() + meet.measure(), a.measure() + b.measure());
        prop_assert_eq!(&a.union(&a).unwrap(), &a);
        prop_assert_eq!(&a.intersection(&a).unwrap(), &a);
        prop_assert!(a.difference(&b).unwrap().intersection(&b).unwrap().is_empty());
        prop_assert_eq!(a.complement().measure(), Rat::one() - a.measure());
        prop_assert!(meet.is_subset(&a).unwrap() && a.is_subset(&union).unwrap());
    }

    #[test]
    fn cube_set_json_round_trips(seed: u64, dim in 1usize..4) {
        let (a, _) = sets(seed, dim);
        prop_assert_eq!(DyadicCubeSet::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn l1_to_lp_step(seed: u64, p in 1u32..4, e in 1u32..4, level in 2u32..12, k in 1i64..4) {
        // h is g moved by k/4 on one small cube, so the premise is often met
        let mut r = rng(seed);
        let g = StepField::from_step_fn(&gen::step_fn(&mut r, 4, 5, 1, 4).unwrap()).unwrap();
        let bump = DyadicCubeSet::from_cube(&DyadicCube::new(level, vec![0]).unwrap());
        let h = g.add(&StepField::indicator(&bump, ratio(k, 4), Rat::zero())).unwrap();
        let chk = check_l1_to_lp(&g, &h, &int(2), &pow2(-(e as i64)), p).unwrap();
        prop_assert!(chk.holds());
        prop_assert_eq!(&chk.l1, &(ratio(k, 4) * pow2(-(level as i64))));
        prop_assert_eq!(chk.lp_power, rat::pow(&ratio(k, 4), p) * pow2(-(level as i64)));
    }

    #[test]
    fn lp_norms_grow_with_p(seed: u64, p in 1u32..4, q in 1u32..4) {
        prop_assume!(p < q);
        let g = StepField::from_step_fn(&signed_step(seed, 4)).unwrap();
        // ‖g‖_p ≤ ‖g‖_q on a probability space, in power form
        let (ip, iq) = (g.abs_pow_integral(p), g.abs_pow_integral(q));
        prop_assert!(rat::pow(&ip, q) <= rat::pow(&iq, p));
    }
}

fn odd_denominator_target(num: i64, den: i64, dim: usize) -> Target {
    let coord = format!("{num}/{den}");
    Target::parse(&vec![coord; dim].join(","), dim).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn refined_sets_are_small_and_nested(num in 1i64..20, half in 1i64..10, dim in 1usize..3) {
        let den = 2 * half + 1;
        prop_assume!(num < den);
        let z = odd_denominator_target(num, den, dim);
        let test = PointTest::new(z.clone());
        let m_max = if dim == 1 { 5 } else { 4 };
        let g = refine_test(&test, m_max, 4).unwrap();
        for m in 0..=m_max {
            prop_assert!(test.member(m).unwrap().limit().measure() <= pow2(-(m as i64)));
            for t in 0..g.budget() {
                prop_assert!(g.stage_set(m, t).unwrap().measure() <= pow2(-(m as i64)));
            }
        }
        prop_assert!(g.measure_violations().unwrap().is_empty());
        prop_assert!(g.overlap_violations().unwrap().is_empty());
        for m in 0..m_max {
            prop_assert!(g.set(m + 1).unwrap().is_subset(&g.set(m).unwrap()).unwrap());
        }
        let chain = g.target_cubes(&z).unwrap();
        for w in chain.windows(2) {
            prop_assert!(w[0].contains_cube(&w[1]));
        }
    }

    // On the target chain the partial sums sit at 1 (even m) or 0 (odd m);
    // later levels move the average by at most 2^{-m}, since
    // λ(G_i ∩ C_m) ≤ 2^{-(i−m)(m+1)} λC_m.
    #[test]
    fn cube_averages_and_tail_shares(num in 1i64..20, half in 1i64..10, dim in 1usize..3) {
        let den = 2 * half + 1;
        prop_assume!(num < den);
        let z = odd_denominator_target(num, den, dim);
        let m_max = if dim == 1 { 5 } else { 4 };
        let g = refine_test(&PointTest::new(z.clone()), m_max, 4).unwrap();
        let chain: Vec<DyadicCube> = g.target_cubes(&z).unwrap();
        for (m, c) in chain.iter().enumerate() {
            let avg = g.cube_average(c, m_max).unwrap();
            let base = if m % 2 == 0 { Rat::one() } else { Rat::zero() };
            prop_assert!((&avg - base).abs() <= pow2(-(m as i64)), "C_{} average {}", m, rat::fmt(&avg));
            if m % 2 == 0 {
                prop_assert!(avg >= int(1) - pow2(1 - m as i64));
            }
            for i in m..=m_max {
                let bound = pow2(-(((i - m) * (m + 1)) as i64));
                prop_assert!(g.share_in(c, i).unwrap() <= bound);
            }
        }
        for r in 0..=m_max {
            prop_assert!(g.tail_l1(r, m_max).unwrap() <= pow2(1 - r as i64));
        }
    }
}

#[test]
fn point_test_members_are_small() {
    let t = PointTest::new(Target::parse("1/3,1/3", 2).unwrap());
    for m in 0..10 {
        assert!(t.member(m).unwrap().limit().measure() <= pow2(-(m as i64)));
    }
}

#[test]
fn constant_tables_are_fair() {
    let m = MartingaleTable::constant(5, ratio(3, 2)).unwrap();
    assert!(m.check_fairness().is_empty());
    assert_eq!(m.measure_of_word(&BinWord::empty()).unwrap(), ratio(3, 2));
}
