use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use switchlab::encoding::{decode_failure, encode_failure, failure_set_member, ternary_bits};
use switchlab::experiments::{exact_failure_rate, DnfSource, ExperimentConfig, Mode};
use switchlab::formula::{
    enumerate_vars, eval_dnf, first_live_conjunction, restrict_conjunction, LiveConjunction, Restricted,
};
use switchlab::growth::{f_k, iterate, GrowthFn, DEFAULT_BIT_BUDGET};
use switchlab::restriction::{
    enumerate_restrictions, exact_probability_with, extend_g, sample_layout,
};
use switchlab::tree::{canonical_tree, tree_height_profile, verify_tree_decides, CanonicalTreeParams};
use switchlab::{
    BlockLayout, BlockState, Conjunction, Dnf, Form, Literal, Polarity, Restriction, SeedStream, StarRate, VarId,
    VarSpace, VarState,
};

fn tiny() -> VarSpace {
    VarSpace::new(vec![1], 1, 1).with_words_per_scale(1)
}

fn tiny_vars() -> Vec<VarId> {
    enumerate_vars(&tiny())
}

/// Conjunctions over the 8 tiny-space variables, as (index, sign) lists.
fn raw_conjunctions(max_width: usize, max_count: usize) -> impl Strategy<Value = Vec<Vec<(usize, bool)>>> {
    let conj = proptest::sample::subsequence((0..8usize).collect::<Vec<_>>(), 1..=max_width)
        .prop_flat_map(|idx| {
            let n = idx.len();
            (Just(idx), proptest::collection::vec(any::<bool>(), n))
        })
        .prop_map(|(idx, signs)| idx.into_iter().zip(signs).collect::<Vec<_>>());
    proptest::collection::vec(conj, 0..=max_count)
}

fn build(raw: &[Vec<(usize, bool)>], negate: bool) -> Vec<Conjunction> {
    let vars = tiny_vars();
    raw.iter()
        .map(|c| {
            Conjunction::new(c.iter().map(|&(i, s)| {
                if s != negate {
                    Literal::pos(vars[i].clone())
                } else {
                    Literal::neg(vars[i].clone())
                }
            }))
            .unwrap()
        })
        .collect()
}

fn assignment(mask: u32) -> BTreeMap<VarId, bool> {
    tiny_vars().into_iter().enumerate().map(|(i, v)| (v, mask >> i & 1 == 1)).collect()
}

fn rho(seed: u64, polarity: Polarity) -> Restriction {
    sample_layout(&BlockLayout::from(&tiny()), &SeedStream::new(seed, 0), polarity, StarRate::PerScale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cnf_is_complement_of_negated_dnf(raw in raw_conjunctions(3, 4)) {
        let cnf = Dnf::new(build(&raw, false), 3, Form::Cnf).unwrap();
        let dual = Dnf::new(build(&raw, true), 3, Form::Dnf).unwrap();
        for mask in 0..256u32 {
            let a = assignment(mask);
            prop_assert_eq!(eval_dnf(&cnf, &a).unwrap(), !eval_dnf(&dual, &a).unwrap());
        }
    }

    #[test]
    fn empty_restriction_leaves_everything(raw in raw_conjunctions(3, 1)) {
        let empty = Restriction::new(Polarity::Normal, "empty");
        for c in build(&raw, false) {
            let expect = if c.is_empty() { Restricted::True } else { Restricted::Residual(c.literals().to_vec()) };
            prop_assert_eq!(restrict_conjunction(&c, &empty), expect);
        }
    }

    #[test]
    fn first_live_stable_under_append(
        raw in raw_conjunctions(2, 4),
        extra in raw_conjunctions(2, 3),
        seed in any::<u64>(),
    ) {
        let r = rho(seed, Polarity::Normal);
        let base = Dnf::new(build(&raw, false), 2, Form::Dnf).unwrap();
        let mut all = build(&raw, false);
        all.extend(build(&extra, false));
        let longer = Dnf::new(all, 2, Form::Dnf).unwrap();
        let before = first_live_conjunction(&base, &r);
        if before != LiveConjunction::Exhausted {
            prop_assert_eq!(first_live_conjunction(&longer, &r), before);
        }
    }

    #[test]
    fn extend_g_is_idempotent(seed in any::<u64>(), flipped in any::<bool>()) {
        let pol = if flipped { Polarity::Flipped } else { Polarity::Normal };
        let g = extend_g(&rho(seed, pol)).unwrap();
        prop_assert_eq!(extend_g(&g).unwrap(), g);
    }

    #[test]
    fn polarity_duality(seed in any::<u64>()) {
        let layout = BlockLayout::from(&tiny());
        let normal = rho(seed, Polarity::Normal);
        let flipped = normal.complemented();
        prop_assert_eq!(flipped.polarity(), Polarity::Flipped);
        let pn: BigRational = exact_probability_with(&layout, &normal, StarRate::PerScale).unwrap();
        let pf: BigRational = exact_probability_with(&layout, &flipped, StarRate::PerScale).unwrap();
        prop_assert_eq!(pn, pf);
        prop_assert_eq!(rho(seed, Polarity::Flipped), flipped);
    }

    #[test]
    fn canonical_tree_shape(raw in raw_conjunctions(2, 5), seed in any::<u64>(), theta in 2u64..=4) {
        let dnf = Dnf::new(build(&raw, false), 2, Form::Dnf).unwrap();
        let r = rho(seed, Polarity::Normal);
        let t = canonical_tree(&dnf, &r, &CanonicalTreeParams::new(theta, 0)).tree;
        prop_assert!(t.no_repeats());
        prop_assert!(verify_tree_decides(&t, &dnf, &r, 16).unwrap());
        let (small, block) = tree_height_profile(&t).unwrap();
        let small_stars = r.stars().filter(|v| v.scale() < theta).count();
        let star_blocks = r
            .blocks()
            .filter(|(b, s)| *s == BlockState::StarBlock && b.scale() >= theta)
            .count();
        // every branch runs the whole first phase, so the deepest one does
        prop_assert!(small == small_stars || t.height() == 0 && small_stars == 0);
        prop_assert!(block <= star_blocks);
    }

    #[test]
    fn encoding_roundtrip(raw in raw_conjunctions(2, 5), seed in any::<u64>(), h in 1usize..=3) {
        let dnf = Dnf::new(build(&raw, false), 2, Form::Dnf).unwrap();
        let r = rho(seed, Polarity::Normal);
        let params = CanonicalTreeParams::new(2, h);
        if let Some(ev) = failure_set_member(&dnf, &r, &params) {
            let bundle = encode_failure(&dnf, &r, &ev).unwrap();
            prop_assert_eq!(decode_failure(&dnf, &bundle, &params).unwrap(), r.clone());
            let sizes = bundle.sizes();
            prop_assert!(sizes.pi_bits <= h);
            prop_assert!(sizes.beta_bits <= h * (bundle.width + 1));
            prop_assert!(sizes.gamma_bits <= h * bundle.width);
            // the ternary word covers every small-block variable
            let small = r.vars().filter(|(v, _)| v.scale() < 2).count();
            prop_assert_eq!(sizes.tau_bits, ternary_bits(small));
        }
    }

    #[test]
    fn f_k_grows(k in 2u32..=3, n in 0u64..5000) {
        let nb = BigUint::from(n);
        let f = f_k(k, &nb, DEFAULT_BIT_BUDGET).unwrap();
        prop_assert!(f > nb);
        let next = f_k(k, &(nb + 1u32), DEFAULT_BIT_BUDGET).unwrap();
        prop_assert!(next >= f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn failure_rate_non_increasing_in_h(raw in raw_conjunctions(2, 4)) {
        let dnf = Dnf::new(build(&raw, false), 2, Form::Dnf).unwrap();
        let mut prev = BigRational::one();
        for h in 0..=4 {
            let cfg = ExperimentConfig {
                space: tiny(),
                dnf: DnfSource::Fixed(dnf.clone()),
                params: CanonicalTreeParams::new(2, h),
                trials: 1,
                master_seed: 0,
                mode: Mode::Exact,
                delta: BigRational::zero(),
                epsilon: BigRational::one(),
                nominal_log2_n: 64,
                enumeration_budget: 10_000,
                star_rate: StarRate::PerScale,
            };
            let rate = exact_failure_rate(&cfg).unwrap();
            prop_assert!(rate <= prev, "h = {}", h);
            prev = rate;
        }
    }

    #[test]
    fn enumeration_is_normalized(
        (e1, words) in prop_oneof![Just((0u32, 1u64)), Just((0, 2)), Just((1, 1))],
        num in 1u64..4,
        uniform in any::<bool>(),
    ) {
        let space = VarSpace::new(vec![1], e1, 1).with_words_per_scale(words);
        let layout = BlockLayout::from(&space);
        let rate = if uniform { StarRate::Uniform { num, den: 4 } } else { StarRate::PerScale };
        let mut total = BigRational::zero();
        for (r, p) in enumerate_restrictions::<BigRational>(&layout, Polarity::Normal, rate, 1_000_000).unwrap() {
            prop_assert_eq!(&exact_probability_with::<BigRational>(&layout, &r, rate).unwrap(), &p);
            // g only resolves stars, keeping one per *-block
            let g = extend_g(&r).unwrap();
            for (v, s) in r.vars() {
                match s.bit() {
                    Some(b) => prop_assert_eq!(g.state(v).and_then(VarState::bit), Some(b)),
                    None => prop_assert!(matches!(g.state(v), Some(VarState::Star) | Some(VarState::One))),
                }
            }
            for (b, s) in r.blocks() {
                let kept = g.block_members(b).filter(|(_, st)| *st == VarState::Star).count();
                prop_assert_eq!(kept, (s == BlockState::StarBlock) as usize);
            }
            total += p;
        }
        prop_assert!(total.is_one());
    }
}

#[test]
fn monte_carlo_matches_a_fixed_event() {
    // Pr[first block is a *-block] = (1 - (1 - 1/2)^2) * 1/2 = 3/8
    let layout = BlockLayout::from(&tiny());
    let block = layout.blocks()[0].id.clone();
    let exact: BigRational = enumerate_restrictions::<BigRational>(&layout, Polarity::Normal, StarRate::PerScale, 10_000)
        .unwrap()
        .filter(|(r, _)| r.block_state(&block) == Some(BlockState::StarBlock))
        .map(|(_, p)| p)
        .sum();
    assert_eq!(exact, BigRational::new(3.into(), 8.into()));
    let p = 0.375;
    let trials = 4000u64;
    let tol = 3.0 * (p * (1.0 - p) / trials as f64).sqrt();
    for master in 0..5 {
        let hits = (0..trials)
            .filter(|&t| {
                let r = sample_layout(&layout, &SeedStream::new(master, t), Polarity::Normal, StarRate::PerScale);
                r.block_state(&block) == Some(BlockState::StarBlock)
            })
            .count();
        let freq = hits as f64 / trials as f64;
        assert!((freq - p).abs() <= tol, "seed {master}: {freq}");
    }
}

#[test]
fn f2_checkpoints() {
    for n in 3u64..=20 {
        let two_n = BigUint::one() << n;
        let nb = BigUint::from(n);
        assert!(iterate(GrowthFn::FracExp(2), 3, &nb, DEFAULT_BIT_BUDGET).unwrap() > two_n, "n = {n}");
        if n >= 5 {
            assert!(f_k(2, &nb, DEFAULT_BIT_BUDGET).unwrap() < two_n, "n = {n}");
        }
    }
}

#[test]
fn star_state_roundtrip() {
    assert_eq!(VarState::from_bit(true).bit(), Some(true));
    assert_eq!(VarState::Star.bit(), None);
}
