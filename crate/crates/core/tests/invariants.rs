use std::collections::BTreeSet;

use dhj_core::cube::{all_lines, count_lines_in_set, find_line_in_set, is_ij_insensitive};
use dhj_core::extremal::{max_linefree, verify_witness, ExtremalOptions};
use dhj_core::increment::{insensitive_closure, partition_insensitive};
use dhj_core::measures::{measure, sample_nondegenerate, seeded_rng, Distribution, Law};
use dhj_core::rational::int;
use dhj_core::{CubeSet, CubeShape, LinePattern, Point, SearchOptions, Subspace};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = CubeShape> {
    (2usize..=4, 1usize..=4).prop_map(|(k, n)| CubeShape::new(k, n).unwrap())
}

fn set_in(shape: CubeShape) -> impl Strategy<Value = CubeSet> {
    proptest::collection::vec(any::<bool>(), shape.size() as usize).prop_map(move |bits| {
        CubeSet::from_indices(shape, bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u64)).unwrap()
    })
}

fn shape_and_set() -> impl Strategy<Value = (CubeShape, CubeSet)> {
    shape().prop_flat_map(|s| (Just(s), set_in(s)))
}

// Brute-force line test: a point set contains a line iff some pattern with a
// nonempty wildcard set has all k of its points in the set.
fn brute_has_line(a: &CubeSet) -> bool {
    let s = a.shape();
    let (k, n) = (s.k() as u64, s.n() as u32);
    (0..(k + 1).pow(n)).any(|code| {
        let mut pat = Vec::with_capacity(n as usize);
        let mut c = code;
        for _ in 0..n {
            pat.push((c % (k + 1)) as u8);
            c /= k + 1;
        }
        pat.contains(&0)
            && (1..=k as u8).all(|v| {
                let digits: Vec<u8> = pat.iter().map(|&d| if d == 0 { v } else { d }).collect();
                a.contains_index(s.index_of(&digits))
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn index_and_digits_roundtrip(s in shape(), i in any::<u64>()) {
        let i = i % s.size();
        let p = Point::from_index(s, i).unwrap();
        prop_assert_eq!(p.index(), i);
        prop_assert_eq!(Point::new(s, p.digits().to_vec()).unwrap(), p.clone());
        prop_assert_eq!(p.value_counts().iter().sum::<usize>(), s.n());
    }

    #[test]
    fn line_encoding_roundtrip(s in shape(), code in any::<u64>()) {
        let big = s.with_alphabet(s.k() + 1).unwrap();
        let y = Point::from_index(big, code % big.size()).unwrap();
        let line = LinePattern::from_point(&y).unwrap();
        prop_assert_eq!(line.to_point(), y);
        let pts: BTreeSet<u64> = line.point_indices().into_iter().collect();
        let expected = if line.is_degenerate() { 1 } else { s.k() };
        prop_assert_eq!(pts.len(), expected);
    }

    #[test]
    fn line_search_agrees_with_brute_force((_, a) in shape_and_set()) {
        let found = find_line_in_set(&a, &SearchOptions::default()).unwrap();
        prop_assert_eq!(found.is_some(), brute_has_line(&a));
        if let Some(line) = &found {
            prop_assert!(!line.is_degenerate());
            prop_assert!(line.point_indices().iter().all(|&i| a.contains_index(i)));
        }
        let counted = all_lines(a.shape(), false)
            .unwrap()
            .iter()
            .filter(|l| l.point_indices().iter().all(|&i| a.contains_index(i)))
            .count() as u64;
        prop_assert_eq!(count_lines_in_set(&a), counted);
    }

    #[test]
    fn set_algebra((s, a) in shape_and_set(), seed in any::<u64>()) {
        let b = CubeSet::random(s, 0.5, &mut seeded_rng(seed));
        let u = a.union(&b).unwrap();
        let i = a.intersection(&b).unwrap();
        prop_assert_eq!(u.len() + i.len(), a.len() + b.len());
        prop_assert_eq!(a.complement().len(), s.size() - a.len());
        prop_assert!(a.difference(&b).unwrap().is_subset(&a));
        prop_assert_eq!(CubeSet::from_hex(s, &a.to_hex()).unwrap(), a.clone());
        prop_assert_eq!(CubeSet::from_json_str(&a.to_json().to_string()).unwrap(), a);
    }

    #[test]
    fn subspace_embedding_is_injective(k in 2usize..=3, n in 1usize..=4, d in 1usize..=2, code in any::<u64>()) {
        let big = CubeShape::new(k + d, n).unwrap();
        let code = Point::from_index(big, code % big.size()).unwrap();
        let Ok(v) = Subspace::from_encoding(&code, k, false) else { return Ok(()) };
        prop_assert_eq!(v.dim(), d);
        let pts = v.to_set();
        prop_assert_eq!(pts.len(), (k as u64).pow(d as u32));
        prop_assert_eq!(v.pullback(&pts).unwrap(), CubeSet::full(v.domain()));
        prop_assert!(v.is_contained_in(&pts));
        for z in CubeSet::full(v.domain()).points() {
            prop_assert!(pts.contains(&v.embed(&z).unwrap()));
        }
        // a line of the parameter cube maps onto the image of its points
        for line in all_lines(v.domain(), false).unwrap() {
            let image = v.map_line(&line).unwrap();
            let mut mapped: Vec<u64> = line.points().iter().map(|z| v.embed(z).unwrap().index()).collect();
            let mut direct = image.point_indices();
            mapped.sort_unstable();
            direct.sort_unstable();
            prop_assert_eq!(mapped, direct);
        }
    }

    #[test]
    fn measures_are_additive((s, a) in shape_and_set()) {
        let mut laws = vec![Law::Uniform, Law::EqualSlices];
        if s.n() >= s.k() {
            laws.push(Law::Nondegenerate);
        }
        for law in laws {
            let m = measure(&a, law).unwrap().into_inner();
            let c = measure(&a.complement(), law).unwrap().into_inner();
            prop_assert!(m >= int(0) && m <= int(1));
            prop_assert!((m + c).is_one());
        }
    }

    #[test]
    fn total_variation_is_a_metric(s in shape(), seed in any::<u64>()) {
        let u = Distribution::uniform(s);
        let e = Distribution::equal_slices(s);
        let p = Distribution::point_mass(&Point::from_index(s, seed % s.size()).unwrap());
        let d = |x: &Distribution, y: &Distribution| x.tv_distance(y).unwrap().into_inner();
        prop_assert!(d(&u, &u).is_zero());
        prop_assert_eq!(d(&u, &e), d(&e, &u));
        prop_assert!(d(&u, &p) <= d(&u, &e) + d(&e, &p));
        prop_assert!(d(&u, &p) <= int(1));
    }

    #[test]
    fn nondegenerate_samples_use_every_value(k in 2usize..=4, extra in 0usize..=4, seed in any::<u64>()) {
        let s = CubeShape::new(k, k + extra).unwrap();
        let x = sample_nondegenerate(s, &mut seeded_rng(seed)).unwrap();
        prop_assert!(x.value_counts().iter().all(|&c| c > 0));
    }

    #[test]
    fn closure_is_insensitive((s, a) in shape_and_set(), i in 1u8..=4, j in 1u8..=4) {
        let (i, j) = (1 + (i - 1) % s.k() as u8, 1 + (j - 1) % s.k() as u8);
        prop_assume!(i != j);
        let c = insensitive_closure(&a, j, i).unwrap();
        prop_assert!(is_ij_insensitive(&c, i, j).unwrap());
        if is_ij_insensitive(&a, i, j).unwrap() {
            prop_assert_eq!(c, a);
        }
    }

    #[test]
    fn partition_is_exact(k in 2usize..=3, n in 1usize..=4, seed in any::<u64>()) {
        let s = CubeShape::new(k, n).unwrap();
        let base = CubeSet::random(s, 0.6, &mut seeded_rng(seed));
        let d = insensitive_closure(&base, k as u8, 1).unwrap();
        let r = partition_insensitive(&d, 1, 1).unwrap();
        prop_assert!(r.check(&d, 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn extremal_witness_beats_greedy(k in 2usize..=3, n in 1usize..=3, seed in any::<u64>()) {
        prop_assume!(k.pow(n as u32) <= 27);
        let s = CubeShape::new(k, n).unwrap();
        let r = max_linefree(s, &ExtremalOptions { seed, ..Default::default() }).unwrap();
        prop_assert!(r.optimal);
        prop_assert!(verify_witness(&r.witness, r.best_size));
        // any maximal line-free set built in random order is a lower bound
        let mut order: Vec<u64> = (0..s.size()).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut seeded_rng(seed));
        let mut greedy = CubeSet::empty(s);
        for i in order {
            greedy.insert_index(i);
            if brute_has_line(&greedy) {
                greedy.remove_index(i);
            }
        }
        prop_assert!(r.best_size as u64 >= greedy.len());
    }
}
