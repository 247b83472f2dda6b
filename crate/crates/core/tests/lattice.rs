use std::collections::BTreeSet;

use proptest::prelude::*;
use qelab_core::lattice::*;
use qelab_core::Error;

fn site_set(r: &Region) -> BTreeSet<Vec<i64>> {
    r.sites().map(|s| s.to_vec()).collect()
}

fn brute_box(center: &[i64], radius: i64) -> BTreeSet<Vec<i64>> {
    let mut out = BTreeSet::new();
    let dim = center.len();
    let side = 2 * radius + 1;
    for k in 0..side.pow(dim as u32) {
        let mut x = Vec::with_capacity(dim);
        let mut rest = k;
        for c in center {
            x.push(c - radius + rest % side);
            rest /= side;
        }
        out.insert(x);
    }
    out
}

fn neighbours(x: &[i64]) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for a in 0..x.len() {
        for s in [-1, 1] {
            let mut y = x.to_vec();
            y[a] += s;
            out.push(y);
        }
    }
    out
}

#[test]
fn box_examples() {
    assert_eq!(make_box(&SitePoint::origin(1, 1), 1).len(), 9);
    let single = make_box(&SitePoint::origin(2, 1), 0);
    assert_eq!(single.len(), 1);
    assert_eq!(single.site(0), &[0, 0, 0]);
    let b = make_box(&SitePoint::new(vec![3], vec![-2]), 2);
    assert_eq!(site_set(&b), brute_box(&[3, -2], 2));
    assert!(b.sites().all(|s| (s[0] - 3).abs() <= 2 && (s[1] + 2).abs() <= 2));
    let sites: Vec<Vec<i64>> = b.sites().map(|s| s.to_vec()).collect();
    assert!(sites.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn elementary_region_examples() {
    let rect = Rectangle { half_widths: vec![2, 2], offset: vec![0, 0] };
    let far = make_elementary_region(&rect, &SitePoint::new(vec![10], vec![10])).unwrap();
    assert_eq!(far.len(), 25);
    let l = make_elementary_region(&rect, &SitePoint::new(vec![2], vec![2])).unwrap();
    let expect: BTreeSet<Vec<i64>> =
        brute_box(&[0, 0], 2).into_iter().filter(|x| !(x[0] - 2 >= -2 && x[1] - 2 >= -2)).collect();
    assert_eq!(l.len(), 16);
    assert_eq!(site_set(&l), expect);
    let unit = Rectangle { half_widths: vec![1, 1], offset: vec![0, 0] };
    assert!(matches!(make_elementary_region(&unit, &SitePoint::new(vec![0], vec![0])), Err(Error::EmptyRegion)));
}

#[test]
fn boundary_examples() {
    let b3 = make_box(&SitePoint::origin(1, 1), 3);
    let same = boundaries(&b3, &b3).unwrap();
    assert!(same.interior.is_empty() && same.exterior.is_empty());

    let line = Region::subset(1, 0, (-3..=3).map(|x| vec![x]).collect()).unwrap();
    let inner = Region::subset(1, 0, (-1..=1).map(|x| vec![x]).collect()).unwrap();
    let bs = boundaries(&line, &inner).unwrap();
    let coords = |v: &[SitePoint]| v.iter().map(|p| p.coords()).collect::<Vec<_>>();
    assert_eq!(coords(&bs.interior), vec![vec![-1], vec![1]]);
    assert_eq!(coords(&bs.exterior), vec![vec![-2], vec![2]]);

    let big = make_box(&SitePoint::origin(1, 1), 5);
    let small = make_box(&SitePoint::origin(1, 1), 2);
    let bs = boundaries(&big, &small).unwrap();
    assert_eq!((bs.interior.len(), bs.exterior.len()), (16, 20));
}

#[test]
fn exhaustion_examples() {
    // A width-2 box at the centre already fills a radius-2 ambient box, so no
    // proper term exists; one radius larger leaves exactly one.
    let b = make_box(&SitePoint::origin(1, 1), 2);
    assert!(exhaustion(&b, &SitePoint::origin(1, 1), 2).unwrap().is_empty());
    let b = make_box(&SitePoint::origin(1, 1), 3);
    let ex = exhaustion(&b, &SitePoint::origin(1, 1), 2).unwrap();
    assert_eq!(ex.len(), 1);

    let line = Region::subset(1, 0, (-9..=9).map(|x| vec![x]).collect()).unwrap();
    let ex = exhaustion(&line, &SitePoint::new(vec![0], vec![]), 2).unwrap();
    assert_eq!(site_set(&ex[0]), (-2..=2).map(|x| vec![x]).collect());
    assert_eq!(site_set(&ex[1]), (-4..=4).map(|x| vec![x]).collect());
    for w in ex.windows(2) {
        let (a, b) = (site_set(&w[0]), site_set(&w[1]));
        assert!(a.is_subset(&b) && a.len() < b.len());
    }
}

#[test]
fn disjoint_examples() {
    let a = make_box(&SitePoint::new(vec![0], vec![0]), 1);
    let b = make_box(&SitePoint::new(vec![3], vec![3]), 1);
    assert!(disjoint(&a, &b));
    assert!(!disjoint(&a, &a));
    // Two interlocking L shapes: no shared sites, but their hulls cross.
    let l1 = Region::subset(1, 1, vec![vec![0, 0], vec![1, 0], vec![2, 0], vec![0, 1], vec![0, 2]]).unwrap();
    let l2 = Region::subset(1, 1, vec![vec![1, 1], vec![2, 1], vec![2, 2], vec![1, 2], vec![3, 3]]).unwrap();
    assert!(site_set(&l1).is_disjoint(&site_set(&l2)));
    assert!(!disjoint(&l1, &l2));
}

#[test]
fn projection_examples() {
    let b = make_box(&SitePoint::new(vec![4], vec![-1]), 2);
    assert_eq!(project(&b, Axis::J), (2..=6).map(|x| vec![x]).collect());
    let s = Region::subset(1, 1, vec![vec![7, -3]]).unwrap();
    assert_eq!(project(&s, Axis::J), [vec![7]].into_iter().collect());
    assert_eq!(project(&s, Axis::N), [vec![-3]].into_iter().collect());
    let rect = Rectangle { half_widths: vec![2, 2], offset: vec![0, 0] };
    let l = make_elementary_region(&rect, &SitePoint::new(vec![2], vec![2])).unwrap();
    let expect: BTreeSet<Vec<i64>> = site_set(&l).into_iter().map(|x| vec![x[1]]).collect();
    assert_eq!(project(&l, Axis::N), expect);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn elementary_region_is_set_difference(
        hw in proptest::collection::vec(0u32..4, 2),
        off in proptest::collection::vec(-3i64..3, 2),
        m in proptest::collection::vec(-5i64..5, 2),
    ) {
        prop_assume!(m.iter().any(|&x| x != 0));
        let rect = Rectangle { half_widths: hw.clone(), offset: off.clone() };
        let r = make_elementary_region(&rect, &SitePoint::new(vec![m[0]], vec![m[1]])).unwrap();
        let inside = |x: &[i64]| (0..2).all(|a| (x[a] - off[a]).abs() <= hw[a] as i64);
        let mut expect = BTreeSet::new();
        for x in brute_box(&off, *hw.iter().max().unwrap() as i64) {
            let shifted: Vec<i64> = x.iter().zip(&m).map(|(a, b)| a - b).collect();
            if inside(&x) && !inside(&shifted) {
                expect.insert(x);
            }
        }
        prop_assert_eq!(site_set(&r), expect);
    }

    #[test]
    fn box_boundary_bound_and_adjacency(r in 0u32..4, extra in 1u32..3, dim in 1usize..=3) {
        let (d, nu) = if dim == 1 { (1, 0) } else { (1, dim - 1) };
        let c = SitePoint::origin(d, nu);
        let sub = make_box(&c, r);
        let amb = make_box(&c, r + extra);
        let bs = boundaries(&amb, &sub).unwrap();
        let bound = 2 * dim * (2 * r as usize + 1).pow(dim as u32 - 1);
        prop_assert!(bs.interior.len() <= bound);
        let interior: BTreeSet<Vec<i64>> = bs.interior.iter().map(|p| p.coords()).collect();
        for e in &bs.exterior {
            prop_assert!(neighbours(&e.coords()).iter().any(|y| interior.contains(y)));
        }
    }

    #[test]
    fn disjoint_symmetric_irreflexive(
        c1 in proptest::collection::vec(-4i64..4, 2),
        c2 in proptest::collection::vec(-4i64..4, 2),
        r1 in 0u32..3,
        r2 in 0u32..3,
    ) {
        let a = make_box(&SitePoint::new(vec![c1[0]], vec![c1[1]]), r1);
        let b = make_box(&SitePoint::new(vec![c2[0]], vec![c2[1]]), r2);
        prop_assert_eq!(disjoint(&a, &b), disjoint(&b, &a));
        prop_assert!(!disjoint(&a, &a));
        if disjoint(&a, &b) {
            prop_assert!(site_set(&a).is_disjoint(&site_set(&b)));
        }
    }

    #[test]
    fn exhaustion_strictly_nested(r in 3u32..8, w in 1u32..3, cx in -2i64..2, cy in -2i64..2) {
        let amb = make_box(&SitePoint::origin(1, 1), r);
        let ex = exhaustion(&amb, &SitePoint::new(vec![cx], vec![cy]), w).unwrap();
        for pair in ex.windows(2) {
            let (a, b) = (site_set(&pair[0]), site_set(&pair[1]));
            prop_assert!(a.is_subset(&b) && a.len() < b.len());
        }
        prop_assert!(site_set(ex.last().unwrap()).len() < amb.len());
    }

    #[test]
    fn region_json_round_trip(r in 0u32..3, cx in -5i64..5) {
        let b = make_box(&SitePoint::new(vec![cx], vec![1]), r);
        let s = serde_json::to_string(&b).unwrap();
        prop_assert!(!s.contains("coords"));
        let back: Region = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back, b);
    }
}
