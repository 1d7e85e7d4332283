use nestlab::geometry::{default_geometry, orders, ReturnGraph};
use nestlab::nest::{build_nest, check_cascades, check_nest, NestConfig, ReturnClass, Termination};
use nestlab::verify::{check_graph, check_schwarz_on_nest, check_theorem_b, kappa_invariant};
use nestlab::{BigMap, BigNest, PrecisionContext};
use proptest::prelude::*;

const FIB: &str = "-1.8705286321646448888906174192698158530716";

fn nest(c: &str, depth: usize, bits: u32) -> BigNest {
    let map = BigMap::from_decimal(c, PrecisionContext::new(bits, 32, 1).unwrap()).unwrap();
    build_nest(
        &map,
        &NestConfig {
            depth,
            ..NestConfig::default()
        },
    )
}

#[test]
fn fibonacci_nest_at_512_bits() {
    let r = nest(FIB, 8, 512);
    assert_eq!(r.termination, Termination::MaxDepth);
    assert!(r.classes().iter().all(|c| *c == ReturnClass::NonCentral));
    assert_eq!(r.kappa, (0..=8).collect::<Vec<_>>());
    let t = r.return_times();
    for n in 2..t.len() - 1 {
        assert_eq!(t[n + 1], t[n] + t[n - 1]);
    }
    check_nest(&r).unwrap();
    let s = check_schwarz_on_nest(&r);
    assert_eq!(s.violations, 0);
}

#[test]
fn degenerate_and_renormalizable() {
    let r = nest("-2", 10, 256);
    assert_eq!(r.termination, Termination::Degenerate);
    assert_eq!(r.depth(), 0);
    let r = nest("-1", 10, 256);
    match r.termination {
        Termination::Renormalizable { level, .. } => assert!(level <= 2),
        t => panic!("{t:?}"),
    }
}

#[test]
fn central_cascade_bookkeeping() {
    let r = nest("-1.76", 8, 256);
    assert!(r.classes().contains(&ReturnClass::Central));
    assert!(kappa_invariant(&r));
    check_cascades(&r).unwrap();
    for &n in &r.l_set {
        assert_eq!(r.level(n).unwrap().return_class, ReturnClass::NonCentral);
    }
}

#[test]
fn orders_match_out_degrees() {
    let r = nest(FIB, 9, 256);
    let g = ReturnGraph::from_nest(&r).unwrap();
    for n in 1..9 {
        let id = g.id(n + 1, 0).unwrap();
        assert_eq!(orders(&r, n, 0).unwrap(), g.out_degree(id));
    }
}

#[test]
fn decay_fits_refuse_short_nests() {
    let r = nest(FIB, 5, 256);
    let geo = default_geometry(&r).unwrap();
    assert!(check_theorem_b(&r, &geo, 4).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Graph bookkeeping holds for whatever nest a parameter produces.
    #[test]
    fn graph_consistent_on_random_nests(c in -1.99f64..-1.4) {
        let r = nest(&format!("{c}"), 6, 256);
        prop_assert!(kappa_invariant(&r));
        if r.depth() >= 1 {
            check_nest(&r).unwrap();
            let g = check_graph(&r).unwrap();
            prop_assert_eq!(g.violations, 0, "{:?}", g.worst);
        }
    }

    #[test]
    fn levels_strictly_nested(c in -1.99f64..-1.4) {
        let r = nest(&format!("{c}"), 5, 256);
        for n in 1..=r.depth() {
            prop_assert!(r.central(n - 1).unwrap().strictly_contains(r.central(n).unwrap()));
            prop_assert!(r.level(n).unwrap().r_n >= 1);
        }
        let t = r.return_times();
        prop_assert!(t.windows(2).all(|w| w[0] <= w[1]));
    }
}
