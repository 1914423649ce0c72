use proptest::prelude::*;
use uscx_core::grid::{hypo_converges, hypo_hits, pointwise_max, usc_hull_grid, HypoVerdict};
use uscx_core::{CompactProbe, Domain, ExtReal, GridField, ProbePart, Rect};

const RES: usize = 9;

fn domain() -> Domain {
    Domain::interval(0.0, 1.0, RES).unwrap()
}

fn ext() -> impl Strategy<Value = ExtReal> {
    prop_oneof![
        8 => (-5.0f64..5.0).prop_map(ExtReal::Finite),
        1 => Just(ExtReal::NegInf),
        1 => Just(ExtReal::PosInf),
    ]
}

fn field() -> impl Strategy<Value = GridField> {
    prop::collection::vec(ext(), RES).prop_map(|v| GridField::new(domain(), v).unwrap())
}

fn probe() -> impl Strategy<Value = CompactProbe> {
    let part = (0usize..RES, 0usize..RES, -5.0f64..5.0).prop_map(|(i, j, level)| {
        let (lo, hi) = (i.min(j), i.max(j));
        let step = 1.0 / (RES - 1) as f64;
        ProbePart {
            rect: Rect::interval(lo as f64 * step, hi as f64 * step),
            level,
        }
    });
    prop::collection::vec(part, 1..4).prop_map(|parts| CompactProbe::new(parts).unwrap())
}

proptest! {
    #[test]
    fn hits_are_monotone_in_the_field(a in field(), b in field(), k in probe()) {
        let hi = pointwise_max(&[a.clone(), b]).unwrap();
        if hypo_hits(&a, &k).unwrap() {
            prop_assert!(hypo_hits(&hi, &k).unwrap());
        }
    }

    #[test]
    fn max_hits_iff_some_field_hits(fs in prop::collection::vec(field(), 1..5), k in probe()) {
        let joined = pointwise_max(&fs).unwrap();
        let any = fs.iter().any(|f| hypo_hits(f, &k).unwrap());
        prop_assert_eq!(hypo_hits(&joined, &k).unwrap(), any);
    }

    #[test]
    fn pointwise_max_lattice_laws(a in field(), b in field(), c in field()) {
        let m = |x: &GridField, y: &GridField| pointwise_max(&[x.clone(), y.clone()]).unwrap();
        prop_assert_eq!(m(&a, &b), m(&b, &a));
        prop_assert_eq!(m(&m(&a, &b), &c), m(&a, &m(&b, &c)));
        prop_assert_eq!(m(&a, &a), a);
    }

    #[test]
    fn hull_dominates_and_is_monotone(a in field(), b in field()) {
        let hull = usc_hull_grid(&a);
        for (h, v) in hull.values().iter().zip(a.values()) {
            prop_assert!(h >= v);
        }
        let upper = pointwise_max(&[a.clone(), b]).unwrap();
        let upper_hull = usc_hull_grid(&upper);
        for (lo, hi) in hull.values().iter().zip(upper_hull.values()) {
            prop_assert!(lo <= hi);
        }
    }

    #[test]
    fn constant_sequences_converge(z in field(), radius in 1usize..4) {
        let seq = vec![z.clone(); 6];
        prop_assert_eq!(hypo_converges(&seq, &z, radius, 0.0).unwrap(), HypoVerdict::Pass);
    }
}

fn spike(d: &Domain, at: f64, height: f64) -> GridField {
    let node = d.nearest_node(&[at]);
    GridField::from_fn(d.clone(), |c| {
        if d.nearest_node(&c[..1]) == node {
            ExtReal::Finite(height)
        } else {
            ExtReal::ZERO
        }
    })
}

#[test]
fn moving_and_growing_spikes() {
    let d = Domain::interval(0.0, 1.0, 65).unwrap();
    let limit = spike(&d, 0.0, 1.0);
    let moving: Vec<GridField> = (1..=64).map(|n| spike(&d, 1.0 / n as f64, 1.0)).collect();
    assert_eq!(hypo_converges(&moving, &limit, 2, 0.0).unwrap(), HypoVerdict::Pass);
    let growing: Vec<GridField> = (1..=64)
        .map(|n| spike(&d, 1.0 / n as f64, n as f64))
        .collect();
    assert_eq!(
        hypo_converges(&growing, &limit, 2, 0.0).unwrap(),
        HypoVerdict::FailUpper
    );
}
