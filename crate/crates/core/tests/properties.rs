//! Property tests over synthesized and randomly built expressions.

use std::collections::BTreeMap;

use deepcvx::atoms::AtomId;
use deepcvx::dcp::{certified_label, CertifiedLabel};
use deepcvx::decompose::{decompose, focused_context, full_context, recompose};
use deepcvx::expr::{parse, print, round_sig3, Expr};
use deepcvx::jensen::{jensen_scan, numeric_classify, JensenConfig, NumericClass};
use deepcvx::synth::{synthesize, Label, SynthesisTarget};
use proptest::prelude::*;

const STRICT_UNARY: [AtomId; 17] = [
    AtomId::Exp,
    AtomId::ExpNeg,
    AtomId::Softplus,
    AtomId::Hinge,
    AtomId::Max0,
    AtomId::NegSqrt,
    AtomId::Norm1,
    AtomId::Norm2,
    AtomId::NormInf,
    AtomId::Log,
    AtomId::Sqrt,
    AtomId::NegExp,
    AtomId::NegSoftplus,
    AtomId::NegMax0,
    AtomId::NegNorm1,
    AtomId::NegNorm2,
    AtomId::NegNormInf,
];

fn coeff() -> impl Strategy<Value = f64> {
    (0.1f64..3.0, any::<bool>()).prop_map(|(m, s)| round_sig3(if s { m } else { -m }))
}

fn affine() -> impl Strategy<Value = Expr> {
    (coeff(), -3.0f64..3.0).prop_map(|(a, b)| Expr::affine(a, round_sig3(b)))
}

/// Random strict-atom trees with no curvature guidance at all.
fn random_expr(depth: u32) -> impl Strategy<Value = Expr> {
    affine().prop_recursive(depth, 16, 3, |inner| {
        prop_oneof![
            4 => (0..STRICT_UNARY.len(), inner.clone()).prop_map(|(k, u)| Expr::call(STRICT_UNARY[k], u)),
            2 => (coeff(), inner.clone(), coeff(), inner.clone(), -3.0f64..3.0)
                .prop_map(|(a, u, b, v, c)| Expr::lin(vec![(a, u), (b, v)], round_sig3(c))),
            1 => (inner.clone(), inner.clone(), any::<bool>())
                .prop_map(|(u, v, m)| Expr::apply(if m { AtomId::Max } else { AtomId::LogSumExp }, vec![u, v]).unwrap()),
        ]
    })
}

fn label() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::Convex), Just(Label::Concave), Just(Label::Neither)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn synthesized_instances_round_trip(l in label(), depth in 1usize..25, seed in any::<u64>()) {
        prop_assume!(!(l == Label::Neither && depth == 1));
        let inst = synthesize(&SynthesisTarget::new(l, depth, seed)).unwrap();
        let e = &inst.expression;
        prop_assert_eq!(e.structural_depth(), depth);
        prop_assert_eq!(&parse(&print(e)).unwrap(), e);
        let mut prev = usize::MAX;
        for g in [10usize, 50, 100] {
            let (subs, graph) = decompose(e, g);
            prop_assert_eq!(&recompose(&subs).unwrap(), e);
            prop_assert!(subs.len() <= prev);
            prev = subs.len();
            prop_assert_eq!(graph.sinks(), vec![subs.len()]);
            let states: BTreeMap<usize, ()> = subs.iter().map(|s| (s.index, ())).collect();
            for s in &subs {
                prop_assert_eq!(&s.parents, &s.body.refs());
                prop_assert!(s.parents.iter().all(|&j| j < s.index));
                let foc = focused_context(s.index, &subs, &graph, &states).unwrap();
                let full = full_context(s.index, &subs, &states).unwrap();
                prop_assert_eq!(full.len(), s.index - 1);
                prop_assert!(foc.len() <= full.len());
            }
        }
        match l {
            Label::Convex => prop_assert_eq!(certified_label(e).unwrap().label, CertifiedLabel::Convex),
            Label::Concave => prop_assert_eq!(certified_label(e).unwrap().label, CertifiedLabel::Concave),
            Label::Neither => prop_assert!(inst.counterexamples.is_some()),
        }
    }

    #[test]
    fn random_trees_round_trip(e in random_expr(4)) {
        prop_assert_eq!(&parse(&print(&e)).unwrap(), &e);
        for g in [10usize, 50, 100] {
            prop_assert_eq!(&recompose(&decompose(&e, g).0).unwrap(), &e);
        }
    }

    #[test]
    fn certification_agrees_with_numeric_oracle(e in random_expr(3)) {
        let Ok(cert) = certified_label(&e) else { return Ok(()) };
        let numeric = numeric_classify(&e, &JensenConfig::default());
        match cert.label {
            CertifiedLabel::Convex => prop_assert!(
                matches!(numeric, NumericClass::Convex | NumericClass::Affine | NumericClass::Inconclusive),
                "{} certified convex, numerically {:?}", e, numeric
            ),
            CertifiedLabel::Concave => prop_assert!(
                matches!(numeric, NumericClass::Concave | NumericClass::Affine | NumericClass::Inconclusive),
                "{} certified concave, numerically {:?}", e, numeric
            ),
            CertifiedLabel::Uncertified => {}
        }
    }

    #[test]
    fn scans_are_deterministic(e in random_expr(2), seed in any::<u64>()) {
        let cfg = JensenConfig { seed, sample_count: 500, min_valid_samples: 100, ..JensenConfig::default() };
        let a = jensen_scan(&e, &cfg).ok().map(|r| (r.convex_violation_count, r.concave_violation_count, r.valid_samples));
        let b = jensen_scan(&e, &cfg).ok().map(|r| (r.convex_violation_count, r.concave_violation_count, r.valid_samples));
        prop_assert_eq!(a, b);
    }
}
