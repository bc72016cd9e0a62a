use std::collections::BTreeSet;

use dhmeasure::exact::{q, QVec, Q};
use dhmeasure::measure_engine::{
    abelian_heckman_terms, derivative_principle_with, heckman_sum, projective_density_via_cone,
    projective_fixed_points, single_summand_density, DensityEngine, PiecewiseMeasure,
};
use dhmeasure::qmarginal::{abelian_measure, MarginalProblem, ReportFrame};
use dhmeasure::rootdata::{build_root_data, Frame, RationalVector, RepSpec};
use proptest::prelude::*;

/// Distinct integer weights in a small box whose affine span is the plane.
fn weight_system() -> impl Strategy<Value = Vec<QVec>> {
    prop::collection::btree_set((-3i64..=3, -3i64..=3), 3..=6)
        .prop_filter("affinely spanning", |s| {
            let v: Vec<_> = s.iter().collect();
            v.iter().skip(2).any(|c| {
                let (a, b) = (v[0], v[1]);
                (b.0 - a.0) * (c.1 - a.1) != (b.1 - a.1) * (c.0 - a.0)
            })
        })
        .prop_map(|s: BTreeSet<(i64, i64)>| s.into_iter().map(|(x, y)| vec![q(x), q(y)]).collect())
}

fn named(ws: &[QVec]) -> Vec<RationalVector> {
    ws.iter().map(|w| RationalVector::new(w.clone(), Frame::Named("t".into()))).collect()
}

fn same_densities(a: &PiecewiseMeasure, b: &PiecewiseMeasure) -> Result<(), TestCaseError> {
    for (c, d) in a.complex.cells.iter().zip(&a.densities) {
        prop_assert_eq!(&b.polynomial_at(&c.interior_point).unwrap(), d, "at {:?}", c.interior_point);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn wall_crossing_is_path_independent(ws in weight_system(), attempt in 1u64..40) {
        let engine = DensityEngine::projective(ws.clone()).unwrap();
        let m = single_summand_density(&named(&ws)).unwrap();
        for c in &m.complex.cells {
            prop_assert_eq!(engine.density_from(&c.interior_point, attempt).unwrap(), engine.density_at(&c.interior_point).unwrap());
        }
    }

    #[test]
    fn scaling_weights_rescales_density(ws in weight_system(), s in 2i64..=4) {
        let m = single_summand_density(&named(&ws)).unwrap();
        let scaled: Vec<QVec> = ws.iter().map(|w| w.iter().map(|c| c * q(s)).collect()).collect();
        let ms = single_summand_density(&named(&scaled)).unwrap();
        let jac = Q::new(1.into(), (s * s).into());
        for c in &m.complex.cells {
            let x = &c.interior_point;
            let sx: QVec = x.iter().map(|c| c * q(s)).collect();
            prop_assert_eq!(ms.evaluate(&sx).unwrap(), m.evaluate(x).unwrap() * &jac);
        }
        prop_assert_eq!(ms.total_mass().unwrap(), m.total_mass().unwrap());
    }

    #[test]
    fn heckman_sum_matches_direct_density(ws in weight_system()) {
        let direct = single_summand_density(&named(&ws)).unwrap();
        let terms = abelian_heckman_terms(&projective_fixed_points(&ws));
        let heck = heckman_sum(&terms, Frame::Named("t".into())).unwrap();
        same_densities(&direct, &heck)?;
    }

    #[test]
    fn cone_slice_matches_direct_density(ws in weight_system()) {
        let direct = single_summand_density(&named(&ws)).unwrap();
        let sliced = projective_density_via_cone(&named(&ws)).unwrap();
        same_densities(&direct, &sliced)?;
        prop_assert_eq!(direct.total_mass().unwrap(), sliced.total_mass().unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn derivative_order_does_not_matter(order in Just(vec![0usize, 1, 2]).prop_shuffle()) {
        let rep = RepSpec::sym(3, 2);
        let rd = build_root_data(&rep.group());
        let ab = abelian_measure(&MarginalProblem::pure(rep).in_frame(ReportFrame::Weyl)).unwrap();
        let dirs: Vec<QVec> = rd.positive_roots.iter().map(|a| a.coords.iter().map(|c| -c).collect()).collect();
        let permuted: Vec<QVec> = order.iter().map(|&i| dirs[i].clone()).collect();
        let a = derivative_principle_with(&ab, &rd, &dirs).unwrap();
        let b = derivative_principle_with(&ab, &rd, &permuted).unwrap();
        same_densities(&a, &b)?;
        same_densities(&b, &a)?;
        prop_assert_eq!(a.total_mass().unwrap(), b.total_mass().unwrap());
    }
}
