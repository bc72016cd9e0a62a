use dhmeasure::exact::{qf, Q};
use dhmeasure::multiplicity::*;
use dhmeasure::qmarginal::{moment_polytope, MarginalProblem, ReportFrame};
use dhmeasure::rootdata::RepSpec;
use proptest::prelude::*;

#[test]
fn exhaustive_against_characters_up_to_six_boxes() {
    for n in 1..=6 {
        let ds = YoungDiagram::all(n);
        for a in &ds {
            for b in &ds {
                for c in &ds {
                    let g = kronecker(a, b, c).unwrap();
                    assert_eq!(g, character_oracle(a, b, c).unwrap(), "{a} {b} {c}");
                    assert_eq!(g, kronecker(b, c, a).unwrap());
                    assert_eq!(g, kronecker(b, a, c).unwrap());
                }
            }
        }
    }
}

#[test]
fn rows_and_columns_up_to_twenty() {
    for k in 1..=20 {
        let (r, c) = (YoungDiagram::row(k), YoungDiagram::column(k));
        assert_eq!(kronecker(&r, &r, &r).unwrap(), 1);
        assert_eq!(kronecker(&r, &c, &c).unwrap(), 1);
        let zero = u128::from(k == 1);
        assert_eq!(kronecker(&r, &r, &c).unwrap(), zero, "k = {k}");
        assert_eq!(kronecker(&c, &c, &c).unwrap(), zero, "k = {k}");
    }
}

#[test]
fn plethysm_content_up_to_ten() {
    for k in 1..=10usize {
        let dec = plethysm_decomposition(k, 2).unwrap();
        let want: Vec<(i64, u128)> = (0..=k / 2).rev().map(|j| (2 * k as i64 - 4 * j as i64, 1)).collect();
        assert_eq!(dec.into_iter().collect::<Vec<_>>(), want, "k = {k}");
    }
}

#[test]
fn qbinomial_matches_monomial_enumeration() {
    for k in 0..=8 {
        let m = WeightMultiplicityFn::for_rep(&RepSpec::sym(2, 2), k).unwrap();
        for (w, c) in plethysm_character_sym2(k) {
            assert_eq!(m.at(&[w]), c);
        }
    }
}

#[test]
fn bravyi_multiplicity_cloud_lies_in_polytope() {
    let spec = vec![qf(4, 7), qf(2, 7), qf(1, 7), Q::from_integer(0.into())];
    let p = MarginalProblem::orbit(RepSpec::tensor(&[2, 2]), spec).in_frame(ReportFrame::Weyl);
    let poly = moment_polytope(&p).unwrap();
    let atoms = multiplicity_measure(&p, 28).unwrap();
    assert!(atoms.len() > 20);
    for a in &atoms {
        assert!(poly.contains(&a.point.coords), "{:?}", a.point.coords);
    }
}

#[test]
fn three_qubit_cloud_lies_in_polytope() {
    let p = MarginalProblem::pure(RepSpec::tensor(&[2, 2, 2])).in_frame(ReportFrame::Weyl);
    let poly = moment_polytope(&p).unwrap();
    for k in 1..=6 {
        for a in multiplicity_measure(&p, k).unwrap() {
            assert!(poly.contains(&a.point.coords));
        }
    }
}

fn diagram(n: usize) -> impl Strategy<Value = YoungDiagram> {
    let all = YoungDiagram::all(n);
    (0..all.len()).prop_map(move |i| all[i].clone())
}

fn triple() -> impl Strategy<Value = (YoungDiagram, YoungDiagram, YoungDiagram)> {
    (1usize..=8).prop_flat_map(|n| (diagram(n), diagram(n), diagram(n)))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]
    #[test]
    fn random_triples_match_characters((a, b, c) in triple()) {
        let g = kronecker(&a, &b, &c).unwrap();
        prop_assert_eq!(g, character_oracle(&a, &b, &c).unwrap());
        prop_assert_eq!(g, kronecker(&c, &a, &b).unwrap());
    }
}
