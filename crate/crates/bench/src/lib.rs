//! Fixed workloads shared by the benchmarks.

use dhmeasure::multiplicity::YoungDiagram;
use dhmeasure::qmarginal::{MarginalProblem, ReportFrame};
use dhmeasure::rootdata::RepSpec;

pub fn two_qubits() -> MarginalProblem {
    MarginalProblem::pure(RepSpec::tensor(&[2, 2]))
}

pub fn three_qubits() -> MarginalProblem {
    MarginalProblem::pure(RepSpec::tensor(&[2, 2, 2]))
}

pub fn bosons(n: usize) -> MarginalProblem {
    MarginalProblem::pure(RepSpec::sym(2, n)).in_frame(ReportFrame::Weyl)
}

/// A Kronecker triple of eight boxes with nontrivial intermediate sums.
pub fn kronecker_triple() -> (YoungDiagram, YoungDiagram, YoungDiagram) {
    let d = |s: &str| YoungDiagram::parse(s).expect("valid diagram");
    (d("3,3,2"), d("4,2,1,1"), d("3,2,2,1"))
}
