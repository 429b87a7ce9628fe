//! Fixtures shared by the benchmarks.

use selector_core::field::{PrimeField, Rng};
use selector_core::harness::standard_suite;
use selector_core::instance::{brute_force_v_phi, AssignmentTable, SuccinctInstance};
use selector_core::lowdegree::MleTable;

/// A table of uniform field values on `{0,1}^n`.
pub fn random_table(n: usize, seed: u64) -> MleTable {
    let field = PrimeField::default();
    let mut rng = Rng::new(seed);
    MleTable::new((0..1 << n).map(|_| rng.elem(field)).collect()).expect("power-of-two length")
}

/// The largest instance of the standard suite and its true table.
pub fn largest_suite_instance() -> (SuccinctInstance, AssignmentTable) {
    let inst = standard_suite()
        .into_iter()
        .max_by_key(|i| i.m() + 3 * i.n())
        .expect("the suite is nonempty");
    let truth = brute_force_v_phi(&inst).expect("suite instances are within budget");
    (inst, truth)
}
