use cake_core::fixtures::{random_bc_dag, random_bc_tree, random_ext_tree, random_gcc_tree};
use cake_core::ir::Protocol;

#[test]
fn random_protocols_validate() {
    for seed in 0..200 {
        for p in [
            Protocol::from(random_bc_tree(seed, 3, 30)),
            Protocol::from(random_bc_dag(seed, 3, 30)),
            Protocol::from(random_ext_tree(seed, 3, 30)),
            Protocol::from(random_gcc_tree(seed, 3, 30)),
        ] {
            let r = p.validate();
            assert!(r.is_valid(), "seed {seed} {}: {}", p.model(), r.summary());
        }
    }
}
