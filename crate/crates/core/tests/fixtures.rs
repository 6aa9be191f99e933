// SPDX-License-Identifier: Apache-2.0

use cgforge::characterize::build_ff_bench;
use cgforge::gating::SHARED_WITNESS_STIMULUS;
use cgforge::netlist::{build_register_demo, parse_netlist, validate, write_netlist};
use cgforge::sim::{check_equivalence, parse_stimulus, SimOptions};
use cgforge::techlib::{LibraryProfile, BUNDLED_PROFILES};
use cgforge::{insert_clock_gating, GatingMode};

const FF_BENCH: &str = include_str!("../fixtures/ff_bench.net");
const FF_BENCH_GATED: &str = include_str!("../fixtures/ff_bench_gated.net");

fn paper() -> LibraryProfile<f64> {
    LibraryProfile::bundled("paper-match").unwrap()
}

#[test]
fn bench_fixtures_match_the_builders() {
    assert_eq!(write_netlist(&build_ff_bench::<f64>(None).unwrap()), FF_BENCH);
    assert_eq!(write_netlist(&build_ff_bench(Some(&paper())).unwrap()), FF_BENCH_GATED);
    for text in [FF_BENCH, FF_BENCH_GATED] {
        let n = parse_netlist(text).unwrap();
        assert!(validate(&n).is_empty());
        assert_eq!(write_netlist(&n), text);
    }
}

#[test]
fn shared_witness_separates_the_modes() {
    let p = paper();
    let s = parse_stimulus::<f64>(SHARED_WITNESS_STIMULUS).unwrap();
    let u = build_register_demo(2).unwrap();
    let (per_ff, _) = insert_clock_gating(&u, &p, GatingMode::PerFf).unwrap();
    let (shared, _) = insert_clock_gating(&u, &p, GatingMode::Shared).unwrap();
    let opts = SimOptions::zero_init();
    assert_eq!(check_equivalence(&per_ff, &u, &p, &s, &opts).unwrap(), None);
    let d = check_equivalence(&shared, &u, &p, &s, &opts).unwrap().expect("shared gating diverges");
    assert!(d.cycle < 50, "diverged only at cycle {}", d.cycle);
    assert_eq!(d.net, "Q2");
}

#[test]
fn bundled_profiles_are_consistent() {
    for name in BUNDLED_PROFILES {
        let p: LibraryProfile<f64> = LibraryProfile::bundled(name).unwrap();
        assert_eq!(p.name, name);
        p.check_invariants().unwrap();
        let exact: LibraryProfile<cgforge::Exact> = LibraryProfile::bundled(name).unwrap();
        exact.check_invariants().unwrap();
    }
    assert!(LibraryProfile::<f64>::bundled("nonexistent").is_none());
}
