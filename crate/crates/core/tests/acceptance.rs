use std::io::Write;

use freemul::verify::{self, Criterion};

fn check(c: Criterion) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{c}").unwrap();
    out.flush().unwrap();
    assert!(c.passed, "{c}");
}

#[test]
fn haar_degeneration() {
    check(verify::haar_degeneration());
}

#[test]
fn atom_rule() {
    check(verify::atom_rule());
}

#[test]
fn bounded_density() {
    check(verify::bounded_density());
}

#[test]
fn purely_atomic_singular_part() {
    check(verify::atomic_singular_part());
}

#[test]
fn oracle_agreement() {
    check(verify::oracle_agreement(verify::DEFAULT_SEED));
}

#[test]
fn subordination_residuals() {
    check(verify::subordination_invariants());
}

#[test]
fn arc_positivity() {
    check(verify::arc_positivity_criterion());
}
