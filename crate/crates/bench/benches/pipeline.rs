use criterion::{criterion_group, criterion_main, Criterion};

use multizero_core::cones::{cone_feasible, ConstraintSystem, Relation};
use multizero_core::model::parse_system;
use multizero_core::{decide, EngineOptions};

const HHK: &str = "\
C 4 6
1 0 0 -1 0 0
0 1 0 0 -1 0
0 0 1 -1 -1 0
0 0 0 1 1 -1
M 6 6
1 0 0 0 0 0
0 1 0 0 0 0
0 0 1 0 0 0
0 0 1 0 1 0
0 0 0 1 1 0
0 0 0 0 0 1
L 2 6
1 1 1 1 0 0
0 0 0 0 1 1
";

fn bench_decide(c: &mut Criterion) {
    let sys = parse_system(HHK).unwrap();
    let opts = EngineOptions {
        parallel: false,
        ..EngineOptions::default()
    };
    c.bench_function("decide_hhk_with_witness", |b| {
        b.iter(|| decide(&sys, &opts).unwrap())
    });
    let no_witness = EngineOptions {
        construct_witness: false,
        ..opts
    };
    c.bench_function("decide_hhk_certificate_only", |b| {
        b.iter(|| decide(&sys, &no_witness).unwrap())
    });
}

fn bench_cone_feasible(c: &mut Criterion) {
    // fixed moderately sized strict cone: cyclic differences plus positivity
    let names: Vec<String> = (1..=8).map(|i| format!("x{i}")).collect();
    let mut sys = ConstraintSystem::new(names);
    for v in 0..8usize {
        sys.push_sparse(&[(v, 1)], Relation::Gt);
        sys.push_sparse(&[(v, 2), ((v + 1) % 8, -1)], Relation::Ge);
    }
    sys.push_sparse(&[(0, 1), (3, -1), (5, 1)], Relation::Eq);
    c.bench_function("cone_feasible_8var", |b| {
        b.iter(|| cone_feasible(&sys).unwrap())
    });
}

fn bench_linear_algebra(c: &mut Criterion) {
    let sys = parse_system(HHK).unwrap();
    c.bench_function("kernel_basis_principal_hhk", |b| {
        b.iter(|| sys.c.kernel_basis_principal().unwrap())
    });
    c.bench_function("rref_hhk", |b| b.iter(|| sys.c.rref()));
}

criterion_group!(benches, bench_decide, bench_cone_feasible, bench_linear_algebra);
criterion_main!(benches);
