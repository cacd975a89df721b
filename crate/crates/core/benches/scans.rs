use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use blackwell::auditor::{audit, error_census, AuditConfig};
use blackwell::decision::{DecisionProblem, Selector, Welfare, WelfareMode};
use blackwell::distortions::Distortion;
use blackwell::par::Execution;
use blackwell::simplex::Belief;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn census(c: &mut Criterion) {
    let mut group = c.benchmark_group("error_census");
    let d = Distortion::grether(1.6, 0.8).unwrap();
    let mu = Belief::new(vec![0.5, 0.3, 0.2]).unwrap();
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, "n3-grid151"), |b| {
            b.iter(|| error_census(&d, &mu, 151, 1e-9, exec).unwrap())
        });
    }
    group.finish();
}

fn convexity(c: &mut Criterion) {
    let mut group = c.benchmark_group("convexity_scan");
    let d = Distortion::shrinkage(0.6).unwrap();
    let mu = Belief::new(vec![0.4, 0.35, 0.25]).unwrap();
    let problem = DecisionProblem::random(&mut ChaCha8Rng::seed_from_u64(3), 3, 6);
    let selector = Selector::default();
    let w = Welfare {
        problem: &problem,
        rule: &d,
        prior: &mu,
        selector: &selector,
        mode: WelfareMode::Single,
    };
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, "n3-grid200"), |b| {
            b.iter(|| w.convexity_violations(200, 1e-9, 11, exec).unwrap())
        });
    }
    group.finish();
}

fn random_sweep(c: &mut Criterion) {
    // A rule that respects the order, so the audit spends its whole budget.
    let mut group = c.benchmark_group("audit_sweep");
    group.sample_size(10);
    let d = Distortion::occ_coarse(0.3, 0.7, 0.2, 0.8).unwrap();
    let mu = Belief::new(vec![0.5, 0.5]).unwrap();
    for (name, exec) in MODES {
        let cfg = AuditConfig {
            grid: 101,
            budget: 2000,
            exec,
            ..AuditConfig::default()
        };
        group.bench_function(BenchmarkId::new(name, "coarse-budget2000"), |b| {
            b.iter(|| audit(&d, &mu, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, census, convexity, random_sweep);
criterion_main!(benches);
