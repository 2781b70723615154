use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fdee::experiments::{run_convergence_on, CampaignSpec, Exec};

fn small_campaign() -> CampaignSpec {
    let mut spec = CampaignSpec { trials: 4, ..Default::default() };
    spec.cfg = spec.cfg.with_antennas(1, 1).with_users(1, 1);
    spec
}

fn campaign(c: &mut Criterion) {
    let spec = small_campaign();
    let mut g = c.benchmark_group("convergence_campaign");
    g.sample_size(10).measurement_time(Duration::from_secs(20));
    for (name, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_convergence_on(&spec, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, campaign);
criterion_main!(benches);
