use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use modconv::transform::{itft, moddft_with, tft};
use modconv::{Decomposition, Direction, TransformOpts, TwiddleTable};
use modconv_bench::{field, residues};

fn full_transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("moddft");
    for k in [8u32, 12, 16] {
        let n = 1usize << k;
        let table = TwiddleTable::new(field(), n).unwrap();
        let x = residues(n, 1);
        group.throughput(Throughput::Elements(n as u64));
        for plan in [
            Decomposition::default_for(n),
            Decomposition::default_for(n).reversed(),
        ] {
            let opts = TransformOpts::with_plan(plan.clone());
            group.bench_with_input(BenchmarkId::new(plan.to_string(), n), &x, |b, x| {
                b.iter(|| {
                    moddft_with(black_box(x), &table, Direction::Forward, &opts, None).unwrap()
                })
            });
        }
    }
    group.finish();
}

fn truncated_transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("tft");
    for k in [8u32, 12, 16] {
        let l = 1usize << k;
        let table = TwiddleTable::new(field(), l).unwrap();
        for n in [l / 2 + 1, 3 * l / 4, l] {
            let x = residues(n, 2);
            group.bench_with_input(
                BenchmarkId::new("forward", format!("{l}/{n}")),
                &x,
                |b, x| b.iter(|| tft(&table, black_box(x), n, None).unwrap()),
            );
            let xhat = tft(&table, &x, n, None).unwrap();
            group.bench_with_input(
                BenchmarkId::new("inverse", format!("{l}/{n}")),
                &xhat,
                |b, xhat| b.iter(|| itft(&table, black_box(xhat), None).unwrap()),
            );
        }
    }
    group.finish();
}

criterion_group!(benches, full_transforms, truncated_transforms);
criterion_main!(benches);
