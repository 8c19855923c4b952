use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use remlab_core::analytic_bk::{bk_energy_chain, bk_energy_min, BkSpec};
use remlab_core::analytic_grem::{grem_curve, grem_energy, grem_variational, GremSpec};
use remlab_core::external_field::{rem_field_energy, word_grem_energy, FieldParams, Word, WordSpec};

fn grem(c: &mut Criterion) {
    let spec = GremSpec::uniform(vec![0.2, 0.3, 0.1, 0.4], vec![0.5, 2.0, 1.0, 0.7], 2.0).unwrap();
    c.bench_function("grem curve, 4 levels", |b| b.iter(|| grem_curve(black_box(&spec)).unwrap()));
    c.bench_function("grem energy, 4 levels", |b| b.iter(|| grem_energy(black_box(&spec), 1.3).unwrap()));
    let small = GremSpec::uniform(vec![0.3, 0.3, 0.4], vec![0.5, 2.0, 1.0], 3.0).unwrap();
    c.bench_function("grem variational oracle, 3 levels", |b| b.iter(|| grem_variational(black_box(&small), 1.3).unwrap()));
}

fn bk(c: &mut Criterion) {
    let mut w = BTreeMap::new();
    for (k, v) in [(0b00001, 0.5), (0b00110, 0.8), (0b11000, 0.3), (0b11111, 0.4), (0b01010, 0.6)] {
        w.insert(k, v);
    }
    let spec = BkSpec::gaussian(5, vec![0.1, 0.2, 0.3, 0.15, 0.25], w).unwrap();
    c.bench_function("bk chain, 5 symbols", |b| b.iter(|| bk_energy_chain(black_box(&spec), 1.5).unwrap()));
    c.bench_function("bk permutation minimum, 5 symbols", |b| b.iter(|| bk_energy_min(black_box(&spec), 1.5).unwrap()));
}

fn field(c: &mut Criterion) {
    let fp = FieldParams::new(1.0, 0.5).unwrap();
    c.bench_function("field energy", |b| b.iter(|| rem_field_energy(black_box(fp), 1.7).unwrap()));
    let ws = WordSpec {
        n: 3,
        words: vec![
            Word { sym: vec![1], a: 0.9 },
            Word { sym: vec![2, 3], a: 0.7 },
            Word { sym: vec![1, 2, 3], a: 0.5 },
        ],
        p: vec![0.2, 0.3, 0.5],
        h: 0.2,
    };
    c.bench_function("word dual solver, 3 symbols", |b| b.iter(|| word_grem_energy(black_box(&ws), 1.5).unwrap()));
}

criterion_group!(benches, grem, bk, field);
criterion_main!(benches);
