use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ibe_bench::{explanation_response, hypothesis, layered_program};
use ibe_core::formalize::{parse_logic_text, render};
use ibe_core::generation::parse_explanation_response;

fn logic_text(c: &mut Criterion) {
    let mut group = c.benchmark_group("parse_logic_text");
    for width in [2, 4, 8] {
        let text = render(&layered_program(width, 3));
        group.bench_with_input(BenchmarkId::from_parameter(width), &text, |b, t| {
            b.iter(|| parse_logic_text(black_box(t)).unwrap())
        });
    }
    group.finish();
}

fn explanations(c: &mut Criterion) {
    let h = hypothesis();
    let mut group = c.benchmark_group("parse_explanation_response");
    for steps in [1, 4, 16] {
        let raw = explanation_response(steps);
        group.bench_with_input(BenchmarkId::from_parameter(steps), &raw, |b, r| {
            b.iter(|| parse_explanation_response(black_box(r), &h).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, logic_text, explanations);
criterion_main!(benches);
