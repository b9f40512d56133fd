use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use deepcvx::decompose::decompose;
use deepcvx::eval::{run_agentic, EvalConfig, RuleOracle};
use deepcvx::expr::{parse, print};
use deepcvx::jensen::{jensen_scan, JensenConfig};
use deepcvx::synth::{synthesize, Label, SynthesisTarget};
use deepcvx_bench::{instances, DEPTHS};

fn synthesis(c: &mut Criterion) {
    let mut g = c.benchmark_group("synthesize");
    g.sample_size(20);
    for label in Label::ALL {
        for d in DEPTHS {
            g.bench_with_input(BenchmarkId::new(label.as_str(), d), &d, |b, &d| {
                let mut seed = 0;
                b.iter(|| {
                    seed += 1;
                    synthesize(&SynthesisTarget::new(label, d, seed)).unwrap()
                })
            });
        }
    }
    g.finish();
}

fn text_and_decomposition(c: &mut Criterion) {
    let insts = instances(Label::Convex, 3);
    let mut g = c.benchmark_group("decompose");
    for inst in &insts {
        let text = print(&inst.expression);
        g.bench_with_input(BenchmarkId::new("parse", inst.depth), &text, |b, t| {
            b.iter(|| parse(black_box(t)).unwrap())
        });
        for len in [10, 100] {
            g.bench_with_input(BenchmarkId::new(format!("max_len_{len}"), inst.depth), &inst.expression, |b, e| {
                b.iter(|| decompose(black_box(e), len))
            });
        }
    }
    g.finish();
}

fn scan(c: &mut Criterion) {
    let insts = instances(Label::Concave, 4);
    let cfg = JensenConfig::default();
    let mut g = c.benchmark_group("jensen_scan");
    g.sample_size(10);
    for inst in &insts {
        g.bench_with_input(BenchmarkId::from_parameter(inst.depth), &inst.expression, |b, e| {
            b.iter(|| jensen_scan(black_box(e), &cfg))
        });
    }
    g.finish();
}

fn agentic(c: &mut Criterion) {
    let insts = instances(Label::Neither, 5);
    let cfg = EvalConfig { granularity: 10, record_timing: false, ..EvalConfig::default() };
    let mut g = c.benchmark_group("agentic_oracle");
    g.sample_size(10);
    for inst in &insts {
        for focused in [false, true] {
            let name = if focused { "focused" } else { "full" };
            g.bench_with_input(BenchmarkId::new(name, inst.depth), inst, |b, i| {
                b.iter(|| run_agentic(i, &RuleOracle, &cfg, focused))
            });
        }
    }
    g.finish();
}

criterion_group!(benches, synthesis, text_and_decomposition, scan, agentic);
criterion_main!(benches);
