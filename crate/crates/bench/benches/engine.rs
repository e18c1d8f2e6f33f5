use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use tubelogic::engine::{dc_operating_point, extract_frequency, simulate, SimConfig};
use tubelogic::netlist::{format, parse};
use tubelogic::verify::{truth_table, LogicLevels};
use tubelogic_bench::{circuit, network, ring_text, wide_text, NAND, RING3};

fn transient(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    let cfg = SimConfig::default().with_t_end(0.5);
    for n in [3, 5, 9] {
        let net = network(&ring_text(n));
        g.bench_with_input(BenchmarkId::new("ring", n), &net, |b, net| {
            b.iter(|| simulate(black_box(net), &cfg).unwrap())
        });
    }
    g.finish();

    let net = network(RING3);
    let trace = simulate(&net, &SimConfig::default().with_t_end(2.0)).unwrap();
    let probe = net.node_id("a.sense").unwrap();
    c.bench_function("extract_frequency", |b| {
        b.iter(|| extract_frequency(black_box(&trace), probe).unwrap())
    });
}

fn dc(c: &mut Criterion) {
    let nand = circuit(NAND);
    c.bench_function("truth_table/nand", |b| {
        b.iter(|| truth_table(black_box(&nand), &["A", "B"], &["Q"], &LogicLevels::default()).unwrap())
    });
    let mut wide = network(&wide_text(64));
    for i in 0..64 {
        let id = wide.node_id(&format!("a{i}")).unwrap();
        wide.fix_node(id, tubelogic::Pressure::from_kpa(145.0)).unwrap();
    }
    c.bench_function("dc_operating_point/64_nor", |b| {
        b.iter(|| dc_operating_point(black_box(&wide)).unwrap())
    });
}

fn netlist(c: &mut Criterion) {
    let text = wide_text(500);
    c.bench_function("parse/500_gates", |b| b.iter(|| parse(black_box(&text)).unwrap()));
    let parsed = parse(&text).unwrap();
    c.bench_function("format/500_gates", |b| b.iter(|| format(black_box(&parsed))));
}

criterion_group!(benches, transient, dc, netlist);
criterion_main!(benches);
