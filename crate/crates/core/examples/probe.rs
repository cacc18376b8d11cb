// Scratch probe for tuning the synthetic dataset constants; not part of the
// deliverable surface.
use adrec_core::datagen::{rating_log_tsv, RatingLogConfig};
use adrec_core::eval::{run_stream, split_edges, AlgoId, SplitSpec, StreamConfig};
use adrec_core::io::{ingest_stats, parse_ratings_reader, DatasetFormat, DatasetSpec};
use std::io::Cursor;

fn main() {
    let t0 = std::time::Instant::now();
    let tsv = rating_log_tsv(&RatingLogConfig::movielens_like(1));
    let spec = DatasetSpec::new("mem", DatasetFormat::RatingsTsv);
    let events = parse_ratings_reader(Cursor::new(tsv.as_bytes()), &spec).unwrap();
    let stats = ingest_stats(&events);
    println!(
        "post-threshold: users={} items={} events={} avg_item_degree={:.2} (gen {:?})",
        stats.users,
        stats.items,
        stats.events,
        stats.avg_item_degree,
        t0.elapsed()
    );

    let args: Vec<String> = std::env::args().collect();
    if args.len() > 1 && args[1] == "stream" {
        let t = std::time::Instant::now();
        let (train, test) = split_edges(&events, &SplitSpec::new(0.10, 7)).unwrap();
        println!("train={} test={}", train.len(), test.len());
        let cfg = StreamConfig {
            measure_timing: true,
            ..StreamConfig::default()
        };
        let reports = run_stream(
            &[AlgoId::Static, AlgoId::Aaf, AlgoId::Aas],
            &train,
            &test,
            cfg,
        )
        .unwrap();
        for r in &reports {
            let m: Vec<String> = r
                .metrics
                .iter()
                .map(|m| {
                    format!(
                        "{}: auc={:.4} p@100={:.4} r@100={:.4} us={:.1}",
                        m.algo.name(),
                        m.auc,
                        m.precision[0],
                        m.recall[0],
                        m.us_per_event
                    )
                })
                .collect();
            println!(
                "l={:6} users={} | {}",
                r.edges_fed,
                r.metrics[0].users_evaluated,
                m.join(" | ")
            );
        }
        println!("stream wall time {:?}", t.elapsed());
    }

    if args.len() > 1 && args[1] == "rebuild" {
        let (train, _test) = split_edges(&events, &SplitSpec::new(0.10, 7)).unwrap();
        let mut engine = adrec_core::adaptive::AdaptiveEngine::new(adrec_core::adaptive::AdaptiveKind::Aas);
        for ev in &train {
            engine.warm_feed(ev).unwrap();
        }
        let t = std::time::Instant::now();
        engine.bulk_initialize().unwrap();
        println!("full rebuild at l={}: {:?}", train.len(), t.elapsed());
    }

    if args.len() > 1 && args[1] == "sparse" {
        use adrec_core::datagen::{sparse_stream, SparseStreamConfig};
        let events = sparse_stream(&SparseStreamConfig::delicious_like(3));
        let stats = ingest_stats(&events);
        println!(
            "sparse: users={} items={} events={} avg={:.2}",
            stats.users, stats.items, stats.events, stats.avg_item_degree
        );
        let (train, test) = split_edges(&events, &SplitSpec::new(0.10, 11)).unwrap();
        let cfg = StreamConfig {
            checkpoint_interval: 1000,
            start_threshold: 2000,
            ks: vec![100, 300, 500],
            measure_timing: false,
            warm_start: adrec_core::eval::WarmStart::Replay,
            ..StreamConfig::default()
        };
        let t = std::time::Instant::now();
        let reports = run_stream(&[AlgoId::Static, AlgoId::Aas], &train, &test, cfg).unwrap();
        for r in &reports {
            let dev = (r.metrics[1].auc - r.metrics[0].auc).abs();
            println!(
                "l={:6} static={:.4} aas={:.4} |dev|={:.6}",
                r.edges_fed, r.metrics[0].auc, r.metrics[1].auc, dev
            );
        }
        println!("sparse stream wall {:?}", t.elapsed());
    }
}
