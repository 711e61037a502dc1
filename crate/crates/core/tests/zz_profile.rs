use dp2_core::{
    has_bm_obstruction_with, is_everywhere_locally_soluble, CoefficientTriple, PipelineConfig,
};
use std::time::Instant;

#[test]
#[ignore = "scratch profiler"]
fn stage_costs() {
    let t = 10i64;
    let mut triples = Vec::new();
    for a0 in -t..=t {
        for a1 in -t..=t {
            for a2 in -t..=t {
                if a0 != 0 && a1 != 0 && a2 != 0 {
                    triples.push(CoefficientTriple::new([a0, a1, a2]).unwrap());
                }
            }
        }
    }
    println!("triples: {}", triples.len());

    let s = Instant::now();
    let els: Vec<bool> = triples
        .iter()
        .map(|a| is_everywhere_locally_soluble(a).unwrap_or(false))
        .collect();
    let n_els = els.iter().filter(|&&b| b).count();
    println!("ELS pass: {:?} ({} soluble)", s.elapsed(), n_els);

    let cfg = PipelineConfig::default();
    let mut slow: Vec<(u128, [i64; 3], String)> = Vec::new();
    let s = Instant::now();
    let mut by_reason: std::collections::HashMap<String, (u64, u128)> = Default::default();
    for a in &triples {
        let s1 = Instant::now();
        let d = has_bm_obstruction_with(a, &cfg);
        let us = s1.elapsed().as_micros();
        let e = by_reason.entry(format!("{:?}/{}", d.status, d.reason)).or_default();
        e.0 += 1;
        e.1 += us;
        slow.push((us, a.coefficients(), format!("{:?}/{}", d.status, d.reason)));
    }
    println!("full pipeline pass: {:?}", s.elapsed());
    let mut rows: Vec<_> = by_reason.into_iter().collect();
    rows.sort_by_key(|r| std::cmp::Reverse(r.1 .1));
    for (k, (n, us)) in rows {
        println!("{k}: n={n} total={}ms avg={}us", us / 1000, us / n as u128);
    }
    slow.sort_by_key(|r| std::cmp::Reverse(r.0));
    for (us, a, k) in slow.iter().take(12) {
        println!("slow {a:?} {us}us {k}");
    }
}
