// Kept in its own binary so no other test shares the process while timing.

use std::time::{Duration, Instant};

use growbench::eval::profile;

#[test]
fn busy_loop_and_allocation_are_measured() {
    let (out, r) = profile(|| {
        let start = Instant::now();
        let block = vec![1u8; 64 * 1024 * 1024];
        let mut acc = 0u64;
        while start.elapsed() < Duration::from_millis(500) {
            acc = std::hint::black_box(acc.wrapping_add(block[acc as usize % block.len()] as u64));
        }
        acc
    });
    assert!(out.is_some() && !r.failed);
    assert!((0.5..0.7).contains(&r.wall_seconds), "wall {}", r.wall_seconds);
    let cpu = r.cpu_percent.unwrap();
    assert!((80.0..=105.0).contains(&cpu), "cpu {cpu}");
    assert!(r.peak_ram_mb.unwrap() - r.first_ram_mb.unwrap() >= 60.0);
    assert!(r.samples >= 5);
}

#[test]
fn panics_are_reported_not_propagated() {
    let (out, r) = profile(|| -> u32 { panic!("boom") });
    assert!(out.is_none());
    assert!(r.failed);
}
