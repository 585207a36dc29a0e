//! Resource profiling of one run: wall time, process CPU, resident memory
//! and disk I/O, sampled from a background thread.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

/// Sampler period (20 Hz).
const SAMPLE_PERIOD: Duration = Duration::from_millis(50);

const MB: f64 = 1024.0 * 1024.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unavailable {
    pub metric: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub wall_seconds: f64,
    /// Process CPU time over wall time, ×100. May exceed 100 with threads.
    pub cpu_percent: Option<f64>,
    /// Highest CPU percentage over a single sampling interval.
    pub peak_cpu_percent: Option<f64>,
    /// Resident set size at the first sample, MB.
    pub first_ram_mb: Option<f64>,
    pub peak_ram_mb: Option<f64>,
    pub disk_read_mb: Option<f64>,
    pub disk_write_mb: Option<f64>,
    pub sampling_hz: f64,
    pub samples: usize,
    pub unavailable: Vec<Unavailable>,
    /// The profiled closure panicked; the metrics cover the run up to then.
    pub failed: bool,
}

/// Process CPU time in seconds.
pub fn process_cpu_seconds() -> Option<f64> {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid, writable timespec for the duration of the call.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    (rc == 0).then_some(ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9)
}

/// Resident set size in bytes, from `/proc/self/status`.
fn resident_bytes() -> Result<u64, String> {
    let status = std::fs::read_to_string("/proc/self/status").map_err(|e| format!("/proc/self/status: {e}"))?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmRSS:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse::<u64>().ok())
        .map(|kb| kb * 1024)
        .ok_or_else(|| "VmRSS missing from /proc/self/status".to_string())
}

/// Storage-layer byte counters `(read_bytes, write_bytes)` from `/proc/self/io`.
fn io_counters() -> Result<(u64, u64), String> {
    let io = std::fs::read_to_string("/proc/self/io").map_err(|e| format!("/proc/self/io: {e}"))?;
    let field = |name: &str| {
        io.lines()
            .find_map(|l| l.strip_prefix(name))
            .and_then(|v| v.trim().parse::<u64>().ok())
            .ok_or_else(|| format!("{} missing from /proc/self/io", name.trim_end_matches(':')))
    };
    Ok((field("read_bytes:")?, field("write_bytes:")?))
}

struct Shared {
    stop: AtomicBool,
    peak_rss: AtomicU64,
    peak_cpu_bits: AtomicU64,
    samples: AtomicU64,
}

fn sampler(shared: Arc<Shared>) {
    let mut last_wall = Instant::now();
    let mut last_cpu = process_cpu_seconds();
    loop {
        let stopping = shared.stop.load(Ordering::Acquire);
        if let Ok(rss) = resident_bytes() {
            shared.peak_rss.fetch_max(rss, Ordering::AcqRel);
        }
        let now = Instant::now();
        let cpu = process_cpu_seconds();
        if let (Some(c0), Some(c1)) = (last_cpu, cpu) {
            let dt = now.duration_since(last_wall).as_secs_f64();
            if dt >= SAMPLE_PERIOD.as_secs_f64() * 0.5 {
                let pct = 100.0 * (c1 - c0) / dt;
                // Non-negative floats order the same as their bit patterns.
                shared.peak_cpu_bits.fetch_max(pct.max(0.0).to_bits(), Ordering::AcqRel);
                last_wall = now;
                last_cpu = cpu;
            }
        }
        shared.samples.fetch_add(1, Ordering::AcqRel);
        if stopping {
            break;
        }
        thread::sleep(SAMPLE_PERIOD);
    }
}

/// Runs `f` while sampling the process, returning its result (`None` if it
/// panicked) and the measurements.
pub fn profile<T>(f: impl FnOnce() -> T) -> (Option<T>, ResourceReport) {
    let mut unavailable = Vec::new();
    let first_rss = resident_bytes();
    let io_before = io_counters();
    let cpu_before = process_cpu_seconds();
    let shared = Arc::new(Shared {
        stop: AtomicBool::new(false),
        peak_rss: AtomicU64::new(*first_rss.as_ref().unwrap_or(&0)),
        peak_cpu_bits: AtomicU64::new(0f64.to_bits()),
        samples: AtomicU64::new(0),
    });
    let start = Instant::now();
    let handle = {
        let shared = Arc::clone(&shared);
        thread::spawn(move || sampler(shared))
    };

    let outcome = catch_unwind(AssertUnwindSafe(f));

    let wall = start.elapsed().as_secs_f64();
    let cpu_after = process_cpu_seconds();
    let io_after = io_counters();
    shared.stop.store(true, Ordering::Release);
    let _ = handle.join();

    let cpu_percent = match (cpu_before, cpu_after) {
        (Some(a), Some(b)) => Some(100.0 * (b - a) / wall),
        _ => {
            unavailable.push(Unavailable {
                metric: "cpu".into(),
                reason: "process CPU clock not readable".into(),
            });
            None
        }
    };
    let peak_cpu_percent = cpu_percent.map(|avg| f64::from_bits(shared.peak_cpu_bits.load(Ordering::Acquire)).max(avg));

    let (first_ram_mb, peak_ram_mb) = match first_rss {
        Ok(first) => (
            Some(first as f64 / MB),
            Some(shared.peak_rss.load(Ordering::Acquire).max(first) as f64 / MB),
        ),
        Err(reason) => {
            unavailable.push(Unavailable {
                metric: "ram".into(),
                reason,
            });
            (None, None)
        }
    };

    let (disk_read_mb, disk_write_mb) = match (io_before, io_after) {
        (Ok((r0, w0)), Ok((r1, w1))) => (
            Some(r1.saturating_sub(r0) as f64 / MB),
            Some(w1.saturating_sub(w0) as f64 / MB),
        ),
        (Err(reason), _) | (_, Err(reason)) => {
            for metric in ["disk_read", "disk_write"] {
                unavailable.push(Unavailable {
                    metric: metric.into(),
                    reason: reason.clone(),
                });
            }
            (None, None)
        }
    };

    let failed = outcome.is_err();
    let report = ResourceReport {
        wall_seconds: wall,
        cpu_percent,
        peak_cpu_percent,
        first_ram_mb,
        peak_ram_mb,
        disk_read_mb,
        disk_write_mb,
        sampling_hz: 1.0 / SAMPLE_PERIOD.as_secs_f64(),
        samples: shared.samples.load(Ordering::Acquire) as usize,
        unavailable,
        failed,
    };
    (outcome.ok(), report)
}
