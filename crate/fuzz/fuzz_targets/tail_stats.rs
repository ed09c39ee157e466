#![no_main]

use libfuzzer_sys::fuzz_target;
use vipclip::tails::{f_lambda, histogram, quartiles, tail_report};

// The tail statistics consume raw sample buffers. Decode the input as f64
// samples and check totality plus the ordering/conservation invariants.
fuzz_target!(|data: &[u8]| {
    let samples: Vec<f64> = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    if samples.is_empty() {
        return;
    }

    if let Ok((q1, q2, q3)) = quartiles(&samples) {
        if samples.iter().all(|v| v.is_finite()) {
            assert!(q1 <= q2 && q2 <= q3, "quartiles must be ordered");
        }
    }
    let _ = f_lambda(&samples, 1.5);
    if let Ok(rep) = tail_report(&samples) {
        assert!(rep.p_er <= rep.p_mr, "thresholds nest");
        assert!((0.0..=1.0).contains(&rep.p_mr));
    }
    if let Ok(h) = histogram(&samples, 1 + data.len() % 32) {
        let total: u64 = h.counts.iter().sum();
        assert_eq!(total, samples.len() as u64, "histogram conserves mass");
    }
});
