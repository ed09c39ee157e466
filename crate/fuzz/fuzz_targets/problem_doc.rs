#![no_main]

use libfuzzer_sys::fuzz_target;
use vipclip::problems::{evaluate, probe_property, AffineProblem, ProbedProperty};

// Problem documents are the replay format for experiments. Deserialization
// enforces the certificate invariants, so anything it accepts must behave:
// F(x*) ~ 0, probes run without panicking, and serialization round-trips.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(problem) = AffineProblem::from_json(text) else { return };

    let fx = evaluate(&problem, problem.solution()).expect("solution has the right dimension");
    let norm: f64 = fx.iter().map(|v| v * v).sum::<f64>().sqrt();
    let offset_norm: f64 = problem.offset().iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(
        norm <= 1e-10 * (1.0 + offset_norm) * (1.0 + 1e-12),
        "accepted problems must vanish at their solution"
    );

    if problem.dim() <= 16 {
        for prop in [
            ProbedProperty::Monotone,
            ProbedProperty::StarMonotone,
            ProbedProperty::Snc,
            ProbedProperty::Qsm,
            ProbedProperty::Sc,
            ProbedProperty::Lipschitz,
        ] {
            let _ = probe_property(&problem, prop, 1.0, 8, 0);
        }
    }

    let back = AffineProblem::from_json(&problem.to_json()).expect("emitted problems reparse");
    assert_eq!(problem, back, "problem round-trip must be lossless");
});
