#![no_main]

use libfuzzer_sys::fuzz_target;
use vipclip::oracle::{clip, sample_noise, NoiseModel};
use vipclip::rng::substream;

// Noise model documents gate their tail parameters at parse time (nu > 2,
// alpha > 2, p_spike in (0,1), sigma finite). Accepted models must sample
// without panicking and clipped draws must respect the level whenever the
// draw itself is finite.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(model) = serde_json::from_str::<NoiseModel>(text) else { return };

    let mut rng = substream(7, &[1]);
    for d in [1usize, 3] {
        let xi = sample_noise(&model, d, &mut rng);
        assert_eq!(xi.len(), d);
        if xi.iter().all(|v| v.is_finite()) {
            let c = clip(&xi, 1.0);
            let norm: f64 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm <= 1.0, "clipped norm {norm} exceeds the level");
        }
    }

    let json = serde_json::to_string(&model).expect("accepted models serialize");
    let back: NoiseModel = serde_json::from_str(&json).expect("emitted models reparse");
    assert_eq!(model, back, "noise model round-trip must be lossless");
});
