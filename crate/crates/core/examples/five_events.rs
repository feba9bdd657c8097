//! Simulate a year with five slow-slip-like events and run SSAID on it.
//!
//!     cargo run --release -p ssaid-core --example five_events -- 0.2

use ssaid_core::bench::success;
use ssaid_core::simulate::{add_noise, generate_sse_like, NoiseSpec, SseSignalSpec};
use ssaid_core::{rmse, ssaid_detect, SsaidConfig};

fn main() -> ssaid_core::Result<()> {
    let c_wn: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.15);
    let (signal, truth) = generate_sse_like(&SseSignalSpec::default())?;
    let x = add_noise(&signal, &NoiseSpec { c_wn, seed: 1 })?;

    let res = ssaid_detect(&x, &SsaidConfig::desk())?;
    println!("truth    {:?}", truth.locations());
    println!("detected {:?}", res.detection.locations());
    println!("{} of {} groups in SNL", res.in_snl_groups.len(), res.all_groups.len());
    if let Ok(e) = rmse(&res.detection, &truth) {
        println!("rmse {e:.2}, success {}", success(&res.detection, &truth, 3.0));
    }
    for w in &res.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
