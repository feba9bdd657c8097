use crate::error::{Error, Result};
use crate::series::DetectionResult;
use crate::series::TimeSeries;

use super::{ssaid_detect, SsaidConfig, SsaidResult};

/// Shortest segment accepted by [`ssaid_detect_sliding`].
pub const MIN_SEGMENT_LEN: usize = 10;

/// SSAID over windows of three consecutive segments of length `segment_len`.
///
/// The series is cut into `T / segment_len` segments, the last one taking the
/// remainder, and each window of three neighbouring segments is analysed on its own
/// with the same configuration. Detections from different windows that lie within
/// `v` samples of each other form one cluster; a cluster keeps the detections of the
/// window in which it sits most centrally, the earlier window winning ties.
pub fn ssaid_detect_sliding(
    series: &TimeSeries,
    config: &SsaidConfig,
    segment_len: usize,
) -> Result<SsaidResult> {
    config.validate()?;
    if segment_len < MIN_SEGMENT_LEN {
        return Err(Error::invalid(format!(
            "segment length {segment_len} below {MIN_SEGMENT_LEN}"
        )));
    }
    let len = series.len();
    if len < 3 * segment_len {
        return Err(Error::invalid(format!(
            "series of length {len} shorter than one window of {}",
            3 * segment_len
        )));
    }
    let n_segments = len / segment_len;
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut in_snl_groups = Vec::new();
    let mut all_groups = Vec::new();
    let mut warnings = Vec::new();
    for w in 0..n_segments - 2 {
        let start = w * segment_len;
        let end = if w + 3 == n_segments { len } else { start + 3 * segment_len };
        let window = series.slice(start, end - start)?;
        let res = ssaid_detect(&window, config)?;
        let mid = (end - start - 1) as f64 / 2.0;
        candidates.extend(res.detection.locations().iter().map(|&b| Candidate {
            location: start + b,
            window: w,
            offcentre: (b as f64 - mid).abs(),
        }));
        let globalise = |mut g: super::GroupStats| {
            g.window = Some(w);
            g.locations.iter_mut().for_each(|b| *b += start);
            g
        };
        in_snl_groups.extend(res.in_snl_groups.into_iter().map(globalise));
        all_groups.extend(res.all_groups.into_iter().map(globalise));
        warnings.extend(res.warnings.into_iter().map(|m| format!("window {w}: {m}")));
    }

    let merged = merge(candidates, config.rmse_threshold);
    let detection = DetectionResult::new(merged, len)?;
    Ok(SsaidResult {
        detection,
        in_snl_groups,
        all_groups,
        config_echo: config.clone(),
        warnings,
    })
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    location: usize,
    window: usize,
    offcentre: f64,
}

fn merge(mut candidates: Vec<Candidate>, radius: f64) -> Vec<usize> {
    candidates.sort_by_key(|c| (c.location, c.window));
    let mut out = Vec::new();
    let mut start = 0;
    while start < candidates.len() {
        let mut end = start + 1;
        while end < candidates.len()
            && (candidates[end].location - candidates[end - 1].location) as f64 <= radius
        {
            end += 1;
        }
        let cluster = &candidates[start..end];
        let best = cluster
            .iter()
            .min_by(|a, b| a.offcentre.total_cmp(&b.offcentre).then(a.window.cmp(&b.window)))
            .map(|c| c.window)
            .unwrap_or_default();
        out.extend(cluster.iter().filter(|c| c.window == best).map(|c| c.location));
        start = end;
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(location: usize, window: usize, offcentre: f64) -> Candidate {
        Candidate { location, window, offcentre }
    }

    #[test]
    fn merge_prefers_central_window() {
        let got = merge(vec![cand(100, 0, 20.0), cand(102, 1, 5.0), cand(300, 2, 1.0)], 3.0);
        assert_eq!(got, vec![102, 300]);
    }

    #[test]
    fn merge_ties_go_to_earlier_window() {
        let got = merge(vec![cand(51, 1, 4.0), cand(50, 0, 4.0)], 3.0);
        assert_eq!(got, vec![50]);
    }

    #[test]
    fn merge_keeps_close_pair_from_one_window() {
        let got = merge(vec![cand(40, 0, 1.0), cand(43, 0, 2.0), cand(41, 1, 30.0)], 3.0);
        assert_eq!(got, vec![40, 43]);
    }

    #[test]
    fn distant_detections_stay_separate() {
        let got = merge(vec![cand(10, 0, 50.0), cand(20, 1, 50.0)], 3.0);
        assert_eq!(got, vec![10, 20]);
    }
}
