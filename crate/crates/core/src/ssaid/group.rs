use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::id::{id_detect_with, IdConfig, IdWorkspace};
use crate::rng::{add_gaussian, keyed_rng};
use crate::series::{mode, quartile3, rmse_between, TimeSeries};

/// Diagnostics of one group of `Q` noisy realizations of a partial reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    /// Number of SSA components in the reconstruction.
    pub k: usize,
    /// Noise level index, 1-based.
    pub s: usize,
    pub a_s: f64,
    /// Most frequent detected count among members.
    pub h_mode: usize,
    /// Fraction of members whose count equals `h_mode`.
    pub r2: f64,
    /// Third quartile of qualified-member RMSE against `locations`.
    pub omega3: Option<f64>,
    /// Column modes of the qualified members' locations.
    pub locations: Vec<usize>,
    pub kappa: usize,
    /// Column modes collided, leaving fewer than `h_mode` distinct locations.
    pub degenerate: bool,
    /// Sliding-window index, when the group comes from a windowed run.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub window: Option<usize>,
}

impl GroupStats {
    pub fn is_in_snl(&self, v: f64) -> bool {
        !self.degenerate && self.r2 >= 0.5 && self.h_mode != 0 && self.omega3.is_some_and(|o| o <= v)
    }
}

/// Per-thread buffers for [`run_group`].
#[derive(Debug, Default)]
pub(crate) struct GroupWorkspace {
    id: IdWorkspace,
    noisy: Vec<f64>,
    counts: Vec<usize>,
    rows: Vec<Vec<usize>>,
}

/// Run the detector on `q` realizations `y + a_s * noise`.
///
/// Member `m` draws its noise from the stream keyed by `(seed, m)`, so a group is a
/// pure function of its arguments. The returned `k` and `s` are zero; callers that
/// sweep a grid fill them in.
pub fn run_group(
    y: &TimeSeries,
    a_s: f64,
    q: usize,
    seed: u64,
    id: &IdConfig,
) -> Result<GroupStats> {
    let mut ws = GroupWorkspace::default();
    run_group_with(y.values(), a_s, q, seed, id, &mut ws)
}

pub(crate) fn run_group_with(
    y: &[f64],
    a_s: f64,
    q: usize,
    seed: u64,
    id: &IdConfig,
    ws: &mut GroupWorkspace,
) -> Result<GroupStats> {
    if q == 0 {
        return Err(Error::invalid("group needs at least one realization"));
    }
    if !(a_s.is_finite() && a_s >= 0.0) {
        return Err(Error::invalid(format!("noise level must be >= 0, got {a_s}")));
    }
    ws.counts.clear();
    ws.rows.clear();
    for m in 0..q {
        let mut rng = keyed_rng(seed, &[m as u64]);
        add_gaussian(&mut rng, y, a_s, &mut ws.noisy);
        let found = id_detect_with(&ws.noisy, id, &mut ws.id)?;
        ws.counts.push(found.count());
        ws.rows.push(found.into_locations());
    }
    let h_mode = mode(&ws.counts)?;
    let qualified: Vec<&Vec<usize>> = ws.rows.iter().filter(|r| r.len() == h_mode).collect();
    let kappa = qualified.len();
    let r2 = kappa as f64 / q as f64;

    let mut locations = Vec::with_capacity(h_mode);
    let mut column = Vec::with_capacity(kappa);
    for i in 0..h_mode {
        column.clear();
        column.extend(qualified.iter().map(|r| r[i]));
        locations.push(mode(&column)?);
    }
    locations.sort_unstable();
    locations.dedup();
    let degenerate = locations.len() < h_mode;

    let omega3 = if h_mode > 0 && !degenerate {
        let errors = qualified
            .iter()
            .map(|r| rmse_between(r, &locations))
            .collect::<Result<Vec<f64>>>()?;
        Some(quartile3(&errors)?)
    } else {
        None
    };

    Ok(GroupStats {
        k: 0,
        s: 0,
        a_s,
        h_mode,
        r2,
        omega3,
        locations,
        kappa,
        degenerate,
        window: None,
    })
}
