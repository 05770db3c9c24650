use std::collections::BTreeSet;

/// Number of weekly time slots: 24 weekday hours followed by 24 weekend hours.
pub const NUM_SLOTS: usize = 48;

/// Maps a UTC timestamp plus timezone offset to its weekly slot.
///
/// Weekday hour `h` maps to slot `h`, weekend (Saturday/Sunday) hour `h`
/// to `24 + h`.
pub fn time_to_slot(timestamp: i64, tz_offset_min: i32) -> usize {
    let local = timestamp + i64::from(tz_offset_min) * 60;
    let day = local.div_euclid(86_400);
    let hour = (local.rem_euclid(86_400) / 3600) as usize;
    // 1970-01-01 was a Thursday; weekday 0 = Monday
    let weekday = (day + 3).rem_euclid(7);
    if weekday >= 5 {
        24 + hour
    } else {
        hour
    }
}

/// Jaccard similarity between the location sets observed in each pair of slots.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotSimilarityTable {
    lambda: Vec<f64>,
}

impl SlotSimilarityTable {
    /// Builds the table from `(slot, location)` observations. Pad location 0
    /// is ignored.
    pub fn from_observations(obs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); NUM_SLOTS];
        for (slot, loc) in obs {
            if loc != 0 && slot < NUM_SLOTS {
                sets[slot].insert(loc);
            }
        }
        let mut lambda = vec![0.0; NUM_SLOTS * NUM_SLOTS];
        for c in 0..NUM_SLOTS {
            for j in c..NUM_SLOTS {
                let union = sets[c].union(&sets[j]).count();
                let value = if union == 0 {
                    0.0
                } else {
                    sets[c].intersection(&sets[j]).count() as f64 / union as f64
                };
                lambda[c * NUM_SLOTS + j] = value;
                lambda[j * NUM_SLOTS + c] = value;
            }
        }
        Self { lambda }
    }

    /// Table with every entry equal to `value`; handy for tests.
    pub fn constant(value: f64) -> Self {
        Self {
            lambda: vec![value; NUM_SLOTS * NUM_SLOTS],
        }
    }

    pub fn get(&self, c: usize, j: usize) -> f64 {
        self.lambda[c * NUM_SLOTS + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambda
    }

    /// Softmax of `λ[c, ·]` over all 48 slots. Diagnostic only; the attention
    /// path normalizes over sequence positions instead.
    pub fn slot_distribution(&self, c: usize) -> [f64; NUM_SLOTS] {
        let row = &self.lambda[c * NUM_SLOTS..(c + 1) * NUM_SLOTS];
        let mut out = [0.0; NUM_SLOTS];
        let total: f64 = row.iter().map(|v| v.exp()).sum();
        for (o, v) in out.iter_mut().zip(row) {
            *o = v.exp() / total;
        }
        out
    }
}
