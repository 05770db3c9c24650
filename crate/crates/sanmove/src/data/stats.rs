use std::collections::HashSet;
use std::fmt::Write as _;

use super::{CheckIn, Dataset, UserTrajectory};

/// Size summary of one pipeline stage.
///
/// `records` counts check-ins and `locations` counts distinct venues; both
/// are reported because published tables are ambiguous about which one a
/// "locations" column holds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DatasetStats {
    pub users: usize,
    pub records: usize,
    pub locations: usize,
    pub sessions: usize,
    pub first_timestamp: Option<i64>,
    pub last_timestamp: Option<i64>,
}

impl DatasetStats {
    pub fn span_seconds(&self) -> i64 {
        match (self.first_timestamp, self.last_timestamp) {
            (Some(a), Some(b)) => b - a,
            _ => 0,
        }
    }

    pub fn of_checkins(checkins: &[CheckIn]) -> Self {
        let users: HashSet<&str> = checkins.iter().map(|c| c.user_id.as_str()).collect();
        let locs: HashSet<&str> = checkins.iter().map(|c| c.location_id.as_str()).collect();
        Self {
            users: users.len(),
            records: checkins.len(),
            locations: locs.len(),
            sessions: 0,
            first_timestamp: checkins.iter().map(|c| c.timestamp).min(),
            last_timestamp: checkins.iter().map(|c| c.timestamp).max(),
        }
    }

    pub fn of_trajectories(users: &[UserTrajectory]) -> Self {
        let records = users
            .iter()
            .flat_map(|u| u.sessions.iter())
            .flat_map(|s| s.records.iter());
        let mut stats = Self {
            users: users.len(),
            sessions: users.iter().map(|u| u.sessions.len()).sum(),
            ..Self::default()
        };
        let mut locs = HashSet::new();
        for r in records {
            stats.records += 1;
            locs.insert(r.location_id.as_str());
            stats.first_timestamp = Some(stats.first_timestamp.map_or(r.timestamp, |t| t.min(r.timestamp)));
            stats.last_timestamp = Some(stats.last_timestamp.map_or(r.timestamp, |t| t.max(r.timestamp)));
        }
        stats.locations = locs.len();
        stats
    }

    /// Stats over the train and/or test halves of an encoded dataset.
    /// Distinct locations count vocabulary indices, so out-of-vocabulary
    /// venues collapse into the pad index.
    pub fn of_dataset(data: &Dataset, train: bool, test: bool) -> Self {
        let mut stats = Self::default();
        let mut locs = HashSet::new();
        for u in &data.users {
            let mut sessions: Vec<&Vec<super::Visit>> = Vec::new();
            if train {
                sessions.extend(&u.train);
            }
            if test {
                sessions.extend(&u.test);
            }
            if sessions.is_empty() {
                continue;
            }
            stats.users += 1;
            stats.sessions += sessions.len();
            for v in sessions.into_iter().flatten() {
                stats.records += 1;
                locs.insert(v.location);
                stats.first_timestamp = Some(stats.first_timestamp.map_or(v.timestamp, |t| t.min(v.timestamp)));
                stats.last_timestamp = Some(stats.last_timestamp.map_or(v.timestamp, |t| t.max(v.timestamp)));
            }
        }
        stats.locations = locs.len();
        stats
    }
}

/// Per-stage statistics in pipeline order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StatsReport {
    pub stages: Vec<(String, DatasetStats)>,
}

impl StatsReport {
    pub fn push(&mut self, stage: &str, stats: DatasetStats) {
        self.stages.push((stage.to_string(), stats));
    }

    pub fn stage(&self, name: &str) -> Option<&DatasetStats> {
        self.stages.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["stage", "users", "records", "locations", "sessions", "span_seconds"])
            .expect("in-memory write");
        for (name, s) in &self.stages {
            w.write_record([
                name.clone(),
                s.users.to_string(),
                s.records.to_string(),
                s.locations.to_string(),
                s.sessions.to_string(),
                s.span_seconds().to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<24} {:>8} {:>10} {:>10} {:>9} {:>10}",
            "stage", "users", "records", "locations", "sessions", "span_days"
        );
        for (name, s) in &self.stages {
            let _ = writeln!(
                out,
                "{:<24} {:>8} {:>10} {:>10} {:>9} {:>10.1}",
                name,
                s.users,
                s.records,
                s.locations,
                s.sessions,
                s.span_seconds() as f64 / 86_400.0
            );
        }
        out
    }
}
