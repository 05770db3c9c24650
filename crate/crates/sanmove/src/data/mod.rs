//! Check-in ingestion, sessionization, filtering, train/test split and the
//! index spaces the model works in.

mod checkin;
pub mod io;
mod session;
mod slots;
mod stats;
mod vocab;

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

pub use io::{dataset_to_string, read_dataset, write_dataset};
pub use checkin::{parse_checkins, CheckIn, InputFormat, ParseReport, Reject};
pub use session::{
    filter_dataset, sessionize, split_train_test, train_session_count, FilterRules, Session, SessionRules, UserTrajectory,
};
pub use slots::{time_to_slot, SlotSimilarityTable, NUM_SLOTS};
pub use stats::{DatasetStats, StatsReport};
pub use vocab::{build_vocab, Vocab, PAD_LOCATION};

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("records of user {user} are not sorted by time (index {index})")]
    Unsorted { user: String, index: usize },
    #[error("sessionize called with records from several users")]
    MixedUsers,
    #[error("user {user} has {sessions} session(s); at least 2 are needed to split")]
    CannotSplit { user: String, sessions: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("dataset line {line}: {message}")]
    Format { line: usize, message: String },
}

/// One encoded check-in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Visit {
    pub location: usize,
    pub timestamp: i64,
    pub slot: usize,
}

/// A user's encoded sessions, split chronologically.
#[derive(Clone, Debug, PartialEq)]
pub struct UserSequences {
    pub user: usize,
    pub train: Vec<Vec<Visit>>,
    pub test: Vec<Vec<Visit>>,
}

/// Encoded, split dataset ready for training.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub vocab: Vocab,
    pub users: Vec<UserSequences>,
}

impl Dataset {
    pub fn train_sessions(&self) -> impl Iterator<Item = (usize, &[Visit])> {
        self.users
            .iter()
            .flat_map(|u| u.train.iter().map(move |s| (u.user, s.as_slice())))
    }

    /// Slot similarity table from training sessions only.
    pub fn slot_table(&self) -> SlotSimilarityTable {
        compute_slot_table(self.train_sessions().map(|(_, s)| s))
    }

    /// Location coordinates indexed by location index (pad = `None`).
    pub fn coords(&self) -> Vec<Option<(f64, f64)>> {
        (0..=self.vocab.num_locations()).map(|i| self.vocab.coord(i)).collect()
    }
}

/// Jaccard table over the locations seen in each slot of the given sessions.
pub fn compute_slot_table<'a>(sessions: impl IntoIterator<Item = &'a [Visit]>) -> SlotSimilarityTable {
    SlotSimilarityTable::from_observations(
        sessions
            .into_iter()
            .flat_map(|s| s.iter().map(|v| (v.slot, v.location))),
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineRules {
    pub session: SessionRules,
    pub filter: FilterRules,
    pub train_ratio: f64,
}

impl Default for PipelineRules {
    fn default() -> Self {
        Self {
            session: SessionRules::default(),
            filter: FilterRules::default(),
            train_ratio: 0.8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Preprocessed {
    pub dataset: Dataset,
    pub stats: StatsReport,
    pub rejects: Vec<Reject>,
}

impl Preprocessed {
    /// Rejects report, one `line<TAB>reason` entry per rejected line.
    pub fn rejects_text(&self) -> String {
        self.rejects.iter().map(|r| format!("{}\t{}\n", r.line, r.reason)).collect()
    }
}

/// Runs the whole preprocessing chain on parsed check-ins. Users are
/// processed in parallel and merged in external-id order, so the result does
/// not depend on scheduling.
pub fn preprocess(report: ParseReport, rules: &PipelineRules) -> Result<Preprocessed, DataError> {
    let mut stats = StatsReport::default();
    stats.push("raw", DatasetStats::of_checkins(&report.checkins));

    let mut by_user: BTreeMap<String, Vec<CheckIn>> = BTreeMap::new();
    for c in report.checkins {
        by_user.entry(c.user_id.clone()).or_default().push(c);
    }
    let users: Vec<(String, Vec<CheckIn>)> = by_user.into_iter().collect();
    let trajectories: Vec<UserTrajectory> = users
        .into_par_iter()
        .map(|(user_id, mut records)| {
            records.sort_by_key(|r| r.timestamp);
            let sessions = sessionize(&records, rules.session)?;
            Ok(UserTrajectory {
                user_id,
                raw_records: records.len(),
                sessions,
            })
        })
        .collect::<Result<_, DataError>>()?;
    stats.push("sessionized", DatasetStats::of_trajectories(&trajectories));

    let f = rules.filter;
    let step1: Vec<UserTrajectory> = trajectories
        .into_iter()
        .filter(|u| u.raw_records >= f.min_user_records)
        .collect();
    stats.push("user_record_filter", DatasetStats::of_trajectories(&step1));
    let step2: Vec<UserTrajectory> = step1
        .into_iter()
        .map(|mut u| {
            u.sessions.retain(|s| s.len() >= f.min_session_len);
            u
        })
        .collect();
    stats.push("session_length_filter", DatasetStats::of_trajectories(&step2));
    let kept: Vec<UserTrajectory> = step2
        .into_iter()
        .filter(|u| u.sessions.len() >= f.min_sessions)
        .collect();
    stats.push("session_count_filter", DatasetStats::of_trajectories(&kept));

    let splits = kept
        .iter()
        .map(|u| split_train_test(u, rules.train_ratio).map(|(tr, te)| (u.user_id.clone(), tr, te)))
        .collect::<Result<Vec<_>, _>>()?;

    let vocab = if splits.is_empty() {
        Vocab::empty()
    } else {
        build_vocab(
            splits
                .iter()
                .flat_map(|(_, tr, _)| tr.iter().flat_map(|s| s.records.iter())),
        )?
    };
    let encode = |s: &Session| -> Vec<Visit> {
        s.records
            .iter()
            .map(|r| Visit {
                location: vocab.encode_location(&r.location_id),
                timestamp: r.timestamp,
                slot: time_to_slot(r.timestamp, r.tz_offset_min),
            })
            .collect()
    };
    let users = splits
        .iter()
        .map(|(id, tr, te)| UserSequences {
            user: vocab.user(id).expect("every kept user has training sessions"),
            train: tr.iter().map(encode).collect(),
            test: te.iter().map(encode).collect(),
        })
        .collect();
    let dataset = Dataset { vocab, users };
    stats.push("train", DatasetStats::of_dataset(&dataset, true, false));
    stats.push("test", DatasetStats::of_dataset(&dataset, false, true));

    Ok(Preprocessed {
        dataset,
        stats,
        rejects: report.rejects,
    })
}
