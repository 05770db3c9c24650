use super::{CheckIn, DataError};

/// Consecutive check-ins of one user with no internal gap of `gap_hours` or more.
#[derive(Clone, Debug, PartialEq)]
pub struct Session {
    pub records: Vec<CheckIn>,
}

impl Session {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first_timestamp(&self) -> Option<i64> {
        self.records.first().map(|r| r.timestamp)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UserTrajectory {
    pub user_id: String,
    /// Check-in count before sessionization and merging.
    pub raw_records: usize,
    pub sessions: Vec<Session>,
}

impl UserTrajectory {
    pub fn record_count(&self) -> usize {
        self.sessions.iter().map(Session::len).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SessionRules {
    pub gap_hours: f64,
    pub merge_minutes: f64,
}

impl Default for SessionRules {
    fn default() -> Self {
        Self {
            gap_hours: 72.0,
            merge_minutes: 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FilterRules {
    pub min_user_records: usize,
    pub min_session_len: usize,
    pub min_sessions: usize,
}

impl Default for FilterRules {
    fn default() -> Self {
        Self {
            min_user_records: 10,
            min_session_len: 5,
            min_sessions: 5,
        }
    }
}

/// Splits one user's time-ordered check-ins into sessions.
///
/// Gaps are measured against the last *kept* record, so the output is a
/// fixed point: re-sessionizing the flattened output reproduces it.
pub fn sessionize(records: &[CheckIn], rules: SessionRules) -> Result<Vec<Session>, DataError> {
    let gap = (rules.gap_hours * 3600.0).round() as i64;
    let merge = (rules.merge_minutes * 60.0).round() as i64;
    for (i, w) in records.windows(2).enumerate() {
        if w[1].timestamp < w[0].timestamp {
            return Err(DataError::Unsorted {
                user: w[1].user_id.clone(),
                index: i + 1,
            });
        }
        if w[1].user_id != w[0].user_id {
            return Err(DataError::MixedUsers);
        }
    }

    let mut sessions: Vec<Session> = Vec::new();
    for rec in records {
        let last = sessions.last().and_then(|s| s.records.last());
        match last {
            Some(l) if rec.timestamp - l.timestamp < gap => {
                let dup = rec.location_id == l.location_id && rec.timestamp - l.timestamp < merge;
                if !dup {
                    if let Some(current) = sessions.last_mut() {
                        current.records.push(rec.clone());
                    }
                }
            }
            _ => sessions.push(Session {
                records: vec![rec.clone()],
            }),
        }
    }
    Ok(sessions)
}

/// Applies the user-record, session-length and session-count thresholds, in that order.
pub fn filter_dataset(users: Vec<UserTrajectory>, rules: FilterRules) -> Vec<UserTrajectory> {
    users
        .into_iter()
        .filter(|u| u.raw_records >= rules.min_user_records)
        .filter_map(|mut u| {
            u.sessions.retain(|s| s.len() >= rules.min_session_len);
            (u.sessions.len() >= rules.min_sessions).then_some(u)
        })
        .collect()
}

/// Number of training sessions out of `n >= 2`: `ceil(ratio * n)`, capped so
/// that at least one session is left for testing.
pub fn train_session_count(n: usize, ratio: f64) -> usize {
    ((ratio * n as f64 - 1e-9).ceil() as usize).clamp(1, n - 1)
}

/// Chronological per-user split into the first [`train_session_count`]
/// sessions and the rest.
pub fn split_train_test(
    user: &UserTrajectory,
    ratio: f64,
) -> Result<(Vec<Session>, Vec<Session>), DataError> {
    let n = user.sessions.len();
    if n < 2 {
        return Err(DataError::CannotSplit {
            user: user.user_id.clone(),
            sessions: n,
        });
    }
    let train = train_session_count(n, ratio);
    let mut sessions = user.sessions.clone();
    sessions.sort_by_key(|s| s.first_timestamp());
    let test = sessions.split_off(train);
    Ok((sessions, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t_min: i64, loc: &str) -> CheckIn {
        CheckIn {
            user_id: "u".into(),
            location_id: loc.into(),
            timestamp: 1_000_000_000 + t_min * 60,
            tz_offset_min: 0,
            lat: 0.0,
            lon: 0.0,
        }
    }

    fn times(s: &Session) -> Vec<i64> {
        s.records.iter().map(|r| (r.timestamp - 1_000_000_000) / 60).collect()
    }

    fn user(session_lens: &[usize], raw: usize) -> UserTrajectory {
        let mut t = 0;
        let sessions = session_lens
            .iter()
            .map(|&n| {
                let records = (0..n)
                    .map(|i| {
                        t += 60;
                        rec(t, &format!("l{i}"))
                    })
                    .collect();
                t += 100 * 60;
                Session { records }
            })
            .collect();
        UserTrajectory {
            user_id: "u".into(),
            raw_records: raw,
            sessions,
        }
    }

    #[test]
    fn gap_rule_hand_trace() {
        let recs = [rec(0, "a"), rec(10 * 60, "b"), rec(100 * 60, "c")];
        let s = sessionize(&recs, SessionRules::default()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(times(&s[0]), vec![0, 600]);
        assert_eq!(times(&s[1]), vec![6000]);
    }

    #[test]
    fn gap_of_exactly_72h_splits() {
        let recs = [rec(0, "a"), rec(72 * 60, "b")];
        assert_eq!(sessionize(&recs, SessionRules::default()).unwrap().len(), 2);
    }

    #[test]
    fn merge_keeps_earlier_same_location_record() {
        let recs = [rec(0, "a"), rec(5, "a")];
        let s = sessionize(&recs, SessionRules::default()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(times(&s[0]), vec![0]);

        // different venues are never merged
        let recs = [rec(0, "a"), rec(5, "b")];
        assert_eq!(sessionize(&recs, SessionRules::default()).unwrap()[0].len(), 2);
    }

    #[test]
    fn singleton_and_unsorted() {
        let s = sessionize(&[rec(3, "a")], SessionRules::default()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].len(), 1);
        let err = sessionize(&[rec(5, "a"), rec(1, "b")], SessionRules::default()).unwrap_err();
        assert!(matches!(err, DataError::Unsorted { index: 1, .. }));
        assert!(sessionize(&[], SessionRules::default()).unwrap().is_empty());
    }

    #[test]
    fn filter_examples() {
        let rules = FilterRules::default();
        assert!(filter_dataset(vec![user(&[5, 4], 9)], rules).is_empty());

        let kept = filter_dataset(vec![user(&[5, 5, 5, 5, 4, 5], 29)], rules);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].sessions.len(), 5);
        assert!(kept[0].sessions.iter().all(|s| s.len() == 5));

        assert!(filter_dataset(vec![user(&[5, 5, 5, 5, 3], 23)], rules).is_empty());
    }

    #[test]
    fn split_examples() {
        let (tr, te) = split_train_test(&user(&[5; 10], 50), 0.8).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        let (tr, te) = split_train_test(&user(&[5; 5], 25), 0.8).unwrap();
        assert_eq!((tr.len(), te.len()), (4, 1));
        let (tr, te) = split_train_test(&user(&[5; 2], 10), 0.8).unwrap();
        assert_eq!((tr.len(), te.len()), (1, 1));
        assert!(matches!(
            split_train_test(&user(&[5], 5), 0.8),
            Err(DataError::CannotSplit { sessions: 1, .. })
        ));
    }
}
