//! Generated datasets with known structure, for smoke tests, examples and
//! benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{train_session_count, Dataset, UserSequences, Visit, Vocab, NUM_SLOTS};
use crate::error::Result;
use crate::model::{ModelConfig, Sample, SpatioTemporal};

const BASE_TIME: i64 = 1_333_238_400; // 2012-04-01 00:00 UTC
const SESSION_GAP: i64 = 4 * 24 * 3600;
const STEP: i64 = 3600;

/// Shape of a generated dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticShape {
    pub users: usize,
    pub locations: usize,
    pub sessions_per_user: usize,
    pub min_session_len: usize,
    pub max_session_len: usize,
    pub train_ratio: f64,
}

fn visit(location: usize, session: usize, step: usize) -> Visit {
    let timestamp = BASE_TIME + session as i64 * SESSION_GAP + step as i64 * STEP;
    Visit {
        location,
        timestamp,
        slot: ((timestamp / 3600) % 24) as usize,
    }
}

/// Places location `i` (1-based) on a ring of the given radius around
/// midtown Manhattan, so ring neighbours are also geographic neighbours.
fn ring_coords(n: usize, radius_km: f64) -> Vec<(f64, f64)> {
    let (lat0, lon0) = (40.7549f64, -73.9840f64);
    (0..n)
        .map(|i| {
            let angle = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let dlat = radius_km * angle.sin() / 111.0;
            let dlon = radius_km * angle.cos() / (111.0 * lat0.to_radians().cos());
            (lat0 + dlat, lon0 + dlon)
        })
        .collect()
}

fn assemble(
    shape: &SyntheticShape,
    coords: &[(f64, f64)],
    mut next: impl FnMut(usize, Option<usize>, &mut ChaCha8Rng) -> usize,
    rng: &mut ChaCha8Rng,
) -> Result<Dataset> {
    let vocab = Vocab::from_parts(
        (0..shape.users).map(|u| format!("u{u:03}")).collect(),
        coords
            .iter()
            .enumerate()
            .map(|(i, &(lat, lon))| (format!("l{:03}", i + 1), lat, lon))
            .collect(),
    )?;
    let mut users = Vec::with_capacity(shape.users);
    for u in 0..shape.users {
        let mut sessions = Vec::with_capacity(shape.sessions_per_user);
        for s in 0..shape.sessions_per_user {
            let len = rng.gen_range(shape.min_session_len..=shape.max_session_len);
            let mut prev = None;
            let session: Vec<Visit> = (0..len)
                .map(|step| {
                    let loc = next(u, prev, rng);
                    prev = Some(loc);
                    visit(loc, s, step)
                })
                .collect();
            sessions.push(session);
        }
        let test = sessions.split_off(train_session_count(sessions.len(), shape.train_ratio));
        users.push(UserSequences {
            user: u,
            train: sessions,
            test,
        });
    }
    Ok(Dataset { vocab, users })
}

/// Every user walks the ring `1 → 2 → … → N → 1` from a random start. With
/// probability `noise` a step jumps to a uniformly random location instead,
/// and the walk continues from there.
pub fn cycle_dataset(users: usize, locations: usize, noise: f64, seed: u64) -> Result<Dataset> {
    let shape = SyntheticShape {
        users,
        locations,
        sessions_per_user: 15,
        min_session_len: 6,
        max_session_len: 10,
        train_ratio: 0.8,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = ring_coords(locations, 2.0);
    assemble(
        &shape,
        &coords,
        |_, prev, rng| match prev {
            _ if rng.gen_bool(noise) => rng.gen_range(1..=locations),
            None => rng.gen_range(1..=locations),
            Some(l) => l % locations + 1,
        },
        &mut rng,
    )
}

/// Locations scattered over a few kilometres; each user has a private
/// preference order over locations and moves to the preferred one among the
/// `neighbours` nearest to the current location. Both who the user is and
/// where they are decide the next step. `noise` is the chance of a uniformly
/// random step.
pub fn ablation_dataset(users: usize, locations: usize, neighbours: usize, noise: f64, seed: u64) -> Result<Dataset> {
    let shape = SyntheticShape {
        users,
        locations,
        sessions_per_user: 15,
        min_session_len: 6,
        max_session_len: 10,
        train_ratio: 0.8,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lat0, lon0) = (40.7549f64, -73.9840f64);
    let coords: Vec<(f64, f64)> = (0..locations)
        .map(|_| (lat0 + rng.gen_range(-0.03..0.03), lon0 + rng.gen_range(-0.04..0.04)))
        .collect();
    let near: Vec<Vec<usize>> = (0..locations)
        .map(|i| {
            let mut others: Vec<usize> = (0..locations).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| {
                let da = crate::stnova::haversine_km(coords[i], coords[a]);
                let db = crate::stnova::haversine_km(coords[i], coords[b]);
                da.total_cmp(&db).then(a.cmp(&b))
            });
            others.truncate(neighbours);
            others.into_iter().map(|j| j + 1).collect()
        })
        .collect();
    let preference: Vec<Vec<f64>> = (0..users)
        .map(|_| (0..=locations).map(|_| rng.gen::<f64>()).collect())
        .collect();
    assemble(
        &shape,
        &coords,
        |u, prev, rng| match prev {
            _ if rng.gen_bool(noise) => rng.gen_range(1..=locations),
            None => rng.gen_range(1..=locations),
            Some(l) => *near[l - 1]
                .iter()
                .max_by(|&&a, &&b| preference[u][a].total_cmp(&preference[u][b]))
                .expect("at least one neighbour"),
        },
        &mut rng,
    )
}

/// Renders every session of `data` as raw check-in lines (tab separated,
/// UTC), so generated data can go through the preprocessing pipeline.
pub fn to_checkin_tsv(data: &Dataset) -> String {
    let mut out = String::new();
    for u in &data.users {
        let user = data.vocab.user_id(u.user);
        for v in u.train.iter().chain(&u.test).flatten() {
            let venue = data.vocab.location_id(v.location).unwrap_or("unknown");
            let (lat, lon) = data.vocab.coord(v.location).unwrap_or((0.0, 0.0));
            let when = chrono::DateTime::from_timestamp(v.timestamp, 0)
                .expect("timestamp in range")
                .format("%a %b %d %H:%M:%S +0000 %Y");
            out.push_str(&format!("{user}\t{venue}\tcat\tPlace\t{lat:.6}\t{lon:.6}\t0\t{when}\n"));
        }
    }
    out
}

/// Random-walk samples of fixed length for timing runs: `sessions` recent
/// sequences of `seq_len` records, each with `history_len` records of history.
pub fn bench_samples(
    seq_len: usize,
    sessions: usize,
    history_len: usize,
    num_users: usize,
    num_locations: usize,
    config: &ModelConfig,
    seed: u64,
) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = ring_coords(num_locations, 3.0);
    let mut all: Vec<Option<(f64, f64)>> = vec![None];
    all.extend(coords.iter().copied().map(Some));
    let locs: Vec<usize> = (1..=num_locations).collect();
    let walk = |len: usize, rng: &mut ChaCha8Rng| -> Vec<Visit> {
        (0..len)
            .map(|step| Visit {
                location: *locs.choose(rng).expect("locations"),
                timestamp: BASE_TIME + step as i64 * STEP,
                slot: rng.gen_range(0..NUM_SLOTS),
            })
            .collect()
    };
    let history: Vec<Vec<Visit>> = (0..num_users).map(|_| walk(history_len.max(1), &mut rng)).collect();
    let recent: Vec<(usize, Vec<Visit>)> = (0..sessions)
        .map(|i| (i % num_users, walk(seq_len, &mut rng)))
        .collect();
    let st = SpatioTemporal {
        slot_table: crate::data::compute_slot_table(recent.iter().map(|(_, s)| s.as_slice())),
        coords: all,
    };
    recent
        .iter()
        .map(|(u, s)| Sample::new(*u, &history[*u], s, &st, config))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_cycle_follows_the_ring() {
        let d = cycle_dataset(4, 5, 0.0, 1).unwrap();
        for u in &d.users {
            assert_eq!((u.train.len(), u.test.len()), (12, 3));
            for s in u.train.iter().chain(&u.test) {
                assert!(s.windows(2).all(|w| w[1].location == w[0].location % 5 + 1));
            }
        }
        assert_eq!(d.vocab.num_locations(), 5);
    }

    #[test]
    fn generators_are_seeded() {
        assert_eq!(cycle_dataset(3, 6, 0.1, 9).unwrap(), cycle_dataset(3, 6, 0.1, 9).unwrap());
        assert_eq!(
            ablation_dataset(3, 10, 3, 0.1, 2).unwrap(),
            ablation_dataset(3, 10, 3, 0.1, 2).unwrap()
        );
        assert_ne!(cycle_dataset(3, 6, 0.1, 9).unwrap(), cycle_dataset(3, 6, 0.1, 10).unwrap());
    }

    #[test]
    fn ablation_steps_stay_among_neighbours_without_noise() {
        let d = ablation_dataset(2, 12, 3, 0.0, 4).unwrap();
        let coords = d.coords();
        for u in &d.users {
            for s in &u.train {
                for w in s.windows(2) {
                    let here = coords[w[0].location].unwrap();
                    let dist = crate::stnova::haversine_km(here, coords[w[1].location].unwrap());
                    let closer = (1..=12)
                        .filter(|&j| j != w[0].location)
                        .filter(|&j| crate::stnova::haversine_km(here, coords[j].unwrap()) < dist)
                        .count();
                    assert!(closer < 3);
                }
            }
        }
    }

    #[test]
    fn rendered_checkins_preprocess_back_to_the_same_sequences() {
        let d = cycle_dataset(3, 6, 0.0, 5).unwrap();
        let back = crate::workflow::preprocess_text(&to_checkin_tsv(&d), &crate::data::PipelineRules::default())
            .unwrap()
            .dataset;
        assert_eq!(back.vocab.num_users(), 3);
        let locs = |x: &Dataset| -> Vec<Vec<String>> {
            x.users
                .iter()
                .flat_map(|u| u.train.iter().chain(&u.test))
                .map(|s| s.iter().map(|v| x.vocab.location_id(v.location).unwrap_or("?").to_string()).collect())
                .collect()
        };
        assert_eq!(locs(&back), locs(&d));
        assert_eq!(back.users[0].train.len(), 12);
    }

    #[test]
    fn bench_samples_have_requested_shape() {
        let s = bench_samples(16, 5, 8, 2, 30, &ModelConfig::default(), 0);
        assert_eq!(s.len(), 5);
        assert!(s.iter().all(|x| x.recent.len() == 16 && x.history.len() == 8 && x.gamma.len() == 256));
    }
}
