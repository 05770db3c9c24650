use std::collections::{BTreeMap, HashMap};

use super::{CheckIn, DataError};

/// Reserved location index for padding and out-of-vocabulary venues.
pub const PAD_LOCATION: usize = 0;

/// Dense index spaces for users (`0..M`) and locations (`1..=N`, 0 = pad).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Vocab {
    users: Vec<String>,
    user_index: HashMap<String, usize>,
    /// `locations[i - 1]` is the external id of location index `i`.
    locations: Vec<String>,
    location_index: HashMap<String, usize>,
    /// Indexed by location index; entry 0 is unused.
    coords: Vec<(f64, f64)>,
}

impl Vocab {
    /// Vocabulary over no data at all.
    pub fn empty() -> Self {
        Self {
            coords: vec![(0.0, 0.0)],
            ..Self::default()
        }
    }

    /// Rebuilds a vocabulary from explicit tables (used by the dataset reader
    /// and synthetic generators). `locations[i]` describes index `i + 1`.
    pub fn from_parts(users: Vec<String>, locations: Vec<(String, f64, f64)>) -> Result<Self, DataError> {
        let mut vocab = Self::empty();
        for (i, u) in users.into_iter().enumerate() {
            if vocab.user_index.insert(u.clone(), i).is_some() {
                return Err(DataError::DuplicateId(u));
            }
            vocab.users.push(u);
        }
        for (i, (id, lat, lon)) in locations.into_iter().enumerate() {
            if vocab.location_index.insert(id.clone(), i + 1).is_some() {
                return Err(DataError::DuplicateId(id));
            }
            vocab.locations.push(id);
            vocab.coords.push((lat, lon));
        }
        Ok(vocab)
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    /// `N`, the number of real locations. Embedding tables have `N + 1` rows.
    pub fn num_locations(&self) -> usize {
        self.locations.len()
    }

    pub fn user(&self, id: &str) -> Option<usize> {
        self.user_index.get(id).copied()
    }

    pub fn user_id(&self, index: usize) -> &str {
        &self.users[index]
    }

    /// Location index of an external id; unknown venues map to the pad index.
    pub fn encode_location(&self, id: &str) -> usize {
        self.location_index.get(id).copied().unwrap_or(PAD_LOCATION)
    }

    pub fn location_id(&self, index: usize) -> Option<&str> {
        index.checked_sub(1).and_then(|i| self.locations.get(i)).map(String::as_str)
    }

    /// Mean observed coordinate of a location; `None` for the pad index.
    pub fn coord(&self, index: usize) -> Option<(f64, f64)> {
        (index != PAD_LOCATION).then(|| self.coords.get(index).copied()).flatten()
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }
}

/// Builds the vocabulary from training check-ins. Ids are assigned in sorted
/// order of the external ids; coordinates are averaged per venue.
pub fn build_vocab<'a>(train: impl IntoIterator<Item = &'a CheckIn>) -> Result<Vocab, DataError> {
    let mut users: BTreeMap<&str, ()> = BTreeMap::new();
    let mut locs: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    for c in train {
        users.insert(&c.user_id, ());
        let e = locs.entry(&c.location_id).or_insert((0.0, 0.0, 0));
        e.0 += c.lat;
        e.1 += c.lon;
        e.2 += 1;
    }
    if users.is_empty() {
        return Err(DataError::EmptyTrainingSet);
    }
    Vocab::from_parts(
        users.into_keys().map(str::to_string).collect(),
        locs.into_iter()
            .map(|(id, (lat, lon, n))| (id.to_string(), lat / n as f64, lon / n as f64))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(user: &str, loc: &str, lat: f64) -> CheckIn {
        CheckIn {
            user_id: user.into(),
            location_id: loc.into(),
            timestamp: 1,
            tz_offset_min: 0,
            lat,
            lon: 0.0,
        }
    }

    #[test]
    fn counts_users_and_locations() {
        let data = vec![
            c("a", "l1", 0.0),
            c("a", "l2", 0.0),
            c("b", "l3", 0.0),
            c("b", "l4", 0.0),
            c("c", "l5", 0.0),
            c("c", "l6", 0.0),
            c("c", "l7", 0.0),
            c("c", "l1", 0.0),
        ];
        let v = build_vocab(&data).unwrap();
        assert_eq!(v.num_users(), 3);
        assert_eq!(v.num_locations(), 7);
        assert_eq!(v.encode_location("l1"), 1);
        assert_eq!(v.encode_location("l7"), 7);
        assert_eq!(v.encode_location("test-only"), PAD_LOCATION);
        assert_eq!(v.location_id(7), Some("l7"));
        assert_eq!(v.location_id(0), None);
        assert_eq!(v.coord(0), None);
    }

    #[test]
    fn jittered_coordinates_are_averaged() {
        let v = build_vocab(&[c("a", "x", 40.1), c("a", "x", 40.2)]).unwrap();
        assert!((v.coord(1).unwrap().0 - 40.15).abs() < 1e-12);
    }

    #[test]
    fn empty_training_set_is_an_error() {
        assert!(matches!(build_vocab(&[]), Err(DataError::EmptyTrainingSet)));
    }
}
