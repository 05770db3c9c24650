//! Line-oriented text format for preprocessed datasets.
//!
//! ```text
//! sanmove-dataset 1
//! users<TAB>M
//! user<TAB>index<TAB>external id
//! locations<TAB>N
//! location<TAB>index<TAB>external id<TAB>lat<TAB>lon
//! train<TAB>user index<TAB>loc,timestamp,slot<TAB>loc,timestamp,slot ...
//! test<TAB>user index<TAB>...
//! ```
//! Floats use Rust's shortest round-trip formatting, so reading a written
//! file reproduces the dataset exactly.

use std::io::{BufRead, Write};

use super::{DataError, Dataset, UserSequences, Visit, Vocab};
use crate::data::slots::NUM_SLOTS;

pub const DATASET_MAGIC: &str = "sanmove-dataset 1";

pub fn write_dataset<W: Write>(data: &Dataset, mut out: W) -> Result<(), DataError> {
    writeln!(out, "{DATASET_MAGIC}")?;
    writeln!(out, "users\t{}", data.vocab.num_users())?;
    for (i, id) in data.vocab.users().iter().enumerate() {
        writeln!(out, "user\t{i}\t{id}")?;
    }
    writeln!(out, "locations\t{}", data.vocab.num_locations())?;
    for i in 1..=data.vocab.num_locations() {
        let (lat, lon) = data.vocab.coord(i).expect("real location has coordinates");
        let id = data.vocab.location_id(i).expect("real location has an id");
        writeln!(out, "location\t{i}\t{id}\t{lat}\t{lon}")?;
    }
    for (tag, pick) in [("train", true), ("test", false)] {
        for u in &data.users {
            let sessions = if pick { &u.train } else { &u.test };
            for s in sessions {
                write!(out, "{tag}\t{}", u.user)?;
                for v in s {
                    write!(out, "\t{},{},{}", v.location, v.timestamp, v.slot)?;
                }
                writeln!(out)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn dataset_to_string(data: &Dataset) -> String {
    let mut buf = Vec::new();
    write_dataset(data, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("dataset text is utf-8")
}

fn bad(line: usize, message: impl Into<String>) -> DataError {
    DataError::Format {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T, DataError> {
    s.parse().map_err(|_| bad(line, format!("bad {what}: {s:?}")))
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<Dataset, DataError> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |expect: &str| -> Result<(usize, String), DataError> {
        match lines.next() {
            Some((n, l)) => Ok((n, l?)),
            None => Err(bad(0, format!("unexpected end of file, expected {expect}"))),
        }
    };

    let (n, magic) = next("header")?;
    if magic != DATASET_MAGIC {
        return Err(bad(n, format!("bad header {magic:?}")));
    }

    let (n, l) = next("user count")?;
    let m: usize = match l.split('\t').collect::<Vec<_>>()[..] {
        ["users", c] => parse_num(c, n, "user count")?,
        _ => return Err(bad(n, "expected users line")),
    };
    let mut users = Vec::with_capacity(m);
    for i in 0..m {
        let (n, l) = next("user")?;
        match l.splitn(3, '\t').collect::<Vec<_>>()[..] {
            ["user", ix, id] if parse_num::<usize>(ix, n, "user index")? == i => users.push(id.to_string()),
            _ => return Err(bad(n, "expected user line")),
        }
    }

    let (n, l) = next("location count")?;
    let count: usize = match l.split('\t').collect::<Vec<_>>()[..] {
        ["locations", c] => parse_num(c, n, "location count")?,
        _ => return Err(bad(n, "expected locations line")),
    };
    let mut locations = Vec::with_capacity(count);
    for i in 1..=count {
        let (n, l) = next("location")?;
        match l.split('\t').collect::<Vec<_>>()[..] {
            ["location", ix, id, lat, lon] if parse_num::<usize>(ix, n, "location index")? == i => {
                locations.push((
                    id.to_string(),
                    parse_num(lat, n, "latitude")?,
                    parse_num(lon, n, "longitude")?,
                ));
            }
            _ => return Err(bad(n, "expected location line")),
        }
    }
    let vocab = Vocab::from_parts(users, locations)?;

    let mut per_user: Vec<UserSequences> = (0..m)
        .map(|u| UserSequences {
            user: u,
            train: Vec::new(),
            test: Vec::new(),
        })
        .collect();
    for (n, l) in lines {
        let l = l?;
        if l.is_empty() {
            continue;
        }
        let mut fields = l.split('\t');
        let tag = fields.next().unwrap_or_default();
        let user: usize = parse_num(fields.next().unwrap_or_default(), n, "user index")?;
        if user >= m {
            return Err(bad(n, format!("user index {user} out of range")));
        }
        let mut visits = Vec::new();
        for f in fields {
            let parts: Vec<&str> = f.split(',').collect();
            let [loc, ts, slot] = parts[..] else {
                return Err(bad(n, format!("bad visit {f:?}")));
            };
            let v = Visit {
                location: parse_num(loc, n, "location")?,
                timestamp: parse_num(ts, n, "timestamp")?,
                slot: parse_num(slot, n, "slot")?,
            };
            if v.location > count || v.slot >= NUM_SLOTS {
                return Err(bad(n, format!("visit out of range {f:?}")));
            }
            visits.push(v);
        }
        match tag {
            "train" => per_user[user].train.push(visits),
            "test" => per_user[user].test.push(visits),
            other => return Err(bad(n, format!("unknown record tag {other:?}"))),
        }
    }
    per_user.retain(|u| !u.train.is_empty() || !u.test.is_empty());
    Ok(Dataset { vocab, users: per_user })
}
