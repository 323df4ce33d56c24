//! Differentiable neural dictionary: a growable key/value store per action.
//!
//! Lookups take the `k` nearest keys by exact brute-force search and return
//! the inverse-distance-kernel weighted mean of their values. Writes to a key
//! that is already stored (bitwise) move its value toward the new one; other
//! writes insert, evicting the least recently used entry when full.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_DELTA: f64 = 1e-3;

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Inverse distance kernel `1 / (‖a − b‖² + δ)`.
pub fn kernel(a: &[f64], b: &[f64], delta: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidConfig(format!("kernel delta must be > 0, got {delta}")));
    }
    Ok(1.0 / (squared_distance(a, b) + delta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DndEntry {
    pub key: Vec<f64>,
    pub value: Vec<f64>,
    pub last_use: u64,
    /// Insertion order; breaks distance and recency ties (oldest first).
    pub seq: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LookupResult {
    pub estimate: Vec<f64>,
    pub neighbour_count: usize,
    /// Normalised kernel weights, nearest first.
    pub weights: Vec<f64>,
    /// Entry positions matching `weights`; valid until the next write.
    pub indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum WriteOutcome {
    Inserted { evicted: Option<DndEntry> },
    Updated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct DndSnapshot {
    key_dim: usize,
    value_dim: usize,
    capacity: usize,
    delta: f64,
    clock: u64,
    next_seq: u64,
    entries: Vec<DndEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "DndSnapshot", try_from = "DndSnapshot")]
pub struct Dnd {
    key_dim: usize,
    value_dim: usize,
    capacity: usize,
    delta: f64,
    keys: Vec<f64>,
    values: Vec<f64>,
    stamps: Vec<u64>,
    seqs: Vec<u64>,
    index: HashMap<Box<[u64]>, usize>,
    clock: u64,
    next_seq: u64,
    scratch: Vec<(f64, u64, usize)>,
}

fn key_bits(key: &[f64]) -> Box<[u64]> {
    key.iter().map(|x| x.to_bits()).collect()
}

impl PartialEq for Dnd {
    fn eq(&self, other: &Self) -> bool {
        self.key_dim == other.key_dim
            && self.value_dim == other.value_dim
            && self.capacity == other.capacity
            && self.delta.to_bits() == other.delta.to_bits()
            && self.clock == other.clock
            && self.next_seq == other.next_seq
            && self.stamps == other.stamps
            && self.seqs == other.seqs
            && self.keys.iter().map(|x| x.to_bits()).eq(other.keys.iter().map(|x| x.to_bits()))
            && self
                .values
                .iter()
                .map(|x| x.to_bits())
                .eq(other.values.iter().map(|x| x.to_bits()))
    }
}

impl Dnd {
    pub fn new(key_dim: usize, value_dim: usize, capacity: usize, delta: f64) -> Result<Self> {
        if key_dim == 0 || value_dim == 0 {
            return Err(Error::InvalidConfig("dnd dimensions must be positive".into()));
        }
        if capacity == 0 {
            return Err(Error::InvalidConfig("dnd capacity must be positive".into()));
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidConfig(format!("dnd delta must be > 0, got {delta}")));
        }
        Ok(Dnd {
            key_dim,
            value_dim,
            capacity,
            delta,
            keys: Vec::new(),
            values: Vec::new(),
            stamps: Vec::new(),
            seqs: Vec::new(),
            index: HashMap::new(),
            clock: 0,
            next_seq: 0,
            scratch: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.stamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamps.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn key_dim(&self) -> usize {
        self.key_dim
    }

    pub fn value_dim(&self) -> usize {
        self.value_dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn key(&self, i: usize) -> &[f64] {
        &self.keys[i * self.key_dim..(i + 1) * self.key_dim]
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.value_dim..(i + 1) * self.value_dim]
    }

    pub fn value_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.value_dim..(i + 1) * self.value_dim]
    }

    pub fn last_use(&self, i: usize) -> u64 {
        self.stamps[i]
    }

    pub fn entry(&self, i: usize) -> DndEntry {
        DndEntry {
            key: self.key(i).to_vec(),
            value: self.value(i).to_vec(),
            last_use: self.stamps[i],
            seq: self.seqs[i],
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = DndEntry> + '_ {
        (0..self.len()).map(|i| self.entry(i))
    }

    fn check_key(&self, key: &[f64]) -> Result<()> {
        if key.len() != self.key_dim {
            return Err(Error::DimensionMismatch {
                expected: self.key_dim,
                got: key.len(),
            });
        }
        Ok(())
    }

    fn check_value(&self, value: &[f64]) -> Result<()> {
        if value.len() != self.value_dim {
            return Err(Error::DimensionMismatch {
                expected: self.value_dim,
                got: value.len(),
            });
        }
        Ok(())
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    /// Position of the entry whose key equals `key` bitwise.
    pub fn exact_match(&self, key: &[f64]) -> Option<usize> {
        if key.len() != self.key_dim {
            return None;
        }
        self.index.get(&key_bits(key)).copied()
    }

    /// Kernel-weighted estimate from the `min(k, len)` nearest entries.
    ///
    /// The participating entries are marked as used.
    pub fn lookup(&mut self, query: &[f64], k: usize) -> Result<LookupResult> {
        self.check_key(query)?;
        if self.is_empty() {
            return Err(Error::EmptyStore);
        }
        if k == 0 {
            return Err(Error::InvalidConfig("lookup needs k >= 1".into()));
        }
        let n = self.len();
        let take = k.min(n);

        let mut scratch = std::mem::take(&mut self.scratch);
        scratch.clear();
        scratch.extend(
            self.keys
                .chunks_exact(self.key_dim)
                .zip(&self.seqs)
                .enumerate()
                .map(|(i, (key, &seq))| (squared_distance(query, key), seq, i)),
        );
        let by_distance = |a: &(f64, u64, usize), b: &(f64, u64, usize)| {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        };
        if take < n {
            scratch.select_nth_unstable_by(take - 1, by_distance);
            scratch.truncate(take);
        }
        scratch.sort_unstable_by(by_distance);

        let mut weights: Vec<f64> = scratch.iter().map(|&(d2, _, _)| 1.0 / (d2 + self.delta)).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        let mut estimate = vec![0.0; self.value_dim];
        let stamp = self.tick();
        let mut indices = Vec::with_capacity(take);
        for (&(_, _, i), &w) in scratch.iter().zip(&weights) {
            for (e, v) in estimate.iter_mut().zip(self.value(i)) {
                *e += w * v;
            }
            self.stamps[i] = stamp;
            indices.push(i);
        }
        self.scratch = scratch;
        Ok(LookupResult {
            estimate,
            neighbour_count: take,
            weights,
            indices,
        })
    }

    /// Fast update of an exactly matching key, or insertion with LRU eviction.
    pub fn write(&mut self, key: &[f64], value: &[f64], fast_lr: f64) -> Result<WriteOutcome> {
        self.check_key(key)?;
        self.check_value(value)?;
        if !(fast_lr > 0.0 && fast_lr <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "fast learning rate must be in (0, 1], got {fast_lr}"
            )));
        }
        let bits = key_bits(key);
        if let Some(&i) = self.index.get(&bits) {
            let stamp = self.tick();
            self.stamps[i] = stamp;
            for (old, new) in self.value_mut(i).iter_mut().zip(value) {
                *old += fast_lr * (new - *old);
            }
            return Ok(WriteOutcome::Updated);
        }
        let evicted = if self.len() >= self.capacity {
            Some(self.evict_lru()?)
        } else {
            None
        };
        let stamp = self.tick();
        let i = self.len();
        self.keys.extend_from_slice(key);
        self.values.extend_from_slice(value);
        self.stamps.push(stamp);
        self.seqs.push(self.next_seq);
        self.next_seq += 1;
        self.index.insert(bits, i);
        Ok(WriteOutcome::Inserted { evicted })
    }

    /// Removes the entry with the oldest `last_use` stamp.
    pub fn evict_lru(&mut self) -> Result<DndEntry> {
        let victim = (0..self.len())
            .min_by_key(|&i| (self.stamps[i], self.seqs[i]))
            .ok_or(Error::EmptyStore)?;
        Ok(self.remove(victim))
    }

    fn remove(&mut self, i: usize) -> DndEntry {
        let entry = self.entry(i);
        let last = self.len() - 1;
        self.index.remove(&key_bits(&entry.key));
        if i != last {
            let (kd, vd) = (self.key_dim, self.value_dim);
            self.keys.copy_within(last * kd..(last + 1) * kd, i * kd);
            self.values.copy_within(last * vd..(last + 1) * vd, i * vd);
            self.stamps[i] = self.stamps[last];
            self.seqs[i] = self.seqs[last];
            *self
                .index
                .get_mut(&key_bits(self.key(i)))
                .expect("moved key is indexed") = i;
        }
        self.keys.truncate(last * self.key_dim);
        self.values.truncate(last * self.value_dim);
        self.stamps.truncate(last);
        self.seqs.truncate(last);
        entry
    }

    /// Writes the store in the line-oriented snapshot format:
    ///
    /// ```text
    /// dnd 1
    /// key_dim <n>
    /// value_dim <d>
    /// capacity <c>
    /// delta <δ>
    /// clock <t>
    /// next_seq <s>
    /// entries <m>
    /// <seq> <last_use> <key_1> .. <key_n> <value_1> .. <value_d>    (m lines)
    /// ```
    ///
    /// Floats use the shortest representation that parses back to the same bits.
    pub fn write_snapshot(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "dnd 1")?;
        writeln!(out, "key_dim {}", self.key_dim)?;
        writeln!(out, "value_dim {}", self.value_dim)?;
        writeln!(out, "capacity {}", self.capacity)?;
        writeln!(out, "delta {}", self.delta)?;
        writeln!(out, "clock {}", self.clock)?;
        writeln!(out, "next_seq {}", self.next_seq)?;
        writeln!(out, "entries {}", self.len())?;
        for i in 0..self.len() {
            write!(out, "{} {}", self.seqs[i], self.stamps[i])?;
            for x in self.key(i).iter().chain(self.value(i)) {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_snapshot(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let mut next = |expect: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, line)) => Ok((n + 1, line?)),
                None => Err(Error::Snapshot {
                    line: 0,
                    reason: format!("unexpected end of input, wanted {expect}"),
                }),
            }
        };
        let bad = |line: usize, reason: String| Error::Snapshot { line, reason };
        let mut header = |name: &str| -> Result<String> {
            let (n, line) = next(name)?;
            match line.split_once(' ') {
                Some((k, v)) if k == name => Ok(v.trim().to_string()),
                _ => Err(bad(n, format!("expected `{name} <value>`"))),
            }
        };
        let num = |s: String, what: &str| -> Result<u64> {
            s.parse().map_err(|_| bad(0, format!("bad {what}: {s}")))
        };
        if header("dnd")? != "1" {
            return Err(bad(1, "unsupported snapshot version".into()));
        }
        let key_dim = num(header("key_dim")?, "key_dim")? as usize;
        let value_dim = num(header("value_dim")?, "value_dim")? as usize;
        let capacity = num(header("capacity")?, "capacity")? as usize;
        let delta_s = header("delta")?;
        let delta: f64 = delta_s
            .parse()
            .map_err(|_| bad(5, format!("bad delta: {delta_s}")))?;
        let clock = num(header("clock")?, "clock")?;
        let next_seq = num(header("next_seq")?, "next_seq")?;
        let count = num(header("entries")?, "entries")? as usize;

        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, line) = next("entry")?;
            let mut fields = line.split_ascii_whitespace();
            let mut int = || -> Result<u64> {
                fields
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(n, "bad entry header".into()))
            };
            let seq = int()?;
            let last_use = int()?;
            let floats = fields
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| bad(n, e.to_string()))?;
            if floats.len() != key_dim + value_dim {
                return Err(bad(
                    n,
                    format!("expected {} numbers, got {}", key_dim + value_dim, floats.len()),
                ));
            }
            let (key, value) = floats.split_at(key_dim);
            entries.push(DndEntry {
                key: key.to_vec(),
                value: value.to_vec(),
                last_use,
                seq,
            });
        }
        Dnd::try_from(DndSnapshot {
            key_dim,
            value_dim,
            capacity,
            delta,
            clock,
            next_seq,
            entries,
        })
    }
}

impl From<Dnd> for DndSnapshot {
    fn from(d: Dnd) -> Self {
        DndSnapshot {
            key_dim: d.key_dim,
            value_dim: d.value_dim,
            capacity: d.capacity,
            delta: d.delta,
            clock: d.clock,
            next_seq: d.next_seq,
            entries: d.entries().collect(),
        }
    }
}

impl TryFrom<DndSnapshot> for Dnd {
    type Error = Error;

    fn try_from(s: DndSnapshot) -> Result<Self> {
        let mut d = Dnd::new(s.key_dim, s.value_dim, s.capacity, s.delta)?;
        if s.entries.len() > s.capacity {
            return Err(Error::Snapshot {
                line: 0,
                reason: format!("{} entries exceed capacity {}", s.entries.len(), s.capacity),
            });
        }
        for e in s.entries {
            d.check_key(&e.key)?;
            d.check_value(&e.value)?;
            let bits = key_bits(&e.key);
            if d.index.insert(bits, d.len()).is_some() {
                return Err(Error::Snapshot {
                    line: 0,
                    reason: "duplicate key".into(),
                });
            }
            d.keys.extend_from_slice(&e.key);
            d.values.extend_from_slice(&e.value);
            d.stamps.push(e.last_use);
            d.seqs.push(e.seq);
        }
        d.clock = s.clock;
        d.next_seq = s.next_seq;
        Ok(d)
    }
}
