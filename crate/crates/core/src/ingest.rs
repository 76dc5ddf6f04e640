//! Event records, binning into count tensors, and sliding history windows.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observed event: its type, the node it fired on, and when.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_type: usize,
    pub node: usize,
    pub timestamp: f64,
}

/// Occurrence numbers on a `bin x type x node` grid. Bin `t` (0-based)
/// covers the interval `(t * delta, (t + 1) * delta]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTensor {
    bin_count: usize,
    type_count: usize,
    node_count: usize,
    delta: f64,
    counts: Vec<u32>,
}

impl CountTensor {
    pub fn zeros(bin_count: usize, type_count: usize, node_count: usize, delta: f64) -> Self {
        Self {
            bin_count,
            type_count,
            node_count,
            delta,
            counts: vec![0; bin_count * type_count * node_count],
        }
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    pub fn type_count(&self) -> usize {
        self.type_count
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    #[inline]
    pub fn get(&self, t: usize, v: usize, n: usize) -> u32 {
        self.counts[(t * self.type_count + v) * self.node_count + n]
    }

    #[inline]
    pub fn add(&mut self, t: usize, v: usize, n: usize, count: u32) {
        self.counts[(t * self.type_count + v) * self.node_count + n] += count;
    }

    /// Counts of one bin as a `type x node` row-major slice.
    pub fn bin(&self, t: usize) -> &[u32] {
        let stride = self.type_count * self.node_count;
        &self.counts[t * stride..(t + 1) * stride]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Storage index of the bin holding timestamp `t`; zero goes to the first bin.
pub fn bin_index(timestamp: f64, delta: f64) -> usize {
    let one_based = (timestamp / delta).ceil() as usize;
    one_based.max(1) - 1
}

pub fn discretize(
    events: &[EventRecord],
    type_count: usize,
    node_count: usize,
    delta: f64,
    horizon: f64,
) -> Result<CountTensor> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("bin width must be positive, got {delta}")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!("horizon must be finite and nonnegative, got {horizon}")));
    }
    let bin_count = ((horizon / delta).ceil() as usize).max(1);
    let mut tensor = CountTensor::zeros(bin_count, type_count, node_count, delta);
    for (index, e) in events.iter().enumerate() {
        let reason = if e.event_type >= type_count {
            Some(format!("event type {} not below {type_count}", e.event_type))
        } else if e.node >= node_count {
            Some(format!("node {} not below {node_count}", e.node))
        } else if !(e.timestamp >= 0.0 && e.timestamp <= horizon) {
            Some(format!("timestamp {} outside [0, {horizon}]", e.timestamp))
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(Error::RecordOutOfRange { index, reason });
        }
        let t = bin_index(e.timestamp, delta).min(bin_count - 1);
        tensor.add(t, e.event_type, e.node, 1);
    }
    Ok(tensor)
}

/// The target bin plus its `omega` predecessors, most recent first.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub t_index: usize,
    /// `type x node`, row-major.
    pub target: Vec<u32>,
    /// `history[w]` is bin `t_index - 1 - w`, zero-filled before the first bin.
    pub history: Vec<Vec<u32>>,
}

pub fn make_windows(tensor: &CountTensor, omega: usize) -> Result<impl Iterator<Item = WindowSample> + '_> {
    if omega == 0 {
        return Err(Error::invalid("history length must be at least 1"));
    }
    let zeros = vec![0u32; tensor.type_count * tensor.node_count];
    Ok((0..tensor.bin_count).map(move |t| WindowSample {
        t_index: t,
        target: tensor.bin(t).to_vec(),
        history: (1..=omega)
            .map(|lag| {
                if lag <= t {
                    tensor.bin(t - lag).to_vec()
                } else {
                    zeros.clone()
                }
            })
            .collect(),
    }))
}

/// Sum all nodes into a single node.
pub fn merge_nodes(tensor: &CountTensor) -> CountTensor {
    let mut out = CountTensor::zeros(tensor.bin_count, tensor.type_count, 1, tensor.delta);
    for t in 0..tensor.bin_count {
        for v in 0..tensor.type_count {
            let sum = (0..tensor.node_count).map(|n| tensor.get(t, v, n)).sum();
            out.add(t, v, 0, sum);
        }
    }
    out
}

pub fn write_events_csv(path: &Path, events: &[EventRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["event_type", "node", "timestamp"])?;
    for e in events {
        w.write_record([e.event_type.to_string(), e.node.to_string(), e.timestamp.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_events_csv(path: &Path) -> Result<Vec<EventRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.iter().map(str::to_owned).collect::<Vec<_>>();
    if headers != ["event_type", "node", "timestamp"] {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `event_type,node,timestamp`, found `{}`", headers.join(",")),
        });
    }
    let mut events = Vec::new();
    for (idx, row) in reader.deserialize::<EventRecord>().enumerate() {
        let line = idx + 2;
        let e = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        if !(e.timestamp.is_finite() && e.timestamp >= 0.0) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("timestamp {} must be finite and nonnegative", e.timestamp),
            });
        }
        events.push(e);
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(v: usize, n: usize, t: f64) -> EventRecord {
        EventRecord {
            event_type: v,
            node: n,
            timestamp: t,
        }
    }

    #[test]
    fn empty_events() {
        let t = discretize(&[], 2, 3, 1.0, 10.0).unwrap();
        assert_eq!(t.bin_count(), 10);
        assert_eq!(t.total(), 0);
    }

    #[test]
    fn half_open_bins() {
        let t = discretize(&[ev(0, 0, 3.5)], 1, 1, 2.0, 10.0).unwrap();
        assert_eq!(t.get(1, 0, 0), 1);
        // right-closed: 4.0 stays in (2, 4]
        let t = discretize(&[ev(0, 0, 4.0)], 1, 1, 2.0, 10.0).unwrap();
        assert_eq!(t.get(1, 0, 0), 1);
        let t = discretize(&[ev(0, 0, 0.0)], 1, 1, 2.0, 10.0).unwrap();
        assert_eq!(t.get(0, 0, 0), 1);
    }

    #[test]
    fn same_cell_adds() {
        let t = discretize(&[ev(1, 2, 0.5), ev(1, 2, 0.9)], 2, 3, 1.0, 2.0).unwrap();
        assert_eq!(t.get(0, 1, 2), 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(discretize(&[], 1, 1, 0.0, 1.0).is_err());
        assert!(discretize(&[], 1, 1, -1.0, 1.0).is_err());
        match discretize(&[ev(0, 0, 0.5), ev(0, 3, 0.5)], 1, 2, 1.0, 1.0) {
            Err(Error::RecordOutOfRange { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(discretize(&[ev(0, 0, 5.0)], 1, 1, 1.0, 2.0).is_err());
    }

    #[test]
    fn window_padding_and_order() {
        let t = discretize(&[ev(0, 0, 0.5)], 1, 1, 1.0, 1.0).unwrap();
        let w: Vec<_> = make_windows(&t, 3).unwrap().collect();
        assert_eq!(w.len(), 1);
        assert!(w[0].history.iter().flatten().all(|&c| c == 0));

        let events: Vec<_> = (0..5).flat_map(|b| (0..=b).map(move |_| ev(0, 0, b as f64 + 0.5))).collect();
        let t = discretize(&events, 1, 1, 1.0, 5.0).unwrap();
        let w: Vec<_> = make_windows(&t, 2).unwrap().collect();
        assert_eq!(w.len(), 5);
        // 1-based t = 3 is storage index 2; its history is bins 2 and 1 (storage 1, 0)
        assert_eq!(w[2].history, vec![vec![2], vec![1]]);
        assert!(make_windows(&t, 0).is_err());
    }

    #[test]
    fn merge_sums_nodes() {
        let t = discretize(&[ev(0, 0, 0.5), ev(0, 1, 0.5), ev(0, 1, 0.7)], 1, 2, 1.0, 1.0).unwrap();
        let m = merge_nodes(&t);
        assert_eq!(m.node_count(), 1);
        assert_eq!(m.get(0, 0, 0), 3);
        assert_eq!(merge_nodes(&m), m);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.csv");
        let events = vec![ev(0, 1, 1.5), ev(2, 0, 3.25)];
        write_events_csv(&path, &events).unwrap();
        assert_eq!(read_events_csv(&path).unwrap(), events);

        std::fs::write(&path, "event_type,node,timestamp\n0,0,1.0\n0,zero,2.0\n").unwrap();
        match read_events_csv(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        std::fs::write(&path, "type,node,timestamp\n").unwrap();
        assert!(read_events_csv(&path).is_err());
    }
}
