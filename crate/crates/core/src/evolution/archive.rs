use serde::Serialize;

use crate::feature::DataPoint;
use crate::metrics::{dominates_arr, hypervolume_4d};
use crate::objectives::{ObjectiveVector, ReferencePoint};

#[derive(Clone, Debug, PartialEq)]
pub struct ArchiveEntry {
    /// Effective feature vector (use-original positions resolved).
    pub point: DataPoint,
    pub prediction: f64,
    pub objectives: ObjectiveVector,
    pub generation: usize,
}

/// Append-only record of every evaluated candidate with the dominated
/// hypervolume of the archive after each generation.
#[derive(Clone, Debug)]
pub struct ParetoArchive {
    entries: Vec<ArchiveEntry>,
    reference: ReferencePoint,
    /// Nondominated entries, ascending. Members with equal objective vectors
    /// are all kept.
    front: Vec<usize>,
    hv_trace: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HvRecord {
    pub generation: usize,
    pub hv: f64,
}

impl ParetoArchive {
    pub fn new(reference: ReferencePoint) -> Self {
        ParetoArchive {
            entries: Vec::new(),
            reference,
            front: Vec::new(),
            hv_trace: Vec::new(),
        }
    }

    pub fn reference(&self) -> &ReferencePoint {
        &self.reference
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends one generation's evaluated candidates and records the
    /// archive hypervolume. Generations must be recorded in order.
    pub fn record_generation(
        &mut self,
        generation: usize,
        evaluated: impl IntoIterator<Item = (DataPoint, f64, ObjectiveVector)>,
    ) {
        debug_assert_eq!(generation, self.hv_trace.len());
        for (point, prediction, objectives) in evaluated {
            let idx = self.entries.len();
            self.entries.push(ArchiveEntry {
                point,
                prediction,
                objectives,
                generation,
            });
            self.admit(idx);
        }
        let pts: Vec<[f64; 4]> = self
            .front
            .iter()
            .map(|&i| self.entries[i].objectives.as_array())
            .collect();
        let hv = hypervolume_4d(&pts, &self.reference.0);
        // the union only grows; keep summation rounding from showing a dip
        let hv = self.hv_trace.last().map_or(hv, |&prev| hv.max(prev));
        self.hv_trace.push(hv);
    }

    fn admit(&mut self, idx: usize) {
        let o = self.entries[idx].objectives.as_array();
        if self
            .front
            .iter()
            .any(|&i| dominates_arr(&self.entries[i].objectives.as_array(), &o))
        {
            return;
        }
        let entries = &self.entries;
        self.front
            .retain(|&i| !dominates_arr(&o, &entries[i].objectives.as_array()));
        self.front.push(idx);
    }

    pub fn hv_trace(&self) -> &[f64] {
        &self.hv_trace
    }

    pub fn hv_records(&self) -> Vec<HvRecord> {
        self.hv_trace
            .iter()
            .enumerate()
            .map(|(generation, &hv)| HvRecord { generation, hv })
            .collect()
    }

    pub fn generations(&self) -> usize {
        self.hv_trace.len()
    }

    /// Indices of nondominated entries, ascending.
    pub fn nondominated(&self) -> Vec<usize> {
        let mut f = self.front.clone();
        f.sort_unstable();
        f
    }

    /// Nondominated entries with repeated feature vectors removed (the
    /// earliest occurrence is kept).
    pub fn counterfactual_set(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for i in self.nondominated() {
            if !out.iter().any(|&k| self.entries[k].point == self.entries[i].point) {
                out.push(i);
            }
        }
        out
    }
}
