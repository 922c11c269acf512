//! Timestamp-based RGB/depth pairing, batch and streaming.
//!
//! One greedy rule everywhere: RGB frames claim, in timestamp order,
//! the unconsumed depth frame nearest in time; a claim further than the
//! tolerance drops the RGB frame instead. Each depth frame is consumed
//! at most once. The streaming form reaches the same pairing as the
//! batch form because an RGB frame is only resolved once no future
//! depth frame could beat the candidates already seen.

use crate::error::{CoreError, Result};
use crate::types::{DepthFrame, RgbFrame};
use std::collections::VecDeque;

/// An RGB frame matched with its depth frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    pub rgb: RgbFrame,
    pub depth: DepthFrame,
    /// depth timestamp minus rgb timestamp, seconds.
    pub skew: f64,
}

impl AlignedPair {
    /// Pairs are keyed by their RGB timestamp.
    pub fn timestamp(&self) -> f64 {
        self.rgb.timestamp
    }
}

/// Timestamps of frames that found no partner.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignDrops {
    pub rgb: Vec<f64>,
    pub depth: Vec<f64>,
}

/// Greedy nearest-timestamp matching over index slices. Both inputs
/// must be nondecreasing. Returns (ref_idx, cand_idx) pairs in ref
/// order; on distance ties the earlier candidate wins.
pub fn greedy_align(ref_ts: &[f64], cand_ts: &[f64], tol: f64) -> Result<Vec<(usize, usize)>> {
    if !(tol >= 0.0) {
        return Err(CoreError::InvalidInput(format!(
            "alignment tolerance must be nonnegative, got {tol}"
        )));
    }
    for (name, ts) in [("reference", ref_ts), ("candidate", cand_ts)] {
        if ts.windows(2).any(|w| w[1] < w[0]) {
            return Err(CoreError::InvalidInput(format!(
                "{name} timestamps must be nondecreasing"
            )));
        }
    }
    let mut consumed = vec![false; cand_ts.len()];
    let mut pairs = Vec::new();
    for (i, &rt) in ref_ts.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (j, &ct) in cand_ts.iter().enumerate() {
            if consumed[j] {
                continue;
            }
            let d = (ct - rt).abs();
            match best {
                Some((_, bd)) if d >= bd && ct > rt => break,
                Some((_, bd)) if d < bd => best = Some((j, d)),
                None => best = Some((j, d)),
                _ => {}
            }
        }
        if let Some((j, d)) = best {
            if d <= tol {
                consumed[j] = true;
                pairs.push((i, j));
            }
        }
    }
    Ok(pairs)
}

/// Batch alignment of two complete frame streams.
pub fn align_frames(
    rgb: Vec<RgbFrame>,
    depth: Vec<DepthFrame>,
    tol: f64,
) -> Result<(Vec<AlignedPair>, AlignDrops)> {
    let ref_ts: Vec<f64> = rgb.iter().map(|f| f.timestamp).collect();
    let cand_ts: Vec<f64> = depth.iter().map(|f| f.timestamp).collect();
    let matches = greedy_align(&ref_ts, &cand_ts, tol)?;
    let mut rgb_slots: Vec<Option<RgbFrame>> = rgb.into_iter().map(Some).collect();
    let mut depth_slots: Vec<Option<DepthFrame>> = depth.into_iter().map(Some).collect();
    let mut pairs = Vec::with_capacity(matches.len());
    for (i, j) in matches {
        let rgb = rgb_slots[i].take().expect("ref indices unique");
        let depth = depth_slots[j].take().expect("candidates consumed once");
        let skew = depth.timestamp - rgb.timestamp;
        pairs.push(AlignedPair { rgb, depth, skew });
    }
    let drops = AlignDrops {
        rgb: rgb_slots
            .into_iter()
            .flatten()
            .map(|f| f.timestamp)
            .collect(),
        depth: depth_slots
            .into_iter()
            .flatten()
            .map(|f| f.timestamp)
            .collect(),
    };
    Ok((pairs, drops))
}

/// Incremental aligner fed by interleaved frame arrivals.
#[derive(Debug)]
pub struct StreamAligner {
    tol: f64,
    pending_rgb: VecDeque<RgbFrame>,
    pending_depth: VecDeque<DepthFrame>,
    last_depth_ts: Option<f64>,
    drops: AlignDrops,
}

impl StreamAligner {
    pub fn new(tol: f64) -> Result<Self> {
        if !(tol >= 0.0) {
            return Err(CoreError::InvalidInput(format!(
                "alignment tolerance must be nonnegative, got {tol}"
            )));
        }
        Ok(Self {
            tol,
            pending_rgb: VecDeque::new(),
            pending_depth: VecDeque::new(),
            last_depth_ts: None,
            drops: AlignDrops::default(),
        })
    }

    /// Resolves the oldest RGB frame against the depths seen so far.
    /// `closed` asserts no further depth frames will arrive.
    fn resolve_head(&mut self, closed: bool) -> Option<AlignedPair> {
        let rgb_ts = self.pending_rgb.front()?.timestamp;
        let decidable = closed
            || self
                .last_depth_ts
                .is_some_and(|t| t > rgb_ts + self.tol);
        if !decidable {
            return None;
        }
        let rgb = self.pending_rgb.pop_front().expect("head checked");
        let mut best: Option<(usize, f64)> = None;
        for (j, d) in self.pending_depth.iter().enumerate() {
            let dist = (d.timestamp - rgb.timestamp).abs();
            match best {
                Some((_, bd)) if dist >= bd && d.timestamp > rgb.timestamp => break,
                Some((_, bd)) if dist < bd => best = Some((j, dist)),
                None => best = Some((j, dist)),
                _ => {}
            }
        }
        if let Some((j, dist)) = best {
            if dist <= self.tol {
                let depth = self.pending_depth.remove(j).expect("index from scan");
                let skew = depth.timestamp - rgb.timestamp;
                return Some(AlignedPair { rgb, depth, skew });
            }
        }
        self.drops.rgb.push(rgb.timestamp);
        None
    }

    fn drain_decidable(&mut self, closed: bool) -> Vec<AlignedPair> {
        let mut out = Vec::new();
        loop {
            let before = self.pending_rgb.len();
            if let Some(pair) = self.resolve_head(closed) {
                out.push(pair);
            }
            if self.pending_rgb.len() == before {
                break;
            }
        }
        // Depths no future RGB frame can reach are dead weight.
        if let Some(front_rgb) = self.pending_rgb.front().map(|f| f.timestamp) {
            while let Some(d) = self.pending_depth.front() {
                if d.timestamp < front_rgb - self.tol {
                    let ts = d.timestamp;
                    self.pending_depth.pop_front();
                    self.drops.depth.push(ts);
                } else {
                    break;
                }
            }
        }
        out
    }

    pub fn push_rgb(&mut self, frame: RgbFrame) -> Vec<AlignedPair> {
        self.pending_rgb.push_back(frame);
        self.drain_decidable(false)
    }

    pub fn push_depth(&mut self, frame: DepthFrame) -> Vec<AlignedPair> {
        self.last_depth_ts = Some(frame.timestamp);
        self.pending_depth.push_back(frame);
        self.drain_decidable(false)
    }

    /// Flushes every pending frame at end of stream.
    pub fn finish(mut self) -> (Vec<AlignedPair>, AlignDrops) {
        let pairs = self.drain_decidable(true);
        for d in self.pending_depth {
            self.drops.depth.push(d.timestamp);
        }
        (pairs, self.drops)
    }
}
