//! Traffic matrices, daily traffic profiles and low-load window detection.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::net::NodeId;

/// Demand volume for every ordered pair of distinct routers.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficMatrix {
    n: usize,
    volume: Vec<f64>,
}

impl TrafficMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            volume: vec![0.0; n * n],
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    fn check(&self, u: NodeId, v: NodeId, t: f64) -> Result<()> {
        if u.0 >= self.n || v.0 >= self.n {
            return Err(Error::UnknownNode(format!("{}", u.max(v))));
        }
        if u == v {
            return Err(Error::InvalidInput(format!("self demand at {u}")));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("demand {u}->{v} has volume {t}")));
        }
        Ok(())
    }

    pub fn set(&mut self, u: NodeId, v: NodeId, t: f64) -> Result<()> {
        self.check(u, v, t)?;
        self.volume[u.0 * self.n + v.0] = t;
        Ok(())
    }

    /// Adds `t` to the demand `u -> v`; repeated entries accumulate.
    pub fn add(&mut self, u: NodeId, v: NodeId, t: f64) -> Result<()> {
        self.check(u, v, t)?;
        self.volume[u.0 * self.n + v.0] += t;
        Ok(())
    }

    pub fn get(&self, u: NodeId, v: NodeId) -> f64 {
        self.volume[u.0 * self.n + v.0]
    }

    /// Positive demands `(u, v, t_uv)` in row-major order.
    pub fn demands(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.volume
            .iter()
            .enumerate()
            .filter(|(_, &t)| t > 0.0)
            .map(move |(i, &t)| (NodeId(i / self.n), NodeId(i % self.n), t))
    }

    pub fn num_demands(&self) -> usize {
        self.volume.iter().filter(|&&t| t > 0.0).count()
    }

    pub fn total(&self) -> f64 {
        self.volume.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.volume.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.volume.iter().all(|&t| t == 0.0)
    }

    pub(crate) fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            volume: self.volume.iter().map(|t| t * factor).collect(),
        }
    }
}

/// Multiplies every demand by `factor`.
pub fn scale_matrix(matrix: &TrafficMatrix, factor: f64) -> Result<TrafficMatrix> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::InvalidInput(format!("scale factor {factor} must be positive")));
    }
    Ok(matrix.scaled(factor))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub day: u32,
    pub slot: u32,
    pub total_traffic: f64,
}

/// Total network traffic sampled on a uniform daily slot grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficTimeSeries {
    pub slots_per_day: usize,
    pub samples: Vec<Sample>,
}

impl TrafficTimeSeries {
    pub fn new(slots_per_day: usize, samples: Vec<Sample>) -> Result<Self> {
        if slots_per_day == 0 {
            return Err(Error::Series("a day needs at least one slot".into()));
        }
        if let Some(s) = samples.iter().find(|s| s.slot as usize >= slots_per_day) {
            return Err(Error::Series(format!(
                "slot {} outside the {slots_per_day}-slot grid",
                s.slot
            )));
        }
        if let Some(s) = samples.iter().find(|s| !s.total_traffic.is_finite()) {
            return Err(Error::Series(format!("day {} slot {} is not finite", s.day, s.slot)));
        }
        Ok(Self {
            slots_per_day,
            samples,
        })
    }

    /// Reads `day,slot,total_traffic` rows. The grid size is the largest slot
    /// index plus one unless given.
    pub fn from_csv<R: Read>(reader: R, slots_per_day: Option<usize>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut samples = Vec::new();
        for row in rdr.deserialize() {
            let s: Sample = row?;
            samples.push(s);
        }
        let grid = slots_per_day
            .unwrap_or_else(|| samples.iter().map(|s| s.slot as usize + 1).max().unwrap_or(0));
        Self::new(grid, samples)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for s in &self.samples {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-slot mean and deviation with a symmetric confidence band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailyProfile {
    pub confidence: f64,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DailyProfile {
    pub fn slots(&self) -> usize {
        self.mean.len()
    }
}

/// Two-sided standard normal quantile for confidence level `gamma`.
pub fn band_quantile(gamma: f64) -> f64 {
    Normal::standard().inverse_cdf((1.0 + gamma) / 2.0)
}

/// Fits the per-slot Gaussian profile with the 1/n estimators.
pub fn fit_profile(series: &TrafficTimeSeries, confidence: f64) -> Result<DailyProfile> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Series(format!("confidence {confidence} outside (0, 1)")));
    }
    let k = series.slots_per_day;
    let mut by_slot: Vec<Vec<f64>> = vec![Vec::new(); k];
    for s in &series.samples {
        by_slot[s.slot as usize].push(s.total_traffic);
    }
    let z = band_quantile(confidence);
    let mut p = DailyProfile {
        confidence,
        mean: Vec::with_capacity(k),
        sd: Vec::with_capacity(k),
        lower: Vec::with_capacity(k),
        upper: Vec::with_capacity(k),
    };
    for (slot, values) in by_slot.iter_mut().enumerate() {
        match values.len() {
            0 => return Err(Error::Series(format!("slot {slot} has no samples"))),
            1 => return Err(Error::Series(format!("slot {slot} has a single day"))),
            _ => {}
        }
        // a fixed summation order makes the fit independent of day order
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mu = values.iter().sum::<f64>() / n;
        let sd = (values.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n).sqrt();
        p.mean.push(mu);
        p.sd.push(sd);
        p.lower.push(mu - z * sd);
        p.upper.push(mu + z * sd);
    }
    Ok(p)
}

/// A run of consecutive slots that may wrap past midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SlotWindow {
    pub start: usize,
    pub len: usize,
    pub slots_per_day: usize,
}

impl SlotWindow {
    /// Last slot of the window, inclusive.
    pub fn last(&self) -> usize {
        (self.start + self.len - 1) % self.slots_per_day
    }

    /// Slot just after the window.
    pub fn end(&self) -> usize {
        (self.start + self.len) % self.slots_per_day
    }

    pub fn contains(&self, slot: usize) -> bool {
        (slot + self.slots_per_day - self.start) % self.slots_per_day < self.len
    }
}

/// Finds the longest run of slots whose upper band stays at or below
/// `fraction` of the peak mean. Ties go to the smallest start slot.
pub fn detect_low_load(profile: &DailyProfile, fraction: f64) -> Result<Option<SlotWindow>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidInput(format!("fraction {fraction} outside (0, 1)")));
    }
    let k = profile.slots();
    if k == 0 {
        return Ok(None);
    }
    let peak = profile.mean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let limit = fraction * peak;
    let ok: Vec<bool> = profile.upper.iter().map(|&u| u <= limit).collect();
    if ok.iter().all(|&b| b) {
        return Ok(Some(SlotWindow {
            start: 0,
            len: k,
            slots_per_day: k,
        }));
    }
    // run length starting at each slot, computed backwards over two laps
    let mut run = vec![0usize; 2 * k];
    for i in (0..2 * k).rev() {
        run[i] = if ok[i % k] {
            1 + run.get(i + 1).copied().unwrap_or(0)
        } else {
            0
        };
    }
    let mut best: Option<SlotWindow> = None;
    for (start, &len) in run.iter().take(k).enumerate() {
        let len = len.min(k);
        if len > 0 && best.is_none_or(|b| len > b.len) {
            best = Some(SlotWindow {
                start,
                len,
                slots_per_day: k,
            });
        }
    }
    Ok(best)
}
