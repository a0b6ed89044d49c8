use std::f64::consts::TAU;
use std::io::{self, BufRead, Write};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::csvio::{format_f64, parse_f64, write_row};
use crate::{Error, Result};

use super::model::EpochMetrics;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    /// Beam index in `[0, B)`.
    pub label: usize,
}

/// Labelled feature vectors over `B` beams.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBeamDataset {
    samples: Vec<Sample>,
    num_beams: usize,
}

impl SyntheticBeamDataset {
    /// Checks that labels are below `num_beams` and widths agree.
    pub fn new(samples: Vec<Sample>, num_beams: usize) -> Result<Self> {
        if num_beams == 0 {
            return Err(Error::InvalidInput("at least one beam is required".into()));
        }
        if let Some(s) = samples.iter().find(|s| s.label >= num_beams) {
            return Err(Error::InvalidInput(format!("label {} with {num_beams} beams", s.label)));
        }
        if let Some(first) = samples.first() {
            if let Some(s) = samples.iter().find(|s| s.features.len() != first.features.len()) {
                return Err(Error::LengthMismatch { left: s.features.len(), right: first.features.len() });
            }
        }
        Ok(Self { samples, num_beams })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn num_beams(&self) -> usize {
        self.num_beams
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.samples.first().map_or(0, |s| s.features.len())
    }

    /// Sample count of every beam index.
    pub fn histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_beams];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    /// Header `feature_0, …, feature_{d−1}, label`, one row per sample.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let mut header: Vec<String> = (0..self.num_features()).map(|i| format!("feature_{i}")).collect();
        header.push("label".into());
        write_row(out, &header)?;
        for s in &self.samples {
            let mut row: Vec<String> = s.features.iter().map(|&x| format_f64(x)).collect();
            row.push(s.label.to_string());
            write_row(out, &row)?;
        }
        Ok(())
    }

    /// Reads the layout of [`write_csv`](Self::write_csv).
    pub fn read_csv<R: BufRead>(input: R, num_beams: usize) -> Result<Self> {
        let mut lines = input.lines();
        let header = match lines.next() {
            Some(line) => line.map_err(|e| Error::InvalidInput(e.to_string()))?,
            None => return Err(Error::InvalidInput("dataset CSV is empty".into())),
        };
        let width = header.split(',').count();
        if width < 2 || header.split(',').next_back() != Some("label") {
            return Err(Error::InvalidInput(format!("unexpected dataset header {header:?}")));
        }
        let mut samples = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::InvalidInput(e.to_string()))?;
            let fields: Vec<&str> = line.split(',').collect();
            let bad = || Error::InvalidInput(format!("dataset line {}: {line:?}", i + 2));
            if fields.len() != width {
                return Err(bad());
            }
            let features = fields[..width - 1].iter().map(|f| parse_f64(f)).collect::<Option<Vec<_>>>().ok_or_else(bad)?;
            let label = fields[width - 1].trim().parse().map_err(|_| bad())?;
            samples.push(Sample { features, label });
        }
        Self::new(samples, num_beams)
    }
}

/// Sector of the bearing of `position` as seen from the BS at the origin,
/// measured counter-clockwise from the positive x axis and split into `B`
/// equal arcs.
pub fn beam_sector(position: [f64; 2], num_beams: usize) -> usize {
    let angle = position[1].atan2(position[0]).rem_euclid(TAU);
    ((angle / TAU * num_beams as f64) as usize).min(num_beams - 1)
}

/// Positions uniform in the unit square `[−½, ½]²` centred on the BS,
/// labelled by [`beam_sector`]; features are the positions plus i.i.d.
/// `N(0, σ²)` noise.
///
/// The square's symmetry makes every sector of a `B ∈ {1, 2, 4, 8}`
/// partition equally likely.
pub fn generate_synthetic_dataset<R: Rng + ?Sized>(
    n: usize,
    num_beams: usize,
    noise_sigma: f64,
    rng: &mut R,
) -> Result<SyntheticBeamDataset> {
    if num_beams == 0 || n < num_beams {
        return Err(Error::InvalidInput(format!("{n} samples cannot cover {num_beams} beams")));
    }
    let noise = Normal::new(0.0, noise_sigma)
        .ok()
        .filter(|_| noise_sigma >= 0.0)
        .ok_or_else(|| Error::InvalidInput(format!("noise sigma {noise_sigma} must be finite and non-negative")))?;
    let samples = (0..n)
        .map(|_| {
            let p = [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
            let label = beam_sector(p, num_beams);
            let features = p.iter().map(|&c| c + noise.sample(rng)).collect();
            Sample { features, label }
        })
        .collect();
    let data = SyntheticBeamDataset::new(samples, num_beams)?;
    log::debug!("beam histogram: {:?}", data.histogram());
    Ok(data)
}

fn check_lengths(predictions: &[usize], labels: &[usize]) -> Result<()> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch { left: predictions.len(), right: labels.len() });
    }
    Ok(())
}

/// Fraction of samples with `|predicted − true| ≤ delta`; `delta = 0` is
/// top-1 accuracy. `NaN` for no samples.
pub fn distance_accuracy(predictions: &[usize], labels: &[usize], delta: usize) -> Result<f64> {
    check_lengths(predictions, labels)?;
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p.abs_diff(**l) <= delta).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Entry `(i, j)` counts samples of true beam `i` predicted as `j`.
pub fn confusion_matrix(predictions: &[usize], labels: &[usize], num_beams: usize) -> Result<DMatrix<u64>> {
    check_lengths(predictions, labels)?;
    let mut m = DMatrix::zeros(num_beams, num_beams);
    for (&p, &l) in predictions.iter().zip(labels) {
        if p >= num_beams || l >= num_beams {
            return Err(Error::InvalidInput(format!("beam index {} with {num_beams} beams", p.max(l))));
        }
        m[(l, p)] += 1;
    }
    Ok(m)
}

/// Header `true_beam, pred_0, …, pred_{B−1}`, one row per true beam.
pub fn write_confusion_csv<W: Write>(m: &DMatrix<u64>, out: &mut W) -> io::Result<()> {
    let mut header = vec!["true_beam".to_owned()];
    header.extend((0..m.ncols()).map(|j| format!("pred_{j}")));
    write_row(out, &header)?;
    for i in 0..m.nrows() {
        let mut row = vec![i.to_string()];
        row.extend(m.row(i).iter().map(|c| c.to_string()));
        write_row(out, &row)?;
    }
    Ok(())
}

pub const TRACE_HEADER: [&str; 6] = ["epoch", "split", "cross_entropy", "acc_delta0", "acc_delta1", "acc_delta2"];

/// Two rows per epoch, `train` then `validation`.
pub fn write_trace_csv<W: Write>(trace: &[EpochMetrics], out: &mut W) -> io::Result<()> {
    write_row(out, &TRACE_HEADER)?;
    for e in trace {
        for (split, m) in [("train", &e.train), ("validation", &e.validation)] {
            let mut row = vec![e.epoch.to_string(), split.to_owned(), format_f64(m.cross_entropy)];
            row.extend(m.accuracy.iter().map(|&a| format_f64(a)));
            write_row(out, &row)?;
        }
    }
    Ok(())
}
