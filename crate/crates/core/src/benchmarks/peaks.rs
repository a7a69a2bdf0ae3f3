//! Moving peaks benchmark with cone-shaped peaks.

use super::{Landscape, Objective};
use crate::error::{Error, Result};
use crate::random::RandomSource;
use crate::space::{euclidean_distance, Bounds, SearchPoint};

#[derive(Debug, Clone, PartialEq)]
pub struct Peak {
    pub position: SearchPoint,
    pub height: f64,
    pub width: f64,
}

impl Peak {
    /// Cone value `height − width·‖x − position‖`.
    #[inline]
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.height - self.width * euclidean_distance(x, &self.position)
    }
}

/// Benchmark parameters. `Default` is the standard scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MpbConfig {
    pub peak_count: usize,
    /// Evaluations between changes.
    pub change_every: u64,
    pub height_severity: f64,
    pub width_severity: f64,
    pub shift_length: f64,
    pub dimension: usize,
    pub height_range: (f64, f64),
    pub width_range: (f64, f64),
    pub initial_height: f64,
    pub bounds: (f64, f64),
}

impl Default for MpbConfig {
    fn default() -> Self {
        Self {
            peak_count: 10,
            change_every: 5000,
            height_severity: 7.0,
            width_severity: 1.0,
            shift_length: 1.0,
            dimension: 5,
            height_range: (30.0, 70.0),
            width_range: (1.0, 12.0),
            initial_height: 50.0,
            bounds: (0.0, 100.0),
        }
    }
}

impl MpbConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(format!("mpb: {msg}")));
        if self.peak_count == 0 {
            return bad("peak_count must be positive");
        }
        if self.dimension == 0 {
            return bad("dimension must be positive");
        }
        if self.change_every == 0 {
            return bad("change_every must be positive");
        }
        if !(self.height_range.0 <= self.height_range.1) || !(self.width_range.0 <= self.width_range.1) {
            return bad("height and width ranges must be ordered");
        }
        if !(self.bounds.0 < self.bounds.1) {
            return bad("bounds must satisfy lower < upper");
        }
        if self.height_severity < 0.0 || self.width_severity < 0.0 || self.shift_length < 0.0 {
            return bad("severities and shift length must be non-negative");
        }
        if !(self.height_range.0..=self.height_range.1).contains(&self.initial_height) {
            return bad("initial height must lie in the height range");
        }
        Ok(())
    }

    pub fn search_bounds(&self) -> Result<Bounds> {
        Bounds::uniform(self.dimension, self.bounds.0, self.bounds.1)
    }
}

/// Maximum over peaks of the cone value at `x`.
pub fn mpb_eval(x: &[f64], peaks: &[Peak]) -> Result<f64> {
    if peaks.is_empty() {
        return Err(Error::InvalidLandscape("no peaks".into()));
    }
    if let Some(p) = peaks.iter().find(|p| p.position.len() != x.len()) {
        return Err(Error::InvalidInput(format!(
            "point has {} coordinates, peak has {}",
            x.len(),
            p.position.len()
        )));
    }
    Ok(peaks
        .iter()
        .map(|p| p.value_at(x))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Global maximum of a cone landscape: it is attained at one of the apexes.
pub fn mpb_optimum(peaks: &[Peak]) -> Result<f64> {
    if peaks.is_empty() {
        return Err(Error::InvalidLandscape("no peaks".into()));
    }
    peaks
        .iter()
        .map(|p| mpb_eval(&p.position, peaks))
        .try_fold(f64::NEG_INFINITY, |acc, v| v.map(|v| acc.max(v)))
}

fn reflect(mut v: f64, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    for _ in 0..8 {
        if v > hi {
            v = 2.0 * hi - v;
        } else if v < lo {
            v = 2.0 * lo - v;
        } else {
            return v;
        }
    }
    v.clamp(lo, hi)
}

/// One environment change: severity-scaled Gaussian height and width
/// perturbations reflected into range, and a shift of exactly
/// `shift_length` in a uniformly random direction, clamped to the box.
pub fn mpb_advance(peaks: &[Peak], cfg: &MpbConfig, src: &mut RandomSource) -> Vec<Peak> {
    let (blo, bhi) = cfg.bounds;
    peaks
        .iter()
        .map(|p| {
            let height = reflect(
                p.height + cfg.height_severity * src.standard_normal(),
                cfg.height_range.0,
                cfg.height_range.1,
            );
            let width = reflect(
                p.width + cfg.width_severity * src.standard_normal(),
                cfg.width_range.0,
                cfg.width_range.1,
            );
            let dir = random_direction(p.position.len(), src);
            let position = p
                .position
                .iter()
                .zip(&dir)
                .map(|(x, u)| (x + cfg.shift_length * u).clamp(blo, bhi))
                .collect::<Vec<_>>();
            Peak {
                position: position.into(),
                height,
                width,
            }
        })
        .collect()
}

/// Unit vector with uniformly distributed direction.
pub(crate) fn random_direction(dim: usize, src: &mut RandomSource) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| src.standard_normal()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

#[derive(Debug, Clone)]
pub struct PeaksLandscape {
    cfg: MpbConfig,
    bounds: Bounds,
    peaks: Vec<Peak>,
    optimum: f64,
}

impl PeaksLandscape {
    pub fn from_peaks(cfg: MpbConfig, peaks: Vec<Peak>) -> Result<Self> {
        cfg.validate()?;
        let optimum = mpb_optimum(&peaks)?;
        Ok(Self {
            bounds: cfg.search_bounds()?,
            cfg,
            peaks,
            optimum,
        })
    }

    /// Peaks at uniform random positions with the standard initial height and
    /// widths drawn uniformly from the width range.
    pub fn random(cfg: &MpbConfig, src: &mut RandomSource) -> Result<Self> {
        cfg.validate()?;
        let (lo, hi) = cfg.bounds;
        let (wlo, whi) = cfg.width_range;
        let peaks = (0..cfg.peak_count)
            .map(|_| {
                let position: Vec<f64> = (0..cfg.dimension).map(|_| src.uniform_in(lo, hi)).collect();
                let width = if wlo < whi { src.uniform_in(wlo, whi) } else { wlo };
                Peak {
                    position: position.into(),
                    height: cfg.initial_height,
                    width,
                }
            })
            .collect();
        Self::from_peaks(cfg.clone(), peaks)
    }

    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn config(&self) -> &MpbConfig {
        &self.cfg
    }
}

impl Landscape for PeaksLandscape {
    fn dimension(&self) -> usize {
        self.cfg.dimension
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn objective(&self) -> Objective {
        Objective::Maximize
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        mpb_eval(x, &self.peaks)
    }

    fn optimum(&self) -> Option<f64> {
        Some(self.optimum)
    }

    fn advanced(&self, src: &mut RandomSource) -> Self {
        let peaks = mpb_advance(&self.peaks, &self.cfg, src);
        let optimum = mpb_optimum(&peaks).expect("peak count is preserved");
        Self {
            cfg: self.cfg.clone(),
            bounds: self.bounds.clone(),
            peaks,
            optimum,
        }
    }
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros trimmed.
pub(crate) fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Landscape dump: one peak per line, `height width x1 ... xD`.
pub fn format_peaks(peaks: &[Peak]) -> String {
    let mut out = String::new();
    for p in peaks {
        let fields: Vec<String> = [p.height, p.width]
            .iter()
            .chain(p.position.iter())
            .map(|v| fmt_sig9(*v))
            .collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_peaks(text: &str) -> Result<Vec<Peak>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let vals = line
                .split(' ')
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidInput(format!("landscape line {}: {e}", n + 1)))?;
            if vals.len() < 3 {
                return Err(Error::InvalidInput(format!(
                    "landscape line {}: expected height, width and coordinates",
                    n + 1
                )));
            }
            Ok(Peak {
                height: vals[0],
                width: vals[1],
                position: vals[2..].to_vec().into(),
            })
        })
        .collect()
}
