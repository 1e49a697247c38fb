//! Training/holdout datasets: simulation from the generative model and CSV
//! round-tripping.

use std::collections::HashSet;
use std::path::Path;
use std::str::FromStr;

use probit_gp::normal::{norm_cdf, norm_quantile};
use probit_gp::rng::Counter;
use probit_gp::{build_covariance, dense_cholesky, KernelSpec64, Locations};

use crate::error::{AppError, AppResult};

/// Namespace tag of the latent-surface draw.
const SURFACE_TAG: u64 = 0x66306472;
/// Namespace tag of the Bernoulli response draws.
const RESPONSE_TAG: u64 = 0x6265726e;
/// Namespace tag of the holdout-location draws.
const HOLDOUT_TAG: u64 = 0x686f6c64;

/// Largest double strictly below one; probabilities are kept inside (0, 1).
const ONE_MINUS: f64 = 1.0 - f64::EPSILON / 2.0;

/// An out-of-sample evaluation point, optionally labeled with the probability
/// and response that generated it.
#[derive(Clone, Debug, PartialEq)]
pub struct HoldoutPoint {
    pub location: Vec<f64>,
    pub true_prob: Option<f64>,
    pub true_y: Option<u8>,
}

/// A training set plus optional generative truth and holdout points.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub locs: Locations<f64>,
    pub y: Vec<u8>,
    /// True success probabilities at the training locations, when simulated.
    pub truth_probs: Option<Vec<f64>>,
    pub holdout: Option<Vec<HoldoutPoint>>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.locs.len()
    }

    /// Attaches holdout points, checking dimensional consistency.
    pub fn with_holdout(mut self, points: Vec<HoldoutPoint>) -> AppResult<Self> {
        for p in &points {
            if p.location.len() != self.locs.dim() {
                return Err(AppError::Invalid(format!(
                    "holdout point has {} coordinates, training data has {}",
                    p.location.len(),
                    self.locs.dim()
                )));
            }
        }
        self.holdout = Some(points);
        Ok(self)
    }
}

/// Where the holdout locations come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HoldoutScheme {
    /// Uniform draws in the unit square.
    Random,
    /// A centered sub-grid of ceil(sqrt(count))^2 cells.
    Grid,
}

impl FromStr for HoldoutScheme {
    type Err = AppError;

    fn from_str(s: &str) -> AppResult<Self> {
        match s {
            "random" => Ok(HoldoutScheme::Random),
            "grid" => Ok(HoldoutScheme::Grid),
            other => Err(AppError::Invalid(format!(
                "unknown holdout scheme {other:?}; expected \"random\" or \"grid\""
            ))),
        }
    }
}

/// Simulates a classification dataset from the generative model itself:
/// a grid_size^2 training grid with coordinates k/grid_size in each axis,
/// holdout locations per `scheme`, one latent Gaussian surface drawn jointly
/// over all locations through a single Cholesky factor, success probabilities
/// through the normal CDF, and independent Bernoulli responses.
pub fn simulate_dataset(
    grid_size: usize,
    alpha: f64,
    seed: u64,
    scheme: HoldoutScheme,
    holdout_count: usize,
) -> AppResult<Dataset> {
    if grid_size < 2 {
        return Err(AppError::Invalid("grid_size must be at least 2".into()));
    }
    if holdout_count == 0 {
        return Err(AppError::Invalid("holdout_count must be positive".into()));
    }
    crate::config::validate_alpha(alpha)?;

    let g = grid_size;
    let mut train_pts = Vec::with_capacity(g * g);
    for i in 1..=g {
        for j in 1..=g {
            train_pts.push(vec![i as f64 / g as f64, j as f64 / g as f64]);
        }
    }
    let train_locs = Locations::new(train_pts.clone())?;

    let holdout_pts = holdout_locations(&train_locs, seed, scheme, holdout_count, g)?;

    let mut joint = train_pts;
    joint.extend(holdout_pts.iter().cloned());
    let joint_locs = Locations::new(joint)?;

    let kernel = KernelSpec64::squared_exponential(alpha)?;
    let omega = build_covariance(&kernel, &joint_locs)?;
    let chol = dense_cholesky(&omega)?;

    let m = joint_locs.len();
    let surface_ctr = Counter::new(seed).fork(SURFACE_TAG);
    let eta: Vec<f64> = (0..m).map(|t| norm_quantile(surface_ctr.uniform(t as u64, 0))).collect();
    let probs: Vec<f64> = (0..m)
        .map(|i| {
            let row = chol.row(i);
            let f: f64 = row.iter().zip(&eta).map(|(l, e)| l * e).sum();
            norm_cdf(f).max(f64::MIN_POSITIVE).min(ONE_MINUS)
        })
        .collect();

    let response_ctr = Counter::new(seed).fork(RESPONSE_TAG);
    let draw = |i: usize| u8::from(response_ctr.uniform(i as u64, 0) < probs[i]);

    let n = g * g;
    let y: Vec<u8> = (0..n).map(draw).collect();
    let holdout: Vec<HoldoutPoint> = holdout_pts
        .into_iter()
        .enumerate()
        .map(|(t, location)| HoldoutPoint {
            location,
            true_prob: Some(probs[n + t]),
            true_y: Some(draw(n + t)),
        })
        .collect();

    Ok(Dataset {
        locs: train_locs,
        y,
        truth_probs: Some(probs[..n].to_vec()),
        holdout: Some(holdout),
    })
}

/// Generates holdout locations, displacing any that bitwise-collide with a
/// training location (or an earlier holdout) so all locations stay distinct.
fn holdout_locations(
    train: &Locations<f64>,
    seed: u64,
    scheme: HoldoutScheme,
    count: usize,
    grid_size: usize,
) -> AppResult<Vec<Vec<f64>>> {
    let (mut pts, nudge) = match scheme {
        HoldoutScheme::Random => {
            let ctr = Counter::new(seed).fork(HOLDOUT_TAG);
            let pts: Vec<Vec<f64>> = (0..count)
                .map(|t| vec![ctr.uniform(t as u64, 0), ctr.uniform(t as u64, 1)])
                .collect();
            (pts, 2f64.powi(-26))
        }
        HoldoutScheme::Grid => {
            let s = (count as f64).sqrt().ceil() as usize;
            let mut pts = Vec::with_capacity(count);
            'outer: for i in 1..=s {
                for j in 1..=s {
                    if pts.len() == count {
                        break 'outer;
                    }
                    pts.push(vec![
                        (i as f64 - 0.5) / s as f64,
                        (j as f64 - 0.5) / s as f64,
                    ]);
                }
            }
            // Half a cell of the joint refinement: clears a training
            // coordinate without reaching the next holdout column.
            (pts, 0.5 / (grid_size as f64 * s as f64 * 2.0))
        }
    };

    let mut seen: HashSet<(u64, u64)> = HashSet::new();
    for p in pts.iter_mut() {
        let mut attempts = 0;
        loop {
            let key = (p[0].to_bits(), p[1].to_bits());
            if !train.contains(p) && !seen.contains(&key) {
                seen.insert(key);
                break;
            }
            p[0] += nudge;
            if p[0] >= 1.0 {
                p[0] -= 0.5;
            }
            attempts += 1;
            if attempts > 1000 {
                return Err(AppError::Invalid(
                    "could not place distinct holdout locations".into(),
                ));
            }
        }
    }
    Ok(pts)
}

fn open_writer(path: &Path) -> AppResult<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| AppError::format(path, e.to_string()))
}

fn coord_headers(dim: usize) -> Vec<String> {
    (1..=dim).map(|k| format!("x{k}")).collect()
}

/// Writes the training set as CSV with columns x1..xq, y.
pub fn write_training_csv(ds: &Dataset, path: &Path) -> AppResult<()> {
    let mut w = open_writer(path)?;
    let mut header = coord_headers(ds.locs.dim());
    header.push("y".into());
    w.write_record(&header).map_err(|e| AppError::format(path, e.to_string()))?;
    for i in 0..ds.n() {
        let mut rec: Vec<String> = ds.locs.point(i).iter().map(|v| format!("{v}")).collect();
        rec.push(format!("{}", ds.y[i]));
        w.write_record(&rec).map_err(|e| AppError::format(path, e.to_string()))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// Writes the holdout set as CSV with columns x1..xq[, truth_prob][, y];
/// the optional columns appear when every point carries the field.
pub fn write_holdout_csv(ds: &Dataset, path: &Path) -> AppResult<()> {
    let points = ds
        .holdout
        .as_ref()
        .ok_or_else(|| AppError::Invalid("dataset has no holdout points".into()))?;
    if points.is_empty() {
        return Err(AppError::Invalid("holdout set is empty".into()));
    }
    let dim = points[0].location.len();
    let with_prob = points.iter().all(|p| p.true_prob.is_some());
    let with_y = points.iter().all(|p| p.true_y.is_some());

    let mut w = open_writer(path)?;
    let mut header = coord_headers(dim);
    if with_prob {
        header.push("truth_prob".into());
    }
    if with_y {
        header.push("y".into());
    }
    w.write_record(&header).map_err(|e| AppError::format(path, e.to_string()))?;
    for p in points {
        let mut rec: Vec<String> = p.location.iter().map(|v| format!("{v}")).collect();
        if with_prob {
            rec.push(format!("{}", p.true_prob.unwrap()));
        }
        if with_y {
            rec.push(format!("{}", p.true_y.unwrap()));
        }
        w.write_record(&rec).map_err(|e| AppError::format(path, e.to_string()))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

struct HeaderShape {
    dim: usize,
    has_prob: bool,
    has_y: bool,
}

/// Parses a header of the form x1..xq[, truth_prob][, y].
fn parse_header(path: &Path, fields: &[String]) -> AppResult<HeaderShape> {
    let mut dim = 0;
    while dim < fields.len() && fields[dim] == format!("x{}", dim + 1) {
        dim += 1;
    }
    if dim == 0 {
        return Err(AppError::format(path, "header must start with columns x1, x2, ..."));
    }
    let rest = &fields[dim..];
    let (has_prob, has_y) = match rest {
        [] => (false, false),
        [y] if y == "y" => (false, true),
        [p, y] if p == "truth_prob" && y == "y" => (true, true),
        _ => {
            return Err(AppError::format(
                path,
                format!("unexpected trailing columns {rest:?}; expected [truth_prob,] y"),
            ))
        }
    };
    Ok(HeaderShape { dim, has_prob, has_y })
}

fn parse_f64(path: &Path, line: usize, field: &str) -> AppResult<f64> {
    field
        .parse::<f64>()
        .map_err(|_| AppError::format(path, format!("line {line}: bad number {field:?}")))
}

fn parse_y(path: &Path, line: usize, field: &str) -> AppResult<u8> {
    match field {
        "0" => Ok(0),
        "1" => Ok(1),
        _ => Err(AppError::format(path, format!("line {line}: response must be 0 or 1, got {field:?}"))),
    }
}

fn read_records(path: &Path) -> AppResult<(HeaderShape, Vec<csv::StringRecord>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| AppError::format(path, e.to_string()))?;
    let headers: Vec<String> =
        r.headers().map_err(|e| AppError::format(path, e.to_string()))?.iter().map(String::from).collect();
    let shape = parse_header(path, &headers)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(|e| AppError::format(path, e.to_string()))?);
    }
    Ok((shape, rows))
}

/// Reads a training CSV (columns x1..xq, y) into a dataset without holdout.
pub fn read_training_csv(path: &Path) -> AppResult<Dataset> {
    let (shape, rows) = read_records(path)?;
    if !shape.has_y || shape.has_prob {
        return Err(AppError::format(path, "training data needs columns x1..xq, y"));
    }
    let mut pts = Vec::with_capacity(rows.len());
    let mut y = Vec::with_capacity(rows.len());
    for (idx, rec) in rows.iter().enumerate() {
        let line = idx + 2;
        if rec.len() != shape.dim + 1 {
            return Err(AppError::format(path, format!("line {line}: wrong field count")));
        }
        let mut p = Vec::with_capacity(shape.dim);
        for k in 0..shape.dim {
            p.push(parse_f64(path, line, &rec[k])?);
        }
        pts.push(p);
        y.push(parse_y(path, line, &rec[shape.dim])?);
    }
    if pts.is_empty() {
        return Err(AppError::format(path, "no data rows"));
    }
    let locs = Locations::new(pts)?;
    Ok(Dataset { locs, y, truth_probs: None, holdout: None })
}

/// Reads a holdout CSV (columns x1..xq[, truth_prob][, y]).
pub fn read_holdout_csv(path: &Path) -> AppResult<Vec<HoldoutPoint>> {
    let (shape, rows) = read_records(path)?;
    let width = shape.dim + usize::from(shape.has_prob) + usize::from(shape.has_y);
    let mut points = Vec::with_capacity(rows.len());
    for (idx, rec) in rows.iter().enumerate() {
        let line = idx + 2;
        if rec.len() != width {
            return Err(AppError::format(path, format!("line {line}: wrong field count")));
        }
        let mut location = Vec::with_capacity(shape.dim);
        for k in 0..shape.dim {
            location.push(parse_f64(path, line, &rec[k])?);
        }
        let mut col = shape.dim;
        let true_prob = if shape.has_prob {
            let v = parse_f64(path, line, &rec[col])?;
            if !(0.0..=1.0).contains(&v) {
                return Err(AppError::format(
                    path,
                    format!("line {line}: truth_prob outside [0, 1]"),
                ));
            }
            col += 1;
            Some(v)
        } else {
            None
        };
        let true_y =
            if shape.has_y { Some(parse_y(path, line, &rec[col])?) } else { None };
        points.push(HoldoutPoint { location, true_prob, true_y });
    }
    if points.is_empty() {
        return Err(AppError::format(path, "no data rows"));
    }
    Ok(points)
}
