//! CSV tables with JSON sidecars.
//!
//! Every CSV file `name.csv` has a sidecar `name.json` with the metadata
//! needed to read it back exactly. Numbers are written with 15 significant
//! digits and `.` as decimal separator. Point positions are snapped back
//! to their exact algebra (lattice coordinates or Z[τ]) on load.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::autocorrelation::AutocorrelationEstimate;
use crate::diffraction::{BraggPeakList, DiffractionEstimate, Estimator, FoldedDiffraction, KGrid};
use crate::error::{Error, Result};
use crate::geometry::{AveragingRegion, Lattice};
use crate::golden::ZTau;
use crate::numeric::fmt_sig;
use crate::pointset::{Provenance, Representation, Support, WeightedPointSet};

pub const POINTS_FORMAT: &str = "diffract-points/1";
pub const SCAN_FORMAT: &str = "diffract-scan/1";

/// `dir/name.csv` → `dir/name.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

/// Writes a header and rows of preformatted fields.
pub fn write_table<I, R>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// Header and numeric rows of a CSV file.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| csv_error(path, e))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("{}: row {}: '{s}' is not a number", path.display(), line + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(Error::Parse(format!(
                "{}: row {} has {} fields, header has {}",
                path.display(),
                line + 2,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn axis_header(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointsSidecar {
    pub format: String,
    pub dim: usize,
    pub n_points: usize,
    pub representation: Representation,
    pub region: AveragingRegion,
    pub provenance: Provenance,
}

/// Points as `x1..xn,re_w,im_w` plus a sidecar describing the exact
/// representation.
pub fn write_points(path: &Path, set: &WeightedPointSet) -> Result<()> {
    let n = set.dim();
    let mut header = axis_header("x", n);
    header.extend(["re_w".to_string(), "im_w".to_string()]);
    let rows = (0..set.len()).map(|i| {
        let mut row: Vec<String> = set.real_position(i).into_iter().map(fmt_sig).collect();
        let w = set.weights()[i];
        row.push(fmt_sig(w.re));
        row.push(fmt_sig(w.im));
        row
    });
    write_table(path, &header, rows)?;
    write_json(
        &sidecar_path(path),
        &PointsSidecar {
            format: POINTS_FORMAT.into(),
            dim: n,
            n_points: set.len(),
            representation: set.representation(),
            region: set.region().clone(),
            provenance: set.provenance.clone(),
        },
    )
}

/// Reads a points file. With a sidecar, positions are snapped to the
/// declared exact algebra and checked against the region; without one the
/// positions stay floating point on their bounding box, which the
/// autocorrelation refuses.
pub fn read_points(path: &Path) -> Result<WeightedPointSet> {
    let (header, rows) = read_table(path)?;
    if header.len() < 3 {
        return Err(Error::Parse(format!("{}: expected x1..xn,re_w,im_w", path.display())));
    }
    let n = header.len() - 2;
    let weights: Vec<Complex64> = rows.iter().map(|r| Complex64::new(r[n], r[n + 1])).collect();
    let xs: Vec<&[f64]> = rows.iter().map(|r| &r[..n]).collect();
    let side = sidecar_path(path);
    if !side.exists() {
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for x in &xs {
            for j in 0..n {
                lo[j] = lo[j].min(x[j]);
                hi[j] = hi[j].max(x[j]);
            }
        }
        if xs.is_empty() {
            return Err(Error::Parse(format!("{}: no points and no sidecar", path.display())));
        }
        let radius = (0..n).map(|j| (hi[j] - lo[j]) / 2.0).fold(0.0, f64::max) + 0.5;
        let center: Vec<f64> = (0..n).map(|j| (lo[j] + hi[j]) / 2.0).collect();
        let region = AveragingRegion::centered_box(radius, n)?.with_center(center)?;
        let mut prov = Provenance::new("csv");
        prov.warnings.push(format!(
            "no sidecar {}: positions are floating point and cannot enter the autocorrelation",
            side.display()
        ));
        let support = Support::Float { dim: n, coords: xs.concat() };
        return WeightedPointSet::new(support, weights, region, prov);
    }
    let meta: PointsSidecar = read_json(&side)?;
    if meta.dim != n {
        return Err(Error::DimensionMismatch { expected: meta.dim, found: n });
    }
    let support = match &meta.representation {
        Representation::Lattice { basis } => {
            let lattice = Lattice::new(basis.clone())?;
            let mut coords = Vec::with_capacity(xs.len() * n);
            for x in &xs {
                let c: Vec<i64> = lattice.coords_of(x).iter().map(|v| v.round() as i64).collect();
                let back = lattice.point(&c);
                let err = back.iter().zip(*x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
                if err > 1e-9 * scale {
                    return Err(Error::NotInLattice(format!("{x:?}")));
                }
                coords.extend(c);
            }
            Support::Lattice { lattice, coords }
        }
        Representation::Golden { star_bound } => {
            let pts = xs
                .iter()
                .map(|x| {
                    ZTau::snap(x[0], *star_bound, 1e-9 * (1.0 + x[0].abs()))
                        .ok_or_else(|| Error::NotInLattice(format!("{} in Z[τ] with |x*| ≤ {star_bound}", x[0])))
                })
                .collect::<Result<Vec<_>>>()?;
            Support::Golden(pts)
        }
        Representation::Float { .. } => Support::Float { dim: n, coords: xs.concat() },
    };
    WeightedPointSet::new(support, weights, meta.region, meta.provenance)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutocorrelationSidecar {
    pub region: AveragingRegion,
    pub z_max: f64,
    pub normalization: crate::autocorrelation::Normalization,
    pub algebra: crate::autocorrelation::Algebra,
    pub n_points: usize,
    pub diameter: f64,
    pub n_coefficients: usize,
    /// Column names of the displacement coordinates.
    pub displacement_columns: Vec<String>,
}

/// Coefficients as `z1..zn,re,im` (`m,n,re,im` for Z[τ], meaning
/// `z = m + nτ`) plus a sidecar with region, cutoff and normalization.
pub fn write_autocorrelation(path: &Path, est: &AutocorrelationEstimate) -> Result<()> {
    let mut header = match est.algebra {
        crate::autocorrelation::Algebra::Golden => vec!["m".to_string(), "n".to_string()],
        _ => axis_header("z", est.algebra.dim()),
    };
    let displacement_columns = header.clone();
    header.extend(["re".to_string(), "im".to_string()]);
    let rows = est.iter().map(|(z, v)| {
        let mut row: Vec<String> = z.components().into_iter().map(|c| c.to_string()).collect();
        row.push(fmt_sig(v.re));
        row.push(fmt_sig(v.im));
        row
    });
    write_table(path, &header, rows)?;
    write_json(
        &sidecar_path(path),
        &AutocorrelationSidecar {
            region: est.region.clone(),
            z_max: est.z_max,
            normalization: est.normalization,
            algebra: est.algebra.clone(),
            n_points: est.n_points,
            diameter: est.diameter,
            n_coefficients: est.len(),
            displacement_columns,
        },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSidecar {
    pub format: String,
    pub estimator: Estimator,
    pub volume: f64,
    pub dim: usize,
    pub n_k: usize,
    #[serde(default)]
    pub shape: Option<Vec<usize>>,
    #[serde(default)]
    pub steps: Option<Vec<f64>>,
    /// Denominator of the rational dual coordinates, when the grid had them.
    #[serde(default)]
    pub dual_denominator: Option<u64>,
    #[serde(default)]
    pub dual_of: Option<Lattice>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Scan as `k1..kn,intensity` plus a sidecar with estimator and grid shape.
pub fn write_scan(path: &Path, est: &DiffractionEstimate) -> Result<()> {
    let n = est.k_grid.dim;
    let mut header = axis_header("k", n);
    header.push("intensity".into());
    let rows = est.k_grid.iter().zip(&est.intensities).map(|(k, &v)| {
        let mut row: Vec<String> = k.iter().map(|&x| fmt_sig(x)).collect();
        row.push(fmt_sig(v));
        row
    });
    write_table(path, &header, rows)?;
    write_json(
        &sidecar_path(path),
        &ScanSidecar {
            format: SCAN_FORMAT.into(),
            estimator: est.estimator,
            volume: est.volume,
            dim: n,
            n_k: est.len(),
            shape: est.k_grid.shape.clone(),
            steps: est.k_grid.steps.clone(),
            dual_denominator: est.k_grid.rational.as_ref().map(|r| r.denominator),
            dual_of: est.k_grid.rational.as_ref().map(|r| r.lattice.clone()),
            warnings: est.warnings.clone(),
        },
    )
}

/// Reads a scan; the rational grid coordinates are not reconstructed.
pub fn read_scan(path: &Path) -> Result<DiffractionEstimate> {
    let (header, rows) = read_table(path)?;
    if header.len() < 2 || header.last().map(String::as_str) != Some("intensity") {
        return Err(Error::Parse(format!("{}: expected k1..kn,intensity", path.display())));
    }
    let n = header.len() - 1;
    let meta: ScanSidecar = read_json(&sidecar_path(path))?;
    if meta.dim != n || meta.n_k != rows.len() {
        return Err(Error::Parse(format!("{}: sidecar does not match the table", path.display())));
    }
    let mut grid = KGrid::from_points(rows.iter().map(|r| r[..n].to_vec()).collect())?;
    grid.dim = n;
    grid.shape = meta.shape;
    grid.steps = meta.steps;
    Ok(DiffractionEstimate {
        k_grid: grid,
        intensities: rows.iter().map(|r| r[n]).collect(),
        estimator: meta.estimator,
        volume: meta.volume,
        warnings: meta.warnings,
    })
}

/// Peaks as `k1..kn,intensity`, sorted by descending intensity.
pub fn write_peaks(path: &Path, peaks: &BraggPeakList, dim: usize) -> Result<()> {
    let mut header = axis_header("k", dim);
    header.push("intensity".into());
    let rows = peaks.peaks.iter().map(|p| {
        let mut row: Vec<String> = p.k.iter().map(|&x| fmt_sig(x)).collect();
        row.push(fmt_sig(p.intensity));
        row
    });
    write_table(path, &header, rows)
}

/// Folded diffraction as `b1..bn,mean_intensity,spread,count`.
pub fn write_folded(path: &Path, f: &FoldedDiffraction) -> Result<()> {
    let mut header = axis_header("b", f.bins.len());
    header.extend(["mean_intensity", "spread", "count"].map(String::from));
    let rows = (0..f.mean.len()).map(|i| {
        let mut row: Vec<String> = f.bin_coords(i).into_iter().map(|b| b.to_string()).collect();
        row.push(fmt_sig(f.mean[i]));
        row.push(fmt_sig(f.spread[i]));
        row.push(f.count[i].to_string());
        row
    });
    write_table(path, &header, rows)
}
