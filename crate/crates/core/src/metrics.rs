//! PSNR, surface-area ratio for kernel-parameter selection, and external
//! no-reference scores.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::kernels::{KernelFamily, KernelSpec, MetricInner};
use crate::solver::MetricContext;

/// Peak signal-to-noise ratio in dB with peak 1. Identical images give `+inf`.
pub fn psnr(reference: &Image, test: &Image) -> Result<f64> {
    reference.check_same_shape(test)?;
    let n = reference.data().len();
    if n == 0 {
        return Err(Error::Dimension("empty image".into()));
    }
    let mse = reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

/// Formats a PSNR value, spelling infinity as `inf`.
pub fn format_db(db: f64) -> String {
    if db.is_infinite() {
        "inf".to_string()
    } else {
        format!("{db:.4}")
    }
}

/// Area of the graph surface of `img` (or of its kernel lift), in pixel²:
/// the sum over pixels of `sqrt(det(I + G))`, with `G` built from central
/// differences. `None` uses the plain intensity gradient.
pub fn surface_area(img: &Image, kernel: Option<&KernelSpec>) -> Result<f64> {
    let ctx = MetricContext::new(img, kernel.copied().unwrap_or_else(KernelSpec::linear));
    let mut total = 0.0;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let s = ctx.pixel_sample(x, y);
            let g = match kernel {
                Some(k) => k.metric_inner(&s)?,
                None => MetricInner {
                    gxx: s.dax.dot(&s.dax),
                    gyy: s.day.dot(&s.day),
                    gxy: s.dax.dot(&s.day),
                },
            };
            total += g.area_element();
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaReport {
    pub area_original: f64,
    pub area_mapped: f64,
    pub ratio: f64,
}

/// `A(lifted surface) / A(original surface)`.
pub fn area_ratio(img: &Image, kernel: &KernelSpec) -> Result<AreaReport> {
    let area_original = surface_area(img, None)?;
    let area_mapped = surface_area(img, Some(kernel))?;
    Ok(AreaReport {
        area_original,
        area_mapped,
        ratio: area_mapped / area_original,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub chosen: f64,
    /// `(param, report)` for every grid point, in grid order.
    pub sweep: Vec<(f64, AreaReport)>,
}

/// Picks the grid parameter whose area ratio is closest to 1; ties go to the
/// smaller parameter.
pub fn select_kernel_param(img: &Image, family: KernelFamily, grid: &[f64]) -> Result<Selection> {
    if grid.is_empty() {
        return Err(Error::Config("empty kernel parameter grid".into()));
    }
    let sweep = grid
        .iter()
        .map(|&param| Ok((param, area_ratio(img, &family.with_param(param)?)?)))
        .collect::<Result<Vec<_>>>()?;
    let chosen = sweep
        .iter()
        .min_by(|(pa, ra), (pb, rb)| {
            (ra.ratio - 1.0)
                .abs()
                .total_cmp(&(rb.ratio - 1.0).abs())
                .then(pa.total_cmp(pb))
        })
        .map(|&(p, _)| p)
        .expect("grid is non-empty");
    Ok(Selection { chosen, sweep })
}

/// Reads `id,score` rows; a header row is allowed when its score column is not numeric
/// and it is the first line.
pub fn external_scores(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_scores(&text)
}

pub fn parse_scores(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        let (id, score) = (&rec[0], &rec[1]);
        match score.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                out.insert(id.to_string(), v);
            }
            _ if line == 1 && id.eq_ignore_ascii_case("id") => {}
            _ => {
                return Err(Error::Parse {
                    line,
                    message: format!("score {score:?} is not a number"),
                })
            }
        }
    }
    Ok(out)
}
