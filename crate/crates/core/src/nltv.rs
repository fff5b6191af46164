//! Nonlocal TV and its kernel-space variants.
//!
//! The 4-neighborhood stencil is replaced by a similarity graph: every pixel
//! links to the `k_best` most similar pixels of its search window, where
//! similarity compares 5-pixel cross patches. The graph is built once from
//! the noisy input and then frozen.

use std::io::Write;

use rayon::prelude::*;

use crate::coupling::KernelField;
use crate::error::{Error, Result};
use crate::image::{reflect, Image};
use crate::kernels::KernelSpec;
use crate::solver::{self, Denoised, MetricContext, Observer, Scheme, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct NlConfig {
    /// Half-width of the square search window (2 gives 5x5).
    pub search_radius: usize,
    /// Neighbors kept per pixel before symmetrization.
    pub k_best: usize,
    /// Similarity bandwidth in normalized intensity units.
    pub h_sim: f64,
}

impl Default for NlConfig {
    fn default() -> Self {
        Self {
            search_radius: 2,
            k_best: 10,
            h_sim: 0.1,
        }
    }
}

impl NlConfig {
    pub fn validate(&self) -> Result<()> {
        let window = (2 * self.search_radius + 1).pow(2);
        if self.k_best == 0 || self.k_best > window - 1 {
            return Err(Error::Config(format!(
                "k_best must lie in 1..={} for search radius {}, got {}",
                window - 1,
                self.search_radius,
                self.k_best
            )));
        }
        if !(self.h_sim.is_finite() && self.h_sim > 0.0) {
            return Err(Error::Config(format!(
                "h_sim must be > 0, got {}",
                self.h_sim
            )));
        }
        Ok(())
    }
}

/// Symmetric weighted adjacency in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalGraph {
    offsets: Vec<usize>,
    edges: Vec<(usize, f64)>,
}

impl NonlocalGraph {
    /// Builds a graph over `n` pixels from undirected weighted edges.
    /// Duplicate edges keep the first weight seen.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(p, q, w) in edges {
            if p >= n || q >= n {
                return Err(Error::Dimension(format!(
                    "edge ({p}, {q}) outside {n} pixels"
                )));
            }
            if !(w >= 0.0) {
                return Err(Error::Config(format!("edge weight {w} is negative")));
            }
            if p == q {
                continue;
            }
            adj[p].push((q, w));
            adj[q].push((p, w));
        }
        Ok(Self::from_adjacency(adj))
    }

    fn from_adjacency(mut adj: Vec<Vec<(usize, f64)>>) -> Self {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        let mut edges = Vec::new();
        offsets.push(0);
        for list in &mut adj {
            list.sort_by_key(|&(q, _)| q);
            list.dedup_by_key(|&mut (q, _)| q);
            edges.extend_from_slice(list);
            offsets.push(edges.len());
        }
        Self { offsets, edges }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(neighbor, weight)` pairs of pixel `p`, ordered by neighbor index.
    pub fn neighbors(&self, p: usize) -> &[(usize, f64)] {
        &self.edges[self.offsets[p]..self.offsets[p + 1]]
    }

    pub fn weight(&self, p: usize, q: usize) -> Option<f64> {
        let list = self.neighbors(p);
        list.binary_search_by_key(&q, |&(n, _)| n)
            .ok()
            .map(|i| list[i].1)
    }

    pub fn degree(&self, p: usize) -> usize {
        self.offsets[p + 1] - self.offsets[p]
    }

    pub fn mean_degree(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.edges.len() as f64 / self.len() as f64
        }
    }

    /// Writes degree statistics and a 10-bin weight histogram as
    /// `kind,key,value` rows.
    pub fn write_stats<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["kind", "key", "value"])?;
        let degrees = (0..self.len()).map(|p| self.degree(p));
        let (min, max) = degrees.fold((usize::MAX, 0), |(lo, hi), d| (lo.min(d), hi.max(d)));
        wtr.write_record(["degree", "mean", &format!("{:.4}", self.mean_degree())])?;
        wtr.write_record(["degree", "min", &min.to_string()])?;
        wtr.write_record(["degree", "max", &max.to_string()])?;
        let mut bins = [0usize; 10];
        for &(_, w) in &self.edges {
            bins[((w * 10.0) as usize).min(9)] += 1;
        }
        for (i, count) in bins.iter().enumerate() {
            let key = format!("{:.1}-{:.1}", i as f64 / 10.0, (i + 1) as f64 / 10.0);
            wtr.write_record(["weight_hist", &key, &count.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::Io {
            path: "<graph stats>".into(),
            source: e,
        })?;
        Ok(())
    }
}

/// Squared distance between the cross patches (center + 4 neighbors) of two
/// pixels, summed over channels.
pub fn patch_distance2(img: &Image, p: (usize, usize), q: (usize, usize)) -> f64 {
    const CROSS: [(isize, isize); 5] = [(0, 0), (1, 0), (0, -1), (-1, 0), (0, 1)];
    let (w, h) = (img.width(), img.height());
    let mut d = 0.0;
    for (dx, dy) in CROSS {
        let (px, py) = (reflect(p.0 as isize + dx, w), reflect(p.1 as isize + dy, h));
        let (qx, qy) = (reflect(q.0 as isize + dx, w), reflect(q.1 as isize + dy, h));
        for c in 0..img.channels() {
            let diff = img.sample(px, py, c) - img.sample(qx, qy, c);
            d += diff * diff;
        }
    }
    d
}

/// The `k_best` strongest candidates of pixel `(x, y)` before symmetrization,
/// as `(pixel index, weight)`. Ties keep raster order.
pub fn best_candidates(img: &Image, nc: &NlConfig, x: usize, y: usize) -> Vec<(usize, f64)> {
    let r = nc.search_radius as isize;
    let (w, h) = (img.width() as isize, img.height() as isize);
    let inv_h2 = 1.0 / (nc.h_sim * nc.h_sim);
    let mut cands = Vec::with_capacity((2 * nc.search_radius + 1).pow(2));
    for qy in (y as isize - r).max(0)..=(y as isize + r).min(h - 1) {
        for qx in (x as isize - r).max(0)..=(x as isize + r).min(w - 1) {
            let (qx, qy) = (qx as usize, qy as usize);
            if (qx, qy) == (x, y) {
                continue;
            }
            let d = patch_distance2(img, (x, y), (qx, qy));
            cands.push((img.index(qx, qy), (-d * inv_h2).exp()));
        }
    }
    // stable: equal weights stay in raster order
    cands.sort_by(|a, b| b.1.total_cmp(&a.1));
    cands.truncate(nc.k_best);
    cands
}

/// Builds the symmetric similarity graph of `img`.
pub fn build_graph(img: &Image, nc: &NlConfig) -> Result<NonlocalGraph> {
    nc.validate()?;
    let (w, h) = (img.width(), img.height());
    let picks: Vec<Vec<(usize, f64)>> = (0..w * h)
        .into_par_iter()
        .map(|i| best_candidates(img, nc, i % w, i / w))
        .collect();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); w * h];
    for (p, list) in picks.iter().enumerate() {
        for &(q, wt) in list {
            adj[p].push((q, wt));
            adj[q].push((p, wt));
        }
    }
    Ok(NonlocalGraph::from_adjacency(adj))
}

/// Normalized nonlocal stencil at one pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct NlStencil {
    /// `(neighbor, h_q)` in graph order.
    pub neighbors: Vec<(usize, f64)>,
    pub self_weight: f64,
}

impl NlStencil {
    pub fn sum(&self) -> f64 {
        self.neighbors.iter().map(|&(_, h)| h).sum::<f64>() + self.self_weight
    }
}

/// Weights `h_q = w̃_q / (Σ w̃ + λ)` and `h_self = λ / (Σ w̃ + λ)` at pixel `p`,
/// with `w̃_q = w(p,q) |∇_w φ|^(p-2)` and `|∇_w φ|² = Σ_q w(p,q) g(p,q)`,
/// `g(p,q)` being the feature-space metric of the intensity step `p -> q`.
pub fn stencil_nl(
    graph: &NonlocalGraph,
    metric: &MetricContext<'_>,
    p: usize,
    cfg: &SolverConfig,
) -> Result<NlStencil> {
    let nbrs = graph.neighbors(p);
    let mut grad2 = 0.0;
    for &(q, w) in nbrs {
        grad2 += w * metric.kernel().metric_inner(&metric.edge_sample(p, q))?.gxx;
    }
    let scale = cfg.diffusivity(grad2);
    let denom = nbrs.iter().map(|&(_, w)| w * scale).sum::<f64>() + cfg.lambda;
    if !(denom > 0.0 && denom.is_finite()) {
        return Ok(NlStencil {
            neighbors: nbrs.iter().map(|&(q, _)| (q, 0.0)).collect(),
            self_weight: 1.0,
        });
    }
    Ok(NlStencil {
        neighbors: nbrs.iter().map(|&(q, w)| (q, w * scale / denom)).collect(),
        self_weight: cfg.lambda / denom,
    })
}

/// Jacobi sweep over a frozen similarity graph.
pub struct Nonlocal<'g> {
    pub graph: &'g NonlocalGraph,
}

impl Scheme for Nonlocal<'_> {
    fn sweep(
        &self,
        field: &KernelField,
        anchor: &KernelField,
        metric: &MetricContext<'_>,
        cfg: &SolverConfig,
    ) -> Result<(KernelField, f64)> {
        field.check_same_shape(anchor)?;
        let n = field.values().len();
        if self.graph.len() != n || metric.image().len() != n {
            return Err(Error::Dimension(
                "graph, field and image sizes differ".into(),
            ));
        }
        let (f, a) = (field.values(), anchor.values());
        let out = (0..n)
            .into_par_iter()
            .map(|p| {
                let st = stencil_nl(self.graph, metric, p, cfg)?;
                // without fidelity the self weight is zero unless the pixel is isolated,
                // in which case it holds its current value
                let own = if cfg.lambda > 0.0 { a[p] } else { f[p] };
                let mut v = st.self_weight * own;
                for &(q, h) in &st.neighbors {
                    v += h * f[q];
                }
                Ok((v, (st.sum() - 1.0).abs()))
            })
            .collect::<Result<Vec<_>>>()?;
        let err = out.iter().fold(0.0_f64, |m, &(_, e)| m.max(e));
        let values = out.into_iter().map(|(v, _)| v).collect();
        Ok((
            KernelField::new(field.width(), field.height(), values)?,
            err,
        ))
    }
}

/// NLTV (`kernel = None`) or its kernel-space variant. Gray images use the
/// default constant couple for the kernel; color images one couple per channel.
pub fn denoise_nltv(
    noisy: &Image,
    kernel: Option<&KernelSpec>,
    cfg: &SolverConfig,
    nc: &NlConfig,
) -> Result<Denoised> {
    denoise_nltv_observed(noisy, kernel, cfg, nc, &mut ())
}

pub fn denoise_nltv_observed(
    noisy: &Image,
    kernel: Option<&KernelSpec>,
    cfg: &SolverConfig,
    nc: &NlConfig,
    observer: &mut dyn Observer,
) -> Result<Denoised> {
    let graph = build_graph(noisy, nc)?;
    denoise_on_graph(noisy, kernel, None, &graph, cfg, observer)
}

/// Runs the nonlocal solver on a prebuilt graph. `rule` overrides the gray
/// couple and is ignored for color images.
pub fn denoise_on_graph(
    noisy: &Image,
    kernel: Option<&KernelSpec>,
    rule: Option<crate::coupling::CoupleRule>,
    graph: &NonlocalGraph,
    cfg: &SolverConfig,
    observer: &mut dyn Observer,
) -> Result<Denoised> {
    let kernel = kernel.copied().unwrap_or_else(KernelSpec::linear);
    let scheme = Nonlocal { graph };
    if noisy.channels() == 1 {
        let rule = rule.unwrap_or_else(|| crate::coupling::CoupleRule::gray_default(&kernel));
        solver::solve_gray(noisy, &kernel, rule, &scheme, cfg, observer)
    } else {
        solver::solve_color(noisy, &kernel, &scheme, cfg, observer)
    }
}
