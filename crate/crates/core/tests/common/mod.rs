//! Test-only oracles, coded without touching the library's solver or
//! kernel paths: double-double kernel evaluation for finite differences,
//! plus plain-array GTV and NLTV iterations.
#![allow(dead_code)]

use std::path::PathBuf;

use kernel_tv::{Image, KernelSpec};
use twofloat::TwoFloat;

pub fn fixture(rel: &str) -> Image {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(rel);
    kernel_tv::io::load(&path).unwrap_or_else(|e| panic!("fixture {rel}: {e}"))
}

/// `|got - want| / max(|want|, 1e-6)`.
pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-6)
}

fn tf(v: f64) -> TwoFloat {
    TwoFloat::from(v)
}

/// `exp(y)` for small `y` by its power series, exact to double-double.
fn exp_small(y: TwoFloat) -> TwoFloat {
    let mut term = tf(1.0);
    let mut sum = tf(1.0);
    for n in 1..12 {
        term = term * y / tf(n as f64);
        sum += term;
    }
    sum
}

/// `ln(1 + e)` for small `e` by its power series.
fn ln1p_small(e: TwoFloat) -> TwoFloat {
    let mut pow = e;
    let mut sum = tf(0.0);
    for n in 1..12 {
        let t = pow / tf(n as f64);
        sum = if n % 2 == 1 { sum + t } else { sum - t };
        pow *= e;
    }
    sum
}

/// Kernel values near a base pair `(a0, b0)`. The kernel at the base point
/// is factored out in plain `f64` and only the small perturbation is
/// expanded, which keeps every digit of the differences that follow.
struct NearKernel {
    k: KernelSpec,
    base: TwoFloat,
    scale: f64,
}

impl NearKernel {
    fn new(k: &KernelSpec, a0: &[f64], b0: &[f64]) -> Self {
        let (a0, b0) = (dd(a0), dd(b0));
        let base = Self::exponent_arg(k, &a0, &b0);
        let scale = match *k {
            KernelSpec::Gaussian { .. } => base.hi().exp(),
            KernelSpec::Polynomial { degree } => base.hi().powf(degree),
        };
        Self { k: *k, base, scale }
    }

    /// `-|a-b|^2 / 2δ` for the Gaussian, `a·b` for the polynomial.
    fn exponent_arg(k: &KernelSpec, a: &[TwoFloat], b: &[TwoFloat]) -> TwoFloat {
        let mut acc = tf(0.0);
        match *k {
            KernelSpec::Gaussian { delta } => {
                for (x, y) in a.iter().zip(b) {
                    let t = *x - *y;
                    acc += t * t;
                }
                -acc / (tf(2.0) * tf(delta))
            }
            KernelSpec::Polynomial { .. } => {
                for (x, y) in a.iter().zip(b) {
                    acc += *x * *y;
                }
                acc
            }
        }
    }

    /// `k(a, b) / scale`.
    fn relative(&self, a: &[TwoFloat], b: &[TwoFloat]) -> TwoFloat {
        let z = Self::exponent_arg(&self.k, a, b);
        match self.k {
            KernelSpec::Gaussian { .. } => exp_small(z - self.base),
            KernelSpec::Polynomial { degree } => {
                exp_small(tf(degree) * ln1p_small((z - self.base) / self.base))
            }
        }
    }
}

/// `v + t * dv` per channel.
fn shift(v: &[f64], dv: &[f64], t: TwoFloat) -> Vec<TwoFloat> {
    v.iter().zip(dv).map(|(&x, &d)| tf(x) + t * tf(d)).collect()
}

fn dd(v: &[f64]) -> Vec<TwoFloat> {
    v.iter().map(|&x| tf(x)).collect()
}

pub const FD_STEP: f64 = 1e-6;

/// Central difference of `t -> k(a + t da, b)` at 0.
pub fn fd_first(k: &KernelSpec, a: &[f64], b: &[f64], da: &[f64]) -> f64 {
    let near = NearKernel::new(k, a, b);
    let h = tf(FD_STEP);
    let bb = dd(b);
    let up = near.relative(&shift(a, da, h), &bb);
    let dn = near.relative(&shift(a, da, -h), &bb);
    near.scale * ((up - dn) / (tf(2.0) * h)).hi()
}

/// Mixed central difference of `(s, t) -> k(a + s du, a + t dv)` at 0.
pub fn fd_mixed(k: &KernelSpec, a: &[f64], du: &[f64], dv: &[f64]) -> f64 {
    let near = NearKernel::new(k, a, a);
    let h = tf(FD_STEP);
    let f = |s: TwoFloat, t: TwoFloat| near.relative(&shift(a, du, s), &shift(a, dv, t));
    let num = f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h);
    near.scale * (num / (tf(4.0) * h * h)).hi()
}

/// Second central difference of `t -> k(a + t da + t^2/2 daa, b)` at 0.
pub fn fd_second(k: &KernelSpec, a: &[f64], b: &[f64], da: &[f64], daa: &[f64]) -> f64 {
    let near = NearKernel::new(k, a, b);
    let h = tf(FD_STEP);
    let bb = dd(b);
    let path = |t: TwoFloat| -> Vec<TwoFloat> {
        a.iter()
            .zip(da)
            .zip(daa)
            .map(|((&x, &d), &dd)| tf(x) + t * tf(d) + t * t * tf(dd) / tf(2.0))
            .collect()
    };
    let num = near.relative(&path(h), &bb) - tf(2.0) * near.relative(&path(tf(0.0)), &bb)
        + near.relative(&path(-h), &bb);
    near.scale * (num / (h * h)).hi()
}

/// Edge-replicated read of a gray plane.
fn at(u: &[f64], w: usize, h: usize, x: isize, y: isize) -> f64 {
    let x = x.clamp(0, w as isize - 1) as usize;
    let y = y.clamp(0, h as isize - 1) as usize;
    u[y * w + x]
}

/// Plain GTV fixed-point iteration on a gray plane: lagged diffusivity
/// `(|grad u|^2 + eps)^((p-2)/2)` at the four half-points, Jacobi update
/// `u = (sum w_R u_R + lambda u0) / (sum w_R + lambda)`.
pub fn classical_gtv(
    u0: &[f64],
    w: usize,
    h: usize,
    lambda: f64,
    p: f64,
    eps: f64,
    iters: usize,
) -> Vec<f64> {
    let mut u = u0.to_vec();
    for _ in 0..iters {
        let cx =
            |u: &[f64], x: isize, y: isize| 0.5 * (at(u, w, h, x + 1, y) - at(u, w, h, x - 1, y));
        let cy =
            |u: &[f64], x: isize, y: isize| 0.5 * (at(u, w, h, x, y + 1) - at(u, w, h, x, y - 1));
        let mut next = vec![0.0; w * h];
        for y in 0..h as isize {
            for x in 0..w as isize {
                let uo = at(&u, w, h, x, y);
                let mut num = lambda * u0[y as usize * w + x as usize];
                let mut den = lambda;
                for (dx, dy) in [(1, 0), (0, -1), (-1, 0), (0, 1)] {
                    let ur = at(&u, w, h, x + dx, y + dy);
                    let along = ur - uo;
                    let across = if dx != 0 {
                        0.5 * (cy(&u, x, y) + cy(&u, x + dx, y))
                    } else {
                        0.5 * (cx(&u, x, y) + cx(&u, x, y + dy))
                    };
                    let wt = (along * along + across * across + eps).powf(0.5 * (p - 2.0));
                    num += wt * ur;
                    den += wt;
                }
                next[y as usize * w + x as usize] = num / den;
            }
        }
        u = next;
    }
    u
}

/// Similarity graph by brute force: every window candidate is scored, the
/// `k` best are kept (ties in scan order), then edges are mirrored.
pub fn brute_graph(
    u: &[f64],
    w: usize,
    h: usize,
    radius: isize,
    k: usize,
    h_sim: f64,
) -> Vec<Vec<(usize, f64)>> {
    let patch = |x: isize, y: isize, qx: isize, qy: isize| -> f64 {
        [(0, 0), (1, 0), (0, -1), (-1, 0), (0, 1)]
            .iter()
            .map(|&(dx, dy)| {
                let d = at(u, w, h, x + dx, y + dy) - at(u, w, h, qx + dx, qy + dy);
                d * d
            })
            .sum()
    };
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut cands = Vec::new();
            for qy in y - radius..=y + radius {
                for qx in x - radius..=x + radius {
                    let inside = qx >= 0 && qy >= 0 && qx < w as isize && qy < h as isize;
                    if !inside || (qx, qy) == (x, y) {
                        continue;
                    }
                    let wt = (-patch(x, y, qx, qy) / (h_sim * h_sim)).exp();
                    cands.push((qy as usize * w + qx as usize, wt));
                }
            }
            // insertion sort keeps equal weights in scan order
            let mut sorted: Vec<(usize, f64)> = Vec::new();
            for c in cands {
                let pos = sorted
                    .iter()
                    .position(|s| s.1 < c.1)
                    .unwrap_or(sorted.len());
                sorted.insert(pos, c);
            }
            let p = y as usize * w + x as usize;
            for &(q, wt) in sorted.iter().take(k) {
                if !adj[p].iter().any(|e| e.0 == q) {
                    adj[p].push((q, wt));
                }
                if !adj[q].iter().any(|e| e.0 == p) {
                    adj[q].push((p, wt));
                }
            }
        }
    }
    for list in &mut adj {
        list.sort_by_key(|e| e.0);
    }
    adj
}

/// Plain NLTV iteration on a fixed graph: `g_p = sum_q w (u_q - u_p)^2`,
/// `w~ = w (g_p + eps)^((p-2)/2)`, Jacobi update with fidelity `lambda`.
pub fn classical_nltv(
    u0: &[f64],
    graph: &[Vec<(usize, f64)>],
    lambda: f64,
    p: f64,
    eps: f64,
    iters: usize,
) -> Vec<f64> {
    let mut u = u0.to_vec();
    for _ in 0..iters {
        let next: Vec<f64> = (0..u.len())
            .map(|i| {
                let g: f64 = graph[i]
                    .iter()
                    .map(|&(q, wt)| wt * (u[q] - u[i]).powi(2))
                    .sum();
                let scale = (g + eps).powf(0.5 * (p - 2.0));
                let mut num = lambda * u0[i];
                let mut den = lambda;
                for &(q, wt) in &graph[i] {
                    num += wt * scale * u[q];
                    den += wt * scale;
                }
                num / den
            })
            .collect();
        u = next;
    }
    u
}

/// Random derivative samples for both kernel families, alternating gray and
/// color. Intensities stay in `[0.05, 1]` so polynomial bases are positive.
pub fn random_samples(n: usize, seed: u64) -> Vec<(KernelSpec, kernel_tv::GradSample)> {
    use kernel_tv::{GradSample, PixelVec};
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let ch = if i % 2 == 0 { 1 } else { 3 };
            let mut vec = |lo: f64, hi: f64| {
                let v: Vec<f64> = (0..ch).map(|_| rng.random_range(lo..hi)).collect();
                PixelVec::from_slice(&v).unwrap()
            };
            let (a, b) = (vec(0.05, 1.0), vec(0.05, 1.0));
            let (dax, day) = (vec(-0.5, 0.5), vec(-0.5, 0.5));
            let k = if (i / 2) % 2 == 0 {
                KernelSpec::gaussian(rng.random_range(0.1..1.0)).unwrap()
            } else {
                KernelSpec::polynomial(rng.random_range(1.0..3.0)).unwrap()
            };
            (k, GradSample::new(a, b, dax, day).unwrap())
        })
        .collect()
}

/// Worst relative errors of the closed-form first derivatives and metric
/// terms against finite differences over `samples`.
pub fn derivative_errors(samples: &[(KernelSpec, kernel_tv::GradSample)]) -> (f64, f64) {
    let mut first = 0.0_f64;
    let mut second = 0.0_f64;
    for (k, s) in samples {
        let (a, b) = (s.a.as_slice(), s.b.as_slice());
        let (dx, dy) = (s.dax.as_slice(), s.day.as_slice());
        first = first
            .max(rel_err(k.grad_k_x(s).unwrap(), fd_first(k, a, b, dx)))
            .max(rel_err(k.grad_k_y(s).unwrap(), fd_first(k, a, b, dy)));
        let g = k.metric_inner(s).unwrap();
        second = second
            .max(rel_err(g.gxx, fd_mixed(k, a, dx, dx)))
            .max(rel_err(g.gyy, fd_mixed(k, a, dy, dy)))
            .max(rel_err(g.gxy, fd_mixed(k, a, dx, dy)));
    }
    (first, second)
}

/// 64x64 gray test plane with structure and multiplicative noise.
pub fn noisy_plane(seed: u64) -> Image {
    let (w, h) = (64, 64);
    let clean: Vec<f64> = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            let step = if x + 0.5 * y > 40.0 { 0.7 } else { 0.25 };
            (step + 0.1 * (x / 6.0).sin() * (y / 9.0).cos()).clamp(0.0, 1.0)
        })
        .collect();
    let img = Image::new(w, h, 1, clean).unwrap();
    kernel_tv::add_multiplicative_gaussian(&img, &kernel_tv::NoiseSpec::new(20.0, seed).unwrap())
        .unwrap()
}
