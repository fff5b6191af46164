use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use kernel_tv::metrics::{external_scores, format_db};
use kernel_tv::nltv::{build_graph, denoise_on_graph};
use kernel_tv::solver::Denoised;
use kernel_tv::{
    enhance as lift, gtv, io as imgio, psnr, run_bench, select_kernel_param, write_bench_csv,
    BenchConfig, BenchImage, Error, Image, KernelFamily, KernelSpec, Method, NoiseSpec,
    SolverConfig,
};

use crate::args::{
    BenchArgs, DenoiseArgs, EnhanceArgs, KernelArgs, NoiseArgs, NonlocalArgs, SweepArgs,
};

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Writes CSV to a file, or to stdout without a path.
fn with_output(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            body(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
        }
    }
    Ok(())
}

/// Runs the chosen method, optionally writing nonlocal graph statistics.
fn run(
    noisy: &Image,
    kernel_args: &KernelArgs,
    param: Option<f64>,
    cfg: &SolverConfig,
    nl: &NonlocalArgs,
    graph_stats: Option<&Path>,
) -> Result<Denoised> {
    let method = kernel_args.method;
    let kernel = method.kernel(param)?;
    let rule = kernel_args.rule(noisy.channels())?;
    if method.is_nonlocal() {
        let graph = build_graph(noisy, &nl.config())?;
        if let Some(path) = graph_stats {
            let mut w = create(path)?;
            graph.write_stats(&mut w)?;
            w.flush()?;
        }
        Ok(denoise_on_graph(
            noisy,
            Some(&kernel),
            rule,
            &graph,
            cfg,
            &mut (),
        )?)
    } else {
        if graph_stats.is_some() {
            return Err(Error::Config("--graph-stats needs a nonlocal method".into()).into());
        }
        Ok(gtv::denoise_observed(noisy, &kernel, rule, cfg, &mut ())?)
    }
}

pub fn denoise(a: DenoiseArgs) -> Result<()> {
    let param = a.kernel.param()?;
    a.kernel.method.kernel(param)?;
    let cfg = a.solver.config();
    cfg.validate()?;
    let noisy = imgio::load(&a.input)?;
    let reference = a.reference.as_deref().map(imgio::load).transpose()?;
    let out = run(
        &noisy,
        &a.kernel,
        param,
        &cfg,
        &a.nonlocal,
        a.graph_stats.as_deref(),
    )?;
    imgio::save(&a.output, &out.image)?;
    if let Some(path) = &a.diagnostics {
        let mut w = create(path)?;
        out.write_diagnostics(&mut w)?;
        w.flush()?;
    }
    if let Some(r) = reference {
        println!("PSNR {} dB", format_db(psnr(&r, &out.image)?));
    }
    Ok(())
}

/// Kernel-space image of `img` after `cfg.max_iters` iterations (none for 0).
fn enhanced(img: &Image, a: &EnhanceArgs, param: Option<f64>, cfg: &SolverConfig) -> Result<Image> {
    let kernel: KernelSpec = a.kernel.method.kernel(param)?;
    let fields = if cfg.max_iters == 0 {
        if a.kernel.couple_level.is_some() {
            let rule = a.kernel.rule(img.channels())?.expect("level given");
            let b = kernel_tv::make_coupled(rule, &kernel, img)?;
            vec![kernel_tv::kernel_field(&kernel, img, &b)?]
        } else {
            lift::lift(img, &kernel)?
        }
    } else {
        run(img, &a.kernel, param, cfg, &a.nonlocal, None)?.fields
    };
    Ok(lift::kernel_image(&fields, &kernel)?)
}

/// Picks the parameter with the lowest external score; ties go to the smaller one.
fn best_scored(path: &Path) -> Result<f64> {
    let scores = external_scores(path)?;
    let mut best: Option<(f64, f64)> = None;
    for (id, &score) in &scores {
        // ids are bare parameters ("0.3") or candidate files ("cands/0.3.png")
        let stem = Path::new(id).file_stem().and_then(|s| s.to_str());
        let param: f64 = id
            .parse()
            .ok()
            .or_else(|| stem.and_then(|s| s.parse().ok()))
            .ok_or_else(|| Error::Config(format!("score id {id:?} is not a kernel parameter")))?;
        let better = match best {
            None => true,
            Some((bp, bs)) => score < bs || (score == bs && param < bp),
        };
        if better {
            best = Some((param, score));
        }
    }
    best.map(|(p, _)| p)
        .ok_or_else(|| Error::Config(format!("{}: no scores", path.display())).into())
}

pub fn enhance(a: EnhanceArgs) -> Result<()> {
    let method = a.kernel.method;
    let mut param = a.kernel.param()?;
    let mut cfg = a.solver.config();
    let iters = cfg.max_iters;
    cfg.max_iters = iters.max(1);
    cfg.validate()?;
    cfg.max_iters = iters;
    let img = imgio::load(&a.input)?;

    if let Some(dir) = &a.candidates_dir {
        let family = method
            .family()
            .ok_or_else(|| Error::Config("--candidates-dir needs a kernel method".into()))?;
        let grid = a
            .grid
            .clone()
            .map(|g| g.0)
            .unwrap_or_else(|| family.default_grid());
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let ext = a
            .output
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("png");
        for &g in &grid {
            let out = enhanced(&img, &a, Some(g), &cfg)?;
            imgio::save(&dir.join(format!("{g}.{ext}")), &out)?;
        }
    }
    if let Some(path) = &a.scores {
        if method.family().is_none() {
            return Err(Error::Config("--scores needs a kernel method".into()).into());
        }
        let chosen = best_scored(path)?;
        eprintln!("selected parameter {chosen}");
        param = Some(chosen);
    }
    method.kernel(param)?;
    imgio::save(&a.output, &enhanced(&img, &a, param, &cfg)?)?;
    Ok(())
}

pub fn noise(a: NoiseArgs) -> Result<()> {
    let ns = NoiseSpec::new(a.sigma, a.seed)?;
    let img = imgio::load(&a.input)?;
    imgio::save(
        &a.output,
        &kernel_tv::add_multiplicative_gaussian(&img, &ns)?,
    )?;
    Ok(())
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let family: KernelFamily = a.family.into();
    let grid = a
        .grid
        .clone()
        .map(|g| g.0)
        .unwrap_or_else(|| family.default_grid());
    let cfg = a.solver.config();
    cfg.validate()?;
    let nc = a.nonlocal.config();
    nc.validate()?;
    let clean = imgio::load(&a.clean)?;
    let noisy = match &a.noisy {
        Some(p) => imgio::load(p)?,
        None => kernel_tv::add_multiplicative_gaussian(&clean, &NoiseSpec::new(a.sigma, a.seed)?)?,
    };
    let method = match (family, a.nonlocal_solver) {
        (KernelFamily::Gaussian, false) => Method::GkGtv,
        (KernelFamily::Polynomial, false) => Method::PkGtv,
        (KernelFamily::Gaussian, true) => Method::GkNltv,
        (KernelFamily::Polynomial, true) => Method::PkNltv,
    };
    let selection = select_kernel_param(&noisy, family, &grid)?;
    let mut rows = Vec::with_capacity(grid.len());
    for &(param, report) in &selection.sweep {
        let out = method.run(&noisy, Some(param), &cfg, &nc)?;
        rows.push((param, report.ratio, psnr(&clean, &out.image)?));
    }
    with_output(a.out.as_deref(), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["param", "ratio", "psnr_db"])?;
        for (param, ratio, db) in &rows {
            csv.write_record([format!("{param}"), format!("{ratio:.9}"), format_db(*db)])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    eprintln!("area-ratio choice: {}", selection.chosen);
    Ok(())
}

fn bench_images(dir: &Path) -> Result<Vec<BenchImage>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()?;
    paths.retain(|p| {
        matches!(
            p.extension()
                .and_then(|e| e.to_str())
                .map(str::to_ascii_lowercase)
                .as_deref(),
            Some("pgm" | "ppm" | "png")
        )
    });
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!("no images in {}", dir.display())).into());
    }
    paths
        .iter()
        .map(|p| {
            Ok(BenchImage {
                name: p
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("?")
                    .to_string(),
                image: imgio::load(p)?,
            })
        })
        .collect()
}

pub fn bench(a: BenchArgs) -> Result<()> {
    let cfg = BenchConfig {
        sigmas: a.sigma.clone(),
        methods: a.methods.clone(),
        seed: a.seed,
        lambda: a.lambda,
        solver: SolverConfig {
            p: a.p,
            max_iters: a.iters,
            eps: a.eps,
            ..SolverConfig::default()
        },
        nonlocal: a.nonlocal.config(),
        timing: a.timing,
        ..BenchConfig::default()
    };
    cfg.solver.validate()?;
    if let Some(l) = cfg.lambda {
        SolverConfig {
            lambda: l,
            ..cfg.solver.clone()
        }
        .validate()?;
    }
    let images = bench_images(&a.dir)?;
    let rows = run_bench(&images, &cfg)?;
    with_output(a.out.as_deref(), |w| Ok(write_bench_csv(&rows, w)?))
}
