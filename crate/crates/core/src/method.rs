use std::fmt;
use std::str::FromStr;

use crate::coupling::CoupleRule;
use crate::error::{Error, Result};
use crate::gtv;
use crate::image::Image;
use crate::kernels::{KernelFamily, KernelSpec};
use crate::nltv::{self, NlConfig};
use crate::solver::{Denoised, Observer, SolverConfig};

/// The six denoising methods of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Gtv,
    GkGtv,
    PkGtv,
    Nltv,
    GkNltv,
    PkNltv,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Gtv,
        Method::GkGtv,
        Method::PkGtv,
        Method::Nltv,
        Method::GkNltv,
        Method::PkNltv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gtv => "gtv",
            Method::GkGtv => "gk-gtv",
            Method::PkGtv => "pk-gtv",
            Method::Nltv => "nltv",
            Method::GkNltv => "gk-nltv",
            Method::PkNltv => "pk-nltv",
        }
    }

    /// The kernel family this method needs a parameter for, if any.
    pub fn family(self) -> Option<KernelFamily> {
        match self {
            Method::GkGtv | Method::GkNltv => Some(KernelFamily::Gaussian),
            Method::PkGtv | Method::PkNltv => Some(KernelFamily::Polynomial),
            Method::Gtv | Method::Nltv => None,
        }
    }

    pub fn is_nonlocal(self) -> bool {
        matches!(self, Method::Nltv | Method::GkNltv | Method::PkNltv)
    }

    /// The kernel used by this method: the linear kernel for the plain
    /// variants, otherwise the family at `param`.
    pub fn kernel(self, param: Option<f64>) -> Result<KernelSpec> {
        match (self.family(), param) {
            (None, None) => Ok(KernelSpec::linear()),
            (None, Some(_)) => Err(Error::Config(format!(
                "{} takes no kernel parameter",
                self.name()
            ))),
            (Some(f), Some(v)) => f.with_param(v),
            (Some(KernelFamily::Gaussian), None) => Err(Error::Config(format!(
                "{} requires a Gaussian delta",
                self.name()
            ))),
            (Some(KernelFamily::Polynomial), None) => Err(Error::Config(format!(
                "{} requires a polynomial degree",
                self.name()
            ))),
        }
    }

    /// Runs the method on `noisy`.
    pub fn run(
        self,
        noisy: &Image,
        param: Option<f64>,
        cfg: &SolverConfig,
        nc: &NlConfig,
    ) -> Result<Denoised> {
        self.run_observed(noisy, param, None, cfg, nc, &mut ())
    }

    /// Like [`Method::run`] with an optional gray couple override and a
    /// sweep observer.
    pub fn run_observed(
        self,
        noisy: &Image,
        param: Option<f64>,
        rule: Option<CoupleRule>,
        cfg: &SolverConfig,
        nc: &NlConfig,
        observer: &mut dyn Observer,
    ) -> Result<Denoised> {
        let kernel = self.kernel(param)?;
        if self.is_nonlocal() {
            let graph = nltv::build_graph(noisy, nc)?;
            nltv::denoise_on_graph(noisy, Some(&kernel), rule, &graph, cfg, observer)
        } else {
            gtv::denoise_observed(noisy, &kernel, rule, cfg, observer)
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}
