use std::path::PathBuf;

use clap::Args;

use qclam::field_ops::GridSpec;
use qclam::{Error, Result, C64};

/// Flags shared by every subcommand. Each command names the ones it reads
/// and rejects the rest.
#[derive(Args, Debug, Clone)]
pub struct Options {
    /// Grid points per side, a power of two >= 64.
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    /// Half-width L of the square cell [-L, L]^2.
    #[arg(long, global = true)]
    pub grid_l: Option<f64>,
    /// Solver tolerance in (0, 1).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Sobolev exponent of the W^{1,p} error.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Comma-separated list, e.g. `0.2,0.1,0.05`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps_list: Option<Vec<f64>>,
    /// Distance kept from the unit circle by the error region.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "qclam-out")]
    pub out: PathBuf,
    /// Seed for the pseudorandom sample points.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

impl Options {
    /// Fails if a flag outside `allowed` was given.
    pub fn only(&self, command: &str, allowed: &[&str]) -> Result<()> {
        let given = [
            ("grid-n", self.grid_n.is_some()),
            ("grid-l", self.grid_l.is_some()),
            ("tol", self.tol.is_some()),
            ("p", self.p.is_some()),
            ("eps-list", self.eps_list.is_some()),
            ("delta", self.delta.is_some()),
        ];
        for (name, set) in given {
            if set && !allowed.contains(&name) {
                return Err(Error::validation(format!("--{name} does not apply to {command}")));
            }
        }
        Ok(())
    }

    pub fn grid(&self, default_n: usize) -> Result<GridSpec> {
        GridSpec::new(self.grid_l.unwrap_or(2.0), self.grid_n.unwrap_or(default_n))
    }

    pub fn tol(&self, default: f64) -> Result<f64> {
        let tol = self.tol.unwrap_or(default);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::validation(format!("tolerance {tol} must lie in (0, 1)")));
        }
        Ok(tol)
    }
}

/// `re,im` or a bare real number.
pub fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number {t:?}"));
    let c = match s.split_once(',') {
        Some((re, im)) => C64::new(parse(re)?, parse(im)?),
        None => C64::new(parse(s)?, 0.0),
    };
    if c.re.is_finite() && c.im.is_finite() {
        Ok(c)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}
