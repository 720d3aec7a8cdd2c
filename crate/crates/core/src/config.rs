//! Plain-text `key = value` run configurations and expected-value files.
//!
//! Blank lines and text after `#` are ignored. Keys may appear once; unknown
//! keys are rejected. Paths are resolved against the directory of the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::anisotropy::Anisotropy;
use crate::error::{Error, Result};
use crate::graphcut::Select;
use crate::gridset::{read_snapshot, BinarySet, GridDomain};
use crate::oracle2d::SmoothCurve;
use crate::shapes::{rasterize, WinterbottomShape};
use crate::stepper::{ContactAngleField, DissipationDistance, ForcingField, Scheme, SpaceProfile, TimeProfile};

const RUN_KEYS: &[&str] = &[
    "name",
    "dim",
    "half_width",
    "height",
    "h",
    "anisotropy",
    "beta",
    "forcing",
    "initial",
    "tau",
    "t_end",
    "select",
    "snapshot_stride",
    "output",
    "seed",
    "distance",
    "oracle_nodes",
    "oracle_dt",
    "r0",
    "density_radii",
    "wulff",
    "winterbottom",
    "expected",
    "checks",
];

/// Parses `key = value` lines, rejecting keys outside `allowed` and repeats.
pub fn parse_pairs(text: &str, allowed: &[&str]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !allowed.contains(&k) {
            return Err(Error::Config(format!("line {}: unknown key '{k}'", no + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: key '{k}' given twice", no + 1)));
        }
    }
    Ok(out)
}

/// A real number, also accepting `a/b`.
pub fn parse_real(s: &str) -> Result<f64> {
    let bad = || Error::Config(format!("'{s}' is not a number"));
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().map_err(|_| bad())? / b.trim().parse::<f64>().map_err(|_| bad())?,
        None => s.trim().parse::<f64>().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(parse_real).collect()
}

/// `kind` or `kind:args`.
fn split_spec(s: &str) -> (&str, &str) {
    match s.split_once(':') {
        Some((k, a)) => (k.trim(), a.trim()),
        None => (s.trim(), ""),
    }
}

fn list_of(args: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let v = parse_list(args)?;
    if v.len() != n {
        return Err(Error::Config(format!("{what} takes {n} numbers, got {}", v.len())));
    }
    Ok(v)
}

/// Exterior or interior Wulff ball for the avoidance check.
#[derive(Clone, Debug, PartialEq)]
pub struct WulffFixture {
    pub point: Vec<f64>,
    pub r0: f64,
    pub inside: bool,
}

/// Winterbottom barrier W_{β₀,r₀} centred at `center` on the floor.
#[derive(Clone, Debug, PartialEq)]
pub struct WinterbottomFixture {
    pub beta0: f64,
    pub r0: f64,
    pub center: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub name: String,
    pub dim: usize,
    pub half_width: f64,
    pub height: f64,
    pub h: f64,
    /// `euclidean`, `diag:a,b[,c]`, `linear:row;row[;row]`, `smoothed_l1:ε` or `table:path`.
    pub anisotropy: String,
    /// A constant, or `linear:b0,b1` for β(x) = b0 + b1·x₁.
    pub beta: String,
    /// A constant, `poly:c0,c1,...` (time polynomial) or `gaussian:amp,σ,x,y[,z]`.
    pub forcing: String,
    /// `half_disk:cx,r`, `arc:cx,cy,r`, `box:x0,x1,height`, `winterbottom:β0,R,cx` or `snapshot:path`.
    pub initial: String,
    pub taus: Vec<f64>,
    pub t_end: f64,
    pub select: Select,
    pub snapshot_stride: usize,
    pub output: PathBuf,
    pub seed: u64,
    pub distance: DissipationDistance,
    pub oracle_nodes: usize,
    pub oracle_dt: f64,
    /// Length scale for relative distances.
    pub r0: Option<f64>,
    pub density_radii: Vec<f64>,
    pub wulff: Option<WulffFixture>,
    pub winterbottom: Option<WinterbottomFixture>,
    pub expected: Option<PathBuf>,
    pub checks: Vec<String>,
    /// Directory relative paths were resolved against.
    pub base: PathBuf,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let kv = parse_pairs(text, RUN_KEYS)?;
        let get = |k: &str| kv.get(k).map(String::as_str);
        let need = |k: &str| get(k).ok_or_else(|| Error::Config(format!("missing key '{k}'")));
        let real_or = |k: &str, d: f64| get(k).map_or(Ok(d), parse_real);
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let dim = get("dim").map_or(Ok(2), |s| s.parse::<usize>().map_err(|_| Error::Config(format!("bad dim '{s}'"))))?;
        if dim != 2 && dim != 3 {
            return Err(Error::Config(format!("dim must be 2 or 3, got {dim}")));
        }
        let taus = parse_list(need("tau")?)?;
        let t_end = parse_real(need("t_end")?)?;
        if taus.is_empty() || taus.iter().any(|t| !(*t > 0.0 && *t < t_end)) {
            return Err(Error::Config(format!("every τ must satisfy 0 < τ < T = {t_end}")));
        }
        let select = match get("select").unwrap_or("minimal") {
            "minimal" => Select::Minimal,
            "maximal" => Select::Maximal,
            "any" => Select::Any,
            s => return Err(Error::Config(format!("unknown select '{s}' (minimal | maximal | any)"))),
        };
        let int = |k: &str, d: u64| {
            get(k).map_or(Ok(d), |s| s.parse::<u64>().map_err(|_| Error::Config(format!("bad integer for {k}: '{s}'"))))
        };
        let wulff = get("wulff")
            .map(|s| -> Result<WulffFixture> {
                // side:x,y[,z],r0
                let (side, args) = split_spec(s);
                let v = list_of(args, dim + 1, "wulff")?;
                let inside = match side {
                    "inside" => true,
                    "outside" => false,
                    _ => return Err(Error::Config(format!("wulff side must be inside or outside, got '{side}'"))),
                };
                Ok(WulffFixture { point: v[..dim].to_vec(), r0: v[dim], inside })
            })
            .transpose()?;
        let winterbottom = get("winterbottom")
            .map(|s| -> Result<WinterbottomFixture> {
                let v = list_of(s, dim + 1, "winterbottom")?;
                Ok(WinterbottomFixture { beta0: v[0], r0: v[1], center: v[2..].to_vec() })
            })
            .transpose()?;
        let cfg = Self {
            name: get("name").unwrap_or("run").to_string(),
            dim,
            half_width: real_or("half_width", 1.0)?,
            height: real_or("height", 1.0)?,
            h: parse_real(need("h")?)?,
            anisotropy: get("anisotropy").unwrap_or("euclidean").to_string(),
            beta: get("beta").unwrap_or("0").to_string(),
            forcing: get("forcing").unwrap_or("0").to_string(),
            initial: need("initial")?.to_string(),
            taus,
            t_end,
            select,
            snapshot_stride: int("snapshot_stride", 10)?.max(1) as usize,
            output: resolve(get("output").unwrap_or("runs")),
            seed: int("seed", 0)?,
            distance: get("distance").map_or(Ok(DissipationDistance::default()), str::parse)?,
            oracle_nodes: int("oracle_nodes", 512)? as usize,
            oracle_dt: real_or("oracle_dt", 1e-4)?,
            r0: get("r0").map(parse_real).transpose()?,
            density_radii: get("density_radii").map_or(Ok(Vec::new()), parse_list)?,
            wulff,
            winterbottom,
            expected: get("expected").map(resolve),
            checks: get("checks")
                .map(|s| s.split(',').map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect())
                .unwrap_or_default(),
            base: base.to_path_buf(),
        };
        for p in cfg.referenced_files() {
            if !p.exists() {
                return Err(Error::Config(format!("referenced file {} does not exist", p.display())));
            }
        }
        Ok(cfg)
    }

    fn referenced_files(&self) -> Vec<PathBuf> {
        let mut out: Vec<PathBuf> = self.expected.iter().cloned().collect();
        for spec in [&self.anisotropy, &self.initial] {
            let (kind, arg) = split_spec(spec);
            if kind == "table" || kind == "snapshot" {
                out.push(self.base.join(arg));
            }
        }
        out
    }

    pub fn grid(&self) -> Result<Arc<GridDomain>> {
        Ok(Arc::new(GridDomain::centered(self.dim, self.half_width, self.height, self.h)?))
    }

    pub fn anisotropy(&self) -> Result<Anisotropy> {
        let n = self.dim;
        let (kind, args) = split_spec(&self.anisotropy);
        match kind {
            "euclidean" => Anisotropy::euclidean(n),
            "diag" => Anisotropy::diag(&list_of(args, n, "diag")?),
            "linear" => {
                let rows = args.split(';').map(|r| list_of(r, n, "linear row")).collect::<Result<Vec<_>>>()?;
                if rows.len() != n {
                    return Err(Error::Config(format!("linear needs {n} rows")));
                }
                Anisotropy::linear_map(rows)
            }
            "smoothed_l1" => Anisotropy::smoothed_l1(n, list_of(args, 1, "smoothed_l1")?[0]),
            "table" => Anisotropy::from_table_file(&self.base.join(args), n),
            _ => Err(Error::Config(format!("unknown anisotropy '{kind}'"))),
        }
    }

    /// β on the floor cells; inadmissible fields fail with the bound quoted.
    pub fn beta(&self, grid: &GridDomain, phi: &Anisotropy) -> Result<ContactAngleField> {
        let (kind, args) = split_spec(&self.beta);
        match kind {
            "linear" => {
                let v = list_of(args, 2, "linear β")?;
                ContactAngleField::new(grid, phi, |x| v[0] + v[1] * x[0])
            }
            _ => ContactAngleField::constant(grid, phi, parse_real(&self.beta)?),
        }
    }

    /// β as a function of the first lateral coordinate, for the planar oracle.
    pub fn beta_fn(&self) -> Result<impl Fn(f64) -> f64 + Send + Sync + Copy> {
        let (kind, args) = split_spec(&self.beta);
        let (b0, b1) = match kind {
            "linear" => {
                let v = list_of(args, 2, "linear β")?;
                (v[0], v[1])
            }
            _ => (parse_real(&self.beta)?, 0.0),
        };
        Ok(move |x: f64| b0 + b1 * x)
    }

    pub fn forcing(&self) -> Result<ForcingField> {
        let (kind, args) = split_spec(&self.forcing);
        match kind {
            "poly" => Ok(ForcingField::Separable {
                time: TimeProfile::Polynomial(parse_list(args)?),
                space: SpaceProfile::Constant(1.0),
            }),
            "gaussian" => {
                let v = list_of(args, self.dim + 2, "gaussian forcing")?;
                Ok(ForcingField::Separable {
                    time: TimeProfile::Constant(1.0),
                    space: SpaceProfile::Gaussian { amplitude: v[0], sigma: v[1], center: v[2..].to_vec() },
                })
            }
            _ => Ok(ForcingField::Constant(parse_real(&self.forcing)?)),
        }
    }

    pub fn scheme(&self) -> Result<Scheme> {
        let grid = self.grid()?;
        let phi = self.anisotropy()?;
        let beta = self.beta(&grid, &phi)?;
        Ok(Scheme::new(&grid, &phi, beta, self.forcing()?)?.with_distance(self.distance))
    }

    pub fn initial_set(&self, grid: &Arc<GridDomain>) -> Result<BinarySet> {
        let (kind, args) = split_spec(&self.initial);
        let n = self.dim;
        match kind {
            "half_disk" => {
                let v = list_of(args, n, "half_disk")?;
                let (c, r) = (&v[..n - 1], v[n - 1]);
                Ok(BinarySet::from_predicate(grid, |x| {
                    let lateral: f64 = c.iter().zip(x).map(|(ci, xi)| (xi - ci).powi(2)).sum();
                    lateral + x[n - 1] * x[n - 1] < r * r
                }))
            }
            "arc" if n == 2 => {
                let v = list_of(args, 3, "arc")?;
                Ok(BinarySet::from_predicate(grid, |x| (x[0] - v[0]).powi(2) + (x[1] - v[1]).powi(2) < v[2] * v[2]))
            }
            "box" => {
                let v = list_of(args, 3, "box")?;
                Ok(BinarySet::from_predicate(grid, |x| {
                    x[..n - 1].iter().all(|xi| *xi > v[0] && *xi < v[1]) && x[n - 1] < v[2]
                }))
            }
            "winterbottom" => {
                let v = list_of(args, n + 1, "winterbottom")?;
                let w = WinterbottomShape::new(&self.anisotropy()?, v[0], v[1], &v[2..])?;
                Ok(rasterize(&w, grid)?.set)
            }
            "snapshot" => read_snapshot(&self.base.join(args), grid),
            _ => Err(Error::Config(format!("unknown initial datum '{kind}'"))),
        }
    }

    /// The initial datum as an oracle curve (n = 2, `half_disk` or `arc`).
    pub fn initial_curve(&self) -> Result<SmoothCurve> {
        if self.dim != 2 {
            return Err(Error::Config("the oracle is planar (dim = 2)".into()));
        }
        let (kind, args) = split_spec(&self.initial);
        match kind {
            "half_disk" => {
                let v = list_of(args, 2, "half_disk")?;
                SmoothCurve::half_circle(v[0], v[1], self.oracle_nodes)
            }
            "arc" => {
                let v = list_of(args, 3, "arc")?;
                SmoothCurve::arc(v[0], v[1], v[2], self.oracle_nodes)
            }
            _ => Err(Error::Config(format!("the oracle cannot start from '{kind}'"))),
        }
    }

    pub fn expected_values(&self) -> Result<ExpectedValues> {
        match &self.expected {
            Some(p) => ExpectedValues::from_file(p),
            None => Ok(ExpectedValues::default()),
        }
    }
}

const EXPECTED_KEYS: &[&str] =
    &["theta", "c4", "holder_constant", "linf_theta", "euler_lagrange_h_tau", "consistency_budget", "vartheta0"];

/// Calibration constants frozen from reference runs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExpectedValues {
    values: BTreeMap<String, f64>,
}

impl ExpectedValues {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = parse_pairs(text, EXPECTED_KEYS)?;
        let values = kv.into_iter().map(|(k, v)| parse_real(&v).map(|x| (k, x))).collect::<Result<_>>()?;
        Ok(Self { values })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "h = 1/32\ntau = 0.01\nt_end = 0.1\ninitial = half_disk:0,0.5\n";

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::parse(&format!("{BASE}colour = red\n"), Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("unknown key 'colour'"), "{e}");
    }

    #[test]
    fn fractions_comments_and_lists() {
        let c = RunConfig::parse(&format!("{BASE}# note\nbeta = -0.25  # wetting\n"), Path::new(".")).unwrap();
        assert_eq!(c.h, 1.0 / 32.0);
        assert_eq!(c.taus, vec![0.01]);
        let s = c.scheme().unwrap();
        assert_eq!(s.beta.sup(), -0.25);
        assert_eq!(c.initial_set(&s.grid).unwrap().count(), c.initial_curve().unwrap().rasterize(&s.grid).unwrap().count());
    }

    #[test]
    fn tau_must_be_below_t_end() {
        let text = BASE.replace("tau = 0.01", "tau = 0.2");
        assert!(matches!(RunConfig::parse(&text, Path::new(".")), Err(Error::Config(_))));
    }

    #[test]
    fn inadmissible_beta_quotes_the_bound() {
        let c = RunConfig::parse(&format!("{BASE}beta = 1.2\n"), Path::new(".")).unwrap();
        let e = c.scheme().unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("Φ(e_n) = 1"), "{e}");
    }

    #[test]
    fn expected_values_reject_unknown_constants() {
        assert_eq!(ExpectedValues::parse("theta = 0.1").unwrap().get("theta"), Some(0.1));
        assert!(ExpectedValues::parse("gamma = 1").is_err());
    }
}
