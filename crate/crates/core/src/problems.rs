//! Benchmark problem families: sparse recovery with a quartic fidelity,
//! ℓ^α-penalized least squares, and the pointwise log operator on `L²[0,1]`,
//! plus two small constructed problems with known solution `u* = 0`.
//!
//! Random instances draw from ChaCha20 seeded with `seed_from_u64(seed)`.
//! Each component uses its own stream (`set_stream`): 0 for the matrix
//! (row-major standard normals), 1 for the spike support and amplitudes,
//! 2 for the noise.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::inclusion::Inclusion;
use crate::operators::{
    FnForward, LogOperator, LpaGradient, QuarticFidelity, ShiftedSoftThreshold, SoftThreshold,
};
use crate::space::InnerProductSpace;

pub const RNG_NAME: &str =
    "ChaCha20 (rand_chacha), seed_from_u64, streams: matrix=0 spikes=1 noise=2";

const STREAM_MATRIX: u64 = 0;
const STREAM_SPIKES: u64 = 1;
const STREAM_NOISE: u64 = 2;

/// Fraction of `‖Cᵀv‖_∞` used as the default ℓ₁ weight.
pub const DEFAULT_RHO_FRACTION: f64 = 0.005;

fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = rng_for(seed, STREAM_MATRIX);
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

/// `l` distinct positions with amplitudes uniform on `[−2, 2]` (zero excluded).
fn sparse_signal(d: usize, l: usize, seed: u64) -> Array1<f64> {
    let mut rng = rng_for(seed, STREAM_SPIKES);
    let mut u = Array1::zeros(d);
    for i in rand::seq::index::sample(&mut rng, d, l) {
        let mut a = 0.0;
        while a == 0.0 {
            a = rng.random_range(-2.0..=2.0);
        }
        u[i] = a;
    }
    u
}

/// Gaussian noise scaled so that `10 log₁₀(‖signal‖²/‖ε‖²) = snr_db` exactly
/// (up to rounding). `None` means noiseless.
fn scaled_noise(signal: &Array1<f64>, snr_db: Option<f64>, seed: u64) -> Array1<f64> {
    let m = signal.len();
    let Some(snr) = snr_db else {
        return Array1::zeros(m);
    };
    let mut rng = rng_for(seed, STREAM_NOISE);
    let raw: Array1<f64> = Array1::from_shape_simple_fn(m, || rng.sample(StandardNormal));
    let ps = signal.dot(signal);
    let pn = raw.dot(&raw);
    if ps == 0.0 || pn == 0.0 {
        return Array1::zeros(m);
    }
    let target = ps / 10f64.powf(snr / 10.0);
    raw * (target / pn).sqrt()
}

fn snr_of(signal: &Array1<f64>, noise: &Array1<f64>) -> f64 {
    let pn = noise.dot(noise);
    if pn == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (signal.dot(signal) / pn).log10()
    }
}

fn check_shape(d: usize, m: usize, l: usize) -> Result<()> {
    if d == 0 || m == 0 || l > d || m > d {
        return Err(SolverError::InvalidParameter(format!(
            "invalid sizes d = {d}, m = {m}, l = {l}: need 0 < m ≤ d and l ≤ d"
        )));
    }
    Ok(())
}

fn check_snr(snr_db: Option<f64>) -> Result<()> {
    match snr_db {
        Some(s) if !s.is_finite() => Err(SolverError::InvalidParameter(format!(
            "SNR must be finite (use no value for noiseless), got {s}"
        ))),
        _ => Ok(()),
    }
}

/// Recovery of a sparse `u` from `v = Cu + ε` via
/// `min ¼‖Cu − v‖⁴ + ρ‖u‖₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedSensingInstance {
    pub c: Arc<Array2<f64>>,
    pub u_true: Array1<f64>,
    pub noise: Array1<f64>,
    pub v_obs: Array1<f64>,
    pub rho: f64,
    pub snr_db: Option<f64>,
    pub l: usize,
    pub seed: u64,
}

/// Generates a sparse-recovery instance. `rho = None` selects
/// `DEFAULT_RHO_FRACTION · ‖Cᵀv‖_∞`.
pub fn gen_cs(
    d: usize,
    m: usize,
    l: usize,
    snr_db: Option<f64>,
    rho: Option<f64>,
    seed: u64,
) -> Result<CompressedSensingInstance> {
    check_shape(d, m, l)?;
    check_snr(snr_db)?;
    let c = gaussian_matrix(m, d, seed);
    let u_true = sparse_signal(d, l, seed);
    let clean = c.dot(&u_true);
    let noise = scaled_noise(&clean, snr_db, seed);
    let v_obs = &clean + &noise;
    let rho = match rho {
        Some(r) if !(r > 0.0 && r.is_finite()) => {
            return Err(SolverError::InvalidParameter(format!(
                "l1 weight must be positive, got {r}"
            )))
        }
        Some(r) => r,
        None => DEFAULT_RHO_FRACTION * c.t().dot(&v_obs).iter().fold(0.0f64, |a, x| a.max(x.abs())),
    };
    Ok(CompressedSensingInstance {
        c: Arc::new(c),
        u_true,
        noise,
        v_obs,
        rho,
        snr_db,
        l,
        seed,
    })
}

impl CompressedSensingInstance {
    pub fn dim(&self) -> usize {
        self.c.ncols()
    }

    pub fn measurements(&self) -> usize {
        self.c.nrows()
    }

    pub fn achieved_snr_db(&self) -> f64 {
        snr_of(&self.c.dot(&self.u_true), &self.noise)
    }

    /// Objective `¼‖Cu − v‖⁴ + ρ‖u‖₁`.
    pub fn objective(&self, u: &Array1<f64>) -> f64 {
        let r = self.c.dot(u) - &self.v_obs;
        let r2 = r.dot(&r);
        0.25 * r2 * r2 + self.rho * u.iter().map(|x| x.abs()).sum::<f64>()
    }

    pub fn assemble(&self) -> Result<Assembled> {
        let d = self.dim();
        let forward = QuarticFidelity::new(self.c.clone(), self.v_obs.clone())?;
        let resolvent = SoftThreshold::new(self.rho)?;
        let zero = Array1::zeros(d);
        Ok(Assembled {
            name: format!("cs-d{}-m{}-l{}", d, self.measurements(), self.l),
            inclusion: Inclusion::new(forward, resolvent, InnerProductSpace::euclidean(d)),
            u0: zero.clone(),
            u1: zero,
            known_solution: None,
            truth: Some(self.u_true.clone()),
            strong_modulus: None,
            metadata: vec![
                ("family".into(), "cs".into()),
                ("seed".into(), self.seed.to_string()),
                ("rho".into(), format!("{:e}", self.rho)),
                ("snr_db".into(), fmt_snr(self.snr_db)),
                (
                    "achieved_snr_db".into(),
                    format!("{:.4}", self.achieved_snr_db()),
                ),
            ],
        })
    }
}

fn fmt_snr(s: Option<f64>) -> String {
    s.map_or_else(|| "inf".to_string(), |s| s.to_string())
}

/// `min ½‖Qu − q‖² + μ Σ|u_i|^α + ρ‖u‖₁` with `α ∈ (1, 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpaInstance {
    pub q_mat: Arc<Array2<f64>>,
    pub u_true: Array1<f64>,
    pub q: Array1<f64>,
    pub mu: f64,
    pub alpha: f64,
    pub rho: f64,
    pub snr_db: Option<f64>,
    pub l: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpaParams {
    pub mu: f64,
    pub alpha: f64,
    pub rho: f64,
}

impl Default for LpaParams {
    fn default() -> Self {
        Self {
            mu: 0.01,
            alpha: 1.5,
            rho: 0.01,
        }
    }
}

/// `q = Q u_true + ε`, generated with the same streams as [`gen_cs`].
pub fn gen_lpa(
    d: usize,
    m: usize,
    l: usize,
    snr_db: Option<f64>,
    params: LpaParams,
    seed: u64,
) -> Result<LpaInstance> {
    check_shape(d, m, l)?;
    check_snr(snr_db)?;
    if !(params.alpha > 1.0 && params.alpha < 2.0) {
        return Err(SolverError::InvalidParameter(format!(
            "l^alpha exponent must lie in (1, 2), got {}",
            params.alpha
        )));
    }
    if !(params.mu >= 0.0 && params.rho >= 0.0) {
        return Err(SolverError::InvalidParameter(
            "l^alpha weights must be nonnegative".into(),
        ));
    }
    let q_mat = gaussian_matrix(m, d, seed);
    let u_true = sparse_signal(d, l, seed);
    let clean = q_mat.dot(&u_true);
    let q = &clean + &scaled_noise(&clean, snr_db, seed);
    Ok(LpaInstance {
        q_mat: Arc::new(q_mat),
        u_true,
        q,
        mu: params.mu,
        alpha: params.alpha,
        rho: params.rho,
        snr_db,
        l,
        seed,
    })
}

impl LpaInstance {
    pub fn dim(&self) -> usize {
        self.q_mat.ncols()
    }

    pub fn assemble(&self) -> Result<Assembled> {
        let d = self.dim();
        let forward = LpaGradient::new(self.q_mat.clone(), self.q.clone(), self.mu, self.alpha)?;
        let resolvent = SoftThreshold::new(self.rho)?;
        let zero = Array1::zeros(d);
        Ok(Assembled {
            name: format!("lpa-d{}-m{}-l{}", d, self.q_mat.nrows(), self.l),
            inclusion: Inclusion::new(forward, resolvent, InnerProductSpace::euclidean(d)),
            u0: zero.clone(),
            u1: zero,
            known_solution: None,
            truth: Some(self.u_true.clone()),
            strong_modulus: None,
            metadata: vec![
                ("family".into(), "lpa".into()),
                ("seed".into(), self.seed.to_string()),
                ("mu".into(), self.mu.to_string()),
                ("alpha".into(), self.alpha.to_string()),
                ("rho".into(), self.rho.to_string()),
                ("snr_db".into(), fmt_snr(self.snr_db)),
            ],
        })
    }
}

fn cos_sq(t: f64) -> f64 {
    let c = (2.0 * PI * t).cos();
    c * c / 4.0
}

fn damped_cos(t: f64) -> f64 {
    3.0 * (-2.0 * t).exp() * (3.0 * t).cos() / 25.0
}

fn exp_cos(t: f64) -> f64 {
    ((2.0 * t).exp() + (4.0 * t).cos()) / 10.0
}

/// Samples the starting pair `(u0, u1)` for case 1–4 on `n` uniform nodes of `[0, 1]`.
pub fn table3_initials(case: u8, n: usize) -> Result<(Array1<f64>, Array1<f64>)> {
    type F = fn(f64) -> f64;
    let (f0, f1): (F, F) = match case {
        1 => (cos_sq, damped_cos),
        2 => (exp_cos, cos_sq),
        3 => (exp_cos, damped_cos),
        4 => (cos_sq, exp_cos),
        _ => {
            return Err(SolverError::InvalidParameter(format!(
                "unknown initial-value case {case}, expected 1..=4"
            )))
        }
    };
    if n < 3 {
        return Err(SolverError::InvalidParameter(format!(
            "grid needs at least 3 nodes, got {n}"
        )));
    }
    let h = 1.0 / (n - 1) as f64;
    let u0 = Array1::from_shape_fn(n, |i| f0(i as f64 * h));
    let u1 = Array1::from_shape_fn(n, |i| f1(i as f64 * h));
    Ok((u0, u1))
}

/// `0 ∈ ∂∫|u| + u log(1 + |u|)` on `L²[0,1]`, solution `u* = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct L2Instance {
    pub n: usize,
    pub case: u8,
}

impl L2Instance {
    pub fn new(n: usize, case: u8) -> Result<Self> {
        table3_initials(case, n)?;
        Ok(Self { n, case })
    }

    pub fn assemble(&self) -> Result<Assembled> {
        let (u0, u1) = table3_initials(self.case, self.n)?;
        Ok(Assembled {
            name: format!("l2-n{}-case{}", self.n, self.case),
            inclusion: Inclusion::new(
                LogOperator,
                SoftThreshold::new(1.0)?,
                InnerProductSpace::trapezoidal_unit_interval(self.n)?,
            ),
            u0,
            u1,
            known_solution: Some(Array1::zeros(self.n)),
            truth: None,
            strong_modulus: None,
            metadata: vec![
                ("family".into(), "l2".into()),
                ("n".into(), self.n.to_string()),
                ("case".into(), self.case.to_string()),
            ],
        })
    }
}

/// `0 ∈ ∂‖u‖₁ + u³` on `R^d`, started at `(2, −2, 2, ...)`; solution `u* = 0`.
pub fn cubic_l1(d: usize) -> Result<Assembled> {
    if d == 0 {
        return Err(SolverError::InvalidParameter(
            "dimension must be positive".into(),
        ));
    }
    let start = Array1::from_shape_fn(d, |i| if i % 2 == 0 { 2.0 } else { -2.0 });
    Ok(Assembled {
        name: format!("cubic-d{d}"),
        inclusion: Inclusion::new(
            FnForward::new("cubic", |u: ndarray::ArrayView1<f64>| u.mapv(|x| x * x * x)),
            SoftThreshold::new(1.0)?,
            InnerProductSpace::euclidean(d),
        ),
        u0: start.clone(),
        u1: start,
        known_solution: Some(Array1::zeros(d)),
        truth: None,
        strong_modulus: None,
        metadata: vec![
            ("family".into(), "cubic".into()),
            ("d".into(), d.to_string()),
        ],
    })
}

/// `0 ∈ ∂(ρ‖u‖₁) + βu + u log(1 + |u|)` on `R^d`: `A` is `β`-strongly
/// monotone, so `u* = 0` is the unique solution. Starts from a fixed
/// deterministic profile with entries in `[−1, 1]`.
pub fn strongly_monotone_log(d: usize, rho: f64, beta: f64) -> Result<Assembled> {
    if d == 0 {
        return Err(SolverError::InvalidParameter(
            "dimension must be positive".into(),
        ));
    }
    let h = 1.0 / d as f64;
    let start = Array1::from_shape_fn(d, |i| (2.0 * PI * (i as f64 + 0.5) * h).cos());
    Ok(Assembled {
        name: format!("strong-log-d{d}"),
        inclusion: Inclusion::new(
            LogOperator,
            ShiftedSoftThreshold::new(rho, beta)?,
            InnerProductSpace::euclidean(d),
        ),
        u0: start.clone(),
        u1: start,
        known_solution: Some(Array1::zeros(d)),
        truth: None,
        strong_modulus: Some(beta),
        metadata: vec![
            ("family".into(), "strong_log".into()),
            ("d".into(), d.to_string()),
            ("rho".into(), rho.to_string()),
            ("beta".into(), beta.to_string()),
        ],
    })
}

/// A problem ready to hand to a solver.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub name: String,
    pub inclusion: Inclusion,
    pub u0: Array1<f64>,
    pub u1: Array1<f64>,
    /// An exact solution, when one is known in closed form.
    pub known_solution: Option<Array1<f64>>,
    /// The ground-truth signal of a recovery problem (not an exact solution).
    pub truth: Option<Array1<f64>>,
    /// Strong-monotonicity modulus of `A`, when known.
    pub strong_modulus: Option<f64>,
    pub metadata: Vec<(String, String)>,
}

impl Assembled {
    /// Point that `E_k` is measured against: the exact solution if known,
    /// otherwise the ground-truth signal.
    pub fn reference(&self) -> Option<&Array1<f64>> {
        self.known_solution.as_ref().or(self.truth.as_ref())
    }

    /// `‖u − J(u − λB(u), λ)‖`.
    pub fn fixed_point_residual(&self, u: &Array1<f64>, lambda: f64) -> f64 {
        let p = &self.inclusion;
        let bu = p.forward.eval(u.view());
        let x = u - &(&bu * lambda);
        let v = p.resolvent.apply(x.view(), lambda);
        let d = u - &v;
        p.space.norm(&d.view())
    }
}

/// Declarative problem description, as used by run specs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Cs {
        d: usize,
        m: usize,
        l: usize,
        /// Omit for noiseless observations.
        #[serde(default)]
        snr_db: Option<f64>,
        #[serde(default)]
        rho: Option<f64>,
    },
    Lpa {
        d: usize,
        m: usize,
        l: usize,
        #[serde(default)]
        snr_db: Option<f64>,
        #[serde(default)]
        params: Option<LpaParams>,
    },
    L2 {
        n: usize,
        case: u8,
    },
    Cubic {
        d: usize,
    },
    StrongLog {
        d: usize,
        rho: f64,
        beta: f64,
    },
}

impl ProblemSpec {
    /// Whether the instance depends on the seed.
    pub fn is_random(&self) -> bool {
        matches!(self, ProblemSpec::Cs { .. } | ProblemSpec::Lpa { .. })
    }

    pub fn build(&self, seed: u64) -> Result<Assembled> {
        match self {
            ProblemSpec::Cs {
                d,
                m,
                l,
                snr_db,
                rho,
            } => gen_cs(*d, *m, *l, *snr_db, *rho, seed)?.assemble(),
            ProblemSpec::Lpa {
                d,
                m,
                l,
                snr_db,
                params,
            } => gen_lpa(*d, *m, *l, *snr_db, params.unwrap_or_default(), seed)?.assemble(),
            ProblemSpec::L2 { n, case } => L2Instance::new(*n, *case)?.assemble(),
            ProblemSpec::Cubic { d } => cubic_l1(*d),
            ProblemSpec::StrongLog { d, rho, beta } => strongly_monotone_log(*d, *rho, *beta),
        }
    }
}

// ---------------------------------------------------------------------------
// Instance files
// ---------------------------------------------------------------------------

pub const INSTANCE_FORMAT: &str = "mvip-instance";
pub const INSTANCE_VERSION: u32 = 1;

/// A dense array stored as base64 of little-endian `f64`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodedArray {
    pub shape: Vec<usize>,
    pub dtype: String,
    pub data: String,
}

impl EncodedArray {
    pub fn encode(shape: Vec<usize>, values: impl IntoIterator<Item = f64>) -> Self {
        let bytes: Vec<u8> = values.into_iter().flat_map(|x| x.to_le_bytes()).collect();
        Self {
            shape,
            dtype: "f64le".into(),
            data: B64.encode(bytes),
        }
    }

    pub fn decode(&self) -> Result<Vec<f64>> {
        if self.dtype != "f64le" {
            return Err(SolverError::Format(format!(
                "unsupported dtype {}",
                self.dtype
            )));
        }
        let bytes = B64
            .decode(&self.data)
            .map_err(|e| SolverError::Format(format!("bad base64: {e}")))?;
        let expected: usize = self.shape.iter().product();
        if bytes.len() != expected * 8 {
            return Err(SolverError::Format(format!(
                "array payload has {} bytes, shape {:?} needs {}",
                bytes.len(),
                self.shape,
                expected * 8
            )));
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect())
    }

    fn vector(&self) -> Result<Array1<f64>> {
        if self.shape.len() != 1 {
            return Err(SolverError::Format(format!(
                "expected 1-D array, got {:?}",
                self.shape
            )));
        }
        Ok(Array1::from(self.decode()?))
    }

    fn matrix(&self) -> Result<Array2<f64>> {
        if self.shape.len() != 2 {
            return Err(SolverError::Format(format!(
                "expected 2-D array, got {:?}",
                self.shape
            )));
        }
        Array2::from_shape_vec((self.shape[0], self.shape[1]), self.decode()?)
            .map_err(|e| SolverError::Format(e.to_string()))
    }
}

fn enc_vec(a: &Array1<f64>) -> EncodedArray {
    EncodedArray::encode(vec![a.len()], a.iter().copied())
}

fn enc_mat(a: &Array2<f64>) -> EncodedArray {
    EncodedArray::encode(vec![a.nrows(), a.ncols()], a.iter().copied())
}

/// Self-describing on-disk form of a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub format: String,
    pub version: u32,
    pub family: String,
    pub rng: String,
    pub seed: u64,
    pub dims: BTreeMap<String, usize>,
    pub scalars: BTreeMap<String, f64>,
    /// Requested SNR in dB; absent for noiseless instances.
    pub snr_db: Option<f64>,
    pub arrays: BTreeMap<String, EncodedArray>,
}

impl InstanceFile {
    fn new(family: &str, seed: u64, snr_db: Option<f64>) -> Self {
        Self {
            format: INSTANCE_FORMAT.into(),
            version: INSTANCE_VERSION,
            family: family.into(),
            rng: RNG_NAME.into(),
            seed,
            dims: BTreeMap::new(),
            scalars: BTreeMap::new(),
            snr_db,
            arrays: BTreeMap::new(),
        }
    }

    fn array(&self, key: &str) -> Result<&EncodedArray> {
        self.arrays
            .get(key)
            .ok_or_else(|| SolverError::Format(format!("missing array {key}")))
    }

    fn scalar(&self, key: &str) -> Result<f64> {
        self.scalars
            .get(key)
            .copied()
            .ok_or_else(|| SolverError::Format(format!("missing scalar {key}")))
    }

    fn dim(&self, key: &str) -> Result<usize> {
        self.dims
            .get(key)
            .copied()
            .ok_or_else(|| SolverError::Format(format!("missing dimension {key}")))
    }

    fn check_header(&self, family: &str) -> Result<()> {
        if self.format != INSTANCE_FORMAT || self.version != INSTANCE_VERSION {
            return Err(SolverError::Format(format!(
                "unsupported instance format {} v{}",
                self.format, self.version
            )));
        }
        if self.family != family {
            return Err(SolverError::Format(format!(
                "expected a {family} instance, found {}",
                self.family
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| SolverError::Format(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| SolverError::Format(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl From<&CompressedSensingInstance> for InstanceFile {
    fn from(inst: &CompressedSensingInstance) -> Self {
        let mut f = InstanceFile::new("cs", inst.seed, inst.snr_db);
        f.dims.insert("d".into(), inst.dim());
        f.dims.insert("m".into(), inst.measurements());
        f.dims.insert("l".into(), inst.l);
        f.scalars.insert("rho".into(), inst.rho);
        f.arrays.insert("C".into(), enc_mat(&inst.c));
        f.arrays.insert("u_true".into(), enc_vec(&inst.u_true));
        f.arrays.insert("noise".into(), enc_vec(&inst.noise));
        f.arrays.insert("v_obs".into(), enc_vec(&inst.v_obs));
        f
    }
}

impl TryFrom<&InstanceFile> for CompressedSensingInstance {
    type Error = SolverError;

    fn try_from(f: &InstanceFile) -> Result<Self> {
        f.check_header("cs")?;
        let c = f.array("C")?.matrix()?;
        let inst = Self {
            u_true: f.array("u_true")?.vector()?,
            noise: f.array("noise")?.vector()?,
            v_obs: f.array("v_obs")?.vector()?,
            rho: f.scalar("rho")?,
            snr_db: f.snr_db,
            l: f.dim("l")?,
            seed: f.seed,
            c: Arc::new(c),
        };
        if inst.c.ncols() != inst.u_true.len() || inst.c.nrows() != inst.v_obs.len() {
            return Err(SolverError::Format("inconsistent array shapes".into()));
        }
        Ok(inst)
    }
}

impl From<&LpaInstance> for InstanceFile {
    fn from(inst: &LpaInstance) -> Self {
        let mut f = InstanceFile::new("lpa", inst.seed, inst.snr_db);
        f.dims.insert("d".into(), inst.dim());
        f.dims.insert("m".into(), inst.q_mat.nrows());
        f.dims.insert("l".into(), inst.l);
        f.scalars.insert("mu".into(), inst.mu);
        f.scalars.insert("alpha".into(), inst.alpha);
        f.scalars.insert("rho".into(), inst.rho);
        f.arrays.insert("Q".into(), enc_mat(&inst.q_mat));
        f.arrays.insert("u_true".into(), enc_vec(&inst.u_true));
        f.arrays.insert("q".into(), enc_vec(&inst.q));
        f
    }
}

impl TryFrom<&InstanceFile> for LpaInstance {
    type Error = SolverError;

    fn try_from(f: &InstanceFile) -> Result<Self> {
        f.check_header("lpa")?;
        let q_mat = f.array("Q")?.matrix()?;
        let inst = Self {
            u_true: f.array("u_true")?.vector()?,
            q: f.array("q")?.vector()?,
            mu: f.scalar("mu")?,
            alpha: f.scalar("alpha")?,
            rho: f.scalar("rho")?,
            snr_db: f.snr_db,
            l: f.dim("l")?,
            seed: f.seed,
            q_mat: Arc::new(q_mat),
        };
        if inst.q_mat.ncols() != inst.u_true.len() || inst.q_mat.nrows() != inst.q.len() {
            return Err(SolverError::Format("inconsistent array shapes".into()));
        }
        Ok(inst)
    }
}

impl From<&L2Instance> for InstanceFile {
    fn from(inst: &L2Instance) -> Self {
        let mut f = InstanceFile::new("l2", 0, None);
        f.dims.insert("n".into(), inst.n);
        f.dims.insert("case".into(), inst.case as usize);
        if let Ok((u0, u1)) = table3_initials(inst.case, inst.n) {
            f.arrays.insert("u0".into(), enc_vec(&u0));
            f.arrays.insert("u1".into(), enc_vec(&u1));
        }
        f
    }
}

impl TryFrom<&InstanceFile> for L2Instance {
    type Error = SolverError;

    fn try_from(f: &InstanceFile) -> Result<Self> {
        f.check_header("l2")?;
        let case = u8::try_from(f.dim("case")?)
            .map_err(|_| SolverError::Format("case id out of range".into()))?;
        L2Instance::new(f.dim("n")?, case)
    }
}
