//! State families used for training and testing, and labeled dataset
//! construction.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qcore::{
    bipartitions, is_ppt, is_ppt_all, ComplexMatrix, DensityMatrix, PauliString, PureState,
    NORM_TOL, PSD_TOL,
};

/// Redraw budget for an entangled sample that fails its NPT certificate.
pub const MAX_REDRAWS: usize = 1000;

/// Deterministic per-item seed derived from a master seed (splitmix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// (|0,j⟩ + (−1)^i |1,1⊕j⟩)/√2
pub fn bell_state(i: u8, j: u8) -> Result<PureState> {
    if i > 1 || j > 1 {
        return Err(Error::InvalidParameter(format!(
            "Bell indices ({i},{j}) must be bits"
        )));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![cx(0.0, 0.0); 4];
    amps[j as usize] = cx(h, 0.0);
    amps[2 + (1 - j as usize)] = cx(if i == 0 { h } else { -h }, 0.0);
    PureState::new(amps)
}

/// (|0…0⟩ + |1…1⟩)/√2
pub fn ghz_state(n: usize) -> Result<PureState> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "GHZ state needs n >= 2, got {n}"
        )));
    }
    let d = 1usize << n;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![cx(0.0, 0.0); d];
    amps[0] = cx(h, 0.0);
    amps[d - 1] = cx(h, 0.0);
    PureState::new(amps)
}

/// GHZ₃ ⊗ (cos θ|0⟩ + e^{iα} sin θ|1⟩)
pub fn ghz3_times_qubit(theta: f64, alpha: f64) -> Result<PureState> {
    let q = PureState::new(vec![
        cx(theta.cos(), 0.0),
        Complex64::from_polar(theta.sin(), alpha),
    ])?;
    Ok(ghz_state(3)?.tensor(&q))
}

/// λ_ij = ¼(1 + (−1)^i c₁ − (−1)^{i+j} c₂ + (−1)^j c₃), ordered (00, 01, 10, 11).
pub fn bell_diagonal_eigenvalues(c1: f64, c2: f64, c3: f64) -> [f64; 4] {
    let sign = |k: u32| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut out = [0.0; 4];
    for i in 0..2u32 {
        for j in 0..2u32 {
            out[(2 * i + j) as usize] =
                0.25 * (1.0 + sign(i) * c1 - sign(i + j) * c2 + sign(j) * c3);
        }
    }
    out
}

/// ¼(I + c₁ XX + c₂ YY + c₃ ZZ), rejected outside the tetrahedron.
pub fn bell_diagonal(c1: f64, c2: f64, c3: f64) -> Result<DensityMatrix> {
    if let Some(&bad) = bell_diagonal_eigenvalues(c1, c2, c3)
        .iter()
        .find(|&&l| l < -PSD_TOL)
    {
        return Err(Error::OutsideTetrahedron(bad));
    }
    DensityMatrix::new(bell_diagonal_operator(c1, c2, c3))
}

/// The operator ¼(I + Σ c_k σ_k⊗σ_k) without the positivity check.
pub fn bell_diagonal_operator(c1: f64, c2: f64, c3: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    for (s, c) in [("II", 1.0), ("XX", c1), ("YY", c2), ("ZZ", c3)] {
        let p: PauliString = s.parse().expect("valid literal");
        p.mask().accumulate(&mut m, 0.25 * c);
    }
    m
}

/// p|ψ⟩⟨ψ| + (1−p) I/2^N
pub fn werner(base: &PureState, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "Werner weight p = {p} outside [0, 1]"
        )));
    }
    let d = base.amplitudes().len();
    let proj = ComplexMatrix::outer(base.amplitudes(), base.amplitudes());
    let noise = ComplexMatrix::identity(d).scale((1.0 - p) / d as f64);
    DensityMatrix::new(&proj.scale(p) + &noise)
}

/// Product of single-qubit states (cos θ/2, e^{iα} sin θ/2), qubit 1 first.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    angles: Vec<(f64, f64)>,
}

impl ProductState {
    /// Angles must satisfy θ ∈ [0, π], α ∈ [0, 2π).
    pub fn new(angles: Vec<(f64, f64)>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::InvalidParameter(
                "product state needs at least one qubit".into(),
            ));
        }
        for &(theta, alpha) in &angles {
            if !(0.0..=PI).contains(&theta) || !(0.0..TAU).contains(&alpha) {
                return Err(Error::InvalidParameter(format!(
                    "angles (θ={theta}, α={alpha}) outside [0,π]×[0,2π)"
                )));
            }
        }
        Ok(Self { angles })
    }

    /// Wraps arbitrary real angles into the canonical ranges.
    pub fn canonical(angles: &[(f64, f64)]) -> Result<Self> {
        let wrapped = angles
            .iter()
            .map(|&(theta, alpha)| {
                let mut t = theta.rem_euclid(TAU);
                let mut a = alpha;
                if t > PI {
                    // (cos t/2, e^{ia} sin t/2) = −(cos t'/2, e^{i(a+π)} sin t'/2) with t' = 2π − t
                    t = TAU - t;
                    a += PI;
                }
                let mut a = a.rem_euclid(TAU);
                if a >= TAU {
                    a = 0.0;
                }
                (t, a)
            })
            .collect();
        Self::new(wrapped)
    }

    /// Angles of the single-qubit vector (u0, u1), global phase discarded.
    pub fn qubit_angles(u0: Complex64, u1: Complex64) -> (f64, f64) {
        let theta = 2.0 * u1.norm().atan2(u0.norm());
        let alpha = if u1.norm() == 0.0 || u0.norm() == 0.0 {
            0.0
        } else {
            (u1.arg() - u0.arg()).rem_euclid(TAU)
        };
        (theta.clamp(0.0, PI), if alpha >= TAU { 0.0 } else { alpha })
    }

    /// Draws Haar-random single-qubit factors.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let angles = (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                ((1.0 - 2.0 * u).clamp(-1.0, 1.0).acos(), TAU * v)
            })
            .collect();
        Self { angles }
    }

    pub fn n_qubits(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[(f64, f64)] {
        &self.angles
    }

    pub fn qubit_vector(theta: f64, alpha: f64) -> [Complex64; 2] {
        [
            cx((theta / 2.0).cos(), 0.0),
            Complex64::from_polar((theta / 2.0).sin(), alpha),
        ]
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        let mut v = vec![cx(1.0, 0.0)];
        for &(theta, alpha) in &self.angles {
            let q = Self::qubit_vector(theta, alpha);
            v = v.iter().flat_map(|a| [a * q[0], a * q[1]]).collect();
        }
        v
    }

    pub fn pure_state(&self) -> PureState {
        let amps = self.amplitudes();
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        debug_assert!((norm_sqr - 1.0).abs() <= NORM_TOL);
        PureState::new(amps).expect("product of unit vectors has unit norm")
    }

    pub fn density(&self) -> DensityMatrix {
        self.pure_state().projector()
    }
}

impl fmt::Display for ProductState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let thetas: Vec<String> = self.angles.iter().map(|a| format!("{:.4}", a.0)).collect();
        let alphas: Vec<String> = self.angles.iter().map(|a| format!("{:.4}", a.1)).collect();
        write!(f, "θ=({}) α=({})", thetas.join(", "), alphas.join(", "))
    }
}

pub fn random_product_state(n: usize, seed: u64) -> ProductState {
    ProductState::random(n, &mut rng_from_seed(seed))
}

/// Uniform simplex weights from normalized exponential draws.
pub fn simplex_weights<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..k)
        .map(|_| {
            let u: f64 = rng.random();
            -(1.0 - u).ln()
        })
        .collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        draws.iter().map(|d| d / total).collect()
    } else {
        vec![1.0 / k as f64; k]
    }
}

fn mixture_from_rng<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<DensityMatrix> {
    if k == 0 {
        return Err(Error::InvalidParameter("mixture needs k >= 1 terms".into()));
    }
    let weights = simplex_weights(k, rng);
    let d = 1usize << n;
    let mut acc = ComplexMatrix::zeros(d, d);
    for w in weights {
        let amps = ProductState::random(n, rng).amplitudes();
        acc = &acc + &ComplexMatrix::outer(&amps, &amps).scale(w);
    }
    DensityMatrix::new(acc.hermitian_part())
}

/// Σ p_i |ν_i⟩⟨ν_i| over k random product states.
pub fn random_separable_mixture(n: usize, k: usize, seed: u64) -> Result<DensityMatrix> {
    mixture_from_rng(n, k, &mut rng_from_seed(seed))
}

/// Parameters of the three-qubit PPT edge state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeStateParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl EdgeStateParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "edge parameter {name} = {v} must be > 0"
                )));
            }
        }
        Ok(Self { a, b, c })
    }

    /// n = 2 + a + 1/a + b + 1/b + c + 1/c
    pub fn normalization(&self) -> f64 {
        2.0 + self.a + 1.0 / self.a + self.b + 1.0 / self.b + self.c + 1.0 / self.c
    }

    /// Unnormalized matrix entries: diagonal and the |000⟩⟨111| coherence.
    pub fn unnormalized(&self) -> ComplexMatrix {
        let (a, b, c) = (self.a, self.b, self.c);
        let mut m = ComplexMatrix::diagonal(&[1.0, a, b, c, 1.0 / c, 1.0 / b, 1.0 / a, 1.0]);
        m.set(0, 7, cx(1.0, 0.0));
        m.set(7, 0, cx(1.0, 0.0));
        m
    }
}

/// The three-qubit edge state, PPT with respect to every single qubit.
pub fn edge_ppt_state(params: EdgeStateParams) -> Result<DensityMatrix> {
    let params = EdgeStateParams::new(params.a, params.b, params.c)?;
    DensityMatrix::new(params.unnormalized().scale(1.0 / params.normalization()))
}

/// Base state of a Werner family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseState {
    Bell {
        i: u8,
        j: u8,
    },
    Ghz {
        n: usize,
    },
    /// GHZ₃ ⊗ qubit; `None` draws (θ, α) uniformly per sample.
    Ghz3Qubit {
        angles: Option<(f64, f64)>,
    },
}

impl BaseState {
    pub fn n_qubits(&self) -> usize {
        match self {
            BaseState::Bell { .. } => 2,
            BaseState::Ghz { n } => *n,
            BaseState::Ghz3Qubit { .. } => 4,
        }
    }

    /// Largest p for which the Werner mixture is known to be fully separable.
    pub fn separable_bound(&self) -> f64 {
        match self {
            BaseState::Bell { .. } => 1.0 / 3.0,
            BaseState::Ghz { n } => 1.0 / (1.0 + (1u64 << (n - 1)) as f64),
            // GHZ₃-Werner at weight 2p/(1+p) on the |φ⟩ branch, separable below 1/5
            BaseState::Ghz3Qubit { .. } => 1.0 / 9.0,
        }
    }

    fn state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(PureState, Vec<(String, f64)>)> {
        match *self {
            BaseState::Bell { i, j } => Ok((bell_state(i, j)?, vec![])),
            BaseState::Ghz { n } => Ok((ghz_state(n)?, vec![])),
            BaseState::Ghz3Qubit {
                angles: Some((t, a)),
            } => Ok((
                ghz3_times_qubit(t, a)?,
                vec![("theta".into(), t), ("alpha".into(), a)],
            )),
            BaseState::Ghz3Qubit { angles: None } => {
                let t = PI * rng.random::<f64>();
                let a = TAU * rng.random::<f64>();
                Ok((
                    ghz3_times_qubit(t, a)?,
                    vec![("theta".into(), t), ("alpha".into(), a)],
                ))
            }
        }
    }

    /// A fixed pure state for threshold reports; per-sample families use θ = π/4, α = 0.
    pub fn representative(&self) -> Result<PureState> {
        match *self {
            BaseState::Bell { i, j } => bell_state(i, j),
            BaseState::Ghz { n } => ghz_state(n),
            BaseState::Ghz3Qubit { angles } => {
                let (t, a) = angles.unwrap_or((PI / 4.0, 0.0));
                ghz3_times_qubit(t, a)
            }
        }
    }

    pub fn tag(&self) -> String {
        match self {
            BaseState::Bell { i, j } => format!("bell{i}{j}"),
            BaseState::Ghz { n } => format!("ghz{n}"),
            BaseState::Ghz3Qubit {
                angles: Some((t, a)),
            } => format!("ghz3q({t},{a})"),
            BaseState::Ghz3Qubit { angles: None } => "ghz3q".into(),
        }
    }
}

/// Family that supplies the entangled (−1) class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntangledFamily {
    /// Werner mixtures, each certified NPT on some bipartition.
    Werner(BaseState),
    /// Three-qubit edge states with a, b, c uniform in (0, 1); PPT entangled.
    EdgePpt,
}

impl EntangledFamily {
    pub fn n_qubits(&self) -> usize {
        match self {
            EntangledFamily::Werner(b) => b.n_qubits(),
            EntangledFamily::EdgePpt => 3,
        }
    }

    pub fn tag(&self) -> String {
        match self {
            EntangledFamily::Werner(b) => format!("werner-{}", b.tag()),
            EntangledFamily::EdgePpt => "edge-ppt".into(),
        }
    }

    /// Local-unitary twirl that leaves every state of the family invariant.
    pub fn symmetry(&self) -> Symmetry {
        match self {
            EntangledFamily::Werner(_) => Symmetry::None,
            EntangledFamily::EdgePpt => Symmetry::GhzPhase,
        }
    }
}

/// Parses the tags written by [`EntangledFamily::tag`]; `edge-ppt-entangled` is an alias.
impl std::str::FromStr for EntangledFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown family {s:?}"));
        if s == "edge-ppt" || s == "edge-ppt-entangled" {
            return Ok(EntangledFamily::EdgePpt);
        }
        let base = s.strip_prefix("werner-").ok_or_else(bad)?;
        let parsed = if let Some(ij) = base.strip_prefix("bell") {
            let d: Vec<u8> = ij.bytes().map(|b| b.wrapping_sub(b'0')).collect();
            match d[..] {
                [i, j] if i < 2 && j < 2 => BaseState::Bell { i, j },
                _ => return Err(bad()),
            }
        } else if base == "ghz3q" {
            BaseState::Ghz3Qubit { angles: None }
        } else if let Some(rest) = base
            .strip_prefix("ghz3q(")
            .and_then(|r| r.strip_suffix(')'))
        {
            let (t, a) = rest.split_once(',').ok_or_else(bad)?;
            let t = t.trim().parse().map_err(|_| bad())?;
            let a = a.trim().parse().map_err(|_| bad())?;
            BaseState::Ghz3Qubit {
                angles: Some((t, a)),
            }
        } else if let Some(n) = base.strip_prefix("ghz") {
            let n: usize = n.parse().map_err(|_| bad())?;
            if !(2..=6).contains(&n) {
                return Err(bad());
            }
            BaseState::Ghz { n }
        } else {
            return Err(bad());
        };
        Ok(EntangledFamily::Werner(parsed))
    }
}

/// Twirl applied to separable samples so they share the entangled family's symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    None,
    /// Average over diag(1, ω^{k_i}) on each qubit, ω = e^{2πi/3}, Σ k_i ≡ 0 mod 3.
    /// Keeps the diagonal and the |0…0⟩⟨1…1| coherence, zeroes every other entry.
    /// A finite mixture of local unitaries, so separable states stay separable.
    GhzPhase,
}

impl Symmetry {
    pub fn apply(self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        match self {
            Symmetry::None => Ok(rho.clone()),
            Symmetry::GhzPhase => {
                let d = rho.dim();
                let m = rho.matrix();
                let all = d - 1;
                DensityMatrix::new(ComplexMatrix::from_fn(d, d, |r, c| {
                    if r == c || (r == 0 && c == all) || (r == all && c == 0) {
                        m.get(r, c)
                    } else {
                        cx(0.0, 0.0)
                    }
                }))
            }
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Symmetry::None => "none",
            Symmetry::GhzPhase => "ghz-phase",
        }
    }
}

/// Class label: +1 separable, −1 entangled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Separable,
    Entangled,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Separable => 1.0,
            Label::Entangled => -1.0,
        }
    }

    pub fn from_sign(v: f64) -> Self {
        if v >= 0.0 {
            Label::Separable
        } else {
            Label::Entangled
        }
    }
}

/// How a sample was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub family: String,
    pub params: Vec<(String, f64)>,
    pub seed: u64,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family)?;
        for (k, v) in &self.params {
            write!(f, " {k}={v:.17e}")?;
        }
        write!(f, " seed={}", self.seed)
    }
}

#[derive(Debug, Clone)]
pub struct LabeledSample {
    pub rho: DensityMatrix,
    pub label: Label,
    pub provenance: Provenance,
}

/// Dataset recipe.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub family: EntangledFamily,
    pub per_class: usize,
    /// Entangled-class sampling range for the Werner weight.
    pub p_min: f64,
    pub p_max: f64,
    /// Share of separable samples drawn as random product mixtures; the rest
    /// are Werner states below the family's separability bound.
    pub mixture_fraction: f64,
    pub max_mixture_terms: usize,
    pub seed: u64,
}

impl DatasetConfig {
    /// Defaults per family: Bell [0.5, 1], GHZ₃ [0.6, 1], GHZ₄ [0.2, 1], GHZ₃⊗qubit [0.35, 1].
    pub fn new(family: EntangledFamily, per_class: usize, seed: u64) -> Self {
        let (p_min, mixture_fraction) = match family {
            EntangledFamily::Werner(BaseState::Bell { .. }) => (0.5, 0.7),
            EntangledFamily::Werner(BaseState::Ghz { n: 2 }) => (0.5, 0.7),
            EntangledFamily::Werner(BaseState::Ghz { n: 3 }) => (0.6, 0.7),
            EntangledFamily::Werner(BaseState::Ghz { .. }) => (0.2, 0.7),
            EntangledFamily::Werner(BaseState::Ghz3Qubit { .. }) => (0.35, 0.7),
            EntangledFamily::EdgePpt => (0.0, 1.0),
        };
        Self {
            family,
            per_class,
            p_min,
            p_max: 1.0,
            mixture_fraction,
            max_mixture_terms: 8,
            seed,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.family.n_qubits()
    }

    fn validate(&self) -> Result<()> {
        if self.per_class == 0 {
            return Err(Error::InvalidParameter("per_class must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.p_min)
            || !(0.0..=1.0).contains(&self.p_max)
            || self.p_min > self.p_max
        {
            return Err(Error::InvalidParameter(format!(
                "p range [{}, {}] invalid",
                self.p_min, self.p_max
            )));
        }
        if !(0.0..=1.0).contains(&self.mixture_fraction) {
            return Err(Error::InvalidParameter(
                "mixture_fraction outside [0, 1]".into(),
            ));
        }
        if self.max_mixture_terms == 0 {
            return Err(Error::InvalidParameter(
                "max_mixture_terms must be >= 1".into(),
            ));
        }
        if let EntangledFamily::Werner(BaseState::Ghz { n }) = self.family {
            if n < 2 {
                return Err(Error::InvalidParameter("GHZ family needs n >= 2".into()));
            }
        }
        Ok(())
    }
}

fn separable_sample(config: &DatasetConfig, index: usize, seed: u64) -> Result<LabeledSample> {
    let mut rng = rng_from_seed(seed);
    let n = config.n_qubits();
    let werner_base = match config.family {
        EntangledFamily::Werner(base) => Some(base),
        EntangledFamily::EdgePpt => None,
    };
    let use_mixture = werner_base.is_none() || rng.random::<f64>() < config.mixture_fraction;
    let (rho, provenance) = if use_mixture {
        let k = rng.random_range(1..=config.max_mixture_terms);
        let symmetry = config.family.symmetry();
        let rho = symmetry.apply(&mixture_from_rng(n, k, &mut rng)?)?;
        let family = match symmetry {
            Symmetry::None => "product-mixture".to_string(),
            sym => format!("product-mixture-{}", sym.tag()),
        };
        let prov = Provenance {
            family,
            params: vec![("k".into(), k as f64)],
            seed,
        };
        (rho, prov)
    } else {
        let base = werner_base.expect("checked");
        let (psi, mut params) = base.state(&mut rng)?;
        let p = base.separable_bound() * rng.random::<f64>();
        params.insert(0, ("p".into(), p));
        let prov = Provenance {
            family: format!("werner-{}-separable", base.tag()),
            params,
            seed,
        };
        (werner(&psi, p)?, prov)
    };
    if !is_ppt_all(&rho)? {
        return Err(Error::InvalidState(format!(
            "separable sample {index} failed the PPT re-check"
        )));
    }
    Ok(LabeledSample {
        rho,
        label: Label::Separable,
        provenance,
    })
}

fn entangled_sample(config: &DatasetConfig, seed: u64) -> Result<LabeledSample> {
    let mut rng = rng_from_seed(seed);
    match config.family {
        EntangledFamily::Werner(base) => {
            let cuts = bipartitions(base.n_qubits());
            for _ in 0..MAX_REDRAWS {
                let (psi, mut params) = base.state(&mut rng)?;
                let p = config.p_min + (config.p_max - config.p_min) * rng.random::<f64>();
                let rho = werner(&psi, p)?;
                let mut npt = false;
                for s in &cuts {
                    if !is_ppt(&rho, s)? {
                        npt = true;
                        break;
                    }
                }
                if npt {
                    params.insert(0, ("p".into(), p));
                    return Ok(LabeledSample {
                        rho,
                        label: Label::Entangled,
                        provenance: Provenance {
                            family: format!("werner-{}", base.tag()),
                            params,
                            seed,
                        },
                    });
                }
            }
            Err(Error::CannotRealizeEntangled)
        }
        EntangledFamily::EdgePpt => {
            let mut draw = || loop {
                let v: f64 = rng.random();
                if v > 0.0 {
                    return v;
                }
            };
            let params = EdgeStateParams::new(draw(), draw(), draw())?;
            Ok(LabeledSample {
                rho: edge_ppt_state(params)?,
                label: Label::Entangled,
                provenance: Provenance {
                    family: "edge-ppt".into(),
                    params: vec![
                        ("a".into(), params.a),
                        ("b".into(), params.b),
                        ("c".into(), params.c),
                    ],
                    seed,
                },
            })
        }
    }
}

/// Balanced labeled dataset: `per_class` separable samples followed by
/// `per_class` entangled ones. Sample i is seeded from (seed, i).
pub fn generate_dataset(config: &DatasetConfig) -> Result<Vec<LabeledSample>> {
    config.validate()?;
    let per = config.per_class;
    (0..2 * per)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(config.seed, i as u64);
            if i < per {
                separable_sample(config, i, seed)
            } else {
                entangled_sample(config, seed)
            }
        })
        .collect()
}
