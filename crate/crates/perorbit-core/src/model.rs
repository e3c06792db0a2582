//! System and forcing data model.
//!
//! A [`MechanicalSystem`] collects the mass matrix `M`, damping matrix `C`,
//! geometric nonlinearity `S(q)` (which includes the linear stiffness) and a
//! periodic forcing `f(t)` of
//!
//! ```text
//! M q̈ + C q̇ + S(q) = f(t),      f(t + T) = f(t).
//! ```
//!
//! Builders for the standard benchmark systems live at the bottom of the
//! module. All types are immutable after construction; evaluation is pure.

use alloc::{boxed::Box, format, string::String, vec, vec::Vec};
use core::f64::consts::PI;
use nalgebra::{DMatrix, DVector};
use num_traits::Float;

pub type EvalFn = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type JacFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
pub type PotFn = Box<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    DimensionMismatch(String),
    MassNotPositiveDefinite(f64),
}

impl core::fmt::Display for ModelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ModelError::DimensionMismatch(s) => write!(f, "dimension mismatch: {s}"),
            ModelError::MassNotPositiveDefinite(ev) => {
                write!(f, "mass matrix not positive definite (eigenvalue {ev})")
            }
        }
    }
}

/// One monomial `coeff * q_0^p_0 * q_1^p_1 * ...` contributing to `S_dof`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTerm {
    pub dof: usize,
    pub powers: Vec<u32>,
    pub coeff: f64,
}

/// Spring force law `S(δ) = k δ + κ δ³` for chain assemblies.
///
/// Hardening requires `k > 0`, `κ ≥ 0`; a removed spring is `k = κ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpringLaw {
    pub k: f64,
    pub kappa: f64,
}

impl SpringLaw {
    pub fn value(&self, delta: f64) -> f64 {
        self.k * delta + self.kappa * delta * delta * delta
    }

    pub fn deriv(&self, delta: f64) -> f64 {
        self.k + 3.0 * self.kappa * delta * delta
    }

    pub fn potential(&self, delta: f64) -> f64 {
        0.5 * self.k * delta * delta + 0.25 * self.kappa * delta.powi(4)
    }

    pub fn is_zero(&self) -> bool {
        self.k == 0.0 && self.kappa == 0.0
    }

    pub fn is_hardening(&self) -> bool {
        self.k > 0.0 && self.kappa >= 0.0
    }
}

pub enum NonlinearityKind {
    /// Sum of monomial terms.
    Polynomial(Vec<PolyTerm>),
    /// Chain of N masses between two walls, N+1 spring laws.
    Chain(Vec<SpringLaw>),
    /// `S(q) = c_p sin(q)`, one degree of freedom.
    PendulumSine { cp: f64 },
    /// User-supplied evaluator, optional analytic Jacobian.
    Custom { eval: EvalFn, jac: Option<JacFn> },
}

/// Closed-form family tag. Lets the certifier use analytic arguments where
/// they exist instead of falling back to evidence-only grid scans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `ω² q + κ q³`, forced by `f cos(Ωt)`.
    Duffing { c: f64, omega2: f64, kappa: f64 },
    /// `ω² q + κ q²`, forced by `f cos(Ωt)`.
    QuadraticOsc { c: f64, omega2: f64, kappa: f64, f: f64, omega: f64 },
    /// The coupled 2-DOF system with `κ(q₁² + q₂²)` on both components.
    CoupledQuadratic { k1: f64, k2: f64, c1: f64, kappa: f64 },
    /// `[ω₁² q₁ + κ q₁ q₂², ω₂² q₂]`.
    ModalQuadratic { omega1sq: f64, omega2sq: f64, kappa: f64 },
    Pendulum { cp: f64 },
    Chain,
    Generic,
}

pub struct Nonlinearity {
    pub dim: usize,
    pub kind: NonlinearityKind,
    pub declared_potential: bool,
    pub potential: Option<PotFn>,
    pub family: Family,
}

impl Nonlinearity {
    pub fn polynomial(dim: usize, terms: Vec<PolyTerm>) -> Self {
        Nonlinearity {
            dim,
            kind: NonlinearityKind::Polynomial(terms),
            declared_potential: false,
            potential: None,
            family: Family::Generic,
        }
    }

    pub fn eval(&self, q: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            NonlinearityKind::Polynomial(terms) => {
                let mut out = DVector::zeros(self.dim);
                for t in terms {
                    let mut v = t.coeff;
                    for (i, &p) in t.powers.iter().enumerate() {
                        v *= q[i].powi(p as i32);
                    }
                    out[t.dof] += v;
                }
                out
            }
            NonlinearityKind::Chain(laws) => {
                let n = self.dim;
                let mut out = DVector::zeros(n);
                for j in 0..n {
                    let q_prev = if j == 0 { 0.0 } else { q[j - 1] };
                    let q_next = if j + 1 == n { 0.0 } else { q[j + 1] };
                    out[j] = -laws[j].value(q_prev - q[j]) + laws[j + 1].value(q[j] - q_next);
                }
                out
            }
            NonlinearityKind::PendulumSine { cp } => {
                DVector::from_vec(vec![cp * Float::sin(q[0])])
            }
            NonlinearityKind::Custom { eval, .. } => eval(q),
        }
    }

    /// Analytic Jacobian `∂S/∂q` where available, otherwise central finite
    /// differences with step `max(1e-6, 1e-6 |q_i|)`.
    pub fn jacobian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        match &self.kind {
            NonlinearityKind::Polynomial(terms) => {
                let mut jac = DMatrix::zeros(self.dim, self.dim);
                for t in terms {
                    for (j, &pj) in t.powers.iter().enumerate() {
                        if pj == 0 {
                            continue;
                        }
                        let mut v = t.coeff * pj as f64 * q[j].powi(pj as i32 - 1);
                        for (i, &p) in t.powers.iter().enumerate() {
                            if i != j {
                                v *= q[i].powi(p as i32);
                            }
                        }
                        jac[(t.dof, j)] += v;
                    }
                }
                jac
            }
            NonlinearityKind::Chain(laws) => {
                let n = self.dim;
                let mut jac = DMatrix::zeros(n, n);
                for j in 0..n {
                    let q_prev = if j == 0 { 0.0 } else { q[j - 1] };
                    let q_next = if j + 1 == n { 0.0 } else { q[j + 1] };
                    let dl = laws[j].deriv(q_prev - q[j]);
                    let dr = laws[j + 1].deriv(q[j] - q_next);
                    jac[(j, j)] = dl + dr;
                    if j > 0 {
                        jac[(j, j - 1)] = -dl;
                    }
                    if j + 1 < n {
                        jac[(j, j + 1)] = -dr;
                    }
                }
                jac
            }
            NonlinearityKind::PendulumSine { cp } => {
                DMatrix::from_vec(1, 1, vec![cp * Float::cos(q[0])])
            }
            NonlinearityKind::Custom { eval, jac } => match jac {
                Some(j) => j(q),
                None => finite_difference_jacobian(eval, q),
            },
        }
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        !matches!(&self.kind, NonlinearityKind::Custom { jac: None, .. })
    }

    pub fn potential_value(&self, q: &DVector<f64>) -> Option<f64> {
        match (&self.kind, &self.potential) {
            (_, Some(v)) => Some(v(q)),
            (NonlinearityKind::Chain(laws), None) => {
                let n = self.dim;
                let mut v = 0.0;
                for j in 0..=n {
                    let q_prev = if j == 0 { 0.0 } else { q[j - 1] };
                    let q_here = if j == n { 0.0 } else { q[j] };
                    v += laws[j].potential(q_prev - q_here);
                }
                Some(v)
            }
            _ => None,
        }
    }
}

fn finite_difference_jacobian(eval: &EvalFn, q: &DVector<f64>) -> DMatrix<f64> {
    let n = q.len();
    let f0 = eval(q);
    let m = f0.len();
    let mut jac = DMatrix::zeros(m, n);
    for i in 0..n {
        let h = Float::max(1e-6, 1e-6 * Float::abs(q[i]));
        let mut qp = q.clone();
        let mut qm = q.clone();
        qp[i] += h;
        qm[i] -= h;
        let fp = eval(&qp);
        let fm = eval(&qm);
        for r in 0..m {
            jac[(r, i)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    jac
}

/// Truncated real Fourier series, one coefficient set per degree of freedom:
/// `f_j(t) = c0_j/2 + Σ_k [ s_{k,j} sin(kΩt) + c_{k,j} cos(kΩt) ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierForcing {
    pub period: f64,
    pub c0: DVector<f64>,
    pub sin: Vec<DVector<f64>>,
    pub cos: Vec<DVector<f64>>,
}

impl FourierForcing {
    pub fn zero(dim: usize, period: f64) -> Self {
        FourierForcing {
            period,
            c0: DVector::zeros(dim),
            sin: Vec::new(),
            cos: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.c0.len()
    }

    pub fn harmonics(&self) -> usize {
        self.sin.len()
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        let omega = 2.0 * PI / self.period;
        let mut out = &self.c0 * 0.5;
        for (k, (s, c)) in self.sin.iter().zip(self.cos.iter()).enumerate() {
            let arg = (k + 1) as f64 * omega * t;
            out += s * Float::sin(arg) + c * Float::cos(arg);
        }
        out
    }
}

/// Periodic excitation in one of three representations. All of them can be
/// lowered to an explicit truncated Fourier series via [`ForcingSignal::to_fourier`],
/// which is the canonical form consumed by the solvers.
pub enum ForcingSignal {
    Fourier(FourierForcing),
    /// Triangle wave `f_m · (8/π²) Σ_j (-1)^j sin((2j+1)Ωt)/(2j+1)²`,
    /// truncated after `k_t` sine terms, scaled per DOF by `weights`.
    Triangular {
        fm: f64,
        omega: f64,
        k_t: usize,
        weights: DVector<f64>,
    },
    /// Scalar trigonometric polynomial
    /// `Σ_{k=1..kb} (2/k²) sin(p_k t) Σ_{l=1..q_k} (1/l) sin(l t)`
    /// with `p_k = 2^(k³+1)`, `q_k = 2^(k³)`; period 2π.
    Fejer { kb: usize },
}

pub fn fejer_block_freqs(k: usize) -> (u64, u64) {
    let e = (k * k * k) as u32;
    (1u64 << (e + 1), 1u64 << e)
}

impl ForcingSignal {
    pub fn dim(&self) -> usize {
        match self {
            ForcingSignal::Fourier(f) => f.dim(),
            ForcingSignal::Triangular { weights, .. } => weights.len(),
            ForcingSignal::Fejer { .. } => 1,
        }
    }

    pub fn period(&self) -> f64 {
        match self {
            ForcingSignal::Fourier(f) => f.period,
            ForcingSignal::Triangular { omega, .. } => 2.0 * PI / omega,
            ForcingSignal::Fejer { .. } => 2.0 * PI,
        }
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        match self {
            ForcingSignal::Fourier(f) => f.eval(t),
            ForcingSignal::Triangular {
                fm,
                omega,
                k_t,
                weights,
            } => {
                let mut s = 0.0;
                for j in 0..*k_t {
                    let k = (2 * j + 1) as f64;
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    s += sign * Float::sin(k * omega * t) / (k * k);
                }
                weights * (fm * 8.0 / (PI * PI) * s)
            }
            ForcingSignal::Fejer { kb } => {
                let mut v = 0.0;
                for k in 1..=*kb {
                    let (p, q) = fejer_block_freqs(k);
                    let mut inner = 0.0;
                    for l in 1..=q {
                        inner += Float::sin(l as f64 * t) / l as f64;
                    }
                    v += 2.0 / (k * k) as f64 * Float::sin(p as f64 * t) * inner;
                }
                DVector::from_vec(vec![v])
            }
        }
    }

    /// Mean over one period. Exact: `c0/2` for Fourier, zero for the pure
    /// sine constructions.
    pub fn mean(&self) -> DVector<f64> {
        match self {
            ForcingSignal::Fourier(f) => &f.c0 * 0.5,
            ForcingSignal::Triangular { weights, .. } => DVector::zeros(weights.len()),
            ForcingSignal::Fejer { .. } => DVector::zeros(1),
        }
    }

    /// `C_f = (∫₀ᵀ fᵀf dt)^½` via Parseval on the Fourier coefficients.
    pub fn l2_norm(&self) -> f64 {
        let f = self.to_fourier();
        let mut sum = 0.0;
        for j in 0..f.dim() {
            let mut e = 0.25 * f.c0[j] * f.c0[j];
            for k in 0..f.harmonics() {
                e += 0.5 * (f.sin[k][j] * f.sin[k][j] + f.cos[k][j] * f.cos[k][j]);
            }
            sum += e;
        }
        Float::sqrt(f.period * sum)
    }

    /// Lower to an explicit truncated Fourier series.
    pub fn to_fourier(&self) -> FourierForcing {
        match self {
            ForcingSignal::Fourier(f) => f.clone(),
            ForcingSignal::Triangular {
                fm,
                omega,
                k_t,
                weights,
            } => {
                let dim = weights.len();
                let kmax = 2 * k_t - 1;
                let mut sin = vec![DVector::zeros(dim); kmax];
                let cos = vec![DVector::zeros(dim); kmax];
                for j in 0..*k_t {
                    let k = 2 * j + 1;
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    let amp = fm * 8.0 / (PI * PI) * sign / ((k * k) as f64);
                    sin[k - 1] = weights * amp;
                }
                FourierForcing {
                    period: 2.0 * PI / omega,
                    c0: DVector::zeros(dim),
                    sin,
                    cos,
                }
            }
            ForcingSignal::Fejer { kb } => {
                // 2 sin(p t) sin(l t)/l = [cos((p-l)t) - cos((p+l)t)]/l
                let (p_max, q_max) = fejer_block_freqs(*kb);
                let kmax = (p_max + q_max) as usize;
                let sin = vec![DVector::zeros(1); kmax];
                let mut cos = vec![DVector::zeros(1); kmax];
                for k in 1..=*kb {
                    let (p, q) = fejer_block_freqs(k);
                    let w = 1.0 / (k * k) as f64;
                    for l in 1..=q {
                        let a = w / l as f64;
                        cos[(p - l) as usize - 1][0] += a;
                        cos[(p + l) as usize - 1][0] -= a;
                    }
                }
                FourierForcing {
                    period: 2.0 * PI,
                    c0: DVector::zeros(1),
                    sin,
                    cos,
                }
            }
        }
    }
}

pub struct MechanicalSystem {
    pub dim: usize,
    pub mass: DMatrix<f64>,
    pub damping: DMatrix<f64>,
    pub nonlinearity: Nonlinearity,
    pub forcing: ForcingSignal,
}

impl MechanicalSystem {
    pub fn new(
        mass: DMatrix<f64>,
        damping: DMatrix<f64>,
        nonlinearity: Nonlinearity,
        forcing: ForcingSignal,
    ) -> Result<Self, ModelError> {
        let dim = mass.nrows();
        if mass.ncols() != dim || damping.nrows() != dim || damping.ncols() != dim {
            return Err(ModelError::DimensionMismatch(format!(
                "mass {}x{}, damping {}x{}",
                mass.nrows(),
                mass.ncols(),
                damping.nrows(),
                damping.ncols()
            )));
        }
        if nonlinearity.dim != dim {
            return Err(ModelError::DimensionMismatch(format!(
                "nonlinearity dim {} vs {}",
                nonlinearity.dim, dim
            )));
        }
        if forcing.dim() != dim {
            return Err(ModelError::DimensionMismatch(format!(
                "forcing dim {} vs {}",
                forcing.dim(),
                dim
            )));
        }
        let sym = (&mass + mass.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let min_ev = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_ev <= 0.0 {
            return Err(ModelError::MassNotPositiveDefinite(min_ev));
        }
        Ok(MechanicalSystem {
            dim,
            mass,
            damping,
            nonlinearity,
            forcing,
        })
    }

    pub fn period(&self) -> f64 {
        self.forcing.period()
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.period()
    }
}

// ---------------------------------------------------------------------------
// builders

/// Coupled 2-DOF oscillator with symmetric quadratic coupling
/// `κ(q₁² + q₂²)` on both components and triangle-wave forcing `f₁ = -f₂`.
///
/// `m₁ = m₂ = 1`, `k₁ = 1`, `k₂ = 4`, `c₁ = 0.001`, `c₂ = 0`,
/// `f_m = 0.01178`, `Ω = 1`, `κ = 1`.
pub fn build_counterexample1() -> MechanicalSystem {
    build_counterexample1_with(0.01178, 200)
}

pub fn build_counterexample1_with(fm: f64, k_t: usize) -> MechanicalSystem {
    let (k1, k2, c1, c2, kappa) = (1.0, 4.0, 0.001, 0.0, 1.0);
    let mass = DMatrix::identity(2, 2);
    let damping = DMatrix::from_row_slice(2, 2, &[c1 + c2, -c2, -c2, c1 + c2]);
    let terms = vec![
        PolyTerm { dof: 0, powers: vec![1, 0], coeff: k1 + k2 },
        PolyTerm { dof: 0, powers: vec![0, 1], coeff: -k2 },
        PolyTerm { dof: 0, powers: vec![2, 0], coeff: kappa },
        PolyTerm { dof: 0, powers: vec![0, 2], coeff: kappa },
        PolyTerm { dof: 1, powers: vec![1, 0], coeff: -k2 },
        PolyTerm { dof: 1, powers: vec![0, 1], coeff: k1 + k2 },
        PolyTerm { dof: 1, powers: vec![2, 0], coeff: kappa },
        PolyTerm { dof: 1, powers: vec![0, 2], coeff: kappa },
    ];
    let mut nl = Nonlinearity::polynomial(2, terms);
    nl.family = Family::CoupledQuadratic { k1, k2, c1, kappa };
    let forcing = ForcingSignal::Triangular {
        fm,
        omega: 1.0,
        k_t,
        weights: DVector::from_vec(vec![1.0, -1.0]),
    };
    MechanicalSystem::new(mass, damping, nl, forcing).expect("valid by construction")
}

/// `q̈ + c q̇ + ω² q + κ q³ = f cos(Ωt)`.
pub fn build_duffing(c: f64, omega2: f64, kappa: f64, f: f64, omega: f64) -> MechanicalSystem {
    let mass = DMatrix::identity(1, 1);
    let damping = DMatrix::from_vec(1, 1, vec![c]);
    let terms = vec![
        PolyTerm { dof: 0, powers: vec![1], coeff: omega2 },
        PolyTerm { dof: 0, powers: vec![3], coeff: kappa },
    ];
    let mut nl = Nonlinearity::polynomial(1, terms);
    nl.declared_potential = true;
    nl.potential = Some(Box::new(move |q: &DVector<f64>| {
        0.5 * omega2 * q[0] * q[0] + 0.25 * kappa * q[0].powi(4)
    }));
    nl.family = Family::Duffing { c, omega2, kappa };
    let forcing = ForcingSignal::Fourier(FourierForcing {
        period: 2.0 * PI / omega,
        c0: DVector::zeros(1),
        sin: vec![DVector::zeros(1)],
        cos: vec![DVector::from_vec(vec![f])],
    });
    MechanicalSystem::new(mass, damping, nl, forcing).expect("valid by construction")
}

/// `q̈ + c q̇ + ω² q + κ q² = f cos(Ωt)`.
pub fn build_quadratic_oscillator(
    c: f64,
    omega2: f64,
    kappa: f64,
    f: f64,
    omega: f64,
) -> MechanicalSystem {
    let mass = DMatrix::identity(1, 1);
    let damping = DMatrix::from_vec(1, 1, vec![c]);
    let terms = vec![
        PolyTerm { dof: 0, powers: vec![1], coeff: omega2 },
        PolyTerm { dof: 0, powers: vec![2], coeff: kappa },
    ];
    let mut nl = Nonlinearity::polynomial(1, terms);
    nl.declared_potential = true;
    nl.potential = Some(Box::new(move |q: &DVector<f64>| {
        0.5 * omega2 * q[0] * q[0] + kappa * q[0].powi(3) / 3.0
    }));
    nl.family = Family::QuadraticOsc { c, omega2, kappa, f, omega };
    let forcing = ForcingSignal::Fourier(FourierForcing {
        period: 2.0 * PI / omega,
        c0: DVector::zeros(1),
        sin: vec![DVector::zeros(1)],
        cos: vec![DVector::from_vec(vec![f])],
    });
    MechanicalSystem::new(mass, damping, nl, forcing).expect("valid by construction")
}

/// `q̈ + c q̇ + c_p sin(q) = f(t)`.
pub fn build_pendulum(c: f64, cp: f64, forcing: ForcingSignal) -> MechanicalSystem {
    let mass = DMatrix::identity(1, 1);
    let damping = DMatrix::from_vec(1, 1, vec![c]);
    let nl = Nonlinearity {
        dim: 1,
        kind: NonlinearityKind::PendulumSine { cp },
        declared_potential: true,
        potential: Some(Box::new(move |q: &DVector<f64>| -cp * Float::cos(q[0]))),
        family: Family::Pendulum { cp },
    };
    MechanicalSystem::new(mass, damping, nl, forcing).expect("pendulum is 1-DOF")
}

/// 2-DOF system `[q̈₁ + c₁q̇₁ + ω₁²q₁ + κ q₁q₂²; q̈₂ + c₂q̇₂ + ω₂²q₂]
/// = [f₁(t); a sin(Ωt)]`. The second component is linear and drives the
/// first parametrically.
#[allow(clippy::too_many_arguments)]
pub fn build_counter3(
    c1: f64,
    c2: f64,
    omega1sq: f64,
    omega2sq: f64,
    kappa: f64,
    a: f64,
    omega: f64,
    f1: FourierForcing,
) -> Result<MechanicalSystem, ModelError> {
    if f1.dim() != 1 {
        return Err(ModelError::DimensionMismatch(String::from(
            "f1 must be scalar",
        )));
    }
    let mass = DMatrix::identity(2, 2);
    let damping = DMatrix::from_row_slice(2, 2, &[c1, 0.0, 0.0, c2]);
    let terms = vec![
        PolyTerm { dof: 0, powers: vec![1, 0], coeff: omega1sq },
        PolyTerm { dof: 0, powers: vec![1, 2], coeff: kappa },
        PolyTerm { dof: 1, powers: vec![0, 1], coeff: omega2sq },
    ];
    let mut nl = Nonlinearity::polynomial(2, terms);
    nl.family = Family::ModalQuadratic { omega1sq, omega2sq, kappa };
    let period = 2.0 * PI / omega;
    let kmax = usize::max(1, f1.harmonics());
    let mut c0 = DVector::zeros(2);
    c0[0] = f1.c0[0];
    let mut sin = vec![DVector::zeros(2); kmax];
    let mut cos = vec![DVector::zeros(2); kmax];
    for k in 0..f1.harmonics() {
        sin[k][0] = f1.sin[k][0];
        cos[k][0] = f1.cos[k][0];
    }
    sin[0][1] = a;
    let forcing = ForcingSignal::Fourier(FourierForcing { period, c0, sin, cos });
    MechanicalSystem::new(mass, damping, nl, forcing)
}

/// Chain of `n` masses between two walls: `n` masses and dampers plus
/// `n+1` spring laws, boundary coordinates clamped to zero.
pub fn build_chain(
    masses: &[f64],
    dampers: &[f64],
    springs: Vec<SpringLaw>,
    forcing: ForcingSignal,
) -> Result<MechanicalSystem, ModelError> {
    let n = masses.len();
    if dampers.len() != n + 1 || springs.len() != n + 1 {
        return Err(ModelError::DimensionMismatch(format!(
            "chain with {n} masses needs {} dampers and spring laws, got {} and {}",
            n + 1,
            dampers.len(),
            springs.len()
        )));
    }
    let mass = DMatrix::from_diagonal(&DVector::from_row_slice(masses));
    let mut damping = DMatrix::zeros(n, n);
    for j in 0..n {
        damping[(j, j)] = dampers[j] + dampers[j + 1];
        if j > 0 {
            damping[(j, j - 1)] = -dampers[j];
        }
        if j + 1 < n {
            damping[(j, j + 1)] = -dampers[j + 1];
        }
    }
    let nl = Nonlinearity {
        dim: n,
        kind: NonlinearityKind::Chain(springs),
        declared_potential: true,
        potential: None,
        family: Family::Chain,
    };
    MechanicalSystem::new(mass, damping, nl, forcing)
}

/// Stiff linear oscillator `q̈ + 0.01 q̇ + 400 q = f(t)` whose forcing hides
/// a resonant 20th harmonic: `f(t) = (399 sin t + 0.01 cos t + 0.2 cos 20t)/400`.
/// The exact response is `q*(t) = 0.0025 (sin t + sin 20t)`.
pub fn build_lin_sys() -> MechanicalSystem {
    let (k, c) = (400.0, 0.01);
    let mass = DMatrix::identity(1, 1);
    let damping = DMatrix::from_vec(1, 1, vec![c]);
    let terms = vec![PolyTerm { dof: 0, powers: vec![1], coeff: k }];
    let mut nl = Nonlinearity::polynomial(1, terms);
    nl.declared_potential = true;
    nl.potential = Some(Box::new(move |q: &DVector<f64>| 0.5 * k * q[0] * q[0]));
    nl.family = Family::Duffing { c, omega2: k, kappa: 0.0 };
    let mut sin = vec![DVector::zeros(1); 20];
    let mut cos = vec![DVector::zeros(1); 20];
    sin[0][0] = 399.0 / 400.0;
    cos[0][0] = 0.01 / 400.0;
    cos[19][0] = 0.2 / 400.0;
    let forcing = ForcingSignal::Fourier(FourierForcing {
        period: 2.0 * PI,
        c0: DVector::zeros(1),
        sin,
        cos,
    });
    MechanicalSystem::new(mass, damping, nl, forcing).expect("valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn triangular_peak_and_periodicity() {
        let f = ForcingSignal::Triangular {
            fm: 1.0,
            omega: 1.0,
            k_t: 50,
            weights: DVector::from_vec(vec![1.0]),
        };
        // truncated peak pinned by dense series summation
        assert_abs_diff_eq!(f.eval(PI / 2.0)[0], 0.9959472927, epsilon = 1e-8);
        let t = 0.37;
        assert_abs_diff_eq!(f.eval(t)[0], f.eval(t + 2.0 * PI)[0], epsilon = 1e-12);
    }

    #[test]
    fn fourier_mean_and_eval() {
        let f = ForcingSignal::Fourier(FourierForcing {
            period: 2.0 * PI,
            c0: DVector::from_vec(vec![3.0, -1.0]),
            sin: vec![],
            cos: vec![],
        });
        let m = f.mean();
        assert_eq!(m[0], 1.5);
        assert_eq!(m[1], -0.5);

        let mut sin = vec![DVector::zeros(1); 5];
        sin[4][0] = 7.0;
        let f5 = ForcingSignal::Fourier(FourierForcing {
            period: 2.0 * PI,
            c0: DVector::zeros(1),
            sin,
            cos: vec![DVector::zeros(1); 5],
        });
        assert_eq!(f5.mean()[0], 0.0);

        let mut sin1 = vec![DVector::zeros(1)];
        sin1[0][0] = 1.0;
        let fs = ForcingSignal::Fourier(FourierForcing {
            period: 2.0 * PI,
            c0: DVector::zeros(1),
            sin: sin1,
            cos: vec![DVector::zeros(1)],
        });
        assert_abs_diff_eq!(fs.eval(PI / 2.0)[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn l2_norm_parseval_vs_quadrature() {
        // single harmonic: C_f = f sqrt(T/2)
        let amp = 2.5;
        let mut sin = vec![DVector::zeros(1)];
        sin[0][0] = amp;
        let f = ForcingSignal::Fourier(FourierForcing {
            period: 2.0 * PI,
            c0: DVector::zeros(1),
            sin,
            cos: vec![DVector::zeros(1)],
        });
        assert_abs_diff_eq!(f.l2_norm(), amp * (PI).sqrt(), epsilon = 1e-12);

        // triangular: Parseval against 2^16-point trapezoid quadrature
        let tri = ForcingSignal::Triangular {
            fm: 0.01178,
            omega: 1.0,
            k_t: 100,
            weights: DVector::from_vec(vec![1.0]),
        };
        let n = 1 << 16;
        let t_end = 2.0 * PI;
        let mut quad = 0.0;
        for i in 0..n {
            let t = t_end * i as f64 / n as f64;
            let v = tri.eval(t)[0];
            quad += v * v;
        }
        quad = (quad * t_end / n as f64).sqrt();
        assert_abs_diff_eq!(tri.l2_norm(), quad, epsilon = 1e-10);
        // frozen oracle value
        assert_abs_diff_eq!(tri.l2_norm(), 0.017048045382386606, epsilon = 1e-12);
    }

    #[test]
    fn counterexample1_nonlinearity() {
        let sys = build_counterexample1();
        let s = sys.nonlinearity.eval(&DVector::from_vec(vec![1.0, 0.0]));
        assert_eq!(s[0], 6.0);
        assert_eq!(s[1], -3.0);
        let s0 = sys.nonlinearity.eval(&DVector::zeros(2));
        assert_eq!(s0[0], 0.0);
        assert_eq!(s0[1], 0.0);
        let m = sys.forcing.mean();
        assert_eq!(m[0], 0.0);
        assert_eq!(m[1], 0.0);
        // 2-DOF triangle forcing norm, frozen from the scalar value * sqrt(2)
        assert_abs_diff_eq!(sys.forcing.l2_norm(), 0.024109576991723156, epsilon = 1e-12);
    }

    #[test]
    fn duffing_eval_and_potential() {
        let sys = build_duffing(0.01, 1.0, 1.0, 1.0, 1.0);
        let s = sys.nonlinearity.eval(&DVector::from_vec(vec![2.0]));
        assert_eq!(s[0], 10.0);
        let soft = build_duffing(0.01, 1.0, -1.0, 1.0, 1.0);
        let h = soft.nonlinearity.jacobian(&DVector::zeros(1));
        assert_eq!(h[(0, 0)], 1.0);
        // nontrivial equilibria of the softening spring at q = ±1
        for q0 in [1.0, -1.0] {
            let s = soft.nonlinearity.eval(&DVector::from_vec(vec![q0]));
            assert_abs_diff_eq!(s[0], 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn chain_assembles_tridiagonal() {
        let springs = vec![
            SpringLaw { k: 1.0, kappa: 0.0 },
            SpringLaw { k: 4.0, kappa: 0.0 },
            SpringLaw { k: 1.0, kappa: 0.0 },
        ];
        let forcing = ForcingSignal::Fourier(FourierForcing::zero(2, 2.0 * PI));
        let sys = build_chain(&[1.0, 1.0], &[0.1, 0.0, 0.1], springs, forcing).unwrap();
        let jac = sys.nonlinearity.jacobian(&DVector::zeros(2));
        let expect = DMatrix::from_row_slice(2, 2, &[5.0, -4.0, -4.0, 5.0]);
        assert_eq!(jac, expect);
        assert_eq!(sys.damping[(0, 0)], 0.1);
        assert_eq!(sys.damping[(0, 1)], 0.0);
        let s0 = sys.nonlinearity.eval(&DVector::zeros(2));
        assert_eq!(s0.amax(), 0.0);

        // single mass, unit springs to both walls
        let springs = vec![SpringLaw { k: 1.0, kappa: 0.0 }, SpringLaw { k: 1.0, kappa: 0.0 }];
        let forcing = ForcingSignal::Fourier(FourierForcing::zero(1, 2.0 * PI));
        let sys = build_chain(&[1.0], &[0.1, 0.1], springs, forcing).unwrap();
        let s = sys.nonlinearity.eval(&DVector::from_vec(vec![3.0]));
        assert_eq!(s[0], 6.0);
    }

    #[test]
    fn chain_jacobian_matches_potential_hessian() {
        let springs = vec![
            SpringLaw { k: 1.0, kappa: 0.5 },
            SpringLaw { k: 2.0, kappa: 0.1 },
            SpringLaw { k: 0.5, kappa: 1.0 },
        ];
        let forcing = ForcingSignal::Fourier(FourierForcing::zero(2, 2.0 * PI));
        let sys = build_chain(&[1.0, 2.0], &[0.1, 0.2, 0.3], springs, forcing).unwrap();
        let q = DVector::from_vec(vec![0.7, -0.4]);
        // gradient of the declared potential must equal S(q)
        let h = 1e-6;
        let s = sys.nonlinearity.eval(&q);
        for i in 0..2 {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += h;
            qm[i] -= h;
            let vp = sys.nonlinearity.potential_value(&qp).unwrap();
            let vm = sys.nonlinearity.potential_value(&qm).unwrap();
            assert_abs_diff_eq!((vp - vm) / (2.0 * h), s[i], epsilon = 1e-7);
        }
        let jac = sys.nonlinearity.jacobian(&q);
        assert_abs_diff_eq!((&jac - jac.transpose()).amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pendulum_and_quadratic_and_counter3() {
        let f = ForcingSignal::Fourier(FourierForcing::zero(1, 2.0 * PI));
        let p = build_pendulum(0.1, 2.0, f);
        let s = p.nonlinearity.eval(&DVector::from_vec(vec![PI / 2.0]));
        assert_abs_diff_eq!(s[0], 2.0, epsilon = 1e-14);

        let qo = build_quadratic_oscillator(0.0, 1.0, 1.0, 1.0, 1.0);
        let s = qo.nonlinearity.eval(&DVector::from_vec(vec![-3.0]));
        assert_eq!(s[0], 6.0);

        let c3 = build_counter3(
            0.01,
            0.01,
            1.0,
            1.0,
            1.0,
            1.0,
            1.0,
            FourierForcing::zero(1, 2.0 * PI),
        )
        .unwrap();
        let s = c3.nonlinearity.eval(&DVector::from_vec(vec![1.0, 1.0]));
        assert_eq!(s[0], 2.0);
        assert_eq!(s[1], 1.0);
    }

    #[test]
    fn forcing_representations_are_periodic() {
        let signals: Vec<ForcingSignal> = vec![
            ForcingSignal::Triangular {
                fm: 0.7,
                omega: 2.0,
                k_t: 30,
                weights: DVector::from_vec(vec![1.0, -1.0]),
            },
            ForcingSignal::Fejer { kb: 1 },
            build_lin_sys().forcing,
        ];
        for f in &signals {
            let t_per = f.period();
            for i in 0..97 {
                let t = 1.7 * i as f64 / 13.0;
                let d = (f.eval(t) - f.eval(t + t_per)).amax();
                assert!(d < 1e-12, "periodicity defect {d}");
            }
        }
    }

    #[test]
    fn fejer_coefficients_kb1() {
        let f = ForcingSignal::Fejer { kb: 1 };
        let fc = f.to_fourier();
        assert_abs_diff_eq!(fc.cos[1][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(fc.cos[2][0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fc.cos[4][0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fc.cos[5][0], -0.5, epsilon = 1e-15);
        // reconstruction matches the product form
        for i in 0..50 {
            let t = i as f64 * 0.13;
            assert_abs_diff_eq!(fc.eval(t)[0], f.eval(t)[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn custom_callback_finite_difference_jacobian() {
        let nl = Nonlinearity {
            dim: 2,
            kind: NonlinearityKind::Custom {
                eval: Box::new(|q: &DVector<f64>| {
                    DVector::from_vec(vec![q[0] * q[0] * q[1], q[0] + q[1].powi(3)])
                }),
                jac: None,
            },
            declared_potential: false,
            potential: None,
            family: Family::Generic,
        };
        let q = DVector::from_vec(vec![1.3, -0.8]);
        let j = nl.jacobian(&q);
        assert_abs_diff_eq!(j[(0, 0)], 2.0 * 1.3 * -0.8, epsilon = 1e-6);
        assert_abs_diff_eq!(j[(0, 1)], 1.3 * 1.3, epsilon = 1e-6);
        assert_abs_diff_eq!(j[(1, 0)], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(j[(1, 1)], 3.0 * 0.64, epsilon = 1e-6);
    }

    #[test]
    fn rejects_indefinite_mass() {
        let mass = DMatrix::from_row_slice(1, 1, &[-1.0]);
        let damping = DMatrix::identity(1, 1);
        let nl = Nonlinearity::polynomial(1, vec![]);
        let f = ForcingSignal::Fourier(FourierForcing::zero(1, 2.0 * PI));
        assert!(matches!(
            MechanicalSystem::new(mass, damping, nl, f),
            Err(ModelError::MassNotPositiveDefinite(_))
        ));
    }
}
