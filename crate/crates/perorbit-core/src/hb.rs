//! Harmonic balance with alternating frequency-time (AFT) residual
//! evaluation.
//!
//! The periodic response is sought in the truncated Fourier form
//!
//! ```text
//! q*(t) = c₀/2 + Σ_{k=1..K} [ s_k sin(kΩt) + c_k cos(kΩt) ],
//! ```
//!
//! projected residuals of the equation of motion are driven to zero with a
//! damped Newton iteration. Linear terms are assembled per harmonic in the
//! frequency domain; the nonlinearity is sampled on a uniform time grid and
//! transformed back by discrete Fourier analysis.

use crate::model::MechanicalSystem;
use alloc::{vec, vec::Vec};
use core::f64::consts::PI;
use nalgebra::{DMatrix, DVector};
use num_traits::Float;

/// Coefficient vector layout: one block of `2K+1` entries per DOF,
/// `[c₀, s₁, c₁, ..., s_K, c_K]`. The ordering is part of the file-format
/// contract and must not change.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierAnsatz {
    pub n_dof: usize,
    pub k: usize,
    pub omega: f64,
    pub coeffs: DVector<f64>,
}

impl FourierAnsatz {
    pub fn zero(n_dof: usize, k: usize, omega: f64) -> Self {
        FourierAnsatz {
            n_dof,
            k,
            omega,
            coeffs: DVector::zeros(n_dof * (2 * k + 1)),
        }
    }

    pub fn block_len(&self) -> usize {
        2 * self.k + 1
    }

    pub fn c0(&self, dof: usize) -> f64 {
        self.coeffs[dof * self.block_len()]
    }

    pub fn s(&self, harmonic: usize, dof: usize) -> f64 {
        self.coeffs[dof * self.block_len() + 2 * harmonic - 1]
    }

    pub fn c(&self, harmonic: usize, dof: usize) -> f64 {
        self.coeffs[dof * self.block_len() + 2 * harmonic]
    }

    pub fn set_c0(&mut self, dof: usize, v: f64) {
        let nb = self.block_len();
        self.coeffs[dof * nb] = v;
    }

    pub fn set_s(&mut self, harmonic: usize, dof: usize, v: f64) {
        let nb = self.block_len();
        self.coeffs[dof * nb + 2 * harmonic - 1] = v;
    }

    pub fn set_c(&mut self, harmonic: usize, dof: usize, v: f64) {
        let nb = self.block_len();
        self.coeffs[dof * nb + 2 * harmonic] = v;
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        let mut q = DVector::zeros(self.n_dof);
        for dof in 0..self.n_dof {
            let mut v = 0.5 * self.c0(dof);
            for k in 1..=self.k {
                let arg = k as f64 * self.omega * t;
                v += self.s(k, dof) * Float::sin(arg) + self.c(k, dof) * Float::cos(arg);
            }
            q[dof] = v;
        }
        q
    }

    /// Velocity `q̇*(t)` of the ansatz.
    pub fn eval_deriv(&self, t: f64) -> DVector<f64> {
        let mut v = DVector::zeros(self.n_dof);
        for dof in 0..self.n_dof {
            let mut d = 0.0;
            for k in 1..=self.k {
                let w = k as f64 * self.omega;
                let arg = w * t;
                d += w * (self.s(k, dof) * Float::cos(arg) - self.c(k, dof) * Float::sin(arg));
            }
            v[dof] = d;
        }
        v
    }

    /// Uniform sampling of one period.
    pub fn reconstruct(&self, n_samples: usize) -> (Vec<f64>, Vec<DVector<f64>>) {
        let t_per = self.period();
        let mut ts = Vec::with_capacity(n_samples);
        let mut qs = Vec::with_capacity(n_samples);
        for i in 0..n_samples {
            let t = t_per * i as f64 / n_samples as f64;
            ts.push(t);
            qs.push(self.eval(t));
        }
        (ts, qs)
    }

    /// Per-DOF `max_t |q_j(t)|` over a 2048-point reconstruction.
    pub fn amplitude(&self) -> DVector<f64> {
        let (_, qs) = self.reconstruct(2048);
        let mut amp = DVector::zeros(self.n_dof);
        for q in &qs {
            for j in 0..self.n_dof {
                amp[j] = Float::max(amp[j], Float::abs(q[j]));
            }
        }
        amp
    }

    /// Per-DOF oscillation amplitude `max_t |q_j(t) - q̄_j|`.
    pub fn amplitude_about_mean(&self) -> DVector<f64> {
        let (_, qs) = self.reconstruct(2048);
        let mut amp = DVector::zeros(self.n_dof);
        for q in &qs {
            for j in 0..self.n_dof {
                amp[j] = Float::max(amp[j], Float::abs(q[j] - 0.5 * self.c0(j)));
            }
        }
        amp
    }

    /// Copy coefficients into an ansatz with `k_new >= k` harmonics,
    /// zero-padding the new ones.
    pub fn zero_padded(&self, k_new: usize) -> FourierAnsatz {
        assert!(k_new >= self.k);
        let mut out = FourierAnsatz::zero(self.n_dof, k_new, self.omega);
        for dof in 0..self.n_dof {
            out.set_c0(dof, self.c0(dof));
            for k in 1..=self.k {
                out.set_s(k, dof, self.s(k, dof));
                out.set_c(k, dof, self.c(k, dof));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HbOpts {
    pub tol: f64,
    pub max_iter: usize,
    /// AFT sample count; defaults to the next power of two >= 8K+8.
    pub m_samples: Option<usize>,
}

impl Default for HbOpts {
    fn default() -> Self {
        HbOpts {
            tol: 1e-10,
            max_iter: 50,
            m_samples: None,
        }
    }
}

pub fn default_samples(k: usize) -> usize {
    let target = 8 * k + 8;
    let mut m = 8;
    while m < target {
        m *= 2;
    }
    m
}

#[derive(Debug, Clone)]
pub struct HBSolution {
    pub ansatz: FourierAnsatz,
    pub residual_norm: f64,
    pub newton_iterations: usize,
    pub aft_samples: usize,
    pub converged: bool,
    /// Per-DOF `max_t |q_j|`.
    pub amplitude: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HbError {
    TooFewSamples { m: usize, required: usize },
}

impl core::fmt::Display for HbError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            HbError::TooFewSamples { m, required } => {
                write!(f, "aliasing guard: {m} samples < required {required}")
            }
        }
    }
}

/// Shared analysis/synthesis matrices for a fixed (K, Ω, M).
struct AftBasis {
    /// M x (2K+1), rows are `[1/2, sin(kΩt_m), cos(kΩt_m), ...]`.
    synth: DMatrix<f64>,
    /// (2K+1) x M, Fourier analysis of a sampled signal.
    anal: DMatrix<f64>,
    times: Vec<f64>,
}

fn build_basis(k: usize, omega: f64, m: usize) -> AftBasis {
    let nb = 2 * k + 1;
    let t_per = 2.0 * PI / omega;
    let mut synth = DMatrix::zeros(m, nb);
    let mut anal = DMatrix::zeros(nb, m);
    let mut times = Vec::with_capacity(m);
    let w = 2.0 / m as f64;
    for i in 0..m {
        let t = t_per * i as f64 / m as f64;
        times.push(t);
        synth[(i, 0)] = 0.5;
        anal[(0, i)] = w;
        for h in 1..=k {
            let arg = h as f64 * omega * t;
            let (sn, cs) = (Float::sin(arg), Float::cos(arg));
            synth[(i, 2 * h - 1)] = sn;
            synth[(i, 2 * h)] = cs;
            anal[(2 * h - 1, i)] = w * sn;
            anal[(2 * h, i)] = w * cs;
        }
    }
    AftBasis { synth, anal, times }
}

fn forcing_coeff_vector(system: &MechanicalSystem, k: usize) -> DVector<f64> {
    let n = system.dim;
    let nb = 2 * k + 1;
    let fc = system.forcing.to_fourier();
    let mut out = DVector::zeros(n * nb);
    for dof in 0..n {
        out[dof * nb] = fc.c0[dof];
        for h in 1..=usize::min(k, fc.harmonics()) {
            out[dof * nb + 2 * h - 1] = fc.sin[h - 1][dof];
            out[dof * nb + 2 * h] = fc.cos[h - 1][dof];
        }
    }
    out
}

fn residual_with_basis(
    system: &MechanicalSystem,
    x: &DVector<f64>,
    k: usize,
    omega: f64,
    basis: &AftBasis,
    fcoef: &DVector<f64>,
    with_jacobian: bool,
) -> (DVector<f64>, Option<DMatrix<f64>>) {
    let n = system.dim;
    let nb = 2 * k + 1;
    let m = basis.times.len();

    // time-domain samples of the ansatz
    let mut q_samples = vec![DVector::zeros(n); m];
    for (i, q) in q_samples.iter_mut().enumerate() {
        for dof in 0..n {
            let mut v = 0.0;
            for b in 0..nb {
                v += basis.synth[(i, b)] * x[dof * nb + b];
            }
            q[dof] = v;
        }
    }

    // project the sampled nonlinearity
    let mut res = -fcoef.clone();
    for (i, q) in q_samples.iter().enumerate() {
        let s = system.nonlinearity.eval(q);
        for dof in 0..n {
            for b in 0..nb {
                res[dof * nb + b] += basis.anal[(b, i)] * s[dof];
            }
        }
    }

    // linear inertia and damping blocks, harmonic by harmonic
    for h in 1..=k {
        let w = h as f64 * omega;
        let w2 = w * w;
        for i_dof in 0..n {
            let rs = i_dof * nb + 2 * h - 1;
            let rc = i_dof * nb + 2 * h;
            for j_dof in 0..n {
                let s_j = x[j_dof * nb + 2 * h - 1];
                let c_j = x[j_dof * nb + 2 * h];
                let mm = system.mass[(i_dof, j_dof)];
                let cc = system.damping[(i_dof, j_dof)];
                res[rs] += -w2 * mm * s_j - w * cc * c_j;
                res[rc] += -w2 * mm * c_j + w * cc * s_j;
            }
        }
    }

    if !with_jacobian {
        return (res, None);
    }

    let dim = n * nb;
    let mut jac = DMatrix::zeros(dim, dim);
    for (i, q) in q_samples.iter().enumerate() {
        let js = system.nonlinearity.jacobian(q);
        for i_dof in 0..n {
            for j_dof in 0..n {
                let jv = js[(i_dof, j_dof)];
                if jv == 0.0 {
                    continue;
                }
                for a in 0..nb {
                    let aw = basis.anal[(a, i)] * jv;
                    if aw == 0.0 {
                        continue;
                    }
                    let row = i_dof * nb + a;
                    for b in 0..nb {
                        jac[(row, j_dof * nb + b)] += aw * basis.synth[(i, b)];
                    }
                }
            }
        }
    }
    for h in 1..=k {
        let w = h as f64 * omega;
        let w2 = w * w;
        for i_dof in 0..n {
            let rs = i_dof * nb + 2 * h - 1;
            let rc = i_dof * nb + 2 * h;
            for j_dof in 0..n {
                let cs = j_dof * nb + 2 * h - 1;
                let cc_col = j_dof * nb + 2 * h;
                let mm = system.mass[(i_dof, j_dof)];
                let cc = system.damping[(i_dof, j_dof)];
                jac[(rs, cs)] += -w2 * mm;
                jac[(rs, cc_col)] += -w * cc;
                jac[(rc, cc_col)] += -w2 * mm;
                jac[(rc, cs)] += w * cc;
            }
        }
    }
    (res, Some(jac))
}

/// Coefficient-space residual of the equation of motion for a given ansatz.
pub fn aft_residual(
    system: &MechanicalSystem,
    ansatz: &FourierAnsatz,
    m_samples: usize,
) -> Result<DVector<f64>, HbError> {
    let required = 4 * ansatz.k + 2;
    if m_samples < required || m_samples % 2 != 0 {
        return Err(HbError::TooFewSamples {
            m: m_samples,
            required,
        });
    }
    let basis = build_basis(ansatz.k, ansatz.omega, m_samples);
    let fcoef = forcing_coeff_vector(system, ansatz.k);
    let (res, _) = residual_with_basis(
        system,
        &ansatz.coeffs,
        ansatz.k,
        ansatz.omega,
        &basis,
        &fcoef,
        false,
    );
    Ok(res)
}

/// Damped Newton on the AFT residual.
///
/// Step halving (up to 10 halvings) globalizes the Newton step. If no
/// fraction of the step decreases the residual, the solver switches to
/// Levenberg-Marquardt steps on the squared residual so that stalled runs
/// terminate at a well-defined stationary point instead of creeping along
/// a near-singular direction. `converged` is only set when the residual
/// norm drops below `tol`.
pub fn hb_solve(
    system: &MechanicalSystem,
    k: usize,
    initial: Option<&FourierAnsatz>,
    opts: &HbOpts,
) -> HBSolution {
    let omega = system.omega();
    let m = opts.m_samples.unwrap_or_else(|| default_samples(k));
    let basis = build_basis(k, omega, m);
    let fcoef = forcing_coeff_vector(system, k);

    let mut x = match initial {
        Some(a) => {
            assert_eq!(a.n_dof, system.dim);
            if a.k == k {
                a.coeffs.clone()
            } else {
                a.zero_padded(k).coeffs
            }
        }
        None => DVector::zeros(system.dim * (2 * k + 1)),
    };

    let rnorm = |x: &DVector<f64>| {
        residual_with_basis(system, x, k, omega, &basis, &fcoef, false)
            .0
            .norm()
    };

    let mut iterations = 0;
    let mut rn = rnorm(&x);
    let mut converged = rn < opts.tol;
    let mut mu = 0.0f64;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let (res, jac) = residual_with_basis(system, &x, k, omega, &basis, &fcoef, true);
        let jac = jac.expect("jacobian requested");
        rn = res.norm();
        if rn < opts.tol {
            converged = true;
            break;
        }

        let mut stepped = false;
        if mu == 0.0 {
            if let Some(dx) = jac.clone().lu().solve(&(-&res)) {
                let mut lam = 1.0;
                for _ in 0..=10 {
                    let trial = &x + &dx * lam;
                    let tn = rnorm(&trial);
                    if tn < rn {
                        x = trial;
                        rn = tn;
                        stepped = true;
                        break;
                    }
                    lam *= 0.5;
                }
            }
        }

        if !stepped {
            // Levenberg-Marquardt fallback near singular or stalled points
            let jt = jac.transpose();
            let grad = &jt * &res;
            let scale = jac.norm_squared() / jac.ncols() as f64;
            if grad.norm() < 1e-12 * Float::max(1.0, rn) {
                break; // stationary point of the squared residual
            }
            if mu == 0.0 {
                mu = 1e-6 * scale;
            }
            let jtj = &jt * &jac;
            let mut improved = false;
            for _ in 0..40 {
                let mut aug = jtj.clone();
                for d in 0..aug.nrows() {
                    aug[(d, d)] += mu;
                }
                if let Some(dx) = aug.lu().solve(&(-&grad)) {
                    let trial = &x + &dx;
                    let tn = rnorm(&trial);
                    if tn < rn {
                        x = trial;
                        rn = tn;
                        mu = Float::max(mu / 3.0, 1e-14 * scale);
                        improved = true;
                        break;
                    }
                }
                mu *= 10.0;
                if mu > 1e20 * scale {
                    break;
                }
            }
            if !improved {
                break;
            }
        } else {
            mu = 0.0;
        }

        if rn < opts.tol {
            converged = true;
        }
    }

    let ansatz = FourierAnsatz {
        n_dof: system.dim,
        k,
        omega,
        coeffs: x,
    };
    let amplitude = ansatz.amplitude();
    HBSolution {
        ansatz,
        residual_norm: rn,
        newton_iterations: iterations,
        aft_samples: m,
        converged,
        amplitude,
    }
}

#[derive(Debug, Clone)]
pub struct KStudyRow {
    pub k: usize,
    /// `max_t |q_1(t)|`.
    pub amplitude: f64,
    pub residual_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub rows: Vec<KStudyRow>,
    /// Set when the amplitudes of the last two orders differ by less than
    /// 1e-6. This mirrors the common "stop when it stops changing"
    /// heuristic, which is exactly the unsound part: the flag can be true
    /// for an orbit that does not exist.
    pub apparently_converged: bool,
}

/// Solve at each order of `k_list` (ascending), warm-starting every solve
/// from the zero-padded previous solution.
pub fn hb_convergence_study(
    system: &MechanicalSystem,
    k_list: &[usize],
    opts: &HbOpts,
) -> ConvergenceStudy {
    let mut rows = Vec::with_capacity(k_list.len());
    let mut prev: Option<FourierAnsatz> = None;
    for &k in k_list {
        let sol = hb_solve(system, k, prev.as_ref(), opts);
        rows.push(KStudyRow {
            k,
            amplitude: sol.amplitude[0],
            residual_norm: sol.residual_norm,
            converged: sol.converged,
        });
        prev = Some(sol.ansatz);
    }
    let apparently_converged = rows.len() >= 2 && {
        let a = rows[rows.len() - 2].amplitude;
        let b = rows[rows.len() - 1].amplitude;
        Float::abs(a - b) < 1e-6
    };
    ConvergenceStudy {
        rows,
        apparently_converged,
    }
}

#[derive(Debug, Clone)]
pub struct FejerDemo {
    /// `(n, S_n(0))` for every bandwidth `n` up to the full one.
    pub partial_sums: Vec<(usize, f64)>,
    /// Bandwidth with the largest `|S_n(0)|` strictly inside the table.
    pub peak_n: usize,
    pub peak_value: f64,
    /// Dense-sampling estimate of `max_t |f_f(t)|`.
    pub sup_norm: f64,
    /// Full-bandwidth partial sum at `t = 0`; the per-frequency pairs
    /// cancel in closed form, so this is exactly zero.
    pub full_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FejerError {
    BlockCountTooLarge(usize),
}

impl core::fmt::Display for FejerError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FejerError::BlockCountTooLarge(kb) => {
                write!(f, "block count {kb} exceeds the supported maximum of 2")
            }
        }
    }
}

/// Partial sums at `t = 0` of the bounded trigonometric polynomial whose
/// Fourier series spikes at the origin.
pub fn fejer_partial_sum_demo(kb: usize) -> Result<FejerDemo, FejerError> {
    use crate::model::{fejer_block_freqs, ForcingSignal};
    if kb == 0 || kb > 2 {
        return Err(FejerError::BlockCountTooLarge(kb));
    }
    let signal = ForcingSignal::Fejer { kb };
    let fc = signal.to_fourier();
    let n_max = fc.harmonics();

    let mut partial_sums = Vec::with_capacity(n_max);
    let mut acc = 0.0;
    let mut peak_n = 0;
    let mut peak_value = 0.0;
    for n in 1..=n_max {
        acc += fc.cos[n - 1][0];
        partial_sums.push((n, acc));
        if n < n_max && Float::abs(acc) > Float::abs(peak_value) {
            peak_n = n;
            peak_value = acc;
        }
    }

    // the +a at p-l and -a at p+l cancel pairwise at t = 0
    let mut full_sum = 0.0;
    for k in 1..=kb {
        let (_, q) = fejer_block_freqs(k);
        let w = 1.0 / (k * k) as f64;
        for l in 1..=q {
            let a = w / l as f64;
            full_sum += a - a;
        }
    }

    // dense sup-norm estimate with sin/cos recurrences per sample
    let samples = 1 << 20;
    let mut sup_norm = 0.0f64;
    for i in 0..samples {
        let t = 2.0 * PI * i as f64 / samples as f64;
        let (s1, c1) = (Float::sin(t), Float::cos(t));
        let mut v = 0.0;
        let mut s_prev = 0.0; // sin(0 t)
        let mut s_cur = s1;
        let mut c_prev = 1.0;
        let mut c_cur = c1;
        for n in 1..=n_max {
            let coeff = fc.cos[n - 1][0];
            if coeff != 0.0 {
                v += coeff * c_cur;
            }
            let s_next = 2.0 * c1 * s_cur - s_prev;
            let c_next = 2.0 * c1 * c_cur - c_prev;
            s_prev = s_cur;
            s_cur = s_next;
            c_prev = c_cur;
            c_cur = c_next;
        }
        sup_norm = Float::max(sup_norm, Float::abs(v));
    }

    Ok(FejerDemo {
        partial_sums,
        peak_n,
        peak_value,
        sup_norm,
        full_sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_counterexample1, build_duffing, build_lin_sys};
    use approx::assert_abs_diff_eq;

    #[test]
    fn ansatz_layout_and_eval() {
        let mut a = FourierAnsatz::zero(2, 3, 1.0);
        a.set_c0(1, 4.0);
        a.set_s(2, 0, 1.5);
        a.set_c(3, 1, -2.0);
        assert_eq!(a.coeffs.len(), 2 * 7);
        assert_eq!(a.coeffs[7], 4.0);
        assert_eq!(a.coeffs[3], 1.5);
        assert_eq!(a.coeffs[7 + 6], -2.0);
        let q = a.eval(0.0);
        assert_eq!(q[0], 0.0);
        assert_eq!(q[1], 2.0 - 2.0);
        let t_per = a.period();
        let d = (a.eval(0.3) - a.eval(0.3 + t_per)).amax();
        assert!(d < 1e-12);
    }

    #[test]
    fn amplitude_of_single_harmonic() {
        let mut a = FourierAnsatz::zero(1, 1, 1.0);
        a.set_s(1, 0, 1.0);
        assert_abs_diff_eq!(a.amplitude()[0], 1.0, epsilon = 1e-6);
        let z = FourierAnsatz::zero(1, 1, 1.0);
        assert_eq!(z.amplitude()[0], 0.0);
    }

    #[test]
    fn lin_sol_ansatz_amplitude() {
        // dense maximum of 0.0025 (sin t + sin 20t)
        let mut a = FourierAnsatz::zero(1, 20, 1.0);
        a.set_s(1, 0, 0.0025);
        a.set_s(20, 0, 0.0025);
        assert_abs_diff_eq!(a.amplitude()[0], 0.0049937, epsilon = 1e-5);
    }

    #[test]
    fn exact_solution_has_tiny_residual() {
        let sys = build_lin_sys();
        let mut a = FourierAnsatz::zero(1, 20, 1.0);
        a.set_s(1, 0, 0.0025);
        a.set_s(20, 0, 0.0025);
        let r = aft_residual(&sys, &a, default_samples(20)).unwrap();
        assert!(r.norm() < 1e-10, "residual {}", r.norm());
    }

    #[test]
    fn zero_ansatz_zero_forcing_zero_residual() {
        let sys = build_duffing(0.01, 1.0, 1.0, 0.0, 1.0);
        let a = FourierAnsatz::zero(1, 4, 1.0);
        let r = aft_residual(&sys, &a, default_samples(4)).unwrap();
        assert!(r.norm() < 1e-15);
    }

    #[test]
    fn cubic_projection_term() {
        // ansatz s1 = a: the k=1 sine residual carries (3/4)κa³ + (ω²-Ω²)a - f_s1
        let (omega2, kappa, omega) = (1.0, 1.0, 0.6);
        let sys = build_duffing(0.0, omega2, kappa, 1.0, omega);
        let amp = 0.7;
        let mut a = FourierAnsatz::zero(1, 3, omega);
        a.set_s(1, 0, amp);
        let r = aft_residual(&sys, &a, default_samples(3)).unwrap();
        let expect = 0.75 * kappa * amp.powi(3) + (omega2 - omega * omega) * amp;
        assert_abs_diff_eq!(r[1], expect, epsilon = 1e-12);
    }

    #[test]
    fn aliasing_guard() {
        let sys = build_duffing(0.01, 1.0, 1.0, 1.0, 1.0);
        let a = FourierAnsatz::zero(1, 5, 1.0);
        assert!(aft_residual(&sys, &a, 20).is_err());
        assert!(aft_residual(&sys, &a, 23).is_err());
    }

    #[test]
    fn duffing_solve_matches_reference() {
        let sys = build_duffing(0.01, 1.0, 1.0, 1.0, 0.6);
        let sol = hb_solve(&sys, 7, None, &HbOpts::default());
        assert!(sol.converged);
        assert_abs_diff_eq!(sol.amplitude[0], 0.9385, epsilon = 1e-3);

        let small = build_duffing(0.01, 1.0, 1.0, 0.01, 0.6);
        let sol = hb_solve(&small, 7, None, &HbOpts::default());
        assert!(sol.converged);
        assert_abs_diff_eq!(sol.amplitude[0], 0.0156174, epsilon = 1e-4);
    }

    #[test]
    fn linear_system_truncation() {
        let sys = build_lin_sys();
        for k in [5usize, 10, 15] {
            let sol = hb_solve(&sys, k, None, &HbOpts::default());
            assert!(sol.converged);
            assert_abs_diff_eq!(sol.amplitude[0], 0.0025, epsilon = 1e-4);
        }
        let sol = hb_solve(&sys, 20, None, &HbOpts::default());
        assert!(sol.converged);
        // uniform match against the closed-form response
        for i in 0..500 {
            let t = 2.0 * PI * i as f64 / 500.0;
            let exact = 0.0025 * ((t).sin() + (20.0 * t).sin());
            assert_abs_diff_eq!(sol.ansatz.eval(t)[0], exact, epsilon = 1e-10);
        }
    }

    #[test]
    fn linear_hb_matches_per_harmonic_complex_solve() {
        // oracle: (-k²Ω²M + ikΩC + K) x_k = f_k per harmonic
        let sys = build_lin_sys();
        let sol = hb_solve(&sys, 20, None, &HbOpts::default());
        let (kmat, c) = (400.0, 0.01);
        let fc = match &sys.forcing {
            crate::model::ForcingSignal::Fourier(f) => f.clone(),
            _ => unreachable!(),
        };
        for h in 1..=20usize {
            let (fs, fcos) = if h <= fc.harmonics() {
                (fc.sin[h - 1][0], fc.cos[h - 1][0])
            } else {
                (0.0, 0.0)
            };
            let w = h as f64;
            // (K - w²) (s, c) + wC (-c, s) = (fs, fc)
            let a11 = kmat - w * w;
            let b = w * c;
            let det = a11 * a11 + b * b;
            let s_exact = (a11 * fs + b * fcos) / det;
            let c_exact = (a11 * fcos - b * fs) / det;
            assert_abs_diff_eq!(sol.ansatz.s(h, 0), s_exact, epsilon = 1e-10);
            assert_abs_diff_eq!(sol.ansatz.c(h, 0), c_exact, epsilon = 1e-10);
        }
    }

    #[test]
    fn alias_robustness_against_oversampling() {
        let sys = build_duffing(0.01, 1.0, 1.0, 1.0, 0.6);
        let k = 7;
        let sol1 = hb_solve(&sys, k, None, &HbOpts::default());
        let m2 = 2 * default_samples(k);
        let sol2 = hb_solve(
            &sys,
            k,
            None,
            &HbOpts {
                m_samples: Some(m2),
                ..HbOpts::default()
            },
        );
        assert!((&sol1.ansatz.coeffs - &sol2.ansatz.coeffs).amax() < 1e-9);
    }

    #[test]
    fn converged_residual_survives_quadrature_reprojection() {
        let sys = build_duffing(0.01, 1.0, 1.0, 1.0, 0.6);
        let sol = hb_solve(&sys, 7, None, &HbOpts::default());
        assert!(sol.converged);
        // re-evaluate the projected residual with a large independent grid
        let m = 1 << 16;
        let r = aft_residual(&sys, &sol.ansatz, m).unwrap();
        assert!(r.norm() < 10.0 * 1e-10, "requad residual {}", r.norm());
    }

    #[test]
    fn counterexample_study_k2_anchor() {
        let sys = build_counterexample1();
        let study = hb_convergence_study(&sys, &[2], &HbOpts::default());
        assert!(study.rows[0].converged);
        assert_abs_diff_eq!(study.rows[0].amplitude, 0.001195, epsilon = 1e-4);
    }

    #[test]
    fn fejer_demo_kb1() {
        let demo = fejer_partial_sum_demo(1).unwrap();
        // coefficients 0.5, 1.0 at n = 2, 3 and -1.0, -0.5 at n = 5, 6
        assert_abs_diff_eq!(demo.peak_value, 1.5, epsilon = 1e-12);
        assert_eq!(demo.peak_n, 3);
        assert_eq!(demo.full_sum, 0.0);
        assert!(fejer_partial_sum_demo(3).is_err());
    }
}
