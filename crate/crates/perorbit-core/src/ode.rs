//! Adaptive Dormand-Prince 5(4) integration with dense output.

use alloc::{vec, vec::Vec};
use nalgebra::DVector;
use num_traits::Float;

#[derive(Debug, Clone, Copy)]
pub struct OdeOpts {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Abort with the escape flag once |y|_inf exceeds this.
    pub escape_norm: f64,
    /// Keep interpolation data for every accepted step.
    pub dense: bool,
}

impl Default for OdeOpts {
    fn default() -> Self {
        OdeOpts {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 10_000_000,
            escape_norm: 1e8,
            dense: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OdeError {
    StepSizeUnderflow { t: f64 },
    MaxStepsExceeded { t: f64 },
}

impl core::fmt::Display for OdeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            OdeError::StepSizeUnderflow { t } => write!(f, "step size underflow at t = {t}"),
            OdeError::MaxStepsExceeded { t } => write!(f, "step budget exhausted at t = {t}"),
        }
    }
}

/// Coefficients of the quartic interpolant on one accepted step.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t: f64,
    pub h: f64,
    r1: DVector<f64>,
    r2: DVector<f64>,
    r3: DVector<f64>,
    r4: DVector<f64>,
    r5: DVector<f64>,
}

impl DenseStep {
    pub fn eval(&self, t: f64) -> DVector<f64> {
        let theta = (t - self.t) / self.h;
        let theta1 = 1.0 - theta;
        &self.r1
            + (&self.r2 + (&self.r3 + (&self.r4 + &self.r5 * theta1) * theta) * theta1) * theta
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t0: f64,
    pub t_end: f64,
    pub y_end: DVector<f64>,
    pub steps: Vec<DenseStep>,
    pub n_accepted: usize,
    pub n_rejected: usize,
    pub escaped: bool,
}

impl Trajectory {
    /// Dense evaluation; requires `OdeOpts::dense`.
    pub fn sample(&self, t: f64) -> DVector<f64> {
        assert!(!self.steps.is_empty(), "trajectory stored without dense output");
        let fwd = self.t_end >= self.t0;
        let mut lo = 0usize;
        let mut hi = self.steps.len();
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let after = if fwd { self.steps[mid].t <= t } else { self.steps[mid].t >= t };
            if after {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.steps[lo].eval(t)
    }
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Integrate `y' = f(t, y)` from `t0` to `t1` (either direction).
pub fn integrate<F>(
    f: F,
    y0: &DVector<f64>,
    t0: f64,
    t1: f64,
    opts: &OdeOpts,
) -> Result<Trajectory, OdeError>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let n = y0.len();
    let span = t1 - t0;
    let dir = if span >= 0.0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0.clone();
    let mut k1 = f(t, &y);
    let mut h = dir * Float::min(Float::abs(span) * 1e-3, 1e-2).max(Float::abs(span) * 1e-10);
    let mut steps = Vec::new();
    let mut n_accepted = 0usize;
    let mut n_rejected = 0usize;
    let mut total = 0usize;

    while dir * (t1 - t) > 1e-14 * Float::max(1.0, Float::abs(t)) {
        total += 1;
        if total > opts.max_steps {
            return Err(OdeError::MaxStepsExceeded { t });
        }
        if dir * (t + h - t1) > 0.0 {
            h = t1 - t;
        }
        if Float::abs(h) < 1e-14 * Float::max(1.0, Float::abs(t)) {
            return Err(OdeError::StepSizeUnderflow { t });
        }

        let mut k = vec![DVector::zeros(n); 7];
        k[0] = k1.clone();
        for s in 0..6 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                if A[s][j] != 0.0 {
                    ys += kj * (h * A[s][j]);
                }
            }
            k[s + 1] = f(t + C[s] * h, &ys);
        }
        // 5th-order solution is stage row 6 of A
        let mut y_new = y.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            if A[5][j] != 0.0 {
                y_new += kj * (h * A[5][j]);
            }
        }
        // k7 = f(t+h, y_new), FSAL
        let k7 = f(t + h, &y_new);

        let mut err_sq = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate().take(6) {
                e += E[j] * kj[i];
            }
            e += E[6] * k7[i];
            e *= h;
            let sc = opts.atol + opts.rtol * Float::max(Float::abs(y[i]), Float::abs(y_new[i]));
            err_sq += (e / sc) * (e / sc);
        }
        let err = Float::sqrt(err_sq / n as f64);

        if err <= 1.0 {
            if opts.dense {
                let dy = &y_new - &y;
                let r3 = &k[0] * h - &dy;
                let r4 = &dy - &k7 * h - &r3;
                let mut r5 = DVector::zeros(n);
                for (j, kj) in k.iter().enumerate().take(6) {
                    if D[j] != 0.0 {
                        r5 += kj * D[j];
                    }
                }
                r5 += &k7 * D[6];
                r5 *= h;
                steps.push(DenseStep {
                    t,
                    h,
                    r1: y.clone(),
                    r2: dy,
                    r3,
                    r4,
                    r5,
                });
            }
            t += h;
            y = y_new;
            k1 = k7;
            n_accepted += 1;
            if y.amax() > opts.escape_norm {
                return Ok(Trajectory {
                    t0,
                    t_end: t,
                    y_end: y,
                    steps,
                    n_accepted,
                    n_rejected,
                    escaped: true,
                });
            }
        } else {
            n_rejected += 1;
        }
        let fac = Float::min(5.0, Float::max(0.2, 0.9 * Float::powf(err, -0.2)));
        h *= fac;
    }

    Ok(Trajectory {
        t0,
        t_end: t,
        y_end: y,
        steps,
        n_accepted,
        n_rejected,
        escaped: false,
    })
}
