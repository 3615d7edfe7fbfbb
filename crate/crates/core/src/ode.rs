//! Explicit Runge-Kutta integrators on fixed-size real state vectors.
//!
//! [`dopri5`] is the adaptive Dormand-Prince 5(4) pair. Between accepted
//! steps it uses the pair's fourth-order continuous extension, which is the
//! cubic Hermite interpolant plus one stored correction vector per step.
//! [`rk4`] is a classical fixed-step scheme kept around as an independent
//! reference.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid integration interval [{t0}, {t1}]")]
    BadInterval { t0: f64, t1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: Option<f64>,
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h_max: None,
            h_init: None,
            max_steps: 5_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn h_max(mut self, h: f64) -> Self {
        self.h_max = Some(h);
        self
    }
}

/// Accepted steps of an adaptive run: node times, states, derivatives, and
/// the dense-output correction for each interval.
#[derive(Debug, Clone)]
pub struct DenseSolution<const N: usize> {
    pub ts: Vec<f64>,
    pub ys: Vec<[f64; N]>,
    pub fs: Vec<[f64; N]>,
    corr: Vec<[f64; N]>,
}

impl<const N: usize> DenseSolution<N> {
    pub fn t_start(&self) -> f64 {
        self.ts[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    pub fn last(&self) -> [f64; N] {
        *self.ys.last().unwrap()
    }

    fn interval(&self, t: f64) -> usize {
        let n = self.ts.len();
        if t <= self.ts[0] {
            return 0;
        }
        if t >= self.ts[n - 1] {
            return n.saturating_sub(2);
        }
        // index i with ts[i] <= t < ts[i+1]
        self.ts.partition_point(|&x| x <= t) - 1
    }

    /// Dense-output state. Times outside the node range are clamped to the
    /// nearest end.
    pub fn eval(&self, t: f64) -> [f64; N] {
        if self.ts.len() == 1 {
            return self.ys[0];
        }
        let t = t.clamp(self.t_start(), self.t_end());
        let i = self.interval(t);
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1, f0, f1) = (&self.ys[i], &self.ys[i + 1], &self.fs[i], &self.fs[i + 1]);
        let c = &self.corr[i];
        let mut out = [0.0; N];
        for k in 0..N {
            let r2 = y1[k] - y0[k];
            let r3 = h * f0[k] - r2;
            let r4 = r2 - h * f1[k] - r3;
            out[k] = y0[k] + s * (r2 + (1.0 - s) * (r3 + s * (r4 + (1.0 - s) * c[k])));
        }
        out
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error coefficients: b - b̂
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn lin<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

fn all_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

fn err_norm<const N: usize>(
    err: &[f64; N],
    y0: &[f64; N],
    y1: &[f64; N],
    opts: &OdeOptions,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / N as f64).sqrt()
}

fn initial_step<const N: usize, E, F>(
    f: &mut F,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    span: f64,
    opts: &OdeOptions,
) -> Result<f64, E>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let scale = |i: usize| opts.atol + opts.rtol * y0[i].abs();
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        d0 += (y0[i] / scale(i)).powi(2);
        d1 += (f0[i] / scale(i)).powi(2);
    }
    d0 = (d0 / N as f64).sqrt();
    d1 = (d1 / N as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let y1 = lin(y0, h0, &[(1.0, f0)]);
    let f1 = f(t0 + h0, &y1)?;
    let mut d2 = 0.0;
    for i in 0..N {
        d2 += ((f1[i] - f0[i]) / scale(i)).powi(2);
    }
    d2 = (d2 / N as f64).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span))
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` with the Dormand-Prince 5(4)
/// pair. `on_accept` sees every accepted node and may abort the run.
pub fn dopri5<const N: usize, E, F, H>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    opts: &OdeOptions,
    mut on_accept: H,
) -> Result<DenseSolution<N>, E>
where
    E: From<OdeError>,
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
    H: FnMut(f64, &[f64; N]) -> Result<(), E>,
{
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(OdeError::BadInterval { t0, t1 }.into());
    }
    let span = t1 - t0;
    let h_max = opts.h_max.unwrap_or(span).min(span);
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    if !all_finite(&k1) || !all_finite(&y) {
        return Err(OdeError::NonFinite { t }.into());
    }
    on_accept(t, &y)?;
    let mut sol = DenseSolution {
        ts: vec![t],
        ys: vec![y],
        fs: vec![k1],
        corr: Vec::new(),
    };
    let mut h = match opts.h_init {
        Some(h) => h,
        None => initial_step(&mut f, t, &y, &k1, span, opts)?,
    }
    .min(h_max);
    let mut steps = 0usize;
    let mut last_rejected = false;

    while t < t1 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(OdeError::TooManySteps {
                t,
                max_steps: opts.max_steps,
            }
            .into());
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(OdeError::StepUnderflow { t }.into());
        }
        let mut last = false;
        if t + h >= t1 || t1 - (t + h) < 1e-12 * span {
            h = t1 - t;
            last = true;
        }
        let k2 = f(t + C2 * h, &lin(&y, h, &[(A21, &k1)]))?;
        let k3 = f(t + C3 * h, &lin(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = f(
            t + C4 * h,
            &lin(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        )?;
        let k5 = f(
            t + C5 * h,
            &lin(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = f(
            t + h,
            &lin(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        )?;
        let y_new = lin(
            &y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let t_new = if last { t1 } else { t + h };
        let k7 = f(t_new, &y_new)?;
        let mut err = [0.0; N];
        for i in 0..N {
            err[i] =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = err_norm(&err, &y, &y_new, opts);
        if !en.is_finite() || !all_finite(&y_new) {
            // treat as a hard rejection and shrink aggressively
            h *= 0.1;
            last_rejected = true;
            continue;
        }
        if en <= 1.0 {
            let mut c = [0.0; N];
            for i in 0..N {
                c[i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            sol.corr.push(c);
            t = t_new;
            y = y_new;
            k1 = k7;
            on_accept(t, &y)?;
            sol.ts.push(t);
            sol.ys.push(y);
            sol.fs.push(k1);
            let mut fac = if en == 0.0 {
                5.0
            } else {
                (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
            };
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(h_max);
            last_rejected = false;
        } else {
            h *= (0.9 * en.powf(-0.2)).clamp(0.1, 1.0);
            last_rejected = true;
        }
    }
    Ok(sol)
}

/// Classical fourth-order Runge-Kutta, reporting the state at each of the
/// increasing `times` (the first must equal `t0`). Steps never exceed `h`
/// and land exactly on every output time.
pub fn rk4<const N: usize, E, F>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    times: &[f64],
    h: f64,
) -> Result<Vec<[f64; N]>, E>
where
    E: From<OdeError>,
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let mut out = Vec::with_capacity(times.len());
    let mut t = t0;
    let mut y = y0;
    for &target in times {
        if target < t {
            return Err(OdeError::BadInterval { t0: t, t1: target }.into());
        }
        let span = target - t;
        let n = (span / h).ceil().max(if span > 0.0 { 1.0 } else { 0.0 }) as usize;
        let step = if n > 0 { span / n as f64 } else { 0.0 };
        for _ in 0..n {
            let k1 = f(t, &y)?;
            let k2 = f(t + 0.5 * step, &lin(&y, step, &[(0.5, &k1)]))?;
            let k3 = f(t + 0.5 * step, &lin(&y, step, &[(0.5, &k2)]))?;
            let k4 = f(t + step, &lin(&y, step, &[(1.0, &k3)]))?;
            y = lin(
                &y,
                step,
                &[
                    (1.0 / 6.0, &k1),
                    (1.0 / 3.0, &k2),
                    (1.0 / 3.0, &k3),
                    (1.0 / 6.0, &k4),
                ],
            );
            t += step;
            if !all_finite(&y) {
                return Err(OdeError::NonFinite { t }.into());
            }
        }
        t = target;
        out.push(y);
    }
    Ok(out)
}
