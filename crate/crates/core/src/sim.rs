//! Time integration of open- and closed-loop systems with the running cost
//! carried along as an extra state.
//!
//! The integrator is the Dormand–Prince 5(4) pair with PI step-size control
//! and its fourth-order continuous extension for output at sample times.

use std::io::{self, Write};

use nalgebra::DVector;

use crate::albrekht::{FeedbackLaw, MonomialCache};
use crate::error::{PqrError, Result};
use crate::models::BenchmarkInstance;

/// States whose sup-norm exceeds this are considered to have escaped.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-11, max_steps: 5_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum IntegrationStatus {
    Completed,
    Blowup { time: f64 },
    Error { time: f64, message: String },
}

impl IntegrationStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, Self::Completed)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Completed => "completed",
            Self::Blowup { .. } => "blowup",
            Self::Error { .. } => "error",
        }
    }
}

/// Raw integrator output: states at the sample times that were reached.
#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub status: IntegrationStatus,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 1.0 / 5.0;
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const A7: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
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

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// `out = y + h Σ coef_i k_i`
fn combine(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    out.copy_from_slice(y);
    for &(coef, k) in terms {
        if coef == 0.0 {
            continue;
        }
        let s = h * coef;
        for (o, ki) in out.iter_mut().zip(k) {
            *o += s * ki;
        }
    }
}

fn initial_step<F: FnMut(f64, &[f64], &mut [f64])>(
    rhs: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    span: f64,
    opts: &OdeOptions,
) -> f64 {
    let sk: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let dnf: f64 = f0.iter().zip(&sk).map(|(f, s)| (f / s).powi(2)).sum();
    let dny: f64 = y.iter().zip(&sk).map(|(v, s)| (v / s).powi(2)).sum();
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * (dny / dnf).sqrt() };
    h = h.min(span);
    let mut y1 = vec![0.0; y.len()];
    combine(&mut y1, y, h, &[(1.0, f0)]);
    let mut f1 = vec![0.0; y.len()];
    rhs(t + h, &y1, &mut f1);
    if !all_finite(&f1) {
        return (1e-6 * span).max(h * 1e-3);
    }
    let der2 = f1
        .iter()
        .zip(f0)
        .zip(&sk)
        .map(|((a, b), s)| ((a - b) / s).powi(2))
        .sum::<f64>()
        .sqrt()
        / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
    (100.0 * h).min(h1).min(span)
}

/// Integrates `ẏ = rhs(t, y)` from `sample_times[0]` to the last sample time
/// and reports the state at every sample time that was reached.
///
/// Only the first `monitored` components take part in the blowup test, so
/// auxiliary states such as an accumulated cost can grow without bound.
pub fn integrate<F: FnMut(f64, &[f64], &mut [f64])>(
    mut rhs: F,
    y0: &[f64],
    sample_times: &[f64],
    opts: &OdeOptions,
    monitored: usize,
) -> OdeSolution {
    let mut sol = OdeSolution {
        times: Vec::new(),
        states: Vec::new(),
        status: IntegrationStatus::Completed,
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let t0 = sample_times.first().copied().unwrap_or(0.0);
    let valid_grid = sample_times.len() >= 2
        && sample_times.iter().all(|t| t.is_finite())
        && sample_times.windows(2).all(|w| w[1] > w[0]);
    if !valid_grid || !(opts.rtol > 0.0) || !(opts.atol > 0.0) {
        sol.status = IntegrationStatus::Error {
            time: t0,
            message: "need at least two increasing sample times and positive tolerances".into(),
        };
        return sol;
    }
    let t_end = *sample_times.last().unwrap();
    let span = t_end - t0;
    let h_min = 1e-14 * t_end.abs().max(span);
    let dim = y0.len();
    let monitored = monitored.min(dim);

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; dim]; 7];
    rhs(t, &y, &mut k[0]);
    sol.times.push(t0);
    sol.states.push(y.clone());
    if !all_finite(&y) || !all_finite(&k[0]) {
        sol.status = IntegrationStatus::Error { time: t, message: "non-finite initial state or derivative".into() };
        return sol;
    }
    let mut next_sample = 1;
    let mut h = initial_step(&mut rhs, t, &y, &k[0], span, opts);
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut stage = vec![0.0; dim];
    let mut y1 = vec![0.0; dim];
    let expo1 = 0.2 - BETA * 0.75;

    loop {
        if sol.accepted_steps + sol.rejected_steps >= opts.max_steps {
            sol.status = IntegrationStatus::Error { time: t, message: format!("step limit {} reached", opts.max_steps) };
            return sol;
        }
        if t + 1.01 * h >= t_end {
            h = t_end - t;
        }

        combine(&mut stage, &y, h, &[(A21, &k[0])]);
        rhs(t + C[0] * h, &stage, &mut k[1]);
        combine(&mut stage, &y, h, &[(A3[0], &k[0]), (A3[1], &k[1])]);
        rhs(t + C[1] * h, &stage, &mut k[2]);
        combine(&mut stage, &y, h, &[(A4[0], &k[0]), (A4[1], &k[1]), (A4[2], &k[2])]);
        rhs(t + C[2] * h, &stage, &mut k[3]);
        combine(&mut stage, &y, h, &[(A5[0], &k[0]), (A5[1], &k[1]), (A5[2], &k[2]), (A5[3], &k[3])]);
        rhs(t + C[3] * h, &stage, &mut k[4]);
        combine(
            &mut stage,
            &y,
            h,
            &[(A6[0], &k[0]), (A6[1], &k[1]), (A6[2], &k[2]), (A6[3], &k[3]), (A6[4], &k[4])],
        );
        rhs(t + C[4] * h, &stage, &mut k[5]);
        combine(
            &mut y1,
            &y,
            h,
            &[(A7[0], &k[0]), (A7[2], &k[2]), (A7[3], &k[3]), (A7[4], &k[4]), (A7[5], &k[5])],
        );
        rhs(t + h, &y1, &mut k[6]);

        let mut err = 0.0;
        for i in 0..dim {
            let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * h;
            let sk = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sk).powi(2);
        }
        err = (err / dim.max(1) as f64).sqrt();

        if !err.is_finite() {
            sol.rejected_steps += 1;
            last_rejected = true;
            h *= MIN_FACTOR;
            if h < h_min {
                sol.status = if y1.iter().chain(&stage).all(|v| v.is_finite()) && all_finite(&k[6]) {
                    IntegrationStatus::Blowup { time: t }
                } else {
                    IntegrationStatus::Error { time: t, message: "right-hand side returned non-finite values".into() }
                };
                return sol;
            }
            continue;
        }

        let fac11 = err.powf(expo1);
        if err <= 1.0 {
            // dense output on [t, t + h]
            let t_new = t + h;
            while next_sample < sample_times.len() && sample_times[next_sample] <= t_new {
                let ts = sample_times[next_sample];
                let state = if ts == t_new {
                    y1.clone()
                } else {
                    let theta = (ts - t) / h;
                    let theta1 = 1.0 - theta;
                    (0..dim)
                        .map(|i| {
                            let ydiff = y1[i] - y[i];
                            let bspl = h * k[0][i] - ydiff;
                            let r4 = ydiff - h * k[6][i] - bspl;
                            let r5 = h * (0..7).map(|s| D[s] * k[s][i]).sum::<f64>();
                            y[i] + theta * (ydiff + theta1 * (bspl + theta * (r4 + theta1 * r5)))
                        })
                        .collect()
                };
                sol.times.push(ts);
                sol.states.push(state);
                next_sample += 1;
            }
            sol.accepted_steps += 1;
            t = if next_sample >= sample_times.len() { t_end } else { t_new };
            std::mem::swap(&mut y, &mut y1);
            k.swap(0, 6);

            if y[..monitored].iter().any(|v| v.abs() > BLOWUP_THRESHOLD) {
                sol.status = IntegrationStatus::Blowup { time: t };
                return sol;
            }
            if next_sample >= sample_times.len() {
                return sol;
            }
            let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / MAX_FACTOR, 1.0 / MIN_FACTOR);
            fac_old = err.max(1e-4);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new;
        } else {
            sol.rejected_steps += 1;
            last_rejected = true;
            h /= (fac11 / SAFETY).min(1.0 / MIN_FACTOR);
        }
        if h < h_min {
            sol.status = IntegrationStatus::Blowup { time: t };
            return sol;
        }
    }
}

/// Sampled closed- or open-loop trajectory.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    /// `∫₀ᵗ ℓ` at each sample time.
    pub running_cost: Vec<f64>,
    pub status: IntegrationStatus,
}

impl Trajectory {
    /// `∫₀ᵀ ℓ`, or `None` unless the integration reached the final time.
    pub fn total_cost(&self) -> Option<f64> {
        match self.status {
            IntegrationStatus::Completed => self.running_cost.last().copied(),
            _ => None,
        }
    }

    /// CSV with header `t,x1..xn,u1..um,cost`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.states.first().map_or(0, Vec::len);
        let m = self.controls.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=m).map(|i| format!("u{i}")));
        header.push("cost".into());
        writeln!(w, "{}", header.join(","))?;
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![format!("{t:.16e}")];
            row.extend(self.states[i].iter().map(|v| format!("{v:.16e}")));
            row.extend(self.controls[i].iter().map(|v| format!("{v:.16e}")));
            row.push(format!("{:.16e}", self.running_cost[i]));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions {
    pub ode: OdeOptions,
    /// Number of equally spaced sample times including both ends.
    pub samples: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { ode: OdeOptions::default(), samples: 501 }
    }
}

pub fn sample_grid(horizon: f64, samples: usize) -> Vec<f64> {
    let count = samples.max(2);
    (0..count).map(|i| horizon * i as f64 / (count - 1) as f64).collect()
}

fn run(
    instance: &BenchmarkInstance,
    law: Option<(&FeedbackLaw, Option<usize>)>,
    horizon: f64,
    opts: &SimOptions,
) -> Result<(Trajectory, f64)> {
    let sys = &instance.system;
    let cost = &instance.cost;
    let n = sys.n();
    let m = sys.m();
    if let Some((l, _)) = law {
        if l.n() != n || l.m() != m {
            return Err(PqrError::DimensionMismatch(format!(
                "feedback law is {}x{} but the instance has n = {n}, m = {m}",
                l.m(),
                l.n()
            )));
        }
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(PqrError::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let control = |cache: &mut MonomialCache| match law {
        Some((l, up_to)) => l.eval_cached(cache, up_to),
        None => DVector::zeros(m),
    };
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let mut cache = MonomialCache::new(&y[..n]);
        let u = control(&mut cache);
        let x = DVector::from_column_slice(cache.x());
        let mut dx = sys.f_cached(&mut cache);
        dx.gemv(1.0, sys.a(), &x, 1.0);
        dx.gemv(1.0, sys.b(), &u, 1.0);
        dy[..n].copy_from_slice(dx.as_slice());
        dy[n] = cost.running_cost(&y[..n], u.as_slice());
    };
    let mut y0 = instance.x0.clone();
    y0.push(0.0);
    let sol = integrate(rhs, &y0, &sample_grid(horizon, opts.samples), &opts.ode, n);

    let mut states = Vec::with_capacity(sol.states.len());
    let mut controls = Vec::with_capacity(sol.states.len());
    let mut running = Vec::with_capacity(sol.states.len());
    for y in &sol.states {
        let mut cache = MonomialCache::new(&y[..n]);
        controls.push(control(&mut cache).as_slice().to_vec());
        states.push(y[..n].to_vec());
        running.push(y[n]);
    }
    let total = running.last().copied().unwrap_or(0.0);
    Ok((Trajectory { times: sol.times, states, controls, running_cost: running, status: sol.status }, total))
}

/// Simulates `ẋ = Ax + B K(x) + f(x)` with the feedback truncated at
/// `up_to` and returns the trajectory together with `∫₀ᵀ ℓ`. When the
/// integration stops early the cost accumulated so far is returned and the
/// trajectory status says why.
pub fn closed_loop_cost(
    instance: &BenchmarkInstance,
    law: &FeedbackLaw,
    up_to: Option<usize>,
    horizon: f64,
    opts: &SimOptions,
) -> Result<(Trajectory, f64)> {
    run(instance, Some((law, up_to)), horizon, opts)
}

/// Uncontrolled simulation; the cost reduces to `∫ xᵀQx`.
pub fn open_loop_cost(instance: &BenchmarkInstance, horizon: f64, opts: &SimOptions) -> Result<(Trajectory, f64)> {
    run(instance, None, horizon, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::albrekht::{pqr, PolynomialSystem, QuadraticCost};
    use crate::models;
    use nalgebra::{dmatrix, DMatrix};

    fn decay(_t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = -y[0];
    }

    #[test]
    fn exponential_decay() {
        let sol = integrate(decay, &[1.0], &[0.0, 0.5, 1.0], &OdeOptions::default(), 1);
        assert!(sol.status.is_completed());
        assert_eq!(sol.times, vec![0.0, 0.5, 1.0]);
        assert!((sol.states[2][0] - (-1.0f64).exp()).abs() < 1e-9 * (-1.0f64).exp());
        // the dense output point is accurate as well
        assert!((sol.states[1][0] - (-0.5f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn dense_output_on_fine_grid() {
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        let sol = integrate(decay, &[1.0], &grid, &OdeOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() }, 1);
        for (t, y) in sol.times.iter().zip(&sol.states) {
            assert!((y[0] - (-t).exp()).abs() < 1e-9, "{t}");
        }
        // sampling does not shorten the steps
        let coarse = integrate(decay, &[1.0], &[0.0, 10.0], &OdeOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() }, 1);
        assert!(sol.accepted_steps <= coarse.accepted_steps + 1);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let tau = 2.0 * std::f64::consts::PI;
        let sol = integrate(rhs, &[1.0, 0.0], &[0.0, tau], &OdeOptions::default(), 2);
        assert!((sol.states[1][0] - 1.0).abs() < 1e-8);
        assert!(sol.states[1][1].abs() < 1e-8);
    }

    #[test]
    fn finite_time_escape_is_blowup() {
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0];
        let sol = integrate(rhs, &[1.0], &[0.0, 2.0], &OdeOptions::default(), 1);
        match sol.status {
            IntegrationStatus::Blowup { time } => assert!(time < 1.0 && time > 0.99, "{time}"),
            other => panic!("expected blowup, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_derivative_is_error() {
        let rhs = |t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = if t > 0.5 { f64::NAN } else { 1.0 };
        let sol = integrate(rhs, &[0.0], &[0.0, 1.0], &OdeOptions::default(), 1);
        match sol.status {
            IntegrationStatus::Error { time, .. } => assert!((time - 0.5).abs() < 1e-6, "{time}"),
            other => panic!("expected error, got {other:?}"),
        }
        let bad = |_t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = f64::INFINITY;
        assert!(matches!(
            integrate(bad, &[0.0], &[0.0, 1.0], &OdeOptions::default(), 1).status,
            IntegrationStatus::Error { time, .. } if time == 0.0
        ));
    }

    #[test]
    fn rejects_bad_grid() {
        let sol = integrate(decay, &[1.0], &[0.0], &OdeOptions::default(), 1);
        assert!(matches!(sol.status, IntegrationStatus::Error { .. }));
        let sol = integrate(decay, &[1.0], &[1.0, 0.5], &OdeOptions::default(), 1);
        assert!(matches!(sol.status, IntegrationStatus::Error { .. }));
    }

    fn scalar_decay_instance() -> BenchmarkInstance {
        let sys = PolynomialSystem::new(dmatrix![-1.0], dmatrix![1.0]).unwrap();
        let cost = QuadraticCost::new(dmatrix![1.0], dmatrix![1.0]).unwrap();
        BenchmarkInstance::new(sys, cost, vec![1.0], 20.0, "decay").unwrap()
    }

    #[test]
    fn open_loop_cost_of_decay() {
        let inst = scalar_decay_instance();
        let (traj, cost) = open_loop_cost(&inst, 20.0, &SimOptions::default()).unwrap();
        assert!(traj.status.is_completed());
        let exact = 0.5 * (1.0 - (-40.0f64).exp());
        assert!((cost - exact).abs() < 1e-8, "{cost}");
        assert!(traj.running_cost.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(traj.controls.iter().all(|u| u == &vec![0.0]));
    }

    #[test]
    fn zero_state_costs_nothing() {
        let inst = models::lorenz().with_x0(vec![0.0; 3]).unwrap();
        let (_, law) = pqr(&inst.system, &inst.cost, 3).unwrap();
        let (traj, cost) = closed_loop_cost(&inst, &law, None, 50.0, &SimOptions::default()).unwrap();
        assert!(traj.status.is_completed());
        assert_eq!(cost, 0.0);
        assert!(traj.states.iter().all(|x| x.iter().all(|&v| v == 0.0)));
        let inst = scalar_decay_instance().with_x0(vec![0.0]).unwrap();
        assert_eq!(open_loop_cost(&inst, 5.0, &SimOptions::default()).unwrap().1, 0.0);
    }

    #[test]
    fn lqr_cost_matches_quadratic_value() {
        // for a linear system the optimal cost from x0 over an infinite horizon is x0ᵀV₂x0
        let sys = PolynomialSystem::new(dmatrix![0.0, 1.0; 2.0, -1.0], dmatrix![0.0; 1.0]).unwrap();
        let cost = QuadraticCost::new(DMatrix::identity(2, 2), dmatrix![1.0]).unwrap();
        let inst = BenchmarkInstance::new(sys, cost, vec![1.0, -0.5], 40.0, "lin").unwrap();
        let (vf, law) = pqr(&inst.system, &inst.cost, 1).unwrap();
        let (_, total) = closed_loop_cost(&inst, &law, None, 40.0, &SimOptions::default()).unwrap();
        let v = vf.eval(&inst.x0, None);
        assert!((total - v).abs() < 1e-8 * v, "{total} {v}");
    }

    #[test]
    fn uncontrolled_lorenz_stays_on_attractor() {
        let inst = models::lorenz();
        let (traj, _) = open_loop_cost(&inst, 50.0, &SimOptions { samples: 5001, ..Default::default() }).unwrap();
        assert!(traj.status.is_completed());
        assert!(traj.states.iter().all(|x| x.iter().all(|v| v.abs() < 100.0)));
    }

    #[test]
    fn burgers_feedback_beats_open_loop() {
        let inst = models::burgers_fem(16, 0.005, 0.3, 3).unwrap();
        let (_, law) = pqr(&inst.system, &inst.cost, 1).unwrap();
        let opts = SimOptions::default();
        let (_, open) = open_loop_cost(&inst, inst.horizon, &opts).unwrap();
        let (traj, closed) = closed_loop_cost(&inst, &law, None, inst.horizon, &opts).unwrap();
        assert!(traj.status.is_completed());
        assert!(open > closed, "{open} {closed}");
    }

    #[test]
    fn csv_layout() {
        let inst = scalar_decay_instance();
        let (traj, _) = open_loop_cost(&inst, 1.0, &SimOptions { samples: 3, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,u1,cost");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0.0000000000000000e0,1.0000000000000000e0,"));
    }
}
