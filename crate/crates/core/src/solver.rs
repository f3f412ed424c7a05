//! Alternating majorization-minimization for the penalized convolutive model.
//!
//! Each iteration performs a multiplicative S update, an optional per-band
//! ℓ∞ rescaling of S to match Y, and a per-band tridiagonal H solve. Both
//! updates minimize an auxiliary function of the cost, so with rescaling off
//! the cost never increases.

use std::io::Write;

use ndarray::{Array2, ArrayView2, Axis, Zip};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    band_forward, cost_terms, floored, numerical_floor, per_band_lambdas, row, standard,
    CostTerms, ReverbKernel, SolverConfig,
};
use crate::tridiag::{BandSystem, SolveMethod};

#[derive(Debug, Clone)]
pub struct SolverState {
    /// Clean power spectrogram estimate.
    pub s: Array2<f64>,
    pub h: ReverbKernel,
    /// Cached `forward_model(s, h)`.
    pub x: Array2<f64>,
    /// Completed iterations.
    pub iteration: usize,
    /// Cost after initialization followed by the cost after each iteration.
    pub cost_history: Vec<CostTerms>,
    pub converged: bool,
    /// Band solves that needed the least-squares fallback, over the whole run.
    pub least_squares_fallbacks: usize,
}

impl SolverState {
    pub fn costs(&self) -> Vec<f64> {
        self.cost_history.iter().map(CostTerms::total).collect()
    }

    pub fn final_cost(&self) -> Option<CostTerms> {
        self.cost_history.last().copied()
    }

    fn refresh_x(&mut self) {
        self.x = forward(&self.s, &self.h);
    }
}

fn forward(s: &Array2<f64>, h: &ReverbKernel) -> Array2<f64> {
    crate::model::forward_model(s.view(), h).expect("state shapes are consistent")
}

fn check_finite(a: &Array2<f64>, what: &str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::numerical(format!("non-finite value in {what}")))
    }
}

fn check_y(y: ArrayView2<f64>) -> Result<()> {
    if y.iter().all(|&v| v.is_finite() && v >= 0.0) {
        Ok(())
    } else {
        Err(Error::numerical("observation must be finite and nonnegative"))
    }
}

fn check_state(state: &SolverState, y: ArrayView2<f64>) -> Result<()> {
    if state.s.dim() != y.dim() || state.h.num_bins() != y.nrows() {
        return Err(Error::dims(format!(
            "state S {:?} / H {:?} do not match Y {:?}",
            state.s.dim(),
            state.h.data().dim(),
            y.dim()
        )));
    }
    Ok(())
}

/// `S ← Y`, `H_k[τ] ← exp(−τ)` for `τ = 0..n_h`.
pub fn initialize(y: ArrayView2<f64>, config: &SolverConfig) -> Result<SolverState> {
    config.validate()?;
    check_y(y)?;
    let s = y.to_owned().as_standard_layout().into_owned();
    let h = ReverbKernel::exponential_decay(y.nrows(), config.n_h)?;
    let x = forward(&s, &h);
    let initial = cost_terms(s.view(), &h, y, config)?;
    Ok(SolverState {
        s,
        h,
        x,
        iteration: 0,
        cost_history: vec![initial],
        converged: false,
        least_squares_fallbacks: 0,
    })
}

/// Multiplicative S update:
///
/// ```text
/// S_k[τ] ← S'_k[τ] · Σ_n H_k[n−τ]·Y_k[n] / (Σ_n H_k[n−τ]·X'_k[n] + λs_k/2 · p · S'_k[τ]^{p−1})
/// ```
///
/// with `S'` floored and `X' = S' ⊛ H`. The cached `X` is refreshed afterwards.
pub fn update_s(state: &mut SolverState, y: ArrayView2<f64>, config: &SolverConfig) -> Result<()> {
    check_state(state, y)?;
    let floor = numerical_floor(y, config);
    let weights = per_band_lambdas(y, config);
    let y = standard(y);
    let p = config.p;
    let h = &state.h;
    let frames = state.s.ncols();

    state
        .s
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(k, mut s_row)| {
            let hk = h.band(k);
            let yk = row(&y, k);
            let sp = floored(s_row.as_slice().expect("standard layout"), floor);
            let mut xp = vec![0.0; frames];
            band_forward(&sp, hk, &mut xp);
            let shrink = 0.5 * weights.lambda_s[k] * p;
            for tau in 0..frames {
                let mut num = 0.0;
                let mut den = 0.0;
                for (lag, &hv) in hk.iter().enumerate() {
                    let n = tau + lag;
                    if n >= frames {
                        break;
                    }
                    num += hv * yk[n];
                    den += hv * xp[n];
                }
                if shrink > 0.0 {
                    den += shrink * sp[tau].powf(p - 1.0);
                }
                s_row[tau] = if den > 0.0 { sp[tau] * num / den } else { sp[tau] };
            }
        });
    check_finite(&state.s, "S")?;
    state.refresh_x();
    Ok(())
}

/// Scales each row of S so that `max S_k = max Y_k`; rows with `max Y_k = 0` become zero.
pub fn rescale_s(state: &mut SolverState, y: ArrayView2<f64>) -> Result<()> {
    check_state(state, y)?;
    Zip::from(state.s.rows_mut())
        .and(y.rows())
        .for_each(|mut s_row, y_row| {
            let target = y_row.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
            let current = s_row.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
            if target == 0.0 {
                s_row.fill(0.0);
            } else if current > 0.0 {
                let gain = target / current;
                s_row.mapv_inplace(|v| v * gain);
            }
        });
    state.refresh_x();
    Ok(())
}

/// Per-band H update: solves `(A + λh_k·B·LᵀL)·H_k = B·ζ` with
/// `A_ττ = Σ_n S[n−τ]·X'[n]`, `B_ττ = H'[τ]` (floored), `ζ_τ = Σ_n S[n−τ]·Y[n]`
/// and `X' = S ⊛ H'`.
///
/// If the solution has negative entries they are clamped to zero and refined
/// by a nonnegative minimization of the same auxiliary function, started from
/// the better of the clamped point and `H'`.
pub fn update_h(state: &mut SolverState, y: ArrayView2<f64>, config: &SolverConfig) -> Result<()> {
    check_state(state, y)?;
    let floor = numerical_floor(y, config);
    let weights = per_band_lambdas(y, config);
    let y = standard(y);
    let s = standard(state.s.view());
    let frames = s.ncols();
    let lags = state.h.num_lags();

    let bands: Vec<(Vec<f64>, SolveMethod)> = (0..s.nrows())
        .into_par_iter()
        .map(|k| {
            let sk = row(&s, k);
            let yk = row(&y, k);
            let system = band_system(sk, yk, state.h.band(k), floor, weights.lambda_h[k], frames);
            let (solution, method) = system.solve();
            let solution = if solution.iter().all(|&v| v >= 0.0) {
                solution
            } else {
                system.nonnegative_minimizer(&[&solution, &system.b])
            };
            (solution, method)
        })
        .collect();

    let mut data = Array2::zeros((s.nrows(), lags));
    let mut fallbacks = 0;
    for (k, (solution, method)) in bands.into_iter().enumerate() {
        if method == SolveMethod::LeastSquares {
            fallbacks += 1;
        }
        for (tau, v) in solution.into_iter().enumerate() {
            data[[k, tau]] = v.max(0.0);
        }
    }
    check_finite(&data, "H")?;
    state.least_squares_fallbacks += fallbacks;
    state.h = ReverbKernel::from_trusted(data);
    state.refresh_x();
    Ok(())
}

/// Builds the tridiagonal system for one band.
pub(crate) fn band_system(
    s: &[f64],
    y: &[f64],
    h_prev: &[f64],
    floor: f64,
    lambda: f64,
    frames: usize,
) -> BandSystem {
    let hp = floored(h_prev, floor);
    let mut xp = vec![0.0; frames];
    band_forward(s, &hp, &mut xp);
    let lags = hp.len();
    let mut a = vec![0.0; lags];
    let mut zeta = vec![0.0; lags];
    for tau in 0..lags {
        let mut acc_a = 0.0;
        let mut acc_z = 0.0;
        for m in 0..frames.saturating_sub(tau) {
            acc_a += s[m] * xp[m + tau];
            acc_z += s[m] * y[m + tau];
        }
        a[tau] = acc_a;
        zeta[tau] = acc_z;
    }
    BandSystem {
        a,
        b: hp,
        zeta,
        lambda,
    }
}

fn frobenius_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    Zip::from(a)
        .and(b)
        .fold(0.0, |acc, x, y| acc + (x - y) * (x - y))
        .sqrt()
}

/// One full iteration: S update, optional rescale, H update. Returns `‖S − S_prev‖_F`.
pub fn step(state: &mut SolverState, y: ArrayView2<f64>, config: &SolverConfig) -> Result<f64> {
    let iteration = state.iteration + 1;
    let previous = state.s.clone();
    update_s(state, y, config).map_err(|e| e.at_iteration(iteration))?;
    if config.rescale {
        rescale_s(state, y)?;
    }
    update_h(state, y, config).map_err(|e| e.at_iteration(iteration))?;
    let terms = cost_terms(state.s.view(), &state.h, y, config)?;
    if !terms.total().is_finite() {
        return Err(Error::numerical("cost is not finite").at_iteration(iteration));
    }
    state.iteration = iteration;
    state.cost_history.push(terms);
    Ok(frobenius_diff(&state.s, &previous))
}

/// Runs the alternating scheme for at most `max_iter` iterations, stopping
/// early once `‖S − S_prev‖_F ≤ delta_factor · ‖Y‖_F`.
pub fn run(y: ArrayView2<f64>, config: &SolverConfig) -> Result<SolverState> {
    if y.ncols() <= config.n_h {
        return Err(Error::dims(format!(
            "need more frames ({}) than kernel lags ({})",
            y.ncols(),
            config.n_h
        )));
    }
    let mut state = initialize(y, config)?;
    let threshold = config.delta_factor * y.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _ in 0..config.max_iter {
        let change = step(&mut state, y, config)?;
        if change <= threshold {
            state.converged = true;
            break;
        }
    }
    Ok(state)
}

/// Writes `iteration,fidelity,sparsity_penalty,smoothness_penalty,total`, one row
/// per cost-history entry (iteration 0 is the initial state).
pub fn write_cost_csv<W: Write>(history: &[CostTerms], mut out: W) -> Result<()> {
    writeln!(out, "iteration,fidelity,sparsity_penalty,smoothness_penalty,total")?;
    for (i, t) in history.iter().enumerate() {
        writeln!(
            out,
            "{i},{:e},{:e},{:e},{:e}",
            t.fidelity,
            t.sparsity,
            t.smoothness,
            t.total()
        )?;
    }
    Ok(())
}
