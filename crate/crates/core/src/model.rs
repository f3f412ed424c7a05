//! Per-band convolutive model of power spectrograms, the penalized cost and its
//! two auxiliary (majorizing) functions.
//!
//! For band `k` the model is `X_k[n] = Σ_τ S_k[n-τ]·H_k[τ]` with `S_k[m] = 0`
//! for `m < 0`. The cost is
//!
//! ```text
//! J(S, H) = Σ_k ‖Y_k − X_k‖² + λs_k·‖S_k‖_p^p + λh_k·‖L H_k‖²
//! ```
//!
//! where `L` takes first differences along the kernel lag and the per-band
//! weights come from [`per_band_lambdas`].
//!
//! Matrices are `K × N` (bins by frames) for `S`, `X`, `Y` and `K × N_h` for `H`.

use ndarray::{Array2, ArrayView2, CowArray, Ix2};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Nonnegative per-band kernel `H`, one row of `N_h ≥ 2` lags per frequency bin.
#[derive(Debug, Clone, PartialEq)]
pub struct ReverbKernel {
    data: Array2<f64>,
}

impl ReverbKernel {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if data.ncols() < 2 {
            return Err(Error::dims(format!(
                "kernel needs at least 2 lags, got {}",
                data.ncols()
            )));
        }
        if data.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(Error::numerical("kernel entries must be finite and nonnegative"));
        }
        Ok(Self {
            data: data.as_standard_layout().into_owned(),
        })
    }

    /// `H_k[τ] = exp(-τ)` for every band.
    pub fn exponential_decay(bands: usize, lags: usize) -> Result<Self> {
        Self::new(Array2::from_shape_fn((bands, lags), |(_, tau)| (-(tau as f64)).exp()))
    }

    /// `H_k[0] = 1`, zero elsewhere: the identity kernel.
    pub fn delta(bands: usize, lags: usize) -> Result<Self> {
        Self::new(Array2::from_shape_fn((bands, lags), |(_, tau)| {
            if tau == 0 {
                1.0
            } else {
                0.0
            }
        }))
    }

    pub(crate) fn from_trusted(data: Array2<f64>) -> Self {
        debug_assert!(data.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self { data }
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    pub fn num_bins(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_lags(&self) -> usize {
        self.data.ncols()
    }

    pub(crate) fn band(&self, k: usize) -> &[f64] {
        self.data
            .row(k)
            .to_slice()
            .expect("kernel is stored in standard layout")
    }
}

/// Hyperparameters of the penalized factorization and of the alternating solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Global kernel smoothness weight, scaled per band by the band energy of `Y`.
    pub lambda_h: f64,
    /// Global sparsity weight on `S`.
    pub lambda_s: f64,
    /// Exponent of the sparsity penalty, in `(0, 2)`.
    pub p: f64,
    /// Kernel length in frames.
    pub n_h: usize,
    pub max_iter: usize,
    /// Stop once `‖S − S_prev‖_F ≤ delta_factor · ‖Y‖_F`.
    pub delta_factor: f64,
    /// Enforce `max S_k = max Y_k` after every S update.
    pub rescale: bool,
    /// Relative floor: previous-iterate entries are kept above `eps_floor · max(Y)`.
    pub eps_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda_h: 1.0,
            lambda_s: 1e-4,
            p: 1.0,
            n_h: 15,
            max_iter: 20,
            delta_factor: 1e-3,
            rescale: true,
            eps_floor: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.p > 0.0 && self.p < 2.0) {
            return bad(format!("p must lie in (0, 2), got {}", self.p));
        }
        if !(self.lambda_h >= 0.0 && self.lambda_h.is_finite()) {
            return bad(format!("lambda_h must be finite and >= 0, got {}", self.lambda_h));
        }
        if !(self.lambda_s >= 0.0 && self.lambda_s.is_finite()) {
            return bad(format!("lambda_s must be finite and >= 0, got {}", self.lambda_s));
        }
        if self.n_h < 2 {
            return bad(format!("kernel length must be >= 2, got {}", self.n_h));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        if !(self.delta_factor > 0.0 && self.delta_factor.is_finite()) {
            return bad(format!("delta_factor must be positive, got {}", self.delta_factor));
        }
        if !(self.eps_floor > 0.0 && self.eps_floor.is_finite()) {
            return bad(format!("eps_floor must be positive, got {}", self.eps_floor));
        }
        Ok(())
    }
}

/// Absolute floor for previous-iterate entries: `eps_floor · max(Y)`, or `eps_floor`
/// itself when `Y` is identically zero.
pub fn numerical_floor(y: ArrayView2<f64>, config: &SolverConfig) -> f64 {
    let max = y.iter().fold(0.0_f64, |m, &v| m.max(v));
    if max > 0.0 {
        config.eps_floor * max
    } else {
        config.eps_floor
    }
}

/// Per-band regularization weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BandWeights {
    pub lambda_h: Vec<f64>,
    pub lambda_s: Vec<f64>,
}

/// `λh_k = λh · Σ_n Y_k[n]²` and `λs_k = λs`.
pub fn per_band_lambdas(y: ArrayView2<f64>, config: &SolverConfig) -> BandWeights {
    let lambda_h = y
        .rows()
        .into_iter()
        .map(|row| config.lambda_h * row.iter().map(|v| v * v).sum::<f64>())
        .collect();
    BandWeights {
        lambda_h,
        lambda_s: vec![config.lambda_s; y.nrows()],
    }
}

/// Applies `L`: `[a, b, c] → [b − a, c − b]`.
pub fn first_difference(h: &[f64]) -> Vec<f64> {
    h.windows(2).map(|w| w[1] - w[0]).collect()
}

pub(crate) fn band_smoothness(h: &[f64]) -> f64 {
    h.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum()
}

pub(crate) fn band_sparsity(s: &[f64], p: f64) -> f64 {
    s.iter().map(|&v| v.max(0.0).powf(p)).sum()
}

pub(crate) fn band_fidelity(y: &[f64], x: &[f64]) -> f64 {
    y.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum()
}

/// `out[n] = Σ_{τ ≤ n} s[n − τ]·h[τ]`, truncated to `s.len()`.
pub(crate) fn band_forward(s: &[f64], h: &[f64], out: &mut [f64]) {
    for (n, o) in out.iter_mut().enumerate() {
        let lags = h.len().min(n + 1);
        let mut acc = 0.0;
        for (tau, &hv) in h[..lags].iter().enumerate() {
            acc += s[n - tau] * hv;
        }
        *o = acc;
    }
}

pub(crate) fn floored(values: &[f64], floor: f64) -> Vec<f64> {
    values.iter().map(|&v| v.max(floor)).collect()
}

pub(crate) fn standard(a: ArrayView2<'_, f64>) -> CowArray<'_, f64, Ix2> {
    if a.is_standard_layout() {
        CowArray::from(a)
    } else {
        CowArray::from(Array2::from_shape_vec(a.dim(), a.iter().copied().collect()).expect("shape"))
    }
}

pub(crate) fn row<'a>(a: &'a CowArray<'_, f64, Ix2>, k: usize) -> &'a [f64] {
    a.row(k).to_slice().expect("standard layout")
}

fn check_shapes(s: ArrayView2<f64>, h: &ReverbKernel, y: Option<ArrayView2<f64>>) -> Result<()> {
    if s.nrows() != h.num_bins() {
        return Err(Error::dims(format!(
            "S has {} bands but H has {}",
            s.nrows(),
            h.num_bins()
        )));
    }
    if let Some(y) = y {
        if y.dim() != s.dim() {
            return Err(Error::dims(format!("Y is {:?} but S is {:?}", y.dim(), s.dim())));
        }
    }
    Ok(())
}

/// `X = S ⊛ H` band by band, with a causal zero boundary. Output has the shape of `S`.
pub fn forward_model(s: ArrayView2<f64>, h: &ReverbKernel) -> Result<Array2<f64>> {
    check_shapes(s, h, None)?;
    let s = standard(s);
    let (bands, frames) = s.dim();
    let mut x = Array2::zeros((bands, frames));
    x.outer_iter_mut()
        .into_par_iter()
        .enumerate()
        .for_each(|(k, mut out)| {
            band_forward(row(&s, k), h.band(k), out.as_slice_mut().expect("fresh array"));
        });
    Ok(x)
}

/// The three terms of the cost, penalties already weighted by their per-band λ.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostTerms {
    pub fidelity: f64,
    pub sparsity: f64,
    pub smoothness: f64,
}

impl CostTerms {
    pub fn total(&self) -> f64 {
        self.fidelity + self.sparsity + self.smoothness
    }
}

impl std::ops::Add for CostTerms {
    type Output = CostTerms;

    fn add(self, o: CostTerms) -> CostTerms {
        CostTerms {
            fidelity: self.fidelity + o.fidelity,
            sparsity: self.sparsity + o.sparsity,
            smoothness: self.smoothness + o.smoothness,
        }
    }
}

/// Sums per-band values in band order so the result does not depend on the
/// parallel schedule.
fn sum_bands<T, F>(bands: usize, f: F) -> T
where
    T: Send + Default + std::ops::Add<Output = T>,
    F: Fn(usize) -> T + Sync + Send,
{
    let per_band: Vec<T> = (0..bands).into_par_iter().map(f).collect();
    per_band.into_iter().fold(T::default(), |a, b| a + b)
}

pub fn cost_terms(
    s: ArrayView2<f64>,
    h: &ReverbKernel,
    y: ArrayView2<f64>,
    config: &SolverConfig,
) -> Result<CostTerms> {
    check_shapes(s, h, Some(y))?;
    let weights = per_band_lambdas(y, config);
    let (s, y) = (standard(s), standard(y));
    let frames = s.ncols();
    Ok(sum_bands(s.nrows(), |k| {
        let mut x = vec![0.0; frames];
        band_forward(row(&s, k), h.band(k), &mut x);
        CostTerms {
            fidelity: band_fidelity(row(&y, k), &x),
            sparsity: weights.lambda_s[k] * band_sparsity(row(&s, k), config.p),
            smoothness: weights.lambda_h[k] * band_smoothness(h.band(k)),
        }
    }))
}

/// The penalized cost `J(S, H)`.
pub fn cost(
    s: ArrayView2<f64>,
    h: &ReverbKernel,
    y: ArrayView2<f64>,
    config: &SolverConfig,
) -> Result<f64> {
    cost_terms(s, h, y, config).map(|t| t.total())
}

/// Auxiliary function for `J(·, H)` around `S_prev`:
///
/// ```text
/// g_s(S, S') = Σ_{k,n,τ} (S'_k[τ] H_k[n−τ] / X'_k[n]) · (Y_k[n] − S_k[τ]/S'_k[τ] · X'_k[n])²
///            + Σ_k λh_k ‖L H_k‖²
///            + Σ_{k,n} λs_k · (p/2 · S'_k[n]^{p−2} S_k[n]² + S'_k[n]^p − p/2 · S'_k[n]^p)
/// ```
///
/// with `X' = S' ⊛ H`. `S'` is floored at [`numerical_floor`] first.
pub fn aux_gs(
    s: ArrayView2<f64>,
    s_prev: ArrayView2<f64>,
    h: &ReverbKernel,
    y: ArrayView2<f64>,
    config: &SolverConfig,
) -> Result<f64> {
    check_shapes(s, h, Some(y))?;
    if s_prev.dim() != s.dim() {
        return Err(Error::dims(format!("S' is {:?} but S is {:?}", s_prev.dim(), s.dim())));
    }
    let floor = numerical_floor(y, config);
    let weights = per_band_lambdas(y, config);
    let (s, s_prev, y) = (standard(s), standard(s_prev), standard(y));
    let frames = s.ncols();
    let p = config.p;
    Ok(sum_bands(s.nrows(), |k| {
        let (sk, yk, hk) = (row(&s, k), row(&y, k), h.band(k));
        let sp = floored(row(&s_prev, k), floor);
        let mut xp = vec![0.0; frames];
        band_forward(&sp, hk, &mut xp);

        let mut fit = 0.0;
        for n in 0..frames {
            if xp[n] <= 0.0 {
                continue;
            }
            for (lag, &hv) in hk.iter().enumerate().take(n + 1) {
                let tau = n - lag;
                let w = sp[tau] * hv / xp[n];
                if w == 0.0 {
                    continue;
                }
                let d = yk[n] - sk[tau] / sp[tau] * xp[n];
                fit += w * d * d;
            }
        }
        let majorized_sparsity: f64 = sk
            .iter()
            .zip(&sp)
            .map(|(&sv, &spv)| {
                0.5 * p * spv.powf(p - 2.0) * sv * sv + spv.powf(p) - 0.5 * p * spv.powf(p)
            })
            .sum();
        fit + weights.lambda_s[k] * majorized_sparsity + weights.lambda_h[k] * band_smoothness(hk)
    }))
}

/// Auxiliary function for `J(S, ·)` around `H_prev`:
///
/// ```text
/// g_h(H, H') = Σ_{k,n,τ} (S_k[n−τ] H'_k[τ] / X'_k[n]) · (Y_k[n] − H_k[τ]/H'_k[τ] · X'_k[n])²
///            + Σ_k λs_k ‖S_k‖_p^p + Σ_k λh_k ‖L H_k‖²
/// ```
///
/// with `X' = S ⊛ H'`. `H'` is floored at [`numerical_floor`] first. The smoothness
/// penalty is carried over exactly, not majorized.
pub fn aux_gh(
    h: &ReverbKernel,
    h_prev: &ReverbKernel,
    s: ArrayView2<f64>,
    y: ArrayView2<f64>,
    config: &SolverConfig,
) -> Result<f64> {
    check_shapes(s, h, Some(y))?;
    if h_prev.data().dim() != h.data().dim() {
        return Err(Error::dims(format!(
            "H' is {:?} but H is {:?}",
            h_prev.data().dim(),
            h.data().dim()
        )));
    }
    let floor = numerical_floor(y, config);
    let weights = per_band_lambdas(y, config);
    let (s, y) = (standard(s), standard(y));
    let frames = s.ncols();
    Ok(sum_bands(s.nrows(), |k| {
        let (sk, yk, hk) = (row(&s, k), row(&y, k), h.band(k));
        let hp = floored(h_prev.band(k), floor);
        let mut xp = vec![0.0; frames];
        band_forward(sk, &hp, &mut xp);

        let mut fit = 0.0;
        for n in 0..frames {
            if xp[n] <= 0.0 {
                continue;
            }
            for (lag, &hpv) in hp.iter().enumerate().take(n + 1) {
                let w = sk[n - lag] * hpv / xp[n];
                if w == 0.0 {
                    continue;
                }
                let d = yk[n] - hk[lag] / hpv * xp[n];
                fit += w * d * d;
            }
        }
        fit + weights.lambda_s[k] * band_sparsity(sk, config.p)
            + weights.lambda_h[k] * band_smoothness(hk)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(1e-3..=1.0))
    }

    fn config(lambda_s: f64, lambda_h: f64, p: f64) -> SolverConfig {
        SolverConfig {
            lambda_s,
            lambda_h,
            p,
            n_h: 4,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn defaults_follow_the_published_settings() {
        let c = SolverConfig::default();
        assert_eq!((c.p, c.n_h, c.max_iter), (1.0, 15, 20));
        assert_eq!((c.lambda_h, c.lambda_s, c.delta_factor), (1.0, 1e-4, 1e-3));
        assert!(c.rescale);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn config_validation_rejects_out_of_range() {
        for bad in [
            SolverConfig { p: 0.0, ..Default::default() },
            SolverConfig { p: 2.0, ..Default::default() },
            SolverConfig { lambda_h: -1.0, ..Default::default() },
            SolverConfig { lambda_s: f64::NAN, ..Default::default() },
            SolverConfig { n_h: 1, ..Default::default() },
            SolverConfig { max_iter: 0, ..Default::default() },
            SolverConfig { delta_factor: 0.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn kernel_invariants() {
        assert!(ReverbKernel::new(Array2::zeros((3, 1))).is_err());
        assert!(ReverbKernel::new(array![[1.0, -0.1]]).is_err());
        assert!(ReverbKernel::new(array![[1.0, f64::NAN]]).is_err());
        let h = ReverbKernel::exponential_decay(2, 5).unwrap();
        assert_eq!(h.data()[[1, 0]], 1.0);
        assert!((h.data()[[0, 3]] - (-3.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn forward_model_examples() {
        let s = array![[1.0, 2.0, 3.0]];
        let h = ReverbKernel::new(array![[1.0, 0.5]]).unwrap();
        assert_eq!(forward_model(s.view(), &h).unwrap(), array![[1.0, 2.5, 4.0]]);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_matrix(&mut rng, 5, 20);
        let delta = ReverbKernel::delta(5, 6).unwrap();
        assert_eq!(forward_model(s.view(), &delta).unwrap(), s);

        let zero = Array2::zeros((5, 20));
        assert!(forward_model(zero.view(), &delta).unwrap().iter().all(|&v| v == 0.0));

        assert!(matches!(
            forward_model(zero.view(), &ReverbKernel::delta(4, 3).unwrap()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn forward_model_is_bilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (s1, s2) = (random_matrix(&mut rng, 3, 30), random_matrix(&mut rng, 3, 30));
        let (h1, h2) = (random_matrix(&mut rng, 3, 6), random_matrix(&mut rng, 3, 6));
        let (a, b) = (0.3, 2.1);
        let k = |m: &Array2<f64>| ReverbKernel::new(m.clone()).unwrap();
        let rel = |x: &Array2<f64>, y: &Array2<f64>| {
            (x - y).mapv(|v| v * v).sum().sqrt() / y.mapv(|v| v * v).sum().sqrt()
        };

        let lhs = forward_model((&s1 * a + &s2 * b).view(), &k(&h1)).unwrap();
        let rhs = forward_model(s1.view(), &k(&h1)).unwrap() * a
            + forward_model(s2.view(), &k(&h1)).unwrap() * b;
        assert!(rel(&lhs, &rhs) <= 1e-9);

        let lhs = forward_model(s1.view(), &k(&(&h1 * a + &h2 * b))).unwrap();
        let rhs = forward_model(s1.view(), &k(&h1)).unwrap() * a
            + forward_model(s1.view(), &k(&h2)).unwrap() * b;
        assert!(rel(&lhs, &rhs) <= 1e-9);
    }

    #[test]
    fn per_band_lambda_examples() {
        let y = array![[1.0, 2.0], [0.0, 0.0]];
        let c = SolverConfig::default();
        let w = per_band_lambdas(y.view(), &c);
        assert_eq!(w.lambda_h, vec![5.0, 0.0]);
        assert_eq!(w.lambda_s, vec![1e-4, 1e-4]);
    }

    #[test]
    fn first_difference_operator() {
        assert_eq!(first_difference(&[1.0, 4.0, 9.0]), vec![3.0, 5.0]);
        assert!(first_difference(&[2.5; 7]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cost_examples() {
        // exact fit, no penalties
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_matrix(&mut rng, 4, 16);
        let h = ReverbKernel::new(random_matrix(&mut rng, 4, 4)).unwrap();
        let y = forward_model(s.view(), &h).unwrap();
        assert_eq!(cost(s.view(), &h, y.view(), &config(0.0, 0.0, 1.0)).unwrap(), 0.0);

        // constant kernel rows sit in the nullspace of L
        let flat = ReverbKernel::new(Array2::from_elem((4, 4), 0.3)).unwrap();
        let terms = cost_terms(s.view(), &flat, y.view(), &config(0.0, 5.0, 1.0)).unwrap();
        assert_eq!(terms.smoothness, 0.0);

        // hand evaluation: (0-1)² + (0-4)² + 1·(1 + 4)
        let s = array![[1.0, 4.0]];
        let h = ReverbKernel::new(array![[1.0, 0.0]]).unwrap();
        let y = array![[0.0, 0.0]];
        let j = cost(s.view(), &h, y.view(), &config(1.0, 0.0, 1.0)).unwrap();
        assert_eq!(j, 22.0);
    }

    #[test]
    fn q_term_is_minimized_at_the_current_value() {
        for &p in &[0.3, 0.5, 1.0, 1.5, 1.9] {
            for &s in &[0.01, 0.5, 2.0, 7.0] {
                let q = |x: f64| 0.5 * p * x.powf(p - 2.0) * s * s + x.powf(p) - 0.5 * p * x.powf(p);
                assert!((q(s) - s.powf(p)).abs() <= 1e-12 * s.powf(p));
                for i in 1..200 {
                    let x = s * (i as f64) / 50.0;
                    assert!(q(x) >= s.powf(p) * (1.0 - 1e-12), "p={p} s={s} x={x}");
                }
            }
        }
    }

    #[test]
    fn aux_gs_touches_and_dominates_the_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..200 {
            let p = [0.5, 1.0, 1.5][trial % 3];
            let c = config(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), p);
            let (k, n, nh) = (rng.random_range(1..5), rng.random_range(5..25), rng.random_range(2..6));
            let s = random_matrix(&mut rng, k, n);
            let sp = random_matrix(&mut rng, k, n);
            let h = ReverbKernel::new(random_matrix(&mut rng, k, nh)).unwrap();
            let y = random_matrix(&mut rng, k, n);
            let j = cost(s.view(), &h, y.view(), &c).unwrap();
            let same = aux_gs(s.view(), s.view(), &h, y.view(), &c).unwrap();
            assert!((same - j).abs() <= 1e-10 * j);
            let other = aux_gs(s.view(), sp.view(), &h, y.view(), &c).unwrap();
            assert!(other >= j - 1e-10 * j);
        }
    }

    #[test]
    fn aux_gh_touches_and_dominates_the_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..200 {
            let p = [0.5, 1.0, 1.5][trial % 3];
            let c = config(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), p);
            let (k, n, nh) = (rng.random_range(1..5), rng.random_range(5..25), rng.random_range(2..6));
            let s = random_matrix(&mut rng, k, n);
            let h = ReverbKernel::new(random_matrix(&mut rng, k, nh)).unwrap();
            let hp = ReverbKernel::new(random_matrix(&mut rng, k, nh)).unwrap();
            let y = random_matrix(&mut rng, k, n);
            let j = cost(s.view(), &h, y.view(), &c).unwrap();
            let same = aux_gh(&h, &h, s.view(), y.view(), &c).unwrap();
            assert!((same - j).abs() <= 1e-10 * j);
            let other = aux_gh(&h, &hp, s.view(), y.view(), &c).unwrap();
            assert!(other >= j - 1e-10 * j);
        }
    }

    #[test]
    fn aux_gh_carries_the_smoothness_term_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = random_matrix(&mut rng, 3, 12);
        let y = random_matrix(&mut rng, 3, 12);
        let h = ReverbKernel::new(random_matrix(&mut rng, 3, 5)).unwrap();
        let hp = ReverbKernel::new(random_matrix(&mut rng, 3, 5)).unwrap();
        let with = aux_gh(&h, &hp, s.view(), y.view(), &config(0.0, 2.0, 1.0)).unwrap();
        let without = aux_gh(&h, &hp, s.view(), y.view(), &config(0.0, 0.0, 1.0)).unwrap();
        let expected = cost_terms(s.view(), &h, y.view(), &config(0.0, 2.0, 1.0))
            .unwrap()
            .smoothness;
        assert!(((with - without) - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn aux_functions_check_shapes() {
        let s = Array2::from_elem((2, 5), 0.5);
        let h = ReverbKernel::exponential_decay(2, 3).unwrap();
        let c = config(0.1, 0.1, 1.0);
        let bad_y = Array2::from_elem((2, 4), 0.5);
        assert!(aux_gs(s.view(), s.view(), &h, bad_y.view(), &c).is_err());
        let bad_h = ReverbKernel::exponential_decay(2, 4).unwrap();
        assert!(aux_gh(&h, &bad_h, s.view(), s.view(), &c).is_err());
    }
}
