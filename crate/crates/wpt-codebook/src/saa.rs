//! Sample-average-approximation optimizer.
//!
//! Maximizes the sample-summed weighted output voltage
//! `Σ_{t0} Σ_q w_q v_out(h_q^{[t0]}, s)` over the power ball `‖s‖² ≤ P` by
//! successive convex approximation. Each iteration linearizes the concave
//! part of the epigraph constraint around the previous auxiliary variables
//! `t_{q,k} = sᴴ M_{q,k} s`, which collapses the convex subproblem to
//! "minimize `xᴴ A_1 x` on the ball" — solved exactly by the eigenvector of
//! the smallest eigenvalue of `A_1` scaled to the power sphere. The
//! surrogate value `γ₁` decreases and the voltage objective increases
//! monotonically, and the limit point satisfies the KKT conditions of the
//! sample problem.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{quadratic_forms, tone_products, ChannelRealization, Precoder, RectennaParams, SystemDims};

/// Stopping parameters of the SCA loop.
#[derive(Debug, Clone, Copy)]
pub struct SaaConfig {
    /// Relative tolerance on `‖X^(l) − X^(l−1)‖_F / ‖X^(l)‖_F` with
    /// `X = s sᴴ`.
    pub epsilon: f64,
    /// Hard iteration cap; hitting it flags the result as not converged.
    pub max_iterations: usize,
}

impl Default for SaaConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            max_iterations: 200,
        }
    }
}

impl SaaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Auxiliary quadratic forms `t_{q,k}^{[t0]} = sᴴ M_{q,k}^{[t0]} s`,
/// indexed by (realization, rectenna, block-diagonal).
#[derive(Debug, Clone)]
pub struct AuxiliaryT {
    realizations: usize,
    rectennas: usize,
    diagonals: usize,
    values: Vec<Complex64>,
}

impl AuxiliaryT {
    pub fn value(&self, t0: usize, q: usize, k: usize) -> Complex64 {
        self.values[(t0 * self.rectennas + q) * self.diagonals + k]
    }

    pub fn realizations(&self) -> usize {
        self.realizations
    }

    pub fn rectennas(&self) -> usize {
        self.rectennas
    }

    pub fn diagonals(&self) -> usize {
        self.diagonals
    }
}

/// Per-run diagnostics of the SCA loop.
#[derive(Debug, Clone)]
pub struct SaaState {
    /// Sample-summed weighted voltage after each iteration; entry 0 is the
    /// value at the initial point. Non-decreasing up to slack.
    pub objective_trace: Vec<f64>,
    /// Surrogate epigraph value after each iteration; entry 0 is the exact
    /// value at the initial point. Non-increasing up to slack.
    pub gamma_trace: Vec<f64>,
    /// Iterations actually executed.
    pub iterations: usize,
    /// Whether the relative-change stopping rule fired before the cap.
    pub converged: bool,
    /// Eigen-residual `‖A₁ s − λ s‖ / ‖A₁‖_F` against the final `A₁`
    /// rebuilt from the final auxiliary variables.
    pub kkt_residual: f64,
}

/// Relative slack tolerated when checking trace monotonicity.
pub const TRACE_SLACK_REL: f64 = 1e-9;

impl SaaState {
    /// True when the objective trace never decreases by more than the
    /// relative slack.
    pub fn objective_monotone(&self) -> bool {
        trace_monotone(&self.objective_trace, 1.0)
    }

    /// True when the gamma trace never increases by more than the relative
    /// slack.
    pub fn gamma_monotone(&self) -> bool {
        trace_monotone(&self.gamma_trace, -1.0)
    }
}

fn trace_monotone(trace: &[f64], direction: f64) -> bool {
    trace.windows(2).all(|w| {
        let scale = w[0].abs().max(w[1].abs()).max(f64::MIN_POSITIVE);
        direction * (w[1] - w[0]) >= -TRACE_SLACK_REL * scale
    })
}

/// Computes all auxiliary quadratic forms for a sample at the precoder `s`.
pub fn compute_t(
    sample: &[ChannelRealization],
    s: &DVector<Complex64>,
    dims: &SystemDims,
) -> Result<AuxiliaryT> {
    let n = dims.tones;
    let q_count = dims.rectennas;
    let mut values = Vec::with_capacity(sample.len() * q_count * n);
    for realization in sample {
        if realization.dims() != *dims {
            return Err(Error::ShapeMismatch(
                "realization dims disagree with requested dims".into(),
            ));
        }
        for q in 0..q_count {
            let h_q = realization.rectenna_channel(q);
            let a = tone_products(&h_q, s, dims)?;
            values.extend(quadratic_forms(&a));
        }
    }
    Ok(AuxiliaryT {
        realizations: sample.len(),
        rectennas: q_count,
        diagonals: n,
        values,
    })
}

/// Assembles the surrogate matrix
/// `A₁ = C₁ + C₁ᴴ` with
/// `C₁ = Σ_{t0,q} w_q ( −(β₂ + 3β₄ t_{q,0})/2 · M_{q,0}
///                      − 3β₄ Σ_{k≥1} conj(t_{q,k}) · M_{q,k} )`.
pub fn build_a1(
    sample: &[ChannelRealization],
    t_prev: &AuxiliaryT,
    weights: &[f64],
    params: &RectennaParams,
    dims: &SystemDims,
) -> Result<DMatrix<Complex64>> {
    if t_prev.realizations != sample.len() || t_prev.rectennas != dims.rectennas {
        return Err(Error::ShapeMismatch(
            "auxiliary variables do not match the sample".into(),
        ));
    }
    if weights.len() != dims.rectennas {
        return Err(Error::ShapeMismatch(format!(
            "{} weights for {} rectennas",
            weights.len(),
            dims.rectennas
        )));
    }
    let (m, n, mn) = (dims.antennas, dims.tones, dims.mn());
    let mut c1: DMatrix<Complex64> = DMatrix::zeros(mn, mn);
    for (t0, realization) in sample.iter().enumerate() {
        for (q, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let h = realization.rectenna_channel(q);
            for k in 0..n {
                let coef = if k == 0 {
                    let t0_val = t_prev.value(t0, q, 0).re;
                    Complex64::new(-w * (params.beta2 + 3.0 * params.beta4 * t0_val) / 2.0, 0.0)
                } else {
                    t_prev.value(t0, q, k).conj() * (-3.0 * params.beta4 * w)
                };
                // M_{q,k} blocks live at block position (b, b+k):
                // entry (b*m + i, (b+k)*m + j) = conj(h[b*m+i]) h[(b+k)*m+j].
                for b in 0..n - k {
                    for i in 0..m {
                        let row = b * m + i;
                        let hc = h[row].conj();
                        for j in 0..m {
                            let col = (b + k) * m + j;
                            c1[(row, col)] += coef * hc * h[col];
                        }
                    }
                }
            }
        }
    }
    Ok(&c1 + c1.adjoint())
}

/// Relative Hermitian-ness required of [`min_eigpair`] inputs.
pub const HERMITIAN_TOL_REL: f64 = 1e-10;

/// Residual bound delivered by [`min_eigpair`], relative to `‖A‖_F`.
pub const EIG_RESIDUAL_REL: f64 = 1e-8;

/// Smallest eigenvalue and a deterministically-phased unit eigenvector of a
/// Hermitian matrix.
///
/// The returned vector has its first entry of magnitude above `1e-12` made
/// real and positive. Eigenvalue ties within `1e-10` relative are broken by
/// choosing the candidate whose (re, im) entry sequence is
/// lexicographically smallest after phase normalization.
pub fn min_eigpair(a: &DMatrix<Complex64>) -> Result<(f64, DVector<Complex64>)> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::ShapeMismatch(format!(
            "expected a nonempty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = a.norm();
    let asym = (a - a.adjoint()).norm();
    if asym > HERMITIAN_TOL_REL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::ContractViolation(format!(
            "matrix is not Hermitian: ‖A − Aᴴ‖ = {asym}, ‖A‖ = {scale}"
        )));
    }
    let herm = (a + a.adjoint()).map(|z| z * 0.5);
    let eig = herm.clone().symmetric_eigen();

    let lambda_min = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let tie_tol = 1e-10 * lambda_min.abs().max(f64::MIN_POSITIVE);
    let mut best: Option<DVector<Complex64>> = None;
    for (idx, lambda) in eig.eigenvalues.iter().enumerate() {
        if (lambda - lambda_min).abs() > tie_tol {
            continue;
        }
        let candidate = normalize_phase(DVector::from_column_slice(
            eig.eigenvectors.column(idx).as_slice(),
        ));
        best = Some(match best {
            None => candidate,
            Some(current) => {
                if lex_less(&candidate, &current) {
                    candidate
                } else {
                    current
                }
            }
        });
    }
    let mut u = best.expect("a square matrix has at least one eigenpair");

    // Polish with inverse iteration: the QR-based solve can leave residuals
    // near 1e-8 relative, and the contract demands better. A slightly
    // shifted solve keeps the system invertible even for exact eigenvalues.
    let mut lambda = lambda_min;
    let bound = EIG_RESIDUAL_REL * scale.max(f64::MIN_POSITIVE);
    for _ in 0..3 {
        let residual = (&herm * &u - &u * Complex64::new(lambda, 0.0)).norm();
        if residual <= 0.01 * bound {
            break;
        }
        let shift = lambda - 1e-10 * scale.max(f64::MIN_POSITIVE);
        let shifted = &herm
            - DMatrix::from_diagonal_element(herm.nrows(), herm.ncols(), Complex64::new(shift, 0.0));
        match shifted.lu().solve(&u) {
            Some(next) => {
                u = normalize_phase(next);
                lambda = (u.adjoint() * &herm * &u)[(0, 0)].re;
            }
            None => break,
        }
    }

    let residual = (&herm * &u - &u * Complex64::new(lambda, 0.0)).norm();
    if residual > bound {
        return Err(Error::ContractViolation(format!(
            "eigenpair residual {residual} exceeds {EIG_RESIDUAL_REL} * ‖A‖ = {}",
            EIG_RESIDUAL_REL * scale
        )));
    }
    Ok((lambda, u))
}

/// Rotates the global phase so the first entry of magnitude above 1e-12 is
/// real positive, then rescales to unit norm.
fn normalize_phase(mut u: DVector<Complex64>) -> DVector<Complex64> {
    if let Some(pivot) = u.iter().find(|z| z.norm() > 1e-12) {
        let rotation = pivot.conj() / pivot.norm();
        u.apply(|z| *z *= rotation);
    }
    let norm = u.norm();
    if norm > 0.0 {
        u.apply(|z| *z /= Complex64::new(norm, 0.0));
    }
    u
}

fn lex_less(a: &DVector<Complex64>, b: &DVector<Complex64>) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        for (u, v) in [(x.re, y.re), (x.im, y.im)] {
            if u < v {
                return true;
            }
            if u > v {
                return false;
            }
        }
    }
    false
}

/// Sample-summed weighted voltage expressed through the auxiliary
/// variables: `Σ_{t0,q} w_q (β₂ t_{q,0} + 1.5 β₄ t_{q,0}² + 3 β₄ Σ_{k≥1} |t_{q,k}|²)`.
pub fn objective_from_t(t: &AuxiliaryT, weights: &[f64], params: &RectennaParams) -> f64 {
    let mut total = 0.0;
    for t0 in 0..t.realizations {
        for (q, &w) in weights.iter().enumerate().take(t.rectennas) {
            let t_q0 = t.value(t0, q, 0).re;
            let mut v = params.beta2 * t_q0 + 1.5 * params.beta4 * t_q0 * t_q0;
            for k in 1..t.diagonals {
                v += 3.0 * params.beta4 * t.value(t0, q, k).norm_sqr();
            }
            total += w * v;
        }
    }
    total
}

/// Surrogate epigraph value
/// `γ₁ = Σ_{t0,q} w_q ( −β₂ t_{q,0} + g̃(t_q, t_q_prev) )` where `g̃` is the
/// first-order expansion of `g(t) = tᴴ A₀ t` around the previous iterate.
/// With `t_prev == t` this is the exact value, i.e. minus the objective.
fn gamma_surrogate(
    t: &AuxiliaryT,
    t_prev: &AuxiliaryT,
    weights: &[f64],
    params: &RectennaParams,
) -> f64 {
    let mut total = 0.0;
    for t0 in 0..t.realizations {
        for (q, &w) in weights.iter().enumerate().take(t.rectennas) {
            let mut term = -params.beta2 * t.value(t0, q, 0).re;
            for k in 0..t.diagonals {
                let a0 = if k == 0 {
                    -1.5 * params.beta4
                } else {
                    -3.0 * params.beta4
                };
                let cur = t.value(t0, q, k);
                let prev = t_prev.value(t0, q, k);
                term += 2.0 * a0 * (prev.conj() * cur).re - a0 * prev.norm_sqr();
            }
            total += w * term;
        }
    }
    total
}

/// Relative Frobenius distance between the rank-1 lifts of two precoders,
/// computed without materializing them:
/// `‖s sᴴ − r rᴴ‖_F² = ‖s‖⁴ + ‖r‖⁴ − 2 |rᴴ s|²`.
fn rank1_relative_change(current: &DVector<Complex64>, previous: &DVector<Complex64>) -> f64 {
    let ns = current.norm_squared();
    let np = previous.norm_squared();
    let cross = previous.dotc(current).norm_sqr();
    let dist_sq = (ns * ns + np * np - 2.0 * cross).max(0.0);
    dist_sq.sqrt() / ns.max(f64::MIN_POSITIVE)
}

/// Runs the SCA loop from `s_init`, returning the optimized precoder on the
/// power sphere together with its iteration traces.
///
/// Each iteration takes the plain minimum-eigenvector step and, when the
/// recent iterates exhibit a steady linear drift, also evaluates an
/// Aitken-extrapolated candidate along that drift. The candidate is
/// accepted only if it beats the plain step on the exact objective while
/// keeping its surrogate value no larger than the previous exact value, so
/// the objective trace stays non-decreasing, the surrogate trace stays
/// non-increasing and the fixed points are unchanged — only the slow
/// linear tail is shortened.
///
/// Hitting the iteration cap is not an error: the final iterate is
/// returned with `state.converged == false`.
pub fn saa_optimize(
    sample: &[ChannelRealization],
    s_init: &Precoder,
    weights: &[f64],
    params: &RectennaParams,
    config: &SaaConfig,
) -> Result<(Precoder, SaaState)> {
    config.validate()?;
    if sample.is_empty() {
        return Err(Error::InvalidParameter("sample must be non-empty".into()));
    }
    let dims = sample[0].dims();
    let power = s_init.power_budget();

    let mut s_prev = s_init.weights().clone();
    let mut t_prev = compute_t(sample, &s_prev, &dims)?;
    let mut objective_trace = vec![objective_from_t(&t_prev, weights, params)];
    let mut gamma_trace = vec![gamma_surrogate(&t_prev, &t_prev, weights, params)];

    let mut converged = false;
    let mut iterations = 0;
    let mut drift_norm_prev: Option<f64> = None;
    let sqrt_p = power.sqrt();
    for _ in 0..config.max_iterations {
        iterations += 1;
        let a1 = build_a1(sample, &t_prev, weights, params, &dims)?;
        let (_, u) = min_eigpair(&a1)?;
        let s_plain = u * Complex64::new(sqrt_p, 0.0);
        let t_plain = compute_t(sample, &s_plain, &dims)?;
        let objective_plain = objective_from_t(&t_plain, weights, params);

        // Phase-align the plain step with the previous iterate so the drift
        // direction is meaningful despite the global phase freedom.
        let cross = s_prev.dotc(&s_plain);
        let aligned = if cross.norm() > 0.0 {
            &s_plain * (cross.conj() / cross.norm())
        } else {
            s_plain.clone()
        };
        let drift = &aligned - &s_prev;
        let drift_norm = drift.norm();

        let gamma_prev_exact = gamma_surrogate(&t_prev, &t_prev, weights, params);
        let mut chosen = (s_plain, t_plain, objective_plain);
        if let Some(prev_norm) = drift_norm_prev {
            let ratio = drift_norm / prev_norm.max(f64::MIN_POSITIVE);
            if ratio > 0.2 && ratio < 0.999 && drift_norm > 0.0 {
                let kappa = ratio / (1.0 - ratio);
                let raw = &aligned + drift * Complex64::new(kappa, 0.0);
                let norm = raw.norm();
                if norm > 0.0 {
                    let candidate = raw * Complex64::new(sqrt_p / norm, 0.0);
                    let t_candidate = compute_t(sample, &candidate, &dims)?;
                    let objective_candidate = objective_from_t(&t_candidate, weights, params);
                    let surrogate_candidate =
                        gamma_surrogate(&t_candidate, &t_prev, weights, params);
                    if objective_candidate > chosen.2 && surrogate_candidate <= gamma_prev_exact {
                        chosen = (candidate, t_candidate, objective_candidate);
                    }
                }
            }
        }
        drift_norm_prev = Some(drift_norm);

        let (s_new, t_new, objective_new) = chosen;
        gamma_trace.push(gamma_surrogate(&t_new, &t_prev, weights, params));
        objective_trace.push(objective_new);

        let change = rank1_relative_change(&s_new, &s_prev);
        s_prev = s_new;
        t_prev = t_new;
        if change <= config.epsilon {
            converged = true;
            break;
        }
    }
    s_prev = normalize_phase(s_prev) * Complex64::new(sqrt_p, 0.0);
    t_prev = compute_t(sample, &s_prev, &dims)?;

    let a1_final = build_a1(sample, &t_prev, weights, params, &dims)?;
    let rayleigh = (s_prev.adjoint() * &a1_final * &s_prev)[(0, 0)].re / s_prev.norm_squared();
    let kkt_residual =
        (&a1_final * &s_prev - &s_prev * Complex64::new(rayleigh, 0.0)).norm() / a1_final.norm();

    let state = SaaState {
        objective_trace,
        gamma_trace,
        iterations,
        converged,
        kkt_residual,
    };
    let s_star = Precoder::new(s_prev, power)?;
    Ok((s_star, state))
}

/// Channel-adapted equal-power starting point: every entry has magnitude
/// `sqrt(P/(MN))` and the phase of the matching entry of `conj(h_1)` (the
/// first rectenna's channel).
pub fn default_initial_point(channel: &ChannelRealization, power: f64) -> Result<Precoder> {
    let dims = channel.dims();
    let mn = dims.mn();
    let magnitude = (power / mn as f64).sqrt();
    let h1 = channel.rectenna_channel(0);
    let weights = DVector::from_fn(mn, |i, _| {
        let h = h1[i];
        if h.norm() > 1e-300 {
            h.conj() / h.norm() * magnitude
        } else {
            Complex64::new(magnitude, 0.0)
        }
    });
    Precoder::new(weights, power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    fn random_cvec(rng: &mut ChaCha12Rng, len: usize) -> DVector<Complex64> {
        DVector::from_fn(len, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    fn random_realization(
        rng: &mut ChaCha12Rng,
        dims: SystemDims,
        scale: f64,
    ) -> ChannelRealization {
        let gains = DMatrix::from_fn(dims.mn(), dims.rectennas, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * scale
        });
        ChannelRealization::new(dims, gains).unwrap()
    }

    #[test]
    fn compute_t_zero_precoder() {
        let dims = SystemDims::new(2, 3, 1).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let sample = vec![random_realization(&mut rng, dims, 1.0)];
        let t = compute_t(&sample, &DVector::zeros(6), &dims).unwrap();
        for k in 0..3 {
            assert_eq!(t.value(0, 0, k), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn compute_t_scalar_case() {
        let dims = SystemDims::new(1, 1, 1).unwrap();
        let p = 3.0_f64;
        let gains = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        let sample = vec![ChannelRealization::new(dims, gains).unwrap()];
        let s = DVector::from_element(1, Complex64::new(p.sqrt(), 0.0));
        let t = compute_t(&sample, &s, &dims).unwrap();
        assert_relative_eq!(t.value(0, 0, 0).re, p, max_relative = 1e-12);
    }

    #[test]
    fn compute_t_matches_matrix_products() {
        let dims = SystemDims::new(2, 3, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let sample = vec![random_realization(&mut rng, dims, 1.0)];
        let s = random_cvec(&mut rng, dims.mn());
        let t = compute_t(&sample, &s, &dims).unwrap();
        for q in 0..2 {
            let h = sample[0].rectenna_channel(q);
            let mq = crate::model::build_mq(&h);
            assert!(t.value(0, q, 0).re >= 0.0);
            for k in 0..dims.tones {
                let mk = crate::model::block_diag_extract(&mq, k as isize, &dims).unwrap();
                let lit = (s.adjoint() * mk.matrix() * &s)[(0, 0)];
                assert_relative_eq!(t.value(0, q, k).re, lit.re, max_relative = 1e-10, epsilon = 1e-12);
                assert_relative_eq!(t.value(0, q, k).im, lit.im, max_relative = 1e-10, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn a1_scalar_substitution() {
        let dims = SystemDims::new(1, 1, 1).unwrap();
        let params = RectennaParams::default();
        let p = 2.5;
        let gains = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        let sample = vec![ChannelRealization::new(dims, gains).unwrap()];
        let s = DVector::from_element(1, Complex64::new(f64::sqrt(p), 0.0));
        let t = compute_t(&sample, &s, &dims).unwrap();
        let a1 = build_a1(&sample, &t, &[1.0], &params, &dims).unwrap();
        let expect = -(params.beta2 + 3.0 * params.beta4 * p);
        assert_relative_eq!(a1[(0, 0)].re, expect, max_relative = 1e-12);
    }

    #[test]
    fn a1_beta4_zero_limit() {
        let dims = SystemDims::new(1, 2, 1).unwrap();
        let params = RectennaParams {
            beta4: 0.0,
            ..RectennaParams::default()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let sample = vec![
            random_realization(&mut rng, dims, 1.0),
            random_realization(&mut rng, dims, 1.0),
        ];
        let s = random_cvec(&mut rng, 2);
        let t = compute_t(&sample, &s, &dims).unwrap();
        let a1 = build_a1(&sample, &t, &[1.0], &params, &dims).unwrap();
        let mut expect: DMatrix<Complex64> = DMatrix::zeros(2, 2);
        for r in &sample {
            let h = r.rectenna_channel(0);
            let mq = crate::model::build_mq(&h);
            expect += crate::model::block_diag_extract(&mq, 0, &dims)
                .unwrap()
                .matrix()
                * Complex64::new(-params.beta2, 0.0);
        }
        assert!((a1 - expect).norm() < 1e-10);
    }

    #[test]
    fn a1_trace_is_negative() {
        let params = RectennaParams::default();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..20 {
            let dims = SystemDims::new(rng.gen_range(1..=2), rng.gen_range(1..=4), 1).unwrap();
            let sample: Vec<_> = (0..rng.gen_range(1..=3))
                .map(|_| random_realization(&mut rng, dims, 1e-3))
                .collect();
            let s = random_cvec(&mut rng, dims.mn());
            let t = compute_t(&sample, &s, &dims).unwrap();
            let a1 = build_a1(&sample, &t, &[1.0], &params, &dims).unwrap();
            let trace: Complex64 = (0..dims.mn()).map(|i| a1[(i, i)]).sum();
            assert!(trace.re < 0.0);
        }
    }

    #[test]
    fn min_eigpair_known_spectra() {
        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(-1.0, 0.0),
            Complex64::new(-2.0, 0.0),
        ]));
        let (lambda, u) = min_eigpair(&diag).unwrap();
        assert_relative_eq!(lambda, -2.0, max_relative = 1e-12);
        assert_relative_eq!(u[1].re, 1.0, max_relative = 1e-12);
        assert!(u[0].norm() < 1e-12);

        // [[0, 1], [1, 0]] has spectrum {+1, -1}; the -1 eigenvector is
        // (1, -1)/sqrt(2) after making the first entry real positive.
        let flip = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        let (lambda, u) = min_eigpair(&flip).unwrap();
        assert_relative_eq!(lambda, -1.0, max_relative = 1e-12);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(u[0].re, inv_sqrt2, max_relative = 1e-10);
        assert_relative_eq!(u[1].re, -inv_sqrt2, max_relative = 1e-10);
    }

    #[test]
    fn min_eigpair_recovers_planted_pair() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let n = 6;
        let raw = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let q = raw.qr().q();
        let lambdas = [-3.0, -1.0, 0.5, 1.0, 2.0, 4.0];
        let diag = DMatrix::from_diagonal(&DVector::from_iterator(
            n,
            lambdas.iter().map(|l| Complex64::new(*l, 0.0)),
        ));
        let a = &q * diag * q.adjoint();
        let (lambda, u) = min_eigpair(&a).unwrap();
        assert_relative_eq!(lambda, -3.0, max_relative = 1e-9);
        let planted = DVector::from_column_slice(q.column(0).as_slice());
        let overlap = planted.dotc(&u).norm();
        assert_relative_eq!(overlap, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn min_eigpair_rejects_non_hermitian() {
        let bad = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        assert!(matches!(
            min_eigpair(&bad),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn min_eigpair_deterministic_under_degeneracy() {
        // -I has a fully degenerate spectrum; the tie-break must still give
        // one canonical vector.
        let a = DMatrix::from_diagonal(&DVector::from_element(3, Complex64::new(-1.0, 0.0)));
        let (l1, u1) = min_eigpair(&a).unwrap();
        let (l2, u2) = min_eigpair(&a).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(u1, u2);
    }

    fn single_tone_sample(
        rng: &mut ChaCha12Rng,
        antennas: usize,
    ) -> (SystemDims, Vec<ChannelRealization>) {
        let dims = SystemDims::new(antennas, 1, 1).unwrap();
        let sample = vec![random_realization(rng, dims, 1.0)];
        (dims, sample)
    }

    #[test]
    fn saa_single_tone_single_antenna_closed_form() {
        let params = RectennaParams::default();
        let config = SaaConfig::default();
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let (dims, sample) = single_tone_sample(&mut rng, 1);
        let p: f64 = 2.0;
        let s0 = default_initial_point(&sample[0], p).unwrap();
        let (s_star, state) = saa_optimize(&sample, &s0, &[1.0], &params, &config).unwrap();
        assert!(state.converged);
        let h = sample[0].rectenna_channel(0);
        let hn = h.norm();
        let expect = params.beta2 * p * hn * hn + 1.5 * params.beta4 * p * p * hn.powi(4);
        assert_relative_eq!(
            *state.objective_trace.last().unwrap(),
            expect,
            max_relative = 1e-9
        );
        assert_relative_eq!(s_star.norm_sq(), p, max_relative = 1e-12);
        let _ = dims;
    }

    #[test]
    fn saa_single_tone_recovers_mrt_direction() {
        let params = RectennaParams::default();
        let config = SaaConfig::default();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..5 {
            let (_, sample) = single_tone_sample(&mut rng, 2);
            let p = 1.7;
            let s0 = default_initial_point(&sample[0], p).unwrap();
            let (s_star, _) = saa_optimize(&sample, &s0, &[1.0], &params, &config).unwrap();
            let h = sample[0].rectenna_channel(0);
            let mrt = h.map(|z| z.conj() / h.norm());
            let overlap = mrt.dotc(s_star.weights()).norm() / p.sqrt();
            assert!(overlap > 0.999, "MRT overlap {overlap}");
        }
    }

    #[test]
    fn saa_traces_are_monotone() {
        let params = RectennaParams::default();
        let config = SaaConfig::default();
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..10 {
            let dims =
                SystemDims::new(rng.gen_range(1..=2), rng.gen_range(1..=4), rng.gen_range(1..=2))
                    .unwrap();
            let t0_count = rng.gen_range(1..=5);
            let sample: Vec<_> = (0..t0_count)
                .map(|_| random_realization(&mut rng, dims, 1e-3))
                .collect();
            let weights = vec![1.0; dims.rectennas];
            let s0 = default_initial_point(&sample[0], 3.98).unwrap();
            let (s_star, state) =
                saa_optimize(&sample, &s0, &weights, &params, &config).unwrap();
            assert!(state.objective_monotone(), "objective decreased");
            assert!(state.gamma_monotone(), "gamma increased");
            assert!(state.converged);
            assert_relative_eq!(s_star.norm_sq(), 3.98, max_relative = 1e-12);
            assert!(
                *state.objective_trace.last().unwrap()
                    >= state.objective_trace[0] * (1.0 - 1e-9)
            );
        }
    }

    #[test]
    fn saa_kkt_residual_small_at_convergence() {
        let params = RectennaParams::default();
        let config = SaaConfig::default();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let dims = SystemDims::new(2, 4, 1).unwrap();
        let sample: Vec<_> = (0..8)
            .map(|_| random_realization(&mut rng, dims, 1e-3))
            .collect();
        let s0 = default_initial_point(&sample[0], 3.98).unwrap();
        let (_, state) = saa_optimize(&sample, &s0, &[1.0], &params, &config).unwrap();
        assert!(state.converged);
        assert!(
            state.kkt_residual <= 1e-6,
            "KKT residual {} too large",
            state.kkt_residual
        );
    }

    #[test]
    fn saa_rejects_bad_inputs() {
        let params = RectennaParams::default();
        let config = SaaConfig::default();
        let s0 = Precoder::new(DVector::zeros(2), 1.0).unwrap();
        assert!(saa_optimize(&[], &s0, &[1.0], &params, &config).is_err());
    }

    #[test]
    fn eigensolve_cost_independent_of_sample_size() {
        // A1 has fixed MN dimension regardless of T0; the per-iteration
        // eigensolve therefore cannot scale with the sample.
        let params = RectennaParams::default();
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let dims = SystemDims::new(2, 4, 1).unwrap();
        let build = |count: usize, rng: &mut ChaCha12Rng| -> DMatrix<Complex64> {
            let sample: Vec<_> = (0..count)
                .map(|_| random_realization(rng, dims, 1e-3))
                .collect();
            let s = random_cvec(rng, dims.mn());
            let t = compute_t(&sample, &s, &dims).unwrap();
            build_a1(&sample, &t, &[1.0], &params, &dims).unwrap()
        };
        let small = build(2, &mut rng);
        let large = build(40, &mut rng);
        assert_eq!(small.nrows(), large.nrows());

        let time = |a: &DMatrix<Complex64>| {
            let start = std::time::Instant::now();
            for _ in 0..50 {
                let _ = min_eigpair(a).unwrap();
            }
            start.elapsed().as_secs_f64()
        };
        // Warm up, then compare with a generous factor: identical dimension
        // must give comparable cost.
        let _ = time(&small);
        let t_small = time(&small);
        let t_large = time(&large);
        assert!(
            t_large < 20.0 * t_small.max(1e-6),
            "eigensolve scaled with T0: {t_small} vs {t_large}"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn objective_from_t_matches_weighted_sum(seed in 0u64..500) {
            let params = RectennaParams::default();
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let dims = SystemDims::new(2, 3, 2).unwrap();
            let sample: Vec<_> = (0..3).map(|_| random_realization(&mut rng, dims, 1.0)).collect();
            let s = random_cvec(&mut rng, dims.mn());
            let weights = [0.5, 1.5];
            let t = compute_t(&sample, &s, &dims).unwrap();
            let via_t = objective_from_t(&t, &weights, &params);
            let direct: f64 = sample
                .iter()
                .map(|r| crate::model::weighted_sum_vout(r, &s, &weights, &params).unwrap())
                .sum();
            prop_assert!((via_t - direct).abs() <= 1e-9 * direct.abs().max(1e-300));
        }
    }
}
