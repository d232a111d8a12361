//! Signal and rectenna mathematics.
//!
//! The transmitter sends `N` uniformly spaced sinewaves from `M` antennas;
//! the precoder entry `s[(n-1)M + m]` holds the complex weight of antenna
//! `m` at tone `n`. Rectenna `q` sees the channel vector `h_q` (same
//! layout) and outputs the DC voltage
//!
//! ```text
//! v_out = beta2 * sᴴ M_{q,0} s
//!       + 1.5 beta4 * (sᴴ M_{q,0} s)²
//!       + 3 beta4 * Σ_{k=1}^{N-1} |sᴴ M_{q,k} s|²
//! ```
//!
//! where `M_q = conj(h_q) h_qᵀ` and `M_{q,k}` retains only the k-th block
//! diagonal of `M_q`. [`vout_compact`] evaluates this form through the
//! per-tone scalars `a_n = h_{q,n}ᵀ s_n` (so `sᴴ M_{q,k} s =
//! Σ_n conj(a_n) a_{n+k}` and no MN×MN matrix is ever materialized), while
//! [`vout_direct`] enumerates the quadruple sum of the expanded model and
//! serves as the independent oracle.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed on the precoder power constraint.
pub const POWER_SLACK_REL: f64 = 1e-9;

/// Bound on the imaginary residue of the voltage accumulator, relative to
/// its real part, asserted before the imaginary part is dropped.
pub const IMAG_RESIDUE_REL: f64 = 1e-12;

/// Antenna, tone and rectenna counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDims {
    /// Transmit antennas (M).
    pub antennas: usize,
    /// Sinewaves / tones (N).
    pub tones: usize,
    /// Rectennas at the receiver (Q).
    pub rectennas: usize,
}

impl SystemDims {
    pub fn new(antennas: usize, tones: usize, rectennas: usize) -> Result<Self> {
        if antennas == 0 || tones == 0 || rectennas == 0 {
            return Err(Error::InvalidParameter(format!(
                "dims must all be >= 1, got M={antennas}, N={tones}, Q={rectennas}"
            )));
        }
        Ok(Self {
            antennas,
            tones,
            rectennas,
        })
    }

    /// Length of a precoder / per-rectenna channel vector.
    pub fn mn(&self) -> usize {
        self.antennas * self.tones
    }
}

/// Uniformly spaced tone grid in angular frequency.
///
/// The DC voltage model does not depend on the grid (the low-pass filter
/// already selected the DC terms); the grid only drives channel synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    /// First tone (rad/s).
    pub omega1: f64,
    /// Tone spacing (rad/s).
    pub delta_omega: f64,
    /// Number of tones.
    pub tones: usize,
}

impl FrequencyGrid {
    pub fn new(omega1: f64, delta_omega: f64, tones: usize) -> Result<Self> {
        if tones == 0 {
            return Err(Error::InvalidParameter("tone count must be >= 1".into()));
        }
        if !(delta_omega > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta_omega must be > 0, got {delta_omega}"
            )));
        }
        if !(omega1 > (tones as f64 - 1.0) * delta_omega / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "omega1 = {omega1} must exceed (N-1)*delta_omega/2 = {}",
                (tones as f64 - 1.0) * delta_omega / 2.0
            )));
        }
        Ok(Self {
            omega1,
            delta_omega,
            tones,
        })
    }

    /// Grid spanning `bandwidth_hz` centred on `center_hz`.
    pub fn from_band(center_hz: f64, bandwidth_hz: f64, tones: usize) -> Result<Self> {
        if !(center_hz > 0.0) || !(bandwidth_hz > 0.0) {
            return Err(Error::InvalidParameter(
                "center and bandwidth must be positive".into(),
            ));
        }
        let delta_hz = if tones > 1 {
            bandwidth_hz / (tones as f64 - 1.0)
        } else {
            bandwidth_hz
        };
        let first_hz = if tones > 1 {
            center_hz - bandwidth_hz / 2.0
        } else {
            center_hz
        };
        Self::new(
            2.0 * std::f64::consts::PI * first_hz,
            2.0 * std::f64::consts::PI * delta_hz,
            tones,
        )
    }

    /// Angular frequency of tone `n` (0-based).
    pub fn angular_frequency(&self, n: usize) -> f64 {
        self.omega1 + n as f64 * self.delta_omega
    }
}

/// Diode constants of the rectenna together with the derived polynomial
/// coefficients of the truncated nonlinear voltage model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectennaParams {
    /// Antenna impedance (ohm).
    pub r_ant: f64,
    /// Diode ideality factor.
    pub n_if: f64,
    /// Thermal voltage (volt).
    pub v_t: f64,
    /// Second-order coefficient, `r_ant / (2 n_if v_t)`.
    pub beta2: f64,
    /// Fourth-order coefficient, `r_ant² / (24 n_if³ v_t³)`.
    pub beta4: f64,
}

impl RectennaParams {
    pub fn new(r_ant: f64, n_if: f64, v_t: f64) -> Result<Self> {
        let (beta2, beta4) = derive_beta(r_ant, n_if, v_t)?;
        Ok(Self {
            r_ant,
            n_if,
            v_t,
            beta2,
            beta4,
        })
    }
}

impl Default for RectennaParams {
    /// 50 Ω antenna, unit ideality factor, room-temperature thermal voltage.
    fn default() -> Self {
        Self::new(50.0, 1.0, 0.02585).expect("default diode constants are valid")
    }
}

/// Derives the second- and fourth-order voltage coefficients from the diode
/// constants.
pub fn derive_beta(r_ant: f64, n_if: f64, v_t: f64) -> Result<(f64, f64)> {
    if !(r_ant > 0.0) || !(n_if > 0.0) || !(v_t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "diode constants must be positive, got r_ant={r_ant}, n_if={n_if}, v_t={v_t}"
        )));
    }
    let beta2 = r_ant / (2.0 * n_if * v_t);
    let beta4 = r_ant * r_ant / (24.0 * n_if.powi(3) * v_t.powi(3));
    Ok((beta2, beta4))
}

/// One realization of the channel between the transmitter and every
/// rectenna: an MN × Q complex matrix whose column `q` stacks the per-tone
/// spatial gain vectors `h_{q,n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    dims: SystemDims,
    gains: DMatrix<Complex64>,
}

impl ChannelRealization {
    pub fn new(dims: SystemDims, gains: DMatrix<Complex64>) -> Result<Self> {
        if gains.nrows() != dims.mn() || gains.ncols() != dims.rectennas {
            return Err(Error::ShapeMismatch(format!(
                "channel matrix is {}x{}, expected {}x{}",
                gains.nrows(),
                gains.ncols(),
                dims.mn(),
                dims.rectennas
            )));
        }
        if gains.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(Error::InvalidParameter(
                "channel gains must all be finite".into(),
            ));
        }
        Ok(Self { dims, gains })
    }

    pub fn dims(&self) -> SystemDims {
        self.dims
    }

    /// Channel vector `h_q` of rectenna `q` (0-based).
    pub fn rectenna_channel(&self, q: usize) -> DVector<Complex64> {
        DVector::from_column_slice(self.gains.column(q).as_slice())
    }

    /// Gain between antenna `m` and rectenna `q` at tone `n` (all 0-based).
    pub fn gain(&self, q: usize, tone: usize, antenna: usize) -> Complex64 {
        self.gains[(tone * self.dims.antennas + antenna, q)]
    }

    pub fn gains(&self) -> &DMatrix<Complex64> {
        &self.gains
    }

    /// Scales every gain by a real factor (used in scale-invariance checks).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dims: self.dims,
            gains: self.gains.map(|g| g * factor),
        }
    }
}

/// A waveform precoder: the stacked per-antenna per-tone complex weights,
/// constrained to the transmit power budget `‖s‖² ≤ P`.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    weights: DVector<Complex64>,
    power_budget: f64,
}

impl Precoder {
    pub fn new(weights: DVector<Complex64>, power_budget: f64) -> Result<Self> {
        if !(power_budget > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "power budget must be positive, got {power_budget}"
            )));
        }
        let norm_sq = weights.iter().map(|w| w.norm_sqr()).sum::<f64>();
        if norm_sq > power_budget * (1.0 + POWER_SLACK_REL) {
            return Err(Error::InvalidParameter(format!(
                "precoder power {norm_sq} exceeds budget {power_budget}"
            )));
        }
        Ok(Self {
            weights,
            power_budget,
        })
    }

    pub fn weights(&self) -> &DVector<Complex64> {
        &self.weights
    }

    pub fn power_budget(&self) -> f64 {
        self.power_budget
    }

    pub fn norm_sq(&self) -> f64 {
        self.weights.iter().map(|w| w.norm_sqr()).sum()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// An MN × MN coupling matrix: either the full rank-1 outer product
/// `M_q = conj(h_q) h_qᵀ` or one of its block-diagonal extractions.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    matrix: DMatrix<Complex64>,
}

impl CouplingMatrix {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }
}

/// Builds `M_q = conj(h_q) h_qᵀ` from a channel vector.
pub fn build_mq(h_q: &DVector<Complex64>) -> CouplingMatrix {
    let conj = h_q.map(|z| z.conj());
    CouplingMatrix {
        matrix: &conj * h_q.transpose(),
    }
}

/// Retains the M×M blocks on the k-th block diagonal of `mq` (blocks at
/// block position `(n, n+k)`), zeroing everything else. `k = 0` keeps the
/// main block diagonal; negative `k` keeps blocks below it.
pub fn block_diag_extract(
    mq: &CouplingMatrix,
    k: isize,
    dims: &SystemDims,
) -> Result<CouplingMatrix> {
    let (m, n) = (dims.antennas, dims.tones);
    let mn = dims.mn();
    if mq.matrix.nrows() != mn || mq.matrix.ncols() != mn {
        return Err(Error::ShapeMismatch(format!(
            "coupling matrix is {}x{}, dims give {}",
            mq.matrix.nrows(),
            mq.matrix.ncols(),
            mn
        )));
    }
    if k.unsigned_abs() >= n {
        return Err(Error::InvalidParameter(format!(
            "block diagonal index {k} out of range for N={n}"
        )));
    }
    let mut out = DMatrix::zeros(mn, mn);
    for block_row in 0..n {
        let block_col = block_row as isize + k;
        if block_col < 0 || block_col >= n as isize {
            continue;
        }
        let block_col = block_col as usize;
        for i in 0..m {
            for j in 0..m {
                let (r, c) = (block_row * m + i, block_col * m + j);
                out[(r, c)] = mq.matrix[(r, c)];
            }
        }
    }
    Ok(CouplingMatrix { matrix: out })
}

/// Per-tone channel/precoder products `a_n = h_{q,n}ᵀ s_n`.
///
/// These scalars carry everything the voltage model needs:
/// `sᴴ M_{q,k} s = Σ_n conj(a_n) a_{n+k}`.
pub fn tone_products(
    h_q: &DVector<Complex64>,
    s: &DVector<Complex64>,
    dims: &SystemDims,
) -> Result<Vec<Complex64>> {
    let mn = dims.mn();
    if h_q.len() != mn || s.len() != mn {
        return Err(Error::ShapeMismatch(format!(
            "expected vectors of length {mn}, got h: {}, s: {}",
            h_q.len(),
            s.len()
        )));
    }
    let m = dims.antennas;
    Ok((0..dims.tones)
        .map(|n| {
            (0..m)
                .map(|i| h_q[n * m + i] * s[n * m + i])
                .sum::<Complex64>()
        })
        .collect())
}

/// Quadratic forms `z_k = sᴴ M_{q,k} s` for `k = 0..N-1`, computed from the
/// per-tone products.
pub fn quadratic_forms(tone_products: &[Complex64]) -> Vec<Complex64> {
    let n = tone_products.len();
    (0..n)
        .map(|k| {
            (0..n - k)
                .map(|i| tone_products[i].conj() * tone_products[i + k])
                .sum()
        })
        .collect()
}

/// The two voltage contributions, split so scale laws can be checked
/// independently: `second_order = beta2 z_0` and
/// `fourth_order = 1.5 beta4 z_0² + 3 beta4 Σ_{k>=1} |z_k|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoutTerms {
    pub second_order: f64,
    pub fourth_order: f64,
}

impl VoutTerms {
    pub fn total(&self) -> f64 {
        self.second_order + self.fourth_order
    }
}

/// Evaluates the compact voltage model, returning the second- and
/// fourth-order terms separately.
pub fn vout_terms(
    h_q: &DVector<Complex64>,
    s: &DVector<Complex64>,
    dims: &SystemDims,
    params: &RectennaParams,
) -> Result<VoutTerms> {
    let a = tone_products(h_q, s, dims)?;
    let z = quadratic_forms(&a);
    let mut acc2 = Complex64::new(0.0, 0.0);
    let mut acc4 = Complex64::new(0.0, 0.0);
    acc2 += z[0] * params.beta2;
    acc4 += z[0] * z[0].conj() * (1.5 * params.beta4);
    for zk in z.iter().skip(1) {
        acc4 += zk * zk.conj() * (3.0 * params.beta4);
    }
    for (name, acc) in [("second", acc2), ("fourth", acc4)] {
        assert!(
            acc.im.abs() <= IMAG_RESIDUE_REL * acc.re.abs().max(f64::MIN_POSITIVE),
            "{name}-order voltage accumulator has imaginary residue {} vs real {}",
            acc.im,
            acc.re
        );
    }
    Ok(VoutTerms {
        second_order: acc2.re,
        fourth_order: acc4.re,
    })
}

/// DC output voltage of one rectenna under the compact nonlinear model.
pub fn vout_compact(
    h_q: &DVector<Complex64>,
    s: &DVector<Complex64>,
    dims: &SystemDims,
    params: &RectennaParams,
) -> Result<f64> {
    Ok(vout_terms(h_q, s, dims, params)?.total())
}

/// DC output voltage by brute-force enumeration of the expanded model: the
/// beta2 term sums per-tone quadratic forms and the beta4 term enumerates
/// every tone quadruple `(n1, n2, n3, n4)` with `n1 + n2 = n3 + n4`.
///
/// Independent oracle for [`vout_compact`]; never used on hot paths.
pub fn vout_direct(
    h_q: &DVector<Complex64>,
    s: &DVector<Complex64>,
    dims: &SystemDims,
    params: &RectennaParams,
) -> Result<f64> {
    let mn = dims.mn();
    if h_q.len() != mn || s.len() != mn {
        return Err(Error::ShapeMismatch(format!(
            "expected vectors of length {mn}, got h: {}, s: {}",
            h_q.len(),
            s.len()
        )));
    }
    let (m, n) = (dims.antennas, dims.tones);
    // s_aᴴ (conj h_a) = Σ_m conj(s_{a,m} h_{a,m})  and  h_bᵀ s_b = Σ_m h_{b,m} s_{b,m}
    let left = |a: usize| -> Complex64 {
        (0..m)
            .map(|i| (s[a * m + i] * h_q[a * m + i]).conj())
            .sum()
    };
    let right = |b: usize| -> Complex64 { (0..m).map(|i| h_q[b * m + i] * s[b * m + i]).sum() };

    let mut acc = Complex64::new(0.0, 0.0);
    for tone in 0..n {
        acc += left(tone) * right(tone) * params.beta2;
    }
    for n1 in 0..n {
        for n2 in 0..n {
            for n3 in 0..n {
                for n4 in 0..n {
                    if n1 + n2 != n3 + n4 {
                        continue;
                    }
                    acc += left(n3) * right(n1) * left(n4) * right(n2) * (1.5 * params.beta4);
                }
            }
        }
    }
    assert!(
        acc.im.abs() <= IMAG_RESIDUE_REL * acc.re.abs().max(f64::MIN_POSITIVE),
        "direct voltage accumulator has imaginary residue {} vs real {}",
        acc.im,
        acc.re
    );
    Ok(acc.re)
}

/// Weighted sum of the per-rectenna output voltages,
/// `Σ_q w_q v_out(h_q, s)`.
pub fn weighted_sum_vout(
    channel: &ChannelRealization,
    s: &DVector<Complex64>,
    weights: &[f64],
    params: &RectennaParams,
) -> Result<f64> {
    let dims = channel.dims();
    if weights.len() != dims.rectennas {
        return Err(Error::ShapeMismatch(format!(
            "{} weights for {} rectennas",
            weights.len(),
            dims.rectennas
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "rectenna weights must be nonnegative, got {w}"
        )));
    }
    let mut total = 0.0;
    for (q, w) in weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let h_q = channel.rectenna_channel(q);
        total += w * vout_compact(&h_q, s, &dims, params)?;
    }
    Ok(total)
}
