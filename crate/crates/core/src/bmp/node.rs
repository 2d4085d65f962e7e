use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use super::metric::{density_constants, pi_delta, pi_initial};
use super::SearchConfig;
use crate::error::{Error, Result};
use crate::model::{PilotSystem, SupportIndicator, C64};

/// One tap activation in a candidate's history.
///
/// With activations `t_1..t_p` applied in order, the inverse covariance is
/// `C^{-1} = I / sigma_sq - sigma1_sq * sum_i beta_i b_i b_i^H`, where `b_i` is
/// the column `x_{t_i}` filtered by the inverse covariance in force just
/// before activation `i`. Activations are shared between a parent and all of
/// its descendants.
#[derive(Debug)]
pub struct Activation {
    pub tap: usize,
    pub beta: f64,
    /// `b_i = C^{-1} x_{t_i}` before this activation.
    pub filtered: DVector<C64>,
    /// `b_i^H y`.
    pub(crate) proj: C64,
    /// `b_i^H x_l` for every tap `l`; filled the first time a descendant is expanded.
    corr: OnceLock<SplitRow>,
}

/// Complex row stored as separate real and imaginary parts.
#[derive(Debug)]
struct SplitRow {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Activation {
    /// Cached `b_i^H x_tap`, if the correlation row has been computed.
    pub fn correlation(&self, tap: usize) -> Option<C64> {
        self.corr.get().map(|r| C64::new(r.re[tap], r.im[tap]))
    }

    fn correlations_counted(&self, scratch: &Precomputed, mults: &mut u64) -> &SplitRow {
        scratch.fill_correlations(&[self], mults);
        self.corr.get().expect("correlation row was just filled")
    }
}

/// A support hypothesis with its metric and cached inverse-covariance expansion.
#[derive(Debug, Clone)]
pub struct CandidateNode {
    pub support: SupportIndicator,
    /// `PI(support, y)`.
    pub pi: f64,
    activations: Vec<Arc<Activation>>,
    /// Gain accumulators of the parent, i.e. covering every activation but the last.
    inherited: Option<Arc<Accumulators>>,
}

/// `x_l^H C^{-1} x_l` and `x_l^H C^{-1} y` for every tap under one candidate's covariance.
#[derive(Debug, Clone)]
pub(crate) struct Accumulators {
    quad: Vec<f64>,
    proj_re: Vec<f64>,
    proj_im: Vec<f64>,
}

impl Accumulators {
    fn empty_support(scratch: &Precomputed, config: &SearchConfig) -> Self {
        let inv_noise = config.sigma_sq.recip();
        Self {
            quad: scratch.col_norm_sq.iter().map(|v| v * inv_noise).collect(),
            proj_re: scratch.col_dot_y.iter().map(|v| v.re * inv_noise).collect(),
            proj_im: scratch.col_dot_y.iter().map(|v| v.im * inv_noise).collect(),
        }
    }

    /// Removes the rank-one term of `act` from every tap.
    fn deflate(&mut self, act: &Activation, row: &SplitRow, config: &SearchConfig) {
        let w = config.sigma1_sq * act.beta;
        let a = act.proj * w;
        with_fma!(deflate_body(self, row, w, a))
    }
}

/// `a * b + c`, rounded once or twice depending on the implementation.
trait MulAdd {
    fn madd(a: f64, b: f64, c: f64) -> f64;
}

struct Plain;

impl MulAdd for Plain {
    #[inline(always)]
    fn madd(a: f64, b: f64, c: f64) -> f64 {
        a * b + c
    }
}

/// Only used inside code compiled with the `fma` target feature, where
/// `mul_add` is a single instruction rather than a library call.
#[cfg(target_arch = "x86_64")]
struct Fused;

#[cfg(target_arch = "x86_64")]
impl MulAdd for Fused {
    #[inline(always)]
    fn madd(a: f64, b: f64, c: f64) -> f64 {
        a.mul_add(b, c)
    }
}

/// Runs a kernel generic over [`MulAdd`] through a copy compiled for AVX2
/// and FMA when the CPU has them.
macro_rules! with_fma {
    ($body:ident($($arg:expr),*)) => {{
        #[cfg(target_arch = "x86_64")]
        {
            #[target_feature(enable = "avx2,fma")]
            unsafe fn fast(f: impl FnOnce()) {
                f()
            }
            if std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma") {
                // SAFETY: the required CPU features were just detected.
                unsafe { fast(|| $body::<Fused>($($arg),*)) }
            } else {
                $body::<Plain>($($arg),*)
            }
        }
        #[cfg(not(target_arch = "x86_64"))]
        {
            $body::<Plain>($($arg),*)
        }
    }};
}
use with_fma;

/// `out += k * x` on interleaved complex data.
#[inline(always)]
fn axpy_body<F: MulAdd>(k: C64, x: &[C64], out: &mut [C64]) {
    let n = out.len();
    let x = &x[..n];
    for m in 0..n {
        out[m].re = F::madd(k.re, x[m].re, F::madd(-k.im, x[m].im, out[m].re));
        out[m].im = F::madd(k.re, x[m].im, F::madd(k.im, x[m].re, out[m].im));
    }
}

#[inline(always)]
fn deflate_body<F: MulAdd>(acc: &mut Accumulators, row: &SplitRow, w: f64, a: C64) {
    let n = acc.quad.len();
    let (q, pr, pi) = (&mut acc.quad[..n], &mut acc.proj_re[..n], &mut acc.proj_im[..n]);
    let (cr, ci) = (&row.re[..n], &row.im[..n]);
    for l in 0..n {
        q[l] = F::madd(-w, F::madd(cr[l], cr[l], ci[l] * ci[l]), q[l]);
        pr[l] = F::madd(-cr[l], a.re, F::madd(-ci[l], a.im, pr[l]));
        pi[l] = F::madd(-cr[l], a.im, F::madd(ci[l], a.re, pi[l]));
    }
}

impl CandidateNode {
    /// The empty support with metric `pi`.
    pub fn root(taps: usize, pi: f64) -> Self {
        Self {
            support: SupportIndicator::empty(taps),
            pi,
            activations: Vec::new(),
            inherited: None,
        }
    }

    /// A hypothesis without cached expansion, e.g. the single support
    /// returned by a greedy baseline.
    pub fn bare(support: SupportIndicator, pi: f64) -> Self {
        Self {
            support,
            pi,
            activations: Vec::new(),
            inherited: None,
        }
    }

    /// Builds the node for `support` by activating its taps in increasing order from the root.
    pub fn from_support(
        support: &SupportIndicator,
        y: &DVector<C64>,
        system: &PilotSystem,
        config: &SearchConfig,
    ) -> Result<Self> {
        let mut node = Self::root(system.taps(), pi_initial(y, config, system.taps())?);
        for tap in support.active() {
            node = node.activate(tap, y, system, config)?;
        }
        Ok(node)
    }

    /// Child hypothesis with `tap` additionally active.
    pub fn activate(
        &self,
        tap: usize,
        y: &DVector<C64>,
        system: &PilotSystem,
        config: &SearchConfig,
    ) -> Result<Self> {
        let delta = pi_delta(self, tap, y, system, config)?;
        let proj = delta.filtered.dotc(y);
        Ok(self.push(tap, delta.beta, delta.filtered, proj, self.pi + delta.gain))
    }

    pub(crate) fn push(&self, tap: usize, beta: f64, filtered: DVector<C64>, proj: C64, pi: f64) -> Self {
        let mut activations = self.activations.clone();
        activations.push(Arc::new(Activation {
            tap,
            beta,
            filtered,
            proj,
            corr: OnceLock::new(),
        }));
        Self {
            support: self.support.with(tap),
            pi,
            activations,
            inherited: None,
        }
    }

    /// Activated taps in the order they were added.
    pub fn active_order(&self) -> Vec<usize> {
        self.activations.iter().map(|a| a.tap).collect()
    }

    pub fn activations(&self) -> &[Arc<Activation>] {
        &self.activations
    }

    pub fn betas(&self) -> Vec<f64> {
        self.activations.iter().map(|a| a.beta).collect()
    }

    /// Conditional mean `sigma1_sq x_l^H C^{-1} y` on the active taps, for
    /// nodes produced by the search (which carry their parent's accumulators).
    ///
    /// With `b` the last activation's filtered column,
    /// `x_l^H C^{-1} y = x_l^H C_parent^{-1} y - sigma1_sq beta (x_l^H b) (b^H y)`.
    pub fn search_mean(&self, system: &PilotSystem, config: &SearchConfig) -> Option<Vec<(usize, C64)>> {
        let (base, last) = (self.inherited.as_ref()?, self.activations.last()?);
        let s1 = config.sigma1_sq;
        let w = last.proj * (s1 * last.beta);
        let mut mean = Vec::with_capacity(self.activations.len());
        for act in &self.activations[..self.activations.len() - 1] {
            let l = act.tap;
            let xb = match last.correlation(l) {
                Some(c) => c.conj(),
                None => system.column(l).dotc(&last.filtered),
            };
            let before = C64::new(base.proj_re[l], base.proj_im[l]);
            mean.push((l, (before - xb * w) * s1));
        }
        mean.push((last.tap, w));
        Some(mean)
    }

    /// Whether the cached expansion describes the whole support.
    pub fn has_expansion(&self) -> bool {
        self.activations.len() == self.support.count()
    }

    /// `b_l = C^{-1} x_l = x_l / sigma_sq - sigma1_sq sum_i beta_i b_i (b_i^H x_l)`.
    pub fn filter_column(&self, tap: usize, system: &PilotSystem, config: &SearchConfig) -> DVector<C64> {
        let x = system.column(tap);
        let mut b: DVector<C64> = x.map(|v| v / config.sigma_sq);
        for act in &self.activations {
            let c = act.correlation(tap).unwrap_or_else(|| act.filtered.dotc(&x));
            let k = c * (-config.sigma1_sq * act.beta);
            with_fma!(axpy_body(k, act.filtered.as_slice(), b.as_mut_slice()));
        }
        b
    }

    /// `C^{-1} y` from the cached expansion.
    pub fn whiten(&self, y: &DVector<C64>, config: &SearchConfig) -> DVector<C64> {
        let mut v = y.map(|e| e / config.sigma_sq);
        for act in &self.activations {
            v.axpy(C64::new(-config.sigma1_sq * act.beta, 0.0) * act.proj, &act.filtered, C64::new(1.0, 0.0));
        }
        v
    }

    /// Dense `C^{-1}` assembled from the cached expansion.
    pub fn inverse_covariance(&self, rows: usize, config: &SearchConfig) -> Result<DMatrix<C64>> {
        if !self.has_expansion() {
            return Err(Error::InvalidParameter(
                "candidate carries no inverse-covariance expansion".into(),
            ));
        }
        let mut inv = DMatrix::identity(rows, rows) / C64::new(config.sigma_sq, 0.0);
        for act in &self.activations {
            let outer = &act.filtered * act.filtered.adjoint();
            inv -= outer * C64::new(config.sigma1_sq * act.beta, 0.0);
        }
        Ok(inv)
    }

    /// Reports the metric gain of activating every inactive tap to `visit`
    /// and returns the accumulators the gains came from (handed to the children).
    ///
    /// `visit` returns the smallest gain still of interest; taps whose gain
    /// provably falls below it are skipped without evaluating the logarithm.
    ///
    /// A node produced by [`Self::expand`] starts from its parent's
    /// accumulators and removes one rank-one term, so each tap costs `O(1)`;
    /// other nodes rebuild them in `O(p)` per tap. Taps whose `beta` is not
    /// positive are reported as `None`.
    pub(crate) fn expansion_gains(
        &self,
        scratch: &Precomputed,
        config: &SearchConfig,
        mults: &mut u64,
        mut visit: impl FnMut(usize, Scored) -> f64,
    ) -> Arc<Accumulators> {
        let (mut acc, pending) = match (&self.inherited, self.activations.last()) {
            (Some(base), Some(last)) => ((**base).clone(), std::slice::from_ref(last)),
            _ => (Accumulators::empty_support(scratch, config), &self.activations[..]),
        };
        let refs: Vec<&Activation> = pending.iter().map(|a| &**a).collect();
        scratch.fill_correlations(&refs, mults);
        for act in pending {
            let row = act.correlations_counted(scratch, mults);
            acc.deflate(act, row, config);
        }
        *mults += 2 * (pending.len() * scratch.taps) as u64;

        let (weight, _) = density_constants(config.field);
        let log_odds = config.activation_log_odds();
        let inactive = scratch.taps - self.activations.len();
        *mults += 2 * inactive as u64;
        let mut bounds = vec![0.0; scratch.taps];
        with_fma!(bound_body(&acc, config.sigma1_sq, weight, log_odds, &mut bounds));
        let mut wanted = f64::NEG_INFINITY;
        for (tap, &bound) in bounds.iter().enumerate() {
            // NaN bounds (invalid beta) fail this test and are visited below.
            if bound + 1e-9 * (1.0 + bound.abs()) < wanted || self.support.is_active(tap) {
                continue;
            }
            let beta = (1.0 + config.sigma1_sq * acc.quad[tap]).recip();
            if !(beta > 0.0 && beta.is_finite()) {
                wanted = visit(tap, Scored::Invalid);
                continue;
            }
            let (pr, pi) = (acc.proj_re[tap], acc.proj_im[tap]);
            let fit = config.sigma1_sq * beta * (pr * pr + pi * pi);
            let gain = weight * (beta.ln() + fit) + log_odds;
            wanted = visit(tap, Scored::Gain(gain, beta, C64::new(pr, pi)));
        }
        Arc::new(acc)
    }

    /// Materializes the child for `tap` from quantities produced by
    /// [`Self::expansion_gains`]; only `b_l` is computed here.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn expand(
        &self,
        tap: usize,
        gain: f64,
        beta: f64,
        proj: C64,
        accumulators: &Arc<Accumulators>,
        system: &PilotSystem,
        config: &SearchConfig,
        mults: &mut u64,
    ) -> Self {
        *mults += (system.rows() * (self.activations.len() + 1)) as u64;
        let b = self.filter_column(tap, system, config);
        let mut child = self.push(tap, beta, b, proj, self.pi + gain);
        child.inherited = Some(Arc::clone(accumulators));
        child
    }
}

/// Cheap `u >= ln(v)` for positive normal `v`: `ln 2` times the binary
/// exponent of `v` rounded up, with slack for rounding.
/// Upper bound on every tap's gain, `NaN` where `beta` is not positive and finite.
#[inline(always)]
fn bound_body<F: MulAdd>(acc: &Accumulators, s1: f64, weight: f64, log_odds: f64, out: &mut [f64]) {
    let n = out.len();
    let (q, pr, pi) = (&acc.quad[..n], &acc.proj_re[..n], &acc.proj_im[..n]);
    for l in 0..n {
        let beta = 1.0 / (1.0 + s1 * q[l]);
        let fit = s1 * beta * F::madd(pr[l], pr[l], pi[l] * pi[l]);
        // exponent as a float without an integer conversion
        let e = f64::from_bits(((beta.to_bits() >> 52) & 0x7ff) | 0x4330_0000_0000_0000) - 4503599627370496.0;
        let log = (e - 1022.0) * std::f64::consts::LN_2 + 1e-12;
        let ok = beta > 0.0 && beta < f64::INFINITY;
        out[l] = if ok { weight * (log + fit) + log_odds } else { f64::NAN };
    }
}

#[cfg(test)]
fn log_upper_bound(v: f64) -> f64 {
    let exponent = ((v.to_bits() >> 52) & 0x7ff) as i64 - 1022;
    exponent as f64 * std::f64::consts::LN_2 + 1e-12
}

/// Outcome of scoring one candidate tap.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Scored {
    /// `beta` is not positive, so the update is numerically invalid.
    Invalid,
    /// Gain, `beta` and `x_l^H C^{-1} y`.
    Gain(f64, f64, C64),
}

/// Per-observation quantities shared by every candidate.
pub(crate) struct Precomputed {
    rows: usize,
    taps: usize,
    /// `|x_l|^2`.
    pub col_norm_sq: Vec<f64>,
    /// `x_l^H y`.
    pub col_dot_y: Vec<C64>,
    /// Real and imaginary parts of `X`, row-major.
    x_re: Vec<f64>,
    x_im: Vec<f64>,
}

/// Pilot rows applied per pass over a correlation row.
const ROW_BLOCK: usize = 4;

impl Precomputed {
    pub fn new(y: &DVector<C64>, system: &PilotSystem, mults: &mut u64) -> Self {
        let (rows, taps) = (system.rows(), system.taps());
        *mults += 2 * (rows * taps) as u64;
        let x = system.matrix();
        let mut x_re = Vec::with_capacity(rows * taps);
        let mut x_im = Vec::with_capacity(rows * taps);
        for m in 0..rows {
            for l in 0..taps {
                x_re.push(x[(m, l)].re);
                x_im.push(x[(m, l)].im);
            }
        }
        Self {
            rows,
            taps,
            col_norm_sq: (0..taps).map(|l| system.column(l).norm_squared()).collect(),
            col_dot_y: (0..taps).map(|l| system.column(l).dotc(y)).collect(),
            x_re,
            x_im,
        }
    }

    /// Fills the correlation rows `b_i^H x_l` of every activation in `acts`
    /// that lacks one.
    ///
    /// `X` is streamed once for the whole batch: each block of pilot rows is
    /// applied to every pending row while it is still in cache.
    pub fn fill_correlations(&self, acts: &[&Activation], mults: &mut u64) {
        let pending: Vec<&Activation> = acts.iter().copied().filter(|a| a.corr.get().is_none()).collect();
        if pending.is_empty() {
            return;
        }
        *mults += (pending.len() * self.rows * self.taps) as u64;
        let filtered: Vec<&DVector<C64>> = pending.iter().map(|a| &a.filtered).collect();
        let mut out: Vec<SplitRow> = pending
            .iter()
            .map(|_| SplitRow {
                re: vec![0.0; self.taps],
                im: vec![0.0; self.taps],
            })
            .collect();
        correlate(self, &filtered, &mut out);
        for (act, row) in pending.iter().zip(out) {
            // A concurrent fill can only store the same row.
            let _ = act.corr.set(row);
        }
    }
}

fn correlate(x: &Precomputed, filtered: &[&DVector<C64>], out: &mut [SplitRow]) {
    with_fma!(correlate_body(x, filtered, out))
}

#[inline(always)]
fn correlate_body<F: MulAdd>(x: &Precomputed, filtered: &[&DVector<C64>], out: &mut [SplitRow]) {
    let n = x.taps;
    let mut start = 0;
    while start < x.rows {
        let block = ROW_BLOCK.min(x.rows - start);
        let xr = &x.x_re[start * n..(start + block) * n];
        let xi = &x.x_im[start * n..(start + block) * n];
        for (b, row) in filtered.iter().zip(out.iter_mut()) {
            let (re, im) = (&mut row.re[..n], &mut row.im[..n]);
            if block == ROW_BLOCK {
                let (r0, r1, r2, r3) = (&xr[..n], &xr[n..2 * n], &xr[2 * n..3 * n], &xr[3 * n..4 * n]);
                let (i0, i1, i2, i3) = (&xi[..n], &xi[n..2 * n], &xi[2 * n..3 * n], &xi[3 * n..4 * n]);
                let (b0, b1, b2, b3) = (b[start], b[start + 1], b[start + 2], b[start + 3]);
                for l in 0..n {
                    // two independent chains per output to shorten the dependency path
                    let ra = F::madd(b0.re, r0[l], F::madd(b0.im, i0[l], F::madd(b1.re, r1[l], b1.im * i1[l])));
                    let rb = F::madd(b2.re, r2[l], F::madd(b2.im, i2[l], F::madd(b3.re, r3[l], b3.im * i3[l])));
                    let ia = F::madd(b0.re, i0[l], F::madd(-b0.im, r0[l], F::madd(b1.re, i1[l], -b1.im * r1[l])));
                    let ib = F::madd(b2.re, i2[l], F::madd(-b2.im, r2[l], F::madd(b3.re, i3[l], -b3.im * r3[l])));
                    re[l] += ra + rb;
                    im[l] += ia + ib;
                }
            } else {
                for j in 0..block {
                    let (rj, ij, bj) = (&xr[j * n..(j + 1) * n], &xi[j * n..(j + 1) * n], b[start + j]);
                    for l in 0..n {
                        re[l] = F::madd(bj.re, rj[l], F::madd(bj.im, ij[l], re[l]));
                        im[l] = F::madd(bj.re, ij[l], F::madd(-bj.im, rj[l], im[l]));
                    }
                }
            }
        }
        start += block;
    }
}
