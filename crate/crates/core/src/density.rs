//! Empirical density models over scalar logit values.
//!
//! Two estimators are provided, both consumed through their CDFs:
//!
//! * [`KdeModel`] — a Gaussian kernel density estimate whose CDF is
//!   evaluated in closed form as a mean of standard normal CDFs, one per
//!   observation. No grid or numeric integration is involved.
//! * [`NhModel`] — a normalized equal-width histogram whose CDF is piecewise
//!   linear inside bins and clamps to 0 / 1 outside the observed range.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Beyond this many bandwidths from an observation, its kernel's CDF term
/// is taken as exact 0 or 1. `Phi(9)` differs from 1 by less than 2^-62,
/// which is below one ulp at double precision, so the cutoff changes no
/// result while keeping evaluation cost proportional to the window size.
const TAIL_Z: f64 = 9.0;

/// Gaussian kernel density estimate with a shared bandwidth.
///
/// Observations are held in ascending order; evaluation and the on-disk
/// form both rely on that canonical ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeModel<T> {
    observations: Vec<T>,
    bandwidth: T,
}

impl<T: Real> KdeModel<T> {
    /// Fit a KDE to `values` with the given `bandwidth`.
    ///
    /// Fails if `values` is empty, any value is non-finite, or the
    /// bandwidth is not strictly positive and finite.
    pub fn fit(values: &[T], bandwidth: T) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::data("cannot fit a density to zero observations"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::data(format!(
                "non-finite observation {bad} in density input"
            )));
        }
        if !bandwidth.is_finite() || bandwidth <= T::zero() {
            return Err(Error::parameter(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        let mut observations = values.to_vec();
        observations.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
        Ok(KdeModel {
            observations,
            bandwidth,
        })
    }

    /// Rebuild a model from stored parts, validating every invariant the
    /// constructor guarantees: ascending finite observations and a positive
    /// finite bandwidth.
    pub fn from_parts(observations: Vec<T>, bandwidth: T) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::data("density model holds no observations"));
        }
        if observations.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("density model holds a non-finite observation"));
        }
        if observations.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::data(
                "density model observations are not in ascending order",
            ));
        }
        if !bandwidth.is_finite() || bandwidth <= T::zero() {
            return Err(Error::parameter(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(KdeModel {
            observations,
            bandwidth,
        })
    }

    /// Observations in ascending order.
    pub fn observations(&self) -> &[T] {
        &self.observations
    }

    pub fn bandwidth(&self) -> T {
        self.bandwidth
    }

    /// CDF of the estimate at `d`:
    /// the mean over observations `x_i` of `Phi((d - x_i) / h)`.
    ///
    /// The result is non-decreasing in `d` and lies in `[0, 1]`; it is 0
    /// below the support and approaches 1 above it.
    ///
    /// # Panics
    ///
    /// If `d` is not finite.
    pub fn cdf(&self, d: T) -> T {
        assert!(d.is_finite(), "density query point must be finite");
        let h = self.bandwidth;
        let cut = T::cast(TAIL_Z) * h;
        // Observations at or below `d - cut` contribute an exact 1; those at
        // or above `d + cut` contribute an exact 0. Only the window between
        // them needs the error function.
        let saturated = self.observations.partition_point(|&x| x <= d - cut);
        let stop = self.observations.partition_point(|&x| x < d + cut);
        let mut acc = T::from_usize(saturated).expect("count fits scalar");
        for &x in &self.observations[saturated..stop] {
            acc += ((d - x) / h).std_normal_cdf();
        }
        let n = T::from_usize(self.observations.len()).expect("count fits scalar");
        (acc / n).min(T::one())
    }
}

/// Normalized equal-width histogram.
///
/// Bins span the observed `[min, max]` range. The CDF interpolates linearly
/// inside each bin and clamps to 0 below the first edge and 1 at or above
/// the last.
#[derive(Debug, Clone, PartialEq)]
pub struct NhModel<T> {
    /// Ascending bin edges, `nbins + 1` of them.
    edges: Vec<T>,
    /// Per-bin probability mass; sums to 1.
    masses: Vec<T>,
    /// Cumulative mass strictly before each edge (derived from `masses`).
    cumulative: Vec<T>,
}

impl<T: Real> NhModel<T> {
    /// Build a histogram of `values` with `nbins` equal-width bins over
    /// the observed range.
    ///
    /// When every observation is identical the range is empty; a single bin
    /// of width `max(1e-9, |v| * 1e-9)` centered on the value is used so the
    /// model stays well-formed.
    pub fn fit(values: &[T], nbins: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::data("cannot fit a histogram to zero observations"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::data(format!(
                "non-finite observation {bad} in histogram input"
            )));
        }
        if nbins == 0 {
            return Err(Error::parameter("histogram needs at least one bin"));
        }
        let lo = values.iter().copied().fold(T::infinity(), T::min);
        let hi = values.iter().copied().fold(T::neg_infinity(), T::max);
        if lo == hi {
            // Degenerate range: one tiny bin centered on the common value.
            let width = T::cast(1e-9).max(lo.abs() * T::cast(1e-9));
            let half = width / T::cast(2.0);
            return Self::from_parts(vec![lo - half, lo + half], vec![T::one()]);
        }

        let n_bins_t = T::from_usize(nbins).expect("bin count fits scalar");
        let mut edges = Vec::with_capacity(nbins + 1);
        for k in 0..=nbins {
            let frac = T::from_usize(k).expect("bin index fits scalar") / n_bins_t;
            edges.push(lo + (hi - lo) * frac);
        }
        // Guard against rounding drift at the ends.
        edges[0] = lo;
        edges[nbins] = hi;

        let mut counts = vec![0usize; nbins];
        for &v in values {
            let frac = (v - lo) / (hi - lo);
            let idx = (frac * n_bins_t).to_usize().unwrap_or(0).min(nbins - 1);
            counts[idx] += 1;
        }
        let n = T::from_usize(values.len()).expect("count fits scalar");
        let masses = counts
            .iter()
            .map(|&c| T::from_usize(c).expect("count fits scalar") / n)
            .collect();
        Self::from_parts(edges, masses)
    }

    /// Rebuild a histogram from stored parts, validating the invariants:
    /// strictly ascending finite edges, one more edge than masses,
    /// non-negative masses summing to 1.
    pub fn from_parts(edges: Vec<T>, masses: Vec<T>) -> Result<Self> {
        if masses.is_empty() || edges.len() != masses.len() + 1 {
            return Err(Error::data(format!(
                "histogram needs nbins + 1 edges, got {} edges for {} masses",
                edges.len(),
                masses.len()
            )));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::data("histogram edge is non-finite"));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::data("histogram edges are not strictly ascending"));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < T::zero()) {
            return Err(Error::data("histogram mass is negative or non-finite"));
        }
        let total: T = masses.iter().copied().sum();
        if (total - T::one()).abs() > T::mass_tolerance() {
            return Err(Error::data(format!(
                "histogram masses sum to {total}, expected 1"
            )));
        }
        let mut cumulative = Vec::with_capacity(edges.len());
        let mut acc = T::zero();
        cumulative.push(acc);
        for &m in &masses {
            acc += m;
            cumulative.push(acc);
        }
        Ok(NhModel {
            edges,
            masses,
            cumulative,
        })
    }

    pub fn nbins(&self) -> usize {
        self.masses.len()
    }

    /// Ascending bin edges (`nbins + 1` values).
    pub fn edges(&self) -> &[T] {
        &self.edges
    }

    /// Per-bin probability mass, in bin order.
    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    /// CDF of the histogram at `d`: 0 below the first edge, 1 at or above
    /// the last, and linear interpolation through the bin containing `d`.
    ///
    /// # Panics
    ///
    /// If `d` is not finite.
    pub fn cdf(&self, d: T) -> T {
        assert!(d.is_finite(), "histogram query point must be finite");
        let first = self.edges[0];
        let last = self.edges[self.edges.len() - 1];
        if d <= first {
            return T::zero();
        }
        if d >= last {
            return T::one();
        }
        // Bin j satisfies edges[j] <= d < edges[j + 1].
        let j = self.edges.partition_point(|&e| e <= d) - 1;
        let frac = (d - self.edges[j]) / (self.edges[j + 1] - self.edges[j]);
        (self.cumulative[j] + self.masses[j] * frac).min(T::one())
    }
}
