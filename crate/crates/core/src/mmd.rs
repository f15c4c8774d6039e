//! The unbiased MMD² statistic, its Gaussian population value, and an
//! incremental two-sample state.

use std::cmp::Ordering;

use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel::{KernelKind, KernelSpec};
use crate::simulation::GaussianSpec;

/// Minimum length of each side of the unbiased estimator.
pub const MIN_SAMPLES: usize = 2;

/// A finite, non-empty scalar sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample(Vec<f64>);

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientSamples { needed: 1, got: 0 });
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for Sample {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// `Σ_{i≠j} k(x_i, x_j)`, accumulated row by row over `i < j` and doubled.
pub(crate) fn within_sum(spec: &KernelSpec, xs: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        total += spec.row_sum(x, &xs[..i]);
    }
    2.0 * total
}

/// `Σ_{i,j} k(x_i, y_j)`, one row per element of `xs`.
pub(crate) fn cross_sum(spec: &KernelSpec, xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter().map(|&x| spec.row_sum(x, ys)).sum()
}

/// Combine the three kernel sums into the unbiased statistic.
#[inline]
pub(crate) fn combine(sxx: f64, n1: usize, syy: f64, n2: usize, sxy: f64) -> f64 {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    sxx / (n1f * (n1f - 1.0)) + syy / (n2f * (n2f - 1.0)) - 2.0 * sxy / (n1f * n2f)
}

fn check_len(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        Err(Error::InsufficientSamples { needed: MIN_SAMPLES, got: n })
    } else {
        Ok(())
    }
}

// Orders the two arguments canonically (by length, then contents) so the
// statistic is bit-identical under swapping them.
fn canonical<'a>(x: &'a [f64], y: &'a [f64]) -> (&'a [f64], &'a [f64]) {
    let ord = x.len().cmp(&y.len()).then_with(|| {
        x.iter()
            .zip(y)
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    if ord == Ordering::Greater {
        (y, x)
    } else {
        (x, y)
    }
}

/// Unbiased estimate of `MMD²(f₁, f₂)` from samples `x ~ f₁`, `y ~ f₂`.
///
/// Both samples need at least two points. For the Gaussian kernel the
/// result lies in `[-2, 2]`.
pub fn mmd2_unbiased(spec: &KernelSpec, x: &Sample, y: &Sample) -> Result<f64> {
    mmd2_unbiased_slices(spec, x.values(), y.values())
}

pub(crate) fn mmd2_unbiased_slices(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x.len())?;
    check_len(y.len())?;
    let (a, b) = canonical(x, y);
    let saa = within_sum(spec, a);
    let sbb = within_sum(spec, b);
    let sab = cross_sum(spec, a, b);
    Ok(combine(saa, a.len(), sbb, b.len(), sab))
}

/// `E[k(X, Y)]` for independent Gaussians under a Gaussian kernel.
fn gaussian_kernel_mean(bandwidth: f64, f1: &GaussianSpec, f2: &GaussianSpec) -> f64 {
    let s0 = bandwidth * bandwidth;
    let total = s0 + f1.variance() + f2.variance();
    let dm = f1.mean() - f2.mean();
    (s0 / total).sqrt() * (-dm * dm / (2.0 * total)).exp()
}

/// Closed-form population `MMD²(f₁, f₂)` for a Gaussian kernel and Gaussian
/// distributions.
pub fn mmd2_population_gaussian(
    spec: &KernelSpec,
    f1: &GaussianSpec,
    f2: &GaussianSpec,
) -> Result<f64> {
    match spec.kind() {
        KernelKind::Gaussian => {
            let bw = spec.bandwidth();
            Ok(gaussian_kernel_mean(bw, f1, f1) - 2.0 * gaussian_kernel_mean(bw, f1, f2)
                + gaussian_kernel_mean(bw, f2, f2))
        }
    }
}

/// Monte-Carlo estimate of the population `MMD²` for arbitrary samplers.
///
/// Each of the `budget` rounds draws `X, X' ~ f₁` and `Y, Y' ~ f₂`
/// independently and averages `k(X,X') - 2k(X,Y) + k(Y,Y')`.
pub fn mmd2_population_monte_carlo<R, F1, F2>(
    spec: &KernelSpec,
    mut draw1: F1,
    mut draw2: F2,
    budget: usize,
    rng: &mut R,
) -> Result<f64>
where
    R: Rng + ?Sized,
    F1: FnMut(&mut R) -> f64,
    F2: FnMut(&mut R) -> f64,
{
    if budget == 0 {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let mut acc = 0.0;
    for _ in 0..budget {
        let (x, xp) = (draw1(rng), draw1(rng));
        let (y, yp) = (draw2(rng), draw2(rng));
        acc += spec.eval(x, xp)? - 2.0 * spec.eval(x, y)? + spec.eval(y, yp)?;
    }
    Ok(acc / budget as f64)
}

/// Incrementally maintained kernel sums for a pair of growing samples.
///
/// Appending a point costs `O(n₁ + n₂)` kernel evaluations. The raw samples
/// are retained because a bandwidth-parameterised kernel admits no finite
/// sufficient statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMmdState {
    spec: KernelSpec,
    xs: Vec<f64>,
    ys: Vec<f64>,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

impl PairMmdState {
    pub fn new(spec: KernelSpec) -> Self {
        Self { spec, xs: Vec::new(), ys: Vec::new(), sxx: 0.0, syy: 0.0, sxy: 0.0 }
    }

    /// Build a state by appending `x` and `y` pointwise, in lock-step while
    /// both have points left.
    pub fn from_samples(spec: KernelSpec, x: &[f64], y: &[f64]) -> Result<Self> {
        let mut state = Self::new(spec);
        for i in 0..x.len().max(y.len()) {
            state.append(x.get(i).copied(), y.get(i).copied())?;
        }
        Ok(state)
    }

    pub fn append(&mut self, new_x: Option<f64>, new_y: Option<f64>) -> Result<()> {
        for v in new_x.iter().chain(new_y.iter()) {
            if !v.is_finite() {
                return Err(Error::NonFinite(*v));
            }
        }
        let spec = self.spec;
        if let Some(x) = new_x {
            self.sxx += 2.0 * spec.row_sum(x, &self.xs);
            self.sxy += spec.row_sum(x, &self.ys);
        }
        if let Some(y) = new_y {
            self.syy += 2.0 * spec.row_sum(y, &self.ys);
            self.sxy += spec.row_sum(y, &self.xs);
        }
        if let (Some(x), Some(y)) = (new_x, new_y) {
            self.sxy += spec.eval_unchecked(x, y);
        }
        self.xs.extend(new_x);
        self.ys.extend(new_y);
        Ok(())
    }

    /// Consuming variant of [`append`](Self::append).
    pub fn appended(mut self, new_x: Option<f64>, new_y: Option<f64>) -> Result<Self> {
        self.append(new_x, new_y)?;
        Ok(self)
    }

    pub fn lengths(&self) -> (usize, usize) {
        (self.xs.len(), self.ys.len())
    }

    /// `(Sxx, Syy, Sxy)`.
    pub fn sums(&self) -> (f64, f64, f64) {
        (self.sxx, self.syy, self.sxy)
    }

    pub fn samples(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    /// The unbiased statistic from the maintained sums.
    pub fn mmd2(&self) -> Result<f64> {
        check_len(self.xs.len())?;
        check_len(self.ys.len())?;
        Ok(combine(self.sxx, self.xs.len(), self.syy, self.ys.len(), self.sxy))
    }
}

/// Free-function form of [`PairMmdState::append`].
pub fn stream_append(
    state: PairMmdState,
    new_x: Option<f64>,
    new_y: Option<f64>,
) -> Result<PairMmdState> {
    state.appended(new_x, new_y)
}

/// Free-function form of [`PairMmdState::mmd2`].
pub fn mmd2_from_state(state: &PairMmdState) -> Result<f64> {
    state.mmd2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gauss() -> KernelSpec {
        KernelSpec::gaussian(1.0).unwrap()
    }

    fn sample(v: &[f64]) -> Sample {
        Sample::new(v.to_vec()).unwrap()
    }

    // Direct triple sum, no reuse of any helper above.
    fn naive(spec: &KernelSpec, x: &[f64], y: &[f64]) -> f64 {
        let k = |a: f64, b: f64| (-(a - b) * (a - b) / (2.0 * spec.bandwidth().powi(2))).exp();
        let (n1, n2) = (x.len() as f64, y.len() as f64);
        let mut sxx = 0.0;
        for i in 0..x.len() {
            for j in 0..x.len() {
                if i != j {
                    sxx += k(x[i], x[j]);
                }
            }
        }
        let mut syy = 0.0;
        for i in 0..y.len() {
            for j in 0..y.len() {
                if i != j {
                    syy += k(y[i], y[j]);
                }
            }
        }
        let mut sxy = 0.0;
        for &a in x {
            for &b in y {
                sxy += k(a, b);
            }
        }
        sxx / (n1 * (n1 - 1.0)) + syy / (n2 * (n2 - 1.0)) - 2.0 * sxy / (n1 * n2)
    }

    #[test]
    fn identical_constant_samples_give_zero() {
        let x = sample(&[0.7, 0.7]);
        assert_eq!(mmd2_unbiased(&gauss(), &x, &x.clone()).unwrap(), 0.0);
    }

    #[test]
    fn constant_kernel_cancels() {
        // A huge bandwidth makes the kernel numerically constant at 1.
        let k = KernelSpec::gaussian(1e200).unwrap();
        let v = mmd2_unbiased(&k, &sample(&[0.0, 1.0, 5.0]), &sample(&[-3.0, 2.0])).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn matches_triple_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = gauss();
        let x: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..3.0)).collect();
        let got = mmd2_unbiased(&spec, &sample(&x), &sample(&y)).unwrap();
        assert!((got - naive(&spec, &x, &y)).abs() <= 1e-12);
    }

    #[test]
    fn too_short_samples_rejected() {
        let err = mmd2_unbiased(&gauss(), &sample(&[1.0]), &sample(&[1.0, 2.0])).unwrap_err();
        assert_eq!(err, Error::InsufficientSamples { needed: 2, got: 1 });
        assert!(Sample::new(vec![]).is_err());
        assert!(Sample::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn population_values() {
        let spec = gauss();
        let f0 = GaussianSpec::new(0.0, 1.0).unwrap();
        assert_eq!(mmd2_population_gaussian(&spec, &f0, &f0).unwrap(), 0.0);
        let f1 = GaussianSpec::new(1.0, 1.0).unwrap();
        let v1 = mmd2_population_gaussian(&spec, &f0, &f1).unwrap();
        assert!((v1 - 0.1772).abs() < 1e-4, "{v1}");
        let f15 = GaussianSpec::new(1.5, 1.0).unwrap();
        let v15 = mmd2_population_gaussian(&spec, &f0, &f15).unwrap();
        assert!((v15 - 0.3610).abs() < 1e-4, "{v15}");
    }

    #[test]
    fn population_monte_carlo_agrees_with_closed_form() {
        let spec = gauss();
        let f0 = GaussianSpec::new(0.0, 1.0).unwrap();
        let f1 = GaussianSpec::new(1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mc = mmd2_population_monte_carlo(
            &spec,
            |r: &mut ChaCha8Rng| f0.draw(r),
            |r: &mut ChaCha8Rng| f1.draw(r),
            200_000,
            &mut rng,
        )
        .unwrap();
        let exact = mmd2_population_gaussian(&spec, &f0, &f1).unwrap();
        // Per-round std is below 1.5, so 5 standard errors is < 0.02.
        assert!((mc - exact).abs() < 0.02, "{mc} vs {exact}");
    }

    #[test]
    fn streaming_short_state_errors() {
        let s = PairMmdState::new(gauss()).appended(Some(1.0), Some(2.0)).unwrap();
        assert!(matches!(s.mmd2(), Err(Error::InsufficientSamples { .. })));
        assert!(mmd2_from_state(&PairMmdState::new(gauss())).is_err());
    }

    #[test]
    fn streaming_matches_from_scratch() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = gauss();
        let x: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..3.0)).collect();
        let mut state = PairMmdState::new(spec);
        for i in 0..10 {
            state = stream_append(state, Some(x[i]), Some(y[i])).unwrap();
        }
        let scratch = mmd2_unbiased(&spec, &sample(&x), &sample(&y)).unwrap();
        assert!((mmd2_from_state(&state).unwrap() - scratch).abs() <= 1e-12);
    }

    #[test]
    fn x_only_append_leaves_syy() {
        let spec = gauss();
        let mut state = PairMmdState::from_samples(spec, &[0.1, 0.5], &[1.0, 2.0, 3.0]).unwrap();
        let (_, syy, _) = state.sums();
        state.append(Some(0.9), None).unwrap();
        assert_eq!(state.sums().1, syy);
        assert_eq!(state.lengths(), (3, 3));
    }

    #[test]
    fn repeated_value_state_is_zero() {
        let s = PairMmdState::from_samples(gauss(), &[2.0, 2.0], &[2.0, 2.0]).unwrap();
        assert_eq!(s.mmd2().unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn symmetric_exactly(
            x in prop::collection::vec(-5.0f64..5.0, 2..12),
            y in prop::collection::vec(-5.0f64..5.0, 2..12),
        ) {
            let spec = gauss();
            let a = mmd2_unbiased(&spec, &sample(&x), &sample(&y)).unwrap();
            let b = mmd2_unbiased(&spec, &sample(&y), &sample(&x)).unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits());
            prop_assert!((-2.0..=2.0).contains(&a));
        }

        #[test]
        fn permutation_invariant(
            x in prop::collection::vec(-5.0f64..5.0, 2..12),
            y in prop::collection::vec(-5.0f64..5.0, 2..12),
            rot in 0usize..12,
        ) {
            let spec = gauss();
            let a = mmd2_unbiased(&spec, &sample(&x), &sample(&y)).unwrap();
            let mut xr = x.clone();
            let r = rot % xr.len();
            xr.rotate_left(r);
            let mut yr = y.clone();
            yr.reverse();
            let b = mmd2_unbiased(&spec, &sample(&xr), &sample(&yr)).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn streaming_equivalence_every_prefix(
            x in prop::collection::vec(-4.0f64..4.0, 2..15),
            y in prop::collection::vec(-4.0f64..4.0, 2..15),
        ) {
            let spec = KernelSpec::gaussian(0.8).unwrap();
            let mut state = PairMmdState::new(spec);
            for i in 0..x.len().max(y.len()) {
                state.append(x.get(i).copied(), y.get(i).copied()).unwrap();
                let (n1, n2) = state.lengths();
                if n1 >= 2 && n2 >= 2 {
                    let scratch = naive(&spec, &x[..n1], &y[..n2]);
                    prop_assert!((state.mmd2().unwrap() - scratch).abs() <= 1e-12);
                }
            }
        }
    }
}
