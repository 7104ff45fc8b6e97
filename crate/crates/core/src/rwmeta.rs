//! RW-Meta: private selection among data-dependent learners that all read
//! the same noisy gain stream.
//!
//! The learners' cumulative gains are correlated through the shared noise.
//! The meta-learner tracks that covariance Σ, strips its all-ones component
//! (to which the argmax is blind), and tops the remainder up to a scaled
//! identity with fresh Gaussian noise before picking a learner.

use crate::mechanism::{argmax_tiebreak, check_dims, gaussian_vector, NoisyGainVector, RoundSeed};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

/// Tolerance used when checking learner outputs against the simplex.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Iteration cap for [`leading_eigenvalue`].
pub const EIGEN_MAX_ITER: usize = 1000;

/// Every noisy gain vector released so far, with prefix sums for cheap
/// window statistics.
///
/// This is the only view of the data that learners get.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct NoisyHistory {
    rows: Vec<Vec<f64>>,
    // prefix[s] = Σ_{r<s} rows[r]; weighted[s] = Σ_{r<s} r · rows[r].
    prefix: Vec<Vec<f64>>,
    weighted: Vec<Vec<f64>>,
}

impl NoisyHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, g: &NoisyGainVector) -> Result<()> {
        if self.rows.is_empty() {
            self.prefix = vec![vec![0.0; g.len()]];
            self.weighted = vec![vec![0.0; g.len()]];
        } else {
            check_dims(self.rows[0].len(), g.len())?;
        }
        let r = self.rows.len() as f64;
        let last = self.prefix.last().expect("initialized above");
        let next: Vec<f64> = last.iter().zip(&g.values).map(|(a, b)| a + b).collect();
        let last_w = self.weighted.last().expect("initialized above");
        let next_w: Vec<f64> = last_w.iter().zip(&g.values).map(|(a, b)| a + r * b).collect();
        self.prefix.push(next);
        self.weighted.push(next_w);
        self.rows.push(g.values.clone());
        Ok(())
    }

    /// Number of rounds recorded.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Column sums of all rows; empty before the first push.
    pub fn cumulative(&self) -> &[f64] {
        self.prefix.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// For rows `start..end`, per expert: `Σ y_s` and `Σ (s − start) y_s`.
    pub fn window_sums(&self, start: usize, end: usize) -> (Vec<f64>, Vec<f64>) {
        assert!(start <= end && end <= self.rows.len(), "window out of range");
        let (p0, p1) = (&self.prefix[start], &self.prefix[end]);
        let (w0, w1) = (&self.weighted[start], &self.weighted[end]);
        let s = start as f64;
        let sum: Vec<f64> = p1.iter().zip(p0).map(|(a, b)| a - b).collect();
        let moment = w1
            .iter()
            .zip(w0)
            .zip(&sum)
            .map(|((a, b), y)| (a - b) - s * y)
            .collect();
        (sum, moment)
    }
}

/// A deterministic map from noisy history to a point of the simplex.
pub trait Learner: Send + Sync {
    fn id(&self) -> &str;

    /// Action for the next round, a length-`n` probability vector.
    fn predict(&self, n: usize, history: &NoisyHistory) -> Vec<f64>;
}

/// A learner that always plays the same vertex.
#[derive(Debug, Clone)]
pub struct ConstantVertex {
    pub vertex: usize,
    id: String,
}

impl ConstantVertex {
    pub fn new(vertex: usize) -> Self {
        ConstantVertex {
            vertex,
            id: format!("constant_{vertex}"),
        }
    }
}

impl Learner for ConstantVertex {
    fn id(&self) -> &str {
        &self.id
    }

    fn predict(&self, n: usize, _history: &NoisyHistory) -> Vec<f64> {
        vertex(n, self.vertex)
    }
}

/// The `i`-th unit vector of length `n`.
pub fn vertex(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn check_symmetric(mat: &DMatrix<f64>, what: &str) -> Result<()> {
    if !mat.is_square() {
        return Err(Error::invalid(format!("{what} must be square, got {}x{}", mat.nrows(), mat.ncols())));
    }
    let scale = mat.amax().max(1.0);
    for i in 0..mat.nrows() {
        for j in 0..i {
            if (mat[(i, j)] - mat[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::invalid(format!("{what} is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// `Σ* = Σ − (1ᵀΣ1 / m²) 11ᵀ`.
pub fn decorrelate(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(sigma, "covariance")?;
    let m = sigma.nrows() as f64;
    let shift = sigma.sum() / (m * m);
    Ok(sigma.map(|v| v - shift))
}

fn sign_normalize(v: &mut DVector<f64>) {
    let scale = v.amax();
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-9 * scale) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

// Orthonormalizes `candidate` against `basis` (two Gram–Schmidt passes);
// returns None if nothing independent is left.
fn orthonormal_extension(basis: &[DVector<f64>], candidate: &DVector<f64>) -> Option<DVector<f64>> {
    let norm0 = candidate.norm();
    if norm0 == 0.0 || !norm0.is_finite() {
        return None;
    }
    let mut v = candidate.clone();
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(&v);
            v.axpy(-c, b, 1.0);
        }
    }
    let norm = v.norm();
    (norm > 1e-10 * norm0).then(|| v / norm)
}

/// Largest eigenvalue of a symmetric matrix and a unit eigenvector for it,
/// by locally optimal block preconditioned conjugate gradient on a single
/// vector, started from `warm`.
///
/// Each iteration solves a Rayleigh–Ritz problem of size at most 3 on the
/// current iterate, its residual and the previous search direction. The
/// warm vector is nudged by a small fixed vector so that a start exactly
/// orthogonal to the leading eigenspace still converges.
pub fn leading_eigenvalue(mat: &DMatrix<f64>, warm: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    check_symmetric(mat, "matrix")?;
    let m = mat.nrows();
    if m == 0 {
        return Err(Error::invalid("eigenvalue of an empty matrix"));
    }
    if m == 1 {
        return Ok((mat[(0, 0)], DVector::from_element(1, 1.0)));
    }
    let anorm = mat.norm();
    if anorm == 0.0 {
        let mut e0 = DVector::zeros(m);
        e0[0] = 1.0;
        return Ok((0.0, e0));
    }

    let nudge = DVector::from_fn(m, |i, _| 1.0 / (i as f64 + 1.5) + if i % 2 == 0 { 0.3 } else { -0.2 });
    let mut x = if warm.len() == m && warm.iter().all(|v| v.is_finite()) && warm.norm() > 0.0 {
        warm.normalize() + nudge.normalize() * 1e-3
    } else {
        nudge.clone()
    };
    x.normalize_mut();

    let tol = 1e-11 * anorm;
    let mut prev_dir: Option<DVector<f64>> = None;
    let mut residual_norm = f64::INFINITY;
    for _ in 0..EIGEN_MAX_ITER {
        let ax = mat * &x;
        let rho = x.dot(&ax);
        let r = &ax - &x * rho;
        residual_norm = r.norm();
        if residual_norm <= tol {
            sign_normalize(&mut x);
            return Ok((rho, x));
        }

        let mut basis = vec![x.clone()];
        if let Some(w) = orthonormal_extension(&basis, &r) {
            basis.push(w);
        }
        if let Some(p) = &prev_dir {
            if let Some(w) = orthonormal_extension(&basis, p) {
                basis.push(w);
            }
        }
        let k = basis.len();
        let images: Vec<DVector<f64>> = basis.iter().map(|b| mat * b).collect();
        let h = DMatrix::from_fn(k, k, |i, j| 0.5 * (basis[i].dot(&images[j]) + basis[j].dot(&images[i])));
        let eig = SymmetricEigen::new(h);
        let top = eig.eigenvalues.imax();
        let c = eig.eigenvectors.column(top);

        let mut dir = DVector::zeros(m);
        for (j, b) in basis.iter().enumerate().skip(1) {
            dir.axpy(c[j], b, 1.0);
        }
        let mut next = &x * c[0] + &dir;
        next.normalize_mut();
        prev_dir = Some(dir);
        x = next;
    }
    Err(Error::numerical(
        "leading eigenvalue iteration cap exceeded",
        format!("{EIGEN_MAX_ITER} iterations, residual norm {residual_norm:e}"),
    ))
}

/// Draws from N(0, cov) via a symmetric eigendecomposition. Eigenvalues in
/// `[floor, 0)` are treated as zero; anything below `floor` is an error.
/// Returns the draw and the smallest eigenvalue seen.
fn sample_with_floor(cov: &DMatrix<f64>, floor: f64, seed: RoundSeed) -> Result<(Vec<f64>, f64)> {
    check_symmetric(cov, "covariance")?;
    let m = cov.nrows();
    let eig = SymmetricEigen::new(cov.clone());
    let min_eig = eig.eigenvalues.min();
    if min_eig < floor {
        return Err(Error::numerical(
            "covariance is not positive semidefinite",
            format!("smallest eigenvalue {min_eig:e} is below the tolerance {floor:e}"),
        ));
    }
    let z = gaussian_vector(m, 1.0, seed);
    let scaled = DVector::from_iterator(m, eig.eigenvalues.iter().zip(&z).map(|(l, z)| l.max(0.0).sqrt() * z));
    let y = &eig.eigenvectors * scaled;
    Ok((y.iter().copied().collect(), min_eig))
}

/// A draw from N(0, cov). Eigenvalues down to `−1e−8 · trace/m` are
/// clamped to zero.
pub fn sample_correlated(cov: &DMatrix<f64>, seed: RoundSeed) -> Result<Vec<f64>> {
    let m = cov.nrows().max(1) as f64;
    let floor = -1e-8 * (cov.trace() / m).abs();
    Ok(sample_with_floor(cov, floor, seed)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaState {
    /// Perturbed cumulative gain of each learner.
    pub learner_estimate: DVector<f64>,
    /// Covariance of the noise in `learner_estimate`.
    pub sigma_mat: DMatrix<f64>,
    /// Leading eigenvector of the last decorrelated covariance.
    pub warm_eigvec: DVector<f64>,
    pub t: u64,
}

/// Starts RW-Meta over `m` learners: estimate drawn from N(0, η²I), Σ = η²I.
/// `eta = 0` gives the unperturbed variant.
pub fn meta_init(m: usize, eta: f64, seed: RoundSeed) -> Result<MetaState> {
    if m == 0 {
        return Err(Error::invalid("RW-Meta needs at least one learner"));
    }
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::invalid(format!("noise scale must be finite and non-negative, got {eta}")));
    }
    let learner_estimate = if eta > 0.0 {
        DVector::from_vec(gaussian_vector(m, eta, seed))
    } else {
        DVector::zeros(m)
    };
    Ok(MetaState {
        learner_estimate,
        sigma_mat: DMatrix::identity(m, m) * (eta * eta),
        warm_eigvec: DVector::from_element(m, 1.0 / (m as f64).sqrt()),
        t: 0,
    })
}

/// What happened in one RW-Meta round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaRound {
    pub chosen: usize,
    /// The chosen learner's prediction.
    pub action: Vec<f64>,
    /// Every learner's prediction, one row per learner.
    pub predictions: Vec<Vec<f64>>,
    pub sigma_sq: f64,
    pub lambda_max: f64,
    /// Smallest eigenvalue of σ²I − Σ* before clamping.
    pub min_cov_eigenvalue: f64,
}

/// Evaluates every learner on `history` and checks each output lies on the
/// simplex.
pub fn evaluate_learners(learners: &[Box<dyn Learner>], n: usize, history: &NoisyHistory) -> Result<Vec<Vec<f64>>> {
    learners
        .iter()
        .map(|l| {
            let x = l.predict(n, history);
            check_simplex(l.id(), n, &x)?;
            Ok(x)
        })
        .collect()
}

fn check_simplex(id: &str, n: usize, x: &[f64]) -> Result<()> {
    if x.len() != n {
        return Err(Error::invalid(format!("learner {id} returned {} entries, expected {n}", x.len())));
    }
    let sum: f64 = x.iter().sum();
    if x.iter().any(|v| !(*v >= -SIMPLEX_TOL)) || (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::invalid(format!("learner {id} returned a point off the simplex (sum {sum})")));
    }
    Ok(())
}

impl MetaState {
    pub fn m(&self) -> usize {
        self.learner_estimate.len()
    }

    /// In-place version of [`meta_step`].
    pub fn step(
        &mut self,
        learners: &[Box<dyn Learner>],
        history: &NoisyHistory,
        g_noisy: &NoisyGainVector,
        eta: f64,
        seed: RoundSeed,
    ) -> Result<MetaRound> {
        let predictions = evaluate_learners(learners, g_noisy.len(), history)?;
        self.step_with_predictions(predictions, g_noisy, eta, seed)
    }

    /// Like [`MetaState::step`] with the learners' predictions supplied by
    /// the caller (one row per learner, each on the simplex).
    pub fn step_with_predictions(
        &mut self,
        predictions: Vec<Vec<f64>>,
        g_noisy: &NoisyGainVector,
        eta: f64,
        seed: RoundSeed,
    ) -> Result<MetaRound> {
        let m = self.m();
        check_dims(m, predictions.len())?;
        for (i, x) in predictions.iter().enumerate() {
            check_simplex(&format!("#{i}"), g_noisy.len(), x)?;
        }
        let t = self.t + 1;

        let sigma_star = decorrelate(&self.sigma_mat)?;
        let (lambda_max, eigvec) = leading_eigenvalue(&sigma_star, &self.warm_eigvec)?;
        let sigma_sq = (2.0 * t as f64).max(lambda_max);
        let cov = DMatrix::identity(m, m) * sigma_sq - &sigma_star;
        let (y, min_cov_eigenvalue) = sample_with_floor(&cov, -1e-8 * sigma_sq, seed)?;

        let perturbed: Vec<f64> = self.learner_estimate.iter().zip(&y).map(|(g, y)| g + y).collect();
        let chosen = argmax_tiebreak(&perturbed)?;

        let gains: Vec<f64> = predictions
            .iter()
            .map(|x| x.iter().zip(&g_noisy.values).map(|(a, b)| a * b).sum())
            .collect();
        for (e, g) in self.learner_estimate.iter_mut().zip(&gains) {
            *e += g;
        }
        let eta2 = eta * eta;
        for i in 0..m {
            for j in 0..=i {
                let dot: f64 = predictions[i].iter().zip(&predictions[j]).map(|(a, b)| a * b).sum();
                self.sigma_mat[(i, j)] += eta2 * dot;
                if i != j {
                    self.sigma_mat[(j, i)] = self.sigma_mat[(i, j)];
                }
            }
        }
        self.warm_eigvec = eigvec;
        self.t = t;

        Ok(MetaRound {
            chosen,
            action: predictions[chosen].clone(),
            predictions,
            sigma_sq,
            lambda_max,
            min_cov_eigenvalue,
        })
    }

    /// Adds a gain increment to the learner estimate with a diagonal
    /// covariance update, for selectors whose learners see independent
    /// noise streams.
    pub fn absorb_independent(&mut self, gains: &[f64], variances: &[f64]) -> Result<()> {
        check_dims(self.m(), gains.len())?;
        check_dims(self.m(), variances.len())?;
        for (i, (g, v)) in gains.iter().zip(variances).enumerate() {
            self.learner_estimate[i] += g;
            self.sigma_mat[(i, i)] += v;
        }
        self.t += 1;
        Ok(())
    }

    /// Selection step on the current state without any update; pairs with
    /// [`MetaState::absorb_independent`].
    pub fn select(&mut self, seed: RoundSeed) -> Result<(usize, f64, f64)> {
        let m = self.m();
        let t = self.t + 1;
        let sigma_star = decorrelate(&self.sigma_mat)?;
        let (lambda_max, eigvec) = leading_eigenvalue(&sigma_star, &self.warm_eigvec)?;
        let sigma_sq = (2.0 * t as f64).max(lambda_max);
        let cov = DMatrix::identity(m, m) * sigma_sq - &sigma_star;
        let (y, min_eig) = sample_with_floor(&cov, -1e-8 * sigma_sq, seed)?;
        let perturbed: Vec<f64> = self.learner_estimate.iter().zip(&y).map(|(g, y)| g + y).collect();
        self.warm_eigvec = eigvec;
        Ok((argmax_tiebreak(&perturbed)?, sigma_sq, min_eig))
    }
}

/// Runs one RW-Meta round: pick a learner with decorrelated noise, play its
/// prediction, then absorb `g_noisy` into every learner's estimate.
///
/// `history` must hold the noisy gains of the rounds before this one; the
/// caller appends `g_noisy` to it afterwards.
pub fn meta_step(
    state: &MetaState,
    learners: &[Box<dyn Learner>],
    history: &NoisyHistory,
    g_noisy: &NoisyGainVector,
    eta: f64,
    seed: RoundSeed,
) -> Result<(MetaRound, MetaState)> {
    let mut next = state.clone();
    let round = next.step(learners, history, g_noisy, eta, seed)?;
    Ok((round, next))
}

/// `[max(√2, η √λ_max(Σ*_T / (η²T))) + √2] √(2 T ln m)`.
///
/// The middle term is evaluated as `√(λ_max(Σ*_T) / T)`, which is the same
/// quantity and stays defined at η = 0.
pub fn meta_regret_bound(sigma_star_t: &DMatrix<f64>, horizon: u64, m: usize) -> Result<f64> {
    if horizon == 0 || m < 2 {
        return Err(Error::invalid("meta regret bound needs T >= 1 and m >= 2"));
    }
    check_dims(m, sigma_star_t.nrows())?;
    let warm = DVector::from_element(m, 1.0 / (m as f64).sqrt());
    let (lambda, _) = leading_eigenvalue(sigma_star_t, &warm)?;
    let t = horizon as f64;
    let spread = (lambda.max(0.0) / t).sqrt();
    Ok((SQRT_2.max(spread) + SQRT_2) * (2.0 * t * (m as f64).ln()).sqrt())
}
