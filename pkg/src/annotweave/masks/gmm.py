"""Gaussian mixture color models for foreground/background likelihoods.

Full-covariance 3-D mixtures fit by hard assignment (k-means style), as
iterative segmentation refits them every round anyway. Covariances get a
+1e-5*I floor so they stay positive definite even on flat color patches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COMPONENTS = 5
COV_REGULARIZATION = 1e-5
_LOG_FLOOR = -690.0  # log of the smallest positive double, rounded


@dataclass(frozen=True)
class GaussianMixture:
    weights: np.ndarray  # (K,), sums to 1
    means: np.ndarray  # (K, 3)
    covariances: np.ndarray  # (K, 3, 3), symmetric positive definite

    @property
    def n_components(self) -> int:
        return len(self.weights)

    def log_likelihood(self, pixels: np.ndarray) -> np.ndarray:
        """log sum_k w_k N(x; mu_k, Sigma_k) per pixel, floored away from -inf."""
        x = np.asarray(pixels, dtype=np.float64)
        comp = np.full((x.shape[0], self.n_components), -np.inf)
        for k in range(self.n_components):
            if self.weights[k] <= 0:
                continue
            comp[:, k] = np.log(self.weights[k]) + _log_gauss(
                x, self.means[k], self.covariances[k]
            )
        peak = comp.max(axis=1)
        peak = np.where(np.isfinite(peak), peak, _LOG_FLOOR)
        out = peak + np.log(np.exp(comp - peak[:, None]).sum(axis=1))
        return np.maximum(out, _LOG_FLOOR)

    def assign(self, pixels: np.ndarray) -> np.ndarray:
        """Most likely component per pixel (weighted density argmax)."""
        x = np.asarray(pixels, dtype=np.float64)
        comp = np.full((x.shape[0], self.n_components), -np.inf)
        for k in range(self.n_components):
            if self.weights[k] <= 0:
                continue
            comp[:, k] = np.log(self.weights[k]) + _log_gauss(
                x, self.means[k], self.covariances[k]
            )
        return comp.argmax(axis=1)


def _log_gauss(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    inv = np.linalg.inv(cov)
    _, logdet = np.linalg.slogdet(cov)
    diff = x - mean
    quad = np.einsum("ij,jk,ik->i", diff, inv, diff)
    d = x.shape[1]
    return -0.5 * (quad + logdet + d * np.log(2.0 * np.pi))


def _from_assignment(pixels: np.ndarray, labels: np.ndarray, k: int) -> GaussianMixture:
    n = pixels.shape[0]
    weights, means, covs = [], [], []
    identity = np.eye(pixels.shape[1])
    for comp in range(k):
        sel = pixels[labels == comp]
        if sel.shape[0] == 0:
            continue
        weights.append(sel.shape[0] / n)
        means.append(sel.mean(axis=0))
        if sel.shape[0] > 1:
            cov = np.cov(sel.T, bias=True)
        else:
            cov = np.zeros((pixels.shape[1], pixels.shape[1]))
        covs.append(cov + COV_REGULARIZATION * identity)
    return GaussianMixture(
        np.asarray(weights), np.asarray(means), np.asarray(covs)
    )


def _kmeans_plus_plus(pixels: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = np.empty((k, pixels.shape[1]))
    centers[0] = pixels[rng.integers(pixels.shape[0])]
    d2 = ((pixels - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[i:] = pixels[rng.integers(pixels.shape[0], size=k - i)]
            break
        centers[i] = pixels[rng.choice(pixels.shape[0], p=d2 / total)]
        d2 = np.minimum(d2, ((pixels - centers[i]) ** 2).sum(axis=1))
    return centers


def fit_gmm(
    pixels: np.ndarray,
    k: int = COMPONENTS,
    seed: int = 2024,
    kmeans_rounds: int = 10,
) -> GaussianMixture:
    """Fit a mixture to a pixel sample via seeded k-means++ and Lloyd rounds.

    Deterministic for a given input. Components that end up empty are
    dropped, so flat-color inputs yield fewer than k components.
    """
    x = np.asarray(pixels, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("need a non-empty (N, 3) pixel sample")
    k = min(k, x.shape[0])
    rng = np.random.default_rng(seed)
    centers = _kmeans_plus_plus(x, k, rng)
    labels = np.zeros(x.shape[0], dtype=np.int64)
    for _ in range(kmeans_rounds):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
        for comp in range(k):
            sel = x[labels == comp]
            if sel.shape[0]:
                centers[comp] = sel.mean(axis=0)
    return _from_assignment(x, labels, k)


def refit_gmm(model: GaussianMixture, pixels: np.ndarray) -> GaussianMixture:
    """One hard-EM round: reassign pixels to components, then refit."""
    x = np.asarray(pixels, dtype=np.float64)
    if x.shape[0] == 0:
        raise ValueError("need a non-empty pixel sample")
    labels = model.assign(x)
    return _from_assignment(x, labels, model.n_components)
