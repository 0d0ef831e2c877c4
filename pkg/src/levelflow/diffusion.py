"""Diffusion schedule, ancestral sampling and energy-guided sampling.

The forward chain is the standard variance-preserving one:
``y_t = sqrt(abar_t) y_0 + sqrt(1 - abar_t) eps`` with ``abar_t`` the
cumulative product of ``alpha_t = 1 - beta_t``.  Instead of a trained
noise predictor, pluggable analytic providers supply ``eps_hat``; the
mixture-of-masks provider computes the exact score of a Gaussian mixture
over reference masks, so the guidance math can be exercised end to end
without any learned component (anything exposing ``eps_hat(y_t, t,
schedule)`` can be swapped in, including a trained model).

Energy guidance shifts the prediction by the gradient of the contour
energy evaluated at the one-shot clean-mask estimate:

    eps_guided = eps_hat + gamma_t * d(energy)/d(y_t),

where the chain rule through ``y0_hat = (y_t - sqrt(1-abar) eps_hat) /
sqrt(abar)`` contributes a ``1/sqrt(abar_t)`` factor (``eps_hat`` treated
as locally constant).  The identical update can be phrased on the score
via ``score = -eps / sqrt(1 - abar_t)``; both formulations are provided
and are algebraically equivalent.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import geodesic, levelset, rng
from .errors import DegenerateRegionError, InvalidInputError
from .field import as_field, binarize, check_same_shape

GAMMA0_DEFAULT = 0.3
GUIDANCE_SCHEDULES = ("constant", "noise-scaled")
GUIDANCE_SPACES = ("noise", "score")
DISTANCE_REFRESH_DEFAULT = 50

_MEMBER_TAG = 0x4D454D42  # "MEMB"
_INIT_TAG = 0x494E4954  # "INIT"
_STEP_TAG = 0x53544550  # "STEP"


class GuidanceFallbackWarning(UserWarning):
    """Emitted when a guidance gradient falls back to zero (degenerate mask)."""


@dataclass(frozen=True)
class DiffusionSchedule:
    """Variance schedule arrays, all of length T, indexed by t - 1.

    ``sigma`` is the reverse-step noise scale sqrt(beta_t), forced to 0 at
    t = 1 so the returned sample is noise-free.
    """

    T: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    sigma: np.ndarray


def make_schedule(
    T: int, beta1: float = 1e-4, betaT: float = 0.02, kind: str = "linear"
) -> DiffusionSchedule:
    if kind != "linear":
        raise InvalidInputError(f"unknown schedule kind {kind!r}, expected 'linear'")
    if T < 1:
        raise InvalidInputError("T must be at least 1")
    if not (0.0 < beta1 <= betaT < 1.0):
        raise InvalidInputError(
            f"betas must satisfy 0 < beta1 <= betaT < 1, got ({beta1}, {betaT})"
        )
    beta = np.linspace(beta1, betaT, T)
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    sigma = np.sqrt(beta)
    sigma[0] = 0.0
    return DiffusionSchedule(T=T, beta=beta, alpha=alpha, alpha_bar=alpha_bar, sigma=sigma)


def _check_t(t: int, sched: DiffusionSchedule) -> int:
    if not 1 <= t <= sched.T:
        raise InvalidInputError(f"step t={t} outside [1, {sched.T}]")
    return t - 1


def forward_sample(
    y0: np.ndarray, t: int, sched: DiffusionSchedule, noise: np.ndarray
) -> np.ndarray:
    """y_t = sqrt(abar_t) y0 + sqrt(1 - abar_t) noise (noise supplied by caller)."""
    i = _check_t(t, sched)
    y0 = as_field(y0, "y0")
    noise = as_field(noise, "noise")
    check_same_shape(y0, noise)
    abar = sched.alpha_bar[i]
    return np.sqrt(abar) * y0 + np.sqrt(1.0 - abar) * noise


def predict_y0(
    yt: np.ndarray, eps_hat: np.ndarray, t: int, sched: DiffusionSchedule
) -> np.ndarray:
    """One-shot clean estimate y0_hat = (y_t - sqrt(1-abar) eps_hat) / sqrt(abar)."""
    i = _check_t(t, sched)
    yt = as_field(yt, "yt")
    eps_hat = as_field(eps_hat, "eps_hat")
    check_same_shape(yt, eps_hat)
    abar = sched.alpha_bar[i]
    return (yt - np.sqrt(1.0 - abar) * eps_hat) / np.sqrt(abar)


def reverse_step(
    yt: np.ndarray, eps_hat: np.ndarray, t: int, sched: DiffusionSchedule, xi: np.ndarray
) -> np.ndarray:
    """One ancestral step t -> t-1 with caller-supplied standard noise xi."""
    i = _check_t(t, sched)
    yt = as_field(yt, "yt")
    eps_hat = as_field(eps_hat, "eps_hat")
    xi = as_field(xi, "xi")
    check_same_shape(yt, eps_hat, xi)
    alpha = sched.alpha[i]
    abar = sched.alpha_bar[i]
    mean = (yt - (1.0 - alpha) / np.sqrt(1.0 - abar) * eps_hat) / np.sqrt(alpha)
    return mean + sched.sigma[i] * xi


def eps_to_score(eps: np.ndarray, t: int, sched: DiffusionSchedule) -> np.ndarray:
    i = _check_t(t, sched)
    return -np.asarray(eps) / np.sqrt(1.0 - sched.alpha_bar[i])


def score_to_eps(score: np.ndarray, t: int, sched: DiffusionSchedule) -> np.ndarray:
    i = _check_t(t, sched)
    return -np.asarray(score) * np.sqrt(1.0 - sched.alpha_bar[i])


# ---------------------------------------------------------------------------
# Guidance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GuidancePolicy:
    """Strength of the energy term injected into each reverse step.

    ``noise-scaled`` multiplies gamma0 by sqrt(1 - abar_t), which keeps the
    injected term commensurate with the score-to-noise conversion across
    the whole chain; ``constant`` applies gamma0 as is.
    """

    gamma0: float = GAMMA0_DEFAULT
    schedule: str = "noise-scaled"

    def __post_init__(self):
        if self.gamma0 < 0:
            raise InvalidInputError("gamma0 must be non-negative")
        if self.schedule not in GUIDANCE_SCHEDULES:
            raise InvalidInputError(
                f"unknown guidance schedule {self.schedule!r}, "
                f"expected one of {GUIDANCE_SCHEDULES}"
            )


def guidance_scale(gp: GuidancePolicy, t: int, sched: DiffusionSchedule) -> float:
    i = _check_t(t, sched)
    if gp.schedule == "noise-scaled":
        return gp.gamma0 * float(np.sqrt(1.0 - sched.alpha_bar[i]))
    return gp.gamma0


def guided_eps(
    eps_hat: np.ndarray,
    grad_lsf: np.ndarray,
    t: int,
    sched: DiffusionSchedule,
    gp: GuidancePolicy,
) -> np.ndarray:
    """Noise-space guidance: eps_hat + gamma_t * grad."""
    eps_hat = as_field(eps_hat, "eps_hat")
    grad_lsf = as_field(grad_lsf, "grad_lsf")
    check_same_shape(eps_hat, grad_lsf)
    return eps_hat + guidance_scale(gp, t, sched) * grad_lsf


def guided_score(score: np.ndarray, grad_lsf: np.ndarray, gamma_st: float) -> np.ndarray:
    """Score-space guidance: score - gamma_st * grad."""
    score = as_field(score, "score")
    grad_lsf = as_field(grad_lsf, "grad_lsf")
    check_same_shape(score, grad_lsf)
    return score - gamma_st * grad_lsf


@dataclass(frozen=True)
class GuidanceConfig:
    """Contour-energy configuration used inside guided sampling."""

    heaviside: levelset.HeavisideParams = levelset.HeavisideParams()
    weights: levelset.EnergyWeights = levelset.EnergyWeights()
    area: levelset.AreaPrior | None = None
    speed: geodesic.SpeedParams = geodesic.SpeedParams()
    var_floor: float = levelset.VAR_FLOOR_DEFAULT
    grad_floor: float = levelset.GRAD_FLOOR_DEFAULT
    mapping: str = "offset"
    distance_refresh: int = DISTANCE_REFRESH_DEFAULT

    def __post_init__(self):
        if self.distance_refresh < 1:
            raise InvalidInputError("distance_refresh must be at least 1")
        if self.mapping not in levelset.MASK_MAPPINGS:
            raise InvalidInputError(
                f"unknown mask mapping {self.mapping!r}, "
                f"expected one of {levelset.MASK_MAPPINGS}"
            )

    def area_prior(self, n_pixels: int) -> levelset.AreaPrior:
        if self.area is not None:
            return self.area
        # Neutral default: split the domain evenly.
        return levelset.AreaPrior(0.5 * n_pixels, 0.5 * n_pixels)


def _distance_or_zeros(image, mask_soft, cfg: GuidanceConfig) -> np.ndarray:
    seeds = binarize(mask_soft)
    if not seeds.any():
        warnings.warn(
            "empty thresholded mask, distance term disabled for this refresh",
            GuidanceFallbackWarning,
            stacklevel=3,
        )
        return np.zeros_like(image)
    dmap = geodesic.distance_for_mask(image, mask_soft, cfg.speed)
    return dmap.values


def chain_rule_grad(
    yt: np.ndarray,
    eps_hat: np.ndarray,
    t: int,
    sched: DiffusionSchedule,
    image: np.ndarray,
    cfg: GuidanceConfig = GuidanceConfig(),
    dist: np.ndarray | None = None,
) -> np.ndarray:
    """Gradient of the contour energy at y0_hat, pulled back to y_t.

    The clean estimate is clamped to [0, 1] before the energy sees it;
    pixels clamped away contribute zero gradient.  Region statistics are
    computed once at the clamped estimate and frozen.  A degenerate mask
    (all inside or all outside) yields a zero gradient and a warning
    instead of aborting the sampler.
    """
    i = _check_t(t, sched)
    image = as_field(image, "image")
    yhat0 = predict_y0(yt, eps_hat, t, sched)
    y = np.clip(yhat0, 0.0, 1.0)
    interior = (yhat0 > 0.0) & (yhat0 < 1.0)
    if dist is None:
        dist = _distance_or_zeros(image, y, cfg)
    try:
        g = levelset.grad_energy_wrt_mask(
            image,
            y,
            cfg.heaviside,
            cfg.weights,
            cfg.area_prior(image.size),
            dist,
            freeze_stats=True,
            var_floor=cfg.var_floor,
            grad_floor=cfg.grad_floor,
            mapping=cfg.mapping,
        )
    except DegenerateRegionError:
        warnings.warn(
            "degenerate region statistics, guidance gradient set to zero",
            GuidanceFallbackWarning,
            stacklevel=2,
        )
        return np.zeros_like(image)
    return (interior * g) / np.sqrt(sched.alpha_bar[i])


# ---------------------------------------------------------------------------
# Analytic score providers
# ---------------------------------------------------------------------------


def _logsumexp(x: np.ndarray) -> float:
    m = float(np.max(x))
    return m + float(np.log(np.exp(x - m).sum()))


@dataclass(frozen=True)
class MixtureMaskProvider:
    """Exact eps-prediction for a Gaussian mixture over reference masks.

    The clean-mask prior is sum_k w_k N(y^k, s^2 I); after forward noising
    to step t the marginal is a mixture with means sqrt(abar_t) y^k and
    isotropic variance v_t = abar_t s^2 + 1 - abar_t, whose score is the
    responsibility-weighted pull toward the component means.
    """

    masks: tuple[np.ndarray, ...]
    weights: tuple[float, ...]
    noise_scale: float = 0.0

    def __post_init__(self):
        if len(self.masks) == 0:
            raise InvalidInputError("mixture needs at least one mask")
        if len(self.weights) != len(self.masks):
            raise InvalidInputError("mixture weights and masks must pair up")
        masks = tuple(as_field(m, "mode mask") for m in self.masks)
        check_same_shape(*masks)
        object.__setattr__(self, "masks", masks)
        w = np.asarray(self.weights, dtype=np.float64)
        if np.any(w <= 0):
            raise InvalidInputError("mixture weights must be positive")
        if abs(float(w.sum()) - 1.0) > 1e-9:
            raise InvalidInputError("mixture weights must sum to 1")
        if self.noise_scale < 0:
            raise InvalidInputError("noise scale must be non-negative")

    def marginal_variance(self, t: int, sched: DiffusionSchedule) -> float:
        i = _check_t(t, sched)
        abar = float(sched.alpha_bar[i])
        return abar * self.noise_scale**2 + (1.0 - abar)

    def _log_terms(self, yt, t, sched) -> np.ndarray:
        i = _check_t(t, sched)
        root_abar = float(np.sqrt(sched.alpha_bar[i]))
        v = self.marginal_variance(t, sched)
        return np.array(
            [
                np.log(w) - float(((yt - root_abar * m) ** 2).sum()) / (2.0 * v)
                for m, w in zip(self.masks, self.weights)
            ]
        )

    def responsibilities(self, yt: np.ndarray, t: int, sched: DiffusionSchedule) -> np.ndarray:
        terms = self._log_terms(as_field(yt, "yt"), t, sched)
        shifted = terms - terms.max()
        e = np.exp(shifted)
        return e / e.sum()

    def log_marginal(self, yt: np.ndarray, t: int, sched: DiffusionSchedule) -> float:
        yt = as_field(yt, "yt")
        v = self.marginal_variance(t, sched)
        const = -0.5 * yt.size * np.log(2.0 * np.pi * v)
        return _logsumexp(self._log_terms(yt, t, sched)) + const

    def eps_hat(self, yt: np.ndarray, t: int, sched: DiffusionSchedule) -> np.ndarray:
        yt = as_field(yt, "yt")
        check_same_shape(yt, self.masks[0])
        i = _check_t(t, sched)
        root_abar = float(np.sqrt(sched.alpha_bar[i]))
        v = self.marginal_variance(t, sched)
        r = self.responsibilities(yt, t, sched)
        ybar = sum(rk * m for rk, m in zip(r, self.masks))
        score = (root_abar * ybar - yt) / v
        return score_to_eps(score, t, sched)


@dataclass(frozen=True)
class FrozenFieldProvider:
    """Returns one fixed eps-prediction field; for plumbing and tests."""

    eps_field: np.ndarray

    def eps_hat(self, yt: np.ndarray, t: int, sched: DiffusionSchedule) -> np.ndarray:
        _check_t(t, sched)
        eps = as_field(self.eps_field, "eps_field")
        check_same_shape(as_field(yt, "yt"), eps)
        return eps


def mixture_score(
    yt: np.ndarray, t: int, sched: DiffusionSchedule, provider: MixtureMaskProvider
) -> np.ndarray:
    """Free-function form of the mixture provider's eps-prediction."""
    return provider.eps_hat(yt, t, sched)


# ---------------------------------------------------------------------------
# Sampler
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleResult:
    """Ensemble-mean mask, per-step energies of the first member, and the
    step indices (t running T..1) the trace rows correspond to."""

    mask: np.ndarray
    trace: np.ndarray
    t_steps: np.ndarray


def sample(
    image: np.ndarray,
    provider,
    sched: DiffusionSchedule,
    gp: GuidancePolicy,
    seed: int,
    ensemble: int = 1,
    cfg: GuidanceConfig = GuidanceConfig(),
    guidance_space: str = "noise",
) -> SampleResult:
    """Run guided reverse diffusion from pure noise, averaged over an ensemble.

    Every ensemble member draws its own noise stream derived from (seed,
    member), runs T reverse steps with guidance injected at each one, and
    the member means are averaged in fixed order and clamped to [0, 1].
    The energy trace follows member 0.  Identical (seed, config) inputs
    reproduce bit-identical results; gamma0 = 0 takes exactly the
    unguided path.
    """
    if ensemble < 1:
        raise InvalidInputError("ensemble must be at least 1")
    if guidance_space not in GUIDANCE_SPACES:
        raise InvalidInputError(
            f"unknown guidance space {guidance_space!r}, expected one of {GUIDANCE_SPACES}"
        )
    image = as_field(image, "image")
    shape = image.shape
    guided = gp.gamma0 > 0
    trace = np.full((sched.T, 5), np.nan)
    t_steps = np.arange(sched.T, 0, -1)
    accum = np.zeros(shape)

    for member in range(ensemble):
        y = rng.normals(rng.derive_key(seed, _MEMBER_TAG, member, _INIT_TAG), shape)
        dist = None
        for step_index, t in enumerate(t_steps):
            t = int(t)
            eps_hat = as_field(provider.eps_hat(y, t, sched), "eps_hat")
            needs_energy = guided or member == 0
            if needs_energy and step_index % cfg.distance_refresh == 0:
                y0_est = np.clip(predict_y0(y, eps_hat, t, sched), 0.0, 1.0)
                dist = _distance_or_zeros(image, y0_est, cfg)
            if member == 0:
                trace[step_index] = _trace_row(image, y, eps_hat, t, sched, cfg, dist)
            if guided:
                g = chain_rule_grad(y, eps_hat, t, sched, image, cfg, dist=dist)
                if guidance_space == "noise":
                    eps_use = guided_eps(eps_hat, g, t, sched, gp)
                else:
                    gamma_eps = guidance_scale(gp, t, sched)
                    gamma_st = gamma_eps / float(np.sqrt(1.0 - sched.alpha_bar[t - 1]))
                    s = eps_to_score(eps_hat, t, sched)
                    eps_use = score_to_eps(guided_score(s, g, gamma_st), t, sched)
            else:
                eps_use = eps_hat
            if t > 1:
                xi = rng.normals(rng.derive_key(seed, _MEMBER_TAG, member, _STEP_TAG, t), shape)
            else:
                xi = np.zeros(shape)
            y = reverse_step(y, eps_use, t, sched, xi)
        accum += y

    mask = np.clip(accum / ensemble, 0.0, 1.0)
    return SampleResult(mask=mask, trace=trace, t_steps=t_steps)


def _trace_row(image, y, eps_hat, t, sched, cfg, dist):
    yc = np.clip(predict_y0(y, eps_hat, t, sched), 0.0, 1.0)
    if dist is None:
        dist = np.zeros_like(image)
    try:
        report = levelset.energy_total(
            image,
            levelset.mask_to_levelset(yc, cfg.mapping),
            cfg.heaviside,
            cfg.weights,
            cfg.area_prior(image.size),
            dist,
            var_floor=cfg.var_floor,
        )
    except DegenerateRegionError:
        return np.full(5, np.nan)
    return report.as_row()


# ---------------------------------------------------------------------------
# Loss assembly
# ---------------------------------------------------------------------------


def dpm_loss(eps_true: np.ndarray, eps_hat: np.ndarray, w_t: float = 1.0) -> float:
    """Weighted mean squared error of the noise prediction."""
    if w_t <= 0:
        raise InvalidInputError("w_t must be positive")
    eps_true = as_field(eps_true, "eps_true")
    eps_hat = as_field(eps_hat, "eps_hat")
    check_same_shape(eps_true, eps_hat)
    return w_t * float(np.mean((eps_true - eps_hat) ** 2))


def total_loss(
    l_dpm: float, l_lsf: float, l_par: float, eta1: float = 0.5, eta2: float = 0.005
) -> float:
    """Training-style total: l_dpm + eta1 * l_lsf + eta2 * l_par."""
    return float(l_dpm + eta1 * l_lsf + eta2 * l_par)
