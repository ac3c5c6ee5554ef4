"""
Synthetic scenes with ground truth.

A scene is a Potts label field over the image grid, uniform abundances on the
simplex, and one mixing model per spatial class (linear, polynomial interaction,
bilinear, post-nonlinear, endmember variability or smooth mismodelling), plus
white Gaussian noise calibrated to a target SNR.

Every random draw comes from a counter-based Philox stream keyed by
(seed, stream, index), so a scene is a pure function of its SceneSpec and
per-pixel draws do not depend on evaluation order.
"""

import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import linalg

from resunmix.config import UnmixConfig, get_config

from .dictionaries import build_interaction_matrix
from .formats import read_matrix_csv
from .models import (
    AbundanceMatrix,
    ClassModel,
    EndmemberMatrix,
    EVClass,
    GBMClass,
    GroundTruth,
    LMMClass,
    MEClass,
    NLKClass,
    PPNMMClass,
    SceneSpec,
    SpectralCube,
)
from .validators import validate_positive_int

logger = logging.getLogger(__name__)

_STREAM_LABELS = 0
_STREAM_ABUNDANCES = 1
_STREAM_ENDMEMBERS = 2
_STREAM_PIXELS = 3
_STREAM_NOISE = 4

PRESETS = ("i1", "i2")


def _rng(seed: int, stream: int, *counters: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream, *counters])))


def sample_potts_labels(
    rows: int,
    cols: int,
    n_classes: int,
    beta: float,
    sweeps: Optional[int] = None,
    seed: int = 0,
    config: Optional[UnmixConfig] = None,
) -> np.ndarray:
    """
    Sample a Potts field by Gibbs sampling on the 4-neighbour lattice.

    Starts from i.i.d. uniform labels. Each sweep updates the two checkerboard
    colours in turn; within a colour the conditionals are independent, with
    p(label = c) proportional to exp(beta * #{neighbours labelled c}).

    Args:
        rows: Image rows
        cols: Image columns
        n_classes: Number of classes (>= 2)
        beta: Granularity (>= 0); 0 gives i.i.d. uniform labels
        sweeps: Number of full sweeps (defaults to config.potts_sweeps)
        seed: Random seed
        config: Configuration object (optional, uses global config if not provided)

    Returns:
        rows x cols int64 label map with values in [0, n_classes)
    """
    if config is None:
        config = get_config()
    validate_positive_int(rows, "rows")
    validate_positive_int(cols, "cols")
    if n_classes < 2:
        raise ValueError("n_classes must be >= 2")
    if beta < 0 or not math.isfinite(beta):
        raise ValueError(f"beta must be a non-negative finite number, got {beta}")
    sweeps = config.potts_sweeps if sweeps is None else validate_positive_int(sweeps, "sweeps")

    rng = _rng(seed, _STREAM_LABELS)
    labels = rng.integers(0, n_classes, size=(rows, cols))
    ii, jj = np.indices((rows, cols))
    colours = [(ii + jj) % 2 == 0, (ii + jj) % 2 == 1]

    for _ in range(sweeps):
        for colour in colours:
            counts = np.empty((n_classes, rows, cols))
            for c in range(n_classes):
                padded = np.pad((labels == c).astype(np.float64), 1)
                counts[c] = (
                    padded[:-2, 1:-1] + padded[2:, 1:-1] + padded[1:-1, :-2] + padded[1:-1, 2:]
                )
            logits = beta * counts
            probs = np.exp(logits - logits.max(axis=0, keepdims=True))
            cdf = np.cumsum(probs / probs.sum(axis=0, keepdims=True), axis=0)
            u = rng.random((rows, cols))
            draw = np.minimum((u[None] > cdf).sum(axis=0), n_classes - 1)
            labels = np.where(colour, draw, labels)

    return labels.astype(np.int64)


def sample_abundances(N: int, R: int, seed: int = 0) -> AbundanceMatrix:
    """Draw N abundance vectors uniformly on the simplex (normalized exponentials)."""
    validate_positive_int(N, "N")
    if R < 2:
        raise ValueError("R must be >= 2")
    E = _rng(seed, _STREAM_ABUNDANCES).standard_exponential((R, N))
    return AbundanceMatrix(data=E / E.sum(axis=0, keepdims=True))


def pairwise_angles(M: np.ndarray) -> np.ndarray:
    """Spectral angles in radians between all endmember pairs (i < j)."""
    unit = M / np.linalg.norm(M, axis=0, keepdims=True)
    cosines = np.clip(unit.T @ unit, -1.0, 1.0)
    i, j = np.triu_indices(M.shape[1], k=1)
    return np.arccos(cosines[i, j])


def _random_spectrum(grid: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n_bumps = int(rng.integers(3, 7))
    spectrum = np.full(grid.shape, rng.uniform(0.05, 0.3))
    for _ in range(n_bumps):
        center = rng.uniform(0.0, 1.0)
        width = rng.uniform(0.03, 0.15)
        height = rng.uniform(0.1, 0.6)
        spectrum += height * np.exp(-((grid - center) ** 2) / (2 * width**2))
    # Narrow absorption features
    for _ in range(int(rng.integers(2, 5))):
        center = rng.uniform(0.05, 0.95)
        width = rng.uniform(0.005, 0.02)
        depth = rng.uniform(0.2, 0.6)
        spectrum *= 1.0 - depth * np.exp(-((grid - center) ** 2) / (2 * width**2))
    return np.clip(spectrum, 0.01, 1.0)


def generate_endmembers(
    L: int, R: int, seed: int = 0, config: Optional[UnmixConfig] = None
) -> EndmemberMatrix:
    """
    Generate library-like synthetic endmember spectra.

    Each spectrum is a positive baseline plus 3 to 6 broad Gaussian bumps,
    multiplied by 2 to 4 narrow absorption dips and clipped to [0.01, 1]. Draws
    are repeated until every pairwise spectral angle reaches
    config.endmember_min_angle_deg.

    Raises:
        ValueError: If L < 8 or R < 2
        RuntimeError: If no admissible set is found within config.endmember_max_attempts
    """
    if config is None:
        config = get_config()
    validate_positive_int(L, "L")
    if L < 8:
        raise ValueError("L must be >= 8")
    if R < 2:
        raise ValueError("R must be >= 2")

    grid = np.linspace(0.0, 1.0, L)
    min_angle = math.radians(config.endmember_min_angle_deg)
    for attempt in range(config.endmember_max_attempts):
        rng = _rng(seed, _STREAM_ENDMEMBERS, attempt)
        M = np.column_stack([_random_spectrum(grid, rng) for _ in range(R)])
        if pairwise_angles(M).min() >= min_angle:
            logger.debug(f"Generated {R} endmembers (L={L}) after {attempt + 1} attempt(s)")
            return EndmemberMatrix(data=M)

    raise RuntimeError(
        f"Could not generate {R} endmembers with pairwise angles >= "
        f"{config.endmember_min_angle_deg} deg in {config.endmember_max_attempts} attempts"
    )


def load_endmembers(path: Union[str, Path]) -> EndmemberMatrix:
    """
    Read an L x R endmember CSV.

    Raises:
        ValueError: On malformed CSV, negative entries or duplicate columns
    """
    return EndmemberMatrix(data=read_matrix_csv(path))


def se_covariance(L: int, corr_len: float, jitter: float = 0.0) -> np.ndarray:
    """Squared-exponential covariance exp(-(i - j)^2 / (2 corr_len^2)) plus jitter * I."""
    validate_positive_int(L, "L")
    if not corr_len > 0:
        raise ValueError(f"corr_len must be positive, got {corr_len}")
    idx = np.arange(L, dtype=np.float64)
    cov = np.exp(-((idx[:, None] - idx[None, :]) ** 2) / (2.0 * corr_len**2))
    return cov + jitter * np.eye(L)


def _smooth_factor(L: int, corr_len: float, jitter: float) -> np.ndarray:
    cov = se_covariance(L, corr_len, jitter)
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        logger.warning(
            f"Cholesky failed for L={L}, corr_len={corr_len}; using a clipped eigendecomposition"
        )
        w, V = linalg.eigh(cov)
        return V * np.sqrt(np.clip(w, 0.0, None))[None, :]


class MixingCache:
    """Per-scene cache of interaction dictionaries and covariance factors."""

    def __init__(self, M: EndmemberMatrix, config: Optional[UnmixConfig] = None):
        self.M = M
        self.config = config if config is not None else get_config()
        self._dictionaries: Dict[int, np.ndarray] = {}
        self._factors: Dict[float, np.ndarray] = {}

    def interactions(self, order: int) -> np.ndarray:
        if order not in self._dictionaries:
            self._dictionaries[order] = build_interaction_matrix(self.M, order, self.config).Q
        return self._dictionaries[order]

    def smooth_factor(self, corr_len: Optional[float]) -> np.ndarray:
        L = self.M.n_bands
        length = L / 20.0 if corr_len is None else corr_len
        if length not in self._factors:
            self._factors[length] = _smooth_factor(L, length, self.config.covariance_jitter)
        return self._factors[length]


def _half_normal(rng: np.random.Generator, variance: float, size: int) -> np.ndarray:
    # Rejection: redraw negative coordinates until all are nonnegative
    sd = math.sqrt(variance)
    draw = rng.normal(0.0, sd, size)
    negative = draw < 0
    while negative.any():
        draw[negative] = rng.normal(0.0, sd, int(negative.sum()))
        negative = draw < 0
    return draw


def mix_pixel(
    model: ClassModel,
    M: EndmemberMatrix,
    a: np.ndarray,
    rng: np.random.Generator,
    cache: Optional[MixingCache] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Mix one pixel under a class model.

    Args:
        model: Class mixing model
        M: Endmember matrix
        a: Abundance vector on the simplex
        rng: Random generator of this pixel
        cache: Optional shared cache of dictionaries and covariance factors

    Returns:
        (spectrum, residual) with spectrum = M a + residual
    """
    if cache is None:
        cache = MixingCache(M)
    a = np.asarray(a, dtype=np.float64)
    linear = M.data @ a
    L, R = M.data.shape

    if isinstance(model, LMMClass):
        residual = np.zeros(L)
    elif isinstance(model, NLKClass):
        Q = cache.interactions(model.order)
        residual = Q @ _half_normal(rng, model.gamma_sigma2, Q.shape[1])
    elif isinstance(model, GBMClass):
        residual = np.zeros(L)
        for i in range(R):
            for j in range(i + 1, R):
                coeff = rng.uniform(model.coeff_lo, model.coeff_hi)
                residual += coeff * a[i] * a[j] * M.data[:, i] * M.data[:, j]
    elif isinstance(model, PPNMMClass):
        residual = model.b * linear * linear
    elif isinstance(model, EVClass):
        factor = cache.smooth_factor(model.corr_len)
        perturbations = math.sqrt(model.eps2) * (factor @ rng.standard_normal((L, R)))
        residual = perturbations @ a
    elif isinstance(model, MEClass):
        factor = cache.smooth_factor(model.corr_len)
        residual = math.sqrt(model.eps2) * (factor @ rng.standard_normal(L))
    else:
        raise ValueError(f"Unknown class model: {model!r}")

    return linear + residual, residual


def add_noise(clean: SpectralCube, snr_db: float, seed: int = 0) -> Tuple[SpectralCube, float]:
    """
    Add white Gaussian noise at a target SNR.

    sigma2 = ||clean||_F^2 / (L N 10^(snr_db / 10)); very large SNRs give sigma2 = 0.

    Raises:
        ValueError: If the clean cube has zero energy or snr_db is not finite
    """
    if not math.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db}")
    energy = float(np.sum(clean.data**2))
    if energy == 0:
        raise ValueError("cannot calibrate noise on a zero-energy cube")
    L, N = clean.data.shape
    with np.errstate(over="ignore"):
        ratio = np.power(10.0, snr_db / 10.0)
    sigma2 = float(energy / (L * N * ratio))
    noise = math.sqrt(sigma2) * _rng(seed, _STREAM_NOISE).standard_normal((L, N))
    noisy = SpectralCube(data=clean.data + noise, rows=clean.rows, cols=clean.cols)
    return noisy, sigma2


def preset_scene(
    name: str,
    n_endmembers: int = 3,
    rows: int = 100,
    cols: int = 100,
    n_bands: int = 207,
    snr_db: float = 25.0,
    seed: int = 0,
    beta: Optional[float] = None,
    config: Optional[UnmixConfig] = None,
) -> SceneSpec:
    """
    Scene recipe of a named preset.

    i1: LMM, NL-3, GBM and PPNMM classes. i2: LMM, EV and ME classes.

    Raises:
        ValueError: On an unknown preset name
    """
    if config is None:
        config = get_config()
    key = name.lower()
    classes: List[ClassModel]
    if key == "i1":
        classes = [LMMClass(), NLKClass(order=3), GBMClass(), PPNMMClass()]
    elif key == "i2":
        classes = [LMMClass(), EVClass(), MEClass()]
    else:
        raise ValueError(f"Unknown preset '{name}', expected one of {', '.join(PRESETS)}")
    return SceneSpec(
        rows=rows,
        cols=cols,
        n_bands=n_bands,
        n_endmembers=n_endmembers,
        classes=classes,
        beta=config.potts_beta if beta is None else beta,
        snr_db=snr_db,
        seed=seed,
    )


def build_scene(
    spec: SceneSpec,
    endmembers: Optional[EndmemberMatrix] = None,
    config: Optional[UnmixConfig] = None,
) -> GroundTruth:
    """
    Generate a scene and its ground truth.

    Args:
        spec: Scene recipe
        endmembers: Optional L x R endmembers; generated from the seed if not provided
        config: Configuration object (optional, uses global config if not provided)

    Returns:
        GroundTruth with labels, abundances, residuals, clean and noisy cubes

    Raises:
        ValueError: If the endmembers do not match the spec's dimensions
    """
    if config is None:
        config = get_config()

    if endmembers is None:
        endmembers = generate_endmembers(spec.n_bands, spec.n_endmembers, spec.seed, config)
    elif endmembers.data.shape != (spec.n_bands, spec.n_endmembers):
        raise ValueError(
            f"Endmembers have shape {endmembers.data.shape}, "
            f"scene needs {(spec.n_bands, spec.n_endmembers)}"
        )

    n_classes = len(spec.classes)
    if n_classes == 1:
        labels = np.zeros((spec.rows, spec.cols), dtype=np.int64)
    else:
        labels = sample_potts_labels(
            spec.rows, spec.cols, n_classes, spec.beta, seed=spec.seed, config=config
        )

    N = spec.rows * spec.cols
    abundances = sample_abundances(N, spec.n_endmembers, spec.seed)
    cache = MixingCache(endmembers, config)
    clean = np.empty((spec.n_bands, N))
    residuals = np.empty((spec.n_bands, N))
    flat_labels = labels.ravel()
    for n in range(N):
        model = spec.classes[flat_labels[n]]
        rng = _rng(spec.seed, _STREAM_PIXELS, n)
        clean[:, n], residuals[:, n] = mix_pixel(
            model, endmembers, abundances.data[:, n], rng, cache
        )

    clean_cube = SpectralCube(data=clean, rows=spec.rows, cols=spec.cols)
    noisy, sigma2 = add_noise(clean_cube, spec.snr_db, spec.seed)
    counts = np.bincount(flat_labels, minlength=n_classes)
    logger.info(
        f"Built scene {spec.rows}x{spec.cols}, L={spec.n_bands}, R={spec.n_endmembers}, "
        f"classes={dict(zip(spec.class_names, counts.tolist()))}, sigma2={sigma2:.3e}"
    )
    return GroundTruth(
        spec=spec,
        labels=labels,
        endmembers=endmembers,
        abundances=abundances,
        residuals=residuals,
        clean=clean_cube,
        noisy=noisy,
        sigma2=sigma2,
    )
