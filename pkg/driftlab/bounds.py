import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
import scipy.linalg

from ._utils import max_pairwise_distance
from .types import FloatArray


class NonContractiveError(ValueError):
    pass


class CertificateSource(StrEnum):
    LMS = "lms"
    DIFFUSION = "diffusion"
    MULTITASK = "multitask"
    MANUAL = "manual"


@dataclass(frozen=True)
class ContractionCertificate:
    """
    Time-uniform bounds ``gamma_i <= gamma`` and ``delta_i <= delta`` of a
    mean-square contractive mapping.

    A certificate with ``gamma >= 1`` can be built (to report it), but every
    bound evaluation rejects it.
    """

    gamma: float
    delta: float
    source: CertificateSource = CertificateSource.MANUAL
    # small step-size form of gamma, when the derivation provides one
    surrogate_gamma: float | None = None
    # distance between the mean-square fixed point and the network objective's minimizer
    bias_bound: float | None = None

    def __post_init__(self) -> None:
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma!r}")
        if not self.delta >= 0:
            raise ValueError(f"delta must be nonnegative, got {self.delta!r}")

    @property
    def is_contractive(self) -> bool:
        return self.gamma < 1

    def require_contractive(self) -> "ContractionCertificate":
        if not self.is_contractive:
            raise NonContractiveError(
                f"{self.source} certificate is not contractive (gamma={self.gamma!r}); the step-size is too large"
            )
        return self


@dataclass(frozen=True)
class ProblemConstants:
    nu: float
    delta_lip: float
    alpha2: float = 0.0
    beta2: float = 0.0
    sigma_s2: float = 0.0
    disagreement: float = 0.0
    agents: int = 1
    c1: float = 1.0
    c2: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.nu <= self.delta_lip:
            raise ValueError(f"Need 0 < nu <= delta_lip, got nu={self.nu!r}, delta_lip={self.delta_lip!r}")
        for name in ("alpha2", "beta2", "sigma_s2", "disagreement", "c1", "c2"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)!r}")
        if self.agents < 1:
            raise ValueError(f"agents must be positive, got {self.agents!r}")

    @classmethod
    def least_squares(
        cls,
        covariance: FloatArray,
        noise_variance: float,
        fixed_points: FloatArray,
        *,
        exact: bool = False,
        c1: float = 1.0,
        c2: float = 1.0,
    ) -> "ProblemConstants":
        """
        Constants of local costs ``E(d_k - u^T w)^2`` with Gaussian regressors.

        The gradient noise ``(u u^T - R)(w - w_k) - u v`` has second moment at most
        ``beta2 ||w - w_k||^2 + sigma_s2``. Exact gradients have no noise at all.
        """
        eigenvalues = scipy.linalg.eigvalsh(covariance)
        points = np.asarray(fixed_points, dtype=np.float64).reshape(-1, np.shape(covariance)[0])
        nu = float(eigenvalues[0])
        if exact:
            beta2 = alpha2 = sigma_s2 = 0.0
        else:
            excess = gaussian_fourth_moment(covariance) - covariance @ covariance
            beta2 = float(scipy.linalg.eigvalsh(excess)[-1])
            alpha2 = beta2 / nu**2
            sigma_s2 = float(np.trace(covariance)) * noise_variance
        return cls(
            nu=nu,
            delta_lip=float(eigenvalues[-1]),
            alpha2=alpha2,
            beta2=beta2,
            sigma_s2=sigma_s2,
            disagreement=max_pairwise_distance(points),
            agents=points.shape[0],
            c1=c1,
            c2=c2,
        )

    @classmethod
    def logistic(
        cls,
        covariance: FloatArray,
        regularization: float,
        fixed_points: FloatArray,
        *,
        c1: float = 1.0,
        c2: float = 1.0,
    ) -> "ProblemConstants":
        """
        Constants of ``E log(1 + exp(-gamma h^T w)) + rho ||w||^2``.

        The logistic Hessian lies between 0 and ``R_h / 4``; the per-sample
        gradient norm is at most ``||h||``, so the noise is absorbed in
        ``sigma_s2 = Tr(R_h)``.
        """
        points = np.asarray(fixed_points, dtype=np.float64).reshape(-1, np.shape(covariance)[0])
        largest = float(scipy.linalg.eigvalsh(covariance)[-1])
        return cls(
            nu=2 * regularization,
            delta_lip=largest / 4 + 2 * regularization,
            sigma_s2=float(np.trace(covariance)),
            disagreement=max_pairwise_distance(points),
            agents=points.shape[0],
            c1=c1,
            c2=c2,
        )


def steady_state_bound(cert: ContractionCertificate, xi2: float, zero_mean: bool) -> float:
    """
    Limit of the mean-square deviation of a certificate under drift of second moment ``xi2``.

    Zero-mean drift gives ``(xi2 + delta) / (1 - gamma)``; otherwise
    ``xi2 / (1 - sqrt(gamma))^2 + delta / (1 - sqrt(gamma))``.
    """
    cert.require_contractive()
    if zero_mean:
        return (xi2 + cert.delta) / (1 - cert.gamma)
    root = 1 - math.sqrt(cert.gamma)
    return xi2 / root**2 + cert.delta / root


def transient_bound(
    cert: ContractionCertificate,
    xi2: float,
    zero_mean: bool,
    initial_msd: float,
    iterations: int,
) -> float:
    if iterations < 0:
        raise ValueError(f"iterations must be nonnegative, got {iterations}")

    bound = float(initial_msd)
    if iterations == 0:
        return bound
    if zero_mean:
        rate, offset = cert.gamma, xi2 + cert.delta
    else:
        rate = math.sqrt(cert.gamma)
        if xi2 > 0 and rate >= 1:
            # the biased drift term has no finite bound without contraction
            return math.inf
        offset = (xi2 / (1 - rate) if xi2 > 0 else 0.0) + cert.delta
    for _ in range(iterations):
        bound = rate * bound + offset
    return bound


def gaussian_fourth_moment(covariance: FloatArray) -> FloatArray:
    """E[u u^T u u^T] for zero-mean Gaussian ``u`` with covariance ``R``: ``R Tr(R) + 2 R^2``."""
    covariance = np.atleast_2d(np.asarray(covariance, dtype=np.float64))
    if covariance.shape[0] != covariance.shape[1] or not np.allclose(covariance, covariance.T, rtol=0, atol=1e-12):
        raise ValueError("Covariance must be a symmetric matrix")
    return covariance * np.trace(covariance) + 2 * covariance @ covariance


def lms_certificate(
    covariance: FloatArray,
    noise_variance: float,
    mu: float,
    allow_unstable: bool = False,
) -> ContractionCertificate:
    """
    Exact certificate of LMS with white Gaussian regressors.

    ``gamma = ||I - 2 mu R + mu^2 E[u u^T u u^T]||`` and ``delta = mu^2 Tr(R) sigma_v^2``.
    """
    if mu < 0:
        raise ValueError(f"Step-size must be nonnegative, got {mu!r}")
    covariance = np.atleast_2d(np.asarray(covariance, dtype=np.float64))
    identity = np.eye(covariance.shape[0])
    mapping = identity - 2 * mu * covariance + mu**2 * gaussian_fourth_moment(covariance)
    eigenvalues = scipy.linalg.eigvalsh(mapping)
    cert = ContractionCertificate(
        gamma=float(np.max(np.abs(eigenvalues))),
        delta=mu**2 * float(np.trace(covariance)) * noise_variance,
        source=CertificateSource.LMS,
        surrogate_gamma=1 - 2 * mu * float(scipy.linalg.eigvalsh(covariance)[0]),
        bias_bound=0.0,
    )
    return cert if allow_unstable else cert.require_contractive()


def lms_tracking_msd(covariance: FloatArray, noise_variance: float, mu: float, xi2: float, zero_mean: bool) -> float:
    covariance = np.atleast_2d(np.asarray(covariance, dtype=np.float64))
    smallest = float(scipy.linalg.eigvalsh(covariance)[0])
    noise = mu * float(np.trace(covariance)) * noise_variance
    if zero_mean:
        return xi2 / (2 * mu * smallest) + noise / (2 * smallest)
    return xi2 / (mu * smallest) ** 2 + noise / smallest


def diffusion_certificate(
    pc: ProblemConstants,
    mu: float,
    lambda2: float | None = None,
    allow_unstable: bool = False,
) -> ContractionCertificate:
    gamma = 1 - 2 * mu * pc.nu + mu**2 * pc.delta_lip**2 * (1 + 4 * pc.alpha2)
    delta = mu**2 * pc.agents * pc.sigma_s2 + mu**2 * pc.c1 * pc.alpha2 * pc.agents * pc.disagreement
    bias = None
    if lambda2 is not None:
        bias = mu**2 * pc.c2 * pc.agents * pc.disagreement / (1 - lambda2)
    cert = ContractionCertificate(gamma, delta, CertificateSource.DIFFUSION, bias_bound=bias)
    return cert if allow_unstable else cert.require_contractive()


def diffusion_tracking_msd(pc: ProblemConstants, mu: float, xi2: float, lambda2: float, zero_mean: bool) -> float:
    noise = pc.sigma_s2 + pc.c1 * pc.alpha2 * pc.disagreement
    bias = mu**2 * 2 * pc.c2 * pc.disagreement / (1 - lambda2)
    if zero_mean:
        return xi2 / (mu * pc.nu) + mu * noise / pc.nu + bias
    return 2 * xi2 / (mu * pc.nu) ** 2 + 2 * mu * noise / pc.nu**2 + bias


def multitask_certificate(
    pc: ProblemConstants,
    mu: float,
    eta: float,
    allow_unstable: bool = False,
) -> ContractionCertificate:
    gamma = 1 - 2 * mu * pc.nu + mu**2 * (pc.delta_lip**2 + 3 * pc.beta2)
    delta = mu**2 * pc.agents * pc.sigma_s2 + 3 * mu**2 * pc.c1 * pc.beta2 * pc.agents * pc.disagreement
    coupling = pc.c2 * eta**2
    bias = mu**2 * (coupling / (1 + coupling)) ** 2
    cert = ContractionCertificate(gamma, delta, CertificateSource.MULTITASK, bias_bound=bias)
    return cert if allow_unstable else cert.require_contractive()


def multitask_tracking_msd(pc: ProblemConstants, mu: float, eta: float, xi2: float, zero_mean: bool) -> float:
    # eta only enters through the O(mu^2) constant, taken as c2
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta!r}")
    tail = pc.c2 * mu**2
    if zero_mean:
        return xi2 / (mu * pc.nu) + mu * (pc.sigma_s2 + 3 * pc.c1 * pc.beta2 * pc.disagreement) / pc.nu + tail
    return (
        2 * xi2 / (mu * pc.nu) ** 2 + mu * (2 * pc.sigma_s2 + 6 * pc.c1 * pc.beta2 * pc.disagreement) / pc.nu**2 + tail
    )


@dataclass(frozen=True)
class BoundRow:
    algorithm: str
    mu: float
    eta: float
    xi2: float
    gamma: float
    delta: float
    bound_zm: float
    bound_biased: float
    stable: bool = field(default=True)


def bound_row(
    algorithm: str,
    cert: ContractionCertificate,
    mu: float,
    eta: float,
    xi2: float,
    normalizer: float = 1.0,
) -> BoundRow:
    """Both steady-state bounds of ``cert``, divided by ``normalizer``; infinite when unstable."""
    if cert.is_contractive:
        zero_mean = steady_state_bound(cert, xi2, zero_mean=True) / normalizer
        biased = steady_state_bound(cert, xi2, zero_mean=False) / normalizer
    else:
        zero_mean = biased = math.inf
    return BoundRow(algorithm, mu, eta, xi2, cert.gamma, cert.delta, zero_mean, biased, cert.is_contractive)


def bound_table(
    algorithm: str,
    certify: Callable[[float, float], ContractionCertificate],
    mus: Iterable[float],
    etas: Iterable[float],
    xi2: float,
    normalizer: float = 1.0,
) -> list[BoundRow]:
    """
    Tabulate the steady-state bounds over a step-size (and eta) grid.

    ``certify(mu, eta)`` must return the certificate without rejecting
    unstable step-sizes; such rows come back with ``stable=False``.
    """
    etas = list(etas)
    return [
        bound_row(algorithm, certify(mu, eta), mu, eta, xi2, normalizer)
        for mu in mus
        for eta in etas
    ]
