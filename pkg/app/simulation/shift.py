"""MAS chemical-shift interaction.

The frequency seen by the spin is

    w(t) = d0 + d P2(cos theta) [P2(cos beta) - (eta/2) sin^2 beta cos 2 gamma]
           + (sqrt(3)/2) d xi(t),
    xi(t) = C1 cos(w_r t) + S1 sin(w_r t) + C2 cos(2 w_r t) + S2 sin(2 w_r t),

and H_CS(t) = -I_z w(t). Because the Hamiltonian commutes with itself at
all times, the propagator is diag(exp(-i eps_p Phi(t) / 2)) with
Phi(t) = int_0^t w, and Phi splits into d_eff t plus the periodic rotor-phase
function Psi(w_r t) - Psi(0).
"""

import math
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from app.core.config import settings
from app.core.exceptions import ConvergenceError, ValidationError
from app.core.logging import get_logger
from app.models.floquet import SPIN_DIM, FloquetOperator, ModeTruncation
from app.models.spin import (
    OrientationCoefficients,
    RfPulse,
    RotorConfig,
    SidebandProfile,
    ProfileKind,
    SpinParams,
)
from app.simulation.floquet import (
    SPIN_HALF_X,
    SPIN_HALF_Y,
    SPIN_HALF_Z,
    assemble_floquet_hamiltonian,
)

logger = get_logger("floquetsim.shift")

MODULATION_SCALE = math.sqrt(3.0) / 2.0
SIMPLIFIED_RF_LIMIT = 0.1


def orientation_coefficients(params: SpinParams, rotor: RotorConfig) -> OrientationCoefficients:
    """Cos/sin amplitudes of the first two rotor harmonics.

    The sin(2 w_r t) amplitude carries +eta/2 cos 2gamma (1 + cos^2 beta) so
    that alpha acts as a pure rotor-phase offset, as the Wigner rotation of
    the tensor requires.
    """
    a, b, g = params.euler
    eta = params.eta
    th = rotor.angle
    s2t = math.sin(2.0 * th)
    st2 = math.sin(th) ** 2
    sb, cb = math.sin(b), math.cos(b)
    first = cb * (eta * math.cos(2.0 * g) + 3.0)
    skew1 = eta * math.sin(2.0 * g)
    C1 = 0.5 * s2t * sb * (-first * math.cos(a) + skew1 * math.sin(a))
    S1 = 0.5 * s2t * sb * (first * math.sin(a) + skew1 * math.cos(a))
    axial = 1.5 * sb * sb - 0.5 * eta * math.cos(2.0 * g) * (1.0 + cb * cb)
    skew2 = eta * cb * math.sin(2.0 * g)
    C2 = 0.5 * st2 * (axial * math.cos(2.0 * a) + skew2 * math.sin(2.0 * a))
    S2 = 0.5 * st2 * (-axial * math.sin(2.0 * a) + skew2 * math.cos(2.0 * a))
    return OrientationCoefficients(C1=C1, S1=S1, C2=C2, S2=S2)


def static_anisotropic_shift(params: SpinParams, rotor: RotorConfig) -> float:
    """Time-independent anisotropic term; zero at the magic angle."""
    b, g = params.beta, params.gamma
    p2b = 0.5 * (3.0 * math.cos(b) ** 2 - 1.0)
    return params.delta_aniso * rotor.p2 * (p2b - 0.5 * params.eta * math.sin(b) ** 2 * math.cos(2.0 * g))


def effective_isotropic(params: SpinParams, rotor: RotorConfig) -> float:
    return params.delta_iso + static_anisotropic_shift(params, rotor)


def cs_frequency(params: SpinParams, rotor: RotorConfig, t) -> np.ndarray:
    """w(t) in rad/s; accepts scalar or array t."""
    c = orientation_coefficients(params, rotor)
    phi = rotor.spinning_speed * np.asarray(t, dtype=float)
    xi = c.C1 * np.cos(phi) + c.S1 * np.sin(phi) + c.C2 * np.cos(2 * phi) + c.S2 * np.sin(2 * phi)
    return effective_isotropic(params, rotor) + MODULATION_SCALE * params.delta_aniso * xi


def cs_hamiltonian(params: SpinParams, rotor: RotorConfig, t: float) -> np.ndarray:
    """H_CS(t) = -I_z w(t), a diagonal 2x2 matrix."""
    return -SPIN_HALF_Z * float(cs_frequency(params, rotor, t))


def cs_fourier_blocks(params: SpinParams, rotor: RotorConfig) -> Dict[int, np.ndarray]:
    """Fourier components h^k of H_CS(t) for k = -2..2."""
    c = orientation_coefficients(params, rotor)
    amp = MODULATION_SCALE * params.delta_aniso
    blocks = {0: -SPIN_HALF_Z * effective_isotropic(params, rotor)}
    for k, (ck, sk) in ((1, (c.C1, c.S1)), (2, (c.C2, c.S2))):
        h = -SPIN_HALF_Z * amp * (ck - 1j * sk) / 2.0
        blocks[k] = h
        blocks[-k] = h.conj().T
    return blocks


def cs_floquet_hamiltonian(params: SpinParams, rotor: RotorConfig, truncation: ModeTruncation) -> FloquetOperator:
    """Floquet Hamiltonian of the chemical-shift interaction.

    Diagonal blocks -I_z d_eff + n w_r; offset +-1 and +-2 blocks carry the
    complex combinations (C_k -+ i S_k), i.e. (sqrt(3)/8) d (C_k -+ i S_k)
    per spin after the 1/2 of I_z.
    """
    return assemble_floquet_hamiltonian(cs_fourier_blocks(params, rotor), rotor.spinning_speed, truncation)


def rotor_phase_function(params: SpinParams, rotor: RotorConfig, phi) -> np.ndarray:
    """Periodic part Psi of the accumulated phase, as a function of rotor phase."""
    c = orientation_coefficients(params, rotor)
    w = rotor.spinning_speed
    phi = np.asarray(phi, dtype=float)
    return MODULATION_SCALE * params.delta_aniso * (
        (c.C1 / w) * np.sin(phi)
        - (c.S1 / w) * np.cos(phi)
        + (c.C2 / (2 * w)) * np.sin(2 * phi)
        - (c.S2 / (2 * w)) * np.cos(2 * phi)
    )


def accumulated_phase(params: SpinParams, rotor: RotorConfig, t) -> np.ndarray:
    """Phi(t) = int_0^t w(t') dt'."""
    t = np.asarray(t, dtype=float)
    psi = rotor_phase_function(params, rotor, rotor.spinning_speed * t)
    return effective_isotropic(params, rotor) * t + psi - rotor_phase_function(params, rotor, 0.0)


def exact_cs_propagator(params: SpinParams, rotor: RotorConfig, t: float) -> np.ndarray:
    """Closed-form propagator diag(exp(i Phi/2), exp(-i Phi/2))."""
    phase = float(accumulated_phase(params, rotor, t))
    return np.diag([np.exp(0.5j * phase), np.exp(-0.5j * phase)])


def _check_quadrature(points: int) -> None:
    if points < 64 or points & (points - 1):
        raise ValidationError("quadrature points must be a power of two >= 64")


def _phase_coefficients(params: SpinParams, rotor: RotorConfig, scale: float, points: int) -> np.ndarray:
    """FFT coefficients of exp(i scale Psi(phi)), length `points`."""
    phi = 2.0 * np.pi * np.arange(points) / points
    samples = np.exp(1j * scale * rotor_phase_function(params, rotor, phi))
    return np.fft.fft(samples) / points


def _coefficient(coeffs: np.ndarray, n: int) -> complex:
    # exp(i Psi) = sum_n F_n exp(i n phi); FFT bin j holds the exp(+i j phi) coefficient
    return complex(coeffs[n % coeffs.size])


def sideband_amplitudes(
    params: SpinParams,
    rotor: RotorConfig,
    K: int,
    quadrature_points: Optional[int] = None,
) -> SidebandProfile:
    """Sideband field amplitudes F_n and intensities A_n = |F_n|^2 for |n| <= K.

    F_n = (1/2pi) int exp(i[-n phi + Psi(phi)]) dphi, evaluated with the
    uniform trapezoid rule, which is spectrally accurate for the periodic
    integrand.
    """
    M = quadrature_points or settings.QUADRATURE_POINTS
    _check_quadrature(M)
    if K < 0:
        raise ValidationError("K must be non-negative")
    coeffs = _phase_coefficients(params, rotor, 1.0, M)
    fields = {n: _coefficient(coeffs, n) for n in range(-K, K + 1)}
    intensities = {n: abs(f) ** 2 for n, f in fields.items()}
    total = float(sum(intensities.values()))
    converged = total >= 1.0 - 1e-6
    if not converged:
        logger.warning(
            "Sideband sum below unity; increase K",
            extra={"event": "parseval_deficit", "K": K, "sum_an": total},
        )
    return SidebandProfile(
        amplitudes=intensities,
        kind=ProfileKind.INTENSITY,
        K=K,
        total=total,
        converged=converged,
        fields=fields,
    )


def sideband_intensities(
    params: SpinParams,
    rotor: RotorConfig,
    K: int,
    quadrature_points: Optional[int] = None,
) -> np.ndarray:
    """A_n for n = -K..K as an array, without the Parseval bookkeeping."""
    M = quadrature_points or settings.QUADRATURE_POINTS
    coeffs = _phase_coefficients(params, rotor, 1.0, M)
    idx = np.arange(-K, K + 1) % M
    return np.abs(coeffs[idx]) ** 2


def adaptive_truncation(
    params: SpinParams,
    rotor: RotorConfig,
    leakage: Optional[float] = None,
    max_K: Optional[int] = None,
    quadrature_points: Optional[int] = None,
) -> int:
    """Smallest K with sum_{|n|<=K} A_n >= 1 - leakage.

    Raises:
        ConvergenceError: If no K up to max_K reaches the threshold.
    """
    leakage = settings.ADAPTIVE_LEAKAGE if leakage is None else leakage
    max_K = settings.MAX_MODE_ORDER if max_K is None else max_K
    M = quadrature_points or settings.QUADRATURE_POINTS
    _check_quadrature(M)
    coeffs = _phase_coefficients(params, rotor, 1.0, M)
    total = abs(_coefficient(coeffs, 0)) ** 2
    K = 0
    while total < 1.0 - leakage:
        K += 1
        if K > max_K or 2 * K + 1 > M:
            raise ConvergenceError(
                f"sideband sum {total:.10f} short of unity by {1.0 - total:.3e} at K={K - 1}"
            )
        total += abs(_coefficient(coeffs, K)) ** 2 + abs(_coefficient(coeffs, -K)) ** 2
    return K


def propagator_truncation(params: SpinParams, rotor: RotorConfig) -> ModeTruncation:
    """Mode window for Floquet propagators: twice the sideband span plus margin."""
    return ModeTruncation(2 * adaptive_truncation(params, rotor) + 4)


def _rf_spin_hamiltonian(pulse: RfPulse) -> np.ndarray:
    phi = pulse.phase.angle
    return -pulse.omega1 * (math.cos(phi) * SPIN_HALF_X + math.sin(phi) * SPIN_HALF_Y)


def rf_spin_propagator(pulse: RfPulse) -> np.ndarray:
    """2x2 rotation exp(-i H_rf t_p)."""
    return linalg.expm(-1j * _rf_spin_hamiltonian(pulse) * pulse.width)


def rf_floquet_propagator(
    pulse: RfPulse,
    rotor: RotorConfig,
    truncation: ModeTruncation,
    exact: bool = True,
) -> FloquetOperator:
    """Floquet propagator of a pulse during which the shift is neglected.

    exact=True gives blocks U exp(-i n w_r t_p); exact=False repeats U on every
    mode and is only accepted when K w_r t_p <= 0.1.

    Raises:
        ValidationError: If the simplified form is requested outside its range.
    """
    U = rf_spin_propagator(pulse)
    w = rotor.spinning_speed
    modes = truncation.modes
    if exact:
        phases = np.exp(-1j * modes * w * pulse.width)
    else:
        bound = truncation.K * w * pulse.width
        if bound > SIMPLIFIED_RF_LIMIT:
            raise ValidationError(
                f"simplified pulse form invalid: K*w_r*t_p = {bound:.3g} exceeds {SIMPLIFIED_RF_LIMIT}"
            )
        phases = np.ones(modes.size)
    return FloquetOperator(np.kron(np.diag(phases), U), truncation, w)


def cs_propagator_components(
    params: SpinParams,
    rotor: RotorConfig,
    t: float,
    K: int,
    form: str = "exact",
    quadrature_points: Optional[int] = None,
) -> Dict[int, np.ndarray]:
    """Mode components U_n(t) of the chemical-shift propagator, n = -K..K.

    With form="exact" each component is <pn|exp(-i H_F t)|p0> exp(i n w_r t),
    so sum_n U_n(t) is the lab-frame propagator. With form="sideband" the
    components are the intensity-weighted phases A_n exp(-i eps_p (d0 + n w_r) t / 2).
    """
    if t < 0.0:
        raise ValidationError("time must be non-negative")
    M = quadrature_points or settings.QUADRATURE_POINTS
    _check_quadrature(M)
    w = rotor.spinning_speed
    d_eff = effective_isotropic(params, rotor)
    eps = (-1, 1)
    out: Dict[int, np.ndarray] = {n: np.zeros((SPIN_DIM, SPIN_DIM), dtype=complex) for n in range(-K, K + 1)}

    if form == "sideband":
        profile = sideband_amplitudes(params, rotor, K, M)
        for n in range(-K, K + 1):
            out[n] = np.diag([
                profile[n] * np.exp(-0.5j * e * (d_eff + n * w) * t) for e in eps
            ])
        return out
    if form != "exact":
        raise ValidationError(f"unknown propagator form '{form}'")

    s = np.arange(-K, K + 1)
    for p, e in enumerate(eps):
        coeffs = _phase_coefficients(params, rotor, -0.5 * e, M)
        G = lambda k: coeffs[k % M]  # noqa: E731
        conj_src = np.conj(G(-s))
        for n in range(-K, K + 1):
            value = np.sum(G(n - s) * conj_src * np.exp(-1j * s * w * t))
            out[n][p, p] = np.exp(-0.5j * e * d_eff * t) * value * np.exp(1j * n * w * t)
    return out


@lru_cache(maxsize=32)
def _factorials(j: int) -> Tuple[int, ...]:
    return tuple(math.factorial(i) for i in range(2 * j + 2))


def wigner_small_d(j: int, mp: int, m: int, beta: float) -> float:
    """Reduced Wigner matrix element d^j_{m' m}(beta)."""
    f = _factorials(j)
    pref = math.sqrt(f[j + mp] * f[j - mp] * f[j + m] * f[j - m])
    c, s = math.cos(beta / 2.0), math.sin(beta / 2.0)
    total = 0.0
    for k in range(max(0, m - mp), min(j + m, j - mp) + 1):
        num = (-1) ** (mp - m + k)
        den = f[j + m - k] * f[k] * f[mp - m + k] * f[j - mp - k]
        total += num / den * c ** (2 * j + m - mp - 2 * k) * s ** (mp - m + 2 * k)
    return pref * total


def wigner_frequency(params: SpinParams, rotor: RotorConfig, t) -> Tuple[float, np.ndarray]:
    """Anisotropic frequency from explicit rank-2 tensor rotation.

    Returns the static part and the time-dependent part (rad/s) obtained by
    rotating the principal-axis tensor into the rotor frame with D^2(gamma,
    beta, alpha + w_r t) and projecting onto the field direction through
    d^2_{m0}(theta). Independent of the closed-form coefficients.
    """
    a, b, g = params.euler
    d, eta = params.delta_aniso, params.eta
    rho = {0: d, 2: -eta * d / math.sqrt(6.0), -2: -eta * d / math.sqrt(6.0)}
    phi = rotor.spinning_speed * np.asarray(t, dtype=float)
    static = 0.0
    modulated = np.zeros_like(phi, dtype=complex)
    for mp in range(-2, 3):
        G = sum(r * np.exp(-1j * m * g) * wigner_small_d(2, m, mp, b) for m, r in rho.items())
        term = G * wigner_small_d(2, mp, 0, rotor.angle)
        if mp == 0:
            static = float(np.real(term))
        else:
            modulated = modulated + term * np.exp(-1j * mp * (a + phi))
    return static, np.real(modulated)


def wigner_orientation_coefficients(params: SpinParams, rotor: RotorConfig, samples: int = 256) -> OrientationCoefficients:
    """Recover C1, S1, C2, S2 by Fourier projection of the Wigner frequency."""
    if params.delta_aniso == 0.0:
        raise ValidationError("projection requires a non-zero anisotropy")
    t = rotor.period * np.arange(samples) / samples
    phi = rotor.spinning_speed * t
    _, mod = wigner_frequency(params, rotor, t)
    mod = mod / params.delta_aniso
    proj = lambda f: 2.0 * float(np.mean(mod * f))  # noqa: E731
    return OrientationCoefficients(
        C1=proj(np.cos(phi)), S1=proj(np.sin(phi)), C2=proj(np.cos(2 * phi)), S2=proj(np.sin(2 * phi))
    )
