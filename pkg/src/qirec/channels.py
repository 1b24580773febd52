"""Qubit channels and time-parameterised dynamical-map families.

Channels are stored as Choi matrices ``J = sum_ij L(|i><j|) (x) |i><j|``
(output factor first). Composition and inversion go through the Pauli
transfer matrix ``R_mn = Tr(s_m L(s_n)) / 2``.

Amplitude damping convention: ``|1>`` is the excited (decaying) level and
``|0>`` the ground level, so the lowering operator is ``|0><1|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .errors import SingularMapError, StepSizeError
from .qmat import I2, PAULIS, BlochAngle, basis_from_angle, eigvalsh

SPEED_OF_LIGHT = 2.99792458e8  # m/s
CP_TOL = 1e-9
TP_TOL = 1e-8
COND_LIMIT = 1e8
SINGULAR_TOL = 1e-12

_UNITS = [np.outer(np.eye(2)[i], np.eye(2)[j]).astype(complex) for i in range(2) for j in range(2)]


def omega_from_wavelength(nm: float) -> float:
    """Angular frequency (rad/s) of light with vacuum wavelength ``nm``."""
    return 2 * math.pi * SPEED_OF_LIGHT / (nm * 1e-9)


# ---------------------------------------------------------------------------
# channels


@dataclass(frozen=True, eq=False)
class QubitChannel:
    choi: np.ndarray
    trace_preserving: bool
    cp: bool

    @classmethod
    def from_choi(cls, choi) -> "QubitChannel":
        choi = np.array(choi, dtype=complex)
        if choi.shape != (4, 4):
            raise ValueError("qubit channel Choi matrix must be 4x4")
        choi.setflags(write=False)
        herm = 0.5 * (choi + choi.conj().T)
        min_eig = float(eigvalsh(herm)[-1])
        out_traced = np.einsum("aiaj->ij", choi.reshape(2, 2, 2, 2))
        tp = bool(np.max(np.abs(out_traced - I2)) <= TP_TOL)
        return cls(choi, tp, min_eig >= -CP_TOL)

    @classmethod
    def from_map(cls, fn: Callable[[np.ndarray], np.ndarray]) -> "QubitChannel":
        choi = sum(np.kron(fn(e), e) for e in _UNITS)
        return cls.from_choi(choi)

    @classmethod
    def from_kraus(cls, kraus) -> "QubitChannel":
        return cls.from_map(lambda x: sum(k @ x @ k.conj().T for k in kraus))

    @classmethod
    def from_ptm(cls, ptm) -> "QubitChannel":
        ptm = np.asarray(ptm)

        def fn(x):
            coeffs = np.array([0.5 * np.trace(p @ x) for p in PAULIS])
            out = ptm @ coeffs
            return sum(c * p for c, p in zip(out, PAULIS))

        return cls.from_map(fn)

    @classmethod
    def identity(cls) -> "QubitChannel":
        return cls.from_map(lambda x: x)

    @property
    def ptm(self) -> np.ndarray:
        r = np.array([[0.5 * np.trace(pm @ self.apply(pn)) for pn in PAULIS] for pm in PAULIS])
        if np.max(np.abs(r.imag)) < 1e-12:
            r = r.real
        return r

    def apply(self, rho) -> np.ndarray:
        """Act on a qubit operator (or a stack of them)."""
        j = self.choi.reshape(2, 2, 2, 2)
        return np.einsum("aibj,...ij->...ab", j, np.asarray(rho, dtype=complex))

    def choi_state(self) -> np.ndarray:
        """``(L x I)(|Phi><Phi|)`` for ``|Phi> = (|00>+|11>)/sqrt 2``."""
        return self.choi / 2


def apply_local_a(ch: QubitChannel, rho_ab) -> np.ndarray:
    """``(L x I)(rho_ab)`` for a two-qubit state or stack of states."""
    rho_ab = np.asarray(rho_ab, dtype=complex)
    shape = rho_ab.shape
    r = rho_ab.reshape(shape[:-2] + (2, 2, 2, 2))
    out = np.einsum("aibj,...ikjl->...akbl", ch.choi.reshape(2, 2, 2, 2), r)
    return out.reshape(shape)


def compose(a: QubitChannel, b: QubitChannel) -> QubitChannel:
    """The channel ``a o b`` (apply ``b`` first)."""
    return QubitChannel.from_ptm(a.ptm @ b.ptm)


def inverse(ch: QubitChannel, *, t: float | None = None) -> QubitChannel:
    """Linear inverse of ``ch``; raises :class:`SingularMapError` when ill-conditioned."""
    r = ch.ptm
    cond = np.linalg.cond(r)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularMapError("inverse", t, f"transfer matrix condition number {cond:.3g}")
    return QubitChannel.from_ptm(np.linalg.inv(r))


def dephasing_channel_from_kappa(kappa: complex, axis: BlochAngle = BlochAngle(0.0)) -> QubitChannel:
    """Populations in the ``axis`` eigenbasis fixed, coherence ``<n+|.|n->`` scaled by ``kappa``."""
    u = basis_from_angle(axis)
    mask = np.array([[1.0, kappa], [np.conj(kappa), 1.0]], dtype=complex)
    return QubitChannel.from_map(lambda x: u @ (mask * (u.conj().T @ x @ u)) @ u.conj().T)


def amplitude_damping_channel(g: complex) -> QubitChannel:
    """Excited population scaled by ``|g|^2``, coherence ``rho_10`` by ``g``."""
    if abs(g) > 1 + 1e-12:
        raise ValueError(f"|G| = {abs(g)} > 1")
    k0 = np.array([[1, 0], [0, g]], dtype=complex)
    k1 = np.array([[0, math.sqrt(max(0.0, 1 - abs(g) ** 2))], [0, 0]], dtype=complex)
    return QubitChannel.from_kraus([k0, k1])


def amplitude_damping_map(g: complex) -> QubitChannel:
    """Same linear action as :func:`amplitude_damping_channel` for any complex ``g``.

    With ``|g| > 1`` the map is trace preserving but not positive; such maps
    arise as intermediate maps of non-Markovian damping.
    """
    g = complex(g)
    m = abs(g) ** 2

    def fn(x):
        return np.array([[x[0, 0] + (1 - m) * x[1, 1], np.conj(g) * x[0, 1]],
                         [g * x[1, 0], m * x[1, 1]]], dtype=complex)

    return QubitChannel.from_map(fn)


def random_unitary_channel(weights) -> QubitChannel:
    """Pauli channel ``sum_i p_i s_i rho s_i``."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (4,) or np.any(w < -1e-12) or abs(w.sum() - 1) > 1e-9:
        raise ValueError(f"invalid Pauli weights {weights!r}")
    return QubitChannel.from_kraus([math.sqrt(max(p, 0.0)) * s for p, s in zip(w, PAULIS)])


# ---------------------------------------------------------------------------
# spectral profile and the decoherence factor


@dataclass(frozen=True)
class SpectralProfile:
    """Normalised Gaussian mixture for the spectral intensity ``|f(w)|^2``.

    ``components`` holds ``(weight, center_omega, sigma_omega)`` triples in
    rad/s.
    """

    components: tuple

    def __post_init__(self):
        comps = tuple(tuple(float(x) for x in c) for c in self.components)
        if not comps:
            raise ValueError("spectral profile needs at least one component")
        for w, _, s in comps:
            if w <= 0 or s <= 0:
                raise ValueError("weights and widths must be positive")
        if abs(sum(c[0] for c in comps) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        object.__setattr__(self, "components", comps)

    @classmethod
    def mixture(cls, weights, centers_omega, sigmas_omega) -> "SpectralProfile":
        total = float(sum(weights))
        return cls(tuple((w / total, c, s) for w, c, s in zip(weights, centers_omega, sigmas_omega)))

    @classmethod
    def gaussian(cls, sigma_hz: float, center_nm: float = 702.2) -> "SpectralProfile":
        """Single Gaussian with frequency standard deviation ``sigma_hz`` (Hz, not rad/s)."""
        return cls(((1.0, omega_from_wavelength(center_nm), 2 * math.pi * sigma_hz),))

    @classmethod
    def from_wavelengths(cls, weights, centers_nm, sigma_hz) -> "SpectralProfile":
        sig = [2 * math.pi * s for s in np.broadcast_to(sigma_hz, (len(weights),))]
        return cls.mixture(weights, [omega_from_wavelength(c) for c in centers_nm], sig)

    @property
    def carrier(self) -> float:
        return sum(w * c for w, c, _ in self.components)

    def intensity(self, omega):
        omega = np.asarray(omega, dtype=float)
        return sum(
            w * np.exp(-((omega - c) ** 2) / (2 * s**2)) / (s * math.sqrt(2 * math.pi))
            for w, c, s in self.components
        )

    def kappa(self, tau, carrier: float = 0.0):
        """``int |f(w)|^2 exp(-i (w - carrier) tau) dw`` in closed form."""
        tau = np.asarray(tau, dtype=float)
        out = sum(
            w * np.exp(-1j * (c - carrier) * tau) * np.exp(-0.5 * (s * tau) ** 2)
            for w, c, s in self.components
        )
        return complex(out) if out.ndim == 0 else out


def kappa(profile: SpectralProfile, tau):
    """Decoherence factor at effective optical path ``tau`` (seconds)."""
    if np.any(np.asarray(tau) < 0):
        raise ValueError("tau must be non-negative")
    return profile.kappa(tau)


# ---------------------------------------------------------------------------
# families


class Family(Protocol):
    def channel(self, t: float) -> QubitChannel: ...


@dataclass(frozen=True)
class IdentityFamily:
    def channel(self, t: float) -> QubitChannel:
        return QubitChannel.identity()


@dataclass(frozen=True)
class DephasingFamily:
    """Pure dephasing in the eigenbasis of ``sigma . axis``.

    ``path_scale`` converts time ``t`` into the optical path ``tau = path_scale * t``.
    With ``compensate_carrier`` the profile's mean frequency is removed from
    the phase of the decoherence factor, which is what a phase-compensating
    wave plate does.
    """

    profile: SpectralProfile
    axis: BlochAngle = BlochAngle(0.0)
    path_scale: float = 1.0
    compensate_carrier: bool = True

    def kappa(self, t):
        carrier = self.profile.carrier if self.compensate_carrier else 0.0
        return self.profile.kappa(self.path_scale * np.asarray(t, dtype=float), carrier)

    def channel(self, t: float) -> QubitChannel:
        if t < 0:
            raise ValueError("t must be non-negative")
        return dephasing_channel_from_kappa(self.kappa(t), self.axis)

    def intermediate(self, s: float, t: float) -> QubitChannel:
        ks = complex(self.kappa(s))
        if abs(ks) < SINGULAR_TOL:
            raise SingularMapError("intermediate_map", s, f"|kappa| = {abs(ks):.3g}")
        return dephasing_channel_from_kappa(complex(self.kappa(t)) / ks, self.axis)


def _ad_exponentials(gamma0, lam, t):
    d = np.sqrt(complex(lam**2 - 2 * gamma0 * lam))
    t = np.asarray(t, dtype=float)
    grow = np.exp((d - lam) * t / 2)
    decay = np.exp(-(d + lam) * t / 2)
    return d, grow, decay


@dataclass(frozen=True)
class AmplitudeDampingFamily:
    """Resonant Lorentzian-coupled qubit; non-Markovian when ``gamma0 > lam/2``."""

    gamma0: float
    lam: float

    def __post_init__(self):
        if self.gamma0 <= 0 or self.lam <= 0:
            raise ValueError("gamma0 and lambda must be positive")

    def G(self, t):
        d, grow, decay = _ad_exponentials(self.gamma0, self.lam, t)
        t = np.asarray(t, dtype=float)
        if abs(d) < 1e-12:
            out = np.exp(-self.lam * t / 2) * (1 + self.lam * t / 2)
        else:
            # e^{-lt/2} [cosh(dt/2) + (l/d) sinh(dt/2)] without overflow
            out = 0.5 * (1 + self.lam / d) * grow + 0.5 * (1 - self.lam / d) * decay
        out = np.asarray(out, dtype=complex)
        return complex(out) if out.ndim == 0 else out

    def G_dot(self, t):
        d, grow, decay = _ad_exponentials(self.gamma0, self.lam, t)
        t = np.asarray(t, dtype=float)
        if abs(d) < 1e-12:
            sinh_over_d = np.exp(-self.lam * t / 2) * t / 2
        else:
            sinh_over_d = 0.5 * (grow - decay) / d
        out = np.asarray(-self.gamma0 * self.lam * sinh_over_d, dtype=complex)
        return complex(out) if out.ndim == 0 else out

    @property
    def markovian(self) -> bool:
        return self.gamma0 < self.lam / 2

    def zeros(self, t_max: float) -> list[float]:
        """Times in ``(0, t_max]`` where ``G`` vanishes (non-Markovian regime only)."""
        disc = 2 * self.gamma0 * self.lam - self.lam**2
        if disc <= 0:
            return []
        w = math.sqrt(disc)
        out = []
        k = 0
        while True:
            tz = 2 * (math.pi - math.atan(w / self.lam) + k * math.pi) / w
            if tz > t_max:
                return out
            out.append(tz)
            k += 1

    def channel(self, t: float) -> QubitChannel:
        return amplitude_damping_channel(self.G(t))

    def intermediate(self, s: float, t: float) -> QubitChannel:
        gs = self.G(s)
        if abs(gs) < SINGULAR_TOL:
            raise SingularMapError("intermediate_map", s, f"|G| = {abs(gs):.3g}")
        return amplitude_damping_map(self.G(t) / gs)

    def rates(self, t: float) -> tuple[float, float]:
        """``(S(t), gamma(t))`` from ``-2 Im/Re (G'/G)``."""
        ratio = self.G_dot(t) / self.G(t)
        return (-2 * ratio.imag, -2 * ratio.real)

    def schedule(self) -> "GeneratorSchedule":
        return GeneratorSchedule("amplitude-damping", self.rates, self.zeros)


@dataclass(frozen=True)
class RandomUnitaryFamily:
    """Pauli-channel family; ``lambda_nm = 0`` selects the Markovian schedule."""

    c: float
    lambda_nm: float = 0.0

    def __post_init__(self):
        if self.c <= 0 or self.lambda_nm < 0:
            raise ValueError("need c > 0 and lambda >= 0")

    def weights(self, t: float) -> tuple[float, float, float, float]:
        ct = self.c * t
        e2 = math.exp(-2 * ct)
        if self.lambda_nm == 0:
            p0 = (1 + 3 * e2) / 4
            q = (1 - e2) / 4
            return (p0, q, q, q)
        e1 = math.exp(-ct - self.lambda_nm * math.sin(ct))
        p0 = (1 + e2 + 2 * e1) / 4
        p12 = (1 - e2) / 4
        p3 = (1 + e2 - 2 * e1) / 4
        return (p0, p12, p12, max(p3, 0.0))

    def eigenvalues(self, t: float) -> tuple[float, float, float]:
        """Transfer-matrix eigenvalues on sigma_x, sigma_y, sigma_z."""
        e2 = math.exp(-2 * self.c * t)
        if self.lambda_nm == 0:
            return (e2, e2, e2)
        e1 = math.exp(-self.c * t - self.lambda_nm * math.sin(self.c * t))
        return (e1, e1, e2)

    def channel(self, t: float) -> QubitChannel:
        return random_unitary_channel(self.weights(t))

    def intermediate(self, s: float, t: float) -> QubitChannel:
        # ratios of exponentials stay accurate where the weights themselves lose digits
        es = self.eigenvalues(s)
        if min(es) < SINGULAR_TOL:
            raise SingularMapError("intermediate_map", s, f"transfer eigenvalue {min(es):.3g}")
        ratios = [b / a for a, b in zip(es, self.eigenvalues(t))]
        return QubitChannel.from_ptm(np.diag([1.0, *ratios]))

    def rates(self, t: float) -> tuple[float, float, float]:
        # twice the nominal c/2 labels so the 1/2-prefactor generator reproduces weights()
        g3 = self.c if self.lambda_nm == 0 else self.c * self.lambda_nm * math.cos(self.c * t)
        return (self.c, self.c, g3)

    def schedule(self) -> "GeneratorSchedule":
        return GeneratorSchedule("multiple-decoherence", self.rates)


def ad_G(family: AmplitudeDampingFamily, t):
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be non-negative")
    return family.G(t)


def ru_weights(family: RandomUnitaryFamily, t: float):
    if t < 0:
        raise ValueError("t must be non-negative")
    return family.weights(t)


def dephasing_channel(family: DephasingFamily, t: float) -> QubitChannel:
    return family.channel(t)


# ---------------------------------------------------------------------------
# intermediate maps


def intermediate_map(family: Family, s: float, t: float) -> QubitChannel:
    """``L_{t,s} = L_t o L_s^{-1}``; may fail to be CP for non-Markovian families."""
    if t < s or s < 0:
        raise ValueError(f"need t >= s >= 0, got s={s}, t={t}")
    if t == s:
        return QubitChannel.identity()
    closed_form = getattr(family, "intermediate", None)
    if closed_form is not None:
        return closed_form(s, t)
    m = compose(family.channel(t), inverse(family.channel(s), t=s))
    return QubitChannel(m.choi, True, m.cp)


def is_cp_divisible(family: Family, tgrid) -> tuple[bool, float | None]:
    """Check every consecutive intermediate map on ``tgrid``.

    Returns ``(True, None)`` or ``(False, s)`` where ``s`` is the start of the
    first step whose intermediate map is not completely positive.
    """
    tgrid = np.asarray(tgrid, dtype=float)
    if np.any(np.diff(tgrid) <= 0):
        raise ValueError("time grid must be strictly increasing")
    for k in range(len(tgrid) - 1):
        if not intermediate_map(family, float(tgrid[k]), float(tgrid[k + 1])).cp:
            return False, float(tgrid[k])
    return True, None


# ---------------------------------------------------------------------------
# master equations


def _superop(left, right):
    """Row-major vectorisation: vec(L X R) = (L kron R^T) vec(X)."""
    return np.kron(left, right.T)


_SM = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|, lowering
_SP = _SM.conj().T
_SZ_AD = _SP @ _SM - _SM @ _SP  # +1 on the excited level |1>
_NUM = _SP @ _SM
_AD_HAM = -0.25j * (_superop(_SZ_AD, I2) - _superop(I2, _SZ_AD))
_AD_DIS = _superop(_SM, _SP) - 0.5 * (_superop(_NUM, I2) + _superop(I2, _NUM))
_PAULI_DIS = [_superop(s, s) - np.eye(4) for s in PAULIS[1:]]


@dataclass(frozen=True)
class GeneratorSchedule:
    """Time-dependent generator of a qubit master equation.

    ``amplitude-damping`` rates are ``(S, gamma)`` for
    ``-(i/4) S [sz, rho] + gamma (s- rho s+ - {s+ s-, rho}/2)``;
    ``multiple-decoherence`` rates are ``(g1, g2, g3)`` for
    ``(1/2) sum_i g_i (s_i rho s_i - rho)``.
    """

    kind: str
    rates: Callable[[float], tuple]
    # t_max -> times in (0, t_max] where the rates diverge
    singularities: Callable[[float], list] | None = None

    def __post_init__(self):
        if self.kind not in ("amplitude-damping", "multiple-decoherence"):
            raise ValueError(f"unknown generator kind {self.kind!r}")

    def generator(self, t: float) -> np.ndarray:
        r = self.rates(t)
        if self.kind == "amplitude-damping":
            return r[0] * _AD_HAM + r[1] * _AD_DIS
        return 0.5 * sum(g * d for g, d in zip(r, _PAULI_DIS))


def _to_columns(rho):
    if rho.shape == (2, 2):
        return rho.reshape(4, 1)
    # (a, b, a', b') -> rows (a, a'), columns (b, b')
    return rho.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)


def _from_columns(x, dim):
    if dim == 2:
        return x.reshape(2, 2)
    return x.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)


def integrate_master(schedule: GeneratorSchedule, rho0, tgrid, *, rate_step: float = 1e-3,
                     max_substeps: int = 2_000_000) -> list[np.ndarray]:
    """Fixed-step RK4 integration of a qubit master equation.

    A two-qubit ``rho0`` is evolved with the generator acting on the first
    qubit only. Each grid interval is split into substeps no longer than
    ``rate_step / max|rate|``. The grid may not straddle a singular time of
    the schedule (e.g. a zero of the amplitude-damping decoherence function).
    """
    rho0 = np.array(rho0, dtype=complex)
    dim = rho0.shape[0]
    if rho0.shape not in ((2, 2), (4, 4)):
        raise ValueError("rho0 must be 2x2 or 4x4")
    tgrid = np.asarray(tgrid, dtype=float)
    if np.any(np.diff(tgrid) <= 0):
        raise ValueError("time grid must be strictly increasing")
    singular = schedule.singularities(float(tgrid[-1])) if schedule.singularities else []
    for ts in singular:
        if tgrid[0] <= ts <= tgrid[-1]:
            raise StepSizeError("integrate_master", ts, "generator is singular inside the grid")

    x = _to_columns(rho0)
    out = [rho0.copy()]
    budget = max_substeps
    for k in range(len(tgrid) - 1):
        t0, t1 = float(tgrid[k]), float(tgrid[k + 1])
        dt = t1 - t0
        rate = max(np.max(np.abs(schedule.rates(t))) for t in (t0, 0.5 * (t0 + t1), t1))
        if not np.isfinite(rate):
            raise StepSizeError("integrate_master", t0, "non-finite rate")
        n = max(1, math.ceil(dt * rate / rate_step)) if rate > 0 else 1
        budget -= n
        if budget < 0:
            raise StepSizeError("integrate_master", t0, "substep budget exhausted")
        h = dt / n
        for i in range(n):
            t = t0 + i * h
            l1 = schedule.generator(t)
            l2 = schedule.generator(t + h / 2)
            l3 = schedule.generator(t + h)
            k1 = l1 @ x
            k2 = l2 @ (x + 0.5 * h * k1)
            k3 = l2 @ (x + 0.5 * h * k2)
            k4 = l3 @ (x + h * k3)
            x = x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = _from_columns(x, dim)
        drift = abs(np.trace(rho).real - 1.0)
        if drift > 1e-6:
            raise StepSizeError("integrate_master", t1, f"trace drift {drift:.3g}")
        if drift < 1e-9:
            rho = rho / np.trace(rho).real
            x = _to_columns(rho)
        out.append(rho)
    return out
