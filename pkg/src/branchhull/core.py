"""Problem instances, the seeded Gaussian model, balancing and error metrics.

Random draws come from numpy's PCG64 bit generator (O'Neill 2014), whose
``random()`` doubles are the top 53 bits of each 64-bit output scaled by
2**-53.  Normals are produced from that uniform stream with the Box-Muller
transform so that any implementation of PCG64 + Box-Muller reproduces the
same instances.  Draw order for :func:`generate_instance`:

1. ``B`` (L x K), column-major
2. ``C`` (L x N), column-major
3. ``h_nat`` then ``m_nat`` (only for gaussian targets)
4. ``xi`` (L uniforms; skipped when there is no noise)
5. replacement rows of ``B`` and ``C`` for any row where
   ``b_l^T h_nat == 0`` or ``c_l^T m_nat == 0``, in increasing row order
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

__all__ = [
    "GaussianStream",
    "NoiseModel",
    "ProblemInstance",
    "GroundTruth",
    "BalancedSignal",
    "generate_instance",
    "make_instance",
    "balance",
    "recovery_error",
    "check_feasible",
    "constraint_violation",
    "instance_to_json",
    "instance_from_json",
    "dumps",
]

NoiseKind = Literal["none", "uniform", "one-sided"]
Target = Literal["standard-basis", "gaussian"]


class GaussianStream:
    """Uniform and Box-Muller normal draws from a PCG64 stream.

    Normals are generated in pairs ``(r cos 2 pi u2, r sin 2 pi u2)`` with
    ``r = sqrt(-2 log(1 - u1))``; an odd request keeps the spare value for
    the next call.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))
        self._spare: float | None = None

    def uniform(self, n: int) -> np.ndarray:
        return self._gen.random(n)

    def normal(self, n: int) -> np.ndarray:
        out = np.empty(n)
        k = 0
        if n and self._spare is not None:
            out[0] = self._spare
            self._spare = None
            k = 1
        rest = n - k
        pairs = (rest + 1) // 2
        if pairs:
            u = self._gen.random(2 * pairs).reshape(pairs, 2)
            r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
            theta = 2.0 * np.pi * u[:, 1]
            z = np.column_stack((r * np.cos(theta), r * np.sin(theta))).ravel()
            out[k:] = z[:rest]
            if rest % 2:
                self._spare = float(z[-1])
        return out

    def matrix(self, rows: int, cols: int) -> np.ndarray:
        return self.normal(rows * cols).reshape((rows, cols), order="F")


def _frozen(x) -> np.ndarray:
    a = np.array(x, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NoiseModel:
    """Multiplicative noise law; ``xi`` is drawn entrywise i.i.d.

    ``kind`` is ``"none"``, ``"uniform"`` (on ``[-alpha, alpha]``) or
    ``"one-sided"`` (on ``[-alpha, 0]``).
    """

    kind: NoiseKind = "none"
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "uniform", "one-sided"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not self.alpha >= 0:
            raise ValueError("noise alpha must be >= 0")

    def draw(self, stream: GaussianStream, L: int) -> np.ndarray:
        if self.kind == "none" or self.alpha == 0:
            return np.zeros(L)
        u = stream.uniform(L)
        if self.kind == "uniform":
            return self.alpha * (2.0 * u - 1.0)
        return -self.alpha * u

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha}


@dataclass(frozen=True)
class ProblemInstance:
    """Observable data ``(B, C, y, s)``."""

    B: np.ndarray
    C: np.ndarray
    y: np.ndarray
    s: np.ndarray
    seed: int | None = None
    noise: NoiseModel = field(default_factory=NoiseModel)

    def __post_init__(self):
        object.__setattr__(self, "B", _frozen(np.atleast_2d(self.B)))
        object.__setattr__(self, "C", _frozen(np.atleast_2d(self.C)))
        object.__setattr__(self, "y", _frozen(np.atleast_1d(self.y)))
        object.__setattr__(self, "s", _frozen(np.atleast_1d(self.s)))
        L = self.B.shape[0]
        if self.C.shape[0] != L or self.y.shape != (L,) or self.s.shape != (L,):
            raise ValueError(
                f"inconsistent shapes B{self.B.shape} C{self.C.shape} "
                f"y{self.y.shape} s{self.s.shape}"
            )
        if min(self.B.shape + self.C.shape) < 1:
            raise ValueError("K, N and L must all be >= 1")
        if not np.all(np.isin(self.s, (-1.0, 0.0, 1.0))):
            raise ValueError("signs s must be in {-1, 0, 1}")

    @property
    def L(self) -> int:
        return self.B.shape[0]

    @property
    def K(self) -> int:
        return self.B.shape[1]

    @property
    def N(self) -> int:
        return self.C.shape[1]


@dataclass(frozen=True)
class GroundTruth:
    """Hidden signals and noise behind a generated instance."""

    h_nat: np.ndarray
    m_nat: np.ndarray
    xi: np.ndarray
    y_hat: np.ndarray

    def __post_init__(self):
        for name in ("h_nat", "m_nat", "xi", "y_hat"):
            object.__setattr__(self, name, _frozen(np.atleast_1d(getattr(self, name))))
        if not (np.any(self.h_nat) and np.any(self.m_nat)):
            raise ValueError("ground truth signals must be nonzero")

    @property
    def epsilon(self) -> float:
        """Noise level ``||xi||_inf``."""
        return float(np.max(np.abs(self.xi))) if self.xi.size else 0.0

    def balanced(self) -> "BalancedSignal":
        return balance(self.h_nat, self.m_nat)


@dataclass(frozen=True)
class BalancedSignal:
    h_bal: np.ndarray
    m_bal: np.ndarray


def make_instance(B, C, h_nat, m_nat, xi=None, *, seed=None, noise=None):
    """Build ``(ProblemInstance, GroundTruth)`` from explicit matrices and signals."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    h_nat = np.atleast_1d(np.asarray(h_nat, dtype=float))
    m_nat = np.atleast_1d(np.asarray(m_nat, dtype=float))
    L = B.shape[0]
    xi = np.zeros(L) if xi is None else np.asarray(xi, dtype=float)
    w = B @ h_nat
    x = C @ m_nat
    y_hat = w * x
    y = y_hat * (1.0 + xi)
    s = np.sign(w)
    inst = ProblemInstance(B, C, y, s, seed=seed, noise=noise or NoiseModel())
    return inst, GroundTruth(h_nat, m_nat, xi, y_hat)


def generate_instance(
    K: int,
    N: int,
    L: int,
    noise: NoiseModel | None = None,
    target: Target = "standard-basis",
    seed: int = 0,
):
    """Draw a random instance from the i.i.d. Gaussian subspace model.

    Parameters
    ----------
    K, N, L : int
        Dimensions of ``h``, ``m`` and the number of measurements.
    noise : NoiseModel, optional
        Multiplicative noise; defaults to no noise.
    target : {"standard-basis", "gaussian"}
        ``h_nat = e_1, m_nat = e_1`` or i.i.d. standard normal signals.
    seed : int
        Seed of the PCG64 stream; output is a pure function of the arguments.

    Returns
    -------
    (ProblemInstance, GroundTruth)
    """
    if min(K, N, L) < 1:
        raise ValueError(f"dimensions must be >= 1, got K={K}, N={N}, L={L}")
    noise = noise or NoiseModel()
    if target not in ("standard-basis", "gaussian"):
        raise ValueError(f"unknown target {target!r}")
    stream = GaussianStream(seed)
    B = stream.matrix(L, K)
    C = stream.matrix(L, N)
    if target == "standard-basis":
        h_nat = np.eye(K)[0]
        m_nat = np.eye(N)[0]
    else:
        h_nat = stream.normal(K)
        while not np.any(h_nat):
            h_nat = stream.normal(K)
        m_nat = stream.normal(N)
        while not np.any(m_nat):
            m_nat = stream.normal(N)
    xi = noise.draw(stream, L)
    for row in range(L):
        while B[row] @ h_nat == 0 or C[row] @ m_nat == 0:
            B[row] = stream.normal(K)
            C[row] = stream.normal(N)
    return make_instance(B, C, h_nat, m_nat, xi, seed=seed, noise=noise)


def balance(h, m) -> BalancedSignal:
    """Rescale ``(h, m)`` to equal norms while keeping ``h m^T`` fixed."""
    h = np.asarray(h, dtype=float)
    m = np.asarray(m, dtype=float)
    nh = np.linalg.norm(h)
    nm = np.linalg.norm(m)
    if nh == 0 or nm == 0:
        raise ValueError("cannot balance a zero vector")
    if nh == nm:
        return BalancedSignal(h.copy(), m.copy())
    return BalancedSignal(h * math.sqrt(nm / nh), m * math.sqrt(nh / nm))


def recovery_error(result, truth: GroundTruth) -> tuple[float, float, float]:
    """Distance of a solver result to the balanced truth.

    Returns
    -------
    absolute : float
        ``sqrt(||h* - h_bal||^2 + ||m* - m_bal||^2)``.
    relative : float
        ``absolute / sqrt(||h_bal||^2 + ||m_bal||^2)``.
    bound : float
        The noisy-case guarantee ``4 sqrt(eps) sqrt(||h_nat|| ||m_nat||)``.
    """
    bal = truth.balanced()
    absolute = math.sqrt(
        float(np.sum((result.h_star - bal.h_bal) ** 2) + np.sum((result.m_star - bal.m_bal) ** 2))
    )
    scale = math.sqrt(float(bal.h_bal @ bal.h_bal + bal.m_bal @ bal.m_bal))
    bound = 4.0 * math.sqrt(truth.epsilon) * math.sqrt(
        float(np.linalg.norm(truth.h_nat) * np.linalg.norm(truth.m_nat))
    )
    return absolute, absolute / scale, bound


def constraint_violation(instance: ProblemInstance, h, m) -> np.ndarray:
    """Per-row violation ``max(|y| - sign(y) p q, -s p, 0)`` with ``p = Bh, q = Cm``."""
    p = instance.B @ np.asarray(h, dtype=float)
    q = instance.C @ np.asarray(m, dtype=float)
    y = instance.y
    hyper = np.abs(y) - np.sign(y) * p * q
    half = -instance.s * p
    return np.maximum(np.maximum(hyper, half), 0.0)


def check_feasible(instance: ProblemInstance, h, m, tol: float = 0.0) -> bool:
    if tol < 0:
        raise ValueError("tol must be >= 0")
    return bool(np.all(constraint_violation(instance, h, m) <= tol))


# -- serialization ---------------------------------------------------------

def _render(obj) -> str:
    # json's float repr is the shortest round-trip form; the file format asks for 17 digits
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_render(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_render(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _render(obj.tolist())
    if isinstance(obj, (bool, np.bool_)) or obj is None or isinstance(obj, str):
        return json.dumps(obj if not isinstance(obj, np.bool_) else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return json.dumps(x)
        text = format(x, ".17g")
        return text if any(ch in text for ch in ".e") else text + ".0"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _render(obj)


def instance_to_json(instance: ProblemInstance, truth: GroundTruth | None = None) -> str:
    doc = {
        "K": instance.K,
        "N": instance.N,
        "L": instance.L,
        "B": instance.B,
        "C": instance.C,
        "y": instance.y,
        "s": [int(v) for v in instance.s],
        "seed": instance.seed,
        "noise": instance.noise.to_dict(),
    }
    if truth is not None:
        doc["truth"] = {
            "h_nat": truth.h_nat,
            "m_nat": truth.m_nat,
            "xi": truth.xi,
            "y_hat": truth.y_hat,
        }
    return dumps(doc)


def instance_from_json(text: str):
    """Parse a document written by :func:`instance_to_json`.

    Returns ``(instance, truth)``; ``truth`` is None when absent.
    """
    doc = json.loads(text)
    noise = NoiseModel(**doc.get("noise", {}))
    inst = ProblemInstance(
        np.array(doc["B"], dtype=float).reshape(doc["L"], doc["K"]),
        np.array(doc["C"], dtype=float).reshape(doc["L"], doc["N"]),
        np.array(doc["y"], dtype=float),
        np.array(doc["s"], dtype=float),
        seed=doc.get("seed"),
        noise=noise,
    )
    truth = None
    if doc.get("truth"):
        t = doc["truth"]
        truth = GroundTruth(t["h_nat"], t["m_nat"], t["xi"], t["y_hat"])
    return inst, truth
