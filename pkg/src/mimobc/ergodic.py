"""Ergodic rate analysis for Gaussian channels.

Closed forms for the expected log-determinants that drive the high-power
rate expressions, built from the Digamma function at integer arguments
(the Gram matrix of an i.i.d. complex Gaussian channel is Wishart and the
diagonal blocks of its inverse are again inverse Wishart), plus Monte Carlo
estimators that validate them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import LN2
from .channel import (
    CorrelationModel,
    SystemProfile,
    COND_LIMIT,
    derive_seed,
    _sample_blocks,
)
from .errors import DomainError, NumericalRankError, ValidationError
from .mac import _batch_rate_loss

__all__ = [
    "EULER_GAMMA",
    "ErgodicClosedForm",
    "MonteCarloEstimate",
    "RateLossCell",
    "default_trials",
    "digamma_int",
    "ergodic_block_logdet",
    "ergodic_dpc_logdet",
    "ergodic_rate_loss",
    "ergodic_rate_loss_equal",
    "ergodic_rate_loss_single",
    "ergodic_summary",
    "monte_carlo_rate_loss",
    "power_offset_db",
    "rate_loss_grid",
]

#: Euler-Mascheroni constant.
EULER_GAMMA = 0.57721566490153286060651209

#: Fraction of Monte Carlo trials that may be discarded for numerical rank loss.
_DISCARD_FRACTION = 1e-3

_BATCH = 1024


def digamma_int(n: int) -> float:
    """Digamma function at a positive integer: psi(n) = -gamma + sum_{j<n} 1/j."""
    if int(n) != n or n < 1:
        raise DomainError(f"digamma recursion needs a positive integer, got {n!r}")
    total = -EULER_GAMMA
    for j in range(1, int(n)):
        total += 1.0 / j
    return total


def _require_feasible(base_antennas: int, total_antennas: int) -> None:
    if base_antennas < total_antennas:
        raise DomainError(
            f"closed forms need at least as many base antennas ({base_antennas}) "
            f"as terminal antennas in sum ({total_antennas})"
        )


def ergodic_dpc_logdet(
    profile: SystemProfile, correlation: CorrelationModel | None = None
) -> float:
    """Expected log2-determinant of the composite Gram matrix, in bits.

    Equals (1/ln 2) sum_{l=0}^{r-1} psi(N - l) plus the log2-determinants of
    the per-user correlation blocks; correlations only shift the curve.
    """
    n = profile.base_antennas
    r = profile.total_antennas
    _require_feasible(n, r)
    total = sum(digamma_int(n - el) for el in range(r)) / LN2
    if correlation is not None:
        total += sum(correlation.block_logdet2(k) for k in range(profile.num_users))
    return total


def ergodic_block_logdet(
    profile: SystemProfile, correlation: CorrelationModel | None, user: int
) -> float:
    """Expected log2-determinant of one diagonal block of the inverse Gram matrix.

    The uncorrelated block is inverse Wishart with N - r + r_k degrees of
    freedom, giving -(1/ln 2) sum_{l=0}^{r_k-1} psi(N - r + r_k - l); the
    user's correlation block contributes -log2 |C_k|.
    """
    n = profile.base_antennas
    r = profile.total_antennas
    _require_feasible(n, r)
    if not 0 <= user < profile.num_users:
        raise IndexError(f"user index {user} out of range for {profile.num_users} users")
    r_k = profile.user_antennas[user]
    total = -sum(digamma_int(n - r + r_k - el) for el in range(r_k)) / LN2
    if correlation is not None:
        total -= correlation.block_logdet2(user)
    return total


def _rate_loss_closed_form(base_antennas: int, user_antennas) -> float:
    total = sum(user_antennas)
    _require_feasible(base_antennas, total)
    loss = sum(digamma_int(base_antennas - el) for el in range(total))
    for r_k in user_antennas:
        loss -= sum(digamma_int(base_antennas - total + r_k - el) for el in range(r_k))
    return loss / LN2


def ergodic_rate_loss(profile: SystemProfile) -> float:
    """Expected rate loss of linear filtering below DPC, in bits.

    Takes no correlation argument: path losses and antenna correlations
    affect both strategies identically and cancel in the difference.
    """
    return _rate_loss_closed_form(profile.base_antennas, profile.user_antennas)


def ergodic_rate_loss_equal(num_users: int, antennas_each: int, base_antennas: int) -> float:
    """Expected rate loss when every one of K users has the same antenna count.

    Evaluates (1/ln 2) [sum_{l=1}^{(K-1) rbar} l / (N - l)
    + sum_{l=1}^{rbar-1} (K-1) l / (N - K rbar + l)]; the second sum is empty
    for single-antenna users.
    """
    if num_users < 1:
        raise DomainError(f"need at least one user, got {num_users}")
    if antennas_each < 1:
        raise DomainError(f"antenna count must be positive, got {antennas_each}")
    if base_antennas < num_users * antennas_each:
        raise DomainError(
            f"closed forms need at least as many base antennas ({base_antennas}) "
            f"as terminal antennas in sum ({num_users * antennas_each})"
        )
    total = 0.0
    for el in range(1, (num_users - 1) * antennas_each + 1):
        total += el / (base_antennas - el)
    for el in range(1, antennas_each):
        total += (num_users - 1) * el / (base_antennas - num_users * antennas_each + el)
    return total / LN2


def ergodic_rate_loss_single(num_users: int, base_antennas: int) -> float:
    """Expected rate loss for K single-antenna users: (1/ln 2) sum_{l<K} l / (N - l)."""
    if num_users < 1:
        raise DomainError(f"need at least one user, got {num_users}")
    if base_antennas < num_users:
        raise DomainError(
            f"closed forms need at least as many base antennas ({base_antennas}) "
            f"as users ({num_users})"
        )
    total = 0.0
    for el in range(1, num_users):
        total += el / (base_antennas - el)
    return total / LN2


def power_offset_db(rate_loss_bits: float, total_antennas: int) -> float:
    """Horizontal shift in dB between two parallel high-power rate curves.

    Two affine rate curves of slope r separated vertically by ``rate_loss_bits``
    are separated horizontally by (loss / r) * 10 log10(2) dB.
    """
    if total_antennas < 1:
        raise ValidationError(f"antenna total must be positive, got {total_antennas}")
    return rate_loss_bits / total_antennas * 10.0 * np.log10(2.0)


@dataclass(frozen=True)
class ErgodicClosedForm:
    """Closed-form ergodic log-determinants and rate loss, all in bits."""

    dpc_logdet_bits: float
    block_logdet_bits: tuple[float, ...]
    rate_loss_bits: float


def ergodic_summary(
    profile: SystemProfile, correlation: CorrelationModel | None = None
) -> ErgodicClosedForm:
    return ErgodicClosedForm(
        dpc_logdet_bits=ergodic_dpc_logdet(profile, correlation),
        block_logdet_bits=tuple(
            ergodic_block_logdet(profile, correlation, k) for k in range(profile.num_users)
        ),
        rate_loss_bits=ergodic_rate_loss(profile),
    )


def default_trials(profile: SystemProfile, base: int = 10_000) -> int:
    """Default Monte Carlo trial count; scaled by 10 at the fully loaded boundary.

    With no spare base antennas the inverse-Wishart log moments are heavy
    tailed and the estimator needs more samples for the same precision.
    """
    if profile.base_antennas == profile.total_antennas:
        return 10 * base
    return base


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Sample mean with its standard error and the sampling bookkeeping."""

    mean: float
    stderr: float
    trials: int
    seed: int
    discarded: int = 0

    def __post_init__(self) -> None:
        if self.trials < 2:
            raise ValidationError(f"need at least 2 trials, got {self.trials}")


def monte_carlo_rate_loss(
    profile: SystemProfile,
    correlation: CorrelationModel | None = None,
    trials: int | None = None,
    seed: int = 0,
) -> MonteCarloEstimate:
    """Monte Carlo estimate of the expected instantaneous rate loss.

    Trial t draws its channel from the stream seeded with
    ``derive_seed(seed, t)``, so the estimate is reproducible and independent
    of evaluation order; values are accumulated in trial order.  Draws whose
    Gram matrix is numerically rank deficient are redrawn from reserve
    streams, capped at 0.1% of the trial count.
    """
    if trials is None:
        trials = default_trials(profile)
    if trials < 2:
        raise ValidationError(f"need at least 2 trials, got {trials}")
    roots = None
    if correlation is not None:
        if correlation.antennas != profile.user_antennas:
            raise ValidationError(
                f"correlation blocks sized {correlation.antennas} do not match "
                f"user antennas {profile.user_antennas}"
            )
        roots = correlation.sqrt_blocks

    max_discards = int(_DISCARD_FRACTION * trials)
    discarded = 0
    values = np.empty(trials, dtype=float)
    n = profile.base_antennas
    r = profile.total_antennas

    for start in range(0, trials, _BATCH):
        count = min(_BATCH, trials - start)
        stack = np.empty((count, n, r), dtype=complex)
        for i in range(count):
            blocks = _sample_blocks(profile, roots, derive_seed(seed, start + i))
            stack[i] = np.concatenate(blocks, axis=1)
        grams = np.einsum("bij,bik->bjk", stack.conj(), stack)
        grams = 0.5 * (grams + grams.conj().swapaxes(-1, -2))
        eigen = np.linalg.eigvalsh(grams)
        bad = (eigen[:, 0] <= 0.0) | (eigen[:, -1] > COND_LIMIT * eigen[:, 0])
        for i in np.nonzero(bad)[0]:
            # redraw from reserve streams indexed past the trial range
            while True:
                discarded += 1
                if discarded > max_discards:
                    raise NumericalRankError(
                        f"more than {max_discards} rank-deficient draws in "
                        f"{trials} trials"
                    )
                blocks = _sample_blocks(
                    profile, roots, derive_seed(seed, trials + discarded - 1)
                )
                composite = np.concatenate(blocks, axis=1)
                gram = composite.conj().T @ composite
                gram = 0.5 * (gram + gram.conj().T)
                vals = np.linalg.eigvalsh(gram)
                if vals[0] > 0.0 and vals[-1] <= COND_LIMIT * vals[0]:
                    grams[i] = gram
                    break
        values[start : start + count] = _batch_rate_loss(grams, profile)

    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / np.sqrt(trials))
    return MonteCarloEstimate(mean, stderr, trials, int(seed), discarded)


@dataclass(frozen=True)
class RateLossCell:
    """One cell of the ergodic rate-loss reference grid."""

    user_antennas: tuple[int, ...]
    base_antennas: int
    rate_loss_bits: float | None  # None where the profile is infeasible

    @property
    def label(self) -> str:
        return ",".join(str(r) for r in self.user_antennas)


#: Antenna profiles of the built-in reference grid: equal-antenna systems
#: first, then two-user systems with distinct antenna counts.
GRID_PROFILES: tuple[tuple[int, ...], ...] = (
    (1, 1),
    (1, 1, 1),
    (1, 1, 1, 1),
    (1, 1, 1, 1, 1),
    (1, 1, 1, 1, 1, 1),
    (2, 2),
    (3, 3),
    (2, 2, 2),
    (1, 2),
    (1, 3),
    (1, 4),
    (2, 3),
    (2, 4),
)

#: Base-station antenna counts spanned by the reference grid.
GRID_BASE_ANTENNAS: tuple[int, ...] = (2, 3, 4, 5, 6)


def rate_loss_grid(extra_profiles=()) -> list[RateLossCell]:
    """Closed-form ergodic rate loss over the built-in grid of antenna profiles.

    Equal-antenna rows go through the simplified equal-antenna expression;
    all other rows use the general Digamma form.  Infeasible cells (more
    terminal than base antennas) carry ``None``.  ``extra_profiles`` are
    (user_antennas, base_antennas) pairs appended after the grid.
    """
    cells: list[RateLossCell] = []
    requested = [
        (antennas, n) for antennas in GRID_PROFILES for n in GRID_BASE_ANTENNAS
    ]
    requested.extend(
        (tuple(int(r) for r in antennas), int(n)) for antennas, n in extra_profiles
    )
    for antennas, n in requested:
        if n < sum(antennas):
            cells.append(RateLossCell(antennas, n, None))
            continue
        if len(set(antennas)) == 1:
            value = ergodic_rate_loss_equal(len(antennas), antennas[0], n)
        else:
            value = _rate_loss_closed_form(n, antennas)
        cells.append(RateLossCell(antennas, n, value))
    return cells
