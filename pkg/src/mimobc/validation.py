"""Executable self-check suite covering every library invariant.

Each check returns a named result with a normalized margin: 1.0 means the
worst observed case sat at zero error, 0.0 means it sat exactly at the
tolerance, negative means failure.  The `validate` CLI subcommand runs all
checks and exits nonzero when any fails.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log2

import numpy as np

from ._linalg import haar_unitary, hermitize
from .baseline import dual_mac_sum_capacity, generate_curves, waterfill
from .bc import (
    bc_covariance,
    bc_precoder,
    decorrelation_basis,
    eigenbasis_optimality_check,
    solve_bc,
)
from .channel import (
    ChannelRealization,
    CorrelationModel,
    block_index_range,
    derive_seed,
    make_profile,
    sample_channel,
)
from .ergodic import (
    ergodic_dpc_logdet,
    ergodic_block_logdet,
    ergodic_rate_loss,
    ergodic_rate_loss_equal,
    ergodic_rate_loss_single,
    monte_carlo_rate_loss,
    rate_loss_grid,
)
from .mac import (
    MacCovarianceSet,
    asymptotic_user_rate,
    asymptotic_weighted_sum_rate,
    dpc_asymptotic_sum_rate,
    exact_user_rate,
    exact_user_rate_gram_form,
    instantaneous_rate_loss,
    optimal_power_split,
)

__all__ = ["CheckResult", "run_all_checks"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    margin: float
    detail: str


def _tolerance_result(name: str, tolerance: float, worst: float, detail: str) -> CheckResult:
    margin = (tolerance - worst) / tolerance
    return CheckResult(name, margin >= 0.0, margin, detail)


def _random_profile(rng: np.random.Generator, max_base: int = 8):
    num_users = int(rng.integers(1, 4))
    antennas = [int(rng.integers(1, 4)) for _ in range(num_users)]
    total = sum(antennas)
    slack_limit = max_base - total
    if slack_limit < 0:
        return _random_profile(rng, max_base)
    slack = int(rng.integers(0, slack_limit + 1))
    return make_profile(total + slack, antennas)


def _random_correlation(profile, rng: np.random.Generator) -> CorrelationModel:
    blocks = []
    for r in profile.user_antennas:
        z = rng.standard_normal((r, r + 2)) + 1j * rng.standard_normal((r, r + 2))
        blocks.append(hermitize(z @ z.conj().T / (r + 2)) + 0.5 * np.eye(r))
    return CorrelationModel.from_blocks(blocks)


def _random_psd_covariances(profile, rng: np.random.Generator, scale: float = 1.0):
    covs = []
    for r in profile.user_antennas:
        z = rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r))
        covs.append(hermitize(scale * z @ z.conj().T / r))
    return MacCovarianceSet.from_covariances(covs)


def check_channel_determinism(seed: int) -> CheckResult:
    profile = make_profile(5, [2, 2])
    correlation = CorrelationModel.scalar(profile, [1.0, 2.0])
    first = sample_channel(profile, correlation, seed)
    second = sample_channel(profile, correlation, seed)
    identical = all(np.array_equal(a, b) for a, b in zip(first.blocks, second.blocks))
    return CheckResult(
        "channel_determinism",
        identical,
        1.0 if identical else -1.0,
        "same seed reproduces bit-identical channel blocks",
    )


def check_channel_sqrt_roundtrip(seed: int) -> CheckResult:
    rng = np.random.default_rng(derive_seed(seed, 101))
    worst = 0.0
    for _ in range(50):
        profile = _random_profile(rng)
        correlation = _random_correlation(profile, rng)
        for c, root in zip(correlation.blocks, correlation.sqrt_blocks):
            worst = max(worst, float(np.linalg.norm(root @ root - c)))
    return _tolerance_result(
        "channel_sqrt_roundtrip", 1e-10, worst,
        f"worst Frobenius error of C^(1/2) C^(1/2) - C: {worst:.3e}",
    )


def check_channel_composite_assembly(seed: int) -> CheckResult:
    rng = np.random.default_rng(derive_seed(seed, 102))
    ok = True
    for _ in range(20):
        profile = _random_profile(rng)
        channel = sample_channel(profile, None, int(rng.integers(0, 2**32)))
        for k in range(profile.num_users):
            sl = block_index_range(profile, k)
            ok = ok and np.array_equal(channel.composite[:, sl], channel.blocks[k])
    return CheckResult(
        "channel_composite_assembly", ok, 1.0 if ok else -1.0,
        "composite column blocks equal the per-user matrices exactly",
    )


def check_channel_second_moment(seed: int) -> CheckResult:
    profile = make_profile(6, [3, 3])
    correlation = CorrelationModel.scalar(profile, [4.0, 4.0])
    entries = []
    for t in range(400):
        channel = sample_channel(profile, correlation, derive_seed(seed, 20_000 + t))
        entries.append(np.abs(channel.composite) ** 2)
    mean = float(np.mean(entries))
    deviation = abs(mean - 4.0) / 4.0
    return _tolerance_result(
        "channel_second_moment", 0.05, deviation,
        f"mean |entry|^2 = {mean:.4f} for target 4.0 over {400 * 36} entries",
    )


def check_mac_gram_form_equivalence(seed: int) -> CheckResult:
    rng = np.random.default_rng(derive_seed(seed, 103))
    worst = 0.0
    for _ in range(100):
        profile = _random_profile(rng)
        channel = sample_channel(profile, None, int(rng.integers(0, 2**32)))
        covariances = _random_psd_covariances(profile, rng)
        for k in range(profile.num_users):
            direct = exact_user_rate(channel, covariances, k)
            gram = exact_user_rate_gram_form(channel, covariances, k)
            worst = max(worst, abs(direct - gram))
    return _tolerance_result(
        "mac_gram_form_equivalence", 1e-10, worst,
        f"worst |direct - Gram form| over 100 instances: {worst:.3e}",
    )


def check_mac_rate_loss_nonnegative(seed: int) -> CheckResult:
    rng = np.random.default_rng(derive_seed(seed, 104))
    lowest = np.inf
    for _ in range(1000):
        profile = _random_profile(rng)
        channel = sample_channel(profile, None, int(rng.integers(0, 2**32)))
        lowest = min(lowest, instantaneous_rate_loss(channel))
    worst = max(0.0, -lowest)
    return _tolerance_result(
        "mac_rate_loss_nonnegative", 1e-10, worst,
        f"lowest rate loss over 1000 channels: {lowest:.3e}",
    )


def check_mac_correlation_invariance(seed: int) -> CheckResult:
    rng = np.random.default_rng(derive_seed(seed, 105))
    worst = 0.0
    for _ in range(200):
        profile = _random_profile(rng)
        plain = sample_channel(profile, None, int(rng.integers(0, 2**32)))
        correlation = _random_correlation(profile, rng)
        shaped = ChannelRealization.from_blocks(
            profile,
            [h @ root for h, root in zip(plain.blocks, correlation.sqrt_blocks)],
        )
        worst = max(
            worst, abs(instantaneous_rate_loss(plain) - instantaneous_rate_loss(shaped))
        )
    return _tolerance_result(
        "mac_correlation_invariance", 1e-9, worst,
        f"worst per-realization shift of the rate loss under shaping: {worst:.3e}",
    )


def check_mac_power_split_concavity(seed: int) -> CheckResult:
    rng = np.random.default_rng(derive_seed(seed, 106))
    profile = make_profile(6, [2, 1, 2], weights=[2.0, 1.0, 1.5])
    channel = sample_channel(profile, None, derive_seed(seed, 107))
    total_power = 40.0
    optimum = asymptotic_weighted_sum_rate(channel, total_power)
    antennas = np.array(profile.user_antennas, dtype=float)
    split = optimal_power_split(profile, total_power)
    base = np.array(split.power_levels)
    worst = -np.inf
    for _ in range(100):
        # random feasible perturbation keeping sum_k r_k lambda_k fixed
        direction = rng.standard_normal(profile.num_users)
        direction -= antennas * (direction @ antennas) / (antennas @ antennas)
        scale = 0.5 * float(np.min(base / np.maximum(np.abs(direction), 1e-12)))
        levels = base + scale * rng.uniform(0.1, 1.0) * direction
        if np.any(levels <= 0):
            continue
        value = sum(
            w * asymptotic_user_rate(channel, lam, k)
            for k, (w, lam) in enumerate(zip(profile.weights, levels))
        )
        worst = max(worst, value - optimum)
    return _tolerance_result(
        "mac_power_split_concavity", 1e-9, max(0.0, worst),
        f"best perturbed weighted sum rate is {worst:.3e} bits above the split",
    )


def check_mac_eigenbasis_irrelevance(seed: int) -> CheckResult:
    rng = np.random.default_rng(derive_seed(seed, 108))
    profile = make_profile(5, [2, 2])
    channel = sample_channel(profile, None, derive_seed(seed, 109))
    total_power = 1e6
    worst = 0.0
    for k in range(profile.num_users):
        level = total_power / profile.total_antennas
        reference = asymptotic_user_rate(channel, level, k)
        covs = []
        for j, r in enumerate(profile.user_antennas):
            spread = np.exp(rng.uniform(-0.7, 0.7, size=r))
            spread /= np.prod(spread) ** (1.0 / r)  # keep the determinant fixed
            v = haar_unitary(r, rng)
            covs.append(hermitize(level * (v * spread) @ v.conj().T))
        rotated = MacCovarianceSet.from_covariances(covs)
        worst = max(worst, abs(exact_user_rate(channel, rotated, k) - reference))
    return _tolerance_result(
        "mac_eigenbasis_irrelevance", 1e-3, worst,
        f"worst exact-vs-asymptotic gap under rotated covariances at 1e6: {worst:.3e}",
    )


def check_bc_solution_invariants(seed: int, channels: int = 1000) -> CheckResult:
    rng = np.random.default_rng(derive_seed(seed, 110))
    worst_margin = np.inf
    worst_detail = ""
    for i in range(channels):
        profile = _random_profile(rng)
        channel = sample_channel(profile, None, int(rng.integers(0, 2**32)))
        total_power = float(10.0 ** rng.uniform(-1, 3))
        solution = solve_bc(channel, total_power)
        r = profile.total_antennas
        level = total_power / r
        checks = []
        bd_worst = 0.0
        for k, p in enumerate(solution.precoders):
            for l, h in enumerate(channel.blocks):
                if l != k:
                    bd_worst = max(
                        bd_worst,
                        float(
                            np.linalg.norm(h.conj().T @ p)
                            / (np.linalg.norm(h) * np.linalg.norm(p))
                        ),
                    )
            norms = np.linalg.norm(p, axis=0)
            checks.append(("column_norm", 1e-10, float(np.max(np.abs(norms - np.sqrt(level))))))
            s = solution.covariances[k]
            eigen = np.linalg.eigvalsh(s)
            r_k = profile.user_antennas[k]
            spectrum_err = max(
                float(np.max(np.abs(eigen[-r_k:] - level))) if r_k else 0.0,
                float(np.max(np.abs(eigen[: s.shape[0] - r_k]))) if s.shape[0] > r_k else 0.0,
            )
            checks.append(("spectrum", 1e-8 * max(1.0, level), spectrum_err))
            projector = s / level
            checks.append(
                ("idempotent", 1e-9, float(np.linalg.norm(projector @ projector - projector)))
            )
        checks.append(("bd_residual", 1e-9, bd_worst))
        checks.append(
            ("total_power", 1e-8 * max(1.0, total_power),
             abs(solution.total_transmit_power - total_power))
        )
        for label, tol, err in checks:
            margin = (tol - err) / tol
            if margin < worst_margin:
                worst_margin = margin
                worst_detail = f"{label} error {err:.3e} at tolerance {tol:.1e} (channel {i})"
    return CheckResult(
        "bc_solution_invariants", worst_margin >= 0.0, float(worst_margin), worst_detail
    )


def check_bc_duality_rate_preservation(seed: int) -> CheckResult:
    profile = make_profile(5, [2, 2])
    channel = sample_channel(profile, None, derive_seed(seed, 111))
    gaps = []
    for power in (1e2, 1e3, 1e4, 1e6):
        bd_sum = solve_bc(channel, power).sum_rate
        uniform = MacCovarianceSet.uniform(profile, power)
        mac_sum = sum(
            exact_user_rate(channel, uniform, k) for k in range(profile.num_users)
        )
        gaps.append(abs(bd_sum - mac_sum))
    monotone = all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
    worst = gaps[-1] if monotone else np.inf
    return _tolerance_result(
        "bc_duality_rate_preservation", 5e-2, worst,
        f"uplink/downlink sum-rate gaps along the power grid: "
        + ", ".join(f"{g:.2e}" for g in gaps),
    )


def check_bc_eigenbasis_optimality(seed: int) -> CheckResult:
    profile = make_profile(6, [3, 2])
    channel = sample_channel(profile, None, derive_seed(seed, 112))
    worst = np.inf
    for k in range(profile.num_users):
        passed, slack = eigenbasis_optimality_check(channel, k, 100, seed=derive_seed(seed, 113 + k))
        worst = min(worst, slack)
    return _tolerance_result(
        "bc_eigenbasis_optimality", 1e-9, max(0.0, -worst),
        f"minimum Hadamard slack over 100 random bases per user: {worst:.3e}",
    )


def check_bc_covariance_basis_invariance(seed: int) -> CheckResult:
    rng = np.random.default_rng(derive_seed(seed, 114))
    profile = make_profile(6, [2, 3])
    channel = sample_channel(profile, None, derive_seed(seed, 115))
    total_power = 12.0
    worst = 0.0
    for k in range(profile.num_users):
        s = bc_covariance(channel, total_power, k)
        basis = decorrelation_basis(channel, k)
        r_k = basis.shape[0]
        # alternative diagonalizing bases: permuted columns with random phases
        for _ in range(10):
            permuted = basis[:, rng.permutation(r_k)] * np.exp(
                2j * np.pi * rng.uniform(size=r_k)
            )
            p = bc_precoder(channel, total_power, k, basis=permuted)
            worst = max(worst, float(np.linalg.norm(p @ p.conj().T - s)))
    return _tolerance_result(
        "bc_covariance_basis_invariance", 1e-9, worst,
        f"worst |P P^H - S| over alternative diagonalizing bases: {worst:.3e}",
    )


def check_ergodic_special_cases() -> CheckResult:
    worst = 0.0
    exact = True
    for num_users in range(1, 5):
        for antennas_each in range(1, 4):
            for base in range(num_users * antennas_each, 15):
                general = ergodic_rate_loss(
                    make_profile(base, [antennas_each] * num_users)
                )
                equal = ergodic_rate_loss_equal(num_users, antennas_each, base)
                worst = max(worst, abs(general - equal))
                if antennas_each == 1:
                    exact = exact and (
                        ergodic_rate_loss_single(num_users, base) == equal
                    )
    if not exact:
        return CheckResult(
            "ergodic_special_cases", False, -1.0,
            "single-antenna form differs from the equal-antenna form at one antenna each",
        )
    return _tolerance_result(
        "ergodic_special_cases", 1e-12, worst,
        f"worst |general - equal-antenna| over the parameter box: {worst:.3e}",
    )


def check_ergodic_correlation_cancellation(seed: int) -> CheckResult:
    rng = np.random.default_rng(derive_seed(seed, 116))
    profile = make_profile(7, [2, 3])
    correlation = _random_correlation(profile, rng)
    shift = sum(correlation.block_logdet2(k) for k in range(profile.num_users))
    dpc_shift = ergodic_dpc_logdet(profile, correlation) - ergodic_dpc_logdet(profile, None)
    block_shift = sum(
        ergodic_block_logdet(profile, correlation, k)
        - ergodic_block_logdet(profile, None, k)
        for k in range(profile.num_users)
    )
    worst = max(abs(dpc_shift - shift), abs(block_shift + shift))
    return _tolerance_result(
        "ergodic_correlation_cancellation", 1e-9, worst,
        "correlation shifts the DPC and linear terms by identical amounts",
    )


def check_ergodic_mc_agreement(trials: int, seed: int) -> CheckResult:
    worst_margin = np.inf
    worst_detail = ""
    index = 0
    for cell in rate_loss_grid():
        if cell.rate_loss_bits is None:
            continue
        profile = make_profile(cell.base_antennas, cell.user_antennas)
        cell_trials = trials * 10 if profile.base_antennas == profile.total_antennas else trials
        estimate = monte_carlo_rate_loss(
            profile, None, trials=cell_trials, seed=derive_seed(seed, 500 + index)
        )
        index += 1
        band = 3.0 * estimate.stderr
        deviation = abs(estimate.mean - cell.rate_loss_bits)
        margin = (band - deviation) / band
        if margin < worst_margin:
            worst_margin = margin
            worst_detail = (
                f"profile {cell.label} N={cell.base_antennas}: "
                f"MC {estimate.mean:.4f} vs closed form {cell.rate_loss_bits:.4f} "
                f"({deviation / estimate.stderr:.2f} standard errors, {cell_trials} trials)"
            )
    return CheckResult(
        "ergodic_mc_agreement", worst_margin >= 0.0, float(worst_margin), worst_detail
    )


def check_ergodic_monotonic_in_base_antennas() -> CheckResult:
    ok = True
    for antennas in {cell.user_antennas for cell in rate_loss_grid()}:
        values = [
            cell.rate_loss_bits
            for cell in rate_loss_grid()
            if cell.user_antennas == antennas and cell.rate_loss_bits is not None
        ]
        ok = ok and all(b < a for a, b in zip(values, values[1:]))
    return CheckResult(
        "ergodic_monotonic_in_base_antennas", ok, 1.0 if ok else -1.0,
        "adding base antennas strictly reduces the ergodic rate loss",
    )


def check_ergodic_qualitative_ratio() -> CheckResult:
    ratio = ergodic_rate_loss_equal(2, 3, 6) / ergodic_rate_loss_equal(3, 2, 6)
    deviation = abs(ratio - 0.65)
    return _tolerance_result(
        "ergodic_qualitative_ratio", 0.01, deviation,
        f"two users with three antennas lose {ratio:.4f} of the three-user loss",
    )


def check_baseline_single_user(seed: int) -> CheckResult:
    profile = make_profile(4, [3])
    channel = sample_channel(profile, None, derive_seed(seed, 117))
    worst = 0.0
    for power in (0.5, 5.0, 50.0):
        result = dual_mac_sum_capacity(channel, power)
        gains = np.linalg.eigvalsh(channel.gram)
        powers = waterfill(gains, power)
        reference = float(np.sum(np.log2(1.0 + powers * gains)))
        worst = max(worst, abs(result.sum_rate_bits - reference))
    return _tolerance_result(
        "baseline_single_user_waterfilling", 1e-8, worst,
        f"worst gap to closed-form single-user waterfilling: {worst:.3e}",
    )


def check_baseline_monotone_and_bounds(seed: int) -> CheckResult:
    rng = np.random.default_rng(derive_seed(seed, 118))
    worst_margin = np.inf
    worst_detail = ""
    for i in range(20):
        profile = _random_profile(rng)
        channel = sample_channel(profile, None, int(rng.integers(0, 2**32)))
        power = float(10.0 ** rng.uniform(-1, 3))
        result = dual_mac_sum_capacity(channel, power)
        history = np.array(result.objective_history)
        dip = float(np.max(np.maximum(0.0, history[:-1] - history[1:]))) if history.size > 1 else 0.0
        uniform = log2(
            np.abs(
                np.linalg.det(
                    np.eye(profile.base_antennas)
                    + power / profile.total_antennas
                    * channel.composite @ channel.composite.conj().T
                )
            )
        )
        shortfall = max(0.0, uniform - 1e-8 - result.sum_rate_bits)
        linear = solve_bc(channel, power).sum_rate
        inferiority = max(0.0, linear - 1e-9 - result.sum_rate_bits)
        for label, tol, err in (
            ("objective_dip", 1e-10, dip),
            ("uniform_lower_bound", 1e-8, shortfall),
            ("linear_not_above_dpc", 1e-9, inferiority),
        ):
            margin = (tol - err) / tol
            if margin < worst_margin:
                worst_margin = margin
                worst_detail = f"{label} violation {err:.3e} (channel {i}, power {power:.2f})"
    return CheckResult(
        "baseline_monotone_and_bounds", worst_margin >= 0.0, float(worst_margin), worst_detail
    )


def check_baseline_high_power_asymptote(seed: int) -> CheckResult:
    profile = make_profile(5, [2, 2])
    channel = sample_channel(profile, None, derive_seed(seed, 119))
    result = dual_mac_sum_capacity(channel, 1e6, tolerance=1e-10, max_iterations=2000)
    gap = abs(result.sum_rate_bits - dpc_asymptotic_sum_rate(channel, 1e6))
    return _tolerance_result(
        "baseline_high_power_asymptote", 1e-2, gap,
        f"sum capacity sits {gap:.3e} bits from the affine DPC expression at 1e6",
    )


def check_baseline_affine_parallel(seed: int) -> CheckResult:
    profile = make_profile(5, [2, 2])
    correlation = CorrelationModel.scalar(profile, [1.0, 2.0])
    points = generate_curves(profile, correlation, [10.0, 20.0], trials=2, seed=seed)
    loss = ergodic_rate_loss(profile)
    worst = max(abs(p.dpc_affine - p.linear_affine - loss) for p in points)
    return _tolerance_result(
        "baseline_affine_parallel", 1e-9, worst,
        "the affine curves are parallel with vertical distance equal to the "
        f"closed-form rate loss (worst deviation {worst:.3e})",
    )


def run_all_checks(trials: int = 2000, seed: int = 1) -> list[CheckResult]:
    """Run every invariant check; `trials` scales the Monte Carlo workload."""
    return [
        check_channel_determinism(seed),
        check_channel_sqrt_roundtrip(seed),
        check_channel_composite_assembly(seed),
        check_channel_second_moment(seed),
        check_mac_gram_form_equivalence(seed),
        check_mac_rate_loss_nonnegative(seed),
        check_mac_correlation_invariance(seed),
        check_mac_power_split_concavity(seed),
        check_mac_eigenbasis_irrelevance(seed),
        check_bc_solution_invariants(seed),
        check_bc_duality_rate_preservation(seed),
        check_bc_eigenbasis_optimality(seed),
        check_bc_covariance_basis_invariance(seed),
        check_ergodic_special_cases(),
        check_ergodic_correlation_cancellation(seed),
        check_ergodic_mc_agreement(trials, seed),
        check_ergodic_monotonic_in_base_antennas(),
        check_ergodic_qualitative_ratio(),
        check_baseline_single_user(seed),
        check_baseline_monotone_and_bounds(seed),
        check_baseline_high_power_asymptote(seed),
        check_baseline_affine_parallel(seed),
    ]
