"""Outer loop: feasibility-driven retuning of the local-oscillator phase.

Each outer iteration runs EM on a block measured at the current LO phase
``psi``, evaluates the block Fisher information F_c = N * F(psi, theta_hat),
and steers ``psi`` a fraction ``lambda`` of the way toward either the
communication-optimal target (zero offset, when the sensing constraint
F_c >= gamma_min is already met) or the sensing-optimal target (quarter-turn
offset, otherwise).  Angular differences are reduced to the fundamental
sector via

    wrap_pi(x) = x - pi * round(x / pi),

with round-half-away-from-zero, so the update always takes the short way
around the mod-pi circle.  The loop stops when the (unscaled) wrapped
correction falls below the outer tolerance or after t_max iterations; near
the feasibility boundary the target alternates between the two optima and
the phase dithers there instead of meeting the tolerance.

One block measured at a single LO phase determines the channel phase only
up to reflection about that LO phase (the outcome law is even in the
offset).  The loop therefore keeps a running likelihood comparison between
each new estimate and its reflection, scored against the preceding block,
and switches sides when the accumulated evidence decisively favors the
reflection.  This keeps the loop tracking the physical phase instead of
its moving mirror image.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .analytics import ber_theory, fc_max, fisher_symbol, optimal_angles
from .em import EmConfig, loglik, run_em
from .errors import QuadratureError
from .physics import ChannelParams, ObservationBlock, canonical_phase

__all__ = [
    "AlgoConfig",
    "RunTrace",
    "wrap_pi",
    "select_target",
    "update_psi",
    "run_qisac",
]

BlockSource = Callable[[float, int], ObservationBlock]


@dataclass(frozen=True)
class AlgoConfig:
    """Outer-loop parameters.

    gamma_min is the required block Fisher information; when gamma_relative
    is set it is interpreted as a fraction of the achievable maximum and
    resolved against fc_max at run time.  block_refresh selects whether a
    fresh observation block is drawn at each outer iteration (default) or
    one initial block is reused throughout.  eps = 0 disables early
    stopping so exactly t_max iterations run.  psi0 may be any finite
    angle; it is reduced mod pi on entry.
    """

    gamma_min: float
    lam: float = 0.01
    eps: float = 1e-3
    t_max: int = 500
    em: EmConfig = field(default_factory=EmConfig)
    psi0: float = 0.0
    gamma_relative: bool = False
    block_refresh: bool = True

    def __post_init__(self):
        if not 0 < self.lam <= 1:
            raise ValueError(f"lambda must be in (0, 1], got {self.lam}")
        if self.gamma_min < 0:
            raise ValueError("gamma_min must be non-negative")
        if self.gamma_relative and self.gamma_min > 1:
            raise ValueError("relative gamma_min must lie in [0, 1]")
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")
        if not self.eps >= 0:
            raise ValueError("eps must be non-negative (0 disables early stopping)")
        if not np.isfinite(self.psi0):
            raise ValueError("psi0 must be finite")


@dataclass
class RunTrace:
    """Per-iteration record of one controller run.

    Arrays are aligned by outer iteration.  ``target`` holds "com"/"sen".
    ``ber_emp`` is label-ambiguity-resolved; ``flipped`` records whether the
    resolution inverted the decisions.  ``fc_max`` and ``gamma_min`` are the
    resolved run-level constants.  Terminal state: (theta_final, psi_final,
    s_hat_final).
    """

    theta_hat: np.ndarray
    psi: np.ndarray
    fc: np.ndarray
    ber_emp: np.ndarray
    ber_theory: np.ndarray
    target: list[str]
    flipped: np.ndarray
    theta_true: float
    n_block: int
    fc_max: float
    gamma_min: float
    theta_final: float = 0.0
    psi_final: float = 0.0
    s_hat_final: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    quad_failures: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.psi)


def wrap_pi(x):
    """Reduce an angle difference to [-pi/2, pi/2]: x - pi*round(x/pi).

    Ties (x/pi exactly half-integral) round away from zero, so
    wrap_pi(pi/2) == -pi/2.  Accepts scalars or arrays.
    """
    y = np.asarray(x, dtype=float) / np.pi
    r = np.sign(y) * np.floor(np.abs(y) + 0.5)
    out = np.asarray(x, dtype=float) - np.pi * r
    return out if out.ndim else float(out)


def select_target(fc: float, gamma_min: float, theta_hat: float) -> tuple[str, float]:
    """Pick the LO target by feasibility of the sensing constraint.

    Returns ("com", theta_hat mod pi) when fc >= gamma_min — ties count as
    feasible — and ("sen", theta_hat + pi/2 mod pi) otherwise.
    """
    psi_com, psi_sen = optimal_angles(theta_hat)
    if fc >= gamma_min:
        return "com", psi_com
    return "sen", psi_sen


def update_psi(psi: float, psi_tar: float, lam: float) -> float:
    """One damped step toward the target: (psi + lam*wrap_pi(psi_tar - psi)) mod pi."""
    if not 0 < lam <= 1:
        raise ValueError(f"lambda must be in (0, 1], got {lam}")
    return canonical_phase(psi + lam * wrap_pi(psi_tar - psi))


# Accumulated log-likelihood deficit (nats) at which the tracked estimate
# is abandoned for its reflection: roughly a 150:1 likelihood ratio.  A
# single block contributes little and noisy evidence about the side when
# consecutive LO phases are close, so the decision rests on the running
# total, which drifts upward while the physical phase is tracked and
# downward while its mirror image is.
_FLIP_EVIDENCE = 5.0


def _resolve_reflection(
    theta_hat: float,
    psi: float,
    prev_block: ObservationBlock,
    prev_psi: float,
    params: ChannelParams,
    evidence: float,
) -> tuple[float, float]:
    """Update the reflection evidence; flip the estimate when it demands it.

    A single block pins the channel phase only up to reflection about the
    LO phase it was measured at: the mixture means are +-A*cos(theta - psi),
    an even function of the offset, so ``theta_hat`` and ``2*psi - theta_hat``
    fit that block with exactly equal likelihood.  Earlier blocks were
    measured at other LO phases, and only the physical channel phase stays
    a likelihood mode across all of them — the reflected candidate moves
    with psi.  Each call therefore scores the current candidate pair
    against the previous block and adds the difference to ``evidence``;
    the per-block noise is independent and averages out, so the total
    climbs without bound on the physical side and sinks on the mirrored
    one.  When it sinks below -_FLIP_EVIDENCE the reflection is adopted
    and the total changes sign with the side.  Responsibilities and hard
    decisions are reflection-invariant on the current block, so the flip
    needs no EM re-run.

    Returns the (possibly flipped) estimate and the updated evidence.
    """
    cand = canonical_phase(2.0 * psi - theta_hat)
    if abs(wrap_pi(cand - theta_hat)) <= 1e-9:
        return theta_hat, evidence
    evidence += loglik(prev_block, params, prev_psi, theta_hat) - loglik(
        prev_block, params, prev_psi, cand
    )
    if evidence < -_FLIP_EVIDENCE:
        return cand, -evidence
    return theta_hat, evidence


def run_qisac(
    block_source: BlockSource,
    params: ChannelParams,
    config: AlgoConfig,
) -> RunTrace:
    """Run the full sensing/communication control loop.

    ``block_source(psi, t)`` must return the observation block measured at
    the CURRENT LO phase for outer iteration ``t``; with
    config.block_refresh False it is invoked once and the block is reused.
    EM warm-starts from the previous iteration's estimate after the first
    pass.  Because one block determines the phase only up to reflection
    about the LO phase (see _resolve_reflection), every estimate after the
    first is scored against the previous block and the running evidence
    total decides whether to keep the tracked side or adopt the reflection.
    Per-iteration quadrature failures are recorded (the constraint is
    treated as infeasible for that iteration) rather than aborting the run;
    EM failures propagate.
    """
    from .montecarlo import score_ber  # deferred: montecarlo uses this module

    psi = canonical_phase(config.psi0)
    block = None
    block_psi = 0.0
    em_cfg = config.em

    theta_l, psi_l, fc_l, bemp_l, bth_l, targ_l, flip_l = [], [], [], [], [], [], []
    quad_failures: list[int] = []
    fcm = None
    gamma = None
    theta_hat = None
    s_hat = np.empty(0, dtype=np.int64)
    prev_block = None
    prev_psi = 0.0
    reflect_ll = 0.0

    for t in range(config.t_max):
        if block is None or config.block_refresh:
            block = block_source(psi, t)
            block_psi = psi
        if fcm is None:
            fcm = fc_max(params, block.n)
            gamma = config.gamma_min * fcm if config.gamma_relative else config.gamma_min

        # the block is always interpreted at the LO phase it was measured
        # at; with block_refresh off that phase stays psi0 while psi retunes
        res = run_em(block, params, block_psi, em_cfg)
        theta_hat = res.theta_hat
        if theta_l and abs(wrap_pi(theta_hat - theta_l[-1])) > np.pi / 4:
            # warm-started EM hopped to the other side on its own; the
            # accumulated evidence belongs to the side it left
            reflect_ll = -reflect_ll
        if prev_block is not None and prev_block is not block:
            theta_hat, reflect_ll = _resolve_reflection(
                theta_hat, block_psi, prev_block, prev_psi, params, reflect_ll
            )
        s_hat = res.s_hat
        em_cfg = replace(em_cfg, init_policy="fixed", init_theta=theta_hat)

        try:
            fc = fisher_symbol(
                replace(params, theta=theta_hat), psi, n=block.n
            ).block
        except QuadratureError:
            quad_failures.append(t)
            fc = float("nan")

        ber_emp, flipped = score_ber(s_hat, block.s_true)
        kind, psi_tar = select_target(fc if np.isfinite(fc) else -1.0, gamma, theta_hat)

        theta_l.append(theta_hat)
        psi_l.append(psi)
        fc_l.append(fc)
        bemp_l.append(ber_emp)
        bth_l.append(ber_theory(params, psi))
        targ_l.append(kind)
        flip_l.append(flipped)

        prev_block, prev_psi = block, block_psi
        dpsi = wrap_pi(psi_tar - psi)
        psi = update_psi(psi, psi_tar, config.lam)
        if abs(dpsi) < config.eps:
            break

    return RunTrace(
        theta_hat=np.array(theta_l),
        psi=np.array(psi_l),
        fc=np.array(fc_l),
        ber_emp=np.array(bemp_l),
        ber_theory=np.array(bth_l),
        target=targ_l,
        flipped=np.array(flip_l, dtype=bool),
        theta_true=params.theta,
        n_block=0 if block is None else block.n,
        fc_max=float(fcm if fcm is not None else 0.0),
        gamma_min=float(gamma if gamma is not None else 0.0),
        theta_final=float(theta_hat if theta_hat is not None else 0.0),
        psi_final=psi,
        s_hat_final=s_hat,
        quad_failures=quad_failures,
    )
