"""Run-wide numeric settings shared by the quadrature and estimation layers."""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class QuadratureSettings:
    """Tolerances and budgets for every numeric estimator in the package.

    Attributes
    ----------
    epsabs, epsrel:
        Targets for direct-domain adaptive quadrature (scipy backend).
    log_rel_tol:
        Acceptance tolerance (in nats) for the log-domain Gauss-Legendre
        integrator.
    refine, order:
        Edge-refinement depth and Gauss-Legendre order for the log-domain
        integrator.
    tail_stop_nats, tail_consecutive:
        Tail truncation rule: stop after `tail_consecutive` geometric blocks
        each contributing `tail_stop_nats` below the running total.
    split_radius:
        Near/far split point for singular jump-energy integrands.
    seed:
        Root seed.  Every Monte Carlo consumer derives an independent
        substream from (seed, purpose, *key) so results are reproducible and
        independent of evaluation order / thread count.
    max_samples:
        Monte Carlo sample budget per region integral.
    mc_batch:
        Monte Carlo draw size per accumulation step.
    rel_err_cap:
        Maximum tolerated relative standard error for Monte Carlo estimates;
        exceeding it after the full budget raises PrecisionError.
    asym_switch_radius:
        Radius beyond which radial models switch from quadrature tails to
        their asymptotic log-tail form (when one is attached).
    """

    epsabs: float = 1e-12
    epsrel: float = 1e-10
    log_rel_tol: float = 1e-12
    refine: int = 40
    order: int = 16
    tail_stop_nats: float = 45.0
    tail_consecutive: int = 3
    split_radius: float = 1.0
    seed: int = 20260814
    max_samples: int = 400_000
    mc_batch: int = 50_000
    rel_err_cap: float = 0.05
    asym_switch_radius: float = 1e8

    def with_(self, **kwargs) -> "QuadratureSettings":
        """Return a copy with the given fields replaced."""
        return replace(self, **kwargs)


DEFAULT_SETTINGS = QuadratureSettings()
