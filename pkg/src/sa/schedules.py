from dataclasses import dataclass

from ..errors import ConfigError


# step-size exponents of the three tracker timescales and the bandwidth
ALPHA = 0.70
BETA = 0.71
GAMMA = 0.99
ETA = 0.14


@dataclass(frozen=True)
class Schedule:
    """``a / (k0 + k)^exponent``; ``k0 + k`` is floored at 1 so a zero offset is usable."""

    a: float
    k0: int = 0
    exponent: float = 1.0

    def __post_init__(self):
        if not self.a > 0.0:
            raise ConfigError("schedule.a", "must be positive", str(self.a))
        if self.k0 < 0:
            raise ConfigError("schedule.k0", "must be non-negative", str(self.k0))
        if not 0.0 < self.exponent <= 1.0:
            raise ConfigError("schedule.exponent", "must lie in (0, 1]", str(self.exponent))

    @classmethod
    def from_initial(cls, initial: float, k0: int, exponent: float) -> "Schedule":
        """Schedule whose value at k = 0 equals ``initial``."""
        return cls(a=initial * max(k0, 1) ** exponent, k0=k0, exponent=exponent)

    def value(self, k: int) -> float:
        return self.a / max(self.k0 + k, 1) ** self.exponent

    def __call__(self, k: int) -> float:
        return self.value(k)

    def scaled(self, factor: float) -> "Schedule":
        return Schedule(a=self.a * factor, k0=self.k0, exponent=self.exponent)


@dataclass(frozen=True)
class Schedules:
    D: Schedule
    q: Schedule
    theta: Schedule
    h: Schedule

    @classmethod
    def from_initial(
        cls,
        k0: int,
        gamma_d: float,
        gamma_q: float,
        gamma_theta: float,
        h0: float,
        alpha: float = ALPHA,
        beta: float = BETA,
        gamma: float = GAMMA,
        eta: float = ETA,
    ) -> "Schedules":
        return cls(
            D=Schedule.from_initial(gamma_d, k0, alpha),
            q=Schedule.from_initial(gamma_q, k0, beta),
            theta=Schedule.from_initial(gamma_theta, k0, gamma),
            h=Schedule.from_initial(h0, k0, eta),
        )

    def check_timescales(self, uses_gradient_tracker: bool) -> None:
        """Theta must be slower than q; with a gradient tracker q must also be slower
        than D and the bandwidth must shrink slower than ``2 alpha - 1``."""
        alpha, beta, gamma, eta = (self.D.exponent, self.q.exponent, self.theta.exponent, self.h.exponent)
        if not beta < gamma:
            raise ConfigError("schedule.gamma", f"theta exponent must exceed the quantile exponent {beta}", str(gamma))
        if not uses_gradient_tracker:
            return
        if not 0.5 < alpha < beta:
            raise ConfigError("schedule.alpha", f"gradient exponent must lie in (0.5, {beta})", str(alpha))
        if not eta < 2.0 * alpha - 1.0:
            raise ConfigError("schedule.eta", f"bandwidth exponent must be below {2.0 * alpha - 1.0:.4g}", str(eta))


# (k0, gamma_D, gamma_q, gamma_theta, h0) at k = 0 for the robust-portfolio tasks;
# gamma_D * K(0) / h0 stays at or below 1 so the gradient tracker cannot overshoot
PORTFOLIO_CONSTANTS = {
    "sshape": (1000, 0.0625, 0.25, 0.0625, 0.05),
    "wang": (1000, 0.1, 1.0, 0.01, 0.05),
    "cvar": (500, 0.25, 0.25, 0.0625, 0.1),
    "disc": (500, 0.25, 0.25, 0.0625, 0.1),
}


def portfolio_schedules(kind: str) -> Schedules:
    k0, gd, gq, gt, h0 = PORTFOLIO_CONSTANTS.get(kind, PORTFOLIO_CONSTANTS["cvar"])
    return Schedules.from_initial(k0, gd, gq, gt, h0)
