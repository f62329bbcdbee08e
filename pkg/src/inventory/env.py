"""Serial supply chain with lost sales, fixed lead times and an unbounded manufacturer.

Echelon 1 faces customer demand, echelon j orders from echelon j + 1 and the last
echelon orders from the manufacturer, which always ships in full. Shipments from
upstream reach echelon j after ``L_j`` periods.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from ..errors import DimensionMismatchError, DomainError


logger = logging.getLogger(__name__)

DEMAND_CYCLE = 15
DEMAND_PHASE = 6
DEMAND_NOISE_HIGH = 7


@dataclass(frozen=True)
class EchelonParams:
    lead_times: tuple[int, ...] = (2, 3, 5)
    # one more price than echelons: the last one is the manufacturer's
    prices: tuple[float, ...] = (2.0, 1.5, 1.0, 0.5)
    holding: tuple[float, ...] = (0.2, 0.15, 0.1)
    penalty: tuple[float, ...] = (0.125, 0.1, 0.075)
    initial: tuple[float, ...] = (10.0, 10.0, 10.0)

    def __post_init__(self):
        m = len(self.lead_times)
        if m < 1:
            raise DimensionMismatchError("at least one echelon is required")
        if len(self.prices) != m + 1:
            raise DimensionMismatchError(f"{m} echelons need {m + 1} prices, got {len(self.prices)}")
        for name in ("holding", "penalty", "initial"):
            if len(getattr(self, name)) != m:
                raise DimensionMismatchError(f"{name} needs {m} entries, got {len(getattr(self, name))}")
        if min(self.lead_times) < 1:
            raise DomainError("lead times must be at least one period")
        if min(self.initial) < 0:
            raise DomainError("initial inventories must be non-negative")

    @classmethod
    def single(cls) -> "EchelonParams":
        """One retailer ordering straight from the manufacturer."""
        return cls(lead_times=(2,), prices=(2.0, 1.5), holding=(0.2,), penalty=(0.125,), initial=(10.0,))

    @classmethod
    def first(cls, echelons: int) -> "EchelonParams":
        """The first ``echelons`` stages of the default chain."""
        base = cls()
        if not 1 <= echelons <= len(base.lead_times):
            raise DomainError(f"echelons must lie in 1..{len(base.lead_times)}, got {echelons}")
        return cls(
            lead_times=base.lead_times[:echelons],
            prices=base.prices[:echelons + 1],
            holding=base.holding[:echelons],
            penalty=base.penalty[:echelons],
            initial=base.initial[:echelons],
        )

    @property
    def echelons(self) -> int:
        return len(self.lead_times)

    @property
    def window(self) -> int:
        return max(self.lead_times)

    @property
    def max_demand(self) -> int:
        return DEMAND_NOISE_HIGH + DEMAND_CYCLE - 1

    def arrays(self) -> tuple[np.ndarray, ...]:
        return (
            np.asarray(self.lead_times, dtype=np.int64),
            np.asarray(self.prices, dtype=float),
            np.asarray(self.holding, dtype=float),
            np.asarray(self.penalty, dtype=float),
            np.asarray(self.initial, dtype=float),
        )


@dataclass(frozen=True)
class InventoryState:
    """Past ``window`` periods of inventories, lost sales, shipments and orders.

    Row 0 of every window is the most recent period, columns are echelons.
    """

    inventory: np.ndarray
    lost: np.ndarray
    shipped: np.ndarray
    orders: np.ndarray
    t: int = 0

    @classmethod
    def initial(cls, params: EchelonParams) -> "InventoryState":
        shape = (params.window, params.echelons)
        inventory = np.zeros(shape)
        inventory[0] = params.initial
        return cls(inventory=inventory, lost=np.zeros(shape), shipped=np.zeros(shape), orders=np.zeros(shape))

    @property
    def on_hand(self) -> np.ndarray:
        return self.inventory[0]

    def arrivals(self, params: EchelonParams) -> np.ndarray:
        """Upstream shipments sent ``L_j`` periods ago, landing this period."""
        upstream = np.column_stack([self.shipped[:, 1:], self.orders[:, -1:]])
        lags = np.asarray(params.lead_times) - 1
        return upstream[lags, np.arange(params.echelons)]

    def features(self) -> np.ndarray:
        phase = (self.t % DEMAND_CYCLE) / DEMAND_CYCLE
        return np.concatenate([
            self.inventory.ravel(), self.lost.ravel(), self.shipped.ravel(), self.orders.ravel(), [phase],
        ])


def observation_size(params: EchelonParams) -> int:
    return 4 * params.window * params.echelons + 1


def draw_demand(t: int, rng: np.random.Generator) -> int:
    return int(rng.integers(0, DEMAND_NOISE_HIGH + 1)) + (t + DEMAND_PHASE) % DEMAND_CYCLE


@numba.njit(cache=True)
def _flows(on_hand, arrivals, demand, orders, prices, holding, penalty):
    m = on_hand.shape[0]
    shipped = np.empty(m)
    lost = np.empty(m)
    inventory = np.empty(m)
    for j in range(m):
        requested = demand if j == 0 else orders[j - 1]
        available = on_hand[j] + arrivals[j]
        s = requested - max(requested - available, 0.0)
        shipped[j] = s
        lost[j] = max(requested - s, 0.0)
        inventory[j] = max(available - s, 0.0)
    reward = 0.0
    for j in range(m):
        upstream = shipped[j + 1] if j + 1 < m else orders[m - 1]
        reward += prices[j] * shipped[j] - prices[j + 1] * upstream - holding[j] * inventory[j] - penalty[j] * lost[j]
    return shipped, lost, inventory, reward


def _push(window: np.ndarray, row: np.ndarray) -> np.ndarray:
    return np.vstack([row[None, :], window[:-1]])


def env_step(
    state: InventoryState,
    orders: np.ndarray,
    rng: np.random.Generator,
    params: EchelonParams = EchelonParams(),
    demand: Optional[float] = None,
) -> tuple[InventoryState, float]:
    """Advance one period. ``demand`` overrides the seeded customer demand."""
    orders = np.asarray(orders, dtype=float)
    if orders.shape != (params.echelons,):
        raise DimensionMismatchError(f"{params.echelons} order quantities expected, got {orders.shape}")
    if np.any(orders < 0.0):
        raise DomainError("order quantities must be non-negative")
    if demand is None:
        demand = draw_demand(state.t, rng)
    _, prices, holding, penalty, _ = params.arrays()
    shipped, lost, inventory, reward = _flows(
        state.on_hand, state.arrivals(params), float(demand), orders, prices, holding, penalty,
    )
    nxt = InventoryState(
        inventory=_push(state.inventory, inventory),
        lost=_push(state.lost, lost),
        shipped=_push(state.shipped, shipped),
        orders=_push(state.orders, orders),
        t=state.t + 1,
    )
    return nxt, float(reward)


@numba.njit(cache=True)
def _simulate(demands, orders, lead_times, prices, holding, penalty, initial, discount):
    episodes, horizon, m = orders.shape
    window = 0
    for j in range(m):
        window = max(window, lead_times[j])
    returns = np.zeros(episodes)
    for e in range(episodes):
        on_hand = initial.copy()
        # ring buffers of upstream shipments, indexed by period modulo the window
        upstream_hist = np.zeros((window, m))
        total = 0.0
        scale = 1.0
        for t in range(horizon):
            arrivals = np.zeros(m)
            for j in range(m):
                if t - lead_times[j] >= 0:
                    arrivals[j] = upstream_hist[(t - lead_times[j]) % window, j]
            shipped, lost, inventory, reward = _flows(
                on_hand, arrivals, demands[e, t], orders[e, t], prices, holding, penalty,
            )
            for j in range(m):
                upstream_hist[t % window, j] = shipped[j + 1] if j + 1 < m else orders[e, t, m - 1]
            on_hand = inventory
            total += scale * reward
            scale *= discount
        returns[e] = total
    return returns


def simulate_orders(
    orders: np.ndarray,
    rng: np.random.Generator,
    params: EchelonParams = EchelonParams(),
    discount: float = 0.99,
    demands: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Discounted returns of open-loop order plans shaped (episodes, horizon, echelons)."""
    orders = np.asarray(orders, dtype=float)
    if orders.ndim != 3 or orders.shape[2] != params.echelons:
        raise DimensionMismatchError(f"orders must be (episodes, horizon, {params.echelons}), got {orders.shape}")
    episodes, horizon, _ = orders.shape
    if demands is None:
        noise = rng.integers(0, DEMAND_NOISE_HIGH + 1, size=(episodes, horizon))
        demands = noise + (np.arange(horizon) + DEMAND_PHASE) % DEMAND_CYCLE
    lead_times, prices, holding, penalty, initial = params.arrays()
    return _simulate(np.asarray(demands, dtype=float), orders, lead_times, prices, holding, penalty, initial, discount)
