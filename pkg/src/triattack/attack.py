"""The triangle-geometry attack engine.

Flow per sample: verify the benign label (1 query), find a large adversarial
perturbation by random draws plus bisection toward the boundary, then loop
over randomly sampled 2-D coefficient-space planes. In each plane the engine
probes the smallest useful angle beta at both signs and, on success, runs a
few bisection steps pushing beta as high as the oracle allows; the best
adversarial candidate found replaces the adversary when it is strictly
closer. The angle alpha adapts after every query: up on success, down (more
slowly) on failure, clamped to [pi/2 - tau, pi/2 + tau].

Query accounting is exact: one oracle call, one budget unit, one trace
record. Candidates are clamped to [0, 1] and mapped through the oracle's
canonical form before querying, and an accepted adversary is re-encoded from
the image that was actually judged.
"""

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .bench import TERM_BUDGET, TERM_EARLY_STOP, TERM_INIT_FAILURE, rmse
from .errors import (
    BudgetExhausted,
    DegeneratePlaneError,
    InitializationError,
    ParameterError,
)
from .freq import check_image_shape, dct2, idct2, low_freq_mask, sample_direction
from .geometry import TriangleAngles, beta_bounds, candidate_vertex, make_plane
from . import kernels
from .oracle import CountingOracle, QueryBudget, counted

PHASE_INIT = "init"
PHASE_PROBE = "probe"
PHASE_BISECT = "bisect"
PHASE_BOUNDARY = "boundary_bisect"

OUTCOME_ADV = "adversarial"
OUTCOME_BENIGN = "benign"

# Degenerate planes cost no queries; cap the resampling per round and guard
# against configs where no round can ever consume a query.
MAX_PLANE_RESAMPLES = 16
MAX_IDLE_ROUNDS = 1000


@dataclass
class AttackConfig:
    """Engine parameters. Defaults follow the reference hyper-parameters:
    two bisection steps per plane, 3-coefficient directions, gamma 0.01,
    lambda 0.05, tau 0.1, low-frequency ratio 0.1, beta floor pi/16."""

    max_queries: int = 1000
    iters_per_subspace: int = 2
    line_dim: int = 3
    gamma: float = 0.01
    lam: float = 0.05
    tau: float = 0.1
    freq_ratio: float = 0.1
    beta_min: float = math.pi / 16
    alpha_init: float = math.pi / 2
    init_max_resamples: int = 100
    init_bisect_tol: float = 1e-3
    boundary_bisect_iters: int = 0
    early_stop_rmse: float | None = None
    input_space: bool = False  # identity transform instead of the DCT

    def __post_init__(self):
        if self.max_queries < 1:
            raise ParameterError("max_queries must be >= 1")
        if self.tau >= math.pi / 6:
            raise ParameterError("tau must be < pi/6 to keep the beta interval feasible")
        if self.gamma <= 0:
            raise ParameterError("gamma must be positive")
        if not (0.0 < self.lam <= 1.0):
            raise ParameterError("lambda must be in (0, 1]")
        if self.iters_per_subspace < 1:
            raise ParameterError("iters_per_subspace must be >= 1")
        if self.line_dim < 1:
            raise ParameterError("line_dim must be >= 1")
        if not (0.0 < self.freq_ratio <= 1.0):
            raise ParameterError("freq_ratio must be in (0, 1]")
        if not (0.0 < self.beta_min < math.pi / 2):
            raise ParameterError("beta_min must be in (0, pi/2)")
        if self.init_max_resamples < 1:
            raise ParameterError("init_max_resamples must be >= 1")
        if self.init_bisect_tol <= 0:
            raise ParameterError("init_bisect_tol must be positive")
        if self.boundary_bisect_iters < 0:
            raise ParameterError("boundary_bisect_iters must be >= 0")


@dataclass(frozen=True)
class AngleState:
    """Adaptive angle alpha with its update constants."""

    alpha: float
    gamma: float = 0.01
    lam: float = 0.05
    tau: float = 0.1


def update_alpha(state: AngleState, success: bool) -> AngleState:
    """One adaptation step: alpha + gamma on success, alpha - lambda*gamma on
    failure, clamped to [pi/2 - tau, pi/2 + tau]."""
    if success:
        alpha = min(state.alpha + state.gamma, math.pi / 2 + state.tau)
    else:
        alpha = max(state.alpha - state.lam * state.gamma, math.pi / 2 - state.tau)
    return replace(state, alpha=alpha)


@dataclass(frozen=True)
class TraceRecord:
    """One oracle query: its 1-based index, which phase issued it, the
    distortion of the queried image, the best distortion so far, alpha after
    this query's adaptation, and the oracle's verdict."""

    query_index: int
    phase: str
    candidate_rmse: float
    best_rmse: float
    alpha: float
    outcome: str


@dataclass
class AttackState:
    """Mutable per-run state shared by the engine operations."""

    x_img: np.ndarray
    y: int
    cfg: AttackConfig
    x_f: np.ndarray = field(init=False)
    mask: np.ndarray = field(init=False)
    xadv_img: np.ndarray | None = None
    xadv_f: np.ndarray | None = None
    best_adv: np.ndarray | None = None
    best_rmse: float = math.inf
    alpha: float = field(init=False)
    trace: list = field(default_factory=list)

    def __post_init__(self):
        check_image_shape(self.x_img)
        self.x_img = np.asarray(self.x_img, dtype=np.float64)
        fwd, _, mask = space_for(self.cfg, self.x_img.shape)
        self.x_f = fwd(self.x_img)
        self.mask = mask
        self.alpha = self.cfg.alpha_init

    @property
    def queries_used(self) -> int:
        return len(self.trace)

    def record(self, phase, candidate_rmse, adversarial, alpha=None, image=None):
        """Log one query; track the best adversarial image seen."""
        if alpha is not None:
            self.alpha = alpha
        if adversarial and image is not None and candidate_rmse < self.best_rmse:
            self.best_rmse = candidate_rmse
            self.best_adv = image
        self.trace.append(
            TraceRecord(
                query_index=len(self.trace) + 1,
                phase=phase,
                candidate_rmse=candidate_rmse,
                best_rmse=self.best_rmse,
                alpha=self.alpha,
                outcome=OUTCOME_ADV if adversarial else OUTCOME_BENIGN,
            )
        )

    def set_adversary(self, image: np.ndarray, coeffs: np.ndarray | None = None) -> None:
        """Adopt a (clamped, canonical) adversarial image; re-encode its
        coefficient representation so the geometry tracks the judged image."""
        if coeffs is None:
            fwd, _, _ = space_for(self.cfg, self.x_img.shape)
            coeffs = fwd(image)
        self.xadv_img = image
        self.xadv_f = coeffs

    @property
    def adversary_distance(self) -> float:
        return kernels.l2dist(self.xadv_f, self.x_f)


@dataclass
class AttackResult:
    best_adv: np.ndarray | None
    final_rmse: float
    trace: list
    termination: str
    queries_used: int


def space_for(cfg: AttackConfig, shape):
    """(forward, inverse, sampling mask) for the configured working space:
    per-channel orthonormal DCT with the low-frequency mask, or the identity
    on the full pixel grid in input-space mode."""
    if cfg.input_space:
        ident = lambda arr: arr  # noqa: E731
        return ident, ident, np.ones(shape, dtype=bool)
    return dct2, idct2, low_freq_mask(shape, cfg.freq_ratio)


def initialize(x, y, oracle, cfg, rng, state=None):
    """Find a large adversarial perturbation: draw uniform random images
    until one is adversarial, then bisect along the segment to x until the
    endpoint gap is at most init_bisect_tol in RMSE. Returns the adversarial
    image and the number of queries spent. The caller must already have
    verified that the oracle labels x as y."""
    if state is None:
        state = AttackState(np.asarray(x, dtype=np.float64), y, cfg)
    start = state.queries_used
    x = state.x_img

    far = None
    for _ in range(cfg.init_max_resamples):
        draw = oracle.canonicalize(rng.random(x.shape))
        adversarial = oracle.predict(draw) != y
        state.record(PHASE_INIT, rmse(x, draw), adversarial, image=draw if adversarial else None)
        if adversarial:
            far = draw
            break
    if far is None:
        raise InitializationError(
            f"no adversarial image in {cfg.init_max_resamples} uniform draws"
        )

    # Bisect on [x, far]; t=0 benign, t=1 adversarial. The endpoint gap in
    # RMSE is (hi - lo) times the full-segment RMSE.
    segment_rmse = rmse(x, far)
    lo, hi = 0.0, 1.0
    adv_img = far
    while (hi - lo) * segment_rmse > cfg.init_bisect_tol:
        mid = 0.5 * (lo + hi)
        img = oracle.canonicalize(x + mid * (far - x))
        adversarial = oracle.predict(img) != y
        state.record(PHASE_INIT, rmse(x, img), adversarial, image=img if adversarial else None)
        if adversarial:
            hi = mid
            adv_img = img
        else:
            lo = mid
    return adv_img, state.queries_used - start


def subspace_round(state, angle_state, oracle, cfg, rng):
    """One sampled plane: probe the smallest useful beta at both signs, give
    up the plane if neither is adversarial, otherwise bisect beta upward for
    iters_per_subspace steps and adopt the closest adversarial candidate
    found (strict improvement only). Every query adapts alpha."""
    fwd, inv, _ = space_for(cfg, state.x_img.shape)
    current_distance = state.adversary_distance

    plane = None
    for _ in range(MAX_PLANE_RESAMPLES):
        raw = sample_direction(state.mask, cfg.line_dim, rng)
        try:
            plane = make_plane(state.x_f, state.xadv_f, raw)
            break
        except DegeneratePlaneError:
            continue
    if plane is None:
        return state, angle_state

    # Bounds are fixed from the angle at round entry; candidates themselves
    # use the adapting alpha.
    lo, hi = beta_bounds(angle_state.alpha, cfg.beta_min)
    successes = []

    def try_beta(beta_signed, phase):
        nonlocal angle_state
        alpha = angle_state.alpha
        if alpha + abs(beta_signed) >= math.pi:
            # Alpha drifted up since the bounds were fixed and this beta no
            # longer forms a triangle; reject geometrically, free of charge.
            return False
        cand_f = candidate_vertex(
            state.x_f, state.xadv_f, plane, TriangleAngles(alpha, beta_signed)
        )
        img = oracle.canonicalize(kernels.clamp01(inv(cand_f)))
        adversarial = oracle.predict(img) != state.y
        angle_state = update_alpha(angle_state, adversarial)
        distortion = rmse(state.x_img, img)
        state.record(phase, distortion, adversarial, alpha=angle_state.alpha, image=img)
        if adversarial:
            successes.append((distortion, img))
        return adversarial

    if try_beta(lo, PHASE_PROBE):
        sign = 1.0
    elif try_beta(-lo, PHASE_PROBE):
        sign = -1.0
    else:
        return state, angle_state

    for _ in range(cfg.iters_per_subspace):
        mid = 0.5 * (lo + hi)
        if try_beta(sign * mid, PHASE_BISECT):
            lo = mid
        elif try_beta(-sign * mid, PHASE_BISECT):
            sign = -sign
            lo = mid
        else:
            hi = mid

    _, best_img = min(successes, key=lambda pair: pair[0])
    best_f = fwd(best_img)
    if kernels.l2dist(best_f, state.x_f) < current_distance:
        state.set_adversary(best_img, coeffs=best_f)
    return state, angle_state


def boundary_bisect(state, y, oracle, cfg):
    """Ablation step: bisect along the pixel-space segment [x, adversary],
    keeping the adversarial endpoint. Spends one query per step and does not
    touch alpha. Disabled at the default boundary_bisect_iters = 0."""
    if cfg.boundary_bisect_iters < 1:
        return state
    x = state.x_img
    adv = state.xadv_img
    lo, hi = 0.0, 1.0
    new_adv = None
    for _ in range(cfg.boundary_bisect_iters):
        mid = 0.5 * (lo + hi)
        img = oracle.canonicalize(x + mid * (adv - x))
        adversarial = oracle.predict(img) != y
        state.record(PHASE_BOUNDARY, rmse(x, img), adversarial, image=img if adversarial else None)
        if adversarial:
            hi = mid
            new_adv = img
        else:
            lo = mid
    if new_adv is not None:
        state.set_adversary(new_adv)
    return state


def run(x, y, oracle, cfg=None, rng=None, recheck=True):
    """Full attack on one sample. Wraps the oracle with a fresh budget of
    cfg.max_queries unless it is already counting. Returns the best
    adversarial image ever seen (or None when initialization failed)."""
    cfg = cfg if cfg is not None else AttackConfig()
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    if not isinstance(oracle, CountingOracle):
        oracle = counted(oracle, QueryBudget(cfg.max_queries))

    state = AttackState(np.asarray(x, dtype=np.float64), int(y), cfg)
    termination = TERM_BUDGET
    try:
        benign = oracle.canonicalize(state.x_img)
        label0 = oracle.predict(benign)
        state.record(PHASE_INIT, rmse(state.x_img, benign), label0 != y)
        if label0 != y:
            # The sample is already misclassified; there is no perturbation
            # to minimize, so the run is not applicable.
            termination = TERM_INIT_FAILURE
        else:
            xadv0, _ = initialize(state.x_img, y, oracle, cfg, rng, state=state)
            state.set_adversary(xadv0)
            angle_state = AngleState(cfg.alpha_init, cfg.gamma, cfg.lam, cfg.tau)
            idle_rounds = 0
            while True:
                if oracle.budget.remaining <= 0:
                    break
                if cfg.early_stop_rmse is not None and state.best_rmse <= cfg.early_stop_rmse:
                    termination = TERM_EARLY_STOP
                    break
                before = state.queries_used
                state, angle_state = subspace_round(state, angle_state, oracle, cfg, rng)
                if cfg.boundary_bisect_iters > 0:
                    boundary_bisect(state, y, oracle, cfg)
                idle_rounds = idle_rounds + 1 if state.queries_used == before else 0
                if idle_rounds >= MAX_IDLE_ROUNDS:
                    raise RuntimeError(
                        "no queries consumed in "
                        f"{MAX_IDLE_ROUNDS} consecutive rounds; degenerate configuration"
                    )
    except BudgetExhausted:
        termination = TERM_BUDGET
    except InitializationError:
        termination = TERM_INIT_FAILURE

    if recheck and state.best_adv is not None:
        # Post-hoc safety check outside the budget: a deterministic oracle
        # must still call the stored image adversarial.
        if oracle.inner.predict(state.best_adv) == y:
            warnings.warn(
                "stored adversarial image re-queried to the benign label; "
                "the oracle appears non-deterministic",
                RuntimeWarning,
                stacklevel=2,
            )
    return AttackResult(
        best_adv=state.best_adv,
        final_rmse=state.best_rmse,
        trace=state.trace,
        termination=termination,
        queries_used=state.queries_used,
    )
