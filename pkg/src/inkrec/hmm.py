"""Continuous-density left-to-right HMMs with diagonal-covariance GMM emissions.

States are numbered 1..n between a non-emitting entry (index 0) and exit
(index n+1).  The transition matrix is (n+2) x (n+2) and strictly Bakis:
every row allows only the self-loop and the immediate successor, and entry
feeds state 1 with probability 1.  All likelihood computation happens in the
log domain (log-sum-exp), so 64-frame sequences never underflow.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

MODEL_FORMAT = "inkrec-hmm"
MODEL_VERSION = 1

STOCHASTIC_TOL = 1e-9
# Soft-count below which a mixture component is considered starved.
OCCUPANCY_EPS = 1e-10


@dataclass(frozen=True)
class TrainConfig:
    max_iterations: int = 40
    convergence_threshold: float = 1e-4  # per-frame log-likelihood gain
    variance_floor: float = 1e-4
    target_mixtures: int = 20

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.convergence_threshold <= 0 or self.variance_floor <= 0:
            raise ValueError("thresholds must be positive")
        if self.target_mixtures < 1:
            raise ValueError("target_mixtures must be >= 1")


class GaussianMixture:
    """weights: (M,) simplex; means/variances: (M, d), diagonal covariance."""

    __slots__ = ("weights", "means", "variances")

    def __init__(self, weights, means, variances):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.means = np.asarray(means, dtype=np.float64)
        self.variances = np.asarray(variances, dtype=np.float64)
        if self.means.ndim != 2 or self.means.shape != self.variances.shape:
            raise ValueError("means and variances must both be (M, d)")
        if self.weights.shape != (self.means.shape[0],):
            raise ValueError("one weight per component required")
        if abs(self.weights.sum() - 1.0) > STOCHASTIC_TOL or np.any(self.weights <= 0):
            raise ValueError("weights must be positive and sum to 1")
        if np.any(self.variances <= 0):
            raise ValueError("variances must be positive")

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def log_components(self, x: np.ndarray) -> np.ndarray:
        """(T, M) matrix of log(w_m) + log N(x_t; mu_m, var_m)."""
        diff = x[:, None, :] - self.means[None, :, :]
        expo = -0.5 * np.sum(diff * diff / self.variances, axis=-1)
        norm = -0.5 * np.sum(np.log(2.0 * np.pi * self.variances), axis=-1)
        return np.log(self.weights) + norm + expo

    def log_density(self, x: np.ndarray) -> np.ndarray:
        return np.logaddexp.reduce(self.log_components(x), axis=-1)


class Hmm:
    __slots__ = ("n_states", "transitions", "states")

    def __init__(self, transitions, states: list[GaussianMixture]):
        self.transitions = np.asarray(transitions, dtype=np.float64)
        self.states = list(states)
        self.n_states = len(self.states)
        self._validate()

    def _validate(self):
        n = self.n_states
        a = self.transitions
        if n < 1:
            raise ValueError("need at least one emitting state")
        if a.shape != (n + 2, n + 2):
            raise ValueError(f"transitions must be ({n + 2}, {n + 2})")
        if np.any(a < 0):
            raise ValueError("transition probabilities must be non-negative")
        if np.any(np.abs(a.sum(axis=1) - 1.0) > STOCHASTIC_TOL):
            raise ValueError("every transition row must sum to 1")
        mask = np.zeros_like(a, dtype=bool)
        for i in range(n + 2):
            mask[i, i] = True
            if i + 1 <= n + 1:
                mask[i, i + 1] = True
        if np.any(a[~mask] != 0.0):
            raise ValueError("left-to-right topology allows only self and next transitions")
        if a[0, 1] != 1.0:
            raise ValueError("entry must reach state 1 with probability 1")
        dims = {gm.dim for gm in self.states}
        if len(dims) != 1:
            raise ValueError("all states must share one feature dimension")

    @property
    def dim(self) -> int:
        return self.states[0].dim

    # --- cached log-space views of the Bakis rows -------------------------
    def _log_params(self):
        a = self.transitions
        n = self.n_states
        with np.errstate(divide="ignore"):
            ls = np.log(a[np.arange(1, n + 1), np.arange(1, n + 1)])   # self-loops
            ln = np.log(a[np.arange(1, n + 1), np.arange(2, n + 2)])   # to successor
            le = np.log(a[1 : n + 1, n + 1])                           # to exit
        return ls, ln, le


def _frames(obs) -> np.ndarray:
    frames = obs.frames if hasattr(obs, "frames") else np.asarray(obs, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise ValueError("observation must be a non-empty (T, d) sequence")
    return frames


def _emissions(h: Hmm, x: np.ndarray):
    """logcomp: list of (T, M_j); logb: (T, N) mixture log-densities."""
    logcomp = [gm.log_components(x) for gm in h.states]
    logb = np.column_stack([np.logaddexp.reduce(lc, axis=-1) for lc in logcomp])
    return logcomp, logb


def _forward(h: Hmm, logb: np.ndarray):
    """Full alpha lattice (T, N) plus the total log-likelihood."""
    T, n = logb.shape
    ls, ln, le = h._log_params()
    alpha = np.full((T, n), -np.inf)
    alpha[0, 0] = logb[0, 0]  # entry -> state 1 with probability 1
    for t in range(1, T):
        stay = alpha[t - 1] + ls
        stay[1:] = np.logaddexp(stay[1:], alpha[t - 1, :-1] + ln[:-1])
        alpha[t] = stay + logb[t]
    loglik = float(np.logaddexp.reduce(alpha[-1] + le))
    return alpha, loglik


def _backward(h: Hmm, logb: np.ndarray) -> np.ndarray:
    T, n = logb.shape
    ls, ln, le = h._log_params()
    beta = np.full((T, n), -np.inf)
    beta[-1] = le
    for t in range(T - 2, -1, -1):
        nxt = logb[t + 1] + beta[t + 1]
        stay = ls + nxt
        stay[:-1] = np.logaddexp(stay[:-1], ln[:-1] + nxt[1:])
        beta[t] = stay
    return beta


def log_forward(h: Hmm, obs) -> float:
    """log P(obs | h), the exact marginal over all entry-to-exit state paths.

    Sequences shorter than n_states admit no path under the no-skip topology
    and score -inf rather than raising.
    """
    x = _frames(obs)
    if x.shape[0] < h.n_states:
        return -np.inf
    _, logb = _emissions(h, x)
    _, loglik = _forward(h, logb)
    return loglik


def viterbi(h: Hmm, obs) -> tuple[list[int], float]:
    """Best admissible state path (1-based states) and its joint log-probability.

    Ties break toward the lower state index at every decision, which makes the
    returned path the lexicographically smallest maximizer.  No admissible
    path yields ([], -inf).
    """
    x = _frames(obs)
    n = h.n_states
    T = x.shape[0]
    if T < n:
        return [], -np.inf
    _, logb = _emissions(h, x)
    ls, ln, le = h._log_params()
    delta = np.full((T, n), -np.inf)
    from_prev = np.zeros((T, n), dtype=bool)
    delta[0, 0] = logb[0, 0]
    for t in range(1, T):
        stay = delta[t - 1] + ls
        move = np.full(n, -np.inf)
        move[1:] = delta[t - 1, :-1] + ln[:-1]
        # >= : on a tie prefer arriving from the lower (previous) state
        from_prev[t] = move >= stay
        delta[t] = np.where(from_prev[t], move, stay) + logb[t]
    final = delta[-1] + le
    best = float(np.max(final))
    if best == -np.inf:
        return [], -np.inf
    j = int(np.argmax(final))  # argmax takes the first = lowest index on ties
    path = [j]
    for t in range(T - 1, 0, -1):
        if from_prev[t, j]:
            j -= 1
        path.append(j)
    path.reverse()
    return [p + 1 for p in path], best


def flat_start(data, n_states: int, n_mix: int = 1, variance_floor: float = 1e-4) -> Hmm:
    """Uniform-transition Bakis model with every state at the global moments.

    Deterministic given data order.  With n_mix > 1 the components start
    identical at equal weight; splitting during training is what separates
    them in the usual schedule.
    """
    if not data:
        raise ValueError("flat_start needs at least one sequence")
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    seqs = [_frames(o) for o in data]
    for i, x in enumerate(seqs):
        if x.shape[0] < n_states:
            raise ValueError(
                f"sequence {i} has {x.shape[0]} frames, shorter than {n_states} states"
            )
    allx = np.concatenate(seqs, axis=0)
    mean = allx.mean(axis=0)
    var = np.maximum(allx.var(axis=0), variance_floor)
    n = n_states
    a = np.zeros((n + 2, n + 2))
    a[0, 1] = 1.0
    for j in range(1, n + 1):
        a[j, j] = 0.5
        a[j, j + 1] = 0.5
    a[n + 1, n + 1] = 1.0
    states = [
        GaussianMixture(
            np.full(n_mix, 1.0 / n_mix),
            np.tile(mean, (n_mix, 1)),
            np.tile(var, (n_mix, 1)),
        )
        for _ in range(n)
    ]
    return Hmm(a, states)


def baum_welch(h: Hmm, data, cfg: TrainConfig) -> tuple[Hmm, list[float]]:
    """EM re-estimation; returns the new model and the per-iteration total
    log-likelihood trace (each entry evaluated before that iteration's update).

    Stops when the per-frame gain drops below cfg.convergence_threshold or
    after cfg.max_iterations.  Components whose soft count collapses are
    dropped (with a warning) and the remaining weights renormalized.
    """
    if not data:
        raise ValueError("baum_welch needs at least one sequence")
    seqs = [_frames(o) for o in data]
    usable = [x for x in seqs if x.shape[0] >= h.n_states]
    if len(usable) < len(seqs):
        logger.warning(
            "dropping %d sequence(s) shorter than %d states",
            len(seqs) - len(usable), h.n_states,
        )
    if not usable:
        raise ValueError("no sequence admits a state path (all shorter than n_states)")
    total_frames = sum(x.shape[0] for x in usable)

    trace: list[float] = []
    for _ in range(cfg.max_iterations):
        new_h, loglik = _em_step(h, usable, cfg)
        trace.append(loglik)
        if len(trace) > 1 and (loglik - trace[-2]) / total_frames < cfg.convergence_threshold:
            break
        h = new_h
    return h, trace


def _em_step(h: Hmm, seqs: list[np.ndarray], cfg: TrainConfig) -> tuple[Hmm, float]:
    n = h.n_states
    d = h.dim
    ls, ln, le = h._log_params()
    mix = [gm.n_components for gm in h.states]

    self_num = np.zeros(n)
    next_num = np.zeros(n)   # j -> j+1 between emitting states (j < n)
    exit_num = np.zeros(n)
    state_den = np.zeros(n)
    occ = [np.zeros(m) for m in mix]
    first = [np.zeros((m, d)) for m in mix]
    second = [np.zeros((m, d)) for m in mix]

    total = 0.0
    scored = 0
    for x in seqs:
        logcomp, logb = _emissions(h, x)
        alpha, loglik = _forward(h, logb)
        if not np.isfinite(loglik):
            logger.warning("sequence scored -inf under the current model; skipped")
            continue
        beta = _backward(h, logb)
        total += loglik
        scored += 1

        gamma = np.exp(alpha + beta - loglik)
        state_den += gamma.sum(axis=0)
        # Transition soft counts.  beta[-1] already carries the exit factor,
        # so gamma's last row is exactly the exit count per state.
        bb = logb[1:] + beta[1:]
        self_num += np.exp(alpha[:-1] + ls + bb - loglik).sum(axis=0)
        next_num[:-1] += np.exp(alpha[:-1, :-1] + ln[:-1] + bb[:, 1:] - loglik).sum(axis=0)
        exit_num += gamma[-1]
        # Component responsibilities within each state.
        for j in range(n):
            resp = np.exp(logcomp[j] - logb[:, j, None]) * gamma[:, j, None]
            occ[j] += resp.sum(axis=0)
            first[j] += resp.T @ x
            second[j] += resp.T @ (x * x)

    if scored == 0:
        raise ValueError("no sequence admits a state path under this model")

    a = h.transitions.copy()
    for j in range(n):
        row = np.zeros(n + 2)
        row[j + 1] = self_num[j]
        row[j + 2] = next_num[j] if j < n - 1 else exit_num[j]
        s = row.sum()
        if s > 0:
            a[j + 1] = row / s
        # zero occupancy: keep the previous row rather than divide by zero

    states = []
    for j in range(n):
        keep = occ[j] > OCCUPANCY_EPS
        if not np.any(keep):
            logger.warning("state %d lost all mixture occupancy; kept previous mixture", j + 1)
            states.append(h.states[j])
            continue
        if not np.all(keep):
            logger.warning(
                "state %d: dropped %d zero-occupancy component(s)", j + 1, int((~keep).sum())
            )
        o = occ[j][keep]
        mu = first[j][keep] / o[:, None]
        var = second[j][keep] / o[:, None] - mu * mu
        var = np.maximum(var, cfg.variance_floor)
        w = o / o.sum()
        states.append(GaussianMixture(w, mu, var))

    return Hmm(a, states), total


def split_mixtures(h: Hmm, target_mixtures: int | None = None) -> Hmm:
    """Double each state's component count, capped at target_mixtures.

    The heaviest components split first when only some can: each chosen
    component becomes two at half weight with means nudged +-0.2 stddev.
    """
    states = []
    for gm in h.states:
        m = gm.n_components
        goal = 2 * m if target_mixtures is None else min(2 * m, max(target_mixtures, m))
        k = goal - m
        if k == 0:
            states.append(GaussianMixture(gm.weights.copy(), gm.means.copy(), gm.variances.copy()))
            continue
        # heaviest first; ties resolved by lower index via stable sort
        chosen = set(np.argsort(-gm.weights, kind="stable")[:k])
        w, mu, var = [], [], []
        for i in range(m):
            if i in chosen:
                sd = np.sqrt(gm.variances[i])
                for sign in (+1.0, -1.0):
                    w.append(gm.weights[i] / 2.0)
                    mu.append(gm.means[i] + sign * 0.2 * sd)
                    var.append(gm.variances[i])
            else:
                w.append(gm.weights[i])
                mu.append(gm.means[i])
                var.append(gm.variances[i])
        states.append(GaussianMixture(np.array(w), np.array(mu), np.array(var)))
    return Hmm(h.transitions.copy(), states)


def save_model(h: Hmm, path: str | Path) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "n_states": h.n_states,
        "dim": h.dim,
        "transitions": h.transitions.tolist(),
        "states": [
            {
                "weights": gm.weights.tolist(),
                "means": gm.means.tolist(),
                "variances": gm.variances.tolist(),
            }
            for gm in h.states
        ],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path: str | Path) -> Hmm:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: not a valid model file ({e.msg})") from e
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not an {MODEL_FORMAT} document")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {doc.get('version')!r}")
    try:
        states = [
            GaussianMixture(s["weights"], s["means"], s["variances"]) for s in doc["states"]
        ]
        h = Hmm(doc["transitions"], states)
    except (KeyError, TypeError) as e:
        raise ValueError(f"{path}: malformed model document ({e})") from e
    if h.n_states != doc.get("n_states") or h.dim != doc.get("dim"):
        raise ValueError(f"{path}: declared dimensions do not match contents")
    return h
