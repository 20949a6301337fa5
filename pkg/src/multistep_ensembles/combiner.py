"""Forecast combination rules and their application across the forecasting horizon.

Weights are returned as ``(H, K)`` arrays: one row per horizon, one column per
ensemble member, each row on the probability simplex. Member forecasts for a
single origin are ``(K, H)`` blocks.

Dynamic rules keep one independent state ("stream") per loss signal: one per
horizon for IH, the horizon-1 stream for FHF, the horizon-H stream for LHB and
a stream fed with horizon-averaged losses for CH.
"""
from __future__ import annotations

import math
from collections import deque

import numpy as np

from .errors import ConfigError, IntegrityError, ShapeError

RULES = ("Simple", "LossTrain", "Best", "Window", "Blast", "EWA", "FS", "MLpol", "ADE")
STRATEGIES = ("CH", "IH", "FHF", "LHB")
DYNAMIC_RULES = ("Window", "Blast", "EWA", "FS", "MLpol")
FEEDBACK_MODES = ("optimistic", "strict")
EPS = 1e-8


def method_name(rule, strategy=None):
    return rule if rule == "Simple" else f"{rule}_{strategy}"


def parse_method(name):
    """``"Window_FHF"`` -> ``("Window", "FHF")``; ``"Simple"`` -> ``("Simple", None)``."""
    if name == "Simple":
        return "Simple", None
    rule, _, strategy = name.partition("_")
    if rule not in RULES or rule == "Simple" or strategy not in STRATEGIES:
        raise ConfigError(f"unknown method {name!r}")
    return rule, strategy


def all_methods():
    """Simple plus every performance-based rule under every strategy (33 names)."""
    return ["Simple"] + [method_name(r, s) for r in RULES if r != "Simple" for s in STRATEGIES]


# -- transfer functions -------------------------------------------------------

def uniform_weights(k):
    return np.full(k, 1.0 / k)


def inverse_loss_weights(losses, eps=EPS):
    """``w_k ∝ 1 / (L_k + eps)`` along the last axis."""
    inv = 1.0 / (np.asarray(losses, dtype=float) + eps)
    return inv / inv.sum(axis=-1, keepdims=True)


def select_best(losses):
    """One-hot on the smallest loss; ties go to the lowest index."""
    losses = np.asarray(losses, dtype=float)
    out = np.zeros_like(losses)
    np.put_along_axis(out, np.argmin(losses, axis=-1)[..., None], 1.0, axis=-1)
    return out


def ewa_weights(scaled_cum_losses, eta):
    """Exponential weights ``w_k ∝ exp(-eta * L_k)``."""
    z = -eta * np.asarray(scaled_cum_losses, dtype=float)
    z -= z.max()
    w = np.exp(z)
    return w / w.sum()


def fixed_share(weights, alpha):
    weights = np.asarray(weights, dtype=float)
    return (1.0 - alpha) * weights + alpha / weights.size


def mlpol_weights(regrets, p=2.0):
    """Polynomial potential weights ``w_k ∝ max(0, R_k)^(p-1)``; uniform if no regret is positive."""
    regrets = np.asarray(regrets, dtype=float)
    pos = np.maximum(regrets, 0.0) ** (p - 1.0)
    pos[regrets <= 0] = 0.0
    total = pos.sum()
    if not total > 0:
        return uniform_weights(regrets.size)
    return pos / total


def error_softmax_weights(predicted_errors):
    """Softmax of negative predicted errors after scaling them by their mean."""
    e = np.asarray(predicted_errors, dtype=float)
    mean = e.mean()
    if not mean > 0:
        return uniform_weights(e.size)
    return ewa_weights(e / mean, 1.0)


def adaptive_eta(n_members, t):
    if t <= 0 or n_members < 2:
        return 0.0
    return math.sqrt(8.0 * math.log(n_members) / t)


# -- horizon strategies -------------------------------------------------------

def apply_horizon_strategy(per_horizon_weights, strategy, per_horizon_losses=None, weight_fn=None):
    """Turn IH weights (or per-horizon losses, for CH) into the final ``(H, K)`` matrix.

    CH needs ``per_horizon_losses`` as a ``(K, H)`` array and a ``weight_fn``
    mapping a K-vector of losses to weights; the losses are averaged over the
    horizon before weighting.
    """
    if strategy == "CH":
        if per_horizon_losses is None or weight_fn is None:
            raise ConfigError("CH needs per-horizon losses and a weight function")
        losses = np.asarray(per_horizon_losses, dtype=float)
        H = losses.shape[1] if per_horizon_weights is None else np.shape(per_horizon_weights)[0]
        row = weight_fn(losses.mean(axis=1))
        return np.tile(row, (H, 1))
    W = np.asarray(per_horizon_weights, dtype=float)
    if strategy == "IH":
        return W.copy()
    if strategy == "FHF":
        return np.tile(W[0], (W.shape[0], 1))
    if strategy == "LHB":
        return np.tile(W[-1], (W.shape[0], 1))
    raise ConfigError(f"unknown strategy {strategy!r}")


def _static_weights(losses, strategy, weight_fn):
    """Weights from a fixed ``(K, H)`` loss matrix under ``strategy``."""
    losses = np.asarray(losses, dtype=float)
    if strategy == "CH":
        return apply_horizon_strategy(None, "CH", losses, weight_fn)
    per_h = np.stack([weight_fn(losses[:, h]) for h in range(losses.shape[1])])
    return apply_horizon_strategy(per_h, strategy)


def weights_losstrain(train_losses, strategy):
    """Static inverse-loss weights from out-of-sample training losses ``(K, H)``."""
    return _static_weights(train_losses, strategy, inverse_loss_weights)


def weights_best(train_losses, strategy):
    return _static_weights(train_losses, strategy, select_best)


def ade_weights(meta, lag_input, strategy):
    """ADE weights for one origin from the meta-models' predicted absolute errors."""
    errors = meta.predict(np.asarray(lag_input, dtype=float)[None, :])[:, 0, :]
    return ade_weights_from_errors(errors, strategy)


def ade_weights_from_errors(predicted_errors, strategy):
    """``predicted_errors`` is ``(K, H)``: member k's predicted |error| at each horizon."""
    return _static_weights(np.maximum(predicted_errors, 0.0), strategy, error_softmax_weights)


def combine(block, W):
    """Per-horizon weighted sum: ``out[h] = sum_k W[h, k] * block[k, h]``."""
    block = np.asarray(block, dtype=float)
    W = np.asarray(W, dtype=float)
    if block.ndim != 2 or W.shape != block.shape[::-1]:
        raise ShapeError(f"forecast block {block.shape} does not match weights {W.shape}")
    return np.einsum("hk,kh->h", W, block)


def _weighted_sum(w, x):
    # correctly rounded, so the result does not depend on memory layout (BLAS vs strided loops)
    return math.fsum(np.asarray(w, dtype=float) * np.asarray(x, dtype=float))


# -- per-signal rule state ------------------------------------------------------

class _WindowStream:
    def __init__(self, k, window, select):
        self.k = k
        self.buffer = deque(maxlen=window)
        self.select = select

    def window_losses(self):
        if not self.buffer:
            return None
        return np.mean(self.buffer, axis=0)

    def weights(self):
        losses = self.window_losses()
        if losses is None:
            return uniform_weights(self.k)
        return select_best(losses) if self.select else inverse_loss_weights(losses)

    def observe(self, losses, ensemble_loss):
        self.buffer.append(np.asarray(losses, dtype=float))

    @property
    def n_updates(self):
        return len(self.buffer)


class _EWAStream:
    def __init__(self, k, eta=None):
        self.k = k
        self.eta = eta
        self.cum_loss = np.zeros(k)
        self.max_loss = 0.0
        self.t = 0

    def scaled_losses(self):
        if self.max_loss <= 0:
            return np.zeros(self.k)
        return self.cum_loss / self.max_loss

    def current_eta(self):
        if self.t == 0:
            return 0.0
        return adaptive_eta(self.k, self.t) if self.eta is None else self.eta

    def weights(self):
        if self.t == 0:
            return uniform_weights(self.k)
        return ewa_weights(self.scaled_losses(), self.current_eta())

    def observe(self, losses, ensemble_loss):
        losses = np.asarray(losses, dtype=float)
        self.cum_loss += losses
        self.max_loss = max(self.max_loss, float(losses.max()))
        self.t += 1

    @property
    def n_updates(self):
        return self.t


class _FixedShareStream(_EWAStream):
    """EWA whose per-step multiplicative update is followed by mixing in a uniform share.

    The multiplicative factor of each step is the change of the EWA exponent
    ``eta_t * L_t / M_t``, so with ``alpha = 0`` the weights coincide with EWA.
    """

    def __init__(self, k, eta=None, alpha=0.1):
        super().__init__(k, eta)
        self.alpha = alpha
        self.log_w = np.full(k, -math.log(k))
        self.potential = np.zeros(k)

    def weights(self):
        w = np.exp(self.log_w - self.log_w.max())
        return w / w.sum()

    def observe(self, losses, ensemble_loss):
        super().observe(losses, ensemble_loss)
        potential = self.current_eta() * self.scaled_losses()
        z = self.log_w - (potential - self.potential)
        self.potential = potential
        v = np.exp(z - z.max())
        w = fixed_share(v / v.sum(), self.alpha)
        with np.errstate(divide="ignore"):
            self.log_w = np.log(w)


class _MLpolStream:
    def __init__(self, k, p=2.0):
        self.k = k
        self.p = p
        self.regret = np.zeros(k)
        self.t = 0

    def weights(self):
        return mlpol_weights(self.regret, self.p)

    def observe(self, losses, ensemble_loss):
        self.regret += ensemble_loss - np.asarray(losses, dtype=float)
        self.t += 1

    @property
    def n_updates(self):
        return self.t


def _make_stream(rule, k, cfg):
    if rule == "Window":
        return _WindowStream(k, cfg["window"], select=False)
    if rule == "Blast":
        return _WindowStream(k, cfg["window"], select=True)
    if rule == "EWA":
        return _EWAStream(k, cfg["eta"])
    if rule == "FS":
        return _FixedShareStream(k, cfg["eta"], cfg["alpha"])
    if rule == "MLpol":
        return _MLpolStream(k, cfg["p"])
    raise ConfigError(f"{rule} has no dynamic state")


# -- the combiner -------------------------------------------------------------------

class Combiner:
    """Weights for one (rule, strategy) method, advanced by feedback over forecast origins.

    Parameters
    ----------
    rule, strategy : str
        One of ``RULES`` and ``STRATEGIES`` (strategy is ignored for Simple).
    n_members, horizon : int
        Ensemble size K and forecasting horizon H.
    window : int
        Window length for Window and Blast, in forecast origins.
    train_losses : array (K, H), optional
        Out-of-sample training losses; required by LossTrain and Best.
    meta : MetaModelSet, optional
        Required by ADE.
    eta, alpha, p : float
        EWA/FS learning rate (None = adaptive), FS share and MLpol exponent.
    """

    def __init__(self, rule, strategy, n_members, horizon, window=50, train_losses=None,
                 meta=None, eta=None, alpha=0.1, p=2.0):
        if rule not in RULES:
            raise ConfigError(f"unknown combination rule {rule!r}")
        if rule != "Simple" and strategy not in STRATEGIES:
            raise ConfigError(f"unknown horizon strategy {strategy!r}")
        if window < 1:
            raise ConfigError("window length must be >= 1")
        if n_members < 1 or horizon < 1:
            raise ConfigError("need at least one member and one horizon")
        if eta is not None and eta < 0:
            raise ConfigError("eta must be >= 0")
        if not 0.0 <= alpha <= 1.0:
            raise ConfigError("fixed share alpha must lie in [0, 1]")
        if p < 1:
            raise ConfigError("MLpol exponent must be >= 1")
        self.rule = rule
        self.strategy = strategy if rule != "Simple" else None
        self.k = int(n_members)
        self.H = int(horizon)
        self.window = int(window)
        self.meta = meta
        self.cold_starts = 0
        self._seen = set()
        self._emitted = {}
        self._pending_ch = {}
        self._static = None

        if rule in ("LossTrain", "Best"):
            if train_losses is None:
                raise ConfigError(f"{rule} needs training losses")
            train_losses = np.asarray(train_losses, dtype=float)
            if train_losses.shape != (self.k, self.H):
                raise ShapeError(f"training losses must be ({self.k}, {self.H}), got {train_losses.shape}")
            if not np.all(np.isfinite(train_losses)):
                raise ConfigError("training losses must be finite")
            fn = weights_losstrain if rule == "LossTrain" else weights_best
            self._static = fn(train_losses, strategy)
        elif rule == "Simple":
            self._static = np.full((self.H, self.k), 1.0 / self.k)
        elif rule == "ADE":
            if meta is None:
                raise ConfigError("ADE needs fitted meta-models")

        self.streams = {}
        if rule in DYNAMIC_RULES:
            cfg = {"window": self.window, "eta": eta, "alpha": alpha, "p": p}
            for key in self._stream_keys():
                self.streams[key] = _make_stream(rule, self.k, cfg)

    def _stream_keys(self):
        if self.strategy == "IH":
            return list(range(self.H))
        if self.strategy == "FHF":
            return [0]
        if self.strategy == "LHB":
            return [self.H - 1]
        return ["CH"]

    @property
    def name(self):
        return method_name(self.rule, self.strategy)

    def weights(self, origin=None, lag_input=None, predicted_errors=None):
        """Weight matrix ``(H, K)`` for forecasting at ``origin``."""
        if self._static is not None:
            W = self._static
        elif self.rule == "ADE":
            if predicted_errors is None:
                if lag_input is None:
                    raise ConfigError("ADE weights need the lag input or predicted errors")
                W = ade_weights(self.meta, lag_input, self.strategy)
            else:
                W = ade_weights_from_errors(predicted_errors, self.strategy)
        else:
            if all(s.n_updates == 0 for s in self.streams.values()):
                self.cold_starts += 1
            if self.strategy == "IH":
                W = np.stack([self.streams[h].weights() for h in range(self.H)])
            else:
                (stream,) = self.streams.values()
                W = np.tile(stream.weights(), (self.H, 1))
        if origin is not None and self.streams:
            self._emitted[origin] = W
        return W

    def update(self, origin, h, forecasts, actual):
        """Feed the realised value of horizon index ``h`` (0-based) for ``origin``.

        ``forecasts`` holds the K member forecasts for that origin and horizon.
        """
        key = (origin, h)
        if key in self._seen:
            raise IntegrityError(f"duplicate feedback for origin {origin}, horizon {h + 1}")
        if not 0 <= h < self.H:
            raise ShapeError(f"horizon index {h} outside 0..{self.H - 1}")
        self._seen.add(key)
        if not self.streams:
            return
        forecasts = np.asarray(forecasts, dtype=float)
        losses = np.abs(forecasts - actual)
        W = self._emitted.get(origin)
        if self.strategy == "CH":
            pending = self._pending_ch.setdefault(origin, [np.zeros((self.k, self.H)), np.zeros(self.H), 0])
            pending[0][:, h] = forecasts
            pending[1][h] = actual
            pending[2] += 1
            if pending[2] == self.H:
                del self._pending_ch[origin]
                block, actuals = pending[0], pending[1]
                stream = self.streams["CH"]
                if W is None:
                    W = np.tile(stream.weights(), (self.H, 1))
                member = np.abs(block - actuals).mean(axis=1)
                ensemble = float(np.mean([abs(_weighted_sum(W[i], block[:, i]) - actuals[i])
                                          for i in range(self.H)]))
                stream.observe(member, ensemble)
                self._emitted.pop(origin, None)
            return
        stream = self.streams.get(h)
        if stream is None:
            return
        w = stream.weights() if W is None else W[h]
        stream.observe(losses, abs(_weighted_sum(w, forecasts) - actual))

    def feed(self, origin, block, actuals, horizons=None):
        """Feed several horizons of one origin; ``block`` is ``(K, H)``, ``actuals`` ``(H,)``."""
        for h in range(self.H) if horizons is None else horizons:
            self.update(origin, h, block[:, h], actuals[h])


def init_state(rule, strategy, n_members, horizon, window=50, train_losses=None, meta=None,
               config=None) -> Combiner:
    """Build a fresh combiner; ``config`` may hold ``ewa.eta``, ``fs.alpha``, ``mlpol.p``."""
    config = config or {}
    return Combiner(rule, strategy, n_members, horizon, window=window, train_losses=train_losses,
                    meta=meta, eta=config.get("ewa.eta"), alpha=config.get("fs.alpha", 0.1),
                    p=config.get("mlpol.p", 2.0))


def feedback_schedule(j, horizon, mode="optimistic"):
    """(origin, horizon index) pairs that become known just before forecasting origin ``j``.

    Origins are consecutive time steps. ``optimistic`` releases every horizon
    of the previous origin at once; ``strict`` releases horizon h of origin t
    only when the current time reaches t + h.
    """
    if mode == "optimistic":
        return [(j - 1, h) for h in range(horizon)] if j >= 1 else []
    if mode == "strict":
        return [(j - h, h - 1) for h in range(horizon, 0, -1) if j - h >= 0]
    raise ConfigError(f"unknown feedback mode {mode!r}")


def update_with_feedback(state: Combiner, j, forecasts, actuals, mode="optimistic"):
    """Deliver all feedback due before origin ``j``; ``forecasts`` is ``(K, m, H)``, ``actuals`` ``(m, H)``."""
    for origin, h in feedback_schedule(j, state.H, mode):
        state.update(origin, h, forecasts[:, origin, h], actuals[origin, h])
    return state


# -- arbitrating meta-models ----------------------------------------------------------

ADE_MIN_ROWS = 10


class MetaModelSet:
    """One error-predicting model per ensemble member (lag vector -> |error| per horizon)."""

    def __init__(self, models):
        self.models = list(models)

    def __len__(self):
        return len(self.models)

    def predict(self, X):
        """Predicted absolute errors, shape ``(K, m, H)``, clipped at zero."""
        X = np.asarray(X, dtype=float)
        return np.maximum(np.stack([model.predict(X) for model in self.models]), 0.0)


def default_meta_spec():
    from .learners import default_pool

    return next(spec for spec in default_pool() if spec.id == "RF_4")


def ade_fit_meta(member_predictions, actuals, lag_inputs, meta_spec=None, seed=0,
                 min_rows=ADE_MIN_ROWS):
    """Fit one meta-model per member on its held-out absolute errors.

    Every meta-model is grown from the same seed, so members with identical
    error streams get identical meta-models. Returns None (after a warning)
    when fewer than ``min_rows`` held-out rows exist; callers then fall back
    to LossTrain weights.
    """
    import warnings

    from .learners import fit_learner

    preds = np.asarray(member_predictions, dtype=float)
    actuals = np.asarray(actuals, dtype=float)
    X = np.asarray(lag_inputs, dtype=float)
    if preds.ndim != 3 or preds.shape[1:] != actuals.shape or X.shape[0] != actuals.shape[0]:
        raise ShapeError(f"inconsistent shapes: predictions {preds.shape}, actuals {actuals.shape}, "
                         f"lags {X.shape}")
    if actuals.shape[0] < min_rows:
        warnings.warn(f"ADE: only {actuals.shape[0]} meta-training rows (< {min_rows}); "
                      "falling back to LossTrain weights", UserWarning, stacklevel=2)
        return None
    spec = default_meta_spec() if meta_spec is None else meta_spec
    errors = np.abs(preds - actuals[None])
    return MetaModelSet(fit_learner(spec, X, err, seed=seed) for err in errors)
