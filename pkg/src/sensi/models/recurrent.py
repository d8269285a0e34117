"""Static-conditioned GRU encoder-decoder with hand-written backprop.

Layout of one forward pass, all in standardized units:

    c      = tanh(s_std @ static_W + static_b)              static context
    h_enc  = GRU_enc([y, z, x_past], h0=c)                 over the lag block
    h_dec  = GRU_dec([x_future, c], h0=h_enc[-1])          over the horizon
    o      = h_dec @ out_w + out_b
    g      = sigmoid(h_dec @ gate_w + gate_b)
    lin    = [y, s_std] @ skip_w + skip_b                  gated linear skip
    y_hat  = g * o + (1 - g) * lin

The static vector is standardized with fixed statistics stored in the scaler,
so perturbing a raw static share by delta moves ``s_std`` by delta / scale.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from sensi.dataset import Scaler, WindowBatch
from sensi.errors import DataValidationError
from sensi.models.base import ForecastModel
from sensi.panel import KNOWN_FUTURE_CHANNELS


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def gru_forward(x, h0, W, U, b):
    """Run a GRU over x [N, L, P] from h0 [N, H]; returns hidden states [N, L, H] and a cache."""
    N, L, _ = x.shape
    H = h0.shape[1]
    xw = np.einsum("nlp,pg->nlg", x, W) + b
    hs = np.empty((N, L, H))
    cache = []
    h = h0
    for t in range(L):
        a_zr = xw[:, t, : 2 * H] + h @ U[:, : 2 * H]
        z = sigmoid(a_zr[:, :H])
        r = sigmoid(a_zr[:, H:])
        rh = r * h
        n = np.tanh(xw[:, t, 2 * H:] + rh @ U[:, 2 * H:])
        cache.append((h, z, r, n, rh))
        h = (1.0 - z) * n + z * h
        hs[:, t] = h
    return hs, (x, cache)


def gru_backward(dhs, cache, W, U):
    """Backprop through gru_forward. ``dhs`` is dLoss/dh_t for every step."""
    x, steps = cache
    N, L, H = dhs.shape
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(W.shape[1])
    dx = np.empty_like(x)
    dh = np.zeros((N, H))
    for t in range(L - 1, -1, -1):
        h_prev, z, r, n, rh = steps[t]
        dh = dh + dhs[:, t]
        dn = dh * (1.0 - z)
        dz = dh * (h_prev - n)
        dh_prev = dh * z
        da_n = dn * (1.0 - n * n)
        drh = da_n @ U[:, 2 * H:].T
        dU[:, 2 * H:] += rh.T @ da_n
        dr = drh * h_prev
        dh_prev += drh * r
        da_zr = np.concatenate([dz * z * (1.0 - z), dr * r * (1.0 - r)], axis=1)
        dU[:, : 2 * H] += h_prev.T @ da_zr
        dh_prev += da_zr @ U[:, : 2 * H].T
        da = np.concatenate([da_zr, da_n], axis=1)
        dW += x[:, t].T @ da
        db += da.sum(axis=0)
        dx[:, t] = da @ W.T
        dh = dh_prev
    return dW, dU, db, dx, dh


class RecurrentForecaster(ForecastModel):
    kind = "recurrent"

    def __init__(self, lag=13, horizon=15, n_static=1,
                 observed_names=("vaccination",), known_names=("sin_weekly",),
                 hidden_size=64, seed=0, scaler: Scaler | None = None, params=None):
        observed_names = tuple(observed_names)
        known_names = tuple(known_names)
        super().__init__(lag, horizon, n_static, len(observed_names), len(known_names))
        self.observed_names = observed_names
        self.known_names = known_names
        self.hidden_size = int(hidden_size)
        self.seed = int(seed)
        self.scaler = scaler if scaler is not None else Scaler.identity(observed_names + known_names, n_static)
        self.params = self._init_params() if params is None else OrderedDict(
            (k, np.array(v, dtype=np.float64)) for k, v in params.items()
        )
        self._check_params()

    @property
    def input_size(self) -> int:
        return 1 + self.n_observed + self.n_known

    def _shapes(self):
        H, K, k, tau = self.hidden_size, self.n_static, self.lag, self.horizon
        Q = self.n_known + H
        return OrderedDict([
            ("static_W", (K, H)), ("static_b", (H,)),
            ("enc_W", (self.input_size, 3 * H)), ("enc_U", (H, 3 * H)), ("enc_b", (3 * H,)),
            ("dec_W", (Q, 3 * H)), ("dec_U", (H, 3 * H)), ("dec_b", (3 * H,)),
            ("out_w", (H,)), ("out_b", (1,)),
            ("gate_w", (H,)), ("gate_b", (1,)),
            ("skip_w", (k + K, tau)), ("skip_b", (tau,)),
        ])

    def _init_params(self):
        rng = np.random.default_rng(self.seed)
        H = self.hidden_size
        p = OrderedDict()
        for name, shape in self._shapes().items():
            if name.endswith("_U"):
                p[name] = np.hstack([_orthogonal(rng, H) for _ in range(3)])
            elif len(shape) == 2 and name != "skip_w":
                p[name] = rng.standard_normal(shape) / np.sqrt(shape[0])
            elif name in ("out_w", "gate_w"):
                p[name] = rng.standard_normal(shape) / np.sqrt(H)
            else:
                p[name] = np.zeros(shape)
        return p

    def _check_params(self):
        for name, shape in self._shapes().items():
            if name not in self.params:
                raise DataValidationError(f"missing parameter {name}")
            if self.params[name].shape != shape:
                raise DataValidationError(f"parameter {name} has shape {self.params[name].shape}, expected {shape}")

    def _channel_index(self, names):
        try:
            return [self.scaler.dynamic_names.index(n) for n in names]
        except ValueError:
            raise DataValidationError(f"scaler lacks one of the channels {names}") from None

    # --- standardized-space network -------------------------------------

    def _inputs(self, batch: WindowBatch):
        sc = self.scaler
        ys = sc.transform_target(batch.past_target)
        obs = sc.transform_dynamic(batch.past_dynamic, self._channel_index(self.observed_names))
        known = sc.transform_dynamic(batch.known_future, self._channel_index(self.known_names))
        s = sc.transform_static(batch.static)
        return ys, obs, known, s

    def _forward(self, ys, obs, known, s):
        p = self.params
        k = self.lag
        N = ys.shape[0]
        c = np.tanh(s @ p["static_W"] + p["static_b"])
        x_enc = np.concatenate([ys[:, :, None], obs, known[:, :k]], axis=2)
        enc_hs, enc_cache = gru_forward(x_enc, c, p["enc_W"], p["enc_U"], p["enc_b"])
        ctx = np.broadcast_to(c[:, None, :], (N, self.horizon, self.hidden_size))
        x_dec = np.concatenate([known[:, k:], ctx], axis=2)
        dec_hs, dec_cache = gru_forward(x_dec, enc_hs[:, -1], p["dec_W"], p["dec_U"], p["dec_b"])
        o = dec_hs @ p["out_w"] + p["out_b"][0]
        g = sigmoid(dec_hs @ p["gate_w"] + p["gate_b"][0])
        q = np.concatenate([ys, s], axis=1)
        lin = q @ p["skip_w"] + p["skip_b"]
        y_hat = g * o + (1.0 - g) * lin
        cache = (s, c, enc_cache, dec_cache, dec_hs, o, g, q, lin)
        return y_hat, cache

    def _backward(self, dy, cache):
        p = self.params
        s, c, enc_cache, dec_cache, dec_hs, o, g, q, lin = cache
        grads = OrderedDict((k, None) for k in p)
        dg = dy * (o - lin)
        do = dy * g
        dlin = dy * (1.0 - g)
        grads["out_w"] = np.einsum("nth,nt->h", dec_hs, do)
        grads["out_b"] = np.array([do.sum()])
        da_g = dg * g * (1.0 - g)
        grads["gate_w"] = np.einsum("nth,nt->h", dec_hs, da_g)
        grads["gate_b"] = np.array([da_g.sum()])
        grads["skip_w"] = q.T @ dlin
        grads["skip_b"] = dlin.sum(axis=0)
        d_dec_hs = do[:, :, None] * p["out_w"] + da_g[:, :, None] * p["gate_w"]
        dW, dU, db, dx_dec, dh_enc = gru_backward(d_dec_hs, dec_cache, p["dec_W"], p["dec_U"])
        grads["dec_W"], grads["dec_U"], grads["dec_b"] = dW, dU, db
        dc = dx_dec[:, :, self.n_known:].sum(axis=1)
        enc_x = enc_cache[0]
        d_enc_hs = np.zeros(enc_x.shape[:2] + (self.hidden_size,))
        d_enc_hs[:, -1] = dh_enc
        dW, dU, db, _, dh0 = gru_backward(d_enc_hs, enc_cache, p["enc_W"], p["enc_U"])
        grads["enc_W"], grads["enc_U"], grads["enc_b"] = dW, dU, db
        dc = dc + dh0
        da = dc * (1.0 - c * c)
        grads["static_W"] = s.T @ da
        grads["static_b"] = da.sum(axis=0)
        return grads

    def loss_and_grad(self, batch: WindowBatch):
        """Mean squared error on standardized targets and its gradient for every parameter."""
        self.check_batch(batch)
        ys, obs, known, s = self._inputs(batch)
        target = self.scaler.transform_target(batch.future_target)
        y_hat, cache = self._forward(ys, obs, known, s)
        err = y_hat - target
        loss = float(np.mean(err * err))
        grads = self._backward(2.0 * err / err.size, cache)
        return loss, grads

    def loss(self, batch: WindowBatch) -> float:
        ys, obs, known, s = self._inputs(batch)
        target = self.scaler.transform_target(batch.future_target)
        y_hat, _ = self._forward(ys, obs, known, s)
        return float(np.mean((y_hat - target) ** 2))

    def predict_standardized(self, batch: WindowBatch) -> np.ndarray:
        self.check_batch(batch)
        y_hat, _ = self._forward(*self._inputs(batch))
        return y_hat

    def _predict(self, batch: WindowBatch) -> np.ndarray:
        y_hat, _ = self._forward(*self._inputs(batch))
        return self.scaler.inverse_target(y_hat)

    # --- state --------------------------------------------------------------

    def copy_params(self):
        return OrderedDict((k, v.copy()) for k, v in self.params.items())

    def get_state(self):
        config = {
            "lag": self.lag, "horizon": self.horizon, "n_static": self.n_static,
            "observed_names": list(self.observed_names), "known_names": list(self.known_names),
            "hidden_size": self.hidden_size, "seed": self.seed, "scaler": self.scaler.to_dict(),
        }
        return config, self.copy_params()

    @classmethod
    def from_state(cls, config, params):
        return cls(
            lag=config["lag"], horizon=config["horizon"], n_static=config["n_static"],
            observed_names=config["observed_names"], known_names=config["known_names"],
            hidden_size=config["hidden_size"], seed=config["seed"],
            scaler=Scaler.from_dict(config["scaler"]), params=params,
        )

    @classmethod
    def for_panel(cls, panel, window_cfg, hidden_size=64, seed=0, scaler=None) -> "RecurrentForecaster":
        observed = tuple(n for n in panel.dynamic_names if n not in KNOWN_FUTURE_CHANNELS)
        known = tuple(n for n in panel.dynamic_names if n in KNOWN_FUTURE_CHANNELS)
        return cls(
            lag=window_cfg.lag, horizon=window_cfg.horizon, n_static=panel.static.shape[1],
            observed_names=observed, known_names=known, hidden_size=hidden_size, seed=seed, scaler=scaler,
        )
