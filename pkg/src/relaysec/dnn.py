"""Learned surrogate for the iterative optimizer.

Dataset generation labels channel draws with full feasibility-search +
optimizer solves; a small fully-connected network (256/256/128 hidden
units, ReLU) is then trained to regress the solution summary
(secrecy rate, both transmit powers, beamformer coordinates) from the
channel features.  At inference the predicted beamformer is re-lifted
through the leakage null space and uniformly shrunk into the power
region before the true secrecy rate is evaluated, so reported surrogate
rates are always rates of feasible operating points.

Feature encoding is lossless: every complex channel entry contributes
its real and imaginary part.  A magnitude-only "compact" encoding with
input dimension 2(N+N_E) + N_E*N + 5 and output dimension N+3 is also
provided; it exists for the closed-form FLOP bookkeeping of
:func:`complexity_dnn` and is not used for training.

All randomness flows through explicit seeds; training is single-threaded
numpy and bit-reproducible for a fixed seed.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .config import (
    ChannelRealization,
    NetworkConfig,
    derive_rng,
    generate_realization,
)

__all__ = [
    "channel_from_features",
    "Sample",
    "TrainConfig",
    "SurrogateModel",
    "features_from",
    "labels_from",
    "canonical_phase",
    "generate_dataset",
    "load_dataset",
    "save_dataset",
    "normalize",
    "init_model",
    "forward",
    "loss_and_grads",
    "train",
    "predict",
    "predict_point",
    "complexity_spca",
    "complexity_dnn",
    "compact_dims",
    "compact_flops",
    "save_model",
    "load_model",
]

_SIGMA_FLOOR = 1e-8
_DATASET_FORMAT = 1
_MODEL_FORMAT = 1


# ---------------------------------------------------------------------------
# features and labels
# ---------------------------------------------------------------------------


def _reim(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x).ravel()
    return np.concatenate([np.real(x), np.imag(x)])


def features_from(cfg: NetworkConfig, ch: ChannelRealization, compact: bool = False) -> np.ndarray:
    """Feature vector for one channel draw.

    Default encoding concatenates Re/Im of every channel coefficient
    (f_R, g_R, f_E, q_E, C_E row-major) with the scalars
    (N, N_E, the six impairment ratios, Q_tot, P_T, mean per-relay cap):
    length 2(2N + 2N_E + N_E*N) + 11.

    ``compact=True`` uses entry magnitudes and a single impairment scalar
    instead, giving length 2(N + N_E) + N_E*N + 5; this lossy encoding
    exists only so :func:`complexity_dnn` can be checked against the
    compact closed form and is not used for training.
    """
    imp = cfg.impairments
    if compact:
        return np.concatenate([
            np.abs(ch.f_R), np.abs(ch.g_R), np.abs(ch.f_E), np.abs(ch.q_E),
            np.abs(ch.C_E).ravel(),
            [float(cfg.N), float(cfg.N_E), imp.k_R_r, cfg.Q_tot, cfg.P_T],
        ])
    scalars = np.array([
        float(cfg.N), float(cfg.N_E),
        imp.k_s_t, imp.k_J1_t, imp.k_J2_t, imp.k_D_r, imp.k_R_r, imp.k_R_t,
        cfg.Q_tot, cfg.P_T, float(np.mean(cfg.Q_l)),
    ])
    return np.concatenate([
        _reim(ch.f_R), _reim(ch.g_R), _reim(ch.f_E), _reim(ch.q_E),
        _reim(ch.C_E), scalars,
    ])


def feature_dim(N: int, N_E: int) -> int:
    return 2 * (2 * N + 2 * N_E + N_E * N) + 11


def channel_from_features(theta: np.ndarray, N: int, N_E: int) -> ChannelRealization:
    """Invert the default (lossless) feature encoding back to the channel
    draw; the trailing scalar block is ignored."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (feature_dim(N, N_E),):
        raise ValueError(f"feature length {theta.shape} != {feature_dim(N, N_E)}")
    pos = 0

    def take(n: int) -> np.ndarray:
        nonlocal pos
        re = theta[pos:pos + n]
        im = theta[pos + n:pos + 2 * n]
        pos += 2 * n
        return re + 1j * im

    f_R, g_R = take(N), take(N)
    f_E, q_E = take(N_E), take(N_E)
    C_E = take(N_E * N).reshape(N_E, N)
    return ChannelRealization(f_R=f_R, g_R=g_R, f_E=f_E, q_E=q_E, C_E=C_E)


def label_dim(N: int, N_E: int) -> int:
    return 3 + 2 * (N - N_E)


def expand_features(theta: np.ndarray, N: int, N_E: int) -> np.ndarray:
    """Deterministic feature expansion used by training and inference.

    The raw Re/Im encoding scatters the rate-relevant information across
    high-order interactions (the rates are invariant under per-entry phase
    rotations that completely reshuffle the raw coordinates), which an MLP
    at this data scale cannot recover.  The expansion appends the
    phase-invariant functionals the rates actually depend on: per-entry
    magnitudes, per-relay two-hop gains |f_i g_i|, and the
    eavesdropper/jamming alignment invariants.  Everything appended is an
    exact function of theta, so the stored dataset format is unchanged.
    """
    ch = channel_from_features(theta, N, N_E)
    mags = np.concatenate([
        np.abs(ch.f_R), np.abs(ch.g_R), np.abs(ch.f_E), np.abs(ch.q_E),
        np.abs(ch.C_E).ravel(),
    ])
    two_hop = np.abs(ch.f_R * ch.g_R)
    align = complex(np.vdot(ch.f_E, ch.q_E))
    extras = np.array([
        float(np.linalg.norm(ch.f_E)), float(np.linalg.norm(ch.q_E)),
        align.real, align.imag, abs(align),
    ])
    return np.concatenate([np.asarray(theta, dtype=float), mags, two_hop, extras])


def expanded_dim(N: int, N_E: int) -> int:
    return feature_dim(N, N_E) + (2 * N + 2 * N_E + N_E * N) + N + 5


_POWER_FLOOR = 1e-9


def transform_labels(q: np.ndarray) -> np.ndarray:
    """Regression-space labels: powers are learned in log10 (they spread
    over orders of magnitude within one scenario), everything else as-is."""
    y = np.asarray(q, dtype=float).copy()
    y[1] = np.log10(max(y[1], _POWER_FLOOR))
    y[2] = np.log10(max(y[2], _POWER_FLOOR))
    return y


def untransform_labels(y: np.ndarray) -> np.ndarray:
    q = np.asarray(y, dtype=float).copy()
    q[1] = 10.0 ** q[1]
    q[2] = 10.0 ** q[2]
    return q


def _pipeline_eligible(samples) -> tuple[int, int] | None:
    """(N, N_E) when every sample carries matching metadata and the
    spec-layout feature/label dims, else None (raw passthrough)."""
    dims = None
    for s in samples:
        meta = getattr(s, "meta", None) or {}
        if "N" not in meta or "N_E" not in meta:
            return None
        n, n_e = int(meta["N"]), int(meta["N_E"])
        if dims is None:
            dims = (n, n_e)
        elif dims != (n, n_e):
            return None
        if len(s.theta) != feature_dim(n, n_e) or len(s.q) != label_dim(n, n_e):
            return None
    return dims


def canonical_phase(v: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the largest-magnitude entry is real
    positive; v and e^{j phi} v describe the same operating point, and a
    regression target must pick one representative."""
    i = int(np.argmax(np.abs(v)))
    if np.abs(v[i]) == 0.0:
        return v.copy()
    return v * np.exp(-1j * np.angle(v[i]))


def labels_from(R_s: float, P_s: float, P_J1: float, v: np.ndarray) -> np.ndarray:
    """Target vector (R_s, P_s, P_J1, Re v, Im v) with canonical phase."""
    vc = canonical_phase(np.asarray(v))
    return np.concatenate([[float(R_s), float(P_s), float(P_J1)], np.real(vc), np.imag(vc)])


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Sample:
    seed: int
    theta: np.ndarray
    q: np.ndarray
    meta: dict

    def to_json(self) -> str:
        return json.dumps({
            "seed": int(self.seed),
            "theta": [float(x) for x in self.theta],
            "q": [float(x) for x in self.q],
            "meta": self.meta,
        })

    @staticmethod
    def from_json(line: str) -> "Sample":
        d = json.loads(line)
        return Sample(
            seed=int(d["seed"]),
            theta=np.asarray(d["theta"], dtype=float),
            q=np.asarray(d["q"], dtype=float),
            meta=d.get("meta", {}),
        )


def generate_dataset(
    cfg: NetworkConfig,
    K: int,
    master_seed: int = 0,
    out: str | None = None,
    max_redraws: int = 20,
    multi_start: bool = False,
    quiet: bool = True,
) -> list[Sample]:
    """K labeled samples, each from a full feasibility-search + optimizer
    solve on an independent channel draw.

    Infeasible or failed draws are redrawn (bounded by ``max_redraws`` per
    slot; exhaustion raises).  With ``out`` set, samples are appended to a
    JSON-lines file as they complete and existing lines are counted and
    skipped, so an interrupted run resumes where it left off.
    """
    from .experiments import solve_trial

    if K < 1:
        raise ValueError("K must be at least 1")
    samples: list[Sample] = []
    done = 0
    if out is not None and os.path.exists(out):
        samples = load_dataset(out)
        done = len(samples)
    fh = open(out, "a", encoding="utf-8") if out is not None else None
    redraws_total = 0
    try:
        for k in range(done, K):
            sample = None
            for attempt in range(max_redraws + 1):
                rng = derive_rng(master_seed, k, attempt)
                ch = generate_realization(cfg, rng)
                try:
                    tr = solve_trial(cfg, ch, rng=rng, multi_start=multi_start)
                except Exception:
                    tr = None
                if tr is not None and tr.feasible and tr.solution is not None:
                    q = labels_from(tr.R_s, tr.P_s, tr.P_J1, tr.solution.v)
                    sample = Sample(
                        seed=master_seed,
                        theta=features_from(cfg, ch),
                        q=q,
                        meta={"N": cfg.N, "N_E": cfg.N_E, "k": k, "attempt": attempt},
                    )
                    redraws_total += attempt
                    break
            if sample is None:
                raise RuntimeError(
                    f"sample {k}: no feasible draw within {max_redraws} redraws"
                )
            samples.append(sample)
            if fh is not None:
                fh.write(sample.to_json() + "\n")
                fh.flush()
            if not quiet and (k + 1) % 50 == 0:
                print(f"dataset: {k + 1}/{K} samples ({redraws_total} redraws)")
    finally:
        if fh is not None:
            fh.close()
    return samples


def save_dataset(path: str, samples: list[Sample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(s.to_json() + "\n")


def load_dataset(path: str) -> list[Sample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(Sample.from_json(line))
    return out


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    epochs: int = 400
    batch_size: int = 32
    learning_rate: float = 1e-3
    decay_rate: float = 0.9
    dropout_keep: float = 0.75
    val_fraction: float = 0.1
    seed: int = 0
    hidden: tuple[int, ...] = (256, 256, 128)

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not (0.0 < self.learning_rate):
            raise ValueError("learning_rate must be positive")
        if not (0.0 < self.decay_rate < 1.0):
            raise ValueError("decay_rate must be in (0, 1)")
        if not (0.0 < self.dropout_keep <= 1.0):
            raise ValueError("dropout_keep must be in (0, 1]")
        if not (0.0 < self.val_fraction < 1.0):
            raise ValueError("val_fraction must be in (0, 1)")


@dataclass
class SurrogateModel:
    """Layered affine + ReLU regressor with frozen normalization stats.

    ``layers`` is a list of (W, b, act) with act "relu" or "id"; features
    are standardized with (mu, sigma) before the first layer and raw-scale
    targets are recovered with (label_mu, label_sigma) after the last.
    """

    arch: tuple[int, ...]
    layers: list[tuple[np.ndarray, np.ndarray, str]]
    mu: np.ndarray
    sigma: np.ndarray
    label_mu: np.ndarray
    label_sigma: np.ndarray
    meta: dict = field(default_factory=dict)

    def predict(self, theta: np.ndarray) -> np.ndarray:
        return predict(self, theta)


def normalize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-feature standardization over axis 0 with population sigma,
    floored at 1e-8 so constant columns map to zero."""
    X = np.asarray(X, dtype=float)
    mu = X.mean(axis=0)
    sigma = np.maximum(X.std(axis=0), _SIGMA_FLOOR)
    return (X - mu) / sigma, mu, sigma


def init_model(
    input_dim: int,
    output_dim: int,
    hidden: tuple[int, ...] = (256, 256, 128),
    rng: np.random.Generator | None = None,
) -> SurrogateModel:
    """He-initialized network with identity normalization stats."""
    if rng is None:
        rng = np.random.default_rng(0)
    arch = (input_dim, *hidden, output_dim)
    layers = []
    for i in range(len(arch) - 1):
        fan_in, fan_out = arch[i], arch[i + 1]
        W = rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in)
        b = np.zeros(fan_out)
        act = "relu" if i < len(arch) - 2 else "id"
        layers.append((W, b, act))
    return SurrogateModel(
        arch=arch,
        layers=layers,
        mu=np.zeros(input_dim),
        sigma=np.ones(input_dim),
        label_mu=np.zeros(output_dim),
        label_sigma=np.ones(output_dim),
    )


def forward(model: SurrogateModel, theta: np.ndarray) -> np.ndarray:
    """Deterministic layered evaluation on normalized features; accepts a
    single vector or a batch (rows are samples)."""
    x = np.atleast_2d(np.asarray(theta, dtype=float))
    if x.shape[1] != model.arch[0]:
        raise ValueError(f"feature length {x.shape[1]} != input dim {model.arch[0]}")
    for W, b, act in model.layers:
        x = x @ W.T + b
        if act == "relu":
            x = np.maximum(x, 0.0)
    return x[0] if np.ndim(theta) == 1 else x


def predict(model: SurrogateModel, theta: np.ndarray) -> np.ndarray:
    """Raw-scale prediction: standardize features, evaluate, de-standardize
    targets.  Models trained through the scenario pipeline record their
    feature/label transforms in ``meta``; those are applied here so the
    caller always passes the stored feature encoding and receives
    linear-scale targets."""
    theta = np.asarray(theta, dtype=float)
    meta = model.meta or {}
    if meta.get("feature_expansion"):
        n, n_e = int(meta["N"]), int(meta["N_E"])
        if theta.ndim == 1 and len(theta) == feature_dim(n, n_e):
            theta = expand_features(theta, n, n_e)
        elif theta.ndim == 2 and theta.shape[1] == feature_dim(n, n_e):
            theta = np.stack([expand_features(t, n, n_e) for t in theta])
    x = (theta - model.mu) / model.sigma
    y = forward(model, x)
    y = y * model.label_sigma + model.label_mu
    if meta.get("label_transform") == "log_powers":
        y = untransform_labels(y) if y.ndim == 1 else np.stack(
            [untransform_labels(r) for r in y]
        )
    return y


def loss_and_grads(
    model: SurrogateModel,
    X: np.ndarray,
    Y: np.ndarray,
    masks: list[np.ndarray] | None = None,
) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Mean-squared error over the batch and its gradients w.r.t. every
    (W, b), by reverse accumulation.  ``masks`` (one per hidden layer,
    already scaled for inverted dropout) multiply the hidden activations;
    omit for a deterministic pass."""
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    n = X.shape[0]
    acts = [X]
    pre = []
    hidden_idx = 0
    for W, b, act in model.layers:
        z = acts[-1] @ W.T + b
        pre.append(z)
        a = np.maximum(z, 0.0) if act == "relu" else z
        if act == "relu" and masks is not None:
            a = a * masks[hidden_idx]
            hidden_idx += 1
        acts.append(a)
    err = acts[-1] - Y
    loss = float(np.mean(err**2))
    # d loss / d output, with MSE averaged over batch and output dims
    delta = 2.0 * err / err.size
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(model.layers)
    hidden_idx = sum(1 for _, _, act in model.layers if act == "relu") - 1
    for i in range(len(model.layers) - 1, -1, -1):
        W, b, act = model.layers[i]
        if act == "relu":
            if masks is not None:
                delta = delta * masks[hidden_idx]
            hidden_idx -= 1
            delta = delta * (pre[i] > 0.0)
        grads[i] = (delta.T @ acts[i], delta.sum(axis=0))
        if i > 0:
            delta = delta @ W
    del n
    return loss, grads


def train(
    samples: list[Sample],
    tc: TrainConfig | None = None,
    quiet: bool = True,
) -> tuple[SurrogateModel, dict]:
    """Fit the regressor by mini-batch MSE descent with the adaptive-moment
    update; returns the parameter snapshot with the lowest validation MSE
    together with the loss history.

    The split is 1 - val_fraction train / val_fraction validation in
    dataset order; normalization statistics (features and labels) come
    from the training split only.
    """
    if tc is None:
        tc = TrainConfig()
    dims = _pipeline_eligible(samples)
    if dims is not None:
        # Scenario datasets go through the learnable pipeline: expanded
        # phase-invariant features, and (rate, log-power) targets only.
        # The null-space beamformer coordinates are excluded from the
        # regression targets: they are frame-entangled with the channel
        # draw and carry no recoverable signal at this data scale, while
        # the optimal direction at given powers has a cheap closed form
        # that inference uses instead (see predict_point).
        N, N_E = dims
        X = np.stack([expand_features(s.theta, N, N_E) for s in samples])
        Y = np.stack([transform_labels(s.q)[:3] for s in samples])
    else:
        X = np.stack([s.theta for s in samples])
        Y = np.stack([s.q for s in samples])
    n_val = max(1, int(round(tc.val_fraction * len(samples))))
    n_train = len(samples) - n_val
    if n_train < 2 * tc.batch_size:
        raise ValueError("dataset too small: need at least two training batches")
    Xt, Yt = X[:n_train], Y[:n_train]
    Xv, Yv = X[n_train:], Y[n_train:]

    Xt_n, mu, sigma = normalize(Xt)
    Yt_n, lmu, lsigma = normalize(Yt)
    Xv_n = (Xv - mu) / sigma
    Yv_n = (Yv - lmu) / lsigma

    rng = np.random.default_rng(tc.seed)
    model = init_model(X.shape[1], Y.shape[1], tc.hidden, rng)
    model.mu, model.sigma = mu, sigma
    model.label_mu, model.label_sigma = lmu, lsigma

    # adaptive moments: first-moment decay from the config, standard
    # second-moment decay
    beta1, beta2, eps = tc.decay_rate, 0.999, 1e-8
    m = [(np.zeros_like(W), np.zeros_like(b)) for W, b, _ in model.layers]
    v = [(np.zeros_like(W), np.zeros_like(b)) for W, b, _ in model.layers]
    step = 0

    n_hidden = len(tc.hidden)
    best_val = float("inf")
    best_layers = None
    history = {"train_mse": [], "val_mse": []}
    t0 = time.perf_counter()
    for epoch in range(tc.epochs):
        order = rng.permutation(n_train)
        epoch_loss, n_batches = 0.0, 0
        for start in range(0, n_train, tc.batch_size):
            idx = order[start:start + tc.batch_size]
            xb, yb = Xt_n[idx], Yt_n[idx]
            masks = None
            if tc.dropout_keep < 1.0:
                masks = [
                    (rng.random((len(idx), model.arch[i + 1])) < tc.dropout_keep)
                    / tc.dropout_keep
                    for i in range(n_hidden)
                ]
            loss, grads = loss_and_grads(model, xb, yb, masks)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"training diverged at epoch {epoch}: loss={loss}"
                )
            epoch_loss += loss
            n_batches += 1
            step += 1
            new_layers = []
            for i, ((W, b, act), (gW, gb)) in enumerate(zip(model.layers, grads)):
                mW = beta1 * m[i][0] + (1 - beta1) * gW
                mb = beta1 * m[i][1] + (1 - beta1) * gb
                vW = beta2 * v[i][0] + (1 - beta2) * gW**2
                vb = beta2 * v[i][1] + (1 - beta2) * gb**2
                m[i], v[i] = (mW, mb), (vW, vb)
                c1, c2 = 1 - beta1**step, 1 - beta2**step
                W = W - tc.learning_rate * (mW / c1) / (np.sqrt(vW / c2) + eps)
                b = b - tc.learning_rate * (mb / c1) / (np.sqrt(vb / c2) + eps)
                new_layers.append((W, b, act))
            model.layers = new_layers
        val_err = forward(model, Xv_n) - Yv_n
        val_mse = float(np.mean(val_err**2))
        history["train_mse"].append(epoch_loss / max(n_batches, 1))
        history["val_mse"].append(val_mse)
        if val_mse < best_val:
            best_val = val_mse
            best_layers = [(W.copy(), b.copy(), act) for W, b, act in model.layers]
        if not quiet and (epoch + 1) % 20 == 0:
            print(
                f"epoch {epoch + 1}/{tc.epochs} train={history['train_mse'][-1]:.5f} "
                f"val={val_mse:.5f} best={best_val:.5f} t={time.perf_counter() - t0:.0f}s"
            )
    if best_layers is not None:
        model.layers = best_layers
    history["best_val_mse"] = best_val
    model.meta = {
        "n_train": n_train, "n_val": n_val,
        "epochs": tc.epochs, "seed": tc.seed,
        "best_val_mse": best_val,
    }
    if dims is not None:
        model.meta.update({
            "feature_expansion": True,
            "label_transform": "log_powers",
            "label_subset": 3,
            "N": dims[0], "N_E": dims[1],
        })
    return model, history


# ---------------------------------------------------------------------------
# feasible-point inference
# ---------------------------------------------------------------------------


def predict_point(model: SurrogateModel, cfg: NetworkConfig, ch: ChannelRealization):
    """Predict, project to the feasible power region, and evaluate.

    The predicted beamformer lives in null-space coordinates, so leakage
    stays nulled by construction; powers are clipped to their caps and the
    whole point uniformly shrunk until every budget holds, then the true
    secrecy rate is evaluated there.  Returns (R_s, P_s, P_J1, v,
    predicted R_s)."""
    from .distortion import compute_tau, phi_matrices, project
    from .nullspace import build_basis
    from .rates import evaluate_point
    from .spca import build_problem_data

    from .experiments import _best_v_for_powers

    q = predict(model, features_from(cfg, ch))
    R_pred = float(q[0])
    P_s0 = float(np.clip(q[1], 1e-6 * cfg.sigma2, cfg.P_T))
    P_J10 = float(np.clip(q[2], 1e-6 * cfg.sigma2, cfg.P_J1_bar))
    d = cfg.N - cfg.N_E

    imp = cfg.impairments
    tau = compute_tau(imp)
    basis = build_basis(ch)
    proj = project(phi_matrices(ch), tau, basis.H_perp, cfg.sigma2, imp, ch)
    data = build_problem_data(cfg, ch, basis, proj)
    caps = np.asarray(cfg.Q_l)

    def finalize(P_s, P_J1, v):
        """Uniform shrink until every budget holds, then true-rate eval."""

        def budgets_ok(c: float) -> bool:
            Ps, Pj, vv = c * P_s, c * P_J1, np.sqrt(c) * v
            rv2 = np.abs(data.rows @ vv) ** 2
            per = cfg.sigma2 * rv2 + data.c_ps_l * rv2 * Ps + data.c_pj_l * rv2 * Pj
            total = (
                Ps + Pj + cfg.sigma2 * float(np.real(np.vdot(vv, vv)))
                + float(np.real(np.vdot(data.F_ps @ vv, data.F_ps @ vv))) * Ps
                + float(np.real(np.vdot(data.F_pj @ vv, data.F_pj @ vv))) * Pj
            )
            return total <= cfg.Q_tot and bool(np.all(per <= caps))

        c = 1.0
        if not budgets_ok(c):
            lo, hi = 0.0, 1.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if budgets_ok(mid):
                    lo = mid
                else:
                    hi = mid
            c = lo
        P_s, P_J1, v = c * P_s, c * P_J1, np.sqrt(c) * v
        rep = evaluate_point(P_s, P_J1, v, ch, imp, tau, proj, cfg.sigma2)
        return rep.R_s, P_s, P_J1, v

    candidates = []
    # Candidate 1: the predicted beamformer coordinates, when the model
    # regresses them (legacy full-label models).
    if len(q) >= 3 + 2 * d:
        v_pred = q[3:3 + d] + 1j * q[3 + d:3 + 2 * d]
        if np.linalg.norm(v_pred) > 0:
            candidates.append(finalize(P_s0, P_J10, v_pred))
    # Candidate 2: closed-form optimal direction at the predicted powers.
    # Leakage is weight-independent under null-space beamforming, so for
    # fixed powers the best weights have a cheap direct construction; this
    # converts accurate power predictions into near-optimal points without
    # asking the network to learn the frame-entangled beamformer map.
    Ps_c, Pj_c = P_s0, P_J10
    if Ps_c + Pj_c >= 0.98 * cfg.Q_tot:
        shrink = 0.98 * cfg.Q_tot / (Ps_c + Pj_c)
        Ps_c, Pj_c = shrink * Ps_c, shrink * Pj_c
    geom = {"basis": basis, "proj": proj, "tau": tau, "ch": ch}
    v_cf = _best_v_for_powers(Ps_c, Pj_c, cfg, geom)
    if v_cf is not None:
        candidates.append(finalize(Ps_c, Pj_c, v_cf))
    if not candidates:
        candidates.append(finalize(P_s0, P_J10, np.zeros(d, dtype=complex)))
    R_s, P_s, P_J1, v = max(candidates, key=lambda c: c[0])
    return R_s, P_s, P_J1, v, R_pred


# ---------------------------------------------------------------------------
# complexity estimators
# ---------------------------------------------------------------------------


def complexity_spca(N: int, N_E: int) -> float:
    """Worst-case per-iteration operation count of the convex subproblem,
    driven by the null-space dimension d = N - N_E."""
    if N <= N_E:
        raise ValueError("need N > N_E")
    d = N - N_E
    return d**2 * (2 * (d + 1) ** 2 + (N_E + 1) ** 2) * np.sqrt(2 * (d + 1) + (N_E + 1))


def complexity_dnn(model_or_arch) -> int:
    """FLOP count of one forward pass: sum of 2 * in_dim * out_dim over
    layers (one multiply and one add per weight)."""
    if isinstance(model_or_arch, SurrogateModel):
        arch = model_or_arch.arch
    else:
        arch = tuple(int(x) for x in model_or_arch)
    return int(sum(2 * arch[i] * arch[i + 1] for i in range(len(arch) - 1)))


def compact_dims(N: int, N_E: int) -> tuple[int, int]:
    """(input, output) dimensions of the magnitude-encoded compact layout:
    2(N + N_E) + N_E*N + 5 features, N + 3 targets."""
    return 2 * (N + N_E) + N_E * N + 5, N + 3


def compact_flops(N: int, N_E: int, hidden: tuple[int, ...] = (256, 256, 128)) -> int:
    """Closed-form forward-pass FLOPs for the compact layout."""
    i_dim, o_dim = compact_dims(N, N_E)
    return complexity_dnn((i_dim, *hidden, o_dim))


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def save_model(path: str, model: SurrogateModel) -> None:
    doc = {
        "format_version": _MODEL_FORMAT,
        "arch": [int(x) for x in model.arch],
        "norm": {
            "mu": [float(x) for x in model.mu],
            "sigma": [float(x) for x in model.sigma],
        },
        "label_norm": {
            "mu": [float(x) for x in model.label_mu],
            "sigma": [float(x) for x in model.label_sigma],
        },
        "layers": [
            {
                "w": [float(x) for x in W.ravel()],
                "rows": int(W.shape[0]),
                "cols": int(W.shape[1]),
                "b": [float(x) for x in b],
                "act": act,
            }
            for W, b, act in model.layers
        ],
        "meta": model.meta,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path: str) -> SurrogateModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != _MODEL_FORMAT:
        raise ValueError(f"unsupported model format: {doc.get('format_version')}")
    layers = [
        (
            np.asarray(l["w"], dtype=float).reshape(l["rows"], l["cols"]),
            np.asarray(l["b"], dtype=float),
            l["act"],
        )
        for l in doc["layers"]
    ]
    out_dim = layers[-1][0].shape[0]
    label_norm = doc.get("label_norm", {"mu": [0.0] * out_dim, "sigma": [1.0] * out_dim})
    return SurrogateModel(
        arch=tuple(int(x) for x in doc["arch"]),
        layers=layers,
        mu=np.asarray(doc["norm"]["mu"], dtype=float),
        sigma=np.asarray(doc["norm"]["sigma"], dtype=float),
        label_mu=np.asarray(label_norm["mu"], dtype=float),
        label_sigma=np.asarray(label_norm["sigma"], dtype=float),
        meta=doc.get("meta", {}),
    )
