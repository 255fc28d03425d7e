"""Desk-scale objectives with analytic gradients and the training loop.

Objectives expose ``shapes() / init_params(rng) / value_and_grad(params)``
plus which parameter groups are quantizable. ``run_training`` wires a chosen
regime through the step pipeline, records per-step metrics (loss, gradient
norm, momentum norm, consecutive-error similarity), detects divergence, and
is deterministic given the config seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from . import optim
from .numerics import RngKey, as_tensor, cosine_similarity, relative_norm
from .quantize import Identity, QuantSpec, quantize

DIVERGENCE_THRESHOLD = 1e12


# ---------------------------------------------------------------------------
# objectives


@dataclass
class Quadratic1D:
    """f(x) = (L/2) x^2 on a single scalar parameter."""

    L: float = 1.0
    theta0: float = 1.0

    def shapes(self):
        return {"theta": (1,)}

    def init_params(self, rng):
        return {"theta": np.array([self.theta0])}

    def value_and_grad(self, params):
        x = params["theta"]
        return 0.5 * self.L * float(x[0] ** 2), {"theta": self.L * x}

    def weight_groups(self):
        return ["theta"]

    def io_groups(self):
        return set()


@dataclass
class QuadraticND:
    """f(theta) = 0.5 (theta - center)^T H (theta - center), H symmetric PSD."""

    H: np.ndarray
    center: Optional[np.ndarray] = None
    theta0: Optional[np.ndarray] = None

    def __post_init__(self):
        self.H = as_tensor(self.H, "H")
        if self.H.ndim != 2 or self.H.shape[0] != self.H.shape[1]:
            raise ValueError("H must be square")
        if not np.allclose(self.H, self.H.T, atol=1e-12):
            raise ValueError("H must be symmetric")
        if np.min(np.linalg.eigvalsh(self.H)) < -1e-10:
            raise ValueError("H must be positive semi-definite")
        if self.center is None:
            self.center = np.zeros(self.H.shape[0])

    @property
    def dim(self):
        return self.H.shape[0]

    def shapes(self):
        return {"theta": (self.dim,)}

    def init_params(self, rng):
        if self.theta0 is not None:
            return {"theta": np.array(self.theta0, dtype=np.float64)}
        return {"theta": rng.uniform(-1.0, 1.0, size=self.dim)}

    def value_and_grad(self, params):
        d = params["theta"] - self.center
        hd = self.H @ d
        return 0.5 * float(d @ hd), {"theta": hd}

    def weight_groups(self):
        return ["theta"]

    def io_groups(self):
        return set()


@dataclass
class LinearRegression:
    """f(theta) = ||X theta - y||^2 / (2 n)."""

    X: np.ndarray
    y: np.ndarray
    theta0: Optional[np.ndarray] = None

    def __post_init__(self):
        self.X = as_tensor(self.X, "X")
        self.y = as_tensor(self.y, "y")
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise ValueError("X must be (n, d) and y must be (n,)")

    def shapes(self):
        return {"theta": (self.X.shape[1],)}

    def init_params(self, rng):
        if self.theta0 is not None:
            return {"theta": np.array(self.theta0, dtype=np.float64)}
        return {"theta": rng.normal(0.0, 1.0, size=self.X.shape[1])}

    def value_and_grad(self, params, sample_idx=None):
        x, y = self.X, self.y
        if sample_idx is not None:
            x, y = x[sample_idx], y[sample_idx]
        n = x.shape[0]
        r = x @ params["theta"] - y
        return float(r @ r) / (2.0 * n), {"theta": x.T @ r / n}

    def weight_groups(self):
        return ["theta"]

    def io_groups(self):
        return set()


@dataclass
class Mlp2:
    """Two-layer tanh MLP regression on a fixed synthetic Gaussian dataset.

    Data and teacher targets are generated from the run seed, so a config
    fully determines the run. The student starts at the teacher weights plus
    a perturbation, which keeps the optimization in the locally quadratic
    basin where the stationary-noise analysis applies; ``init_spread``
    controls the perturbation size. With only two weight matrices there is
    no interior layer: both count as input/output-facing, so quantizing them
    requires ``quantize_io=True`` in the training config.
    """

    d_in: int = 4
    hidden: int = 8
    d_out: int = 2
    n_samples: int = 64
    noise: float = 0.01
    init_spread: float = 0.15
    pretrain_steps: int = 0  # full-precision warm-start before quantized training
    pretrain_lr: float = 0.05

    _data: tuple = field(default=None, repr=False, compare=False)

    def shapes(self):
        return {
            "w1": (self.d_in, self.hidden),
            "b1": (self.hidden,),
            "w2": (self.hidden, self.d_out),
            "b2": (self.d_out,),
        }

    def _teacher(self, rng):
        return {
            "w1": rng.normal(0.0, 1.0 / math.sqrt(self.d_in), size=(self.d_in, self.hidden)),
            "b1": rng.normal(0.0, 0.1, size=self.hidden),
            "w2": rng.normal(0.0, 1.0 / math.sqrt(self.hidden), size=(self.hidden, self.d_out)),
            "b2": rng.normal(0.0, 0.1, size=self.d_out),
        }

    def _pretrain(self, params):
        # plain full-precision heavy-ball descent; anchors the quantized runs
        # at the basin bottom so regime comparisons measure pure noise floors
        vel = {k: np.zeros_like(v) for k, v in params.items()}
        for _ in range(self.pretrain_steps):
            _, grads = self.value_and_grad(params)
            for k in params:
                vel[k] = 0.9 * vel[k] + 0.1 * grads[k]
                params[k] = params[k] - self.pretrain_lr * vel[k]
        return params

    def init_params(self, rng):
        x = rng.normal(0.0, 1.0, size=(self.n_samples, self.d_in))
        teacher = self._teacher(rng)
        y = np.tanh(x @ teacher["w1"] + teacher["b1"]) @ teacher["w2"] + teacher["b2"]
        y = y + self.noise * rng.normal(0.0, 1.0, size=y.shape)
        self._data = (x, y)
        params = {
            name: val + self.init_spread * rng.normal(0.0, 1.0, size=val.shape)
            for name, val in teacher.items()
        }
        if self.pretrain_steps > 0:
            params = self._pretrain(params)
        return params

    def value_and_grad(self, params, sample_idx=None):
        """Loss and gradients, optionally restricted to a minibatch."""
        if self._data is None:
            raise RuntimeError("call init_params before value_and_grad")
        x, y = self._data
        if sample_idx is not None:
            x, y = x[sample_idx], y[sample_idx]
        n = x.shape[0]
        z1 = x @ params["w1"] + params["b1"]
        a1 = np.tanh(z1)
        pred = a1 @ params["w2"] + params["b2"]
        r = pred - y
        loss = float(np.sum(r * r)) / (2.0 * n)
        dz2 = r / n
        dw2 = a1.T @ dz2
        db2 = dz2.sum(axis=0)
        da1 = dz2 @ params["w2"].T
        dz1 = da1 * (1.0 - a1 * a1)
        dw1 = x.T @ dz1
        db1 = dz1.sum(axis=0)
        return loss, {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2}

    def weight_groups(self):
        return ["w1", "w2"]

    def io_groups(self):
        return {"w1", "w2"}


Objective = Union[Quadratic1D, QuadraticND, LinearRegression, Mlp2]


def pack(params: dict, order) -> np.ndarray:
    return np.concatenate([np.ravel(params[name]) for name in order])


def unpack(flat: np.ndarray, shapes: dict) -> dict:
    out = {}
    offset = 0
    for name, shape in shapes.items():
        size = int(np.prod(shape))
        out[name] = flat[offset:offset + size].reshape(shape)
        offset += size
    return out


def objective_eval(obj: Objective, theta_flat):
    """Value and gradient at a flat parameter vector (all groups packed)."""
    shapes = obj.shapes()
    params = unpack(as_tensor(theta_flat, "theta"), shapes)
    f, grads = obj.value_and_grad(params)
    return f, pack(grads, list(shapes))


# ---------------------------------------------------------------------------
# schedules and configuration


@dataclass(frozen=True)
class ConstantSchedule:
    pass


@dataclass(frozen=True)
class CosineSchedule:
    peak: float
    floor: float
    warmup_frac: float = 0.1

    def __post_init__(self):
        if not 0 < self.floor <= self.peak:
            raise ValueError("need 0 < floor <= peak")
        if not 0 <= self.warmup_frac < 1:
            raise ValueError("warmup_frac must be in [0, 1)")


Schedule = Union[ConstantSchedule, CosineSchedule]


def lr_at(schedule: Schedule, base_eta: float, t: int, steps: int) -> float:
    if isinstance(schedule, ConstantSchedule):
        return base_eta
    warm = schedule.warmup_frac * steps
    if t < warm:
        return schedule.floor + (schedule.peak - schedule.floor) * (t / warm)
    frac = (t - warm) / max(steps - warm, 1.0)
    return schedule.floor + 0.5 * (schedule.peak - schedule.floor) * (1.0 + math.cos(math.pi * frac))


@dataclass
class TrainConfig:
    objective: Objective
    optimizer: str  # "sgdm" | "adam"
    mode: str  # "mw" | "naive" | "eco" | "exact"
    hyper: optim.Hyper
    quant: Optional[Union[QuantSpec, dict]] = None  # spec for quantized groups (or per-group dict)
    steps: int = 100
    seed: int = 0
    lr_schedule: Schedule = ConstantSchedule()
    metrics_every: int = 1
    quantize_io: bool = False
    batch_size: Optional[int] = None  # minibatch SGD for objectives with a dataset
    capture_trajectory: bool = False

    def __post_init__(self):
        if self.optimizer not in ("sgdm", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.mode not in ("mw", "naive", "eco", "exact"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "exact" and self.optimizer != "sgdm":
            raise ValueError("exact mode requires the sgdm optimizer")
        if self.mode == "exact" and not isinstance(self.lr_schedule, ConstantSchedule):
            # the stored residual is scaled by 1/eta, so a varying rate would
            # break the implicit-master identity
            raise ValueError("exact mode requires a constant learning rate")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.metrics_every < 1:
            raise ValueError("metrics_every must be >= 1")
        if self.batch_size is not None:
            if self.batch_size < 1:
                raise ValueError("batch_size must be >= 1")
            if not isinstance(self.objective, (Mlp2, LinearRegression)):
                raise ValueError("batch_size requires a dataset-backed objective")


@dataclass
class RunRecord:
    step: np.ndarray
    lr: np.ndarray
    loss: np.ndarray
    grad_norm_sq: np.ndarray
    m_norm_sq: np.ndarray
    err_cos: np.ndarray
    err_relnorm: np.ndarray
    diverged: bool = False
    final_groups: list = field(default_factory=list)
    trajectory: Optional[dict] = None

    CSV_COLUMNS = ("step", "lr", "loss", "grad_norm_sq", "m_norm_sq", "err_cos", "err_relnorm")

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(self.CSV_COLUMNS) + "\n")
            for i in range(len(self.step)):
                row = [
                    "%d" % self.step[i],
                    "%.17g" % self.lr[i],
                    "%.17g" % self.loss[i],
                    "%.17g" % self.grad_norm_sq[i],
                    "%.17g" % self.m_norm_sq[i],
                    "%.17g" % self.err_cos[i],
                    "%.17g" % self.err_relnorm[i],
                ]
                fh.write(",".join(row) + "\n")


def consecutive_error_metrics(e_prev, e_next):
    """(relative norm, cosine similarity) of consecutive quantization errors."""
    return relative_norm(e_next, e_prev), cosine_similarity(e_prev, e_next)


def _effective_specs(obj: Objective, cfg: TrainConfig) -> dict:
    names = list(obj.shapes())
    quantizable = set(obj.weight_groups())
    if not cfg.quantize_io:
        quantizable -= set(obj.io_groups())
    specs = {}
    for name in names:
        spec = None
        if isinstance(cfg.quant, dict):
            spec = cfg.quant.get(name)
        elif name in quantizable:
            spec = cfg.quant
        specs[name] = spec if spec is not None else QuantSpec(Identity())
    return specs


def _init_groups(obj: Objective, cfg: TrainConfig, params: dict, specs: dict) -> list:
    groups = []
    for gid, (name, theta0) in enumerate(params.items()):
        spec = specs[name]
        key = RngKey(seed=cfg.seed, step=0, tensor_id=gid, index=0)
        zeros = np.zeros_like(theta0)
        if cfg.mode == "mw":
            out = quantize(theta0, spec, key)
            theta, mode = out.quantized, optim.MasterWeights(master=theta0.copy())
            m = zeros
        elif cfg.mode == "exact":
            theta, m, e0 = optim.exact_injection_init(theta0, zeros, cfg.hyper, spec, key)
            mode = optim.ExactInjection(prev_error=e0)
        else:
            out = quantize(theta0, spec, key)
            theta = out.quantized
            mode = optim.Naive() if cfg.mode == "naive" else optim.Eco()
            m = zeros
        if cfg.optimizer == "adam":
            state = optim.AdamState(m=m, v=np.zeros_like(theta0), t=0, mode=mode)
        else:
            state = optim.SgdmState(m=m, mode=mode)
        groups.append(optim.ParamGroup(name, theta, state, spec, gid))
    return groups


def _metric_group(groups: list) -> int:
    """Index of the group whose errors feed the similarity metrics: the
    largest quantized group, falling back to the largest group overall."""
    quantized = [i for i, g in enumerate(groups) if not isinstance(g.spec.grid, Identity)]
    pool = quantized if quantized else list(range(len(groups)))
    return max(pool, key=lambda i: groups[i].theta.size)


def run_training(cfg: TrainConfig) -> RunRecord:
    """Run the configured regime; deterministic given cfg.seed."""
    obj = cfg.objective
    rng = np.random.default_rng(cfg.seed)
    params = obj.init_params(rng)
    specs = _effective_specs(obj, cfg)
    groups = _init_groups(obj, cfg, params, specs)
    order = list(params)

    batching = cfg.batch_size is not None
    if batching:
        n_data = obj.X.shape[0] if isinstance(obj, LinearRegression) else obj._data[0].shape[0]
        batch = min(cfg.batch_size, n_data)

    def make_grad_fn(step):
        idx = None
        if batching:
            idx = np.random.default_rng((cfg.seed, 7919, step)).choice(n_data, size=batch, replace=False)

        def grad_fn(thetas):
            p = dict(zip(order, thetas))
            f, grads = obj.value_and_grad(p, idx) if batching else obj.value_and_grad(p)
            return f, [grads[name] for name in order]

        return grad_fn

    metric_gid = _metric_group(groups)
    prev_err = None
    if not isinstance(groups[metric_gid].spec.grid, Identity):
        if cfg.mode == "exact":
            prev_err = groups[metric_gid].state.mode.prev_error
        else:
            init_key = RngKey(seed=cfg.seed, step=0, tensor_id=metric_gid, index=0)
            prev_err = quantize(params[order[metric_gid]], groups[metric_gid].spec, init_key).error

    rows = {k: [] for k in RunRecord.CSV_COLUMNS}
    traj = {"theta_hat": [], "m_hat": [], "grad": [], "error": []} if cfg.capture_trajectory else None
    diverged = False

    for t in range(cfg.steps):
        lr = lr_at(cfg.lr_schedule, cfg.hyper.eta, t, cfg.steps)
        h_t = replace(cfg.hyper, eta=lr)
        m_pre_sq = sum(float(np.sum(g.state.m ** 2)) for g in groups)
        record_row = t % cfg.metrics_every == 0
        loss_full = None
        if record_row and batching:
            # batch loss is a noisy estimate; report the dataset loss instead
            loss_full, _ = obj.value_and_grad(dict(zip(order, (g.theta for g in groups))))
        if traj is not None:
            traj["theta_hat"].append(pack({g.name: g.theta for g in groups}, order))
            traj["m_hat"].append(pack({g.name: g.state.m for g in groups}, order))
        groups, info = optim.train_step(groups, make_grad_fn(t), h_t, step=t, seed=cfg.seed)
        if traj is not None:
            traj["grad"].append(np.concatenate([np.ravel(g) for g in info.grads]))
            traj["error"].append(pack(info.errors, order))
        err = info.errors.get(groups[metric_gid].name)

        if record_row:
            if prev_err is not None and err is not None and float(np.linalg.norm(prev_err)) > 0:
                rel, cos = consecutive_error_metrics(prev_err, err)
            else:
                rel, cos = float("nan"), float("nan")
            rows["step"].append(t)
            rows["lr"].append(lr)
            rows["loss"].append(info.loss if loss_full is None else loss_full)
            rows["grad_norm_sq"].append(info.grad_norm_sq)
            rows["m_norm_sq"].append(m_pre_sq)
            rows["err_cos"].append(cos)
            rows["err_relnorm"].append(rel)
        prev_err = err

        if not np.isfinite(info.loss) or info.loss > DIVERGENCE_THRESHOLD:
            diverged = True
            break

    if traj is not None:
        traj["theta_hat"].append(pack({g.name: g.theta for g in groups}, order))
        traj["m_hat"].append(pack({g.name: g.state.m for g in groups}, order))

    record = RunRecord(
        step=np.array(rows["step"], dtype=np.int64),
        lr=np.array(rows["lr"]),
        loss=np.array(rows["loss"]),
        grad_norm_sq=np.array(rows["grad_norm_sq"]),
        m_norm_sq=np.array(rows["m_norm_sq"]),
        err_cos=np.array(rows["err_cos"]),
        err_relnorm=np.array(rows["err_relnorm"]),
        diverged=diverged,
        final_groups=groups,
        trajectory=traj,
    )
    return record
