"""Linear probes over frozen embeddings.

Two probe families:

* rgr: ridge regression onto the log10 count-weighted median, solved in
  closed form with an unpenalized intercept;
* mcc: a linear-softmax classifier over the bucket grid trained with dense
  cross-entropy against full soft-label rows, an L2 penalty on the weight
  matrix only.

mcc training is deterministic full-batch descent: a block-preconditioned
gradient direction (exact curvature bounds per parameter block) with a
Barzilai-Borwein step size and Armijo backtracking, started from zeros.
Determinism matters more than speed here; problems are small.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .embeddings import PcaProjection, apply_pca, fit_pca
from .scalardata import BASE10_SCHEME, BucketScheme, EmpiricalDistribution, round_half_away


@dataclass
class TrainConfig:
    max_iters: int = 1000
    grad_tolerance: float = 1e-6
    pca_k: int = 150
    pca_threshold: int = 2000

    def __post_init__(self):
        if self.max_iters < 1 or self.grad_tolerance <= 0:
            raise ValueError("max_iters and grad_tolerance must be positive")
        if self.pca_k < 1 or self.pca_threshold < 0:
            raise ValueError("pca_k must be >= 1 and pca_threshold >= 0")


@dataclass
class Standardizer:
    """Per-dimension z-scoring fitted on a training matrix; zero-variance
    dimensions pass through unscaled."""

    mean: np.ndarray
    std: np.ndarray

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std


def fit_standardizer(X: np.ndarray) -> Standardizer:
    X = np.asarray(X, dtype=np.float64)
    std = X.std(axis=0)
    return Standardizer(mean=X.mean(axis=0), std=np.where(std > 0, std, 1.0))


@dataclass
class RgrProbe:
    weights: np.ndarray
    intercept: float
    lam: float = 1.0


@dataclass
class MccProbe:
    weight_matrix: np.ndarray  # count × feature_dim
    intercepts: np.ndarray  # count
    lam: float
    scheme: BucketScheme
    final_loss: float = math.nan
    final_grad_norm: float = math.nan
    n_iters: int = 0
    converged: bool = False
    loss_history: Optional[list] = field(default=None, repr=False)


def _check_matrix(X: np.ndarray, name: str) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def train_rgr(X: np.ndarray, y: np.ndarray, lam: float = 1.0,
              fit_intercept: bool = True) -> RgrProbe:
    """Exact minimizer of sum((w.x + b - y)^2) + lam*||w||^2, b unpenalized.

    Centering X and y reduces the problem to the standard ridge normal
    equations; the intercept is recovered from the means.
    """
    X = _check_matrix(X, "X")
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (X.shape[0],):
        raise ValueError(f"y must have shape ({X.shape[0]},), got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")

    if fit_intercept:
        xm, ym = X.mean(axis=0), float(y.mean())
    else:
        xm, ym = np.zeros(X.shape[1]), 0.0
    Xc = X - xm
    yc = y - ym
    A = Xc.T @ Xc + lam * np.eye(X.shape[1])
    w = np.linalg.solve(A, Xc.T @ yc)
    b = ym - float(w @ xm)
    return RgrProbe(weights=w, intercept=b, lam=lam)


def predict_rgr(probe: RgrProbe, x: np.ndarray):
    """Point estimate w.x + b on the log10 scale; accepts a vector or a
    row-matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != probe.weights.shape[0]:
        raise ValueError(
            f"feature length {x.shape[-1]} does not match probe dim {probe.weights.shape[0]}"
        )
    out = x @ probe.weights + probe.intercept
    return float(out) if out.ndim == 0 else out


def rgr_to_bucket(estimate: float, scheme: BucketScheme) -> EmpiricalDistribution:
    """Point-mass distribution at the bucket containing a log10 estimate.

    The estimate stays in log10 regardless of scheme base; it is converted
    to log_base units here before rounding (half away from zero) and
    clamping.
    """
    if not math.isfinite(estimate):
        raise ValueError(f"estimate must be finite, got {estimate!r}")
    raw = round_half_away(estimate / math.log10(scheme.base))
    label = min(max(raw, scheme.min_exp), scheme.max_label)
    return EmpiricalDistribution.point_mass(scheme, label)


def mcc_loss_and_grad(W: np.ndarray, b: np.ndarray, X: np.ndarray, Y: np.ndarray,
                      lam: float):
    """Cross-entropy objective J(W, b) and its analytic gradient.

    J = -(1/n) sum_i sum_c Y[i,c] log softmax(W x_i + b)_c + (lam/2) ||W||_F^2
    """
    logits = X @ W.T + b
    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - lse
    n = X.shape[0]
    J = -float((Y * logp).sum()) / n + 0.5 * lam * float((W * W).sum())
    P = np.exp(logp)
    R = P - Y
    grad_W = R.T @ X / n + lam * W
    grad_b = R.mean(axis=0)
    return J, grad_W, grad_b


def train_mcc(X: np.ndarray, Y: np.ndarray, lam: float = 0.01,
              cfg: Optional[TrainConfig] = None,
              scheme: BucketScheme = BASE10_SCHEME) -> MccProbe:
    """Fit the linear-softmax probe against soft-label rows.

    Stops when the gradient infinity-norm drops below cfg.grad_tolerance or
    after cfg.max_iters accepted steps.  The achieved loss and gradient
    norm are recorded on the returned probe.
    """
    cfg = cfg or TrainConfig()
    X = _check_matrix(X, "X")
    Y = _check_matrix(Y, "Y")
    n, d = X.shape
    if Y.shape != (n, scheme.count):
        raise ValueError(f"Y must have shape ({n}, {scheme.count}), got {Y.shape}")
    if np.any(Y < 0):
        raise ValueError("Y contains negative entries")
    row_err = np.abs(Y.sum(axis=1) - 1.0)
    if row_err.max() > 1e-9:
        bad = int(row_err.argmax())
        raise ValueError(f"Y row {bad} sums to {Y[bad].sum()!r}, must be 1 within 1e-9")
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")

    # Curvature bounds per block: the softmax Hessian is at most 1/2 times
    # the Gram operator, so L_W <= sigma_max(X)^2/(2n) + lam and L_b <= 1/2.
    sigma_max = float(np.linalg.norm(X, 2))
    L_w = 0.5 * sigma_max * sigma_max / n + max(lam, 1e-12)
    L_b = 0.5

    W = np.zeros((scheme.count, d))
    b = np.zeros(scheme.count)
    J, gW, gb = mcc_loss_and_grad(W, b, X, Y, lam)
    history = [J]
    t = 1.0
    rises = 0
    converged = False
    steps = 0
    for _ in range(cfg.max_iters):
        gnorm = max(float(np.abs(gW).max()), float(np.abs(gb).max()))
        if gnorm < cfg.grad_tolerance:
            converged = True
            break
        dW = gW / L_w
        db = gb / L_b
        gd = float((gW * dW).sum() + (gb * db).sum())
        accepted = False
        for _ in range(60):
            W2 = W - t * dW
            b2 = b - t * db
            J2, gW2, gb2 = mcc_loss_and_grad(W2, b2, X, Y, lam)
            if math.isfinite(J2) and J2 <= J - 1e-4 * t * gd:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            raise ValueError("mcc training stalled: line search found no decrease")
        if J2 > J:
            rises += 1
            if rises >= 10:
                raise ValueError("mcc training diverged: loss rose 10 steps in a row")
        else:
            rises = 0
        # Barzilai-Borwein secant step in the preconditioned metric.
        sy = -t * (float((gW * (gW2 - gW)).sum()) / L_w
                   + float((gb * (gb2 - gb)).sum()) / L_b)
        ss = t * t * gd
        t = min(max(ss / sy, 1e-8), 1e8) if sy > 0 else 1.0
        W, b, J, gW, gb = W2, b2, J2, gW2, gb2
        history.append(J)
        steps += 1
    else:
        gnorm = max(float(np.abs(gW).max()), float(np.abs(gb).max()))

    return MccProbe(
        weight_matrix=W,
        intercepts=b,
        lam=lam,
        scheme=scheme,
        final_loss=J,
        final_grad_norm=gnorm,
        n_iters=steps,
        converged=converged,
        loss_history=history,
    )


def predict_mcc(probe: MccProbe, x: np.ndarray) -> EmpiricalDistribution:
    """Softmax of the probe logits as a bucket distribution, stabilized by
    max subtraction."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != probe.weight_matrix.shape[1]:
        raise ValueError(
            f"expected feature vector of length {probe.weight_matrix.shape[1]}, "
            f"got shape {x.shape}"
        )
    logits = probe.weight_matrix @ x + probe.intercepts
    z = np.exp(logits - logits.max())
    probs = z / z.sum()
    return EmpiricalDistribution(scheme=probe.scheme, probs=probs, total_count=1)


@dataclass
class ProbePipeline:
    """A fitted end-to-end predictor: standardize, optionally project, probe.

    This is the unit the harness trains per fold and the unit that
    serializes to disk; every fitted statistic inside it comes from the
    training rows alone.
    """

    kind: str  # "rgr" | "mcc"
    scheme: BucketScheme
    standardizer: Standardizer
    pca: Optional[PcaProjection]
    probe: Union[RgrProbe, MccProbe]

    def features(self, x: np.ndarray) -> np.ndarray:
        z = self.standardizer.transform(x)
        if self.pca is not None:
            z = apply_pca(self.pca, z)
        return z

    def predict_point(self, x: np.ndarray) -> float:
        if self.kind != "rgr":
            raise ValueError("point estimates are only defined for rgr probes")
        return float(predict_rgr(self.probe, self.features(x)))

    def predict_distribution(self, x: np.ndarray) -> EmpiricalDistribution:
        z = self.features(x)
        if self.kind == "rgr":
            return rgr_to_bucket(float(predict_rgr(self.probe, z)), self.scheme)
        return predict_mcc(self.probe, z)


def fit_pipeline(X: np.ndarray, targets: np.ndarray, kind: str,
                 lam: Optional[float] = None, cfg: Optional[TrainConfig] = None,
                 scheme: BucketScheme = BASE10_SCHEME) -> ProbePipeline:
    """Standardize features, reduce with PCA when the training set is small
    (below cfg.pca_threshold rows), then train the requested probe.

    targets: log-median vector for rgr, soft-label matrix for mcc.
    """
    if kind not in ("rgr", "mcc"):
        raise ValueError(f"unknown probe kind {kind!r}")
    cfg = cfg or TrainConfig()
    X = _check_matrix(X, "X")
    n, dim = X.shape

    std = fit_standardizer(X)
    Z = std.transform(X)
    pca = None
    if n < cfg.pca_threshold:
        k = min(cfg.pca_k, dim, n - 1)
        if k >= 1 and k < dim:
            pca = fit_pca(Z, k)
            Z = apply_pca(pca, Z)
    if kind == "rgr":
        probe = train_rgr(Z, targets, lam=1.0 if lam is None else lam)
    else:
        probe = train_mcc(Z, targets, lam=0.01 if lam is None else lam,
                          cfg=cfg, scheme=scheme)
    return ProbePipeline(kind=kind, scheme=scheme, standardizer=std, pca=pca,
                         probe=probe)


def pipeline_to_dict(p: ProbePipeline) -> dict:
    d = {
        "kind": p.kind,
        "lambda": p.probe.lam,
        "scheme": p.scheme.as_dict(),
        "standardizer": {
            "mean": [float(v) for v in p.standardizer.mean],
            "std": [float(v) for v in p.standardizer.std],
        },
        "pca": p.pca.as_dict() if p.pca is not None else None,
    }
    if p.kind == "rgr":
        d["weights"] = [float(v) for v in p.probe.weights]
        d["intercept"] = p.probe.intercept
    else:
        d["weight_matrix"] = [[float(v) for v in row] for row in p.probe.weight_matrix]
        d["intercepts"] = [float(v) for v in p.probe.intercepts]
    return d


def pipeline_from_dict(d: dict) -> ProbePipeline:
    kind = d["kind"]
    scheme = BucketScheme.from_dict(d["scheme"])
    std = Standardizer(
        mean=np.array(d["standardizer"]["mean"], dtype=np.float64),
        std=np.array(d["standardizer"]["std"], dtype=np.float64),
    )
    pca = PcaProjection.from_dict(d["pca"]) if d.get("pca") else None
    if kind == "rgr":
        probe = RgrProbe(
            weights=np.array(d["weights"], dtype=np.float64),
            intercept=float(d["intercept"]),
            lam=float(d["lambda"]),
        )
    elif kind == "mcc":
        probe = MccProbe(
            weight_matrix=np.array(d["weight_matrix"], dtype=np.float64),
            intercepts=np.array(d["intercepts"], dtype=np.float64),
            lam=float(d["lambda"]),
            scheme=scheme,
        )
    else:
        raise ValueError(f"unknown probe kind {kind!r}")
    return ProbePipeline(kind=kind, scheme=scheme, standardizer=std, pca=pca,
                         probe=probe)


def save_pipeline(p: ProbePipeline, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(pipeline_to_dict(p), fh, indent=2)
        fh.write("\n")


def load_pipeline(path) -> ProbePipeline:
    with open(path, encoding="utf-8") as fh:
        return pipeline_from_dict(json.load(fh))
