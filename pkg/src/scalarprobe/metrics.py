"""Distribution comparison metrics for bucket-grid predictions.

Three views of prediction quality, deliberately disagreeing about what
"close" means:

* bucket accuracy: argmax match only, distance-blind;
* density MSE: per-bucket squared differences, also distance-blind
  (moving mass one bucket or ten costs the same);
* earth mover's distance: mass times distance moved, the only one of the
  three that rewards being *nearly* right.

EMD values from :func:`emd` and :func:`brute_force_emd` are unnormalized
(bucket widths as unit distance); the reporting layer divides by the
bucket count for display.
"""

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .scalardata import EmpiricalDistribution


@dataclass(frozen=True)
class MetricTriple:
    accuracy: float
    mse: float
    emd: float  # unnormalized


@dataclass
class TransportPlan:
    """Witnessing transport for brute_force_emd.

    flows: (source label, sink label, mass) with mass > 0.  Flows carry net
    mass only — a bucket never appears as both source and sink, so equal
    distributions yield an empty plan.
    """

    flows: list

    def cost(self) -> float:
        return float(sum(m * abs(a - b) for a, b, m in self.flows))

    def net_marginals(self, scheme) -> np.ndarray:
        """Row-minus-column mass per bucket; equals p - q for a valid plan."""
        net = np.zeros(scheme.count)
        for a, b, m in self.flows:
            net[a - scheme.min_exp] += m
            net[b - scheme.min_exp] -= m
        return net


def _check_pair(p: EmpiricalDistribution, q: EmpiricalDistribution) -> None:
    if p.scheme != q.scheme:
        raise ValueError(f"scheme mismatch: {p.scheme} vs {q.scheme}")


def argmax_bucket(dist: EmpiricalDistribution) -> int:
    """Label of the highest-probability bucket; ties go to the lower label."""
    return dist.scheme.min_exp + int(np.argmax(dist.probs))


def bucket_accuracy(predicted: EmpiricalDistribution, truth: EmpiricalDistribution) -> int:
    _check_pair(predicted, truth)
    return int(argmax_bucket(predicted) == argmax_bucket(truth))


def density_mse(p: EmpiricalDistribution, q: EmpiricalDistribution,
                cdf: bool = False) -> float:
    """Mean squared per-bucket density difference.

    cdf=True compares cumulative distributions instead (the Cramer-von
    Mises reading); the default compares densities.
    """
    _check_pair(p, q)
    a, b = p.probs, q.probs
    if cdf:
        a, b = np.cumsum(a), np.cumsum(b)
    diff = a - b
    return float(diff @ diff) / p.scheme.count


def emd(p: EmpiricalDistribution, q: EmpiricalDistribution) -> float:
    """Wasserstein-1 under unit inter-bucket distance, via the 1-D closed
    form: sum of absolute CDF differences.  Unnormalized."""
    _check_pair(p, q)
    return float(np.abs(np.cumsum(p.probs - q.probs)).sum())


def brute_force_emd(p: EmpiricalDistribution,
                    q: EmpiricalDistribution) -> tuple[float, TransportPlan]:
    """Min-cost transport by the greedy left-to-right sweep (optimal in one
    dimension with convex cost); returns cost and the witnessing plan."""
    _check_pair(p, q)
    surplus = p.probs - q.probs
    labels = p.scheme.labels()
    sources = [[labels[i], s] for i, s in enumerate(surplus) if s > 0]
    sinks = [[labels[i], -s] for i, s in enumerate(surplus) if s < 0]
    flows = []
    cost = 0.0
    i = j = 0
    while i < len(sources) and j < len(sinks):
        m = min(sources[i][1], sinks[j][1])
        if m > 0:
            flows.append((int(sources[i][0]), int(sinks[j][0]), float(m)))
            cost += m * abs(sources[i][0] - sinks[j][0])
        sources[i][1] -= m
        sinks[j][1] -= m
        if sources[i][1] <= 1e-15:
            i += 1
        if j < len(sinks) and sinks[j][1] <= 1e-15:
            j += 1
    return float(cost), TransportPlan(flows=flows)


def aggregate_baseline(train_dists: Sequence[EmpiricalDistribution]) -> EmpiricalDistribution:
    """Constant predictor: unweighted per-bucket mean of the training
    distributions, renormalized."""
    if not train_dists:
        raise ValueError("aggregate baseline needs at least one training distribution")
    scheme = train_dists[0].scheme
    for d in train_dists[1:]:
        if d.scheme != scheme:
            raise ValueError("training distributions use mixed schemes")
    probs = np.mean([d.probs for d in train_dists], axis=0)
    probs = probs / probs.sum()
    total = sum(int(d.total_count) for d in train_dists)
    return EmpiricalDistribution(scheme=scheme, probs=probs, total_count=total)


def sampling_upper_bound(dists: Iterable[EmpiricalDistribution]) -> float:
    """Expected accuracy of sampling from each object's true distribution
    and scoring against its mode: the mean modal mass."""
    tops = [float(d.probs.max()) for d in dists]
    if not tops:
        raise ValueError("sampling upper bound needs at least one distribution")
    return float(np.mean(tops))
