"""Loss functions over radial embedding geometry, with analytic gradients.

Scalar losses (`loss_re`, `loss_ec_margin`, `loss_reg`) operate on raw
vectors and broadcast over leading axes like the geometry primitives.
Batch-level losses (`loss_re_aggregate`, `loss_total`) operate on keyed
:class:`Triplet` objects and return gradients as a :class:`GradientBundle`
keyed by embedding id, ready for an optimizer.

Gradients are exact closed forms; hinge/clip corners use subgradient 0 and
are reported through the bundle's ``smooth`` flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CountMismatch, DegenerateAngle, DimensionMismatch, EmptyBatch
from .geometry import (
    DEGENERACY_TOL,
    Embedding,
    _as_f64,
    _check_same_dim,
    _norm,
    cosine_sim,
    exterior_angle,
    half_aperture,
)


@dataclass
class LossConfig:
    """Weights and geometry constants for the training loss.

    ``margin`` only matters for the cone-margin loss family; ``math.inf``
    disables clipping, which reduces the summed positive/negative margin
    losses to the plain contrastive radial loss.
    """

    lambda_re: float = 1.0
    lambda_reg: float = 10.0
    epsilon: float = 0.05
    margin: float = math.inf

    def __post_init__(self):
        if self.lambda_re < 0 or self.lambda_reg < 0:
            raise ValueError("loss weights must be non-negative")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.margin < 0:
            raise ValueError("margin must be >= 0 (or inf)")


@dataclass(frozen=True)
class Triplet:
    """One contrastive unit: anchor, its entailing positive, and a negative.

    ``tier`` is the anchor's level in the 4-tier caption chain (1..3) and
    ``record_id`` identifies the source record; together they give the
    deterministic ordering used to break ties in hard-example mining.
    """

    anchor: Embedding
    positive: Embedding
    negative: Embedding
    tier: int
    record_id: str

    def __post_init__(self):
        vecs = (self.anchor.values, self.positive.values, self.negative.values)
        _check_same_dim(*vecs)
        for a, b, names in (
            (vecs[0], vecs[1], "anchor/positive"),
            (vecs[0], vecs[2], "anchor/negative"),
            (vecs[1], vecs[2], "positive/negative"),
        ):
            if _norm(a - b) <= DEGENERACY_TOL:
                raise DegenerateAngle(f"triplet {names} embeddings coincide")


@dataclass
class GradientBundle:
    """Per-parameter gradients keyed by embedding id, plus the root gradient.

    ``smooth`` is False when the loss was evaluated exactly on a hinge/clip
    corner (subgradient 0 was used there).
    """

    by_key: dict[str, np.ndarray]
    root: np.ndarray
    smooth: bool = True

    def _add(self, key: str, grad: np.ndarray) -> None:
        if key in self.by_key:
            self.by_key[key] = self.by_key[key] + grad
        else:
            self.by_key[key] = np.array(grad, dtype=np.float64)


def loss_re(root, anchor, positive, negative) -> np.ndarray | float:
    """Contrastive radial loss: exterior angle to the positive minus exterior
    angle to the negative.  Range [-pi, pi]; negative values mean the positive
    already sits more radially outward than the negative."""
    return (
        exterior_angle(root, anchor, positive) - exterior_angle(root, anchor, negative)
    )


def loss_ec_margin(
    root, anchor, other, sign: int, eps: float = 0.05, margin: float = math.inf
) -> np.ndarray | float:
    """Clipped signed cone excess: max(-margin, sign * (angle - aperture)).

    ``sign`` is +1 for entailment pairs and -1 for contradiction pairs.
    With sign=+1 and margin=0 this is the hinged cone-violation loss; with
    margin=inf the clip is inactive.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    xi = np.asarray(exterior_angle(root, anchor, other))
    theta = np.asarray(half_aperture(root, anchor, eps))
    return np.maximum(-margin, sign * (xi - theta))[()]


def loss_reg(current: Sequence, original: Sequence) -> float:
    """Negative mean cosine similarity between current and original vectors.

    Expects the 8 caption embeddings of one record (4 positive + 4 negative),
    or 4 for records without negatives; raises CountMismatch otherwise.
    """
    cur = [np.asarray(v.values if isinstance(v, Embedding) else v) for v in current]
    orig = [np.asarray(v.values if isinstance(v, Embedding) else v) for v in original]
    if len(cur) != len(orig):
        raise CountMismatch(f"{len(cur)} current vs {len(orig)} original embeddings")
    if len(cur) not in (4, 8):
        raise CountMismatch(f"expected 4 or 8 caption pairs, got {len(cur)}")
    sims = [float(cosine_sim(c, o)) for c, o in zip(cur, orig)]
    return -sum(sims) / len(sims)


# ----------------------------------------------------------------------
# Closed-form gradients.
# ----------------------------------------------------------------------


def _exterior_angle_grad(root, anchor, other):
    """Angle plus its partials w.r.t. root, anchor, and the second point.

    Raises DegenerateAngle where the angle itself is defined but its
    gradient is not (collinear configurations, angle exactly 0 or pi).
    """
    r, e, e2 = _as_f64(root), _as_f64(anchor), _as_f64(other)
    _check_same_dim(r, e, e2)
    u = e - r
    w = e2 - e
    nu = float(_norm(u))
    nw = float(_norm(w))
    if nu <= DEGENERACY_TOL:
        raise DegenerateAngle("anchor coincides with the root")
    if nw <= DEGENERACY_TOL:
        raise DegenerateAngle("second point coincides with the anchor")
    c = float(np.dot(u, w) / (nu * nw))
    c = max(-1.0, min(1.0, c))
    s2 = 1.0 - c * c
    if s2 <= 0.0:
        raise DegenerateAngle("exterior-angle gradient undefined at 0 or pi")
    dacos = -1.0 / math.sqrt(s2)
    dc_du = w / (nu * nw) - c * u / (nu * nu)
    dc_dw = u / (nu * nw) - c * w / (nw * nw)
    angle = math.acos(c)
    g_root = -dacos * dc_du
    g_anchor = dacos * (dc_du - dc_dw)
    g_other = dacos * dc_dw
    return angle, g_root, g_anchor, g_other


def _half_aperture_grad(root, anchor, eps: float):
    """Aperture plus its partials w.r.t. root and anchor.

    Inside the clamp region (root distance <= eps) the aperture is constant
    pi/2 with zero gradient; exactly on the clamp boundary the one-sided
    slope diverges, so that point is rejected.
    """
    r, e = _as_f64(root), _as_f64(anchor)
    _check_same_dim(r, e)
    u = e - r
    d = float(_norm(u))
    if d <= DEGENERACY_TOL:
        raise DegenerateAngle("half-aperture undefined at the root")
    if d == eps:
        raise DegenerateAngle("half-aperture gradient undefined at distance eps")
    if d < eps:
        zero = np.zeros_like(u)
        return math.pi / 2.0, zero, zero
    q = eps / d
    dtheta_dd = -q / (d * math.sqrt(1.0 - q * q))
    uhat = u / d
    g_anchor = dtheta_dd * uhat
    return math.asin(q), -g_anchor, g_anchor


def loss_re_grad(root, anchor, positive, negative):
    """Value and partials of `loss_re` w.r.t. (root, anchor, positive, negative)."""
    pos_angle, pr, pe, pp = _exterior_angle_grad(root, anchor, positive)
    neg_angle, nr, ne, nn = _exterior_angle_grad(root, anchor, negative)
    value = pos_angle - neg_angle
    return value, pr - nr, pe - ne, pp, -nn


def loss_ec_margin_grad(
    root, anchor, other, sign: int, eps: float = 0.05, margin: float = math.inf
):
    """Value, partials w.r.t. (root, anchor, other), and a smoothness flag.

    Inside the clip region the gradient is zero; exactly on the clip corner
    the zero subgradient is returned with ``smooth=False``.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    xi, xr, xe, xo = _exterior_angle_grad(root, anchor, other)
    theta, tr, te = _half_aperture_grad(root, anchor, eps)
    excess = sign * (xi - theta)
    zero = np.zeros(np.asarray(root).shape[-1])
    if excess < -margin:
        return -margin, zero, zero, zero, True
    if excess == -margin:
        return -margin, zero, zero, zero, False
    g_root = sign * (xr - tr)
    g_anchor = sign * (xe - te)
    g_other = sign * xo
    return excess, g_root, g_anchor, g_other, True


def loss_reg_grad(current: Sequence, original: Sequence):
    """Value of `loss_reg` and one gradient per current embedding."""
    cur = [_as_f64(v.values if isinstance(v, Embedding) else v) for v in current]
    orig = [_as_f64(v.values if isinstance(v, Embedding) else v) for v in original]
    value = loss_reg(cur, orig)
    n = len(cur)
    grads = []
    for c, o in zip(cur, orig):
        nc, no = float(_norm(c)), float(_norm(o))
        sim = float(np.dot(c, o) / (nc * no))
        dsim_dc = o / (nc * no) - sim * c / (nc * nc)
        grads.append(-dsim_dc / n)
    return value, grads


# ----------------------------------------------------------------------
# Batch-level losses over keyed triplets.
# ----------------------------------------------------------------------


def _mining_order(triplets: Sequence[Triplet]):
    """Deterministic (tier, item) sort keys; item = first appearance of the
    record in the batch."""
    item_index: dict[str, int] = {}
    for t in triplets:
        item_index.setdefault(t.record_id, len(item_index))
    return [(t.tier, item_index[t.record_id]) for t in triplets]


def _hard_indices(pos_angles, neg_angles, order):
    """Index of the maximal positive angle and of the minimal negative angle,
    ties broken by the lowest (tier, item) key."""
    i_pos = 0
    for i in range(1, len(pos_angles)):
        if pos_angles[i] > pos_angles[i_pos] or (
            pos_angles[i] == pos_angles[i_pos] and order[i] < order[i_pos]
        ):
            i_pos = i
    i_neg = 0
    for i in range(1, len(neg_angles)):
        if neg_angles[i] < neg_angles[i_neg] or (
            neg_angles[i] == neg_angles[i_neg] and order[i] < order[i_neg]
        ):
            i_neg = i
    return i_pos, i_neg


def loss_re_aggregate(triplets: Sequence[Triplet], root) -> float:
    """Mean contrastive radial loss over the batch plus the two hard-mined
    terms: the full loss of the triplet with the largest positive angle and
    of the triplet with the smallest negative angle."""
    if not triplets:
        raise EmptyBatch("aggregate loss over an empty minibatch")
    pos = [float(exterior_angle(root, t.anchor.values, t.positive.values)) for t in triplets]
    neg = [float(exterior_angle(root, t.anchor.values, t.negative.values)) for t in triplets]
    per = [p - n for p, n in zip(pos, neg)]
    i_pos, i_neg = _hard_indices(pos, neg, _mining_order(triplets))
    return sum(per) / len(per) + per[i_pos] + per[i_neg]


def loss_re_aggregate_grad(triplets: Sequence[Triplet], root):
    """Value of `loss_re_aggregate` and its gradient bundle."""
    if not triplets:
        raise EmptyBatch("aggregate loss over an empty minibatch")
    r = _as_f64(root)
    parts = []  # (value, g_root, g_anchor, g_pos, g_neg, pos_angle, neg_angle)
    for t in triplets:
        pa, pr, pe, pp = _exterior_angle_grad(r, t.anchor.values, t.positive.values)
        na, nr, ne, nn = _exterior_angle_grad(r, t.anchor.values, t.negative.values)
        parts.append((pa - na, pr - nr, pe - ne, pp, -nn, pa, na))

    n = len(parts)
    i_pos, i_neg = _hard_indices(
        [p[5] for p in parts], [p[6] for p in parts], _mining_order(triplets)
    )
    value = sum(p[0] for p in parts) / n + parts[i_pos][0] + parts[i_neg][0]

    bundle = GradientBundle(by_key={}, root=np.zeros_like(r))
    weights = [1.0 / n] * n
    weights[i_pos] += 1.0
    weights[i_neg] += 1.0
    for t, p, w in zip(triplets, parts, weights):
        bundle.root = bundle.root + w * p[1]
        bundle._add(t.anchor.id, w * p[2])
        bundle._add(t.positive.id, w * p[3])
        bundle._add(t.negative.id, w * p[4])
    return value, bundle


RegPairs = Sequence[tuple[Sequence[Embedding], Sequence[np.ndarray]]]


def loss_total(
    triplets: Sequence[Triplet], reg_pairs: RegPairs, root, config: LossConfig
) -> float:
    """Weighted training loss: lambda_re * aggregate contrastive loss plus
    lambda_reg * regularization, the latter averaged per record and then over
    the records in the minibatch."""
    value = 0.0
    if config.lambda_re != 0.0:
        value += config.lambda_re * loss_re_aggregate(triplets, root)
    if config.lambda_reg != 0.0:
        if not reg_pairs:
            raise CountMismatch("regularization pairs required when lambda_reg > 0")
        reg = sum(loss_reg(cur, orig) for cur, orig in reg_pairs) / len(reg_pairs)
        value += config.lambda_reg * reg
    return value


def loss_total_grad(
    triplets: Sequence[Triplet], reg_pairs: RegPairs, root, config: LossConfig
):
    """Value of `loss_total` and its gradient bundle over all participating
    caption embeddings and the root."""
    r = _as_f64(root)
    bundle = GradientBundle(by_key={}, root=np.zeros_like(r))
    value = 0.0
    if config.lambda_re != 0.0:
        re_value, re_bundle = loss_re_aggregate_grad(triplets, r)
        value += config.lambda_re * re_value
        bundle.root = bundle.root + config.lambda_re * re_bundle.root
        for key, g in re_bundle.by_key.items():
            bundle._add(key, config.lambda_re * g)
    if config.lambda_reg != 0.0:
        if not reg_pairs:
            raise CountMismatch("regularization pairs required when lambda_reg > 0")
        scale = config.lambda_reg / len(reg_pairs)
        for current, original in reg_pairs:
            reg_value, grads = loss_reg_grad(current, original)
            value += scale * reg_value
            for emb, g in zip(current, grads):
                bundle._add(emb.id, scale * g)
    return value, bundle
